//! `ifqaoa theta`: CSV dump of the approximate sign function for plotting.

use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use ifqaoa_core::theta::{build_theta_table, DEFAULT_SUPERSAMPLE};
use ifqaoa_core::Result;

#[derive(Args)]
pub struct ThetaArgs {
    /// QPE register size M.
    #[arg(long = "qpe-bits")]
    pub qpe_bits: u32,
    /// Super-sampling factor (2^m grid points per unit).
    #[arg(long, default_value_t = DEFAULT_SUPERSAMPLE)]
    pub supersample: u32,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn execute(args: ThetaArgs) -> Result<i32> {
    let table = build_theta_table(args.qpe_bits, args.supersample)?;
    let mut out = std::io::BufWriter::new(std::fs::File::create(&args.out)?);
    writeln!(out, "g,theta")?;
    // two full periods so the register wraparound is visible in the plot
    let half = 1i64 << (args.qpe_bits - 1);
    let step = 1.0 / (1u64 << args.supersample) as f64;
    let points = (4 * half) << args.supersample;
    for i in 0..points {
        let g = -half as f64 + i as f64 * step;
        writeln!(out, "{g},{}", table.lookup(g))?;
    }
    out.flush()?;
    Ok(0)
}
