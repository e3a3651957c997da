//! `ifqaoa gen`: paired real/integer dataset generation.

use std::path::PathBuf;

use clap::Args;
use ifqaoa_core::instances::{generate_real, save_dataset, to_integer};
use ifqaoa_core::rng::SplitMix64;
use ifqaoa_core::Result;

#[derive(Args)]
pub struct GenArgs {
    /// Item counts, e.g. 6,8,10.
    #[arg(long = "n-list", value_delimiter = ',', required = true)]
    pub n_list: Vec<usize>,
    /// Instances per item count.
    #[arg(long, default_value_t = 128)]
    pub count: usize,
    /// Master seed; per-instance seeds are drawn from it in a fixed order.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory for real.jsonl and integer.jsonl.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn execute(args: GenArgs) -> Result<i32> {
    std::fs::create_dir_all(&args.out)?;
    let mut master = SplitMix64::new(args.seed);
    let mut real = Vec::with_capacity(args.n_list.len() * args.count);
    let mut integer = Vec::with_capacity(real.capacity());
    for &n in &args.n_list {
        for _ in 0..args.count {
            let instance = generate_real(n, master.next_u64());
            integer.push(to_integer(&instance));
            real.push(instance);
        }
    }
    save_dataset(&args.out.join("real.jsonl"), &real)?;
    save_dataset(&args.out.join("integer.jsonl"), &integer)?;
    eprintln!(
        "wrote {} real and {} integer instances to {}",
        real.len(),
        integer.len(),
        args.out.display()
    );
    Ok(0)
}
