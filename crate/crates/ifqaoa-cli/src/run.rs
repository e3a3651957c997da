//! `ifqaoa run`: the depth-sequential protocol for a single instance,
//! streaming one record per depth as it completes.

use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use ifqaoa_core::engine::QaoaParams;
use ifqaoa_core::instances::load_dataset;
use ifqaoa_core::optimize::{optimize_sequential_from, DepthSchedule};
use ifqaoa_core::protocol::{prepare, RunConfig};
use ifqaoa_core::theta::DEFAULT_SUPERSAMPLE;
use ifqaoa_core::{Error, Method, Result};

#[derive(Args)]
pub struct RunArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Instance id within the dataset.
    #[arg(long)]
    pub id: String,
    #[arg(long)]
    pub method: Method,
    /// Depth ladder, strictly increasing.
    #[arg(long, value_delimiter = ',', default_values_t = DepthSchedule::default().depths)]
    pub depths: Vec<usize>,
    /// QPE register size (required for if-approx).
    #[arg(long = "qpe-bits")]
    pub qpe_bits: Option<u32>,
    /// Sign-function offset for if-approx; use 0 for integer instances.
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    #[arg(long = "max-iters", default_value_t = 100)]
    pub max_iters: usize,
    /// Penalty coefficient override (auto-tuned when absent).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Record output; "-" or absent streams to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional per-iteration optimizer trace (CSV).
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

pub fn execute(args: RunArgs) -> Result<i32> {
    let dataset = load_dataset(&args.dataset)?;
    let instance = dataset
        .iter()
        .find(|inst| inst.id == args.id)
        .ok_or_else(|| Error::InvalidInput(format!("no instance {:?} in dataset", args.id)))?;

    let mut cfg = RunConfig::new(args.method);
    cfg.qpe_bits = args.qpe_bits;
    cfg.epsilon = args.epsilon;
    cfg.supersample = DEFAULT_SUPERSAMPLE;
    cfg.lambda = args.lambda;
    cfg.schedule = DepthSchedule {
        depths: args.depths.clone(),
        max_iters: args.max_iters,
        ..DepthSchedule::default()
    };
    cfg.schedule.validate()?;

    let prepared = prepare(instance, &cfg)?;
    let setup = prepared.setup();

    let mut sink: Box<dyn Write> = match &args.out {
        Some(path) if path.as_os_str() != "-" => {
            Box::new(std::io::BufWriter::new(std::fs::File::create(path)?))
        }
        _ => Box::new(std::io::stdout().lock()),
    };
    let mut trace_sink = match &args.trace {
        Some(path) => {
            let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
            writeln!(f, "depth,iteration,objective,grad_norm")?;
            Some(f)
        }
        None => None,
    };

    // one depth at a time so records stream out as soon as they exist; the
    // warm-start chain is identical to running the whole ladder at once
    let mut warm: Option<(usize, QaoaParams)> = None;
    for &depth in &args.depths {
        let single = DepthSchedule {
            depths: vec![depth],
            max_iters: args.max_iters,
            ..DepthSchedule::default()
        };
        let outcome = optimize_sequential_from(&setup, &single, warm.take())?;
        if let Some(trace_file) = trace_sink.as_mut() {
            for trace in &outcome.traces {
                for row in &trace.rows {
                    writeln!(
                        trace_file,
                        "{},{},{},{}",
                        trace.depth, row.iteration, row.value, row.grad_norm
                    )?;
                }
            }
        }
        if let Some(abort) = outcome.abort {
            sink.flush()?;
            eprintln!(
                "aborted at depth {}: vanishing success probability {:.3e} in layer {}",
                abort.depth, abort.q, abort.layer
            );
            return Ok(4);
        }
        let record = outcome
            .records
            .into_iter()
            .next()
            .expect("one record per completed depth");
        writeln!(
            sink,
            "{}",
            serde_json::to_string(&record)
                .map_err(|e| Error::InvalidInput(format!("serialize record: {e}")))?
        )?;
        warm = Some((
            depth,
            QaoaParams::new(record.betas.clone(), record.gammas.clone())?,
        ));
    }
    sink.flush()?;
    Ok(0)
}
