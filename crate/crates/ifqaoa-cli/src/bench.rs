//! `ifqaoa bench`: resumable sweep over instances x methods x register
//! sizes with a bounded worker pool and a single record writer.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use clap::Args;
use serde::{Deserialize, Serialize};

use ifqaoa_core::engine::QaoaParams;
use ifqaoa_core::instances::{load_dataset, KnapsackInstance};
use ifqaoa_core::optimize::{optimize_sequential_from, DepthSchedule};
use ifqaoa_core::protocol::{prepare, RunConfig};
use ifqaoa_core::{Error, Method, Result, RunRecord};

use crate::report;

#[derive(Args)]
pub struct BenchArgs {
    /// JSON config file; command-line flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Methods to sweep, e.g. if-exact,virtual-penalty.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<Method>>,
    #[arg(long, value_delimiter = ',')]
    pub depths: Option<Vec<usize>>,
    /// Register sizes for if-approx, e.g. 4,8,12,16.
    #[arg(long = "qpe-bits", value_delimiter = ',')]
    pub qpe_bits: Option<Vec<u32>>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
}

/// Sweep configuration. The JSON file uses the same field names.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchConfig {
    pub dataset: PathBuf,
    pub methods: Vec<Method>,
    #[serde(default = "default_depths")]
    pub depths: Vec<usize>,
    #[serde(default)]
    pub qpe_bits: Vec<u32>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Reserved for stochastic extensions; the sweep itself is deterministic.
    #[serde(default)]
    pub seed: u64,
    pub out: PathBuf,
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

fn default_depths() -> Vec<usize> {
    DepthSchedule::default().depths
}

fn default_epsilon() -> f64 {
    0.5
}

fn default_max_iters() -> usize {
    100
}

impl BenchConfig {
    fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidInput("no methods selected".into()));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::InvalidInput(format!(
                "epsilon {} outside [0, 1)",
                self.epsilon
            )));
        }
        let wants_approx = self.methods.contains(&Method::IndicatorApprox);
        if wants_approx && self.qpe_bits.is_empty() {
            return Err(Error::InvalidInput(
                "if-approx selected but no --qpe-bits given".into(),
            ));
        }
        if !wants_approx && !self.qpe_bits.is_empty() {
            return Err(Error::InvalidInput(
                "--qpe-bits given but if-approx is not among the methods".into(),
            ));
        }
        DepthSchedule {
            depths: self.depths.clone(),
            max_iters: self.max_iters,
            ..DepthSchedule::default()
        }
        .validate()
    }
}

fn merge(args: BenchArgs) -> Result<BenchConfig> {
    let mut config: Option<BenchConfig> = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            Some(serde_json::from_str(&text).map_err(|e| {
                Error::InvalidInput(format!("config {}: {e}", path.display()))
            })?)
        }
        None => None,
    };
    fn take<T>(field: &mut Option<T>, name: &str) -> Result<T> {
        field.take().ok_or_else(|| {
            Error::InvalidInput(format!("--{name} required (flag or config file)"))
        })
    }
    let mut dataset = args.dataset;
    let mut methods = args.methods;
    let mut out = args.out;
    if let Some(cfg) = config.as_mut() {
        dataset = dataset.or(Some(std::mem::take(&mut cfg.dataset)));
        if methods.is_none() && !cfg.methods.is_empty() {
            methods = Some(cfg.methods.clone());
        }
        out = out.or(Some(std::mem::take(&mut cfg.out)));
    }
    let base = config.unwrap_or(BenchConfig {
        dataset: PathBuf::new(),
        methods: Vec::new(),
        depths: default_depths(),
        qpe_bits: Vec::new(),
        epsilon: default_epsilon(),
        seed: 0,
        out: PathBuf::new(),
        workers: 0,
        max_iters: default_max_iters(),
    });
    let merged = BenchConfig {
        dataset: take(&mut dataset, "dataset")?,
        methods: take(&mut methods, "methods")?,
        depths: args.depths.unwrap_or(base.depths),
        qpe_bits: args.qpe_bits.unwrap_or(base.qpe_bits),
        epsilon: args.epsilon.unwrap_or(base.epsilon),
        seed: args.seed.unwrap_or(base.seed),
        out: take(&mut out, "out")?,
        workers: args.workers.unwrap_or(base.workers),
        max_iters: args.max_iters.unwrap_or(base.max_iters),
    };
    merged.validate()?;
    Ok(merged)
}

#[derive(Debug, Clone)]
struct Job {
    instance: KnapsackInstance,
    method: Method,
    qpe_bits: Option<u32>,
    /// Deepest already-recorded depth and its parameters, from a previous
    /// interrupted sweep.
    warm: Option<(usize, QaoaParams)>,
}

enum Message {
    Record(RunRecord),
    JobFailed { id: String, method: Method, qpe_bits: Option<u32>, error: String },
    JobDone,
}

pub fn execute(args: BenchArgs) -> Result<i32> {
    let config = merge(args)?;
    std::fs::create_dir_all(&config.out)?;
    let instances = load_dataset(&config.dataset)?;
    if instances.is_empty() {
        return Err(Error::InvalidInput("dataset is empty".into()));
    }

    let records_path = config.out.join("records.jsonl");
    let done = load_done(&records_path, &config.depths)?;

    // one job per (instance, method, register size), skipping completed ones
    let mut jobs = Vec::new();
    let mut skipped = 0usize;
    for instance in &instances {
        for &method in &config.methods {
            let bit_choices: Vec<Option<u32>> = if method == Method::IndicatorApprox {
                config.qpe_bits.iter().map(|&m| Some(m)).collect()
            } else {
                vec![None]
            };
            for qpe_bits in bit_choices {
                let key = (instance.id.clone(), method, qpe_bits);
                let warm = match done.get(&key) {
                    Some((depth, params)) => {
                        if *depth >= *config.depths.last().unwrap() {
                            skipped += 1;
                            continue;
                        }
                        Some((*depth, params.clone()))
                    }
                    None => None,
                };
                jobs.push(Job {
                    instance: instance.clone(),
                    method,
                    qpe_bits,
                    warm,
                });
            }
        }
    }
    eprintln!(
        "{} jobs to run, {} already complete, writing to {}",
        jobs.len(),
        skipped,
        config.out.display()
    );

    let workers = if config.workers == 0 {
        std::thread::available_parallelism().map_or(1, |v| v.get())
    } else {
        config.workers
    }
    .min(jobs.len().max(1));

    let mut record_file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&records_path)?;
    let mut failure_file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(config.out.join("failures.jsonl"))?;

    let next_job = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<Message>();
    let mut failures = 0usize;
    std::thread::scope(|scope| -> Result<()> {
        for _ in 0..workers {
            let tx = tx.clone();
            let jobs = &jobs;
            let next_job = &next_job;
            let config = &config;
            scope.spawn(move || loop {
                let idx = next_job.fetch_add(1, Ordering::Relaxed);
                if idx >= jobs.len() {
                    break;
                }
                run_job(&jobs[idx], config, &tx);
                let _ = tx.send(Message::JobDone);
            });
        }
        drop(tx);

        let mut finished = 0usize;
        while let Ok(message) = rx.recv() {
            match message {
                Message::Record(record) => {
                    let line = serde_json::to_string(&record)
                        .map_err(|e| Error::InvalidInput(format!("serialize record: {e}")))?;
                    writeln!(record_file, "{line}")?;
                    record_file.flush()?;
                }
                Message::JobFailed { id, method, qpe_bits, error } => {
                    failures += 1;
                    eprintln!("job failed: {id} {method}: {error}");
                    let note = serde_json::json!({
                        "id": id,
                        "method": method.as_str(),
                        "qpe_bits": qpe_bits,
                        "error": error,
                    });
                    writeln!(failure_file, "{note}")?;
                    failure_file.flush()?;
                }
                Message::JobDone => {
                    finished += 1;
                    if finished.is_multiple_of(16) || finished == jobs.len() {
                        eprintln!("progress: {finished}/{} jobs", jobs.len());
                    }
                }
            }
        }
        Ok(())
    })?;

    // rebuild the aggregated views from the full (old + new) record log
    let all_records = report::load_records(&records_path)?;
    if all_records.is_empty() {
        return Err(Error::InvalidInput(
            "sweep produced no records (all jobs failed)".into(),
        ));
    }
    report::write_reports(&all_records, &config.out)?;
    if failures > 0 {
        eprintln!("{failures} job(s) failed; see failures.jsonl");
    }
    Ok(0)
}

fn run_job(job: &Job, config: &BenchConfig, tx: &mpsc::Sender<Message>) {
    let mut cfg = RunConfig::new(job.method);
    cfg.qpe_bits = job.qpe_bits;
    cfg.epsilon = config.epsilon;
    cfg.schedule = DepthSchedule {
        depths: config.depths.clone(),
        max_iters: config.max_iters,
        ..DepthSchedule::default()
    };
    let prepared = match prepare(&job.instance, &cfg) {
        Ok(p) => p,
        Err(err) => {
            let _ = tx.send(Message::JobFailed {
                id: job.instance.id.clone(),
                method: job.method,
                qpe_bits: job.qpe_bits,
                error: err.to_string(),
            });
            return;
        }
    };
    let setup = prepared.setup();
    let mut warm = job.warm.clone();
    for &depth in &config.depths {
        if warm.as_ref().is_some_and(|(done, _)| depth <= *done) {
            continue;
        }
        let single = DepthSchedule {
            depths: vec![depth],
            max_iters: config.max_iters,
            ..DepthSchedule::default()
        };
        match optimize_sequential_from(&setup, &single, warm.take()) {
            Ok(outcome) => {
                if let Some(abort) = outcome.abort {
                    let _ = tx.send(Message::JobFailed {
                        id: job.instance.id.clone(),
                        method: job.method,
                        qpe_bits: job.qpe_bits,
                        error: format!(
                            "vanishing success probability {:.3e} at depth {} layer {}",
                            abort.q, abort.depth, abort.layer
                        ),
                    });
                    return;
                }
                let record = outcome.records.into_iter().next().expect("one record");
                let params =
                    QaoaParams::new(record.betas.clone(), record.gammas.clone()).expect("params");
                warm = Some((depth, params));
                let _ = tx.send(Message::Record(record));
            }
            Err(err) => {
                let _ = tx.send(Message::JobFailed {
                    id: job.instance.id.clone(),
                    method: job.method,
                    qpe_bits: job.qpe_bits,
                    error: err.to_string(),
                });
                return;
            }
        }
    }
}

type DoneMap = BTreeMap<(String, Method, Option<u32>), (usize, QaoaParams)>;

/// Scans an existing record log for the deepest completed depth per
/// (instance, method, register size), so an interrupted sweep resumes where
/// it stopped.
fn load_done(path: &Path, depths: &[usize]) -> Result<DoneMap> {
    let mut done: DoneMap = BTreeMap::new();
    if !path.exists() {
        return Ok(done);
    }
    let records = report::load_records(path)?;
    for record in records {
        if !depths.contains(&record.p) {
            continue;
        }
        let key = (record.id.clone(), record.method, record.qpe_bits);
        let params = QaoaParams::new(record.betas.clone(), record.gammas.clone())?;
        match done.get(&key) {
            Some((depth, _)) if *depth >= record.p => {}
            _ => {
                done.insert(key, (record.p, params));
            }
        }
    }
    Ok(done)
}
