//! Aggregation of record logs into summary and plot-data CSV files.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use ifqaoa_core::metrics::tts_star;
use ifqaoa_core::{Error, Result, RunRecord};

#[derive(Args)]
pub struct ReportArgs {
    /// Record log produced by `run` or `bench`.
    #[arg(long)]
    pub records: PathBuf,
    /// Output directory for summary.csv and plot files.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn execute(args: ReportArgs) -> Result<i32> {
    let records = load_records(&args.records)?;
    if records.is_empty() {
        return Err(Error::InvalidInput("record log is empty".into()));
    }
    std::fs::create_dir_all(&args.out)?;
    write_reports(&records, &args.out)?;
    eprintln!("aggregated {} records into {}", records.len(), args.out.display());
    Ok(0)
}

pub fn load_records(path: &Path) -> Result<Vec<RunRecord>> {
    let reader = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RunRecord = serde_json::from_str(&line).map_err(|e| Error::Dataset {
            line: idx + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Group key for aggregation: everything but the instance.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroupKey {
    pub n: usize,
    pub method: String,
    pub qpe_bits: Option<u32>,
    pub p: usize,
}

/// Quantiles with linear interpolation between order statistics; infinite
/// entries sort to the top and dominate any interpolation they touch.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    if sorted[lo].is_infinite() {
        return sorted[lo];
    }
    if sorted[hi].is_infinite() {
        return if frac == 0.0 { sorted[lo] } else { f64::INFINITY };
    }
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

fn sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

fn fmt(value: f64) -> String {
    if value.is_infinite() {
        "inf".into()
    } else {
        format!("{value}")
    }
}

pub fn write_reports(records: &[RunRecord], out: &Path) -> Result<()> {
    let mut groups: BTreeMap<GroupKey, Vec<&RunRecord>> = BTreeMap::new();
    for record in records {
        groups
            .entry(GroupKey {
                n: record.n,
                method: record.method.to_string(),
                qpe_bits: record.qpe_bits,
                p: record.p,
            })
            .or_default()
            .push(record);
    }

    let mut summary = open(out.join("summary.csv"))?;
    writeln!(
        summary,
        "n,method,qpe_bits,p,count,raar_p25,raar_median,raar_p75,\
         tts_p25,tts_median,tts_p75,p_star_median,q_total_median"
    )?;
    let mut raar_plot = open(out.join("raar_vs_p.csv"))?;
    writeln!(raar_plot, "n,method,qpe_bits,p,raar_p25,raar_median,raar_p75")?;
    let mut tts_plot = open(out.join("tts_vs_p.csv"))?;
    writeln!(tts_plot, "n,method,qpe_bits,p,tts_p25,tts_median,tts_p75")?;
    let mut q_plot = open(out.join("qtotal_vs_p.csv"))?;
    writeln!(q_plot, "n,method,qpe_bits,p,q_total_p25,q_total_median,q_total_p75")?;

    for (key, group) in &groups {
        let raar = sorted(group.iter().map(|r| r.raar));
        let tts = sorted(group.iter().map(|r| r.tts));
        let p_star = sorted(group.iter().map(|r| r.p_star));
        let q_total = sorted(group.iter().map(|r| r.q_total));
        let bits = key.qpe_bits.map_or(String::new(), |m| m.to_string());
        writeln!(
            summary,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            key.n,
            key.method,
            bits,
            key.p,
            group.len(),
            fmt(quantile(&raar, 0.25)),
            fmt(quantile(&raar, 0.5)),
            fmt(quantile(&raar, 0.75)),
            fmt(quantile(&tts, 0.25)),
            fmt(quantile(&tts, 0.5)),
            fmt(quantile(&tts, 0.75)),
            fmt(quantile(&p_star, 0.5)),
            fmt(quantile(&q_total, 0.5)),
        )?;
        writeln!(
            raar_plot,
            "{},{},{},{},{},{},{}",
            key.n,
            key.method,
            bits,
            key.p,
            fmt(quantile(&raar, 0.25)),
            fmt(quantile(&raar, 0.5)),
            fmt(quantile(&raar, 0.75)),
        )?;
        writeln!(
            tts_plot,
            "{},{},{},{},{},{},{}",
            key.n,
            key.method,
            bits,
            key.p,
            fmt(quantile(&tts, 0.25)),
            fmt(quantile(&tts, 0.5)),
            fmt(quantile(&tts, 0.75)),
        )?;
        writeln!(
            q_plot,
            "{},{},{},{},{},{},{}",
            key.n,
            key.method,
            bits,
            key.p,
            fmt(quantile(&q_total, 0.25)),
            fmt(quantile(&q_total, 0.5)),
            fmt(quantile(&q_total, 0.75)),
        )?;
    }

    // optimal time-to-solution per instance, then quantiles per (n, method, bits)
    type InstanceKey = (usize, String, Option<u32>, String);
    let mut per_instance: BTreeMap<InstanceKey, Vec<(usize, f64)>> = BTreeMap::new();
    for record in records {
        per_instance
            .entry((
                record.n,
                record.method.to_string(),
                record.qpe_bits,
                record.id.clone(),
            ))
            .or_default()
            .push((record.p, record.tts));
    }
    let mut star_groups: BTreeMap<(usize, String, Option<u32>), Vec<f64>> = BTreeMap::new();
    for ((n, method, bits, _), depth_tts) in &per_instance {
        if let Some((_, best)) = tts_star(depth_tts) {
            star_groups
                .entry((*n, method.clone(), *bits))
                .or_default()
                .push(best);
        }
    }
    let mut star_plot = open(out.join("tts_star_vs_n.csv"))?;
    writeln!(
        star_plot,
        "n,method,qpe_bits,count,tts_star_p25,tts_star_median,tts_star_p75"
    )?;
    for ((n, method, bits), mut values) in star_groups {
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        writeln!(
            star_plot,
            "{},{},{},{},{},{},{}",
            n,
            method,
            bits.map_or(String::new(), |m| m.to_string()),
            values.len(),
            fmt(quantile(&values, 0.25)),
            fmt(quantile(&values, 0.5)),
            fmt(quantile(&values, 0.75)),
        )?;
    }

    // flattened per-record export
    let mut flat = open(out.join("records.csv"))?;
    writeln!(flat, "{}", RunRecord::CSV_HEADER)?;
    for record in records {
        writeln!(flat, "{}", record.to_csv_row())?;
    }
    Ok(())
}

fn open(path: PathBuf) -> Result<std::io::BufWriter<std::fs::File>> {
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}
