//! Knapsack instance generation, dataset serialization, and conversion into
//! the generic inequality-constrained form.
//!
//! Datasets are line-delimited JSON. Weights, values, and the capacity are
//! stored as decimal strings (Rust's shortest round-trip formatting), so
//! integer instances survive the file format without float drift.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Real,
    Integer,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Real => write!(f, "real"),
            Kind::Integer => write!(f, "integer"),
        }
    }
}

/// A single 0-1 knapsack instance.
///
/// The generator guarantees a binding capacity, 0 < W < sum(w); the dataset
/// loader re-validates it along with the other field invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRecord", into = "InstanceRecord")]
pub struct KnapsackInstance {
    pub id: String,
    pub kind: Kind,
    pub n: usize,
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
    pub capacity: f64,
    pub seed: u64,
}

/// Linear inequality constraint g(x) = bound - coeffs.x >= 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub bound: f64,
}

impl LinearConstraint {
    /// Exact bounds of g over {0,1}^n: g+ = b - sum(min(a_i, 0)),
    /// g- = b - sum(max(a_i, 0)).
    pub fn bounds(&self) -> (f64, f64) {
        let hi: f64 = self.coeffs.iter().map(|&a| a.min(0.0)).sum();
        let lo: f64 = self.coeffs.iter().map(|&a| a.max(0.0)).sum();
        (self.bound - lo, self.bound - hi)
    }
}

/// Generic form: minimize f(x) = objective.x + offset subject to
/// g_i(x) >= 0 for every constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedProblem {
    pub n: usize,
    pub objective: Vec<f64>,
    pub offset: f64,
    pub constraints: Vec<LinearConstraint>,
}

impl ConstrainedProblem {
    /// Validates the representation invariants: f <= 0 on all of {0,1}^n and
    /// a non-empty constraint list.
    pub fn validate(&self) -> Result<()> {
        if self.constraints.is_empty() {
            return Err(Error::InvariantViolation("empty constraint list".into()));
        }
        let max_f: f64 = self.offset + self.objective.iter().map(|&c| c.max(0.0)).sum::<f64>();
        if max_f > 0.0 {
            return Err(Error::InvariantViolation(format!(
                "objective not non-positive: max f = {max_f}"
            )));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != self.n {
                return Err(Error::InvariantViolation(format!(
                    "constraint {i} has {} coefficients for {} variables",
                    c.coeffs.len(),
                    self.n
                )));
            }
        }
        if self.objective.len() != self.n {
            return Err(Error::InvariantViolation(format!(
                "objective has {} coefficients for {} variables",
                self.objective.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// True when every coefficient and bound is integer-valued.
    pub fn is_integer(&self) -> bool {
        let int = |x: f64| x.fract() == 0.0;
        self.objective.iter().all(|&c| int(c))
            && int(self.offset)
            && self
                .constraints
                .iter()
                .all(|c| int(c.bound) && c.coeffs.iter().all(|&a| int(a)))
    }
}

/// Draws a real-valued instance: w_i, v_i uniform on (0,1) and the capacity
/// uniform on (0.2, 0.8) of the total weight, so the constraint always binds.
///
/// Draw order is fixed: w_0..w_{n-1}, v_0..v_{n-1}, then the capacity
/// fraction. Together with the documented generator in [`crate::rng`], this
/// makes instances reproducible from (n, seed) alone.
pub fn generate_real(n: usize, seed: u64) -> KnapsackInstance {
    assert!(n >= 1, "instance needs at least one item");
    let mut rng = SplitMix64::new(seed);
    let weights: Vec<f64> = (0..n).map(|_| rng.next_open01()).collect();
    let values: Vec<f64> = (0..n).map(|_| rng.next_open01()).collect();
    let total: f64 = weights.iter().sum();
    let capacity = (0.2 + 0.6 * rng.next_open01()) * total;
    KnapsackInstance {
        id: format!("ks-real-n{n:02}-{seed:016x}"),
        kind: Kind::Real,
        n,
        weights,
        values,
        capacity,
        seed,
    }
}

/// Scales a real-valued instance to integers: coefficients are multiplied by
/// 10n/W and rounded half away from zero (clamped to at least 1), and the
/// capacity becomes exactly 10n. Values get the same factor as weights so the
/// weight/value correlation is preserved.
pub fn to_integer(inst: &KnapsackInstance) -> KnapsackInstance {
    assert_eq!(inst.kind, Kind::Real, "to_integer expects a real instance");
    let factor = 10.0 * inst.n as f64 / inst.capacity;
    let scale = |x: f64| (x * factor).round().max(1.0);
    KnapsackInstance {
        id: format!("ks-int-n{n:02}-{seed:016x}", n = inst.n, seed = inst.seed),
        kind: Kind::Integer,
        n: inst.n,
        weights: inst.weights.iter().map(|&w| scale(w)).collect(),
        values: inst.values.iter().map(|&v| scale(v)).collect(),
        capacity: 10.0 * inst.n as f64,
        seed: inst.seed,
    }
}

/// Maps a knapsack instance onto the generic constrained form:
/// f(x) = -v.x and g(x) = W - w.x >= 0.
pub fn to_problem(inst: &KnapsackInstance) -> ConstrainedProblem {
    ConstrainedProblem {
        n: inst.n,
        objective: inst.values.iter().map(|&v| -v).collect(),
        offset: 0.0,
        constraints: vec![LinearConstraint {
            coeffs: inst.weights.clone(),
            bound: inst.capacity,
        }],
    }
}

/// Writes instances as one JSON object per line.
pub fn save_dataset(path: &Path, instances: &[KnapsackInstance]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for inst in instances {
        let line = serde_json::to_string(inst)
            .map_err(|e| Error::InvalidInput(format!("serialize {}: {e}", inst.id)))?;
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a line-delimited dataset, validating every instance. Errors carry
/// the 1-based line number.
pub fn load_dataset(path: &Path) -> Result<Vec<KnapsackInstance>> {
    let reader = BufReader::new(File::open(path)?);
    let mut instances = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let inst: KnapsackInstance = serde_json::from_str(&line).map_err(|e| Error::Dataset {
            line: idx + 1,
            message: e.to_string(),
        })?;
        instances.push(inst);
    }
    Ok(instances)
}

// Wire format: rationals as decimal strings, everything else native JSON.
#[derive(Serialize, Deserialize)]
struct InstanceRecord {
    id: String,
    kind: Kind,
    n: usize,
    weights: Vec<String>,
    values: Vec<String>,
    capacity: String,
    seed: u64,
}

impl From<KnapsackInstance> for InstanceRecord {
    fn from(inst: KnapsackInstance) -> Self {
        InstanceRecord {
            id: inst.id,
            kind: inst.kind,
            n: inst.n,
            weights: inst.weights.iter().map(|w| w.to_string()).collect(),
            values: inst.values.iter().map(|v| v.to_string()).collect(),
            capacity: inst.capacity.to_string(),
            seed: inst.seed,
        }
    }
}

impl TryFrom<InstanceRecord> for KnapsackInstance {
    type Error = String;

    fn try_from(rec: InstanceRecord) -> std::result::Result<Self, String> {
        let parse = |s: &str, what: &str| -> std::result::Result<f64, String> {
            s.parse::<f64>().map_err(|_| format!("bad decimal for {what}: {s:?}"))
        };
        let weights = rec
            .weights
            .iter()
            .map(|s| parse(s, "weight"))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let values = rec
            .values
            .iter()
            .map(|s| parse(s, "value"))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let capacity = parse(&rec.capacity, "capacity")?;

        if rec.n < 1 {
            return Err("instance has no items".into());
        }
        if weights.len() != rec.n || values.len() != rec.n {
            return Err(format!(
                "field lengths ({}, {}) do not match n = {}",
                weights.len(),
                values.len(),
                rec.n
            ));
        }
        let bad = |x: &f64| !x.is_finite() || *x < 0.0;
        if weights.iter().any(bad) || values.iter().any(bad) {
            return Err("negative or non-finite weight/value".into());
        }
        let total: f64 = weights.iter().sum();
        if !capacity.is_finite() || capacity <= 0.0 {
            return Err("non-positive capacity".into());
        }
        if capacity >= total {
            return Err("non-binding constraint: capacity >= total weight".into());
        }
        if rec.kind == Kind::Integer {
            let int = |x: f64| x.fract() == 0.0;
            if !weights.iter().all(|&w| int(w))
                || !values.iter().all(|&v| int(v))
                || !int(capacity)
            {
                return Err("non-integer entries in integer instance".into());
            }
        }
        Ok(KnapsackInstance {
            id: rec.id,
            kind: rec.kind,
            n: rec.n,
            weights,
            values,
            capacity,
            seed: rec.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_item_never_fits() {
        for seed in 0..32 {
            let inst = generate_real(1, seed);
            let w = inst.weights[0];
            assert!(inst.capacity > 0.2 * w && inst.capacity < 0.8 * w);
            // feasible set is exactly the empty selection
            assert!(inst.capacity < w);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_real(8, 42);
        let b = generate_real(8, 42);
        assert_eq!(a, b);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn capacity_ratio_in_open_interval() {
        for seed in 0..200 {
            let inst = generate_real(8, seed);
            let ratio = inst.capacity / inst.weights.iter().sum::<f64>();
            assert!(ratio > 0.2 && ratio < 0.8, "ratio {ratio}");
        }
    }

    #[test]
    fn integer_conversion_formula() {
        let inst = KnapsackInstance {
            id: "fixture".into(),
            kind: Kind::Real,
            n: 10,
            weights: vec![0.5; 10],
            values: vec![0.25; 10],
            capacity: 2.5,
            seed: 0,
        };
        let int = to_integer(&inst);
        // round(10 * 0.5 * 10 / 2.5) = 20 for every weight, capacity 10n
        assert!(int.weights.iter().all(|&w| w == 20.0));
        assert!(int.values.iter().all(|&v| v == 10.0));
        assert_eq!(int.capacity, 100.0);
        assert_eq!(int.kind, Kind::Integer);
    }

    #[test]
    fn integer_conversion_caps_at_ten_n_and_clamps() {
        for seed in 0..50 {
            let real = generate_real(6, seed);
            let int = to_integer(&real);
            assert_eq!(int.capacity, 60.0);
            assert!(int.weights.iter().all(|&w| w >= 1.0 && w.fract() == 0.0));
            assert!(int.values.iter().all(|&v| v >= 1.0 && v.fract() == 0.0));
        }
        // a value small enough to round to zero is clamped to 1
        let tiny = KnapsackInstance {
            id: "tiny".into(),
            kind: Kind::Real,
            n: 2,
            weights: vec![0.9, 0.9],
            values: vec![1e-9, 0.5],
            capacity: 0.9,
            seed: 0,
        };
        let int = to_integer(&tiny);
        assert_eq!(int.values[0], 1.0);
    }

    #[test]
    fn problem_mapping() {
        let inst = KnapsackInstance {
            id: "map".into(),
            kind: Kind::Integer,
            n: 2,
            weights: vec![1.0, 2.0],
            values: vec![1.0, 2.0],
            capacity: 2.0,
            seed: 0,
        };
        let prob = to_problem(&inst);
        assert_eq!(prob.objective, vec![-1.0, -2.0]);
        assert_eq!(prob.offset, 0.0);
        assert_eq!(prob.constraints.len(), 1);
        assert_eq!(prob.constraints[0].bound, 2.0);
        prob.validate().unwrap();
        // empty selection is always feasible: g(0) = W > 0
        assert!(prob.constraints[0].bound > 0.0);
        assert!(prob.is_integer());
    }

    #[test]
    fn constraint_bounds_are_exact() {
        let c = LinearConstraint {
            coeffs: vec![3.0, 4.0, 5.0],
            bound: 10.0,
        };
        let (lo, hi) = c.bounds();
        assert_eq!(lo, 10.0 - 12.0);
        assert_eq!(hi, 10.0);
    }

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.jsonl");
        let mut instances = Vec::new();
        for seed in 0..64 {
            instances.push(generate_real(6, seed));
            instances.push(to_integer(&generate_real(6, seed | 0x100)));
        }
        save_dataset(&path, &instances).unwrap();
        let loaded = load_dataset(&path).unwrap();
        assert_eq!(instances, loaded);
    }

    #[test]
    fn loader_rejects_non_binding_capacity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(
            &path,
            r#"{"id":"x","kind":"integer","n":2,"weights":["1","2"],"values":["1","1"],"capacity":"5","seed":0}"#,
        )
        .unwrap();
        let err = load_dataset(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 1"), "{msg}");
        assert!(msg.contains("non-binding constraint"), "{msg}");
    }

    #[test]
    fn loader_reports_line_numbers_for_parse_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        let good = serde_json::to_string(&generate_real(3, 1)).unwrap();
        std::fs::write(&path, format!("{good}\nnot json\n")).unwrap();
        let err = load_dataset(&path).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn empty_file_loads_empty_list() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        std::fs::write(&path, "").unwrap();
        assert!(load_dataset(&path).unwrap().is_empty());
    }
}
