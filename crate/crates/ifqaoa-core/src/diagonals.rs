//! Brute-forced diagonal tables over the computational basis.
//!
//! Every quantity the simulator needs per basis state is precomputed here:
//! the objective f, the constraint values g_i, the indicator (training) cost,
//! the phase diagonal the circuit exponentiates, the feasibility mask, and
//! the normalization scale. Penalty variants and the slack-variable extension
//! build their phase diagonals from the same cached arrays.
//!
//! Bit convention: basis index bit i is problem variable i. The slack
//! extension places slack bits above the problem bits, so marginalizing the
//! slack register is a contiguous reduction.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::instances::ConstrainedProblem;

/// Hard cap on simulated qubits (1 GiB of amplitudes).
pub const MAX_QUBITS: usize = 26;

/// Lower clamp for the auto-tuned penalty coefficient.
pub const LAMBDA_CLAMP: f64 = 1e-9;

/// Cost-function variants the engine can exponentiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "if-exact")]
    IndicatorExact,
    #[serde(rename = "if-approx")]
    IndicatorApprox,
    #[serde(rename = "virtual-penalty")]
    VirtualPenalty,
    #[serde(rename = "slack-penalty")]
    SlackPenalty,
    #[serde(rename = "constant-penalty")]
    ConstantPenalty,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::IndicatorExact,
        Method::IndicatorApprox,
        Method::VirtualPenalty,
        Method::SlackPenalty,
        Method::ConstantPenalty,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::IndicatorExact => "if-exact",
            Method::IndicatorApprox => "if-approx",
            Method::VirtualPenalty => "virtual-penalty",
            Method::SlackPenalty => "slack-penalty",
            Method::ConstantPenalty => "constant-penalty",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown method {s:?}")))
    }
}

/// Logarithmic slack encoding of the interval [0, W].
///
/// Coefficients are 2^j for the first M-1 slots and W - 2^(M-1) + 1 for the
/// last, with M = ceil(log2 W) slack bits (M = 1 when W = 1). Subset sums
/// cover every integer in [0, W], except that for W an exact power of two
/// the single value 2^(M-1) is unreachable; generated instances always use
/// W = 10n, which is never a power of two.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlackEncoding {
    pub m: u32,
    pub coeffs: Vec<u64>,
}

impl SlackEncoding {
    /// Subset sum s(y) for a slack assignment y (bit j selects coeffs[j]).
    pub fn slack_value(&self, y: u64) -> u64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(j, _)| (y >> j) & 1 == 1)
            .map(|(_, &a)| a)
            .sum()
    }
}

/// ceil(log2 x) with the convention ceil(log2 0) = ceil(log2 1) = 0.
pub fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

/// Evaluates offset + coeffs.x for every basis index x in O(2^n) additions
/// via the doubling recursion: the upper half of the table at each step is
/// the lower half shifted by the next coefficient.
pub fn brute_force_linear(coeffs: &[f64], offset: f64) -> Result<Vec<f64>> {
    let n = coeffs.len();
    if n > MAX_QUBITS {
        return Err(Error::SizeOverflow {
            requested: n,
            max: MAX_QUBITS,
        });
    }
    let mut out = Vec::with_capacity(1usize << n);
    out.push(offset);
    for &c in coeffs {
        let len = out.len();
        for i in 0..len {
            let v = out[i] + c;
            out.push(v);
        }
    }
    Ok(out)
}

/// Feasibility per basis state: all constraints satisfied, with g = 0
/// counting as feasible.
pub fn feasibility_mask(g_list: &[Vec<f64>]) -> Vec<bool> {
    let len = g_list.first().map_or(0, |g| g.len());
    (0..len).map(|x| g_list.iter().all(|g| g[x] >= 0.0)).collect()
}

/// Indicator cost f(x) * prod_i Theta[g_i(x) - eps], the training objective
/// shared by every method. eps = 0 is the exact integer mode.
pub fn indicator_cost(f: &[f64], g_list: &[Vec<f64>], epsilon: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidInput(format!(
            "epsilon {epsilon} outside [0, 1)"
        )));
    }
    for g in g_list {
        check_len(f, g, "indicator_cost")?;
    }
    Ok((0..f.len())
        .map(|x| {
            if g_list.iter().all(|g| g[x] - epsilon >= 0.0) {
                f[x]
            } else {
                0.0
            }
        })
        .collect())
}

/// Quadratic penalty applied directly in the diagonal, without slack bits:
/// f(x) + lambda * g(x)^2 on violated states.
pub fn virtual_penalty_cost(f: &[f64], g: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "penalty coefficient must be positive, got {lambda}"
        )));
    }
    check_len(f, g, "virtual_penalty_cost")?;
    Ok(f.iter()
        .zip(g)
        .map(|(&fx, &gx)| if gx < 0.0 { fx + lambda * gx * gx } else { fx })
        .collect())
}

/// Flat penalty per violated constraint: f(x) + sum_i lambda_i [g_i(x) < 0].
pub fn constant_penalty_cost(f: &[f64], g_list: &[Vec<f64>], lambdas: &[f64]) -> Result<Vec<f64>> {
    if g_list.len() != lambdas.len() {
        return Err(Error::LengthMismatch {
            left: g_list.len(),
            right: lambdas.len(),
            context: "constant_penalty_cost",
        });
    }
    if let Some(&bad) = lambdas.iter().find(|&&l| !l.is_finite() || l <= 0.0) {
        return Err(Error::InvalidInput(format!(
            "penalty coefficient must be positive, got {bad}"
        )));
    }
    for g in g_list {
        check_len(f, g, "constant_penalty_cost")?;
    }
    Ok((0..f.len())
        .map(|x| {
            let penalty: f64 = g_list
                .iter()
                .zip(lambdas)
                .filter(|(g, _)| g[x] < 0.0)
                .map(|(_, &l)| l)
                .sum();
            f[x] + penalty
        })
        .collect())
}

/// Builds the logarithmic slack encoding for an integer capacity W >= 1.
pub fn slack_encoding(w: u64) -> Result<SlackEncoding> {
    if w == 0 {
        return Err(Error::InvalidInput("slack encoding needs W >= 1".into()));
    }
    let m = if w == 1 { 1 } else { ceil_log2(w) };
    let mut coeffs: Vec<u64> = (0..m - 1).map(|j| 1u64 << j).collect();
    coeffs.push(w - (1u64 << (m - 1)) + 1);
    Ok(SlackEncoding { m, coeffs })
}

/// Result of the penalty auto-tuner. `clamped` flags the degenerate case
/// where no positive coefficient is needed and the lower clamp was returned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutoPenalty {
    pub lambda: f64,
    pub clamped: bool,
}

/// Smallest quadratic-penalty coefficient that lifts the best infeasible
/// state to the level of the second-best feasible one:
/// lambda = max over infeasible x of (f2 - f(x)) / g(x)^2, clamped below.
pub fn auto_penalty(f: &[f64], g: &[f64], feasible: &[bool]) -> Result<AutoPenalty> {
    check_len(f, g, "auto_penalty")?;
    if feasible.len() != f.len() {
        return Err(Error::LengthMismatch {
            left: feasible.len(),
            right: f.len(),
            context: "auto_penalty",
        });
    }
    let f2 = second_best_feasible(f, feasible)?;
    let mut best: Option<f64> = None;
    for x in 0..f.len() {
        if feasible[x] {
            continue;
        }
        if g[x] == 0.0 {
            return Err(Error::InvalidInput(
                "infeasible state with zero constraint slack".into(),
            ));
        }
        let cand = (f2 - f[x]) / (g[x] * g[x]);
        best = Some(best.map_or(cand, |b: f64| b.max(cand)));
    }
    match best {
        None => Ok(AutoPenalty {
            lambda: LAMBDA_CLAMP,
            clamped: true,
        }),
        Some(raw) if raw <= LAMBDA_CLAMP => Ok(AutoPenalty {
            lambda: LAMBDA_CLAMP,
            clamped: true,
        }),
        Some(raw) => Ok(AutoPenalty {
            lambda: raw,
            clamped: false,
        }),
    }
}

/// Constant-penalty analogue of [`auto_penalty`]: the flat offset that lifts
/// the best infeasible state to the second-best feasible level.
pub fn auto_constant_penalty(f: &[f64], feasible: &[bool]) -> Result<AutoPenalty> {
    if feasible.len() != f.len() {
        return Err(Error::LengthMismatch {
            left: feasible.len(),
            right: f.len(),
            context: "auto_constant_penalty",
        });
    }
    let f2 = second_best_feasible(f, feasible)?;
    let best_infeasible = f
        .iter()
        .zip(feasible)
        .filter(|(_, &ok)| !ok)
        .map(|(&fx, _)| fx)
        .fold(None, |acc: Option<f64>, fx| {
            Some(acc.map_or(fx, |a| a.min(fx)))
        });
    match best_infeasible {
        None => Ok(AutoPenalty {
            lambda: LAMBDA_CLAMP,
            clamped: true,
        }),
        Some(fmin) => {
            let raw = f2 - fmin;
            if raw <= LAMBDA_CLAMP {
                Ok(AutoPenalty {
                    lambda: LAMBDA_CLAMP,
                    clamped: true,
                })
            } else {
                Ok(AutoPenalty {
                    lambda: raw,
                    clamped: false,
                })
            }
        }
    }
}

fn second_best_feasible(f: &[f64], feasible: &[bool]) -> Result<f64> {
    let mut best: Option<(usize, f64)> = None;
    for x in 0..f.len() {
        if !feasible[x] {
            continue;
        }
        if best.is_none_or(|(_, b)| f[x] < b) {
            best = Some((x, f[x]));
        }
    }
    let (x_star, _) = best.ok_or_else(|| {
        Error::InvalidInput("auto penalty needs at least two feasible states".into())
    })?;
    let mut second: Option<f64> = None;
    for x in 0..f.len() {
        if !feasible[x] || x == x_star {
            continue;
        }
        second = Some(second.map_or(f[x], |s: f64| s.min(f[x])));
    }
    second.ok_or_else(|| {
        Error::InvalidInput("auto penalty needs at least two feasible states".into())
    })
}

/// Scale factor bringing a table's range to exactly 2n.
pub fn normalization_scale(values: &[f64], n: usize) -> Result<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        if !v.is_finite() {
            return Err(Error::Degenerate("non-finite table entry".into()));
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi <= lo {
        return Err(Error::Degenerate(
            "degenerate objective: constant diagonal".into(),
        ));
    }
    Ok(2.0 * n as f64 / (hi - lo))
}

/// Rescales a phase diagonal so max - min = 2n; returns the scaled table and
/// the applied factor.
pub fn normalize(phase_cost: &[f64], n: usize) -> Result<(Vec<f64>, f64)> {
    let scale = normalization_scale(phase_cost, n)?;
    Ok((phase_cost.iter().map(|&v| v * scale).collect(), scale))
}

/// QPE register size resolving an integer-valued constraint with bounds
/// [g_min, g_max] in two's complement:
/// M = max(ceil(log2 |g-|), ceil(log2 (g+ + 1))) + 1.
pub fn qpe_register_size(g_min: i64, g_max: i64) -> u32 {
    let neg = if g_min < 0 {
        ceil_log2(g_min.unsigned_abs())
    } else {
        0
    };
    let pos = if g_max >= 0 {
        ceil_log2(g_max as u64 + 1)
    } else {
        0
    };
    neg.max(pos) + 1
}

/// Which diagonal a binary dump contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Phase,
    Train,
    Objective,
    Constraint(u32),
}

impl TableKind {
    fn code(self) -> u32 {
        match self {
            TableKind::Phase => 0,
            TableKind::Train => 1,
            TableKind::Objective => 2,
            TableKind::Constraint(i) => 3 + i,
        }
    }
}

const DUMP_MAGIC: &[u8; 8] = b"IFQTBL01";

/// Everything the simulator needs per basis state, fully materialized.
///
/// `phase_cost` and `train_cost` carry the normalization factor `scale`;
/// `f` and `g` stay in raw problem units (the sign-function argument and the
/// penalty tuner want unscaled constraint values).
#[derive(Debug, Clone)]
pub struct DiagonalTables {
    pub n_vars: usize,
    pub n_total: usize,
    pub method: Method,
    pub f: Vec<f64>,
    pub g: Vec<Vec<f64>>,
    pub g_int: Option<Vec<Vec<i64>>>,
    pub train_cost: Vec<f64>,
    pub phase_cost: Vec<f64>,
    pub feasible: Vec<bool>,
    pub scale: f64,
    pub lambda: Option<f64>,
    pub lambda_clamped: bool,
}

/// Construction knobs for [`DiagonalTables::build`].
#[derive(Debug, Clone)]
pub struct TableOptions {
    /// Penalty coefficient override; `None` auto-tunes per instance.
    pub lambda: Option<f64>,
    /// Register-size guardrail.
    pub max_qubits: usize,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self {
            lambda: None,
            max_qubits: MAX_QUBITS,
        }
    }
}

impl DiagonalTables {
    /// Brute-forces all diagonals for `problem` under the given method and
    /// normalizes the result.
    ///
    /// The scale is chosen so the exponentiated diagonal has range 2 * n_total
    /// (matching the mixer spectrum), except for the approximate indicator
    /// where the training cost sets the scale and the phase table holds the
    /// plain objective times that same factor: the projection factor applies
    /// the objective phase only on resolved-feasible branches, so the
    /// indicator must not be folded into the phase diagonal itself.
    pub fn build(
        problem: &ConstrainedProblem,
        method: Method,
        opts: &TableOptions,
    ) -> Result<Self> {
        problem.validate()?;
        let n = problem.n;
        if n > opts.max_qubits || n > MAX_QUBITS {
            return Err(Error::SizeOverflow {
                requested: n,
                max: opts.max_qubits.min(MAX_QUBITS),
            });
        }
        let f = brute_force_linear(&problem.objective, problem.offset)?;
        let g: Vec<Vec<f64>> = problem
            .constraints
            .iter()
            .map(|c| {
                let neg: Vec<f64> = c.coeffs.iter().map(|&a| -a).collect();
                brute_force_linear(&neg, c.bound)
            })
            .collect::<Result<_>>()?;
        let feasible = feasibility_mask(&g);
        let train_raw = indicator_cost(&f, &g, 0.0)?;
        let g_int = problem.is_integer().then(|| {
            g.iter()
                .map(|col| col.iter().map(|&v| v as i64).collect())
                .collect()
        });

        let single_constraint = |ctx: &str| -> Result<&Vec<f64>> {
            if g.len() == 1 {
                Ok(&g[0])
            } else {
                Err(Error::InvalidInput(format!(
                    "{ctx} supports exactly one constraint, problem has {}",
                    g.len()
                )))
            }
        };

        let mut tables = match method {
            Method::IndicatorExact => Self {
                n_vars: n,
                n_total: n,
                method,
                phase_cost: train_raw.clone(),
                train_cost: train_raw,
                feasible,
                f,
                g,
                g_int,
                scale: 1.0,
                lambda: None,
                lambda_clamped: false,
            },
            Method::IndicatorApprox => Self {
                n_vars: n,
                n_total: n,
                method,
                phase_cost: f.clone(),
                train_cost: train_raw,
                feasible,
                f,
                g,
                g_int,
                scale: 1.0,
                lambda: None,
                lambda_clamped: false,
            },
            Method::VirtualPenalty => {
                let gv = single_constraint("virtual-penalty")?;
                let (lambda, clamped) = match opts.lambda {
                    Some(l) => (l, false),
                    None => {
                        let auto = auto_penalty(&f, gv, &feasible)?;
                        (auto.lambda, auto.clamped)
                    }
                };
                let phase = virtual_penalty_cost(&f, gv, lambda)?;
                Self {
                    n_vars: n,
                    n_total: n,
                    method,
                    phase_cost: phase,
                    train_cost: train_raw,
                    feasible,
                    f,
                    g,
                    g_int,
                    scale: 1.0,
                    lambda: Some(lambda),
                    lambda_clamped: clamped,
                }
            }
            Method::ConstantPenalty => {
                let (lambda, clamped) = match opts.lambda {
                    Some(l) => (l, false),
                    None => {
                        let auto = auto_constant_penalty(&f, &feasible)?;
                        (auto.lambda, auto.clamped)
                    }
                };
                let lambdas = vec![lambda; g.len()];
                let phase = constant_penalty_cost(&f, &g, &lambdas)?;
                Self {
                    n_vars: n,
                    n_total: n,
                    method,
                    phase_cost: phase,
                    train_cost: train_raw,
                    feasible,
                    f,
                    g,
                    g_int,
                    scale: 1.0,
                    lambda: Some(lambda),
                    lambda_clamped: clamped,
                }
            }
            Method::SlackPenalty => {
                let gv = single_constraint("slack-penalty")?;
                if !problem.is_integer() {
                    return Err(Error::InvalidInput(
                        "slack-penalty needs an integer-valued problem".into(),
                    ));
                }
                let w = problem.constraints[0].bound;
                if w < 1.0 {
                    return Err(Error::InvalidInput(format!(
                        "slack-penalty needs integer capacity >= 1, got {w}"
                    )));
                }
                let enc = slack_encoding(w as u64)?;
                if n + enc.m as usize > opts.max_qubits {
                    return Err(Error::SizeOverflow {
                        requested: n + enc.m as usize,
                        max: opts.max_qubits,
                    });
                }
                let (lambda, clamped) = match opts.lambda {
                    Some(l) => (l, false),
                    None => {
                        let auto = auto_penalty(&f, gv, &feasible)?;
                        (auto.lambda, auto.clamped)
                    }
                };
                let mut t = slack_penalty_cost(&f, gv, &enc, lambda)?;
                t.g_int = g_int.map(|cols: Vec<Vec<i64>>| {
                    cols.into_iter()
                        .map(|col| tile(&col, 1 << enc.m))
                        .collect()
                });
                t.lambda_clamped = clamped;
                t
            }
        };

        let norm_source = match method {
            Method::IndicatorApprox => &tables.train_cost,
            _ => &tables.phase_cost,
        };
        let scale = normalization_scale(norm_source, tables.n_total)?;
        for v in tables.phase_cost.iter_mut() {
            *v *= scale;
        }
        for v in tables.train_cost.iter_mut() {
            *v *= scale;
        }
        tables.scale = scale;
        Ok(tables)
    }

    /// Slack bits of the register, zero for slack-free methods.
    pub fn slack_bits(&self) -> usize {
        self.n_total - self.n_vars
    }

    /// Writes one diagonal as little-endian f64s behind a 16-byte header
    /// {magic, n_total, kind}. Debug aid only.
    pub fn dump_table(&self, kind: TableKind, path: &Path) -> Result<()> {
        let values: &[f64] = match kind {
            TableKind::Phase => &self.phase_cost,
            TableKind::Train => &self.train_cost,
            TableKind::Objective => &self.f,
            TableKind::Constraint(i) => self.g.get(i as usize).ok_or_else(|| {
                Error::InvalidInput(format!("no constraint {i} in tables"))
            })?,
        };
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        out.write_all(DUMP_MAGIC)?;
        out.write_all(&(self.n_total as u32).to_le_bytes())?;
        out.write_all(&kind.code().to_le_bytes())?;
        for &v in values {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Reads a table dump back; returns (n_total, kind code, values).
pub fn read_table_dump(path: &Path) -> Result<(u32, u32, Vec<f64>)> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    file.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(Error::InvalidInput("bad table dump magic".into()));
    }
    let mut word = [0u8; 4];
    file.read_exact(&mut word)?;
    let n_total = u32::from_le_bytes(word);
    file.read_exact(&mut word)?;
    let code = u32::from_le_bytes(word);
    let mut values = Vec::new();
    let mut buf = [0u8; 8];
    loop {
        match file.read_exact(&mut buf) {
            Ok(()) => values.push(f64::from_le_bytes(buf)),
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e.into()),
        }
    }
    Ok((n_total, code, values))
}

/// Extends per-x diagonals with a slack register: slack bits sit above the
/// problem bits, phase picks up lambda * (g(x) - s(y))^2, and the training
/// cost ignores the slack assignment entirely.
///
/// The returned tables are unnormalized (scale 1); [`DiagonalTables::build`]
/// applies the range normalization afterwards.
pub fn slack_penalty_cost(
    f: &[f64],
    g: &[f64],
    enc: &SlackEncoding,
    lambda: f64,
) -> Result<DiagonalTables> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "penalty coefficient must be positive, got {lambda}"
        )));
    }
    check_len(f, g, "slack_penalty_cost")?;
    let len_x = f.len();
    if !len_x.is_power_of_two() {
        return Err(Error::InvalidInput("table length not a power of two".into()));
    }
    let n = len_x.trailing_zeros() as usize;
    let m = enc.m as usize;
    if n + m > MAX_QUBITS {
        return Err(Error::SizeOverflow {
            requested: n + m,
            max: MAX_QUBITS,
        });
    }
    let slack_states = 1usize << m;
    let mut phase = Vec::with_capacity(len_x << m);
    for y in 0..slack_states {
        let s = enc.slack_value(y as u64) as f64;
        for x in 0..len_x {
            let d = g[x] - s;
            phase.push(f[x] + lambda * d * d);
        }
    }
    let g_list = vec![g.to_vec()];
    let train = indicator_cost(f, &g_list, 0.0)?;
    let feasible = feasibility_mask(&g_list);
    Ok(DiagonalTables {
        n_vars: n,
        n_total: n + m,
        method: Method::SlackPenalty,
        f: tile(f, slack_states),
        g: vec![tile(g, slack_states)],
        g_int: None,
        train_cost: tile(&train, slack_states),
        phase_cost: phase,
        feasible: tile(&feasible, slack_states),
        scale: 1.0,
        lambda: Some(lambda),
        lambda_clamped: false,
    })
}

fn tile<T: Copy>(base: &[T], copies: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(base.len() * copies);
    for _ in 0..copies {
        out.extend_from_slice(base);
    }
    out
}

fn check_len(a: &[f64], b: &[f64], context: &'static str) -> Result<()> {
    if a.len() != b.len() {
        Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
            context,
        })
    } else {
        Ok(())
    }
}
