//! Solution-quality and runtime figures of merit.
//!
//! Solution quality is the random-adjusted approximation ratio (0 = as good
//! as uniform sampling, 1 = always measuring an optimum) plus the aggregated
//! optimal-solution probability. Runtime is counted in circuit layer
//! operations under an all-to-all, one-controlled-rotation-per-layer cost
//! model, and time-to-solution is the expected layer count until an optimal
//! sample is seen with 99% confidence. All of it is dimensionless.

use serde::{Deserialize, Serialize};

use crate::diagonals::{ceil_log2, Method};
use crate::error::{Error, Result};

/// Circuit-cost model variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClopsMethod {
    /// Fully-connected quadratic penalty circuit over n + m qubits.
    QuboPenalty,
    /// Indicator oracle with the fanned-out controlled-cost stage.
    IndicatorFast,
    /// Indicator oracle with n sequential controlled rotations.
    IndicatorSequential,
}

/// Per-layer circuit costs for one (n, m, method) combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceModel {
    pub n: usize,
    pub m: usize,
    pub method: ClopsMethod,
    pub l_init: u64,
    pub l_cost: u64,
    pub l_mixer: u64,
}

impl ResourceModel {
    pub fn new(n: usize, m: usize, method: ClopsMethod) -> Self {
        Self {
            n,
            m,
            method,
            l_init: 1,
            l_cost: clops_cost_layer(n, m, method),
            l_mixer: 1,
        }
    }
}

/// Sequential layer count of one cost layer.
pub fn clops_cost_layer(n: usize, m: usize, method: ClopsMethod) -> u64 {
    let (n64, m64) = (n as u64, m as u64);
    match method {
        // complete-graph edge coloring: n+m layers, one less when n+m is even
        ClopsMethod::QuboPenalty => n64 + m64 - u64::from((n + m).is_multiple_of(2)),
        // QPE in and out, both QFTs, and the fanned-out controlled cost
        ClopsMethod::IndicatorFast => {
            2 * n64.max(m64) + 4 * m64 + 2 * ceil_log2(n64) as u64 - 1
        }
        // QPE in and out, both QFTs, and n sequential controlled rotations
        ClopsMethod::IndicatorSequential => 2 * n64.max(m64) + (4 * m64 - 2) + n64,
    }
}

/// Total two-qubit-equivalent gate count of one cost layer.
pub fn gate_count(n: usize, m: usize, method: ClopsMethod) -> u64 {
    let (n64, m64) = (n as u64, m as u64);
    match method {
        ClopsMethod::QuboPenalty => (n64 + m64) * (n64 + m64 - 1) / 2 + n64,
        // phase additions and QFT, doubled for uncomputation, plus the
        // controlled cost rotations
        ClopsMethod::IndicatorFast | ClopsMethod::IndicatorSequential => {
            2 * (n64 * m64 + m64 * (m64 + 1) / 2) + n64
        }
    }
}

/// Circuit layer operations of the depth-p circuit:
/// L(p) = L_init + p (L_cost + L_mixer).
pub fn clops_total(resource: &ResourceModel, p: usize) -> u64 {
    resource.l_init + p as u64 * (resource.l_cost + resource.l_mixer)
}

/// Random-adjusted approximation ratio of a probability vector against the
/// training cost: (random mean - achieved) / (random mean - optimum).
pub fn raar(probabilities: &[f64], train_cost: &[f64], feasible: &[bool]) -> Result<f64> {
    let (rand_mean, achieved, f_star) = quality_parts(probabilities, train_cost, feasible)?;
    let denom = rand_mean - f_star;
    if denom.abs() < 1e-15 * f_star.abs().max(1.0) {
        return Err(Error::Degenerate(
            "trivial instance: optimum equals the random mean".into(),
        ));
    }
    Ok((rand_mean - achieved) / denom)
}

/// Aggregated probability of measuring any optimal feasible solution.
pub fn p_star(probabilities: &[f64], train_cost: &[f64], feasible: &[bool]) -> Result<f64> {
    let (_, _, f_star) = quality_parts(probabilities, train_cost, feasible)?;
    Ok((0..probabilities.len())
        .filter(|&x| feasible[x] && train_cost[x] == f_star)
        .map(|x| probabilities[x])
        .sum())
}

fn quality_parts(
    probabilities: &[f64],
    train_cost: &[f64],
    feasible: &[bool],
) -> Result<(f64, f64, f64)> {
    if probabilities.len() != train_cost.len() || probabilities.len() != feasible.len() {
        return Err(Error::LengthMismatch {
            left: probabilities.len(),
            right: train_cost.len(),
            context: "solution quality",
        });
    }
    let mut f_star = f64::INFINITY;
    for x in 0..train_cost.len() {
        if feasible[x] && train_cost[x] < f_star {
            f_star = train_cost[x];
        }
    }
    if !f_star.is_finite() {
        return Err(Error::InvalidInput("no feasible state".into()));
    }
    let rand_mean: f64 = train_cost.iter().sum::<f64>() / train_cost.len() as f64;
    let achieved: f64 = probabilities
        .iter()
        .zip(train_cost)
        .map(|(&p, &c)| p * c)
        .sum();
    Ok((rand_mean, achieved, f_star))
}

/// Sums probabilities over the slack register, leaving a distribution over
/// the problem variables (slack bits sit above the problem bits).
pub fn marginalize_slack(probabilities: &[f64], n_vars: usize) -> Vec<f64> {
    let main_len = 1usize << n_vars;
    let mut out = vec![0.0; main_len];
    for (idx, &p) in probabilities.iter().enumerate() {
        out[idx & (main_len - 1)] += p;
    }
    out
}

/// Shots until one success at the given confidence, with the single-shot
/// convention for certainty.
fn shots_needed(p_star: f64, success_threshold: f64) -> Option<u64> {
    if p_star <= 0.0 {
        return None;
    }
    if p_star >= 1.0 {
        return Some(1);
    }
    let raw = (1.0 - success_threshold).ln() / (1.0 - p_star).ln();
    Some((raw.ceil() as u64).max(1))
}

/// Time to solution in layer units: TTS_p = L(p) ceil(log 0.01 / log(1 - P*)).
/// Returns the infinity sentinel when the optimum is never measured.
pub fn tts(p_star: f64, clops: u64, success_threshold: f64) -> f64 {
    match shots_needed(p_star, success_threshold) {
        Some(shots) => clops as f64 * shots as f64,
        None => f64::INFINITY,
    }
}

/// Time to solution with failing projective measurements: the expected layer
/// depth counts restarts after a failed measurement, and the per-shot success
/// is the joint probability P* q_total.
///
/// `q_list` holds the per-layer success probabilities of the depth-p run;
/// the expected depth uses the first p-1 prefix products and q_total is the
/// product of all supplied entries.
pub fn tts_approx(
    q_list: &[f64],
    p_star: f64,
    resource: &ResourceModel,
    p: usize,
    success_threshold: f64,
) -> Result<f64> {
    if p == 0 {
        return Err(Error::InvalidInput("tts_approx needs p >= 1".into()));
    }
    if q_list.len() < p - 1 {
        return Err(Error::InvalidInput(format!(
            "tts_approx needs at least p-1 = {} success probabilities, got {}",
            p - 1,
            q_list.len()
        )));
    }
    let l_layer = (resource.l_cost + resource.l_mixer) as f64;
    let mut expected_layers = 1.0;
    let mut prefix = 1.0;
    for &q in q_list.iter().take(p - 1) {
        prefix *= q;
        expected_layers += prefix;
    }
    let expected = resource.l_init as f64 + l_layer * expected_layers;
    let q_total: f64 = q_list.iter().product();
    match shots_needed(p_star * q_total, success_threshold) {
        Some(shots) => Ok(expected * shots as f64),
        None => Ok(f64::INFINITY),
    }
}

/// Optimal time to solution over depths, with ties broken toward the
/// smallest depth. Returns `None` on empty input; all-infinite inputs report
/// the infinity sentinel at the smallest depth.
pub fn tts_star(per_depth: &[(usize, f64)]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for &(p, t) in per_depth {
        best = Some(match best {
            None => (p, t),
            Some((bp, bt)) => {
                if t < bt || (t == bt && p < bp) {
                    (p, t)
                } else {
                    (bp, bt)
                }
            }
        });
    }
    best
}

/// Depth table matching the oracle-based circuit's layer budget to the
/// tree-generator mixer at depth one, for problem sizes 5..=22.
pub fn qtg_matched_depth(n: usize) -> Result<usize> {
    const TABLE: [usize; 18] = [
        15, 20, 22, 28, 28, 40, 41, 45, 52, 46, 50, 61, 57, 70, 64, 64, 69, 69,
    ];
    if !(5..=22).contains(&n) {
        return Err(Error::Range(format!("matched depth for n = {n}")));
    }
    Ok(TABLE[n - 5])
}

/// One optimized depth of one instance/method run, serializable as a JSON
/// line. `tts` uses null for the infinity sentinel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub id: String,
    pub n: usize,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qpe_bits: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub p: usize,
    pub betas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub objective: f64,
    pub raar: f64,
    pub p_star: f64,
    pub q_list: Vec<f64>,
    pub q_total: f64,
    pub clops: u64,
    #[serde(with = "tts_serde")]
    pub tts: f64,
    pub gates: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

impl RunRecord {
    pub const CSV_HEADER: &'static str =
        "id,n,method,qpe_bits,epsilon,p,objective,raar,p_star,q_total,clops,tts,gates,lambda";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.id,
            self.n,
            self.method,
            self.qpe_bits.map_or(String::new(), |m| m.to_string()),
            self.epsilon.map_or(String::new(), |e| e.to_string()),
            self.p,
            self.objective,
            self.raar,
            self.p_star,
            self.q_total,
            self.clops,
            if self.tts.is_finite() {
                self.tts.to_string()
            } else {
                "inf".into()
            },
            self.gates,
            self.lambda.map_or(String::new(), |l| l.to_string()),
        )
    }
}

mod tts_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &f64, ser: S) -> Result<S::Ok, S::Error> {
        if value.is_finite() {
            ser.serialize_some(value)
        } else {
            ser.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(de)?.unwrap_or(f64::INFINITY))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_quality() -> (Vec<f64>, Vec<bool>) {
        // 2-bit toy problem: costs f~ = [0, -1, -2, 0], last state infeasible
        let train = vec![0.0, -1.0, -2.0, 0.0];
        let feasible = vec![true, true, true, false];
        (train, feasible)
    }

    #[test]
    fn raar_of_uniform_sampling_is_zero() {
        let (train, feasible) = toy_quality();
        let uniform = vec![0.25; 4];
        assert!(raar(&uniform, &train, &feasible).unwrap().abs() < 1e-15);
    }

    #[test]
    fn raar_of_pure_optimum_is_one() {
        let (train, feasible) = toy_quality();
        let pure = vec![0.0, 0.0, 1.0, 0.0];
        assert!((raar(&pure, &train, &feasible).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn raar_is_linear_in_the_mix() {
        let (train, feasible) = toy_quality();
        let mix: Vec<f64> = vec![0.125, 0.125, 0.5 + 0.125, 0.125];
        assert!((raar(&mix, &train, &feasible).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn raar_invariant_under_positive_rescaling() {
        let (train, feasible) = toy_quality();
        let probs = vec![0.4, 0.3, 0.2, 0.1];
        let base = raar(&probs, &train, &feasible).unwrap();
        let scaled: Vec<f64> = train.iter().map(|&c| 7.5 * c).collect();
        let again = raar(&probs, &scaled, &feasible).unwrap();
        assert!((base - again).abs() < 1e-12);
    }

    #[test]
    fn raar_rejects_trivial_instances() {
        let train = vec![0.0, 0.0];
        let feasible = vec![true, true];
        assert!(raar(&[0.5, 0.5], &train, &feasible).is_err());
    }

    #[test]
    fn p_star_aggregates_degenerate_optima() {
        let train = vec![-2.0, -1.0, -2.0, 0.0];
        let feasible = vec![true, true, true, true];
        let probs = vec![0.2, 0.4, 0.1, 0.3];
        assert!((p_star(&probs, &train, &feasible).unwrap() - 0.3).abs() < 1e-15);

        let unique = vec![0.0, 0.3, 0.0, 0.7];
        let train2 = vec![0.0, -1.0, 0.0, 0.0];
        assert!((p_star(&unique, &train2, &feasible).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn p_star_counts_every_slack_branch() {
        // N=2 problem extended by a 2-bit slack register: the optimum x*=2
        // counts under every slack assignment
        let train_x = vec![0.0, -1.0, -2.0, 0.0];
        let feasible_x = vec![true, true, true, false];
        let copies = 4usize;
        let mut train = Vec::new();
        let mut feasible = Vec::new();
        for _ in 0..copies {
            train.extend_from_slice(&train_x);
            feasible.extend_from_slice(&feasible_x);
        }
        let mut probs = vec![0.0; 16];
        // spread the optimum over all four slack branches plus noise elsewhere
        probs[2] = 0.1;
        probs[6] = 0.2;
        probs[10] = 0.25;
        probs[14] = 0.05;
        probs[1] = 0.4;
        let direct = p_star(&probs, &train, &feasible).unwrap();
        assert!((direct - 0.6).abs() < 1e-15);
        // marginalizing first gives the same answer
        let marg = marginalize_slack(&probs, 2);
        let direct2 = p_star(&marg, &train_x, &feasible_x).unwrap();
        assert!((direct - direct2).abs() < 1e-15);
    }

    #[test]
    fn clops_worked_examples() {
        assert_eq!(clops_cost_layer(20, 8, ClopsMethod::QuboPenalty), 27);
        assert_eq!(clops_cost_layer(20, 9, ClopsMethod::IndicatorFast), 85);
        assert_eq!(clops_cost_layer(20, 9, ClopsMethod::IndicatorSequential), 94);
    }

    #[test]
    fn gate_count_worked_examples() {
        assert_eq!(gate_count(20, 8, ClopsMethod::QuboPenalty), 398);
        assert_eq!(gate_count(20, 9, ClopsMethod::IndicatorFast), 470);
        assert_eq!(gate_count(1, 1, ClopsMethod::QuboPenalty), 2);
    }

    #[test]
    fn clops_total_examples() {
        let qubo = ResourceModel {
            n: 20,
            m: 8,
            method: ClopsMethod::QuboPenalty,
            l_init: 1,
            l_cost: 27,
            l_mixer: 1,
        };
        assert_eq!(clops_total(&qubo, 1), 29);
        assert_eq!(
            clops_total(&qubo, 4) - clops_total(&qubo, 2),
            2 * (27 + 1)
        );
        let fast = ResourceModel::new(20, 9, ClopsMethod::IndicatorFast);
        assert_eq!(clops_total(&fast, 16), 1 + 16 * 86);
    }

    #[test]
    fn tts_examples() {
        assert_eq!(tts(0.5, 100, 0.99), 700.0);
        assert_eq!(tts(1.0, 123, 0.99), 123.0);
        assert!(tts(0.0, 100, 0.99).is_infinite());
    }

    #[test]
    fn tts_approx_reduces_to_tts_with_perfect_measurements() {
        let resource = ResourceModel::new(10, 4, ClopsMethod::IndicatorFast);
        let p = 5;
        let q = vec![1.0; p];
        let a = tts_approx(&q, 0.37, &resource, p, 0.99).unwrap();
        let b = tts(0.37, clops_total(&resource, p), 0.99);
        assert_eq!(a, b);
    }

    #[test]
    fn tts_approx_hand_example() {
        let resource = ResourceModel {
            n: 4,
            m: 4,
            method: ClopsMethod::IndicatorFast,
            l_init: 1,
            l_cost: 9,
            l_mixer: 1,
        };
        // <L> = 1 + 10 (1 + 0.5 + 0.25) = 18.5; the joint success is
        // P* q_total = 0.25, needing ceil(log 0.01 / log 0.75) = 17 shots
        let t = tts_approx(&[0.5, 0.5], 1.0, &resource, 3, 0.99).unwrap();
        assert!((t - 18.5 * 17.0).abs() < 1e-9);
        // single layer: empty prefix sum
        let t = tts_approx(&[], 1.0, &resource, 1, 0.99).unwrap();
        assert!((t - 11.0).abs() < 1e-12);
    }

    #[test]
    fn tts_star_tie_breaks_to_smaller_depth() {
        assert_eq!(tts_star(&[(4, 500.0)]), Some((4, 500.0)));
        assert_eq!(
            tts_star(&[(1, 500.0), (2, 300.0), (4, 300.0)]),
            Some((2, 300.0))
        );
        assert_eq!(
            tts_star(&[(1, 500.0), (2, 400.0), (4, 300.0)]),
            Some((4, 300.0))
        );
        assert_eq!(tts_star(&[]), None);
        let all_inf = [(1, f64::INFINITY), (2, f64::INFINITY)];
        assert_eq!(tts_star(&all_inf), Some((1, f64::INFINITY)));
    }

    #[test]
    fn qtg_depth_fixture() {
        assert_eq!(qtg_matched_depth(16).unwrap(), 61);
        assert_eq!(qtg_matched_depth(5).unwrap(), 15);
        assert_eq!(qtg_matched_depth(22).unwrap(), 69);
        assert!(qtg_matched_depth(23).is_err());
        assert!(qtg_matched_depth(4).is_err());
    }

    #[test]
    fn run_record_round_trips_including_infinite_tts() {
        let rec = RunRecord {
            id: "x".into(),
            n: 8,
            method: Method::IndicatorExact,
            qpe_bits: None,
            epsilon: None,
            p: 4,
            betas: vec![0.1; 4],
            gammas: vec![0.2; 4],
            objective: -3.5,
            raar: 0.8,
            p_star: 0.0,
            q_list: vec![1.0; 4],
            q_total: 1.0,
            clops: 100,
            tts: f64::INFINITY,
            gates: 50,
            lambda: None,
        };
        let line = serde_json::to_string(&rec).unwrap();
        assert!(line.contains("\"tts\":null"));
        let back: RunRecord = serde_json::from_str(&line).unwrap();
        assert!(back.tts.is_infinite());
        assert_eq!(back.method, Method::IndicatorExact);
        assert!(rec.to_csv_row().contains(",inf,"));
    }
}
