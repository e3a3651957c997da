//! Classical outer loop: depth-sequential optimization with parameter
//! interpolation, and the linear-schedule / fine-tune protocol.
//!
//! Training always minimizes the indicator-cost expectation; the phase
//! diagonal alone distinguishes the methods. Each depth warm-starts from the
//! previous optimum, linearly interpolated to the new layer count at
//! midpoint abscissae (i + 1/2)/p, which makes linear schedules exact fixed
//! points of the interpolation.

use crate::diagonals::{DiagonalTables, Method};
use crate::engine::{self, EvolveMode, QaoaParams};
use crate::error::{Error, Result};
use crate::lbfgs::{lbfgs_minimize, TraceRow};
use crate::metrics::{self, ResourceModel, RunRecord};

/// Ladder of layer counts to optimize in sequence.
#[derive(Debug, Clone)]
pub struct DepthSchedule {
    pub depths: Vec<usize>,
    pub max_iters: usize,
    pub init_beta: f64,
    pub init_gamma: f64,
}

impl Default for DepthSchedule {
    fn default() -> Self {
        // With the cost phase e^{-i gamma f}, f <= 0, and the mixer
        // e^{-i beta X}, the annealing-like family lives in the
        // beta < 0, gamma > 0 quadrant (its conjugate mirror is equivalent).
        // Seeding the first depth inside that family is what makes the
        // sequential ladder converge; the all-positive mirror of the same
        // magnitudes regularly strands it in shallow local optima.
        Self {
            depths: vec![1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64],
            max_iters: 100,
            init_beta: -0.1,
            init_gamma: 0.1,
        }
    }
}

impl DepthSchedule {
    pub fn with_depths(depths: Vec<usize>) -> Self {
        Self {
            depths,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depths.is_empty() || self.depths[0] == 0 {
            return Err(Error::InvalidInput("depth schedule needs depths >= 1".into()));
        }
        if !self.depths.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput(
                "depth schedule must be strictly increasing".into(),
            ));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidInput("max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// Annealing-like two-parameter schedule.
#[derive(Debug, Clone, Copy)]
pub struct LinearSchedule {
    pub delta_gamma: f64,
    pub delta_beta: f64,
    pub p: usize,
}

/// gamma_i = dg (i + 1/2)/p rising, beta_i = db (p - i - 1/2)/p falling.
pub fn build_linear(schedule: &LinearSchedule) -> Result<QaoaParams> {
    let p = schedule.p;
    if p == 0 {
        return Err(Error::InvalidInput("linear schedule needs p >= 1".into()));
    }
    let gammas = (0..p)
        .map(|i| schedule.delta_gamma * (i as f64 + 0.5) / p as f64)
        .collect();
    let betas = (0..p)
        .map(|i| schedule.delta_beta * (p as f64 - i as f64 - 0.5) / p as f64)
        .collect();
    QaoaParams::new(betas, gammas)
}

/// Linear interpolation of an optimized schedule to a deeper circuit.
/// Entries are treated as samples at abscissae (i + 1/2)/p and the
/// interpolant is endpoint-clamped.
pub fn interp_params(params: &QaoaParams, p_new: usize) -> Result<QaoaParams> {
    let p = params.depth();
    if p_new <= p {
        return Err(Error::InvalidInput(format!(
            "interpolation target {p_new} must exceed current depth {p}"
        )));
    }
    QaoaParams::new(
        interp_array(&params.betas, p_new),
        interp_array(&params.gammas, p_new),
    )
}

fn interp_array(vals: &[f64], p_new: usize) -> Vec<f64> {
    let p = vals.len();
    (0..p_new)
        .map(|j| {
            let t = (j as f64 + 0.5) / p_new as f64;
            let pos = t * p as f64 - 0.5;
            if pos <= 0.0 {
                vals[0]
            } else if pos >= (p - 1) as f64 {
                vals[p - 1]
            } else {
                let i = pos.floor() as usize;
                let frac = pos - i as f64;
                vals[i] + frac * (vals[i + 1] - vals[i])
            }
        })
        .collect()
}

/// Everything one optimization run needs besides the schedule.
#[derive(Debug, Clone)]
pub struct RunSetup<'a> {
    pub tables: &'a DiagonalTables,
    /// Per-basis-state sign values for the approximate indicator, with any
    /// epsilon offset already applied. Required iff the method is if-approx.
    pub theta_vals: Option<&'a [f64]>,
    pub resource: ResourceModel,
    pub instance_id: String,
    pub qpe_bits: Option<u32>,
    pub epsilon: Option<f64>,
}

impl<'a> RunSetup<'a> {
    fn mode(&self) -> Result<EvolveMode<'a>> {
        match self.tables.method {
            Method::IndicatorApprox => {
                let theta = self.theta_vals.ok_or_else(|| {
                    Error::InvalidInput("if-approx needs precomputed theta values".into())
                })?;
                Ok(EvolveMode::Approximate { theta_vals: theta })
            }
            _ => Ok(EvolveMode::Exact),
        }
    }

    fn eval_flat(&self, flat: &[f64]) -> Result<(f64, Vec<f64>)> {
        let params = QaoaParams::from_flat(flat)?;
        let (value, d_beta, d_gamma) =
            engine::value_and_gradient(self.tables, &params, self.mode()?)?;
        let mut grad = d_beta;
        grad.extend(d_gamma);
        Ok((value, grad))
    }

    /// Evolves at the given parameters and assembles the per-depth record.
    pub fn record_at(&self, params: &QaoaParams) -> Result<RunRecord> {
        let tables = self.tables;
        let state = engine::evolve(tables, params, self.mode()?)?;
        let probabilities = state.probabilities();
        let raar = metrics::raar(&probabilities, &tables.train_cost, &tables.feasible)?;
        let p_star = metrics::p_star(&probabilities, &tables.train_cost, &tables.feasible)?;
        let objective = engine::expectation(&state, &tables.train_cost)?;
        let p = params.depth();
        let clops = metrics::clops_total(&self.resource, p);
        let q_list = state.layer_success.clone();
        let q_total = state.q_total();
        let tts = match tables.method {
            Method::IndicatorApprox => {
                metrics::tts_approx(&q_list, p_star, &self.resource, p, 0.99)?
            }
            _ => metrics::tts(p_star, clops, 0.99),
        };
        Ok(RunRecord {
            id: self.instance_id.clone(),
            n: tables.n_vars,
            method: tables.method,
            qpe_bits: self.qpe_bits,
            epsilon: self.epsilon,
            p,
            betas: params.betas.clone(),
            gammas: params.gammas.clone(),
            objective,
            raar,
            p_star,
            q_list,
            q_total,
            clops,
            tts,
            gates: metrics::gate_count(self.resource.n, self.resource.m, self.resource.method),
            lambda: tables.lambda,
        })
    }
}

/// Vanishing measurement success stopped the ladder.
#[derive(Debug, Clone, Copy)]
pub struct AbortInfo {
    pub depth: usize,
    pub layer: usize,
    pub q: f64,
}

/// Optimizer trace of one depth.
#[derive(Debug, Clone)]
pub struct DepthTrace {
    pub depth: usize,
    pub rows: Vec<TraceRow>,
}

#[derive(Debug, Clone)]
pub struct SequentialOutcome {
    pub records: Vec<RunRecord>,
    pub abort: Option<AbortInfo>,
    pub traces: Vec<DepthTrace>,
}

/// Depth-sequential protocol: optimize at the first depth from the constant
/// initial angles, then interpolate each optimum to the next depth as its
/// warm start. A vanishing-q abort marks the depth failed and stops the
/// ladder; records for completed depths are kept.
pub fn optimize_sequential(setup: &RunSetup, schedule: &DepthSchedule) -> Result<SequentialOutcome> {
    optimize_sequential_from(setup, schedule, None)
}

/// Same as [`optimize_sequential`] but resuming after `warm`: depths up to
/// and including the warm depth are skipped and its parameters seed the
/// interpolation chain.
pub fn optimize_sequential_from(
    setup: &RunSetup,
    schedule: &DepthSchedule,
    warm: Option<(usize, QaoaParams)>,
) -> Result<SequentialOutcome> {
    schedule.validate()?;
    let mut records = Vec::new();
    let mut traces = Vec::new();
    let (skip_through, mut previous) = match warm {
        Some((depth, params)) => (Some(depth), Some(params)),
        None => (None, None),
    };

    for &depth in &schedule.depths {
        if skip_through.is_some_and(|done| depth <= done) {
            continue;
        }
        let init = match &previous {
            None => QaoaParams::constant(depth, schedule.init_beta, schedule.init_gamma),
            Some(prev) if prev.depth() == depth => prev.clone(),
            Some(prev) => interp_params(prev, depth)?,
        };
        let optimized = match lbfgs_minimize(
            |flat| setup.eval_flat(flat),
            &init.to_flat(),
            schedule.max_iters,
            10,
        ) {
            Ok(result) => {
                traces.push(DepthTrace {
                    depth,
                    rows: result.trace.clone(),
                });
                QaoaParams::from_flat(&result.x)?
            }
            Err(Error::VanishingSuccess { layer, q }) => {
                return Ok(SequentialOutcome {
                    records,
                    abort: Some(AbortInfo { depth, layer, q }),
                    traces,
                });
            }
            Err(other) => return Err(other),
        };
        match setup.record_at(&optimized) {
            Ok(record) => records.push(record),
            Err(Error::VanishingSuccess { layer, q }) => {
                return Ok(SequentialOutcome {
                    records,
                    abort: Some(AbortInfo { depth, layer, q }),
                    traces,
                });
            }
            Err(other) => return Err(other),
        }
        previous = Some(optimized);
    }
    Ok(SequentialOutcome {
        records,
        abort: None,
        traces,
    })
}

/// Deep-circuit protocol: first tune only the two linear-schedule rates,
/// then fine-tune all 2p angles from the optimized schedule. Each stage gets
/// its own iteration budget.
pub fn optimize_linear_then_finetune(
    setup: &RunSetup,
    p: usize,
    max_iters: usize,
) -> Result<(RunRecord, RunRecord)> {
    if p == 0 {
        return Err(Error::InvalidInput("linear protocol needs p >= 1".into()));
    }
    // stage 1: two parameters, gradients via the chain rule from the full
    // 2p-parameter gradient
    let rate_eval = |z: &[f64]| -> Result<(f64, Vec<f64>)> {
        let params = build_linear(&LinearSchedule {
            delta_gamma: z[0],
            delta_beta: z[1],
            p,
        })?;
        let (value, grad) = setup.eval_flat(&params.to_flat())?;
        let (d_beta, d_gamma) = grad.split_at(p);
        let dz_gamma: f64 = d_gamma
            .iter()
            .enumerate()
            .map(|(i, g)| g * (i as f64 + 0.5) / p as f64)
            .sum();
        let dz_beta: f64 = d_beta
            .iter()
            .enumerate()
            .map(|(i, b)| b * (p as f64 - i as f64 - 0.5) / p as f64)
            .sum();
        Ok((value, vec![dz_gamma, dz_beta]))
    };
    // rates start inside the annealing-compatible quadrant, matching the
    // sequential protocol's seed
    let stage1 = lbfgs_minimize(rate_eval, &[0.5, -0.5], max_iters, 10)?;
    let linear_params = build_linear(&LinearSchedule {
        delta_gamma: stage1.x[0],
        delta_beta: stage1.x[1],
        p,
    })?;
    let linear_record = setup.record_at(&linear_params)?;

    // stage 2: all angles, warm-started from the tuned schedule
    let stage2 = lbfgs_minimize(
        |flat| setup.eval_flat(flat),
        &linear_params.to_flat(),
        max_iters,
        10,
    )?;
    let fine_params = QaoaParams::from_flat(&stage2.x)?;
    let fine_record = setup.record_at(&fine_params)?;
    Ok((linear_record, fine_record))
}
