//! Glue that takes a knapsack instance and a method to a finished run:
//! table construction, sign-table preparation, circuit-cost model selection,
//! and the depth-sequential optimization.

use crate::diagonals::{
    ceil_log2, qpe_register_size, DiagonalTables, Method, TableOptions, MAX_QUBITS,
};
use crate::engine::QaoaParams;
use crate::error::{Error, Result};
use crate::instances::{to_problem, KnapsackInstance};
use crate::metrics::{ClopsMethod, ResourceModel};
use crate::optimize::{
    optimize_sequential_from, DepthSchedule, RunSetup, SequentialOutcome,
};
use crate::theta::{build_theta_table, DEFAULT_SUPERSAMPLE};

/// Per-run configuration; [`RunConfig::new`] fills in the defaults.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub method: Method,
    /// QPE register size; required for if-approx, ignored otherwise.
    pub qpe_bits: Option<u32>,
    /// Offset of the sign-function argument for if-approx. Use 0 on integer
    /// instances (the exact mode); 0.5 centers the transition strip for
    /// real-valued constraints.
    pub epsilon: f64,
    pub supersample: u32,
    pub schedule: DepthSchedule,
    /// Penalty override; `None` auto-tunes.
    pub lambda: Option<f64>,
    pub max_qubits: usize,
}

impl RunConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            qpe_bits: None,
            epsilon: 0.5,
            supersample: DEFAULT_SUPERSAMPLE,
            schedule: DepthSchedule::default(),
            lambda: None,
            max_qubits: MAX_QUBITS,
        }
    }
}

/// Tables plus derived run inputs, ready for the optimizer.
#[derive(Debug, Clone)]
pub struct PreparedRun {
    pub tables: DiagonalTables,
    pub theta_vals: Option<Vec<f64>>,
    pub resource: ResourceModel,
    pub instance_id: String,
    pub qpe_bits: Option<u32>,
    pub epsilon: Option<f64>,
}

impl PreparedRun {
    pub fn setup(&self) -> RunSetup<'_> {
        RunSetup {
            tables: &self.tables,
            theta_vals: self.theta_vals.as_deref(),
            resource: self.resource,
            instance_id: self.instance_id.clone(),
            qpe_bits: self.qpe_bits,
            epsilon: self.epsilon,
        }
    }
}

/// Builds tables, the sign-value cache, and the circuit-cost model for one
/// instance/method pair.
pub fn prepare(inst: &KnapsackInstance, cfg: &RunConfig) -> Result<PreparedRun> {
    let problem = to_problem(inst);
    let tables = DiagonalTables::build(
        &problem,
        cfg.method,
        &TableOptions {
            lambda: cfg.lambda,
            max_qubits: cfg.max_qubits,
        },
    )?;

    let (theta_vals, qpe_bits, epsilon) = match cfg.method {
        Method::IndicatorApprox => {
            let m = cfg.qpe_bits.ok_or_else(|| {
                Error::InvalidInput("if-approx needs --qpe-bits".into())
            })?;
            if tables.g.len() != 1 {
                return Err(Error::InvalidInput(
                    "if-approx supports a single constraint".into(),
                ));
            }
            let table = build_theta_table(m, cfg.supersample)?;
            let theta: Vec<f64> = tables.g[0]
                .iter()
                .map(|&g| table.lookup(g - cfg.epsilon))
                .collect();
            (Some(theta), Some(m), Some(cfg.epsilon))
        }
        _ => (None, None, None),
    };

    let resource = resource_model(&problem, &tables, cfg)?;
    Ok(PreparedRun {
        instance_id: inst.id.clone(),
        tables,
        theta_vals,
        resource,
        qpe_bits,
        epsilon,
    })
}

/// Circuit-cost model per method: penalty circuits are costed as the
/// fully-connected quadratic penalty over n + slack qubits (the virtual
/// penalty inherits the slack circuit's cost); oracle circuits use the fast
/// controlled-cost variant with the register sized to resolve the
/// constraint, or the configured size in approximate mode.
fn resource_model(
    problem: &crate::instances::ConstrainedProblem,
    tables: &DiagonalTables,
    cfg: &RunConfig,
) -> Result<ResourceModel> {
    let n = problem.n;
    let model = match cfg.method {
        Method::VirtualPenalty | Method::SlackPenalty => {
            let w = problem.constraints[0].bound;
            let slack_bits = if w <= 1.0 { 1 } else { ceil_log2(w.ceil() as u64) };
            ResourceModel::new(n, slack_bits as usize, ClopsMethod::QuboPenalty)
        }
        Method::IndicatorApprox => ResourceModel::new(
            n,
            cfg.qpe_bits.unwrap_or(0) as usize,
            ClopsMethod::IndicatorFast,
        ),
        Method::IndicatorExact | Method::ConstantPenalty => {
            let m = problem
                .constraints
                .iter()
                .map(|c| {
                    let (lo, hi) = c.bounds();
                    qpe_register_size(lo.floor() as i64, hi.ceil() as i64)
                })
                .max()
                .unwrap_or(1);
            ResourceModel::new(n, m as usize, ClopsMethod::IndicatorFast)
        }
    };
    let _ = tables;
    Ok(model)
}

/// Full run of one instance with one method: prepare, then the sequential
/// ladder. `resume` carries the deepest already-completed depth and its
/// optimized parameters.
pub fn run_instance(
    inst: &KnapsackInstance,
    cfg: &RunConfig,
    resume: Option<(usize, QaoaParams)>,
) -> Result<SequentialOutcome> {
    let prepared = prepare(inst, cfg)?;
    optimize_sequential_from(&prepared.setup(), &cfg.schedule, resume)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{generate_real, to_integer};

    #[test]
    fn prepare_builds_theta_only_for_approx() {
        let inst = to_integer(&generate_real(5, 4));
        let exact = prepare(&inst, &RunConfig::new(Method::IndicatorExact)).unwrap();
        assert!(exact.theta_vals.is_none());

        let mut cfg = RunConfig::new(Method::IndicatorApprox);
        cfg.qpe_bits = Some(8);
        cfg.epsilon = 0.0;
        let approx = prepare(&inst, &cfg).unwrap();
        let theta = approx.theta_vals.unwrap();
        assert_eq!(theta.len(), 1 << inst.n);
        // resolvable integer constraint values saturate the sign function
        for (x, &t) in theta.iter().enumerate() {
            let want = if approx.tables.feasible[x] { 1.0 } else { -1.0 };
            assert!((t - want).abs() < 1e-6, "x={x}: {t}");
        }
    }

    #[test]
    fn approx_without_register_size_is_an_error() {
        let inst = to_integer(&generate_real(4, 4));
        let err = prepare(&inst, &RunConfig::new(Method::IndicatorApprox)).unwrap_err();
        assert!(err.to_string().contains("qpe-bits"));
    }

    #[test]
    fn resource_models_follow_the_method() {
        let inst = to_integer(&generate_real(6, 8));
        let slack = prepare(&inst, &RunConfig::new(Method::SlackPenalty)).unwrap();
        assert_eq!(slack.resource.method, ClopsMethod::QuboPenalty);
        // W = 60 needs 6 slack bits
        assert_eq!(slack.resource.m, 6);
        assert_eq!(slack.tables.slack_bits(), 6);

        let virt = prepare(&inst, &RunConfig::new(Method::VirtualPenalty)).unwrap();
        assert_eq!(virt.resource.method, ClopsMethod::QuboPenalty);
        assert_eq!(virt.resource.m, 6);
        assert_eq!(virt.tables.slack_bits(), 0);

        let exact = prepare(&inst, &RunConfig::new(Method::IndicatorExact)).unwrap();
        assert_eq!(exact.resource.method, ClopsMethod::IndicatorFast);
        let (lo, hi) = to_problem(&inst).constraints[0].bounds();
        assert_eq!(
            exact.resource.m,
            qpe_register_size(lo as i64, hi as i64) as usize
        );
    }

    #[test]
    fn slack_on_real_instances_is_rejected() {
        let inst = generate_real(5, 2);
        let err = prepare(&inst, &RunConfig::new(Method::SlackPenalty)).unwrap_err();
        assert!(err.to_string().contains("integer"));
    }

    #[test]
    fn run_instance_produces_one_record_per_depth() {
        let inst = to_integer(&generate_real(5, 17));
        let mut cfg = RunConfig::new(Method::IndicatorExact);
        cfg.schedule = DepthSchedule::with_depths(vec![1, 2]);
        let outcome = run_instance(&inst, &cfg, None).unwrap();
        assert_eq!(outcome.records.len(), 2);
        assert!(outcome.abort.is_none());
        assert_eq!(outcome.records[0].id, inst.id);
    }
}
