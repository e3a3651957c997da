//! Limited-memory BFGS with a strong-Wolfe line search.
//!
//! Two-loop recursion over a bounded history of correction pairs; the line
//! search brackets and zooms with cubic interpolation (Wolfe constants
//! c1 = 1e-4, c2 = 0.9). Accepted iterates are non-increasing in value;
//! termination is on gradient norm <= 1e-8, relative value change <= 1e-12,
//! the iteration cap, or a stalled line search.

use crate::error::{Error, Result};

pub const GRAD_TOL: f64 = 1e-8;
pub const VALUE_REL_TOL: f64 = 1e-12;
const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_LINE_SEARCH: usize = 25;

/// One accepted iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub value: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    GradientNorm,
    ValueStagnation,
    IterationCap,
    LineSearchStalled,
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub stop: StopReason,
    pub trace: Vec<TraceRow>,
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// Minimizes an objective given by a value-and-gradient callable.
pub fn lbfgs_minimize<F>(
    mut eval: F,
    x0: &[f64],
    max_iters: usize,
    memory: usize,
) -> Result<LbfgsResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut x = x0.to_vec();
    let (mut value, mut grad) = checked_eval(&mut eval, &x)?;
    let mut history: Vec<Pair> = Vec::new();
    let mut trace = Vec::new();

    for iteration in 0..max_iters {
        let grad_norm = norm(&grad);
        if grad_norm <= GRAD_TOL {
            return Ok(LbfgsResult {
                x,
                value,
                iterations: iteration,
                stop: StopReason::GradientNorm,
                trace,
            });
        }

        let mut direction = two_loop_direction(&grad, &history);
        let mut slope = dot(&direction, &grad);
        if slope >= 0.0 {
            // curvature information went stale; restart from steepest descent
            history.clear();
            direction = grad.iter().map(|g| -g).collect();
            slope = -grad_norm * grad_norm;
        }
        // without curvature information the direction is the raw gradient;
        // cap the first trial step so the move stays local
        let first_step = if history.is_empty() {
            let l1: f64 = grad.iter().map(|g| g.abs()).sum();
            (1.0 / l1).min(1.0)
        } else {
            1.0
        };

        match line_search(&mut eval, &x, &direction, value, &grad, slope, first_step)? {
            LineSearchOutcome::Accepted {
                step,
                value: new_value,
                grad: new_grad,
            } => {
                let s: Vec<f64> = direction.iter().map(|d| d * step).collect();
                let y: Vec<f64> = new_grad
                    .iter()
                    .zip(&grad)
                    .map(|(gn, go)| gn - go)
                    .collect();
                let ys = dot(&y, &s);
                if ys > 1e-12 * norm(&y) * norm(&s) {
                    if history.len() == memory {
                        history.remove(0);
                    }
                    history.push(Pair { s, y, rho: 1.0 / ys });
                }
                for (xi, si) in x.iter_mut().zip(&direction) {
                    *xi += si * step;
                }
                let drop = value - new_value;
                value = new_value;
                grad = new_grad;
                trace.push(TraceRow {
                    iteration: iteration + 1,
                    value,
                    grad_norm: norm(&grad),
                });
                if drop.abs() <= VALUE_REL_TOL * value.abs().max(1.0) {
                    return Ok(LbfgsResult {
                        x,
                        value,
                        iterations: iteration + 1,
                        stop: StopReason::ValueStagnation,
                        trace,
                    });
                }
            }
            LineSearchOutcome::Stalled => {
                return Ok(LbfgsResult {
                    x,
                    value,
                    iterations: iteration,
                    stop: StopReason::LineSearchStalled,
                    trace,
                });
            }
        }
    }

    Ok(LbfgsResult {
        x,
        value,
        iterations: max_iters,
        stop: StopReason::IterationCap,
        trace,
    })
}

fn checked_eval<F>(eval: &mut F, x: &[f64]) -> Result<(f64, Vec<f64>)>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let (value, grad) = eval(x)?;
    if !value.is_finite() {
        return Err(Error::NonFinite {
            what: "objective",
            params: x.to_vec(),
        });
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite {
            what: "gradient",
            params: x.to_vec(),
        });
    }
    Ok((value, grad))
}

fn two_loop_direction(grad: &[f64], history: &[Pair]) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = vec![0.0; history.len()];
    for (idx, pair) in history.iter().enumerate().rev() {
        let alpha = pair.rho * dot(&pair.s, &q);
        alphas[idx] = alpha;
        for (qi, yi) in q.iter_mut().zip(&pair.y) {
            *qi -= alpha * yi;
        }
    }
    if let Some(last) = history.last() {
        let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for (idx, pair) in history.iter().enumerate() {
        let beta = pair.rho * dot(&pair.y, &q);
        for (qi, si) in q.iter_mut().zip(&pair.s) {
            *qi += (alphas[idx] - beta) * si;
        }
    }
    for qi in q.iter_mut() {
        *qi = -*qi;
    }
    q
}

enum LineSearchOutcome {
    Accepted {
        step: f64,
        value: f64,
        grad: Vec<f64>,
    },
    Stalled,
}

struct Probe {
    alpha: f64,
    value: f64,
    slope: f64,
    grad: Vec<f64>,
}

/// Strong-Wolfe search along `direction` (Nocedal & Wright, Alg. 3.5/3.6).
#[allow(clippy::too_many_arguments)]
fn line_search<F>(
    eval: &mut F,
    x: &[f64],
    direction: &[f64],
    value0: f64,
    _grad0: &[f64],
    slope0: f64,
    first_step: f64,
) -> Result<LineSearchOutcome>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let probe = |alpha: f64, eval: &mut F| -> Result<Probe> {
        let xt: Vec<f64> = x
            .iter()
            .zip(direction)
            .map(|(xi, di)| xi + alpha * di)
            .collect();
        let (value, grad) = checked_eval(eval, &xt)?;
        let slope = dot(&grad, direction);
        Ok(Probe {
            alpha,
            value,
            slope,
            grad,
        })
    };

    let wolfe = |p: &Probe| p.value <= value0 + C1 * p.alpha * slope0 && p.slope.abs() <= -C2 * slope0;

    let origin = || Probe {
        alpha: 0.0,
        value: value0,
        slope: slope0,
        grad: Vec::new(),
    };
    let mut prev = origin();
    let mut alpha = first_step;
    let mut bracket: Option<(Probe, Probe)> = None;
    for i in 0..MAX_LINE_SEARCH {
        let cur = probe(alpha, eval)?;
        if cur.value > value0 + C1 * cur.alpha * slope0 || (i > 0 && cur.value >= prev.value) {
            bracket = Some((std::mem::replace(&mut prev, origin()), cur));
            break;
        }
        if cur.slope.abs() <= -C2 * slope0 {
            return Ok(LineSearchOutcome::Accepted {
                step: cur.alpha,
                value: cur.value,
                grad: cur.grad,
            });
        }
        if cur.slope >= 0.0 {
            bracket = Some((cur, std::mem::replace(&mut prev, origin())));
            break;
        }
        alpha = cur.alpha * 2.0;
        prev = cur;
    }

    let (mut lo, mut hi) = match bracket {
        Some(pair) => pair,
        // slope stayed negative and Wolfe never held: accept the last point
        // if it decreases the value, otherwise report a stall
        None => {
            return Ok(if prev.alpha > 0.0 && prev.value < value0 {
                LineSearchOutcome::Accepted {
                    step: prev.alpha,
                    value: prev.value,
                    grad: prev.grad,
                }
            } else {
                LineSearchOutcome::Stalled
            });
        }
    };

    for _ in 0..MAX_LINE_SEARCH {
        let alpha = cubic_step(&lo, &hi);
        let cur = probe(alpha, eval)?;
        if cur.value > value0 + C1 * cur.alpha * slope0 || cur.value >= lo.value {
            hi = cur;
        } else {
            if wolfe(&cur) {
                return Ok(LineSearchOutcome::Accepted {
                    step: cur.alpha,
                    value: cur.value,
                    grad: cur.grad,
                });
            }
            if cur.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = replace_probe(&lo);
            }
            lo = cur;
        }
        if (hi.alpha - lo.alpha).abs() < 1e-14 {
            break;
        }
    }

    if lo.alpha > 0.0 && lo.value < value0 {
        Ok(LineSearchOutcome::Accepted {
            step: lo.alpha,
            value: lo.value,
            grad: lo.grad,
        })
    } else {
        Ok(LineSearchOutcome::Stalled)
    }
}

fn replace_probe(p: &Probe) -> Probe {
    Probe {
        alpha: p.alpha,
        value: p.value,
        slope: p.slope,
        grad: p.grad.clone(),
    }
}

/// Minimizer of the cubic through two (alpha, value, slope) samples, clipped
/// into the bracket interior.
fn cubic_step(lo: &Probe, hi: &Probe) -> f64 {
    let (a, fa, da) = (lo.alpha, lo.value, lo.slope);
    let (b, fb, db) = (hi.alpha, hi.value, hi.slope);
    let (left, right) = if a < b { (a, b) } else { (b, a) };
    let width = right - left;
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    let candidate = if disc >= 0.0 {
        let d2 = disc.sqrt();
        if a <= b {
            b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2)
        } else {
            a - (a - b) * (da + d2 - d1) / (da - db + 2.0 * d2)
        }
    } else {
        (a + b) / 2.0
    };
    if !candidate.is_finite() {
        return (a + b) / 2.0;
    }
    candidate.clamp(left + 0.1 * width, right - 0.1 * width)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_convex_quadratic_quickly() {
        // f = sum (i+1) (x_i - i)^2
        let eval = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let mut v = 0.0;
            let mut g = vec![0.0; x.len()];
            for i in 0..x.len() {
                let w = (i + 1) as f64;
                let d = x[i] - i as f64;
                v += w * d * d;
                g[i] = 2.0 * w * d;
            }
            Ok((v, g))
        };
        let res = lbfgs_minimize(eval, &[5.0, -3.0, 2.0, 9.0], 50, 10).unwrap();
        assert!(res.iterations <= 10, "took {} iterations", res.iterations);
        for (i, xi) in res.x.iter().enumerate() {
            assert!((xi - i as f64).abs() < 1e-8);
        }
    }

    #[test]
    fn solves_rosenbrock_within_budget() {
        let eval = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ];
            Ok((v, g))
        };
        let res = lbfgs_minimize(eval, &[-1.2, 1.0], 100, 10).unwrap();
        assert!(res.value < 1e-8, "value {}", res.value);
        assert!((res.x[0] - 1.0).abs() < 1e-4 && (res.x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn returns_immediately_at_stationary_point() {
        let eval = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            Ok((x[0] * x[0], vec![2.0 * x[0]]))
        };
        let res = lbfgs_minimize(eval, &[0.0], 100, 10).unwrap();
        assert_eq!(res.iterations, 0);
        assert_eq!(res.stop, StopReason::GradientNorm);
        assert!(res.trace.is_empty());
    }

    #[test]
    fn accepted_values_never_increase() {
        let eval = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let v = x.iter().map(|xi| xi.cos()).sum::<f64>();
            let g = x.iter().map(|xi| -xi.sin()).collect();
            Ok((v, g))
        };
        let res = lbfgs_minimize(eval, &[0.3, 1.2, -0.7], 60, 10).unwrap();
        let mut last = f64::INFINITY;
        for row in &res.trace {
            assert!(row.value <= last + 1e-15);
            last = row.value;
        }
    }

    #[test]
    fn non_finite_objective_names_parameters() {
        let eval = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            if x[0] > 0.5 {
                Ok((f64::NAN, vec![0.0]))
            } else {
                Ok((-x[0], vec![-1.0]))
            }
        };
        let err = lbfgs_minimize(eval, &[0.4], 50, 10).unwrap_err();
        assert!(matches!(err, Error::NonFinite { what: "objective", .. }));
    }
}
