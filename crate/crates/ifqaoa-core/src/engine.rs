//! Accelerated statevector simulation of the alternating-layer circuit.
//!
//! The cost layer never simulates oracle qubits: the diagonal it would
//! imprint is precomputed (see [`crate::diagonals`]) and multiplied into the
//! statevector pointwise. The approximate variant applies the per-state
//! projection factor instead, records the squared-norm drop as the layer's
//! measurement success probability, and renormalizes. Gradients are exact:
//! a reverse adjoint sweep in the unitary case, and backpropagation through
//! the non-unitary projection plus renormalization in the approximate case.

use num_complex::Complex64;

use crate::diagonals::{DiagonalTables, MAX_QUBITS};
use crate::error::{Error, Result};
use crate::theta::{projection_factor, projection_factor_dgamma};

/// Threshold under which a layer's measurement success probability aborts
/// the run: post-selection below this is physically meaningless and float
/// error dominates.
pub const VANISHING_Q: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Variational angles, one (beta, gamma) pair per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct QaoaParams {
    pub betas: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl QaoaParams {
    pub fn new(betas: Vec<f64>, gammas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() || betas.len() != gammas.len() {
            return Err(Error::InvalidInput(format!(
                "parameter arrays must be equal-length and non-empty, got {} betas / {} gammas",
                betas.len(),
                gammas.len()
            )));
        }
        Ok(Self { betas, gammas })
    }

    /// Constant schedule used to seed the first optimized depth.
    pub fn constant(depth: usize, beta: f64, gamma: f64) -> Self {
        Self {
            betas: vec![beta; depth],
            gammas: vec![gamma; depth],
        }
    }

    pub fn depth(&self) -> usize {
        self.betas.len()
    }

    /// Flat layout (betas then gammas) for the optimizer.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = self.betas.clone();
        flat.extend_from_slice(&self.gammas);
        flat
    }

    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.is_empty() || !flat.len().is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "flat parameter vector of length {} is not 2p",
                flat.len()
            )));
        }
        let p = flat.len() / 2;
        Self::new(flat[..p].to_vec(), flat[p..].to_vec())
    }
}

/// Statevector plus the per-layer projective-measurement success
/// probabilities accumulated during approximate evolution.
#[derive(Debug, Clone)]
pub struct QaoaState {
    n: usize,
    pub amplitudes: Vec<Complex64>,
    pub layer_success: Vec<f64>,
}

impl QaoaState {
    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Product of the recorded per-layer success probabilities.
    pub fn q_total(&self) -> f64 {
        self.layer_success.iter().product()
    }
}

/// How the cost layer is realized.
#[derive(Debug, Clone, Copy)]
pub enum EvolveMode<'a> {
    /// Pointwise e^{-i gamma phase_cost(x)}.
    Exact,
    /// Projection factor built from precomputed theta values (constraint
    /// values with any epsilon offset already applied).
    Approximate { theta_vals: &'a [f64] },
}

/// Uniform superposition over n qubits.
pub fn init_state(n: usize) -> Result<QaoaState> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::SizeOverflow {
            requested: n,
            max: MAX_QUBITS,
        });
    }
    let amp = Complex64::new(1.0 / ((1u64 << n) as f64).sqrt(), 0.0);
    Ok(QaoaState {
        n,
        amplitudes: vec![amp; 1 << n],
        layer_success: Vec::new(),
    })
}

/// Diagonal phase layer: amplitude(x) *= e^{-i gamma cost(x)}.
pub fn apply_phase(state: &mut QaoaState, phase_cost: &[f64], gamma: f64) -> Result<()> {
    check_table(state, phase_cost, "apply_phase")?;
    phase_in_place(&mut state.amplitudes, phase_cost, gamma);
    Ok(())
}

/// Approximate indicator layer: multiplies each amplitude by the projection
/// factor, renormalizes, and returns the layer success probability.
pub fn apply_projection(
    state: &mut QaoaState,
    f_table: &[f64],
    theta_vals: &[f64],
    gamma: f64,
) -> Result<f64> {
    check_table(state, f_table, "apply_projection")?;
    check_table(state, theta_vals, "apply_projection")?;
    let before = state.norm_sqr();
    for (x, amp) in state.amplitudes.iter_mut().enumerate() {
        *amp *= projection_factor(gamma * f_table[x], theta_vals[x]);
    }
    let after = state.norm_sqr();
    let q = after / before;
    if q < VANISHING_Q {
        return Err(Error::VanishingSuccess {
            layer: state.layer_success.len() + 1,
            q,
        });
    }
    let inv = 1.0 / after.sqrt();
    for amp in state.amplitudes.iter_mut() {
        *amp *= inv;
    }
    // mathematically q <= 1; clip float crumbs so recorded probabilities
    // stay in (0, 1]
    let q = q.min(1.0);
    state.layer_success.push(q);
    Ok(q)
}

/// Transverse-field mixer: RX(2 beta) on every qubit.
pub fn apply_mixer(state: &mut QaoaState, beta: f64) {
    mixer_in_place(&mut state.amplitudes, state.n, beta);
}

/// Full alternating evolution from the uniform state.
pub fn evolve(tables: &DiagonalTables, params: &QaoaParams, mode: EvolveMode) -> Result<QaoaState> {
    let mut state = init_state(tables.n_total)?;
    for (layer, (&beta, &gamma)) in params.betas.iter().zip(&params.gammas).enumerate() {
        match mode {
            EvolveMode::Exact => apply_phase(&mut state, &tables.phase_cost, gamma)?,
            EvolveMode::Approximate { theta_vals } => {
                apply_projection(&mut state, &tables.phase_cost, theta_vals, gamma).map_err(
                    |e| match e {
                        Error::VanishingSuccess { q, .. } => Error::VanishingSuccess {
                            layer: layer + 1,
                            q,
                        },
                        other => other,
                    },
                )?;
            }
        }
        apply_mixer(&mut state, beta);
    }
    if matches!(mode, EvolveMode::Exact) {
        state.layer_success = vec![1.0; params.depth()];
    }
    Ok(state)
}

/// Training expectation sum_x cost(x) |amplitude(x)|^2.
pub fn expectation(state: &QaoaState, train_cost: &[f64]) -> Result<f64> {
    check_table(state, train_cost, "expectation")?;
    Ok(state
        .amplitudes
        .iter()
        .zip(train_cost)
        .map(|(a, &c)| c * a.norm_sqr())
        .sum())
}

/// Training objective at the given parameters.
pub fn objective(tables: &DiagonalTables, params: &QaoaParams, mode: EvolveMode) -> Result<f64> {
    let state = evolve(tables, params, mode)?;
    expectation(&state, &tables.train_cost)
}

/// Objective and its exact gradient with respect to all 2p angles.
///
/// Exact mode runs the two-pass adjoint sweep (forward evolution, then a
/// reverse sweep undoing each layer on both the state and the adjoint
/// vector). Approximate mode keeps the pre-projection state of every layer
/// from the forward pass and backpropagates through the non-unitary
/// projection; the objective is the normalized quadratic form
/// <chi|T|chi>/<chi|chi>, so the renormalization contributes the -C dQ/Q
/// term automatically.
pub fn value_and_gradient(
    tables: &DiagonalTables,
    params: &QaoaParams,
    mode: EvolveMode,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    match mode {
        EvolveMode::Exact => value_and_gradient_exact(tables, params),
        EvolveMode::Approximate { theta_vals } => {
            value_and_gradient_approx(tables, params, theta_vals)
        }
    }
}

/// Gradient only; see [`value_and_gradient`].
pub fn gradient(
    tables: &DiagonalTables,
    params: &QaoaParams,
    mode: EvolveMode,
) -> Result<(Vec<f64>, Vec<f64>)> {
    value_and_gradient(tables, params, mode).map(|(_, db, dg)| (db, dg))
}

fn value_and_gradient_exact(
    tables: &DiagonalTables,
    params: &QaoaParams,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let p = params.depth();
    let n = tables.n_total;
    let mut phi = evolve(tables, params, EvolveMode::Exact)?.amplitudes;
    let train = &tables.train_cost;
    let value: f64 = phi
        .iter()
        .zip(train)
        .map(|(a, &c)| c * a.norm_sqr())
        .sum();
    let mut lambda: Vec<Complex64> = phi.iter().zip(train).map(|(a, &c)| c * a).collect();

    let mut d_beta = vec![0.0; p];
    let mut d_gamma = vec![0.0; p];
    for i in (0..p).rev() {
        d_beta[i] = 2.0 * mixer_generator_inner(&lambda, &phi, n).im;
        mixer_in_place(&mut phi, n, -params.betas[i]);
        mixer_in_place(&mut lambda, n, -params.betas[i]);
        d_gamma[i] = 2.0 * diagonal_inner(&lambda, &phi, &tables.phase_cost).im;
        unphase_pair(&mut phi, &mut lambda, &tables.phase_cost, params.gammas[i]);
    }
    Ok((value, d_beta, d_gamma))
}

fn value_and_gradient_approx(
    tables: &DiagonalTables,
    params: &QaoaParams,
    theta_vals: &[f64],
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let p = params.depth();
    let n = tables.n_total;
    let f_table = &tables.phase_cost;
    if theta_vals.len() != f_table.len() {
        return Err(Error::LengthMismatch {
            left: theta_vals.len(),
            right: f_table.len(),
            context: "value_and_gradient",
        });
    }

    // forward, unnormalized; keep each pre-projection state
    let mut chi = init_state(n)?.amplitudes;
    let mut stored: Vec<Vec<Complex64>> = Vec::with_capacity(p);
    for i in 0..p {
        stored.push(chi.clone());
        let before: f64 = chi.iter().map(|a| a.norm_sqr()).sum();
        for (x, amp) in chi.iter_mut().enumerate() {
            *amp *= projection_factor(params.gammas[i] * f_table[x], theta_vals[x]);
        }
        let after: f64 = chi.iter().map(|a| a.norm_sqr()).sum();
        if after / before < VANISHING_Q {
            return Err(Error::VanishingSuccess {
                layer: i + 1,
                q: after / before,
            });
        }
        mixer_in_place(&mut chi, n, params.betas[i]);
    }

    let big_q: f64 = chi.iter().map(|a| a.norm_sqr()).sum();
    let train = &tables.train_cost;
    let value: f64 = chi
        .iter()
        .zip(train)
        .map(|(a, &c)| c * a.norm_sqr())
        .sum::<f64>()
        / big_q;
    let mut lambda: Vec<Complex64> = chi
        .iter()
        .zip(train)
        .map(|(a, &c)| (c - value) * a / big_q)
        .collect();

    let mut d_beta = vec![0.0; p];
    let mut d_gamma = vec![0.0; p];
    for i in (0..p).rev() {
        d_beta[i] = 2.0 * mixer_generator_inner(&lambda, &chi, n).im;
        mixer_in_place(&mut chi, n, -params.betas[i]);
        mixer_in_place(&mut lambda, n, -params.betas[i]);
        let pre = stored.pop().expect("one stored state per layer");
        let mut acc = ZERO;
        for x in 0..lambda.len() {
            let dp = projection_factor_dgamma(params.gammas[i], f_table[x], theta_vals[x]);
            acc += lambda[x].conj() * dp * pre[x];
        }
        d_gamma[i] = 2.0 * acc.re;
        // pull the adjoint vector back through the diagonal projection
        for (x, l) in lambda.iter_mut().enumerate() {
            *l *= projection_factor(params.gammas[i] * f_table[x], theta_vals[x]).conj();
        }
        chi = pre;
    }
    Ok((value, d_beta, d_gamma))
}

fn phase_in_place(amps: &mut [Complex64], phase_cost: &[f64], gamma: f64) {
    for (amp, &c) in amps.iter_mut().zip(phase_cost) {
        *amp *= Complex64::cis(-gamma * c);
    }
}

/// Undoes e^{-i gamma cost} on two vectors with one phase evaluation per
/// entry (the adjoint sweep walks the state and the adjoint in lockstep).
fn unphase_pair(a: &mut [Complex64], b: &mut [Complex64], phase_cost: &[f64], gamma: f64) {
    for x in 0..a.len() {
        let w = Complex64::cis(gamma * phase_cost[x]);
        a[x] *= w;
        b[x] *= w;
    }
}

fn mixer_in_place(amps: &mut [Complex64], n: usize, beta: f64) {
    let (c, s) = (beta.cos(), beta.sin());
    let mis = Complex64::new(0.0, -s);
    for k in 0..n {
        let bit = 1usize << k;
        for base in (0..amps.len()).step_by(bit << 1) {
            for off in 0..bit {
                let i = base + off;
                let j = i + bit;
                let (a, b) = (amps[i], amps[j]);
                amps[i] = c * a + mis * b;
                amps[j] = mis * a + c * b;
            }
        }
    }
}

/// <bra| sum_k X_k |ket> for the mixer-angle derivative.
fn mixer_generator_inner(bra: &[Complex64], ket: &[Complex64], n: usize) -> Complex64 {
    let mut acc = ZERO;
    for k in 0..n {
        let bit = 1usize << k;
        for base in (0..bra.len()).step_by(bit << 1) {
            for off in 0..bit {
                let i = base + off;
                let j = i + bit;
                acc += bra[i].conj() * ket[j] + bra[j].conj() * ket[i];
            }
        }
    }
    acc
}

fn diagonal_inner(bra: &[Complex64], ket: &[Complex64], diag: &[f64]) -> Complex64 {
    let mut acc = ZERO;
    for x in 0..bra.len() {
        acc += bra[x].conj() * (diag[x] * ket[x]);
    }
    acc
}

fn check_table(state: &QaoaState, table: &[f64], context: &'static str) -> Result<()> {
    if table.len() != state.amplitudes.len() {
        Err(Error::LengthMismatch {
            left: table.len(),
            right: state.amplitudes.len(),
            context,
        })
    } else {
        Ok(())
    }
}
