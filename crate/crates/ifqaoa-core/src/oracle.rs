//! Gate-level reference simulator for the indicator-oracle cost layer.
//!
//! Builds the literal circuit on a compute register plus an M-qubit ancilla:
//! phase estimation writing g(x) into the ancilla in two's complement, the
//! cost phase controlled on the ancilla sign bit, uncomputation, and a
//! projective measurement of the ancilla back onto zero. The transforms act
//! as dense matrices on the ancilla subspace; this path validates the
//! mathematics of the accelerated engine and never touches the sign-function
//! tables, which is what makes the cross-check independent.
//!
//! Register layout: compute bits are the low-order index bits, the ancilla
//! occupies the high-order bits. The ancilla sign bit z1 is its most
//! significant bit.

use num_complex::Complex64;

use crate::engine::QaoaParams;
use crate::error::{Error, Result};

/// Everything above this total qubit count is out of scope for a reference
/// path that exists to be obviously correct, not fast.
pub const ORACLE_MAX_QUBITS: usize = 14;

const TAU: f64 = std::f64::consts::TAU;

/// Compute register tensored with the QPE ancilla.
#[derive(Debug, Clone)]
pub struct FullState {
    pub n_main: usize,
    pub n_anc: usize,
    pub amplitudes: Vec<Complex64>,
}

impl FullState {
    /// Tensors a compute-register vector with an all-zero ancilla.
    pub fn from_main(main: &[Complex64], n_anc: usize) -> Result<Self> {
        if !main.len().is_power_of_two() {
            return Err(Error::InvalidInput(
                "main register length must be a power of two".into(),
            ));
        }
        let n_main = main.len().trailing_zeros() as usize;
        if n_main + n_anc > ORACLE_MAX_QUBITS {
            return Err(Error::SizeOverflow {
                requested: n_main + n_anc,
                max: ORACLE_MAX_QUBITS,
            });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); main.len() << n_anc];
        amplitudes[..main.len()].copy_from_slice(main);
        Ok(FullState {
            n_main,
            n_anc,
            amplitudes,
        })
    }

    fn main_len(&self) -> usize {
        1 << self.n_main
    }

    fn anc_len(&self) -> usize {
        1 << self.n_anc
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Phase estimation of the diagonal constraint Hamiltonian: Hadamards on the
/// ancilla, the phase ladder e^{2 pi i g(x) k / 2^M} on ancilla branch k, and
/// a dense inverse QFT on the ancilla.
pub fn qpe_forward(state: &mut FullState, g_table: &[f64]) -> Result<()> {
    check_main(state, g_table)?;
    hadamard_ancilla(state);
    phase_ladder(state, g_table, 1.0);
    qft_ancilla(state, false)
}

/// Exact inverse of [`qpe_forward`].
pub fn qpe_inverse(state: &mut FullState, g_table: &[f64]) -> Result<()> {
    check_main(state, g_table)?;
    qft_ancilla(state, true)?;
    phase_ladder(state, g_table, -1.0);
    hadamard_ancilla(state);
    Ok(())
}

/// Cost phase e^{-i gamma f(x)} on branches whose ancilla sign bit is zero
/// (negated control on z1).
pub fn controlled_cost(state: &mut FullState, f_table: &[f64], gamma: f64) -> Result<()> {
    check_main(state, f_table)?;
    let main_len = state.main_len();
    let sign_bit = state.anc_len() >> 1;
    for anc in 0..state.anc_len() {
        if anc & sign_bit != 0 {
            continue;
        }
        let base = anc * main_len;
        for (x, &f) in f_table.iter().enumerate() {
            state.amplitudes[base + x] *= Complex64::cis(-gamma * f);
        }
    }
    Ok(())
}

/// Projects the ancilla onto |0>, returning the renormalized compute
/// register and the success probability.
pub fn measure_ancilla_zero(state: &FullState) -> Result<(Vec<Complex64>, f64)> {
    let main_len = state.main_len();
    let branch = &state.amplitudes[..main_len];
    let prob: f64 = branch.iter().map(|a| a.norm_sqr()).sum();
    if prob < 1e-15 {
        return Err(Error::VanishingSuccess { layer: 0, q: prob });
    }
    let inv = 1.0 / prob.sqrt();
    Ok((branch.iter().map(|a| a * inv).collect(), prob))
}

/// Reference evolution of the complete alternating circuit: per layer, the
/// oracle cost routine (QPE, controlled cost, inverse QPE, ancilla
/// measurement) followed by the mixer on the compute register. Returns the
/// final compute-register state and the per-layer measurement probabilities.
pub fn full_layer_oracle(
    f_table: &[f64],
    g_table: &[f64],
    params: &QaoaParams,
    m_anc: usize,
) -> Result<(Vec<Complex64>, Vec<f64>)> {
    if f_table.len() != g_table.len() {
        return Err(Error::LengthMismatch {
            left: f_table.len(),
            right: g_table.len(),
            context: "full_layer_oracle",
        });
    }
    let main_len = f_table.len();
    let amp = Complex64::new(1.0 / (main_len as f64).sqrt(), 0.0);
    let mut main = vec![amp; main_len];
    let mut probs = Vec::with_capacity(params.depth());
    for (&beta, &gamma) in params.betas.iter().zip(&params.gammas) {
        let mut state = FullState::from_main(&main, m_anc)?;
        qpe_forward(&mut state, g_table)?;
        controlled_cost(&mut state, f_table, gamma)?;
        qpe_inverse(&mut state, g_table)?;
        let (collapsed, prob) = measure_ancilla_zero(&state)?;
        main = collapsed;
        probs.push(prob);
        rx_all(&mut main, beta);
    }
    Ok((main, probs))
}

fn hadamard_ancilla(state: &mut FullState) {
    let main_len = state.main_len();
    let norm = std::f64::consts::FRAC_1_SQRT_2;
    for q in 0..state.n_anc {
        let bit = main_len << q;
        for base in (0..state.amplitudes.len()).step_by(bit << 1) {
            for off in 0..bit {
                let i = base + off;
                let j = i + bit;
                let (a, b) = (state.amplitudes[i], state.amplitudes[j]);
                state.amplitudes[i] = norm * (a + b);
                state.amplitudes[j] = norm * (a - b);
            }
        }
    }
}

/// Controlled-phase ladder: branch (k, x) picks up e^{sign * 2 pi i g(x) k / 2^M}.
fn phase_ladder(state: &mut FullState, g_table: &[f64], sign: f64) {
    let main_len = state.main_len();
    let anc_len = state.anc_len() as f64;
    for anc in 0..state.anc_len() {
        let base = anc * main_len;
        for (x, &g) in g_table.iter().enumerate() {
            let angle = sign * TAU * g * anc as f64 / anc_len;
            state.amplitudes[base + x] *= Complex64::cis(angle);
        }
    }
}

/// Dense QFT (or inverse) on the ancilla subspace, one matrix-vector product
/// per compute-register branch.
fn qft_ancilla(state: &mut FullState, forward: bool) -> Result<()> {
    let main_len = state.main_len();
    let anc_len = state.anc_len();
    let norm = 1.0 / (anc_len as f64).sqrt();
    let sign = if forward { 1.0 } else { -1.0 };
    let mut column = vec![Complex64::new(0.0, 0.0); anc_len];
    let mut result = vec![Complex64::new(0.0, 0.0); anc_len];
    for x in 0..main_len {
        for (k, slot) in column.iter_mut().enumerate() {
            *slot = state.amplitudes[k * main_len + x];
        }
        for (z, out) in result.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &v) in column.iter().enumerate() {
                let angle = sign * TAU * (z * k) as f64 / anc_len as f64;
                acc += v * Complex64::cis(angle);
            }
            *out = norm * acc;
        }
        for (z, &v) in result.iter().enumerate() {
            state.amplitudes[z * main_len + x] = v;
        }
    }
    Ok(())
}

/// RX(2 beta) on every qubit of a bare compute-register vector.
fn rx_all(amps: &mut [Complex64], beta: f64) {
    let n = amps.len().trailing_zeros() as usize;
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

fn check_main(state: &FullState, table: &[f64]) -> Result<()> {
    if table.len() != state.main_len() {
        Err(Error::LengthMismatch {
            left: table.len(),
            right: state.main_len(),
            context: "oracle register table",
        })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_main(n: usize) -> Vec<Complex64> {
        vec![Complex64::new(1.0 / ((1usize << n) as f64).sqrt(), 0.0); 1 << n]
    }

    fn basis_main(n: usize, x: usize) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); 1 << n];
        v[x] = Complex64::new(1.0, 0.0);
        v
    }

    #[test]
    fn qpe_writes_integer_g_in_twos_complement() {
        let g = vec![0.0, 2.0, -1.0, 3.0];
        let m = 3usize;
        let mut state = FullState::from_main(&uniform_main(2), m).unwrap();
        qpe_forward(&mut state, &g).unwrap();
        for (x, &gx) in g.iter().enumerate() {
            let expect_anc = (gx as i64).rem_euclid(1 << m) as usize;
            for anc in 0..(1 << m) {
                let amp = state.amplitudes[anc * 4 + x];
                if anc == expect_anc {
                    assert!((amp.norm() - 0.5).abs() < 1e-10, "x={x} anc={anc}");
                } else {
                    assert!(amp.norm() < 1e-10, "x={x} anc={anc} leaked {amp}");
                }
            }
        }
        // negative g sets the sign bit
        let sign = 1 << (m - 1);
        assert!((g[2] as i64).rem_euclid(1 << m) as usize & sign != 0);
    }

    #[test]
    fn qpe_keeps_zero_constraint_in_zero_branch() {
        let g = vec![0.0; 4];
        let mut state = FullState::from_main(&uniform_main(2), 3).unwrap();
        qpe_forward(&mut state, &g).unwrap();
        let (collapsed, prob) = measure_ancilla_zero(&state).unwrap();
        assert!((prob - 1.0).abs() < 1e-12);
        for (a, b) in collapsed.iter().zip(uniform_main(2)) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn non_integer_g_spreads_by_the_kernel_formula() {
        let g_val = 1.37;
        let m = 3usize;
        let size = 1 << m;
        let mut state = FullState::from_main(&basis_main(1, 0), m).unwrap();
        qpe_forward(&mut state, &[g_val, 0.0]).unwrap();
        for z in 0..size {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..size {
                acc += Complex64::cis(TAU * (g_val - z as f64) * k as f64 / size as f64);
            }
            let want = (acc / size as f64).norm_sqr();
            let got = state.amplitudes[z * 2].norm_sqr();
            assert!((got - want).abs() < 1e-10, "z={z}: {got} vs {want}");
        }
    }

    #[test]
    fn qpe_uncomputes_exactly() {
        let g = vec![0.6, -2.3, 1.0, 4.4];
        let mut state = FullState::from_main(&uniform_main(2), 4).unwrap();
        let original = state.amplitudes.clone();
        qpe_forward(&mut state, &g).unwrap();
        qpe_inverse(&mut state, &g).unwrap();
        for (a, b) in state.amplitudes.iter().zip(&original) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn controlled_cost_cases() {
        let f = vec![1.0, 2.0];
        let mut state = FullState::from_main(&uniform_main(1), 2).unwrap();
        hadamard_ancilla(&mut state);
        let before = state.amplitudes.clone();
        controlled_cost(&mut state, &f, 0.0).unwrap();
        assert_eq!(state.amplitudes, before);

        // with every branch on z1 = 0 the phase is unconditional
        let mut state = FullState::from_main(&uniform_main(1), 2).unwrap();
        controlled_cost(&mut state, &f, 0.8).unwrap();
        for (x, &fx) in f.iter().enumerate() {
            let want = Complex64::cis(-0.8 * fx) / 2f64.sqrt();
            assert!((state.amplitudes[x] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn controlled_cost_mixed_branches_by_hand() {
        // N=2 main, M=3 ancilla: put amplitude on two ancilla branches, one
        // on each side of the sign bit, and phase only the z1=0 side.
        let f = vec![0.5, 1.5, 2.5, 3.5];
        let mut state = FullState::from_main(&uniform_main(2), 3).unwrap();
        let main_len = 4usize;
        // move the x=1 branch to ancilla 5 (sign bit set), x=2 to ancilla 2
        state.amplitudes.swap(1, 5 * main_len + 1);
        state.amplitudes.swap(2, 2 * main_len + 2);
        controlled_cost(&mut state, &f, 1.1).unwrap();
        // hand enumeration: anc 0 and anc 2 phased, anc 5 untouched
        let half = Complex64::new(0.5, 0.0);
        assert!((state.amplitudes[0] - half * Complex64::cis(-1.1 * 0.5)).norm() < 1e-12);
        assert!((state.amplitudes[2 * main_len + 2] - half * Complex64::cis(-1.1 * 2.5)).norm() < 1e-12);
        assert!((state.amplitudes[5 * main_len + 1] - half).norm() < 1e-12);
        assert!((state.amplitudes[3] - half * Complex64::cis(-1.1 * 3.5)).norm() < 1e-12);
    }

    #[test]
    fn exact_integer_case_measures_zero_surely() {
        let g = vec![3.0, -2.0, 0.0, 1.0];
        let f = vec![-1.0, -2.0, 0.0, -3.0];
        let m = 3usize;
        let mut state = FullState::from_main(&uniform_main(2), m).unwrap();
        qpe_forward(&mut state, &g).unwrap();
        controlled_cost(&mut state, &f, 0.9).unwrap();
        qpe_inverse(&mut state, &g).unwrap();
        let (_, prob) = measure_ancilla_zero(&state).unwrap();
        assert!((prob - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_branch_probability_matches_projection_factor() {
        let m = 4usize;
        let gamma = 0.7;
        for &g_val in &[2.0, -3.0, 0.25, -0.75, 1.4] {
            let f_val = -2.3;
            let mut state = FullState::from_main(&basis_main(1, 0), m).unwrap();
            let g = [g_val, 0.0];
            let f = [f_val, 0.0];
            qpe_forward(&mut state, &g).unwrap();
            controlled_cost(&mut state, &f, gamma).unwrap();
            qpe_inverse(&mut state, &g).unwrap();
            let branch = state.amplitudes[0];
            let predicted = crate::theta::projection_factor(
                gamma * f_val,
                crate::theta::theta_exact(m as u32, g_val),
            );
            assert!(
                (branch - predicted).norm() < 1e-9,
                "g={g_val}: {branch} vs {predicted}"
            );
            let (_, prob) = measure_ancilla_zero(&state).unwrap();
            assert!((prob - predicted.norm_sqr()).abs() < 1e-9);
        }
    }

    #[test]
    fn trivial_layer_returns_uniform_state() {
        let params = QaoaParams::new(vec![0.0], vec![0.0]).unwrap();
        let f = vec![-1.0, -2.0, -3.0, 0.0];
        let g = vec![1.0, 0.0, -1.0, 2.0];
        let (main, probs) = full_layer_oracle(&f, &g, &params, 3).unwrap();
        for a in &main {
            assert!((a - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        }
        assert!(probs.iter().all(|&p| (p - 1.0).abs() < 1e-12));
    }

    #[test]
    fn size_cap_enforced() {
        let main = uniform_main(10);
        assert!(FullState::from_main(&main, 5).is_err());
        assert!(FullState::from_main(&main, 4).is_ok());
    }
}
