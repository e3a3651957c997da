//! Approximate sign function of the M-ancilla indicator oracle and the
//! associated projection factor.
//!
//! The oracle writes a constraint value g into an M-qubit two's-complement
//! register, phases the compute register controlled on the sign bit, and
//! uncomputes. Tracing that circuit against the measured-zero branch gives a
//! complex factor per basis state,
//!
//!   P_M(a, g) = (e^{-ia} + 1)/2 + (e^{-ia} - 1)/2 * theta_M(g),
//!
//! where theta_M is exactly sign(g) on the representable integers (with
//! sign(0) = +1) and smooth in between. theta_M is a trigonometric sum over
//! the odd register frequencies, so one inverse FFT per fractional offset
//! evaluates it on a whole super-sampled grid at once; lookups interpolate
//! linearly between grid points and wrap modulo 2^M, mirroring the physical
//! overflow of the phase register.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;

const TAU: f64 = std::f64::consts::TAU;

/// Helper coefficient of the oracle trace: the discrete sum over register
/// states z of e^{-ia(1-z1)} e^{-2 pi i z k / 2^M}, normalized by 2^M.
/// Nonzero only for k = 0 and odd k.
pub fn phi(k: i64, m: u32, gamma_f: f64) -> Result<Complex64> {
    let size = 1i64 << m;
    if k <= -size || k >= size {
        return Err(Error::Range(format!("phi frequency k = {k} for M = {m}")));
    }
    let e_cost = Complex64::from_polar(1.0, -gamma_f);
    if k == 0 {
        return Ok((e_cost + 1.0) / 2.0);
    }
    if k % 2 == 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let denom = 1.0 - Complex64::from_polar(1.0, -TAU * k as f64 / size as f64);
    Ok((e_cost - 1.0) * 2.0 / (size as f64 * denom))
}

/// gamma-independent odd-frequency coefficient c(k) with
/// phi(k) = (e^{-ia} - 1) * c(k) for odd k.
fn odd_coefficient(k: usize, size: usize) -> Complex64 {
    let denom = 1.0 - Complex64::from_polar(1.0, -TAU * k as f64 / size as f64);
    2.0 / (size as f64 * denom)
}

/// Direct evaluation of theta_M at a single point: the closed-form sum over
/// odd frequencies, O(2^M) per call. This is the reference path; table
/// construction must agree with it to 1e-9.
pub fn theta_exact(m: u32, g: f64) -> f64 {
    let size = 1usize << m;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut k = 1usize;
    while k < size {
        let weight = 1.0 - k as f64 / size as f64;
        let num = Complex64::from_polar(1.0, TAU * g * k as f64 / size as f64);
        acc += weight * num * odd_coefficient(k, size);
        k += 2;
    }
    4.0 * acc.re
}

/// Super-sampled table of theta_M on the grid l + j/2^m for l in the
/// two's-complement range and j in 0..2^m.
///
/// Layout: index = (l mod 2^M) * 2^m + j.
#[derive(Debug, Clone)]
pub struct ThetaTable {
    pub m_qpe: u32,
    pub supersample: u32,
    pub values: Vec<f64>,
}

/// Default super-sampling factor: 8 grid points per unit interval.
pub const DEFAULT_SUPERSAMPLE: u32 = 3;

/// Builds the theta table with one inverse FFT of length 2^M per fractional
/// offset, O(M 2^(M+m)) total.
pub fn build_theta_table(m_qpe: u32, supersample: u32) -> Result<ThetaTable> {
    if !(2..=20).contains(&m_qpe) {
        return Err(Error::Range(format!("QPE register size M = {m_qpe}")));
    }
    if supersample > 6 {
        return Err(Error::Range(format!("super-sampling factor m = {supersample}")));
    }
    let size = 1usize << m_qpe;
    let subs = 1usize << supersample;
    let mut values = vec![0.0; size * subs];
    let mut spectrum = vec![Complex64::new(0.0, 0.0); size];
    for j in 0..subs {
        let delta = j as f64 / subs as f64;
        for slot in spectrum.iter_mut() {
            *slot = Complex64::new(0.0, 0.0);
        }
        let mut k = 1usize;
        while k < size {
            let weight = 1.0 - k as f64 / size as f64;
            let twist = Complex64::from_polar(1.0, TAU * delta * k as f64 / size as f64);
            spectrum[k] = weight * odd_coefficient(k, size) * twist;
            k += 2;
        }
        fft::inverse_unnormalized(&mut spectrum)?;
        for (l, v) in spectrum.iter().enumerate() {
            values[l * subs + j] = 4.0 * v.re;
        }
    }
    Ok(ThetaTable {
        m_qpe,
        supersample,
        values,
    })
}

impl ThetaTable {
    /// theta_M(g) by table lookup: reduces g modulo 2^M (two's-complement
    /// wraparound) and interpolates linearly between the two nearest
    /// super-sample points.
    pub fn lookup(&self, g: f64) -> f64 {
        let total = self.values.len();
        // position in super-sample units; the scaling by a power of two is
        // exact, so wraparound commutes with it
        let t = g * (1u64 << self.supersample) as f64;
        let t = t.rem_euclid(total as f64);
        let base = t.floor();
        let frac = t - base;
        let i0 = (base as usize) % total;
        let i1 = (i0 + 1) % total;
        let v0 = self.values[i0];
        let v1 = self.values[i1];
        v0 + frac * (v1 - v0)
    }

    /// Signed grid point for table slot index, for CSV dumps.
    pub fn grid_point(&self, index: usize) -> f64 {
        let subs = 1usize << self.supersample;
        let half = 1i64 << (self.m_qpe - 1);
        let l = (index / subs) as i64;
        let signed = if l >= half { l - (half << 1) } else { l };
        signed as f64 + (index % subs) as f64 / subs as f64
    }
}

/// Complex amplitude factor the approximate indicator layer applies to one
/// basis state: identity for theta = -1, the full cost phase for theta = +1,
/// sub-unit magnitude in between.
pub fn projection_factor(gamma_f: f64, theta_val: f64) -> Complex64 {
    let e_cost = Complex64::from_polar(1.0, -gamma_f);
    (e_cost + 1.0) / 2.0 + (e_cost - 1.0) / 2.0 * theta_val
}

/// Derivative of [`projection_factor`] with respect to gamma, for a fixed
/// cost value f: d/dgamma P(gamma * f, theta) = -i f e^{-i gamma f} (1 + theta) / 2.
pub fn projection_factor_dgamma(gamma: f64, f_val: f64, theta_val: f64) -> Complex64 {
    let e_cost = Complex64::from_polar(1.0, -gamma * f_val);
    Complex64::new(0.0, -f_val) * e_cost * (1.0 + theta_val) / 2.0
}
