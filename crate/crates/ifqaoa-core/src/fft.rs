//! In-place iterative radix-2 FFT for power-of-two lengths.
//!
//! The sign table construction only ever needs transforms of length 2^M, so
//! no mixed-radix machinery is included. Transforms are unnormalized; the
//! inverse applies the 1/N factor.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Unnormalized transform with kernel e^{-2*pi*i*jk/N}.
pub fn forward(data: &mut [Complex64]) -> Result<()> {
    transform(data, false)
}

/// Inverse transform with kernel e^{+2*pi*i*jk/N} and 1/N normalization.
pub fn inverse(data: &mut [Complex64]) -> Result<()> {
    transform(data, true)?;
    let scale = 1.0 / data.len() as f64;
    for v in data.iter_mut() {
        *v *= scale;
    }
    Ok(())
}

/// Unnormalized inverse kernel; used where the caller folds the 1/N factor
/// into its own prefactor.
pub fn inverse_unnormalized(data: &mut [Complex64]) -> Result<()> {
    transform(data, true)
}

fn transform(data: &mut [Complex64], inverse: bool) -> Result<()> {
    let n = data.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::InvalidInput(format!(
            "fft length {n} is not a power of two"
        )));
    }
    bit_reverse_permute(data);

    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let angle = sign * 2.0 * std::f64::consts::PI / len as f64;
        let w_len = Complex64::from_polar(1.0, angle);
        for base in (0..n).step_by(len) {
            let mut w = Complex64::new(1.0, 0.0);
            for off in 0..len / 2 {
                let a = data[base + off];
                let b = data[base + off + len / 2] * w;
                data[base + off] = a + b;
                data[base + off + len / 2] = a - b;
                w *= w_len;
            }
        }
        len <<= 1;
    }
    Ok(())
}

fn bit_reverse_permute(data: &mut [Complex64]) {
    let n = data.len();
    if n <= 2 {
        return;
    }
    let shift = n.leading_zeros() + 1;
    for i in 0..n {
        let j = i.reverse_bits() >> shift;
        if i < j {
            data.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(input: &[Complex64], inverse: bool) -> Vec<Complex64> {
        let n = input.len();
        let sign = if inverse { 1.0 } else { -1.0 };
        (0..n)
            .map(|j| {
                (0..n)
                    .map(|k| {
                        let angle = sign * 2.0 * std::f64::consts::PI * (j * k) as f64 / n as f64;
                        input[k] * Complex64::from_polar(1.0, angle)
                    })
                    .sum()
            })
            .collect()
    }

    fn random_signal(len: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = crate::rng::SplitMix64::new(seed);
        (0..len)
            .map(|_| Complex64::new(rng.next_open01() - 0.5, rng.next_open01() - 0.5))
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for &len in &[1usize, 2, 4, 8, 32, 128] {
            let signal = random_signal(len, 11 + len as u64);
            let mut out = signal.clone();
            forward(&mut out).unwrap();
            let expect = naive_dft(&signal, false);
            for (a, b) in out.iter().zip(&expect) {
                assert!((a - b).norm() < 1e-9, "len {len}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn forward_then_inverse_is_identity() {
        let signal = random_signal(256, 3);
        let mut data = signal.clone();
        forward(&mut data).unwrap();
        inverse(&mut data).unwrap();
        for (a, b) in data.iter().zip(&signal) {
            assert!((a - b).norm() <= 1e-12 * b.norm().max(1.0));
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        let mut data = vec![Complex64::new(0.0, 0.0); 3];
        assert!(forward(&mut data).is_err());
    }
}
