//! Convolution-quadrature weights generated by the backward Euler symbol.
//!
//! The weights `ω_j` are the Taylor coefficients of `b̂((1 - z)/k)`. For the
//! kernels in [`crate::kernel`] they have the closed form
//!
//! ```text
//! ω_j = k^(ρ-1) (1 + kη)^(1-ρ-j) c_j,   c_0 = 1,   c_j = c_{j-1} (j - 2 + ρ) / j,
//! ```
//!
//! and the contour extraction in [`weights_contour`] recovers them
//! independently from the Laplace transform alone.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{ensure, Result};
use crate::kernel::KernelSpec;

/// Immutable convolution-quadrature weights `ω_0..=ω_{n_max}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CQWeights {
    step: f64,
    kernel: KernelSpec,
    weights: Arc<[f64]>,
}

impl CQWeights {
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn n_max(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, j: usize) -> f64 {
        self.weights[j]
    }

    /// `Σ_{j=1}^n ω_{n-j} f_j` for a history `f_1..f_n`; the newest entry
    /// carries `ω_0`.
    pub fn convolve_history<V: AsRef<[f64]>>(&self, history: &[V]) -> Result<Vec<f64>> {
        let n = history.len();
        ensure!(
            n <= self.weights.len(),
            Length,
            "history of length {n} needs {n} weights but only {} are available",
            self.weights.len()
        );
        let Some(first) = history.first() else {
            return Ok(Vec::new());
        };
        let dim = first.as_ref().len();
        let mut acc = vec![0.0; dim];
        for (j, f) in history.iter().enumerate() {
            let f = f.as_ref();
            ensure!(f.len() == dim, Shape, "history entry {} has length {} != {dim}", j + 1, f.len());
            let w = self.weights[n - 1 - j];
            for (a, x) in acc.iter_mut().zip(f) {
                *a += w * x;
            }
        }
        Ok(acc)
    }

    /// Scalar version of [`Self::convolve_history`].
    pub fn convolve_scalar(&self, history: &[f64]) -> Result<f64> {
        let n = history.len();
        ensure!(n <= self.weights.len(), Length, "history of length {n} exceeds {} weights", self.weights.len());
        Ok(history.iter().enumerate().map(|(j, f)| self.weights[n - 1 - j] * f).sum())
    }
}

/// Coefficients `c_0..=c_n` of `(1 - z)^(1-ρ)`.
pub fn binomial_coefficients(rho: f64, n: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(n + 1);
    c.push(1.0);
    for j in 1..=n {
        let prev = c[j - 1];
        c.push(prev * (j as f64 - 2.0 + rho) / j as f64);
    }
    c
}

/// Closed-form weights for the Riesz and tempered kernels.
pub fn weights_closed_form(kernel: &KernelSpec, k: f64, n_max: usize) -> Result<CQWeights> {
    ensure!(!kernel.is_parabolic(), Domain, "convolution weights are undefined for the parabolic family");
    ensure!(k > 0.0 && k.is_finite(), Domain, "step size must be positive, got {k}");
    ensure!(n_max >= 1, Domain, "n_max must be at least 1");
    let rho = kernel.rho();
    let damp = 1.0 / (1.0 + k * kernel.eta());
    let mut w = binomial_coefficients(rho, n_max);
    let mut scale = k.powf(rho - 1.0) * damp.powf(rho - 1.0);
    for wj in w.iter_mut() {
        *wj *= scale;
        scale *= damp;
    }
    Ok(CQWeights { step: k, kernel: *kernel, weights: w.into() })
}

/// Options for [`weights_contour`]. `None` picks the defaults.
#[derive(Debug, Clone, Copy, Default)]
pub struct ContourOptions {
    pub radius: Option<f64>,
    pub samples: Option<usize>,
}

impl ContourOptions {
    /// Radius `(1 + kη) · 10^(-1/n_max)`: the trapezoidal rule then loses at
    /// most one decade to the `r^-j` rescaling of the largest index.
    pub fn default_radius(kernel: &KernelSpec, k: f64, n_max: usize) -> f64 {
        (1.0 + k * kernel.eta()) * 10f64.powf(-1.0 / n_max.max(1) as f64)
    }

    pub fn default_samples(n_max: usize) -> usize {
        (16 * n_max).max(256).next_power_of_two()
    }
}

/// Weights by trapezoidal Cauchy-coefficient extraction on the circle
/// `|z| = radius`. Independent of the binomial recurrence; used as its oracle.
pub fn weights_contour(kernel: &KernelSpec, k: f64, n_max: usize, opts: ContourOptions) -> Result<CQWeights> {
    ensure!(k > 0.0 && k.is_finite(), Domain, "step size must be positive, got {k}");
    let radius = opts.radius.unwrap_or_else(|| ContourOptions::default_radius(kernel, k, n_max));
    let samples = opts.samples.unwrap_or_else(|| ContourOptions::default_samples(n_max));
    // b̂((1 - z)/k) is analytic for |z| < 1 + kη
    let analytic = 1.0 + k * kernel.eta();
    ensure!(radius > 0.0 && radius < analytic, Domain, "contour radius {radius} must lie in (0, {analytic})");
    ensure!(samples >= 4 * (n_max + 1), Domain, "need at least {} samples, got {samples}", 4 * (n_max + 1));
    ensure!(
        (n_max as f64) * radius.ln() >= -300.0 * std::f64::consts::LN_10,
        Instability,
        "radius^n_max = {radius}^{n_max} underflows"
    );

    let mut buf = Vec::with_capacity(samples);
    for l in 0..samples {
        let theta = 2.0 * std::f64::consts::PI * l as f64 / samples as f64;
        let z = Complex64::from_polar(radius, theta);
        buf.push(kernel.laplace_transform((Complex64::new(1.0, 0.0) - z) / k)?);
    }
    let fft = FftPlanner::new().plan_fft_forward(samples);
    fft.process(&mut buf);

    let inv_r = 1.0 / radius;
    let mut scale = 1.0 / samples as f64;
    let mut weights = Vec::with_capacity(n_max + 1);
    for coeff in buf.iter().take(n_max + 1) {
        weights.push(coeff.re * scale);
        scale *= inv_r;
    }
    Ok(CQWeights { step: k, kernel: *kernel, weights: weights.into() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::special::gamma;
    use approx::assert_relative_eq;

    /// Coefficients of (1 - z)^(-1/2) computed term by term from the
    /// generalized binomial theorem: (-1)^j binom(-1/2, j).
    fn binomial_oracle(a: f64, n: usize) -> Vec<f64> {
        (0..=n)
            .map(|j| {
                let mut num = 1.0;
                for i in 0..j {
                    num *= a - i as f64;
                }
                let fact: f64 = (1..=j).map(|i| i as f64).product();
                (-1f64).powi(j as i32) * num / fact
            })
            .collect()
    }

    #[test]
    fn riesz_one_half_first_coefficients() {
        let k = KernelSpec::riesz(1.5).unwrap();
        let w = weights_closed_form(&k, 1.0, 3).unwrap();
        let oracle = binomial_oracle(-0.5, 3);
        assert_eq!(oracle, vec![1.0, 0.5, 0.375, 0.3125]);
        for (j, o) in oracle.iter().enumerate() {
            assert_relative_eq!(w.get(j), *o, max_relative = 1e-15);
        }
    }

    #[test]
    fn parabolic_limit() {
        let k = KernelSpec::riesz(1.0 + 1e-8).unwrap();
        let w = weights_closed_form(&k, 1.0, 4).unwrap();
        assert_relative_eq!(w.get(0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(w.get(1), 1e-8, max_relative = 1e-7);
    }

    #[test]
    fn step_scaling() {
        for rho in [1.1, 1.5, 1.9] {
            let k = KernelSpec::riesz(rho).unwrap();
            let a = weights_closed_form(&k, 0.5, 32).unwrap();
            let b = weights_closed_form(&k, 1.0, 32).unwrap();
            for j in 0..=32 {
                assert_relative_eq!(a.get(j), 0.5f64.powf(rho - 1.0) * b.get(j), max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn parabolic_family_rejected() {
        let e = weights_closed_form(&KernelSpec::parabolic(), 0.1, 4).unwrap_err();
        assert!(matches!(e, Error::Domain(_)));
    }

    #[test]
    fn contour_matches_closed_form() {
        let k = KernelSpec::riesz(1.5).unwrap();
        let closed = weights_closed_form(&k, 1.0, 16).unwrap();
        let contour = weights_contour(&k, 1.0, 16, ContourOptions::default()).unwrap();
        for j in 0..=16 {
            assert_relative_eq!(contour.get(j), closed.get(j), max_relative = 1e-10);
        }
    }

    #[test]
    fn contour_radius_point_three_is_roundoff_limited() {
        // r^-16 amplifies the O(eps) trapezoidal round-off to ~1e-8.
        let k = KernelSpec::riesz(1.5).unwrap();
        let closed = weights_closed_form(&k, 1.0, 16).unwrap();
        let opts = ContourOptions { radius: Some(0.3), samples: Some(256) };
        let contour = weights_contour(&k, 1.0, 16, opts).unwrap();
        for j in 0..=16 {
            assert_relative_eq!(contour.get(j), closed.get(j), max_relative = 1e-7);
        }
        for j in 0..=8 {
            assert_relative_eq!(contour.get(j), closed.get(j), max_relative = 1e-10);
        }
    }

    #[test]
    fn contour_tempered_without_tempering_is_riesz() {
        let r = KernelSpec::riesz(1.3).unwrap();
        let t = KernelSpec::tempered(1.3, 0.0).unwrap();
        let a = weights_contour(&r, 0.1, 64, ContourOptions::default()).unwrap();
        let b = weights_contour(&t, 0.1, 64, ContourOptions::default()).unwrap();
        for j in 0..=64 {
            assert_relative_eq!(a.get(j), b.get(j), max_relative = 1e-10);
        }
    }

    #[test]
    fn contour_single_weight() {
        let k = KernelSpec::tempered(1.5, 2.0).unwrap();
        let step = 0.25;
        let w = weights_contour(&k, step, 0, ContourOptions::default()).unwrap();
        let expected = step.powf(0.5) * (1.0 + step * 2.0f64).powf(-0.5);
        assert_relative_eq!(w.get(0), expected, max_relative = 1e-10);
    }

    #[test]
    fn contour_guards() {
        let k = KernelSpec::riesz(1.5).unwrap();
        let tiny = ContourOptions { radius: Some(1e-3), samples: Some(1024) };
        assert!(matches!(weights_contour(&k, 1.0, 120, tiny), Err(Error::Instability(_))));
        let few = ContourOptions { radius: None, samples: Some(8) };
        assert!(matches!(weights_contour(&k, 1.0, 16, few), Err(Error::Domain(_))));
        let outside = ContourOptions { radius: Some(1.0), samples: None };
        assert!(matches!(weights_contour(&k, 1.0, 16, outside), Err(Error::Domain(_))));
    }

    #[test]
    fn weights_positive_and_decreasing() {
        for rho in [1.1, 1.25, 1.5, 1.75, 1.9] {
            for kernel in [KernelSpec::riesz(rho).unwrap(), KernelSpec::tempered(rho, 2.0).unwrap()] {
                let w = weights_closed_form(&kernel, 0.1, 2000).unwrap();
                assert!(w.as_slice().iter().all(|&x| x > 0.0));
                for j in 1..2000 {
                    assert!(w.get(j + 1) < w.get(j), "rho={rho} j={j}");
                }
            }
        }
    }

    #[test]
    fn coefficient_asymptotics() {
        for rho in [1.1, 1.25, 1.5, 1.75, 1.9] {
            let c = binomial_coefficients(rho, 10_000);
            let j = 10_000f64;
            let scaled = c[10_000] * j.powf(2.0 - rho);
            let target = 1.0 / gamma(rho - 1.0);
            assert!((scaled / target - 1.0).abs() < 0.02, "rho={rho}: {scaled} vs {target}");
        }
    }

    #[test]
    fn convolution_conventions() {
        let k = KernelSpec::riesz(1.5).unwrap();
        let w = weights_closed_form(&k, 0.1, 8).unwrap();
        let zero = vec![vec![0.0; 3]; 5];
        assert_eq!(w.convolve_history(&zero).unwrap(), vec![0.0; 3]);
        let one = vec![vec![1.0, -2.0]];
        assert_eq!(w.convolve_history(&one).unwrap(), vec![w.get(0), -2.0 * w.get(0)]);
        let hist = vec![vec![1.0], vec![10.0], vec![100.0]];
        let v = w.convolve_history(&hist).unwrap()[0];
        assert_relative_eq!(v, w.get(2) + 10.0 * w.get(1) + 100.0 * w.get(0), max_relative = 1e-15);
        let long = vec![vec![1.0]; 10];
        assert!(matches!(w.convolve_history(&long), Err(Error::Length(_))));
    }

    #[test]
    fn quadrature_of_constant_is_first_order() {
        // Σ_{j=1}^n ω_{n-j} ≈ ∫_0^T b = T^(ρ-1)/Γ(ρ)
        let rho = 1.5;
        let kernel = KernelSpec::riesz(rho).unwrap();
        let t: f64 = 1.0;
        let exact = t.powf(rho - 1.0) / gamma(rho);
        let mut rows = Vec::new();
        for n in [16usize, 32, 64, 128, 256, 512] {
            let k = t / n as f64;
            let w = weights_closed_form(&kernel, k, n).unwrap();
            let approx = w.convolve_scalar(&vec![1.0; n]).unwrap();
            rows.push((k.ln(), (approx - exact).abs().ln()));
        }
        let slope = crate::experiments::rate::least_squares(&rows).unwrap().slope;
        assert!((0.9..=1.1).contains(&slope), "slope {slope}");
    }
}
