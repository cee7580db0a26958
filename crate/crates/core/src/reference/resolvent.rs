use std::sync::Arc;

use crate::error::{ensure, Result};
use crate::kernel::{KernelFamily, KernelSpec};
use crate::quadrature::{weights_closed_form, CQWeights};

use super::mittag_leffler::{mittag_leffler, mittag_leffler_table, MittagLefflerTable};

/// Discrete resolvent `b_0..=b_N` of one mode: the scheme applied to
/// `x' + λ ∫ b(t-s) x(s) ds = 0`, `x(0) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferCoefficients {
    lambda: f64,
    weights: CQWeights,
    values: Vec<f64>,
}

impl TransferCoefficients {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn weights(&self) -> &CQWeights {
        &self.weights
    }

    /// `b_0..=b_N`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, n: usize) -> f64 {
        self.values[n]
    }

    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    /// `b_n - b_{n-1} + kλ Σ_{j=1}^n ω_{n-j} b_j` for `n ≥ 1`.
    pub fn residual(&self, n: usize) -> f64 {
        let k = self.weights.step();
        let w = self.weights.as_slice();
        let conv: f64 = (1..=n).map(|j| w[n - j] * self.values[j]).sum();
        self.values[n] - self.values[n - 1] + k * self.lambda * conv
    }
}

/// Solve `(1 + kλω_0) b_n = b_{n-1} - kλ Σ_{j=1}^{n-1} ω_{n-j} b_j`.
pub fn transfer_coefficients(lambda: f64, weights: &CQWeights, n: usize) -> Result<TransferCoefficients> {
    ensure!(n <= weights.n_max(), Length, "{n} steps need {} weights, have {}", n + 1, weights.n_max() + 1);
    ensure!(lambda >= 0.0 && lambda.is_finite(), Domain, "lambda must be finite and >= 0, got {lambda}");
    let values = transfer_values(lambda, weights.step(), weights.as_slice(), n);
    Ok(TransferCoefficients { lambda, weights: weights.clone(), values })
}

fn transfer_values(lambda: f64, k: f64, w: &[f64], n: usize) -> Vec<f64> {
    let kl = k * lambda;
    let denom = 1.0 + kl * w[0];
    let mut b = Vec::with_capacity(n + 1);
    b.push(1.0);
    for m in 1..=n {
        // Σ_{j=1}^{m-1} ω_{m-j} b_j
        let hist: f64 = b[1..m].iter().zip(w[1..m].iter().rev()).map(|(bj, wj)| bj * wj).sum();
        b.push((b[m - 1] - kl * hist) / denom);
    }
    b
}

/// `b_0..=b_n` for any kernel family at step `k`; the parabolic family gives
/// `(1 + kλ)^(-n)`.
pub fn discrete_resolvent(kernel: &KernelSpec, lambda: f64, k: f64, n: usize) -> Result<Vec<f64>> {
    if kernel.is_parabolic() {
        let r = 1.0 / (1.0 + k * lambda);
        return Ok(std::iter::successors(Some(1.0), |b| Some(b * r)).take(n + 1).collect());
    }
    let w = weights_closed_form(kernel, k, n.max(1))?;
    Ok(transfer_values(lambda, k, w.as_slice(), n))
}

/// A value of the scalar resolvent `s(t)` with an error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventEval {
    pub rho: f64,
    pub lambda: f64,
    pub t: f64,
    pub value: f64,
    /// Zero for closed forms; the Richardson correction size otherwise.
    pub error_estimate: f64,
}

/// Steps of the finer solve used by [`resolvent_numeric`].
pub const NUMERIC_STEPS: usize = 1 << 14;

/// `s(t)` solving `s' + λ ∫_0^t b(t-r) s(r) dr = 0`, `s(0) = 1`.
///
/// Riesz kernels use `E_ρ(-λ t^ρ)`, the parabolic family `e^(-λt)`; the
/// tempered kernel has no elementary closed form and goes through
/// [`resolvent_numeric`].
pub fn resolvent_s(kernel: &KernelSpec, lambda: f64, t: f64) -> Result<ResolventEval> {
    ensure!(t >= 0.0, Domain, "resolvent evaluated at t = {t} < 0");
    ensure!(lambda >= 0.0, Domain, "lambda must be >= 0, got {lambda}");
    let rho = kernel.rho();
    let value = match kernel.family() {
        KernelFamily::Parabolic => (-lambda * t).exp(),
        KernelFamily::Riesz => mittag_leffler(rho, -lambda * t.powf(rho))?,
        KernelFamily::Tempered => return resolvent_numeric(kernel, lambda, t, NUMERIC_STEPS),
    };
    Ok(ResolventEval { rho, lambda, t, value, error_estimate: 0.0 })
}

/// Backward Euler CQ at `k = t/steps` and `k = 2t/steps`, combined by
/// first-order Richardson extrapolation.
pub fn resolvent_numeric(kernel: &KernelSpec, lambda: f64, t: f64, steps: usize) -> Result<ResolventEval> {
    ensure!(steps >= 2 && steps % 2 == 0, Domain, "numeric resolvent needs an even step count >= 2");
    let rho = kernel.rho();
    if t == 0.0 {
        return Ok(ResolventEval { rho, lambda, t, value: 1.0, error_estimate: 0.0 });
    }
    let fine = *discrete_resolvent(kernel, lambda, t / steps as f64, steps)?.last().unwrap();
    let coarse = *discrete_resolvent(kernel, lambda, 2.0 * t / steps as f64, steps / 2)?.last().unwrap();
    Ok(ResolventEval { rho, lambda, t, value: 2.0 * fine - coarse, error_estimate: (fine - coarse).abs() })
}

/// `t ↦ s(t)` for one eigenvalue, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub enum Resolvent {
    Exponential {
        lambda: f64,
    },
    /// `E_ρ(-λ t^ρ)` through the shared table for `ρ`.
    MittagLeffler {
        rho: f64,
        lambda: f64,
        table: Arc<MittagLefflerTable>,
    },
    /// Richardson-extrapolated CQ values on a uniform grid of `[0, horizon]`,
    /// linearly interpolated.
    Tabulated {
        step: f64,
        values: Vec<f64>,
    },
}

/// Grid used by [`Resolvent::new`] for tempered kernels.
pub const TABLE_STEPS: usize = 1 << 12;

impl Resolvent {
    pub fn new(kernel: &KernelSpec, lambda: f64, horizon: f64) -> Result<Self> {
        ensure!(lambda >= 0.0 && lambda.is_finite(), Domain, "lambda must be finite and >= 0, got {lambda}");
        Ok(match kernel.family() {
            KernelFamily::Parabolic => Self::Exponential { lambda },
            KernelFamily::Riesz => {
                Self::MittagLeffler { rho: kernel.rho(), lambda, table: mittag_leffler_table(kernel.rho())? }
            }
            KernelFamily::Tempered => {
                ensure!(horizon > 0.0, Domain, "tabulated resolvent needs a positive horizon");
                let n = TABLE_STEPS;
                let fine = discrete_resolvent(kernel, lambda, horizon / n as f64, n)?;
                let coarse = discrete_resolvent(kernel, lambda, 2.0 * horizon / n as f64, n / 2)?;
                let mut values = Vec::with_capacity(n / 2 + 1);
                for (i, c) in coarse.iter().enumerate() {
                    values.push(2.0 * fine[2 * i] - c);
                }
                Self::Tabulated { step: 2.0 * horizon / n as f64, values }
            }
        })
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        match *self {
            Self::Exponential { lambda } => Ok((-lambda * t).exp()),
            Self::MittagLeffler { rho, lambda, ref table } => Ok(table.eval(lambda * t.max(0.0).powf(rho))),
            Self::Tabulated { step, ref values } => {
                let pos = t / step;
                let i = pos.floor() as usize;
                ensure!(i < values.len(), Domain, "t = {t} beyond the tabulated horizon");
                if i + 1 == values.len() {
                    return Ok(values[i]);
                }
                let s = pos - i as f64;
                Ok(values[i] * (1.0 - s) + values[i + 1] * s)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::rate::least_squares;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn one_step_and_zero_eigenvalue() {
        let kernel = KernelSpec::riesz(1.5).unwrap();
        let w = weights_closed_form(&kernel, 0.1, 10).unwrap();
        let b = transfer_coefficients(3.0, &w, 10).unwrap();
        assert_relative_eq!(b.get(1), 1.0 / (1.0 + 0.1 * 3.0 * w.get(0)), max_relative = 1e-15);
        let b0 = transfer_coefficients(0.0, &w, 10).unwrap();
        assert!(b0.values().iter().all(|&v| v == 1.0));
        assert!(transfer_coefficients(1.0, &w, 11).is_err());
    }

    #[test]
    fn recurrence_residual_vanishes() {
        let kernel = KernelSpec::tempered(1.3, 2.0).unwrap();
        let w = weights_closed_form(&kernel, 1.0 / 64.0, 256).unwrap();
        let b = transfer_coefficients(PI * PI * 9.0, &w, 256).unwrap();
        for n in 1..=256 {
            let scale = b.get(n - 1).abs().max(b.get(n).abs()).max(1e-300);
            assert!(b.residual(n).abs() <= 1e-12 * scale.max(1.0), "n = {n}");
        }
    }

    #[test]
    fn parabolic_closed_form() {
        let b = discrete_resolvent(&KernelSpec::parabolic(), 4.0, 0.25, 5).unwrap();
        for (n, v) in b.iter().enumerate() {
            assert_relative_eq!(*v, 2f64.powi(-(n as i32)), max_relative = 1e-15);
        }
    }

    #[test]
    fn first_order_convergence_to_mittag_leffler() {
        let kernel = KernelSpec::riesz(1.5).unwrap();
        let lambda = PI * PI;
        let exact = mittag_leffler(1.5, -lambda).unwrap();
        let rows: Vec<(f64, f64)> = [128usize, 256, 512, 1024, 2048, 4096]
            .iter()
            .map(|&n| {
                let k = 1.0 / n as f64;
                let b = discrete_resolvent(&kernel, lambda, k, n).unwrap();
                (k.ln(), (b[n] - exact).abs().ln())
            })
            .collect();
        let fit = least_squares(&rows).unwrap();
        assert!((fit.slope - 1.0).abs() <= 0.1, "slope {}", fit.slope);
    }

    #[test]
    fn closed_form_and_numeric_resolvent_agree() {
        let kernel = KernelSpec::riesz(1.5).unwrap();
        let closed = resolvent_s(&kernel, PI * PI, 1.0).unwrap();
        let numeric = resolvent_numeric(&kernel, PI * PI, 1.0, NUMERIC_STEPS).unwrap();
        assert_abs_diff_eq!(closed.value, numeric.value, epsilon = 1e-6);
        assert!(numeric.error_estimate < 1e-3);
        assert_eq!(resolvent_s(&kernel, 5.0, 0.0).unwrap().value, 1.0);
        let p = resolvent_s(&KernelSpec::parabolic(), 2.0, 0.5).unwrap();
        assert_relative_eq!(p.value, (-1.0f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn tempered_with_zero_eta_matches_riesz() {
        let tempered = KernelSpec::tempered(1.5, 0.0).unwrap();
        let table = Resolvent::new(&tempered, PI * PI, 1.0).unwrap();
        let exact = Resolvent::new(&KernelSpec::riesz(1.5).unwrap(), PI * PI, 1.0).unwrap();
        for t in [0.0, 0.1, 0.37, 0.8, 1.0] {
            assert_abs_diff_eq!(table.eval(t).unwrap(), exact.eval(t).unwrap(), epsilon = 2e-4);
        }
        assert!(table.eval(1.5).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn discrete_resolvent_is_bounded(rho in 1.05f64..1.95, lambda in 0.0f64..1e4, n in 1usize..200) {
            let kernel = KernelSpec::riesz(rho).unwrap();
            let b = discrete_resolvent(&kernel, lambda, 1.0 / n as f64, n).unwrap();
            prop_assert!(b.iter().all(|v| v.abs() <= 1.0 + 1e-12));
        }
    }
}
