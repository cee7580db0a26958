//! Closed-form statistics of the linear equation (`F = 0`) mode by mode.
//!
//! Mode `j` of the exact solution is Gaussian with mean `s_j(t) x0_j` and
//! variance `μ_j ∫_0^t s_j(r)² dr`; mode `j` of the discrete solution after
//! `n` steps is Gaussian with mean `b_{j,n} x0_j` and variance
//! `μ_j k Σ_{m=1}^n b_{j,m}²`. Driving both with the same Wiener path makes
//! the strong error an explicit deterministic integral.

use crate::error::{ensure, Result};
use crate::integrate::{adaptive_pieces, gauss8};
use crate::kernel::KernelSpec;
use crate::noise::{NoiseModel, Spectrum};
use crate::operator::{dirichlet_eigenvalue, InitialData};
use crate::special::{rgamma, CompensatedSum};

use super::mittag_leffler::mittag_leffler;
use super::resolvent::{discrete_resolvent, Resolvent};

const MOMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

/// The linear problem: kernel, noise, initial value and horizon.
#[derive(Debug, Clone)]
pub struct LinearProblem {
    pub kernel: KernelSpec,
    pub noise: NoiseModel,
    pub x0: InitialData,
    pub t_end: f64,
}

/// Breakpoints `0, τ, 4τ, 16τ, ..., t` with `τ = λ^(-1/ρ)` the relaxation
/// time of the mode.
fn relaxation_breaks(rho: f64, lambda: f64, t: f64) -> Vec<f64> {
    let mut breaks = vec![0.0];
    if lambda > 0.0 {
        let mut tau = lambda.powf(-1.0 / rho);
        while tau < t {
            breaks.push(tau);
            tau *= 4.0;
        }
    }
    if t > 0.0 {
        breaks.push(t);
    }
    breaks
}

/// `∫_0^t s(r)² dr` by adaptive Gauss-Legendre with absolute tolerance 1e-9.
pub fn resolvent_square_integral(kernel: &KernelSpec, lambda: f64, t: f64) -> Result<f64> {
    let s = Resolvent::new(kernel, lambda, t.max(f64::MIN_POSITIVE))?;
    let mut failure = None;
    let quad = adaptive_pieces(
        |r| match s.eval(r) {
            Ok(v) => v * v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        &relaxation_breaks(kernel.rho(), lambda, t),
        MOMENT_TOL,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(quad.value),
    }
}

/// Mean and variance of mode `j` of the exact solution at time `t`.
pub fn exact_linear_moments(kernel: &KernelSpec, lambda: f64, mu: f64, x0: f64, t: f64) -> Result<Moments> {
    ensure!(t >= 0.0, Domain, "time must be >= 0, got {t}");
    let s = Resolvent::new(kernel, lambda, t.max(f64::MIN_POSITIVE))?;
    let mean = s.eval(t)? * x0;
    let variance = if mu == 0.0 { 0.0 } else { mu * resolvent_square_integral(kernel, lambda, t)? };
    Ok(Moments { mean, variance })
}

/// Mean and variance of mode `j` of the discrete solution after `n` steps,
/// given its transfer coefficients `b_0..`.
pub fn exact_discrete_moments(b: &[f64], mu: f64, x0: f64, k: f64, n: usize) -> Result<Moments> {
    ensure!(n < b.len(), Length, "step {n} beyond {} transfer coefficients", b.len());
    let variance = mu * k * b[1..=n].iter().map(|v| v * v).collect::<CompensatedSum>().value();
    Ok(Moments { mean: b[n] * x0, variance })
}

/// `Cov(X_{t1}, X_{t2})` of one mode of the exact solution.
pub fn exact_linear_covariance(kernel: &KernelSpec, lambda: f64, mu: f64, t1: f64, t2: f64) -> Result<f64> {
    let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
    if mu == 0.0 || lo == 0.0 {
        return Ok(0.0);
    }
    let s = Resolvent::new(kernel, lambda, hi)?;
    let mut failure = None;
    // substitute u = lo - r: ∫_0^lo s(u) s(hi - lo + u) du
    let gap = hi - lo;
    let quad = adaptive_pieces(
        |u| match (s.eval(u), s.eval(gap + u)) {
            (Ok(a), Ok(b)) => a * b,
            (Err(e), _) | (_, Err(e)) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        &relaxation_breaks(kernel.rho(), lambda, lo),
        MOMENT_TOL,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(mu * quad.value),
    }
}

/// `Cov(X_{n1}, X_{n2})` of one mode of the discrete solution:
/// `μ k Σ_{m=0}^{min-1} b_{n1-m} b_{n2-m}`.
pub fn discrete_covariance(b: &[f64], mu: f64, k: f64, n1: usize, n2: usize) -> Result<f64> {
    ensure!(n1.max(n2) < b.len(), Length, "step {} beyond {} transfer coefficients", n1.max(n2), b.len());
    let n = n1.min(n2);
    let sum: CompensatedSum = (0..n).map(|m| b[n1 - m] * b[n2 - m]).collect();
    Ok(mu * k * sum.value())
}

/// Squared strong error of one mode computed by the spectral scheme with
/// `N = b.len() - 1` steps of size `k`:
/// `(s(T) - b_N)² x0² + μ Σ_m ∫_{t_m}^{t_{m+1}} (s(T - t) - b_{N-m})² dt`.
pub fn mode_strong_error_sq(s: &Resolvent, b: &[f64], mu: f64, x0: f64, k: f64) -> Result<f64> {
    let n = b.len() - 1;
    let t_end = n as f64 * k;
    let det = (s.eval(t_end)? - b[n]) * x0;
    let mut acc = CompensatedSum::new();
    acc.add(det * det);
    if mu != 0.0 {
        let rule = gauss8();
        for m in 0..n {
            let (a, c) = (m as f64 * k, (m + 1) as f64 * k);
            let mut part = 0.0;
            for (t, w) in rule.mapped(a, c) {
                let d = s.eval(t_end - t)? - b[n - m];
                part += w * d * d;
            }
            acc.add(mu * part);
        }
    }
    Ok(acc.value())
}

/// `I_∞ = ∫_0^∞ E_ρ(-u^ρ)² du`, so that `∫_0^∞ s_j² = λ_j^(-1/ρ) I_∞`.
pub fn resolvent_square_integral_infinite(rho: f64) -> Result<f64> {
    if rho == 1.0 {
        return Ok(0.5);
    }
    const CUT: f64 = 1000.0;
    let mut breaks = vec![0.0];
    let mut b = 0.5;
    while b < CUT {
        breaks.push(b);
        b *= 2.0;
    }
    breaks.push(CUT);
    let mut failure = None;
    let quad = adaptive_pieces(
        |u| match mittag_leffler(rho, -u.powf(rho)) {
            Ok(v) => v * v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        &breaks,
        1e-12,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    // E_ρ(-y) ≈ c1/y + c2/y² for large y
    let (c1, c2) = (rgamma(1.0 - rho), -rgamma(1.0 - 2.0 * rho));
    let tail_term = |p: f64| CUT.powf(1.0 - p) / (p - 1.0);
    let tail = c1 * c1 * tail_term(2.0 * rho) + 2.0 * c1 * c2 * tail_term(3.0 * rho) + c2 * c2 * tail_term(4.0 * rho);
    Ok(quad.value + tail)
}

/// `Σ_{j > from} μ_j λ_j^(-1/ρ)`.
pub fn spectral_tail_sum(noise: &NoiseModel, rho: f64, from: usize) -> f64 {
    match noise.spectrum() {
        Spectrum::Explicit(mu) => (from + 1..=mu.len())
            .map(|j| mu[j - 1] * dirichlet_eigenvalue(j).powf(-1.0 / rho))
            .collect::<CompensatedSum>()
            .value(),
        Spectrum::PowerLaw { s, q } => {
            // q π^(-2/ρ) Σ_{j>from} j^(-p), Euler-Maclaurin beyond an explicit block
            let p = 2.0 * s + 2.0 / rho;
            let f = |j: f64| j.powf(-p);
            let cut = from + 2000;
            let mut sum: CompensatedSum = (from + 1..cut).map(|j| f(j as f64)).collect();
            let c = cut as f64;
            sum.add(c.powf(1.0 - p) / (p - 1.0) + 0.5 * f(c) + p * c.powf(-p - 1.0) / 12.0);
            q * std::f64::consts::PI.powf(-2.0 / rho) * sum.value()
        }
    }
}

/// How the exact solution is represented beyond the simulated modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReferenceModes {
    /// Modes whose full contribution is computed explicitly.
    pub modes: usize,
    /// Add `Σ_{j > modes} μ_j λ_j^(-1/ρ) I_∞` for the remaining modes.
    pub analytic_tail: bool,
}

/// `(E‖X_T - X_N‖²)^(1/2)` for the spectral scheme with `n_modes` modes and
/// `n_steps` steps, against the exact solution truncated as described by
/// `reference`.
pub fn exact_strong_error_linear(
    problem: &LinearProblem,
    n_steps: usize,
    n_modes: usize,
    reference: ReferenceModes,
) -> Result<f64> {
    Ok(strong_error_by_mode(problem, n_steps, n_modes, reference)?.iter().sum::<f64>().sqrt())
}

/// Per-mode squared contributions to [`exact_strong_error_linear`], ascending
/// mode index, with the analytic tail (if any) as the last entry.
pub fn strong_error_by_mode(
    problem: &LinearProblem,
    n_steps: usize,
    n_modes: usize,
    reference: ReferenceModes,
) -> Result<Vec<f64>> {
    ensure!(n_steps >= 1 && n_modes >= 1, Domain, "need at least one step and one mode");
    let kernel = &problem.kernel;
    let t_end = problem.t_end;
    let k = t_end / n_steps as f64;
    let explicit = reference.modes.max(n_modes).max(problem.x0.coefficients.len());
    let mut out = Vec::with_capacity(explicit + 1);
    for j in 1..=explicit {
        let lambda = dirichlet_eigenvalue(j);
        let mu = problem.noise.eigenvalue(j);
        let x0 = problem.x0.coefficient(j);
        let s = Resolvent::new(kernel, lambda, t_end)?;
        let e2 = if j <= n_modes {
            let b = discrete_resolvent(kernel, lambda, k, n_steps)?;
            mode_strong_error_sq(&s, &b, mu, x0, k)?
        } else {
            let m = exact_linear_moments(kernel, lambda, mu, x0, t_end)?;
            m.mean * m.mean + m.variance
        };
        out.push(e2);
    }
    if reference.analytic_tail {
        let i_inf = resolvent_square_integral_infinite(kernel.rho())?;
        out.push(spectral_tail_sum(&problem.noise, kernel.rho(), explicit) * i_inf);
    }
    Ok(out)
}
