//! The Mittag-Leffler function `E_α(x) = Σ_m x^m / Γ(αm + 1)` on the
//! negative half-line.
//!
//! Three evaluators cover `x = -y ≤ 0`:
//!
//! * `y ≤ 5`: the power series with compensated summation;
//! * `5 < y < 1000`: the real-line integral obtained by collapsing the Hankel
//!   contour onto the negative axis, plus the residue of the pole pair
//!   `z = y^(1/α) e^(±iπ/α)` when `α > 1`;
//! * `y ≥ 1000`: the residue plus the algebraic asymptotic expansion
//!   `-Σ_{k≥1} (-y)^(-k) / Γ(1 - αk)`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{ensure, Result};
use crate::integrate::adaptive_pieces;
use crate::special::{rgamma, CompensatedSum};

/// Switch from the series to the integral representation.
pub const SERIES_LIMIT: f64 = 5.0;
/// Switch from the integral representation to the asymptotic expansion.
pub const ASYMPTOTIC_LIMIT: f64 = 1000.0;

const INTEGRAL_CUTOFF: f64 = 80.0;
const INTEGRAL_TOL: f64 = 1e-13;
const ACCURACY_LIMIT: f64 = 1e-8;

/// `E_α(x)` for `α ∈ (0, 2]` and `x ≤ 0`, absolute accuracy about 1e-12.
pub fn mittag_leffler(alpha: f64, x: f64) -> Result<f64> {
    ensure!(alpha > 0.0 && alpha <= 2.0, Domain, "Mittag-Leffler order must lie in (0,2], got {alpha}");
    ensure!(x <= 0.0 && !x.is_nan(), Domain, "Mittag-Leffler argument must be <= 0, got {x}");
    let y = -x;
    if alpha == 1.0 {
        return Ok((-y).exp());
    }
    if y.is_infinite() {
        return Ok(0.0);
    }
    if y <= SERIES_LIMIT {
        Ok(series(alpha, y))
    } else if y < ASYMPTOTIC_LIMIT {
        integral(alpha, y)
    } else {
        Ok(asymptotic(alpha, y))
    }
}

/// Power series `Σ (-y)^m / Γ(αm + 1)`.
pub fn series(alpha: f64, y: f64) -> f64 {
    let mut sum = CompensatedSum::new();
    let mut power = 1.0;
    for m in 0..1000 {
        let term = power * rgamma(alpha * m as f64 + 1.0);
        sum.add(term);
        if m > 5 && term.abs() < 1e-17 * sum.value().abs().max(1.0) {
            break;
        }
        power *= -y;
    }
    sum.value()
}

/// Contribution of the two poles of `z^(α-1) e^z / (z^α + y)` when `α > 1`.
fn residue(alpha: f64, y: f64) -> f64 {
    if alpha <= 1.0 {
        return 0.0;
    }
    let r = y.powf(1.0 / alpha);
    let (s, c) = (PI / alpha).sin_cos();
    2.0 / alpha * (r * c).exp() * (r * s).cos()
}

fn integral(alpha: f64, y: f64) -> Result<f64> {
    let (sin_pa, cos_pa) = (PI * alpha).sin_cos();
    // in u = r^α the weight r^(α-1) dr becomes du / α
    let integrand =
        |u: f64| (-u.powf(1.0 / alpha)).exp() * y * sin_pa / (alpha * (u * u + 2.0 * u * y * cos_pa + y * y));
    let end = INTEGRAL_CUTOFF.powf(alpha);
    // the denominator is smallest at u = y
    let mut breaks = vec![0.0];
    if y < end {
        breaks.extend([0.5 * y, y, (1.5 * y).min(end)]);
    } else {
        breaks.push(1.0);
    }
    if *breaks.last().unwrap() < end {
        breaks.push(end);
    }
    let quad = adaptive_pieces(integrand, &breaks, INTEGRAL_TOL);
    ensure!(
        quad.error <= ACCURACY_LIMIT,
        Accuracy,
        "Mittag-Leffler quadrature for alpha = {alpha}, y = {y} has error estimate {:.3e}",
        quad.error
    );
    Ok(quad.value / PI + residue(alpha, y))
}

fn asymptotic(alpha: f64, y: f64) -> f64 {
    let mut sum = CompensatedSum::new();
    let mut power = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        power /= -y;
        let term = -power * rgamma(1.0 - alpha * k as f64);
        if term.abs() > last && term != 0.0 {
            break;
        }
        sum.add(term);
        if term != 0.0 {
            last = term.abs();
        }
        if power.abs() < 1e-300 || (term != 0.0 && term.abs() < 1e-17 * sum.value().abs()) {
            break;
        }
    }
    sum.value() + residue(alpha, y)
}

/// Chebyshev degree per interval of [`MittagLefflerTable`].
const TABLE_DEGREE: usize = 32;
/// Tabulated range `[0, 2^TABLE_OCTAVES]`, the asymptotic branch beyond.
const TABLE_OCTAVES: i32 = 10;

/// `y ↦ E_α(-y)` for one fixed order, interpolated on `[0, 1]` and the
/// octaves `[2^i, 2^(i+1)]` up to 1024 by Chebyshev series of degree 32.
/// Beyond that range the asymptotic expansion is used directly.
#[derive(Debug, Clone)]
pub struct MittagLefflerTable {
    alpha: f64,
    /// Chebyshev coefficients, one block per interval.
    coefficients: Vec<[f64; TABLE_DEGREE]>,
}

impl MittagLefflerTable {
    pub fn new(alpha: f64) -> Result<Self> {
        ensure!(alpha > 0.0 && alpha <= 2.0, Domain, "Mittag-Leffler order must lie in (0,2], got {alpha}");
        let n = TABLE_DEGREE;
        let mut coefficients = Vec::with_capacity(TABLE_OCTAVES as usize + 1);
        for i in 0..=TABLE_OCTAVES {
            let (a, b) = Self::interval(i as usize);
            let mut values = [0.0; TABLE_DEGREE];
            for (k, v) in values.iter_mut().enumerate() {
                let t = (PI * (k as f64 + 0.5) / n as f64).cos();
                *v = mittag_leffler(alpha, -(0.5 * (a + b) + 0.5 * (b - a) * t))?;
            }
            let mut c = [0.0; TABLE_DEGREE];
            for (j, cj) in c.iter_mut().enumerate() {
                let sum: f64 = values
                    .iter()
                    .enumerate()
                    .map(|(k, v)| v * (PI * j as f64 * (k as f64 + 0.5) / n as f64).cos())
                    .sum();
                *cj = 2.0 * sum / n as f64;
            }
            c[0] *= 0.5;
            coefficients.push(c);
        }
        Ok(Self { alpha, coefficients })
    }

    fn interval(i: usize) -> (f64, f64) {
        if i == 0 {
            (0.0, 1.0)
        } else {
            let a = (1u64 << (i - 1)) as f64;
            (a, 2.0 * a)
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `E_α(-y)` for `y ≥ 0`.
    pub fn eval(&self, y: f64) -> f64 {
        if self.alpha == 1.0 {
            return (-y).exp();
        }
        if y == 0.0 {
            return 1.0;
        }
        if y >= (1u64 << TABLE_OCTAVES) as f64 {
            return if y.is_infinite() { 0.0 } else { asymptotic(self.alpha, y) };
        }
        let i = if y < 1.0 { 0 } else { y.log2().floor() as usize + 1 };
        let i = i.min(self.coefficients.len() - 1);
        let (a, b) = Self::interval(i);
        let t = (2.0 * y - a - b) / (b - a);
        let c = &self.coefficients[i];
        let (mut b1, mut b2) = (0.0, 0.0);
        for &cj in c.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + cj;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + c[0]
    }
}

/// Shared table for order `alpha`, built on first use.
pub fn mittag_leffler_table(alpha: f64) -> Result<Arc<MittagLefflerTable>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<MittagLefflerTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(t) = cache.lock().expect("table cache poisoned").get(&alpha.to_bits()) {
        return Ok(t.clone());
    }
    let table = Arc::new(MittagLefflerTable::new(alpha)?);
    cache.lock().expect("table cache poisoned").insert(alpha.to_bits(), table.clone());
    Ok(table)
}
