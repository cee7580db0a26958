//! Gauss-Legendre rules and adaptive bisection quadrature.

use std::sync::OnceLock;

use crate::special::CompensatedSum;

/// An n-point Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on P_n from the Chebyshev initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// ∫_a^b f.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + r * x);
        }
        s * r
    }

    /// Nodes mapped onto [a, b] together with the scaled weights.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (c + r * x, w * r))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let d = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// The shared 8-point rule.
pub fn gauss8() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(8))
}

fn gauss10() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(10))
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Sum of the local |coarse - refined| differences over accepted panels.
    pub error: f64,
    pub evaluations: usize,
}

const MAX_DEPTH: usize = 48;

/// Adaptive 10-point Gauss-Legendre quadrature with interval bisection.
///
/// A panel is accepted when the rule on the panel and the sum of the rules on
/// its two halves agree to within the panel's share of `abs_tol`.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64) -> Integral {
    let rule = gauss10();
    let mut evaluations = 0;
    let mut value = CompensatedSum::new();
    let mut error = 0.0;
    if a == b {
        return Integral { value: 0.0, error: 0.0, evaluations };
    }
    let whole = rule.integrate(a, b, &mut f);
    evaluations += rule.nodes.len();
    let mut stack = vec![(a, b, whole, abs_tol, 0usize)];
    while let Some((lo, hi, coarse, tol, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = rule.integrate(lo, mid, &mut f);
        let right = rule.integrate(mid, hi, &mut f);
        evaluations += 2 * rule.nodes.len();
        let fine = left + right;
        let diff = (fine - coarse).abs();
        if diff <= tol || depth >= MAX_DEPTH {
            value.add(fine);
            error += diff;
        } else {
            stack.push((mid, hi, right, 0.5 * tol, depth + 1));
            stack.push((lo, mid, left, 0.5 * tol, depth + 1));
        }
    }
    Integral { value: value.value(), error, evaluations }
}

/// [`adaptive`] over consecutive panels delimited by `breakpoints`.
pub fn adaptive_pieces<F: FnMut(f64) -> f64>(mut f: F, breakpoints: &[f64], abs_tol: f64) -> Integral {
    let pieces = breakpoints.len().saturating_sub(1).max(1);
    let mut total = Integral { value: 0.0, error: 0.0, evaluations: 0 };
    let mut sum = CompensatedSum::new();
    for w in breakpoints.windows(2) {
        let part = adaptive(&mut f, w[0], w[1], abs_tol / pieces as f64);
        sum.add(part.value);
        total.error += part.error;
        total.evaluations += part.evaluations;
    }
    total.value = sum.value();
    total
}
