//! Symmetric tridiagonal matrices, solves and the generalized eigenproblem
//! `K v = λ M v` for tridiagonal pencils.

use crate::error::{ensure, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1));
        Self { diag, off }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * x[i + 1];
            }
            y[i] = s;
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &SymTridiag, b: f64) -> SymTridiag {
        SymTridiag {
            diag: self.diag.iter().zip(&other.diag).map(|(x, y)| a * x + b * y).collect(),
            off: self.off.iter().zip(&other.off).map(|(x, y)| a * x + b * y).collect(),
        }
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Number of eigenvalues of the pencil `(self, mass)` strictly below
    /// `sigma`, by Sylvester inertia of `self - sigma·mass`.
    pub fn pencil_count_below(&self, mass: &SymTridiag, sigma: f64) -> usize {
        let n = self.dim();
        let mut count = 0;
        let mut d = 0.0;
        for i in 0..n {
            let a = self.diag[i] - sigma * mass.diag[i];
            d = if i == 0 {
                a
            } else {
                let b = self.off[i - 1] - sigma * mass.off[i - 1];
                a - b * b / d
            };
            if d == 0.0 {
                d = -f64::EPSILON * (a.abs() + 1.0);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }
}

/// LU factorization of a symmetric positive definite tridiagonal matrix
/// (Thomas algorithm), reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct TridiagLu {
    lower: Vec<f64>,
    pivots: Vec<f64>,
    upper: Vec<f64>,
}

impl TridiagLu {
    pub fn new(m: &SymTridiag) -> Result<Self> {
        let n = m.dim();
        let mut pivots = Vec::with_capacity(n);
        let mut lower = Vec::with_capacity(n.saturating_sub(1));
        for i in 0..n {
            let p = if i == 0 {
                m.diag[0]
            } else {
                let l = m.off[i - 1] / pivots[i - 1];
                lower.push(l);
                m.diag[i] - l * m.off[i - 1]
            };
            ensure!(p.abs() > 0.0 && p.is_finite(), Singular, "zero pivot at row {i}");
            pivots.push(p);
        }
        Ok(Self { lower, pivots, upper: m.off.clone() })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.pivots.len();
        for i in 1..n {
            b[i] -= self.lower[i - 1] * b[i - 1];
        }
        b[n - 1] /= self.pivots[n - 1];
        for i in (0..n - 1).rev() {
            b[i] = (b[i] - self.upper[i] * b[i + 1]) / self.pivots[i];
        }
    }
}

/// Solve a general (possibly indefinite) tridiagonal system with partial
/// pivoting. `sub[i]` is entry (i+1, i), `sup[i]` is entry (i, i+1).
fn solve_pivoted(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut du = sup.to_vec();
    let mut dl = sub.to_vec();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut swapped = vec![false; n];
    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            let piv = if d[i] == 0.0 { f64::MIN_POSITIVE } else { d[i] };
            d[i] = piv;
            let f = dl[i] / piv;
            dl[i] = f;
            d[i + 1] -= f * du[i];
        } else {
            swapped[i] = true;
            let f = d[i] / dl[i];
            d[i] = dl[i];
            dl[i] = f;
            let tmp = du[i];
            du[i] = d[i + 1];
            d[i + 1] = tmp - f * d[i + 1];
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] *= -f;
            }
        }
    }
    if d[n - 1] == 0.0 {
        d[n - 1] = f64::MIN_POSITIVE;
    }
    for i in 0..n.saturating_sub(1) {
        if swapped[i] {
            rhs.swap(i, i + 1);
            rhs[i + 1] -= dl[i] * rhs[i];
        } else {
            rhs[i + 1] -= dl[i] * rhs[i];
        }
    }
    rhs[n - 1] /= d[n - 1];
    if n >= 2 {
        rhs[n - 2] = (rhs[n - 2] - du[n - 2] * rhs[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        rhs[i] = (rhs[i] - du[i] * rhs[i + 1] - du2[i] * rhs[i + 2]) / d[i];
    }
}

/// Generalized eigenpairs of the pencil `(stiffness, mass)`, ascending, with
/// eigenvectors normalized to `vᵀ M v = 1`. Eigenvalues by bisection on the
/// inertia count, eigenvectors by inverse iteration.
pub fn generalized_eigen(stiffness: &SymTridiag, mass: &SymTridiag) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = stiffness.dim();
    ensure!(mass.dim() == n && n >= 1, Shape, "pencil dimensions disagree");
    let (m_lo, _) = mass.gershgorin();
    ensure!(m_lo > 0.0, Domain, "mass matrix is not diagonally dominant positive definite");
    let (k_lo, k_hi) = stiffness.gershgorin();
    let upper = (k_hi.max(0.0) / m_lo) * (1.0 + 1e-12) + 1.0;
    let lower = (k_lo.min(0.0) / m_lo) * (1.0 + 1e-12) - 1.0;

    let mut values = Vec::with_capacity(n);
    for idx in 0..n {
        let (mut lo, mut hi) = (lower, upper);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if stiffness.pencil_count_below(mass, mid) > idx {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        values.push(0.5 * (lo + hi));
    }

    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(n);
    for (idx, &lambda) in values.iter().enumerate() {
        let shift = lambda * (1.0 + 4.0 * f64::EPSILON) + f64::EPSILON;
        let sub: Vec<f64> = (0..n.saturating_sub(1)).map(|i| stiffness.off[i] - shift * mass.off[i]).collect();
        let diag: Vec<f64> = (0..n).map(|i| stiffness.diag[i] - shift * mass.diag[i]).collect();
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7 + idx * 13) % 11) as f64).collect();
        for _ in 0..3 {
            let mut rhs = mass.matvec(&v);
            solve_pivoted(&sub, &diag, &sub, &mut rhs);
            v = rhs;
            // re-orthogonalize against clustered neighbours
            for (prev, &mu) in vectors.iter().zip(&values) {
                if (mu - lambda).abs() <= 1e-6 * lambda.abs().max(1.0) {
                    let mv = mass.matvec(prev);
                    let c: f64 = mv.iter().zip(&v).map(|(a, b)| a * b).sum();
                    for (x, p) in v.iter_mut().zip(prev) {
                        *x -= c * p;
                    }
                }
            }
            let norm = mass.quadratic_form(&v).sqrt();
            ensure!(norm > 0.0 && norm.is_finite(), Instability, "inverse iteration broke down at eigenvalue {idx}");
            v.iter_mut().for_each(|x| *x /= norm);
        }
        // fix the sign: first nonzero entry positive
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-300) {
            if *first < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        vectors.push(v);
    }
    Ok((values, vectors))
}
