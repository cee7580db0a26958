use crate::error::{ensure, Result};
use crate::integrate::GaussLegendre;

use super::spectral::eigenfunction;
use super::tridiag::{generalized_eigen, SymTridiag};

/// Continuous piecewise-linear finite elements on a uniform mesh of (0,1)
/// with homogeneous Dirichlet conditions. Unknowns are the values at the
/// `n_cells - 1` interior nodes `x_i = i h`.
#[derive(Debug, Clone)]
pub struct FemOperator {
    n_cells: usize,
    mass: SymTridiag,
    stiffness: SymTridiag,
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<Vec<f64>>,
}

impl FemOperator {
    pub fn new(n_cells: usize) -> Result<Self> {
        ensure!(n_cells >= 2, Domain, "FEM mesh needs at least 2 cells, got {n_cells}");
        let n = n_cells - 1;
        let h = 1.0 / n_cells as f64;
        let mass = SymTridiag::new(vec![2.0 * h / 3.0; n], vec![h / 6.0; n - 1]);
        let stiffness = SymTridiag::new(vec![2.0 / h; n], vec![-1.0 / h; n - 1]);
        let (eigenvalues, eigenvectors) = generalized_eigen(&stiffness, &mass)?;
        Ok(Self { n_cells, mass, stiffness, eigenvalues, eigenvectors })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells - 1
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n_cells as f64
    }

    pub fn mass(&self) -> &SymTridiag {
        &self.mass
    }

    pub fn stiffness(&self) -> &SymTridiag {
        &self.stiffness
    }

    /// Discrete eigenvalues `λ_j^h`, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Mass-orthonormal discrete eigenvectors (nodal values).
    pub fn eigenvectors(&self) -> &[Vec<f64>] {
        &self.eigenvectors
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.h();
        (1..self.n_cells).map(|i| i as f64 * h).collect()
    }

    /// Load vector `(∫ f φ_i)_i`, 4-point Gauss per cell.
    pub fn load<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        let rule = GaussLegendre::new(4);
        let h = self.h();
        let mut load = vec![0.0; self.n_nodes()];
        for cell in 0..self.n_cells {
            let (a, b) = (cell as f64 * h, (cell + 1) as f64 * h);
            for (x, w) in rule.mapped(a, b) {
                let fx = f(x) * w;
                // left node of the cell is `cell`, right node `cell + 1` (1-based)
                let s = (x - a) / h;
                if cell >= 1 {
                    load[cell - 1] += fx * (1.0 - s);
                }
                if cell + 1 < self.n_cells {
                    load[cell] += fx * s;
                }
            }
        }
        load
    }

    /// Nodal values of the L² projection `P_h f`.
    pub fn l2_project<F: Fn(f64) -> f64>(&self, f: F) -> Result<Vec<f64>> {
        let mut rhs = self.load(f);
        super::tridiag::TridiagLu::new(&self.mass)?.solve_in_place(&mut rhs);
        Ok(rhs)
    }

    /// Value of the piecewise-linear function with the given nodal values.
    pub fn evaluate(&self, nodal: &[f64], x: f64) -> f64 {
        let h = self.h();
        let pos = (x / h).clamp(0.0, self.n_cells as f64);
        let cell = (pos.floor() as usize).min(self.n_cells - 1);
        let s = pos - cell as f64;
        let left = if cell == 0 { 0.0 } else { nodal[cell - 1] };
        let right = if cell + 1 >= self.n_cells { 0.0 } else { nodal[cell] };
        left * (1.0 - s) + right * s
    }

    /// `‖u_h - f‖_{L²}` with a 6-point Gauss rule per cell.
    pub fn l2_error<F: Fn(f64) -> f64>(&self, nodal: &[f64], f: F) -> f64 {
        let rule = GaussLegendre::new(6);
        let h = self.h();
        let mut acc = 0.0;
        for cell in 0..self.n_cells {
            let (a, b) = (cell as f64 * h, (cell + 1) as f64 * h);
            for (x, w) in rule.mapped(a, b) {
                let d = self.evaluate(nodal, x) - f(x);
                acc += w * d * d;
            }
        }
        acc.sqrt()
    }

    /// `(∫ e_j φ_i)` for `j = 1..=modes`, stored row-major by node.
    pub fn mode_loads(&self, modes: usize) -> Vec<f64> {
        let n = self.n_nodes();
        let mut table = vec![0.0; n * modes];
        for j in 1..=modes {
            let col = self.load(|x| eigenfunction(j, x));
            for i in 0..n {
                table[i * modes + j - 1] = col[i];
            }
        }
        table
    }

    /// `‖u_h‖_{L²} = (uᵀ M u)^(1/2)`.
    pub fn mass_norm(&self, nodal: &[f64]) -> f64 {
        self.mass.quadratic_form(nodal).max(0.0).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::spectral::dirichlet_eigenvalue;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    /// Generalized eigenvalues of the uniform P1 pencil in closed form.
    fn analytic_fem_eigenvalue(j: usize, h: f64) -> f64 {
        let c = (j as f64 * PI * h).cos();
        6.0 / (h * h) * (1.0 - c) / (2.0 + c)
    }

    #[test]
    fn two_cells_single_node() {
        let op = FemOperator::new(2).unwrap();
        assert_eq!(op.n_nodes(), 1);
        assert_relative_eq!(op.stiffness().diag[0], 4.0);
        assert_relative_eq!(op.mass().diag[0], 1.0 / 3.0);
        assert_relative_eq!(op.eigenvalues()[0], 12.0, max_relative = 1e-13);
    }

    #[test]
    fn mass_rows_partition_unity() {
        let op = FemOperator::new(10).unwrap();
        let ones = vec![1.0; op.n_nodes()];
        let rows = op.mass().matvec(&ones);
        for r in &rows[1..rows.len() - 1] {
            assert_relative_eq!(*r, op.h(), max_relative = 1e-14);
        }
    }

    #[test]
    fn eigenvalues_match_closed_form_and_dominate() {
        let op = FemOperator::new(64).unwrap();
        let h = op.h();
        for (j, &l) in op.eigenvalues().iter().enumerate() {
            assert_relative_eq!(l, analytic_fem_eigenvalue(j + 1, h), max_relative = 1e-11);
            assert!(l >= dirichlet_eigenvalue(j + 1) * (1.0 - 1e-14));
        }
        let l1 = op.eigenvalues()[0];
        assert!(l1 >= PI * PI && l1 <= PI * PI * (1.0 + h * h * PI * PI));
    }

    #[test]
    fn eigenvectors_mass_orthonormal() {
        let op = FemOperator::new(32).unwrap();
        let v = op.eigenvectors();
        for a in 0..v.len() {
            for b in [a, (a + 1) % v.len(), (a + 5) % v.len()] {
                let mb = op.mass().matvec(&v[b]);
                let ip: f64 = mb.iter().zip(&v[a]).map(|(x, y)| x * y).sum();
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((ip - expected).abs() < 1e-9, "({a},{b}) -> {ip}");
            }
        }
    }

    #[test]
    fn projection_error_is_second_order() {
        let mut last = None;
        for n in [16usize, 32, 64, 128] {
            let op = FemOperator::new(n).unwrap();
            let e1 = |x: f64| eigenfunction(1, x);
            let p = op.l2_project(e1).unwrap();
            let err = op.l2_error(&p, e1);
            if let Some(prev) = last {
                let ratio: f64 = prev / err;
                assert!((ratio.log2() - 2.0).abs() < 0.05, "ratio {ratio}");
            }
            last = Some(err);
        }
    }

    #[test]
    fn projection_idempotent_on_v_h() {
        let op = FemOperator::new(12).unwrap();
        let nodal: Vec<f64> = (0..op.n_nodes()).map(|i| ((i * 3) % 5) as f64 - 2.0).collect();
        let again = op.l2_project(|x| op.evaluate(&nodal, x)).unwrap();
        for (a, b) in again.iter().zip(&nodal) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }
}
