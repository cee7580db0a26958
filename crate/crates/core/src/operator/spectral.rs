use std::f64::consts::{PI, SQRT_2};

use crate::error::{ensure, Result};

use super::{Field, Representation};

/// Spectral Galerkin discretization: `V_h = span{e_1..e_N}`,
/// `e_j(x) = √2 sin(jπx)`, `λ_j = (jπ)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralOperator {
    eigenvalues: Vec<f64>,
}

impl SpectralOperator {
    pub fn new(n_modes: usize) -> Result<Self> {
        ensure!(n_modes >= 1, Domain, "spectral operator needs at least one mode");
        Ok(Self { eigenvalues: (1..=n_modes).map(dirichlet_eigenvalue).collect() })
    }

    pub fn n_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `h = λ_{N+1}^(-1/2) = 1/((N+1)π)`.
    pub fn h(&self) -> f64 {
        1.0 / ((self.n_modes() + 1) as f64 * PI)
    }

    /// `‖x‖_{Ḣ^α} = (Σ λ_j^α x_j²)^(1/2)`, i.e. `‖A^(α/2) x‖`.
    pub fn hdot_norm(&self, field: &Field, alpha: f64) -> Result<f64> {
        self.check(field)?;
        Ok(self.eigenvalues.iter().zip(field.values()).map(|(l, v)| l.powf(alpha) * v * v).sum::<f64>().sqrt())
    }

    /// `A^α x`: coefficient `j` scaled by `λ_j^α`.
    pub fn apply_fractional(&self, alpha: f64, field: &Field) -> Result<Field> {
        self.check(field)?;
        let values = self.eigenvalues.iter().zip(field.values()).map(|(l, v)| l.powf(alpha) * v).collect();
        Ok(Field::spectral(values))
    }

    fn check(&self, field: &Field) -> Result<()> {
        ensure!(field.representation() == Representation::SpectralCoeffs, Domain, "expected spectral coefficients");
        ensure!(
            field.len() == self.n_modes(),
            Shape,
            "field has {} coefficients, operator has {} modes",
            field.len(),
            self.n_modes()
        );
        Ok(())
    }
}

/// `(jπ)²`.
pub fn dirichlet_eigenvalue(j: usize) -> f64 {
    let x = j as f64 * PI;
    x * x
}

/// `e_j(x) = √2 sin(jπx)`.
pub fn eigenfunction(j: usize, x: f64) -> f64 {
    SQRT_2 * (j as f64 * PI * x).sin()
}

/// Discrete sine transform between `n` spectral coefficients and the values
/// at `2n + 1` interior points `x_i = i/(2n + 2)`.
#[derive(Debug, Clone)]
pub struct SineTransform {
    n_modes: usize,
    n_points: usize,
    /// `table[i * n_modes + j] = e_{j+1}(x_{i+1})`
    table: Vec<f64>,
}

impl SineTransform {
    pub fn new(n_modes: usize) -> Self {
        let n_points = 2 * n_modes + 1;
        let spacing = 1.0 / (n_points + 1) as f64;
        let mut table = Vec::with_capacity(n_points * n_modes);
        for i in 1..=n_points {
            for j in 1..=n_modes {
                table.push(eigenfunction(j, i as f64 * spacing));
            }
        }
        Self { n_modes, n_points, table }
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn grid(&self) -> Vec<f64> {
        let spacing = 1.0 / (self.n_points + 1) as f64;
        (1..=self.n_points).map(|i| i as f64 * spacing).collect()
    }

    pub fn to_grid(&self, coeffs: &[f64], out: &mut [f64]) {
        for (row, o) in self.table.chunks_exact(self.n_modes).zip(out.iter_mut()) {
            *o = row.iter().zip(coeffs).map(|(a, b)| a * b).sum();
        }
    }

    /// Inverse of [`Self::to_grid`] on the span of the first `n_modes`
    /// modes; for general grid data, the discrete L² projection.
    pub fn from_grid(&self, values: &[f64], out: &mut [f64]) {
        let scale = 1.0 / (self.n_points + 1) as f64;
        out.iter_mut().for_each(|o| *o = 0.0);
        for (row, v) in self.table.chunks_exact(self.n_modes).zip(values) {
            for (o, e) in out.iter_mut().zip(row) {
                *o += e * v;
            }
        }
        out.iter_mut().for_each(|o| *o *= scale);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eigenvalues_and_mesh_width() {
        let op = SpectralOperator::new(1).unwrap();
        assert_relative_eq!(op.eigenvalues()[0], PI * PI);
        let op = SpectralOperator::new(3).unwrap();
        assert_eq!(op.eigenvalues(), &[PI * PI, 4.0 * PI * PI, 9.0 * PI * PI]);
        let op = SpectralOperator::new(7).unwrap();
        assert_relative_eq!(op.h(), 1.0 / (8.0 * PI));
        assert!(SpectralOperator::new(0).is_err());
    }

    #[test]
    fn hdot_norms() {
        let op = SpectralOperator::new(2).unwrap();
        let e1 = Field::spectral(vec![1.0, 0.0]);
        assert_relative_eq!(op.hdot_norm(&e1, 0.0).unwrap(), 1.0);
        assert_relative_eq!(op.hdot_norm(&e1, 2.0).unwrap(), PI * PI, max_relative = 1e-15);
        let v = Field::spectral(vec![1.0, 1.0]);
        assert_relative_eq!(op.hdot_norm(&v, 1.0).unwrap(), PI * 5f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn fractional_powers() {
        let op = SpectralOperator::new(4).unwrap();
        let v = Field::spectral(vec![0.3, -1.0, 2.0, 0.5]);
        assert_eq!(op.apply_fractional(0.0, &v).unwrap(), v);
        let e1 = Field::spectral(vec![1.0, 0.0, 0.0, 0.0]);
        assert_relative_eq!(op.apply_fractional(1.0, &e1).unwrap().values()[0], PI * PI);
        let back = op.apply_fractional(1.0, &op.apply_fractional(-1.0, &v).unwrap()).unwrap();
        for (a, b) in back.values().iter().zip(v.values()) {
            assert_relative_eq!(a, b, max_relative = 1e-15);
        }
    }

    #[test]
    fn sine_transform_round_trip() {
        let tr = SineTransform::new(5);
        let c = vec![1.0, -0.5, 0.25, 0.0, 2.0];
        let mut grid = vec![0.0; tr.n_points()];
        tr.to_grid(&c, &mut grid);
        let mut back = vec![0.0; 5];
        tr.from_grid(&grid, &mut back);
        for (a, b) in back.iter().zip(&c) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
    }
}
