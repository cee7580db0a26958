//! Spatial discretizations of `A = -Δ` on (0,1) with Dirichlet conditions.

mod fem;
mod spectral;
pub mod tridiag;

pub use fem::FemOperator;
pub use spectral::{dirichlet_eigenvalue, eigenfunction, SineTransform, SpectralOperator};

use crate::error::{ensure, Result};
use crate::kernel::KernelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Representation {
    /// Coefficients in the eigenbasis `e_j = √2 sin(jπx)`.
    SpectralCoeffs,
    /// Values at the interior mesh nodes.
    NodalValues,
}

/// An element of `V_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    representation: Representation,
    values: Vec<f64>,
}

impl Field {
    pub fn spectral(values: Vec<f64>) -> Self {
        Self { representation: Representation::SpectralCoeffs, values }
    }

    pub fn nodal(values: Vec<f64>) -> Self {
        Self { representation: Representation::NodalValues, values }
    }

    pub fn zeros(representation: Representation, len: usize) -> Self {
        Self { representation, values: vec![0.0; len] }
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Initial value as a finite sine series `Σ a_j e_j`; `coefficients[0]` is `a_1`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InitialData {
    pub coefficients: Vec<f64>,
}

impl InitialData {
    pub fn new(coefficients: Vec<f64>) -> Self {
        Self { coefficients }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// The single eigenfunction `e_j`.
    pub fn mode(j: usize) -> Self {
        let mut c = vec![0.0; j];
        c[j - 1] = 1.0;
        Self { coefficients: c }
    }

    /// Coefficient `a_j` (1-based), zero beyond the series.
    pub fn coefficient(&self, j: usize) -> f64 {
        self.coefficients.get(j.wrapping_sub(1)).copied().unwrap_or(0.0)
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        self.coefficients.iter().enumerate().map(|(i, a)| a * eigenfunction(i + 1, x)).sum()
    }
}

/// A spatial discretization.
#[derive(Debug, Clone)]
pub enum Discretization {
    Spectral(SpectralOperator),
    Fem(FemOperator),
}

impl Discretization {
    pub fn spectral(n_modes: usize) -> Result<Self> {
        Ok(Self::Spectral(SpectralOperator::new(n_modes)?))
    }

    pub fn fem(n_cells: usize) -> Result<Self> {
        Ok(Self::Fem(FemOperator::new(n_cells)?))
    }

    /// Number of degrees of freedom.
    pub fn dim(&self) -> usize {
        match self {
            Self::Spectral(op) => op.n_modes(),
            Self::Fem(op) => op.n_nodes(),
        }
    }

    pub fn representation(&self) -> Representation {
        match self {
            Self::Spectral(_) => Representation::SpectralCoeffs,
            Self::Fem(_) => Representation::NodalValues,
        }
    }

    /// Spatial resolution parameter `h`.
    pub fn h(&self) -> f64 {
        match self {
            Self::Spectral(op) => op.h(),
            Self::Fem(op) => op.h(),
        }
    }

    pub fn zero_field(&self) -> Field {
        Field::zeros(self.representation(), self.dim())
    }

    /// `P_h x0`.
    pub fn project_initial(&self, x0: &InitialData) -> Result<Field> {
        match self {
            Self::Spectral(op) => Ok(Field::spectral((1..=op.n_modes()).map(|j| x0.coefficient(j)).collect())),
            Self::Fem(op) => {
                if x0.coefficients.iter().all(|&a| a == 0.0) {
                    return Ok(self.zero_field());
                }
                Ok(Field::nodal(op.l2_project(|x| x0.evaluate(x))?))
            }
        }
    }

    /// `‖u‖_{L²}`.
    pub fn l2_norm(&self, field: &Field) -> f64 {
        match self {
            Self::Spectral(_) => field.values().iter().map(|v| v * v).sum::<f64>().sqrt(),
            Self::Fem(op) => op.mass_norm(field.values()),
        }
    }

    /// `⟨u, ψ⟩` for a test function given as a sine series.
    pub fn inner_with_series(&self, field: &Field, psi: &[f64]) -> f64 {
        match self {
            Self::Spectral(_) => field.values().iter().zip(psi).map(|(a, b)| a * b).sum(),
            Self::Fem(op) => {
                let loads = op.mode_loads(psi.len());
                let m = psi.len();
                field
                    .values()
                    .iter()
                    .enumerate()
                    .map(|(i, u)| u * (0..m).map(|j| loads[i * m + j] * psi[j]).sum::<f64>())
                    .sum()
            }
        }
    }
}

/// Checks that a Nemytskii drift fits the model for spatial dimension `dim`:
/// it needs `δ = d/2 + ε < 2/ρ` for some `ε > 0`. When `delta` is given it
/// must itself satisfy `d/2 < δ < 2/ρ`.
pub fn validate_config(kernel: &KernelSpec, dim: usize, delta: Option<f64>) -> Result<()> {
    ensure!((1..=3).contains(&dim), Validation, "spatial dimension must be 1, 2 or 3, got {dim}");
    let rho = kernel.rho();
    let half_d = dim as f64 / 2.0;
    let bound = 2.0 / rho;
    ensure!(
        half_d < bound,
        Validation,
        "drift regularity requires d/2 < 2/rho, violated: d/2 = {half_d} >= 2/rho = {bound} \
         (for d = 3 this forces rho < 4/3)"
    );
    if let Some(delta) = delta {
        ensure!(
            delta > half_d && delta < bound,
            Validation,
            "delta must satisfy d/2 < delta < 2/rho, got delta = {delta}, d/2 = {half_d}, 2/rho = {bound}"
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn validity_of_dimension_and_rho() {
        assert!(validate_config(&KernelSpec::riesz(1.9).unwrap(), 1, None).is_ok());
        let e = validate_config(&KernelSpec::riesz(1.5).unwrap(), 3, None).unwrap_err();
        assert!(matches!(e, Error::Validation(ref m) if m.contains("4/3")));
        assert!(validate_config(&KernelSpec::riesz(1.3).unwrap(), 3, None).is_ok());
        assert!(validate_config(&KernelSpec::parabolic(), 3, None).is_ok());
        assert!(validate_config(&KernelSpec::riesz(1.5).unwrap(), 1, Some(0.6)).is_ok());
        assert!(validate_config(&KernelSpec::riesz(1.5).unwrap(), 1, Some(1.4)).is_err());
        assert!(validate_config(&KernelSpec::riesz(1.5).unwrap(), 4, None).is_err());
    }

    #[test]
    fn spectral_projection_truncates() {
        let op = Discretization::spectral(3).unwrap();
        let f = op.project_initial(&InitialData::mode(1)).unwrap();
        assert_eq!(f.values(), &[1.0, 0.0, 0.0]);
        let f = op.project_initial(&InitialData::zero()).unwrap();
        assert_eq!(f.values(), &[0.0; 3]);
        let long = InitialData::new(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let f = op.project_initial(&long).unwrap();
        assert_eq!(f.values(), &[1.0, 2.0, 3.0]);
        // idempotent: projecting the truncated series again changes nothing
        let again = op.project_initial(&InitialData::new(f.values().to_vec())).unwrap();
        assert_eq!(again, f);
    }

    #[test]
    fn fem_projection_of_zero_is_zero() {
        let op = Discretization::fem(8).unwrap();
        let f = op.project_initial(&InitialData::zero()).unwrap();
        assert!(f.values().iter().all(|&v| v == 0.0));
        assert_eq!(f.representation(), Representation::NodalValues);
    }

    #[test]
    fn fem_inner_product_with_mode() {
        let op = Discretization::fem(128).unwrap();
        let f = op.project_initial(&InitialData::mode(2)).unwrap();
        let ip = op.inner_with_series(&f, &[0.0, 1.0]);
        assert!((ip - 1.0).abs() < 1e-3);
        assert!((op.l2_norm(&f) - 1.0).abs() < 1e-3);
    }
}
