//! Path functionals `Φ(X) = Π_i φ_i(∫_0^T X_t dν_i(t))` with `φ_i` a
//! polynomial in finitely many inner products `⟨·, ψ⟩`.

use crate::error::{ensure, Error, Result};
use crate::operator::Discretization;
use crate::scheme::{TimeGrid, Trajectory};

/// `c · y_1^{p_1} ⋯ y_r^{p_r}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub monomials: Vec<Monomial>,
}

impl Polynomial {
    pub fn constant(c: f64) -> Self {
        Self { monomials: vec![Monomial { coef: c, powers: vec![] }] }
    }

    /// `y_1`.
    pub fn linear() -> Self {
        Self { monomials: vec![Monomial { coef: 1.0, powers: vec![1] }] }
    }

    /// `y_1²`.
    pub fn square() -> Self {
        Self { monomials: vec![Monomial { coef: 1.0, powers: vec![2] }] }
    }

    /// Number of variables the polynomial reads.
    pub fn arity(&self) -> usize {
        self.monomials.iter().map(|m| m.powers.len()).max().unwrap_or(0)
    }

    pub fn degree(&self) -> u32 {
        self.monomials.iter().map(|m| m.powers.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.monomials
            .iter()
            .map(|m| m.coef * m.powers.iter().zip(y).map(|(&p, &v)| v.powi(p as i32)).product::<f64>())
            .sum()
    }
}

/// Lebesgue density `w(t) = Σ_i c_i t^i` on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    pub coefficients: Vec<f64>,
}

impl Density {
    pub fn eval(&self, t: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }
}

/// `Σ w δ_τ` plus an optional density.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Measure {
    pub atoms: Vec<(f64, f64)>,
    pub density: Option<Density>,
}

impl Measure {
    pub fn dirac(t: f64) -> Self {
        Self { atoms: vec![(1.0, t)], density: None }
    }

    /// Weights `c_n` such that `∫ X̃ dν = Σ_n c_n X_n` for the piecewise
    /// constant interpolant of the grid values. Atoms must sit on nodes.
    pub fn node_weights(&self, grid: &TimeGrid) -> Result<Vec<(usize, f64)>> {
        let mut weights = std::collections::BTreeMap::new();
        for &(w, tau) in &self.atoms {
            let n = grid.node_index(tau).ok_or_else(|| {
                Error::Validation(format!("Dirac atom at t = {tau} is not a node of the grid with k = {}", grid.k()))
            })?;
            *weights.entry(n).or_insert(0.0) += w;
        }
        if let Some(d) = &self.density {
            let k = grid.k();
            for n in 0..grid.n_steps() {
                let c = 0.5 * k * (d.eval(grid.node(n)) + d.eval(grid.node(n + 1)));
                *weights.entry(n).or_insert(0.0) += c;
            }
        }
        Ok(weights.into_iter().collect())
    }

    pub fn is_pure_dirac(&self) -> bool {
        self.density.is_none()
    }
}

/// One factor `φ_i(∫ X dν_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalTerm {
    pub polynomial: Polynomial,
    /// Test functions as sine series, one per polynomial variable.
    pub tests: Vec<Vec<f64>>,
    pub measure: Measure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSpec {
    pub terms: Vec<FunctionalTerm>,
}

impl FunctionalSpec {
    /// `⟨X_τ, e_j⟩^power`.
    pub fn mode_power(j: usize, tau: f64, power: u32) -> Self {
        let mut psi = vec![0.0; j];
        psi[j - 1] = 1.0;
        Self {
            terms: vec![FunctionalTerm {
                polynomial: Polynomial { monomials: vec![Monomial { coef: 1.0, powers: vec![power] }] },
                tests: vec![psi],
                measure: Measure::dirac(tau),
            }],
        }
    }

    pub fn validate(&self, grid: &TimeGrid) -> Result<()> {
        for (i, term) in self.terms.iter().enumerate() {
            ensure!(
                term.polynomial.arity() <= term.tests.len(),
                Validation,
                "term {i}: polynomial reads {} inner products but only {} test functions are given",
                term.polynomial.arity(),
                term.tests.len()
            );
            term.measure.node_weights(grid)?;
        }
        Ok(())
    }

    /// Grid nodes the functional reads.
    pub fn required_nodes(&self, grid: &TimeGrid) -> Result<Vec<usize>> {
        let mut nodes = Vec::new();
        for term in &self.terms {
            nodes.extend(term.measure.node_weights(grid)?.into_iter().map(|(n, _)| n));
        }
        nodes.sort_unstable();
        nodes.dedup();
        Ok(nodes)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|t| t.polynomial.degree()).sum()
    }
}

/// `Φ(X̃)` for a recorded trajectory on `disc`.
pub fn evaluate_functional(spec: &FunctionalSpec, trajectory: &Trajectory, disc: &Discretization) -> Result<f64> {
    let grid = TimeGrid::new(trajectory.k * trajectory.n_steps as f64, trajectory.n_steps)?;
    let mut value = 1.0;
    for term in &spec.terms {
        let mut z = vec![0.0; disc.dim()];
        for (n, c) in term.measure.node_weights(&grid)? {
            let x = trajectory.state(n)?;
            z.iter_mut().zip(x.values()).for_each(|(a, b)| *a += c * b);
        }
        let z = match disc {
            Discretization::Spectral(_) => crate::operator::Field::spectral(z),
            Discretization::Fem(_) => crate::operator::Field::nodal(z),
        };
        let y: Vec<f64> = term.tests.iter().map(|psi| disc.inner_with_series(&z, psi)).collect();
        value *= term.polynomial.eval(&y);
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelSpec;
    use crate::noise::{IncrementTable, NoiseModel};
    use crate::operator::InitialData;
    use crate::scheme::{simulate_path, DriftSpec, SchemeConfig};

    fn trajectory() -> (Trajectory, Discretization) {
        let disc = Discretization::spectral(3).unwrap();
        let cfg = SchemeConfig::new(
            KernelSpec::riesz(1.5).unwrap(),
            disc.clone(),
            TimeGrid::new(1.0, 8).unwrap(),
            DriftSpec::Zero,
            NoiseModel::power_law(1.0, 1.0, 3).unwrap(),
            InitialData::new(vec![1.0, 2.0]),
        )
        .unwrap();
        let inc = IncrementTable::sample(&cfg.noise, 0.125, 8, 3, 1, 0).unwrap();
        let all: Vec<usize> = (0..=8).collect();
        (simulate_path(&cfg, &inc, &all).unwrap(), disc)
    }

    #[test]
    fn mode_coefficient_at_final_time() {
        let (traj, disc) = trajectory();
        let v = evaluate_functional(&FunctionalSpec::mode_power(1, 1.0, 1), &traj, &disc).unwrap();
        assert_eq!(v, traj.final_state().values()[0]);
    }

    #[test]
    fn constant_functional() {
        let (traj, disc) = trajectory();
        let spec = FunctionalSpec {
            terms: vec![FunctionalTerm {
                polynomial: Polynomial::constant(1.0),
                tests: vec![],
                measure: Measure::default(),
            }],
        };
        assert_eq!(evaluate_functional(&spec, &traj, &disc).unwrap(), 1.0);
    }

    #[test]
    fn product_of_two_times() {
        let (traj, disc) = trajectory();
        let a = FunctionalSpec::mode_power(1, 0.25, 1);
        let b = FunctionalSpec::mode_power(2, 0.75, 1);
        let spec = FunctionalSpec { terms: vec![a.terms[0].clone(), b.terms[0].clone()] };
        let v = evaluate_functional(&spec, &traj, &disc).unwrap();
        let direct = traj.state(2).unwrap().values()[0] * traj.state(6).unwrap().values()[1];
        assert!((v - direct).abs() <= 1e-15 * direct.abs());
    }

    #[test]
    fn off_grid_atom_and_missing_nodes() {
        let grid = TimeGrid::new(1.0, 8).unwrap();
        assert!(FunctionalSpec::mode_power(1, 0.3, 1).validate(&grid).is_err());
        let disc = Discretization::spectral(3).unwrap();
        let spec = FunctionalSpec::mode_power(1, 0.5, 1);
        let cfg_traj = {
            let cfg = SchemeConfig::new(
                KernelSpec::riesz(1.5).unwrap(),
                disc.clone(),
                grid,
                DriftSpec::Zero,
                NoiseModel::zero(3),
                InitialData::mode(1),
            )
            .unwrap();
            let inc = IncrementTable::sample(&cfg.noise, 0.125, 8, 3, 1, 0).unwrap();
            simulate_path(&cfg, &inc, &[]).unwrap()
        };
        assert!(matches!(evaluate_functional(&spec, &cfg_traj, &disc), Err(Error::MissingNode(4))));
    }

    #[test]
    fn lebesgue_part_uses_piecewise_constant_trapezoid() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let m = Measure { atoms: vec![], density: Some(Density { coefficients: vec![1.0] }) };
        let w = m.node_weights(&grid).unwrap();
        assert_eq!(w, vec![(0, 0.25), (1, 0.25), (2, 0.25), (3, 0.25)]);
        let m = Measure { atoms: vec![(2.0, 1.0)], density: Some(Density { coefficients: vec![0.0, 1.0] }) };
        let total: f64 = m.node_weights(&grid).unwrap().iter().map(|(_, c)| c).sum();
        assert!((total - 2.5).abs() < 1e-15);
    }
}
