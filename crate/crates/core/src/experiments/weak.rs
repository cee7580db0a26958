//! Weak errors `|E Φ(X) - E Φ(X̃^{h,k})|` for polynomial path functionals.
//!
//! With `F = 0` every inner product `∫ ⟨X_t, ψ⟩ dν(t)` with a Dirac measure
//! is Gaussian, in continuous and discrete time alike, so `E Φ` follows from
//! means and covariances through Gaussian integration by parts
//! `E[Y_1 g(Y)] = m_1 E[g] + Σ_k C_{1k} E[∂_k g]`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{ensure, Result};
use crate::operator::dirichlet_eigenvalue;
use crate::reference::{discrete_covariance, discrete_resolvent, exact_linear_covariance, Resolvent};
use crate::scheme::{Simulator, TimeGrid};

use super::functional::{evaluate_functional, FunctionalSpec, FunctionalTerm, Measure, Monomial, Polynomial};
use super::strong::{check_reference_level, level_runners};
use super::{per_path, Estimate, Ladder, Level, MonteCarlo, Problem, RateRow, RateTable, RateWindow, SpaceKind};

impl FunctionalSpec {
    /// `‖P_L X_τ‖² = Σ_{j ≤ L} ⟨X_τ, e_j⟩²`.
    pub fn norm_squared(modes: usize, tau: f64) -> Self {
        let tests = (1..=modes)
            .map(|j| {
                let mut psi = vec![0.0; j];
                psi[j - 1] = 1.0;
                psi
            })
            .collect();
        let monomials = (0..modes)
            .map(|j| {
                let mut powers = vec![0; j + 1];
                powers[j] = 2;
                Monomial { coef: 1.0, powers }
            })
            .collect();
        Self {
            terms: vec![FunctionalTerm { polynomial: Polynomial { monomials }, tests, measure: Measure::dirac(tau) }],
        }
    }
}

/// One Gaussian linear form `Σ_α w_α ⟨X_{τ_α}, ψ⟩`, with times as indices
/// into a shared time list.
#[derive(Debug, Clone)]
pub(crate) struct LinearForm {
    pub atoms: Vec<(f64, usize)>,
    pub psi: Vec<f64>,
}

/// A polynomial functional flattened to monomials in linear forms.
#[derive(Debug, Clone)]
pub(crate) struct GaussianFunctional {
    pub times: Vec<f64>,
    pub forms: Vec<LinearForm>,
    /// `(coefficient, multiset of form indices)`.
    pub monomials: Vec<(f64, Vec<usize>)>,
}

impl GaussianFunctional {
    pub fn new(spec: &FunctionalSpec) -> Result<Self> {
        let mut times: Vec<f64> = Vec::new();
        let mut forms = Vec::new();
        let mut product: Vec<(f64, Vec<usize>)> = vec![(1.0, Vec::new())];
        for (i, term) in spec.terms.iter().enumerate() {
            ensure!(
                term.measure.is_pure_dirac(),
                Validation,
                "term {i}: closed-form weak errors support Dirac measures only"
            );
            ensure!(
                term.polynomial.arity() <= term.tests.len(),
                Validation,
                "term {i}: polynomial reads {} inner products but only {} test functions are given",
                term.polynomial.arity(),
                term.tests.len()
            );
            let atoms: Vec<(f64, usize)> = term
                .measure
                .atoms
                .iter()
                .map(|&(w, tau)| {
                    let idx = match times.iter().position(|&t| t == tau) {
                        Some(p) => p,
                        None => {
                            times.push(tau);
                            times.len() - 1
                        }
                    };
                    (w, idx)
                })
                .collect();
            let base = forms.len();
            forms.extend(term.tests.iter().map(|psi| LinearForm { atoms: atoms.clone(), psi: psi.clone() }));
            let mut factor = Vec::new();
            for m in &term.polynomial.monomials {
                let mut vars = Vec::new();
                for (r, &p) in m.powers.iter().enumerate() {
                    vars.extend(std::iter::repeat(base + r).take(p as usize));
                }
                factor.push((m.coef, vars));
            }
            let mut next = Vec::with_capacity(product.len() * factor.len());
            for (c1, v1) in &product {
                for (c2, v2) in &factor {
                    let mut v = v1.clone();
                    v.extend(v2);
                    v.sort_unstable();
                    next.push((c1 * c2, v));
                }
            }
            product = next;
        }
        // merge equal monomials so the evaluation order is canonical
        let mut merged: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for (c, v) in product {
            *merged.entry(v).or_insert(0.0) += c;
        }
        let monomials = merged.into_iter().map(|(v, c)| (c, v)).collect();
        Ok(Self { times, forms, monomials })
    }

    /// Modes read by any test function.
    pub fn modes(&self) -> Vec<usize> {
        let mut modes: Vec<usize> = self
            .forms
            .iter()
            .flat_map(|f| f.psi.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, _)| j + 1))
            .collect();
        modes.sort_unstable();
        modes.dedup();
        modes
    }

    /// `E Φ` given per-mode Gaussian statistics.
    pub fn expectation(&self, stats: &ModeStatistics) -> f64 {
        let nf = self.forms.len();
        let means: Vec<f64> = self.forms.iter().map(|f| form_mean(f, stats)).collect();
        let mut cov = vec![0.0; nf * nf];
        for a in 0..nf {
            for b in a..nf {
                let c = form_covariance(&self.forms[a], &self.forms[b], stats);
                cov[a * nf + b] = c;
                cov[b * nf + a] = c;
            }
        }
        self.monomials.iter().map(|(c, vars)| c * gaussian_moment(vars, &means, &cov, nf)).sum()
    }
}

/// Per-mode means `m_j(τ)` and covariances `c_j(τ, τ')` at the functional's
/// times.
#[derive(Debug, Clone)]
pub(crate) struct ModeStatistics {
    n_times: usize,
    /// Indexed by mode number; missing modes are identically zero.
    per_mode: BTreeMap<usize, (Vec<f64>, Vec<f64>)>,
}

impl ModeStatistics {
    fn mean(&self, j: usize, t: usize) -> f64 {
        self.per_mode.get(&j).map_or(0.0, |(m, _)| m[t])
    }

    fn cov(&self, j: usize, t1: usize, t2: usize) -> f64 {
        self.per_mode.get(&j).map_or(0.0, |(_, c)| c[t1 * self.n_times + t2])
    }

    /// Exact solution statistics.
    pub fn continuous(problem: &Problem, times: &[f64], modes: &[usize]) -> Result<Self> {
        let nt = times.len();
        let horizon = times.iter().copied().fold(problem.t_end, f64::max);
        let per_mode = modes
            .par_iter()
            .map(|&j| {
                let lambda = dirichlet_eigenvalue(j);
                let mu = problem.noise.eigenvalue(j);
                let s = Resolvent::new(&problem.kernel, lambda, horizon)?;
                let x0 = problem.x0.coefficient(j);
                let means = times.iter().map(|&t| Ok(s.eval(t)? * x0)).collect::<Result<Vec<_>>>()?;
                let mut cov = vec![0.0; nt * nt];
                for a in 0..nt {
                    for b in a..nt {
                        let c = exact_linear_covariance(&problem.kernel, lambda, mu, times[a], times[b])?;
                        cov[a * nt + b] = c;
                        cov[b * nt + a] = c;
                    }
                }
                Ok((j, (means, cov)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n_times: nt, per_mode: per_mode.into_iter().collect() })
    }

    /// Statistics of the spectral scheme with `level.resolution` modes.
    pub fn discrete(problem: &Problem, level: Level, times: &[f64], modes: &[usize]) -> Result<Self> {
        let grid = TimeGrid::new(problem.t_end, level.n_steps)?;
        let nodes = times
            .iter()
            .map(|&t| {
                grid.node_index(t).ok_or_else(|| {
                    crate::Error::Validation(format!(
                        "Dirac atom at t = {t} is not a node of the grid with k = {}",
                        grid.k()
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let nt = times.len();
        let k = grid.k();
        let per_mode = modes
            .par_iter()
            .filter(|&&j| j <= level.resolution)
            .map(|&j| {
                let lambda = dirichlet_eigenvalue(j);
                let mu = problem.noise.eigenvalue(j);
                let b = discrete_resolvent(&problem.kernel, lambda, k, level.n_steps)?;
                let x0 = problem.x0.coefficient(j);
                let means = nodes.iter().map(|&n| b[n] * x0).collect();
                let mut cov = vec![0.0; nt * nt];
                for a in 0..nt {
                    for c in a..nt {
                        let v = discrete_covariance(&b, mu, k, nodes[a], nodes[c])?;
                        cov[a * nt + c] = v;
                        cov[c * nt + a] = v;
                    }
                }
                Ok((j, (means, cov)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n_times: nt, per_mode: per_mode.into_iter().collect() })
    }
}

fn form_mean(f: &LinearForm, stats: &ModeStatistics) -> f64 {
    f.atoms.iter().map(|&(w, t)| w * f.psi.iter().enumerate().map(|(j, p)| p * stats.mean(j + 1, t)).sum::<f64>()).sum()
}

fn form_covariance(a: &LinearForm, b: &LinearForm, stats: &ModeStatistics) -> f64 {
    let mut total = 0.0;
    for (j, (pa, pb)) in a.psi.iter().zip(&b.psi).enumerate() {
        if *pa == 0.0 || *pb == 0.0 {
            continue;
        }
        for &(wa, ta) in &a.atoms {
            for &(wb, tb) in &b.atoms {
                total += pa * pb * wa * wb * stats.cov(j + 1, ta, tb);
            }
        }
    }
    total
}

/// `E[Y_{v_1} ⋯ Y_{v_n}]` for a Gaussian vector with the given mean and
/// covariance.
fn gaussian_moment(vars: &[usize], means: &[f64], cov: &[f64], n: usize) -> f64 {
    match vars {
        [] => 1.0,
        [a] => means[*a],
        [a, b] => cov[a * n + b] + means[*a] * means[*b],
        [first, rest @ ..] => {
            let mut total = means[*first] * gaussian_moment(rest, means, cov, n);
            for i in 0..rest.len() {
                let c = cov[first * n + rest[i]];
                if c != 0.0 {
                    let mut without: Vec<usize> = rest.to_vec();
                    without.remove(i);
                    total += c * gaussian_moment(&without, means, cov, n);
                }
            }
            total
        }
    }
}

/// `E Φ(X)` for the exact linear solution.
pub fn exact_expectation(problem: &Problem, spec: &FunctionalSpec) -> Result<f64> {
    problem.linear()?;
    let g = GaussianFunctional::new(spec)?;
    Ok(g.expectation(&ModeStatistics::continuous(problem, &g.times, &g.modes())?))
}

/// `E Φ(X̃^{h,k})` for the linear spectral scheme.
pub fn discrete_expectation(problem: &Problem, level: Level, spec: &FunctionalSpec) -> Result<f64> {
    problem.linear()?;
    let g = GaussianFunctional::new(spec)?;
    Ok(g.expectation(&ModeStatistics::discrete(problem, level, &g.times, &g.modes())?))
}

/// Closed-form weak errors on a spectral ladder for `F = 0`.
pub fn weak_rate_exact(
    problem: &Problem,
    ladder: &Ladder,
    spec: &FunctionalSpec,
    window: Option<RateWindow>,
) -> Result<RateTable> {
    super::strong::require_linear_spectral(problem, ladder)?;
    let g = GaussianFunctional::new(spec)?;
    let modes = g.modes();
    let exact = g.expectation(&ModeStatistics::continuous(problem, &g.times, &modes)?);
    let rows = ladder
        .levels
        .iter()
        .enumerate()
        .map(|(i, &level)| {
            let approx = g.expectation(&ModeStatistics::discrete(problem, level, &g.times, &modes)?);
            let disc = ladder.space.discretization(level.resolution)?;
            Ok(RateRow {
                level: i,
                h: disc.h(),
                k: problem.t_end / level.n_steps as f64,
                error: (exact - approx).abs(),
                stderr: 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateTable::new(ladder.axis, rows, window))
}

/// Coupled Monte Carlo weak errors `|E[Φ(X^{ref}) - Φ(X^{level})]|`, with
/// the reference level driven by the same increments.
pub fn weak_error_mc(
    problem: &Problem,
    ladder: &Ladder,
    spec: &FunctionalSpec,
    reference: Level,
    mc: MonteCarlo,
    window: Option<RateWindow>,
) -> Result<RateTable> {
    check_reference_level(ladder, reference)?;
    let runners = level_runners(problem, ladder, reference.n_steps)?;
    let ref_config = problem.config(ladder.space, reference)?;
    spec.validate(&ref_config.grid)?;
    let ref_nodes = spec.required_nodes(&ref_config.grid)?;
    let level_nodes = runners
        .iter()
        .map(|r| {
            let grid = TimeGrid::new(problem.t_end, r.level.n_steps)?;
            spec.validate(&grid)?;
            spec.required_nodes(&grid)
        })
        .collect::<Result<Vec<_>>>()?;
    let ref_sim = Simulator::new(&ref_config)?;
    let columns = per_path(mc.n_paths, runners.len(), |path| {
        let table = problem.increments(reference.n_steps, mc.seed, path)?;
        let phi_ref = evaluate_functional(spec, &ref_sim.simulate(&table, &ref_nodes)?, &ref_config.discretization)?;
        runners
            .iter()
            .zip(&level_nodes)
            .map(|(r, nodes)| {
                let traj = r.sim.simulate(&table.coarsen(r.factor)?, nodes)?;
                Ok(phi_ref - evaluate_functional(spec, &traj, &r.disc)?)
            })
            .collect()
    })?;
    let rows = runners
        .iter()
        .zip(&columns)
        .enumerate()
        .map(|(i, (r, samples))| {
            let est = Estimate::from_samples(samples);
            Ok(RateRow {
                level: i,
                h: r.disc.h(),
                k: problem.t_end / r.level.n_steps as f64,
                error: est.mean.abs(),
                stderr: est.stderr,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateTable::new(ladder.axis, rows, window))
}

/// Whether a ladder can use the closed form.
pub fn supports_exact(problem: &Problem, ladder: &Ladder, spec: &FunctionalSpec) -> bool {
    problem.is_linear() && ladder.space == SpaceKind::Spectral && spec.terms.iter().all(|t| t.measure.is_pure_dirac())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelSpec;
    use crate::noise::NoiseModel;
    use crate::operator::InitialData;
    use crate::reference::{exact_discrete_moments, exact_linear_moments};
    use crate::scheme::DriftSpec;
    use approx::assert_relative_eq;

    fn problem(x0: Vec<f64>) -> Problem {
        Problem {
            kernel: KernelSpec::riesz(1.5).unwrap(),
            noise: NoiseModel::power_law(1.0, 1.0, 64).unwrap(),
            drift: DriftSpec::Zero,
            x0: InitialData::new(x0),
            t_end: 1.0,
        }
    }

    #[test]
    fn quadratic_mode_functional_matches_moments() {
        let p = problem(vec![1.0]);
        let spec = FunctionalSpec::mode_power(1, 1.0, 2);
        let lambda = dirichlet_eigenvalue(1);
        let m = exact_linear_moments(&p.kernel, lambda, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(exact_expectation(&p, &spec).unwrap(), m.mean.powi(2) + m.variance, max_relative = 1e-10);
        let level = Level { n_steps: 32, resolution: 4 };
        let b = discrete_resolvent(&p.kernel, lambda, 1.0 / 32.0, 32).unwrap();
        let d = exact_discrete_moments(&b, 1.0, 1.0, 1.0 / 32.0, 32).unwrap();
        assert_relative_eq!(
            discrete_expectation(&p, level, &spec).unwrap(),
            d.mean.powi(2) + d.variance,
            max_relative = 1e-12
        );
    }

    #[test]
    fn odd_functionals_of_centred_solutions_vanish() {
        let p = problem(vec![]);
        for power in [1, 3] {
            let spec = FunctionalSpec::mode_power(2, 1.0, power);
            assert_eq!(exact_expectation(&p, &spec).unwrap(), 0.0);
        }
        let ladder = Ladder::temporal(SpaceKind::Spectral, 4, &[4, 8, 16]).unwrap();
        let t = weak_rate_exact(&p, &ladder, &FunctionalSpec::mode_power(1, 1.0, 1), None).unwrap();
        assert!(t.rows.iter().all(|r| r.error == 0.0));
        assert!(t.fit.is_none());
    }

    #[test]
    fn fourth_moment_by_integration_by_parts() {
        // E Y⁴ = 3σ⁴ + 6σ²m² + m⁴
        let p = problem(vec![0.7]);
        let m = exact_linear_moments(&p.kernel, dirichlet_eigenvalue(1), 1.0, 0.7, 1.0).unwrap();
        let v = exact_expectation(&p, &FunctionalSpec::mode_power(1, 1.0, 4)).unwrap();
        let expect = 3.0 * m.variance.powi(2) + 6.0 * m.variance * m.mean.powi(2) + m.mean.powi(4);
        assert_relative_eq!(v, expect, max_relative = 1e-10);
    }

    #[test]
    fn norm_squared_sums_modes() {
        let p = problem(vec![1.0, 0.0, 0.5]);
        let level = Level { n_steps: 16, resolution: 8 };
        let whole = discrete_expectation(&p, level, &FunctionalSpec::norm_squared(6, 1.0)).unwrap();
        let parts: f64 =
            (1..=6).map(|j| discrete_expectation(&p, level, &FunctionalSpec::mode_power(j, 1.0, 2)).unwrap()).sum();
        assert_relative_eq!(whole, parts, max_relative = 1e-12);
        // modes beyond the level resolution are zero in the scheme
        let coarse = Level { n_steps: 16, resolution: 2 };
        let two: f64 =
            (1..=2).map(|j| discrete_expectation(&p, level, &FunctionalSpec::mode_power(j, 1.0, 2)).unwrap()).sum();
        assert_relative_eq!(
            discrete_expectation(&p, coarse, &FunctionalSpec::norm_squared(6, 1.0)).unwrap(),
            two,
            max_relative = 1e-12
        );
    }

    #[test]
    fn lebesgue_measures_are_rejected_by_the_closed_form() {
        let p = problem(vec![1.0]);
        let mut spec = FunctionalSpec::mode_power(1, 1.0, 2);
        spec.terms[0].measure.density = Some(crate::experiments::functional::Density { coefficients: vec![1.0] });
        assert!(exact_expectation(&p, &spec).is_err());
        let ladder = Ladder::temporal(SpaceKind::Spectral, 4, &[4, 8, 16]).unwrap();
        assert!(!supports_exact(&p, &ladder, &spec));
    }

    #[test]
    fn coupled_difference_estimator_is_unbiased() {
        let p = problem(vec![1.0]);
        let spec = FunctionalSpec::mode_power(1, 1.0, 2);
        let ladder = Ladder::temporal(SpaceKind::Spectral, 4, &[2, 4, 8]).unwrap();
        let reference = Level { n_steps: 32, resolution: 4 };
        let mc = MonteCarlo::new(4000, 9).unwrap();
        let table = weak_error_mc(&p, &ladder, &spec, reference, mc, None).unwrap();
        let e_ref = discrete_expectation(&p, reference, &spec).unwrap();
        for (row, level) in table.rows.iter().zip(&ladder.levels) {
            let exact = e_ref - discrete_expectation(&p, *level, &spec).unwrap();
            assert!((row.error - exact.abs()).abs() < 3.0 * row.stderr, "{} vs {exact} ± {}", row.error, row.stderr);
        }
    }
}
