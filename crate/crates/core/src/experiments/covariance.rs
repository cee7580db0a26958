//! Convergence of `Cov(⟨X_{t1}, φ1⟩, ⟨X_{t2}, φ2⟩)`.

use crate::error::{ensure, Result};
use crate::scheme::{Simulator, TimeGrid};

use super::functional::{FunctionalSpec, FunctionalTerm, Measure, Polynomial};
use super::strong::{check_reference_level, level_runners, require_linear_spectral};
use super::weak::{GaussianFunctional, ModeStatistics};
use super::{per_path, Ladder, Level, MonteCarlo, Problem, RateRow, RateTable, RateWindow};

/// A test function (sine series) observed at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub psi: Vec<f64>,
    pub t: f64,
}

impl Observation {
    pub fn mode(j: usize, t: f64) -> Self {
        let mut psi = vec![0.0; j];
        psi[j - 1] = 1.0;
        Self { psi, t }
    }

    fn functional(&self) -> FunctionalSpec {
        FunctionalSpec {
            terms: vec![FunctionalTerm {
                polynomial: Polynomial::linear(),
                tests: vec![self.psi.clone()],
                measure: Measure::dirac(self.t),
            }],
        }
    }
}

fn pair_functional(a: &Observation, b: &Observation) -> FunctionalSpec {
    let mut spec = a.functional();
    spec.terms.extend(b.functional().terms);
    spec
}

fn covariance_from(
    g_pair: &GaussianFunctional,
    g_a: &GaussianFunctional,
    g_b: &GaussianFunctional,
    stats: impl Fn(&GaussianFunctional) -> Result<ModeStatistics>,
) -> Result<f64> {
    let e_ab = g_pair.expectation(&stats(g_pair)?);
    let e_a = g_a.expectation(&stats(g_a)?);
    let e_b = g_b.expectation(&stats(g_b)?);
    Ok(e_ab - e_a * e_b)
}

/// Closed-form covariance errors for `F = 0` on a spectral ladder.
pub fn covariance_rate_exact(
    problem: &Problem,
    ladder: &Ladder,
    a: &Observation,
    b: &Observation,
    window: Option<RateWindow>,
) -> Result<RateTable> {
    require_linear_spectral(problem, ladder)?;
    let pair = GaussianFunctional::new(&pair_functional(a, b))?;
    let ga = GaussianFunctional::new(&a.functional())?;
    let gb = GaussianFunctional::new(&b.functional())?;
    let exact = covariance_from(&pair, &ga, &gb, |g| ModeStatistics::continuous(problem, &g.times, &g.modes()))?;
    let rows = ladder
        .levels
        .iter()
        .enumerate()
        .map(|(i, &level)| {
            let approx =
                covariance_from(&pair, &ga, &gb, |g| ModeStatistics::discrete(problem, level, &g.times, &g.modes()))?;
            Ok(RateRow {
                level: i,
                h: ladder.space.discretization(level.resolution)?.h(),
                k: problem.t_end / level.n_steps as f64,
                error: (exact - approx).abs(),
                stderr: 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateTable::new(ladder.axis, rows, window))
}

/// Default number of batches for batch-means standard errors.
pub const BATCHES: usize = 20;

/// Monte Carlo covariance errors `|Ĉov_ref - Ĉov_level|` with common random
/// numbers and batch-means standard errors.
pub fn covariance_error_mc(
    problem: &Problem,
    ladder: &Ladder,
    a: &Observation,
    b: &Observation,
    reference: Level,
    mc: MonteCarlo,
    window: Option<RateWindow>,
) -> Result<RateTable> {
    ensure!(mc.n_paths >= 2 * BATCHES, Validation, "batch-means covariance needs at least {} paths", 2 * BATCHES);
    check_reference_level(ladder, reference)?;
    let runners = level_runners(problem, ladder, reference.n_steps)?;
    let ref_config = problem.config(ladder.space, reference)?;
    let ref_sim = Simulator::new(&ref_config)?;
    let nodes = |n_steps: usize| -> Result<(usize, usize)> {
        let grid = TimeGrid::new(problem.t_end, n_steps)?;
        let find = |t: f64| {
            grid.node_index(t).ok_or_else(|| {
                crate::Error::Validation(format!(
                    "observation time {t} is not a node of the grid with k = {}",
                    grid.k()
                ))
            })
        };
        Ok((find(a.t)?, find(b.t)?))
    };
    let ref_nodes = nodes(reference.n_steps)?;
    let level_nodes = runners.iter().map(|r| nodes(r.level.n_steps)).collect::<Result<Vec<_>>>()?;
    // per path: (A, B) for the reference and every level
    let width = 2 * (runners.len() + 1);
    let columns = per_path(mc.n_paths, width, |path| {
        let table = problem.increments(reference.n_steps, mc.seed, path)?;
        let mut out = Vec::with_capacity(width);
        let traj = ref_sim.simulate(&table, &[ref_nodes.0, ref_nodes.1])?;
        out.push(ref_config.discretization.inner_with_series(traj.state(ref_nodes.0)?, &a.psi));
        out.push(ref_config.discretization.inner_with_series(traj.state(ref_nodes.1)?, &b.psi));
        for (r, n) in runners.iter().zip(&level_nodes) {
            let traj = r.sim.simulate(&table.coarsen(r.factor)?, &[n.0, n.1])?;
            out.push(r.disc.inner_with_series(traj.state(n.0)?, &a.psi));
            out.push(r.disc.inner_with_series(traj.state(n.1)?, &b.psi));
        }
        Ok(out)
    })?;
    let cov = |xa: &[f64], xb: &[f64]| {
        let n = xa.len() as f64;
        let ma = xa.iter().sum::<f64>() / n;
        let mb = xb.iter().sum::<f64>() / n;
        xa.iter().zip(xb).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n - 1.0)
    };
    let batch = mc.n_paths / BATCHES;
    let rows = runners
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let (la, lb) = (&columns[2 * i + 2], &columns[2 * i + 3]);
            let (ra, rb) = (&columns[0], &columns[1]);
            let diff = cov(ra, rb) - cov(la, lb);
            let batches: Vec<f64> = (0..BATCHES)
                .map(|q| {
                    let s = q * batch..(q + 1) * batch;
                    cov(&ra[s.clone()], &rb[s.clone()]) - cov(&la[s.clone()], &lb[s])
                })
                .collect();
            let bm = batches.iter().sum::<f64>() / BATCHES as f64;
            let bvar = batches.iter().map(|d| (d - bm).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
            Ok(RateRow {
                level: i,
                h: r.disc.h(),
                k: problem.t_end / r.level.n_steps as f64,
                error: diff.abs(),
                stderr: (bvar / BATCHES as f64).sqrt(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateTable::new(ladder.axis, rows, window))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::weak::{discrete_expectation, exact_expectation};
    use crate::experiments::SpaceKind;
    use crate::kernel::KernelSpec;
    use crate::noise::NoiseModel;
    use crate::operator::InitialData;
    use crate::scheme::DriftSpec;
    use approx::assert_abs_diff_eq;

    fn problem() -> Problem {
        Problem {
            kernel: KernelSpec::riesz(1.5).unwrap(),
            noise: NoiseModel::power_law(1.0, 1.0, 16).unwrap(),
            drift: DriftSpec::Zero,
            x0: InitialData::new(vec![1.0, -0.5]),
            t_end: 1.0,
        }
    }

    #[test]
    fn equal_times_reduce_to_variance_error() {
        let p = problem();
        let ladder = Ladder::temporal(SpaceKind::Spectral, 4, &[4, 8, 16]).unwrap();
        let obs = Observation::mode(1, 1.0);
        let table = covariance_rate_exact(&p, &ladder, &obs, &obs, None).unwrap();
        let sq = FunctionalSpec::mode_power(1, 1.0, 2);
        let lin = FunctionalSpec::mode_power(1, 1.0, 1);
        let var_exact = exact_expectation(&p, &sq).unwrap() - exact_expectation(&p, &lin).unwrap().powi(2);
        for (row, level) in table.rows.iter().zip(&ladder.levels) {
            let var = discrete_expectation(&p, *level, &sq).unwrap()
                - discrete_expectation(&p, *level, &lin).unwrap().powi(2);
            assert_abs_diff_eq!(row.error, (var_exact - var).abs(), epsilon = 1e-12);
        }
    }

    #[test]
    fn distinct_modes_are_uncorrelated() {
        let p = problem();
        let ladder = Ladder::temporal(SpaceKind::Spectral, 4, &[4, 8, 16]).unwrap();
        let table =
            covariance_rate_exact(&p, &ladder, &Observation::mode(1, 0.5), &Observation::mode(2, 1.0), None).unwrap();
        assert!(table.rows.iter().all(|r| r.error.abs() < 1e-15));
    }

    #[test]
    fn monte_carlo_agrees_with_closed_form() {
        let p = problem();
        let ladder = Ladder::temporal(SpaceKind::Spectral, 4, &[2, 4, 8]).unwrap();
        let (a, b) = (Observation::mode(1, 0.5), Observation::mode(1, 1.0));
        let reference = Level { n_steps: 32, resolution: 4 };
        let mc = MonteCarlo::new(4000, 2).unwrap();
        let table = covariance_error_mc(&p, &ladder, &a, &b, reference, mc, None).unwrap();
        let pair = GaussianFunctional::new(&pair_functional(&a, &b)).unwrap();
        let ga = GaussianFunctional::new(&a.functional()).unwrap();
        let gb = GaussianFunctional::new(&b.functional()).unwrap();
        let cov_at = |level: Level| {
            covariance_from(&pair, &ga, &gb, |g| ModeStatistics::discrete(&p, level, &g.times, &g.modes())).unwrap()
        };
        let c_ref = cov_at(reference);
        for (row, level) in table.rows.iter().zip(&ladder.levels) {
            let exact = (c_ref - cov_at(*level)).abs();
            assert!((row.error - exact).abs() < 4.0 * row.stderr, "{} vs {exact} ± {}", row.error, row.stderr);
        }
    }
}
