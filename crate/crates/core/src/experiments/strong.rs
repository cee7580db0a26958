//! Strong errors `(E‖X_T - X_N^{h,k}‖²)^(1/2)` on refinement ladders.
//!
//! Three references are available. For `F = 0` with spectral levels the
//! error is computed in closed form mode by mode. Monte Carlo runs either
//! couple each level with an exact linear sample or, in the semilinear
//! case, with the finest level of a reference ladder driven by the same
//! increments.

use rayon::prelude::*;

use crate::error::{ensure, Error, Result};
use crate::integrate::gauss8;
use crate::noise::{NormalStream, StreamTag};
use crate::operator::{dirichlet_eigenvalue, Discretization};
use crate::reference::{exact_strong_error_linear, ReferenceModes, Resolvent};
use crate::scheme::Simulator;

use super::{
    per_path, squared_distance, Axis, Estimate, Ladder, Level, MonteCarlo, Problem, RateRow, RateTable, RateWindow,
    SpaceKind,
};

/// Reference modes used when the caller has no preference: the level's own
/// modes on temporal ladders (pure time error), and at least 256 modes plus
/// the analytic tail on spatial ladders.
pub fn default_reference(ladder: &Ladder) -> ReferenceModes {
    match ladder.axis {
        Axis::Time => ReferenceModes { modes: ladder.finest().resolution, analytic_tail: false },
        Axis::Space => ReferenceModes { modes: (2 * ladder.finest().resolution).max(256), analytic_tail: true },
    }
}

fn row(problem: &Problem, ladder: &Ladder, i: usize, level: Level, error: f64, stderr: f64) -> Result<RateRow> {
    let disc = ladder.space.discretization(level.resolution)?;
    Ok(RateRow { level: i, h: disc.h(), k: problem.t_end / level.n_steps as f64, error, stderr })
}

/// Closed-form strong errors of the spectral scheme for `F = 0`.
pub fn strong_rate_exact(
    problem: &Problem,
    ladder: &Ladder,
    reference: ReferenceModes,
    window: Option<RateWindow>,
) -> Result<RateTable> {
    ensure!(
        ladder.space == SpaceKind::Spectral,
        Validation,
        "closed-form strong errors need the spectral discretization"
    );
    let linear = problem.linear()?;
    let rows = ladder
        .levels
        .par_iter()
        .enumerate()
        .map(|(i, &level)| {
            let e = exact_strong_error_linear(&linear, level.n_steps, level.resolution, reference)?;
            row(problem, ladder, i, level, e, 0.0)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateTable::new(ladder.axis, rows, window))
}

/// What each Monte Carlo level is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McReference {
    /// Exact linear solution in its first `modes` modes, sampled jointly
    /// with the Wiener increments of a grid with `n_steps` steps.
    ExactLinear { modes: usize, n_steps: usize },
    /// The scheme itself on a finer level, driven by the same increments.
    FinestLevel(Level),
}

/// Per-mode, per-interval coupling data for an exact linear sample:
/// `X_T = s(T) x0 + Σ_m (a_m ΔW_m + √r_m ξ_m)`, with `a_m` the mean of
/// `s(T - ·)` over the interval and `r_m` the conditional variance.
#[derive(Debug, Clone)]
pub struct ExactCoupling {
    n_steps: usize,
    modes: usize,
    deterministic: Vec<f64>,
    slope: Vec<f64>,
    residual_sd: Vec<f64>,
}

impl ExactCoupling {
    pub fn new(problem: &Problem, modes: usize, n_steps: usize) -> Result<Self> {
        let linear = problem.linear()?;
        ensure!(modes >= 1 && n_steps >= 1, Domain, "exact coupling needs at least one mode and one step");
        let t_end = problem.t_end;
        let k = t_end / n_steps as f64;
        let rule = gauss8();
        let per_mode = (1..=modes)
            .into_par_iter()
            .map(|j| {
                let s = Resolvent::new(&linear.kernel, dirichlet_eigenvalue(j), t_end)?;
                let mu = linear.noise.eigenvalue(j);
                let mut slope = Vec::with_capacity(n_steps);
                let mut sd = Vec::with_capacity(n_steps);
                for m in 0..n_steps {
                    let (lo, hi) = (m as f64 * k, (m + 1) as f64 * k);
                    let (mut int1, mut int2) = (0.0, 0.0);
                    for (x, w) in rule.mapped(lo, hi) {
                        let v = s.eval(t_end - x)?;
                        int1 += w * v;
                        int2 += w * v * v;
                    }
                    let a = int1 / k;
                    slope.push(a);
                    sd.push((mu * (int2 - k * a * a)).max(0.0).sqrt());
                }
                Ok((s.eval(t_end)? * linear.x0.coefficient(j), slope, sd))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut deterministic = Vec::with_capacity(modes);
        let mut slope = Vec::with_capacity(modes * n_steps);
        let mut residual_sd = Vec::with_capacity(modes * n_steps);
        for (d, a, r) in per_mode {
            deterministic.push(d);
            slope.extend(a);
            residual_sd.extend(r);
        }
        Ok(Self { n_steps, modes, deterministic, slope, residual_sd })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Exact `X_T` in the first `modes` modes for the path that produced
    /// `increments` (which must be the fine table of that path).
    pub fn sample(&self, increments: &crate::noise::IncrementTable) -> Result<Vec<f64>> {
        ensure!(
            increments.n_steps() == self.n_steps && increments.modes() >= self.modes,
            Shape,
            "exact coupling needs a table with {} steps and at least {} modes",
            self.n_steps,
            self.modes
        );
        let mut x = self.deterministic.clone();
        let mut xi = vec![0.0; self.modes];
        let mut aux = NormalStream::new(increments.seed(), increments.path(), StreamTag::Auxiliary);
        for m in 0..self.n_steps {
            aux.fill_row(m, &mut xi);
            let dw = increments.row(m);
            for j in 0..self.modes {
                let idx = j * self.n_steps + m;
                x[j] += self.slope[idx] * dw[j] + self.residual_sd[idx] * xi[j];
            }
        }
        Ok(x)
    }
}

/// `‖u_h - v‖²` for a discrete state against a modal vector `v`.
pub fn squared_distance_to_modes(disc: &Discretization, state: &[f64], modes: &[f64]) -> Result<f64> {
    match disc {
        Discretization::Spectral(_) => {
            squared_distance(disc, state, &Discretization::spectral(modes.len().max(1))?, modes)
        }
        Discretization::Fem(op) => {
            let m = modes.len();
            let loads = op.mode_loads(m);
            let norm_sq = op.mass_norm(state).powi(2);
            let cross: f64 = (0..m)
                .map(|j| modes[j] * state.iter().enumerate().map(|(i, u)| u * loads[i * m + j]).sum::<f64>())
                .sum();
            let v_sq: f64 = modes.iter().map(|v| v * v).sum();
            Ok((norm_sq - 2.0 * cross + v_sq).max(0.0))
        }
    }
}

pub(super) struct LevelRunner {
    pub level: Level,
    pub disc: Discretization,
    pub sim: Simulator,
    pub factor: usize,
}

pub(super) fn level_runners(problem: &Problem, ladder: &Ladder, fine_steps: usize) -> Result<Vec<LevelRunner>> {
    ladder
        .levels
        .iter()
        .map(|&level| {
            ensure!(
                fine_steps % level.n_steps == 0,
                Validation,
                "reference grid of {fine_steps} steps is not a refinement of {} steps",
                level.n_steps
            );
            let config = problem.config(ladder.space, level)?;
            Ok(LevelRunner {
                level,
                disc: config.discretization.clone(),
                sim: Simulator::new(&config)?,
                factor: fine_steps / level.n_steps,
            })
        })
        .collect()
}

/// Check that a finest-level reference is a strict refinement of every
/// measured level.
pub(super) fn check_reference_level(ladder: &Ladder, reference: Level) -> Result<()> {
    for l in &ladder.levels {
        ensure!(
            reference.n_steps % l.n_steps == 0 && reference.resolution >= l.resolution,
            Validation,
            "reference level {reference:?} does not refine level {l:?}"
        );
        if ladder.space == SpaceKind::Fem {
            ensure!(
                reference.resolution % l.resolution == 0,
                Validation,
                "reference mesh of {} cells is not nested with {} cells",
                reference.resolution,
                l.resolution
            );
        }
    }
    ensure!(
        !ladder.levels.contains(&reference),
        Validation,
        "the reference level must be finer than every measured level"
    );
    Ok(())
}

/// Monte Carlo strong errors with common random numbers.
pub fn strong_error_mc(
    problem: &Problem,
    ladder: &Ladder,
    reference: McReference,
    mc: MonteCarlo,
    window: Option<RateWindow>,
) -> Result<RateTable> {
    let fine_steps = match reference {
        McReference::ExactLinear { n_steps, .. } => n_steps,
        McReference::FinestLevel(level) => {
            check_reference_level(ladder, level)?;
            level.n_steps
        }
    };
    let runners = level_runners(problem, ladder, fine_steps)?;
    let width = runners.len();
    let columns = match reference {
        McReference::ExactLinear { modes, n_steps } => {
            ensure!(
                problem.noise_columns() >= modes,
                Validation,
                "the exact reference uses {modes} modes but the noise is truncated to {}",
                problem.noise_columns()
            );
            let coupling = ExactCoupling::new(problem, modes, n_steps)?;
            per_path(mc.n_paths, width, |path| {
                let table = problem.increments(fine_steps, mc.seed, path)?;
                let exact = coupling.sample(&table)?;
                runners
                    .iter()
                    .map(|r| {
                        let traj = r.sim.simulate(&table.coarsen(r.factor)?, &[])?;
                        squared_distance_to_modes(&r.disc, traj.final_state().values(), &exact)
                    })
                    .collect()
            })?
        }
        McReference::FinestLevel(level) => {
            let config = problem.config(ladder.space, level)?;
            let ref_sim = Simulator::new(&config)?;
            let ref_disc = config.discretization;
            per_path(mc.n_paths, width, |path| {
                let table = problem.increments(fine_steps, mc.seed, path)?;
                let reference = ref_sim.simulate(&table, &[])?;
                let x_ref = reference.final_state().values();
                runners
                    .iter()
                    .map(|r| {
                        let traj = r.sim.simulate(&table.coarsen(r.factor)?, &[])?;
                        squared_distance(&ref_disc, x_ref, &r.disc, traj.final_state().values())
                    })
                    .collect()
            })?
        }
    };
    let rows = runners
        .iter()
        .zip(&columns)
        .enumerate()
        .map(|(i, (r, samples))| {
            let est = Estimate::from_samples(samples);
            let error = est.mean.max(0.0).sqrt();
            let stderr = if error > 0.0 { est.stderr / (2.0 * error) } else { 0.0 };
            row(problem, ladder, i, r.level, error, stderr)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateTable::new(ladder.axis, rows, window))
}

/// Whether errors decrease along the ladder up to `sigmas` combined
/// standard errors between neighbours.
pub fn is_monotone_within(rows: &[RateRow], sigmas: f64) -> bool {
    rows.windows(2).all(|w| w[1].error <= w[0].error + sigmas * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt())
}

/// Error for ladders that the closed form cannot handle.
pub fn require_linear_spectral(problem: &Problem, ladder: &Ladder) -> Result<()> {
    if !problem.is_linear() || ladder.space != SpaceKind::Spectral {
        return Err(Error::Validation("closed-form references need F = 0 and the spectral discretization".into()));
    }
    Ok(())
}
