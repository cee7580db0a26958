//! Convergence experiments: refinement ladders, strong and weak error
//! estimation, covariance checks and pathwise Hölder regularity.

pub mod covariance;
pub mod functional;
pub mod holder;
pub mod rate;
pub mod strong;
pub mod weak;

use rayon::prelude::*;

use crate::error::{ensure, Error, Result};
use crate::kernel::KernelSpec;
use crate::noise::{IncrementTable, NoiseModel};
use crate::operator::{Discretization, InitialData};
use crate::reference::LinearProblem;
use crate::scheme::{DriftSpec, SchemeConfig, TimeGrid};
use crate::special::CompensatedSum;

pub use rate::{Axis, Fit, RateRow, RateTable, RateWindow, Verdict};

/// Spatial discretization family of a ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    Spectral,
    Fem,
}

impl SpaceKind {
    /// `resolution` is the number of modes or of cells.
    pub fn discretization(&self, resolution: usize) -> Result<Discretization> {
        match self {
            Self::Spectral => Discretization::spectral(resolution),
            Self::Fem => Discretization::fem(resolution),
        }
    }
}

/// One rung of a ladder: number of time steps and spatial resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Level {
    pub n_steps: usize,
    pub resolution: usize,
}

/// A refinement ladder along one axis, coarsest first.
#[derive(Debug, Clone, PartialEq)]
pub struct Ladder {
    pub axis: Axis,
    pub space: SpaceKind,
    pub levels: Vec<Level>,
}

impl Ladder {
    pub fn temporal(space: SpaceKind, resolution: usize, steps: &[usize]) -> Result<Self> {
        check_refining(steps, "time steps")?;
        Ok(Self { axis: Axis::Time, space, levels: steps.iter().map(|&n| Level { n_steps: n, resolution }).collect() })
    }

    pub fn spatial(space: SpaceKind, n_steps: usize, resolutions: &[usize]) -> Result<Self> {
        ensure!(n_steps >= 1, Validation, "a spatial ladder needs at least one time step");
        check_refining(resolutions, "spatial resolutions")?;
        Ok(Self {
            axis: Axis::Space,
            space,
            levels: resolutions.iter().map(|&r| Level { n_steps, resolution: r }).collect(),
        })
    }

    /// `count` levels `coarsest · 2^i`.
    pub fn dyadic(axis: Axis, space: SpaceKind, fixed: usize, coarsest: usize, count: usize) -> Result<Self> {
        let values: Vec<usize> = (0..count).map(|i| coarsest << i).collect();
        match axis {
            Axis::Time => Self::temporal(space, fixed, &values),
            Axis::Space => Self::spatial(space, fixed, &values),
        }
    }

    pub fn finest(&self) -> Level {
        *self.levels.last().expect("ladders are never empty")
    }
}

fn check_refining(values: &[usize], what: &str) -> Result<()> {
    ensure!(values.len() >= 3, Validation, "a ladder needs at least 3 levels of {what}, got {}", values.len());
    ensure!(values[0] >= 1, Validation, "{what} must be positive");
    for w in values.windows(2) {
        ensure!(
            w[1] > w[0] && w[1] % w[0] == 0,
            Validation,
            "{what} must increase with each level dividing the next, got {} then {}",
            w[0],
            w[1]
        );
    }
    Ok(())
}

/// A problem independent of its discretization.
#[derive(Debug, Clone)]
pub struct Problem {
    pub kernel: KernelSpec,
    pub noise: NoiseModel,
    pub drift: DriftSpec,
    pub x0: InitialData,
    pub t_end: f64,
}

impl Problem {
    pub fn config(&self, space: SpaceKind, level: Level) -> Result<SchemeConfig> {
        SchemeConfig::new(
            self.kernel,
            space.discretization(level.resolution)?,
            TimeGrid::new(self.t_end, level.n_steps)?,
            self.drift,
            self.noise.clone(),
            self.x0.clone(),
        )
    }

    pub fn is_linear(&self) -> bool {
        self.drift.is_zero()
    }

    /// The problem without its drift, for the closed-form references.
    pub fn linear(&self) -> Result<LinearProblem> {
        ensure!(self.is_linear(), Validation, "closed-form references need F = 0, the drift is {:?}", self.drift);
        Ok(LinearProblem { kernel: self.kernel, noise: self.noise.clone(), x0: self.x0.clone(), t_end: self.t_end })
    }

    /// `γ = 0.9 β` with `β` the admissible noise regularity.
    pub fn gamma(&self) -> Result<f64> {
        Ok(0.9 * self.noise.admissible_beta(self.kernel.rho())?)
    }

    /// Number of increment columns needed by any discretization of this
    /// problem.
    pub fn noise_columns(&self) -> usize {
        self.noise.n_modes().max(1)
    }

    /// Fine increment table for one path.
    pub fn increments(&self, n_steps: usize, seed: u64, path: u64) -> Result<IncrementTable> {
        IncrementTable::sample(&self.noise, self.t_end / n_steps as f64, n_steps, self.noise_columns(), seed, path)
    }
}

/// Monte Carlo settings shared by the estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarlo {
    pub n_paths: usize,
    pub seed: u64,
}

impl MonteCarlo {
    pub fn new(n_paths: usize, seed: u64) -> Result<Self> {
        ensure!(n_paths >= 2, Validation, "Monte Carlo needs at least 2 paths, got {n_paths}");
        Ok(Self { n_paths, seed })
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().copied().collect::<CompensatedSum>().value() / n;
        let ss = samples.iter().map(|x| (x - mean).powi(2)).collect::<CompensatedSum>().value();
        let var = if samples.len() > 1 { ss / (n - 1.0) } else { 0.0 };
        Self { mean, stderr: (var / n).sqrt() }
    }
}

/// Run `f` for paths `0..n` in parallel and collect in path order, so
/// results do not depend on the thread count. Returns one column per
/// output component.
pub(crate) fn per_path<F>(n_paths: usize, width: usize, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(u64) -> Result<Vec<f64>> + Sync,
{
    let rows: Vec<Vec<f64>> = (0..n_paths as u64).into_par_iter().map(&f).collect::<Result<_>>()?;
    let mut columns = vec![Vec::with_capacity(n_paths); width];
    for row in rows {
        ensure!(row.len() == width, Shape, "path produced {} values, expected {width}", row.len());
        for (c, v) in columns.iter_mut().zip(row) {
            c.push(v);
        }
    }
    Ok(columns)
}

/// `‖a - b‖²_{L²}` for states on two discretizations of the same kind.
/// Nested FEM meshes are compared on the finer one.
pub fn squared_distance(da: &Discretization, a: &[f64], db: &Discretization, b: &[f64]) -> Result<f64> {
    match (da, db) {
        (Discretization::Spectral(_), Discretization::Spectral(_)) => {
            let n = a.len().max(b.len());
            Ok((0..n)
                .map(|i| {
                    let d = a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0);
                    d * d
                })
                .sum())
        }
        (Discretization::Fem(oa), Discretization::Fem(ob)) => {
            let (fine, fine_vals, coarse, coarse_vals) =
                if oa.n_cells() >= ob.n_cells() { (oa, a, ob, b) } else { (ob, b, oa, a) };
            ensure!(
                fine.n_cells() % coarse.n_cells() == 0,
                Shape,
                "meshes with {} and {} cells are not nested",
                fine.n_cells(),
                coarse.n_cells()
            );
            let diff: Vec<f64> =
                fine.nodes().iter().zip(fine_vals).map(|(&x, &u)| u - coarse.evaluate(coarse_vals, x)).collect();
            Ok(fine.mass_norm(&diff).powi(2))
        }
        _ => Err(Error::Shape("cannot compare spectral and nodal states directly".into())),
    }
}
