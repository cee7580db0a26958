//! Fixtures shared by the benchmarks.

use svie_core::experiments::{Level, Problem, SpaceKind};
use svie_core::scheme::{DriftSpec, SchemeConfig};
use svie_core::{IncrementTable, InitialData, KernelSpec, NoiseModel, Result};

/// Riesz kernel, `ρ = 1.5`, trace-class noise and `x0 = e_1` on `[0, 1]`.
pub fn problem(modes: usize, drift: DriftSpec) -> Problem {
    Problem {
        kernel: KernelSpec::riesz(1.5).expect("valid rho"),
        noise: NoiseModel::power_law(1.0, 1.0, modes).expect("valid noise"),
        drift,
        x0: InitialData::mode(1),
        t_end: 1.0,
    }
}

/// A scheme configuration together with the increments of path 0.
pub fn scheme(
    space: SpaceKind,
    resolution: usize,
    n_steps: usize,
    drift: DriftSpec,
) -> Result<(SchemeConfig, IncrementTable)> {
    let p = problem(resolution, drift);
    let config = p.config(space, Level { n_steps, resolution })?;
    let table = p.increments(n_steps, 1, 0)?;
    Ok((config, table))
}
