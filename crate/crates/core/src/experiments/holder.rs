//! Empirical Hölder exponent of `t ↦ X_t` in `L^p(Ω; H)` from the
//! increments `E‖X_{t+δ} - X_t‖^p` over dyadic lags `δ`.

use crate::error::{ensure, Result};
use crate::operator::{Discretization, Field};
use crate::scheme::Simulator;

use super::rate::{least_squares, Fit};
use super::{per_path, Estimate, Level, MonteCarlo, Problem, SpaceKind};

#[derive(Debug, Clone, PartialEq)]
pub struct HolderRow {
    pub lag: f64,
    pub moment: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderEstimate {
    pub p: f64,
    pub exponent: f64,
    pub fit: Fit,
    pub rows: Vec<HolderRow>,
}

/// Dyadic lags `1, 2, 4, ...` in steps, up to a quarter of the grid.
pub fn dyadic_lags(n_steps: usize) -> Vec<usize> {
    std::iter::successors(Some(1usize), |l| Some(2 * l)).take_while(|&l| 4 * l <= n_steps).collect()
}

/// `mean_n ‖X_{n+l} - X_n‖^p` for each lag `l` along one recorded path.
pub fn path_increment_moments<D>(states: &[Vec<f64>], lags: &[usize], p: f64, dist: D) -> Vec<f64>
where
    D: Fn(&[f64], &[f64]) -> f64,
{
    lags.iter()
        .map(|&l| {
            let count = states.len() - l;
            (0..count).map(|n| dist(&states[n + l], &states[n]).powf(p)).sum::<f64>() / count as f64
        })
        .collect()
}

/// Regress `log moment` against `log δ`; the exponent is `slope / p`.
pub fn fit_exponent(rows: Vec<HolderRow>, p: f64) -> Result<HolderEstimate> {
    ensure!(rows.len() >= 3, Degenerate, "a Hölder fit needs at least 3 lags, got {}", rows.len());
    if let Some(r) = rows.iter().find(|r| !(r.moment > 0.0)) {
        return Err(crate::Error::Degenerate(format!(
            "increment moment {} at lag {} is below the noise floor",
            r.moment, r.lag
        )));
    }
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.lag.ln(), r.moment.ln())).collect();
    let fit = least_squares(&points)?;
    Ok(HolderEstimate { p, exponent: fit.slope / p, fit, rows })
}

/// Simulate `mc.n_paths` paths on `level` and estimate the exponent.
pub fn holder_estimate(
    problem: &Problem,
    space: SpaceKind,
    level: Level,
    p: f64,
    mc: MonteCarlo,
) -> Result<HolderEstimate> {
    ensure!(p >= 1.0 && p.is_finite(), Validation, "moment order p must be >= 1, got {p}");
    let config = problem.config(space, level)?;
    let sim = Simulator::new(&config)?;
    let disc = config.discretization.clone();
    let n = level.n_steps;
    let lags = dyadic_lags(n);
    ensure!(lags.len() >= 3, Validation, "{n} steps give only {} dyadic lags, need 3", lags.len());
    let all: Vec<usize> = (0..=n).collect();
    let dist = |a: &[f64], b: &[f64]| -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let field = match disc {
            Discretization::Spectral(_) => Field::spectral(d),
            Discretization::Fem(_) => Field::nodal(d),
        };
        disc.l2_norm(&field)
    };
    let columns = per_path(mc.n_paths, lags.len(), |path| {
        let table = problem.increments(n, mc.seed, path)?;
        let traj = sim.simulate(&table, &all)?;
        let states: Vec<Vec<f64>> = traj.iter().map(|(_, f)| f.values().to_vec()).collect();
        Ok(path_increment_moments(&states, &lags, p, dist))
    })?;
    let k = problem.t_end / n as f64;
    let rows = lags
        .iter()
        .zip(&columns)
        .map(|(&l, samples)| {
            let est = Estimate::from_samples(samples);
            HolderRow { lag: l as f64 * k, moment: est.mean, stderr: est.stderr }
        })
        .collect();
    fit_exponent(rows, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelSpec;
    use crate::noise::{IncrementTable, NoiseModel};
    use crate::operator::InitialData;
    use crate::scheme::{DriftSpec, TimeGrid};

    fn euclid(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }

    #[test]
    fn random_walk_has_brownian_scaling() {
        let kernel = KernelSpec::riesz(1.5).unwrap();
        let n = 1024;
        let sim = Simulator::modal(&kernel, TimeGrid::new(1.0, n).unwrap(), vec![0.0], vec![0.0]).unwrap();
        let lags = dyadic_lags(n);
        let all: Vec<usize> = (0..=n).collect();
        let noise = NoiseModel::explicit(vec![1.0]).unwrap();
        let mut sums = vec![0.0; lags.len()];
        let paths = 200;
        for path in 0..paths {
            let table = IncrementTable::sample(&noise, 1.0 / n as f64, n, 1, 4, path).unwrap();
            let traj = sim.simulate(&table, &all).unwrap();
            let states: Vec<Vec<f64>> = traj.iter().map(|(_, f)| f.values().to_vec()).collect();
            for (s, m) in sums.iter_mut().zip(path_increment_moments(&states, &lags, 2.0, euclid)) {
                *s += m / paths as f64;
            }
        }
        let rows = lags
            .iter()
            .zip(&sums)
            .map(|(&l, &m)| HolderRow { lag: l as f64 / n as f64, moment: m, stderr: 0.0 })
            .collect();
        let est = fit_exponent(rows, 2.0).unwrap();
        assert!((est.exponent - 0.5).abs() < 0.03, "{}", est.exponent);
    }

    #[test]
    fn smooth_deterministic_path_is_lipschitz() {
        let p = Problem {
            kernel: KernelSpec::riesz(1.5).unwrap(),
            noise: NoiseModel::zero(4),
            drift: DriftSpec::Zero,
            x0: InitialData::mode(1),
            t_end: 1.0,
        };
        let est = holder_estimate(
            &p,
            SpaceKind::Spectral,
            Level { n_steps: 256, resolution: 4 },
            2.0,
            MonteCarlo::new(2, 0).unwrap(),
        )
        .unwrap();
        assert!(est.exponent >= 0.95, "{}", est.exponent);
    }

    #[test]
    fn trace_class_volterra_exponent() {
        let p = Problem {
            kernel: KernelSpec::riesz(1.5).unwrap(),
            noise: NoiseModel::power_law(1.0, 1.0, 64).unwrap(),
            drift: DriftSpec::Zero,
            x0: InitialData::zero(),
            t_end: 1.0,
        };
        let est = holder_estimate(
            &p,
            SpaceKind::Spectral,
            Level { n_steps: 256, resolution: 64 },
            2.0,
            MonteCarlo::new(100, 1).unwrap(),
        )
        .unwrap();
        // ρβ/2 = 1/2 with β = 2/3
        assert!((est.exponent - 0.5).abs() <= 0.2, "{}", est.exponent);
    }

    #[test]
    fn lags_and_degenerate_moments() {
        assert_eq!(dyadic_lags(16), vec![1, 2, 4]);
        let rows = vec![
            HolderRow { lag: 0.1, moment: 0.0, stderr: 0.0 },
            HolderRow { lag: 0.2, moment: 1.0, stderr: 0.0 },
            HolderRow { lag: 0.4, moment: 2.0, stderr: 0.0 },
        ];
        assert!(fit_exponent(rows, 2.0).is_err());
    }
}
