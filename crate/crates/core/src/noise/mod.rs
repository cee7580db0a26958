//! Q-Wiener noise diagonal in the eigenbasis of `A`.
//!
//! `Q e_j = μ_j e_j`, so the increment of mode `j` over a step of length `k`
//! is `N(0, k μ_j)`. Increments are drawn from a counter-based stream keyed by
//! `(seed, path, step, mode)`: every entry is a pure function of its key, so
//! tables do not depend on thread scheduling, on the number of steps or on
//! how many modes are requested.

mod normal;

use std::sync::Arc;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{ensure, Result};

pub use normal::inverse_normal_cdf;

#[derive(Debug, Clone, PartialEq)]
pub enum Spectrum {
    /// `μ_j = q j^(-2s)`.
    PowerLaw { s: f64, q: f64 },
    /// `μ_1, μ_2, ...` listed; zero beyond the list.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    spectrum: Spectrum,
    n_modes: usize,
}

impl NoiseModel {
    pub fn power_law(s: f64, q: f64, n_modes: usize) -> Result<Self> {
        ensure!(s >= 0.0 && s.is_finite(), Validation, "noise exponent s must be >= 0, got {s}");
        ensure!(q > 0.0 && q.is_finite(), Validation, "noise scale q must be > 0, got {q}");
        ensure!(n_modes >= 1, Validation, "noise needs at least one mode");
        Ok(Self { spectrum: Spectrum::PowerLaw { s, q }, n_modes })
    }

    pub fn explicit(mu: Vec<f64>) -> Result<Self> {
        ensure!(!mu.is_empty(), Validation, "explicit noise spectrum is empty");
        if let Some((j, m)) = mu.iter().enumerate().find(|(_, m)| !(**m >= 0.0 && m.is_finite())) {
            return Err(crate::Error::Validation(format!(
                "noise eigenvalue mu_{} = {m} must be finite and >= 0",
                j + 1
            )));
        }
        let n_modes = mu.len();
        Ok(Self { spectrum: Spectrum::Explicit(mu), n_modes })
    }

    /// The noiseless model, `Q = 0`.
    pub fn zero(n_modes: usize) -> Self {
        Self { spectrum: Spectrum::Explicit(vec![0.0; n_modes.max(1)]), n_modes: n_modes.max(1) }
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    /// Number of modes the noise expansion is truncated to.
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn with_modes(mut self, n_modes: usize) -> Self {
        self.n_modes = n_modes.max(1);
        self
    }

    /// `μ_j` (1-based) of the untruncated spectrum.
    pub fn eigenvalue(&self, j: usize) -> f64 {
        match &self.spectrum {
            Spectrum::PowerLaw { s, q } => q * (j as f64).powf(-2.0 * s),
            Spectrum::Explicit(mu) => mu.get(j.wrapping_sub(1)).copied().unwrap_or(0.0),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.spectrum {
            Spectrum::PowerLaw { .. } => false,
            Spectrum::Explicit(mu) => mu.iter().all(|&m| m == 0.0),
        }
    }

    /// Largest `β ∈ (0, 1/ρ]` with `Σ_j λ_j^(β - 1/ρ) μ_j < ∞`.
    ///
    /// For a power law this is `min(1/ρ, 1/ρ + s - 1/2)`. An explicit list
    /// is read as samples of an infinite sequence: the tail decay exponent is
    /// fitted on the last half of the list. A list ending in zeros is treated
    /// as finite rank.
    pub fn admissible_beta(&self, rho: f64) -> Result<f64> {
        ensure!((1.0..2.0).contains(&rho), Domain, "rho must lie in [1,2), got {rho}");
        let cap = 1.0 / rho;
        let beta = match &self.spectrum {
            Spectrum::PowerLaw { s, .. } => cap.min(cap + s - 0.5),
            Spectrum::Explicit(mu) => match tail_decay_exponent(mu) {
                None => cap,
                Some(p) => cap.min(cap + 0.5 * (p - 1.0)),
            },
        };
        ensure!(
            beta > 0.0,
            Validation,
            "noise admissibility: beta <= 0 for this Q (sum of lambda_j^(beta - 1/rho) mu_j diverges for every beta > 0)"
        );
        Ok(beta)
    }
}

/// Exponent `p` of a fitted tail `μ_j ≈ C j^(-p)`; `None` for a finite-rank
/// spectrum.
fn tail_decay_exponent(mu: &[f64]) -> Option<f64> {
    if mu.last().is_some_and(|&m| m == 0.0) {
        return None;
    }
    let n = mu.len();
    if n < 4 {
        return None;
    }
    let pts: Vec<(f64, f64)> = (n / 2..n).map(|i| (((i + 1) as f64).ln(), mu[i].ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Some(-sxy / sxx)
}

/// Independent streams of one path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamTag {
    /// Wiener increments.
    Increments = 0,
    /// Auxiliary normals (exact-reference residuals).
    Auxiliary = 1,
}

/// Standard normals keyed by `(seed, path, tag, step, mode)`.
#[derive(Debug, Clone)]
pub struct NormalStream {
    rng: ChaCha8Rng,
}

impl NormalStream {
    pub fn new(seed: u64, path: u64, tag: StreamTag) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path.wrapping_mul(2).wrapping_add(tag as u64));
        Self { rng }
    }

    /// Normals for modes `0..out.len()` of row `step`.
    pub fn fill_row(&mut self, step: usize, out: &mut [f64]) {
        self.rng.set_word_pos((step as u128) << 40);
        for z in out.iter_mut() {
            *z = inverse_normal_cdf(uniform_open(self.rng.next_u64()));
        }
    }
}

/// Map 64 random bits to the open interval (0, 1).
fn uniform_open(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Wiener increments `ΔW_{m,j}` in eigencoordinates, rows by time step.
///
/// A table keeps the finest increments it was sampled with; coarsened tables
/// share them and always sum directly from the fine rows.
#[derive(Debug, Clone)]
pub struct IncrementTable {
    k_fine: f64,
    n_steps_fine: usize,
    modes: usize,
    seed: u64,
    path: u64,
    fine: Arc<[f64]>,
    factor: usize,
    data: Arc<[f64]>,
}

impl IncrementTable {
    /// Sample `n_steps × modes` increments of step `k` for trajectory `path`.
    pub fn sample(noise: &NoiseModel, k: f64, n_steps: usize, modes: usize, seed: u64, path: u64) -> Result<Self> {
        ensure!(k > 0.0 && k.is_finite(), Domain, "step size must be positive, got {k}");
        ensure!(n_steps >= 1 && modes >= 1, Domain, "increment table needs at least one step and one mode");
        let scale: Vec<f64> = (1..=modes).map(|j| (k * noise.eigenvalue(j)).sqrt()).collect();
        let mut data = vec![0.0; n_steps * modes];
        if scale.iter().any(|&s| s != 0.0) {
            let mut stream = NormalStream::new(seed, path, StreamTag::Increments);
            for (m, row) in data.chunks_exact_mut(modes).enumerate() {
                stream.fill_row(m, row);
                for (x, s) in row.iter_mut().zip(&scale) {
                    *x *= s;
                }
            }
        }
        let data: Arc<[f64]> = data.into();
        Ok(Self { k_fine: k, n_steps_fine: n_steps, modes, seed, path, fine: data.clone(), factor: 1, data })
    }

    /// Sum consecutive blocks of `factor` rows.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        ensure!(factor >= 1, Domain, "coarsening factor must be >= 1");
        ensure!(
            self.n_steps() % factor == 0,
            Domain,
            "coarsening factor {factor} does not divide {} steps",
            self.n_steps()
        );
        let total = self.factor * factor;
        if total == 1 {
            return Ok(self.clone());
        }
        let rows = self.n_steps_fine / total;
        let mut data = vec![0.0; rows * self.modes];
        for (m, out) in data.chunks_exact_mut(self.modes).enumerate() {
            for r in m * total..(m + 1) * total {
                let src = &self.fine[r * self.modes..(r + 1) * self.modes];
                for (o, x) in out.iter_mut().zip(src) {
                    *o += x;
                }
            }
        }
        Ok(Self { factor: total, data: data.into(), ..self.clone() })
    }

    pub fn k(&self) -> f64 {
        self.k_fine * self.factor as f64
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps_fine / self.factor
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> u64 {
        self.path
    }

    /// Increments of step `m` (over `[t_m, t_{m+1}]`).
    pub fn row(&self, m: usize) -> &[f64] {
        &self.data[m * self.modes..(m + 1) * self.modes]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}
