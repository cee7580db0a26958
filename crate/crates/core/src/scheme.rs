//! Fully discrete time steppers.
//!
//! Volterra (backward Euler + convolution quadrature):
//!
//! ```text
//! (I + kω_0 A_h) X_{n+1} = X_n - k Σ_{j=1}^n ω_{n+1-j} A_h X_j + k P_h F(X_n) + P_h ΔW_n
//! ```
//!
//! Parabolic (semi-implicit Euler-Maruyama):
//!
//! ```text
//! (I + k A_h) X_{n+1} = X_n + k P_h F(X_n) + P_h ΔW_n
//! ```
//!
//! The drift is explicit in both. A [`Simulator`] is built once per
//! configuration and shared read-only by any number of trajectories.

use crate::error::{ensure, Error, Result};
use crate::kernel::KernelSpec;
use crate::noise::{IncrementTable, NoiseModel};
use crate::operator::tridiag::TridiagLu;
use crate::operator::{
    validate_config, Discretization, FemOperator, Field, InitialData, Representation, SineTransform,
};
use crate::quadrature::{weights_closed_form, CQWeights};

/// Scalar nonlinearity `f` of the Nemytskii drift `F(u)(x) = f(u(x))`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum DriftSpec {
    #[default]
    Zero,
    /// `f(u) = c sin(u)`.
    ScaledSine { c: f64 },
    /// `f(u) = c tanh(a u)`.
    TanhSaturation { c: f64, a: f64 },
}

impl DriftSpec {
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::ScaledSine { c } => c * u.sin(),
            Self::TanhSaturation { c, a } => c * (a * u).tanh(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            Self::Zero => true,
            Self::ScaledSine { c } | Self::TanhSaturation { c, .. } => c == 0.0,
        }
    }

    /// `(‖f‖_∞, ‖f'‖_∞, ‖f''‖_∞)`.
    pub fn sup_norms(&self) -> (f64, f64, f64) {
        match *self {
            Self::Zero => (0.0, 0.0, 0.0),
            Self::ScaledSine { c } => (c.abs(), c.abs(), c.abs()),
            // max |tanh''| = 4/(3√3)
            Self::TanhSaturation { c, a } => (c.abs(), (c * a).abs(), (c * a * a).abs() * 4.0 / (3.0 * 3f64.sqrt())),
        }
    }
}

/// Uniform grid `t_n = n k`, `k = T/N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_end: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        ensure!(t_end > 0.0 && t_end.is_finite(), Validation, "final time must be positive, got {t_end}");
        ensure!(n_steps >= 1, Validation, "need at least one time step");
        Ok(Self { t_end, n_steps })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn k(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    pub fn node(&self, n: usize) -> f64 {
        if n == self.n_steps {
            self.t_end
        } else {
            n as f64 * self.k()
        }
    }

    /// Index of the node at `t`, if `t` is a node up to rounding.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let pos = t / self.k();
        let n = pos.round();
        ((pos - n).abs() <= 1e-9 * pos.abs().max(1.0) && n >= 0.0 && n <= self.n_steps as f64).then_some(n as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    VolterraCQ,
    ParabolicEuler,
}

impl SchemeKind {
    /// The stepper matching a kernel family.
    pub fn for_kernel(kernel: &KernelSpec) -> Self {
        if kernel.is_parabolic() {
            Self::ParabolicEuler
        } else {
            Self::VolterraCQ
        }
    }
}

/// Everything that defines one discrete problem.
#[derive(Debug, Clone)]
pub struct SchemeConfig {
    pub kernel: KernelSpec,
    pub discretization: Discretization,
    pub grid: TimeGrid,
    pub drift: DriftSpec,
    pub noise: NoiseModel,
    pub x0: InitialData,
    pub kind: SchemeKind,
}

impl SchemeConfig {
    pub fn new(
        kernel: KernelSpec,
        discretization: Discretization,
        grid: TimeGrid,
        drift: DriftSpec,
        noise: NoiseModel,
        x0: InitialData,
    ) -> Result<Self> {
        let config = Self { kind: SchemeKind::for_kernel(&kernel), kernel, discretization, grid, drift, noise, x0 };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            SchemeKind::ParabolicEuler => ensure!(
                self.kernel.is_parabolic(),
                Validation,
                "the parabolic Euler scheme needs the parabolic kernel, got {}",
                self.kernel
            ),
            SchemeKind::VolterraCQ => ensure!(
                !self.kernel.is_parabolic(),
                Validation,
                "the convolution-quadrature scheme needs a Riesz or tempered kernel"
            ),
        }
        validate_config(&self.kernel, 1, None)?;
        if !self.noise.is_zero() {
            self.noise.admissible_beta(self.kernel.rho())?;
        }
        ensure!(
            self.noise.n_modes() >= self.discretization.dim(),
            Validation,
            "noise is truncated to {} modes, below the {} degrees of freedom of the spatial discretization",
            self.noise.n_modes(),
            self.discretization.dim()
        );
        Ok(())
    }

    /// The same problem on another time grid.
    pub fn with_steps(&self, n_steps: usize) -> Result<Self> {
        Ok(Self { grid: TimeGrid::new(self.grid.t_end(), n_steps)?, ..self.clone() })
    }

    /// The same problem on another spatial discretization.
    pub fn with_discretization(&self, discretization: Discretization) -> Result<Self> {
        let config = Self { discretization, ..self.clone() };
        config.validate()?;
        Ok(config)
    }
}

/// Recorded states of one discrete trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub k: f64,
    pub n_steps: usize,
    pub seed: u64,
    pub path: u64,
    states: Vec<(usize, Field)>,
}

impl Trajectory {
    /// Recorded step indices, ascending.
    pub fn steps(&self) -> impl Iterator<Item = usize> + '_ {
        self.states.iter().map(|(n, _)| *n)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, n: usize) -> Result<&Field> {
        self.states.binary_search_by_key(&n, |(m, _)| *m).map(|i| &self.states[i].1).map_err(|_| Error::MissingNode(n))
    }

    pub fn final_state(&self) -> &Field {
        &self.states.last().expect("trajectory records the final step").1
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Field)> {
        self.states.iter().map(|(n, f)| (*n, f))
    }
}

#[derive(Debug, Clone)]
enum Space {
    Modal { eigenvalues: Vec<f64>, transform: Option<SineTransform> },
    Fem { op: Box<FemOperator>, lu: TridiagLu, loads: Vec<f64>, noise_modes: usize },
}

/// A configured stepper.
#[derive(Debug, Clone)]
pub struct Simulator {
    kind: SchemeKind,
    k: f64,
    n_steps: usize,
    weights: Option<CQWeights>,
    space: Space,
    drift: DriftSpec,
    x0: Vec<f64>,
}

impl Simulator {
    pub fn new(config: &SchemeConfig) -> Result<Self> {
        config.validate()?;
        let k = config.grid.k();
        let n_steps = config.grid.n_steps();
        let weights = match config.kind {
            SchemeKind::VolterraCQ => Some(weights_closed_form(&config.kernel, k, n_steps)?),
            SchemeKind::ParabolicEuler => None,
        };
        let omega0 = weights.as_ref().map_or(1.0, |w| w.get(0));
        let x0 = config.discretization.project_initial(&config.x0)?.into_values();
        let space = match &config.discretization {
            Discretization::Spectral(op) => Space::Modal {
                eigenvalues: op.eigenvalues().to_vec(),
                transform: (!config.drift.is_zero()).then(|| SineTransform::new(op.n_modes())),
            },
            Discretization::Fem(op) => {
                let system = op.mass().combine(1.0, op.stiffness(), k * omega0);
                let noise_modes = if config.noise.is_zero() { 0 } else { config.noise.n_modes() };
                Space::Fem {
                    lu: TridiagLu::new(&system)?,
                    loads: op.mode_loads(noise_modes),
                    noise_modes,
                    op: Box::new(op.clone()),
                }
            }
        };
        Ok(Self { kind: config.kind, k, n_steps, weights, space, drift: config.drift, x0 })
    }

    /// A diagonal problem with arbitrary eigenvalues (`λ = 0` allowed) and no
    /// drift.
    pub fn modal(kernel: &KernelSpec, grid: TimeGrid, eigenvalues: Vec<f64>, x0: Vec<f64>) -> Result<Self> {
        ensure!(
            eigenvalues.len() == x0.len(),
            Shape,
            "{} eigenvalues but {} initial values",
            eigenvalues.len(),
            x0.len()
        );
        ensure!(eigenvalues.iter().all(|&l| l >= 0.0), Domain, "eigenvalues must be >= 0");
        let kind = SchemeKind::for_kernel(kernel);
        let weights = match kind {
            SchemeKind::VolterraCQ => Some(weights_closed_form(kernel, grid.k(), grid.n_steps())?),
            SchemeKind::ParabolicEuler => None,
        };
        Ok(Self {
            kind,
            k: grid.k(),
            n_steps: grid.n_steps(),
            weights,
            space: Space::Modal { eigenvalues, transform: None },
            drift: DriftSpec::Zero,
            x0,
        })
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn representation(&self) -> Representation {
        match self.space {
            Space::Modal { .. } => Representation::SpectralCoeffs,
            Space::Fem { .. } => Representation::NodalValues,
        }
    }

    /// `X_0 = P_h x0`.
    pub fn initial_state(&self) -> &[f64] {
        &self.x0
    }

    /// Increment columns a table must provide.
    pub fn noise_columns(&self) -> usize {
        match &self.space {
            Space::Modal { eigenvalues, .. } => eigenvalues.len(),
            Space::Fem { noise_modes, .. } => *noise_modes,
        }
    }

    fn field(&self, values: Vec<f64>) -> Field {
        match self.space {
            Space::Modal { .. } => Field::spectral(values),
            Space::Fem { .. } => Field::nodal(values),
        }
    }

    fn drift_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.space {
            Space::Modal { transform: Some(tr), .. } => nemytskii_spectral(&self.drift, tr, x, out),
            Space::Modal { transform: None, .. } => out.iter_mut().for_each(|o| *o = 0.0),
            Space::Fem { op, .. } => {
                let f: Vec<f64> = x.iter().map(|&u| self.drift.eval(u)).collect();
                op.mass().matvec_into(&f, out);
            }
        }
    }

    /// One step given the memory term `mem = Σ_{j=1}^n ω_{n+1-j} X_j`.
    fn advance(&self, x: &[f64], mem: Option<&[f64]>, dw: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        let k = self.k;
        let omega0 = self.weights.as_ref().map_or(1.0, |w| w.get(0));
        let with_drift = !self.drift.is_zero();
        if with_drift {
            self.drift_into(x, scratch);
        }
        match &self.space {
            Space::Modal { eigenvalues, .. } => {
                for i in 0..x.len() {
                    let lambda = eigenvalues[i];
                    let mut rhs = x[i] + dw[i];
                    if let Some(mem) = mem {
                        rhs -= k * lambda * mem[i];
                    }
                    if with_drift {
                        rhs += k * scratch[i];
                    }
                    out[i] = rhs / (1.0 + k * omega0 * lambda);
                }
            }
            Space::Fem { op, lu, loads, noise_modes } => {
                op.mass().matvec_into(x, out);
                if with_drift {
                    out.iter_mut().zip(scratch.iter()).for_each(|(o, f)| *o += k * f);
                }
                if let Some(mem) = mem {
                    op.stiffness().matvec_into(mem, scratch);
                    out.iter_mut().zip(scratch.iter()).for_each(|(o, s)| *o -= k * s);
                }
                let m = *noise_modes;
                if m > 0 {
                    for (o, row) in out.iter_mut().zip(loads.chunks_exact(m)) {
                        *o += row.iter().zip(&dw[..m]).map(|(l, w)| l * w).sum::<f64>();
                    }
                }
                lu.solve_in_place(out);
            }
        }
    }

    /// One Volterra step from a complete history `X_0..=X_n`, recomputing
    /// the memory sum from scratch.
    pub fn step_volterra(&self, history: &[Vec<f64>], dw: &[f64]) -> Result<Vec<f64>> {
        let w = self.weights.as_ref().ok_or_else(|| Error::Domain("step_volterra on a parabolic stepper".into()))?;
        ensure!(!history.is_empty(), Length, "history must contain X_0");
        let n = history.len() - 1;
        ensure!(n < self.n_steps, Length, "step {n} beyond the grid of {} steps", self.n_steps);
        let dim = self.dim();
        let mut mem = vec![0.0; dim];
        for (j, xj) in history.iter().enumerate().skip(1) {
            let wj = w.get(n + 1 - j);
            mem.iter_mut().zip(xj).for_each(|(m, x)| *m += wj * x);
        }
        let mut out = vec![0.0; dim];
        let mut scratch = vec![0.0; dim];
        self.advance(&history[n], Some(&mem), dw, &mut scratch, &mut out);
        Ok(out)
    }

    /// One semi-implicit Euler-Maruyama step.
    pub fn step_parabolic(&self, x: &[f64], dw: &[f64]) -> Result<Vec<f64>> {
        ensure!(self.kind == SchemeKind::ParabolicEuler, Domain, "step_parabolic on a Volterra stepper");
        let mut out = vec![0.0; self.dim()];
        let mut scratch = vec![0.0; self.dim()];
        self.advance(x, None, dw, &mut scratch, &mut out);
        Ok(out)
    }

    /// Run the scheme over all steps, recording the requested steps together
    /// with 0 and N.
    pub fn simulate(&self, increments: &IncrementTable, record: &[usize]) -> Result<Trajectory> {
        let n_steps = self.n_steps;
        let dim = self.dim();
        ensure!(
            increments.n_steps() == n_steps,
            Shape,
            "increment table has {} steps, scheme has {n_steps}",
            increments.n_steps()
        );
        ensure!(
            increments.modes() >= self.noise_columns(),
            Shape,
            "increment table has {} modes, scheme needs {}",
            increments.modes(),
            self.noise_columns()
        );
        ensure!(
            (increments.k() - self.k).abs() <= 1e-12 * self.k,
            Shape,
            "increment step {} differs from scheme step {}",
            increments.k(),
            self.k
        );
        let mut wanted: Vec<usize> = record.iter().copied().filter(|&n| n <= n_steps).collect();
        wanted.extend([0, n_steps]);
        wanted.sort_unstable();
        wanted.dedup();

        let mut states = Vec::with_capacity(wanted.len());
        let mut next_record = wanted.iter().peekable();
        let mut x = self.x0.clone();
        if next_record.next_if_eq(&&0).is_some() {
            states.push((0, self.field(x.clone())));
        }
        let volterra = self.weights.as_ref();
        let mut history: Vec<f64> = Vec::with_capacity(if volterra.is_some() { n_steps * dim } else { 0 });
        let mut mem = vec![0.0; dim];
        let mut scratch = vec![0.0; dim];
        let mut out = vec![0.0; dim];
        for n in 0..n_steps {
            let mem_ref = match volterra {
                Some(w) => {
                    mem.iter_mut().for_each(|m| *m = 0.0);
                    // rows of `history` are X_1..X_n
                    let ws = w.as_slice();
                    for (j, row) in history.chunks_exact(dim).enumerate() {
                        let wj = ws[n - j];
                        mem.iter_mut().zip(row).for_each(|(m, x)| *m += wj * x);
                    }
                    Some(mem.as_slice())
                }
                None => None,
            };
            self.advance(&x, mem_ref, increments.row(n), &mut scratch, &mut out);
            std::mem::swap(&mut x, &mut out);
            if volterra.is_some() {
                history.extend_from_slice(&x);
            }
            if next_record.next_if_eq(&&(n + 1)).is_some() {
                states.push((n + 1, self.field(x.clone())));
            }
        }
        Ok(Trajectory { k: self.k, n_steps, seed: increments.seed(), path: increments.path(), states })
    }
}

/// Run one trajectory of `config` driven by `increments`.
pub fn simulate_path(config: &SchemeConfig, increments: &IncrementTable, record: &[usize]) -> Result<Trajectory> {
    Simulator::new(config)?.simulate(increments, record)
}

fn nemytskii_spectral(drift: &DriftSpec, transform: &SineTransform, coeffs: &[f64], out: &mut [f64]) {
    let mut grid = vec![0.0; transform.n_points()];
    transform.to_grid(coeffs, &mut grid);
    grid.iter_mut().for_each(|g| *g = drift.eval(*g));
    transform.from_grid(&grid, out);
}

/// `F(u)` for a field: spectral fields go through `2n + 1` grid values and
/// back, nodal fields are evaluated pointwise.
pub fn apply_nemytskii(drift: &DriftSpec, field: &Field) -> Field {
    match field.representation() {
        Representation::NodalValues => Field::nodal(field.values().iter().map(|&u| drift.eval(u)).collect()),
        Representation::SpectralCoeffs => {
            let mut out = vec![0.0; field.len()];
            if !drift.is_zero() && !field.is_empty() {
                nemytskii_spectral(drift, &SineTransform::new(field.len()), field.values(), &mut out);
            }
            Field::spectral(out)
        }
    }
}
