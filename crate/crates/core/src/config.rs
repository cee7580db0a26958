//! Sectioned experiment configuration.
//!
//! A configuration is a TOML document with the sections `[kernel]`,
//! `[operator]`, `[noise]`, `[drift]`, `[grid]`, `[initial]` and
//! `[experiment]`. Every section and key is optional; absent keys take the
//! defaults below. Unknown sections and keys are rejected, and
//! [`parse_config`] reports every problem it finds rather than the first.
//!
//! | key | default |
//! |-----|---------|
//! | `kernel.family` | `"riesz"` (also `"tempered"`, `"parabolic"`) |
//! | `kernel.rho` | `1.5` (must be absent or `1` for `"parabolic"`) |
//! | `kernel.eta` | `0.0` (only for `"tempered"`) |
//! | `operator.discretization` | `"spectral"` (also `"fem"`) |
//! | `operator.resolution` | `64` modes or cells |
//! | `operator.dimension` | `1` |
//! | `operator.delta` | unset |
//! | `noise.spectrum` | `"power_law"` with `μ_j = q j^(-2s)` (also `"explicit"`) |
//! | `noise.s`, `noise.q` | `1.0`, `1.0` |
//! | `noise.mu` | required for `"explicit"` |
//! | `noise.modes` | largest spatial resolution the experiment uses |
//! | `drift.kind` | `"zero"` (also `"scaled_sine"`, `"tanh"`) |
//! | `drift.c`, `drift.a` | `1.0`, `1.0` |
//! | `grid.t_end` | `1.0` |
//! | `grid.n_steps` | `256` |
//! | `initial.coefficients` | `[1.0]`, i.e. `x0 = e_1` |
//! | `experiment.method` | `"exact"` when `F = 0` and spectral, else `"monte_carlo"` |
//! | `experiment.axis` | `"time"` (also `"space"`) |
//! | `experiment.levels` | five dyadic levels ending at `grid.n_steps` (time) or `operator.resolution` (space) |
//! | `experiment.reference` | `"exact"` when `F = 0` and spectral, else `"fine"` |
//! | `experiment.reference_steps` | `4 ×` finest steps (time), finest steps (space) |
//! | `experiment.reference_resolution` | finest resolution (time), `2 ×` finest (space) |
//! | `experiment.reference_modes` | `256` or more; see [`crate::experiments::strong::default_reference`] |
//! | `experiment.analytic_tail` | `true` on the space axis |
//! | `experiment.paths` | `1000` |
//! | `experiment.seed` | `0` |
//! | `experiment.functional` | `"mode_power"` (also `"norm_squared"`) |
//! | `experiment.mode`, `experiment.power` | `1`, `2` |
//! | `experiment.functional_modes` | finest resolution |
//! | `experiment.functional_time` | `grid.t_end` |
//! | `experiment.mode_1`, `experiment.time_1` | `1`, `t_end / 2` |
//! | `experiment.mode_2`, `experiment.time_2` | `1`, `t_end` |
//! | `experiment.p` | `2.0` |
//! | `experiment.gamma` | `0.9 β` with `β` the admissible noise regularity |
//! | `experiment.record` | all nodes |
//!
//! The seed may be written as an integer or, above `i64::MAX`, as a decimal
//! string.

use std::collections::BTreeSet;
use std::fmt;

use toml::{Table, Value};

use crate::experiments::covariance::Observation;
use crate::experiments::functional::FunctionalSpec;
use crate::experiments::strong::McReference;
use crate::experiments::{Axis, Ladder, Level, MonteCarlo, Problem, RateWindow, SpaceKind};
use crate::kernel::{KernelFamily, KernelSpec};
use crate::noise::NoiseModel;
use crate::operator::{validate_config, InitialData};
use crate::reference::ReferenceModes;
use crate::scheme::{DriftSpec, TimeGrid};

/// Every problem found in a configuration, in document order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub messages: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "invalid configuration ({} problem{}):",
            self.messages.len(),
            if self.messages.len() == 1 { "" } else { "s" }
        )?;
        for m in &self.messages {
            writeln!(f, "  - {m}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    Exact,
    Fine,
}

/// Which rate a window is requested for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    Strong,
    Weak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionalKind {
    ModePower { mode: usize, power: u32 },
    NormSquared { modes: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSection {
    pub method: Method,
    pub axis: Axis,
    pub levels: Vec<usize>,
    pub reference: ReferenceKind,
    pub reference_level: Level,
    pub reference_modes: ReferenceModes,
    pub paths: usize,
    pub seed: u64,
    pub functional: FunctionalKind,
    pub functional_time: f64,
    pub observations: (Observation, Observation),
    pub mode: usize,
    pub p: f64,
    pub gamma: f64,
    pub record: Option<Vec<f64>>,
}

/// A validated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kernel: KernelSpec,
    pub space: SpaceKind,
    pub resolution: usize,
    pub dimension: usize,
    pub delta: Option<f64>,
    pub noise: NoiseModel,
    pub drift: DriftSpec,
    pub t_end: f64,
    pub n_steps: usize,
    pub x0: InitialData,
    pub experiment: ExperimentSection,
}

impl ExperimentConfig {
    pub fn problem(&self) -> Problem {
        Problem {
            kernel: self.kernel,
            noise: self.noise.clone(),
            drift: self.drift,
            x0: self.x0.clone(),
            t_end: self.t_end,
        }
    }

    /// The level given by `[operator]` and `[grid]` alone.
    pub fn base_level(&self) -> Level {
        Level { n_steps: self.n_steps, resolution: self.resolution }
    }

    pub fn grid(&self) -> crate::Result<TimeGrid> {
        TimeGrid::new(self.t_end, self.n_steps)
    }

    pub fn ladder(&self) -> crate::Result<Ladder> {
        if self.experiment.levels.is_empty() {
            let fixed = match self.experiment.axis {
                Axis::Time => format!("grid.n_steps = {}", self.n_steps),
                Axis::Space => format!("operator.resolution = {}", self.resolution),
            };
            return Err(crate::Error::Validation(format!(
                "experiment.levels is unset and the default five-level dyadic ladder does not divide {fixed}"
            )));
        }
        build_ladder(self.experiment.axis, self.space, self.base_level(), &self.experiment.levels)
    }

    pub fn monte_carlo(&self) -> crate::Result<MonteCarlo> {
        MonteCarlo::new(self.experiment.paths, self.experiment.seed)
    }

    pub fn strong_reference(&self) -> McReference {
        match self.experiment.reference {
            ReferenceKind::Exact => McReference::ExactLinear {
                modes: self.experiment.reference_level.resolution,
                n_steps: self.experiment.reference_level.n_steps,
            },
            ReferenceKind::Fine => McReference::FinestLevel(self.experiment.reference_level),
        }
    }

    pub fn functional(&self) -> FunctionalSpec {
        let tau = self.experiment.functional_time;
        match self.experiment.functional {
            FunctionalKind::ModePower { mode, power } => FunctionalSpec::mode_power(mode, tau, power),
            FunctionalKind::NormSquared { modes } => FunctionalSpec::norm_squared(modes, tau),
        }
    }

    /// The acceptance window for the configured axis.
    pub fn window(&self, statistic: Statistic) -> RateWindow {
        let (rho, gamma) = (self.kernel.rho(), self.experiment.gamma);
        match (statistic, self.experiment.axis) {
            (Statistic::Strong, Axis::Time) => RateWindow::strong_time(rho, gamma),
            (Statistic::Strong, Axis::Space) => RateWindow::strong_space(gamma),
            (Statistic::Weak, Axis::Time) => RateWindow::weak_time(rho, gamma),
            (Statistic::Weak, Axis::Space) => RateWindow::weak_space(gamma),
        }
    }

    /// Steps to record for `simulate`: the configured times mapped to nodes.
    pub fn record_steps(&self, times: Option<&[f64]>) -> crate::Result<Vec<usize>> {
        let grid = self.grid()?;
        match times.or(self.experiment.record.as_deref()) {
            None => Ok((0..=self.n_steps).collect()),
            Some(ts) => ts
                .iter()
                .map(|&t| {
                    grid.node_index(t).ok_or_else(|| {
                        crate::Error::Validation(format!(
                            "record time {t} is not a node of the grid with k = {}",
                            grid.k()
                        ))
                    })
                })
                .collect(),
        }
    }
}

const SECTIONS: [(&str, &[&str]); 7] = [
    ("kernel", &["family", "rho", "eta"]),
    ("operator", &["discretization", "resolution", "dimension", "delta"]),
    ("noise", &["spectrum", "s", "q", "mu", "modes"]),
    ("drift", &["kind", "c", "a"]),
    ("grid", &["t_end", "n_steps"]),
    ("initial", &["coefficients"]),
    (
        "experiment",
        &[
            "method",
            "axis",
            "levels",
            "reference",
            "reference_steps",
            "reference_resolution",
            "reference_modes",
            "analytic_tail",
            "paths",
            "seed",
            "functional",
            "mode",
            "power",
            "functional_modes",
            "functional_time",
            "mode_1",
            "time_1",
            "mode_2",
            "time_2",
            "p",
            "gamma",
            "record",
        ],
    ),
];

/// Typed access to one section that records every error.
struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
    errors: &'a mut Vec<String>,
}

impl<'a> Section<'a> {
    fn raw(&self, key: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(key))
    }

    fn has(&self, key: &str) -> bool {
        self.raw(key).is_some()
    }

    fn type_error(&mut self, key: &str, expected: &str, v: &Value) {
        self.errors.push(format!("[{}] {key}: expected {expected}, found {}", self.name, v.type_str()));
    }

    fn float_opt(&mut self, key: &str) -> Option<f64> {
        match self.raw(key)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            v => {
                self.type_error(key, "a number", v);
                None
            }
        }
    }

    fn float(&mut self, key: &str, default: f64) -> f64 {
        self.float_opt(key).unwrap_or(default)
    }

    fn count_opt(&mut self, key: &str) -> Option<usize> {
        match self.raw(key)? {
            Value::Integer(i) if *i >= 0 => Some(*i as usize),
            v => {
                self.type_error(key, "a non-negative integer", v);
                None
            }
        }
    }

    fn count(&mut self, key: &str, default: usize) -> usize {
        self.count_opt(key).unwrap_or(default)
    }

    fn boolean(&mut self, key: &str, default: bool) -> bool {
        match self.raw(key) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(v) => {
                self.type_error(key, "a boolean", v);
                default
            }
        }
    }

    fn choice<T: Copy>(&mut self, key: &str, options: &[(&str, T)], default: T) -> T {
        match self.raw(key) {
            None => default,
            Some(Value::String(s)) => match options.iter().find(|(name, _)| name == s) {
                Some(&(_, t)) => t,
                None => {
                    let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                    self.errors.push(format!("[{}] {key}: unknown value {s:?}, expected one of {names:?}", self.name));
                    default
                }
            },
            Some(v) => {
                self.type_error(key, "a string", v);
                default
            }
        }
    }

    fn floats(&mut self, key: &str) -> Option<Vec<f64>> {
        let v = self.raw(key)?;
        let Value::Array(items) = v else {
            self.type_error(key, "an array of numbers", v);
            return None;
        };
        let mut out = Vec::with_capacity(items.len());
        for item in items {
            match item {
                Value::Float(x) => out.push(*x),
                Value::Integer(i) => out.push(*i as f64),
                other => {
                    self.type_error(key, "an array of numbers", other);
                    return None;
                }
            }
        }
        Some(out)
    }

    fn counts(&mut self, key: &str) -> Option<Vec<usize>> {
        let v = self.raw(key)?;
        let Value::Array(items) = v else {
            self.type_error(key, "an array of integers", v);
            return None;
        };
        let mut out = Vec::with_capacity(items.len());
        for item in items {
            match item {
                Value::Integer(i) if *i >= 0 => out.push(*i as usize),
                other => {
                    self.type_error(key, "an array of non-negative integers", other);
                    return None;
                }
            }
        }
        Some(out)
    }

    fn seed(&mut self, key: &str) -> u64 {
        match self.raw(key) {
            None => 0,
            Some(Value::Integer(i)) if *i >= 0 => *i as u64,
            Some(Value::String(s)) => s.parse().unwrap_or_else(|_| {
                self.errors.push(format!("[{}] {key}: {s:?} is not an unsigned 64-bit integer", self.name));
                0
            }),
            Some(v) => {
                self.type_error(key, "an unsigned 64-bit integer", v);
                0
            }
        }
    }

    fn check(&mut self, what: crate::Result<()>) {
        if let Err(e) = what {
            self.errors.push(format!("[{}] {e}", self.name));
        }
    }
}

fn build_ladder(axis: Axis, space: SpaceKind, base: Level, levels: &[usize]) -> crate::Result<Ladder> {
    match axis {
        Axis::Time => Ladder::temporal(space, base.resolution, levels),
        Axis::Space => Ladder::spatial(space, base.n_steps, levels),
    }
}

fn default_levels(finest: usize) -> Vec<usize> {
    (0..5).rev().map(|i| finest >> i).collect()
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> std::result::Result<ExperimentConfig, ConfigError> {
    let doc: Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError { messages: vec![e.to_string().trim_end().to_string()] })?;
    let mut errors = Vec::new();

    for (key, value) in &doc {
        match SECTIONS.iter().find(|(name, _)| name == key) {
            None => errors.push(format!("unknown section [{key}]")),
            Some((name, keys)) => match value {
                Value::Table(t) => {
                    for k in t.keys().filter(|k| !keys.contains(&k.as_str())) {
                        errors.push(format!("[{name}] unknown key `{k}`"));
                    }
                }
                v => errors.push(format!("`{key}` must be a section, found {}", v.type_str())),
            },
        }
    }
    let section = |name: &'static str| doc.get(name).and_then(Value::as_table);

    // [kernel]
    let mut s = Section { name: "kernel", table: section("kernel"), errors: &mut errors };
    let family = s.choice(
        "family",
        &[("riesz", KernelFamily::Riesz), ("tempered", KernelFamily::Tempered), ("parabolic", KernelFamily::Parabolic)],
        KernelFamily::Riesz,
    );
    let rho = s.float("rho", if family == KernelFamily::Parabolic { 1.0 } else { 1.5 });
    let eta = s.float("eta", 0.0);
    let kernel = match family {
        KernelFamily::Parabolic => {
            if rho != 1.0 {
                s.errors.push(format!("[kernel] the parabolic kernel has rho = 1, got {rho}"));
            }
            if s.has("eta") {
                s.errors.push("[kernel] eta applies only to the tempered family".into());
            }
            Some(KernelSpec::parabolic())
        }
        KernelFamily::Riesz => {
            if s.has("eta") {
                s.errors.push("[kernel] eta applies only to the tempered family".into());
            }
            KernelSpec::riesz(rho).map_err(|e| s.errors.push(format!("[kernel] {e}"))).ok()
        }
        KernelFamily::Tempered => {
            KernelSpec::tempered(rho, eta).map_err(|e| s.errors.push(format!("[kernel] {e}"))).ok()
        }
    };

    // [operator]
    let mut s = Section { name: "operator", table: section("operator"), errors: &mut errors };
    let space =
        s.choice("discretization", &[("spectral", SpaceKind::Spectral), ("fem", SpaceKind::Fem)], SpaceKind::Spectral);
    let resolution = s.count("resolution", 64);
    let dimension = s.count("dimension", 1);
    let delta = s.float_opt("delta");
    if resolution < 1 || (space == SpaceKind::Fem && resolution < 2) {
        s.errors.push(format!("[operator] resolution {resolution} is too small"));
    }
    if let Some(kernel) = &kernel {
        // as:F and the Volterra example restrict the dimension through ρ
        let check = validate_config(kernel, dimension, delta);
        let ok = check.is_ok();
        s.check(check);
        if ok && dimension != 1 {
            s.errors.push(format!(
                "[operator] dimension {dimension} is admissible but only the unit interval (d = 1) is discretized"
            ));
        }
    }

    // [grid]
    let mut s = Section { name: "grid", table: section("grid"), errors: &mut errors };
    let t_end = s.float("t_end", 1.0);
    let n_steps = s.count("n_steps", 256);
    let grid_ok = TimeGrid::new(t_end, n_steps).map_err(|e| s.errors.push(format!("[grid] {e}"))).is_ok();

    // [drift]
    let mut s = Section { name: "drift", table: section("drift"), errors: &mut errors };
    #[derive(Clone, Copy, PartialEq)]
    enum DriftKind {
        Zero,
        Sine,
        Tanh,
    }
    let kind = s.choice(
        "kind",
        &[("zero", DriftKind::Zero), ("scaled_sine", DriftKind::Sine), ("tanh", DriftKind::Tanh)],
        DriftKind::Zero,
    );
    let c = s.float("c", 1.0);
    let a = s.float("a", 1.0);
    if !c.is_finite() || !a.is_finite() {
        s.errors.push("[drift] c and a must be finite".into());
    }
    if kind != DriftKind::Tanh && s.has("a") {
        s.errors.push("[drift] a applies only to kind = \"tanh\"".into());
    }
    if kind == DriftKind::Zero && s.has("c") {
        s.errors.push("[drift] c has no effect with kind = \"zero\"".into());
    }
    let drift = match kind {
        DriftKind::Zero => DriftSpec::Zero,
        DriftKind::Sine => DriftSpec::ScaledSine { c },
        DriftKind::Tanh => DriftSpec::TanhSaturation { c, a },
    };

    // [initial]
    let mut s = Section { name: "initial", table: section("initial"), errors: &mut errors };
    let coefficients = s.floats("coefficients").unwrap_or_else(|| vec![1.0]);
    if coefficients.iter().any(|c| !c.is_finite()) {
        s.errors.push("[initial] coefficients must be finite".into());
    }
    let x0 = InitialData::new(coefficients);

    // [experiment], needed before [noise] to size the default mode count
    let linear = drift.is_zero();
    let exact_capable = linear && space == SpaceKind::Spectral;
    let mut s = Section { name: "experiment", table: section("experiment"), errors: &mut errors };
    let method = s.choice(
        "method",
        &[("exact", Method::Exact), ("monte_carlo", Method::MonteCarlo)],
        if exact_capable { Method::Exact } else { Method::MonteCarlo },
    );
    if method == Method::Exact && !exact_capable {
        s.errors
            .push("[experiment] method = \"exact\" needs drift kind = \"zero\" and a spectral discretization".into());
    }
    let axis = s.choice("axis", &[("time", Axis::Time), ("space", Axis::Space)], Axis::Time);
    let base = Level { n_steps, resolution };
    let (levels, ladder) = match s.counts("levels") {
        Some(levels) => {
            let ladder = build_ladder(axis, space, base, &levels)
                .map_err(|e| s.errors.push(format!("[experiment] levels: {e}")))
                .ok();
            (levels, ladder)
        }
        // an unusable default only matters to the rate subcommands
        None => {
            let levels = default_levels(match axis {
                Axis::Time => n_steps,
                Axis::Space => resolution,
            });
            match build_ladder(axis, space, base, &levels) {
                Ok(ladder) => (levels, Some(ladder)),
                Err(_) => (Vec::new(), None),
            }
        }
    };
    let finest = ladder.as_ref().map(|l| l.finest()).unwrap_or(base);
    let reference = s.choice(
        "reference",
        &[("exact", ReferenceKind::Exact), ("fine", ReferenceKind::Fine)],
        if exact_capable { ReferenceKind::Exact } else { ReferenceKind::Fine },
    );
    if reference == ReferenceKind::Exact && !exact_capable {
        s.errors.push(
            "[experiment] reference = \"exact\" needs drift kind = \"zero\" and a spectral discretization".into(),
        );
    }
    let (default_steps, default_res) = match axis {
        Axis::Time => (4 * finest.n_steps, finest.resolution),
        Axis::Space => (finest.n_steps, 2 * finest.resolution),
    };
    let reference_level = Level {
        n_steps: s.count("reference_steps", default_steps),
        resolution: s.count("reference_resolution", default_res),
    };
    let default_modes = ladder.as_ref().map(crate::experiments::strong::default_reference);
    let reference_modes = ReferenceModes {
        modes: s.count("reference_modes", default_modes.map_or(256, |r| r.modes)),
        analytic_tail: s.boolean("analytic_tail", default_modes.is_some_and(|r| r.analytic_tail)),
    };
    let paths = s.count("paths", 1000);
    let seed = s.seed("seed");
    #[derive(Clone, Copy, PartialEq)]
    enum FKind {
        ModePower,
        NormSquared,
    }
    let fkind = s.choice(
        "functional",
        &[("mode_power", FKind::ModePower), ("norm_squared", FKind::NormSquared)],
        FKind::ModePower,
    );
    let mode = s.count("mode", 1);
    let power = s.count("power", 2);
    if mode < 1 {
        s.errors.push("[experiment] mode must be >= 1".into());
    }
    if !(1..=8).contains(&power) {
        s.errors.push(format!("[experiment] power must lie in 1..=8, got {power}"));
    }
    let functional_modes = s.count("functional_modes", finest.resolution);
    if functional_modes < 1 {
        s.errors.push("[experiment] functional_modes must be >= 1".into());
    }
    let functional = match fkind {
        FKind::ModePower => FunctionalKind::ModePower { mode: mode.max(1), power: power as u32 },
        FKind::NormSquared => FunctionalKind::NormSquared { modes: functional_modes.max(1) },
    };
    let functional_time = s.float("functional_time", t_end);
    let mode_1 = s.count("mode_1", 1);
    let time_1 = s.float("time_1", t_end / 2.0);
    let mode_2 = s.count("mode_2", 1);
    let time_2 = s.float("time_2", t_end);
    if mode_1 < 1 || mode_2 < 1 {
        s.errors.push("[experiment] mode_1 and mode_2 must be >= 1".into());
    }
    let observations = (Observation::mode(mode_1.max(1), time_1), Observation::mode(mode_2.max(1), time_2));
    let p = s.float("p", 2.0);
    if !(p >= 1.0 && p.is_finite()) {
        s.errors.push(format!("[experiment] p must be a finite moment order >= 1, got {p}"));
    }
    let gamma_override = s.float_opt("gamma");
    let record = s.floats("record");
    if grid_ok {
        let grids: Vec<Level> = ladder.as_ref().map(|l| l.levels.clone()).unwrap_or_default();
        let mut times: Vec<(&str, f64)> =
            vec![("functional_time", functional_time), ("time_1", time_1), ("time_2", time_2)];
        times.extend(record.iter().flatten().map(|&t| ("record", t)));
        let mut bad = BTreeSet::new();
        times.retain(|(what, _)| s.has(what));
        for (what, t) in times {
            let on_every = std::iter::once(base)
                .chain(grids.iter().copied())
                .all(|l| TimeGrid::new(t_end, l.n_steps).ok().and_then(|g| g.node_index(t)).is_some());
            if !on_every && bad.insert(what) {
                s.errors.push(format!("[experiment] {what} = {t} is not a node of every time grid in use"));
            }
        }
    }

    // [noise]
    let largest_resolution = finest.resolution.max(reference_level.resolution).max(resolution);
    let needed_modes = match space {
        SpaceKind::Spectral => largest_resolution,
        SpaceKind::Fem => largest_resolution.saturating_sub(1).max(1),
    };
    let mut s = Section { name: "noise", table: section("noise"), errors: &mut errors };
    #[derive(Clone, Copy, PartialEq)]
    enum SpectrumKind {
        PowerLaw,
        Explicit,
    }
    let spectrum = s.choice(
        "spectrum",
        &[("power_law", SpectrumKind::PowerLaw), ("explicit", SpectrumKind::Explicit)],
        SpectrumKind::PowerLaw,
    );
    let modes = s.count_opt("modes");
    let noise = match spectrum {
        SpectrumKind::PowerLaw => {
            if s.has("mu") {
                s.errors.push("[noise] mu applies only to spectrum = \"explicit\"".into());
            }
            let (sv, q) = (s.float("s", 1.0), s.float("q", 1.0));
            NoiseModel::power_law(sv, q, modes.unwrap_or(needed_modes))
                .map_err(|e| s.errors.push(format!("[noise] {e}")))
                .ok()
        }
        SpectrumKind::Explicit => {
            if s.has("s") || s.has("q") {
                s.errors.push("[noise] s and q apply only to spectrum = \"power_law\"".into());
            }
            match s.floats("mu") {
                None if !s.has("mu") => {
                    s.errors.push("[noise] spectrum = \"explicit\" needs mu".into());
                    None
                }
                None => None,
                Some(mu) => NoiseModel::explicit(mu)
                    .map(|n| match modes {
                        Some(m) => n.with_modes(m),
                        None => {
                            let m = n.n_modes().max(needed_modes);
                            n.with_modes(m)
                        }
                    })
                    .map_err(|e| s.errors.push(format!("[noise] {e}")))
                    .ok(),
            }
        }
    };
    if let Some(n) = &noise {
        if n.n_modes() < needed_modes {
            s.errors.push(format!(
                "[noise] modes = {} under-resolves the spatial operator, which needs at least {needed_modes}",
                n.n_modes()
            ));
        }
    }
    let gamma = match (&noise, &kernel) {
        (Some(n), Some(k)) => match n.admissible_beta(k.rho()) {
            Ok(beta) => {
                let g = gamma_override.unwrap_or(0.9 * beta);
                if !(g > 0.0 && g <= beta) {
                    errors.push(format!("[experiment] gamma must lie in (0, beta] with beta = {beta}, got {g}"));
                }
                g
            }
            Err(e) => {
                errors.push(format!("[noise] {e}"));
                0.0
            }
        },
        _ => 0.0,
    };

    match (kernel, noise, errors.is_empty()) {
        (Some(kernel), Some(noise), true) => Ok(ExperimentConfig {
            kernel,
            space,
            resolution,
            dimension,
            delta,
            noise,
            drift,
            t_end,
            n_steps,
            x0,
            experiment: ExperimentSection {
                method,
                axis,
                levels,
                reference,
                reference_level,
                reference_modes,
                paths,
                seed,
                functional,
                functional_time,
                observations,
                mode: mode.max(1),
                p,
                gamma,
                record,
            },
        }),
        _ => Err(ConfigError { messages: errors }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn messages(text: &str) -> Vec<String> {
        parse_config(text).unwrap_err().messages
    }

    #[test]
    fn empty_document_takes_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c.kernel, KernelSpec::riesz(1.5).unwrap());
        assert_eq!(c.space, SpaceKind::Spectral);
        assert_eq!((c.resolution, c.n_steps, c.t_end), (64, 256, 1.0));
        assert_eq!(c.noise.n_modes(), 64);
        assert_eq!(c.experiment.levels, vec![16, 32, 64, 128, 256]);
        assert_eq!(c.experiment.method, Method::Exact);
        assert_eq!(c.experiment.seed, 0);
        assert_eq!(c.experiment.reference_level, Level { n_steps: 1024, resolution: 64 });
        // s = 1 gives β = 2/3 at ρ = 1.5
        assert!((c.experiment.gamma - 0.6).abs() < 1e-12);
        assert!(c.ladder().is_ok());
    }

    #[test]
    fn minimal_volterra_config() {
        let c = parse_config("[kernel]\nrho = 1.25\n[grid]\nn_steps = 64\n").unwrap();
        assert_eq!(c.kernel.rho(), 1.25);
        assert_eq!(c.experiment.levels, vec![4, 8, 16, 32, 64]);
        assert_eq!(c.drift, DriftSpec::Zero);
        assert_eq!(c.x0, InitialData::new(vec![1.0]));
    }

    #[test]
    fn rho_outside_open_interval() {
        let m = messages("[kernel]\nrho = 2.0\n");
        assert!(m.iter().any(|m| m.contains("rho must lie in (1,2)")), "{m:?}");
    }

    #[test]
    fn three_dimensions_need_small_rho() {
        let m = messages("[kernel]\nrho = 1.5\n[operator]\ndimension = 3\n");
        assert!(m.iter().any(|m| m.contains("rho < 4/3")), "{m:?}");
        let m = messages("[kernel]\nrho = 1.2\n[operator]\ndimension = 3\n");
        assert!(m.iter().any(|m| m.contains("only the unit interval")), "{m:?}");
    }

    #[test]
    fn all_errors_are_collected() {
        let m = messages(
            "[kernel]\nrho = 2.5\nbogus = 1\n[grid]\nn_steps = 0\n[weird]\nx = 1\n[drift]\nkind = \"cubic\"\n",
        );
        assert!(m.len() >= 4, "{m:?}");
        assert!(m.iter().any(|m| m.contains("unknown key `bogus`")));
        assert!(m.iter().any(|m| m.contains("unknown section [weird]")));
        assert!(m.iter().any(|m| m.contains("\"cubic\"")));
        assert!(m.iter().any(|m| m.starts_with("[grid]")));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let m = messages("[kernel]\nrho = 1.5\nfamily = \n");
        assert!(m[0].contains("line 3"), "{m:?}");
    }

    #[test]
    fn inadmissible_noise_is_reported() {
        let m = messages("[noise]\nspectrum = \"explicit\"\nmu = [1, 4, 9, 16, 25, 36, 49, 64]\n");
        assert!(m.iter().any(|m| m.contains("beta <= 0 for this Q")), "{m:?}");
    }

    #[test]
    fn under_resolved_noise_is_flagged() {
        let m = messages("[operator]\nresolution = 32\n[noise]\nmodes = 16\n");
        assert!(m.iter().any(|m| m.contains("under-resolves")), "{m:?}");
    }

    #[test]
    fn seeds_cover_the_full_range() {
        let c = parse_config("[experiment]\nseed = \"18446744073709551615\"\n").unwrap();
        assert_eq!(c.experiment.seed, u64::MAX);
        assert!(parse_config("[experiment]\nseed = -1\n").is_err());
    }

    #[test]
    fn semilinear_defaults_to_monte_carlo() {
        let c = parse_config("[drift]\nkind = \"scaled_sine\"\nc = 1.0\n").unwrap();
        assert_eq!(c.experiment.method, Method::MonteCarlo);
        assert_eq!(c.strong_reference(), McReference::FinestLevel(Level { n_steps: 1024, resolution: 64 }));
        assert!(parse_config("[drift]\nkind = \"scaled_sine\"\n[experiment]\nmethod = \"exact\"\n").is_err());
    }

    #[test]
    fn unusable_defaults_are_deferred() {
        let c = parse_config("[grid]\nt_end = 3.0\nn_steps = 3\n").unwrap();
        assert!(c.ladder().unwrap_err().to_string().contains("experiment.levels is unset"));
    }

    #[test]
    fn observation_times_must_be_nodes() {
        let m = messages("[grid]\nn_steps = 64\n[experiment]\ntime_1 = 0.3\n");
        assert!(m.iter().any(|m| m.contains("time_1")), "{m:?}");
    }

    #[test]
    fn space_axis_defaults() {
        let c = parse_config("[operator]\ndiscretization = \"fem\"\nresolution = 32\n[experiment]\naxis = \"space\"\n")
            .unwrap();
        assert_eq!(c.experiment.levels, vec![2, 4, 8, 16, 32]);
        assert_eq!(c.experiment.reference_level, Level { n_steps: 256, resolution: 64 });
        assert_eq!(c.noise.n_modes(), 63);
        assert!(matches!(c.window(Statistic::Weak), w if (w.target - 2.0 * c.experiment.gamma).abs() < 1e-15));
    }

    #[test]
    fn parabolic_family() {
        let c = parse_config("[kernel]\nfamily = \"parabolic\"\n[noise]\ns = 0.0\n").unwrap();
        assert!(c.kernel.is_parabolic());
        assert!((c.experiment.gamma - 0.45).abs() < 1e-12);
        assert!(parse_config("[kernel]\nfamily = \"parabolic\"\nrho = 1.5\n").is_err());
    }
}
