//! Log-log least squares and rate tables.

use crate::error::{ensure, Result};

/// Ordinary least-squares line `y ≈ intercept + slope · x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// All ordinates equal: the slope is exactly zero.
    pub flat: bool,
}

pub fn least_squares(points: &[(f64, f64)]) -> Result<Fit> {
    ensure!(points.len() >= 2, Degenerate, "a line needs at least two points, got {}", points.len());
    ensure!(points.iter().all(|(x, y)| x.is_finite() && y.is_finite()), Degenerate, "non-finite data in regression");
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = points.iter().map(|(_, y)| (y - my).powi(2)).sum();
    ensure!(sxx > 0.0, Degenerate, "all abscissae coincide");
    let slope = sxy / sxx;
    let flat = syy == 0.0;
    let r_squared = if flat { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(Fit { slope, intercept: my - slope * mx, r_squared, flat })
}

/// Which discretization parameter a ladder refines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Time,
    Space,
}

impl Axis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Time => "time",
            Self::Space => "space",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    pub level: usize,
    pub h: f64,
    pub k: f64,
    pub error: f64,
    pub stderr: f64,
}

/// Slope fit of `log error` against `log k` (or `log h`) over rows with
/// at least three entries. Non-positive errors cannot be fitted.
pub fn fit_rate(rows: &[RateRow], axis: Axis) -> Result<Fit> {
    ensure!(rows.len() >= 3, Degenerate, "a rate fit needs at least 3 levels, got {}", rows.len());
    if let Some(r) = rows.iter().find(|r| !(r.error > 0.0)) {
        return Err(crate::Error::Degenerate(format!(
            "error {} at level {} is below the noise floor",
            r.error, r.level
        )));
    }
    let points: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| {
            let x = match axis {
                Axis::Time => r.k,
                Axis::Space => r.h,
            };
            (x.ln(), r.error.ln())
        })
        .collect();
    least_squares(&points)
}

/// Acceptance window `[target - below, target + above]` for a fitted slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateWindow {
    pub target: f64,
    pub below: f64,
    pub above: f64,
}

impl RateWindow {
    pub fn new(target: f64, below: f64, above: f64) -> Self {
        Self { target, below, above }
    }

    /// `ργ/2`, `-0.15/+0.25`.
    pub fn strong_time(rho: f64, gamma: f64) -> Self {
        Self::new(rho * gamma / 2.0, 0.15, 0.25)
    }

    /// `γ`, `-0.15/+0.25`.
    pub fn strong_space(gamma: f64) -> Self {
        Self::new(gamma, 0.15, 0.25)
    }

    /// `ργ`, `-0.2/+0.3`.
    pub fn weak_time(rho: f64, gamma: f64) -> Self {
        Self::new(rho * gamma, 0.2, 0.3)
    }

    /// `2γ`, `-0.2/+0.3`.
    pub fn weak_space(gamma: f64) -> Self {
        Self::new(2.0 * gamma, 0.2, 0.3)
    }

    pub fn lower(&self) -> f64 {
        self.target - self.below
    }

    pub fn upper(&self) -> f64 {
        self.target + self.above
    }

    pub fn contains(&self, slope: f64) -> bool {
        slope >= self.lower() && slope <= self.upper()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Informational,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Pass => "PASS",
            Self::Fail => "FAIL",
            Self::Informational => "INFO",
        }
    }
}

/// Errors on a refinement ladder with their fitted rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub axis: Axis,
    pub rows: Vec<RateRow>,
    pub fit: Option<Fit>,
    pub window: Option<RateWindow>,
    /// Why no fit is available, if so.
    pub note: Option<String>,
}

impl RateTable {
    pub fn new(axis: Axis, rows: Vec<RateRow>, window: Option<RateWindow>) -> Self {
        let (fit, note) = match fit_rate(&rows, axis) {
            Ok(fit) => {
                let note = fit.flat.then(|| "flat: all errors equal".to_string());
                (Some(fit), note)
            }
            Err(e) => (None, Some(e.to_string())),
        };
        Self { axis, rows, fit, window, note }
    }

    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    pub fn verdict(&self) -> Verdict {
        match (self.window, self.fit) {
            (None, _) => Verdict::Informational,
            (Some(w), Some(f)) if !f.flat && w.contains(f.slope) => Verdict::Pass,
            _ => Verdict::Fail,
        }
    }

    /// One-line summary: verdict, slope and window.
    pub fn verdict_line(&self) -> String {
        let slope = self.slope().map_or("n/a".to_string(), |s| format!("{s:.4}"));
        match self.window {
            Some(w) => format!(
                "{} {} slope {} target {:.4} window [{:.4}, {:.4}]{}",
                self.verdict().as_str(),
                self.axis.as_str(),
                slope,
                w.target,
                w.lower(),
                w.upper(),
                self.note.as_ref().map_or(String::new(), |n| format!(" ({n})"))
            ),
            None => format!("{} {} slope {}", self.verdict().as_str(), self.axis.as_str(), slope),
        }
    }
}
