//! Memory kernels `b(t) = t^(ρ-2) e^(-ηt) / Γ(ρ-1)` and their Laplace transforms.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{ensure, Result};
use crate::special::gamma;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    /// `b(t) = t^(ρ-2) / Γ(ρ-1)`, fractional-in-time equation.
    Riesz,
    /// `b(t) = t^(ρ-2) e^(-ηt) / Γ(ρ-1)`.
    Tempered,
    /// No memory: the parabolic equation, ρ = 1.
    Parabolic,
}

/// A memory kernel together with its sector parameter ρ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    rho: f64,
    eta: f64,
}

impl KernelSpec {
    pub fn riesz(rho: f64) -> Result<Self> {
        ensure!(rho > 1.0 && rho < 2.0, Validation, "rho must lie in (1,2), got {rho}");
        Ok(Self { family: KernelFamily::Riesz, rho, eta: 0.0 })
    }

    pub fn tempered(rho: f64, eta: f64) -> Result<Self> {
        ensure!(rho > 1.0 && rho < 2.0, Validation, "rho must lie in (1,2), got {rho}");
        ensure!(eta >= 0.0 && eta.is_finite(), Validation, "eta must be finite and >= 0, got {eta}");
        Ok(Self { family: KernelFamily::Tempered, rho, eta })
    }

    pub fn parabolic() -> Self {
        Self { family: KernelFamily::Parabolic, rho: 1.0, eta: 0.0 }
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn is_parabolic(&self) -> bool {
        self.family == KernelFamily::Parabolic
    }

    /// `b(t)` for `t > 0`.
    pub fn value(&self, t: f64) -> Result<f64> {
        ensure!(!self.is_parabolic(), Domain, "the parabolic family has no memory kernel");
        ensure!(t > 0.0, Domain, "kernel evaluated at t = {t} <= 0");
        Ok(t.powf(self.rho - 2.0) * (-self.eta * t).exp() / gamma(self.rho - 1.0))
    }

    /// `b̂(z) = (z + η)^(1-ρ)` on the principal branch. The parabolic family
    /// has `b̂ ≡ 1`.
    pub fn laplace_transform(&self, z: Complex64) -> Result<Complex64> {
        let shifted = z + self.eta;
        if self.is_parabolic() {
            return Ok(Complex64::new(1.0, 0.0));
        }
        ensure!(shifted.norm() > 0.0, Domain, "Laplace transform evaluated at the branch point z = -eta");
        Ok(shifted.powf(1.0 - self.rho))
    }

    /// `1 + (2/π) sup |arg b̂(iω)|` over 4096 log-spaced ω in [1e-6, 1e6].
    pub fn sector_rho(&self) -> Result<f64> {
        self.sector_rho_sampled(1e-6, 1e6, 4096)
    }

    /// Sector estimate over a custom sample of the imaginary axis.
    pub fn sector_rho_sampled(&self, omega_min: f64, omega_max: f64, samples: usize) -> Result<f64> {
        ensure!(!self.is_parabolic(), Domain, "sector parameter requested for the parabolic family");
        ensure!(
            omega_min > 0.0 && omega_max > omega_min && samples >= 2,
            Domain,
            "invalid sampling range [{omega_min}, {omega_max}] with {samples} points"
        );
        let (lo, hi) = (omega_min.ln(), omega_max.ln());
        let mut sup: f64 = 0.0;
        for i in 0..samples {
            let omega = (lo + (hi - lo) * i as f64 / (samples - 1) as f64).exp();
            let v = self.laplace_transform(Complex64::new(0.0, omega))?;
            sup = sup.max(v.arg().abs());
        }
        Ok(1.0 + 2.0 / PI * sup)
    }
}

/// Free-function form of [`KernelSpec::value`].
pub fn kernel_value(spec: &KernelSpec, t: f64) -> Result<f64> {
    spec.value(t)
}

/// Free-function form of [`KernelSpec::laplace_transform`].
pub fn laplace_transform(spec: &KernelSpec, z: Complex64) -> Result<Complex64> {
    spec.laplace_transform(z)
}

/// Free-function form of [`KernelSpec::sector_rho`].
pub fn sector_rho(spec: &KernelSpec) -> Result<f64> {
    spec.sector_rho()
}

impl std::fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.family {
            KernelFamily::Riesz => write!(f, "riesz(rho={})", self.rho),
            KernelFamily::Tempered => write!(f, "tempered(rho={}, eta={})", self.rho, self.eta),
            KernelFamily::Parabolic => write!(f, "parabolic"),
        }
    }
}
