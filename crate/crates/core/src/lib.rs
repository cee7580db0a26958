//! Fully discrete approximation of semilinear stochastic Volterra
//! integro-differential equations with additive Q-Wiener noise,
//!
//! ```text
//! dX + (∫_0^t b(t-s) A X(s) ds) dt = F(X) dt + dW,   X(0) = x0,
//! ```
//!
//! on the unit interval with `A = -Δ` (homogeneous Dirichlet), together with
//! the machinery needed to measure strong and weak convergence rates.
//!
//! Layout:
//!
//! * [`kernel`]: memory kernels `b(t) = t^(ρ-2) e^(-ηt) / Γ(ρ-1)`, their
//!   Laplace transforms and the sector parameter ρ.
//! * [`quadrature`]: convolution-quadrature weights (closed form and a contour
//!   oracle) and discrete history convolutions.
//! * [`operator`]: spectral Galerkin and P1 finite element discretizations of
//!   `A`, fractional powers and `Ḣ^α` norms.
//! * [`noise`]: diagonal Q-Wiener noise, admissible regularity, counter-based
//!   increment tables and their coarsening.
//! * [`reference`]: Mittag-Leffler resolvents, discrete transfer coefficients
//!   and closed-form linear statistics.
//! * [`scheme`]: backward Euler + convolution quadrature and semi-implicit
//!   Euler-Maruyama steppers.
//! * [`experiments`]: strong/weak/covariance error ladders, Hölder estimates
//!   and log-log rate fits.
//! * [`config`]: the sectioned experiment configuration format.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod integrate;
pub mod kernel;
pub mod noise;
pub mod operator;
pub mod quadrature;
pub mod reference;
pub mod scheme;
pub mod special;

pub use error::{Error, Result};
pub use kernel::{KernelFamily, KernelSpec};
pub use noise::{IncrementTable, NoiseModel, Spectrum};
pub use operator::{Discretization, FemOperator, Field, InitialData, Representation, SpectralOperator};
pub use quadrature::CQWeights;
pub use scheme::{DriftSpec, SchemeConfig, SchemeKind, TimeGrid, Trajectory};
