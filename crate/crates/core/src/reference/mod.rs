//! Exact and semi-exact references: scalar resolvents, discrete transfer
//! coefficients and closed-form statistics of the linear equation.

mod linear;
mod mittag_leffler;
mod resolvent;

pub use linear::{
    discrete_covariance, exact_discrete_moments, exact_linear_covariance, exact_linear_moments,
    exact_strong_error_linear, mode_strong_error_sq, resolvent_square_integral, resolvent_square_integral_infinite,
    spectral_tail_sum, strong_error_by_mode, LinearProblem, Moments, ReferenceModes,
};
pub use mittag_leffler::{mittag_leffler, mittag_leffler_table, MittagLefflerTable, ASYMPTOTIC_LIMIT, SERIES_LIMIT};
pub use resolvent::{
    discrete_resolvent, resolvent_numeric, resolvent_s, transfer_coefficients, Resolvent, ResolventEval,
    TransferCoefficients, NUMERIC_STEPS, TABLE_STEPS,
};
