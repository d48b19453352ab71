//! Theory-side quantities: rate constants, rate fits, empirical estimates of
//! `C0`, `μ`, `R0`, and the spectral check for linear problems.

pub mod checks;
pub mod constants;
pub mod estimates;
pub mod rates;
pub mod spectral;

pub use checks::gradient_check;
pub use constants::{
    linear_rate_bound, power_gap_min, recurrence_bound, schwarz_condition_number, sharp_bound, sharp_exponent,
    sharp_rate_constant, sharp_scale, sharp_threshold, sublinear_rate_constant, PowerGapMin,
};
pub use estimates::{check_sharp_bound, estimate_c0, estimate_sublevel, BoundCheck, C0Sampling, SampleOptions, SublevelEstimate};
pub use rates::{fit_rate, fit_rate_values, FitMode, RateFit, RateReport, Window, ERROR_FLOOR, MIN_WINDOW};
pub use spectral::{linear_spectral_check, preconditioned_spectrum, PreconditionedSpectrum, SpectralReport};
