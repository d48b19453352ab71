//! Empirical rate fits over energy-error traces.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::solvers::IterationTrace;

/// Errors below this are treated as having reached machine precision.
pub const ERROR_FLOOR: f64 = 1e-14;
pub const MIN_WINDOW: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    /// Geometric mean of `ζ_{n+1}/ζ_n`.
    Linear,
    /// Least-squares slope of `log ζ_n` against `log(n+1)`.
    Sublinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    /// Second half of the usable prefix.
    LastHalf,
    /// Iterations `start..end`.
    Range { start: usize, end: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub mode: FitMode,
    /// Contraction factor (linear) or log-log slope (sublinear).
    pub value: f64,
    /// RMS deviation of the data from the fitted model.
    pub residual: f64,
    /// Iterations used, `start..end`.
    pub window: (usize, usize),
    /// The error reached [`ERROR_FLOOR`] and the trace was cut there.
    pub floor_hit: bool,
    pub convergent: bool,
}

pub fn fit_rate(trace: &IterationTrace, mode: FitMode, window: Window) -> Result<RateFit> {
    let errors = trace
        .energy_errors()
        .ok_or_else(|| invalid("trace has no energy errors; run with a reference minimizer"))?;
    fit_rate_values(&errors, mode, window)
}

/// Fit on raw errors, where `errors[n]` belongs to iteration `n`.
pub fn fit_rate_values(errors: &[f64], mode: FitMode, window: Window) -> Result<RateFit> {
    let usable = errors
        .iter()
        .position(|&z| !(z >= ERROR_FLOOR))
        .unwrap_or(errors.len());
    let floor_hit = usable < errors.len();
    let (start, end) = match window {
        Window::LastHalf => (usable / 2, usable),
        Window::Range { start, end } => (start, end.min(usable)),
    };
    let len = end.saturating_sub(start);
    if len < MIN_WINDOW {
        return Err(Error::WindowTooShort { len, min: MIN_WINDOW });
    }
    let z = &errors[start..end];
    let (value, residual, convergent) = match mode {
        FitMode::Linear => {
            let logs: Vec<f64> = z.windows(2).map(|w| libm::log(w[1] / w[0])).collect();
            let mean = logs.iter().sum::<f64>() / logs.len() as f64;
            let rho = libm::exp(mean);
            (rho, rms(logs.iter().map(|l| l - mean)), rho < 1.0 - 1e-12)
        }
        FitMode::Sublinear => {
            let xs: Vec<f64> = (start..end).map(|n| libm::log((n + 1) as f64)).collect();
            let ys: Vec<f64> = z.iter().map(|&v| libm::log(v)).collect();
            let (slope, icpt) = least_squares(&xs, &ys);
            let res = rms(xs.iter().zip(&ys).map(|(x, y)| y - (icpt + slope * x)));
            (slope, res, slope < -1e-12)
        }
    };
    Ok(RateFit {
        mode,
        value,
        residual,
        window: (start, end),
        floor_hit,
        convergent,
    })
}

fn rms(it: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for v in it {
        s += v * v;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        libm::sqrt(s / n as f64)
    }
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Everything reported about the convergence of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub problem: String,
    pub sharpness: f64,
    pub smoothness: f64,
    pub tau: f64,
    pub omega: f64,
    pub fit: RateFit,
    /// Theoretical log-log slope `−p(q−1)/(p−q)` when `p > q`.
    pub predicted_slope: Option<f64>,
    /// Theoretical contraction bound when `p = q`.
    pub predicted_rate: Option<f64>,
    pub kappa: f64,
    pub c0: f64,
    pub mu: f64,
    pub r0: f64,
}
