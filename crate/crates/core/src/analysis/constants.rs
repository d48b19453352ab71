//! Closed-form convergence constants and the two scalar lemmas behind them.

use alloc::format;

use crate::error::{invalid, Result};

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {x}")))
    }
}

fn exponent_above_one(name: &str, x: f64) -> Result<()> {
    if x > 1.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must exceed 1, got {x}")))
    }
}

fn unit_step(theta: f64) -> Result<()> {
    if theta > 0.0 && theta <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("step weight must lie in (0, 1], got {theta}")))
    }
}

/// `κ = ω C0^q / τ^{q−1}`.
pub fn schwarz_condition_number(omega: f64, c0: f64, q: f64, tau: f64) -> Result<f64> {
    positive("omega", omega)?;
    positive("C0", c0)?;
    exponent_above_one("q", q)?;
    unit_step(tau)?;
    Ok(omega * libm::pow(c0, q) / libm::pow(tau, q - 1.0))
}

/// `(max{θ, q(2^{q−1} − 1)/(q − 1)})^{q−1}`, the constant of the `O(n^{1−q})` bound.
pub fn sublinear_rate_constant(q: f64, theta: f64) -> Result<f64> {
    exponent_above_one("q", q)?;
    unit_step(theta)?;
    let inner = q * (libm::pow(2.0, q - 1.0) - 1.0) / (q - 1.0);
    Ok(libm::pow(theta.max(inner), q - 1.0))
}

/// Decay exponent `p(q−1)/(p−q)` of the sharp sublinear bound.
pub fn sharp_exponent(p: f64, q: f64) -> Result<f64> {
    exponent_above_one("q", q)?;
    if !(p > q) || !p.is_finite() {
        return Err(invalid(format!("sharpness exponent p = {p} must exceed q = {q}")));
    }
    Ok(p * (q - 1.0) / (p - q))
}

/// `p^{q/(p−q)} (max{θ, q(2^β − 1)/(q − 1)})^β` with `β = p(q−1)/(p−q)`.
pub fn sharp_rate_constant(p: f64, q: f64, theta: f64) -> Result<f64> {
    let beta = sharp_exponent(p, q)?;
    unit_step(theta)?;
    let inner = q * (libm::pow(2.0, beta) - 1.0) / (q - 1.0);
    Ok(libm::pow(p, q / (p - q)) * libm::pow(theta.max(inner), beta))
}

/// `(κ^p / μ^q)^{1/(p−q)}`, evaluated in logarithms.
pub fn sharp_scale(kappa: f64, mu: f64, p: f64, q: f64) -> Result<f64> {
    positive("kappa", kappa)?;
    positive("mu", mu)?;
    sharp_exponent(p, q)?;
    Ok(libm::exp((p * libm::log(kappa) - q * libm::log(mu)) / (p - q)))
}

/// Energy error above which one step contracts by `1 − τ(1 − 1/q)` when `p > q`.
pub fn sharp_threshold(p: f64, q: f64, tau: f64, kappa: f64, mu: f64) -> Result<f64> {
    let beta = sharp_exponent(p, q)?;
    unit_step(tau)?;
    Ok(libm::pow(p, q / (p - q)) * libm::pow(tau, beta) * sharp_scale(kappa, mu, p, q)?)
}

/// `C (κ^p/μ^q)^{1/(p−q)} / (n+1)^β` with `C = sharp_rate_constant(p, q, τ)`.
pub fn sharp_bound(p: f64, q: f64, tau: f64, kappa: f64, mu: f64, n: usize) -> Result<f64> {
    let beta = sharp_exponent(p, q)?;
    let c = sharp_rate_constant(p, q, tau)?;
    Ok(c * sharp_scale(kappa, mu, p, q)? / libm::pow((n + 1) as f64, beta))
}

/// Guaranteed contraction `1 − (1 − 1/q) min{τ, (μ/(qκ))^{1/(q−1)}}` when `p = q`.
pub fn linear_rate_bound(q: f64, tau: f64, kappa: f64, mu: f64) -> Result<f64> {
    exponent_above_one("q", q)?;
    unit_step(tau)?;
    positive("kappa", kappa)?;
    positive("mu", mu)?;
    let t = tau.min(libm::pow(mu / (q * kappa), 1.0 / (q - 1.0)));
    Ok(1.0 - (1.0 - 1.0 / q) * t)
}

/// Bound `max{a0, ((2^β − 1)/C)^β} / (n+1)^β`, `β = 1/(γ−1)`, for positive
/// sequences with `a_n − a_{n+1} ≥ C a_n^γ`.
///
/// Valid for `1 < γ ≤ 2`. Beyond that `2^β − 1 < β` and the sequence
/// `a_{n+1} = a_n − C a_n^γ`, which decays like `(β/(C n))^β`, eventually
/// crosses the bound.
pub fn recurrence_bound(a0: f64, c: f64, gamma: f64, n: usize) -> Result<f64> {
    positive("a0", a0)?;
    positive("C", c)?;
    exponent_above_one("gamma", gamma)?;
    let beta = 1.0 / (gamma - 1.0);
    let floor = libm::pow((libm::pow(2.0, beta) - 1.0) / c, beta);
    Ok(a0.max(floor) / libm::pow((n + 1) as f64, beta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerGapMin {
    pub argmin: f64,
    pub value: f64,
}

/// Minimum of `g(t) = (a/q) t^q − b t` over `[0, θ]`.
pub fn power_gap_min(a: f64, b: f64, q: f64, theta: f64) -> Result<PowerGapMin> {
    positive("a", a)?;
    positive("b", b)?;
    exponent_above_one("q", q)?;
    unit_step(theta)?;
    if a * libm::pow(theta, q - 1.0) <= b {
        Ok(PowerGapMin {
            argmin: theta,
            value: a / q * libm::pow(theta, q) - b * theta,
        })
    } else {
        let t = libm::pow(b / a, 1.0 / (q - 1.0));
        Ok(PowerGapMin {
            argmin: t,
            value: -b * t * (1.0 - 1.0 / q),
        })
    }
}
