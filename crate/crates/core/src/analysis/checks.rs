//! Consistency checks of objective derivatives.

use alloc::vec::Vec;

use crate::error::{check_len, Result};
use crate::linalg::{norm2, sub};
use crate::objectives::Objective;

/// Relative error `‖g_fd − F′(u)‖₂ / ‖F′(u)‖₂` of central differences with step `h`.
pub fn gradient_check(objective: &Objective, u: &[f64], h: f64) -> Result<f64> {
    check_len(objective.dim(), u.len())?;
    let g = objective.smooth_gradient(u);
    let mut x = u.to_vec();
    let fd: Vec<f64> = (0..u.len())
        .map(|i| {
            x[i] = u[i] + h;
            let up = objective.smooth_value(&x);
            x[i] = u[i] - h;
            let down = objective.smooth_value(&x);
            x[i] = u[i];
            (up - down) / (2.0 * h)
        })
        .collect();
    Ok(norm2(&sub(&fd, &g)) / norm2(&g).max(f64::MIN_POSITIVE))
}
