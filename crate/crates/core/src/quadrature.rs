//! Gauss rules on the reference interval and triangle, stored in barycentric form.

use alloc::vec::Vec;

/// A rule whose weights sum to one; multiply by the element measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    /// Barycentric coordinates of each point (unused trailing slots are 0).
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for i in 0..n {
        let mut t = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, t);
            dp = d;
            let dt = p / d;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, t);
        if d != 0.0 {
            dp = d;
        }
        x.push(t);
        w.push(2.0 / ((1.0 - t * t) * dp * dp));
    }
    (x, w)
}

/// P_n(t) and P_n'(t) by the three-term recurrence.
fn legendre(n: usize, t: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = t;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, d)
}

/// Rule on a segment exact for polynomials of degree `degree`.
pub fn segment(degree: usize) -> Rule {
    let n = (degree + 1).div_ceil(2).max(1);
    let (x, w) = gauss_legendre(n);
    let points = x
        .iter()
        .map(|&xi| {
            let t = 0.5 * (xi + 1.0);
            [1.0 - t, t, 0.0]
        })
        .collect();
    let weights = w.iter().map(|wi| 0.5 * wi).collect();
    Rule { points, weights }
}

/// Collapsed (Duffy) tensor rule on a triangle exact for degree `degree`.
pub fn triangle(degree: usize) -> Rule {
    let n = (degree + 2).div_ceil(2).max(1);
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (xa, wa) in x.iter().zip(&w) {
        let a = 0.5 * (xa + 1.0);
        for (xb, wb) in x.iter().zip(&w) {
            let b = 0.5 * (xb + 1.0);
            let px = a;
            let py = b * (1.0 - a);
            points.push([1.0 - px - py, px, py]);
            // reference triangle area is 1/2; normalize to unit total weight
            weights.push(2.0 * 0.25 * wa * wb * (1.0 - a));
        }
    }
    Rule { points, weights }
}
