//! Sampled estimates of the constants that enter the convergence bounds.
//!
//! All estimates are empirical: `Ĉ0` and `R̂0` are lower bounds of suprema,
//! `μ̂` is an upper bound of an infimum.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::constants::{sharp_bound, sharp_threshold};
use crate::decomposition::{Decomposer, SpaceDecomposition, SpaceSplitting};
use crate::error::{check_len, invalid, Result};
use crate::linalg;
use crate::mesh::{FemFunction, Grid, Level, MeshHierarchy};
use crate::objectives::{Norm, Objective};
use crate::solvers::Reference;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleOptions {
    pub count: usize,
    /// Largest sampled distance `‖u − v‖`.
    pub radius: f64,
    pub seed: u64,
}

/// Unit directions, alternating between uniform noise and low-frequency sines.
struct Directions<'a> {
    rng: ChaCha8Rng,
    dim: usize,
    grid: Option<&'a Grid>,
    drawn: usize,
}

impl<'a> Directions<'a> {
    fn new(seed: u64, dim: usize, grid: Option<&'a Grid>) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            dim,
            grid,
            drawn: 0,
        }
    }

    fn next(&mut self) -> Vec<f64> {
        let i = self.drawn;
        self.drawn += 1;
        match self.grid {
            Some(grid) if i % 2 == 1 && grid.dof_count() == self.dim => {
                let kx = 1 + (i / 2) % 4;
                let ky = 1 + (i / 8) % 4;
                let pi = core::f64::consts::PI;
                let shift = self.rng.gen_range(-0.2..0.2);
                (0..self.dim)
                    .map(|d| {
                        let x = grid.dof_coords(d);
                        let sy = if grid.dim().as_usize() == 2 {
                            libm::sin(ky as f64 * pi * x[1])
                        } else {
                            1.0
                        };
                        libm::sin(kx as f64 * pi * x[0]) * sy + shift * libm::sin(pi * x[0])
                    })
                    .collect()
            }
            _ => (0..self.dim).map(|_| self.rng.gen_range(-1.0..1.0)).collect(),
        }
    }
}

fn sample_grid(objective: &Objective) -> Option<&Grid> {
    match objective.norm() {
        Norm::Sobolev { grid, .. } => Some(grid),
        _ => None,
    }
}

fn unit(norm: &Norm, d: Vec<f64>) -> Option<Vec<f64>> {
    let n = norm.eval(&d);
    (n > 0.0 && n.is_finite()).then(|| d.iter().map(|x| x / n).collect())
}

/// Where and how `Ĉ0` is sampled.
#[derive(Debug, Clone, Copy)]
pub struct C0Sampling<'a> {
    /// Base points `v`; the origin when empty.
    pub centers: &'a [Vec<f64>],
    /// Directions tried in addition to the random ones, at full radius from the first center.
    pub directions: &'a [Vec<f64>],
    pub options: SampleOptions,
}

/// `max (q Σ_k D_F(v + R_k^* w_k, v) / ‖u − v‖^q)^{1/q}` over samples, where
/// `w_k` come from the stable decomposition of `u − v`.
pub fn estimate_c0(
    objective: &Objective,
    mesh: &MeshHierarchy,
    dec: &SpaceDecomposition,
    decomposer: Decomposer,
    sampling: &C0Sampling<'_>,
) -> Result<f64> {
    let opts = sampling.options;
    if opts.count == 0 {
        return Err(invalid("C0 estimation needs at least one sample"));
    }
    if !(opts.radius > 0.0) {
        return Err(invalid("sampling radius must be positive"));
    }
    let n = objective.dim();
    check_len(n, dec.global_dim())?;
    for c in sampling.centers.iter().chain(sampling.directions) {
        check_len(n, c.len())?;
    }
    let q = objective.info().smoothness;
    let origin = vec![0.0; n];
    let center = |i: usize| sampling.centers.get(i % sampling.centers.len().max(1)).unwrap_or(&origin);
    let mut dirs = Directions::new(opts.seed, n, sample_grid(objective));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
    let mut best: f64 = 0.0;
    let mut ratio = |v: &[f64], dir: &[f64], t: f64| -> Result<()> {
        let diff: Vec<f64> = dir.iter().map(|d| t * d).collect();
        let dist = objective.norm().eval(&diff);
        if !(dist > 0.0) || !dist.is_finite() {
            return Ok(());
        }
        let split = decomposer.apply(dec, &FemFunction::new(mesh, Level::Fine, diff)?)?;
        let mut total = 0.0;
        for (space, piece) in dec.subspaces().iter().zip(split.pieces()) {
            let mut u = v.to_vec();
            space.prolong_add(1.0, piece, &mut u);
            total += objective.bregman(&u, v);
        }
        let r = libm::pow(q * total.max(0.0) / libm::pow(dist, q), 1.0 / q);
        if r.is_finite() {
            best = best.max(r);
        }
        Ok(())
    };
    for i in 0..opts.count {
        let Some(dir) = unit(objective.norm(), dirs.next()) else { continue };
        let t = opts.radius * rng.gen_range(0.05..=1.0);
        ratio(center(i), &dir, t)?;
    }
    for d in sampling.directions {
        if let Some(dir) = unit(objective.norm(), d.clone()) {
            ratio(center(0), &dir, opts.radius)?;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SublevelEstimate {
    /// `R̂0`: largest distance from `u*` seen inside `{E ≤ E(u0)}`.
    pub radius: f64,
    /// `μ̂`: smallest `p (E(u) − E(u*)) / ‖u − u*‖^p` seen inside the sublevel set.
    pub sharpness: f64,
}

/// Samples the sublevel set `{E ≤ E(u0)}` from the iterates and along random
/// rays from `u*`, whose exit points are found by bisection.
pub fn estimate_sublevel(
    objective: &Objective,
    reference: &Reference,
    iterates: &[Vec<f64>],
    options: &SampleOptions,
) -> Result<SublevelEstimate> {
    let first = iterates.first().ok_or_else(|| invalid("sublevel estimate needs at least the initial iterate"))?;
    let n = objective.dim();
    check_len(n, reference.point.len())?;
    let level = objective.energy(first);
    let p = objective.info().sharpness;
    let star = &reference.point;
    let mut radius: f64 = 0.0;
    let mut sharpness = f64::INFINITY;
    let mut visit = |u: &[f64], radius: &mut f64| {
        let dist = objective.norm().distance(u, star);
        *radius = radius.max(dist);
        let gap = objective.energy(u) - reference.energy;
        if dist > 1e-10 && gap >= super::rates::ERROR_FLOOR {
            let m = p * gap / libm::pow(dist, p);
            if m.is_finite() {
                sharpness = sharpness.min(m);
            }
        }
    };
    for u in iterates {
        check_len(n, u.len())?;
        visit(u, &mut radius);
    }
    let along = |dir: &[f64], t: f64| -> Vec<f64> { star.iter().zip(dir).map(|(s, d)| s + t * d).collect() };
    let inside = |dir: &[f64], t: f64| objective.energy(&along(dir, t)) <= level;
    let mut dirs = Directions::new(options.seed, n, sample_grid(objective));
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed ^ 0x1e7e1);
    let start = radius.max(options.radius).max(1e-8);
    for _ in 0..options.count {
        let Some(dir) = unit(objective.norm(), dirs.next()) else { continue };
        let (mut lo, mut hi) = (0.0, start);
        let mut grown = 0;
        while inside(&dir, hi) && grown < 80 {
            lo = hi;
            hi *= 2.0;
            grown += 1;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if inside(&dir, mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if lo > 0.0 {
            visit(&along(&dir, lo), &mut radius);
            let s = rng.gen_range(0.1..1.0);
            visit(&along(&dir, s * lo), &mut radius);
        }
    }
    if !sharpness.is_finite() {
        return Err(invalid("no sublevel sample had a positive energy gap"));
    }
    Ok(SublevelEstimate { radius, sharpness })
}

/// Outcome of checking the sharp sublinear bound along a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub threshold: f64,
    /// First iteration with error below the threshold; the bound is indexed from here.
    pub burn_in: Option<usize>,
    /// Largest `ζ_n / bound_n` over checked iterations.
    pub worst_ratio: f64,
    pub violations: Vec<usize>,
    /// Iterations before burn-in that missed the contraction `1 − τ(1 − 1/q)`.
    pub slow_large_steps: Vec<usize>,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `ζ_{n0+j} ≤ C (κ^p/μ^q)^{1/(p−q)} / (j+1)^β` for every `j ≥ 0`, where
/// `n0` is the burn-in index; the theorem's initial-error hypothesis holds from there.
pub fn check_sharp_bound(errors: &[f64], p: f64, q: f64, tau: f64, kappa: f64, mu: f64) -> Result<BoundCheck> {
    let threshold = sharp_threshold(p, q, tau, kappa, mu)?;
    let burn_in = errors.iter().position(|&z| z < threshold);
    let contraction = 1.0 - tau * (1.0 - 1.0 / q);
    let pre = burn_in.unwrap_or(errors.len());
    let slow_large_steps = (0..pre.min(errors.len().saturating_sub(1)))
        .filter(|&n| errors[n + 1] > contraction * errors[n] * (1.0 + 1e-12))
        .collect();
    let mut worst_ratio: f64 = 0.0;
    let mut violations = Vec::new();
    if let Some(n0) = burn_in {
        for (j, &z) in errors[n0..].iter().enumerate() {
            let b = sharp_bound(p, q, tau, kappa, mu, j)?;
            worst_ratio = worst_ratio.max(z / b);
            if z > b * (1.0 + 1e-12) {
                violations.push(n0 + j);
            }
        }
    }
    Ok(BoundCheck {
        threshold,
        burn_in,
        worst_ratio,
        violations,
        slow_large_steps,
    })
}

/// Distances of the iterates to the reference, in the objective's norm.
pub fn distances(objective: &Objective, reference: &Reference, iterates: &[Vec<f64>]) -> Vec<f64> {
    iterates
        .iter()
        .map(|u| objective.norm().eval(&linalg::sub(u, &reference.point)))
        .collect()
}
