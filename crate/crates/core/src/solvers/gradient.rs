//! The abstract gradient method `u⁺ ∈ argmin F(v) + ⟨F′(v), u − v⟩ + B(u, v)`.

use alloc::boxed::Box;
use alloc::vec::Vec;

use super::{Clock, IterationRecord, IterationTrace, Reference, StopRule};
use crate::error::{check_len, invalid, Error, Result};
use crate::objectives::Objective;

pub struct StepOutcome {
    pub next: Vec<f64>,
    /// Largest inner iteration count spent on this step.
    pub local_iters: usize,
}

/// A surrogate `B` whose model minimizer is computable.
pub trait Surrogate {
    fn step(&mut self, objective: &Objective, u: &[f64]) -> Result<StepOutcome>;
}

/// `B(u, v) = ‖u − v‖² / (2τ) + G(u)`: forward-backward splitting.
#[derive(Debug, Clone, Copy)]
pub struct ProximalSurrogate {
    pub step: f64,
}

impl Surrogate for ProximalSurrogate {
    fn step(&mut self, objective: &Objective, u: &[f64]) -> Result<StepOutcome> {
        let g = objective.smooth_gradient(u);
        let next = u
            .iter()
            .zip(&g)
            .enumerate()
            .map(|(x, (ui, gi))| objective.nonsmooth().node_prox(x, ui - self.step * gi, self.step))
            .collect();
        Ok(StepOutcome { next, local_iters: 0 })
    }
}

/// Runs `budget` surrogate steps from `u0`, recording energies and iterates.
pub fn gradient_method(
    objective: &Objective,
    surrogate: &mut dyn Surrogate,
    u0: &[f64],
    budget: usize,
    stop: StopRule,
    reference: Option<&Reference>,
    clock: &mut dyn Clock,
) -> Result<IterationTrace> {
    check_len(objective.dim(), u0.len())?;
    if !objective.is_feasible(u0) {
        let g = objective.nonsmooth().obstacle().unwrap_or(&[]);
        let node = u0.iter().zip(g).position(|(u, g)| u < g).unwrap_or(0);
        return Err(Error::Infeasible {
            node,
            violation: g.get(node).map_or(0.0, |g| g - u0[node]),
        });
    }
    if let (StopRule::EnergyError(_), None) = (stop, reference) {
        return Err(invalid("an energy-error stop rule needs a reference minimizer"));
    }
    let start = clock.now_ms();
    let record = |iter: usize, u: &[f64], local: usize, now: f64| {
        let energy = objective.energy(u);
        IterationRecord {
            iter,
            energy,
            energy_error: reference.map(|r| energy - r.energy),
            local_iters_max: local,
            wall_ms: now - start,
        }
    };
    let mut trace = IterationTrace {
        records: alloc::vec![record(0, u0, 0, start)],
        iterates: alloc::vec![u0.to_vec()],
    };
    let done = |r: &IterationRecord| match stop {
        StopRule::Budget => false,
        StopRule::EnergyError(tol) => r.energy_error.is_some_and(|z| z <= tol),
    };
    if done(&trace.records[0]) {
        return Ok(trace);
    }
    for n in 0..budget {
        let u = trace.iterates.last().unwrap();
        let out = surrogate.step(objective, u).map_err(|e| Error::IterationFailed {
            iteration: n,
            source: Box::new(e),
        })?;
        let rec = record(n + 1, &out.next, out.local_iters, clock.now_ms());
        trace.records.push(rec);
        trace.iterates.push(out.next);
        if done(&rec) {
            break;
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::objectives::{make_block_separable, soft_threshold};
    use crate::solvers::NoClock;

    #[test]
    fn halving_on_scalar_quadratic() {
        let p = make_block_separable(&[1], &DenseMatrix::identity(1), &[0.0], &[0.0]).unwrap();
        let mut s = ProximalSurrogate { step: 0.5 };
        let t = gradient_method(&p.objective, &mut s, &[1.0], 10, StopRule::Budget, None, &mut NoClock).unwrap();
        for (n, u) in t.iterates.iter().enumerate() {
            assert_eq!(u[0], libm::pow(2.0, -(n as f64)));
        }
    }

    #[test]
    fn fixed_point_at_minimizer() {
        let p = make_block_separable(&[1], &DenseMatrix::identity(1), &[0.0], &[0.0]).unwrap();
        let r = Reference {
            point: alloc::vec![0.0],
            energy: 0.0,
            residual: 0.0,
        };
        let mut s = ProximalSurrogate { step: 0.5 };
        let t = gradient_method(&p.objective, &mut s, &[0.0], 5, StopRule::Budget, Some(&r), &mut NoClock).unwrap();
        assert!(t.records.iter().all(|rec| rec.energy_error == Some(0.0)));
        assert_eq!(t.records.len(), 6);
    }

    #[test]
    fn forward_backward_matches_soft_threshold() {
        let q = DenseMatrix::from_row_major(2, 2, alloc::vec![2.0, 0.5, 0.5, 1.0]).unwrap();
        let c = [1.0, -0.4];
        let lam = 0.3;
        let p = make_block_separable(&[2], &q, &c, &[lam]).unwrap();
        let step = 1.0 / p.lipschitz;
        let mut s = ProximalSurrogate { step };
        let t = gradient_method(&p.objective, &mut s, &[0.5, 0.5], 30, StopRule::Budget, None, &mut NoClock).unwrap();
        let mut u = [0.5, 0.5];
        for it in &t.iterates[1..] {
            let g = [q[(0, 0)] * u[0] + q[(0, 1)] * u[1] - c[0], q[(1, 0)] * u[0] + q[(1, 1)] * u[1] - c[1]];
            u = [soft_threshold(u[0] - step * g[0], step * lam), soft_threshold(u[1] - step * g[1], step * lam)];
            assert!((it[0] - u[0]).abs() <= 1e-10 && (it[1] - u[1]).abs() <= 1e-10);
        }
        assert!(t.is_monotone());
    }
}
