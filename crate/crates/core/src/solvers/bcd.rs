//! Parallel block coordinate descent with damping `τ ≤ 1/N`.

use alloc::vec::Vec;

use super::gradient::{gradient_method, StepOutcome, Surrogate};
use super::{AsmConfig, Clock, IterationTrace, Reference};
use crate::decomposition::SpaceSplitting;
use crate::error::Result;
use crate::objectives::{BlockProblem, Objective};

/// Blockwise proximal-gradient step with step `1/ω`, averaged with weight `τ`.
struct BlockStep<'a> {
    problem: &'a BlockProblem,
    tau: f64,
    omega: f64,
}

impl Surrogate for BlockStep<'_> {
    fn step(&mut self, objective: &Objective, u: &[f64]) -> Result<StepOutcome> {
        let g = objective.smooth_gradient(u);
        let mut next = Vec::with_capacity(u.len());
        for k in 0..self.problem.partition.sizes().len() {
            for i in self.problem.partition.block_range(k) {
                let v = objective.nonsmooth().node_prox(i, u[i] - g[i] / self.omega, 1.0 / self.omega);
                next.push((1.0 - self.tau) * u[i] + self.tau * v);
            }
        }
        Ok(StepOutcome { next, local_iters: 1 })
    }
}

/// Runs the block method; `config.omega` plays the role of `L`.
pub fn bcd_solve(
    problem: &BlockProblem,
    config: &AsmConfig,
    u0: &[f64],
    reference: Option<&Reference>,
    clock: &mut dyn Clock,
) -> Result<IterationTrace> {
    config.validate(problem.partition.tau0(), problem.lipschitz)?;
    let mut step = BlockStep {
        problem,
        tau: config.tau,
        omega: config.omega,
    };
    gradient_method(&problem.objective, &mut step, u0, config.budget, config.stop, reference, clock)
}
