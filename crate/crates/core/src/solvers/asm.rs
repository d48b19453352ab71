//! Additive Schwarz iteration `u⁺ = u + τ Σ_k R_k^* w_k`.

use alloc::vec;
use alloc::vec::Vec;

use super::gradient::{gradient_method, StepOutcome, Surrogate};
use super::local::LocalEngine;
use super::{AsmConfig, Clock, IterationTrace, LocalSolverKind, Reference};
use crate::decomposition::SpaceSplitting;
use crate::error::{check_len, invalid, Error, Result};
use crate::objectives::Objective;

/// Largest obstacle violation attributed to rounding in the additive update.
const ROUNDING_SLACK: f64 = 1e-12;

/// Step-size and local-stability bounds `(τ0, ω0)` for a local solver kind.
pub fn step_bounds(objective: &Objective, splitting: &dyn SpaceSplitting, kind: LocalSolverKind) -> Result<(f64, f64)> {
    match kind {
        LocalSolverKind::Exact => Ok((splitting.tau0(), 1.0)),
        LocalSolverKind::BcdSurrogate => {
            let l = objective
                .info()
                .lipschitz
                .ok_or_else(|| invalid("the block surrogate needs a known Lipschitz constant"))?;
            Ok((splitting.tau0(), l))
        }
        LocalSolverKind::ConstraintDecomposition => Ok((1.0 / splitting.subspaces().len() as f64, 1.0)),
    }
}

/// The additive Schwarz surrogate `M_{τ,ω}`, evaluated through local solves.
pub struct AsmSurrogate<'a> {
    engine: LocalEngine<'a>,
    splitting: &'a dyn SpaceSplitting,
    tau: f64,
    kind: LocalSolverKind,
}

impl<'a> AsmSurrogate<'a> {
    pub fn new(objective: &'a Objective, splitting: &'a dyn SpaceSplitting, config: &AsmConfig) -> Result<Self> {
        let (tau0, omega0) = step_bounds(objective, splitting, config.local)?;
        config.validate(tau0, omega0)?;
        Ok(Self {
            engine: LocalEngine::new(objective, splitting, config)?,
            splitting,
            tau: config.tau,
            kind: config.local,
        })
    }
}

impl Surrogate for AsmSurrogate<'_> {
    fn step(&mut self, objective: &Objective, u: &[f64]) -> Result<StepOutcome> {
        let grad = objective.smooth_gradient(u);
        let spaces = self.splitting.subspaces();
        let mut local_iters = 0;
        let next = match self.kind {
            LocalSolverKind::ConstraintDecomposition => {
                let obstacle = objective.nonsmooth().obstacle().unwrap();
                // shifted coordinates z = u − g̲ keep the update a nonnegative combination
                let mut z: Vec<f64> = u.iter().zip(obstacle).map(|(u, g)| (1.0 - self.tau) * (u - g)).collect();
                for (k, space) in spaces.iter().enumerate() {
                    let sol = self.engine.solve(k, u, &grad)?;
                    local_iters = local_iters.max(sol.iterations);
                    space.prolong_add(self.tau, sol.shifted.as_ref().unwrap(), &mut z);
                }
                z.iter().zip(obstacle).map(|(z, g)| g + z).collect()
            }
            _ => {
                let mut correction = vec![0.0; u.len()];
                for (k, space) in spaces.iter().enumerate() {
                    let sol = self.engine.solve(k, u, &grad)?;
                    local_iters = local_iters.max(sol.iterations);
                    space.prolong_add(1.0, &sol.w, &mut correction);
                }
                let mut next: Vec<f64> = u.iter().zip(&correction).map(|(u, c)| u + self.tau * c).collect();
                if let Some(obstacle) = objective.nonsmooth().obstacle() {
                    for (i, (x, g)) in next.iter_mut().zip(obstacle).enumerate() {
                        if *x < *g {
                            let violation = g - *x;
                            if violation > ROUNDING_SLACK * (1.0 + g.abs()) {
                                return Err(Error::Infeasible { node: i, violation });
                            }
                            *x = *g;
                        }
                    }
                }
                next
            }
        };
        if let Some(obstacle) = objective.nonsmooth().obstacle() {
            if let Some(node) = next.iter().zip(obstacle).position(|(x, g)| x < g) {
                return Err(Error::Infeasible {
                    node,
                    violation: obstacle[node] - next[node],
                });
            }
        }
        Ok(StepOutcome { next, local_iters })
    }
}

/// One additive Schwarz step from `u`.
pub fn asm_step(objective: &Objective, splitting: &dyn SpaceSplitting, config: &AsmConfig, u: &[f64]) -> Result<Vec<f64>> {
    check_len(objective.dim(), u.len())?;
    let mut s = AsmSurrogate::new(objective, splitting, config)?;
    Ok(s.step(objective, u)?.next)
}

/// Runs the additive Schwarz method for `config.budget` steps (or until the stop rule fires).
pub fn asm_solve(
    objective: &Objective,
    splitting: &dyn SpaceSplitting,
    config: &AsmConfig,
    u0: &[f64],
    reference: Option<&Reference>,
    clock: &mut dyn Clock,
) -> Result<IterationTrace> {
    let mut s = AsmSurrogate::new(objective, splitting, config)?;
    gradient_method(objective, &mut s, u0, config.budget, config.stop, reference, clock)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::build_decomposition;
    use crate::linalg::{self, max_abs_diff, Cholesky};
    use crate::mesh::build_mesh_hierarchy;
    use crate::objectives::{make_linear_elliptic, Load};
    use crate::solvers::NoClock;

    #[test]
    fn single_subdomain_reaches_minimizer_in_one_step() {
        let mesh = build_mesh_hierarchy(2, 2, 3).unwrap();
        let one = |_: [f64; 2]| 1.0;
        let obj = make_linear_elliptic(&mesh, &Load::Function(&one)).unwrap();
        let dec = build_decomposition(&mesh, &[1, 1], 1, false).unwrap();
        let u1 = asm_step(&obj, &dec, &AsmConfig::exact(1.0, 1), &vec![0.0; obj.dim()]).unwrap();
        let star = Cholesky::new(&obj.matrix().unwrap().to_dense()).unwrap().solve(obj.load());
        assert!(max_abs_diff(&u1, &star) < 1e-12);
        // and the minimizer is a fixed point
        let u2 = asm_step(&obj, &dec, &AsmConfig::exact(1.0, 1), &star).unwrap();
        assert!(max_abs_diff(&u2, &star) < 1e-12);
    }

    #[test]
    fn zero_budget_keeps_initial_energy_only() {
        let mesh = build_mesh_hierarchy(1, 4, 2).unwrap();
        let one = |_: [f64; 2]| 1.0;
        let obj = make_linear_elliptic(&mesh, &Load::Function(&one)).unwrap();
        let dec = build_decomposition(&mesh, &[2], 1, false).unwrap();
        let t = asm_solve(&obj, &dec, &AsmConfig::exact(0.5, 0), &vec![0.0; 7], None, &mut NoClock).unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.records[0].energy, 0.0);
    }

    #[test]
    fn rejects_step_above_coloring_bound() {
        let mesh = build_mesh_hierarchy(1, 4, 4).unwrap();
        let one = |_: [f64; 2]| 1.0;
        let obj = make_linear_elliptic(&mesh, &Load::Function(&one)).unwrap();
        let dec = build_decomposition(&mesh, &[4], 1, false).unwrap();
        let err = asm_step(&obj, &dec, &AsmConfig::exact(0.75, 1), &[0.0; 15]).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
        let mut cfg = AsmConfig::exact(0.75, 1);
        cfg.allow_large_tau = true;
        assert!(asm_step(&obj, &dec, &cfg, &[0.0; 15]).is_ok());
    }

    #[test]
    fn linear_step_is_preconditioned_richardson() {
        let mesh = build_mesh_hierarchy(1, 8, 4).unwrap();
        let f = |p: [f64; 2]| libm::sin(5.0 * p[0]) + 1.0;
        let obj = make_linear_elliptic(&mesh, &Load::Function(&f)).unwrap();
        let dec = build_decomposition(&mesh, &[4], 1, true).unwrap();
        let tau = crate::decomposition::tau0(&dec);
        let omega = 1.5;
        let mut cfg = AsmConfig::exact(tau, 1);
        cfg.omega = omega;
        let a = obj.matrix().unwrap();
        let u: Vec<f64> = (0..obj.dim()).map(|i| libm::cos(i as f64)).collect();
        let r = linalg::sub(&a.mul_vec(&u), obj.load());
        // M⁻¹ r = Σ R_k^* (R_k A R_k^*)⁻¹ R_k r
        let mut z = vec![0.0; obj.dim()];
        for s in dec.subspaces() {
            let ak = match s.prolongation() {
                crate::decomposition::Prolongation::Indices(idx) => a.principal_submatrix(idx),
                crate::decomposition::Prolongation::Matrix(p) => a.congruence(p),
            };
            let wk = Cholesky::new(&ak).unwrap().solve(&s.restrict(&r));
            s.prolong_add(1.0, &wk, &mut z);
        }
        let expect: Vec<f64> = u.iter().zip(&z).map(|(u, z)| u - tau / omega * z).collect();
        assert!(max_abs_diff(&asm_step(&obj, &dec, &cfg, &u).unwrap(), &expect) < 1e-12);
    }
}
