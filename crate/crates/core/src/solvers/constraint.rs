//! Constraint decomposition for the one-obstacle problem.

use super::asm::asm_solve;
use super::{AsmConfig, Clock, IterationTrace, LocalSolverKind, Reference};
use crate::decomposition::SpaceDecomposition;
use crate::error::{invalid, Error, Result};
use crate::objectives::Objective;

/// Each subdomain keeps the share `θ_k (u − g̲)` of the slack nonnegative; the
/// damped update is a nonnegative combination of those shares, so every
/// iterate stays nodally feasible. Step sizes are bounded by `1/N`.
pub fn constraint_decomposition_solve(
    objective: &Objective,
    dec: &SpaceDecomposition,
    config: &AsmConfig,
    u0: &[f64],
    reference: Option<&Reference>,
    clock: &mut dyn Clock,
) -> Result<IterationTrace> {
    let obstacle = objective
        .nonsmooth()
        .obstacle()
        .ok_or_else(|| invalid("constraint decomposition needs a one-obstacle problem"))?;
    if dec.is_two_level() {
        return Err(Error::Unsupported("constraint decomposition is one-level only".into()));
    }
    if let Some(node) = u0.iter().zip(obstacle).position(|(u, g)| u < g) {
        return Err(Error::Infeasible {
            node,
            violation: obstacle[node] - u0[node],
        });
    }
    let mut cfg = config.clone();
    cfg.local = LocalSolverKind::ConstraintDecomposition;
    asm_solve(objective, dec, &cfg, u0, reference, clock)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::build_decomposition;
    use crate::linalg::max_abs_diff;
    use crate::mesh::build_mesh_hierarchy;
    use crate::objectives::{make_linear_elliptic, make_obstacle_constrained, Load, ObstacleData};
    use crate::solvers::NoClock;

    fn bump(p: [f64; 2]) -> f64 {
        0.2 * (1.0 - 16.0 * (p[0] - 0.5) * (p[0] - 0.5))
    }

    #[test]
    fn iterates_stay_feasible() {
        let mesh = build_mesh_hierarchy(1, 8, 4).unwrap();
        let obs = ObstacleData::from_function(&mesh, bump).unwrap();
        let obj = make_obstacle_constrained(&mesh, &Load::Vector(alloc::vec![0.0; 31]), &obs).unwrap();
        let dec = build_decomposition(&mesh, &[4], 2, false).unwrap();
        let cfg = AsmConfig::new(0.25, 1.0, LocalSolverKind::ConstraintDecomposition, 40);
        let t = constraint_decomposition_solve(&obj, &dec, &cfg, &obs.feasible_start(), None, &mut NoClock).unwrap();
        for u in &t.iterates {
            assert!(u.iter().zip(obs.values()).all(|(u, g)| u >= g));
        }
        assert!(t.is_monotone());
    }

    #[test]
    fn rejects_infeasible_start() {
        let mesh = build_mesh_hierarchy(1, 4, 2).unwrap();
        let obs = ObstacleData::from_function(&mesh, bump).unwrap();
        let obj = make_obstacle_constrained(&mesh, &Load::Vector(alloc::vec![0.0; 7]), &obs).unwrap();
        let dec = build_decomposition(&mesh, &[2], 1, false).unwrap();
        let cfg = AsmConfig::new(0.5, 1.0, LocalSolverKind::ConstraintDecomposition, 1);
        let r = constraint_decomposition_solve(&obj, &dec, &cfg, &[0.0; 7], None, &mut NoClock);
        assert!(matches!(r, Err(Error::Infeasible { .. })));
    }

    #[test]
    fn inactive_constraint_matches_unconstrained_asm() {
        let mesh = build_mesh_hierarchy(1, 8, 2).unwrap();
        let f = |p: [f64; 2]| 1.0 + p[0];
        let n = mesh.fine().dof_count();
        let low = ObstacleData::from_function(&mesh, |_| -1e3).unwrap();
        let obj = make_obstacle_constrained(&mesh, &Load::Function(&f), &low).unwrap();
        let lin = make_linear_elliptic(&mesh, &Load::Function(&f)).unwrap();
        let dec = build_decomposition(&mesh, &[4], 1, false).unwrap();
        let cfg = AsmConfig::new(0.25, 1.0, LocalSolverKind::ConstraintDecomposition, 30);
        let u0 = alloc::vec![0.0; n];
        let cd = constraint_decomposition_solve(&obj, &dec, &cfg, &u0, None, &mut NoClock).unwrap();
        let asm = asm_solve(&lin, &dec, &AsmConfig::exact(0.25, 30), &u0, None, &mut NoClock).unwrap();
        for (a, b) in cd.iterates.iter().zip(&asm.iterates) {
            assert!(max_abs_diff(a, b) <= 1e-8);
        }
    }
}
