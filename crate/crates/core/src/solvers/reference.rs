//! Reference minimizers for energy errors.

use alloc::vec::Vec;

use super::asm::asm_step;
use super::{AsmConfig, LocalSolverKind};
use crate::decomposition::BlockPartition;
use crate::error::{check_len, Error, Result};
use crate::objectives::Objective;

#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub point: Vec<f64>,
    pub energy: f64,
    /// Natural optimality residual at `point`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceOptions {
    pub local_tol: f64,
    pub max_inner: usize,
    /// Maximum number of global solves.
    pub passes: usize,
    pub certify_tol: f64,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self {
            local_tol: 1e-13,
            max_inner: 20_000,
            passes: 4,
            certify_tol: 1e-9,
        }
    }
}

/// Minimizes `E` with the whole space as a single subspace, then certifies the
/// result by the residual `‖u − prox_G(u − F′(u))‖_∞`.
pub fn compute_reference(objective: &Objective, start: &[f64], options: &ReferenceOptions) -> Result<Reference> {
    check_len(objective.dim(), start.len())?;
    let whole = BlockPartition::new(&[objective.dim()])?;
    let mut cfg = AsmConfig::new(1.0, 1.0, LocalSolverKind::Exact, 1).with_local_tol(options.local_tol);
    cfg.local_max_iters = options.max_inner;
    let mut u = start.to_vec();
    let mut residual = objective.optimality_residual(&u);
    for _ in 0..options.passes.max(1) {
        u = asm_step(objective, &whole, &cfg, &u)?;
        residual = objective.optimality_residual(&u);
        if residual <= 1e-3 * options.certify_tol {
            break;
        }
    }
    if !(residual <= options.certify_tol) {
        return Err(Error::ReferenceNotCertified {
            residual,
            tolerance: options.certify_tol,
        });
    }
    Ok(Reference {
        energy: objective.energy(&u),
        point: u,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh_hierarchy;
    use crate::objectives::{make_l1_obstacle, make_s_laplacian, Load};

    #[test]
    fn certified_references() {
        let mesh = build_mesh_hierarchy(1, 8, 4).unwrap();
        let one = |_: [f64; 2]| 1.0;
        let slap = make_s_laplacian(&mesh, 4.0, &Load::Function(&one)).unwrap();
        let r = compute_reference(&slap, &alloc::vec![0.0; slap.dim()], &ReferenceOptions::default()).unwrap();
        assert!(r.residual <= 1e-9);
        let f = |p: [f64; 2]| 20.0 * libm::sin(6.0 * p[0]);
        let l1 = make_l1_obstacle(&mesh, &Load::Function(&f), 1.0).unwrap();
        let r = compute_reference(&l1, &alloc::vec![0.0; l1.dim()], &ReferenceOptions::default()).unwrap();
        assert!(r.residual <= 1e-12);
        assert!(r.residual <= 1e-12);
        // |f| below the threshold: the minimizer vanishes identically
        let half = |_: [f64; 2]| 0.5;
        let l1 = make_l1_obstacle(&mesh, &Load::Function(&half), 1.0).unwrap();
        let r = compute_reference(&l1, &alloc::vec![0.3; l1.dim()], &ReferenceOptions::default()).unwrap();
        assert!(r.point.iter().all(|&x| x == 0.0));
    }
}
