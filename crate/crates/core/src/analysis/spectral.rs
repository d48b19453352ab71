//! Spectrum of the additive Schwarz preconditioned operator for quadratic energies.

use alloc::vec::Vec;

use super::estimates::{estimate_c0, C0Sampling, SampleOptions};
use crate::decomposition::{Decomposer, Prolongation, SpaceDecomposition, SpaceSplitting};
use crate::error::{invalid, Result};
use crate::linalg::{symmetric_eigen, Cholesky, DenseMatrix};
use crate::mesh::MeshHierarchy;
use crate::objectives::{Norm, Objective};

/// Eigenpairs of `M⁻¹A`, `M⁻¹ = Σ_k R_k^* (ω R_k A R_k^*)⁻¹ R_k`, which is
/// self-adjoint in the `A` inner product.
#[derive(Debug, Clone)]
pub struct PreconditionedSpectrum {
    /// Ascending.
    pub values: Vec<f64>,
    /// `A`-orthonormal eigenvectors, one per column.
    pub vectors: DenseMatrix,
}

impl PreconditionedSpectrum {
    pub fn lambda_min(&self) -> f64 {
        self.values[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        (0..self.vectors.rows()).map(|r| self.vectors[(r, k)]).collect()
    }
}

/// Dense computation through `Lᵀ M⁻¹ L` with `A = L Lᵀ`.
pub fn preconditioned_spectrum(objective: &Objective, splitting: &dyn SpaceSplitting, omega: f64) -> Result<PreconditionedSpectrum> {
    let a = objective
        .matrix()
        .filter(|_| objective.nonsmooth().is_zero())
        .ok_or_else(|| invalid("spectral check needs a quadratic energy without a nonsmooth part"))?;
    let n = a.rows();
    let local: Vec<Cholesky> = splitting
        .subspaces()
        .iter()
        .map(|s| {
            let mut m = match s.prolongation() {
                Prolongation::Indices(idx) => a.principal_submatrix(idx),
                Prolongation::Matrix(p) => a.congruence(p),
            };
            m.scale(omega);
            Cholesky::new(&m)
        })
        .collect::<Result<_>>()?;
    let precondition = |x: &[f64]| {
        let mut y = alloc::vec![0.0; n];
        for (s, c) in splitting.subspaces().iter().zip(&local) {
            s.prolong_add(1.0, &c.solve(&s.restrict(x)), &mut y);
        }
        y
    };
    let global = Cholesky::new(&a.to_dense())?;
    let l = global.factor();
    let mut b = DenseMatrix::zeros(n, n);
    let lt = l.transpose();
    for j in 0..n {
        let col: Vec<f64> = (0..n).map(|i| l[(i, j)]).collect();
        let y = lt.mul_vec(&precondition(&col));
        for i in 0..n {
            b[(i, j)] = y[i];
        }
    }
    let sym = {
        let mut s = b.transpose();
        s.add_scaled(1.0, &b);
        s.scale(0.5);
        s
    };
    let (values, y) = symmetric_eigen(&sym, 1e-13, 100)?;
    // x = L^{-T} y = A⁻¹ L y
    let mut vectors = DenseMatrix::zeros(n, n);
    for k in 0..n {
        let yk: Vec<f64> = (0..n).map(|r| y[(r, k)]).collect();
        let xk = global.solve(&l.mul_vec(&yk));
        for r in 0..n {
            vectors[(r, k)] = xk[r];
        }
    }
    Ok(PreconditionedSpectrum { values, vectors })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub condition: f64,
    /// `Ĉ0` in the energy norm.
    pub c0: f64,
    pub tau0: f64,
    pub omega0: f64,
    /// `ω0 Ĉ0² / τ0`.
    pub bound: f64,
}

impl SpectralReport {
    pub fn holds(&self) -> bool {
        self.condition <= self.bound * (1.0 + 1e-10)
    }
}

/// Condition number of `M⁻¹A` next to `ω0 Ĉ0²/τ0`. `Ĉ0` is sampled in the
/// energy norm, with the eigenvector of `λ_min` among the sampled directions.
pub fn linear_spectral_check(
    objective: &Objective,
    mesh: &MeshHierarchy,
    dec: &SpaceDecomposition,
    decomposer: Decomposer,
    options: &SampleOptions,
) -> Result<SpectralReport> {
    let omega0 = 1.0;
    let spec = preconditioned_spectrum(objective, dec, omega0)?;
    let energy = objective
        .clone()
        .with_norm(Norm::Energy(objective.matrix().unwrap().clone()));
    let worst = [spec.vector(0)];
    let sampling = C0Sampling {
        centers: &[],
        directions: &worst,
        options: *options,
    };
    let c0 = estimate_c0(&energy, mesh, dec, decomposer, &sampling)?;
    let tau0 = dec.tau0();
    let (lo, hi) = (spec.lambda_min(), spec.lambda_max());
    Ok(SpectralReport {
        lambda_min: lo,
        lambda_max: hi,
        condition: hi / lo,
        c0,
        tau0,
        omega0,
        bound: omega0 * c0 * c0 / tau0,
    })
}
