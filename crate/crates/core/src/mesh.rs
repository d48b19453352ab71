//! Structured P1 meshes on (0,1) and (0,1)² with homogeneous Dirichlet boundary.
//!
//! Squares are split along the (i,j)–(i+1,j+1) diagonal. Full node index is
//! `i + j (n+1)`; free (interior) nodes are numbered row-major among themselves.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, invalid, Error, Result};
use crate::linalg::CsrMatrix;
use crate::quadrature::{self, Rule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    One,
    Two,
}

impl Dimension {
    pub fn new(d: usize) -> Result<Self> {
        match d {
            1 => Ok(Self::One),
            2 => Ok(Self::Two),
            _ => Err(invalid(alloc::format!("dimension must be 1 or 2, got {d}"))),
        }
    }

    pub fn as_usize(self) -> usize {
        match self {
            Self::One => 1,
            Self::Two => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    Coarse,
    Fine,
}

impl Level {
    pub fn name(self) -> &'static str {
        match self {
            Self::Coarse => "coarse",
            Self::Fine => "fine",
        }
    }
}

/// A simplex of the mesh with its constant basis-function gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    /// Number of vertices: 2 in 1D, 3 in 2D.
    pub vertices: usize,
    pub nodes: [usize; 3],
    /// Interior dof of each vertex, `None` on the boundary.
    pub dofs: [Option<usize>; 3],
    pub grads: [[f64; 2]; 3],
    pub measure: f64,
}

impl Element {
    /// Gradient of the P1 function with the given vertex values.
    pub fn gradient(&self, values: &[f64; 3]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for v in 0..self.vertices {
            g[0] += self.grads[v][0] * values[v];
            g[1] += self.grads[v][1] * values[v];
        }
        g
    }

    /// Vertex values of an interior-dof vector (boundary vertices read as 0).
    pub fn gather(&self, coeffs: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for v in 0..self.vertices {
            if let Some(d) = self.dofs[v] {
                out[v] = coeffs[d];
            }
        }
        out
    }
}

/// One uniform structured level with `cells` intervals per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: Dimension,
    cells: usize,
    elements: Vec<Element>,
    full_to_dof: Vec<Option<usize>>,
    dof_to_full: Vec<usize>,
}

impl Grid {
    pub fn new(dim: Dimension, cells: usize) -> Result<Self> {
        if cells < 2 {
            return Err(invalid("a grid needs at least two cells per axis"));
        }
        let n = cells;
        let per_axis = n + 1;
        let total = match dim {
            Dimension::One => per_axis,
            Dimension::Two => per_axis * per_axis,
        };
        let mut full_to_dof = vec![None; total];
        let mut dof_to_full = Vec::new();
        for (full, slot) in full_to_dof.iter_mut().enumerate() {
            let (i, j) = (full % per_axis, full / per_axis);
            let inside = match dim {
                Dimension::One => i > 0 && i < n,
                Dimension::Two => i > 0 && i < n && j > 0 && j < n,
            };
            if inside {
                *slot = Some(dof_to_full.len());
                dof_to_full.push(full);
            }
        }
        let h = 1.0 / n as f64;
        let mut elements = Vec::new();
        match dim {
            Dimension::One => {
                for i in 0..n {
                    let nodes = [i, i + 1, 0];
                    elements.push(Element {
                        vertices: 2,
                        nodes,
                        dofs: [full_to_dof[i], full_to_dof[i + 1], None],
                        grads: [[-1.0 / h, 0.0], [1.0 / h, 0.0], [0.0; 2]],
                        measure: h,
                    });
                }
            }
            Dimension::Two => {
                let idx = |i: usize, j: usize| i + j * per_axis;
                for j in 0..n {
                    for i in 0..n {
                        let lower = [idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)];
                        let upper = [idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)];
                        elements.push(Element {
                            vertices: 3,
                            nodes: lower,
                            dofs: lower.map(|g| full_to_dof[g]),
                            grads: [[-1.0 / h, 0.0], [1.0 / h, -1.0 / h], [0.0, 1.0 / h]],
                            measure: 0.5 * h * h,
                        });
                        elements.push(Element {
                            vertices: 3,
                            nodes: upper,
                            dofs: upper.map(|g| full_to_dof[g]),
                            grads: [[0.0, -1.0 / h], [1.0 / h, 0.0], [-1.0 / h, 1.0 / h]],
                            measure: 0.5 * h * h,
                        });
                    }
                }
            }
        }
        Ok(Self {
            dim,
            cells,
            elements,
            full_to_dof,
            dof_to_full,
        })
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn h(&self) -> f64 {
        1.0 / self.cells as f64
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.cells + 1
    }

    pub fn node_count(&self) -> usize {
        self.full_to_dof.len()
    }

    pub fn dof_count(&self) -> usize {
        self.dof_to_full.len()
    }

    pub fn boundary_count(&self) -> usize {
        self.node_count() - self.dof_count()
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn is_boundary(&self, full: usize) -> bool {
        self.full_to_dof[full].is_none()
    }

    pub fn dof_of(&self, full: usize) -> Option<usize> {
        self.full_to_dof[full]
    }

    pub fn full_of(&self, dof: usize) -> usize {
        self.dof_to_full[dof]
    }

    /// Grid multi-index `(i, j)` of a full node (`j = 0` in 1D).
    pub fn grid_index(&self, full: usize) -> (usize, usize) {
        let p = self.nodes_per_axis();
        (full % p, full / p)
    }

    /// Grid multi-index of an interior dof.
    pub fn dof_grid_index(&self, dof: usize) -> (usize, usize) {
        self.grid_index(self.dof_to_full[dof])
    }

    pub fn full_index(&self, i: usize, j: usize) -> usize {
        i + j * self.nodes_per_axis()
    }

    pub fn node_coords(&self, full: usize) -> [f64; 2] {
        let (i, j) = self.grid_index(full);
        let h = self.h();
        match self.dim {
            Dimension::One => [i as f64 * h, 0.0],
            Dimension::Two => [i as f64 * h, j as f64 * h],
        }
    }

    pub fn dof_coords(&self, dof: usize) -> [f64; 2] {
        self.node_coords(self.dof_to_full[dof])
    }

    /// Values at every node (boundary included) from interior coefficients.
    pub fn extend_by_zero(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.node_count()];
        for (d, &g) in self.dof_to_full.iter().enumerate() {
            full[g] = coeffs[d];
        }
        full
    }

    /// Stiffness matrix of the Dirichlet form on interior dofs.
    pub fn stiffness(&self) -> CsrMatrix {
        let mut trips = Vec::new();
        for e in &self.elements {
            for a in 0..e.vertices {
                let Some(da) = e.dofs[a] else { continue };
                for b in 0..e.vertices {
                    let Some(db) = e.dofs[b] else { continue };
                    let g = e.grads[a][0] * e.grads[b][0] + e.grads[a][1] * e.grads[b][1];
                    trips.push((da, db, e.measure * g));
                }
            }
        }
        CsrMatrix::from_triplets(self.dof_count(), self.dof_count(), &trips)
    }

    /// Consistent P1 mass matrix on interior dofs.
    pub fn mass(&self) -> CsrMatrix {
        let mut trips = Vec::new();
        for e in &self.elements {
            let k = e.vertices as f64;
            // exact P1 element mass: measure/((k)(k+1)) * (1 + δ_ab)
            let scale = e.measure / (k * (k + 1.0));
            for a in 0..e.vertices {
                let Some(da) = e.dofs[a] else { continue };
                for b in 0..e.vertices {
                    let Some(db) = e.dofs[b] else { continue };
                    let v = if a == b { 2.0 * scale } else { scale };
                    trips.push((da, db, v));
                }
            }
        }
        CsrMatrix::from_triplets(self.dof_count(), self.dof_count(), &trips)
    }

    /// `∫ φ_x` for every interior hat function.
    pub fn lumped_mass(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dof_count()];
        for e in &self.elements {
            let share = e.measure / e.vertices as f64;
            for a in 0..e.vertices {
                if let Some(d) = e.dofs[a] {
                    out[d] += share;
                }
            }
        }
        out
    }

    /// Nodal interpolant on interior dofs of a callable.
    pub fn interpolate(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        (0..self.dof_count()).map(|d| f(self.dof_coords(d))).collect()
    }

    /// Nodal values at every node, boundary included.
    pub fn interpolate_full(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        (0..self.node_count()).map(|g| f(self.node_coords(g))).collect()
    }

    /// `∫ |∇u|^s` for nodal values given at every node.
    pub fn gradient_power_full(&self, values: &[f64], s: f64) -> Result<f64> {
        check_exponent(s)?;
        check_len(self.node_count(), values.len())?;
        Ok(self
            .elements
            .iter()
            .map(|e| {
                let mut vals = [0.0; 3];
                for v in 0..e.vertices {
                    vals[v] = values[e.nodes[v]];
                }
                let g = e.gradient(&vals);
                e.measure * libm::pow(g[0] * g[0] + g[1] * g[1], 0.5 * s)
            })
            .sum())
    }

    /// `∫ |u|^s` with the degree ⌈s⌉+1 Gauss rule, nodal values at every node.
    pub fn value_power_full(&self, values: &[f64], s: f64) -> Result<f64> {
        check_exponent(s)?;
        check_len(self.node_count(), values.len())?;
        let rule = self.rule_for(s);
        Ok(self
            .elements
            .iter()
            .map(|e| {
                let q: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(bary, w)| {
                        let u: f64 = (0..e.vertices).map(|v| bary[v] * values[e.nodes[v]]).sum();
                        w * libm::pow(u.abs(), s)
                    })
                    .sum();
                e.measure * q
            })
            .sum())
    }

    fn rule_for(&self, s: f64) -> Rule {
        let degree = libm::ceil(s) as usize + 1;
        match self.dim {
            Dimension::One => quadrature::segment(degree),
            Dimension::Two => quadrature::triangle(degree),
        }
    }
}

fn check_exponent(s: f64) -> Result<()> {
    if s >= 1.0 && s.is_finite() {
        Ok(())
    } else {
        Err(invalid(alloc::format!("Sobolev exponent must be at least 1, got {s}")))
    }
}

/// Interior coefficients tagged with the level they live on.
#[derive(Debug, Clone, PartialEq)]
pub struct FemFunction {
    level: Level,
    coeffs: Vec<f64>,
}

impl FemFunction {
    pub fn new(mesh: &MeshHierarchy, level: Level, coeffs: Vec<f64>) -> Result<Self> {
        check_len(mesh.grid(level).dof_count(), coeffs.len())?;
        Ok(Self { level, coeffs })
    }

    pub fn zeros(mesh: &MeshHierarchy, level: Level) -> Self {
        Self {
            level,
            coeffs: vec![0.0; mesh.grid(level).dof_count()],
        }
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            level: self.level,
            coeffs: self.coeffs.iter().map(|v| c * v).collect(),
        }
    }

    fn expect_level(&self, level: Level) -> Result<()> {
        if self.level == level {
            Ok(())
        } else {
            Err(Error::LevelMismatch {
                expected: level.name(),
                actual: self.level.name(),
            })
        }
    }
}

/// Coarse and fine structured levels with the P1 prolongation between them.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshHierarchy {
    coarse: Grid,
    fine: Grid,
    refinement: usize,
    prolongation: CsrMatrix,
}

/// Builds a coarse mesh with `m` cells per axis and its `r`-fold refinement.
pub fn build_mesh_hierarchy(d: usize, m: usize, r: usize) -> Result<MeshHierarchy> {
    let dim = Dimension::new(d)?;
    if m < 2 {
        return Err(invalid(alloc::format!("coarse cell count must be at least 2, got {m}")));
    }
    if r < 2 {
        return Err(invalid(alloc::format!("refinement must be at least 2, got {r}")));
    }
    let coarse = Grid::new(dim, m)?;
    let fine = Grid::new(dim, m * r)?;
    let prolongation = coarse_to_fine(&coarse, &fine, r);
    Ok(MeshHierarchy {
        coarse,
        fine,
        refinement: r,
        prolongation,
    })
}

impl MeshHierarchy {
    pub fn dim(&self) -> Dimension {
        self.fine.dim()
    }

    pub fn coarse(&self) -> &Grid {
        &self.coarse
    }

    pub fn fine(&self) -> &Grid {
        &self.fine
    }

    pub fn grid(&self, level: Level) -> &Grid {
        match level {
            Level::Coarse => &self.coarse,
            Level::Fine => &self.fine,
        }
    }

    pub fn coarse_cells(&self) -> usize {
        self.coarse.cells()
    }

    pub fn refinement(&self) -> usize {
        self.refinement
    }

    /// Coarse mesh size `H = 1/m`.
    pub fn coarse_h(&self) -> f64 {
        self.coarse.h()
    }

    /// Fine mesh size `h = H/r`.
    pub fn fine_h(&self) -> f64 {
        self.fine.h()
    }

    /// Fine-dof × coarse-dof matrix evaluating coarse hats at fine nodes.
    pub fn prolongation(&self) -> &CsrMatrix {
        &self.prolongation
    }

    /// Nodal interpolation of a callable onto `level`.
    pub fn interpolate(&self, level: Level, f: impl Fn([f64; 2]) -> f64) -> FemFunction {
        FemFunction {
            level,
            coeffs: self.grid(level).interpolate(f),
        }
    }

    /// Nodal interpolation of a finite element function onto `level`.
    ///
    /// Coarse to fine is exact (nested spaces); fine to coarse samples at coarse nodes.
    pub fn interpolate_function(&self, level: Level, u: &FemFunction) -> Result<FemFunction> {
        check_len(self.grid(u.level).dof_count(), u.coeffs.len())?;
        let coeffs = match (u.level, level) {
            (a, b) if a == b => u.coeffs.clone(),
            (Level::Coarse, Level::Fine) => self.prolongation.mul_vec(&u.coeffs),
            _ => {
                let full = self.fine.extend_by_zero(&u.coeffs);
                let r = self.refinement;
                (0..self.coarse.dof_count())
                    .map(|d| {
                        let (i, j) = self.coarse.dof_grid_index(d);
                        full[self.fine.full_index(i * r, j * r)]
                    })
                    .collect()
            }
        };
        Ok(FemFunction { level, coeffs })
    }

    /// `∫ |∇u|^s` of a fine-level function (exact for P1).
    pub fn energy_sobolev_seminorm(&self, u: &FemFunction, s: f64) -> Result<f64> {
        u.expect_level(Level::Fine)?;
        let full = self.fine.extend_by_zero(&u.coeffs);
        self.fine.gradient_power_full(&full, s)
    }

    /// `(∫|u|^s + ∫|∇u|^s)^{1/s}` of a fine-level function.
    pub fn w1s_norm(&self, u: &FemFunction, s: f64) -> Result<f64> {
        u.expect_level(Level::Fine)?;
        Ok(w1s_norm_coeffs(&self.fine, &u.coeffs, s)?)
    }
}

/// `W^{1,s}` norm of interior coefficients on `grid`.
pub fn w1s_norm_coeffs(grid: &Grid, coeffs: &[f64], s: f64) -> Result<f64> {
    let full = grid.extend_by_zero(coeffs);
    let total = grid.value_power_full(&full, s)? + grid.gradient_power_full(&full, s)?;
    Ok(libm::pow(total, 1.0 / s))
}

fn coarse_to_fine(coarse: &Grid, fine: &Grid, r: usize) -> CsrMatrix {
    let m = coarse.cells();
    let rf = r as f64;
    let mut trips = Vec::new();
    for fd in 0..fine.dof_count() {
        let (i, j) = fine.dof_grid_index(fd);
        let (ci, ai) = cell_and_offset(i, r, m);
        let xi = ai as f64 / rf;
        let mut push = |gi: usize, gj: usize, w: f64| {
            if w != 0.0 {
                if let Some(cd) = coarse.dof_of(coarse.full_index(gi, gj)) {
                    trips.push((fd, cd, w));
                }
            }
        };
        match coarse.dim() {
            Dimension::One => {
                push(ci, 0, 1.0 - xi);
                push(ci + 1, 0, xi);
            }
            Dimension::Two => {
                let (cj, aj) = cell_and_offset(j, r, m);
                let eta = aj as f64 / rf;
                if ai >= aj {
                    push(ci, cj, 1.0 - xi);
                    push(ci + 1, cj, xi - eta);
                    push(ci + 1, cj + 1, eta);
                } else {
                    push(ci, cj, 1.0 - eta);
                    push(ci + 1, cj + 1, xi);
                    push(ci, cj + 1, eta - xi);
                }
            }
        }
    }
    CsrMatrix::from_triplets(fine.dof_count(), coarse.dof_count(), &trips)
}

fn cell_and_offset(i: usize, r: usize, m: usize) -> (usize, usize) {
    let c = (i / r).min(m - 1);
    (c, i - c * r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn node_counts() {
        let m = build_mesh_hierarchy(1, 4, 4).unwrap();
        assert_relative_eq!(m.fine_h(), 1.0 / 16.0);
        assert_eq!(m.fine().dof_count(), 15);
        let m = build_mesh_hierarchy(2, 2, 2).unwrap();
        assert_eq!(m.fine().cells(), 4);
        assert_eq!(m.fine().elements().len(), 32);
        assert_eq!(m.fine().dof_count(), 9);
        assert_eq!(m.fine().dof_count(), m.fine().node_count() - m.fine().boundary_count());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_mesh_hierarchy(2, 3, 1).is_err());
        assert!(build_mesh_hierarchy(3, 3, 2).is_err());
        assert!(build_mesh_hierarchy(1, 0, 2).is_err());
    }

    #[test]
    fn fine_elements_tile_coarse_elements() {
        for d in [1, 2] {
            let m = build_mesh_hierarchy(d, 3, 4).unwrap();
            let area = |g: &Grid| g.elements().iter().map(|e| e.measure).sum::<f64>();
            assert_relative_eq!(area(m.fine()), 1.0, epsilon = 1e-13);
            assert_relative_eq!(area(m.coarse()), 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn constant_interpolation() {
        let m = build_mesh_hierarchy(2, 2, 3).unwrap();
        let u = m.interpolate(Level::Fine, |_| 1.0);
        assert!(u.coeffs().iter().all(|&v| v == 1.0));
        let again = m.interpolate_function(Level::Fine, &u).unwrap();
        assert_eq!(again, u);
    }

    #[test]
    fn prolongation_reproduces_coarse_linears() {
        for d in [1, 2] {
            let m = build_mesh_hierarchy(d, 4, 3).unwrap();
            // a coarse P1 function: nodal values of a bilinear-free affine bump
            let f = |p: [f64; 2]| p[0] * (1.0 - p[0]) + if d == 2 { p[1] * (1.0 - p[1]) } else { 0.0 };
            let uc = m.interpolate(Level::Coarse, f);
            let uf = m.interpolate_function(Level::Fine, &uc).unwrap();
            let back = m.interpolate_function(Level::Coarse, &uf).unwrap();
            assert_eq!(back.coeffs(), uc.coeffs());
            // same piecewise linear function, so the Dirichlet energies agree
            let ec = m.coarse().stiffness().quadratic_form(uc.coeffs());
            let ef = m.fine().stiffness().quadratic_form(uf.coeffs());
            assert_relative_eq!(ec, ef, epsilon = 1e-12);
        }
    }

    #[test]
    fn seminorm_of_identity_with_boundary_values() {
        let g = Grid::new(Dimension::One, 16).unwrap();
        let vals = g.interpolate_full(|p| p[0]);
        assert_relative_eq!(g.gradient_power_full(&vals, 2.0).unwrap(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn seminorm_of_single_hat() {
        let g = Grid::new(Dimension::One, 2).unwrap();
        for s in [2.0, 3.0, 1.5] {
            let got = g.gradient_power_full(&[0.0, 1.0, 0.0], s).unwrap();
            // slopes ±2 on two halves
            assert_relative_eq!(got, 2.0 * 0.5 * libm::pow(2.0, s), epsilon = 1e-13);
        }
        assert_relative_eq!(g.gradient_power_full(&[0.0, 1.0, 0.0], 2.0).unwrap(), 4.0);
    }

    #[test]
    fn zero_function_norms() {
        let m = build_mesh_hierarchy(2, 2, 2).unwrap();
        let z = FemFunction::zeros(&m, Level::Fine);
        assert_eq!(m.energy_sobolev_seminorm(&z, 3.0).unwrap(), 0.0);
        assert_eq!(m.w1s_norm(&z, 3.0).unwrap(), 0.0);
        assert!(m.w1s_norm(&z, 0.5).is_err());
        let c = FemFunction::zeros(&m, Level::Coarse);
        assert!(matches!(m.energy_sobolev_seminorm(&c, 2.0), Err(Error::LevelMismatch { .. })));
    }

    #[test]
    fn hat_l2_norm_matches_closed_form() {
        // one interior hat on elements of length h: ∫φ² = 2h/3
        let g = Grid::new(Dimension::One, 8).unwrap();
        let mut vals = vec![0.0; g.node_count()];
        vals[3] = 1.0;
        let h = g.h();
        assert_relative_eq!(g.value_power_full(&vals, 2.0).unwrap(), 2.0 * h / 3.0, epsilon = 1e-15);
        // 10-point Gauss oracle per element for a fractional power
        let s = 2.5;
        let (x, w) = quadrature::gauss_legendre(10);
        let oracle: f64 = 2.0 * x.iter().zip(&w).map(|(xi, wi)| 0.5 * h * wi * libm::pow(0.5 * (xi + 1.0), s)).sum::<f64>();
        assert_relative_eq!(g.value_power_full(&vals, s).unwrap(), oracle, epsilon = 1e-5);
    }

    #[test]
    fn mass_matrix_matches_quadrature() {
        let m = build_mesh_hierarchy(2, 2, 3).unwrap();
        let g = m.fine();
        let u: Vec<f64> = (0..g.dof_count()).map(|i| libm::sin(i as f64 + 0.3)).collect();
        let full = g.extend_by_zero(&u);
        let quad = g.value_power_full(&full, 2.0).unwrap();
        assert_relative_eq!(g.mass().quadratic_form(&u), quad, epsilon = 1e-13);
        let lumped: f64 = g.lumped_mass().iter().sum();
        assert_relative_eq!(lumped, g.dof_count() as f64 * g.h() * g.h(), epsilon = 1e-13);
    }

    #[test]
    fn stiffness_matches_seminorm() {
        for d in [1, 2] {
            let m = build_mesh_hierarchy(d, 2, 4).unwrap();
            let g = m.fine();
            let u: Vec<f64> = (0..g.dof_count()).map(|i| libm::cos(1.7 * i as f64)).collect();
            let f = FemFunction::new(&m, Level::Fine, u.clone()).unwrap();
            let semi = m.energy_sobolev_seminorm(&f, 2.0).unwrap();
            assert_relative_eq!(g.stiffness().quadratic_form(&u), semi, epsilon = 1e-12);
        }
    }
}
