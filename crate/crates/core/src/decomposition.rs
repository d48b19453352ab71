//! Overlapping subdomain splittings of the fine finite element space.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, invalid, Error, Result};
use crate::linalg::{Cholesky, CsrMatrix};
use crate::mesh::{Dimension, FemFunction, Level, MeshHierarchy};

/// How a subspace embeds into the global space.
#[derive(Debug, Clone, PartialEq)]
pub enum Prolongation {
    /// Extension by zero from the listed global indices.
    Indices(Vec<usize>),
    /// A dense-ish global × local matrix (the coarse space).
    Matrix(CsrMatrix),
}

/// One subspace `V_k` with its embedding `R_k^*`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    prolongation: Prolongation,
    /// Partition-of-unity weights on the local dofs, when the subspace has them.
    weights: Option<Vec<f64>>,
}

impl Subspace {
    pub fn from_indices(indices: Vec<usize>) -> Self {
        Self {
            prolongation: Prolongation::Indices(indices),
            weights: None,
        }
    }

    pub fn from_matrix(matrix: CsrMatrix) -> Self {
        Self {
            prolongation: Prolongation::Matrix(matrix),
            weights: None,
        }
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        assert_eq!(weights.len(), self.dim());
        self.weights = Some(weights);
        self
    }

    pub fn prolongation(&self) -> &Prolongation {
        &self.prolongation
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn indices(&self) -> Option<&[usize]> {
        match &self.prolongation {
            Prolongation::Indices(idx) => Some(idx),
            Prolongation::Matrix(_) => None,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.prolongation {
            Prolongation::Indices(idx) => idx.len(),
            Prolongation::Matrix(p) => p.cols(),
        }
    }

    /// `R_k v`: node selection, or `Pᵀ v` for a matrix embedding.
    pub fn restrict(&self, v: &[f64]) -> Vec<f64> {
        match &self.prolongation {
            Prolongation::Indices(idx) => idx.iter().map(|&g| v[g]).collect(),
            Prolongation::Matrix(p) => p.transpose_mul_vec(v),
        }
    }

    /// `u += alpha R_k^* w`
    pub fn prolong_add(&self, alpha: f64, w: &[f64], u: &mut [f64]) {
        match &self.prolongation {
            Prolongation::Indices(idx) => {
                for (&g, wi) in idx.iter().zip(w) {
                    u[g] += alpha * wi;
                }
            }
            Prolongation::Matrix(p) => {
                let pw = p.mul_vec(w);
                for (ui, pi) in u.iter_mut().zip(&pw) {
                    *ui += alpha * pi;
                }
            }
        }
    }

    pub fn prolong(&self, w: &[f64], global_dim: usize) -> Vec<f64> {
        let mut u = vec![0.0; global_dim];
        self.prolong_add(1.0, w, &mut u);
        u
    }
}

/// A finite list of subspaces spanning the global space, with its step bound.
pub trait SpaceSplitting {
    fn global_dim(&self) -> usize;
    fn subspaces(&self) -> &[Subspace];
    /// Largest admissible damping step.
    fn tau0(&self) -> f64;
}

/// Contiguous blocks of a product space, each its own subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPartition {
    sizes: Vec<usize>,
    subspaces: Vec<Subspace>,
    dim: usize,
}

impl BlockPartition {
    pub fn new(sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(invalid("block sizes must be nonempty and positive"));
        }
        let mut start = 0;
        let mut subspaces = Vec::with_capacity(sizes.len());
        for &s in sizes {
            subspaces.push(Subspace::from_indices((start..start + s).collect()));
            start += s;
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            subspaces,
            dim: start,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn block_range(&self, k: usize) -> core::ops::Range<usize> {
        let start: usize = self.sizes[..k].iter().sum();
        start..start + self.sizes[k]
    }
}

impl SpaceSplitting for BlockPartition {
    fn global_dim(&self) -> usize {
        self.dim
    }

    fn subspaces(&self) -> &[Subspace] {
        &self.subspaces
    }

    fn tau0(&self) -> f64 {
        1.0 / self.sizes.len() as f64
    }
}

/// Geometric data of one overlapping subdomain.
#[derive(Debug, Clone, PartialEq)]
pub struct Subdomain {
    /// Closed fine-index range of the nonoverlapping core, per axis.
    pub core: [(usize, usize); 2],
    /// Closed fine-index range of the overlapped region, clipped to the domain.
    pub extended: [(usize, usize); 2],
    pub color: usize,
}

/// Overlapping decomposition of the fine space, optionally with a coarse level.
#[derive(Debug, Clone)]
pub struct SpaceDecomposition {
    dim: Dimension,
    fine_dofs: usize,
    layout: [usize; 2],
    overlap: usize,
    fine_h: f64,
    subdomains: Vec<Subdomain>,
    color_count: usize,
    /// Fine subspaces first, coarse space last when two-level.
    subspaces: Vec<Subspace>,
    coarse: Option<CoarseSpace>,
}

#[derive(Debug, Clone)]
struct CoarseSpace {
    prolongation: CsrMatrix,
    fine_mass: CsrMatrix,
    coarse_mass: Cholesky,
    /// Per coarse dof, the fine full-node indices of its element patch.
    patches: Vec<Vec<usize>>,
    fine_nodes: usize,
    fine_full_of_dof: Vec<usize>,
}

/// Splits the domain into `layout` subdomains per axis (aligned with coarse
/// cells) and extends each by `overlap` fine element layers.
pub fn build_decomposition(
    mesh: &MeshHierarchy,
    layout: &[usize],
    overlap: usize,
    two_level: bool,
) -> Result<SpaceDecomposition> {
    let d = mesh.dim().as_usize();
    if layout.len() != d {
        return Err(invalid(alloc::format!(
            "layout has {} entries for a {d}-dimensional mesh",
            layout.len()
        )));
    }
    if overlap == 0 {
        return Err(invalid("overlap must be at least one fine layer"));
    }
    let m = mesh.coarse_cells();
    let r = mesh.refinement();
    let n = m * r;
    let mut per_axis = [1usize; 2];
    for (a, &count) in layout.iter().enumerate() {
        if count == 0 || m % count != 0 {
            return Err(invalid(alloc::format!(
                "{count} subdomains do not align with {m} coarse cells"
            )));
        }
        per_axis[a] = count;
    }
    let width = [n / per_axis[0], if d == 2 { n / per_axis[1] } else { 0 }];

    let mut subdomains = Vec::new();
    for b in 0..per_axis[1] {
        for a in 0..per_axis[0] {
            let mut core = [(0, 0); 2];
            let mut extended = [(0, 0); 2];
            for (axis, idx) in [a, b].into_iter().enumerate().take(d) {
                let lo = idx * width[axis];
                let hi = lo + width[axis];
                core[axis] = (lo, hi);
                extended[axis] = (lo.saturating_sub(overlap), (hi + overlap).min(n));
            }
            subdomains.push(Subdomain {
                core,
                extended,
                color: 0,
            });
        }
    }

    // greedy coloring in index order; adjacency = closed overlapped regions meet
    let touches = |x: &Subdomain, y: &Subdomain| {
        (0..d).all(|axis| x.extended[axis].0 <= y.extended[axis].1 && y.extended[axis].0 <= x.extended[axis].1)
    };
    let mut color_count = 0;
    for k in 0..subdomains.len() {
        let mut used = vec![false; subdomains.len() + 1];
        for j in 0..k {
            if touches(&subdomains[j], &subdomains[k]) {
                used[subdomains[j].color] = true;
            }
        }
        let c = used.iter().position(|u| !u).unwrap();
        subdomains[k].color = c;
        color_count = color_count.max(c + 1);
    }
    let bound = 1usize << d;
    if color_count > bound {
        // report the first pair from the same parity class that overlaps
        let parity = |k: usize| (k % per_axis[0]) % 2 + 2 * ((k / per_axis[0]) % 2);
        for i in 0..subdomains.len() {
            for j in i + 1..subdomains.len() {
                if parity(i) == parity(j) && touches(&subdomains[i], &subdomains[j]) {
                    return Err(Error::OverlapTooLarge { first: i, second: j });
                }
            }
        }
        return Err(Error::OverlapTooLarge { first: 0, second: 1 });
    }

    let fine = mesh.fine();
    let fine_dofs = fine.dof_count();
    let dist = |sd: &Subdomain, dof: usize| -> usize {
        let (i, j) = fine.dof_grid_index(dof);
        let mut worst = 0;
        for (axis, x) in [i, j].into_iter().enumerate().take(d) {
            let (lo, hi) = sd.core[axis];
            let off = if x < lo {
                lo - x
            } else if x > hi {
                x - hi
            } else {
                0
            };
            worst = worst.max(off);
        }
        worst
    };
    let mut raw: Vec<Vec<(usize, f64)>> = Vec::with_capacity(subdomains.len());
    let mut total = vec![0.0; fine_dofs];
    for sd in &subdomains {
        let mut entries = Vec::new();
        for dof in 0..fine_dofs {
            let dk = dist(sd, dof);
            if dk < overlap {
                let w = (overlap - dk) as f64;
                entries.push((dof, w));
                total[dof] += w;
            }
        }
        raw.push(entries);
    }
    let mut subspaces: Vec<Subspace> = raw
        .into_iter()
        .map(|entries| {
            let (idx, w): (Vec<usize>, Vec<f64>) = entries.into_iter().map(|(g, w)| (g, w / total[g])).unzip();
            Subspace::from_indices(idx).with_weights(w)
        })
        .collect();

    let coarse = if two_level {
        let p = mesh.prolongation().clone();
        let fine_mass = fine.mass();
        let coarse_mass = Cholesky::new(&fine_mass.congruence(&p))?;
        subspaces.push(Subspace::from_matrix(p.clone()));
        Some(CoarseSpace {
            prolongation: p,
            fine_mass,
            coarse_mass,
            patches: coarse_patches(mesh),
            fine_nodes: fine.node_count(),
            fine_full_of_dof: (0..fine_dofs).map(|g| fine.full_of(g)).collect(),
        })
    } else {
        None
    };

    Ok(SpaceDecomposition {
        dim: mesh.dim(),
        fine_dofs,
        layout: per_axis,
        overlap,
        fine_h: mesh.fine_h(),
        subdomains,
        color_count,
        subspaces,
        coarse,
    })
}

/// Fine full-node indices inside the closed union of coarse triangles (or
/// intervals) sharing each coarse interior node.
fn coarse_patches(mesh: &MeshHierarchy) -> Vec<Vec<usize>> {
    let coarse = mesh.coarse();
    let fine = mesh.fine();
    let r = mesh.refinement() as isize;
    let mut patches = Vec::with_capacity(coarse.dof_count());
    for cd in 0..coarse.dof_count() {
        let (ci, cj) = coarse.dof_grid_index(cd);
        let (ci, cj) = (ci as isize, cj as isize);
        let mut nodes = Vec::new();
        match mesh.dim() {
            Dimension::One => {
                for i in (ci - 1) * r..=(ci + 1) * r {
                    nodes.push(fine.full_index(i as usize, 0));
                }
            }
            Dimension::Two => {
                // local offsets (a, b) relative to the coarse node, in fine units
                for b in -r..=r {
                    for a in -r..=r {
                        let inside = match (a >= 0, b >= 0) {
                            (true, true) | (false, false) => true,
                            // cell to the lower right: only its upper triangle (a ≤ b + r)
                            (true, false) => a <= b + r,
                            // cell to the upper left: only its lower triangle
                            (false, true) => b <= a + r,
                        };
                        if inside {
                            let i = (ci * r + a) as usize;
                            let j = (cj * r + b) as usize;
                            nodes.push(fine.full_index(i, j));
                        }
                    }
                }
            }
        }
        patches.push(nodes);
    }
    patches
}

impl SpaceDecomposition {
    pub fn dim(&self) -> Dimension {
        self.dim
    }

    /// Number of fine subdomains `N` (the coarse space is not counted).
    pub fn subdomain_count(&self) -> usize {
        self.subdomains.len()
    }

    pub fn layout(&self) -> &[usize] {
        &self.layout[..self.dim.as_usize()]
    }

    /// Overlap in fine layers `ℓ`.
    pub fn overlap_layers(&self) -> usize {
        self.overlap
    }

    /// Overlap width `δ = ℓ h`.
    pub fn overlap_width(&self) -> f64 {
        self.overlap as f64 * self.fine_h
    }

    pub fn subdomains(&self) -> &[Subdomain] {
        &self.subdomains
    }

    pub fn color_count(&self) -> usize {
        self.color_count
    }

    pub fn is_two_level(&self) -> bool {
        self.coarse.is_some()
    }

    /// Fine dofs of subdomain `k`.
    pub fn dofs(&self, k: usize) -> Result<&[usize]> {
        self.check_subdomain(k)?;
        Ok(self.subspaces[k].indices().unwrap())
    }

    /// Partition-of-unity values `θ_k` on the dofs of subdomain `k`.
    pub fn weights(&self, k: usize) -> Result<&[f64]> {
        self.check_subdomain(k)?;
        Ok(self.subspaces[k].weights().unwrap())
    }

    /// `θ_k(x)` for every fine dof.
    pub fn weight_table(&self, k: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.fine_dofs];
        for (&g, &w) in self.dofs(k)?.iter().zip(self.weights(k)?) {
            out[g] = w;
        }
        Ok(out)
    }

    fn check_subdomain(&self, k: usize) -> Result<()> {
        if k < self.subdomains.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: k,
                len: self.subdomains.len(),
            })
        }
    }

    fn check_space(&self, k: usize) -> Result<&Subspace> {
        self.subspaces.get(k).ok_or(Error::IndexOutOfRange {
            index: k,
            len: self.subspaces.len(),
        })
    }

    /// Local coefficients of `u` on subspace `k` (coarse space last).
    pub fn restrict(&self, k: usize, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.fine_dofs, u.len())?;
        Ok(self.check_space(k)?.restrict(u))
    }

    /// Global coefficients of `R_k^* w_k`.
    pub fn prolong(&self, k: usize, w: &[f64]) -> Result<Vec<f64>> {
        let space = self.check_space(k)?;
        check_len(space.dim(), w.len())?;
        Ok(space.prolong(w, self.fine_dofs))
    }

    /// Coarse prolongation matrix, when two-level.
    pub fn coarse_prolongation(&self) -> Option<&CsrMatrix> {
        self.coarse.as_ref().map(|c| &c.prolongation)
    }

    fn split_fine(&self, w: &[f64]) -> Vec<Vec<f64>> {
        (0..self.subdomains.len())
            .map(|k| {
                let idx = self.subspaces[k].indices().unwrap();
                let th = self.subspaces[k].weights().unwrap();
                idx.iter().zip(th).map(|(&g, t)| t * w[g]).collect()
            })
            .collect()
    }

    fn coarse_or_err(&self) -> Result<&CoarseSpace> {
        self.coarse
            .as_ref()
            .ok_or_else(|| invalid("decomposition has no coarse level"))
    }

    /// `R_k^* w_k = I_h(θ_k w)`.
    pub fn stable_decompose_one_level(&self, w: &FemFunction) -> Result<Decomposed> {
        let w = self.fine_coeffs(w)?;
        Ok(Decomposed {
            parts: self.split_fine(w),
            coarse: if self.is_two_level() {
                Some(vec![0.0; self.coarse_prolongation().unwrap().cols()])
            } else {
                None
            },
        })
    }

    /// Coarse part is the L2 projection of `w`, fine parts split the remainder.
    pub fn stable_decompose_two_level_l2(&self, w: &FemFunction) -> Result<Decomposed> {
        let wv = self.fine_coeffs(w)?;
        let c = self.coarse_or_err()?;
        let rhs = c.prolongation.transpose_mul_vec(&c.fine_mass.mul_vec(wv));
        let w0 = c.coarse_mass.solve(&rhs);
        Ok(self.with_coarse(wv, w0))
    }

    /// Coarse part is `I_H^⊖(max(0,w)) − I_H^⊖(max(0,−w))` with the patch-minimum operator.
    pub fn stable_decompose_two_level_nonsmooth(&self, w: &FemFunction) -> Result<Decomposed> {
        let wv = self.fine_coeffs(w)?;
        let c = self.coarse_or_err()?;
        let mut full = vec![0.0; c.fine_nodes];
        for (d, &g) in c.fine_full_of_dof.iter().enumerate() {
            full[g] = wv[d];
        }
        let patch_min = |sign: f64| -> Vec<f64> {
            c.patches
                .iter()
                .map(|patch| patch.iter().map(|&g| (sign * full[g]).max(0.0)).fold(f64::INFINITY, f64::min))
                .collect()
        };
        let pos = patch_min(1.0);
        let neg = patch_min(-1.0);
        let w0 = pos.iter().zip(&neg).map(|(p, n)| p - n).collect();
        Ok(self.with_coarse(wv, w0))
    }

    fn with_coarse(&self, w: &[f64], w0: Vec<f64>) -> Decomposed {
        let p = self.coarse_prolongation().unwrap();
        let pw = p.mul_vec(&w0);
        let rest: Vec<f64> = w.iter().zip(&pw).map(|(a, b)| a - b).collect();
        Decomposed {
            parts: self.split_fine(&rest),
            coarse: Some(w0),
        }
    }

    fn fine_coeffs<'a>(&self, w: &'a FemFunction) -> Result<&'a [f64]> {
        if w.level() != Level::Fine {
            return Err(Error::LevelMismatch {
                expected: Level::Fine.name(),
                actual: w.level().name(),
            });
        }
        check_len(self.fine_dofs, w.coeffs().len())?;
        Ok(w.coeffs())
    }
}

impl SpaceSplitting for SpaceDecomposition {
    fn global_dim(&self) -> usize {
        self.fine_dofs
    }

    fn subspaces(&self) -> &[Subspace] {
        &self.subspaces
    }

    fn tau0(&self) -> f64 {
        tau0(self)
    }
}

/// `1/N_c` for one level, `1/(N_c + 1)` with a coarse space.
pub fn tau0(dec: &SpaceDecomposition) -> f64 {
    let nc = dec.color_count + usize::from(dec.is_two_level());
    1.0 / nc as f64
}

/// Local pieces of a decomposed function.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposed {
    pub parts: Vec<Vec<f64>>,
    pub coarse: Option<Vec<f64>>,
}

impl Decomposed {
    /// Local vectors in subspace order (coarse last), matching `SpaceSplitting::subspaces`.
    pub fn pieces(&self) -> impl Iterator<Item = &[f64]> {
        self.parts.iter().map(|p| p.as_slice()).chain(self.coarse.as_deref())
    }

    /// `Σ_k R_k^* w_k`, summed in subspace order.
    pub fn reconstruct(&self, dec: &SpaceDecomposition) -> Vec<f64> {
        let mut u = vec![0.0; dec.global_dim()];
        for (space, piece) in dec.subspaces().iter().zip(self.pieces()) {
            space.prolong_add(1.0, piece, &mut u);
        }
        u
    }
}

/// The three stable decompositions, selectable at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decomposer {
    OneLevel,
    TwoLevelL2,
    TwoLevelNonsmooth,
}

impl Decomposer {
    pub fn apply(self, dec: &SpaceDecomposition, w: &FemFunction) -> Result<Decomposed> {
        match self {
            Self::OneLevel => dec.stable_decompose_one_level(w),
            Self::TwoLevelL2 => dec.stable_decompose_two_level_l2(w),
            Self::TwoLevelNonsmooth => dec.stable_decompose_two_level_nonsmooth(w),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use crate::mesh::build_mesh_hierarchy;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_fine(mesh: &MeshHierarchy, rng: &mut ChaCha8Rng) -> FemFunction {
        let n = mesh.fine().dof_count();
        FemFunction::new(mesh, Level::Fine, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn color_counts_match_structured_bounds() {
        let m2 = build_mesh_hierarchy(2, 4, 3).unwrap();
        let dec = build_decomposition(&m2, &[4, 4], 1, false).unwrap();
        assert_eq!(dec.color_count(), 4);
        assert_eq!(tau0(&dec), 0.25);
        let dec2 = build_decomposition(&m2, &[4, 4], 1, true).unwrap();
        assert_eq!(tau0(&dec2), 0.2);
        let m1 = build_mesh_hierarchy(1, 4, 4).unwrap();
        let dec = build_decomposition(&m1, &[4], 1, false).unwrap();
        assert_eq!(dec.color_count(), 2);
        assert_eq!(tau0(&dec), 0.5);
    }

    #[test]
    fn single_subdomain_is_trivial() {
        let m = build_mesh_hierarchy(2, 2, 3).unwrap();
        let dec = build_decomposition(&m, &[1, 1], 1, false).unwrap();
        assert_eq!(dec.subdomain_count(), 1);
        assert_eq!(dec.color_count(), 1);
        assert_eq!(tau0(&dec), 1.0);
        assert_eq!(dec.dofs(0).unwrap().len(), m.fine().dof_count());
        assert!(dec.weights(0).unwrap().iter().all(|&t| t == 1.0));
    }

    #[test]
    fn overlap_too_large_names_a_pair() {
        let m = build_mesh_hierarchy(1, 8, 2).unwrap();
        // width 4 fine cells, ℓ = 2: subdomains 0 and 2 touch at a node
        match build_decomposition(&m, &[4], 2, false) {
            Err(Error::OverlapTooLarge { first, second }) => assert_eq!((first, second), (0, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_misaligned_layouts() {
        let m = build_mesh_hierarchy(2, 4, 2).unwrap();
        assert!(build_decomposition(&m, &[3, 4], 1, false).is_err());
        assert!(build_decomposition(&m, &[4], 1, false).is_err());
        assert!(build_decomposition(&m, &[2, 2], 0, false).is_err());
    }

    #[test]
    fn same_color_regions_are_separated() {
        for (d, layout, l) in [(1, vec![4], 1), (2, vec![4, 2], 1), (2, vec![2, 2], 4)] {
            let m = build_mesh_hierarchy(d, 4, 4).unwrap();
            let dec = build_decomposition(&m, &layout, l, false).unwrap();
            let subs = dec.subdomains();
            for i in 0..subs.len() {
                for j in i + 1..subs.len() {
                    if subs[i].color != subs[j].color {
                        continue;
                    }
                    let apart = (0..d).any(|a| subs[i].extended[a].1 < subs[j].extended[a].0 || subs[j].extended[a].1 < subs[i].extended[a].0);
                    assert!(apart, "{i} and {j}");
                }
            }
        }
    }

    #[test]
    fn partition_of_unity_and_cover() {
        for (d, layout, l) in [(1, vec![4], 1), (1, vec![2], 4), (2, vec![2, 2], 2), (2, vec![4, 4], 1)] {
            let m = build_mesh_hierarchy(d, 4, 4).unwrap();
            let dec = build_decomposition(&m, &layout, l, false).unwrap();
            let mut sum = vec![0.0; m.fine().dof_count()];
            for k in 0..dec.subdomain_count() {
                for (s, t) in sum.iter_mut().zip(dec.weight_table(k).unwrap()) {
                    assert!((0.0..=1.0).contains(&t));
                    *s += t;
                }
            }
            assert!(sum.iter().all(|s| (s - 1.0).abs() <= 4.0 * f64::EPSILON));
        }
    }

    #[test]
    fn interpolated_product_with_weight() {
        let m = build_mesh_hierarchy(1, 4, 4).unwrap();
        let dec = build_decomposition(&m, &[2], 2, false).unwrap();
        let w = m.interpolate(Level::Fine, |p| libm::sin(3.0 * p[0]));
        let parts = dec.stable_decompose_one_level(&w).unwrap();
        let theta = dec.weight_table(1).unwrap();
        let embedded = dec.prolong(1, &parts.parts[1]).unwrap();
        for x in 0..w.coeffs().len() {
            assert_eq!(embedded[x], theta[x] * w.coeffs()[x]);
        }
    }

    #[test]
    fn restrict_and_prolong_are_adjoint_pair() {
        let m = build_mesh_hierarchy(2, 4, 2).unwrap();
        let dec = build_decomposition(&m, &[2, 2], 1, false).unwrap();
        let ones = vec![1.0; m.fine().dof_count()];
        let local = dec.restrict(3, &ones).unwrap();
        assert!(local.iter().all(|&v| v == 1.0));
        let back = dec.prolong(3, &local).unwrap();
        assert_eq!(dec.restrict(3, &back).unwrap(), local);
        let inside = dec.dofs(3).unwrap();
        for (g, v) in back.iter().enumerate() {
            assert_eq!(*v, if inside.contains(&g) { 1.0 } else { 0.0 });
        }
        assert!(matches!(dec.restrict(4, &ones), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn decomposers_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in [1, 2] {
            let m = build_mesh_hierarchy(d, 4, 2).unwrap();
            let layout = vec![2; d];
            let dec = build_decomposition(&m, &layout, 1, true).unwrap();
            for _ in 0..100 {
                let w = random_fine(&m, &mut rng);
                for dz in [Decomposer::OneLevel, Decomposer::TwoLevelL2, Decomposer::TwoLevelNonsmooth] {
                    let parts = dz.apply(&dec, &w).unwrap();
                    assert!(max_abs_diff(&parts.reconstruct(&dec), w.coeffs()) <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn coarse_function_projects_to_itself() {
        let m = build_mesh_hierarchy(2, 4, 2).unwrap();
        let dec = build_decomposition(&m, &[2, 2], 1, true).unwrap();
        let wc = m.interpolate(Level::Coarse, |p| p[0] * p[1]);
        let wf = m.interpolate_function(Level::Fine, &wc).unwrap();
        let parts = dec.stable_decompose_two_level_l2(&wf).unwrap();
        assert!(max_abs_diff(parts.coarse.as_ref().unwrap(), wc.coeffs()) < 1e-12);
        assert!(parts.parts.iter().flatten().all(|v| v.abs() < 1e-12));
        let zero = FemFunction::zeros(&m, Level::Fine);
        for dz in [Decomposer::TwoLevelL2, Decomposer::TwoLevelNonsmooth] {
            let p = dz.apply(&dec, &zero).unwrap();
            assert!(p.pieces().flatten().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn nonsmooth_coarse_part_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in [1, 2] {
            let m = build_mesh_hierarchy(d, 4, 3).unwrap();
            let dec = build_decomposition(&m, &vec![2; d], 1, true).unwrap();
            let p = dec.coarse_prolongation().unwrap();
            for _ in 0..20 {
                let n = m.fine().dof_count();
                let w = FemFunction::new(&m, Level::Fine, (0..n).map(|_| rng.gen_range(0.5..2.0)).collect()).unwrap();
                let parts = dec.stable_decompose_two_level_nonsmooth(&w).unwrap();
                let coarse = p.mul_vec(parts.coarse.as_ref().unwrap());
                for (c, v) in coarse.iter().zip(w.coeffs()) {
                    assert!(*c >= 0.0 && *c <= *v + 1e-15);
                }
                // coarse nodes away from the boundary see strictly positive patches
                let interior_positive = parts.coarse.as_ref().unwrap().iter().any(|&v| v >= 0.5);
                assert!(interior_positive || m.coarse().dof_count() == 0);
            }
        }
    }

    #[test]
    fn nonsmooth_coarse_part_vanishes_on_mixed_patches() {
        let m = build_mesh_hierarchy(1, 4, 2).unwrap();
        let dec = build_decomposition(&m, &[2], 1, true).unwrap();
        // alternating signs: every coarse patch sees both signs
        let n = m.fine().dof_count();
        let w = FemFunction::new(&m, Level::Fine, (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect()).unwrap();
        let parts = dec.stable_decompose_two_level_nonsmooth(&w).unwrap();
        assert!(parts.coarse.unwrap().iter().all(|&v| v == 0.0));
    }
}
