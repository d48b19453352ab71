//! Composite convex energies `E = F + G` over finite element coefficient vectors.

use alloc::vec;
use alloc::vec::Vec;

use crate::decomposition::BlockPartition;
use crate::error::{check_len, invalid, Error, Result};
use crate::linalg::{self, dot, Cholesky, CsrMatrix, DenseMatrix};
use crate::mesh::{w1s_norm_coeffs, Element, FemFunction, Grid, Level, MeshHierarchy};

/// Regularization of `|∇u|²` for exponents below two.
pub const SLAP_EPSILON: f64 = 1e-10;

/// Right-hand side of an elliptic problem.
pub enum Load<'a> {
    /// The load functional `⟨f, φ_x⟩` directly, one entry per interior dof.
    Vector(Vec<f64>),
    /// A source density, turned into a load via the mass matrix of its interpolant.
    Function(&'a dyn Fn([f64; 2]) -> f64),
}

impl Load<'_> {
    fn assemble(&self, grid: &Grid) -> Result<Vec<f64>> {
        match self {
            Load::Vector(v) => {
                check_len(grid.dof_count(), v.len())?;
                Ok(v.clone())
            }
            Load::Function(f) => Ok(grid.mass().mul_vec(&grid.interpolate(f))),
        }
    }
}

/// Norm in which distances and rates are measured.
#[derive(Debug, Clone, PartialEq)]
pub enum Norm {
    Euclidean,
    /// `(uᵀ A u)^{1/2}`
    Energy(CsrMatrix),
    /// Discrete `W^{1,s}` norm on a grid.
    Sobolev { grid: Grid, exponent: f64 },
}

impl Norm {
    pub fn eval(&self, u: &[f64]) -> f64 {
        match self {
            Norm::Euclidean => linalg::norm2(u),
            Norm::Energy(a) => libm::sqrt(a.quadratic_form(u).max(0.0)),
            Norm::Sobolev { grid, exponent } => w1s_norm_coeffs(grid, u, *exponent).unwrap_or(f64::NAN),
        }
    }

    pub fn distance(&self, u: &[f64], v: &[f64]) -> f64 {
        self.eval(&linalg::sub(u, v))
    }
}

/// Smooth convex part `F`.
#[derive(Debug, Clone, PartialEq)]
pub enum SmoothPart {
    /// `½ uᵀ A u − ⟨b, u⟩`
    Quadratic { matrix: CsrMatrix, load: Vec<f64> },
    /// `(1/s) ∫ |∇u|^s − ⟨b, u⟩`, with `|∇u|²` shifted by `eps²` when `eps > 0`.
    SLaplacian {
        grid: Grid,
        exponent: f64,
        eps: f64,
        load: Vec<f64>,
    },
}

/// Convex, possibly nonsmooth part `G`, a weighted sum of per-node terms.
#[derive(Debug, Clone, PartialEq)]
pub enum Nonsmooth {
    Zero,
    /// `Σ w_x |u_x|`
    WeightedAbs(Vec<f64>),
    /// Indicator of `{u ≥ g̲}` (nodally).
    LowerObstacle(Vec<f64>),
}

impl Nonsmooth {
    pub fn value(&self, u: &[f64]) -> f64 {
        match self {
            Nonsmooth::Zero => 0.0,
            Nonsmooth::WeightedAbs(w) => w.iter().zip(u).map(|(w, x)| w * x.abs()).sum(),
            Nonsmooth::LowerObstacle(g) => {
                if u.iter().zip(g).all(|(x, g)| x >= g) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Per-node term `g_x(t)`.
    pub fn node_value(&self, x: usize, t: f64) -> f64 {
        match self {
            Nonsmooth::Zero => 0.0,
            Nonsmooth::WeightedAbs(w) => w[x] * t.abs(),
            Nonsmooth::LowerObstacle(g) => {
                if t >= g[x] {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// `argmin_t (1/(2 step)) (t − z)² + g_x(t)`
    pub fn node_prox(&self, x: usize, z: f64, step: f64) -> f64 {
        match self {
            Nonsmooth::Zero => z,
            Nonsmooth::WeightedAbs(w) => soft_threshold(z, step * w[x]),
            Nonsmooth::LowerObstacle(g) => z.max(g[x]),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Nonsmooth::Zero)
    }

    pub fn is_smooth(&self) -> bool {
        self.is_zero()
    }

    pub fn obstacle(&self) -> Option<&[f64]> {
        match self {
            Nonsmooth::LowerObstacle(g) => Some(g),
            _ => None,
        }
    }

    pub fn is_feasible(&self, u: &[f64]) -> bool {
        match self {
            Nonsmooth::LowerObstacle(g) => u.iter().zip(g).all(|(x, g)| x >= g),
            _ => true,
        }
    }
}

pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Known structural constants of an objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveInfo {
    /// Sharpness exponent `p`.
    pub sharpness: f64,
    /// Smoothness exponent `q`.
    pub smoothness: f64,
    /// Lipschitz constant of `F′` in the Euclidean norm, when known.
    pub lipschitz: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Linear,
    SLaplacian,
    L1Obstacle,
    Obstacle,
    BlockSeparable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    kind: ProblemKind,
    smooth: SmoothPart,
    nonsmooth: Nonsmooth,
    info: ObjectiveInfo,
    norm: Norm,
}

impl Objective {
    pub fn new(kind: ProblemKind, smooth: SmoothPart, nonsmooth: Nonsmooth, info: ObjectiveInfo, norm: Norm) -> Self {
        Self {
            kind,
            smooth,
            nonsmooth,
            info,
            norm,
        }
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn smooth(&self) -> &SmoothPart {
        &self.smooth
    }

    pub fn nonsmooth(&self) -> &Nonsmooth {
        &self.nonsmooth
    }

    pub fn info(&self) -> &ObjectiveInfo {
        &self.info
    }

    pub fn norm(&self) -> &Norm {
        &self.norm
    }

    pub fn with_norm(mut self, norm: Norm) -> Self {
        self.norm = norm;
        self
    }

    pub fn dim(&self) -> usize {
        match &self.smooth {
            SmoothPart::Quadratic { load, .. } | SmoothPart::SLaplacian { load, .. } => load.len(),
        }
    }

    pub fn load(&self) -> &[f64] {
        match &self.smooth {
            SmoothPart::Quadratic { load, .. } | SmoothPart::SLaplacian { load, .. } => load,
        }
    }

    /// The quadratic form, when `F` is quadratic.
    pub fn matrix(&self) -> Option<&CsrMatrix> {
        match &self.smooth {
            SmoothPart::Quadratic { matrix, .. } => Some(matrix),
            _ => None,
        }
    }

    pub fn is_quadratic(&self) -> bool {
        self.matrix().is_some()
    }

    pub fn smooth_value(&self, u: &[f64]) -> f64 {
        match &self.smooth {
            SmoothPart::Quadratic { matrix, load } => 0.5 * matrix.quadratic_form(u) - dot(load, u),
            SmoothPart::SLaplacian {
                grid,
                exponent,
                eps,
                load,
            } => {
                let s = *exponent;
                let shift = libm::pow(*eps, s);
                let e2 = eps * eps;
                let mut total = 0.0;
                for e in grid.elements() {
                    let g = e.gradient(&e.gather(u));
                    let r2 = g[0] * g[0] + g[1] * g[1] + e2;
                    total += e.measure * (libm::pow(r2, 0.5 * s) - shift);
                }
                total / s - dot(load, u)
            }
        }
    }

    pub fn smooth_gradient(&self, u: &[f64]) -> Vec<f64> {
        match &self.smooth {
            SmoothPart::Quadratic { matrix, load } => {
                let mut g = matrix.mul_vec(u);
                linalg::axpy(-1.0, load, &mut g);
                g
            }
            SmoothPart::SLaplacian {
                grid,
                exponent,
                eps,
                load,
            } => {
                let mut out: Vec<f64> = load.iter().map(|b| -b).collect();
                for e in grid.elements() {
                    let g = e.gradient(&e.gather(u));
                    let coef = e.measure * flux_scale(g, *exponent, *eps);
                    for v in 0..e.vertices {
                        if let Some(d) = e.dofs[v] {
                            out[d] += coef * (g[0] * e.grads[v][0] + g[1] * e.grads[v][1]);
                        }
                    }
                }
                out
            }
        }
    }

    /// Hessian of `F` at `u` (exact for both smooth kinds).
    pub fn smooth_hessian(&self, u: &[f64]) -> CsrMatrix {
        match &self.smooth {
            SmoothPart::Quadratic { matrix, .. } => matrix.clone(),
            SmoothPart::SLaplacian {
                grid, exponent, eps, ..
            } => {
                let n = self.dim();
                let mut trips = Vec::new();
                for e in grid.elements() {
                    let h = element_hessian(e, &e.gather(u), *exponent, *eps);
                    for a in 0..e.vertices {
                        let Some(da) = e.dofs[a] else { continue };
                        for b in 0..e.vertices {
                            let Some(db) = e.dofs[b] else { continue };
                            let ga = e.grads[a];
                            let gb = e.grads[b];
                            let v = ga[0] * (h[0][0] * gb[0] + h[0][1] * gb[1]) + ga[1] * (h[1][0] * gb[0] + h[1][1] * gb[1]);
                            trips.push((da, db, e.measure * v));
                        }
                    }
                }
                CsrMatrix::from_triplets(n, n, &trips)
            }
        }
    }

    /// SPD matrix used to damp Newton steps: the quadratic form itself, or the
    /// Dirichlet stiffness for the s-Laplacian.
    pub fn regularizer(&self) -> CsrMatrix {
        match &self.smooth {
            SmoothPart::Quadratic { matrix, .. } => matrix.clone(),
            SmoothPart::SLaplacian { grid, .. } => grid.stiffness(),
        }
    }

    pub fn nonsmooth_value(&self, u: &[f64]) -> f64 {
        self.nonsmooth.value(u)
    }

    pub fn is_feasible(&self, u: &[f64]) -> bool {
        self.nonsmooth.is_feasible(u)
    }

    /// `E(u) = F(u) + G(u)`; `+∞` off the domain of `G`.
    pub fn energy(&self, u: &[f64]) -> f64 {
        let g = self.nonsmooth_value(u);
        if g.is_infinite() {
            return f64::INFINITY;
        }
        self.smooth_value(u) + g
    }

    /// `D_F(u, v) = F(u) − F(v) − ⟨F′(v), u − v⟩`
    pub fn bregman(&self, u: &[f64], v: &[f64]) -> f64 {
        let diff = linalg::sub(u, v);
        self.smooth_value(u) - self.smooth_value(v) - dot(&self.smooth_gradient(v), &diff)
    }

    /// Natural residual `‖u − prox_G(u − F′(u))‖_∞` of the optimality inclusion.
    pub fn optimality_residual(&self, u: &[f64]) -> f64 {
        let g = self.smooth_gradient(u);
        u.iter()
            .zip(&g)
            .enumerate()
            .map(|(x, (ui, gi))| (ui - self.nonsmooth.node_prox(x, ui - gi, 1.0)).abs())
            .fold(0.0, f64::max)
    }
}

fn flux_scale(g: [f64; 2], s: f64, eps: f64) -> f64 {
    let r2 = g[0] * g[0] + g[1] * g[1] + eps * eps;
    if r2 == 0.0 {
        return 0.0;
    }
    libm::pow(r2, 0.5 * s - 1.0)
}

/// Second derivative of `g ↦ (1/s)(|g|² + ε²)^{s/2}`.
fn element_hessian(e: &Element, vals: &[f64; 3], s: f64, eps: f64) -> [[f64; 2]; 2] {
    let g = e.gradient(vals);
    let r2 = g[0] * g[0] + g[1] * g[1] + eps * eps;
    if r2 == 0.0 {
        return [[0.0; 2]; 2];
    }
    let a = libm::pow(r2, 0.5 * s - 1.0);
    let b = (s - 2.0) * libm::pow(r2, 0.5 * s - 2.0);
    [
        [a + b * g[0] * g[0], b * g[0] * g[1]],
        [b * g[1] * g[0], a + b * g[1] * g[1]],
    ]
}

fn h1_norm(mesh: &MeshHierarchy, s: f64) -> Norm {
    Norm::Sobolev {
        grid: mesh.fine().clone(),
        exponent: s,
    }
}

/// `½ a(u,u) − ⟨f,u⟩` with the Dirichlet form, no constraint.
pub fn make_linear_elliptic(mesh: &MeshHierarchy, load: &Load<'_>) -> Result<Objective> {
    let grid = mesh.fine();
    let load = load.assemble(grid)?;
    Ok(Objective::new(
        ProblemKind::Linear,
        SmoothPart::Quadratic {
            matrix: grid.stiffness(),
            load,
        },
        Nonsmooth::Zero,
        ObjectiveInfo {
            sharpness: 2.0,
            smoothness: 2.0,
            lipschitz: None,
        },
        h1_norm(mesh, 2.0),
    ))
}

/// `(1/s) ∫ |∇u|^s − ⟨f,u⟩` for `s > 1`, `s ≠ 2`.
pub fn make_s_laplacian(mesh: &MeshHierarchy, s: f64, load: &Load<'_>) -> Result<Objective> {
    if !(s > 1.0) || s == 2.0 || !s.is_finite() {
        return Err(invalid(alloc::format!(
            "s-Laplacian needs s > 1 and s != 2, got {s}; use the linear problem for s = 2"
        )));
    }
    let grid = mesh.fine();
    let load = load.assemble(grid)?;
    let (p, q) = if s > 2.0 { (s, 2.0) } else { (2.0, s) };
    Ok(Objective::new(
        ProblemKind::SLaplacian,
        SmoothPart::SLaplacian {
            grid: grid.clone(),
            exponent: s,
            eps: if s < 2.0 { SLAP_EPSILON } else { 0.0 },
            load,
        },
        Nonsmooth::Zero,
        ObjectiveInfo {
            sharpness: p,
            smoothness: q,
            lipschitz: None,
        },
        h1_norm(mesh, s),
    ))
}

/// Dirichlet quadratic plus `λ ∫ I_h|u|` (lumped).
pub fn make_l1_obstacle(mesh: &MeshHierarchy, load: &Load<'_>, lambda: f64) -> Result<Objective> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(invalid(alloc::format!("L1 weight must be nonnegative, got {lambda}")));
    }
    let mut obj = make_linear_elliptic(mesh, load)?;
    let weights = mesh.fine().lumped_mass().iter().map(|m| lambda * m).collect();
    obj.kind = ProblemKind::L1Obstacle;
    obj.nonsmooth = Nonsmooth::WeightedAbs(weights);
    Ok(obj)
}

/// Lower obstacle on the fine level.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleData {
    values: FemFunction,
}

impl ObstacleData {
    pub fn new(values: FemFunction) -> Result<Self> {
        if values.level() != Level::Fine {
            return Err(Error::LevelMismatch {
                expected: Level::Fine.name(),
                actual: values.level().name(),
            });
        }
        if let Some(node) = values.coeffs().iter().position(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::Infeasible {
                node,
                violation: f64::INFINITY,
            });
        }
        Ok(Self { values })
    }

    /// Interpolates `g`; boundary values must allow the zero trace.
    pub fn from_function(mesh: &MeshHierarchy, g: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let grid = mesh.fine();
        for full in 0..grid.node_count() {
            if grid.is_boundary(full) {
                let v = g(grid.node_coords(full));
                if v > 0.0 {
                    return Err(Error::Infeasible { node: full, violation: v });
                }
            }
        }
        Self::new(mesh.interpolate(Level::Fine, g))
    }

    pub fn values(&self) -> &[f64] {
        self.values.coeffs()
    }

    /// The feasible point `max(g̲, 0)`.
    pub fn feasible_start(&self) -> Vec<f64> {
        self.values().iter().map(|g| g.max(0.0)).collect()
    }
}

/// Dirichlet quadratic restricted to `{u ≥ g̲}`.
pub fn make_obstacle_constrained(mesh: &MeshHierarchy, load: &Load<'_>, obstacle: &ObstacleData) -> Result<Objective> {
    check_len(mesh.fine().dof_count(), obstacle.values().len())?;
    let mut obj = make_linear_elliptic(mesh, load)?;
    obj.kind = ProblemKind::Obstacle;
    obj.nonsmooth = Nonsmooth::LowerObstacle(obstacle.values().to_vec());
    Ok(obj)
}

/// A block-separable composite problem over a product space.
#[derive(Debug, Clone)]
pub struct BlockProblem {
    pub objective: Objective,
    pub partition: BlockPartition,
    /// Largest eigenvalue of the quadratic form.
    pub lipschitz: f64,
}

/// `½ uᵀ Q u − ⟨c, u⟩ + Σ_k λ_k ‖u_k‖₁` with SPD `Q`.
pub fn make_block_separable(sizes: &[usize], quadratic: &DenseMatrix, linear: &[f64], block_weights: &[f64]) -> Result<BlockProblem> {
    let partition = BlockPartition::new(sizes)?;
    let n: usize = sizes.iter().sum();
    check_len(n, quadratic.rows())?;
    check_len(n, quadratic.cols())?;
    check_len(n, linear.len())?;
    check_len(sizes.len(), block_weights.len())?;
    if quadratic.symmetry_defect() > 1e-12 * (1.0 + quadratic.trace().abs()) {
        return Err(invalid("quadratic data must be symmetric"));
    }
    Cholesky::new(quadratic)?;
    if block_weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(invalid("block weights must be nonnegative"));
    }
    let ev = linalg::symmetric_eigenvalues(quadratic, 1e-14, 100)?;
    let lipschitz = *ev.last().unwrap();
    let mut weights = vec![0.0; n];
    for (k, &lam) in block_weights.iter().enumerate() {
        for w in &mut weights[partition.block_range(k)] {
            *w = lam;
        }
    }
    let nonsmooth = if block_weights.iter().all(|&w| w == 0.0) {
        Nonsmooth::Zero
    } else {
        Nonsmooth::WeightedAbs(weights)
    };
    let objective = Objective::new(
        ProblemKind::BlockSeparable,
        SmoothPart::Quadratic {
            matrix: CsrMatrix::from_dense(quadratic),
            load: linear.to_vec(),
        },
        nonsmooth,
        ObjectiveInfo {
            sharpness: 2.0,
            smoothness: 2.0,
            lipschitz: Some(lipschitz),
        },
        Norm::Euclidean,
    );
    Ok(BlockProblem {
        objective,
        partition,
        lipschitz,
    })
}

/// Seeded synthetic ℓ1-regularized least squares: `Q = BᵀB/m + αI` with
/// `B` uniform in `[−1, 1]^{m×n}`, `m = 2n`, `c = Bᵀy` for uniform `y`.
pub fn synthetic_block_problem(sizes: &[usize], lambda: f64, seed: u64) -> Result<BlockProblem> {
    use rand::{Rng, SeedableRng};
    let n: usize = sizes.iter().sum();
    let m = 2 * n;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let b: Vec<f64> = (0..m * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut q = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            q[(i, j)] = (0..m).map(|r| b[r * n + i] * b[r * n + j]).sum::<f64>() / m as f64;
        }
        q[(i, i)] += 0.1;
    }
    let c: Vec<f64> = (0..n).map(|i| (0..m).map(|r| b[r * n + i] * y[r]).sum::<f64>() / m as f64).collect();
    make_block_separable(sizes, &q, &c, &vec![lambda; sizes.len()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh_hierarchy;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
    }

    /// Central differences of `F` along each coordinate.
    fn fd_gradient(obj: &Objective, u: &[f64], step: f64) -> Vec<f64> {
        let mut g = vec![0.0; u.len()];
        let mut x = u.to_vec();
        for i in 0..u.len() {
            x[i] = u[i] + step;
            let fp = obj.smooth_value(&x);
            x[i] = u[i] - step;
            let fm = obj.smooth_value(&x);
            x[i] = u[i];
            g[i] = (fp - fm) / (2.0 * step);
        }
        g
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        linalg::norm2(&linalg::sub(a, b)) / linalg::norm2(b).max(1e-300)
    }

    #[test]
    fn linear_elliptic_basics() {
        let mesh = build_mesh_hierarchy(2, 2, 3).unwrap();
        let f = |p: [f64; 2]| 1.0 + p[0];
        let obj = make_linear_elliptic(&mesh, &Load::Function(&f)).unwrap();
        let z = vec![0.0; obj.dim()];
        assert_eq!(obj.energy(&z), 0.0);
        let g0 = obj.smooth_gradient(&z);
        assert!(g0.iter().zip(obj.load()).all(|(g, b)| *g == -b));
        let a = obj.matrix().unwrap().to_dense();
        let u = Cholesky::new(&a).unwrap().solve(obj.load());
        assert!(linalg::norm_inf(&obj.smooth_gradient(&u)) <= 1e-10);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mesh1 = build_mesh_hierarchy(1, 4, 4).unwrap();
        let mesh2 = build_mesh_hierarchy(2, 2, 3).unwrap();
        let one = |_: [f64; 2]| 1.0;
        for mesh in [&mesh1, &mesh2] {
            let mut objs = vec![make_linear_elliptic(mesh, &Load::Function(&one)).unwrap()];
            for s in [1.5, 3.0, 4.0] {
                objs.push(make_s_laplacian(mesh, s, &Load::Function(&one)).unwrap());
            }
            for obj in &objs {
                for _ in 0..20 {
                    let u = random_vec(&mut rng, obj.dim(), 1.0);
                    let err = rel_err(&fd_gradient(obj, &u, 1e-5), &obj.smooth_gradient(&u));
                    assert!(err <= 1e-6, "{:?}: {err}", obj.kind());
                }
            }
        }
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mesh = build_mesh_hierarchy(2, 2, 2).unwrap();
        let obj = make_s_laplacian(&mesh, 3.0, &Load::Vector(vec![0.0; 9])).unwrap();
        let u = random_vec(&mut rng, 9, 1.0);
        let h = obj.smooth_hessian(&u).to_dense();
        let step = 1e-6;
        for j in 0..9 {
            let mut up = u.clone();
            up[j] += step;
            let mut um = u.clone();
            um[j] -= step;
            let col = linalg::sub(&obj.smooth_gradient(&up), &obj.smooth_gradient(&um));
            for i in 0..9 {
                assert!((col[i] / (2.0 * step) - h[(i, j)]).abs() < 1e-5 * (1.0 + h[(i, j)].abs()));
            }
        }
    }

    #[test]
    fn s_laplacian_validation_and_exponents() {
        let mesh = build_mesh_hierarchy(1, 2, 2).unwrap();
        let zero = Load::Vector(vec![0.0; 3]);
        assert!(make_s_laplacian(&mesh, 2.0, &zero).is_err());
        assert!(make_s_laplacian(&mesh, 1.0, &zero).is_err());
        let o = make_s_laplacian(&mesh, 4.0, &zero).unwrap();
        assert_eq!((o.info().sharpness, o.info().smoothness), (4.0, 2.0));
        let o = make_s_laplacian(&mesh, 1.5, &zero).unwrap();
        assert_eq!((o.info().sharpness, o.info().smoothness), (2.0, 1.5));
        let z = vec![0.0; 3];
        assert_eq!(o.energy(&z), 0.0);
        assert!(o.smooth_gradient(&z).iter().all(|g| *g == 0.0));
    }

    #[test]
    fn s_laplacian_bregman_dominates_power_of_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mesh = build_mesh_hierarchy(1, 4, 2).unwrap();
        let obj = make_s_laplacian(&mesh, 4.0, &Load::Vector(vec![0.0; 7])).unwrap();
        let mut worst = f64::INFINITY;
        for _ in 0..100 {
            let u = random_vec(&mut rng, 7, 1.0);
            let v = random_vec(&mut rng, 7, 1.0);
            let d = obj.bregman(&u, &v);
            let nrm = obj.norm().distance(&u, &v);
            worst = worst.min(4.0 * d / libm::pow(nrm, 4.0));
        }
        assert!(worst > 0.0 && worst.is_finite());
    }

    #[test]
    fn quadratic_bregman_is_half_energy_of_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mesh = build_mesh_hierarchy(2, 2, 2).unwrap();
        let obj = make_linear_elliptic(&mesh, &Load::Vector(random_vec(&mut rng, 9, 1.0))).unwrap();
        let a = obj.matrix().unwrap().clone();
        for _ in 0..1000 {
            let u = random_vec(&mut rng, 9, 1.0);
            let v = random_vec(&mut rng, 9, 1.0);
            let d = obj.bregman(&u, &v);
            assert!(d >= 0.0);
            assert!((d - 0.5 * a.quadratic_form(&linalg::sub(&u, &v))).abs() <= 1e-12);
        }
        let u = random_vec(&mut rng, 9, 1.0);
        assert_eq!(obj.bregman(&u, &u), 0.0);
    }

    #[test]
    fn sharpness_with_smallest_stiffness_eigenvalue() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mesh = build_mesh_hierarchy(1, 4, 2).unwrap();
        let one = |_: [f64; 2]| 1.0;
        let obj = make_l1_obstacle(&mesh, &Load::Function(&one), 0.5).unwrap();
        let a = obj.matrix().unwrap().to_dense();
        let mu = linalg::symmetric_eigenvalues(&a, 1e-14, 100).unwrap()[0];
        for _ in 0..100 {
            let u = random_vec(&mut rng, 7, 2.0);
            let v = random_vec(&mut rng, 7, 2.0);
            let d = obj.bregman(&u, &v);
            let n = linalg::norm2(&linalg::sub(&u, &v));
            assert!(d >= 0.5 * mu * n * n * (1.0 - 1e-12));
        }
    }

    #[test]
    fn l1_term_is_lumped_mass_sum() {
        let mesh = build_mesh_hierarchy(2, 2, 2).unwrap();
        let one = |_: [f64; 2]| 1.0;
        let lam = 0.7;
        let obj = make_l1_obstacle(&mesh, &Load::Function(&one), lam).unwrap();
        let h = mesh.fine_h();
        let u: Vec<f64> = (0..9).map(|i| 0.1 * i as f64).collect();
        let expect = lam * h * h * u.iter().sum::<f64>();
        assert!((obj.nonsmooth_value(&u) - expect).abs() < 1e-14);
        // permuting evaluation order changes nothing
        let mut rev = 0.0;
        for x in (0..9).rev() {
            rev += obj.nonsmooth().node_value(x, u[x]);
        }
        assert!((rev - obj.nonsmooth_value(&u)).abs() < 1e-15);
        let lin = make_linear_elliptic(&mesh, &Load::Function(&one)).unwrap();
        let zero = make_l1_obstacle(&mesh, &Load::Function(&one), 0.0).unwrap();
        assert_eq!(lin.energy(&u), zero.energy(&u));
    }

    #[test]
    fn l1_convexity_on_midpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let mesh = build_mesh_hierarchy(1, 4, 2).unwrap();
        let obj = make_l1_obstacle(&mesh, &Load::Vector(vec![0.0; 7]), 1.0).unwrap();
        for _ in 0..200 {
            let u = random_vec(&mut rng, 7, 1.0);
            let v = random_vec(&mut rng, 7, 1.0);
            let mid: Vec<f64> = u.iter().zip(&v).map(|(a, b)| 0.5 * (a + b)).collect();
            let g = obj.nonsmooth();
            assert!(g.value(&mid) <= 0.5 * (g.value(&u) + g.value(&v)) + 1e-15);
        }
    }

    #[test]
    fn obstacle_indicator() {
        let mesh = build_mesh_hierarchy(1, 4, 2).unwrap();
        let bump = |p: [f64; 2]| 0.2 * (1.0 - 16.0 * (p[0] - 0.5) * (p[0] - 0.5));
        let obs = ObstacleData::from_function(&mesh, bump).unwrap();
        let obj = make_obstacle_constrained(&mesh, &Load::Vector(vec![0.0; 7]), &obs).unwrap();
        let u0 = obs.feasible_start();
        assert_eq!(obj.nonsmooth_value(&u0), 0.0);
        let mut bad = u0.clone();
        bad[3] = obs.values()[3] - 1e-3;
        assert_eq!(obj.nonsmooth_value(&bad), f64::INFINITY);
        assert!(!obj.is_feasible(&bad));
        let u1: Vec<f64> = u0.iter().map(|v| v + 0.5).collect();
        let mix: Vec<f64> = u0.iter().zip(&u1).map(|(a, b)| 0.3 * a + 0.7 * b).collect();
        assert!(obj.is_feasible(&mix));
        assert!(ObstacleData::from_function(&mesh, |_| 1.0).is_err());
    }

    #[test]
    fn block_separable_construction() {
        let id = DenseMatrix::identity(4);
        let bp = make_block_separable(&[2, 2], &id, &[0.0; 4], &[0.0, 0.0]).unwrap();
        assert!((bp.lipschitz - 1.0).abs() < 1e-14);
        assert_eq!(bp.objective.optimality_residual(&[0.0; 4]), 0.0);
        let indefinite = DenseMatrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(make_block_separable(&[2], &indefinite, &[0.0; 2], &[0.0]).is_err());
    }

    #[test]
    fn single_block_minimizer_matches_soft_threshold_diagonal_case() {
        // diagonal Q: the minimizer is coordinatewise soft(c_i, λ)/Q_ii
        let q = DenseMatrix::from_row_major(3, 3, vec![2.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 0.5]).unwrap();
        let c = [1.0, -0.2, 0.9];
        let lam = 0.3;
        let bp = make_block_separable(&[3], &q, &c, &[lam]).unwrap();
        let star: Vec<f64> = (0..3).map(|i| soft_threshold(c[i], lam) / q[(i, i)]).collect();
        assert!(bp.objective.optimality_residual(&star) < 1e-15);
    }

    #[test]
    fn descent_along_negative_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mesh = build_mesh_hierarchy(1, 4, 4).unwrap();
        let one = |_: [f64; 2]| 1.0;
        for s in [1.5, 4.0] {
            let obj = make_s_laplacian(&mesh, s, &Load::Function(&one)).unwrap();
            let u = random_vec(&mut rng, obj.dim(), 0.5);
            let g = obj.smooth_gradient(&u);
            let mut v = u.clone();
            linalg::axpy(-1e-6, &g, &mut v);
            assert!(obj.energy(&v) < obj.energy(&u));
        }
    }
}
