//! Subspace problems `min_w ⟨F′(v), R_k^* w⟩ + ω d_k(w, v) + G_k(w, v)`.

use alloc::vec;
use alloc::vec::Vec;

use super::{AsmConfig, LocalSolverKind};
use crate::decomposition::{Prolongation, SpaceSplitting, Subspace};
use crate::error::{check_len, invalid, Error, Result};
use crate::linalg::{self, dot, Cholesky, CsrMatrix, DenseMatrix};
use crate::objectives::{Nonsmooth, Objective};

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSolution {
    pub w: Vec<f64>,
    pub iterations: usize,
    /// Constraint decomposition only: the local variable measured from its
    /// decomposed obstacle, nonnegative by construction.
    pub shifted: Option<Vec<f64>>,
}

/// Per-node terms of a local problem, in local numbering.
#[derive(Debug, Clone)]
enum Pointwise {
    Free,
    Abs(Vec<f64>),
    Lower(Vec<f64>),
}

impl Pointwise {
    fn prox(&self, i: usize, z: f64, step: f64) -> f64 {
        match self {
            Pointwise::Free => z,
            Pointwise::Abs(w) => crate::objectives::soft_threshold(z, step * w[i]),
            Pointwise::Lower(lb) => z.max(lb[i]),
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self {
            Pointwise::Free => 0.0,
            Pointwise::Abs(w) => w.iter().zip(x).map(|(w, x)| w * x.abs()).sum(),
            Pointwise::Lower(lb) => {
                if x.iter().zip(lb).all(|(x, l)| x >= l) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// `None` if the node sits on a kink, otherwise the slope of its term.
    fn state(&self, i: usize, x: f64) -> Option<f64> {
        match self {
            Pointwise::Free => Some(0.0),
            Pointwise::Abs(w) => {
                if x == 0.0 {
                    None
                } else {
                    Some(w[i] * x.signum())
                }
            }
            Pointwise::Lower(lb) => {
                if x == lb[i] {
                    None
                } else {
                    Some(0.0)
                }
            }
        }
    }

    fn gather(g: &Nonsmooth, idx: &[usize]) -> Self {
        match g {
            Nonsmooth::Zero => Pointwise::Free,
            Nonsmooth::WeightedAbs(w) => Pointwise::Abs(idx.iter().map(|&i| w[i]).collect()),
            Nonsmooth::LowerObstacle(l) => Pointwise::Lower(idx.iter().map(|&i| l[i]).collect()),
        }
    }
}

/// Precomputed local data for one splitting, reused across outer iterations.
pub struct LocalEngine<'a> {
    objective: &'a Objective,
    spaces: &'a [Subspace],
    kind: LocalSolverKind,
    omega: f64,
    tol: f64,
    max_iters: usize,
    /// `ω Rᵀ A R` for quadratic objectives.
    local_mats: Vec<Option<DenseMatrix>>,
    factors: Vec<Option<Cholesky>>,
    regularizer: Option<CsrMatrix>,
}

impl<'a> LocalEngine<'a> {
    pub fn new(objective: &'a Objective, splitting: &'a dyn SpaceSplitting, config: &AsmConfig) -> Result<Self> {
        check_len(objective.dim(), splitting.global_dim())?;
        let spaces = splitting.subspaces();
        let mut local_mats = Vec::with_capacity(spaces.len());
        let mut factors = Vec::with_capacity(spaces.len());
        for space in spaces {
            match objective.matrix() {
                Some(a) => {
                    let mut m = local_matrix(a, space);
                    m.scale(config.omega);
                    factors.push(Some(Cholesky::new(&m)?));
                    local_mats.push(Some(m));
                }
                None => {
                    local_mats.push(None);
                    factors.push(None);
                }
            }
        }
        Ok(Self {
            objective,
            spaces,
            kind: config.local,
            omega: config.omega,
            tol: config.local_tol,
            max_iters: config.local_max_iters,
            local_mats,
            factors,
            regularizer: if objective.is_quadratic() {
                None
            } else {
                Some(objective.regularizer())
            },
        })
    }

    pub fn subspace_count(&self) -> usize {
        self.spaces.len()
    }

    /// Solves local problem `k` at `v`, given `F′(v)`.
    pub fn solve(&self, k: usize, v: &[f64], grad_v: &[f64]) -> Result<LocalSolution> {
        let space = self.spaces.get(k).ok_or(Error::IndexOutOfRange {
            index: k,
            len: self.spaces.len(),
        })?;
        let g_loc = space.restrict(grad_v);
        let g = self.objective.nonsmooth();
        let fail = |iterations: usize, residual: f64| Error::LocalSolveFailed {
            subspace: k,
            iterations,
            residual,
        };
        match self.kind {
            LocalSolverKind::Exact => match (self.objective.is_quadratic(), g.is_zero()) {
                (true, true) => {
                    let mut w: Vec<f64> = g_loc.iter().map(|x| -x).collect();
                    self.factors[k].as_ref().unwrap().solve_in_place(&mut w);
                    Ok(plain(w, 1))
                }
                (false, true) => self.newton(k, space, v, &g_loc),
                (true, false) => match space.prolongation() {
                    Prolongation::Indices(idx) => {
                        let v_loc: Vec<f64> = idx.iter().map(|&i| v[i]).collect();
                        let terms = Pointwise::gather(g, idx);
                        let (x, it) = pointwise_qp(self.local_mats[k].as_ref().unwrap(), &g_loc, &v_loc, &terms, self.tol, self.max_iters)
                            .map_err(|(it, r)| fail(it, r))?;
                        Ok(plain(linalg::sub(&x, &v_loc), it))
                    }
                    Prolongation::Matrix(p) => self.admm(k, p, v, &g_loc),
                },
                (false, false) => Err(Error::Unsupported(
                    "exact local solves for a non-quadratic smooth part with a nonsmooth term".into(),
                )),
            },
            LocalSolverKind::BcdSurrogate => {
                let idx = space
                    .indices()
                    .ok_or_else(|| Error::Unsupported("block surrogate needs index subspaces".into()))?;
                let w = idx
                    .iter()
                    .zip(&g_loc)
                    .map(|(&i, gi)| g.node_prox(i, v[i] - gi / self.omega, 1.0 / self.omega) - v[i])
                    .collect();
                Ok(plain(w, 1))
            }
            LocalSolverKind::ConstraintDecomposition => {
                let obstacle = g
                    .obstacle()
                    .ok_or_else(|| invalid("constraint decomposition needs a lower obstacle"))?;
                if !self.objective.is_quadratic() {
                    return Err(Error::Unsupported("constraint decomposition with a non-quadratic energy".into()));
                }
                let (idx, theta) = match (space.indices(), space.weights()) {
                    (Some(i), Some(t)) => (i, t),
                    _ => return Err(invalid("constraint decomposition needs weighted index subspaces")),
                };
                let v_loc: Vec<f64> = idx.iter().map(|&i| v[i]).collect();
                // decomposed bound: θ_k v + w ≥ θ_k g̲, written for x = v + w
                let lb: Vec<f64> = idx
                    .iter()
                    .zip(theta)
                    .map(|(&i, t)| v[i] - t * (v[i] - obstacle[i]))
                    .collect();
                let terms = Pointwise::Lower(lb.clone());
                let (x, it) = pointwise_qp(self.local_mats[k].as_ref().unwrap(), &g_loc, &v_loc, &terms, self.tol, self.max_iters)
                    .map_err(|(it, r)| fail(it, r))?;
                let shifted = x.iter().zip(&lb).map(|(x, l)| x - l).collect();
                Ok(LocalSolution {
                    w: linalg::sub(&x, &v_loc),
                    iterations: it,
                    shifted: Some(shifted),
                })
            }
        }
    }

    /// Damped Newton with Levenberg-Marquardt regularization on a smooth local problem.
    fn newton(&self, k: usize, space: &Subspace, v: &[f64], g_loc: &[f64]) -> Result<LocalSolution> {
        let obj = self.objective;
        let om = self.omega;
        let n = obj.dim();
        let point = |w: &[f64]| {
            let mut x = v.to_vec();
            space.prolong_add(1.0, w, &mut x);
            x
        };
        let phi = |w: &[f64]| om * obj.smooth_value(&point(w)) - (om - 1.0) * dot(g_loc, w);
        let grad = |w: &[f64]| {
            let mut gr = space.restrict(&obj.smooth_gradient(&point(w)));
            for (a, b) in gr.iter_mut().zip(g_loc) {
                *a = om * *a - (om - 1.0) * b;
            }
            gr
        };
        let reg = local_matrix(self.regularizer.as_ref().unwrap(), space);
        let reg_trace = reg.trace().max(f64::MIN_POSITIVE);
        let mut w = vec![0.0; space.dim()];
        let mut f = phi(&w);
        let mut gr = grad(&w);
        let mut mu: f64 = 0.0;
        debug_assert_eq!(v.len(), n);
        for it in 0..self.max_iters {
            let gnorm = linalg::norm_inf(&gr);
            if gnorm <= self.tol {
                return Ok(plain(w, it));
            }
            let mut h = local_matrix(&obj.smooth_hessian(&point(&w)), space);
            h.scale(om);
            let mu_min = 1e-12 * (h.trace() / reg_trace).max(1e-4);
            let mut accepted = false;
            for _ in 0..80 {
                let mut m = h.clone();
                if mu > 0.0 {
                    m.add_scaled(mu, &reg);
                }
                let Ok(ch) = Cholesky::new(&m) else {
                    mu = (10.0 * mu).max(mu_min);
                    continue;
                };
                let d: Vec<f64> = ch.solve(&gr).iter().map(|x| -x).collect();
                let slope = dot(&gr, &d);
                let cand: Vec<f64> = w.iter().zip(&d).map(|(a, b)| a + b).collect();
                let fc = phi(&cand);
                let armijo = fc <= f + 1e-4 * slope;
                let flat = (fc - f).abs() <= 1e-14 * (1.0 + f.abs());
                let gc = if armijo || flat { Some(grad(&cand)) } else { None };
                let ok = armijo || (flat && linalg::norm_inf(gc.as_ref().unwrap()) < gnorm);
                if ok {
                    w = cand;
                    f = fc;
                    gr = gc.unwrap();
                    mu = if mu / 10.0 < mu_min { 0.0 } else { mu / 10.0 };
                    accepted = true;
                    break;
                }
                mu = (10.0 * mu).max(mu_min);
            }
            if !accepted {
                return Err(Error::LocalSolveFailed {
                    subspace: k,
                    iterations: it,
                    residual: gnorm,
                });
            }
        }
        let residual = linalg::norm_inf(&gr);
        if residual <= self.tol {
            Ok(plain(w, self.max_iters))
        } else {
            Err(Error::LocalSolveFailed {
                subspace: k,
                iterations: self.max_iters,
                residual,
            })
        }
    }

    /// ADMM on `min ½ wᵀ a w + gᵀ w + G(v + P w)` for a matrix subspace.
    fn admm(&self, k: usize, p: &CsrMatrix, v: &[f64], g_loc: &[f64]) -> Result<LocalSolution> {
        let a = self.local_mats[k].as_ref().unwrap();
        let ptp = CsrMatrix::identity(p.rows()).congruence(p);
        let factor = |rho: f64| {
            let mut kmat = a.clone();
            kmat.add_scaled(rho, &ptp);
            Cholesky::new(&kmat)
        };
        let mut rho = a.trace() / ptp.trace().max(f64::MIN_POSITIVE);
        let mut kch = factor(rho)?;
        let mut rescales = 0;
        let slack = 1e-12 * (1.0 + linalg::norm_inf(g_loc) + linalg::norm_inf(v));
        let mut last_pattern: Option<Vec<bool>> = None;
        let mut tried: Option<Vec<bool>> = None;
        let mut polished = None;
        let g = self.objective.nonsmooth();
        let n = v.len();
        let mut z = v.to_vec();
        let mut y = vec![0.0; n];
        let mut w = vec![0.0; a.rows()];
        let cap = self.max_iters * 40;
        let mut converged = false;
        let mut iters = 0;
        let mut residual = f64::INFINITY;
        let mut checkpoint = f64::INFINITY;
        for it in 0..cap {
            iters = it + 1;
            let t: Vec<f64> = (0..n).map(|i| z[i] - v[i] - y[i]).collect();
            let mut rhs = p.transpose_mul_vec(&t);
            for (r, gi) in rhs.iter_mut().zip(g_loc) {
                *r = rho * *r - gi;
            }
            kch.solve_in_place(&mut rhs);
            w = rhs;
            let pw = p.mul_vec(&w);
            let mut primal: f64 = 0.0;
            let mut dz = vec![0.0; n];
            for i in 0..n {
                let q = v[i] + pw[i];
                let zn = g.node_prox(i, q + y[i], 1.0 / rho);
                y[i] += q - zn;
                primal = primal.max((q - zn).abs());
                dz[i] = zn - z[i];
                z[i] = zn;
            }
            let dual = rho * linalg::norm_inf(&p.transpose_mul_vec(&dz));
            residual = primal.max(dual);
            if residual <= self.tol {
                converged = true;
                break;
            }
            // a frozen primal gap with no dual motion: further iterations only
            // grow y at nodes the subspace cannot reach
            if it % STALL_WINDOW == STALL_WINDOW - 1 {
                let frozen = (primal - checkpoint).abs() <= 1e-3 * primal;
                if frozen && dual <= self.tol && primal <= STALL_FACTOR * self.tol {
                    converged = true;
                    break;
                }
                checkpoint = primal;
            }
            let pattern = kink_pattern(g, &z);
            let near = residual <= POLISH_START * (1.0 + linalg::norm_inf(g_loc));
            if near && last_pattern.as_ref() == Some(&pattern) && tried.as_ref() != Some(&pattern) {
                let q: Vec<f64> = v.iter().zip(&pw).map(|(a, b)| a + b).collect();
                let guess = KinkGuess {
                    z: &z,
                    q: &q,
                    dual: &y,
                    pattern: &pattern,
                };
                if let Some(exact) = polish_matrix_subspace(a, p, g_loc, v, g, &guess, slack) {
                    polished = Some(exact);
                    break;
                }
                tried = Some(pattern.clone());
            }
            last_pattern = Some(pattern);
            // residual balancing; y is the scaled dual, so it rescales with 1/ρ
            if rescales < MAX_PENALTY_RESCALES && (primal > 10.0 * dual || dual > 10.0 * primal) {
                let step = if primal > dual { 2.0 } else { 0.5 };
                rho *= step;
                y.iter_mut().for_each(|x| *x /= step);
                kch = factor(rho)?;
                rescales += 1;
            }
        }
        if let Some(exact) = polished {
            w = exact;
            converged = true;
        }
        if !converged {
            return Err(Error::LocalSolveFailed {
                subspace: k,
                iterations: iters,
                residual,
            });
        }
        let mut pw = p.mul_vec(&w);
        if let Some(lb) = g.obstacle() {
            // largest feasible fraction of the step from the feasible v
            let mut t: f64 = 1.0;
            for i in 0..n {
                if pw[i] < 0.0 && v[i] + pw[i] < lb[i] {
                    t = t.min(((v[i] - lb[i]) / -pw[i]).max(0.0));
                }
            }
            if t < 1.0 {
                w.iter_mut().for_each(|x| *x *= t);
                pw = p.mul_vec(&w);
            }
        }
        let x: Vec<f64> = v.iter().zip(&pw).map(|(a, b)| a + b).collect();
        let model = 0.5 * dot(&w, &a.mul_vec(&w)) + dot(g_loc, &w) + g.value(&x);
        if !(model <= g.value(v)) {
            w.iter_mut().for_each(|x| *x = 0.0);
        }
        Ok(plain(w, iters))
    }
}

const MAX_PENALTY_RESCALES: usize = 200;
const STALL_WINDOW: usize = 500;
/// Largest primal residual, in units of the tolerance, accepted from a stalled ADMM.
const STALL_FACTOR: f64 = 100.0;
/// ADMM residual below which kink patterns are worth polishing.
const POLISH_START: f64 = 1e-6;

/// Nodes of `z` sitting on the kink of their pointwise term.
fn kink_pattern(g: &Nonsmooth, z: &[f64]) -> Vec<bool> {
    match g {
        Nonsmooth::Zero => vec![false; z.len()],
        Nonsmooth::WeightedAbs(_) => z.iter().map(|&x| x == 0.0).collect(),
        Nonsmooth::LowerObstacle(l) => z.iter().zip(l).map(|(x, l)| x == l).collect(),
    }
}

/// ADMM state used to guess the kink structure of the local minimizer.
struct KinkGuess<'a> {
    /// Split variable; exact kinks come from its prox step.
    z: &'a [f64],
    /// `v + P w` for the current `w`.
    q: &'a [f64],
    /// Scaled multipliers; larger means more firmly pinned.
    dual: &'a [f64],
    pattern: &'a [bool],
}

/// Exact minimizer of `½ wᵀ a w + gᵀ w + G(v + P w)` by a primal active-set
/// loop seeded with the ADMM kink structure: pinned nodes whose multiplier
/// leaves its range are released, free nodes that cross their kink are pinned.
/// When the pinned rows are inconsistent, a maximal independent subset is kept,
/// firmest first. Returns `None` unless the loop ends at a point passing the
/// full optimality check.
fn polish_matrix_subspace(
    a: &DenseMatrix,
    p: &CsrMatrix,
    g_loc: &[f64],
    v: &[f64],
    g: &Nonsmooth,
    guess: &KinkGuess<'_>,
    slack: f64,
) -> Option<Vec<f64>> {
    let nc = a.rows();
    let n = v.len();
    let mut pinned = guess.pattern.to_vec();
    let mut signs: Vec<f64> = (0..n)
        .map(|i| if guess.pattern[i] { guess.q[i].signum() } else { guess.z[i].signum() })
        .collect();
    let mut reduced = 0;
    for _ in 0..4 + 2 * n {
        match solve_kink_pattern(a, p, g_loc, v, g, &pinned, &signs, slack) {
            KinkOutcome::Optimal(w) => return Some(w),
            KinkOutcome::Inconsistent if reduced < n => {
                let mut kinks: Vec<usize> = (0..n).filter(|&i| pinned[i]).collect();
                kinks.sort_by(|&i, &j| guess.dual[j].abs().total_cmp(&guess.dual[i].abs()));
                for (&i, keep) in kinks.iter().zip(independent_rows(p, &kinks, nc)) {
                    pinned[i] = keep;
                }
                reduced += 1;
            }
            KinkOutcome::Inconsistent => return None,
            KinkOutcome::Release(i, mu) => {
                pinned[i] = false;
                signs[i] = -mu.signum();
            }
            KinkOutcome::Pin(i) => pinned[i] = true,
        }
    }
    None
}

/// Rows of `p` as dense vectors.
fn dense_row(p: &CsrMatrix, i: usize, nc: usize) -> Vec<f64> {
    let (cols, vals) = p.row(i);
    let mut row = vec![0.0; nc];
    for (&c, &pv) in cols.iter().zip(vals) {
        row[c] = pv;
    }
    row
}

/// Greedy Gram-Schmidt: for each row in order, whether it is independent of the earlier ones.
fn independent_rows(p: &CsrMatrix, order: &[usize], nc: usize) -> Vec<bool> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    order
        .iter()
        .map(|&i| {
            let mut row = dense_row(p, i, nc);
            let size = linalg::norm2(&row);
            for b in &basis {
                let d = dot(b, &row);
                linalg::axpy(-d, b, &mut row);
            }
            let rest = linalg::norm2(&row);
            let keep = rest > 1e-8 * size;
            if keep {
                row.iter_mut().for_each(|x| *x /= rest);
                basis.push(row);
            }
            keep
        })
        .collect()
}

enum KinkOutcome {
    Optimal(Vec<f64>),
    /// The pinned rows admit no common solution.
    Inconsistent,
    /// Pinned node whose multiplier left its range.
    Release(usize, f64),
    /// Free node that crossed its kink.
    Pin(usize),
}

/// Solves with `pinned` nodes held at their kink and the others on the smooth
/// branch given by `signs`, then checks optimality.
#[allow(clippy::too_many_arguments)]
fn solve_kink_pattern(
    a: &DenseMatrix,
    p: &CsrMatrix,
    g_loc: &[f64],
    v: &[f64],
    g: &Nonsmooth,
    pinned: &[bool],
    signs: &[f64],
    slack: f64,
) -> KinkOutcome {
    let (n, nc) = (v.len(), a.rows());
    let kink = |i: usize| match g {
        Nonsmooth::LowerObstacle(l) => l[i],
        _ => 0.0,
    };
    let mut slopes = vec![0.0; n];
    let mut btb = DenseMatrix::zeros(nc, nc);
    let mut bt_target = vec![0.0; nc];
    for i in 0..n {
        let (cols, vals) = p.row(i);
        if pinned[i] {
            let t = kink(i) - v[i];
            for (&c1, &p1) in cols.iter().zip(vals) {
                bt_target[c1] += p1 * t;
                for (&c2, &p2) in cols.iter().zip(vals) {
                    btb[(c1, c2)] += p1 * p2;
                }
            }
        } else if let Nonsmooth::WeightedAbs(wt) = g {
            if signs[i] == 0.0 {
                return KinkOutcome::Pin(i);
            }
            slopes[i] = wt[i] * signs[i];
        }
    }
    let mut c = p.transpose_mul_vec(&slopes);
    for (ci, gi) in c.iter_mut().zip(g_loc) {
        *ci += gi;
    }
    let Ok((evals, evecs)) = crate::linalg::symmetric_eigen(&btb, 1e-15, 100) else {
        return KinkOutcome::Inconsistent;
    };
    let cut = 1e-10 * evals.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let column = |j: usize| -> Vec<f64> { (0..nc).map(|r| evecs[(r, j)]).collect() };
    let range: Vec<usize> = (0..nc).filter(|&j| evals[j] > cut).collect();
    let null: Vec<Vec<f64>> = (0..nc).filter(|&j| evals[j] <= cut).map(column).collect();
    // (BᵀB)⁺ y on the range of BᵀB
    let pinv = |y: &[f64]| {
        let mut out = vec![0.0; nc];
        for &j in &range {
            let e = column(j);
            linalg::axpy(dot(&e, y) / evals[j], &e, &mut out);
        }
        out
    };
    let mut w = pinv(&bt_target);
    if !null.is_empty() {
        let aw = a.mul_vec(&w);
        let k = null.len();
        let an: Vec<Vec<f64>> = null.iter().map(|e| a.mul_vec(e)).collect();
        let mut h = DenseMatrix::zeros(k, k);
        let mut rhs = vec![0.0; k];
        for r in 0..k {
            for q in 0..k {
                h[(r, q)] = dot(&null[r], &an[q]);
            }
            rhs[r] = -(dot(&null[r], &aw) + dot(&null[r], &c));
        }
        let Ok(hc) = Cholesky::new(&h) else {
            return KinkOutcome::Inconsistent;
        };
        let y = hc.solve(&rhs);
        for (e, yr) in null.iter().zip(&y) {
            linalg::axpy(*yr, e, &mut w);
        }
    }
    let pw = p.mul_vec(&w);
    // stationarity a w + c + Bᵀ μ = 0 with the least-norm μ = B (BᵀB)⁺ (−r)
    let mut r = a.mul_vec(&w);
    for (ri, ci) in r.iter_mut().zip(&c) {
        *ri = -(*ri + ci);
    }
    let s = pinv(&r);
    let mut btmu = vec![0.0; nc];
    let mut worst_mult: Option<(usize, f64, f64)> = None;
    let mut crossed = None;
    for i in 0..n {
        let x = v[i] + pw[i];
        let (cols, vals) = p.row(i);
        if pinned[i] {
            if (x - kink(i)).abs() > slack {
                return KinkOutcome::Inconsistent;
            }
            let mu: f64 = cols.iter().zip(vals).map(|(&c, &pv)| pv * s[c]).sum();
            let excess = match g {
                Nonsmooth::WeightedAbs(wt) => mu.abs() - wt[i],
                Nonsmooth::LowerObstacle(_) => mu,
                Nonsmooth::Zero => 0.0,
            };
            if excess > slack && worst_mult.is_none_or(|(_, _, e)| excess > e) {
                worst_mult = Some((i, mu, excess));
            }
            for (&c, &pv) in cols.iter().zip(vals) {
                btmu[c] += pv * mu;
            }
        } else {
            let ok = match g {
                Nonsmooth::WeightedAbs(_) => x != 0.0 && x.signum() == signs[i],
                Nonsmooth::LowerObstacle(l) => x >= l[i],
                Nonsmooth::Zero => true,
            };
            if !ok && crossed.is_none() {
                crossed = Some(i);
            }
        }
    }
    let stationary = btmu.iter().zip(&r).all(|(b, r)| (b - r).abs() <= slack * (1.0 + r.abs()));
    if let Some(i) = crossed {
        return KinkOutcome::Pin(i);
    }
    if let Some((i, mu, _)) = worst_mult {
        return KinkOutcome::Release(i, mu);
    }
    if stationary {
        KinkOutcome::Optimal(w)
    } else {
        KinkOutcome::Inconsistent
    }
}

fn plain(w: Vec<f64>, iterations: usize) -> LocalSolution {
    LocalSolution {
        w,
        iterations,
        shifted: None,
    }
}

/// `Rᵀ A R` as a dense matrix.
fn local_matrix(a: &CsrMatrix, space: &Subspace) -> DenseMatrix {
    match space.prolongation() {
        Prolongation::Indices(idx) => a.principal_submatrix(idx),
        Prolongation::Matrix(p) => a.congruence(p),
    }
}

/// Minimizes `½ dᵀ a d + gᵀ d + Σ G_i(x_i)` over `x = v + d` by Gauss-Seidel
/// with closed-form node updates, finishing with an active-set solve when
/// the kink pattern has settled. Errors carry `(iterations, last change)`.
fn pointwise_qp(
    a: &DenseMatrix,
    g: &[f64],
    v: &[f64],
    terms: &Pointwise,
    tol: f64,
    max_sweeps: usize,
) -> core::result::Result<(Vec<f64>, usize), (usize, f64)> {
    let n = v.len();
    let mut x = v.to_vec();
    // gradient of the smooth part at the current x
    let mut r = g.to_vec();
    let mut last_pattern: Option<Vec<bool>> = None;
    let mut tried: Option<Vec<bool>> = None;
    let scale = 1.0 + linalg::norm_inf(g);
    let mut change = f64::INFINITY;
    for sweep in 1..=max_sweeps {
        change = 0.0;
        for i in 0..n {
            let aii = a[(i, i)];
            let d_old = x[i] - v[i];
            let c = r[i] - aii * d_old;
            let xi = terms.prox(i, v[i] - c / aii, 1.0 / aii);
            let delta = (xi - v[i]) - d_old;
            if delta != 0.0 {
                x[i] = xi;
                let col = a.row(i);
                for (rj, aj) in r.iter_mut().zip(col) {
                    *rj += aj * delta;
                }
                change = change.max(delta.abs());
            }
        }
        let pattern: Vec<bool> = (0..n).map(|i| terms.state(i, x[i]).is_none()).collect();
        let settled = last_pattern.as_ref() == Some(&pattern);
        if (settled || change <= tol) && tried.as_ref() != Some(&pattern) {
            if let Some(polished) = active_set_solve(a, g, v, terms, &x, &pattern, scale) {
                return Ok((polished, sweep));
            }
            tried = Some(pattern.clone());
        }
        if change <= tol {
            return Ok((x, sweep));
        }
        last_pattern = Some(pattern);
    }
    Err((max_sweeps, change))
}

/// Solves the smooth system with kink nodes frozen and accepts the result if it
/// satisfies every node's optimality condition.
fn active_set_solve(a: &DenseMatrix, g: &[f64], v: &[f64], terms: &Pointwise, x: &[f64], fixed: &[bool], scale: f64) -> Option<Vec<f64>> {
    let n = v.len();
    let free: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
    let mut out = x.to_vec();
    if !free.is_empty() {
        let mut sub = DenseMatrix::zeros(free.len(), free.len());
        let mut rhs = vec![0.0; free.len()];
        for (li, &i) in free.iter().enumerate() {
            for (lj, &j) in free.iter().enumerate() {
                sub[(li, lj)] = a[(i, j)];
            }
            let slope = terms.state(i, x[i]).unwrap();
            let mut s = -g[i] - slope;
            for j in 0..n {
                if fixed[j] {
                    s -= a[(i, j)] * (x[j] - v[j]);
                }
            }
            rhs[li] = s;
        }
        let d = Cholesky::new(&sub).ok()?.solve(&rhs);
        for (li, &i) in free.iter().enumerate() {
            let xi = v[i] + d[li];
            // the free node must keep its smooth branch
            match terms {
                Pointwise::Free => {}
                Pointwise::Abs(_) => {
                    if xi == 0.0 || xi.signum() != x[i].signum() {
                        return None;
                    }
                }
                Pointwise::Lower(lb) => {
                    if xi < lb[i] {
                        return None;
                    }
                }
            }
            out[i] = xi;
        }
    }
    let slack = 1e-12 * scale;
    let dvec: Vec<f64> = out.iter().zip(v).map(|(a, b)| a - b).collect();
    let grad = a.mul_vec(&dvec);
    for i in 0..n {
        if !fixed[i] {
            continue;
        }
        let ri = g[i] + grad[i];
        let ok = match terms {
            Pointwise::Free => ri.abs() <= slack,
            Pointwise::Abs(w) => ri.abs() <= w[i] + slack,
            Pointwise::Lower(_) => ri >= -slack,
        };
        if !ok {
            return None;
        }
    }
    debug_assert!(terms.value(&out).is_finite());
    Some(out)
}

/// One local solve without a reusable engine.
pub fn solve_local(objective: &Objective, splitting: &dyn SpaceSplitting, k: usize, v: &[f64], config: &AsmConfig) -> Result<LocalSolution> {
    check_len(objective.dim(), v.len())?;
    let engine = LocalEngine::new(objective, splitting, config)?;
    let grad = objective.smooth_gradient(v);
    engine.solve(k, v, &grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::build_decomposition;
    use crate::mesh::build_mesh_hierarchy;
    use crate::objectives::{make_l1_obstacle, make_linear_elliptic, make_s_laplacian, Load};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn quadratic_local_matches_direct_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mesh = build_mesh_hierarchy(1, 8, 4).unwrap();
        let one = |_: [f64; 2]| 1.0;
        let obj = make_linear_elliptic(&mesh, &Load::Function(&one)).unwrap();
        let dec = build_decomposition(&mesh, &[4], 1, false).unwrap();
        let cfg = AsmConfig::exact(0.5, 1);
        let v = random_vec(&mut rng, obj.dim());
        for k in 0..4 {
            let sol = solve_local(&obj, &dec, k, &v, &cfg).unwrap();
            // oracle: min E(v + R w) ⇔ A_kk w = (b − A v)_k
            let idx = dec.dofs(k).unwrap();
            let a = obj.matrix().unwrap();
            let res = linalg::sub(obj.load(), &a.mul_vec(&v));
            let rhs: Vec<f64> = idx.iter().map(|&i| res[i]).collect();
            let w = Cholesky::new(&a.principal_submatrix(idx)).unwrap().solve(&rhs);
            assert!(linalg::max_abs_diff(&sol.w, &w) <= 1e-10);
        }
    }

    #[test]
    fn zero_gradient_gives_zero_correction() {
        let mesh = build_mesh_hierarchy(1, 4, 2).unwrap();
        let obj = make_l1_obstacle(&mesh, &Load::Vector(vec![0.0; 7]), 1.0).unwrap();
        let dec = build_decomposition(&mesh, &[2], 1, false).unwrap();
        let cfg = AsmConfig::exact(0.5, 1);
        let sol = solve_local(&obj, &dec, 0, &[0.0; 7], &cfg).unwrap();
        assert!(sol.w.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn l1_local_problem_satisfies_node_optimality() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        // 1D, m=2, r=2: one subdomain holding all three dofs
        let mesh = build_mesh_hierarchy(1, 2, 2).unwrap();
        let f = |p: [f64; 2]| 20.0 * libm::sin(6.0 * p[0]);
        let obj = make_l1_obstacle(&mesh, &Load::Function(&f), 0.5).unwrap();
        let dec = build_decomposition(&mesh, &[1], 1, false).unwrap();
        assert_eq!(dec.dofs(0).unwrap().len(), 3);
        let cfg = AsmConfig::exact(1.0, 1);
        let weights = match obj.nonsmooth() {
            Nonsmooth::WeightedAbs(w) => w.clone(),
            _ => unreachable!(),
        };
        for _ in 0..20 {
            let v = random_vec(&mut rng, 3);
            let sol = solve_local(&obj, &dec, 0, &v, &cfg).unwrap();
            let x: Vec<f64> = v.iter().zip(&sol.w).map(|(a, b)| a + b).collect();
            let g = obj.smooth_gradient(&x);
            for i in 0..3 {
                // subgradient inclusion 0 ∈ g_i + w_i ∂|x_i|, checked coordinatewise
                if x[i] == 0.0 {
                    assert!(g[i].abs() <= weights[i] + 1e-8);
                } else {
                    assert!((g[i] + weights[i] * x[i].signum()).abs() <= 1e-8);
                }
            }
        }
    }

    #[test]
    fn newton_solves_s_laplacian_local_problem() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mesh = build_mesh_hierarchy(1, 4, 4).unwrap();
        let one = |_: [f64; 2]| 1.0;
        for s in [1.5, 4.0] {
            let obj = make_s_laplacian(&mesh, s, &Load::Function(&one)).unwrap();
            let dec = build_decomposition(&mesh, &[2], 2, true).unwrap();
            let cfg = AsmConfig::exact(1.0 / 3.0, 1);
            let v = random_vec(&mut rng, obj.dim());
            for k in 0..3 {
                let sol = solve_local(&obj, &dec, k, &v, &cfg).unwrap();
                let x = {
                    let mut x = v.clone();
                    dec.subspaces()[k].prolong_add(1.0, &sol.w, &mut x);
                    x
                };
                let g = dec.subspaces()[k].restrict(&obj.smooth_gradient(&x));
                assert!(linalg::norm_inf(&g) <= 1e-10, "s={s} k={k}");
            }
        }
    }

    #[test]
    fn coarse_admm_decreases_local_model() {
        let mesh = build_mesh_hierarchy(2, 4, 2).unwrap();
        let f = |p: [f64; 2]| 10.0 * libm::sin(3.0 * p[0]) * libm::cos(2.0 * p[1]);
        let obj = make_l1_obstacle(&mesh, &Load::Function(&f), 0.5).unwrap();
        let dec = build_decomposition(&mesh, &[2, 2], 1, true).unwrap();
        let cfg = AsmConfig::exact(0.2, 1);
        let v = vec![0.0; obj.dim()];
        let k = dec.subspaces().len() - 1;
        let sol = solve_local(&obj, &dec, k, &v, &cfg).unwrap();
        let mut x = v.clone();
        dec.subspaces()[k].prolong_add(1.0, &sol.w, &mut x);
        assert!(obj.energy(&x) <= obj.energy(&v));
    }

    #[test]
    fn coarse_solution_is_a_local_minimizer() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mesh = build_mesh_hierarchy(2, 4, 3).unwrap();
        let f = |p: [f64; 2]| 20.0 * libm::sin(2.0 * core::f64::consts::PI * p[0]) * (1.0 + p[1]);
        let obj = make_l1_obstacle(&mesh, &Load::Function(&f), 1.0).unwrap();
        let dec = build_decomposition(&mesh, &[2, 2], 1, true).unwrap();
        let cfg = AsmConfig::exact(0.2, 1);
        let k = dec.subspaces().len() - 1;
        let space = &dec.subspaces()[k];
        let at = |v: &[f64], w: &[f64]| {
            let mut x = v.to_vec();
            space.prolong_add(1.0, w, &mut x);
            obj.energy(&x)
        };
        for _ in 0..10 {
            let v: Vec<f64> = random_vec(&mut rng, obj.dim()).iter().map(|x| 0.05 * x).collect();
            let sol = solve_local(&obj, &dec, k, &v, &cfg).unwrap();
            let best = at(&v, &sol.w);
            for eps in [1e-2, 1e-4, 1e-6] {
                let d = random_vec(&mut rng, space.dim());
                let w: Vec<f64> = sol.w.iter().zip(&d).map(|(w, d)| w + eps * d).collect();
                assert!(at(&v, &w) >= best - 1e-12 * (1.0 + best.abs()));
            }
        }
    }
}
