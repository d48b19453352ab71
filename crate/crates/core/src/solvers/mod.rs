//! Iterative methods: the abstract gradient method and its additive Schwarz,
//! block coordinate descent and constraint decomposition instances.

use alloc::vec::Vec;

use crate::error::{invalid, Result};

pub mod asm;
pub mod bcd;
pub mod constraint;
pub mod gradient;
pub mod local;
pub mod reference;

pub use asm::{asm_solve, asm_step, AsmSurrogate};
pub use bcd::bcd_solve;
pub use constraint::constraint_decomposition_solve;
pub use gradient::{gradient_method, ProximalSurrogate, StepOutcome, Surrogate};
pub use local::{solve_local, LocalEngine, LocalSolution};
pub use reference::{compute_reference, Reference, ReferenceOptions};

/// Which local model each subspace minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalSolverKind {
    /// `d_k = D_F(v + R_k^* w, v)`, `G_k = G(v + R_k^* w)`; `ω0 = 1`.
    Exact,
    /// `d_k = ½‖w‖²` with the block part of `G`; `ω0 = L`.
    BcdSurrogate,
    /// Exact `d_k` with the decomposed one-obstacle constraint; `ω0 = 1`.
    ConstraintDecomposition,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Run the whole budget.
    Budget,
    /// Stop once `E(u) − E(u*)` falls to the threshold (needs a reference).
    EnergyError(f64),
}

/// Step, local model and budget of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct AsmConfig {
    pub tau: f64,
    pub omega: f64,
    pub local: LocalSolverKind,
    pub local_tol: f64,
    pub local_max_iters: usize,
    pub budget: usize,
    pub stop: StopRule,
    /// Skip the `τ ≤ τ0` check (unsafe; for divergence demonstrations).
    pub allow_large_tau: bool,
}

impl AsmConfig {
    pub const DEFAULT_LOCAL_TOL: f64 = 1e-10;

    pub fn new(tau: f64, omega: f64, local: LocalSolverKind, budget: usize) -> Self {
        Self {
            tau,
            omega,
            local,
            local_tol: Self::DEFAULT_LOCAL_TOL,
            local_max_iters: 500,
            budget,
            stop: StopRule::Budget,
            allow_large_tau: false,
        }
    }

    /// Exact local solvers with `τ = τ0` and `ω = 1`.
    pub fn exact(tau0: f64, budget: usize) -> Self {
        Self::new(tau0, 1.0, LocalSolverKind::Exact, budget)
    }

    pub fn with_stop(mut self, stop: StopRule) -> Self {
        self.stop = stop;
        self
    }

    pub fn with_local_tol(mut self, tol: f64) -> Self {
        self.local_tol = tol;
        self
    }

    pub fn validate(&self, tau0: f64, omega0: f64) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(invalid(alloc::format!("step must be positive, got {}", self.tau)));
        }
        if !self.allow_large_tau && self.tau > tau0 * (1.0 + 1e-12) {
            return Err(invalid(alloc::format!(
                "step {} exceeds the coloring bound tau0 = {tau0} (1/N_c one-level, 1/(N_c+1) two-level)",
                self.tau
            )));
        }
        if !(self.omega >= omega0 * (1.0 - 1e-12)) {
            return Err(invalid(alloc::format!(
                "omega {} is below the local stability constant {omega0}",
                self.omega
            )));
        }
        if !(self.local_tol > 0.0) || self.local_max_iters == 0 {
            return Err(invalid("local tolerance and iteration cap must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub energy: f64,
    pub energy_error: Option<f64>,
    pub local_iters_max: usize,
    pub wall_ms: f64,
}

/// Energies and iterates of one run; `records[n]` belongs to `u^{(n)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub iterates: Vec<Vec<f64>>,
}

impl IterationTrace {
    pub fn final_iterate(&self) -> &[f64] {
        self.iterates.last().expect("trace always holds the initial iterate")
    }

    pub fn energies(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.energy).collect()
    }

    pub fn energy_errors(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.energy_error).collect()
    }

    /// Largest relative energy increase between consecutive iterates.
    pub fn worst_increase(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| (w[1].energy - w[0].energy) / (1.0 + w[0].energy.abs()))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Monotonicity check with slack `1e-12 (1 + |E|)`.
    pub fn is_monotone(&self) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].energy <= w[0].energy + 1e-12 * (1.0 + w[0].energy.abs()))
    }
}

/// Millisecond clock supplied by the caller; the core never reads time itself.
pub trait Clock {
    fn now_ms(&mut self) -> f64;
}

/// Always reports zero, which keeps traces byte-reproducible.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now_ms(&mut self) -> f64 {
        0.0
    }
}
