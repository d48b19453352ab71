//! Building and running one experiment in memory.

use std::time::Instant;

use log::{debug, warn};
use schwarz_core::analysis::{
    check_sharp_bound, estimate_c0, estimate_sublevel, fit_rate, linear_rate_bound, schwarz_condition_number,
    sharp_exponent, BoundCheck, C0Sampling, FitMode, RateFit, SampleOptions, SublevelEstimate, Window,
};
use schwarz_core::decomposition::{build_decomposition, tau0, Decomposer, SpaceDecomposition, SpaceSplitting};
use schwarz_core::mesh::{build_mesh_hierarchy, MeshHierarchy};
use schwarz_core::objectives::{
    make_l1_obstacle, make_linear_elliptic, make_obstacle_constrained, make_s_laplacian, synthetic_block_problem,
    BlockProblem, Load, Objective, ObstacleData,
};
use schwarz_core::solvers::{
    asm_solve, bcd_solve, compute_reference, constraint_decomposition_solve, AsmConfig, Clock, IterationTrace,
    LocalSolverKind, NoClock, Reference, ReferenceOptions, StopRule,
};

use crate::config::{ExperimentConfig, FitSpec, ProblemKind, SolverKind};
use crate::error::CliError;

/// Command-line adjustments applied on top of a document.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub budget: Option<usize>,
    pub seed: Option<u64>,
    pub override_tau: bool,
}

impl Overrides {
    pub fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(b) = self.budget {
            config.solver.budget = b;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if self.override_tau {
            config.solver.override_tau = true;
        }
    }
}

pub enum Setup {
    Mesh {
        mesh: MeshHierarchy,
        dec: SpaceDecomposition,
        objective: Objective,
    },
    Block(BlockProblem),
}

/// A validated experiment, ready to run.
pub struct Prepared {
    pub config: ExperimentConfig,
    pub setup: Setup,
    pub asm: AsmConfig,
    pub tau0: f64,
    pub omega0: f64,
    pub u0: Vec<f64>,
}

impl Prepared {
    pub fn objective(&self) -> &Objective {
        match &self.setup {
            Setup::Mesh { objective, .. } => objective,
            Setup::Block(b) => &b.objective,
        }
    }

    pub fn subspace_count(&self) -> usize {
        match &self.setup {
            Setup::Mesh { dec, .. } => dec.subspaces().len(),
            Setup::Block(b) => b.partition.sizes().len(),
        }
    }

    pub fn color_count(&self) -> Option<usize> {
        match &self.setup {
            Setup::Mesh { dec, .. } => Some(dec.color_count()),
            Setup::Block(_) => None,
        }
    }
}

fn config_err(e: schwarz_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

pub fn prepare(config: &ExperimentConfig) -> Result<Prepared, CliError> {
    config.check()?;
    let kind = config.solver_kind();
    let p = &config.problem;
    let (setup, u0) = if p.kind == ProblemKind::Bcd {
        let blocks = p.blocks.as_deref().unwrap_or_default();
        let bp = synthetic_block_problem(blocks, p.lambda.unwrap_or(0.1), config.seed).map_err(config_err)?;
        let n = bp.objective.dim();
        (Setup::Block(bp), vec![0.0; n])
    } else {
        let m = config.mesh.expect("checked");
        let d = config.decomposition.as_ref().expect("checked");
        let mesh = build_mesh_hierarchy(m.d, m.m, m.r).map_err(config_err)?;
        let dec = build_decomposition(&mesh, &d.layout, d.overlap, d.two_level).map_err(config_err)?;
        let f = |x: [f64; 2]| p.load.eval(x);
        let load = Load::Function(&f);
        let n = mesh.fine().dof_count();
        let (objective, u0) = match p.kind {
            ProblemKind::Linear => (make_linear_elliptic(&mesh, &load), vec![0.0; n]),
            ProblemKind::Slap => (make_s_laplacian(&mesh, p.s.expect("checked"), &load), vec![0.0; n]),
            ProblemKind::L1obstacle => (make_l1_obstacle(&mesh, &load, p.lambda.unwrap_or(1.0)), vec![0.0; n]),
            ProblemKind::Obstacle => {
                let spec = p.obstacle.clone().unwrap_or_default();
                let obs = ObstacleData::from_function(&mesh, |x| spec.eval(x, m.d)).map_err(config_err)?;
                let start = obs.feasible_start();
                (make_obstacle_constrained(&mesh, &load, &obs), start)
            }
            ProblemKind::Bcd => unreachable!(),
        };
        let objective = objective.map_err(config_err)?;
        (Setup::Mesh { mesh, dec, objective }, u0)
    };
    let (tau0, omega0, local) = match (&setup, kind) {
        (Setup::Mesh { dec, .. }, SolverKind::Exact) => (tau0(dec), 1.0, LocalSolverKind::Exact),
        (Setup::Mesh { dec, .. }, SolverKind::Cd) => {
            (1.0 / dec.subdomain_count() as f64, 1.0, LocalSolverKind::ConstraintDecomposition)
        }
        (Setup::Block(bp), SolverKind::Bcd) => (bp.partition.tau0(), bp.lipschitz, LocalSolverKind::BcdSurrogate),
        _ => return Err(CliError::Config(format!("solver {kind:?} does not apply to problem {:?}", p.kind))),
    };
    let s = &config.solver;
    let mut asm = AsmConfig::new(s.tau.resolve(tau0), s.omega.resolve(omega0), local, s.budget);
    asm.local_tol = s.local_tol;
    asm.local_max_iters = s.local_max_iters;
    asm.allow_large_tau = s.override_tau;
    if let Some(z) = s.stop_error {
        asm.stop = StopRule::EnergyError(z);
    }
    asm.validate(tau0, omega0).map_err(config_err)?;
    if s.override_tau && asm.tau > tau0 {
        warn!("step {} exceeds tau0 = {tau0}; convergence is not guaranteed", asm.tau);
    }
    Ok(Prepared {
        config: config.clone(),
        setup,
        asm,
        tau0,
        omega0,
        u0,
    })
}

/// Empirical constants and fits for one run; absent when not computable.
#[derive(Debug, Clone, Default)]
pub struct Analysis {
    pub fit: Option<RateFit>,
    pub fit_error: Option<String>,
    pub sublevel: Option<SublevelEstimate>,
    pub c0: Option<f64>,
    pub kappa: Option<f64>,
    pub predicted_slope: Option<f64>,
    pub predicted_rate: Option<f64>,
    pub bound: Option<BoundCheck>,
    pub notes: Vec<String>,
}

pub struct Outcome {
    pub prepared: Prepared,
    pub reference: Reference,
    pub trace: IterationTrace,
    pub analysis: Analysis,
}

/// Millisecond wall clock for `--timings`.
pub struct WallClock(Instant);

impl WallClock {
    pub fn start() -> Self {
        WallClock(Instant::now())
    }
}

impl Clock for WallClock {
    fn now_ms(&mut self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}

pub fn run_prepared(prepared: Prepared, clock: &mut dyn Clock) -> Result<Outcome, CliError> {
    let rc = &prepared.config.reference;
    let opts = ReferenceOptions {
        local_tol: rc.tol,
        passes: rc.passes,
        certify_tol: rc.certify_tol,
        ..ReferenceOptions::default()
    };
    let reference = compute_reference(prepared.objective(), &prepared.u0, &opts).map_err(CliError::Reference)?;
    debug!("reference energy {:e}, residual {:e}", reference.energy, reference.residual);
    let trace = match &prepared.setup {
        Setup::Block(bp) => bcd_solve(bp, &prepared.asm, &prepared.u0, Some(&reference), clock),
        Setup::Mesh { dec, objective, .. } => match prepared.asm.local {
            LocalSolverKind::ConstraintDecomposition => {
                constraint_decomposition_solve(objective, dec, &prepared.asm, &prepared.u0, Some(&reference), clock)
            }
            _ => asm_solve(objective, dec, &prepared.asm, &prepared.u0, Some(&reference), clock),
        },
    }
    .map_err(CliError::Solver)?;
    if !trace.is_monotone() {
        warn!("energy increased by up to {:e} (relative)", trace.worst_increase());
    }
    let analysis = if prepared.config.analysis.enabled {
        analyze(&prepared, &reference, &trace)
    } else {
        Analysis::default()
    };
    Ok(Outcome {
        prepared,
        reference,
        trace,
        analysis,
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    run_prepared(prepare(config)?, &mut NoClock)
}

fn decomposer_for(kind: ProblemKind, two_level: bool) -> Decomposer {
    match (two_level, kind) {
        (false, _) => Decomposer::OneLevel,
        (true, ProblemKind::Linear | ProblemKind::Slap) => Decomposer::TwoLevelL2,
        (true, _) => Decomposer::TwoLevelNonsmooth,
    }
}

fn analyze(prepared: &Prepared, reference: &Reference, trace: &IterationTrace) -> Analysis {
    let cfg = &prepared.config;
    let obj = prepared.objective();
    let info = *obj.info();
    let (p, q) = (info.sharpness, info.smoothness);
    let (tau, omega) = (prepared.asm.tau, prepared.asm.omega);
    let mut out = Analysis::default();
    let mode = match cfg.analysis.fit {
        FitSpec::Linear => FitMode::Linear,
        FitSpec::Sublinear => FitMode::Sublinear,
        FitSpec::Auto if p == q => FitMode::Linear,
        FitSpec::Auto => FitMode::Sublinear,
    };
    match fit_rate(trace, mode, Window::LastHalf) {
        Ok(f) => {
            if f.floor_hit {
                out.notes.push("energy error reached the 1e-14 floor; fit window truncated".into());
            }
            out.fit = Some(f);
        }
        Err(e) => out.fit_error = Some(e.to_string()),
    }
    let samples = SampleOptions {
        count: cfg.analysis.samples,
        radius: 1.0,
        seed: cfg.seed,
    };
    match estimate_sublevel(obj, reference, &trace.iterates, &samples) {
        Ok(s) => out.sublevel = Some(s),
        Err(e) => out.notes.push(format!("sublevel estimate skipped: {e}")),
    }
    let c0 = match &prepared.setup {
        // d_k = ½‖w_k‖² on orthogonal blocks, so Σ_k d_k = ½‖w‖² exactly
        Setup::Block(_) => Some(1.0),
        Setup::Mesh { mesh, dec, .. } => {
            let r0 = out.sublevel.map_or(1.0, |s| s.radius.max(f64::MIN_POSITIVE));
            let tau_c = tau.min(1.0);
            let sampling = C0Sampling {
                centers: &trace.iterates,
                directions: &[],
                options: SampleOptions {
                    radius: (2.0 / tau_c - 1.0) * r0,
                    ..samples
                },
            };
            let two = cfg.decomposition.as_ref().is_some_and(|d| d.two_level);
            match estimate_c0(obj, mesh, dec, decomposer_for(cfg.problem.kind, two), &sampling) {
                Ok(c) => Some(c),
                Err(e) => {
                    out.notes.push(format!("C0 estimate skipped: {e}"));
                    None
                }
            }
        }
    };
    out.c0 = c0;
    out.kappa = c0.and_then(|c| schwarz_condition_number(omega, c, q, tau.min(1.0)).ok());
    if p > q {
        out.predicted_slope = sharp_exponent(p, q).ok().map(|b| -b);
    }
    if let (Some(kappa), Some(sub)) = (out.kappa, out.sublevel) {
        if p == q {
            out.predicted_rate = linear_rate_bound(q, tau.min(1.0), kappa, sub.sharpness).ok();
        } else if let Some(errors) = trace.energy_errors() {
            out.bound = check_sharp_bound(&errors, p, q, tau.min(1.0), kappa, sub.sharpness).ok();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear() -> ExperimentConfig {
        ExperimentConfig::from_toml(
            r#"
name = "poisson"
[problem]
kind = "linear"
[mesh]
d = 1
m = 8
r = 4
[decomposition]
layout = [4]
overlap = 1
[solver]
budget = 20
"#,
        )
        .unwrap()
    }

    #[test]
    fn linear_run_converges_linearly() {
        let out = run_experiment(&linear()).unwrap();
        assert_eq!(out.trace.records.len(), 21);
        let fit = out.analysis.fit.unwrap();
        assert!(fit.convergent && fit.value < 1.0);
        assert!(out.analysis.kappa.unwrap() > 0.0);
        assert_eq!(out.prepared.tau0, 0.5);
    }

    #[test]
    fn large_step_rejected_unless_overridden() {
        let mut c = linear();
        c.solver.tau = crate::config::ParamSpec::Value(0.9);
        let err = prepare(&c).err().unwrap();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("tau0"));
        Overrides {
            override_tau: true,
            ..Overrides::default()
        }
        .apply(&mut c);
        assert!(prepare(&c).is_ok());
    }

    #[test]
    fn uncertifiable_reference_is_exit_four() {
        let mut c = linear();
        c.reference.certify_tol = 1e-300;
        c.reference.passes = 1;
        let err = run_experiment(&c).err().unwrap();
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn bcd_experiment_reports_unit_c0() {
        let c = ExperimentConfig::from_toml(
            r#"
name = "lasso"
seed = 4
[problem]
kind = "bcd"
lambda = 0.05
blocks = [4, 4, 4]
[solver]
budget = 30
"#,
        )
        .unwrap();
        let out = run_experiment(&c).unwrap();
        assert_eq!(out.analysis.c0, Some(1.0));
        assert!(out.trace.is_monotone());
        assert!((out.prepared.tau0 - 1.0 / 3.0).abs() < 1e-15);
    }
}
