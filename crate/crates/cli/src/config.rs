//! Experiment documents.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Linear,
    Slap,
    L1obstacle,
    Obstacle,
    Bcd,
}

/// Right-hand side `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LoadSpec {
    Constant { value: f64 },
    /// `amplitude · sin(2π frequency x) · (1 + y)` (the `y` factor is 1 in 1D).
    Sine { amplitude: f64, frequency: f64 },
}

impl Default for LoadSpec {
    fn default() -> Self {
        LoadSpec::Constant { value: 1.0 }
    }
}

impl LoadSpec {
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        match *self {
            LoadSpec::Constant { value } => value,
            LoadSpec::Sine { amplitude, frequency } => {
                amplitude * (2.0 * std::f64::consts::PI * frequency * x[0]).sin() * (1.0 + x[1])
            }
        }
    }
}

/// Lower obstacle `g̲`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ObstacleSpec {
    /// `height · (1 − ‖x − c‖²/radius²)` around the domain center.
    Bump {
        height: f64,
        #[serde(default = "default_bump_radius")]
        radius: f64,
    },
    Constant { value: f64 },
}

impl Default for ObstacleSpec {
    fn default() -> Self {
        ObstacleSpec::Bump {
            height: 0.2,
            radius: default_bump_radius(),
        }
    }
}

fn default_bump_radius() -> f64 {
    0.5
}

impl ObstacleSpec {
    pub fn eval(&self, x: [f64; 2], dim: usize) -> f64 {
        match *self {
            ObstacleSpec::Bump { height, radius } => {
                let mut r2 = (x[0] - 0.5).powi(2);
                if dim == 2 {
                    r2 += (x[1] - 0.5).powi(2);
                }
                height * (1.0 - r2 / (radius * radius))
            }
            ObstacleSpec::Constant { value } => value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub kind: ProblemKind,
    /// Exponent of the s-Laplacian.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    /// Weight of the `ℓ1` term (l1obstacle and bcd).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub load: LoadSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obstacle: Option<ObstacleSpec>,
    /// Block sizes of the synthetic bcd problem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub d: usize,
    /// Coarse cells per axis.
    pub m: usize,
    /// Refinement factor of the fine grid.
    pub r: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionSection {
    pub layout: Vec<usize>,
    /// Overlap in fine layers.
    pub overlap: usize,
    #[serde(default)]
    pub two_level: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Exact,
    Bcd,
    Cd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Keyword {
    Tau0,
    Omega0,
}

/// A number, or the keyword selecting the theoretical default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamSpec {
    Value(f64),
    Default(Keyword),
}

impl ParamSpec {
    pub fn resolve(self, default: f64) -> f64 {
        match self {
            ParamSpec::Value(v) => v,
            ParamSpec::Default(_) => default,
        }
    }
}

fn tau0_keyword() -> ParamSpec {
    ParamSpec::Default(Keyword::Tau0)
}

fn omega0_keyword() -> ParamSpec {
    ParamSpec::Default(Keyword::Omega0)
}

fn default_local_tol() -> f64 {
    schwarz_core::solvers::AsmConfig::DEFAULT_LOCAL_TOL
}

fn default_local_max_iters() -> usize {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// Defaults to `cd` for obstacle problems, `bcd` for bcd, else `exact`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<SolverKind>,
    #[serde(default = "tau0_keyword")]
    pub tau: ParamSpec,
    #[serde(default = "omega0_keyword")]
    pub omega: ParamSpec,
    pub budget: usize,
    #[serde(default = "default_local_tol")]
    pub local_tol: f64,
    #[serde(default = "default_local_max_iters")]
    pub local_max_iters: usize,
    /// Stop early once the energy error falls below this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_error: Option<f64>,
    /// Accept `τ > τ0` (unsafe).
    #[serde(default)]
    pub override_tau: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceSection {
    pub tol: f64,
    pub passes: usize,
    pub certify_tol: f64,
}

impl Default for ReferenceSection {
    fn default() -> Self {
        let d = schwarz_core::solvers::ReferenceOptions::default();
        Self {
            tol: d.local_tol,
            passes: d.passes,
            certify_tol: d.certify_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitSpec {
    /// Linear when `p = q`, sublinear otherwise.
    Auto,
    Linear,
    Sublinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub enabled: bool,
    pub samples: usize,
    pub fit: FitSpec,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            enabled: true,
            samples: 40,
            fit: FitSpec::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub problem: ProblemSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<MeshSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecompositionSection>,
    pub solver: SolverSection,
    #[serde(default)]
    pub reference: ReferenceSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_owned(),
            source: e,
        })?;
        Self::from_toml(&text)
    }

    pub fn solver_kind(&self) -> SolverKind {
        self.solver.kind.unwrap_or(match self.problem.kind {
            ProblemKind::Obstacle => SolverKind::Cd,
            ProblemKind::Bcd => SolverKind::Bcd,
            _ => SolverKind::Exact,
        })
    }

    /// Cross-field checks that need no numerics.
    pub fn check(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let p = &self.problem;
        match p.kind {
            ProblemKind::Slap => match p.s {
                Some(s) if s > 1.0 && s != 2.0 && s.is_finite() => {}
                Some(s) => return bad(format!("slap needs s > 1 and s != 2, got {s}")),
                None => return bad("slap needs the exponent s".into()),
            },
            ProblemKind::Bcd => {
                if p.blocks.as_ref().is_none_or(|b| b.is_empty() || b.contains(&0)) {
                    return bad("bcd needs nonempty positive block sizes".into());
                }
            }
            _ => {}
        }
        if let Some(ObstacleSpec::Bump { radius, .. }) = p.obstacle {
            if !(radius > 0.0) {
                return bad(format!("bump radius must be positive, got {radius}"));
            }
        }
        if let Some(l) = p.lambda {
            if !(l >= 0.0) {
                return bad(format!("lambda must be nonnegative, got {l}"));
            }
        }
        if p.kind != ProblemKind::Bcd {
            let Some(mesh) = self.mesh else {
                return bad("mesh section is required".into());
            };
            let Some(dec) = &self.decomposition else {
                return bad("decomposition section is required".into());
            };
            if dec.layout.len() != mesh.d {
                return bad(format!("layout has {} entries for a {}-dimensional mesh", dec.layout.len(), mesh.d));
            }
        }
        let kind = self.solver_kind();
        let ok = matches!(
            (p.kind, kind),
            (ProblemKind::Bcd, SolverKind::Bcd)
                | (ProblemKind::Obstacle, SolverKind::Cd | SolverKind::Exact)
                | (ProblemKind::Linear | ProblemKind::Slap | ProblemKind::L1obstacle, SolverKind::Exact)
        );
        if !ok {
            return bad(format!("solver {kind:?} does not apply to problem {:?}", p.kind));
        }
        if let ParamSpec::Default(k) = self.solver.tau {
            if k != Keyword::Tau0 {
                return bad("tau must be a number or \"tau0\"".into());
            }
        }
        if let ParamSpec::Default(k) = self.solver.omega {
            if k != Keyword::Omega0 {
                return bad("omega must be a number or \"omega0\"".into());
            }
        }
        if !(self.solver.local_tol > 0.0) || self.solver.local_max_iters == 0 {
            return bad("local tolerance and iteration cap must be positive".into());
        }
        Ok(())
    }
}
