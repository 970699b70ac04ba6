//! TOML run configuration.
//!
//! ```toml
//! problem = "poisson2d"   # poisson2d | heat1d | moving3d | lpbf
//! solver = "td"           # full | td | pgd
//! tol = 1e-8
//!
//! [[level]]
//! lower = [0.0, 0.0]
//! upper = [20.0, 20.0]
//! h = [0.5, 0.5]          # last entry is the time step for transient problems
//! s = 3
//! p = 3
//! modes = 2
//!
//! [ladder]
//! refine = [1]
//! factors = [1, 2, 4, 8]
//! ```

use std::path::{Path, PathBuf};

use mlvms::mesh::{HyperParams, LevelSpec, MultilevelMesh};
use mlvms::mlvms::{Backend, SolveSettings};
use mlvms::problems::{self, LaserParams, ManufacturedProblem, MovingOptions};
use mlvms::td::TdSettings;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemId {
    Poisson2d,
    Heat1d,
    Moving3d,
    Lpbf,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    #[default]
    Full,
    Td,
    Pgd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub h: Vec<f64>,
    #[serde(default = "default_a")]
    pub a: f64,
    pub s: usize,
    pub p: usize,
    #[serde(default)]
    pub modes: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MovingConfig {
    pub v: f64,
    pub r: f64,
    pub d: f64,
    pub k_s: f64,
    pub duration: f64,
    pub x_start: f64,
    pub margin: f64,
    pub flip_envelope: bool,
}

impl Default for MovingConfig {
    fn default() -> Self {
        Self { v: 500.0, r: 0.11, d: 0.05, k_s: 0.8, duration: 0.02, x_start: -5.0, margin: 0.0, flip_envelope: false }
    }
}

/// Laser track in (mm, ms); material in the units of [`LaserParams`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LaserConfig {
    pub k: f64,
    pub rho: f64,
    pub c_p: f64,
    pub v: f64,
    pub r: f64,
    pub d: f64,
    pub power: f64,
    pub eta: f64,
    pub t_amb: f64,
    pub duration_ms: f64,
    pub x_start_mm: f64,
    pub k_s: f64,
    pub margin: f64,
}

impl Default for LaserConfig {
    fn default() -> Self {
        let p = LaserParams::default();
        Self {
            k: p.k,
            rho: p.rho,
            c_p: p.c_p,
            v: p.v,
            r: p.r,
            d: p.d,
            power: p.p,
            eta: p.eta,
            t_amb: p.t_amb,
            duration_ms: 20.0,
            x_start_mm: -5.0,
            k_s: 0.75,
            margin: 0.25,
        }
    }
}

impl LaserConfig {
    pub fn params(&self) -> LaserParams {
        LaserParams {
            k: self.k,
            rho: self.rho,
            c_p: self.c_p,
            v: self.v,
            r: self.r,
            d: self.d,
            p: self.power,
            eta: self.eta,
            t_amb: self.t_amb,
        }
    }
}

/// Element sizes of the `refine` levels are divided by each factor in turn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ladder {
    pub refine: Vec<usize>,
    pub factors: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeStudy {
    pub qs: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemId,
    #[serde(default)]
    pub solver: SolverKind,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub qorder: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Enrichment tolerance of the greedy solver.
    #[serde(default = "default_mode_tol")]
    pub mode_tol: f64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(rename = "level")]
    pub levels: Vec<LevelConfig>,
    #[serde(default)]
    pub moving: Option<MovingConfig>,
    #[serde(default)]
    pub laser: Option<LaserConfig>,
    #[serde(default)]
    pub ladder: Option<Ladder>,
    #[serde(default)]
    pub modes: Option<ModeStudy>,
}

fn default_a() -> f64 {
    5.0
}

fn default_tol() -> f64 {
    1e-8
}

fn default_max_iter() -> usize {
    50
}

fn default_mode_tol() -> f64 {
    1e-4
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks that need no solve: dimensions, ladder, solver constraints and
    /// the level hierarchy itself.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.levels.is_empty() {
            return Err(CliError::Config("at least one [[level]] is required".into()));
        }
        let dim = self.problem()?.dim();
        for (l, lv) in self.levels.iter().enumerate() {
            if lv.lower.len() != dim || lv.upper.len() != dim || lv.h.len() != dim {
                return Err(CliError::Config(format!("level {l}: expected {dim} entries in lower, upper and h")));
            }
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(CliError::Config("tol must be positive and max_iter nonzero".into()));
        }
        match self.solver {
            SolverKind::Td if self.levels.iter().any(|l| l.modes.is_none()) => {
                return Err(CliError::Config("solver td needs modes on every level".into()))
            }
            SolverKind::Pgd if self.levels.len() != 1 => {
                return Err(CliError::Config("solver pgd runs on a single level".into()))
            }
            _ => {}
        }
        if let Some(ladder) = &self.ladder {
            if ladder.factors.len() < 3 || ladder.factors.contains(&0) {
                return Err(CliError::Config("ladder needs at least 3 nonzero factors".into()));
            }
            if ladder.refine.is_empty() || ladder.refine.iter().any(|&l| l >= self.levels.len()) {
                return Err(CliError::Config("ladder.refine must list existing levels".into()));
            }
        }
        self.hierarchy()?;
        Ok(())
    }

    pub fn problem(&self) -> Result<ManufacturedProblem<f64>, CliError> {
        let bad = |e: problems::ProblemError| CliError::Config(e.to_string());
        match self.problem {
            ProblemId::Poisson2d => Ok(problems::poisson2d_gaussians()),
            ProblemId::Heat1d => Ok(problems::heat1d()),
            ProblemId::Moving3d => {
                let m = self.moving.clone().unwrap_or_default();
                let opt = MovingOptions {
                    duration: m.duration,
                    x_start: m.x_start,
                    margin: m.margin,
                    flip_envelope: m.flip_envelope,
                    ..MovingOptions::default()
                };
                problems::moving3d_with(m.v, m.r, m.d, m.k_s, opt).map_err(bad)
            }
            ProblemId::Lpbf => {
                let l = self.laser.clone().unwrap_or_default();
                problems::lpbf_problem(&l.params(), l.duration_ms, l.x_start_mm, l.k_s, l.margin).map_err(bad)
            }
        }
    }

    pub fn specs(&self) -> Result<Vec<LevelSpec<f64>>, CliError> {
        self.levels
            .iter()
            .map(|l| {
                Ok(LevelSpec {
                    lower: l.lower.clone(),
                    upper: l.upper.clone(),
                    h: l.h.clone(),
                    hyper: HyperParams::new(l.a, l.s, l.p)?,
                    modes: l.modes,
                })
            })
            .collect()
    }

    pub fn hierarchy(&self) -> Result<MultilevelMesh<f64>, CliError> {
        Ok(MultilevelMesh::new(self.specs()?)?)
    }

    pub fn td_settings(&self) -> TdSettings {
        TdSettings { seed: self.seed, ..TdSettings::default() }
    }

    pub fn settings(&self) -> SolveSettings {
        let backend = match self.solver {
            SolverKind::Td => Backend::Td(self.td_settings()),
            SolverKind::Full | SolverKind::Pgd => Backend::Full,
        };
        SolveSettings { tol: self.tol, max_iter: self.max_iter, backend, qorder: self.qorder, ..SolveSettings::default() }
    }

    /// Copy with the `refine` levels' element sizes divided by `factor`.
    pub fn refined(&self, refine: &[usize], factor: usize) -> Self {
        let mut out = self.clone();
        for &l in refine {
            for h in &mut out.levels[l].h {
                *h /= factor as f64;
            }
        }
        out.ladder = None;
        out
    }
}

/// Three-level moving-laser run sized for a workstation.
pub fn lpbf_desk_config() -> RunConfig {
    let level = |half: f64, h: f64, dt: f64, q: usize| LevelConfig {
        lower: vec![-half, -half, -half, 0.0],
        upper: vec![half, half, 0.0, 20.0],
        h: vec![h, h, h, dt],
        a: 5.0,
        s: 3,
        p: 5,
        modes: Some(q),
    };
    RunConfig {
        problem: ProblemId::Lpbf,
        solver: SolverKind::Td,
        tol: 1e-4,
        max_iter: 30,
        qorder: None,
        seed: 0,
        mode_tol: default_mode_tol(),
        out: None,
        levels: vec![level(6.0, 0.25, 2.5, 2), level(0.75, 0.0625, 0.625, 9), level(0.1875, 0.03125, 0.3125, 15)],
        moving: None,
        laser: Some(LaserConfig::default()),
        ladder: None,
        modes: None,
    }
}
