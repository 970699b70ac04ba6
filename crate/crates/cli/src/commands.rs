use std::fs;
use std::path::{Path, PathBuf};

use mlvms::chidenn::{ShapeFunctions, TensorBasis};
use mlvms::mesh::{Axis, HyperParams, TensorMesh};
use mlvms::mlvms::{composite_eval, solve_m_level, solve_two_level, LevelState};
use mlvms::movingsource::{AxisMap, CoordinateMap};
use mlvms::norms::{composite_errors, partition_errors, ErrorNorms};
use mlvms::problems::{heat1d, moving3d, poisson2d_gaussians};
use mlvms::td::{mode_table, TDSolution};
use serde::Serialize;

use crate::config::{lpbf_desk_config, ProblemId, RunConfig, SolverKind};
use crate::output::{csv, write_csv, write_grids, write_json};
use crate::study::{converge, run, Convergence, Outcome};
use crate::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Scale {
    #[default]
    Desk,
    Paper,
}

/// Command-line overrides shared by every subcommand.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub scale: Scale,
}

impl Overrides {
    fn apply(&self, mut cfg: RunConfig) -> Result<(RunConfig, PathBuf), CliError> {
        if self.scale == Scale::Paper {
            return Err(CliError::Config(
                "paper scale (about 2.8e10 equivalent spatial DoFs) is out of reach; use --scale desk".into(),
            ));
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        let out = self.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
        fs::create_dir_all(&out)?;
        Ok((cfg, out))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub l2: f64,
    pub h1: f64,
    pub energy: f64,
    pub rel_l2: f64,
    pub rel_energy: f64,
}

impl From<ErrorNorms> for ErrorSummary {
    fn from(e: ErrorNorms) -> Self {
        Self { l2: e.l2, h1: e.h1, energy: e.energy, rel_l2: e.rel_l2(), rel_energy: e.rel_energy() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metrics {
    pub problem: ProblemId,
    pub solver: SolverKind,
    pub levels: usize,
    pub dofs: usize,
    pub storage_bytes: usize,
    pub iterations: usize,
    pub converged: bool,
    pub time_s: f64,
    pub mode_counts: Option<Vec<usize>>,
    pub errors: Option<ErrorSummary>,
    /// Largest nodal value over all levels (with the problem offset).
    pub peak: f64,
    /// Value at the reference origin at the final time (moving sources).
    pub centre: Option<f64>,
}

impl Metrics {
    pub fn new(cfg: &RunConfig, out: &Outcome) -> Result<Self, CliError> {
        let problem = cfg.problem()?;
        let offset = problem.offset;
        let peak = out.states.iter().flat_map(|s| s.nodal()).fold(f64::NEG_INFINITY, f64::max) + offset;
        let centre = match cfg.problem {
            ProblemId::Moving3d | ProblemId::Lpbf => {
                let t_end = problem.domain.last().unwrap().1;
                Some(composite_eval(&out.states, &[0.0, 0.0, 0.0, t_end])? + offset)
            }
            _ => None,
        };
        Ok(Self {
            problem: cfg.problem,
            solver: cfg.solver,
            levels: out.states.len(),
            dofs: out.dofs(),
            storage_bytes: out.storage_bytes(),
            iterations: out.report.iterations,
            converged: out.report.converged,
            time_s: out.time_s,
            mode_counts: TDSolution::from_states(&out.states).map(|s| s.mode_counts()),
            errors: out.norms.map(ErrorSummary::from),
            peak,
            centre,
        })
    }
}

fn solve_and_write(cfg: &RunConfig, dir: &Path) -> Result<Metrics, CliError> {
    let out = run(cfg)?;
    let metrics = Metrics::new(cfg, &out)?;
    write_json(&dir.join("metrics.json"), &metrics)?;
    write_grids(dir, &out.states, cfg.problem()?.offset)?;
    Ok(metrics)
}

pub fn solve(config: &Path, ov: &Overrides) -> Result<Metrics, CliError> {
    let (cfg, dir) = ov.apply(RunConfig::load(config)?)?;
    let m = solve_and_write(&cfg, &dir)?;
    println!("dofs {} iterations {} converged {} time {:.3}s", m.dofs, m.iterations, m.converged, m.time_s);
    if let Some(e) = &m.errors {
        println!("error l2 {:e} energy {:e} (relative {:e})", e.l2, e.energy, e.rel_energy);
    }
    Ok(m)
}

#[derive(Serialize)]
struct ConvergeMetrics<'a> {
    slope_l2: f64,
    slope_energy: f64,
    plateau: bool,
    rows: &'a [crate::study::ConvergenceRow],
}

pub fn converge_cmd(config: &Path, ov: &Overrides) -> Result<Convergence, CliError> {
    let (cfg, dir) = ov.apply(RunConfig::load(config)?)?;
    let c = converge(&cfg)?;
    write_csv(&dir.join("convergence.csv"), &c.rows)?;
    let m = ConvergeMetrics { slope_l2: c.slope_l2, slope_energy: c.slope_energy, plateau: c.plateau, rows: &c.rows };
    write_json(&dir.join("metrics.json"), &m)?;
    print!("{}", csv(&c.rows));
    println!("slope l2 {:.3} energy {:.3} plateau {}", c.slope_l2, c.slope_energy, c.plateau);
    Ok(c)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeRow {
    pub q: usize,
    pub e_td: f64,
    pub e_full: f64,
    pub deviation: f64,
    pub relative_residual: f64,
}

/// Energy errors of the reduced-order and full solves on the first level,
/// relative to the exact solution's energy norm, for each `Q` in `[modes]`.
pub fn mode_study(cfg: &RunConfig) -> Result<Vec<ModeRow>, CliError> {
    let qs = cfg.modes.clone().ok_or_else(|| CliError::Config("modes needs a [modes] section".into()))?.qs;
    Ok(mode_table(&cfg.problem()?, &cfg.hierarchy()?, &qs, cfg.td_settings())?
        .into_iter()
        .map(|(q, d)| ModeRow {
            q,
            e_td: d.e_td / d.u_energy,
            e_full: d.e_full / d.u_energy,
            deviation: d.deviation / d.u_energy,
            relative_residual: d.relative_residual(),
        })
        .collect())
}

pub fn modes_cmd(config: &Path, ov: &Overrides) -> Result<Vec<ModeRow>, CliError> {
    let (cfg, dir) = ov.apply(RunConfig::load(config)?)?;
    let rows = mode_study(&cfg)?;
    let mut text = String::from("q,e_td,e_full,deviation,relative_residual\n");
    for r in &rows {
        text += &format!("{},{:e},{:e},{:e},{:e}\n", r.q, r.e_td, r.e_full, r.deviation, r.relative_residual);
    }
    fs::write(dir.join("modes.csv"), &text)?;
    write_json(&dir.join("metrics.json"), &rows)?;
    print!("{text}");
    Ok(rows)
}

pub fn lpbf(config: Option<&Path>, ov: &Overrides) -> Result<Metrics, CliError> {
    let cfg = match config {
        Some(p) => RunConfig::load(p)?,
        None => lpbf_desk_config(),
    };
    if cfg.problem != ProblemId::Lpbf {
        return Err(CliError::Config("lpbf needs problem = \"lpbf\"".into()));
    }
    let (cfg, dir) = ov.apply(cfg)?;
    let m = solve_and_write(&cfg, &dir)?;
    println!(
        "dofs {} iterations {} time {:.1}s peak {:.1} K centre {:.1} K",
        m.dofs,
        m.iterations,
        m.time_s,
        m.peak,
        m.centre.unwrap_or(f64::NAN)
    );
    Ok(m)
}

/// Outcome of one invariant check.
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

/// Fast invariant suite: basis, map, manufactured residuals, level
/// degeneration, norm partition and run determinism.
pub fn verify_checks() -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();

    let mesh: TensorMesh<f64> = TensorMesh::new(vec![Axis::new(0.0, 1.0, 8)?, Axis::new(-1.0, 0.5, 7)?])?;
    let basis = TensorBasis::new(mesh.clone(), HyperParams::new(5.0, 2, 3)?).map_err(|e| CliError::Solver(e.to_string()))?;
    let mut worst: f64 = 0.0;
    for id in 0..mesh.n_nodes() {
        let ev = basis.eval_point(&mesh.node_coords(id)).map_err(|e| CliError::Solver(e.to_string()))?;
        for (k, &n) in ev.nodes.iter().enumerate() {
            worst = worst.max((ev.values[k] - if n == id { 1.0 } else { 0.0 }).abs());
        }
    }
    for k in 0..50 {
        let x = [(k as f64 * 0.618).fract(), -1.0 + 1.5 * (k as f64 * 0.377).fract()];
        let ev = basis.eval_point(&x).map_err(|e| CliError::Solver(e.to_string()))?;
        worst = worst.max((ev.values.iter().sum::<f64>() - 1.0).abs());
    }
    out.push(check("basis kronecker delta and partition of unity", worst < 1e-9, format!("{worst:.2e}")));

    let map = CoordinateMap::new(AxisMap::tracking((-6.0, 6.0), 0.8, -5.0, 500.0), None, (0.0, 0.02), 0.0)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let (mut det_err, mut trip): (f64, f64) = (0.0, 0.0);
    for k in 0..200 {
        let xi = -6.0 + 12.0 * (k as f64 * 0.7548).fract();
        let t = 0.02 * (k as f64 * 0.5698).fract();
        let j = map.jacobian(xi, 0.3, t);
        det_err = det_err.max((j.det - 1.0 / (j.a * j.b)).abs() / j.det.abs());
        let (x, y) = map.map_point(xi, 0.3, t);
        let (xb, yb) = map.inverse_point(x, y, t);
        trip = trip.max((xb - xi).abs()).max((yb - 0.3).abs());
    }
    out.push(check("coordinate map determinant and round trip", det_err < 1e-13 && trip < 1e-12, format!("{det_err:.1e} {trip:.1e}")));

    let mut res: f64 = 0.0;
    res = res.max(poisson2d_gaussians::<f64>().residual_check(200, 1).map_err(|e| CliError::Config(e.to_string()))?);
    res = res.max(heat1d::<f64>().residual_check(200, 2).map_err(|e| CliError::Config(e.to_string()))?);
    let mv = moving3d::<f64>(500.0, 0.11, 0.05, 0.8).map_err(|e| CliError::Config(e.to_string()))?;
    res = res.max(mv.residual_check(200, 3).map_err(|e| CliError::Config(e.to_string()))?);
    out.push(check("manufactured residuals", res < 1e-8, format!("{res:.1e}")));

    let cfg = RunConfig::from_toml(VERIFY_CONFIG)?;
    let (p, h, s) = (cfg.problem()?, cfg.hierarchy()?, cfg.settings());
    let (a, _) = solve_m_level(&p, &h, &s)?;
    let (b, _) = solve_two_level(&p, &h, &s)?;
    let same = a.iter().zip(&b).all(|(x, y)| x.nodal() == y.nodal());
    out.push(check("m-level with m = 2 equals two-level", same, String::new()));

    let total = composite_errors(&p, &a, None)?.energy.powi(2);
    let parts: f64 = partition_errors(&p, &a, None)?.iter().map(|q| q.energy).sum();
    let gap = (total - parts).abs() / total;
    out.push(check("energy norm splits over partition regions", gap < 1e-12, format!("{gap:.1e}")));

    let mut td = cfg.clone();
    td.solver = SolverKind::Td;
    td.levels[0].modes = Some(2);
    td.levels[1].modes = Some(4);
    let r1 = run(&td)?;
    let r2 = run(&td)?;
    let expect: usize = td
        .hierarchy()?
        .levels()
        .iter()
        .map(|l| l.spec.modes.unwrap() * l.mesh.node_shape().iter().sum::<usize>())
        .sum();
    let det = states_equal(&r1.states, &r2.states);
    out.push(check("seeded reduced-order runs are identical", det, String::new()));
    out.push(check("reduced-order DoF accounting", r1.dofs() == expect, format!("{} vs {expect}", r1.dofs())));
    Ok(out)
}

fn states_equal(a: &[LevelState<f64>], b: &[LevelState<f64>]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.nodal() == y.nodal())
}

const VERIFY_CONFIG: &str = r#"
problem = "heat1d"
tol = 1e-8

[[level]]
lower = [-1.0, 0.0]
upper = [1.0, 4.0]
h = [0.125, 0.5]
s = 2
p = 3

[[level]]
lower = [-0.25, 0.0]
upper = [0.25, 4.0]
h = [0.0625, 0.25]
s = 2
p = 3
"#;

pub fn verify() -> Result<(), CliError> {
    let checks = verify_checks()?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    for c in &checks {
        println!("{} {} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    match failed {
        0 => Ok(()),
        n => Err(CliError::Verify(n)),
    }
}
