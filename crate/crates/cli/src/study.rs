//! Single runs, refinement ladders, optimal-ratio estimates and error
//! coefficient fits.

use std::time::Instant;

use mlvms::chidenn::TensorBasis;
use mlvms::mlvms::{solve_m_level, AlternationReport, Field, LevelState};
use mlvms::norms::{composite_errors, ErrorNorms};
use mlvms::problems::ManufacturedProblem;
use mlvms::td::solve_pgd;
use serde::Serialize;

use crate::config::{RunConfig, SolverKind};
use crate::CliError;

pub struct Outcome {
    pub states: Vec<LevelState<f64>>,
    pub report: AlternationReport,
    pub time_s: f64,
    pub norms: Option<ErrorNorms>,
}

impl Outcome {
    pub fn dofs(&self) -> usize {
        self.states.iter().map(LevelState::dofs).sum()
    }

    /// Bytes of the stored solution: factor entries for separated fields,
    /// the nodal vector otherwise.
    pub fn storage_bytes(&self) -> usize {
        self.dofs() * std::mem::size_of::<f64>()
    }
}

/// Composite L², H¹-seminorm and energy errors with the exact solution's
/// own norms for relative values.
pub fn error_norms(
    states: &[LevelState<f64>],
    problem: &ManufacturedProblem<f64>,
    qorder: Option<usize>,
) -> Result<ErrorNorms, CliError> {
    Ok(composite_errors(problem, states, qorder)?)
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let problem = cfg.problem()?;
    let hierarchy = cfg.hierarchy()?;
    let start = Instant::now();
    let (states, report) = match cfg.solver {
        SolverKind::Full | SolverKind::Td => solve_m_level(&problem, &hierarchy, &cfg.settings())?,
        SolverKind::Pgd => {
            let max_modes = cfg.levels[0].modes.unwrap_or(10);
            let (sol, rep) = solve_pgd(&problem, &hierarchy, cfg.mode_tol, max_modes, cfg.td_settings())?;
            let level = sol.levels.into_iter().next().expect("one level");
            let state = LevelState {
                level: 0,
                basis: TensorBasis::from_axes(level.bases).map_err(|e| CliError::Solver(e.to_string()))?,
                lower: level.lower,
                upper: level.upper,
                field: Field::Modes { modes: level.modes, n_lift: 0 },
                interface: Vec::new(),
            };
            let report = AlternationReport { iterations: 1, converged: true, sweeps: vec![rep.sweeps], ..Default::default() };
            (vec![state], report)
        }
    };
    let time_s = start.elapsed().as_secs_f64();
    let norms = match problem.exact {
        Some(_) => Some(error_norms(&states, &problem, cfg.qorder)?),
        None => None,
    };
    Ok(Outcome { states, report, time_s, norms })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    /// Level-1 element size along the first axis.
    pub h1: f64,
    /// Element size of every level along the first axis.
    pub h: Vec<f64>,
    pub dofs: usize,
    pub err_l2: f64,
    pub err_h1: f64,
    pub err_energy: f64,
    pub rel_l2: f64,
    pub rel_energy: f64,
    pub time_s: f64,
    pub iters: usize,
    pub storage_bytes: usize,
}

impl ConvergenceRow {
    pub fn from_outcome(cfg: &RunConfig, out: &Outcome) -> Result<Self, CliError> {
        let e = out.norms.ok_or_else(|| CliError::Config("problem has no exact solution".into()))?;
        let h: Vec<f64> = cfg.levels.iter().map(|l| l.h[0]).collect();
        Ok(Self {
            h1: h[0],
            h,
            dofs: out.dofs(),
            err_l2: e.l2,
            err_h1: e.h1,
            err_energy: e.energy,
            rel_l2: e.rel_l2(),
            rel_energy: e.rel_energy(),
            time_s: out.time_s,
            iters: out.report.iterations,
            storage_bytes: out.storage_bytes(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Convergence {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slopes of log error against log h of the first
    /// refined level over the last three rows.
    pub slope_l2: f64,
    pub slope_energy: f64,
    /// The last two energy errors differ by less than 10%.
    pub plateau: bool,
}

pub fn converge(cfg: &RunConfig) -> Result<Convergence, CliError> {
    let ladder = cfg.ladder.clone().ok_or_else(|| CliError::Config("converge needs a [ladder] section".into()))?;
    let mut rows = Vec::with_capacity(ladder.factors.len());
    for &f in &ladder.factors {
        let c = cfg.refined(&ladder.refine, f);
        c.validate()?;
        let out = run(&c)?;
        rows.push(ConvergenceRow::from_outcome(&c, &out)?);
    }
    Ok(summarize(rows, ladder.refine[0]))
}

pub fn summarize(rows: Vec<ConvergenceRow>, refined: usize) -> Convergence {
    let tail = &rows[rows.len().saturating_sub(3)..];
    let hs: Vec<f64> = tail.iter().map(|r| r.h[refined]).collect();
    let slope_l2 = loglog_slope(&hs, &tail.iter().map(|r| r.err_l2).collect::<Vec<_>>());
    let slope_energy = loglog_slope(&hs, &tail.iter().map(|r| r.err_energy).collect::<Vec<_>>());
    let plateau = match rows.as_slice() {
        [.., a, b] => (a.err_energy - b.err_energy).abs() < 0.1 * a.err_energy.max(b.err_energy),
        _ => false,
    };
    Convergence { rows, slope_l2, slope_energy, plateau }
}

/// Least-squares slope of `log e` against `log h`.
pub fn loglog_slope(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// `⌈(C_f/C_c)^{1/p_f} h_c^{(p_f−p_c)/p_f}⌉`, at least 1.
pub fn estimate_optimal_ratio(c_c: f64, c_f: f64, p_c: usize, p_f: usize, h_c: f64) -> usize {
    let pf = p_f as f64;
    let v = (c_f / c_c).powf(1.0 / pf) * h_c.powf((pf - p_c as f64) / pf);
    ((v * (1.0 - 1e-12)).ceil() as usize).max(1)
}

/// One observation for the two-term model `e ≈ C_c h_c^{p_c} + C_f h_f^{p_f}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitRow {
    pub h_c: f64,
    pub h_f: f64,
    pub err: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoefficientFit {
    pub c_c: f64,
    pub c_f: f64,
    /// Root mean square of the relative misfit.
    pub residual: f64,
}

/// Nonnegative least squares in relative terms (each row divided by its
/// error).
pub fn fit_error_coefficients(rows: &[FitRow], p_c: usize, p_f: usize) -> Result<CoefficientFit, CliError> {
    if rows.len() < 4 {
        return Err(CliError::Config(format!("coefficient fit needs at least 4 rows, got {}", rows.len())));
    }
    let r0 = rows[0].h_c / rows[0].h_f;
    if rows.iter().all(|r| ((r.h_c / r.h_f) - r0).abs() <= 1e-9 * r0) {
        return Err(CliError::Solver("rank-deficient fit: every row has the same element size ratio".into()));
    }
    let a: Vec<[f64; 2]> = rows.iter().map(|r| [r.h_c.powi(p_c as i32) / r.err, r.h_f.powi(p_f as i32) / r.err]).collect();
    let misfit = |c: [f64; 2]| {
        let ss: f64 = a.iter().map(|ai| (ai[0] * c[0] + ai[1] * c[1] - 1.0).powi(2)).sum();
        (ss / a.len() as f64).sqrt()
    };
    let (mut s00, mut s01, mut s11, mut b0, mut b1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ai in &a {
        s00 += ai[0] * ai[0];
        s01 += ai[0] * ai[1];
        s11 += ai[1] * ai[1];
        b0 += ai[0];
        b1 += ai[1];
    }
    let det = s00 * s11 - s01 * s01;
    if det <= 1e-14 * s00 * s11 {
        return Err(CliError::Solver("rank-deficient fit: columns are collinear".into()));
    }
    let both = [(b0 * s11 - b1 * s01) / det, (b1 * s00 - b0 * s01) / det];
    let c = if both[0] >= 0.0 && both[1] >= 0.0 {
        both
    } else {
        let only_c = [(b0 / s00).max(0.0), 0.0];
        let only_f = [0.0, (b1 / s11).max(0.0)];
        if misfit(only_c) <= misfit(only_f) {
            only_c
        } else {
            only_f
        }
    };
    Ok(CoefficientFit { c_c: c[0], c_f: c[1], residual: misfit(c) })
}
