//! Tensor-decomposition solvers: all-at-once block ALS over per-axis factors
//! (TD), greedy enrichment (PGD), mode nesting across levels and mode-count
//! estimation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::assembly::{outer, KronOperator, SeparableForm};
use crate::chidenn::{AxisBasis, BasisError};
use crate::linalg::{BandLu, LinalgError};
use crate::mesh::MultilevelMesh;
use crate::mlvms::{self, Backend, Field, LevelState, MlvmsError, SolveSettings};
use crate::problems::ManufacturedProblem;
use crate::Scalar;

/// Separated tensor: `modes[q][d]` is the axis-`d` factor of mode `q`.
pub type Modes<T> = Vec<Vec<Vec<T>>>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TdError {
    #[error("axis sweeps stagnated at relative change {change:.3e} after {sweeps} sweeps")]
    Stagnation { sweeps: usize, change: f64 },
    #[error("per-axis system singular on axis {axis} (redundant modes)")]
    Singular { axis: usize },
    #[error("mode counts must increase strictly across levels, got {0:?}")]
    ModeOrdering(Vec<usize>),
    #[error("level {0} has no mode count")]
    MissingModes(usize),
    #[error("no mode count up to {max_modes} reaches deviation {tol:e}")]
    Unreachable { max_modes: usize, tol: f64 },
    #[error("enrichment did not fall below tolerance within {0} modes")]
    MaxModes(usize),
    #[error("nonzero Dirichlet data needs a separated exact solution for the lift")]
    NonSeparableBoundary,
    #[error("point {0:?} outside every level")]
    Outside(Vec<f64>),
    #[error(transparent)]
    Basis(#[from] BasisError),
}

/// Axis-sweep controls.
#[derive(Clone, Debug, PartialEq)]
pub struct TdSettings {
    pub tol: f64,
    pub max_sweeps: usize,
    /// Window of sweeps whose changes all lie within 2% counts as a plateau.
    pub stagnation: usize,
    /// A plateau below this change ends the sweeps without an error.
    pub plateau_ok: f64,
    pub seed: u64,
    /// Record the energy functional after each sweep.
    pub track_energy: bool,
}

impl Default for TdSettings {
    fn default() -> Self {
        Self { tol: 1e-9, max_sweeps: 200, stagnation: 5, plateau_ok: 1e-5, seed: 0, track_energy: false }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepReport {
    pub sweeps: usize,
    pub change: f64,
    pub converged: bool,
    pub shifted: bool,
    pub energy: Vec<f64>,
}

/// Expands separated modes to a row-major nodal tensor.
pub fn expand<T: Scalar>(modes: &[Vec<Vec<T>>], shape: &[usize]) -> Vec<T> {
    let mut out = vec![T::zero(); shape.iter().product()];
    for m in modes {
        for (o, v) in out.iter_mut().zip(outer(m)) {
            *o += v;
        }
    }
    out
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Fixed-seed uniform(−1,1) factors, zero on `fixed` rows, unit norm.
pub fn random_modes<T: Scalar>(q: usize, shape: &[usize], free: &[Vec<usize>], seed: u64) -> Modes<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..q)
        .map(|_| {
            shape
                .iter()
                .enumerate()
                .map(|(d, &n)| {
                    let mut v = vec![T::zero(); n];
                    for &i in &free[d] {
                        v[i] = T::of(rng.gen_range(-1.0..1.0));
                    }
                    let s = dot(&v, &v).sqrt();
                    if s > T::zero() {
                        v.iter_mut().for_each(|x| *x /= s);
                    }
                    v
                })
                .collect()
        })
        .collect()
}

/// Equalizes factor norms within each mode.
fn balance<T: Scalar>(modes: &mut Modes<T>) {
    for m in modes.iter_mut() {
        let norms: Vec<T> = m.iter().map(|f| dot(f, f).sqrt()).collect();
        if norms.iter().any(|&n| n == T::zero()) {
            continue;
        }
        let total = norms.iter().fold(T::one(), |a, &n| a * n);
        let target = total.powf(T::one() / T::of_usize(m.len()));
        for (f, n) in m.iter_mut().zip(norms) {
            let s = target / n;
            f.iter_mut().for_each(|x| *x *= s);
        }
    }
}

fn band_of<T: Scalar>(op: &KronOperator<T>, d: usize) -> usize {
    let mut bw = 0;
    for mats in &op.mats {
        let m = &mats[d];
        for i in 0..m.rows() {
            let (a, b) = m.range(i);
            if b > a {
                bw = bw.max(i.saturating_sub(a)).max((b - 1).saturating_sub(i));
            }
        }
    }
    bw
}

/// `a(U,U)/2 − ⟨U, r⟩` on expanded tensors.
pub fn energy<T: Scalar>(op: &KronOperator<T>, modes: &[Vec<Vec<T>>], rhs: &[Vec<Vec<T>>]) -> f64 {
    let u = expand(modes, &op.trial_shape);
    let au = op.apply(&u);
    let b = expand(rhs, &op.test_shape);
    (T::of(0.5) * dot(&u, &au) - dot(&u, &b)).to_f64_lossy()
}

/// Block alternating solve for `modes` (all updated jointly per axis) in
/// `A U = Σ rhs` with the entries outside `free` held at zero.
pub fn als_solve<T: Scalar>(
    op: &KronOperator<T>,
    rhs: &[Vec<Vec<T>>],
    free: &[Vec<usize>],
    modes: &mut Modes<T>,
    settings: &TdSettings,
) -> Result<SweepReport, TdError> {
    let q = modes.len();
    let dim = op.test_shape.len();
    let nt = op.coefs.len();
    let mut report = SweepReport::default();
    if q == 0 {
        report.converged = true;
        return Ok(report);
    }
    let shape = op.trial_shape.clone();
    // s[t][e][p*q + r] = f_pe^T M_te f_re ; h[j][e][p] = f_pe^T b_je
    let pair = |modes: &Modes<T>, t: usize, e: usize| -> Vec<T> {
        let ys: Vec<Vec<T>> = (0..q).map(|r| op.mats[t][e].matvec(&modes[r][e])).collect();
        let mut out = vec![T::zero(); q * q];
        for p in 0..q {
            for r in 0..q {
                out[p * q + r] = dot(&modes[p][e], &ys[r]);
            }
        }
        out
    };
    let proj = |modes: &Modes<T>, j: usize, e: usize| -> Vec<T> { (0..q).map(|p| dot(&modes[p][e], &rhs[j][e])).collect() };
    let mut s: Vec<Vec<Vec<T>>> = (0..nt).map(|t| (0..dim).map(|e| pair(modes, t, e)).collect()).collect();
    let mut h: Vec<Vec<Vec<T>>> = (0..rhs.len()).map(|j| (0..dim).map(|e| proj(modes, j, e)).collect()).collect();
    let bws: Vec<usize> = (0..dim).map(|d| band_of(op, d)).collect();
    let mut prev = expand(modes, &shape);
    let mut history = Vec::new();
    for sweep in 1..=settings.max_sweeps {
        for d in 0..dim {
            let fr = &free[d];
            let nf = fr.len();
            if nf == 0 {
                continue;
            }
            let mut g = vec![T::zero(); nt * q * q];
            for t in 0..nt {
                for pr in 0..q * q {
                    let mut v = op.coefs[t];
                    for e in 0..dim {
                        if e != d {
                            v *= s[t][e][pr];
                        }
                    }
                    g[t * q * q + pr] = v;
                }
            }
            let kb = (bws[d] + 1) * q - 1;
            let mut band = BandLu::zeros(nf * q, kb, kb);
            let pos = {
                let mut pos = vec![usize::MAX; shape[d]];
                for (k, &i) in fr.iter().enumerate() {
                    pos[i] = k;
                }
                pos
            };
            for t in 0..nt {
                let m = &op.mats[t][d];
                for (li, &i) in fr.iter().enumerate() {
                    let (a, b) = m.range(i);
                    let row = m.mat.row(i);
                    for j in a..b {
                        let lj = pos[j];
                        if lj == usize::MAX || row[j] == T::zero() {
                            continue;
                        }
                        for p in 0..q {
                            for r in 0..q {
                                let c = g[t * q * q + p * q + r];
                                if c != T::zero() {
                                    band.add(li * q + p, lj * q + r, c * row[j]);
                                }
                            }
                        }
                    }
                }
            }
            let mut b = vec![T::zero(); nf * q];
            for (j, r) in rhs.iter().enumerate() {
                for p in 0..q {
                    let mut c = T::one();
                    for e in 0..dim {
                        if e != d {
                            c *= h[j][e][p];
                        }
                    }
                    if c == T::zero() {
                        continue;
                    }
                    for (li, &i) in fr.iter().enumerate() {
                        b[li * q + p] += c * r[d][i];
                    }
                }
            }
            let backup = band.clone();
            let sol = match band.factor() {
                Ok(()) => band.solve(&b),
                Err(LinalgError::Singular { .. }) => {
                    let mut shifted = backup;
                    let n = shifted.dim();
                    let shift = T::of(1e-12) * shifted.trace().abs() / T::of_usize(n);
                    for i in 0..n {
                        shifted.add(i, i, shift);
                    }
                    shifted.factor().map_err(|_| TdError::Singular { axis: d })?;
                    report.shifted = true;
                    shifted.solve(&b)
                }
                Err(_) => return Err(TdError::Singular { axis: d }),
            };
            if sol.iter().any(|v| !v.is_finite()) {
                return Err(TdError::Singular { axis: d });
            }
            for (li, &i) in fr.iter().enumerate() {
                for r in 0..q {
                    modes[r][d][i] = sol[li * q + r];
                }
            }
            for t in 0..nt {
                s[t][d] = pair(modes, t, d);
            }
            for j in 0..rhs.len() {
                h[j][d] = proj(modes, j, d);
            }
        }
        balance(modes);
        for t in 0..nt {
            for e in 0..dim {
                s[t][e] = pair(modes, t, e);
            }
        }
        for j in 0..rhs.len() {
            for e in 0..dim {
                h[j][e] = proj(modes, j, e);
            }
        }
        let cur = expand(modes, &shape);
        let num: T = cur.iter().zip(&prev).map(|(&a, &b)| (a - b) * (a - b)).sum();
        let den: T = cur.iter().map(|&a| a * a).sum();
        let change = if den > T::zero() { (num / den).sqrt().to_f64_lossy() } else { 0.0 };
        prev = cur;
        report.sweeps = sweep;
        report.change = change;
        if settings.track_energy {
            report.energy.push(energy(op, modes, rhs));
        }
        if change < settings.tol {
            report.converged = true;
            return Ok(report);
        }
        history.push(change);
        let w = settings.stagnation;
        if w > 0 && history.len() >= w {
            let tail = &history[history.len() - w..];
            let hi = tail.iter().cloned().fold(0.0, f64::max);
            let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
            if hi <= lo * 1.02 {
                if change < settings.plateau_ok {
                    return Ok(report);
                }
                return Err(TdError::Stagnation { sweeps: sweep, change });
            }
        }
    }
    Ok(report)
}

/// Per-mode enrichment record of a greedy solve.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModeReport {
    pub enrichment_norms: Vec<f64>,
    /// `(Q, ‖u_TD − u_full‖_E)` when a mode study was run.
    pub deviations: Vec<(usize, f64)>,
    pub chosen: Option<usize>,
    pub sweeps: Vec<usize>,
}

/// Greedy enrichment: one new mode at a time with earlier modes frozen.
pub fn pgd_solve<T: Scalar>(
    op: &KronOperator<T>,
    rhs: &[Vec<Vec<T>>],
    free: &[Vec<usize>],
    mode_tol: f64,
    max_modes: usize,
    settings: &TdSettings,
) -> Result<(Modes<T>, ModeReport), TdError> {
    let mut modes: Modes<T> = Vec::new();
    let mut report = ModeReport::default();
    let shape = op.trial_shape.clone();
    for m in 0..max_modes {
        let mut r: Vec<Vec<Vec<T>>> = rhs.to_vec();
        r.extend(op.apply_separated(&modes, -T::one()));
        let mut new = random_modes(1, &shape, free, settings.seed.wrapping_add(m as u64));
        let sw = match als_solve(op, &r, free, &mut new, settings) {
            Ok(s) => s.sweeps,
            Err(TdError::Stagnation { sweeps, .. }) => sweeps,
            Err(e) => return Err(e),
        };
        let norm = new[0].iter().fold(1.0, |a, f| a * dot(f, f).sqrt().to_f64_lossy());
        report.enrichment_norms.push(norm);
        report.sweeps.push(sw);
        modes.push(new.pop().unwrap());
        if norm / report.enrichment_norms[0] < mode_tol {
            report.chosen = Some(modes.len());
            return Ok((modes, report));
        }
    }
    Err(TdError::MaxModes(max_modes))
}

/// Per-level separated solution.
#[derive(Clone, Debug)]
pub struct TdLevel<T> {
    pub bases: Vec<AxisBasis<T>>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub modes: Modes<T>,
    /// Leading modes interpolated from the coarser level (held fixed).
    pub n_lift: usize,
}

impl<T: Scalar> TdLevel<T> {
    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(&v, (&a, &b))| {
            let tol = T::of(1e-12) * (b - a);
            v >= a - tol && v <= b + tol
        })
    }

    pub fn eval(&self, x: &[T]) -> Result<T, TdError> {
        let mut total = T::zero();
        let evs: Vec<_> = self.bases.iter().zip(x).map(|(b, &xi)| b.eval(xi)).collect::<Result<_, _>>()?;
        for m in &self.modes {
            let mut p = T::one();
            for (ev, f) in evs.iter().zip(m) {
                p *= ev.values.iter().enumerate().map(|(k, &v)| v * f[ev.first + k]).sum::<T>();
            }
            total += p;
        }
        Ok(total)
    }
}

#[derive(Clone, Debug)]
pub struct TDSolution<T> {
    pub levels: Vec<TdLevel<T>>,
}

impl<T: Scalar> TDSolution<T> {
    pub fn mode_counts(&self) -> Vec<usize> {
        self.levels.iter().map(TdLevel::n_modes).collect()
    }

    /// `Σ_l Q_l Σ_d n_d^{(l)}`.
    pub fn dofs(&self) -> usize {
        self.levels
            .iter()
            .map(|l| l.n_modes() * l.bases.iter().map(AxisBasis::n_nodes).sum::<usize>())
            .sum()
    }

    pub fn storage_bytes(&self) -> usize {
        self.dofs() * std::mem::size_of::<T>()
    }

    pub fn from_states(states: &[LevelState<T>]) -> Option<Self> {
        let levels = states
            .iter()
            .map(|s| match &s.field {
                Field::Modes { modes, n_lift } => Some(TdLevel {
                    bases: s.basis.axis_bases().to_vec(),
                    lower: s.lower.clone(),
                    upper: s.upper.clone(),
                    modes: modes.clone(),
                    n_lift: *n_lift,
                }),
                Field::Nodal(_) => None,
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Self { levels })
    }
}

/// Sum-product evaluation on the finest level containing `x`.
pub fn td_eval<T: Scalar>(sol: &TDSolution<T>, x: &[T]) -> Result<T, TdError> {
    let level = sol
        .levels
        .iter()
        .rev()
        .find(|l| l.contains(x))
        .ok_or_else(|| TdError::Outside(x.iter().map(|v| v.to_f64_lossy()).collect()))?;
    level.eval(x)
}

/// Fine-level factors for the first `Q_{l−1}` modes: the coarse factors
/// interpolated at every fine node (so the boundary rows carry the coarse
/// trace), plus `Q_l − Q_{l−1}` zero-boundary modes left to be solved.
pub fn nest_boundary_modes<T: Scalar>(
    fine_bases: &[AxisBasis<T>],
    coarse: &TdLevel<T>,
    q_fine: usize,
) -> Result<(Modes<T>, usize), TdError> {
    let qc = coarse.n_modes();
    if q_fine <= qc {
        return Err(TdError::ModeOrdering(vec![qc, q_fine]));
    }
    let mut out = Vec::with_capacity(qc);
    for m in &coarse.modes {
        let mut axes = Vec::with_capacity(m.len());
        for (d, f) in m.iter().enumerate() {
            let v = fine_bases[d]
                .axis()
                .nodes()
                .into_iter()
                .map(|x| coarse.bases[d].interpolate(f, x))
                .collect::<Result<Vec<T>, _>>()?;
            axes.push(v);
        }
        out.push(axes);
    }
    Ok((out, q_fine - qc))
}

/// Multilevel TD solve; mode counts come from the level specs.
pub fn solve_td<T: Scalar>(
    problem: &ManufacturedProblem<T>,
    hierarchy: &MultilevelMesh<T>,
    tol: f64,
    max_iter: usize,
    td: TdSettings,
) -> Result<(TDSolution<T>, mlvms::AlternationReport), MlvmsError> {
    let settings = SolveSettings { tol, max_iter, backend: Backend::Td(td), ..SolveSettings::default() };
    let (states, report) = mlvms::solve_m_level(problem, hierarchy, &settings)?;
    Ok((TDSolution::from_states(&states).expect("td backend"), report))
}

/// Greedy solve on a single level.
pub fn solve_pgd<T: Scalar>(
    problem: &ManufacturedProblem<T>,
    hierarchy: &MultilevelMesh<T>,
    mode_tol: f64,
    max_modes: usize,
    td: TdSettings,
) -> Result<(TDSolution<T>, ModeReport), MlvmsError> {
    let plan = mlvms::Plan::new(problem, hierarchy, &SolveSettings::default())?;
    let sys = &plan.levels[0];
    let rhs = sys.load.clone();
    let (modes, report) = pgd_solve(&sys.op, &rhs, &sys.free, mode_tol, max_modes, &td)?;
    let level = TdLevel {
        bases: sys.basis.axis_bases().to_vec(),
        lower: sys.lower.clone(),
        upper: sys.upper.clone(),
        modes,
        n_lift: 0,
    };
    Ok((TDSolution { levels: vec![level] }, report))
}

/// Energy norm `sqrt(a(v, v))` of a nodal tensor for the operator.
pub fn discrete_energy<T: Scalar>(op: &KronOperator<T>, v: &[T]) -> f64 {
    dot(v, &op.apply(v)).to_f64_lossy().max(0.0).sqrt()
}

/// Result of comparing a TD solve with the full solve on one mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub e_td: f64,
    pub e_full: f64,
    pub deviation: f64,
    /// `|e_td² − e_full² − deviation²|`.
    pub residual: f64,
    /// Energy norm of the exact solution.
    pub u_energy: f64,
}

impl Decomposition {
    pub fn relative_residual(&self) -> f64 {
        self.residual / (self.e_td * self.e_td).max(f64::MIN_POSITIVE)
    }
}

/// Energy errors of the TD and full solutions against the exact solution
/// and their mutual deviation on a single-level mesh.
pub fn error_decomposition_check<T: Scalar>(
    problem: &ManufacturedProblem<T>,
    hierarchy: &MultilevelMesh<T>,
    q: usize,
    td: TdSettings,
) -> Result<Decomposition, MlvmsError> {
    let (full, td_state) = full_and_td(problem, hierarchy, q, td)?;
    Ok(decompose(problem, &full, &td_state))
}

fn single_level<T: Scalar>(hierarchy: &MultilevelMesh<T>, q: usize) -> Result<MultilevelMesh<T>, MlvmsError> {
    let mut spec = hierarchy.level(0).spec.clone();
    spec.modes = Some(q);
    Ok(MultilevelMesh::new(vec![spec])?)
}

fn full_and_td<T: Scalar>(
    problem: &ManufacturedProblem<T>,
    hierarchy: &MultilevelMesh<T>,
    q: usize,
    td: TdSettings,
) -> Result<(LevelState<T>, LevelState<T>), MlvmsError> {
    let h = single_level(hierarchy, q)?;
    let full = mlvms::solve_m_level(problem, &h, &SolveSettings::default())?.0.remove(0);
    let settings = SolveSettings { backend: Backend::Td(td), ..SolveSettings::default() };
    let tds = mlvms::solve_m_level(problem, &h, &settings)?.0.remove(0);
    Ok((full, tds))
}

fn decompose<T: Scalar>(problem: &ManufacturedProblem<T>, full: &LevelState<T>, td: &LevelState<T>) -> Decomposition {
    let form = problem.form();
    let nf = crate::norms::region_errors(problem, full, None, None).unwrap_or_default();
    let e_full = nf.energy.sqrt();
    let e_td = crate::norms::level_energy_error(problem, td, None).sqrt();
    let deviation = deviation(&form, full, td);
    Decomposition {
        e_td,
        e_full,
        deviation,
        residual: (e_td * e_td - e_full * e_full - deviation * deviation).abs(),
        u_energy: (problem.k.to_f64_lossy() * nf.u_h1).sqrt(),
    }
}

fn deviation<T: Scalar>(form: &SeparableForm<T>, a: &LevelState<T>, b: &LevelState<T>) -> f64 {
    let op = KronOperator::assemble(
        form,
        a.basis.axis_bases(),
        a.basis.axis_bases(),
        &a.lower,
        &a.upper,
        a.qorder(),
    );
    let (u, v) = (a.nodal(), b.nodal());
    let diff: Vec<T> = u.iter().zip(&v).map(|(&x, &y)| x - y).collect();
    discrete_energy(&op, &diff)
}

/// Smallest `Q ≤ max_modes` whose TD solution deviates from the full
/// solution by less than `deviation_tol` in energy norm.
pub fn estimate_modes<T: Scalar>(
    problem: &ManufacturedProblem<T>,
    coarse: &MultilevelMesh<T>,
    deviation_tol: f64,
    max_modes: usize,
    td: TdSettings,
) -> Result<(usize, ModeReport), MlvmsError> {
    let h = single_level(coarse, 1)?;
    let form = problem.form();
    let full = mlvms::solve_m_level(problem, &h, &SolveSettings::default())?.0.remove(0);
    let mut report = ModeReport::default();
    for q in 1..=max_modes {
        let hq = single_level(coarse, q)?;
        let settings = SolveSettings { backend: Backend::Td(td.clone()), ..SolveSettings::default() };
        let tds = mlvms::solve_m_level(problem, &hq, &settings)?.0.remove(0);
        let dev = deviation(&form, &full, &tds);
        report.deviations.push((q, dev));
        if dev < deviation_tol {
            report.chosen = Some(q);
            return Ok((q, report));
        }
    }
    Err(TdError::Unreachable { max_modes, tol: deviation_tol }.into())
}

/// Full and TD single-level solves for each `Q` with the resulting energy
/// quantities.
pub fn mode_table<T: Scalar>(
    problem: &ManufacturedProblem<T>,
    hierarchy: &MultilevelMesh<T>,
    qs: &[usize],
    td: TdSettings,
) -> Result<Vec<(usize, Decomposition)>, MlvmsError> {
    let h = single_level(hierarchy, 1)?;
    let full = mlvms::solve_m_level(problem, &h, &SolveSettings::default())?.0.remove(0);
    let mut out = Vec::new();
    for &q in qs {
        let hq = single_level(hierarchy, q)?;
        let settings = SolveSettings { backend: Backend::Td(td.clone()), ..SolveSettings::default() };
        let tds = mlvms::solve_m_level(problem, &hq, &settings)?.0.remove(0);
        out.push((q, decompose(problem, &full, &tds)));
    }
    Ok(out)
}
