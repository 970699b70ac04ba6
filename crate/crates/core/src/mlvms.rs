//! Alternating-level ML-VMS solves: every level is solved with its own
//! interpolant, Dirichlet data from the next coarser level on its interface
//! and coarse-projection corrections from all finer levels.

use thiserror::Error;

use crate::assembly::{axis_moment, restrict, scatter, KronOperator, KronSolver, SeparableForm};
use crate::chidenn::{BasisError, ShapeFunctions, TensorBasis};
use crate::linalg::{LinalgError, Mat};
use crate::mesh::{flat_index, multi_index, FaceKind, MeshError, MultilevelMesh};
use crate::problems::{BoundaryKind, ManufacturedProblem};
use crate::td::{als_solve, expand, random_modes, Modes, TdError, TdSettings};
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MlvmsError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("solver: {0}")]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Td(#[from] TdError),
    #[error("inconsistent hierarchy: {0}")]
    Hierarchy(String),
    #[error("point {0:?} outside the domain")]
    Outside(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Backend {
    /// Nodal unknowns and a direct solve per level.
    Full,
    /// Separated modes per level, mode counts from the level specs.
    Td(TdSettings),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub backend: Backend,
    /// Gauss points per cell for operators (default `p + 2`).
    pub qorder: Option<usize>,
    /// Sub-cells per element for source integrals.
    pub load_subdiv: usize,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 50, backend: Backend::Full, qorder: None, load_subdiv: 4 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Field<T> {
    Nodal(Vec<T>),
    Modes { modes: Modes<T>, n_lift: usize },
}

/// Solution of one level.
#[derive(Clone, Debug)]
pub struct LevelState<T> {
    pub level: usize,
    pub basis: TensorBasis<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub field: Field<T>,
    /// Values on interface nodes (empty on level 1).
    pub interface: Vec<(usize, T)>,
}

impl<T: Scalar> LevelState<T> {
    pub fn shape(&self) -> Vec<usize> {
        self.basis.mesh().node_shape()
    }

    pub fn qorder(&self) -> usize {
        self.basis.hyper().p + 2
    }

    pub fn nodal(&self) -> Vec<T> {
        match &self.field {
            Field::Nodal(u) => u.clone(),
            Field::Modes { modes, .. } => expand(modes, &self.shape()),
        }
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.iter().zip(self.basis.mesh().axes()).all(|(&v, a)| {
            let tol = T::of(1e-9) * a.h();
            v >= a.lo - tol && v <= a.hi + tol
        })
    }

    pub fn eval(&self, x: &[T]) -> Result<T, MlvmsError> {
        match &self.field {
            Field::Nodal(u) => Ok(self.basis.interpolate(u, x)?),
            Field::Modes { modes, .. } => {
                let evs = self
                    .basis
                    .axis_bases()
                    .iter()
                    .zip(x)
                    .map(|(b, &xi)| b.eval(xi))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(modes
                    .iter()
                    .map(|m| {
                        evs.iter()
                            .zip(m)
                            .map(|(ev, f)| ev.values.iter().enumerate().map(|(k, &v)| v * f[ev.first + k]).sum::<T>())
                            .fold(T::one(), |a, b| a * b)
                    })
                    .sum())
            }
        }
    }

    /// Unknowns stored for this level.
    pub fn dofs(&self) -> usize {
        match &self.field {
            Field::Nodal(u) => u.len(),
            Field::Modes { modes, .. } => modes.iter().map(|m| m.iter().map(Vec::len).sum::<usize>()).sum(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AlternationReport {
    pub iterations: usize,
    /// Relative change per level for every iteration.
    pub changes: Vec<Vec<f64>>,
    pub converged: bool,
    /// Axis sweeps per level per iteration (reduced-order runs).
    pub sweeps: Vec<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceBc {
    Outer,
    Interface,
    Natural,
}

/// Everything about a level that does not change between sweeps.
pub struct LevelSystem<T> {
    pub index: usize,
    pub basis: TensorBasis<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub shape: Vec<usize>,
    pub op: KronOperator<T>,
    pub faces: Vec<[FaceBc; 2]>,
    /// Per-axis indices not on a Dirichlet face.
    pub free: Vec<Vec<usize>>,
    /// Separated source load.
    pub load: Modes<T>,
    pub qorder: usize,
    /// Coarser-level shape functions at this level's nodes, per axis.
    pub prolong: Option<Vec<Mat<T>>>,
    pub modes: Option<usize>,
}

/// Operators coupling level `l` (test) with a finer level `k`.
pub struct Coupling<T> {
    pub k: usize,
    pub cross: KronOperator<T>,
    pub cross_inner: Option<KronOperator<T>>,
    pub own: KronOperator<T>,
    pub own_inner: Option<KronOperator<T>>,
    /// `(level-l node, level-k node)` pairs inside the level-k box, per axis.
    pub sample: Vec<Vec<(usize, usize)>>,
}

pub struct Plan<T> {
    pub form: SeparableForm<T>,
    pub levels: Vec<LevelSystem<T>>,
    /// `couplings[l]` lists the finer levels of `l`.
    pub couplings: Vec<Vec<Coupling<T>>>,
    solvers: Vec<Option<KronSolver<T>>>,
}

impl<T: Scalar> Plan<T> {
    pub fn new(
        problem: &ManufacturedProblem<T>,
        hierarchy: &MultilevelMesh<T>,
        settings: &SolveSettings,
    ) -> Result<Self, MlvmsError> {
        let dim = hierarchy.dim();
        if problem.dim() != dim || problem.boundary.len() != dim {
            return Err(MlvmsError::Hierarchy(format!(
                "problem has {} axes, hierarchy {dim}",
                problem.dim()
            )));
        }
        let form = problem.form();
        let m = hierarchy.n_levels();
        let mut levels: Vec<LevelSystem<T>> = Vec::with_capacity(m);
        for l in 0..m {
            let lv = hierarchy.level(l);
            let basis = TensorBasis::new(lv.mesh.clone(), lv.spec.hyper)?;
            let qorder = settings.qorder.unwrap_or(lv.spec.hyper.p + 2);
            if qorder < lv.spec.hyper.p + 1 {
                return Err(MlvmsError::Hierarchy(format!("quadrature order {qorder} below p + 1")));
            }
            let shape = lv.mesh.node_shape();
            let faces: Vec<[FaceBc; 2]> = (0..dim)
                .map(|d| {
                    let mut f = [FaceBc::Natural; 2];
                    for side in 0..2 {
                        f[side] = match (lv.faces[d][side], problem.boundary[d][side]) {
                            (FaceKind::Interface, _) => FaceBc::Interface,
                            (FaceKind::Outer, BoundaryKind::Dirichlet) => FaceBc::Outer,
                            (FaceKind::Outer, BoundaryKind::Neumann) => FaceBc::Natural,
                        };
                    }
                    f
                })
                .collect();
            let free = (0..dim)
                .map(|d| {
                    let lo = usize::from(faces[d][0] != FaceBc::Natural);
                    let hi = shape[d] - usize::from(faces[d][1] != FaceBc::Natural);
                    (lo..hi).collect()
                })
                .collect();
            let lower = lv.spec.lower.clone();
            let upper = lv.spec.upper.clone();
            let op = KronOperator::assemble(&form, basis.axis_bases(), basis.axis_bases(), &lower, &upper, qorder);
            let load = problem
                .source
                .terms
                .iter()
                .map(|t| {
                    let mut axes: Vec<Vec<T>> = (0..dim)
                        .map(|d| {
                            let f = &t.factors[d].f;
                            axis_moment(
                                basis.axis_basis(d),
                                &|x| f(x),
                                0,
                                (lower[d], upper[d]),
                                &form.breaks[d],
                                qorder + 2,
                                settings.load_subdiv,
                            )
                        })
                        .collect();
                    axes[0].iter_mut().for_each(|v| *v *= t.coef);
                    axes
                })
                .collect();
            let prolong = if l > 0 {
                let coarse = &levels[l - 1].basis;
                let mats = (0..dim)
                    .map(|d| {
                        let cb = coarse.axis_basis(d);
                        let nodes = basis.axis_basis(d).axis().nodes();
                        let mut p = Mat::zeros(nodes.len(), cb.n_nodes());
                        for (i, &x) in nodes.iter().enumerate() {
                            let ev = cb.eval(x)?;
                            for (k, &v) in ev.values.iter().enumerate() {
                                p.row_mut(i)[ev.first + k] = v;
                            }
                        }
                        Ok(p)
                    })
                    .collect::<Result<Vec<_>, BasisError>>()?;
                Some(mats)
            } else {
                None
            };
            levels.push(LevelSystem {
                index: l,
                basis,
                lower,
                upper,
                shape,
                op,
                faces,
                free,
                load,
                qorder,
                prolong,
                modes: lv.spec.modes,
            });
        }
        let mut couplings = Vec::with_capacity(m);
        for l in 0..m {
            let mut list = Vec::new();
            for k in l + 1..m {
                let (a, b) = (&levels[l], &levels[k]);
                let q = a.qorder.max(b.qorder);
                let cross = KronOperator::assemble(&form, a.basis.axis_bases(), b.basis.axis_bases(), &b.lower, &b.upper, q);
                let own = KronOperator::assemble(&form, a.basis.axis_bases(), a.basis.axis_bases(), &b.lower, &b.upper, q);
                let (cross_inner, own_inner) = if k + 1 < m {
                    let c = &levels[k + 1];
                    (
                        Some(KronOperator::assemble(&form, a.basis.axis_bases(), b.basis.axis_bases(), &c.lower, &c.upper, q)),
                        Some(KronOperator::assemble(&form, a.basis.axis_bases(), a.basis.axis_bases(), &c.lower, &c.upper, q)),
                    )
                } else {
                    (None, None)
                };
                let sample = (0..dim)
                    .map(|d| {
                        let fine = b.basis.axis_basis(d).axis();
                        a.basis
                            .axis_basis(d)
                            .axis()
                            .nodes()
                            .iter()
                            .enumerate()
                            .filter_map(|(i, &x)| fine.node_at(x).map(|j| (i, j)))
                            .collect()
                    })
                    .collect();
                list.push(Coupling { k, cross, cross_inner, own, own_inner, sample });
            }
            couplings.push(list);
        }
        let solvers = match settings.backend {
            Backend::Full => levels
                .iter()
                .map(|s| KronSolver::new(&s.op, &form, s.free.clone()).map(Some))
                .collect::<Result<Vec<_>, _>>()?,
            Backend::Td(_) => levels.iter().map(|_| None).collect(),
        };
        Ok(Self { form, levels, couplings, solvers })
    }

    /// Whether node multi-index `m` lies on a face of kind `kind`.
    fn on_face(&self, l: usize, m: &[usize], kind: FaceBc) -> bool {
        let s = &self.levels[l];
        (0..m.len()).any(|d| (m[d] == 0 && s.faces[d][0] == kind) || (m[d] == s.shape[d] - 1 && s.faces[d][1] == kind))
    }

    fn interface_nodes(&self, l: usize) -> Vec<usize> {
        let s = &self.levels[l];
        let n: usize = s.shape.iter().product();
        (0..n)
            .filter(|&id| self.on_face(l, &multi_index(&s.shape, id), FaceBc::Interface))
            .collect()
    }
}

fn prolongate_nodal<T: Scalar>(p: &[Mat<T>], coarse: &[T], coarse_shape: &[usize]) -> Vec<T> {
    let mats: Vec<crate::assembly::AxisMat<T>> = p.iter().map(|m| crate::assembly::AxisMat::new(m.clone())).collect();
    let refs: Vec<&crate::assembly::AxisMat<T>> = mats.iter().collect();
    crate::assembly::kron_apply(&refs, coarse, coarse_shape)
}

fn prolongate_modes<T: Scalar>(p: &[Mat<T>], modes: &Modes<T>) -> Modes<T> {
    modes.iter().map(|m| m.iter().zip(p).map(|(f, pm)| pm.matvec(f)).collect()).collect()
}

/// Level-`l` nodal vector equal to `u_l` except at level-`l` nodes inside
/// the level-`k` box, where it takes the values of `u_k`.
fn replace_inside<T: Scalar>(ul: &[T], shape_l: &[usize], uk: &[T], shape_k: &[usize], sample: &[Vec<(usize, usize)>]) -> Vec<T> {
    let mut out = ul.to_vec();
    let lens: Vec<usize> = sample.iter().map(Vec::len).collect();
    let total: usize = lens.iter().product();
    let mut ml = vec![0; lens.len()];
    let mut mk = vec![0; lens.len()];
    for c in 0..total {
        let off = multi_index(&lens, c);
        for d in 0..lens.len() {
            ml[d] = sample[d][off[d]].0;
            mk[d] = sample[d][off[d]].1;
        }
        out[flat_index(shape_l, &ml)] = uk[flat_index(shape_k, &mk)];
    }
    out
}

/// Separated `ũ = u_l + χ (u_k − u_l)` on level-`l` nodes.
fn replace_inside_modes<T: Scalar>(ul: &Modes<T>, uk: &Modes<T>, shape_l: &[usize], sample: &[Vec<(usize, usize)>]) -> Modes<T> {
    let mut out = ul.clone();
    for m in uk {
        out.push(
            m.iter()
                .enumerate()
                .map(|(d, f)| {
                    let mut v = vec![T::zero(); shape_l[d]];
                    for &(i, j) in &sample[d] {
                        v[i] = f[j];
                    }
                    v
                })
                .collect(),
        );
    }
    for m in ul {
        let mut axes: Vec<Vec<T>> = m
            .iter()
            .enumerate()
            .map(|(d, f)| {
                let mut v = vec![T::zero(); shape_l[d]];
                for &(i, _) in &sample[d] {
                    v[i] = f[i];
                }
                v
            })
            .collect();
        axes[0].iter_mut().for_each(|v| *v = -*v);
        out.push(axes);
    }
    out
}

fn sub_assign<T: Scalar>(a: &mut [T], b: &[T]) {
    a.iter_mut().zip(b).for_each(|(x, &y)| *x -= y);
}

fn add_assign<T: Scalar>(a: &mut [T], b: &[T]) {
    a.iter_mut().zip(b).for_each(|(x, &y)| *x += y);
}

fn max_abs<T: Scalar>(v: &[T]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.to_f64_lossy().abs()))
}

struct Alternation<'a, T> {
    plan: &'a Plan<T>,
    problem: &'a ManufacturedProblem<T>,
    backend: Backend,
    fields: Vec<Option<Field<T>>>,
}

impl<'a, T: Scalar> Alternation<'a, T> {
    fn nodal(&self, l: usize) -> Option<Vec<T>> {
        self.fields[l].as_ref().map(|f| match f {
            Field::Nodal(u) => u.clone(),
            Field::Modes { modes, .. } => expand(modes, &self.plan.levels[l].shape),
        })
    }

    fn full_step(&self, l: usize) -> Result<Field<T>, MlvmsError> {
        let plan = self.plan;
        let sys = &plan.levels[l];
        let n: usize = sys.shape.iter().product();
        let mut rhs = expand(&sys.load, &sys.shape);
        let cur = self.nodal(l).unwrap_or_else(|| vec![T::zero(); n]);
        for c in &plan.couplings[l] {
            let Some(uk) = self.nodal(c.k) else { continue };
            let shape_k = &plan.levels[c.k].shape;
            let tilde = replace_inside(&cur, &sys.shape, &uk, shape_k, &c.sample);
            sub_assign(&mut rhs, &c.cross.apply(&uk));
            add_assign(&mut rhs, &c.own.apply(&tilde));
            if let (Some(ci), Some(oi)) = (&c.cross_inner, &c.own_inner) {
                add_assign(&mut rhs, &ci.apply(&uk));
                sub_assign(&mut rhs, &oi.apply(&tilde));
            }
        }
        let coarse = if l > 0 {
            let uc = self.nodal(l - 1).expect("coarser level solved first");
            Some(prolongate_nodal(sys.prolong.as_ref().unwrap(), &uc, &plan.levels[l - 1].shape))
        } else {
            None
        };
        let mut u0 = vec![T::zero(); n];
        for (id, v) in u0.iter_mut().enumerate() {
            let m = multi_index(&sys.shape, id);
            if plan.on_face(l, &m, FaceBc::Outer) {
                *v = self.problem.boundary_value(&sys.basis.mesh().node_coords(id));
            } else if plan.on_face(l, &m, FaceBc::Interface) {
                *v = coarse.as_ref().unwrap()[id];
            }
        }
        sub_assign(&mut rhs, &sys.op.apply(&u0));
        let rf = restrict(&rhs, &sys.shape, &sys.free);
        let x = plan.solvers[l].as_ref().unwrap().solve(&rf)?;
        let mut u = u0;
        scatter(&mut u, &sys.shape, &sys.free, &x);
        Ok(Field::Nodal(u))
    }

    fn lift(&self, l: usize) -> Result<Modes<T>, MlvmsError> {
        let sys = &self.plan.levels[l];
        if l > 0 {
            let Some(Field::Modes { modes, .. }) = &self.fields[l - 1] else { unreachable!() };
            return Ok(prolongate_modes(sys.prolong.as_ref().unwrap(), modes));
        }
        let n: usize = sys.shape.iter().product();
        let mut g = 0.0f64;
        for id in 0..n {
            if self.plan.on_face(0, &multi_index(&sys.shape, id), FaceBc::Outer) {
                g = g.max(self.problem.boundary_value(&sys.basis.mesh().node_coords(id)).to_f64_lossy().abs());
            }
        }
        if g < 1e-30 {
            return Ok(Vec::new());
        }
        let exact = self.problem.exact.as_ref().ok_or(TdError::NonSeparableBoundary)?;
        Ok(exact
            .terms
            .iter()
            .map(|t| {
                let mut axes: Vec<Vec<T>> = t
                    .factors
                    .iter()
                    .enumerate()
                    .map(|(d, f)| sys.basis.axis_basis(d).axis().nodes().into_iter().map(|x| (f.f)(x)).collect())
                    .collect();
                axes[0].iter_mut().for_each(|v| *v *= t.coef);
                axes
            })
            .collect())
    }

    /// Level solve in separated form. Inside a multilevel alternation an
    /// axis-sweep plateau is handed back instead of raised: the next outer
    /// iteration restarts from these modes.
    fn td_step(&self, l: usize, td: &TdSettings) -> Result<(Field<T>, usize, Option<TdError>), MlvmsError> {
        let plan = self.plan;
        let sys = &plan.levels[l];
        let lift = self.lift(l)?;
        let total = sys.modes.ok_or(TdError::MissingModes(l + 1))?;
        let n_free = if l == 0 { total } else { total.checked_sub(lift.len()).filter(|&q| q > 0).ok_or_else(|| TdError::ModeOrdering(self.mode_counts()))? };
        let mut rhs: Modes<T> = sys.load.clone();
        rhs.extend(sys.op.apply_separated(&lift, -T::one()));
        let cur: Modes<T> = match &self.fields[l] {
            Some(Field::Modes { modes, .. }) => modes.clone(),
            _ => Vec::new(),
        };
        for c in &plan.couplings[l] {
            let Some(Field::Modes { modes: uk, .. }) = &self.fields[c.k] else { continue };
            let tilde = replace_inside_modes(&cur, uk, &sys.shape, &c.sample);
            rhs.extend(c.cross.apply_separated(uk, -T::one()));
            rhs.extend(c.own.apply_separated(&tilde, T::one()));
            if let (Some(ci), Some(oi)) = (&c.cross_inner, &c.own_inner) {
                rhs.extend(ci.apply_separated(uk, T::one()));
                rhs.extend(oi.apply_separated(&tilde, -T::one()));
            }
        }
        let mut free_modes = match &self.fields[l] {
            Some(Field::Modes { modes, n_lift }) if modes.len() - n_lift == n_free => modes[*n_lift..].to_vec(),
            _ => random_modes(n_free, &sys.shape, &sys.free, td.seed.wrapping_add(l as u64)),
        };
        let (sweeps, stalled) = match als_solve(&sys.op, &rhs, &sys.free, &mut free_modes, td) {
            Ok(rep) => (rep.sweeps, None),
            Err(e @ TdError::Stagnation { sweeps, .. }) if plan.levels.len() > 1 => (sweeps, Some(e)),
            Err(e) => return Err(e.into()),
        };
        let n_lift = lift.len();
        let mut modes = lift;
        modes.extend(free_modes);
        Ok((Field::Modes { modes, n_lift }, sweeps, stalled))
    }

    fn mode_counts(&self) -> Vec<usize> {
        self.plan.levels.iter().map(|s| s.modes.unwrap_or(0)).collect()
    }

    fn run(mut self, tol: f64, max_iter: usize) -> Result<(Vec<LevelState<T>>, AlternationReport), MlvmsError> {
        let m = self.plan.levels.len();
        if let Backend::Td(_) = &self.backend {
            let q = self.mode_counts();
            if q.iter().any(|&v| v == 0) || q.windows(2).any(|w| w[1] <= w[0]) {
                return Err(TdError::ModeOrdering(q).into());
            }
        }
        let mut report = AlternationReport::default();
        let mut stalled = None;
        for it in 1..=max_iter.max(1) {
            stalled = None;
            let mut changes = Vec::with_capacity(m);
            let mut sweeps = Vec::with_capacity(m);
            for l in 0..m {
                let old = self.nodal(l);
                let new = match &self.backend {
                    Backend::Full => self.full_step(l)?,
                    Backend::Td(td) => {
                        let (f, s, st) = self.td_step(l, &td.clone())?;
                        sweeps.push(s);
                        stalled = stalled.or(st);
                        f
                    }
                };
                self.fields[l] = Some(new);
                let cur = self.nodal(l).unwrap();
                let scale = max_abs(&cur);
                let diff = match old {
                    Some(o) => cur.iter().zip(&o).fold(0.0f64, |a, (&x, &y)| a.max((x - y).to_f64_lossy().abs())),
                    None => scale,
                };
                changes.push(diff / (scale + 1e-14));
            }
            let worst = changes.iter().cloned().fold(0.0, f64::max);
            report.changes.push(changes);
            report.sweeps.push(sweeps);
            report.iterations = it;
            if m == 1 || worst < tol {
                report.converged = true;
                break;
            }
        }
        if let (false, Some(e)) = (report.converged, stalled) {
            return Err(e.into());
        }
        let plan = self.plan;
        let states = self
            .fields
            .into_iter()
            .enumerate()
            .map(|(l, f)| {
                let sys = &plan.levels[l];
                let field = f.unwrap();
                let nodal = match &field {
                    Field::Nodal(u) => u.clone(),
                    Field::Modes { modes, .. } => expand(modes, &sys.shape),
                };
                let interface = plan.interface_nodes(l).into_iter().map(|id| (id, nodal[id])).collect();
                LevelState {
                    level: l,
                    basis: sys.basis.clone(),
                    lower: sys.lower.clone(),
                    upper: sys.upper.clone(),
                    field,
                    interface,
                }
            })
            .collect();
        Ok((states, report))
    }
}

/// Alternating-level solve over any number of nested levels.
pub fn solve_m_level<T: Scalar>(
    problem: &ManufacturedProblem<T>,
    hierarchy: &MultilevelMesh<T>,
    settings: &SolveSettings,
) -> Result<(Vec<LevelState<T>>, AlternationReport), MlvmsError> {
    let plan = Plan::new(problem, hierarchy, settings)?;
    solve_with_plan(&plan, problem, settings)
}

/// Alternation on a prebuilt plan (reuse across runs sharing the hierarchy).
pub fn solve_with_plan<T: Scalar>(
    plan: &Plan<T>,
    problem: &ManufacturedProblem<T>,
    settings: &SolveSettings,
) -> Result<(Vec<LevelState<T>>, AlternationReport), MlvmsError> {
    let alt = Alternation {
        plan,
        problem,
        backend: settings.backend.clone(),
        fields: vec![None; plan.levels.len()],
    };
    alt.run(settings.tol, settings.max_iter)
}

/// Coarse solve with the fine-level correction, then fine solve with
/// interface data from the coarse level, until the change is below `tol`.
pub fn solve_two_level<T: Scalar>(
    problem: &ManufacturedProblem<T>,
    hierarchy: &MultilevelMesh<T>,
    settings: &SolveSettings,
) -> Result<(Vec<LevelState<T>>, AlternationReport), MlvmsError> {
    if hierarchy.n_levels() != 2 {
        return Err(MlvmsError::Hierarchy(format!("expected 2 levels, got {}", hierarchy.n_levels())));
    }
    solve_m_level(problem, hierarchy, settings)
}

/// Value of the finest level whose box contains `x`.
pub fn composite_eval<T: Scalar>(states: &[LevelState<T>], x: &[T]) -> Result<T, MlvmsError> {
    let s = states
        .iter()
        .rev()
        .find(|s| s.contains(x))
        .ok_or_else(|| MlvmsError::Outside(x.iter().map(|v| v.to_f64_lossy()).collect()))?;
    s.eval(x)
}

/// Fine-level values at the coarse nodes inside the fine box.
pub fn coarse_projection<T: Scalar>(fine: &LevelState<T>, coarse: &LevelState<T>) -> Result<Vec<(usize, T)>, MlvmsError> {
    let dim = fine.lower.len();
    let shape_c = coarse.shape();
    let shape_f = fine.shape();
    let sample: Vec<Vec<(usize, usize)>> = (0..dim)
        .map(|d| {
            let fa = fine.basis.axis_basis(d).axis();
            coarse
                .basis
                .axis_basis(d)
                .axis()
                .nodes()
                .iter()
                .enumerate()
                .filter_map(|(i, &x)| fa.node_at(x).map(|j| (i, j)))
                .collect()
        })
        .collect();
    if sample.iter().any(Vec::is_empty) {
        return Err(MlvmsError::Hierarchy("no coarse node inside the fine box".into()));
    }
    let u = fine.nodal();
    let lens: Vec<usize> = sample.iter().map(Vec::len).collect();
    let total: usize = lens.iter().product();
    Ok((0..total)
        .map(|c| {
            let off = multi_index(&lens, c);
            let mc: Vec<usize> = (0..dim).map(|d| sample[d][off[d]].0).collect();
            let mf: Vec<usize> = (0..dim).map(|d| sample[d][off[d]].1).collect();
            (flat_index(&shape_c, &mc), u[flat_index(&shape_f, &mf)])
        })
        .collect())
}
