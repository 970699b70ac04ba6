//! Error norms of level solutions against a separated exact solution.
//!
//! Integrals run over Gauss points on every element of the level mesh cut to
//! the requested region. Nodal fields are evaluated on the tensor grid of
//! points; mode fields are contracted axis by axis. Time (when present) only
//! enters the L² integral. Mapped problems are measured in the reference
//! frame.

use thiserror::Error;

use crate::assembly::{kron_apply, AxisMat};
use crate::chidenn::{AxisBasis, BasisError};
use crate::linalg::Mat;
use crate::mlvms::{Field, LevelState};
use crate::problems::{ManufacturedProblem, SeparatedFn};
use crate::quadrature::QuadRule;
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormError {
    #[error("problem has no exact solution")]
    NoExact,
    #[error(transparent)]
    Basis(#[from] BasisError),
}

/// Squared integrals over one region: errors and the exact solution's own
/// norms (`u_*`).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NormsSq {
    pub l2: f64,
    /// Spatial gradient seminorm.
    pub h1: f64,
    /// `k · h1`.
    pub energy: f64,
    pub u_l2: f64,
    pub u_h1: f64,
}

impl NormsSq {
    fn add(self, o: Self, s: f64) -> Self {
        Self {
            l2: self.l2 + s * o.l2,
            h1: self.h1 + s * o.h1,
            energy: self.energy + s * o.energy,
            u_l2: self.u_l2 + s * o.u_l2,
            u_h1: self.u_h1 + s * o.u_h1,
        }
    }

    pub fn sqrt(self) -> ErrorNorms {
        let r = |v: f64| v.max(0.0).sqrt();
        ErrorNorms { l2: r(self.l2), h1: r(self.h1), energy: r(self.energy), u_l2: r(self.u_l2), u_h1: r(self.u_h1) }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    pub h1: f64,
    pub energy: f64,
    pub u_l2: f64,
    pub u_h1: f64,
}

impl ErrorNorms {
    pub fn rel_l2(&self) -> f64 {
        self.l2 / self.u_l2
    }

    /// Energy error over the energy norm of the exact solution.
    pub fn rel_energy(&self) -> f64 {
        self.h1 / self.u_h1
    }
}

struct AxisGrid<T> {
    points: Vec<T>,
    weights: Vec<f64>,
    vals: Mat<T>,
    ders: Mat<T>,
}

fn axis_grid<T: Scalar>(basis: &AxisBasis<T>, lo: T, hi: T, breaks: &[T], q: usize) -> Result<AxisGrid<T>, BasisError> {
    let axis = basis.axis();
    let tol = axis.h() * T::of(1e-10);
    let mut cuts: Vec<T> = axis.nodes().into_iter().chain(breaks.iter().copied()).filter(|&x| x > lo + tol && x < hi - tol).collect();
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() <= tol);
    let rule = QuadRule::<T>::gauss(q);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for w in cuts.windows(2) {
        for (x, wt) in rule.on_interval(w[0], w[1]) {
            points.push(x);
            weights.push(wt.to_f64_lossy());
        }
    }
    let n = basis.n_nodes();
    let mut vals = Mat::zeros(points.len(), n);
    let mut ders = Mat::zeros(points.len(), n);
    for (i, &x) in points.iter().enumerate() {
        let ev = basis.eval(x)?;
        for k in 0..ev.values.len() {
            vals.row_mut(i)[ev.first + k] = ev.values[k];
            ders.row_mut(i)[ev.first + k] = ev.derivs[k];
        }
    }
    Ok(AxisGrid { points, weights, vals, ders })
}

fn weighted_sum(vals: &[f64], weights: &[&[f64]]) -> f64 {
    let mut cur = vals.to_vec();
    for w in weights.iter().rev() {
        let n = w.len();
        cur = cur.chunks(n).map(|c| c.iter().zip(*w).map(|(a, b)| a * b).sum()).collect();
    }
    cur[0]
}

/// Values of `exact` (derivative on axis `der`) on the tensor grid.
fn exact_grid<T: Scalar>(exact: &SeparatedFn<T>, grids: &[AxisGrid<T>], der: Option<usize>) -> Vec<f64> {
    let total: usize = grids.iter().map(|g| g.points.len()).product();
    let mut out = vec![0.0; total];
    for t in &exact.terms {
        let factors: Vec<Vec<f64>> = grids
            .iter()
            .enumerate()
            .map(|(d, g)| {
                let f = if der == Some(d) { &t.factors[d].df } else { &t.factors[d].f };
                g.points.iter().map(|&x| f(x).to_f64_lossy()).collect()
            })
            .collect();
        let c = t.coef.to_f64_lossy();
        let o = crate::assembly::outer(&factors);
        out.iter_mut().zip(o).for_each(|(a, b)| *a += c * b);
    }
    out
}

fn nodal_errors<T: Scalar>(u: &[T], shape: &[usize], grids: &[AxisGrid<T>], exact: &SeparatedFn<T>, spatial: usize) -> [f64; 4] {
    let vals: Vec<AxisMat<T>> = grids.iter().map(|g| AxisMat::new(g.vals.clone())).collect();
    let ders: Vec<AxisMat<T>> = grids.iter().map(|g| AxisMat::new(g.ders.clone())).collect();
    let weights: Vec<&[f64]> = grids.iter().map(|g| g.weights.as_slice()).collect();
    let sq = |der: Option<usize>| {
        let mats: Vec<&AxisMat<T>> = (0..grids.len()).map(|d| if der == Some(d) { &ders[d] } else { &vals[d] }).collect();
        let uh = kron_apply(&mats, u, shape);
        let ue = exact_grid(exact, grids, der);
        let e2: Vec<f64> = uh.iter().zip(&ue).map(|(&a, &b)| (a.to_f64_lossy() - b).powi(2)).collect();
        let u2: Vec<f64> = ue.iter().map(|b| b * b).collect();
        [weighted_sum(&e2, &weights), weighted_sum(&u2, &weights)]
    };
    let [l2, u_l2] = sq(None);
    let mut out = [l2, 0.0, u_l2, 0.0];
    for d in 0..spatial {
        let [e, u] = sq(Some(d));
        out[1] += e;
        out[3] += u;
    }
    out
}

fn mode_errors<T: Scalar>(modes: &[Vec<Vec<T>>], grids: &[AxisGrid<T>], exact: &SeparatedFn<T>, spatial: usize) -> [f64; 4] {
    let dim = grids.len();
    // (coef, per-axis values, per-axis derivatives) at the grid points
    let mut items: Vec<(f64, Vec<Vec<f64>>, Vec<Vec<f64>>)> = Vec::new();
    for m in modes {
        let v = (0..dim).map(|d| grids[d].vals.matvec(&m[d]).into_iter().map(|x| x.to_f64_lossy()).collect()).collect();
        let g = (0..dim).map(|d| grids[d].ders.matvec(&m[d]).into_iter().map(|x| x.to_f64_lossy()).collect()).collect();
        items.push((1.0, v, g));
    }
    for t in &exact.terms {
        let v = (0..dim).map(|d| grids[d].points.iter().map(|&x| (t.factors[d].f)(x).to_f64_lossy()).collect()).collect();
        let g = (0..dim).map(|d| grids[d].points.iter().map(|&x| (t.factors[d].df)(x).to_f64_lossy()).collect()).collect();
        items.push((-t.coef.to_f64_lossy(), v, g));
    }
    let n = items.len();
    let gram = |d: usize, i: usize, j: usize, di: bool| -> f64 {
        let (a, b) = if di { (&items[i].2[d], &items[j].2[d]) } else { (&items[i].1[d], &items[j].1[d]) };
        a.iter().zip(b).zip(&grids[d].weights).map(|((x, y), w)| x * y * w).sum()
    };
    let mut g = vec![vec![vec![0.0; n]; n]; dim];
    let mut h = vec![vec![vec![0.0; n]; n]; dim];
    for d in 0..dim {
        for i in 0..n {
            for j in 0..=i {
                g[d][i][j] = gram(d, i, j, false);
                g[d][j][i] = g[d][i][j];
                if d < spatial {
                    h[d][i][j] = gram(d, i, j, true);
                    h[d][j][i] = h[d][i][j];
                }
            }
        }
    }
    let mut out = [0.0; 4];
    for i in 0..n {
        for j in 0..n {
            let c = items[i].0 * items[j].0;
            let l2 = c * (0..dim).map(|d| g[d][i][j]).product::<f64>();
            let h1: f64 = (0..spatial)
                .map(|s| c * (0..dim).map(|d| if d == s { h[d][i][j] } else { g[d][i][j] }).product::<f64>())
                .sum();
            out[0] += l2;
            out[1] += h1;
            if i >= modes.len() && j >= modes.len() {
                out[2] += l2;
                out[3] += h1;
            }
        }
    }
    out
}

/// Squared errors of one level over its box, cut to `region` when given.
pub fn region_errors<T: Scalar>(
    problem: &ManufacturedProblem<T>,
    state: &LevelState<T>,
    region: Option<(&[T], &[T])>,
    qorder: Option<usize>,
) -> Result<NormsSq, NormError> {
    let exact = problem.exact.as_ref().ok_or(NormError::NoExact)?;
    let dim = state.lower.len();
    let q = qorder.unwrap_or(state.qorder() + 2);
    let breaks = problem.form().breaks;
    let mut grids = Vec::with_capacity(dim);
    for d in 0..dim {
        let (mut lo, mut hi) = (state.lower[d], state.upper[d]);
        if let Some((rl, ru)) = region {
            lo = lo.max(rl[d]);
            hi = hi.min(ru[d]);
        }
        if hi <= lo {
            return Ok(NormsSq::default());
        }
        grids.push(axis_grid(state.basis.axis_basis(d), lo, hi, &breaks[d], q)?);
    }
    let spatial = problem.spatial_dim();
    let [l2, h1, u_l2, u_h1] = match &state.field {
        Field::Nodal(u) => nodal_errors(u, &state.shape(), &grids, exact, spatial),
        Field::Modes { modes, .. } => mode_errors(modes, &grids, exact, spatial),
    };
    Ok(NormsSq { l2, h1, energy: problem.k.to_f64_lossy() * h1, u_l2, u_h1 })
}

/// Squared energy error of one level (over `region` when given).
pub fn level_energy_error<T: Scalar>(problem: &ManufacturedProblem<T>, state: &LevelState<T>, region: Option<(&[T], &[T])>) -> f64 {
    region_errors(problem, state, region, None).map(|n| n.energy).unwrap_or(f64::NAN)
}

/// Squared errors on each composite region `Ω_l \ Ω_{l+1}`.
pub fn partition_errors<T: Scalar>(
    problem: &ManufacturedProblem<T>,
    states: &[LevelState<T>],
    qorder: Option<usize>,
) -> Result<Vec<NormsSq>, NormError> {
    (0..states.len())
        .map(|l| {
            let own = region_errors(problem, &states[l], None, qorder)?;
            match states.get(l + 1) {
                Some(next) => {
                    let inner = region_errors(problem, &states[l], Some((&next.lower, &next.upper)), qorder)?;
                    Ok(own.add(inner, -1.0))
                }
                None => Ok(own),
            }
        })
        .collect()
}

/// Errors of the composite solution (finest level wherever it exists).
pub fn composite_errors<T: Scalar>(
    problem: &ManufacturedProblem<T>,
    states: &[LevelState<T>],
    qorder: Option<usize>,
) -> Result<ErrorNorms, NormError> {
    Ok(partition_errors(problem, states, qorder)?
        .into_iter()
        .fold(NormsSq::default(), |a, b| a.add(b, 1.0))
        .sqrt())
}
