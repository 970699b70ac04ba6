//! Separable weak forms: sums of Kronecker products of 1D operators, with
//! Kronecker mat-vecs and a fast-diagonalization direct solver.

use std::sync::Arc;

use crate::chidenn::AxisBasis;
use crate::linalg::{generalized_symmetric_eigen, BandLu, LinalgError, Mat, SparseLu, Triplets};
use crate::mesh::{flat_index, multi_index};
use crate::quadrature::QuadRule;
use crate::Scalar;

pub type Weight<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// One axis of a separable term: derivative orders of the test and trial
/// functions and an optional coefficient depending on that coordinate.
#[derive(Clone)]
pub struct AxisFactor<T> {
    pub dtest: u8,
    pub dtrial: u8,
    pub weight: Option<Weight<T>>,
}

impl<T> AxisFactor<T> {
    pub fn mass() -> Self {
        Self { dtest: 0, dtrial: 0, weight: None }
    }

    pub fn stiffness() -> Self {
        Self { dtest: 1, dtrial: 1, weight: None }
    }

    /// `∫ w u'`.
    pub fn advection() -> Self {
        Self { dtest: 0, dtrial: 1, weight: None }
    }

    pub fn weighted(mut self, w: Weight<T>) -> Self {
        self.weight = Some(w);
        self
    }
}

impl<T> std::fmt::Debug for AxisFactor<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{}{})", self.dtest, self.dtrial, if self.weight.is_some() { ",w" } else { "" })
    }
}

#[derive(Clone, Debug)]
pub struct FormTerm<T> {
    pub coef: T,
    pub factors: Vec<AxisFactor<T>>,
}

/// Bilinear form `a(w, u) = Σ_terms coef · Π_d ∫ w^{(dtest)} u^{(dtrial)} weight`.
#[derive(Clone, Debug)]
pub struct SeparableForm<T> {
    pub terms: Vec<FormTerm<T>>,
    /// Extra coordinates per axis where weights are discontinuous.
    pub breaks: Vec<Vec<T>>,
}

impl<T: Scalar> SeparableForm<T> {
    pub fn new(terms: Vec<FormTerm<T>>) -> Self {
        let dim = terms.first().map_or(0, |t| t.factors.len());
        Self { terms, breaks: vec![Vec::new(); dim] }
    }

    pub fn dim(&self) -> usize {
        self.breaks.len()
    }

    /// `k ∫ ∇w·∇u` on `dim` axes.
    pub fn laplacian(dim: usize, k: T) -> Self {
        let terms = (0..dim)
            .map(|d| FormTerm {
                coef: k,
                factors: (0..dim)
                    .map(|e| if e == d { AxisFactor::stiffness() } else { AxisFactor::mass() })
                    .collect(),
            })
            .collect();
        Self::new(terms)
    }

    /// `ρc ∫ w u_t + k ∫ ∇w·∇u`, time being the last of `spatial + 1` axes.
    pub fn heat(spatial: usize, rho_c: T, k: T) -> Self {
        let dim = spatial + 1;
        let mut terms: Vec<FormTerm<T>> = (0..spatial)
            .map(|d| FormTerm {
                coef: k,
                factors: (0..dim)
                    .map(|e| if e == d { AxisFactor::stiffness() } else { AxisFactor::mass() })
                    .collect(),
            })
            .collect();
        terms.push(FormTerm {
            coef: rho_c,
            factors: (0..dim)
                .map(|e| if e == spatial { AxisFactor::advection() } else { AxisFactor::mass() })
                .collect(),
        });
        Self::new(terms)
    }

    /// Structure usable by [`FastDiagSolver`]: per-axis stiffness
    /// coefficients and the optional time axis with its coefficient.
    pub fn fast_diag_structure(&self) -> Option<(Vec<Option<T>>, Option<(usize, T)>)> {
        let dim = self.dim();
        let mut stiff: Vec<Option<T>> = vec![None; dim];
        let mut time: Option<(usize, T)> = None;
        for term in &self.terms {
            if term.factors.iter().any(|f| f.weight.is_some()) {
                return None;
            }
            let special: Vec<usize> =
                (0..dim).filter(|&d| (term.factors[d].dtest, term.factors[d].dtrial) != (0, 0)).collect();
            if special.len() != 1 {
                return None;
            }
            let d = special[0];
            match (term.factors[d].dtest, term.factors[d].dtrial) {
                (1, 1) if stiff[d].is_none() => stiff[d] = Some(term.coef),
                (0, 1) if time.is_none() => time = Some((d, term.coef)),
                _ => return None,
            }
        }
        let covered = (0..dim).all(|d| stiff[d].is_some() ^ time.is_some_and(|(t, _)| t == d));
        covered.then_some((stiff, time))
    }
}

/// Dense 1D operator with cached nonzero column range per row.
#[derive(Clone, Debug)]
pub struct AxisMat<T> {
    pub mat: Mat<T>,
    ranges: Vec<(usize, usize)>,
}

impl<T: Scalar> AxisMat<T> {
    pub fn new(mat: Mat<T>) -> Self {
        let ranges = (0..mat.rows())
            .map(|i| {
                let row = mat.row(i);
                match row.iter().position(|&v| v != T::zero()) {
                    Some(f) => (f, row.iter().rposition(|&v| v != T::zero()).unwrap() + 1),
                    None => (0, 0),
                }
            })
            .collect();
        Self { mat, ranges }
    }

    pub fn rows(&self) -> usize {
        self.mat.rows()
    }

    pub fn cols(&self) -> usize {
        self.mat.cols()
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        (0..self.rows())
            .map(|i| {
                let (a, b) = self.ranges[i];
                let row = self.mat.row(i);
                (a..b).map(|j| row[j] * x[j]).sum()
            })
            .collect()
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[T], y: &[T]) -> T {
        crate::linalg::dot(x, &self.matvec(y))
    }

    pub fn range(&self, i: usize) -> (usize, usize) {
        self.ranges[i]
    }
}

fn merged_breakpoints<T: Scalar>(lists: &[&[T]], lo: T, hi: T, tol: T) -> Vec<T> {
    let mut pts: Vec<T> = lists.iter().flat_map(|l| l.iter().copied()).filter(|&x| x > lo && x < hi).collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<T> = Vec::with_capacity(pts.len());
    for p in pts {
        if out.last().map_or(true, |&q| p - q > tol) {
            out.push(p);
        }
    }
    if let Some(last) = out.last_mut() {
        *last = hi;
    }
    out
}

/// `∫_interval w^{(dtest)} u^{(dtrial)} weight` for test functions of
/// `test` and trial functions of `trial` (possibly different meshes),
/// integrated cell by cell over the merged breakpoints.
#[allow(clippy::too_many_arguments)]
pub fn axis_operator<T: Scalar>(
    test: &AxisBasis<T>,
    trial: &AxisBasis<T>,
    factor: &AxisFactor<T>,
    interval: (T, T),
    breaks: &[T],
    qorder: usize,
) -> Mat<T> {
    let mut out = Mat::zeros(test.n_nodes(), trial.n_nodes());
    let lo = interval.0.max(test.axis().lo).max(trial.axis().lo);
    let hi = interval.1.min(test.axis().hi).min(trial.axis().hi);
    let tol = T::of(1e-9) * test.axis().h().min(trial.axis().h());
    if hi - lo <= tol {
        return out;
    }
    let nt = test.axis().nodes();
    let nu = trial.axis().nodes();
    let cells = merged_breakpoints(&[&nt, &nu, breaks], lo, hi, tol);
    let rule = QuadRule::gauss(qorder);
    for w in cells.windows(2) {
        let mid = (w[0] + w[1]) * T::of(0.5);
        let et = test.axis().locate(mid).expect("cell inside test axis");
        let eu = trial.axis().locate(mid).expect("cell inside trial axis");
        for (x, wq) in rule.on_interval(w[0], w[1]) {
            let a = test.eval_in(et, x);
            let b = trial.eval_in(eu, x);
            let coef = factor.weight.as_ref().map_or(T::one(), |f| f(x)) * wq;
            let av = if factor.dtest == 0 { &a.values } else { &a.derivs };
            let bv = if factor.dtrial == 0 { &b.values } else { &b.derivs };
            for (i, &ai) in av.iter().enumerate() {
                let ci = coef * ai;
                if ci == T::zero() {
                    continue;
                }
                let row = out.row_mut(a.first + i);
                for (j, &bj) in bv.iter().enumerate() {
                    row[b.first + j] += ci * bj;
                }
            }
        }
    }
    out
}

/// `∫_interval Ñ_i f` with every element split into `subdiv` cells.
pub fn axis_load<T: Scalar>(
    basis: &AxisBasis<T>,
    f: &dyn Fn(T) -> T,
    interval: (T, T),
    qorder: usize,
    subdiv: usize,
) -> Vec<T> {
    axis_moment(basis, f, 0, interval, &[], qorder, subdiv)
}

/// `∫_interval Ñ_i^{(dtest)} f`, cells split at `breaks` and subdivided.
pub fn axis_moment<T: Scalar>(
    basis: &AxisBasis<T>,
    f: &dyn Fn(T) -> T,
    dtest: u8,
    interval: (T, T),
    breaks: &[T],
    qorder: usize,
    subdiv: usize,
) -> Vec<T> {
    let mut out = vec![T::zero(); basis.n_nodes()];
    let ax = basis.axis();
    let lo = interval.0.max(ax.lo);
    let hi = interval.1.min(ax.hi);
    let tol = T::of(1e-9) * ax.h();
    if hi - lo <= tol {
        return out;
    }
    let nodes = ax.nodes();
    let cells = merged_breakpoints(&[&nodes, breaks], lo, hi, tol);
    let rule = QuadRule::gauss(qorder);
    let sub = subdiv.max(1);
    for w in cells.windows(2) {
        let e = ax.locate((w[0] + w[1]) * T::of(0.5)).unwrap();
        let dh = (w[1] - w[0]) / T::of_usize(sub);
        for k in 0..sub {
            let a = w[0] + T::of_usize(k) * dh;
            for (x, wq) in rule.on_interval(a, a + dh) {
                let ev = basis.eval_in(e, x);
                let fx = f(x) * wq;
                let vals = if dtest == 0 { &ev.values } else { &ev.derivs };
                for (i, &v) in vals.iter().enumerate() {
                    out[ev.first + i] += v * fx;
                }
            }
        }
    }
    out
}

/// `∫_interval f` by subdivided Gauss quadrature.
pub fn integrate_1d<T: Scalar>(f: &dyn Fn(T) -> T, interval: (T, T), cells: usize, qorder: usize) -> T {
    let rule = QuadRule::gauss(qorder);
    let n = cells.max(1);
    let dh = (interval.1 - interval.0) / T::of_usize(n);
    let mut s = T::zero();
    for k in 0..n {
        let a = interval.0 + T::of_usize(k) * dh;
        for (x, w) in rule.on_interval(a, a + dh) {
            s += f(x) * w;
        }
    }
    s
}

/// Mode-`d` product of a row-major tensor with a matrix (`n_out × shape[d]`).
pub fn mode_product<T: Scalar>(x: &[T], shape: &[usize], d: usize, m: &AxisMat<T>) -> (Vec<T>, Vec<usize>) {
    let n = shape[d];
    assert_eq!(m.cols(), n);
    let pre: usize = shape[..d].iter().product();
    let post: usize = shape[d + 1..].iter().product();
    let nout = m.rows();
    let mut out = vec![T::zero(); pre * nout * post];
    for a in 0..pre {
        let xin = &x[a * n * post..(a + 1) * n * post];
        let xo = &mut out[a * nout * post..(a + 1) * nout * post];
        for i in 0..nout {
            let (lo, hi) = m.range(i);
            let row = m.mat.row(i);
            let dst = &mut xo[i * post..(i + 1) * post];
            for j in lo..hi {
                let c = row[j];
                if c == T::zero() {
                    continue;
                }
                let src = &xin[j * post..(j + 1) * post];
                for (o, &s) in dst.iter_mut().zip(src) {
                    *o += c * s;
                }
            }
        }
    }
    let mut new_shape = shape.to_vec();
    new_shape[d] = nout;
    (out, new_shape)
}

/// `(⊗_d M_d) x` for a row-major tensor `x` of the given shape.
pub fn kron_apply<T: Scalar>(mats: &[&AxisMat<T>], x: &[T], shape: &[usize]) -> Vec<T> {
    let mut cur = x.to_vec();
    let mut sh = shape.to_vec();
    for (d, m) in mats.iter().enumerate() {
        let (next, nsh) = mode_product(&cur, &sh, d, m);
        cur = next;
        sh = nsh;
    }
    cur
}

/// Outer product of per-axis vectors, row-major.
pub fn outer<T: Scalar>(factors: &[Vec<T>]) -> Vec<T> {
    let shape: Vec<usize> = factors.iter().map(Vec::len).collect();
    let total: usize = shape.iter().product();
    let mut out = vec![T::one(); total];
    let mut stride = total;
    for f in factors {
        let n = f.len();
        stride /= n;
        for (k, o) in out.iter_mut().enumerate() {
            *o *= f[(k / stride) % n];
        }
    }
    out
}

/// A separable form assembled between two families of axis bases over a box.
#[derive(Clone, Debug)]
pub struct KronOperator<T> {
    pub coefs: Vec<T>,
    /// `terms × axes` 1D operators.
    pub mats: Vec<Vec<AxisMat<T>>>,
    pub test_shape: Vec<usize>,
    pub trial_shape: Vec<usize>,
}

impl<T: Scalar> KronOperator<T> {
    pub fn assemble(
        form: &SeparableForm<T>,
        test: &[AxisBasis<T>],
        trial: &[AxisBasis<T>],
        lower: &[T],
        upper: &[T],
        qorder: usize,
    ) -> Self {
        let dim = test.len();
        let mats = form
            .terms
            .iter()
            .map(|term| {
                (0..dim)
                    .map(|d| {
                        AxisMat::new(axis_operator(
                            &test[d],
                            &trial[d],
                            &term.factors[d],
                            (lower[d], upper[d]),
                            &form.breaks[d],
                            qorder,
                        ))
                    })
                    .collect()
            })
            .collect();
        Self {
            coefs: form.terms.iter().map(|t| t.coef).collect(),
            mats,
            test_shape: test.iter().map(AxisBasis::n_nodes).collect(),
            trial_shape: trial.iter().map(AxisBasis::n_nodes).collect(),
        }
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.test_shape.iter().product()];
        for (c, mats) in self.coefs.iter().zip(&self.mats) {
            let refs: Vec<&AxisMat<T>> = mats.iter().collect();
            let y = kron_apply(&refs, x, &self.trial_shape);
            for (o, v) in out.iter_mut().zip(y) {
                *o += *c * v;
            }
        }
        out
    }

    /// Applies the operator to a separated field `Σ_q ⊗_d f[q][d]`, returning
    /// separated terms.
    pub fn apply_separated(&self, modes: &[Vec<Vec<T>>], scale: T) -> Vec<Vec<Vec<T>>> {
        let mut out = Vec::with_capacity(modes.len() * self.coefs.len());
        for (c, mats) in self.coefs.iter().zip(&self.mats) {
            for mode in modes {
                let mut axes: Vec<Vec<T>> = mats.iter().zip(mode).map(|(m, f)| m.matvec(f)).collect();
                let s = *c * scale;
                axes[0].iter_mut().for_each(|v| *v *= s);
                out.push(axes);
            }
        }
        out
    }

    /// Sparse matrix restricted to the given per-axis row/column index sets.
    pub fn to_csr(&self, rows: &[Vec<usize>], cols: &[Vec<usize>]) -> crate::linalg::CsrMatrix<T> {
        let dim = rows.len();
        let rshape: Vec<usize> = rows.iter().map(Vec::len).collect();
        let cshape: Vec<usize> = cols.iter().map(Vec::len).collect();
        let nr: usize = rshape.iter().product();
        let nc: usize = cshape.iter().product();
        let mut col_pos: Vec<Vec<Option<usize>>> = (0..dim)
            .map(|d| vec![None; self.trial_shape[d]])
            .collect();
        for d in 0..dim {
            for (k, &j) in cols[d].iter().enumerate() {
                col_pos[d][j] = Some(k);
            }
        }
        let mut trip = Triplets::new(nr, nc);
        for r in 0..nr {
            let rm = multi_index(&rshape, r);
            for (c, mats) in self.coefs.iter().zip(&self.mats) {
                // per-axis nonzero (local col, value) lists
                let lists: Vec<Vec<(usize, T)>> = (0..dim)
                    .map(|d| {
                        let i = rows[d][rm[d]];
                        let (a, b) = mats[d].range(i);
                        (a..b)
                            .filter_map(|j| {
                                let v = mats[d].mat[(i, j)];
                                col_pos[d][j].filter(|_| v != T::zero()).map(|k| (k, v))
                            })
                            .collect()
                    })
                    .collect();
                if lists.iter().any(Vec::is_empty) {
                    continue;
                }
                let lens: Vec<usize> = lists.iter().map(Vec::len).collect();
                let total: usize = lens.iter().product();
                let mut cm = vec![0; dim];
                for k in 0..total {
                    let off = multi_index(&lens, k);
                    let mut v = *c;
                    for d in 0..dim {
                        let (kk, vv) = lists[d][off[d]];
                        cm[d] = kk;
                        v *= vv;
                    }
                    trip.push(r, flat_index(&cshape, &cm), v);
                }
            }
        }
        trip.into_csr()
    }
}

/// Restriction of a row-major tensor to a tensor-product index set.
pub fn restrict<T: Scalar>(x: &[T], shape: &[usize], idx: &[Vec<usize>]) -> Vec<T> {
    let sub: Vec<usize> = idx.iter().map(Vec::len).collect();
    let total: usize = sub.iter().product();
    (0..total)
        .map(|k| {
            let m = multi_index(&sub, k);
            let full: Vec<usize> = m.iter().zip(idx).map(|(&i, l)| l[i]).collect();
            x[flat_index(shape, &full)]
        })
        .collect()
}

/// Inverse of [`restrict`]: writes `y` into the positions of `x`.
pub fn scatter<T: Scalar>(x: &mut [T], shape: &[usize], idx: &[Vec<usize>], y: &[T]) {
    let sub: Vec<usize> = idx.iter().map(Vec::len).collect();
    for (k, &v) in y.iter().enumerate() {
        let m = multi_index(&sub, k);
        let full: Vec<usize> = m.iter().zip(idx).map(|(&i, l)| l[i]).collect();
        x[flat_index(shape, &full)] = v;
    }
}

/// Direct solver for `Σ_d c_d (… ⊗ K_d ⊗ …)` (+ an optional `c_t … ⊗ G_t`
/// time term) on a tensor-product index set, by generalized eigen-
/// decomposition of every non-time axis.
#[derive(Clone, Debug)]
pub struct FastDiagSolver<T> {
    free: Vec<Vec<usize>>,
    /// Per non-time axis: eigenvalues (scaled by the coefficient) and
    /// `M`-orthonormal eigenvectors.
    eig: Vec<Option<(Vec<T>, AxisMat<T>, AxisMat<T>)>>,
    time: Option<(usize, Mat<T>, Mat<T>)>,
}

impl<T: Scalar> FastDiagSolver<T> {
    pub fn new(op: &KronOperator<T>, form: &SeparableForm<T>, free: Vec<Vec<usize>>) -> Option<Result<Self, LinalgError>> {
        let (stiff, time) = form.fast_diag_structure()?;
        Some(Self::build(op, form, &stiff, time, free))
    }

    fn build(
        op: &KronOperator<T>,
        form: &SeparableForm<T>,
        stiff: &[Option<T>],
        time: Option<(usize, T)>,
        free: Vec<Vec<usize>>,
    ) -> Result<Self, LinalgError> {
        let dim = stiff.len();
        let term_of = |d: usize, pat: (u8, u8)| {
            form.terms
                .iter()
                .position(|t| (t.factors[d].dtest, t.factors[d].dtrial) == pat)
        };
        let mut eig = Vec::with_capacity(dim);
        for d in 0..dim {
            if let Some(c) = stiff[d] {
                let ks = term_of(d, (1, 1)).unwrap();
                // any term carrying a mass factor on axis d
                let ms = (0..form.terms.len())
                    .find(|&t| (form.terms[t].factors[d].dtest, form.terms[t].factors[d].dtrial) == (0, 0))
                    .unwrap_or(ks);
                let k = op.mats[ks][d].mat.select(&free[d], &free[d]);
                let m = op.mats[ms][d].mat.select(&free[d], &free[d]);
                let e = generalized_symmetric_eigen(&k, &m)?;
                let vals = e.values.iter().map(|&v| v * c).collect();
                eig.push(Some((vals, AxisMat::new(e.vectors.clone()), AxisMat::new(e.vectors.transpose()))));
            } else {
                eig.push(None);
            }
        }
        let time = match time {
            Some((t, c)) => {
                let gs = term_of(t, (0, 1)).unwrap();
                let ms = (0..form.terms.len())
                    .find(|&k| k != gs && (form.terms[k].factors[t].dtest, form.terms[k].factors[t].dtrial) == (0, 0))
                    .expect("time axis mass term");
                let mut g = op.mats[gs][t].mat.select(&free[t], &free[t]);
                g.scale(c);
                let m = op.mats[ms][t].mat.select(&free[t], &free[t]);
                Some((t, g, m))
            }
            None => None,
        };
        Ok(Self { free, eig, time })
    }

    pub fn free(&self) -> &[Vec<usize>] {
        &self.free
    }

    /// Solves `A_FF x = b` for `b` given on the free index set.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>, LinalgError> {
        let shape: Vec<usize> = self.free.iter().map(Vec::len).collect();
        let mut y = b.to_vec();
        for (d, e) in self.eig.iter().enumerate() {
            if let Some((_, _, vt)) = e {
                y = mode_product(&y, &shape, d, vt).0;
            }
        }
        let dim = shape.len();
        match &self.time {
            None => {
                for (k, v) in y.iter_mut().enumerate() {
                    let m = multi_index(&shape, k);
                    let lam: T = (0..dim).map(|d| self.eig[d].as_ref().unwrap().0[m[d]]).sum();
                    *v /= lam;
                }
            }
            Some((t, g, mt)) => {
                let nt = shape[*t];
                let post: usize = shape[t + 1..].iter().product();
                let (kl, ku) = {
                    let (a, b) = g.bandwidths();
                    let (c, e) = mt.bandwidths();
                    (a.max(c), b.max(e))
                };
                let fibres = y.len() / nt;
                for f in 0..fibres {
                    let (pre_i, post_i) = (f / post, f % post);
                    let base = pre_i * nt * post + post_i;
                    let mut lam = T::zero();
                    let full_index = |j: usize| base + j * post;
                    let m = multi_index(&shape, full_index(0));
                    for d in 0..dim {
                        if d != *t {
                            lam += self.eig[d].as_ref().unwrap().0[m[d]];
                        }
                    }
                    let mut band = BandLu::zeros(nt, kl, ku);
                    for i in 0..nt {
                        for j in i.saturating_sub(kl)..(i + ku + 1).min(nt) {
                            let v = g[(i, j)] + lam * mt[(i, j)];
                            if v != T::zero() {
                                band.add(i, j, v);
                            }
                        }
                    }
                    band.factor()?;
                    let rhs: Vec<T> = (0..nt).map(|j| y[full_index(j)]).collect();
                    let sol = band.solve(&rhs);
                    for j in 0..nt {
                        y[full_index(j)] = sol[j];
                    }
                }
            }
        }
        for (d, e) in self.eig.iter().enumerate() {
            if let Some((_, v, _)) = e {
                y = mode_product(&y, &shape, d, v).0;
            }
        }
        Ok(y)
    }
}

/// Direct solve of `A_FF x = b_F` for a separable operator: fast
/// diagonalization when the form allows it, sparse LU otherwise.
pub enum KronSolver<T> {
    Fast(FastDiagSolver<T>),
    Sparse { lu: SparseLu<T> },
}

impl<T: Scalar> KronSolver<T> {
    pub fn new(op: &KronOperator<T>, form: &SeparableForm<T>, free: Vec<Vec<usize>>) -> Result<Self, LinalgError> {
        if let Some(fd) = FastDiagSolver::new(op, form, free.clone()) {
            return Ok(Self::Fast(fd?));
        }
        let a = op.to_csr(&free, &free);
        Ok(Self::Sparse { lu: SparseLu::new(&a)? })
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>, LinalgError> {
        match self {
            Self::Fast(f) => f.solve(b),
            Self::Sparse { lu } => Ok(lu.solve(b)),
        }
    }
}
