//! Convolution-patch (C-HiDeNN) shape functions built on multilinear finite
//! elements.

use std::collections::HashMap;

use thiserror::Error;

use crate::linalg::{DenseLu, LinalgError, Mat};
use crate::mesh::{multi_index, patch_start, Axis, HyperParams, MeshError, TensorMesh};
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("cubic spline evaluated at negative argument {0}")]
    NegativeArgument(f64),
    #[error("degenerate patch around node {node}: {source}")]
    Singular { node: usize, source: LinalgError },
    #[error("patch around node {node} has {n_s} nodes, fewer than the {m} polynomial terms")]
    TooFewPatchNodes { node: usize, n_s: usize, m: usize },
    #[error("point {point:?} is outside element {element}")]
    OutsideElement { element: usize, point: Vec<f64> },
    #[error("field has {found} values, mesh has {expected} nodes")]
    FieldLength { expected: usize, found: usize },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Cubic spline kernel, supported on `[0, 1]`.
pub fn cubic_spline<T: Scalar>(z: T) -> Result<T, BasisError> {
    if z < T::zero() {
        return Err(BasisError::NegativeArgument(z.to_f64_lossy()));
    }
    Ok(spline(z).0)
}

/// Value and derivative of the kernel for `z >= 0`.
fn spline<T: Scalar>(z: T) -> (T, T) {
    let half = T::of(0.5);
    let c4 = T::of(4.0);
    if z <= half {
        (T::of(2.0 / 3.0) - c4 * z * z + c4 * z * z * z, T::of(-8.0) * z + T::of(12.0) * z * z)
    } else if z <= T::one() {
        (
            T::of(4.0 / 3.0) - c4 * z + c4 * z * z - T::of(4.0 / 3.0) * z * z * z,
            -c4 + T::of(8.0) * z - c4 * z * z,
        )
    } else {
        (T::zero(), T::zero())
    }
}

/// Tensor-product exponents `(p+1)^d`, lexicographic.
fn monomial_exponents(dim: usize, p: usize) -> Vec<Vec<usize>> {
    let shape = vec![p + 1; dim];
    (0..(p + 1).pow(dim as u32)).map(|k| multi_index(&shape, k)).collect()
}

/// Patch functions `W = Ψ A + P K` of one nodal convolution patch, evaluated
/// in patch-local coordinates `ζ = (x - c) / (s h)`.
#[derive(Clone, Debug)]
pub struct PatchBasis<T> {
    pub center: usize,
    pub nodes: Vec<usize>,
    pub m: usize,
    pub hyper: HyperParams<T>,
    pub a_mat: Mat<T>,
    pub k_mat: Mat<T>,
    origin: Vec<T>,
    scale: Vec<T>,
    local: Vec<Vec<T>>,
    exponents: Vec<Vec<usize>>,
}

pub fn build_patch_basis<T: Scalar>(
    mesh: &TensorMesh<T>,
    node: usize,
    hyper: HyperParams<T>,
) -> Result<PatchBasis<T>, BasisError> {
    PatchBasis::new(mesh, node, hyper)
}

impl<T: Scalar> PatchBasis<T> {
    pub fn new(mesh: &TensorMesh<T>, node: usize, hyper: HyperParams<T>) -> Result<Self, BasisError> {
        let dim = mesh.dim();
        let nodes = crate::mesh::nodal_patch(mesh, node, hyper.s)?;
        let n_s = nodes.len();
        if hyper.is_linear_fe() {
            return Ok(Self {
                center: node,
                nodes,
                m: 1,
                hyper,
                a_mat: Mat::zeros(1, 1),
                k_mat: Mat::identity(1),
                origin: mesh.node_coords(node),
                scale: mesh.axes().iter().map(Axis::h).collect(),
                local: vec![vec![T::zero(); dim]],
                exponents: vec![vec![0; dim]],
            });
        }
        let exponents = monomial_exponents(dim, hyper.p);
        let m = exponents.len();
        if n_s < m {
            return Err(BasisError::TooFewPatchNodes { node, n_s, m });
        }
        let coords: Vec<Vec<T>> = nodes.iter().map(|&id| mesh.node_coords(id)).collect();
        let origin: Vec<T> = (0..dim)
            .map(|d| coords.iter().map(|c| c[d]).sum::<T>() / T::of_usize(n_s))
            .collect();
        let scale: Vec<T> = mesh.axes().iter().map(|a| a.h() * T::of_usize(hyper.s)).collect();
        let local: Vec<Vec<T>> = coords
            .iter()
            .map(|c| (0..dim).map(|d| (c[d] - origin[d]) / scale[d]).collect())
            .collect();
        let q = Mat::from_fn(n_s, m, |i, j| monomial(&local[i], &exponents[j]));
        let sing = |source| BasisError::Singular { node, source };
        let (a_mat, k_mat) = if n_s == m {
            (Mat::zeros(n_s, n_s), DenseLu::new(&q).map_err(sing)?.inverse())
        } else {
            // [R Q; Qᵀ 0] [A; K] = [I; 0]
            let n = n_s + m;
            let saddle = Mat::from_fn(n, n, |i, j| match (i < n_s, j < n_s) {
                (true, true) => spline(dist(&local[i], &local[j]) / hyper.a).0,
                (true, false) => q.row(i)[j - n_s],
                (false, true) => q.row(j)[i - n_s],
                (false, false) => T::zero(),
            });
            let lu = DenseLu::new(&saddle).map_err(sing)?;
            let mut a_mat = Mat::zeros(n_s, n_s);
            let mut k_mat = Mat::zeros(m, n_s);
            for c in 0..n_s {
                let mut e = vec![T::zero(); n];
                e[c] = T::one();
                let col = lu.solve(&e);
                for i in 0..n_s {
                    a_mat.row_mut(i)[c] = col[i];
                }
                for i in 0..m {
                    k_mat.row_mut(i)[c] = col[n_s + i];
                }
            }
            (a_mat, k_mat)
        };
        Ok(Self { center: node, nodes, m, hyper, a_mat, k_mat, origin, scale, local, exponents })
    }

    pub fn n_s(&self) -> usize {
        self.nodes.len()
    }

    /// Values `W_K(x)` and gradients (row-major `n_s × d`) for the patch nodes.
    pub fn eval(&self, x: &[T]) -> (Vec<T>, Vec<T>) {
        let dim = x.len();
        let n_s = self.n_s();
        if self.hyper.is_linear_fe() {
            return (vec![T::one()], vec![T::zero(); dim]);
        }
        let zeta: Vec<T> = (0..dim).map(|d| (x[d] - self.origin[d]) / self.scale[d]).collect();
        let mut vals = vec![T::zero(); n_s];
        let mut grads = vec![T::zero(); n_s * dim];
        let a = self.hyper.a;
        let any_radial = self.m < n_s;
        if any_radial {
            for j in 0..n_s {
                let r = dist(&zeta, &self.local[j]);
                let (psi, dpsi) = spline(r / a);
                if psi == T::zero() && dpsi == T::zero() {
                    continue;
                }
                let row = self.a_mat.row(j);
                for k in 0..n_s {
                    vals[k] += psi * row[k];
                }
                if r > T::zero() {
                    for d in 0..dim {
                        let g = dpsi / a * (zeta[d] - self.local[j][d]) / r / self.scale[d];
                        for k in 0..n_s {
                            grads[k * dim + d] += g * row[k];
                        }
                    }
                }
            }
        }
        for (j, e) in self.exponents.iter().enumerate() {
            let pj = monomial(&zeta, e);
            let row = self.k_mat.row(j);
            for k in 0..n_s {
                vals[k] += pj * row[k];
            }
            for d in 0..dim {
                if e[d] == 0 {
                    continue;
                }
                let mut g = T::of_usize(e[d]) / self.scale[d];
                for (dd, (&z, &ed)) in zeta.iter().zip(e).enumerate() {
                    g *= if dd == d { z.powi(ed as i32 - 1) } else { z.powi(ed as i32) };
                }
                for k in 0..n_s {
                    grads[k * dim + d] += g * row[k];
                }
            }
        }
        (vals, grads)
    }
}

fn monomial<T: Scalar>(z: &[T], e: &[usize]) -> T {
    z.iter().zip(e).fold(T::one(), |acc, (&zi, &ei)| acc * zi.powi(ei as i32))
}

fn dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum::<T>().sqrt()
}

/// Shape functions of a 1D axis: values and derivatives of the nodes
/// `first .. first + values.len()` at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisEval<T> {
    pub first: usize,
    pub values: Vec<T>,
    pub derivs: Vec<T>,
}

/// C-HiDeNN shape functions along one uniform axis.
#[derive(Clone, Debug)]
pub struct AxisBasis<T> {
    axis: Axis<T>,
    hyper: HyperParams<T>,
    /// Patch per distinct start node; `starts[i]` indexes it for node `i`.
    patches: Vec<PatchBasis<T>>,
    starts: Vec<usize>,
}

impl<T: Scalar> AxisBasis<T> {
    pub fn new(axis: Axis<T>, hyper: HyperParams<T>) -> Result<Self, BasisError> {
        let mesh = TensorMesh::new(vec![axis.clone()])?;
        let n = axis.n_nodes();
        let s = hyper.s;
        let mut starts = Vec::with_capacity(n);
        for i in 0..n {
            starts.push(patch_start(n, i, s).ok_or(MeshError::TooFewNodes {
                axis: 0,
                nodes: n,
                needed: 2 * s + 1,
            })?);
        }
        let n_patches = n - 2 * s;
        let mut patches = Vec::with_capacity(n_patches);
        for start in 0..n_patches {
            // any node whose patch begins at `start`
            let node = (0..n).find(|&i| starts[i] == start).unwrap_or(start + s);
            patches.push(PatchBasis::new(&mesh, node, hyper)?);
        }
        Ok(Self { axis, hyper, patches, starts })
    }

    pub fn axis(&self) -> &Axis<T> {
        &self.axis
    }

    pub fn hyper(&self) -> HyperParams<T> {
        self.hyper
    }

    pub fn n_nodes(&self) -> usize {
        self.axis.n_nodes()
    }

    /// Maximum number of nodes with support on one element.
    pub fn support_width(&self) -> usize {
        if self.hyper.is_linear_fe() {
            2
        } else {
            (2 * self.hyper.s + 2).min(self.n_nodes())
        }
    }

    /// Node range `[first, last]` whose shape functions are nonzero on element `e`.
    pub fn element_support(&self, e: usize) -> (usize, usize) {
        if self.hyper.is_linear_fe() {
            return (e, e + 1);
        }
        let w = 2 * self.hyper.s;
        (self.starts[e], self.starts[e + 1] + w)
    }

    /// Evaluates on element `e` (no containment check).
    pub fn eval_in(&self, e: usize, x: T) -> AxisEval<T> {
        let h = self.axis.h();
        let x0 = self.axis.node(e);
        let n1 = (x - x0) / h;
        let n0 = T::one() - n1;
        let dn = T::one() / h;
        if self.hyper.is_linear_fe() {
            return AxisEval { first: e, values: vec![n0, n1], derivs: vec![-dn, dn] };
        }
        let (first, last) = self.element_support(e);
        let len = last - first + 1;
        let mut values = vec![T::zero(); len];
        let mut derivs = vec![T::zero(); len];
        for (ni, dni, node) in [(n0, -dn, e), (n1, dn, e + 1)] {
            let start = self.starts[node];
            let (w, dw) = self.patches[start].eval(&[x]);
            let off = start - first;
            for k in 0..w.len() {
                values[off + k] += ni * w[k];
                derivs[off + k] += dni * w[k] + ni * dw[k];
            }
        }
        AxisEval { first, values, derivs }
    }

    pub fn eval(&self, x: T) -> Result<AxisEval<T>, BasisError> {
        let e = self
            .axis
            .locate(x)
            .ok_or_else(|| MeshError::OutsidePoint(vec![x.to_f64_lossy()]))?;
        Ok(self.eval_in(e, x))
    }

    pub fn interpolate(&self, values: &[T], x: T) -> Result<T, BasisError> {
        if values.len() != self.n_nodes() {
            return Err(BasisError::FieldLength { expected: self.n_nodes(), found: values.len() });
        }
        let ev = self.eval(x)?;
        Ok(ev.values.iter().enumerate().map(|(k, &v)| v * values[ev.first + k]).sum())
    }

    /// Derivative of the interpolant at `x`.
    pub fn interpolate_deriv(&self, values: &[T], x: T) -> Result<T, BasisError> {
        let ev = self.eval(x)?;
        Ok(ev.derivs.iter().enumerate().map(|(k, &v)| v * values[ev.first + k]).sum())
    }
}

/// Values and gradients of every shape function nonzero at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeEval<T> {
    pub element: usize,
    pub nodes: Vec<usize>,
    pub values: Vec<T>,
    /// Row-major `nodes.len() × dim`.
    pub grads: Vec<T>,
}

impl<T: Scalar> ShapeEval<T> {
    pub fn grad(&self, k: usize) -> &[T] {
        let d = self.grads.len() / self.nodes.len().max(1);
        &self.grads[k * d..(k + 1) * d]
    }
}

/// Common interface of the tensor-product and radial-patch shape functions.
pub trait ShapeFunctions<T: Scalar> {
    fn mesh(&self) -> &TensorMesh<T>;

    fn hyper(&self) -> HyperParams<T>;

    /// Evaluation on a given element; `x` must lie in it (tolerance `1e-9 h`).
    fn eval_shape(&self, element: usize, x: &[T]) -> Result<ShapeEval<T>, BasisError>;

    fn eval_point(&self, x: &[T]) -> Result<ShapeEval<T>, BasisError> {
        let mesh = self.mesh();
        let e = mesh
            .locate(x)
            .ok_or_else(|| MeshError::OutsidePoint(x.iter().map(|v| v.to_f64_lossy()).collect()))?;
        let id = crate::mesh::flat_index(&mesh.element_shape(), &e);
        self.eval_shape(id, x)
    }

    fn interpolate(&self, field: &[T], x: &[T]) -> Result<T, BasisError> {
        let n = self.mesh().n_nodes();
        if field.len() != n {
            return Err(BasisError::FieldLength { expected: n, found: field.len() });
        }
        let ev = self.eval_point(x)?;
        Ok(ev.nodes.iter().zip(&ev.values).map(|(&i, &v)| v * field[i]).sum())
    }
}

fn check_inside<T: Scalar>(mesh: &TensorMesh<T>, element: usize, x: &[T]) -> Result<Vec<usize>, BasisError> {
    let e = mesh.element_multi(element);
    for (d, a) in mesh.axes().iter().enumerate() {
        let h = a.h();
        let tol = T::of(1e-9) * h;
        let lo = a.node(e[d]);
        if x[d] < lo - tol || x[d] > lo + h + tol {
            return Err(BasisError::OutsideElement {
                element,
                point: x.iter().map(|v| v.to_f64_lossy()).collect(),
            });
        }
    }
    Ok(e)
}

/// Products of per-axis C-HiDeNN functions. This is the basis used by the
/// solvers: it coincides with the separated representation, so full and
/// tensor-decomposed discretizations share one approximation space.
#[derive(Clone, Debug)]
pub struct TensorBasis<T> {
    mesh: TensorMesh<T>,
    axes: Vec<AxisBasis<T>>,
}

impl<T: Scalar> TensorBasis<T> {
    pub fn new(mesh: TensorMesh<T>, hyper: HyperParams<T>) -> Result<Self, BasisError> {
        let axes = mesh
            .axes()
            .iter()
            .map(|a| AxisBasis::new(a.clone(), hyper))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { mesh, axes })
    }

    pub fn from_axes(axes: Vec<AxisBasis<T>>) -> Result<Self, BasisError> {
        let mesh = TensorMesh::new(axes.iter().map(|a| a.axis().clone()).collect())?;
        Ok(Self { mesh, axes })
    }

    pub fn axis_basis(&self, d: usize) -> &AxisBasis<T> {
        &self.axes[d]
    }

    pub fn axis_bases(&self) -> &[AxisBasis<T>] {
        &self.axes
    }
}

fn tensor_combine<T: Scalar>(
    mesh: &TensorMesh<T>,
    element: usize,
    evs: &[AxisEval<T>],
) -> ShapeEval<T> {
    let dim = evs.len();
    let shape = mesh.node_shape();
    let lens: Vec<usize> = evs.iter().map(|e| e.values.len()).collect();
    let total: usize = lens.iter().product();
    let mut nodes = Vec::with_capacity(total);
    let mut values = Vec::with_capacity(total);
    let mut grads = Vec::with_capacity(total * dim);
    for k in 0..total {
        let off = multi_index(&lens, k);
        let m: Vec<usize> = off.iter().zip(evs).map(|(&o, e)| e.first + o).collect();
        nodes.push(crate::mesh::flat_index(&shape, &m));
        let mut v = T::one();
        for d in 0..dim {
            v *= evs[d].values[off[d]];
        }
        values.push(v);
        for d in 0..dim {
            let mut g = T::one();
            for dd in 0..dim {
                g *= if dd == d { evs[dd].derivs[off[dd]] } else { evs[dd].values[off[dd]] };
            }
            grads.push(g);
        }
    }
    ShapeEval { element, nodes, values, grads }
}

impl<T: Scalar> ShapeFunctions<T> for TensorBasis<T> {
    fn mesh(&self) -> &TensorMesh<T> {
        &self.mesh
    }

    fn hyper(&self) -> HyperParams<T> {
        self.axes[0].hyper()
    }

    fn eval_shape(&self, element: usize, x: &[T]) -> Result<ShapeEval<T>, BasisError> {
        let e = check_inside(&self.mesh, element, x)?;
        let evs: Vec<AxisEval<T>> =
            self.axes.iter().enumerate().map(|(d, ab)| ab.eval_in(e[d], x[d])).collect();
        Ok(tensor_combine(&self.mesh, element, &evs))
    }
}

/// Shape functions built from full `d`-dimensional radial patches,
/// `Ñ_J = Σ_I N_I W^{I}_J` with multilinear `N_I`.
#[derive(Clone, Debug)]
pub struct RadialBasis<T> {
    mesh: TensorMesh<T>,
    hyper: HyperParams<T>,
    patches: HashMap<Vec<usize>, PatchBasis<T>>,
}

impl<T: Scalar> RadialBasis<T> {
    pub fn new(mesh: TensorMesh<T>, hyper: HyperParams<T>) -> Result<Self, BasisError> {
        let mut patches = HashMap::new();
        for node in 0..mesh.n_nodes() {
            let key = Self::start_of(&mesh, hyper, node)?;
            if !patches.contains_key(&key) {
                patches.insert(key, PatchBasis::new(&mesh, node, hyper)?);
            }
        }
        Ok(Self { mesh, hyper, patches })
    }

    fn start_of(mesh: &TensorMesh<T>, hyper: HyperParams<T>, node: usize) -> Result<Vec<usize>, BasisError> {
        let shape = mesh.node_shape();
        let m = mesh.node_multi(node);
        let mut out = Vec::with_capacity(m.len());
        for (d, (&n, &i)) in shape.iter().zip(&m).enumerate() {
            if hyper.is_linear_fe() {
                out.push(i);
            } else {
                out.push(patch_start(n, i, hyper.s).ok_or(MeshError::TooFewNodes {
                    axis: d,
                    nodes: n,
                    needed: 2 * hyper.s + 1,
                })?);
            }
        }
        Ok(out)
    }

    pub fn patch(&self, node: usize) -> &PatchBasis<T> {
        let key = Self::start_of(&self.mesh, self.hyper, node).expect("validated at construction");
        &self.patches[&key]
    }
}

impl<T: Scalar> ShapeFunctions<T> for RadialBasis<T> {
    fn mesh(&self) -> &TensorMesh<T> {
        &self.mesh
    }

    fn hyper(&self) -> HyperParams<T> {
        self.hyper
    }

    fn eval_shape(&self, element: usize, x: &[T]) -> Result<ShapeEval<T>, BasisError> {
        let e = check_inside(&self.mesh, element, x)?;
        let dim = self.mesh.dim();
        let shape = self.mesh.node_shape();
        let corners = self.mesh.element_nodes(element);
        let w = if self.hyper.is_linear_fe() { 0 } else { 2 * self.hyper.s };
        let starts: Vec<Vec<usize>> = corners
            .iter()
            .map(|&c| Self::start_of(&self.mesh, self.hyper, c))
            .collect::<Result<_, _>>()?;
        let first: Vec<usize> = (0..dim).map(|d| starts.iter().map(|s| s[d]).min().unwrap()).collect();
        let lens: Vec<usize> =
            (0..dim).map(|d| starts.iter().map(|s| s[d]).max().unwrap() + w + 1 - first[d]).collect();
        let total: usize = lens.iter().product();
        let mut values = vec![T::zero(); total];
        let mut grads = vec![T::zero(); total * dim];
        // multilinear hat values and gradients per axis
        let hats: Vec<[(T, T); 2]> = (0..dim)
            .map(|d| {
                let a = self.mesh.axis(d);
                let h = a.h();
                let t = (x[d] - a.node(e[d])) / h;
                [(T::one() - t, -T::one() / h), (t, T::one() / h)]
            })
            .collect();
        for (ci, (&corner, start)) in corners.iter().zip(&starts).enumerate() {
            let bits: Vec<usize> = (0..dim).map(|d| (ci >> (dim - 1 - d)) & 1).collect();
            let mut n_i = T::one();
            let mut grad_n = vec![T::one(); dim];
            for d in 0..dim {
                let (v, dv) = hats[d][bits[d]];
                n_i *= v;
                for (k, g) in grad_n.iter_mut().enumerate() {
                    *g *= if k == d { dv } else { v };
                }
            }
            let patch = self.patch(corner);
            let (wv, wg) = patch.eval(x);
            let plen = vec![w + 1; dim];
            for k in 0..patch.n_s() {
                let off = multi_index(&plen, k);
                let local: Vec<usize> = (0..dim).map(|d| off[d] + start[d] - first[d]).collect();
                let idx = crate::mesh::flat_index(&lens, &local);
                values[idx] += n_i * wv[k];
                for d in 0..dim {
                    grads[idx * dim + d] += grad_n[d] * wv[k] + n_i * wg[k * dim + d];
                }
            }
        }
        let nodes = (0..total)
            .map(|k| {
                let off = multi_index(&lens, k);
                let m: Vec<usize> = (0..dim).map(|d| first[d] + off[d]).collect();
                crate::mesh::flat_index(&shape, &m)
            })
            .collect();
        Ok(ShapeEval { element, nodes, values, grads })
    }
}

pub fn eval_shape<T: Scalar, B: ShapeFunctions<T>>(
    basis: &B,
    element: usize,
    x: &[T],
) -> Result<ShapeEval<T>, BasisError> {
    basis.eval_shape(element, x)
}

pub fn interpolate<T: Scalar, B: ShapeFunctions<T>>(basis: &B, field: &[T], x: &[T]) -> Result<T, BasisError> {
    basis.interpolate(field, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis_basis(n: usize, s: usize, p: usize, a: f64) -> AxisBasis<f64> {
        AxisBasis::new(Axis::new(0.0, 1.0, n).unwrap(), HyperParams::new(a, s, p).unwrap()).unwrap()
    }

    #[test]
    fn spline_values() {
        assert_eq!(cubic_spline(0.0f64).unwrap(), 2.0 / 3.0);
        assert!((cubic_spline(0.5f64).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(cubic_spline(1.5).unwrap(), 0.0);
        assert!(cubic_spline(-0.1).is_err());
        // C1 at the branch points
        for z in [0.5, 1.0] {
            let (l, dl): (f64, f64) = spline(z - 1e-9);
            let (r, dr): (f64, f64) = spline(z + 1e-9);
            assert!((l - r).abs() < 1e-8 && (dl - dr).abs() < 1e-7);
        }
    }

    #[test]
    fn lagrange_degeneration() {
        let mesh = TensorMesh::new(vec![Axis::new(0.0, 1.0, 4).unwrap()]).unwrap();
        let pb = PatchBasis::new(&mesh, 2, HyperParams::new(3.0, 1, 2).unwrap()).unwrap();
        assert_eq!(pb.nodes, vec![1, 2, 3]);
        assert!(pb.a_mat.max_abs() < 1e-12);
        let xs = [0.25, 0.5, 0.75];
        for x in [0.3, 0.41, 0.66] {
            let (w, _) = pb.eval(&[x]);
            for k in 0..3 {
                let lag: f64 = (0..3).filter(|&j| j != k).map(|j| (x - xs[j]) / (xs[k] - xs[j])).product();
                assert!((w[k] - lag).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn patch_reproduces_linear_field() {
        let mesh = TensorMesh::new(vec![Axis::new(0.0, 1.0, 10).unwrap()]).unwrap();
        let pb = PatchBasis::new(&mesh, 5, HyperParams::new(1.0, 2, 2).unwrap()).unwrap();
        let xs: Vec<f64> = pb.nodes.iter().map(|&i| i as f64 / 10.0).collect();
        for k in 0..20 {
            let x = 0.3 + 0.4 * (k as f64 + 0.37) / 20.0;
            let (w, _) = pb.eval(&[x]);
            let r: f64 = w.iter().zip(&xs).map(|(a, b)| a * b).sum();
            assert!((r - x).abs() < 1e-10);
        }
        for (j, &xj) in xs.iter().enumerate() {
            let (w, _) = pb.eval(&[xj]);
            for (k, &wk) in w.iter().enumerate() {
                assert!((wk - if j == k { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn axis_basis_properties() {
        let b = axis_basis(12, 3, 3, 3.0);
        let nodes = b.axis().nodes();
        for (j, &xj) in nodes.iter().enumerate() {
            let ev = b.eval(xj).unwrap();
            for (k, &v) in ev.values.iter().enumerate() {
                let expect = if ev.first + k == j { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-10);
            }
        }
        for k in 0..50 {
            let x = (k as f64 + 0.5) / 50.0;
            let ev = b.eval(x).unwrap();
            let s: f64 = ev.values.iter().sum();
            let ds: f64 = ev.derivs.iter().sum();
            assert!((s - 1.0).abs() < 1e-12 && ds.abs() < 1e-9);
            let cube: Vec<f64> = nodes.iter().map(|v| v.powi(3)).collect();
            assert!((b.interpolate(&cube, x).unwrap() - x.powi(3)).abs() < 1e-11);
            assert!((b.interpolate_deriv(&cube, x).unwrap() - 3.0 * x * x).abs() < 1e-9);
        }
    }

    #[test]
    fn linear_fe_degenerate() {
        let b = AxisBasis::new(Axis::new(0.0, 1.0, 4).unwrap(), HyperParams::<f64>::linear()).unwrap();
        let ev = b.eval(0.3).unwrap();
        assert_eq!(ev.first, 1);
        assert!((ev.values[0] - 0.8).abs() < 1e-14 && (ev.values[1] - 0.2).abs() < 1e-14);
        assert_eq!(ev.derivs, vec![-4.0, 4.0]);
    }

    #[test]
    fn radial_and_tensor_agree_in_lagrange_case() {
        let mesh = TensorMesh::new(vec![Axis::new(0.0, 1.0, 5).unwrap(), Axis::new(0.0, 2.0, 4).unwrap()]).unwrap();
        let hyper = HyperParams::new(3.0, 1, 2).unwrap();
        let rb = RadialBasis::new(mesh.clone(), hyper).unwrap();
        let tb = TensorBasis::new(mesh, hyper).unwrap();
        for x in [[0.13f64, 0.7], [0.51, 1.93], [0.99, 0.01]] {
            let a = rb.eval_point(&x).unwrap();
            let b = tb.eval_point(&x).unwrap();
            assert_eq!(a.nodes, b.nodes);
            for k in 0..a.nodes.len() {
                assert!((a.values[k] - b.values[k]).abs() < 1e-10);
                for d in 0..2 {
                    assert!((a.grad(k)[d] - b.grad(k)[d]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn outside_element_rejected() {
        let mesh = TensorMesh::new(vec![Axis::new(0.0, 1.0, 8).unwrap(); 2]).unwrap();
        let tb = TensorBasis::new(mesh, HyperParams::new(3.0, 2, 3).unwrap()).unwrap();
        assert!(matches!(tb.eval_shape(0, &[0.5, 0.5]), Err(BasisError::OutsideElement { .. })));
        assert!(tb.eval_point(&[1.5, 0.5]).is_err());
    }
}
