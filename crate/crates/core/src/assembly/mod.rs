//! Weak-form assembly: element-loop sparse systems, Dirichlet constraints
//! and the direct solve, plus the separable (Kronecker) operators in
//! [`separable`].

pub mod separable;

use thiserror::Error;

use crate::chidenn::{BasisError, ShapeFunctions};
use crate::linalg::{CsrMatrix, LinalgError, SparseLu, Triplets};
use crate::movingsource::CoordinateMap;
use crate::quadrature::QuadRule;
use crate::Scalar;

pub use separable::{
    axis_load, axis_moment, axis_operator, integrate_1d, kron_apply, outer, AxisFactor, AxisMat, FastDiagSolver, FormTerm,
    KronOperator, KronSolver, SeparableForm, Weight, mode_product, restrict, scatter,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("quadrature with {order} points per axis under-integrates order {p} shape functions (need at least {})", p + 1)]
    UnderIntegration { order: usize, p: usize },
    #[error("space-time assembly needs an initial condition")]
    MissingInitialCondition,
    #[error("node {node} constrained to both {first} and {second}")]
    ConflictingDirichlet { node: usize, first: f64, second: f64 },
    #[error("node {node} outside system of size {size}")]
    NodeOutOfRange { node: usize, size: usize },
    #[error("linear solve failed: {0}")]
    Singular(#[from] LinalgError),
    #[error("relative residual {0:.3e} above 1e-10")]
    Residual(f64),
    #[error(transparent)]
    Basis(#[from] BasisError),
}

/// Assembled system with its Dirichlet constraints.
#[derive(Clone, Debug)]
pub struct SparseSystem<T> {
    pub matrix: CsrMatrix<T>,
    pub rhs: Vec<T>,
    /// Constrained node and prescribed value, in application order.
    pub constrained: Vec<(usize, T)>,
}

/// Default number of Gauss points per axis for order-`p` shape functions.
pub fn default_quadrature_order(p: usize) -> usize {
    p + 2
}

fn check_order<T: Scalar, B: ShapeFunctions<T>>(basis: &B, qorder: Option<usize>) -> Result<usize, AssemblyError> {
    let p = basis.hyper().p;
    let order = qorder.unwrap_or_else(|| default_quadrature_order(p));
    if order < p + 1 {
        return Err(AssemblyError::UnderIntegration { order, p });
    }
    Ok(order)
}

fn element_point<T: Scalar>(mesh: &crate::mesh::TensorMesh<T>, e: &[usize], r: &[T]) -> (Vec<T>, T) {
    let mut jac = T::one();
    let x = (0..mesh.dim())
        .map(|d| {
            let a = mesh.axis(d);
            let h = a.h();
            jac *= h * T::of(0.5);
            a.node(e[d]) + (r[d] + T::one()) * T::of(0.5) * h
        })
        .collect();
    (x, jac)
}

/// `K_IJ = ∫ k ∇Ñ_I·∇Ñ_J`, `F_I = ∫ Ñ_I f` by element-wise quadrature.
pub fn assemble_elliptic<T: Scalar, B: ShapeFunctions<T>>(
    basis: &B,
    k: T,
    f: &dyn Fn(&[T]) -> T,
    qorder: Option<usize>,
) -> Result<SparseSystem<T>, AssemblyError> {
    let order = check_order(basis, qorder)?;
    let mesh = basis.mesh();
    let n = mesh.n_nodes();
    let dim = mesh.dim();
    let pts = QuadRule::gauss(order).tensor(dim);
    let mut trip = Triplets::new(n, n);
    let mut rhs = vec![T::zero(); n];
    for el in 0..mesh.n_elements() {
        let e = mesh.element_multi(el);
        for (r, w) in &pts {
            let (x, jac) = element_point(mesh, &e, r);
            let ev = basis.eval_shape(el, &x)?;
            let wq = *w * jac;
            let fx = f(&x) * wq;
            for (a, &i) in ev.nodes.iter().enumerate() {
                rhs[i] += ev.values[a] * fx;
                let gi = ev.grad(a);
                for (b, &j) in ev.nodes.iter().enumerate() {
                    let gj = ev.grad(b);
                    let v: T = gi.iter().zip(gj).map(|(&p, &q)| p * q).sum();
                    if v != T::zero() {
                        trip.push(i, j, k * v * wq);
                    }
                }
            }
        }
    }
    Ok(SparseSystem { matrix: trip.into_csr(), rhs, constrained: Vec::new() })
}

/// Continuous-Galerkin space-time system `∫∫ ρc w u_t + k ∇w·∇u` (last axis
/// is time). With a coordinate map the form is the pulled-back one and the
/// source is evaluated at mapped points. The initial condition is imposed on
/// the `t = t0` slab.
#[allow(clippy::too_many_arguments)]
pub fn assemble_spacetime<T: Scalar, B: ShapeFunctions<T>>(
    basis: &B,
    rho_c: T,
    k: T,
    f: &dyn Fn(&[T]) -> T,
    initial: Option<&dyn Fn(&[T]) -> T>,
    map: Option<&CoordinateMap<T>>,
    qorder: Option<usize>,
) -> Result<SparseSystem<T>, AssemblyError> {
    let initial = initial.ok_or(AssemblyError::MissingInitialCondition)?;
    let order = check_order(basis, qorder)?;
    let mesh = basis.mesh();
    let n = mesh.n_nodes();
    let dim = mesh.dim();
    let td = dim - 1;
    let pts = QuadRule::gauss(order).tensor(dim);
    let mut trip = Triplets::new(n, n);
    let mut rhs = vec![T::zero(); n];
    for el in 0..mesh.n_elements() {
        let e = mesh.element_multi(el);
        for (r, w) in &pts {
            let (x, jac) = element_point(mesh, &e, r);
            let ev = basis.eval_shape(el, &x)?;
            let t = x[td];
            // advective velocity in reference coordinates and diffusion scales
            let mut adv = vec![T::zero(); td];
            let mut diff = vec![T::one(); td];
            let mut det = T::one();
            let mut phys = x.clone();
            if let Some(map) = map {
                let eta = if td > 1 { x[1] } else { T::zero() };
                let jm = map.jacobian(x[0], eta, t);
                adv[0] = jm.c;
                diff[0] = jm.a * jm.a;
                if td > 1 && map.moves_y() {
                    adv[1] = jm.d;
                    diff[1] = jm.b * jm.b;
                }
                det = jm.det;
                let p = map.map_point(x[0], eta, t);
                phys[0] = p.0;
                if td > 1 && map.moves_y() {
                    phys[1] = p.1;
                }
            }
            let wq = *w * jac * det;
            let fx = f(&phys) * wq;
            for (a, &i) in ev.nodes.iter().enumerate() {
                let wi = ev.values[a];
                rhs[i] += wi * fx;
                let gi = ev.grad(a);
                for (b, &j) in ev.nodes.iter().enumerate() {
                    let gj = ev.grad(b);
                    let mut v = rho_c * wi * gj[td];
                    for d in 0..td {
                        v += rho_c * wi * adv[d] * gj[d] + k * diff[d] * gi[d] * gj[d];
                    }
                    if v != T::zero() {
                        trip.push(i, j, v * wq);
                    }
                }
            }
        }
    }
    let mut sys = SparseSystem { matrix: trip.into_csr(), rhs, constrained: Vec::new() };
    let t0 = mesh.axis(td).lo;
    let slab: Vec<(usize, T)> = (0..n)
        .filter(|&id| mesh.node_multi(id)[td] == 0)
        .map(|id| {
            let mut x = mesh.node_coords(id);
            x[td] = t0;
            (id, initial(&x))
        })
        .collect();
    apply_dirichlet(&mut sys, &slab)?;
    Ok(sys)
}

/// Row replacement with column elimination of the known values.
pub fn apply_dirichlet<T: Scalar>(system: &mut SparseSystem<T>, values: &[(usize, T)]) -> Result<(), AssemblyError> {
    let n = system.rhs.len();
    let mut prescribed: Vec<Option<T>> = vec![None; n];
    for &(i, v) in &system.constrained {
        prescribed[i] = Some(v);
    }
    let mut fresh = Vec::new();
    for &(i, v) in values {
        if i >= n {
            return Err(AssemblyError::NodeOutOfRange { node: i, size: n });
        }
        match prescribed[i] {
            Some(old) => {
                let scale = T::one().max(old.abs()).max(v.abs());
                if (old - v).abs() > T::of(1e-12) * scale {
                    return Err(AssemblyError::ConflictingDirichlet {
                        node: i,
                        first: old.to_f64_lossy(),
                        second: v.to_f64_lossy(),
                    });
                }
            }
            None => {
                prescribed[i] = Some(v);
                fresh.push((i, v));
            }
        }
    }
    let mut is_new = vec![false; n];
    for &(i, _) in &fresh {
        is_new[i] = true;
    }
    let already: Vec<bool> = {
        let mut a = vec![false; n];
        for &(i, _) in &system.constrained {
            a[i] = true;
        }
        a
    };
    for row in 0..n {
        if already[row] {
            continue;
        }
        let (idx, val) = system.matrix.row_mut(row);
        let mut shift = T::zero();
        for (&j, v) in idx.iter().zip(val.iter_mut()) {
            if is_new[j] {
                if is_new[row] {
                    *v = if j == row { T::one() } else { T::zero() };
                } else {
                    shift += *v * prescribed[j].unwrap();
                    *v = T::zero();
                }
            } else if is_new[row] {
                *v = T::zero();
            }
        }
        if is_new[row] {
            system.rhs[row] = prescribed[row].unwrap();
        } else {
            system.rhs[row] -= shift;
        }
    }
    // constrained rows without a stored diagonal entry
    for &(i, v) in &fresh {
        if system.matrix.get(i, i) != T::one() {
            let mut trip = Triplets::new(n, n);
            for r in 0..n {
                let (idx, val) = system.matrix.row(r);
                for (&j, &x) in idx.iter().zip(val) {
                    trip.push(r, j, x);
                }
            }
            trip.push(i, i, T::one());
            system.matrix = trip.into_csr();
            system.rhs[i] = v;
        }
    }
    system.constrained.extend(fresh);
    Ok(())
}

/// Sparse direct solve; rejects results with relative residual above 1e-10.
pub fn solve_linear<T: Scalar>(system: &SparseSystem<T>) -> Result<Vec<T>, AssemblyError> {
    let lu = SparseLu::new(&system.matrix)?;
    let x = lu.solve(&system.rhs);
    let ax = system.matrix.matvec(&x);
    let num: T = ax.iter().zip(&system.rhs).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt();
    let den: T = system.rhs.iter().map(|&b| b * b).sum::<T>().sqrt();
    let rel = if den > T::zero() { num / den } else { num };
    if rel.to_f64_lossy() > residual_limit::<T>() {
        return Err(AssemblyError::Residual(rel.to_f64_lossy()));
    }
    Ok(x)
}

fn residual_limit<T: Scalar>() -> f64 {
    // single precision cannot reach 1e-10
    (1e-10f64).max(T::epsilon().to_f64_lossy() * 1e3)
}
