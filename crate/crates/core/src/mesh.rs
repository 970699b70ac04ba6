//! Uniform axes, tensor-product meshes, nested level hierarchies and nodal
//! convolution patches.

use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("axis needs hi > lo and at least one element (lo={lo}, hi={hi}, n_elem={n_elem})")]
    InvalidAxis { lo: f64, hi: f64, n_elem: usize },
    #[error("mesh must have between 1 and 4 axes, got {0}")]
    Dimension(usize),
    #[error("invalid hyper-parameters: {0}")]
    Hyper(String),
    #[error("level {level}: {reason}")]
    Hierarchy { level: usize, reason: String },
    #[error("axis {axis} has {nodes} nodes but a patch needs {needed}")]
    TooFewNodes { axis: usize, nodes: usize, needed: usize },
    #[error("point {0:?} lies outside the mesh")]
    OutsidePoint(Vec<f64>),
}

/// Uniform 1D partition of `[lo, hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis<T> {
    pub lo: T,
    pub hi: T,
    pub n_elem: usize,
}

impl<T: Scalar> Axis<T> {
    pub fn new(lo: T, hi: T, n_elem: usize) -> Result<Self, MeshError> {
        if n_elem == 0 || !(hi > lo) {
            return Err(MeshError::InvalidAxis {
                lo: lo.to_f64_lossy(),
                hi: hi.to_f64_lossy(),
                n_elem,
            });
        }
        Ok(Self { lo, hi, n_elem })
    }

    pub fn h(&self) -> T {
        (self.hi - self.lo) / T::of_usize(self.n_elem)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_elem + 1
    }

    pub fn node(&self, i: usize) -> T {
        if i == self.n_elem {
            self.hi
        } else {
            self.lo + T::of_usize(i) * self.h()
        }
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.n_nodes()).map(|i| self.node(i)).collect()
    }

    /// Element containing `x`; points within `1e-9·h` outside the axis are
    /// clamped to the end elements.
    pub fn locate(&self, x: T) -> Option<usize> {
        let h = self.h();
        let tol = T::of(1e-9) * h;
        if x < self.lo - tol || x > self.hi + tol {
            return None;
        }
        let e = ((x - self.lo) / h).floor().to_f64_lossy();
        Some((e.max(0.0) as usize).min(self.n_elem - 1))
    }

    /// Index of the node at coordinate `x`, if one lies within `1e-9·h`.
    pub fn node_at(&self, x: T) -> Option<usize> {
        let h = self.h();
        let r = ((x - self.lo) / h).round();
        if r < T::zero() || r > T::of_usize(self.n_elem) {
            return None;
        }
        let i = r.to_f64_lossy() as usize;
        ((self.node(i) - x).abs() <= T::of(1e-9) * h).then_some(i)
    }
}

/// Tensor product of axes; nodes and elements are indexed row-major with
/// the last axis running fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorMesh<T> {
    axes: Vec<Axis<T>>,
}

pub fn build_tensor_mesh<T: Scalar>(axes: Vec<Axis<T>>) -> Result<TensorMesh<T>, MeshError> {
    TensorMesh::new(axes)
}

impl<T: Scalar> TensorMesh<T> {
    pub fn new(axes: Vec<Axis<T>>) -> Result<Self, MeshError> {
        if axes.is_empty() || axes.len() > 4 {
            return Err(MeshError::Dimension(axes.len()));
        }
        for a in &axes {
            Axis::new(a.lo, a.hi, a.n_elem)?;
        }
        Ok(Self { axes })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis<T>] {
        &self.axes
    }

    pub fn axis(&self, d: usize) -> &Axis<T> {
        &self.axes[d]
    }

    pub fn node_shape(&self) -> Vec<usize> {
        self.axes.iter().map(Axis::n_nodes).collect()
    }

    pub fn element_shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.n_elem).collect()
    }

    pub fn n_nodes(&self) -> usize {
        self.node_shape().iter().product()
    }

    pub fn n_elements(&self) -> usize {
        self.element_shape().iter().product()
    }

    pub fn node_coords_axis(&self, d: usize) -> Vec<T> {
        self.axes[d].nodes()
    }

    pub fn node_id(&self, multi: &[usize]) -> usize {
        flat_index(&self.node_shape(), multi)
    }

    pub fn node_multi(&self, id: usize) -> Vec<usize> {
        multi_index(&self.node_shape(), id)
    }

    pub fn node_coords(&self, id: usize) -> Vec<T> {
        self.node_multi(id).iter().zip(&self.axes).map(|(&i, a)| a.node(i)).collect()
    }

    pub fn element_multi(&self, id: usize) -> Vec<usize> {
        multi_index(&self.element_shape(), id)
    }

    /// The `2^d` corner nodes of an element in lexicographic order.
    pub fn element_nodes(&self, id: usize) -> Vec<usize> {
        let e = self.element_multi(id);
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| {
                let m: Vec<usize> =
                    (0..d).map(|k| e[k] + ((mask >> (d - 1 - k)) & 1)).collect();
                self.node_id(&m)
            })
            .collect()
    }

    pub fn locate(&self, x: &[T]) -> Option<Vec<usize>> {
        x.iter().zip(&self.axes).map(|(&xi, a)| a.locate(xi)).collect()
    }
}

pub(crate) fn flat_index(shape: &[usize], multi: &[usize]) -> usize {
    multi.iter().zip(shape).fold(0, |acc, (&i, &n)| {
        debug_assert!(i < n);
        acc * n + i
    })
}

pub(crate) fn multi_index(shape: &[usize], mut id: usize) -> Vec<usize> {
    let mut out = vec![0; shape.len()];
    for k in (0..shape.len()).rev() {
        out[k] = id % shape[k];
        id /= shape[k];
    }
    out
}

/// Basis controls: dilation `a` (in units of the patch half-width), patch
/// size `s` (element layers) and reproducing order `p`.
///
/// `s = 0` with `p = 1` selects plain multilinear finite elements.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HyperParams<T> {
    pub a: T,
    pub s: usize,
    pub p: usize,
}

impl<T: Scalar> HyperParams<T> {
    pub fn new(a: T, s: usize, p: usize) -> Result<Self, MeshError> {
        if !(a > T::zero()) {
            return Err(MeshError::Hyper(format!("dilation must be positive, got {a}")));
        }
        if p == 0 {
            return Err(MeshError::Hyper("reproducing order must be at least 1".into()));
        }
        if s == 0 && p != 1 {
            return Err(MeshError::Hyper("s = 0 is only allowed with p = 1".into()));
        }
        if s > 0 && 2 * s < p {
            return Err(MeshError::Hyper(format!("patch size s={s} too small for order p={p}")));
        }
        Ok(Self { a, s, p })
    }

    pub fn linear() -> Self {
        Self { a: T::one(), s: 0, p: 1 }
    }

    pub fn is_linear_fe(&self) -> bool {
        self.s == 0
    }
}

/// Ordered node ids of the convolution patch of `node`: the `(2s+1)^d`
/// block around it, shifted inward near the mesh boundary.
pub fn nodal_patch<T: Scalar>(
    mesh: &TensorMesh<T>,
    node: usize,
    s: usize,
) -> Result<Vec<usize>, MeshError> {
    let shape = mesh.node_shape();
    let center = mesh.node_multi(node);
    let width = 2 * s + 1;
    let mut ranges = Vec::with_capacity(shape.len());
    for (d, (&n, &c)) in shape.iter().zip(&center).enumerate() {
        ranges.push(patch_start(n, c, s).ok_or(MeshError::TooFewNodes {
            axis: d,
            nodes: n,
            needed: width,
        })?);
    }
    let block = vec![width; shape.len()];
    let count = width.pow(shape.len() as u32);
    Ok((0..count)
        .map(|k| {
            let off = multi_index(&block, k);
            let m: Vec<usize> = off.iter().zip(&ranges).map(|(o, r)| o + r).collect();
            flat_index(&shape, &m)
        })
        .collect())
}

/// First node of the shifted 1D patch of node `i` on an axis with `n` nodes.
pub fn patch_start(n: usize, i: usize, s: usize) -> Option<usize> {
    let width = 2 * s + 1;
    if n < width {
        return None;
    }
    Some(i.saturating_sub(s).min(n - width))
}

/// Whether a face of a level box lies on the outer domain boundary or is an
/// interface with the next coarser level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceKind {
    Outer,
    Interface,
}

/// Specification of one level: box, element size per axis (the last axis may
/// be time), basis controls and, for reduced-order runs, the mode count.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSpec<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub h: Vec<T>,
    pub hyper: HyperParams<T>,
    pub modes: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct Level<T> {
    pub spec: LevelSpec<T>,
    pub mesh: TensorMesh<T>,
    /// Element-size ratio to the previous level per axis (all 1 for level 1).
    pub ratio: Vec<usize>,
    /// `[lower face, upper face]` per axis.
    pub faces: Vec<[FaceKind; 2]>,
    /// Nodes on interface faces, sorted.
    pub interface: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct MultilevelMesh<T> {
    levels: Vec<Level<T>>,
}

pub fn build_hierarchy<T: Scalar>(specs: Vec<LevelSpec<T>>) -> Result<MultilevelMesh<T>, MeshError> {
    MultilevelMesh::new(specs)
}

fn integer_ratio<T: Scalar>(x: T) -> Option<usize> {
    let r = x.round();
    if r < T::one() || (x - r).abs() > T::of(1e-9) * x.max(T::one()) {
        return None;
    }
    Some(r.to_f64_lossy() as usize)
}

impl<T: Scalar> MultilevelMesh<T> {
    pub fn new(specs: Vec<LevelSpec<T>>) -> Result<Self, MeshError> {
        if specs.is_empty() {
            return Err(MeshError::Hierarchy { level: 1, reason: "no levels".into() });
        }
        let dim = specs[0].lower.len();
        let mut levels: Vec<Level<T>> = Vec::with_capacity(specs.len());
        for (l, spec) in specs.into_iter().enumerate() {
            let err = |reason: String| MeshError::Hierarchy { level: l + 1, reason };
            if spec.lower.len() != dim || spec.upper.len() != dim || spec.h.len() != dim {
                return Err(err("inconsistent dimension".into()));
            }
            let mut axes = Vec::with_capacity(dim);
            for d in 0..dim {
                let (lo, hi, h) = (spec.lower[d], spec.upper[d], spec.h[d]);
                if !(h > T::zero()) || !(hi > lo) {
                    return Err(err(format!("axis {d}: empty box or non-positive h")));
                }
                let n = integer_ratio((hi - lo) / h)
                    .ok_or_else(|| err(format!("axis {d}: extent is not a multiple of h")))?;
                axes.push(Axis::new(lo, hi, n)?);
            }
            let mesh = TensorMesh::new(axes)?;
            let mut ratio = vec![1; dim];
            let mut faces = vec![[FaceKind::Outer; 2]; dim];
            if let Some(prev) = levels.last() {
                for d in 0..dim {
                    let pa = prev.mesh.axis(d);
                    let ph = pa.h();
                    let tol = T::of(1e-9) * ph;
                    let (lo, hi) = (spec.lower[d], spec.upper[d]);
                    if lo < pa.lo - tol || hi > pa.hi + tol {
                        return Err(err(format!("axis {d}: box not nested in level {l}")));
                    }
                    if pa.node_at(lo).is_none() || pa.node_at(hi).is_none() {
                        return Err(err(format!("axis {d}: box edge not on a level-{l} node")));
                    }
                    ratio[d] = integer_ratio(ph / spec.h[d])
                        .ok_or_else(|| err(format!("axis {d}: element ratio is not an integer")))?;
                    let outer = &levels[0].mesh.axis(d);
                    let otol = T::of(1e-9) * outer.h();
                    if (lo - outer.lo).abs() > otol {
                        faces[d][0] = FaceKind::Interface;
                    }
                    if (hi - outer.hi).abs() > otol {
                        faces[d][1] = FaceKind::Interface;
                    }
                }
            }
            let shape = mesh.node_shape();
            let s = spec.hyper.s;
            for (d, &n) in shape.iter().enumerate() {
                if n < 2 * s + 1 {
                    return Err(MeshError::TooFewNodes { axis: d, nodes: n, needed: 2 * s + 1 });
                }
            }
            let interface = (0..mesh.n_nodes())
                .filter(|&id| {
                    let m = multi_index(&shape, id);
                    (0..dim).any(|d| {
                        (m[d] == 0 && faces[d][0] == FaceKind::Interface)
                            || (m[d] == shape[d] - 1 && faces[d][1] == FaceKind::Interface)
                    })
                })
                .collect();
            levels.push(Level { spec, mesh, ratio, faces, interface });
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[Level<T>] {
        &self.levels
    }

    pub fn level(&self, l: usize) -> &Level<T> {
        &self.levels[l]
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn dim(&self) -> usize {
        self.levels[0].mesh.dim()
    }

    /// Per-axis element-size ratio between level `l` and level `l + 1`.
    pub fn ratio(&self, l: usize) -> &[usize] {
        &self.levels[l + 1].ratio
    }

    /// Finest level whose closed box contains `x`.
    pub fn finest_containing(&self, x: &[T]) -> Option<usize> {
        self.levels.iter().rposition(|lv| {
            x.iter().zip(lv.mesh.axes()).all(|(&xi, a)| {
                let tol = T::of(1e-9) * a.h();
                xi >= a.lo - tol && xi <= a.hi + tol
            })
        })
    }
}
