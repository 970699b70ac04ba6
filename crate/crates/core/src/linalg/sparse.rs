use std::collections::VecDeque;

use super::{BandLu, LinalgError};
use crate::Scalar;

/// Coordinate-format accumulator. Duplicate entries are summed in insertion
/// order when converted, so the result is independent of hashing.
#[derive(Clone, Debug, Default)]
pub struct Triplets<T> {
    pub rows: usize,
    pub cols: usize,
    entries: Vec<(usize, usize, T)>,
}

impl<T: Scalar> Triplets<T> {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: Vec::new() }
    }

    pub fn push(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(i < self.rows && j < self.cols);
        self.entries.push((i, j, v));
    }

    pub fn extend_from(&mut self, other: Triplets<T>) {
        self.entries.extend(other.entries);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn into_csr(mut self) -> CsrMatrix<T> {
        // stable sort keeps insertion order among duplicates
        self.entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0usize; self.rows + 1];
        let mut indices = Vec::with_capacity(self.entries.len());
        let mut values: Vec<T> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in self.entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                values.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.rows {
            indptr[i + 1] += indptr[i];
        }
        CsrMatrix { rows: self.rows, cols: self.cols, indptr, indices, values }
    }
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![T::one(); n],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    pub fn row_mut(&mut self, i: usize) -> (&[usize], &mut [T]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &mut self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (idx, val) = self.row(i);
        match idx.binary_search(&j) {
            Ok(k) => val[k],
            Err(_) => T::zero(),
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|i| {
                let (idx, val) = self.row(i);
                idx.iter().zip(val).map(|(&j, &v)| v * x[j]).sum()
            })
            .collect()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        let scale = self.max_abs().max(T::min_positive_value());
        (0..self.rows).all(|i| {
            let (idx, val) = self.row(i);
            idx.iter().zip(val).all(|(&j, &v)| (v - self.get(j, i)).abs() <= tol * scale)
        })
    }
}

/// Reverse Cuthill–McKee ordering of the symmetrized sparsity pattern.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee<T: Scalar>(a: &CsrMatrix<T>) -> Vec<usize> {
    let n = a.rows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let (idx, _) = a.row(i);
        for &j in idx {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        // start each component from a minimum-degree unvisited node
        let start = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| (adj[i].len(), i)).unwrap();
        let start = pseudo_peripheral(&adj, start);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            next.sort_by_key(|&u| (adj[u].len(), u));
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(adj: &[Vec<usize>], start: usize) -> (usize, usize) {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut far = (start, 0);
    while let Some(v) = queue.pop_front() {
        let d = dist[v];
        if d > far.1 || (d == far.1 && adj[v].len() < adj[far.0].len()) {
            far = (v, d);
        }
        for &u in &adj[v] {
            if dist[u] == usize::MAX {
                dist[u] = d + 1;
                queue.push_back(u);
            }
        }
    }
    far
}

fn pseudo_peripheral(adj: &[Vec<usize>], start: usize) -> usize {
    let mut node = start;
    let mut ecc = 0;
    for _ in 0..8 {
        let (far, d) = bfs_levels(adj, node);
        if d <= ecc {
            break;
        }
        ecc = d;
        node = far;
    }
    node
}

/// Direct solver: RCM reordering, banded LU with partial pivoting and one
/// step of iterative refinement.
#[derive(Clone, Debug)]
pub struct SparseLu<T> {
    a: CsrMatrix<T>,
    perm: Vec<usize>,
    lu: BandLu<T>,
}

impl<T: Scalar> SparseLu<T> {
    pub fn new(a: &CsrMatrix<T>) -> Result<Self, LinalgError> {
        let n = a.rows();
        if a.cols() != n {
            return Err(LinalgError::DimensionMismatch { expected: n, found: a.cols() });
        }
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let (mut kl, mut ku) = (0, 0);
        for i in 0..n {
            let (idx, _) = a.row(i);
            for &j in idx {
                let (pi, pj) = (inv[i], inv[j]);
                if pi > pj {
                    kl = kl.max(pi - pj);
                } else {
                    ku = ku.max(pj - pi);
                }
            }
        }
        let mut lu = BandLu::zeros(n, kl, ku);
        for i in 0..n {
            let (idx, val) = a.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                lu.add(inv[i], inv[j], v);
            }
        }
        lu.factor()?;
        Ok(Self { a: a.clone(), perm, lu })
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        self.lu.bandwidths()
    }

    fn solve_once(&self, b: &[T]) -> Vec<T> {
        let pb: Vec<T> = self.perm.iter().map(|&o| b[o]).collect();
        let px = self.lu.solve(&pb);
        let mut x = vec![T::zero(); b.len()];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = px[new];
        }
        x
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = self.solve_once(b);
        let ax = self.a.matvec(&x);
        let r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
        let dx = self.solve_once(&r);
        for (xi, di) in x.iter_mut().zip(dx) {
            *xi += di;
        }
        x
    }
}
