use super::LinalgError;
use crate::Scalar;

/// Banded LU factorization with partial pivoting (row interchanges within
/// the lower band), `kl` sub- and `ku` super-diagonals.
#[derive(Clone, Debug)]
pub struct BandLu<T> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<T>,
    piv: Vec<usize>,
}

impl<T: Scalar> BandLu<T> {
    /// Allocates an all-zero band; fill with [`BandLu::add`] then call
    /// [`BandLu::factor`].
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![T::zero(); n * width], piv: Vec::new() }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    /// Adds `v` to entry `(i, j)`, which must lie inside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        assert!(j + self.kl >= i && j <= i + self.ku, "entry ({i},{j}) outside band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if j + self.kl < i || j > i + self.ku {
            return T::zero();
        }
        self.data[self.idx(i, j)]
    }

    pub fn trace(&self) -> T {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku + 1).min(self.n);
                (lo..hi).map(|j| self.data[self.idx(i, j)] * x[j]).sum()
            })
            .collect()
    }

    pub fn factor(&mut self) -> Result<(), LinalgError> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let scale = self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
        let tiny = scale.max(T::min_positive_value()) * T::epsilon() * T::of_usize(n.max(1));
        let mut pmax = T::zero();
        self.piv = vec![0; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for i in k + 1..=last {
                let v = self.data[self.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            pmax = pmax.max(best);
            if best <= tiny {
                return Err(LinalgError::Singular {
                    row: k,
                    pivot: best.to_f64_lossy(),
                    condition: (pmax / best.max(T::min_positive_value())).to_f64_lossy(),
                });
            }
            self.piv[k] = p;
            let jend = (k + kl + ku + 1).min(n);
            if p != k {
                for j in k..jend {
                    let a = self.idx(k, j);
                    let b = self.idx(p, j);
                    self.data.swap(a, b);
                }
            }
            let d = self.data[self.idx(k, k)];
            for i in k + 1..=last {
                let ik = self.idx(i, k);
                let l = self.data[ik] / d;
                self.data[ik] = l;
                if l == T::zero() {
                    continue;
                }
                for j in k + 1..jend {
                    let u = self.data[self.idx(k, j)];
                    let ij = self.idx(i, j);
                    self.data[ij] -= l * u;
                }
            }
        }
        Ok(())
    }

    /// Solves using a factorization produced by [`BandLu::factor`].
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut x = b.to_vec();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk == T::zero() {
                continue;
            }
            for i in k + 1..=(k + kl).min(n - 1) {
                x[i] -= self.data[self.idx(i, k)] * xk;
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..(i + kl + ku + 1).min(n) {
                s -= self.data[self.idx(i, j)] * x[j];
            }
            x[i] = s / self.data[self.idx(i, i)];
        }
        x
    }
}
