//! Gauss–Legendre rules.

use crate::Scalar;

/// `n`-point Gauss–Legendre rule on `[-1, 1]` (exact up to degree `2n-1`).
#[derive(Clone, Debug, PartialEq)]
pub struct QuadRule<T> {
    pub points: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Scalar> QuadRule<T> {
    pub fn gauss(n: usize) -> Self {
        assert!(n >= 1, "quadrature needs at least one point");
        let (x, w) = gauss_legendre_f64(n);
        Self {
            points: x.into_iter().map(T::of).collect(),
            weights: w.into_iter().map(T::of).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    /// Points and weights mapped to `[a, b]`.
    pub fn on_interval(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = (b - a) * T::of(0.5);
        let mid = (a + b) * T::of(0.5);
        self.points.iter().zip(&self.weights).map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// Tensorized reference points in `[-1,1]^dim` (last axis fastest).
    pub fn tensor(&self, dim: usize) -> Vec<(Vec<T>, T)> {
        let n = self.order();
        let total = n.pow(dim as u32);
        (0..total)
            .map(|k| {
                let mut rem = k;
                let mut pt = vec![T::zero(); dim];
                let mut w = T::one();
                for d in (0..dim).rev() {
                    let i = rem % n;
                    rem /= n;
                    pt[d] = self.points[i];
                    w *= self.weights[i];
                }
                (pt, w)
            })
            .collect()
    }
}

fn gauss_legendre_f64(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            z = 0.0;
            dp = 1.0;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_degree_2q_minus_1() {
        for q in 1..=12 {
            let rule = QuadRule::<f64>::gauss(q);
            for deg in 0..2 * q {
                let num: f64 = rule.on_interval(0.0, 2.0).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = 2f64.powi(deg as i32 + 1) / (deg as f64 + 1.0);
                assert!((num - exact).abs() < 1e-12 * exact, "q={q} deg={deg}");
            }
            let next: f64 = rule.on_interval(-1.0, 1.0).map(|(x, w)| w * x.powi(2 * q as i32)).sum();
            assert!((next - 2.0 / (2 * q + 1) as f64).abs() > 1e-8);
        }
    }

    #[test]
    fn tensor_weights_sum_to_volume() {
        let rule = QuadRule::<f64>::gauss(3);
        let t = rule.tensor(3);
        assert_eq!(t.len(), 27);
        let s: f64 = t.iter().map(|(_, w)| w).sum();
        assert!((s - 8.0).abs() < 1e-13);
    }
}
