//! Plain bilinear finite elements on a uniform grid with dense matrices,
//! and a two-level alternation written directly from the coupled weak forms.

use mlvms::problems::{AxisFn, BoundaryKind, ManufacturedProblem, SepTerm, SeparatedFn};

fn quad(c: [f64; 3]) -> AxisFn<f64> {
    AxisFn::new(move |x| c[0] + c[1] * x + c[2] * x * x, move |x| c[1] + 2.0 * c[2] * x, move |_| 2.0 * c[2])
}

/// `u = (1 + x + x²)(1 − y + 2y²)` on the unit square.
pub fn poly_problem() -> ManufacturedProblem<f64> {
    let (qx, qy) = ([1.0, 1.0, 1.0], [1.0, -1.0, 2.0]);
    let one = AxisFn::constant(1.0);
    ManufacturedProblem {
        name: "poly".into(),
        domain: vec![(0.0, 1.0); 2],
        time_dependent: false,
        rho_c: 1.0,
        k: 1.0,
        boundary: vec![[BoundaryKind::Dirichlet; 2]; 2],
        exact: Some(SeparatedFn { terms: vec![SepTerm { coef: 1.0, factors: vec![quad(qx), quad(qy)] }] }),
        source: SeparatedFn {
            terms: vec![
                SepTerm { coef: -2.0 * qx[2], factors: vec![one.clone(), quad(qy)] },
                SepTerm { coef: -2.0 * qy[2], factors: vec![quad(qx), one] },
            ],
        },
        map: None,
        offset: 0.0,
    }
}

#[derive(Clone, Copy)]
pub struct Grid {
    pub lo: [f64; 2],
    pub h: f64,
    pub n: [usize; 2],
}

impl Grid {
    fn nodes(&self) -> usize {
        (self.n[0] + 1) * (self.n[1] + 1)
    }

    fn coords(&self, id: usize) -> [f64; 2] {
        let (i, j) = (id / (self.n[1] + 1), id % (self.n[1] + 1));
        [self.lo[0] + i as f64 * self.h, self.lo[1] + j as f64 * self.h]
    }

    fn on_boundary(&self, id: usize) -> bool {
        let (i, j) = (id / (self.n[1] + 1), id % (self.n[1] + 1));
        i == 0 || j == 0 || i == self.n[0] || j == self.n[1]
    }

    /// `(node, N, dN/dx, dN/dy)` of the four nodes of the element holding `x`.
    fn shape(&self, x: [f64; 2]) -> Vec<(usize, f64, f64, f64)> {
        let mut e = [0; 2];
        let mut t = [0.0; 2];
        for d in 0..2 {
            let s = (x[d] - self.lo[d]) / self.h;
            e[d] = (s.floor().max(0.0) as usize).min(self.n[d] - 1);
            t[d] = s - e[d] as f64;
        }
        let mut out = Vec::new();
        for a in 0..2 {
            for b in 0..2 {
                let fx = if a == 0 { 1.0 - t[0] } else { t[0] };
                let fy = if b == 0 { 1.0 - t[1] } else { t[1] };
                let gx = if a == 0 { -1.0 } else { 1.0 } / self.h;
                let gy = if b == 0 { -1.0 } else { 1.0 } / self.h;
                let id = (e[0] + a) * (self.n[1] + 1) + e[1] + b;
                out.push((id, fx * fy, gx * fy, fx * gy));
            }
        }
        out
    }

    fn interpolate(&self, u: &[f64], x: [f64; 2]) -> f64 {
        self.shape(x).iter().map(|&(id, v, _, _)| v * u[id]).sum()
    }
}

const GAUSS: [(f64, f64); 3] = [(-0.7745966692414834, 5.0 / 9.0), (0.0, 8.0 / 9.0), (0.7745966692414834, 5.0 / 9.0)];

/// Gauss points over `region` cut into cells of size `h`.
fn points(lo: [f64; 2], hi: [f64; 2], h: f64) -> Vec<([f64; 2], f64)> {
    let n = [((hi[0] - lo[0]) / h).round() as usize, ((hi[1] - lo[1]) / h).round() as usize];
    let mut out = Vec::new();
    for i in 0..n[0] {
        for j in 0..n[1] {
            for &(gx, wx) in &GAUSS {
                for &(gy, wy) in &GAUSS {
                    let x = lo[0] + (i as f64 + 0.5 + 0.5 * gx) * h;
                    let y = lo[1] + (j as f64 + 0.5 + 0.5 * gy) * h;
                    out.push(([x, y], wx * wy * h * h / 4.0));
                }
            }
        }
    }
    out
}

/// `∫ ∇N_a^{test} · ∇N_b^{trial}` over the quadrature points.
fn stiffness(test: &Grid, trial: &Grid, pts: &[([f64; 2], f64)]) -> Vec<Vec<f64>> {
    let mut k = vec![vec![0.0; trial.nodes()]; test.nodes()];
    for &(x, w) in pts {
        let (sa, sb) = (test.shape(x), trial.shape(x));
        for &(a, _, ax, ay) in &sa {
            for &(b, _, bx, by) in &sb {
                k[a][b] += w * (ax * bx + ay * by);
            }
        }
    }
    k
}

fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            if f != 0.0 {
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Solve `K u = rhs` with `u = g` on the rows where `fixed` is set.
fn dirichlet_solve(k: &[Vec<f64>], rhs: &[f64], fixed: &[Option<f64>]) -> Vec<f64> {
    let n = rhs.len();
    let mut a = k.to_vec();
    let mut b = rhs.to_vec();
    for i in 0..n {
        if let Some(g) = fixed[i] {
            for r in 0..n {
                if fixed[r].is_none() {
                    b[r] -= k[r][i] * g;
                }
            }
        }
    }
    for i in 0..n {
        if let Some(g) = fixed[i] {
            a[i] = vec![0.0; n];
            a[i][i] = 1.0;
            b[i] = g;
            for r in 0..n {
                if r != i {
                    a[r][i] = 0.0;
                }
            }
        }
    }
    gauss_solve(a, b)
}

/// Two-level linear-FE alternation written directly from the coupled weak
/// forms: coarse solve with fine-minus-coarse correction on the fine box,
/// fine solve with coarse interface data.
pub fn reference_two_level(p: &ManufacturedProblem<f64>, coarse: Grid, fine: Grid, tol: f64) -> (Vec<f64>, Vec<f64>) {
    let f = |x: [f64; 2]| p.source_at(&x);
    let g = |x: [f64; 2]| p.exact_at(&x).unwrap();
    let fine_hi = [fine.lo[0] + fine.n[0] as f64 * fine.h, fine.lo[1] + fine.n[1] as f64 * fine.h];
    let cpts = points([0.0, 0.0], [1.0, 1.0], coarse.h);
    let fpts = points(fine.lo, fine_hi, fine.h);
    let kc = stiffness(&coarse, &coarse, &cpts);
    let kf = stiffness(&fine, &fine, &fpts);
    let cross = stiffness(&coarse, &fine, &fpts);
    let own = stiffness(&coarse, &coarse, &fpts);
    let load = |grid: &Grid, pts: &[([f64; 2], f64)]| {
        let mut b = vec![0.0; grid.nodes()];
        for &(x, w) in pts {
            for (a, v, _, _) in grid.shape(x) {
                b[a] += w * v * f(x);
            }
        }
        b
    };
    let (fc, ff) = (load(&coarse, &cpts), load(&fine, &fpts));
    let fixed_c: Vec<Option<f64>> =
        (0..coarse.nodes()).map(|i| coarse.on_boundary(i).then(|| g(coarse.coords(i)))).collect();
    let mut uc = vec![0.0; coarse.nodes()];
    let mut uf: Option<Vec<f64>> = None;
    let inside = |x: [f64; 2]| (0..2).all(|d| x[d] >= fine.lo[d] - 1e-12 && x[d] <= fine_hi[d] + 1e-12);
    for _ in 0..500 {
        let mut rhs = fc.clone();
        if let Some(uf) = &uf {
            let mut tilde = uc.clone();
            for (i, t) in tilde.iter_mut().enumerate() {
                let x = coarse.coords(i);
                if inside(x) {
                    *t = fine.interpolate(uf, x);
                }
            }
            let cu = matvec(&cross, uf);
            let st = matvec(&own, &tilde);
            for i in 0..rhs.len() {
                rhs[i] += st[i] - cu[i];
            }
        }
        let new_c = dirichlet_solve(&kc, &rhs, &fixed_c);
        let fixed_f: Vec<Option<f64>> = (0..fine.nodes())
            .map(|i| fine.on_boundary(i).then(|| coarse.interpolate(&new_c, fine.coords(i))))
            .collect();
        let new_f = dirichlet_solve(&kf, &ff, &fixed_f);
        let change = |a: &[f64], b: Option<&[f64]>| {
            let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            match b {
                Some(b) => a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / (scale + 1e-14),
                None => 1.0,
            }
        };
        let worst = change(&new_c, Some(&uc)).max(change(&new_f, uf.as_deref()));
        uc = new_c;
        uf = Some(new_f);
        if worst < tol {
            break;
        }
    }
    (uc, uf.unwrap())
}
