//! Manufactured problems with separated exact solutions and sources, and the
//! LPBF laser source.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::assembly::{SeparableForm, Weight};
use crate::movingsource::{transformed_form, AxisMap, CoordinateMap, MapError};
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("the source track leaves the domain: {0}")]
    Track(#[from] MapError),
    #[error("manufactured source inconsistent with exact solution (residual {0:.3e})")]
    Residual(f64),
    #[error("invalid laser parameter {0}")]
    Laser(&'static str),
}

/// A function of one coordinate with its first two derivatives.
#[derive(Clone)]
pub struct AxisFn<T> {
    pub f: Weight<T>,
    pub df: Weight<T>,
    pub d2f: Weight<T>,
}

impl<T: Scalar> AxisFn<T> {
    pub fn new(
        f: impl Fn(T) -> T + Send + Sync + 'static,
        df: impl Fn(T) -> T + Send + Sync + 'static,
        d2f: impl Fn(T) -> T + Send + Sync + 'static,
    ) -> Self {
        Self { f: Arc::new(f), df: Arc::new(df), d2f: Arc::new(d2f) }
    }

    pub fn constant(c: T) -> Self {
        Self::new(move |_| c, |_| T::zero(), |_| T::zero())
    }

    /// `exp(−β (x − c)²)`.
    pub fn gaussian(beta: T, c: T) -> Self {
        let two = T::of(2.0);
        Self::new(
            move |x| (-beta * (x - c) * (x - c)).exp(),
            move |x| -two * beta * (x - c) * (-beta * (x - c) * (x - c)).exp(),
            move |x| {
                let z = x - c;
                (two * two * beta * beta * z * z - two * beta) * (-beta * z * z).exp()
            },
        )
    }

    /// `1 − exp(λ t)`.
    pub fn envelope(lambda: T) -> Self {
        Self::new(
            move |t| T::one() - (lambda * t).exp(),
            move |t| -lambda * (lambda * t).exp(),
            move |t| -lambda * lambda * (lambda * t).exp(),
        )
    }

    /// Derivative `order` (0, 1 or 2).
    pub fn nth(&self, order: u8) -> &Weight<T> {
        match order {
            0 => &self.f,
            1 => &self.df,
            _ => &self.d2f,
        }
    }
}

/// Product term `coef · Π_d f_d(x_d)`.
#[derive(Clone)]
pub struct SepTerm<T> {
    pub coef: T,
    pub factors: Vec<AxisFn<T>>,
}

/// Sum of separated products.
#[derive(Clone, Default)]
pub struct SeparatedFn<T> {
    pub terms: Vec<SepTerm<T>>,
}

impl<T: Scalar> SeparatedFn<T> {
    pub fn dim(&self) -> usize {
        self.terms.first().map_or(0, |t| t.factors.len())
    }

    pub fn rank(&self) -> usize {
        self.terms.len()
    }

    /// `∂^{orders} f` at `x`.
    pub fn derivative(&self, x: &[T], orders: &[u8]) -> T {
        self.terms
            .iter()
            .map(|t| t.coef * t.factors.iter().zip(x).zip(orders).fold(T::one(), |acc, ((f, &xi), &o)| acc * f.nth(o)(xi)))
            .sum()
    }

    pub fn eval(&self, x: &[T]) -> T {
        self.derivative(x, &vec![0; x.len()])
    }

    pub fn partial(&self, x: &[T], d: usize, order: u8) -> T {
        let mut o = vec![0u8; x.len()];
        o[d] = order;
        self.derivative(x, &o)
    }

    pub fn grad(&self, x: &[T]) -> Vec<T> {
        (0..x.len()).map(|d| self.partial(x, d, 1)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

/// Heat or Poisson problem on a box. With a coordinate map every evaluator
/// is in reference coordinates and the operator is the pulled-back one.
#[derive(Clone)]
pub struct ManufacturedProblem<T> {
    pub name: String,
    pub domain: Vec<(T, T)>,
    /// The last axis is time.
    pub time_dependent: bool,
    pub rho_c: T,
    pub k: T,
    /// Lower and upper face per axis; a Dirichlet lower time face is the
    /// initial condition.
    pub boundary: Vec<[BoundaryKind; 2]>,
    pub exact: Option<SeparatedFn<T>>,
    pub source: SeparatedFn<T>,
    pub map: Option<CoordinateMap<T>>,
    /// Added to the computed field when reporting (ambient temperature).
    pub offset: T,
}

impl<T: Scalar> ManufacturedProblem<T> {
    pub fn dim(&self) -> usize {
        self.domain.len()
    }

    pub fn spatial_dim(&self) -> usize {
        self.dim() - usize::from(self.time_dependent)
    }

    pub fn form(&self) -> SeparableForm<T> {
        match (&self.map, self.time_dependent) {
            (Some(map), _) => transformed_form(map, self.spatial_dim(), self.rho_c, self.k),
            (None, true) => SeparableForm::heat(self.spatial_dim(), self.rho_c, self.k),
            (None, false) => SeparableForm::laplacian(self.dim(), self.k),
        }
    }

    pub fn exact_at(&self, x: &[T]) -> Option<T> {
        self.exact.as_ref().map(|e| e.eval(x))
    }

    /// Prescribed value on Dirichlet faces (and the initial slab).
    pub fn boundary_value(&self, x: &[T]) -> T {
        self.exact_at(x).unwrap_or_else(T::zero)
    }

    pub fn source_at(&self, x: &[T]) -> T {
        self.source.eval(x)
    }

    /// PDE residual of the exact solution against the source at `x`.
    pub fn residual_at(&self, x: &[T]) -> Option<T> {
        let u = self.exact.as_ref()?;
        let sd = self.spatial_dim();
        let mut lhs = T::zero();
        let (mut a2, mut b2, mut c, mut d) = (T::one(), T::one(), T::zero(), T::zero());
        if let Some(map) = &self.map {
            let eta = if sd > 1 { x[1] } else { T::zero() };
            let j = map.jacobian(x[0], eta, x[sd]);
            a2 = j.a * j.a;
            b2 = j.b * j.b;
            c = j.c;
            d = j.d;
        }
        for ax in 0..sd {
            let scale = match ax {
                0 => a2,
                1 if self.map.as_ref().is_some_and(|m| m.moves_y()) => b2,
                _ => T::one(),
            };
            lhs -= self.k * scale * u.partial(x, ax, 2);
        }
        if self.time_dependent {
            lhs += self.rho_c * (u.partial(x, sd, 1) + c * u.partial(x, 0, 1));
            if sd > 1 {
                lhs += self.rho_c * d * u.partial(x, 1, 1);
            }
        }
        Some(lhs - self.source_at(x))
    }

    /// Largest residual at `n` seeded random points, relative to the largest
    /// source magnitude seen.
    pub fn residual_check(&self, n: usize, seed: u64) -> Result<f64, ProblemError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for _ in 0..n {
            let x: Vec<T> = self
                .domain
                .iter()
                .map(|&(a, b)| a + (b - a) * T::of(rng.gen::<f64>()))
                .collect();
            let Some(r) = self.residual_at(&x) else { return Ok(0.0) };
            worst = worst.max(r.to_f64_lossy().abs());
            scale = scale.max(self.source_at(&x).to_f64_lossy().abs());
        }
        Ok(worst / scale.max(1.0))
    }

    fn checked(self) -> Result<Self, ProblemError> {
        let tol = if std::mem::size_of::<T>() == 4 { 1e-4 } else { 1e-8 };
        let r = self.residual_check(200, 7)?;
        if r > tol {
            return Err(ProblemError::Residual(r));
        }
        Ok(self)
    }
}

/// `−Δu = b` on `[0,20]²` with `u = Σ_{k=1}^{7} exp(−π(x−c_k)² − π(y−c_k)²)`,
/// `c_k = 8.2 + 0.2k`.
pub fn poisson2d_gaussians<T: Scalar>() -> ManufacturedProblem<T> {
    let pi = T::of(PI);
    let mut exact = Vec::new();
    let mut source = Vec::new();
    for k in 1..=7 {
        let g = AxisFn::gaussian(pi, T::of(8.2 + 0.2 * k as f64));
        let neg = AxisFn { f: g.d2f.clone(), df: g.d2f.clone(), d2f: g.d2f.clone() };
        exact.push(SepTerm { coef: T::one(), factors: vec![g.clone(), g.clone()] });
        source.push(SepTerm { coef: -T::one(), factors: vec![neg.clone(), g.clone()] });
        source.push(SepTerm { coef: -T::one(), factors: vec![g, neg] });
    }
    ManufacturedProblem {
        name: "poisson2d".into(),
        domain: vec![(T::zero(), T::of(20.0)); 2],
        time_dependent: false,
        rho_c: T::one(),
        k: T::one(),
        boundary: vec![[BoundaryKind::Dirichlet; 2]; 2],
        exact: Some(SeparatedFn { terms: exact }),
        source: SeparatedFn { terms: source },
        map: None,
        offset: T::zero(),
    }
    .checked()
    .expect("poisson2d source")
}

fn value_only<T: Scalar>(f: Weight<T>) -> AxisFn<T> {
    AxisFn { f: f.clone(), df: f.clone(), d2f: f }
}

/// `u_t − u_xx = f` on `[−1,1]×[0,4]` with `u = exp(−100x²)(1 − exp(−5t))`.
pub fn heat1d<T: Scalar>() -> ManufacturedProblem<T> {
    let g = AxisFn::gaussian(T::of(100.0), T::zero());
    let e = AxisFn::envelope(T::of(-5.0));
    let exact = SeparatedFn { terms: vec![SepTerm { coef: T::one(), factors: vec![g.clone(), e.clone()] }] };
    let source = SeparatedFn {
        terms: vec![
            SepTerm { coef: T::one(), factors: vec![g.clone(), value_only(e.df.clone())] },
            SepTerm { coef: -T::one(), factors: vec![value_only(g.d2f.clone()), e] },
        ],
    };
    ManufacturedProblem {
        name: "heat1d".into(),
        domain: vec![(-T::one(), T::one()), (T::zero(), T::of(4.0))],
        time_dependent: true,
        rho_c: T::one(),
        k: T::one(),
        boundary: vec![[BoundaryKind::Dirichlet; 2], [BoundaryKind::Dirichlet, BoundaryKind::Neumann]],
        exact: Some(exact),
        source,
        map: None,
        offset: T::zero(),
    }
    .checked()
    .expect("heat1d source")
}

/// Settings of the moving Gaussian problem beyond `(v, R, D, k_s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MovingOptions<T> {
    pub duration: T,
    pub x_start: T,
    pub rho_c: T,
    pub k: T,
    /// Use `1 − exp(−5t)` instead of `1 − exp(5t)`.
    pub flip_envelope: bool,
    pub margin: T,
    /// Half-width of the box along `x` and `y`, and its depth.
    pub half_width: T,
    pub depth: T,
}

impl<T: Scalar> Default for MovingOptions<T> {
    fn default() -> Self {
        Self {
            duration: T::of(0.02),
            x_start: T::of(-5.0),
            rho_c: T::one(),
            k: T::one(),
            flip_envelope: false,
            margin: T::zero(),
            half_width: T::of(6.0),
            depth: T::of(6.0),
        }
    }
}

/// Moving Gaussian `exp(−3((x−x_c)²/R² + y²/R² + z²/D²))·(1 − exp(5t))`,
/// `x_c = x_start + v t`, solved in the frame that follows the source.
pub fn moving3d<T: Scalar>(v: T, r: T, d: T, k_s: T) -> Result<ManufacturedProblem<T>, ProblemError> {
    moving3d_with(v, r, d, k_s, MovingOptions::default())
}

pub fn moving3d_with<T: Scalar>(
    v: T,
    r: T,
    d: T,
    k_s: T,
    opt: MovingOptions<T>,
) -> Result<ManufacturedProblem<T>, ProblemError> {
    let w = opt.half_width;
    let x = AxisMap::tracking((-w, w), k_s, opt.x_start, v);
    let map = CoordinateMap::new(x, None, (T::zero(), opt.duration), opt.margin)?;
    let three = T::of(3.0);
    let gx = AxisFn::gaussian(three / (r * r), T::zero());
    let gy = gx.clone();
    let gz = AxisFn::gaussian(three / (d * d), T::zero());
    let lambda = if opt.flip_envelope { T::of(-5.0) } else { T::of(5.0) };
    let env = AxisFn::envelope(lambda);
    let f = |a: &AxisFn<T>| value_only(a.f.clone());
    let d1 = |a: &AxisFn<T>| value_only(a.df.clone());
    let d2 = |a: &AxisFn<T>| value_only(a.d2f.clone());
    let exact = SeparatedFn {
        terms: vec![SepTerm {
            coef: T::one(),
            factors: vec![gx.clone(), gy.clone(), gz.clone(), env.clone()],
        }],
    };
    let (rc, k) = (opt.rho_c, opt.k);
    let source = SeparatedFn {
        terms: vec![
            SepTerm { coef: rc, factors: vec![f(&gx), f(&gy), f(&gz), d1(&env)] },
            SepTerm { coef: -rc * v, factors: vec![d1(&gx), f(&gy), f(&gz), f(&env)] },
            SepTerm { coef: -k, factors: vec![d2(&gx), f(&gy), f(&gz), f(&env)] },
            SepTerm { coef: -k, factors: vec![f(&gx), d2(&gy), f(&gz), f(&env)] },
            SepTerm { coef: -k, factors: vec![f(&gx), f(&gy), d2(&gz), f(&env)] },
        ],
    };
    let neumann_top = [BoundaryKind::Dirichlet, BoundaryKind::Neumann];
    ManufacturedProblem {
        name: "moving3d".into(),
        domain: vec![(-w, w), (-w, w), (-opt.depth, T::zero()), (T::zero(), opt.duration)],
        time_dependent: true,
        rho_c: rc,
        k,
        boundary: vec![[BoundaryKind::Dirichlet; 2], [BoundaryKind::Dirichlet; 2], neumann_top, neumann_top],
        exact: Some(exact),
        source,
        map: Some(map),
        offset: T::zero(),
    }
    .checked()
}

/// Process and material parameters in their customary units: `k` W/(m K),
/// `rho` g/cm³, `c_p` J/(kg K), `v` mm/s, `r` and `d` µm, `p` W, `t_amb` K.
#[derive(Clone, Debug, PartialEq)]
pub struct LaserParams {
    pub k: f64,
    pub rho: f64,
    pub c_p: f64,
    pub v: f64,
    pub r: f64,
    pub d: f64,
    pub p: f64,
    pub eta: f64,
    pub t_amb: f64,
}

impl Default for LaserParams {
    /// Ti-6Al-4V single track.
    fn default() -> Self {
        Self { k: 22.0, rho: 4.27, c_p: 745.0, v: 500.0, r: 110.0, d: 50.0, p: 200.0, eta: 0.25, t_amb: 298.15 }
    }
}

impl LaserParams {
    pub fn validate(&self) -> Result<(), ProblemError> {
        let fields = [
            ("k", self.k),
            ("rho", self.rho),
            ("c_p", self.c_p),
            ("v", self.v),
            ("r", self.r),
            ("d", self.d),
            ("p", self.p),
            ("eta", self.eta),
            ("t_amb", self.t_amb),
        ];
        match fields.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            Some((name, _)) => Err(ProblemError::Laser(name)),
            None => Ok(()),
        }
    }

    /// Peak intensity `6√3 P η / (π^{3/2} R² D)` in W/µm³.
    pub fn intensity(&self) -> f64 {
        6.0 * 3f64.sqrt() * self.p * self.eta / (PI.powf(1.5) * self.r * self.r * self.d)
    }

    /// Conductivity in J/(ms mm K).
    pub fn k_mm_ms(&self) -> f64 {
        self.k * 1e-6
    }

    /// Volumetric heat capacity in J/(mm³ K).
    pub fn rho_c_mm(&self) -> f64 {
        self.rho * 1e-6 * self.c_p
    }

    pub fn v_mm_ms(&self) -> f64 {
        self.v * 1e-3
    }

    /// Intensity in J/(ms mm³).
    pub fn intensity_mm_ms(&self) -> f64 {
        self.intensity() * 1e6
    }
}

/// Laser source in W/µm³ at `x` (µm) and `t` (s) for a track starting at
/// `x_start` (µm) on the surface `y = z = 0`.
pub fn lpbf_source(params: &LaserParams, x_start: f64, x: [f64; 3], t: f64) -> f64 {
    let xc = x_start + params.v * 1e3 * t;
    let (r2, d2) = (params.r * params.r, params.d * params.d);
    params.intensity() * (-3.0 * ((x[0] - xc).powi(2) / r2 + x[1] * x[1] / r2 + x[2] * x[2] / d2)).exp()
}

/// Single-track LPBF in (mm, ms, K) for the temperature rise above ambient,
/// in the frame following the laser.
pub fn lpbf_problem<T: Scalar>(
    params: &LaserParams,
    duration_ms: T,
    x_start_mm: T,
    k_s: T,
    margin: T,
) -> Result<ManufacturedProblem<T>, ProblemError> {
    params.validate()?;
    let w = T::of(6.0);
    let v = T::of(params.v_mm_ms());
    let x = AxisMap::tracking((-w, w), k_s, x_start_mm, v);
    let map = CoordinateMap::new(x, None, (T::zero(), duration_ms), margin)?;
    let three = T::of(3.0);
    let (r, d) = (T::of(params.r * 1e-3), T::of(params.d * 1e-3));
    let gx = AxisFn::gaussian(three / (r * r), T::zero());
    let gz = AxisFn::gaussian(three / (d * d), T::zero());
    let source = SeparatedFn {
        terms: vec![SepTerm {
            coef: T::of(params.intensity_mm_ms()),
            factors: vec![gx.clone(), gx, gz, AxisFn::constant(T::one())],
        }],
    };
    let neumann_top = [BoundaryKind::Dirichlet, BoundaryKind::Neumann];
    Ok(ManufacturedProblem {
        name: "lpbf".into(),
        domain: vec![(-w, w), (-w, w), (-w, T::zero()), (T::zero(), duration_ms)],
        time_dependent: true,
        rho_c: T::of(params.rho_c_mm()),
        k: T::of(params.k_mm_ms()),
        boundary: vec![[BoundaryKind::Dirichlet; 2], [BoundaryKind::Dirichlet; 2], neumann_top, neumann_top],
        exact: None,
        source,
        map: Some(map),
        offset: T::of(params.t_amb),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: &AxisFn<f64>, xs: &[f64]) {
        for &x in xs {
            let h = 1e-4;
            let g = |x: f64| (f.f)(x);
            let d1 = (-g(x + 2.0 * h) + 8.0 * g(x + h) - 8.0 * g(x - h) + g(x - 2.0 * h)) / (12.0 * h);
            let d2 = ((f.f)(x + h) - 2.0 * (f.f)(x) + (f.f)(x - h)) / (h * h);
            let s1 = (f.df)(x).abs().max(1e-3);
            let s2 = (f.d2f)(x).abs().max(1.0);
            assert!(((f.df)(x) - d1).abs() / s1 < 1e-6, "first derivative at {x}");
            assert!(((f.d2f)(x) - d2).abs() / s2 < 1e-5, "second derivative at {x}");
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        fd_check(&AxisFn::gaussian(PI, 8.6), &[8.0, 8.6, 9.1, 10.0]);
        fd_check(&AxisFn::gaussian(100.0, 0.0), &[-0.1, 0.0, 0.05, 0.2]);
        fd_check(&AxisFn::envelope(-5.0), &[0.0, 0.3, 2.0]);
        fd_check(&AxisFn::envelope(5.0), &[0.0, 0.01, 0.02]);
    }

    #[test]
    fn poisson_values() {
        let p = poisson2d_gaussians::<f64>();
        let want: f64 = (1..=7).map(|k| (-2.0 * PI * (0.8 - 0.2 * k as f64).powi(2)).exp()).sum();
        assert!((p.exact_at(&[9.0, 9.0]).unwrap() - want).abs() < 1e-14);
        assert!(p.boundary_value(&[0.0, 3.0]).abs() < 1e-90);
        assert!(p.boundary_value(&[20.0, 9.0]).abs() < 1e-90);
        assert!(p.residual_check(1000, 1).unwrap() < 1e-10);
    }

    #[test]
    fn heat_values() {
        let p = heat1d::<f64>();
        for x in [-1.0, -0.3, 0.0, 0.7] {
            assert_eq!(p.exact_at(&[x, 0.0]).unwrap(), 0.0);
        }
        assert!((p.exact_at(&[0.0, 40.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(p.residual_check(1000, 2).unwrap() < 1e-10);
    }

    #[test]
    fn moving_values() {
        let p = moving3d(500.0f64, 0.11, 0.05, 0.8).unwrap();
        let map = p.map.as_ref().unwrap();
        let t = 0.007f64;
        // reference origin sits on the source centre
        assert!((map.map_point(0.0, 0.0, t).0 - (-5.0 + 500.0 * t)).abs() < 1e-12);
        let u = p.exact_at(&[0.0, 0.0, 0.0, t]).unwrap();
        assert!((u - (1.0 - (5.0 * t).exp())).abs() < 1e-15);
        assert_eq!(p.exact.as_ref().unwrap().partial(&[0.03, 0.01, 0.0, t], 2, 1), 0.0);
        assert!(p.residual_check(1000, 3).unwrap() < 1e-8);
        let opt = MovingOptions { duration: 0.03, ..MovingOptions::default() };
        assert!(matches!(moving3d_with(500.0, 0.11, 0.05, 0.8, opt), Err(ProblemError::Track(_))));
    }

    #[test]
    fn laser_intensity() {
        let p = LaserParams::default();
        let by_hand = 6.0 * 1.7320508075688772 * 200.0 * 0.25 / (5.568327996831708 * 110.0 * 110.0 * 50.0);
        assert!((p.intensity() - by_hand).abs() < 1e-18);
        assert!((lpbf_source(&p, -5000.0, [-5000.0, 0.0, 0.0], 0.0) - p.intensity()).abs() < 1e-20);
        let off = lpbf_source(&p, 0.0, [110.0 + 500.0, 0.0, 0.0], 1e-3);
        assert!((off - p.intensity() * (-3.0f64).exp()).abs() < 1e-18);
        assert!((p.rho_c_mm() - 3.18115e-3).abs() < 1e-8);
        assert!((p.intensity_mm_ms() - 154.25).abs() < 0.05);
        assert!(LaserParams { eta: 0.0, ..p }.validate().is_err());
    }
}
