//! Piecewise-linear coordinate maps that hold a moving source fixed, and
//! the coefficients of the pulled-back space-time heat operator.

use std::sync::Arc;

use thiserror::Error;

use crate::assembly::{AxisFactor, FormTerm, SeparableForm, Weight};
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("moving window leaves the domain (with margin {margin}) at t = {t}")]
    WindowExit { t: f64, margin: f64 },
    #[error("degenerate window or reference interval")]
    Degenerate,
    #[error("reference point {0} outside the reference interval")]
    Outside(f64),
}

/// Three-branch map of one axis: the reference intervals
/// `[ξ0, ξm] [ξm, ξM] [ξM, ξ1]` go linearly onto
/// `[x0, xm(t)] [xm(t), xM(t)] [xM(t), x1]` with `xm, xM` moving at speed `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisMap<T> {
    pub reference: (T, T),
    pub ref_window: (T, T),
    pub outer: (T, T),
    /// Physical window at `t = 0`.
    pub window0: (T, T),
    pub v: T,
}

impl<T: Scalar> AxisMap<T> {
    /// Map whose window `[x_c(t) − k_s, x_c(t) + k_s]` follows the source
    /// centre `x_c(t) = x_start + v t`; reference and outer intervals coincide.
    pub fn tracking(outer: (T, T), k_s: T, x_start: T, v: T) -> Self {
        Self {
            reference: outer,
            ref_window: (-k_s, k_s),
            outer,
            window0: (x_start - k_s, x_start + k_s),
            v,
        }
    }

    pub fn window(&self, t: T) -> (T, T) {
        (self.window0.0 + self.v * t, self.window0.1 + self.v * t)
    }

    /// Branch 0, 1 or 2 of a reference coordinate.
    pub fn branch(&self, xi: T) -> usize {
        if xi < self.ref_window.0 {
            0
        } else if xi < self.ref_window.1 {
            1
        } else {
            2
        }
    }

    /// Reference interval, physical interval and end velocities of a branch.
    fn pieces(&self, b: usize, t: T) -> ((T, T), (T, T), (T, T)) {
        let (xm, xmm) = self.window(t);
        let z = T::zero();
        match b {
            0 => ((self.reference.0, self.ref_window.0), (self.outer.0, xm), (z, self.v)),
            1 => (self.ref_window, (xm, xmm), (self.v, self.v)),
            _ => ((self.ref_window.1, self.reference.1), (xmm, self.outer.1), (self.v, z)),
        }
    }

    pub fn map(&self, xi: T, t: T) -> T {
        let ((ea, eb), (xa, xb), _) = self.pieces(self.branch(xi), t);
        xb * (xi - ea) / (eb - ea) + xa * (eb - xi) / (eb - ea)
    }

    pub fn inverse(&self, x: T, t: T) -> T {
        let (xm, xmm) = self.window(t);
        let b = if x < xm {
            0
        } else if x < xmm {
            1
        } else {
            2
        };
        let ((ea, eb), (xa, xb), _) = self.pieces(b, t);
        ea + (x - xa) * (eb - ea) / (xb - xa)
    }

    /// `A = ∂ξ/∂x` and `C = ∂ξ/∂t` at `(ξ, t)`.
    pub fn derivatives(&self, xi: T, t: T) -> (T, T) {
        let ((ea, eb), (xa, xb), (va, vb)) = self.pieces(self.branch(xi), t);
        let a = (eb - ea) / (xb - xa);
        let c = -(vb * (xi - ea) + va * (eb - xi)) / (xb - xa);
        (a, c)
    }

    /// `C/A`, which is independent of `t` within a branch.
    fn c_over_a(&self, b: usize, xi: T) -> T {
        let ((ea, eb), _, (va, vb)) = self.pieces(b, T::zero());
        -(vb * (xi - ea) + va * (eb - xi)) / (eb - ea)
    }

    fn a_of(&self, b: usize, t: T) -> T {
        let ((ea, eb), (xa, xb), _) = self.pieces(b, t);
        (eb - ea) / (xb - xa)
    }

    fn validate(&self, times: &[T], margin: T) -> Result<(), MapError> {
        let (r0, r1) = self.reference;
        let (w0, w1) = self.ref_window;
        if !(r0 < w0 && w0 < w1 && w1 < r1) || !(self.window0.0 < self.window0.1) {
            return Err(MapError::Degenerate);
        }
        for &t in times {
            let (a, b) = self.window(t);
            if a < self.outer.0 + margin || b > self.outer.1 - margin {
                return Err(MapError::WindowExit { t: t.to_f64_lossy(), margin: margin.to_f64_lossy() });
            }
        }
        Ok(())
    }
}

/// Entries of `∂(ξ,η,τ)/∂(x,y,t)` and the determinant of the forward map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapJacobian<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
    pub det: T,
}

/// Map of the `x` axis and optionally the `y` axis (nine subdomains); other
/// axes and time (`τ = t`) are untouched.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordinateMap<T> {
    pub x: AxisMap<T>,
    pub y: Option<AxisMap<T>>,
    pub time: (T, T),
}

impl<T: Scalar> CoordinateMap<T> {
    /// Validates that the windows stay at least `margin` inside the outer
    /// box over the whole time interval.
    pub fn new(x: AxisMap<T>, y: Option<AxisMap<T>>, time: (T, T), margin: T) -> Result<Self, MapError> {
        let times = [time.0, time.1];
        x.validate(&times, margin)?;
        if let Some(y) = &y {
            y.validate(&times, margin)?;
        }
        Ok(Self { x, y, time })
    }

    /// Map that does nothing: zero speed, window equal on both sides.
    pub fn identity(outer: (T, T), time: (T, T)) -> Self {
        let w = (outer.1 - outer.0) / T::of(4.0);
        let win = (outer.0 + w, outer.1 - w);
        let x = AxisMap { reference: outer, ref_window: win, outer, window0: win, v: T::zero() };
        Self { x, y: None, time }
    }

    pub fn moves_y(&self) -> bool {
        self.y.is_some()
    }

    pub fn map_point(&self, xi: T, eta: T, t: T) -> (T, T) {
        let y = self.y.as_ref().map_or(eta, |m| m.map(eta, t));
        (self.x.map(xi, t), y)
    }

    pub fn inverse_point(&self, x: T, y: T, t: T) -> (T, T) {
        let eta = self.y.as_ref().map_or(y, |m| m.inverse(y, t));
        (self.x.inverse(x, t), eta)
    }

    pub fn jacobian(&self, xi: T, eta: T, t: T) -> MapJacobian<T> {
        let (a, c) = self.x.derivatives(xi, t);
        let (b, d) = self.y.as_ref().map_or((T::one(), T::zero()), |m| m.derivatives(eta, t));
        MapJacobian { a, b, c, d, det: T::one() / (a * b) }
    }
}

pub fn map_point<T: Scalar>(map: &CoordinateMap<T>, xi: T, eta: T, t: T) -> (T, T) {
    map.map_point(xi, eta, t)
}

pub fn jacobian<T: Scalar>(map: &CoordinateMap<T>, xi: T, eta: T, t: T) -> MapJacobian<T> {
    map.jacobian(xi, eta, t)
}

/// Coefficient factors of one subdomain: each is a function of a single
/// reference coordinate, valid where `ξ` (and `η`) lie in the branch.
#[derive(Clone)]
pub struct BranchCoefficients<T> {
    pub x_branch: usize,
    pub y_branch: usize,
    /// `A(t)`, `B(t)`.
    pub a: Weight<T>,
    pub b: Weight<T>,
    /// `C·detJ·B = C/A` as a function of `ξ` and `D/B` as a function of `η`.
    pub c_over_a: Weight<T>,
    pub d_over_b: Weight<T>,
    /// Indicators of the branch along `ξ` and `η`.
    pub chi_x: Weight<T>,
    pub chi_y: Weight<T>,
}

pub fn transformed_coefficients<T: Scalar>(map: &CoordinateMap<T>) -> Vec<BranchCoefficients<T>> {
    let ybranches: Vec<usize> = if map.y.is_some() { vec![0, 1, 2] } else { vec![1] };
    let mut out = Vec::new();
    for bx in 0..3 {
        for &by in &ybranches {
            let mx = map.x.clone();
            let mx2 = map.x.clone();
            let mx3 = map.x.clone();
            let my = map.y.clone();
            let my2 = map.y.clone();
            let my3 = map.y.clone();
            out.push(BranchCoefficients {
                x_branch: bx,
                y_branch: by,
                a: Arc::new(move |t| mx.a_of(bx, t)),
                b: Arc::new(move |t| my.as_ref().map_or(T::one(), |m| m.a_of(by, t))),
                c_over_a: Arc::new(move |xi| mx2.c_over_a(bx, xi)),
                d_over_b: Arc::new(move |eta| my2.as_ref().map_or(T::zero(), |m| m.c_over_a(by, eta))),
                chi_x: Arc::new(move |xi| if mx3.branch(xi) == bx { T::one() } else { T::zero() }),
                chi_y: Arc::new(move |eta| match &my3 {
                    Some(m) if m.branch(eta) != by => T::zero(),
                    _ => T::one(),
                }),
            });
        }
    }
    out
}

/// Pulled-back form `∫∫ (ρc w (C u_ξ + D u_η + u_τ) + k A² w_ξ u_ξ
/// + k B² w_η u_η + k Σ w_z u_z) detJ` on axes `[ξ, (η), z…, τ]`.
pub fn transformed_form<T: Scalar>(map: &CoordinateMap<T>, spatial: usize, rho_c: T, k: T) -> SeparableForm<T> {
    let dim = spatial + 1;
    let td = spatial;
    let mut terms = Vec::new();
    let yaxis = map.y.is_some();
    for bc in transformed_coefficients(map) {
        let base = |d: usize| -> AxisFactor<T> {
            if d == 0 {
                AxisFactor::mass().weighted(bc.chi_x.clone())
            } else if d == 1 && yaxis {
                AxisFactor::mass().weighted(bc.chi_y.clone())
            } else {
                AxisFactor::mass()
            }
        };
        let (a, b) = (bc.a.clone(), bc.b.clone());
        let inv_ab: Weight<T> = {
            let (a, b) = (a.clone(), b.clone());
            Arc::new(move |t| T::one() / (a(t) * b(t)))
        };
        let mut push = |coef: T, special: Vec<(usize, AxisFactor<T>)>| {
            let mut factors: Vec<AxisFactor<T>> = (0..dim).map(base).collect();
            for (d, f) in special {
                factors[d] = f;
            }
            terms.push(FormTerm { coef, factors });
        };
        // ρc w u_τ detJ
        push(rho_c, vec![(td, AxisFactor::advection().weighted(inv_ab.clone()))]);
        // ρc w (C/A) u_ξ / B
        let inv_b: Weight<T> = {
            let b = b.clone();
            Arc::new(move |t| T::one() / b(t))
        };
        let chi_x = bc.chi_x.clone();
        let coa = bc.c_over_a.clone();
        push(
            rho_c,
            vec![
                (0, AxisFactor::advection().weighted(Arc::new(move |xi| chi_x(xi) * coa(xi)))),
                (td, AxisFactor::mass().weighted(inv_b.clone())),
            ],
        );
        // k A/B w_ξ u_ξ
        let a_over_b: Weight<T> = {
            let (a, b) = (a.clone(), b.clone());
            Arc::new(move |t| a(t) / b(t))
        };
        push(
            k,
            vec![
                (0, AxisFactor::stiffness().weighted(bc.chi_x.clone())),
                (td, AxisFactor::mass().weighted(a_over_b)),
            ],
        );
        if yaxis {
            let inv_a: Weight<T> = {
                let a = a.clone();
                Arc::new(move |t| T::one() / a(t))
            };
            let chi_y = bc.chi_y.clone();
            let dob = bc.d_over_b.clone();
            push(
                rho_c,
                vec![
                    (1, AxisFactor::advection().weighted(Arc::new(move |e| chi_y(e) * dob(e)))),
                    (td, AxisFactor::mass().weighted(inv_a)),
                ],
            );
            let b_over_a: Weight<T> = {
                let (a, b) = (a.clone(), b.clone());
                Arc::new(move |t| b(t) / a(t))
            };
            push(
                k,
                vec![
                    (1, AxisFactor::stiffness().weighted(bc.chi_y.clone())),
                    (td, AxisFactor::mass().weighted(b_over_a)),
                ],
            );
        }
        let first_plain = if yaxis { 2 } else { 1 };
        for d in first_plain..spatial {
            push(k, vec![(d, AxisFactor::stiffness()), (td, AxisFactor::mass().weighted(inv_ab.clone()))]);
        }
    }
    let mut form = SeparableForm::new(terms);
    form.breaks[0] = vec![map.x.ref_window.0, map.x.ref_window.1];
    if let Some(y) = &map.y {
        form.breaks[1] = vec![y.ref_window.0, y.ref_window.1];
    }
    form
}
