//! Manufactured solutions on the rhombus `{a e1 + b e2 : 0 <= a, b <= L}`,
//! `e1 = (1, 0)`, `e2 = (1/2, sqrt(3)/2)`, i.e. the domain of
//! [`generate_equilateral_mesh`].
//!
//! Fields are products `A(a) B(b)` of one-dimensional profiles in the affine
//! coordinates. Profiles `sin^2(m pi z / L)` vanish with their derivative at
//! `z = 0, L`, so products of two of them have zero gradient on the whole
//! boundary: Neumann data and `u . n = 0` hold by construction.

use std::f64::consts::PI;
use std::sync::Arc;

use super::VerificationError;
use crate::mesh::{generate_equilateral_mesh, Mesh, MeshError, Point};
use crate::physics::{PhysicalData, ScalarFn, VectorFn, ViscosityModel};

const SQRT3: f64 = 1.732_050_807_568_877_2;

pub const CASE_IDS: [&str; 2] = ["default", "constant"];

/// Affine coordinates `(a, b)` of `x`.
pub fn rhombus_coordinates(x: Point) -> (f64, f64) {
    (x.x - x.y / SQRT3, 2.0 * x.y / SQRT3)
}

pub fn rhombus_point(a: f64, b: f64) -> Point {
    Point::new(a + 0.5 * b, 0.5 * SQRT3 * b)
}

#[derive(Debug, Clone, Copy)]
enum Profile {
    Sin2(f64),
    Cos(f64),
}

impl Profile {
    /// Value, first and second derivative at `z`.
    fn eval(self, z: f64, side: f64) -> [f64; 3] {
        match self {
            Profile::Sin2(m) => {
                let w = m * PI / side;
                let (s2, c2) = (2.0 * w * z).sin_cos();
                [(w * z).sin().powi(2), w * s2, 2.0 * w * w * c2]
            }
            Profile::Cos(m) => {
                let w = m * PI / side;
                let (s, c) = (w * z).sin_cos();
                [c, -w * s, -w * w * c]
            }
        }
    }
}

/// Value, gradient and Laplacian of a field at a point.
#[derive(Debug, Clone, Copy, Default)]
struct Jet {
    v: f64,
    grad: Point,
    lap: f64,
}

impl Jet {
    fn scale(self, f: f64) -> Jet {
        Jet {
            v: f * self.v,
            grad: f * self.grad,
            lap: f * self.lap,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Separable {
    a: Profile,
    b: Profile,
}

impl Separable {
    fn jet(self, x: Point, side: f64) -> Jet {
        let (a, b) = rhombus_coordinates(x);
        let [fa, da, dda] = self.a.eval(a, side);
        let [fb, db, ddb] = self.b.eval(b, side);
        let (ga, gb) = (da * fb, fa * db);
        // d/dx = d/da, d/dy = (-d/da + 2 d/db) / sqrt(3).
        Jet {
            v: fa * fb,
            grad: Point::new(ga, (2.0 * gb - ga) / SQRT3),
            lap: 4.0 / 3.0 * (dda * fb - da * db + fa * ddb),
        }
    }
}

/// The default trigonometric solution.
#[derive(Debug, Clone, Copy)]
struct Trig {
    side: f64,
    horizon: f64,
    d_c: f64,
    d_theta: f64,
    lambda: f64,
    theta_ref: f64,
    viscosity: ViscosityModel,
}

const BUMP: Separable = Separable {
    a: Profile::Sin2(1.0),
    b: Profile::Sin2(1.0),
};
const BUMP2: Separable = Separable {
    a: Profile::Sin2(1.0),
    b: Profile::Sin2(2.0),
};
const WAVE: Separable = Separable {
    a: Profile::Cos(1.0),
    b: Profile::Cos(1.0),
};

impl Trig {
    /// `A(t) = (1 + t/T)/2` and `A'`.
    fn time_factor(&self, t: f64) -> (f64, f64) {
        (0.5 * (1.0 + t / self.horizon), 0.5 / self.horizon)
    }

    /// `(jet, d/dt)` of `c`.
    fn c(&self, x: Point, t: f64) -> (Jet, f64) {
        let (a, da) = self.time_factor(t);
        let j = BUMP.jet(x, self.side);
        let mut out = j.scale(0.4 * a);
        out.v += 0.3;
        (out, 0.4 * da * j.v)
    }

    fn theta(&self, x: Point, t: f64) -> (Jet, f64) {
        let (a, da) = self.time_factor(t);
        let j = BUMP2.jet(x, self.side);
        let mut out = j.scale(0.3 * a);
        out.v += 1.0;
        (out, 0.3 * da * j.v)
    }

    /// Zero mean at every time: the integral of `cos(pi a / L)` over `[0, L]` vanishes.
    fn p(&self, x: Point, t: f64) -> Jet {
        WAVE.jet(x, self.side).scale(0.5 * self.time_factor(t).0)
    }

    /// `u = grad chi + curl psi` and `div u`.
    fn u(&self, x: Point, t: f64) -> (Point, f64) {
        let chi = BUMP.jet(x, self.side).scale(0.1 * self.time_factor(t).0);
        let psi = BUMP.jet(x, self.side).scale(0.1);
        let curl = Point::new(psi.grad.y, -psi.grad.x);
        (chi.grad + curl, chi.lap)
    }

    fn kappa(&self, x: Point, t: f64) -> f64 {
        self.viscosity.kappa(self.c(x, t).0.v, self.theta(x, t).0.v).unwrap_or(f64::NAN)
    }

    fn f(&self, x: Point, t: f64) -> Point {
        self.u(x, t).0 + self.kappa(x, t) * self.p(x, t).grad
    }

    fn s_c(&self, x: Point, t: f64) -> f64 {
        let (c, dt) = self.c(x, t);
        let (u, s) = self.u(x, t);
        // dt c + div(c u) - D lap c + s c + lambda c
        dt + u.dot(c.grad) + 2.0 * s * c.v - self.d_c * c.lap + self.lambda * c.v
    }

    fn s_theta(&self, x: Point, t: f64) -> f64 {
        let (th, dt) = self.theta(x, t);
        let (u, s) = self.u(x, t);
        -(dt + u.dot(th.grad) + s * th.v - self.d_theta * th.lap) - s * (th.v - self.theta_ref)
    }
}

/// Value, gradient and Laplacian of `sin^2(pi a) sin^2(pi b) + sin^2(pi a) sin^2(2 pi b) / 2`
/// on the unit rhombus; the gradient vanishes on the boundary.
pub(super) fn neumann_test_function(x: Point) -> (f64, Point, f64) {
    let j1 = BUMP.jet(x, 1.0);
    let j2 = BUMP2.jet(x, 1.0).scale(0.5);
    (j1.v + j2.v, j1.grad + j2.grad, j1.lap + j2.lap)
}

/// `cos(pi a) cos(pi b) + x / 2` and its gradient: smooth, no boundary condition.
pub(super) fn smooth_test_function(x: Point) -> (f64, Point) {
    let j = WAVE.jet(x, 1.0);
    (j.v + 0.5 * x.x, j.grad + Point::new(0.5, 0.0))
}

/// A vector field vanishing on the boundary of the unit rhombus, with a
/// nonzero divergence.
pub(super) fn test_flow(x: Point) -> Point {
    let chi = BUMP.jet(x, 1.0);
    let psi = BUMP2.jet(x, 1.0);
    chi.grad + Point::new(psi.grad.y, -psi.grad.x)
}

/// A manufactured problem: data with derived sources plus the exact fields.
#[derive(Clone)]
pub struct MmsCase {
    pub name: String,
    pub data: PhysicalData,
    /// Side of the rhombus.
    pub side: f64,
    pub final_time: f64,
    pub c: ScalarFn,
    pub theta: ScalarFn,
    pub p: ScalarFn,
    pub grad_p: VectorFn,
    pub u: VectorFn,
}

impl std::fmt::Debug for MmsCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MmsCase")
            .field("name", &self.name)
            .field("side", &self.side)
            .field("final_time", &self.final_time)
            .field("data", &self.data)
            .finish_non_exhaustive()
    }
}

impl MmsCase {
    /// Rhombus mesh with `2 n^2` triangles.
    pub fn mesh(&self, n: usize) -> Result<Mesh, MeshError> {
        generate_equilateral_mesh(n, n, self.side / n as f64)
    }
}

/// Coefficients used by the convergence study unless overridden.
pub fn mms_template() -> PhysicalData {
    PhysicalData {
        d_c: 0.1,
        d_theta: 0.2,
        lambda: 0.5,
        theta_star: 1.0,
        theta_minus: 0.5,
        theta_plus: 2.0,
        viscosity: ViscosityModel {
            mu0: 1.0,
            mobility_ratio: 2.0,
            theta_star: 1.0,
            permeability: 1.0,
        },
        ..PhysicalData::default()
    }
}

/// Builds a manufactured case on the unit rhombus over `[0, final_time]`.
/// Coefficients come from `template`; its source, force and initial-data
/// functions are replaced.
pub fn build_mms_case(id: &str, template: &PhysicalData, final_time: f64) -> Result<MmsCase, VerificationError> {
    let side = 1.0;
    match id {
        "default" => {
            let trig = Trig {
                side,
                horizon: final_time,
                d_c: template.d_c,
                d_theta: template.d_theta,
                lambda: template.lambda,
                theta_ref: template.theta_star,
                viscosity: template.viscosity,
            };
            let data = PhysicalData {
                s: Arc::new(move |x, t| trig.u(x, t).1),
                s_c: Arc::new(move |x, t| trig.s_c(x, t)),
                s_theta: Arc::new(move |x, t| trig.s_theta(x, t)),
                f: Arc::new(move |x, t| trig.f(x, t)),
                c0: Arc::new(move |x, _| trig.c(x, 0.0).0.v),
                theta0: Arc::new(move |x, _| trig.theta(x, 0.0).0.v),
                time_dependent_sources: true,
                source_mean_correction: true,
                extra_species: Vec::new(),
                chain: None,
                ..template.clone()
            };
            Ok(MmsCase {
                name: id.to_string(),
                data,
                side,
                final_time,
                c: Arc::new(move |x, t| trig.c(x, t).0.v),
                theta: Arc::new(move |x, t| trig.theta(x, t).0.v),
                p: Arc::new(move |x, t| trig.p(x, t).v),
                grad_p: Arc::new(move |x, t| trig.p(x, t).grad),
                u: Arc::new(move |x, t| trig.u(x, t).0),
            })
        }
        "constant" => {
            let (c, theta, lambda) = (0.4, 1.2, template.lambda);
            let data = PhysicalData {
                s: Arc::new(|_, _| 0.0),
                s_c: Arc::new(move |_, _| lambda * c),
                s_theta: Arc::new(|_, _| 0.0),
                f: Arc::new(|_, _| Point::default()),
                c0: Arc::new(move |_, _| c),
                theta0: Arc::new(move |_, _| theta),
                time_dependent_sources: true,
                source_mean_correction: false,
                extra_species: Vec::new(),
                chain: None,
                ..template.clone()
            };
            Ok(MmsCase {
                name: id.to_string(),
                data,
                side,
                final_time,
                c: Arc::new(move |_, _| c),
                theta: Arc::new(move |_, _| theta),
                p: Arc::new(|_, _| 0.0),
                grad_p: Arc::new(|_, _| Point::default()),
                u: Arc::new(|_, _| Point::default()),
            })
        }
        other => Err(VerificationError::UnknownCase(other.to_string())),
    }
}

/// Central difference of `g` at 0 with step `h`, refined by two Richardson
/// extrapolations (error `O(h^6)`).
fn richardson(g: impl Fn(f64) -> f64, h: f64) -> f64 {
    let r1 = |h: f64| (4.0 * g(h / 2.0) - g(h)) / 3.0;
    (16.0 * r1(h / 2.0) - r1(h)) / 15.0
}

fn d1(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    richardson(|h| (f(h) - f(-h)) / (2.0 * h), h)
}

fn d2(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    let f0 = f(0.0);
    richardson(|h| (f(h) - 2.0 * f0 + f(-h)) / (h * h), h)
}

/// Residuals of the concentration equation, the temperature equation,
/// `div u = s` and Darcy's law at `(x, t)`, all derivatives taken by
/// extrapolated finite differences of the exact fields.
pub fn fd_residuals(case: &MmsCase, x: Point, t: f64) -> [f64; 4] {
    let h = 0.005 * case.side;
    let ht = 0.005 * case.final_time;
    let data = &case.data;
    let ex = Point::new(1.0, 0.0);
    let ey = Point::new(0.0, 1.0);
    let along = |f: &ScalarFn, dir: Point| {
        let f = f.clone();
        move |d: f64| f(x + d * dir, t)
    };
    let div_flux = |q: &ScalarFn| {
        let (q, u) = (q.clone(), case.u.clone());
        let fx = |d: f64| {
            let y = x + d * ex;
            q(y, t) * u(y, t).x
        };
        let fy = |d: f64| {
            let y = x + d * ey;
            q(y, t) * u(y, t).y
        };
        d1(fx, h) + d1(fy, h)
    };
    let lap = |q: &ScalarFn| d2(along(q, ex), h) + d2(along(q, ey), h);
    let dt = |q: &ScalarFn| {
        let q = q.clone();
        d1(move |d| q(x, t + d), ht)
    };
    let s = (data.s)(x, t);

    let c = (case.c)(x, t);
    let res_c = dt(&case.c) + div_flux(&case.c) - data.d_c * lap(&case.c) - ((data.s_c)(x, t) - s * c - data.lambda * c);

    let th = (case.theta)(x, t);
    let res_t =
        dt(&case.theta) + div_flux(&case.theta) - data.d_theta * lap(&case.theta) - (-(data.s_theta)(x, t) - s * (th - data.theta_star));

    let u = case.u.clone();
    let div_u = d1(|d| u(x + d * ex, t).x, h) + d1(|d| u(x + d * ey, t).y, h);
    let res_div = div_u - s;

    let grad_p = Point::new(d1(along(&case.p, ex), h), d1(along(&case.p, ey), h));
    let kappa = data.viscosity.kappa(c, th).unwrap_or(f64::NAN);
    let res_darcy = ((case.u)(x, t) + kappa * grad_p - (data.f)(x, t)).norm();
    [res_c, res_t, res_div, res_darcy]
}
