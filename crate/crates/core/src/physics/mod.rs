//! Physical closures: mobility, the decay-chain transform, problem data and
//! the data conditions under which the discrete maximum principle holds.

mod chain;
mod viscosity;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use chain::DecayChain;
pub use viscosity::ViscosityModel;

use crate::fields::{project_p0_mean, FieldP0, L2Field};
use crate::mesh::{Mesh, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),
    #[error("decay rates of species {first} and {second} coincide")]
    DuplicateDecayRates { first: usize, second: usize },
    #[error("decay rate of species {species} must be positive and finite, got {value}")]
    InvalidDecayRate { species: usize, value: f64 },
    #[error("branching ratio of species {species} is invalid: {value} (the first species has no parent)")]
    InvalidBranching { species: usize, value: f64 },
    #[error("chain has {lambdas} decay rates but {branching} branching ratios")]
    ChainLengthMismatch { lambdas: usize, branching: usize },
    #[error("decay chain is empty")]
    EmptyChain,
    #[error("parameter {name} is invalid: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("{0}")]
    Inconsistent(String),
}

pub type ScalarFn = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point, f64) -> Point + Send + Sync>;

pub fn constant_scalar(v: f64) -> ScalarFn {
    Arc::new(move |_, _| v)
}

pub fn constant_vector(v: Point) -> VectorFn {
    Arc::new(move |_, _| v)
}

/// A passively transported species of a decay chain, already in the
/// transformed variables.
#[derive(Clone)]
pub struct ExtraSpecies {
    pub lambda: f64,
    pub s_c: ScalarFn,
    pub c0: ScalarFn,
}

/// Coefficients, sources and initial data. Functions take `(x, t)`.
#[derive(Clone)]
pub struct PhysicalData {
    pub d_c: f64,
    pub d_theta: f64,
    pub lambda: f64,
    pub theta_star: f64,
    pub theta_minus: f64,
    pub theta_plus: f64,
    pub kappa_inf: f64,
    pub viscosity: ViscosityModel,
    /// Fluid source; `div u = s`.
    pub s: ScalarFn,
    pub s_c: ScalarFn,
    pub s_theta: ScalarFn,
    pub f: VectorFn,
    pub c0: ScalarFn,
    pub theta0: ScalarFn,
    /// When false, sources are evaluated once at `t = 0`.
    pub time_dependent_sources: bool,
    /// Subtract the mean of the projected `s`. Used when `s` is known to
    /// have zero mean analytically but its quadrature does not.
    pub source_mean_correction: bool,
    pub extra_species: Vec<ExtraSpecies>,
    pub chain: Option<DecayChain>,
}

impl fmt::Debug for PhysicalData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhysicalData")
            .field("d_c", &self.d_c)
            .field("d_theta", &self.d_theta)
            .field("lambda", &self.lambda)
            .field("theta_star", &self.theta_star)
            .field("theta_minus", &self.theta_minus)
            .field("theta_plus", &self.theta_plus)
            .field("kappa_inf", &self.kappa_inf)
            .field("viscosity", &self.viscosity)
            .field("extra_species", &self.extra_species.len())
            .finish_non_exhaustive()
    }
}

impl Default for PhysicalData {
    /// Unit coefficients, zero sources, `c0 = 0.5`, `theta0 = theta* = 1`.
    fn default() -> Self {
        PhysicalData {
            d_c: 1.0,
            d_theta: 1.0,
            lambda: 0.0,
            theta_star: 1.0,
            theta_minus: 0.5,
            theta_plus: 2.0,
            kappa_inf: 1e-8,
            viscosity: ViscosityModel::default(),
            s: constant_scalar(0.0),
            s_c: constant_scalar(0.0),
            s_theta: constant_scalar(0.0),
            f: constant_vector(Point::default()),
            c0: constant_scalar(0.5),
            theta0: constant_scalar(1.0),
            time_dependent_sources: false,
            source_mean_correction: false,
            extra_species: Vec::new(),
            chain: None,
        }
    }
}

impl PhysicalData {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        let positive = [
            ("d_c", self.d_c),
            ("d_theta", self.d_theta),
            ("theta_minus", self.theta_minus),
            ("theta_star", self.theta_star),
            ("kappa_inf", self.kappa_inf),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(PhysicsError::InvalidParameter { name, value });
            }
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(PhysicsError::InvalidParameter {
                name: "lambda",
                value: self.lambda,
            });
        }
        if !(self.theta_plus >= self.theta_minus && self.theta_plus.is_finite()) {
            return Err(PhysicsError::InvalidParameter {
                name: "theta_plus",
                value: self.theta_plus,
            });
        }
        self.viscosity.validate()?;
        if self.viscosity.theta_star != self.theta_star {
            return Err(PhysicsError::Inconsistent(format!(
                "viscosity reference temperature {} differs from theta* = {}",
                self.viscosity.theta_star, self.theta_star
            )));
        }
        if let Some(chain) = &self.chain {
            if chain.len() != self.extra_species.len() + 1 {
                return Err(PhysicsError::Inconsistent(format!(
                    "chain has {} species but {} are transported",
                    chain.len(),
                    self.extra_species.len() + 1
                )));
            }
        }
        Ok(())
    }

    /// Installs a decay chain. `sources[i]` and `initial[i]` are given for
    /// the physical species; the transport runs on the transformed ones.
    /// The first species is the coupled one (`c`, rate `lambda_1`).
    pub fn with_chain(mut self, chain: DecayChain, sources: Vec<ScalarFn>, initial: Vec<ScalarFn>) -> Result<Self, PhysicsError> {
        if sources.len() != chain.len() || initial.len() != chain.len() {
            return Err(PhysicsError::Inconsistent(format!(
                "chain has {} species, got {} sources and {} initial fields",
                chain.len(),
                sources.len(),
                initial.len()
            )));
        }
        let combine = |row: Vec<f64>, funcs: &[ScalarFn]| -> ScalarFn {
            let funcs = funcs.to_vec();
            Arc::new(move |x, t| row.iter().zip(&funcs).map(|(w, f)| if *w == 0.0 { 0.0 } else { w * f(x, t) }).sum())
        };
        let t = chain.transform_matrix().to_vec();
        self.lambda = chain.lambdas()[0];
        self.s_c = combine(t[0].clone(), &sources);
        self.c0 = combine(t[0].clone(), &initial);
        self.extra_species = (1..chain.len())
            .map(|i| ExtraSpecies {
                lambda: chain.lambdas()[i],
                s_c: combine(t[i].clone(), &sources),
                c0: combine(t[i].clone(), &initial),
            })
            .collect();
        self.chain = Some(chain);
        Ok(self)
    }

    /// Cell averages of `s`, `s_c`, `s_theta` at time `t` (or at 0 when
    /// sources are time independent).
    pub fn project_sources(&self, mesh: &Mesh, t: f64) -> SourceFields {
        let t = if self.time_dependent_sources { t } else { 0.0 };
        let mut s = project_p0_mean(mesh, |x| (self.s)(x, t));
        if self.source_mean_correction {
            let mean = s.mean(mesh);
            s = s.map(|v| v - mean);
        }
        SourceFields {
            s,
            s_c: project_p0_mean(mesh, |x| (self.s_c)(x, t)),
            s_theta: project_p0_mean(mesh, |x| (self.s_theta)(x, t)),
            extra_s_c: self
                .extra_species
                .iter()
                .map(|sp| project_p0_mean(mesh, |x| (sp.s_c)(x, t)))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceFields {
    pub s: FieldP0,
    pub s_c: FieldP0,
    pub s_theta: FieldP0,
    pub extra_s_c: Vec<FieldP0>,
}

/// Mobility field together with clamp statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaEval {
    pub kappa: FieldP0,
    pub clamped_c: usize,
    pub clamped_theta: usize,
    pub floored: usize,
}

/// `kappa_K = K / mu(clamp(c_K), clamp(theta_K))`, floored at `kappa_inf`.
///
/// `c` is clamped to `[0, 1]` and `theta` to `[theta-/2, 2 theta+]`; the
/// counters record how many triangles needed each adjustment.
pub fn kappa_eval(data: &PhysicalData, c: &FieldP0, theta: &FieldP0) -> Result<KappaEval, PhysicsError> {
    if let Some(&bad) = theta.values.iter().find(|&&t| !(t > 0.0)) {
        return Err(PhysicsError::NonPositiveTemperature(bad));
    }
    let (lo, hi) = (0.5 * data.theta_minus, 2.0 * data.theta_plus);
    let mut out = KappaEval {
        kappa: FieldP0 {
            values: Vec::with_capacity(c.values.len()),
        },
        clamped_c: 0,
        clamped_theta: 0,
        floored: 0,
    };
    for (&ck, &tk) in c.values.iter().zip(&theta.values) {
        let a = ck.clamp(0.0, 1.0);
        let th = tk.clamp(lo, hi);
        out.clamped_c += usize::from(a != ck);
        out.clamped_theta += usize::from(th != tk);
        let mut k = data.viscosity.kappa(a, th)?;
        if !(k >= data.kappa_inf) {
            k = data.kappa_inf;
            out.floored += 1;
        }
        out.kappa.values.push(k);
    }
    if out.floored > 0 {
        log::warn!("mobility floored at kappa_inf on {} triangles", out.floored);
    }
    Ok(out)
}

/// Per-triangle outcome of the data conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConditionFlags {
    /// `s_c >= 0`.
    pub c_lower: bool,
    /// `2 s + lambda >= s_c`.
    pub c_upper: bool,
    /// `2 (theta- - theta*) s + s_theta <= 0`.
    pub theta_lower: bool,
    /// `2 (theta+ - theta*) s + s_theta >= 0`.
    pub theta_upper: bool,
    /// `s_theta + (2 theta- - theta*) s <= 0` and
    /// `s_theta + (2 theta+ - theta*) s >= 0`: what the discrete argument
    /// actually uses for the temperature bounds. Differs from the two
    /// flags above only where `s != 0`.
    pub theta_derived: bool,
    /// `0 <= c0 <= 1`.
    pub initial_c: bool,
    /// `theta- <= theta0 <= theta+`.
    pub initial_theta: bool,
}

impl ConditionFlags {
    pub fn all(&self) -> bool {
        self.c_lower && self.c_upper && self.theta_lower && self.theta_upper && self.theta_derived && self.initial_c && self.initial_theta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub triangles: Vec<ConditionFlags>,
    /// `(s_h, 1)`; must vanish for the pressure problem to be solvable.
    pub source_integral: f64,
    pub compatible: bool,
}

impl ValidationReport {
    pub fn max_principle_guaranteed(&self) -> bool {
        self.triangles.iter().all(ConditionFlags::all)
    }

    /// `(condition name, failing triangle count)` in a fixed order.
    pub fn failure_counts(&self) -> Vec<(&'static str, usize)> {
        let count = |f: fn(&ConditionFlags) -> bool| self.triangles.iter().filter(|t| !f(t)).count();
        vec![
            ("s_c >= 0", count(|t| t.c_lower)),
            ("2s + lambda >= s_c", count(|t| t.c_upper)),
            ("2(theta- - theta*)s + s_theta <= 0", count(|t| t.theta_lower)),
            ("2(theta+ - theta*)s + s_theta >= 0", count(|t| t.theta_upper)),
            ("temperature bounds of the discrete argument", count(|t| t.theta_derived)),
            ("0 <= c0 <= 1", count(|t| t.initial_c)),
            ("theta- <= theta0 <= theta+", count(|t| t.initial_theta)),
        ]
    }
}

/// Compatibility tolerance for `(s_h, 1) = 0`.
pub fn compatibility_tolerance(mesh: &Mesh, s: &FieldP0) -> f64 {
    1e-10 * mesh.area().sqrt() * s.l2_norm(mesh) + 1e-14
}

/// Checks the data conditions on the projected sources (at `t = 0`) and
/// initial data.
pub fn validate_source_conditions(data: &PhysicalData, mesh: &Mesh) -> ValidationReport {
    let src = data.project_sources(mesh, 0.0);
    let c0 = project_p0_mean(mesh, |x| (data.c0)(x, 0.0));
    let th0 = project_p0_mean(mesh, |x| (data.theta0)(x, 0.0));
    let (tm, tp, ts, lam) = (data.theta_minus, data.theta_plus, data.theta_star, data.lambda);
    let le = |a: f64, b: f64| a <= b + 1e-12 * (1.0 + a.abs().max(b.abs()));
    let triangles = (0..mesh.n_triangles())
        .map(|k| {
            let (s, sc, st) = (src.s.values[k], src.s_c.values[k], src.s_theta.values[k]);
            ConditionFlags {
                c_lower: le(0.0, sc),
                c_upper: le(sc, 2.0 * s + lam),
                theta_lower: le(2.0 * (tm - ts) * s + st, 0.0),
                theta_upper: le(0.0, 2.0 * (tp - ts) * s + st),
                theta_derived: le(st + (2.0 * tm - ts) * s, 0.0) && le(0.0, st + (2.0 * tp - ts) * s),
                initial_c: le(0.0, c0.values[k]) && le(c0.values[k], 1.0),
                initial_theta: le(tm, th0.values[k]) && le(th0.values[k], tp),
            }
        })
        .collect();
    let source_integral = src.s.integral(mesh);
    ValidationReport {
        triangles,
        compatible: source_integral.abs() <= compatibility_tolerance(mesh, &src.s),
        source_integral,
    }
}
