use std::fmt::Write as _;

use rayon::prelude::*;

use super::mms::MmsCase;
use super::order::{observed_order, OrderEstimate};
use super::VerificationError;
use crate::fields::{h_norm, p1nc_gradient, project_p0_mean, project_p0_point, rt0_evaluate, FieldP0, L2Field};
use crate::linsolve::SolverConfig;
use crate::mesh::{uniform_refine, Mesh};
use crate::quadrature::triangle_rule;
use crate::scheme::{SchemeConfig, SchemeState, Simulation, VelocityReconstruction};

/// Required observed order for both error groups.
pub const COMBINED_ORDER_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig {
    /// Number of meshes, the base mesh included. At least 3.
    pub levels: usize,
    /// Steps on the base mesh; doubled with every refinement so `k ~ h`.
    pub base_steps: usize,
    pub transport_solver: SolverConfig,
    pub pressure_solver: SolverConfig,
    pub velocity: VelocityReconstruction,
    pub threshold: f64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        let scheme = SchemeConfig::new(1.0, 1);
        ConvergenceConfig {
            levels: 4,
            base_steps: 8,
            transport_solver: scheme.transport_solver,
            pressure_solver: scheme.pressure_solver,
            velocity: scheme.velocity,
            threshold: COMBINED_ORDER_THRESHOLD,
        }
    }
}

/// Errors at the final time of one level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelErrors {
    pub level: usize,
    pub n_triangles: usize,
    pub h: f64,
    pub k: f64,
    pub n_steps: usize,
    /// `|c(T) - c_h|` with `c(T)` replaced by its cell averages.
    pub e_c: f64,
    pub e_theta: f64,
    /// `k sum_n ||Pi~ e_c^n||_h^2` with `Pi~` the circumcenter interpolant.
    pub energy_c: f64,
    pub energy_theta: f64,
    /// `(|e_c|^2 + |e_theta|^2 + energy_c + energy_theta)^(1/2)`.
    pub combined: f64,
    /// `|grad p(T) - grad_h p_h|`, broken.
    pub grad_p: f64,
    pub e_u: f64,
    /// `grad_p + e_u`.
    pub flow: f64,
    /// `max_n max_K |div u - s_K| / (tol * scale)` over all steps, `tol` the
    /// pressure solver tolerance.
    pub div_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub case: String,
    pub threshold: f64,
    pub levels: Vec<LevelErrors>,
    pub combined: OrderEstimate,
    pub flow: OrderEstimate,
    pub e_c: OrderEstimate,
    pub e_theta: OrderEstimate,
    pub grad_p: OrderEstimate,
    pub e_u: OrderEstimate,
}

impl ConvergenceReport {
    /// Last two pairwise orders of both error groups at or above the threshold.
    pub fn passed(&self) -> bool {
        self.combined.meets(self.threshold, 2) && self.flow.meets(self.threshold, 2)
    }

    pub fn max_div_ratio(&self) -> f64 {
        self.levels.iter().fold(0.0f64, |m, l| m.max(l.div_ratio))
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "case {}", self.case).unwrap();
        writeln!(
            out,
            "{:>5} {:>9} {:>10} {:>10} {:>6} {:>11} {:>11} {:>11} {:>11} {:>11} {:>11} {:>11}",
            "level", "triangles", "h", "k", "steps", "e_c", "e_theta", "energy", "combined", "grad_p", "e_u", "flow"
        )
        .unwrap();
        for l in &self.levels {
            writeln!(
                out,
                "{:>5} {:>9} {:>10.4e} {:>10.4e} {:>6} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e}",
                l.level,
                l.n_triangles,
                l.h,
                l.k,
                l.n_steps,
                l.e_c,
                l.e_theta,
                (l.energy_c + l.energy_theta).sqrt(),
                l.combined,
                l.grad_p,
                l.e_u,
                l.flow
            )
            .unwrap();
        }
        writeln!(out, "observed orders (consecutive levels; least-squares fit)").unwrap();
        for (name, est) in self.estimates() {
            let pairs: Vec<String> = est.pairwise.iter().map(|p| format!("{p:>9}")).collect();
            let fit = est.fit.map_or_else(|| "n/a".to_string(), |f| format!("{f:.3}"));
            writeln!(out, "  {name:<9} {} ; fit {fit}", pairs.join(" ")).unwrap();
        }
        writeln!(
            out,
            "required: combined and flow orders >= {} over the last two pairs: {}",
            self.threshold,
            if self.passed() { "PASS" } else { "FAIL" }
        )
        .unwrap();
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,triangles,h,k,steps,e_c,e_theta,energy_c,energy_theta,combined,grad_p,e_u,flow,div_ratio\n");
        for l in &self.levels {
            writeln!(
                out,
                "{},{},{:?},{:?},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
                l.level,
                l.n_triangles,
                l.h,
                l.k,
                l.n_steps,
                l.e_c,
                l.e_theta,
                l.energy_c,
                l.energy_theta,
                l.combined,
                l.grad_p,
                l.e_u,
                l.flow,
                l.div_ratio
            )
            .unwrap();
        }
        out
    }

    fn estimates(&self) -> [(&'static str, &OrderEstimate); 6] {
        [
            ("combined", &self.combined),
            ("flow", &self.flow),
            ("e_c", &self.e_c),
            ("e_theta", &self.e_theta),
            ("grad_p", &self.grad_p),
            ("e_u", &self.e_u),
        ]
    }
}

/// `|Pi f - q_h|` with `Pi f` the cell averages of `f`.
fn l2_error_p0(mesh: &Mesh, f: impl Fn(crate::mesh::Point) -> f64, q: &FieldP0) -> f64 {
    project_p0_mean(mesh, f).zip_map(q, |a, b| a - b).l2_norm(mesh)
}

fn run_level(case: &MmsCase, mesh: &Mesh, level: usize, config: &ConvergenceConfig) -> Result<LevelErrors, VerificationError> {
    let n_steps = config.base_steps << level;
    let mut scheme = SchemeConfig::new(case.final_time, n_steps);
    scheme.transport_solver = config.transport_solver;
    scheme.pressure_solver = config.pressure_solver;
    scheme.velocity = config.velocity;
    let tol = scheme.pressure_solver.rel_tolerance;
    let k = scheme.k;
    let wrap = |source| VerificationError::Scheme { level, source };
    let sim = Simulation::new(mesh, &case.data, scheme).map_err(wrap)?;

    let (mut energy_c, mut energy_theta, mut div_ratio) = (0.0, 0.0, 0.0f64);
    let interp_error = |exact: &crate::physics::ScalarFn, q: &FieldP0, t: f64| {
        let pi = project_p0_point(mesh, |x| exact(x, t));
        h_norm(mesh, &pi.zip_map(q, |a, b| a - b)).powi(2)
    };
    let (state, _) = sim
        .run(|state: &SchemeState, rec| {
            energy_c += k * interp_error(&case.c, &state.c, state.time);
            energy_theta += k * interp_error(&case.theta, &state.theta, state.time);
            if rec.div_scale > 0.0 {
                div_ratio = div_ratio.max(rec.div_residual / (tol * rec.div_scale));
            }
        })
        .map_err(wrap)?;

    let t = state.time;
    let e_c = l2_error_p0(mesh, |x| (case.c)(x, t), &state.c);
    let e_theta = l2_error_p0(mesh, |x| (case.theta)(x, t), &state.theta);
    let mut grad2 = 0.0;
    let mut u2 = 0.0;
    for tri in 0..mesh.n_triangles() {
        let g = p1nc_gradient(mesh, &state.p, tri);
        for (x, _, w) in triangle_rule(mesh.triangle_points(tri), mesh.triangles()[tri].area) {
            let dg = (case.grad_p)(x, t) - g;
            let du = (case.u)(x, t) - rt0_evaluate(mesh, &state.u, tri, x)?;
            grad2 += w * dg.dot(dg);
            u2 += w * du.dot(du);
        }
    }
    let (grad_p, e_u) = (grad2.sqrt(), u2.sqrt());
    Ok(LevelErrors {
        level,
        n_triangles: mesh.n_triangles(),
        h: mesh.h(),
        k,
        n_steps,
        e_c,
        e_theta,
        energy_c,
        energy_theta,
        combined: (e_c * e_c + e_theta * e_theta + energy_c + energy_theta).sqrt(),
        grad_p,
        e_u,
        flow: grad_p + e_u,
        div_ratio,
    })
}

/// Runs the scheme on `base` and its uniform refinements (levels in
/// parallel) and measures the errors against the exact solution.
pub fn run_convergence(case: &MmsCase, base: &Mesh, config: &ConvergenceConfig) -> Result<ConvergenceReport, VerificationError> {
    if config.levels < 3 {
        return Err(VerificationError::TooFewLevels {
            required: 3,
            found: config.levels,
        });
    }
    let mut meshes = vec![base.clone()];
    for _ in 1..config.levels {
        let next = uniform_refine(meshes.last().expect("non-empty"));
        meshes.push(next);
    }
    let levels: Vec<LevelErrors> = meshes
        .par_iter()
        .enumerate()
        .map(|(level, mesh)| run_level(case, mesh, level, config))
        .collect::<Result<_, _>>()?;

    let hs: Vec<f64> = levels.iter().map(|l| l.h).collect();
    let order = |f: fn(&LevelErrors) -> f64| observed_order(&levels.iter().map(f).collect::<Vec<_>>(), &hs);
    Ok(ConvergenceReport {
        case: case.name.clone(),
        threshold: config.threshold,
        combined: order(|l| l.combined)?,
        flow: order(|l| l.flow)?,
        e_c: order(|l| l.e_c)?,
        e_theta: order(|l| l.e_theta)?,
        grad_p: order(|l| l.grad_p)?,
        e_u: order(|l| l.e_u)?,
        levels,
    })
}
