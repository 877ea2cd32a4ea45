//! Randomized checks of the discrete operator identities, inequalities,
//! consistency orders, the maximum principle and the stability bounds.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::mms::{neumann_test_function, smooth_test_function, test_flow};
use super::order::{observed_order, OrderEstimate};
use super::random_data::{random_max_principle_data, random_signed_source_data};
use super::VerificationError;
use crate::fields::{
    dual_norm_minus1h, h_norm, interp_p1nc, interp_rt0, p1nc_evaluate, p1nc_gradient, project_p0_mean, project_p0_point, rt0_evaluate,
    FieldP0, FieldP1nc, FieldRt0, L2Field, VectorFieldP0,
};
use crate::linsolve::dense::{inverse, mat_mul};
use crate::linsolve::{solve_spd_semidefinite, SolverConfig};
use crate::mesh::{generate_equilateral_mesh, uniform_refine, Mesh, Point};
use crate::operators::{assemble_pressure_matrix, b_h, div_h, flux_sums, grad_h, lap_h_apply, transmissibility_matrix, upwind_apply};
use crate::physics::{DecayChain, PhysicalData};
use crate::quadrature::{edge_rule, triangle_rule};
use crate::scheme::{SchemeConfig, SchemeError, Simulation, TimeSeries, MAX_PRINCIPLE_SLACK};

/// Relative tolerance of the algebraic identities.
const IDENTITY_TOL: f64 = 1e-12;
/// Required order of the consistency and interpolation estimates.
const CONSISTENCY_ORDER: f64 = 0.9;
/// `|div u - s| <= DIV_FACTOR * tol * scale`.
const DIV_FACTOR: f64 = 10.0;
/// Allowed growth of the monitored norms over the second half of a long run.
const STABILITY_GROWTH: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Random fields per mesh for the identities.
    pub trials: usize,
    /// Consistency studies: the base rhombus has `2 n^2` triangles.
    pub consistency_base: usize,
    pub consistency_levels: usize,
    pub max_principle_sets: usize,
    pub max_principle_steps: usize,
    /// The maximum-principle mesh has `2 n^2` triangles.
    pub max_principle_cells: usize,
    pub stability_steps: usize,
    pub chains: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 0,
            trials: 50,
            consistency_base: 8,
            consistency_levels: 4,
            max_principle_sets: 20,
            max_principle_steps: 10,
            max_principle_cells: 8,
            stability_steps: 200,
            chains: 50,
        }
    }
}

/// One measured property. `measured <= threshold` passes, except for orders
/// where `measured >= threshold` passes.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteEntry {
    pub property: &'static str,
    pub case: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl SuiteEntry {
    fn at_most(property: &'static str, case: impl Into<String>, measured: f64, threshold: f64) -> Self {
        SuiteEntry {
            property,
            case: case.into(),
            passed: measured <= threshold,
            measured,
            threshold,
            detail: String::new(),
        }
    }

    fn at_least(property: &'static str, case: impl Into<String>, measured: f64, threshold: f64) -> Self {
        SuiteEntry {
            property,
            case: case.into(),
            passed: measured >= threshold,
            measured,
            threshold,
            detail: String::new(),
        }
    }

    fn failed(property: &'static str, case: impl Into<String>, detail: String) -> Self {
        SuiteEntry {
            property,
            case: case.into(),
            passed: false,
            measured: f64::NAN,
            threshold: f64::NAN,
            detail,
        }
    }

    fn with_detail(mut self, detail: String) -> Self {
        self.detail = detail;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub seed: u64,
    pub entries: Vec<SuiteEntry>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &SuiteEntry> {
        self.entries.iter().filter(|e| !e.passed)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "invariant suite, seed {}", self.seed).unwrap();
        for e in &self.entries {
            write!(
                out,
                "{:<4} {:<28} {:<16} measured {:>11.4e} threshold {:>9.2e}",
                if e.passed { "PASS" } else { "FAIL" },
                e.property,
                e.case,
                e.measured,
                e.threshold
            )
            .unwrap();
            if !e.detail.is_empty() {
                write!(out, "  {}", e.detail).unwrap();
            }
            out.push('\n');
        }
        let failed = self.failures().count();
        writeln!(out, "{} checks, {} failed", self.entries.len(), failed).unwrap();
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("property,case,passed,measured,threshold,detail\n");
        for e in &self.entries {
            writeln!(
                out,
                "{},{},{},{:?},{:?},\"{}\"",
                e.property,
                e.case,
                e.passed,
                e.measured,
                e.threshold,
                e.detail.replace('"', "'")
            )
            .unwrap();
        }
        out
    }
}

fn rng_for(seed: u64, group: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ group.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn mesh_label(mesh: &Mesh) -> String {
    format!("{} triangles", mesh.n_triangles())
}

fn random_p0(mesh: &Mesh, rng: &mut impl Rng) -> FieldP0 {
    FieldP0 {
        values: (0..mesh.n_triangles()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    }
}

fn random_p1nc(mesh: &Mesh, rng: &mut impl Rng) -> FieldP1nc {
    FieldP1nc {
        dofs: (0..mesh.n_edges()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    }
}

fn random_vector_p0(mesh: &Mesh, rng: &mut impl Rng) -> VectorFieldP0 {
    VectorFieldP0 {
        values: (0..mesh.n_triangles())
            .map(|_| Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect(),
    }
}

/// Random RT0 field with zero boundary fluxes.
fn random_rt0(mesh: &Mesh, rng: &mut impl Rng) -> FieldRt0 {
    FieldRt0 {
        fluxes: mesh
            .edges()
            .iter()
            .map(|e| if e.is_interior() { rng.gen_range(-1.0..1.0) } else { 0.0 })
            .collect(),
    }
}

/// Discrete curl of a random continuous P1 stream function vanishing on the
/// boundary: divergence free and tangential to the boundary.
pub(crate) fn random_divergence_free(mesh: &Mesh, rng: &mut impl Rng) -> FieldRt0 {
    let mut on_boundary = vec![false; mesh.vertices().len()];
    for e in mesh.edges().iter().filter(|e| !e.is_interior()) {
        for v in e.vertices {
            on_boundary[v] = true;
        }
    }
    let psi: Vec<f64> = on_boundary
        .iter()
        .map(|&b| if b { 0.0 } else { rng.gen_range(-1.0..1.0) })
        .collect();
    let fluxes = mesh
        .edges()
        .iter()
        .map(|e| {
            let [i, j] = e.vertices;
            let tangent = Point::new(-e.normal.y, e.normal.x);
            let along = (mesh.vertices()[j] - mesh.vertices()[i]).dot(tangent);
            let jump = if along > 0.0 { psi[j] - psi[i] } else { psi[i] - psi[j] };
            jump / e.length
        })
        .collect();
    FieldRt0 { fluxes }
}

/// `(div_h v)_K` for an RT0 field with zero boundary fluxes.
fn divergence(mesh: &Mesh, v: &FieldRt0) -> Vec<f64> {
    flux_sums(mesh, v).iter().zip(mesh.triangles()).map(|(f, t)| f / t.area).collect()
}

/// The three parts of `b_h(v, p, q)`: `sum_K p_K q_K |K| div v_K`, the
/// centered edge term and the upwind dissipation term.
fn b_h_parts(mesh: &Mesh, v: &FieldRt0, p: &FieldP0, q: &FieldP0) -> [f64; 3] {
    let div = divergence(mesh, v);
    let s2: f64 = (0..mesh.n_triangles())
        .map(|k| p.values[k] * q.values[k] * mesh.triangles()[k].area * div[k])
        .sum();
    let (mut centered, mut upwind) = (0.0, 0.0);
    for (id, e) in mesh.interior_edges() {
        let (k, l) = (e.k(), e.l().expect("interior edge"));
        let a = v.fluxes[id];
        let dp = p.values[l] - p.values[k];
        centered += e.length * a * dp * 0.5 * (q.values[k] + q.values[l]);
        upwind += e.length * a.abs() * dp * 0.5 * (q.values[l] - q.values[k]);
    }
    [s2, centered, upwind]
}

/// Adjointness, Laplacian coercivity/symmetry/continuity and the upwind
/// form identities on each mesh.
pub fn operator_identities(meshes: &[Mesh], seed: u64, trials: usize) -> Vec<SuiteEntry> {
    let mut entries = Vec::new();
    for (m, mesh) in meshes.iter().enumerate() {
        let mut rng = rng_for(seed, 1 + m as u64);
        let label = mesh_label(mesh);
        let (mut adj, mut coer, mut cont, mut sym) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for _ in 0..trials {
            let v = random_vector_p0(mesh, &mut rng);
            let q = random_p1nc(mesh, &mut rng);
            let lhs = v.l2_inner(&grad_h(mesh, &q), mesh);
            let div = div_h(mesh, &v);
            let rhs = -q.l2_inner(&div, mesh);
            let scale = v.l2_norm(mesh) * grad_h(mesh, &q).l2_norm(mesh) + q.l2_norm(mesh) * div.l2_norm(mesh);
            adj = adj.max((lhs - rhs).abs() / scale);

            let p = random_p0(mesh, &mut rng);
            let r = random_p0(mesh, &mut rng);
            let (hp, hr) = (h_norm(mesh, &p), h_norm(mesh, &r));
            let lp = lap_h_apply(mesh, &p);
            let lr = lap_h_apply(mesh, &r);
            if hp > 0.0 {
                coer = coer.max((-lp.l2_inner(&p, mesh) - hp * hp).abs() / (hp * hp));
            }
            if hp * hr > 0.0 {
                let pr = lp.l2_inner(&r, mesh);
                cont = cont.max((pr.abs() - hp * hr).max(0.0) / (hp * hr));
                sym = sym.max((pr - p.l2_inner(&lr, mesh)).abs() / (hp * hr));
            }
        }
        entries.push(SuiteEntry::at_most("adjoint grad/div", &label, adj, IDENTITY_TOL));
        entries.push(SuiteEntry::at_most("laplacian coercivity", &label, coer, IDENTITY_TOL));
        entries.push(SuiteEntry::at_most("laplacian continuity", &label, cont, IDENTITY_TOL));
        entries.push(SuiteEntry::at_most("laplacian symmetry", &label, sym, IDENTITY_TOL));
    }
    entries
}

/// Upwind form: `b_h(v, q, q) >= 0` for divergence-free `v`, the exact
/// splitting of `b_h`, the bound on its dissipative part, and the measured
/// constant of `|b_h(v,p,q)| <= C |v| ||p||_h ||q||_h` for `div v = 0`.
pub fn upwind_checks(meshes: &[Mesh], seed: u64, trials: usize) -> Vec<SuiteEntry> {
    let mut entries = Vec::new();
    for (m, mesh) in meshes.iter().enumerate() {
        let mut rng = rng_for(seed, 100 + m as u64);
        let label = mesh_label(mesh);
        let (mut positivity, mut split, mut bound, mut constant, mut div_free) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for _ in 0..trials {
            let v = random_divergence_free(mesh, &mut rng);
            let q = random_p0(mesh, &mut rng);
            let b = b_h(mesh, &v, &q, &q);
            let norm: f64 = mesh
                .interior_edges()
                .map(|(id, e)| e.length * v.fluxes[id].abs() * (q.values[e.k()].powi(2) + q.values[e.l().unwrap()].powi(2)))
                .sum();
            if norm > 0.0 {
                positivity = positivity.max(-b / norm);
            }
            let flux_scale: f64 = v.fluxes.iter().map(|f| f.abs()).fold(0.0, f64::max);
            let worst_div = divergence(mesh, &v)
                .iter()
                .zip(mesh.triangles())
                .map(|(d, t)| (d * t.area).abs())
                .fold(0.0, f64::max);
            if flux_scale > 0.0 {
                div_free = div_free.max(worst_div / (flux_scale * mesh.h()));
            }

            let p = random_p0(mesh, &mut rng);
            let (hp, hq) = (h_norm(mesh, &p), h_norm(mesh, &q));
            let vn = v.l2_norm(mesh);
            if hp * hq * vn > 0.0 {
                constant = constant.max(b_h(mesh, &v, &p, &q).abs() / (vn * hp * hq));
            }

            // General fields: the splitting and the dissipation bound.
            let w = random_rt0(mesh, &mut rng);
            let full = b_h(mesh, &w, &p, &q);
            let [s2, centered, upwind] = b_h_parts(mesh, &w, &p, &q);
            let scale = s2.abs() + centered.abs() + upwind.abs();
            if scale > 0.0 {
                split = split.max((full - s2 - centered - upwind).abs() / scale);
            }
            let c_max = mesh
                .interior_edges()
                .map(|(id, e)| e.length * w.fluxes[id].abs() / e.tau)
                .fold(0.0, f64::max);
            let limit = 0.5 * c_max * hp * hq;
            if limit > 0.0 {
                bound = bound.max((upwind.abs() - limit).max(0.0) / limit);
            }
        }
        entries.push(SuiteEntry::at_most("divergence-free fields", &label, div_free, IDENTITY_TOL));
        entries.push(SuiteEntry::at_most("upwind positivity", &label, positivity, IDENTITY_TOL));
        entries.push(SuiteEntry::at_most("upwind splitting", &label, split, IDENTITY_TOL));
        entries.push(SuiteEntry::at_most("upwind dissipation bound", &label, bound, IDENTITY_TOL));
        entries.push(
            SuiteEntry::at_most("upwind stability constant", &label, constant, f64::INFINITY)
                .with_detail("max |b_h(v,p,q)| / (|v| ||p||_h ||q||_h), div v = 0".into()),
        );
    }
    entries
}

/// Largest ratio `|q| / ||q||_h` over zero-mean `q` in P0 and
/// `|q| / |grad_h q|` over zero-mean `q` in CR, by inverse iteration.
pub fn poincare_constants(mesh: &Mesh, seed: u64) -> Result<(f64, f64), VerificationError> {
    let mut rng = rng_for(seed, 200);
    let solver = SolverConfig::symmetric().with_rel_tolerance(1e-12);
    let areas: Vec<f64> = mesh.triangles().iter().map(|t| t.area).collect();
    let p0 = inverse_iteration(&transmissibility_matrix(mesh), &areas, &solver, &mut rng)?;
    let ones = FieldP0::constant(mesh, 1.0);
    let stiffness = assemble_pressure_matrix(mesh, &ones, 0.5).expect("unit mobility is above the floor");
    let mut mass = vec![0.0; mesh.n_edges()];
    for t in mesh.triangles() {
        for &e in &t.edges {
            mass[e] += t.area / 3.0;
        }
    }
    let p1 = inverse_iteration(&stiffness, &mass, &solver, &mut rng)?;
    Ok((p0, p1))
}

/// `max x^T M x / x^T A x` over `x` with `sum m_i x_i = 0`, for `A`
/// semidefinite with constant kernel and `M = diag(mass)`.
fn inverse_iteration(
    a: &crate::operators::SparseOperator,
    mass: &[f64],
    solver: &SolverConfig,
    rng: &mut impl Rng,
) -> Result<f64, VerificationError> {
    let total: f64 = mass.iter().sum();
    let center = |x: &mut Vec<f64>| {
        let mean = x.iter().zip(mass).map(|(v, m)| v * m).sum::<f64>() / total;
        x.iter_mut().for_each(|v| *v -= mean);
    };
    let rayleigh = |x: &[f64]| {
        let ax = a.apply(x);
        let num: f64 = x.iter().zip(mass).map(|(v, m)| v * v * m).sum();
        let den: f64 = x.iter().zip(&ax).map(|(v, w)| v * w).sum();
        num / den
    };
    let mut x: Vec<f64> = (0..mass.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    center(&mut x);
    let mut estimate = rayleigh(&x);
    for _ in 0..200 {
        let b: Vec<f64> = x.iter().zip(mass).map(|(v, m)| v * m).collect();
        let (mut y, _) = solve_spd_semidefinite(a, &b, solver).map_err(crate::fields::FieldError::from)?;
        center(&mut y);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        y.iter_mut().for_each(|v| *v /= norm);
        x = y;
        let next = rayleigh(&x);
        let done = (next - estimate).abs() <= 1e-12 * next;
        estimate = next;
        if done {
            break;
        }
    }
    Ok(estimate.sqrt())
}

/// Poincare constants on each mesh (reported) and their stability under
/// refinement of `family` (finest over coarsest must stay below 1.5).
pub fn poincare_checks(meshes: &[Mesh], family: &[Mesh], seed: u64) -> Vec<SuiteEntry> {
    let mut entries = Vec::new();
    for mesh in meshes {
        match poincare_constants(mesh, seed) {
            Ok((c0, c1)) => {
                entries.push(SuiteEntry::at_most("poincare constant P0", mesh_label(mesh), c0, f64::INFINITY));
                entries.push(SuiteEntry::at_most("poincare constant CR", mesh_label(mesh), c1, f64::INFINITY));
            }
            Err(e) => entries.push(SuiteEntry::failed("poincare constant", mesh_label(mesh), e.to_string())),
        }
    }
    let constants: Result<Vec<(f64, f64)>, _> = family.iter().map(|m| poincare_constants(m, seed)).collect();
    match constants {
        Ok(c) if c.len() >= 2 => {
            let (first, last) = (c[0], c[c.len() - 1]);
            let detail = |name: &str, v: Vec<f64>| format!("{name}: {}", v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" "));
            entries.push(
                SuiteEntry::at_most("poincare P0 under refinement", "rhombus family", last.0 / first.0, 1.5)
                    .with_detail(detail("constants", c.iter().map(|x| x.0).collect())),
            );
            entries.push(
                SuiteEntry::at_most("poincare CR under refinement", "rhombus family", last.1 / first.1, 1.5)
                    .with_detail(detail("constants", c.iter().map(|x| x.1).collect())),
            );
        }
        Ok(_) => {}
        Err(e) => entries.push(SuiteEntry::failed("poincare under refinement", "rhombus family", e.to_string())),
    }
    entries
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyStudy {
    pub name: &'static str,
    pub errors: Vec<f64>,
    pub hs: Vec<f64>,
    pub order: OrderEstimate,
}

/// Unit rhombus meshes with `2 base^2, 8 base^2, ...` triangles.
pub fn rhombus_family(base: usize, levels: usize) -> Result<Vec<Mesh>, VerificationError> {
    let mut meshes = vec![generate_equilateral_mesh(base, base, 1.0 / base as f64)?];
    for _ in 1..levels {
        let next = uniform_refine(meshes.last().expect("non-empty"));
        meshes.push(next);
    }
    Ok(meshes)
}

/// `(1/|K|) int_{dK} g . n` by Gauss quadrature on each edge.
fn boundary_flux_average(mesh: &Mesh, g: impl Fn(Point) -> Point) -> FieldP0 {
    let values = (0..mesh.n_triangles())
        .map(|t| {
            let tri = &mesh.triangles()[t];
            (0..3)
                .map(|j| {
                    let e = &mesh.edges()[tri.edges[j]];
                    let n = mesh.outward_normal(t, j);
                    let [a, b] = e.vertices.map(|v| mesh.vertices()[v]);
                    e.length * edge_rule(a, b).iter().map(|&(x, w)| w * g(x).dot(n)).sum::<f64>()
                })
                .sum::<f64>()
                / tri.area
        })
        .collect();
    FieldP0 { values }
}

fn remove_mean(mesh: &Mesh, q: FieldP0) -> FieldP0 {
    let mean = q.mean(mesh);
    q.map(|v| v - mean)
}

/// Errors of the consistency and interpolation estimates on each mesh.
fn consistency_errors(mesh: &Mesh) -> Result<[f64; 7], VerificationError> {
    let solver = SolverConfig::symmetric().with_rel_tolerance(1e-13);
    let q = |x: Point| smooth_test_function(x).0;

    // Upwind consistency: Pi div(q v) - b~_h(Pi_RT0 v, Pi~ q).
    let exact = boundary_flux_average(mesh, |x| smooth_test_function(x).0 * test_flow(x));
    let discrete = upwind_apply(mesh, &interp_rt0(mesh, test_flow), &project_p0_point(mesh, q));
    let upwind = dual_norm_minus1h(mesh, &remove_mean(mesh, exact.zip_map(&discrete, |a, b| a - b)), &solver)?;

    // Laplacian consistency: Pi lap q - lap_h Pi~ q.
    let exact = boundary_flux_average(mesh, |x| neumann_test_function(x).1);
    let discrete = lap_h_apply(mesh, &project_p0_point(mesh, |x| neumann_test_function(x).0));
    let laplacian = dual_norm_minus1h(mesh, &remove_mean(mesh, exact.zip_map(&discrete, |a, b| a - b)), &solver)?;

    let mean = project_p0_mean(mesh, q);
    let point = project_p0_point(mesh, q);
    let v_h = interp_rt0(mesh, test_flow);
    let q_h = interp_p1nc(mesh, q);
    let (mut p0, mut rt0, mut cr, mut cr_grad) = (0.0, 0.0, 0.0, 0.0);
    for t in 0..mesh.n_triangles() {
        let g = p1nc_gradient(mesh, &q_h, t);
        for (x, _, w) in triangle_rule(mesh.triangle_points(t), mesh.triangles()[t].area) {
            let (qx, gx) = smooth_test_function(x);
            p0 += w * (qx - mean.values[t]).powi(2);
            let dv = test_flow(x) - rt0_evaluate(mesh, &v_h, t, x)?;
            rt0 += w * dv.dot(dv);
            cr += w * (qx - p1nc_evaluate(mesh, &q_h, t, x)?).powi(2);
            let dg = gx - g;
            cr_grad += w * dg.dot(dg);
        }
    }
    let point_vs_mean = mean.zip_map(&point, |a, b| a - b).l2_norm(mesh);
    Ok([upwind, laplacian, p0.sqrt(), rt0.sqrt(), cr.sqrt(), cr_grad.sqrt(), point_vs_mean])
}

const CONSISTENCY_NAMES: [&str; 7] = [
    "upwind consistency",
    "laplacian consistency",
    "P0 projection error",
    "RT0 interpolation error",
    "CR interpolation error",
    "CR gradient error",
    "point vs mean projection",
];

/// Observed orders of the consistency and interpolation estimates on the
/// rhombus family.
pub fn consistency_study(base: usize, levels: usize) -> Result<Vec<ConsistencyStudy>, VerificationError> {
    let meshes = rhombus_family(base, levels)?;
    let errors: Vec<[f64; 7]> = meshes.par_iter().map(consistency_errors).collect::<Result<_, _>>()?;
    let hs: Vec<f64> = meshes.iter().map(Mesh::h).collect();
    CONSISTENCY_NAMES
        .iter()
        .enumerate()
        .map(|(i, &name)| {
            let e: Vec<f64> = errors.iter().map(|row| row[i]).collect();
            Ok(ConsistencyStudy {
                name,
                order: observed_order(&e, &hs)?,
                errors: e,
                hs: hs.clone(),
            })
        })
        .collect()
}

fn consistency_entries(base: usize, levels: usize) -> Vec<SuiteEntry> {
    match consistency_study(base, levels) {
        Ok(studies) => studies
            .into_iter()
            .map(|s| {
                let fit = s.order.fit.unwrap_or(f64::NAN);
                let pairs: Vec<String> = s.order.pairwise.iter().map(|p| p.to_string()).collect();
                SuiteEntry::at_least(s.name, format!("{levels} levels"), fit, CONSISTENCY_ORDER)
                    .with_detail(format!("pairwise {}", pairs.join(" ")))
            })
            .collect(),
        Err(e) => vec![SuiteEntry::failed("consistency orders", "rhombus family", e.to_string())],
    }
}

/// Outcome of one short run with maximum-principle data.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    /// Largest excursion outside `[0, 1]` for `c` and `[theta-, theta+]` for `theta`.
    pub violation_c: f64,
    pub violation_theta: f64,
    /// Every step reported the bounds as guaranteed and satisfied.
    pub flags_ok: bool,
    /// `max |div u - s| / (tol * scale)` over the steps.
    pub div_ratio: f64,
}

/// Runs `steps` steps of size `k` with `data` and measures the bounds.
pub fn max_principle_trial(mesh: &Mesh, data: &PhysicalData, k: f64, steps: usize) -> Result<TrialOutcome, SchemeError> {
    let config = SchemeConfig::new(k * steps as f64, steps);
    let tol = config.pressure_solver.rel_tolerance;
    let sim = Simulation::new(mesh, data, config)?;
    let state = sim.init()?;
    let mut out = TrialOutcome {
        violation_c: (-state.c.min()).max(state.c.max() - 1.0).max(0.0),
        violation_theta: (data.theta_minus - state.theta.min())
            .max(state.theta.max() - data.theta_plus)
            .max(0.0),
        flags_ok: true,
        div_ratio: 0.0,
    };
    sim.run_from(state, |_, rec| {
        out.violation_c = out.violation_c.max(-rec.c_min).max(rec.c_max - 1.0);
        out.violation_theta = out
            .violation_theta
            .max(data.theta_minus - rec.theta_min)
            .max(rec.theta_max - data.theta_plus);
        out.flags_ok &= rec.max_principle_ok == Some(true);
        if rec.div_scale > 0.0 {
            out.div_ratio = out.div_ratio.max(rec.div_residual / (tol * rec.div_scale));
        }
    })?;
    Ok(out)
}

/// Maximum principle on random admissible data, the concentration bounds
/// with a signed fluid source, and the divergence identity in all runs.
pub fn max_principle_checks(cells: usize, sets: usize, steps: usize, seed: u64) -> Vec<SuiteEntry> {
    let mesh = match generate_equilateral_mesh(cells, cells, 1.0 / cells as f64) {
        Ok(m) => m,
        Err(e) => return vec![SuiteEntry::failed("maximum principle", "rhombus", e.to_string())],
    };
    let label = format!("{sets} sets x {steps} steps");
    let run = |i: usize, signed: bool| {
        let mut rng = rng_for(seed, 300 + 2 * i as u64 + u64::from(signed));
        let data = if signed {
            random_signed_source_data(&mut rng, 1.0)
        } else {
            random_max_principle_data(&mut rng)
        };
        let k = 10f64.powf(rng.gen_range(-2.0..0.0));
        max_principle_trial(&mesh, &data, k, steps)
    };
    let admissible: Vec<_> = (0..sets).into_par_iter().map(|i| run(i, false)).collect();
    let signed: Vec<_> = (0..sets.div_ceil(4)).into_par_iter().map(|i| run(i, true)).collect();

    let mut entries = Vec::new();
    let mut div_ratio = 0.0f64;
    match admissible.into_iter().collect::<Result<Vec<_>, _>>() {
        Ok(outcomes) => {
            let worst = outcomes.iter().fold(0.0f64, |m, o| m.max(o.violation_c).max(o.violation_theta));
            let flags = outcomes.iter().filter(|o| !o.flags_ok).count();
            div_ratio = outcomes.iter().fold(div_ratio, |m, o| m.max(o.div_ratio));
            let mut entry = SuiteEntry::at_most("maximum principle", &label, worst, MAX_PRINCIPLE_SLACK);
            entry.passed &= flags == 0;
            entries.push(entry.with_detail(format!("{flags} runs with a step not flagged ok")));
        }
        Err(e) => entries.push(SuiteEntry::failed("maximum principle", &label, e.to_string())),
    }
    match signed.into_iter().collect::<Result<Vec<_>, _>>() {
        Ok(outcomes) => {
            let worst = outcomes.iter().fold(0.0f64, |m, o| m.max(o.violation_c));
            div_ratio = outcomes.iter().fold(div_ratio, |m, o| m.max(o.div_ratio));
            entries.push(SuiteEntry::at_most(
                "concentration bounds, s != 0",
                format!("{} sets", sets.div_ceil(4)),
                worst,
                MAX_PRINCIPLE_SLACK,
            ));
        }
        Err(e) => entries.push(SuiteEntry::failed("concentration bounds, s != 0", &label, e.to_string())),
    }
    entries.push(
        SuiteEntry::at_most("divergence identity", "all runs above", div_ratio, DIV_FACTOR)
            .with_detail("max |div u - s_K| / (pressure tolerance * scale)".into()),
    );
    entries
}

/// Relative growth of each monitored norm over the second half of a series:
/// `max_{n >= N/2} x_n / x_{N/2} - 1`, for `|c|, |theta|, |u|, |grad_h p|`.
pub fn second_half_growth(series: &TimeSeries) -> [f64; 4] {
    let r = &series.records;
    let mid = r.len() / 2;
    let pick: [fn(&crate::scheme::StepRecord) -> f64; 4] = [|x| x.c_l2, |x| x.theta_l2, |x| x.u_l2, |x| x.grad_p_l2];
    pick.map(|f| {
        let base = f(&r[mid]);
        let top = r[mid..].iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        if base > 0.0 {
            top / base - 1.0
        } else {
            top
        }
    })
}

/// Long run without sources: the monitored norms must not grow by more than
/// 1% over the second half.
pub fn stability_check(cells: usize, steps: usize, seed: u64) -> Vec<SuiteEntry> {
    let label = format!("{steps} steps");
    let result = (|| -> Result<TimeSeries, VerificationError> {
        let mesh = generate_equilateral_mesh(cells, cells, 1.0 / cells as f64)?;
        let mut rng = rng_for(seed, 400);
        let data = PhysicalData {
            s_c: crate::physics::constant_scalar(0.0),
            d_c: 0.5,
            d_theta: 0.5,
            ..random_max_principle_data(&mut rng)
        };
        let k = 10.0 / steps as f64;
        let sim = Simulation::new(&mesh, &data, SchemeConfig::new(k * steps as f64, steps))
            .map_err(|source| VerificationError::Scheme { level: 0, source })?;
        let (_, series) = sim
            .run(|_, _| {})
            .map_err(|source| VerificationError::Scheme { level: 0, source })?;
        Ok(series)
    })();
    match result {
        Ok(series) => {
            let growth = second_half_growth(&series);
            let worst = growth.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            vec![
                SuiteEntry::at_most("stability", label, worst, STABILITY_GROWTH).with_detail(format!(
                    "growth |c| {:.3e} |theta| {:.3e} |u| {:.3e} |grad p| {:.3e}",
                    growth[0], growth[1], growth[2], growth[3]
                )),
            ]
        }
        Err(e) => vec![SuiteEntry::failed("stability", label, e.to_string())],
    }
}

/// Random serial chain with at most six species and well separated rates.
pub fn random_chain(rng: &mut impl Rng) -> DecayChain {
    let n = rng.gen_range(1..=6);
    let mut rates: Vec<f64> = Vec::with_capacity(n);
    while rates.len() < n {
        let r = 10f64.powf(rng.gen_range(-1.0..1.0));
        if rates.iter().all(|&q| (q - r).abs() > 0.1 * q.max(r)) {
            rates.push(r);
        }
    }
    let branching = (0..n).map(|i| if i == 0 { 0.0 } else { rng.gen_range(0.1..=1.0) }).collect();
    DecayChain::new(rates, branching).expect("rates are distinct and positive")
}

/// Round trip of the chain transform and diagonalization of the reaction
/// matrix.
pub fn bateman_checks(chains: usize, seed: u64) -> Vec<SuiteEntry> {
    let mut rng = rng_for(seed, 500);
    let (mut roundtrip, mut diag, mut off) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..chains {
        let chain = random_chain(&mut rng);
        let n = chain.len();
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let back = chain.inverse(&chain.forward(&a));
        let norm = a.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let err = a.iter().zip(&back).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        roundtrip = roundtrip.max(err / norm);

        let t = chain.transform_matrix().to_vec();
        let t_inv = match inverse(&t) {
            Ok(m) => m,
            Err(e) => return vec![SuiteEntry::failed("bateman transform", "random chains", e.to_string())],
        };
        let conj = mat_mul(&mat_mul(&t, &chain.reaction_matrix()), &t_inv);
        let scale = chain.lambdas().iter().copied().fold(0.0, f64::max);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    diag = diag.max((conj[i][i] + chain.lambdas()[i]).abs() / scale);
                } else {
                    off = off.max(conj[i][j].abs() / scale);
                }
            }
        }
    }
    let label = format!("{chains} chains");
    vec![
        SuiteEntry::at_most("bateman round trip", &label, roundtrip, IDENTITY_TOL),
        SuiteEntry::at_most("bateman diagonal", &label, diag, IDENTITY_TOL),
        SuiteEntry::at_most("bateman off-diagonal", &label, off, IDENTITY_TOL),
    ]
}

/// Runs every check. Identities, upwind checks and Poincare constants use
/// `meshes`; the other groups build their own rhombus meshes.
pub fn invariant_suite(meshes: &[Mesh], config: &SuiteConfig) -> SuiteReport {
    let seed = config.seed;
    let mut entries = operator_identities(meshes, seed, config.trials);
    entries.extend(upwind_checks(meshes, seed, config.trials));
    let family = rhombus_family(config.consistency_base, config.consistency_levels).unwrap_or_default();
    entries.extend(poincare_checks(meshes, &family, seed));
    entries.extend(consistency_entries(config.consistency_base, config.consistency_levels));
    entries.extend(max_principle_checks(
        config.max_principle_cells,
        config.max_principle_sets,
        config.max_principle_steps,
        seed,
    ));
    entries.extend(stability_check(config.max_principle_cells, config.stability_steps, seed));
    entries.extend(bateman_checks(config.chains, seed));
    SuiteReport { seed, entries }
}
