use std::fmt::Write as _;

use super::{div_residual, FlowUpdate, SchemeState, Simulation, MAX_PRINCIPLE_SLACK};
use crate::fields::{h_norm, FieldP0, L2Field};
use crate::linsolve::SolveReport;
use crate::operators::grad_h;

/// Monitors recorded after one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub c_min: f64,
    pub c_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    /// `|c^n|` (L2).
    pub c_l2: f64,
    pub theta_l2: f64,
    /// `||c^n||_h^2`.
    pub c_h2: f64,
    pub theta_h2: f64,
    /// `k sum_{m <= n} ||c^m||_h^2`; filled in by [`TimeSeries::push`].
    pub energy_c: f64,
    pub energy_theta: f64,
    pub u_l2: f64,
    pub grad_p_l2: f64,
    /// `max_K |div u - s_K|`.
    pub div_residual: f64,
    /// `max_K max(|s_K|, (1/|K|) sum_sigma |sigma| |u.n|)`, the size of the
    /// terms entering the divergence identity.
    pub div_scale: f64,
    /// `|(p, 1)| / (|Omega|^(1/2) |p|)`.
    pub pressure_mean: f64,
    pub iterations_c: usize,
    pub iterations_theta: usize,
    pub iterations_p: usize,
    pub residual_p: f64,
    pub clamped: usize,
    pub floored: usize,
    /// `None` when the data conditions do not guarantee the bounds.
    pub max_principle_ok: Option<bool>,
}

impl StepRecord {
    pub(crate) fn measure(sim: &Simulation<'_>, state: &SchemeState, s: &FieldP0, flow: &FlowUpdate, reports: [SolveReport; 2]) -> Self {
        let mesh = sim.mesh();
        let cfg = sim.config();
        let data = sim.data;
        let (c_h2, theta_h2) = if cfg.monitor_energy {
            (h_norm(mesh, &state.c).powi(2), h_norm(mesh, &state.theta).powi(2))
        } else {
            (f64::NAN, f64::NAN)
        };
        let (div_res, div_scale) = if cfg.monitor_divergence {
            let res = div_residual(mesh, &state.u, s);
            let scale = mesh
                .triangles()
                .iter()
                .enumerate()
                .map(|(t, tri)| {
                    let flux: f64 = (0..3)
                        .map(|j| mesh.edges()[tri.edges[j]].length * state.u.fluxes[tri.edges[j]].abs())
                        .sum();
                    s.values[t].abs().max(flux / tri.area)
                })
                .fold(0.0f64, f64::max);
            (res.values.iter().fold(0.0f64, |m, v| m.max(v.abs())), scale)
        } else {
            (f64::NAN, f64::NAN)
        };
        let p_norm = state.p.l2_norm(mesh);
        let pressure_mean = if p_norm > 0.0 {
            state.p.integral(mesh).abs() / (mesh.area().sqrt() * p_norm)
        } else {
            0.0
        };
        let (c_min, c_max, theta_min, theta_max) = (state.c.min(), state.c.max(), state.theta.min(), state.theta.max());
        let max_principle_ok = (cfg.monitor_max_principle && sim.validation().max_principle_guaranteed()).then(|| {
            c_min >= -MAX_PRINCIPLE_SLACK
                && c_max <= 1.0 + MAX_PRINCIPLE_SLACK
                && theta_min >= data.theta_minus - MAX_PRINCIPLE_SLACK
                && theta_max <= data.theta_plus + MAX_PRINCIPLE_SLACK
        });
        StepRecord {
            step: state.step,
            time: state.time,
            c_min,
            c_max,
            theta_min,
            theta_max,
            c_l2: state.c.l2_norm(mesh),
            theta_l2: state.theta.l2_norm(mesh),
            c_h2,
            theta_h2,
            energy_c: 0.0,
            energy_theta: 0.0,
            u_l2: state.u.l2_norm(mesh),
            grad_p_l2: grad_h(mesh, &state.p).l2_norm(mesh),
            div_residual: div_res,
            div_scale,
            pressure_mean,
            iterations_c: reports[0].iterations,
            iterations_theta: reports[1].iterations,
            iterations_p: flow.pressure_report.iterations,
            residual_p: flow.pressure_report.relative_residual,
            clamped: flow.clamped,
            floored: flow.floored,
            max_principle_ok,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeSeries {
    pub records: Vec<StepRecord>,
}

const HEADER: &str = "step,time,c_min,c_max,theta_min,theta_max,c_l2,theta_l2,c_h2,theta_h2,energy_c,energy_theta,\
u_l2,grad_p_l2,div_residual,div_scale,pressure_mean,iterations_c,iterations_theta,iterations_p,residual_p,clamped,floored,max_principle";

impl TimeSeries {
    /// Appends `record`, accumulating the energy sums.
    pub fn push(&mut self, record: &mut StepRecord, k: f64) {
        let (ec, et) = self.records.last().map_or((0.0, 0.0), |r| (r.energy_c, r.energy_theta));
        record.energy_c = ec + k * record.c_h2;
        record.energy_theta = et + k * record.theta_h2;
        self.records.push(record.clone());
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn max_div_residual(&self) -> f64 {
        self.records.iter().fold(0.0f64, |m, r| m.max(r.div_residual))
    }

    pub fn csv_header() -> &'static str {
        HEADER
    }

    /// One CSV row, floats in round-trip form.
    pub fn csv_row(r: &StepRecord) -> String {
        let mut out = String::new();
        write!(
            out,
            "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{},{},{},{:?},{},{},{}",
            r.step,
            r.time,
            r.c_min,
            r.c_max,
            r.theta_min,
            r.theta_max,
            r.c_l2,
            r.theta_l2,
            r.c_h2,
            r.theta_h2,
            r.energy_c,
            r.energy_theta,
            r.u_l2,
            r.grad_p_l2,
            r.div_residual,
            r.div_scale,
            r.pressure_mean,
            r.iterations_c,
            r.iterations_theta,
            r.iterations_p,
            r.residual_p,
            r.clamped,
            r.floored,
            match r.max_principle_ok {
                Some(true) => "ok",
                Some(false) => "violated",
                None => "not-guaranteed",
            }
        )
        .unwrap();
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&Self::csv_row(r));
            out.push('\n');
        }
        out
    }
}
