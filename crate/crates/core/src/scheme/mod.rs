//! The time-stepping algorithm. Each step:
//!
//! 1. implicit transport solve for `c` with the previous velocity,
//! 2. the same for `theta`,
//! 3. mobility `kappa(c, theta)`,
//! 4. Crouzeix-Raviart pressure solve (zero-mean gauge),
//! 5. RT0 velocity reconstruction.
//!
//! Sources and body force are taken at the new time level.

mod checkpoint;
mod monitor;

use std::fmt;

use thiserror::Error;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CheckpointError};
pub use monitor::{StepRecord, TimeSeries};

use crate::fields::{l2_project_rt0_p0, project_p0_mean, project_vector_p0_mean, FieldError, FieldP0, FieldP1nc, FieldRt0, VectorFieldP0};
use crate::linsolve::{solve, solve_spd_semidefinite, SolveError, SolveReport, SolverConfig, SolverMethod};
use crate::mesh::Mesh;
use crate::operators::{assemble_pressure_matrix, assemble_transport_matrix, grad_h, pressure_rhs, OperatorError};
use crate::physics::{
    compatibility_tolerance, kappa_eval, validate_source_conditions, PhysicalData, PhysicsError, SourceFields, ValidationReport,
};

/// Slack allowed on the discrete maximum principle for iterative solves.
pub const MAX_PRINCIPLE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Concentration,
    Temperature,
    Species(usize),
    Mobility,
    Pressure,
    Velocity,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::Concentration => write!(f, "concentration"),
            Stage::Temperature => write!(f, "temperature"),
            Stage::Species(i) => write!(f, "species {}", i + 2),
            Stage::Mobility => write!(f, "mobility"),
            Stage::Pressure => write!(f, "pressure"),
            Stage::Velocity => write!(f, "velocity"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemeError {
    #[error("invalid scheme configuration: {0}")]
    InvalidConfig(String),
    #[error("inadmissible data: {0}")]
    InadmissibleData(String),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error("step {step}, {stage}: {source}")]
    Operator { step: usize, stage: Stage, source: OperatorError },
    #[error("step {step}, {stage}: linear solve failed: {source}")]
    Solver { step: usize, stage: Stage, source: SolveError },
    #[error("step {step}, {stage}: linear solve did not converge (relative residual {residual:e})")]
    NotConverged { step: usize, stage: Stage, residual: f64 },
    #[error("step {step}, {stage}: {source}")]
    Field { step: usize, stage: Stage, source: FieldError },
}

/// How `u` is recovered from `(f, kappa, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VelocityReconstruction {
    /// Edge fluxes of `w_K + (s_K/2)(x - x_G)` with `w = f - kappa grad_h p`,
    /// averaged over the two sides. Divergence equals `s_h` exactly.
    MixedHybrid,
    /// Plain L2 projection of `w` onto RT0. Divergence equals `s_h` only when
    /// `s = 0`.
    L2Projection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    /// Time step `k = T / N`.
    pub k: f64,
    pub n_steps: usize,
    pub t0: f64,
    pub transport_solver: SolverConfig,
    pub pressure_solver: SolverConfig,
    pub velocity: VelocityReconstruction,
    pub monitor_max_principle: bool,
    pub monitor_divergence: bool,
    pub monitor_energy: bool,
}

impl SchemeConfig {
    pub fn new(final_time: f64, n_steps: usize) -> Self {
        SchemeConfig {
            k: final_time / n_steps.max(1) as f64,
            n_steps,
            t0: 0.0,
            transport_solver: SolverConfig::nonsymmetric().with_rel_tolerance(1e-12),
            pressure_solver: SolverConfig::symmetric().with_rel_tolerance(1e-12),
            velocity: VelocityReconstruction::MixedHybrid,
            monitor_max_principle: true,
            monitor_divergence: true,
            monitor_energy: true,
        }
    }

    pub fn final_time(&self) -> f64 {
        self.t0 + self.n_steps as f64 * self.k
    }

    /// `t_n = t0 + n k`, computed without accumulation so restarts agree bitwise.
    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.k
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(SchemeError::InvalidConfig(format!("time step must be positive, got {}", self.k)));
        }
        if self.n_steps == 0 {
            return Err(SchemeError::InvalidConfig("step count must be at least 1".into()));
        }
        if self.pressure_solver.method != SolverMethod::SymmetricIterative {
            return Err(SchemeError::InvalidConfig(
                "the pressure system is singular; only the symmetric iterative solver handles it".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeState {
    pub step: usize,
    pub time: f64,
    pub c: FieldP0,
    pub theta: FieldP0,
    /// Zero mean.
    pub p: FieldP1nc,
    pub u: FieldRt0,
    /// Transformed concentrations of species 2.. of a decay chain.
    pub extra: Vec<FieldP0>,
}

/// Diagnostics of one pressure/velocity update.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowUpdate {
    pub p: FieldP1nc,
    pub u: FieldRt0,
    pub kappa: FieldP0,
    pub pressure_report: SolveReport,
    pub clamped: usize,
    pub floored: usize,
}

/// Per-triangle `div u - s`.
pub fn div_residual(mesh: &Mesh, u: &FieldRt0, s: &FieldP0) -> FieldP0 {
    u.divergence(mesh).zip_map(s, |d, s| d - s)
}

/// A configured simulation. Time-independent sources are projected once.
pub struct Simulation<'a> {
    mesh: &'a Mesh,
    data: &'a PhysicalData,
    config: SchemeConfig,
    static_sources: Option<SourceFields>,
    validation: ValidationReport,
}

impl<'a> Simulation<'a> {
    pub fn new(mesh: &'a Mesh, data: &'a PhysicalData, config: SchemeConfig) -> Result<Self, SchemeError> {
        config.validate()?;
        data.validate()?;
        let validation = validate_source_conditions(data, mesh);
        let static_sources = (!data.time_dependent_sources).then(|| data.project_sources(mesh, 0.0));
        Ok(Simulation {
            mesh,
            data,
            config,
            static_sources,
            validation,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn validation(&self) -> &ValidationReport {
        &self.validation
    }

    pub fn sources(&self, t: f64) -> SourceFields {
        match &self.static_sources {
            Some(s) => s.clone(),
            None => self.data.project_sources(self.mesh, t),
        }
    }

    fn body_force(&self, t: f64) -> VectorFieldP0 {
        project_vector_p0_mean(self.mesh, |x| (self.data.f)(x, t))
    }

    /// Initial state: cell averages of the initial data, and one pressure
    /// solve at `t0` for `p^0`, `u^0`.
    pub fn init(&self) -> Result<SchemeState, SchemeError> {
        let t0 = self.config.t0;
        let c = project_p0_mean(self.mesh, |x| (self.data.c0)(x, t0));
        let theta = project_p0_mean(self.mesh, |x| (self.data.theta0)(x, t0));
        let extra = self
            .data
            .extra_species
            .iter()
            .map(|sp| project_p0_mean(self.mesh, |x| (sp.c0)(x, t0)))
            .collect();
        let src = self.sources(t0);
        let flow = self.flow_update(0, &c, &theta, &src.s, t0)?;
        Ok(SchemeState {
            step: 0,
            time: t0,
            c,
            theta,
            p: flow.p,
            u: flow.u,
            extra,
        })
    }

    /// Steps 3-5: mobility, pressure, velocity.
    pub fn flow_update(&self, step: usize, c: &FieldP0, theta: &FieldP0, s: &FieldP0, t: f64) -> Result<FlowUpdate, SchemeError> {
        let mesh = self.mesh;
        let integral = s.integral(mesh);
        if integral.abs() > compatibility_tolerance(mesh, s) {
            return Err(SchemeError::InadmissibleData(format!(
                "fluid source has nonzero integral {integral:e}; no-flux boundaries require zero"
            )));
        }
        let kappa = kappa_eval(self.data, c, theta)?;
        let op_err = |stage| move |source| SchemeError::Operator { step, stage, source };
        let stiffness = assemble_pressure_matrix(mesh, &kappa.kappa, self.data.kappa_inf).map_err(op_err(Stage::Pressure))?;
        let f = self.body_force(t);
        let rhs = pressure_rhs(mesh, &f, s);
        let (mut p, report) =
            solve_spd_semidefinite(&stiffness, &rhs, &self.config.pressure_solver).map_err(|source| SchemeError::Solver {
                step,
                stage: Stage::Pressure,
                source,
            })?;
        if !report.converged {
            return Err(SchemeError::NotConverged {
                step,
                stage: Stage::Pressure,
                residual: report.relative_residual,
            });
        }
        let mut p_field = FieldP1nc {
            dofs: std::mem::take(&mut p),
        };
        let mean = p_field.integral(mesh) / mesh.area();
        p_field.dofs.iter_mut().for_each(|v| *v -= mean);

        let grad = grad_h(mesh, &p_field);
        let w = VectorFieldP0 {
            values: f
                .values
                .iter()
                .zip(&grad.values)
                .zip(&kappa.kappa.values)
                .map(|((fk, gk), kk)| *fk - *kk * *gk)
                .collect(),
        };
        let u = match self.config.velocity {
            VelocityReconstruction::MixedHybrid => mixed_hybrid_fluxes(mesh, &w, s),
            VelocityReconstruction::L2Projection => {
                l2_project_rt0_p0(mesh, &w, &self.config.pressure_solver)
                    .map_err(|source| SchemeError::Field {
                        step,
                        stage: Stage::Velocity,
                        source,
                    })?
                    .0
            }
        };
        Ok(FlowUpdate {
            p: p_field,
            u,
            pressure_report: report,
            clamped: kappa.clamped_c + kappa.clamped_theta,
            floored: kappa.floored,
            kappa: kappa.kappa,
        })
    }

    fn transport(
        &self,
        step: usize,
        stage: Stage,
        u: &FieldRt0,
        diffusion: f64,
        reaction: &FieldP0,
        rhs: Vec<f64>,
    ) -> Result<(FieldP0, SolveReport), SchemeError> {
        let a = assemble_transport_matrix(self.mesh, u, diffusion, reaction, self.config.k).map_err(|source| SchemeError::Operator {
            step,
            stage,
            source,
        })?;
        let (x, report) = solve(&a, &rhs, &self.config.transport_solver).map_err(|source| SchemeError::Solver { step, stage, source })?;
        if !report.converged {
            return Err(SchemeError::NotConverged {
                step,
                stage,
                residual: report.relative_residual,
            });
        }
        Ok((FieldP0 { values: x }, report))
    }

    /// Advances `state` by one time step. The input is left untouched on error.
    pub fn step(&self, state: &SchemeState) -> Result<(SchemeState, StepRecord), SchemeError> {
        let n1 = state.step + 1;
        let t1 = self.config.time(n1);
        let k = self.config.k;
        let src = self.sources(t1);
        let data = self.data;

        let reaction_c = src.s.map(|s| s + data.lambda);
        let rhs_c: Vec<f64> = state.c.values.iter().zip(&src.s_c.values).map(|(c, sc)| c / k + sc).collect();
        let (c, rep_c) = self.transport(n1, Stage::Concentration, &state.u, data.d_c, &reaction_c, rhs_c)?;

        let rhs_t: Vec<f64> = state
            .theta
            .values
            .iter()
            .zip(src.s_theta.values.iter().zip(&src.s.values))
            .map(|(th, (st, s))| th / k - st + s * data.theta_star)
            .collect();
        let (theta, rep_t) = self.transport(n1, Stage::Temperature, &state.u, data.d_theta, &src.s, rhs_t)?;

        let mut extra = Vec::with_capacity(state.extra.len());
        for (i, (sp, old)) in data.extra_species.iter().zip(&state.extra).enumerate() {
            let reaction = src.s.map(|s| s + sp.lambda);
            let rhs: Vec<f64> = old.values.iter().zip(&src.extra_s_c[i].values).map(|(c, sc)| c / k + sc).collect();
            extra.push(self.transport(n1, Stage::Species(i), &state.u, data.d_c, &reaction, rhs)?.0);
        }

        let flow = self.flow_update(n1, &c, &theta, &src.s, t1)?;
        let next = SchemeState {
            step: n1,
            time: t1,
            c,
            theta,
            p: flow.p.clone(),
            u: flow.u.clone(),
            extra,
        };
        let record = StepRecord::measure(self, &next, &src.s, &flow, [rep_c, rep_t]);
        Ok((next, record))
    }

    /// Runs all configured steps from `state`, calling `callback` after each.
    pub fn run_from(
        &self,
        mut state: SchemeState,
        mut callback: impl FnMut(&SchemeState, &StepRecord),
    ) -> Result<(SchemeState, TimeSeries), SchemeError> {
        let mut series = TimeSeries::default();
        while state.step < self.config.n_steps {
            let (next, mut record) = self.step(&state)?;
            series.push(&mut record, self.config.k);
            callback(&next, &record);
            state = next;
        }
        Ok((state, series))
    }

    pub fn run(&self, callback: impl FnMut(&SchemeState, &StepRecord)) -> Result<(SchemeState, TimeSeries), SchemeError> {
        self.run_from(self.init()?, callback)
    }
}

/// Mixed-hybrid RT0 fluxes for `u = w + (s_K/2)(x - x_G)` on each triangle,
/// where `w` is piecewise constant. Interior fluxes average the two one-sided
/// values (they agree when the pressure equation is solved exactly);
/// boundary fluxes are zero.
pub fn mixed_hybrid_fluxes(mesh: &Mesh, w: &VectorFieldP0, s: &FieldP0) -> FieldRt0 {
    let tris = mesh.triangles();
    let fluxes = mesh
        .edges()
        .iter()
        .map(|e| match e.l() {
            Some(l) => {
                let k = e.k();
                let from_k = w.values[k].dot(e.normal) + s.values[k] * tris[k].area / (3.0 * e.length);
                let from_l = w.values[l].dot(e.normal) - s.values[l] * tris[l].area / (3.0 * e.length);
                0.5 * (from_k + from_l)
            }
            None => 0.0,
        })
        .collect();
    FieldRt0 { fluxes }
}

pub fn init_state(mesh: &Mesh, data: &PhysicalData, config: &SchemeConfig) -> Result<SchemeState, SchemeError> {
    Simulation::new(mesh, data, config.clone())?.init()
}

pub fn step(
    state: &SchemeState,
    mesh: &Mesh,
    data: &PhysicalData,
    config: &SchemeConfig,
) -> Result<(SchemeState, StepRecord), SchemeError> {
    Simulation::new(mesh, data, config.clone())?.step(state)
}

pub fn run(
    mesh: &Mesh,
    data: &PhysicalData,
    config: &SchemeConfig,
    callback: impl FnMut(&SchemeState, &StepRecord),
) -> Result<(SchemeState, TimeSeries), SchemeError> {
    Simulation::new(mesh, data, config.clone())?.run(callback)
}
