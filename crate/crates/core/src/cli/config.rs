//! TOML run configuration. See the README for the grammar.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::linsolve::{SolverConfig, SolverMethod};
use crate::mesh::io::read_mesh;
use crate::mesh::{generate_equilateral_mesh, uniform_refine, BuildOptions, Mesh, MeshError, Point};
use crate::physics::{constant_vector, DecayChain, PhysicalData, ScalarFn, ViscosityModel};
use crate::scheme::{SchemeConfig, VelocityReconstruction};
use crate::verification::{build_mms_case, mms_template, ConvergenceConfig, MmsCase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Physical,
    Mms,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Mode,
    pub mesh: Option<MeshSpec>,
    #[serde(default)]
    pub physics: PhysicsSpec,
    pub chain: Option<ChainSpec>,
    #[serde(default)]
    pub scheme: SchemeSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub mms: MmsSpec,
    /// Directory of the config file; relative paths are resolved against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub file: Option<PathBuf>,
    /// Only `"rhombus"`: `rows x cols` cells of two equilateral triangles.
    pub generator: Option<String>,
    #[serde(default = "one")]
    pub rows: usize,
    #[serde(default = "one")]
    pub cols: usize,
    /// Edge length of the generated triangles.
    #[serde(default = "unit")]
    pub side: f64,
    #[serde(default)]
    pub refine: usize,
    #[serde(default)]
    pub allow_right_angles: bool,
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

/// A bare number or a shaped profile.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ProfileSpec {
    Value(f64),
    Shaped(Profile),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// `background + amplitude exp(-|x - center|^2 / width^2)`.
    GaussianBump {
        #[serde(default)]
        background: f64,
        amplitude: f64,
        center: [f64; 2],
        width: f64,
    },
    /// `inside` on the axis-aligned box `[lower, upper]`, `outside` elsewhere.
    Box {
        inside: f64,
        #[serde(default)]
        outside: f64,
        lower: [f64; 2],
        upper: [f64; 2],
    },
}

impl ProfileSpec {
    pub fn to_fn(&self) -> ScalarFn {
        match *self {
            ProfileSpec::Value(value) | ProfileSpec::Shaped(Profile::Constant { value }) => Arc::new(move |_, _| value),
            ProfileSpec::Shaped(Profile::GaussianBump {
                background,
                amplitude,
                center,
                width,
            }) => {
                let c = Point::new(center[0], center[1]);
                Arc::new(move |x: Point, _| {
                    let d = x - c;
                    background + amplitude * (-d.dot(d) / (width * width)).exp()
                })
            }
            ProfileSpec::Shaped(Profile::Box {
                inside,
                outside,
                lower,
                upper,
            }) => Arc::new(move |x: Point, _| {
                if (lower[0]..=upper[0]).contains(&x.x) && (lower[1]..=upper[1]).contains(&x.y) {
                    inside
                } else {
                    outside
                }
            }),
        }
    }

    fn validate(&self, name: &str) -> Result<(), String> {
        let ok = match self {
            ProfileSpec::Value(v) | ProfileSpec::Shaped(Profile::Constant { value: v }) => v.is_finite(),
            ProfileSpec::Shaped(Profile::GaussianBump {
                background,
                amplitude,
                center,
                width,
            }) => [*background, *amplitude, center[0], center[1]].iter().all(|v| v.is_finite()) && *width > 0.0,
            ProfileSpec::Shaped(Profile::Box {
                inside,
                outside,
                lower,
                upper,
            }) => {
                [*inside, *outside, lower[0], lower[1], upper[0], upper[1]]
                    .iter()
                    .all(|v| v.is_finite())
                    && lower[0] <= upper[0]
                    && lower[1] <= upper[1]
            }
        };
        if ok {
            Ok(())
        } else {
            Err(format!("physics.{name}: invalid profile parameters"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsSpec {
    pub d_c: f64,
    pub d_theta: f64,
    pub lambda: f64,
    pub theta_star: f64,
    pub theta_minus: f64,
    pub theta_plus: f64,
    pub kappa_inf: f64,
    pub mu0: f64,
    pub mobility_ratio: f64,
    pub permeability: f64,
    pub s: ProfileSpec,
    pub s_c: ProfileSpec,
    pub s_theta: ProfileSpec,
    pub f: [f64; 2],
    pub c0: ProfileSpec,
    pub theta0: ProfileSpec,
    pub source_mean_correction: bool,
}

impl Default for PhysicsSpec {
    fn default() -> Self {
        let d = PhysicalData::default();
        PhysicsSpec {
            d_c: d.d_c,
            d_theta: d.d_theta,
            lambda: d.lambda,
            theta_star: d.theta_star,
            theta_minus: d.theta_minus,
            theta_plus: d.theta_plus,
            kappa_inf: d.kappa_inf,
            mu0: d.viscosity.mu0,
            mobility_ratio: d.viscosity.mobility_ratio,
            permeability: d.viscosity.permeability,
            s: ProfileSpec::Value(0.0),
            s_c: ProfileSpec::Value(0.0),
            s_theta: ProfileSpec::Value(0.0),
            f: [0.0, 0.0],
            c0: ProfileSpec::Value(0.5),
            theta0: ProfileSpec::Value(1.0),
            source_mean_correction: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub lambdas: Vec<f64>,
    pub branching: Vec<f64>,
    /// Per-species sources; default: `physics.s_c` for the first, zero for the rest.
    pub sources: Option<Vec<ProfileSpec>>,
    /// Per-species initial data; default: `physics.c0` for the first, zero for the rest.
    pub initial: Option<Vec<ProfileSpec>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeSpec {
    pub final_time: f64,
    pub steps: Option<usize>,
    pub k: Option<f64>,
    pub velocity: VelocityReconstruction,
}

impl Default for SchemeSpec {
    fn default() -> Self {
        SchemeSpec {
            final_time: 1.0,
            steps: None,
            k: None,
            velocity: VelocityReconstruction::MixedHybrid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverEntry {
    pub method: Option<SolverMethod>,
    pub rel_tolerance: Option<f64>,
    pub abs_tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
}

impl SolverEntry {
    fn apply(&self, mut base: SolverConfig) -> SolverConfig {
        if let Some(m) = self.method {
            base.method = m;
        }
        if let Some(t) = self.rel_tolerance {
            base.rel_tolerance = t;
        }
        if let Some(t) = self.abs_tolerance {
            base.abs_tolerance = t;
        }
        if self.max_iterations.is_some() {
            base.max_iterations = self.max_iterations;
        }
        base
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub transport: Option<SolverEntry>,
    pub pressure: Option<SolverEntry>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// VTK snapshot every this many steps (0: initial and final state only).
    pub vtk_every: usize,
    pub monitors: bool,
    pub checkpoint: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: PathBuf::from("out"),
            vtk_every: 0,
            monitors: true,
            checkpoint: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MmsSpec {
    pub case: String,
    pub levels: usize,
    /// The base rhombus has `2 base_cells^2` triangles.
    pub base_cells: usize,
    pub base_steps: usize,
    pub final_time: f64,
}

impl Default for MmsSpec {
    fn default() -> Self {
        MmsSpec {
            case: "default".into(),
            levels: 4,
            base_cells: 4,
            base_steps: 8,
            final_time: 0.5,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, String> {
        let mut config: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        config.base_dir = base_dir.to_path_buf();
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), String> {
        if let Some(mesh) = &self.mesh {
            match (&mesh.file, &mesh.generator) {
                (Some(_), Some(_)) => return Err("mesh: give either file or generator, not both".into()),
                (None, None) => return Err("mesh: give a file or a generator".into()),
                (None, Some(g)) if g != "rhombus" => return Err(format!("mesh.generator: unknown generator '{g}' (known: rhombus)")),
                _ => {}
            }
            if mesh.rows == 0 || mesh.cols == 0 || !(mesh.side > 0.0 && mesh.side.is_finite()) {
                return Err("mesh: rows, cols and side must be positive".into());
            }
        } else if self.mode == Mode::Physical {
            return Err("missing [mesh] section".into());
        }
        let p = &self.physics;
        for (name, profile) in [
            ("s", &p.s),
            ("s_c", &p.s_c),
            ("s_theta", &p.s_theta),
            ("c0", &p.c0),
            ("theta0", &p.theta0),
        ] {
            profile.validate(name)?;
        }
        if !(self.scheme.final_time > 0.0 && self.scheme.final_time.is_finite()) {
            return Err(format!("scheme.final_time must be positive, got {}", self.scheme.final_time));
        }
        if let Some(k) = self.scheme.k {
            if !(k > 0.0 && k.is_finite()) {
                return Err(format!("scheme.k must be positive, got {k}"));
            }
        }
        if self.scheme.steps == Some(0) {
            return Err("scheme.steps must be at least 1".into());
        }
        if self.mode == Mode::Mms {
            if self.mms.levels < 3 {
                return Err(format!("mms.levels must be at least 3, got {}", self.mms.levels));
            }
            if self.mms.base_cells == 0 || self.mms.base_steps == 0 {
                return Err("mms.base_cells and mms.base_steps must be positive".into());
            }
        }
        Ok(())
    }

    /// The step count: `steps`, or `final_time / k` rounded (which must then
    /// be an integer up to round-off), or 100.
    pub fn n_steps(&self) -> Result<usize, String> {
        match (self.scheme.steps, self.scheme.k) {
            (Some(n), None) => Ok(n),
            (None, None) => Ok(100),
            (n, Some(k)) => {
                let ratio = self.scheme.final_time / k;
                let rounded = ratio.round();
                if (ratio - rounded).abs() > 1e-9 * ratio || rounded < 1.0 {
                    return Err(format!("scheme.k = {k} does not divide final_time = {}", self.scheme.final_time));
                }
                let rounded = rounded as usize;
                match n {
                    Some(n) if n != rounded => Err(format!("scheme.steps = {n} disagrees with final_time / k = {rounded}")),
                    _ => Ok(rounded),
                }
            }
        }
    }

    pub fn scheme_config(&self) -> Result<SchemeConfig, String> {
        let mut config = SchemeConfig::new(self.scheme.final_time, self.n_steps()?);
        config.velocity = self.scheme.velocity;
        if let Some(t) = &self.solver.transport {
            config.transport_solver = t.apply(config.transport_solver);
        }
        if let Some(p) = &self.solver.pressure {
            config.pressure_solver = p.apply(config.pressure_solver);
        }
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }

    pub fn convergence_config(&self) -> Result<ConvergenceConfig, String> {
        let scheme = self.scheme_config()?;
        Ok(ConvergenceConfig {
            levels: self.mms.levels,
            base_steps: self.mms.base_steps,
            transport_solver: scheme.transport_solver,
            pressure_solver: scheme.pressure_solver,
            velocity: scheme.velocity,
            ..ConvergenceConfig::default()
        })
    }

    pub fn mms_case(&self) -> Result<MmsCase, String> {
        build_mms_case(&self.mms.case, &mms_template(), self.mms.final_time).map_err(|e| e.to_string())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// The mesh of `[mesh]`, or the base rhombus of the MMS case.
    pub fn build_mesh(&self) -> Result<Mesh, MeshError> {
        let Some(spec) = &self.mesh else {
            let case = self.mms_case().map_err(MeshError::Parse)?;
            return case.mesh(self.mms.base_cells);
        };
        let mut mesh = match &spec.file {
            Some(file) => read_mesh(
                &self.resolve(file),
                BuildOptions {
                    allow_right_angles: spec.allow_right_angles,
                },
            )?,
            None => generate_equilateral_mesh(spec.rows, spec.cols, spec.side)?,
        };
        for _ in 0..spec.refine {
            mesh = uniform_refine(&mesh);
        }
        Ok(mesh)
    }

    /// Problem data of `[physics]` and `[chain]`.
    pub fn physical_data(&self) -> Result<PhysicalData, String> {
        let p = &self.physics;
        let data = PhysicalData {
            d_c: p.d_c,
            d_theta: p.d_theta,
            lambda: p.lambda,
            theta_star: p.theta_star,
            theta_minus: p.theta_minus,
            theta_plus: p.theta_plus,
            kappa_inf: p.kappa_inf,
            viscosity: ViscosityModel {
                mu0: p.mu0,
                mobility_ratio: p.mobility_ratio,
                theta_star: p.theta_star,
                permeability: p.permeability,
            },
            s: p.s.to_fn(),
            s_c: p.s_c.to_fn(),
            s_theta: p.s_theta.to_fn(),
            f: constant_vector(Point::new(p.f[0], p.f[1])),
            c0: p.c0.to_fn(),
            theta0: p.theta0.to_fn(),
            source_mean_correction: p.source_mean_correction,
            ..PhysicalData::default()
        };
        let data = match &self.chain {
            None => data,
            Some(chain) => {
                let decay = DecayChain::new(chain.lambdas.clone(), chain.branching.clone()).map_err(|e| format!("chain: {e}"))?;
                let n = decay.len();
                let per_species = |given: &Option<Vec<ProfileSpec>>, first: &ProfileSpec, name: &str| -> Result<Vec<ScalarFn>, String> {
                    match given {
                        Some(list) if list.len() != n => Err(format!("chain.{name}: expected {n} entries, got {}", list.len())),
                        Some(list) => Ok(list.iter().map(ProfileSpec::to_fn).collect()),
                        None => Ok((0..n)
                            .map(|i| if i == 0 { first.to_fn() } else { ProfileSpec::Value(0.0).to_fn() })
                            .collect()),
                    }
                };
                let sources = per_species(&chain.sources, &p.s_c, "sources")?;
                let initial = per_species(&chain.initial, &p.c0, "initial")?;
                data.with_chain(decay, sources, initial).map_err(|e| format!("chain: {e}"))?
            }
        };
        data.validate().map_err(|e| format!("physics: {e}"))?;
        Ok(data)
    }

    /// Output directory, resolved against the config directory.
    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output.dir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, String> {
        RunConfig::parse(text, Path::new("/tmp"))
    }

    #[test]
    fn minimal_config() {
        let c = parse("[mesh]\ngenerator = \"rhombus\"\nrows = 2\ncols = 3\nside = 0.5\n").unwrap();
        assert_eq!(c.mode, Mode::Physical);
        assert_eq!(c.n_steps().unwrap(), 100);
        let mesh = c.build_mesh().unwrap();
        assert_eq!(mesh.n_triangles(), 12);
        c.physical_data().unwrap();
    }

    #[test]
    fn profiles() {
        let c = parse(
            r#"
[mesh]
generator = "rhombus"
[physics]
c0 = { kind = "gaussian-bump", amplitude = 0.5, center = [0.5, 0.2], width = 0.1 }
s_c = { kind = "box", inside = 0.3, lower = [0.0, 0.0], upper = [0.1, 0.1] }
theta0 = 1.5
theta_plus = 2.0
"#,
        )
        .unwrap();
        let d = c.physical_data().unwrap();
        assert_eq!((d.c0)(Point::new(0.5, 0.2), 0.0), 0.5);
        assert_eq!((d.s_c)(Point::new(0.05, 0.05), 0.0), 0.3);
        assert_eq!((d.s_c)(Point::new(0.5, 0.05), 0.0), 0.0);
        assert_eq!((d.theta0)(Point::new(0.5, 0.05), 0.0), 1.5);
    }

    #[test]
    fn step_count_from_k() {
        let c = parse("[mesh]\ngenerator = \"rhombus\"\n[scheme]\nfinal_time = 1.0\nk = 0.25\n").unwrap();
        assert_eq!(c.n_steps().unwrap(), 4);
        let c = parse("[mesh]\ngenerator = \"rhombus\"\n[scheme]\nfinal_time = 1.0\nk = 0.3\n").unwrap();
        assert!(c.n_steps().is_err());
        let c = parse("[mesh]\ngenerator = \"rhombus\"\n[scheme]\nfinal_time = 1.0\nk = 0.25\nsteps = 5\n").unwrap();
        assert!(c.n_steps().is_err());
    }

    #[test]
    fn errors_name_the_problem() {
        let e = parse("[mesh]\ngenerator = \"rhombus\"\nbogus = 1\n").unwrap_err();
        assert!(e.contains("bogus"), "{e}");
        let e = parse("[physics]\nd_c = 1.0\n").unwrap_err();
        assert!(e.contains("[mesh]"), "{e}");
        let e = parse("[mesh]\ngenerator = \"square\"\n").unwrap_err();
        assert!(e.contains("square"), "{e}");
        let e = parse("[mesh]\ngenerator = \"rhombus\"\n[physics]\nd_c = \"x\"\n").unwrap_err();
        assert!(e.contains("line"), "{e}");
    }

    #[test]
    fn chain_sets_the_coupled_rate() {
        let c = parse("[mesh]\ngenerator = \"rhombus\"\n[chain]\nlambdas = [0.5, 0.2]\nbranching = [0.0, 1.0]\n").unwrap();
        let d = c.physical_data().unwrap();
        assert_eq!(d.lambda, 0.5);
        assert_eq!(d.extra_species.len(), 1);
        let c = parse("[mesh]\ngenerator = \"rhombus\"\n[chain]\nlambdas = [0.5, 0.2]\nbranching = [0.0, 1.0]\nsources = [0.0]\n").unwrap();
        assert!(c.physical_data().unwrap_err().contains("sources"));
    }

    #[test]
    fn mms_mode_without_mesh() {
        let c = parse("mode = \"mms\"\n[mms]\nlevels = 3\n").unwrap();
        assert_eq!(c.build_mesh().unwrap().n_triangles(), 32);
        assert_eq!(c.convergence_config().unwrap().levels, 3);
        assert!(parse("mode = \"mms\"\n[mms]\nlevels = 2\n").is_err());
    }
}
