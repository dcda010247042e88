use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use homctl_core::control::{FixedPointOptions, GradientOptions};
use homctl_core::{
    ControlProblem, EffectiveConstants, FieldSpec, HomogenizedCoefficients, Mesh, RegionMask,
    SolverOptions, SpaceTimeField, TimeAxis,
};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: Option<MeshConfig>,
    pub time: Option<TimeConfig>,
    #[serde(default)]
    pub physics: PhysicsConfig,
    pub problem: Option<ProblemConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Not echoed into summaries so they do not depend on where they land.
    #[serde(default, skip_serializing)]
    pub output: OutputConfig,
    #[serde(default)]
    pub gradcheck: GradcheckConfig,
    #[serde(default)]
    pub kappa_sweep: KappaConfig,
    #[serde(default)]
    pub mms: MmsConfig,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    #[serde(alias = "d")]
    pub dim: usize,
    /// Nodes per axis including the boundary; one entry applies to every axis.
    pub nodes: Vec<usize>,
    /// `[lo, hi]` per axis; the unit box when absent.
    #[serde(default, rename = "box")]
    pub bounds: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "M")]
    pub steps: usize,
}

/// Either the particle dimension `n` with `C0`, or explicit `A`, `B`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    #[serde(default = "default_n")]
    pub n: u32,
    #[serde(default = "one")]
    pub c0: f64,
    #[serde(rename = "A")]
    pub a: Option<f64>,
    #[serde(rename = "B")]
    pub b: Option<f64>,
}

fn default_n() -> u32 {
    3
}

fn one() -> f64 {
    1.0
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            n: default_n(),
            c0: 1.0,
            a: None,
            b: None,
        }
    }
}

impl PhysicsConfig {
    pub fn constants(&self) -> Result<EffectiveConstants, CliError> {
        match (self.a, self.b) {
            (Some(a), Some(b)) => Ok(EffectiveConstants::explicit(a, b)?),
            (None, None) => Ok(EffectiveConstants::from(&HomogenizedCoefficients::new(
                self.n, self.c0,
            )?)),
            _ => Err(CliError::Config(
                "physics: A and B must be given together".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default = "zero_spec")]
    pub forcing: FieldSpec,
    #[serde(default = "zero_spec")]
    pub target: FieldSpec,
    /// Control applied by solve-state, solve-adjoint, cost and gradcheck.
    #[serde(default = "zero_spec")]
    pub control: FieldSpec,
    /// Control region; the whole domain when absent.
    pub omega: Option<BoxConfig>,
    #[serde(rename = "N")]
    pub control_weight: f64,
}

fn zero_spec() -> FieldSpec {
    FieldSpec::Zero {}
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub linear_tol: f64,
    pub max_linear_iter: usize,
    pub relaxation: f64,
    pub fixed_point_tol: f64,
    pub optimizer_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let lin = SolverOptions::default();
        let fp = FixedPointOptions::default();
        Self {
            linear_tol: lin.linear_tol,
            max_linear_iter: lin.max_linear_iter,
            relaxation: fp.relaxation,
            fixed_point_tol: fp.tol,
            optimizer_tol: GradientOptions::default().tol,
            max_iter: 5000,
        }
    }
}

impl SolverConfig {
    pub fn linear(&self) -> SolverOptions {
        SolverOptions {
            linear_tol: self.linear_tol,
            max_linear_iter: self.max_linear_iter,
        }
    }

    pub fn fixed_point(&self) -> FixedPointOptions {
        FixedPointOptions {
            relaxation: self.relaxation,
            tol: self.fixed_point_tol,
            max_iter: self.max_iter,
        }
    }

    pub fn gradient(&self) -> GradientOptions {
        GradientOptions {
            tol: self.optimizer_tol,
            max_iter: self.max_iter,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Binary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Binary],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradcheckConfig {
    pub lambdas: Vec<f64>,
    /// Largest acceptable error at the best `lambda`.
    pub max_error: Option<f64>,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        Self {
            lambdas: vec![1e-2, 1e-3, 1e-4],
            max_error: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KappaConfig {
    pub kappas: Vec<f64>,
}

impl Default for KappaConfig {
    fn default() -> Self {
        Self {
            kappas: vec![1.0, 10.0, 100.0, 1000.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmsConfig {
    pub dim: usize,
    /// Node counts of the space ladder; `dt = h^2`.
    pub space_nodes: Vec<usize>,
    pub time_nodes: usize,
    pub time_steps: Vec<usize>,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub min_space_order: f64,
    pub min_time_order: f64,
}

impl Default for MmsConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            space_nodes: vec![17, 33, 65],
            time_nodes: 65,
            time_steps: vec![16, 32, 64],
            a: 4.0 * std::f64::consts::PI,
            b: 1.0,
            min_space_order: 1.9,
            min_time_order: 0.9,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn build_mesh(&self) -> Result<Mesh, CliError> {
        let m = self
            .mesh
            .as_ref()
            .ok_or_else(|| CliError::Config("missing mesh block".into()))?;
        let nodes = if m.nodes.len() == 1 {
            vec![m.nodes[0]; m.dim]
        } else {
            m.nodes.clone()
        };
        let bounds = m.bounds.clone().unwrap_or_else(|| vec![(0.0, 1.0); m.dim]);
        Ok(Mesh::new(m.dim, &nodes, &bounds)?)
    }

    pub fn build_time(&self) -> Result<TimeAxis, CliError> {
        let t = self
            .time
            .as_ref()
            .ok_or_else(|| CliError::Config("missing time block".into()))?;
        Ok(TimeAxis::new(t.horizon, t.steps)?)
    }

    /// The control problem and the configured control.
    pub fn build_problem(&self) -> Result<(ControlProblem, SpaceTimeField), CliError> {
        let mesh = self.build_mesh()?;
        let time = self.build_time()?;
        let pc = self
            .problem
            .as_ref()
            .ok_or_else(|| CliError::Config("missing problem block".into()))?;
        let forcing = pc.forcing.sample(&mesh, &time)?;
        let target = pc.target.sample(&mesh, &time)?;
        let control = pc.control.sample(&mesh, &time)?;
        let omega = match &pc.omega {
            Some(b) => RegionMask::from_box(&mesh, &b.lo, &b.hi)?,
            None => RegionMask::full(&mesh),
        };
        let coeffs = self.physics.constants()?;
        let problem = ControlProblem::new(
            mesh,
            time,
            forcing,
            target,
            omega,
            pc.control_weight,
            coeffs,
        )?;
        let control = problem.project_control(&control);
        Ok((problem, control))
    }
}
