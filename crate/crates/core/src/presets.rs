//! Named space-time data used for forcing terms and targets.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::domain::{sample_function, Mesh, SpaceTimeField, TimeAxis};
use crate::error::{Error, Result};
use crate::io::read_field_binary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Zero {},
    Constant {
        value: f64,
    },
    /// `amplitude * prod_a sin(modes[a] pi xhat_a) * poly(t)`, `xhat` the
    /// coordinate rescaled to `[0, 1]`.
    Sine {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        modes: Vec<u32>,
        /// Polynomial coefficients in `t`, lowest degree first.
        #[serde(default = "unit_poly")]
        time_poly: Vec<f64>,
    },
    /// `amplitude * exp(-|x - center|^2 / (2 width^2)) * poly(t)`
    Gaussian {
        #[serde(default = "one")]
        amplitude: f64,
        center: Vec<f64>,
        width: f64,
        #[serde(default = "unit_poly")]
        time_poly: Vec<f64>,
    },
    /// A binary field written by [`crate::io::write_field_binary`].
    File {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

fn unit_poly() -> Vec<f64> {
    vec![1.0]
}

fn poly(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

impl FieldSpec {
    pub fn sample(&self, mesh: &Mesh, time: &TimeAxis) -> Result<SpaceTimeField> {
        let dim = mesh.dim();
        match self {
            FieldSpec::Zero {} => Ok(SpaceTimeField::zeros(mesh.interior_len(), time.steps())),
            FieldSpec::Constant { value } => sample_function(mesh, time, |_, _| *value),
            FieldSpec::Sine {
                amplitude,
                modes,
                time_poly,
            } => {
                let modes = if modes.is_empty() {
                    vec![1; dim]
                } else {
                    modes.clone()
                };
                if modes.len() != dim {
                    return Err(Error::InvalidArgument(format!(
                        "sine preset needs {dim} modes, got {}",
                        modes.len()
                    )));
                }
                let bounds = mesh.bounds();
                sample_function(mesh, time, |x, t| {
                    let space: f64 = (0..dim)
                        .map(|a| {
                            let (lo, hi) = bounds[a];
                            (modes[a] as f64 * PI * (x[a] - lo) / (hi - lo)).sin()
                        })
                        .product();
                    amplitude * space * poly(time_poly, t)
                })
            }
            FieldSpec::Gaussian {
                amplitude,
                center,
                width,
                time_poly,
            } => {
                if center.len() != dim {
                    return Err(Error::InvalidArgument(format!(
                        "gaussian centre needs {dim} coordinates, got {}",
                        center.len()
                    )));
                }
                if width.is_nan() || *width <= 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "gaussian width must be positive, got {width}"
                    )));
                }
                sample_function(mesh, time, |x, t| {
                    let r2: f64 = (0..dim).map(|a| (x[a] - center[a]).powi(2)).sum();
                    amplitude * (-r2 / (2.0 * width * width)).exp() * poly(time_poly, t)
                })
            }
            FieldSpec::File { path } => {
                let (meta, field) = read_field_binary(path)?;
                if meta.interior_dims != mesh.interior_dims() || meta.steps != time.steps() {
                    return Err(Error::ShapeMismatch(format!(
                        "{} has interior {:?} and {} steps, run uses {:?} and {}",
                        path.display(),
                        meta.interior_dims,
                        meta.steps,
                        mesh.interior_dims(),
                        time.steps()
                    )));
                }
                Ok(field)
            }
        }
    }
}
