//! Shared fixtures for the criterion benchmarks.

use homctl_core::{ControlProblem, EffectiveConstants, FieldSpec, Mesh, RegionMask, TimeAxis};

/// Square problem with a gaussian source and a sine target.
pub fn fixture(nodes_per_axis: usize, steps: usize) -> ControlProblem {
    let mesh = Mesh::unit(2, nodes_per_axis).expect("valid mesh");
    let time = TimeAxis::new(1.0, steps).expect("valid time axis");
    let forcing = FieldSpec::Gaussian {
        amplitude: 1.0,
        center: vec![0.4, 0.5],
        width: 0.1,
        time_poly: vec![1.0],
    }
    .sample(&mesh, &time)
    .expect("finite");
    let target = FieldSpec::Sine {
        amplitude: 1.0,
        modes: vec![],
        time_poly: vec![1.0],
    }
    .sample(&mesh, &time)
    .expect("finite");
    let omega = RegionMask::from_box(&mesh, &[0.25, 0.25], &[0.75, 0.75]).expect("box");
    let coeffs = EffectiveConstants::explicit(4.0 * std::f64::consts::PI, 1.0).expect("positive");
    ControlProblem::new(mesh, time, forcing, target, omega, 1e-2, coeffs).expect("consistent")
}
