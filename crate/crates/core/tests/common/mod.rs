#![allow(dead_code)]

use homctl_core::{
    ControlProblem, EffectiveConstants, FieldSpec, HomogenizedCoefficients, Mesh, RegionMask,
    SolverOptions, TimeAxis,
};

pub fn tight() -> SolverOptions {
    SolverOptions {
        linear_tol: 1e-13,
        ..Default::default()
    }
}

pub fn gaussian() -> FieldSpec {
    FieldSpec::Gaussian {
        amplitude: 10.0,
        center: vec![0.35, 0.5],
        width: 0.12,
        time_poly: vec![1.0, 1.0],
    }
}

pub fn sine() -> FieldSpec {
    FieldSpec::Sine {
        amplitude: 1.0,
        modes: vec![],
        time_poly: vec![1.0],
    }
}

/// 2D unit square, gaussian source, sine target, control on the middle box,
/// constants of `n = 3`, `C0 = 1`.
pub fn smoke_problem(nodes: usize, steps: usize, weight: f64) -> ControlProblem {
    let coeffs = HomogenizedCoefficients::new(3, 1.0).unwrap();
    with_constants(nodes, steps, weight, EffectiveConstants::from(&coeffs))
}

pub fn with_constants(
    nodes: usize,
    steps: usize,
    weight: f64,
    coeffs: EffectiveConstants,
) -> ControlProblem {
    let mesh = Mesh::unit(2, nodes).unwrap();
    let time = TimeAxis::new(1.0, steps).unwrap();
    let f = gaussian().sample(&mesh, &time).unwrap();
    let ut = sine().sample(&mesh, &time).unwrap();
    let omega = RegionMask::from_box(&mesh, &[0.25, 0.25], &[0.75, 0.75]).unwrap();
    ControlProblem::new(mesh, time, f, ut, omega, weight, coeffs).unwrap()
}

pub fn orders(sizes: &[f64], errors: &[f64]) -> Vec<f64> {
    homctl_core::manufactured::observed_orders(sizes, errors)
}
