//! Manufactured solutions for convergence studies of the state solver.
//!
//! `u*(x, t) = prod_a sin(pi x_a) sin(pi t)` on the unit box, with the
//! forcing chosen so that `u*` solves the limit state equation exactly. The
//! memory of `sin(w t)` is known in closed form, so no quadrature enters the
//! forcing.

use std::f64::consts::PI;

use serde::Serialize;

use crate::cell::EffectiveConstants;
use crate::domain::{l2_slice, sample_function, ControlProblem, Mesh, RegionMask, TimeAxis};
use crate::error::Result;
use crate::solvers::{solve_state, SolverOptions};

/// `int_0^t e^{-B(t-s)} sin(w s) ds`
pub fn memory_of_sine(b: f64, w: f64, t: f64) -> f64 {
    (b * (w * t).sin() - w * (w * t).cos() + w * (-b * t).exp()) / (b * b + w * w)
}

fn profile(dim: usize, x: &[f64]) -> f64 {
    x[..dim].iter().map(|xi| (PI * xi).sin()).product()
}

/// Problem whose uncontrolled state is the manufactured solution.
pub fn manufactured_problem(
    dim: usize,
    nodes_per_axis: usize,
    steps: usize,
    a: f64,
    b: f64,
) -> Result<ControlProblem> {
    let mesh = Mesh::unit(dim, nodes_per_axis)?;
    let time = TimeAxis::new(1.0, steps)?;
    let lap = dim as f64 * PI * PI;
    let forcing = sample_function(&mesh, &time, |x, t| {
        let s = (PI * t).sin();
        let ds = PI * (PI * t).cos();
        profile(dim, x) * (ds + lap * s + a * (s - b * memory_of_sine(b, PI, t)))
    })?;
    let target = sample_function(&mesh, &time, |_, _| 0.0)?;
    let omega = RegionMask::full(&mesh);
    ControlProblem::new(
        mesh,
        time,
        forcing,
        target,
        omega,
        1.0,
        EffectiveConstants::explicit(a, b)?,
    )
}

/// `max_k |u^k - u*(t_k)|_{L2}`
pub fn manufactured_error(problem: &ControlProblem, opts: &SolverOptions) -> Result<f64> {
    let dim = problem.mesh.dim();
    let exact = sample_function(&problem.mesh, &problem.time, |x, t| {
        profile(dim, x) * (PI * t).sin()
    })?;
    let state = solve_state(problem, &problem.zero_field(), opts)?;
    let err = state.u.sub(&exact);
    Ok((0..err.num_slices())
        .map(|k| l2_slice(&problem.mesh, &err, k))
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LadderRow {
    pub h: f64,
    pub dt: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Ladder {
    pub rows: Vec<LadderRow>,
    /// Observed orders between consecutive rows in the refined parameter.
    pub orders: Vec<f64>,
}

/// `log(e_i / e_{i+1}) / log(s_i / s_{i+1})`
pub fn observed_orders(sizes: &[f64], errors: &[f64]) -> Vec<f64> {
    sizes
        .windows(2)
        .zip(errors.windows(2))
        .map(|(s, e)| (e[0] / e[1]).ln() / (s[0] / s[1]).ln())
        .collect()
}

/// Space refinement with `dt = h^2` over meshes with the given node counts.
pub fn space_ladder(
    dim: usize,
    nodes: &[usize],
    a: f64,
    b: f64,
    opts: &SolverOptions,
) -> Result<Ladder> {
    let mut rows = Vec::new();
    for &n in nodes {
        let h = 1.0 / (n - 1) as f64;
        let steps = (n - 1) * (n - 1);
        let p = manufactured_problem(dim, n, steps, a, b)?;
        rows.push(LadderRow {
            h,
            dt: p.time.dt(),
            error: manufactured_error(&p, opts)?,
        });
    }
    let sizes: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let errors: Vec<f64> = rows.iter().map(|r| r.error).collect();
    Ok(Ladder {
        orders: observed_orders(&sizes, &errors),
        rows,
    })
}

/// Time refinement on a fixed mesh.
pub fn time_ladder(
    dim: usize,
    nodes: usize,
    steps: &[usize],
    a: f64,
    b: f64,
    opts: &SolverOptions,
) -> Result<Ladder> {
    let mut rows = Vec::new();
    for &m in steps {
        let p = manufactured_problem(dim, nodes, m, a, b)?;
        rows.push(LadderRow {
            h: 1.0 / (nodes - 1) as f64,
            dt: p.time.dt(),
            error: manufactured_error(&p, opts)?,
        });
    }
    let sizes: Vec<f64> = rows.iter().map(|r| r.dt).collect();
    let errors: Vec<f64> = rows.iter().map(|r| r.error).collect();
    Ok(Ladder {
        orders: observed_orders(&sizes, &errors),
        rows,
    })
}
