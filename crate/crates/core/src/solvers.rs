//! Forward and backward solvers for the homogenized system on a box mesh.
//!
//! State equation, homogeneous Dirichlet data, zero initial value:
//!
//! ```text
//! u_t - Lap u + A (u - B H(u)) = f + chi_w v
//! ```
//!
//! Implicit Euler with the memory recurrence substituted into the step, so
//! each step is one SPD solve with the matrix `I/dt - Lap + A e^{-B dt}`:
//!
//! ```text
//! S u^{k+1} = u^k / dt + f^{k+1} + chi_w v^{k+1} + A B e^{-B dt} H^k
//! H^{k+1}   = e^{-B dt} H^k + mu u^{k+1}
//! ```
//!
//! [`solve_adjoint`] is the reverse sweep of exactly this march against the
//! discrete cost of [`crate::control`], so `N v + chi_w p` is the exact
//! gradient of the discrete cost. [`solve_adjoint_continuous`] discretizes
//! the backward adjoint equation directly and serves as a consistency check.

use std::time::Instant;

use serde::Serialize;

use crate::domain::{ControlProblem, Mesh, SpaceTimeField};
use crate::error::{Error, Result};
use crate::memory::DiscreteHOperator;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative residual target of each linear solve.
    pub linear_tol: f64,
    pub max_linear_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            linear_tol: 1e-10,
            max_linear_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SolveReport {
    pub steps: usize,
    pub max_linear_iterations: usize,
    pub max_linear_residual: f64,
    #[serde(skip)]
    pub wall_seconds: f64,
}

impl SolveReport {
    fn record(&mut self, outcome: CgOutcome) {
        self.steps += 1;
        self.max_linear_iterations = self.max_linear_iterations.max(outcome.iterations);
        self.max_linear_residual = self.max_linear_residual.max(outcome.residual);
    }
}

/// Five-point (resp. three/seven-point) Dirichlet Laplacian of one slice.
pub fn apply_laplacian(mesh: &Mesh, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    laplacian_into(mesh, x, &mut y);
    y
}

fn laplacian_into(mesh: &Mesh, x: &[f64], y: &mut [f64]) {
    y.fill(0.0);
    let dims = mesh.interior_dims();
    for (axis, &h) in mesh.spacing().iter().enumerate() {
        let stride = mesh.stride(axis);
        let m = dims[axis];
        let inv_h2 = 1.0 / (h * h);
        for (i, out) in y.iter_mut().enumerate() {
            let j = (i / stride) % m;
            let left = if j > 0 { x[i - stride] } else { 0.0 };
            let right = if j + 1 < m { x[i + stride] } else { 0.0 };
            *out += (left - 2.0 * x[i] + right) * inv_h2;
        }
    }
}

/// `(1/dt + shift) I - Lap` on the interior nodes.
#[derive(Debug, Clone)]
pub struct EllipticOperator<'a> {
    mesh: &'a Mesh,
    mass: f64,
    diag: f64,
}

impl<'a> EllipticOperator<'a> {
    pub fn new(mesh: &'a Mesh, dt: f64, shift: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "time step must be > 0, got {dt}"
            )));
        }
        if !(shift.is_finite() && shift >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "reaction shift must be >= 0, got {shift}"
            )));
        }
        let mass = 1.0 / dt + shift;
        let diag = mass + mesh.spacing().iter().map(|h| 2.0 / (h * h)).sum::<f64>();
        Ok(Self { mesh, mass, diag })
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    pub fn diagonal(&self) -> f64 {
        self.diag
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        laplacian_into(self.mesh, x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = self.mass * xi - *yi;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    /// Final relative residual `||b - S x|| / ||b||`.
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients for `S x = rhs`, starting from
/// the contents of `x`. `Err` carries the outcome when the iteration cap is
/// hit before reaching `tol`.
pub fn implicit_step_solve(
    op: &EllipticOperator<'_>,
    rhs: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> std::result::Result<CgOutcome, CgOutcome> {
    let n = rhs.len();
    let b_norm = dot(rhs, rhs).sqrt();
    if b_norm == 0.0 {
        x.fill(0.0);
        return Ok(CgOutcome {
            iterations: 0,
            residual: 0.0,
        });
    }
    let inv_diag = 1.0 / op.diagonal();
    let mut r = vec![0.0; n];
    op.apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(rhs) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().map(|ri| ri * inv_diag).collect();
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = dot(&r, &r).sqrt() / b_norm;
    let mut it = 0;
    while res > tol {
        if it == max_iter {
            return Err(CgOutcome {
                iterations: it,
                residual: res,
            });
        }
        op.apply(&p, &mut q);
        let alpha = rz / dot(&p, &q);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag;
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = dot(&r, &r).sqrt() / b_norm;
        it += 1;
    }
    Ok(CgOutcome {
        iterations: it,
        residual: res,
    })
}

fn solve_step(
    op: &EllipticOperator<'_>,
    rhs: &[f64],
    x: &mut [f64],
    opts: &SolverOptions,
    step: usize,
    report: &mut SolveReport,
) -> Result<()> {
    match implicit_step_solve(op, rhs, x, opts.linear_tol, opts.max_linear_iter) {
        Ok(outcome) => {
            report.record(outcome);
            Ok(())
        }
        Err(outcome) => Err(Error::LinearSolve {
            step,
            residual: outcome.residual,
            iterations: outcome.iterations,
        }),
    }
}

#[derive(Debug, Clone)]
pub struct StateSolution {
    pub u: SpaceTimeField,
    /// `H(u)`
    pub hu: SpaceTimeField,
    pub report: SolveReport,
}

/// Marches the state equation forward from `u^0 = 0`.
pub fn solve_state(
    problem: &ControlProblem,
    v: &SpaceTimeField,
    opts: &SolverOptions,
) -> Result<StateSolution> {
    let start = Instant::now();
    v.check_axes(&problem.mesh, &problem.time, "control")?;
    let (a, b) = (problem.coeffs.a, problem.coeffs.b);
    let dt = problem.time.dt();
    let mem = DiscreteHOperator::new(b, dt)?;
    let (decay, mu) = (mem.decay(), mem.weight());
    // A (1 - B mu) = A e^{-B dt} >= 0
    let op = EllipticOperator::new(&problem.mesh, dt, a * decay)?;
    let coupling = a * b * decay;

    let nodes = problem.mesh.interior_len();
    let m = problem.time.steps();
    let mut u = SpaceTimeField::zeros(nodes, m);
    let mut hu = SpaceTimeField::zeros(nodes, m);
    let mut rhs = vec![0.0; nodes];
    let mut x = vec![0.0; nodes];
    let mut report = SolveReport::default();
    let omega = problem.omega.indicator();

    for k in 0..m {
        let (u_k, h_k) = (u.slice(k), hu.slice(k));
        let f = problem.forcing.slice(k + 1);
        let vk = v.slice(k + 1);
        for i in 0..nodes {
            let control = if omega[i] { vk[i] } else { 0.0 };
            rhs[i] = u_k[i] / dt + f[i] + control + coupling * h_k[i];
        }
        x.copy_from_slice(u_k);
        solve_step(&op, &rhs, &mut x, opts, k + 1, &mut report)?;
        u.set_slice(k + 1, &x);
        let h_next: Vec<f64> = hu
            .slice(k)
            .iter()
            .zip(&x)
            .map(|(h, ui)| decay * h + mu * ui)
            .collect();
        hu.set_slice(k + 1, &h_next);
    }
    report.wall_seconds = start.elapsed().as_secs_f64();
    Ok(StateSolution { u, hu, report })
}

/// Exact discrete adjoint of [`solve_state`] for the cost
/// [`crate::control::evaluate_cost`].
pub fn solve_adjoint(
    problem: &ControlProblem,
    state: &StateSolution,
    opts: &SolverOptions,
) -> Result<(SpaceTimeField, SolveReport)> {
    solve_adjoint_weighted(problem, state, 1.0, opts)
}

/// As [`solve_adjoint`] with every tracking term of the cost scaled by
/// `kappa` (the control term is not).
pub fn solve_adjoint_weighted(
    problem: &ControlProblem,
    state: &StateSolution,
    kappa: f64,
    opts: &SolverOptions,
) -> Result<(SpaceTimeField, SolveReport)> {
    let start = Instant::now();
    let (mesh, time) = (&problem.mesh, &problem.time);
    state.u.check_axes(mesh, time, "state")?;
    state.hu.check_axes(mesh, time, "memory of state")?;
    let (a, b, cw) = (
        problem.coeffs.a,
        problem.coeffs.b,
        problem.coeffs.terminal_weight,
    );
    let dt = time.dt();
    let m = time.steps();
    let nodes = mesh.interior_len();
    let mem = DiscreteHOperator::new(b, dt)?;
    let (decay, mu) = (mem.decay(), mem.weight());
    let op = EllipticOperator::new(mesh, dt, a * decay)?;
    let coupling = a * b * decay;

    // Partial derivatives of the cost with respect to u^k and H^k.
    let mut du = SpaceTimeField::zeros(nodes, m);
    let mut dh = SpaceTimeField::zeros(nodes, m);
    for k in 0..=m {
        let w = time.trapezoid_weight(k);
        let (u, h, ut) = (state.u.slice(k), state.hu.slice(k), problem.target.slice(k));
        let misfit: Vec<f64> = u.iter().zip(ut).map(|(x, y)| x - y).collect();
        let lap = apply_laplacian(mesh, &misfit);
        let terminal = if k == m { 1.0 } else { 0.0 };
        let du_k = du.slice_mut(k);
        for i in 0..nodes {
            let rate = u[i] - b * h[i];
            du_k[i] = kappa * (-w * lap[i] + terminal * misfit[i] + a * w * rate);
        }
        let dh_k = dh.slice_mut(k);
        for i in 0..nodes {
            let rate = u[i] - b * h[i];
            let end = if k == m {
                b * cw * (ut[i] - b * h[i])
            } else {
                0.0
            };
            dh_k[i] = -kappa * (a * b * w * rate + end);
        }
    }
    // Fold the memory dependence of the cost back onto u.
    let explicit = du.add(&mem.apply_transpose(&dh));

    let mut lambda_next = vec![0.0; nodes];
    let mut z = vec![0.0; nodes];
    let mut rhs = vec![0.0; nodes];
    let mut x = vec![0.0; nodes];
    let mut p = SpaceTimeField::zeros(nodes, m);
    let mut report = SolveReport::default();
    for k in (0..=m).rev() {
        if k < m {
            for (zi, li) in z.iter_mut().zip(&lambda_next) {
                *zi = li + decay * *zi;
            }
        }
        let e = explicit.slice(k);
        for i in 0..nodes {
            rhs[i] = e[i] + lambda_next[i] / dt + mu * coupling * z[i];
        }
        solve_step(&op, &rhs, &mut x, opts, k, &mut report)?;
        for (pi, xi) in p.slice_mut(k).iter_mut().zip(&x) {
            *pi = xi / dt;
        }
        lambda_next.copy_from_slice(&x);
    }
    report.wall_seconds = start.elapsed().as_secs_f64();
    Ok((p, report))
}

/// Backward implicit Euler discretization of the continuous adjoint problem
///
/// ```text
/// -p_t - Lap p + A (p - B H*(p)) = -Lap (u - u_T) + A (u - B^2 H*(H(u)) - e^{B(t-T)} u_T(T))
/// p(T) = (u - u_T)(T)
/// ```
///
/// with `H*` from [`crate::memory::apply_h_star`].
pub fn solve_adjoint_continuous(
    problem: &ControlProblem,
    state: &StateSolution,
    opts: &SolverOptions,
) -> Result<(SpaceTimeField, SolveReport)> {
    let start = Instant::now();
    let (mesh, time) = (&problem.mesh, &problem.time);
    state.u.check_axes(mesh, time, "state")?;
    let (a, b) = (problem.coeffs.a, problem.coeffs.b);
    let dt = time.dt();
    let m = time.steps();
    let nodes = mesh.interior_len();
    let mem = DiscreteHOperator::new(b, dt)?;
    let (decay, mu) = (mem.decay(), mem.weight());
    let op = EllipticOperator::new(mesh, dt, a * decay)?;
    let coupling = a * b * decay;

    let hshu = mem.apply_star(&state.hu);
    let target_end = problem.target.slice(m);
    let mut p = SpaceTimeField::zeros(nodes, m);
    let misfit: Vec<f64> = state
        .u
        .slice(m)
        .iter()
        .zip(target_end)
        .map(|(u, z)| u - z)
        .collect();
    p.set_slice(m, &misfit);
    let mut hsp = vec![0.0; nodes];
    let mut rhs = vec![0.0; nodes];
    let mut x = p.slice(m).to_vec();
    let mut report = SolveReport::default();
    for k in (0..m).rev() {
        // H*(p) at k + 1
        for (h, pi) in hsp.iter_mut().zip(p.slice(k + 1)) {
            if k + 1 == m {
                *h = 0.0;
            } else {
                *h = decay * *h + mu * pi;
            }
        }
        let (u, ut) = (state.u.slice(k), problem.target.slice(k));
        let misfit: Vec<f64> = u.iter().zip(ut).map(|(x, y)| x - y).collect();
        let lap = apply_laplacian(mesh, &misfit);
        let tail = (b * (time.t(k) - time.horizon())).exp();
        let next = p.slice(k + 1);
        for i in 0..nodes {
            let source = -lap[i] + a * (u[i] - b * b * hshu.slice(k)[i] - tail * target_end[i]);
            rhs[i] = next[i] / dt + source + coupling * hsp[i];
        }
        solve_step(&op, &rhs, &mut x, opts, k, &mut report)?;
        p.set_slice(k, &x);
    }
    report.wall_seconds = start.elapsed().as_secs_f64();
    Ok((p, report))
}
