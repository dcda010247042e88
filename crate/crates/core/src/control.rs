//! Cost functional, reduced gradient and the optimisation drivers.
//!
//! The discrete cost for a control `v` with state `u` and memory `H = H(u)`:
//!
//! ```text
//! J(v) = 1/2 |u - u_T|_{H1,trap}^2 + 1/2 |(u - u_T)(T)|^2 + N/2 |v|_{step}^2
//!      + Cw/2 |u_T(T) - B H(T)|^2 + A/2 |u - B H|_{trap}^2
//! ```
//!
//! with `Cw = A/B`. `J^kappa` multiplies every term except the control term
//! by `kappa`. Gradients are Riesz representatives in the stepwise pairing,
//! so `grad J = chi (N v + p)` on slices `1..=M` with `p` from
//! [`solve_adjoint_weighted`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::domain::{
    h1_inner_slice, h1_seminorm_spacetime, l2_slice_sq, l2_spacetime, l2_spacetime_sq, l2_stepwise,
    stepwise_inner, ControlProblem, SpaceTimeField,
};
use crate::error::{Error, Result};
use crate::memory::{apply_h, apply_h_star, dh_dt};
use crate::solvers::{solve_adjoint_weighted, solve_state, SolverOptions, StateSolution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub term_grad: f64,
    pub term_final: f64,
    pub term_control: f64,
    pub term_strange_final: f64,
    pub term_strange_rate: f64,
    pub total: f64,
}

impl CostBreakdown {
    fn new(
        term_grad: f64,
        term_final: f64,
        term_control: f64,
        term_strange_final: f64,
        term_strange_rate: f64,
    ) -> Self {
        Self {
            term_grad,
            term_final,
            term_control,
            term_strange_final,
            term_strange_rate,
            total: term_grad + term_final + term_control + term_strange_final + term_strange_rate,
        }
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa.is_finite() && kappa > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "kappa must be positive, got {kappa}"
        )))
    }
}

/// Cost terms from an already computed state.
pub fn cost_from_state(
    problem: &ControlProblem,
    v: &SpaceTimeField,
    state: &StateSolution,
    kappa: f64,
) -> CostBreakdown {
    let (mesh, time) = (&problem.mesh, &problem.time);
    let m = time.steps();
    let (a, b, cw) = (
        problem.coeffs.a,
        problem.coeffs.b,
        problem.coeffs.terminal_weight,
    );
    let misfit = state.u.sub(&problem.target);
    let rate = state.u.lin_comb(1.0, -b, &state.hu);
    let strange_end: Vec<f64> = problem
        .target
        .slice(m)
        .iter()
        .zip(state.hu.slice(m))
        .map(|(ut, h)| ut - b * h)
        .collect();
    let control = problem.project_control(v);
    CostBreakdown::new(
        kappa * 0.5 * h1_seminorm_spacetime(mesh, time, &misfit).powi(2),
        kappa * 0.5 * l2_slice_sq(mesh, misfit.slice(m)),
        0.5 * problem.control_weight * l2_stepwise(mesh, time, &control).powi(2),
        kappa * 0.5 * cw * l2_slice_sq(mesh, &strange_end),
        kappa * 0.5 * a * l2_spacetime_sq(mesh, time, &rate),
    )
}

pub fn evaluate_cost(
    problem: &ControlProblem,
    v: &SpaceTimeField,
    opts: &SolverOptions,
) -> Result<CostBreakdown> {
    evaluate_cost_kappa(problem, v, 1.0, opts)
}

pub fn evaluate_cost_kappa(
    problem: &ControlProblem,
    v: &SpaceTimeField,
    kappa: f64,
    opts: &SolverOptions,
) -> Result<CostBreakdown> {
    check_kappa(kappa)?;
    let state = solve_state(problem, v, opts)?;
    Ok(cost_from_state(problem, v, &state, kappa))
}

#[derive(Debug, Clone)]
pub struct GradientEval {
    pub gradient: SpaceTimeField,
    pub state: StateSolution,
    pub adjoint: SpaceTimeField,
    pub cost: CostBreakdown,
}

pub fn reduced_gradient(
    problem: &ControlProblem,
    v: &SpaceTimeField,
    opts: &SolverOptions,
) -> Result<GradientEval> {
    reduced_gradient_kappa(problem, v, 1.0, opts)
}

pub fn reduced_gradient_kappa(
    problem: &ControlProblem,
    v: &SpaceTimeField,
    kappa: f64,
    opts: &SolverOptions,
) -> Result<GradientEval> {
    check_kappa(kappa)?;
    let state = solve_state(problem, v, opts)?;
    let (adjoint, _) = solve_adjoint_weighted(problem, &state, kappa, opts)?;
    let cost = cost_from_state(problem, v, &state, kappa);
    let gradient = gradient_from_adjoint(problem, v, &adjoint);
    Ok(GradientEval {
        gradient,
        state,
        adjoint,
        cost,
    })
}

fn gradient_from_adjoint(
    problem: &ControlProblem,
    v: &SpaceTimeField,
    adjoint: &SpaceTimeField,
) -> SpaceTimeField {
    problem.project_control(&v.lin_comb(problem.control_weight, 1.0, adjoint))
}

/// Relative optimality residual `|N v + chi p| / max(1, |v|)` (stepwise norm).
pub fn optimality_residual(
    problem: &ControlProblem,
    v: &SpaceTimeField,
    adjoint: &SpaceTimeField,
) -> f64 {
    let g = gradient_from_adjoint(problem, v, adjoint);
    let (mesh, time) = (&problem.mesh, &problem.time);
    l2_stepwise(mesh, time, &g) / l2_stepwise(mesh, time, v).max(1.0)
}

/// `J(v + s d) - J(v) = s * slope + s^2 * curvature / 2` along a fixed
/// direction. Evaluated from residual pairings, so it does not lose digits
/// to cancellation when the change is tiny next to `J`.
#[derive(Debug, Clone, Copy)]
struct RayQuadratic {
    slope: f64,
    curvature: f64,
}

impl RayQuadratic {
    fn change(&self, s: f64) -> f64 {
        s * self.slope + 0.5 * s * s * self.curvature
    }
}

fn ray_quadratic(
    problem: &ControlProblem,
    v: &SpaceTimeField,
    state: &StateSolution,
    d: &SpaceTimeField,
    kappa: f64,
    opts: &SolverOptions,
) -> Result<RayQuadratic> {
    let (mesh, time) = (&problem.mesh, &problem.time);
    let m = time.steps();
    let (a, b, cw) = (
        problem.coeffs.a,
        problem.coeffs.b,
        problem.coeffs.terminal_weight,
    );
    let d = problem.project_control(d);
    let resp = solve_state(&problem.homogeneous(), &d, opts)?;

    let misfit = state.u.sub(&problem.target);
    let rate = state.u.lin_comb(1.0, -b, &state.hu);
    let d_rate = resp.u.lin_comb(1.0, -b, &resp.hu);
    let mut grad_cross = 0.0;
    let mut grad_sq = 0.0;
    for k in 0..=m {
        let w = time.trapezoid_weight(k);
        grad_cross += w * h1_inner_slice(mesh, misfit.slice(k), resp.u.slice(k));
        grad_sq += w * h1_inner_slice(mesh, resp.u.slice(k), resp.u.slice(k));
    }
    let vol = mesh.cell_volume();
    let dot = |x: &[f64], y: &[f64]| vol * x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    let trap_dot = |x: &SpaceTimeField, y: &SpaceTimeField| -> f64 {
        (0..=m)
            .map(|k| time.trapezoid_weight(k) * dot(x.slice(k), y.slice(k)))
            .sum()
    };
    let strange_end: Vec<f64> = problem
        .target
        .slice(m)
        .iter()
        .zip(state.hu.slice(m))
        .map(|(ut, h)| ut - b * h)
        .collect();
    let d_strange_end: Vec<f64> = resp.hu.slice(m).iter().map(|h| -b * h).collect();

    let control = problem.project_control(v);
    let n = problem.control_weight;
    let slope = kappa
        * (grad_cross
            + dot(misfit.slice(m), resp.u.slice(m))
            + cw * dot(&strange_end, &d_strange_end)
            + a * trap_dot(&rate, &d_rate))
        + n * stepwise_inner(mesh, time, &control, &d);
    let curvature = kappa
        * (grad_sq
            + dot(resp.u.slice(m), resp.u.slice(m))
            + cw * dot(&d_strange_end, &d_strange_end)
            + a * trap_dot(&d_rate, &d_rate))
        + n * stepwise_inner(mesh, time, &d, &d);
    Ok(RayQuadratic { slope, curvature })
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub cost: CostBreakdown,
    pub gradient_norm: f64,
    /// Step length (gradient descent) or relaxation (fixed point) used to
    /// reach this iterate; 0 for the initial guess.
    pub step: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeReport {
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
    pub optimality_residual: f64,
    pub converged: bool,
}

impl OptimizeReport {
    pub fn cost_history(&self) -> Vec<f64> {
        self.history.iter().map(|r| r.cost.total).collect()
    }

    pub fn gradient_norm_history(&self) -> Vec<f64> {
        self.history.iter().map(|r| r.gradient_norm).collect()
    }
}

#[derive(Debug, Clone)]
pub struct OptimalTriple {
    pub v: SpaceTimeField,
    pub u: SpaceTimeField,
    pub p: SpaceTimeField,
    pub report: OptimizeReport,
}

#[derive(Debug, Clone, Copy)]
pub struct FixedPointOptions {
    /// Initial relaxation in `(0, 1]`; halved whenever the cost would rise.
    pub relaxation: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            relaxation: 0.5,
            tol: 1e-8,
            max_iter: 500,
        }
    }
}

fn cost_rise_allowed(j: f64) -> f64 {
    1e-12 * j.abs().max(1.0)
}

/// Damped iteration on the coupled optimality system
/// `v <- (1 - theta) v - theta chi p / N`.
///
/// Stops when the undamped update `|v + chi p / N| / max(1, |v|)` is below
/// `tol`, which bounds the optimality residual by `N tol`.
pub fn solve_coupled_fixed_point(
    problem: &ControlProblem,
    fp: &FixedPointOptions,
    opts: &SolverOptions,
) -> Result<OptimalTriple> {
    if !(fp.relaxation > 0.0 && fp.relaxation <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "relaxation must lie in (0, 1], got {}",
            fp.relaxation
        )));
    }
    let (mesh, time) = (&problem.mesh, &problem.time);
    let n = problem.control_weight;
    let mut theta = fp.relaxation;
    let mut v = problem.zero_field();
    let mut eval = reduced_gradient(problem, &v, opts)?;
    let mut history = vec![IterationRecord {
        iteration: 0,
        cost: eval.cost,
        gradient_norm: l2_stepwise(mesh, time, &eval.gradient),
        step: 0.0,
    }];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < fp.max_iter {
        // Undamped update minus the current iterate, i.e. -grad / N.
        let d = eval.gradient.scaled(-1.0 / n);
        let gap = l2_stepwise(mesh, time, &d) / l2_stepwise(mesh, time, &v).max(1.0);
        if gap <= fp.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let ray = ray_quadratic(problem, &v, &eval.state, &d, 1.0, opts)?;
        while ray.change(theta) > cost_rise_allowed(eval.cost.total) {
            theta *= 0.5;
            if theta < 1e-12 {
                break;
            }
        }
        if theta < 1e-12 {
            break;
        }
        v.axpy(theta, &d);
        eval = reduced_gradient(problem, &v, opts)?;
        history.push(IterationRecord {
            iteration: iterations,
            cost: eval.cost,
            gradient_norm: l2_stepwise(mesh, time, &eval.gradient),
            step: theta,
        });
    }
    let residual = optimality_residual(problem, &v, &eval.adjoint);
    Ok(OptimalTriple {
        v,
        u: eval.state.u,
        p: eval.adjoint,
        report: OptimizeReport {
            iterations,
            history,
            optimality_residual: residual,
            converged,
        },
    })
}

#[derive(Debug, Clone, Copy)]
pub struct GradientOptions {
    /// First trial step; `1/N` when `None`.
    pub initial_step: Option<f64>,
    /// Stop once the stepwise norm of the gradient is below this.
    pub tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    pub min_step: f64,
}

impl Default for GradientOptions {
    fn default() -> Self {
        Self {
            initial_step: None,
            tol: 1e-8,
            max_iter: 5000,
            armijo: 1e-4,
            min_step: 1e-14,
        }
    }
}

/// Steepest descent on `J^kappa` with Armijo backtracking. The first trial
/// step of each iteration is the Barzilai-Borwein length `<s, s> / <s, y>`
/// from the previous iterate pair (the configured initial step on the first
/// iteration).
pub fn optimize_gradient(
    problem: &ControlProblem,
    kappa: f64,
    go: &GradientOptions,
    opts: &SolverOptions,
) -> Result<OptimalTriple> {
    check_kappa(kappa)?;
    let (mesh, time) = (&problem.mesh, &problem.time);
    let mut step = go.initial_step.unwrap_or(1.0 / problem.control_weight);
    let mut v = problem.zero_field();
    let mut eval = reduced_gradient_kappa(problem, &v, kappa, opts)?;
    let mut gnorm = l2_stepwise(mesh, time, &eval.gradient);
    let mut history = vec![IterationRecord {
        iteration: 0,
        cost: eval.cost,
        gradient_norm: gnorm,
        step: 0.0,
    }];
    let mut converged = false;
    let mut iterations = 0;
    loop {
        if gnorm <= go.tol {
            converged = true;
            break;
        }
        if iterations >= go.max_iter {
            break;
        }
        iterations += 1;
        let d = eval.gradient.scaled(-1.0);
        let ray = ray_quadratic(problem, &v, &eval.state, &d, kappa, opts)?;
        let mut s = step;
        while ray.change(s) > -go.armijo * s * gnorm * gnorm && s >= go.min_step {
            s *= 0.5;
        }
        if s < go.min_step {
            break;
        }
        v.axpy(s, &d);
        let previous =
            std::mem::replace(&mut eval, reduced_gradient_kappa(problem, &v, kappa, opts)?);
        gnorm = l2_stepwise(mesh, time, &eval.gradient);
        let moved = d.scaled(s);
        let turned = eval.gradient.sub(&previous.gradient);
        let sy = stepwise_inner(mesh, time, &moved, &turned);
        step = if sy > 0.0 {
            stepwise_inner(mesh, time, &moved, &moved) / sy
        } else {
            2.0 * s
        };
        history.push(IterationRecord {
            iteration: iterations,
            cost: eval.cost,
            gradient_norm: gnorm,
            step: s,
        });
    }
    let residual = optimality_residual(problem, &v, &eval.adjoint);
    Ok(OptimalTriple {
        v,
        u: eval.state.u,
        p: eval.adjoint,
        report: OptimizeReport {
            iterations,
            history,
            optimality_residual: residual,
            converged,
        },
    })
}

/// Conjugate gradients on the reduced quadratic `J^kappa`. Hessian-vector
/// products are gradients of the homogeneous problem.
pub fn optimize_cg(
    problem: &ControlProblem,
    kappa: f64,
    tol: f64,
    max_iter: usize,
    opts: &SolverOptions,
) -> Result<OptimalTriple> {
    check_kappa(kappa)?;
    let (mesh, time) = (&problem.mesh, &problem.time);
    let hom = problem.homogeneous();
    let inner = |x: &SpaceTimeField, y: &SpaceTimeField| stepwise_inner(mesh, time, x, y);

    let mut v = problem.zero_field();
    let first = reduced_gradient_kappa(problem, &v, kappa, opts)?;
    let mut history = vec![IterationRecord {
        iteration: 0,
        cost: first.cost,
        gradient_norm: l2_stepwise(mesh, time, &first.gradient),
        step: 0.0,
    }];
    let mut r = first.gradient.scaled(-1.0);
    let mut dir = r.clone();
    let mut rr = inner(&r, &r);
    let mut iterations = 0;
    while rr.sqrt() > tol && iterations < max_iter {
        iterations += 1;
        let hd = reduced_gradient_kappa(&hom, &dir, kappa, opts)?.gradient;
        let curvature = inner(&dir, &hd);
        if curvature <= 0.0 {
            break;
        }
        let alpha = rr / curvature;
        v.axpy(alpha, &dir);
        r.axpy(-alpha, &hd);
        let rr_next = inner(&r, &r);
        dir = r.lin_comb(1.0, rr_next / rr, &dir);
        rr = rr_next;
        history.push(IterationRecord {
            iteration: iterations,
            cost: CostBreakdown::new(f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN),
            gradient_norm: rr.sqrt(),
            step: alpha,
        });
    }
    let last = reduced_gradient_kappa(problem, &v, kappa, opts)?;
    let gnorm = l2_stepwise(mesh, time, &last.gradient);
    if let Some(rec) = history.last_mut() {
        rec.cost = last.cost;
        rec.gradient_norm = gnorm;
    }
    Ok(OptimalTriple {
        report: OptimizeReport {
            iterations,
            history,
            optimality_residual: optimality_residual(problem, &v, &last.adjoint),
            converged: gnorm <= 10.0 * tol,
        },
        v,
        u: last.state.u,
        p: last.adjoint,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct KappaRow {
    pub kappa: f64,
    /// `|u(T) - u_T(T)|`
    pub terminal_misfit: f64,
    /// `|u - u_T|` in the space-time H1 seminorm
    pub grad_misfit: f64,
    /// `|u_T(T) - B H(T)|`
    pub strange_final: f64,
    /// `|dH/dt|` in space-time L2
    pub strange_rate: f64,
    pub control_norm: f64,
    pub cost: Option<CostBreakdown>,
    pub iterations: usize,
    pub converged: bool,
    pub error: Option<String>,
}

/// Minimises `J^kappa` for each `kappa`. A failing entry is reported in its
/// row and the sweep continues.
pub fn kappa_sweep(
    problem: &ControlProblem,
    kappas: &[f64],
    tol: f64,
    max_iter: usize,
    opts: &SolverOptions,
) -> Vec<KappaRow> {
    let (mesh, time) = (&problem.mesh, &problem.time);
    let (b, m) = (problem.coeffs.b, time.steps());
    kappas
        .iter()
        .map(
            |&kappa| match optimize_cg(problem, kappa, tol, max_iter, opts) {
                Ok(sol) => {
                    let hu = apply_h(&sol.u, b, time.dt()).expect("validated rate");
                    let misfit = sol.u.sub(&problem.target);
                    let end: Vec<f64> = problem
                        .target
                        .slice(m)
                        .iter()
                        .zip(hu.slice(m))
                        .map(|(ut, h)| ut - b * h)
                        .collect();
                    let rate = dh_dt(&hu, &sol.u, b).expect("same shape");
                    KappaRow {
                        kappa,
                        terminal_misfit: l2_slice_sq(mesh, misfit.slice(m)).sqrt(),
                        grad_misfit: h1_seminorm_spacetime(mesh, time, &misfit),
                        strange_final: l2_slice_sq(mesh, &end).sqrt(),
                        strange_rate: l2_spacetime(mesh, time, &rate),
                        control_norm: l2_stepwise(mesh, time, &sol.v),
                        cost: sol.report.history.last().map(|r| r.cost),
                        iterations: sol.report.iterations,
                        converged: sol.report.converged,
                        error: None,
                    }
                }
                Err(e) => KappaRow {
                    kappa,
                    terminal_misfit: f64::NAN,
                    grad_misfit: f64::NAN,
                    strange_final: f64::NAN,
                    strange_rate: f64::NAN,
                    control_norm: f64::NAN,
                    cost: None,
                    iterations: 0,
                    converged: false,
                    error: Some(e.to_string()),
                },
            },
        )
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GradcheckRow {
    pub lambda: f64,
    pub finite_difference: f64,
    pub predicted: f64,
    pub rel_error: f64,
}

/// Random direction supported in the control region (slices `1..=M`), unit
/// stepwise norm.
pub fn random_direction(problem: &ControlProblem, seed: u64) -> SpaceTimeField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = problem.zero_field();
    for x in w.as_mut_slice() {
        *x = rng.random_range(-1.0..1.0);
    }
    let w = problem.project_control(&w);
    let norm = l2_stepwise(&problem.mesh, &problem.time, &w);
    w.scaled(1.0 / norm)
}

/// One-sided difference quotients of `J` along a random direction against
/// the adjoint prediction `<grad J(v), w>`. The error is relative unless the
/// prediction is exactly zero, in which case it is absolute.
pub fn gradcheck(
    problem: &ControlProblem,
    v: &SpaceTimeField,
    lambdas: &[f64],
    seed: u64,
    opts: &SolverOptions,
) -> Result<Vec<GradcheckRow>> {
    let w = random_direction(problem, seed);
    let eval = reduced_gradient(problem, v, opts)?;
    let predicted = stepwise_inner(&problem.mesh, &problem.time, &eval.gradient, &w);
    let base = eval.cost.total;
    lambdas
        .iter()
        .map(|&lambda| {
            let shifted = v.lin_comb(1.0, lambda, &w);
            let fd = (evaluate_cost(problem, &shifted, opts)?.total - base) / lambda;
            Ok(GradcheckRow {
                lambda,
                finite_difference: fd,
                predicted,
                rel_error: if predicted == 0.0 {
                    (fd - predicted).abs()
                } else {
                    (fd - predicted).abs() / predicted.abs()
                },
            })
        })
        .collect()
}

/// Max-norm residual of `H*(du_T/dt - B u_T) + u_T - e^{B(t-T)} u_T(T)`,
/// with the time derivative by backward differences (forward at `k = 0`).
pub fn target_identity_check(problem: &ControlProblem) -> Result<f64> {
    let time = &problem.time;
    let (b, dt, m) = (problem.coeffs.b, time.dt(), time.steps());
    let ut = &problem.target;
    let mut psi = SpaceTimeField::zeros_like(ut);
    for k in 0..=m {
        let (lo, hi) = if k == 0 { (0, 1) } else { (k - 1, k) };
        let (prev, next, here) = (ut.slice(lo), ut.slice(hi), ut.slice(k));
        for (i, x) in psi.slice_mut(k).iter_mut().enumerate() {
            *x = (next[i] - prev[i]) / dt - b * here[i];
        }
    }
    let hs = apply_h_star(&psi, b, dt)?;
    let end = ut.slice(m);
    let mut worst = 0.0_f64;
    for k in 0..=m {
        let tail = (b * (time.t(k) - time.horizon())).exp();
        for (i, (&h, &u)) in hs.slice(k).iter().zip(ut.slice(k)).enumerate() {
            worst = worst.max((h + u - tail * end[i]).abs());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyIdentity {
    /// `|u|^2 - B^2 |H(u)|^2`
    pub lhs: f64,
    /// `|dH/dt|^2 + B |H(u)(T)|^2`
    pub rhs: f64,
    pub gap: f64,
}

/// Both sides of the memory energy identity for `u` (trapezoid in time).
pub fn energy_identity_check(
    problem: &ControlProblem,
    u: &SpaceTimeField,
) -> Result<EnergyIdentity> {
    let (mesh, time) = (&problem.mesh, &problem.time);
    u.check_axes(mesh, time, "field")?;
    let b = problem.coeffs.b;
    let h = apply_h(u, b, time.dt())?;
    let rate = dh_dt(&h, u, b)?;
    let lhs = l2_spacetime_sq(mesh, time, u) - b * b * l2_spacetime_sq(mesh, time, &h);
    let rhs = l2_spacetime_sq(mesh, time, &rate) + b * l2_slice_sq(mesh, h.slice(time.steps()));
    Ok(EnergyIdentity {
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
    })
}
