use serde::Serialize;
use serde_json::json;

use homctl_core::cell::{capacity_profile, flux_ladder, radial_solve};
use homctl_core::control::{
    evaluate_cost, gradcheck, kappa_sweep, optimize_gradient, solve_coupled_fixed_point,
    OptimalTriple,
};
use homctl_core::domain::{l2_spacetime, l2_stepwise};
use homctl_core::manufactured::{space_ladder, time_ladder, Ladder};
use homctl_core::solvers::{solve_adjoint, solve_adjoint_continuous, solve_state};
use homctl_core::HomogenizedCoefficients;

use crate::config::RunConfig;
use crate::output::{csv_table, Output};
use crate::CliError;

#[derive(Serialize)]
struct Summary<'a, T: Serialize> {
    command: &'a str,
    seed: u64,
    config: &'a RunConfig,
    results: T,
}

fn write_summary<T: Serialize>(
    out: &Output,
    command: &str,
    cfg: &RunConfig,
    results: T,
) -> Result<(), CliError> {
    out.summary(&Summary {
        command,
        seed: cfg.seed,
        config: cfg,
        results,
    })
}

pub fn constants(n: u32, c0: f64) -> Result<(), CliError> {
    let c = HomogenizedCoefficients::new(n, c0)?;
    let value = json!({
        "n": c.n,
        "C0": c.c0,
        "gamma": c.gamma,
        "omega_n": c.omega_n,
        "A": c.a,
        "B": c.b,
        "terminal_weight": c.terminal_weight(),
        "compatibility_gap": c.compatibility_gap(),
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&value).expect("plain json")
    );
    Ok(())
}

pub fn cell_verify(n: u32, c0: f64, eps_list: &[f64], nodes: usize) -> Result<(), CliError> {
    if eps_list.is_empty() {
        return Err(CliError::Config("--eps-list is empty".into()));
    }
    let rows = flux_ladder(n, c0, eps_list)?;
    let mut table = Vec::new();
    let mut worst_radial: f64 = 0.0;
    for row in &rows {
        let exact = capacity_profile(n, c0, row.eps, nodes)?;
        let num = radial_solve(n, exact.inner, exact.outer, nodes)?;
        let radial = num.max_abs_diff(&exact);
        worst_radial = worst_radial.max(radial);
        table.push(vec![
            row.eps,
            row.a_estimate,
            row.rel_error,
            row.b_estimate,
            row.b_rel_error,
            radial,
        ]);
    }
    print!(
        "{}",
        csv_table(
            &[
                "eps",
                "a_estimate",
                "rel_error",
                "b_estimate",
                "b_rel_error",
                "radial_max_error"
            ],
            &table
        )
    );
    let last = rows.last().expect("non-empty");
    if last.rel_error > 1e-2 || last.b_rel_error > 1e-2 {
        return Err(CliError::Acceptance(format!(
            "finest eps = {} misses the 1% band (A: {:.3e}, B: {:.3e})",
            last.eps, last.rel_error, last.b_rel_error
        )));
    }
    if worst_radial > 1e-6 {
        return Err(CliError::Acceptance(format!(
            "radial solve deviates by {worst_radial:.3e} from the explicit profile"
        )));
    }
    Ok(())
}

pub fn state(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (p, v) = cfg.build_problem()?;
    let st = solve_state(&p, &v, &cfg.solver.linear())?;
    out.field("u", &p.mesh, &p.time, &st.u)?;
    out.field("Hu", &p.mesh, &p.time, &st.hu)?;
    write_summary(
        out,
        "solve-state",
        cfg,
        json!({
            "report": st.report,
            "u_max_abs": st.u.max_abs(),
            "u_l2": l2_spacetime(&p.mesh, &p.time, &st.u),
        }),
    )
}

pub fn adjoint(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (p, v) = cfg.build_problem()?;
    let lin = cfg.solver.linear();
    let st = solve_state(&p, &v, &lin)?;
    let (pd, report) = solve_adjoint(&p, &st, &lin)?;
    let (pc, _) = solve_adjoint_continuous(&p, &st, &lin)?;
    out.field("u", &p.mesh, &p.time, &st.u)?;
    out.field("p", &p.mesh, &p.time, &pd)?;
    out.field("p_continuous", &p.mesh, &p.time, &pc)?;
    let (mesh, time) = (&p.mesh, &p.time);
    let scale = l2_stepwise(mesh, time, &pc);
    let gap = l2_stepwise(mesh, time, &pd.sub(&pc));
    write_summary(
        out,
        "solve-adjoint",
        cfg,
        json!({
            "report": report,
            "p_max_abs": pd.max_abs(),
            "p_l2": l2_stepwise(mesh, time, &pd),
            "discrete_continuous_gap": if scale > 0.0 { gap / scale } else { gap },
        }),
    )
}

pub fn cost(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (p, v) = cfg.build_problem()?;
    let c = evaluate_cost(&p, &v, &cfg.solver.linear())?;
    write_summary(out, "cost", cfg, json!({ "cost": c }))
}

fn optimum_outputs(
    cfg: &RunConfig,
    out: &Output,
    command: &str,
    p: &homctl_core::ControlProblem,
    sol: &OptimalTriple,
) -> Result<(), CliError> {
    out.iterations(&sol.report.history)?;
    out.field("v", &p.mesh, &p.time, &sol.v)?;
    out.field("u", &p.mesh, &p.time, &sol.u)?;
    out.field("p", &p.mesh, &p.time, &sol.p)?;
    let last = sol.report.history.last().expect("initial record");
    write_summary(
        out,
        command,
        cfg,
        json!({
            "iterations": sol.report.iterations,
            "converged": sol.report.converged,
            "optimality_residual": sol.report.optimality_residual,
            "gradient_norm": last.gradient_norm,
            "cost": last.cost,
            "control_norm": l2_stepwise(&p.mesh, &p.time, &sol.v),
        }),
    )?;
    if sol.report.converged {
        Ok(())
    } else {
        Err(CliError::NonConvergence(format!(
            "{command} stopped after {} iterations with optimality residual {:.3e}",
            sol.report.iterations, sol.report.optimality_residual
        )))
    }
}

pub fn optimize(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (p, _) = cfg.build_problem()?;
    let sol = optimize_gradient(&p, 1.0, &cfg.solver.gradient(), &cfg.solver.linear())?;
    optimum_outputs(cfg, out, "optimize", &p, &sol)
}

pub fn fixed_point(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (p, _) = cfg.build_problem()?;
    let sol = solve_coupled_fixed_point(&p, &cfg.solver.fixed_point(), &cfg.solver.linear())?;
    optimum_outputs(cfg, out, "fixed-point", &p, &sol)
}

pub fn gradcheck_cmd(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (p, v) = cfg.build_problem()?;
    let lambdas = &cfg.gradcheck.lambdas;
    if lambdas.is_empty() || lambdas.iter().any(|&l| l.is_nan() || l <= 0.0) {
        return Err(CliError::Config(
            "gradcheck.lambdas must be positive".into(),
        ));
    }
    let rows = gradcheck(&p, &v, lambdas, cfg.seed, &cfg.solver.linear())?;
    let table: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| vec![r.lambda, r.finite_difference, r.predicted, r.rel_error])
        .collect();
    out.table(
        "gradcheck.csv",
        &["lambda", "finite_difference", "predicted", "error"],
        &table,
    )?;
    write_summary(out, "gradcheck", cfg, json!({ "rows": rows }))?;

    // Errors must shrink with lambda until the best one.
    let errs: Vec<f64> = rows.iter().map(|r| r.rel_error).collect();
    let best = errs
        .iter()
        .enumerate()
        .fold(0, |b, (i, &e)| if e < errs[b] { i } else { b });
    let shrinking = errs[..=best].windows(2).all(|w| w[1] < w[0]);
    let within = cfg.gradcheck.max_error.map_or(true, |m| errs[best] <= m);
    if shrinking && within && (best > 0 || errs.len() == 1) {
        Ok(())
    } else {
        Err(CliError::Acceptance(format!(
            "finite-difference errors do not shrink with lambda: {errs:?}"
        )))
    }
}

pub fn kappa(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (p, _) = cfg.build_problem()?;
    let kappas = &cfg.kappa_sweep.kappas;
    if kappas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Config("kappa_sweep.kappas must increase".into()));
    }
    let rows = kappa_sweep(
        &p,
        kappas,
        cfg.solver.optimizer_tol,
        cfg.solver.max_iter,
        &cfg.solver.linear(),
    );
    let table: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            vec![
                r.kappa,
                r.terminal_misfit,
                r.grad_misfit,
                r.strange_final,
                r.strange_rate,
                r.control_norm,
            ]
        })
        .collect();
    out.table(
        "kappa_sweep.csv",
        &[
            "kappa",
            "terminal_misfit",
            "grad_misfit",
            "strange_final",
            "strange_rate",
            "control_norm",
        ],
        &table,
    )?;
    write_summary(out, "kappa-sweep", cfg, json!({ "rows": rows }))?;
    if let Some(bad) = rows.iter().find(|r| r.error.is_some() || !r.converged) {
        return Err(CliError::NonConvergence(format!(
            "kappa = {}: {}",
            bad.kappa,
            bad.error.clone().unwrap_or_else(|| "not converged".into())
        )));
    }
    let misfit_ok = rows
        .windows(2)
        .all(|w| w[1].terminal_misfit <= w[0].terminal_misfit + 1e-8);
    let control_ok = rows
        .windows(2)
        .all(|w| w[1].control_norm >= w[0].control_norm - 1e-8);
    if misfit_ok && control_ok {
        Ok(())
    } else {
        Err(CliError::Acceptance(
            "kappa sweep trends violated (terminal misfit must not grow, |v| must not shrink)"
                .into(),
        ))
    }
}

pub fn mms(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let m = &cfg.mms;
    if m.space_nodes.len() < 2 || m.time_steps.len() < 2 {
        return Err(CliError::Config(
            "mms ladders need at least two levels".into(),
        ));
    }
    let lin = cfg.solver.linear();
    let space = space_ladder(m.dim, &m.space_nodes, m.a, m.b, &lin)?;
    let time = time_ladder(m.dim, m.time_nodes, &m.time_steps, m.a, m.b, &lin)?;
    let rows = |l: &Ladder, kind: f64| -> Vec<Vec<f64>> {
        l.rows
            .iter()
            .map(|r| vec![kind, r.h, r.dt, r.error])
            .collect()
    };
    let mut table = rows(&space, 0.0);
    table.extend(rows(&time, 1.0));
    out.table("mms.csv", &["ladder", "h", "dt", "error"], &table)?;
    write_summary(out, "mms", cfg, json!({ "space": space, "time": time }))?;
    let space_ok = space.orders.iter().all(|&o| o >= m.min_space_order);
    let time_ok = time.orders.iter().all(|&o| o >= m.min_time_order);
    if space_ok && time_ok {
        Ok(())
    } else {
        Err(CliError::Acceptance(format!(
            "observed orders space {:?} (>= {}), time {:?} (>= {})",
            space.orders, m.min_space_order, time.orders, m.min_time_order
        )))
    }
}
