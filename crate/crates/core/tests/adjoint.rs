mod common;

use std::f64::consts::PI;

use homctl_core::control::{evaluate_cost_kappa, random_direction, reduced_gradient_kappa};
use homctl_core::domain::{l2_slice, l2_stepwise, sample_function, stepwise_inner};
use homctl_core::memory::{apply_h, apply_h_star};
use homctl_core::solvers::{apply_laplacian, solve_adjoint, solve_adjoint_continuous, solve_state};
use homctl_core::{
    ControlProblem, EffectiveConstants, FieldSpec, Mesh, RegionMask, SpaceTimeField, TimeAxis,
};

use common::{orders, smoke_problem, tight};

fn problem_in(
    dim: usize,
    nodes: usize,
    steps: usize,
    a: f64,
    b: f64,
    weight: f64,
) -> ControlProblem {
    let mesh = Mesh::unit(dim, nodes).unwrap();
    let time = TimeAxis::new(1.0, steps).unwrap();
    let f = FieldSpec::Gaussian {
        amplitude: 5.0,
        center: vec![0.4; dim],
        width: 0.15,
        time_poly: vec![0.5, 1.0],
    }
    .sample(&mesh, &time)
    .unwrap();
    let ut = FieldSpec::Sine {
        amplitude: 1.0,
        modes: vec![],
        time_poly: vec![1.0, -0.3],
    }
    .sample(&mesh, &time)
    .unwrap();
    let omega = RegionMask::from_box(&mesh, &vec![0.2; dim], &vec![0.7; dim]).unwrap();
    let coeffs = EffectiveConstants::explicit(a, b).unwrap();
    ControlProblem::new(mesh, time, f, ut, omega, weight, coeffs).unwrap()
}

fn max_slice_l2(mesh: &Mesh, field: &SpaceTimeField) -> f64 {
    (0..field.num_slices())
        .map(|k| l2_slice(mesh, field, k))
        .fold(0.0, f64::max)
}

#[test]
fn central_differences_match_the_adjoint_gradient() {
    // J is quadratic in v, so the central quotient has no truncation error.
    for (dim, nodes, steps) in [(1, 33, 40), (2, 13, 20), (3, 7, 10)] {
        for kappa in [1.0, 30.0] {
            let p = problem_in(dim, nodes, steps, 2.5, 0.8, 0.05);
            let opts = tight();
            let v = random_direction(&p, 7).scaled(0.3);
            let w = random_direction(&p, 8);
            let g = reduced_gradient_kappa(&p, &v, kappa, &opts)
                .unwrap()
                .gradient;
            let predicted = stepwise_inner(&p.mesh, &p.time, &g, &w);
            let lambda = 1e-2;
            let plus = evaluate_cost_kappa(&p, &v.lin_comb(1.0, lambda, &w), kappa, &opts).unwrap();
            let minus =
                evaluate_cost_kappa(&p, &v.lin_comb(1.0, -lambda, &w), kappa, &opts).unwrap();
            let fd = (plus.total - minus.total) / (2.0 * lambda);
            let rel = (fd - predicted).abs() / predicted.abs();
            assert!(rel < 1e-8, "d = {dim}, kappa = {kappa}: {rel:e}");
        }
    }
}

#[test]
fn adjoint_without_memory_is_the_reversed_heat_flow() {
    // Only the terminal datum g = sin(pi x) drives p when A = 0, u = 0 and
    // u_T vanishes before T.
    let mut against_forward = vec![];
    let mut against_exact = vec![];
    let mut hs = vec![];
    for nodes in [9, 17, 33] {
        let h = 1.0 / (nodes - 1) as f64;
        let steps = (nodes - 1) * (nodes - 1);
        let mesh = Mesh::unit(1, nodes).unwrap();
        let time = TimeAxis::new(1.0, steps).unwrap();
        let dt = time.dt();
        let g: Vec<f64> = (0..mesh.interior_len())
            .map(|i| (PI * mesh.coords(i)[0]).sin())
            .collect();
        let coeffs = EffectiveConstants::explicit(0.0, 1.0).unwrap();
        let zero = SpaceTimeField::zeros(mesh.interior_len(), steps);
        let mut target = zero.clone();
        target.set_slice(steps, &g.iter().map(|x| -x).collect::<Vec<_>>());
        let omega = RegionMask::full(&mesh);
        let backward = ControlProblem::new(
            mesh.clone(),
            time,
            zero.clone(),
            target,
            omega.clone(),
            1.0,
            coeffs,
        )
        .unwrap();
        let state = solve_state(&backward, &zero, &tight()).unwrap();
        assert_eq!(state.u.max_abs(), 0.0);
        let (p, _) = solve_adjoint(&backward, &state, &tight()).unwrap();

        // forward heat flow from g: an impulse g/dt in the first step
        let mut kick = zero.clone();
        kick.set_slice(1, &g.iter().map(|x| x / dt).collect::<Vec<_>>());
        let forward =
            ControlProblem::new(mesh.clone(), time, kick, zero.clone(), omega, 1.0, coeffs)
                .unwrap();
        let w = solve_state(&forward, &zero, &tight()).unwrap().u;

        let mut diff = SpaceTimeField::zeros_like(&p);
        let mut exact_diff = SpaceTimeField::zeros_like(&p);
        for k in 0..=steps {
            let reference: Vec<f64> = if k == steps {
                g.clone()
            } else {
                w.slice(steps - k).to_vec()
            };
            let decay = (-PI * PI * (time.horizon() - time.t(k))).exp();
            for i in 0..g.len() {
                diff.slice_mut(k)[i] = p.slice(k)[i] - reference[i];
                exact_diff.slice_mut(k)[i] = p.slice(k)[i] - decay * g[i];
            }
        }
        against_forward.push(max_slice_l2(&mesh, &diff));
        against_exact.push(max_slice_l2(&mesh, &exact_diff));
        hs.push(h);
    }
    let o_fwd = orders(&hs, &against_forward);
    let o_exact = orders(&hs, &against_exact);
    assert!(
        o_fwd.iter().all(|&o| o >= 1.8),
        "{against_forward:?} {o_fwd:?}"
    );
    assert!(
        o_exact.iter().all(|&o| o >= 1.8),
        "{against_exact:?} {o_exact:?}"
    );
}

#[test]
fn discrete_and_continuous_adjoints_agree_to_discretization_order() {
    let mut gaps = vec![];
    let mut hs = vec![];
    for nodes in [17, 33, 65] {
        let steps = (nodes - 1) * (nodes - 1) / 4;
        let p = smoke_problem(nodes, steps, 1e-2);
        let opts = tight();
        let state = solve_state(&p, &p.zero_field(), &opts).unwrap();
        let (disc, _) = solve_adjoint(&p, &state, &opts).unwrap();
        let (cont, _) = solve_adjoint_continuous(&p, &state, &opts).unwrap();
        // Both end slices carry an O(dt) layer, so compare in a time-integrated norm.
        let (mesh, time) = (&p.mesh, &p.time);
        gaps.push(l2_stepwise(mesh, time, &disc.sub(&cont)) / l2_stepwise(mesh, time, &cont));
        hs.push(1.0 / (nodes - 1) as f64);
    }
    let o = orders(&hs, &gaps);
    assert!(o.iter().all(|&x| x >= 1.8), "{gaps:?} {o:?}");
}

/// Residual of the continuous adjoint equation in weak form, tested against
/// `phi = psi(x) eta(t)` with the time derivative moved onto `p` by
/// backward differences.
fn weak_residual(
    p: &ControlProblem,
    adj: &SpaceTimeField,
    u: &SpaceTimeField,
    phi: &SpaceTimeField,
) -> f64 {
    let (mesh, time) = (&p.mesh, &p.time);
    let (a, b, dt, m) = (p.coeffs.a, p.coeffs.b, time.dt(), time.steps());
    let hu = apply_h(u, b, dt).unwrap();
    let hs_p = apply_h_star(adj, b, dt).unwrap();
    let hs_hu = apply_h_star(&hu, b, dt).unwrap();
    let end = p.target.slice(m);
    let vol = mesh.cell_volume();
    let mut total = 0.0;
    for k in 0..m {
        let lap_p = apply_laplacian(mesh, adj.slice(k));
        let misfit: Vec<f64> = u
            .slice(k)
            .iter()
            .zip(p.target.slice(k))
            .map(|(x, y)| x - y)
            .collect();
        let lap_e = apply_laplacian(mesh, &misfit);
        let tail = (b * (time.t(k) - time.horizon())).exp();
        let mut acc = 0.0;
        for i in 0..mesh.interior_len() {
            let lhs = -(adj.slice(k + 1)[i] - adj.slice(k)[i]) / dt - lap_p[i]
                + a * (adj.slice(k)[i] - b * hs_p.slice(k)[i]);
            let rhs = -lap_e[i] + a * (u.slice(k)[i] - b * b * hs_hu.slice(k)[i] - tail * end[i]);
            acc += (lhs - rhs) * phi.slice(k)[i];
        }
        total += dt * vol * acc;
    }
    total
}

#[test]
fn discrete_adjoint_satisfies_the_weak_adjoint_identity() {
    let mut worst = vec![];
    let mut sizes = vec![];
    for nodes in [9, 17, 33] {
        let steps = (nodes - 1) * (nodes - 1) / 4;
        let p = smoke_problem(nodes, steps, 1e-2);
        let opts = tight();
        let state = solve_state(&p, &p.zero_field(), &opts).unwrap();
        let (adj, _) = solve_adjoint(&p, &state, &opts).unwrap();
        let scale = max_slice_l2(&p.mesh, &adj);
        let mut w: f64 = 0.0;
        for trial in 0..20u32 {
            let (mx, my) = (1 + trial % 3, 1 + (trial / 3) % 3);
            let freq = 0.5 + trial as f64 * 0.37;
            let phase = trial as f64 * 0.9;
            let phi = sample_function(&p.mesh, &p.time, |x, t| {
                (mx as f64 * PI * x[0]).sin()
                    * (my as f64 * PI * x[1]).sin()
                    * (freq * t + phase).cos()
            })
            .unwrap();
            let norm = homctl_core::domain::l2_spacetime(&p.mesh, &p.time, &phi);
            w = w.max(weak_residual(&p, &adj, &state.u, &phi).abs() / (norm * scale));
        }
        worst.push(w);
        sizes.push(p.time.dt());
    }
    let o = orders(&sizes, &worst);
    assert!(o.iter().all(|&x| x >= 0.9), "{worst:?} {o:?}");
}
