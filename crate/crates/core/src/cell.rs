//! Effective constants of the memory term and the capacity cell problem
//! that produces them.
//!
//! A particle of radius `a_eps = C0 * eps^gamma`, `gamma = n / (n - 2)`, sits
//! at the centre of a ball of radius `eps / 4`. The capacity potential `w` is
//! harmonic in the shell, equal to 1 on the particle and 0 on the outer
//! sphere:
//!
//! ```text
//! w(r) = (r^(2-n) - (eps/4)^(2-n)) / (a_eps^(2-n) - (eps/4)^(2-n))
//! ```
//!
//! Its outward flux through the outer sphere, times the cell density
//! `eps^-n`, tends to `A_n = (n - 2) C0^(n-2) omega_n`, and `-w'(a_eps)`
//! scaled by `eps^gamma` tends to `B_n = (n - 2) / C0`. `omega_n` is the
//! area of the unit sphere in `R^n`.

use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Area of the unit sphere `S^(n-1)`: `2 pi^(n/2) / Gamma(n/2)`.
pub fn sphere_area(n: u32) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half(n)
}

/// `Gamma(n / 2)` for a positive integer `n`.
fn gamma_half(n: u32) -> f64 {
    assert!(n >= 1);
    if n % 2 == 0 {
        (1..n / 2).map(f64::from).product()
    } else {
        // Gamma(1/2) = sqrt(pi), Gamma(x + 1) = x Gamma(x)
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while x < n as f64 / 2.0 - 0.25 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HomogenizedCoefficients {
    pub n: u32,
    pub c0: f64,
    pub gamma: f64,
    pub omega_n: f64,
    /// `A_n`
    pub a: f64,
    /// `B_n`
    pub b: f64,
}

impl HomogenizedCoefficients {
    pub fn new(n: u32, c0: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!(
                "the critical scaling needs n >= 3, got n = {n}"
            )));
        }
        if !(c0.is_finite() && c0 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "C0 must be positive, got {c0}"
            )));
        }
        let nm2 = f64::from(n - 2);
        let omega_n = sphere_area(n);
        let out = Self {
            n,
            c0,
            gamma: f64::from(n) / nm2,
            omega_n,
            a: nm2 * c0.powi(n as i32 - 2) * omega_n,
            b: nm2 / c0,
        };
        let gap = out.compatibility_gap();
        assert!(
            gap <= 1e-14,
            "A_n != C0^(n-1) omega_n B_n (relative gap {gap:e})"
        );
        Ok(out)
    }

    /// Particle radius `C0 eps^gamma`.
    pub fn particle_radius(&self, eps: f64) -> f64 {
        self.c0 * eps.powf(self.gamma)
    }

    /// `C0^(n-1) omega_n`, the weight of the terminal memory term in the cost.
    pub fn terminal_weight(&self) -> f64 {
        self.c0.powi(self.n as i32 - 1) * self.omega_n
    }

    /// Relative gap in `A_n = C0^(n-1) omega_n B_n`.
    pub fn compatibility_gap(&self) -> f64 {
        (self.a - self.terminal_weight() * self.b).abs() / self.a
    }
}

/// The three constants the limit problem actually uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectiveConstants {
    /// Strength of the memory reaction `A`.
    pub a: f64,
    /// Kernel rate `B`.
    pub b: f64,
    /// Prefactor of `||u_T(T) - B H(u)(T)||^2`; equals `A / B`.
    pub terminal_weight: f64,
}

impl EffectiveConstants {
    /// User-supplied `A >= 0`, `B > 0`, for meshes not tied to a physical `n`.
    pub fn explicit(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::InvalidArgument(format!("A must be >= 0, got {a}")));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::InvalidArgument(format!("B must be > 0, got {b}")));
        }
        Ok(Self {
            a,
            b,
            terminal_weight: a / b,
        })
    }
}

impl From<&HomogenizedCoefficients> for EffectiveConstants {
    fn from(c: &HomogenizedCoefficients) -> Self {
        Self {
            a: c.a,
            b: c.b,
            terminal_weight: c.terminal_weight(),
        }
    }
}

/// Capacity potential sampled on log-spaced radii in `[a, R]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub n: u32,
    pub inner: f64,
    pub outer: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

impl RadialProfile {
    /// `r^(n-1) w'(r)` at the midpoints between consecutive nodes.
    pub fn midpoint_fluxes(&self) -> Vec<(f64, f64)> {
        let p = f64::from(self.n) - 1.0;
        self.radii
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(r, w)| {
                let rm = (r[0] * r[1]).sqrt();
                let ds = (r[1] / r[0]).ln();
                // dw/dr = (dw/ds) / r
                (rm, rm.powf(p - 1.0) * (w[1] - w[0]) / ds)
            })
            .collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

fn log_spaced(inner: f64, outer: f64, nodes: usize) -> Vec<f64> {
    let (l0, l1) = (inner.ln(), outer.ln());
    let mut r: Vec<f64> = (0..nodes)
        .map(|i| (l0 + (l1 - l0) * i as f64 / (nodes - 1) as f64).exp())
        .collect();
    r[0] = inner;
    r[nodes - 1] = outer;
    r
}

/// Closed-form capacity potential of the shell `inner < r < outer`.
pub fn explicit_potential(n: u32, inner: f64, outer: f64, r: f64) -> f64 {
    let e = 2.0 - f64::from(n);
    (r.powf(e) - outer.powf(e)) / (inner.powf(e) - outer.powf(e))
}

fn check_shell(n: u32, inner: f64, outer: f64, nodes: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("need n >= 3, got {n}")));
    }
    if !(inner > 0.0 && outer > inner && outer.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < a < R, got a = {inner}, R = {outer}"
        )));
    }
    if nodes < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 radial nodes, got {nodes}"
        )));
    }
    Ok(())
}

fn admissible_radius(coeffs: &HomogenizedCoefficients, eps: f64) -> Result<f64> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let a = coeffs.particle_radius(eps);
    if a >= eps / 4.0 {
        return Err(Error::InvalidArgument(format!(
            "particle radius {a:e} does not fit inside the shell of radius {:e}",
            eps / 4.0
        )));
    }
    Ok(a)
}

/// Explicit potential of the cell at scale `eps`.
pub fn capacity_profile(n: u32, c0: f64, eps: f64, nodes: usize) -> Result<RadialProfile> {
    let coeffs = HomogenizedCoefficients::new(n, c0)?;
    let inner = admissible_radius(&coeffs, eps)?;
    if nodes < 16 {
        return Err(Error::InvalidArgument(format!(
            "need at least 16 radial nodes, got {nodes}"
        )));
    }
    let outer = eps / 4.0;
    let radii = log_spaced(inner, outer, nodes);
    let values = radii
        .iter()
        .map(|&r| explicit_potential(n, inner, outer, r))
        .collect();
    Ok(RadialProfile {
        n,
        inner,
        outer,
        radii,
        values,
    })
}

/// Finite-difference solve of `(r^(n-1) w')' = 0`, `w(a) = 1`, `w(R) = 0`.
///
/// Uniform in `s = ln r`, where the equation reads `(e^((n-2)s) w_s)_s = 0`;
/// the conservative three-point scheme with midpoint coefficients is second
/// order in the node spacing.
pub fn radial_solve(n: u32, inner: f64, outer: f64, nodes: usize) -> Result<RadialProfile> {
    check_shell(n, inner, outer, nodes)?;
    let radii = log_spaced(inner, outer, nodes);
    let p = f64::from(n) - 2.0;
    // coefficients scaled by outer^(2-n) to stay in range
    let coef: Vec<f64> = radii
        .windows(2)
        .map(|r| ((r[0] * r[1]).sqrt() / outer).powf(p))
        .collect();
    if coef.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "radial system is singular at this resolution (a = {inner:e}, R = {outer:e})"
        )));
    }

    // unknowns w_1..w_{nodes-2}; row i: -c_{i-1/2} w_{i-1} + (c_{i-1/2} + c_{i+1/2}) w_i - c_{i+1/2} w_{i+1} = 0
    let m = nodes - 2;
    let mut diag = vec![0.0; m];
    let mut lower = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for j in 0..m {
        let (cl, cr) = (coef[j], coef[j + 1]);
        diag[j] = cl + cr;
        lower[j] = -cl;
        upper[j] = -cr;
    }
    rhs[0] = coef[0]; // w_0 = 1
    let interior = thomas(&lower, &diag, &upper, &rhs)?;

    let mut values = Vec::with_capacity(nodes);
    values.push(1.0);
    values.extend(interior);
    values.push(0.0);
    Ok(RadialProfile {
        n,
        inner,
        outer,
        radii,
        values,
    })
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let m = diag.len();
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    let mut pivot = diag[0];
    for j in 0..m {
        if j > 0 {
            pivot = diag[j] - lower[j] * c[j - 1];
        }
        if !(pivot.is_finite() && pivot.abs() > f64::MIN_POSITIVE) {
            return Err(Error::InvalidArgument(format!(
                "radial system is singular (pivot {pivot:e} at row {j})"
            )));
        }
        c[j] = upper[j] / pivot;
        d[j] = (rhs[j] - if j > 0 { lower[j] * d[j - 1] } else { 0.0 }) / pivot;
    }
    let mut x = vec![0.0; m];
    x[m - 1] = d[m - 1];
    for j in (0..m - 1).rev() {
        x[j] = d[j] - c[j] * x[j + 1];
    }
    Ok(x)
}

/// Outward flux of the explicit potential through `r = eps/4` times the cell
/// density `eps^-n`: `-w'(eps/4) (eps/4)^(n-1) omega_n eps^-n`.
pub fn flux_constant(n: u32, c0: f64, eps: f64) -> Result<f64> {
    let coeffs = HomogenizedCoefficients::new(n, c0)?;
    let inner = admissible_radius(&coeffs, eps)?;
    let outer = eps / 4.0;
    let e = 2.0 - f64::from(n);
    let dw_outer = e * outer.powf(e - 1.0) / (inner.powf(e) - outer.powf(e));
    Ok(-dw_outer * outer.powi(n as i32 - 1) * coeffs.omega_n * eps.powi(-(n as i32)))
}

/// `-w'(a_eps) eps^gamma`, which tends to `B_n`.
pub fn boundary_rate(n: u32, c0: f64, eps: f64) -> Result<f64> {
    let coeffs = HomogenizedCoefficients::new(n, c0)?;
    let inner = admissible_radius(&coeffs, eps)?;
    let outer = eps / 4.0;
    let e = 2.0 - f64::from(n);
    let dw_inner = e * inner.powf(e - 1.0) / (inner.powf(e) - outer.powf(e));
    Ok(-dw_inner * eps.powf(coeffs.gamma))
}

/// Richardson extrapolation of the last two entries of a ladder whose step
/// ratio is `ratio` and whose leading error term has order `order`.
pub fn richardson(values: &[f64], ratio: f64, order: f64) -> f64 {
    let n = values.len();
    assert!(n >= 2);
    let f = ratio.powf(order);
    (f * values[n - 1] - values[n - 2]) / (f - 1.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct FluxRow {
    pub eps: f64,
    pub a_estimate: f64,
    pub rel_error: f64,
    pub b_estimate: f64,
    pub b_rel_error: f64,
}

/// Flux estimates of `A_n` and `B_n` along an `eps` ladder.
pub fn flux_ladder(n: u32, c0: f64, eps_list: &[f64]) -> Result<Vec<FluxRow>> {
    let coeffs = HomogenizedCoefficients::new(n, c0)?;
    eps_list
        .iter()
        .map(|&eps| {
            let a_estimate = flux_constant(n, c0, eps)?;
            let b_estimate = boundary_rate(n, c0, eps)?;
            Ok(FluxRow {
                eps,
                a_estimate,
                rel_error: (a_estimate - coeffs.a).abs() / coeffs.a,
                b_estimate,
                b_rel_error: (b_estimate - coeffs.b).abs() / coeffs.b,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
        assert!((sphere_area(6) - PI.powi(3)).abs() < 1e-13);
    }

    #[test]
    fn constants_n3() {
        let c = HomogenizedCoefficients::new(3, 1.0).unwrap();
        assert_eq!(c.gamma, 3.0);
        assert_eq!(c.b, 1.0);
        assert!((c.a - 4.0 * PI).abs() < 1e-14);
        assert!((c.a - 12.56637).abs() < 1e-5);
    }

    #[test]
    fn constants_n4() {
        let c = HomogenizedCoefficients::new(4, 2.0).unwrap();
        assert_eq!(c.gamma, 2.0);
        assert_eq!(c.b, 1.0);
        assert!((c.a - 2.0 * 4.0 * sphere_area(4)).abs() < 1e-12);
        let c = HomogenizedCoefficients::new(4, 0.5).unwrap();
        assert_eq!(c.b, 4.0);
    }

    #[test]
    fn rejects_subcritical_dimension() {
        assert!(HomogenizedCoefficients::new(2, 1.0).is_err());
        assert!(HomogenizedCoefficients::new(3, 0.0).is_err());
        assert!(EffectiveConstants::explicit(-1.0, 1.0).is_err());
        assert!(EffectiveConstants::explicit(1.0, 0.0).is_err());
    }

    #[test]
    fn compatibility() {
        for n in 3..=8 {
            for c0 in [0.25, 0.5, 1.0, 2.0, 3.0] {
                let c = HomogenizedCoefficients::new(n, c0).unwrap();
                assert!(c.compatibility_gap() <= 1e-14);
                assert!(c.gamma > 1.0 && c.a > 0.0 && c.b > 0.0);
            }
        }
    }

    #[test]
    fn profile_endpoints_and_monotonicity() {
        let p = capacity_profile(3, 1.0, 0.01, 64).unwrap();
        assert_eq!(p.values[0], 1.0);
        assert_eq!(*p.values.last().unwrap(), 0.0);
        assert!((p.inner - 1e-6).abs() < 1e-20);
        assert!(p.values.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn profile_midpoint_value() {
        // n = 3, a = 1e-6, R = 2.5e-3, r = sqrt(a R) = 5e-5
        let a: f64 = 1e-6;
        let r_out: f64 = 2.5e-3;
        let r = (a * r_out).sqrt();
        let by_hand = (1.0 / r - 1.0 / r_out) / (1.0 / a - 1.0 / r_out);
        assert!((explicit_potential(3, a, r_out, r) - by_hand).abs() < 1e-15);
        // odd node count puts a node on the geometric midpoint
        let p = capacity_profile(3, 1.0, 0.01, 65).unwrap();
        assert!((p.radii[32] - r).abs() < 1e-15);
        assert!((p.values[32] - by_hand).abs() < 1e-12);
        assert!((by_hand - 0.0196078431372549).abs() < 1e-12);
    }

    #[test]
    fn profile_rejects_oversized_particle() {
        // eps^3 >= eps/4 once eps >= 1/2
        assert!(capacity_profile(3, 1.0, 0.6, 32).is_err());
        assert!(capacity_profile(3, 1.0, 0.01, 8).is_err());
        assert!(flux_constant(3, 1.0, 0.6).is_err());
    }

    #[test]
    fn radial_solve_hand_case() {
        // w = 2/r - 1 on (1, 2)
        let p = radial_solve(3, 1.0, 2.0, 2049).unwrap();
        let i = p
            .radii
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - 1.5).abs().total_cmp(&(b.1 - 1.5).abs()))
            .unwrap()
            .0;
        let r = p.radii[i];
        assert!((p.values[i] - (2.0 / r - 1.0)).abs() < 1e-7);
        assert!((explicit_potential(3, 1.0, 2.0, 1.5) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn radial_solve_exact_on_log_grid() {
        // Differences of r^(2-n) between log-spaced nodes are proportional to
        // the reciprocal midpoint coefficient, so the scheme reproduces the
        // closed form up to rounding.
        for n in [3, 4, 5] {
            let (a, r) = (1e-3, 2.5e-1);
            for nodes in [17, 257] {
                let num = radial_solve(n, a, r, nodes).unwrap();
                let err = num
                    .radii
                    .iter()
                    .zip(&num.values)
                    .map(|(&x, &w)| (w - explicit_potential(n, a, r, x)).abs())
                    .fold(0.0, f64::max);
                assert!(err < 1e-12, "n = {n}, nodes = {nodes}: {err:e}");
            }
        }
    }

    #[test]
    fn flux_is_invariant_across_radii() {
        for n in [3, 4, 5] {
            let p = radial_solve(n, 0.1, 1.0, 1025).unwrap();
            let fluxes = p.midpoint_fluxes();
            let exact = (2.0 - n as f64) / (0.1f64.powi(2 - n as i32) - 1.0);
            for (_, f) in fluxes {
                assert!(
                    (f - exact).abs() <= 1e-5 * exact.abs(),
                    "n={n}: {f} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn radial_solve_rejects_degenerate_shells() {
        assert!(radial_solve(3, 0.0, 1.0, 100).is_err());
        assert!(radial_solve(3, 1.0, 1.0, 100).is_err());
        assert!(radial_solve(2, 0.5, 1.0, 100).is_err());
    }

    #[test]
    fn flux_estimates() {
        let rows = flux_ladder(3, 1.0, &[0.1, 0.05, 0.025]).unwrap();
        assert!(rows.iter().all(|r| r.a_estimate > 0.0));
        assert!(rows.windows(2).all(|w| w[1].rel_error < w[0].rel_error));
        assert!(rows.last().unwrap().rel_error < 0.01);
        // for n = 3 the estimate is A / (1 - 4 eps^2)
        for r in &rows {
            let closed = 4.0 * PI / (1.0 - 4.0 * r.eps * r.eps);
            assert!((r.a_estimate - closed).abs() < 1e-12 * closed);
        }
    }

    #[test]
    fn flux_limit_scales_with_c0() {
        for n in [3u32, 4, 5] {
            let small = 1e-3;
            let r1 = flux_constant(n, 1.0, small).unwrap();
            let r2 = flux_constant(n, 2.0, small).unwrap();
            let ratio = r2 / r1;
            let expected = 2f64.powi(n as i32 - 2);
            assert!((ratio - expected).abs() < 1e-3 * expected, "n={n}: {ratio}");
        }
    }

    #[test]
    fn richardson_removes_quadratic_error() {
        let vals: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|e| 3.0 + 7.0 * e * e)
            .collect();
        assert!((richardson(&vals, 2.0, 2.0) - 3.0).abs() < 1e-13);
    }
}
