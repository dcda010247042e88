//! The causal memory operator and its adjoints.
//!
//! `H(phi)(t) = int_0^t e^{-B(t - s)} phi(s) ds` solves `H' + B H = phi`,
//! `H(0) = 0`; `H*(psi)(t) = int_t^T e^{B(t - s)} psi(s) ds` solves
//! `-H*' + B H* = psi`, `H*(T) = 0`. Each node is an independent scalar ODE.
//!
//! Discretely, with `E = e^{-B dt}` and `mu = (1 - E) / B`:
//!
//! * [`apply_h`]: `H^{k+1} = E H^k + mu phi^{k+1}` (exponential Euler,
//!   right-endpoint sampling, exact for inputs constant over a step);
//! * [`apply_h_star`]: `H*^k = E H*^{k+1} + mu psi^k`, `H*^M = 0`, the
//!   discretization of the continuous adjoint equation;
//! * [`apply_h_star_adjoint`]: the exact transpose of [`apply_h`] in the
//!   stepwise pairing of [`crate::domain::stepwise_inner`],
//!   `X^M = mu psi^M`, `X^k = E X^{k+1} + mu psi^k`.
//!
//! The two backward operators differ by `E^{M-k} mu psi^M = O(dt)`.

use crate::domain::{ScalarField, SpaceTimeField};
use crate::error::{Error, Result};

/// Decay factor and input weight of one exponential-Euler step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteHOperator {
    pub rate: f64,
    pub dt: f64,
    decay: f64,
    weight: f64,
}

impl DiscreteHOperator {
    pub fn new(rate: f64, dt: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "kernel rate B must be > 0, got {rate}"
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "time step must be > 0, got {dt}"
            )));
        }
        Ok(Self {
            rate,
            dt,
            decay: (-rate * dt).exp(),
            weight: -(-rate * dt).exp_m1() / rate,
        })
    }

    /// `E = e^{-B dt}`
    pub fn decay(&self) -> f64 {
        self.decay
    }

    /// `mu = (1 - e^{-B dt}) / B`
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn apply(&self, phi: &SpaceTimeField) -> SpaceTimeField {
        let mut out = SpaceTimeField::zeros_like(phi);
        for k in 1..phi.num_slices() {
            let (prev, next) = out.as_mut_slice().split_at_mut(k * phi.nodes());
            let prev = &prev[(k - 1) * phi.nodes()..];
            for ((h, &hp), &p) in next[..phi.nodes()].iter_mut().zip(prev).zip(phi.slice(k)) {
                *h = self.decay * hp + self.weight * p;
            }
        }
        out
    }

    pub fn apply_star(&self, psi: &SpaceTimeField) -> SpaceTimeField {
        let mut out = SpaceTimeField::zeros_like(psi);
        let m = psi.steps();
        for k in (0..m).rev() {
            self.backward_step(&mut out, psi, k);
        }
        out
    }

    pub fn apply_transpose(&self, psi: &SpaceTimeField) -> SpaceTimeField {
        let mut out = SpaceTimeField::zeros_like(psi);
        let m = psi.steps();
        for (x, &p) in out.slice_mut(m).iter_mut().zip(psi.slice(m)) {
            *x = self.weight * p;
        }
        for k in (0..m).rev() {
            self.backward_step(&mut out, psi, k);
        }
        out
    }

    fn backward_step(&self, out: &mut SpaceTimeField, psi: &SpaceTimeField, k: usize) {
        let nodes = psi.nodes();
        let (cur, next) = out.as_mut_slice().split_at_mut((k + 1) * nodes);
        let cur = &mut cur[k * nodes..];
        for ((x, &xn), &p) in cur.iter_mut().zip(&next[..nodes]).zip(psi.slice(k)) {
            *x = self.decay * xn + self.weight * p;
        }
    }
}

/// Running value of `H` at the last completed step.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryAccumulator {
    op: DiscreteHOperator,
    current: ScalarField,
    step: usize,
}

impl MemoryAccumulator {
    pub fn new(rate: f64, dt: f64, nodes: usize) -> Result<Self> {
        Ok(Self {
            op: DiscreteHOperator::new(rate, dt)?,
            current: ScalarField::zeros(nodes),
            step: 0,
        })
    }

    pub fn operator(&self) -> &DiscreteHOperator {
        &self.op
    }

    pub fn current(&self) -> &ScalarField {
        &self.current
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    /// Advances by one step with input sampled at the new time level.
    pub fn step(&mut self, u_next: &[f64], dt: f64) -> Result<()> {
        if dt.is_nan() || dt <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "time step must be > 0, got {dt}"
            )));
        }
        if (dt - self.op.dt).abs() > 1e-12 * self.op.dt {
            self.op = DiscreteHOperator::new(self.op.rate, dt)?;
        }
        if u_next.len() != self.current.len() {
            return Err(Error::ShapeMismatch(format!(
                "memory holds {} nodes, input has {}",
                self.current.len(),
                u_next.len()
            )));
        }
        let (e, mu) = (self.op.decay, self.op.weight);
        for (h, &u) in self.current.as_mut_slice().iter_mut().zip(u_next) {
            *h = e * *h + mu * u;
        }
        self.step += 1;
        Ok(())
    }
}

pub fn apply_h(phi: &SpaceTimeField, rate: f64, dt: f64) -> Result<SpaceTimeField> {
    Ok(DiscreteHOperator::new(rate, dt)?.apply(phi))
}

pub fn apply_h_star(psi: &SpaceTimeField, rate: f64, dt: f64) -> Result<SpaceTimeField> {
    Ok(DiscreteHOperator::new(rate, dt)?.apply_star(psi))
}

pub fn apply_h_star_adjoint(psi: &SpaceTimeField, rate: f64, dt: f64) -> Result<SpaceTimeField> {
    Ok(DiscreteHOperator::new(rate, dt)?.apply_transpose(psi))
}

/// `dH/dt = phi - B H`, read off the defining ODE.
pub fn dh_dt(h: &SpaceTimeField, phi: &SpaceTimeField, rate: f64) -> Result<SpaceTimeField> {
    h.check_shape(phi, "dH/dt")?;
    Ok(phi.lin_comb(1.0, -rate, h))
}
