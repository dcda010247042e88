//! Structured box grids, space-time fields, control regions and the discrete
//! norms shared by every solver.
//!
//! Only interior nodes carry unknowns; the outer boundary is homogeneous
//! Dirichlet and never stored. Interior nodes are numbered with axis 0
//! varying fastest. A [`SpaceTimeField`] stores `M + 1` slices back to back
//! (slice-major), slice `k` living at `t_k = k * dt`.
//!
//! Two time quadratures are in use:
//! * the composite trapezoid rule, for the cost functional norms
//!   ([`l2_spacetime`], [`h1_seminorm_spacetime`]);
//! * the right-endpoint ("stepwise") rule with weight `dt` on slices
//!   `1..=M` and none on slice 0, which is the pairing induced by implicit
//!   Euler stepping. Controls and the memory duality live in this pairing.

use crate::cell::EffectiveConstants;
use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<usize>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    spacing: Vec<f64>,
    interior: Vec<usize>,
}

impl Mesh {
    /// Box grid with `nodes_per_axis[a]` nodes (boundary included) on
    /// `[bounds[a].0, bounds[a].1]`.
    pub fn new(dim: usize, nodes_per_axis: &[usize], bounds: &[(f64, f64)]) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidMesh(format!(
                "dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if nodes_per_axis.len() != dim || bounds.len() != dim {
            return Err(Error::InvalidMesh(format!(
                "expected {dim} node counts and {dim} extents, got {} and {}",
                nodes_per_axis.len(),
                bounds.len()
            )));
        }
        let mut spacing = Vec::with_capacity(dim);
        for (axis, (&n, &(lo, hi))) in nodes_per_axis.iter().zip(bounds).enumerate() {
            if n < 3 {
                return Err(Error::InvalidMesh(format!(
                    "axis {axis} needs at least 3 nodes, got {n}"
                )));
            }
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::InvalidMesh(format!(
                    "axis {axis} has an empty or non-finite extent [{lo}, {hi}]"
                )));
            }
            spacing.push((hi - lo) / (n - 1) as f64);
        }
        Ok(Self {
            nodes: nodes_per_axis.to_vec(),
            lo: bounds.iter().map(|b| b.0).collect(),
            hi: bounds.iter().map(|b| b.1).collect(),
            spacing,
            interior: nodes_per_axis.iter().map(|n| n - 2).collect(),
        })
    }

    /// Unit box `(0,1)^dim` with the same node count on every axis.
    pub fn unit(dim: usize, nodes_per_axis: usize) -> Result<Self> {
        Self::new(dim, &vec![nodes_per_axis; dim], &vec![(0.0, 1.0); dim])
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes_per_axis(&self) -> &[usize] {
        &self.nodes
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.lo
            .iter()
            .copied()
            .zip(self.hi.iter().copied())
            .collect()
    }

    pub fn interior_dims(&self) -> &[usize] {
        &self.interior
    }

    pub fn interior_len(&self) -> usize {
        self.interior.iter().product()
    }

    /// Quadrature weight of one interior node.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Distance between consecutive interior indices along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.interior[..axis].iter().product()
    }

    /// Full-grid index (boundary included) of interior node `node`; unused
    /// axes are 0.
    pub fn grid_index(&self, node: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        let mut rest = node;
        for (axis, &m) in self.interior.iter().enumerate() {
            idx[axis] = rest % m + 1;
            rest /= m;
        }
        idx
    }

    /// Whether a full-grid index lies on the outer boundary.
    pub fn is_boundary(&self, grid_index: &[usize]) -> bool {
        grid_index
            .iter()
            .zip(&self.nodes)
            .any(|(&i, &n)| i == 0 || i == n - 1)
    }

    pub fn coords(&self, node: usize) -> [f64; MAX_DIM] {
        let idx = self.grid_index(node);
        let mut x = [0.0; MAX_DIM];
        for axis in 0..self.dim() {
            x[axis] = self.lo[axis] + idx[axis] as f64 * self.spacing[axis];
        }
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeAxis {
    horizon: f64,
    steps: usize,
}

impl TimeAxis {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "final time must be positive, got {horizon}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidArgument("need at least one time step".into()));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of steps `M`; slices are `0..=M`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn t(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            k as f64 * self.dt()
        }
    }

    /// Composite trapezoid weight of slice `k`.
    pub fn trapezoid_weight(&self, k: usize) -> f64 {
        if k == 0 || k == self.steps {
            0.5 * self.dt()
        } else {
            self.dt()
        }
    }

    /// Right-endpoint weight of slice `k`.
    pub fn stepwise_weight(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.dt()
        }
    }
}

/// One time slice: a value per interior node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField(Vec<f64>);

impl ScalarField {
    pub fn zeros(nodes: usize) -> Self {
        Self(vec![0.0; nodes])
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Values at interior nodes for every slice `k = 0..=M`, slice-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    nodes: usize,
    data: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(nodes: usize, steps: usize) -> Self {
        Self {
            nodes,
            data: vec![0.0; nodes * (steps + 1)],
        }
    }

    pub fn zeros_like(other: &Self) -> Self {
        Self {
            nodes: other.nodes,
            data: vec![0.0; other.data.len()],
        }
    }

    pub fn from_vec(nodes: usize, data: Vec<f64>) -> Result<Self> {
        if nodes == 0 || data.len() % nodes != 0 || data.len() < 2 * nodes {
            return Err(Error::ShapeMismatch(format!(
                "{} values cannot be split into at least two slices of {nodes} nodes",
                data.len()
            )));
        }
        Ok(Self { nodes, data })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// Number of steps `M` (the field has `M + 1` slices).
    pub fn steps(&self) -> usize {
        self.data.len() / self.nodes - 1
    }

    pub fn num_slices(&self) -> usize {
        self.data.len() / self.nodes
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        &self.data[k * self.nodes..(k + 1) * self.nodes]
    }

    pub fn slice_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.nodes..(k + 1) * self.nodes]
    }

    pub fn slices(&self) -> std::slice::Chunks<'_, f64> {
        self.data.chunks(self.nodes)
    }

    pub fn set_slice(&mut self, k: usize, values: &[f64]) {
        self.slice_mut(k).copy_from_slice(values);
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.data.len() == other.data.len()
    }

    pub fn check_shape(&self, other: &Self, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{what}: {} nodes x {} slices vs {} nodes x {} slices",
                self.nodes,
                self.num_slices(),
                other.nodes,
                other.num_slices()
            )))
        }
    }

    pub fn check_axes(&self, mesh: &Mesh, time: &TimeAxis, what: &str) -> Result<()> {
        if self.nodes == mesh.interior_len() && self.steps() == time.steps() {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{what}: field has {} nodes x {} steps, axes have {} nodes x {} steps",
                self.nodes,
                self.steps(),
                mesh.interior_len(),
                time.steps()
            )))
        }
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        debug_assert!(self.same_shape(other));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|a| *a *= alpha);
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.scale(alpha);
        out
    }

    /// `alpha * self + beta * other`
    pub fn lin_comb(&self, alpha: f64, beta: f64, other: &Self) -> Self {
        debug_assert!(self.same_shape(other));
        Self {
            nodes: self.nodes,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.lin_comb(1.0, -1.0, other)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.lin_comb(1.0, 1.0, other)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Samples `g(x, t)` at every interior node and every slice.
pub fn sample_function<G>(mesh: &Mesh, time: &TimeAxis, g: G) -> Result<SpaceTimeField>
where
    G: Fn(&[f64], f64) -> f64,
{
    let nodes = mesh.interior_len();
    let dim = mesh.dim();
    let coords: Vec<[f64; MAX_DIM]> = (0..nodes).map(|i| mesh.coords(i)).collect();
    let mut field = SpaceTimeField::zeros(nodes, time.steps());
    for k in 0..=time.steps() {
        let t = time.t(k);
        for (node, (out, x)) in field.slice_mut(k).iter_mut().zip(&coords).enumerate() {
            let value = g(&x[..dim], t);
            if !value.is_finite() {
                return Err(Error::NonFinite { node, t, value });
            }
            *out = value;
        }
    }
    Ok(field)
}

/// Indicator of the control region on interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    indicator: Vec<bool>,
}

impl RegionMask {
    pub fn from_indicator(indicator: Vec<bool>) -> Self {
        Self { indicator }
    }

    pub fn full(mesh: &Mesh) -> Self {
        Self {
            indicator: vec![true; mesh.interior_len()],
        }
    }

    /// Nodes strictly inside the sub-box `(lo, hi)`.
    pub fn from_box(mesh: &Mesh, lo: &[f64], hi: &[f64]) -> Result<Self> {
        let dim = mesh.dim();
        if lo.len() != dim || hi.len() != dim {
            return Err(Error::InvalidArgument(format!(
                "control box needs {dim} corner coordinates per corner"
            )));
        }
        let indicator = (0..mesh.interior_len())
            .map(|i| {
                let x = mesh.coords(i);
                (0..dim).all(|a| x[a] > lo[a] && x[a] < hi[a])
            })
            .collect();
        Ok(Self { indicator })
    }

    pub fn len(&self) -> usize {
        self.indicator.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indicator.is_empty()
    }

    pub fn count(&self) -> usize {
        self.indicator.iter().filter(|&&b| b).count()
    }

    pub fn contains(&self, node: usize) -> bool {
        self.indicator[node]
    }

    pub fn indicator(&self) -> &[bool] {
        &self.indicator
    }

    pub fn apply_slice(&self, values: &mut [f64]) {
        for (v, &inside) in values.iter_mut().zip(&self.indicator) {
            if !inside {
                *v = 0.0;
            }
        }
    }

    pub fn apply(&self, field: &mut SpaceTimeField) {
        for k in 0..field.num_slices() {
            self.apply_slice(field.slice_mut(k));
        }
    }

    pub fn masked(&self, field: &SpaceTimeField) -> SpaceTimeField {
        let mut out = field.clone();
        self.apply(&mut out);
        out
    }
}

/// Data of one limit control problem: forcing `f`, full space-time target
/// `u_T`, control region, control weight `N` and the memory constants.
#[derive(Debug, Clone)]
pub struct ControlProblem {
    pub mesh: Mesh,
    pub time: TimeAxis,
    pub forcing: SpaceTimeField,
    pub target: SpaceTimeField,
    pub omega: RegionMask,
    pub control_weight: f64,
    pub coeffs: EffectiveConstants,
}

impl ControlProblem {
    pub fn new(
        mesh: Mesh,
        time: TimeAxis,
        forcing: SpaceTimeField,
        target: SpaceTimeField,
        omega: RegionMask,
        control_weight: f64,
        coeffs: EffectiveConstants,
    ) -> Result<Self> {
        forcing.check_axes(&mesh, &time, "forcing")?;
        target.check_axes(&mesh, &time, "target")?;
        if !(control_weight.is_finite() && control_weight > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "control weight N must be positive, got {control_weight}"
            )));
        }
        if omega.len() != mesh.interior_len() {
            return Err(Error::ShapeMismatch(format!(
                "control mask has {} entries for {} interior nodes",
                omega.len(),
                mesh.interior_len()
            )));
        }
        if omega.count() == 0 {
            return Err(Error::InvalidArgument(
                "control region contains no interior node".into(),
            ));
        }
        if !forcing.is_finite() || !target.is_finite() {
            return Err(Error::InvalidArgument("non-finite problem data".into()));
        }
        Ok(Self {
            mesh,
            time,
            forcing,
            target,
            omega,
            control_weight,
            coeffs,
        })
    }

    pub fn zero_field(&self) -> SpaceTimeField {
        SpaceTimeField::zeros(self.mesh.interior_len(), self.time.steps())
    }

    /// Same operator and control space with `f = 0` and `u_T = 0`.
    pub fn homogeneous(&self) -> Self {
        let mut out = self.clone();
        out.forcing = self.zero_field();
        out.target = self.zero_field();
        out
    }

    /// Restricts a control to the admissible space: zero outside the control
    /// region and on slice 0, which no implicit step reads.
    pub fn project_control(&self, v: &SpaceTimeField) -> SpaceTimeField {
        let mut out = self.omega.masked(v);
        out.slice_mut(0).fill(0.0);
        out
    }
}

fn sum_sq(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum()
}

pub fn l2_slice(mesh: &Mesh, field: &SpaceTimeField, k: usize) -> f64 {
    (mesh.cell_volume() * sum_sq(field.slice(k))).sqrt()
}

/// Squared L2 norm of one slice.
pub fn l2_slice_sq(mesh: &Mesh, values: &[f64]) -> f64 {
    mesh.cell_volume() * sum_sq(values)
}

pub fn l2_spacetime(mesh: &Mesh, time: &TimeAxis, field: &SpaceTimeField) -> f64 {
    l2_spacetime_sq(mesh, time, field).sqrt()
}

pub fn l2_spacetime_sq(mesh: &Mesh, time: &TimeAxis, field: &SpaceTimeField) -> f64 {
    field
        .slices()
        .enumerate()
        .map(|(k, s)| time.trapezoid_weight(k) * l2_slice_sq(mesh, s))
        .sum()
}

/// Discrete Dirichlet inner product of two slices: forward differences over
/// every grid edge, boundary nodes counted as zero.
pub fn h1_inner_slice(mesh: &Mesh, a: &[f64], b: &[f64]) -> f64 {
    let dims = mesh.interior_dims();
    let mut total = 0.0;
    for (axis, &h) in mesh.spacing().iter().enumerate() {
        let stride = mesh.stride(axis);
        let m = dims[axis];
        let mut acc = 0.0;
        for i in 0..a.len() {
            let j = (i / stride) % m;
            if j == 0 {
                acc += a[i] * b[i];
            }
            let (an, bn) = if j + 1 < m {
                (a[i + stride], b[i + stride])
            } else {
                (0.0, 0.0)
            };
            acc += (an - a[i]) * (bn - b[i]);
        }
        total += acc / (h * h);
    }
    mesh.cell_volume() * total
}

/// Squared discrete Dirichlet energy of one slice.
pub fn h1_seminorm_slice_sq(mesh: &Mesh, values: &[f64]) -> f64 {
    h1_inner_slice(mesh, values, values)
}

pub fn h1_seminorm_spacetime(mesh: &Mesh, time: &TimeAxis, field: &SpaceTimeField) -> f64 {
    field
        .slices()
        .enumerate()
        .map(|(k, s)| time.trapezoid_weight(k) * h1_seminorm_slice_sq(mesh, s))
        .sum::<f64>()
        .sqrt()
}

/// Right-endpoint space-time inner product (slice 0 carries no weight).
pub fn stepwise_inner(mesh: &Mesh, time: &TimeAxis, a: &SpaceTimeField, b: &SpaceTimeField) -> f64 {
    debug_assert!(a.same_shape(b));
    let vol = mesh.cell_volume();
    (1..a.num_slices())
        .map(|k| {
            let s: f64 = a.slice(k).iter().zip(b.slice(k)).map(|(x, y)| x * y).sum();
            time.stepwise_weight(k) * vol * s
        })
        .sum()
}

pub fn l2_stepwise(mesh: &Mesh, time: &TimeAxis, field: &SpaceTimeField) -> f64 {
    stepwise_inner(mesh, time, field, field).max(0.0).sqrt()
}
