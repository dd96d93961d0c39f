//! Flow maps on the torus: forward characteristic integration, the
//! back-to-labels (inverse) map, their gradients and Jacobians, and
//! composition of fields with maps.
//!
//! Maps are stored as periodic displacement fields, `map(x) = x + disp(x)`.
//! The displacement of a flow generated by a periodic velocity is itself a
//! smooth periodic field regardless of magnitude, so gradients can be taken
//! spectrally; construction subtracts a common multiple of `2*pi` per
//! component to keep the stored values in a canonical band (a node-wise wrap
//! would tear the field apart at the band edge).
//!
//! Characteristics are integrated per node with the classical 4th-order
//! one-step method; velocity between stored history times is interpolated
//! linearly in time, and in space by the configured interpolation scheme.

use crate::error::{Error, Result};
use crate::field::{MatrixField, ScalarField, VectorField};
use crate::grid::{TorusGrid, TWO_PI};
use crate::interp::{InterpMethod, VectorInterpolant};
use crate::spectral::derivative;
use std::collections::HashMap;

/// Determinants at or below this value are treated as a folded map.
pub const FOLD_TOL: f64 = 1e-8;

/// A time-dependent velocity sampled at strictly increasing times.
/// A single-sample history is treated as steady (constant in time).
#[derive(Debug, Clone)]
pub struct VelocityHistory {
    times: Vec<f64>,
    fields: Vec<VectorField>,
}

impl VelocityHistory {
    pub fn new(times: Vec<f64>, fields: Vec<VectorField>) -> Result<Self> {
        if times.is_empty() || times.len() != fields.len() {
            return Err(Error::InvalidParameter {
                name: "times",
                reason: "need equally many times and fields, at least one".into(),
            });
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite {
                context: "velocity history times",
            });
        }
        for w in times.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidParameter {
                    name: "times",
                    reason: "sample times must be strictly increasing".into(),
                });
            }
        }
        let grid = fields[0].grid().clone();
        for f in &fields {
            if *f.grid() != grid {
                return Err(Error::GridMismatch {
                    left: grid.len(),
                    right: f.grid().len(),
                });
            }
            if !f.is_finite() {
                return Err(Error::NonFinite {
                    context: "velocity history sample",
                });
            }
        }
        Ok(VelocityHistory { times, fields })
    }

    /// Steady velocity, valid for every time.
    pub fn steady(u: VectorField) -> Result<Self> {
        Self::new(vec![0.0], vec![u])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[VectorField] {
        &self.fields
    }

    pub fn grid(&self) -> &TorusGrid {
        self.fields[0].grid()
    }

    pub fn is_steady(&self) -> bool {
        self.times.len() == 1
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn push(&mut self, t: f64, u: VectorField) -> Result<()> {
        if !t.is_finite() || t <= self.last_time() {
            return Err(Error::InvalidParameter {
                name: "t",
                reason: "history times must be finite and increasing".into(),
            });
        }
        if !u.is_finite() {
            return Err(Error::NonFinite {
                context: "velocity history sample",
            });
        }
        self.times.push(t);
        self.fields.push(u);
        Ok(())
    }

    pub fn covers(&self, t: f64) -> bool {
        if self.is_steady() {
            return true;
        }
        let tol = 1e-9 * (1.0 + t.abs());
        t >= self.times[0] - tol && t <= self.last_time() + tol
    }

    /// Velocity field at time `t`, linearly interpolated between samples.
    pub fn sample(&self, t: f64) -> Result<VectorField> {
        if !self.covers(t) {
            return Err(Error::HistoryGap { t });
        }
        if self.is_steady() {
            return Ok(self.fields[0].clone());
        }
        let (i, alpha) = self.locate(t);
        if alpha == 0.0 {
            Ok(self.fields[i].clone())
        } else {
            Ok(self.fields[i]
                .scale(1.0 - alpha)
                .axpy(alpha, &self.fields[i + 1]))
        }
    }

    /// Segment index and blend weight for `t`, clamped to the covered range.
    fn locate(&self, t: f64) -> (usize, f64) {
        if t <= self.times[0] {
            return (0, 0.0);
        }
        let last = self.times.len() - 1;
        if t >= self.times[last] {
            return (last, 0.0);
        }
        let mut i = match self
            .times
            .binary_search_by(|v| v.partial_cmp(&t).unwrap())
        {
            Ok(i) => return (i, 0.0),
            Err(i) => i - 1,
        };
        if i >= last {
            i = last - 1;
        }
        let alpha = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        (i, alpha)
    }
}

/// Positions of the tracked nodes, planar per-axis storage (`ys` empty in 1D).
#[derive(Debug, Clone)]
pub struct PointSet {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl PointSet {
    pub fn grid_nodes(grid: &TorusGrid) -> Self {
        let mut xs = Vec::with_capacity(grid.len());
        let mut ys = Vec::with_capacity(if grid.dim() == 2 { grid.len() } else { 0 });
        for idx in 0..grid.len() {
            let [x, y] = grid.coords(idx);
            xs.push(x);
            if grid.dim() == 2 {
                ys.push(y);
            }
        }
        PointSet { xs, ys }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn dim(&self) -> usize {
        if self.ys.is_empty() {
            1
        } else {
            2
        }
    }

    pub fn from_map(map: &FlowMap) -> Self {
        let grid = map.grid();
        let mut pts = Self::grid_nodes(grid);
        let disp = map.displacement();
        for (p, d) in pts.xs.iter_mut().zip(disp.component(0).values()) {
            *p += d;
        }
        if grid.dim() == 2 {
            for (p, d) in pts.ys.iter_mut().zip(disp.component(1).values()) {
                *p += d;
            }
        }
        pts
    }
}

/// Lazily built spatial interpolants of the history's sample fields, so a
/// long trace reuses them across substeps. Time blending is done on the
/// evaluated values (interpolation is linear, so the order does not matter).
pub(crate) struct HistorySampler<'a> {
    hist: &'a VelocityHistory,
    method: InterpMethod,
    built: HashMap<usize, VectorInterpolant>,
}

impl<'a> HistorySampler<'a> {
    pub fn new(hist: &'a VelocityHistory, method: InterpMethod) -> Self {
        HistorySampler {
            hist,
            method,
            built: HashMap::new(),
        }
    }

    fn interpolant(&mut self, i: usize) -> &VectorInterpolant {
        self.built
            .entry(i)
            .or_insert_with(|| VectorInterpolant::new(&self.hist.fields[i], self.method))
    }

    /// Velocity at time `t` for every point, written into `out` (d slices).
    pub fn eval(&mut self, t: f64, pts: &PointSet, out: &mut [Vec<f64>]) -> Result<()> {
        if !self.hist.covers(t) {
            return Err(Error::HistoryGap { t });
        }
        let d = self.hist.grid().dim();
        let (i, alpha) = if self.hist.is_steady() {
            (0, 0.0)
        } else {
            self.hist.locate(t)
        };
        {
            let it = self.interpolant(i);
            for p in 0..pts.len() {
                let v = it.eval(pts.xs[p], if d == 2 { pts.ys[p] } else { 0.0 });
                for axis in 0..d {
                    out[axis][p] = v[axis];
                }
            }
        }
        if alpha > 0.0 {
            let it = self.interpolant(i + 1);
            for p in 0..pts.len() {
                let v = it.eval(pts.xs[p], if d == 2 { pts.ys[p] } else { 0.0 });
                for axis in 0..d {
                    out[axis][p] = (1.0 - alpha) * out[axis][p] + alpha * v[axis];
                }
            }
        }
        Ok(())
    }
}

/// Time partition of `[t_start, t_end]` (either direction): all history
/// knots strictly inside plus the requested record times, each gap refined
/// to substeps no longer than `dt`.
fn partition(
    hist: &VelocityHistory,
    t_start: f64,
    t_end: f64,
    dt: f64,
    record_at: &[f64],
) -> Vec<f64> {
    let forward = t_end >= t_start;
    let (lo, hi) = if forward {
        (t_start, t_end)
    } else {
        (t_end, t_start)
    };
    let mut knots: Vec<f64> = vec![lo, hi];
    if !hist.is_steady() {
        for &t in hist.times() {
            if t > lo + 1e-14 && t < hi - 1e-14 {
                knots.push(t);
            }
        }
    }
    for &t in record_at {
        if t > lo + 1e-14 && t < hi - 1e-14 {
            knots.push(t);
        }
    }
    knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    knots.dedup_by(|a, b| (*a - *b).abs() < 1e-13);

    let mut out = Vec::new();
    for w in knots.windows(2) {
        let span = w[1] - w[0];
        let m = (span / dt).ceil().max(1.0) as usize;
        for j in 0..m {
            out.push(w[0] + span * j as f64 / m as f64);
        }
    }
    out.push(hi);
    if !forward {
        out.reverse();
    }
    out
}

fn times_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-11 * (1.0 + a.abs().max(b.abs()))
}

/// Integrate `dY/dt = u(t, Y)` for all points of `start` from `t_start` to
/// `t_end`, recording the accumulated *displacement* `Y - start` at the
/// requested times (which must lie in the traversed range). Returns one
/// displacement set per entry of `record_at`, in the order given; add
/// `start` back for absolute positions.
pub(crate) fn integrate_characteristics(
    u: &VelocityHistory,
    t_start: f64,
    t_end: f64,
    start: PointSet,
    dt: f64,
    record_at: &[f64],
    method: InterpMethod,
) -> Result<Vec<PointSet>> {
    if dt <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("need dt > 0, got {dt}"),
        });
    }
    let (lo, hi) = if t_end >= t_start {
        (t_start, t_end)
    } else {
        (t_end, t_start)
    };
    for &t in [t_start, t_end].iter().chain(record_at) {
        if !u.covers(t) {
            return Err(Error::HistoryGap { t });
        }
    }
    for &t in record_at {
        if t < lo - 1e-11 || t > hi + 1e-11 {
            return Err(Error::InvalidParameter {
                name: "record_at",
                reason: format!("time {t} outside the integration range [{lo}, {hi}]"),
            });
        }
    }
    if (t_end - t_start).abs() < 1e-15 {
        let zero = PointSet {
            xs: vec![0.0; start.len()],
            ys: if start.dim() == 2 {
                vec![0.0; start.len()]
            } else {
                Vec::new()
            },
        };
        return Ok(record_at.iter().map(|_| zero.clone()).collect());
    }

    let d = start.dim();
    let npts = start.len();
    let mut sampler = HistorySampler::new(u, method);
    let grid_times = partition(u, t_start, t_end, dt, record_at);

    let forward = t_end >= t_start;
    let mut rec_sorted: Vec<f64> = record_at.to_vec();
    rec_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if !forward {
        rec_sorted.reverse();
    }
    rec_sorted.dedup_by(|a, b| times_close(*a, *b));

    // The displacement is accumulated separately from the base positions:
    // it is typically orders of magnitude smaller, and rounding the sum at
    // the displacement's own scale keeps tiny flows exact enough for
    // finite-difference derivative checks.
    let base = start;
    let mut disp = vec![vec![0.0; npts]; d];
    let current = |disp: &[Vec<f64>]| -> PointSet {
        let mut p = base.clone();
        for (o, v) in p.xs.iter_mut().zip(&disp[0]) {
            *o += v;
        }
        if d == 2 {
            for (o, v) in p.ys.iter_mut().zip(&disp[1]) {
                *o += v;
            }
        }
        p
    };

    let as_pointset = |disp: &[Vec<f64>]| -> PointSet {
        PointSet {
            xs: disp[0].clone(),
            ys: if d == 2 { disp[1].clone() } else { Vec::new() },
        }
    };

    let mut recorded: Vec<(f64, PointSet)> = Vec::new();
    let mut next_rec = 0;
    if next_rec < rec_sorted.len() && times_close(rec_sorted[next_rec], t_start) {
        recorded.push((rec_sorted[next_rec], as_pointset(&disp)));
        next_rec += 1;
    }

    let mut k1 = vec![vec![0.0; npts]; d];
    let mut k2 = vec![vec![0.0; npts]; d];
    let mut k3 = vec![vec![0.0; npts]; d];
    let mut k4 = vec![vec![0.0; npts]; d];
    let mut stage = PointSet {
        xs: vec![0.0; npts],
        ys: if d == 2 { vec![0.0; npts] } else { Vec::new() },
    };

    for w in grid_times.windows(2) {
        let (s0, s1) = (w[0], w[1]);
        let h = s1 - s0;
        let pos = current(&disp);

        sampler.eval(s0, &pos, &mut k1)?;
        shift(&mut stage, &pos, 0.5 * h, &k1);
        sampler.eval(s0 + 0.5 * h, &stage, &mut k2)?;
        shift(&mut stage, &pos, 0.5 * h, &k2);
        sampler.eval(s0 + 0.5 * h, &stage, &mut k3)?;
        shift(&mut stage, &pos, h, &k3);
        sampler.eval(s1, &stage, &mut k4)?;

        let mut finite = true;
        for axis in 0..d {
            for p in 0..npts {
                disp[axis][p] += h / 6.0
                    * (k1[axis][p] + 2.0 * k2[axis][p] + 2.0 * k3[axis][p] + k4[axis][p]);
                finite &= disp[axis][p].is_finite();
            }
        }
        if !finite {
            return Err(Error::NonFinite {
                context: "characteristic positions",
            });
        }
        if next_rec < rec_sorted.len() && times_close(rec_sorted[next_rec], s1) {
            recorded.push((rec_sorted[next_rec], as_pointset(&disp)));
            next_rec += 1;
        }
    }

    record_at
        .iter()
        .map(|&t| {
            recorded
                .iter()
                .find(|(rt, _)| times_close(*rt, t))
                .map(|(_, p)| p.clone())
                .ok_or(Error::InvalidParameter {
                    name: "record_at",
                    reason: format!("time {t} was not reached by the integration"),
                })
        })
        .collect()
}

fn shift(dst: &mut PointSet, base: &PointSet, h: f64, k: &[Vec<f64>]) {
    for (o, (b, v)) in dst.xs.iter_mut().zip(base.xs.iter().zip(&k[0])) {
        *o = b + h * v;
    }
    if !base.ys.is_empty() {
        for (o, (b, v)) in dst.ys.iter_mut().zip(base.ys.iter().zip(&k[1])) {
            *o = b + h * v;
        }
    }
}

/// A discretized diffeomorphism of the torus, `map(x) = x + displacement(x)`.
#[derive(Debug, Clone)]
pub struct FlowMap {
    displacement: VectorField,
    time: f64,
}

impl FlowMap {
    /// Wraps the displacement into a canonical band (common `2*pi` multiple
    /// per component) and verifies the map has not folded.
    pub fn from_displacement(displacement: VectorField, time: f64) -> Result<Self> {
        if !displacement.is_finite() {
            return Err(Error::NonFinite {
                context: "flow map displacement",
            });
        }
        let displacement = displacement.map(|c| {
            let shift = TWO_PI * (c.mean() / TWO_PI).round();
            if shift == 0.0 {
                c.clone()
            } else {
                c.map(|v| v - shift)
            }
        });
        let map = FlowMap { displacement, time };
        let j = map.det_unchecked();
        let min_det = j.min();
        if min_det <= FOLD_TOL {
            return Err(Error::MapFolding { t: time, min_det });
        }
        Ok(map)
    }

    pub fn identity(grid: &TorusGrid) -> Self {
        FlowMap {
            displacement: VectorField::zeros(grid),
            time: 0.0,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        self.displacement.grid()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn displacement(&self) -> &VectorField {
        &self.displacement
    }

    pub fn is_identity(&self) -> bool {
        self.displacement
            .components()
            .iter()
            .all(|c| c.values().iter().all(|&v| v == 0.0))
    }

    /// `I + grad(displacement)`, entry `(i, j) = d map_i / d x_j`.
    pub fn gradient(&self) -> MatrixField {
        let grid = self.grid();
        let d = grid.dim();
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let mut e = derivative(self.displacement.component(i), j);
                if i == j {
                    e = e.map(|v| v + 1.0);
                }
                entries.push(e);
            }
        }
        MatrixField::from_entries(d, entries).expect("square entry list")
    }

    fn det_unchecked(&self) -> ScalarField {
        self.gradient().det()
    }

    /// Jacobian determinant; errors if the map has folded.
    pub fn jacobian(&self) -> Result<ScalarField> {
        let j = self.det_unchecked();
        let min_det = j.min();
        if min_det <= FOLD_TOL {
            return Err(Error::MapFolding {
                t: self.time,
                min_det,
            });
        }
        Ok(j)
    }

    /// Same map carrying a different time label.
    pub fn with_time(mut self, time: f64) -> FlowMap {
        self.time = time;
        self
    }
}

/// Gradient matrix of a flow map (free-function form of [`FlowMap::gradient`]).
pub fn grad_map(m: &FlowMap) -> MatrixField {
    m.gradient()
}

/// Jacobian determinant of a flow map.
pub fn jacobian(m: &FlowMap) -> Result<ScalarField> {
    m.jacobian()
}

/// Forward flow map: integrates `dX/dt = u(t, X)` from `t0` to `t1` starting
/// at the grid nodes. One-step error is `O(dt^4)` globally when the history
/// resolves the velocity in time.
pub fn advance_flow(
    u: &VelocityHistory,
    t0: f64,
    t1: f64,
    grid: &TorusGrid,
    dt: f64,
) -> Result<FlowMap> {
    advance_flow_with(u, t0, t1, grid, dt, InterpMethod::Spectral)
}

pub fn advance_flow_with(
    u: &VelocityHistory,
    t0: f64,
    t1: f64,
    grid: &TorusGrid,
    dt: f64,
    method: InterpMethod,
) -> Result<FlowMap> {
    let start = PointSet::grid_nodes(grid);
    if t1 == t0 {
        return Ok(FlowMap::identity(grid));
    }
    let end = integrate_characteristics(u, t0, t1, start, dt, &[t1], method)?
        .pop()
        .unwrap();
    displacement_from(grid, &end, t1)
}

/// Back-to-labels map: traces characteristics backward from each node at
/// time `t` down to time 0, so the result carries a current position to its
/// initial label.
pub fn back_to_labels(
    u: &VelocityHistory,
    t: f64,
    grid: &TorusGrid,
    dt: f64,
) -> Result<FlowMap> {
    back_to_labels_with(u, t, grid, dt, InterpMethod::Spectral)
}

pub fn back_to_labels_with(
    u: &VelocityHistory,
    t: f64,
    grid: &TorusGrid,
    dt: f64,
    method: InterpMethod,
) -> Result<FlowMap> {
    if t == 0.0 {
        return Ok(FlowMap::identity(grid));
    }
    let start = PointSet::grid_nodes(grid);
    let end = integrate_characteristics(u, t, 0.0, start, dt, &[0.0], method)?
        .pop()
        .unwrap();
    displacement_from(grid, &end, t)
}

/// General two-time map: carries a position at `t_from` to the foot of its
/// characteristic at `t_to` (forward or backward).
pub fn flow_between(
    u: &VelocityHistory,
    t_from: f64,
    t_to: f64,
    grid: &TorusGrid,
    dt: f64,
    method: InterpMethod,
) -> Result<FlowMap> {
    if (t_from - t_to).abs() < 1e-15 {
        return Ok(FlowMap::identity(grid));
    }
    let start = PointSet::grid_nodes(grid);
    let end = integrate_characteristics(u, t_from, t_to, start, dt, &[t_to], method)?
        .pop()
        .unwrap();
    displacement_from(grid, &end, t_to)
}

fn displacement_from(grid: &TorusGrid, disp: &PointSet, time: f64) -> Result<FlowMap> {
    let mut comps = vec![ScalarField::new(grid.clone(), disp.xs.clone())?];
    if grid.dim() == 2 {
        comps.push(ScalarField::new(grid.clone(), disp.ys.clone())?);
    }
    FlowMap::from_displacement(VectorField::new(comps)?, time)
}

/// Evaluate `f` at the mapped positions, `f(m(x))` per node.
pub fn compose(f: &ScalarField, m: &FlowMap) -> ScalarField {
    compose_with(f, m, InterpMethod::Spectral)
}

pub fn compose_with(f: &ScalarField, m: &FlowMap, method: InterpMethod) -> ScalarField {
    if m.is_identity() {
        return f.clone();
    }
    let pts = PointSet::from_map(m);
    let it = crate::interp::Interpolant::new(f, method);
    let values = it.eval_many(&pts.xs, &pts.ys);
    ScalarField::new(f.grid().clone(), values).expect("point count matches grid")
}

/// Componentwise composition of a vector field with a map.
pub fn compose_vec(v: &VectorField, m: &FlowMap) -> VectorField {
    compose_vec_with(v, m, InterpMethod::Spectral)
}

pub fn compose_vec_with(v: &VectorField, m: &FlowMap, method: InterpMethod) -> VectorField {
    v.map(|c| compose_with(c, m, method))
}

/// `(grad m)^T v` node-wise: the covector transport appearing in the
/// velocity reconstruction.
pub fn pushforward_covector(m: &FlowMap, v: &VectorField) -> VectorField {
    if m.is_identity() {
        return v.clone();
    }
    m.gradient().transpose_apply(v)
}

/// Composition `outer(inner(x))` of two maps over the same grid.
pub fn compose_maps(outer: &FlowMap, inner: &FlowMap, method: InterpMethod) -> Result<FlowMap> {
    if inner.is_identity() {
        return Ok(outer.clone());
    }
    if outer.is_identity() {
        return Ok(inner.clone());
    }
    let pulled = compose_vec_with(outer.displacement(), inner, method);
    FlowMap::from_displacement(inner.displacement().add(&pulled), outer.time())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::wrap_to_pi;

    fn g(n: usize) -> TorusGrid {
        TorusGrid::new(1, n).unwrap()
    }

    #[test]
    fn zero_velocity_gives_identity_both_ways() {
        let grid = g(32);
        let u = VelocityHistory::steady(VectorField::zeros(&grid)).unwrap();
        let x = advance_flow(&u, 0.0, 0.4, &grid, 1e-2).unwrap();
        assert!(x.displacement().max_abs() < 1e-14);
        let a = back_to_labels(&u, 0.4, &grid, 1e-2).unwrap();
        assert!(a.displacement().max_abs() < 1e-14);
    }

    #[test]
    fn constant_velocity_translates() {
        let grid = g(32);
        let c = 0.7;
        let u = VelocityHistory::steady(VectorField::constant(&grid, &[c])).unwrap();
        let x = advance_flow(&u, 0.0, 0.5, &grid, 1e-2).unwrap();
        for &v in x.displacement().component(0).values() {
            assert!((v - c * 0.5).abs() < 1e-12);
        }
        let a = back_to_labels(&u, 0.5, &grid, 1e-2).unwrap();
        for &v in a.displacement().component(0).values() {
            assert!((v + c * 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn large_translation_wraps_by_common_multiple() {
        let grid = g(32);
        let c = 8.0; // displacement 8*0.5 = 4.0 > pi
        let u = VelocityHistory::steady(VectorField::constant(&grid, &[c])).unwrap();
        let x = advance_flow(&u, 0.0, 0.5, &grid, 1e-3).unwrap();
        for &v in x.displacement().component(0).values() {
            assert!(v > -std::f64::consts::PI && v <= std::f64::consts::PI);
            assert!(wrap_to_pi(v - 4.0).abs() < 1e-10);
        }
    }

    #[test]
    fn gradient_of_identity_and_translation_is_identity_matrix() {
        let grid = g(32);
        let id = FlowMap::identity(&grid);
        let gm = id.gradient();
        assert!((gm.entry(0, 0).sub(&ScalarField::constant(&grid, 1.0))).max_abs() < 1e-13);
        assert!(id.jacobian().unwrap().sub(&ScalarField::constant(&grid, 1.0)).max_abs() == 0.0);

        let u = VelocityHistory::steady(VectorField::constant(&grid, &[1.3])).unwrap();
        let tr = advance_flow(&u, 0.0, 0.3, &grid, 1e-2).unwrap();
        let gm = tr.gradient();
        assert!((gm.entry(0, 0).sub(&ScalarField::constant(&grid, 1.0))).max_abs() < 1e-12);
    }

    #[test]
    fn gradient_of_sinusoidal_displacement() {
        let grid = g(64);
        let disp =
            VectorField::new(vec![ScalarField::from_fn(&grid, |x, _| 0.1 * x.sin())]).unwrap();
        let m = FlowMap::from_displacement(disp, 0.0).unwrap();
        let expected = ScalarField::from_fn(&grid, |x, _| 1.0 + 0.1 * x.cos());
        assert!(m.gradient().entry(0, 0).sub(&expected).max_abs() < 1e-12);
        assert!(m.jacobian().unwrap().sub(&expected).max_abs() < 1e-12);
    }

    #[test]
    fn folding_detected() {
        let grid = g(64);
        // displacement -1.5 sin x has gradient 1 - 1.5 cos x < 0 near x = 0
        let disp =
            VectorField::new(vec![ScalarField::from_fn(&grid, |x, _| -1.5 * x.sin())]).unwrap();
        assert!(matches!(
            FlowMap::from_displacement(disp, 0.7),
            Err(Error::MapFolding { .. })
        ));
    }

    #[test]
    fn compose_with_identity_is_exact() {
        let grid = g(32);
        let f = ScalarField::from_fn(&grid, |x, _| (3.0 * x).sin());
        let id = FlowMap::identity(&grid);
        assert_eq!(compose(&f, &id), f);
    }

    #[test]
    fn compose_constant_is_constant() {
        let grid = g(32);
        let f = ScalarField::constant(&grid, 4.2);
        let u = VelocityHistory::steady(VectorField::constant(&grid, &[1.0])).unwrap();
        let m = advance_flow(&u, 0.0, 0.3, &grid, 1e-2).unwrap();
        assert!(compose(&f, &m).sub(&f).max_abs() < 1e-12);
    }

    #[test]
    fn compose_translation_shifts_resolved_mode() {
        let grid = g(64);
        let f = ScalarField::from_fn(&grid, |x, _| x.sin());
        let c = 0.9;
        let u = VelocityHistory::steady(VectorField::constant(&grid, &[c])).unwrap();
        let m = advance_flow(&u, 0.0, 1.0, &grid, 1e-2).unwrap();
        let expected = ScalarField::from_fn(&grid, |x, _| (x + c).sin());
        assert!(compose(&f, &m).sub(&expected).max_abs() < 1e-10);
    }

    #[test]
    fn pushforward_identity_translation_and_stretch() {
        let grid = g(64);
        let v = VectorField::constant(&grid, &[1.0]);
        let id = FlowMap::identity(&grid);
        assert_eq!(pushforward_covector(&id, &v), v);

        let u = VelocityHistory::steady(VectorField::constant(&grid, &[2.0])).unwrap();
        let tr = advance_flow(&u, 0.0, 0.25, &grid, 1e-2).unwrap();
        assert!(pushforward_covector(&tr, &v).sub(&v).max_abs() < 1e-12);

        let disp =
            VectorField::new(vec![ScalarField::from_fn(&grid, |x, _| 0.1 * x.sin())]).unwrap();
        let m = FlowMap::from_displacement(disp, 0.0).unwrap();
        let expected =
            VectorField::new(vec![ScalarField::from_fn(&grid, |x, _| 1.0 + 0.1 * x.cos())])
                .unwrap();
        assert!(pushforward_covector(&m, &v).sub(&expected).max_abs() < 1e-12);
    }

    #[test]
    fn divergence_free_2d_flow_preserves_volume() {
        let grid = TorusGrid::new(2, 32).unwrap();
        // stream function psi = sin x sin y
        let u = VectorField::new(vec![
            ScalarField::from_fn(&grid, |x, y| x.sin() * y.cos()),
            ScalarField::from_fn(&grid, |x, y| -(x.cos() * y.sin())),
        ])
        .unwrap();
        let hist = VelocityHistory::steady(u).unwrap();
        let a = back_to_labels(&hist, 0.2, &grid, 5e-3).unwrap();
        let j = a.jacobian().unwrap();
        assert!(
            j.sub(&ScalarField::constant(&grid, 1.0)).max_abs() < 1e-6,
            "max |J-1| = {}",
            j.sub(&ScalarField::constant(&grid, 1.0)).max_abs()
        );
    }

    #[test]
    fn time_dependent_history_blend() {
        let grid = g(32);
        // u(t) = t (constant in space): X(t) = a + t^2/2
        let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
        let fields = times
            .iter()
            .map(|&t| VectorField::constant(&grid, &[t]))
            .collect();
        let hist = VelocityHistory::new(times, fields).unwrap();
        let m = advance_flow(&hist, 0.0, 1.0, &grid, 0.05).unwrap();
        for &v in m.displacement().component(0).values() {
            assert!((v - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn history_gap_is_reported() {
        let grid = g(32);
        let hist = VelocityHistory::new(
            vec![0.0, 0.1],
            vec![VectorField::zeros(&grid), VectorField::zeros(&grid)],
        )
        .unwrap();
        assert!(matches!(
            advance_flow(&hist, 0.0, 0.5, &grid, 1e-2),
            Err(Error::HistoryGap { .. })
        ));
    }

    #[test]
    fn rejects_nonfinite_velocity() {
        let grid = g(32);
        let mut u = VectorField::zeros(&grid);
        u.components_mut()[0].values_mut()[5] = f64::NAN;
        assert!(matches!(
            VelocityHistory::steady(u),
            Err(Error::NonFinite { .. })
        ));
    }
}
