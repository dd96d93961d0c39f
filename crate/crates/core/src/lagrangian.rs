//! Eulerian-Lagrangian solver for the isentropic Euler system.
//!
//! The state is carried by the back-to-labels map `A_t`. The density is the
//! transported initial density weighted by the Jacobian,
//! `rho = J A_t * rho0(A_t)`, and the velocity is recovered from the initial
//! data plus an accumulated gradient potential,
//!
//! ```text
//! u = (grad A_t)^T u0(A_t) + grad q,     D_t q = K - H,   q(0) = 0,
//! ```
//!
//! with `H = h(rho)` the enthalpy and `K = |u|^2 / 2` the kinetic density.
//! A velocity trajectory solves the Euler system exactly when the residual
//! `u - (grad A_t)^T u0(A_t) - grad q` vanishes; [`fixed_point_residual`]
//! evaluates that defect and [`solve`] drives it to tolerance step by step
//! with a damped Picard iteration. The deviation of each iterate from `u0`
//! is smoothed by the heat semigroup before flows are generated, which is
//! the regularization that keeps the linearized update well conditioned; at
//! mesh-scale `epsilon` it does not perturb resolved modes measurably.

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::flow::{
    compose_maps, compose_vec_with, compose_with, flow_between, integrate_characteristics,
    FlowMap, PointSet, VelocityHistory,
};
use crate::grid::{TorusGrid, TWO_PI};
use crate::interp::{InterpMethod, Interpolant};
use crate::spectral::{bessel_norm, bessel_norm_vec, dealias, dealias_vec, gradient, heat_smooth_vec};
use crate::thermo::PressureLaw;

/// Scalar fields sampled at strictly increasing times, used as the stored
/// integrand of the transport integral in [`accumulate_q`].
#[derive(Debug, Clone)]
pub struct ScalarHistory {
    times: Vec<f64>,
    fields: Vec<ScalarField>,
}

impl ScalarHistory {
    pub fn new(times: Vec<f64>, fields: Vec<ScalarField>) -> Result<Self> {
        if times.is_empty() || times.len() != fields.len() {
            return Err(Error::InvalidParameter {
                name: "times",
                reason: "need equally many times and fields, at least one".into(),
            });
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite {
                context: "integrand history times",
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
        Ok(ScalarHistory { times, fields })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[ScalarField] {
        &self.fields
    }
}

/// Parameters of the Picard time stepper.
#[derive(Debug, Clone)]
pub struct PicardConfig {
    /// Time step of the outer march.
    pub dt: f64,
    /// Inner iteration stops when the successive-iterate Bessel norm
    /// difference falls below this.
    pub picard_tol: f64,
    /// Inner iteration cap; exceeding it aborts the run.
    pub max_iters: usize,
    /// Heat-smoothing parameter applied to the iterate's deviation from u0;
    /// `None` selects the mesh-scale default `(spacing/2)^2`.
    pub epsilon: Option<f64>,
    /// Relaxation factor in (0, 1]; halved on stagnation within a step.
    pub damping: f64,
    /// Smoothness index of the diagnostic norm; `None` selects `d/p + 1.5`.
    pub beta: Option<f64>,
    /// Integrability index of the diagnostic norm.
    pub p: f64,
    /// Spatial interpolation used for compositions and tracing.
    pub interp: InterpMethod,
    /// Substeps of the per-step characteristic trace.
    pub substeps: usize,
    /// Experimental: iterate the fixed point on the whole trajectory at
    /// once instead of stepwise.
    pub global_iteration: bool,
}

impl PicardConfig {
    pub fn new(dt: f64) -> Self {
        PicardConfig {
            dt,
            picard_tol: 1e-9,
            max_iters: 60,
            epsilon: None,
            damping: 1.0,
            beta: None,
            p: 2.0,
            interp: InterpMethod::Spectral,
            substeps: 1,
            global_iteration: false,
        }
    }

    pub fn epsilon_for(&self, grid: &TorusGrid) -> f64 {
        self.epsilon
            .unwrap_or_else(|| (grid.spacing() / 2.0).powi(2))
    }

    pub fn beta_for(&self, grid: &TorusGrid) -> f64 {
        self.beta
            .unwrap_or(grid.dim() as f64 / self.p + 1.5)
    }

    pub fn validate(&self, grid: &TorusGrid) -> Result<()> {
        if self.dt <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: format!("need dt > 0, got {}", self.dt),
            });
        }
        if self.picard_tol <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "picard_tol",
                reason: "need picard_tol > 0".into(),
            });
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "damping",
                reason: format!("need damping in (0, 1], got {}", self.damping),
            });
        }
        if self.p <= 1.0 {
            return Err(Error::InvalidParameter {
                name: "p",
                reason: format!("need p > 1, got {}", self.p),
            });
        }
        if let Some(eps) = self.epsilon {
            if eps < 0.0 {
                return Err(Error::InvalidParameter {
                    name: "epsilon",
                    reason: "need epsilon >= 0".into(),
                });
            }
        }
        let beta = self.beta_for(grid);
        let floor = grid.dim() as f64 / self.p + 1.0;
        if beta <= floor {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: format!("diagnostic norm needs beta > d/p + 1 = {floor}, got {beta}"),
            });
        }
        if self.max_iters == 0 || self.substeps == 0 {
            return Err(Error::InvalidParameter {
                name: "max_iters",
                reason: "need max_iters >= 1 and substeps >= 1".into(),
            });
        }
        Ok(())
    }
}

/// Snapshot of the Lagrangian solver at one accepted time.
#[derive(Debug, Clone)]
pub struct LagrangianState {
    pub t: f64,
    pub u: VectorField,
    pub rho: ScalarField,
    /// Accumulated potential with `D_t q = K - H`; enters the velocity
    /// reconstruction as `+ grad q`.
    pub q: ScalarField,
    /// Back-to-labels map at time `t`.
    pub a: FlowMap,
    /// Virtual velocity `u0(A_t)`.
    pub v: VectorField,
}

impl LagrangianState {
    /// State at `t = 0`: identity map, zero potential, data as given.
    pub fn initial(rho0: &ScalarField, u0: &VectorField) -> Result<Self> {
        if !rho0.is_finite() || !u0.is_finite() {
            return Err(Error::NonFinite {
                context: "initial data",
            });
        }
        let grid = rho0.grid().clone();
        Ok(LagrangianState {
            t: 0.0,
            u: u0.clone(),
            rho: rho0.clone(),
            q: ScalarField::zeros(&grid),
            a: FlowMap::identity(&grid),
            v: u0.clone(),
        })
    }
}

/// Per-step record of the Picard iteration and state health.
#[derive(Debug, Clone, Copy)]
pub struct StepDiagnostics {
    pub t: f64,
    pub mass: f64,
    pub rho_norm: f64,
    pub u_norm: f64,
    /// Bessel norm of `u - RHS(u)` at the accepted iterate.
    pub residual_norm: f64,
    pub min_rho: f64,
    pub min_det: f64,
    pub picard_iters: usize,
    /// Ratio of the last two successive-iterate update norms (contraction
    /// estimate); 0 when fewer than two updates were made.
    pub contraction: f64,
}

/// Time series of [`StepDiagnostics`] plus the norm indices used.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub beta: f64,
    pub p: f64,
    pub rows: Vec<StepDiagnostics>,
}

/// Virtual velocity `v = u0(A_t)`, the passively transported initial
/// velocity.
pub fn virtual_velocity(u0: &VectorField, a: &FlowMap) -> VectorField {
    compose_vec_with(u0, a, InterpMethod::Spectral)
}

/// Density by Lagrangian transport: `rho = J A * rho0(A)`.
pub fn density_from_labels(rho0: &ScalarField, a: &FlowMap) -> Result<ScalarField> {
    let j = a.jacobian()?;
    Ok(j.mul(&compose_with(rho0, a, InterpMethod::Spectral)))
}

/// Velocity reconstruction `u = (grad A)^T u0(A) + grad q`.
pub fn reconstruct_velocity(u0: &VectorField, a: &FlowMap, q: &ScalarField) -> VectorField {
    let transported = crate::flow::pushforward_covector(a, &compose_vec_with(u0, a, InterpMethod::Spectral));
    transported.add(&gradient(q))
}

/// Transport integral `q(t, x) = int_0^t g(s, X_s(A_t(x))) ds`: each node is
/// traced backward to its label and the stored integrand is integrated along
/// the characteristic with the composite trapezoid rule over the stored
/// steps. Realizes `D_t q = g`, `q(0) = 0` in integrated form.
pub fn accumulate_q(
    integrand: &ScalarHistory,
    u_hist: &VelocityHistory,
    t: f64,
    dt: f64,
) -> Result<ScalarField> {
    accumulate_q_with(integrand, u_hist, t, dt, InterpMethod::Spectral)
}

pub fn accumulate_q_with(
    integrand: &ScalarHistory,
    u_hist: &VelocityHistory,
    t: f64,
    dt: f64,
    method: InterpMethod,
) -> Result<ScalarField> {
    let grid = u_hist.grid().clone();
    if t == 0.0 {
        return Ok(ScalarField::zeros(&grid));
    }
    if t < 0.0 {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: "need t >= 0".into(),
        });
    }
    // sample times of the integrand inside [0, t], with t appended if needed
    let mut times: Vec<f64> = integrand
        .times
        .iter()
        .cloned()
        .filter(|&s| s <= t + 1e-12)
        .collect();
    if times.is_empty() || times[0] > 1e-12 {
        return Err(Error::HistoryGap { t: 0.0 });
    }
    let t_last = *integrand.times.last().unwrap();
    let append_t = *times.last().unwrap() < t - 1e-12;
    if append_t {
        if t_last < t - 1e-12 {
            return Err(Error::HistoryGap { t });
        }
        times.push(t);
    }

    // one backward sweep recording the characteristic at every sample time
    let nodes = PointSet::grid_nodes(&grid);
    let displacements =
        integrate_characteristics(u_hist, t, 0.0, nodes.clone(), dt, &times, method)?;
    let positions: Vec<PointSet> = displacements
        .into_iter()
        .map(|d| {
            let mut p = nodes.clone();
            for (o, v) in p.xs.iter_mut().zip(&d.xs) {
                *o += v;
            }
            for (o, v) in p.ys.iter_mut().zip(&d.ys) {
                *o += v;
            }
            p
        })
        .collect();

    // integrand value at its own sample time, blended in time if `t` was
    // appended between samples
    let value_at = |i: usize, pts: &PointSet| -> Vec<f64> {
        let s = times[i];
        let field = if append_t && i == times.len() - 1 {
            // blend the two bracketing integrand fields at time t
            let j = integrand
                .times
                .iter()
                .rposition(|&ts| ts <= s)
                .unwrap_or(0)
                .min(integrand.fields.len() - 2);
            let alpha = (s - integrand.times[j])
                / (integrand.times[j + 1] - integrand.times[j]);
            integrand.fields[j]
                .scale(1.0 - alpha)
                .axpy(alpha, &integrand.fields[j + 1])
        } else {
            let j = integrand
                .times
                .iter()
                .position(|&ts| (ts - s).abs() < 1e-12)
                .expect("sample time preserved");
            integrand.fields[j].clone()
        };
        let it = Interpolant::new(&field, method);
        it.eval_many(&pts.xs, &pts.ys)
    };

    let mut q = vec![0.0; grid.len()];
    let mut prev = value_at(0, &positions[0]);
    for i in 1..times.len() {
        let cur = value_at(i, &positions[i]);
        let w = 0.5 * (times[i] - times[i - 1]);
        for (qv, (a, b)) in q.iter_mut().zip(prev.iter().zip(&cur)) {
            *qv += w * (a + b);
        }
        prev = cur;
    }
    ScalarField::new(grid, q)
}

/// The back-to-labels maps at every history time, built interval by
/// interval: `A_{i+1} = A_i` composed with the one-step backward map of
/// `[s_i, s_{i+1}]`.
pub fn flow_history(
    u_hist: &VelocityHistory,
    t: f64,
    dt: f64,
    method: InterpMethod,
) -> Result<(Vec<f64>, Vec<FlowMap>)> {
    let grid = u_hist.grid().clone();
    let mut times: Vec<f64> = if u_hist.is_steady() {
        // a steady history has no stored steps of its own; resolve the
        // interval at the requested step size
        let m = (t / dt).ceil().max(1.0) as usize;
        (0..=m).map(|i| t * i as f64 / m as f64).collect()
    } else {
        u_hist
            .times()
            .iter()
            .cloned()
            .filter(|&s| s <= t + 1e-12)
            .collect()
    };
    if t == 0.0 {
        times = vec![0.0];
    }
    if times.is_empty() || times[0] > 1e-12 {
        return Err(Error::HistoryGap { t: 0.0 });
    }
    if *times.last().unwrap() < t - 1e-12 {
        if !u_hist.covers(t) {
            return Err(Error::HistoryGap { t });
        }
        times.push(t);
    }
    let mut maps = vec![FlowMap::identity(&grid)];
    for w in times.windows(2) {
        let phi = flow_between(u_hist, w[1], w[0], &grid, dt, method)?;
        let prev = maps.last().unwrap();
        let next = compose_maps(prev, &phi, method)?;
        maps.push(next.with_time(w[1]));
    }
    Ok((times, maps))
}

/// Residual of the velocity reconstruction at time `t` for a candidate
/// trajectory `u_hist`:
///
/// ```text
/// F = u(t) - (grad A_t)^T u0(A_t) + int_0^t grad H (pulled back) ds
///                                 - int_0^t grad K (pulled back) ds
/// ```
///
/// All transports run through the flows generated by `u_hist` itself. Both
/// time integrals are accumulated in label coordinates by [`accumulate_q`]
/// (H and K separately) and differentiated after mapping back, so the
/// returned field vanishes exactly when `u_hist` solves the system.
pub fn fixed_point_residual(
    t: f64,
    u_hist: &VelocityHistory,
    rho0: &ScalarField,
    u0: &VectorField,
    law: &PressureLaw,
    dt: f64,
) -> Result<VectorField> {
    fixed_point_residual_with(t, u_hist, rho0, u0, law, dt, InterpMethod::Spectral)
}

pub fn fixed_point_residual_with(
    t: f64,
    u_hist: &VelocityHistory,
    rho0: &ScalarField,
    u0: &VectorField,
    law: &PressureLaw,
    dt: f64,
    method: InterpMethod,
) -> Result<VectorField> {
    let u_t = u_hist.sample(t)?;
    if t == 0.0 {
        return Ok(u_t.sub(u0));
    }
    let (times, maps) = flow_history(u_hist, t, dt, method)?;

    let mut h_fields = Vec::with_capacity(times.len());
    let mut k_fields = Vec::with_capacity(times.len());
    for (i, s) in times.iter().enumerate() {
        let a = &maps[i];
        let rho = density_from_labels_with(rho0, a, method)?;
        law.check_density(&rho, *s)?;
        h_fields.push(dealias(&law.enthalpy_field(&rho)?));
        let us = u_hist.sample(*s)?;
        k_fields.push(dealias(&us.norm_squared_field().scale(0.5)));
    }
    let h_hist = ScalarHistory::new(times.clone(), h_fields)?;
    let k_hist = ScalarHistory::new(times.clone(), k_fields)?;
    let q_h = accumulate_q_with(&h_hist, u_hist, t, dt, method)?;
    let q_k = accumulate_q_with(&k_hist, u_hist, t, dt, method)?;

    let a_t = maps.last().unwrap();
    let reconstructed = reconstruct_velocity_with(u0, a_t, &q_k.sub(&q_h), method);
    Ok(u_t.sub(&reconstructed))
}

/// [`fixed_point_residual`] with the trajectory's deviation from `u0`
/// heat-smoothed before any flow is generated; `eps = 0` reduces to the
/// plain residual.
pub fn regularized_residual(
    t: f64,
    u_hist: &VelocityHistory,
    rho0: &ScalarField,
    u0: &VectorField,
    law: &PressureLaw,
    eps: f64,
    dt: f64,
) -> Result<VectorField> {
    if eps < 0.0 {
        return Err(Error::InvalidParameter {
            name: "eps",
            reason: "need eps >= 0".into(),
        });
    }
    if eps == 0.0 {
        return fixed_point_residual(t, u_hist, rho0, u0, law, dt);
    }
    let smoothed_fields: Result<Vec<VectorField>> = u_hist
        .fields()
        .iter()
        .map(|u| Ok(u0.add(&heat_smooth_vec(&u.sub(u0), eps)?)))
        .collect();
    let smoothed = VelocityHistory::new(u_hist.times().to_vec(), smoothed_fields?)?;
    fixed_point_residual(t, &smoothed, rho0, u0, law, dt)
}

fn density_from_labels_with(
    rho0: &ScalarField,
    a: &FlowMap,
    method: InterpMethod,
) -> Result<ScalarField> {
    let j = a.jacobian()?;
    Ok(j.mul(&compose_with(rho0, a, method)))
}

fn reconstruct_velocity_with(
    u0: &VectorField,
    a: &FlowMap,
    q: &ScalarField,
    method: InterpMethod,
) -> VectorField {
    let transported =
        crate::flow::pushforward_covector(a, &compose_vec_with(u0, a, method));
    transported.add(&gradient(q))
}

/// Everything the inner iteration needs besides the evolving iterate.
struct StepContext<'a> {
    rho0: &'a ScalarField,
    u0: &'a VectorField,
    law: &'a PressureLaw,
    cfg: &'a PicardConfig,
    eps: f64,
    beta: f64,
    /// Smoothed start-of-step velocity, fixed across inner iterations.
    u_old_eff: VectorField,
}

/// Transports rebuilt from one candidate velocity on `[t0, t1]`.
struct StepTransports {
    a: FlowMap,
    rho: ScalarField,
    q: ScalarField,
    rhs: VectorField,
    min_det: f64,
}

impl<'a> StepContext<'a> {
    fn smooth_deviation(&self, u: &VectorField) -> Result<VectorField> {
        if self.eps == 0.0 {
            return Ok(u.clone());
        }
        Ok(self.u0.add(&heat_smooth_vec(&u.sub(self.u0), self.eps)?))
    }

    /// Rebuild `A`, `rho`, `q` and the reconstruction right-hand side at
    /// `t1 = state.t + dt` from the candidate end-of-step velocity.
    fn transports(
        &self,
        state: &LagrangianState,
        u_new: &VectorField,
        integrand_old: &ScalarField,
    ) -> Result<StepTransports> {
        let t0 = state.t;
        let t1 = t0 + self.cfg.dt;
        let method = self.cfg.interp;

        let hist = VelocityHistory::new(
            vec![t0, t1],
            vec![self.u_old_eff.clone(), self.smooth_deviation(u_new)?],
        )?;
        let phi = flow_between(
            &hist,
            t1,
            t0,
            state.rho.grid(),
            self.cfg.dt / self.cfg.substeps as f64,
            method,
        )?;
        let a = compose_maps(&state.a, &phi, method)?.with_time(t1);
        let j = a.jacobian().map_err(|e| match e {
            Error::MapFolding { min_det, .. } => Error::MapFolding { t: t1, min_det },
            other => other,
        })?;
        let min_det = j.min();

        let rho = dealias(&j.mul(&compose_with(self.rho0, &a, method)));
        self.law.check_density(&rho, t1)?;

        let h_new = dealias(&self.law.enthalpy_field(&rho)?);
        let k_new = dealias(&u_new.norm_squared_field().scale(0.5));
        let integrand_new = k_new.sub(&h_new);
        let q = compose_with(&state.q, &phi, method).add(
            &compose_with(integrand_old, &phi, method)
                .add(&integrand_new)
                .scale(0.5 * self.cfg.dt),
        );

        let rhs = dealias_vec(&reconstruct_velocity_with(self.u0, &a, &q, method));
        Ok(StepTransports {
            a,
            rho,
            q,
            rhs,
            min_det,
        })
    }
}

/// Advance one accepted state by `cfg.dt` with the damped Picard iteration.
/// Returns the new state and its diagnostics row.
pub fn picard_step(
    state: &LagrangianState,
    cfg: &PicardConfig,
    rho0: &ScalarField,
    u0: &VectorField,
    law: &PressureLaw,
) -> Result<(LagrangianState, StepDiagnostics)> {
    let grid = state.rho.grid().clone();
    cfg.validate(&grid)?;
    let eps = cfg.epsilon_for(&grid);
    let u_old_eff = if eps == 0.0 {
        state.u.clone()
    } else {
        u0.add(&heat_smooth_vec(&state.u.sub(u0), eps)?)
    };
    let ctx = StepContext {
        rho0,
        u0,
        law,
        cfg,
        eps,
        beta: cfg.beta_for(&grid),
        u_old_eff,
    };
    let t1 = state.t + cfg.dt;

    let h_old = dealias(&law.enthalpy_field(&state.rho)?);
    let k_old = dealias(&state.u.norm_squared_field().scale(0.5));
    let integrand_old = k_old.sub(&h_old);

    let mut u_new = state.u.clone();
    let mut theta = cfg.damping;
    let mut prev_diff = f64::INFINITY;
    let mut contraction = 0.0;
    let mut converged = false;
    let mut iters = 0;
    let mut last_diff = f64::NAN;

    while iters < cfg.max_iters {
        iters += 1;
        let tr = ctx.transports(state, &u_new, &integrand_old)?;
        let u_next = u_new.scale(1.0 - theta).axpy(theta, &tr.rhs);
        let diff = bessel_norm_vec(&u_next.sub(&u_new), ctx.beta, cfg.p)?;
        if !diff.is_finite() {
            return Err(Error::NonFinite {
                context: "Picard update",
            });
        }
        u_new = u_next;
        last_diff = diff;
        // contraction estimated from the first pair of updates, where both
        // sit well above the convergence floor
        if contraction == 0.0 && prev_diff.is_finite() && prev_diff > 0.0 {
            contraction = diff / prev_diff;
        }
        if diff <= cfg.picard_tol {
            converged = true;
            break;
        }
        if diff >= prev_diff {
            theta = (theta / 2.0).max(0.05);
        }
        prev_diff = diff;
    }
    if !converged {
        return Err(Error::NoConvergence {
            t: t1,
            iters,
            last_update: last_diff,
        });
    }

    // rebuild all transported quantities from the converged velocity
    let tr = ctx.transports(state, &u_new, &integrand_old)?;
    let residual_norm = bessel_norm_vec(&u_new.sub(&tr.rhs), ctx.beta, cfg.p)?;
    let v = compose_vec_with(u0, &tr.a, cfg.interp);
    if !u_new.is_finite() || !tr.rho.is_finite() {
        return Err(Error::NonFinite {
            context: "accepted Lagrangian step",
        });
    }

    let mass = tr.rho.mean() * TWO_PI.powi(grid.dim() as i32);
    let diag = StepDiagnostics {
        t: t1,
        mass,
        rho_norm: bessel_norm(&tr.rho, ctx.beta, cfg.p)?,
        u_norm: bessel_norm_vec(&u_new, ctx.beta, cfg.p)?,
        residual_norm,
        min_rho: tr.rho.min(),
        min_det: tr.min_det,
        picard_iters: iters,
        contraction,
    };
    let next = LagrangianState {
        t: t1,
        u: u_new,
        rho: tr.rho,
        q: tr.q,
        a: tr.a,
        v,
    };
    Ok((next, diag))
}

/// March from the initial data to time `T`. Returns every accepted state
/// (including the initial one) and the diagnostics time series. Fails with
/// a typed error (no-convergence, folding, vacuum, blowup) before any
/// non-finite value can reach the output.
pub fn solve(
    rho0: &ScalarField,
    u0: &VectorField,
    law: &PressureLaw,
    t_final: f64,
    cfg: &PicardConfig,
) -> Result<(Vec<LagrangianState>, Diagnostics)> {
    let grid = rho0.grid().clone();
    cfg.validate(&grid)?;
    law.check_density(rho0, 0.0)?;
    if cfg.global_iteration {
        return solve_global(rho0, u0, law, t_final, cfg);
    }

    let beta = cfg.beta_for(&grid);
    let mut states = vec![LagrangianState::initial(rho0, u0)?];
    let mut diagnostics = Diagnostics {
        beta,
        p: cfg.p,
        rows: vec![initial_diagnostics(&states[0], beta, cfg.p)?],
    };

    let steps = (t_final / cfg.dt).round().max(0.0) as usize;
    for i in 0..steps {
        let (mut next, diag) = picard_step(states.last().unwrap(), cfg, rho0, u0, law)?;
        next.t = (i + 1) as f64 * cfg.dt;
        diagnostics.rows.push(StepDiagnostics { t: next.t, ..diag });
        states.push(next);
    }
    Ok((states, diagnostics))
}

fn initial_diagnostics(state: &LagrangianState, beta: f64, p: f64) -> Result<StepDiagnostics> {
    let grid = state.rho.grid();
    Ok(StepDiagnostics {
        t: state.t,
        mass: state.rho.mean() * TWO_PI.powi(grid.dim() as i32),
        rho_norm: bessel_norm(&state.rho, beta, p)?,
        u_norm: bessel_norm_vec(&state.u, beta, p)?,
        residual_norm: 0.0,
        min_rho: state.rho.min(),
        min_det: 1.0,
        picard_iters: 0,
        contraction: 0.0,
    })
}

/// Experimental whole-interval fixed point: every time slice is updated from
/// flows generated by the previous sweep's full trajectory.
fn solve_global(
    rho0: &ScalarField,
    u0: &VectorField,
    law: &PressureLaw,
    t_final: f64,
    cfg: &PicardConfig,
) -> Result<(Vec<LagrangianState>, Diagnostics)> {
    let grid = rho0.grid().clone();
    let beta = cfg.beta_for(&grid);
    let eps = cfg.epsilon_for(&grid);
    let steps = (t_final / cfg.dt).round().max(0.0) as usize;
    let times: Vec<f64> = (0..=steps).map(|i| i as f64 * cfg.dt).collect();
    let mut fields: Vec<VectorField> = vec![u0.clone(); steps + 1];

    let mut sweep = 0;
    loop {
        sweep += 1;
        if sweep > cfg.max_iters {
            return Err(Error::NoConvergence {
                t: t_final,
                iters: sweep - 1,
                last_update: f64::NAN,
            });
        }
        let smoothed: Result<Vec<VectorField>> = fields
            .iter()
            .map(|u| Ok(u0.add(&heat_smooth_vec(&u.sub(u0), eps)?)))
            .collect();
        let hist = VelocityHistory::new(times.clone(), smoothed?)?;
        let (map_times, maps) = flow_history(&hist, t_final, cfg.dt, cfg.interp)?;

        // integrand fields of the previous sweep
        let mut h_fields = Vec::with_capacity(map_times.len());
        let mut k_fields = Vec::with_capacity(map_times.len());
        for (i, s) in map_times.iter().enumerate() {
            let rho = density_from_labels_with(rho0, &maps[i], cfg.interp)?;
            law.check_density(&rho, *s)?;
            h_fields.push(dealias(&law.enthalpy_field(&rho)?));
            k_fields.push(dealias(&fields[i].norm_squared_field().scale(0.5)));
        }
        let h_hist = ScalarHistory::new(map_times.clone(), h_fields)?;
        let k_hist = ScalarHistory::new(map_times.clone(), k_fields)?;

        let mut max_diff = 0.0_f64;
        let mut next_fields = Vec::with_capacity(fields.len());
        next_fields.push(u0.clone());
        for i in 1..=steps {
            let t = times[i];
            let q_h = accumulate_q_with(&h_hist, &hist, t, cfg.dt, cfg.interp)?;
            let q_k = accumulate_q_with(&k_hist, &hist, t, cfg.dt, cfg.interp)?;
            let rhs = dealias_vec(&reconstruct_velocity_with(
                u0,
                &maps[i],
                &q_k.sub(&q_h),
                cfg.interp,
            ));
            let updated = fields[i]
                .scale(1.0 - cfg.damping)
                .axpy(cfg.damping, &rhs);
            max_diff = max_diff.max(bessel_norm_vec(&updated.sub(&fields[i]), beta, cfg.p)?);
            next_fields.push(updated);
        }
        fields = next_fields;
        if max_diff <= cfg.picard_tol {
            break;
        }
    }

    // rebuild states along the converged trajectory
    let smoothed: Result<Vec<VectorField>> = fields
        .iter()
        .map(|u| Ok(u0.add(&heat_smooth_vec(&u.sub(u0), eps)?)))
        .collect();
    let hist = VelocityHistory::new(times.clone(), smoothed?)?;
    let (map_times, maps) = flow_history(&hist, t_final, cfg.dt, cfg.interp)?;
    let mut h_fields = Vec::with_capacity(map_times.len());
    let mut k_fields = Vec::with_capacity(map_times.len());
    let mut rhos = Vec::with_capacity(map_times.len());
    for (i, s) in map_times.iter().enumerate() {
        let rho = dealias(&density_from_labels_with(rho0, &maps[i], cfg.interp)?);
        law.check_density(&rho, *s)?;
        h_fields.push(dealias(&law.enthalpy_field(&rho)?));
        k_fields.push(dealias(&fields[i].norm_squared_field().scale(0.5)));
        rhos.push(rho);
    }
    let h_hist = ScalarHistory::new(map_times.clone(), h_fields)?;
    let k_hist = ScalarHistory::new(map_times.clone(), k_fields)?;

    let mut states = Vec::with_capacity(steps + 1);
    let mut rows = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let t = times[i];
        let q = if i == 0 {
            ScalarField::zeros(&grid)
        } else {
            accumulate_q_with(&k_hist, &hist, t, cfg.dt, cfg.interp)?
                .sub(&accumulate_q_with(&h_hist, &hist, t, cfg.dt, cfg.interp)?)
        };
        let state = LagrangianState {
            t,
            u: fields[i].clone(),
            rho: rhos[i].clone(),
            q,
            a: maps[i].clone(),
            v: compose_vec_with(u0, &maps[i], cfg.interp),
        };
        let residual_norm = if i == 0 {
            0.0
        } else {
            let rhs = reconstruct_velocity_with(u0, &maps[i], &state.q, cfg.interp);
            bessel_norm_vec(&state.u.sub(&dealias_vec(&rhs)), beta, cfg.p)?
        };
        rows.push(StepDiagnostics {
            t,
            mass: state.rho.mean() * TWO_PI.powi(grid.dim() as i32),
            rho_norm: bessel_norm(&state.rho, beta, cfg.p)?,
            u_norm: bessel_norm_vec(&state.u, beta, cfg.p)?,
            residual_norm,
            min_rho: state.rho.min(),
            min_det: maps[i].jacobian()?.min(),
            picard_iters: sweep,
            contraction: 0.0,
        });
        states.push(state);
    }
    Ok((
        states,
        Diagnostics {
            beta,
            p: cfg.p,
            rows,
        },
    ))
}
