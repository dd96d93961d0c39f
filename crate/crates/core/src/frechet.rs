//! Derivatives of the flow and back-to-labels maps with respect to the
//! driving velocity, evaluated at a steady base velocity, plus the
//! finite-difference machinery that validates them.
//!
//! The derivative of the flow in a time-constant direction `w` solves the
//! linearized equation along each characteristic of the base velocity:
//!
//! ```text
//! dM/ds = grad u0(X_s) M + w(X_s),    M(0) = 0,
//! ```
//!
//! which is integrated here as a variational ODE (matrices at different
//! times need not commute in 2D, so no closed matrix exponential is used).
//! In 1D the coefficients are scalars and the same solution has the
//! integrating-factor closed form
//! `M(t) = int_0^t exp(int_s^t u0'(X_r) dr) w(X_s) ds`, evaluated by
//! quadrature in [`flow_frechet_closed_form_1d`] as an independent
//! cross-check. The derivative of the inverse map follows from the chain
//! identity `D A_t = -grad A_t . (D X_t)(A_t)`.

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::flow::{advance_flow, back_to_labels, compose_vec_with, PointSet, VelocityHistory};
use crate::grid::TorusGrid;
use crate::interp::{Interpolant, InterpMethod, VectorInterpolant};
use crate::spectral::{derivative, lp_norm};

/// Analytic-vs-finite-difference comparison for one direction field.
#[derive(Debug, Clone)]
pub struct LinearizationResult {
    pub analytic: VectorField,
    pub finite_diff: VectorField,
    pub delta: f64,
    pub rel_error_l2: f64,
    pub rel_error_max: f64,
}

impl LinearizationResult {
    pub fn compare(analytic: VectorField, finite_diff: VectorField, delta: f64) -> Result<Self> {
        let diff = analytic.sub(&finite_diff);
        let norm_l2 = vec_l2(&analytic)?.max(1e-14);
        let norm_max = analytic.max_abs().max(1e-14);
        let rel_error_l2 = vec_l2(&diff)? / norm_l2;
        let rel_error_max = diff.max_abs() / norm_max;
        Ok(LinearizationResult {
            analytic,
            finite_diff,
            delta,
            rel_error_l2,
            rel_error_max,
        })
    }
}

fn vec_l2(u: &VectorField) -> Result<f64> {
    let mut acc = 0.0;
    for c in u.components() {
        let n = lp_norm(c, 2.0)?;
        acc += n * n;
    }
    Ok(acc.sqrt())
}

/// Derivative of the flow map at zero perturbation of the steady base
/// velocity `u0`, in the time-constant direction `w`: solves the variational
/// equation along every characteristic, returning the node-indexed field
/// `a -> M(t; a)` in label coordinates.
pub fn flow_frechet_at_zero(
    u0: &VectorField,
    w: &VectorField,
    t: f64,
    grid: &TorusGrid,
    dt: f64,
) -> Result<VectorField> {
    if !u0.is_finite() || !w.is_finite() {
        return Err(Error::NonFinite {
            context: "frechet inputs",
        });
    }
    if dt <= 0.0 || t < 0.0 {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: "need dt > 0 and t >= 0".into(),
        });
    }
    let d = grid.dim();
    let npts = grid.len();
    let u0_it = VectorInterpolant::new(u0, InterpMethod::Spectral);
    let w_it = VectorInterpolant::new(w, InterpMethod::Spectral);
    // grad u0 entries (i, j) = d u0_i / d x_j
    let mut grad_its = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            grad_its.push(Interpolant::new(
                &derivative(u0.component(i), j),
                InterpMethod::Spectral,
            ));
        }
    }

    let nodes = PointSet::grid_nodes(grid);
    let mut y = vec![vec![0.0; npts]; d];
    y[0].copy_from_slice(&nodes.xs);
    if d == 2 {
        y[1].copy_from_slice(&nodes.ys);
    }
    let mut m = vec![vec![0.0; npts]; d];

    let steps = (t / dt).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    if t == 0.0 {
        return VectorField::new(
            (0..d)
                .map(|_| ScalarField::zeros(grid))
                .collect::<Vec<_>>(),
        );
    }

    // joint RK4 on (Y, M); the system is autonomous since u0 is steady
    let eval = |y: &[Vec<f64>], m: &[Vec<f64>], ky: &mut [Vec<f64>], km: &mut [Vec<f64>]| {
        for p in 0..npts {
            let (x, yy) = (y[0][p], if d == 2 { y[1][p] } else { 0.0 });
            let u = u0_it.eval(x, yy);
            let wv = w_it.eval(x, yy);
            for i in 0..d {
                ky[i][p] = u[i];
                let mut acc = wv[i];
                for j in 0..d {
                    acc += grad_its[i * d + j].eval(x, yy) * m[j][p];
                }
                km[i][p] = acc;
            }
        }
    };

    let zeros = || vec![vec![0.0; npts]; d];
    let (mut ky1, mut km1) = (zeros(), zeros());
    let (mut ky2, mut km2) = (zeros(), zeros());
    let (mut ky3, mut km3) = (zeros(), zeros());
    let (mut ky4, mut km4) = (zeros(), zeros());
    let mut ys = zeros();
    let mut ms = zeros();

    let advance = |dst: &mut [Vec<f64>], src: &[Vec<f64>], h: f64, k: &[Vec<f64>]| {
        for i in 0..d {
            for p in 0..npts {
                dst[i][p] = src[i][p] + h * k[i][p];
            }
        }
    };

    for _ in 0..steps {
        eval(&y, &m, &mut ky1, &mut km1);
        advance(&mut ys, &y, 0.5 * h, &ky1);
        advance(&mut ms, &m, 0.5 * h, &km1);
        eval(&ys, &ms, &mut ky2, &mut km2);
        advance(&mut ys, &y, 0.5 * h, &ky2);
        advance(&mut ms, &m, 0.5 * h, &km2);
        eval(&ys, &ms, &mut ky3, &mut km3);
        advance(&mut ys, &y, h, &ky3);
        advance(&mut ms, &m, h, &km3);
        eval(&ys, &ms, &mut ky4, &mut km4);
        for i in 0..d {
            for p in 0..npts {
                y[i][p] += h / 6.0
                    * (ky1[i][p] + 2.0 * ky2[i][p] + 2.0 * ky3[i][p] + ky4[i][p]);
                m[i][p] += h / 6.0
                    * (km1[i][p] + 2.0 * km2[i][p] + 2.0 * km3[i][p] + km4[i][p]);
            }
        }
    }

    let comps: Result<Vec<_>> = m
        .into_iter()
        .map(|vals| ScalarField::new(grid.clone(), vals))
        .collect();
    VectorField::new(comps?)
}

/// Derivative of the back-to-labels map at zero perturbation, assembled from
/// the chain identity `D A_t[w] = -grad A_t . (D X_t)(A_t)[w]`.
pub fn labels_frechet_at_zero(
    u0: &VectorField,
    w: &VectorField,
    t: f64,
    grid: &TorusGrid,
    dt: f64,
) -> Result<VectorField> {
    let hist = VelocityHistory::steady(u0.clone())?;
    let a = back_to_labels(&hist, t, grid, dt)?;
    let mx = flow_frechet_at_zero(u0, w, t, grid, dt)?;
    let mx_at_a = compose_vec_with(&mx, &a, InterpMethod::Spectral);
    Ok(a.gradient().apply(&mx_at_a).scale(-1.0))
}

/// 1D integrating-factor closed form of the variational equation,
/// `M(t) = exp(A(t)) int_0^t exp(-A(s)) w(X_s) ds` with
/// `A(s) = int_0^s u0'(X_r) dr`, accumulated by trapezoid quadrature along
/// each characteristic. Independent numerical route to the same derivative,
/// used as the 1D cross-check of [`flow_frechet_at_zero`].
pub fn flow_frechet_closed_form_1d(
    u0: &VectorField,
    w: &VectorField,
    t: f64,
    grid: &TorusGrid,
    dt: f64,
) -> Result<VectorField> {
    if grid.dim() != 1 {
        return Err(Error::BadDimension(grid.dim()));
    }
    let npts = grid.len();
    let u0_it = Interpolant::new(u0.component(0), InterpMethod::Spectral);
    let du0_it = Interpolant::new(&derivative(u0.component(0), 0), InterpMethod::Spectral);
    let w_it = Interpolant::new(w.component(0), InterpMethod::Spectral);

    let steps = (t / dt).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let mut y: Vec<f64> = (0..npts).map(|j| grid.node(j)).collect();
    let mut accum_a = vec![0.0; npts]; // A(s)
    let mut accum_i = vec![0.0; npts]; // int e^{-A} w
    let mut a_prev: Vec<f64> = y.iter().map(|&x| du0_it.eval(x, 0.0)).collect();
    let mut g_prev: Vec<f64> = y.iter().map(|&x| w_it.eval(x, 0.0)).collect(); // e^{-A} w at s=0

    if t == 0.0 {
        return VectorField::new(vec![ScalarField::zeros(grid)]);
    }
    for _ in 0..steps {
        // advance the characteristic with RK4
        for p in 0..npts {
            let x = y[p];
            let k1 = u0_it.eval(x, 0.0);
            let k2 = u0_it.eval(x + 0.5 * h * k1, 0.0);
            let k3 = u0_it.eval(x + 0.5 * h * k2, 0.0);
            let k4 = u0_it.eval(x + h * k3, 0.0);
            y[p] = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        for p in 0..npts {
            let a_cur = du0_it.eval(y[p], 0.0);
            accum_a[p] += 0.5 * h * (a_prev[p] + a_cur);
            let g_cur = (-accum_a[p]).exp() * w_it.eval(y[p], 0.0);
            accum_i[p] += 0.5 * h * (g_prev[p] + g_cur);
            a_prev[p] = a_cur;
            g_prev[p] = g_cur;
        }
    }
    let vals: Vec<f64> = (0..npts)
        .map(|p| accum_a[p].exp() * accum_i[p])
        .collect();
    VectorField::new(vec![ScalarField::new(grid.clone(), vals)?])
}

/// Central finite difference `(F(base + delta w) - F(base - delta w)) / (2 delta)`
/// of a field-valued functional.
pub fn fd_gateaux<F>(map: F, base: &VectorField, w: &VectorField, delta: f64) -> Result<VectorField>
where
    F: Fn(&VectorField) -> Result<VectorField>,
{
    if delta == 0.0 {
        return Err(Error::InvalidParameter {
            name: "delta",
            reason: "need delta != 0".into(),
        });
    }
    let plus = map(&base.axpy(delta, w))?;
    let minus = map(&base.axpy(-delta, w))?;
    Ok(plus.sub(&minus).scale(1.0 / (2.0 * delta)))
}

/// The flow-map displacement as a functional of the steady velocity,
/// the quantity differentiated in the finite-difference checks.
pub fn flow_displacement(
    u: &VectorField,
    t: f64,
    grid: &TorusGrid,
    dt: f64,
) -> Result<VectorField> {
    let hist = VelocityHistory::steady(u.clone())?;
    Ok(advance_flow(&hist, 0.0, t, grid, dt)?.displacement().clone())
}

/// Back-to-labels displacement as a functional of the steady velocity.
pub fn labels_displacement(
    u: &VectorField,
    t: f64,
    grid: &TorusGrid,
    dt: f64,
) -> Result<VectorField> {
    let hist = VelocityHistory::steady(u.clone())?;
    Ok(back_to_labels(&hist, t, grid, dt)?.displacement().clone())
}

/// Least-squares slope of `log(err)` against `log(delta)`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(d, e)| *d > 0.0 && *e > 0.0)
        .map(|&(d, e)| (d.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TorusGrid {
        TorusGrid::new(1, 64).unwrap()
    }

    #[test]
    fn zero_direction_gives_zero() {
        let g = grid();
        let u0 = VectorField::new(vec![ScalarField::from_fn(&g, |x, _| x.sin())]).unwrap();
        let w = VectorField::zeros(&g);
        let out = flow_frechet_at_zero(&u0, &w, 0.3, &g, 1e-3).unwrap();
        assert!(out.max_abs() < 1e-14);
        let out = labels_frechet_at_zero(&u0, &w, 0.2, &g, 1e-3).unwrap();
        assert!(out.max_abs() < 1e-12);
    }

    #[test]
    fn zero_base_velocity_gives_t_w() {
        let g = grid();
        let u0 = VectorField::zeros(&g);
        let w = VectorField::new(vec![ScalarField::from_fn(&g, |x, _| x.cos())]).unwrap();
        let t = 0.37;
        let out = flow_frechet_at_zero(&u0, &w, t, &g, 1e-3).unwrap();
        assert!(out.sub(&w.scale(t)).max_abs() < 1e-13);

        let lab = labels_frechet_at_zero(&u0, &w, t, &g, 1e-3).unwrap();
        assert!(lab.sub(&w.scale(-t)).max_abs() < 1e-12);
    }

    #[test]
    fn linearity_in_the_direction() {
        let g = grid();
        let u0 = VectorField::new(vec![ScalarField::from_fn(&g, |x, _| x.sin())]).unwrap();
        let w1 = VectorField::new(vec![ScalarField::from_fn(&g, |x, _| x.cos())]).unwrap();
        let w2 = VectorField::new(vec![ScalarField::from_fn(&g, |x, _| (2.0 * x).sin())]).unwrap();
        let combo = w1.scale(2.0).axpy(-0.5, &w2);
        let t = 0.25;
        let direct = flow_frechet_at_zero(&u0, &combo, t, &g, 1e-3).unwrap();
        let linear = flow_frechet_at_zero(&u0, &w1, t, &g, 1e-3)
            .unwrap()
            .scale(2.0)
            .axpy(-0.5, &flow_frechet_at_zero(&u0, &w2, t, &g, 1e-3).unwrap());
        assert!(direct.sub(&linear).max_abs() < 1e-10);
    }

    #[test]
    fn fd_gateaux_is_exact_for_linear_maps() {
        let g = grid();
        let base = VectorField::zeros(&g);
        let w = VectorField::new(vec![ScalarField::from_fn(&g, |x, _| x.sin())]).unwrap();
        let linear = |u: &VectorField| -> Result<VectorField> { Ok(u.scale(3.0)) };
        for delta in [1e-1, 1e-3, 1e-6] {
            let fd = fd_gateaux(linear, &base, &w, delta).unwrap();
            assert!(fd.sub(&w.scale(3.0)).max_abs() < 1e-10);
        }
    }

    #[test]
    fn fd_gateaux_kills_even_terms_at_zero() {
        let g = grid();
        let base = VectorField::zeros(&g);
        let w = VectorField::new(vec![ScalarField::from_fn(&g, |x, _| x.cos())]).unwrap();
        let quadratic =
            |u: &VectorField| -> Result<VectorField> { Ok(u.zip_with(u, |a, b| a * b)) };
        let fd = fd_gateaux(quadratic, &base, &w, 1e-2).unwrap();
        assert!(fd.max_abs() < 1e-12);
    }

    #[test]
    fn variational_matches_finite_difference_1d() {
        let g = grid();
        let u0 = VectorField::new(vec![ScalarField::from_fn(&g, |x, _| x.sin())]).unwrap();
        let w = VectorField::new(vec![ScalarField::from_fn(&g, |x, _| x.cos())]).unwrap();
        let t = 0.3;
        let analytic = flow_frechet_at_zero(&u0, &w, t, &g, 1e-3).unwrap();
        let fd = fd_gateaux(
            |u| flow_displacement(u, t, &g, 1e-3),
            &u0,
            &w,
            1e-4,
        )
        .unwrap();
        let r = LinearizationResult::compare(analytic, fd, 1e-4).unwrap();
        assert!(r.rel_error_l2 < 1e-5, "rel l2 = {}", r.rel_error_l2);
    }

    #[test]
    fn closed_form_matches_variational_1d() {
        let g = grid();
        let u0 = VectorField::new(vec![ScalarField::from_fn(&g, |x, _| x.sin())]).unwrap();
        let w = VectorField::new(vec![ScalarField::from_fn(&g, |x, _| x.cos())]).unwrap();
        let t = 0.3;
        let variational = flow_frechet_at_zero(&u0, &w, t, &g, 1e-3).unwrap();
        let closed = flow_frechet_closed_form_1d(&u0, &w, t, &g, 2e-5).unwrap();
        let diff = variational.sub(&closed).max_abs();
        assert!(diff < 1e-7, "routes differ by {diff}");
    }

    #[test]
    fn labels_derivative_matches_finite_difference() {
        let g = grid();
        let u0 = VectorField::new(vec![ScalarField::from_fn(&g, |x, _| x.sin())]).unwrap();
        let w = VectorField::constant(&g, &[1.0]);
        let t = 0.2;
        let analytic = labels_frechet_at_zero(&u0, &w, t, &g, 1e-3).unwrap();
        let fd = fd_gateaux(
            |u| labels_displacement(u, t, &g, 1e-3),
            &u0,
            &w,
            1e-4,
        )
        .unwrap();
        let r = LinearizationResult::compare(analytic, fd, 1e-4).unwrap();
        assert!(r.rel_error_l2 < 1e-4, "rel l2 = {}", r.rel_error_l2);
    }

    #[test]
    fn slope_fit_recovers_powers() {
        let pts: Vec<(f64, f64)> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&d: &f64| (d, 3.0 * d * d))
            .collect();
        assert!((loglog_slope(&pts) - 2.0).abs() < 1e-12);
    }
}
