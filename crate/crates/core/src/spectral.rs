//! Trigonometric differentiation, Bessel-potential multipliers, heat-kernel
//! smoothing and dealiasing on the torus.
//!
//! All operators act mode-wise on the FFT coefficients. The Nyquist mode's
//! derivative coefficient is zeroed so that derivatives of real fields stay
//! real. Norms use the normalized measure `dx/(2*pi)^d`, so constants have
//! norm equal to their absolute value.

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{ScalarField, VectorField};
use crate::grid::TorusGrid;
use rustfft::num_complex::Complex64;

/// Spectral derivative along `axis` (0 = x, 1 = y).
pub fn derivative(f: &ScalarField, axis: usize) -> ScalarField {
    let n = f.grid().n() as i64;
    let nyquist = -(n / 2);
    fft::apply_multiplier(f, |kx, ky| {
        let k = if axis == 0 { kx } else { ky };
        if k == nyquist {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, k as f64)
        }
    })
}

/// Spectral gradient; exact for resolved trigonometric polynomials.
pub fn gradient(f: &ScalarField) -> VectorField {
    let comps = (0..f.grid().dim()).map(|axis| derivative(f, axis)).collect();
    VectorField::new(comps).expect("component count matches grid dimension")
}

/// Spectral divergence, the componentwise sum of derivatives.
pub fn divergence(u: &VectorField) -> ScalarField {
    let mut out = derivative(u.component(0), 0);
    for axis in 1..u.dim() {
        out = out.add(&derivative(u.component(axis), axis));
    }
    out
}

/// Bessel potential `(I - Laplacian)^{beta/2}`: multiplies each coefficient
/// by `(1 + |k|^2)^{beta/2}`.
pub fn bessel_apply(f: &ScalarField, beta: f64) -> ScalarField {
    if beta == 0.0 {
        return f.clone();
    }
    fft::apply_multiplier(f, |kx, ky| {
        let k2 = (kx * kx + ky * ky) as f64;
        Complex64::new((1.0 + k2).powf(beta / 2.0), 0.0)
    })
}

/// `L^p` norm under the normalized measure, by node-wise quadrature
/// (the rectangle rule, spectrally accurate on periodic grids).
pub fn lp_norm(f: &ScalarField, p: f64) -> Result<f64> {
    if p <= 1.0 {
        return Err(Error::InvalidParameter {
            name: "p",
            reason: format!("need p > 1, got {p}"),
        });
    }
    let n = f.values().len() as f64;
    let sum: f64 = f.values().iter().map(|v| v.abs().powf(p)).sum();
    Ok((sum / n).powf(1.0 / p))
}

/// Bessel norm `|| (I - Laplacian)^{beta/2} f ||_{L^p}`.
pub fn bessel_norm(f: &ScalarField, beta: f64, p: f64) -> Result<f64> {
    lp_norm(&bessel_apply(f, beta), p)
}

/// Bessel norm of a vector field: l2 combination of component norms.
pub fn bessel_norm_vec(u: &VectorField, beta: f64, p: f64) -> Result<f64> {
    let mut acc = 0.0;
    for c in u.components() {
        let v = bessel_norm(c, beta, p)?;
        acc += v * v;
    }
    Ok(acc.sqrt())
}

/// Heat semigroup `S^eps`: multiplier `exp(-eps |k|^2)`.
pub fn heat_smooth(f: &ScalarField, eps: f64) -> Result<ScalarField> {
    if eps < 0.0 {
        return Err(Error::InvalidParameter {
            name: "eps",
            reason: format!("need eps >= 0, got {eps}"),
        });
    }
    if eps == 0.0 {
        return Ok(f.clone());
    }
    Ok(fft::apply_multiplier(f, |kx, ky| {
        let k2 = (kx * kx + ky * ky) as f64;
        Complex64::new((-eps * k2).exp(), 0.0)
    }))
}

pub fn heat_smooth_vec(u: &VectorField, eps: f64) -> Result<VectorField> {
    let comps: Result<Vec<_>> = u.components().iter().map(|c| heat_smooth(c, eps)).collect();
    VectorField::new(comps?)
}

/// Operator norm of `S^eps - Id` on the grid's resolved modes (p = 2):
/// the maximum of `1 - exp(-eps |k|^2)`, attained at the Nyquist corner.
/// Strictly below 1 for every finite grid, which is the discrete form of the
/// invertibility condition behind the smoothing regularization.
pub fn smoothing_gap(_beta: f64, eps: f64, grid: &TorusGrid) -> f64 {
    1.0 - (-eps * grid.max_k_squared()).exp()
}

/// 2/3-rule dealiasing: zero every mode with `|k| > n/3` along any axis.
/// A projection, hence idempotent.
pub fn dealias(f: &ScalarField) -> ScalarField {
    let cutoff = f.grid().dealias_cutoff();
    fft::apply_multiplier(f, |kx, ky| {
        if kx.abs() > cutoff || ky.abs() > cutoff {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(1.0, 0.0)
        }
    })
}

pub fn dealias_vec(u: &VectorField) -> VectorField {
    u.map(dealias)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TWO_PI;

    fn g64() -> TorusGrid {
        TorusGrid::new(1, 64).unwrap()
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let f = ScalarField::constant(&g64(), 3.0);
        let df = gradient(&f);
        assert!(df.max_abs() < 1e-13);
    }

    #[test]
    fn gradient_of_sin_is_cos() {
        let g = g64();
        let f = ScalarField::from_fn(&g, |x, _| x.sin());
        let df = gradient(&f);
        let expected = ScalarField::from_fn(&g, |x, _| x.cos());
        assert!(df.component(0).sub(&expected).max_abs() < 1e-12);
    }

    #[test]
    fn gradient_2d_product_mode() {
        let g = TorusGrid::new(2, 32).unwrap();
        let f = ScalarField::from_fn(&g, |x, y| x.sin() * y.cos());
        let df = gradient(&f);
        let ex = ScalarField::from_fn(&g, |x, y| x.cos() * y.cos());
        let ey = ScalarField::from_fn(&g, |x, y| -x.sin() * y.sin());
        assert!(df.component(0).sub(&ex).max_abs() < 1e-12);
        assert!(df.component(1).sub(&ey).max_abs() < 1e-12);
    }

    #[test]
    fn divergence_of_constant_is_zero() {
        let g = TorusGrid::new(2, 16).unwrap();
        let u = VectorField::constant(&g, &[1.0, -2.0]);
        assert!(divergence(&u).max_abs() < 1e-13);
    }

    #[test]
    fn divergence_of_sin_field() {
        let g = g64();
        let u = VectorField::new(vec![ScalarField::from_fn(&g, |x, _| x.sin())]).unwrap();
        let div = divergence(&u);
        let expected = ScalarField::from_fn(&g, |x, _| x.cos());
        assert!(div.sub(&expected).max_abs() < 1e-12);
    }

    #[test]
    fn stream_function_field_is_divergence_free() {
        // u = (psi_y, -psi_x) with psi = sin x sin y
        let g = TorusGrid::new(2, 32).unwrap();
        let psi = ScalarField::from_fn(&g, |x, y| x.sin() * y.sin());
        let dpsi = gradient(&psi);
        let u = VectorField::new(vec![dpsi.component(1).clone(), dpsi.component(0).scale(-1.0)])
            .unwrap();
        assert!(divergence(&u).max_abs() < 1e-12);
    }

    #[test]
    fn bessel_identity_exponent() {
        let g = g64();
        let f = ScalarField::from_fn(&g, |x, _| (2.0 * x).sin() + 1.0);
        assert!(bessel_apply(&f, 0.0).sub(&f).max_abs() < 1e-14);
    }

    #[test]
    fn bessel_fixes_constants() {
        let g = g64();
        let f = ScalarField::constant(&g, 2.5);
        for beta in [-1.0, 1.0, 3.7] {
            assert!(bessel_apply(&f, beta).sub(&f).max_abs() < 1e-12);
        }
    }

    #[test]
    fn bessel_on_single_mode() {
        // (1 + 2^2)^{2/2} = 5 on sin(2x)
        let g = g64();
        let f = ScalarField::from_fn(&g, |x, _| (2.0 * x).sin());
        let out = bessel_apply(&f, 2.0);
        let expected = f.scale(5.0);
        assert!(out.sub(&expected).max_abs() < 1e-11);
    }

    #[test]
    fn bessel_norm_of_constant_is_abs() {
        let g = g64();
        let f = ScalarField::constant(&g, -3.0);
        for (beta, p) in [(0.0, 2.0), (1.5, 2.0), (2.0, 4.0)] {
            assert!((bessel_norm(&f, beta, p).unwrap() - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn l2_norm_of_sin_is_inv_sqrt2() {
        let g = g64();
        let f = ScalarField::from_fn(&g, |x, _| x.sin());
        let nrm = bessel_norm(&f, 0.0, 2.0).unwrap();
        assert!((nrm - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-13);
    }

    #[test]
    fn rejects_p_at_most_one() {
        let g = g64();
        let f = ScalarField::constant(&g, 1.0);
        assert!(bessel_norm(&f, 0.0, 1.0).is_err());
        assert!(bessel_norm(&f, 0.0, 0.5).is_err());
    }

    #[test]
    fn bessel_norm_p4_against_dense_quadrature_oracle() {
        // f = sin(3x), beta = 1.5, p = 4. The multiplier acts on the single
        // mode analytically: g(x) = (1+9)^{0.75} sin(3x). Oracle: composite
        // Simpson quadrature of |g|^4 at 2e4+1 points under dx/(2*pi).
        let g = g64();
        let f = ScalarField::from_fn(&g, |x, _| (3.0 * x).sin());
        let amp = 10.0_f64.powf(0.75);
        let m = 20_000usize;
        let h = TWO_PI / m as f64;
        let integrand = |x: f64| (amp * (3.0 * x).sin()).abs().powi(4);
        let mut sum = integrand(0.0) + integrand(TWO_PI);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * integrand(h * i as f64);
        }
        let oracle = (sum * h / 3.0 / TWO_PI).powf(0.25);
        let got = bessel_norm(&f, 1.5, 4.0).unwrap();
        assert!(
            (got - oracle).abs() < 1e-10,
            "got {got}, oracle {oracle}"
        );
        // frozen oracle value for regression: 10^{0.75} * (3/8)^{1/4}
        assert!((oracle - 4.400558683966967).abs() < 1e-9);
    }

    #[test]
    fn bessel_inverse_is_identity() {
        let g = g64();
        let f = ScalarField::from_fn(&g, |x, _| (5.0 * x).sin() + 0.3 * (2.0 * x).cos());
        let back = bessel_apply(&bessel_apply(&f, 1.7), -1.7);
        assert!(back.sub(&f).max_abs() < 1e-10);
    }

    #[test]
    fn heat_smooth_identity_at_zero() {
        let g = g64();
        let f = ScalarField::from_fn(&g, |x, _| (4.0 * x).cos());
        assert!(heat_smooth(&f, 0.0).unwrap().sub(&f).max_abs() < 1e-15);
        assert!(heat_smooth(&f, -0.1).is_err());
    }

    #[test]
    fn heat_smooth_fixes_constants_and_damps_modes() {
        let g = g64();
        let c = ScalarField::constant(&g, 7.0);
        assert!(heat_smooth(&c, 0.5).unwrap().sub(&c).max_abs() < 1e-12);

        let f = ScalarField::from_fn(&g, |x, _| x.sin());
        let out = heat_smooth(&f, 0.1).unwrap();
        let expected = f.scale((-0.1_f64).exp());
        assert!(out.sub(&expected).max_abs() < 1e-13);
    }

    #[test]
    fn heat_semigroup_law() {
        let g = g64();
        let f = ScalarField::from_fn(&g, |x, _| (3.0 * x).sin() + (7.0 * x).cos());
        let a = heat_smooth(&heat_smooth(&f, 0.02).unwrap(), 0.05).unwrap();
        let b = heat_smooth(&f, 0.07).unwrap();
        assert!(a.sub(&b).max_abs() < 1e-12);
    }

    #[test]
    fn smoothing_gap_bounds_and_brute_force() {
        let g = g64();
        // brute force over the wavenumber table
        let eps = 1e-3;
        let mut max = 0.0_f64;
        for &k in &g.wavenumbers() {
            max = max.max(1.0 - (-eps * (k * k) as f64).exp());
        }
        let gap = smoothing_gap(2.0, eps, &g);
        assert!((gap - max).abs() < 1e-15);
        assert!((gap - (1.0 - (-eps * 1024.0).exp())).abs() < 1e-15);
        assert!(gap > 0.0 && gap < 1.0);
    }

    #[test]
    fn smoothing_gap_monotone_in_eps() {
        // eps capped where 1 - exp(-eps k_max^2) is still below 1 in f64
        let g = g64();
        let mut last = 0.0;
        for eps in [1e-6, 1e-5, 1e-4, 1e-3, 1e-2] {
            let gap = smoothing_gap(2.0, eps, &g);
            assert!(gap > last && gap < 1.0);
            last = gap;
        }
    }

    #[test]
    fn dealias_keeps_low_modes_kills_nyquist() {
        let g = g64();
        let low = ScalarField::from_fn(&g, |x, _| (5.0 * x).sin());
        assert!(dealias(&low).sub(&low).max_abs() < 1e-12);

        let nyq = ScalarField::from_fn(&g, |x, _| (32.0 * x).cos());
        assert!(dealias(&nyq).max_abs() < 1e-12);
    }

    #[test]
    fn dealias_is_idempotent() {
        let g = g64();
        let f = ScalarField::from_fn(&g, |x, _| {
            (1.0 * x).sin() + (21.0 * x).sin() + (22.0 * x).sin() + (30.0 * x).cos()
        });
        let once = dealias(&f);
        let twice = dealias(&once);
        assert!(twice.sub(&once).max_abs() < 1e-12);
    }
}
