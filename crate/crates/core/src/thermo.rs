//! Barotropic pressure laws `p(rho)` with `p'(rho) > 0` and the derived
//! enthalpy `h(rho)`, normalized so that `h(1) = 0`.
//!
//! The enthalpy is the primitive of `p'(rho)/rho`; its gradient replaces the
//! pressure term in the momentum equation. Any constant shift of `h` drops
//! out of the dynamics, so the normalization only pins down diagnostics.

use crate::error::{Error, Result};
use crate::field::ScalarField;

pub const DEFAULT_RHO_MIN: f64 = 1e-6;

#[derive(Debug, Clone)]
enum LawKind {
    /// p = kappa * rho^gamma, gamma > 1.
    Gamma { kappa: f64, gamma: f64 },
    /// p = kappa * rho (isothermal ideal gas), h = kappa * ln(rho).
    Isothermal { kappa: f64 },
    /// Monotone cubic Hermite interpolation of tabulated (rho, p) samples.
    Tabulated {
        rho: Vec<f64>,
        p: Vec<f64>,
        slope: Vec<f64>,
        /// h(rho_i) accumulated by per-segment Gauss quadrature of p'/rho.
        h_at: Vec<f64>,
    },
}

/// A pressure law together with its derivative and derived enthalpy.
#[derive(Debug, Clone)]
pub struct PressureLaw {
    kind: LawKind,
    rho_min: f64,
}

impl PressureLaw {
    /// Polytropic law `p = kappa rho^gamma`;
    /// `h = kappa*gamma/(gamma-1) * (rho^{gamma-1} - 1)`.
    pub fn gamma_law(kappa: f64, gamma: f64) -> Result<Self> {
        if kappa <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "kappa",
                reason: format!("need kappa > 0, got {kappa}"),
            });
        }
        if gamma <= 1.0 {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!("need gamma > 1, got {gamma} (use isothermal_law for gamma = 1)"),
            });
        }
        Ok(PressureLaw {
            kind: LawKind::Gamma { kappa, gamma },
            rho_min: DEFAULT_RHO_MIN,
        })
    }

    /// Isothermal law `p = kappa rho`, `h = kappa ln(rho)`.
    pub fn isothermal_law(kappa: f64) -> Result<Self> {
        if kappa <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "kappa",
                reason: format!("need kappa > 0, got {kappa}"),
            });
        }
        Ok(PressureLaw {
            kind: LawKind::Isothermal { kappa },
            rho_min: DEFAULT_RHO_MIN,
        })
    }

    /// Law from strictly increasing `(rho, p)` samples covering rho = 1.
    /// Pressure is interpolated by a monotone cubic Hermite (Fritsch-Carlson
    /// slopes), which keeps `p' > 0`; the enthalpy is accumulated by 4-point
    /// Gauss-Legendre quadrature of `p'/rho` on each segment.
    pub fn tabulated(samples: &[(f64, f64)]) -> Result<Self> {
        if samples.len() < 3 {
            return Err(Error::InvalidParameter {
                name: "samples",
                reason: "need at least 3 tabulated points".into(),
            });
        }
        let rho: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let p: Vec<f64> = samples.iter().map(|s| s.1).collect();
        if rho[0] <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "samples",
                reason: "tabulated densities must be positive".into(),
            });
        }
        for w in samples.windows(2) {
            if w[1].0 <= w[0].0 || w[1].1 <= w[0].1 {
                return Err(Error::InvalidParameter {
                    name: "samples",
                    reason: "tabulated (rho, p) must be strictly increasing in both columns"
                        .into(),
                });
            }
        }
        if rho[0] > 1.0 || *rho.last().unwrap() < 1.0 {
            return Err(Error::InvalidParameter {
                name: "samples",
                reason: "tabulated range must contain rho = 1 (enthalpy normalization)".into(),
            });
        }
        let slope = fritsch_carlson_slopes(&rho, &p);

        let mut law = PressureLaw {
            kind: LawKind::Tabulated {
                rho: rho.clone(),
                p,
                slope,
                h_at: vec![0.0; rho.len()],
            },
            rho_min: rho[0].max(DEFAULT_RHO_MIN),
        };
        // accumulate h on the table nodes, then shift so h(1) = 0
        let mut h_at = vec![0.0; rho.len()];
        for i in 1..rho.len() {
            h_at[i] = h_at[i - 1] + gauss4(rho[i - 1], rho[i], |r| law.dp(r) / r);
        }
        let h1 = {
            let i = segment_index(&rho, 1.0);
            h_at[i] + gauss4(rho[i], 1.0, |r| law.dp(r) / r)
        };
        for h in &mut h_at {
            *h -= h1;
        }
        if let LawKind::Tabulated { h_at: slot, .. } = &mut law.kind {
            *slot = h_at;
        }
        Ok(law)
    }

    pub fn with_rho_min(mut self, rho_min: f64) -> Self {
        self.rho_min = rho_min;
        self
    }

    /// Vacuum floor below which evaluations are refused.
    pub fn rho_min(&self) -> f64 {
        self.rho_min
    }

    /// Pressure `p(rho)`.
    pub fn p(&self, rho: f64) -> f64 {
        match &self.kind {
            LawKind::Gamma { kappa, gamma } => kappa * rho.powf(*gamma),
            LawKind::Isothermal { kappa } => kappa * rho,
            LawKind::Tabulated { rho: xs, p, slope, .. } => {
                let i = segment_index(xs, rho);
                hermite(xs[i], xs[i + 1], p[i], p[i + 1], slope[i], slope[i + 1], rho).0
            }
        }
    }

    /// `p'(rho)`; positive on the admissible range.
    pub fn dp(&self, rho: f64) -> f64 {
        match &self.kind {
            LawKind::Gamma { kappa, gamma } => kappa * gamma * rho.powf(gamma - 1.0),
            LawKind::Isothermal { kappa } => *kappa,
            LawKind::Tabulated { rho: xs, p, slope, .. } => {
                let i = segment_index(xs, rho);
                hermite(xs[i], xs[i + 1], p[i], p[i + 1], slope[i], slope[i + 1], rho).1
            }
        }
    }

    /// Enthalpy `h(rho)` with `h(1) = 0`.
    pub fn h(&self, rho: f64) -> f64 {
        match &self.kind {
            LawKind::Gamma { kappa, gamma } => {
                kappa * gamma / (gamma - 1.0) * (rho.powf(gamma - 1.0) - 1.0)
            }
            LawKind::Isothermal { kappa } => kappa * rho.ln(),
            LawKind::Tabulated { rho: xs, h_at, .. } => {
                let i = segment_index(xs, rho);
                h_at[i] + gauss4(xs[i], rho, |r| self.dp(r) / r)
            }
        }
    }

    /// `h'(rho) = p'(rho)/rho`, the defining relation.
    pub fn dh(&self, rho: f64) -> f64 {
        self.dp(rho) / rho
    }

    /// Sound speed `c(rho) = sqrt(p'(rho))`.
    pub fn sound_speed(&self, rho: f64) -> f64 {
        self.dp(rho).sqrt()
    }

    /// Node-wise enthalpy of a density field; errors on near-vacuum input.
    pub fn enthalpy_field(&self, rho: &ScalarField) -> Result<ScalarField> {
        self.check_density(rho, f64::NAN)?;
        Ok(rho.map(|r| self.h(r)))
    }

    /// Reject densities at or below the vacuum floor; `t` tags the error.
    pub fn check_density(&self, rho: &ScalarField, t: f64) -> Result<()> {
        let min = rho.min();
        if !min.is_finite() || min < self.rho_min {
            return Err(Error::Vacuum { t, min_rho: min });
        }
        Ok(())
    }
}

/// Index of the table segment containing `x` (clamped to the end segments).
fn segment_index(xs: &[f64], x: f64) -> usize {
    match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => i.min(xs.len() - 2),
        Err(0) => 0,
        Err(i) => (i - 1).min(xs.len() - 2),
    }
}

/// Cubic Hermite value and derivative on `[x0, x1]`.
fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, m0: f64, m1: f64, x: f64) -> (f64, f64) {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * m0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * m1;
    let dv = ((6.0 * t2 - 6.0 * t) * y0
        + (3.0 * t2 - 4.0 * t + 1.0) * h * m0
        + (-6.0 * t2 + 6.0 * t) * y1
        + (3.0 * t2 - 2.0 * t) * h * m1)
        / h;
    (v, dv)
}

/// Monotonicity-preserving slopes for strictly increasing data.
fn fritsch_carlson_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let d: Vec<f64> = (0..n - 1)
        .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
        .collect();
    let mut m = vec![0.0; n];
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for i in 1..n - 1 {
        m[i] = 0.5 * (d[i - 1] + d[i]);
    }
    for i in 0..n - 1 {
        let a = m[i] / d[i];
        let b = m[i + 1] / d[i];
        let s = a * a + b * b;
        if s > 9.0 {
            let tau = 3.0 / s.sqrt();
            m[i] = tau * a * d[i];
            m[i + 1] = tau * b * d[i];
        }
    }
    m
}

/// 4-point Gauss-Legendre quadrature on `[a, b]` (signed when b < a).
fn gauss4(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    const X: [f64; 4] = [
        -0.861136311594053,
        -0.339981043584856,
        0.339981043584856,
        0.861136311594053,
    ];
    const W: [f64; 4] = [
        0.347854845137454,
        0.652145154862546,
        0.652145154862546,
        0.347854845137454,
    ];
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    half * X
        .iter()
        .zip(&W)
        .map(|(&x, &w)| w * f(mid + half * x))
        .sum::<f64>()
}
