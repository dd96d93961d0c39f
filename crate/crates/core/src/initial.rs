//! Named initial-data presets and a Fourier-mode builder for (rho0, u0).
//!
//! The presets are smooth periodic Fourier polynomials; "steep" variants sit
//! close to gradient blowup and exist to exercise the failure paths.

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::TorusGrid;

/// One Fourier mode `cos_amp * cos(k . x) + sin_amp * sin(k . x)`.
#[derive(Debug, Clone, Copy)]
pub struct Mode {
    pub k: [i64; 2],
    pub cos_amp: f64,
    pub sin_amp: f64,
}

impl Mode {
    pub fn sin(k: [i64; 2], amp: f64) -> Self {
        Mode {
            k,
            cos_amp: 0.0,
            sin_amp: amp,
        }
    }

    pub fn cos(k: [i64; 2], amp: f64) -> Self {
        Mode {
            k,
            cos_amp: amp,
            sin_amp: 0.0,
        }
    }
}

/// `mean + sum of modes`, sampled on the grid.
pub fn fourier_scalar(grid: &TorusGrid, mean: f64, modes: &[Mode]) -> ScalarField {
    ScalarField::from_fn(grid, |x, y| {
        let mut v = mean;
        for m in modes {
            let phase = m.k[0] as f64 * x + m.k[1] as f64 * y;
            v += m.cos_amp * phase.cos() + m.sin_amp * phase.sin();
        }
        v
    })
}

/// Per-component mode lists for a vector field.
pub fn fourier_vector(grid: &TorusGrid, means: &[f64], modes: &[Vec<Mode>]) -> VectorField {
    let comps = (0..grid.dim())
        .map(|i| fourier_scalar(grid, means.get(i).copied().unwrap_or(0.0), &modes[i]))
        .collect();
    VectorField::new(comps).expect("component count matches dimension")
}

/// Initial data `(rho0, u0)` for a run.
#[derive(Debug, Clone)]
pub struct InitialData {
    pub rho0: ScalarField,
    pub u0: VectorField,
}

/// Names understood by [`preset`].
pub const PRESET_NAMES: &[&str] = &[
    "constant",
    "acoustic-1d",
    "smooth-1d",
    "multimode-1d",
    "traveling-1d",
    "steep-1d",
    "smooth-2d",
    "shear-2d",
];

/// Build a named preset on the given grid. 1D presets require `d = 1`,
/// 2D presets `d = 2`; `constant` works in both.
pub fn preset(name: &str, grid: &TorusGrid) -> Result<InitialData> {
    let d = grid.dim();
    let want = |need: usize| -> Result<()> {
        if d != need {
            return Err(Error::InvalidParameter {
                name: "preset",
                reason: format!("preset '{name}' needs a {need}D grid, got {d}D"),
            });
        }
        Ok(())
    };
    let data = match name {
        "constant" => InitialData {
            rho0: ScalarField::constant(grid, 1.0),
            u0: VectorField::constant(grid, &[0.3, 0.1]),
        },
        "acoustic-1d" => {
            want(1)?;
            InitialData {
                rho0: fourier_scalar(grid, 1.0, &[Mode::sin([1, 0], 1e-3)]),
                u0: VectorField::zeros(grid),
            }
        }
        "smooth-1d" => {
            want(1)?;
            InitialData {
                rho0: fourier_scalar(grid, 1.0, &[Mode::sin([1, 0], 0.2)]),
                u0: fourier_vector(grid, &[0.0], &[vec![Mode::sin([1, 0], 0.1)]]),
            }
        }
        "multimode-1d" => {
            want(1)?;
            InitialData {
                rho0: fourier_scalar(
                    grid,
                    1.0,
                    &[Mode::sin([1, 0], 0.2), Mode::cos([2, 0], 0.1)],
                ),
                u0: fourier_vector(
                    grid,
                    &[0.0],
                    &[vec![Mode::sin([1, 0], 0.1), Mode::cos([3, 0], 0.05)]],
                ),
            }
        }
        "traveling-1d" => {
            want(1)?;
            // right-moving simple wave at the linear level (u = c0 * drho)
            InitialData {
                rho0: fourier_scalar(grid, 1.0, &[Mode::sin([1, 0], 1e-3)]),
                u0: fourier_vector(grid, &[0.0], &[vec![Mode::sin([1, 0], 1e-3)]]),
            }
        }
        "steep-1d" => {
            want(1)?;
            InitialData {
                rho0: fourier_scalar(grid, 1.0, &[Mode::sin([1, 0], 0.9)]),
                u0: VectorField::zeros(grid),
            }
        }
        "smooth-2d" => {
            want(2)?;
            InitialData {
                rho0: ScalarField::from_fn(grid, |x, y| 1.0 + 0.2 * x.sin() * y.sin()),
                u0: VectorField::new(vec![
                    ScalarField::from_fn(grid, |x, y| 0.1 * x.sin() * y.cos()),
                    ScalarField::from_fn(grid, |x, y| -0.1 * x.cos() * y.sin()),
                ])
                .expect("2d components"),
            }
        }
        "shear-2d" => {
            want(2)?;
            InitialData {
                rho0: ScalarField::from_fn(grid, |_, y| 1.0 + 0.15 * y.cos()),
                u0: VectorField::new(vec![
                    ScalarField::from_fn(grid, |_, y| 0.2 * y.sin()),
                    ScalarField::constant(grid, 0.0),
                ])
                .expect("2d components"),
            }
        }
        other => {
            return Err(Error::InvalidParameter {
                name: "preset",
                reason: format!(
                    "unknown preset '{other}'; available: {}",
                    PRESET_NAMES.join(", ")
                ),
            })
        }
    };
    Ok(data)
}
