//! Thin FFT layer over `rustfft` with a process-wide plan cache.
//!
//! Coefficients are kept in full complex form in FFT bin order; `forward` is
//! unnormalized, `inverse` divides by `n^d`. For 2D data (x-fastest layout)
//! the transform is applied along rows, then columns.

use crate::field::ScalarField;
use crate::grid::TorusGrid;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Direction {
    Forward,
    Inverse,
}

type PlanCache = Mutex<HashMap<(usize, Direction), Arc<dyn Fft<f64>>>>;

fn plan(n: usize, dir: Direction) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry((n, dir))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            match dir {
                Direction::Forward => planner.plan_fft_forward(n),
                Direction::Inverse => planner.plan_fft_inverse(n),
            }
        })
        .clone()
}

fn transform_axes(grid: &TorusGrid, data: &mut [Complex64], dir: Direction) {
    let n = grid.n();
    let fft = plan(n, dir);
    match grid.dim() {
        1 => fft.process(data),
        _ => {
            // rows (x varies fastest)
            for row in data.chunks_exact_mut(n) {
                fft.process(row);
            }
            // columns, gathered into scratch
            let mut col = vec![Complex64::default(); n];
            for ix in 0..n {
                for iy in 0..n {
                    col[iy] = data[iy * n + ix];
                }
                fft.process(&mut col);
                for iy in 0..n {
                    data[iy * n + ix] = col[iy];
                }
            }
        }
    }
}

/// Unnormalized forward transform of real samples.
pub fn forward(grid: &TorusGrid, values: &[f64]) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_axes(grid, &mut data, Direction::Forward);
    data
}

/// Inverse transform back to real samples, normalized by `n^d`.
pub fn inverse(grid: &TorusGrid, coeffs: &[Complex64]) -> Vec<f64> {
    let mut data = coeffs.to_vec();
    transform_axes(grid, &mut data, Direction::Inverse);
    let scale = 1.0 / grid.len() as f64;
    data.iter().map(|c| c.re * scale).collect()
}

/// Apply a Fourier multiplier `m(kx, ky)` mode-wise to a scalar field
/// (`ky = 0` in 1D). The multiplier receives integer frequencies.
pub fn apply_multiplier(
    field: &ScalarField,
    m: impl Fn(i64, i64) -> Complex64,
) -> ScalarField {
    let grid = field.grid();
    let n = grid.n();
    let mut coeffs = forward(grid, field.values());
    match grid.dim() {
        1 => {
            for (j, c) in coeffs.iter_mut().enumerate() {
                *c *= m(grid.wavenumber(j), 0);
            }
        }
        _ => {
            for jy in 0..n {
                let ky = grid.wavenumber(jy);
                for jx in 0..n {
                    coeffs[jy * n + jx] *= m(grid.wavenumber(jx), ky);
                }
            }
        }
    }
    ScalarField::new(grid.clone(), inverse(grid, &coeffs)).expect("size preserved")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_1d() {
        let g = TorusGrid::new(1, 32).unwrap();
        let f = ScalarField::from_fn(&g, |x, _| (3.0 * x).sin() + 0.5 * x.cos());
        let coeffs = forward(&g, f.values());
        let back = inverse(&g, &coeffs);
        for (a, b) in back.iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn round_trip_2d() {
        let g = TorusGrid::new(2, 16).unwrap();
        let f = ScalarField::from_fn(&g, |x, y| x.sin() * (2.0 * y).cos());
        let coeffs = forward(&g, f.values());
        let back = inverse(&g, &coeffs);
        for (a, b) in back.iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn single_mode_lands_in_expected_bin() {
        let g = TorusGrid::new(1, 16).unwrap();
        let f = ScalarField::from_fn(&g, |x, _| (2.0 * x).cos());
        let coeffs = forward(&g, f.values());
        // cos(2x) = (e^{2ix} + e^{-2ix})/2 -> bins 2 and 14 hold n/2 each
        assert!((coeffs[2].re - 8.0).abs() < 1e-12);
        assert!((coeffs[14].re - 8.0).abs() < 1e-12);
        assert!(coeffs[3].norm() < 1e-12);
    }
}
