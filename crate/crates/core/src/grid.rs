//! Uniform periodic grids on the torus `[0, 2*pi)^d`, d = 1 or 2.

use crate::error::{Error, Result};
use std::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;

/// Descriptor of a uniform grid on `[0, 2*pi)^d` with periodic identification.
///
/// Nodes along each axis sit at `x_j = 2*pi*j/n`. The wavenumber table uses
/// the usual FFT ordering `0, 1, ..., n/2-1, -n/2, ..., -1`; frequencies are
/// integers because the period is `2*pi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TorusGrid {
    d: usize,
    n: usize,
}

impl TorusGrid {
    /// Build a grid with `n` points per axis. `n` must be even and at least 8;
    /// powers of two keep the FFTs fast but are not required.
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if d != 1 && d != 2 {
            return Err(Error::BadDimension(d));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::BadGridSize(n));
        }
        Ok(TorusGrid { d, n })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of nodes, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing `2*pi/n`.
    pub fn spacing(&self) -> f64 {
        TWO_PI / self.n as f64
    }

    /// Integer frequency for FFT bin `j` along one axis.
    pub fn wavenumber(&self, j: usize) -> i64 {
        if j < self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    /// Full per-axis wavenumber table in FFT bin order.
    pub fn wavenumbers(&self) -> Vec<i64> {
        (0..self.n).map(|j| self.wavenumber(j)).collect()
    }

    /// Largest `|k|^2` over all resolved modes (attained at the Nyquist mode).
    pub fn max_k_squared(&self) -> f64 {
        let nyq = (self.n / 2) as f64;
        self.d as f64 * nyq * nyq
    }

    /// Per-axis mode cutoff of the 2/3 dealiasing rule: modes with
    /// `|k| > n/3` along any axis are discarded.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.n / 3) as i64
    }

    /// Node coordinate along one axis.
    pub fn node(&self, j: usize) -> f64 {
        self.spacing() * j as f64
    }

    /// Flat index of the node `(ix)` or `(ix, iy)`; layout is x-fastest.
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        debug_assert!(ix < self.n && (self.d == 2 || iy == 0));
        iy * self.n + ix
    }

    /// Coordinates of the node with flat index `idx`.
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let ix = idx % self.n;
        let iy = idx / self.n;
        [self.node(ix), self.node(iy)]
    }

    /// Evaluate `f` at every node; `f` receives `(x, y)` with `y = 0` in 1D.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..self.len())
            .map(|idx| {
                let [x, y] = self.coords(idx);
                f(x, y)
            })
            .collect()
    }
}

/// Wrap a coordinate difference into `(-pi, pi]`, the shortest periodic
/// representative. Used when comparing positions on the torus.
pub fn wrap_to_pi(x: f64) -> f64 {
    let mut r = x % TWO_PI;
    if r > PI {
        r -= TWO_PI;
    } else if r <= -PI {
        r += TWO_PI;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_1d_nodes() {
        let g = TorusGrid::new(1, 8).unwrap();
        assert_eq!(g.len(), 8);
        assert!((g.spacing() - PI / 4.0).abs() < 1e-15);
        for j in 0..8 {
            assert!((g.node(j) - PI / 4.0 * j as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn grid_2d_counts() {
        let g = TorusGrid::new(2, 16).unwrap();
        assert_eq!(g.len(), 256);
        assert!((g.spacing() - PI / 8.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_odd_and_small_n() {
        assert!(matches!(TorusGrid::new(1, 7), Err(Error::BadGridSize(7))));
        assert!(matches!(TorusGrid::new(1, 6), Err(Error::BadGridSize(6))));
        assert!(matches!(TorusGrid::new(3, 8), Err(Error::BadDimension(3))));
    }

    #[test]
    fn wavenumber_table_is_symmetric_with_nyquist() {
        let g = TorusGrid::new(1, 8).unwrap();
        assert_eq!(g.wavenumbers(), vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert_eq!(g.max_k_squared(), 16.0);
    }

    #[test]
    fn wrap_is_shortest_representative() {
        assert!((wrap_to_pi(4.0) - (4.0 - TWO_PI)).abs() < 1e-15);
        assert!((wrap_to_pi(-4.0) - (TWO_PI - 4.0)).abs() < 1e-15);
        assert!((wrap_to_pi(PI) - PI).abs() < 1e-15);
        assert!((wrap_to_pi(-PI) - PI).abs() < 1e-15);
    }
}
