//! Real-valued fields sampled on a [`TorusGrid`].

use crate::error::{Error, Result};
use crate::grid::TorusGrid;

/// Scalar samples at the grid nodes, x-fastest layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch {
                left: grid.len(),
                right: values.len(),
            });
        }
        Ok(ScalarField { grid, values })
    }

    pub fn constant(grid: &TorusGrid, c: f64) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: vec![c; grid.len()],
        }
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Sample `f(x, y)` at every node (`y = 0` in 1D).
    pub fn from_fn(grid: &TorusGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: grid.sample(f),
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Mean over nodes; equals the integral under the normalized measure
    /// `dx/(2*pi)^d`.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        ScalarField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &ScalarField) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &ScalarField) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    /// `self + s * other`, the workhorse of the time steppers.
    pub fn axpy(&self, s: f64, other: &ScalarField) -> Self {
        self.zip_with(other, |a, b| a + s * b)
    }
}

/// Vector field with one [`ScalarField`] per spatial component.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        let d = components.len();
        if d != 1 && d != 2 {
            return Err(Error::BadDimension(d));
        }
        let grid = components[0].grid().clone();
        if grid.dim() != d {
            return Err(Error::BadDimension(d));
        }
        for c in &components[1..] {
            if *c.grid() != grid {
                return Err(Error::GridMismatch {
                    left: grid.len(),
                    right: c.grid().len(),
                });
            }
        }
        Ok(VectorField { components })
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        VectorField {
            components: (0..grid.dim()).map(|_| ScalarField::zeros(grid)).collect(),
        }
    }

    pub fn constant(grid: &TorusGrid, c: &[f64]) -> Self {
        VectorField {
            components: c
                .iter()
                .take(grid.dim())
                .map(|&v| ScalarField::constant(grid, v))
                .collect(),
        }
    }

    /// Sample per-component closures `f_i(x, y)`.
    pub fn from_fns(grid: &TorusGrid, fs: &[&dyn Fn(f64, f64) -> f64]) -> Self {
        VectorField {
            components: (0..grid.dim())
                .map(|i| ScalarField::from_fn(grid, |x, y| fs[i](x, y)))
                .collect(),
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        self.components[0].grid()
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &ScalarField {
        &self.components[i]
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [ScalarField] {
        &mut self.components
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.components
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(ScalarField::is_finite)
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .fold(0.0_f64, |m, c| m.max(c.max_abs()))
    }

    pub fn map(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        VectorField {
            components: self.components.iter().map(f).collect(),
        }
    }

    pub fn zip_with(&self, other: &VectorField, f: impl Fn(f64, f64) -> f64) -> Self {
        VectorField {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.zip_with(b, &f))
                .collect(),
        }
    }

    pub fn add(&self, other: &VectorField) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &VectorField) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|c| c.scale(s))
    }

    pub fn axpy(&self, s: f64, other: &VectorField) -> Self {
        self.zip_with(other, |a, b| a + s * b)
    }

    /// Pointwise squared magnitude `|u|^2`.
    pub fn norm_squared_field(&self) -> ScalarField {
        let mut out = self.components[0].mul(&self.components[0]);
        for c in &self.components[1..] {
            out = out.add(&c.mul(c));
        }
        out
    }
}

/// `d x d` matrix of scalar fields; entry `(i, j)` holds `d(component i)/dx_j`.
#[derive(Debug, Clone)]
pub struct MatrixField {
    d: usize,
    entries: Vec<ScalarField>, // row-major, d*d entries
}

impl MatrixField {
    pub fn from_entries(d: usize, entries: Vec<ScalarField>) -> Result<Self> {
        if d != 1 && d != 2 {
            return Err(Error::BadDimension(d));
        }
        if entries.len() != d * d {
            return Err(Error::GridMismatch {
                left: d * d,
                right: entries.len(),
            });
        }
        Ok(MatrixField { d, entries })
    }

    pub fn identity(grid: &TorusGrid) -> Self {
        let d = grid.dim();
        let entries = (0..d * d)
            .map(|e| {
                let (i, j) = (e / d, e % d);
                ScalarField::constant(grid, if i == j { 1.0 } else { 0.0 })
            })
            .collect();
        MatrixField { d, entries }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn grid(&self) -> &TorusGrid {
        self.entries[0].grid()
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarField {
        &self.entries[i * self.d + j]
    }

    /// Pointwise determinant.
    pub fn det(&self) -> ScalarField {
        match self.d {
            1 => self.entry(0, 0).clone(),
            _ => self
                .entry(0, 0)
                .mul(self.entry(1, 1))
                .sub(&self.entry(0, 1).mul(self.entry(1, 0))),
        }
    }

    /// Pointwise `M^T v`.
    pub fn transpose_apply(&self, v: &VectorField) -> VectorField {
        let comps = (0..self.d)
            .map(|j| {
                let mut acc = self.entry(0, j).mul(v.component(0));
                for i in 1..self.d {
                    acc = acc.add(&self.entry(i, j).mul(v.component(i)));
                }
                acc
            })
            .collect();
        VectorField { components: comps }
    }

    /// Pointwise `M v`.
    pub fn apply(&self, v: &VectorField) -> VectorField {
        let comps = (0..self.d)
            .map(|i| {
                let mut acc = self.entry(i, 0).mul(v.component(0));
                for j in 1..self.d {
                    acc = acc.add(&self.entry(i, j).mul(v.component(j)));
                }
                acc
            })
            .collect();
        VectorField { components: comps }
    }

    /// Pointwise matrix inverse; errors where the determinant vanishes.
    pub fn inverse(&self) -> Result<MatrixField> {
        let det = self.det();
        if det.values().iter().any(|&v| v.abs() < 1e-14) {
            return Err(Error::NonFinite {
                context: "matrix field inverse (singular entry)",
            });
        }
        let inv_det = det.map(|v| 1.0 / v);
        match self.d {
            1 => Ok(MatrixField {
                d: 1,
                entries: vec![inv_det],
            }),
            _ => {
                let e = |i: usize, j: usize| self.entry(i, j);
                let entries = vec![
                    e(1, 1).mul(&inv_det),
                    e(0, 1).scale(-1.0).mul(&inv_det),
                    e(1, 0).scale(-1.0).mul(&inv_det),
                    e(0, 0).mul(&inv_det),
                ];
                Ok(MatrixField { d: 2, entries })
            }
        }
    }
}
