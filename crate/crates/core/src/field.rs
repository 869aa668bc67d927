use ndarray::{Array2, Zip};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Axis;

/// Selects one of the two axes of a 2-D field. `A` indexes rows, `B` columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldAxis {
    A,
    B,
}

impl FieldAxis {
    pub fn index(self) -> usize {
        match self {
            FieldAxis::A => 0,
            FieldAxis::B => 1,
        }
    }

    pub fn other(self) -> FieldAxis {
        match self {
            FieldAxis::A => FieldAxis::B,
            FieldAxis::B => FieldAxis::A,
        }
    }
}

/// Complex samples on the product of two uniform axes, indexed `(a, b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField2D {
    pub axis_a: Axis,
    pub axis_b: Axis,
    pub values: Array2<Complex64>,
}

impl ComplexField2D {
    pub fn new(axis_a: Axis, axis_b: Axis, values: Array2<Complex64>) -> Result<Self> {
        if values.dim() != (axis_a.len, axis_b.len) {
            return Err(Error::contract(format!(
                "values shape {:?} does not match axes ({}, {})",
                values.dim(),
                axis_a.len,
                axis_b.len
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::contract("field contains non-finite entries"));
        }
        Ok(ComplexField2D {
            axis_a,
            axis_b,
            values,
        })
    }

    pub fn zeros(axis_a: Axis, axis_b: Axis) -> Self {
        ComplexField2D {
            axis_a,
            axis_b,
            values: Array2::zeros((axis_a.len, axis_b.len)),
        }
    }

    /// Samples `f(a, b)` on the grid coordinates.
    pub fn from_fn(axis_a: Axis, axis_b: Axis, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let values = Array2::from_shape_fn((axis_a.len, axis_b.len), |(i, j)| {
            f(axis_a.value(i), axis_b.value(j))
        });
        ComplexField2D {
            axis_a,
            axis_b,
            values,
        }
    }

    pub fn axis(&self, which: FieldAxis) -> &Axis {
        match which {
            FieldAxis::A => &self.axis_a,
            FieldAxis::B => &self.axis_b,
        }
    }

    pub fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn cell_area(&self) -> f64 {
        self.axis_a.spacing * self.axis_b.spacing
    }

    /// Discrete L2 norm with cell-area weighting, `sqrt(Σ|v|²·δa·δb)`.
    pub fn norm(&self) -> f64 {
        self.energy().sqrt()
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.cell_area()
    }

    /// Copy scaled to unit [`norm`](Self::norm).
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroTotal("cannot normalize a zero field".into()));
        }
        let mut out = self.clone();
        out.values.mapv_inplace(|v| v / n);
        Ok(out)
    }

    pub fn intensity(&self) -> Array2<f64> {
        self.values.mapv(|v| v.norm_sqr())
    }

    pub fn magnitude(&self) -> Array2<f64> {
        self.values.mapv(|v| v.norm())
    }

    pub fn phase(&self) -> Array2<f64> {
        self.values.mapv(|v| v.arg())
    }

    pub fn peak_magnitude(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.norm()))
    }

    /// Transposed copy: axes swapped.
    pub fn transposed(&self) -> Self {
        ComplexField2D {
            axis_a: self.axis_b,
            axis_b: self.axis_a,
            values: self.values.t().to_owned(),
        }
    }

    /// Pointwise product with `phase(a, b)` applied as `exp(i·phase)`.
    pub fn with_phase(&self, mut phase: impl FnMut(f64, f64) -> f64) -> Self {
        let mut out = self.clone();
        for ((i, j), v) in out.values.indexed_iter_mut() {
            let p = phase(self.axis_a.value(i), self.axis_b.value(j));
            *v *= Complex64::from_polar(1.0, p);
        }
        out
    }

    /// Largest `|a − b|` over matching entries.
    pub fn max_abs_diff(&self, other: &ComplexField2D) -> f64 {
        Zip::from(&self.values)
            .and(&other.values)
            .fold(0.0_f64, |m, a, b| m.max((a - b).norm()))
    }

    /// Largest magnitude on the first/last sample along `axis`, relative to the peak.
    pub fn edge_ratio(&self, axis: FieldAxis) -> f64 {
        let peak = self.peak_magnitude();
        if peak == 0.0 {
            return 0.0;
        }
        let n = self.axis(axis).len;
        let ax = ndarray::Axis(axis.index());
        let first = self.values.index_axis(ax, 0);
        let last = self.values.index_axis(ax, n - 1);
        first
            .iter()
            .chain(last.iter())
            .fold(0.0_f64, |m, v| m.max(v.norm()))
            / peak
    }
}
