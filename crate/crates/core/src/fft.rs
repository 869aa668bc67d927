//! Centred, unitary Fourier transforms on [`ComplexField2D`].
//!
//! Kernel convention (shared by every module that transforms fields):
//!
//! ```text
//! Forward:  F(t) = (1/√2π) Σ f(ν) e^{+iνt} δν
//! Inverse:  f(ν) = (1/√2π) Σ F(t) e^{−iνt} δt
//! ```
//!
//! so a spectral amplitude `A(ν)·e^{iνc}` maps under [`Direction::Inverse`]
//! to a temporal pulse centred at `t = +c`. Spectral fields are taken to the
//! time domain with `Inverse` and brought back with `Forward`. With the
//! `δ/√2π` weights the transforms conserve `Σ|v|²·cell_area` exactly.

use ndarray::Axis as NdAxis;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{ComplexField2D, FieldAxis};
use crate::grid::Axis;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Reusable 1-D centred transform of a fixed length.
pub struct CenteredFft {
    len: usize,
    plan: Arc<dyn Fft<f64>>,
    direction: Direction,
    scratch: Vec<Complex64>,
}

impl CenteredFft {
    pub fn new(len: usize, direction: Direction) -> Result<Self> {
        if !len.is_power_of_two() || len < 2 {
            return Err(Error::contract(format!(
                "FFT length must be a power of two, got {len}"
            )));
        }
        let mut planner = FftPlanner::new();
        // Forward kernel e^{+i...} is rustfft's inverse direction.
        let plan = match direction {
            Direction::Forward => planner.plan_fft_inverse(len),
            Direction::Inverse => planner.plan_fft_forward(len),
        };
        let scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        Ok(CenteredFft {
            len,
            plan,
            direction,
            scratch,
        })
    }

    /// Transforms `buf` in place; `spacing` is the sample spacing of the input axis.
    pub fn process(&mut self, buf: &mut [Complex64], spacing: f64) {
        debug_assert_eq!(buf.len(), self.len);
        for (n, v) in buf.iter_mut().enumerate() {
            if n % 2 == 1 {
                *v = -*v;
            }
        }
        self.plan.process_with_scratch(buf, &mut self.scratch);
        // e^{±iπN/2} global factor, then (−1)^k output modulation.
        let half = self.len / 2;
        let global = if half.is_multiple_of(2) { 1.0 } else { -1.0 };
        let scale = global * spacing / (2.0 * PI).sqrt();
        for (k, v) in buf.iter_mut().enumerate() {
            let s = if k % 2 == 1 { -scale } else { scale };
            *v *= s;
        }
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }
}

fn check_power_of_two(axis: &Axis, which: usize) -> Result<()> {
    if !axis.is_power_of_two() {
        return Err(Error::contract(format!(
            "axis {which} has length {}, which is not a power of two",
            axis.len
        )));
    }
    Ok(())
}

/// Transforms `field` along one axis; that axis becomes its conjugate.
pub fn fft1_along_axis(
    field: &ComplexField2D,
    axis: FieldAxis,
    direction: Direction,
) -> Result<ComplexField2D> {
    let ax = *field.axis(axis);
    check_power_of_two(&ax, axis.index())?;
    let mut out = field.clone();
    let mut fft = CenteredFft::new(ax.len, direction)?;
    let mut buf = vec![Complex64::new(0.0, 0.0); ax.len];
    for mut lane in out.values.lanes_mut(NdAxis(axis.index())) {
        for (b, v) in buf.iter_mut().zip(lane.iter()) {
            *b = *v;
        }
        fft.process(&mut buf, ax.spacing);
        for (v, b) in lane.iter_mut().zip(buf.iter()) {
            *v = *b;
        }
    }
    match axis {
        FieldAxis::A => out.axis_a = ax.conjugate(),
        FieldAxis::B => out.axis_b = ax.conjugate(),
    }
    Ok(out)
}

/// Unitary centred 2-D transform.
pub fn fft2_centered(field: &ComplexField2D, direction: Direction) -> Result<ComplexField2D> {
    check_power_of_two(&field.axis_a, 0)?;
    check_power_of_two(&field.axis_b, 1)?;
    let tmp = fft1_along_axis(field, FieldAxis::A, direction)?;
    fft1_along_axis(&tmp, FieldAxis::B, direction)
}

/// Centred 1-D transform of a slice sampled at `spacing`.
pub fn fft1(values: &[Complex64], spacing: f64, direction: Direction) -> Result<Vec<Complex64>> {
    let mut buf = values.to_vec();
    CenteredFft::new(values.len(), direction)?.process(&mut buf, spacing);
    Ok(buf)
}
