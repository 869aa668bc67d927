use ndarray::Array2;
use num_complex::Complex64;
use std::collections::VecDeque;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::interferometer::FringeScan;
use crate::retrieval::zonal::PhaseSurface;

/// Peaks below this fraction of the spectrum maximum are ignored.
pub const PEAK_FLOOR: f64 = 0.1;

/// Minimum number of fringe peaks for a position to count.
pub const MIN_PEAKS: usize = 3;

/// Slowly varying part of a fringe spectrum: Gaussian smoothing with a
/// standard deviation of one fringe period, which suppresses the fringe term
/// by exp(−2π²).
pub fn fringe_envelope(spectrum: &[f64], period_bins: f64) -> Vec<f64> {
    let half = (4.0 * period_bins).ceil() as isize;
    let kernel: Vec<f64> = (-half..=half)
        .map(|d| (-(d as f64).powi(2) / (2.0 * period_bins * period_bins)).exp())
        .collect();
    let n = spectrum.len() as isize;
    (0..n)
        .map(|k| {
            let (mut acc, mut w) = (0.0, 0.0);
            for (d, g) in (-half..=half).zip(&kernel) {
                let m = k + d;
                if (0..n).contains(&m) {
                    acc += g * spectrum[m as usize];
                    w += g;
                }
            }
            acc / w
        })
        .collect()
}

/// Fringe maxima of `spectrum`, in fractional bins.
///
/// The spectrum is divided by [`fringe_envelope`] so the envelope slope does
/// not pull the maxima, then local maxima are refined by a three-point
/// parabola. Only samples above [`PEAK_FLOOR`] of the raw maximum count. A
/// flat top `s[k] == s[k+1]` reports the lower index.
pub fn fringe_peaks(spectrum: &[f64], period_bins: f64) -> Vec<f64> {
    let floor = PEAK_FLOOR * spectrum.iter().cloned().fold(0.0, f64::max);
    let env = fringe_envelope(spectrum, period_bins);
    let s: Vec<f64> = spectrum
        .iter()
        .zip(&env)
        .map(|(v, e)| if *e > 0.0 { v / e } else { 0.0 })
        .collect();
    local_maxima(&s, |k| spectrum[k] > floor)
}

fn local_maxima(s: &[f64], keep: impl Fn(usize) -> bool) -> Vec<f64> {
    let mut out = Vec::new();
    for k in 1..s.len().saturating_sub(1) {
        let (l, c, r) = (s[k - 1], s[k], s[k + 1]);
        if c > l && c >= r && keep(k) {
            let den = l - 2.0 * c + r;
            let off = if den < 0.0 { 0.5 * (l - r) / den } else { 0.0 };
            out.push(k as f64 + off);
        }
    }
    out
}

/// Fringe phase of one spectrum relative to a set of reference peaks, in
/// (−π, π]. Each peak is compared with its nearest reference peak; the shifts
/// are averaged on the circle so a half-period offset is not split between
/// ±π.
fn relative_phase(peaks: &[f64], reference: &[f64], period_bins: f64) -> f64 {
    let sum: Complex64 = peaks
        .iter()
        .map(|&p| {
            let near = reference
                .iter()
                .cloned()
                .min_by(|a, b| (a - p).abs().total_cmp(&(b - p).abs()))
                .unwrap_or(p);
            Complex64::from_polar(1.0, 2.0 * PI * (p - near) / period_bins)
        })
        .sum();
    let phi = sum.arg();
    if phi <= -PI + 1e-12 {
        PI
    } else {
        phi
    }
}

fn wrap(x: f64) -> f64 {
    x - 2.0 * PI * ((x + PI) / (2.0 * PI)).floor()
}

/// Spatial wavefront from the fringe positions of a scan.
///
/// Peak shifts are measured against `reference` (the origin spectrum by
/// default), converted to phase as 2π·shift/period and unwrapped over the
/// grid by flood fill from the origin. Positions with fewer than
/// [`MIN_PEAKS`] peaks are masked out; cells not reachable from the origin
/// start a new component with a warning.
pub fn track_fringes(scan: &FringeScan, reference: Option<&[f64]>) -> Result<PhaseSurface> {
    let grid = scan.grid;
    let period_bins = scan.config.period() / scan.axis.spacing;
    let origin = grid.origin();
    let origin_spectrum;
    let reference = match reference {
        Some(r) if r.len() != scan.axis.len => {
            return Err(Error::contract("reference spectrum length differs from the scan axis"))
        }
        Some(r) => r,
        None => {
            origin_spectrum = scan.spectrum(origin);
            &origin_spectrum
        }
    };
    let ref_peaks = fringe_peaks(reference, period_bins);
    if ref_peaks.len() < MIN_PEAKS {
        return Err(Error::Missing(format!(
            "reference spectrum has {} fringe peaks, needs {MIN_PEAKS}",
            ref_peaks.len()
        )));
    }

    let dim = (grid.n_x, grid.n_y);
    let mut raw = Array2::zeros(dim);
    let mut mask = Array2::from_elem(dim, false);
    for p in grid.points() {
        let peaks = fringe_peaks(&scan.spectrum(p), period_bins);
        if peaks.len() >= MIN_PEAKS {
            raw[p] = relative_phase(&peaks, &ref_peaks, period_bins);
            mask[p] = true;
        }
    }
    let mut warnings = Vec::new();
    let invalid = mask.iter().filter(|m| !**m).count();
    if invalid > 0 {
        warnings.push(format!("{invalid} positions have fewer than {MIN_PEAKS} fringe peaks"));
    }
    if !mask[origin] {
        return Err(Error::Missing(format!("origin position {origin:?} has no usable fringes")));
    }

    let mut values = Array2::zeros(dim);
    let mut labels = Array2::from_elem(dim, -1i64);
    let mut pins = Vec::new();
    let starts = std::iter::once(origin).chain(grid.points());
    for start in starts {
        if !mask[start] || labels[start] >= 0 {
            continue;
        }
        let label = pins.len() as i64;
        pins.push((start[0], start[1]));
        values[start] = raw[start];
        labels[start] = label;
        let mut queue = VecDeque::from([start]);
        while let Some([i, j]) = queue.pop_front() {
            let near = [
                (i.wrapping_sub(1), j),
                (i + 1, j),
                (i, j.wrapping_sub(1)),
                (i, j + 1),
            ];
            for (a, b) in near {
                if a >= dim.0 || b >= dim.1 || !mask[[a, b]] || labels[[a, b]] >= 0 {
                    continue;
                }
                values[[a, b]] = values[[i, j]] + wrap(raw[[a, b]] - values[[i, j]]);
                labels[[a, b]] = label;
                queue.push_back([a, b]);
            }
        }
    }
    if pins.len() > 1 {
        warnings.push(format!("{} disconnected regions; offsets between them are unknown", pins.len()));
    }
    Ok(PhaseSurface {
        values,
        mask,
        axis_a: grid.x_axis(),
        axis_b: grid.y_axis(),
        components: pins.len(),
        pins,
        residual_rms: 0.0,
        labels,
        weights: None,
        warnings,
    })
}
