use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::FieldAxis;
use crate::grid::Axis;
use crate::interferometer::Arm;
use crate::retrieval::sideband::Sideband;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradientConfig {
    /// Cells with `|sb|` below this fraction of the peak are masked out.
    pub mask_threshold: f64,
    /// Largest accepted wrapped step between neighbouring cells, rad.
    pub jump_limit: f64,
}

impl Default for GradientConfig {
    fn default() -> Self {
        GradientConfig {
            mask_threshold: 0.05,
            jump_limit: 2.0,
        }
    }
}

impl GradientConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mask_threshold > 0.0 && self.mask_threshold < 1.0) {
            return Err(Error::config("gradient.mask_threshold", format!("must be in (0, 1), got {}", self.mask_threshold)));
        }
        if !(self.jump_limit > 0.0 && self.jump_limit <= PI) {
            return Err(Error::config("gradient.jump_limit", format!("must be in (0, π], got {}", self.jump_limit)));
        }
        Ok(())
    }
}

/// `Δφ(ν) = φ(ν) − φ(ν + Ω)` along one axis, unwrapped on the mask.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    pub arm: Arm,
    pub values: Array2<f64>,
    pub mask: Array2<bool>,
    /// Unwrapping segment of each masked cell; cells share a 2π branch only
    /// within one segment.
    pub segment: Array2<u32>,
    /// `|sb|`, used as fit weight.
    pub weights: Array2<f64>,
    /// Ω, rad/fs.
    pub shear: f64,
    pub axis_a: Axis,
    pub axis_b: Axis,
    pub warnings: Vec<String>,
}

impl GradientField {
    pub fn axis(&self) -> FieldAxis {
        self.arm.field_axis()
    }

    pub fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }

    /// Builds a gradient field directly from `Δφ` samples (all in one segment
    /// per lane), e.g. from an analytic phase.
    pub fn from_values(arm: Arm, shear: f64, axis_a: Axis, axis_b: Axis, values: Array2<f64>, mask: Array2<bool>) -> Result<Self> {
        if values.dim() != (axis_a.len, axis_b.len) || mask.dim() != values.dim() {
            return Err(Error::contract("gradient values and mask must match the axes"));
        }
        let weights = mask.mapv(|m| if m { 1.0 } else { 0.0 });
        let mut g = GradientField {
            arm,
            values,
            mask,
            segment: Array2::zeros((axis_a.len, axis_b.len)),
            weights,
            shear,
            axis_a,
            axis_b,
            warnings: Vec::new(),
        };
        g.relabel_segments();
        Ok(g)
    }

    /// Assigns one segment id per contiguous masked run along the shear axis.
    fn relabel_segments(&mut self) {
        let axis = self.axis();
        let (n_along, n_lanes) = lane_dims(self.dim(), axis);
        let mut id = 0u32;
        for l in 0..n_lanes {
            let mut prev = false;
            for k in 0..n_along {
                let c = cell(axis, k, l);
                if self.mask[c] {
                    if !prev {
                        id += 1;
                    }
                    self.segment[c] = id;
                }
                prev = self.mask[c];
            }
        }
    }
}

/// (length along `axis`, number of lanes).
pub(crate) fn lane_dims(dim: (usize, usize), axis: FieldAxis) -> (usize, usize) {
    match axis {
        FieldAxis::A => (dim.0, dim.1),
        FieldAxis::B => (dim.1, dim.0),
    }
}

/// Index of sample `k` of lane `l` for a shear along `axis`.
#[inline]
pub(crate) fn cell(axis: FieldAxis, k: usize, l: usize) -> (usize, usize) {
    match axis {
        FieldAxis::A => (k, l),
        FieldAxis::B => (l, k),
    }
}

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

/// Removes the `ντ` ramp from the sideband phase, unwraps each lane along the
/// shear axis, and aligns the 2π branch of each lane with its neighbours,
/// starting from the lane through the magnitude-weighted centroid.
pub fn gradient_from_sideband(sb: &Sideband, cfg: &GradientConfig) -> Result<GradientField> {
    cfg.validate()?;
    let axis = sb.shear.arm.field_axis();
    let field = &sb.field;
    let ax = *field.axis(axis);
    let dim = field.dim();
    let (n_along, n_lanes) = lane_dims(dim, axis);
    let tau = sb.shear.delay;
    let mag = field.magnitude();
    let peak = field.peak_magnitude();
    if peak == 0.0 {
        return Err(Error::ZeroTotal("sideband is identically zero".into()));
    }
    let mut mask = mag.mapv(|m| m > cfg.mask_threshold * peak);
    let raw = Array2::from_shape_fn(dim, |(i, j)| {
        let k = if axis == FieldAxis::A { i } else { j };
        (field.values[[i, j]] * Complex64::from_polar(1.0, -ax.value(k) * tau)).arg()
    });

    let mut warnings = Vec::new();
    let mut values = Array2::<f64>::zeros(dim);
    let mut segment = Array2::<u32>::zeros(dim);
    // segments[l] = list of (start, end_exclusive, id)
    let mut segments: Vec<Vec<(usize, usize, u32)>> = vec![Vec::new(); n_lanes];
    let mut next_id = 0u32;
    for (l, lane_segments) in segments.iter_mut().enumerate() {
        let mut k = 0;
        while k < n_along {
            if !mask[cell(axis, k, l)] {
                k += 1;
                continue;
            }
            next_id += 1;
            let start = k;
            values[cell(axis, k, l)] = raw[cell(axis, k, l)];
            segment[cell(axis, k, l)] = next_id;
            k += 1;
            while k < n_along && mask[cell(axis, k, l)] {
                let step = wrap(raw[cell(axis, k, l)] - raw[cell(axis, k - 1, l)]);
                if step.abs() > cfg.jump_limit {
                    mask[cell(axis, k, l)] = false;
                    warnings.push(format!(
                        "unwrap jump {step:.3} rad at lane {l}, sample {k}; cell excluded"
                    ));
                    break;
                }
                values[cell(axis, k, l)] = values[cell(axis, k - 1, l)] + step;
                segment[cell(axis, k, l)] = next_id;
                k += 1;
            }
            lane_segments.push((start, k, next_id));
        }
    }

    // Centroid lane and sample.
    let (mut w, mut ck, mut cl) = (0.0, 0.0, 0.0);
    for ((i, j), &m) in mask.indexed_iter() {
        if m {
            let (k, l) = if axis == FieldAxis::A { (i, j) } else { (j, i) };
            w += mag[[i, j]];
            ck += mag[[i, j]] * k as f64;
            cl += mag[[i, j]] * l as f64;
        }
    }
    if w == 0.0 {
        return Err(Error::ZeroTotal("empty gradient mask".into()));
    }
    let (k0, l0) = ((ck / w).round() as usize, (cl / w).round() as usize);
    let start_lane = (0..n_lanes)
        .filter(|&l| !segments[l].is_empty())
        .min_by_key(|&l| (l as i64 - l0 as i64).abs())
        .expect("mask is nonempty");

    let mut aligned = vec![false; n_lanes];
    let shift_segment = |values: &mut Array2<f64>, l: usize, (s, e, _): (usize, usize, u32), by: f64| {
        for k in s..e {
            values[cell(axis, k, l)] += by;
        }
    };
    // Start lane: the segment nearest the centroid sample gets the principal branch there.
    {
        let segs = &segments[start_lane];
        let first = segs
            .iter()
            .copied()
            .min_by_key(|&(s, e, _)| if k0 < s { s - k0 } else if k0 >= e { k0 + 1 - e } else { 0 })
            .expect("nonempty");
        let k_ref = k0.clamp(first.0, first.1 - 1);
        let v = values[cell(axis, k_ref, start_lane)];
        shift_segment(&mut values, start_lane, first, wrap(v) - v);
        align_within_lane(&mut values, axis, start_lane, segs, first.2);
        aligned[start_lane] = true;
    }
    let order: Vec<usize> = (start_lane + 1..n_lanes).chain((0..start_lane).rev()).collect();
    for l in order {
        if segments[l].is_empty() {
            continue;
        }
        let neighbour = if l > start_lane { l - 1 } else { l + 1 };
        let mut anchored = None;
        for &seg in &segments[l] {
            let (s, e, _) = seg;
            let mut diffs = Vec::new();
            if aligned[neighbour] {
                for k in s..e {
                    if mask[cell(axis, k, neighbour)] {
                        diffs.push(values[cell(axis, k, neighbour)] - values[cell(axis, k, l)]);
                    }
                }
            }
            if !diffs.is_empty() {
                let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
                shift_segment(&mut values, l, seg, 2.0 * PI * (mean / (2.0 * PI)).round());
                anchored.get_or_insert(seg.2);
            }
        }
        match anchored {
            Some(id) => align_within_lane(&mut values, axis, l, &segments[l], id),
            None => {
                // No overlap with the neighbour: principal branch at the lane's first segment.
                let first = segments[l][0];
                let v = values[cell(axis, (first.0 + first.1) / 2, l)];
                shift_segment(&mut values, l, first, wrap(v) - v);
                align_within_lane(&mut values, axis, l, &segments[l], first.2);
                warnings.push(format!("lane {l} does not overlap its neighbour; branch chosen locally"));
            }
        }
        aligned[l] = true;
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    values.zip_mut_with(&mask, |v, &m| {
        if !m {
            *v = 0.0;
        }
    });
    segment.zip_mut_with(&mask, |s, &m| {
        if !m {
            *s = 0;
        }
    });
    Ok(GradientField {
        arm: sb.shear.arm,
        values,
        mask,
        segment,
        weights: mag,
        shear: sb.shear.shear,
        axis_a: field.axis_a,
        axis_b: field.axis_b,
        warnings,
    })
}

/// Aligns the segments of one lane that were not anchored to a neighbour lane,
/// by continuity across the gap to the nearest already-aligned segment.
fn align_within_lane(values: &mut Array2<f64>, axis: FieldAxis, l: usize, segs: &[(usize, usize, u32)], anchor: u32) {
    let Some(pos) = segs.iter().position(|s| s.2 == anchor) else {
        return;
    };
    for w in (pos + 1)..segs.len() {
        let prev_end = values[cell(axis, segs[w - 1].1 - 1, l)];
        let start = values[cell(axis, segs[w].0, l)];
        let by = 2.0 * PI * ((prev_end - start) / (2.0 * PI)).round();
        for k in segs[w].0..segs[w].1 {
            values[cell(axis, k, l)] += by;
        }
    }
    for w in (0..pos).rev() {
        let next_start = values[cell(axis, segs[w + 1].0, l)];
        let end = values[cell(axis, segs[w].1 - 1, l)];
        let by = 2.0 * PI * ((next_start - end) / (2.0 * PI)).round();
        for k in segs[w].0..segs[w].1 {
            values[cell(axis, k, l)] += by;
        }
    }
}

/// A finite-difference constraint `φ(to) − φ(from) = target`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Link {
    pub from: (usize, usize),
    pub to: (usize, usize),
    pub target: f64,
}

/// Value and second derivative (index units) of the cubic through four samples
/// at offsets 0..3, evaluated at `t`.
fn lagrange4(y: [f64; 4], t: f64) -> (f64, f64) {
    let l = [
        -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0,
        t * (t - 2.0) * (t - 3.0) / 2.0,
        -t * (t - 1.0) * (t - 3.0) / 2.0,
        t * (t - 1.0) * (t - 2.0) / 6.0,
    ];
    let d2 = [-(6.0 * t - 12.0) / 6.0, (6.0 * t - 10.0) / 2.0, -(6.0 * t - 8.0) / 2.0, (6.0 * t - 6.0) / 6.0];
    let v = (0..4).map(|i| l[i] * y[i]).sum();
    let c = (0..4).map(|i| d2[i] * y[i]).sum();
    (v, c)
}

/// Neighbour links along the shear axis.
///
/// With `D(ν) = −Δφ(ν) = φ(ν+Ω) − φ(ν)` and link midpoint `m`, the target is
/// `(δ/Ω)·[D(p) + (δ² − Ω²)/24·D''(p)]` at `p = m − Ω/2`, which equals
/// `φ(m + δ/2) − φ(m − δ/2)` exactly for cubic phases. `D` is interpolated
/// with a cubic through four same-segment samples (shifted inward near run
/// ends, extrapolating at most one cell), or linearly on runs of two or three.
pub fn link_targets(g: &GradientField) -> Vec<Link> {
    let axis = g.axis();
    let ax = match axis {
        FieldAxis::A => g.axis_a,
        FieldAxis::B => g.axis_b,
    };
    let (n_along, n_lanes) = lane_dims(g.dim(), axis);
    let d = ax.spacing;
    let omega = g.shear;
    if omega == 0.0 {
        return Vec::new();
    }
    let offset = 0.5 - omega / (2.0 * d);
    let mut links = Vec::new();
    for l in 0..n_lanes {
        // Runs of same-segment masked samples, as (start, end_exclusive).
        let mut run_of = vec![None; n_along];
        let mut k = 0;
        while k < n_along {
            let c = cell(axis, k, l);
            if !g.mask[c] {
                k += 1;
                continue;
            }
            let (start, seg) = (k, g.segment[c]);
            while k < n_along && g.mask[cell(axis, k, l)] && g.segment[cell(axis, k, l)] == seg {
                k += 1;
            }
            for r in run_of.iter_mut().take(k).skip(start) {
                *r = Some((start, k));
            }
        }
        let d_at = |j: usize| -g.values[cell(axis, j, l)];
        for k in 0..n_along.saturating_sub(1) {
            let (c0, c1) = (cell(axis, k, l), cell(axis, k + 1, l));
            if !(g.mask[c0] && g.mask[c1]) {
                continue;
            }
            let x = k as f64 + offset;
            let near = (x.round().max(0.0) as usize).min(n_along - 1);
            let Some((s, e)) = run_of[near] else {
                continue;
            };
            // At most one cell of extrapolation past the run.
            if x < s as f64 - 1.0 || x > e as f64 {
                continue;
            }
            let (dp, d2) = if e - s >= 4 {
                let j0 = ((x.floor() as i64 - 1).max(s as i64) as usize).min(e - 4);
                let y = [d_at(j0), d_at(j0 + 1), d_at(j0 + 2), d_at(j0 + 3)];
                let (v, c) = lagrange4(y, x - j0 as f64);
                (v, c / (d * d))
            } else if e - s >= 2 {
                let j0 = ((x.floor().max(s as f64)) as usize).min(e - 2);
                let t = x - j0 as f64;
                (d_at(j0) + t * (d_at(j0 + 1) - d_at(j0)), 0.0)
            } else {
                continue;
            };
            links.push(Link {
                from: c0,
                to: c1,
                target: (d / omega) * (dp + (d * d - omega * omega) / 24.0 * d2),
            });
        }
    }
    links
}

/// Breadth-first connected components of `nodes` under `links`.
pub(crate) fn components(dim: (usize, usize), links: &[Link]) -> (Array2<i64>, usize) {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); dim.0 * dim.1];
    let idx = |c: (usize, usize)| c.0 * dim.1 + c.1;
    for lk in links {
        adj[idx(lk.from)].push(idx(lk.to));
        adj[idx(lk.to)].push(idx(lk.from));
    }
    let mut comp = Array2::from_elem(dim, -1i64);
    let mut n = 0usize;
    for start in 0..dim.0 * dim.1 {
        if adj[start].is_empty() || comp[(start / dim.1, start % dim.1)] >= 0 {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        comp[(start / dim.1, start % dim.1)] = n as i64;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                let c = (v / dim.1, v % dim.1);
                if comp[c] < 0 {
                    comp[c] = n as i64;
                    queue.push_back(v);
                }
            }
        }
        n += 1;
    }
    (comp, n)
}
