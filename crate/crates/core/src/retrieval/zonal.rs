use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Axis;
use crate::interferometer::Arm;
use crate::retrieval::gradient::{cell, components, lane_dims, link_targets, GradientField, Link};

/// Reconstructed phase on a 2D grid, zero at each pin.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSurface {
    pub values: Array2<f64>,
    pub mask: Array2<bool>,
    pub axis_a: Axis,
    pub axis_b: Axis,
    /// One pin per connected component; the first is the primary pin.
    pub pins: Vec<(usize, usize)>,
    /// RMS of `φ(to) − φ(from) − target` over all links, rad.
    pub residual_rms: f64,
    pub components: usize,
    /// Component of each cell in `pins` order, −1 off the mask.
    pub labels: Array2<i64>,
    /// Optional fit weights (e.g. sideband magnitude).
    pub weights: Option<Array2<f64>>,
    pub warnings: Vec<String>,
}

impl PhaseSurface {
    pub fn pin(&self) -> (usize, usize) {
        self.pins[0]
    }

    pub fn valid_cells(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// RMS of `self − truth` on the mask, after removing the mean difference
    /// of each component (each carries its own undetermined offset).
    pub fn rms_error(&self, truth: &Array2<f64>) -> f64 {
        let mut sum = vec![0.0; self.components];
        let mut count = vec![0usize; self.components];
        for ((c, v), t) in self.labels.iter().zip(self.values.iter()).zip(truth.iter()) {
            if *c >= 0 {
                sum[*c as usize] += v - t;
                count[*c as usize] += 1;
            }
        }
        let (mut sq, mut n) = (0.0, 0usize);
        for ((c, v), t) in self.labels.iter().zip(self.values.iter()).zip(truth.iter()) {
            if *c >= 0 {
                let c = *c as usize;
                sq += (v - t - sum[c] / count[c] as f64).powi(2);
                n += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            (sq / n as f64).sqrt()
        }
    }

    /// Mask restricted to the component of the primary pin.
    pub fn primary_mask(&self) -> Array2<bool> {
        self.labels.mapv(|c| c == 0)
    }
}

/// Single-axis cumulative integration of the link targets.
///
/// Every unbroken run of links in a lane is integrated from zero at its middle
/// cell; offsets between lanes and between fragments stay undetermined.
pub fn integrate_axis(g: &GradientField) -> PhaseSurface {
    let axis = g.axis();
    let dim = g.dim();
    let (n_along, n_lanes) = lane_dims(dim, axis);
    let mut step = vec![None; n_along * n_lanes];
    for lk in link_targets(g) {
        let (k, l) = match axis {
            crate::field::FieldAxis::A => (lk.from.0, lk.from.1),
            crate::field::FieldAxis::B => (lk.from.1, lk.from.0),
        };
        step[l * n_along + k] = Some(lk.target);
    }
    let mut values = Array2::zeros(dim);
    let mut mask = Array2::from_elem(dim, false);
    let mut labels = Array2::from_elem(dim, -1i64);
    let mut pins = Vec::new();
    let mut warnings = Vec::new();
    for l in 0..n_lanes {
        let mut fragments = Vec::new();
        let mut k = 0;
        while k + 1 < n_along {
            if step[l * n_along + k].is_none() {
                k += 1;
                continue;
            }
            let start = k;
            while k + 1 < n_along && step[l * n_along + k].is_some() {
                k += 1;
            }
            fragments.push((start, k)); // cells start..=k
        }
        if fragments.len() > 1 {
            warnings.push(format!("lane {l} splits into {} fragments; integrated separately", fragments.len()));
        }
        for (s, e) in fragments {
            let mut acc = 0.0;
            let mut run = vec![0.0; e - s + 1];
            for k in s..e {
                acc += step[l * n_along + k].unwrap();
                run[k - s + 1] = acc;
            }
            let mid = (s + e) / 2;
            let offset = run[mid - s];
            for k in s..=e {
                values[cell(axis, k, l)] = run[k - s] - offset;
                mask[cell(axis, k, l)] = true;
                labels[cell(axis, k, l)] = pins.len() as i64;
            }
            pins.push(cell(axis, mid, l));
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    let components = pins.len();
    PhaseSurface {
        values,
        mask,
        axis_a: g.axis_a,
        axis_b: g.axis_b,
        pins,
        residual_rms: 0.0,
        components,
        labels,
        weights: Some(g.weights.clone()),
        warnings,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZonalConfig {
    /// Relative residual `‖r‖/‖b‖` at which conjugate gradient stops.
    pub tolerance: f64,
    /// Iteration cap as a multiple of the number of unknowns.
    pub max_iterations_factor: usize,
}

impl Default for ZonalConfig {
    fn default() -> Self {
        ZonalConfig {
            tolerance: 1e-10,
            max_iterations_factor: 10,
        }
    }
}

impl ZonalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::config("zonal.tolerance", format!("must be in (0, 1), got {}", self.tolerance)));
        }
        if self.max_iterations_factor == 0 {
            return Err(Error::config("zonal.max_iterations_factor", "must be >= 1"));
        }
        Ok(())
    }
}

/// Least-squares surface from the links of both gradient fields.
pub fn zonal_solve(signal: &GradientField, idler: &GradientField, cfg: &ZonalConfig) -> Result<PhaseSurface> {
    if signal.arm != Arm::Signal || idler.arm != Arm::Idler {
        return Err(Error::contract("zonal_solve expects one signal-axis and one idler-axis gradient"));
    }
    if signal.axis_a != idler.axis_a || signal.axis_b != idler.axis_b {
        return Err(Error::contract("gradient fields are on different grids"));
    }
    let mut links = link_targets(signal);
    links.extend(link_targets(idler));
    let mut weights = signal.weights.clone();
    weights.zip_mut_with(&idler.weights, |a, b| *a = a.min(*b));
    let mut surface = solve_links(signal.axis_a, signal.axis_b, &links, cfg)?;
    surface.weights = Some(weights);
    surface.warnings.splice(0..0, signal.warnings.iter().chain(&idler.warnings).cloned());
    Ok(surface)
}

/// Minimises `Σ (φ(to) − φ(from) − target)²` over the linked cells.
///
/// Each connected component is pinned to zero at the cell nearest its
/// centroid, which removes the constant null space; the remaining graph
/// Laplacian system is solved with Jacobi-preconditioned conjugate gradient.
pub fn solve_links(axis_a: Axis, axis_b: Axis, links: &[Link], cfg: &ZonalConfig) -> Result<PhaseSurface> {
    cfg.validate()?;
    let dim = (axis_a.len, axis_b.len);
    if links.is_empty() {
        return Err(Error::ZeroTotal("no valid links to integrate".into()));
    }
    let (comp, n_comp) = components(dim, links);
    let mut warnings = Vec::new();
    if n_comp > 1 {
        warnings.push(format!("mask has {n_comp} disconnected components; each is pinned separately"));
    }
    // Pin per component: the member cell nearest the component centroid.
    let mut sums = vec![(0.0f64, 0.0f64, 0usize); n_comp];
    for ((i, j), &c) in comp.indexed_iter() {
        if c >= 0 {
            let s = &mut sums[c as usize];
            s.0 += i as f64;
            s.1 += j as f64;
            s.2 += 1;
        }
    }
    let mut pins = vec![(0usize, 0usize); n_comp];
    let mut best = vec![f64::INFINITY; n_comp];
    for ((i, j), &c) in comp.indexed_iter() {
        if c >= 0 {
            let c = c as usize;
            let (ci, cj) = (sums[c].0 / sums[c].2 as f64, sums[c].1 / sums[c].2 as f64);
            let d = (i as f64 - ci).powi(2) + (j as f64 - cj).powi(2);
            if d < best[c] {
                best[c] = d;
                pins[c] = (i, j);
            }
        }
    }
    // Largest component first so that `pins[0]` is the primary pin.
    let mut order: Vec<usize> = (0..n_comp).collect();
    order.sort_by_key(|&c| std::cmp::Reverse(sums[c].2));
    let pins: Vec<(usize, usize)> = order.iter().map(|&c| pins[c]).collect();
    let mut rank = vec![0i64; n_comp];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r as i64;
    }
    let labels = comp.mapv(|c| if c >= 0 { rank[c as usize] } else { -1 });

    // Unknown numbering: linked, unpinned cells.
    let mut index = Array2::from_elem(dim, usize::MAX);
    let mut n = 0;
    for ((i, j), &c) in comp.indexed_iter() {
        if c >= 0 && !pins.contains(&(i, j)) {
            index[[i, j]] = n;
            n += 1;
        }
    }
    let mut diag = vec![0.0; n];
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut b = vec![0.0; n];
    for lk in links {
        let (u, v) = (index[lk.from], index[lk.to]);
        if u != usize::MAX {
            diag[u] += 1.0;
            b[u] -= lk.target;
            if v != usize::MAX {
                nbrs[u].push(v);
            }
        }
        if v != usize::MAX {
            diag[v] += 1.0;
            b[v] += lk.target;
            if u != usize::MAX {
                nbrs[v].push(u);
            }
        }
    }
    let x = conjugate_gradient(&diag, &nbrs, &b, cfg)?;

    let mut values = Array2::zeros(dim);
    let mut mask = Array2::from_elem(dim, false);
    for ((i, j), &c) in comp.indexed_iter() {
        if c >= 0 {
            mask[[i, j]] = true;
            let k = index[[i, j]];
            if k != usize::MAX {
                values[[i, j]] = x[k];
            }
        }
    }
    let residual_rms = (links
        .iter()
        .map(|lk| (values[lk.to] - values[lk.from] - lk.target).powi(2))
        .sum::<f64>()
        / links.len() as f64)
        .sqrt();
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(PhaseSurface {
        values,
        mask,
        axis_a,
        axis_b,
        pins,
        residual_rms,
        components: n_comp,
        labels,
        weights: None,
        warnings,
    })
}

/// Solves `(D − A)x = b` for the pinned graph Laplacian given by `diag` and
/// adjacency `nbrs`.
fn conjugate_gradient(diag: &[f64], nbrs: &[Vec<usize>], b: &[f64], cfg: &ZonalConfig) -> Result<Vec<f64>> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n == 0 || b_norm == 0.0 {
        return Ok(x);
    }
    let apply = |p: &[f64], out: &mut [f64]| {
        for (k, o) in out.iter_mut().enumerate() {
            *o = diag[k] * p[k] - nbrs[k].iter().map(|&m| p[m]).sum::<f64>();
        }
    };
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = r.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
    let max_iter = cfg.max_iterations_factor * n;
    for _ in 0..max_iter {
        apply(&p, &mut ap);
        let alpha = rz / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let r_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r_norm <= cfg.tolerance * b_norm {
            return Ok(x);
        }
        for k in 0..n {
            z[k] = r[k] / diag[k];
        }
        let rz_new = r.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    let residual = r.iter().map(|v| v * v).sum::<f64>().sqrt() / b_norm;
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}
