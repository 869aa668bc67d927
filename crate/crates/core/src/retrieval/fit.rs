use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::retrieval::zonal::PhaseSurface;

/// Smallest fit domain accepted by [`fit_dispersion`].
pub const MIN_FIT_CELLS: usize = 100;

/// Polynomial model `c0 + c1·u + c2·u² + c3·u³ + a_s·ν_s² + a_i·ν_i²` with
/// `u = ν_s + ν_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionFit {
    /// `2·c2`, fs².
    pub gdd: f64,
    /// `6·c3`, fs³.
    pub tod: f64,
    /// rad
    pub c0: f64,
    /// fs
    pub c1: f64,
    /// Coefficient of `ν_s²`, fs².
    pub signal_quadratic: f64,
    /// Coefficient of `ν_i²`, fs².
    pub idler_quadratic: f64,
    /// Unweighted RMS of the fit residual over the domain, rad.
    pub residual_rms: f64,
    pub n_cells: usize,
    /// `[c0, c1, c2, c3, a_s, a_i]` in physical units.
    pub coefficients: [f64; 6],
    #[serde(skip)]
    pub mask: Array2<bool>,
}

impl DispersionFit {
    pub fn evaluate(&self, nu_s: f64, nu_i: f64) -> f64 {
        let u = nu_s + nu_i;
        let c = &self.coefficients;
        c[0] + c[1] * u + c[2] * u * u + c[3] * u * u * u + c[4] * nu_s * nu_s + c[5] * nu_i * nu_i
    }
}

/// Weighted least-squares fit over the primary component of `surface`.
///
/// The other components carry unrelated offsets and are left out. Weights are
/// the surface weights when present. The design is built in coordinates
/// scaled to unit extent and solved by SVD.
pub fn fit_dispersion(surface: &PhaseSurface) -> Result<DispersionFit> {
    let mask = surface.primary_mask();
    let cells: Vec<(usize, usize)> = mask.indexed_iter().filter(|(_, m)| **m).map(|(c, _)| c).collect();
    if cells.len() < MIN_FIT_CELLS {
        return Err(Error::RankDeficient(format!(
            "fit domain has {} cells, needs at least {MIN_FIT_CELLS}",
            cells.len()
        )));
    }
    let (a, b) = (surface.axis_a, surface.axis_b);
    let scale = cells
        .iter()
        .map(|&(i, j)| a.value(i).abs().max(b.value(j).abs()))
        .fold(0.0f64, f64::max);
    if scale == 0.0 {
        return Err(Error::RankDeficient("fit domain is a single frequency".into()));
    }
    let weight = |c: (usize, usize)| surface.weights.as_ref().map_or(1.0, |w| w[c]).max(0.0).sqrt();
    let basis = |x: f64, y: f64| {
        let u = x + y;
        [1.0, u, u * u, u * u * u, x * x, y * y]
    };
    let mut design = DMatrix::zeros(cells.len(), 6);
    let mut rhs = DVector::zeros(cells.len());
    for (r, &c) in cells.iter().enumerate() {
        let w = weight(c);
        let row = basis(a.value(c.0) / scale, b.value(c.1) / scale);
        for (k, v) in row.iter().enumerate() {
            design[(r, k)] = w * v;
        }
        rhs[r] = w * surface.values[c];
    }
    let svd = design.svd(true, true);
    let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
    if !(smin > 1e-10 * smax) {
        return Err(Error::RankDeficient(format!(
            "singular values span {smax:.3e} to {smin:.3e}; the mask does not constrain every basis term"
        )));
    }
    let x = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::RankDeficient(e.to_string()))?;
    let powers = [0, 1, 2, 3, 2, 2];
    let mut coefficients = [0.0; 6];
    for k in 0..6 {
        coefficients[k] = x[k] / scale.powi(powers[k]);
    }
    let mut fit = DispersionFit {
        gdd: 2.0 * coefficients[2],
        tod: 6.0 * coefficients[3],
        c0: coefficients[0],
        c1: coefficients[1],
        signal_quadratic: coefficients[4],
        idler_quadratic: coefficients[5],
        residual_rms: 0.0,
        n_cells: cells.len(),
        coefficients,
        mask,
    };
    let sq: f64 = cells
        .iter()
        .map(|&c| (surface.values[c] - fit.evaluate(a.value(c.0), b.value(c.1))).powi(2))
        .sum();
    fit.residual_rms = (sq / cells.len() as f64).sqrt();
    Ok(fit)
}
