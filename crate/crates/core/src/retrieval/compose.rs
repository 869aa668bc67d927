use ndarray::{Array2, Array4};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::retrieval::zonal::PhaseSurface;

/// Grid indices of a joint spatial–spectral point: signal and idler
/// positions, signal and idler frequencies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JointCoordinate {
    pub q_s: [usize; 2],
    pub q_i: [usize; 2],
    pub w_s: usize,
    pub w_i: usize,
}

/// Joint spatial phase at one frequency pair, indexed `[x_s, y_s, x_i, y_i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialPhase {
    pub values: Array4<f64>,
    pub mask: Array4<bool>,
}

impl SpatialPhase {
    pub fn new(values: Array4<f64>) -> Self {
        let mask = Array4::from_elem(values.dim(), true);
        SpatialPhase { values, mask }
    }

    fn get(&self, q_s: [usize; 2], q_i: [usize; 2]) -> Option<f64> {
        let k = [q_s[0], q_s[1], q_i[0], q_i[1]];
        (*self.mask.get(k)?).then(|| self.values[k])
    }
}

/// Spectral surfaces keyed by `(q_s, q_i)` and spatial phases keyed by
/// `(ω_s, ω_i)` indices.
#[derive(Clone, Debug, Default)]
pub struct PhaseAtlas {
    pub spectral: BTreeMap<([usize; 2], [usize; 2]), PhaseSurface>,
    pub spatial: BTreeMap<(usize, usize), SpatialPhase>,
}

/// Which kind of step the path takes first.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LegOrder {
    /// Signal frequency, signal position, idler frequency, idler position.
    SpectralFirst,
    /// Signal position, idler position, signal frequency, idler frequency.
    SpatialFirst,
}

fn spectral_leg(atlas: &PhaseAtlas, leg: usize, q_s: [usize; 2], q_i: [usize; 2], a: (usize, usize), b: (usize, usize)) -> Result<f64> {
    let missing = || Error::Missing(format!("leg {leg}: spectral surface at q_s={q_s:?}, q_i={q_i:?}"));
    let s = atlas.spectral.get(&(q_s, q_i)).ok_or_else(missing)?;
    let at = |p: (usize, usize)| -> Result<f64> {
        let valid = s.mask.get(p).copied().unwrap_or(false);
        if !valid {
            return Err(Error::Missing(format!(
                "leg {leg}: spectral surface at q_s={q_s:?}, q_i={q_i:?} has no phase at ω index {p:?}"
            )));
        }
        Ok(s.values[p])
    };
    let (pa, pb) = (at(a)?, at(b)?);
    if s.labels[a] != s.labels[b] {
        return Err(Error::Missing(format!(
            "leg {leg}: ω indices {a:?} and {b:?} lie in disconnected regions of the spectral surface"
        )));
    }
    Ok(pb - pa)
}

fn spatial_leg(atlas: &PhaseAtlas, leg: usize, w: (usize, usize), a: ([usize; 2], [usize; 2]), b: ([usize; 2], [usize; 2])) -> Result<f64> {
    let s = atlas
        .spatial
        .get(&w)
        .ok_or_else(|| Error::Missing(format!("leg {leg}: spatial phase at ω indices {w:?}")))?;
    let at = |p: ([usize; 2], [usize; 2])| {
        s.get(p.0, p.1).ok_or_else(|| {
            Error::Missing(format!("leg {leg}: spatial phase at ω indices {w:?} has no value at q_s={:?}, q_i={:?}", p.0, p.1))
        })
    };
    Ok(at(b)? - at(a)?)
}

/// `φ(to) − φ(from)` as a sum of four one-coordinate legs.
///
/// The spectral-first order steps ω_s at (q_s, q_i), then q_s at (ω_s', ω_i),
/// then ω_i at (q_s', q_i), then q_i at (ω_s', ω_i'). Each leg takes a
/// difference within one surface, so the arbitrary offset of each surface
/// cancels. The path is always walked from the smaller coordinate to the
/// larger one and negated if needed, which makes the result exactly
/// antisymmetric.
pub fn compose_relative_phase(atlas: &PhaseAtlas, from: JointCoordinate, to: JointCoordinate, order: LegOrder) -> Result<f64> {
    if from == to {
        return Ok(0.0);
    }
    if from > to {
        return compose_relative_phase(atlas, to, from, order).map(|v| -v);
    }
    let (f, t) = (from, to);
    let legs = match order {
        LegOrder::SpectralFirst => [
            spectral_leg(atlas, 1, f.q_s, f.q_i, (f.w_s, f.w_i), (t.w_s, f.w_i))?,
            spatial_leg(atlas, 2, (t.w_s, f.w_i), (f.q_s, f.q_i), (t.q_s, f.q_i))?,
            spectral_leg(atlas, 3, t.q_s, f.q_i, (t.w_s, f.w_i), (t.w_s, t.w_i))?,
            spatial_leg(atlas, 4, (t.w_s, t.w_i), (t.q_s, f.q_i), (t.q_s, t.q_i))?,
        ],
        LegOrder::SpatialFirst => [
            spatial_leg(atlas, 1, (f.w_s, f.w_i), (f.q_s, f.q_i), (t.q_s, f.q_i))?,
            spatial_leg(atlas, 2, (f.w_s, f.w_i), (t.q_s, f.q_i), (t.q_s, t.q_i))?,
            spectral_leg(atlas, 3, t.q_s, t.q_i, (f.w_s, f.w_i), (t.w_s, f.w_i))?,
            spectral_leg(atlas, 4, t.q_s, t.q_i, (t.w_s, f.w_i), (t.w_s, t.w_i))?,
        ],
    };
    Ok(legs.iter().sum())
}

/// A spectral surface holding `values` everywhere, for assembling atlases
/// from sampled phases.
pub fn dense_surface(axis_a: crate::grid::Axis, axis_b: crate::grid::Axis, values: Array2<f64>) -> PhaseSurface {
    let dim = values.dim();
    PhaseSurface {
        values,
        mask: Array2::from_elem(dim, true),
        axis_a,
        axis_b,
        pins: vec![(axis_a.origin_index(), axis_b.origin_index())],
        residual_rms: 0.0,
        components: 1,
        labels: Array2::zeros(dim),
        weights: None,
        warnings: Vec::new(),
    }
}
