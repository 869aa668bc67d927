use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{fft1_along_axis, Direction};
use crate::field::{ComplexField2D, FieldAxis};
use crate::grid::{Axis, FrequencyGrid, SpatialGrid};
use crate::spdc::crystal::CrystalSpec;
use crate::shift::resample_shift;
use crate::spdc::pump::{pump_envelope, PumpSpec};

/// Relative magnitude at the grid edge above which a JSA counts as truncated.
pub const TRUNCATION_LIMIT: f64 = 1e-6;

/// How post-selection points are interpreted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Coordinates {
    /// Far-field positions in mm behind a lens of focal length f: `q = k·x/f`.
    Position { focal_length_mm: f64 },
    /// Transverse momenta in rad/mm, used as given.
    Momentum,
}

/// Gaussian amplitude window `exp(−(x − center)²/(2·width²))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub center: f64,
    pub width: f64,
}

impl Window {
    pub fn validate(&self, name: &str) -> Result<()> {
        if !(self.width > 0.0 && self.width.is_finite()) || !self.center.is_finite() {
            return Err(Error::config(name, "window needs finite center and width > 0"));
        }
        Ok(())
    }

    pub fn amplitude(&self, x: f64) -> f64 {
        let d = (x - self.center) / self.width;
        (-0.5 * d * d).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PostSelection {
    pub coordinates: Coordinates,
    pub signal: [f64; 2],
    pub idler: [f64; 2],
    /// Idler temporal filter, fs.
    pub idler_time_window: Option<Window>,
    /// Idler spectral filter on the relative frequency, rad/fs.
    pub idler_spectral_window: Option<Window>,
}

impl Default for PostSelection {
    fn default() -> Self {
        PostSelection {
            coordinates: Coordinates::Position {
                focal_length_mm: 200.0,
            },
            signal: [0.0, 0.0],
            idler: [0.0, 0.0],
            idler_time_window: None,
            idler_spectral_window: None,
        }
    }
}

impl PostSelection {
    pub fn at(signal: [f64; 2], idler: [f64; 2]) -> Self {
        PostSelection {
            signal,
            idler,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Coordinates::Position { focal_length_mm } = self.coordinates {
            if !(focal_length_mm > 0.0 && focal_length_mm.is_finite()) {
                return Err(Error::config("post_selection.focal_length_mm", "must be > 0"));
            }
        }
        if self.signal.iter().chain(self.idler.iter()).any(|v| !v.is_finite()) {
            return Err(Error::config("post_selection", "points must be finite"));
        }
        if let Some(w) = &self.idler_time_window {
            w.validate("post_selection.idler_time_window")?;
        }
        if let Some(w) = &self.idler_spectral_window {
            w.validate("post_selection.idler_spectral_window")?;
        }
        Ok(())
    }

    /// Checks that both points are samples of `grid` (position coordinates only).
    pub fn validate_on(&self, grid: &SpatialGrid) -> Result<()> {
        self.validate()?;
        if matches!(self.coordinates, Coordinates::Position { .. }) {
            for (name, p) in [("signal", self.signal), ("idler", self.idler)] {
                if grid.index_of(p).is_none() {
                    return Err(Error::config(
                        format!("post_selection.{name}"),
                        format!("point {p:?} is not on the spatial grid"),
                    ));
                }
            }
        }
        Ok(())
    }

    fn to_momentum(&self, p: [f64; 2], k: f64) -> [f64; 2] {
        match self.coordinates {
            Coordinates::Position { focal_length_mm } => [k * p[0] / focal_length_mm, k * p[1] / focal_length_mm],
            Coordinates::Momentum => p,
        }
    }

    /// Signal transverse momentum for carrier wavenumber `k` (rad/mm).
    pub fn signal_momentum(&self, k: f64) -> [f64; 2] {
        self.to_momentum(self.signal, k)
    }

    pub fn idler_momentum(&self, k: f64) -> [f64; 2] {
        self.to_momentum(self.idler, k)
    }
}

/// Everything needed to evaluate ψ off the sample grid.
#[derive(Clone, Debug, PartialEq)]
pub struct JsaModel {
    pub pump: PumpSpec,
    pub crystal: CrystalSpec,
    pub signal: FrequencyGrid,
    pub idler: FrequencyGrid,
    /// Normalisation factor applied after evaluation.
    pub scale: f64,
    /// Separable local dispersion `(c2_signal, c2_idler)`, fs².
    pub local_dispersion: (f64, f64),
    /// Field axes swapped relative to (signal, idler).
    pub transposed: bool,
}

/// Joint spectral amplitude on (ν_s along axis A, ν_i along axis B).
#[derive(Clone, Debug, PartialEq)]
pub struct JointSpectralField {
    pub field: ComplexField2D,
    pub post: PostSelection,
    /// `|Φ_q(Δq)·Ẽ_q(q_s + q_i)|²` for the post-selected pair: the relative
    /// coincidence weight removed by normalisation.
    pub spatial_weight: f64,
    /// Analytic source of `field`, if known. Cleared by edits that the model
    /// cannot represent.
    pub model: Option<JsaModel>,
}

impl JointSpectralField {
    /// Wraps a sampled field with no analytic model.
    pub fn from_field(field: ComplexField2D, post: PostSelection) -> Self {
        JointSpectralField {
            field,
            post,
            spatial_weight: 1.0,
            model: None,
        }
    }

    pub fn signal_axis(&self) -> &Axis {
        &self.field.axis_a
    }

    pub fn idler_axis(&self) -> &Axis {
        &self.field.axis_b
    }

    /// Swaps the roles of axes A and B.
    pub fn transposed(&self) -> Self {
        let mut out = self.clone();
        out.field = self.field.transposed();
        if let Some(m) = &mut out.model {
            m.transposed = !m.transposed;
        }
        out
    }

    /// `ψ` evaluated at `ν + shift` along `axis`. Uses the analytic model when
    /// present, which avoids the time-domain aliasing a Fourier shift suffers
    /// for strongly chirped fields; otherwise falls back to [`resample_shift`].
    pub fn shifted(&self, axis: FieldAxis, shift: f64) -> Result<ComplexField2D> {
        let Some(m) = &self.model else {
            return resample_shift(&self.field, axis, shift);
        };
        let ax = self.field.axis(axis);
        if !shift.is_finite() || shift.abs() >= 0.25 * ax.span() {
            return Err(Error::contract(format!(
                "shift {shift:e} must be finite and below a quarter of the axis span {:e}",
                ax.span()
            )));
        }
        let physical = if m.transposed { axis.other() } else { axis };
        let (ds, di) = match physical {
            FieldAxis::A => (shift, 0.0),
            FieldAxis::B => (0.0, shift),
        };
        let mut f = evaluate(&m.pump, &m.crystal, &m.signal, &m.idler, &self.post, [ds, di])?;
        let (cs, ci) = m.local_dispersion;
        let (a, b) = (f.axis_a, f.axis_b);
        for ((i, j), v) in f.values.indexed_iter_mut() {
            let (ns, ni) = (a.value(i) + ds, b.value(j) + di);
            *v *= Complex64::from_polar(m.scale, cs * ns * ns + ci * ni * ni);
        }
        Ok(if m.transposed { f.transposed() } else { f })
    }
}

/// Unnormalised ψ sampled at the grid points offset by `offset` = (δν_s, δν_i).
fn evaluate(
    pump: &PumpSpec,
    crystal: &CrystalSpec,
    signal: &FrequencyGrid,
    idler: &FrequencyGrid,
    post: &PostSelection,
    offset: [f64; 2],
) -> Result<ComplexField2D> {
    let qs = post.signal_momentum(signal.carrier_wavenumber());
    let qi = post.idler_momentum(idler.carrier_wavenumber());
    let dq = [qs[0] - qi[0], qs[1] - qi[1]];
    let sum_q = [qs[0] + qi[0], qs[1] + qi[1]];
    let spatial = crystal.spatial_factor(dq) * pump.spatial_amplitude(sum_q);
    let kappa = crystal.spatiotemporal_coupling;
    let (ts, ti) = (qs[0] + qs[1], qi[0] + qi[1]);
    let spectral_window = post.idler_spectral_window;
    // A negative sinc lobe is a global sign; keep it.
    let sign = spatial.signum();
    let mut field = ComplexField2D::from_fn(signal.axis(), idler.axis(), |ns, ni| {
        let (ns, ni) = (ns + offset[0], ni + offset[1]);
        let phi = crystal.spectral_factor(ns - ni);
        let mut v = pump.amplitude(ns + ni) * phi * sign;
        if kappa != 0.0 {
            v *= Complex64::from_polar(1.0, kappa * (ns * ts + ni * ti));
        }
        if let Some(w) = &spectral_window {
            v *= w.amplitude(ni);
        }
        v
    });
    if let Some(w) = &post.idler_time_window {
        let mut t = fft1_along_axis(&field, FieldAxis::B, Direction::Inverse)?;
        let t_axis = t.axis_b;
        for ((_, j), v) in t.values.indexed_iter_mut() {
            *v *= w.amplitude(t_axis.value(j));
        }
        field = fft1_along_axis(&t, FieldAxis::B, Direction::Forward)?;
    }
    Ok(field)
}

/// Builds the normalised JSA `ψ(ν_s, ν_i) ∝ Φ(Δq, ν_s − ν_i)·Ẽ(ν_s + ν_i)` for one
/// post-selected spatial pair.
pub fn build_jsa(
    pump: &PumpSpec,
    crystal: &CrystalSpec,
    signal: &FrequencyGrid,
    idler: &FrequencyGrid,
    post: &PostSelection,
) -> Result<JointSpectralField> {
    pump.validate()?;
    crystal.validate()?;
    signal.validate()?;
    idler.validate()?;
    post.validate()?;
    // Ẽ is only used for the truncation precondition; ψ is evaluated analytically.
    let pump_grid = FrequencyGrid {
        center_angular_frequency: signal.center_angular_frequency + idler.center_angular_frequency,
        n_points: signal.n_points.max(idler.n_points),
        spacing: signal.spacing.max(idler.spacing),
    };
    pump_envelope(pump, &pump_grid)?;

    let qs = post.signal_momentum(signal.carrier_wavenumber());
    let qi = post.idler_momentum(idler.carrier_wavenumber());
    let spatial = crystal.spatial_factor([qs[0] - qi[0], qs[1] - qi[1]])
        * pump.spatial_amplitude([qs[0] + qi[0], qs[1] + qi[1]]);
    let field = evaluate(pump, crystal, signal, idler, post, [0.0, 0.0])?;
    let norm = field.norm();
    if norm == 0.0 {
        return Err(Error::ZeroTotal("joint spectral amplitude vanishes on the grid".into()));
    }
    for axis in [FieldAxis::A, FieldAxis::B] {
        let ratio = field.edge_ratio(axis);
        if ratio > TRUNCATION_LIMIT {
            return Err(Error::Truncation {
                what: "joint spectral amplitude".into(),
                detail: format!(
                    "edge magnitude {ratio:.3e} of peak along axis {} exceeds {TRUNCATION_LIMIT:e}",
                    axis.index()
                ),
            });
        }
    }
    Ok(JointSpectralField {
        field: field.normalized()?,
        post: *post,
        spatial_weight: spatial * spatial,
        model: Some(JsaModel {
            pump: *pump,
            crystal: *crystal,
            signal: *signal,
            idler: *idler,
            scale: 1.0 / norm,
            local_dispersion: (0.0, 0.0),
            transposed: false,
        }),
    })
}

/// Multiplies by `exp(i·c2_signal·ν_s²)·exp(i·c2_idler·ν_i²)`.
pub fn apply_local_dispersion(psi: &JointSpectralField, c2_signal: f64, c2_idler: f64) -> JointSpectralField {
    let mut out = psi.clone();
    if c2_signal == 0.0 && c2_idler == 0.0 {
        return out;
    }
    let (a, b) = (psi.field.axis_a, psi.field.axis_b);
    if let Some(m) = &mut out.model {
        if m.transposed {
            out.model = None;
        } else {
            m.local_dispersion.0 += c2_signal;
            m.local_dispersion.1 += c2_idler;
        }
    }
    for ((i, j), v) in out.field.values.indexed_iter_mut() {
        let (ns, ni) = (a.value(i), b.value(j));
        *v *= Complex64::from_polar(1.0, c2_signal * ns * ns + c2_idler * ni * ni);
    }
    out
}
