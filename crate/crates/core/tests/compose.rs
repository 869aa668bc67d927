//! Four-leg path sums over retrieved spectral surfaces.

use biphoton_core::grid::FrequencyGrid;
use biphoton_core::interferometer::{ssi_pattern, Arm, ShearConfig};
use biphoton_core::retrieval::{
    compose_relative_phase, gradient_from_sideband, sideband_extract, zonal_solve, GradientConfig, JointCoordinate,
    LegOrder, PhaseAtlas, SidebandConfig, SpatialPhase, ZonalConfig,
};
use biphoton_core::spdc::{build_jsa, CrystalSpec, JointSpectralField, PostSelection, PumpSpec};
use ndarray::Array4;

const PITCH: f64 = 0.5;

fn mm(q: [usize; 2]) -> [f64; 2] {
    [(q[0] as f64 - 1.0) * PITCH, (q[1] as f64 - 1.0) * PITCH]
}

/// Ground truth φ(q_s, q_i; ν_s, ν_i): pump chirp, a position-dependent
/// delay on each photon and a frequency-independent wavefront.
fn truth(q_s: [usize; 2], q_i: [usize; 2], nu_s: f64, nu_i: f64) -> f64 {
    let (s, i) = (mm(q_s), mm(q_i));
    let x = s[0] + 0.5 * i[0];
    let y = s[1] - 0.3 * i[1];
    -3e4 * (nu_s + nu_i).powi(2) + 250.0 * x * nu_s - 180.0 * y * nu_i + 0.2 * (x * x + y * y)
}

fn base() -> JointSpectralField {
    let s = FrequencyGrid::around_wavelength(1548.0, 256, 3e-4).unwrap();
    let i = FrequencyGrid::around_wavelength(1544.0, 256, 3e-4).unwrap();
    build_jsa(&PumpSpec::default(), &CrystalSpec::default(), &s, &i, &PostSelection::default()).unwrap()
}

fn retrieved(psi: &JointSpectralField, q_s: [usize; 2], q_i: [usize; 2]) -> biphoton_core::retrieval::PhaseSurface {
    let field = psi.field.with_phase(|a, b| truth(q_s, q_i, a, b));
    let psi = JointSpectralField::from_field(field, psi.post);
    let shear = ShearConfig::default();
    let grad = |arm| {
        let ig = ssi_pattern(&psi, &shear.for_arm(arm)).unwrap();
        let sb = sideband_extract(&ig, &SidebandConfig::default()).unwrap();
        gradient_from_sideband(&sb, &GradientConfig::default()).unwrap()
    };
    zonal_solve(&grad(Arm::Signal), &grad(Arm::Idler), &ZonalConfig::default()).unwrap()
}

#[test]
fn orderings_agree_on_retrieved_surfaces() {
    let psi = base();
    let (a, b) = (psi.field.axis_a, psi.field.axis_b);
    let from = JointCoordinate {
        q_s: [0, 1],
        q_i: [1, 0],
        w_s: 110,
        w_i: 140,
    };
    let to = JointCoordinate {
        q_s: [2, 2],
        q_i: [2, 1],
        w_s: 145,
        w_i: 118,
    };
    let mut atlas = PhaseAtlas::default();
    for (qs, qi) in [(from.q_s, from.q_i), (to.q_s, from.q_i), (to.q_s, to.q_i)] {
        atlas.spectral.insert((qs, qi), retrieved(&psi, qs, qi));
    }
    let mut offset = 0.9;
    for ws in [from.w_s, to.w_s] {
        for wi in [from.w_i, to.w_i] {
            offset += 1.7;
            let v = Array4::from_shape_fn((3, 3, 3, 3), |(p, q, r, s)| {
                truth([p, q], [r, s], a.value(ws), b.value(wi)) + offset
            });
            atlas.spatial.insert((ws, wi), SpatialPhase::new(v));
        }
    }
    let want = truth(to.q_s, to.q_i, a.value(to.w_s), b.value(to.w_i))
        - truth(from.q_s, from.q_i, a.value(from.w_s), b.value(from.w_i));
    let spectral = compose_relative_phase(&atlas, from, to, LegOrder::SpectralFirst).unwrap();
    let spatial = compose_relative_phase(&atlas, from, to, LegOrder::SpatialFirst).unwrap();
    assert!((spectral - spatial).abs() < 1e-2, "{spectral} {spatial}");
    assert!((spectral - want).abs() < 1e-2, "{spectral} {want}");
    assert_eq!(compose_relative_phase(&atlas, to, from, LegOrder::SpectralFirst).unwrap(), -spectral);
}
