//! Fast end-to-end invariant checks on the default configuration.

use num_complex::Complex64;
use std::path::PathBuf;

use biphoton_core::fft::{fft1, Direction};
use biphoton_core::interferometer::{interferometer_arms, ssi_pattern, Arm};
use biphoton_core::random::RandomStream;
use biphoton_core::spdc::build_jsa;

use crate::config::RunConfig;
use crate::error::{PipelineError, Result};
use crate::manifest::ps_dir;
use crate::retrieve::{fit, retrieve, FitRecord, SpatialRecord};
use crate::simulate::simulate;

const STAGE: &str = "selftest";

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn fft_round_trip() -> Result<Check> {
    let stream = RandomStream::new(7);
    let (re, im) = (stream.derive(0).gaussian(256, 1.0), stream.derive(1).gaussian(256, 1.0));
    let x: Vec<Complex64> = re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect();
    let err = |e| PipelineError::core(STAGE, "fft", e);
    let y = fft1(&x, 0.3, Direction::Inverse).map_err(err)?;
    let z = fft1(&y, 2.0 * std::f64::consts::PI / (256.0 * 0.3), Direction::Forward).map_err(err)?;
    let e = x.iter().zip(&z).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    Ok(check("fft round trip", e < 1e-12, format!("max error {e:.1e}")))
}

fn three_terms(cfg: &RunConfig) -> Result<Check> {
    let err = |e| PipelineError::core(STAGE, "interferogram", e);
    let (sg, ig) = cfg.grid.grids().map_err(err)?;
    let psi = build_jsa(&cfg.pump, &cfg.crystal, &sg, &ig, &cfg.post_selections[0]).map_err(err)?;
    let mut worst = 0.0f64;
    for arm in [Arm::Signal, Arm::Idler] {
        let shear = cfg.shear.for_arm(arm);
        let s = ssi_pattern(&psi, &shear).map_err(err)?;
        let (a, b) = interferometer_arms(&psi, &shear).map_err(err)?;
        let scale = s.values.iter().cloned().fold(0.0, f64::max);
        for (v, (x, y)) in s.values.iter().zip(a.values.iter().zip(b.values.iter())) {
            worst = worst.max((v - (x + y).norm_sqr()).abs() / scale);
        }
    }
    Ok(check("three-term expansion", worst < 1e-12, format!("max relative deviation {worst:.1e}")))
}

fn scratch() -> PathBuf {
    std::env::temp_dir().join(format!("ssi-selftest-{}", std::process::id()))
}

fn end_to_end(cfg: &RunConfig, jobs: usize) -> Result<Vec<Check>> {
    let root = scratch();
    let cfg = RunConfig {
        output_dir: Some(root.clone()),
        ..cfg.clone()
    };
    let first = simulate(&cfg, jobs)?;
    let second = simulate(&cfg, jobs)?;
    retrieve(&root, jobs)?;
    let refit = fit(&root)?;
    let record: FitRecord = crate::manifest::read_json(STAGE, &root.join(ps_dir(0)).join("fit.json"))?;
    let spatial: SpatialRecord = crate::manifest::read_json(STAGE, &root.join("spatial/retrieval.json"))?;
    let _ = std::fs::remove_dir_all(&root);
    let gdd = record.truth.gdd_relative_error.unwrap_or(f64::NAN);
    Ok(vec![
        check(
            "rerun is byte-identical",
            first.content_hash() == second.content_hash(),
            format!("content hash {}", &second.content_hash()[..12]),
        ),
        check(
            "noiseless GDD within 0.5%",
            gdd.abs() < 5e-3,
            format!("GDD {:.4e} fs², relative error {gdd:+.2e}", record.fit.gdd),
        ),
        check(
            "fit stage is repeatable",
            refit.find("fit", Some(0)).is_some(),
            format!("{} files", refit.files.len()),
        ),
        check(
            "conditional centroids oppose the idler",
            spatial.centroids.all_opposite(),
            format!("{} idler positions", spatial.centroids.rows.len()),
        ),
        check(
            "fringe-tracked wavefront",
            spatial.wavefront_rms_error < 0.05,
            format!("RMS error {:.1e} rad over {} cells", spatial.wavefront_rms_error, spatial.wavefront_valid),
        ),
    ])
}

/// Runs every check; the caller decides what a failure means.
pub fn selftest(jobs: usize) -> Result<Vec<Check>> {
    let cfg = RunConfig::default();
    let mut checks = vec![fft_round_trip()?, three_terms(&cfg)?];
    checks.extend(end_to_end(&cfg, jobs)?);
    Ok(checks)
}
