use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;

use biphoton_core::grid::{Axis, SpatialGrid};
use biphoton_core::interferometer::{
    apply_detector, measure, spatial_fringe_pattern, ssi_pattern, Arm, DetectorConfig, FringeConfig, Interferogram,
    NoiseRecord, ShearConfig,
};
use biphoton_core::random::RandomStream;
use biphoton_core::spdc::{build_jsa, joint_spatial_amplitude, PostSelection};

use crate::config::{NoiseModel, RunConfig};
use crate::error::{PipelineError, Result};
use crate::manifest::{ps_dir, FileEntry, Manifest, RunDir};

const STAGE: &str = "simulate";

pub const META_VERSION: u32 = 1;

/// Sidecar for one post-selection's data files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostSelectionMeta {
    pub version: u32,
    pub index: usize,
    pub post_selection: PostSelection,
    /// Signal frequency axis (matrix rows).
    pub axis_a: Axis,
    /// Idler frequency axis (matrix columns).
    pub axis_b: Axis,
    pub shear: ShearConfig,
    pub detector: DetectorConfig,
    /// Keyed by `jsi`, `signal`, `idler`.
    pub noise: BTreeMap<String, NoiseRecord>,
}

/// Sidecar for the spatial data: conditional intensities and the fringe scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatialMeta {
    pub version: u32,
    pub signal_grid: SpatialGrid,
    pub idler_grid: SpatialGrid,
    /// Idler sample the fringe scan is conditioned on.
    pub fringe_idler: [usize; 2],
    pub fringe_axis: Axis,
    pub fringes: FringeConfig,
}

/// Builds a worker pool; `jobs == 0` uses all cores.
pub fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| PipelineError::usage("jobs", format!("cannot start {jobs} workers: {e}")))
}

fn noisy(cfg: &RunConfig, ig: Interferogram, stream: RandomStream, what: &str) -> Result<Interferogram> {
    let ig = apply_detector(&ig, &cfg.detector).map_err(|e| PipelineError::core(STAGE, what, e))?;
    let stream = (cfg.noise == NoiseModel::Poisson).then_some(stream);
    measure(&ig, &cfg.detector, stream).map_err(|e| PipelineError::core(STAGE, what, e))
}

fn simulate_point(cfg: &RunConfig, dir: &RunDir, k: usize) -> Result<Vec<FileEntry>> {
    let ctx = |what: &str| format!("post-selection {k}: {what}");
    let (sg, ig) = cfg.grid.grids().map_err(|e| PipelineError::core(STAGE, "grid", e))?;
    let post = cfg.post_selections[k];
    let psi = build_jsa(&cfg.pump, &cfg.crystal, &sg, &ig, &post).map_err(|e| PipelineError::core(STAGE, ctx("JSA"), e))?;
    let root = RandomStream::new(cfg.seed).derive(k as u64);
    let d = ps_dir(k);
    let mut files = vec![dir.write_complex(&format!("{d}/psi.bin"), "psi", Some(k), &psi.field.values)?];
    let mut noise = BTreeMap::new();

    let blocked = ShearConfig {
        blocked: true,
        ..cfg.shear.for_arm(Arm::Signal)
    };
    let jsi = ssi_pattern(&psi, &blocked).map_err(|e| PipelineError::core(STAGE, ctx("JSI"), e))?;
    let jsi = noisy(cfg, jsi, root.derive(0), &ctx("JSI"))?;
    noise.insert("jsi".to_string(), jsi.noise.clone());
    files.push(dir.write_real(&format!("{d}/jsi.bin"), "jsi", Some(k), &jsi.values)?);

    for (slot, arm) in [(1, Arm::Signal), (2, Arm::Idler)] {
        let what = ctx(&format!("{} interferogram", arm.name()));
        let pattern = ssi_pattern(&psi, &cfg.shear.for_arm(arm)).map_err(|e| PipelineError::core(STAGE, &what, e))?;
        let pattern = noisy(cfg, pattern, root.derive(slot), &what)?;
        noise.insert(arm.name().to_string(), pattern.noise.clone());
        let rel = format!("{d}/interferogram_{}.bin", arm.name());
        files.push(dir.write_real(&rel, &format!("interferogram_{}", arm.name()), Some(k), &pattern.values)?);
    }
    let meta = PostSelectionMeta {
        version: META_VERSION,
        index: k,
        post_selection: post,
        axis_a: psi.field.axis_a,
        axis_b: psi.field.axis_b,
        shear: cfg.shear,
        detector: cfg.detector,
        noise,
    };
    files.push(dir.write_json(&format!("{d}/meta.json"), "meta", Some(k), &meta)?);
    Ok(files)
}

fn simulate_spatial(cfg: &RunConfig, dir: &RunDir) -> Result<Vec<FileEntry>> {
    let g = cfg.spatial_grid;
    let amp = joint_spatial_amplitude(&cfg.spatial, &g, &g).map_err(|e| PipelineError::core(STAGE, "spatial amplitude", e))?;
    // Rows: signal samples in (x, y) order; columns: idler samples.
    let n = g.len();
    let intensity = Array2::from_shape_fn((n, n), |(s, i)| {
        amp.values[[s / g.n_y, s % g.n_y, i / g.n_y, i % g.n_y]].norm_sqr()
    });
    let idler = g.origin();
    let scan = spatial_fringe_pattern(&amp, idler, &cfg.fringes).map_err(|e| PipelineError::core(STAGE, "fringe scan", e))?;
    let spectra = scan
        .spectra
        .to_shape((n, scan.axis.len))
        .expect("contiguous fringe spectra")
        .to_owned();
    let meta = SpatialMeta {
        version: META_VERSION,
        signal_grid: g,
        idler_grid: g,
        fringe_idler: idler,
        fringe_axis: scan.axis,
        fringes: cfg.fringes,
    };
    Ok(vec![
        dir.write_real("spatial/intensity.bin", "spatial_intensity", None, &intensity)?,
        dir.write_real("spatial/fringes.bin", "fringe_spectra", None, &spectra)?,
        dir.write_json("spatial/meta.json", "spatial_meta", None, &meta)?,
    ])
}

/// Writes ground truth ψ, the JSI, both interferograms per post-selection,
/// the spatial data, the config echo and the manifest.
pub fn simulate(cfg: &RunConfig, jobs: usize) -> Result<Manifest> {
    cfg.validate()?;
    let root = cfg.run_dir();
    std::fs::create_dir_all(&root).map_err(|e| PipelineError::io(STAGE, &root, e))?;
    let dir = RunDir::new(&root, STAGE);
    let mut manifest = Manifest::new(&cfg.scenario, cfg.hash(), cfg.post_selections.len());
    let start = Instant::now();
    manifest.extend([dir.write_bytes("config.json", "config", None, cfg.portable().to_json().as_bytes())?]);
    let points: Vec<Vec<FileEntry>> = pool(jobs)?.install(|| {
        (0..cfg.post_selections.len())
            .into_par_iter()
            .map(|k| {
                log::info!("simulating post-selection {k}");
                simulate_point(cfg, &dir, k)
            })
            .collect::<Result<_>>()
    })?;
    manifest.extend(points.into_iter().flatten());
    manifest.extend(simulate_spatial(cfg, &dir)?);
    manifest.timings.insert(STAGE.into(), start.elapsed().as_secs_f64());
    manifest.write(&root)?;
    Ok(manifest)
}
