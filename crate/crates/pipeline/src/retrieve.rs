use ndarray::{Array2, Array3, Array4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

use biphoton_core::grid::Axis;
use biphoton_core::interferometer::{Arm, FringeScan, Interferogram, NoiseRecord};
use biphoton_core::retrieval::{
    centroid_analysis, denoise, fit_dispersion, gradient_from_sideband, reconstruct_field, sideband_extract,
    to_temporal, track_fringes, zonal_solve, CentroidTable, DispersionFit, GradientField, JtiStatistics, PhaseSurface,
};
use biphoton_core::spdc::PumpSpec;

use crate::config::RunConfig;
use crate::error::{PipelineError, Result};
use crate::manifest::{ps_dir, FileEntry, Manifest, RunDir, MANIFEST_FILE};
use crate::simulate::{pool, PostSelectionMeta, SpatialMeta};

const STAGE: &str = "retrieve";

/// Retrieved dispersion against the configured pump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthComparison {
    /// `2·c2`, fs².
    pub gdd: f64,
    /// `6·c3`, fs³.
    pub tod: f64,
    pub gdd_relative_error: Option<f64>,
    pub tod_relative_error: Option<f64>,
    /// RMS of retrieved minus injected pump phase on the surface, per-component
    /// offsets removed, rad.
    pub surface_rms_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub post_selection: usize,
    pub fit: DispersionFit,
    pub truth: TruthComparison,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetrievalRecord {
    pub post_selection: usize,
    pub denoised: bool,
    pub residual_rms: f64,
    pub components: usize,
    pub valid_cells: usize,
    pub warnings: Vec<String>,
    pub jti_axis_a: Axis,
    pub jti_axis_b: Axis,
    pub jti: JtiStatistics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialRecord {
    pub wavefront_valid: usize,
    pub wavefront_rms_error: f64,
    pub warnings: Vec<String>,
    pub centroids: CentroidTable,
}

fn masked(values: &Array2<f64>, mask: &Array2<bool>) -> Array2<f64> {
    Array2::from_shape_fn(values.dim(), |c| if mask[c] { values[c] } else { f64::NAN })
}

fn load_interferogram(dir: &RunDir, manifest: &Manifest, meta: &PostSelectionMeta, arm: Arm) -> Result<Interferogram> {
    let k = meta.index;
    let kind = format!("interferogram_{}", arm.name());
    let rel = format!("{}/{kind}.bin", ps_dir(k));
    let path = dir.path(&rel);
    if manifest.find(&kind, Some(k)).is_none() || !path.exists() {
        return Err(PipelineError::io(
            STAGE,
            &path,
            format!("missing {}-axis gradient: {}-arm interferogram not found", arm.name(), arm.name()),
        ));
    }
    let values = dir.read_real(&rel)?;
    if values.dim() != (meta.axis_a.len, meta.axis_b.len) {
        return Err(PipelineError::io(STAGE, &path, "matrix shape differs from meta.json axes"));
    }
    Ok(Interferogram {
        values,
        axis_a: meta.axis_a,
        axis_b: meta.axis_b,
        shear: meta.shear.for_arm(arm),
        detector: Some(meta.detector),
        noise: meta.noise.get(arm.name()).cloned().unwrap_or(NoiseRecord::Noiseless),
        post: meta.post_selection,
    })
}

fn gradient(cfg: &RunConfig, ig: &Interferogram, k: usize) -> Result<(GradientField, bool)> {
    let ctx = |what: &str| format!("post-selection {k}, {} arm: {what}", ig.shear.arm.name());
    let noisy = matches!(ig.noise, NoiseRecord::Poisson { .. });
    let ig = if noisy {
        denoise(ig, &cfg.retrieval.denoise).map_err(|e| PipelineError::core(STAGE, ctx("denoise"), e))?
    } else {
        ig.clone()
    };
    let sb = sideband_extract(&ig, &cfg.retrieval.sideband).map_err(|e| PipelineError::core(STAGE, ctx("sideband"), e))?;
    let g = gradient_from_sideband(&sb, &cfg.retrieval.gradient).map_err(|e| PipelineError::core(STAGE, ctx("gradient"), e))?;
    Ok((g, noisy))
}

fn pump_phase(pump: &PumpSpec, a: &Axis, b: &Axis) -> Array2<f64> {
    Array2::from_shape_fn((a.len, b.len), |(i, j)| pump.phase(a.value(i) + b.value(j)))
}

fn relative(x: f64, truth: f64) -> Option<f64> {
    (truth != 0.0).then(|| (x - truth) / truth)
}

/// Fits the surface and compares with the configured pump.
pub fn fit_surface(cfg: &RunConfig, surface: &PhaseSurface, k: usize, stage: &str) -> Result<FitRecord> {
    let fit = fit_dispersion(surface).map_err(|e| PipelineError::core(stage, format!("post-selection {k}: fit"), e))?;
    let (gdd, tod) = (cfg.pump.gdd(), cfg.pump.tod());
    let truth = TruthComparison {
        gdd,
        tod,
        gdd_relative_error: relative(fit.gdd, gdd),
        tod_relative_error: relative(fit.tod, tod),
        surface_rms_error: surface.rms_error(&pump_phase(&cfg.pump, &surface.axis_a, &surface.axis_b)),
    };
    Ok(FitRecord {
        post_selection: k,
        fit,
        truth,
    })
}

fn retrieve_point(cfg: &RunConfig, dir: &RunDir, manifest: &Manifest, k: usize) -> Result<Vec<FileEntry>> {
    let d = ps_dir(k);
    let meta: PostSelectionMeta = dir.read_json(&format!("{d}/meta.json"))?;
    let signal = load_interferogram(dir, manifest, &meta, Arm::Signal)?;
    let idler = load_interferogram(dir, manifest, &meta, Arm::Idler)?;
    let (gs, noisy) = gradient(cfg, &signal, k)?;
    let (gi, _) = gradient(cfg, &idler, k)?;
    let surface = zonal_solve(&gs, &gi, &cfg.retrieval.zonal)
        .map_err(|e| PipelineError::core(STAGE, format!("post-selection {k}: zonal solve"), e))?;
    let fit = fit_surface(cfg, &surface, k, STAGE)?;

    let jsi = dir.read_real(&format!("{d}/jsi.bin"))?;
    let psi = reconstruct_field(&jsi, &surface, Some(&fit.fit))
        .map_err(|e| PipelineError::core(STAGE, format!("post-selection {k}: reconstruction"), e))?;
    let jti = to_temporal(&psi).map_err(|e| PipelineError::core(STAGE, format!("post-selection {k}: JTI"), e))?;

    let mut warnings = gs.warnings.clone();
    warnings.extend(gi.warnings.iter().cloned());
    warnings.extend(surface.warnings.iter().cloned());
    let record = RetrievalRecord {
        post_selection: k,
        denoised: noisy,
        residual_rms: surface.residual_rms,
        components: surface.components,
        valid_cells: surface.valid_cells(),
        warnings,
        jti_axis_a: jti.axis_a,
        jti_axis_b: jti.axis_b,
        jti: jti.stats,
    };
    let weights = surface.weights.clone().unwrap_or_else(|| surface.mask.mapv(|m| m as u8 as f64));
    Ok(vec![
        dir.write_real(&format!("{d}/gradient_signal.bin"), "gradient_signal", Some(k), &masked(&gs.values, &gs.mask))?,
        dir.write_real(&format!("{d}/gradient_idler.bin"), "gradient_idler", Some(k), &masked(&gi.values, &gi.mask))?,
        dir.write_real(&format!("{d}/phase.bin"), "phase", Some(k), &masked(&surface.values, &surface.mask))?,
        dir.write_real(&format!("{d}/phase_labels.bin"), "phase_labels", Some(k), &surface.labels.mapv(|l| l as f64))?,
        dir.write_real(&format!("{d}/phase_weights.bin"), "phase_weights", Some(k), &weights)?,
        dir.write_real(&format!("{d}/jti.bin"), "jti", Some(k), &jti.values)?,
        dir.write_json(&format!("{d}/fit.json"), "fit", Some(k), &fit)?,
        dir.write_json(&format!("{d}/retrieval.json"), "retrieval", Some(k), &record)?,
    ])
}

fn retrieve_spatial(cfg: &RunConfig, dir: &RunDir) -> Result<Vec<FileEntry>> {
    let meta: SpatialMeta = dir.read_json("spatial/meta.json")?;
    let g = meta.signal_grid;
    let spectra = dir.read_real("spatial/fringes.bin")?;
    let spectra = Array3::from_shape_vec((g.n_x, g.n_y, meta.fringe_axis.len), spectra.iter().cloned().collect())
        .map_err(|e| PipelineError::io(STAGE, &dir.path("spatial/fringes.bin"), e))?;
    let scan = FringeScan {
        grid: g,
        axis: meta.fringe_axis,
        config: meta.fringes,
        spectra,
    };
    let wavefront = track_fringes(&scan, None).map_err(|e| PipelineError::core(STAGE, "fringe tracking", e))?;
    let ig = meta.idler_grid;
    let idler_mm = [ig.x(meta.fringe_idler[0]), ig.y(meta.fringe_idler[1])];
    let origin = cfg.spatial.wavefront_phase([0.0, 0.0], idler_mm);
    let mut sq = 0.0;
    for p in g.points().filter(|p| wavefront.mask[*p]) {
        let truth = cfg.spatial.wavefront_phase([g.x(p[0]), g.y(p[1])], idler_mm) - origin;
        sq += (wavefront.values[p] - truth).powi(2);
    }
    let valid = wavefront.valid_cells();

    let flat = dir.read_real("spatial/intensity.bin")?;
    let intensity = Array4::from_shape_fn((g.n_x, g.n_y, ig.n_x, ig.n_y), |(a, b, c, e)| flat[[a * g.n_y + b, c * ig.n_y + e]]);
    let centroids = centroid_analysis(&intensity, &g, &ig).map_err(|e| PipelineError::core(STAGE, "centroids", e))?;
    let record = SpatialRecord {
        wavefront_valid: valid,
        wavefront_rms_error: if valid > 0 { (sq / valid as f64).sqrt() } else { f64::NAN },
        warnings: wavefront.warnings.clone(),
        centroids: centroids.clone(),
    };
    Ok(vec![
        dir.write_real("spatial/wavefront.bin", "wavefront", None, &masked(&wavefront.values, &wavefront.mask))?,
        dir.write_bytes("spatial/centroids.csv", "centroids_csv", None, centroids.to_csv().as_bytes())?,
        dir.write_json("spatial/retrieval.json", "spatial_retrieval", None, &record)?,
    ])
}

pub fn load_run(root: &Path, stage: &'static str) -> Result<(RunConfig, Manifest, RunDir)> {
    if !root.join(MANIFEST_FILE).is_file() {
        return Err(PipelineError::usage(
            stage,
            format!("{}: no {MANIFEST_FILE}; run `simulate` first", root.display()),
        ));
    }
    let manifest = Manifest::read(root)?;
    let cfg = RunConfig::load(&root.join("config.json"))?;
    cfg.validate()?;
    Ok((cfg, manifest, RunDir::new(root, stage)))
}

/// Gradients, zonal surface, fit, JTI per post-selection, plus the spatial
/// wavefront and centroid table; updates the manifest.
pub fn retrieve(root: &Path, jobs: usize) -> Result<Manifest> {
    let (cfg, mut manifest, dir) = load_run(root, STAGE)?;
    let start = Instant::now();
    let points: Vec<Vec<FileEntry>> = pool(jobs)?.install(|| {
        (0..manifest.post_selections)
            .into_par_iter()
            .map(|k| {
                log::info!("retrieving post-selection {k}");
                retrieve_point(&cfg, &dir, &manifest, k)
            })
            .collect::<Result<_>>()
    })?;
    manifest.extend(points.into_iter().flatten());
    manifest.extend(retrieve_spatial(&cfg, &dir)?);
    manifest.timings.insert(STAGE.into(), start.elapsed().as_secs_f64());
    manifest.write(root)?;
    Ok(manifest)
}

/// Rebuilds a saved surface from its phase, label and weight files.
pub fn load_surface(dir: &RunDir, k: usize) -> Result<PhaseSurface> {
    let d = ps_dir(k);
    let meta: PostSelectionMeta = dir.read_json(&format!("{d}/meta.json"))?;
    let phase = dir.read_real(&format!("{d}/phase.bin"))?;
    let labels = dir.read_real(&format!("{d}/phase_labels.bin"))?.mapv(|l| l as i64);
    let weights = dir.read_real(&format!("{d}/phase_weights.bin"))?;
    let mask = phase.mapv(|v| v.is_finite());
    let components = labels.iter().cloned().max().map_or(0, |m| (m + 1).max(0) as usize);
    Ok(PhaseSurface {
        values: phase.mapv(|v| if v.is_finite() { v } else { 0.0 }),
        mask,
        axis_a: meta.axis_a,
        axis_b: meta.axis_b,
        pins: Vec::new(),
        residual_rms: 0.0,
        components,
        labels,
        weights: Some(weights),
        warnings: Vec::new(),
    })
}

/// Refits saved phase surfaces and rewrites `fit.json`.
pub fn fit(root: &Path) -> Result<Manifest> {
    const FIT: &str = "fit";
    let (cfg, mut manifest, dir) = load_run(root, FIT)?;
    let start = Instant::now();
    let mut files = Vec::new();
    for k in 0..manifest.post_selections {
        if manifest.find("phase", Some(k)).is_none() {
            return Err(PipelineError::usage(FIT, format!("post-selection {k} has no phase surface; run `retrieve` first")));
        }
        let surface = load_surface(&dir, k)?;
        let record = fit_surface(&cfg, &surface, k, FIT)?;
        files.push(dir.write_json(&format!("{}/fit.json", ps_dir(k)), "fit", Some(k), &record)?);
    }
    manifest.extend(files);
    manifest.timings.insert(FIT.into(), start.elapsed().as_secs_f64());
    manifest.write(root)?;
    Ok(manifest)
}
