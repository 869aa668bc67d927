use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use biphoton_core::grid::Axis;

use crate::config::RunConfig;
use crate::error::{PipelineError, Result};
use crate::manifest::{ps_dir, FileEntry, Manifest, RunDir, MANIFEST_FILE};
use crate::retrieve::{load_run, FitRecord, RetrievalRecord, SpatialRecord};
use crate::simulate::{PostSelectionMeta, SpatialMeta};
use crate::svg::{arrow_plot, heatmap, point_plot, AxisRange, Heatmap, Reference};

const STAGE: &str = "report";

/// Theoretical and measured GDD quoted for the reference source, fs².
pub const GDD_THEORY: f64 = -2.59e5;
pub const GDD_MEASURED: f64 = -2.66e5;

pub const REPORT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run_dir: PathBuf,
    pub scenario: String,
    pub config: RunConfig,
    pub config_hash: String,
    /// Hash over the config and every data file; stable across reruns.
    pub content_hash: String,
    pub timings: BTreeMap<String, f64>,
    pub fits: Vec<FitRecord>,
    pub retrievals: Vec<RetrievalRecord>,
    pub spatial: SpatialRecord,
    pub files: Vec<FileEntry>,
    pub figures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: u32,
    pub gdd_theory: f64,
    pub gdd_measured: f64,
    pub runs: Vec<RunReport>,
    pub figures: Vec<String>,
}

fn axis_range(label: &str, a: &Axis) -> AxisRange {
    AxisRange::new(label, a.value(0), a.value(a.len - 1))
}

struct Writer<'a> {
    out: &'a Path,
    figures: Vec<String>,
}

impl Writer<'_> {
    fn write(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.out.join(name);
        std::fs::write(&path, content).map_err(|e| PipelineError::io(STAGE, &path, e))?;
        self.figures.push(name.to_string());
        Ok(())
    }
}

fn run_figures(cfg: &RunConfig, dir: &RunDir, manifest: &Manifest, prefix: &str, w: &mut Writer) -> Result<()> {
    let px = cfg.plots.max_pixels;
    for k in 0..manifest.post_selections {
        let d = ps_dir(k);
        let meta: PostSelectionMeta = dir.read_json(&format!("{d}/meta.json"))?;
        let record: RetrievalRecord = dir.read_json(&format!("{d}/retrieval.json"))?;
        let (rs, ci) = (axis_range("ν_s (rad/fs)", &meta.axis_a), axis_range("ν_i (rad/fs)", &meta.axis_b));
        let spectral = |title: &'static str, floor: Option<f64>| Heatmap {
            title,
            rows: rs.clone(),
            cols: ci.clone(),
            floor,
            max_pixels: px,
        };
        for (file, title) in [
            ("interferogram_signal", "Interferogram, signal arm sheared"),
            ("interferogram_idler", "Interferogram, idler arm sheared"),
            ("jsi", "Joint spectral intensity"),
        ] {
            let v = dir.read_real(&format!("{d}/{file}.bin"))?;
            w.write(&format!("{prefix}_{d}_{file}.svg"), &heatmap(&v, &spectral(title, Some(0.0))))?;
        }
        let phase = dir.read_real(&format!("{d}/phase.bin"))?;
        w.write(&format!("{prefix}_{d}_phase.svg"), &heatmap(&phase, &spectral("Retrieved joint spectral phase (rad)", None)))?;
        let jti = dir.read_real(&format!("{d}/jti.bin"))?;
        let spec = Heatmap {
            title: "Joint temporal intensity",
            rows: axis_range("t_s (fs)", &record.jti_axis_a),
            cols: axis_range("t_i (fs)", &record.jti_axis_b),
            floor: Some(0.0),
            max_pixels: px,
        };
        w.write(&format!("{prefix}_{d}_jti.svg"), &heatmap(&jti, &spec))?;
    }

    let smeta: SpatialMeta = dir.read_json("spatial/meta.json")?;
    let g = smeta.signal_grid;
    let wavefront: Array2<f64> = dir.read_real("spatial/wavefront.bin")?;
    let spec = Heatmap {
        title: "Fringe-tracked signal wavefront (rad)",
        rows: AxisRange::new("x_s (mm)", g.x(0), g.x(g.n_x - 1)),
        cols: AxisRange::new("y_s (mm)", g.y(0), g.y(g.n_y - 1)),
        floor: None,
        max_pixels: px,
    };
    w.write(&format!("{prefix}_wavefront.svg"), &heatmap(&wavefront, &spec))?;
    let spatial: SpatialRecord = dir.read_json("spatial/retrieval.json")?;
    let pairs: Vec<_> = spatial.centroids.rows.iter().map(|r| (r.idler, r.centroid)).collect();
    let half = 0.5 * (g.n_x.max(g.n_y) as f64) * g.pitch + g.pitch;
    w.write(&format!("{prefix}_centroids.svg"), &arrow_plot("Conditional signal centroids", &pairs, half))?;
    let csv = spatial.centroids.to_csv();
    let path = w.out.join(format!("{prefix}_centroids.csv"));
    std::fs::write(&path, csv).map_err(|e| PipelineError::io(STAGE, &path, e))
}

/// Consolidated JSON and SVG figures for completed runs, written to `out`
/// (default: `report/` inside the first run).
pub fn report(runs: &[PathBuf], out: Option<&Path>) -> Result<Report> {
    if runs.is_empty() {
        return Err(PipelineError::usage(STAGE, "no run directories given"));
    }
    for r in runs {
        if !r.join(MANIFEST_FILE).is_file() {
            return Err(PipelineError::usage(
                STAGE,
                format!("{}: no {MANIFEST_FILE}; not a completed run", r.display()),
            ));
        }
    }
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| runs[0].join("report"));
    std::fs::create_dir_all(&out).map_err(|e| PipelineError::io(STAGE, &out, e))?;
    let mut w = Writer { out: &out, figures: Vec::new() };
    let mut used = BTreeSet::new();
    let mut reports = Vec::new();
    let mut points = Vec::new();
    for (n, root) in runs.iter().enumerate() {
        let (cfg, manifest, dir) = load_run(root, STAGE)?;
        manifest.verify(root)?;
        if (0..manifest.post_selections).any(|k| manifest.find("fit", Some(k)).is_none()) {
            return Err(PipelineError::usage(
                STAGE,
                format!("{}: not retrieved yet; run `retrieve` first", root.display()),
            ));
        }
        let prefix = if used.insert(cfg.scenario.clone()) { cfg.scenario.clone() } else { format!("{}-{n}", cfg.scenario) };
        let before = w.figures.len();
        run_figures(&cfg, &dir, &manifest, &prefix, &mut w)?;
        let mut fits = Vec::new();
        let mut retrievals = Vec::new();
        for k in 0..manifest.post_selections {
            let fit: FitRecord = dir.read_json(&format!("{}/fit.json", ps_dir(k)))?;
            points.push((format!("{prefix}/{}", ps_dir(k)), fit.fit.gdd));
            fits.push(fit);
            retrievals.push(dir.read_json(&format!("{}/retrieval.json", ps_dir(k)))?);
        }
        reports.push(RunReport {
            run_dir: root.clone(),
            scenario: cfg.scenario.clone(),
            config_hash: manifest.config_hash.clone(),
            content_hash: manifest.content_hash(),
            timings: manifest.timings.clone(),
            fits,
            retrievals,
            spatial: dir.read_json("spatial/retrieval.json")?,
            files: manifest.files.clone(),
            figures: w.figures[before..].to_vec(),
            config: cfg,
        });
    }
    let refs = [
        Reference {
            label: "theory".into(),
            value: GDD_THEORY,
        },
        Reference {
            label: "measured".into(),
            value: GDD_MEASURED,
        },
    ];
    w.write("fit_summary.svg", &point_plot("Retrieved GDD", "GDD (fs²)", &points, &refs))?;
    let report = Report {
        version: REPORT_VERSION,
        gdd_theory: GDD_THEORY,
        gdd_measured: GDD_MEASURED,
        runs: reports,
        figures: w.figures,
    };
    let path = out.join("report.json");
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(&path, text).map_err(|e| PipelineError::io(STAGE, &path, e))?;
    Ok(report)
}
