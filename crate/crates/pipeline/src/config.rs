use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use biphoton_core::grid::{FrequencyGrid, SpatialGrid};
use biphoton_core::interferometer::{DetectorConfig, FringeConfig, ShearConfig};
use biphoton_core::retrieval::{DenoiseConfig, GradientConfig, SidebandConfig, ZonalConfig};
use biphoton_core::spdc::{CrystalSpec, JointSpatialSpec, PostSelection, PumpSpec};

use crate::error::{PipelineError, Result};

pub const CONFIG_VERSION: u32 = 1;

/// Environment variable holding the default output root.
pub const OUTPUT_ROOT_ENV: &str = "SSI_OUTPUT_ROOT";

/// Signal and idler frequency grids.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralGridConfig {
    pub signal_center_nm: f64,
    pub idler_center_nm: f64,
    pub n_points: usize,
    /// rad/fs
    pub spacing: f64,
}

impl Default for SpectralGridConfig {
    fn default() -> Self {
        SpectralGridConfig {
            signal_center_nm: 1548.0,
            idler_center_nm: 1544.0,
            n_points: 256,
            spacing: 3e-4,
        }
    }
}

impl SpectralGridConfig {
    pub fn grids(&self) -> biphoton_core::Result<(FrequencyGrid, FrequencyGrid)> {
        Ok((
            FrequencyGrid::around_wavelength(self.signal_center_nm, self.n_points, self.spacing)?,
            FrequencyGrid::around_wavelength(self.idler_center_nm, self.n_points, self.spacing)?,
        ))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// Expected counts, no sampling.
    #[default]
    None,
    /// Poisson counts scaled to `detector.total_counts` per interferogram.
    Poisson,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetrievalConfig {
    /// Applied to Poisson-sampled data only.
    pub denoise: DenoiseConfig,
    pub sideband: SidebandConfig,
    pub gradient: GradientConfig,
    pub zonal: ZonalConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlotConfig {
    pub enabled: bool,
    /// Heatmaps larger than this are block-averaged down to it.
    pub max_pixels: usize,
}

impl Default for PlotConfig {
    fn default() -> Self {
        PlotConfig {
            enabled: true,
            max_pixels: 128,
        }
    }
}

/// One experiment: source, measurement and retrieval settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub version: u32,
    pub scenario: String,
    pub seed: u64,
    /// Run directory; defaults to `$SSI_OUTPUT_ROOT/<scenario>` or `runs/<scenario>`.
    pub output_dir: Option<PathBuf>,
    pub grid: SpectralGridConfig,
    pub pump: PumpSpec,
    pub crystal: CrystalSpec,
    pub spatial: JointSpatialSpec,
    pub spatial_grid: SpatialGrid,
    pub post_selections: Vec<PostSelection>,
    /// `arm` is ignored: both arms are always simulated.
    pub shear: ShearConfig,
    pub detector: DetectorConfig,
    pub noise: NoiseModel,
    pub retrieval: RetrievalConfig,
    pub fringes: FringeConfig,
    pub plots: PlotConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            version: CONFIG_VERSION,
            scenario: "default".into(),
            seed: 0,
            output_dir: None,
            grid: SpectralGridConfig::default(),
            pump: PumpSpec {
                c2: -1.33e5,
                ..Default::default()
            },
            crystal: CrystalSpec::default(),
            spatial: JointSpatialSpec::default(),
            spatial_grid: SpatialGrid::default(),
            post_selections: vec![PostSelection::default()],
            shear: ShearConfig::default(),
            detector: DetectorConfig::default(),
            noise: NoiseModel::None,
            retrieval: RetrievalConfig::default(),
            fringes: FringeConfig::default(),
            plots: PlotConfig::default(),
        }
    }
}

const STAGE: &str = "config";

fn check(what: &str, r: biphoton_core::Result<()>) -> Result<()> {
    r.map_err(|e| PipelineError::core(STAGE, what, e))
}

impl RunConfig {
    /// Parses a JSON document. `version` must be present; other fields
    /// default. Unknown keys are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| PipelineError::config(STAGE, format!("invalid JSON: {e}")))?;
        match value.get("version") {
            Some(v) if v.as_u64() == Some(CONFIG_VERSION as u64) => {}
            Some(v) => {
                return Err(PipelineError::config(
                    STAGE,
                    format!("`version`: unsupported value {v}, expected {CONFIG_VERSION}"),
                ))
            }
            None => return Err(PipelineError::config(STAGE, "`version`: missing")),
        }
        serde_json::from_value(value).map_err(|e| PipelineError::config(STAGE, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(STAGE, path, e))?;
        Self::from_json(&text).map_err(|e| PipelineError {
            message: format!("{}: {}", path.display(), e.message),
            ..e
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// The config with `output_dir` cleared: where a run is written does not
    /// change what it contains.
    pub fn portable(&self) -> RunConfig {
        RunConfig {
            output_dir: None,
            ..self.clone()
        }
    }

    /// SHA-256 of the compact serialization of [`RunConfig::portable`], hex.
    pub fn hash(&self) -> String {
        hex(&Sha256::digest(serde_json::to_vec(&self.portable()).expect("config serializes")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(PipelineError::config(STAGE, format!("`version`: expected {CONFIG_VERSION}")));
        }
        let name_ok = !self.scenario.is_empty()
            && self
                .scenario
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            && !self.scenario.starts_with('.');
        if !name_ok {
            return Err(PipelineError::config(
                STAGE,
                format!("`scenario`: {:?} must be a non-empty file name of [A-Za-z0-9._-]", self.scenario),
            ));
        }
        check("grid", self.grid.grids().map(|_| ()))?;
        check("pump", self.pump.validate())?;
        check("crystal", self.crystal.validate())?;
        check("spatial", self.spatial.validate())?;
        check("spatial_grid", self.spatial_grid.validate())?;
        if self.post_selections.is_empty() {
            return Err(PipelineError::config(STAGE, "`post_selections`: at least one entry required"));
        }
        for (k, p) in self.post_selections.iter().enumerate() {
            check(&format!("post_selections[{k}]"), p.validate_on(&self.spatial_grid))?;
        }
        check("shear", self.shear.validate())?;
        check("detector", self.detector.validate())?;
        check("retrieval.sideband", self.retrieval.sideband.validate())?;
        check("retrieval.gradient", self.retrieval.gradient.validate())?;
        check("retrieval.zonal", self.retrieval.zonal.validate())?;
        let c = self.retrieval.denoise.cutoff;
        if !(c > 0.0 && c <= 1.0) {
            return Err(PipelineError::config(STAGE, format!("`retrieval.denoise.cutoff`: must be in (0, 1], got {c}")));
        }
        check("fringes", self.fringes.validate())?;
        if self.plots.max_pixels < 8 {
            return Err(PipelineError::config(STAGE, "`plots.max_pixels`: must be >= 8"));
        }
        Ok(())
    }

    /// Run directory: explicit, else under the output root.
    pub fn run_dir(&self) -> PathBuf {
        match &self.output_dir {
            Some(d) => d.clone(),
            None => output_root().join(&self.scenario),
        }
    }
}

pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn round_trip() {
        let mut c = RunConfig::default();
        c.pump.c3 = 5e6;
        c.post_selections.push(PostSelection::at([0.5, 0.0], [-0.5, 0.5]));
        c.shear.shear = 0.1 + 0.2;
        assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn minimal_document_takes_defaults() {
        assert_eq!(RunConfig::from_json(r#"{"version": 1}"#).unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_key_is_rejected() {
        let e = RunConfig::from_json(r#"{"version": 1, "pump": {"c4": 1.0}}"#).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.message.contains("c4"), "{e}");
    }

    #[test]
    fn missing_or_wrong_version_is_rejected() {
        assert!(RunConfig::from_json("{}").unwrap_err().message.contains("version"));
        assert!(RunConfig::from_json(r#"{"version": 7}"#).unwrap_err().message.contains("version"));
    }

    #[test]
    fn nested_validation_names_the_parameter() {
        let mut c = RunConfig::default();
        c.pump.bandwidth_fwhm_nm = -1.0;
        let e = c.validate().unwrap_err();
        assert!(e.message.contains("pump"), "{e}");
        let mut c = RunConfig::default();
        c.post_selections[0].idler = [0.25, 0.0];
        assert!(c.validate().unwrap_err().message.contains("post_selections[0]"));
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }
}
