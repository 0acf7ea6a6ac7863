use serde::{Deserialize, Serialize};

use pedcal::robust::RansacConfig;

/// RANSAC settings as recorded in a manifest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RansacSettings {
    pub confidence: f64,
    pub inlier_ratio_prior: f64,
    pub min_samples: usize,
    pub inlier_threshold_px: f64,
    pub max_iterations_cap: usize,
}

impl RansacSettings {
    pub fn new(fx_eq_fy: bool, inlier_px: f64) -> Self {
        let c = RansacConfig::new(fx_eq_fy);
        RansacSettings {
            confidence: c.confidence,
            inlier_ratio_prior: c.inlier_ratio_prior,
            min_samples: c.min_samples,
            inlier_threshold_px: inlier_px,
            max_iterations_cap: c.max_iterations_cap,
        }
    }

    pub fn config(&self, seed: u64) -> RansacConfig {
        RansacConfig {
            confidence: self.confidence,
            inlier_ratio_prior: self.inlier_ratio_prior,
            min_samples: self.min_samples,
            inlier_threshold: self.inlier_threshold_px,
            max_iterations_cap: self.max_iterations_cap,
            rng_seed: seed,
        }
    }
}

/// Everything needed to reproduce an output. Embedded in every artifact the
/// tool writes; it carries no timestamp, so equal runs give equal bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub inputs: Vec<String>,
    pub height_m: f64,
    pub fx_eq_fy: bool,
    /// `None` when RANSAC is disabled.
    pub ransac: Option<RansacSettings>,
    pub distortion: bool,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_conf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_size: Option<[u32; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extent_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
}

impl RunManifest {
    pub fn new(command: &str, inputs: Vec<String>) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            inputs,
            height_m: pedcal::HeightPrior::default().get(),
            fx_eq_fy: false,
            ransac: None,
            distortion: false,
            seed: 0,
            min_conf: None,
            image_size: None,
            threshold_m: None,
            cell_m: None,
            extent_m: None,
            study: None,
            trials: None,
        }
    }
}
