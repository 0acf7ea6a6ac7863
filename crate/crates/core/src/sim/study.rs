//! The parameter sweeps behind the simulation tables, and their CSV form.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use super::{run_monte_carlo, PolynomialDistortion, RadiusUnit, SceneConfig, SolverKind, TrialStats};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Study {
    /// 3 resolutions x 4 fields of view, exact measurements.
    NoiseFree,
    /// Pixel noise std sweep.
    Noise,
    /// Person height std sweep.
    Height,
    /// Number of people sweep.
    Count,
    /// Polynomial lens distortion, with and without distortion modeling.
    Distortion,
}

impl Study {
    pub const ALL: [Study; 5] = [Study::NoiseFree, Study::Noise, Study::Height, Study::Count, Study::Distortion];

    pub fn name(self) -> &'static str {
        match self {
            Study::NoiseFree => "noisefree",
            Study::Noise => "noise",
            Study::Height => "height",
            Study::Count => "count",
            Study::Distortion => "distortion",
        }
    }
}

impl fmt::Display for Study {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Study {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Study::ALL.into_iter().find(|st| st.name() == s).ok_or_else(|| {
            Error::invalid(format!("unknown study {s:?} (expected noisefree, noise, height, count or distortion)"))
        })
    }
}

pub const NOISE_LEVELS: [f64; 6] = [0.1, 0.2, 0.5, 1.0, 2.0, 5.0];
pub const HEIGHT_STDS: [f64; 5] = [0.05, 0.1, 0.15, 0.2, 0.25];
pub const PERSON_COUNTS: [usize; 5] = [5, 10, 20, 50, 100];
pub const RESOLUTIONS: [(u32, u32); 3] = [(640, 480), (1280, 720), (1920, 1080)];
pub const FIELDS_OF_VIEW: [f64; 4] = [45.0, 60.0, 90.0, 120.0];
pub const DISTORTION_BLOCKS: [(f64, f64); 6] =
    [(1e-3, 0.0), (-1e-3, 0.0), (1e-4, 0.0), (-1e-4, 0.0), (1e-4, 1e-5), (-1e-4, 1e-5)];

/// Labelled configurations of a study. Every level shares the seed, so
/// levels see the same scene draws wherever their settings allow it.
pub fn study_levels(study: Study, seed: u64) -> Vec<(String, SceneConfig)> {
    let base = SceneConfig { rng_seed: seed, ..SceneConfig::default() };
    match study {
        Study::NoiseFree => RESOLUTIONS
            .iter()
            .flat_map(|&res| FIELDS_OF_VIEW.iter().map(move |&fov| (res, fov)))
            .map(|(res, fov)| {
                (format!("{}x{}@{}", res.0, res.1, fov), SceneConfig { resolution: res, fov_deg: fov, ..base.clone() })
            })
            .collect(),
        Study::Noise => {
            NOISE_LEVELS.iter().map(|&n| (format!("{n}"), SceneConfig { noise_std: n, ..base.clone() })).collect()
        }
        Study::Height => HEIGHT_STDS
            .iter()
            .map(|&s| (format!("{s}"), SceneConfig { noise_std: 0.5, height_std: s, person_count: 20, ..base.clone() }))
            .collect(),
        Study::Count => PERSON_COUNTS
            .iter()
            .map(|&c| {
                (format!("{c}"), SceneConfig { noise_std: 0.5, height_std: 0.1, person_count: c, ..base.clone() })
            })
            .collect(),
        Study::Distortion => DISTORTION_BLOCKS
            .iter()
            .map(|&(k1, k2)| {
                let cfg = SceneConfig {
                    person_count: 20,
                    distortion: Some(PolynomialDistortion::new(k1, k2, RadiusUnit::FocalLength)),
                    solvers: vec![SolverKind::Distortion, SolverKind::Direct],
                    ..base.clone()
                };
                (format!("k1={k1:e};k2={k2:e}"), cfg)
            })
            .collect(),
    }
}

/// One CSV row: one solver at one level of one study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub study: String,
    pub level: String,
    pub solver: String,
    pub trials: usize,
    pub failures: usize,
    pub fail_pct: f64,
    pub fx_err_pct: f64,
    pub fx_err_std: f64,
    pub fy_err_pct: f64,
    pub fy_err_std: f64,
    pub normal_err_deg: f64,
    pub normal_err_std: f64,
    pub rho_err_pct: f64,
    pub rho_err_std: f64,
    pub recon_err_pct: f64,
    pub recon_err_std: f64,
}

pub const CSV_HEADER: [&str; 16] = [
    "study",
    "level",
    "solver",
    "trials",
    "failures",
    "fail_pct",
    "fx_err_pct",
    "fx_err_std",
    "fy_err_pct",
    "fy_err_std",
    "normal_err_deg",
    "normal_err_std",
    "rho_err_pct",
    "rho_err_std",
    "recon_err_pct",
    "recon_err_std",
];

impl StudyRow {
    pub fn new(study: Study, level: &str, solver: SolverKind, s: &TrialStats) -> Self {
        StudyRow {
            study: study.name().to_string(),
            level: level.to_string(),
            solver: solver.name().to_string(),
            trials: s.trial_count,
            failures: s.failures,
            fail_pct: s.failure_rate,
            fx_err_pct: s.mean.fx,
            fx_err_std: s.std.fx,
            fy_err_pct: s.mean.fy,
            fy_err_std: s.std.fy,
            normal_err_deg: s.mean.normal,
            normal_err_std: s.std.normal,
            rho_err_pct: s.mean.rho,
            rho_err_std: s.std.rho,
            recon_err_pct: s.mean.recon,
            recon_err_std: s.std.recon,
        }
    }
}

/// Runs every level of `study` with `trials` trials each.
pub fn run_study(study: Study, trials: usize, seed: u64) -> Result<Vec<StudyRow>> {
    let mut rows = Vec::new();
    for (level, cfg) in study_levels(study, seed) {
        let res = run_monte_carlo(&cfg, trials)?;
        for (kind, stats) in &res.stats {
            rows.push(StudyRow::new(study, &level, *kind, stats));
        }
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[StudyRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_HEADER).map_err(|e| Error::invalid(e.to_string()))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| Error::invalid(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::invalid(e.to_string()))?;
    Ok(())
}
