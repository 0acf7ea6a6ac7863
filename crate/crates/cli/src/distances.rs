use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use pedcal::keypoints;
use pedcal::{DistanceBin, GroundPlane};

use crate::calibrate::{load_keypoints, CalibrationReport};
use crate::error::{CliError, CliResult};
use crate::io;
use crate::manifest::RunManifest;

/// Six feet, in meters.
pub const SIX_FEET_M: f64 = 1.8288;

#[derive(Debug, Clone, clap::Args)]
pub struct DistancesArgs {
    /// Keypoint file to measure.
    pub input: PathBuf,
    /// Calibration written by `calibrate`.
    #[arg(long)]
    pub calibration: PathBuf,
    /// Flag people whose nearest neighbor is within this distance, meters.
    #[arg(long)]
    pub threshold_m: Option<f64>,
    #[arg(long, default_value_t = keypoints::DEFAULT_MIN_CONF)]
    pub min_conf: f64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonPoint {
    pub person: usize,
    /// Ankle center on the ground plane, camera frame, meters.
    pub ankle_m: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDistance {
    pub i: usize,
    pub j: usize,
    pub distance_m: f64,
    pub bin: DistanceBin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub person: usize,
    pub neighbor: usize,
    pub distance_m: f64,
    /// Present only when a threshold was given.
    #[serde(rename = "unsafe", default, skip_serializing_if = "Option::is_none")]
    pub unsafe_flag: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDistances {
    pub frame_id: String,
    pub people: Vec<PersonPoint>,
    /// Every unordered pair `i < j`.
    pub pairs: Vec<PairDistance>,
    pub nearest: Vec<Neighbor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub frame_id: String,
    pub person: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub manifest: RunManifest,
    pub frames: Vec<FrameDistances>,
    pub skipped: Vec<SkipRecord>,
}

impl DistanceReport {
    /// Predicted bin for the unordered pair `(i, j)` of a frame.
    pub fn pair(&self, frame_id: &str, i: usize, j: usize) -> Option<&PairDistance> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.frames.iter().filter(|f| f.frame_id == frame_id).flat_map(|f| &f.pairs).find(|p| p.i == a && p.j == b)
    }
}

fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Pairs, bins and nearest neighbors of one frame's ground points.
pub fn frame_distances(frame_id: &str, people: Vec<PersonPoint>, threshold_m: Option<f64>) -> FrameDistances {
    let mut pairs = Vec::new();
    for (a, p) in people.iter().enumerate() {
        for q in &people[a + 1..] {
            let d = distance(&p.ankle_m, &q.ankle_m);
            let bin = DistanceBin::from_meters(d).unwrap_or(DistanceBin::B4ToInf);
            pairs.push(PairDistance { i: p.person, j: q.person, distance_m: d, bin });
        }
    }
    let nearest = people
        .iter()
        .filter_map(|p| {
            people
                .iter()
                .filter(|q| q.person != p.person)
                .map(|q| (q.person, distance(&p.ankle_m, &q.ankle_m)))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .map(|(neighbor, d)| Neighbor {
                    person: p.person,
                    neighbor,
                    distance_m: d,
                    unsafe_flag: threshold_m.map(|t| d <= t),
                })
        })
        .collect();
    FrameDistances { frame_id: frame_id.to_string(), people, pairs, nearest }
}

pub fn distances(args: &DistancesArgs) -> CliResult<DistanceReport> {
    if let Some(t) = args.threshold_m {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::schema("--threshold-m must be positive"));
        }
    }
    let cal: CalibrationReport = io::read_json(&args.calibration)?;
    let camera = cal.camera()?;
    let plane: GroundPlane = cal.ground_plane()?;
    let file = load_keypoints(&args.input)?;
    if let Some(size) = file.image_size {
        if [size[0] as f64, size[1] as f64] != [camera.width, camera.height] {
            return Err(CliError::schema(format!(
                "keypoint image size {}x{} does not match the calibration",
                size[0], size[1]
            )));
        }
    }

    let mut manifest =
        RunManifest::new("distances", vec![args.input.display().to_string(), args.calibration.display().to_string()]);
    manifest.height_m = cal.manifest.height_m;
    manifest.fx_eq_fy = cal.manifest.fx_eq_fy;
    manifest.distortion = cal.distortion_k.is_some();
    manifest.seed = cal.manifest.seed;
    manifest.min_conf = Some(args.min_conf);
    manifest.image_size = cal.manifest.image_size;
    manifest.threshold_m = args.threshold_m;

    let mut frames = Vec::new();
    let mut skipped = Vec::new();
    for frame in &file.frames {
        let ing = keypoints::ingest(std::slice::from_ref(frame), args.min_conf)?;
        skipped.extend(ing.skipped.iter().map(|s| SkipRecord {
            frame_id: s.frame_id.clone(),
            person: s.person,
            reason: s.reason.to_string(),
        }));
        let mut points = Vec::new();
        for p in &ing.people {
            let ankle = cal.normalize_point(p.observation.ankle)?;
            match plane.intersect_ray(&camera.ray(&ankle)) {
                Some(x) => points.push(PersonPoint { person: p.person, ankle_m: [x.x, x.y, x.z] }),
                None => skipped.push(SkipRecord {
                    frame_id: p.frame_id.clone(),
                    person: p.person,
                    reason: "ankle ray does not meet the ground plane".into(),
                }),
            }
        }
        frames.push(frame_distances(&frame.frame_id, points, args.threshold_m));
    }
    Ok(DistanceReport { manifest, frames, skipped })
}

pub fn run(args: &DistancesArgs) -> CliResult<()> {
    let report = distances(args)?;
    io::write_text(args.output.as_deref(), &io::to_json(&report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(person: usize, x: f64, z: f64) -> PersonPoint {
        PersonPoint { person, ankle_m: [x, 2.0, z] }
    }

    #[test]
    fn single_person_frame() {
        let f = frame_distances("f", vec![at(0, 0.0, 5.0)], Some(SIX_FEET_M));
        assert!(f.pairs.is_empty());
        assert!(f.nearest.is_empty());
    }

    #[test]
    fn threshold_flags() {
        let f = frame_distances("f", vec![at(0, 0.0, 5.0), at(3, 1.0, 5.0), at(7, 9.0, 5.0)], Some(SIX_FEET_M));
        assert_eq!(f.pairs.len(), 3);
        assert_eq!(f.pairs[0].bin, DistanceBin::B1To2);
        assert_eq!(f.pairs[1].bin, DistanceBin::B4ToInf);
        let flags: Vec<(usize, usize, Option<bool>)> =
            f.nearest.iter().map(|n| (n.person, n.neighbor, n.unsafe_flag)).collect();
        assert_eq!(flags, [(0, 3, Some(true)), (3, 0, Some(true)), (7, 3, Some(false))]);
        let g = frame_distances("f", vec![at(0, 0.0, 5.0), at(1, 1.0, 5.0)], None);
        assert!(g.nearest.iter().all(|n| n.unsafe_flag.is_none()));
        assert!(!serde_json::to_string(&g).unwrap().contains("unsafe"));
    }
}
