//! COCO-style pose keypoints and the reduction of one detected person to an
//! ankle-center / shoulder-center observation.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::types::{CameraIntrinsics, PersonObservation, PixelPoint};
use crate::{Error, Result};

/// The 17 COCO joints, in file order.
pub const COCO_JOINTS: [&str; 17] = [
    "nose",
    "left_eye",
    "right_eye",
    "left_ear",
    "right_ear",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
];

pub const LEFT_SHOULDER: usize = 5;
pub const RIGHT_SHOULDER: usize = 6;
pub const LEFT_ANKLE: usize = 15;
pub const RIGHT_ANKLE: usize = 16;

/// Default minimum detector confidence for the four joints used.
pub const DEFAULT_MIN_CONF: f64 = 0.5;

/// Index of a COCO joint name.
pub fn joint_index(name: &str) -> Option<usize> {
    COCO_JOINTS.iter().position(|&j| j == name)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub u: f64,
    pub v: f64,
    pub conf: f64,
}

impl Keypoint {
    pub fn new(u: f64, v: f64, conf: f64) -> Self {
        Keypoint { u, v, conf }
    }
}

/// One detected person: 17 keypoints in COCO order, raw-image pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct CocoPose {
    joints: [Keypoint; 17],
}

impl CocoPose {
    pub fn from_array(joints: [Keypoint; 17]) -> Self {
        CocoPose { joints }
    }

    /// From `[u, v, conf]` triples as stored in keypoint files.
    pub fn from_triples(triples: &[[f64; 3]]) -> Result<Self> {
        if triples.len() != COCO_JOINTS.len() {
            return Err(Error::invalid(format!("expected 17 keypoints, got {}", triples.len())));
        }
        let mut joints = [Keypoint::new(0.0, 0.0, 0.0); 17];
        for (j, t) in joints.iter_mut().zip(triples) {
            *j = Keypoint::new(t[0], t[1], t[2]);
        }
        Ok(CocoPose { joints })
    }

    /// From `(name, keypoint)` pairs. Every COCO joint name must appear.
    pub fn from_named<'a>(named: impl IntoIterator<Item = (&'a str, Keypoint)>) -> Result<Self> {
        let mut slots: [Option<Keypoint>; 17] = [None; 17];
        for (name, kp) in named {
            let i = joint_index(name).ok_or_else(|| Error::invalid(format!("unknown keypoint name {name:?}")))?;
            slots[i] = Some(kp);
        }
        let mut joints = [Keypoint::new(0.0, 0.0, 0.0); 17];
        for (i, slot) in slots.iter().enumerate() {
            joints[i] = slot.ok_or_else(|| Error::invalid(format!("missing keypoint {:?}", COCO_JOINTS[i])))?;
        }
        Ok(CocoPose { joints })
    }

    pub fn joint(&self, index: usize) -> &Keypoint {
        &self.joints[index]
    }

    pub fn get(&self, name: &str) -> Option<&Keypoint> {
        joint_index(name).map(|i| &self.joints[i])
    }

    pub fn to_triples(&self) -> Vec<[f64; 3]> {
        self.joints.iter().map(|k| [k.u, k.v, k.conf]).collect()
    }
}

/// Why a detected person did not yield an observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Rejection {
    LowConfidence { joint: String, conf: f64 },
    NonFinite { joint: String },
    ZeroLength,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::LowConfidence { joint, conf } => write!(f, "{joint} confidence {conf} below threshold"),
            Rejection::NonFinite { joint } => write!(f, "{joint} has non-finite coordinates"),
            Rejection::ZeroLength => write!(f, "ankle and shoulder centers coincide"),
        }
    }
}

/// Ankle center and shoulder center (raw-image frame) as midpoints of the
/// left/right joints, or the reason the person is unusable.
pub fn centers_from_coco(pose: &CocoPose, min_conf: f64) -> std::result::Result<PersonObservation<f64>, Rejection> {
    for i in [LEFT_SHOULDER, RIGHT_SHOULDER, LEFT_ANKLE, RIGHT_ANKLE] {
        let k = pose.joint(i);
        if !(k.u.is_finite() && k.v.is_finite()) {
            return Err(Rejection::NonFinite { joint: COCO_JOINTS[i].to_string() });
        }
        if !(k.conf >= min_conf) {
            return Err(Rejection::LowConfidence { joint: COCO_JOINTS[i].to_string(), conf: k.conf });
        }
    }
    let mid = |a: usize, b: usize| {
        let (p, q) = (pose.joint(a), pose.joint(b));
        PixelPoint::raw(0.5 * (p.u + q.u), 0.5 * (p.v + q.v))
    };
    let ankle = mid(LEFT_ANKLE, RIGHT_ANKLE);
    let shoulder = mid(LEFT_SHOULDER, RIGHT_SHOULDER);
    PersonObservation::new(ankle, shoulder).map_err(|_| Rejection::ZeroLength)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonRecord {
    pub keypoints: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeypointFrame {
    pub frame_id: String,
    pub people: Vec<PersonRecord>,
}

/// A person that could not be used, with its position in the input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPerson {
    pub frame_id: String,
    pub person: usize,
    #[serde(flatten)]
    pub reason: Rejection,
}

/// An accepted person with its position in the input.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestedPerson {
    pub frame_id: String,
    pub person: usize,
    pub observation: PersonObservation<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ingested {
    pub people: Vec<IngestedPerson>,
    pub skipped: Vec<SkippedPerson>,
}

impl Ingested {
    pub fn observations(&self) -> Vec<PersonObservation<f64>> {
        self.people.iter().map(|p| p.observation).collect()
    }
}

/// A keypoint file: the frames, plus the image size when the producer knew
/// it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeypointFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_size: Option<[u32; 2]>,
    pub frames: Vec<KeypointFrame>,
}

fn check_frames(frames: &[KeypointFrame]) -> Result<()> {
    for f in frames {
        for (i, p) in f.people.iter().enumerate() {
            if p.keypoints.len() != COCO_JOINTS.len() {
                return Err(Error::invalid(format!(
                    "frame {:?} person {i}: expected 17 keypoints, got {}",
                    f.frame_id,
                    p.keypoints.len()
                )));
            }
        }
    }
    Ok(())
}

/// Parses a keypoint file, either a bare JSON array of frames or an object
/// `{"image_size": [w, h], "frames": [...]}`.
pub fn parse_keypoint_file(json: &str) -> Result<KeypointFile> {
    let malformed = |e: serde_json::Error| Error::invalid(format!("malformed keypoint file: {e}"));
    let value: serde_json::Value = serde_json::from_str(json).map_err(malformed)?;
    let file = if value.is_array() {
        KeypointFile { image_size: None, frames: serde_json::from_value(value).map_err(malformed)? }
    } else {
        serde_json::from_value(value).map_err(malformed)?
    };
    check_frames(&file.frames)?;
    Ok(file)
}

/// Parses a bare JSON array of frames.
pub fn parse_frames(json: &str) -> Result<Vec<KeypointFrame>> {
    let frames: Vec<KeypointFrame> =
        serde_json::from_str(json).map_err(|e| Error::invalid(format!("malformed keypoint file: {e}")))?;
    check_frames(&frames)?;
    Ok(frames)
}

/// Reduces every detected person of every frame, keeping input order.
pub fn ingest(frames: &[KeypointFrame], min_conf: f64) -> Result<Ingested> {
    let mut out = Ingested::default();
    for f in frames {
        for (i, rec) in f.people.iter().enumerate() {
            let pose = CocoPose::from_triples(&rec.keypoints)?;
            match centers_from_coco(&pose, min_conf) {
                Ok(observation) => {
                    out.people.push(IngestedPerson { frame_id: f.frame_id.clone(), person: i, observation })
                }
                Err(reason) => out.skipped.push(SkippedPerson { frame_id: f.frame_id.clone(), person: i, reason }),
            }
        }
    }
    Ok(out)
}

/// A pose whose four used joints produce exactly the given centers, with the
/// left and right joints spread `half_width` pixels either side. Other joints
/// are placed on the segment with full confidence.
pub fn pose_from_centers(obs: &PersonObservation<f64>, half_width: f64) -> CocoPose {
    let (a, s) = (obs.ankle, obs.shoulder);
    let mut joints = [Keypoint::new(0.0, 0.0, 1.0); 17];
    for (i, j) in joints.iter_mut().enumerate() {
        let t = i as f64 / 16.0;
        *j = Keypoint::new(s.u + t * (a.u - s.u), s.v + t * (a.v - s.v), 1.0);
    }
    joints[LEFT_SHOULDER] = Keypoint::new(s.u - half_width, s.v, 1.0);
    joints[RIGHT_SHOULDER] = Keypoint::new(s.u + half_width, s.v, 1.0);
    joints[LEFT_ANKLE] = Keypoint::new(a.u - half_width, a.v, 1.0);
    joints[RIGHT_ANKLE] = Keypoint::new(a.u + half_width, a.v, 1.0);
    CocoPose::from_array(joints)
}

/// Writes principal-centered observations out as raw-image keypoint frames
/// of at most `per_frame` people each, named `frame_0000`, `frame_0001`, ...
pub fn frames_from_observations(
    obs: &[PersonObservation<f64>],
    intrinsics: &CameraIntrinsics<f64>,
    per_frame: usize,
    half_width: f64,
) -> Result<Vec<KeypointFrame>> {
    if per_frame == 0 {
        return Err(Error::invalid("frames must hold at least one person"));
    }
    obs.chunks(per_frame)
        .enumerate()
        .map(|(i, chunk)| {
            let people = chunk
                .iter()
                .map(|o| {
                    let raw = PersonObservation::new(intrinsics.to_raw(o.ankle)?, intrinsics.to_raw(o.shoulder)?)?;
                    Ok(PersonRecord { keypoints: pose_from_centers(&raw, half_width).to_triples() })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(KeypointFrame { frame_id: format!("frame_{i:04}"), people })
        })
        .collect()
}
