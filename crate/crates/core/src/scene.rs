//! Scene attributes, scene geometry and the samplers that turn attribute
//! labels into concrete rooms, microphone arrays and source trajectories.
//!
//! Conventions: lengths in meters, times in seconds, angles in degrees.
//! Azimuth lives in the horizontal plane at microphone height with
//! 0° = right, 90° = front, 180° = left. The array axis is the room's y
//! axis (left microphone at lower y) and "front" points along +x.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::acoustics::{eyring_rt60, MAX_WALL_ABSORPTION};
use crate::audio::DEFAULT_SAMPLE_RATE;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

pub const DEFAULT_DURATION: f64 = 10.0;
/// Standard deviation of the label-conditioned azimuth distribution.
pub const DIRECTION_STD_DEG: f64 = 11.0;
pub const RT60_RANGE: (f64, f64) = (0.3, 0.6);
pub const HALF_SPACING_RANGE: (f64, f64) = (0.08, 0.09);
pub const OUTDOOR_SIZE: f64 = 100.0;
/// Spacing between emitted trajectory points.
pub const TRAJECTORY_HOP: f64 = 0.01;
const MAX_PLACEMENT_TRIES: usize = 100;
/// Straight-line paths may not pass closer than this to the array center
/// (or closer than either endpoint, if that is nearer).
pub const MIN_PASS_DISTANCE: f64 = 0.2;

macro_rules! label_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                let norm = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
                $(if norm == $text { return Ok($name::$variant); })+
                Err(Error::validation(stringify!($name), format!("unknown label {s:?}")))
            }
        }
    };
}

label_enum!(
    /// Scene size.
    SceneSize {
        Outdoors => "outdoors",
        Large => "large",
        Moderate => "moderate",
        Small => "small",
    }
);

label_enum!(
    DirectionLabel {
        Left => "left",
        FrontLeft => "front_left",
        Front => "front",
        FrontRight => "front_right",
        Right => "right",
    }
);

label_enum!(
    DistanceLabel {
        Far => "far",
        Moderate => "moderate",
        Near => "near",
    }
);

label_enum!(
    Movement {
        Still => "still",
        Moving => "moving",
        Instant => "instant",
    }
);

label_enum!(
    SpeedLabel {
        Slow => "slow",
        Moderate => "moderate",
        Fast => "fast",
        Instant => "instant",
    }
);

impl SceneSize {
    /// Range of the nominal room size `r`; `None` for outdoor scenes.
    pub fn size_range(self) -> Option<(f64, f64)> {
        match self {
            SceneSize::Outdoors => None,
            SceneSize::Large => Some((40.0, 90.0)),
            SceneSize::Moderate => Some((20.0, 40.0)),
            SceneSize::Small => Some((5.0, 20.0)),
        }
    }
}

impl DirectionLabel {
    pub fn center_deg(self) -> f64 {
        match self {
            DirectionLabel::Left => 180.0,
            DirectionLabel::FrontLeft => 135.0,
            DirectionLabel::Front => 90.0,
            DirectionLabel::FrontRight => 45.0,
            DirectionLabel::Right => 0.0,
        }
    }

    /// Nearest label; ties go to the label closer to front.
    pub fn nearest(angle_deg: f64) -> Self {
        let idx = ((180.0 - angle_deg.clamp(0.0, 180.0)) / 45.0).round() as usize;
        DirectionLabel::ALL[idx.min(4)]
    }
}

impl DistanceLabel {
    pub fn ratio_range(self) -> (f64, f64) {
        match self {
            DistanceLabel::Far => (0.6, 0.9),
            DistanceLabel::Moderate => (0.3, 0.6),
            DistanceLabel::Near => (0.1, 0.3),
        }
    }
}

impl SpeedLabel {
    /// Fraction of the clip spent moving; `None` for instant moves.
    pub fn ratio_range(self) -> Option<(f64, f64)> {
        match self {
            SpeedLabel::Slow => Some((0.75, 0.85)),
            SpeedLabel::Moderate => Some((0.45, 0.55)),
            SpeedLabel::Fast => Some((0.25, 0.35)),
            SpeedLabel::Instant => None,
        }
    }
}

/// A direction given either as a label or as an explicit azimuth in degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Direction {
    Label(DirectionLabel),
    Angle(f64),
}

impl Direction {
    pub fn label(self) -> DirectionLabel {
        match self {
            Direction::Label(l) => l,
            Direction::Angle(a) => DirectionLabel::nearest(a),
        }
    }
}

impl From<DirectionLabel> for Direction {
    fn from(l: DirectionLabel) -> Self {
        Direction::Label(l)
    }
}

/// Per-source attributes. `direction == None` marks a source whose caption
/// named no direction; the sampler then draws a label uniformly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceAttributes {
    pub event: String,
    pub direction: Option<Direction>,
    pub distance: DistanceLabel,
    pub movement: Movement,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_direction: Option<Direction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_distance: Option<DistanceLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<SpeedLabel>,
}

impl SourceAttributes {
    pub fn still(event: impl Into<String>, direction: impl Into<Direction>) -> Self {
        Self {
            event: event.into(),
            direction: Some(direction.into()),
            distance: DistanceLabel::Moderate,
            movement: Movement::Still,
            end_direction: None,
            end_distance: None,
            speed: None,
        }
    }

    pub fn moving(
        event: impl Into<String>,
        from: impl Into<Direction>,
        to: impl Into<Direction>,
        speed: SpeedLabel,
    ) -> Self {
        Self {
            event: event.into(),
            direction: Some(from.into()),
            distance: DistanceLabel::Moderate,
            movement: if speed == SpeedLabel::Instant {
                Movement::Instant
            } else {
                Movement::Moving
            },
            end_direction: Some(to.into()),
            end_distance: None,
            speed: Some(speed),
        }
    }

    pub fn direction_unspecified(&self) -> bool {
        self.direction.is_none()
    }

    pub fn validate(&self) -> Result<()> {
        for d in [self.direction, self.end_direction].into_iter().flatten() {
            if let Direction::Angle(a) = d {
                if !(0.0..=180.0).contains(&a) {
                    return Err(Error::validation(
                        "direction",
                        format!("angle {a}° outside [0, 180]"),
                    ));
                }
            }
        }
        match (self.movement, self.speed) {
            (Movement::Still, None) => {}
            (Movement::Still, Some(s)) => {
                return Err(Error::validation(
                    "attributes",
                    format!("still source {:?} has speed {s}", self.event),
                ))
            }
            (_, None) => {
                return Err(Error::validation(
                    "attributes",
                    format!("moving source {:?} has no speed", self.event),
                ))
            }
            (Movement::Instant, Some(SpeedLabel::Instant)) => {}
            (Movement::Moving, Some(s)) if s != SpeedLabel::Instant => {}
            (m, Some(s)) => {
                return Err(Error::validation(
                    "attributes",
                    format!("movement {m} does not match speed {s}"),
                ))
            }
        }
        if self.movement == Movement::Still && self.end_direction.is_some() {
            return Err(Error::validation(
                "attributes",
                "still source has an end direction",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeRecord {
    pub scene_size: SceneSize,
    pub sources: Vec<SourceAttributes>,
    /// Set when the record came from the deterministic fallback after an
    /// LLM request failed.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fallback: bool,
}

impl AttributeRecord {
    pub fn new(scene_size: SceneSize, sources: Vec<SourceAttributes>) -> Self {
        Self {
            scene_size,
            sources,
            fallback: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() {
            return Err(Error::validation("attributes", "record has no sources"));
        }
        self.sources.iter().try_for_each(SourceAttributes::validate)
    }
}

/// A shoebox room. `rt60 == None` means an anechoic (outdoor) scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub dims: [f64; 3],
    /// Nominal size `r` the dimensions were jittered around.
    pub nominal_size: f64,
    pub rt60: Option<f64>,
}

impl Room {
    pub fn new(dims: [f64; 3], rt60: Option<f64>) -> Result<Self> {
        let room = Self {
            dims,
            nominal_size: dims.iter().sum::<f64>() / 3.0,
            rt60,
        };
        room.validate()?;
        Ok(room)
    }

    pub fn is_anechoic(&self) -> bool {
        self.rt60.is_none()
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        p.iter().zip(&self.dims).all(|(&x, &d)| x > 0.0 && x < d)
    }

    pub fn volume(&self) -> f64 {
        self.dims.iter().product()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|&d| d <= 0.0 || !d.is_finite()) {
            return Err(Error::validation(
                "room",
                format!("dimensions {:?} must be positive", self.dims),
            ));
        }
        if let Some(rt) = self.rt60 {
            if !(RT60_RANGE.0..=RT60_RANGE.1).contains(&rt) {
                return Err(Error::validation(
                    "room",
                    format!("rt60 {rt} s outside [{}, {}]", RT60_RANGE.0, RT60_RANGE.1),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MicArray {
    pub center: [f64; 3],
    pub half_spacing: f64,
}

impl MicArray {
    pub fn left(&self) -> [f64; 3] {
        let [x, y, z] = self.center;
        [x, y - self.half_spacing, z]
    }

    pub fn right(&self) -> [f64; 3] {
        let [x, y, z] = self.center;
        [x, y + self.half_spacing, z]
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_spacing
    }

    /// Exact time difference of arrival (left minus right) for a source
    /// at `p`; positive when the source is toward the right.
    pub fn tdoa(&self, p: [f64; 3], speed_of_sound: f64) -> f64 {
        (distance(p, self.left()) - distance(p, self.right())) / speed_of_sound
    }
}

/// Where a source sits relative to the array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub angle: f64,
    pub distance: f64,
    pub distance_ratio: f64,
    pub position: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub event: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_ref: Option<String>,
    pub movement: Movement,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<SpeedLabel>,
    pub start_pos: [f64; 3],
    pub end_pos: [f64; 3],
    pub angle: f64,
    pub end_angle: f64,
    pub distance: f64,
    pub end_distance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_ratio: Option<f64>,
    pub move_start: f64,
    pub move_interval: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instant_time: Option<f64>,
    /// Instant moves are captioned as two sources sounding one after another.
    #[serde(default)]
    pub sequential_pair: bool,
    #[serde(default)]
    pub direction_unspecified: bool,
}

impl SourceSpec {
    /// A source that never moves.
    pub fn still(event: impl Into<String>, placement: &Placement) -> Self {
        Self {
            event: event.into(),
            audio_ref: None,
            movement: Movement::Still,
            speed: None,
            start_pos: placement.position,
            end_pos: placement.position,
            angle: placement.angle,
            end_angle: placement.angle,
            distance: placement.distance,
            end_distance: placement.distance,
            speed_ratio: None,
            move_start: 0.0,
            move_interval: 0.0,
            instant_time: None,
            sequential_pair: false,
            direction_unspecified: false,
        }
    }

    /// Displacement per second while moving; zero for still and instant sources.
    pub fn speed_mps(&self) -> f64 {
        if self.movement == Movement::Moving && self.move_interval > 0.0 {
            distance(self.start_pos, self.end_pos) / self.move_interval
        } else {
            0.0
        }
    }

    pub fn position_at(&self, t: f64) -> [f64; 3] {
        match self.movement {
            Movement::Still => self.start_pos,
            Movement::Instant => {
                if t < self.instant_time.unwrap_or(self.move_start) {
                    self.start_pos
                } else {
                    self.end_pos
                }
            }
            Movement::Moving => {
                if t < self.move_start {
                    self.start_pos
                } else if t <= self.move_start + self.move_interval {
                    let frac = if self.move_interval > 0.0 {
                        (t - self.move_start) / self.move_interval
                    } else {
                        1.0
                    };
                    lerp(self.start_pos, self.end_pos, frac)
                } else {
                    self.end_pos
                }
            }
        }
    }

    /// Positions at `k * hop` for every hop inside `[0, duration)`.
    pub fn trajectory(&self, duration: f64, hop: f64) -> Vec<[f64; 3]> {
        let n = (duration / hop).round() as usize;
        (0..n).map(|k| self.position_at(k as f64 * hop)).collect()
    }

    pub fn validate(&self, room: &Room, mic: &MicArray, duration: f64) -> Result<()> {
        if !(0.0..=180.0).contains(&self.angle) || !(0.0..=180.0).contains(&self.end_angle) {
            return Err(Error::validation("source", "angle outside [0, 180]"));
        }
        if self.distance.is_nan() || self.distance <= 0.0 {
            return Err(Error::validation("source", "distance must be positive"));
        }
        for p in [self.start_pos, self.end_pos] {
            if !room.contains(p) {
                return Err(Error::Geometry(format!(
                    "source {:?} position {p:?} outside room {:?}",
                    self.event, room.dims
                )));
            }
            if distance(p, mic.left()) < 1e-6 || distance(p, mic.right()) < 1e-6 {
                return Err(Error::Geometry("source coincides with a microphone".into()));
            }
        }
        if self.move_start + self.move_interval > duration + 1e-9 {
            return Err(Error::validation(
                "source",
                format!(
                    "motion ends at {} s after clip end {duration} s",
                    self.move_start + self.move_interval
                ),
            ));
        }
        if self.movement == Movement::Still && self.start_pos != self.end_pos {
            return Err(Error::validation(
                "source",
                "still source with distinct end position",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub room: Room,
    pub mic_array: MicArray,
    pub sources: Vec<SourceSpec>,
    pub duration: f64,
    pub sample_rate: u32,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        self.room.validate()?;
        if !self.room.contains(self.mic_array.left()) || !self.room.contains(self.mic_array.right())
        {
            return Err(Error::Geometry("microphone outside room".into()));
        }
        if !(HALF_SPACING_RANGE.0 - 1e-12..=HALF_SPACING_RANGE.1 + 1e-12)
            .contains(&self.mic_array.half_spacing)
        {
            return Err(Error::validation(
                "mic array",
                format!(
                    "half spacing {} m outside [0.08, 0.09]",
                    self.mic_array.half_spacing
                ),
            ));
        }
        if self.sources.is_empty() {
            return Err(Error::validation("scene", "no sources"));
        }
        if self.duration.is_nan() || self.duration <= 0.0 || self.sample_rate == 0 {
            return Err(Error::validation(
                "scene",
                "duration and sample rate must be positive",
            ));
        }
        for s in &self.sources {
            s.validate(&self.room, &self.mic_array, self.duration)?;
        }
        Ok(())
    }

    pub fn frames(&self) -> usize {
        (self.duration * self.sample_rate as f64).round() as usize
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scene: SceneSpec = serde_json::from_str(text)?;
        scene.validate()?;
        Ok(scene)
    }
}

pub fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    a.iter()
        .zip(&b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn lerp(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [
        a[0] + t * (b[0] - a[0]),
        a[1] + t * (b[1] - a[1]),
        a[2] + t * (b[2] - a[2]),
    ]
}

/// Draw room dimensions (and RT60 for indoor scenes) for a size label.
pub fn sample_room(size: SceneSize, rng: &mut SeededRng) -> Room {
    let (r, rt60) = match size.size_range() {
        None => (OUTDOOR_SIZE, None),
        Some((lo, hi)) => (rng.uniform(lo, hi), None),
    };
    let dims = [0, 1, 2].map(|_| r + rng.uniform(-0.1 * r, 0.1 * r));
    let rt60 = match size {
        SceneSize::Outdoors => rt60,
        _ => {
            // The largest halls cannot decay as fast as 0.3 s even with
            // near-total absorption; draw from the reachable part only.
            let lo = RT60_RANGE
                .0
                .max(eyring_rt60(dims, MAX_WALL_ABSORPTION) * (1.0 + 1e-9));
            Some(rng.uniform(lo, RT60_RANGE.1))
        }
    };
    Room {
        dims,
        nominal_size: r,
        rt60,
    }
}

/// Jitter the array center around the room center and draw the spacing.
pub fn sample_mic_array(room: &Room, rng: &mut SeededRng) -> Result<MicArray> {
    let r = room.nominal_size;
    for _ in 0..MAX_PLACEMENT_TRIES {
        let center = [0, 1, 2].map(|i| room.dims[i] / 2.0 + rng.uniform(-0.1 * r, 0.1 * r));
        let half_spacing = rng.uniform(HALF_SPACING_RANGE.0, HALF_SPACING_RANGE.1);
        let mic = MicArray {
            center,
            half_spacing,
        };
        if room.contains(mic.left()) && room.contains(mic.right()) {
            return Ok(mic);
        }
    }
    Err(Error::Geometry(format!(
        "could not fit a microphone array in room {:?} after {MAX_PLACEMENT_TRIES} tries",
        room.dims
    )))
}

/// Source position for an azimuth and distance from the array center.
pub fn source_position(mic: &MicArray, angle_deg: f64, distance: f64) -> [f64; 3] {
    let theta = angle_deg.to_radians();
    let [m0, m1, m2] = mic.center;
    [m0 + distance * theta.sin(), m1 + distance * theta.cos(), m2]
}

/// Largest usable source distance: the smallest horizontal gap between the
/// array center and a wall on the front side or either lateral side.
pub fn distance_scale(room: &Room, mic: &MicArray) -> f64 {
    let [m0, m1, _] = mic.center;
    (room.dims[0] - m0).min(room.dims[1] - m1).min(m0).min(m1)
}

/// Draw azimuth, distance and start position for one source.
///
/// `direction == None` draws a label uniformly first. Labels are jittered
/// with N(center, 11°) and clamped to [0°, 180°]; explicit angles are used
/// as given.
pub fn sample_source_placement(
    direction: Option<Direction>,
    distance_label: DistanceLabel,
    room: &Room,
    mic: &MicArray,
    rng: &mut SeededRng,
) -> Result<Placement> {
    let direction = match direction {
        Some(d) => d,
        None => Direction::Label(DirectionLabel::ALL[rng.index(DirectionLabel::ALL.len())]),
    };
    let scale = distance_scale(room, mic);
    let (lo, hi) = distance_label.ratio_range();
    for _ in 0..MAX_PLACEMENT_TRIES {
        let angle = match direction {
            Direction::Angle(a) => {
                if !(0.0..=180.0).contains(&a) {
                    return Err(Error::validation(
                        "direction",
                        format!("angle {a}° outside [0, 180]"),
                    ));
                }
                a
            }
            Direction::Label(l) => rng
                .normal(l.center_deg(), DIRECTION_STD_DEG)
                .clamp(0.0, 180.0),
        };
        let ratio = rng.uniform(lo, hi);
        let d = ratio * scale;
        let position = source_position(mic, angle, d);
        let clear_of_mics =
            distance(position, mic.left()) > 1e-3 && distance(position, mic.right()) > 1e-3;
        if room.contains(position) && clear_of_mics && d > 0.0 {
            return Ok(Placement {
                angle,
                distance: d,
                distance_ratio: ratio,
                position,
            });
        }
    }
    Err(Error::Geometry(format!(
        "could not place a source inside room {:?} after {MAX_PLACEMENT_TRIES} tries",
        room.dims
    )))
}

/// Closest distance between the segment `a`–`b` and the point `p`.
pub fn path_clearance(a: [f64; 3], b: [f64; 3], p: [f64; 3]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let ap = [p[0] - a[0], p[1] - a[1], p[2] - a[2]];
    let len2: f64 = ab.iter().map(|x| x * x).sum();
    let t = if len2 > 0.0 {
        (ab.iter().zip(&ap).map(|(x, y)| x * y).sum::<f64>() / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    distance(lerp(a, b, t), p)
}

/// Draw an end label different from `start`, uniformly among the other four.
pub fn sample_end_label(start: DirectionLabel, rng: &mut SeededRng) -> DirectionLabel {
    let others: Vec<_> = DirectionLabel::ALL
        .iter()
        .copied()
        .filter(|&l| l != start)
        .collect();
    others[rng.index(others.len())]
}

/// Attach timing to a start (and end) placement.
///
/// Moving sources spend `alpha * duration` seconds in motion, starting at
/// `U(0, 0.15) * duration`; instant sources jump at `U(0.2, 0.8) * duration`.
pub fn build_trajectory(
    event: &str,
    start: &Placement,
    end: Option<&Placement>,
    movement: Movement,
    speed: Option<SpeedLabel>,
    duration: f64,
    rng: &mut SeededRng,
) -> Result<SourceSpec> {
    let mut spec = SourceSpec::still(event, start);
    if movement == Movement::Still {
        return Ok(spec);
    }
    let end =
        end.ok_or_else(|| Error::validation("trajectory", "moving source needs an end placement"))?;
    spec.movement = movement;
    spec.end_pos = end.position;
    spec.end_angle = end.angle;
    spec.end_distance = end.distance;
    match movement {
        Movement::Moving => {
            let speed = speed
                .ok_or_else(|| Error::validation("trajectory", "moving source needs a speed"))?;
            let (lo, hi) = speed.ratio_range().ok_or_else(|| {
                Error::validation("trajectory", "instant speed on a gradually moving source")
            })?;
            let alpha = rng.uniform(lo, hi);
            spec.speed = Some(speed);
            spec.speed_ratio = Some(alpha);
            spec.move_interval = alpha * duration;
            spec.move_start = rng.uniform(0.0, 0.15) * duration;
            assert!(
                spec.move_start + spec.move_interval <= duration,
                "motion window exceeds clip"
            );
        }
        Movement::Instant => {
            let t_move = rng.uniform(0.2, 0.8) * duration;
            spec.speed = Some(SpeedLabel::Instant);
            spec.move_start = t_move;
            spec.move_interval = 0.0;
            spec.instant_time = Some(t_move);
            spec.sequential_pair = true;
        }
        Movement::Still => unreachable!(),
    }
    Ok(spec)
}

/// Sample placement and trajectory for one attributed source.
pub fn sample_source(
    attrs: &SourceAttributes,
    room: &Room,
    mic: &MicArray,
    duration: f64,
    rng: &mut SeededRng,
) -> Result<SourceSpec> {
    attrs.validate()?;
    let start_dir = attrs.direction.unwrap_or_else(|| {
        Direction::Label(DirectionLabel::ALL[rng.index(DirectionLabel::ALL.len())])
    });
    let start = sample_source_placement(Some(start_dir), attrs.distance, room, mic, rng)?;
    let end = if attrs.movement == Movement::Still {
        None
    } else {
        let end_dir = attrs
            .end_direction
            .unwrap_or_else(|| Direction::Label(sample_end_label(start_dir.label(), rng)));
        let end_dist = attrs.end_distance.unwrap_or(attrs.distance);
        let mut accepted = None;
        for _ in 0..MAX_PLACEMENT_TRIES {
            let end = sample_source_placement(Some(end_dir), end_dist, room, mic, rng)?;
            let clear = attrs.movement == Movement::Instant
                || path_clearance(start.position, end.position, mic.center)
                    >= MIN_PASS_DISTANCE.min(start.distance).min(end.distance) * (1.0 - 1e-9);
            if clear {
                accepted = Some(end);
                break;
            }
        }
        Some(accepted.ok_or_else(|| {
            Error::Geometry(format!(
                "no end position for {:?} keeps the path clear of the microphones",
                attrs.event
            ))
        })?)
    };
    let mut spec = build_trajectory(
        &attrs.event,
        &start,
        end.as_ref(),
        attrs.movement,
        attrs.speed,
        duration,
        rng,
    )?;
    spec.direction_unspecified = attrs.direction.is_none();
    Ok(spec)
}

/// Sample a complete scene for an attribute record. Room and array use
/// stream 0 of `rng`'s seed; source `i` uses stream `1 + i`.
pub fn sample_scene(
    record: &AttributeRecord,
    seed: u64,
    duration: f64,
    sample_rate: u32,
) -> Result<SceneSpec> {
    use crate::rng::streams;
    record.validate()?;
    let mut scene_rng = SeededRng::with_stream(seed, streams::SCENE);
    let room = sample_room(record.scene_size, &mut scene_rng);
    let mic_array = sample_mic_array(&room, &mut scene_rng)?;
    let sources = record
        .sources
        .iter()
        .enumerate()
        .map(|(i, attrs)| {
            let mut rng = SeededRng::with_stream(seed, streams::SOURCE_BASE + i as u64);
            sample_source(attrs, &room, &mic_array, duration, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let scene = SceneSpec {
        room,
        mic_array,
        sources,
        duration,
        sample_rate,
    };
    scene.validate()?;
    Ok(scene)
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            room: Room {
                dims: [OUTDOOR_SIZE; 3],
                nominal_size: OUTDOOR_SIZE,
                rt60: None,
            },
            mic_array: MicArray {
                center: [OUTDOOR_SIZE / 2.0; 3],
                half_spacing: 0.085,
            },
            sources: Vec::new(),
            duration: DEFAULT_DURATION,
            sample_rate: DEFAULT_SAMPLE_RATE,
        }
    }
}
