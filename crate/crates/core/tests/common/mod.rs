#![allow(dead_code)]

use binsynth::rng::SeededRng;
use binsynth::scene::{
    AttributeRecord, Direction, DirectionLabel, DistanceLabel, Movement, SceneSize,
    SourceAttributes, SpeedLabel,
};

pub const PHRASES: &[&str] = &[
    "A dog barks",
    "Trumpet sound",
    "A cell phone is vibrating",
    "The printer is printing",
    "Rain falls",
    "An engine idles",
    "A bell rings",
    "Water pours",
    "A woman laughs",
    "Children laugh",
    "Wind chimes",
    "A kettle whistles",
];

pub fn pick<T: Copy>(rng: &mut SeededRng, xs: &[T]) -> T {
    xs[rng.index(xs.len())]
}

fn random_direction(rng: &mut SeededRng) -> Option<Direction> {
    match rng.index(10) {
        0 => None,
        1 | 2 => Some(Direction::Angle(
            (rng.uniform(0.0, 180.0) * 10.0).round() / 10.0,
        )),
        3 => Some(Direction::Angle(rng.uniform(0.0, 180.0))),
        _ => Some(Direction::Label(pick(rng, DirectionLabel::ALL))),
    }
}

fn random_source(rng: &mut SeededRng) -> SourceAttributes {
    let event = pick(rng, PHRASES).to_string();
    let distance = pick(rng, DistanceLabel::ALL);
    let movement = pick(rng, Movement::ALL);
    let (end_direction, end_distance, speed) = match movement {
        Movement::Still => (None, None, None),
        _ => {
            let end = random_direction(rng);
            let end_dist = rng.bernoulli(0.5).then(|| pick(rng, DistanceLabel::ALL));
            let speed = if movement == Movement::Instant {
                SpeedLabel::Instant
            } else {
                pick(
                    rng,
                    &[SpeedLabel::Slow, SpeedLabel::Moderate, SpeedLabel::Fast],
                )
            };
            (end, end_dist, Some(speed))
        }
    };
    SourceAttributes {
        event,
        direction: random_direction(rng),
        distance,
        movement,
        end_direction,
        end_distance,
        speed,
    }
}

pub fn random_record(seed: u64) -> AttributeRecord {
    let mut rng = SeededRng::new(seed);
    let n = 1 + rng.index(4);
    let sources = (0..n).map(|_| random_source(&mut rng)).collect();
    AttributeRecord::new(pick(&mut rng, SceneSize::ALL), sources)
}

/// Uniform white noise in [-0.5, 0.5).
pub fn noise(frames: usize, rng: &mut SeededRng) -> Vec<f64> {
    (0..frames).map(|_| rng.uniform(-0.5, 0.5)).collect()
}
