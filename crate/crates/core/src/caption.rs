//! Rule-based translation between spatial captions and attribute records.
//!
//! The parser splits a caption into clauses on connectors (`while`, `as`,
//! `then`, `;`, and, when both sides look like complete clauses, `and` and
//! commas), then reads each clause for a direction, a distance, motion and
//! speed. Everything before the first direction phrase, minus trailing
//! filler words, is the event phrase.
//!
//! Lexicon (matched case-insensitively, longest phrase first):
//!
//! | label         | phrases                                                 |
//! |---------------|---------------------------------------------------------|
//! | `front_left`  | front left, front-left, left front                      |
//! | `front_right` | front right, front-right, right front                   |
//! | `front`       | directly in front, in front, directly front, straight ahead, ahead, front, center, centre |
//! | `left`        | left                                                    |
//! | `right`       | right                                                   |
//! | far           | far, distant, far away, far off, in the distance        |
//! | near          | near, nearby, close, close by, up close                 |
//! | moderate dist | mid-distance, moderate distance, middle distance        |
//! | slow          | slowly, slow, gradually, leisurely                      |
//! | moderate      | moderately, moderate speed/pace, steadily (default)     |
//! | fast          | quickly, quick, fast, rapidly, swiftly                  |
//! | instant       | instantly, suddenly, abruptly, in an instant            |
//!
//! `NN degrees` (or `NN°`) gives an explicit azimuth. On its own the number
//! is read in the crate's convention (0 = right, 90 = front, 180 = left).
//! Next to a side word it is folded onto that side, so "front left 70
//! degrees" becomes 110°.
//!
//! A clause is moving when it has `from X to Y`, or a motion verb together
//! with `from X`, `to Y` or a speed word. A clause starting with "another"
//! turns the previous source into an instant move ending at its direction.
//! A source with no direction phrase gets `direction: None`, which the
//! scene sampler fills uniformly at random.
//!
//! Scene size: "outdoors", "outside", "open air"; "large/big/spacious room,
//! hall, space..."; "small/tiny room, space..."; "moderate/medium-sized
//! room". Unmarked captions are moderate.

use std::sync::LazyLock;

use regex::Regex;

use crate::error::{Error, Result};
use crate::scene::{
    AttributeRecord, Direction, DirectionLabel, DistanceLabel, Movement, SceneSize,
    SourceAttributes, SpeedLabel,
};

/// Word budget for generated captions with up to two sources whose event
/// phrases are at most three words long.
pub const MAX_CAPTION_WORDS: usize = 30;

const LABEL: &str = r"front[\s-]+left|left[\s-]+front|front[\s-]+right|right[\s-]+front|directly\s+in\s+front|in\s+front|directly\s+front|straight\s+ahead|ahead|front|centre|center|left|right";

static DIRECTION_RE: LazyLock<Regex> = LazyLock::new(|| {
    let pattern = format!(
        r"\b(?:(?P<dist>far|distant|nearby|near|close|mid-distance)\s+)?(?:(?P<deg1>[0-9]+(?:\.[0-9]+)?)(?P<unit1>\s*(?:degrees?\b|deg\b|°))(?:\s+(?P<to1>to\s+)?(?:the\s+)?(?P<side1>{LABEL})\b)?|(?P<side2>{LABEL})\b(?:\s+(?:at\s+)?(?P<deg2>{num})\s*(?:degrees?\b|deg\b|°))?)",
        num = r"[0-9]+(?:\.[0-9]+)?",
    );
    Regex::new(&pattern).expect("direction pattern")
});

static PREP_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\b(from|towards|toward|to|into|at|on|in)\s+(?:the\s+)?(?:very\s+)?$")
        .expect("prep pattern")
});

static SPLIT_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?P<strong>\s*;\s*|\.\s+|\s*,?\s*\b(?:while|whereas|meanwhile|as|and\s+then|then)\b\s*)|(?P<weak>\s*,\s*|\s+and\s+)",
    )
    .expect("split pattern")
});

static MOTION_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"\b(?:mov(?:e|es|ed|ing)|travel\w*|pass(?:es|ed|ing)?|go(?:es|ing)?|walk\w*|run(?:s|ning)?|fl(?:y|ies|ying)|driv(?:e|es|ing)|roll\w*|sweep\w*|pan(?:s|ned|ning)?|shift\w*|drift\w*|glid\w*)\b",
    )
    .expect("motion pattern")
});

static FAR_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\b(?:far\s+away|far\s+off|in\s+the\s+distance|distant|far)\b").expect("far")
});
static NEAR_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b(?:close\s+by|up\s+close|nearby|near|close)\b").expect("near"));
static MID_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\b(?:mid-distance|moderate\s+distance|middle\s+distance)\b").expect("mid")
});

static SPEED_RES: LazyLock<[(SpeedLabel, Regex); 4]> = LazyLock::new(|| {
    [
        (
            SpeedLabel::Instant,
            Regex::new(r"\b(?:instantly|instantaneously|suddenly|abruptly|in\s+an\s+instant)\b")
                .expect("instant"),
        ),
        (
            SpeedLabel::Fast,
            Regex::new(r"\b(?:quickly|quick|fast|rapidly|swiftly|speedily)\b").expect("fast"),
        ),
        (
            SpeedLabel::Slow,
            Regex::new(r"\b(?:slowly|slow|gradually|leisurely)\b").expect("slow"),
        ),
        (
            SpeedLabel::Moderate,
            Regex::new(r"\b(?:moderately|moderate\s+(?:speed|pace)|steadily)\b").expect("moderate"),
        ),
    ]
});

static SCENE_RES: LazyLock<[(SceneSize, Regex); 4]> = LazyLock::new(|| {
    [
        (
            SceneSize::Outdoors,
            Regex::new(r"\b(?:outdoors|outdoor|outside|in\s+the\s+open\s+air|open[\s-]air)\b").expect("outdoors"),
        ),
        (
            SceneSize::Large,
            Regex::new(r"\b(?:in\s+)?(?:an?\s+)?(?:large|big|huge|spacious|vast)\s+(?:room|hall|space|venue|building|auditorium|church|arena|warehouse)\b")
                .expect("large"),
        ),
        (
            SceneSize::Small,
            Regex::new(r"\b(?:in\s+)?(?:an?\s+)?(?:small|tiny|little|cramped)\s+(?:room|space|office|closet|booth|cabin|chamber)\b")
                .expect("small"),
        ),
        (
            SceneSize::Moderate,
            Regex::new(r"\b(?:in\s+)?(?:an?\s+)?(?:moderate|medium|mid)(?:[\s-]sized)?\s+(?:room|space|hall)\b")
                .expect("moderate"),
        ),
    ]
});

/// Trailing words dropped from an event phrase.
const FILLER: &[&str] = &[
    "from",
    "to",
    "towards",
    "toward",
    "into",
    "at",
    "on",
    "in",
    "the",
    "of",
    "is",
    "are",
    "be",
    "can",
    "heard",
    "noticed",
    "audible",
    "coming",
    "comes",
    "come",
    "located",
    "positioned",
    "side",
    "very",
    "far",
    "away",
    "off",
    "close",
    "by",
    "nearby",
    "near",
    "up",
    "distant",
    "slowly",
    "quickly",
    "moderately",
    "fast",
    "rapidly",
    "swiftly",
    "instantly",
    "suddenly",
    "gradually",
    "steadily",
    "gently",
    "directly",
    "straight",
    "ending",
    "a",
    "moderate",
    "distance",
    "mid-distance",
    "speed",
    "pace",
];

#[derive(Clone, Copy, Debug, PartialEq)]
enum Prep {
    From,
    To,
    Other,
}

#[derive(Clone, Copy, Debug)]
struct Token {
    start: usize,
    end: usize,
    direction: Direction,
    distance: Option<DistanceLabel>,
    prep: Prep,
}

fn label_of(phrase: &str) -> DirectionLabel {
    let left = phrase.contains("left");
    let right = phrase.contains("right");
    let front = ["front", "ahead", "cent"]
        .iter()
        .any(|w| phrase.contains(w));
    match (left, right, front) {
        (true, _, true) => DirectionLabel::FrontLeft,
        (_, true, true) => DirectionLabel::FrontRight,
        (true, _, _) => DirectionLabel::Left,
        (_, true, _) => DirectionLabel::Right,
        _ => DirectionLabel::Front,
    }
}

fn distance_word(w: &str) -> DistanceLabel {
    match w {
        "far" | "distant" => DistanceLabel::Far,
        "near" | "nearby" | "close" => DistanceLabel::Near,
        _ => DistanceLabel::Moderate,
    }
}

/// Explicit angle from a degree value and an optional side word.
fn fold_angle(deg: f64, side: Option<DirectionLabel>) -> Option<f64> {
    if !(0.0..=180.0).contains(&deg) {
        return None;
    }
    Some(match side {
        Some(DirectionLabel::Left | DirectionLabel::FrontLeft) => deg.max(180.0 - deg),
        Some(DirectionLabel::Right | DirectionLabel::FrontRight) => deg.min(180.0 - deg),
        _ => deg,
    })
}

fn direction_tokens(lower: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut pos = 0;
    while let Some(c) = DIRECTION_RE.captures_at(lower, pos) {
        let whole = c.get(0).expect("group 0");
        let prep = match PREP_RE
            .captures(&lower[..whole.start()])
            .map(|p| p[1].to_string())
        {
            Some(p) if p == "from" => Prep::From,
            Some(p) if matches!(p.as_str(), "to" | "towards" | "toward" | "into") => Prep::To,
            _ => Prep::Other,
        };
        // "from 30 degrees to the right" is a path, not a qualified angle.
        let (side, end) = match (c.name("to1"), c.name("unit1")) {
            (Some(_), Some(u)) if prep == Prep::From => (None, u.end()),
            _ => (
                c.name("side1")
                    .or(c.name("side2"))
                    .map(|m| label_of(m.as_str())),
                whole.end(),
            ),
        };
        pos = end.max(whole.start() + 1);
        let deg = c
            .name("deg1")
            .or(c.name("deg2"))
            .and_then(|m| m.as_str().parse::<f64>().ok());
        let direction = match (deg.and_then(|d| fold_angle(d, side)), side) {
            (Some(a), _) => Direction::Angle(a),
            (None, Some(l)) => Direction::Label(l),
            (None, None) => continue,
        };
        out.push(Token {
            start: whole.start(),
            end,
            direction,
            distance: c.name("dist").map(|m| distance_word(m.as_str())),
            prep,
        });
    }
    out
}

static ENDING_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\bending\b").expect("ending"));

/// `lower` with every direction phrase blanked out, so distance adverbs
/// are only found outside them.
fn blank_tokens(lower: &str, tokens: &[Token]) -> String {
    let mut bytes = lower.as_bytes().to_vec();
    for t in tokens {
        bytes[t.start..t.end].fill(b' ');
    }
    String::from_utf8(bytes).unwrap_or_default()
}

fn adverb_distance(text: &str) -> Option<DistanceLabel> {
    [
        (DistanceLabel::Moderate, &*MID_RE),
        (DistanceLabel::Far, &*FAR_RE),
        (DistanceLabel::Near, &*NEAR_RE),
    ]
    .into_iter()
    .filter_map(|(l, re)| re.find(text).map(|m| (m.start(), l)))
    .min_by_key(|&(pos, _)| pos)
    .map(|(_, l)| l)
}

fn speed_of(lower: &str) -> Option<SpeedLabel> {
    SPEED_RES
        .iter()
        .find(|(_, re)| re.is_match(lower))
        .map(|(s, _)| *s)
}

fn event_phrase(original: &str) -> String {
    let mut words: Vec<&str> = original.split_whitespace().collect();
    while let Some(last) = words.last() {
        let w = last
            .trim_matches(|c: char| !c.is_alphanumeric())
            .to_ascii_lowercase();
        if w.is_empty() || FILLER.contains(&w.as_str()) || MOTION_RE.is_match(&w) {
            words.pop();
        } else {
            break;
        }
    }
    let text = words.join(" ");
    text.trim_matches(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .to_string()
}

#[derive(Debug)]
struct Clause<'a> {
    original: &'a str,
    lower: &'a str,
}

#[derive(Clone, Copy, PartialEq)]
enum Sep {
    Start,
    Strong,
    Weak,
}

fn split_clauses<'a>(original: &'a str, lower: &'a str) -> Vec<Clause<'a>> {
    let mut pieces: Vec<(Sep, usize, usize)> = Vec::new();
    let mut last = 0;
    let mut sep = Sep::Start;
    for c in SPLIT_RE.captures_iter(lower) {
        let m = c.get(0).expect("group 0");
        pieces.push((sep, last, m.start()));
        sep = if c.name("strong").is_some() {
            Sep::Strong
        } else {
            Sep::Weak
        };
        last = m.end();
    }
    pieces.push((sep, last, lower.len()));

    // Join weak splits unless the left part already names a direction and
    // the right part looks like a clause of its own.
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for (sep, a, b) in pieces {
        let piece = &lower[a..b];
        let join = sep == Sep::Weak
            && merged.last().is_some_and(|&(pa, pb)| {
                let right_complete =
                    !direction_tokens(piece).is_empty() || piece.split_whitespace().count() >= 2;
                direction_tokens(&lower[pa..pb]).is_empty() || !right_complete
            });
        match merged.last_mut() {
            Some(last) if join => last.1 = b,
            _ => merged.push((a, b)),
        }
    }
    merged
        .into_iter()
        .map(|(a, b)| Clause {
            original: original[a..b].trim_matches(is_clause_edge),
            lower: lower[a..b].trim_matches(is_clause_edge),
        })
        .filter(|c| !c.lower.is_empty())
        .collect()
}

fn is_clause_edge(c: char) -> bool {
    c.is_whitespace() || c == ',' || c == ';'
}

fn strip_another(original: &str) -> Option<&str> {
    let t = original.trim_start();
    let head = t.get(..7)?;
    (head.eq_ignore_ascii_case("another") && t[7..].starts_with(char::is_whitespace))
        .then(|| t[7..].trim_start())
}

struct ClauseReading {
    event: String,
    attrs: SourceAttributes,
}

fn read_clause(clause: &Clause<'_>) -> ClauseReading {
    let lower = clause.lower;
    let tokens = direction_tokens(lower);
    let motion = MOTION_RE.is_match(lower);
    let speed_word = speed_of(lower);
    let from = tokens.iter().position(|t| t.prep == Prep::From);
    let to = tokens
        .iter()
        .enumerate()
        .position(|(i, t)| t.prep == Prep::To && from.is_none_or(|f| i > f));
    let moving = (from.is_some() && to.is_some())
        || (motion && (from.is_some() || to.is_some() || speed_word.is_some()));

    let cut = tokens.first().map_or(lower.len(), |t| t.start);
    let event = event_phrase(&clause.original[..cut]);
    let blank = blank_tokens(lower, &tokens);

    let mut attrs = SourceAttributes {
        event: event.clone(),
        direction: None,
        distance: DistanceLabel::Moderate,
        movement: Movement::Still,
        end_direction: None,
        end_distance: None,
        speed: None,
    };
    if moving {
        let start = from.or_else(|| {
            to?;
            tokens.iter().position(|t| t.prep != Prep::To)
        });
        let start = start.filter(|&s| to.is_none_or(|e| s < e));
        // "ending" separates start and end distance adverbs.
        let mark = ENDING_RE.find(&blank).map(|m| m.start());
        let head = match start {
            Some(s) => tokens[s].start,
            None => mark.or(to.map(|e| tokens[e].start)).unwrap_or(lower.len()),
        };
        attrs.direction = start.map(|s| tokens[s].direction);
        attrs.distance = start
            .and_then(|s| tokens[s].distance)
            .or_else(|| adverb_distance(&blank[..head]))
            .unwrap_or(DistanceLabel::Moderate);
        if let Some(e) = to {
            attrs.end_direction = Some(tokens[e].direction);
            attrs.end_distance = tokens[e].distance;
        } else if let Some(m) = mark {
            attrs.end_distance = adverb_distance(&blank[m..]);
        }
        let speed = speed_word.unwrap_or(SpeedLabel::Moderate);
        attrs.movement = if speed == SpeedLabel::Instant {
            Movement::Instant
        } else {
            Movement::Moving
        };
        attrs.speed = Some(speed);
    } else if let Some(t) = tokens.first() {
        attrs.direction = Some(t.direction);
        attrs.distance = t
            .distance
            .or_else(|| adverb_distance(&blank))
            .unwrap_or(DistanceLabel::Moderate);
    } else {
        attrs.distance = adverb_distance(&blank).unwrap_or(DistanceLabel::Moderate);
    }
    ClauseReading { event, attrs }
}

fn scene_size(lower: &str) -> Option<(SceneSize, usize, usize)> {
    SCENE_RES
        .iter()
        .filter_map(|(s, re)| re.find(lower).map(|m| (*s, m.start(), m.end())))
        .min_by_key(|&(_, a, _)| a)
}

/// Parse a spatial caption into an attribute record.
pub fn parse_caption(text: &str) -> Result<AttributeRecord> {
    let fail = |reason: &str| Error::CaptionParse {
        text: text.to_string(),
        reason: reason.to_string(),
    };
    let mut original = text.trim().trim_end_matches(['.', '!', '?']).to_string();
    if original.is_empty() {
        return Err(fail("empty caption"));
    }
    let mut lower = original.to_ascii_lowercase();
    let size = match scene_size(&lower) {
        Some((s, a, b)) => {
            original.replace_range(a..b, "");
            lower.replace_range(a..b, "");
            s
        }
        None => SceneSize::Moderate,
    };

    let mut sources: Vec<SourceAttributes> = Vec::new();
    for clause in split_clauses(&original, &lower) {
        if let Some(rest) = strip_another(clause.original) {
            if let Some(prev) = sources.last_mut() {
                let lower_rest = rest.to_ascii_lowercase();
                let tokens = direction_tokens(&lower_rest);
                prev.movement = Movement::Instant;
                prev.speed = Some(SpeedLabel::Instant);
                prev.end_direction = tokens.first().map(|t| t.direction);
                prev.end_distance = tokens
                    .first()
                    .and_then(|t| t.distance)
                    .or_else(|| adverb_distance(&blank_tokens(&lower_rest, &tokens)));
                continue;
            }
        }
        let reading = read_clause(&clause);
        let has_direction =
            reading.attrs.direction.is_some() || reading.attrs.end_direction.is_some();
        let mut attrs = reading.attrs;
        if reading.event.is_empty() {
            // "... from the front left and front right": reuse the event.
            match sources.last() {
                Some(prev) if has_direction => attrs.event = prev.event.clone(),
                _ => continue,
            }
        }
        sources.push(attrs);
    }
    if sources.is_empty() {
        return Err(fail("no sound-event phrase found"));
    }
    Ok(AttributeRecord::new(size, sources))
}

fn direction_word(d: Direction) -> String {
    match d {
        Direction::Angle(a) => format!("{a}°"),
        Direction::Label(l) => match l {
            DirectionLabel::Left => "left",
            DirectionLabel::FrontLeft => "front left",
            DirectionLabel::Front => "front",
            DirectionLabel::FrontRight => "front right",
            DirectionLabel::Right => "right",
        }
        .to_string(),
    }
}

fn distance_prefix(d: Option<DistanceLabel>) -> &'static str {
    match d {
        Some(DistanceLabel::Far) => "far ",
        Some(DistanceLabel::Near) => "near ",
        Some(DistanceLabel::Moderate) => "mid-distance ",
        None => "",
    }
}

fn distance_adverb(d: DistanceLabel) -> &'static str {
    match d {
        DistanceLabel::Far => " far away",
        DistanceLabel::Near => " close by",
        DistanceLabel::Moderate => " at a moderate distance",
    }
}

/// Location phrase for a still source.
fn still_phrase(d: Direction, distance: DistanceLabel, single: bool) -> String {
    let dist = if distance == DistanceLabel::Moderate {
        ""
    } else {
        distance_prefix(Some(distance))
    };
    match d {
        Direction::Angle(_) => format!("at {dist}{}", direction_word(d)),
        Direction::Label(DirectionLabel::Front) => {
            if dist.is_empty() {
                "directly in front".to_string()
            } else {
                format!("{dist}front")
            }
        }
        Direction::Label(_) if single => {
            format!("on the {dist}{} side of the scene", direction_word(d))
        }
        Direction::Label(_) => format!("on the {dist}{}", direction_word(d)),
    }
}

fn speed_phrase(s: SpeedLabel) -> &'static str {
    match s {
        SpeedLabel::Slow => "slowly",
        SpeedLabel::Moderate => "at a moderate speed",
        SpeedLabel::Fast => "quickly",
        SpeedLabel::Instant => "instantly",
    }
}

/// A phrase whose last word ends in "s" or "ing" is taken to carry its
/// own verb ("a dog barks", "rain is falling").
fn has_verb(phrase: &str) -> bool {
    phrase
        .split_whitespace()
        .last()
        .is_some_and(|w| w.len() > 2 && (w.ends_with('s') || w.ends_with("ing")))
}

fn without_article(phrase: &str) -> String {
    let mut words = phrase.split_whitespace();
    let first = words.next().unwrap_or_default();
    if ["a", "an", "the"].contains(&first.to_ascii_lowercase().as_str()) {
        words.collect::<Vec<_>>().join(" ")
    } else {
        lower_first(phrase)
    }
}

fn lower_first(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_lowercase().chain(c).collect(),
        None => String::new(),
    }
}

fn upper_first(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn source_clause(src: &SourceAttributes, phrase: &str, single: bool) -> String {
    let end_dist = src.end_distance.filter(|&d| d != src.distance);
    match src.movement {
        Movement::Still => match src.direction {
            Some(d) => format!("{phrase} {}", still_phrase(d, src.distance, single)),
            None if src.distance == DistanceLabel::Moderate => phrase.to_string(),
            None => format!("{phrase}{}", distance_adverb(src.distance)),
        },
        Movement::Instant => {
            let first = match src.direction {
                Some(d) => format!(
                    "{phrase} at {}{}",
                    start_prefix(src.distance),
                    direction_word(d)
                ),
                None => format!("{phrase}{}", moderate_free_adverb(src.distance)),
            };
            let second = match src.end_direction {
                Some(d) => format!(
                    "another {} at {}{}",
                    without_article(phrase),
                    distance_prefix(end_dist),
                    direction_word(d)
                ),
                None => format!(
                    "another {}{}",
                    without_article(phrase),
                    end_dist.map_or("", distance_adverb)
                ),
            };
            format!("{first}, then {second}")
        }
        Movement::Moving => {
            let verb = src.direction.is_none() || src.end_direction.is_none() || !has_verb(phrase);
            let mut out = phrase.to_string();
            if verb {
                out.push_str(" moves");
            }
            match src.direction {
                Some(d) => out.push_str(&format!(
                    " from {}{}",
                    start_prefix(src.distance),
                    direction_word(d)
                )),
                None => out.push_str(moderate_free_adverb(src.distance)),
            }
            match (src.end_direction, end_dist) {
                (Some(d), _) => out.push_str(&format!(
                    " to {}{}",
                    distance_prefix(end_dist),
                    direction_word(d)
                )),
                (None, Some(e)) => out.push_str(&format!(" ending{}", distance_adverb(e))),
                (None, None) => {}
            }
            let speed = src.speed.unwrap_or(SpeedLabel::Moderate);
            out.push(' ');
            out.push_str(speed_phrase(speed));
            out
        }
    }
}

fn start_prefix(d: DistanceLabel) -> &'static str {
    if d == DistanceLabel::Moderate {
        ""
    } else {
        distance_prefix(Some(d))
    }
}

fn moderate_free_adverb(d: DistanceLabel) -> &'static str {
    if d == DistanceLabel::Moderate {
        ""
    } else {
        distance_adverb(d)
    }
}

fn scene_prefix(s: SceneSize) -> &'static str {
    match s {
        SceneSize::Outdoors => "Outdoors, ",
        SceneSize::Large => "Large hall, ",
        SceneSize::Small => "Small room, ",
        SceneSize::Moderate => "",
    }
}

/// Render a record as a caption. `event_phrases[i]` describes source `i`;
/// missing or blank entries fall back to the source's `event`. Labels left
/// at their defaults (moderate distance, moderate scene) are not spelled
/// out.
pub fn generate_caption<S: AsRef<str>>(record: &AttributeRecord, event_phrases: &[S]) -> String {
    let single = record.sources.len() == 1;
    let mut clauses = Vec::with_capacity(record.sources.len());
    for (i, src) in record.sources.iter().enumerate() {
        let given = event_phrases
            .get(i)
            .map(|p| p.as_ref().trim().trim_end_matches('.').trim());
        let phrase = match given {
            Some(p) if !p.is_empty() => p.to_string(),
            _ => src.event.clone(),
        };
        let phrase = if i > 0 && starts_with_article(&phrase) {
            lower_first(&phrase)
        } else {
            phrase
        };
        clauses.push(source_clause(src, &phrase, single));
    }
    let mut text = scene_prefix(record.scene_size).to_string();
    for (i, c) in clauses.iter().enumerate() {
        match i {
            0 if text.is_empty() => text.push_str(&upper_first(c)),
            0 => text.push_str(&lower_first_article(c)),
            i if i % 2 == 1 => text.push_str(&format!(", while {c}")),
            _ => text.push_str(&format!(", as {c}")),
        }
    }
    text.push('.');
    text
}

fn starts_with_article(s: &str) -> bool {
    let first = s
        .split_whitespace()
        .next()
        .unwrap_or_default()
        .to_ascii_lowercase();
    ["a", "an", "the"].contains(&first.as_str())
}

fn lower_first_article(s: &str) -> String {
    if starts_with_article(s) {
        lower_first(s)
    } else {
        s.to_string()
    }
}

/// True when two records carry the same labels. End distance is compared
/// after defaulting to the start distance, as the sampler does.
pub fn same_labels(a: &AttributeRecord, b: &AttributeRecord) -> bool {
    a.scene_size == b.scene_size
        && a.sources.len() == b.sources.len()
        && a.sources.iter().zip(&b.sources).all(|(x, y)| {
            let end = |s: &SourceAttributes| {
                (s.movement != Movement::Still).then(|| s.end_distance.unwrap_or(s.distance))
            };
            x.direction == y.direction
                && x.distance == y.distance
                && x.movement == y.movement
                && x.end_direction == y.end_direction
                && end(x) == end(y)
                && x.speed == y.speed
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(
        r: &AttributeRecord,
    ) -> Vec<(Option<DirectionLabel>, Movement, Option<DirectionLabel>)> {
        r.sources
            .iter()
            .map(|s| {
                (
                    s.direction.map(Direction::label),
                    s.movement,
                    s.end_direction.map(Direction::label),
                )
            })
            .collect()
    }

    #[test]
    fn still_and_moving_pair() {
        let r = parse_caption(
            "A dog barks in front while a guitar strums from right to front left moderately.",
        )
        .unwrap();
        assert_eq!(r.sources.len(), 2);
        assert!(r.sources[0].event.contains("dog"));
        assert!(r.sources[1].event.contains("guitar"));
        assert_eq!(
            labels(&r),
            vec![
                (Some(DirectionLabel::Front), Movement::Still, None),
                (
                    Some(DirectionLabel::Right),
                    Movement::Moving,
                    Some(DirectionLabel::FrontLeft)
                ),
            ]
        );
        assert_eq!(r.sources[1].speed, Some(SpeedLabel::Moderate));
    }

    #[test]
    fn then_another_is_instant() {
        let r = parse_caption("a dog barks at left, then another dog barks at right").unwrap();
        assert_eq!(r.sources.len(), 1);
        let s = &r.sources[0];
        assert_eq!(s.event, "a dog barks");
        assert_eq!(s.movement, Movement::Instant);
        assert_eq!(s.speed, Some(SpeedLabel::Instant));
        assert_eq!(s.direction, Some(Direction::Label(DirectionLabel::Left)));
        assert_eq!(
            s.end_direction,
            Some(Direction::Label(DirectionLabel::Right))
        );
    }

    #[test]
    fn empty_and_eventless_inputs_fail() {
        for t in ["", "   ", ".", "on the left", "from left to right"] {
            assert!(
                matches!(parse_caption(t), Err(Error::CaptionParse { .. })),
                "{t:?}"
            );
        }
    }

    #[test]
    fn table_examples_generate_verbatim() {
        let phone = AttributeRecord::new(
            SceneSize::Moderate,
            vec![SourceAttributes::still("cell phone", DirectionLabel::Right)],
        );
        assert_eq!(
            generate_caption(&phone, &["A cell phone is vibrating"]),
            "A cell phone is vibrating on the right side of the scene."
        );
        let trumpet = AttributeRecord::new(
            SceneSize::Moderate,
            vec![SourceAttributes::moving(
                "trumpet",
                DirectionLabel::Right,
                DirectionLabel::FrontLeft,
                SpeedLabel::Moderate,
            )],
        );
        assert_eq!(
            generate_caption(&trumpet, &["Trumpet sound"]),
            "Trumpet sound moves from right to front left at a moderate speed."
        );
    }

    #[test]
    fn instant_generation_uses_two_sources_phrasing() {
        let r = AttributeRecord::new(
            SceneSize::Moderate,
            vec![SourceAttributes::moving(
                "dog",
                DirectionLabel::Left,
                DirectionLabel::Right,
                SpeedLabel::Instant,
            )],
        );
        let text = generate_caption(&r, &["a dog barks"]);
        assert_eq!(
            text,
            "A dog barks at left, then another dog barks at right."
        );
        assert!(same_labels(&parse_caption(&text).unwrap(), &r));
    }

    #[test]
    fn degrees_are_explicit_angles() {
        let r = parse_caption("A bell rings at 30 degrees").unwrap();
        assert_eq!(r.sources[0].direction, Some(Direction::Angle(30.0)));
        let r = parse_caption("a dog barks at front left 70 degree").unwrap();
        assert_eq!(r.sources[0].direction, Some(Direction::Angle(110.0)));
        let r = parse_caption("A dog is barking at 15° to the front left").unwrap();
        assert_eq!(r.sources[0].direction, Some(Direction::Angle(165.0)));
        // Out of range numbers fall back to the side word.
        let r = parse_caption("a horn at 400 degrees right").unwrap();
        assert_eq!(
            r.sources[0].direction,
            Some(Direction::Label(DirectionLabel::Right))
        );
    }

    #[test]
    fn missing_direction_is_unspecified() {
        let r = parse_caption("A kettle whistles").unwrap();
        assert_eq!(r.sources[0].direction, None);
        assert!(r.sources[0].direction_unspecified());
    }

    #[test]
    fn scene_and_distance_words() {
        let r = parse_caption("Outdoors, a train passes far away on the left.").unwrap();
        assert_eq!(r.scene_size, SceneSize::Outdoors);
        assert_eq!(r.sources[0].distance, DistanceLabel::Far);
        assert_eq!(r.sources[0].movement, Movement::Still);
        let r = parse_caption("In a small room, a clock ticks close by on the right").unwrap();
        assert_eq!(r.scene_size, SceneSize::Small);
        assert_eq!(r.sources[0].distance, DistanceLabel::Near);
        assert_eq!(r.sources[0].event, "a clock ticks");
    }

    #[test]
    fn and_only_splits_complete_clauses() {
        let r = parse_caption(
            "The bus engine idles on the left and a woman walks from right to front slowly.",
        )
        .unwrap();
        assert_eq!(
            labels(&r),
            vec![
                (Some(DirectionLabel::Left), Movement::Still, None),
                (
                    Some(DirectionLabel::Right),
                    Movement::Moving,
                    Some(DirectionLabel::Front)
                ),
            ]
        );
        assert_eq!(r.sources[1].speed, Some(SpeedLabel::Slow));
        let r =
            parse_caption("Children laugh and whistle from directly in front to the left").unwrap();
        assert_eq!(r.sources.len(), 1);
        assert_eq!(r.sources[0].event, "Children laugh and whistle");
    }

    #[test]
    fn shared_event_for_listed_directions() {
        let r = parse_caption("Birds chirp softly from the front left and front right.").unwrap();
        assert_eq!(
            labels(&r),
            vec![
                (Some(DirectionLabel::FrontLeft), Movement::Still, None),
                (Some(DirectionLabel::FrontRight), Movement::Still, None),
            ]
        );
        assert_eq!(r.sources[1].event, r.sources[0].event);
    }

    #[test]
    fn parser_survives_odd_input() {
        for t in [
            "٣٠ degrees left",
            "🐕 barks at ½ degrees",
            "then another",
            "another dog at right",
            ", , and while as then",
            "99999999999999999999999 degrees",
            "a\u{0}b on the left",
            "ÀÉÎ from left to",
        ] {
            let _ = parse_caption(t);
        }
    }
}
