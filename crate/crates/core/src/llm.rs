//! Attribute induction through an external chat-completion endpoint.
//!
//! The request is an OpenAI-style chat completion: the versioned prompt
//! asset as the system message and the caption (or image object list) as
//! the user message. The reply's first `{ ... }` block is read with the
//! numeric codes the prompt defines:
//!
//! | key                               | codes                                          |
//! |-----------------------------------|------------------------------------------------|
//! | `size`                            | 1 outdoors, 2 large, 3 moderate, 4 small       |
//! | `init_direction`, `end_direction` | 1 left, 2 front left, 3 front, 4 front right, 5 right; decimals are angles |
//! | `init_dis`, `end_dis`             | 1 far, 2 moderate, 3 near                      |
//! | `moving`                          | 0 still, 1 moving                              |
//! | `speed`                           | 1 slow, 2 moderate, 3 fast, 4 instant          |
//!
//! Any failure (network, timeout, HTTP status, unreadable JSON, a reply
//! saying nothing sounds) falls back to the rule-based parser and marks
//! the record `fallback`.

use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::caption::parse_caption;
use crate::error::{Error, Result};
use crate::scene::{
    AttributeRecord, Direction, DirectionLabel, DistanceLabel, Movement, SceneSize,
    SourceAttributes, SpeedLabel,
};

pub const CAPTION_PROMPT_V1: &str = include_str!("../assets/prompts/caption_inference.v1.txt");
pub const IMAGE_PROMPT_V1: &str = include_str!("../assets/prompts/image_inference.v1.txt");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PromptTemplate {
    #[serde(rename = "caption_inference.v1")]
    CaptionInferenceV1,
    #[serde(rename = "image_inference.v1")]
    ImageInferenceV1,
}

impl PromptTemplate {
    pub fn id(self) -> &'static str {
        match self {
            PromptTemplate::CaptionInferenceV1 => "caption_inference.v1",
            PromptTemplate::ImageInferenceV1 => "image_inference.v1",
        }
    }

    pub fn text(self) -> &'static str {
        match self {
            PromptTemplate::CaptionInferenceV1 => CAPTION_PROMPT_V1,
            PromptTemplate::ImageInferenceV1 => IMAGE_PROMPT_V1,
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        [
            PromptTemplate::CaptionInferenceV1,
            PromptTemplate::ImageInferenceV1,
        ]
        .into_iter()
        .find(|t| t.id() == id)
        .ok_or_else(|| Error::validation("prompt template", format!("unknown id {id:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LlmClientConfig {
    /// Full URL of the chat-completion route.
    pub endpoint: String,
    pub model: String,
    pub template: PromptTemplate,
    pub timeout_secs: f64,
    /// Sent as a bearer token when present. Never serialized.
    #[serde(skip)]
    pub api_key: Option<String>,
}

impl LlmClientConfig {
    pub fn new(
        endpoint: impl Into<String>,
        model: impl Into<String>,
        template: PromptTemplate,
    ) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            template,
            timeout_secs: 30.0,
            api_key: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let uri: ureq::http::Uri = self
            .endpoint
            .parse()
            .map_err(|e| Error::validation("endpoint", format!("{:?}: {e}", self.endpoint)))?;
        if !matches!(uri.scheme_str(), Some("http" | "https")) || uri.host().is_none() {
            return Err(Error::validation(
                "endpoint",
                format!("{:?} is not an http(s) URL", self.endpoint),
            ));
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(Error::validation(
                "timeout",
                format!("{} s must be positive", self.timeout_secs),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageObject {
    pub name: String,
    /// Normalized image position, (0, 0) top left, (1, 1) bottom right.
    pub position: [f64; 2],
}

/// Pre-extracted image content: detected objects and an optional caption.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ImageMeta {
    #[serde(default)]
    pub caption: Option<String>,
    pub objects: Vec<ImageObject>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LlmInput {
    Caption(String),
    Image(ImageMeta),
}

impl LlmInput {
    fn user_message(&self) -> String {
        match self {
            LlmInput::Caption(text) => text.clone(),
            LlmInput::Image(meta) => {
                let names: Vec<String> = meta
                    .objects
                    .iter()
                    .map(|o| format!("{:?}", o.name))
                    .collect();
                let positions: Vec<String> = meta
                    .objects
                    .iter()
                    .map(|o| format!("({}, {})", o.position[0], o.position[1]))
                    .collect();
                let mut msg = String::new();
                if let Some(c) = &meta.caption {
                    msg.push_str(&format!("Caption: {c:?}; "));
                }
                msg.push_str(&format!(
                    "Objects: [{}]; Position: [{}]",
                    names.join(", "),
                    positions.join(",")
                ));
                msg
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Induction {
    pub record: AttributeRecord,
    /// Caption returned by the model, when it wrote one.
    pub caption: Option<String>,
    /// Why the fallback was used; `None` when the model answered.
    pub failure: Option<String>,
}

/// Attributes from the endpoint, falling back to the rule-based route on
/// any failure. Errors only when the fallback fails too.
pub fn induce_via_llm(input: &LlmInput, config: &LlmClientConfig) -> Result<Induction> {
    match request_attributes(input, config) {
        Ok((record, caption)) => Ok(Induction {
            record,
            caption,
            failure: None,
        }),
        Err(e) => {
            log::warn!("LLM attribute induction failed, using rule-based fallback: {e}");
            let mut record = match input {
                LlmInput::Caption(text) => parse_caption(text)?,
                LlmInput::Image(meta) => image_fallback(meta)?,
            };
            record.fallback = true;
            Ok(Induction {
                record,
                caption: None,
                failure: Some(e.to_string()),
            })
        }
    }
}

/// One request, no fallback.
pub fn request_attributes(
    input: &LlmInput,
    config: &LlmClientConfig,
) -> Result<(AttributeRecord, Option<String>)> {
    config.validate()?;
    let body = json!({
        "model": config.model,
        "temperature": 0,
        "messages": [
            {"role": "system", "content": config.template.text()},
            {"role": "user", "content": input.user_message()},
        ],
    });
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
        .build()
        .into();
    let mut req = agent
        .post(&config.endpoint)
        .header("Content-Type", "application/json");
    if let Some(key) = &config.api_key {
        req = req.header("Authorization", format!("Bearer {key}"));
    }
    let mut resp = req
        .send(body.to_string())
        .map_err(|e| Error::Llm(e.to_string()))?;
    let text = resp
        .body_mut()
        .read_to_string()
        .map_err(|e| Error::Llm(e.to_string()))?;
    let reply: Value =
        serde_json::from_str(&text).map_err(|e| Error::Llm(format!("response body: {e}")))?;
    let content = reply
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Llm("response has no choices[0].message.content".into()))?;
    parse_llm_reply(content)
}

/// Read the attribute JSON out of a model reply.
pub fn parse_llm_reply(content: &str) -> Result<(AttributeRecord, Option<String>)> {
    let bad = |m: String| Error::Llm(m);
    let start = content
        .find('{')
        .ok_or_else(|| bad("reply has no JSON object".into()))?;
    let end = content
        .rfind('}')
        .filter(|&e| e > start)
        .ok_or_else(|| bad("reply has no JSON object".into()))?;
    // The prompt's own examples carry trailing commas; accept them.
    let trailing = Regex::new(r",\s*([}\]])").expect("trailing comma pattern");
    let cleaned = trailing.replace_all(&content[start..=end], "$1");
    let v: Value = serde_json::from_str(&cleaned).map_err(|e| bad(format!("reply JSON: {e}")))?;
    if v.get("sound").and_then(Value::as_f64) == Some(0.0) {
        return Err(bad("model reports no sound".into()));
    }
    let size = match v.get("size") {
        Some(x) => pick(SceneSize::ALL, code(x, "size")?, "size")?,
        None => SceneSize::Moderate,
    };
    let objects = v
        .get("objects")
        .and_then(Value::as_object)
        .filter(|o| !o.is_empty())
        .ok_or_else(|| bad("reply has no objects".into()))?;
    let sources = objects
        .iter()
        .map(|(name, o)| object_attributes(name, o.as_object().unwrap_or(&Map::new())))
        .collect::<Result<Vec<_>>>()?;
    let record = AttributeRecord::new(size, sources);
    record.validate().map_err(|e| bad(e.to_string()))?;
    let caption = v
        .get("one_sentence_brief_only_audio_caption")
        .and_then(Value::as_str)
        .map(str::to_string);
    Ok((record, caption))
}

fn code(v: &Value, key: &str) -> Result<f64> {
    v.as_f64()
        .or_else(|| v.as_str().and_then(|s| s.trim().parse().ok()))
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Llm(format!("{key}: {v} is not a number")))
}

fn pick<T: Copy>(all: &[T], x: f64, key: &str) -> Result<T> {
    let i = x.round();
    if x != i || i < 1.0 || i > all.len() as f64 {
        return Err(Error::Llm(format!("{key}: code {x} out of range")));
    }
    Ok(all[i as usize - 1])
}

/// Direction code: integers are labels, decimals are angles on the same
/// 1 (left) to 5 (right) scale.
fn direction_code(x: f64) -> Result<Direction> {
    if !(1.0..=5.0).contains(&x) {
        return Err(Error::Llm(format!("direction code {x} outside [1, 5]")));
    }
    if x.fract() == 0.0 {
        return Ok(Direction::Label(DirectionLabel::ALL[x as usize - 1]));
    }
    Ok(Direction::Angle(180.0 - (x - 1.0) * 45.0))
}

fn object_attributes(name: &str, o: &Map<String, Value>) -> Result<SourceAttributes> {
    let get = |k: &str| o.get(k).map(|v| code(v, k)).transpose();
    let direction = get("init_direction")?.map(direction_code).transpose()?;
    let distance = get("init_dis")?
        .map(|x| pick(DistanceLabel::ALL, x, "init_dis"))
        .transpose()?
        .unwrap_or(DistanceLabel::Moderate);
    let moving = get("moving")?.is_some_and(|x| x != 0.0);
    let mut attrs = SourceAttributes {
        event: name.to_string(),
        direction,
        distance,
        movement: Movement::Still,
        end_direction: None,
        end_distance: None,
        speed: None,
    };
    if moving {
        let speed = get("speed")?
            .map(|x| pick(SpeedLabel::ALL, x, "speed"))
            .transpose()?
            .unwrap_or(SpeedLabel::Moderate);
        attrs.movement = if speed == SpeedLabel::Instant {
            Movement::Instant
        } else {
            Movement::Moving
        };
        attrs.speed = Some(speed);
        attrs.end_direction = get("end_direction")?.map(direction_code).transpose()?;
        attrs.end_distance = get("end_dis")?
            .map(|x| pick(DistanceLabel::ALL, x, "end_dis"))
            .transpose()?;
    }
    Ok(attrs)
}

/// Deterministic reading of image metadata: each object is a still source
/// whose azimuth follows its horizontal position (x = 0 left, x = 1 right).
pub fn image_fallback(meta: &ImageMeta) -> Result<AttributeRecord> {
    if meta.objects.is_empty() {
        return match &meta.caption {
            Some(c) => parse_caption(c),
            None => Err(Error::validation(
                "image metadata",
                "no objects and no caption",
            )),
        };
    }
    let sources = meta
        .objects
        .iter()
        .map(|o| {
            let x = o.position[0];
            if !x.is_finite() {
                return Err(Error::validation(
                    "image metadata",
                    format!("{:?} has position {x}", o.name),
                ));
            }
            let angle = 180.0 * (1.0 - x.clamp(0.0, 1.0));
            Ok(SourceAttributes::still(
                o.name.clone(),
                Direction::Angle(angle),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AttributeRecord::new(SceneSize::Moderate, sources))
}
