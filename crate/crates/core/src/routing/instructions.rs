use super::chunk::{display_angle, display_distance, RouteSegment};
use super::landmarks::LandmarkRef;
use super::RoutingError;
use crate::spatial::Side;
use serde::{Deserialize, Serialize};

/// Words that must never reach the walker.
pub const CARDINAL_TOKENS: &[&str] =
    &["north", "south", "east", "west", "northeast", "northwest", "southeast", "southwest"];

/// True if any whole word of `text` is a compass direction.
pub fn contains_cardinal(text: &str) -> bool {
    text.split(|c: char| !c.is_alphanumeric())
        .any(|w| CARDINAL_TOKENS.iter().any(|t| w.eq_ignore_ascii_case(t)))
}

/// Instruction wording. Placeholders: `{distance}`, `{direction}`,
/// `{landmarks}`, `{category}`, `{side}`, `{goal}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstructionTemplates {
    pub forward: String,
    pub forward_then_turn: String,
    pub landmarks: String,
    pub landmark: String,
    pub landmark_join: String,
    pub arrive_side: String,
    pub arrive: String,
    /// Cap on landmarks mentioned per walking line.
    pub max_landmarks_per_line: usize,
}

impl Default for InstructionTemplates {
    fn default() -> Self {
        Self {
            forward: "Walk straight ahead for about {distance} meters.".into(),
            forward_then_turn: "Walk straight ahead for about {distance} meters and then turn {direction}.".into(),
            landmarks: " You will pass {landmarks}.".into(),
            landmark: "{category} on your {side}".into(),
            landmark_join: " and ".into(),
            arrive_side: "You have arrived. {goal} is on your {side}.".into(),
            arrive: "You have arrived at {goal}.".into(),
            max_landmarks_per_line: 2,
        }
    }
}

impl InstructionTemplates {
    pub fn validate(&self) -> Result<(), RoutingError> {
        for t in [
            &self.forward,
            &self.forward_then_turn,
            &self.landmarks,
            &self.landmark,
            &self.landmark_join,
            &self.arrive_side,
            &self.arrive,
        ] {
            if contains_cardinal(t) {
                return Err(RoutingError::InvalidParameter(format!("template uses a compass direction: {t:?}")));
            }
        }
        Ok(())
    }
}

fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_owned();
    for (k, v) in vars {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

/// How the final line describes the goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalDescription {
    pub label: String,
    /// None when the goal is on the walked line itself.
    pub side: Option<Side>,
}

/// Structured route summary for an optional language-model renderer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptPayload {
    pub system: String,
    pub steps: Vec<PayloadStep>,
    pub landmarks: Vec<LandmarkRef>,
    pub goal: GoalDescription,
    pub map_image: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PayloadStep {
    Forward { meters: String },
    Turn { direction: Side, degrees: f64 },
}

pub const PROMPT_SYSTEM: &str = "Rewrite these steps as short spoken directions for a shopper. \
Use only body-relative words such as left, right, ahead and behind. \
Never use compass directions. Mention each landmark once, on the side given.";

/// Deterministic line-per-step rendering. Each walking leg names up to
/// `max_landmarks_per_line` landmarks assigned to it.
pub fn render_instructions(
    segments: &[RouteSegment],
    landmarks: &[LandmarkRef],
    goal: &GoalDescription,
    templates: &InstructionTemplates,
) -> Vec<String> {
    let mut lines = Vec::new();
    let mut i = 0;
    while i < segments.len() {
        match segments[i] {
            RouteSegment::Forward { distance } => {
                let d = display_distance(distance);
                let mut line = match segments.get(i + 1) {
                    Some(RouteSegment::Turn { direction, .. }) => {
                        i += 1;
                        fill(&templates.forward_then_turn, &[("distance", &d), ("direction", direction.as_str())])
                    }
                    _ => fill(&templates.forward, &[("distance", &d)]),
                };
                let seg = if segments[i].is_turn() { i - 1 } else { i };
                let named: Vec<String> = landmarks
                    .iter()
                    .filter(|l| l.segment == seg && !contains_cardinal(&l.category))
                    .take(templates.max_landmarks_per_line)
                    .map(|l| fill(&templates.landmark, &[("category", &l.category), ("side", l.side.as_str())]))
                    .collect();
                if !named.is_empty() {
                    line.push_str(&fill(&templates.landmarks, &[("landmarks", &named.join(&templates.landmark_join))]));
                }
                lines.push(line);
            }
            RouteSegment::Turn { direction, .. } => {
                lines.push(fill(&templates.forward_then_turn, &[("distance", "0"), ("direction", direction.as_str())]));
            }
        }
        i += 1;
    }
    lines.push(match goal.side {
        Some(s) => fill(&templates.arrive_side, &[("goal", &goal.label), ("side", s.as_str())]),
        None => fill(&templates.arrive, &[("goal", &goal.label)]),
    });
    lines
}

pub fn prompt_payload(
    segments: &[RouteSegment],
    landmarks: &[LandmarkRef],
    goal: &GoalDescription,
    map_image: &str,
) -> PromptPayload {
    let steps = segments
        .iter()
        .map(|s| match *s {
            RouteSegment::Forward { distance } => PayloadStep::Forward { meters: display_distance(distance) },
            RouteSegment::Turn { direction, angle } => PayloadStep::Turn { direction, degrees: display_angle(angle) },
        })
        .collect();
    PromptPayload {
        system: PROMPT_SYSTEM.into(),
        steps,
        landmarks: landmarks.to_vec(),
        goal: goal.clone(),
        map_image: map_image.into(),
    }
}
