//! Participant-facing payloads. Nothing here may carry the full world
//! state, the archetype, or the true intention.

use serde::{Deserialize, Serialize};

use publicself_core::world::observe_observer_view;
use publicself_core::{CellContent, EpisodeRecord, FruitKind, Heading, ObserverRegion};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub episode_id: String,
    pub frame_count: usize,
}

impl EpisodeSummary {
    pub fn of(rec: &EpisodeRecord) -> Self {
        Self {
            episode_id: rec.meta.episode_id.clone(),
            frame_count: rec.frame_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibleFruit {
    pub row: usize,
    pub col: usize,
    pub kind: FruitKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibleActor {
    pub row: usize,
    pub col: usize,
    pub heading: Heading,
}

/// What the observer sees of one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramePayload {
    pub episode_id: String,
    pub t: usize,
    pub frame_count: usize,
    pub region: ObserverRegion,
    pub fruits: Vec<VisibleFruit>,
    /// Absent when the actor is outside the region.
    pub actor: Option<VisibleActor>,
    /// Set on the first frame in which the actor is visible.
    pub spawn_arrow: bool,
}

impl FramePayload {
    /// Caller guarantees `t < rec.frame_count()`.
    pub fn build(rec: &EpisodeRecord, t: usize) -> Self {
        let frame = &rec.frames[t];
        let region = rec.meta.region;
        let view = observe_observer_view(&frame.state, region);
        let fruits = view
            .contents
            .iter()
            .filter_map(|(c, content)| {
                let kind = match content {
                    CellContent::Apple => FruitKind::Apple,
                    CellContent::Pear => FruitKind::Pear,
                    CellContent::Empty => return None,
                };
                Some(VisibleFruit {
                    row: c.row,
                    col: c.col,
                    kind,
                })
            })
            .collect();
        let actor = view.actor_pose.map(|p| VisibleActor {
            row: p.cell.row,
            col: p.cell.col,
            heading: p.heading,
        });
        Self {
            episode_id: rec.meta.episode_id.clone(),
            t,
            frame_count: rec.frame_count(),
            region,
            fruits,
            actor,
            spawn_arrow: rec.first_visible_frame() == Some(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instructions {
    pub items: Vec<String>,
    pub slider: SliderLabels,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliderLabels {
    pub min: u32,
    pub max: u32,
    pub min_label: String,
    pub max_label: String,
    pub question: String,
}

fn count_phrase(n: usize, noun: &str) -> String {
    let words = ["no", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine"];
    let word = words.get(n).map(|w| w.to_string()).unwrap_or_else(|| n.to_string());
    if n == 1 {
        format!("{word} {noun}")
    } else {
        format!("{word} {noun}s")
    }
}

impl Instructions {
    pub fn for_counts(apples: usize, pears: usize) -> Self {
        Self {
            items: vec![
                format!(
                    "There is always one actor, {}, and {} on the field.",
                    count_phrase(apples, "apple"),
                    count_phrase(pears, "pear")
                ),
                "The actor wants either to get an apple or to get a pear, nothing else.".into(),
                "The actor does not know where the fruits are at the beginning of each episode.".into(),
                "The starting positions of the actor and the fruits are random and independent of what the actor wants."
                    .into(),
            ],
            slider: SliderLabels {
                min: 0,
                max: 100,
                min_label: "surely pear".into(),
                max_label: "surely apple".into(),
                question: "How likely is it that the actor wants an apple?".into(),
            },
        }
    }
}
