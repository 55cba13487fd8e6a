//! Idea cards in Object / Function / Behavior / Structure form, lineage
//! through updates, and 7-point multi-rater evaluations.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::VirtualTime;
use crate::team::MemberId;

pub const SCORE_MIN: u8 = 1;
pub const SCORE_MAX: u8 = 7;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IdeaId(pub String);

impl IdeaId {
    pub fn new(id: impl Into<String>) -> Self {
        IdeaId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for IdeaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for IdeaId {
    fn from(s: &str) -> Self {
        IdeaId(s.to_string())
    }
}

/// The four-part content of an idea card.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ofbs {
    pub object: String,
    pub function: String,
    pub behavior: String,
    pub structure: String,
}

impl Ofbs {
    pub fn new(
        object: impl Into<String>,
        function: impl Into<String>,
        behavior: impl Into<String>,
        structure: impl Into<String>,
    ) -> Self {
        Ofbs {
            object: object.into(),
            function: function.into(),
            behavior: behavior.into(),
            structure: structure.into(),
        }
    }

    pub fn missing_field(&self) -> Option<&'static str> {
        [
            ("object", &self.object),
            ("function", &self.function),
            ("behavior", &self.behavior),
            ("structure", &self.structure),
        ]
        .into_iter()
        .find(|(_, v)| v.trim().is_empty())
        .map(|(k, _)| k)
    }

    pub fn text_length_chars(&self) -> usize {
        [&self.object, &self.function, &self.behavior, &self.structure]
            .iter()
            .map(|s| s.chars().count())
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Idea {
    pub idea_id: IdeaId,
    pub title: String,
    #[serde(flatten)]
    pub content: Ofbs,
    pub author: MemberId,
    pub parent_id: Option<IdeaId>,
    pub created_at: VirtualTime,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evaluation {
    pub idea_id: IdeaId,
    pub evaluator: MemberId,
    pub novelty: u8,
    pub completeness: u8,
    pub quality: u8,
    pub comment: Option<String>,
    pub created_at: VirtualTime,
}

impl Evaluation {
    pub fn scores(&self) -> [u8; 3] {
        [self.novelty, self.completeness, self.quality]
    }

    pub fn check_scores(&self) -> Result<(), IdeaError> {
        for s in self.scores() {
            if !(SCORE_MIN..=SCORE_MAX).contains(&s) {
                return Err(IdeaError::ScoreOutOfRange(s));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdeaError {
    #[error("idea is missing its {0} field")]
    IncompleteIdea(&'static str),
    #[error("unknown idea `{0}`")]
    UnknownIdea(IdeaId),
    #[error("score {0} outside 1..7")]
    ScoreOutOfRange(u8),
    #[error("timestamp {at} precedes the last board entry at {last}")]
    OutOfOrder { at: VirtualTime, last: VirtualTime },
}

/// A mean displayed to one decimal place, stored as exact tenths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MeanRating {
    pub tenths: u32,
}

impl MeanRating {
    /// Rounds `sum / count` half-up to one decimal using integer arithmetic.
    pub fn from_ratio(sum: u64, count: u64) -> Option<MeanRating> {
        if count == 0 {
            return None;
        }
        let tenths = (20 * sum + count) / (2 * count);
        Some(MeanRating {
            tenths: tenths as u32,
        })
    }

    pub fn as_f64(self) -> f64 {
        self.tenths as f64 / 10.0
    }
}

impl fmt::Display for MeanRating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.tenths / 10, self.tenths % 10)
    }
}

impl Serialize for MeanRating {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for MeanRating {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Ok(MeanRating {
            tenths: (v * 10.0).round() as u32,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdeaBoard {
    pub ideas: Vec<Idea>,
    pub evaluations: Vec<Evaluation>,
}

impl IdeaBoard {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.ideas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ideas.is_empty()
    }

    pub fn get(&self, id: &IdeaId) -> Option<&Idea> {
        self.ideas.iter().find(|i| &i.idea_id == id)
    }

    pub fn contains(&self, id: &IdeaId) -> bool {
        self.get(id).is_some()
    }

    /// Id the next appended idea receives.
    pub fn next_id(&self) -> IdeaId {
        IdeaId(format!("idea-{}", self.ideas.len() + 1))
    }

    fn check_time(&self, at: VirtualTime) -> Result<(), IdeaError> {
        if let Some(last) = self.ideas.last() {
            if at < last.created_at {
                return Err(IdeaError::OutOfOrder {
                    at,
                    last: last.created_at,
                });
            }
        }
        Ok(())
    }

    pub fn create_idea(
        &mut self,
        author: &MemberId,
        title: &str,
        content: Ofbs,
        at: VirtualTime,
    ) -> Result<IdeaId, IdeaError> {
        self.append(author, title, content, None, at)
    }

    /// Appends a new card derived from `parent_id`; the parent stays on the board.
    pub fn update_idea(
        &mut self,
        author: &MemberId,
        parent_id: &IdeaId,
        title: &str,
        content: Ofbs,
        at: VirtualTime,
    ) -> Result<IdeaId, IdeaError> {
        if !self.contains(parent_id) {
            return Err(IdeaError::UnknownIdea(parent_id.clone()));
        }
        self.append(author, title, content, Some(parent_id.clone()), at)
    }

    fn append(
        &mut self,
        author: &MemberId,
        title: &str,
        content: Ofbs,
        parent_id: Option<IdeaId>,
        at: VirtualTime,
    ) -> Result<IdeaId, IdeaError> {
        if let Some(field) = content.missing_field() {
            return Err(IdeaError::IncompleteIdea(field));
        }
        self.check_time(at)?;
        let idea_id = self.next_id();
        self.ideas.push(Idea {
            idea_id: idea_id.clone(),
            title: title.to_string(),
            content,
            author: author.clone(),
            parent_id,
            created_at: at,
        });
        Ok(idea_id)
    }

    /// Inserts a fully formed idea, as recorded in an event.
    pub fn insert(&mut self, idea: Idea) -> Result<(), IdeaError> {
        if let Some(field) = idea.content.missing_field() {
            return Err(IdeaError::IncompleteIdea(field));
        }
        if let Some(p) = &idea.parent_id {
            if !self.contains(p) {
                return Err(IdeaError::UnknownIdea(p.clone()));
            }
        }
        self.check_time(idea.created_at)?;
        self.ideas.push(idea);
        Ok(())
    }

    pub fn add_evaluation(&mut self, evaluation: Evaluation) -> Result<(), IdeaError> {
        evaluation.check_scores()?;
        if !self.contains(&evaluation.idea_id) {
            return Err(IdeaError::UnknownIdea(evaluation.idea_id.clone()));
        }
        self.evaluations.push(evaluation);
        Ok(())
    }

    pub fn evaluations_of<'a>(&'a self, id: &'a IdeaId) -> impl Iterator<Item = &'a Evaluation> {
        self.evaluations.iter().filter(move |e| &e.idea_id == id)
    }

    /// Pooled mean of all three criteria over every evaluation of the idea.
    pub fn mean_rating(&self, id: &IdeaId) -> Result<Option<MeanRating>, IdeaError> {
        if !self.contains(id) {
            return Err(IdeaError::UnknownIdea(id.clone()));
        }
        let (sum, count) = self
            .evaluations_of(id)
            .flat_map(|e| e.scores())
            .fold((0u64, 0u64), |(s, c), x| (s + x as u64, c + 1));
        Ok(MeanRating::from_ratio(sum, count))
    }

    /// Ancestry of `id`, root first, ending with `id` itself.
    pub fn lineage(&self, id: &IdeaId) -> Result<Vec<IdeaId>, IdeaError> {
        let mut chain = Vec::new();
        let mut cursor = Some(id.clone());
        while let Some(cur) = cursor {
            let idea = self
                .get(&cur)
                .ok_or_else(|| IdeaError::UnknownIdea(cur.clone()))?;
            chain.push(cur);
            if chain.len() > self.ideas.len() {
                break;
            }
            cursor = idea.parent_id.clone();
        }
        chain.reverse();
        Ok(chain)
    }
}
