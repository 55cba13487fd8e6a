use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::clock::VirtualTime;
use crate::session::{FeedbackRef, RequestRef, RequestableAction};
use crate::team::{MemberId, RoleKind};

pub const RECENT_ACTIONS_CAP: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    IdeaGeneration,
    IdeaEvaluation,
    Feedback,
    FeedbackResponse,
    Request,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub at: VirtualTime,
    pub kind: ActionKind,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestItem {
    pub request_ref: RequestRef,
    pub from: MemberId,
    pub action: RequestableAction,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShortTermMemory {
    pub recent_actions: VecDeque<ActionRecord>,
    pub pending_requests: VecDeque<RequestItem>,
    pub active_feedback: Option<FeedbackRef>,
}

impl ShortTermMemory {
    /// Appends to the action ring, evicting the oldest beyond five entries.
    pub fn record_action(&mut self, record: ActionRecord) {
        self.recent_actions.push_back(record);
        while self.recent_actions.len() > RECENT_ACTIONS_CAP {
            self.recent_actions.pop_front();
        }
    }

    pub fn remove_request(&mut self, request_ref: &RequestRef) -> Option<RequestItem> {
        let idx = self
            .pending_requests
            .iter()
            .position(|r| &r.request_ref == request_ref)?;
        self.pending_requests.remove(idx)
    }
}

/// Keys of the action-strategy map: every role plus the plan step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKey {
    Plan,
    IdeaGeneration,
    IdeaEvaluation,
    Feedback,
    Request,
}

impl StrategyKey {
    pub fn for_role(role: RoleKind) -> Self {
        match role {
            RoleKind::IdeaGeneration => StrategyKey::IdeaGeneration,
            RoleKind::IdeaEvaluation => StrategyKey::IdeaEvaluation,
            RoleKind::Feedback => StrategyKey::Feedback,
            RoleKind::Request => StrategyKey::Request,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKey::Plan => "plan",
            StrategyKey::IdeaGeneration => "idea_generation",
            StrategyKey::IdeaEvaluation => "idea_evaluation",
            StrategyKey::Feedback => "feedback",
            StrategyKey::Request => "request",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        if s == "plan" {
            return Some(StrategyKey::Plan);
        }
        RoleKind::parse(s).map(Self::for_role)
    }

    pub fn default_text(self) -> &'static str {
        match self {
            StrategyKey::Plan => {
                "Answer requests first. Otherwise pick the action that most helps the team \
                 right now, and wait when others are busy building on recent work."
            }
            StrategyKey::IdeaGeneration => {
                "Create new ideas for unexplored needs; develop an existing idea when \
                 evaluations or feedback point to a clear improvement."
            }
            StrategyKey::IdeaEvaluation => {
                "Rate ideas that have few evaluations; justify each score briefly."
            }
            StrategyKey::Feedback => {
                "Open with a strength, name one risk, suggest one concrete change, ask one question."
            }
            StrategyKey::Request => {
                "Ask connected teammates for the action their roles and recent activity suit best."
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relationship {
    pub belief: String,
    pub interactions: u32,
    pub responsiveness_note: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LongTermMemory {
    pub design_knowledge: Vec<String>,
    pub action_strategies: BTreeMap<StrategyKey, String>,
    pub relationships: BTreeMap<MemberId, Relationship>,
}

/// Memory change produced by one reflection.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReflectionDelta {
    pub new_knowledge: Vec<String>,
    pub strategy_revisions: BTreeMap<StrategyKey, String>,
    pub relationship_updates: BTreeMap<MemberId, String>,
    /// Adjacent members whose interaction counters advance.
    #[serde(default)]
    pub interacted_with: Vec<MemberId>,
}

impl ReflectionDelta {
    pub fn is_empty(&self) -> bool {
        self.new_knowledge.is_empty()
            && self.strategy_revisions.is_empty()
            && self.relationship_updates.is_empty()
            && self.interacted_with.is_empty()
    }
}

impl LongTermMemory {
    /// Applies `delta` in one step. Relationship entries are only upserted for
    /// members that already have one (the adjacent members).
    pub fn apply(&mut self, delta: &ReflectionDelta, at: VirtualTime) {
        self.design_knowledge
            .extend(delta.new_knowledge.iter().cloned());
        for (k, v) in &delta.strategy_revisions {
            self.action_strategies.insert(*k, v.clone());
        }
        for (m, text) in &delta.relationship_updates {
            if let Some(r) = self.relationships.get_mut(m) {
                r.belief = text.clone();
            }
        }
        for m in &delta.interacted_with {
            if let Some(r) = self.relationships.get_mut(m) {
                r.interactions += 1;
                r.responsiveness_note =
                    format!("{} interaction(s); most recent at {at}", r.interactions);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(i: u64) -> ActionRecord {
        ActionRecord {
            at: VirtualTime(i),
            kind: ActionKind::IdeaGeneration,
            summary: format!("a{i}"),
        }
    }

    #[test]
    fn ring_keeps_five_newest() {
        let mut stm = ShortTermMemory::default();
        stm.record_action(rec(0));
        assert_eq!(stm.recent_actions.len(), 1);
        for i in 1..6 {
            stm.record_action(rec(i));
        }
        assert_eq!(stm.recent_actions.len(), 5);
        let ats: Vec<u64> = stm.recent_actions.iter().map(|r| r.at.0).collect();
        assert_eq!(ats, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn empty_delta_is_a_no_op() {
        let mut ltm = LongTermMemory::default();
        ltm.relationships.insert("a2".into(), Relationship::default());
        let before = ltm.clone();
        ltm.apply(&ReflectionDelta::default(), VirtualTime(9));
        assert_eq!(ltm, before);
    }

    #[test]
    fn delta_never_adds_unknown_relationships() {
        let mut ltm = LongTermMemory::default();
        ltm.relationships.insert("a2".into(), Relationship::default());
        let mut d = ReflectionDelta::default();
        d.relationship_updates.insert("a9".into(), "stranger".into());
        d.relationship_updates.insert("a2".into(), "reliable".into());
        d.interacted_with.push("a2".into());
        d.strategy_revisions.insert(StrategyKey::Feedback, "be brief".into());
        d.new_knowledge.push("users want privacy".into());
        ltm.apply(&d, VirtualTime(1000));
        assert_eq!(ltm.relationships.len(), 1);
        assert_eq!(ltm.relationships[&MemberId::from("a2")].belief, "reliable");
        assert_eq!(ltm.relationships[&MemberId::from("a2")].interactions, 1);
        assert_eq!(ltm.action_strategies[&StrategyKey::Feedback], "be brief");
        assert_eq!(ltm.design_knowledge, vec!["users want privacy"]);
    }

    #[test]
    fn strategy_keys_parse() {
        assert_eq!(StrategyKey::parse("plan"), Some(StrategyKey::Plan));
        assert_eq!(StrategyKey::parse("request"), Some(StrategyKey::Request));
        assert_eq!(StrategyKey::parse("nap"), None);
    }
}
