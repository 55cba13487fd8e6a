//! Agent behaviour: the Plan → Act → Reflect → Wait loop, two-tier memory
//! and the profile prompt each agent carries for the whole session.

mod memory;
mod profile;
mod tick;

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use memory::{
    ActionKind, ActionRecord, LongTermMemory, ReflectionDelta, Relationship, RequestItem,
    ShortTermMemory, StrategyKey, RECENT_ACTIONS_CAP,
};
pub use profile::{build_profile_prompt, NeighborInfo, Relation, TeamContext};
pub use tick::{is_due, plan_options, tick, RuntimeSettings};

use crate::clock::VirtualTime;
use crate::idea::Evaluation;
use crate::session::{FeedbackRef, RequestRef};
use crate::team::{MemberId, RoleKind, TeamConfig};

/// Unscaled wait bounds in milliseconds.
pub const WAIT_MIN_MS: u64 = 30_000;
pub const WAIT_MAX_MS: u64 = 60_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum AgentPhase {
    Plan,
    Act,
    Reflect,
    Wait { until: VirtualTime },
}

impl AgentPhase {
    pub fn name(&self) -> &'static str {
        match self {
            AgentPhase::Plan => "plan",
            AgentPhase::Act => "act",
            AgentPhase::Reflect => "reflect",
            AgentPhase::Wait { .. } => "wait",
        }
    }
}

/// Whether `from → to` is one of the seven permitted transitions.
pub fn is_legal_transition(from: &AgentPhase, to: &AgentPhase) -> bool {
    use AgentPhase::*;
    matches!(
        (from, to),
        (Plan, Act)
            | (Plan, Wait { .. })
            | (Act, Reflect)
            | (Act, Wait { .. })
            | (Reflect, Wait { .. })
            | (Wait { .. }, Plan)
            | (Wait { .. }, Act)
    )
}

/// What an agent committed to do when it entered Act.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Intent {
    Role { role: RoleKind, rationale: String },
    FulfillRequest { request_ref: RequestRef },
    RespondFeedback { session_ref: FeedbackRef },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReflectTrigger {
    Evaluation { evaluation: Evaluation },
    Feedback { session_ref: FeedbackRef },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub member_id: MemberId,
    pub phase: AgentPhase,
    pub stm: ShortTermMemory,
    pub ltm: LongTermMemory,
    pub profile_prompt: String,
    pub reflect_triggers: VecDeque<ReflectTrigger>,
    pub intent: Option<Intent>,
    /// Position in this agent's seeded wait-duration stream.
    pub wait_draws: u64,
}

impl AgentState {
    /// Fresh state at session start: Plan phase, default strategies for
    /// the agent's roles and one relationship entry per neighbour.
    pub fn new(config: &TeamConfig, member_id: &MemberId) -> Self {
        let ctx = TeamContext::for_member(config, member_id);
        let spec = config.member(member_id).expect("agent is a member");
        let profile_prompt = build_profile_prompt(&spec.persona, &config.smm, &ctx);
        let mut ltm = LongTermMemory::default();
        ltm.action_strategies.insert(
            StrategyKey::Plan,
            StrategyKey::Plan.default_text().to_string(),
        );
        for role in &spec.roles {
            let key = StrategyKey::for_role(*role);
            ltm.action_strategies
                .insert(key, key.default_text().to_string());
        }
        for n in &ctx.neighbors {
            ltm.relationships.insert(
                n.member_id.clone(),
                Relationship {
                    belief: n.describe(),
                    interactions: 0,
                    responsiveness_note: String::new(),
                },
            );
        }
        AgentState {
            member_id: member_id.clone(),
            phase: AgentPhase::Plan,
            stm: ShortTermMemory::default(),
            ltm,
            profile_prompt,
            reflect_triggers: VecDeque::new(),
            intent: None,
            wait_draws: 0,
        }
    }

    pub fn enqueue_request(&mut self, item: RequestItem) {
        self.stm.pending_requests.push_back(item);
    }
}

/// The `draw`-th unscaled wait duration for `member`, uniform in 30–60 s.
pub fn wait_duration_ms(seed: u64, member: &MemberId, draw: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(member.as_str().as_bytes());
    h.update(draw.to_le_bytes());
    let d: [u8; 32] = h.finalize().into();
    let mut rng = ChaCha8Rng::from_seed(d);
    rng.random_range(WAIT_MIN_MS..=WAIT_MAX_MS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transition_table() {
        let w = AgentPhase::Wait {
            until: VirtualTime(0),
        };
        let all = [AgentPhase::Plan, AgentPhase::Act, AgentPhase::Reflect, w];
        let legal: Vec<(&str, &str)> = all
            .iter()
            .flat_map(|a| all.iter().map(move |b| (a, b)))
            .filter(|(a, b)| is_legal_transition(a, b))
            .map(|(a, b)| (a.name(), b.name()))
            .collect();
        assert_eq!(
            legal,
            vec![
                ("plan", "act"),
                ("plan", "wait"),
                ("act", "reflect"),
                ("act", "wait"),
                ("reflect", "wait"),
                ("wait", "plan"),
                ("wait", "act"),
            ]
        );
    }

    #[test]
    fn wait_durations_stay_in_bounds_and_repeat() {
        let m = MemberId::from("a1");
        for draw in 0..200 {
            let d = wait_duration_ms(42, &m, draw);
            assert!((WAIT_MIN_MS..=WAIT_MAX_MS).contains(&d));
            assert_eq!(d, wait_duration_ms(42, &m, draw));
        }
        assert_ne!(
            (0..10).map(|i| wait_duration_ms(1, &m, i)).collect::<Vec<_>>(),
            (0..10).map(|i| wait_duration_ms(2, &m, i)).collect::<Vec<_>>()
        );
    }
}
