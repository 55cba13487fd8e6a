use std::collections::BTreeMap;
use std::sync::Arc;

use crafteam_core::clock::VirtualTime;
use crafteam_core::llm::LlmProvider;
use crafteam_core::persistence::EventStore;
use crafteam_core::session::{
    EventPayload, HumanAction, HumanActionError, Session, SessionError, SessionEvent, SessionState,
};
use crafteam_core::team::TeamConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::policy::{event_bindings, fill, human_neighbors, HumanPolicy};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub seed: u64,
    pub duration_secs: f64,
    pub time_scale: f64,
}

/// What the policy attempted besides the events it produced.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct PolicyReport {
    pub submitted: usize,
    pub rejected: usize,
    /// Actions refused before reaching the log, with the reason.
    pub dropped: Vec<String>,
}

struct Pending {
    due: VirtualTime,
    order: u64,
    template: Value,
    vars: BTreeMap<&'static str, Value>,
}

struct Driver<'a> {
    policy: &'a HumanPolicy,
    rng: ChaCha8Rng,
    neighbors: Vec<crafteam_core::team::MemberId>,
    neighbor_turn: usize,
    matches: Vec<usize>,
    fires: Vec<usize>,
    script_fires: usize,
    pending: Vec<Pending>,
    order: u64,
    report: PolicyReport,
}

impl Driver<'_> {
    fn common(&mut self, state: &SessionState, n: usize) -> BTreeMap<&'static str, Value> {
        let mut v = BTreeMap::new();
        let board = &state.board;
        if let Some(last) = board.ideas.last() {
            v.insert("latest_idea", Value::from(last.idea_id.as_str()));
        }
        if let Some(h) = state.human_id() {
            let unrated = board.ideas.iter().rev().find(|i| {
                &i.author != h && !board.evaluations.iter().any(|e| e.idea_id == i.idea_id && &e.evaluator == h)
            });
            if let Some(i) = unrated.or(board.ideas.last()) {
                v.insert("unrated_idea", Value::from(i.idea_id.as_str()));
            }
        }
        if !self.neighbors.is_empty() {
            let m = &self.neighbors[self.neighbor_turn % self.neighbors.len()];
            self.neighbor_turn += 1;
            v.insert("neighbor", Value::from(m.as_str()));
        }
        v.insert("score", Value::from(self.rng.random_range(3..=7)));
        v.insert("n", Value::from(n));
        v
    }

    fn observe(&mut self, events: &[SessionEvent], state: &SessionState) {
        for e in events {
            for (i, rule) in self.policy.rules.iter().enumerate() {
                if !rule.on.matches(e, state) {
                    continue;
                }
                self.matches[i] += 1;
                if rule.every.is_some_and(|k| !self.matches[i].is_multiple_of(k)) {
                    continue;
                }
                if rule.max_fires.is_some_and(|m| self.fires[i] >= m) {
                    continue;
                }
                self.fires[i] += 1;
                self.order += 1;
                self.pending.push(Pending {
                    due: e.at.plus_millis((rule.delay_secs * 1000.0).round() as u64),
                    order: self.order,
                    template: rule.respond.clone(),
                    vars: event_bindings(e),
                });
            }
        }
    }

    fn fire(&mut self, session: &mut Session, template: &Value, mut vars: BTreeMap<&'static str, Value>, n: usize) {
        for (k, v) in self.common(session.state(), n) {
            vars.entry(k).or_insert(v);
        }
        let action = match fill(template, &vars)
            .and_then(|v| serde_json::from_value::<HumanAction>(v).map_err(|e| e.to_string()))
        {
            Ok(a) => a,
            Err(e) => {
                self.report.dropped.push(e);
                return;
            }
        };
        self.report.submitted += 1;
        match session.submit_human_action(action) {
            Ok(events) => self.observe(&events, session.state()),
            Err(HumanActionError::Rejected { event, .. }) => {
                self.report.rejected += 1;
                self.observe(&[*event], session.state());
            }
            Err(HumanActionError::BadAction(e)) => self.report.dropped.push(e),
            Err(HumanActionError::Session(_)) => {}
        }
    }
}

/// Runs a session for `duration_secs` of virtual time with the human played
/// by `policy`, then seals it.
pub fn simulate(
    config: TeamConfig,
    policy: &HumanPolicy,
    provider: Arc<dyn LlmProvider>,
    opts: SimOptions,
    store: Option<Box<dyn EventStore>>,
) -> Result<(Session, PolicyReport), SessionError> {
    let neighbors = human_neighbors(&config);
    let mut session = Session::start(config, provider, opts.seed, opts.time_scale, Default::default(), store)?;
    let end = VirtualTime((opts.duration_secs.max(0.0) * 1000.0).round() as u64);
    let mut d = Driver {
        policy,
        rng: ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed_0f40),
        neighbors,
        neighbor_turn: 0,
        matches: vec![0; policy.rules.len()],
        fires: vec![0; policy.rules.len()],
        script_fires: 0,
        pending: Vec::new(),
        order: 0,
        report: PolicyReport::default(),
    };
    let mut script = policy.script.iter().peekable();
    while session.now() < end {
        let now = session.now();
        while let Some(step) = script.next_if(|s| VirtualTime((s.at * 1000.0).round() as u64) <= now) {
            d.script_fires += 1;
            let n = d.script_fires;
            d.fire(&mut session, &step.action, BTreeMap::new(), n);
        }
        loop {
            d.pending.sort_by_key(|p| (p.due, p.order));
            if d.pending.first().is_none_or(|p| p.due > now) {
                break;
            }
            let p = d.pending.remove(0);
            let n = p.order as usize;
            d.fire(&mut session, &p.template, p.vars, n);
        }
        let events = session.step()?;
        d.observe(&events, session.state());
        if events.iter().any(|e| matches!(e.payload, EventPayload::SessionEnded)) {
            break;
        }
    }
    session.end_session()?;
    Ok((session, d.report))
}
