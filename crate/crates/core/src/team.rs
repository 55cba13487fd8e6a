//! Team formation model: members, personas, role sets, the structure graph
//! and the shared mental model, plus the structural queries the rest of the
//! engine relies on.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const MIN_TEAM_SIZE: usize = 3;
pub const MAX_TEAM_SIZE: usize = 6;

/// The four role-permitted actions a member can be assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleKind {
    IdeaGeneration,
    IdeaEvaluation,
    Feedback,
    Request,
}

impl RoleKind {
    pub const ALL: [RoleKind; 4] = [
        RoleKind::IdeaGeneration,
        RoleKind::IdeaEvaluation,
        RoleKind::Feedback,
        RoleKind::Request,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RoleKind::IdeaGeneration => "idea_generation",
            RoleKind::IdeaEvaluation => "idea_evaluation",
            RoleKind::Feedback => "feedback",
            RoleKind::Request => "request",
        }
    }

    pub fn parse(s: &str) -> Option<RoleKind> {
        RoleKind::ALL.into_iter().find(|r| r.as_str() == s)
    }

    /// Roles that can only be exercised towards a directly connected member.
    pub fn requires_adjacency(self) -> bool {
        matches!(self, RoleKind::Feedback | RoleKind::Request)
    }

    pub fn label(self) -> &'static str {
        match self {
            RoleKind::IdeaGeneration => "Idea Generation",
            RoleKind::IdeaEvaluation => "Idea Evaluation",
            RoleKind::Feedback => "Feedback",
            RoleKind::Request => "Request",
        }
    }
}

impl fmt::Display for RoleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MemberId(pub String);

impl MemberId {
    pub fn new(id: impl Into<String>) -> Self {
        MemberId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for MemberId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for MemberId {
    fn from(s: &str) -> Self {
        MemberId(s.to_string())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SocialIdentity {
    pub age: Option<i64>,
    pub gender: Option<String>,
    pub education: Option<String>,
    pub occupation: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PersonalIdentity {
    pub personality: Option<String>,
    pub skills: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LifeContext {
    pub work_style: Option<String>,
    pub likes: Option<String>,
    pub dislikes: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Persona {
    pub name: String,
    #[serde(default)]
    pub social: SocialIdentity,
    #[serde(default)]
    pub personal: PersonalIdentity,
    #[serde(default)]
    pub life_context: LifeContext,
}

/// Filled / total attribute counts for one persona section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Completion {
    pub filled: usize,
    pub total: usize,
}

fn filled(s: &Option<String>) -> bool {
    s.as_deref().is_some_and(|v| !v.trim().is_empty())
}

impl Persona {
    pub fn named(name: impl Into<String>) -> Self {
        Persona {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn social_completion(&self) -> Completion {
        let s = &self.social;
        let n = [
            s.age.is_some(),
            filled(&s.gender),
            filled(&s.education),
            filled(&s.occupation),
        ];
        Completion {
            filled: n.iter().filter(|b| **b).count(),
            total: n.len(),
        }
    }

    pub fn personal_completion(&self) -> Completion {
        let p = &self.personal;
        let n = [filled(&p.personality), filled(&p.skills)];
        Completion {
            filled: n.iter().filter(|b| **b).count(),
            total: n.len(),
        }
    }

    pub fn life_context_completion(&self) -> Completion {
        let l = &self.life_context;
        let n = [filled(&l.work_style), filled(&l.likes), filled(&l.dislikes)];
        Completion {
            filled: n.iter().filter(|b| **b).count(),
            total: n.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemberKind {
    Human,
    Agent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberSpec {
    pub member_id: MemberId,
    pub kind: MemberKind,
    pub persona: Persona,
    pub roles: BTreeSet<RoleKind>,
}

impl MemberSpec {
    pub fn has_role(&self, role: RoleKind) -> bool {
        self.roles.contains(&role)
    }

    pub fn is_human(&self) -> bool {
        self.kind == MemberKind::Human
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    /// Directed: `a` is the superior of `b`.
    Hierarchical,
    Peer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureEdge {
    pub a: MemberId,
    pub b: MemberId,
    pub kind: EdgeKind,
}

impl StructureEdge {
    pub fn peer(a: impl Into<MemberId>, b: impl Into<MemberId>) -> Self {
        StructureEdge {
            a: a.into(),
            b: b.into(),
            kind: EdgeKind::Peer,
        }
    }

    pub fn superior(a: impl Into<MemberId>, b: impl Into<MemberId>) -> Self {
        StructureEdge {
            a: a.into(),
            b: b.into(),
            kind: EdgeKind::Hierarchical,
        }
    }

    pub fn joins(&self, x: &MemberId, y: &MemberId) -> bool {
        (&self.a == x && &self.b == y) || (&self.a == y && &self.b == x)
    }

    pub fn other(&self, m: &MemberId) -> Option<&MemberId> {
        if &self.a == m {
            Some(&self.b)
        } else if &self.b == m {
            Some(&self.a)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedMentalModel {
    #[serde(default)]
    pub task_model: String,
    #[serde(default)]
    pub team_model: String,
}

impl SharedMentalModel {
    pub fn text_length_chars(&self) -> usize {
        self.task_model.chars().count() + self.team_model.chars().count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamConfig {
    pub team_name: String,
    pub topic: String,
    pub members: Vec<MemberSpec>,
    #[serde(default)]
    pub edges: Vec<StructureEdge>,
    #[serde(default)]
    pub smm: SharedMentalModel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Violation {
    TeamTooSmall { size: usize },
    TeamTooLarge { size: usize },
    HumanCount { count: usize },
    NoGenerator,
    EmptyRoles { member: MemberId },
    EmptyName { member: MemberId },
    InvalidAge { member: MemberId, age: i64 },
    DuplicateMember { member: MemberId },
    SelfEdge { member: MemberId },
    DuplicateEdge { a: MemberId, b: MemberId },
    UnknownEdgeEndpoint { member: MemberId },
    IsolatedMember { member: MemberId },
}

impl Violation {
    pub fn code(&self) -> &'static str {
        match self {
            Violation::TeamTooSmall { .. } => "team_too_small",
            Violation::TeamTooLarge { .. } => "team_too_large",
            Violation::HumanCount { .. } => "human_count",
            Violation::NoGenerator => "no_generator",
            Violation::EmptyRoles { .. } => "empty_roles",
            Violation::EmptyName { .. } => "empty_name",
            Violation::InvalidAge { .. } => "invalid_age",
            Violation::DuplicateMember { .. } => "duplicate_member",
            Violation::SelfEdge { .. } => "self_edge",
            Violation::DuplicateEdge { .. } => "duplicate_edge",
            Violation::UnknownEdgeEndpoint { .. } => "unknown_edge_endpoint",
            Violation::IsolatedMember { .. } => "isolated_member",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, code: &str) -> bool {
        self.violations.iter().any(|v| v.code() == code)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        let codes: Vec<_> = self.violations.iter().map(|v| v.code()).collect();
        write!(f, "{}", codes.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TeamError {
    #[error("unknown member `{0}`")]
    UnknownMember(MemberId),
    #[error("hierarchical edges form a directed cycle")]
    CyclicHierarchy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureClass {
    Flat,
    SingleTier,
    MultiTier,
}

/// Checks every formation rule and returns all violations found.
pub fn validate_team(config: &TeamConfig) -> ValidationReport {
    let mut violations = Vec::new();
    let size = config.members.len();
    if size < MIN_TEAM_SIZE {
        violations.push(Violation::TeamTooSmall { size });
    }
    if size > MAX_TEAM_SIZE {
        violations.push(Violation::TeamTooLarge { size });
    }
    let humans = config.members.iter().filter(|m| m.is_human()).count();
    if humans != 1 {
        violations.push(Violation::HumanCount { count: humans });
    }
    if !config
        .members
        .iter()
        .any(|m| m.has_role(RoleKind::IdeaGeneration))
    {
        violations.push(Violation::NoGenerator);
    }

    let mut seen = BTreeSet::new();
    for m in &config.members {
        if !seen.insert(&m.member_id) {
            violations.push(Violation::DuplicateMember {
                member: m.member_id.clone(),
            });
        }
        if m.roles.is_empty() {
            violations.push(Violation::EmptyRoles {
                member: m.member_id.clone(),
            });
        }
        if m.persona.name.trim().is_empty() {
            violations.push(Violation::EmptyName {
                member: m.member_id.clone(),
            });
        }
        if let Some(age) = m.persona.social.age {
            if age <= 0 {
                violations.push(Violation::InvalidAge {
                    member: m.member_id.clone(),
                    age,
                });
            }
        }
    }

    let mut pairs = BTreeSet::new();
    for e in &config.edges {
        if e.a == e.b {
            violations.push(Violation::SelfEdge {
                member: e.a.clone(),
            });
            continue;
        }
        for end in [&e.a, &e.b] {
            if !seen.contains(end) {
                violations.push(Violation::UnknownEdgeEndpoint {
                    member: end.clone(),
                });
            }
        }
        let key = if e.a < e.b {
            (e.a.clone(), e.b.clone())
        } else {
            (e.b.clone(), e.a.clone())
        };
        if !pairs.insert(key) {
            violations.push(Violation::DuplicateEdge {
                a: e.a.clone(),
                b: e.b.clone(),
            });
        }
    }

    for m in &config.members {
        let adjacency_only = !m.roles.is_empty() && m.roles.iter().all(|r| r.requires_adjacency());
        let isolated = !config
            .edges
            .iter()
            .any(|e| e.a != e.b && (e.a == m.member_id || e.b == m.member_id));
        if adjacency_only && isolated {
            violations.push(Violation::IsolatedMember {
                member: m.member_id.clone(),
            });
        }
    }

    ValidationReport { violations }
}

impl TeamConfig {
    pub fn member(&self, id: &MemberId) -> Option<&MemberSpec> {
        self.members.iter().find(|m| &m.member_id == id)
    }

    pub fn human(&self) -> Option<&MemberSpec> {
        self.members.iter().find(|m| m.is_human())
    }

    pub fn agents(&self) -> impl Iterator<Item = &MemberSpec> {
        self.members.iter().filter(|m| !m.is_human())
    }

    pub fn is_member(&self, id: &MemberId) -> bool {
        self.member(id).is_some()
    }

    pub fn edge_between(&self, a: &MemberId, b: &MemberId) -> Option<&StructureEdge> {
        if a == b {
            return None;
        }
        self.edges.iter().find(|e| e.joins(a, b))
    }

    /// Adjacent members of `id` in member-id order.
    pub fn neighbors(&self, id: &MemberId) -> Vec<MemberId> {
        let mut out: Vec<MemberId> = self
            .edges
            .iter()
            .filter(|e| e.a != e.b)
            .filter_map(|e| e.other(id).cloned())
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn adjacent(&self, a: &MemberId, b: &MemberId) -> bool {
        self.edge_between(a, b).is_some()
    }

    /// Canonical JSON used for digests and persistence.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("team config serializes")
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

/// True iff an edge of either kind joins `a` and `b`.
pub fn can_interact(config: &TeamConfig, a: &MemberId, b: &MemberId) -> Result<bool, TeamError> {
    for m in [a, b] {
        if !config.is_member(m) {
            return Err(TeamError::UnknownMember(m.clone()));
        }
    }
    Ok(config.adjacent(a, b))
}

/// Longest directed superior chain over hierarchical edges, in edges.
pub fn longest_superior_chain(config: &TeamConfig) -> Result<usize, TeamError> {
    let mut children: BTreeMap<&MemberId, Vec<&MemberId>> = BTreeMap::new();
    let mut nodes: BTreeSet<&MemberId> = BTreeSet::new();
    for e in config.edges.iter().filter(|e| e.kind == EdgeKind::Hierarchical) {
        children.entry(&e.a).or_default().push(&e.b);
        nodes.insert(&e.a);
        nodes.insert(&e.b);
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done(usize),
    }

    fn visit<'a>(
        node: &'a MemberId,
        children: &BTreeMap<&'a MemberId, Vec<&'a MemberId>>,
        marks: &mut BTreeMap<&'a MemberId, Mark>,
    ) -> Result<usize, TeamError> {
        match marks.get(node) {
            Some(Mark::Active) => return Err(TeamError::CyclicHierarchy),
            Some(Mark::Done(d)) => return Ok(*d),
            None => {}
        }
        marks.insert(node, Mark::Active);
        let mut best = 0;
        if let Some(kids) = children.get(node) {
            for k in kids {
                best = best.max(1 + visit(k, children, marks)?);
            }
        }
        marks.insert(node, Mark::Done(best));
        Ok(best)
    }

    let mut marks = BTreeMap::new();
    let mut longest = 0;
    for n in nodes {
        longest = longest.max(visit(n, &children, &mut marks)?);
    }
    Ok(longest)
}

pub fn classify_structure(config: &TeamConfig) -> Result<StructureClass, TeamError> {
    Ok(match longest_superior_chain(config)? {
        0 => StructureClass::Flat,
        1 => StructureClass::SingleTier,
        _ => StructureClass::MultiTier,
    })
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn member(id: &str, kind: MemberKind, roles: &[RoleKind]) -> MemberSpec {
        MemberSpec {
            member_id: MemberId::new(id),
            kind,
            persona: Persona::named(id.to_uppercase()),
            roles: roles.iter().copied().collect(),
        }
    }

    pub fn all_roles() -> Vec<RoleKind> {
        RoleKind::ALL.to_vec()
    }

    /// Human `h` at the centre of a star over agents `a1..=a{n}`.
    pub fn star(agents: usize, kind: EdgeKind) -> TeamConfig {
        let mut members = vec![member("h", MemberKind::Human, &all_roles())];
        let mut edges = Vec::new();
        for i in 1..=agents {
            let id = format!("a{i}");
            members.push(member(&id, MemberKind::Agent, &all_roles()));
            edges.push(StructureEdge {
                a: "h".into(),
                b: MemberId::new(id),
                kind,
            });
        }
        TeamConfig {
            team_name: "Team".into(),
            topic: "smart home services".into(),
            members,
            edges,
            smm: SharedMentalModel::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn star_team_is_valid() {
        let mut c = star(3, EdgeKind::Peer);
        c.members[1].roles = [RoleKind::IdeaEvaluation].into();
        c.members[2].roles = [RoleKind::Feedback].into();
        c.members[3].roles = [RoleKind::IdeaGeneration].into();
        assert!(validate_team(&c).is_ok(), "{}", validate_team(&c));
    }

    #[test]
    fn two_members_too_small() {
        let c = star(1, EdgeKind::Peer);
        let r = validate_team(&c);
        assert!(r.has("team_too_small"));
    }

    #[test]
    fn seven_members_too_large() {
        let c = star(6, EdgeKind::Peer);
        assert!(validate_team(&c).has("team_too_large"));
    }

    #[test]
    fn missing_generator_is_rejected() {
        let mut c = star(3, EdgeKind::Peer);
        for m in &mut c.members {
            m.roles.remove(&RoleKind::IdeaGeneration);
        }
        let r = validate_team(&c);
        assert_eq!(r.violations, vec![Violation::NoGenerator]);
    }

    #[test]
    fn reports_every_violation() {
        let mut c = star(2, EdgeKind::Peer);
        c.members[1].roles.clear();
        c.members[2].persona.name = " ".into();
        c.members[2].persona.social.age = Some(0);
        c.edges.push(StructureEdge::peer("a1", "a1"));
        c.edges.push(StructureEdge::peer("a1", "h"));
        c.edges.push(StructureEdge::peer("a2", "ghost"));
        let r = validate_team(&c);
        for code in [
            "empty_roles",
            "empty_name",
            "invalid_age",
            "self_edge",
            "duplicate_edge",
            "unknown_edge_endpoint",
        ] {
            assert!(r.has(code), "missing {code}: {r}");
        }
    }

    #[test]
    fn human_count_must_be_one() {
        let mut c = star(3, EdgeKind::Peer);
        c.members[1].kind = MemberKind::Human;
        assert!(validate_team(&c).has("human_count"));
        c.members[0].kind = MemberKind::Agent;
        c.members[1].kind = MemberKind::Agent;
        assert!(validate_team(&c).has("human_count"));
    }

    #[test]
    fn isolated_feedback_only_member_fails() {
        let mut c = star(3, EdgeKind::Peer);
        c.edges.retain(|e| e.b.as_str() != "a3");
        c.members[3].roles = [RoleKind::Feedback, RoleKind::Request].into();
        assert_eq!(
            validate_team(&c).violations,
            vec![Violation::IsolatedMember {
                member: "a3".into()
            }]
        );
        // an isolated generator may still contribute
        c.members[3].roles.insert(RoleKind::IdeaGeneration);
        assert!(validate_team(&c).is_ok());
    }

    #[test]
    fn interaction_follows_edges() {
        let c = star(3, EdgeKind::Peer);
        let (h, a1, a2) = (MemberId::from("h"), MemberId::from("a1"), MemberId::from("a2"));
        assert!(can_interact(&c, &h, &a1).unwrap());
        assert!(can_interact(&c, &a1, &h).unwrap());
        assert!(!can_interact(&c, &a1, &a2).unwrap());
        assert!(!can_interact(&c, &a1, &a1).unwrap());
        assert_eq!(
            can_interact(&c, &a1, &"zz".into()),
            Err(TeamError::UnknownMember("zz".into()))
        );
    }

    #[test]
    fn canonical_structures() {
        assert_eq!(
            classify_structure(&star(3, EdgeKind::Peer)).unwrap(),
            StructureClass::Flat
        );
        assert_eq!(
            classify_structure(&star(3, EdgeKind::Hierarchical)).unwrap(),
            StructureClass::SingleTier
        );
        let mut chain = star(2, EdgeKind::Peer);
        chain.edges = vec![
            StructureEdge::superior("h", "a1"),
            StructureEdge::superior("a1", "a2"),
        ];
        assert_eq!(classify_structure(&chain).unwrap(), StructureClass::MultiTier);
    }

    #[test]
    fn cyclic_hierarchy_is_an_error() {
        let mut c = star(2, EdgeKind::Peer);
        c.edges = vec![
            StructureEdge::superior("h", "a1"),
            StructureEdge::superior("a1", "a2"),
            StructureEdge::superior("a2", "h"),
        ];
        assert_eq!(classify_structure(&c), Err(TeamError::CyclicHierarchy));
    }

    #[test]
    fn config_json_uses_snake_case() {
        let c = star(2, EdgeKind::Hierarchical);
        let v: serde_json::Value = serde_json::from_str(&c.canonical_json()).unwrap();
        assert_eq!(v["members"][0]["kind"], "human");
        assert_eq!(v["edges"][0]["kind"], "hierarchical");
        assert_eq!(v["members"][1]["roles"][0], "idea_generation");
        let back: TeamConfig = serde_json::from_value(v).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn persona_completion_counts() {
        let mut p = Persona::named("Jade");
        p.social = SocialIdentity {
            age: Some(31),
            gender: Some("female".into()),
            education: Some("MFA".into()),
            occupation: Some("UX designer".into()),
        };
        p.life_context.likes = Some("hiking".into());
        assert_eq!(p.social_completion(), Completion { filled: 4, total: 4 });
        assert_eq!(p.personal_completion(), Completion { filled: 0, total: 2 });
        assert_eq!(p.life_context_completion(), Completion { filled: 1, total: 3 });
    }
}
