use crate::team::{EdgeKind, MemberId, MemberKind, Persona, RoleKind, SharedMentalModel, TeamConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// The neighbour is this agent's superior.
    Superior,
    Subordinate,
    Peer,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborInfo {
    pub member_id: MemberId,
    pub name: String,
    pub kind: MemberKind,
    pub relation: Relation,
    pub roles: Vec<RoleKind>,
}

impl NeighborInfo {
    pub fn describe(&self) -> String {
        let who = match self.kind {
            MemberKind::Human => "the human teammate",
            MemberKind::Agent => "an AI teammate",
        };
        let rel = match self.relation {
            Relation::Superior => "your superior",
            Relation::Subordinate => "reports to you",
            Relation::Peer => "your peer",
        };
        let roles: Vec<_> = self.roles.iter().map(|r| r.label()).collect();
        format!(
            "{} ({}) is {who}; {rel}; roles: {}",
            self.name,
            self.member_id,
            roles.join(", ")
        )
    }
}

/// Team facts an agent's profile prompt needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeamContext {
    pub member_id: MemberId,
    pub team_name: String,
    pub topic: String,
    pub roles: Vec<RoleKind>,
    pub neighbors: Vec<NeighborInfo>,
}

impl TeamContext {
    pub fn for_member(config: &TeamConfig, member_id: &MemberId) -> Self {
        let roles = config
            .member(member_id)
            .map(|m| m.roles.iter().copied().collect())
            .unwrap_or_default();
        let neighbors = config
            .neighbors(member_id)
            .into_iter()
            .filter_map(|n| {
                let spec = config.member(&n)?;
                let edge = config.edge_between(member_id, &n)?;
                let relation = match edge.kind {
                    EdgeKind::Peer => Relation::Peer,
                    EdgeKind::Hierarchical if &edge.a == member_id => Relation::Subordinate,
                    EdgeKind::Hierarchical => Relation::Superior,
                };
                Some(NeighborInfo {
                    member_id: n,
                    name: spec.persona.name.clone(),
                    kind: spec.kind,
                    relation,
                    roles: spec.roles.iter().copied().collect(),
                })
            })
            .collect();
        TeamContext {
            member_id: member_id.clone(),
            team_name: config.team_name.clone(),
            topic: config.topic.clone(),
            roles,
            neighbors,
        }
    }
}

fn some(s: &Option<String>) -> Option<&str> {
    s.as_deref().map(str::trim).filter(|v| !v.is_empty())
}

/// Narrates how the persona's traits show up in behaviour. Attributes that
/// were left empty contribute nothing.
fn persona_narrative(p: &Persona) -> Vec<String> {
    let mut out = Vec::new();
    let s = &p.social;

    let mut background = Vec::new();
    if let Some(age) = s.age {
        background.push(format!("the experience of someone {age} years old"));
    }
    if let Some(g) = some(&s.gender) {
        background.push(format!("your life as a {g} person"));
    }
    if let Some(e) = some(&s.education) {
        background.push(format!("your training in {e}"));
    }
    if !background.is_empty() {
        out.push(format!(
            "When you judge what matters to people, you draw on {}.",
            background.join(", ")
        ));
    }
    if let Some(o) = some(&s.occupation) {
        out.push(format!(
            "You work as a {o}. You notice what a {o} would notice first, use the vocabulary \
             of that job, and ground suggestions in situations you meet at work."
        ));
    }
    let personal = &p.personal;
    if let Some(t) = some(&personal.personality) {
        out.push(format!(
            "Teammates experience you as {t}; let that temperament shape how you agree, \
             disagree and respond under pressure."
        ));
    }
    if let Some(k) = some(&personal.skills) {
        out.push(format!(
            "You reach for your skills in {k} when proposing or critiquing ideas."
        ));
    }
    let life = &p.life_context;
    if let Some(w) = some(&life.work_style) {
        out.push(format!("Your way of working is {w}, and it shows in how you pace and structure your contributions."));
    }
    if let Some(l) = some(&life.likes) {
        out.push(format!("You light up around {l} and bring it into conversations when it fits."));
    }
    if let Some(d) = some(&life.dislikes) {
        out.push(format!("You push back when ideas drift towards {d}."));
    }
    out
}

/// Standing system prompt for one agent: persona in behavioural terms, the
/// shared mental model verbatim, and the agent's roles and neighbours.
pub fn build_profile_prompt(persona: &Persona, smm: &SharedMentalModel, ctx: &TeamContext) -> String {
    let mut prompt = format!(
        "You are {}, a member of the design team \"{}\" ideating on: {}.\n",
        persona.name.trim(),
        ctx.team_name,
        ctx.topic
    );
    for line in persona_narrative(persona) {
        prompt.push_str(&line);
        prompt.push('\n');
    }

    if !smm.task_model.is_empty() || !smm.team_model.is_empty() {
        prompt.push_str("\nTeam guidelines everyone on the team follows:\n");
        if !smm.task_model.is_empty() {
            prompt.push_str("Task model: ");
            prompt.push_str(&smm.task_model);
            prompt.push('\n');
        }
        if !smm.team_model.is_empty() {
            prompt.push_str("Team model: ");
            prompt.push_str(&smm.team_model);
            prompt.push('\n');
        }
    }

    let roles: Vec<_> = ctx.roles.iter().map(|r| r.label()).collect();
    prompt.push_str(&format!(
        "\nYou may only perform these actions: {}. You can always respond to feedback you receive.\n",
        roles.join(", ")
    ));
    if ctx.neighbors.is_empty() {
        prompt.push_str("You have no direct connections, so you work on ideas on your own.\n");
    } else {
        prompt.push_str("You can interact directly with:\n");
        for n in &ctx.neighbors {
            prompt.push_str("- ");
            prompt.push_str(&n.describe());
            prompt.push('\n');
        }
    }
    prompt.push_str("Always answer with a single JSON object in the requested shape.\n");
    prompt
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::team::fixtures::star;

    fn ctx() -> TeamContext {
        TeamContext::for_member(&star(3, EdgeKind::Hierarchical), &"a1".into())
    }

    #[test]
    fn omitted_attributes_produce_no_text() {
        let mut p = Persona::named("Kai");
        p.social.occupation = Some("UX designer".into());
        let prompt = build_profile_prompt(&p, &SharedMentalModel::default(), &ctx());
        assert!(prompt.contains("UX designer"));
        assert!(!prompt.contains("years old"));
        assert!(!prompt.contains("person"));
        assert!(!prompt.contains("training in"));
        assert!(!prompt.contains("Team guidelines"));
    }

    #[test]
    fn smm_is_embedded_verbatim() {
        let smm = SharedMentalModel {
            task_model: "Focus on IoT-based services".into(),
            team_model: "Leader decides; agents propose.".into(),
        };
        let prompt = build_profile_prompt(&Persona::named("Kai"), &smm, &ctx());
        assert!(prompt.contains("Focus on IoT-based services"));
        assert!(prompt.contains("Leader decides; agents propose."));
    }

    #[test]
    fn roles_and_neighbors_are_stated() {
        let c = ctx();
        assert_eq!(c.neighbors.len(), 1);
        assert_eq!(c.neighbors[0].relation, Relation::Superior);
        let prompt = build_profile_prompt(&Persona::named("Kai"), &SharedMentalModel::default(), &c);
        assert!(prompt.contains("Idea Generation, Idea Evaluation, Feedback, Request"));
        assert!(prompt.contains("your superior"));
    }

    #[test]
    fn pure_function() {
        let mut p = Persona::named("Kai");
        p.personal.personality = Some("calm".into());
        let a = build_profile_prompt(&p, &SharedMentalModel::default(), &ctx());
        let b = build_profile_prompt(&p, &SharedMentalModel::default(), &ctx());
        assert_eq!(a, b);
    }
}
