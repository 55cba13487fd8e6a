//! Permission checks shared by the human path, the agent runtime and audits.

use super::event::{FeedbackRef, RejectionRule, RequestableAction};
use super::state::SessionState;
use crate::team::{MemberId, RoleKind};

/// Checks, in order: membership, role, the idea gate, target adjacency and
/// feedback availability.
pub fn authorize(
    state: &SessionState,
    actor: &MemberId,
    role: RoleKind,
    target: Option<&MemberId>,
) -> Result<(), RejectionRule> {
    let spec = state
        .config
        .member(actor)
        .ok_or(RejectionRule::NotAMember)?;
    if !spec.has_role(role) {
        return Err(RejectionRule::RoleViolation);
    }
    if !state.gate_open && role != RoleKind::IdeaGeneration {
        return Err(RejectionRule::GateClosed);
    }
    if role.requires_adjacency() {
        let target = target.ok_or(RejectionRule::MissingTarget)?;
        if target == actor || !state.config.adjacent(actor, target) {
            return Err(RejectionRule::AdjacencyViolation);
        }
        if role == RoleKind::Feedback && (state.in_feedback(actor) || state.in_feedback(target)) {
            return Err(RejectionRule::FeedbackBusy);
        }
    }
    Ok(())
}

/// [`authorize`] for the request role, plus the recipient's role.
pub fn authorize_request(
    state: &SessionState,
    actor: &MemberId,
    recipient: &MemberId,
    action: RequestableAction,
) -> Result<(), RejectionRule> {
    authorize(state, actor, RoleKind::Request, Some(recipient))?;
    let spec = state
        .config
        .member(recipient)
        .ok_or(RejectionRule::AdjacencyViolation)?;
    if !spec.has_role(action.role()) {
        return Err(RejectionRule::RecipientLacksRole);
    }
    Ok(())
}

/// A reply needs an open session the actor is party to, on the actor's turn.
pub fn authorize_reply(
    state: &SessionState,
    actor: &MemberId,
    session_ref: &FeedbackRef,
) -> Result<(), RejectionRule> {
    if !state.config.is_member(actor) {
        return Err(RejectionRule::NotAMember);
    }
    let t = state
        .transcript(session_ref)
        .ok_or(RejectionRule::NotAParty)?;
    if !t.involves(actor) {
        return Err(RejectionRule::NotAParty);
    }
    if t.closed {
        return Err(RejectionRule::FeedbackClosed);
    }
    if t.whose_turn() != Some(actor) {
        return Err(RejectionRule::NotYourTurn);
    }
    Ok(())
}
