use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use super::*;

/// `Strict` accepts exactly the formal response tables. `Default` also
/// accepts the pairs described only in prose (Export answered by
/// IllegalOffer, Describe by UnknownOfferId, SetOffer_repos by
/// InvalidValue) and success predicates without their echoed concept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Default,
    Strict,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("illegal request: {0}")]
pub struct IllegalRequest(pub String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("illegal response: {0}")]
pub struct IllegalResponse(pub String);

/// An action of any ontology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActionId {
    Lookup(LookupAction),
    Register(RegisterAction),
    Admin(AdminAction),
}

/// A predicate of any ontology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PredicateId {
    Lookup(LookupPredicate),
    Register(RegisterPredicate),
    Admin(AdminPredicate),
}

impl ActionId {
    pub fn all() -> Vec<ActionId> {
        let mut v: Vec<ActionId> = LookupAction::ALL
            .iter()
            .map(|a| ActionId::Lookup(*a))
            .collect();
        v.extend(RegisterAction::ALL.iter().map(|a| ActionId::Register(*a)));
        v.extend(AdminAction::ALL.iter().map(|a| ActionId::Admin(*a)));
        v
    }

    pub fn name(self) -> &'static str {
        match self {
            ActionId::Lookup(a) => a.name(),
            ActionId::Register(a) => a.name(),
            ActionId::Admin(a) => a.name(),
        }
    }
}

impl PredicateId {
    pub fn all() -> Vec<PredicateId> {
        let mut v: Vec<PredicateId> = LookupPredicate::ALL
            .iter()
            .map(|p| PredicateId::Lookup(*p))
            .collect();
        v.extend(
            RegisterPredicate::ALL
                .iter()
                .map(|p| PredicateId::Register(*p)),
        );
        v.extend(AdminPredicate::ALL.iter().map(|p| PredicateId::Admin(*p)));
        v
    }

    pub fn name(self) -> &'static str {
        match self {
            PredicateId::Lookup(p) => p.name(),
            PredicateId::Register(p) => p.name(),
            PredicateId::Admin(p) => p.name(),
        }
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for PredicateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Body {
    pub fn action_id(&self) -> Option<ActionId> {
        match self {
            Body::Lookup(Speech::Action { action, .. }) => Some(ActionId::Lookup(*action)),
            Body::Register(Speech::Action { action, .. }) => Some(ActionId::Register(*action)),
            Body::Admin(Speech::Action { action, .. }) => Some(ActionId::Admin(*action)),
            _ => None,
        }
    }

    pub fn predicate_id(&self) -> Option<PredicateId> {
        match self {
            Body::Lookup(Speech::Predicate { predicate, .. }) => {
                Some(PredicateId::Lookup(*predicate))
            }
            Body::Register(Speech::Predicate { predicate, .. }) => {
                Some(PredicateId::Register(*predicate))
            }
            Body::Admin(Speech::Predicate { predicate, .. }) => {
                Some(PredicateId::Admin(*predicate))
            }
            _ => None,
        }
    }
}

/// The concept sets a request for `action` may carry.
pub fn request_shapes(action: ActionId) -> Vec<Vec<Concept>> {
    use Concept::*;
    match action {
        ActionId::Lookup(LookupAction::Query) => vec![vec![QueryForm], vec![QueryForm, PolicySeq]],
        ActionId::Register(RegisterAction::Export) => vec![vec![Offer]],
        ActionId::Register(RegisterAction::Modify) => vec![vec![Offer, OfferId]],
        ActionId::Register(RegisterAction::Withdraw | RegisterAction::Describe) => {
            vec![vec![OfferId]]
        }
        ActionId::Admin(AdminAction::SetDefSearchCard) => vec![vec![DefSearchCard]],
        ActionId::Admin(AdminAction::SetMaxSearchCard) => vec![vec![MaxSearchCard]],
        ActionId::Admin(AdminAction::SetOfferRepos) => vec![vec![OfferRepos]],
        ActionId::Admin(
            AdminAction::GetDefSearchCard
            | AdminAction::GetMaxSearchCard
            | AdminAction::GetOfferRepos,
        ) => {
            vec![vec![]]
        }
    }
}

/// The concept sets `predicate` may carry when answering `action`; empty
/// when the pair is illegal.
pub fn allowed_shapes(action: ActionId, predicate: PredicateId, mode: Mode) -> Vec<Vec<Concept>> {
    use AdminAction as AA;
    use AdminPredicate as AP;
    use Concept::*;
    use LookupPredicate as LP;
    use RegisterAction as RA;
    use RegisterPredicate as RP;
    let lenient = mode == Mode::Default;
    let bare = || vec![vec![]];
    let only = |c: Concept| vec![vec![c]];
    let echo = |c: Concept| {
        if lenient {
            vec![vec![c], vec![]]
        } else {
            vec![vec![c]]
        }
    };
    let if_lenient = |v: Vec<Vec<Concept>>| if lenient { v } else { vec![] };

    match (action, predicate) {
        (ActionId::Lookup(LookupAction::Query), PredicateId::Lookup(p)) => match p {
            LP::NotEmptyOfferSeq => vec![vec![OfferSeq], vec![OfferSeq, OfferSeqMatch]],
            _ => bare(),
        },
        (ActionId::Register(a), PredicateId::Register(p)) => match (a, p) {
            (RA::Export, RP::IllegalOfferId | RP::UnknownOffer | RP::DuplicateOffer) => bare(),
            (RA::Export, RP::IllegalOffer) => if_lenient(bare()),
            (RA::Export, RP::ExportedOffer) => only(OfferId),
            (
                RA::Modify,
                RP::IllegalOfferId
                | RP::UnknownOfferId
                | RP::IllegalOffer
                | RP::UnknownOffer
                | RP::DuplicateOffer,
            ) => bare(),
            (RA::Modify, RP::ModifiedOffer) => only(OfferId),
            (RA::Withdraw, RP::IllegalOfferId | RP::UnknownOfferId) => bare(),
            (RA::Withdraw, RP::WithdrawnOffer) => echo(Offer),
            (RA::Describe, RP::QueryError | RP::IllegalOfferId | RP::NotDescribedOffer) => bare(),
            (RA::Describe, RP::UnknownOfferId) => if_lenient(bare()),
            (RA::Describe, RP::DescribedOffer) => only(Offer),
            _ => vec![],
        },
        (ActionId::Admin(a), PredicateId::Admin(p)) => match (a, p) {
            (AA::SetDefSearchCard, AP::ModifiedDefSearchCard) => echo(DefSearchCard),
            (AA::SetMaxSearchCard, AP::ModifiedMaxSearchCard) => echo(MaxSearchCard),
            (AA::SetOfferRepos, AP::ModifiedOfferRepos) => echo(OfferRepos),
            (AA::SetDefSearchCard | AA::SetMaxSearchCard, AP::InvalidValue) => bare(),
            (AA::SetOfferRepos, AP::InvalidValue) => if_lenient(bare()),
            (AA::GetDefSearchCard, AP::ReturnedDefSearchCard) => only(DefSearchCard),
            (AA::GetMaxSearchCard, AP::ReturnedMaxSearchCard) => only(MaxSearchCard),
            (AA::GetOfferRepos, AP::ReturnedOfferRepos) => only(OfferRepos),
            _ => vec![],
        },
        _ => vec![],
    }
}

fn shape_set(v: &[Concept]) -> BTreeSet<Concept> {
    v.iter().copied().collect()
}

fn describe_shape(s: &BTreeSet<Concept>) -> String {
    if s.is_empty() {
        "no concepts".into()
    } else {
        s.iter().map(|c| c.name()).collect::<Vec<_>>().join(" + ")
    }
}

fn shape_mismatch(present: &BTreeSet<Concept>, allowed: &[Vec<Concept>]) -> String {
    // Name the concept whose absence or presence is closest to a legal shape.
    let best = allowed
        .iter()
        .map(|s| shape_set(s))
        .min_by_key(|s| s.symmetric_difference(present).count());
    match best {
        Some(s) => {
            let missing: Vec<_> = s.difference(present).map(|c| c.name()).collect();
            let extra: Vec<_> = present.difference(&s).map(|c| c.name()).collect();
            let mut parts = Vec::new();
            if !missing.is_empty() {
                parts.push(format!("missing {}", missing.join(", ")));
            }
            if !extra.is_empty() {
                parts.push(format!("unexpected {}", extra.join(", ")));
            }
            parts.join("; ")
        }
        None => "no legal shape".into(),
    }
}

/// Checks that an action carries exactly the concepts its request relation
/// allows, and that those concepts are well-formed.
pub fn validate_request(body: &Body) -> Result<(), IllegalRequest> {
    let action = body
        .action_id()
        .ok_or_else(|| IllegalRequest(format!("{} is not an action", body.name())))?;
    let present = body.present_concepts();
    let shapes = request_shapes(action);
    if !shapes.iter().any(|s| shape_set(s) == present) {
        return Err(IllegalRequest(format!(
            "{action}: {}",
            shape_mismatch(&present, &shapes)
        )));
    }
    match body {
        Body::Lookup(s) => {
            let form = s.concepts().form.as_ref().expect("shape checked");
            if form.uri.is_some() == form.inline_body.is_some() {
                return Err(IllegalRequest(
                    "QueryForm needs exactly one of uri and inline body".into(),
                ));
            }
        }
        Body::Register(s) => {
            if let Some(offer) = &s.concepts().offer {
                if offer.uri.is_some() == offer.document.is_some() {
                    return Err(IllegalRequest(
                        "Offer needs exactly one of uri and document".into(),
                    ));
                }
            }
        }
        Body::Admin(_) => {}
    }
    Ok(())
}

/// Checks that `response` is a legal answer to `request`: same ontology, a
/// permitted (action, predicate) pair, and the concepts that pair requires.
pub fn validate_response(
    request: &Body,
    response: &Body,
    mode: Mode,
) -> Result<(), IllegalResponse> {
    let action = request
        .action_id()
        .ok_or_else(|| IllegalResponse(format!("{} is not an action", request.name())))?;
    let predicate = response
        .predicate_id()
        .ok_or_else(|| IllegalResponse(format!("{} is not a predicate", response.name())))?;
    if request.ontology() != response.ontology() {
        return Err(IllegalResponse(format!(
            "cross-ontology: {} ({}) cannot answer {} ({})",
            predicate,
            response.ontology(),
            action,
            request.ontology()
        )));
    }
    let shapes = allowed_shapes(action, predicate, mode);
    if shapes.is_empty() {
        return Err(IllegalResponse(format!(
            "{predicate} is not a response to {action}"
        )));
    }
    let present = response.present_concepts();
    if !shapes.iter().any(|s| shape_set(s) == present) {
        return Err(IllegalResponse(format!(
            "{predicate} answering {action} carries {}: {}",
            describe_shape(&present),
            shape_mismatch(&present, &shapes)
        )));
    }
    if let Body::Lookup(s) = response {
        let c = s.concepts();
        if let Some(offers) = &c.offers {
            if offers.offers.is_empty() {
                return Err(IllegalResponse(
                    "NotEmptyOfferSeq with an empty OfferSeq".into(),
                ));
            }
            if let Some(m) = &c.matches {
                if m.entries.len() != offers.offers.len() {
                    return Err(IllegalResponse(format!(
                        "OfferSeqMatch has {} entries for {} offers",
                        m.entries.len(),
                        offers.offers.len()
                    )));
                }
            }
        }
    }
    Ok(())
}
