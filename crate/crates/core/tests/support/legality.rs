//! Well-formed requests and responses for every action and predicate, the
//! response tables written out by hand, and exhaustive enumeration against
//! `validate_response`.
#![allow(dead_code)]

use std::collections::BTreeSet;

use ontotrader_core::ontomsg::*;
use ontotrader_core::store::{Condition, Document, Level, Op, QueryBody};

pub fn doc() -> Document {
    Document::new("d1", Level::MetaMeta).with("a", 1)
}

pub fn form() -> QueryForm {
    QueryForm::inline(
        "q",
        QueryType::MetaMeta,
        QueryBody::new(vec![Condition::new("a", Op::Eq, 1)]),
    )
}

/// A well-formed request for every action.
pub fn request(action: ActionId) -> Body {
    match action {
        ActionId::Lookup(_) => Body::query(form(), None),
        ActionId::Register(a) => {
            let id = matches!(
                a,
                RegisterAction::Modify | RegisterAction::Withdraw | RegisterAction::Describe
            )
            .then(|| "T:1".to_string());
            let offer = matches!(a, RegisterAction::Export | RegisterAction::Modify)
                .then(|| Offer::inline(doc()));
            Body::register(a, id, offer)
        }
        ActionId::Admin(a) => {
            let mut c = AdminConcepts::default();
            match a {
                AdminAction::SetDefSearchCard => c.def = Some(3),
                AdminAction::SetMaxSearchCard => c.max = Some(30),
                AdminAction::SetOfferRepos => c.offer_repos = Some("repo".into()),
                _ => {}
            }
            Body::admin(a, c)
        }
    }
}

/// A predicate carrying exactly `with`; concepts foreign to its ontology are ignored.
pub fn response(p: PredicateId, with: &BTreeSet<Concept>) -> Body {
    let has = |c| with.contains(&c);
    match p {
        PredicateId::Lookup(p) => Body::lookup_reply(
            p,
            "m",
            LookupConcepts {
                form: has(Concept::QueryForm).then(form),
                policies: has(Concept::PolicySeq).then(Vec::new),
                offers: has(Concept::OfferSeq).then(|| OfferSeq {
                    uri: None,
                    offers: vec![doc()],
                }),
                matches: has(Concept::OfferSeqMatch).then(|| OfferSeqMatch {
                    uri: None,
                    entries: vec![MatchEntry {
                        doc_id: "d1".into(),
                        percentage: 100,
                        origin: "N.T".into(),
                    }],
                }),
            },
        ),
        PredicateId::Register(p) => Body::register_reply(
            p,
            "m",
            RegisterConcepts {
                offer: has(Concept::Offer).then(|| Offer::inline(doc())),
                offer_id: has(Concept::OfferId).then(|| "T:1".into()),
            },
        ),
        PredicateId::Admin(p) => Body::admin_reply(
            p,
            "m",
            AdminConcepts {
                def: has(Concept::DefSearchCard).then_some(3),
                max: has(Concept::MaxSearchCard).then_some(30),
                offer_repos: has(Concept::OfferRepos).then(|| "repo".into()),
            },
        ),
    }
}

/// The response tables written out by hand: (action, predicate, concepts)
/// for every legal answer in strict mode.
pub fn strict_table() -> Vec<(&'static str, &'static str, Vec<Concept>)> {
    use Concept::*;
    let mut t = Vec::new();
    for p in [
        "UnknownQueryForm",
        "PolicyTypeMismatch",
        "InvalidPolicyValue",
        "DuplicatePolicyName",
        "QueryError",
        "EmptyOfferSeq",
    ] {
        t.push(("Query", p, vec![]));
    }
    t.push(("Query", "NotEmptyOfferSeq", vec![OfferSeq]));
    t.push(("Query", "NotEmptyOfferSeq", vec![OfferSeq, OfferSeqMatch]));
    for p in ["IllegalOfferId", "UnknownOffer", "DuplicateOffer"] {
        t.push(("Export", p, vec![]));
    }
    t.push(("Export", "ExportedOffer", vec![OfferId]));
    for p in [
        "IllegalOfferId",
        "UnknownOfferId",
        "IllegalOffer",
        "UnknownOffer",
        "DuplicateOffer",
    ] {
        t.push(("Modify", p, vec![]));
    }
    t.push(("Modify", "ModifiedOffer", vec![OfferId]));
    for p in ["IllegalOfferId", "UnknownOfferId"] {
        t.push(("Withdraw", p, vec![]));
    }
    t.push(("Withdraw", "WithdrawnOffer", vec![Offer]));
    for p in ["QueryError", "IllegalOfferId", "NotDescribedOffer"] {
        t.push(("Describe", p, vec![]));
    }
    t.push(("Describe", "DescribedOffer", vec![Offer]));
    t.push((
        "SetDef_search_card",
        "ModifiedDef_search_card",
        vec![DefSearchCard],
    ));
    t.push(("SetDef_search_card", "InvalidValue", vec![]));
    t.push((
        "SetMax_search_card",
        "ModifiedMax_search_card",
        vec![MaxSearchCard],
    ));
    t.push(("SetMax_search_card", "InvalidValue", vec![]));
    t.push(("SetOffer_repos", "ModifiedOffer_repos", vec![OfferRepos]));
    t.push((
        "GetDef_search_card",
        "ReturnedDef_search_card",
        vec![DefSearchCard],
    ));
    t.push((
        "GetMax_search_card",
        "ReturnedMax_search_card",
        vec![MaxSearchCard],
    ));
    t.push(("GetOffer_repos", "ReturnedOffer_repos", vec![OfferRepos]));
    t
}

/// Entries the default mode adds: pairs described only in prose and
/// success predicates without their echoed concept.
pub fn lenient_additions() -> Vec<(&'static str, &'static str, Vec<Concept>)> {
    vec![
        ("Export", "IllegalOffer", vec![]),
        ("Describe", "UnknownOfferId", vec![]),
        ("SetOffer_repos", "InvalidValue", vec![]),
        ("Withdraw", "WithdrawnOffer", vec![]),
        ("SetDef_search_card", "ModifiedDef_search_card", vec![]),
        ("SetMax_search_card", "ModifiedMax_search_card", vec![]),
        ("SetOffer_repos", "ModifiedOffer_repos", vec![]),
    ]
}

pub fn subsets(of: &[Concept]) -> Vec<BTreeSet<Concept>> {
    (0..1u32 << of.len())
        .map(|bits| {
            of.iter()
                .enumerate()
                .filter(|(i, _)| bits >> i & 1 == 1)
                .map(|(_, c)| *c)
                .collect()
        })
        .collect()
}

pub fn ontology_concepts(p: PredicateId) -> Vec<Concept> {
    use Concept::*;
    match p {
        PredicateId::Lookup(_) => vec![QueryForm, PolicySeq, OfferSeq, OfferSeqMatch],
        PredicateId::Register(_) => vec![Offer, OfferId],
        PredicateId::Admin(_) => vec![DefSearchCard, MaxSearchCard, OfferRepos],
    }
}

pub fn same_ontology(a: ActionId, p: PredicateId) -> bool {
    matches!(
        (a, p),
        (ActionId::Lookup(_), PredicateId::Lookup(_))
            | (ActionId::Register(_), PredicateId::Register(_))
            | (ActionId::Admin(_), PredicateId::Admin(_))
    )
}

pub fn enumerate(mode: Mode, table: &[(&str, &str, Vec<Concept>)]) -> (usize, Vec<String>) {
    let legal: BTreeSet<(&str, &str, BTreeSet<Concept>)> = table
        .iter()
        .map(|(a, p, c)| (*a, *p, c.iter().copied().collect()))
        .collect();
    let mut accepted = 0;
    let mut disagreements = Vec::new();
    for a in ActionId::all() {
        let req = request(a);
        assert_eq!(validate_request(&req), Ok(()), "{a}");
        for p in PredicateId::all() {
            // Cross-ontology answers are tried with every payload too.
            for with in subsets(&ontology_concepts(p)) {
                let want =
                    same_ontology(a, p) && legal.contains(&(a.name(), p.name(), with.clone()));
                let got = validate_response(&req, &response(p, &with), mode).is_ok();
                accepted += got as usize;
                if want != got {
                    disagreements.push(format!(
                        "{a} -> {p} with {with:?}: expected {want}, got {got}"
                    ));
                }
            }
        }
    }
    (accepted, disagreements)
}
