//! The Lookup, Register and Admin ontologies: message types, the
//! line-oriented wire codec, and the legality of requests and responses.
//!
//! A message is an action or a predicate plus a bundle of optional concept
//! slots. Slots are optional so that ill-formed combinations can be decoded
//! and then rejected by [`validate_request`] / [`validate_response`].

mod codec;
mod legality;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::store::{Document, QueryBody};

pub use codec::{decode, encode, CodecError};
pub use legality::{
    allowed_shapes, request_shapes, validate_request, validate_response, ActionId, IllegalRequest,
    IllegalResponse, Mode, PredicateId,
};

macro_rules! named_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            /// Identifier used on the wire.
            pub fn name(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }

            pub fn from_name(s: &str) -> Option<Self> {
                match s { $($text => Some($name::$variant),)+ _ => None }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
    };
}

named_enum!(Ontology { Lookup => "lookup", Register => "register", Admin => "admin" });
named_enum!(Kind { Action => "action", Predicate => "predicate" });

named_enum!(LookupAction { Query => "Query" });
named_enum!(LookupPredicate {
    UnknownQueryForm => "UnknownQueryForm",
    PolicyTypeMismatch => "PolicyTypeMismatch",
    InvalidPolicyValue => "InvalidPolicyValue",
    DuplicatePolicyName => "DuplicatePolicyName",
    QueryError => "QueryError",
    EmptyOfferSeq => "EmptyOfferSeq",
    NotEmptyOfferSeq => "NotEmptyOfferSeq",
});

named_enum!(RegisterAction { Export => "Export", Modify => "Modify", Withdraw => "Withdraw", Describe => "Describe" });
named_enum!(RegisterPredicate {
    IllegalOffer => "IllegalOffer",
    UnknownOffer => "UnknownOffer",
    DuplicateOffer => "DuplicateOffer",
    IllegalOfferId => "IllegalOfferId",
    UnknownOfferId => "UnknownOfferId",
    QueryError => "QueryError",
    ExportedOffer => "ExportedOffer",
    WithdrawnOffer => "WithdrawnOffer",
    DescribedOffer => "DescribedOffer",
    NotDescribedOffer => "NotDescribedOffer",
    ModifiedOffer => "ModifiedOffer",
});

named_enum!(AdminAction {
    SetDefSearchCard => "SetDef_search_card",
    SetMaxSearchCard => "SetMax_search_card",
    SetOfferRepos => "SetOffer_repos",
    GetDefSearchCard => "GetDef_search_card",
    GetMaxSearchCard => "GetMax_search_card",
    GetOfferRepos => "GetOffer_repos",
});
named_enum!(AdminPredicate {
    InvalidValue => "InvalidValue",
    ModifiedDefSearchCard => "ModifiedDef_search_card",
    ModifiedMaxSearchCard => "ModifiedMax_search_card",
    ModifiedOfferRepos => "ModifiedOffer_repos",
    ReturnedDefSearchCard => "ReturnedDef_search_card",
    ReturnedMaxSearchCard => "ReturnedMax_search_card",
    ReturnedOfferRepos => "ReturnedOffer_repos",
});

named_enum!(
    /// Every concept of the three ontologies; used to describe which slots a
    /// message fills.
    Concept {
        QueryForm => "QueryForm",
        PolicySeq => "PolicySeq",
        OfferSeq => "OfferSeq",
        OfferSeqMatch => "OfferSeqMatch",
        Offer => "Offer",
        OfferId => "OfferId",
        DefSearchCard => "Def_search_card",
        MaxSearchCard => "Max_search_card",
        OfferRepos => "Offer_repos",
    }
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QueryType {
    /// Answered from trader records alone.
    MetaMeta,
    /// Answered by processing modules located through the trader.
    Meta,
}

/// A query plus its addressing. Exactly one of `uri` and `inline_body` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryForm {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uri: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inline_body: Option<QueryBody>,
    #[serde(rename = "type")]
    pub query_type: QueryType,
    pub source: String,
    pub target: String,
}

impl QueryForm {
    pub fn inline(id: impl Into<String>, query_type: QueryType, body: QueryBody) -> Self {
        QueryForm {
            id: id.into(),
            uri: None,
            inline_body: Some(body),
            query_type,
            source: String::new(),
            target: String::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyName {
    DefSearchCard,
    MaxSearchCard,
    ExactTypeMatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolicyValue {
    Int(i64),
    Bool(bool),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    pub name: PolicyName,
    pub value: PolicyValue,
}

pub type PolicySeq = Vec<Policy>;

/// A document handed to the Register interface, inline or by file locator.
/// Exactly one of the two is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Offer {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uri: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub document: Option<Document>,
}

impl Offer {
    pub fn inline(doc: Document) -> Self {
        Offer {
            uri: None,
            document: Some(doc),
        }
    }

    pub fn by_uri(uri: impl Into<String>) -> Self {
        Offer {
            uri: Some(uri.into()),
            document: None,
        }
    }
}

/// Documents found by a lookup, in result order. `uri` names the file the
/// trader also wrote them to, when it did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfferSeq {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uri: Option<String>,
    pub offers: Vec<Document>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MatchEntry {
    pub doc_id: String,
    pub percentage: u8,
    /// Address of the module whose repository holds the document.
    pub origin: String,
}

/// One entry per offer of the accompanying [`OfferSeq`], in the same order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfferSeqMatch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uri: Option<String>,
    pub entries: Vec<MatchEntry>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LookupConcepts {
    #[serde(rename = "QueryForm", default, skip_serializing_if = "Option::is_none")]
    pub form: Option<QueryForm>,
    #[serde(rename = "PolicySeq", default, skip_serializing_if = "Option::is_none")]
    pub policies: Option<PolicySeq>,
    #[serde(rename = "OfferSeq", default, skip_serializing_if = "Option::is_none")]
    pub offers: Option<OfferSeq>,
    #[serde(
        rename = "OfferSeqMatch",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub matches: Option<OfferSeqMatch>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegisterConcepts {
    #[serde(rename = "Offer", default, skip_serializing_if = "Option::is_none")]
    pub offer: Option<Offer>,
    #[serde(rename = "OfferId", default, skip_serializing_if = "Option::is_none")]
    pub offer_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdminConcepts {
    #[serde(
        rename = "Def_search_card",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub def: Option<i64>,
    #[serde(
        rename = "Max_search_card",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub max: Option<i64>,
    #[serde(
        rename = "Offer_repos",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub offer_repos: Option<String>,
}

/// Concept slots that a message fills.
pub trait Concepts {
    fn present(&self) -> BTreeSet<Concept>;
}

impl Concepts for LookupConcepts {
    fn present(&self) -> BTreeSet<Concept> {
        [
            (self.form.is_some(), Concept::QueryForm),
            (self.policies.is_some(), Concept::PolicySeq),
            (self.offers.is_some(), Concept::OfferSeq),
            (self.matches.is_some(), Concept::OfferSeqMatch),
        ]
        .into_iter()
        .filter_map(|(p, c)| p.then_some(c))
        .collect()
    }
}

impl Concepts for RegisterConcepts {
    fn present(&self) -> BTreeSet<Concept> {
        [
            (self.offer.is_some(), Concept::Offer),
            (self.offer_id.is_some(), Concept::OfferId),
        ]
        .into_iter()
        .filter_map(|(p, c)| p.then_some(c))
        .collect()
    }
}

impl Concepts for AdminConcepts {
    fn present(&self) -> BTreeSet<Concept> {
        [
            (self.def.is_some(), Concept::DefSearchCard),
            (self.max.is_some(), Concept::MaxSearchCard),
            (self.offer_repos.is_some(), Concept::OfferRepos),
        ]
        .into_iter()
        .filter_map(|(p, c)| p.then_some(c))
        .collect()
    }
}

/// An action (request) or a predicate (response) of one ontology.
#[derive(Debug, Clone, PartialEq)]
pub enum Speech<A, P, C> {
    Action {
        action: A,
        concepts: C,
    },
    Predicate {
        predicate: P,
        returned_message: String,
        concepts: C,
    },
}

impl<A, P, C> Speech<A, P, C> {
    pub fn concepts(&self) -> &C {
        match self {
            Speech::Action { concepts, .. } | Speech::Predicate { concepts, .. } => concepts,
        }
    }

    pub fn into_concepts(self) -> C {
        match self {
            Speech::Action { concepts, .. } | Speech::Predicate { concepts, .. } => concepts,
        }
    }
}

pub type LookupMessage = Speech<LookupAction, LookupPredicate, LookupConcepts>;
pub type RegisterMessage = Speech<RegisterAction, RegisterPredicate, RegisterConcepts>;
pub type AdminMessage = Speech<AdminAction, AdminPredicate, AdminConcepts>;

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Lookup(LookupMessage),
    Register(RegisterMessage),
    Admin(AdminMessage),
}

impl Body {
    pub fn ontology(&self) -> Ontology {
        match self {
            Body::Lookup(_) => Ontology::Lookup,
            Body::Register(_) => Ontology::Register,
            Body::Admin(_) => Ontology::Admin,
        }
    }

    pub fn kind(&self) -> Kind {
        let is_action = match self {
            Body::Lookup(s) => matches!(s, Speech::Action { .. }),
            Body::Register(s) => matches!(s, Speech::Action { .. }),
            Body::Admin(s) => matches!(s, Speech::Action { .. }),
        };
        if is_action {
            Kind::Action
        } else {
            Kind::Predicate
        }
    }

    /// The action or predicate identifier.
    pub fn name(&self) -> &'static str {
        fn pick<A: Copy, P: Copy, C>(
            s: &Speech<A, P, C>,
            a: fn(A) -> &'static str,
            p: fn(P) -> &'static str,
        ) -> &'static str {
            match s {
                Speech::Action { action, .. } => a(*action),
                Speech::Predicate { predicate, .. } => p(*predicate),
            }
        }
        match self {
            Body::Lookup(s) => pick(s, LookupAction::name, LookupPredicate::name),
            Body::Register(s) => pick(s, RegisterAction::name, RegisterPredicate::name),
            Body::Admin(s) => pick(s, AdminAction::name, AdminPredicate::name),
        }
    }

    pub fn returned_message(&self) -> Option<&str> {
        match self {
            Body::Lookup(Speech::Predicate {
                returned_message, ..
            })
            | Body::Register(Speech::Predicate {
                returned_message, ..
            })
            | Body::Admin(Speech::Predicate {
                returned_message, ..
            }) => Some(returned_message),
            _ => None,
        }
    }

    pub fn present_concepts(&self) -> BTreeSet<Concept> {
        match self {
            Body::Lookup(s) => s.concepts().present(),
            Body::Register(s) => s.concepts().present(),
            Body::Admin(s) => s.concepts().present(),
        }
    }

    pub fn query(form: QueryForm, policies: Option<PolicySeq>) -> Body {
        Body::Lookup(Speech::Action {
            action: LookupAction::Query,
            concepts: LookupConcepts {
                form: Some(form),
                policies,
                ..Default::default()
            },
        })
    }

    pub fn lookup_reply(
        predicate: LookupPredicate,
        msg: impl Into<String>,
        concepts: LookupConcepts,
    ) -> Body {
        Body::Lookup(Speech::Predicate {
            predicate,
            returned_message: msg.into(),
            concepts,
        })
    }

    pub fn register(
        action: RegisterAction,
        offer_id: Option<String>,
        offer: Option<Offer>,
    ) -> Body {
        Body::Register(Speech::Action {
            action,
            concepts: RegisterConcepts { offer, offer_id },
        })
    }

    pub fn register_reply(
        predicate: RegisterPredicate,
        msg: impl Into<String>,
        concepts: RegisterConcepts,
    ) -> Body {
        Body::Register(Speech::Predicate {
            predicate,
            returned_message: msg.into(),
            concepts,
        })
    }

    pub fn admin(action: AdminAction, concepts: AdminConcepts) -> Body {
        Body::Admin(Speech::Action { action, concepts })
    }

    pub fn admin_reply(
        predicate: AdminPredicate,
        msg: impl Into<String>,
        concepts: AdminConcepts,
    ) -> Body {
        Body::Admin(Speech::Predicate {
            predicate,
            returned_message: msg.into(),
            concepts,
        })
    }
}

/// One message between two module addresses.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub cid: String,
    pub sender: String,
    pub receiver: String,
    /// Traders that have already evaluated this query; set on federated
    /// forwards and on their replies, empty otherwise.
    pub visited: BTreeSet<String>,
    pub body: Body,
}

impl Envelope {
    pub fn new(
        cid: impl Into<String>,
        sender: impl Into<String>,
        receiver: impl Into<String>,
        body: Body,
    ) -> Self {
        Envelope {
            cid: cid.into(),
            sender: sender.into(),
            receiver: receiver.into(),
            visited: BTreeSet::new(),
            body,
        }
    }

    /// A response travelling back along this envelope's edge.
    pub fn reply(&self, body: Body) -> Envelope {
        Envelope {
            cid: self.cid.clone(),
            sender: self.receiver.clone(),
            receiver: self.sender.clone(),
            visited: BTreeSet::new(),
            body,
        }
    }

    pub fn ontology(&self) -> Ontology {
        self.body.ontology()
    }

    pub fn kind(&self) -> Kind {
        self.body.kind()
    }
}
