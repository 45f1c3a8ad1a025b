//! The stand-alone trading service: Lookup, Register and Admin over a
//! meta-metadata repository, plus federation links to other traders.

mod lookup;

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

use parking_lot::RwLock;
use thiserror::Error;

use crate::model::TradingModuleSpec;
use crate::ontomsg::{
    validate_request, AdminAction, AdminConcepts, AdminPredicate, Body, Envelope, LookupPredicate,
    Mode, Offer, Policy, PolicyName, PolicyValue, RegisterAction, RegisterConcepts,
    RegisterPredicate, Speech,
};
use crate::store::{
    load_document, Document, EffectivePolicies, Level, Repository, SharedRepository, StoreError,
};

pub use lookup::{Forwarder, NoForwarding};

pub const DEFAULT_DEF_SEARCH_CARD: i64 = 10;
pub const DEFAULT_MAX_SEARCH_CARD: i64 = 100;

/// Which optional interfaces a trader implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterfaceFlags {
    pub lookup: bool,
    pub register: bool,
    pub admin: bool,
    pub link: bool,
    pub proxy: bool,
}

impl InterfaceFlags {
    pub fn all() -> Self {
        InterfaceFlags {
            lookup: true,
            register: true,
            admin: true,
            link: true,
            proxy: true,
        }
    }
}

impl From<&TradingModuleSpec> for InterfaceFlags {
    fn from(s: &TradingModuleSpec) -> Self {
        InterfaceFlags {
            lookup: s.lookup,
            register: s.register,
            admin: s.admin,
            link: s.link,
            proxy: s.proxy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Settings {
    def_search_card: i64,
    max_search_card: i64,
    offer_repos: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinkError {
    #[error("{0} does not implement the Link interface")]
    LinkNotSupported(String),
    #[error("a trader cannot link to itself ({0})")]
    SelfLink(String),
}

/// A failed Lookup, as the predicate and message to answer with.
pub type LookupFailure = (LookupPredicate, String);

/// Clamps requested policies against the trader's limits.
///
/// Duplicates are reported first, then wrongly typed values, then negative
/// cardinalities.
pub fn resolve_policies(
    p: &[Policy],
    def_search_card: i64,
    max_search_card: i64,
) -> Result<EffectivePolicies, LookupFailure> {
    let mut seen = BTreeSet::new();
    for policy in p {
        if !seen.insert(policy.name) {
            return Err((
                LookupPredicate::DuplicatePolicyName,
                format!("more than one value for policy {:?}", policy.name),
            ));
        }
    }
    let (mut def, mut max, mut exact) = (None, None, None);
    for policy in p {
        match (policy.name, policy.value) {
            (PolicyName::DefSearchCard, PolicyValue::Int(v)) => def = Some(v),
            (PolicyName::MaxSearchCard, PolicyValue::Int(v)) => max = Some(v),
            (PolicyName::ExactTypeMatch, PolicyValue::Bool(b)) => exact = Some(b),
            (name, _) => {
                return Err((
                    LookupPredicate::PolicyTypeMismatch,
                    format!("wrong value type for policy {name:?}"),
                ));
            }
        }
    }
    for (name, v) in [("def_search_card", def), ("max_search_card", max)] {
        if let Some(v) = v.filter(|v| *v < 0) {
            return Err((
                LookupPredicate::InvalidPolicyValue,
                format!("{name} = {v} is negative"),
            ));
        }
    }
    let card = def
        .unwrap_or(def_search_card)
        .min(max.unwrap_or(i64::MAX))
        .min(max_search_card)
        .max(0);
    Ok(EffectivePolicies {
        cardinality: card as usize,
        exact: exact.unwrap_or(false),
    })
}

/// One trading module. Lookups share the repository read lock; Register and
/// Admin operations take the write side.
pub struct Trader {
    id: String,
    flags: InterfaceFlags,
    mode: Mode,
    repo: SharedRepository,
    settings: RwLock<Settings>,
    links: RwLock<Vec<String>>,
    federate_always: bool,
    read_fault: AtomicBool,
    evaluations: AtomicUsize,
}

impl Trader {
    pub fn new(id: impl Into<String>, flags: InterfaceFlags) -> Self {
        let id = id.into();
        Trader {
            repo: Repository::new(Level::MetaMeta, id.clone(), ':').shared(),
            settings: RwLock::new(Settings {
                def_search_card: DEFAULT_DEF_SEARCH_CARD,
                max_search_card: DEFAULT_MAX_SEARCH_CARD,
                offer_repos: format!("mem://{id}"),
            }),
            id,
            flags,
            mode: Mode::Default,
            links: RwLock::new(Vec::new()),
            federate_always: false,
            read_fault: AtomicBool::new(false),
            evaluations: AtomicUsize::new(0),
        }
    }

    /// Forward every lookup to links, not only those short of results.
    pub fn with_federate_always(mut self, on: bool) -> Self {
        self.federate_always = on;
        self
    }

    /// In strict mode only the formal response tables are used: an absent
    /// id on Describe answers NotDescribedOffer.
    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn flags(&self) -> InterfaceFlags {
        self.flags
    }

    pub fn repository(&self) -> &SharedRepository {
        &self.repo
    }

    pub fn links(&self) -> Vec<String> {
        self.links.read().clone()
    }

    /// Makes subsequent repository reads for Describe fail.
    pub fn inject_read_fault(&self, on: bool) {
        self.read_fault.store(on, Ordering::SeqCst);
    }

    pub fn def_search_card(&self) -> i64 {
        self.settings.read().def_search_card
    }

    pub fn max_search_card(&self) -> i64 {
        self.settings.read().max_search_card
    }

    /// Records a federation link. Both ends must implement Link and be distinct.
    pub fn add_federation_link(
        &self,
        other: &str,
        other_supports_link: bool,
    ) -> Result<(), LinkError> {
        if other == self.id {
            return Err(LinkError::SelfLink(self.id.clone()));
        }
        if !self.flags.link {
            return Err(LinkError::LinkNotSupported(self.id.clone()));
        }
        if !other_supports_link {
            return Err(LinkError::LinkNotSupported(other.to_string()));
        }
        let mut links = self.links.write();
        if !links.iter().any(|l| l == other) {
            links.push(other.to_string());
        }
        Ok(())
    }

    /// Answers one request envelope. Predicates sent as requests are
    /// answered with the ontology's generic failure.
    pub fn handle(&self, req: &Envelope, fwd: &dyn Forwarder) -> Envelope {
        let legal = validate_request(&req.body);
        let (body, visited) = match &req.body {
            Body::Lookup(speech) => match (&legal, speech) {
                (Ok(()), Speech::Action { concepts, .. }) => {
                    let form = concepts.form.as_ref().expect("validated");
                    let policies = concepts.policies.as_deref().unwrap_or(&[]);
                    self.lookup(req, form, policies, fwd)
                }
                (Err(e), _) => (
                    Body::lookup_reply(
                        LookupPredicate::QueryError,
                        e.to_string(),
                        Default::default(),
                    ),
                    BTreeSet::new(),
                ),
                (Ok(()), Speech::Predicate { .. }) => {
                    unreachable!("validate_request rejects predicates")
                }
            },
            Body::Register(speech) => (
                self.register(speech, legal.err().map(|e| e.to_string())),
                BTreeSet::new(),
            ),
            Body::Admin(speech) => (
                self.admin(speech, legal.err().map(|e| e.to_string())),
                BTreeSet::new(),
            ),
        };
        let mut resp = req.reply(body);
        resp.visited = visited;
        resp
    }

    fn register(&self, speech: &crate::ontomsg::RegisterMessage, illegal: Option<String>) -> Body {
        let Speech::Action { action, concepts } = speech else {
            return reg(
                RegisterPredicate::QueryError,
                "a predicate is not a request",
                RegisterConcepts::default(),
            );
        };
        if let Some(msg) = illegal {
            let p = match (action, concepts.offer_id.is_some()) {
                (RegisterAction::Export, _) | (RegisterAction::Modify, true) => {
                    RegisterPredicate::IllegalOffer
                }
                _ => RegisterPredicate::IllegalOfferId,
            };
            return reg(p, msg, RegisterConcepts::default());
        }
        let id = concepts.offer_id.as_deref();
        match action {
            RegisterAction::Export => self.export(concepts.offer.as_ref().expect("validated")),
            RegisterAction::Modify => self.modify(
                id.expect("validated"),
                concepts.offer.as_ref().expect("validated"),
            ),
            RegisterAction::Withdraw => self.withdraw(id.expect("validated")),
            RegisterAction::Describe => self.describe(id.expect("validated")),
        }
    }

    fn resolve_offer(&self, offer: &Offer) -> Result<Document, Body> {
        let doc = match (&offer.uri, &offer.document) {
            (Some(uri), _) => load_document(Path::new(uri)).map_err(|e| match e {
                StoreError::IllegalDocument(m) => reg(
                    RegisterPredicate::IllegalOffer,
                    m,
                    RegisterConcepts::default(),
                ),
                e => reg(
                    RegisterPredicate::UnknownOffer,
                    format!("the file in the uri is inaccessible: {e}"),
                    RegisterConcepts::default(),
                ),
            })?,
            (None, Some(d)) => d.clone(),
            (None, None) => unreachable!("validated"),
        };
        if doc.level != Level::MetaMeta {
            return Err(reg(
                RegisterPredicate::IllegalOffer,
                "traders hold meta-metadata documents only",
                RegisterConcepts::default(),
            ));
        }
        doc.check().map_err(|e| {
            reg(
                RegisterPredicate::IllegalOffer,
                e.to_string(),
                RegisterConcepts::default(),
            )
        })?;
        if !doc.doc_id.is_empty() && !Repository::is_well_formed_id(&doc.doc_id) {
            return Err(reg(
                RegisterPredicate::IllegalOffer,
                format!("malformed document id `{}`", doc.doc_id),
                RegisterConcepts::default(),
            ));
        }
        Ok(doc)
    }

    pub fn export(&self, offer: &Offer) -> Body {
        let doc = match self.resolve_offer(offer) {
            Ok(d) => d,
            Err(b) => return b,
        };
        match self.repo.write().insert(doc) {
            Ok(id) => reg(
                RegisterPredicate::ExportedOffer,
                format!("exported as {id}"),
                RegisterConcepts {
                    offer_id: Some(id),
                    offer: None,
                },
            ),
            Err(StoreError::DuplicateId(id)) => reg(
                RegisterPredicate::DuplicateOffer,
                format!("the document {id} already exists in the repository"),
                RegisterConcepts::default(),
            ),
            Err(e) => reg(
                RegisterPredicate::IllegalOffer,
                e.to_string(),
                RegisterConcepts::default(),
            ),
        }
    }

    pub fn modify(&self, id: &str, offer: &Offer) -> Body {
        if !Repository::is_well_formed_id(id) {
            return illegal_id(id);
        }
        let doc = match self.resolve_offer(offer) {
            Ok(d) => d,
            Err(b) => return b,
        };
        let mut repo = self.repo.write();
        if repo.fetch(id).is_err() {
            return unknown_id(id);
        }
        if !doc.doc_id.is_empty() && doc.doc_id != id && repo.fetch(&doc.doc_id).is_ok() {
            return reg(
                RegisterPredicate::DuplicateOffer,
                format!(
                    "the document {} already exists in the repository",
                    doc.doc_id
                ),
                RegisterConcepts::default(),
            );
        }
        match repo.replace(id, doc) {
            Ok(_) => reg(
                RegisterPredicate::ModifiedOffer,
                format!("{id} modified"),
                RegisterConcepts {
                    offer_id: Some(id.to_string()),
                    offer: None,
                },
            ),
            Err(e) => reg(
                RegisterPredicate::IllegalOffer,
                e.to_string(),
                RegisterConcepts::default(),
            ),
        }
    }

    pub fn withdraw(&self, id: &str) -> Body {
        if !Repository::is_well_formed_id(id) {
            return illegal_id(id);
        }
        match self.repo.write().remove(id) {
            Ok(doc) => reg(
                RegisterPredicate::WithdrawnOffer,
                format!("{id} withdrawn"),
                RegisterConcepts {
                    offer: Some(Offer::inline(doc)),
                    offer_id: None,
                },
            ),
            Err(_) => unknown_id(id),
        }
    }

    pub fn describe(&self, id: &str) -> Body {
        if self.read_fault.load(Ordering::SeqCst) {
            return reg(
                RegisterPredicate::QueryError,
                "repository read failed",
                RegisterConcepts::default(),
            );
        }
        if !Repository::is_well_formed_id(id) {
            return illegal_id(id);
        }
        match self.repo.read().fetch(id) {
            Ok(doc) => reg(
                RegisterPredicate::DescribedOffer,
                format!("{id} described"),
                RegisterConcepts {
                    offer: Some(Offer::inline(doc.clone())),
                    offer_id: None,
                },
            ),
            Err(_) if self.mode == Mode::Strict => reg(
                RegisterPredicate::NotDescribedOffer,
                format!("the document {id} was not located"),
                RegisterConcepts::default(),
            ),
            Err(_) => unknown_id(id),
        }
    }

    fn admin(&self, speech: &crate::ontomsg::AdminMessage, illegal: Option<String>) -> Body {
        let Speech::Action { action, concepts } = speech else {
            return adm(
                AdminPredicate::InvalidValue,
                "a predicate is not a request",
                AdminConcepts::default(),
            );
        };
        let is_set = matches!(
            action,
            AdminAction::SetDefSearchCard
                | AdminAction::SetMaxSearchCard
                | AdminAction::SetOfferRepos
        );
        if let (Some(msg), true) = (illegal, is_set) {
            return adm(AdminPredicate::InvalidValue, msg, AdminConcepts::default());
        }
        match action {
            AdminAction::SetDefSearchCard => {
                self.set_def_search_card(concepts.def.expect("validated"))
            }
            AdminAction::SetMaxSearchCard => {
                self.set_max_search_card(concepts.max.expect("validated"))
            }
            AdminAction::SetOfferRepos => {
                self.set_offer_repos(concepts.offer_repos.as_deref().expect("validated"))
            }
            AdminAction::GetDefSearchCard => {
                let v = self.settings.read().def_search_card;
                adm(
                    AdminPredicate::ReturnedDefSearchCard,
                    format!("{v}"),
                    AdminConcepts {
                        def: Some(v),
                        ..Default::default()
                    },
                )
            }
            AdminAction::GetMaxSearchCard => {
                let v = self.settings.read().max_search_card;
                adm(
                    AdminPredicate::ReturnedMaxSearchCard,
                    format!("{v}"),
                    AdminConcepts {
                        max: Some(v),
                        ..Default::default()
                    },
                )
            }
            AdminAction::GetOfferRepos => {
                let v = self.settings.read().offer_repos.clone();
                adm(
                    AdminPredicate::ReturnedOfferRepos,
                    v.clone(),
                    AdminConcepts {
                        offer_repos: Some(v),
                        ..Default::default()
                    },
                )
            }
        }
    }

    pub fn set_def_search_card(&self, v: i64) -> Body {
        let mut s = self.settings.write();
        if v < 0 || v > s.max_search_card {
            return adm(
                AdminPredicate::InvalidValue,
                format!("Def_search_card {v} must lie in 0..={}", s.max_search_card),
                AdminConcepts::default(),
            );
        }
        s.def_search_card = v;
        adm(
            AdminPredicate::ModifiedDefSearchCard,
            format!("{v}"),
            AdminConcepts {
                def: Some(v),
                ..Default::default()
            },
        )
    }

    pub fn set_max_search_card(&self, v: i64) -> Body {
        let mut s = self.settings.write();
        if v < 0 || v < s.def_search_card {
            return adm(
                AdminPredicate::InvalidValue,
                format!(
                    "Max_search_card {v} must be at least {} and non-negative",
                    s.def_search_card
                ),
                AdminConcepts::default(),
            );
        }
        s.max_search_card = v;
        adm(
            AdminPredicate::ModifiedMaxSearchCard,
            format!("{v}"),
            AdminConcepts {
                max: Some(v),
                ..Default::default()
            },
        )
    }

    pub fn set_offer_repos(&self, v: &str) -> Body {
        if v.trim().is_empty() {
            return adm(
                AdminPredicate::InvalidValue,
                "Offer_repos must not be empty",
                AdminConcepts::default(),
            );
        }
        self.settings.write().offer_repos = v.to_string();
        adm(
            AdminPredicate::ModifiedOfferRepos,
            v.to_string(),
            AdminConcepts {
                offer_repos: Some(v.to_string()),
                ..Default::default()
            },
        )
    }
}

fn reg(p: RegisterPredicate, msg: impl Into<String>, c: RegisterConcepts) -> Body {
    Body::register_reply(p, msg, c)
}

fn adm(p: AdminPredicate, msg: impl Into<String>, c: AdminConcepts) -> Body {
    Body::admin_reply(p, msg, c)
}

fn illegal_id(id: &str) -> Body {
    reg(
        RegisterPredicate::IllegalOfferId,
        format!("malformed offer id `{id}`"),
        RegisterConcepts::default(),
    )
}

fn unknown_id(id: &str) -> Body {
    reg(
        RegisterPredicate::UnknownOfferId,
        format!("no document in the repository with id `{id}`"),
        RegisterConcepts::default(),
    )
}
