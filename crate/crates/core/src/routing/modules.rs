use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;
use std::thread;

use crossbeam_channel::Receiver;

use crate::ontomsg::{
    validate_request, Body, Envelope, LookupConcepts, LookupPredicate, MatchEntry, Offer, OfferSeq,
    OfferSeqMatch, Policy, PolicyName, PolicyValue, QueryForm, QueryType, RegisterAction,
    RegisterConcepts, RegisterPredicate, Speech,
};
use crate::store::{
    evaluate, load_document, project, rank_order, Document, Level, QueryBody, Repository, Scalar,
    SharedRepository, StoreError, Value, ORIGIN_MODULE,
};
use crate::trader::{
    resolve_policies, Forwarder, Trader, DEFAULT_DEF_SEARCH_CARD, DEFAULT_MAX_SEARCH_CARD,
};

use super::network::{Incoming, Network, Reply};

/// Issues the child requests of one conversation, numbering them
/// `<cid>.1`, `<cid>.2`, ...
struct Conversation<'a> {
    net: &'a Network,
    me: &'a str,
    cid: &'a str,
    sent: usize,
}

impl<'a> Conversation<'a> {
    fn new(net: &'a Network, me: &'a str, cid: &'a str) -> Self {
        Conversation {
            net,
            me,
            cid,
            sent: 0,
        }
    }

    fn ask(&mut self, to: &str, body: Body) -> Reply {
        self.sent += 1;
        self.net.request(Envelope::new(
            format!("{}.{}", self.cid, self.sent),
            self.me,
            to,
            body,
        ))
    }
}

fn lookup_failure(p: LookupPredicate, msg: impl Into<String>) -> Body {
    Body::lookup_reply(p, msg, LookupConcepts::default())
}

fn reg(p: RegisterPredicate, msg: impl Into<String>, c: RegisterConcepts) -> Body {
    Body::register_reply(p, msg, c)
}

fn read_query(uri: &str) -> Result<QueryBody, String> {
    let text = std::fs::read_to_string(uri).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

/// The form's query, read from its uri when it has one.
fn form_query(form: &QueryForm) -> Result<QueryBody, Body> {
    match (&form.uri, &form.inline_body) {
        (Some(uri), _) => read_query(uri).map_err(|e| {
            lookup_failure(
                LookupPredicate::UnknownQueryForm,
                format!("the query form specified in the uri was not accessible: {uri}: {e}"),
            )
        }),
        (None, Some(q)) => Ok(q.clone()),
        (None, None) => Err(lookup_failure(
            LookupPredicate::QueryError,
            "QueryForm without a query",
        )),
    }
}

fn query_parts(body: &Body) -> Option<(&QueryForm, &[Policy])> {
    match body {
        Body::Lookup(Speech::Action { concepts, .. }) => Some((
            concepts.form.as_ref()?,
            concepts.policies.as_deref().unwrap_or(&[]),
        )),
        _ => None,
    }
}

fn spawn(name: String, f: impl FnOnce() + Send + 'static) -> thread::JoinHandle<()> {
    thread::Builder::new()
        .name(name)
        .spawn(f)
        .expect("spawn module thread")
}

/// Relays user requests: queries round-robin to the node's query modules,
/// Register and Admin requests to their named target.
pub(super) fn management(
    me: String,
    net: Arc<Network>,
    query_modules: Vec<String>,
    inbox: Receiver<Incoming>,
) -> thread::JoinHandle<()> {
    spawn(me.clone(), move || {
        let mut next = 0;
        for Incoming { env, target, reply } in inbox {
            let to = match (target, &env.body) {
                (Some(t), _) => Ok(t),
                (None, Body::Lookup(_)) if !query_modules.is_empty() => {
                    let picked = query_modules[next].clone();
                    next = (next + 1) % query_modules.len();
                    Ok(picked)
                }
                (None, Body::Lookup(_)) => Err(format!("{me} has no query module to route to")),
                (None, _) => Err(format!(
                    "{me}: Register and Admin requests need a target module"
                )),
            };
            let result = to.and_then(|to| {
                Conversation::new(&net, &me, &env.cid)
                    .ask(&to, env.body.clone())
                    .map(|r| env.reply(r.body))
            });
            let _ = reply.send(result);
        }
    })
}

/// Static description of the processing side a query module plans against.
#[derive(Debug, Clone, Default)]
pub(super) struct Catalog {
    /// Every processing module of the system.
    pub processing: Vec<String>,
    /// Union of the processing modules' indexed paths.
    pub indexed: BTreeSet<String>,
}

pub(super) fn query(
    me: String,
    net: Arc<Network>,
    trader: String,
    catalog: Catalog,
    inbox: Receiver<Incoming>,
) -> thread::JoinHandle<()> {
    spawn(me.clone(), move || {
        for Incoming { env, reply, .. } in inbox {
            let mut conv = Conversation::new(&net, &me, &env.cid);
            let body = plan(&mut conv, &trader, &catalog, &env.body);
            let _ = reply.send(body.map(|b| env.reply(b)));
        }
    })
}

fn plan(
    conv: &mut Conversation<'_>,
    trader: &str,
    catalog: &Catalog,
    body: &Body,
) -> Result<Body, String> {
    let Some((form, policies)) = query_parts(body) else {
        return Err(format!("{} answers Lookup queries only", conv.me));
    };
    if let Err(e) = validate_request(body) {
        return Ok(lookup_failure(LookupPredicate::QueryError, e.to_string()));
    }
    match form.query_type {
        QueryType::MetaMeta => Ok(match conv.ask(trader, body.clone()) {
            Ok(resp) => resp.body,
            Err(e) => lookup_failure(LookupPredicate::QueryError, e),
        }),
        QueryType::Meta => Ok(delegate(conv, trader, catalog, form, policies)),
    }
}

/// Locates candidate processing modules through the trader, then sends the
/// full query to each of them and merges the answers.
fn delegate(
    conv: &mut Conversation<'_>,
    trader: &str,
    catalog: &Catalog,
    form: &QueryForm,
    policies: &[Policy],
) -> Body {
    let q = match form_query(form) {
        Ok(q) => q,
        Err(b) => return b,
    };
    let effective =
        match resolve_policies(policies, DEFAULT_DEF_SEARCH_CARD, DEFAULT_MAX_SEARCH_CARD) {
            Ok(e) => e,
            Err((p, msg)) => return lookup_failure(p, msg),
        };
    if let Err(e) = q.check() {
        return lookup_failure(LookupPredicate::QueryError, e.to_string());
    }

    let located: Vec<_> = q
        .conditions
        .iter()
        .filter(|c| catalog.indexed.contains(&c.path))
        .cloned()
        .collect();
    let targets: Vec<String> = if located.is_empty() {
        catalog.processing.clone()
    } else {
        let locator = QueryBody {
            conditions: located,
            projection: Some(vec![ORIGIN_MODULE.into()]),
            order_by: None,
        };
        let locator_policies = vec![
            Policy {
                name: PolicyName::DefSearchCard,
                value: PolicyValue::Int(i64::MAX),
            },
            Policy {
                name: PolicyName::ExactTypeMatch,
                value: PolicyValue::Bool(effective.exact),
            },
        ];
        let form = QueryForm {
            id: format!("{}#locator", form.id),
            ..QueryForm::inline("", QueryType::MetaMeta, locator)
        };
        match conv.ask(trader, Body::query(form, Some(locator_policies))) {
            Ok(Envelope {
                body:
                    Body::Lookup(Speech::Predicate {
                        predicate,
                        returned_message,
                        concepts,
                    }),
                ..
            }) => match predicate {
                LookupPredicate::NotEmptyOfferSeq => {
                    let offers = concepts.offers.map(|o| o.offers).unwrap_or_default();
                    let modules: BTreeSet<String> = offers
                        .iter()
                        .filter_map(|d| match d.get(ORIGIN_MODULE) {
                            Some(Value::Scalar(Scalar::Str(m))) => Some(m.clone()),
                            _ => None,
                        })
                        .collect();
                    modules.into_iter().collect()
                }
                LookupPredicate::EmptyOfferSeq => Vec::new(),
                p => return lookup_failure(p, format!("{trader}: {returned_message}")),
            },
            Ok(other) => {
                return lookup_failure(
                    LookupPredicate::QueryError,
                    format!("{trader} answered {}", other.body.name()),
                )
            }
            Err(e) => return lookup_failure(LookupPredicate::QueryError, e),
        }
    };

    let mut sub_form = form.clone();
    sub_form.uri = None;
    sub_form.inline_body = Some(q.clone());
    let mut found: Vec<(Document, MatchEntry)> = Vec::new();
    for pm in &targets {
        match conv.ask(pm, Body::query(sub_form.clone(), Some(policies.to_vec()))) {
            Ok(Envelope {
                body:
                    Body::Lookup(Speech::Predicate {
                        predicate,
                        returned_message,
                        concepts,
                    }),
                ..
            }) => match predicate {
                LookupPredicate::NotEmptyOfferSeq => {
                    let offers = concepts.offers.map(|o| o.offers).unwrap_or_default();
                    let entries = concepts.matches.map(|m| m.entries).unwrap_or_default();
                    found.extend(offers.into_iter().zip(entries));
                }
                LookupPredicate::EmptyOfferSeq => {}
                p => return lookup_failure(p, format!("{pm}: {returned_message}")),
            },
            Ok(other) => {
                return lookup_failure(
                    LookupPredicate::QueryError,
                    format!("{pm} answered {}", other.body.name()),
                )
            }
            Err(e) => return lookup_failure(LookupPredicate::QueryError, e),
        }
    }
    if targets.len() > 1 {
        found.sort_by(|(da, a), (db, b)| {
            rank_order(&q, (da, a.percentage), (db, b.percentage))
                .then_with(|| a.origin.cmp(&b.origin))
        });
    }
    found.truncate(effective.cardinality);
    if found.is_empty() {
        return lookup_failure(LookupPredicate::EmptyOfferSeq, "no document was returned");
    }
    let n = found.len();
    let (offers, entries): (Vec<_>, Vec<_>) = found.into_iter().unzip();
    Body::lookup_reply(
        LookupPredicate::NotEmptyOfferSeq,
        format!(
            "{n} document(s) found at {} processing module(s)",
            targets.len()
        ),
        LookupConcepts {
            offers: Some(OfferSeq { uri: None, offers }),
            matches: Some(OfferSeqMatch { uri: None, entries }),
            ..Default::default()
        },
    )
}

/// State of one processing module: its level-2 repository and the trader
/// record that mirrors each local document.
pub(super) struct Processing {
    pub me: String,
    pub trader: String,
    pub ambient: String,
    pub indexed: Vec<String>,
    pub repo: SharedRepository,
    pub records: BTreeMap<String, String>,
}

pub(super) fn processing(
    mut state: Processing,
    net: Arc<Network>,
    inbox: Receiver<Incoming>,
) -> thread::JoinHandle<()> {
    spawn(state.me.clone(), move || {
        for Incoming { env, reply, .. } in inbox {
            let me = state.me.clone();
            let mut conv = Conversation::new(&net, &me, &env.cid);
            let result = match &env.body {
                Body::Lookup(_) => Ok(state.subquery(&env.body)),
                Body::Register(_) => state.register(&mut conv, &env.body),
                Body::Admin(_) => Err(format!("{me} has no Admin interface")),
            };
            let _ = reply.send(result.map(|b| env.reply(b)));
        }
    })
}

impl Processing {
    fn subquery(&self, body: &Body) -> Body {
        if let Err(e) = validate_request(body) {
            return lookup_failure(LookupPredicate::QueryError, e.to_string());
        }
        let (form, policies) = query_parts(body).expect("validated");
        if form.query_type != QueryType::Meta {
            return lookup_failure(
                LookupPredicate::QueryError,
                "illegal request: processing modules answer metadata (Meta) queries only",
            );
        }
        let q = match form_query(form) {
            Ok(q) => q,
            Err(b) => return b,
        };
        let effective =
            match resolve_policies(policies, DEFAULT_DEF_SEARCH_CARD, DEFAULT_MAX_SEARCH_CARD) {
                Ok(e) => e,
                Err((p, msg)) => return lookup_failure(p, msg),
            };
        let repo = self.repo.read();
        let hits = match evaluate(&repo, &q, effective) {
            Ok(h) => h,
            Err(e) => return lookup_failure(LookupPredicate::QueryError, e.to_string()),
        };
        if hits.is_empty() {
            return lookup_failure(LookupPredicate::EmptyOfferSeq, "no document was returned");
        }
        let mut offers = Vec::with_capacity(hits.len());
        let mut entries = Vec::with_capacity(hits.len());
        for m in hits {
            let doc = repo
                .fetch(&m.doc_id)
                .expect("hit comes from this repository");
            offers.push(match &q.projection {
                Some(p) => doc.restricted(p),
                None => doc.clone(),
            });
            entries.push(MatchEntry {
                doc_id: m.doc_id,
                percentage: m.percentage,
                origin: self.me.clone(),
            });
        }
        Body::lookup_reply(
            LookupPredicate::NotEmptyOfferSeq,
            format!("{} document(s) found", offers.len()),
            LookupConcepts {
                offers: Some(OfferSeq { uri: None, offers }),
                matches: Some(OfferSeqMatch { uri: None, entries }),
                ..Default::default()
            },
        )
    }

    fn resolve_offer(offer: &Offer) -> Result<Document, Body> {
        let bare = RegisterConcepts::default;
        let doc = match (&offer.uri, &offer.document) {
            (Some(uri), _) => load_document(Path::new(uri)).map_err(|e| match e {
                StoreError::IllegalDocument(m) => reg(RegisterPredicate::IllegalOffer, m, bare()),
                e => reg(
                    RegisterPredicate::UnknownOffer,
                    format!("the file in the uri is inaccessible: {e}"),
                    bare(),
                ),
            })?,
            (None, Some(d)) => d.clone(),
            (None, None) => {
                return Err(reg(
                    RegisterPredicate::IllegalOffer,
                    "Offer without a document",
                    bare(),
                ))
            }
        };
        if doc.level != Level::Meta {
            return Err(reg(
                RegisterPredicate::IllegalOffer,
                "processing modules hold metadata documents only",
                bare(),
            ));
        }
        doc.check()
            .map_err(|e| reg(RegisterPredicate::IllegalOffer, e.to_string(), bare()))?;
        Ok(doc)
    }

    fn record_for(&self, doc: &Document) -> Offer {
        Offer::inline(project(doc, &self.indexed, &self.me, &self.ambient).to_document())
    }

    /// Applies a Register request locally, then mirrors it at the trader.
    /// A trader refusal undoes the local change; transport failures are
    /// returned as errors after the undo.
    fn register(&mut self, conv: &mut Conversation<'_>, body: &Body) -> Result<Body, String> {
        let Body::Register(Speech::Action { action, concepts }) = body else {
            return Err(format!(
                "{} received a Register predicate as a request",
                self.me
            ));
        };
        let bare = RegisterConcepts::default;
        if let Err(e) = validate_request(body) {
            let p = match (action, concepts.offer_id.is_some()) {
                (RegisterAction::Export, _) | (RegisterAction::Modify, true) => {
                    RegisterPredicate::IllegalOffer
                }
                _ => RegisterPredicate::IllegalOfferId,
            };
            return Ok(reg(p, e.to_string(), bare()));
        }
        let id = concepts.offer_id.clone().unwrap_or_default();
        if *action != RegisterAction::Export && !Repository::is_well_formed_id(&id) {
            return Ok(reg(
                RegisterPredicate::IllegalOfferId,
                format!("malformed offer id `{id}`"),
                bare(),
            ));
        }
        let unknown = |id: &str| {
            reg(
                RegisterPredicate::UnknownOfferId,
                format!("no document with id `{id}`"),
                bare(),
            )
        };
        match action {
            RegisterAction::Export => {
                let doc = match Self::resolve_offer(concepts.offer.as_ref().expect("validated")) {
                    Ok(d) => d,
                    Err(b) => return Ok(b),
                };
                let local = match self.repo.write().insert(doc) {
                    Ok(id) => id,
                    Err(StoreError::DuplicateId(id)) => {
                        return Ok(reg(
                            RegisterPredicate::DuplicateOffer,
                            format!("the document {id} already exists"),
                            bare(),
                        ))
                    }
                    Err(e) => {
                        return Ok(reg(RegisterPredicate::IllegalOffer, e.to_string(), bare()))
                    }
                };
                let record =
                    self.record_for(self.repo.read().fetch(&local).expect("just inserted"));
                let answer = conv.ask(
                    &self.trader,
                    Body::register(RegisterAction::Export, None, Some(record)),
                );
                match self.mirrored(answer, RegisterPredicate::ExportedOffer) {
                    Ok(trader_id) => {
                        self.records
                            .insert(local.clone(), trader_id.unwrap_or_default());
                        Ok(reg(
                            RegisterPredicate::ExportedOffer,
                            format!("stored as {local}"),
                            RegisterConcepts {
                                offer_id: Some(local),
                                offer: None,
                            },
                        ))
                    }
                    Err(refusal) => {
                        self.repo.write().remove(&local).expect("undo insert");
                        refusal
                    }
                }
            }
            RegisterAction::Modify => {
                let doc = match Self::resolve_offer(concepts.offer.as_ref().expect("validated")) {
                    Ok(d) => d,
                    Err(b) => return Ok(b),
                };
                let record = self.record_for(&Document {
                    doc_id: id.clone(),
                    ..doc.clone()
                });
                let old = match self.repo.write().replace(&id, doc) {
                    Ok(old) => old,
                    Err(StoreError::UnknownId(_)) => return Ok(unknown(&id)),
                    Err(e) => {
                        return Ok(reg(RegisterPredicate::IllegalOffer, e.to_string(), bare()))
                    }
                };
                let Some(trader_id) = self.records.get(&id).cloned() else {
                    return Ok(modified(&id));
                };
                let answer = conv.ask(
                    &self.trader,
                    Body::register(RegisterAction::Modify, Some(trader_id), Some(record)),
                );
                match self.mirrored(answer, RegisterPredicate::ModifiedOffer) {
                    Ok(_) => Ok(modified(&id)),
                    Err(refusal) => {
                        self.repo.write().replace(&id, old).expect("undo replace");
                        refusal
                    }
                }
            }
            RegisterAction::Withdraw => {
                let doc = match self.repo.write().remove(&id) {
                    Ok(d) => d,
                    Err(_) => return Ok(unknown(&id)),
                };
                if let Some(trader_id) = self.records.get(&id).cloned() {
                    let answer = conv.ask(
                        &self.trader,
                        Body::register(RegisterAction::Withdraw, Some(trader_id), None),
                    );
                    if let Err(refusal) = self.mirrored(answer, RegisterPredicate::WithdrawnOffer) {
                        self.repo.write().insert(doc).expect("undo remove");
                        return refusal;
                    }
                    self.records.remove(&id);
                }
                Ok(reg(
                    RegisterPredicate::WithdrawnOffer,
                    format!("{id} withdrawn"),
                    RegisterConcepts {
                        offer: Some(Offer::inline(doc)),
                        offer_id: None,
                    },
                ))
            }
            RegisterAction::Describe => Ok(match self.repo.read().fetch(&id) {
                Ok(doc) => reg(
                    RegisterPredicate::DescribedOffer,
                    format!("{id} described"),
                    RegisterConcepts {
                        offer: Some(Offer::inline(doc.clone())),
                        offer_id: None,
                    },
                ),
                Err(_) => unknown(&id),
            }),
        }
    }

    /// Interprets the trader's answer to a mirrored Register request:
    /// `Ok(offer id)` on `success`, otherwise `Err(Ok(refusal to pass on))`
    /// or `Err(Err(transport error))`.
    #[allow(clippy::type_complexity)]
    fn mirrored(
        &self,
        answer: Reply,
        success: RegisterPredicate,
    ) -> Result<Option<String>, Result<Body, String>> {
        match answer {
            Ok(Envelope {
                body:
                    Body::Register(Speech::Predicate {
                        predicate,
                        returned_message,
                        concepts,
                    }),
                ..
            }) => {
                if predicate == success {
                    Ok(concepts.offer_id)
                } else {
                    let msg = format!("{}: {returned_message}", self.trader);
                    Err(Ok(reg(predicate, msg, RegisterConcepts::default())))
                }
            }
            Ok(other) => Err(Err(format!(
                "{} answered {}",
                self.trader,
                other.body.name()
            ))),
            Err(e) => Err(Err(e)),
        }
    }
}

fn modified(id: &str) -> Body {
    reg(
        RegisterPredicate::ModifiedOffer,
        format!("{id} modified"),
        RegisterConcepts {
            offer_id: Some(id.to_string()),
            offer: None,
        },
    )
}

/// Federated forwards of a trader, sent through the network.
struct Via(Arc<Network>);

impl Forwarder for Via {
    fn forward(&self, request: Envelope) -> Result<Envelope, String> {
        self.0.request(request)
    }
}

/// Runs a trader: each request is answered on its own thread so lookups
/// proceed concurrently.
pub(super) fn trading(
    trader: Arc<Trader>,
    net: Arc<Network>,
    inbox: Receiver<Incoming>,
) -> thread::JoinHandle<()> {
    spawn(trader.id().to_string(), move || {
        for Incoming { env, reply, .. } in inbox {
            let (trader, net) = (trader.clone(), net.clone());
            thread::spawn(move || {
                let resp = trader.handle(&env, &Via(net));
                let _ = reply.send(Ok(resp));
            });
        }
    })
}

/// Service modules answer no ontology; they only hold the node's registry.
pub(super) fn service(me: String, inbox: Receiver<Incoming>) -> thread::JoinHandle<()> {
    spawn(me.clone(), move || {
        for Incoming { reply, .. } in inbox {
            let _ = reply.send(Err(format!("{me} answers no trader ontology")));
        }
    })
}
