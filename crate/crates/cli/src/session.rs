use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ontotrader_core::model::ModuleKind;
use ontotrader_core::ontomsg::{
    AdminAction, AdminConcepts, Body, Envelope, Offer, QueryForm, RegisterAction, Speech,
};
use ontotrader_core::routing::{kind_of, RuntimeError, System};
use ontotrader_core::store::load_document;

use crate::script::{AdminParam, Command};

/// How a command ended, ordered by severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Ok,
    /// The command was malformed or its answer was a failure predicate.
    Refused,
    /// Transport or runtime failure.
    Failed,
}

const SUCCESS: [&str; 12] = [
    "EmptyOfferSeq",
    "NotEmptyOfferSeq",
    "ExportedOffer",
    "ModifiedOffer",
    "WithdrawnOffer",
    "DescribedOffer",
    "ModifiedDef_search_card",
    "ModifiedMax_search_card",
    "ModifiedOffer_repos",
    "ReturnedDef_search_card",
    "ReturnedMax_search_card",
    "ReturnedOffer_repos",
];

fn offer(doc: &Path) -> Result<Offer, String> {
    load_document(doc)
        .map(Offer::inline)
        .map_err(|e| format!("error: {e}"))
}

pub struct Session<'a> {
    system: &'a System,
    queries: usize,
}

impl<'a> Session<'a> {
    pub fn new(system: &'a System) -> Self {
        Session { system, queries: 0 }
    }

    /// Runs one command; the text is what the user sees.
    pub fn run(&mut self, cmd: Command) -> (Status, String) {
        let sys = self.system;
        let sent = match cmd {
            Command::Query {
                node,
                query_type,
                policies,
                body,
            } => {
                self.queries += 1;
                let form = QueryForm::inline(format!("q{}", self.queries), query_type, body);
                sys.query(&node, form, (!policies.is_empty()).then_some(policies))
            }
            Command::QueryFile {
                node,
                form,
                policies,
            } => {
                let form: QueryForm = match fs::read_to_string(&form)
                    .map_err(|e| e.to_string())
                    .and_then(|t| serde_json::from_str(&t).map_err(|e| e.to_string()))
                {
                    Ok(f) => f,
                    Err(e) => return (Status::Refused, format!("error: {}: {e}", form.display())),
                };
                sys.query(&node, form, (!policies.is_empty()).then_some(policies))
            }
            Command::Export { processing, doc } => match offer(&doc) {
                Ok(o) => sys.register(
                    &processing,
                    Body::register(RegisterAction::Export, None, Some(o)),
                ),
                Err(e) => return (Status::Refused, e),
            },
            Command::Modify {
                processing,
                id,
                doc,
            } => match offer(&doc) {
                Ok(o) => sys.register(
                    &processing,
                    Body::register(RegisterAction::Modify, Some(id), Some(o)),
                ),
                Err(e) => return (Status::Refused, e),
            },
            Command::Withdraw { processing, id } => sys.register(
                &processing,
                Body::register(RegisterAction::Withdraw, Some(id), None),
            ),
            Command::Describe { processing, id } => sys.register(
                &processing,
                Body::register(RegisterAction::Describe, Some(id), None),
            ),
            Command::AdminSet {
                trader,
                param,
                value,
            } => {
                let mut c = AdminConcepts::default();
                let number = || {
                    value
                        .parse::<i64>()
                        .map_err(|_| format!("error: `{value}` is not an integer"))
                };
                let action = match param {
                    AdminParam::Def => match number() {
                        Ok(v) => {
                            c.def = Some(v);
                            AdminAction::SetDefSearchCard
                        }
                        Err(e) => return (Status::Refused, e),
                    },
                    AdminParam::Max => match number() {
                        Ok(v) => {
                            c.max = Some(v);
                            AdminAction::SetMaxSearchCard
                        }
                        Err(e) => return (Status::Refused, e),
                    },
                    AdminParam::Repos => {
                        c.offer_repos = Some(value.clone());
                        AdminAction::SetOfferRepos
                    }
                };
                sys.admin(&trader, Body::admin(action, c))
            }
            Command::AdminGet { trader, param } => {
                let action = match param {
                    AdminParam::Def => AdminAction::GetDefSearchCard,
                    AdminParam::Max => AdminAction::GetMaxSearchCard,
                    AdminParam::Repos => AdminAction::GetOfferRepos,
                };
                sys.admin(&trader, Body::admin(action, AdminConcepts::default()))
            }
        };
        match sent {
            Ok(reply) => {
                let status = if SUCCESS.contains(&reply.body.name()) {
                    Status::Ok
                } else {
                    Status::Refused
                };
                (status, self.describe(&reply))
            }
            Err(e @ (RuntimeError::UnknownModule(_) | RuntimeError::NoManagement(_))) => {
                (Status::Refused, format!("error: {e}"))
            }
            Err(e) => (Status::Failed, format!("error: {e}")),
        }
    }

    fn describe(&self, reply: &Envelope) -> String {
        let mut out = String::from(reply.body.name());
        if let Some(m) = reply.body.returned_message().filter(|m| !m.is_empty()) {
            let _ = write!(out, ": {m}");
        }
        out.push('\n');
        match &reply.body {
            Body::Lookup(Speech::Predicate { concepts, .. }) => {
                let offers = concepts.offers.as_ref().map_or(&[][..], |o| &o.offers[..]);
                let entries = concepts
                    .matches
                    .as_ref()
                    .map_or(&[][..], |m| &m.entries[..]);
                for (i, doc) in offers.iter().enumerate() {
                    let json = serde_json::to_string(&doc.fields).unwrap_or_default();
                    match entries.get(i) {
                        Some(e) => {
                            let _ = writeln!(
                                out,
                                "  {:>3}% {} {} {json}",
                                e.percentage, e.origin, e.doc_id
                            );
                        }
                        None => {
                            let _ = writeln!(out, "  {} {json}", doc.doc_id);
                        }
                    }
                }
            }
            Body::Register(Speech::Predicate { concepts, .. }) => {
                if let Some(id) = &concepts.offer_id {
                    let _ = writeln!(out, "  offer {id}");
                }
                if let Some(doc) = concepts.offer.as_ref().and_then(|o| o.document.as_ref()) {
                    let json = serde_json::to_string(&doc.fields).unwrap_or_default();
                    let _ = writeln!(out, "  {} {json}", doc.doc_id);
                }
            }
            Body::Admin(Speech::Predicate { concepts, .. }) => {
                for (name, v) in [
                    ("def_search_card", concepts.def),
                    ("max_search_card", concepts.max),
                ] {
                    if let Some(v) = v {
                        let _ = writeln!(out, "  {name} {v}");
                    }
                }
                if let Some(r) = &concepts.offer_repos {
                    let _ = writeln!(out, "  offer_repos {r}");
                }
            }
            _ => {}
        }
        let steps = self.system.trace().conversation(&reply.cid);
        let model = self.system.model();
        let of_kind = |k: ModuleKind| -> Vec<&str> {
            let set: BTreeSet<&str> = steps
                .iter()
                .flat_map(|s| [s.from.as_str(), s.to.as_str()])
                .filter(|a| kind_of(model, a) == Some(k))
                .collect();
            set.into_iter().collect()
        };
        let _ = writeln!(
            out,
            "  trace: {} steps; traders [{}]; processing [{}]",
            steps.len(),
            of_kind(ModuleKind::Trading).join(", "),
            of_kind(ModuleKind::Processing).join(", ")
        );
        out
    }
}
