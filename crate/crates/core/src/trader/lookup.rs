use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::sync::atomic::Ordering;

use crate::ontomsg::{
    Body, Envelope, LookupConcepts, LookupPredicate, MatchEntry, OfferSeq, OfferSeqMatch, Policy,
    QueryForm, Speech,
};
use crate::store::{evaluate, Document, QueryBody};

use super::{resolve_policies, Trader};

/// Carries a trader's outbound federated requests.
pub trait Forwarder {
    /// Delivers `request` to `request.receiver` and waits for the reply.
    fn forward(&self, request: Envelope) -> Result<Envelope, String>;
}

/// For traders without a transport: every forward fails.
pub struct NoForwarding;

impl Forwarder for NoForwarding {
    fn forward(&self, request: Envelope) -> Result<Envelope, String> {
        Err(format!("no route to {}", request.receiver))
    }
}

fn failure(p: LookupPredicate, msg: impl Into<String>) -> Body {
    Body::lookup_reply(p, msg, LookupConcepts::default())
}

fn read_form(uri: &str) -> Result<QueryBody, String> {
    let text = fs::read_to_string(uri).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

/// Writes the result files next to the form file; returns their locators.
fn write_results(
    uri: &str,
    offers: &[Document],
    entries: &[MatchEntry],
) -> std::io::Result<(String, String)> {
    let offers_path = format!("{uri}.offers.json");
    let matches_path = format!("{uri}.matches.json");
    fs::write(Path::new(&offers_path), serde_json::to_vec_pretty(offers)?)?;
    fs::write(
        Path::new(&matches_path),
        serde_json::to_vec_pretty(entries)?,
    )?;
    Ok((offers_path, matches_path))
}

impl Trader {
    /// Number of local evaluations performed so far.
    pub fn evaluations(&self) -> usize {
        self.evaluations.load(Ordering::SeqCst)
    }

    pub(super) fn lookup(
        &self,
        req: &Envelope,
        form: &QueryForm,
        policies: &[Policy],
        fwd: &dyn Forwarder,
    ) -> (Body, BTreeSet<String>) {
        if req.visited.contains(&self.id) {
            let body = failure(
                LookupPredicate::EmptyOfferSeq,
                format!("{} already answered this query", self.id),
            );
            return (body, req.visited.clone());
        }
        let mut visited = req.visited.clone();
        visited.insert(self.id.clone());

        let query = match (&form.uri, &form.inline_body) {
            (Some(uri), _) => match read_form(uri) {
                Ok(q) => q,
                Err(e) => {
                    let msg = format!(
                        "the query form specified in the uri was not accessible: {uri}: {e}"
                    );
                    return (failure(LookupPredicate::UnknownQueryForm, msg), visited);
                }
            },
            (None, Some(q)) => q.clone(),
            (None, None) => unreachable!("validated"),
        };
        let (def, max) = {
            let s = self.settings.read();
            (s.def_search_card, s.max_search_card)
        };
        let effective = match resolve_policies(policies, def, max) {
            Ok(e) => e,
            Err((p, msg)) => return (failure(p, msg), visited),
        };

        let projected = |d: &Document| match &query.projection {
            Some(paths) => d.restricted(paths),
            None => d.clone(),
        };
        // The read lock is released before any federated forward.
        let mut found: Vec<(Document, MatchEntry)> = {
            let repo = self.repo.read();
            self.evaluations.fetch_add(1, Ordering::SeqCst);
            match evaluate(&repo, &query, effective) {
                Ok(hits) => hits
                    .into_iter()
                    .map(|m| {
                        let doc = projected(
                            repo.fetch(&m.doc_id)
                                .expect("hit comes from this repository"),
                        );
                        let entry = MatchEntry {
                            doc_id: m.doc_id,
                            percentage: m.percentage,
                            origin: self.id.clone(),
                        };
                        (doc, entry)
                    })
                    .collect(),
                Err(e) => return (failure(LookupPredicate::QueryError, e.to_string()), visited),
            }
        };

        let links = self.links();
        if (found.len() < effective.cardinality || self.federate_always) && !links.is_empty() {
            let mut merged: BTreeMap<(String, String), (Document, MatchEntry)> = found
                .drain(..)
                .map(|(d, e)| ((e.origin.clone(), e.doc_id.clone()), (d, e)))
                .collect();
            let mut forwarded = 0;
            for link in links {
                if visited.contains(&link) {
                    continue;
                }
                forwarded += 1;
                let mut inline = form.clone();
                inline.uri = None;
                inline.inline_body = Some(query.clone());
                let mut out = Envelope::new(
                    format!("{}.{forwarded}", req.cid),
                    self.id.clone(),
                    link.clone(),
                    Body::query(inline, Some(policies.to_vec())),
                );
                out.visited = visited.clone();
                match fwd.forward(out) {
                    Ok(resp) => {
                        visited.extend(resp.visited.iter().cloned());
                        if let Body::Lookup(Speech::Predicate {
                            predicate: LookupPredicate::NotEmptyOfferSeq,
                            concepts,
                            ..
                        }) = resp.body
                        {
                            let offers = concepts.offers.map(|o| o.offers).unwrap_or_default();
                            let entries = concepts.matches.map(|m| m.entries).unwrap_or_default();
                            for (d, e) in offers.into_iter().zip(entries) {
                                merged
                                    .entry((e.origin.clone(), e.doc_id.clone()))
                                    .or_insert((d, e));
                            }
                        } else {
                            log::debug!("{}: {} answered {}", self.id, link, resp.body.name());
                        }
                    }
                    Err(e) => log::warn!("{}: federated lookup at {link} failed: {e}", self.id),
                }
            }
            found = merged.into_values().collect();
            found.sort_by(|(_, a), (_, b)| {
                b.percentage
                    .cmp(&a.percentage)
                    .then_with(|| a.origin.cmp(&b.origin))
                    .then_with(|| a.doc_id.cmp(&b.doc_id))
            });
            found.truncate(effective.cardinality);
        }

        if found.is_empty() {
            return (
                failure(LookupPredicate::EmptyOfferSeq, "no document was returned"),
                visited,
            );
        }
        let (offers, entries): (Vec<Document>, Vec<MatchEntry>) = found.into_iter().unzip();
        let (mut offers_uri, mut matches_uri) = (None, None);
        if let Some(uri) = &form.uri {
            match write_results(uri, &offers, &entries) {
                Ok((o, m)) => (offers_uri, matches_uri) = (Some(o), Some(m)),
                Err(e) => log::warn!("{}: could not write results next to {uri}: {e}", self.id),
            }
        }
        let n = offers.len();
        let body = Body::lookup_reply(
            LookupPredicate::NotEmptyOfferSeq,
            format!("{n} document(s) found"),
            LookupConcepts {
                offers: Some(OfferSeq {
                    uri: offers_uri,
                    offers,
                }),
                matches: Some(OfferSeqMatch {
                    uri: matches_uri,
                    entries,
                }),
                ..Default::default()
            },
        );
        (body, visited)
    }
}
