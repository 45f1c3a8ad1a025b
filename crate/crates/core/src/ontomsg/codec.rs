use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use super::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("malformed message: {0}")]
    MalformedMessage(String),
    #[error("unknown {ontology} {kind} `{name}`")]
    UnknownVariant {
        ontology: String,
        kind: String,
        name: String,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireRecord {
    cid: String,
    ontology: String,
    kind: String,
    name: String,
    payload: Map<String, Value>,
    sender: String,
    receiver: String,
    visited: Vec<String>,
}

fn payload_of<A, P, C: Serialize>(s: &Speech<A, P, C>) -> Map<String, Value> {
    let mut map = match serde_json::to_value(s.concepts()) {
        Ok(Value::Object(m)) => m,
        _ => unreachable!("concept bundles serialize to objects"),
    };
    if let Speech::Predicate {
        returned_message, ..
    } = s
    {
        map.insert(
            "returned_message".into(),
            Value::String(returned_message.clone()),
        );
    }
    map
}

/// One LF-terminated JSON line.
pub fn encode(env: &Envelope) -> Vec<u8> {
    let payload = match &env.body {
        Body::Lookup(s) => payload_of(s),
        Body::Register(s) => payload_of(s),
        Body::Admin(s) => payload_of(s),
    };
    let record = WireRecord {
        cid: env.cid.clone(),
        ontology: env.ontology().name().into(),
        kind: env.kind().name().into(),
        name: env.body.name().into(),
        payload,
        sender: env.sender.clone(),
        receiver: env.receiver.clone(),
        visited: env.visited.iter().cloned().collect(),
    };
    let mut out = serde_json::to_vec(&record).expect("wire records always serialize");
    out.push(b'\n');
    out
}

fn malformed(e: impl std::fmt::Display) -> CodecError {
    CodecError::MalformedMessage(e.to_string())
}

fn speech<A, P, C: DeserializeOwned>(
    record: &WireRecord,
    kind: Kind,
    action: fn(&str) -> Option<A>,
    predicate: fn(&str) -> Option<P>,
) -> Result<Speech<A, P, C>, CodecError> {
    let unknown = || CodecError::UnknownVariant {
        ontology: record.ontology.clone(),
        kind: record.kind.clone(),
        name: record.name.clone(),
    };
    let mut payload = record.payload.clone();
    match kind {
        Kind::Action => {
            let action = action(&record.name).ok_or_else(unknown)?;
            let concepts = serde_json::from_value(Value::Object(payload)).map_err(malformed)?;
            Ok(Speech::Action { action, concepts })
        }
        Kind::Predicate => {
            let predicate = predicate(&record.name).ok_or_else(unknown)?;
            let returned_message = match payload.remove("returned_message") {
                Some(Value::String(s)) => s,
                _ => return Err(malformed("predicate without a returned_message string")),
            };
            let concepts = serde_json::from_value(Value::Object(payload)).map_err(malformed)?;
            Ok(Speech::Predicate {
                predicate,
                returned_message,
                concepts,
            })
        }
    }
}

/// Parses one line produced by [`encode`]; the trailing LF is optional.
pub fn decode(bytes: &[u8]) -> Result<Envelope, CodecError> {
    let line = bytes.strip_suffix(b"\n").unwrap_or(bytes);
    let record: WireRecord = serde_json::from_slice(line).map_err(malformed)?;
    let ontology = Ontology::from_name(&record.ontology)
        .ok_or_else(|| malformed(format!("unknown ontology `{}`", record.ontology)))?;
    let kind = Kind::from_name(&record.kind)
        .ok_or_else(|| malformed(format!("unknown kind `{}`", record.kind)))?;
    let body = match ontology {
        Ontology::Lookup => Body::Lookup(speech(
            &record,
            kind,
            LookupAction::from_name,
            LookupPredicate::from_name,
        )?),
        Ontology::Register => Body::Register(speech(
            &record,
            kind,
            RegisterAction::from_name,
            RegisterPredicate::from_name,
        )?),
        Ontology::Admin => Body::Admin(speech(
            &record,
            kind,
            AdminAction::from_name,
            AdminPredicate::from_name,
        )?),
    };
    Ok(Envelope {
        cid: record.cid,
        sender: record.sender,
        receiver: record.receiver,
        visited: record.visited.into_iter().collect(),
        body,
    })
}
