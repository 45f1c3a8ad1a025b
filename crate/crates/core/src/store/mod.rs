//! Metadata documents, meta-metadata records and the conjunctive query
//! language that ranks them.

mod eval;
mod files;
mod repo;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use eval::{evaluate, evaluate_sequential, match_score, percentage, rank_order};
pub use files::{load_dir, load_document, write_document};
pub use repo::{Repository, SharedRepository};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
}

impl Scalar {
    fn type_name(&self) -> &'static str {
        match self {
            Scalar::Int(_) | Scalar::Float(_) => "number",
            Scalar::Str(_) => "string",
            Scalar::Bool(_) => "bool",
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Int(v) => write!(f, "{v}"),
            Scalar::Float(v) => write!(f, "{v}"),
            Scalar::Str(v) => write!(f, "{v:?}"),
            Scalar::Bool(v) => write!(f, "{v}"),
        }
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::Int(v)
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Float(v)
    }
}

impl From<&str> for Scalar {
    fn from(v: &str) -> Self {
        Scalar::Str(v.to_string())
    }
}

impl From<bool> for Scalar {
    fn from(v: bool) -> Self {
        Scalar::Bool(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Scalar(Scalar),
    List(Vec<Scalar>),
}

impl<T: Into<Scalar>> From<T> for Value {
    fn from(v: T) -> Self {
        Value::Scalar(v.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    /// Level 2: documents held by processing modules.
    Meta,
    /// Level 3: projections held by traders.
    MetaMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub level: Level,
    pub fields: BTreeMap<String, Value>,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, level: Level) -> Self {
        Document {
            doc_id: doc_id.into(),
            level,
            fields: BTreeMap::new(),
        }
    }

    pub fn with(mut self, path: &str, v: impl Into<Value>) -> Self {
        self.fields.insert(path.to_string(), v.into());
        self
    }

    pub fn get(&self, path: &str) -> Option<&Value> {
        self.fields.get(path)
    }

    /// Structural checks: non-empty paths and finite numbers.
    pub fn check(&self) -> Result<(), StoreError> {
        for (path, v) in &self.fields {
            if path.is_empty() {
                return Err(StoreError::IllegalDocument("empty field path".into()));
            }
            let finite = |s: &Scalar| !matches!(s, Scalar::Float(f) if !f.is_finite());
            let ok = match v {
                Value::Scalar(s) => finite(s),
                Value::List(l) => l.iter().all(finite),
            };
            if !ok {
                return Err(StoreError::IllegalDocument(format!(
                    "`{path}` holds a non-finite number"
                )));
            }
        }
        Ok(())
    }

    /// Copy restricted to `paths`; paths absent from the document are skipped.
    pub fn restricted(&self, paths: &[String]) -> Document {
        Document {
            doc_id: self.doc_id.clone(),
            level: self.level,
            fields: paths
                .iter()
                .filter_map(|p| self.fields.get_key_value(p))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Contains,
}

impl Op {
    pub const ALL: [Op; 7] = [Op::Eq, Op::Ne, Op::Lt, Op::Le, Op::Gt, Op::Ge, Op::Contains];

    pub fn as_str(self) -> &'static str {
        match self {
            Op::Eq => "eq",
            Op::Ne => "ne",
            Op::Lt => "lt",
            Op::Le => "le",
            Op::Gt => "gt",
            Op::Ge => "ge",
            Op::Contains => "contains",
        }
    }

    pub fn parse(s: &str) -> Option<Op> {
        Op::ALL.into_iter().find(|o| o.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub path: String,
    pub op: Op,
    pub literal: Scalar,
}

impl Condition {
    pub fn new(path: &str, op: Op, literal: impl Into<Scalar>) -> Self {
        Condition {
            path: path.to_string(),
            op,
            literal: literal.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Asc,
    Desc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryBody {
    pub conditions: Vec<Condition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<Vec<String>>,
    /// Secondary sort key, applied between percentage and doc_id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order_by: Option<(String, Direction)>,
}

impl QueryBody {
    pub fn new(conditions: Vec<Condition>) -> Self {
        QueryBody {
            conditions,
            projection: None,
            order_by: None,
        }
    }

    /// Checks that do not depend on any document.
    pub fn check(&self) -> Result<(), StoreError> {
        if self.conditions.is_empty() {
            return Err(StoreError::EmptyQuery);
        }
        for c in &self.conditions {
            if c.path.is_empty() {
                return Err(StoreError::IllegalQuery("condition with empty path".into()));
            }
            match (&c.literal, c.op) {
                (Scalar::Float(f), _) if !f.is_finite() => {
                    return Err(StoreError::IllegalQuery(format!(
                        "`{}`: non-finite literal",
                        c.path
                    )));
                }
                (Scalar::Bool(_), Op::Eq | Op::Ne) => {}
                (Scalar::Bool(_), op) => {
                    return Err(StoreError::TypeMismatch {
                        path: c.path.clone(),
                        detail: format!("`{}` cannot compare booleans", op.as_str()),
                    });
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Effective result policies after clamping against the trader's limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EffectivePolicies {
    pub cardinality: usize,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub doc_id: String,
    pub percentage: u8,
}

/// Reserved field names a meta-metadata document uses to remember its source.
pub const ORIGIN_MODULE: &str = "_origin.module";
pub const ORIGIN_AMBIENT: &str = "_origin.ambient";
pub const ORIGIN_DOC_ID: &str = "_origin.doc_id";

#[derive(Debug, Clone, PartialEq)]
pub struct MetaMetaRecord {
    /// Empty until the trader assigns one.
    pub record_id: String,
    pub source_processing_module: String,
    pub ambient: String,
    pub source_doc_id: String,
    pub indexed_fields: BTreeMap<String, Value>,
}

impl MetaMetaRecord {
    pub fn to_document(&self) -> Document {
        let mut fields = self.indexed_fields.clone();
        fields.insert(
            ORIGIN_MODULE.into(),
            self.source_processing_module.as_str().into(),
        );
        fields.insert(ORIGIN_AMBIENT.into(), self.ambient.as_str().into());
        fields.insert(ORIGIN_DOC_ID.into(), self.source_doc_id.as_str().into());
        Document {
            doc_id: self.record_id.clone(),
            level: Level::MetaMeta,
            fields,
        }
    }

    /// Inverse of [`MetaMetaRecord::to_document`]; `None` if an origin field is missing.
    pub fn from_document(doc: &Document) -> Option<Self> {
        let text = |k: &str| match doc.fields.get(k) {
            Some(Value::Scalar(Scalar::Str(s))) => Some(s.clone()),
            _ => None,
        };
        Some(MetaMetaRecord {
            record_id: doc.doc_id.clone(),
            source_processing_module: text(ORIGIN_MODULE)?,
            ambient: text(ORIGIN_AMBIENT)?,
            source_doc_id: text(ORIGIN_DOC_ID)?,
            indexed_fields: doc
                .fields
                .iter()
                .filter(|(k, _)| !k.starts_with("_origin."))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        })
    }
}

/// Builds the trader-level record for a level-2 document.
pub fn project(
    doc: &Document,
    indexed_paths: &[String],
    origin: &str,
    ambient: &str,
) -> MetaMetaRecord {
    MetaMetaRecord {
        record_id: String::new(),
        source_processing_module: origin.to_string(),
        ambient: ambient.to_string(),
        source_doc_id: doc.doc_id.clone(),
        indexed_fields: doc.restricted(indexed_paths).fields,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("type mismatch at `{path}`: {detail}")]
    TypeMismatch { path: String, detail: String },
    #[error("query has no conditions")]
    EmptyQuery,
    #[error("illegal query: {0}")]
    IllegalQuery(String),
    #[error("illegal document: {0}")]
    IllegalDocument(String),
    #[error("document `{0}` already exists")]
    DuplicateId(String),
    #[error("no document `{0}`")]
    UnknownId(String),
    #[error("{path}: {detail}")]
    Io { path: String, detail: String },
}
