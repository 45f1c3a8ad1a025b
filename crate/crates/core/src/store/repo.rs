use std::collections::BTreeMap;
use std::sync::Arc;

use parking_lot::RwLock;

use super::{Document, Level, StoreError};

/// Readers share, writers are exclusive; each operation is applied whole.
pub type SharedRepository = Arc<RwLock<Repository>>;

/// Documents of one level keyed by id. Generated ids are
/// `<prefix><separator><n>` with `n` strictly increasing and never reused.
#[derive(Debug, Clone)]
pub struct Repository {
    level: Level,
    prefix: String,
    separator: char,
    docs: BTreeMap<String, Document>,
    counter: u64,
}

impl Repository {
    pub fn new(level: Level, prefix: impl Into<String>, separator: char) -> Self {
        Repository {
            level,
            prefix: prefix.into(),
            separator,
            docs: BTreeMap::new(),
            counter: 0,
        }
    }

    pub fn shared(self) -> SharedRepository {
        Arc::new(RwLock::new(self))
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Documents in id order.
    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.docs.values()
    }

    /// Ids must be non-empty and free of whitespace and control characters.
    pub fn is_well_formed_id(id: &str) -> bool {
        !id.is_empty() && !id.chars().any(|c| c.is_whitespace() || c.is_control())
    }

    fn accept(&self, doc: &Document) -> Result<(), StoreError> {
        if doc.level != self.level {
            return Err(StoreError::IllegalDocument(format!(
                "expected a {:?} document, got {:?}",
                self.level, doc.level
            )));
        }
        doc.check()
    }

    /// Stores `doc`, assigning a fresh id when its id is empty.
    pub fn insert(&mut self, mut doc: Document) -> Result<String, StoreError> {
        self.accept(&doc)?;
        if doc.doc_id.is_empty() {
            loop {
                self.counter += 1;
                let id = format!("{}{}{}", self.prefix, self.separator, self.counter);
                if !self.docs.contains_key(&id) {
                    doc.doc_id = id;
                    break;
                }
            }
        } else if !Self::is_well_formed_id(&doc.doc_id) {
            return Err(StoreError::IllegalDocument(format!(
                "malformed id `{}`",
                doc.doc_id
            )));
        } else if self.docs.contains_key(&doc.doc_id) {
            return Err(StoreError::DuplicateId(doc.doc_id));
        }
        let id = doc.doc_id.clone();
        self.docs.insert(id.clone(), doc);
        Ok(id)
    }

    /// Replaces the document stored under `id`; the new document takes that id.
    pub fn replace(&mut self, id: &str, mut doc: Document) -> Result<Document, StoreError> {
        self.accept(&doc)?;
        let slot = self
            .docs
            .get_mut(id)
            .ok_or_else(|| StoreError::UnknownId(id.to_string()))?;
        doc.doc_id = id.to_string();
        Ok(std::mem::replace(slot, doc))
    }

    pub fn remove(&mut self, id: &str) -> Result<Document, StoreError> {
        self.docs
            .remove(id)
            .ok_or_else(|| StoreError::UnknownId(id.to_string()))
    }

    pub fn fetch(&self, id: &str) -> Result<&Document, StoreError> {
        self.docs
            .get(id)
            .ok_or_else(|| StoreError::UnknownId(id.to_string()))
    }
}
