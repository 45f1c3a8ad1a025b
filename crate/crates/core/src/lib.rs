//! Ontological trading service: metamodels, trader protocols, a three-level
//! document store and the query-routing runtime.

pub mod model;
pub mod ontomsg;
pub mod routing;
pub mod store;
pub mod trader;
