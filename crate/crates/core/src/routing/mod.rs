//! Module runtime: management, query, trading, processing and service
//! modules as message-passing reactors, connected in process or over
//! loopback TCP, with every inter-module message recorded in a trace.
//!
//! Queries of type MetaMeta are answered by the query module's trader
//! alone. Meta queries are delegated: the trader locates the processing
//! modules holding candidate documents, which then answer the full query.

mod modules;
mod network;
mod runtime;
mod trace;

pub use network::{Network, NodeServer, USER};
pub use runtime::{RuntimeConfig, RuntimeError, System, Transport};
pub use trace::{
    check_conformance, in_matrix, kind_of, Conformance, Trace, TraceStep, Violation, USAGE_MATRIX,
};
