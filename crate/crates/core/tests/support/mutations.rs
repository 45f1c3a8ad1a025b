//! Seeded architecture mutations of the SOLERES model.

use ontotrader_core::model::{ModuleRef, SystemModel};

pub type Mutation = (&'static str, fn(&mut SystemModel), &'static [&'static str]);

/// Seeded architecture mutations and the rule ids each must yield.
pub const MUTATIONS: [Mutation; 12] = [
    (
        "drop the query module of Node_3",
        |s| s.nodes[2].query_modules.clear(),
        &["query-module-required"],
    ),
    (
        "drop every trader",
        |s| s.nodes.iter_mut().for_each(|n| n.trading_modules.clear()),
        // The references that named a trader dangle too.
        &["dangling-ref", "system-needs-trader"],
    ),
    (
        "drop every processing module",
        |s| {
            s.nodes
                .iter_mut()
                .for_each(|n| n.processing_modules.clear())
        },
        &["system-needs-processor"],
    ),
    (
        "federate with link disabled",
        |s| s.nodes[0].trading_modules[0].link = false,
        &["federation-link-disabled"],
    ),
    (
        "federate a trader with itself",
        |s| {
            s.nodes[1].trading_modules[0]
                .federated_with
                .push(ModuleRef::new("Node_2.TradingModule_2_1"))
        },
        &["federation-self"],
    ),
    (
        "dangling lookup reference",
        |s| s.nodes[0].query_modules[0].uses_lookup = ModuleRef::new("Node_1.TradingModule_9_9"),
        &["dangling-ref"],
    ),
    (
        "dangling register reference",
        |s| {
            s.nodes[0].processing_modules[0].uses_register =
                ModuleRef::new("Node_3.TradingModule_2_1")
        },
        &["dangling-ref"],
    ),
    (
        "federation edge to a query module",
        |s| {
            s.nodes[0].trading_modules[0].federated_with[0] =
                ModuleRef::new("Node_3.QueryModule_3_1")
        },
        &["dangling-ref"],
    ),
    (
        "lookup interface disabled",
        |s| s.nodes[1].trading_modules[0].lookup = false,
        &["trader-lookup-required"],
    ),
    (
        "register interface disabled",
        |s| s.nodes[1].trading_modules[0].register = false,
        &["trader-register-required"],
    ),
    (
        "port out of range",
        |s| s.nodes[1].port = 70_000,
        &["port-range"],
    ),
    (
        "malformed ip",
        |s| s.nodes[2].ip = "192.168.1".into(),
        &["ip-syntax"],
    ),
];
