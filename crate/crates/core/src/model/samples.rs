//! The three-node SOLERES-KRS deployment, built programmatically. Used by
//! tests across the workspace and as a ready-made topology for the runtime.

use super::*;

fn node(
    name: &str,
    ip: &str,
    suffix: &str,
    query_uses: &str,
    trader: Option<TradingModuleSpec>,
    processor: Option<ProcessingModuleSpec>,
) -> NodeSpec {
    let mut n = NodeSpec::new(name, ip, 1099, 3306);
    n.service_modules.push(ServiceModuleSpec {
        name: format!("ServiceModule_{suffix}"),
    });
    n.management_modules.push(ManagementModuleSpec {
        name: format!("ManagementModule_{suffix}"),
    });
    n.query_modules.push(QueryModuleSpec {
        name: format!("QueryModule_{suffix}"),
        uses_lookup: ModuleRef::new(query_uses),
    });
    n.trading_modules.extend(trader);
    n.processing_modules.extend(processor);
    n
}

/// Architecture of the SOLERES-KRS case study: three nodes, traders on the
/// first two, one processing module registering with the second trader.
pub fn soleres_system() -> SystemModel {
    let mut tm11 = TradingModuleSpec::new("TradingModule_1_1");
    tm11.link = true;
    tm11.federated_with
        .push(ModuleRef::new("Node_2.TradingModule_2_1"));
    let mut tm21 = TradingModuleSpec::new("TradingModule_2_1");
    tm21.link = true;
    SystemModel {
        name: "SOLERES_KRS".into(),
        nodes: vec![
            node(
                "Node_1",
                "192.168.1.11",
                "1_1",
                "TradingModule_1_1",
                Some(tm11),
                Some(ProcessingModuleSpec {
                    name: "ProcessingModule_1_1".into(),
                    ambient: "Ambient_1".into(),
                    uses_register: ModuleRef::new("Node_2.TradingModule_2_1"),
                }),
            ),
            node(
                "Node_2",
                "192.168.1.12",
                "2_1",
                "TradingModule_2_1",
                Some(tm21),
                None,
            ),
            node(
                "Node_3",
                "192.168.1.13",
                "3_1",
                "Node_2.TradingModule_2_1",
                None,
                None,
            ),
        ],
    }
}

/// The Java/JADE implementation repository: one platform, five simple modules.
pub fn soleres_repository() -> RepositoryModel {
    let modules = [
        "ServiceModule",
        "ManagementModule",
        "QueryModule",
        "TradingModule",
        "ProcessingModule",
    ]
    .iter()
    .map(|k| {
        ImplModule::Simple(SimpleImpl {
            name: format!("{k}Impl"),
            uri: format!("http://.../acg/rep/TKRS/{k}.class"),
            platform_ref: Some("Java_JADE".into()),
            super_ref: None,
        })
    })
    .collect();
    RepositoryModel {
        platforms: vec![Platform {
            name: "Java_JADE".into(),
            modules,
        }],
    }
}

/// Twelve statements binding every SOLERES module to its Java/JADE class,
/// written with the same qualified names as the published configuration.
pub fn soleres_configuration() -> ConfigurationModel {
    let sys = soleres_system();
    let mut statements = Vec::new();
    for n in &sys.nodes {
        let order = [
            ModuleKind::Service,
            ModuleKind::Management,
            ModuleKind::Query,
            ModuleKind::Trading,
            ModuleKind::Processing,
        ];
        for kind in order {
            for (k, m) in n.modules() {
                if k == kind {
                    statements.push(Statement {
                        arch_module: ModuleRef::new(format!("SOLERES.KRS.{}.{m}", n.name)),
                        impl_module: ModuleRef::new(format!(
                            "ACG_Repository.Java_JADE.{}Impl",
                            kind.keyword()
                        )),
                    });
                }
            }
        }
    }
    ConfigurationModel {
        package_name: "SOLERES_Configuration".into(),
        imports: vec![],
        statements,
    }
}
