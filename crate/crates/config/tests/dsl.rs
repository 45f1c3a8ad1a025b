use std::path::PathBuf;

use ontotrader_config::dsl::{is_keyword, link, parse, parse_source, print, Code, PackageModel};
use ontotrader_core::model::{
    CompositeImpl, ImplModule, ManagementModuleSpec, ModuleRef, NodeSpec, Platform,
    ProcessingModuleSpec, QueryModuleSpec, RepositoryModel, ServiceModuleSpec, SimpleImpl,
    Statement, SystemModel, TradingModuleSpec,
};
use proptest::prelude::*;

fn fixture(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/soleres")
        .join(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

const FIXTURES: [&str; 3] = [
    "architecture.config",
    "repository.config",
    "configuration.config",
];

fn soleres() -> Vec<PackageModel> {
    FIXTURES
        .iter()
        .map(|f| parse_source(f, &fixture(f)).unwrap())
        .collect()
}

#[test]
fn architecture_fixture() {
    let p = parse(&fixture("architecture.config")).unwrap();
    let sys = p.tkrs.unwrap();
    assert_eq!(sys.name, "SOLERES_KRS");
    assert_eq!(sys.nodes.len(), 3);
    assert_eq!(sys.nodes[0].modules().len(), 5);
    assert_eq!(sys.nodes[0].ip, "192.168.1.11");
    assert_eq!(
        sys.nodes[0].trading_modules[0].federated_with,
        [ModuleRef::new("Node_2.TradingModule_2_1")]
    );
    assert_eq!(sys, ontotrader_core::model::samples::soleres_system());
}

#[test]
fn repository_fixture() {
    let p = parse(&fixture("repository.config")).unwrap();
    let repo = p.repository.unwrap();
    assert_eq!(repo.platforms.len(), 1);
    assert_eq!(repo.platforms[0].name, "Java_JADE");
    assert_eq!(repo.platforms[0].modules.len(), 5);
    assert!(repo.platforms[0]
        .modules
        .iter()
        .all(|m| m.uri().starts_with("http://.../acg/rep/TKRS/")));
    assert_eq!(repo, ontotrader_core::model::samples::soleres_repository());
}

#[test]
fn printing_a_fixture_reproduces_it() {
    for f in FIXTURES {
        let text = fixture(f);
        assert_eq!(print(&parse(&text).unwrap()), text, "{f}");
    }
    let cfg = print(&parse(&fixture("configuration.config")).unwrap());
    assert_eq!(cfg.matches("Statement {").count(), 12);
}

/// Byte offsets of keywords outside string literals.
fn keyword_offsets(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut in_string = false;
    let mut word_start = None;
    for (i, c) in text.char_indices().chain([(text.len(), ' ')]) {
        if c == '"' {
            in_string = !in_string;
        }
        let word_char = c.is_ascii_alphanumeric() || c == '_';
        match (word_start, word_char && !in_string) {
            (None, true) => word_start = Some(i),
            (Some(s), false) => {
                if is_keyword(&text[s..i]) && !text[..s].ends_with('^') {
                    out.push((s, &text[s..i]));
                }
                word_start = None;
            }
            _ => {}
        }
    }
    out
}

#[test]
fn every_keyword_mutation_is_diagnosed() {
    let mut mutations = 0;
    for f in FIXTURES {
        let text = fixture(f);
        for (at, kw) in keyword_offsets(&text) {
            let mut flipped = kw.to_string();
            let first = flipped.remove(0);
            let flipped = format!(
                "{}{flipped}",
                if first.is_uppercase() {
                    first.to_ascii_lowercase()
                } else {
                    first.to_ascii_uppercase()
                }
            );
            for variant in [format!("{kw}x"), kw[..kw.len() - 1].to_string(), flipped] {
                let mutated = format!("{}{variant}{}", &text[..at], &text[at + kw.len()..]);
                let diags = parse(&mutated).err().unwrap_or_default();
                assert!(
                    !diags.is_empty(),
                    "{f}: `{kw}` -> `{variant}` at byte {at} was accepted"
                );
                mutations += 1;
            }
        }
    }
    assert!(mutations > 300, "only {mutations} mutations");
}

#[test]
fn missing_final_brace_is_reported_at_end_of_input() {
    let text = fixture("architecture.config");
    let cut = text.trim_end().strip_suffix('}').unwrap();
    let err = parse(cut).unwrap_err();
    assert_eq!(err.len(), 1);
    assert_eq!(err[0].message, "expected `}`, found end of input");
    assert_eq!(err[0].span.line, cut.matches('\n').count() + 1);
}

#[test]
fn diagnostics_carry_the_file_name() {
    let err = parse_source("broken.config", "Package P\nTKRS T {\n  Nod").unwrap_err();
    assert_eq!(
        err[0].to_string(),
        "broken.config:3:3: expected `Node`, found `Nod`"
    );
}

#[test]
fn soleres_packages_link() {
    let linked = link(&soleres()).unwrap();
    assert_eq!(linked.bindings.len(), 12);
    assert_eq!(linked.bindings[3].node, "Node_1");
    assert_eq!(linked.bindings[3].module, "TradingModule_1_1");
    assert_eq!(
        linked.bindings[3].implementation.uri,
        "http://.../acg/rep/TKRS/TradingModule.class"
    );
    // One warning per unmatched qualifier, not per reference.
    let warnings: Vec<String> = linked.warnings.iter().map(ToString::to_string).collect();
    assert_eq!(warnings.len(), 2, "{warnings:#?}");
    assert!(warnings
        .iter()
        .all(|w| w.starts_with("configuration.config:") && w.contains("12 references")));
    assert!(linked
        .warnings
        .iter()
        .all(|w| w.code == Code::QualifierMismatch));
}

#[test]
fn configuration_alone_leaves_every_statement_unresolved() {
    let err = link(&[parse(&fixture("configuration.config")).unwrap()]).unwrap_err();
    assert_eq!(err.len(), 12);
    assert!(err.iter().all(|d| d.code == Code::UnresolvedReference));
    assert_eq!(err[0].span.line, 5);
}

#[test]
fn three_package_import_cycle() {
    let pkgs = [
        "Package A import B.*",
        "Package B import C.*",
        "Package C import A.*",
    ]
    .map(|t| parse(t).unwrap());
    let err = link(&pkgs).unwrap_err();
    assert_eq!(err.len(), 1);
    assert_eq!(err[0].code, Code::ImportCycle);
}

#[test]
fn imports_between_the_fixtures_link() {
    let mut pkgs = soleres();
    pkgs[2].imports = vec!["SOLERES.*".into(), "UAL_Repository.*".into()];
    assert!(link(&pkgs).is_ok());
}

fn arb_name() -> impl Strategy<Value = String> {
    prop_oneof![
        6 => "[A-Za-z_][A-Za-z0-9_]{0,8}",
        1 => prop::sample::select(vec!["Node", "true", "uri", "Package"]).prop_map(String::from),
        2 => "[ -~]{0,10}",
        1 => Just("tab\tquote\"back\\slash".to_string()),
    ]
}

fn arb_ref() -> impl Strategy<Value = ModuleRef> {
    prop::collection::vec("[A-Za-z_][A-Za-z0-9_]{0,6}", 1..4)
        .prop_map(|s| ModuleRef::new(s.join(".")))
}

fn arb_node() -> impl Strategy<Value = NodeSpec> {
    let trader = (
        arb_name(),
        prop::array::uniform5(any::<bool>()),
        prop::collection::vec(arb_ref(), 0..3),
    )
        .prop_map(|(name, f, federated_with)| TradingModuleSpec {
            name,
            lookup: f[0],
            register: f[1],
            admin: f[2],
            link: f[3],
            proxy: f[4],
            federated_with,
        });
    let processor =
        (arb_name(), arb_name(), arb_ref()).prop_map(|(name, ambient, uses_register)| {
            ProcessingModuleSpec {
                name,
                ambient,
                uses_register,
            }
        });
    (
        arb_name(),
        "[0-9.]{0,15}",
        any::<u32>(),
        any::<u32>(),
        (arb_name(), arb_name()),
        prop::collection::vec((arb_name(), arb_ref()), 1..3),
        prop::collection::vec(trader, 0..3),
        prop::collection::vec(processor, 0..3),
    )
        .prop_map(
            |(name, ip, port, dbport, (s, m), queries, traders, processors)| {
                let mut n = NodeSpec::new(name, ip, port, dbport);
                n.service_modules.push(ServiceModuleSpec { name: s });
                n.management_modules.push(ManagementModuleSpec { name: m });
                n.query_modules = queries
                    .into_iter()
                    .map(|(name, uses_lookup)| QueryModuleSpec { name, uses_lookup })
                    .collect();
                n.trading_modules = traders;
                n.processing_modules = processors;
                n
            },
        )
}

fn arb_impl() -> impl Strategy<Value = ImplModule> {
    let leaf = (
        arb_name(),
        arb_name(),
        prop::option::of(arb_name()),
        prop::option::of(arb_name()),
    )
        .prop_map(|(name, uri, platform_ref, super_ref)| {
            ImplModule::Simple(SimpleImpl {
                name,
                uri,
                platform_ref,
                super_ref,
            })
        });
    leaf.prop_recursive(2, 8, 3, |inner| {
        (
            arb_name(),
            arb_name(),
            prop::collection::vec(inner, 1..3),
            prop::option::of(arb_name()),
        )
            .prop_map(|(name, uri, submodules, super_ref)| {
                ImplModule::Composite(CompositeImpl {
                    name,
                    uri,
                    submodules,
                    platform_ref: None,
                    super_ref,
                })
            })
    })
}

fn arb_package() -> impl Strategy<Value = PackageModel> {
    let system = (arb_name(), prop::collection::vec(arb_node(), 1..3))
        .prop_map(|(name, nodes)| SystemModel { name, nodes });
    let repo = prop::collection::vec((arb_name(), prop::collection::vec(arb_impl(), 1..3)), 1..3)
        .prop_map(|ps| RepositoryModel {
            platforms: ps
                .into_iter()
                .map(|(name, modules)| Platform { name, modules })
                .collect(),
        });
    let statements = prop::collection::vec(
        (arb_ref(), arb_ref()).prop_map(|(arch_module, impl_module)| Statement {
            arch_module,
            impl_module,
        }),
        1..4,
    );
    (
        arb_name(),
        prop::collection::vec(
            "[A-Za-z_][A-Za-z0-9_]{0,5}(\\.[A-Za-z_][A-Za-z0-9_]{0,5}){0,2}(\\.\\*)?",
            0..3,
        ),
        prop::option::of(system),
        prop::option::of(repo),
        prop::option::of(statements),
    )
        .prop_filter(
            "import segments are plain identifiers",
            |(_, imports, ..)| {
                imports
                    .iter()
                    .all(|i| i.split('.').all(|s| s == "*" || !is_keyword(s)))
            },
        )
        .prop_map(
            |(name, imports, tkrs, repository, configuration)| PackageModel {
                name,
                imports,
                tkrs,
                repository,
                configuration,
                ..Default::default()
            },
        )
}

proptest! {
    #[test]
    fn print_then_parse_is_identity(pkg in arb_package()) {
        let text = print(&pkg);
        let back = parse(&text).map_err(|d| TestCaseError::fail(format!("{d:?}\n{text}")))?;
        prop_assert_eq!(back, pkg);
    }

    #[test]
    fn an_inserted_illegal_token_is_reported_on_its_line(
        file in prop::sample::select(&FIXTURES[..]),
        pick in any::<prop::sample::Index>(),
        token in prop::sample::select(vec![";", "@", ".", "*", "{", "="]),
    ) {
        let text = fixture(file);
        let mut in_string = false;
        let mut gaps = Vec::new();
        for (i, c) in text.char_indices() {
            if c == '"' {
                in_string = !in_string;
            }
            if c.is_whitespace() && !in_string {
                gaps.push(i);
            }
        }
        let at = gaps[pick.index(gaps.len())];
        let line = text[..at].matches('\n').count() + 1;
        let mutated = format!("{} {token}{}", &text[..at], &text[at..]);
        let diags = parse(&mutated).err().unwrap_or_default();
        prop_assert!(diags.iter().any(|d| d.span.line == line), "{:?} at line {}", diags, line);
    }
}
