use std::fmt::Write;

use ontotrader_core::model::{ImplModule, NodeSpec, RepositoryModel, Statement, SystemModel};

use super::lexer::{is_identifier, is_keyword};
use super::PackageModel;

/// Canonical text of a package, in the layout of the published examples:
/// two-space indentation and one attribute per line.
pub fn print(pkg: &PackageModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Package {}", word(&pkg.name));
    for i in &pkg.imports {
        let _ = writeln!(out, "import {i}");
    }
    if let Some(sys) = &pkg.tkrs {
        system(&mut out, sys);
    }
    if let Some(repo) = pkg.repository.as_ref().filter(|r| !r.platforms.is_empty()) {
        repository(&mut out, repo);
    }
    if let Some(statements) = pkg.configuration.as_ref().filter(|s| !s.is_empty()) {
        configuration(&mut out, statements);
    }
    out
}

/// Bare when the value lexes as a plain identifier, quoted otherwise.
fn word(s: &str) -> String {
    if is_identifier(s) && !is_keyword(s) {
        s.to_string()
    } else {
        quoted(s)
    }
}

fn quoted(s: &str) -> String {
    let mut q = String::with_capacity(s.len() + 2);
    q.push('"');
    for c in s.chars() {
        match c {
            '"' => q.push_str("\\\""),
            '\\' => q.push_str("\\\\"),
            '\n' => q.push_str("\\n"),
            '\t' => q.push_str("\\t"),
            '\r' => q.push_str("\\r"),
            '\u{8}' => q.push_str("\\b"),
            '\u{c}' => q.push_str("\\f"),
            c => q.push(c),
        }
    }
    q.push('"');
    q
}

fn system(out: &mut String, sys: &SystemModel) {
    let _ = writeln!(out, "TKRS {} {{", word(&sys.name));
    for n in &sys.nodes {
        node(out, n, &sys.name);
    }
    out.push_str("}\n");
}

fn node(out: &mut String, n: &NodeSpec, tkrs: &str) {
    let owner = word(&n.name);
    let _ = writeln!(out, "  Node {owner} {{");
    let _ = writeln!(out, "    ip {}", quoted(&n.ip));
    let _ = writeln!(out, "    port {}", quoted(&n.port.to_string()));
    let _ = writeln!(out, "    dbport {}", quoted(&n.dbport.to_string()));
    for m in &n.service_modules {
        let _ = writeln!(
            out,
            "    ServiceModule {} {{ hasNode {owner} }}",
            word(&m.name)
        );
    }
    for m in &n.management_modules {
        let _ = writeln!(
            out,
            "    ManagementModule {} {{ hasNode {owner} }}",
            word(&m.name)
        );
    }
    for q in &n.query_modules {
        let _ = writeln!(out, "    QueryModule {} {{", word(&q.name));
        let _ = writeln!(
            out,
            "      usesLookupInterface {}",
            word(q.uses_lookup.as_str())
        );
        let _ = writeln!(out, "      hasNode {owner}\n    }}");
    }
    for t in &n.trading_modules {
        let _ = writeln!(out, "    TradingModule {} {{", word(&t.name));
        for (kw, v) in [
            ("usesLookupInterface", t.lookup),
            ("usesRegisterInterface", t.register),
            ("usesAdminInterface", t.admin),
            ("usesLinkInterface", t.link),
            ("usesProxyInterface", t.proxy),
        ] {
            let _ = writeln!(out, "      {kw} {v}");
        }
        if !t.federated_with.is_empty() {
            let refs: Vec<String> = t.federated_with.iter().map(|r| word(r.as_str())).collect();
            let _ = writeln!(out, "      isFederatedWith {}", refs.join(" "));
        }
        let _ = writeln!(out, "      hasNode {owner}\n    }}");
    }
    for p in &n.processing_modules {
        let _ = writeln!(out, "    ProcessingModule {} {{", word(&p.name));
        let _ = writeln!(out, "      ambient {}", word(&p.ambient));
        let _ = writeln!(
            out,
            "      usesRegisterInterface {}",
            word(p.uses_register.as_str())
        );
        let _ = writeln!(out, "      hasNode {owner}\n    }}");
    }
    let _ = writeln!(out, "    hasTKRS {}\n  }}", word(tkrs));
}

fn repository(out: &mut String, repo: &RepositoryModel) {
    out.push_str("\nImplementationRepository {\n");
    for p in &repo.platforms {
        let _ = writeln!(out, "  Platform {} {{", word(&p.name));
        for m in &p.modules {
            impl_module(out, m, 4);
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
}

fn impl_module(out: &mut String, m: &ImplModule, indent: usize) {
    let pad = " ".repeat(indent);
    let kw = match m {
        ImplModule::Simple(_) => "SimpleModule",
        ImplModule::Composite(_) => "CompositeModule",
    };
    let _ = writeln!(out, "{pad}{kw} {} {{", word(m.name()));
    let _ = writeln!(out, "{pad}  uri {}", quoted(m.uri()));
    for sub in m.submodules() {
        impl_module(out, sub, indent + 2);
    }
    if let Some(p) = m.platform_ref() {
        let _ = writeln!(out, "{pad}  hasPlatform {}", word(p));
    }
    if let Some(s) = m.super_ref() {
        let _ = writeln!(out, "{pad}  hasSuperModule {}", word(s));
    }
    let _ = writeln!(out, "{pad}}}");
}

fn configuration(out: &mut String, statements: &[Statement]) {
    out.push_str("\nConfiguration {\n");
    for s in statements {
        let _ = writeln!(out, "  Statement {{");
        let _ = writeln!(out, "    hasTKRSModule {}", word(s.arch_module.as_str()));
        let _ = writeln!(
            out,
            "    hasImplementationRepositoryModule {} }}",
            word(s.impl_module.as_str())
        );
    }
    out.push_str("}\n");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_package() {
        assert_eq!(print(&PackageModel::new("P")), "Package P\n");
    }

    #[test]
    fn names_that_are_not_identifiers_are_quoted() {
        assert_eq!(word("Node_1"), "Node_1");
        assert_eq!(
            word("Node_2.TradingModule_2_1"),
            "\"Node_2.TradingModule_2_1\""
        );
        assert_eq!(word("Node"), "\"Node\"");
        assert_eq!(word("a \"b\"\n"), "\"a \\\"b\\\"\\n\"");
    }
}
