//! Deployment generation: a shell script that fetches every bound
//! implementation and one Java scaffold per node.

mod write;

use std::fmt::Write as _;

use ontotrader_core::model::{
    validate_configuration, validate_repository, validate_system, ModuleKind, NodeSpec,
    ValidationReport,
};
use thiserror::Error;

use crate::dsl::{Binding, LinkedSet};

pub use write::{write, WriteError, WriteReport};

pub const SCRIPT: &str = "make.sh";
pub const SCAFFOLD: &str = "TKRS.java";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedFile {
    /// Relative, `/`-separated.
    pub path: String,
    pub content: Vec<u8>,
}

/// Script first, then one scaffold per node in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FileSet {
    pub files: Vec<GeneratedFile>,
}

impl FileSet {
    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    pub fn get(&self, path: &str) -> Option<&GeneratedFile> {
        self.files.iter().find(|f| f.path == path)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("statements are present but the linked packages declare no TKRS")]
    NoSystem,
    #[error("node `{0}` has no statements while other nodes do")]
    UnmappedNode(String),
    #[error("configuration is not deployable:\n{}", list(.0))]
    NotDeployable(ValidationReport),
}

fn list(r: &ValidationReport) -> String {
    r.violations()
        .iter()
        .map(|v| format!("  {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Order of `wget` lines within a node. Scaffold fields use
/// [`ModuleKind::ALL`] order instead.
const FETCH_ORDER: [ModuleKind; 5] = [
    ModuleKind::Service,
    ModuleKind::Management,
    ModuleKind::Trading,
    ModuleKind::Query,
    ModuleKind::Processing,
];

/// Generates the deployment of a linked set. No statements means nothing to
/// generate.
pub fn generate(linked: &LinkedSet) -> Result<FileSet, GenerateError> {
    if linked.bindings.is_empty() {
        return Ok(FileSet::default());
    }
    let sys = linked.system.as_ref().ok_or(GenerateError::NoSystem)?;
    if let Some(n) = sys
        .nodes
        .iter()
        .find(|n| !linked.bindings.iter().any(|b| b.node == n.name))
    {
        return Err(GenerateError::UnmappedNode(n.name.clone()));
    }
    let report = validate_system(sys)
        .merge(validate_repository(&linked.repository))
        .merge(validate_configuration(&linked.configuration, sys, &linked.repository).report);
    if !report.is_clean() {
        return Err(GenerateError::NotDeployable(report));
    }

    let mut script = String::from("#!/bin/bash\nclear\n");
    let mut files = Vec::with_capacity(sys.nodes.len() + 1);
    for node in &sys.nodes {
        let bound: Vec<&Binding> = linked
            .bindings
            .iter()
            .filter(|b| b.node == node.name)
            .collect();
        let dir = format!("/{}/{}", sys.name, node.name);
        let _ = writeln!(script, "mkdir {dir}/modules\ncd {dir}/modules");
        for kind in FETCH_ORDER {
            for b in bound.iter().filter(|b| b.kind == kind) {
                let _ = writeln!(script, "wget {}", b.implementation.uri);
            }
        }
        let _ = writeln!(script, "cd {dir}\njavac {SCAFFOLD}");
        files.push(GeneratedFile {
            path: format!("{}/{}/{SCAFFOLD}", sys.name, node.name),
            content: scaffold(&sys.name, node, &bound).into_bytes(),
        });
    }
    script.push_str("cd /\n");
    files.insert(
        0,
        GeneratedFile {
            path: SCRIPT.into(),
            content: script.into_bytes(),
        },
    );
    Ok(FileSet { files })
}

fn scaffold(tkrs: &str, node: &NodeSpec, bound: &[&Binding]) -> String {
    // (class, field) per bound module; repeated kinds get numbered fields.
    let mut fields: Vec<(&str, String)> = Vec::new();
    for kind in ModuleKind::ALL {
        let of_kind = bound.iter().filter(|b| b.kind == kind).count();
        let class = kind.keyword();
        let base = lower_first(class);
        fields.extend((1..=of_kind).map(|i| {
            (
                class,
                if of_kind == 1 {
                    base.clone()
                } else {
                    format!("{base}{i}")
                },
            )
        }));
    }
    let mut out = String::new();
    let _ = writeln!(out, "package {tkrs}.{};\n", node.name);
    let _ = writeln!(out, "import {tkrs}.{}.modules.*;\n", node.name);
    out.push_str("public class TKRS {\n");
    out.push_str(
        "  private String ip = null;\n  private int port = -1;\n  private int dbport = -1;\n",
    );
    for (class, field) in &fields {
        let _ = writeln!(out, "  private {class} {field} = null;");
    }
    out.push_str("\n  public TKRS() {\n");
    let _ = writeln!(out, "    this.ip = \"{}\";", node.ip);
    let _ = writeln!(out, "    this.port = {};", node.port);
    let _ = writeln!(out, "    this.dbport = {};", node.dbport);
    for (class, field) in &fields {
        let _ = writeln!(out, "    this.{field} = new {class}();");
    }
    out.push_str("    // CODE\n  }\n  // CODE\n}\n");
    out
}

fn lower_first(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map(|f| f.to_ascii_lowercase().to_string() + c.as_str())
        .unwrap_or_default()
}
