use std::fs;
use std::path::PathBuf;

use ontotrader_config::dsl::{link, parse_source, Diagnostic, LinkedSet, PackageModel, SourceSpan};
use ontotrader_core::model::Violation;

/// Parsed and linked input files, or the diagnostics that stopped them.
pub struct Loaded {
    pub packages: Vec<PackageModel>,
    pub linked: LinkedSet,
}

pub enum LoadError {
    /// Unreadable input: a runtime failure.
    Io(String),
    /// Syntax or link errors, already formatted.
    Diagnostics(Vec<Diagnostic>),
}

pub fn load(files: &[PathBuf]) -> Result<Loaded, LoadError> {
    let mut packages = Vec::with_capacity(files.len());
    let mut diags = Vec::new();
    for f in files {
        let text =
            fs::read_to_string(f).map_err(|e| LoadError::Io(format!("{}: {e}", f.display())))?;
        match parse_source(&f.display().to_string(), &text) {
            Ok(p) => packages.push(p),
            Err(d) => diags.extend(d),
        }
    }
    if diags.iter().any(Diagnostic::is_error) {
        return Err(LoadError::Diagnostics(diags));
    }
    let linked = link(&packages).map_err(LoadError::Diagnostics)?;
    Ok(Loaded { packages, linked })
}

impl Loaded {
    /// Source location of a violation path: an element, a federation edge
    /// `a->b`, or `statement[i]` of the configuration.
    pub fn locate(&self, v: &Violation) -> (Option<&str>, SourceSpan) {
        if let Some(i) = v
            .path
            .strip_prefix("statement[")
            .and_then(|r| r.strip_suffix(']'))
        {
            let index: usize = i.parse().unwrap_or(1);
            let mut seen = 0;
            for p in &self.packages {
                let n = p.configuration.as_ref().map_or(0, Vec::len);
                if index <= seen + n {
                    let span = p
                        .spans
                        .statements
                        .get(index - seen - 1)
                        .map_or(p.spans.package, |s| s.0);
                    return (p.spans.file.as_deref(), span);
                }
                seen += n;
            }
        }
        let element = v.path.split("->").next().unwrap_or(&v.path);
        let owner = |p: &PackageModel| p.spans.elements.contains_key(element);
        let p = self
            .packages
            .iter()
            .find(|p| owner(p))
            .or_else(|| self.packages.iter().find(|p| p.tkrs.is_some()))
            .or(self.packages.first());
        match p {
            Some(p) => (p.spans.file.as_deref(), p.span_of(element)),
            None => (None, SourceSpan::default()),
        }
    }
}
