//! The configuration language: lexer, parser, canonical printer and the
//! linker that resolves references across packages.

mod lexer;
mod link;
mod parser;
mod printer;

use std::collections::BTreeMap;
use std::fmt;

use ontotrader_core::model::{RepositoryModel, Statement, SystemModel};

pub use lexer::{is_identifier, is_keyword, tokenize, Tok, Token, KEYWORDS};
pub use link::{link, Binding, LinkedSet};
pub use parser::{parse, parse_source};
pub use printer::print;

/// 1-based position of a source element. `length` counts characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl SourceSpan {
    pub fn new(line: usize, column: usize, length: usize) -> Self {
        SourceSpan {
            line,
            column,
            length,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Code {
    Syntax,
    /// A literal with the right token type but an unusable value.
    Value,
    UnresolvedReference,
    ImportCycle,
    DuplicateName,
    /// A qualified reference resolved only by its trailing segments.
    QualifierMismatch,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::Syntax => "syntax",
            Code::Value => "value",
            Code::UnresolvedReference => "unresolved-reference",
            Code::ImportCycle => "import-cycle",
            Code::DuplicateName => "duplicate-name",
            Code::QualifierMismatch => "qualifier-mismatch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Diagnostic {
    /// Source file, when the text came from one.
    pub file: Option<String>,
    pub span: SourceSpan,
    pub severity: Severity,
    pub code: Code,
    pub message: String,
}

impl Diagnostic {
    pub fn error(code: Code, span: SourceSpan, message: impl Into<String>) -> Self {
        Diagnostic {
            file: None,
            span,
            severity: Severity::Error,
            code,
            message: message.into(),
        }
    }

    pub fn warning(code: Code, span: SourceSpan, message: impl Into<String>) -> Self {
        Diagnostic {
            file: None,
            span,
            severity: Severity::Warning,
            code,
            message: message.into(),
        }
    }

    pub fn in_file(mut self, file: Option<&str>) -> Self {
        self.file = file.map(str::to_string);
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

/// `file:line:col: message`, with `warning: ` before warning messages.
impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let file = self.file.as_deref().unwrap_or("<input>");
        write!(f, "{file}:{}:{}: ", self.span.line, self.span.column)?;
        if self.severity == Severity::Warning {
            f.write_str("warning: ")?;
        }
        f.write_str(&self.message)
    }
}

/// Where the elements of a package were written. Never affects equality, so
/// two packages compare equal when only their layout differs.
#[derive(Debug, Clone, Default)]
pub struct Spans {
    pub file: Option<String>,
    pub package: SourceSpan,
    pub imports: Vec<SourceSpan>,
    pub tkrs: Option<SourceSpan>,
    /// Architecture and repository elements by path: `Node`, `Node.Module`,
    /// `Platform`, `Platform.Module`.
    pub elements: BTreeMap<String, SourceSpan>,
    /// Per statement: the `hasTKRSModule` and the implementation reference.
    pub statements: Vec<(SourceSpan, SourceSpan)>,
}

impl PartialEq for Spans {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

/// One parsed `.config` file. Sections absent from the source are `None`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PackageModel {
    pub name: String,
    /// Imported namespaces as written, e.g. `SOLERES.*`.
    pub imports: Vec<String>,
    pub tkrs: Option<SystemModel>,
    pub repository: Option<RepositoryModel>,
    pub configuration: Option<Vec<Statement>>,
    pub spans: Spans,
}

impl PackageModel {
    pub fn new(name: impl Into<String>) -> Self {
        PackageModel {
            name: name.into(),
            ..Default::default()
        }
    }

    /// Span of the element at `path`, falling back to the package header.
    pub fn span_of(&self, path: &str) -> SourceSpan {
        self.spans
            .elements
            .get(path)
            .copied()
            .unwrap_or(self.spans.package)
    }
}
