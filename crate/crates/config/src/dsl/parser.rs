use ontotrader_core::model::{
    qualified, CompositeImpl, ImplModule, ManagementModuleSpec, ModuleRef, NodeSpec, Platform,
    ProcessingModuleSpec, QueryModuleSpec, RepositoryModel, ServiceModuleSpec, SimpleImpl,
    Statement, SystemModel, TradingModuleSpec,
};

use super::lexer::{tokenize, Tok, Token};
use super::{Code, Diagnostic, PackageModel, SourceSpan};

/// Parses one package. Syntax errors stop the parse at the first offending
/// token; value errors (bad ports, wrong module counts) are collected.
pub fn parse(text: &str) -> Result<PackageModel, Vec<Diagnostic>> {
    parse_in(None, text)
}

/// As [`parse`], tagging the package and every diagnostic with `file`.
pub fn parse_source(file: &str, text: &str) -> Result<PackageModel, Vec<Diagnostic>> {
    parse_in(Some(file), text)
}

fn parse_in(file: Option<&str>, text: &str) -> Result<PackageModel, Vec<Diagnostic>> {
    let (tokens, mut diags) = tokenize(text);
    let mut p = Parser {
        tokens,
        pos: 0,
        diags: Vec::new(),
        pkg: PackageModel::default(),
    };
    if let Err(d) = p.package() {
        p.diags.push(d);
    }
    diags.append(&mut p.diags);
    let mut pkg = p.pkg;
    pkg.spans.file = file.map(str::to_string);
    if diags.iter().any(Diagnostic::is_error) {
        let mut diags: Vec<Diagnostic> = diags.into_iter().map(|d| d.in_file(file)).collect();
        diags.sort_by_key(|d| d.span);
        return Err(diags);
    }
    Ok(pkg)
}

type Parsed<T> = Result<T, Diagnostic>;

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
    pkg: PackageModel,
}

const MODULE_KEYWORDS: [&str; 5] = [
    "ServiceModule",
    "ManagementModule",
    "QueryModule",
    "TradingModule",
    "ProcessingModule",
];

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek().tok, Tok::Keyword(k) if k == kw)
    }

    fn unexpected(&self, expected: &str) -> Diagnostic {
        let t = self.peek();
        Diagnostic::error(
            Code::Syntax,
            t.span,
            format!("expected {expected}, found {}", t.tok.describe()),
        )
    }

    fn keyword(&mut self, kw: &str) -> Parsed<SourceSpan> {
        if self.at_keyword(kw) {
            Ok(self.next().span)
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn punct(&mut self, want: Tok) -> Parsed<SourceSpan> {
        if self.peek().tok == want {
            Ok(self.next().span)
        } else {
            Err(self.unexpected(&want.describe()))
        }
    }

    /// A quoted string or a bare identifier.
    fn estring(&mut self, what: &str) -> Parsed<(String, SourceSpan)> {
        match &self.peek().tok {
            Tok::Str(s) | Tok::Ident(s) => {
                let s = s.clone();
                Ok((s, self.next().span))
            }
            Tok::Int(n) => {
                let d = Diagnostic::error(
                    Code::Syntax,
                    self.peek().span,
                    format!("expected {what}, found number {n}; numbers are written as strings, e.g. \"{n}\""),
                );
                Err(d)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn keyword_value(&mut self, kw: &str, what: &str) -> Parsed<(String, SourceSpan)> {
        self.keyword(kw)?;
        self.estring(what)
    }

    fn boolean(&mut self, kw: &str) -> Parsed<bool> {
        self.keyword(kw)?;
        match self.peek().tok {
            Tok::Keyword("true") => {
                self.next();
                Ok(true)
            }
            Tok::Keyword("false") => {
                self.next();
                Ok(false)
            }
            _ => Err(self.unexpected("`true` or `false`")),
        }
    }

    fn number(&mut self, kw: &str) -> Parsed<u32> {
        let (text, span) = self.keyword_value(kw, "a quoted number")?;
        Ok(text.parse::<u32>().unwrap_or_else(|_| {
            self.diags.push(Diagnostic::error(
                Code::Value,
                span,
                format!("{kw} must be a decimal number, found `{text}`"),
            ));
            0
        }))
    }

    fn package(&mut self) -> Parsed<()> {
        self.pkg.spans.package = self.keyword("Package")?;
        self.pkg.name = self.estring("a package name")?.0;
        while self.at_keyword("import") {
            let start = self.next().span;
            let (name, end) = self.import_name()?;
            self.pkg.imports.push(name);
            self.pkg.spans.imports.push(SourceSpan::new(
                start.line,
                start.column,
                end.column + end.length - start.column,
            ));
        }
        if self.at_keyword("TKRS") {
            self.pkg.tkrs = Some(self.tkrs()?);
        }
        if self.at_keyword("ImplementationRepository") {
            self.pkg.repository = Some(self.repository()?);
        }
        if self.at_keyword("Configuration") {
            self.pkg.configuration = Some(self.configuration()?);
        }
        if self.peek().tok == Tok::Eof {
            return Ok(());
        }
        let mut allowed = Vec::new();
        if self.pkg.tkrs.is_none()
            && self.pkg.repository.is_none()
            && self.pkg.configuration.is_none()
        {
            allowed.extend(["`import`", "`TKRS`"]);
        }
        if self.pkg.repository.is_none() && self.pkg.configuration.is_none() {
            allowed.push("`ImplementationRepository`");
        }
        if self.pkg.configuration.is_none() {
            allowed.push("`Configuration`");
        }
        allowed.push("end of input");
        let last = allowed.pop().unwrap_or_default();
        let expected = if allowed.is_empty() {
            last.to_string()
        } else {
            format!("{} or {last}", allowed.join(", "))
        };
        Err(self.unexpected(&expected))
    }

    /// `ID ('.' ID)* ('.' '*')?`
    fn import_name(&mut self) -> Parsed<(String, SourceSpan)> {
        let mut name = String::new();
        let mut last;
        loop {
            match &self.peek().tok {
                Tok::Ident(s) => {
                    name.push_str(s);
                    last = self.next().span;
                }
                _ => return Err(self.unexpected("a namespace segment")),
            }
            if self.peek().tok != Tok::Dot {
                return Ok((name, last));
            }
            self.next();
            name.push('.');
            if self.peek().tok == Tok::Star {
                name.push('*');
                return Ok((name, self.next().span));
            }
        }
    }

    fn tkrs(&mut self) -> Parsed<SystemModel> {
        let start = self.keyword("TKRS")?;
        self.pkg.spans.tkrs = Some(start);
        let (name, _) = self.estring("a TKRS name")?;
        self.punct(Tok::LBrace)?;
        let mut nodes = vec![self.node(&name)?];
        while self.at_keyword("Node") {
            nodes.push(self.node(&name)?);
        }
        self.punct(Tok::RBrace)?;
        Ok(SystemModel { name, nodes })
    }

    fn node(&mut self, tkrs: &str) -> Parsed<NodeSpec> {
        self.keyword("Node")?;
        let (name, span) = self.estring("a node name")?;
        self.pkg.spans.elements.insert(name.clone(), span);
        self.punct(Tok::LBrace)?;
        let ip = self.keyword_value("ip", "a quoted address")?.0;
        let port = self.number("port")?;
        let dbport = self.number("dbport")?;
        let mut node = NodeSpec::new(&name, ip, port, dbport);
        let mut first_of_kind: [Option<SourceSpan>; 5] = [None; 5];
        let mut counts = [0usize; 5];
        while let Tok::Keyword(k) = self.peek().tok {
            let Some(kind) = MODULE_KEYWORDS.iter().position(|m| *m == k) else {
                break;
            };
            let kw_span = self.next().span;
            let (module, span) = self.estring("a module name")?;
            self.pkg
                .spans
                .elements
                .insert(qualified(&name, &module), span);
            first_of_kind[kind].get_or_insert(kw_span);
            counts[kind] += 1;
            self.punct(Tok::LBrace)?;
            match kind {
                0 => node
                    .service_modules
                    .push(ServiceModuleSpec { name: module }),
                1 => node
                    .management_modules
                    .push(ManagementModuleSpec { name: module }),
                2 => {
                    let (r, _) =
                        self.keyword_value("usesLookupInterface", "a trading module reference")?;
                    node.query_modules.push(QueryModuleSpec {
                        name: module,
                        uses_lookup: ModuleRef::new(r),
                    });
                }
                3 => {
                    let mut t = TradingModuleSpec::new(module);
                    t.lookup = self.boolean("usesLookupInterface")?;
                    t.register = self.boolean("usesRegisterInterface")?;
                    t.admin = self.boolean("usesAdminInterface")?;
                    t.link = self.boolean("usesLinkInterface")?;
                    t.proxy = self.boolean("usesProxyInterface")?;
                    if self.at_keyword("isFederatedWith") {
                        self.next();
                        t.federated_with.push(ModuleRef::new(
                            self.estring("a trading module reference")?.0,
                        ));
                        while matches!(self.peek().tok, Tok::Str(_) | Tok::Ident(_)) {
                            t.federated_with.push(ModuleRef::new(
                                self.estring("a trading module reference")?.0,
                            ));
                        }
                    }
                    node.trading_modules.push(t);
                }
                _ => {
                    let ambient = self.keyword_value("ambient", "an ambient name")?.0;
                    let (r, _) =
                        self.keyword_value("usesRegisterInterface", "a trading module reference")?;
                    node.processing_modules.push(ProcessingModuleSpec {
                        name: module,
                        ambient,
                        uses_register: ModuleRef::new(r),
                    });
                }
            }
            let (owner, owner_span) = self.keyword_value("hasNode", "a node reference")?;
            if owner != name {
                self.diags.push(Diagnostic::error(
                    Code::UnresolvedReference,
                    owner_span,
                    format!("hasNode `{owner}` does not name the enclosing node `{name}`"),
                ));
            }
            self.punct(Tok::RBrace)?;
        }
        let close = self.peek().span;
        if !self.at_keyword("hasTKRS") {
            let expected = "a module (`ServiceModule`, `ManagementModule`, `QueryModule`, `TradingModule`, `ProcessingModule`) or `hasTKRS`";
            return Err(self.unexpected(expected));
        }
        let (owner, owner_span) = self.keyword_value("hasTKRS", "a TKRS reference")?;
        if owner != tkrs {
            self.diags.push(Diagnostic::error(
                Code::UnresolvedReference,
                owner_span,
                format!("hasTKRS `{owner}` does not name the enclosing TKRS `{tkrs}`"),
            ));
        }
        for (kind, (min, max)) in [(0, (1, 1)), (1, (1, 1)), (2, (1, usize::MAX))] {
            let n = counts[kind];
            if n < min || n > max {
                let what = if max == 1 {
                    "exactly one"
                } else {
                    "at least one"
                };
                self.diags.push(Diagnostic::error(
                    Code::Syntax,
                    first_of_kind[kind].unwrap_or(close),
                    format!(
                        "node `{name}` needs {what} {}, found {n}",
                        MODULE_KEYWORDS[kind]
                    ),
                ));
            }
        }
        self.punct(Tok::RBrace)?;
        Ok(node)
    }

    fn repository(&mut self) -> Parsed<RepositoryModel> {
        self.keyword("ImplementationRepository")?;
        self.punct(Tok::LBrace)?;
        let mut platforms = vec![self.platform()?];
        while self.at_keyword("Platform") {
            platforms.push(self.platform()?);
        }
        self.punct(Tok::RBrace)?;
        Ok(RepositoryModel { platforms })
    }

    fn platform(&mut self) -> Parsed<Platform> {
        self.keyword("Platform")?;
        let (name, span) = self.estring("a platform name")?;
        self.pkg.spans.elements.insert(name.clone(), span);
        self.punct(Tok::LBrace)?;
        let mut modules = vec![self.impl_module(&name)?];
        while self.at_impl_module() {
            modules.push(self.impl_module(&name)?);
        }
        self.punct(Tok::RBrace)?;
        Ok(Platform { name, modules })
    }

    fn at_impl_module(&self) -> bool {
        self.at_keyword("SimpleModule") || self.at_keyword("CompositeModule")
    }

    fn impl_module(&mut self, platform: &str) -> Parsed<ImplModule> {
        let composite = self.at_keyword("CompositeModule");
        if !composite && !self.at_keyword("SimpleModule") {
            return Err(self.unexpected("`SimpleModule` or `CompositeModule`"));
        }
        self.next();
        let (name, span) = self.estring("a module name")?;
        self.pkg
            .spans
            .elements
            .entry(format!("{platform}.{name}"))
            .or_insert(span);
        self.punct(Tok::LBrace)?;
        let uri = self.keyword_value("uri", "a quoted uri")?.0;
        let mut submodules = Vec::new();
        if composite {
            submodules.push(self.impl_module(platform)?);
            while self.at_impl_module() {
                submodules.push(self.impl_module(platform)?);
            }
        }
        let platform_ref = if self.at_keyword("hasPlatform") {
            Some(self.keyword_value("hasPlatform", "a platform reference")?.0)
        } else {
            None
        };
        let super_ref = if self.at_keyword("hasSuperModule") {
            Some(
                self.keyword_value("hasSuperModule", "a module reference")?
                    .0,
            )
        } else {
            None
        };
        if self.peek().tok != Tok::RBrace {
            let expected = match (platform_ref.is_some(), super_ref.is_some()) {
                (false, false) if composite => {
                    "a submodule, `hasPlatform`, `hasSuperModule` or `}`"
                }
                (false, false) => "`hasPlatform`, `hasSuperModule` or `}`",
                (true, false) => "`hasSuperModule` or `}`",
                _ => "`}`",
            };
            return Err(self.unexpected(expected));
        }
        self.next();
        Ok(if composite {
            ImplModule::Composite(CompositeImpl {
                name,
                uri,
                submodules,
                platform_ref,
                super_ref,
            })
        } else {
            ImplModule::Simple(SimpleImpl {
                name,
                uri,
                platform_ref,
                super_ref,
            })
        })
    }

    fn configuration(&mut self) -> Parsed<Vec<Statement>> {
        self.keyword("Configuration")?;
        self.punct(Tok::LBrace)?;
        let mut statements = vec![self.statement()?];
        while self.at_keyword("Statement") {
            statements.push(self.statement()?);
        }
        self.punct(Tok::RBrace)?;
        Ok(statements)
    }

    fn statement(&mut self) -> Parsed<Statement> {
        self.keyword("Statement")?;
        self.punct(Tok::LBrace)?;
        let (arch, arch_span) =
            self.keyword_value("hasTKRSModule", "an architecture module reference")?;
        let (imp, imp_span) = self.keyword_value(
            "hasImplementationRepositoryModule",
            "an implementation module reference",
        )?;
        self.punct(Tok::RBrace)?;
        self.pkg.spans.statements.push((arch_span, imp_span));
        Ok(Statement {
            arch_module: ModuleRef::new(arch),
            impl_module: ModuleRef::new(imp),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_package() {
        let p = parse("Package P").unwrap();
        assert_eq!(p, PackageModel::new("P"));
    }

    #[test]
    fn imports_keep_their_wildcard() {
        let p = parse("Package P import A.B.* import C").unwrap();
        assert_eq!(p.imports, ["A.B.*", "C"]);
        assert_eq!(p.spans.imports[0], SourceSpan::new(1, 11, 12));
    }

    #[test]
    fn sections_must_follow_grammar_order() {
        let err = parse("Package P Configuration { Statement { hasTKRSModule a hasImplementationRepositoryModule b } } TKRS T { }")
            .unwrap_err();
        assert_eq!(err.len(), 1);
        assert_eq!(
            err[0].message,
            "expected end of input, found keyword `TKRS`"
        );
    }

    #[test]
    fn unquoted_numbers_are_rejected_with_a_hint() {
        let err = parse("Package P TKRS T { Node N { ip \"1.2.3.4\" port 1099").unwrap_err();
        assert!(err[0].message.contains("\"1099\""), "{}", err[0]);
    }

    #[test]
    fn module_counts_follow_the_grammar() {
        let text = "Package P TKRS T { Node N { ip \"1.2.3.4\" port \"1\" dbport \"2\"
            ServiceModule S { hasNode N } ServiceModule S2 { hasNode N }
            ManagementModule M { hasNode N }
            hasTKRS T } }";
        let err = parse(text).unwrap_err();
        let messages: Vec<_> = err.iter().map(|d| d.message.as_str()).collect();
        assert_eq!(
            messages,
            [
                "node `N` needs exactly one ServiceModule, found 2",
                "node `N` needs at least one QueryModule, found 0"
            ]
        );
        assert_eq!(err[1].span.line, 4);
    }

    #[test]
    fn keywords_are_reserved_but_escapable() {
        assert!(parse("Package Node").is_err());
        assert_eq!(parse("Package ^Node").unwrap().name, "Node");
    }
}
