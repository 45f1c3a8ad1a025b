use super::{Code, Diagnostic, SourceSpan};

/// Reserved words of the configuration language. A bare identifier equal to
/// one of these is a keyword; `^word` escapes it.
pub const KEYWORDS: &[&str] = &[
    "Package",
    "import",
    "TKRS",
    "Node",
    "ip",
    "port",
    "dbport",
    "ServiceModule",
    "ManagementModule",
    "QueryModule",
    "TradingModule",
    "ProcessingModule",
    "usesLookupInterface",
    "usesRegisterInterface",
    "usesAdminInterface",
    "usesLinkInterface",
    "usesProxyInterface",
    "isFederatedWith",
    "ambient",
    "hasNode",
    "hasTKRS",
    "ImplementationRepository",
    "Platform",
    "CompositeModule",
    "SimpleModule",
    "uri",
    "hasPlatform",
    "hasSuperModule",
    "Configuration",
    "Statement",
    "hasTKRSModule",
    "hasImplementationRepositoryModule",
    "true",
    "false",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

/// Identifier syntax: a letter or `_` followed by letters, digits or `_`.
pub fn is_identifier(word: &str) -> bool {
    let mut chars = word.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Keyword(&'static str),
    Ident(String),
    Str(String),
    Int(String),
    LBrace,
    RBrace,
    Dot,
    Star,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Keyword(k) => format!("keyword `{k}`"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Int(s) => format!("number {s}"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Star => "`*`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn eat_while(&mut self, out: &mut String, keep: impl Fn(char) -> bool) {
        while let Some(c) = self.peek().filter(|c| keep(*c)) {
            out.push(c);
            self.bump();
        }
    }
}

/// Splits `text` into tokens. Unknown characters and unterminated strings
/// are reported and skipped, so the token stream always ends with `Eof`.
pub fn tokenize(text: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();
    let mut diags = Vec::new();
    loop {
        let (line, column) = (cur.line, cur.column);
        let Some(c) = cur.peek() else {
            tokens.push(Token {
                tok: Tok::Eof,
                span: SourceSpan::new(line, column, 0),
            });
            return (tokens, diags);
        };
        let mut width = 1;
        let tok = match c {
            c if c.is_whitespace() => {
                cur.bump();
                continue;
            }
            '/' => {
                cur.bump();
                match cur.peek() {
                    Some('/') => {
                        while cur.peek().is_some_and(|c| c != '\n') {
                            cur.bump();
                        }
                        continue;
                    }
                    Some('*') => {
                        cur.bump();
                        let mut prev = ' ';
                        let mut closed = false;
                        while let Some(c) = cur.bump() {
                            if prev == '*' && c == '/' {
                                closed = true;
                                break;
                            }
                            prev = c;
                        }
                        if !closed {
                            diags.push(Diagnostic::error(
                                Code::Syntax,
                                SourceSpan::new(line, column, 2),
                                "unterminated comment",
                            ));
                        }
                        continue;
                    }
                    _ => {
                        diags.push(Diagnostic::error(
                            Code::Syntax,
                            SourceSpan::new(line, column, 1),
                            "unexpected `/`",
                        ));
                        continue;
                    }
                }
            }
            '{' | '}' | '.' | '*' => {
                cur.bump();
                match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '.' => Tok::Dot,
                    _ => Tok::Star,
                }
            }
            '"' | '\'' => {
                cur.bump();
                match string_body(&mut cur, c) {
                    Ok(s) => {
                        width = cur.column.saturating_sub(column).max(1);
                        Tok::Str(s)
                    }
                    Err(msg) => {
                        diags.push(Diagnostic::error(
                            Code::Syntax,
                            SourceSpan::new(line, column, 1),
                            msg,
                        ));
                        continue;
                    }
                }
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                cur.eat_while(&mut s, |c| c.is_ascii_digit());
                width = s.len();
                Tok::Int(s)
            }
            c if c == '^' || c.is_ascii_alphabetic() || c == '_' => {
                let escaped = c == '^';
                if escaped {
                    cur.bump();
                }
                let mut s = String::new();
                cur.eat_while(&mut s, |c| c.is_ascii_alphanumeric() || c == '_');
                width = s.len() + escaped as usize;
                if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit()) {
                    diags.push(Diagnostic::error(
                        Code::Syntax,
                        SourceSpan::new(line, column, width),
                        "`^` must precede an identifier",
                    ));
                    continue;
                }
                match KEYWORDS.iter().find(|k| **k == s) {
                    Some(k) if !escaped => Tok::Keyword(k),
                    _ => Tok::Ident(s),
                }
            }
            other => {
                cur.bump();
                diags.push(Diagnostic::error(
                    Code::Syntax,
                    SourceSpan::new(line, column, 1),
                    format!("unexpected character `{other}`"),
                ));
                continue;
            }
        };
        tokens.push(Token {
            tok,
            span: SourceSpan::new(line, column, width),
        });
    }
}

fn string_body(cur: &mut Cursor<'_>, quote: char) -> Result<String, String> {
    let mut s = String::new();
    loop {
        match cur.peek() {
            None | Some('\n') => return Err("unterminated string".into()),
            Some(c) if c == quote => {
                cur.bump();
                return Ok(s);
            }
            Some('\\') => {
                cur.bump();
                let escaped = match cur.bump() {
                    Some('n') => '\n',
                    Some('t') => '\t',
                    Some('r') => '\r',
                    Some('b') => '\u{8}',
                    Some('f') => '\u{c}',
                    Some(c @ ('"' | '\'' | '\\')) => c,
                    Some(c) => return Err(format!("unknown escape `\\{c}`")),
                    None => return Err("unterminated string".into()),
                };
                s.push(escaped);
            }
            Some(c) => {
                cur.bump();
                s.push(c);
            }
        }
    }
}
