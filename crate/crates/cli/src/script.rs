//! Command language shared by `--script` files and the interactive prompt.
//!
//! ```text
//! query <node> meta|metameta [<policy>=<value>]... where <path> <op> <literal> [and ...]
//!       [order <path> asc|desc] [project <path>[,<path>]...]
//! query-file <node> <form.json> [<policy>=<value>]...
//! export <processing> <doc.json>
//! modify <processing> <offer-id> <doc.json>
//! withdraw <processing> <offer-id>
//! describe <processing> <offer-id>
//! admin-set <trader> def|max|repos <value>
//! admin-get <trader> def|max|repos
//! ```
//!
//! Lines starting with `#` are comments. A literal in double quotes is a
//! string; otherwise integers, decimals and `true`/`false` are read as such.

use std::path::{Path, PathBuf};

use ontotrader_core::ontomsg::{Policy, PolicyName, PolicyValue, QueryType};
use ontotrader_core::store::{Condition, Direction, Op, QueryBody, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub enum AdminParam {
    Def,
    Max,
    Repos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Query {
        node: String,
        query_type: QueryType,
        policies: Vec<Policy>,
        body: QueryBody,
    },
    QueryFile {
        node: String,
        form: PathBuf,
        policies: Vec<Policy>,
    },
    Export {
        processing: String,
        doc: PathBuf,
    },
    Modify {
        processing: String,
        id: String,
        doc: PathBuf,
    },
    Withdraw {
        processing: String,
        id: String,
    },
    Describe {
        processing: String,
        id: String,
    },
    AdminSet {
        trader: String,
        param: AdminParam,
        value: String,
    },
    AdminGet {
        trader: String,
        param: AdminParam,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct Word {
    text: String,
    quoted: bool,
}

fn split(line: &str) -> Result<Vec<Word>, String> {
    let mut words = Vec::new();
    let mut chars = line.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        let mut text = String::new();
        if c == '"' {
            chars.next();
            loop {
                match chars.next() {
                    None => return Err("unterminated string".into()),
                    Some('"') => break,
                    Some('\\') => text.push(chars.next().ok_or("unterminated string")?),
                    Some(c) => text.push(c),
                }
            }
            words.push(Word { text, quoted: true });
        } else {
            while let Some(&c) = chars.peek() {
                if c.is_whitespace() {
                    break;
                }
                text.push(c);
                chars.next();
            }
            words.push(Word {
                text,
                quoted: false,
            });
        }
    }
    Ok(words)
}

fn literal(w: &Word) -> Scalar {
    if w.quoted {
        return Scalar::Str(w.text.clone());
    }
    if let Ok(i) = w.text.parse::<i64>() {
        return Scalar::Int(i);
    }
    if let Ok(f) = w.text.parse::<f64>() {
        if f.is_finite() {
            return Scalar::Float(f);
        }
    }
    match w.text.as_str() {
        "true" => Scalar::Bool(true),
        "false" => Scalar::Bool(false),
        s => Scalar::Str(s.to_string()),
    }
}

fn policy(s: &str) -> Result<Policy, String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected <policy>=<value>, found `{s}`"))?;
    let name = match name {
        "def_search_card" => PolicyName::DefSearchCard,
        "max_search_card" => PolicyName::MaxSearchCard,
        "exact_type_match" => PolicyName::ExactTypeMatch,
        other => return Err(format!("unknown policy `{other}`")),
    };
    let value = match value {
        "true" => PolicyValue::Bool(true),
        "false" => PolicyValue::Bool(false),
        v => PolicyValue::Int(
            v.parse()
                .map_err(|_| format!("policy value `{v}` is neither an integer nor a bool"))?,
        ),
    };
    Ok(Policy { name, value })
}

fn admin_param(s: &str) -> Result<AdminParam, String> {
    match s {
        "def" => Ok(AdminParam::Def),
        "max" => Ok(AdminParam::Max),
        "repos" => Ok(AdminParam::Repos),
        other => Err(format!("expected def, max or repos, found `{other}`")),
    }
}

struct Cursor<'a> {
    words: &'a [Word],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn next(&mut self, what: &str) -> Result<&'a Word, String> {
        let w = self
            .words
            .get(self.at)
            .ok_or_else(|| format!("missing {what}"))?;
        self.at += 1;
        Ok(w)
    }

    fn text(&mut self, what: &str) -> Result<String, String> {
        self.next(what).map(|w| w.text.clone())
    }

    fn peek(&self) -> Option<&'a str> {
        self.words.get(self.at).map(|w| w.text.as_str())
    }

    fn done(&self) -> Result<(), String> {
        match self.words.get(self.at) {
            None => Ok(()),
            Some(w) => Err(format!("unexpected `{}`", w.text)),
        }
    }
}

/// Parses one line. `Ok(None)` for blank lines and comments. Relative file
/// names are resolved against `base`.
pub fn parse_line(line: &str, base: &Path) -> Result<Option<Command>, String> {
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(None);
    }
    let words = split(trimmed)?;
    let mut c = Cursor {
        words: &words,
        at: 0,
    };
    let verb = c.text("command")?;
    let file = |p: String| base.join(p);
    let cmd = match verb.as_str() {
        "query" => {
            let node = c.text("node")?;
            let query_type = match c.text("query type")?.as_str() {
                "meta" => QueryType::Meta,
                "metameta" => QueryType::MetaMeta,
                other => return Err(format!("expected meta or metameta, found `{other}`")),
            };
            let mut policies = Vec::new();
            while let Some(w) = c.peek().filter(|w| *w != "where") {
                policies.push(policy(w)?);
                c.at += 1;
            }
            c.next("`where`")?;
            let mut conditions = Vec::new();
            loop {
                let path = c.text("condition path")?;
                let op = c.text("operator")?;
                let op = Op::parse(&op).ok_or_else(|| format!("unknown operator `{op}`"))?;
                conditions.push(Condition {
                    path,
                    op,
                    literal: literal(c.next("literal")?),
                });
                if c.peek() != Some("and") {
                    break;
                }
                c.at += 1;
            }
            let mut body = QueryBody::new(conditions);
            if c.peek() == Some("order") {
                c.at += 1;
                let path = c.text("order path")?;
                let dir = match c.text("direction")?.as_str() {
                    "asc" => Direction::Asc,
                    "desc" => Direction::Desc,
                    other => return Err(format!("expected asc or desc, found `{other}`")),
                };
                body.order_by = Some((path, dir));
            }
            if c.peek() == Some("project") {
                c.at += 1;
                body.projection = Some(
                    c.text("projection")?
                        .split(',')
                        .map(str::to_string)
                        .collect(),
                );
            }
            Command::Query {
                node,
                query_type,
                policies,
                body,
            }
        }
        "query-file" => {
            let node = c.text("node")?;
            let form = file(c.text("form file")?);
            let mut policies = Vec::new();
            while let Some(w) = c.peek() {
                policies.push(policy(w)?);
                c.at += 1;
            }
            Command::QueryFile {
                node,
                form,
                policies,
            }
        }
        "export" => Command::Export {
            processing: c.text("processing module")?,
            doc: file(c.text("document file")?),
        },
        "modify" => Command::Modify {
            processing: c.text("processing module")?,
            id: c.text("offer id")?,
            doc: file(c.text("document file")?),
        },
        "withdraw" => Command::Withdraw {
            processing: c.text("processing module")?,
            id: c.text("offer id")?,
        },
        "describe" => Command::Describe {
            processing: c.text("processing module")?,
            id: c.text("offer id")?,
        },
        "admin-set" => Command::AdminSet {
            trader: c.text("trader")?,
            param: admin_param(&c.text("parameter")?)?,
            value: c.text("value")?,
        },
        "admin-get" => Command::AdminGet {
            trader: c.text("trader")?,
            param: admin_param(&c.text("parameter")?)?,
        },
        other => return Err(format!("unknown command `{other}`")),
    };
    c.done()?;
    Ok(Some(cmd))
}
