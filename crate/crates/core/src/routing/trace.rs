use std::collections::BTreeSet;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::sync::Arc;

use parking_lot::Mutex;

use crate::model::{ModuleKind, SystemModel};
use crate::ontomsg::{Envelope, Kind, Ontology};

/// One message as observed on the wire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub cid: String,
    pub from: String,
    pub to: String,
    pub ontology: Ontology,
    pub kind: Kind,
    pub name: String,
}

impl TraceStep {
    pub fn of(env: &Envelope) -> Self {
        TraceStep {
            cid: env.cid.clone(),
            from: env.sender.clone(),
            to: env.receiver.clone(),
            ontology: env.ontology(),
            kind: env.kind(),
            name: env.body.name().to_string(),
        }
    }
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.cid, self.from, self.to, self.ontology, self.kind, self.name
        )
    }
}

/// Reads one line of [`Trace::dump`] output.
impl FromStr for TraceStep {
    type Err = String;

    fn from_str(line: &str) -> Result<Self, String> {
        let f: Vec<&str> = line.split('\t').collect();
        let [cid, from, to, ontology, kind, name] = f[..] else {
            return Err(format!(
                "expected 6 tab-separated fields, found {}",
                f.len()
            ));
        };
        Ok(TraceStep {
            cid: cid.into(),
            from: from.into(),
            to: to.into(),
            ontology: Ontology::from_name(ontology)
                .ok_or_else(|| format!("unknown ontology `{ontology}`"))?,
            kind: Kind::from_name(kind).ok_or_else(|| format!("unknown kind `{kind}`"))?,
            name: name.into(),
        })
    }
}

/// Append-only log shared by every sender of one runtime.
#[derive(Debug, Clone, Default)]
pub struct Trace(Arc<Mutex<Vec<TraceStep>>>);

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, step: TraceStep) {
        self.0.lock().push(step);
    }

    pub fn steps(&self) -> Vec<TraceStep> {
        self.0.lock().clone()
    }

    /// Steps of the conversation `cid` and of every conversation it spawned.
    pub fn conversation(&self, cid: &str) -> Vec<TraceStep> {
        let nested = format!("{cid}.");
        self.0
            .lock()
            .iter()
            .filter(|s| s.cid == cid || s.cid.starts_with(&nested))
            .cloned()
            .collect()
    }

    pub fn clear(&self) {
        self.0.lock().clear();
    }

    /// One step per line: `cid from to ontology kind name`, tab separated.
    pub fn dump(&self, out: &mut dyn Write) -> io::Result<()> {
        for s in self.0.lock().iter() {
            writeln!(out, "{s}")?;
        }
        Ok(())
    }
}

/// The nine permitted (sender kind, ontology, receiver kind) edges.
pub const USAGE_MATRIX: [(ModuleKind, Ontology, ModuleKind); 9] = [
    (ModuleKind::Management, Ontology::Lookup, ModuleKind::Query),
    (ModuleKind::Query, Ontology::Lookup, ModuleKind::Trading),
    (ModuleKind::Query, Ontology::Lookup, ModuleKind::Processing),
    (ModuleKind::Query, Ontology::Lookup, ModuleKind::Management),
    (ModuleKind::Trading, Ontology::Lookup, ModuleKind::Query),
    (ModuleKind::Processing, Ontology::Lookup, ModuleKind::Query),
    (
        ModuleKind::Management,
        Ontology::Register,
        ModuleKind::Processing,
    ),
    (
        ModuleKind::Processing,
        Ontology::Register,
        ModuleKind::Trading,
    ),
    (ModuleKind::Management, Ontology::Admin, ModuleKind::Trading),
];

pub fn in_matrix(from: ModuleKind, ontology: Ontology, to: ModuleKind) -> bool {
    USAGE_MATRIX.contains(&(from, ontology, to))
}

/// Kind of the module at a `Node.Module` address.
pub fn kind_of(system: &SystemModel, address: &str) -> Option<ModuleKind> {
    let (node, module) = address.split_once('.')?;
    system.node(node)?.module_kind(module)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub step: TraceStep,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Conformance {
    pub steps: usize,
    /// Distinct edges seen, as `(from kind, ontology, to kind)` labels.
    pub edges: BTreeSet<(String, String, String)>,
    /// Steps that fail the conformance rule.
    pub violations: Vec<Violation>,
    /// Steps whose edge is not literally one of the nine rows: replies to
    /// register and admin requests and trader-to-trader forwards.
    pub outside_rows: usize,
}

impl Conformance {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every step against the usage matrix. A step conforms when its
/// edge is a row, when it is the predicate answering a conforming action of
/// the same conversation in the opposite direction, or when it is a Lookup
/// forward between two traders.
pub fn check_conformance(system: &SystemModel, steps: &[TraceStep]) -> Conformance {
    let mut report = Conformance {
        steps: steps.len(),
        ..Default::default()
    };
    let mut conforming_actions: BTreeSet<(&str, &str, &str, Ontology)> = BTreeSet::new();
    for step in steps {
        let (Some(from), Some(to)) = (kind_of(system, &step.from), kind_of(system, &step.to))
        else {
            report.violations.push(Violation {
                step: step.clone(),
                reason: "endpoint is not a module of the system".into(),
            });
            continue;
        };
        report.edges.insert((
            from.label().to_string(),
            step.ontology.to_string(),
            to.label().to_string(),
        ));
        let row = in_matrix(from, step.ontology, to);
        if !row {
            report.outside_rows += 1;
        }
        let ok = match step.kind {
            Kind::Action => {
                let federation = from == ModuleKind::Trading
                    && to == ModuleKind::Trading
                    && step.ontology == Ontology::Lookup;
                row || federation
            }
            Kind::Predicate => {
                row || conforming_actions.contains(&(
                    step.cid.as_str(),
                    step.to.as_str(),
                    step.from.as_str(),
                    step.ontology,
                ))
            }
        };
        if ok {
            if step.kind == Kind::Action {
                conforming_actions.insert((&step.cid, &step.from, &step.to, step.ontology));
            }
        } else {
            let reason = format!(
                "{} -{}-> {} is not a permitted edge",
                from.label(),
                step.ontology,
                to.label()
            );
            report.violations.push(Violation {
                step: step.clone(),
                reason,
            });
        }
    }
    report
}
