//! Brute-force reference for store evaluation, written separately from
//! `store::eval`, plus the generators it is checked with.
#![allow(dead_code)]

use ontotrader_core::store::{
    Condition, Direction, Document, Level, MatchResult, Op, QueryBody, Repository, Scalar,
    StoreError, Value,
};
use proptest::prelude::*;

pub mod oracle {
    use super::*;
    use std::cmp::Ordering;

    enum Cmp {
        Num(f64),
        Text(String),
        Flag(bool),
    }

    fn cmp_of(s: &Scalar) -> Cmp {
        match s {
            Scalar::Int(i) => Cmp::Num(*i as f64),
            Scalar::Float(f) => Cmp::Num(*f),
            Scalar::Str(t) => Cmp::Text(t.clone()),
            Scalar::Bool(b) => Cmp::Flag(*b),
        }
    }

    /// `None` when the operator cannot relate the two values.
    fn relate(field: &Scalar, op: Op, lit: &Scalar) -> Option<bool> {
        if let (Scalar::Int(a), Scalar::Int(b)) = (field, lit) {
            if op == Op::Contains {
                return None;
            }
            return Some(apply(op, a.cmp(b)));
        }
        match (cmp_of(field), cmp_of(lit)) {
            (Cmp::Num(a), Cmp::Num(b)) if op != Op::Contains => Some(apply(op, a.partial_cmp(&b)?)),
            (Cmp::Text(a), Cmp::Text(b)) => Some(if op == Op::Contains {
                a.contains(&b)
            } else {
                apply(op, a.cmp(&b))
            }),
            (Cmp::Flag(a), Cmp::Flag(b)) if op == Op::Eq => Some(a == b),
            (Cmp::Flag(a), Cmp::Flag(b)) if op == Op::Ne => Some(a != b),
            _ => None,
        }
    }

    fn apply(op: Op, o: Ordering) -> bool {
        match op {
            Op::Eq => o.is_eq(),
            Op::Ne => o.is_ne(),
            Op::Lt => o.is_lt(),
            Op::Le => o.is_le(),
            Op::Gt => o.is_gt(),
            Op::Ge => o.is_ge(),
            Op::Contains => unreachable!(),
        }
    }

    fn satisfied(doc: &Document, c: &Condition) -> Result<bool, String> {
        let fail = || Err(c.path.clone());
        match doc.fields.get(&c.path) {
            None => Ok(false),
            Some(Value::Scalar(s)) => relate(s, c.op, &c.literal).map_or_else(fail, Ok),
            Some(Value::List(items)) => {
                let inner = if matches!(c.op, Op::Contains | Op::Ne) {
                    Op::Eq
                } else {
                    c.op
                };
                let mut verdicts = Vec::new();
                for it in items {
                    match relate(it, inner, &c.literal) {
                        Some(v) => verdicts.push(v),
                        None => return fail(),
                    }
                }
                let any = verdicts.contains(&true);
                Ok(if c.op == Op::Ne { !any } else { any })
            }
        }
    }

    pub fn score(doc: &Document, q: &QueryBody) -> Result<u8, String> {
        let mut hits = 0.0;
        for c in &q.conditions {
            if satisfied(doc, c)? {
                hits += 1.0;
            }
        }
        Ok((100.0 * hits / q.conditions.len() as f64 + 0.5).floor() as u8)
    }

    fn key_rank(s: &Scalar) -> u8 {
        match s {
            Scalar::Int(_) | Scalar::Float(_) => 0,
            Scalar::Str(_) => 1,
            Scalar::Bool(_) => 2,
        }
    }

    fn key_cmp(a: Option<&Value>, b: Option<&Value>, dir: Direction) -> Ordering {
        let scalar = |v: Option<&Value>| match v {
            Some(Value::Scalar(s)) => Some(s.clone()),
            _ => None,
        };
        match (scalar(a), scalar(b)) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Greater,
            (Some(_), None) => Ordering::Less,
            (Some(x), Some(y)) => {
                let o = match (cmp_of(&x), cmp_of(&y)) {
                    (Cmp::Num(p), Cmp::Num(q)) => match (&x, &y) {
                        (Scalar::Int(i), Scalar::Int(j)) => i.cmp(j),
                        _ => p.total_cmp(&q),
                    },
                    (Cmp::Text(p), Cmp::Text(q)) => p.cmp(&q),
                    (Cmp::Flag(p), Cmp::Flag(q)) => p.cmp(&q),
                    _ => key_rank(&x).cmp(&key_rank(&y)),
                };
                if dir == Direction::Desc {
                    o.reverse()
                } else {
                    o
                }
            }
        }
    }

    /// Score every document, drop non-matches, sort, truncate.
    pub fn evaluate(
        docs: &[Document],
        q: &QueryBody,
        card: usize,
        exact: bool,
    ) -> Result<Vec<(String, u8)>, String> {
        if q.conditions.is_empty() {
            return Err("<empty>".into());
        }
        if let Some(c) = q
            .conditions
            .iter()
            .find(|c| matches!(c.literal, Scalar::Bool(_)) && !matches!(c.op, Op::Eq | Op::Ne))
        {
            return Err(c.path.clone());
        }
        let mut sorted: Vec<&Document> = docs.iter().collect();
        sorted.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        let mut scored = Vec::new();
        for d in sorted {
            scored.push((d, score(d, q)?));
        }
        scored.retain(|(_, p)| if exact { *p == 100 } else { *p > 0 });
        scored.sort_by(|(da, pa), (db, pb)| {
            pb.cmp(pa)
                .then_with(|| match &q.order_by {
                    Some((path, dir)) => key_cmp(da.fields.get(path), db.fields.get(path), *dir),
                    None => Ordering::Equal,
                })
                .then_with(|| da.doc_id.cmp(&db.doc_id))
        });
        Ok(scored
            .into_iter()
            .take(card)
            .map(|(d, p)| (d.doc_id.clone(), p))
            .collect())
    }
}

pub const PATHS: [&str; 4] = ["a", "b", "time.year", "tags"];

pub fn arb_scalar() -> impl Strategy<Value = Scalar> {
    prop_oneof![
        3 => (0i64..5).prop_map(Scalar::Int),
        1 => (0i64..10).prop_map(|v| Scalar::Float(v as f64 / 2.0)),
        3 => prop_oneof![Just("veg"), Just("vegetation"), Just("soil"), Just("")].prop_map(Scalar::from),
        1 => any::<bool>().prop_map(Scalar::Bool),
    ]
}

pub fn arb_value() -> impl Strategy<Value = Value> {
    prop_oneof![
        4 => arb_scalar().prop_map(Value::Scalar),
        1 => prop::collection::vec(arb_scalar(), 0..3).prop_map(Value::List),
    ]
}

pub fn arb_docs() -> impl Strategy<Value = Vec<Document>> {
    prop::collection::vec(
        prop::collection::btree_map(prop::sample::select(&PATHS[..]), arb_value(), 0..4),
        0..=20,
    )
    .prop_map(|maps| {
        maps.into_iter()
            .enumerate()
            .map(|(i, m)| {
                let mut d = Document::new(format!("d{:02}", (i * 7) % 23), Level::Meta);
                for (k, v) in m {
                    d.fields.insert(k.to_string(), v);
                }
                d
            })
            .collect()
    })
}

pub fn arb_query() -> impl Strategy<Value = QueryBody> {
    let cond = (
        prop::sample::select(&PATHS[..]),
        prop::sample::select(&Op::ALL[..]),
        arb_scalar(),
    )
        .prop_map(|(p, op, lit)| Condition::new(p, op, lit));
    let order = prop::option::of((
        prop::sample::select(&PATHS[..]),
        prop_oneof![Just(Direction::Asc), Just(Direction::Desc)],
    ));
    (prop::collection::vec(cond, 1..=4), order).prop_map(|(conditions, order)| QueryBody {
        conditions,
        projection: None,
        order_by: order.map(|(p, d)| (p.to_string(), d)),
    })
}

pub fn repo_of(docs: &[Document]) -> Repository {
    let mut r = Repository::new(Level::Meta, "R", '-');
    for d in docs {
        r.insert(d.clone()).unwrap();
    }
    r
}

pub fn as_pairs(r: Result<Vec<MatchResult>, StoreError>) -> Result<Vec<(String, u8)>, String> {
    r.map(|v| v.into_iter().map(|m| (m.doc_id, m.percentage)).collect())
        .map_err(|e| match e {
            StoreError::TypeMismatch { path, .. } => path,
            StoreError::EmptyQuery => "<empty>".into(),
            other => panic!("unexpected error {other}"),
        })
}
