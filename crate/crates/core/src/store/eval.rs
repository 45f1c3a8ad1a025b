use std::cmp::Ordering;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::{
    Condition, Direction, Document, EffectivePolicies, MatchResult, Op, QueryBody, Repository,
    Scalar, StoreError, Value,
};

/// `round(100 * satisfied / total)` with halves rounded up. `total` must be > 0.
pub fn percentage(satisfied: usize, total: usize) -> u8 {
    ((200 * satisfied + total) / (2 * total)) as u8
}

fn mismatch(c: &Condition, field: &Scalar) -> StoreError {
    StoreError::TypeMismatch {
        path: c.path.clone(),
        detail: format!(
            "`{}` between {} field and {} literal",
            c.op.as_str(),
            field.type_name(),
            c.literal.type_name()
        ),
    }
}

fn ordering_holds(op: Op, ord: Ordering) -> bool {
    match op {
        Op::Eq => ord == Ordering::Equal,
        Op::Ne => ord != Ordering::Equal,
        Op::Lt => ord == Ordering::Less,
        Op::Le => ord != Ordering::Greater,
        Op::Gt => ord == Ordering::Greater,
        Op::Ge => ord != Ordering::Less,
        Op::Contains => unreachable!("contains is not an ordering"),
    }
}

fn scalar_holds(field: &Scalar, op: Op, c: &Condition) -> Result<bool, StoreError> {
    use Scalar::*;
    match (field, &c.literal) {
        (Int(a), Int(b)) if op != Op::Contains => Ok(ordering_holds(op, a.cmp(b))),
        (Int(_) | Float(_), Int(_) | Float(_)) if op != Op::Contains => {
            let as_f = |s: &Scalar| match s {
                Int(v) => *v as f64,
                Float(v) => *v,
                _ => unreachable!(),
            };
            Ok(as_f(field)
                .partial_cmp(&as_f(&c.literal))
                .is_some_and(|o| ordering_holds(op, o)))
        }
        (Str(a), Str(b)) if op == Op::Contains => Ok(a.contains(b.as_str())),
        (Str(a), Str(b)) => Ok(ordering_holds(op, a.as_str().cmp(b.as_str()))),
        (Bool(a), Bool(b)) if matches!(op, Op::Eq | Op::Ne) => Ok(ordering_holds(op, a.cmp(b))),
        _ => Err(mismatch(c, field)),
    }
}

fn condition_holds(doc: &Document, c: &Condition) -> Result<bool, StoreError> {
    match doc.fields.get(&c.path) {
        None => Ok(false),
        Some(Value::Scalar(s)) => scalar_holds(s, c.op, c),
        Some(Value::List(items)) => {
            // On lists every operator asks whether some element satisfies
            // it, except `ne`, which is the negation of element-wise `eq`.
            let (probe, negate) = match c.op {
                Op::Contains => (Op::Eq, false),
                Op::Ne => (Op::Eq, true),
                op => (op, false),
            };
            let mut any = false;
            for item in items {
                any |= scalar_holds(item, probe, c)?;
            }
            Ok(any != negate)
        }
    }
}

/// Percentage of the query's conditions the document satisfies.
pub fn match_score(doc: &Document, q: &QueryBody) -> Result<u8, StoreError> {
    if q.conditions.is_empty() {
        return Err(StoreError::EmptyQuery);
    }
    let mut satisfied = 0;
    for c in &q.conditions {
        satisfied += usize::from(condition_holds(doc, c)?);
    }
    Ok(percentage(satisfied, q.conditions.len()))
}

fn type_rank(s: &Scalar) -> u8 {
    match s {
        Scalar::Int(_) | Scalar::Float(_) => 0,
        Scalar::Str(_) => 1,
        Scalar::Bool(_) => 2,
    }
}

fn cmp_scalars(a: &Scalar, b: &Scalar) -> Ordering {
    use Scalar::*;
    match (a, b) {
        (Int(x), Int(y)) => x.cmp(y),
        (Int(_) | Float(_), Int(_) | Float(_)) => {
            let f = |s: &Scalar| match s {
                Int(v) => *v as f64,
                Float(v) => *v,
                _ => unreachable!(),
            };
            f(a).total_cmp(&f(b))
        }
        (Str(x), Str(y)) => x.cmp(y),
        (Bool(x), Bool(y)) => x.cmp(y),
        _ => type_rank(a).cmp(&type_rank(b)),
    }
}

/// Documents lacking a scalar value at the key sort after all others in
/// either direction.
fn cmp_key(a: &Document, b: &Document, key: &(String, Direction)) -> Ordering {
    fn get<'d>(d: &'d Document, path: &str) -> Option<&'d Scalar> {
        match d.fields.get(path) {
            Some(Value::Scalar(s)) => Some(s),
            _ => None,
        }
    }
    match (get(a, &key.0), get(b, &key.0)) {
        (Some(x), Some(y)) => match key.1 {
            Direction::Asc => cmp_scalars(x, y),
            Direction::Desc => cmp_scalars(y, x),
        },
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
}

/// Result order: percentage descending, then the query's `order_by` key,
/// then doc_id ascending.
pub fn rank_order(q: &QueryBody, a: (&Document, u8), b: (&Document, u8)) -> Ordering {
    b.1.cmp(&a.1)
        .then_with(|| {
            q.order_by
                .as_ref()
                .map_or(Ordering::Equal, |k| cmp_key(a.0, b.0, k))
        })
        .then_with(|| a.0.doc_id.cmp(&b.0.doc_id))
}

fn rank(
    mut scored: Vec<(&Document, Result<u8, StoreError>)>,
    q: &QueryBody,
    policies: EffectivePolicies,
) -> Result<Vec<MatchResult>, StoreError> {
    // `scored` is in document order, so the first error reported is the
    // earliest document's.
    let mut hits = Vec::with_capacity(scored.len());
    for (doc, res) in scored.drain(..) {
        let pct = res?;
        let keep = if policies.exact { pct == 100 } else { pct > 0 };
        if keep {
            hits.push((doc, pct));
        }
    }
    hits.sort_by(|&(da, pa), &(db, pb)| rank_order(q, (da, pa), (db, pb)));
    hits.truncate(policies.cardinality);
    Ok(hits
        .into_iter()
        .map(|(d, pct)| MatchResult {
            doc_id: d.doc_id.clone(),
            percentage: pct,
        })
        .collect())
}

/// Single-threaded evaluation, available regardless of features.
pub fn evaluate_sequential(
    repo: &Repository,
    q: &QueryBody,
    policies: EffectivePolicies,
) -> Result<Vec<MatchResult>, StoreError> {
    q.check()?;
    let scored = repo.documents().map(|d| (d, match_score(d, q))).collect();
    rank(scored, q, policies)
}

/// Scores every document, keeps matches (only full ones when `exact`),
/// orders them by percentage, then `order_by`, then doc_id, and truncates to
/// the cardinality. Scoring runs on the rayon pool with the `parallel`
/// feature.
pub fn evaluate(
    repo: &Repository,
    q: &QueryBody,
    policies: EffectivePolicies,
) -> Result<Vec<MatchResult>, StoreError> {
    #[cfg(feature = "parallel")]
    {
        q.check()?;
        let docs: Vec<&Document> = repo.documents().collect();
        let scored = docs.par_iter().map(|d| (*d, match_score(d, q))).collect();
        rank(scored, q, policies)
    }
    #[cfg(not(feature = "parallel"))]
    evaluate_sequential(repo, q, policies)
}
