use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::SparqlError;
use crate::store::TripleSource;
use crate::term::{compare_literals, literals_equal, Literal, Term};

/// One solution: variable → term.
pub type Binding = BTreeMap<Var, Term>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EvalOptions {
    /// When an aggregate subquery grouped on variables that are all pre-bound
    /// yields no group, produce one group for the pre-bound key with empty
    /// input (so `COUNT` is 0) instead of no row.
    pub default_empty_groups: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solutions {
    pub variables: Vec<Var>,
    pub rows: Vec<Binding>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryResult {
    Solutions(Solutions),
    Boolean(bool),
}

impl QueryResult {
    pub fn solutions(&self) -> Option<&Solutions> {
        match self {
            QueryResult::Solutions(s) => Some(s),
            QueryResult::Boolean(_) => None,
        }
    }

    pub fn boolean(&self) -> Option<bool> {
        match self {
            QueryResult::Boolean(b) => Some(*b),
            QueryResult::Solutions(_) => None,
        }
    }
}

pub fn evaluate(query: &Query, source: &dyn TripleSource, initial: &Binding) -> Result<QueryResult, SparqlError> {
    evaluate_with(query, source, initial, &EvalOptions::default())
}

pub fn evaluate_with(
    query: &Query,
    source: &dyn TripleSource,
    initial: &Binding,
    options: &EvalOptions,
) -> Result<QueryResult, SparqlError> {
    let ev = Evaluator { source, options };
    match &query.form {
        QueryForm::Ask(group) => {
            let rows = ev.group(group, vec![initial.clone()], initial)?;
            Ok(QueryResult::Boolean(!rows.is_empty()))
        }
        QueryForm::Select(select) => {
            let mut rows = ev.select(select, initial)?;
            let variables = select.output_vars();
            sort_rows(&mut rows, &variables);
            Ok(QueryResult::Solutions(Solutions { variables, rows }))
        }
    }
}

fn sort_rows(rows: &mut [Binding], vars: &[Var]) {
    rows.sort_by(|a, b| {
        for v in vars {
            let ord = a.get(v).cmp(&b.get(v));
            if ord != Ordering::Equal {
                return ord;
            }
        }
        Ordering::Equal
    });
}

struct Evaluator<'a> {
    source: &'a dyn TripleSource,
    options: &'a EvalOptions,
}

impl Evaluator<'_> {
    fn select(&self, q: &SelectQuery, initial: &Binding) -> Result<Vec<Binding>, SparqlError> {
        let visible: BTreeSet<Var> = q.pattern.in_scope_vars().into_iter().collect();
        let inner_initial: Binding = initial
            .iter()
            .filter(|(v, _)| visible.contains(*v))
            .map(|(v, t)| (v.clone(), t.clone()))
            .collect();
        let solutions = self.group(&q.pattern, vec![inner_initial.clone()], &inner_initial)?;
        let mut rows = if q.is_aggregate() {
            self.aggregate(q, solutions, &inner_initial)
        } else {
            let outputs = q.output_vars();
            solutions
                .into_iter()
                .map(|s| {
                    outputs
                        .iter()
                        .filter_map(|v| s.get(v).map(|t| (v.clone(), t.clone())))
                        .collect()
                })
                .collect()
        };
        if q.distinct {
            let mut seen = BTreeSet::new();
            rows.retain(|r| seen.insert(r.clone()));
        }
        Ok(rows)
    }

    fn aggregate(&self, q: &SelectQuery, solutions: Vec<Binding>, initial: &Binding) -> Vec<Binding> {
        let mut groups: BTreeMap<Vec<Option<Term>>, Vec<Binding>> = BTreeMap::new();
        for s in solutions {
            let key = q.group_by.iter().map(|v| s.get(v).cloned()).collect();
            groups.entry(key).or_default().push(s);
        }
        if groups.is_empty() {
            if q.group_by.is_empty() {
                groups.insert(Vec::new(), Vec::new());
            } else if self.options.default_empty_groups && q.group_by.iter().all(|v| initial.contains_key(v)) {
                let key = q.group_by.iter().map(|v| initial.get(v).cloned()).collect();
                groups.insert(key, Vec::new());
            }
        }
        let Projection::Items(items) = &q.projection else {
            unreachable!("aggregate queries have explicit projections");
        };
        groups
            .into_iter()
            .map(|(key, members)| {
                let mut row = Binding::new();
                for (v, t) in q.group_by.iter().zip(key) {
                    if let Some(t) = t {
                        row.insert(v.clone(), t);
                    }
                }
                let mut out = Binding::new();
                for item in items {
                    match item {
                        ProjectionItem::Var(v) => {
                            if let Some(t) = row.get(v) {
                                out.insert(v.clone(), t.clone());
                            }
                        }
                        ProjectionItem::Count { var, distinct, alias } => {
                            let n = match (var, distinct) {
                                (None, false) => members.len(),
                                (None, true) => members.iter().collect::<BTreeSet<_>>().len(),
                                (Some(v), false) => members.iter().filter(|m| m.contains_key(v)).count(),
                                (Some(v), true) => members.iter().filter_map(|m| m.get(v)).collect::<BTreeSet<_>>().len(),
                            };
                            out.insert(alias.clone(), Term::Literal(Literal::integer(n as i64)));
                        }
                    }
                }
                out
            })
            .collect()
    }

    fn group(&self, g: &GroupPattern, mut current: Vec<Binding>, initial: &Binding) -> Result<Vec<Binding>, SparqlError> {
        for el in &g.elements {
            if current.is_empty() {
                break;
            }
            current = match el {
                PatternElement::Triple(tp) => self.join_triple(tp, current),
                PatternElement::SubSelect(q) => {
                    let sub = self.select(q, initial)?;
                    join(current, &sub)
                }
                PatternElement::Group(inner) => {
                    let sub = self.group(inner, vec![initial.clone()], initial)?;
                    join(current, &sub)
                }
                PatternElement::Filter(_) => current,
            };
        }
        let filters: Vec<&Expr> = g
            .elements
            .iter()
            .filter_map(|e| match e {
                PatternElement::Filter(f) => Some(f),
                _ => None,
            })
            .collect();
        if filters.is_empty() {
            return Ok(current);
        }
        let mut kept = Vec::with_capacity(current.len());
        for s in current {
            let mut ok = true;
            for f in &filters {
                if !effective_boolean(&eval_expr(f, &s)?)? {
                    ok = false;
                    break;
                }
            }
            if ok {
                kept.push(s);
            }
        }
        Ok(kept)
    }

    fn join_triple(&self, tp: &TriplePattern, current: Vec<Binding>) -> Vec<Binding> {
        let mut out = Vec::new();
        for s in current {
            let resolve = |p: &TermPattern| -> Option<Term> {
                match p {
                    TermPattern::Term(t) => Some(t.clone()),
                    TermPattern::Var(v) => s.get(v).cloned(),
                }
            };
            let (rs, rp, ro) = (resolve(&tp.subject), resolve(&tp.predicate), resolve(&tp.object));
            if rs.as_ref().is_some_and(Term::is_literal) || rp.as_ref().is_some_and(|p| !p.is_iri()) {
                continue;
            }
            self.source
                .for_each_triple(rs.as_ref(), rp.as_ref(), ro.as_ref(), &mut |ts, tpred, to| {
                    let mut next = s.clone();
                    for (pat, val) in [(&tp.subject, ts), (&tp.predicate, tpred), (&tp.object, to)] {
                        if let TermPattern::Var(v) = pat {
                            match next.get(v) {
                                Some(existing) if existing != val => return,
                                Some(_) => {}
                                None => {
                                    next.insert(v.clone(), val.clone());
                                }
                            }
                        }
                    }
                    out.push(next);
                });
        }
        out
    }
}

fn compatible(a: &Binding, b: &Binding) -> bool {
    b.iter().all(|(v, t)| a.get(v).is_none_or(|x| x == t))
}

fn join(left: Vec<Binding>, right: &[Binding]) -> Vec<Binding> {
    let mut out = Vec::new();
    for l in &left {
        for r in right {
            if compatible(l, r) {
                let mut m = l.clone();
                m.extend(r.iter().map(|(v, t)| (v.clone(), t.clone())));
                out.push(m);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Term(Term),
    Bool(bool),
}

fn type_error(message: impl Into<String>) -> SparqlError {
    SparqlError::Type(message.into())
}

fn eval_expr(e: &Expr, b: &Binding) -> Result<Value, SparqlError> {
    Ok(match e {
        Expr::Var(v) => Value::Term(
            b.get(v)
                .cloned()
                .ok_or_else(|| type_error(format!("unbound variable {v} in FILTER")))?,
        ),
        Expr::Const(t) => Value::Term(t.clone()),
        Expr::Not(x) => Value::Bool(!effective_boolean(&eval_expr(x, b)?)?),
        Expr::And(x, y) => {
            let l = eval_expr(x, b).and_then(|v| effective_boolean(&v));
            let r = eval_expr(y, b).and_then(|v| effective_boolean(&v));
            match (l, r) {
                (Ok(false), _) | (_, Ok(false)) => Value::Bool(false),
                (Err(e), _) | (_, Err(e)) => return Err(e),
                _ => Value::Bool(true),
            }
        }
        Expr::Or(x, y) => {
            let l = eval_expr(x, b).and_then(|v| effective_boolean(&v));
            let r = eval_expr(y, b).and_then(|v| effective_boolean(&v));
            match (l, r) {
                (Ok(true), _) | (_, Ok(true)) => Value::Bool(true),
                (Err(e), _) | (_, Err(e)) => return Err(e),
                _ => Value::Bool(false),
            }
        }
        Expr::Compare(op, x, y) => Value::Bool(compare(*op, &eval_expr(x, b)?, &eval_expr(y, b)?)?),
    })
}

fn as_term(v: &Value) -> Term {
    match v {
        Value::Term(t) => t.clone(),
        Value::Bool(b) => Term::Literal(Literal::boolean(*b)),
    }
}

fn effective_boolean(v: &Value) -> Result<bool, SparqlError> {
    match v {
        Value::Bool(b) => Ok(*b),
        Value::Term(Term::Literal(l)) => match l.value() {
            Some(crate::term::LiteralValue::Boolean(b)) => Ok(b),
            Some(n) if n.is_numeric() => Ok(n.as_rational().is_some_and(|r| r != num_rational::BigRational::from_integer(0.into()))),
            _ if l.datatype().as_str() == crate::vocab::xsd::STRING => Ok(!l.lexical().is_empty()),
            _ => Err(type_error(format!("no effective boolean value for {l:?}"))),
        },
        Value::Term(t) => Err(type_error(format!("no effective boolean value for {t:?}"))),
    }
}

/// Equality is value-based for literals of supported datatypes and
/// term identity otherwise. Ordering requires comparable literals.
fn compare(op: CompareOp, a: &Value, b: &Value) -> Result<bool, SparqlError> {
    let (ta, tb) = (as_term(a), as_term(b));
    let eq = || match (&ta, &tb) {
        (Term::Literal(x), Term::Literal(y)) => literals_equal(x, y),
        (x, y) => x == y,
    };
    match op {
        CompareOp::Eq => Ok(eq()),
        CompareOp::Ne => Ok(!eq()),
        _ => {
            let ord = match (&ta, &tb) {
                (Term::Literal(x), Term::Literal(y)) => compare_literals(x, y),
                _ => None,
            }
            .ok_or_else(|| type_error(format!("cannot order {ta:?} and {tb:?}")))?;
            Ok(match op {
                CompareOp::Lt => ord == Ordering::Less,
                CompareOp::Le => ord != Ordering::Greater,
                CompareOp::Gt => ord == Ordering::Greater,
                CompareOp::Ge => ord != Ordering::Less,
                CompareOp::Eq | CompareOp::Ne => unreachable!(),
            })
        }
    }
}
