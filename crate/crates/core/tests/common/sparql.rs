//! Random queries in the supported fragment and a brute-force evaluator that
//! enumerates every assignment of graph triples to triple patterns.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use kapps_core::term::{Iri, Literal, Term, Triple};
use kapps_core::vocab::xsd;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{coin, ex, nt, pick, triple};

pub type Row = BTreeMap<String, Term>;

#[derive(Debug, Clone)]
pub enum Pos {
    Var(usize),
    Const(Term),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Eq,
    Ne,
    Lt,
    Gt,
}

#[derive(Debug, Clone)]
pub enum Filter {
    Cmp(Op, Pos, Pos),
    And(Box<Filter>, Box<Filter>),
    Or(Box<Filter>, Box<Filter>),
    Not(Box<Filter>),
}

#[derive(Debug, Clone)]
pub enum Projection {
    All,
    Vars(Vec<usize>),
    /// `COUNT([DISTINCT] ?v|*) AS ?n`, optionally grouped by one variable.
    Count {
        group: Option<usize>,
        var: Option<usize>,
        distinct: bool,
    },
}

#[derive(Debug, Clone)]
pub struct GenQuery {
    pub patterns: Vec<[Pos; 3]>,
    pub filter: Option<Filter>,
    pub distinct: bool,
    pub projection: Projection,
}

pub fn var_name(i: usize) -> String {
    format!("v{i}")
}

pub struct Pools {
    pub subjects: Vec<Term>,
    pub predicates: Vec<Iri>,
    pub objects: Vec<Term>,
}

impl Pools {
    /// Canonical integers, `xsd:string`s and language-tagged strings; no
    /// datatype whose value equality differs from term equality.
    pub fn new() -> Self {
        let subjects: Vec<Term> = (0..6).map(|i| Term::Iri(ex(&format!("s{i}")))).collect();
        let mut objects = subjects.clone();
        objects.extend([-3i64, 0, 2, 7, 10].map(|n| Term::Literal(Literal::integer(n))));
        objects.extend(["a", "b", "10"].map(|s| Term::Literal(Literal::string(s))));
        objects.extend([("a", "en"), ("b", "en"), ("a", "de")].map(|(s, l)| Term::Literal(Literal::lang(s, l))));
        Self {
            subjects,
            predicates: (0..4).map(|i| ex(&format!("q{i}"))).collect(),
            objects,
        }
    }

    pub fn graph(&self, rng: &mut ChaCha8Rng, max: usize) -> Vec<Triple> {
        let n = rng.gen_range(0..=max);
        let set: BTreeSet<Triple> = (0..n)
            .map(|_| {
                triple(
                    pick(rng, &self.subjects).clone(),
                    pick(rng, &self.predicates).clone(),
                    pick(rng, &self.objects).clone(),
                )
            })
            .collect();
        set.into_iter().collect()
    }

    pub fn query(&self, rng: &mut ChaCha8Rng) -> GenQuery {
        let n = rng.gen_range(1..=3);
        let mut vars_used = BTreeSet::new();
        let mut var_predicate = false;
        let mut patterns = Vec::new();
        for _ in 0..n {
            let constant = pick(rng, &self.subjects).clone();
            let s = slot(rng, &mut vars_used, constant, 0.7);
            // At most one variable predicate keeps enumeration small.
            let p = if !var_predicate && coin(rng, 0.2) {
                var_predicate = true;
                vars_used.insert(3);
                Pos::Var(3)
            } else {
                Pos::Const(Term::Iri(pick(rng, &self.predicates).clone()))
            };
            let constant = pick(rng, &self.objects).clone();
            let o = slot(rng, &mut vars_used, constant, 0.6);
            patterns.push([s, p, o]);
        }
        let vars: Vec<usize> = vars_used.into_iter().collect();
        let filter = if !vars.is_empty() && coin(rng, 0.6) {
            Some(self.filter(rng, &vars, 2))
        } else {
            None
        };
        let projection = match (vars.is_empty(), rng.gen_range(0..4)) {
            (true, 0) | (true, 1) => Projection::Count {
                group: None,
                var: None,
                distinct: false,
            },
            (true, _) => Projection::All,
            (false, 0) => Projection::All,
            (false, 1) => {
                let k = rng.gen_range(1..=vars.len());
                Projection::Vars(super::shuffled(rng, &vars).into_iter().take(k).collect())
            }
            (false, _) => Projection::Count {
                group: if coin(rng, 0.6) { Some(*pick(rng, &vars)) } else { None },
                var: if coin(rng, 0.7) { Some(*pick(rng, &vars)) } else { None },
                distinct: coin(rng, 0.4),
            },
        };
        GenQuery {
            patterns,
            filter,
            distinct: coin(rng, 0.3),
            projection,
        }
    }

    fn operand(&self, rng: &mut ChaCha8Rng, vars: &[usize]) -> Pos {
        if coin(rng, 0.5) {
            Pos::Var(*pick(rng, vars))
        } else {
            Pos::Const(pick(rng, &self.objects).clone())
        }
    }

    fn filter(&self, rng: &mut ChaCha8Rng, vars: &[usize], depth: u32) -> Filter {
        let roll = if depth == 0 { 0 } else { rng.gen_range(0..6) };
        match roll {
            3 => Filter::And(Box::new(self.filter(rng, vars, depth - 1)), Box::new(self.filter(rng, vars, depth - 1))),
            4 => Filter::Or(Box::new(self.filter(rng, vars, depth - 1)), Box::new(self.filter(rng, vars, depth - 1))),
            5 => Filter::Not(Box::new(self.filter(rng, vars, depth - 1))),
            _ => {
                let op = *pick(rng, &[Op::Eq, Op::Ne, Op::Lt, Op::Gt]);
                Filter::Cmp(op, Pos::Var(*pick(rng, vars)), self.operand(rng, vars))
            }
        }
    }
}

impl Default for Pools {
    fn default() -> Self {
        Self::new()
    }
}

fn pos_text(p: &Pos) -> String {
    match p {
        Pos::Var(i) => format!("?{}", var_name(*i)),
        Pos::Const(t) => nt(t),
    }
}

fn filter_text(f: &Filter) -> String {
    match f {
        Filter::Cmp(op, a, b) => {
            let op = match op {
                Op::Eq => "=",
                Op::Ne => "!=",
                Op::Lt => "<",
                Op::Gt => ">",
            };
            format!("{} {op} {}", pos_text(a), pos_text(b))
        }
        Filter::And(a, b) => format!("({}) && ({})", filter_text(a), filter_text(b)),
        Filter::Or(a, b) => format!("({}) || ({})", filter_text(a), filter_text(b)),
        Filter::Not(a) => format!("!({})", filter_text(a)),
    }
}

impl GenQuery {
    pub fn text(&self) -> String {
        let mut head = String::from("SELECT ");
        if self.distinct {
            head.push_str("DISTINCT ");
        }
        let mut tail = String::new();
        match &self.projection {
            Projection::All => head.push('*'),
            Projection::Vars(vs) => head.push_str(&vs.iter().map(|v| format!("?{}", var_name(*v))).collect::<Vec<_>>().join(" ")),
            Projection::Count { group, var, distinct } => {
                if let Some(g) = group {
                    head.push_str(&format!("?{} ", var_name(*g)));
                    tail = format!(" GROUP BY ?{}", var_name(*g));
                }
                let arg = var.map(|v| format!("?{}", var_name(v))).unwrap_or_else(|| "*".into());
                let d = if *distinct { "DISTINCT " } else { "" };
                head.push_str(&format!("(COUNT({d}{arg}) AS ?n)"));
            }
        }
        let mut body: Vec<String> = self
            .patterns
            .iter()
            .map(|[s, p, o]| format!("{} {} {} .", pos_text(s), pos_text(p), pos_text(o)))
            .collect();
        if let Some(f) = &self.filter {
            body.push(format!("FILTER ({})", filter_text(f)));
        }
        format!("{head} WHERE {{ {} }}{tail}", body.join(" "))
    }

    fn in_scope(&self) -> BTreeSet<usize> {
        self.patterns
            .iter()
            .flat_map(|p| p.iter())
            .filter_map(|p| match p {
                Pos::Var(v) => Some(*v),
                Pos::Const(_) => None,
            })
            .collect()
    }
}

/// SPARQL 1.1 `<` / `>`: numeric against numeric, `xsd:string` against
/// `xsd:string`; every other combination is a type error.
fn order(a: &Term, b: &Term) -> Result<Ordering, ()> {
    let (Term::Literal(x), Term::Literal(y)) = (a, b) else {
        return Err(());
    };
    let int = |l: &Literal| (l.datatype().as_str() == xsd::INTEGER).then(|| l.lexical().parse::<i64>().unwrap());
    let string = |l: &Literal| (l.datatype().as_str() == xsd::STRING).then(|| l.lexical().to_owned());
    if let (Some(i), Some(j)) = (int(x), int(y)) {
        return Ok(i.cmp(&j));
    }
    if let (Some(i), Some(j)) = (string(x), string(y)) {
        return Ok(i.cmp(&j));
    }
    Err(())
}

fn eval(f: &Filter, row: &BTreeMap<usize, Term>) -> Result<bool, ()> {
    let term = |p: &Pos| match p {
        Pos::Var(v) => row.get(v).cloned().ok_or(()),
        Pos::Const(t) => Ok(t.clone()),
    };
    match f {
        Filter::Cmp(op, a, b) => {
            let (a, b) = (term(a)?, term(b)?);
            match op {
                Op::Eq => Ok(a == b),
                Op::Ne => Ok(a != b),
                Op::Lt => Ok(order(&a, &b)? == Ordering::Less),
                Op::Gt => Ok(order(&a, &b)? == Ordering::Greater),
            }
        }
        Filter::And(a, b) => match (eval(a, row), eval(b, row)) {
            (Ok(false), _) | (_, Ok(false)) => Ok(false),
            (Ok(true), Ok(true)) => Ok(true),
            _ => Err(()),
        },
        Filter::Or(a, b) => match (eval(a, row), eval(b, row)) {
            (Ok(true), _) | (_, Ok(true)) => Ok(true),
            (Ok(false), Ok(false)) => Ok(false),
            _ => Err(()),
        },
        Filter::Not(a) => eval(a, row).map(|b| !b),
    }
}

fn bind(row: &mut BTreeMap<usize, Term>, pos: &Pos, value: &Term) -> bool {
    match pos {
        Pos::Const(t) => t == value,
        Pos::Var(v) => match row.get(v) {
            Some(existing) => existing == value,
            None => {
                row.insert(*v, value.clone());
                true
            }
        },
    }
}

fn enumerate(q: &GenQuery, triples: &[Triple], i: usize, row: BTreeMap<usize, Term>, out: &mut Vec<BTreeMap<usize, Term>>) {
    if i == q.patterns.len() {
        out.push(row);
        return;
    }
    let [s, p, o] = &q.patterns[i];
    for t in triples {
        let mut next = row.clone();
        if bind(&mut next, s, &t.subject) && bind(&mut next, p, &t.predicate) && bind(&mut next, o, &t.object) {
            enumerate(q, triples, i + 1, next, out);
        }
    }
}

/// Solution multiset, sorted, or `Err` when a FILTER raises a type error on
/// any candidate solution.
pub fn brute_force(q: &GenQuery, triples: &[Triple]) -> Result<Vec<Row>, ()> {
    let mut solutions = Vec::new();
    enumerate(q, triples, 0, BTreeMap::new(), &mut solutions);
    if let Some(f) = &q.filter {
        let mut kept = Vec::new();
        for s in solutions {
            if eval(f, &s)? {
                kept.push(s);
            }
        }
        solutions = kept;
    }
    let named = |s: &BTreeMap<usize, Term>, keep: &dyn Fn(usize) -> bool| -> Row {
        s.iter().filter(|(v, _)| keep(**v)).map(|(v, t)| (var_name(*v), t.clone())).collect()
    };
    let scope = q.in_scope();
    let mut rows: Vec<Row> = match &q.projection {
        Projection::All => solutions.iter().map(|s| named(s, &|v| scope.contains(&v))).collect(),
        Projection::Vars(vs) => solutions.iter().map(|s| named(s, &|v| vs.contains(&v))).collect(),
        Projection::Count { group, var, distinct } => {
            let mut groups: BTreeMap<Option<Term>, Vec<&BTreeMap<usize, Term>>> = BTreeMap::new();
            for s in &solutions {
                groups.entry(group.map(|g| s[&g].clone())).or_default().push(s);
            }
            if groups.is_empty() && group.is_none() {
                groups.insert(None, Vec::new());
            }
            groups
                .into_iter()
                .map(|(key, members)| {
                    let n = match (var, distinct) {
                        (None, false) => members.len(),
                        (None, true) => members.iter().collect::<BTreeSet<_>>().len(),
                        (Some(v), false) => members.iter().filter(|m| m.contains_key(v)).count(),
                        (Some(v), true) => members.iter().filter_map(|m| m.get(v)).collect::<BTreeSet<_>>().len(),
                    };
                    let mut row = Row::new();
                    if let (Some(g), Some(k)) = (group, key) {
                        row.insert(var_name(*g), k);
                    }
                    row.insert("n".into(), Term::Literal(Literal::typed(n.to_string(), xsd::integer())));
                    row
                })
                .collect()
        }
    };
    if q.distinct {
        let set: BTreeSet<Row> = rows.into_iter().collect();
        rows = set.into_iter().collect();
    }
    rows.sort();
    Ok(rows)
}

fn slot(rng: &mut ChaCha8Rng, vars_used: &mut BTreeSet<usize>, constant: Term, p_var: f64) -> Pos {
    if coin(rng, p_var) {
        let v = rng.gen_range(0..3);
        vars_used.insert(v);
        Pos::Var(v)
    } else {
        Pos::Const(constant)
    }
}
