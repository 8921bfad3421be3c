//! Random shapes over the six supported components and a naive per-focus-node
//! checker written directly from the constraint definitions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use kapps_core::shacl::ValidationResult;
use kapps_core::term::{BlankNode, Iri, Literal, Term, Triple};
use kapps_core::vocab::{rdf, rdfs, sh};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{coin, ex, literal_pool, nt, pick, triple};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Iri,
    BlankNode,
    Literal,
    BlankNodeOrIri,
    BlankNodeOrLiteral,
    IriOrLiteral,
}

impl Kind {
    const ALL: [Kind; 6] = [
        Kind::Iri,
        Kind::BlankNode,
        Kind::Literal,
        Kind::BlankNodeOrIri,
        Kind::BlankNodeOrLiteral,
        Kind::IriOrLiteral,
    ];

    fn local(self) -> &'static str {
        match self {
            Kind::Iri => "IRI",
            Kind::BlankNode => "BlankNode",
            Kind::Literal => "Literal",
            Kind::BlankNodeOrIri => "BlankNodeOrIRI",
            Kind::BlankNodeOrLiteral => "BlankNodeOrLiteral",
            Kind::IriOrLiteral => "IRIOrLiteral",
        }
    }

    fn admits(self, t: &Term) -> bool {
        let (i, b, l) = (
            matches!(t, Term::Iri(_)),
            matches!(t, Term::Blank(_)),
            matches!(t, Term::Literal(_)),
        );
        match self {
            Kind::Iri => i,
            Kind::BlankNode => b,
            Kind::Literal => l,
            Kind::BlankNodeOrIri => b || i,
            Kind::BlankNodeOrLiteral => b || l,
            Kind::IriOrLiteral => i || l,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GenProperty {
    pub id: Iri,
    pub path: Iri,
    pub max_count: Option<u64>,
    pub min_count: Option<u64>,
    pub datatype: Option<Iri>,
    pub class: Option<Iri>,
    pub kind: Option<Kind>,
    pub message: String,
    pub warning: bool,
}

#[derive(Debug, Clone)]
pub enum GenSparql {
    /// Reports each value of `path` that is directly typed `class`.
    ValueOfClass { path: Iri, class: Iri },
    /// Reports the focus node when its number of `path` values is not `k`.
    CountNot { path: Iri, k: u64 },
}

#[derive(Debug, Clone)]
pub struct GenShape {
    pub id: Iri,
    pub targets: Vec<Iri>,
    pub properties: Vec<GenProperty>,
    pub sparql: Vec<(GenSparql, String)>,
    pub warning: bool,
}

pub struct Universe {
    pub classes: Vec<Iri>,
    pub predicates: Vec<Iri>,
    pub nodes: Vec<Term>,
    pub literals: Vec<(Literal, bool)>,
}

impl Universe {
    pub fn new() -> Self {
        let mut nodes: Vec<Term> = (0..8).map(|i| Term::Iri(ex(&format!("n{i}")))).collect();
        nodes.extend((0..3).map(|i| Term::Blank(BlankNode::new(format!("b{i}")))));
        Self {
            classes: (0..4).map(|i| ex(&format!("C{i}"))).collect(),
            predicates: (0..4).map(|i| ex(&format!("p{i}"))).collect(),
            nodes,
            literals: literal_pool().into_iter().map(|p| (p.literal, p.well_formed)).collect(),
        }
    }

    pub fn well_formed(&self, l: &Literal) -> bool {
        self.literals
            .iter()
            .find(|(x, _)| x == l)
            .map(|(_, ok)| *ok)
            .expect("literal from the pool")
    }

    /// A subclass hierarchy (varying by seed) plus random typed and
    /// property triples, at most `max` in total.
    pub fn graph(&self, rng: &mut ChaCha8Rng, max: usize) -> Vec<Triple> {
        let c = &self.classes;
        let mut out = BTreeSet::new();
        out.insert(triple(Term::Iri(c[1].clone()), rdfs::sub_class_of(), Term::Iri(c[0].clone())));
        if coin(rng, 0.5) {
            out.insert(triple(Term::Iri(c[2].clone()), rdfs::sub_class_of(), Term::Iri(c[1].clone())));
        }
        if coin(rng, 0.3) {
            out.insert(triple(Term::Iri(c[3].clone()), rdfs::sub_class_of(), Term::Iri(c[0].clone())));
        }
        let n = rng.gen_range(0..=max - out.len());
        for _ in 0..n {
            let s = pick(rng, &self.nodes).clone();
            let t = if coin(rng, 0.3) {
                triple(s, rdf::type_(), Term::Iri(pick(rng, c).clone()))
            } else {
                let p = pick(rng, &self.predicates).clone();
                let o = if coin(rng, 0.5) {
                    pick(rng, &self.nodes).clone()
                } else {
                    Term::Literal(pick(rng, &self.literals).0.clone())
                };
                triple(s, p, o)
            };
            out.insert(t);
        }
        out.into_iter().collect()
    }

    pub fn shapes(&self, rng: &mut ChaCha8Rng, datatypes: &[Iri]) -> Vec<GenShape> {
        let mut shapes = Vec::new();
        let mut next_prop = 0;
        for si in 0..rng.gen_range(1..=3) {
            let mut targets = vec![pick(rng, &self.classes).clone()];
            if coin(rng, 0.25) {
                targets.push(pick(rng, &self.classes).clone());
            }
            targets.sort();
            targets.dedup();
            let mut properties = Vec::new();
            for _ in 0..rng.gen_range(0..=3) {
                next_prop += 1;
                let mut p = GenProperty {
                    id: ex(&format!("ps{next_prop}")),
                    path: pick(rng, &self.predicates).clone(),
                    max_count: None,
                    min_count: None,
                    datatype: None,
                    class: None,
                    kind: None,
                    message: format!("property shape {next_prop}"),
                    warning: coin(rng, 0.2),
                };
                // At least one component per property shape.
                while p.max_count.is_none() && p.min_count.is_none() && p.datatype.is_none() && p.class.is_none() && p.kind.is_none() {
                    if coin(rng, 0.35) {
                        p.max_count = Some(rng.gen_range(0..=2));
                    }
                    if coin(rng, 0.35) {
                        p.min_count = Some(rng.gen_range(1..=3));
                    }
                    if coin(rng, 0.3) {
                        p.datatype = Some(pick(rng, datatypes).clone());
                    }
                    if coin(rng, 0.3) {
                        p.class = Some(pick(rng, &self.classes).clone());
                    }
                    if coin(rng, 0.3) {
                        p.kind = Some(*pick(rng, &Kind::ALL));
                    }
                }
                properties.push(p);
            }
            let mut sparql = Vec::new();
            for k in 0..rng.gen_range(0..=2) {
                let path = pick(rng, &self.predicates).clone();
                let c = if coin(rng, 0.5) {
                    GenSparql::ValueOfClass {
                        path,
                        class: pick(rng, &self.classes).clone(),
                    }
                } else {
                    GenSparql::CountNot {
                        path,
                        k: rng.gen_range(0..=2),
                    }
                };
                sparql.push((c, format!("sparql constraint {si}.{k}")));
            }
            shapes.push(GenShape {
                id: ex(&format!("Shape{si}")),
                targets,
                properties,
                sparql,
                warning: coin(rng, 0.2),
            });
        }
        shapes
    }
}

impl Default for Universe {
    fn default() -> Self {
        Self::new()
    }
}

impl GenSparql {
    pub fn select(&self) -> String {
        match self {
            GenSparql::ValueOfClass { path, class } => format!(
                "SELECT $this ?value WHERE {{ $this <{}> ?value . ?value a <{}> . }}",
                path.as_str(),
                class.as_str()
            ),
            GenSparql::CountNot { path, k } => format!(
                "SELECT $this WHERE {{ {{ SELECT $this (COUNT(?o) AS ?n) WHERE {{ $this <{}> ?o . }} GROUP BY $this }} FILTER (?n != {k}) }}",
                path.as_str()
            ),
        }
    }
}

/// Serializes shapes as Turtle with IRI-named property shapes.
pub fn shapes_turtle(shapes: &[GenShape]) -> String {
    let mut out = String::new();
    let shn = |local: &str| format!("<{}{local}>", sh::NS);
    for s in shapes {
        let _ = writeln!(out, "<{}> a {} .", s.id.as_str(), shn("NodeShape"));
        for t in &s.targets {
            let _ = writeln!(out, "<{}> {} <{}> .", s.id.as_str(), shn("targetClass"), t.as_str());
        }
        if s.warning {
            let _ = writeln!(out, "<{}> {} {} .", s.id.as_str(), shn("severity"), shn("Warning"));
        }
        for p in &s.properties {
            let id = format!("<{}>", p.id.as_str());
            let _ = writeln!(out, "<{}> {} {id} .", s.id.as_str(), shn("property"));
            let _ = writeln!(out, "{id} {} <{}> .", shn("path"), p.path.as_str());
            let _ = writeln!(out, "{id} {} \"{}\" .", shn("message"), p.message);
            if let Some(n) = p.max_count {
                let _ = writeln!(out, "{id} {} {n} .", shn("maxCount"));
            }
            if let Some(n) = p.min_count {
                let _ = writeln!(out, "{id} {} {n} .", shn("minCount"));
            }
            if let Some(d) = &p.datatype {
                let _ = writeln!(out, "{id} {} <{}> .", shn("datatype"), d.as_str());
            }
            if let Some(c) = &p.class {
                let _ = writeln!(out, "{id} {} <{}> .", shn("class"), c.as_str());
            }
            if let Some(k) = p.kind {
                let _ = writeln!(out, "{id} {} {} .", shn("nodeKind"), shn(k.local()));
            }
            if p.warning {
                let _ = writeln!(out, "{id} {} {} .", shn("severity"), shn("Warning"));
            }
        }
        for (c, message) in &s.sparql {
            let _ = writeln!(
                out,
                "<{}> {} [ {} \"{message}\" ; {} \"\"\"{}\"\"\" ] .",
                s.id.as_str(),
                shn("sparql"),
                shn("message"),
                shn("select"),
                c.select()
            );
        }
    }
    out
}

/// Everything the naive checker needs, indexed once.
struct Graph<'a> {
    triples: &'a [Triple],
    types: BTreeMap<&'a Term, BTreeSet<&'a Term>>,
}

impl<'a> Graph<'a> {
    fn new(triples: &'a [Triple]) -> Self {
        let ty = Term::Iri(rdf::type_());
        let mut types: BTreeMap<&Term, BTreeSet<&Term>> = BTreeMap::new();
        for t in triples {
            if t.predicate == ty {
                types.entry(&t.subject).or_default().insert(&t.object);
            }
        }
        Self { triples, types }
    }

    fn values(&self, s: &Term, p: &Iri) -> BTreeSet<Term> {
        self.triples
            .iter()
            .filter(|t| &t.subject == s && t.predicate.as_iri() == Some(p))
            .map(|t| t.object.clone())
            .collect()
    }

    /// `class` together with everything reachable downwards over subClassOf.
    fn subclasses(&self, class: &Iri) -> BTreeSet<Term> {
        let sub = Term::Iri(rdfs::sub_class_of());
        let mut set = BTreeSet::from([Term::Iri(class.clone())]);
        loop {
            let before = set.len();
            for t in self.triples {
                if t.predicate == sub && set.contains(&t.object) {
                    set.insert(t.subject.clone());
                }
            }
            if set.len() == before {
                return set;
            }
        }
    }

    fn instance_of(&self, node: &Term, class: &Iri) -> bool {
        let closure = self.subclasses(class);
        self.types.get(node).is_some_and(|ts| ts.iter().any(|t| closure.contains(*t)))
    }

    fn focus(&self, shape: &GenShape) -> BTreeSet<Term> {
        let mut out = BTreeSet::new();
        for s in self.types.keys() {
            if shape.targets.iter().any(|c| self.instance_of(s, c)) {
                out.insert((*s).clone());
            }
        }
        out
    }
}

fn severity(warning: bool) -> Iri {
    if warning {
        sh::warning()
    } else {
        sh::violation()
    }
}

/// Expected validation results, computed per shape and focus node.
pub fn naive_validate(triples: &[Triple], shapes: &[GenShape], well_formed: &dyn Fn(&Literal) -> bool) -> BTreeSet<ValidationResult> {
    let g = Graph::new(triples);
    let mut out = BTreeSet::new();
    for shape in shapes {
        for focus in g.focus(shape) {
            for p in &shape.properties {
                let values = g.values(&focus, &p.path);
                let base = |component: Iri, value: Option<Term>| ValidationResult {
                    focus_node: focus.clone(),
                    result_path: Some(p.path.clone()),
                    value,
                    source_constraint_component: component,
                    result_severity: severity(p.warning),
                    result_message: p.message.clone(),
                    source_shape: Term::Iri(p.id.clone()),
                };
                let n = values.len() as u64;
                if p.max_count.is_some_and(|m| n > m) {
                    out.insert(base(sh::max_count_component(), None));
                }
                if p.min_count.is_some_and(|m| n < m) {
                    out.insert(base(sh::min_count_component(), None));
                }
                for v in &values {
                    if let Some(dt) = &p.datatype {
                        let ok = matches!(v, Term::Literal(l) if l.datatype() == dt && well_formed(l));
                        if !ok {
                            out.insert(base(sh::datatype_component(), Some(v.clone())));
                        }
                    }
                    if let Some(c) = &p.class {
                        if !g.instance_of(v, c) {
                            out.insert(base(sh::class_component(), Some(v.clone())));
                        }
                    }
                    if let Some(k) = p.kind {
                        if !k.admits(v) {
                            out.insert(base(sh::node_kind_component(), Some(v.clone())));
                        }
                    }
                }
            }
            for (c, message) in &shape.sparql {
                let base = |value: Option<Term>| ValidationResult {
                    focus_node: focus.clone(),
                    result_path: None,
                    value,
                    source_constraint_component: sh::sparql_component(),
                    result_severity: severity(shape.warning),
                    result_message: message.clone(),
                    source_shape: Term::Iri(shape.id.clone()),
                };
                match c {
                    GenSparql::ValueOfClass { path, class } => {
                        let class = Term::Iri(class.clone());
                        for v in g.values(&focus, path) {
                            if g.types.get(&v).is_some_and(|ts| ts.contains(&class)) {
                                out.insert(base(Some(v)));
                            }
                        }
                    }
                    GenSparql::CountNot { path, k } => {
                        if g.values(&focus, path).len() as u64 != *k {
                            out.insert(base(None));
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn nt_triples(triples: &[Triple]) -> String {
    triples
        .iter()
        .map(|t| format!("{} {} {} .\n", nt(&t.subject), nt(&t.predicate), nt(&t.object)))
        .collect()
}
