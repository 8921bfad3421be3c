//! Independent reference implementations and seeded generators shared by the
//! integration tests. Nothing here calls into the engine under test except to
//! build input terms.
#![allow(dead_code)]

pub mod history;
pub mod shacl;
pub mod sparql;

use kapps_core::term::{Iri, Literal, Quad, Term, Triple};
use kapps_core::vocab::{rdf, xsd};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const EX: &str = "http://example.org/t#";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ex(local: &str) -> Iri {
    Iri::new(format!("{EX}{local}")).unwrap()
}

pub fn triple(s: Term, p: Iri, o: Term) -> Triple {
    Triple::new(s, Term::Iri(p), o).unwrap()
}

pub fn quad(t: &Triple, g: &Iri) -> Quad {
    t.clone().in_graph(g)
}

pub fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    items.choose(rng).expect("non-empty pool")
}

/// Renders a term in N-Triples syntax, which both the Turtle and the SPARQL
/// parsers accept.
pub fn nt(t: &Term) -> String {
    match t {
        Term::Iri(i) => format!("<{}>", i.as_str()),
        Term::Blank(b) => format!("_:{}", b.label()),
        Term::Literal(l) => match l.language() {
            Some(lang) => format!("\"{}\"@{lang}", l.lexical()),
            None if l.datatype().as_str() == xsd::STRING => format!("\"{}\"", l.lexical()),
            None => format!("\"{}\"^^<{}>", l.lexical(), l.datatype().as_str()),
        },
    }
}

/// A literal with its well-formedness as known by construction.
#[derive(Debug, Clone)]
pub struct PoolLiteral {
    pub literal: Literal,
    pub well_formed: bool,
}

fn lit(lex: &str, dt: Iri, well_formed: bool) -> PoolLiteral {
    PoolLiteral {
        literal: Literal::typed(lex, dt),
        well_formed,
    }
}

/// Literals of several datatypes, some deliberately ill-formed.
pub fn literal_pool() -> Vec<PoolLiteral> {
    vec![
        lit("5", xsd::integer(), true),
        lit("-12", xsd::integer(), true),
        lit("abc", xsd::integer(), false),
        lit("1.5", xsd::integer(), false),
        lit("2.5", xsd::decimal(), true),
        lit("x2", xsd::decimal(), false),
        lit("true", xsd::boolean(), true),
        lit("maybe", xsd::boolean(), false),
        lit("2024-03-01T10:00:00Z", xsd::date_time(), true),
        lit("yesterday", xsd::date_time(), false),
        lit("hello", xsd::string(), true),
        lit("42", xsd::string(), true),
        PoolLiteral {
            literal: Literal::lang("hallo", "de"),
            well_formed: true,
        },
        PoolLiteral {
            literal: Literal::lang("hello", "en"),
            well_formed: true,
        },
    ]
}

/// Datatypes a generated `sh:datatype` constraint may name.
pub fn datatype_pool() -> Vec<Iri> {
    vec![
        xsd::integer(),
        xsd::decimal(),
        xsd::boolean(),
        xsd::date_time(),
        xsd::string(),
        rdf::lang_string(),
    ]
}

pub fn shuffled<T: Clone>(rng: &mut ChaCha8Rng, items: &[T]) -> Vec<T> {
    let mut v = items.to_vec();
    v.shuffle(rng);
    v
}

pub fn coin(rng: &mut ChaCha8Rng, p: f64) -> bool {
    rng.gen_bool(p)
}
