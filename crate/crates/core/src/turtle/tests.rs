use super::*;
use crate::term::{Iri, Literal, Term};
use crate::vocab::{rdf, sh, xsd};

const INTRANSIT: &str = include_str!("../../fixtures/intransit_possession_shape.ttl");

fn iri(s: &str) -> Term {
    Term::Iri(Iri::new(s).unwrap())
}

#[test]
fn empty_document() {
    let doc = parse("", None).unwrap();
    assert!(doc.triples.is_empty());
    assert!(doc.prefixes.is_empty());
}

#[test]
fn intransit_shape_document() {
    let doc = parse(INTRANSIT, None).unwrap();
    let shape = iri("http://w3id.org/circularfactory/FlexConveyor#InTransitBoxPossessedShape");
    assert!(doc
        .triples
        .iter()
        .any(|t| t.subject == shape && t.predicate == Term::Iri(rdf::type_()) && t.object == Term::Iri(sh::node_shape())));
    let select = doc
        .triples
        .iter()
        .find(|t| t.predicate == Term::Iri(sh::select()))
        .expect("sh:select triple");
    let text = select.object.as_literal().unwrap().lexical();
    assert!(text.contains("SELECT $this"));
    assert!(text.contains('\n'));
    let ns = doc
        .triples
        .iter()
        .find(|t| t.predicate == Term::Iri(sh::namespace()))
        .unwrap();
    assert_eq!(ns.object.as_literal().unwrap().datatype(), &xsd::any_uri());
}

#[test]
fn literals_and_lists() {
    let doc = parse(
        r#"@prefix ex: <http://example.org/> .
        ex:s ex:p 1, -2.5, 3e2, true, "x"@en, "a\"b\n", """multi
line""" ;
             ex:q [ ex:r ex:o ] ."#,
        None,
    )
    .unwrap();
    let objs: Vec<&Term> = doc.triples.iter().map(|t| &t.object).collect();
    assert!(objs.contains(&&Term::Literal(Literal::integer(1))));
    assert!(objs.contains(&&Term::Literal(Literal::typed("-2.5", xsd::decimal()))));
    assert!(objs.contains(&&Term::Literal(Literal::typed("3e2", xsd::double()))));
    assert!(objs.contains(&&Term::Literal(Literal::boolean(true))));
    assert!(objs.contains(&&Term::Literal(Literal::lang("x", "en"))));
    assert!(objs.contains(&&Term::Literal(Literal::string("a\"b\n"))));
    assert!(objs.contains(&&Term::Literal(Literal::string("multi\nline"))));
    assert_eq!(doc.triples.len(), 9);
}

#[test]
fn base_resolution() {
    let doc = parse("@base <http://example.org/a/> . <b> <#p> <../c> .", None).unwrap();
    let t = &doc.triples[0];
    assert_eq!(t.subject, iri("http://example.org/a/b"));
    assert_eq!(t.predicate, iri("http://example.org/a/#p"));
    assert_eq!(t.object, iri("http://example.org/c"));
    assert!(parse("<b> <http://x/p> <http://x/o> .", None).is_err());
    assert!(parse("<b> <http://x/p> <http://x/o> .", Some("http://example.org/")).is_ok());
}

#[test]
fn rejects_unsupported_and_reports_position() {
    let err = parse("@prefix ex: <http://example.org/> .\nex:s ex:p ( ex:a ) .", None).unwrap_err();
    assert_eq!(err.line, 2);
    assert!(err.column > 1);
    let err = parse("@prefix ex: <http://example.org/> .\nex:s ex:p ex:o .\n@base <http://x/> .", None).unwrap_err();
    assert_eq!(err.line, 3);
    let err = parse("ex:s ex:p ex:o .", None).unwrap_err();
    assert!(err.message.contains("ex"), "{err}");
}

#[test]
fn serializer_is_deterministic_and_round_trips() {
    let doc = parse(INTRANSIT, None).unwrap();
    let prefixes = crate::vocab::standard_prefixes();
    let a = serialize(&doc.triples, &prefixes);
    let b = serialize(&doc.triples, &prefixes);
    assert_eq!(a, b);
    let again = parse(&a, None).unwrap();
    assert_eq!(canonical(&doc.triples), canonical(&again.triples));
    assert!(a.contains("_:b1"));
}

#[test]
fn empty_set_serializes_to_header_only() {
    let prefixes = vec![("ex".to_owned(), "http://example.org/".to_owned())];
    assert_eq!(serialize(&[], &prefixes), "@prefix ex: <http://example.org/> .\n");
}

/// Statement fingerprints with blank labels masked.
fn canonical(triples: &[crate::term::Triple]) -> Vec<String> {
    let mut out: Vec<String> = triples
        .iter()
        .map(|t| {
            let f = |x: &Term| if x.is_blank() { "_".to_owned() } else { x.to_string() };
            format!("{} {} {}", f(&t.subject), f(&t.predicate), f(&t.object))
        })
        .collect();
    out.sort();
    out
}
