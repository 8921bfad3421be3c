use std::collections::BTreeSet;

use kapps_core::term::{Iri, Literal, Term, Triple};
use kapps_core::turtle;
use kapps_core::vocab::{standard_prefixes, xsd};
use proptest::prelude::*;

fn iri_term() -> impl Strategy<Value = Term> {
    prop_oneof![
        "[a-z][a-z0-9_]{0,6}".prop_map(|l| format!("http://example.org/ns#{l}")),
        "[a-z]{1,5}(/[a-z0-9]{1,4}){0,2}".prop_map(|p| format!("http://example.org/{p}")),
        Just("http://www.w3.org/1999/02/22-rdf-syntax-ns#type".to_owned()),
        "[0-9]{1,3}".prop_map(|n| format!("urn:kapps:activity:{n}")),
    ]
    .prop_map(|s| Term::Iri(Iri::new(s).unwrap()))
}

fn literal_term() -> impl Strategy<Value = Term> {
    prop_oneof![
        any::<String>().prop_map(|s| Literal::string(s)),
        ("\\PC{0,12}", "[a-z]{2}(-[a-z]{2})?").prop_map(|(s, l)| Literal::lang(s, l)),
        any::<i64>().prop_map(Literal::integer),
        any::<bool>().prop_map(Literal::boolean),
        (-1e6f64..1e6).prop_map(Literal::double),
        "[ -~]{0,8}".prop_map(|s| Literal::typed(s, xsd::date_time())),
        "[ -~\n\"\\\\]{0,8}".prop_map(|s| Literal::typed(s, Iri::new("http://example.org/dt").unwrap())),
    ]
    .prop_map(Term::Literal)
}

fn blank_term() -> impl Strategy<Value = Term> {
    "b[0-9]{1,2}".prop_map(|l| Term::blank(&l))
}

fn triple() -> impl Strategy<Value = Triple> {
    (
        prop_oneof![3 => iri_term(), 1 => blank_term()],
        iri_term(),
        prop_oneof![2 => iri_term(), 3 => literal_term(), 1 => blank_term()],
    )
        .prop_map(|(s, p, o)| Triple::new(s, p, o).unwrap())
}

fn ground(triples: &BTreeSet<Triple>) -> BTreeSet<&Triple> {
    triples
        .iter()
        .filter(|t| !matches!(t.subject, Term::Blank(_)) && !matches!(t.object, Term::Blank(_)))
        .collect()
}

/// Triples with every blank node replaced by one placeholder, as a multiset.
fn masked(triples: &BTreeSet<Triple>) -> Vec<(String, String, String)> {
    let show = |t: &Term| match t {
        Term::Blank(_) => "_".to_owned(),
        other => other.to_string(),
    };
    let mut v: Vec<_> = triples.iter().map(|t| (show(&t.subject), show(&t.predicate), show(&t.object))).collect();
    v.sort();
    v
}

fn blanks(triples: &BTreeSet<Triple>) -> usize {
    triples
        .iter()
        .flat_map(|t| [&t.subject, &t.object])
        .filter(|t| matches!(t, Term::Blank(_)))
        .collect::<BTreeSet<_>>()
        .len()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn serialize_then_parse_is_identity(triples in prop::collection::vec(triple(), 0..40)) {
        let expected: BTreeSet<Triple> = triples.iter().cloned().collect();
        for prefixes in [Vec::new(), standard_prefixes()] {
            let text = turtle::serialize(&triples, &prefixes);
            let doc = turtle::parse(&text, None).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
            let got: BTreeSet<Triple> = doc.triples.into_iter().collect();
            // Blank labels are renumbered, so compare up to relabelling.
            prop_assert_eq!(ground(&got), ground(&expected), "document:\n{}", text);
            prop_assert_eq!(masked(&got), masked(&expected));
            prop_assert_eq!(blanks(&got), blanks(&expected));
        }
    }

    #[test]
    fn escaped_strings_survive(s in any::<String>()) {
        let t = Triple::new(
            Term::iri("http://example.org/s").unwrap(),
            Term::iri("http://example.org/p").unwrap(),
            Term::Literal(Literal::string(&s)),
        )
        .unwrap();
        let text = turtle::serialize([&t], &[]);
        let doc = turtle::parse(&text, None).unwrap();
        prop_assert_eq!(doc.triples, vec![t]);
    }
}

#[test]
fn long_strings_and_numbers_use_short_forms() {
    let text = "@prefix ex: <http://example.org/> .\n\
        ex:s ex:p \"\"\"two\nlines\"\"\", 42, -1.5, 2.0e3, true ;\n  ex:q [ ex:r ex:o ] .\n";
    let doc = turtle::parse(text, None).unwrap();
    assert_eq!(doc.triples.len(), 7);
    let again = turtle::parse(&turtle::serialize(&doc.triples, &doc.prefixes), None).unwrap();
    let a: BTreeSet<_> = doc.triples.into_iter().collect();
    let b: BTreeSet<_> = again.triples.into_iter().collect();
    assert_eq!(a, b);
}
