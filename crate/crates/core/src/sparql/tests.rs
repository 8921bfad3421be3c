use super::*;
use crate::term::{Iri, Literal, Term, Triple};

const EX: &str = "http://example.org/";

fn ex(local: &str) -> Term {
    Term::Iri(Iri::new(format!("{EX}{local}")).unwrap())
}

fn t(s: &str, p: &str, o: Term) -> Triple {
    Triple::new(ex(s), ex(p), o).unwrap()
}

fn var(name: &str) -> Var {
    Var::new(name)
}

fn run(query: &str, data: &Vec<Triple>, initial: &Binding) -> Result<QueryResult, SparqlError> {
    let q = parse_query(&format!("PREFIX ex: <{EX}>\n{query}"))?;
    evaluate(&q, data, initial)
}

fn boxes() -> Vec<Triple> {
    vec![
        t("b1", "state", ex("InTransit")),
        t("b1", "possessedBy", ex("m1")),
        t("b2", "state", ex("InTransit")),
        t("b3", "state", ex("InTransit")),
        t("b3", "possessedBy", ex("m1")),
        t("b3", "possessedBy", ex("m2")),
        t("m1", "load", Term::Literal(Literal::integer(3))),
        t("m2", "load", Term::Literal(Literal::integer(7))),
    ]
}

#[test]
fn select_join_is_sorted_by_projection() {
    let r = run("SELECT ?b ?m WHERE { ?b ex:possessedBy ?m . ?b ex:state ex:InTransit }", &boxes(), &Binding::new()).unwrap();
    let s = r.solutions().unwrap();
    let pairs: Vec<(Term, Term)> = s
        .rows
        .iter()
        .map(|r| (r[&var("b")].clone(), r[&var("m")].clone()))
        .collect();
    assert_eq!(pairs, vec![(ex("b1"), ex("m1")), (ex("b3"), ex("m1")), (ex("b3"), ex("m2"))]);
}

#[test]
fn ask_and_numeric_filter() {
    let data = boxes();
    assert_eq!(run("ASK { ?m ex:load ?n FILTER(?n > 5) }", &data, &Binding::new()).unwrap().boolean(), Some(true));
    assert_eq!(run("ASK { ?m ex:load ?n FILTER(?n > 7) }", &data, &Binding::new()).unwrap().boolean(), Some(false));
    let r = run("SELECT ?m WHERE { ?m ex:load ?n FILTER(?n >= 3.0 && ?n < 7) }", &data, &Binding::new()).unwrap();
    assert_eq!(r.solutions().unwrap().rows.len(), 1);
}

#[test]
fn count_subquery_with_prebound_focus() {
    let q = "SELECT $this WHERE { $this ex:state ex:InTransit .
        { SELECT $this (COUNT(?p) AS ?count) WHERE { $this ex:possessedBy ?p } GROUP BY $this }
        FILTER (?count != 1) }";
    let data = boxes();
    let parsed = parse_query(&format!("PREFIX ex: <{EX}>\n{q}")).unwrap();
    let hits = |focus: &str, default_empty_groups: bool| {
        let mut initial = Binding::new();
        initial.insert(var("this"), ex(focus));
        let opts = EvalOptions { default_empty_groups };
        evaluate_with(&parsed, &data, &initial, &opts)
            .unwrap()
            .solutions()
            .unwrap()
            .rows
            .len()
    };
    assert_eq!(hits("b1", true), 0);
    assert_eq!(hits("b3", true), 1);
    // A box with no possessor only counts as zero with the default-group option.
    assert_eq!(hits("b2", true), 1);
    assert_eq!(hits("b2", false), 0);
}

#[test]
fn aggregate_without_group_over_empty_input() {
    let r = run("SELECT (COUNT(*) AS ?n) WHERE { ?s ex:missing ?o }", &boxes(), &Binding::new()).unwrap();
    let rows = &r.solutions().unwrap().rows;
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][&var("n")], Term::Literal(Literal::integer(0)));
}

#[test]
fn distinct_and_grouped_counts() {
    let r = run(
        "SELECT ?m (COUNT(?b) AS ?n) WHERE { ?b ex:possessedBy ?m } GROUP BY ?m",
        &boxes(),
        &Binding::new(),
    )
    .unwrap();
    let rows = &r.solutions().unwrap().rows;
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][&var("n")], Term::Literal(Literal::integer(2)));
    let r = run("SELECT DISTINCT ?s WHERE { ?s ex:state ?x }", &boxes(), &Binding::new()).unwrap();
    assert_eq!(r.solutions().unwrap().rows.len(), 3);
}

#[test]
fn unsupported_features_are_named() {
    for (q, name) in [
        ("SELECT ?s WHERE { ?s ex:p ?o OPTIONAL { ?s ex:q ?z } }", "OPTIONAL"),
        ("SELECT ?s WHERE { { ?s ex:p ?o } UNION { ?s ex:q ?o } }", "UNION"),
    ] {
        match run(q, &boxes(), &Binding::new()) {
            Err(SparqlError::Unsupported(n)) => assert!(n.contains(name), "{n}"),
            other => panic!("expected unsupported {name}, got {other:?}"),
        }
    }
}

#[test]
fn syntax_errors_carry_position() {
    match parse_query("SELECT ?s WHERE {\n  ?s ?p \n}") {
        Err(SparqlError::Syntax { line, .. }) => assert!(line >= 2),
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse_query("SELECT ?x WHERE { ?s ?p ?o }"), Err(SparqlError::Syntax { .. })));
}

#[test]
fn filter_type_error_aborts() {
    let data = vec![t("a", "v", Term::Literal(Literal::string("x")))];
    let r = run("SELECT ?a WHERE { ?a ex:v ?x FILTER(?x > 1) }", &data, &Binding::new());
    assert!(matches!(r, Err(SparqlError::Type(_))), "{r:?}");
}

#[test]
fn tsv_rendering() {
    let r = run("SELECT ?m ?n WHERE { ?m ex:load ?n }", &boxes(), &Binding::new()).unwrap();
    let tsv = solutions_to_tsv(r.solutions().unwrap());
    let mut lines = tsv.lines();
    assert_eq!(lines.next(), Some("?m\t?n"));
    assert_eq!(tsv.lines().count(), 3);
}
