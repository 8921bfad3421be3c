use std::collections::BTreeSet;
use std::sync::Arc;

use kapps_core::fixtures;
use kapps_core::ogm::{BoundaryError, LogicalClock, Ogm, OgmError, ScopeSpec, Value};
use kapps_core::store::{QuadPattern, Store};
use kapps_core::term::{Iri, Literal, Term};
use kapps_core::vocab::{default_graph, fc, fci, prov, svc};
use proptest::prelude::*;

fn inst(local: &str) -> Iri {
    Iri::new(format!("{}{local}", fci::NS)).unwrap()
}

fn setup() -> (Arc<Store>, Ogm) {
    let store = Arc::new(fixtures::bootstrap_store().unwrap());
    let ogm = Ogm::with_clock(store.clone(), Iri::new("urn:test:mapper").unwrap(), Arc::new(LogicalClock::default()));
    (store, ogm)
}

fn objects_of(store: &Store, s: &Iri, p: &Iri) -> BTreeSet<Term> {
    store
        .match_pattern(&QuadPattern::any().subject(Term::Iri(s.clone())).predicate(Term::Iri(p.clone())).graph(Term::Iri(default_graph())))
        .into_iter()
        .map(|q| q.object)
        .collect()
}

#[test]
fn commit_writes_inverses_and_fetch_reads_them_back() {
    let (store, ogm) = setup();
    let (m, b) = (inst("M1"), inst("B1"));
    let mut module = ogm.create(&fc::flex_conveyor_module(), &m).unwrap();
    module.set_one(&fc::has_grid_x(), Literal::integer(4)).unwrap();
    let mut bx = ogm.create(&fc::box_(), &b).unwrap();
    bx.set_one(&fc::has_state(), fc::state_in_transit()).unwrap();
    bx.set_one(&fc::is_possessed_by(), m.clone()).unwrap();
    ogm.commit(&mut [&mut module, &mut bx]).unwrap();
    assert!(!bx.is_dirty() && !module.is_dirty());

    assert_eq!(objects_of(&store, &m, &fc::has_possession()), BTreeSet::from([Term::Iri(b.clone())]));
    let fetched = ogm.fetch(&m, &fc::flex_conveyor_module(), &ScopeSpec::shallow(), &store.snapshot()).unwrap();
    assert_eq!(fetched.links(&fc::has_possession()), vec![&b]);
    assert_eq!(fetched.literal(&fc::has_grid_x()), Some(&Literal::integer(4)));
}

#[test]
fn moving_possession_retracts_the_old_inverse() {
    let (store, ogm) = setup();
    let (m1, m2, b) = (inst("M1"), inst("M2"), inst("B1"));
    let mut a = ogm.create(&fc::flex_conveyor_module(), &m1).unwrap();
    let mut c = ogm.create(&fc::flex_conveyor_module(), &m2).unwrap();
    a.set_one(&fc::has_grid_x(), Literal::integer(0)).unwrap();
    c.set_one(&fc::has_grid_x(), Literal::integer(1)).unwrap();
    let mut bx = ogm.create(&fc::box_(), &b).unwrap();
    bx.set_one(&fc::has_state(), fc::state_in_transit()).unwrap();
    bx.set_one(&fc::is_possessed_by(), m1.clone()).unwrap();
    ogm.commit(&mut [&mut a, &mut c, &mut bx]).unwrap();

    bx.set_one(&fc::is_possessed_by(), m2.clone()).unwrap();
    let txn = ogm.commit_one(&mut bx).unwrap();
    assert!(objects_of(&store, &m1, &fc::has_possession()).is_empty());
    assert_eq!(objects_of(&store, &m2, &fc::has_possession()), BTreeSet::from([Term::Iri(b.clone())]));

    let history = store.history();
    let entry = history.entry(txn).unwrap();
    let data_deletes: Vec<_> = entry.deletes.iter().filter(|q| q.subject == Term::Iri(m1.clone()) || q.subject == Term::Iri(b.clone())).collect();
    assert_eq!(data_deletes.len(), 2, "{:?}", entry.deletes);
    let activities = entry
        .inserts
        .iter()
        .filter(|q| q.object == Term::Iri(prov::activity()))
        .count();
    assert_eq!(activities, 1);
}

#[test]
fn unchanged_commit_is_a_no_op() {
    let (store, ogm) = setup();
    let mut module = ogm.create(&fc::flex_conveyor_module(), &inst("M1")).unwrap();
    module.set_one(&fc::has_grid_x(), Literal::integer(2)).unwrap();
    let txn = ogm.commit_one(&mut module).unwrap();
    module.set_one(&fc::has_grid_x(), Literal::integer(2)).unwrap();
    assert_eq!(ogm.commit_one(&mut module).unwrap(), txn);
    assert_eq!(store.head(), txn);
}

#[test]
fn creating_an_existing_instance_fails() {
    let (_store, ogm) = setup();
    let mut module = ogm.create(&fc::flex_conveyor_module(), &inst("M1")).unwrap();
    module.set_one(&fc::has_grid_x(), Literal::integer(0)).unwrap();
    ogm.commit_one(&mut module).unwrap();
    assert!(matches!(ogm.create(&fc::flex_conveyor_module(), &inst("M1")), Err(OgmError::InstanceExists(_))));
}

#[test]
fn literal_for_object_property_is_refused() {
    let (_store, ogm) = setup();
    let mut bx = ogm.create(&fc::box_(), &inst("B1")).unwrap();
    let err = bx.set_one(&fc::has_origin(), Literal::string("M1")).unwrap_err();
    assert!(matches!(err, OgmError::Boundary(BoundaryError::NotAnObject { .. })), "{err:?}");
    assert_eq!(bx.dirty_properties().count(), 0);
}

#[test]
fn add_requires_loaded_values() {
    let (store, ogm) = setup();
    let mut module = ogm.create(&fc::flex_conveyor_module(), &inst("M1")).unwrap();
    module.set_one(&fc::has_grid_x(), Literal::integer(0)).unwrap();
    ogm.commit_one(&mut module).unwrap();
    let scope = ScopeSpec::shallow().only([fc::has_grid_x()]);
    let mut partial = ogm.fetch(&inst("M1"), &fc::flex_conveyor_module(), &scope, &store.snapshot()).unwrap();
    let err = partial.add(&fc::has_possession(), Value::reference(inst("B1"))).unwrap_err();
    assert!(matches!(err, OgmError::Boundary(BoundaryError::NotLoaded { .. })), "{err:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn data_values_round_trip(x in any::<i64>(), address in "\\PC{1,40}") {
        let (store, ogm) = setup();
        let mut module = ogm.create(&fc::flex_conveyor_module(), &inst("M1")).unwrap();
        module.set_one(&fc::has_grid_x(), Literal::integer(x)).unwrap();
        let mut service = ogm.create(&svc::service(), &inst("S1")).unwrap();
        service.set_one(&svc::has_address(), Literal::string(&address)).unwrap();
        ogm.commit(&mut [&mut module, &mut service]).unwrap();
        let snap = store.snapshot();
        let m = ogm.fetch(&inst("M1"), &fc::flex_conveyor_module(), &ScopeSpec::shallow(), &snap).unwrap();
        let s = ogm.fetch(&inst("S1"), &svc::service(), &ScopeSpec::shallow(), &snap).unwrap();
        prop_assert_eq!(m.literal(&fc::has_grid_x()), Some(&Literal::integer(x)));
        prop_assert_eq!(s.literal(&svc::has_address()).map(Literal::lexical), Some(address.as_str()));
    }

    #[test]
    fn ill_formed_integers_never_reach_the_store(lex in "[^0-9+-]{1,8}") {
        let (store, ogm) = setup();
        let head = store.head();
        let mut module = ogm.create(&fc::flex_conveyor_module(), &inst("M1")).unwrap();
        let err = module.set_one(&fc::has_grid_x(), Literal::typed(&lex, kapps_core::vocab::xsd::integer())).unwrap_err();
        let is_datatype = matches!(err, OgmError::Boundary(BoundaryError::Datatype { .. }));
        prop_assert!(is_datatype, "{:?}", err);
        prop_assert_eq!(store.head(), head);
    }
}
