use std::collections::VecDeque;

use super::*;
use crate::fixtures;
use crate::vocab::sh;

fn conveyor(w: usize, h: usize) -> Conveyor {
    let store = Arc::new(fixtures::bootstrap_store().unwrap());
    Conveyor::build(store, w, h, ConveyorOptions::default()).unwrap()
}

/// Shortest hop count by breadth-first search over the adjacency map.
fn bfs_distance(t: &Topology, from: &Iri, to: &Iri) -> usize {
    let mut seen = BTreeMap::from([(from.clone(), 0usize)]);
    let mut queue = VecDeque::from([from.clone()]);
    while let Some(m) = queue.pop_front() {
        let d = seen[&m];
        if &m == to {
            return d;
        }
        for n in t.adjacency[&m].values() {
            if !seen.contains_key(n) {
                seen.insert(n.clone(), d + 1);
                queue.push_back(n.clone());
            }
        }
    }
    unreachable!("grid is connected")
}

#[test]
fn adjacency_is_symmetric_and_next_hop_is_shortest() {
    for (w, h) in [(1, 1), (2, 1), (3, 3), (4, 2)] {
        let t = Topology::grid(w, h);
        for (m, nbrs) in &t.adjacency {
            for (d, n) in nbrs {
                assert_eq!(t.neighbor(n, d.opposite()), Some(m));
            }
        }
        for a in &t.modules {
            for b in &t.modules {
                let want = bfs_distance(&t, a, b);
                assert_eq!(t.distance(a, b), Some(want));
                match t.next_hop(a, b, None) {
                    None => assert_eq!(a, b),
                    Some(d) => assert_eq!(bfs_distance(&t, t.neighbor(a, d).unwrap(), b) + 1, want),
                }
            }
        }
    }
    let t = Topology::grid(3, 1);
    assert_eq!(t.next_hop(&module_iri(1), &module_iri(3), Some(Direction::E)), Some(Direction::E));
}

#[test]
fn topology_commit_materializes_links() {
    let c = conveyor(3, 3);
    let view = c.store().snapshot();
    let v = shacl::data_view(&view, &shapes_graph());
    let m5 = Term::Iri(module_iri(5));
    for (d, n) in [(Direction::N, 2), (Direction::E, 6), (Direction::S, 8), (Direction::W, 4)] {
        assert_eq!(v.objects(&m5, &Term::Iri(d.neighbor_property())), vec![Term::Iri(module_iri(n))]);
    }
    assert_eq!(discover(&v, &fc::reserve_workflow()).len(), 9);
    assert_eq!(discover(&v, &fc::receive_workflow()).len(), 9);
}

#[test]
fn single_module_grid_delivers_in_place() {
    let outcome = run_simulation(&SimConfig::new(1, 1, 1)).unwrap();
    assert_eq!(outcome.report.delivered_count, 1);
    assert!(outcome.report.rejections.is_empty());
}

#[test]
fn handshake_transfers_possession_in_one_transaction() {
    let c = conveyor(2, 1);
    let (m1, m2) = (module_iri(1), module_iri(2));
    let b = c.create_box(&m1, &m2).unwrap();
    assert_eq!(c.reserve(&m1, &m2).unwrap(), "granted");
    assert_eq!(c.reserve(&module_iri(1), &m2).unwrap(), "granted");
    let head = c.store().head();
    let txn: u64 = c.convey(&m1, &m2, &b).unwrap().parse().unwrap();
    assert_eq!(txn, head.0 + 1);
    let entry = c.store().history().entry(crate::store::TxnId(txn)).unwrap().clone();
    let touches = |p: Iri| entry.inserts.iter().chain(&entry.deletes).any(|q| q.predicate == Term::Iri(p.clone()));
    assert!(touches(fc::is_possessed_by()) && touches(fc::has_possession()));
    assert_eq!(c.receive(&m2, &b).unwrap(), "delivered");
    let view = c.store().snapshot();
    let v = shacl::data_view(&view, &shapes_graph());
    assert!(v.has(&Term::Iri(b.clone()), &Term::Iri(fc::has_state()), &Term::Iri(fc::state_delivered())));
    assert!(v.objects(&Term::Iri(b), &Term::Iri(fc::is_possessed_by())).is_empty());
}

#[test]
fn occupied_module_denies_reservation_and_rejects_unreserved_convey() {
    let c = conveyor(2, 1);
    let (m1, m2) = (module_iri(1), module_iri(2));
    let _occupant = c.create_box(&m2, &m2).unwrap();
    let b = c.create_box(&m1, &m2).unwrap();
    assert_eq!(c.reserve(&m1, &m2).unwrap(), "denied");
    let len = c.store().len();
    let head = c.store().head();
    let fault = c.convey(&m1, &m2, &b).unwrap_err();
    let report = fault.report().expect("gate report");
    assert!(report.components().any(|x| *x == sh::max_count_component()));
    assert_eq!(c.store().len(), len);
    assert_eq!(c.store().head(), head);
}

#[test]
fn wms_refuses_boxes_outside_the_grid() {
    let c = conveyor(2, 2);
    assert!(matches!(c.create_box(&module_iri(1), &module_iri(9)), Err(SimError::Config(_))));
}

#[test]
fn fault_free_runs_deliver_everything() {
    for seed in 0..5 {
        let mut cfg = SimConfig::new(3, 3, 5);
        cfg.seed = seed;
        cfg.safety_observer = true;
        let r = run_simulation(&cfg).unwrap().report;
        assert_eq!(r.delivered_count, 5, "seed {seed}\n{}", r.to_text());
        assert!(r.rejections.is_empty());
        assert!(r.safety_violations.is_empty(), "{:?}", r.safety_violations);
    }
}

#[test]
fn runs_are_deterministic() {
    let mut cfg = SimConfig::new(3, 3, 4);
    cfg.seed = 7;
    cfg.fault = FaultConfig::new(FaultMode::SkipReservation);
    let a = run_simulation(&cfg).unwrap().report;
    let b = run_simulation(&cfg).unwrap().report;
    assert_eq!(a, b);
}

#[test]
fn skip_reservation_into_occupied_module_is_rejected() {
    let mut cfg = SimConfig::new(2, 1, 1);
    cfg.fault = FaultConfig::new(FaultMode::SkipReservation);
    cfg.occupy = vec![2];
    let r = run_simulation(&cfg).unwrap().report;
    assert!(r.count_component(&sh::max_count_component()) >= 1, "{}", r.to_text());
    let first = &r.rejections[0];
    assert_eq!(first.actor, module_iri(1));
    assert!(first.report.results.iter().all(|res| res.focus_node == Term::Iri(module_iri(2))));
    assert_eq!(r.delivered_count, 1);
}

#[test]
fn deliver_while_possessed_is_rejected_by_the_sparql_shape() {
    let mut cfg = SimConfig::new(2, 2, 2);
    cfg.fault = FaultConfig::new(FaultMode::DeliverWhilePossessed);
    cfg.safety_observer = true;
    let r = run_simulation(&cfg).unwrap().report;
    assert!(r.count_component(&sh::sparql_component()) >= 1, "{}", r.to_text());
    assert_eq!(r.delivered_count, 2);
    assert!(r.safety_violations.is_empty());
}

#[test]
fn at_txn_trigger_fires_once() {
    let mut cfg = SimConfig::new(3, 1, 1);
    cfg.fault = FaultConfig {
        mode: FaultMode::DeliverWhilePossessed,
        trigger: FaultTrigger::AtTxn(1),
        seed: 3,
    };
    let r = run_simulation(&cfg).unwrap().report;
    assert_eq!(r.rejections.len(), 1);
}

#[test]
fn shutdown_makes_module_unreachable() {
    let c = conveyor(2, 1);
    c.shutdown(&module_iri(2)).unwrap();
    assert!(matches!(c.reserve(&module_iri(1), &module_iri(2)), Err(Fault::Unreachable { .. })));
}

#[test]
fn free_running_mode_keeps_invariants() {
    let store = Arc::new(fixtures::bootstrap_store().unwrap());
    let c = Conveyor::build(store, 3, 3, ConveyorOptions {
        safety_observer: true,
        ..ConveyorOptions::default()
    })
    .unwrap();
    let boxes: Vec<Iri> = [(1, 9), (3, 7), (5, 1)]
        .iter()
        .map(|(o, d)| c.create_box(&module_iri(*o), &module_iri(*d)).unwrap())
        .collect();
    c.set_fault(FaultConfig::new(FaultMode::SkipReservation));
    let r = c.run_free(&boxes, 2000);
    assert!(r.safety_violations.is_empty(), "{:?}", r.safety_violations);
    assert!(check_possession(&shacl::data_view(&c.store().snapshot(), &shapes_graph())).is_ok());
}
