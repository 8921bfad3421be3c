use std::sync::atomic::{AtomicUsize, Ordering};

use super::*;
use crate::fixtures;
use crate::ogm::LogicalClock;
use crate::store::{QuadPattern, Store};
use crate::vocab::{fc, xsd};

fn iri(s: &str) -> Iri {
    Iri::new(s).unwrap()
}

fn setup() -> Arc<Store> {
    Arc::new(fixtures::bootstrap_store().unwrap())
}

fn ogm(store: &Arc<Store>, actor: &str) -> Arc<Ogm> {
    Arc::new(Ogm::with_clock(store.clone(), iri(actor), Arc::new(LogicalClock::default())))
}

fn module_descriptor(n: usize) -> ServiceDescriptor {
    let base = format!("http://example.org/m{n}");
    let wf = |kind: &str, class: Iri, params: Vec<ParameterSpec>| WorkflowDescriptor {
        iri: iri(&format!("{base}/{kind}")),
        class,
        parameters: params,
        outcome: Some(ParameterSpec::new("result", xsd::string())),
    };
    ServiceDescriptor {
        iri: iri(&format!("{base}/service")),
        class: fc::module_service(),
        provided_by: Some(iri(&base)),
        address: None,
        workflows: vec![
            wf("reserve", fc::reserve_workflow(), vec![ParameterSpec::new("requester", xsd::any_uri())]),
            wf("convey", fc::convey_workflow(), vec![ParameterSpec::new("box", xsd::any_uri())]),
            wf("receive", fc::receive_workflow(), vec![ParameterSpec::new("box", xsd::any_uri()), ParameterSpec::new("hops", xsd::integer())]),
        ],
    }
}

fn echo_handlers(d: &ServiceDescriptor, calls: Arc<AtomicUsize>) -> Vec<(Iri, Handler)> {
    d.workflows
        .iter()
        .map(|w| {
            let calls = calls.clone();
            let name = w.iri.to_string();
            let h: Handler = Arc::new(move |args: &Arguments| {
                calls.fetch_add(1, Ordering::SeqCst);
                Ok(format!("{name}:{}", args.len()))
            });
            (w.iri.clone(), h)
        })
        .collect()
}

fn count(store: &Store, class: &Iri) -> usize {
    store
        .match_pattern(&QuadPattern::any().predicate(rdf::type_()).object(Term::Iri(class.clone())))
        .len()
}

#[test]
fn register_discover_deregister() {
    let store = setup();
    let transport: Arc<dyn Transport> = Arc::new(LocalTransport::new());
    let calls = Arc::new(AtomicUsize::new(0));
    let mws: Vec<Middleware> = (1..=4)
        .map(|n| {
            let mw = Middleware::new(ogm(&store, &format!("http://example.org/agent{n}")), transport.clone());
            let d = module_descriptor(n);
            mw.register_service(&d, echo_handlers(&d, calls.clone())).unwrap();
            mw
        })
        .collect();
    assert_eq!(mws[0].discover(&fc::reserve_workflow()).len(), 4);
    assert_eq!(mws[0].discover(&svc::workflow()).len(), 12);
    assert!(mws[0].discover(&iri("http://example.org/Nothing")).is_empty());
    let hit = &mws[0].discover(&fc::reserve_workflow())[1];
    assert_eq!(hit.resource, Some(iri("http://example.org/m2")));

    let workflows_before = count(&store, &fc::reserve_workflow());
    let head = store.head();
    let txn = mws[2].deregister_service(&module_descriptor(3).iri).unwrap();
    assert_eq!(txn.0, head.0 + 1);
    assert_eq!(mws[0].discover(&fc::reserve_workflow()).len(), 3);
    assert_eq!(count(&store, &fc::reserve_workflow()), workflows_before);
    assert_eq!(count(&store, &fc::module_service()), 4);
    let entry = store.history().entry(txn).unwrap().clone();
    let addr_deletes = entry.deletes.iter().filter(|q| q.predicate == Term::Iri(svc::has_address())).count();
    assert_eq!(addr_deletes, 1);
    assert!(entry.inserts.iter().all(|q| q.predicate != Term::Iri(svc::has_address())));
    assert!(entry.deletes.iter().all(|q| q.predicate == Term::Iri(svc::has_address())));

    // Idempotent.
    assert_eq!(mws[2].deregister_service(&module_descriptor(3).iri).unwrap(), txn);
    assert!(matches!(
        mws[0].deregister_service(&iri("http://example.org/none")),
        Err(MiddlewareError::UnknownService(_))
    ));

    // Re-registration reuses the same individuals.
    let triples_before = store.len();
    let d = module_descriptor(3);
    mws[2].register_service(&d, echo_handlers(&d, calls.clone())).unwrap();
    assert_eq!(mws[0].discover(&fc::reserve_workflow()).len(), 4);
    assert_eq!(count(&store, &fc::reserve_workflow()), workflows_before);
    assert_eq!(count(&store, &svc::parameter()), 16);
    assert!(store.len() > triples_before);
}

#[test]
fn invoke_validates_arguments_and_is_pure() {
    let store = setup();
    let transport: Arc<dyn Transport> = Arc::new(LocalTransport::new());
    let calls = Arc::new(AtomicUsize::new(0));
    let mw = Middleware::new(ogm(&store, "http://example.org/a"), transport.clone());
    let d = module_descriptor(1);
    mw.register_service(&d, echo_handlers(&d, calls.clone())).unwrap();
    let hit = mw.discover(&fc::receive_workflow()).remove(0);
    let head = store.head();

    let args = |pairs: &[(&str, &str)]| pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    let out = mw
        .invoke(&hit.workflow, &hit.address, args(&[("box", "http://example.org/b"), ("hops", "3")]))
        .unwrap();
    assert!(out.ends_with(":2"));
    assert_eq!(store.head(), head);

    for bad in [
        args(&[("box", "http://example.org/b")]),
        args(&[("box", "http://example.org/b"), ("hops", "three")]),
        args(&[("box", "http://example.org/b"), ("hops", "1"), ("extra", "x")]),
    ] {
        assert!(matches!(mw.invoke(&hit.workflow, &hit.address, bad), Err(Fault::ArgumentMismatch { .. })));
    }
    assert_eq!(calls.load(Ordering::SeqCst), 1);
    assert!(matches!(
        mw.invoke(&iri("http://example.org/m1/unknown"), &hit.address, BTreeMap::new()),
        Err(Fault::UnknownWorkflow { .. })
    ));

    mw.deregister_service(&d.iri).unwrap();
    assert!(matches!(
        mw.invoke(&hit.workflow, &hit.address, args(&[("box", "http://example.org/b"), ("hops", "1")])),
        Err(Fault::Unreachable { .. })
    ));
}

#[test]
fn tcp_transport_round_trip() {
    let store = setup();
    let transport: Arc<dyn Transport> = Arc::new(TcpTransport::new());
    let mw = Middleware::new(ogm(&store, "http://example.org/a"), transport.clone());
    let d = module_descriptor(1);
    mw.register_service(&d, echo_handlers(&d, Arc::new(AtomicUsize::new(0)))).unwrap();
    let hit = mw.discover(&fc::convey_workflow()).remove(0);
    assert!(hit.address.starts_with(TCP_SCHEME));
    let mut args = BTreeMap::new();
    args.insert("box".to_owned(), "http://example.org/b".to_owned());
    assert!(mw.invoke(&hit.workflow, &hit.address, args.clone()).unwrap().ends_with(":1"));
    assert!(matches!(
        mw.invoke(&hit.workflow, &hit.address, BTreeMap::new()),
        Err(Fault::ArgumentMismatch { .. })
    ));
    mw.deregister_service(&d.iri).unwrap();
    assert!(matches!(transport.call("tcp://127.0.0.1:1", &InvocationRequest { workflow: hit.workflow, args }), Err(Fault::Unreachable { .. })));
}

#[test]
fn handler_rejections_forward_the_report() {
    let store = setup();
    let transport: Arc<dyn Transport> = Arc::new(LocalTransport::new());
    let o = ogm(&store, "http://example.org/a");
    let mw = Middleware::new(o.clone(), transport);
    let d = ServiceDescriptor {
        workflows: vec![WorkflowDescriptor {
            iri: iri("http://example.org/w"),
            class: fc::convey_workflow(),
            parameters: vec![],
            outcome: None,
        }],
        ..module_descriptor(9)
    };
    let writer = o.clone();
    let h: Handler = Arc::new(move |_args: &Arguments| {
        // A box without a state violates the box shape.
        let mut b = writer.create(&fc::box_(), &iri("http://example.org/box"))?;
        writer.commit_one(&mut b)?;
        Ok(String::new())
    });
    mw.register_service(&d, [(iri("http://example.org/w"), h)]).unwrap();
    let hit = mw.discover(&fc::convey_workflow()).remove(0);
    let fault = mw.invoke(&hit.workflow, &hit.address, BTreeMap::new()).unwrap_err();
    let report = fault.report().expect("report forwarded");
    assert!(!report.conforms);
    let wire = serde_json::to_string(&InvocationResponse::from(Err(fault.clone()))).unwrap();
    let back: Result<String, Fault> = serde_json::from_str::<InvocationResponse>(&wire).unwrap().into();
    assert_eq!(back, Err(fault));
}

#[test]
fn describe_round_trips_descriptor() {
    let store = setup();
    let mw = Middleware::new(ogm(&store, "http://example.org/a"), Arc::new(LocalTransport::new()));
    let d = module_descriptor(1);
    mw.register_service(&d, echo_handlers(&d, Arc::new(AtomicUsize::new(0)))).unwrap();
    let view = store.snapshot();
    let mut got = describe_service(mw.ogm(), &d.iri, &view).unwrap();
    got.workflows.sort_by(|a, b| a.iri.cmp(&b.iri));
    let mut want = d.clone();
    want.address = mw.address();
    want.workflows.sort_by(|a, b| a.iri.cmp(&b.iri));
    assert_eq!(got, want);
}

#[test]
fn empty_service_registers_alone() {
    let store = setup();
    let mw = Middleware::new(ogm(&store, "http://example.org/a"), Arc::new(LocalTransport::new()));
    let d = ServiceDescriptor {
        workflows: vec![],
        ..module_descriptor(1)
    };
    mw.register_service(&d, []).unwrap();
    assert_eq!(count(&store, &fc::module_service()), 1);
    assert_eq!(count(&store, &fc::reserve_workflow()), 0);
}

#[test]
fn connectors_follow_the_lifecycle() {
    let msg = Message::new(iri("http://example.org/Sample")).with("value", Literal::double(1.5));
    let mut lb = LoopbackConnector::new();
    assert!(matches!(lb.provide(&msg), Err(ConnectorError::NotConnected)));
    lb.connect().unwrap();
    lb.provide(&msg).unwrap();
    let bytes = lb.peek_bytes().unwrap().to_vec();
    let got = lb.consume().unwrap().unwrap();
    assert_eq!(serde_json::to_vec(&got).unwrap(), bytes);
    assert_eq!(serde_json::to_vec(&msg).unwrap(), bytes);
    assert!(lb.consume().unwrap().is_none());
    lb.disconnect().unwrap();
    assert!(matches!(lb.consume(), Err(ConnectorError::NotConnected)));

    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("torque.csv");
    let b = dir.path().join("force.csv");
    std::fs::write(&a, "torque_My,N·m\n0,1\n0.2,2\n").unwrap();
    std::fs::write(&b, "force_Fy,N\n0.1,10\n").unwrap();
    let mut replay = ReplayConnector::new([&a, &b]);
    assert!(matches!(replay.consume(), Err(ConnectorError::NotConnected)));
    replay.connect().unwrap();
    let mut seen = Vec::new();
    while let Some(m) = replay.consume().unwrap() {
        seen.push((m.field("channel").unwrap().lexical().to_owned(), m.field("value").unwrap().as_f64().unwrap()));
    }
    assert_eq!(
        seen,
        vec![("torque_My".into(), 1.0), ("force_Fy".into(), 10.0), ("torque_My".into(), 2.0)]
    );
    assert!(matches!(replay.provide(&msg), Err(ConnectorError::ReadOnly)));
}
