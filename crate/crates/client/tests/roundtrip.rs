use std::sync::Arc;

use kapps_client::{Client, ClientError};
use kapps_core::wire::{ErrorKind, LoadRequest, QueryRequest};
use kapps_server::AppState;

async fn client() -> Client {
    let state = Arc::new(AppState::bootstrap().unwrap());
    let addr = kapps_server::spawn(([127, 0, 0, 1], 0).into(), state).await.unwrap();
    Client::new(format!("http://{addr}/"))
}

#[tokio::test]
async fn load_and_query_over_http() {
    let c = client().await;
    let head = c.status().await.unwrap().head;
    c.load(&LoadRequest {
        turtle: "<http://example.org/a> <http://example.org/p> \"x\" .".into(),
        graph: None,
        base: None,
    })
    .await
    .unwrap();
    let resp = c
        .query(&QueryRequest {
            query: "SELECT ?o WHERE { <http://example.org/a> <http://example.org/p> ?o }".into(),
            at: None,
        })
        .await
        .unwrap();
    assert_eq!(resp.text, "?o\n\"x\"\n");
    assert_eq!(c.history().await.unwrap().entries.len() as u64, head + 1);
    let then = c.history_at(&head.to_string()).await.unwrap();
    assert_eq!(then.txn, head);
    let ts = c.history().await.unwrap().entries.last().unwrap().timestamp.to_rfc3339();
    assert_eq!(c.history_at(&ts).await.unwrap().txn, head + 1);
}

#[tokio::test]
async fn structured_errors_survive_the_wire() {
    let c = client().await;
    let err = c
        .query(&QueryRequest {
            query: "ASK {".into(),
            at: None,
        })
        .await
        .unwrap_err();
    assert_eq!(err.kind(), Some(ErrorKind::Usage));
    let err = c.history_diff("5", Some("1")).await.unwrap_err();
    assert_eq!(err.kind(), Some(ErrorKind::Usage), "{err}");
}

#[tokio::test]
async fn unreachable_service_is_a_transport_error() {
    let c = Client::new("http://127.0.0.1:1");
    assert!(matches!(c.status().await, Err(ClientError::Transport(_))));
}
