use std::time::Duration;
use unisym_core::codec::SequenceLabel;
use unisym_core::proposer::mock::{fixed_labels, MockServer};
use unisym_core::proposer::protocol::{Request, Response, Sequence};
use unisym_core::proposer::{Endpoint, ProposeError, Proposer, RemoteError, RemoteProposer};
use unisym_core::Dataset;

fn data(d: usize) -> Dataset {
    let rows: Vec<Vec<f64>> = (0..10).map(|i| (0..d).map(|j| 0.1 * (i + j) as f64).collect()).collect();
    let y = rows.iter().map(|r| r.iter().sum::<f64>()).collect();
    Dataset::from_rows(&rows, y).unwrap()
}

fn tcp(server: &MockServer) -> RemoteProposer {
    RemoteProposer::new(Endpoint::Tcp(server.endpoint()), 5)
}

fn one_input_labels() -> Vec<Vec<i32>> {
    let labels = unisym_core::proposer::EnumProposer::default().labels(1);
    labels.iter().take(5).map(|(l, _)| l.tokens.iter().map(|&t| t as i32).collect()).collect()
}

#[test]
fn five_labels_come_back_in_score_order() {
    let server = MockServer::start(fixed_labels(one_input_labels())).unwrap();
    let set = tcp(&server).propose(&data(1), 5).unwrap();
    assert_eq!(set.len(), 5);
    let scores: Vec<f64> = set.candidates.iter().map(|c| c.score).collect();
    assert_eq!(scores, vec![0.0, -1.0, -2.0, -3.0, -4.0]);
    assert_eq!(set.candidates[0].label, SequenceLabel { tokens: vec![1, 0, 1] });
}

#[test]
fn keeps_the_top_k_of_twenty() {
    let server = MockServer::start(|req: &Request| {
        let labels = unisym_core::proposer::EnumProposer::default().labels(req.d as usize);
        // Reverse order with increasing scores, so sorting matters.
        Response::Ok(
            labels
                .iter()
                .take(20)
                .enumerate()
                .rev()
                .map(|(i, (l, _))| Sequence {
                    score: 100.0 - i as f64,
                    tokens: l.tokens.iter().map(|&t| t as i32).collect(),
                })
                .collect(),
        )
    })
    .unwrap();
    let set = tcp(&server).propose(&data(2), 5).unwrap();
    assert_eq!(set.len(), 5);
    assert_eq!(set.candidates.iter().map(|c| c.score).collect::<Vec<_>>(), vec![100.0, 99.0, 98.0, 97.0, 96.0]);
}

#[test]
fn request_carries_the_dataset() {
    let server = MockServer::start(|req: &Request| {
        assert_eq!((req.d, req.n, req.k), (2, 10, 3));
        let v = req.values();
        assert_eq!(v[1], vec![0.1f32 as f64, 0.2f32 as f64, 0.3f32 as f64]);
        fixed_labels(vec![vec![1, 0, 1]])(req)
    })
    .unwrap();
    assert_eq!(tcp(&server).propose(&data(2), 3).unwrap().len(), 1);
}

#[test]
fn malformed_tokens_are_reported() {
    let server = MockServer::start(fixed_labels(vec![vec![1, 0, 1], vec![1, 0, 9999]])).unwrap();
    match tcp(&server).remote_propose(&data(1), 5) {
        Err(RemoteError::Undecodable { index: 1, .. }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn server_errors_and_garbage() {
    let server =
        MockServer::start(|_: &Request| Response::Error { code: 5, message: "model not loaded".into() }).unwrap();
    match tcp(&server).propose(&data(1), 1) {
        Err(ProposeError::Remote(RemoteError::Server { code: 5, message })) => assert_eq!(message, "model not loaded"),
        other => panic!("{other:?}"),
    }
    let garbage = MockServer::start_raw(|_| b"nope".to_vec()).unwrap();
    assert!(matches!(tcp(&garbage).remote_propose(&data(1), 1), Err(RemoteError::Malformed(_))));
}

#[test]
fn unreachable_endpoint() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let mut p = RemoteProposer::new(Endpoint::Tcp(addr.to_string()), 5);
    p.timeout = Duration::from_millis(500);
    assert!(matches!(p.remote_propose(&data(1), 1), Err(RemoteError::Connect { .. })));
}

#[test]
fn silent_server_times_out() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let mut p = RemoteProposer::new(Endpoint::Tcp(listener.local_addr().unwrap().to_string()), 5);
    p.timeout = Duration::from_millis(200);
    assert!(matches!(p.remote_propose(&data(1), 1), Err(RemoteError::Timeout(_))));
}

#[test]
fn subprocess_mode() {
    let ep: Endpoint = format!("exec:{}", env!("CARGO_BIN_EXE_unisym-mock-proposer")).parse().unwrap();
    let p = RemoteProposer::new(ep, 5);
    let set = p.propose(&data(1), 4).unwrap();
    assert_eq!(set.len(), 4);
    assert_eq!(set.candidates[0].label, SequenceLabel { tokens: vec![1, 0, 1] });
    let bad = RemoteProposer::new(Endpoint::Subprocess(vec!["/nonexistent/proposer".into()]), 5);
    assert!(matches!(bad.remote_propose(&data(1), 1), Err(RemoteError::Subprocess(_))));
}
