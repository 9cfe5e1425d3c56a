mod common;

use std::thread;

use pretzel::session::{client_request, serve_one, Request};
use pretzel::transport::{Faulty, Listener, TcpChannel};
use pretzel_core::model::{extract_features, Decision, ModelKind};
use pretzel_core::packing::PackingMode;
use pretzel_core::protocol::{client_setup, ClientModel, ProviderState, Served};

const EMAILS: [&str; 4] = [
    "cheap pills winner claim your prize now",
    "meeting notes attached for the quarterly review",
    "free offer limited time click here",
    "lunch tomorrow with the team",
];

/// One provider session on a fresh listener; returns the client's result
/// and the provider's.
fn over_tcp<T: Send>(
    state: &ProviderState,
    seed: u64,
    client: impl FnOnce(TcpChannel) -> T + Send,
) -> (T, Result<Served, pretzel_core::protocol::ProtocolError>) {
    let listener = Listener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    thread::scope(|s| {
        let h = s.spawn(move || {
            let mut ch = listener.accept().unwrap();
            serve_one(&mut ch, state, seed)
        });
        let c = client(TcpChannel::connect(addr).unwrap());
        (c, h.join().unwrap())
    })
}

fn setup(state: &ProviderState) -> ClientModel {
    let (cm, served) = over_tcp(state, 1, |mut ch| client_setup(&mut ch, &state.layout).unwrap());
    assert_eq!(served.unwrap(), Served::Setup);
    cm
}

#[test]
fn spam_over_tcp_matches_plaintext() {
    let st = common::state(ModelKind::GrnbSpam, PackingMode::AcrossRow, 11);
    let cm = setup(&st);
    for (i, email) in EMAILS.iter().enumerate() {
        let fv = cm.features(email);
        let want = st.model.classify(&fv, st.tau_q).unwrap();
        let (got, served) = over_tcp(&st, i as u64, |mut ch| {
            client_request(&mut ch, &cm, &Request::Spam(&fv), 50 + i as u64)
        });
        assert_eq!(got.unwrap(), Some(want));
        assert_eq!(served.unwrap(), Served::Spam);
    }
}

#[test]
fn topics_over_tcp_match_plaintext() {
    let st = common::state(ModelKind::MultinomialNb, PackingMode::AcrossRow, 12);
    let cm = setup(&st);
    for (i, email) in EMAILS.iter().enumerate() {
        let fv = extract_features(email, Some(&cm.vocab), st.layout.f_in);
        let Decision::Category(want) = st.model.classify(&fv, 0).unwrap() else {
            unreachable!()
        };
        let (got, served) = over_tcp(&st, i as u64, |mut ch| {
            client_request(&mut ch, &cm, &Request::TopicFull(&fv), 70 + i as u64)
        });
        assert_eq!(got.unwrap(), None);
        match served.unwrap() {
            Served::Topic { topic, .. } => assert_eq!(topic, want),
            other => panic!("unexpected {other:?}"),
        }
    }
}

#[test]
fn client_fault_over_tcp_aborts_provider() {
    let st = common::state(ModelKind::MultinomialNb, PackingMode::WithinRow, 13);
    let cm = setup(&st);
    let fv = cm.features(EMAILS[1]);
    for fail_at in 0..6 {
        let (got, served) = over_tcp(&st, 3, |ch| {
            let mut f = Faulty::new(ch, fail_at);
            let r = client_request(&mut f, &cm, &Request::TopicFull(&fv), 5);
            (r, f.tripped())
        });
        if got.1 {
            assert!(got.0.is_err(), "fail_at {fail_at}");
            assert!(served.is_err(), "provider finished despite fault at {fail_at}");
        } else {
            assert!(served.is_ok());
        }
    }
}
