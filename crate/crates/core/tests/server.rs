use std::fs;
use std::net::TcpStream;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use tungstenite::stream::MaybeTlsStream;
use tungstenite::{connect, Message, WebSocket};
use vrtouch_core::input::{parse_trace, serialize_event, InputTrace};
use vrtouch_core::records::record_type;
use vrtouch_core::routing::TechniqueKind;
use vrtouch_core::session::{replay, spawn_server, SceneSnapshot, ServerHandle, SessionConfig};
use vrtouch_core::tasks::{parse_metrics, LayoutKind};

type Client = WebSocket<MaybeTlsStream<TcpStream>>;

fn golden(name: &str) -> InputTrace {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    parse_trace(&fs::read(path).unwrap()).unwrap()
}

fn open(server: &ServerHandle, query: &str) -> Client {
    let (ws, _) = connect(format!("{}{query}", server.url())).unwrap();
    if let MaybeTlsStream::Plain(s) = ws.get_ref() {
        s.set_read_timeout(Some(Duration::from_secs(10))).unwrap();
    }
    ws
}

fn recv(ws: &mut Client) -> String {
    loop {
        match ws.read().unwrap() {
            Message::Text(t) => return t.to_string(),
            _ => continue,
        }
    }
}

/// Reads messages until a snapshot at `revision` arrives, returning it and every
/// non-snapshot message seen on the way.
fn until_revision(ws: &mut Client, revision: u64) -> (SceneSnapshot, Vec<String>) {
    let deadline = Instant::now() + Duration::from_secs(10);
    let mut last = 0;
    let mut other = Vec::new();
    while Instant::now() < deadline {
        let msg = recv(ws);
        if record_type(&msg).as_deref() == Some("snapshot") {
            let snap = SceneSnapshot::from_record(&msg).unwrap();
            assert!(snap.revision >= last, "snapshots out of order");
            last = snap.revision;
            if snap.revision == revision {
                return (snap, other);
            }
        } else {
            other.push(msg);
        }
    }
    panic!("no snapshot at revision {revision}; last was {last}");
}

fn send_events(ws: &mut Client, trace: &InputTrace, batch: usize) {
    for chunk in trace.events.chunks(batch) {
        let text: String = chunk.iter().map(|e| serialize_event(e) + "\n").collect();
        ws.send(Message::text(text)).unwrap();
    }
}

#[test]
fn connect_sends_initial_snapshot() {
    let server = spawn_server("127.0.0.1:0", SessionConfig::default()).unwrap();
    let mut ws = open(&server, "");
    let snap = SceneSnapshot::from_record(&recv(&mut ws)).unwrap();
    assert_eq!(snap.revision, 1);
    assert_eq!(snap.t, None);
}

#[test]
fn scripted_batches_match_replay() {
    let server = spawn_server("127.0.0.1:0", SessionConfig::default()).unwrap();
    let trace = golden("gaze_switch_basic.ndjson");
    let mut ws = open(&server, "");
    recv(&mut ws);
    send_events(&mut ws, &trace, 3);
    let (snap, other) = until_revision(&mut ws, 1 + trace.events.len() as u64);
    assert!(other.is_empty(), "{other:?}");
    assert_eq!(snap, replay(&SessionConfig::default(), &trace).unwrap().snapshot);
}

#[test]
fn transfer_session_streams_metrics() {
    let config = SessionConfig::transfer(LayoutKind::Four, TechniqueKind::GazeTouch, 3);
    let server = spawn_server("127.0.0.1:0", config.clone()).unwrap();
    let trace = golden("transfer_four.ndjson");
    let mut ws = open(&server, "");
    recv(&mut ws);
    send_events(&mut ws, &trace, 50);
    let (snap, other) = until_revision(&mut ws, 1 + trace.events.len() as u64);
    let expected = replay(&config, &trace).unwrap();
    assert_eq!(snap, expected.snapshot);
    assert_eq!(parse_metrics(&other.join("\n")).unwrap(), expected.metrics);
}

#[test]
fn concurrent_sessions_are_independent() {
    let config = SessionConfig::transfer(LayoutKind::Fifteen, TechniqueKind::GazeTouch, 0);
    let server = spawn_server("127.0.0.1:0", config.clone()).unwrap();
    let trace = golden("gaze_switch_basic.ndjson");
    let mut a = open(&server, "&seed=1");
    let mut b = open(&server, "&seed=2");
    let a0 = SceneSnapshot::from_record(&recv(&mut a)).unwrap();
    let b0 = SceneSnapshot::from_record(&recv(&mut b)).unwrap();
    assert_ne!(a0.task.targets, b0.task.targets, "different seeds give different blocks");

    // Interleave: a gets the whole trace, b only its first half.
    let half = trace.events.len() / 2;
    for (i, e) in trace.events.iter().enumerate() {
        a.send(Message::text(serialize_event(e))).unwrap();
        if i < half {
            b.send(Message::text(serialize_event(e))).unwrap();
        }
    }
    let (sa, _) = until_revision(&mut a, 1 + trace.events.len() as u64);
    let (sb, _) = until_revision(&mut b, 1 + half as u64);

    let with_seed = |seed| SessionConfig { seed, ..config.clone() };
    let prefix = InputTrace { header: trace.header.clone(), events: trace.events[..half].to_vec() };
    // The trace header carries seed 0, so replay against the session's own header.
    let mut ha = trace.clone();
    ha.header.seed = 1;
    let mut hb = prefix;
    hb.header.seed = 2;
    assert_eq!(sa, replay(&with_seed(1), &ha).unwrap().snapshot);
    assert_eq!(sb, replay(&with_seed(2), &hb).unwrap().snapshot);
}

#[test]
fn version_mismatch_is_refused_with_version_info() {
    let server = spawn_server("127.0.0.1:0", SessionConfig::default()).unwrap();
    let base = format!("ws://{}/session", server.addr);
    for url in [format!("{base}?version=2"), base.clone()] {
        match connect(url.as_str()) {
            Err(tungstenite::Error::Http(resp)) => {
                assert_eq!(resp.status(), 400);
                assert_eq!(resp.headers()["X-Protocol-Version"], "1");
                let body = String::from_utf8(resp.body().clone().unwrap_or_default()).unwrap();
                assert!(body.contains("version 1"), "{body}");
            }
            other => panic!("{url}: expected refusal, got {other:?}"),
        }
    }
    match connect(format!("ws://{}/elsewhere?version=1", server.addr).as_str()) {
        Err(tungstenite::Error::Http(resp)) => assert_eq!(resp.status(), 404),
        other => panic!("expected refusal, got {other:?}"),
    }
}

#[test]
fn malformed_messages_get_errors_and_session_continues() {
    let server = spawn_server("127.0.0.1:0", SessionConfig::default()).unwrap();
    let mut ws = open(&server, "");
    recv(&mut ws);
    ws.send(Message::text("{\"type\":\"contact\",\"id\":1}")).unwrap();
    let err = recv(&mut ws);
    assert_eq!(record_type(&err).as_deref(), Some("error"));
    assert!(err.contains("\"line\":1"));
    ws.send(Message::text("{\"type\":\"command\",\"cmd\":\"show_all\"}")).unwrap();
    let (snap, _) = until_revision(&mut ws, 2);
    assert!(snap.stack.collapsed);
}

#[test]
fn downloaded_trace_replays_to_live_state() {
    let config = SessionConfig::puzzle(4, 2, true, 9);
    let server = spawn_server("127.0.0.1:0", config.clone()).unwrap();
    let mut ws = open(&server, "");
    recv(&mut ws);
    // No timestamps: the server stamps arrival time.
    let batches = [
        "{\"type\":\"command\",\"cmd\":\"select_layer\",\"arg\":2}",
        "{\"type\":\"contact\",\"id\":1,\"phase\":\"down\",\"x\":3.3,\"y\":4.4}\n{\"type\":\"contact\",\"id\":1,\"phase\":\"move\",\"x\":7.123456789,\"y\":2}",
        "{\"type\":\"contact\",\"id\":1,\"phase\":\"up\",\"x\":7.123456789,\"y\":2}\n{\"type\":\"head\",\"px\":0,\"py\":0,\"pz\":12,\"qw\":1,\"qx\":0,\"qy\":0,\"qz\":0}",
        "{\"type\":\"command\",\"cmd\":\"next\"}",
    ];
    for b in batches {
        ws.send(Message::text(b)).unwrap();
        std::thread::sleep(Duration::from_millis(5));
    }
    let (live, other) = until_revision(&mut ws, 7);
    assert_eq!(other.len(), 1, "one puzzle scored");
    assert!(live.stack.peek);
    ws.send(Message::text("{\"type\":\"download\"}")).unwrap();
    let text = recv(&mut ws);
    let trace = parse_trace(text.as_bytes()).unwrap();
    assert_eq!(trace.events.len(), 6);
    assert!(trace.events.windows(2).all(|w| w[0].t() <= w[1].t()));
    // The header does not carry task settings, so replay with the session config.
    assert_eq!(replay(&config, &trace).unwrap().snapshot, live);
}
