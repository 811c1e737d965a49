//! WebSocket transport for live sessions: one engine per connection, one thread per
//! connection.
//!
//! Clients connect to `/session?version=1`, optionally adding `&seed=N` to
//! override the configured task seed for that session.

// The handshake callback signature and the error type are tungstenite's.
#![allow(clippy::result_large_err)]

use std::io::{self, ErrorKind};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use tungstenite::handshake::server::{ErrorResponse, Request, Response};
use tungstenite::http::StatusCode;
use tungstenite::{Error as WsError, Message, WebSocket};

use super::config::SessionConfig;
use super::protocol::{error_record, Session, PROTOCOL_VERSION};

pub const SESSION_PATH: &str = "/session";
/// Snapshots are coalesced to at most one per interval.
pub const SNAPSHOT_INTERVAL: Duration = Duration::from_millis(16);

fn query_param<'r>(req: &'r Request, key: &str) -> Option<&'r str> {
    req.uri()
        .query()?
        .split('&')
        .find_map(|kv| kv.strip_prefix(key)?.strip_prefix('='))
}

fn refuse(status: StatusCode, reason: String) -> ErrorResponse {
    let mut resp = ErrorResponse::new(Some(reason));
    *resp.status_mut() = status;
    resp.headers_mut()
        .insert("X-Protocol-Version", PROTOCOL_VERSION.to_string().parse().unwrap());
    resp
}

fn check_request(req: &Request, resp: Response) -> Result<Response, ErrorResponse> {
    if req.uri().path() != SESSION_PATH {
        return Err(refuse(StatusCode::NOT_FOUND, format!("unknown path; connect to {SESSION_PATH}?version={PROTOCOL_VERSION}")));
    }
    if query_param(req, "seed").is_some_and(|s| s.parse::<u64>().is_err()) {
        return Err(refuse(StatusCode::BAD_REQUEST, "seed must be an unsigned integer".into()));
    }
    match query_param(req, "version") {
        Some(v) if v == PROTOCOL_VERSION.to_string() => Ok(resp),
        Some(v) => Err(refuse(
            StatusCode::BAD_REQUEST,
            format!("unsupported protocol version {v}; server speaks version {PROTOCOL_VERSION}"),
        )),
        None => Err(refuse(
            StatusCode::BAD_REQUEST,
            format!("missing protocol version; server speaks version {PROTOCOL_VERSION}"),
        )),
    }
}

fn is_timeout(e: &WsError) -> bool {
    matches!(e, WsError::Io(io) if matches!(io.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut))
}

fn run_connection(stream: TcpStream, mut config: SessionConfig) -> Result<(), WsError> {
    stream.set_nodelay(true).ok();
    let mut seed = None;
    let handshake = tungstenite::accept_hdr(stream, |req: &Request, resp: Response| {
        seed = query_param(req, "seed").and_then(|s| s.parse().ok());
        check_request(req, resp)
    });
    let mut ws: WebSocket<TcpStream> = match handshake {
        Ok(ws) => ws,
        Err(e) => {
            log::debug!("handshake refused: {e}");
            return Ok(());
        }
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let started = Instant::now();
    let mut session = match Session::new(&config) {
        Ok(s) => s,
        Err(e) => {
            ws.send(Message::text(error_record(None, &e.to_string())))?;
            return ws.close(None);
        }
    };
    ws.send(Message::text(session.snapshot().to_record()))?;
    let mut last_sent = Instant::now();
    let mut dirty = false;

    loop {
        let timeout = if dirty {
            Some(SNAPSHOT_INTERVAL.saturating_sub(last_sent.elapsed()).max(Duration::from_millis(1)))
        } else {
            None
        };
        ws.get_ref().set_read_timeout(timeout).ok();
        match ws.read() {
            Ok(Message::Text(text)) => {
                let outcome = session.handle_batch(&text, started.elapsed().as_secs_f64());
                for reply in outcome.replies {
                    ws.send(Message::text(reply))?;
                }
                dirty |= outcome.applied > 0;
            }
            Ok(Message::Binary(_)) => ws.send(Message::text(error_record(None, "binary messages are not supported")))?,
            Ok(Message::Close(_)) => {
                // Let tungstenite finish the close handshake.
                while ws.read().is_ok() {}
                return Ok(());
            }
            Ok(_) => {}
            Err(e) if is_timeout(&e) => {}
            Err(WsError::ConnectionClosed | WsError::AlreadyClosed) => return Ok(()),
            Err(e) => return Err(e),
        }
        if dirty && last_sent.elapsed() >= SNAPSHOT_INTERVAL {
            ws.send(Message::text(session.snapshot().to_record()))?;
            last_sent = Instant::now();
            dirty = false;
        }
    }
}

/// Accepts connections until `stop` is set. Each connection gets its own session
/// built from `config`.
pub fn serve(listener: TcpListener, config: SessionConfig, stop: Arc<AtomicBool>) -> io::Result<()> {
    listener.set_nonblocking(true)?;
    while !stop.load(Ordering::Relaxed) {
        match listener.accept() {
            Ok((stream, peer)) => {
                stream.set_nonblocking(false)?;
                let config = config.clone();
                thread::spawn(move || {
                    if let Err(e) = run_connection(stream, config) {
                        log::debug!("connection {peer} ended: {e}");
                    }
                });
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(5)),
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

/// A server running on a background thread.
pub struct ServerHandle {
    pub addr: SocketAddr,
    stop: Arc<AtomicBool>,
    join: Option<JoinHandle<io::Result<()>>>,
}

impl ServerHandle {
    pub fn url(&self) -> String {
        format!("ws://{}{SESSION_PATH}?version={PROTOCOL_VERSION}", self.addr)
    }

    pub fn shutdown(mut self) -> io::Result<()> {
        self.stop_thread()
    }

    fn stop_thread(&mut self) -> io::Result<()> {
        self.stop.store(true, Ordering::Relaxed);
        match self.join.take() {
            Some(j) => j.join().unwrap_or_else(|_| Err(io::Error::other("server thread panicked"))),
            None => Ok(()),
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        let _ = self.stop_thread();
    }
}

/// Binds `addr` (port 0 picks a free port) and serves in the background.
pub fn spawn_server(addr: &str, config: SessionConfig) -> io::Result<ServerHandle> {
    let listener = TcpListener::bind(addr)?;
    let addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let flag = stop.clone();
    let join = thread::spawn(move || serve(listener, config, flag));
    Ok(ServerHandle {
        addr,
        stop,
        join: Some(join),
    })
}
