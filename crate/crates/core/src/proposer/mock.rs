//! In-process stand-in for the neural proposer service, for tests and demos.

use super::protocol::{read_frame, write_frame, ProtocolError, Request, Response, Sequence};
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

type Handler = dyn Fn(&[u8]) -> Vec<u8> + Send + Sync;

/// A TCP server answering each request frame with `handler(body)`.
/// Connections are served one at a time and stay open across requests.
pub struct MockServer {
    pub addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Serve well-formed responses; malformed requests get an error frame.
    pub fn start(responder: impl Fn(&Request) -> Response + Send + Sync + 'static) -> std::io::Result<MockServer> {
        MockServer::start_raw(move |body| respond(body, &responder))
    }

    /// Serve arbitrary response bodies.
    pub fn start_raw(handler: impl Fn(&[u8]) -> Vec<u8> + Send + Sync + 'static) -> std::io::Result<MockServer> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let flag = stop.clone();
        let handler: Arc<Handler> = Arc::new(handler);
        let thread = std::thread::spawn(move || {
            for conn in listener.incoming() {
                if flag.load(Ordering::SeqCst) {
                    break;
                }
                if let Ok(mut s) = conn {
                    serve(&mut s, &*handler);
                }
            }
        });
        Ok(MockServer { addr, stop, thread: Some(thread) })
    }

    pub fn endpoint(&self) -> String {
        self.addr.to_string()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

fn serve(s: &mut (impl Read + Write), handler: &Handler) {
    while let Ok(Some(body)) = read_frame(s) {
        if write_frame(s, &handler(&body)).is_err() {
            break;
        }
    }
}

/// Decode a request body and answer it, turning decode failures into error frames.
pub fn respond(body: &[u8], responder: &dyn Fn(&Request) -> Response) -> Vec<u8> {
    match Request::decode(body) {
        Ok(req) => responder(&req).encode(),
        Err(e) => Response::Error { code: e.code(), message: e.to_string() }.encode(),
    }
}

/// Answer every request with `labels`, scored `0, -1, -2, ...` in order.
pub fn fixed_labels(labels: Vec<Vec<i32>>) -> impl Fn(&Request) -> Response + Send + Sync + 'static {
    move |_| {
        Response::Ok(
            labels.iter().enumerate().map(|(i, t)| Sequence { score: -(i as f64), tokens: t.clone() }).collect(),
        )
    }
}

/// One-shot mode: read a request frame from `input`, write the answer to `output`.
pub fn serve_once(
    input: &mut impl Read,
    output: &mut impl Write,
    responder: &dyn Fn(&Request) -> Response,
) -> Result<(), ProtocolError> {
    let body = read_frame(input)?.ok_or(ProtocolError::Truncated { need: 4, have: 0 })?;
    write_frame(output, &respond(&body, responder))
}
