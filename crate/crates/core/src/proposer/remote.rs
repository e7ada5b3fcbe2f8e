use super::protocol::{read_frame, write_frame, ProtocolError, Request, Response};
use super::{usable, Candidate, CandidateSet, ProposeError, Proposer};
use crate::codec::{CodecError, SequenceLabel};
use crate::data::Dataset;
use crate::netcore::NetError;
use std::io::{ErrorKind, Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RemoteError {
    #[error("proposer did not answer within {0:?}")]
    Timeout(Duration),
    #[error("cannot reach proposer at {endpoint}: {source}")]
    Connect { endpoint: String, source: std::io::Error },
    #[error("malformed response: {0}")]
    Malformed(ProtocolError),
    #[error("proposer returned error {code}: {message}")]
    Server { code: u16, message: String },
    #[error("sequence {index} is not a valid label: {source}")]
    Undecodable { index: usize, source: CodecError },
    #[error("subprocess failed: {0}")]
    Subprocess(String),
}

impl From<ProtocolError> for RemoteError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::Io(io) if matches!(io.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {
                RemoteError::Timeout(Duration::ZERO)
            }
            e => RemoteError::Malformed(e),
        }
    }
}

/// Where the neural proposer lives.
#[derive(Clone, Debug, PartialEq)]
pub enum Endpoint {
    /// `host:port` of a long-running service, one frame exchange per request.
    Tcp(String),
    /// A command that reads one request frame on stdin and writes one
    /// response frame on stdout.
    Subprocess(Vec<String>),
}

impl std::str::FromStr for Endpoint {
    type Err = String;

    /// `tcp://host:port`, `host:port` or `exec:program arg...`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(cmd) = s.strip_prefix("exec:") {
            let argv: Vec<String> = cmd.split_whitespace().map(String::from).collect();
            if argv.is_empty() {
                return Err("empty exec: command".into());
            }
            return Ok(Endpoint::Subprocess(argv));
        }
        let addr = s.strip_prefix("tcp://").unwrap_or(s);
        if !addr.contains(':') {
            return Err(format!("expected host:port, got `{s}`"));
        }
        Ok(Endpoint::Tcp(addr.to_string()))
    }
}

#[derive(Clone, Debug)]
pub struct RemoteProposer {
    pub endpoint: Endpoint,
    pub m: usize,
    pub timeout: Duration,
}

impl RemoteProposer {
    pub fn new(endpoint: Endpoint, m: usize) -> RemoteProposer {
        RemoteProposer { endpoint, m, timeout: Duration::from_secs(30) }
    }

    fn exchange(&self, body: &[u8]) -> Result<Vec<u8>, RemoteError> {
        match &self.endpoint {
            Endpoint::Tcp(addr) => {
                let connect_err = |source| RemoteError::Connect { endpoint: addr.clone(), source };
                let sock = addr
                    .to_socket_addrs()
                    .map_err(connect_err)?
                    .next()
                    .ok_or_else(|| connect_err(std::io::Error::new(ErrorKind::NotFound, "no address")))?;
                let mut stream = TcpStream::connect_timeout(&sock, self.timeout).map_err(|e| match e.kind() {
                    ErrorKind::TimedOut => RemoteError::Timeout(self.timeout),
                    _ => connect_err(e),
                })?;
                stream.set_read_timeout(Some(self.timeout)).map_err(connect_err)?;
                stream.set_write_timeout(Some(self.timeout)).map_err(connect_err)?;
                self.round_trip(&mut stream, body)
            }
            Endpoint::Subprocess(argv) => {
                let mut child = Command::new(&argv[0])
                    .args(&argv[1..])
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(|e| RemoteError::Subprocess(format!("spawn `{}`: {e}", argv[0])))?;
                let mut stdin = child.stdin.take().expect("piped stdin");
                write_frame(&mut stdin, body).map_err(RemoteError::Malformed)?;
                drop(stdin);
                let mut stdout = child.stdout.take().expect("piped stdout");
                let (tx, rx) = mpsc::channel();
                std::thread::spawn(move || {
                    let _ = tx.send(read_frame(&mut stdout));
                });
                let reply = rx.recv_timeout(self.timeout);
                if reply.is_err() {
                    let _ = child.kill();
                }
                let _ = child.wait();
                match reply {
                    Err(_) => Err(RemoteError::Timeout(self.timeout)),
                    Ok(r) => r?.ok_or_else(|| RemoteError::Subprocess("exited without a response frame".into())),
                }
            }
        }
    }

    fn round_trip(&self, s: &mut (impl Read + Write), body: &[u8]) -> Result<Vec<u8>, RemoteError> {
        let timeout = |e: RemoteError| match e {
            RemoteError::Timeout(_) => RemoteError::Timeout(self.timeout),
            e => e,
        };
        write_frame(s, body).map_err(|e| timeout(e.into()))?;
        read_frame(s)
            .map_err(|e| timeout(e.into()))?
            .ok_or(RemoteError::Malformed(ProtocolError::Truncated { need: 4, have: 0 }))
    }

    /// One request/response exchange: the multihot-encoded data block and
    /// `k` out, scored token sequences back. Returns the top `k` by score.
    pub fn remote_propose(&self, data: &Dataset, k: usize) -> Result<CandidateSet, RemoteError> {
        let reply = self.exchange(&Request::from_dataset(data, k).encode())?;
        let seqs = match Response::decode(&reply)? {
            Response::Error { code, message } => return Err(RemoteError::Server { code, message }),
            Response::Ok(seqs) => seqs,
        };
        let mut raw = Vec::with_capacity(seqs.len());
        for (index, s) in seqs.into_iter().enumerate() {
            let label = SequenceLabel { tokens: s.tokens.iter().map(|&t| t as i64).collect() };
            match usable(&label, self.m, data.dim()) {
                Ok(_) | Err(CodecError::Net(NetError::Degenerate)) => {}
                Err(source) => return Err(RemoteError::Undecodable { index, source }),
            }
            raw.push(Candidate { label, score: s.score, provenance: format!("remote:{index}") });
        }
        Ok(CandidateSet::build(raw, k, self.m, data.dim()))
    }
}

impl Proposer for RemoteProposer {
    fn name(&self) -> String {
        match &self.endpoint {
            Endpoint::Tcp(a) => format!("remote:{a}"),
            Endpoint::Subprocess(argv) => format!("remote:exec:{}", argv.join(" ")),
        }
    }

    fn replicas(&self) -> usize {
        self.m
    }

    fn propose(&self, data: &Dataset, k: usize) -> Result<CandidateSet, ProposeError> {
        if k == 0 {
            return Err(ProposeError::ZeroK);
        }
        let set = self.remote_propose(data, k)?;
        if set.is_empty() {
            return Err(ProposeError::Exhausted("remote proposer returned no usable sequence".into()));
        }
        Ok(set)
    }
}
