//! Framed byte protocol so prover and verifier can run as separate
//! processes over any reliable ordered stream.
//!
//! Frame layout: `version: u8 | msg_type: u8 | length: u32 LE | body`.
//! Message types are 0 commit, 1 challenge, 2 response, 3 verdict and
//! 4 session parameters.
//!
//! A session runs:
//!
//! 1. verifier → prover: session parameters; prover checks and echoes its own;
//! 2. per round: commit (P→V), challenge (V→P), response (P→V), verdict (V→P).
//!
//! The verifier stops after the first rejected round. A transcript is the
//! concatenation of every frame in the order it crossed the wire.

use std::io::{self, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::Arc;
use std::thread;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::problems::{SdInstance, Witness};
use crate::protocol::{
    prover_commit, split_rngs, verifier_challenge, verify_response_bytes, Challenge,
    CommitMessage, Verdict,
};

pub const PROTOCOL_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 6;
/// Default cap on a frame body.
pub const DEFAULT_MAX_FRAME: usize = 64 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MsgType {
    Commit = 0,
    Challenge = 1,
    Response = 2,
    Verdict = 3,
    SessionParams = 4,
}

impl MsgType {
    pub fn from_byte(b: u8) -> Result<MsgType> {
        Ok(match b {
            0 => MsgType::Commit,
            1 => MsgType::Challenge,
            2 => MsgType::Response,
            3 => MsgType::Verdict,
            4 => MsgType::SessionParams,
            other => return Err(Error::Protocol(format!("unknown message type {other}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub version: u8,
    pub msg_type: MsgType,
    pub body: Vec<u8>,
}

pub fn encode_frame(frame: &Frame) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + frame.body.len());
    out.push(frame.version);
    out.push(frame.msg_type as u8);
    out.extend_from_slice(&(frame.body.len() as u32).to_le_bytes());
    out.extend_from_slice(&frame.body);
    out
}

fn parse_header(h: &[u8; HEADER_LEN], cap: usize) -> Result<(MsgType, usize)> {
    if h[0] != PROTOCOL_VERSION {
        return Err(Error::Protocol(format!(
            "version mismatch: peer speaks {}, we speak {PROTOCOL_VERSION}",
            h[0]
        )));
    }
    let msg_type = MsgType::from_byte(h[1])?;
    let len = u32::from_le_bytes([h[2], h[3], h[4], h[5]]) as usize;
    if len > cap {
        return Err(Error::Protocol(format!("frame length {len} exceeds cap {cap}")));
    }
    Ok((msg_type, len))
}

/// Decodes the first frame of `bytes`, returning it and the bytes consumed.
pub fn decode_frame(bytes: &[u8], cap: usize) -> Result<(Frame, usize)> {
    let header: &[u8; HEADER_LEN] = bytes
        .get(..HEADER_LEN)
        .and_then(|h| h.try_into().ok())
        .ok_or_else(|| Error::Protocol("truncated frame header".into()))?;
    let (msg_type, len) = parse_header(header, cap)?;
    let body = bytes
        .get(HEADER_LEN..HEADER_LEN + len)
        .ok_or_else(|| Error::Protocol("truncated frame body".into()))?;
    Ok((
        Frame {
            version: PROTOCOL_VERSION,
            msg_type,
            body: body.to_vec(),
        },
        HEADER_LEN + len,
    ))
}

/// Reads one frame. The body buffer grows with the data actually received,
/// so a large claimed length costs nothing until the bytes arrive.
pub fn read_frame<R: Read + ?Sized>(r: &mut R, cap: usize) -> Result<Frame> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => Error::Protocol("connection closed".into()),
        _ => Error::Io(e),
    })?;
    let (msg_type, len) = parse_header(&header, cap)?;
    let mut body = Vec::new();
    r.take(len as u64).read_to_end(&mut body)?;
    if body.len() != len {
        return Err(Error::Protocol(format!(
            "truncated frame body: {} of {len} bytes",
            body.len()
        )));
    }
    Ok(Frame {
        version: PROTOCOL_VERSION,
        msg_type,
        body,
    })
}

/// Parameters both parties must agree on before round 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SessionParams {
    pub version: u8,
    pub instance_hash: [u8; 32],
    pub rounds: u32,
}

impl SessionParams {
    pub const ENCODED_LEN: usize = 37;

    pub fn new(inst: &SdInstance, rounds: u32) -> Self {
        SessionParams {
            version: PROTOCOL_VERSION,
            instance_hash: instance_hash(inst),
            rounds,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = vec![self.version];
        out.extend_from_slice(&self.instance_hash);
        out.extend_from_slice(&self.rounds.to_le_bytes());
        out
    }

    pub fn decode(body: &[u8]) -> Result<Self> {
        if body.len() != Self::ENCODED_LEN {
            return Err(Error::Protocol(format!(
                "session parameters must be {} bytes, got {}",
                Self::ENCODED_LEN,
                body.len()
            )));
        }
        let mut instance_hash = [0u8; 32];
        instance_hash.copy_from_slice(&body[1..33]);
        Ok(SessionParams {
            version: body[0],
            instance_hash,
            rounds: u32::from_le_bytes([body[33], body[34], body[35], body[36]]),
        })
    }

    fn mismatch(&self, ours: &SessionParams) -> Option<String> {
        if self.version != ours.version {
            Some(format!("protocol version {} != {}", self.version, ours.version))
        } else if self.instance_hash != ours.instance_hash {
            Some("instance hash differs".into())
        } else if self.rounds != ours.rounds {
            Some(format!("rounds {} != {}", self.rounds, ours.rounds))
        } else if self.rounds == 0 {
            Some("zero rounds".into())
        } else {
            None
        }
    }
}

/// SHA-256 of the instance's canonical encoding.
pub fn instance_hash(inst: &SdInstance) -> [u8; 32] {
    Sha256::digest(inst.encode()).into()
}

/// Application-level messages carried by frames. Response bodies stay raw
/// because decoding them needs the instance modulus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message {
    Commit(CommitMessage),
    Challenge(Challenge),
    Response(Vec<u8>),
    Verdict { accept: bool, reason: String },
    SessionParams(SessionParams),
}

impl Message {
    pub fn to_frame(&self) -> Frame {
        let (msg_type, body) = match self {
            Message::Commit(cm) => (MsgType::Commit, cm.encode()),
            Message::Challenge(ch) => (MsgType::Challenge, vec![ch.to_byte()]),
            Message::Response(body) => (MsgType::Response, body.clone()),
            Message::Verdict { accept, reason } => {
                let mut b = vec![u8::from(!accept)];
                b.extend_from_slice(reason.as_bytes());
                (MsgType::Verdict, b)
            }
            Message::SessionParams(p) => (MsgType::SessionParams, p.encode()),
        };
        Frame {
            version: PROTOCOL_VERSION,
            msg_type,
            body,
        }
    }

    pub fn from_frame(frame: &Frame) -> Result<Message> {
        let body = &frame.body;
        Ok(match frame.msg_type {
            MsgType::Commit => Message::Commit(
                CommitMessage::decode(body).map_err(|e| Error::Protocol(e.to_string()))?,
            ),
            MsgType::Challenge => match body.as_slice() {
                [b] => Message::Challenge(
                    Challenge::from_byte(*b).map_err(|e| Error::Protocol(e.to_string()))?,
                ),
                _ => return Err(Error::Protocol("challenge body must be one byte".into())),
            },
            MsgType::Response => Message::Response(body.clone()),
            MsgType::Verdict => {
                let (&flag, reason) = body
                    .split_first()
                    .ok_or_else(|| Error::Protocol("empty verdict".into()))?;
                if flag > 1 {
                    return Err(Error::Protocol(format!("invalid verdict flag {flag}")));
                }
                Message::Verdict {
                    accept: flag == 0,
                    reason: String::from_utf8_lossy(reason).into_owned(),
                }
            }
            MsgType::SessionParams => Message::SessionParams(SessionParams::decode(body)?),
        })
    }
}

/// A stream plus an optional transcript of every frame sent or received.
pub struct Channel<S> {
    stream: S,
    cap: usize,
    transcript: Option<Vec<u8>>,
    bytes_sent: usize,
    bytes_received: usize,
}

impl<S: Read + Write> Channel<S> {
    pub fn new(stream: S) -> Self {
        Channel {
            stream,
            cap: DEFAULT_MAX_FRAME,
            transcript: None,
            bytes_sent: 0,
            bytes_received: 0,
        }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn recording(mut self) -> Self {
        self.transcript = Some(Vec::new());
        self
    }

    pub fn send(&mut self, msg: &Message) -> Result<()> {
        let bytes = encode_frame(&msg.to_frame());
        self.stream.write_all(&bytes)?;
        self.stream.flush()?;
        self.bytes_sent += bytes.len();
        if let Some(t) = &mut self.transcript {
            t.extend_from_slice(&bytes);
        }
        Ok(())
    }

    pub fn recv(&mut self) -> Result<Message> {
        let frame = read_frame(&mut self.stream, self.cap)?;
        let bytes = encode_frame(&frame);
        self.bytes_received += bytes.len();
        if let Some(t) = &mut self.transcript {
            t.extend_from_slice(&bytes);
        }
        Message::from_frame(&frame)
    }

    pub fn take_transcript(&mut self) -> Option<Vec<u8>> {
        self.transcript.take()
    }

    pub fn bytes_sent(&self) -> usize {
        self.bytes_sent
    }

    pub fn bytes_received(&self) -> usize {
        self.bytes_received
    }

    pub fn into_inner(self) -> S {
        self.stream
    }
}

fn unexpected(what: &str, got: &Message) -> Error {
    let kind = match got {
        Message::Commit(_) => "commit",
        Message::Challenge(_) => "challenge",
        Message::Response(_) => "response",
        Message::Verdict { .. } => "verdict",
        Message::SessionParams(_) => "session parameters",
    };
    Error::Protocol(format!("expected {what}, got {kind}"))
}

/// Per-round record kept by either party.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundRecord {
    pub challenge: Challenge,
    pub verdict: Verdict,
    pub commit_bytes: usize,
    pub response_bytes: usize,
}

#[derive(Clone, Debug)]
pub struct SessionOutcome {
    pub accepted: bool,
    pub rounds_requested: u32,
    pub rounds: Vec<RoundRecord>,
    /// Reason sent by the verifier on rejection.
    pub reason: Option<String>,
}

impl SessionOutcome {
    /// First failing round's verdict, or accept.
    pub fn verdict(&self) -> Verdict {
        self.rounds
            .iter()
            .map(|r| r.verdict.clone())
            .find(|v| !v.is_accept())
            .unwrap_or(Verdict::Accept)
    }
}

/// Generators for a session seeded with `seed`: the same split that
/// [`crate::protocol::run_session`] applies to `ChaCha20Rng::seed_from_u64(seed)`.
pub fn session_rngs(seed: u64) -> (ChaCha20Rng, ChaCha20Rng) {
    split_rngs(&mut ChaCha20Rng::seed_from_u64(seed))
}

/// Prover side of a session. Returns when the verifier ends it.
pub fn prover_session<S: Read + Write>(
    ch: &mut Channel<S>,
    inst: &SdInstance,
    witness: &Witness,
    rounds: u32,
    rng: &mut ChaCha20Rng,
) -> Result<SessionOutcome> {
    let ours = SessionParams::new(inst, rounds);
    let theirs = match ch.recv()? {
        Message::SessionParams(p) => p,
        other => return Err(unexpected("session parameters", &other)),
    };
    if let Some(why) = theirs.mismatch(&ours) {
        ch.send(&Message::Verdict {
            accept: false,
            reason: format!("session parameters rejected: {why}"),
        })?;
        return Err(Error::Protocol(format!("session parameters rejected: {why}")));
    }
    ch.send(&Message::SessionParams(ours))?;

    let mut records = Vec::new();
    for _ in 0..rounds {
        let (mut state, cm) = prover_commit(inst, witness, rng)?;
        ch.send(&Message::Commit(cm))?;
        let challenge = match ch.recv()? {
            Message::Challenge(c) => c,
            Message::Verdict { reason, .. } => {
                return Err(Error::Protocol(format!("verifier aborted: {reason}")))
            }
            other => return Err(unexpected("challenge", &other)),
        };
        let body = state.respond(challenge)?.encode();
        let response_bytes = body.len();
        ch.send(&Message::Response(body))?;
        let (accept, reason) = match ch.recv()? {
            Message::Verdict { accept, reason } => (accept, reason),
            other => return Err(unexpected("verdict", &other)),
        };
        records.push(RoundRecord {
            challenge,
            verdict: if accept {
                Verdict::Accept
            } else {
                Verdict::Reject(Vec::new())
            },
            commit_bytes: CommitMessage::ENCODED_LEN,
            response_bytes,
        });
        if !accept {
            return Ok(SessionOutcome {
                accepted: false,
                rounds_requested: rounds,
                rounds: records,
                reason: Some(reason),
            });
        }
    }
    Ok(SessionOutcome {
        accepted: true,
        rounds_requested: rounds,
        rounds: records,
        reason: None,
    })
}

/// Verifier side of a session.
///
/// Any byte sequence from the peer ends in either a structured verdict or
/// an [`Error::Protocol`]; malformed responses are rejections, not errors.
pub fn verifier_session<S: Read + Write>(
    ch: &mut Channel<S>,
    inst: &SdInstance,
    rounds: u32,
    rng: &mut ChaCha20Rng,
) -> Result<SessionOutcome> {
    let ours = SessionParams::new(inst, rounds);
    ch.send(&Message::SessionParams(ours))?;
    match ch.recv()? {
        Message::SessionParams(p) => {
            if let Some(why) = p.mismatch(&ours) {
                ch.send(&Message::Verdict {
                    accept: false,
                    reason: format!("session parameters rejected: {why}"),
                })?;
                return Err(Error::Protocol(format!("session parameters rejected: {why}")));
            }
        }
        Message::Verdict { reason, .. } => {
            return Err(Error::Protocol(format!("prover refused session: {reason}")))
        }
        other => return Err(unexpected("session parameters", &other)),
    }

    let mut records = Vec::new();
    for _ in 0..rounds {
        let cm = match ch.recv()? {
            Message::Commit(cm) => cm,
            other => return Err(unexpected("commit", &other)),
        };
        let challenge = verifier_challenge(rng);
        ch.send(&Message::Challenge(challenge))?;
        let body = match ch.recv()? {
            Message::Response(b) => b,
            other => return Err(unexpected("response", &other)),
        };
        let (verdict, _) = verify_response_bytes(inst, &cm, challenge, &body);
        let accept = verdict.is_accept();
        let reason = verdict.to_string();
        ch.send(&Message::Verdict {
            accept,
            reason: reason.clone(),
        })?;
        records.push(RoundRecord {
            challenge,
            verdict,
            commit_bytes: CommitMessage::ENCODED_LEN,
            response_bytes: body.len(),
        });
        if !accept {
            return Ok(SessionOutcome {
                accepted: false,
                rounds_requested: rounds,
                rounds: records,
                reason: Some(reason),
            });
        }
    }
    Ok(SessionOutcome {
        accepted: true,
        rounds_requested: rounds,
        rounds: records,
        reason: None,
    })
}

/// Re-verifies a recorded transcript from scratch.
///
/// Recorded verdict frames are parsed but not trusted: every round is
/// checked again against `inst`. Challenges are taken from the transcript,
/// so a replay shows the responses are consistent, not that the
/// challenges were unpredictable.
pub fn replay_transcript(inst: &SdInstance, bytes: &[u8], cap: usize) -> Result<SessionOutcome> {
    let mut pos = 0;
    let mut next = || -> Result<Message> {
        let (frame, used) = decode_frame(&bytes[pos..], cap)?;
        pos += used;
        Message::from_frame(&frame)
    };
    let params = match next()? {
        Message::SessionParams(p) => p,
        other => return Err(unexpected("session parameters", &other)),
    };
    let ours = SessionParams::new(inst, params.rounds);
    if let Some(why) = params.mismatch(&ours) {
        return Err(Error::Protocol(format!("transcript parameters: {why}")));
    }
    match next()? {
        Message::SessionParams(p) if p == params => {}
        Message::SessionParams(_) => {
            return Err(Error::Protocol("parties disagree on session parameters".into()))
        }
        other => return Err(unexpected("session parameters", &other)),
    }
    let mut records = Vec::new();
    for _ in 0..params.rounds {
        let cm = match next()? {
            Message::Commit(cm) => cm,
            other => return Err(unexpected("commit", &other)),
        };
        let challenge = match next()? {
            Message::Challenge(c) => c,
            other => return Err(unexpected("challenge", &other)),
        };
        let body = match next()? {
            Message::Response(b) => b,
            other => return Err(unexpected("response", &other)),
        };
        match next()? {
            Message::Verdict { .. } => {}
            other => return Err(unexpected("verdict", &other)),
        }
        let (verdict, _) = verify_response_bytes(inst, &cm, challenge, &body);
        let accept = verdict.is_accept();
        let reason = verdict.to_string();
        records.push(RoundRecord {
            challenge,
            verdict,
            commit_bytes: CommitMessage::ENCODED_LEN,
            response_bytes: body.len(),
        });
        if !accept {
            return Ok(SessionOutcome {
                accepted: false,
                rounds_requested: params.rounds,
                rounds: records,
                reason: Some(reason),
            });
        }
    }
    drop(next);
    if pos != bytes.len() {
        return Err(Error::Protocol("trailing data after the last round".into()));
    }
    Ok(SessionOutcome {
        accepted: true,
        rounds_requested: params.rounds,
        rounds: records,
        reason: None,
    })
}

/// JSON sidecar written next to a binary transcript.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TranscriptSummary {
    pub version: u8,
    pub instance_hash: String,
    pub rounds_requested: u32,
    pub rounds_run: usize,
    pub accepted: bool,
    pub challenges: String,
    pub response_bytes: Vec<usize>,
    pub transcript_bytes: usize,
    pub reason: Option<String>,
}

impl TranscriptSummary {
    pub fn new(inst: &SdInstance, outcome: &SessionOutcome, transcript_bytes: usize) -> Self {
        TranscriptSummary {
            version: PROTOCOL_VERSION,
            instance_hash: instance_hash(inst).iter().map(|b| format!("{b:02x}")).collect(),
            rounds_requested: outcome.rounds_requested,
            rounds_run: outcome.rounds.len(),
            accepted: outcome.accepted,
            challenges: outcome.rounds.iter().map(|r| r.challenge.to_string()).collect(),
            response_bytes: outcome.rounds.iter().map(|r| r.response_bytes).collect(),
            transcript_bytes,
            reason: outcome.reason.clone(),
        }
    }
}

/// One end of an in-memory byte pipe.
pub struct PipeEnd {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
    buf: Vec<u8>,
    pos: usize,
}

/// Two connected in-memory stream ends.
pub fn duplex() -> (PipeEnd, PipeEnd) {
    let (tx_a, rx_b) = channel();
    let (tx_b, rx_a) = channel();
    let end = |tx, rx| PipeEnd {
        tx,
        rx,
        buf: Vec::new(),
        pos: 0,
    };
    (end(tx_a, rx_a), end(tx_b, rx_b))
}

impl Read for PipeEnd {
    fn read(&mut self, out: &mut [u8]) -> io::Result<usize> {
        while self.pos == self.buf.len() {
            match self.rx.recv() {
                Ok(chunk) => {
                    self.buf = chunk;
                    self.pos = 0;
                }
                Err(_) => return Ok(0),
            }
        }
        let n = out.len().min(self.buf.len() - self.pos);
        out[..n].copy_from_slice(&self.buf[self.pos..self.pos + n]);
        self.pos += n;
        Ok(n)
    }
}

impl Write for PipeEnd {
    fn write(&mut self, data: &[u8]) -> io::Result<usize> {
        self.tx
            .send(data.to_vec())
            .map_err(|_| io::Error::new(io::ErrorKind::BrokenPipe, "peer closed"))?;
        Ok(data.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

/// Runs both parties in this process over an in-memory pipe, seeded as
/// [`session_rngs`]`(seed)`, and returns the verifier's outcome together
/// with the recorded transcript.
pub fn local_session(
    inst: &SdInstance,
    witness: &Witness,
    rounds: u32,
    seed: u64,
) -> Result<(SessionOutcome, Vec<u8>)> {
    let (mut prng, mut vrng) = session_rngs(seed);
    let (p_end, v_end) = duplex();
    thread::scope(|scope| {
        let prover = scope.spawn(move || {
            let mut ch = Channel::new(p_end);
            prover_session(&mut ch, inst, witness, rounds, &mut prng)
        });
        let mut ch = Channel::new(v_end).recording();
        let outcome = verifier_session(&mut ch, inst, rounds, &mut vrng);
        let transcript = ch.take_transcript().unwrap_or_default();
        drop(ch);
        let prover_result = prover.join().map_err(|_| Error::Protocol("prover thread panicked".into()))?;
        let outcome = outcome?;
        prover_result?;
        Ok((outcome, transcript))
    })
}

/// Accepts connections and runs a prover session on each, one thread per
/// connection. Connection `i` (from 0) is seeded with `seed + i`, so the
/// first matches an in-process run with `seed`. Stops after
/// `max_sessions` connections if given.
pub fn serve(
    listener: TcpListener,
    inst: Arc<SdInstance>,
    witness: Arc<Witness>,
    rounds: u32,
    seed: u64,
    max_sessions: Option<usize>,
) -> Result<Vec<Result<SessionOutcome>>> {
    let mut handles = Vec::new();
    for (i, conn) in listener.incoming().enumerate() {
        let stream: TcpStream = conn?;
        let (inst, witness) = (Arc::clone(&inst), Arc::clone(&witness));
        handles.push(thread::spawn(move || {
            let (mut rng, _) = session_rngs(seed.wrapping_add(i as u64));
            let mut ch = Channel::new(stream);
            prover_session(&mut ch, &inst, &witness, rounds, &mut rng)
        }));
        if max_sessions.is_some_and(|m| i + 1 >= m) {
            break;
        }
    }
    Ok(handles
        .into_iter()
        .map(|h| h.join().unwrap_or_else(|_| Err(Error::Protocol("session thread panicked".into()))))
        .collect())
}
