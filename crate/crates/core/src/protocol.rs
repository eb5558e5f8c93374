//! The three-challenge commit/challenge/response identification protocol
//! for balanced Lee syndrome decoding.
//!
//! One round:
//!
//! 1. The prover expands its witness `e` to the ternary vector `f = e″`,
//!    picks a uniform mask `R`, sets `T = H - R`, expands both row-wise to
//!    `R̃, T̃`, computes `a = e·R` and `b = e·T`, picks a uniform permutation
//!    `π` of `{1, ..., nℓ}` and commits to `R, T, a, b, π, R̃π, T̃π, f_π`.
//! 2. The verifier picks a challenge `A`, `B` or `C` uniformly.
//! 3. The prover opens the slot set for that challenge and the verifier runs
//!    the checks `a1-a2`, `b1-b4` or `c1-c4` plus range checks.
//!
//! The eight commitments are always sent in the order of [`Slot::ALL`].

use std::fmt;

use rand::{CryptoRng, Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::bits::{packed_len, BitReader, BitWriter};
use crate::commitments::{
    commit, random_salt, verify_opening, Commitment, CommittedObject, Opening, Permutation, Salt,
    Slot, DIGEST_LEN, SALT_LEN,
};
use crate::error::{Error, Result};
use crate::problems::{check_witness, SdInstance, TernaryVector, Variant, Witness};
use crate::reductions::{expand_matrix, ternary_witness};
use crate::ring::{bits_for, ByteReader, Modulus, ZmMatrix, ZmVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Challenge {
    A,
    B,
    C,
}

impl Challenge {
    pub const ALL: [Challenge; 3] = [Challenge::A, Challenge::B, Challenge::C];

    /// Wire byte: 0, 1, 2 for A, B, C.
    pub fn to_byte(self) -> u8 {
        self as u8
    }

    pub fn from_byte(b: u8) -> Result<Challenge> {
        match b {
            0 => Ok(Challenge::A),
            1 => Ok(Challenge::B),
            2 => Ok(Challenge::C),
            other => Err(Error::Decode(format!("invalid challenge byte {other}"))),
        }
    }

    /// Slots opened in reply to this challenge.
    pub fn opened_slots(self) -> &'static [Slot] {
        match self {
            Challenge::A => &[Slot::R, Slot::T, Slot::Pi, Slot::RPi, Slot::TPi],
            Challenge::B => &[Slot::A, Slot::B, Slot::RPi, Slot::FPi],
            Challenge::C => &[Slot::A, Slot::B, Slot::TPi, Slot::FPi],
        }
    }
}

impl fmt::Display for Challenge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Challenge::A => "A",
            Challenge::B => "B",
            Challenge::C => "C",
        })
    }
}

/// Uniform challenge from the verifier's generator.
pub fn verifier_challenge<R: Rng + ?Sized>(rng: &mut R) -> Challenge {
    Challenge::ALL[rng.random_range(0..3)]
}

/// The eight commitments of a round, in [`Slot::ALL`] order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommitMessage {
    pub digests: [Commitment; 8],
}

impl CommitMessage {
    pub const ENCODED_LEN: usize = 8 * DIGEST_LEN;

    pub fn get(&self, slot: Slot) -> &Commitment {
        &self.digests[slot.index()]
    }

    pub fn encode(&self) -> Vec<u8> {
        self.digests.iter().flat_map(|d| d.0).collect()
    }

    pub fn decode(bytes: &[u8]) -> Result<CommitMessage> {
        if bytes.len() != Self::ENCODED_LEN {
            return Err(Error::Decode(format!(
                "commit message must be {} bytes, got {}",
                Self::ENCODED_LEN,
                bytes.len()
            )));
        }
        let mut digests = [Commitment([0; DIGEST_LEN]); 8];
        for (d, chunk) in digests.iter_mut().zip(bytes.chunks_exact(DIGEST_LEN)) {
            d.0.copy_from_slice(chunk);
        }
        Ok(CommitMessage { digests })
    }
}

/// A committed value together with its salt.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Opened<T> {
    pub salt: Salt,
    pub value: T,
}

/// The prover's answer to one challenge.
///
/// Under challenge `A` the verifier rebuilds `R̃π` and `T̃π` from `R`, `T`
/// and `π`, so only their salts travel; the rebuilt payloads must then open
/// the two commitments (check `a2`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Response {
    A {
        r: Opened<ZmMatrix>,
        t: Opened<ZmMatrix>,
        pi: Opened<Permutation>,
        r_pi_salt: Salt,
        t_pi_salt: Salt,
    },
    B {
        a: Opened<ZmVector>,
        b: Opened<ZmVector>,
        r_pi: Opened<ZmMatrix>,
        f_pi: Opened<TernaryVector>,
    },
    C {
        a: Opened<ZmVector>,
        b: Opened<ZmVector>,
        t_pi: Opened<ZmMatrix>,
        f_pi: Opened<TernaryVector>,
    },
}

impl Response {
    pub fn challenge(&self) -> Challenge {
        match self {
            Response::A { .. } => Challenge::A,
            Response::B { .. } => Challenge::B,
            Response::C { .. } => Challenge::C,
        }
    }

    pub fn opened_slots(&self) -> &'static [Slot] {
        self.challenge().opened_slots()
    }

    /// Revealed `f_π`, for challenges `B` and `C`.
    pub fn f_pi(&self) -> Option<&TernaryVector> {
        match self {
            Response::A { .. } => None,
            Response::B { f_pi, .. } | Response::C { f_pi, .. } => Some(&f_pi.value),
        }
    }

    /// Compact wire encoding.
    ///
    /// Body: challenge byte, then for each opened slot in `opened_slots()`
    /// order its 32-byte salt followed (except for `R̃π`/`T̃π` under `A`)
    /// by the packed object. Packed objects carry their dimensions as 4-byte
    /// LE integers (rows and cols for matrices, length otherwise) and then a
    /// zero-padded LSB-first bit stream: ring elements as residues in
    /// `[0, m)` using `⌈log2 m⌉` bits, permutation images `π(i) - 1` using
    /// `⌈log2 N⌉` bits, ternary entries as 2-bit codes `0, 1, 2` for
    /// `0, +1, -1`.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = vec![self.challenge().to_byte()];
        match self {
            Response::A {
                r,
                t,
                pi,
                r_pi_salt,
                t_pi_salt,
            } => {
                put_matrix(&mut out, r);
                put_matrix(&mut out, t);
                out.extend_from_slice(&pi.salt);
                pack_permutation(&mut out, &pi.value);
                out.extend_from_slice(r_pi_salt);
                out.extend_from_slice(t_pi_salt);
            }
            Response::B { a, b, r_pi, f_pi } => {
                put_vector(&mut out, a);
                put_vector(&mut out, b);
                put_matrix(&mut out, r_pi);
                out.extend_from_slice(&f_pi.salt);
                pack_ternary(&mut out, &f_pi.value);
            }
            Response::C { a, b, t_pi, f_pi } => {
                put_vector(&mut out, a);
                put_vector(&mut out, b);
                put_matrix(&mut out, t_pi);
                out.extend_from_slice(&f_pi.salt);
                pack_ternary(&mut out, &f_pi.value);
            }
        }
        out
    }

    /// Decodes a compact response. Out-of-range values are reported as
    /// [`DecodeFailure::Range`], structural problems as
    /// [`DecodeFailure::Malformed`].
    pub fn decode(bytes: &[u8], modulus: Modulus) -> std::result::Result<Response, DecodeFailure> {
        let mut rd = ByteReader::new(bytes);
        let ch = Challenge::from_byte(rd.u8().map_err(DecodeFailure::malformed)?)
            .map_err(DecodeFailure::malformed)?;
        let salt = |rd: &mut ByteReader<'_>| rd.array32().map_err(DecodeFailure::malformed);
        let resp = match ch {
            Challenge::A => {
                let r = get_matrix(&mut rd, modulus)?;
                let t = get_matrix(&mut rd, modulus)?;
                let pi = Opened {
                    salt: salt(&mut rd)?,
                    value: unpack_permutation(&mut rd)?,
                };
                Response::A {
                    r,
                    t,
                    pi,
                    r_pi_salt: salt(&mut rd)?,
                    t_pi_salt: salt(&mut rd)?,
                }
            }
            Challenge::B | Challenge::C => {
                let a = get_vector(&mut rd, modulus)?;
                let b = get_vector(&mut rd, modulus)?;
                let mat = get_matrix(&mut rd, modulus)?;
                let f_pi = Opened {
                    salt: salt(&mut rd)?,
                    value: unpack_ternary(&mut rd)?,
                };
                if ch == Challenge::B {
                    Response::B {
                        a,
                        b,
                        r_pi: mat,
                        f_pi,
                    }
                } else {
                    Response::C {
                        a,
                        b,
                        t_pi: mat,
                        f_pi,
                    }
                }
            }
        };
        rd.finish().map_err(DecodeFailure::malformed)?;
        Ok(resp)
    }
}

/// Why a response body could not be decoded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecodeFailure {
    /// A value outside its admissible set (ring range, ternary, bijection).
    Range(String),
    /// Truncation, trailing data, bad tags or padding.
    Malformed(String),
}

impl DecodeFailure {
    fn malformed(e: Error) -> Self {
        DecodeFailure::Malformed(e.to_string())
    }
}

impl fmt::Display for DecodeFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecodeFailure::Range(s) => write!(f, "range: {s}"),
            DecodeFailure::Malformed(s) => write!(f, "malformed: {s}"),
        }
    }
}

fn put_matrix(out: &mut Vec<u8>, m: &Opened<ZmMatrix>) {
    out.extend_from_slice(&m.salt);
    pack_matrix(out, &m.value);
}

fn put_vector(out: &mut Vec<u8>, v: &Opened<ZmVector>) {
    out.extend_from_slice(&v.salt);
    pack_elements(out, v.value.modulus(), v.value.entries());
}

fn pack_matrix(out: &mut Vec<u8>, m: &ZmMatrix) {
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    pack_elements_raw(out, m.modulus(), m.cols(), m.entries());
}

fn pack_elements(out: &mut Vec<u8>, modulus: Modulus, entries: &[i16]) {
    out.extend_from_slice(&(entries.len() as u32).to_le_bytes());
    pack_bits(out, modulus, entries);
}

fn pack_elements_raw(out: &mut Vec<u8>, modulus: Modulus, cols: usize, entries: &[i16]) {
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    pack_bits(out, modulus, entries);
}

fn pack_bits(out: &mut Vec<u8>, modulus: Modulus, entries: &[i16]) {
    let bits = modulus.element_bits();
    let m = modulus.m();
    let mut w = BitWriter::new();
    for &x in entries {
        w.write((x as i64).rem_euclid(m) as u64, bits);
    }
    out.extend_from_slice(&w.finish());
}

fn pack_permutation(out: &mut Vec<u8>, p: &Permutation) {
    out.extend_from_slice(&(p.len() as u32).to_le_bytes());
    let bits = bits_for(p.len() as u64);
    let mut w = BitWriter::new();
    for &x in p.images() {
        w.write((x - 1) as u64, bits);
    }
    out.extend_from_slice(&w.finish());
}

fn pack_ternary(out: &mut Vec<u8>, f: &TernaryVector) {
    out.extend_from_slice(&(f.len() as u32).to_le_bytes());
    let mut w = BitWriter::new();
    for &x in f.entries() {
        w.write(
            match x {
                0 => 0,
                1 => 1,
                _ => 2,
            },
            2,
        );
    }
    out.extend_from_slice(&w.finish());
}

fn take_bits<'a>(
    rd: &mut ByteReader<'a>,
    count: usize,
    bits: u32,
) -> std::result::Result<BitReader<'a>, DecodeFailure> {
    let len = packed_len(count, bits)
        .ok_or_else(|| DecodeFailure::Malformed("packed length overflows".into()))?;
    // checked against the remaining input before anything is allocated
    Ok(BitReader::new(rd.take(len).map_err(DecodeFailure::malformed)?))
}

fn unpack_elements(
    rd: &mut ByteReader<'_>,
    modulus: Modulus,
    count: usize,
) -> std::result::Result<Vec<i64>, DecodeFailure> {
    let bits = modulus.element_bits();
    let mut br = take_bits(rd, count, bits)?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let r = br.read(bits).map_err(DecodeFailure::malformed)? as i64;
        if r >= modulus.m() {
            return Err(DecodeFailure::Range(format!(
                "residue {r} out of range for modulus {modulus}"
            )));
        }
        out.push(modulus.reduce(r) as i64);
    }
    br.finish().map_err(DecodeFailure::malformed)?;
    Ok(out)
}

fn get_matrix(
    rd: &mut ByteReader<'_>,
    modulus: Modulus,
) -> std::result::Result<Opened<ZmMatrix>, DecodeFailure> {
    let salt = rd.array32().map_err(DecodeFailure::malformed)?;
    let rows = rd.u32().map_err(DecodeFailure::malformed)? as usize;
    let cols = rd.u32().map_err(DecodeFailure::malformed)? as usize;
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| DecodeFailure::Malformed("matrix size overflows".into()))?;
    let entries = unpack_elements(rd, modulus, count)?;
    let value = ZmMatrix::new(modulus, rows, cols, entries)
        .map_err(|e| DecodeFailure::Range(e.to_string()))?;
    Ok(Opened { salt, value })
}

fn get_vector(
    rd: &mut ByteReader<'_>,
    modulus: Modulus,
) -> std::result::Result<Opened<ZmVector>, DecodeFailure> {
    let salt = rd.array32().map_err(DecodeFailure::malformed)?;
    let len = rd.u32().map_err(DecodeFailure::malformed)? as usize;
    let entries = unpack_elements(rd, modulus, len)?;
    let value = ZmVector::new(modulus, entries).map_err(|e| DecodeFailure::Range(e.to_string()))?;
    Ok(Opened { salt, value })
}

fn unpack_permutation(rd: &mut ByteReader<'_>) -> std::result::Result<Permutation, DecodeFailure> {
    let len = rd.u32().map_err(DecodeFailure::malformed)? as usize;
    let bits = bits_for(len as u64);
    let mut br = take_bits(rd, len, bits)?;
    let mut images = Vec::with_capacity(len);
    for _ in 0..len {
        let x = br.read(bits).map_err(DecodeFailure::malformed)?;
        images.push((x + 1).min(u32::MAX as u64) as u32);
    }
    br.finish().map_err(DecodeFailure::malformed)?;
    Permutation::new(images).map_err(|e| DecodeFailure::Range(e.to_string()))
}

fn unpack_ternary(rd: &mut ByteReader<'_>) -> std::result::Result<TernaryVector, DecodeFailure> {
    let len = rd.u32().map_err(DecodeFailure::malformed)? as usize;
    let mut br = take_bits(rd, len, 2)?;
    let mut entries = Vec::with_capacity(len);
    for _ in 0..len {
        entries.push(match br.read(2).map_err(DecodeFailure::malformed)? {
            0 => 0,
            1 => 1,
            2 => -1,
            _ => return Err(DecodeFailure::Range("ternary code 3".into())),
        });
    }
    br.finish().map_err(DecodeFailure::malformed)?;
    TernaryVector::new(entries).map_err(|e| DecodeFailure::Range(e.to_string()))
}

/// Every value a prover commits to in one round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundObjects {
    pub r: ZmMatrix,
    pub t: ZmMatrix,
    pub a: ZmVector,
    pub b: ZmVector,
    pub pi: Permutation,
    pub r_pi: ZmMatrix,
    pub t_pi: ZmMatrix,
    pub f_pi: TernaryVector,
}

impl RoundObjects {
    pub fn object(&self, slot: Slot) -> CommittedObject {
        match slot {
            Slot::R => CommittedObject::Matrix(self.r.clone()),
            Slot::T => CommittedObject::Matrix(self.t.clone()),
            Slot::A => CommittedObject::Vector(self.a.clone()),
            Slot::B => CommittedObject::Vector(self.b.clone()),
            Slot::Pi => CommittedObject::Permutation(self.pi.clone()),
            Slot::RPi => CommittedObject::Matrix(self.r_pi.clone()),
            Slot::TPi => CommittedObject::Matrix(self.t_pi.clone()),
            Slot::FPi => CommittedObject::Ternary(self.f_pi.clone()),
        }
    }

    /// Honest objects for a given mask, permutation and ternary witness.
    pub fn honest(
        inst: &SdInstance,
        f: &TernaryVector,
        r: ZmMatrix,
        pi: Permutation,
    ) -> Result<RoundObjects> {
        let t = inst.h().sub(&r)?;
        let ell = inst.ell();
        let r_tilde = expand_matrix(&r, ell);
        let t_tilde = expand_matrix(&t, ell);
        let a = f.mul_matrix(&r_tilde)?;
        let b = f.mul_matrix(&t_tilde)?;
        Ok(RoundObjects {
            r_pi: pi.permute_rows(&r_tilde)?,
            t_pi: pi.permute_rows(&t_tilde)?,
            f_pi: pi.permute_ternary(f)?,
            r,
            t,
            a,
            b,
            pi,
        })
    }
}

/// Prover state between its commitment and its response.
///
/// A state answers exactly one challenge; [`ProverRoundState::respond`]
/// fails on any later call.
#[derive(Clone, Debug)]
pub struct ProverRoundState {
    objects: RoundObjects,
    salts: [Salt; 8],
    /// Unpermuted ternary witness, present for honest provers.
    f: Option<TernaryVector>,
    commit_message: CommitMessage,
    consumed: bool,
}

impl ProverRoundState {
    /// Salts every slot (in [`Slot::ALL`] order) and commits to `objects`.
    pub fn from_objects<R: Rng + CryptoRng + ?Sized>(
        objects: RoundObjects,
        rng: &mut R,
    ) -> ProverRoundState {
        let salts: [Salt; 8] = std::array::from_fn(|_| random_salt(rng));
        let digests = Slot::ALL.map(|slot| {
            commit(&Opening::new(slot, salts[slot.index()], &objects.object(slot)))
        });
        ProverRoundState {
            objects,
            salts,
            f: None,
            commit_message: CommitMessage { digests },
            consumed: false,
        }
    }

    pub fn objects(&self) -> &RoundObjects {
        &self.objects
    }

    pub fn salt(&self, slot: Slot) -> Salt {
        self.salts[slot.index()]
    }

    pub fn ternary_witness(&self) -> Option<&TernaryVector> {
        self.f.as_ref()
    }

    pub fn commit_message(&self) -> &CommitMessage {
        &self.commit_message
    }

    pub fn is_consumed(&self) -> bool {
        self.consumed
    }

    /// Opens the slot set of `ch`. Consumes the state.
    pub fn respond(&mut self, ch: Challenge) -> Result<Response> {
        if self.consumed {
            return Err(Error::StateConsumed);
        }
        self.consumed = true;
        Ok(self.build_response(ch))
    }

    /// Answers for all three challenges from one commitment.
    ///
    /// This is the rewind hook of the knowledge extractor. A real prover
    /// must never expose it: two answers on one state reveal the witness.
    pub fn rewind_responses(&self) -> [Response; 3] {
        Challenge::ALL.map(|ch| self.build_response(ch))
    }

    fn opened<T: Clone>(&self, slot: Slot, value: &T) -> Opened<T> {
        Opened {
            salt: self.salt(slot),
            value: value.clone(),
        }
    }

    fn build_response(&self, ch: Challenge) -> Response {
        let o = &self.objects;
        match ch {
            Challenge::A => Response::A {
                r: self.opened(Slot::R, &o.r),
                t: self.opened(Slot::T, &o.t),
                pi: self.opened(Slot::Pi, &o.pi),
                r_pi_salt: self.salt(Slot::RPi),
                t_pi_salt: self.salt(Slot::TPi),
            },
            Challenge::B => Response::B {
                a: self.opened(Slot::A, &o.a),
                b: self.opened(Slot::B, &o.b),
                r_pi: self.opened(Slot::RPi, &o.r_pi),
                f_pi: self.opened(Slot::FPi, &o.f_pi),
            },
            Challenge::C => Response::C {
                a: self.opened(Slot::A, &o.a),
                b: self.opened(Slot::B, &o.b),
                t_pi: self.opened(Slot::TPi, &o.t_pi),
                f_pi: self.opened(Slot::FPi, &o.f_pi),
            },
        }
    }
}

/// Commitment phase of an honest prover.
///
/// Draws from `rng` in this order: the mask `R` (row-major), the
/// permutation `π`, then the eight salts in slot order.
pub fn prover_commit<R: Rng + CryptoRng + ?Sized>(
    inst: &SdInstance,
    witness: &Witness,
    rng: &mut R,
) -> Result<(ProverRoundState, CommitMessage)> {
    if inst.variant() != Variant::Balanced {
        return Err(Error::Precondition(format!(
            "the protocol runs on balanced instances, got {}",
            inst.variant()
        )));
    }
    if !check_witness(inst, &witness.e)? {
        return Err(Error::Precondition("witness does not satisfy the instance".into()));
    }
    let f = ternary_witness(&witness.e, inst.w())?;
    let r = ZmMatrix::random(inst.modulus(), inst.n(), inst.n() - inst.k(), rng);
    let pi = Permutation::random(f.len(), rng);
    let objects = RoundObjects::honest(inst, &f, r, pi)?;
    debug_assert_eq!(objects.a, witness.e.mul_matrix(&objects.r)?);
    let mut state = ProverRoundState::from_objects(objects, rng);
    state.f = Some(f);
    let cm = state.commit_message.clone();
    Ok((state, cm))
}

pub fn prover_respond(state: &mut ProverRoundState, ch: Challenge) -> Result<Response> {
    state.respond(ch)
}

/// Identifies a verifier check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CheckId {
    /// Response does not answer the issued challenge.
    Challenge,
    /// Dimensions, modulus, ternary entries or bijectivity.
    Range,
    /// Undecodable response bytes.
    Malformed,
    /// An opened value does not match its commitment.
    Opening,
    A1,
    A2,
    B1,
    B2,
    B3,
    B4,
    C1,
    C2,
    C3,
    C4,
}

impl CheckId {
    pub fn name(self) -> &'static str {
        match self {
            CheckId::Challenge => "challenge",
            CheckId::Range => "range",
            CheckId::Malformed => "malformed",
            CheckId::Opening => "opening",
            CheckId::A1 => "a1",
            CheckId::A2 => "a2",
            CheckId::B1 => "b1",
            CheckId::B2 => "b2",
            CheckId::B3 => "b3",
            CheckId::B4 => "b4",
            CheckId::C1 => "c1",
            CheckId::C2 => "c2",
            CheckId::C3 => "c3",
            CheckId::C4 => "c4",
        }
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub check: CheckId,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    /// All failed checks; never empty.
    Reject(Vec<Failure>),
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept)
    }

    pub fn failed_checks(&self) -> Vec<CheckId> {
        match self {
            Verdict::Accept => Vec::new(),
            Verdict::Reject(f) => f.iter().map(|x| x.check).collect(),
        }
    }

    pub fn has_failed(&self, check: CheckId) -> bool {
        self.failed_checks().contains(&check)
    }

    fn reject(check: CheckId, detail: impl Into<String>) -> Verdict {
        Verdict::Reject(vec![Failure {
            check,
            detail: detail.into(),
        }])
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Accept => f.write_str("accept"),
            Verdict::Reject(failures) => {
                f.write_str("reject")?;
                for (i, x) in failures.iter().enumerate() {
                    write!(f, "{} {}: {}", if i == 0 { ":" } else { ";" }, x.check, x.detail)?;
                }
                Ok(())
            }
        }
    }
}

struct Checks(Vec<Failure>);

impl Checks {
    fn require(&mut self, ok: bool, check: CheckId, detail: impl FnOnce() -> String) {
        if !ok {
            self.0.push(Failure {
                check,
                detail: detail(),
            });
        }
    }

    fn verdict(self) -> Verdict {
        if self.0.is_empty() {
            Verdict::Accept
        } else {
            Verdict::Reject(self.0)
        }
    }
}

fn check_matrix_shape(
    checks: &mut Checks,
    name: &str,
    m: &ZmMatrix,
    modulus: Modulus,
    rows: usize,
    cols: usize,
) {
    checks.require(
        m.modulus() == modulus && m.rows() == rows && m.cols() == cols,
        CheckId::Range,
        || {
            format!(
                "{name} is {}x{} over Z_{}, expected {rows}x{cols} over Z_{modulus}",
                m.rows(),
                m.cols(),
                m.modulus()
            )
        },
    );
}

fn check_vector_shape(checks: &mut Checks, name: &str, v: &ZmVector, modulus: Modulus, len: usize) {
    checks.require(
        v.modulus() == modulus && v.len() == len,
        CheckId::Range,
        || format!("{name} has length {} over Z_{}, expected {len} over Z_{modulus}", v.len(), v.modulus()),
    );
}

fn opening_ok<T>(cm: &CommitMessage, slot: Slot, opened: &Opened<T>, obj: CommittedObject) -> bool {
    verify_opening(cm.get(slot), &Opening::new(slot, opened.salt, &obj))
}

/// Verifier decision for one round.
///
/// Never panics on adversarial input: every failure is a [`Verdict::Reject`]
/// naming the failed checks. Range and opening failures stop evaluation;
/// otherwise all checks of the challenge are evaluated and reported.
pub fn verifier_check(
    inst: &SdInstance,
    cm: &CommitMessage,
    ch: Challenge,
    resp: &Response,
) -> Verdict {
    if inst.variant() != Variant::Balanced {
        return Verdict::reject(CheckId::Range, format!("{} instance", inst.variant()));
    }
    if resp.challenge() != ch {
        return Verdict::reject(
            CheckId::Challenge,
            format!("challenge {ch} answered with {}", resp.challenge()),
        );
    }
    let modulus = inst.modulus();
    let (n, cols) = (inst.n(), inst.n() - inst.k());
    let big_n = n * inst.ell();
    let w = inst.w();

    // range checks
    let mut range = Checks(Vec::new());
    match resp {
        Response::A { r, t, pi, .. } => {
            check_matrix_shape(&mut range, "R", &r.value, modulus, n, cols);
            check_matrix_shape(&mut range, "T", &t.value, modulus, n, cols);
            range.require(pi.value.len() == big_n, CheckId::Range, || {
                format!("pi acts on {} points, expected {big_n}", pi.value.len())
            });
        }
        Response::B { a, b, r_pi: mat, f_pi } | Response::C { a, b, t_pi: mat, f_pi } => {
            check_vector_shape(&mut range, "a", &a.value, modulus, cols);
            check_vector_shape(&mut range, "b", &b.value, modulus, cols);
            check_matrix_shape(&mut range, "permuted matrix", &mat.value, modulus, big_n, cols);
            range.require(f_pi.value.len() == big_n, CheckId::Range, || {
                format!("f_pi has length {}, expected {big_n}", f_pi.value.len())
            });
        }
    }
    if !range.0.is_empty() {
        return range.verdict();
    }

    // openings
    let mut openings = Checks(Vec::new());
    let mut open = |slot: Slot, ok: bool| {
        openings.require(ok, CheckId::Opening, || format!("slot {slot} does not open"));
    };
    match resp {
        Response::A { r, t, pi, .. } => {
            open(Slot::R, opening_ok(cm, Slot::R, r, CommittedObject::Matrix(r.value.clone())));
            open(Slot::T, opening_ok(cm, Slot::T, t, CommittedObject::Matrix(t.value.clone())));
            open(
                Slot::Pi,
                opening_ok(cm, Slot::Pi, pi, CommittedObject::Permutation(pi.value.clone())),
            );
        }
        Response::B { a, b, r_pi, f_pi } => {
            open(Slot::A, opening_ok(cm, Slot::A, a, CommittedObject::Vector(a.value.clone())));
            open(Slot::B, opening_ok(cm, Slot::B, b, CommittedObject::Vector(b.value.clone())));
            open(
                Slot::RPi,
                opening_ok(cm, Slot::RPi, r_pi, CommittedObject::Matrix(r_pi.value.clone())),
            );
            open(
                Slot::FPi,
                opening_ok(cm, Slot::FPi, f_pi, CommittedObject::Ternary(f_pi.value.clone())),
            );
        }
        Response::C { a, b, t_pi, f_pi } => {
            open(Slot::A, opening_ok(cm, Slot::A, a, CommittedObject::Vector(a.value.clone())));
            open(Slot::B, opening_ok(cm, Slot::B, b, CommittedObject::Vector(b.value.clone())));
            open(
                Slot::TPi,
                opening_ok(cm, Slot::TPi, t_pi, CommittedObject::Matrix(t_pi.value.clone())),
            );
            open(
                Slot::FPi,
                opening_ok(cm, Slot::FPi, f_pi, CommittedObject::Ternary(f_pi.value.clone())),
            );
        }
    }
    if !openings.0.is_empty() {
        return openings.verdict();
    }

    let mut checks = Checks(Vec::new());
    match resp {
        Response::A {
            r,
            t,
            pi,
            r_pi_salt,
            t_pi_salt,
        } => {
            let sum_ok = r.value.add(&t.value).map(|x| x == *inst.h()).unwrap_or(false);
            checks.require(sum_ok, CheckId::A1, || "R + T != H".into());
            let ell = inst.ell();
            let rebuilt = pi
                .value
                .permute_rows(&expand_matrix(&r.value, ell))
                .and_then(|rp| Ok((rp, pi.value.permute_rows(&expand_matrix(&t.value, ell))?)));
            let formed_ok = match rebuilt {
                Ok((rp, tp)) => {
                    verify_opening(
                        cm.get(Slot::RPi),
                        &Opening::new(Slot::RPi, *r_pi_salt, &CommittedObject::Matrix(rp)),
                    ) && verify_opening(
                        cm.get(Slot::TPi),
                        &Opening::new(Slot::TPi, *t_pi_salt, &CommittedObject::Matrix(tp)),
                    )
                }
                Err(_) => false,
            };
            checks.require(formed_ok, CheckId::A2, || {
                "committed R~pi, T~pi are not the permuted expansions of R, T".into()
            });
        }
        Response::B { a, b, r_pi: mat, f_pi } | Response::C { a, b, t_pi: mat, f_pi } => {
            let is_b = ch == Challenge::B;
            let (sum_id, prod_id, wt_id, bal_id) = if is_b {
                (CheckId::B1, CheckId::B2, CheckId::B3, CheckId::B4)
            } else {
                (CheckId::C1, CheckId::C2, CheckId::C3, CheckId::C4)
            };
            let sum_ok = a.value.add(&b.value).map(|x| x == *inst.s()).unwrap_or(false);
            checks.require(sum_ok, sum_id, || "a + b != s".into());
            let target = if is_b { &a.value } else { &b.value };
            let prod_ok = f_pi.value.mul_matrix(&mat.value).map(|x| x == *target).unwrap_or(false);
            checks.require(prod_ok, prod_id, || {
                format!("f_pi times permuted matrix != {}", if is_b { "a" } else { "b" })
            });
            let weight = f_pi.value.weight();
            checks.require(weight == w, wt_id, || format!("wt(f_pi) = {weight}, expected {w}"));
            let sum = f_pi.value.sum();
            checks.require(sum == 0, bal_id, || format!("f_pi sums to {sum}"));
        }
    }
    checks.verdict()
}

/// Decodes a response body and checks it. Undecodable bytes are rejected
/// as `range` or `malformed`.
pub fn verify_response_bytes(
    inst: &SdInstance,
    cm: &CommitMessage,
    ch: Challenge,
    body: &[u8],
) -> (Verdict, Option<Response>) {
    match Response::decode(body, inst.modulus()) {
        Ok(resp) => (verifier_check(inst, cm, ch, &resp), Some(resp)),
        Err(DecodeFailure::Range(s)) => (Verdict::reject(CheckId::Range, s), None),
        Err(DecodeFailure::Malformed(s)) => (Verdict::reject(CheckId::Malformed, s), None),
    }
}

/// Anything that can play the prover's side of a round.
pub trait RoundProver {
    fn commit(&mut self, rng: &mut ChaCha20Rng) -> Result<ProverRoundState>;
}

/// Prover holding a valid witness.
pub struct HonestProver<'a> {
    pub instance: &'a SdInstance,
    pub witness: &'a Witness,
}

impl RoundProver for HonestProver<'_> {
    fn commit(&mut self, rng: &mut ChaCha20Rng) -> Result<ProverRoundState> {
        Ok(prover_commit(self.instance, self.witness, rng)?.0)
    }
}

#[derive(Clone, Debug)]
pub struct RoundTranscript {
    pub commit: CommitMessage,
    pub challenge: Challenge,
    pub response: Response,
    pub verdict: Verdict,
    pub commit_bytes: usize,
    pub challenge_bytes: usize,
    pub response_bytes: usize,
}

#[derive(Clone, Debug)]
pub struct SessionReport {
    pub accepted: bool,
    /// Rounds actually run; the verifier stops at the first rejection.
    pub rounds: Vec<RoundTranscript>,
}

impl SessionReport {
    pub fn total_bytes(&self) -> usize {
        self.rounds
            .iter()
            .map(|r| r.commit_bytes + r.challenge_bytes + r.response_bytes)
            .sum()
    }

    pub fn max_response_bytes(&self) -> usize {
        self.rounds.iter().map(|r| r.response_bytes).max().unwrap_or(0)
    }
}

/// Splits one generator into independent prover and verifier generators.
pub fn split_rngs<R: RngCore + ?Sized>(rng: &mut R) -> (ChaCha20Rng, ChaCha20Rng) {
    let mut a = [0u8; 32];
    let mut b = [0u8; 32];
    rng.fill_bytes(&mut a);
    rng.fill_bytes(&mut b);
    (ChaCha20Rng::from_seed(a), ChaCha20Rng::from_seed(b))
}

/// Runs `t` sequential rounds of an honest session.
pub fn run_session<R: RngCore + ?Sized>(
    inst: &SdInstance,
    witness: &Witness,
    t: usize,
    rng: &mut R,
) -> Result<SessionReport> {
    let (mut p, mut v) = split_rngs(rng);
    let mut prover = HonestProver {
        instance: inst,
        witness,
    };
    run_session_with(inst, &mut prover, t, &mut p, &mut v)
}

/// Runs up to `t` rounds with any prover; each round goes through the
/// wire encodings so byte counts are the real message sizes.
pub fn run_session_with<P: RoundProver + ?Sized>(
    inst: &SdInstance,
    prover: &mut P,
    t: usize,
    prover_rng: &mut ChaCha20Rng,
    verifier_rng: &mut ChaCha20Rng,
) -> Result<SessionReport> {
    if t == 0 {
        return Err(Error::InvalidParameters("need at least one round".into()));
    }
    let mut rounds = Vec::with_capacity(t);
    for _ in 0..t {
        let mut state = prover.commit(prover_rng)?;
        let cm_bytes = state.commit_message().encode();
        let cm = CommitMessage::decode(&cm_bytes)?;
        let ch = verifier_challenge(verifier_rng);
        let resp = state.respond(ch)?;
        let body = resp.encode();
        let (verdict, _) = verify_response_bytes(inst, &cm, ch, &body);
        let accepted = verdict.is_accept();
        rounds.push(RoundTranscript {
            commit: cm,
            challenge: ch,
            response: resp,
            verdict,
            commit_bytes: cm_bytes.len(),
            challenge_bytes: 1,
            response_bytes: body.len(),
        });
        if !accepted {
            return Ok(SessionReport {
                accepted: false,
                rounds,
            });
        }
    }
    Ok(SessionReport {
        accepted: true,
        rounds,
    })
}

/// Information-theoretic size, in bits, of the largest opening set
/// `(R, T, π, R̃π, T̃π)`:
/// `2n(n-k)·log2 m + nℓ·log2(nℓ) + 2nℓ(n-k)·log2 m`.
pub fn comm_cost_bits(n: usize, k: usize, m: u32) -> f64 {
    let (n, k, m) = (n as f64, k as f64, m as f64);
    let ell = (m / 2.0).floor();
    let nl = n * ell;
    let perm = if nl > 0.0 { nl * nl.log2() } else { 0.0 };
    2.0 * n * (n - k) * m.log2() + perm + 2.0 * nl * (n - k) * m.log2()
}

/// Bytes of every salt in an encoded response, for accounting.
pub const fn salt_bytes(ch: Challenge) -> usize {
    match ch {
        Challenge::A => 5 * SALT_LEN,
        Challenge::B | Challenge::C => 4 * SALT_LEN,
    }
}
