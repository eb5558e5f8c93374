//! Salted SHA-256 commitments over canonically encoded protocol objects.
//!
//! A commitment digest is `SHA-256(version ‖ slot tag ‖ salt ‖ payload)`
//! where the payload is the canonical byte encoding of the committed object.
//! The slot tag separates the eight commitment slots of a round so that an
//! opening for one slot never verifies against another.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{CryptoRng, Rng};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::problems::TernaryVector;
use crate::ring::{ByteReader, Modulus, ZmMatrix, ZmVector};

/// Version byte prefixed to every hashed preimage.
pub const COMMITMENT_VERSION: u8 = 1;
pub const SALT_LEN: usize = 32;
pub const DIGEST_LEN: usize = 32;

pub type Salt = [u8; SALT_LEN];

pub fn random_salt<R: Rng + CryptoRng + ?Sized>(rng: &mut R) -> Salt {
    let mut salt = [0u8; SALT_LEN];
    rng.fill_bytes(&mut salt);
    salt
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Commitment(pub [u8; DIGEST_LEN]);

impl Commitment {
    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Debug for Commitment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Commitment({})", self.to_hex())
    }
}

/// The eight commitment slots of a round, in commit-message order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    R,
    T,
    A,
    B,
    Pi,
    RPi,
    TPi,
    FPi,
}

impl Slot {
    pub const ALL: [Slot; 8] = [
        Slot::R,
        Slot::T,
        Slot::A,
        Slot::B,
        Slot::Pi,
        Slot::RPi,
        Slot::TPi,
        Slot::FPi,
    ];

    /// Domain-separation byte.
    pub fn tag(self) -> u8 {
        match self {
            Slot::R => b'R',
            Slot::T => b'T',
            Slot::A => b'a',
            Slot::B => b'b',
            Slot::Pi => b'p',
            Slot::RPi => b'r',
            Slot::TPi => b't',
            Slot::FPi => b'f',
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn kind(self) -> ObjectKind {
        match self {
            Slot::R | Slot::T | Slot::RPi | Slot::TPi => ObjectKind::Matrix,
            Slot::A | Slot::B => ObjectKind::Vector,
            Slot::Pi => ObjectKind::Permutation,
            Slot::FPi => ObjectKind::Ternary,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Slot::R => "R",
            Slot::T => "T",
            Slot::A => "a",
            Slot::B => "b",
            Slot::Pi => "pi",
            Slot::RPi => "R~pi",
            Slot::TPi => "T~pi",
            Slot::FPi => "f_pi",
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ObjectKind {
    Matrix,
    Vector,
    Permutation,
    Ternary,
}

impl ObjectKind {
    pub fn tag(self) -> u8 {
        match self {
            ObjectKind::Matrix => 1,
            ObjectKind::Vector => 2,
            ObjectKind::Permutation => 3,
            ObjectKind::Ternary => 4,
        }
    }
}

/// A permutation of `{1, ..., N}` stored as its image list `(π(1), ..., π(N))`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<u32>,
}

impl Permutation {
    pub fn new(images: Vec<u32>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &x in &images {
            let idx = (x as usize).wrapping_sub(1);
            if idx >= n || seen[idx] {
                return Err(Error::Precondition(format!(
                    "image list is not a bijection on 1..={n}"
                )));
            }
            seen[idx] = true;
        }
        Ok(Permutation { images })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            images: (1..=n as u32).collect(),
        }
    }

    /// Uniform over all `N!` permutations.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut images: Vec<u32> = (1..=n as u32).collect();
        images.shuffle(rng);
        Permutation { images }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.images.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    #[inline]
    pub fn images(&self) -> &[u32] {
        &self.images
    }

    /// Row `i` of the result is row `π(i)` of `m`.
    pub fn permute_rows(&self, m: &ZmMatrix) -> Result<ZmMatrix> {
        self.check_len(m.rows())?;
        Ok(m.select_rows(self.images.iter().map(|&x| x as usize - 1)))
    }

    /// `f_π = (f_{π(1)}, ..., f_{π(N)})`.
    pub fn permute_ternary(&self, f: &TernaryVector) -> Result<TernaryVector> {
        self.check_len(f.len())?;
        let src = f.entries();
        TernaryVector::new(
            self.images
                .iter()
                .map(|&x| src[x as usize - 1] as i64)
                .collect(),
        )
    }

    /// Inverse of [`Permutation::permute_ternary`].
    pub fn unpermute_ternary(&self, f_pi: &TernaryVector) -> Result<TernaryVector> {
        self.check_len(f_pi.len())?;
        let mut out = vec![0i64; f_pi.len()];
        for (i, &x) in self.images.iter().enumerate() {
            out[x as usize - 1] = f_pi.entries()[i] as i64;
        }
        TernaryVector::new(out)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::DimensionMismatch {
                context: "permutation size",
                expected: self.len(),
                found: len,
            });
        }
        Ok(())
    }

    /// 4-byte LE count, then 4-byte LE images.
    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.len() as u32).to_le_bytes());
        for &x in &self.images {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }

    pub(crate) fn read_from(reader: &mut ByteReader<'_>) -> Result<Permutation> {
        let len = reader.u32()? as usize;
        let raw = reader.take(
            len.checked_mul(4)
                .ok_or_else(|| Error::Decode("permutation length overflows".into()))?,
        )?;
        let images = raw
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Permutation::new(images).map_err(|e| Error::Decode(e.to_string()))
    }
}

/// Any object that can sit in a commitment slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CommittedObject {
    Matrix(ZmMatrix),
    Vector(ZmVector),
    Permutation(Permutation),
    Ternary(TernaryVector),
}

impl CommittedObject {
    pub fn kind(&self) -> ObjectKind {
        match self {
            CommittedObject::Matrix(_) => ObjectKind::Matrix,
            CommittedObject::Vector(_) => ObjectKind::Vector,
            CommittedObject::Permutation(_) => ObjectKind::Permutation,
            CommittedObject::Ternary(_) => ObjectKind::Ternary,
        }
    }
}

/// Canonical `(kind tag, payload)` encoding of an object.
///
/// Ternary vectors share the element encoding of [`ZmVector`]; the kind tag
/// keeps the two apart.
pub fn encode_object(obj: &CommittedObject) -> (u8, Vec<u8>) {
    let mut out = Vec::new();
    match obj {
        CommittedObject::Matrix(m) => m.encode_into(&mut out),
        CommittedObject::Vector(v) => v.encode_into(&mut out),
        CommittedObject::Permutation(p) => p.encode_into(&mut out),
        CommittedObject::Ternary(f) => {
            out.extend_from_slice(&(f.len() as u32).to_le_bytes());
            for &x in f.entries() {
                out.extend_from_slice(&(x as i16).to_le_bytes());
            }
        }
    }
    (obj.kind().tag(), out)
}

/// Inverse of [`encode_object`]; rejects malformed or non-canonical payloads.
pub fn decode_object(tag: u8, payload: &[u8], modulus: Modulus) -> Result<CommittedObject> {
    let mut reader = ByteReader::new(payload);
    let obj = match tag {
        1 => CommittedObject::Matrix(ZmMatrix::read_from(&mut reader, modulus)?),
        2 => CommittedObject::Vector(ZmVector::read_from(&mut reader, modulus)?),
        3 => CommittedObject::Permutation(Permutation::read_from(&mut reader)?),
        4 => {
            let v = ZmVector::read_from(&mut reader, modulus)?;
            CommittedObject::Ternary(
                TernaryVector::from_zm(&v).map_err(|e| Error::Decode(e.to_string()))?,
            )
        }
        other => return Err(Error::Decode(format!("unknown object tag {other}"))),
    };
    reader.finish()?;
    Ok(obj)
}

/// Everything needed to open one commitment slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Opening {
    pub slot: Slot,
    pub salt: Salt,
    pub payload: Vec<u8>,
}

impl Opening {
    pub fn new(slot: Slot, salt: Salt, obj: &CommittedObject) -> Self {
        Opening {
            slot,
            salt,
            payload: encode_object(obj).1,
        }
    }
}

pub fn commit(opening: &Opening) -> Commitment {
    let mut hasher = Sha256::new();
    hasher.update([COMMITMENT_VERSION, opening.slot.tag()]);
    hasher.update(opening.salt);
    hasher.update(&opening.payload);
    let mut digest = [0u8; DIGEST_LEN];
    digest.copy_from_slice(&hasher.finalize());
    Commitment(digest)
}

/// `commit(opening) == c`, byte for byte.
pub fn verify_opening(c: &Commitment, opening: &Opening) -> bool {
    commit(opening) == *c
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::collections::HashMap;

    fn m7() -> Modulus {
        Modulus::new(7).unwrap()
    }

    fn sample_opening(rng: &mut ChaCha20Rng) -> Opening {
        let v = ZmVector::random(m7(), 5, rng);
        Opening::new(Slot::A, random_salt(rng), &CommittedObject::Vector(v))
    }

    #[test]
    fn commit_is_deterministic_and_32_bytes() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let o = sample_opening(&mut rng);
        assert_eq!(commit(&o), commit(&o));
        assert_eq!(commit(&o).as_bytes().len(), 32);
        assert!(verify_opening(&commit(&o), &o));
    }

    #[test]
    fn commit_matches_direct_hash() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let o = sample_opening(&mut rng);
        let mut preimage = vec![1u8, b'a'];
        preimage.extend_from_slice(&o.salt);
        preimage.extend_from_slice(&o.payload);
        let direct: [u8; 32] = Sha256::digest(&preimage).into();
        assert_eq!(commit(&o).0, direct);
        let mut other = o.clone();
        other.salt[0] ^= 1;
        assert_ne!(commit(&other), commit(&o));
    }

    #[test]
    fn tampering_breaks_verification() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let o = sample_opening(&mut rng);
        let c = commit(&o);
        for i in 0..o.payload.len() {
            let mut t = o.clone();
            t.payload[i] ^= 0x01;
            assert!(!verify_opening(&c, &t));
        }
        let mut t = o.clone();
        t.slot = Slot::B;
        assert!(!verify_opening(&c, &t));
    }

    #[test]
    fn empty_vector_and_identity_permutation() {
        let (tag, payload) = encode_object(&CommittedObject::Vector(ZmVector::zeros(m7(), 0)));
        assert_eq!(tag, 2);
        assert_eq!(payload, vec![0, 0, 0, 0]);
        let id = Permutation::identity(3);
        assert_eq!(id.images(), &[1, 2, 3]);
        let (_, payload) = encode_object(&CommittedObject::Permutation(id));
        assert_eq!(payload, vec![3, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 3, 0, 0, 0]);
    }

    #[test]
    fn permutation_validation_and_action() {
        assert!(Permutation::new(vec![1, 1]).is_err());
        assert!(Permutation::new(vec![0, 1]).is_err());
        assert!(Permutation::new(vec![2, 3]).is_err());
        let p = Permutation::new(vec![3, 1, 2]).unwrap();
        let f = TernaryVector::new(vec![1, 0, -1]).unwrap();
        let fp = p.permute_ternary(&f).unwrap();
        assert_eq!(fp.entries(), &[-1, 1, 0]);
        assert_eq!(p.unpermute_ternary(&fp).unwrap(), f);
        let m = ZmMatrix::new(m7(), 3, 1, vec![1, 2, 3]).unwrap();
        assert_eq!(p.permute_rows(&m).unwrap().entries(), &[3, 1, 2]);
        assert!(p.permute_rows(&ZmMatrix::zeros(m7(), 2, 1)).is_err());
    }

    #[test]
    fn decode_rejects_malformed_payloads() {
        let m = m7();
        assert!(decode_object(9, &[], m).is_err());
        assert!(decode_object(3, &[2, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0], m).is_err());
        // ternary with a 2 in it
        assert!(decode_object(4, &[1, 0, 0, 0, 2, 0], m).is_err());
        assert!(decode_object(2, &[1, 0, 0, 0, 2, 0, 9], m).is_err());
    }

    #[test]
    fn binding_proxy_no_shared_digests() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let mut seen: HashMap<Commitment, Opening> = HashMap::new();
        for _ in 0..5000 {
            let o = sample_opening(&mut rng);
            let c = commit(&o);
            if let Some(prev) = seen.insert(c, o.clone()) {
                assert_eq!(prev, o, "two openings share a digest");
            }
        }
    }

    #[test]
    fn hiding_proxy_bit_uniformity() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let v = CommittedObject::Vector(ZmVector::zeros(m7(), 4));
        let samples = 10_000usize;
        let mut ones = [0usize; 256];
        for _ in 0..samples {
            let c = commit(&Opening::new(Slot::A, random_salt(&mut rng), &v));
            for (bit, count) in ones.iter_mut().enumerate() {
                *count += ((c.0[bit / 8] >> (bit % 8)) & 1) as usize;
            }
        }
        let sigma = (samples as f64 * 0.25).sqrt();
        for (bit, &count) in ones.iter().enumerate() {
            let z = (count as f64 - samples as f64 / 2.0).abs() / sigma;
            assert!(z <= 4.0, "bit {bit} frequency {count}/{samples}");
        }
    }

    fn object_strategy() -> impl Strategy<Value = CommittedObject> {
        (any::<u64>(), 0u8..4, 0usize..6, 0usize..6).prop_map(|(seed, kind, a, b)| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            match kind {
                0 => CommittedObject::Matrix(ZmMatrix::random(m7(), a, b, &mut rng)),
                1 => CommittedObject::Vector(ZmVector::random(m7(), a, &mut rng)),
                2 => CommittedObject::Permutation(Permutation::random(a, &mut rng)),
                _ => CommittedObject::Ternary(
                    TernaryVector::new((0..a).map(|_| rng.random_range(-1..=1)).collect())
                        .unwrap(),
                ),
            }
        })
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip(obj in object_strategy()) {
            let (tag, payload) = encode_object(&obj);
            prop_assert_eq!(decode_object(tag, &payload, m7()).unwrap(), obj);
        }

        #[test]
        fn encoding_is_injective_within_kind(a in object_strategy(), b in object_strategy()) {
            let ea = encode_object(&a);
            let eb = encode_object(&b);
            if a.kind() == b.kind() {
                prop_assert_eq!(a == b, ea == eb);
            }
        }
    }
}
