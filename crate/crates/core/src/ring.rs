//! Exact arithmetic over `Z_m` using centered representatives.
//!
//! Every element is stored as its canonical centered representative:
//! `{-ℓ, ..., ℓ}` for odd `m = 2ℓ + 1` and `{-ℓ + 1, ..., ℓ}` for even
//! `m = 2ℓ` (the class `ℓ ≡ -ℓ` is always written `+ℓ`). All operations
//! reduce eagerly, so two equal elements always share one representation
//! and one byte encoding.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

/// Largest supported modulus; representatives must fit an `i16`.
pub const MAX_MODULUS: i64 = i16::MAX as i64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Modulus(u16);

impl Modulus {
    pub fn new(m: i64) -> Result<Self> {
        if !(4..=MAX_MODULUS).contains(&m) {
            return Err(Error::InvalidModulus(m));
        }
        Ok(Modulus(m as u16))
    }

    #[inline]
    pub fn value(self) -> u16 {
        self.0
    }

    #[inline]
    pub fn m(self) -> i64 {
        self.0 as i64
    }

    /// `ℓ = ⌊m/2⌋`.
    #[inline]
    pub fn ell(self) -> i64 {
        self.m() / 2
    }

    #[inline]
    pub fn is_even(self) -> bool {
        self.0 % 2 == 0
    }

    /// Smallest canonical representative.
    #[inline]
    pub fn min_repr(self) -> i64 {
        if self.is_even() {
            -self.ell() + 1
        } else {
            -self.ell()
        }
    }

    #[inline]
    pub fn is_canonical(self, x: i64) -> bool {
        x >= self.min_repr() && x <= self.ell()
    }

    /// Canonical representatives in increasing order.
    pub fn representatives(self) -> std::ops::RangeInclusive<i64> {
        self.min_repr()..=self.ell()
    }

    #[inline]
    pub fn reduce(self, x: i64) -> i16 {
        let m = self.m();
        let r = x.rem_euclid(m);
        (if r > self.ell() { r - m } else { r }) as i16
    }

    /// Multiplicative inverse of `c`, as a canonical representative.
    pub fn inverse(self, c: i64) -> Result<i64> {
        let m = self.m();
        let (mut old_r, mut r) = (c.rem_euclid(m), m);
        let (mut old_s, mut s) = (1i64, 0i64);
        while r != 0 {
            let q = old_r / r;
            (old_r, r) = (r, old_r - q * r);
            (old_s, s) = (s, old_s - q * s);
        }
        if old_r != 1 {
            return Err(Error::NotInvertible { c, m: self.0 });
        }
        Ok(self.reduce(old_s) as i64)
    }

    /// Bits needed to write a residue in `[0, m)`.
    pub fn element_bits(self) -> u32 {
        bits_for(self.m() as u64)
    }

    /// Uniform element, as a canonical representative.
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> i16 {
        rng.random_range(self.min_repr()..=self.ell()) as i16
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Number of bits needed to store values in `[0, count)`.
pub(crate) fn bits_for(count: u64) -> u32 {
    if count <= 1 {
        0
    } else {
        64 - (count - 1).leading_zeros()
    }
}

/// Reduces `x` to its canonical centered representative modulo `m`.
pub fn center_mod(x: i64, m: Modulus) -> i16 {
    m.reduce(x)
}

fn check_modulus(a: Modulus, b: Modulus) -> Result<()> {
    if a != b {
        return Err(Error::ModulusMismatch(a.value(), b.value()));
    }
    Ok(())
}

fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ZmVector {
    modulus: Modulus,
    entries: Vec<i16>,
}

impl ZmVector {
    /// Builds a vector from entries that must already be canonical.
    pub fn new(modulus: Modulus, entries: Vec<i64>) -> Result<Self> {
        let entries = entries
            .into_iter()
            .map(|x| {
                if modulus.is_canonical(x) {
                    Ok(x as i16)
                } else {
                    Err(Error::NotCanonical {
                        value: x,
                        modulus: modulus.value(),
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ZmVector { modulus, entries })
    }

    /// Builds a vector from arbitrary integers, reducing each one.
    pub fn from_reduced<I: IntoIterator<Item = i64>>(modulus: Modulus, values: I) -> Self {
        ZmVector {
            modulus,
            entries: values.into_iter().map(|x| modulus.reduce(x)).collect(),
        }
    }

    pub fn zeros(modulus: Modulus, len: usize) -> Self {
        ZmVector {
            modulus,
            entries: vec![0; len],
        }
    }

    pub fn random<R: Rng + ?Sized>(modulus: Modulus, len: usize, rng: &mut R) -> Self {
        ZmVector {
            modulus,
            entries: (0..len).map(|_| modulus.sample(rng)).collect(),
        }
    }

    #[inline]
    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    #[inline]
    pub fn entries(&self) -> &[i16] {
        &self.entries
    }

    pub fn to_i64(&self) -> Vec<i64> {
        self.entries.iter().map(|&x| x as i64).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&x| x == 0)
    }

    pub fn lee_weight(&self) -> u64 {
        self.entries.iter().map(|&x| x.unsigned_abs() as u64).sum()
    }

    /// Sum of representatives over the integers (not reduced).
    pub fn sum(&self) -> i64 {
        self.entries.iter().map(|&x| x as i64).sum()
    }

    /// Integer representatives whose real sum is zero, if such a choice exists.
    ///
    /// For odd `m` the canonical representatives are the only choice. For even
    /// `m` each entry equal to `ℓ` may also be read as `-ℓ`; the first entries
    /// equal to `ℓ` (left to right) are flipped as needed.
    pub fn balanced_representatives(&self) -> Option<Vec<i64>> {
        let mut reps = self.to_i64();
        let total: i64 = reps.iter().sum();
        if total == 0 {
            return Some(reps);
        }
        if !self.modulus.is_even() {
            return None;
        }
        let ell = self.modulus.ell();
        let flippable = reps.iter().filter(|&&x| x == ell).count() as i64;
        // flipping one `ℓ` to `-ℓ` lowers the sum by 2ℓ
        if total < 0 || total % (2 * ell) != 0 || total / (2 * ell) > flippable {
            return None;
        }
        let mut flips = total / (2 * ell);
        for x in reps.iter_mut() {
            if flips == 0 {
                break;
            }
            if *x == ell {
                *x = -ell;
                flips -= 1;
            }
        }
        Some(reps)
    }

    /// Balance predicate: positive and negative entries carry equal weight.
    ///
    /// Equivalent to `sum() == 0` for odd `m`; for even `m` the shared class
    /// `±ℓ` may be read with either sign.
    pub fn is_balanced(&self) -> bool {
        self.balanced_representatives().is_some()
    }

    pub fn add(&self, other: &ZmVector) -> Result<ZmVector> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ZmVector) -> Result<ZmVector> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn neg(&self) -> ZmVector {
        self.scale(-1)
    }

    pub fn scale(&self, c: i64) -> ZmVector {
        ZmVector::from_reduced(self.modulus, self.entries.iter().map(|&x| x as i64 * c))
    }

    fn zip_with(&self, other: &ZmVector, f: impl Fn(i64, i64) -> i64) -> Result<ZmVector> {
        check_modulus(self.modulus, other.modulus)?;
        check_len("vector length", self.len(), other.len())?;
        Ok(ZmVector::from_reduced(
            self.modulus,
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| f(a as i64, b as i64)),
        ))
    }

    pub fn concat(&self, other: &ZmVector) -> Result<ZmVector> {
        check_modulus(self.modulus, other.modulus)?;
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        Ok(ZmVector {
            modulus: self.modulus,
            entries,
        })
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> ZmVector {
        ZmVector {
            modulus: self.modulus,
            entries: self.entries[range].to_vec(),
        }
    }

    /// Row-vector times matrix, `v·H`.
    pub fn mul_matrix(&self, h: &ZmMatrix) -> Result<ZmVector> {
        check_modulus(self.modulus, h.modulus)?;
        check_len("vector-matrix product", h.rows, self.len())?;
        let mut acc = vec![0i64; h.cols];
        for (i, &vi) in self.entries.iter().enumerate() {
            if vi == 0 {
                continue;
            }
            for (a, &hij) in acc.iter_mut().zip(h.row(i)) {
                *a += vi as i64 * hij as i64;
            }
        }
        Ok(ZmVector::from_reduced(self.modulus, acc))
    }

    /// Canonical encoding: 4-byte LE count, then 2-byte LE elements.
    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.len() as u32).to_le_bytes());
        for &x in &self.entries {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 2 * self.len());
        self.encode_into(&mut out);
        out
    }

    /// Decodes a canonical encoding; the whole input must be consumed.
    pub fn from_bytes(bytes: &[u8], modulus: Modulus) -> Result<ZmVector> {
        let mut reader = ByteReader::new(bytes);
        let v = ZmVector::read_from(&mut reader, modulus)?;
        reader.finish()?;
        Ok(v)
    }

    pub(crate) fn read_from(reader: &mut ByteReader<'_>, modulus: Modulus) -> Result<ZmVector> {
        let len = reader.u32()? as usize;
        let raw = reader.take(len.checked_mul(2).ok_or_else(|| overflow("vector"))?)?;
        let entries = raw
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as i64)
            .collect();
        ZmVector::new(modulus, entries)
    }
}

impl fmt::Display for ZmVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// Row-major matrix over `Z_m`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ZmMatrix {
    modulus: Modulus,
    rows: usize,
    cols: usize,
    entries: Vec<i16>,
}

impl ZmMatrix {
    pub fn new(modulus: Modulus, rows: usize, cols: usize, entries: Vec<i64>) -> Result<Self> {
        check_len("matrix entries", rows * cols, entries.len())?;
        let v = ZmVector::new(modulus, entries)?;
        Ok(ZmMatrix {
            modulus,
            rows,
            cols,
            entries: v.entries,
        })
    }

    pub fn from_fn(
        modulus: Modulus,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> i64,
    ) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(modulus.reduce(f(i, j)));
            }
        }
        ZmMatrix {
            modulus,
            rows,
            cols,
            entries,
        }
    }

    pub fn zeros(modulus: Modulus, rows: usize, cols: usize) -> Self {
        ZmMatrix {
            modulus,
            rows,
            cols,
            entries: vec![0; rows * cols],
        }
    }

    pub fn identity(modulus: Modulus, size: usize) -> Self {
        ZmMatrix::from_fn(modulus, size, size, |i, j| (i == j) as i64)
    }

    pub fn random<R: Rng + ?Sized>(modulus: Modulus, rows: usize, cols: usize, rng: &mut R) -> Self {
        ZmMatrix {
            modulus,
            rows,
            cols,
            entries: (0..rows * cols).map(|_| modulus.sample(rng)).collect(),
        }
    }

    #[inline]
    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn entries(&self) -> &[i16] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> i16 {
        self.entries[row * self.cols + col]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[i16] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn add(&self, other: &ZmMatrix) -> Result<ZmMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ZmMatrix) -> Result<ZmMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: i64) -> ZmMatrix {
        ZmMatrix {
            modulus: self.modulus,
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .map(|&x| self.modulus.reduce(x as i64 * c))
                .collect(),
        }
    }

    fn zip_with(&self, other: &ZmMatrix, f: impl Fn(i64, i64) -> i64) -> Result<ZmMatrix> {
        check_modulus(self.modulus, other.modulus)?;
        check_len("matrix rows", self.rows, other.rows)?;
        check_len("matrix cols", self.cols, other.cols)?;
        Ok(ZmMatrix {
            modulus: self.modulus,
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| self.modulus.reduce(f(a as i64, b as i64)))
                .collect(),
        })
    }

    /// New matrix whose `i`-th row is row `indices[i]` of `self`.
    pub fn select_rows(&self, indices: impl IntoIterator<Item = usize>) -> ZmMatrix {
        let mut entries = Vec::new();
        let mut rows = 0;
        for i in indices {
            entries.extend_from_slice(self.row(i));
            rows += 1;
        }
        ZmMatrix {
            modulus: self.modulus,
            rows,
            cols: self.cols,
            entries,
        }
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &ZmMatrix) -> Result<ZmMatrix> {
        check_modulus(self.modulus, other.modulus)?;
        check_len("vstack cols", self.cols, other.cols)?;
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        Ok(ZmMatrix {
            modulus: self.modulus,
            rows: self.rows + other.rows,
            cols: self.cols,
            entries,
        })
    }

    /// Places `self` and `other` side by side.
    pub fn hstack(&self, other: &ZmMatrix) -> Result<ZmMatrix> {
        check_modulus(self.modulus, other.modulus)?;
        check_len("hstack rows", self.rows, other.rows)?;
        let cols = self.cols + other.cols;
        let mut entries = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            entries.extend_from_slice(self.row(i));
            entries.extend_from_slice(other.row(i));
        }
        Ok(ZmMatrix {
            modulus: self.modulus,
            rows: self.rows,
            cols,
            entries,
        })
    }

    /// Canonical encoding: rows and cols (4-byte LE each), then row-major
    /// 2-byte LE elements.
    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.rows as u32).to_le_bytes());
        out.extend_from_slice(&(self.cols as u32).to_le_bytes());
        for &x in &self.entries {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 2 * self.entries.len());
        self.encode_into(&mut out);
        out
    }

    pub fn from_bytes(bytes: &[u8], modulus: Modulus) -> Result<ZmMatrix> {
        let mut reader = ByteReader::new(bytes);
        let h = ZmMatrix::read_from(&mut reader, modulus)?;
        reader.finish()?;
        Ok(h)
    }

    pub(crate) fn read_from(reader: &mut ByteReader<'_>, modulus: Modulus) -> Result<ZmMatrix> {
        let rows = reader.u32()? as usize;
        let cols = reader.u32()? as usize;
        let count = rows.checked_mul(cols).ok_or_else(|| overflow("matrix"))?;
        let raw = reader.take(count.checked_mul(2).ok_or_else(|| overflow("matrix"))?)?;
        let entries = raw
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as i64)
            .collect();
        ZmMatrix::new(modulus, rows, cols, entries)
    }
}

pub fn lee_weight(v: &ZmVector) -> u64 {
    v.lee_weight()
}

pub fn lee_distance(x: &ZmVector, y: &ZmVector) -> Result<u64> {
    Ok(x.sub(y)?.lee_weight())
}

pub fn vector_sum(v: &ZmVector) -> i64 {
    v.sum()
}

pub fn is_balanced(v: &ZmVector) -> bool {
    v.is_balanced()
}

/// `v·H` reduced to canonical form.
pub fn syndrome(v: &ZmVector, h: &ZmMatrix) -> Result<ZmVector> {
    v.mul_matrix(h)
}

fn overflow(what: &str) -> Error {
    Error::Decode(format!("{what} length overflows"))
}

/// Bounds-checked cursor over a byte slice.
pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        ByteReader { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::Decode(format!(
                    "truncated input: wanted {n} bytes at offset {}, have {}",
                    self.pos,
                    self.bytes.len() - self.pos
                ))
            })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub(crate) fn array32(&mut self) -> Result<[u8; 32]> {
        let mut out = [0u8; 32];
        out.copy_from_slice(self.take(32)?);
        Ok(out)
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(Error::Decode(format!(
                "{} trailing bytes",
                self.remaining()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn m(x: i64) -> Modulus {
        Modulus::new(x).unwrap()
    }

    fn vec7(xs: &[i64]) -> ZmVector {
        ZmVector::new(m(7), xs.to_vec()).unwrap()
    }

    #[test]
    fn center_mod_examples() {
        assert_eq!(center_mod(5, m(7)), -2);
        assert_eq!(center_mod(0, m(7)), 0);
        assert_eq!(center_mod(-4, m(7)), 3);
        // even modulus keeps the shared class on +ℓ
        assert_eq!(center_mod(-4, m(8)), 4);
        assert_eq!(center_mod(4, m(8)), 4);
        assert_eq!(center_mod(5, m(8)), -3);
    }

    #[test]
    fn modulus_bounds() {
        assert!(Modulus::new(3).is_err());
        assert!(Modulus::new(4).is_ok());
        assert!(Modulus::new(MAX_MODULUS).is_ok());
        assert!(Modulus::new(MAX_MODULUS + 1).is_err());
        assert_eq!(m(7).ell(), 3);
        assert_eq!(m(8).ell(), 4);
        assert_eq!(m(8).representatives().collect::<Vec<_>>(), vec![-3, -2, -1, 0, 1, 2, 3, 4]);
    }

    #[test]
    fn inverse_mod() {
        assert_eq!(m(7).inverse(2).unwrap(), -3); // 2·4 = 8 ≡ 1
        assert_eq!(m(8).inverse(3).unwrap(), 3);
        assert!(m(8).inverse(2).is_err());
    }

    #[test]
    fn new_rejects_noncanonical() {
        assert!(ZmVector::new(m(7), vec![4]).is_err());
        assert!(ZmVector::new(m(8), vec![-4]).is_err());
        assert!(ZmVector::new(m(8), vec![4]).is_ok());
    }

    #[test]
    fn lee_weight_examples() {
        assert_eq!(vec7(&[-2, 0, 1, 3, -1, -1]).lee_weight(), 8);
        assert_eq!(ZmVector::zeros(m(7), 9).lee_weight(), 0);
        assert_eq!(vec7(&[3; 5]).lee_weight(), 15);
    }

    #[test]
    fn lee_distance_examples() {
        let x = vec7(&[1, 2, -3]);
        assert_eq!(lee_distance(&x, &x).unwrap(), 0);
        assert_eq!(lee_distance(&vec7(&[1]), &vec7(&[-1])).unwrap(), 2);
        assert_eq!(lee_distance(&vec7(&[3]), &vec7(&[-3])).unwrap(), 1);
        assert!(lee_distance(&vec7(&[1]), &vec7(&[1, 2])).is_err());
        let y = ZmVector::new(m(9), vec![1]).unwrap();
        assert!(lee_distance(&vec7(&[1]), &y).is_err());
    }

    #[test]
    fn balance_examples() {
        let e = vec7(&[-2, 0, 1, 3, -1, -1]);
        assert_eq!(vector_sum(&e), 0);
        assert!(e.is_balanced());
        assert_eq!(vector_sum(&vec7(&[1, 1])), 2);
        assert!(!vec7(&[1, 1]).is_balanced());
        assert!(vec7(&[1, -1]).is_balanced());
    }

    #[test]
    fn even_modulus_balance_reads_shared_class_either_way() {
        let v = ZmVector::new(m(4), vec![2, 2]).unwrap();
        assert_eq!(v.sum(), 4);
        assert!(v.is_balanced());
        assert_eq!(v.balanced_representatives().unwrap(), vec![-2, 2]);
        let v = ZmVector::new(m(4), vec![2, 1, 1]).unwrap();
        assert_eq!(v.balanced_representatives().unwrap(), vec![-2, 1, 1]);
        assert!(!ZmVector::new(m(4), vec![2, 1]).unwrap().is_balanced());
        assert!(!ZmVector::new(m(4), vec![-1, 2, 2]).unwrap().is_balanced());
    }

    #[test]
    fn syndrome_examples() {
        let m5 = m(5);
        let v = ZmVector::new(m5, vec![1, 1]).unwrap();
        let h = ZmMatrix::new(m5, 2, 1, vec![1, 2]).unwrap();
        assert_eq!(syndrome(&v, &h).unwrap().entries(), &[-2]); // 3 ≡ -2 mod 5
        assert!(syndrome(&ZmVector::zeros(m5, 2), &h).unwrap().is_zero());
        assert!(syndrome(&ZmVector::zeros(m5, 3), &h).is_err());
    }

    fn schoolbook(v: &[i64], h: &[Vec<i64>], modulus: i64) -> Vec<i64> {
        let cols = h[0].len();
        let mut out = vec![0i64; cols];
        for j in 0..cols {
            let mut acc = 0i64;
            for i in 0..v.len() {
                acc = (acc + v[i] * h[i][j]).rem_euclid(modulus);
            }
            out[j] = acc;
        }
        out
    }

    #[test]
    fn syndrome_matches_schoolbook_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let m7 = m(7);
        for _ in 0..200 {
            let v = ZmVector::random(m7, 4, &mut rng);
            let h = ZmMatrix::random(m7, 4, 3, &mut rng);
            let rows: Vec<Vec<i64>> = (0..4)
                .map(|i| h.row(i).iter().map(|&x| x as i64).collect())
                .collect();
            let expected = schoolbook(&v.to_i64(), &rows, 7);
            let got: Vec<i64> = syndrome(&v, &h)
                .unwrap()
                .entries()
                .iter()
                .map(|&x| (x as i64).rem_euclid(7))
                .collect();
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn encodings() {
        let v = ZmVector::zeros(m(7), 0);
        assert_eq!(v.to_bytes(), vec![0, 0, 0, 0]);
        let v = vec7(&[-1, 3]);
        assert_eq!(v.to_bytes(), vec![2, 0, 0, 0, 0xff, 0xff, 3, 0]);
        let h = ZmMatrix::new(m(7), 1, 2, vec![-3, 1]).unwrap();
        assert_eq!(h.to_bytes(), vec![1, 0, 0, 0, 2, 0, 0, 0, 0xfd, 0xff, 1, 0]);
        assert_eq!(ZmMatrix::from_bytes(&h.to_bytes(), m(7)).unwrap(), h);
        assert!(ZmVector::from_bytes(&[1, 0, 0, 0, 4, 0], m(7)).is_err());
        assert!(ZmVector::from_bytes(&[2, 0, 0, 0, 1, 0], m(7)).is_err());
        assert!(ZmVector::from_bytes(&[0, 0, 0, 0, 0], m(7)).is_err());
        // a huge claimed count must not allocate
        assert!(ZmMatrix::from_bytes(&[0xff; 8], m(7)).is_err());
    }

    fn modulus_strategy() -> impl Strategy<Value = Modulus> {
        (4i64..40).prop_map(|x| Modulus::new(x).unwrap())
    }

    fn vec_pair(len: usize) -> impl Strategy<Value = (Modulus, Vec<i64>, Vec<i64>, Vec<i64>)> {
        modulus_strategy().prop_flat_map(move |md| {
            let r = md.representatives();
            (
                Just(md),
                proptest::collection::vec(r.clone(), len),
                proptest::collection::vec(r.clone(), len),
                proptest::collection::vec(r, len),
            )
        })
    }

    proptest! {
        #[test]
        fn center_mod_idempotent(x in -100_000i64..100_000, md in modulus_strategy()) {
            let c = center_mod(x, md) as i64;
            prop_assert!(md.is_canonical(c));
            prop_assert_eq!((x - c).rem_euclid(md.m()), 0);
            prop_assert_eq!(center_mod(c, md) as i64, c);
        }

        #[test]
        fn lee_weight_bounds((md, xs, _, _) in vec_pair(12)) {
            let v = ZmVector::new(md, xs).unwrap();
            prop_assert!(v.lee_weight() <= 12 * md.ell() as u64);
        }

        #[test]
        fn lee_distance_is_a_metric((md, xs, ys, zs) in vec_pair(8)) {
            let x = ZmVector::new(md, xs).unwrap();
            let y = ZmVector::new(md, ys).unwrap();
            let z = ZmVector::new(md, zs).unwrap();
            let dxy = lee_distance(&x, &y).unwrap();
            prop_assert_eq!(dxy, lee_distance(&y, &x).unwrap());
            prop_assert_eq!(lee_distance(&x, &x).unwrap(), 0);
            prop_assert!(lee_distance(&x, &z).unwrap() <= dxy + lee_distance(&y, &z).unwrap());
        }

        #[test]
        fn syndrome_is_linear((md, xs, ys, _) in vec_pair(5), seed in any::<u64>()) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let h = ZmMatrix::random(md, 5, 3, &mut rng);
            let u = ZmVector::new(md, xs).unwrap();
            let v = ZmVector::new(md, ys).unwrap();
            let lhs = syndrome(&u.add(&v).unwrap(), &h).unwrap();
            let rhs = syndrome(&u, &h).unwrap().add(&syndrome(&v, &h).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn balance_survives_negation_and_permutation(
            (md, xs, _, _) in vec_pair(7),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            let v = ZmVector::new(md, xs).unwrap();
            let mut shuffled = v.to_i64();
            shuffled.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
            let p = ZmVector::new(md, shuffled).unwrap();
            prop_assert_eq!(v.is_balanced(), v.neg().is_balanced());
            prop_assert_eq!(v.is_balanced(), p.is_balanced());
        }

        #[test]
        fn matrix_encoding_round_trip(md in modulus_strategy(), rows in 0usize..5, cols in 0usize..5, seed in any::<u64>()) {
            let h = ZmMatrix::random(md, rows, cols, &mut ChaCha20Rng::seed_from_u64(seed));
            prop_assert_eq!(ZmMatrix::from_bytes(&h.to_bytes(), md).unwrap(), h);
        }
    }

    #[test]
    fn max_weight_attained_by_all_ell() {
        let md = m(9);
        let v = ZmVector::new(md, vec![4, -4, 4]).unwrap();
        assert_eq!(v.lee_weight(), 12);
        let w = ZmVector::new(md, vec![4, -3, 4]).unwrap();
        assert!(w.lee_weight() < 12);
    }
}
