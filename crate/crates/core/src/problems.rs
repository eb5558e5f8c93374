//! Syndrome-decoding instances in their three forms (general, balanced,
//! ternary), witness checking, exhaustive decision oracles and a planted
//! instance generator.

use std::fmt;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reductions;
use crate::ring::{Modulus, ZmMatrix, ZmVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    General,
    Balanced,
    Ternary,
}

impl Variant {
    pub fn tag(self) -> u8 {
        match self {
            Variant::General => 0,
            Variant::Balanced => 1,
            Variant::Ternary => 2,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::General => "general",
            Variant::Balanced => "balanced",
            Variant::Ternary => "ternary",
        })
    }
}

/// A vector over `{-1, 0, 1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TernaryVector {
    entries: Vec<i8>,
}

impl TernaryVector {
    pub fn new(entries: Vec<i64>) -> Result<Self> {
        let entries = entries
            .into_iter()
            .map(|x| match x {
                -1..=1 => Ok(x as i8),
                _ => Err(Error::Precondition(format!("{x} is not a ternary entry"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TernaryVector { entries })
    }

    pub fn zeros(len: usize) -> Self {
        TernaryVector {
            entries: vec![0; len],
        }
    }

    /// Uniform vector with exactly `plus` entries `+1` and `minus` entries `-1`.
    pub fn random_with_counts<R: Rng + ?Sized>(
        len: usize,
        plus: usize,
        minus: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if plus + minus > len {
            return Err(Error::InvalidParameters(format!(
                "{plus} + {minus} nonzeros do not fit in length {len}"
            )));
        }
        let mut entries = vec![0i8; len];
        for (i, pos) in index::sample(rng, len, plus + minus).into_iter().enumerate() {
            entries[pos] = if i < plus { 1 } else { -1 };
        }
        Ok(TernaryVector { entries })
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
    pub fn entries(&self) -> &[i8] {
        &self.entries
    }

    pub(crate) fn entries_mut(&mut self) -> &mut [i8] {
        &mut self.entries
    }

    /// Number of nonzero entries, which is also the Lee weight.
    pub fn weight(&self) -> u64 {
        self.entries.iter().filter(|&&x| x != 0).count() as u64
    }

    pub fn sum(&self) -> i64 {
        self.entries.iter().map(|&x| x as i64).sum()
    }

    pub fn is_balanced(&self) -> bool {
        self.sum() == 0
    }

    pub fn count(&self, value: i8) -> usize {
        self.entries.iter().filter(|&&x| x == value).count()
    }

    pub fn to_zm(&self, modulus: Modulus) -> ZmVector {
        ZmVector::from_reduced(modulus, self.entries.iter().map(|&x| x as i64))
    }

    /// Reads a vector over `Z_m` whose entries are all in `{-1, 0, 1}`.
    pub fn from_zm(v: &ZmVector) -> Result<Self> {
        TernaryVector::new(v.to_i64())
    }

    pub fn mul_matrix(&self, h: &ZmMatrix) -> Result<ZmVector> {
        self.to_zm(h.modulus()).mul_matrix(h)
    }

    pub fn to_i64(&self) -> Vec<i64> {
        self.entries.iter().map(|&x| x as i64).collect()
    }
}

/// A syndrome-decoding instance `(H, s, w)` over `Z_m`.
///
/// `H` has `n` rows for the general and balanced forms and `nℓ` rows (the
/// row-repeated expansion) for the ternary form. It always has `n - k`
/// columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SdInstance {
    variant: Variant,
    modulus: Modulus,
    n: usize,
    k: usize,
    w: u64,
    h: ZmMatrix,
    s: ZmVector,
}

impl SdInstance {
    pub fn new(
        variant: Variant,
        n: usize,
        k: usize,
        w: u64,
        h: ZmMatrix,
        s: ZmVector,
    ) -> Result<Self> {
        let modulus = h.modulus();
        if s.modulus() != modulus {
            return Err(Error::ModulusMismatch(modulus.value(), s.modulus().value()));
        }
        if k > n || n == 0 {
            return Err(Error::InvalidParameters(format!(
                "need 0 <= k <= n and n >= 1 (n = {n}, k = {k})"
            )));
        }
        let ell = modulus.ell() as usize;
        let expected_rows = match variant {
            Variant::Ternary => n * ell,
            _ => n,
        };
        if h.rows() != expected_rows || h.cols() != n - k {
            return Err(Error::InvalidParameters(format!(
                "{variant} instance needs H of shape {expected_rows}x{}, got {}x{}",
                n - k,
                h.rows(),
                h.cols()
            )));
        }
        if s.len() != n - k {
            return Err(Error::DimensionMismatch {
                context: "syndrome length",
                expected: n - k,
                found: s.len(),
            });
        }
        if variant != Variant::General {
            let bound = (n * (ell - 1)) as u64;
            if w % 2 != 0 || w > bound {
                return Err(Error::InvalidParameters(format!(
                    "{variant} instance needs even w <= n(ℓ-1) = {bound}, got {w}"
                )));
            }
        }
        if variant == Variant::Ternary {
            for i in 0..n {
                for r in 1..ell {
                    if h.row(i * ell + r) != h.row(i * ell) {
                        return Err(Error::InvalidParameters(format!(
                            "ternary instance matrix is not row-expanded (block {i})"
                        )));
                    }
                }
            }
        }
        Ok(SdInstance {
            variant,
            modulus,
            n,
            k,
            w,
            h,
            s,
        })
    }

    #[inline]
    pub fn variant(&self) -> Variant {
        self.variant
    }

    #[inline]
    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn w(&self) -> u64 {
        self.w
    }

    #[inline]
    pub fn ell(&self) -> usize {
        self.modulus.ell() as usize
    }

    #[inline]
    pub fn h(&self) -> &ZmMatrix {
        &self.h
    }

    #[inline]
    pub fn s(&self) -> &ZmVector {
        &self.s
    }

    /// Length of a candidate witness for this instance.
    pub fn witness_len(&self) -> usize {
        match self.variant {
            Variant::Ternary => self.n * self.ell(),
            _ => self.n,
        }
    }

    /// Same data, different variant tag. Validation is re-run.
    pub fn with_variant(&self, variant: Variant) -> Result<SdInstance> {
        SdInstance::new(variant, self.n, self.k, self.w, self.h.clone(), self.s.clone())
    }

    /// Canonical bytes identifying the instance.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = vec![self.variant.tag()];
        out.extend_from_slice(&self.modulus.value().to_le_bytes());
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        out.extend_from_slice(&(self.k as u32).to_le_bytes());
        out.extend_from_slice(&self.w.to_le_bytes());
        self.h.encode_into(&mut out);
        self.s.encode_into(&mut out);
        out
    }
}

/// A candidate solution vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub e: ZmVector,
}

impl Witness {
    pub fn new(e: ZmVector) -> Self {
        Witness { e }
    }
}

/// Checks every condition of the instance's variant against `e`.
///
/// For the ternary form `e` has length `nℓ` and must hold entries in
/// `{-1, 0, 1}` with weight exactly `w`.
pub fn check_witness(inst: &SdInstance, e: &ZmVector) -> Result<bool> {
    if e.len() != inst.witness_len() {
        return Err(Error::DimensionMismatch {
            context: "witness length",
            expected: inst.witness_len(),
            found: e.len(),
        });
    }
    if e.modulus() != inst.modulus() {
        return Err(Error::ModulusMismatch(inst.modulus().value(), e.modulus().value()));
    }
    if e.mul_matrix(inst.h())? != *inst.s() {
        return Ok(false);
    }
    let ok = match inst.variant() {
        Variant::General => e.lee_weight() <= inst.w(),
        Variant::Balanced => e.lee_weight() <= inst.w() && e.is_balanced(),
        Variant::Ternary => match TernaryVector::from_zm(e) {
            Ok(f) => f.weight() == inst.w() && f.is_balanced(),
            Err(_) => false,
        },
    };
    Ok(ok)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decision {
    Yes(ZmVector),
    No,
    BudgetExceeded { space: Option<u64>, budget: u64 },
}

impl Decision {
    pub fn is_yes(&self) -> bool {
        matches!(self, Decision::Yes(_))
    }
}

/// Size of the exhaustive search space, `None` if it overflows `u64`.
pub fn search_space(inst: &SdInstance) -> Option<u64> {
    let (base, len) = match inst.variant() {
        Variant::Ternary => (3u64, inst.witness_len()),
        _ => (inst.modulus().m() as u64, inst.n()),
    };
    base.checked_pow(u32::try_from(len).ok()?)
}

/// Exhaustive decision oracle.
///
/// Candidates are enumerated lexicographically (first coordinate most
/// significant) with each coordinate running over the canonical
/// representatives in increasing order (`{-1, 0, 1}` for the ternary form).
/// The first candidate passing [`check_witness`] is returned. Refuses with
/// `BudgetExceeded` when the space is larger than `budget`.
pub fn decide_bruteforce(inst: &SdInstance, budget: u64) -> Result<Decision> {
    let space = search_space(inst);
    match space {
        Some(size) if size <= budget => {}
        _ => return Ok(Decision::BudgetExceeded { space, budget }),
    }
    let alphabet: Vec<i64> = match inst.variant() {
        Variant::Ternary => vec![-1, 0, 1],
        _ => inst.modulus().representatives().collect(),
    };
    let len = inst.witness_len();
    let mut digits = vec![0usize; len];
    loop {
        let candidate = ZmVector::from_reduced(
            inst.modulus(),
            digits.iter().map(|&d| alphabet[d]),
        );
        if check_witness(inst, &candidate)? {
            return Ok(Decision::Yes(candidate));
        }
        // odometer increment, last coordinate fastest
        let mut pos = len;
        loop {
            if pos == 0 {
                return Ok(Decision::No);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < alphabet.len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Samples a planted balanced instance together with its witness.
///
/// `H` is uniform. The witness is the block-wise accumulation of a uniform
/// ternary vector of length `nℓ` with exactly `w/2` entries `+1` and `w/2`
/// entries `-1`, so it is balanced with Lee weight at most `w`.
pub fn sample_instance<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    w: u64,
    modulus: Modulus,
    rng: &mut R,
) -> Result<(SdInstance, Witness)> {
    let ell = modulus.ell() as usize;
    if !(1..n).contains(&k) {
        return Err(Error::InvalidParameters(format!(
            "need 1 <= k < n (n = {n}, k = {k})"
        )));
    }
    if w % 2 != 0 || w > (n * (ell - 1)) as u64 {
        return Err(Error::InvalidParameters(format!(
            "need even w <= n(ℓ-1) = {}, got {w}",
            n * (ell - 1)
        )));
    }
    let h = ZmMatrix::random(modulus, n, n - k, rng);
    let half = (w / 2) as usize;
    let f = TernaryVector::random_with_counts(n * ell, half, half, rng)?;
    let e = reductions::accumulate(&f, modulus)?;
    let s = e.mul_matrix(&h)?;
    let inst = SdInstance::new(Variant::Balanced, n, k, w, h, s)?;
    Ok((inst, Witness::new(e)))
}

/// JSON layout of an instance file. Field names are part of the file format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub variant: Variant,
    pub m: i64,
    pub n: usize,
    pub k: usize,
    pub w: u64,
    #[serde(rename = "H")]
    pub h: Vec<i64>,
    pub s: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<Vec<i64>>,
}

impl InstanceFile {
    pub fn from_instance(inst: &SdInstance, e: Option<&ZmVector>) -> Self {
        InstanceFile {
            variant: inst.variant(),
            m: inst.modulus().m(),
            n: inst.n(),
            k: inst.k(),
            w: inst.w(),
            h: inst.h().entries().iter().map(|&x| x as i64).collect(),
            s: inst.s().to_i64(),
            e: e.map(|v| v.to_i64()),
        }
    }

    pub fn instance(&self) -> Result<SdInstance> {
        let modulus = Modulus::new(self.m)?;
        if self.k > self.n {
            return Err(Error::InvalidParameters("k > n".into()));
        }
        let rows = match self.variant {
            Variant::Ternary => self.n * modulus.ell() as usize,
            _ => self.n,
        };
        let h = ZmMatrix::new(modulus, rows, self.n - self.k, self.h.clone())?;
        let s = ZmVector::new(modulus, self.s.clone())?;
        SdInstance::new(self.variant, self.n, self.k, self.w, h, s)
    }

    pub fn witness(&self) -> Result<Option<ZmVector>> {
        let modulus = Modulus::new(self.m)?;
        self.e
            .as_ref()
            .map(|e| ZmVector::new(modulus, e.clone()))
            .transpose()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn md(x: i64) -> Modulus {
        Modulus::new(x).unwrap()
    }

    fn example_balanced(w: u64) -> (SdInstance, ZmVector) {
        let m7 = md(7);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let h = ZmMatrix::random(m7, 6, 3, &mut rng);
        let e = ZmVector::new(m7, vec![-2, 0, 1, 3, -1, -1]).unwrap();
        let s = e.mul_matrix(&h).unwrap();
        (SdInstance::new(Variant::Balanced, 6, 3, w, h, s).unwrap(), e)
    }

    #[test]
    fn check_witness_example() {
        let (inst, e) = example_balanced(8);
        assert!(check_witness(&inst, &e).unwrap());
        let (inst10, _) = example_balanced(10);
        assert!(check_witness(&inst10, &e).unwrap());
        let (inst6, _) = example_balanced(6);
        assert!(!check_witness(&inst6, &e).unwrap());
    }

    #[test]
    fn check_witness_rejects_unbalanced() {
        let m7 = md(7);
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let h = ZmMatrix::random(m7, 6, 3, &mut rng);
        let e = ZmVector::new(m7, vec![1, 0, 0, 0, 0, 0]).unwrap();
        let s = e.mul_matrix(&h).unwrap();
        let inst = SdInstance::new(Variant::Balanced, 6, 3, 8, h.clone(), s.clone()).unwrap();
        assert!(!check_witness(&inst, &e).unwrap());
        let general = SdInstance::new(Variant::General, 6, 3, 8, h, s).unwrap();
        assert!(check_witness(&general, &e).unwrap());
    }

    #[test]
    fn check_witness_ternary_needs_exact_weight() {
        let m7 = md(7);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let h = ZmMatrix::random(m7, 4, 2, &mut rng);
        let ht = reductions::expand_matrix(&h, 3);
        let w = 4;
        // w/2 + 1 ones and w/2 minus ones
        let f = TernaryVector::new(vec![1, 1, 1, -1, -1, 0, 0, 0, 0, 0, 0, 0]).unwrap();
        let s = f.mul_matrix(&ht).unwrap();
        let inst = SdInstance::new(Variant::Ternary, 4, 2, w, ht.clone(), s).unwrap();
        assert!(!check_witness(&inst, &f.to_zm(m7)).unwrap());
        let g = TernaryVector::new(vec![1, 1, 0, -1, -1, 0, 0, 0, 0, 0, 0, 0]).unwrap();
        let s = g.mul_matrix(&ht).unwrap();
        let inst = SdInstance::new(Variant::Ternary, 4, 2, w, ht, s).unwrap();
        assert!(check_witness(&inst, &g.to_zm(m7)).unwrap());
        assert!(check_witness(&inst, &ZmVector::zeros(m7, 4)).is_err());
    }

    #[test]
    fn instance_validation() {
        let m7 = md(7);
        let h = ZmMatrix::zeros(m7, 6, 3);
        let s = ZmVector::zeros(m7, 3);
        assert!(SdInstance::new(Variant::Balanced, 6, 3, 7, h.clone(), s.clone()).is_err());
        assert!(SdInstance::new(Variant::Balanced, 6, 3, 14, h.clone(), s.clone()).is_err());
        assert!(SdInstance::new(Variant::Balanced, 6, 3, 12, h.clone(), s.clone()).is_ok());
        assert!(SdInstance::new(Variant::General, 6, 3, 7, h.clone(), s.clone()).is_ok());
        assert!(SdInstance::new(Variant::Ternary, 6, 3, 12, h, s.clone()).is_err());
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let bad = ZmMatrix::random(m7, 18, 3, &mut rng);
        assert!(SdInstance::new(Variant::Ternary, 6, 3, 12, bad, s).is_err());
    }

    #[test]
    fn bruteforce_zero_witness() {
        let m5 = md(5);
        let h = ZmMatrix::new(m5, 2, 2, vec![1, 0, 1, 1]).unwrap();
        let inst =
            SdInstance::new(Variant::General, 2, 0, 0, h, ZmVector::zeros(m5, 2)).unwrap();
        assert_eq!(
            decide_bruteforce(&inst, 1000).unwrap(),
            Decision::Yes(ZmVector::zeros(m5, 2))
        );
    }

    #[test]
    fn bruteforce_refuses_over_budget() {
        let (inst, _) = example_balanced(8);
        match decide_bruteforce(&inst, 1000).unwrap() {
            Decision::BudgetExceeded { space, budget } => {
                assert_eq!(space, Some(7u64.pow(6)));
                assert_eq!(budget, 1000);
            }
            other => panic!("expected refusal, got {other:?}"),
        }
    }

    #[test]
    fn bruteforce_order_is_lexicographic() {
        // s = 0 with w large: first candidate in order is all -ℓ unless it
        // fails the syndrome; with H = 0 every vector has syndrome 0
        let m5 = md(5);
        let h = ZmMatrix::zeros(m5, 2, 1);
        let inst = SdInstance::new(Variant::General, 2, 1, 4, h, ZmVector::zeros(m5, 1)).unwrap();
        assert_eq!(
            decide_bruteforce(&inst, 100).unwrap(),
            Decision::Yes(ZmVector::new(m5, vec![-2, -2]).unwrap())
        );
    }

    /// Second enumeration, ordered from the last coordinate and from +ℓ down.
    fn reverse_enumeration_yes(inst: &SdInstance) -> bool {
        let reps: Vec<i64> = inst.modulus().representatives().rev().collect();
        let n = inst.n();
        let total = reps.len().pow(n as u32);
        (0..total).any(|mut idx| {
            let mut e = vec![0i64; n];
            for slot in e.iter_mut() {
                *slot = reps[idx % reps.len()];
                idx /= reps.len();
            }
            let e = ZmVector::new(inst.modulus(), e).unwrap();
            check_witness(inst, &e).unwrap()
        })
    }

    #[test]
    fn bruteforce_agrees_with_second_enumeration() {
        let m5 = md(5);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let mut saw_no = 0;
        let mut saw_yes = 0;
        for _ in 0..20 {
            let h = ZmMatrix::random(m5, 3, 2, &mut rng);
            for s0 in m5.representatives() {
                for s1 in m5.representatives() {
                    let s = ZmVector::new(m5, vec![s0, s1]).unwrap();
                    let inst = SdInstance::new(Variant::Balanced, 3, 1, 2, h.clone(), s).unwrap();
                    let d = decide_bruteforce(&inst, 1000).unwrap();
                    assert_eq!(d.is_yes(), reverse_enumeration_yes(&inst));
                    if d.is_yes() {
                        saw_yes += 1;
                    } else {
                        saw_no += 1;
                    }
                }
            }
        }
        assert!(saw_no > 0 && saw_yes > 0);
    }

    #[test]
    fn sampled_instances_are_planted() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        for seed in 0..50u64 {
            let mut r = ChaCha20Rng::seed_from_u64(seed);
            let (inst, wit) = sample_instance(6, 3, 10, md(7), &mut r).unwrap();
            assert!(check_witness(&inst, &wit.e).unwrap());
            assert!(wit.e.lee_weight() <= 10);
        }
        let (inst, wit) = sample_instance(6, 3, 0, md(7), &mut rng).unwrap();
        assert!(wit.e.is_zero());
        assert!(inst.s().is_zero());
        // even modulus
        let (inst, wit) = sample_instance(10, 5, 10, md(4), &mut rng).unwrap();
        assert!(check_witness(&inst, &wit.e).unwrap());
    }

    #[test]
    fn sample_instance_rejects_bad_parameters() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        assert!(sample_instance(6, 3, 9, md(7), &mut rng).is_err());
        assert!(sample_instance(6, 3, 14, md(7), &mut rng).is_err());
        assert!(sample_instance(6, 6, 4, md(7), &mut rng).is_err());
        assert!(sample_instance(6, 0, 4, md(7), &mut rng).is_err());
    }

    #[test]
    fn planted_tiny_instances_are_found() {
        for seed in 0..30u64 {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let (inst, _) = sample_instance(3, 1, 2, md(5), &mut rng).unwrap();
            assert!(decide_bruteforce(&inst, 1000).unwrap().is_yes());
        }
    }

    /// Independent replay of the sampling definition: pick w/2 + w/2 distinct
    /// positions by rejection, then sum blocks.
    fn replay_weight(n: usize, ell: usize, w: usize, rng: &mut ChaCha20Rng) -> u64 {
        let mut f = vec![0i64; n * ell];
        let mut placed = 0;
        while placed < w {
            let pos = rng.random_range(0..n * ell);
            if f[pos] == 0 {
                f[pos] = if placed < w / 2 { 1 } else { -1 };
                placed += 1;
            }
        }
        f.chunks(ell).map(|b| b.iter().sum::<i64>().unsigned_abs()).sum()
    }

    #[test]
    fn witness_weight_distribution_matches_replay() {
        let (n, k, w, m7) = (8, 4, 6u64, md(7));
        let samples = 1000;
        let mut hist_impl = [0usize; 7];
        let mut hist_replay = [0usize; 7];
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let mut rng2 = ChaCha20Rng::seed_from_u64(9);
        for _ in 0..samples {
            let (_, wit) = sample_instance(n, k, w, m7, &mut rng).unwrap();
            hist_impl[wit.e.lee_weight() as usize] += 1;
            hist_replay[replay_weight(n, 3, w as usize, &mut rng2) as usize] += 1;
        }
        // odd weights are impossible for balanced vectors
        assert_eq!(hist_impl[1] + hist_impl[3] + hist_impl[5], 0);
        for wt in [0, 2, 4, 6] {
            let a = hist_impl[wt] as f64 / samples as f64;
            let b = hist_replay[wt] as f64 / samples as f64;
            let sd = ((a * (1.0 - a) + b * (1.0 - b)) / samples as f64).sqrt().max(1e-3);
            assert!((a - b).abs() <= 4.0 * sd, "weight {wt}: {a} vs {b}");
        }
    }

    #[test]
    fn json_round_trip() {
        let (inst, e) = example_balanced(8);
        let file = InstanceFile::from_instance(&inst, Some(&e));
        let text = file.to_json().unwrap();
        assert!(text.contains("\"H\""));
        assert!(text.contains("\"variant\": \"balanced\""));
        let back = InstanceFile::from_json(&text).unwrap();
        assert_eq!(back.instance().unwrap(), inst);
        assert_eq!(back.witness().unwrap().unwrap(), e);
    }
}
