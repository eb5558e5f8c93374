use serde::Serialize;

use crate::error::{Error, Result};
use crate::problems::{check_witness, SdInstance, Variant};
use crate::reductions::{lift_witness, to_balanced, BalancedReduction};
use crate::ring::{Modulus, ZmVector};

/// Exact answers for a general instance and its balanced image.
#[derive(Clone, Debug, Serialize)]
pub struct ProbeOutcome {
    pub source_yes: bool,
    pub target_yes: bool,
    /// Number of syndrome solutions of the source, of any weight.
    pub source_solutions: usize,
    /// Smallest Lee weight of any balanced solution of the target.
    pub min_target_weight: Option<u64>,
    pub target_weight_bound: u64,
    /// A verified target witness of weight `min_target_weight`.
    pub target_witness: Option<Vec<i64>>,
}

impl ProbeOutcome {
    /// The target has a witness although the source has none.
    pub fn is_counterexample(&self) -> bool {
        self.target_yes && !self.source_yes
    }

    /// The source has a witness but the target has none.
    pub fn forward_violated(&self) -> bool {
        self.source_yes && !self.target_yes
    }
}

/// Integer values an entry may contribute to a balance sum. For even `m`
/// the class `ℓ` may be read as `-ℓ`.
fn contributions(v: i64, modulus: Modulus) -> &'static [i64] {
    if modulus.is_even() && v == modulus.ell() {
        &[1, -1]
    } else {
        &[1]
    }
}

/// Minimum-weight balanced `g = (g_l | g_r)` with `g_l - (c-1)·g_r = c·x`.
///
/// Every target solution has this form for some `x = (e | 0)` with
/// `e·H = s`, and `g_r` is free, so a dynamic program over coordinates with
/// the running sum as state finds the exact minimum.
fn min_balanced_lift(x: &[i64], c: i64, modulus: Modulus) -> Option<(u64, ZmVector)> {
    let ell = modulus.ell();
    let reps: Vec<i64> = modulus.representatives().collect();
    let offset = 2 * ell * x.len() as i64;
    let width = (2 * offset + 1) as usize;
    // layers[j][sum + offset] = (cost, previous index, l, r)
    let mut layers: Vec<Vec<Option<(u64, usize, i64, i64)>>> = Vec::with_capacity(x.len() + 1);
    let mut first = vec![None; width];
    first[offset as usize] = Some((0, 0, 0, 0));
    layers.push(first);
    for &xj in x {
        let prev = layers.last().expect("nonempty");
        let mut next: Vec<Option<(u64, usize, i64, i64)>> = vec![None; width];
        for (idx, cell) in prev.iter().enumerate() {
            let Some((cost, ..)) = *cell else { continue };
            for &r in &reps {
                let l = modulus.reduce(c * xj + (c - 1) * r) as i64;
                let step = (l.unsigned_abs() + r.unsigned_abs()) as u64;
                for &sl in contributions(l, modulus) {
                    for &sr in contributions(r, modulus) {
                        let to = (idx as i64 + sl * l + sr * r) as usize;
                        if next[to].is_none_or(|(c0, ..)| cost + step < c0) {
                            next[to] = Some((cost + step, idx, l, r));
                        }
                    }
                }
            }
        }
        layers.push(next);
    }
    let (best, ..) = layers.last()?[offset as usize]?;
    let n = x.len();
    let (mut left, mut right) = (vec![0i64; n], vec![0i64; n]);
    let mut idx = offset as usize;
    for j in (0..n).rev() {
        let (_, prev, l, r) = layers[j + 1][idx].expect("backtrack");
        left[j] = l;
        right[j] = r;
        idx = prev;
    }
    left.extend(right);
    Some((best, ZmVector::from_reduced(modulus, left)))
}

/// Decides a general instance and its balanced reduction exactly.
///
/// The source is enumerated (at most `budget` candidates); for each
/// syndrome solution the cheapest balanced target preimage is found by
/// [`min_balanced_lift`]. Any target witness found is re-verified.
pub fn probe_balanced_reduction(
    inst: &SdInstance,
    c: Option<i64>,
    budget: u64,
) -> Result<ProbeOutcome> {
    if inst.variant() != Variant::General {
        return Err(Error::Precondition("probe expects a general instance".into()));
    }
    let red: BalancedReduction = to_balanced(inst, c)?;
    let modulus = inst.modulus();
    let n = inst.n();
    let m = modulus.m() as u64;
    let space = u32::try_from(n).ok().and_then(|n| m.checked_pow(n));
    if space.is_none_or(|s| s > budget) {
        return Err(Error::InvalidParameters(format!(
            "source space {m}^{n} exceeds budget {budget}"
        )));
    }
    let reps: Vec<i64> = modulus.representatives().collect();
    let mut digits = vec![0usize; n];
    let mut source_yes = false;
    let mut source_solutions = 0;
    let mut best: Option<(u64, ZmVector)> = None;
    let pad = red.n_bar() - n;
    loop {
        let e = ZmVector::from_reduced(modulus, digits.iter().map(|&d| reps[d]));
        if e.mul_matrix(inst.h())? == *inst.s() {
            source_solutions += 1;
            if e.lee_weight() <= inst.w() {
                source_yes = true;
                // forward direction: the lift must be a target witness
                let lifted = lift_witness(&red, &e)?;
                debug_assert!(check_witness(red.target(), &lifted)?);
            }
            let mut x = e.to_i64();
            x.extend(std::iter::repeat_n(0, pad));
            if let Some((wt, g)) = min_balanced_lift(&x, red.c(), modulus) {
                if best.as_ref().is_none_or(|(b, _)| wt < *b) {
                    best = Some((wt, g));
                }
            }
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < reps.len() {
                break;
            }
            digits[pos] = 0;
        }
        if digits.iter().all(|&d| d == 0) {
            break;
        }
    }
    let bound = red.target().w();
    let target_yes = best.as_ref().is_some_and(|(wt, _)| *wt <= bound);
    if let Some((_, g)) = &best {
        let weight_ok = check_witness(red.target(), g)?;
        if weight_ok != target_yes {
            return Err(Error::Protocol(
                "probe constructed a target vector that does not verify".into(),
            ));
        }
    }
    Ok(ProbeOutcome {
        source_yes,
        target_yes,
        source_solutions,
        min_target_weight: best.as_ref().map(|b| b.0),
        target_weight_bound: bound,
        target_witness: best.filter(|_| target_yes).map(|b| b.1.to_i64()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{decide_bruteforce, Decision};
    use crate::ring::ZmMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn general(m: i64, n: usize, k: usize, w: u64, rng: &mut ChaCha20Rng) -> SdInstance {
        let modulus = Modulus::new(m).unwrap();
        let h = ZmMatrix::random(modulus, n, n - k, rng);
        let s = ZmVector::random(modulus, n - k, rng);
        SdInstance::new(Variant::General, n, k, w, h, s).unwrap()
    }

    #[test]
    fn probe_agrees_with_exhaustive_target_search() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for (m, c, w) in [(5, None, 1), (5, None, 2), (4, Some(3), 1), (5, None, 0)] {
            let inst = general(m, 2, 1, w, &mut rng);
            let probe = probe_balanced_reduction(&inst, c, 1 << 20).unwrap();
            let red = to_balanced(&inst, c).unwrap();
            let exhaustive = decide_bruteforce(red.target(), 1 << 20).unwrap();
            assert!(!matches!(exhaustive, Decision::BudgetExceeded { .. }));
            assert_eq!(probe.target_yes, exhaustive.is_yes(), "m={m} w={w} {probe:?}");
            let source = decide_bruteforce(&inst, 1 << 20).unwrap();
            assert_eq!(probe.source_yes, source.is_yes());
        }
    }

    #[test]
    fn min_lift_of_zero_is_zero() {
        let m5 = Modulus::new(5).unwrap();
        let (wt, g) = min_balanced_lift(&[0, 0, 0], 2, m5).unwrap();
        assert_eq!(wt, 0);
        assert!(g.is_zero());
    }

    #[test]
    fn known_counterexample_shape() {
        // e = (2, -2) has weight 4 but 2e = (-1, 1) lifts with g_r = 0 at weight 2
        let m5 = Modulus::new(5).unwrap();
        let (wt, g) = min_balanced_lift(&[2, -2, 0, 0], 2, m5).unwrap();
        assert!(wt <= 2, "{wt} {g}");
    }

    #[test]
    fn refuses_large_spaces() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let inst = general(7, 12, 6, 3, &mut rng);
        assert!(probe_balanced_reduction(&inst, None, 1000).is_err());
    }
}
