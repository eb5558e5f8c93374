use rand::{CryptoRng, Rng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::commitments::Permutation;
use crate::error::{Error, Result};
use crate::problems::{check_witness, SdInstance, TernaryVector, Variant, Witness};
use crate::protocol::{Challenge, CommitMessage, ProverRoundState, RoundObjects, RoundProver};
use crate::reductions::{accumulate, expand_matrix, ternary_witness};
use crate::ring::{Modulus, ZmMatrix};

/// A witness-free prover prepared to answer two of the three challenges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CheatStrategy {
    /// Honest `R, T, π`; `f_π` unrelated to `s` through `T̃π`.
    CoverAB,
    /// Honest `R, T, π`; `f_π` unrelated to `s` through `R̃π`.
    CoverAC,
    /// Fake balanced `f_π` with consistent `a, b`; `T̃π` is not a proper
    /// expansion of `T`.
    CoverBC,
}

impl CheatStrategy {
    pub const ALL: [CheatStrategy; 3] =
        [CheatStrategy::CoverAB, CheatStrategy::CoverAC, CheatStrategy::CoverBC];

    pub fn covered(self) -> [Challenge; 2] {
        match self {
            CheatStrategy::CoverAB => [Challenge::A, Challenge::B],
            CheatStrategy::CoverAC => [Challenge::A, Challenge::C],
            CheatStrategy::CoverBC => [Challenge::B, Challenge::C],
        }
    }

    pub fn uncovered(self) -> Challenge {
        match self {
            CheatStrategy::CoverAB => Challenge::C,
            CheatStrategy::CoverAC => Challenge::B,
            CheatStrategy::CoverBC => Challenge::A,
        }
    }
}

/// Commits like a prover without a witness following `strat`. The returned
/// state answers any challenge with its committed openings.
pub fn cheating_prover_round<R: Rng + CryptoRng + ?Sized>(
    inst: &SdInstance,
    strat: CheatStrategy,
    rng: &mut R,
) -> Result<(CommitMessage, ProverRoundState)> {
    if inst.variant() != Variant::Balanced {
        return Err(Error::Precondition("cheating prover needs a balanced instance".into()));
    }
    let modulus = inst.modulus();
    let (n, cols, ell) = (inst.n(), inst.n() - inst.k(), inst.ell());
    let big_n = n * ell;
    let half = (inst.w() / 2) as usize;

    let r = ZmMatrix::random(modulus, n, cols, rng);
    let t = inst.h().sub(&r)?;
    let pi = Permutation::random(big_n, rng);
    let g = TernaryVector::random_with_counts(big_n, half, half, rng)?;
    let r_pi = pi.permute_rows(&expand_matrix(&r, ell))?;
    let mut t_pi = pi.permute_rows(&expand_matrix(&t, ell))?;

    let (a, b) = match strat {
        CheatStrategy::CoverAB => {
            let a = g.mul_matrix(&r_pi)?;
            let b = inst.s().sub(&a)?;
            (a, b)
        }
        CheatStrategy::CoverAC => {
            let b = g.mul_matrix(&t_pi)?;
            let a = inst.s().sub(&b)?;
            (a, b)
        }
        CheatStrategy::CoverBC => {
            let a = g.mul_matrix(&r_pi)?;
            let b = inst.s().sub(&a)?;
            // shift one row of T̃π hit by a nonzero of g so that g·T̃π = b
            let delta = b.sub(&g.mul_matrix(&t_pi)?)?;
            let j = g
                .entries()
                .iter()
                .position(|&x| x != 0)
                .ok_or_else(|| Error::Precondition("weight 0 leaves nothing to cheat with".into()))?;
            let sign = g.entries()[j] as i64;
            t_pi = ZmMatrix::from_fn(modulus, big_n, cols, |i, c| {
                let x = t_pi.get(i, c) as i64;
                if i == j {
                    x + sign * delta.entries()[c] as i64
                } else {
                    x
                }
            });
            (a, b)
        }
    };
    let objects = RoundObjects {
        r,
        t,
        a,
        b,
        pi,
        r_pi,
        t_pi,
        f_pi: g,
    };
    let state = ProverRoundState::from_objects(objects, rng);
    Ok((state.commit_message().clone(), state))
}

/// [`RoundProver`] wrapper around [`cheating_prover_round`].
pub struct CheatingProver<'a> {
    pub instance: &'a SdInstance,
    pub strategy: CheatStrategy,
}

impl RoundProver for CheatingProver<'_> {
    fn commit(&mut self, rng: &mut ChaCha20Rng) -> Result<ProverRoundState> {
        Ok(cheating_prover_round(self.instance, self.strategy, rng)?.1)
    }
}

/// An honest round that skips the permutation (`π` = identity). Used as the
/// negative control of the transcript test: it reveals `f` in place.
pub fn broken_identity_round<R: Rng + CryptoRng + ?Sized>(
    inst: &SdInstance,
    witness: &Witness,
    rng: &mut R,
) -> Result<ProverRoundState> {
    let f = ternary_witness(&witness.e, inst.w())?;
    let r = ZmMatrix::random(inst.modulus(), inst.n(), inst.n() - inst.k(), rng);
    let objects = RoundObjects::honest(inst, &f, r, Permutation::identity(f.len()))?;
    Ok(ProverRoundState::from_objects(objects, rng))
}

/// A balanced instance with two distinct witnesses of the same shape.
///
/// Both witnesses accumulate a ternary vector with `w/2` entries of each
/// sign. `H` is uniform except for one row, which is solved for so that
/// `(e₁ - e₂)·H = 0`.
pub fn two_witness_instance<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    w: u64,
    modulus: Modulus,
    rng: &mut R,
) -> Result<(SdInstance, Witness, Witness)> {
    let ell = modulus.ell() as usize;
    let half = (w / 2) as usize;
    for _ in 0..1000 {
        let e1 = accumulate(&TernaryVector::random_with_counts(n * ell, half, half, rng)?, modulus)?;
        let e2 = accumulate(&TernaryVector::random_with_counts(n * ell, half, half, rng)?, modulus)?;
        let d = e1.sub(&e2)?;
        let Some((j, inv)) = d
            .entries()
            .iter()
            .enumerate()
            .find_map(|(j, &x)| modulus.inverse(x as i64).ok().map(|inv| (j, inv)))
        else {
            continue;
        };
        let base = ZmMatrix::random(modulus, n, n - k, rng);
        // row j = -d_j⁻¹ Σ_{i≠j} d_i·H_i
        let h = ZmMatrix::from_fn(modulus, n, n - k, |i, c| {
            if i != j {
                return base.get(i, c) as i64;
            }
            let acc: i64 = (0..n)
                .filter(|&i| i != j)
                .map(|i| d.entries()[i] as i64 * base.get(i, c) as i64)
                .sum();
            -inv * acc
        });
        let s = e1.mul_matrix(&h)?;
        let inst = SdInstance::new(Variant::Balanced, n, k, w, h, s)?;
        if check_witness(&inst, &e1)? && check_witness(&inst, &e2)? {
            return Ok((inst, Witness::new(e1), Witness::new(e2)));
        }
    }
    Err(Error::InvalidParameters(
        "could not sample two witnesses with a unit difference".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::sample_instance;
    use crate::protocol::{verifier_check, CheckId};
    use rand::SeedableRng;

    #[test]
    fn each_strategy_fails_exactly_its_uncovered_tag() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let (inst, _) = sample_instance(20, 10, 16, Modulus::new(7).unwrap(), &mut rng).unwrap();
        for strat in CheatStrategy::ALL {
            for _ in 0..50 {
                let (cm, state) = cheating_prover_round(&inst, strat, &mut rng).unwrap();
                for (ch, resp) in Challenge::ALL.into_iter().zip(state.rewind_responses()) {
                    let v = verifier_check(&inst, &cm, ch, &resp);
                    assert_eq!(v.is_accept(), ch != strat.uncovered(), "{strat:?} {ch}: {v}");
                }
            }
        }
    }

    #[test]
    fn cover_bc_fails_a2_only() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let (inst, _) = sample_instance(12, 6, 10, Modulus::new(5).unwrap(), &mut rng).unwrap();
        let (cm, mut state) = cheating_prover_round(&inst, CheatStrategy::CoverBC, &mut rng).unwrap();
        let resp = state.respond(Challenge::A).unwrap();
        assert_eq!(verifier_check(&inst, &cm, Challenge::A, &resp).failed_checks(), vec![CheckId::A2]);
    }

    #[test]
    fn two_witnesses_are_distinct_and_valid() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for m in [5, 7, 9] {
            let (inst, e1, e2) =
                two_witness_instance(20, 10, 16, Modulus::new(m).unwrap(), &mut rng).unwrap();
            assert_ne!(e1, e2);
            assert!(check_witness(&inst, &e1.e).unwrap());
            assert!(check_witness(&inst, &e2.e).unwrap());
        }
    }

    #[test]
    fn identity_round_still_verifies() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let (inst, wit) = sample_instance(10, 5, 8, Modulus::new(7).unwrap(), &mut rng).unwrap();
        let state = broken_identity_round(&inst, &wit, &mut rng).unwrap();
        let cm = state.commit_message().clone();
        for (ch, resp) in Challenge::ALL.into_iter().zip(state.rewind_responses()) {
            assert!(verifier_check(&inst, &cm, ch, &resp).is_accept());
        }
        assert_eq!(state.objects().pi, Permutation::identity(30));
    }
}
