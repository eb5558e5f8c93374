use rand::{CryptoRng, Rng};

use crate::commitments::Permutation;
use crate::error::{Error, Result};
use crate::problems::{SdInstance, TernaryVector, Variant, Witness};
use crate::protocol::{prover_commit, Challenge, CommitMessage, ProverRoundState, Response, RoundObjects};
use crate::reductions::expand_matrix;
use crate::ring::{ZmMatrix, ZmVector};

/// What a verifier sees in one round: the commitments, its challenge and
/// the prover's openings.
#[derive(Clone, Debug)]
pub struct View {
    pub challenge: Challenge,
    pub commit: CommitMessage,
    pub response: Response,
}

pub type SimulatedView = View;

fn round_view(state: ProverRoundState, ch: Challenge) -> Result<View> {
    let mut state = state;
    let commit = state.commit_message().clone();
    let response = state.respond(ch)?;
    Ok(View {
        challenge: ch,
        commit,
        response,
    })
}

/// Honest view under a fixed challenge.
pub fn real_view<R: Rng + CryptoRng + ?Sized>(
    inst: &SdInstance,
    witness: &Witness,
    ch: Challenge,
    rng: &mut R,
) -> Result<View> {
    let (state, _) = prover_commit(inst, witness, rng)?;
    round_view(state, ch)
}

/// Witness-free view for challenge `ch`.
///
/// The opened objects follow the real distribution; slots that stay closed
/// hold commitments to fresh dummies and are covered only by hiding.
pub fn simulate_view<R: Rng + CryptoRng + ?Sized>(
    inst: &SdInstance,
    ch: Challenge,
    rng: &mut R,
) -> Result<SimulatedView> {
    if inst.variant() != Variant::Balanced {
        return Err(Error::Precondition("simulator needs a balanced instance".into()));
    }
    let modulus = inst.modulus();
    let (n, cols, ell) = (inst.n(), inst.n() - inst.k(), inst.ell());
    let big_n = n * ell;
    let half = (inst.w() / 2) as usize;
    let random_g = |rng: &mut R| TernaryVector::random_with_counts(big_n, half, half, rng);

    let objects = match ch {
        Challenge::A => {
            let r = ZmMatrix::random(modulus, n, cols, rng);
            let t = inst.h().sub(&r)?;
            let pi = Permutation::random(big_n, rng);
            RoundObjects {
                r_pi: pi.permute_rows(&expand_matrix(&r, ell))?,
                t_pi: pi.permute_rows(&expand_matrix(&t, ell))?,
                a: ZmVector::random(modulus, cols, rng),
                b: ZmVector::random(modulus, cols, rng),
                f_pi: random_g(rng)?,
                r,
                t,
                pi,
            }
        }
        Challenge::B | Challenge::C => {
            let mask = ZmMatrix::random(modulus, n, cols, rng);
            let pi = Permutation::random(big_n, rng);
            let mask_pi = pi.permute_rows(&expand_matrix(&mask, ell))?;
            let g = random_g(rng)?;
            let part = g.mul_matrix(&mask_pi)?;
            let rest = inst.s().sub(&part)?;
            let other = ZmMatrix::random(modulus, n, cols, rng);
            let other_pi = ZmMatrix::random(modulus, big_n, cols, rng);
            if ch == Challenge::B {
                RoundObjects {
                    r: mask,
                    t: other,
                    a: part,
                    b: rest,
                    pi,
                    r_pi: mask_pi,
                    t_pi: other_pi,
                    f_pi: g,
                }
            } else {
                RoundObjects {
                    r: other,
                    t: mask,
                    a: rest,
                    b: part,
                    pi,
                    r_pi: other_pi,
                    t_pi: mask_pi,
                    f_pi: g,
                }
            }
        }
    };
    round_view(ProverRoundState::from_objects(objects, rng), ch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::sample_instance;
    use crate::protocol::verifier_check;
    use crate::ring::Modulus;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn simulated_views_accept() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for m in [5, 7, 8] {
            let (inst, _) = sample_instance(10, 5, 8, Modulus::new(m).unwrap(), &mut rng).unwrap();
            for _ in 0..100 {
                for ch in Challenge::ALL {
                    let v = simulate_view(&inst, ch, &mut rng).unwrap();
                    assert!(verifier_check(&inst, &v.commit, ch, &v.response).is_accept());
                    if let Some(g) = v.response.f_pi() {
                        assert_eq!(g.count(1), 4);
                        assert_eq!(g.count(-1), 4);
                    }
                    if let Response::A { r, t, .. } = &v.response {
                        assert_eq!(r.value.add(&t.value).unwrap(), *inst.h());
                    }
                }
            }
        }
    }

    #[test]
    fn real_views_accept() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let (inst, wit) = sample_instance(10, 5, 8, Modulus::new(7).unwrap(), &mut rng).unwrap();
        for ch in Challenge::ALL {
            let v = real_view(&inst, &wit, ch, &mut rng).unwrap();
            assert_eq!(v.challenge, ch);
            assert!(verifier_check(&inst, &v.commit, ch, &v.response).is_accept());
        }
    }
}
