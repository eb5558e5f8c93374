use crate::error::Result;
use crate::problems::{check_witness, SdInstance};
use crate::protocol::{verifier_check, Challenge, CommitMessage, ProverRoundState, Response};
use crate::reductions::accumulate;
use crate::ring::ZmVector;

/// Outcome of rewinding one commitment over all three challenges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Extraction {
    /// All three answers accepted and the accumulated `f` is a witness.
    Witness(ZmVector),
    /// At least one answer was rejected, so nothing can be extracted.
    NotAllAccepted(Vec<Challenge>),
    /// All answers accepted but the openings are inconsistent or do not
    /// yield a witness. This can only happen if a commitment was opened to
    /// two different values, and is a critical failure.
    BindingBreak(String),
}

/// Recovers a witness from accepted answers to `A`, `B` and `C` on one
/// commitment message: `f = π⁻¹(f_π)` and `e = accumulate(f)`.
pub fn extract_from_responses(
    inst: &SdInstance,
    cm: &CommitMessage,
    responses: &[Response; 3],
) -> Result<Extraction> {
    let rejected: Vec<Challenge> = Challenge::ALL
        .into_iter()
        .zip(responses)
        .filter(|(ch, r)| !verifier_check(inst, cm, *ch, r).is_accept())
        .map(|(ch, _)| ch)
        .collect();
    if !rejected.is_empty() {
        return Ok(Extraction::NotAllAccepted(rejected));
    }
    let (Response::A { pi, .. }, Some(f_b), Some(f_c)) =
        (&responses[0], responses[1].f_pi(), responses[2].f_pi())
    else {
        return Ok(Extraction::NotAllAccepted(vec![Challenge::A]));
    };
    if f_b != f_c {
        return Ok(Extraction::BindingBreak("f_pi opened to two values".into()));
    }
    let f = pi.value.unpermute_ternary(f_b)?;
    let e = accumulate(&f, inst.modulus())?;
    if check_witness(inst, &e)? {
        Ok(Extraction::Witness(e))
    } else {
        Ok(Extraction::BindingBreak(
            "accepted openings accumulate to a non-witness".into(),
        ))
    }
}

/// Rewinds `state` through the test-only hook and extracts.
pub fn extract_from_state(inst: &SdInstance, state: &ProverRoundState) -> Result<Extraction> {
    extract_from_responses(inst, state.commit_message(), &state.rewind_responses())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{cheating_prover_round, CheatStrategy};
    use crate::problems::sample_instance;
    use crate::protocol::prover_commit;
    use crate::ring::Modulus;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn honest_states_yield_the_witness() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for m in [4, 5, 7, 8] {
            let (inst, wit) = sample_instance(10, 5, 8, Modulus::new(m).unwrap(), &mut rng).unwrap();
            for _ in 0..20 {
                let (state, _) = prover_commit(&inst, &wit, &mut rng).unwrap();
                match extract_from_state(&inst, &state).unwrap() {
                    Extraction::Witness(e) => assert!(check_witness(&inst, &e).unwrap()),
                    other => panic!("m = {m}: {other:?}"),
                }
            }
        }
    }

    #[test]
    fn cheaters_never_answer_all_three() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let (inst, _) = sample_instance(20, 10, 16, Modulus::new(7).unwrap(), &mut rng).unwrap();
        for strat in CheatStrategy::ALL {
            let (_, state) = cheating_prover_round(&inst, strat, &mut rng).unwrap();
            assert_eq!(
                extract_from_state(&inst, &state).unwrap(),
                Extraction::NotAllAccepted(vec![strat.uncovered()])
            );
        }
    }
}
