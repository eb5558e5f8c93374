use std::fs;
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::json;

use lee_zk::analysis::{derive_rng, real_view, simulate_view, transcript_distribution_test, View};
use lee_zk::net::{
    instance_hash, local_session, replay_transcript, serve, session_rngs, verifier_session,
    Channel, SessionOutcome, TranscriptSummary, DEFAULT_MAX_FRAME,
};
use lee_zk::problems::{decide_bruteforce, sample_instance, Decision, InstanceFile};
use lee_zk::protocol::{comm_cost_bits, run_session, verifier_check};
use lee_zk::reductions::{lift_witness, ternary_witness, to_balanced, to_ternary};
use lee_zk::{Challenge, Error, Modulus, SdInstance, Variant, Witness};

#[derive(Parser)]
#[command(name = "lee-zk", version, about = "Lee-metric syndrome decoding identification protocol")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Balanced,
    Ternary,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChallengeArg {
    A,
    B,
    C,
}

impl From<ChallengeArg> for Challenge {
    fn from(c: ChallengeArg) -> Challenge {
        match c {
            ChallengeArg::A => Challenge::A,
            ChallengeArg::B => Challenge::B,
            ChallengeArg::C => Challenge::C,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample a planted balanced instance.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: i64,
        #[arg(long)]
        w: u64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Instance file that also carries the witness `e`.
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
    /// Reduce general to balanced, or balanced to ternary.
    Reduce {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Multiplier for the balanced reduction (needed for even m).
        #[arg(long, allow_hyphen_values = true)]
        c: Option<i64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive decision oracle.
    Oracle {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 10_000_000)]
        budget: u64,
    },
    /// Run the prover, over TCP or locally into a transcript file.
    Prove {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        witness: PathBuf,
        #[arg(long, default_value_t = 16)]
        rounds: u32,
        #[arg(long, conflicts_with = "transcript_out", required_unless_present = "transcript_out")]
        listen: Option<String>,
        #[arg(long)]
        transcript_out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Stop listening after this many sessions.
        #[arg(long)]
        max_sessions: Option<usize>,
    },
    /// Run the verifier against a prover, or replay a transcript.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 16)]
        rounds: u32,
        #[arg(long, conflicts_with = "transcript_in", required_unless_present = "transcript_in")]
        connect: Option<String>,
        #[arg(long)]
        transcript_in: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Zero-knowledge simulator statistics.
    Simulate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        challenge: ChallengeArg,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Also compare against real views from this witness file.
        #[arg(long)]
        witness: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Communication cost formula and, optionally, measured sizes.
    Bench {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        measure: bool,
        #[arg(long)]
        w: Option<u64>,
        #[arg(long, default_value_t = 4)]
        rounds: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Exit status categories.
enum Failure {
    Reject(String),
    Usage(String),
    Protocol(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Protocol(_) | Error::Io(_) | Error::StateConsumed => Failure::Protocol(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type CliResult = std::result::Result<(), Failure>;

fn read_file(path: &Path) -> std::result::Result<InstanceFile, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    InstanceFile::from_json(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_witness(inst: &SdInstance, path: &Path) -> std::result::Result<Witness, Failure> {
    let file = read_file(path)?;
    if file.instance()? != *inst {
        return Err(Failure::Usage("witness file belongs to a different instance".into()));
    }
    let e = file
        .witness()?
        .ok_or_else(|| Failure::Usage(format!("{} has no field e", path.display())))?;
    Ok(Witness::new(e))
}

fn write_out(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn seed_or_random(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| rand::rng().random())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn report_outcome(outcome: &SessionOutcome) -> CliResult {
    let challenges: String = outcome.rounds.iter().map(|r| r.challenge.to_string()).collect();
    if outcome.accepted {
        println!("accept: {} rounds ({challenges})", outcome.rounds.len());
        Ok(())
    } else {
        let reason = outcome.reason.clone().unwrap_or_else(|| outcome.verdict().to_string());
        Err(Failure::Reject(format!(
            "round {} ({}): {reason}",
            outcome.rounds.len(),
            challenges.chars().last().unwrap_or('?')
        )))
    }
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Gen {
            n,
            k,
            m,
            w,
            seed,
            out,
            witness_out,
        } => {
            let modulus = Modulus::new(m)?;
            let mut rng = ChaCha20Rng::seed_from_u64(seed_or_random(seed));
            let (inst, wit) = sample_instance(n, k, w, modulus, &mut rng)?;
            write_out(Some(&out), &InstanceFile::from_instance(&inst, None).to_json()?)?;
            if let Some(p) = witness_out {
                write_out(Some(&p), &InstanceFile::from_instance(&inst, Some(&wit.e)).to_json()?)?;
            }
            eprintln!("instance {}", hex(&instance_hash(&inst)));
            Ok(())
        }
        Command::Reduce {
            input,
            mode,
            c,
            out,
        } => {
            let file = read_file(&input)?;
            let inst = file.instance()?;
            let e = file.witness()?;
            let result = match mode {
                Mode::Balanced => {
                    let red = to_balanced(&inst, c)?;
                    let lifted = match &e {
                        Some(e) => Some(lift_witness(&red, e)?),
                        None => None,
                    };
                    InstanceFile::from_instance(red.target(), lifted.as_ref())
                }
                Mode::Ternary => {
                    if c.is_some() {
                        return Err(Failure::Usage("--c only applies to --mode balanced".into()));
                    }
                    let target = to_ternary(&inst)?;
                    let f = match &e {
                        Some(e) => Some(ternary_witness(e, inst.w())?.to_zm(inst.modulus())),
                        None => None,
                    };
                    InstanceFile::from_instance(&target, f.as_ref())
                }
            };
            write_out(out.as_deref(), &result.to_json()?)
        }
        Command::Oracle { input, budget } => {
            let inst = read_file(&input)?.instance()?;
            let report = match decide_bruteforce(&inst, budget)? {
                Decision::Yes(e) => json!({"decision": "yes", "e": e.to_i64()}),
                Decision::No => json!({"decision": "no"}),
                Decision::BudgetExceeded { space, budget } => {
                    json!({"decision": "budget_exceeded", "space": space, "budget": budget})
                }
            };
            println!("{report}");
            Ok(())
        }
        Command::Prove {
            instance,
            witness,
            rounds,
            listen,
            transcript_out,
            seed,
            max_sessions,
        } => {
            let inst = read_file(&instance)?.instance()?;
            let wit = load_witness(&inst, &witness)?;
            let seed = seed_or_random(seed);
            if let Some(path) = transcript_out {
                let (outcome, transcript) = local_session(&inst, &wit, rounds, seed)?;
                fs::write(&path, &transcript)
                    .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
                let summary = TranscriptSummary::new(&inst, &outcome, transcript.len());
                let mut sidecar = path.clone().into_os_string();
                sidecar.push(".json");
                fs::write(
                    &sidecar,
                    serde_json::to_string_pretty(&summary).map_err(Error::from)?,
                )
                .map_err(|e| Failure::Usage(e.to_string()))?;
                return report_outcome(&outcome);
            }
            let addr = listen.expect("clap enforces --listen or --transcript-out");
            let listener = TcpListener::bind(&addr).map_err(|e| Failure::Usage(format!("{addr}: {e}")))?;
            eprintln!("listening on {}", listener.local_addr().map_err(Error::from)?);
            let results = serve(listener, Arc::new(inst), Arc::new(wit), rounds, seed, max_sessions)?;
            let mut status = Ok(());
            for (i, r) in results.into_iter().enumerate() {
                match r {
                    Ok(o) if o.accepted => eprintln!("session {i}: accept"),
                    Ok(o) => {
                        let why = o.reason.unwrap_or_default();
                        eprintln!("session {i}: reject: {why}");
                        status = Err(Failure::Reject(why));
                    }
                    Err(e) => {
                        eprintln!("session {i}: {e}");
                        status = Err(Failure::Protocol(e.to_string()));
                    }
                }
            }
            status
        }
        Command::Verify {
            instance,
            rounds,
            connect,
            transcript_in,
            seed,
        } => {
            let inst = read_file(&instance)?.instance()?;
            if let Some(path) = transcript_in {
                let bytes = fs::read(&path)
                    .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
                let outcome = replay_transcript(&inst, &bytes, DEFAULT_MAX_FRAME)?;
                if outcome.rounds_requested != rounds {
                    eprintln!(
                        "note: transcript has {} rounds, --rounds says {rounds}",
                        outcome.rounds_requested
                    );
                }
                return report_outcome(&outcome);
            }
            let addr = connect.expect("clap enforces --connect or --transcript-in");
            let stream = TcpStream::connect(&addr).map_err(|e| Failure::Protocol(format!("{addr}: {e}")))?;
            stream
                .set_read_timeout(Some(Duration::from_secs(120)))
                .map_err(Error::from)?;
            let (_, mut vrng) = session_rngs(seed_or_random(seed));
            let mut ch = Channel::new(stream);
            let outcome = verifier_session(&mut ch, &inst, rounds, &mut vrng)?;
            report_outcome(&outcome)
        }
        Command::Simulate {
            instance,
            challenge,
            samples,
            witness,
            seed,
        } => {
            let inst = read_file(&instance)?.instance()?;
            if inst.variant() != Variant::Balanced {
                return Err(Failure::Usage("simulate needs a balanced instance".into()));
            }
            let ch: Challenge = challenge.into();
            let seed = seed_or_random(seed);
            let mut rng = derive_rng(seed, 0);
            let mut accepted = 0;
            let mut shape_ok = 0;
            let half = (inst.w() / 2) as usize;
            let mut sims: Vec<View> = Vec::with_capacity(samples);
            for _ in 0..samples {
                let v = simulate_view(&inst, ch, &mut rng)?;
                if verifier_check(&inst, &v.commit, ch, &v.response).is_accept() {
                    accepted += 1;
                }
                if v.response.f_pi().is_none_or(|f| f.count(1) == half && f.count(-1) == half) {
                    shape_ok += 1;
                }
                sims.push(v);
            }
            let mut report = json!({
                "challenge": ch.to_string(),
                "samples": samples,
                "accepted": accepted,
                "f_pi_shape_ok": shape_ok,
            });
            if let Some(path) = witness {
                let wit = load_witness(&inst, &path)?;
                let mut rng = derive_rng(seed, 1);
                let real = (0..samples)
                    .map(|_| real_view(&inst, &wit, ch, &mut rng))
                    .collect::<lee_zk::Result<Vec<_>>>()?;
                let test = transcript_distribution_test(&real, &sims)?;
                report["real_vs_simulated"] = serde_json::to_value(test).map_err(Error::from)?;
            }
            println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
            if accepted == samples {
                Ok(())
            } else {
                Err(Failure::Reject(format!("{} simulated views rejected", samples - accepted)))
            }
        }
        Command::Bench {
            n,
            k,
            m,
            measure,
            w,
            rounds,
            seed,
        } => {
            let bits = comm_cost_bits(n, k, m);
            let mut report = json!({"n": n, "k": k, "m": m, "formula_bits": bits});
            if measure {
                let modulus = Modulus::new(m as i64)?;
                let ell = modulus.ell() as u64;
                let w = w.unwrap_or((n as u64 * (ell - 1)) & !1);
                let mut rng = ChaCha20Rng::seed_from_u64(seed_or_random(seed));
                let (inst, wit) = sample_instance(n, k, w, modulus, &mut rng)?;
                let session = run_session(&inst, &wit, rounds, &mut rng)?;
                let per_round: Vec<_> = session
                    .rounds
                    .iter()
                    .map(|r| json!({"challenge": r.challenge.to_string(), "response_bytes": r.response_bytes}))
                    .collect();
                let max_bits = session.max_response_bytes() as f64 * 8.0;
                report["measured"] = json!({
                    "w": w,
                    "accepted": session.accepted,
                    "rounds": per_round,
                    "max_response_bits": max_bits,
                    "ratio_to_formula": max_bits / bits,
                    "total_bytes": session.total_bytes(),
                });
            }
            println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Reject(msg)) => {
            eprintln!("reject: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Protocol(msg)) => {
            eprintln!("protocol error: {msg}");
            ExitCode::from(3)
        }
    }
}
