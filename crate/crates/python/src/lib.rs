//! Python bindings. Vectors and matrices cross the boundary as lists of
//! centered integers; protocol messages as `bytes`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use lee_zk::analysis::simulate_view;
use lee_zk::problems::{check_witness, decide_bruteforce, sample_instance, Decision, InstanceFile};
use lee_zk::protocol::{
    comm_cost_bits as cost_bits, prover_commit, run_session as run, verifier_challenge,
    verify_response_bytes, CommitMessage, ProverRoundState,
};
use lee_zk::reductions::{self, BalancedReduction};
use lee_zk::{Challenge, Error, Modulus, SdInstance, TernaryVector, Variant, Witness, ZmMatrix, ZmVector};

fn err(e: Error) -> PyErr {
    match e {
        Error::StateConsumed | Error::Protocol(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn modulus(m: i64) -> PyResult<Modulus> {
    Modulus::new(m).map_err(err)
}

fn vector(v: Vec<i64>, m: i64) -> PyResult<ZmVector> {
    ZmVector::new(modulus(m)?, v).map_err(err)
}

fn challenge(c: u8) -> PyResult<Challenge> {
    Challenge::from_byte(c).map_err(err)
}

fn variant(name: &str) -> PyResult<Variant> {
    match name {
        "general" => Ok(Variant::General),
        "balanced" => Ok(Variant::Balanced),
        "ternary" => Ok(Variant::Ternary),
        other => Err(PyValueError::new_err(format!("unknown variant {other:?}"))),
    }
}

/// A syndrome decoding instance.
#[pyclass(name = "Instance", module = "lee_zk", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyInstance {
    inner: SdInstance,
}

#[pymethods]
impl PyInstance {
    #[new]
    fn new(variant_name: &str, m: i64, n: usize, k: usize, w: u64, h: Vec<Vec<i64>>, s: Vec<i64>) -> PyResult<Self> {
        let modulus = modulus(m)?;
        let rows = h.len();
        let cols = h.first().map_or(0, |r| r.len());
        if h.iter().any(|r| r.len() != cols) {
            return Err(PyValueError::new_err("ragged matrix"));
        }
        let h = ZmMatrix::new(modulus, rows, cols, h.into_iter().flatten().collect()).map_err(err)?;
        let s = ZmVector::new(modulus, s).map_err(err)?;
        let inner = SdInstance::new(variant(variant_name)?, n, k, w, h, s).map_err(err)?;
        Ok(PyInstance { inner })
    }

    /// Planted balanced instance; returns `(instance, e)`.
    #[staticmethod]
    fn sample(n: usize, k: usize, w: u64, m: i64, seed: u64) -> PyResult<(PyInstance, Vec<i64>)> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (inner, wit) = sample_instance(n, k, w, modulus(m)?, &mut rng).map_err(err)?;
        Ok((PyInstance { inner }, wit.e.to_i64()))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = InstanceFile::from_json(text).and_then(|f| f.instance()).map_err(err)?;
        Ok(PyInstance { inner })
    }

    #[pyo3(signature = (e=None))]
    fn to_json(&self, e: Option<Vec<i64>>) -> PyResult<String> {
        let e = e.map(|e| vector(e, self.inner.modulus().m())).transpose()?;
        InstanceFile::from_instance(&self.inner, e.as_ref()).to_json().map_err(err)
    }

    #[getter]
    fn variant(&self) -> String {
        self.inner.variant().to_string()
    }

    #[getter]
    fn m(&self) -> i64 {
        self.inner.modulus().m()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn w(&self) -> u64 {
        self.inner.w()
    }

    #[getter]
    fn h(&self) -> Vec<Vec<i64>> {
        let h = self.inner.h();
        (0..h.rows()).map(|i| h.row(i).iter().map(|&x| x as i64).collect()).collect()
    }

    #[getter]
    fn s(&self) -> Vec<i64> {
        self.inner.s().to_i64()
    }

    fn check_witness(&self, e: Vec<i64>) -> PyResult<bool> {
        let e = vector(e, self.m())?;
        check_witness(&self.inner, &e).map_err(err)
    }

    /// Exhaustive search; a witness, `None` for no, or an error past the budget.
    fn decide(&self, budget: u64) -> PyResult<Option<Vec<i64>>> {
        match decide_bruteforce(&self.inner, budget).map_err(err)? {
            Decision::Yes(e) => Ok(Some(e.to_i64())),
            Decision::No => Ok(None),
            Decision::BudgetExceeded { space, budget } => Err(PyValueError::new_err(format!(
                "search space {space:?} exceeds budget {budget}"
            ))),
        }
    }

    fn to_ternary(&self) -> PyResult<PyInstance> {
        Ok(PyInstance {
            inner: reductions::to_ternary(&self.inner).map_err(err)?,
        })
    }

    #[pyo3(signature = (c=None))]
    fn to_balanced(&self, c: Option<i64>) -> PyResult<PyReduction> {
        Ok(PyReduction {
            inner: reductions::to_balanced(&self.inner, c).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance({}, m={}, n={}, k={}, w={})",
            self.inner.variant(),
            self.m(),
            self.n(),
            self.k(),
            self.w()
        )
    }
}

/// A general instance and its balanced image.
#[pyclass(name = "Reduction", module = "lee_zk", frozen)]
struct PyReduction {
    inner: BalancedReduction,
}

#[pymethods]
impl PyReduction {
    #[getter]
    fn target(&self) -> PyInstance {
        PyInstance {
            inner: self.inner.target().clone(),
        }
    }

    #[getter]
    fn c(&self) -> i64 {
        self.inner.c()
    }

    fn lift(&self, e: Vec<i64>) -> PyResult<Vec<i64>> {
        let e = vector(e, self.inner.source().modulus().m())?;
        Ok(reductions::lift_witness(&self.inner, &e).map_err(err)?.to_i64())
    }

    /// Returns `(e, lee_weight, within_bound)`.
    fn extract(&self, g: Vec<i64>) -> PyResult<(Vec<i64>, u64, bool)> {
        let g = vector(g, self.inner.source().modulus().m())?;
        let x = reductions::extract_witness(&self.inner, &g).map_err(err)?;
        Ok((x.e.to_i64(), x.lee_weight, x.within_bound))
    }
}

/// Honest prover holding one single-use round state at a time.
#[pyclass(name = "Prover", module = "lee_zk")]
struct PyProver {
    instance: SdInstance,
    witness: Witness,
    rng: ChaCha20Rng,
    state: Option<ProverRoundState>,
}

#[pymethods]
impl PyProver {
    #[new]
    fn new(instance: PyRef<'_, PyInstance>, e: Vec<i64>, seed: u64) -> PyResult<Self> {
        let e = vector(e, instance.m())?;
        Ok(PyProver {
            instance: instance.inner.clone(),
            witness: Witness::new(e),
            rng: ChaCha20Rng::seed_from_u64(seed),
            state: None,
        })
    }

    /// Starts a round; returns the 256-byte commit message.
    fn commit<'py>(&mut self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        let (state, cm) = prover_commit(&self.instance, &self.witness, &mut self.rng).map_err(err)?;
        self.state = Some(state);
        Ok(PyBytes::new(py, &cm.encode()))
    }

    /// Answers challenge 0, 1 or 2 (A, B, C) with the encoded response.
    fn respond<'py>(&mut self, py: Python<'py>, challenge_byte: u8) -> PyResult<Bound<'py, PyBytes>> {
        let state = self
            .state
            .as_mut()
            .ok_or_else(|| PyRuntimeError::new_err("no round in progress"))?;
        let resp = state.respond(challenge(challenge_byte)?).map_err(err)?;
        Ok(PyBytes::new(py, &resp.encode()))
    }
}

/// Verifier: draws challenges and checks responses.
#[pyclass(name = "Verifier", module = "lee_zk")]
struct PyVerifier {
    instance: SdInstance,
    rng: ChaCha20Rng,
}

#[pymethods]
impl PyVerifier {
    #[new]
    fn new(instance: PyRef<'_, PyInstance>, seed: u64) -> Self {
        PyVerifier {
            instance: instance.inner.clone(),
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    fn challenge(&mut self) -> u8 {
        verifier_challenge(&mut self.rng).to_byte()
    }

    /// Returns `(accepted, failed_check_names)`.
    fn check(&self, commit: &[u8], challenge_byte: u8, response: &[u8]) -> PyResult<(bool, Vec<String>)> {
        let cm = CommitMessage::decode(commit).map_err(err)?;
        let (verdict, _) = verify_response_bytes(&self.instance, &cm, challenge(challenge_byte)?, response);
        let failed = verdict.failed_checks().iter().map(|c| c.name().to_string()).collect();
        Ok((verdict.is_accept(), failed))
    }
}

#[pyfunction]
fn lee_weight(v: Vec<i64>, m: i64) -> PyResult<u64> {
    Ok(vector(v, m)?.lee_weight())
}

#[pyfunction]
fn syndrome(e: Vec<i64>, h: Vec<Vec<i64>>, m: i64) -> PyResult<Vec<i64>> {
    let modulus = modulus(m)?;
    let cols = h.first().map_or(0, |r| r.len());
    let rows = h.len();
    let h = ZmMatrix::new(modulus, rows, cols, h.into_iter().flatten().collect()).map_err(err)?;
    Ok(vector(e, m)?.mul_matrix(&h).map_err(err)?.to_i64())
}

#[pyfunction]
fn expand_witness(e: Vec<i64>, m: i64) -> PyResult<Vec<i64>> {
    Ok(reductions::expand_witness(&vector(e, m)?).to_i64())
}

#[pyfunction]
fn pad_to_weight(f: Vec<i64>, w: u64, ell: usize) -> PyResult<Vec<i64>> {
    let f = TernaryVector::new(f).map_err(err)?;
    Ok(reductions::pad_to_weight(&f, w, ell).map_err(err)?.to_i64())
}

#[pyfunction]
fn accumulate(f: Vec<i64>, m: i64) -> PyResult<Vec<i64>> {
    let f = TernaryVector::new(f).map_err(err)?;
    Ok(reductions::accumulate(&f, modulus(m)?).map_err(err)?.to_i64())
}

#[pyfunction]
fn comm_cost_bits(n: usize, k: usize, m: u32) -> f64 {
    cost_bits(n, k, m)
}

/// Runs an honest session; returns a JSON summary.
#[pyfunction]
fn run_session(instance: PyRef<'_, PyInstance>, e: Vec<i64>, rounds: usize, seed: u64) -> PyResult<String> {
    let wit = Witness::new(vector(e, instance.m())?);
    let report = run(&instance.inner, &wit, rounds, &mut ChaCha20Rng::seed_from_u64(seed)).map_err(err)?;
    let summary = serde_json::json!({
        "accepted": report.accepted,
        "challenges": report.rounds.iter().map(|r| r.challenge.to_string()).collect::<String>(),
        "response_bytes": report.rounds.iter().map(|r| r.response_bytes).collect::<Vec<_>>(),
        "total_bytes": report.total_bytes(),
    });
    Ok(summary.to_string())
}

/// Simulates a view for `challenge_byte` and reports whether it verifies.
#[pyfunction]
fn simulate(instance: PyRef<'_, PyInstance>, challenge_byte: u8, seed: u64) -> PyResult<bool> {
    let ch = challenge(challenge_byte)?;
    let v = simulate_view(&instance.inner, ch, &mut ChaCha20Rng::seed_from_u64(seed)).map_err(err)?;
    Ok(lee_zk::protocol::verifier_check(&instance.inner, &v.commit, ch, &v.response).is_accept())
}

#[pymodule]
#[pyo3(name = "lee_zk")]
fn lee_zk_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PyReduction>()?;
    m.add_class::<PyProver>()?;
    m.add_class::<PyVerifier>()?;
    m.add_function(wrap_pyfunction!(lee_weight, m)?)?;
    m.add_function(wrap_pyfunction!(syndrome, m)?)?;
    m.add_function(wrap_pyfunction!(expand_witness, m)?)?;
    m.add_function(wrap_pyfunction!(pad_to_weight, m)?)?;
    m.add_function(wrap_pyfunction!(accumulate, m)?)?;
    m.add_function(wrap_pyfunction!(comm_cost_bits, m)?)?;
    m.add_function(wrap_pyfunction!(run_session, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
