//! Constructive transformations between the instance forms: general to
//! balanced (with witness lifting and extraction), row expansion of the
//! parity-check matrix, and the witness maps between the balanced and the
//! ternary forms.

use crate::error::{Error, Result};
use crate::problems::{check_witness, SdInstance, TernaryVector, Variant};
use crate::ring::{Modulus, ZmMatrix, ZmVector};

/// A general instance together with its balanced image.
#[derive(Clone, Debug)]
pub struct BalancedReduction {
    source: SdInstance,
    target: SdInstance,
    /// Multiplier with `gcd(m, c) = 1`; the bottom block is `-(c-1)·H̄`.
    c: i64,
    /// Zero padding length `⌈n/(ℓ-1)⌉`.
    pad: usize,
    h_bar: ZmMatrix,
    s_bar: ZmVector,
}

impl BalancedReduction {
    pub fn source(&self) -> &SdInstance {
        &self.source
    }

    pub fn target(&self) -> &SdInstance {
        &self.target
    }

    pub fn c(&self) -> i64 {
        self.c
    }

    /// `n̄ = n + ⌈n/(ℓ-1)⌉`.
    pub fn n_bar(&self) -> usize {
        self.source.n() + self.pad
    }

    pub fn h_bar(&self) -> &ZmMatrix {
        &self.h_bar
    }

    pub fn s_bar(&self) -> &ZmVector {
        &self.s_bar
    }
}

/// Default multiplier: 2 for odd moduli. Even moduli need an explicit `c`.
pub fn default_c(modulus: Modulus) -> Option<i64> {
    (!modulus.is_even()).then_some(2)
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Reduces a general instance to a balanced one.
///
/// `H̄ = [[H, 0], [0, I_p]]` with `p = ⌈n/(ℓ-1)⌉`, `s̄ = (s | 0_p)`,
/// `H± = [H̄ ; -(c-1)·H̄]` and the target is `(H±, c·s̄, 2w)`. A weight bound
/// above `nℓ` is clamped to `nℓ` first; no vector can exceed it, so the
/// answer is unchanged and the target bound stays within `n'(ℓ-1)`.
pub fn to_balanced(inst: &SdInstance, c: Option<i64>) -> Result<BalancedReduction> {
    if inst.variant() != Variant::General {
        return Err(Error::Precondition(format!(
            "balanced reduction expects a general instance, got {}",
            inst.variant()
        )));
    }
    let modulus = inst.modulus();
    let c = match c.or_else(|| default_c(modulus)) {
        Some(c) => c,
        None => {
            return Err(Error::InvalidParameters(
                "even modulus needs an explicit c with gcd(m, c) = 1".into(),
            ))
        }
    };
    if gcd(modulus.m(), c.rem_euclid(modulus.m())) != 1 {
        return Err(Error::NotInvertible {
            c,
            m: modulus.value(),
        });
    }
    let (n, k) = (inst.n(), inst.k());
    let ell = inst.ell();
    let pad = n.div_ceil(ell - 1);
    let n_bar = n + pad;

    let top = inst.h().hstack(&ZmMatrix::zeros(modulus, n, pad))?;
    let bottom = ZmMatrix::zeros(modulus, pad, n - k).hstack(&ZmMatrix::identity(modulus, pad))?;
    let h_bar = top.vstack(&bottom)?;
    let s_bar = inst.s().concat(&ZmVector::zeros(modulus, pad))?;

    let h_pm = h_bar.vstack(&h_bar.scale(-(c - 1)))?;
    let w = inst.w().min((n * ell) as u64);
    let target = SdInstance::new(
        Variant::Balanced,
        2 * n_bar,
        n_bar + k,
        2 * w,
        h_pm,
        s_bar.scale(c),
    )?;
    Ok(BalancedReduction {
        source: inst.clone(),
        target,
        c,
        pad,
        h_bar,
        s_bar,
    })
}

/// Maps a source witness `e` to `(ē | -ē)` with `ē = (e | 0_p)`.
pub fn lift_witness(red: &BalancedReduction, e: &ZmVector) -> Result<ZmVector> {
    if !check_witness(&red.source, e)? {
        return Err(Error::Precondition(
            "vector is not a witness of the source instance".into(),
        ));
    }
    let e_bar = e.concat(&ZmVector::zeros(e.modulus(), red.pad))?;
    let lifted = e_bar.concat(&e_bar.neg())?;
    debug_assert!(check_witness(&red.target, &lifted)?);
    Ok(lifted)
}

/// Result of pulling a target solution back to the source.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtractedWitness {
    pub e: ZmVector,
    /// Lee weight of `e`; it is not guaranteed to respect the source bound.
    pub lee_weight: u64,
    pub within_bound: bool,
}

/// Pulls `g` with `g·H± = c·s̄` back to `e` with `e·H = s`.
///
/// Forms `c⁻¹(g_l - (c-1)·g_r)`, checks the forced-zero tail and strips it.
/// Only the syndrome condition is guaranteed; the weight is measured and
/// reported, not assumed.
pub fn extract_witness(red: &BalancedReduction, g: &ZmVector) -> Result<ExtractedWitness> {
    let target = &red.target;
    if g.len() != target.n() {
        return Err(Error::DimensionMismatch {
            context: "reduced witness length",
            expected: target.n(),
            found: g.len(),
        });
    }
    if g.mul_matrix(target.h())? != *target.s() {
        return Err(Error::Precondition(
            "vector does not satisfy the reduced syndrome".into(),
        ));
    }
    let modulus = g.modulus();
    let n_bar = red.n_bar();
    let g_l = g.slice(0..n_bar);
    let g_r = g.slice(n_bar..2 * n_bar);
    let c_inv = modulus.inverse(red.c)?;
    let x = g_l.sub(&g_r.scale(red.c - 1))?.scale(c_inv);
    let n = red.source.n();
    if !x.slice(n..n_bar).is_zero() {
        return Err(Error::Precondition(
            "forced-zero tail is nonzero; g is malformed".into(),
        ));
    }
    let e = x.slice(0..n);
    debug_assert_eq!(e.mul_matrix(red.source.h())?, *red.source.s());
    let lee_weight = e.lee_weight();
    Ok(ExtractedWitness {
        within_bound: lee_weight <= red.source.w(),
        lee_weight,
        e,
    })
}

/// Repeats every row of `H` exactly `ell` times.
pub fn expand_matrix(h: &ZmMatrix, ell: usize) -> ZmMatrix {
    h.select_rows((0..h.rows()).flat_map(|i| std::iter::repeat_n(i, ell)))
}

/// Balanced instance in ternary form: same `(s, w)`, expanded matrix.
pub fn to_ternary(inst: &SdInstance) -> Result<SdInstance> {
    if inst.variant() != Variant::Balanced {
        return Err(Error::Precondition(format!(
            "ternary form expects a balanced instance, got {}",
            inst.variant()
        )));
    }
    SdInstance::new(
        Variant::Ternary,
        inst.n(),
        inst.k(),
        inst.w(),
        expand_matrix(inst.h(), inst.ell()),
        inst.s().clone(),
    )
}

/// Block expansion `e -> e′`: block `i` holds `|eᵢ|` copies of `sign(eᵢ)`
/// followed by `ℓ - |eᵢ|` zeros.
///
/// For even `m` the shared class `±ℓ` is given whichever signs make the
/// output balanced (see [`ZmVector::balanced_representatives`]).
pub fn expand_witness(e: &ZmVector) -> TernaryVector {
    let ell = e.modulus().ell() as usize;
    let reps = e.balanced_representatives().unwrap_or_else(|| e.to_i64());
    let mut f = TernaryVector::zeros(e.len() * ell);
    let out = f.entries_mut();
    for (i, &x) in reps.iter().enumerate() {
        let sign = x.signum() as i8;
        for slot in &mut out[i * ell..i * ell + x.unsigned_abs() as usize] {
            *slot = sign;
        }
    }
    f
}

/// Raises the weight of a balanced ternary vector to exactly `w`.
///
/// Repeatedly takes the first block (left to right) holding at least two
/// zeros and replaces its leftmost two zeros with `(+1, -1)`.
pub fn pad_to_weight(ep: &TernaryVector, w: u64, ell: usize) -> Result<TernaryVector> {
    if ell < 2 || ep.len() % ell != 0 {
        return Err(Error::Precondition(format!(
            "length {} is not a multiple of block size {ell}",
            ep.len()
        )));
    }
    let n = ep.len() / ell;
    if w % 2 != 0 || w > (n * (ell - 1)) as u64 {
        return Err(Error::Precondition(format!(
            "target weight {w} must be even and at most n(ℓ-1) = {}",
            n * (ell - 1)
        )));
    }
    if !ep.is_balanced() {
        return Err(Error::Precondition("input is not balanced".into()));
    }
    let mut weight = ep.weight();
    if weight > w {
        return Err(Error::Precondition(format!(
            "input weight {weight} exceeds target {w}"
        )));
    }
    let mut f = ep.clone();
    let entries = f.entries_mut();
    let mut block = 0;
    while weight < w {
        let zeros: Vec<usize> = (block * ell..(block + 1) * ell)
            .filter(|&j| entries[j] == 0)
            .take(2)
            .collect();
        if zeros.len() == 2 {
            entries[zeros[0]] = 1;
            entries[zeros[1]] = -1;
            weight += 2;
            // the same block may still hold two zeros
            continue;
        }
        block += 1;
        if block == n {
            return Err(Error::Precondition(
                "no block with two zeros remains".into(),
            ));
        }
    }
    Ok(f)
}

/// Block-wise accumulation `eᵢ = Σ_{j in block i} f_j`.
pub fn accumulate(f: &TernaryVector, modulus: Modulus) -> Result<ZmVector> {
    let ell = modulus.ell() as usize;
    if f.len() % ell != 0 {
        return Err(Error::Precondition(format!(
            "length {} is not a multiple of ℓ = {ell}",
            f.len()
        )));
    }
    Ok(ZmVector::from_reduced(
        modulus,
        f.entries()
            .chunks(ell)
            .map(|b| b.iter().map(|&x| x as i64).sum::<i64>()),
    ))
}

/// The prover's ternary witness `f = e″`.
pub fn ternary_witness(e: &ZmVector, w: u64) -> Result<TernaryVector> {
    pad_to_weight(&expand_witness(e), w, e.modulus().ell() as usize)
}
