use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::View;
use crate::error::{Error, Result};
use crate::protocol::{Challenge, Response};

/// Fewer samples per arm than this are refused.
pub const MIN_SAMPLES: usize = 50;

/// Categories whose pooled count is below this are lumped together.
const MIN_CELL: u64 = 10;

const MAX_TERNARY: usize = 128;
const MAX_NUMERIC: usize = 32;

#[derive(Clone, Debug, Serialize)]
pub struct FeatureResult {
    pub name: String,
    pub categories: usize,
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistributionReport {
    pub challenge: String,
    pub samples_x: usize,
    pub samples_y: usize,
    pub features_tested: usize,
    /// Feature with the smallest p-value.
    pub worst: Option<FeatureResult>,
    /// Bonferroni-combined p-value over all tested features.
    pub p_value: f64,
}

/// Categorical features of a view: per-position values of `f_π`, and the
/// leading residues of every opened numeric object.
pub fn view_features(view: &View) -> Vec<(String, i64)> {
    let mut out = Vec::new();
    let numeric = |name: &str, xs: &[i16], out: &mut Vec<(String, i64)>| {
        for (i, &x) in xs.iter().take(MAX_NUMERIC).enumerate() {
            out.push((format!("{name}[{i}]"), x as i64));
        }
    };
    match &view.response {
        Response::A { r, pi, .. } => {
            numeric("R", r.value.entries(), &mut out);
            for (i, &x) in pi.value.images().iter().take(MAX_NUMERIC).enumerate() {
                out.push((format!("pi[{i}]"), x as i64));
            }
        }
        Response::B { a, r_pi: mat, f_pi, .. } | Response::C { b: a, t_pi: mat, f_pi, .. } => {
            for (i, &x) in f_pi.value.entries().iter().take(MAX_TERNARY).enumerate() {
                out.push((format!("f_pi[{i}]"), x as i64));
            }
            numeric("syn", a.value.entries(), &mut out);
            numeric("mat", mat.value.entries(), &mut out);
        }
    }
    out
}

fn chi_square(cells: &[(u64, u64)]) -> (f64, f64) {
    let nx: u64 = cells.iter().map(|c| c.0).sum();
    let ny: u64 = cells.iter().map(|c| c.1).sum();
    let total = (nx + ny) as f64;
    let mut stat = 0.0;
    for &(ox, oy) in cells {
        let col = (ox + oy) as f64;
        let ex = nx as f64 * col / total;
        let ey = ny as f64 * col / total;
        stat += (ox as f64 - ex).powi(2) / ex + (oy as f64 - ey).powi(2) / ey;
    }
    (stat, (cells.len() - 1) as f64)
}

fn lump(mut cells: Vec<(u64, u64)>) -> Vec<(u64, u64)> {
    let (mut kept, small): (Vec<_>, Vec<_>) = cells.drain(..).partition(|c| c.0 + c.1 >= MIN_CELL);
    if !small.is_empty() {
        let other = small.iter().fold((0, 0), |acc, c| (acc.0 + c.0, acc.1 + c.1));
        if other.0 + other.1 >= MIN_CELL || kept.is_empty() {
            kept.push(other);
        } else if let Some(min) = kept.iter_mut().min_by_key(|c| c.0 + c.1) {
            min.0 += other.0;
            min.1 += other.1;
        }
    }
    kept
}

/// Two-sample test of whether `xs` and `ys` come from one distribution.
///
/// Each feature of [`view_features`] gets a 2×K chi-square test of
/// homogeneity (sparse categories lumped); the report's p-value is the
/// Bonferroni combination `min(1, K·min p)`. Constant features carry no
/// information and are skipped.
pub fn transcript_distribution_test(xs: &[View], ys: &[View]) -> Result<DistributionReport> {
    if xs.len() < MIN_SAMPLES || ys.len() < MIN_SAMPLES {
        return Err(Error::InsufficientSamples(format!(
            "need at least {MIN_SAMPLES} views per arm, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let ch: Challenge = xs[0].challenge;
    if xs.iter().chain(ys).any(|v| v.challenge != ch) {
        return Err(Error::Precondition("views mix challenge tags".into()));
    }

    // feature name -> category -> (count in xs, count in ys)
    let mut table: BTreeMap<String, BTreeMap<i64, (u64, u64)>> = BTreeMap::new();
    for (arm, views) in [(0, xs), (1, ys)] {
        for v in views {
            for (name, cat) in view_features(v) {
                let cell = table.entry(name).or_default().entry(cat).or_default();
                if arm == 0 {
                    cell.0 += 1;
                } else {
                    cell.1 += 1;
                }
            }
        }
    }

    let mut results = Vec::new();
    for (name, cats) in table {
        let cells = lump(cats.into_values().collect());
        if cells.len() < 2 {
            continue;
        }
        let (statistic, df) = chi_square(&cells);
        let p_value = ChiSquared::new(df)
            .map(|d| d.sf(statistic))
            .map_err(|e| Error::Precondition(e.to_string()))?;
        results.push(FeatureResult {
            name,
            categories: cells.len(),
            statistic,
            df,
            p_value,
        });
    }
    let features_tested = results.len();
    let worst = results
        .into_iter()
        .min_by(|a, b| a.p_value.total_cmp(&b.p_value));
    let p_value = worst
        .as_ref()
        .map_or(1.0, |w| (w.p_value * features_tested as f64).min(1.0));
    Ok(DistributionReport {
        challenge: ch.to_string(),
        samples_x: xs.len(),
        samples_y: ys.len(),
        features_tested,
        worst,
        p_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{broken_identity_round, derive_rng, real_view, simulate_view};
    use crate::problems::sample_instance;
    use crate::ring::Modulus;

    #[test]
    fn chi_square_oracle() {
        // 2x2 table [[30, 10], [20, 20]]: expected [[25, 15], [25, 15]]
        let (stat, df) = chi_square(&[(30, 20), (10, 20)]);
        let expected = 25.0 / 25.0 * 2.0 + 25.0 / 15.0 * 2.0;
        assert!((stat - expected).abs() < 1e-12);
        assert_eq!(df, 1.0);
        let p = ChiSquared::new(1.0).unwrap().sf(3.841_458_820_694_124);
        assert!((p - 0.05).abs() < 1e-9);
    }

    #[test]
    fn lumping() {
        assert_eq!(lump(vec![(50, 50), (2, 3), (4, 1)]), vec![(50, 50), (6, 4)]);
        assert_eq!(lump(vec![(50, 50), (2, 3), (4, 0)]), vec![(56, 53)]);
        assert_eq!(lump(vec![(50, 50), (40, 40), (1, 1)]), vec![(50, 50), (41, 41)]);
        assert_eq!(lump(vec![(1, 1)]), vec![(1, 1)]);
    }

    #[test]
    fn refuses_small_samples() {
        assert!(matches!(
            transcript_distribution_test(&[], &[]),
            Err(Error::InsufficientSamples(_))
        ));
    }

    #[test]
    fn real_vs_simulated_and_negative_control() {
        let mut rng = derive_rng(1, 0);
        let (inst, wit) = sample_instance(10, 5, 8, Modulus::new(7).unwrap(), &mut rng).unwrap();
        let real: Vec<View> = (0..600)
            .map(|_| real_view(&inst, &wit, Challenge::B, &mut rng).unwrap())
            .collect();
        let sim: Vec<View> = (0..600)
            .map(|_| simulate_view(&inst, Challenge::B, &mut rng).unwrap())
            .collect();
        let report = transcript_distribution_test(&real, &sim).unwrap();
        assert!(report.p_value > 0.01, "{report:?}");

        let broken: Vec<View> = (0..600)
            .map(|_| {
                let mut st = broken_identity_round(&inst, &wit, &mut rng).unwrap();
                View {
                    challenge: Challenge::B,
                    commit: st.commit_message().clone(),
                    response: st.respond(Challenge::B).unwrap(),
                }
            })
            .collect();
        let report = transcript_distribution_test(&broken, &sim).unwrap();
        assert!(report.p_value < 0.001, "{report:?}");
        assert!(serde_json::to_string(&report).unwrap().contains("p_value"));
    }
}
