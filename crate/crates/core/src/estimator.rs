// Copyright 2026 The joinsample Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Join of two samples, COUNT/SUM/AVG estimates and their variances.
//!
//! COUNT and SUM are scaled by `1/(p_min·q₁·q₂)` and are unbiased. AVG is the
//! ratio of the joined SUM and COUNT; the scales cancel, and its variance is a
//! first-order Taylor approximation.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::{Sample, UBSParams};
use crate::stats::{CrossSums, KeyFactors, MomentTerms};
use crate::table::JoinKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    Count,
    Sum,
    Avg,
}

impl FromStr for Aggregate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "count" => Ok(Aggregate::Count),
            "sum" => Ok(Aggregate::Sum),
            "avg" => Ok(Aggregate::Avg),
            _ => Err(Error::Config(format!("unknown aggregate `{s}`"))),
        }
    }
}

impl fmt::Display for Aggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregate::Count => "count",
            Aggregate::Sum => "sum",
            Aggregate::Avg => "avg",
        })
    }
}

/// One output tuple of `S₁ ⋈ S₂`, as row positions within each sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinedPair {
    pub key: JoinKey,
    pub left: usize,
    pub right: usize,
}

/// Hash join on the samples' key columns.
///
/// Output is sorted by key, then by the source row ids of the left and right
/// rows, so it does not depend on which side the hash table is built on.
pub fn join_samples(s1: &Sample, s2: &Sample) -> Result<Vec<JoinedPair>> {
    let k1 = s1.rows.keys(&s1.meta.key_column)?;
    let k2 = s2.rows.keys(&s2.meta.key_column)?;
    let (build, probe, swapped) = if k1.len() <= k2.len() {
        (&k1, &k2, false)
    } else {
        (&k2, &k1, true)
    };
    let mut table: HashMap<&JoinKey, Vec<usize>> = HashMap::with_capacity(build.len());
    for (i, k) in build.iter().enumerate() {
        table.entry(k).or_default().push(i);
    }
    let mut out = Vec::new();
    for (j, k) in probe.iter().enumerate() {
        if let Some(matches) = table.get(k) {
            for &i in matches {
                let (left, right) = if swapped { (j, i) } else { (i, j) };
                out.push(JoinedPair {
                    key: k.clone(),
                    left,
                    right,
                });
            }
        }
    }
    out.sort_by(|x, y| {
        x.key
            .cmp(&y.key)
            .then(s1.meta.row_ids[x.left].cmp(&s1.meta.row_ids[y.left]))
            .then(s2.meta.row_ids[x.right].cmp(&s2.meta.row_ids[y.right]))
    });
    Ok(out)
}

/// Variance of a scaled UBS estimator for arbitrary rates, using `p = min(p₁, p₂)`.
///
/// `terms` are the COUNT moments, the SUM betas, or the covariance sums of
/// [`CrossSums`]; the formula is the same bilinear form in each case.
pub fn general_variance(p1: f64, q1: f64, p2: f64, q2: f64, terms: &MomentTerms) -> f64 {
    let p = p1.min(p2);
    (1.0 / p - 1.0) * terms.t22
        + (1.0 - q2) / (p * q2) * terms.t21
        + (1.0 - q1) / (p * q1) * terms.t12
        + (1.0 - q1) * (1.0 - q2) / (p * q1 * q2) * terms.t11
}

/// Variance when both tables share universe rate `p` and have effective
/// rates `ε₁`, `ε₂` (so `q_i = ε_i/p`).
pub fn closed_form_variance(p: f64, eps1: f64, eps2: f64, terms: &MomentTerms) -> Result<f64> {
    let lo = eps1.max(eps2);
    if !(eps1 > 0.0 && eps2 > 0.0 && p >= lo * (1.0 - 1e-12) && p <= 1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "p = {p} is outside [max(ε₁, ε₂), 1] = [{lo}, 1]"
        )));
    }
    Ok(closed_form_unchecked(p, eps1, eps2, terms))
}

pub(crate) fn closed_form_unchecked(p: f64, eps1: f64, eps2: f64, t: &MomentTerms) -> f64 {
    (1.0 / p - 1.0) * t.t22
        + (1.0 / eps2 - 1.0 / p) * t.t21
        + (1.0 / eps1 - 1.0 / p) * t.t12
        + (p / (eps1 * eps2) - 1.0 / eps1 - 1.0 / eps2 + 1.0 / p) * t.t11
}

/// Moments of the unscaled joined-sample sum `S` and count `C` and the
/// resulting Taylor variance of `S/C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorAvgReport {
    pub es: f64,
    pub ec: f64,
    pub var_s: f64,
    pub var_c: f64,
    pub cov_sc: f64,
    pub variance: f64,
}

/// First-order Taylor variance of the AVG estimator with universe rate `p`
/// on both tables.
pub fn taylor_avg_variance(p: f64, q1: f64, q2: f64, sums: &CrossSums) -> Result<TaylorAvgReport> {
    let k = p * q1 * q2;
    let es = k * sums.join_sum();
    let ec = k * sums.join_count();
    if ec <= 0.0 {
        return Err(Error::UndefinedRatio("the join is empty, E[C] = 0".into()));
    }
    let k2 = k * k;
    let var_s = k2 * general_variance(p, q1, p, q2, &sums.sum);
    let var_c = k2 * general_variance(p, q1, p, q2, &sums.count);
    let cov_sc = k2 * general_variance(p, q1, p, q2, &sums.cov);
    // (ES/EC)² (VarS/ES² − 2Cov/(ES·EC) + VarC/EC²), expanded to stay finite at ES = 0
    let r = es / ec;
    let variance = ((var_s - 2.0 * r * cov_sc + r * r * var_c) / (ec * ec)).max(0.0);
    Ok(TaylorAvgReport {
        es,
        ec,
        var_s,
        var_c,
        cov_sc,
        variance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceSource {
    /// Closed form evaluated on full-table statistics.
    Statistics,
    /// Closed form evaluated on unbiased sample estimates of the statistics.
    PlugIn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub aggregate: Aggregate,
    #[serde(rename = "estimate")]
    pub value: f64,
    pub variance: f64,
    pub stderr: f64,
    pub ci95: (f64, f64),
    pub joined_rows: u64,
    pub scale: f64,
    /// True when the variance is a Taylor approximation.
    pub approximate: bool,
    pub variance_source: VarianceSource,
}

impl Estimate {
    fn new(
        aggregate: Aggregate,
        value: f64,
        variance: f64,
        joined_rows: u64,
        scale: f64,
        variance_source: VarianceSource,
    ) -> Self {
        let variance = variance.max(0.0);
        let stderr = variance.sqrt();
        Estimate {
            aggregate,
            value,
            variance,
            stderr,
            ci95: (value - 1.96 * stderr, value + 1.96 * stderr),
            joined_rows,
            scale,
            approximate: aggregate == Aggregate::Avg,
            variance_source,
        }
    }
}

fn coordinated(s1: &Sample, s2: &Sample) -> Result<(UBSParams, UBSParams)> {
    let (a, b) = (s1.ubs_params()?, s2.ubs_params()?);
    if a.hash_seed != b.hash_seed {
        return Err(Error::Coordination(format!(
            "samples use different hash seeds ({} and {})",
            a.hash_seed, b.hash_seed
        )));
    }
    Ok((a, b))
}

/// Estimates `agg` over `T₁ ⋈ T₂` from two coordinated UBS samples.
///
/// The aggregate column is read from the first sample. If `stats` are given
/// the variance is the closed form on them; otherwise it is a plug-in value
/// computed from unbiased sample estimates of the same cross sums.
pub fn estimate(
    agg: Aggregate,
    s1: &Sample,
    s2: &Sample,
    agg_column: Option<&str>,
    stats: Option<&CrossSums>,
) -> Result<Estimate> {
    let (pa, pb) = coordinated(s1, s2)?;
    let p = pa.p.min(pb.p);
    let scale = 1.0 / (p * pa.q * pb.q);
    let pairs = join_samples(s1, s2)?;
    let joined = pairs.len() as u64;
    let w = match (agg, agg_column) {
        (Aggregate::Count, _) => None,
        (_, Some(col)) => Some(s1.rows.numeric(col)?),
        (_, None) => {
            return Err(Error::Config(format!("{agg} needs an aggregate column")));
        }
    };
    let plug_in;
    let (sums, source) = match stats {
        Some(s) => (s, VarianceSource::Statistics),
        None => {
            plug_in = plug_in_sums(s1, s2, w.as_deref(), pa, pb)?;
            (&plug_in, VarianceSource::PlugIn)
        }
    };
    match agg {
        Aggregate::Count => {
            let var = general_variance(pa.p, pa.q, pb.p, pb.q, &sums.count);
            Ok(Estimate::new(agg, scale * joined as f64, var, joined, scale, source))
        }
        Aggregate::Sum => {
            let w = w.expect("aggregate column read above");
            let total: f64 = pairs.iter().map(|j| w[j.left]).sum();
            let var = general_variance(pa.p, pa.q, pb.p, pb.q, &sums.sum);
            Ok(Estimate::new(agg, scale * total, var, joined, scale, source))
        }
        Aggregate::Avg => {
            if joined == 0 {
                return Err(Error::UndefinedRatio(
                    "the sample join is empty, AVG is undefined".into(),
                ));
            }
            let w = w.expect("aggregate column read above");
            let total: f64 = pairs.iter().map(|j| w[j.left]).sum();
            let var = match taylor_avg_variance(p, pa.q, pb.q, sums) {
                Ok(r) => r.variance,
                Err(Error::UndefinedRatio(_)) => 0.0,
                Err(e) => return Err(e),
            };
            Ok(Estimate::new(agg, total / joined as f64, var, joined, scale, source))
        }
    }
}

/// Unbiased estimates of the cross sums from the samples themselves.
///
/// For a key in the shared universe, each sampled quantity is corrected for
/// its Bernoulli stage (for example `a²` is estimated by
/// `x(x−1)/q² + x/q` from the sampled count `x`), and the key is weighted by
/// `1/p_min`.
fn plug_in_sums(
    s1: &Sample,
    s2: &Sample,
    w: Option<&[f64]>,
    pa: UBSParams,
    pb: UBSParams,
) -> Result<CrossSums> {
    #[derive(Default)]
    struct Acc {
        x: f64,
        sw: f64,
        sw2: f64,
    }
    let mut left: HashMap<JoinKey, Acc> = HashMap::new();
    for (i, k) in s1.rows.keys(&s1.meta.key_column)?.into_iter().enumerate() {
        let v = w.map_or(1.0, |w| w[i]);
        let e = left.entry(k).or_default();
        e.x += 1.0;
        e.sw += v;
        e.sw2 += v * v;
    }
    let mut right: HashMap<JoinKey, f64> = HashMap::new();
    for k in s2.rows.keys(&s2.meta.key_column)? {
        *right.entry(k).or_default() += 1.0;
    }
    let (q1, q2) = (pa.q, pb.q);
    let weight = 1.0 / pa.p.min(pb.p);
    let mut keys: Vec<&JoinKey> = left.keys().filter(|k| right.contains_key(*k)).collect();
    keys.sort();
    let mut sums = CrossSums::default();
    for k in keys {
        let l = &left[k];
        let y = right[k];
        let f = KeyFactors {
            a: l.x / q1,
            a_sq: l.x * (l.x - 1.0) / (q1 * q1) + l.x / q1,
            s1: l.sw / q1,
            s1_sq: (l.sw * l.sw - (1.0 - q1) * l.sw2) / (q1 * q1),
            s2: l.sw2 / q1,
            a_s1: (l.x * l.sw - (1.0 - q1) * l.sw) / (q1 * q1),
        };
        let b = y / q2;
        let b_sq = y * (y - 1.0) / (q2 * q2) + y / q2;
        let mut part = CrossSums::default();
        part.add_key(&f, b * weight, b_sq * weight);
        sums.add_terms(part.count, part.sum, part.cov);
    }
    Ok(sums)
}

/// Fraction of the true join retained by the sample join.
pub fn measure_output_fraction(s1: &Sample, s2: &Sample, true_join_size: f64) -> Result<f64> {
    if !(true_join_size > 0.0) {
        return Err(Error::domain("true join size must be positive"));
    }
    Ok(join_samples(s1, s2)?.len() as f64 / true_join_size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{ubs_sample, BernoulliSeed};
    use crate::stats::{cross_moments, JoinKeyHistogram, Moments, TableAggregates};
    use crate::table::Table;

    fn full(t: &Table, seed: u64) -> Sample {
        ubs_sample(t, "J", UBSParams::new(1.0, 1.0, seed).unwrap(), BernoulliSeed::new(0, 1)).unwrap()
    }

    fn with_params(t: &Table, p: f64, q: f64) -> Sample {
        let mut s = full(t, 1);
        s.meta.params = crate::sampler::SampleParams::Ubs(UBSParams::new(p, q, 1).unwrap());
        s
    }

    fn example_moments() -> Moments {
        let a = JoinKeyHistogram::from_counts([(JoinKey::from_int(1), 2), (JoinKey::from_int(2), 1)]);
        let b = JoinKeyHistogram::from_counts([(JoinKey::from_int(1), 1), (JoinKey::from_int(2), 2)]);
        cross_moments(&a, &b)
    }

    #[test]
    fn join_cardinalities() {
        let s1 = full(&Table::from_keys("J", &[1, 1]), 1);
        let s2 = full(&Table::from_keys("J", &[1]), 1);
        assert_eq!(join_samples(&s1, &s2).unwrap().len(), 2);

        let s3 = full(&Table::from_keys("J", &[5, 6]), 1);
        assert!(join_samples(&s1, &s3).unwrap().is_empty());

        let a = full(&Table::from_keys("J", &[1, 1, 2]), 1);
        let b = full(&Table::from_keys("J", &[1, 2, 2]), 1);
        let ab = join_samples(&a, &b).unwrap();
        let ba = join_samples(&b, &a).unwrap();
        assert_eq!(ab.len(), 4);
        let flipped: Vec<_> = ba.iter().map(|j| (j.key.clone(), j.right, j.left)).collect();
        let mut direct: Vec<_> = ab.iter().map(|j| (j.key.clone(), j.left, j.right)).collect();
        direct.sort();
        let mut flipped = flipped;
        flipped.sort();
        assert_eq!(direct, flipped);
    }

    #[test]
    fn count_scaling() {
        let s1 = with_params(&Table::from_keys("J", &[1, 2, 3]), 0.5, 0.5);
        let s2 = with_params(&Table::from_keys("J", &[1, 2, 3]), 0.5, 0.5);
        let e = estimate(Aggregate::Count, &s1, &s2, None, None).unwrap();
        assert_eq!(e.value, 24.0);
        assert_eq!(e.scale, 8.0);
        assert_eq!(e.joined_rows, 3);
    }

    #[test]
    fn avg_is_ratio_of_joined_values() {
        let t1 = Table::from_keys_and_values("J", "W", &[(1, 2.0), (1, 4.0)]);
        let t2 = Table::from_keys("J", &[1]);
        for (p, q) in [(1.0, 1.0), (0.3, 0.2)] {
            let e = estimate(Aggregate::Avg, &with_params(&t1, p, q), &with_params(&t2, p, q), Some("W"), None)
                .unwrap();
            assert_eq!(e.value, 3.0);
            assert!(e.approximate);
        }
    }

    #[test]
    fn avg_of_empty_join_is_undefined() {
        let t1 = Table::from_keys_and_values("J", "W", &[(1, 2.0)]);
        let t2 = Table::from_keys("J", &[2]);
        let err = estimate(Aggregate::Avg, &full(&t1, 1), &full(&t2, 1), Some("W"), None).unwrap_err();
        assert!(matches!(err, Error::UndefinedRatio(_)));
    }

    #[test]
    fn mismatched_seeds_are_rejected() {
        let t = Table::from_keys("J", &[1]);
        let err = estimate(Aggregate::Count, &full(&t, 1), &full(&t, 2), None, None).unwrap_err();
        assert!(matches!(err, Error::Coordination(_)));
    }

    #[test]
    fn full_sample_is_exact() {
        let t1 = Table::from_keys("J", &[1, 1, 2]);
        let t2 = Table::from_keys("J", &[1, 2, 2]);
        let e = estimate(Aggregate::Count, &full(&t1, 1), &full(&t2, 1), None, None).unwrap();
        assert_eq!((e.value, e.variance), (4.0, 0.0));
    }

    #[test]
    fn closed_form_examples() {
        let m = example_moments();
        assert!((closed_form_variance(0.5, 0.25, 0.25, &m.terms()).unwrap() - 40.0).abs() < 1e-9);
        assert_eq!(closed_form_variance(1.0, 1.0, 1.0, &m.terms()).unwrap(), 0.0);
        assert!(matches!(
            closed_form_variance(0.2, 0.25, 0.25, &m.terms()),
            Err(Error::Domain(_))
        ));

        let t1 = Table::from_keys_and_values("J", "W", &[(1, 2.0), (1, 4.0), (2, 6.0)]);
        let aggs = TableAggregates::from_table(&t1, "J", "W").unwrap();
        let b = JoinKeyHistogram::from_counts([(JoinKey::from_int(1), 1), (JoinKey::from_int(2), 2)]);
        let sums = CrossSums::new(&aggs, &b);
        assert!((closed_form_variance(0.5, 0.25, 0.25, &sums.sum).unwrap() - 908.0).abs() < 1e-9);
    }

    #[test]
    fn general_variance_special_cases() {
        let m = example_moments();
        let cf = closed_form_variance(0.5, 0.2, 0.3, &m.terms()).unwrap();
        let gv = general_variance(0.5, 0.4, 0.5, 0.6, &m.terms());
        assert!((cf - gv).abs() < 1e-9 * cf);

        let n = 10.0f64;
        let one = JoinKeyHistogram::from_counts([(JoinKey::from_int(1), 10)]);
        let t = cross_moments(&one, &one).terms();
        let p = 0.3;
        assert!((general_variance(p, 1.0, p, 1.0, &t) - (1.0 / p - 1.0) * n.powi(4)).abs() < 1e-6);
        let q = 0.2;
        let expect = 2.0 * (1.0 / q - 1.0) * n.powi(3) + ((1.0 - q) / q).powi(2) * n * n;
        assert!((general_variance(1.0, q, 1.0, q, &t) - expect).abs() < 1e-6);
    }

    #[test]
    fn taylor_constant_column_and_full_rate() {
        let t1 = Table::from_keys_and_values("J", "W", &[(1, 5.0), (1, 5.0), (2, 5.0), (3, 5.0)]);
        let aggs = TableAggregates::from_table(&t1, "J", "W").unwrap();
        let b = JoinKeyHistogram::from_counts([(JoinKey::from_int(1), 3), (JoinKey::from_int(2), 1)]);
        let sums = CrossSums::new(&aggs, &b);
        let r = taylor_avg_variance(0.3, 0.5, 0.4, &sums).unwrap();
        assert!(r.variance.abs() < 1e-12 * r.var_s / (r.ec * r.ec));
        let r = taylor_avg_variance(1.0, 1.0, 1.0, &sums).unwrap();
        assert_eq!(r.variance, 0.0);

        let empty = JoinKeyHistogram::from_counts([(JoinKey::from_int(9), 3)]);
        assert!(matches!(
            taylor_avg_variance(0.5, 0.5, 0.5, &CrossSums::new(&aggs, &empty)),
            Err(Error::UndefinedRatio(_))
        ));
    }

    #[test]
    fn output_fraction_full_rate() {
        let t1 = Table::from_keys("J", &[1, 1, 2]);
        let t2 = Table::from_keys("J", &[1, 2, 2]);
        assert_eq!(measure_output_fraction(&full(&t1, 1), &full(&t2, 1), 4.0).unwrap(), 1.0);
        assert!(measure_output_fraction(&full(&t1, 1), &full(&t2, 1), 0.0).is_err());
    }
}
