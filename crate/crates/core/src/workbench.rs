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

//! Synthetic data, baseline parameter grids and Monte-Carlo benchmarks.
//!
//! Monte-Carlo trials do not materialize samples. They encode keys once,
//! draw every key hash and row uniform of a trial up front, and evaluate all
//! schemes on those same draws (common random numbers). Each row decision is
//! the one [`crate::sampler::ubs_sample`] makes for the same seeds, so a
//! trial's joined count equals the size of the join of the two materialized
//! samples.

use std::collections::HashMap;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Zipf};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{general_variance, taylor_avg_variance, Aggregate};
use crate::sampler::{keep, key_hash, mix64, BernoulliSeed};
use crate::stats::{CrossSums, JoinKeyHistogram, TableAggregates};
use crate::table::{format_number, JoinKey, Table};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistKind {
    Uniform,
    /// Centered on the key domain with `σ = domain/5`, out-of-range draws redrawn.
    TruncatedNormal,
    /// Zipf over the key domain; key 1 is the most frequent.
    PowerLaw { alpha: f64 },
}

impl FromStr for DistKind {
    type Err = Error;

    /// `uniform`, `normal`, or `power:<alpha>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(DistKind::Uniform),
            "normal" | "truncated_normal" => Ok(DistKind::TruncatedNormal),
            _ => {
                let alpha = s
                    .strip_prefix("power:")
                    .and_then(|a| a.parse::<f64>().ok())
                    .ok_or_else(|| Error::Config(format!("unknown distribution `{s}`")))?;
                Ok(DistKind::PowerLaw { alpha })
            }
        }
    }
}

/// Key distribution of one synthetic table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistSpec {
    pub kind: DistKind,
    pub n: u64,
    pub domain: u64,
}

impl DistSpec {
    pub fn new(kind: DistKind, n: u64, domain: u64) -> Result<Self> {
        let s = DistSpec { kind, n, domain };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.domain == 0 {
            return Err(Error::Config("n and the key domain must be at least 1".into()));
        }
        if let DistKind::PowerLaw { alpha } = self.kind {
            if !(alpha > 1.0 && alpha.is_finite()) {
                return Err(Error::Config(format!("power-law alpha must exceed 1, got {alpha}")));
            }
        }
        Ok(())
    }

    fn draw_keys(&self, rng: &mut ChaCha8Rng) -> Result<Vec<i64>> {
        self.validate()?;
        let d = self.domain as i64;
        let n = self.n as usize;
        Ok(match self.kind {
            DistKind::Uniform => (0..n).map(|_| rng.random_range(1..=d)).collect(),
            DistKind::TruncatedNormal => {
                let mean = (d as f64 + 1.0) / 2.0;
                let normal = Normal::new(mean, d as f64 / 5.0)
                    .map_err(|e| Error::Config(format!("normal distribution: {e}")))?;
                (0..n)
                    .map(|_| loop {
                        let k = normal.sample(rng).round() as i64;
                        if (1..=d).contains(&k) {
                            break k;
                        }
                    })
                    .collect()
            }
            DistKind::PowerLaw { alpha } => {
                let zipf = Zipf::new(d as f64, alpha)
                    .map_err(|e| Error::Config(format!("power-law distribution: {e}")))?;
                (0..n).map(|_| zipf.sample(rng) as i64).collect()
            }
        })
    }
}

/// Aggregate column: `floor` of a Pareto(`alpha`) draw truncated to `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WSpec {
    pub lo: f64,
    pub hi: f64,
    pub alpha: f64,
}

impl Default for WSpec {
    fn default() -> Self {
        WSpec {
            lo: 1.0,
            hi: 1000.0,
            alpha: 3.5,
        }
    }
}

impl WSpec {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        let u: f64 = rng.random();
        let tail = 1.0 - (self.lo / self.hi).powf(self.alpha);
        (self.lo * (1.0 - u * tail).powf(-1.0 / self.alpha)).floor().min(self.hi)
    }

    fn validate(&self) -> Result<()> {
        if !(self.lo > 0.0 && self.hi > self.lo && self.alpha > 0.0) {
            return Err(Error::Config(format!("invalid aggregate spec {self:?}")));
        }
        Ok(())
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(stream.wrapping_add(0x632b_e59b_d9b4_e019))))
}

/// Generates `T₁(J[, W])` and `T₂(J)`.
pub fn gen_synthetic(spec1: &DistSpec, spec2: &DistSpec, w: Option<&WSpec>, seed: u64) -> Result<(Table, Table)> {
    let mut rng1 = rng_for(seed, 1);
    let mut rng2 = rng_for(seed, 2);
    let mut rng_w = rng_for(seed, 3);
    let k1 = spec1.draw_keys(&mut rng1)?;
    let k2 = spec2.draw_keys(&mut rng2)?;
    let t1 = match w {
        Some(w) => {
            w.validate()?;
            let mut t = Table::new(vec!["J".into(), "W".into()]);
            for k in k1 {
                t.push(vec![k.to_string(), format_number(w.draw(&mut rng_w))])?;
            }
            t
        }
        None => Table::from_keys("J", &k1),
    };
    Ok((t1, Table::from_keys("J", &k2)))
}

/// T₂ whose `round(frac·n₂)` tuples sit on T₁'s most frequent key; the rest are
/// uniform over T₁'s keys.
pub fn gen_worst_case_t2(hist1: &JoinKeyHistogram, n2: u64, frac: f64, seed: u64) -> Result<Table> {
    if !(0.0..=1.0).contains(&frac) {
        return Err(Error::Config(format!("frac = {frac} is outside [0, 1]")));
    }
    let (heavy, _) = hist1
        .argmax()
        .ok_or_else(|| Error::domain("worst case of an empty histogram"))?;
    let keys: Vec<&JoinKey> = hist1.iter().map(|(k, _)| k).collect();
    let on_heavy = (frac * n2 as f64).round() as u64;
    let mut rng = rng_for(seed, 4);
    let mut t = Table::new(vec!["J".into()]);
    for _ in 0..on_heavy {
        t.push(vec![heavy.to_string()])?;
    }
    for _ in on_heavy..n2 {
        t.push(vec![keys[rng.random_range(0..keys.len())].to_string()])?;
    }
    Ok(t)
}

/// A named `(p, q₁, q₂)` scheme; both tables share the universe rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scheme {
    pub name: String,
    pub p: f64,
    pub q1: f64,
    pub q2: f64,
}

impl Scheme {
    pub fn new(name: impl Into<String>, p: f64, q1: f64, q2: f64) -> Self {
        Scheme {
            name: name.into(),
            p,
            q1,
            q2,
        }
    }
}

/// The six baseline shapes: `p = ε, 1.5ε, 3ε` then `q = 3ε, 1.5ε, ε`, with
/// the other rate set so that `p·q = ε`. Rates above 1 are capped at 1.
pub fn baseline_grid(eps: f64) -> Result<Vec<Scheme>> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::domain(format!("eps = {eps} is outside (0, 1]")));
    }
    let by_p = |name: &str, k: f64| {
        let p = (k * eps).min(1.0);
        Scheme::new(name, p, eps / p, eps / p)
    };
    let by_q = |name: &str, k: f64| {
        let q = (k * eps).min(1.0);
        Scheme::new(name, eps / q, q, q)
    };
    Ok(vec![
        by_p("B1", 1.0),
        by_p("B2", 1.5),
        by_p("B3", 3.0),
        by_q("B4", 3.0),
        by_q("B5", 1.5),
        by_q("B6", 1.0),
    ])
}

/// Two tables encoded for repeated sampling.
pub struct Prepared {
    keys: Vec<JoinKey>,
    k1: Vec<u32>,
    w1: Vec<f64>,
    k2: Vec<u32>,
    pub sums: CrossSums,
}

impl Prepared {
    pub fn new(t1: &Table, t2: &Table, key1: &str, key2: &str, w: Option<&str>) -> Result<Prepared> {
        let mut dict: HashMap<JoinKey, u32> = HashMap::new();
        let mut keys = Vec::new();
        let mut encode = |k: JoinKey| {
            *dict.entry(k.clone()).or_insert_with(|| {
                keys.push(k);
                (keys.len() - 1) as u32
            })
        };
        let raw1 = t1.keys(key1)?;
        let w1 = match w {
            Some(c) => t1.numeric(c)?,
            None => vec![1.0; raw1.len()],
        };
        let aggs = TableAggregates::from_pairs(raw1.iter().cloned().zip(w1.iter().copied()));
        let raw2 = t2.keys(key2)?;
        let h2 = JoinKeyHistogram::from_keys(raw2.iter());
        let sums = CrossSums::new(&aggs, &h2);
        let k1 = raw1.into_iter().map(&mut encode).collect();
        let k2 = raw2.into_iter().map(&mut encode).collect();
        Ok(Prepared { keys, k1, w1, k2, sums })
    }

    pub fn truth(&self, agg: Aggregate) -> f64 {
        match agg {
            Aggregate::Count => self.sums.join_count(),
            Aggregate::Sum => self.sums.join_sum(),
            Aggregate::Avg => self.sums.join_sum() / self.sums.join_count(),
        }
    }

    /// Closed-form (COUNT, SUM) or Taylor (AVG) variance of a scheme.
    pub fn predicted_variance(&self, agg: Aggregate, s: &Scheme) -> Option<f64> {
        match agg {
            Aggregate::Count => Some(general_variance(s.p, s.q1, s.p, s.q2, &self.sums.count)),
            Aggregate::Sum => Some(general_variance(s.p, s.q1, s.p, s.q2, &self.sums.sum)),
            Aggregate::Avg => taylor_avg_variance(s.p, s.q1, s.q2, &self.sums).ok().map(|r| r.variance),
        }
    }
}

/// Seeds of one Monte-Carlo trial, as they would be passed to the sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeeds {
    pub hash_seed: u64,
    pub bernoulli1: BernoulliSeed,
    pub bernoulli2: BernoulliSeed,
}

pub fn trial_seeds(seed: u64, trial: u64) -> TrialSeeds {
    let base = mix64(seed ^ mix64(trial.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    TrialSeeds {
        hash_seed: base,
        bernoulli1: BernoulliSeed::new(mix64(base ^ 1), 1),
        bernoulli2: BernoulliSeed::new(mix64(base ^ 1), 2),
    }
}

struct Draws {
    hash: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
}

fn draw(prep: &Prepared, seeds: &TrialSeeds) -> Draws {
    Draws {
        hash: prep
            .keys
            .iter()
            .map(|k| key_hash(k.as_bytes(), seeds.hash_seed))
            .collect(),
        u1: (0..prep.k1.len() as u64).map(|i| seeds.bernoulli1.uniform(i)).collect(),
        u2: (0..prep.k2.len() as u64).map(|i| seeds.bernoulli2.uniform(i)).collect(),
    }
}

/// Unscaled joined SUM and COUNT of one trial under `s`.
fn joined(prep: &Prepared, d: &Draws, s: &Scheme, x: &mut [f64], sw: &mut [f64]) -> (f64, f64) {
    x.iter_mut().for_each(|v| *v = 0.0);
    sw.iter_mut().for_each(|v| *v = 0.0);
    for (i, &k) in prep.k1.iter().enumerate() {
        if keep(d.hash[k as usize], d.u1[i], s.p, s.q1) {
            x[k as usize] += 1.0;
            sw[k as usize] += prep.w1[i];
        }
    }
    let (mut sum, mut count) = (0.0, 0.0);
    for (j, &k) in prep.k2.iter().enumerate() {
        if keep(d.hash[k as usize], d.u2[j], s.p, s.q2) {
            sum += sw[k as usize];
            count += x[k as usize];
        }
    }
    (sum, count)
}

/// Unscaled joined `(S, C)` of every trial for every scheme: `out[trial][scheme]`.
pub fn run_trials(prep: &Prepared, schemes: &[Scheme], beta: usize, seed: u64) -> Vec<Vec<(f64, f64)>> {
    (0..beta as u64)
        .into_par_iter()
        .map_init(
            || (vec![0.0; prep.keys.len()], vec![0.0; prep.keys.len()]),
            |(x, sw), t| {
                let d = draw(prep, &trial_seeds(seed, t));
                schemes.iter().map(|s| joined(prep, &d, s, x, sw)).collect()
            },
        )
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchEntry {
    pub scheme: Scheme,
    pub mc_variance: f64,
    pub predicted_variance: Option<f64>,
    pub mean_estimate: f64,
    pub truth: f64,
    /// `√(mc_variance) / |truth|`
    pub relative_error: f64,
    /// `(mean − truth)/(sd/√trials)`; a soft bias check, |z| ≤ 5 expected for
    /// COUNT and SUM.
    pub bias_z: f64,
    /// AVG trials with an empty sample join, excluded from the statistics.
    pub empty_joins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub dataset: String,
    pub agg: Aggregate,
    pub beta: usize,
    pub entries: Vec<BenchEntry>,
}

impl BenchReport {
    pub fn entry(&self, name: &str) -> Option<&BenchEntry> {
        self.entries.iter().find(|e| e.scheme.name == name)
    }
}

/// Sample mean and unbiased sample variance.
fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

/// Empirical variance of each scheme's estimator over `beta` seeded trials.
pub fn monte_carlo_variance(
    prep: &Prepared,
    dataset: &str,
    agg: Aggregate,
    schemes: &[Scheme],
    beta: usize,
    seed: u64,
) -> Result<BenchReport> {
    if beta < 2 {
        return Err(Error::Config("beta must be at least 2".into()));
    }
    let trials = run_trials(prep, schemes, beta, seed);
    let truth = prep.truth(agg);
    let entries = schemes
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let scale = 1.0 / (s.p * s.q1 * s.q2);
            let mut empty = 0;
            let values: Vec<f64> = trials
                .iter()
                .filter_map(|row| {
                    let (sum, count) = row[i];
                    match agg {
                        Aggregate::Count => Some(scale * count),
                        Aggregate::Sum => Some(scale * sum),
                        Aggregate::Avg if count > 0.0 => Some(sum / count),
                        Aggregate::Avg => {
                            empty += 1;
                            None
                        }
                    }
                })
                .collect();
            let (mean, var) = mean_var(&values);
            let se = (var / values.len() as f64).sqrt();
            BenchEntry {
                scheme: s.clone(),
                mc_variance: var,
                predicted_variance: prep.predicted_variance(agg, s),
                mean_estimate: mean,
                truth,
                relative_error: var.sqrt() / truth.abs(),
                bias_z: if se > 0.0 { (mean - truth) / se } else { 0.0 },
                empty_joins: empty,
            }
        })
        .collect();
    Ok(BenchReport {
        dataset: dataset.to_string(),
        agg,
        beta,
        entries,
    })
}

/// Fraction of the true join retained in each trial.
pub fn output_fractions(prep: &Prepared, scheme: &Scheme, beta: usize, seed: u64) -> Vec<f64> {
    let truth = prep.sums.join_count();
    run_trials(prep, std::slice::from_ref(scheme), beta, seed)
        .into_iter()
        .map(|row| row[0].1 / truth)
        .collect()
}

/// Desk-scale benchmark settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeskConfig {
    pub n: u64,
    pub domain: u64,
    pub eps: f64,
    pub beta: usize,
    pub seed: u64,
    pub baselines: bool,
    pub opt: bool,
}

impl Default for DeskConfig {
    fn default() -> Self {
        DeskConfig {
            n: 100_000,
            domain: 10_000,
            eps: 0.01,
            beta: 500,
            seed: 0,
            baselines: true,
            opt: true,
        }
    }
}

/// Both tables drawn from `kind`, `W` from the default aggregate spec.
pub fn desk_dataset(kind: DistKind, cfg: &DeskConfig, seed: u64) -> Result<Prepared> {
    let spec = DistSpec::new(kind, cfg.n, cfg.domain)?;
    let (t1, t2) = gen_synthetic(&spec, &spec, Some(&WSpec::default()), seed)?;
    Prepared::new(&t1, &t2, "J", "J", Some("W"))
}

/// The OPT plan (named `OPT`) and/or the six baselines for one dataset.
pub fn desk_schemes(prep: &Prepared, agg: Aggregate, cfg: &DeskConfig) -> Result<Vec<Scheme>> {
    let mut schemes = Vec::new();
    if cfg.opt {
        let plan = crate::planner::opt_central(agg, &prep.sums, cfg.eps, cfg.eps)?;
        schemes.push(Scheme::new("OPT", plan.p, plan.q1, plan.q2));
    }
    if cfg.baselines {
        schemes.extend(baseline_grid(cfg.eps)?);
    }
    Ok(schemes)
}

/// Runs every aggregate on every dataset kind.
pub fn desk_benchmark(kinds: &[DistKind], aggs: &[Aggregate], cfg: &DeskConfig) -> Result<Vec<BenchReport>> {
    let mut out = Vec::new();
    for (i, &kind) in kinds.iter().enumerate() {
        let prep = desk_dataset(kind, cfg, mix64(cfg.seed ^ i as u64))?;
        let name = dataset_name(kind);
        for &agg in aggs {
            let schemes = desk_schemes(&prep, agg, cfg)?;
            out.push(monte_carlo_variance(&prep, &name, agg, &schemes, cfg.beta, cfg.seed)?);
        }
    }
    Ok(out)
}

pub fn dataset_name(kind: DistKind) -> String {
    let one = match kind {
        DistKind::Uniform => "uniform".to_string(),
        DistKind::TruncatedNormal => "normal".to_string(),
        DistKind::PowerLaw { alpha } => format!("power{alpha}"),
    };
    format!("{one}/{one}")
}

/// Plain-text table of a report, one row per scheme.
pub fn format_report(r: &BenchReport) -> String {
    let mut out = format!("{} {} (beta = {})\n", r.dataset, r.agg, r.beta);
    out += &format!(
        "{:<6} {:>10} {:>10} {:>10} {:>14} {:>14} {:>10} {:>7}\n",
        "scheme", "p", "q1", "q2", "mc_variance", "predicted", "rel_err", "bias_z"
    );
    for e in &r.entries {
        out += &format!(
            "{:<6} {:>10.5} {:>10.5} {:>10.5} {:>14.6e} {:>14.6e} {:>9.3}% {:>7.2}\n",
            e.scheme.name,
            e.scheme.p,
            e.scheme.q1,
            e.scheme.q2,
            e.mc_variance,
            e.predicted_variance.unwrap_or(f64::NAN),
            100.0 * e.relative_error,
            e.bias_z
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::join_samples;
    use crate::sampler::{ubs_sample, UBSParams};
    use crate::stats::{build_histogram, max_frequency};

    #[test]
    fn generator_is_deterministic() {
        let s = DistSpec::new(DistKind::Uniform, 500, 50).unwrap();
        let a = gen_synthetic(&s, &s, Some(&WSpec::default()), 3).unwrap();
        let b = gen_synthetic(&s, &s, Some(&WSpec::default()), 3).unwrap();
        assert_eq!(a, b);
        let w = a.0.numeric("W").unwrap();
        assert!(w.iter().all(|&v| (1.0..=1000.0).contains(&v) && v.fract() == 0.0));
    }

    #[test]
    fn power_law_is_skewed() {
        let s = DistSpec::new(DistKind::PowerLaw { alpha: 1.5 }, 100_000, 10_000).unwrap();
        let (t1, _) = gen_synthetic(&s, &s, None, 1).unwrap();
        let f = max_frequency(&build_histogram(&t1, "J").unwrap()).unwrap().0;
        assert!(f as f64 >= 10.0 * 100_000.0 / 10_000.0);
    }

    #[test]
    fn single_key_domain_and_bad_specs() {
        let s = DistSpec::new(DistKind::TruncatedNormal, 20, 1).unwrap();
        let (t1, t2) = gen_synthetic(&s, &s, None, 1).unwrap();
        assert_eq!(build_histogram(&t1, "J").unwrap().distinct(), 1);
        assert_eq!(build_histogram(&t2, "J").unwrap().distinct(), 1);
        assert!(DistSpec::new(DistKind::PowerLaw { alpha: 1.0 }, 10, 10).is_err());
        assert!(DistSpec::new(DistKind::Uniform, 0, 10).is_err());
        assert_eq!("power:2".parse::<DistKind>().unwrap(), DistKind::PowerLaw { alpha: 2.0 });
    }

    #[test]
    fn worst_case_t2() {
        let h = JoinKeyHistogram::from_counts([(JoinKey::from_int(1), 5), (JoinKey::from_int(2), 3)]);
        let t = gen_worst_case_t2(&h, 100, 0.75, 1).unwrap();
        let h2 = build_histogram(&t, "J").unwrap();
        assert_eq!(h2.n(), 100);
        assert!(h2.get(&JoinKey::from_int(1)) >= 75);
        let point = gen_worst_case_t2(&h, 40, 1.0, 1).unwrap();
        assert_eq!(build_histogram(&point, "J").unwrap(), crate::planner::worst_case_b(&h, 40).unwrap());
        let flat = gen_worst_case_t2(&h, 40, 0.0, 1).unwrap();
        assert_eq!(flat.len(), 40);
    }

    #[test]
    fn baselines() {
        let g = baseline_grid(0.001).unwrap();
        let shown = [(0.001, 1.0), (0.0015, 0.6667), (0.003, 0.333), (0.333, 0.003), (0.6667, 0.0015), (1.0, 0.001)];
        for (s, (p, q)) in g.iter().zip(shown) {
            // the published table rounds 1/3 and 2/3
            assert!((s.p - p).abs() < 5e-4 && (s.q1 - q).abs() < 5e-4, "{s:?}");
        }
        for eps in [0.001, 0.01, 0.1, 0.5, 1.0] {
            for s in baseline_grid(eps).unwrap() {
                assert!((s.p * s.q1 - eps).abs() < 1e-12);
                assert!(s.p <= 1.0 && s.q1 <= 1.0);
            }
        }
        let g = baseline_grid(0.01).unwrap();
        assert_eq!((g[0].p, g[0].q1), (0.01, 1.0));
    }

    #[test]
    fn fast_path_matches_materialized_samples() {
        let s1 = DistSpec::new(DistKind::Uniform, 3000, 400).unwrap();
        let s2 = DistSpec::new(DistKind::PowerLaw { alpha: 1.8 }, 2000, 400).unwrap();
        let (t1, t2) = gen_synthetic(&s1, &s2, Some(&WSpec::default()), 9).unwrap();
        let prep = Prepared::new(&t1, &t2, "J", "J", Some("W")).unwrap();
        let scheme = Scheme::new("x", 0.4, 0.5, 0.3);
        let fast = run_trials(&prep, std::slice::from_ref(&scheme), 3, 77);
        for (t, row) in fast.iter().enumerate() {
            let seeds = trial_seeds(77, t as u64);
            let a = ubs_sample(&t1, "J", UBSParams::new(0.4, 0.5, seeds.hash_seed).unwrap(), seeds.bernoulli1).unwrap();
            let b = ubs_sample(&t2, "J", UBSParams::new(0.4, 0.3, seeds.hash_seed).unwrap(), seeds.bernoulli2).unwrap();
            let pairs = join_samples(&a, &b).unwrap();
            let w = a.rows.numeric("W").unwrap();
            let sum: f64 = pairs.iter().map(|j| w[j.left]).sum();
            assert_eq!(row[0], (sum, pairs.len() as f64));
        }
    }

    #[test]
    fn full_rate_has_zero_variance() {
        let s = DistSpec::new(DistKind::Uniform, 300, 30).unwrap();
        let (t1, t2) = gen_synthetic(&s, &s, Some(&WSpec::default()), 2).unwrap();
        let prep = Prepared::new(&t1, &t2, "J", "J", Some("W")).unwrap();
        for agg in [Aggregate::Count, Aggregate::Sum, Aggregate::Avg] {
            let r = monte_carlo_variance(&prep, "u", agg, &[Scheme::new("full", 1.0, 1.0, 1.0)], 10, 1).unwrap();
            assert!(r.entries[0].mc_variance <= 1e-20 * prep.truth(agg).powi(2));
            assert!((r.entries[0].mean_estimate - prep.truth(agg)).abs() <= 1e-9 * prep.truth(agg));
        }
    }
}
