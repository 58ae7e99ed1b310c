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

//! UBS and SUBS sample materialization.
//!
//! The universe stage keeps a tuple iff `h(key) < p` for a hash `h` that is a
//! function of the key and a shared seed, so two tables sampled with the same
//! seed and rate keep exactly the same key set. The Bernoulli stage draws one
//! uniform per row from a counter-based generator keyed by
//! `(seed, table id, row index)`; decisions do not depend on row order or on
//! how rows are split across threads.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{JoinKey, Table};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer; a bijection on `u64` with full avalanche.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Top 53 bits as a uniform in `[0, 1)`.
pub fn unit_interval(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Hash of a key's bytes under `seed`, uniform on `[0, 1)`.
pub fn key_hash(key: &[u8], seed: u64) -> f64 {
    unit_interval(key_hash64(key, seed))
}

/// 64-bit hash of a key's bytes under `seed`.
pub fn key_hash64(key: &[u8], seed: u64) -> u64 {
    let mut h = mix64(seed ^ (key.len() as u64).wrapping_mul(GOLDEN));
    for chunk in key.chunks(8) {
        let mut word = [0u8; 8];
        word[..chunk.len()].copy_from_slice(chunk);
        h = mix64(h.wrapping_add(GOLDEN) ^ u64::from_le_bytes(word));
    }
    mix64(h)
}

/// Seed of the per-row Bernoulli stage.
///
/// `table_id` separates the two tables' streams when they share `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BernoulliSeed {
    pub seed: u64,
    pub table_id: u64,
}

impl BernoulliSeed {
    pub fn new(seed: u64, table_id: u64) -> Self {
        BernoulliSeed { seed, table_id }
    }

    /// The uniform draw for row `row`.
    pub fn uniform(&self, row: u64) -> f64 {
        let stream = mix64(self.seed ^ mix64(self.table_id.wrapping_add(GOLDEN)));
        unit_interval(mix64(stream.wrapping_add(row.wrapping_mul(GOLDEN))))
    }
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} = {v} is outside (0, 1]")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UBSParams {
    pub p: f64,
    pub q: f64,
    pub hash_seed: u64,
}

impl UBSParams {
    pub fn new(p: f64, q: f64, hash_seed: u64) -> Result<Self> {
        check_rate("p", p)?;
        check_rate("q", q)?;
        Ok(UBSParams { p, q, hash_seed })
    }

    /// Effective sampling rate `p·q`.
    pub fn eps(&self) -> f64 {
        self.p * self.q
    }
}

/// UBS decision for one row given its key hash and Bernoulli draw.
#[inline]
pub(crate) fn keep(hash: f64, u: f64, p: f64, q: f64) -> bool {
    hash < p && u < q
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum SampleParams {
    Ubs(UBSParams),
    Subs {
        group_column: String,
        hash_seed: u64,
        groups: BTreeMap<String, (f64, f64)>,
    },
}

impl SampleParams {
    pub fn hash_seed(&self) -> u64 {
        match self {
            SampleParams::Ubs(p) => p.hash_seed,
            SampleParams::Subs { hash_seed, .. } => *hash_seed,
        }
    }
}

/// Everything besides the rows that identifies a sample; written as the
/// sidecar JSON of a sample CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub key_column: String,
    pub params: SampleParams,
    pub bernoulli_seed: BernoulliSeed,
    pub source_n: u64,
    /// Source row index of every retained row, ascending.
    pub row_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub rows: Table,
    pub meta: SampleMeta,
}

impl Sample {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn params(&self) -> &SampleParams {
        &self.meta.params
    }

    /// UBS parameters; SUBS samples must first be narrowed with [`Sample::group`].
    pub fn ubs_params(&self) -> Result<UBSParams> {
        match &self.meta.params {
            SampleParams::Ubs(p) => Ok(*p),
            SampleParams::Subs { .. } => Err(Error::Config(
                "a stratified sample has per-group rates; select one group first".into(),
            )),
        }
    }

    /// The rows of one SUBS group as a UBS sample with that group's rates.
    pub fn group(&self, group: &str) -> Result<Sample> {
        let SampleParams::Subs {
            group_column,
            hash_seed,
            groups,
        } = &self.meta.params
        else {
            return Err(Error::Config("sample is not stratified".into()));
        };
        let &(p, q) = groups
            .get(group)
            .ok_or_else(|| Error::schema(format!("unknown group `{group}`")))?;
        let gi = self.rows.column_index(group_column)?;
        let keep: Vec<usize> = (0..self.rows.len())
            .filter(|&i| self.rows.rows()[i][gi] == group)
            .collect();
        Ok(Sample {
            rows: self.rows.select(keep.iter().copied()),
            meta: SampleMeta {
                key_column: self.meta.key_column.clone(),
                params: SampleParams::Ubs(UBSParams::new(p, q, *hash_seed)?),
                bernoulli_seed: self.meta.bernoulli_seed,
                source_n: self.meta.source_n,
                row_ids: keep.iter().map(|&i| self.meta.row_ids[i]).collect(),
            },
        })
    }

    /// Checks that every retained row's key hashes below its universe rate.
    pub fn verify_universe(&self) -> Result<()> {
        let keys = self.rows.keys(&self.meta.key_column)?;
        let seed = self.meta.params.hash_seed();
        let rates: Vec<f64> = match &self.meta.params {
            SampleParams::Ubs(p) => vec![p.p; keys.len()],
            SampleParams::Subs {
                group_column,
                groups,
                ..
            } => {
                let gi = self.rows.column_index(group_column)?;
                self.rows
                    .rows()
                    .iter()
                    .map(|r| groups.get(&r[gi]).map_or(0.0, |g| g.0))
                    .collect()
            }
        };
        for (k, p) in keys.iter().zip(rates) {
            if key_hash(k.as_bytes(), seed) >= p {
                return Err(Error::Validation(format!(
                    "key {k} is outside the universe of rate {p}"
                )));
            }
        }
        Ok(())
    }

    /// Writes the rows as CSV and the metadata as `<path>.json`.
    pub fn write(&self, csv_path: impl AsRef<std::path::Path>) -> Result<()> {
        let csv_path = csv_path.as_ref();
        self.rows.write_csv(csv_path)?;
        let meta = serde_json::to_string_pretty(&self.meta)?;
        std::fs::write(sidecar_path(csv_path), meta + "\n")?;
        Ok(())
    }

    pub fn read(csv_path: impl AsRef<std::path::Path>) -> Result<Sample> {
        let csv_path = csv_path.as_ref();
        Sample::read_with(csv_path, sidecar_path(csv_path))
    }

    /// Like [`Sample::read`] with the metadata at an explicit path.
    pub fn read_with(csv_path: impl AsRef<std::path::Path>, meta_path: impl AsRef<std::path::Path>) -> Result<Sample> {
        let rows = Table::read_csv(csv_path)?;
        let meta: SampleMeta = serde_json::from_str(&std::fs::read_to_string(meta_path)?)?;
        if meta.row_ids.len() != rows.len() {
            return Err(Error::Validation(format!(
                "sidecar lists {} rows but the sample has {}",
                meta.row_ids.len(),
                rows.len()
            )));
        }
        Ok(Sample { rows, meta })
    }
}

pub fn sidecar_path(csv_path: &std::path::Path) -> std::path::PathBuf {
    let mut s = csv_path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

fn keep_rows(n: usize, decide: impl Fn(usize) -> bool + Sync) -> Vec<usize> {
    (0..n).into_par_iter().filter(|&i| decide(i)).collect()
}

/// Draws a UBS sample of `table`.
pub fn ubs_sample(
    table: &Table,
    key_column: &str,
    params: UBSParams,
    bernoulli_seed: BernoulliSeed,
) -> Result<Sample> {
    let keys = table.keys(key_column)?;
    let ids = keep_rows(keys.len(), |i| {
        keep(
            key_hash(keys[i].as_bytes(), params.hash_seed),
            bernoulli_seed.uniform(i as u64),
            params.p,
            params.q,
        )
    });
    Ok(Sample {
        rows: table.select(ids.iter().copied()),
        meta: SampleMeta {
            key_column: key_column.to_string(),
            params: SampleParams::Ubs(params),
            bernoulli_seed,
            source_n: table.len() as u64,
            row_ids: ids,
        },
    })
}

/// Size and number of distinct join keys of one stratum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub size: u64,
    pub distinct_keys: u64,
}

pub fn group_summaries(table: &Table, key_column: &str, group_column: &str) -> Result<Vec<GroupSummary>> {
    let keys = table.keys(key_column)?;
    let gi = table.column_index(group_column)?;
    let mut groups: BTreeMap<&str, (u64, BTreeSet<&JoinKey>)> = BTreeMap::new();
    for (row, key) in table.rows().iter().zip(&keys) {
        let e = groups.entry(row[gi].as_str()).or_default();
        e.0 += 1;
        e.1.insert(key);
    }
    Ok(groups
        .into_iter()
        .map(|(g, (size, ks))| GroupSummary {
            group: g.to_string(),
            size,
            distinct_keys: ks.len() as u64,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupClass {
    Large,
    Small,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPlan {
    pub group: String,
    pub class: GroupClass,
    pub size: u64,
    pub distinct_keys: u64,
    pub epsilon: f64,
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(clippy::upper_case_acronyms)]
pub struct SUBSPlan {
    pub groups: Vec<GroupPlan>,
    /// Universe rate shared by all large groups; `None` when there are none.
    pub p: Option<f64>,
    pub k_key: u64,
    pub k_tuple: u64,
    pub epsilon: f64,
}

impl SUBSPlan {
    pub fn get(&self, group: &str) -> Option<&GroupPlan> {
        self.groups.iter().find(|g| g.group == group)
    }
}

/// Allocates the SUBS budget across groups.
///
/// Groups with at least `k_key` distinct keys are large and share the universe
/// rate `shared_p` (default: the smallest rate keeping every `q_i ≤ 1` and
/// `p ≥ 1/k_key`). Small groups use Bernoulli sampling only.
pub fn subs_plan(
    groups: &[GroupSummary],
    epsilon: f64,
    k_key: u64,
    k_tuple: u64,
    shared_p: Option<f64>,
) -> Result<SUBSPlan> {
    check_rate("epsilon", epsilon)?;
    if k_key == 0 || k_tuple == 0 {
        return Err(Error::domain("k_key and k_tuple must be at least 1"));
    }
    if let Some(g) = groups.iter().find(|g| g.size == 0) {
        return Err(Error::domain(format!("group `{}` is empty", g.group)));
    }
    let is_large = |g: &GroupSummary| g.distinct_keys >= k_key;
    let (mut n_b, mut n_s, mut m_b, mut m_s) = (0u64, 0u64, 0u64, 0u64);
    for g in groups {
        if is_large(g) {
            n_b += g.size;
            m_b += 1;
        } else {
            n_s += g.size;
            m_s += 1;
        }
    }
    let kt = k_tuple as f64;
    for (label, m, n) in [("small", m_s, n_s), ("large", m_b, n_b)] {
        if m > 0 && m as f64 * kt > epsilon * n as f64 {
            return Err(Error::Infeasible(format!(
                "{label} groups: M·k_tuple = {} exceeds ε·N = {}",
                m as f64 * kt,
                epsilon * n as f64
            )));
        }
    }
    let residual_s = if m_s > 0 { epsilon - m_s as f64 * kt / n_s as f64 } else { 0.0 };
    let residual_b = if m_b > 0 { epsilon - m_b as f64 * kt / n_b as f64 } else { 0.0 };

    let eps_of = |g: &GroupSummary| {
        let residual = if is_large(g) { residual_b } else { residual_s };
        (kt / g.size as f64 + residual).min(1.0)
    };
    let floor = groups
        .iter()
        .filter(|g| is_large(g))
        .map(eps_of)
        .fold(1.0 / k_key as f64, f64::max);
    let p = match (m_b, shared_p) {
        (0, _) => None,
        (_, Some(p)) => {
            check_rate("shared p", p)?;
            if p < floor - 1e-12 {
                return Err(Error::domain(format!(
                    "shared p = {p} is below the lower bound {floor}"
                )));
            }
            Some(p.max(floor))
        }
        (_, None) => Some(floor),
    };
    let plans = groups
        .iter()
        .map(|g| {
            let epsilon = eps_of(g);
            let (class, gp) = if is_large(g) {
                (GroupClass::Large, p.unwrap_or(1.0))
            } else {
                (GroupClass::Small, 1.0)
            };
            GroupPlan {
                group: g.group.clone(),
                class,
                size: g.size,
                distinct_keys: g.distinct_keys,
                epsilon,
                p: gp,
                q: (epsilon / gp).min(1.0),
            }
        })
        .collect();
    Ok(SUBSPlan {
        groups: plans,
        p,
        k_key,
        k_tuple,
        epsilon,
    })
}

/// Draws a SUBS sample: each group is UBS-sampled with its own `(p_i, q_i)`
/// under one shared hash seed.
pub fn subs_sample(
    table: &Table,
    key_column: &str,
    group_column: &str,
    plan: &SUBSPlan,
    hash_seed: u64,
    bernoulli_seed: BernoulliSeed,
) -> Result<Sample> {
    let keys = table.keys(key_column)?;
    let gi = table.column_index(group_column)?;
    let rates: BTreeMap<&str, (f64, f64)> = plan
        .groups
        .iter()
        .map(|g| (g.group.as_str(), (g.p, g.q)))
        .collect();
    let row_rates = table
        .rows()
        .iter()
        .map(|r| {
            rates
                .get(r[gi].as_str())
                .copied()
                .ok_or_else(|| Error::schema(format!("group `{}` is not in the plan", r[gi])))
        })
        .collect::<Result<Vec<_>>>()?;
    let ids = keep_rows(keys.len(), |i| {
        let (p, q) = row_rates[i];
        keep(
            key_hash(keys[i].as_bytes(), hash_seed),
            bernoulli_seed.uniform(i as u64),
            p,
            q,
        )
    });
    Ok(Sample {
        rows: table.select(ids.iter().copied()),
        meta: SampleMeta {
            key_column: key_column.to_string(),
            params: SampleParams::Subs {
                group_column: group_column.to_string(),
                hash_seed,
                groups: rates.into_iter().map(|(g, r)| (g.to_string(), r)).collect(),
            },
            bernoulli_seed,
            source_n: table.len() as u64,
            row_ids: ids,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(group: &str, size: u64, distinct_keys: u64) -> GroupSummary {
        GroupSummary {
            group: group.into(),
            size,
            distinct_keys,
        }
    }

    #[test]
    fn key_hash_is_deterministic_and_seeded() {
        assert_eq!(key_hash(b"42", 7), key_hash(b"42", 7));
        assert_ne!(key_hash(b"42", 7), key_hash(b"42", 8));
        assert_ne!(key_hash(b"42", 7), key_hash(b"24", 7));
        assert_ne!(key_hash(b"", 7), key_hash(b"\0", 7));
    }

    #[test]
    fn key_hash_mean_is_uniform() {
        let n = 1_000_000u64;
        let mean: f64 = (0..n)
            .map(|i| key_hash(mix64(i).to_string().as_bytes(), 12345))
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 0.002, "mean {mean}");
    }

    #[test]
    fn key_hash_seed_avalanche() {
        let n = 100_000u64;
        let changed = (0..n)
            .filter(|i| {
                let k = i.to_string();
                key_hash(k.as_bytes(), 1) != key_hash(k.as_bytes(), 2)
            })
            .count();
        assert!(changed as f64 >= 0.999 * n as f64);
    }

    #[test]
    fn full_rate_keeps_everything() {
        let t = Table::from_keys("J", &[1, 2, 2, 3]);
        let s = ubs_sample(&t, "J", UBSParams::new(1.0, 1.0, 9).unwrap(), BernoulliSeed::new(1, 1)).unwrap();
        assert_eq!(s.rows, t);
        assert_eq!(s.meta.row_ids, vec![0, 1, 2, 3]);
    }

    #[test]
    fn universe_only_size_concentrates() {
        let keys: Vec<i64> = (1..=10_000).collect();
        let t = Table::from_keys("J", &keys);
        let s = ubs_sample(&t, "J", UBSParams::new(0.5, 1.0, 3).unwrap(), BernoulliSeed::new(1, 1)).unwrap();
        assert!((s.len() as f64 - 5000.0).abs() <= 3.0 * 50.0);
        s.verify_universe().unwrap();
    }

    #[test]
    fn bernoulli_only_size_concentrates() {
        let t = Table::from_keys("J", &vec![1; 100_000]);
        let s = ubs_sample(&t, "J", UBSParams::new(1.0, 0.1, 3).unwrap(), BernoulliSeed::new(5, 1)).unwrap();
        let sd = (100_000.0f64 * 0.1 * 0.9).sqrt();
        assert!((s.len() as f64 - 10_000.0).abs() <= 3.0 * sd);
    }

    #[test]
    fn shared_seed_coordinates_universes() {
        let t1 = Table::from_keys("J", &(0..2000).map(|i| i % 500).collect::<Vec<_>>());
        let t2 = Table::from_keys("J", &(0..1000).map(|i| (i * 7) % 600).collect::<Vec<_>>());
        let p = UBSParams::new(0.3, 1.0, 77).unwrap();
        let s1 = ubs_sample(&t1, "J", p, BernoulliSeed::new(1, 1)).unwrap();
        let s2 = ubs_sample(&t2, "J", p, BernoulliSeed::new(1, 2)).unwrap();
        let k1: BTreeSet<_> = s1.rows.keys("J").unwrap().into_iter().collect();
        let k2: BTreeSet<_> = s2.rows.keys("J").unwrap().into_iter().collect();
        let all1: BTreeSet<_> = t1.keys("J").unwrap().into_iter().collect();
        let all2: BTreeSet<_> = t2.keys("J").unwrap().into_iter().collect();
        for k in all1.intersection(&all2) {
            assert_eq!(k1.contains(k), k2.contains(k), "key {k}");
        }
    }

    #[test]
    fn invalid_rates_rejected() {
        assert!(UBSParams::new(0.0, 0.5, 1).is_err());
        assert!(UBSParams::new(0.5, 1.5, 1).is_err());
        assert!(UBSParams::new(f64::NAN, 0.5, 1).is_err());
    }

    #[test]
    fn subs_plan_example() {
        let groups = [summary("G1", 100, 5), summary("G2", 50, 10), summary("G3", 10, 2)];
        let plan = subs_plan(&groups, 0.3, 3, 2, None).unwrap();
        let eps: Vec<f64> = plan.groups.iter().map(|g| g.epsilon).collect();
        let residual = 0.3 - 4.0 / 150.0;
        assert!((eps[0] - (0.02 + residual)).abs() < 1e-12);
        assert!((eps[1] - (0.04 + residual)).abs() < 1e-12);
        assert!((eps[2] - 0.3).abs() < 1e-12);
        assert_eq!(plan.groups[2].class, GroupClass::Small);
        assert_eq!((plan.groups[2].p, plan.groups[2].q), (1.0, eps[2]));
        let p = plan.p.unwrap();
        assert!((p - 1.0 / 3.0).abs() < 1e-12);
        for g in &plan.groups[..2] {
            assert_eq!(g.class, GroupClass::Large);
            assert!((g.p * g.q - g.epsilon).abs() < 1e-12);
        }
        let spent: f64 = plan.groups.iter().map(|g| g.epsilon * g.size as f64).sum();
        assert!(spent <= 0.3 * 160.0 + 1e-9 * 160.0);
    }

    #[test]
    fn subs_plan_infeasible() {
        let err = subs_plan(&[summary("G1", 10, 2)], 0.1, 3, 2, None).unwrap_err();
        assert!(matches!(err, Error::Infeasible(m) if m.contains("small")));
    }

    #[test]
    fn subs_plan_boundary_and_shared_p() {
        let plan = subs_plan(&[summary("G", 40, 8)], 0.05, 3, 2, None).unwrap();
        assert!((plan.groups[0].epsilon - 0.05).abs() < 1e-15);
        assert!((plan.p.unwrap() - 1.0 / 3.0).abs() < 1e-15);

        assert!(subs_plan(&[summary("G", 40, 8)], 0.05, 3, 2, Some(0.1)).is_err());
        let plan = subs_plan(&[summary("G", 40, 8)], 0.05, 3, 2, Some(0.5)).unwrap();
        assert!((plan.groups[0].q - 0.1).abs() < 1e-15);
    }

    #[test]
    fn subs_sample_full_rates_and_unknown_group() {
        let t = Table::with_rows(
            vec!["J".into(), "G".into()],
            vec![
                vec!["1".into(), "a".into()],
                vec!["2".into(), "b".into()],
                vec!["2".into(), "a".into()],
            ],
        )
        .unwrap();
        let full = |g: &str| GroupPlan {
            group: g.into(),
            class: GroupClass::Small,
            size: 1,
            distinct_keys: 1,
            epsilon: 1.0,
            p: 1.0,
            q: 1.0,
        };
        let mut plan = SUBSPlan {
            groups: vec![full("a"), full("b")],
            p: None,
            k_key: 1,
            k_tuple: 1,
            epsilon: 1.0,
        };
        let s = subs_sample(&t, "J", "G", &plan, 1, BernoulliSeed::new(1, 1)).unwrap();
        assert_eq!(s.rows, t);
        assert_eq!(s.group("a").unwrap().len(), 2);
        s.verify_universe().unwrap();

        plan.groups.pop();
        let err = subs_sample(&t, "J", "G", &plan, 1, BernoulliSeed::new(1, 1)).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn sample_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = Table::from_keys_and_values("J", "W", &[(1, 1.5), (2, 2.0), (3, 7.0)]);
        let s = ubs_sample(&t, "J", UBSParams::new(0.7, 0.9, 4).unwrap(), BernoulliSeed::new(2, 1)).unwrap();
        let path = dir.path().join("s.csv");
        s.write(&path).unwrap();
        assert_eq!(Sample::read(&path).unwrap(), s);
    }
}
