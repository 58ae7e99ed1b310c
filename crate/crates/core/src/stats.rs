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

//! Frequency and moment statistics of join columns.
//!
//! Every variance formula in this crate is a linear combination of cross sums
//! of the form `Σ_v f(T1 at v) · g(T2 at v)`. The types here compute those sums
//! once from the tables (or from a serialized statistics file) so the
//! estimator and planner never touch raw rows.
//!
//! Per-key aggregate variances are *population* variances (divide by `a_v`):
//! the tuple values are fixed constants of the table, not draws from a model.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{JoinKey, Table};

/// Per-key tuple counts of one table's join column.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct JoinKeyHistogram {
    entries: BTreeMap<JoinKey, u64>,
    n: u64,
}

impl JoinKeyHistogram {
    /// Builds a histogram from `(key, count)` pairs; zero counts are dropped and
    /// repeated keys accumulate.
    pub fn from_counts<K: Into<JoinKey>>(counts: impl IntoIterator<Item = (K, u64)>) -> Self {
        let mut h = JoinKeyHistogram::default();
        for (k, c) in counts {
            h.add(k.into(), c);
        }
        h
    }

    pub fn from_keys<'a>(keys: impl IntoIterator<Item = &'a JoinKey>) -> Self {
        let mut h = JoinKeyHistogram::default();
        for k in keys {
            h.add(k.clone(), 1);
        }
        h
    }

    fn add(&mut self, key: JoinKey, count: u64) {
        if count == 0 {
            return;
        }
        *self.entries.entry(key).or_insert(0) += count;
        self.n += count;
    }

    pub fn get(&self, key: &JoinKey) -> u64 {
        self.entries.get(key).copied().unwrap_or(0)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn distinct(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in ascending key order.
    pub fn iter(&self) -> impl Iterator<Item = (&JoinKey, u64)> {
        self.entries.iter().map(|(k, c)| (k, *c))
    }

    /// The key with the largest count; ties go to the smallest key.
    pub fn argmax(&self) -> Option<(&JoinKey, u64)> {
        let mut best: Option<(&JoinKey, u64)> = None;
        for (k, c) in self.iter() {
            if best.is_none_or(|(_, bc)| c > bc) {
                best = Some((k, c));
            }
        }
        best
    }
}

/// Counts rows per canonical key of `key_column`.
pub fn build_histogram(table: &Table, key_column: &str) -> Result<JoinKeyHistogram> {
    let keys = table.keys(key_column)?;
    Ok(JoinKeyHistogram::from_keys(keys.iter()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MaxFrequency(pub u64);

pub fn max_frequency(h: &JoinKeyHistogram) -> Result<MaxFrequency> {
    h.argmax()
        .map(|(_, c)| MaxFrequency(c))
        .ok_or_else(|| Error::domain("maximum frequency of an empty histogram"))
}

/// Four cross sums `t_ij = Σ_v x_v^(i) y_v^(j)` that every UBS variance
/// formula is built from.
///
/// For COUNT these are the frequency moments `γ_ij = Σ a_v^i b_v^j`; for SUM
/// they are `(β₄, β₁, β₂, β₃)`; for the SUM/COUNT covariance they are the
/// mixed sums `Σ a_v·(a_v μ_v)·b_v^j` and `Σ (a_v μ_v) b_v^j`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MomentTerms {
    pub t22: f64,
    pub t21: f64,
    pub t12: f64,
    pub t11: f64,
}

impl MomentTerms {
    /// `t22 − t21 − t12 + t11`, the coefficient of `1/p` when both tables share
    /// one universe rate.
    pub fn inv_p_coefficient(&self) -> f64 {
        self.t22 - self.t21 - self.t12 + self.t11
    }

    fn accumulate(&mut self, other: MomentTerms) {
        self.t22 += other.t22;
        self.t21 += other.t21;
        self.t12 += other.t12;
        self.t11 += other.t11;
    }
}

/// Frequency moments `γ_{i,j} = Σ_v a_v^i b_v^j` for `i, j ∈ {1, 2}`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Moments {
    #[serde(rename = "11")]
    pub g11: f64,
    #[serde(rename = "12")]
    pub g12: f64,
    #[serde(rename = "21")]
    pub g21: f64,
    #[serde(rename = "22")]
    pub g22: f64,
}

impl Moments {
    pub fn terms(&self) -> MomentTerms {
        MomentTerms {
            t22: self.g22,
            t21: self.g21,
            t12: self.g12,
            t11: self.g11,
        }
    }

    /// Exact join size.
    pub fn join_size(&self) -> f64 {
        self.g11
    }
}

/// Cross moments of two histograms; keys missing from either side contribute 0.
pub fn cross_moments(h1: &JoinKeyHistogram, h2: &JoinKeyHistogram) -> Moments {
    let (small, large, swapped) = if h1.distinct() <= h2.distinct() {
        (h1, h2, false)
    } else {
        (h2, h1, true)
    };
    let mut m = Moments::default();
    for (k, c) in small.iter() {
        let other = large.get(k);
        if other == 0 {
            continue;
        }
        let (a, b) = if swapped {
            (other as f64, c as f64)
        } else {
            (c as f64, other as f64)
        };
        m.g11 += a * b;
        m.g12 += a * b * b;
        m.g21 += a * a * b;
        m.g22 += a * a * b * b;
    }
    m
}

/// Count, mean and population variance of the aggregate column for one key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyAggregate {
    pub key: JoinKey,
    pub a: u64,
    pub mu: f64,
    pub sigma2: f64,
}

impl KeyAggregate {
    /// `Σ W` over the key's tuples.
    pub fn sum(&self) -> f64 {
        self.a as f64 * self.mu
    }

    /// `Σ W²` over the key's tuples.
    pub fn sum_sq(&self) -> f64 {
        self.a as f64 * (self.mu * self.mu + self.sigma2)
    }
}

/// Per-key aggregate statistics of the table that holds the aggregate column.
///
/// This is everything one party knows about its own table; it does not depend
/// on the other table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TableAggregates {
    records: Vec<KeyAggregate>,
    n: u64,
}

impl TableAggregates {
    pub fn from_table(table: &Table, key_column: &str, agg_column: &str) -> Result<Self> {
        let keys = table.keys(key_column)?;
        let values = table.numeric(agg_column)?;
        Ok(Self::from_pairs(keys.into_iter().zip(values)))
    }

    /// Groups `(key, W)` pairs and computes per-key mean and population variance.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (JoinKey, f64)>) -> Self {
        // Welford accumulators: (count, mean, M2)
        let mut acc: BTreeMap<JoinKey, (u64, f64, f64)> = BTreeMap::new();
        let mut n = 0;
        for (k, w) in pairs {
            n += 1;
            let e = acc.entry(k).or_insert((0, 0.0, 0.0));
            e.0 += 1;
            let delta = w - e.1;
            e.1 += delta / e.0 as f64;
            e.2 += delta * (w - e.1);
        }
        let records = acc
            .into_iter()
            .map(|(key, (a, mean, m2))| KeyAggregate {
                key,
                a,
                mu: mean,
                sigma2: if a > 1 { (m2 / a as f64).max(0.0) } else { 0.0 },
            })
            .collect();
        TableAggregates { records, n }
    }

    pub fn from_records(records: Vec<KeyAggregate>) -> Self {
        let mut records = records;
        records.sort_by(|x, y| x.key.cmp(&y.key));
        let n = records.iter().map(|r| r.a).sum();
        TableAggregates { records, n }
    }

    pub fn records(&self) -> &[KeyAggregate] {
        &self.records
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn histogram(&self) -> JoinKeyHistogram {
        JoinKeyHistogram::from_counts(self.records.iter().map(|r| (r.key.clone(), r.a)))
    }
}

/// Aggregate statistics of T1 paired with T2's frequencies: per-key
/// `(a_v, μ_v, σ_v²)` plus the derived `β₁..β₄`.
///
/// `β₁ = Σ a²μ²b`, `β₂ = Σ a(μ²+σ²)b²`, `β₃ = Σ a(μ²+σ²)b`, `β₄ = Σ a²μ²b²`.
#[derive(Debug, Clone, PartialEq)]
pub struct AggStats {
    pub records: Vec<KeyAggregate>,
    /// `[β₁, β₂, β₃, β₄]`
    pub beta: [f64; 4],
}

impl AggStats {
    pub fn new(aggregates: &TableAggregates, other: &JoinKeyHistogram) -> Self {
        let sums = CrossSums::new(aggregates, other);
        AggStats {
            records: aggregates.records().to_vec(),
            beta: sums.beta(),
        }
    }

    /// SUM variance terms in the same layout as the COUNT moments.
    pub fn terms(&self) -> MomentTerms {
        let [b1, b2, b3, b4] = self.beta;
        MomentTerms {
            t22: b4,
            t21: b1,
            t12: b2,
            t11: b3,
        }
    }
}

pub fn agg_stats(
    table: &Table,
    key_column: &str,
    agg_column: &str,
    other: &JoinKeyHistogram,
) -> Result<AggStats> {
    let aggregates = TableAggregates::from_table(table, key_column, agg_column)?;
    Ok(AggStats::new(&aggregates, other))
}

/// The T1-side factors of one key that enter the cross sums: `a`, `a²`,
/// `ΣW`, `(ΣW)²`, `ΣW²` and `a·ΣW`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct KeyFactors {
    pub a: f64,
    pub a_sq: f64,
    pub s1: f64,
    pub s1_sq: f64,
    pub s2: f64,
    pub a_s1: f64,
}

impl KeyFactors {
    pub fn exact(r: &KeyAggregate) -> Self {
        let a = r.a as f64;
        let s1 = r.sum();
        KeyFactors {
            a,
            a_sq: a * a,
            s1,
            s1_sq: s1 * s1,
            s2: r.sum_sq(),
            a_s1: a * s1,
        }
    }
}

/// All cross sums needed for COUNT, SUM and the Taylor AVG variance.
///
/// `count` holds the `γ`s, `sum` the `β`s (as [`AggStats::terms`]), and `cov`
/// the sums entering `Cov[S, C]`. `cov.t11 = Σ a_v μ_v b_v` and
/// `count.t11 = Σ a_v b_v` are the unscaled expectations of the joined SUM and
/// COUNT.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CrossSums {
    pub count: MomentTerms,
    pub sum: MomentTerms,
    pub cov: MomentTerms,
}

impl CrossSums {
    pub fn new(aggregates: &TableAggregates, other: &JoinKeyHistogram) -> Self {
        let mut sums = CrossSums::default();
        for r in aggregates.records() {
            let b = other.get(&r.key) as f64;
            if b == 0.0 {
                continue;
            }
            sums.add_key(&KeyFactors::exact(r), b, b * b);
        }
        sums
    }

    /// Adds one key's contribution from its T1 factors and T2's `b`, `b²`.
    ///
    /// `b_sq` is passed separately so sample-based plug-ins can supply an
    /// unbiased estimate of `b²` that is not the square of the estimate of `b`.
    pub(crate) fn add_key(&mut self, f: &KeyFactors, b: f64, b_sq: f64) {
        self.add_terms(
            MomentTerms {
                t22: f.a_sq * b_sq,
                t21: f.a_sq * b,
                t12: f.a * b_sq,
                t11: f.a * b,
            },
            MomentTerms {
                t22: f.s1_sq * b_sq,
                t21: f.s1_sq * b,
                t12: f.s2 * b_sq,
                t11: f.s2 * b,
            },
            MomentTerms {
                t22: f.a_s1 * b_sq,
                t21: f.a_s1 * b,
                t12: f.s1 * b_sq,
                t11: f.s1 * b,
            },
        );
    }

    pub(crate) fn add_terms(&mut self, count: MomentTerms, sum: MomentTerms, cov: MomentTerms) {
        self.count.accumulate(count);
        self.sum.accumulate(sum);
        self.cov.accumulate(cov);
    }

    pub fn moments(&self) -> Moments {
        Moments {
            g11: self.count.t11,
            g12: self.count.t12,
            g21: self.count.t21,
            g22: self.count.t22,
        }
    }

    /// `[β₁, β₂, β₃, β₄]`
    pub fn beta(&self) -> [f64; 4] {
        [self.sum.t21, self.sum.t12, self.sum.t11, self.sum.t22]
    }

    /// `Σ a_v μ_v b_v`, the true SUM over the join.
    pub fn join_sum(&self) -> f64 {
        self.cov.t11
    }

    /// `Σ a_v b_v`, the true COUNT of the join.
    pub fn join_count(&self) -> f64 {
        self.count.t11
    }
}

/// A totally ordered filter value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FilterValue(f64);

impl FilterValue {
    pub fn new(v: f64) -> Option<Self> {
        (!v.is_nan()).then_some(FilterValue(v))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Eq for FilterValue {}

impl PartialOrd for FilterValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FilterValue {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Joint counts of join key and one or more filter columns of T1.
///
/// A filter point `x` is a vector with one value per filter column; with a
/// single column this is the ordinary `a_{v,x}` / `c_x` layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalHistogram {
    filter_columns: Vec<String>,
    cells: BTreeMap<JoinKey, BTreeMap<Vec<FilterValue>, u64>>,
    domains: Vec<Vec<FilterValue>>,
    c_x: BTreeMap<Vec<FilterValue>, u64>,
    n1: u64,
}

pub fn conditional_histogram(
    table: &Table,
    key_column: &str,
    filter_column: &str,
) -> Result<ConditionalHistogram> {
    ConditionalHistogram::from_table(table, key_column, &[filter_column])
}

impl ConditionalHistogram {
    pub fn from_table(table: &Table, key_column: &str, filter_columns: &[&str]) -> Result<Self> {
        if filter_columns.is_empty() {
            return Err(Error::schema("at least one filter column is required"));
        }
        let keys = table.keys(key_column)?;
        let idx: Vec<usize> = filter_columns
            .iter()
            .map(|c| table.column_index(c))
            .collect::<Result<_>>()?;
        let mut rows = Vec::with_capacity(table.len());
        for (i, (key, row)) in keys.into_iter().zip(table.rows()).enumerate() {
            let point = idx
                .iter()
                .zip(filter_columns)
                .map(|(&j, col)| {
                    row[j]
                        .trim()
                        .parse::<f64>()
                        .ok()
                        .and_then(FilterValue::new)
                        .ok_or_else(|| {
                            Error::schema(format!(
                                "row {i}: filter value `{}` in `{col}` is not ordered",
                                row[j]
                            ))
                        })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push((key, point));
        }
        Ok(Self::from_points(
            filter_columns.iter().map(|c| c.to_string()).collect(),
            rows,
        ))
    }

    pub fn from_points(
        filter_columns: Vec<String>,
        rows: impl IntoIterator<Item = (JoinKey, Vec<FilterValue>)>,
    ) -> Self {
        let k = filter_columns.len();
        let mut cells: BTreeMap<JoinKey, BTreeMap<Vec<FilterValue>, u64>> = BTreeMap::new();
        let mut c_x = BTreeMap::new();
        let mut domains: Vec<Vec<FilterValue>> = vec![Vec::new(); k];
        let mut n1 = 0;
        for (key, point) in rows {
            assert_eq!(point.len(), k, "filter point arity");
            for (d, v) in domains.iter_mut().zip(&point) {
                d.push(*v);
            }
            *c_x.entry(point.clone()).or_insert(0) += 1;
            *cells.entry(key).or_default().entry(point).or_insert(0) += 1;
            n1 += 1;
        }
        for d in &mut domains {
            d.sort();
            d.dedup();
        }
        ConditionalHistogram {
            filter_columns,
            cells,
            domains,
            c_x,
            n1,
        }
    }

    pub fn filter_columns(&self) -> &[String] {
        &self.filter_columns
    }

    pub fn n1(&self) -> u64 {
        self.n1
    }

    /// Number of distinct filter points present.
    pub fn m_c(&self) -> usize {
        self.c_x.len()
    }

    pub fn c_x(&self, x: &[FilterValue]) -> u64 {
        self.c_x.get(x).copied().unwrap_or(0)
    }

    /// Distinct filter points with their tuple counts, ascending.
    pub fn points(&self) -> impl Iterator<Item = (&[FilterValue], u64)> {
        self.c_x.iter().map(|(x, c)| (x.as_slice(), *c))
    }

    pub fn a_vx(&self, key: &JoinKey, x: &[FilterValue]) -> u64 {
        self.cells
            .get(key)
            .and_then(|m| m.get(x))
            .copied()
            .unwrap_or(0)
    }

    /// Tuples with key `v` whose filter values dominate `x` componentwise.
    pub fn a_v_geq(&self, key: &JoinKey, x: &[FilterValue]) -> u64 {
        self.cells.get(key).map_or(0, |m| {
            m.iter()
                .filter(|(pt, _)| pt.iter().zip(x).all(|(a, b)| a >= b))
                .map(|(_, c)| *c)
                .sum()
        })
    }

    /// Unfiltered histogram of the join column.
    pub fn marginal(&self) -> JoinKeyHistogram {
        JoinKeyHistogram::from_counts(
            self.cells
                .iter()
                .map(|(k, m)| (k.clone(), m.values().sum::<u64>())),
        )
    }

    pub fn keys(&self) -> impl Iterator<Item = &JoinKey> {
        self.cells.keys()
    }

    /// Every threshold vector in the product of the per-column domains.
    ///
    /// With one column these are the `m_C` distinct values.
    pub fn threshold_grid(&self) -> Vec<Vec<FilterValue>> {
        let mut grid: Vec<Vec<FilterValue>> = vec![Vec::new()];
        for d in &self.domains {
            grid = grid
                .into_iter()
                .flat_map(|prefix| {
                    d.iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push(*v);
                        p
                    })
                })
                .collect();
        }
        grid
    }

    /// Histogram of the sub-table selected by `C ≥ x` (componentwise).
    pub fn filtered_geq(&self, x: &[FilterValue]) -> JoinKeyHistogram {
        JoinKeyHistogram::from_counts(
            self.cells
                .keys()
                .map(|k| (k.clone(), self.a_v_geq(k, x))),
        )
    }

    /// Histogram of the sub-table selected by `C = x`.
    pub fn filtered_eq(&self, x: &[FilterValue]) -> JoinKeyHistogram {
        JoinKeyHistogram::from_counts(self.cells.keys().map(|k| (k.clone(), self.a_vx(k, x))))
    }
}

/// One entry of a serialized statistics file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsEntry {
    pub key: JoinKey,
    pub a: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
}

/// JSON form of one table's statistics, optionally with the cross moments
/// against another table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsFile {
    pub n: u64,
    pub entries: Vec<StatsEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Moments>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<[f64; 4]>,
}

impl StatsFile {
    pub fn from_histogram(h: &JoinKeyHistogram) -> Self {
        StatsFile {
            n: h.n(),
            entries: h
                .iter()
                .map(|(k, a)| StatsEntry {
                    key: k.clone(),
                    a,
                    mu: None,
                    sigma2: None,
                })
                .collect(),
            gamma: None,
            beta: None,
        }
    }

    pub fn from_aggregates(t: &TableAggregates) -> Self {
        StatsFile {
            n: t.n(),
            entries: t
                .records()
                .iter()
                .map(|r| StatsEntry {
                    key: r.key.clone(),
                    a: r.a,
                    mu: Some(r.mu),
                    sigma2: Some(r.sigma2),
                })
                .collect(),
            gamma: None,
            beta: None,
        }
    }

    pub fn histogram(&self) -> JoinKeyHistogram {
        JoinKeyHistogram::from_counts(self.entries.iter().map(|e| (e.key.clone(), e.a)))
    }

    /// Per-key aggregates, if the file carries them.
    pub fn aggregates(&self) -> Result<TableAggregates> {
        let records = self
            .entries
            .iter()
            .map(|e| match (e.mu, e.sigma2) {
                (Some(mu), Some(sigma2)) if sigma2 >= 0.0 => Ok(KeyAggregate {
                    key: e.key.clone(),
                    a: e.a,
                    mu,
                    sigma2,
                }),
                _ => Err(Error::schema(format!(
                    "statistics entry for key {} has no valid mu/sigma2",
                    e.key
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TableAggregates::from_records(records))
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}
