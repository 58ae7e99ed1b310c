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

//! Exact moments of the UBS estimators on tiny instances.
//!
//! The universe stage is modeled as one independent Bernoulli(`p_min`)
//! indicator per distinct key and the Bernoulli stage as one independent
//! indicator per tuple. Every outcome is enumerated with its probability, so
//! the results are exact up to floating-point rounding.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::Aggregate;
use crate::stats::{CrossSums, JoinKeyHistogram, TableAggregates};
use crate::table::JoinKey;

/// Largest number of enumerated outcomes, `2^distinct · 2^(n₁+n₂)`.
pub const MAX_STATES_LOG2: u32 = 20;

/// Two small tables and UBS rates. T₁ rows carry an aggregate value `W`
/// (use 1 for COUNT-only instances).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TinyInstance {
    pub t1: Vec<(JoinKey, f64)>,
    pub t2: Vec<JoinKey>,
    pub p1: f64,
    pub q1: f64,
    pub p2: f64,
    pub q2: f64,
}

impl TinyInstance {
    /// Instance with one universe rate `p` on both tables.
    pub fn new(t1: Vec<(JoinKey, f64)>, t2: Vec<JoinKey>, p: f64, q1: f64, q2: f64) -> Self {
        TinyInstance {
            t1,
            t2,
            p1: p,
            q1,
            p2: p,
            q2,
        }
    }

    pub fn from_ints(t1: &[(i64, f64)], t2: &[i64], p: f64, q1: f64, q2: f64) -> Self {
        Self::new(
            t1.iter().map(|&(k, w)| (JoinKey::from_int(k), w)).collect(),
            t2.iter().map(|&k| JoinKey::from_int(k)).collect(),
            p,
            q1,
            q2,
        )
    }

    fn p_min(&self) -> f64 {
        self.p1.min(self.p2)
    }

    fn keys(&self) -> Vec<JoinKey> {
        let mut keys: Vec<JoinKey> = self
            .t1
            .iter()
            .map(|(k, _)| k.clone())
            .chain(self.t2.iter().cloned())
            .collect();
        keys.sort();
        keys.dedup();
        keys
    }

    fn check(&self) -> Result<()> {
        for (name, v) in [("p1", self.p1), ("q1", self.q1), ("p2", self.p2), ("q2", self.q2)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::domain(format!("{name} = {v} is outside (0, 1]")));
            }
        }
        let log2 = self.keys().len() + self.t1.len() + self.t2.len();
        if log2 > MAX_STATES_LOG2 as usize {
            return Err(Error::Size(format!(
                "2^{log2} outcomes exceed the 2^{MAX_STATES_LOG2} enumeration bound"
            )));
        }
        Ok(())
    }

    pub fn aggregates(&self) -> TableAggregates {
        TableAggregates::from_pairs(self.t1.iter().cloned())
    }

    pub fn histogram2(&self) -> JoinKeyHistogram {
        JoinKeyHistogram::from_keys(self.t2.iter())
    }

    pub fn cross_sums(&self) -> CrossSums {
        CrossSums::new(&self.aggregates(), &self.histogram2())
    }

    pub fn true_count(&self) -> f64 {
        self.join_fold(|_| 1.0)
    }

    pub fn true_sum(&self) -> f64 {
        self.join_fold(|w| w)
    }

    fn join_fold(&self, f: impl Fn(f64) -> f64) -> f64 {
        let mut total = 0.0;
        for (k1, w) in &self.t1 {
            total += self.t2.iter().filter(|k2| *k2 == k1).count() as f64 * f(*w);
        }
        total
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Calls `f(probability, S, C)` for every outcome, where `S` and `C` are the
/// unscaled joined-sample sum and count.
fn for_each_outcome(inst: &TinyInstance, mut f: impl FnMut(f64, f64, f64)) -> Result<()> {
    inst.check()?;
    let keys = inst.keys();
    let index: BTreeMap<&JoinKey, usize> = keys.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let k = keys.len();
    let n1 = inst.t1.len();
    let n2 = inst.t2.len();
    let left: Vec<usize> = inst.t1.iter().map(|(key, _)| index[key]).collect();
    let right: Vec<usize> = inst.t2.iter().map(|key| index[key]).collect();
    let p = inst.p_min();

    let subset_prob: Vec<f64> = (0..1u32 << k)
        .map(|mask| {
            let inside = mask.count_ones() as i32;
            p.powi(inside) * (1.0 - p).powi(k as i32 - inside)
        })
        .collect();

    let mut x_count = vec![0.0; k];
    let mut x_sum = vec![0.0; k];
    let mut y = vec![0.0; k];
    for pattern in 0..1u64 << (n1 + n2) {
        x_count.iter_mut().for_each(|v| *v = 0.0);
        x_sum.iter_mut().for_each(|v| *v = 0.0);
        y.iter_mut().for_each(|v| *v = 0.0);
        let mut prob = 1.0;
        for (i, &slot) in left.iter().enumerate() {
            if pattern >> i & 1 == 1 {
                x_count[slot] += 1.0;
                x_sum[slot] += inst.t1[i].1;
                prob *= inst.q1;
            } else {
                prob *= 1.0 - inst.q1;
            }
        }
        for (j, &slot) in right.iter().enumerate() {
            if pattern >> (n1 + j) & 1 == 1 {
                y[slot] += 1.0;
                prob *= inst.q2;
            } else {
                prob *= 1.0 - inst.q2;
            }
        }
        if prob == 0.0 {
            continue;
        }
        for (mask, &sp) in subset_prob.iter().enumerate() {
            let (mut s, mut c) = (0.0, 0.0);
            for v in 0..k {
                if mask >> v & 1 == 1 {
                    s += x_sum[v] * y[v];
                    c += x_count[v] * y[v];
                }
            }
            if sp > 0.0 {
                f(prob * sp, s, c);
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleMoments {
    pub mean: f64,
    pub variance: f64,
}

/// Exact expectation and variance of the scaled COUNT or SUM estimator.
pub fn enumerate_moments(inst: &TinyInstance, agg: Aggregate) -> Result<OracleMoments> {
    let pick: fn(f64, f64) -> f64 = match agg {
        Aggregate::Count => |_, c| c,
        Aggregate::Sum => |s, _| s,
        Aggregate::Avg => {
            return Err(Error::Config("use enumerate_avg for AVG".into()));
        }
    };
    let scale = 1.0 / (inst.p_min() * inst.q1 * inst.q2);
    let mut mean = Compensated::default();
    for_each_outcome(inst, |pr, s, c| mean.add(pr * scale * pick(s, c)))?;
    let mean = mean.value();
    let mut var = Compensated::default();
    for_each_outcome(inst, |pr, s, c| {
        let d = scale * pick(s, c) - mean;
        var.add(pr * d * d);
    })?;
    Ok(OracleMoments {
        mean,
        variance: var.value(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleAvg {
    /// `E[S/C | C > 0]`
    pub mean: f64,
    /// `Var[S/C | C > 0]`
    pub variance: f64,
    pub p_empty: f64,
}

/// Exact conditional moments of the AVG estimator given a non-empty join.
pub fn enumerate_avg(inst: &TinyInstance) -> Result<OracleAvg> {
    let mut empty = Compensated::default();
    let mut mass = Compensated::default();
    let mut first = Compensated::default();
    for_each_outcome(inst, |pr, s, c| {
        if c > 0.0 {
            mass.add(pr);
            first.add(pr * s / c);
        } else {
            empty.add(pr);
        }
    })?;
    let mass = mass.value();
    if mass <= 0.0 {
        return Err(Error::UndefinedRatio("the join is always empty".into()));
    }
    let mean = first.value() / mass;
    let mut second = Compensated::default();
    for_each_outcome(inst, |pr, s, c| {
        if c > 0.0 {
            let d = s / c - mean;
            second.add(pr * d * d);
        }
    })?;
    Ok(OracleAvg {
        mean,
        variance: second.value() / mass,
        p_empty: empty.value(),
    })
}
