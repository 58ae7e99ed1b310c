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

//! Optimal rates when each party only knows its own table.
//!
//! The planner minimizes the worst-case variance over all frequency vectors of
//! the other table with its known size. For a fixed own table that worst case
//! puts every tuple of the other table on a single key.

use super::{check_budgets, clamp_sqrt, Plan, PlanMode};
use crate::error::{Error, Result};
use crate::estimator::{closed_form_unchecked, Aggregate};
use crate::stats::{cross_moments, JoinKeyHistogram, KeyAggregate, MomentTerms, TableAggregates};

/// Optimal COUNT rate knowing only the maximum key frequencies of both tables.
pub fn opt_count_decentral(f_a: u64, f_b: u64, eps1: f64, eps2: f64) -> Result<Plan> {
    check_budgets(eps1, eps2)?;
    if f_a == 0 || f_b == 0 {
        return Err(Error::domain("maximum frequencies must be at least 1"));
    }
    let (fa, fb) = (f_a as f64, f_b as f64);
    let x = eps1 * eps2 * (fa - 1.0) * (fb - 1.0);
    let p = clamp_sqrt(x, 1.0, eps1.max(eps2));
    Plan::new(Aggregate::Count, p, eps1, eps2, PlanMode::Decentralized)
}

/// The other table's worst-case histogram: all `n_b` tuples on the most
/// frequent key of `hist_a` (ties go to the smallest key).
pub fn worst_case_b(hist_a: &JoinKeyHistogram, n_b: u64) -> Result<JoinKeyHistogram> {
    let (key, _) = hist_a
        .argmax()
        .ok_or_else(|| Error::domain("worst case of an empty histogram"))?;
    if n_b == 0 {
        return Err(Error::domain("the other table is empty"));
    }
    Ok(JoinKeyHistogram::from_counts([(key.clone(), n_b)]))
}

/// COUNT variance at `p` when the other table takes its worst case.
///
/// `own_eps` is the budget of the table `own` describes; the value is the same
/// whichever of the two tables that is.
pub fn worst_case_count_variance(
    own: &JoinKeyHistogram,
    n_other: u64,
    own_eps: f64,
    other_eps: f64,
    p: f64,
) -> Result<f64> {
    let wc = worst_case_b(own, n_other)?;
    let m = cross_moments(own, &wc);
    Ok(closed_form_unchecked(p, own_eps, other_eps, &m.terms()))
}

/// SUM terms when all `n_b` tuples of T₂ carry the key of `r`.
fn point_terms(r: &KeyAggregate, n_b: f64) -> MomentTerms {
    let a = r.a as f64;
    let sq = a * a * r.mu * r.mu;
    let s2 = r.sum_sq();
    MomentTerms {
        t22: sq * n_b * n_b,
        t21: sq * n_b,
        t12: s2 * n_b * n_b,
        t11: s2 * n_b,
    }
}

/// SUM variance at `p` if T₂'s `n_b` tuples all join with key `r`.
pub fn sum_key_variance(r: &KeyAggregate, n_b: u64, p: f64, eps1: f64, eps2: f64) -> f64 {
    closed_form_unchecked(p, eps1, eps2, &point_terms(r, n_b as f64))
}

/// Worst-case SUM variance `h*(p)` over every key of T₁.
pub fn sum_worst_case_variance(t1: &TableAggregates, n_b: u64, p: f64, eps1: f64, eps2: f64) -> f64 {
    t1.records()
        .iter()
        .map(|r| sum_key_variance(r, n_b, p, eps1, eps2))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Indices of the keys maximizing `a²μ²` and `a(μ²+σ²)`; ties go to the
/// smallest key.
pub fn sum_worst_case_keys(t1: &TableAggregates) -> Option<(usize, usize)> {
    let recs = t1.records();
    if recs.is_empty() {
        return None;
    }
    let argmax = |f: &dyn Fn(&KeyAggregate) -> f64| {
        let mut best = 0;
        for (i, r) in recs.iter().enumerate() {
            if f(r) > f(&recs[best]) {
                best = i;
            }
        }
        best
    };
    let v1 = argmax(&|r| {
        let s = r.sum();
        s * s
    });
    let v2 = argmax(&|r| r.sum_sq());
    Some((v1, v2))
}

/// `h(p) = A·p + B/p + C` for one worst-case key.
#[derive(Debug, Clone, Copy)]
struct Hyperbola {
    a: f64,
    b: f64,
    c: f64,
}

impl Hyperbola {
    fn new(t: &MomentTerms, eps1: f64, eps2: f64) -> Self {
        Hyperbola {
            a: t.t11 / (eps1 * eps2),
            b: t.inv_p_coefficient(),
            c: -t.t22 + t.t21 / eps2 + t.t12 / eps1 - t.t11 * (1.0 / eps1 + 1.0 / eps2),
        }
    }

    fn eval(&self, p: f64) -> f64 {
        self.a * p + self.b / p + self.c
    }

    fn argmin(&self, lo: f64) -> f64 {
        clamp_sqrt(self.b, self.a, lo)
    }
}

/// Real roots of `a·p² + b·p + c = 0`.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b != 0.0 { vec![-c / b] } else { Vec::new() };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    // stable form avoids cancellation when b² ≫ 4ac
    let s = -0.5 * (b + b.signum() * disc.sqrt());
    let mut roots = vec![s / a];
    if s != 0.0 {
        roots.push(c / s);
    }
    roots
}

/// Worst-case-optimal SUM rate for the party holding T₁, knowing only
/// `n_b = |T₂|`.
///
/// Only the two keys maximizing `a²μ²` and `a(μ²+σ²)` are considered; the
/// maximum of their two variance curves is within a factor 2 of the maximum
/// over all keys, so the result is within a factor 2 of the exact worst-case
/// optimum.
pub fn opt_sum_decentral(t1: &TableAggregates, n_b: u64, eps1: f64, eps2: f64) -> Result<Plan> {
    check_budgets(eps1, eps2)?;
    if n_b == 0 {
        return Err(Error::domain("the other table is empty"));
    }
    let (v1, v2) =
        sum_worst_case_keys(t1).ok_or_else(|| Error::domain("T1 has no aggregate statistics"))?;
    let lo = eps1.max(eps2);
    let recs = t1.records();
    let nb = n_b as f64;
    let h1 = Hyperbola::new(&point_terms(&recs[v1], nb), eps1, eps2);
    let h2 = Hyperbola::new(&point_terms(&recs[v2], nb), eps1, eps2);
    let worst = |p: f64| h1.eval(p).max(h2.eval(p));

    if h1.a <= 0.0 && h2.a <= 0.0 {
        return Ok(Plan::new(Aggregate::Sum, lo, eps1, eps2, PlanMode::Decentralized)?
            .warn("aggregate column is zero on every key; using p = max(eps1, eps2)")
            .with_variance(0.0));
    }
    let p = if v1 == v2 {
        h1.argmin(lo)
    } else {
        let mut candidates = quadratic_roots(h1.a - h2.a, h1.c - h2.c, h1.b - h2.b);
        candidates.retain(|p| (lo..=1.0).contains(p));
        candidates.extend([h1.argmin(lo), h2.argmin(lo), lo, 1.0]);
        candidates.sort_by(f64::total_cmp);
        let mut best = candidates[0];
        for &c in &candidates[1..] {
            if worst(c) < worst(best) {
                best = c;
            }
        }
        best
    };
    let plan = Plan::new(Aggregate::Sum, p, eps1, eps2, PlanMode::Decentralized)?;
    let v = sum_worst_case_variance(t1, n_b, plan.p, eps1, eps2);
    Ok(plan.with_variance(v))
}
