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

//! Property tests over random statistics and tables.

use std::collections::BTreeSet;

use joinsample::estimator::{closed_form_variance, general_variance};
use joinsample::planner::{opt_central, Plan};
use joinsample::sampler::{ubs_sample, BernoulliSeed, UBSParams};
use joinsample::stats::{build_histogram, cross_moments, CrossSums, JoinKeyHistogram, StatsFile, TableAggregates};
use joinsample::{Aggregate, JoinKey, Table};
use proptest::prelude::*;

fn hist(counts: &[u64]) -> JoinKeyHistogram {
    JoinKeyHistogram::from_counts(
        counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| (JoinKey::from_int(k as i64), c)),
    )
}

/// Per-key `(a, weights)` for T₁ and `b` for T₂ over a shared key range.
fn tables() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<u64>)> {
    (1usize..12).prop_flat_map(|keys| {
        (
            prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 1..8), keys),
            prop::collection::vec(0u64..10, keys),
        )
    })
}

fn aggregates(w: &[Vec<f64>]) -> TableAggregates {
    TableAggregates::from_pairs(
        w.iter()
            .enumerate()
            .flat_map(|(k, ws)| ws.iter().map(move |&x| (JoinKey::from_int(k as i64), x))),
    )
}

fn rate() -> impl Strategy<Value = f64> {
    0.01f64..=1.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// With every value equal to 1 the SUM terms are the COUNT terms.
    #[test]
    fn unit_values_reduce_sum_to_count((w, b) in tables()) {
        let ones: Vec<Vec<f64>> = w.iter().map(|ws| vec![1.0; ws.len()]).collect();
        let sums = CrossSums::new(&aggregates(&ones), &hist(&b));
        for (s, c) in [(sums.sum.t22, sums.count.t22), (sums.sum.t21, sums.count.t21),
                       (sums.sum.t12, sums.count.t12), (sums.sum.t11, sums.count.t11)] {
            prop_assert!((s - c).abs() <= 1e-9 * c.abs().max(1.0));
        }
        prop_assert_eq!(sums.join_sum(), sums.join_count());
    }

    /// The aggregate histogram and the table histogram agree.
    #[test]
    fn cross_moments_match_sums((w, b) in tables()) {
        let aggs = aggregates(&w);
        let h2 = hist(&b);
        let m = cross_moments(&aggs.histogram(), &h2);
        let sums = CrossSums::new(&aggs, &h2);
        prop_assert_eq!(m.terms(), sums.count);
        prop_assert_eq!(m.join_size(), sums.join_count());
    }

    #[test]
    fn variance_is_non_negative((w, b) in tables(), p1 in rate(), q1 in rate(), p2 in rate(), q2 in rate()) {
        let sums = CrossSums::new(&aggregates(&w), &hist(&b));
        for t in [&sums.count, &sums.sum] {
            let v = general_variance(p1, q1, p2, q2, t);
            prop_assert!(v >= -1e-9 * t.t22.abs().max(1.0), "{}", v);
        }
    }

    /// COUNT variance falls as either budget grows at a fixed universe rate.
    #[test]
    fn count_variance_decreases_with_budget(b1 in prop::collection::vec(0u64..10, 1..10),
                                            b2 in prop::collection::vec(0u64..10, 1..10),
                                            p in 0.2f64..=1.0, e in 0.01f64..0.1, step in 0.0f64..0.1) {
        let t = cross_moments(&hist(&b1), &hist(&b2)).terms();
        let lo = closed_form_variance(p, e + step, e, &t).unwrap();
        let hi = closed_form_variance(p, e, e, &t).unwrap();
        prop_assert!(lo <= hi * (1.0 + 1e-12) + 1e-9);
    }

    #[test]
    fn plans_respect_budgets((w, b) in tables(), e1 in rate(), e2 in rate(), agg in 0usize..3) {
        let sums = CrossSums::new(&aggregates(&w), &hist(&b));
        let agg = [Aggregate::Count, Aggregate::Sum, Aggregate::Avg][agg];
        match opt_central(agg, &sums, e1, e2) {
            Ok(plan) => {
                prop_assert!(plan.p >= e1.max(e2) - 1e-15 && plan.p <= 1.0);
                prop_assert!((plan.p * plan.q1 - e1).abs() <= 1e-12);
                prop_assert!((plan.p * plan.q2 - e2).abs() <= 1e-12);
                let back: Plan = serde_json::from_str(&serde_json::to_string(&plan).unwrap()).unwrap();
                prop_assert_eq!(back, plan);
            }
            // AVG is undefined on an empty join
            Err(e) => prop_assert!(agg == Aggregate::Avg && sums.join_count() == 0.0, "{}", e),
        }
    }

    /// Keys of T₁ that survive with `q = 1` and appear in T₂ survive in T₂'s sample too.
    #[test]
    fn universe_is_shared(k1 in prop::collection::vec(0i64..40, 1..80),
                          k2 in prop::collection::vec(0i64..40, 1..80),
                          p in 0.05f64..=1.0, seed in any::<u64>()) {
        let t1 = Table::from_keys("J", &k1);
        let t2 = Table::from_keys("J", &k2);
        let s1 = ubs_sample(&t1, "J", UBSParams::new(p, 1.0, seed).unwrap(), BernoulliSeed::new(1, 1)).unwrap();
        let s2 = ubs_sample(&t2, "J", UBSParams::new(p, 1.0, seed).unwrap(), BernoulliSeed::new(1, 2)).unwrap();
        let in1: BTreeSet<JoinKey> = s1.rows.keys("J").unwrap().into_iter().collect();
        let in2: BTreeSet<JoinKey> = s2.rows.keys("J").unwrap().into_iter().collect();
        let all2: BTreeSet<JoinKey> = t2.keys("J").unwrap().into_iter().collect();
        for k in in1.iter().filter(|k| all2.contains(*k)) {
            prop_assert!(in2.contains(k));
        }
        prop_assert!(s1.verify_universe().is_ok() && s2.verify_universe().is_ok());
    }

    #[test]
    fn stats_file_round_trip((w, _b) in tables()) {
        let aggs = aggregates(&w);
        let file = StatsFile::from_aggregates(&aggs);
        let back: StatsFile = serde_json::from_str(&serde_json::to_string(&file).unwrap()).unwrap();
        prop_assert_eq!(back.histogram(), aggs.histogram());
        let again = back.aggregates().unwrap();
        for (x, y) in again.records().iter().zip(aggs.records()) {
            prop_assert_eq!(&x.key, &y.key);
            prop_assert_eq!(x.a, y.a);
            prop_assert!((x.mu - y.mu).abs() <= 1e-12 * y.mu.abs().max(1.0));
        }
    }

    #[test]
    fn histogram_counts_rows(k in prop::collection::vec(-5i64..30, 0..100)) {
        let h = build_histogram(&Table::from_keys("J", &k), "J").unwrap();
        prop_assert_eq!(h.n(), k.len() as u64);
        prop_assert_eq!(h.distinct(), k.iter().collect::<BTreeSet<_>>().len());
    }
}
