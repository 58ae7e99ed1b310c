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

//! COUNT plans for queries with a filter on T₁ that is unknown when the
//! sample is built.
//!
//! Each mode assumes a distribution over the filters the query may carry and
//! minimizes the expected variance. Because the variance is linear in the
//! cross moments, that equals the variance on the averaged moments.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::central::opt_terms;
use super::Plan;
use crate::error::{Error, Result};
use crate::estimator::Aggregate;
use crate::stats::{cross_moments, ConditionalHistogram, JoinKeyHistogram, MomentTerms};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    /// Plan for the unfiltered query, the variance maximizer.
    WorstCase,
    /// `C ≥ x` with `x` uniform over the distinct values of one column.
    UniformX,
    /// `C = x` with `x` drawn like the column's own values (weight `c_x`).
    Identical,
    /// Conjunction `C_i ≥ x_i` over several columns, `x` uniform over the
    /// product of their value sets.
    KPred,
    /// `C = x` with `x` uniform over the distinct filter points.
    Equality,
}

impl FromStr for FilterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "worst_case" | "worst-case" => Ok(FilterMode::WorstCase),
            "uniform_x" | "uniform-x" => Ok(FilterMode::UniformX),
            "identical" => Ok(FilterMode::Identical),
            "k_pred" | "k-pred" => Ok(FilterMode::KPred),
            "equality" => Ok(FilterMode::Equality),
            _ => Err(Error::Config(format!("unknown filter mode `{s}`"))),
        }
    }
}

fn add_weighted(acc: &mut MomentTerms, w: f64, t: MomentTerms) {
    acc.t22 += w * t.t22;
    acc.t21 += w * t.t21;
    acc.t12 += w * t.t12;
    acc.t11 += w * t.t11;
}

/// Optimal COUNT rate averaged over the filter distribution of `mode`.
pub fn opt_filter(
    mode: FilterMode,
    cond: &ConditionalHistogram,
    hist2: &JoinKeyHistogram,
    eps1: f64,
    eps2: f64,
) -> Result<Plan> {
    if mode == FilterMode::UniformX && cond.filter_columns().len() != 1 {
        return Err(Error::Config(
            "uniform_x takes exactly one filter column; use k_pred for several".into(),
        ));
    }
    let mut acc = MomentTerms::default();
    let mut weight = 0.0;
    match mode {
        FilterMode::WorstCase => {
            acc = cross_moments(&cond.marginal(), hist2).terms();
            weight = 1.0;
        }
        FilterMode::UniformX | FilterMode::KPred => {
            for x in cond.threshold_grid() {
                add_weighted(&mut acc, 1.0, cross_moments(&cond.filtered_geq(&x), hist2).terms());
                weight += 1.0;
            }
        }
        FilterMode::Identical | FilterMode::Equality => {
            for (x, c) in cond.points() {
                let w = if mode == FilterMode::Identical { c as f64 } else { 1.0 };
                add_weighted(&mut acc, w, cross_moments(&cond.filtered_eq(x), hist2).terms());
                weight += w;
            }
        }
    }
    if !(acc.t11 > 0.0) {
        return Err(Error::domain(
            "no filter in the assumed distribution lets a joining tuple through",
        ));
    }
    let mean = MomentTerms {
        t22: acc.t22 / weight,
        t21: acc.t21 / weight,
        t12: acc.t12 / weight,
        t11: acc.t11 / weight,
    };
    opt_terms(Aggregate::Count, &mean, eps1, eps2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::closed_form_variance;
    use crate::planner::{grid, opt_count_central};
    use crate::stats::{build_histogram, conditional_histogram};
    use crate::table::{JoinKey, Table};

    fn table(rows: &[(i64, i64)]) -> Table {
        Table::with_rows(
            vec!["J".into(), "C".into()],
            rows.iter().map(|(j, c)| vec![j.to_string(), c.to_string()]).collect(),
        )
        .unwrap()
    }

    fn hist(pairs: &[(i64, u64)]) -> JoinKeyHistogram {
        JoinKeyHistogram::from_counts(pairs.iter().map(|&(k, c)| (JoinKey::from_int(k), c)))
    }

    #[test]
    fn constant_filter_matches_unfiltered() {
        let t = table(&[(1, 4), (1, 4), (1, 4), (2, 4), (3, 4)]);
        let cond = conditional_histogram(&t, "J", "C").unwrap();
        let b = hist(&[(1, 3), (2, 1), (3, 2)]);
        let plain = opt_count_central(&cross_moments(&build_histogram(&t, "J").unwrap(), &b), 0.1, 0.1).unwrap();
        for mode in [FilterMode::UniformX, FilterMode::WorstCase, FilterMode::Identical, FilterMode::Equality] {
            let plan = opt_filter(mode, &cond, &b, 0.1, 0.1).unwrap();
            assert!((plan.p - plain.p).abs() < 1e-15, "{mode:?}");
        }
    }

    #[test]
    fn uniform_x_minimizes_average_variance() {
        let t = table(&[(1, 1), (1, 2), (2, 1), (1, 3), (1, 3), (2, 3), (3, 2)]);
        let cond = conditional_histogram(&t, "J", "C").unwrap();
        let b = hist(&[(1, 4), (2, 2), (3, 1)]);
        let (e1, e2) = (0.05, 0.05);
        let plan = opt_filter(FilterMode::UniformX, &cond, &b, e1, e2).unwrap();
        let avg_var = |p: f64| {
            cond.threshold_grid()
                .iter()
                .map(|x| {
                    let m = cross_moments(&cond.filtered_geq(x), &b);
                    closed_form_variance(p, e1, e2, &m.terms()).unwrap()
                })
                .sum::<f64>()
        };
        let best = grid(0.05, 1.0, 10_000).map(avg_var).fold(f64::INFINITY, f64::min);
        assert!(avg_var(plan.p) <= best * (1.0 + 1e-6));
    }

    #[test]
    fn three_row_example() {
        // Σ_{v,x}: key 1 at x=1 has a=2, at x=2 a=1; key 2 at x=1 a=1
        // with b = {1:1, 2:2}: numerator (4-4-2+2)+(1-1-1+1)+(4-2-4+2) = 0
        let cond = conditional_histogram(&table(&[(1, 1), (1, 2), (2, 1)]), "J", "C").unwrap();
        let plan = opt_filter(FilterMode::UniformX, &cond, &hist(&[(1, 1), (2, 2)]), 0.25, 0.25).unwrap();
        assert_eq!(plan.p, 0.25);
    }

    #[test]
    fn nothing_joins() {
        let cond = conditional_histogram(&table(&[(1, 1)]), "J", "C").unwrap();
        let err = opt_filter(FilterMode::UniformX, &cond, &hist(&[(2, 1)]), 0.1, 0.1).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }
}
