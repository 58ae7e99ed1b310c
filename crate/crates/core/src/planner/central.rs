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

//! Optimal rates when one party sees both tables' statistics.

use super::{avg, check_budgets, clamp_sqrt, Plan, PlanMode};
use crate::error::Result;
use crate::estimator::{closed_form_unchecked, Aggregate};
use crate::stats::{AggStats, CrossSums, MomentTerms, Moments};

pub(crate) fn opt_terms(agg: Aggregate, t: &MomentTerms, eps1: f64, eps2: f64) -> Result<Plan> {
    check_budgets(eps1, eps2)?;
    let lo = eps1.max(eps2);
    let plan = if t.t11 > 0.0 {
        let p = clamp_sqrt(eps1 * eps2 * t.inv_p_coefficient(), t.t11, lo);
        Plan::new(agg, p, eps1, eps2, PlanMode::Centralized)?
    } else {
        Plan::new(agg, lo, eps1, eps2, PlanMode::Centralized)?
            .warn("degenerate statistics (empty join or zero aggregate); using p = max(eps1, eps2)")
    };
    let v = closed_form_unchecked(plan.p, eps1, eps2, t);
    Ok(plan.with_variance(v))
}

/// Optimal shared rate for COUNT from the cross moments.
pub fn opt_count_central(m: &Moments, eps1: f64, eps2: f64) -> Result<Plan> {
    opt_terms(Aggregate::Count, &m.terms(), eps1, eps2)
}

/// Optimal shared rate for SUM; the radicand is `ε₁ε₂(β₄ − β₁ − β₂ + β₃)/β₃`.
pub fn opt_sum_central(s: &AggStats, eps1: f64, eps2: f64) -> Result<Plan> {
    opt_terms(Aggregate::Sum, &s.terms(), eps1, eps2)
}

/// Optimal shared rate for any aggregate given the full cross sums.
pub fn opt_central(agg: Aggregate, sums: &CrossSums, eps1: f64, eps2: f64) -> Result<Plan> {
    match agg {
        Aggregate::Count => opt_terms(agg, &sums.count, eps1, eps2),
        Aggregate::Sum => opt_terms(agg, &sums.sum, eps1, eps2),
        Aggregate::Avg => avg::opt_avg_from_sums(sums, eps1, eps2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{cross_moments, JoinKeyHistogram};
    use crate::table::JoinKey;

    fn hist(pairs: &[(i64, u64)]) -> JoinKeyHistogram {
        JoinKeyHistogram::from_counts(pairs.iter().map(|&(k, c)| (JoinKey::from_int(k), c)))
    }

    #[test]
    fn zero_radicand_gives_pure_universe() {
        let m = cross_moments(&hist(&[(1, 2), (2, 1)]), &hist(&[(1, 1), (2, 2)]));
        let plan = opt_count_central(&m, 0.25, 0.25).unwrap();
        assert_eq!((plan.p, plan.q1, plan.q2), (0.25, 1.0, 1.0));
    }

    #[test]
    fn single_heavy_key() {
        let m = cross_moments(&hist(&[(1, 3)]), &hist(&[(1, 3)]));
        let plan = opt_count_central(&m, 0.25, 0.25).unwrap();
        assert!((plan.p - 0.5).abs() < 1e-15);
        assert!((plan.q1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pk_fk_uses_universe_only() {
        let a = hist(&(1..=50).map(|k| (k, 1)).collect::<Vec<_>>());
        let b = hist(&(1..=50).map(|k| (k, 1 + (k as u64 % 4))).collect::<Vec<_>>());
        let plan = opt_count_central(&cross_moments(&a, &b), 0.1, 0.1).unwrap();
        assert_eq!(plan.p, 0.1);
    }

    #[test]
    fn empty_join_warns() {
        let m = cross_moments(&hist(&[(1, 3)]), &hist(&[(2, 3)]));
        let plan = opt_count_central(&m, 0.1, 0.2).unwrap();
        assert_eq!(plan.p, 0.2);
        assert_eq!(plan.warnings.len(), 1);
    }

    #[test]
    fn rejects_bad_budgets() {
        let m = Moments::default();
        assert!(opt_count_central(&m, 0.0, 0.5).is_err());
        assert!(opt_count_central(&m, 0.5, 1.5).is_err());
    }
}
