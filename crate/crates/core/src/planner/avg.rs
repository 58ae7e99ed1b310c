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

//! Optimal rates for AVG under the Taylor approximation of `Var[S/C]`.
//!
//! With `q_i = ε_i/p` the approximation is
//! `const + (M/N)²·((A − 2B + C)/p + p·D)` where `M = Σ a_v μ_v b_v` and
//! `N = Σ a_v b_v`. `D ≥ 0` by Cauchy-Schwarz, but `A − 2B + C` may have
//! either sign.

use super::ams::{ams_inner, ams_sketch, AmsSketch};
use super::{check_budgets, Plan, PlanMode};
use crate::error::{Error, Result};
use crate::estimator::{taylor_avg_variance, Aggregate};
use crate::stats::{CrossSums, JoinKeyHistogram, MomentTerms, TableAggregates};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AvgCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl AvgCoefficients {
    /// `A − 2B + C`, the coefficient of `1/p`.
    pub fn inv_p(&self) -> f64 {
        self.a - 2.0 * self.b + self.c
    }
}

pub fn avg_coefficients(sums: &CrossSums, eps1: f64, eps2: f64) -> Result<AvgCoefficients> {
    check_budgets(eps1, eps2)?;
    let n = sums.join_count();
    let m = sums.join_sum();
    if n == 0.0 {
        return Err(Error::domain("Σ a_v b_v vanishes (empty join)"));
    }
    if m == 0.0 {
        return Err(Error::domain("Σ a_v μ_v b_v vanishes"));
    }
    let beta3 = sums.sum.t11;
    Ok(AvgCoefficients {
        a: sums.sum.inv_p_coefficient() / (m * m),
        b: sums.cov.inv_p_coefficient() / (n * m),
        c: sums.count.inv_p_coefficient() / (n * n),
        d: (beta3 / (m * m) - 1.0 / n) / (eps1 * eps2),
    })
}

/// The `p`-dependent part `(A − 2B + C)/p + p·D` of the Taylor variance,
/// before the `(M/N)²` factor.
pub fn avg_objective(c: &AvgCoefficients, p: f64) -> f64 {
    c.inv_p() / p + p * c.d
}

/// Minimizes [`avg_objective`] over `[max(ε₁, ε₂), 1]`.
pub fn opt_avg_central(c: &AvgCoefficients, eps1: f64, eps2: f64) -> Result<Plan> {
    check_budgets(eps1, eps2)?;
    if ![c.a, c.b, c.c, c.d].iter().all(|v| v.is_finite()) {
        return Err(Error::domain("AVG coefficients must be finite"));
    }
    let lo = eps1.max(eps2);
    let x = c.inv_p();
    let p = match (x > 0.0, c.d > 0.0) {
        (false, true) => lo,
        (true, false) => 1.0,
        (true, true) => (x / c.d).sqrt().clamp(lo, 1.0),
        (false, false) => {
            if avg_objective(c, 1.0) < avg_objective(c, lo) {
                1.0
            } else {
                lo
            }
        }
    };
    Plan::new(Aggregate::Avg, p, eps1, eps2, PlanMode::Centralized)
}

pub(crate) fn opt_avg_from_sums(sums: &CrossSums, eps1: f64, eps2: f64) -> Result<Plan> {
    let coeffs = avg_coefficients(sums, eps1, eps2)?;
    let plan = opt_avg_central(&coeffs, eps1, eps2)?;
    let v = taylor_avg_variance(plan.p, plan.q1, plan.q2, sums)?.variance;
    Ok(plan.with_variance(v))
}

/// Sketches of the six T₁-side vectors entering the AVG cross sums:
/// `a`, `a²`, `aμ`, `a·aμ`, `(aμ)²` and `a(μ²+σ²)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LeftSketches {
    pub a: AmsSketch,
    pub a_sq: AmsSketch,
    pub s1: AmsSketch,
    pub a_s1: AmsSketch,
    pub s1_sq: AmsSketch,
    pub s2: AmsSketch,
}

impl LeftSketches {
    pub fn new(t1: &TableAggregates, width: usize, depth: usize, seed: u64) -> Result<Self> {
        let recs = t1.records();
        let sk = |f: &dyn Fn(usize) -> f64| {
            ams_sketch(recs.iter().enumerate().map(|(i, r)| (&r.key, f(i))), width, depth, seed)
        };
        Ok(LeftSketches {
            a: sk(&|i| recs[i].a as f64)?,
            a_sq: sk(&|i| (recs[i].a as f64).powi(2))?,
            s1: sk(&|i| recs[i].sum())?,
            a_s1: sk(&|i| recs[i].a as f64 * recs[i].sum())?,
            s1_sq: sk(&|i| recs[i].sum().powi(2))?,
            s2: sk(&|i| recs[i].sum_sq())?,
        })
    }

    /// Cross sums estimated against sketches of `b` and `b²`.
    pub fn cross_sums(&self, b: &AmsSketch, b_sq: &AmsSketch) -> Result<CrossSums> {
        let terms = |one: &AmsSketch, two: &AmsSketch| -> Result<MomentTerms> {
            Ok(MomentTerms {
                t22: ams_inner(two, b_sq)?,
                t21: ams_inner(two, b)?,
                t12: ams_inner(one, b_sq)?,
                t11: ams_inner(one, b)?,
            })
        };
        Ok(CrossSums {
            count: terms(&self.a, &self.a_sq)?,
            sum: terms(&self.s2, &self.s1_sq)?,
            cov: terms(&self.s1, &self.a_s1)?,
        })
    }
}

/// Sketches of `b` and `b²` from T₂'s histogram.
pub fn right_sketches(
    h2: &JoinKeyHistogram,
    width: usize,
    depth: usize,
    seed: u64,
) -> Result<(AmsSketch, AmsSketch)> {
    Ok((
        ams_sketch(h2.iter().map(|(k, c)| (k, c as f64)), width, depth, seed)?,
        ams_sketch(h2.iter().map(|(k, c)| (k, (c as f64).powi(2))), width, depth, seed)?,
    ))
}

/// AVG plan from sketched inner products instead of exact cross sums.
///
/// The predicted variance is the Taylor value on the sketched sums, so it is
/// itself an estimate.
pub fn opt_avg_decentral(
    left: &LeftSketches,
    b: &AmsSketch,
    b_sq: &AmsSketch,
    eps1: f64,
    eps2: f64,
) -> Result<Plan> {
    let sums = left.cross_sums(b, b_sq)?;
    let coeffs = avg_coefficients(&sums, eps1, eps2)?;
    let mut plan = opt_avg_central(&coeffs, eps1, eps2)?;
    plan.mode = PlanMode::Decentralized;
    if let Ok(r) = taylor_avg_variance(plan.p, plan.q1, plan.q2, &sums) {
        plan.predicted_variance = Some(r.variance);
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::JoinKey;

    fn sums(rows: &[(i64, f64)], b: &[(i64, u64)]) -> (TableAggregates, JoinKeyHistogram, CrossSums) {
        let t1 = TableAggregates::from_pairs(rows.iter().map(|&(k, w)| (JoinKey::from_int(k), w)));
        let h2 = JoinKeyHistogram::from_counts(b.iter().map(|&(k, c)| (JoinKey::from_int(k), c)));
        let s = CrossSums::new(&t1, &h2);
        (t1, h2, s)
    }

    fn coeffs(x: f64, d: f64) -> AvgCoefficients {
        AvgCoefficients { a: x, b: 0.0, c: 0.0, d }
    }

    #[test]
    fn four_cases() {
        assert_eq!(opt_avg_central(&coeffs(-1.0, 2.0), 0.1, 0.2).unwrap().p, 0.2);
        assert_eq!(opt_avg_central(&coeffs(1.0, -2.0), 0.1, 0.2).unwrap().p, 1.0);
        assert!((opt_avg_central(&coeffs(0.25, 1.0), 0.1, 0.2).unwrap().p - 0.5).abs() < 1e-15);
        // both non-positive: x/p + p·d is smaller at p = 1 when d < x
        assert_eq!(opt_avg_central(&coeffs(-1.0, -10.0), 0.1, 0.2).unwrap().p, 1.0);
        assert_eq!(opt_avg_central(&coeffs(-0.01, -0.001), 0.1, 0.2).unwrap().p, 0.2);
    }

    #[test]
    fn constant_column_cancels() {
        let (_, _, s) = sums(&[(1, 4.0), (1, 4.0), (2, 4.0), (3, 4.0)], &[(1, 2), (2, 3), (3, 1)]);
        let c = avg_coefficients(&s, 0.1, 0.1).unwrap();
        assert!(c.inv_p().abs() < 1e-12);
        assert!(c.d.abs() < 1e-9);
    }

    #[test]
    fn coefficients_match_taylor_variance() {
        let (_, _, s) = sums(
            &[(1, 2.0), (1, 5.0), (2, 1.0), (3, 7.0), (3, 8.0), (3, 1.0)],
            &[(1, 2), (2, 4), (3, 1)],
        );
        let (e1, e2) = (0.05, 0.1);
        let c = avg_coefficients(&s, e1, e2).unwrap();
        let r = (s.join_sum() / s.join_count()).powi(2);
        let at = |p: f64| taylor_avg_variance(p, e1 / p, e2 / p, &s).unwrap().variance;
        let constant = at(0.5) - r * avg_objective(&c, 0.5);
        for p in [0.1, 0.2, 0.37, 0.8, 1.0] {
            let lhs = at(p) - constant;
            let rhs = r * avg_objective(&c, p);
            assert!((lhs - rhs).abs() <= 1e-9 * at(p).abs().max(1e-300), "p = {p}");
        }
    }

    #[test]
    fn zero_denominators() {
        let (_, _, s) = sums(&[(1, 1.0)], &[(2, 1)]);
        assert!(matches!(avg_coefficients(&s, 0.1, 0.1), Err(Error::Domain(_))));
        let (_, _, s) = sums(&[(1, 0.0)], &[(1, 1)]);
        assert!(matches!(avg_coefficients(&s, 0.1, 0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn wide_sketches_recover_central_plan() {
        let rows: Vec<(i64, f64)> = (0..40).map(|i| (i % 10, 1.0 + ((i * 7) % 13) as f64)).collect();
        let b: Vec<(i64, u64)> = (0..10).map(|k| (k, 1 + (k as u64 * 3) % 5)).collect();
        let (t1, h2, s) = sums(&rows, &b);
        let central = opt_avg_from_sums(&s, 0.05, 0.05).unwrap();
        let left = LeftSketches::new(&t1, 1 << 16, 5, 11).unwrap();
        let (sb, sb2) = right_sketches(&h2, 1 << 16, 5, 11).unwrap();
        let plan = opt_avg_decentral(&left, &sb, &sb2, 0.05, 0.05).unwrap();
        assert!((plan.p - central.p).abs() < 1e-9);
    }
}
