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

//! Variance-optimal UBS parameters.
//!
//! With both tables sharing universe rate `p` and effective rates `ε₁`, `ε₂`,
//! every COUNT and SUM variance has the shape `X/p + p·Y + const` with
//! `X, Y ≥ 0`, so the optimum is `√(X/Y)` clamped to `[max(ε₁, ε₂), 1]`.
//! The submodules cover the settings where the planner knows less: only
//! maximum frequencies, only its own table, sketches of the other table,
//! unknown filters, and several queries sharing one sample budget.

mod ams;
mod avg;
mod central;
mod decentral;
mod filter;
mod multi;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::Aggregate;

pub use ams::{ams_inner, ams_sketch, AmsSketch, DEFAULT_DEPTH, DEFAULT_WIDTH};
pub use avg::{
    avg_coefficients, avg_objective, opt_avg_central, opt_avg_decentral, right_sketches,
    AvgCoefficients, LeftSketches,
};
pub use central::{opt_central, opt_count_central, opt_sum_central};
pub use decentral::{
    opt_count_decentral, opt_sum_decentral, sum_key_variance, sum_worst_case_keys,
    sum_worst_case_variance, worst_case_b, worst_case_count_variance,
};
pub use filter::{opt_filter, FilterMode};
pub use multi::{
    edge_coefficients, multi_objective, solve_multi_query, Assignment, EdgeAssignment, EdgeCoefficients,
    QueryEdge, QueryGraph, QueryVertex, SolverOptions, VertexAssignment,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanMode {
    Centralized,
    Decentralized,
}

/// A shared universe rate and the Bernoulli rates it implies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub agg: Aggregate,
    pub p: f64,
    pub q1: f64,
    pub q2: f64,
    pub eps1: f64,
    pub eps2: f64,
    /// Variance of the estimator under this plan, when the planner knows it.
    pub predicted_variance: Option<f64>,
    pub mode: PlanMode,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Plan {
    /// Builds a plan for universe rate `p`, clamped into the feasible range.
    pub fn new(agg: Aggregate, p: f64, eps1: f64, eps2: f64, mode: PlanMode) -> Result<Plan> {
        check_budgets(eps1, eps2)?;
        if p.is_nan() {
            return Err(Error::domain("universe rate is NaN"));
        }
        let p = p.clamp(eps1.max(eps2), 1.0);
        Ok(Plan {
            agg,
            p,
            q1: (eps1 / p).min(1.0),
            q2: (eps2 / p).min(1.0),
            eps1,
            eps2,
            predicted_variance: None,
            mode,
            warnings: Vec::new(),
        })
    }

    pub(crate) fn with_variance(mut self, v: f64) -> Plan {
        self.predicted_variance = Some(v);
        self
    }

    pub(crate) fn warn(mut self, msg: impl Into<String>) -> Plan {
        self.warnings.push(msg.into());
        self
    }

    /// Lower end `max(ε₁, ε₂)` of the feasible universe rates.
    pub fn p_min_feasible(&self) -> f64 {
        self.eps1.max(self.eps2)
    }
}

pub(crate) fn check_budgets(eps1: f64, eps2: f64) -> Result<()> {
    for (name, e) in [("eps1", eps1), ("eps2", eps2)] {
        if !(e > 0.0 && e <= 1.0) {
            return Err(Error::domain(format!("{name} = {e} is outside (0, 1]")));
        }
    }
    Ok(())
}

/// Minimizer of `x/p + p·y` over `[lo, 1]`.
///
/// With `x ≤ 0` the objective is non-decreasing in `p` when `y ≥ 0`, so the
/// lower end wins; callers with possibly negative `y` use
/// [`avg::opt_avg_central`] instead.
pub(crate) fn clamp_sqrt(x: f64, y: f64, lo: f64) -> f64 {
    if !(x > 0.0) {
        return lo;
    }
    if !(y > 0.0) {
        return 1.0;
    }
    (x / y).sqrt().clamp(lo, 1.0)
}

/// `n` evenly spaced points covering `[lo, hi]`.
pub fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
    (0..n).map(move |i| if i + 1 == n { hi } else { lo + step * i as f64 })
}
