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

//! Several join queries sharing one sampling budget.
//!
//! Each table is a vertex with its own effective rate `ε_v` and universe rate
//! `p_v`; each query is an edge whose two tables meet at the universe rate
//! `p_e = min(p_v1, p_v2)`. An edge's variance has the form
//! `(A + B·p₁/ε₁ + C·p₂/ε₂ + D·p₁p₂/(ε₁ε₂))/p_e − offset`, and the solver
//! minimizes the weighted sum of edge variances subject to
//! `Σ_v ε_v·size_v = budget`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::Aggregate;
use crate::sampler::mix64;
use crate::stats::{CrossSums, MomentTerms};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// Subtracted from the edge form to give the estimator's variance.
    #[serde(default)]
    pub offset: f64,
}

impl EdgeCoefficients {
    pub fn from_terms(t: &MomentTerms) -> Self {
        EdgeCoefficients {
            a: t.inv_p_coefficient(),
            b: t.t12 - t.t11,
            c: t.t21 - t.t11,
            d: t.t11,
            offset: t.t22,
        }
    }

    fn combine(parts: &[(f64, EdgeCoefficients)]) -> Self {
        let mut out = EdgeCoefficients {
            a: 0.0,
            b: 0.0,
            c: 0.0,
            d: 0.0,
            offset: 0.0,
        };
        for (w, e) in parts {
            out.a += w * e.a;
            out.b += w * e.b;
            out.c += w * e.c;
            out.d += w * e.d;
            out.offset += w * e.offset;
        }
        out
    }

    /// Edge form without the offset.
    pub fn form(&self, p1: f64, eps1: f64, p2: f64, eps2: f64, pe: f64) -> f64 {
        let (u1, u2) = (p1 / eps1, p2 / eps2);
        (self.a + self.b * u1 + self.c * u2 + self.d * u1 * u2) / pe
    }

    pub fn variance(&self, p1: f64, eps1: f64, p2: f64, eps2: f64, pe: f64) -> f64 {
        self.form(p1, eps1, p2, eps2, pe) - self.offset
    }
}

/// Edge coefficients of one query from its cross sums.
///
/// For AVG the Taylor variance is `(V_S − 2r·V_cov + r²·V_C)/N²` with
/// `r = M/N`, and each of the three pieces has the edge shape, so the AVG
/// coefficients are the same combination of the three.
pub fn edge_coefficients(agg: Aggregate, sums: &CrossSums) -> Result<EdgeCoefficients> {
    match agg {
        Aggregate::Count => Ok(EdgeCoefficients::from_terms(&sums.count)),
        Aggregate::Sum => Ok(EdgeCoefficients::from_terms(&sums.sum)),
        Aggregate::Avg => {
            let n = sums.join_count();
            if n <= 0.0 {
                return Err(Error::domain("Σ a_v b_v vanishes (empty join)"));
            }
            let r = sums.join_sum() / n;
            let n2 = n * n;
            Ok(EdgeCoefficients::combine(&[
                (1.0 / n2, EdgeCoefficients::from_terms(&sums.sum)),
                (-2.0 * r / n2, EdgeCoefficients::from_terms(&sums.cov)),
                (r * r / n2, EdgeCoefficients::from_terms(&sums.count)),
            ]))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryVertex {
    pub id: String,
    pub size: f64,
    /// Fixed effective rate; the solver chooses it when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryEdge {
    pub v1: String,
    pub v2: String,
    #[serde(default = "one")]
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agg: Option<Aggregate>,
    pub coefficients: EdgeCoefficients,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryGraph {
    pub vertices: Vec<QueryVertex>,
    pub edges: Vec<QueryEdge>,
    /// Expected total number of sampled tuples.
    #[serde(default)]
    pub budget: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            restarts: 16,
            max_iters: 2000,
            tol: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexAssignment {
    pub id: String,
    pub eps: f64,
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeAssignment {
    pub v1: String,
    pub v2: String,
    pub p_e: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub vertices: Vec<VertexAssignment>,
    pub edges: Vec<EdgeAssignment>,
    /// `Σ_e ω_e · variance_e`
    pub objective: f64,
}

/// Validated graph with vertex indices resolved.
struct Problem {
    sizes: Vec<f64>,
    fixed: Vec<Option<f64>>,
    edges: Vec<(usize, usize, f64, EdgeCoefficients)>,
    free_budget: f64,
}

impl Problem {
    fn new(g: &QueryGraph) -> Result<Problem> {
        if g.vertices.is_empty() || g.edges.is_empty() {
            return Err(Error::Config("the query graph has no vertices or no edges".into()));
        }
        if !(g.budget > 0.0 && g.budget.is_finite()) {
            return Err(Error::Infeasible(format!("budget {} admits no sample", g.budget)));
        }
        let index = |id: &str| {
            g.vertices
                .iter()
                .position(|v| v.id == id)
                .ok_or_else(|| Error::Config(format!("edge refers to unknown vertex `{id}`")))
        };
        for v in &g.vertices {
            if !(v.size > 0.0 && v.size.is_finite()) {
                return Err(Error::Config(format!("vertex `{}` has size {}", v.id, v.size)));
            }
            if let Some(e) = v.eps {
                if !(e > 0.0 && e <= 1.0) {
                    return Err(Error::domain(format!("vertex `{}` has eps {e}", v.id)));
                }
            }
        }
        let mut edges = Vec::with_capacity(g.edges.len());
        for e in &g.edges {
            let c = e.coefficients;
            if !(e.weight >= 0.0 && e.weight.is_finite())
                || ![c.a, c.b, c.c, c.d, c.offset].iter().all(|x| x.is_finite())
            {
                return Err(Error::Config(format!(
                    "edge {}-{} has a negative weight or non-finite coefficients",
                    e.v1, e.v2
                )));
            }
            edges.push((index(&e.v1)?, index(&e.v2)?, e.weight, c));
        }
        let fixed_spend: f64 = g
            .vertices
            .iter()
            .filter_map(|v| v.eps.map(|e| e * v.size))
            .sum();
        let free_budget = g.budget - fixed_spend;
        let any_free = g.vertices.iter().any(|v| v.eps.is_none());
        if free_budget < 0.0 || (any_free && free_budget <= 0.0) {
            return Err(Error::Infeasible(format!(
                "budget {} does not cover the fixed rates ({fixed_spend}) and leave room for the rest",
                g.budget
            )));
        }
        Ok(Problem {
            sizes: g.vertices.iter().map(|v| v.size).collect(),
            fixed: g.vertices.iter().map(|v| v.eps).collect(),
            edges,
            free_budget,
        })
    }

    fn n(&self) -> usize {
        self.sizes.len()
    }

    /// Weighted objective with `p_e = min(p_v1, p_v2)`.
    fn exact(&self, eps: &[f64], p: &[f64]) -> f64 {
        self.edges
            .iter()
            .map(|&(i, j, w, c)| w * c.variance(p[i], eps[i], p[j], eps[j], p[i].min(p[j])))
            .sum()
    }

    /// Objective and gradient in `(ln ε, ln p)` with `ln p_e` replaced by the
    /// soft minimum `−ln(e^{−k·ln p_i} + e^{−k·ln p_j})/k ≤ min`.
    fn smooth(&self, x: &[f64], y: &[f64], k: f64, gx: &mut [f64], gy: &mut [f64]) -> f64 {
        gx.iter_mut().for_each(|g| *g = 0.0);
        gy.iter_mut().for_each(|g| *g = 0.0);
        let mut total = 0.0;
        for &(i, j, w, c) in &self.edges {
            let (wi, wj, ln_pe) = if i == j {
                (1.0, 0.0, y[i])
            } else {
                let m = y[i].min(y[j]);
                let (ei, ej) = ((-k * (y[i] - m)).exp(), (-k * (y[j] - m)).exp());
                (ei / (ei + ej), ej / (ei + ej), m - (ei + ej).ln() / k)
            };
            let pe = ln_pe.exp();
            let u1 = (y[i] - x[i]).exp();
            let u2 = (y[j] - x[j]).exp();
            let num = c.a + c.b * u1 + c.c * u2 + c.d * u1 * u2;
            total += w * (num / pe - c.offset);
            let d_pe = -w * num / pe;
            let d_u1 = w * (c.b * u1 + c.d * u1 * u2) / pe;
            let d_u2 = w * (c.c * u2 + c.d * u1 * u2) / pe;
            gy[i] += d_pe * wi + d_u1;
            gy[j] += d_pe * wj + d_u2;
            gx[i] -= d_u1;
            gx[j] -= d_u2;
        }
        total
    }

    /// Projects log-rates onto the budget and box constraints.
    fn project(&self, x: &mut [f64], y: &mut [f64]) {
        let n = self.n();
        let mut eps: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let mut at_one = vec![false; n];
        for (v, f) in self.fixed.iter().enumerate() {
            if let Some(e) = f {
                eps[v] = *e;
            }
        }
        loop {
            let free: Vec<usize> = (0..n)
                .filter(|&v| self.fixed[v].is_none() && !at_one[v])
                .collect();
            if free.is_empty() {
                break;
            }
            let clamped: f64 = (0..n)
                .filter(|&v| self.fixed[v].is_none() && at_one[v])
                .map(|v| self.sizes[v])
                .sum();
            let spend: f64 = free.iter().map(|&v| eps[v] * self.sizes[v]).sum();
            let scale = (self.free_budget - clamped) / spend;
            let mut changed = false;
            for &v in &free {
                eps[v] *= scale;
                if eps[v] >= 1.0 {
                    eps[v] = 1.0;
                    at_one[v] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for v in 0..n {
            x[v] = eps[v].ln();
            y[v] = y[v].clamp(x[v], 0.0);
        }
    }

    fn free_mask(&self, x: &[f64]) -> Vec<bool> {
        (0..self.n())
            .map(|v| self.fixed[v].is_none() && x[v] < -1e-12)
            .collect()
    }

    /// Projected gradient descent with Armijo backtracking at softness `k`.
    fn descend(&self, x: &mut Vec<f64>, y: &mut Vec<f64>, k: f64, opts: &SolverOptions) {
        let n = self.n();
        let (mut gx, mut gy) = (vec![0.0; n], vec![0.0; n]);
        let mut f = self.smooth(x, y, k, &mut gx, &mut gy);
        let mut step = 1.0f64;
        for _ in 0..opts.max_iters {
            // remove the component of the ε-gradient normal to the budget
            let free = self.free_mask(x);
            let normal: Vec<f64> = (0..n)
                .map(|v| if free[v] { self.sizes[v] * x[v].exp() } else { 0.0 })
                .collect();
            let nn: f64 = normal.iter().map(|a| a * a).sum();
            if nn > 0.0 {
                let dot: f64 = gx.iter().zip(&normal).map(|(g, m)| g * m).sum();
                for v in 0..n {
                    gx[v] = if free[v] { gx[v] - dot / nn * normal[v] } else { 0.0 };
                }
            } else {
                gx.iter_mut().for_each(|g| *g = 0.0);
            }
            let scale = gx.iter().chain(&gy).fold(0.0f64, |m, g| m.max(g.abs()));
            if scale == 0.0 || !scale.is_finite() {
                return;
            }
            let mut accepted = false;
            let mut t = (step * 2.0).min(4.0);
            for _ in 0..60 {
                let mut nx: Vec<f64> = (0..n).map(|v| x[v] - t * gx[v] / scale).collect();
                let mut ny: Vec<f64> = (0..n).map(|v| y[v] - t * gy[v] / scale).collect();
                self.project(&mut nx, &mut ny);
                let decrease: f64 = (0..n)
                    .map(|v| gx[v] * (x[v] - nx[v]) + gy[v] * (y[v] - ny[v]))
                    .sum();
                let (mut ngx, mut ngy) = (vec![0.0; n], vec![0.0; n]);
                let nf = self.smooth(&nx, &ny, k, &mut ngx, &mut ngy);
                if nf <= f - 1e-4 * decrease && decrease > 0.0 {
                    let rel = (f - nf).abs() / f.abs().max(1e-300);
                    *x = nx;
                    *y = ny;
                    gx = ngx;
                    gy = ngy;
                    f = nf;
                    step = t;
                    accepted = true;
                    if rel < opts.tol {
                        return;
                    }
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                return;
            }
        }
    }

    fn start(&self, restart: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let n = self.n();
        let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(restart as u64)));
        let mut x: Vec<f64> = (0..n)
            .map(|_| if restart == 0 { 0.0 } else { rng.random_range(-3.0..0.0) })
            .collect();
        let mut y = x.clone();
        self.project(&mut x, &mut y);
        for v in 0..n {
            let share = if restart == 0 { 0.5 } else { rng.random::<f64>() };
            y[v] = x[v] * share;
        }
        self.project(&mut x, &mut y);
        (x, y)
    }

    fn solve_from(&self, restart: usize, opts: &SolverOptions) -> (f64, Vec<f64>, Vec<f64>) {
        let (mut x, mut y) = self.start(restart, opts.seed);
        for k in [8.0, 64.0, 512.0, 4096.0] {
            self.descend(&mut x, &mut y, k, opts);
        }
        let eps: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let p: Vec<f64> = y.iter().map(|v| v.exp()).collect();
        (self.exact(&eps, &p), eps, p)
    }
}

/// Minimizes the weighted variance of all queries under the shared budget.
///
/// Runs projected gradient descent in log-rates from several starting points
/// (in parallel) and returns the best result; ties go to the earliest restart,
/// so the output does not depend on scheduling.
pub fn solve_multi_query(graph: &QueryGraph, opts: &SolverOptions) -> Result<Assignment> {
    let problem = Problem::new(graph)?;
    let mut runs: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|r| problem.solve_from(r, opts))
        .collect();
    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.0 < runs[best].0 {
            best = i;
        }
    }
    let (objective, eps, p) = runs.swap_remove(best);
    Ok(Assignment {
        vertices: graph
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| VertexAssignment {
                id: v.id.clone(),
                eps: eps[i],
                p: p[i],
                q: (eps[i] / p[i]).min(1.0),
            })
            .collect(),
        edges: graph
            .edges
            .iter()
            .zip(&problem.edges)
            .map(|(e, &(i, j, _, c))| {
                let pe = p[i].min(p[j]);
                EdgeAssignment {
                    v1: e.v1.clone(),
                    v2: e.v2.clone(),
                    p_e: pe,
                    variance: c.variance(p[i], eps[i], p[j], eps[j], pe),
                }
            })
            .collect(),
        objective,
    })
}

/// Objective of an arbitrary assignment, for checking solver output.
pub fn multi_objective(graph: &QueryGraph, eps: &[f64], p: &[f64]) -> Result<f64> {
    let problem = Problem::new(graph)?;
    Ok(problem.exact(eps, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{closed_form_variance, general_variance};
    use crate::planner::opt_count_central;
    use crate::stats::{cross_moments, JoinKeyHistogram};
    use crate::table::JoinKey;

    fn hist(pairs: &[(i64, u64)]) -> JoinKeyHistogram {
        JoinKeyHistogram::from_counts(pairs.iter().map(|&(k, c)| (JoinKey::from_int(k), c)))
    }

    #[test]
    fn count_coefficients_example() {
        let m = cross_moments(&hist(&[(1, 2), (2, 1)]), &hist(&[(1, 1), (2, 2)]));
        let c = EdgeCoefficients::from_terms(&m.terms());
        assert_eq!((c.a, c.b, c.c, c.d), (0.0, 2.0, 2.0, 4.0));
    }

    #[test]
    fn pk_pk_coefficients() {
        let h = hist(&(1..=9).map(|k| (k, 1)).collect::<Vec<_>>());
        let c = EdgeCoefficients::from_terms(&cross_moments(&h, &h).terms());
        assert_eq!((c.a, c.b, c.c, c.d), (0.0, 0.0, 0.0, 9.0));
    }

    #[test]
    fn edge_form_reproduces_variances() {
        let m = cross_moments(&hist(&[(1, 3), (2, 1), (3, 5)]), &hist(&[(1, 2), (2, 2), (3, 4)]));
        let c = EdgeCoefficients::from_terms(&m.terms());
        for p in [0.3, 0.5, 1.0] {
            let cf = closed_form_variance(p, 0.2, 0.3, &m.terms()).unwrap();
            assert!((c.variance(p, 0.2, p, 0.3, p) - cf).abs() <= 1e-12 * cf);
        }
        let (p1, p2) = (0.4, 0.7);
        let gv = general_variance(p1, 0.2 / p1, p2, 0.3 / p2, &m.terms());
        assert!((c.variance(p1, 0.2, p2, 0.3, p1) - gv).abs() <= 1e-12 * gv);
    }

    fn graph(edges: Vec<QueryEdge>, eps: Option<f64>, budget: f64) -> QueryGraph {
        QueryGraph {
            vertices: vec![
                QueryVertex { id: "T1".into(), size: 1000.0, eps },
                QueryVertex { id: "T2".into(), size: 1000.0, eps },
            ],
            edges,
            budget,
        }
    }

    fn edge(c: EdgeCoefficients, weight: f64) -> QueryEdge {
        QueryEdge {
            v1: "T1".into(),
            v2: "T2".into(),
            weight,
            agg: None,
            coefficients: c,
        }
    }

    #[test]
    fn single_edge_matches_central() {
        let h = hist(&[(1, 6), (2, 2), (3, 1), (4, 9)]);
        let m = cross_moments(&h, &h);
        let central = opt_count_central(&m, 0.05, 0.05).unwrap();
        let c = EdgeCoefficients::from_terms(&m.terms());
        for fixed in [Some(0.05), None] {
            let a = solve_multi_query(&graph(vec![edge(c, 1.0)], fixed, 100.0), &SolverOptions::default())
                .unwrap();
            let v = central.predicted_variance.unwrap();
            assert!((a.objective - v).abs() <= 1e-3 * v, "{fixed:?}: {} vs {v}", a.objective);
        }
    }

    #[test]
    fn parallel_edges_add_weights() {
        let m = cross_moments(&hist(&[(1, 6), (2, 2)]), &hist(&[(1, 3), (2, 7)]));
        let c = EdgeCoefficients::from_terms(&m.terms());
        let opts = SolverOptions::default();
        let two = solve_multi_query(&graph(vec![edge(c, 1.0), edge(c, 1.0)], None, 80.0), &opts).unwrap();
        let one = solve_multi_query(&graph(vec![edge(c, 2.0)], None, 80.0), &opts).unwrap();
        assert!((two.objective - one.objective).abs() <= 1e-6 * one.objective);
    }

    #[test]
    fn infeasible_budget() {
        let c = EdgeCoefficients::from_terms(&MomentTerms::default());
        let err = solve_multi_query(&graph(vec![edge(c, 1.0)], None, 0.0), &SolverOptions::default());
        assert!(matches!(err, Err(Error::Infeasible(_))));
    }
}
