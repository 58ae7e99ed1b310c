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

//! Offline sampling plans for approximate two-table equi-join aggregates.
//!
//! Samples combine a universe stage (keep a tuple iff a shared hash of its join
//! key falls below `p`) with a Bernoulli stage (keep each surviving tuple with
//! probability `q`). The crate computes the statistics the variance of the
//! joined COUNT, SUM and AVG estimators depends on, picks variance-optimal
//! `(p, q)` with full or partial knowledge of the two tables, simulates the
//! two-party agreement protocols, and checks all of it against an exact
//! enumeration oracle on tiny instances.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod oracle;
pub mod planner;
pub mod protocol;
pub mod sampler;
pub mod stats;
pub mod table;
pub mod workbench;

pub use error::{Error, Result};
pub use estimator::Aggregate;
pub use table::{JoinKey, Table};
