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

//! AMS sketches for estimating inner products between vectors held by
//! different parties.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::{key_hash64, mix64};
use crate::table::JoinKey;

pub const DEFAULT_WIDTH: usize = 512;
pub const DEFAULT_DEPTH: usize = 5;

/// `depth` rows of `width` signed counters.
///
/// Each row hashes a key to one bucket and a random sign; the row-wise dot
/// product of two sketches is an unbiased estimate of the inner product of the
/// sketched vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmsSketch {
    pub width: usize,
    pub depth: usize,
    pub seed: u64,
    /// Row-major, `depth × width`.
    pub counters: Vec<f64>,
}

impl AmsSketch {
    pub fn empty(width: usize, depth: usize, seed: u64) -> Result<Self> {
        if width == 0 || depth == 0 {
            return Err(Error::domain("sketch width and depth must be positive"));
        }
        Ok(AmsSketch {
            width,
            depth,
            seed,
            counters: vec![0.0; width * depth],
        })
    }

    pub fn update(&mut self, key: &JoinKey, x: f64) {
        let base = key_hash64(key.as_bytes(), self.seed);
        for d in 0..self.depth {
            let h = mix64(base ^ (d as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let bucket = (h % self.width as u64) as usize;
            let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
            self.counters[d * self.width + bucket] += sign * x;
        }
    }

    fn check_compatible(&self, other: &AmsSketch) -> Result<()> {
        if (self.width, self.depth, self.seed) != (other.width, other.depth, other.seed)
            || self.counters.len() != other.counters.len()
        {
            return Err(Error::Coordination(format!(
                "sketch parameters differ: (width {}, depth {}, seed {}) vs (width {}, depth {}, seed {})",
                self.width, self.depth, self.seed, other.width, other.depth, other.seed
            )));
        }
        Ok(())
    }

    /// Entry-wise sum, the sketch of the summed vectors.
    pub fn add(&self, other: &AmsSketch) -> Result<AmsSketch> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (c, o) in out.counters.iter_mut().zip(&other.counters) {
            *c += o;
        }
        Ok(out)
    }

    /// Size of the sketch on the wire, in scalars.
    pub fn scalars(&self) -> usize {
        self.counters.len()
    }
}

pub fn ams_sketch<'a>(
    vector: impl IntoIterator<Item = (&'a JoinKey, f64)>,
    width: usize,
    depth: usize,
    seed: u64,
) -> Result<AmsSketch> {
    let mut s = AmsSketch::empty(width, depth, seed)?;
    for (k, x) in vector {
        s.update(k, x);
    }
    Ok(s)
}

/// Median over rows of the row-wise dot products.
pub fn ams_inner(a: &AmsSketch, b: &AmsSketch) -> Result<f64> {
    a.check_compatible(b)?;
    let mut rows: Vec<f64> = a
        .counters
        .chunks(a.width)
        .zip(b.counters.chunks(b.width))
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u * v).sum())
        .collect();
    rows.sort_by(f64::total_cmp);
    let m = rows.len();
    Ok(if m % 2 == 1 {
        rows[m / 2]
    } else {
        0.5 * (rows[m / 2 - 1] + rows[m / 2])
    })
}
