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

//! Two-party agreement on a shared universe rate.
//!
//! Each party holds full statistics of its own table only. The parties are
//! deterministic actors that exchange messages over a FIFO channel per
//! direction; every message passes through a [`Transport`] that can record it
//! (for example as JSON lines) or check it against an earlier recording.
//!
//! In the Dictatorship protocol one party picks `p` from what it has learned
//! and announces it. In the Voter protocol (COUNT only) each party proposes the
//! rate that is best for its own worst case and the proposal with the smaller
//! worst-case variance wins.

use std::collections::VecDeque;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::Aggregate;
use crate::planner::{
    self, ams_sketch, AmsSketch, LeftSketches, Plan, PlanMode, DEFAULT_DEPTH, DEFAULT_WIDTH,
};
use crate::sampler::mix64;
use crate::stats::{max_frequency, JoinKeyHistogram, TableAggregates};
use crate::table::Table;

/// One side of the protocol: statistics of its own table and its budget.
#[derive(Debug, Clone, PartialEq)]
pub struct Party {
    pub id: u8,
    pub histogram: JoinKeyHistogram,
    /// Per-key aggregates if this party's table carries the aggregate column.
    pub aggregates: Option<TableAggregates>,
    pub eps: f64,
    pub seed_share: u64,
}

impl Party {
    pub fn new(
        id: u8,
        histogram: JoinKeyHistogram,
        aggregates: Option<TableAggregates>,
        eps: f64,
        seed_share: u64,
    ) -> Result<Party> {
        if id != 1 && id != 2 {
            return Err(Error::Config(format!("party id must be 1 or 2, not {id}")));
        }
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::domain(format!("eps = {eps} is outside (0, 1]")));
        }
        if histogram.is_empty() {
            return Err(Error::domain(format!("party {id} has an empty table")));
        }
        Ok(Party {
            id,
            histogram,
            aggregates,
            eps,
            seed_share,
        })
    }

    pub fn from_table(
        id: u8,
        table: &Table,
        key_column: &str,
        agg_column: Option<&str>,
        eps: f64,
        seed_share: u64,
    ) -> Result<Party> {
        let histogram = crate::stats::build_histogram(table, key_column)?;
        let aggregates = agg_column
            .map(|c| TableAggregates::from_table(table, key_column, c))
            .transpose()?;
        Party::new(id, histogram, aggregates, eps, seed_share)
    }

    pub fn n(&self) -> u64 {
        self.histogram.n()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "UPPERCASE")]
pub enum Message {
    Hello { n: u64, eps: f64, seed_share: u64 },
    #[serde(rename = "MAXFREQ")]
    MaxFreq { f: u64 },
    Sketch { vector: String, sketch: AmsSketch },
    Propose { p: f64, wcv: f64 },
    Adopt { p: f64 },
}

impl Message {
    /// Number of scalars in the payload.
    pub fn scalars(&self) -> usize {
        match self {
            Message::Hello { .. } => 3,
            Message::MaxFreq { .. } | Message::Adopt { .. } => 1,
            Message::Propose { .. } => 2,
            Message::Sketch { sketch, .. } => sketch.scalars(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Message::Hello { .. } => "HELLO",
            Message::MaxFreq { .. } => "MAXFREQ",
            Message::Sketch { .. } => "SKETCH",
            Message::Propose { .. } => "PROPOSE",
            Message::Adopt { .. } => "ADOPT",
        }
    }
}

/// A message with its global sequence number and sender.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub seq: u64,
    pub from: u8,
    #[serde(flatten)]
    pub message: Message,
}

/// What both parties end up with.
///
/// Only the deciding party knows the plan's predicted variance; the other
/// party learns the rates alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub plan: Plan,
    pub hash_seed: u64,
}

impl Agreement {
    /// Same rates, budgets and hash seed.
    pub fn coordinated_with(&self, other: &Agreement) -> bool {
        let (a, b) = (&self.plan, &other.plan);
        self.hash_seed == other.hash_seed
            && (a.p, a.q1, a.q2, a.eps1, a.eps2) == (b.p, b.q1, b.q2, b.eps1, b.eps2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub messages: Vec<Envelope>,
    pub agreement: Agreement,
}

impl Transcript {
    /// Scalars sent after the HELLO exchange.
    pub fn payload_after_hello(&self) -> usize {
        self.messages
            .iter()
            .filter(|e| !matches!(e.message, Message::Hello { .. }))
            .map(|e| e.message.scalars())
            .sum()
    }

    pub fn kinds(&self) -> Vec<&'static str> {
        self.messages.iter().map(|e| e.message.kind()).collect()
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for e in &self.messages {
            writeln!(w, "{}", serde_json::to_string(e)?)?;
        }
        Ok(())
    }
}

pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<Envelope>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

/// Where sent messages go besides the recipient's queue.
pub trait Transport {
    fn record(&mut self, envelope: &Envelope) -> Result<()>;
}

/// Keeps nothing.
pub struct NullTransport;

impl Transport for NullTransport {
    fn record(&mut self, _: &Envelope) -> Result<()> {
        Ok(())
    }
}

/// Appends each message as one JSON line.
pub struct JsonlTransport<W: Write> {
    writer: W,
}

impl<W: Write> JsonlTransport<W> {
    pub fn new(writer: W) -> Self {
        JsonlTransport { writer }
    }

    pub fn into_inner(self) -> W {
        self.writer
    }
}

impl<W: Write> Transport for JsonlTransport<W> {
    fn record(&mut self, envelope: &Envelope) -> Result<()> {
        writeln!(self.writer, "{}", serde_json::to_string(envelope)?)?;
        Ok(())
    }
}

/// Checks every sent message against a recording, byte for byte.
pub struct ReplayTransport {
    expected: VecDeque<Envelope>,
}

impl ReplayTransport {
    pub fn new(recorded: Vec<Envelope>) -> Self {
        ReplayTransport {
            expected: recorded.into(),
        }
    }

    pub fn finish(&self) -> Result<()> {
        match self.expected.front() {
            None => Ok(()),
            Some(e) => Err(Error::Protocol(format!(
                "recording has unreplayed message seq {} ({})",
                e.seq,
                e.message.kind()
            ))),
        }
    }
}

impl Transport for ReplayTransport {
    fn record(&mut self, envelope: &Envelope) -> Result<()> {
        let want = self.expected.pop_front().ok_or_else(|| {
            Error::Protocol(format!("replay sent message seq {} beyond the recording", envelope.seq))
        })?;
        let (recorded, produced) = (serde_json::to_string(&want)?, serde_json::to_string(envelope)?);
        if recorded != produced {
            return Err(Error::Protocol(format!(
                "replay diverges at seq {}: recorded {recorded}, produced {produced}",
                envelope.seq
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolMode {
    Dictator,
    Voter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProtocolConfig {
    /// Dictator for COUNT; SUM and AVG always use the party holding T₁'s
    /// aggregates.
    pub count_dictator: u8,
    pub sketch_width: usize,
    pub sketch_depth: usize,
    /// Deliver party 2's queue first in each round.
    pub two_first: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            count_dictator: 1,
            sketch_width: DEFAULT_WIDTH,
            sketch_depth: DEFAULT_DEPTH,
            two_first: false,
        }
    }
}

struct Hello {
    n: u64,
    eps: f64,
    seed_share: u64,
}

/// One party's state machine.
struct Actor {
    me: Party,
    mode: ProtocolMode,
    agg: Aggregate,
    dictator: u8,
    config: ProtocolConfig,
    hello: Option<Hello>,
    other_f: Option<u64>,
    sketches: Vec<(String, AmsSketch)>,
    proposal: Option<(f64, f64)>,
    outcome: Option<Agreement>,
}

impl Actor {
    fn eps12(&self, other_eps: f64) -> (f64, f64) {
        if self.me.id == 1 {
            (self.me.eps, other_eps)
        } else {
            (other_eps, self.me.eps)
        }
    }

    fn hash_seed(&self, other_share: u64) -> u64 {
        let (s1, s2) = if self.me.id == 1 {
            (self.me.seed_share, other_share)
        } else {
            (other_share, self.me.seed_share)
        };
        mix64(s1 ^ mix64(s2 ^ 0x5851_f42d_4c95_7f2d))
    }

    fn sketch_seed(hash_seed: u64) -> u64 {
        mix64(hash_seed ^ 0x2545_f491_4f6c_dd1d)
    }

    fn hello(&self) -> Result<&Hello> {
        self.hello
            .as_ref()
            .ok_or_else(|| Error::Protocol(format!("party {} got a message before HELLO", self.me.id)))
    }

    fn on_start(&mut self) -> Vec<Message> {
        vec![Message::Hello {
            n: self.me.n(),
            eps: self.me.eps,
            seed_share: self.me.seed_share,
        }]
    }

    fn on_message(&mut self, msg: Message) -> Result<Vec<Message>> {
        if self.outcome.is_some() {
            return Err(Error::Protocol(format!(
                "party {} got {} after agreeing",
                self.me.id,
                msg.kind()
            )));
        }
        match msg {
            Message::Hello { n, eps, seed_share } => {
                if self.hello.is_some() {
                    return Err(Error::Protocol("duplicate HELLO".into()));
                }
                if !(eps > 0.0 && eps <= 1.0) || n == 0 {
                    return Err(Error::Validation(format!("HELLO announces n = {n}, eps = {eps}")));
                }
                self.hello = Some(Hello { n, eps, seed_share });
                self.after_hello()
            }
            Message::MaxFreq { f } => {
                self.hello()?;
                if f == 0 {
                    return Err(Error::Validation("MAXFREQ of 0".into()));
                }
                self.other_f = Some(f);
                self.try_dictate()
            }
            Message::Sketch { vector, sketch } => {
                self.hello()?;
                self.sketches.push((vector, sketch));
                self.try_dictate()
            }
            Message::Propose { p, wcv } => {
                let h = self.hello()?;
                let (e1, e2) = self.eps12(h.eps);
                let (own_p, own_wcv) = self
                    .proposal
                    .ok_or_else(|| Error::Protocol("PROPOSE before own proposal".into()))?;
                let hash_seed = self.hash_seed(h.seed_share);
                // the smaller worst case wins; ties go to party 1
                let mine = own_wcv < wcv || (own_wcv == wcv && self.me.id == 1);
                let (chosen_p, chosen_wcv) = if mine { (own_p, own_wcv) } else { (p, wcv) };
                let plan = Plan::new(Aggregate::Count, chosen_p, e1, e2, PlanMode::Decentralized)?
                    .with_variance(chosen_wcv);
                self.outcome = Some(Agreement { plan, hash_seed });
                Ok(Vec::new())
            }
            Message::Adopt { p } => {
                let h = self.hello()?;
                let (e1, e2) = self.eps12(h.eps);
                if !(p >= e1.max(e2) && p <= 1.0) {
                    return Err(Error::Validation(format!(
                        "ADOPT p = {p} is outside [{}, 1]",
                        e1.max(e2)
                    )));
                }
                let plan = Plan::new(self.agg, p, e1, e2, PlanMode::Decentralized)?;
                self.outcome = Some(Agreement {
                    plan,
                    hash_seed: self.hash_seed(h.seed_share),
                });
                Ok(Vec::new())
            }
        }
    }

    fn after_hello(&mut self) -> Result<Vec<Message>> {
        let h = self.hello()?;
        let (other_n, other_eps, seed) = (h.n, h.eps, self.hash_seed(h.seed_share));
        match (self.mode, self.agg) {
            (ProtocolMode::Voter, Aggregate::Count) => {
                let wc = planner::worst_case_b(&self.me.histogram, other_n)?;
                let m = crate::stats::cross_moments(&self.me.histogram, &wc);
                let plan = planner::opt_count_central(&m, self.me.eps, other_eps)?;
                let wcv = planner::worst_case_count_variance(
                    &self.me.histogram,
                    other_n,
                    self.me.eps,
                    other_eps,
                    plan.p,
                )?;
                self.proposal = Some((plan.p, wcv));
                Ok(vec![Message::Propose { p: plan.p, wcv }])
            }
            (ProtocolMode::Voter, agg) => Err(Error::Config(format!(
                "the Voter protocol is defined for COUNT only, not {agg}"
            ))),
            (ProtocolMode::Dictator, Aggregate::Count) => {
                let f = max_frequency(&self.me.histogram)?.0;
                let mut out = vec![Message::MaxFreq { f }];
                out.extend(self.try_dictate()?);
                Ok(out)
            }
            (ProtocolMode::Dictator, Aggregate::Sum) => self.try_dictate(),
            (ProtocolMode::Dictator, Aggregate::Avg) => {
                if self.me.id == self.dictator {
                    return self.try_dictate();
                }
                let (w, d) = (self.config.sketch_width, self.config.sketch_depth);
                let s = Self::sketch_seed(seed);
                let b = ams_sketch(self.me.histogram.iter().map(|(k, c)| (k, c as f64)), w, d, s)?;
                let b2 = ams_sketch(
                    self.me.histogram.iter().map(|(k, c)| (k, (c as f64).powi(2))),
                    w,
                    d,
                    s,
                )?;
                Ok(vec![
                    Message::Sketch {
                        vector: "b".into(),
                        sketch: b,
                    },
                    Message::Sketch {
                        vector: "b2".into(),
                        sketch: b2,
                    },
                ])
            }
        }
    }

    /// Sends ADOPT once the dictator has everything it needs.
    fn try_dictate(&mut self) -> Result<Vec<Message>> {
        if self.me.id != self.dictator || self.mode != ProtocolMode::Dictator {
            return Ok(Vec::new());
        }
        let h = self.hello()?;
        let (e1, e2) = self.eps12(h.eps);
        let plan = match self.agg {
            Aggregate::Count => {
                let Some(other_f) = self.other_f else {
                    return Ok(Vec::new());
                };
                let own_f = max_frequency(&self.me.histogram)?.0;
                let (fa, fb) = if self.me.id == 1 { (own_f, other_f) } else { (other_f, own_f) };
                planner::opt_count_decentral(fa, fb, e1, e2)?
            }
            Aggregate::Sum => {
                let aggs = self.own_aggregates()?;
                planner::opt_sum_decentral(aggs, h.n, e1, e2)?
            }
            Aggregate::Avg => {
                let find = |name: &str| self.sketches.iter().find(|(v, _)| v == name).map(|(_, s)| s);
                let (Some(b), Some(b2)) = (find("b"), find("b2")) else {
                    return Ok(Vec::new());
                };
                let left = LeftSketches::new(self.own_aggregates()?, b.width, b.depth, b.seed)?;
                planner::opt_avg_decentral(&left, b, b2, e1, e2)?
            }
        };
        let hash_seed = self.hash_seed(h.seed_share);
        let p = plan.p;
        self.outcome = Some(Agreement { plan, hash_seed });
        Ok(vec![Message::Adopt { p }])
    }

    fn own_aggregates(&self) -> Result<&TableAggregates> {
        self.me.aggregates.as_ref().ok_or_else(|| {
            Error::Protocol(format!("party {} dictates but holds no aggregate column", self.me.id))
        })
    }
}

/// Runs a protocol to completion and returns the agreement and transcript.
pub fn run_protocol(
    p1: Party,
    p2: Party,
    mode: ProtocolMode,
    agg: Aggregate,
    config: ProtocolConfig,
    transport: &mut dyn Transport,
) -> Result<(Agreement, Transcript)> {
    if p1.id != 1 || p2.id != 2 {
        return Err(Error::Config("parties must have ids 1 and 2".into()));
    }
    let dictator = match (mode, agg) {
        (ProtocolMode::Dictator, Aggregate::Count) => config.count_dictator,
        _ => match (&p1.aggregates, &p2.aggregates) {
            _ if agg == Aggregate::Count => 1,
            (Some(_), _) => 1,
            (None, Some(_)) => 2,
            (None, None) => {
                return Err(Error::Protocol(format!("{agg} needs a party with the aggregate column")));
            }
        },
    };
    let make = |me: Party| Actor {
        me,
        mode,
        agg,
        dictator,
        config,
        hello: None,
        other_f: None,
        sketches: Vec::new(),
        proposal: None,
        outcome: None,
    };
    let mut actors = [make(p1), make(p2)];
    // queues[i] holds messages addressed to actor i
    let mut queues: [VecDeque<Envelope>; 2] = [VecDeque::new(), VecDeque::new()];
    let mut log = Vec::new();
    let mut seq = 0u64;
    let mut send = |from: usize, msgs: Vec<Message>, queues: &mut [VecDeque<Envelope>; 2]| -> Result<()> {
        for m in msgs {
            let env = Envelope {
                seq,
                from: from as u8 + 1,
                message: m,
            };
            seq += 1;
            transport.record(&env)?;
            log.push(env.clone());
            queues[1 - from].push_back(env);
        }
        Ok(())
    };
    let order = if config.two_first { [1, 0] } else { [0, 1] };
    for &i in &order {
        let out = actors[i].on_start();
        send(i, out, &mut queues)?;
    }
    while queues.iter().any(|q| !q.is_empty()) {
        for &i in &order {
            if let Some(env) = queues[i].pop_front() {
                let out = actors[i].on_message(env.message)?;
                send(i, out, &mut queues)?;
            }
        }
    }
    let [a1, a2] = actors;
    let (o1, o2) = match (a1.outcome, a2.outcome) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(Error::Protocol("the protocol ended without agreement".into())),
    };
    if !o1.coordinated_with(&o2) {
        return Err(Error::Coordination("the parties adopted different plans".into()));
    }
    let decided = if dictator == 2 && mode == ProtocolMode::Dictator { o2 } else { o1 };
    let transcript = Transcript {
        messages: log,
        agreement: decided.clone(),
    };
    Ok((decided, transcript))
}

pub fn run_dictatorship(p1: Party, p2: Party, agg: Aggregate) -> Result<(Agreement, Transcript)> {
    run_protocol(p1, p2, ProtocolMode::Dictator, agg, ProtocolConfig::default(), &mut NullTransport)
}

pub fn run_voter(p1: Party, p2: Party) -> Result<(Agreement, Transcript)> {
    run_protocol(
        p1,
        p2,
        ProtocolMode::Voter,
        Aggregate::Count,
        ProtocolConfig::default(),
        &mut NullTransport,
    )
}

/// Re-runs a protocol against a recording and fails on the first message that
/// differs from it.
pub fn replay(
    recorded: Vec<Envelope>,
    p1: Party,
    p2: Party,
    mode: ProtocolMode,
    agg: Aggregate,
    config: ProtocolConfig,
) -> Result<Agreement> {
    let mut t = ReplayTransport::new(recorded);
    let (agreement, _) = run_protocol(p1, p2, mode, agg, config, &mut t)?;
    t.finish()?;
    Ok(agreement)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::JoinKey;

    fn hist(pairs: &[(i64, u64)]) -> JoinKeyHistogram {
        JoinKeyHistogram::from_counts(pairs.iter().map(|&(k, c)| (JoinKey::from_int(k), c)))
    }

    fn party(id: u8, h: JoinKeyHistogram, eps: f64) -> Party {
        Party::new(id, h, None, eps, 100 + id as u64).unwrap()
    }

    #[test]
    fn count_dictatorship() {
        let (a, t) = run_dictatorship(
            party(1, hist(&[(1, 3), (2, 1)]), 0.25),
            party(2, hist(&[(1, 2), (3, 3)]), 0.25),
            Aggregate::Count,
        )
        .unwrap();
        assert!((a.plan.p - 0.5).abs() < 1e-15);
        assert_eq!(t.kinds(), ["HELLO", "HELLO", "MAXFREQ", "MAXFREQ", "ADOPT"]);
        assert!(t.payload_after_hello() <= 4);
    }

    #[test]
    fn pk_pk_is_pure_universe() {
        let (a, _) = run_dictatorship(
            party(1, hist(&[(1, 1), (2, 1)]), 0.1),
            party(2, hist(&[(1, 1), (3, 1)]), 0.2),
            Aggregate::Count,
        )
        .unwrap();
        assert_eq!(a.plan.p, 0.2);
    }

    #[test]
    fn sum_single_key() {
        let aggs = TableAggregates::from_pairs([(JoinKey::from_int(1), 3.0), (JoinKey::from_int(1), 5.0)]);
        let p1 = Party::new(1, aggs.histogram(), Some(aggs.clone()), 0.1, 1).unwrap();
        let (a, t) = run_dictatorship(p1, party(2, hist(&[(1, 30)]), 0.1), Aggregate::Sum).unwrap();
        assert_eq!(t.kinds(), ["HELLO", "HELLO", "ADOPT"]);
        assert_eq!(t.messages[2].from, 1);
        let direct = planner::opt_sum_decentral(&aggs, 30, 0.1, 0.1).unwrap();
        assert_eq!(a.plan.p, direct.p);
    }

    #[test]
    fn missing_hello_is_rejected() {
        let mut actor = Actor {
            me: party(1, hist(&[(1, 1)]), 0.1),
            mode: ProtocolMode::Dictator,
            agg: Aggregate::Count,
            dictator: 1,
            config: ProtocolConfig::default(),
            hello: None,
            other_f: None,
            sketches: Vec::new(),
            proposal: None,
            outcome: None,
        };
        assert!(matches!(actor.on_message(Message::MaxFreq { f: 2 }), Err(Error::Protocol(_))));
        actor.hello = Some(Hello { n: 5, eps: 0.3, seed_share: 1 });
        assert!(matches!(actor.on_message(Message::Adopt { p: 0.2 }), Err(Error::Validation(_))));
    }

    #[test]
    fn voter_symmetric_tables() {
        let h = hist(&[(1, 4), (2, 2), (3, 1)]);
        let (v, t) = run_voter(party(1, h.clone(), 0.1), party(2, h.clone(), 0.1)).unwrap();
        let proposals: Vec<(f64, f64)> = t
            .messages
            .iter()
            .filter_map(|e| match e.message {
                Message::Propose { p, wcv } => Some((p, wcv)),
                _ => None,
            })
            .collect();
        assert_eq!(proposals[0], proposals[1]);
        let wc = planner::worst_case_b(&h, 7).unwrap();
        let own = planner::opt_count_central(&crate::stats::cross_moments(&h, &wc), 0.1, 0.1).unwrap();
        assert_eq!(v.plan.p, own.p);
        assert_eq!(t.kinds(), ["HELLO", "HELLO", "PROPOSE", "PROPOSE"]);
        assert_eq!(t.payload_after_hello(), 4);
    }

    #[test]
    fn voter_picks_smaller_worst_case() {
        let skewed = hist(&[(1, 50), (2, 1), (3, 1)]);
        let flat = hist(&(1..=52).map(|k| (k, 1)).collect::<Vec<_>>());
        let (a, t) = run_voter(party(1, skewed, 0.05), party(2, flat, 0.05)).unwrap();
        let wcv: Vec<(u8, f64, f64)> = t
            .messages
            .iter()
            .filter_map(|e| match e.message {
                Message::Propose { p, wcv } => Some((e.from, p, wcv)),
                _ => None,
            })
            .collect();
        let best = wcv.iter().min_by(|x, y| x.2.total_cmp(&y.2)).unwrap();
        assert_eq!(a.plan.p, best.1);
        assert_eq!(a.plan.predicted_variance, Some(best.2));
    }

    #[test]
    fn schedule_does_not_change_the_plan() {
        let a = hist(&[(1, 3), (2, 7)]);
        let b = hist(&[(1, 2), (2, 1), (4, 5)]);
        for mode in [ProtocolMode::Dictator, ProtocolMode::Voter] {
            let run = |two_first| {
                let config = ProtocolConfig {
                    two_first,
                    ..ProtocolConfig::default()
                };
                run_protocol(
                    party(1, a.clone(), 0.1),
                    party(2, b.clone(), 0.2),
                    mode,
                    Aggregate::Count,
                    config,
                    &mut NullTransport,
                )
                .unwrap()
                .0
            };
            assert_eq!(run(false), run(true));
        }
    }

    #[test]
    fn jsonl_replay() {
        let a = hist(&[(1, 3), (2, 7)]);
        let b = hist(&[(1, 2), (2, 1), (4, 5)]);
        let mut t = JsonlTransport::new(Vec::new());
        let cfg = ProtocolConfig::default();
        let (agreement, _) = run_protocol(
            party(1, a.clone(), 0.1),
            party(2, b.clone(), 0.2),
            ProtocolMode::Dictator,
            Aggregate::Count,
            cfg,
            &mut t,
        )
        .unwrap();
        let bytes = t.into_inner();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.lines().next().unwrap().starts_with(r#"{"seq":0,"from":1,"kind":"HELLO","payload":"#));
        let recorded = read_jsonl(&bytes[..]).unwrap();
        let replayed = replay(recorded.clone(), party(1, a.clone(), 0.1), party(2, b.clone(), 0.2), ProtocolMode::Dictator, Aggregate::Count, cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&replayed).unwrap(),
            serde_json::to_string(&agreement).unwrap()
        );
        // a different table on one side no longer matches the recording
        let err = replay(recorded, party(1, hist(&[(1, 9)]), 0.1), party(2, b, 0.2), ProtocolMode::Dictator, Aggregate::Count, cfg);
        assert!(matches!(err, Err(Error::Protocol(_))));
    }

    #[test]
    fn avg_dictatorship_uses_sketches() {
        let rows: Vec<(JoinKey, f64)> = (0..40).map(|i| (JoinKey::from_int(i % 8), (i % 5) as f64 + 1.0)).collect();
        let aggs = TableAggregates::from_pairs(rows);
        let p1 = Party::new(1, aggs.histogram(), Some(aggs), 0.1, 3).unwrap();
        let p2 = party(2, hist(&[(0, 2), (1, 5), (3, 1), (9, 4)]), 0.1);
        let (a, t) = run_dictatorship(p1, p2, Aggregate::Avg).unwrap();
        assert_eq!(t.kinds(), ["HELLO", "HELLO", "SKETCH", "SKETCH", "ADOPT"]);
        assert!(t.messages[2..4].iter().all(|e| e.from == 2));
        assert_eq!(t.messages[4].from, 1);
        assert!(a.plan.p >= 0.1 && a.plan.p <= 1.0);
    }

    #[test]
    fn sum_without_aggregates_fails() {
        let err = run_dictatorship(party(1, hist(&[(1, 1)]), 0.1), party(2, hist(&[(1, 1)]), 0.1), Aggregate::Sum);
        assert!(matches!(err, Err(Error::Protocol(_))));
    }
}
