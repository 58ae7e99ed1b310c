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

//! `joinsample` command-line driver.
//!
//! Exit status: 0 on success, 1 when the inputs are outside a formula's
//! domain (or any other runtime failure), 2 on usage errors.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use joinsample::estimator::{estimate, general_variance, taylor_avg_variance};
use joinsample::oracle::{enumerate_avg, enumerate_moments, TinyInstance};
use joinsample::planner::{
    opt_avg_decentral, opt_central, opt_count_central, opt_count_decentral, opt_sum_central,
    opt_sum_decentral, right_sketches, solve_multi_query, LeftSketches, Plan, QueryGraph,
    SolverOptions, DEFAULT_DEPTH, DEFAULT_WIDTH,
};
use joinsample::protocol::{
    read_jsonl, replay, run_protocol, JsonlTransport, Party, ProtocolConfig, ProtocolMode,
};
use joinsample::sampler::{
    group_summaries, mix64, subs_plan, subs_sample, ubs_sample, BernoulliSeed, Sample, UBSParams,
};
use joinsample::stats::{
    build_histogram, max_frequency, AggStats, CrossSums, KeyAggregate, StatsFile, TableAggregates,
};
use joinsample::workbench::{
    desk_benchmark, format_report, gen_synthetic, gen_worst_case_t2, DeskConfig, DistKind, DistSpec,
    WSpec,
};
use joinsample::{Aggregate, Error, Table};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "joinsample", version, about = "Offline join samples: plan, draw, estimate, benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic tables T1(J, W) and T2(J).
    Datagen(DatagenArgs),
    /// Per-key statistics of a table, optionally with cross moments against another.
    Stats(StatsArgs),
    /// Choose sampling rates for one join.
    Plan(PlanArgs),
    /// Allocate rates over a graph of joins.
    PlanMulti(PlanMultiArgs),
    /// Draw a UBS or SUBS sample.
    Sample(SampleArgs),
    /// Estimate a join aggregate from two samples.
    Estimate(EstimateArgs),
    /// Monte-Carlo comparison of the optimal plan against the baselines.
    Bench(BenchArgs),
    /// Simulate the two-party planning protocol.
    Protocol(ProtocolArgs),
    /// Exact moments of a tiny instance by enumeration.
    Oracle(OracleArgs),
}

fn rate(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is outside (0, 1]"))
    }
}

fn fraction(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn dist(s: &str) -> Result<DistKind, String> {
    s.parse::<DistKind>().map_err(|e| e.to_string())
}

fn agg(s: &str) -> Result<Aggregate, String> {
    s.parse::<Aggregate>().map_err(|e| e.to_string())
}

#[derive(Args)]
struct DatagenArgs {
    /// `uniform`, `normal` or `power:<alpha>`
    #[arg(long, value_parser = dist, default_value = "uniform")]
    dist1: DistKind,
    #[arg(long, value_parser = dist, default_value = "uniform")]
    dist2: DistKind,
    #[arg(long, default_value_t = 100_000)]
    n1: u64,
    #[arg(long, default_value_t = 100_000)]
    n2: u64,
    /// Key domain size, keys are 1..=domain
    #[arg(long, default_value_t = 10_000)]
    domain: u64,
    /// Omit the aggregate column W from T1
    #[arg(long)]
    no_w: bool,
    /// Put this fraction of T2 on T1's most frequent key instead of drawing from dist2
    #[arg(long, value_parser = fraction)]
    worst_case_frac: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out1: PathBuf,
    #[arg(long)]
    out2: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    table: PathBuf,
    #[arg(long, default_value = "J")]
    key: String,
    /// Aggregate column; adds mu and sigma2 per key
    #[arg(long)]
    w: Option<String>,
    /// Second table; adds the cross moments (gamma, and beta with --w)
    #[arg(long)]
    other: Option<PathBuf>,
    #[arg(long)]
    other_key: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Central,
    Decentral,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long, value_parser = agg)]
    agg: Aggregate,
    #[arg(long, value_enum, default_value = "central")]
    mode: Mode,
    /// Statistics of T1 (with mu/sigma2 for SUM and AVG)
    #[arg(long)]
    stats1: PathBuf,
    #[arg(long)]
    stats2: Option<PathBuf>,
    /// Max key frequency of T1; read from --stats1 when absent
    #[arg(long = "F-a", alias = "f-a")]
    f_a: Option<u64>,
    #[arg(long = "F-b", alias = "f-b")]
    f_b: Option<u64>,
    /// |T2|
    #[arg(long)]
    n_b: Option<u64>,
    #[arg(long, value_parser = rate)]
    eps1: f64,
    #[arg(long, value_parser = rate)]
    eps2: f64,
    /// Seed of the AMS sketches in decentralized AVG
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlanMultiArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Overrides the graph's budget
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long, default_value_t = 16)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    table: PathBuf,
    #[arg(long, default_value = "J")]
    key: String,
    /// Group column; draws a SUBS sample
    #[arg(long)]
    group: Option<String>,
    /// SUBS: distinct keys that make a group large
    #[arg(long, default_value_t = 10)]
    k_key: u64,
    /// SUBS: expected tuples per group
    #[arg(long, default_value_t = 1)]
    k_tuple: u64,
    /// SUBS: overall budget
    #[arg(long, value_parser = rate)]
    eps: Option<f64>,
    /// Universe rate (SUBS: shared rate of large groups)
    #[arg(long, value_parser = rate)]
    p: Option<f64>,
    #[arg(long, value_parser = rate)]
    q: Option<f64>,
    /// Plan or protocol agreement JSON to take the rates from
    #[arg(long, conflicts_with_all = ["p", "q", "group"])]
    plan: Option<PathBuf>,
    /// Which table of the plan this is
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2), default_value_t = 1)]
    side: u8,
    /// Hash seed (unless the plan carries one) and Bernoulli seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long, value_parser = agg)]
    agg: Aggregate,
    #[arg(long)]
    s1: PathBuf,
    #[arg(long)]
    s2: PathBuf,
    /// Sidecar of --s1; defaults to `<s1>.json`
    #[arg(long)]
    params1: Option<PathBuf>,
    #[arg(long)]
    params2: Option<PathBuf>,
    /// Aggregate column of the first sample
    #[arg(long)]
    w: Option<String>,
    /// Full-table statistics for the variance; the samples are used otherwise
    #[arg(long, requires = "stats2")]
    stats1: Option<PathBuf>,
    #[arg(long, requires = "stats1")]
    stats2: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 500)]
    beta: usize,
    /// Include the six baselines
    #[arg(long)]
    baselines: bool,
    /// Include the optimal plan
    #[arg(long)]
    opt: bool,
    /// Comma-separated aggregates
    #[arg(long, value_parser = agg, value_delimiter = ',', default_value = "count,sum,avg")]
    agg: Vec<Aggregate>,
    /// Comma-separated key distributions, each used for both tables
    #[arg(long, value_parser = dist, value_delimiter = ',', default_value = "uniform,normal,power:1.5")]
    dist: Vec<DistKind>,
    #[arg(long, value_parser = rate, default_value = "0.01")]
    eps: f64,
    #[arg(long, default_value_t = 100_000)]
    n: u64,
    #[arg(long, default_value_t = 10_000)]
    domain: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the reports as JSON
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PMode {
    Dictator,
    Voter,
}

#[derive(Args)]
struct ProtocolArgs {
    #[arg(long, value_enum, default_value = "dictator")]
    mode: PMode,
    #[arg(long, value_parser = agg)]
    agg: Aggregate,
    #[arg(long)]
    t1: PathBuf,
    #[arg(long)]
    t2: PathBuf,
    #[arg(long, default_value = "J")]
    key: String,
    /// Aggregate column of T1
    #[arg(long)]
    w: Option<String>,
    #[arg(long, value_parser = rate)]
    eps1: f64,
    #[arg(long, value_parser = rate)]
    eps2: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the transcript as JSONL
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Replay a recorded transcript instead, failing on any divergence
    #[arg(long, conflicts_with = "transcript")]
    replay: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// JSON `{"t1": [[key, w], ...], "t2": [key, ...], "p1", "q1", "p2", "q2"}`
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_parser = agg)]
    agg: Aggregate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(cmd: Command) -> joinsample::Result<()> {
    match cmd {
        Command::Datagen(a) => datagen(a),
        Command::Stats(a) => stats(a),
        Command::Plan(a) => plan(a),
        Command::PlanMulti(a) => plan_multi(a),
        Command::Sample(a) => sample(a),
        Command::Estimate(a) => estimate_cmd(a),
        Command::Bench(a) => bench(a),
        Command::Protocol(a) => protocol(a),
        Command::Oracle(a) => oracle(a),
    }
}

/// Pretty JSON to `out`, or stdout.
fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> joinsample::Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> joinsample::Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

fn datagen(a: DatagenArgs) -> joinsample::Result<()> {
    let s1 = DistSpec::new(a.dist1, a.n1, a.domain)?;
    let s2 = DistSpec::new(a.dist2, a.n2, a.domain)?;
    let w = (!a.no_w).then(WSpec::default);
    let (t1, mut t2) = gen_synthetic(&s1, &s2, w.as_ref(), a.seed)?;
    if let Some(frac) = a.worst_case_frac {
        t2 = gen_worst_case_t2(&build_histogram(&t1, "J")?, a.n2, frac, a.seed)?;
    }
    t1.write_csv(&a.out1)?;
    t2.write_csv(&a.out2)?;
    Ok(())
}

fn stats(a: StatsArgs) -> joinsample::Result<()> {
    let t = Table::read_csv(&a.table)?;
    let aggs = a.w.as_deref().map(|w| TableAggregates::from_table(&t, &a.key, w)).transpose()?;
    let mut file = match &aggs {
        Some(g) => StatsFile::from_aggregates(g),
        None => StatsFile::from_histogram(&build_histogram(&t, &a.key)?),
    };
    if let Some(other) = &a.other {
        let t2 = Table::read_csv(other)?;
        let h2 = build_histogram(&t2, a.other_key.as_deref().unwrap_or(&a.key))?;
        let h1 = file.histogram();
        file.gamma = Some(joinsample::stats::cross_moments(&h1, &h2));
        file.beta = aggs.as_ref().map(|g| CrossSums::new(g, &h2).beta());
    }
    emit(&file, a.out.as_deref())
}

/// Aggregates from a statistics file; COUNT-only files get zero values.
fn aggregates_or_counts(file: &StatsFile, need_values: bool) -> joinsample::Result<TableAggregates> {
    if need_values || file.entries.iter().all(|e| e.mu.is_some()) {
        return file.aggregates();
    }
    Ok(TableAggregates::from_records(
        file.entries
            .iter()
            .map(|e| KeyAggregate {
                key: e.key.clone(),
                a: e.a,
                mu: 0.0,
                sigma2: 0.0,
            })
            .collect(),
    ))
}

fn plan(a: PlanArgs) -> joinsample::Result<()> {
    let s1 = StatsFile::read(&a.stats1)?;
    let s2 = a.stats2.as_deref().map(StatsFile::read).transpose()?;
    let values = a.agg != Aggregate::Count;
    let (e1, e2) = (a.eps1, a.eps2);
    let plan: Plan = match a.mode {
        Mode::Central => match (&s2, a.agg) {
            (Some(s2), agg) => {
                let sums = CrossSums::new(&aggregates_or_counts(&s1, values)?, &s2.histogram());
                opt_central(agg, &sums, e1, e2)?
            }
            (None, Aggregate::Count) if s1.gamma.is_some() => {
                opt_count_central(s1.gamma.as_ref().expect("checked"), e1, e2)?
            }
            (None, Aggregate::Sum) if s1.beta.is_some() => opt_sum_central(
                &AggStats {
                    records: s1.aggregates()?.records().to_vec(),
                    beta: s1.beta.expect("checked"),
                },
                e1,
                e2,
            )?,
            _ => {
                return Err(Error::Config(
                    "centralized planning needs --stats2 or cross moments in --stats1".into(),
                ))
            }
        },
        Mode::Decentral => match a.agg {
            Aggregate::Count => {
                let fa = match a.f_a {
                    Some(f) => f,
                    None => max_frequency(&s1.histogram())?.0,
                };
                let fb = match (a.f_b, &s2) {
                    (Some(f), _) => f,
                    (None, Some(s2)) => max_frequency(&s2.histogram())?.0,
                    (None, None) => return Err(Error::Config("decentralized COUNT needs --F-b or --stats2".into())),
                };
                opt_count_decentral(fa, fb, e1, e2)?
            }
            Aggregate::Sum => {
                let n_b = match (a.n_b, &s2) {
                    (Some(n), _) => n,
                    (None, Some(s2)) => s2.n,
                    (None, None) => return Err(Error::Config("decentralized SUM needs --n-b or --stats2".into())),
                };
                opt_sum_decentral(&s1.aggregates()?, n_b, e1, e2)?
            }
            Aggregate::Avg => {
                let s2 = s2.ok_or_else(|| Error::Config("decentralized AVG needs --stats2".into()))?;
                let (b, b_sq) = right_sketches(&s2.histogram(), DEFAULT_WIDTH, DEFAULT_DEPTH, a.seed)?;
                let left = LeftSketches::new(&s1.aggregates()?, DEFAULT_WIDTH, DEFAULT_DEPTH, a.seed)?;
                opt_avg_decentral(&left, &b, &b_sq, e1, e2)?
            }
        },
    };
    emit(&plan, a.out.as_deref())
}

fn plan_multi(a: PlanMultiArgs) -> joinsample::Result<()> {
    let mut graph: QueryGraph = read_json(&a.graph)?;
    if let Some(b) = a.budget {
        graph.budget = b;
    }
    let opts = SolverOptions {
        restarts: a.restarts,
        seed: a.seed,
        ..SolverOptions::default()
    };
    emit(&solve_multi_query(&graph, &opts)?, a.out.as_deref())
}

/// Rates and hash seed from a plan or an agreement file.
fn rates_from(path: &Path, side: u8) -> joinsample::Result<(f64, f64, Option<u64>)> {
    let value: serde_json::Value = read_json(path)?;
    let (plan, seed) = match value.get("plan") {
        Some(p) => (
            serde_json::from_value::<Plan>(p.clone())?,
            value.get("hash_seed").and_then(|s| s.as_u64()),
        ),
        None => (serde_json::from_value::<Plan>(value)?, None),
    };
    let q = if side == 1 { plan.q1 } else { plan.q2 };
    Ok((plan.p, q, seed))
}

fn sample(a: SampleArgs) -> joinsample::Result<()> {
    let t = Table::read_csv(&a.table)?;
    let bernoulli = BernoulliSeed::new(a.seed, a.side as u64);
    let s = if let Some(g) = &a.group {
        let eps = a.eps.ok_or_else(|| Error::Config("a SUBS sample needs --eps".into()))?;
        let plan = subs_plan(&group_summaries(&t, &a.key, g)?, eps, a.k_key, a.k_tuple, a.p)?;
        subs_sample(&t, &a.key, g, &plan, a.seed, bernoulli)?
    } else {
        let (p, q, hash_seed) = match (&a.plan, a.p, a.q) {
            (Some(path), _, _) => rates_from(path, a.side)?,
            (None, Some(p), Some(q)) => (p, q, None),
            _ => return Err(Error::Config("give --p and --q, or --plan".into())),
        };
        let params = UBSParams::new(p, q, hash_seed.unwrap_or(a.seed))?;
        ubs_sample(&t, &a.key, params, bernoulli)?
    };
    s.write(&a.out)
}

fn read_sample(csv: &Path, params: Option<&Path>) -> joinsample::Result<Sample> {
    match params {
        Some(p) => Sample::read_with(csv, p),
        None => Sample::read(csv),
    }
}

fn estimate_cmd(a: EstimateArgs) -> joinsample::Result<()> {
    let s1 = read_sample(&a.s1, a.params1.as_deref())?;
    let s2 = read_sample(&a.s2, a.params2.as_deref())?;
    let sums = match (&a.stats1, &a.stats2) {
        (Some(p1), Some(p2)) => {
            let f1 = StatsFile::read(p1)?;
            let f2 = StatsFile::read(p2)?;
            Some(CrossSums::new(&aggregates_or_counts(&f1, a.agg != Aggregate::Count)?, &f2.histogram()))
        }
        _ => None,
    };
    let e = estimate(a.agg, &s1, &s2, a.w.as_deref(), sums.as_ref())?;
    emit(&e, a.out.as_deref())
}

fn bench(a: BenchArgs) -> joinsample::Result<()> {
    let both = !a.baselines && !a.opt;
    let cfg = DeskConfig {
        n: a.n,
        domain: a.domain,
        eps: a.eps,
        beta: a.beta,
        seed: a.seed,
        baselines: a.baselines || both,
        opt: a.opt || both,
    };
    let reports = desk_benchmark(&a.dist, &a.agg, &cfg)?;
    let mut out = std::io::stdout().lock();
    for r in &reports {
        writeln!(out, "{}", format_report(r))?;
    }
    if let Some(path) = &a.json {
        emit(&reports, Some(path))?;
    }
    Ok(())
}

fn protocol(a: ProtocolArgs) -> joinsample::Result<()> {
    let t1 = Table::read_csv(&a.t1)?;
    let t2 = Table::read_csv(&a.t2)?;
    let p1 = Party::from_table(1, &t1, &a.key, a.w.as_deref(), a.eps1, mix64(a.seed ^ 1))?;
    let p2 = Party::from_table(2, &t2, &a.key, None, a.eps2, mix64(a.seed ^ 2))?;
    let mode = match a.mode {
        PMode::Dictator => ProtocolMode::Dictator,
        PMode::Voter => ProtocolMode::Voter,
    };
    let config = ProtocolConfig::default();
    let agreement = if let Some(path) = &a.replay {
        let recorded = read_jsonl(BufReader::new(File::open(path)?))?;
        replay(recorded, p1, p2, mode, a.agg, config)?
    } else {
        let (agreement, transcript) = match &a.transcript {
            Some(path) => {
                let mut t = JsonlTransport::new(std::io::BufWriter::new(File::create(path)?));
                let r = run_protocol(p1, p2, mode, a.agg, config, &mut t)?;
                t.into_inner().flush()?;
                r
            }
            None => run_protocol(p1, p2, mode, a.agg, config, &mut joinsample::protocol::NullTransport)?,
        };
        eprintln!(
            "{} messages, {} scalars after HELLO",
            transcript.messages.len(),
            transcript.payload_after_hello()
        );
        agreement
    };
    emit(&agreement, a.out.as_deref())
}

#[derive(Serialize)]
struct OracleReport {
    aggregate: Aggregate,
    truth: f64,
    mean: f64,
    variance: f64,
    /// Closed form (COUNT, SUM) or Taylor approximation (AVG)
    formula_variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_empty: Option<f64>,
}

fn oracle(a: OracleArgs) -> joinsample::Result<()> {
    let inst: TinyInstance = read_json(&a.instance)?;
    let sums = inst.cross_sums();
    let report = match a.agg {
        Aggregate::Avg => {
            let m = enumerate_avg(&inst)?;
            OracleReport {
                aggregate: a.agg,
                truth: inst.true_sum() / inst.true_count(),
                mean: m.mean,
                variance: m.variance,
                formula_variance: (inst.p1 == inst.p2)
                    .then(|| taylor_avg_variance(inst.p1, inst.q1, inst.q2, &sums).ok().map(|r| r.variance))
                    .flatten(),
                p_empty: Some(m.p_empty),
            }
        }
        agg => {
            let m = enumerate_moments(&inst, agg)?;
            let (truth, terms) = match agg {
                Aggregate::Count => (inst.true_count(), sums.count),
                _ => (inst.true_sum(), sums.sum),
            };
            OracleReport {
                aggregate: agg,
                truth,
                mean: m.mean,
                variance: m.variance,
                formula_variance: Some(general_variance(inst.p1, inst.q1, inst.p2, inst.q2, &terms)),
                p_empty: None,
            }
        }
    };
    emit(&report, None)
}
