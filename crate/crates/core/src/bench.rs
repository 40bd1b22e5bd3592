//! Benchmark harness: repeated matheuristic runs, relative percentage
//! deviations and CSV reports.
//!
//! Runs are independent and execute on the rayon pool; rows are assembled
//! in a fixed order, so reports depend only on the configuration (and, in
//! timed mode, on the time columns).

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::instance::Instance;
use crate::schedule::check_feasibility;
use crate::search::{run, Matheuristic, Params};

/// Runs per instance and method unless configured otherwise.
pub const DEFAULT_RUNS: usize = 10;

pub const RUNS_FILE: &str = "runs.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const EVOLUTION_FILE: &str = "evolution.csv";

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("reference value must be positive, got {0}")]
    NonPositiveReference(i64),
    #[error("benchmark needs at least one {0}")]
    Empty(&'static str),
    #[error("no best-known value for instance `{0}`")]
    MissingBks(String),
    #[error("duplicate instance name `{0}`")]
    DuplicateInstance(String),
    #[error("run of {method} on `{instance}` (seed {seed}) produced an infeasible schedule")]
    Infeasible { instance: String, method: String, seed: u64 },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// `100 (method - reference) / reference`; improvements are negative.
pub fn rpd(method: i64, reference: i64) -> Result<f64, BenchError> {
    if reference <= 0 {
        return Err(BenchError::NonPositiveReference(reference));
    }
    Ok(100.0 * (method - reference) as f64 / reference as f64)
}

/// Two-decimal rendering used in every report.
pub fn format_rpd(v: f64) -> String {
    // avoid "-0.00"
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

#[derive(Debug, Clone)]
pub struct BenchInstance {
    pub name: String,
    pub instance: Instance,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub instances: Vec<BenchInstance>,
    pub methods: Vec<Matheuristic>,
    pub runs: usize,
    /// Run `r` of every instance and method uses seed `base_seed + r`.
    pub base_seed: u64,
    pub params: Params,
    /// Best-known values by instance name; without them the best value
    /// found in this benchmark is the reference.
    pub bks: Option<BTreeMap<String, i64>>,
}

impl BenchConfig {
    pub fn new(instances: Vec<BenchInstance>, methods: Vec<Matheuristic>) -> Self {
        BenchConfig { instances, methods, runs: DEFAULT_RUNS, base_seed: 0, params: Params::default(), bks: None }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.instances.is_empty() {
            return Err(BenchError::Empty("instance"));
        }
        if self.methods.is_empty() {
            return Err(BenchError::Empty("method"));
        }
        if self.runs == 0 {
            return Err(BenchError::Empty("run"));
        }
        let mut names = std::collections::BTreeSet::new();
        for bi in &self.instances {
            if !names.insert(bi.name.as_str()) {
                return Err(BenchError::DuplicateInstance(bi.name.clone()));
            }
            if let Some(bks) = &self.bks {
                match bks.get(&bi.name) {
                    None => return Err(BenchError::MissingBks(bi.name.clone())),
                    Some(&v) if v <= 0 => return Err(BenchError::NonPositiveReference(v)),
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

/// What RPD values are measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    Bks,
    BestFound,
}

impl Reference {
    pub fn column(self) -> &'static str {
        match self {
            Reference::Bks => "rpd_vs_bks",
            Reference::BestFound => "rpd_vs_best_found",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub instance: String,
    pub ops: usize,
    pub machines: usize,
    pub method: Matheuristic,
    pub run: usize,
    pub seed: u64,
    pub twct: i64,
    pub constructive_twct: i64,
    pub seconds: Option<f64>,
    pub work: u64,
    pub reference: i64,
    pub rpd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateCell {
    pub ops: usize,
    pub machines: usize,
    pub method: Matheuristic,
    pub runs: usize,
    pub mean_rpd: f64,
    pub mean_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionRow {
    pub instance: String,
    pub method: Matheuristic,
    pub seed: u64,
    pub seconds: Option<f64>,
    pub work: u64,
    pub best: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub reference: Reference,
    pub rows: Vec<RunRow>,
    pub evolution: Vec<EvolutionRow>,
}

/// Runs every (instance, method, run) combination.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    cfg.validate()?;
    let jobs: Vec<(usize, Matheuristic, usize)> = cfg
        .instances
        .iter()
        .enumerate()
        .flat_map(|(i, _)| cfg.methods.iter().flat_map(move |&m| (0..cfg.runs).map(move |r| (i, m, r))))
        .collect();
    let outcomes: Vec<_> = jobs
        .par_iter()
        .map(|&(i, m, r)| {
            let seed = cfg.base_seed.wrapping_add(r as u64);
            let inst = &cfg.instances[i].instance;
            let out = run(inst, m, &cfg.params, seed);
            let feasible = check_feasibility(inst, &out.schedule).is_empty();
            (i, m, r, seed, out, feasible)
        })
        .collect();

    let mut rows = Vec::with_capacity(outcomes.len());
    let mut evolution = Vec::new();
    for (i, method, run, seed, out, feasible) in outcomes {
        let bi = &cfg.instances[i];
        if !feasible {
            return Err(BenchError::Infeasible { instance: bi.name.clone(), method: method.to_string(), seed });
        }
        let mut last = None;
        for e in &out.log.events {
            if last != Some(e.best) {
                last = Some(e.best);
                evolution.push(EvolutionRow {
                    instance: bi.name.clone(),
                    method,
                    seed,
                    seconds: e.elapsed.map(|d| d.as_secs_f64()),
                    work: e.work,
                    best: e.best,
                });
            }
        }
        rows.push(RunRow {
            instance: bi.name.clone(),
            ops: bi.instance.num_ops(),
            machines: bi.instance.num_machines(),
            method,
            run,
            seed,
            twct: out.twct,
            constructive_twct: out.constructive_twct,
            seconds: out.elapsed.map(|d| d.as_secs_f64()),
            work: out.work,
            reference: 0,
            rpd: 0.0,
        });
    }

    let reference = if cfg.bks.is_some() { Reference::Bks } else { Reference::BestFound };
    let mut best_found: BTreeMap<&str, i64> = BTreeMap::new();
    for r in &rows {
        let e = best_found.entry(r.instance.as_str()).or_insert(r.twct);
        *e = (*e).min(r.twct);
    }
    let refs: BTreeMap<String, i64> = match &cfg.bks {
        Some(bks) => bks.clone(),
        None => best_found.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
    };
    for r in &mut rows {
        r.reference = refs[&r.instance];
        r.rpd = rpd(r.twct, r.reference)?;
    }
    Ok(BenchReport { reference, rows, evolution })
}

fn secs(v: Option<f64>) -> String {
    v.map_or_else(String::new, |s| format!("{s:.3}"))
}

impl BenchReport {
    /// Mean RPD and time per (|O|, |M|, method), recomputed from the rows.
    pub fn aggregate(&self) -> Vec<AggregateCell> {
        let mut groups: BTreeMap<(usize, usize, Matheuristic), Vec<&RunRow>> = BTreeMap::new();
        for r in &self.rows {
            groups.entry((r.ops, r.machines, r.method)).or_default().push(r);
        }
        groups
            .into_iter()
            .map(|((ops, machines, method), rs)| {
                let n = rs.len() as f64;
                let mean_seconds = rs
                    .iter()
                    .map(|r| r.seconds)
                    .collect::<Option<Vec<f64>>>()
                    .map(|v| v.iter().sum::<f64>() / n);
                AggregateCell {
                    ops,
                    machines,
                    method,
                    runs: rs.len(),
                    mean_rpd: rs.iter().map(|r| r.rpd).sum::<f64>() / n,
                    mean_seconds,
                }
            })
            .collect()
    }

    pub fn runs_csv(&self) -> Result<String, BenchError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let reference = match self.reference {
            Reference::Bks => "bks",
            Reference::BestFound => "best_found",
        };
        w.write_record([
            "instance",
            "ops",
            "machines",
            "method",
            "run",
            "seed",
            "twct",
            "constructive_twct",
            "time_s",
            "work",
            reference,
            self.reference.column(),
        ])?;
        for r in &self.rows {
            w.write_record([
                r.instance.clone(),
                r.ops.to_string(),
                r.machines.to_string(),
                r.method.to_string(),
                r.run.to_string(),
                r.seed.to_string(),
                r.twct.to_string(),
                r.constructive_twct.to_string(),
                secs(r.seconds),
                r.work.to_string(),
                r.reference.to_string(),
                format_rpd(r.rpd),
            ])?;
        }
        Ok(finish(w))
    }

    pub fn aggregate_csv(&self) -> Result<String, BenchError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mean = format!("mean_{}", self.reference.column());
        w.write_record(["ops", "machines", "method", "runs", mean.as_str(), "mean_time_s"])?;
        for c in self.aggregate() {
            w.write_record([
                c.ops.to_string(),
                c.machines.to_string(),
                c.method.to_string(),
                c.runs.to_string(),
                format_rpd(c.mean_rpd),
                secs(c.mean_seconds),
            ])?;
        }
        Ok(finish(w))
    }

    pub fn evolution_csv(&self) -> Result<String, BenchError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["instance", "method", "seed", "time_s", "work", "best_twct"])?;
        for e in &self.evolution {
            w.write_record([
                e.instance.clone(),
                e.method.to_string(),
                e.seed.to_string(),
                secs(e.seconds),
                e.work.to_string(),
                e.best.to_string(),
            ])?;
        }
        Ok(finish(w))
    }

    /// Writes the three reports into `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| BenchError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let mut written = Vec::new();
        for (name, text) in
            [(RUNS_FILE, self.runs_csv()?), (AGGREGATE_FILE, self.aggregate_csv()?), (EVOLUTION_FILE, self.evolution_csv()?)]
        {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(io(&path))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is utf-8")
}

impl fmt::Display for BenchReport {
    /// Aggregate table for terminals.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self.reference {
            Reference::Bks => "RPD vs BKS",
            Reference::BestFound => "RPD vs best found in this run set",
        };
        writeln!(f, "{:>5} {:>4}  {:<12} {:>5} {:>12} {:>10}", "|O|", "|M|", "method", "runs", "mean RPD", "mean time")?;
        for c in self.aggregate() {
            let t = c.mean_seconds.map_or_else(|| "-".to_string(), |s| format!("{s:.2}s"));
            writeln!(
                f,
                "{:>5} {:>4}  {:<12} {:>5} {:>12} {:>10}",
                c.ops,
                c.machines,
                c.method.to_string(),
                c.runs,
                format_rpd(c.mean_rpd),
                t
            )?;
        }
        write!(f, "({label})")
    }
}
