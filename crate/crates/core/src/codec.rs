//! JSON codecs for instances and schedules, and the BKS CSV reader.
//!
//! All ids in files are one-based. Instance files carry a `version` field;
//! only version 1 exists.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::instance::{Family, Instance, InvalidInstance, Job, Machine, Operation};
use crate::schedule::{Batch, Schedule};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CodecError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: u64 },
    #[error("unsupported format version {0} (expected {FORMAT_VERSION})")]
    Version(u64),
    #[error(transparent)]
    Invalid(#[from] InvalidInstance),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CodecError {
    fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        CodecError::Field { field: field.into(), message: message.into() }
    }
}

impl From<serde_json::Error> for CodecError {
    fn from(e: serde_json::Error) -> Self {
        let message = e.to_string();
        // serde_json appends " at line L column C"; keep only the cause
        let message = match message.rfind(" at line ") {
            Some(pos) => message[..pos].to_string(),
            None => message,
        };
        CodecError::Parse { line: e.line(), column: e.column(), message }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OpRow {
    id: u64,
    p: i64,
    r: i64,
    l: i64,
    f: u64,
    eligible: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JobRow {
    id: u64,
    w: i64,
    ops: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MachineRow {
    id: u64,
    r: i64,
    q: i64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyRow {
    id: u64,
    s: i64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    version: u64,
    ops: Vec<OpRow>,
    jobs: Vec<JobRow>,
    machines: Vec<MachineRow>,
    families: Vec<FamilyRow>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BatchRow {
    family: u64,
    ops: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MachinePlan {
    id: u64,
    batches: Vec<BatchRow>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleFile {
    version: u64,
    machines: Vec<MachinePlan>,
}

/// Places rows by their one-based id; every id in `1..=n` must occur once.
fn by_id<T>(kind: &'static str, field: &str, rows: Vec<T>, id: impl Fn(&T) -> u64) -> Result<Vec<T>, CodecError> {
    let n = rows.len();
    let mut slots: Vec<Option<T>> = (0..n).map(|_| None).collect();
    for (pos, row) in rows.into_iter().enumerate() {
        let v = id(&row);
        if v == 0 || v as usize > n {
            return Err(CodecError::field(format!("{field}[{pos}].id"), format!("id {v} outside 1..={n}")));
        }
        let slot = &mut slots[v as usize - 1];
        if slot.is_some() {
            return Err(CodecError::DuplicateId { kind, id: v });
        }
        *slot = Some(row);
    }
    Ok(slots.into_iter().map(|s| s.expect("ids form a permutation")).collect())
}

fn index(field: impl FnOnce() -> String, v: u64) -> Result<usize, CodecError> {
    if v == 0 {
        return Err(CodecError::field(field(), "ids are one-based"));
    }
    Ok(v as usize - 1)
}

pub fn instance_from_json(text: &str) -> Result<Instance, CodecError> {
    let file: InstanceFile = serde_json::from_str(text)?;
    if file.version != FORMAT_VERSION {
        return Err(CodecError::Version(file.version));
    }
    let ops = by_id("operation", "ops", file.ops, |r| r.id)?;
    let jobs = by_id("job", "jobs", file.jobs, |r| r.id)?;
    let machines = by_id("machine", "machines", file.machines, |r| r.id)?;
    let families = by_id("family", "families", file.families, |r| r.id)?;

    let ops = ops
        .into_iter()
        .map(|r| {
            let at = |f: &str| format!("operation {}: {f}", r.id);
            Ok(Operation {
                processing: r.p,
                release: r.r,
                load: r.l,
                family: index(|| at("f"), r.f)?,
                eligible: r.eligible.iter().map(|&k| index(|| at("eligible"), k)).collect::<Result<_, _>>()?,
            })
        })
        .collect::<Result<Vec<_>, CodecError>>()?;
    let jobs = jobs
        .into_iter()
        .map(|r| {
            Ok(Job {
                weight: r.w,
                ops: r.ops.iter().map(|&i| index(|| format!("job {}: ops", r.id), i)).collect::<Result<_, _>>()?,
            })
        })
        .collect::<Result<Vec<_>, CodecError>>()?;
    let machines = machines.into_iter().map(|r| Machine { release: r.r, capacity: r.q }).collect();
    let families = families.into_iter().map(|r| Family { setup: r.s }).collect();
    Ok(Instance::new(ops, jobs, machines, families)?)
}

fn push_rows<T: Serialize>(out: &mut String, key: &str, rows: &[T], last: bool) {
    writeln!(out, "  \"{key}\": [").unwrap();
    for (n, row) in rows.iter().enumerate() {
        let sep = if n + 1 < rows.len() { "," } else { "" };
        writeln!(out, "    {}{sep}", serde_json::to_string(row).expect("plain rows serialize")).unwrap();
    }
    writeln!(out, "  ]{}", if last { "" } else { "," }).unwrap();
}

/// One-line-per-row JSON; byte-identical for equal instances.
pub fn instance_to_json(inst: &Instance) -> String {
    let id = |i: usize| i as u64 + 1;
    let ops: Vec<OpRow> = inst
        .operations()
        .iter()
        .enumerate()
        .map(|(i, o)| OpRow {
            id: id(i),
            p: o.processing,
            r: o.release,
            l: o.load,
            f: id(o.family),
            eligible: o.eligible.iter().map(|&k| id(k)).collect(),
        })
        .collect();
    let jobs: Vec<JobRow> = inst
        .jobs()
        .iter()
        .enumerate()
        .map(|(j, job)| JobRow { id: id(j), w: job.weight, ops: job.ops.iter().map(|&i| id(i)).collect() })
        .collect();
    let machines: Vec<MachineRow> = inst
        .machines()
        .iter()
        .enumerate()
        .map(|(k, m)| MachineRow { id: id(k), r: m.release, q: m.capacity })
        .collect();
    let families: Vec<FamilyRow> =
        inst.families().iter().enumerate().map(|(f, fam)| FamilyRow { id: id(f), s: fam.setup }).collect();

    let mut out = String::from("{\n");
    writeln!(out, "  \"version\": {FORMAT_VERSION},").unwrap();
    push_rows(&mut out, "ops", &ops, false);
    push_rows(&mut out, "jobs", &jobs, false);
    push_rows(&mut out, "machines", &machines, false);
    push_rows(&mut out, "families", &families, true);
    out.push_str("}\n");
    out
}

/// Parses a schedule. Machines absent from the file get no batches;
/// `num_machines` is the instance machine count.
pub fn schedule_from_json(text: &str, num_machines: usize) -> Result<Schedule, CodecError> {
    let file: ScheduleFile = serde_json::from_str(text)?;
    if file.version != FORMAT_VERSION {
        return Err(CodecError::Version(file.version));
    }
    let mut sched = Schedule::empty(num_machines);
    let mut seen = vec![false; num_machines];
    for (pos, plan) in file.machines.into_iter().enumerate() {
        let k = index(|| format!("machines[{pos}].id"), plan.id)?;
        if k >= num_machines {
            return Err(CodecError::field(
                format!("machines[{pos}].id"),
                format!("machine {} outside 1..={num_machines}", plan.id),
            ));
        }
        if std::mem::replace(&mut seen[k], true) {
            return Err(CodecError::DuplicateId { kind: "machine", id: plan.id });
        }
        for (b, row) in plan.batches.into_iter().enumerate() {
            let at = || format!("machine {} batch {}", plan.id, b + 1);
            let family = index(at, row.family)?;
            let ops = row.ops.iter().map(|&i| index(at, i)).collect::<Result<_, _>>()?;
            sched.machines[k].push(Batch::new(family, ops));
        }
    }
    Ok(sched)
}

pub fn schedule_to_json(sched: &Schedule) -> String {
    let mut out = String::from("{\n");
    writeln!(out, "  \"version\": {FORMAT_VERSION},").unwrap();
    let plans: Vec<MachinePlan> = sched
        .machines
        .iter()
        .enumerate()
        .map(|(k, batches)| MachinePlan {
            id: k as u64 + 1,
            batches: batches
                .iter()
                .map(|b| BatchRow { family: b.family as u64 + 1, ops: b.ops.iter().map(|&i| i as u64 + 1).collect() })
                .collect(),
        })
        .collect();
    push_rows(&mut out, "machines", &plans, true);
    out.push_str("}\n");
    out
}

/// Reads `instance_name,twct` rows; a leading header row is skipped.
pub fn bks_from_csv(text: &str) -> Result<BTreeMap<String, i64>, CodecError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = BTreeMap::new();
    for (n, rec) in reader.records().enumerate() {
        let line = n + 1;
        let rec = rec.map_err(|e| CodecError::Parse { line, column: 0, message: e.to_string() })?;
        if rec.len() != 2 {
            return Err(CodecError::Parse { line, column: 0, message: format!("expected 2 fields, found {}", rec.len()) });
        }
        let (name, value) = (&rec[0], &rec[1]);
        let twct: i64 = match value.parse() {
            Ok(v) => v,
            Err(_) if line == 1 => continue,
            Err(_) => {
                return Err(CodecError::Parse { line, column: 0, message: format!("twct `{value}` is not an integer") })
            }
        };
        if twct <= 0 {
            return Err(CodecError::Parse { line, column: 0, message: format!("twct must be positive, got {twct}") });
        }
        if out.insert(name.to_string(), twct).is_some() {
            return Err(CodecError::Parse { line, column: 0, message: format!("instance `{name}` listed twice") });
        }
    }
    Ok(out)
}

pub fn read_file(path: &Path) -> Result<String, CodecError> {
    std::fs::read_to_string(path).map_err(|source| CodecError::Io { path: path.display().to_string(), source })
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CodecError> {
    std::fs::write(path, text).map_err(|source| CodecError::Io { path: path.display().to_string(), source })
}

pub fn read_instance(path: &Path) -> Result<Instance, CodecError> {
    instance_from_json(&read_file(path)?)
}
