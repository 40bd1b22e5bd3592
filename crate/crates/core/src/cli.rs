//! The `batchsched` command line. Errors print as `error[category]: ...`
//! on stderr and map to distinct exit codes.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use crate::bench::{run_bench, BenchConfig, BenchError, BenchInstance, DEFAULT_RUNS};
use crate::codec::{self, CodecError};
use crate::construct::wmct_wavga;
use crate::gantt::layout;
use crate::instance::Instance;
use crate::instgen::{generate, GenParams, ELIGIBILITY_FACTORS, JOB_ASSOC_FACTORS, RELEASE_FACTORS};
use crate::mip::{BatchModel, Formulation, ModelConfig};
use crate::precedence::{wspt_order, Theta};
use crate::schedule::{check_feasibility, evaluate, Schedule};
use crate::search::{run, Matheuristic, Method, Params, Variant};
use crate::subsolve::{export_model, solve, Limits, SolveRequest};

#[derive(Debug, Parser)]
#[command(name = "batchsched", version, about = "Parallel machine batch scheduling with family setups")]
pub struct Cli {
    /// Seed for generation and search.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Wall-clock budget in seconds for a whole search run (or an exact solve).
    #[arg(long, global = true)]
    pub time_limit: Option<f64>,
    /// File of `key = value` search parameters.
    #[arg(long, global = true)]
    pub params_file: Option<PathBuf>,
    /// Replace wall-clock limits by node limits so results depend on the seed only.
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Extra `key=value` parameter, applied after the parameters file.
    #[arg(long = "param", global = true, value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolveMethod {
    /// Iterated local search matheuristic.
    Ils,
    /// GRASP matheuristic.
    Grasp,
    /// The constructive heuristic alone.
    Construct,
    /// Branch and bound on the full model.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormulationArg {
    Wspt,
    S,
}

impl From<FormulationArg> for Formulation {
    fn from(f: FormulationArg) -> Self {
        match f {
            FormulationArg::Wspt => Formulation::Wspt,
            FormulationArg::S => Formulation::Sequencing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChartFormat {
    Text,
    Svg,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate random instances.
    Gen {
        #[arg(long)]
        ops: usize,
        #[arg(long)]
        machines: usize,
        #[arg(long, default_value_t = RELEASE_FACTORS[0])]
        release_factor: f64,
        #[arg(long, default_value_t = ELIGIBILITY_FACTORS[0])]
        eligibility: f64,
        #[arg(long, default_value_t = JOB_ASSOC_FACTORS[0])]
        job_assoc: f64,
        /// Replicate `r` (from 1) uses seed `seed + r - 1`.
        #[arg(long, default_value_t = 1)]
        replicates: usize,
        /// Write `<name>.json` files here instead of printing one instance.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Solve an instance and print or save the schedule.
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = SolveMethod::Ils)]
        method: SolveMethod,
        /// 1: WSPT model, 2: sequencing model, 3: WSPT then sequencing.
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(1..=3))]
        variant: u8,
        /// Model used by `--method exact`.
        #[arg(long, value_enum, default_value_t = FormulationArg::S)]
        formulation: FormulationArg,
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Write the search log here.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Check a schedule and print its completion times and objective.
    Eval { instance: PathBuf, schedule: PathBuf },
    /// Run methods repeatedly and write CSV reports.
    Bench {
        /// Instance files (named after their file stem).
        #[arg(long, num_args = 1..)]
        instances: Vec<PathBuf>,
        /// Generated sizes such as `15x4`.
        #[arg(long, num_args = 1..)]
        grid: Vec<String>,
        #[arg(long, default_value_t = 1)]
        replicates: usize,
        #[arg(long, value_delimiter = ',', default_value = "ils3,grasp3")]
        methods: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_RUNS)]
        runs: usize,
        /// CSV of `instance_name,twct` best-known values.
        #[arg(long)]
        bks: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Draw a schedule.
    Gantt {
        instance: PathBuf,
        schedule: PathBuf,
        #[arg(long, value_enum, default_value_t = ChartFormat::Text)]
        format: ChartFormat,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Write the full model of an instance as an LP file.
    ExportLp {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = FormulationArg::S)]
        formulation: FormulationArg,
        /// Schedule whose batches fix the inner order of the WSPT model.
        #[arg(long)]
        schedule: Option<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    InvalidInstance(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Config(String),
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Parse(_) => "parse",
            CliError::InvalidInstance(_) => "invalid-instance",
            CliError::Infeasible(_) => "infeasible-schedule",
            CliError::Solver(_) => "solver",
            CliError::Config(_) => "config",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Parse(_) => 4,
            CliError::InvalidInstance(_) => 5,
            CliError::Infeasible(_) => 6,
            CliError::Solver(_) => 7,
            CliError::Config(_) => 8,
        }
    }
}

impl From<CodecError> for CliError {
    fn from(e: CodecError) -> Self {
        match e {
            CodecError::Io { .. } => CliError::Io(e.to_string()),
            CodecError::Invalid(_) => CliError::InvalidInstance(e.to_string()),
            _ => CliError::Parse(e.to_string()),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Io { .. } | BenchError::Csv(_) => CliError::Io(e.to_string()),
            BenchError::Infeasible { .. } => CliError::Infeasible(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn stdout_err(e: std::io::Error) -> CliError {
    CliError::Io(format!("stdout: {e}"))
}

fn params_of(cli: &Cli) -> Result<Params, CliError> {
    let mut p = Params::default();
    if let Some(path) = &cli.params_file {
        let text = codec::read_file(path)?;
        p.apply_text(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    }
    for kv in &cli.params {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Usage(format!("--param expects KEY=VALUE, got `{kv}`")))?;
        p.set(k, v).map_err(|e| CliError::Config(e.to_string()))?;
    }
    if let Some(t) = cli.time_limit {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Usage(format!("--time-limit must be positive, got {t}")));
        }
        p.time_limit = Some(t);
    }
    if cli.deterministic {
        p.make_deterministic();
    }
    Ok(p)
}

fn read_schedule(path: &Path, inst: &Instance) -> Result<Schedule, CliError> {
    Ok(codec::schedule_from_json(&codec::read_file(path)?, inst.num_machines())?)
}

fn require_feasible(inst: &Instance, sched: &Schedule) -> Result<(), CliError> {
    let v = check_feasibility(inst, sched);
    if v.is_empty() {
        return Ok(());
    }
    let list: Vec<String> = v.iter().map(ToString::to_string).collect();
    Err(CliError::Infeasible(format!("schedule is infeasible: {}", list.join("; "))))
}

fn emit(out: &mut dyn Write, target: Option<&Path>, text: &str) -> Result<(), CliError> {
    match target {
        Some(path) => std::fs::write(path, text).map_err(io_err(path)),
        None => out.write_all(text.as_bytes()).map_err(stdout_err),
    }
}

fn gen_params(ops: usize, machines: usize, rf: f64, el: f64, ja: f64, seed: u64) -> Result<GenParams, CliError> {
    let p = GenParams {
        num_ops: ops,
        num_machines: machines,
        release_factor: rf,
        eligibility_factor: el,
        job_assoc_factor: ja,
        seed,
    };
    p.check().map_err(CliError::Usage)?;
    Ok(p)
}

/// Runs the command line `args` (including the program name), writing
/// regular output to `out`.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            write!(out, "{e}").map_err(stdout_err)?;
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.render().to_string().trim_end().to_string())),
    };
    let params = params_of(&cli)?;
    match &cli.command {
        Command::Gen { ops, machines, release_factor, eligibility, job_assoc, replicates, out_dir } => {
            if *replicates == 0 {
                return Err(CliError::Usage("--replicates must be at least 1".into()));
            }
            match out_dir {
                None if *replicates > 1 => {
                    return Err(CliError::Usage("several replicates need --out-dir".into()));
                }
                None => {
                    let p = gen_params(*ops, *machines, *release_factor, *eligibility, *job_assoc, cli.seed)?;
                    emit(out, None, &codec::instance_to_json(&generate(&p)))?;
                }
                Some(dir) => {
                    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
                    for r in 0..*replicates {
                        let seed = cli.seed.wrapping_add(r as u64);
                        let p = gen_params(*ops, *machines, *release_factor, *eligibility, *job_assoc, seed)?;
                        let path = dir.join(format!("{}.json", p.name(r + 1)));
                        codec::write_file(&path, &codec::instance_to_json(&generate(&p)))?;
                        writeln!(out, "{}", path.display()).map_err(stdout_err)?;
                    }
                }
            }
        }
        Command::Solve { instance, method, variant, formulation, out: target, log } => {
            let inst = codec::read_instance(instance)?;
            let (sched, summary, log_text) = solve_command(&inst, *method, *variant, (*formulation).into(), &params, &cli)?;
            require_feasible(&inst, &sched)?;
            eprintln!("{summary}");
            if let (Some(path), Some(text)) = (log, log_text) {
                std::fs::write(path, text).map_err(io_err(path))?;
            }
            emit(out, target.as_deref(), &codec::schedule_to_json(&sched))?;
        }
        Command::Eval { instance, schedule } => {
            let inst = codec::read_instance(instance)?;
            let sched = read_schedule(schedule, &inst)?;
            require_feasible(&inst, &sched)?;
            let ev = evaluate(&inst, &sched).expect("feasible");
            let mut text = String::new();
            for (j, c) in ev.job_completion.iter().enumerate() {
                text.push_str(&format!("C{} = {c}\n", j + 1));
            }
            text.push_str(&format!("Cmax = {}\nTWCT = {}\n", ev.cmax, ev.twct));
            emit(out, None, &text)?;
        }
        Command::Bench { instances, grid, replicates, methods, runs, bks, out_dir } => {
            let mut list = Vec::new();
            for path in instances {
                let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                list.push(BenchInstance { name, instance: codec::read_instance(path)? });
            }
            for cell in grid {
                let (o, m) = cell
                    .split_once('x')
                    .and_then(|(o, m)| Some((o.parse::<usize>().ok()?, m.parse::<usize>().ok()?)))
                    .ok_or_else(|| CliError::Usage(format!("grid cell `{cell}` is not of the form OPSxMACHINES")))?;
                for r in 0..*replicates {
                    let p = gen_params(
                        o,
                        m,
                        RELEASE_FACTORS[0],
                        ELIGIBILITY_FACTORS[0],
                        JOB_ASSOC_FACTORS[0],
                        cli.seed.wrapping_add(r as u64),
                    )?;
                    list.push(BenchInstance { name: p.name(r + 1), instance: generate(&p) });
                }
            }
            let methods = methods
                .iter()
                .map(|m| m.parse::<Matheuristic>().map_err(CliError::Usage))
                .collect::<Result<Vec<_>, _>>()?;
            let bks = match bks {
                Some(path) => Some(codec::bks_from_csv(&codec::read_file(path)?)?),
                None => None,
            };
            let cfg = BenchConfig { instances: list, methods, runs: *runs, base_seed: cli.seed, params, bks };
            let report = run_bench(&cfg)?;
            for path in report.write_to(out_dir)? {
                writeln!(out, "{}", path.display()).map_err(stdout_err)?;
            }
            writeln!(out, "{report}").map_err(stdout_err)?;
        }
        Command::Gantt { instance, schedule, format, out: target } => {
            let inst = codec::read_instance(instance)?;
            let sched = read_schedule(schedule, &inst)?;
            let g = layout(&inst, &sched).map_err(|e| CliError::Infeasible(e.to_string()))?;
            let text = match format {
                ChartFormat::Text => g.to_text(),
                ChartFormat::Svg => g.to_svg(),
            };
            emit(out, target.as_deref(), &text)?;
        }
        Command::ExportLp { instance, formulation, schedule, out: target } => {
            let inst = codec::read_instance(instance)?;
            let f: Formulation = (*formulation).into();
            let prec = match (f, schedule) {
                (Formulation::Sequencing, _) => None,
                (Formulation::Wspt, Some(path)) => {
                    let sched = read_schedule(path, &inst)?;
                    require_feasible(&inst, &sched)?;
                    Some(wspt_order(&inst, Some(&Theta::from_schedule(inst.num_ops(), &sched))))
                }
                (Formulation::Wspt, None) => Some(wspt_order(&inst, None)),
            };
            let model = BatchModel::new(&inst, ModelConfig::new(f), prec).map_err(|e| CliError::Solver(e.to_string()))?;
            export_model(&model, target).map_err(|e| CliError::Io(format!("{}: {e}", target.display())))?;
            writeln!(out, "{}", target.display()).map_err(stdout_err)?;
        }
    }
    Ok(())
}

type Solved = (Schedule, String, Option<String>);

fn solve_command(
    inst: &Instance,
    method: SolveMethod,
    variant: u8,
    formulation: Formulation,
    params: &Params,
    cli: &Cli,
) -> Result<Solved, CliError> {
    let variant = match variant {
        1 => Variant::One,
        2 => Variant::Two,
        _ => Variant::Three,
    };
    match method {
        SolveMethod::Construct => {
            let s = wmct_wavga(inst);
            let v = evaluate(inst, &s).expect("constructive schedules are valid").twct;
            Ok((s, format!("WMCT-WAVGA: TWCT {v}"), None))
        }
        SolveMethod::Ils | SolveMethod::Grasp => {
            let m = if method == SolveMethod::Ils { Method::Ils } else { Method::Grasp };
            let mh = Matheuristic::new(m, variant);
            let o = run(inst, mh, params, cli.seed);
            let summary = format!("{mh}: TWCT {} (constructive {})", o.twct, o.constructive_twct);
            Ok((o.schedule, summary, Some(o.log.to_string())))
        }
        SolveMethod::Exact => {
            let warm = wmct_wavga(inst);
            let prec = (formulation == Formulation::Wspt)
                .then(|| wspt_order(inst, Some(&Theta::from_schedule(inst.num_ops(), &warm))));
            let model =
                BatchModel::new(inst, ModelConfig::new(formulation), prec).map_err(|e| CliError::Solver(e.to_string()))?;
            let limits = if cli.deterministic {
                Limits::nodes(params.sub_node_limit.unwrap_or(crate::search::DETERMINISTIC_NODE_LIMIT))
            } else {
                Limits { time: Some(Duration::from_secs_f64(cli.time_limit.unwrap_or(60.0))), nodes: params.sub_node_limit }
            };
            let req = SolveRequest::new(&model).warm_start(&warm).limits(limits).backend(params.backend.clone());
            let r = solve(&req).map_err(|e| CliError::Solver(e.to_string()))?;
            let sched = r.incumbent.ok_or_else(|| CliError::Solver(format!("no schedule found ({})", r.status)))?;
            let summary = format!(
                "{}: TWCT {} bound {} ({}, {} nodes)",
                formulation,
                r.objective.expect("incumbent has an objective"),
                r.bound,
                r.status,
                r.nodes
            );
            Ok((sched, summary, None))
        }
    }
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run_cli(std::env::args_os(), &mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct() {
        let all = [
            CliError::Usage(String::new()),
            CliError::Io(String::new()),
            CliError::Parse(String::new()),
            CliError::InvalidInstance(String::new()),
            CliError::Infeasible(String::new()),
            CliError::Solver(String::new()),
            CliError::Config(String::new()),
        ];
        let mut codes: Vec<u8> = all.iter().map(CliError::exit_code).collect();
        codes.sort_unstable();
        codes.dedup();
        assert_eq!(codes.len(), all.len());
        assert!(!codes.contains(&0));
    }

    #[test]
    fn bad_usage() {
        let mut out = Vec::new();
        let e = run_cli(["batchsched", "solve"], &mut out).unwrap_err();
        assert_eq!(e.category(), "usage");
        let e = run_cli(["batchsched", "--param", "rho", "gen", "--ops", "3", "--machines", "1"], &mut out).unwrap_err();
        assert_eq!(e.category(), "usage");
        let e = run_cli(["batchsched", "--param", "rho=2", "gen", "--ops", "3", "--machines", "1"], &mut out).unwrap_err();
        assert_eq!(e.category(), "config");
    }

    #[test]
    fn gen_prints_json() {
        let mut out = Vec::new();
        run_cli(["batchsched", "--seed", "4", "gen", "--ops", "6", "--machines", "2"], &mut out).unwrap();
        let inst = codec::instance_from_json(std::str::from_utf8(&out).unwrap()).unwrap();
        assert_eq!(inst.num_ops(), 6);
        assert_eq!(inst, generate(&GenParams::new(6, 2, 4)));
    }
}
