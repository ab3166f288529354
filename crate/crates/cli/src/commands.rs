//! Subcommand definitions and implementations.
//!
//! Exit codes: 0 success, 1 failure (including an infeasible schedule for
//! `validate`), 2 malformed input.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context as _};
use clap::{Parser, Subcommand};
use gridmotion::evaluate::{instance_report, instance_report_csv, score_suites};
use gridmotion::generate::{
    extract_features, generate_batch, select_diverse, GridConfig, InstanceFeatures, FEATURE_NAMES,
};
use gridmotion::solve::{solve_with_observer, SolverConfig};
use gridmotion::{validate_schedule, Objective, Schedule};
use rayon::prelude::*;
use serde::Deserialize;

use crate::formats::{self, emit_instance, emit_solution, InstanceFile, ParseMode};
use crate::render::render_svg;

#[derive(Debug, Parser)]
#[command(name = "gridmotion", version, about = "Coordinated motion planning of unit squares on the grid")]
pub struct Cli {
    /// Reject unknown keys in input files instead of warning.
    #[arg(long, global = true)]
    pub strict: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expand a parameter grid and write the generated instances.
    Generate {
        /// Grid config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config's base seed.
        #[arg(long, env = "GRIDMOTION_SEED")]
        seed: Option<u64>,
        /// Also write a manifest of this many diverse instances.
        #[arg(long)]
        select: Option<usize>,
    },
    /// Check a solution; exit 0 if feasible, 1 if not, 2 on malformed input.
    Validate {
        instance: PathBuf,
        solution: PathBuf,
        #[arg(long, default_value = "max")]
        objective: Objective,
    },
    /// Solve an instance and write the schedule.
    Solve {
        instance: PathBuf,
        /// Solver config (TOML).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        objective: Option<Objective>,
        /// Seconds; 0 disables the wall-clock limit.
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long, env = "GRIDMOTION_SEED")]
        seed: Option<u64>,
        /// Solution file; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Improvement log, one JSON object per line.
        #[arg(long)]
        telemetry: Option<PathBuf>,
    },
    /// Score solution suites (one directory per team) over an instance set.
    Score {
        /// Directory of instance files.
        #[arg(long)]
        instances: PathBuf,
        /// Suite directories; the directory name is the team name.
        #[arg(required = true)]
        suites: Vec<PathBuf>,
        #[arg(long, default_value = "max")]
        objective: Objective,
        /// Directory for scores.csv, totals.csv and instances.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a schedule as SVG frames.
    Render {
        instance: PathBuf,
        /// Solution file; without one only the start frame is drawn.
        solution: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        frame_every: usize,
    },
    /// Print the feature table of instance files.
    Features {
        #[arg(required = true)]
        instances: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pick a diverse subset from a feature table.
    Select {
        /// Feature table as written by `features` or `generate`.
        #[arg(long)]
        features: PathBuf,
        #[arg(short)]
        k: usize,
        /// Manifest file; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A command error with its exit code.
#[derive(Debug)]
pub enum Failure {
    Failed(anyhow::Error),
    Malformed(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Failed(_) => 1,
            Failure::Malformed(_) => 2,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Failed(e)
    }
}

fn malformed(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Malformed(e.into())
}

pub fn run(cli: Cli) -> ExitCode {
    let mode = if cli.strict { ParseMode::Strict } else { ParseMode::Lenient };
    let result = match cli.command {
        Command::Generate {
            config,
            out,
            seed,
            select,
        } => generate(&config, &out, seed, select),
        Command::Validate {
            instance,
            solution,
            objective,
        } => validate(&instance, &solution, objective, mode),
        Command::Solve {
            instance,
            config,
            objective,
            time_limit,
            seed,
            out,
            telemetry,
        } => solve(
            &instance,
            config.as_deref(),
            objective,
            time_limit,
            seed,
            out.as_deref(),
            telemetry.as_deref(),
            mode,
        ),
        Command::Score {
            instances,
            suites,
            objective,
            out,
        } => score(&instances, &suites, objective, out.as_deref(), mode),
        Command::Render {
            instance,
            solution,
            out,
            frame_every,
        } => render(&instance, solution.as_deref(), &out, frame_every, mode),
        Command::Features { instances, out } => features(&instances, out.as_deref(), mode),
        Command::Select { features, k, out } => select(&features, k, out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            let (Failure::Failed(e) | Failure::Malformed(e)) = &f;
            eprintln!("error: {e:#}");
            ExitCode::from(f.code())
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn load_instance(path: &Path, mode: ParseMode) -> Result<InstanceFile, Failure> {
    let parsed = formats::read_instance(path, mode).with_context(|| format!("reading {}", path.display()));
    Ok(parsed.map_err(malformed)?.value)
}

fn load_solution(path: &Path, robots: usize, mode: ParseMode) -> Result<Schedule, Failure> {
    let parsed = formats::read_solution(path, robots, mode).with_context(|| format!("reading {}", path.display()));
    Ok(parsed.map_err(malformed)?.value)
}

fn features_header() -> Vec<&'static str> {
    std::iter::once("instance").chain(FEATURE_NAMES).collect()
}

fn features_csv(rows: &[(String, InstanceFeatures)]) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(features_header()).map_err(anyhow::Error::from)?;
    for (name, f) in rows {
        w.write_record([
            name.clone(),
            f.n_robots.to_string(),
            f.density.to_string(),
            f.n_clusters.to_string(),
            f.n_clustered_robots.to_string(),
            f.volume.to_string(),
            f.free_area.to_string(),
        ])
        .map_err(anyhow::Error::from)?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("{e}"))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn generate(config: &Path, out: &Path, seed: Option<u64>, select: Option<usize>) -> Result<u8, Failure> {
    let mut grid = GridConfig::load(config)
        .with_context(|| format!("loading {}", config.display()))
        .map_err(malformed)?;
    if let Some(s) = seed {
        grid.base_seed = s;
    }
    let params = grid.expand().map_err(malformed)?;
    let generated = generate_batch(&params);
    let mut rows = Vec::with_capacity(generated.len());
    let mut files = Vec::with_capacity(generated.len());
    for (p, g) in params.iter().zip(generated) {
        let g = g.with_context(|| format!("generating with seed {}", p.seed))?;
        let name = g.instance.name().to_string();
        files.push((out.join(format!("{name}.json")), emit_instance(&g.instance, Some(&g.provenance))));
        rows.push((name, extract_features(&g.instance, Some(&g.provenance))));
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    files
        .par_iter()
        .try_for_each(|(path, text)| write_file(path, text))?;
    write_file(&out.join("features.csv"), &features_csv(&rows)?)?;
    println!("generated {} instances in {}", rows.len(), out.display());
    if let Some(k) = select {
        let feats: Vec<InstanceFeatures> = rows.iter().map(|(_, f)| *f).collect();
        let picked = select_diverse(&feats, k).map_err(anyhow::Error::from)?;
        let manifest: String = picked.iter().map(|&i| format!("{}\n", rows[i].0)).collect();
        write_file(&out.join("selection.txt"), &manifest)?;
        println!("selected {k} instances into {}", out.join("selection.txt").display());
    }
    Ok(0)
}

fn validate(instance: &Path, solution: &Path, objective: Objective, mode: ParseMode) -> Result<u8, Failure> {
    let inst = load_instance(instance, mode)?.instance;
    let schedule = load_solution(solution, inst.robot_count(), mode)?;
    let report = validate_schedule(&inst, &schedule).map_err(malformed)?;
    let stretch = |s: Option<f64>| s.map_or_else(|| "undefined".to_string(), |v| format!("{v:.4}"));
    println!("instance: {}", inst.name());
    println!("feasible: {}", if report.feasible { "yes" } else { "no" });
    if let Some(v) = &report.first_violation {
        println!(
            "violation: step {} rule {} ({}) robots {:?}",
            v.step,
            v.rule.id(),
            v.rule.description(),
            v.robots
        );
    }
    println!("makespan: {}", report.makespan);
    println!("total_distance: {}", report.total_distance);
    println!("lb_makespan: {}", report.lb_makespan);
    println!("lb_total: {}", report.lb_total);
    println!("stretch_max: {}", stretch(report.stretch_max()));
    println!("stretch_sum: {}", stretch(report.stretch_sum()));
    println!("objective {}: {}", objective, objective.value(report.objectives()));
    for w in &report.warnings {
        println!("warning: {w}");
    }
    Ok(if report.feasible { 0 } else { 1 })
}

#[allow(clippy::too_many_arguments)]
fn solve(
    instance: &Path,
    config: Option<&Path>,
    objective: Option<Objective>,
    time_limit: Option<f64>,
    seed: Option<u64>,
    out: Option<&Path>,
    telemetry: Option<&Path>,
    mode: ParseMode,
) -> Result<u8, Failure> {
    let inst = load_instance(instance, mode)?.instance;
    let mut cfg = match config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            SolverConfig::from_toml(&text).map_err(malformed)?
        }
        None => SolverConfig::default(),
    };
    if let Some(o) = objective {
        cfg.objective = o;
    }
    if let Some(t) = time_limit {
        cfg.time_limit = (t > 0.0).then_some(t);
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(malformed)?;

    let mut log = match telemetry {
        Some(p) => Some(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => None,
    };
    let outcome = solve_with_observer(&inst, &cfg, |snap| {
        if let Some(f) = log.as_mut() {
            let line = serde_json::to_string(snap).expect("snapshots serialize");
            if let Err(e) = writeln!(f, "{line}") {
                log::warn!("telemetry write failed: {e}");
            }
        }
    })
    .with_context(|| format!("solving {}", inst.name()))?;

    // The solver validates its output; check once more before writing.
    let report = validate_schedule(&inst, &outcome.schedule).map_err(anyhow::Error::from)?;
    if !report.feasible {
        return Err(anyhow!("solver returned an infeasible schedule; nothing written").into());
    }
    let text = emit_solution(&outcome.schedule);
    match out {
        Some(p) => write_file(p, &text)?,
        None => print!("{text}"),
    }
    eprintln!(
        "{}: makespan {} (lb {}), total {} (lb {}), {} iterations",
        inst.name(),
        report.makespan,
        report.lb_makespan,
        report.total_distance,
        report.lb_total,
        outcome.telemetry.iterations
    );
    Ok(0)
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

#[derive(Deserialize)]
struct SolutionHeader {
    instance: String,
}

fn score(
    instances_dir: &Path,
    suite_dirs: &[PathBuf],
    objective: Objective,
    out: Option<&Path>,
    mode: ParseMode,
) -> Result<u8, Failure> {
    let files: Vec<InstanceFile> = json_files(instances_dir)?
        .par_iter()
        .map(|p| load_instance(p, mode))
        .collect::<Result<_, _>>()?;
    let robots: HashMap<String, usize> = files
        .iter()
        .map(|f| (f.instance.name().to_string(), f.instance.robot_count()))
        .collect();

    let mut suites: BTreeMap<String, Vec<Schedule>> = BTreeMap::new();
    for dir in suite_dirs {
        let team = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .ok_or_else(|| malformed(anyhow!("suite path {} has no name", dir.display())))?;
        if suites.contains_key(&team) {
            return Err(malformed(anyhow!("two suites named `{team}`")));
        }
        let parsed: Vec<Result<Schedule, Failure>> = json_files(dir)?
            .par_iter()
            .map(|p| {
                let text = formats::read_text(p).map_err(malformed)?;
                let header: SolutionHeader = serde_json::from_str(&text)
                    .with_context(|| format!("reading {}", p.display()))
                    .map_err(malformed)?;
                let n = *robots
                    .get(&header.instance)
                    .ok_or_else(|| malformed(anyhow!("{}: unknown instance `{}`", p.display(), header.instance)))?;
                let s = formats::parse_solution(&text, n, mode)
                    .with_context(|| format!("reading {}", p.display()))
                    .map_err(malformed)?;
                Ok(s.value)
            })
            .collect();
        let mut schedules = Vec::new();
        for r in parsed {
            match r {
                Ok(s) => schedules.push(s),
                Err(Failure::Malformed(e)) if mode == ParseMode::Lenient => {
                    log::warn!("team {team}: skipping unreadable solution: {e:#}");
                }
                Err(f) => return Err(f),
            }
        }
        suites.insert(team, schedules);
    }

    let instances: Vec<_> = files.iter().map(|f| f.instance.clone()).collect();
    let report = score_suites(&instances, &suites, objective).map_err(malformed)?;
    print!("{}", report.summary());
    if let Some(dir) = out {
        let features: HashMap<String, InstanceFeatures> = files
            .iter()
            .filter_map(|f| {
                f.provenance
                    .as_ref()
                    .map(|p| (f.instance.name().to_string(), extract_features(&f.instance, Some(p))))
            })
            .collect();
        let rows = instance_report(&instances, &report, &features);
        write_file(&dir.join("scores.csv"), &report.scores_csv())?;
        write_file(&dir.join("totals.csv"), &report.totals_csv())?;
        write_file(&dir.join("instances.csv"), &instance_report_csv(&rows))?;
    }
    Ok(0)
}

fn render(instance: &Path, solution: Option<&Path>, out: &Path, every: usize, mode: ParseMode) -> Result<u8, Failure> {
    let inst = load_instance(instance, mode)?.instance;
    let schedule = match solution {
        Some(p) => load_solution(p, inst.robot_count(), mode)?,
        None => Schedule::empty(inst.name()),
    };
    let svg = render_svg(&inst, &schedule, every).map_err(malformed)?;
    write_file(out, &svg)?;
    Ok(0)
}

fn features(paths: &[PathBuf], out: Option<&Path>, mode: ParseMode) -> Result<u8, Failure> {
    let rows: Vec<(String, InstanceFeatures)> = paths
        .par_iter()
        .map(|p| {
            let f = load_instance(p, mode)?;
            Ok((
                f.instance.name().to_string(),
                extract_features(&f.instance, f.provenance.as_ref()),
            ))
        })
        .collect::<Result<_, Failure>>()?;
    let text = features_csv(&rows)?;
    match out {
        Some(p) => write_file(p, &text)?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn read_features(path: &Path) -> Result<Vec<(String, InstanceFeatures)>, Failure> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(malformed)?;
    let header: Vec<String> = reader
        .headers()
        .map_err(malformed)?
        .iter()
        .map(str::to_string)
        .collect();
    if header != features_header() {
        return Err(malformed(anyhow!("{}: unexpected columns {header:?}", path.display())));
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(malformed)?;
        let bad = || malformed(anyhow!("{}: bad value in data row {}", path.display(), line + 1));
        let num = |i: usize| record.get(i).ok_or_else(bad)?.parse::<f64>().map_err(|_| bad());
        let int = |i: usize| -> Result<u64, Failure> {
            let v = num(i)?;
            if v < 0.0 || v.fract() != 0.0 {
                return Err(bad());
            }
            Ok(v as u64)
        };
        rows.push((
            record[0].to_string(),
            InstanceFeatures {
                n_robots: int(1)? as u32,
                density: num(2)?,
                n_clusters: int(3)? as u32,
                n_clustered_robots: int(4)? as u32,
                volume: int(5)?,
                free_area: int(6)?,
                external: false,
            },
        ));
    }
    Ok(rows)
}

fn select(path: &Path, k: usize, out: Option<&Path>) -> Result<u8, Failure> {
    let rows = read_features(path)?;
    let feats: Vec<InstanceFeatures> = rows.iter().map(|(_, f)| *f).collect();
    let picked = select_diverse(&feats, k).map_err(malformed)?;
    let manifest: String = picked.iter().map(|&i| format!("{}\n", rows[i].0)).collect();
    match out {
        Some(p) => write_file(p, &manifest)?,
        None => print!("{manifest}"),
    }
    Ok(0)
}
