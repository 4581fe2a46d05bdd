//! The `normid` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use normid_core::ground::DEFAULT_GROUND_CAP;
use normid_core::learner::{learn_norms, t_learn_norms, LearnOptions};
use normid_core::planner::DEFAULT_DEPTH_CAP;
use normid_core::simulator::{evaluate, generate_runs, EvaluationReport, Score};
use normid_core::{Planner, Recognizer, Run, Task};
use serde::Serialize;

use crate::error::{exit, CliError};
use crate::formats::{
    load_domain, load_norms, load_runs, load_scenario, norms_json, parse_state, parse_task, runs_json, to_json,
    ReportFile,
};

/// Identify the norms in force from observed action sequences.
#[derive(Debug, Parser)]
#[command(name = "normid", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: Global,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Maximum decomposition depth when enumerating plans.
    #[arg(long, global = true, default_value_t = DEFAULT_DEPTH_CAP)]
    pub depth_cap: usize,
    /// Maximum number of ground operator and method instances.
    #[arg(long, global = true, default_value_t = DEFAULT_GROUND_CAP)]
    pub ground_cap: usize,
    /// Output style on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the artifact to this file (a directory for `pipeline`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Suppress warnings on stderr.
    #[arg(short, long, global = true)]
    pub quiet: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Machine,
}

#[derive(Debug, Args)]
pub struct Observed {
    #[arg(long)]
    pub domain: PathBuf,
    #[arg(long)]
    pub runs: PathBuf,
    /// Goal task patterns for recognition; repeatable. Defaults to every
    /// top-level compound task.
    #[arg(long = "goals", value_name = "TASK")]
    pub goals: Vec<String>,
}

#[derive(Debug, Args)]
pub struct Thresholds {
    /// Obligation ratio threshold.
    #[arg(long)]
    pub ot: f64,
    /// Prohibition ratio threshold.
    #[arg(long)]
    pub ft: f64,
    /// Never count a context completing without a condition against the
    /// obligation of that condition.
    #[arg(long)]
    pub no_obligation_refutation: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate the plans of a task network.
    Plan {
        #[arg(long)]
        domain: PathBuf,
        /// Ground tasks of the network, in order; repeatable.
        #[arg(long = "goals", value_name = "TASK", required = true)]
        goals: Vec<String>,
        /// Atoms of the initial state; repeatable.
        #[arg(long = "state", value_name = "ATOM")]
        state: Vec<String>,
        /// Print at most this many plans.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Explain each run by a decomposition tree.
    Recognize {
        #[command(flatten)]
        observed: Observed,
    },
    /// Learn norms assuming no run violates them.
    Learn {
        #[command(flatten)]
        observed: Observed,
    },
    /// Learn norms from supporting and refuting counts.
    LearnThreshold {
        #[command(flatten)]
        observed: Observed,
        #[command(flatten)]
        thresholds: Thresholds,
    },
    /// Generate runs from a scenario.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// Number of runs; defaults to the scenario's `num_runs`, else 100.
        #[arg(long)]
        count: Option<usize>,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score learned norms against planted ones.
    Evaluate {
        #[command(flatten)]
        observed: Observed,
        /// Norm file with the learned norms.
        #[arg(long)]
        learned: PathBuf,
        /// Norm file with the planted norms.
        #[arg(long)]
        norms: PathBuf,
    },
    /// Simulate, learn with thresholds and evaluate in one go.
    Pipeline {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        thresholds: Thresholds,
    },
}

const DEFAULT_RUNS: usize = 100;

struct Io<'a> {
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
    global: &'a Global,
}

impl Io<'_> {
    fn print(&mut self, text: &str) -> Result<(), CliError> {
        self.stdout.write_all(text.as_bytes()).map_err(|source| CliError::Io { path: "<stdout>".into(), source })
    }

    fn warn(&mut self, text: &str) {
        if !self.global.quiet {
            let _ = writeln!(self.stderr, "warning: {text}");
        }
    }

    /// Writes the artifact to `--out` if given, otherwise prints `text` or
    /// `machine` depending on `--format`.
    fn emit(&mut self, file: &str, text: impl FnOnce() -> String) -> Result<(), CliError> {
        match &self.global.out {
            Some(path) => write_file(path, file),
            None => match self.global.format {
                Format::Machine => self.print(file),
                Format::Text => self.print(&text()),
            },
        }
    }

    fn options(&self, refutation: bool) -> LearnOptions {
        LearnOptions {
            depth_cap: self.global.depth_cap,
            ground_cap: self.global.ground_cap,
            obligation_refutation: refutation,
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Parses `args` (program name first) and runs the subcommand. Returns the
/// process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let out: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(out, "{}", e.render());
            return code;
        }
    };
    let mut io = Io { stdout, stderr, global: &cli.global };
    match dispatch(&cli.command, &mut io) {
        Ok(()) => exit::OK,
        Err(e) => {
            let _ = writeln!(io.stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn goals(patterns: &[String]) -> Result<Vec<Task>, CliError> {
    patterns.iter().map(|g| parse_task(g)).collect()
}

fn dispatch(command: &Command, io: &mut Io<'_>) -> Result<(), CliError> {
    match command {
        Command::Plan { domain, goals: network, state, count } => plan(io, domain, network, state, *count),
        Command::Recognize { observed } => recognize(io, observed),
        Command::Learn { observed } => {
            let domain = load_domain(&observed.domain)?;
            let runs = load_runs(&observed.runs)?;
            let learned = learn_norms(&runs, &domain, &goals(&observed.goals)?, io.options(true))
                .map_err(normid_core::Error::from)?;
            let set = learned.norm_set();
            io.emit(&norms_json(&set, None), || set.iter().map(|n| format!("{n}\n")).collect())
        }
        Command::LearnThreshold { observed, thresholds } => {
            let domain = load_domain(&observed.domain)?;
            let runs = load_runs(&observed.runs)?;
            let out = threshold(io, &runs, &domain, &goals(&observed.goals)?, thresholds)?;
            io.emit(&norms_json(&out.norms, Some(&out.evidence)), || {
                out.norms
                    .iter()
                    .map(|n| {
                        let c = out.evidence[n];
                        format!("{n}  ({} supporting, {} refuting)\n", c.supporting, c.refuting)
                    })
                    .collect()
            })
        }
        Command::Simulate { scenario, count, seed } => {
            let runs = simulate(scenario, *count, *seed, io)?;
            let json = runs_json(&runs);
            io.emit(&json, || json.clone())
        }
        Command::Evaluate { observed, learned, norms } => {
            let domain = load_domain(&observed.domain)?;
            let runs = load_runs(&observed.runs)?;
            let learned = load_norms(learned)?;
            let planted = load_norms(norms)?;
            let report = evaluate(&learned, &planted, &runs, &domain, &goals(&observed.goals)?, io.options(true))?;
            io.emit(&to_json(&ReportFile::from_report(&report)), || report_text(&report))
        }
        Command::Pipeline { scenario, count, seed, thresholds } => pipeline(io, scenario, *count, *seed, thresholds),
    }
}

fn plan(
    io: &mut Io<'_>,
    domain: &Path,
    network: &[String],
    state: &[String],
    count: Option<usize>,
) -> Result<(), CliError> {
    let domain = load_domain(domain)?;
    let network = goals(network)?;
    for t in &network {
        domain.check_task(t).map_err(normid_core::Error::from)?;
    }
    let state = parse_state(state)?;
    domain.check_state(&state).map_err(normid_core::Error::from)?;
    let planner = Planner::new(&domain).with_depth_cap(io.global.depth_cap);
    let mut plans = planner.all_plans_for_network(&state, &network).map_err(normid_core::Error::from)?;
    if let Some(n) = count {
        plans.truncate(n);
    }
    let runs: Vec<Run> = plans
        .iter()
        .map(|p| match network.as_slice() {
            [goal] => Run::of_plan(p).with_goal(goal.clone()),
            _ => Run::of_plan(p),
        })
        .collect();
    io.emit(&runs_json(&runs), || {
        let mut s = format!("{} plan(s)\n", plans.len());
        for (i, p) in plans.iter().enumerate() {
            let actions: Vec<String> = p.action_tasks().iter().map(|a| a.to_string()).collect();
            s.push_str(&format!("plan {i}: {}\n", actions.join(" ")));
            for r in &p.roots {
                s.push_str(&r.indented());
            }
        }
        s
    })
}

#[derive(Serialize)]
struct RecognizeOut {
    run: usize,
    tree: String,
    parses: usize,
    consistent: usize,
}

fn recognize(io: &mut Io<'_>, observed: &Observed) -> Result<(), CliError> {
    let domain = load_domain(&observed.domain)?;
    let runs = load_runs(&observed.runs)?;
    let goals = goals(&observed.goals)?;
    let mut recognizer = Recognizer::new(&domain, &goals).with_ground_cap(io.global.ground_cap);
    let mut results = Vec::new();
    for (i, run) in runs.iter().enumerate() {
        let rec = recognizer.recognize(run).map_err(|e| CliError::from(normid_core::Error::from(e)).in_run(i))?;
        if rec.is_ambiguous() {
            io.warn(&format!("run {i}: {} consistent parses, reporting the canonical least", rec.consistent));
        }
        results.push((rec, i));
    }
    let out: Vec<RecognizeOut> = results
        .iter()
        .map(|(rec, i)| RecognizeOut {
            run: *i,
            tree: rec.plan.root().map(|r| r.bracketed()).unwrap_or_default(),
            parses: rec.parses,
            consistent: rec.consistent,
        })
        .collect();
    io.emit(&to_json(&out), || {
        let mut s = String::new();
        for (rec, i) in &results {
            let root = rec.plan.root().expect("recognized plans have a root");
            s.push_str(&format!("run {i}: {}\n", root.bracketed()));
            s.push_str(&root.indented());
        }
        s
    })
}

fn threshold(
    io: &Io<'_>,
    runs: &[Run],
    domain: &normid_core::Domain,
    goals: &[Task],
    t: &Thresholds,
) -> Result<normid_core::ThresholdLearned, CliError> {
    Ok(t_learn_norms(runs, t.ot, t.ft, domain, goals, io.options(!t.no_obligation_refutation))
        .map_err(normid_core::Error::from)?)
}

fn simulate(path: &Path, count: Option<usize>, seed: Option<u64>, io: &Io<'_>) -> Result<Vec<Run>, CliError> {
    let (mut scenario, num_runs) = load_scenario(path)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let n = count.or(num_runs).unwrap_or(DEFAULT_RUNS);
    let planner = Planner::new(&scenario.domain).with_depth_cap(io.global.depth_cap);
    Ok(generate_runs(&scenario, n, &planner)?)
}

fn pipeline(
    io: &mut Io<'_>,
    path: &Path,
    count: Option<usize>,
    seed: Option<u64>,
    t: &Thresholds,
) -> Result<(), CliError> {
    let runs = simulate(path, count, seed, io)?;
    let (scenario, _) = load_scenario(path)?;
    let learned = threshold(io, &runs, &scenario.domain, &[], t)?;
    let report = evaluate(&learned.norms, &scenario.norms, &runs, &scenario.domain, &[], io.options(true))?;
    if let Some(dir) = &io.global.out {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
        write_file(&dir.join("runs.json"), &runs_json(&runs))?;
        write_file(&dir.join("learned.json"), &norms_json(&learned.norms, Some(&learned.evidence)))?;
        write_file(&dir.join("report.json"), &to_json(&ReportFile::from_report(&report)))?;
    }
    match io.global.format {
        Format::Machine => io.print(&to_json(&ReportFile::from_report(&report))),
        Format::Text => io.print(&report_text(&report)),
    }
}

fn score_text(name: &str, s: &Score) -> String {
    let mut out = format!(
        "{name}: precision {:.4}{}, recall {:.4}{} ({} recallable)\n",
        s.precision,
        if s.precision_vacuous { " (nothing learned)" } else { "" },
        s.recall,
        if s.recall_vacuous { " (nothing recallable)" } else { "" },
        s.recallable,
    );
    for n in &s.misses {
        out.push_str(&format!("  missed {n}\n"));
    }
    out
}

/// The human-readable evaluation report.
pub fn report_text(r: &EvaluationReport) -> String {
    let mut out = format!("observed contexts: {}\n", r.observed_contexts);
    out.push_str(&score_text("overall", &r.overall));
    out.push_str(&score_text("obligations", &r.obligations));
    out.push_str(&score_text("prohibitions", &r.prohibitions));
    if !r.unfalsifiable_obligations.is_empty() {
        out.push_str("unfalsifiable obligations (excluded from recall):\n");
        for n in &r.unfalsifiable_obligations {
            out.push_str(&format!("  {n}\n"));
        }
    }
    out
}
