//! JSON file formats for domains, runs, norms, scenarios and reports.
//!
//! Tasks, atoms and literals are written as strings in the term syntax
//! (`goto(aberdeen,london)`, `!at(X)`); identifiers starting with an upper
//! case letter or `_` are variables.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use normid_core::learner::Counts;
use normid_core::norms::{Condition, Modality, Norm, NormSet};
use normid_core::simulator::{EvaluationReport, Score};
use normid_core::syntax::sym;
use normid_core::{Atom, Domain, Lang, Literal, Method, Operator, Run, Scenario, State, Task, TaskNetwork};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainFile {
    /// Predicate name to arity.
    pub predicates: BTreeMap<String, usize>,
    #[serde(default)]
    pub constants: Vec<String>,
    #[serde(default)]
    pub operators: Vec<OperatorEntry>,
    #[serde(default)]
    pub methods: Vec<MethodEntry>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorEntry {
    pub name: String,
    #[serde(default)]
    pub params: Vec<String>,
    /// Literals; negative ones start with `!`.
    #[serde(default)]
    pub pre: Vec<String>,
    #[serde(default)]
    pub add: Vec<String>,
    #[serde(default)]
    pub del: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodEntry {
    pub name: String,
    #[serde(default)]
    pub params: Vec<String>,
    pub task: String,
    #[serde(default)]
    pub precond_pos: Vec<String>,
    #[serde(default)]
    pub precond_neg: Vec<String>,
    #[serde(default)]
    pub subtasks: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunEntry {
    pub initial_state: Vec<String>,
    pub actions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConditionEntry {
    Task(String),
    State { state: Vec<String> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceEntry {
    pub supporting: u64,
    pub refuting: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormEntry {
    /// `"O"` or `"F"`.
    pub modality: String,
    pub context: String,
    pub condition: ConditionEntry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<EvidenceEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalEntry {
    pub task: String,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    /// Relative paths resolve against the scenario file's directory.
    pub domain: PathBuf,
    pub norms: PathBuf,
    pub goals: Vec<GoalEntry>,
    pub violation_rate: f64,
    pub seed: u64,
    #[serde(default)]
    pub initial_state: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_runs: Option<usize>,
}

fn parse_all<T>(
    items: &[String],
    f: impl Fn(&str) -> Result<T, normid_core::error::SyntaxError>,
) -> Result<Vec<T>, CliError> {
    items.iter().map(|s| f(s).map_err(|e| CliError::from(normid_core::Error::from(e)))).collect()
}

pub fn parse_task(s: &str) -> Result<Task, CliError> {
    Task::parse(s).map_err(|e| normid_core::Error::from(e).into())
}

pub fn parse_state(atoms: &[String]) -> Result<State, CliError> {
    let atoms = parse_all(atoms, Atom::parse)?;
    Ok(State::new(atoms).map_err(normid_core::Error::from)?)
}

fn state_strings(state: &State) -> Vec<String> {
    state.iter().map(|a| a.to_string()).collect()
}

fn head(name: &str, params: &[String]) -> Result<Task, CliError> {
    if params.is_empty() {
        parse_task(name)
    } else {
        parse_task(&format!("{name}({})", params.join(",")))
    }
}

fn split_head(task: &Task) -> (String, Vec<String>) {
    (task.name.to_string(), task.args.iter().map(|t| t.to_string()).collect())
}

impl DomainFile {
    pub fn to_domain(&self) -> Result<Domain, CliError> {
        let lang = Lang::new(self.predicates.iter().map(|(p, n)| (sym(p), *n)), self.constants.iter().map(|c| sym(c)));
        let operators = self
            .operators
            .iter()
            .map(|o| {
                Ok(Operator {
                    name: head(&o.name, &o.params)?,
                    pre: parse_all(&o.pre, Literal::parse)?,
                    add: parse_all(&o.add, Atom::parse)?,
                    del: parse_all(&o.del, Atom::parse)?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let methods = self
            .methods
            .iter()
            .map(|m| {
                Ok(Method {
                    name: head(&m.name, &m.params)?,
                    task: parse_task(&m.task)?,
                    pre_pos: parse_all(&m.precond_pos, Atom::parse)?,
                    pre_neg: parse_all(&m.precond_neg, Atom::parse)?,
                    network: TaskNetwork::new(m.subtasks.iter().map(|t| parse_task(t)).collect::<Result<_, _>>()?),
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(Domain::new(lang, operators, methods).map_err(normid_core::Error::from)?)
    }

    pub fn from_domain(domain: &Domain) -> Self {
        let strings = |atoms: &[Atom]| atoms.iter().map(|a| a.to_string()).collect::<Vec<_>>();
        DomainFile {
            predicates: domain.lang().predicates().iter().map(|(p, n)| (p.to_string(), *n)).collect(),
            constants: domain.constants().iter().map(|c| c.to_string()).collect(),
            operators: domain
                .operators()
                .iter()
                .map(|o| {
                    let (name, params) = split_head(&o.name);
                    OperatorEntry {
                        name,
                        params,
                        pre: o.pre.iter().map(|l| l.to_string()).collect(),
                        add: strings(&o.add),
                        del: strings(&o.del),
                    }
                })
                .collect(),
            methods: domain
                .methods()
                .iter()
                .map(|m| {
                    let (name, params) = split_head(&m.name);
                    MethodEntry {
                        name,
                        params,
                        task: m.task.to_string(),
                        precond_pos: strings(&m.pre_pos),
                        precond_neg: strings(&m.pre_neg),
                        subtasks: m.network.tasks().iter().map(|t| t.to_string()).collect(),
                    }
                })
                .collect(),
        }
    }
}

impl RunEntry {
    pub fn to_run(&self) -> Result<Run, CliError> {
        let actions = self.actions.iter().map(|a| parse_task(a)).collect::<Result<_, _>>()?;
        let mut run = Run::new(parse_state(&self.initial_state)?, actions);
        if let Some(g) = &self.goal {
            run = run.with_goal(parse_task(g)?);
        }
        Ok(run)
    }

    pub fn from_run(run: &Run) -> Self {
        RunEntry {
            initial_state: state_strings(&run.initial),
            actions: run.actions.iter().map(|a| a.to_string()).collect(),
            goal: run.goal.as_ref().map(|g| g.to_string()),
        }
    }
}

impl NormEntry {
    pub fn to_norm(&self) -> Result<Norm, CliError> {
        let modality = match self.modality.as_str() {
            "O" => Modality::Obligation,
            "F" => Modality::Prohibition,
            other => return Err(CliError::Format(format!("unknown modality `{other}` (expected \"O\" or \"F\")"))),
        };
        let condition = match &self.condition {
            ConditionEntry::Task(t) => Condition::Task(parse_task(t)?),
            ConditionEntry::State { state } => Condition::State(parse_state(state)?),
        };
        Ok(Norm::new(modality, parse_task(&self.context)?, condition).map_err(normid_core::Error::from)?)
    }

    pub fn from_norm(norm: &Norm, evidence: Option<Counts>) -> Self {
        NormEntry {
            modality: norm.modality.letter().to_string(),
            context: norm.context.to_string(),
            condition: match &norm.condition {
                Condition::Task(t) => ConditionEntry::Task(t.to_string()),
                Condition::State(s) => ConditionEntry::State { state: state_strings(s) },
            },
            evidence: evidence.map(|c| EvidenceEntry { supporting: c.supporting, refuting: c.refuting }),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn decode<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read(path)?).map_err(|source| CliError::Json { path: path.to_path_buf(), source })
}

pub fn load_domain(path: &Path) -> Result<Domain, CliError> {
    decode::<DomainFile>(path)?.to_domain().map_err(|e| e.in_file(path))
}

pub fn load_runs(path: &Path) -> Result<Vec<Run>, CliError> {
    let entries: Vec<RunEntry> = decode(path)?;
    entries.iter().enumerate().map(|(i, e)| e.to_run().map_err(|err| err.in_file(path).in_run(i))).collect()
}

pub fn load_norms(path: &Path) -> Result<NormSet, CliError> {
    let entries: Vec<NormEntry> = decode(path)?;
    let norms = entries.iter().map(|e| e.to_norm()).collect::<Result<Vec<_>, _>>().map_err(|e| e.in_file(path))?;
    NormSet::from_norms(norms).map_err(|e| CliError::from(normid_core::Error::from(e)).in_file(path))
}

/// Loads a scenario and the files it refers to.
pub fn load_scenario(path: &Path) -> Result<(Scenario, Option<usize>), CliError> {
    let file: ScenarioFile = decode(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let domain = load_domain(&base.join(&file.domain))?;
    let norms = load_norms(&base.join(&file.norms))?;
    let goals = file
        .goals
        .iter()
        .map(|g| Ok((parse_task(&g.task)?, g.weight)))
        .collect::<Result<Vec<_>, CliError>>()
        .map_err(|e| e.in_file(path))?;
    let initial = parse_state(&file.initial_state).map_err(|e| e.in_file(path))?;
    let scenario = Scenario { domain, norms, initial, goals, violation_rate: file.violation_rate, seed: file.seed };
    scenario.validate().map_err(|e| CliError::from(e).in_file(path))?;
    Ok((scenario, file.num_runs))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn runs_json(runs: &[Run]) -> String {
    to_json(&runs.iter().map(RunEntry::from_run).collect::<Vec<_>>())
}

/// Norms in canonical order; `evidence` adds counts where present.
pub fn norms_json(norms: &NormSet, evidence: Option<&BTreeMap<Norm, Counts>>) -> String {
    let entries: Vec<NormEntry> =
        norms.iter().map(|n| NormEntry::from_norm(n, evidence.and_then(|e| e.get(n).copied()))).collect();
    to_json(&entries)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub precision: f64,
    pub recall: f64,
    pub precision_vacuous: bool,
    pub recall_vacuous: bool,
    pub recallable: usize,
    pub true_positives: Vec<NormEntry>,
    pub false_positives: Vec<NormEntry>,
    pub misses: Vec<NormEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub observed_contexts: usize,
    pub overall: ScoreEntry,
    pub obligations: ScoreEntry,
    pub prohibitions: ScoreEntry,
    pub unfalsifiable_obligations: Vec<NormEntry>,
}

fn entries(norms: &[Norm]) -> Vec<NormEntry> {
    norms.iter().map(|n| NormEntry::from_norm(n, None)).collect()
}

impl ScoreEntry {
    fn from_score(s: &Score) -> Self {
        ScoreEntry {
            precision: s.precision,
            recall: s.recall,
            precision_vacuous: s.precision_vacuous,
            recall_vacuous: s.recall_vacuous,
            recallable: s.recallable,
            true_positives: entries(&s.true_positives),
            false_positives: entries(&s.false_positives),
            misses: entries(&s.misses),
        }
    }
}

impl ReportFile {
    pub fn from_report(r: &EvaluationReport) -> Self {
        ReportFile {
            observed_contexts: r.observed_contexts,
            overall: ScoreEntry::from_score(&r.overall),
            obligations: ScoreEntry::from_score(&r.obligations),
            prohibitions: ScoreEntry::from_score(&r.prohibitions),
            unfalsifiable_obligations: entries(&r.unfalsifiable_obligations),
        }
    }
}
