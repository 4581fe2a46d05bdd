//! Norm identification from observed runs.
//!
//! Each run is explained by the recognizer. Conditions that occurred under a
//! context are evidence for obligations and against prohibitions; conditions
//! that only occur in the alternative plans the agent could have chosen for
//! that context are evidence for prohibitions.

mod counters;
mod lattice;

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
pub use counters::{
    counters_for_plan, select, t_learn_norms, update_counter, CounterTable, Counters, Counts, RatioThreshold,
    ThresholdLearned, ThresholdRule,
};
pub use lattice::ObligationLattice;

use crate::domain::Domain;
use crate::error::{Error, LearnError, PlanError};
use crate::ground::DEFAULT_GROUND_CAP;
use crate::norms::{Condition, Modality, Norm, NormSet};
use crate::planner::{DecompositionNode, Plan, Planner, DEFAULT_DEPTH_CAP};
use crate::recognize::{Recognition, Recognizer, Run};
use crate::state::State;
use crate::syntax::Task;

/// A norm whose context and condition are ground.
pub type CandidateNorm = Norm;

/// Conditions grouped by ground context.
pub type ConditionMap = BTreeMap<Task, BTreeSet<Condition>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LearnOptions {
    pub depth_cap: usize,
    pub ground_cap: usize,
    /// Count a context that completes without a condition as refuting the
    /// obligation of that condition (threshold learning only).
    pub obligation_refutation: bool,
}

impl Default for LearnOptions {
    fn default() -> Self {
        LearnOptions { depth_cap: DEFAULT_DEPTH_CAP, ground_cap: DEFAULT_GROUND_CAP, obligation_refutation: true }
    }
}

/// Tasks of strict descendants and states entered while `node` executes.
pub fn conditions_under(node: &DecompositionNode) -> BTreeSet<Condition> {
    let mut out: BTreeSet<Condition> =
        node.descendants().into_iter().map(|d| Condition::Task(d.task.clone())).collect();
    out.extend(node.entered_states().into_iter().map(|s| Condition::State(s.clone())));
    out
}

/// What a plan shows was done: per context, the union of occurring
/// conditions over all nodes with that task. Every node of the plan has an
/// entry, possibly empty.
pub fn occurrences(plan: &Plan) -> ConditionMap {
    let mut out = ConditionMap::new();
    for node in plan.nodes() {
        out.entry(node.task.clone()).or_default().extend(conditions_under(node));
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ComplianceEvidence {
    /// Potential obligations `O_t z` grouped by context `t`.
    pub obligations: ConditionMap,
    /// Prohibitions `F_t z` ruled out because `z` occurred under `t`.
    pub not_prohibited: BTreeSet<CandidateNorm>,
}

/// Obligation and non-prohibition evidence from the plan itself.
pub fn extract_compliance_evidence(plan: &Plan) -> ComplianceEvidence {
    let obligations = occurrences(plan);
    let not_prohibited =
        obligations.iter().flat_map(|(y, zs)| zs.iter().map(move |z| candidate(Modality::Prohibition, y, z))).collect();
    ComplianceEvidence { obligations, not_prohibited }
}

fn candidate(modality: Modality, context: &Task, condition: &Condition) -> CandidateNorm {
    Norm { modality, context: context.clone(), condition: condition.clone() }
}

/// What the plans of one task from one state have in common and in total.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AlternativeSummary {
    /// Number of plans.
    pub plans: usize,
    /// Per task `τ`, every condition occurring under some node `τ` of some
    /// plan.
    pub occurring: ConditionMap,
    /// Conditions occurring under the root of every plan.
    pub always: BTreeSet<Condition>,
}

/// Enumerates the alternative plans of a task from a state and caches their
/// summary, which is all the avoidance evidence depends on.
#[derive(Debug)]
pub struct Alternatives<'d> {
    planner: Planner<'d>,
    cache: BTreeMap<(State, Task), AlternativeSummary>,
}

impl<'d> Alternatives<'d> {
    pub fn new(planner: Planner<'d>) -> Self {
        Alternatives { planner, cache: BTreeMap::new() }
    }

    pub fn planner(&self) -> &Planner<'d> {
        &self.planner
    }

    pub fn summary(&mut self, state: &State, task: &Task) -> Result<&AlternativeSummary, PlanError> {
        let key = (state.clone(), task.clone());
        if !self.cache.contains_key(&key) {
            let mut summary = AlternativeSummary::default();
            for plan in self.planner.all_plans(state, task)? {
                for (t, zs) in occurrences(&plan) {
                    summary.occurring.entry(t).or_default().extend(zs);
                }
                let root = plan.root().map(conditions_under).unwrap_or_default();
                summary.always = if summary.plans == 0 { root } else { &summary.always & &root };
                summary.plans += 1;
            }
            self.cache.insert(key.clone(), summary);
        }
        Ok(&self.cache[&key])
    }

    /// Prohibition candidates for one context node: `F_τ z` for every `z`
    /// occurring under `τ` in an alternative plan of the node but under no
    /// node `τ` inside the node's own subtree.
    pub fn avoided(&mut self, node: &DecompositionNode) -> Result<BTreeSet<CandidateNorm>, PlanError> {
        let mut out = BTreeSet::new();
        if node.is_primitive() {
            return Ok(out);
        }
        let mut own = ConditionMap::new();
        for n in node.nodes() {
            own.entry(n.task.clone()).or_default().extend(conditions_under(n));
        }
        let empty = BTreeSet::new();
        for (tau, zs) in &self.summary(&node.state_before, &node.task)?.occurring {
            let done = own.get(tau).unwrap_or(&empty);
            out.extend(zs.difference(done).map(|z| candidate(Modality::Prohibition, tau, z)));
        }
        Ok(out)
    }
}

/// Prohibition candidates from the alternatives of every node of `plan`.
pub fn extract_avoidance_evidence(
    plan: &Plan,
    alternatives: &mut Alternatives<'_>,
) -> Result<BTreeSet<CandidateNorm>, PlanError> {
    let mut out = BTreeSet::new();
    for node in plan.nodes() {
        out.extend(alternatives.avoided(node)?);
    }
    Ok(out)
}

/// Result of violation-free learning.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LearnedNorms {
    pub obligations: ObligationLattice,
    pub prohibitions: BTreeSet<CandidateNorm>,
    pub not_prohibited: BTreeSet<CandidateNorm>,
}

impl LearnedNorms {
    /// Explicit obligations and potential prohibitions as one set.
    pub fn norm_set(&self) -> NormSet {
        let mut set = NormSet::new();
        for n in self.obligations.norms().into_iter().chain(self.prohibitions.iter().cloned()) {
            // An obligation needs the condition to occur under its context and
            // a prohibition needs it never to have occurred there, so the two
            // sets cannot share a key.
            set.insert(n).expect("obligations and prohibitions are disjoint");
        }
        set
    }
}

/// Incremental violation-free learner; [`learn_norms`] folds it over runs.
#[derive(Debug)]
pub struct NormLearner<'d> {
    recognizer: Recognizer<'d>,
    alternatives: Alternatives<'d>,
    learned: LearnedNorms,
    runs: usize,
}

impl<'d> NormLearner<'d> {
    pub fn new(domain: &'d Domain, goals: &[Task], options: LearnOptions) -> Self {
        NormLearner {
            recognizer: Recognizer::new(domain, goals).with_ground_cap(options.ground_cap),
            alternatives: Alternatives::new(Planner::new(domain).with_depth_cap(options.depth_cap)),
            learned: LearnedNorms::default(),
            runs: 0,
        }
    }

    /// Recognizes `run` and folds it in.
    pub fn observe(&mut self, run: &Run) -> Result<Recognition, LearnError> {
        let index = self.runs;
        let wrap = |e: Error| LearnError::Run { index, source: Box::new(e) };
        let rec = self.recognizer.recognize(run).map_err(|e| wrap(e.into()))?;
        self.observe_plan(&rec.plan).map_err(|e| wrap(e.into()))?;
        Ok(rec)
    }

    /// Folds in an already explained plan.
    pub fn observe_plan(&mut self, plan: &Plan) -> Result<(), PlanError> {
        let compliance = extract_compliance_evidence(plan);
        let avoided = extract_avoidance_evidence(plan, &mut self.alternatives)?;
        let learned = &mut self.learned;
        learned.not_prohibited.extend(compliance.not_prohibited);
        learned.prohibitions.extend(avoided);
        let not_prohibited = &learned.not_prohibited;
        learned.prohibitions.retain(|f| !not_prohibited.contains(f));
        learned.obligations.intersect(&compliance.obligations);
        self.runs += 1;
        Ok(())
    }

    pub fn learned(&self) -> &LearnedNorms {
        &self.learned
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn into_learned(self) -> LearnedNorms {
        self.learned
    }
}

/// Violation-free learning over `runs`.
pub fn learn_norms(
    runs: &[Run],
    domain: &Domain,
    goals: &[Task],
    options: LearnOptions,
) -> Result<LearnedNorms, LearnError> {
    let mut learner = NormLearner::new(domain, goals, options);
    for run in runs {
        learner.observe(run)?;
    }
    Ok(learner.into_learned())
}
