use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::domain::Domain;
use crate::error::{Error, LearnError};
use crate::learner::{conditions_under, Alternatives, CandidateNorm, LearnOptions};
use crate::norms::{Condition, Modality, Norm, NormSet};
use crate::planner::{Plan, Planner};
use crate::recognize::{Recognizer, Run};
use crate::subst::Substitution;
use crate::syntax::Task;

/// Precision and recall for one group of norms.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Score {
    /// `|true positives| / |learned|`; 1.0 when nothing was learned.
    pub precision: f64,
    /// `|recalled| / |recallable|`; 1.0 when nothing is recallable.
    pub recall: f64,
    /// Set when precision is 1.0 only because nothing was learned.
    pub precision_vacuous: bool,
    /// Set when recall is 1.0 only because nothing was recallable.
    pub recall_vacuous: bool,
    pub true_positives: Vec<Norm>,
    pub false_positives: Vec<Norm>,
    /// Recallable planted instances that were not learned.
    pub misses: Vec<Norm>,
    pub recallable: usize,
}

impl Score {
    fn compute(learned: &[&Norm], planted: &BTreeSet<Norm>, recallable: &BTreeSet<Norm>) -> Score {
        let (tp, fp): (Vec<&Norm>, Vec<&Norm>) = learned.iter().copied().partition(|n| planted.contains(*n));
        let learned_set: BTreeSet<&Norm> = learned.iter().copied().collect();
        let misses: Vec<Norm> = recallable.iter().filter(|n| !learned_set.contains(n)).cloned().collect();
        let recalled = recallable.len() - misses.len();
        Score {
            precision: if learned.is_empty() { 1.0 } else { tp.len() as f64 / learned.len() as f64 },
            recall: if recallable.is_empty() { 1.0 } else { recalled as f64 / recallable.len() as f64 },
            precision_vacuous: learned.is_empty(),
            recall_vacuous: recallable.is_empty(),
            true_positives: tp.into_iter().cloned().collect(),
            false_positives: fp.into_iter().cloned().collect(),
            misses,
            recallable: recallable.len(),
        }
    }
}

/// How well learned norms match planted ones over the observed contexts.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvaluationReport {
    pub obligations: Score,
    pub prohibitions: Score,
    pub overall: Score,
    /// Distinct ground tasks among the explained plans' nodes.
    pub observed_contexts: usize,
    /// Planted obligation instances whose condition occurs in every plan of
    /// every observed context node. No run can refute them, so they are
    /// left out of recall.
    pub unfalsifiable_obligations: Vec<Norm>,
    /// Ground instances of the planted norms over the observed contexts.
    pub planted_instances: Vec<Norm>,
}

/// Recognizes `runs` and scores `learned` against `planted`.
pub fn evaluate(
    learned: &NormSet,
    planted: &NormSet,
    runs: &[Run],
    domain: &Domain,
    goals: &[Task],
    options: LearnOptions,
) -> Result<EvaluationReport, Error> {
    let mut recognizer = Recognizer::new(domain, goals).with_ground_cap(options.ground_cap);
    let mut plans = Vec::with_capacity(runs.len());
    for (index, run) in runs.iter().enumerate() {
        let rec = recognizer
            .recognize(run)
            .map_err(|e| Error::from(LearnError::Run { index, source: Box::new(e.into()) }))?;
        plans.push(rec.plan);
    }
    let mut alternatives = Alternatives::new(Planner::new(domain).with_depth_cap(options.depth_cap));
    Ok(evaluate_plans(learned, planted, &plans, &mut alternatives)?)
}

/// Scores `learned` against `planted` over already explained plans.
///
/// Planted norms are instantiated at every observed node whose task matches
/// their context, against every condition that occurs under that node in
/// some plan for it. A prohibition instance is recallable when its
/// condition occurs in some alternative of an observed context node; an
/// obligation instance is recallable when some alternative of an observed
/// context node lacks its condition.
pub fn evaluate_plans(
    learned: &NormSet,
    planted: &NormSet,
    plans: &[Plan],
    alternatives: &mut Alternatives<'_>,
) -> Result<EvaluationReport, crate::error::PlanError> {
    let mut instances: BTreeSet<CandidateNorm> = BTreeSet::new();
    let mut recallable: BTreeSet<CandidateNorm> = BTreeSet::new();
    let mut falsifiable: BTreeSet<CandidateNorm> = BTreeSet::new();
    let mut contexts: BTreeSet<Task> = BTreeSet::new();

    for plan in plans {
        for node in plan.nodes() {
            contexts.insert(node.task.clone());
            let matching: Vec<(&Norm, Substitution)> = planted
                .iter()
                .filter_map(|n| Substitution::new().match_task(&n.context, &node.task).map(|s| (n, s)))
                .collect();
            if matching.is_empty() {
                continue;
            }
            let summary = alternatives.summary(&node.state_before, &node.task)?;
            let mut possible: BTreeSet<Condition> = conditions_under(node);
            if let Some(zs) = summary.occurring.get(&node.task) {
                possible.extend(zs.iter().cloned());
            }
            for (norm, sigma) in matching {
                let mut conditions: BTreeSet<Condition> =
                    possible.iter().filter(|z| condition_matches(&norm.condition, z, &sigma)).cloned().collect();
                let bound = norm.condition.apply(&sigma);
                if bound.is_ground() {
                    conditions.insert(bound);
                }
                for z in conditions {
                    let instance = Norm { modality: norm.modality, context: node.task.clone(), condition: z };
                    let in_some = summary.occurring.get(&node.task).is_some_and(|zs| zs.contains(&instance.condition));
                    let in_all = summary.plans > 0 && summary.always.contains(&instance.condition);
                    match norm.modality {
                        Modality::Prohibition if in_some => {
                            recallable.insert(instance.clone());
                        }
                        Modality::Obligation if !in_all => {
                            falsifiable.insert(instance.clone());
                        }
                        _ => {}
                    }
                    instances.insert(instance);
                }
            }
        }
    }
    let unfalsifiable: Vec<Norm> =
        instances.iter().filter(|n| n.modality == Modality::Obligation && !falsifiable.contains(*n)).cloned().collect();
    recallable.extend(falsifiable);

    let of = |m: Modality| -> (Vec<&Norm>, BTreeSet<Norm>) {
        (learned.of_modality(m).collect(), recallable.iter().filter(|n| n.modality == m).cloned().collect())
    };
    let (lo, ro) = of(Modality::Obligation);
    let (lf, rf) = of(Modality::Prohibition);
    let all: Vec<&Norm> = learned.iter().collect();
    Ok(EvaluationReport {
        obligations: Score::compute(&lo, &instances, &ro),
        prohibitions: Score::compute(&lf, &instances, &rf),
        overall: Score::compute(&all, &instances, &recallable),
        observed_contexts: contexts.len(),
        unfalsifiable_obligations: unfalsifiable,
        planted_instances: instances.into_iter().collect(),
    })
}

fn condition_matches(pattern: &Condition, ground: &Condition, sigma: &Substitution) -> bool {
    match (pattern, ground) {
        (Condition::Task(p), Condition::Task(g)) => sigma.match_task(p, g).is_some(),
        (Condition::State(p), Condition::State(g)) => p == g,
        _ => false,
    }
}
