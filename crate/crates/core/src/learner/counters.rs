use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};

use super::{conditions_under, Alternatives, CandidateNorm, LearnOptions};
use crate::domain::Domain;
use crate::error::{Error, LearnError, PlanError};
use crate::norms::{Modality, Norm, NormSet};
use crate::planner::{Plan, Planner};
use crate::recognize::{Recognizer, Run};
use crate::syntax::Task;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Counts {
    pub supporting: u64,
    pub refuting: u64,
}

impl Counts {
    pub fn new(supporting: u64, refuting: u64) -> Self {
        Counts { supporting, refuting }
    }
}

impl core::ops::Add for Counts {
    type Output = Counts;
    fn add(self, rhs: Counts) -> Counts {
        Counts { supporting: self.supporting + rhs.supporting, refuting: self.refuting + rhs.refuting }
    }
}

/// Supporting and refuting counts per candidate norm. Missing entries read
/// as `(0, 0)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CounterTable {
    entries: BTreeMap<CandidateNorm, Counts>,
}

impl CounterTable {
    pub fn new() -> Self {
        CounterTable::default()
    }

    pub fn get(&self, norm: &CandidateNorm) -> Counts {
        self.entries.get(norm).copied().unwrap_or_default()
    }

    pub fn add(&mut self, norm: CandidateNorm, counts: Counts) {
        let e = self.entries.entry(norm).or_default();
        *e = *e + counts;
    }

    pub fn merge(&mut self, other: &CounterTable) {
        for (n, c) in &other.entries {
            self.add(n.clone(), *c);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CandidateNorm, Counts)> + '_ {
        self.entries.iter().map(|(n, c)| (n, *c))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Raw counters accumulated over runs.
///
/// Obligation refutations are not stored: with refutation enabled, the
/// refuting count of `O_y z` is the number of `y` nodes seen without `z`,
/// which is derived from `visits` when the table is read. This keeps the
/// counts independent of run order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    /// `O_y z` supporting counts.
    pub obligations: CounterTable,
    pub prohibitions: CounterTable,
    /// Number of recognized nodes per ground task.
    pub visits: BTreeMap<Task, u64>,
}

impl Counters {
    pub fn new() -> Self {
        Counters::default()
    }

    /// Additive, associative and commutative.
    pub fn merge(&mut self, other: &Counters) {
        self.obligations.merge(&other.obligations);
        self.prohibitions.merge(&other.prohibitions);
        for (t, n) in &other.visits {
            *self.visits.entry(t.clone()).or_default() += n;
        }
    }

    /// The obligation counter table `OC`.
    pub fn obligation_table(&self, refutation: bool) -> CounterTable {
        let mut out = CounterTable::new();
        for (n, c) in self.obligations.iter() {
            let refuting =
                if refutation { self.visits.get(&n.context).copied().unwrap_or(0) - c.supporting } else { 0 };
            out.add(n.clone(), Counts::new(c.supporting, refuting));
        }
        out
    }

    /// The prohibition counter table `FC`.
    pub fn prohibition_table(&self) -> &CounterTable {
        &self.prohibitions
    }
}

/// Counter increments contributed by one explained plan. Each
/// `(context node, condition)` pair counts once.
pub fn counters_for_plan(plan: &Plan, alternatives: &mut Alternatives<'_>) -> Result<Counters, PlanError> {
    let mut out = Counters::new();
    for node in plan.nodes() {
        *out.visits.entry(node.task.clone()).or_default() += 1;
        for z in conditions_under(node) {
            let o = Norm { modality: Modality::Obligation, context: node.task.clone(), condition: z };
            let f = Norm { modality: Modality::Prohibition, ..o.clone() };
            out.obligations.add(o, Counts::new(1, 0));
            out.prohibitions.add(f, Counts::new(0, 1));
        }
        for f in alternatives.avoided(node)? {
            out.prohibitions.add(f, Counts::new(1, 0));
        }
    }
    Ok(out)
}

/// Recognizes `run` and adds its increments to `counters`.
pub fn update_counter(
    run: &Run,
    counters: &mut Counters,
    recognizer: &mut Recognizer<'_>,
    alternatives: &mut Alternatives<'_>,
) -> Result<Plan, Error> {
    let plan = recognizer.recognize(run)?.plan;
    counters.merge(&counters_for_plan(&plan, alternatives)?);
    Ok(plan)
}

/// Decides which counted candidates are kept.
pub trait ThresholdRule {
    fn keep_obligation(&self, counts: Counts) -> bool;
    fn keep_prohibition(&self, counts: Counts) -> bool;
}

/// Keeps an obligation if it was never refuted but seen, or its
/// supporting/refuting ratio exceeds `ot`; keeps a prohibition if it was
/// never refuted or its ratio exceeds `ft`. Comparisons are strict.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatioThreshold {
    ot: f64,
    ft: f64,
}

impl RatioThreshold {
    pub fn new(ot: f64, ft: f64) -> Result<Self, LearnError> {
        // false for NaN too
        let positive = |x: f64| x > 0.0;
        if !positive(ot) || !positive(ft) {
            return Err(LearnError::InvalidThreshold { ot, ft });
        }
        Ok(RatioThreshold { ot, ft })
    }

    pub fn ot(&self) -> f64 {
        self.ot
    }

    pub fn ft(&self) -> f64 {
        self.ft
    }
}

impl ThresholdRule for RatioThreshold {
    fn keep_obligation(&self, c: Counts) -> bool {
        (c.refuting == 0 && c.supporting > 0) || (c.refuting != 0 && c.supporting as f64 / c.refuting as f64 > self.ot)
    }

    fn keep_prohibition(&self, c: Counts) -> bool {
        c.refuting == 0 || c.supporting as f64 / c.refuting as f64 > self.ft
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdLearned {
    pub norms: NormSet,
    /// Counts behind every emitted norm.
    pub evidence: BTreeMap<CandidateNorm, Counts>,
    pub counters: Counters,
    /// The explained plan of every run, in order.
    pub plans: alloc::vec::Vec<Plan>,
}

/// Filters counters with `rule`, then drops every `(context, condition)` kept
/// under both modalities.
pub fn select(counters: &Counters, rule: &dyn ThresholdRule, refutation: bool) -> BTreeMap<CandidateNorm, Counts> {
    let mut kept: BTreeMap<CandidateNorm, Counts> = counters
        .obligation_table(refutation)
        .iter()
        .filter(|(_, c)| rule.keep_obligation(*c))
        .map(|(n, c)| (n.clone(), c))
        .chain(counters.prohibitions.iter().filter(|(_, c)| rule.keep_prohibition(*c)).map(|(n, c)| (n.clone(), c)))
        .collect();
    let both: BTreeSet<CandidateNorm> = kept
        .keys()
        .filter(|n| n.modality == Modality::Obligation)
        .filter(|n| kept.contains_key(&Norm { modality: Modality::Prohibition, ..(*n).clone() }))
        .cloned()
        .collect();
    for o in both {
        kept.remove(&Norm { modality: Modality::Prohibition, ..o.clone() });
        kept.remove(&o);
    }
    kept
}

/// Violation-tolerant learning with ratio thresholds `ot` and `ft`.
pub fn t_learn_norms(
    runs: &[Run],
    ot: f64,
    ft: f64,
    domain: &Domain,
    goals: &[Task],
    options: LearnOptions,
) -> Result<ThresholdLearned, LearnError> {
    let rule = RatioThreshold::new(ot, ft)?;
    let mut recognizer = Recognizer::new(domain, goals).with_ground_cap(options.ground_cap);
    let mut alternatives = Alternatives::new(Planner::new(domain).with_depth_cap(options.depth_cap));
    let mut counters = Counters::new();
    let mut plans = alloc::vec::Vec::with_capacity(runs.len());
    for (index, run) in runs.iter().enumerate() {
        let plan = update_counter(run, &mut counters, &mut recognizer, &mut alternatives)
            .map_err(|e| LearnError::Run { index, source: Box::new(e) })?;
        plans.push(plan);
    }
    let evidence = select(&counters, &rule, options.obligation_refutation);
    let norms = NormSet::from_norms(evidence.keys().cloned()).expect("duals were removed");
    Ok(ThresholdLearned { norms, evidence, counters, plans })
}
