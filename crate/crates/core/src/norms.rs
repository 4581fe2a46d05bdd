//! Obligations and prohibitions over decomposition trees.
//!
//! A norm `X_y z` has modality `X`, a context task `y` and a condition `z`,
//! which is either a task or a fully specified state. The condition occurs
//! in the context of a node for `y` when a strict descendant of the node
//! unifies with it, or, for a state, when the state is entered while the node
//! executes.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use crate::error::NormError;
use crate::grammar::SYNTHETIC_START;
use crate::planner::{DecompositionNode, Plan};
use crate::state::State;
use crate::subst::Substitution;
use crate::syntax::{render, Task};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Modality {
    Obligation,
    Prohibition,
}

impl Modality {
    pub fn letter(self) -> char {
        match self {
            Modality::Obligation => 'O',
            Modality::Prohibition => 'F',
        }
    }

    pub fn dual(self) -> Modality {
        match self {
            Modality::Obligation => Modality::Prohibition,
            Modality::Prohibition => Modality::Obligation,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    Task(Task),
    State(State),
}

impl Condition {
    pub fn is_ground(&self) -> bool {
        match self {
            Condition::Task(t) => t.is_ground(),
            Condition::State(_) => true,
        }
    }

    pub fn apply(&self, sigma: &Substitution) -> Condition {
        match self {
            Condition::Task(t) => Condition::Task(sigma.apply_task(t)),
            Condition::State(s) => Condition::State(s.clone()),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Task(t) => write!(f, "{t}"),
            Condition::State(s) => write!(f, "{s}"),
        }
    }
}

impl From<Task> for Condition {
    fn from(t: Task) -> Self {
        Condition::Task(t)
    }
}

impl From<State> for Condition {
    fn from(s: State) -> Self {
        Condition::State(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Norm {
    pub modality: Modality,
    pub context: Task,
    pub condition: Condition,
}

impl Norm {
    pub fn new(modality: Modality, context: Task, condition: impl Into<Condition>) -> Result<Self, NormError> {
        if &*context.name == SYNTHETIC_START {
            return Err(NormError::SyntheticContext);
        }
        Ok(Norm { modality, context, condition: condition.into() })
    }

    pub fn obligation(context: Task, condition: impl Into<Condition>) -> Result<Self, NormError> {
        Norm::new(Modality::Obligation, context, condition)
    }

    pub fn prohibition(context: Task, condition: impl Into<Condition>) -> Result<Self, NormError> {
        Norm::new(Modality::Prohibition, context, condition)
    }

    pub fn is_ground(&self) -> bool {
        self.context.is_ground() && self.condition.is_ground()
    }

    /// `(context, condition)`, the part shared by an obligation and its dual.
    pub fn key(&self) -> (&Task, &Condition) {
        (&self.context, &self.condition)
    }

    /// Whether the norm is broken at `node`. `None` when the node's task does
    /// not match the context.
    pub fn violated_at(&self, node: &DecompositionNode) -> Option<bool> {
        let sigma = Substitution::new().match_task(&self.context, &node.task)?;
        let occurred = occurs_under(&self.condition, node, &sigma);
        Some(match self.modality {
            Modality::Obligation => !occurred,
            Modality::Prohibition => occurred,
        })
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{{{}}} {}", self.modality.letter(), self.context, self.condition)
    }
}

/// A set of norms in canonical order, never holding an obligation and a
/// prohibition with the same context and condition.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct NormSet {
    norms: BTreeSet<Norm>,
}

impl NormSet {
    pub fn new() -> Self {
        NormSet::default()
    }

    pub fn from_norms<I: IntoIterator<Item = Norm>>(norms: I) -> Result<Self, NormError> {
        let mut set = NormSet::new();
        for n in norms {
            set.insert(n)?;
        }
        Ok(set)
    }

    /// Adds a norm. Fails if its dual is already present.
    pub fn insert(&mut self, norm: Norm) -> Result<bool, NormError> {
        let dual = Norm { modality: norm.modality.dual(), ..norm.clone() };
        if self.norms.contains(&dual) {
            return Err(NormError::ConflictingModalities {
                context: render(&norm.context),
                condition: render(&norm.condition),
            });
        }
        Ok(self.norms.insert(norm))
    }

    pub fn remove(&mut self, norm: &Norm) -> bool {
        self.norms.remove(norm)
    }

    pub fn contains(&self, norm: &Norm) -> bool {
        self.norms.contains(norm)
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Norm> + '_ {
        self.norms.iter()
    }

    pub fn of_modality(&self, modality: Modality) -> impl Iterator<Item = &Norm> + '_ {
        self.norms.iter().filter(move |n| n.modality == modality)
    }

    /// Norms of this set that `plan` violates.
    pub fn violated_by<'a>(&'a self, plan: &Plan) -> Vec<&'a Norm> {
        self.norms.iter().filter(|n| violated(n, plan)).collect()
    }

    pub fn complies(&self, plan: &Plan) -> bool {
        self.norms.iter().all(|n| !violated(n, plan))
    }
}

impl<'a> IntoIterator for &'a NormSet {
    type Item = &'a Norm;
    type IntoIter = alloc::collections::btree_set::Iter<'a, Norm>;
    fn into_iter(self) -> Self::IntoIter {
        self.norms.iter()
    }
}

/// Whether `condition` occurs while `node` executes, for any grounding of
/// the condition's variables.
pub fn occurs(condition: &Condition, node: &DecompositionNode) -> bool {
    occurs_under(condition, node, &Substitution::new())
}

/// As [`occurs`], with the condition's variables constrained by `sigma`
/// (typically the binding that matched the context to the node).
pub fn occurs_under(condition: &Condition, node: &DecompositionNode, sigma: &Substitution) -> bool {
    match condition {
        Condition::Task(z) => node.descendants().iter().any(|d| sigma.match_task(z, &d.task).is_some()),
        Condition::State(z) => node.entered_states().into_iter().any(|s| state_condition_equality(s, z)),
    }
}

/// Canonical whole-state equality.
pub fn state_condition_equality(a: &State, b: &State) -> bool {
    a == b
}

/// Nodes of `plan` at which `norm` is violated.
pub fn violations<'p>(norm: &Norm, plan: &'p Plan) -> Vec<&'p DecompositionNode> {
    plan.nodes().into_iter().filter(|n| norm.violated_at(n) == Some(true)).collect()
}

/// Whether `norm` is violated at any node of `plan` matching its context.
pub fn violated(norm: &Norm, plan: &Plan) -> bool {
    plan.nodes().into_iter().any(|n| norm.violated_at(n) == Some(true))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::domain::tests::{method, op, travel_domain};
    use crate::domain::{Domain, Lang};
    use crate::planner::Planner;
    use crate::syntax::sym;
    use alloc::format;
    use alloc::string::String;
    use alloc::vec;

    fn task(s: &str) -> Task {
        Task::parse(s).unwrap()
    }

    /// The two-tree domain: `t1` is refined either into `t2 t5` or into
    /// `t2 t9 t10`; `t2 -> t3 t4`, `t5 -> t6 t7 t8`. Every primitive `tN`
    /// adds `did_tN`.
    pub(crate) fn two_tree_domain() -> Domain {
        let prims = ["t3", "t4", "t6", "t7", "t8", "t9", "t10"];
        let lang = Lang::new(prims.map(|p| (sym(&format!("did_{p}")), 0)), []);
        let ops = prims.iter().map(|p| op(p, &[], &[&format!("did_{p}")], &[])).collect();
        Domain::new(
            lang,
            ops,
            vec![
                method("m_left", "t1", &[], &[], &["t2", "t5"]),
                method("m_right", "t1", &[], &[], &["t2", "t9", "t10"]),
                method("m_t2", "t2", &[], &[], &["t3", "t4"]),
                method("m_t5", "t5", &[], &[], &["t6", "t7", "t8"]),
            ],
        )
        .unwrap()
    }

    pub(crate) fn two_tree_plans() -> (Plan, Plan) {
        let d = two_tree_domain();
        let plans = Planner::new(&d).all_plans(&State::empty(), &task("t1")).unwrap();
        assert_eq!(plans.len(), 2);
        let left = plans.iter().find(|p| p.roots[0].method == Some(task("m_left"))).unwrap().clone();
        let right = plans.iter().find(|p| p.roots[0].method == Some(task("m_right"))).unwrap().clone();
        (left, right)
    }

    fn london_plan() -> Plan {
        let d = travel_domain();
        let init = State::parse(["at(aberdeen)", "connect(aberdeen,london)", "connect(london,paris)"]).unwrap();
        Planner::new(&d).plan(&init, &[task("travel(aberdeen,paris)")]).unwrap().unwrap()
    }

    fn at_london() -> State {
        State::parse(["at(london)", "connect(aberdeen,london)", "connect(london,paris)"]).unwrap()
    }

    #[test]
    fn state_occurs_in_travel_context() {
        let plan = london_plan();
        assert!(occurs(&Condition::State(at_london()), plan.root().unwrap()));
        // the entry state of the context does not count
        assert!(!occurs(&Condition::State(plan.initial.clone()), plan.root().unwrap()));
    }

    #[test]
    fn prohibition_on_london_is_violated() {
        let norm = Norm::prohibition(task("travel(X,Y)"), at_london()).unwrap();
        assert!(violated(&norm, &london_plan()));
        assert_eq!(violations(&norm, &london_plan()).len(), 1);
    }

    #[test]
    fn task_occurrence_in_two_trees() {
        let (left, right) = two_tree_plans();
        let t2 = left.nodes().into_iter().find(|n| n.task == task("t2")).unwrap();
        assert!(occurs(&task("t4").into(), t2));
        assert!(!occurs(&task("t9").into(), left.root().unwrap()));
        assert!(occurs(&task("t9").into(), right.root().unwrap()));
        assert!(!violated(&Norm::obligation(task("t1"), task("t2")).unwrap(), &left));
        assert!(violated(&Norm::prohibition(task("t1"), task("t9")).unwrap(), &right));
    }

    #[test]
    fn unmatched_context_is_never_violated() {
        let (left, _) = two_tree_plans();
        assert!(!violated(&Norm::obligation(task("t9"), task("t3")).unwrap(), &left));
        assert!(!violated(&Norm::prohibition(task("nothing"), task("t3")).unwrap(), &left));
    }

    #[test]
    fn condition_variables_follow_context_binding() {
        let plan = london_plan();
        // goto(X,london) under travel(X,Y): X is bound to aberdeen
        let hit = Norm::prohibition(task("travel(X,Y)"), task("goto(X,london)")).unwrap();
        let miss = Norm::prohibition(task("travel(X,Y)"), task("goto(Y,london)")).unwrap();
        assert!(violated(&hit, &plan));
        assert!(!violated(&miss, &plan));
    }

    #[test]
    fn state_equality_is_whole_state() {
        let a = State::parse(["p(a)", "q(b)"]).unwrap();
        let b = State::parse(["q(b)", "p(a)"]).unwrap();
        assert!(state_condition_equality(&a, &b));
        assert!(state_condition_equality(
            &State::parse(["at(london)"]).unwrap(),
            &State::parse(["at(london)"]).unwrap()
        ));
        assert!(!state_condition_equality(&State::parse(["p(a)"]).unwrap(), &a));
    }

    #[test]
    fn norm_set_rejects_duals() {
        let o = Norm::obligation(task("t1"), task("t2")).unwrap();
        let f = Norm::prohibition(task("t1"), task("t2")).unwrap();
        let mut set = NormSet::new();
        assert!(set.insert(o).unwrap());
        assert!(matches!(set.insert(f), Err(NormError::ConflictingModalities { .. })));
        assert!(Norm::obligation(task(SYNTHETIC_START), task("t2")).is_err());
    }

    #[test]
    fn display_forms() {
        let n = Norm::prohibition(task("travel(X,Y)"), State::parse(["at(london)"]).unwrap()).unwrap();
        assert_eq!(render(&n), "F_{travel(X,Y)} {at(london)}");
        let n: String = render(&Norm::obligation(task("t1"), task("t2")).unwrap());
        assert_eq!(n, "O_{t1} t2");
    }

    #[test]
    fn compliance_of_two_trees() {
        let (left, right) = two_tree_plans();
        let set = NormSet::from_norms([Norm::prohibition(task("t1"), task("t9")).unwrap()]).unwrap();
        assert!(set.complies(&left));
        assert!(!set.complies(&right));
        assert_eq!(set.violated_by(&right).len(), 1);
    }
}
