//! Total-order HTN decomposition with exhaustive plan enumeration.
//!
//! The search is depth-first. Methods are tried in canonical order (ground
//! method name, then declaration index, then substitution), so every
//! enumeration is deterministic.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;
use core::ops::ControlFlow;

use crate::domain::{Action, Domain, Method, TaskKind};
use crate::error::PlanError;
use crate::state::State;
use crate::subst::{satisfiers, Substitution};
use crate::syntax::{Symbol, Task};

pub const DEFAULT_DEPTH_CAP: usize = 64;

/// One task instance in a decomposition tree.
///
/// Leaves are primitive tasks and carry no method. A compound node records
/// the ground name of the method that refined it. States thread left to
/// right through the children.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DecompositionNode {
    pub task: Task,
    pub method: Option<Task>,
    pub children: Vec<DecompositionNode>,
    pub state_before: State,
    pub state_after: State,
}

impl DecompositionNode {
    pub fn is_primitive(&self) -> bool {
        self.method.is_none()
    }

    /// This node and all its descendants, pre-order.
    pub fn nodes(&self) -> Vec<&DecompositionNode> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a DecompositionNode>) {
        out.push(self);
        for c in &self.children {
            c.collect(out);
        }
    }

    /// Strict descendants, pre-order.
    pub fn descendants(&self) -> Vec<&DecompositionNode> {
        let mut out = self.nodes();
        out.remove(0);
        out
    }

    /// Primitive descendants (or the node itself), left to right.
    pub fn leaves(&self) -> Vec<&DecompositionNode> {
        self.nodes().into_iter().filter(|n| n.is_primitive()).collect()
    }

    /// States entered while this node executes: the state after each of its
    /// actions. The state the node starts in is not included.
    pub fn entered_states(&self) -> Vec<&State> {
        self.leaves().into_iter().map(|l| &l.state_after).collect()
    }

    /// `task(child, …)` for compound nodes, the bare task for leaves, e.g.
    /// `T1(T2(a1,a2),T3(a3))`.
    pub fn bracketed(&self) -> String {
        let mut out = String::new();
        self.write_bracketed(&mut out);
        out
    }

    fn write_bracketed(&self, out: &mut String) {
        let _ = write!(out, "{}", self.task);
        if self.is_primitive() {
            return;
        }
        out.push('(');
        for (i, c) in self.children.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            c.write_bracketed(out);
        }
        out.push(')');
    }

    /// One line per node, children indented by two spaces; compound nodes
    /// show their method in brackets:
    ///
    /// ```text
    /// travel(aberdeen,paris) [fly(aberdeen,paris)]
    ///   goto(aberdeen,london)
    ///   goto(london,paris)
    /// ```
    pub fn indented(&self) -> String {
        let mut out = String::new();
        self.write_indented(0, &mut out);
        out
    }

    fn write_indented(&self, depth: usize, out: &mut String) {
        for _ in 0..depth {
            out.push_str("  ");
        }
        let _ = write!(out, "{}", self.task);
        if let Some(m) = &self.method {
            let _ = write!(out, " [{m}]");
        }
        out.push('\n');
        for c in &self.children {
            c.write_indented(depth + 1, out);
        }
    }

    /// Every state from `state_before` to `state_after` inclusive.
    pub fn states(&self) -> Vec<&State> {
        let mut out = alloc::vec![&self.state_before];
        out.extend(self.entered_states());
        out
    }
}

/// A sequence of actions together with the decomposition that produced it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Plan {
    pub initial: State,
    pub roots: Vec<DecompositionNode>,
    pub actions: Vec<Action>,
}

impl Plan {
    /// Builds a plan from decomposition trees, looking actions up in `domain`.
    pub fn from_roots(domain: &Domain, initial: State, roots: Vec<DecompositionNode>) -> Self {
        let actions = roots
            .iter()
            .flat_map(|r| r.leaves())
            .map(|leaf| domain.action_for(&leaf.task).expect("leaf tasks are primitive"))
            .collect();
        Plan { initial, roots, actions }
    }

    pub fn root(&self) -> Option<&DecompositionNode> {
        self.roots.first()
    }

    pub fn nodes(&self) -> Vec<&DecompositionNode> {
        self.roots.iter().flat_map(|r| r.nodes()).collect()
    }

    pub fn action_tasks(&self) -> Vec<Task> {
        self.actions.iter().map(|a| a.name.clone()).collect()
    }

    pub fn final_state(&self) -> &State {
        self.roots.last().map(|r| &r.state_after).unwrap_or(&self.initial)
    }

    /// Re-executes the actions from the initial state.
    pub fn replays(&self) -> bool {
        let mut state = self.initial.clone();
        for a in &self.actions {
            if !a.is_applicable(&state) {
                return false;
            }
            state = a.apply(&state);
        }
        state == *self.final_state()
    }
}

/// `initial, apply(a₁,·), …, apply(aₙ,·)`.
pub fn states_of(plan: &Plan) -> Vec<State> {
    let mut out = alloc::vec![plan.initial.clone()];
    let mut state = plan.initial.clone();
    for a in &plan.actions {
        state = a.apply(&state);
        out.push(state.clone());
    }
    out
}

type Flow = ControlFlow<()>;

#[derive(Clone, Copy, Debug)]
pub struct Planner<'d> {
    domain: &'d Domain,
    depth_cap: usize,
}

impl<'d> Planner<'d> {
    pub fn new(domain: &'d Domain) -> Self {
        Planner { domain, depth_cap: DEFAULT_DEPTH_CAP }
    }

    pub fn with_depth_cap(mut self, cap: usize) -> Self {
        self.depth_cap = cap;
        self
    }

    pub fn domain(&self) -> &'d Domain {
        self.domain
    }

    /// Every `(method, σ)` whose task matches `task` and whose preconditions
    /// hold in `state`. σ grounds all variables of the method.
    pub fn applicable_methods(&self, task: &Task, state: &State) -> Vec<(&'d Method, Substitution)> {
        let mut universe: Option<BTreeSet<Symbol>> = None;
        let mut found: Vec<(Task, usize, Substitution)> = Vec::new();
        for (idx, m) in self.domain.methods_for(&task.name) {
            let Some(seed) = Substitution::new().match_task(&m.task, task) else {
                continue;
            };
            let universe = universe.get_or_insert_with(|| {
                let mut u = self.domain.constants().clone();
                u.extend(state.constants());
                u.extend(task.constants().cloned());
                u
            });
            for sigma in satisfiers(state, &m.preconditions(), &seed, &m.vars(), universe) {
                found.push((sigma.apply_task(&m.name), idx, sigma));
            }
        }
        found.sort();
        found.into_iter().map(|(_, idx, sigma)| (&self.domain.methods()[idx], sigma)).collect()
    }

    /// The complete set of plans that decompose `goal` from `initial`.
    pub fn all_plans(&self, initial: &State, goal: &Task) -> Result<Vec<Plan>, PlanError> {
        self.all_plans_for_network(initial, core::slice::from_ref(goal))
    }

    pub fn all_plans_for_network(&self, initial: &State, network: &[Task]) -> Result<Vec<Plan>, PlanError> {
        let mut plans = Vec::new();
        self.search(initial, network, &mut |roots| {
            plans.push(Plan::from_roots(self.domain, initial.clone(), roots.to_vec()));
            ControlFlow::Continue(())
        })?;
        Ok(plans)
    }

    /// The first plan of the enumeration, if any.
    pub fn plan(&self, initial: &State, network: &[Task]) -> Result<Option<Plan>, PlanError> {
        let mut first = None;
        self.search(initial, network, &mut |roots| {
            first = Some(Plan::from_roots(self.domain, initial.clone(), roots.to_vec()));
            ControlFlow::Break(())
        })?;
        Ok(first)
    }

    fn search(
        &self,
        initial: &State,
        network: &[Task],
        emit: &mut dyn FnMut(&[DecompositionNode]) -> Flow,
    ) -> Result<(), PlanError> {
        for t in network {
            if !t.is_ground() {
                return Err(PlanError::NonGroundTask(t.clone()));
            }
            if self.domain.check_task(t).is_err() {
                return Err(PlanError::UnknownTask(t.clone()));
            }
        }
        let mut acc = Vec::new();
        let _ = self.expand_seq(network, initial, 0, &mut acc, &mut |nodes, _| emit(nodes))?;
        Ok(())
    }

    fn expand_seq(
        &self,
        tasks: &[Task],
        state: &State,
        depth: usize,
        acc: &mut Vec<DecompositionNode>,
        emit: &mut dyn FnMut(&[DecompositionNode], &State) -> Flow,
    ) -> Result<Flow, PlanError> {
        let Some((first, rest)) = tasks.split_first() else {
            return Ok(emit(acc, state));
        };
        self.expand_task(first, state, depth, &mut |node| {
            let after = node.state_after.clone();
            acc.push(node);
            let flow = self.expand_seq(rest, &after, depth, acc, emit);
            acc.pop();
            flow
        })
    }

    fn expand_task(
        &self,
        task: &Task,
        state: &State,
        depth: usize,
        emit: &mut dyn FnMut(DecompositionNode) -> Result<Flow, PlanError>,
    ) -> Result<Flow, PlanError> {
        if depth > self.depth_cap {
            return Err(PlanError::DepthCapExceeded { task: task.clone(), cap: self.depth_cap });
        }
        match self.domain.kind(&task.name) {
            Some(TaskKind::Primitive) => {
                let action = self.domain.action_for(task).ok_or_else(|| PlanError::UnknownTask(task.clone()))?;
                if !action.is_applicable(state) {
                    return Ok(ControlFlow::Continue(()));
                }
                emit(DecompositionNode {
                    task: task.clone(),
                    method: None,
                    children: Vec::new(),
                    state_before: state.clone(),
                    state_after: action.apply(state),
                })
            }
            Some(TaskKind::Compound) => {
                for (method, sigma) in self.applicable_methods(task, state) {
                    let name = sigma.apply_task(&method.name);
                    let subtasks: Vec<Task> = method.network.tasks().iter().map(|t| sigma.apply_task(t)).collect();
                    let mut acc = Vec::new();
                    let mut failure = None;
                    let flow = self.expand_seq(&subtasks, state, depth + 1, &mut acc, &mut |children, end| {
                        let node = DecompositionNode {
                            task: task.clone(),
                            method: Some(name.clone()),
                            children: children.to_vec(),
                            state_before: state.clone(),
                            state_after: end.clone(),
                        };
                        emit(node).unwrap_or_else(|e| {
                            failure = Some(e);
                            ControlFlow::Break(())
                        })
                    })?;
                    if let Some(e) = failure {
                        return Err(e);
                    }
                    if flow.is_break() {
                        return Ok(flow);
                    }
                }
                Ok(ControlFlow::Continue(()))
            }
            None => Err(PlanError::UnknownTask(task.clone())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::tests::{method, op, travel_domain};
    use crate::domain::Lang;
    use crate::syntax::{render, sym};
    use alloc::string::String;
    use alloc::vec;

    fn task(s: &str) -> Task {
        Task::parse(s).unwrap()
    }

    fn travel_state() -> State {
        State::parse(["at(aberdeen)", "connect(aberdeen,london)", "connect(london,paris)"]).unwrap()
    }

    fn leaves(plan: &Plan) -> Vec<String> {
        plan.actions.iter().map(render).collect()
    }

    #[test]
    fn fly_method_binds_intermediate_city() {
        let d = travel_domain();
        let found = Planner::new(&d).applicable_methods(&task("travel(aberdeen,paris)"), &travel_state());
        assert_eq!(found.len(), 1);
        let (m, sigma) = &found[0];
        assert_eq!(&*m.name.name, "fly");
        assert_eq!(render(sigma), "{X->aberdeen, Y->paris, Z->london}");
    }

    #[test]
    fn no_method_without_connections() {
        let d = travel_domain();
        let s = State::parse(["at(aberdeen)"]).unwrap();
        assert!(Planner::new(&d).applicable_methods(&task("travel(aberdeen,paris)"), &s).is_empty());
    }

    #[test]
    fn two_applicable_methods_in_canonical_order() {
        // Declared out of order on purpose: "by_car" sorts before "by_train".
        let d = Domain::new(
            Lang::new([(sym("ready"), 0)], []),
            vec![op("drive", &[], &[], &[]), op("ride", &[], &[], &[])],
            vec![method("by_train", "go", &[], &[], &["ride"]), method("by_car", "go", &["ready"], &[], &["drive"])],
        )
        .unwrap();
        let s = State::parse(["ready"]).unwrap();
        let names: Vec<_> =
            Planner::new(&d).applicable_methods(&task("go"), &s).iter().map(|(m, _)| render(&m.name)).collect();
        assert_eq!(names, ["by_car", "by_train"]);
    }

    #[test]
    fn travel_plan_goes_via_london() {
        let d = travel_domain();
        let plan = Planner::new(&d).plan(&travel_state(), &[task("travel(aberdeen,paris)")]).unwrap().unwrap();
        assert_eq!(leaves(&plan), ["goto(aberdeen,london)", "goto(london,paris)"]);
        let at: Vec<_> = states_of(&plan)
            .iter()
            .map(|s| s.iter().filter(|a| &*a.predicate == "at").map(render).collect::<Vec<_>>())
            .collect();
        assert_eq!(at, [vec!["at(aberdeen)"], vec!["at(london)"], vec!["at(paris)"]]);
        let root = plan.root().unwrap();
        assert_eq!(root.method, Some(task("fly(aberdeen,paris)")));
        assert_eq!(root.state_before, travel_state());
        assert_eq!(&root.state_after, plan.final_state());
    }

    #[test]
    fn empty_network_gives_empty_plan() {
        let d = travel_domain();
        let plan = Planner::new(&d).plan(&travel_state(), &[]).unwrap().unwrap();
        assert!(plan.actions.is_empty());
        assert_eq!(states_of(&plan), vec![travel_state()]);
    }

    #[test]
    fn unsatisfiable_everywhere_gives_none() {
        let d = travel_domain();
        let s = State::parse(["at(paris)"]).unwrap();
        assert!(Planner::new(&d).plan(&s, &[task("travel(aberdeen,paris)")]).unwrap().is_none());
    }

    #[test]
    fn primitive_goal() {
        let d = travel_domain();
        let s = State::parse(["at(aberdeen)"]).unwrap();
        let p = Planner::new(&d);
        assert_eq!(p.all_plans(&s, &task("goto(aberdeen,paris)")).unwrap().len(), 1);
        assert_eq!(p.all_plans(&s, &task("goto(london,paris)")).unwrap().len(), 0);
    }

    #[test]
    fn leaf_state_query() {
        let d = travel_domain();
        let plan = Planner::new(&d).plan(&travel_state(), &[task("travel(aberdeen,paris)")]).unwrap().unwrap();
        let leaf = &plan.root().unwrap().children[0];
        assert_eq!(leaf.states(), vec![&leaf.state_before, &leaf.state_after]);
    }

    #[test]
    fn depth_cap_is_reported() {
        let d = Domain::new(
            Lang::default(),
            vec![op("a", &[], &[], &[])],
            vec![
                method("m1", "t1", &[], &[], &["t2"]),
                method("m2", "t2", &[], &[], &["t3"]),
                method("m3", "t3", &[], &[], &["a"]),
            ],
        )
        .unwrap();
        let err = Planner::new(&d).with_depth_cap(1).all_plans(&State::empty(), &task("t1")).unwrap_err();
        assert!(matches!(err, PlanError::DepthCapExceeded { cap: 1, .. }));
        assert_eq!(Planner::new(&d).with_depth_cap(3).all_plans(&State::empty(), &task("t1")).unwrap().len(), 1);
    }

    #[test]
    fn unknown_and_lifted_goals_rejected() {
        let d = travel_domain();
        let p = Planner::new(&d);
        assert!(matches!(p.all_plans(&State::empty(), &task("swim")), Err(PlanError::UnknownTask(_))));
        assert!(matches!(p.all_plans(&State::empty(), &task("travel(X,paris)")), Err(PlanError::NonGroundTask(_))));
    }
}
