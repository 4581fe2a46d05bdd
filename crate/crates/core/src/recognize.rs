//! Keyhole plan recognition by parsing.
//!
//! A run is explained by grounding the domain from the run's initial state,
//! building the induced grammar, parsing the observed actions, and replaying
//! each candidate tree from the initial state. Trees whose actions or method
//! preconditions fail during replay are discarded; of the rest, the
//! canonically least tree is returned.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::domain::Domain;
use crate::earley::parse_tasks;
use crate::error::RecognizeError;
use crate::grammar::{to_grammar, Grammar, ParseTree};
use crate::ground::{ground_domain, GroundingOptions, DEFAULT_GROUND_CAP};
use crate::planner::{DecompositionNode, Plan};
use crate::state::State;
use crate::subst::Substitution;
use crate::syntax::Task;

/// One observed episode: a start state and the actions executed from it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Run {
    pub initial: State,
    pub actions: Vec<Task>,
    /// Goal the run pursued, when known. May contain variables.
    pub goal: Option<Task>,
}

impl Run {
    pub fn new(initial: State, actions: Vec<Task>) -> Self {
        Run { initial, actions, goal: None }
    }

    pub fn with_goal(mut self, goal: Task) -> Self {
        self.goal = Some(goal);
        self
    }

    /// The run that executing `plan` produces.
    pub fn of_plan(plan: &Plan) -> Self {
        Run::new(plan.initial.clone(), plan.action_tasks())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Recognition {
    pub plan: Plan,
    /// Number of parse trees of the observations.
    pub parses: usize,
    /// Number of those trees that replay consistently from the initial state.
    pub consistent: usize,
}

impl Recognition {
    pub fn is_ambiguous(&self) -> bool {
        self.consistent > 1
    }
}

#[derive(Debug)]
struct Compiled {
    ground: Domain,
    grammar: Grammar,
}

/// Recognises runs against one domain. Grounded domains and grammars are
/// cached per `(initial state, goals)`.
#[derive(Debug)]
pub struct Recognizer<'d> {
    domain: &'d Domain,
    goals: Vec<Task>,
    ground_cap: usize,
    cache: BTreeMap<(State, Vec<Task>), Arc<Compiled>>,
}

impl<'d> Recognizer<'d> {
    /// `goals` may contain variables; an empty list means every top-level
    /// compound task of the domain.
    pub fn new(domain: &'d Domain, goals: &[Task]) -> Self {
        let goals = if goals.is_empty() { domain.top_level_goals() } else { goals.to_vec() };
        Recognizer { domain, goals, ground_cap: DEFAULT_GROUND_CAP, cache: BTreeMap::new() }
    }

    pub fn with_ground_cap(mut self, cap: usize) -> Self {
        self.ground_cap = cap;
        self
    }

    pub fn domain(&self) -> &'d Domain {
        self.domain
    }

    fn compile(&mut self, initial: &State, goals: Vec<Task>) -> Result<Arc<Compiled>, RecognizeError> {
        let key = (initial.clone(), goals);
        if let Some(c) = self.cache.get(&key) {
            return Ok(c.clone());
        }
        let ground = ground_domain(self.domain, GroundingOptions { cap: self.ground_cap, initial: Some(initial) })?;
        let mut instances: Vec<Task> = ground
            .methods()
            .iter()
            .map(|m| &m.task)
            .chain(ground.operators().iter().map(|o| &o.name))
            .filter(|t| key.1.iter().any(|g| Substitution::new().match_task(g, t).is_some()))
            .cloned()
            .collect();
        instances.sort();
        instances.dedup();
        let grammar = to_grammar(&ground, &instances)?;
        let compiled = Arc::new(Compiled { ground, grammar });
        self.cache.insert(key, compiled.clone());
        Ok(compiled)
    }

    pub fn recognize(&mut self, run: &Run) -> Result<Recognition, RecognizeError> {
        if run.actions.is_empty() {
            return Err(RecognizeError::EmptyRun);
        }
        let goals = match &run.goal {
            Some(g) => alloc::vec![g.clone()],
            None => self.goals.clone(),
        };
        let compiled = self.compile(&run.initial, goals)?;
        let trees = parse_tasks(&compiled.grammar, &run.actions)?;

        let mut first_failure = None;
        let mut chosen = None;
        let mut consistent = 0;
        for tree in &trees {
            let mut step = 0;
            match replay(&compiled, tree, &run.initial, &mut step) {
                Ok(roots) => {
                    consistent += 1;
                    if chosen.is_none() {
                        chosen = Some(roots);
                    }
                }
                Err(fail) => {
                    first_failure.get_or_insert(fail);
                }
            }
        }
        match chosen {
            Some(roots) => Ok(Recognition {
                plan: Plan::from_roots(&compiled.ground, run.initial.clone(), roots),
                parses: trees.len(),
                consistent,
            }),
            None => {
                let (step, action) = first_failure.expect("at least one parse tree");
                Err(RecognizeError::StateMismatch { step, action })
            }
        }
    }
}

/// Converts a parse tree to decomposition roots, threading states. Fails
/// with the offending step when an action or a method precondition does not
/// hold.
fn replay(
    compiled: &Compiled,
    tree: &ParseTree,
    state: &State,
    step: &mut usize,
) -> Result<Vec<DecompositionNode>, (usize, Task)> {
    let grammar = &compiled.grammar;
    match tree {
        ParseTree::Node { production, children } if grammar.productions()[*production].method.is_none() => {
            let mut roots = Vec::new();
            let mut current = state.clone();
            for c in children {
                let mut sub = replay(compiled, c, &current, step)?;
                if let Some(last) = sub.last() {
                    current = last.state_after.clone();
                }
                roots.append(&mut sub);
            }
            Ok(roots)
        }
        _ => Ok(alloc::vec![node(compiled, tree, state, step)?]),
    }
}

fn node(
    compiled: &Compiled,
    tree: &ParseTree,
    state: &State,
    step: &mut usize,
) -> Result<DecompositionNode, (usize, Task)> {
    let grammar = &compiled.grammar;
    match tree {
        ParseTree::Leaf(sym) => {
            let task = grammar.task(*sym);
            let action = compiled.ground.action_for(task).expect("terminals are ground operators");
            if !action.is_applicable(state) {
                return Err((*step, task.clone()));
            }
            *step += 1;
            Ok(DecompositionNode {
                task: task.clone(),
                method: None,
                children: Vec::new(),
                state_before: state.clone(),
                state_after: action.apply(state),
            })
        }
        ParseTree::Node { production, children } => {
            let p = &grammar.productions()[*production];
            let method = &compiled.ground.methods()[p.method.expect("non-synthetic production")];
            if !method.holds_in(state) {
                return Err((*step, method.task.clone()));
            }
            let mut current = state.clone();
            let mut nodes = Vec::with_capacity(children.len());
            for c in children {
                let n = node(compiled, c, &current, step)?;
                current = n.state_after.clone();
                nodes.push(n);
            }
            Ok(DecompositionNode {
                task: method.task.clone(),
                method: Some(method.name.clone()),
                children: nodes,
                state_before: state.clone(),
                state_after: current,
            })
        }
    }
}

/// One-shot recognition without caching.
pub fn recognize(domain: &Domain, run: &Run, goals: &[Task]) -> Result<Recognition, RecognizeError> {
    Recognizer::new(domain, goals).recognize(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::tests::{method, op, travel_domain};
    use crate::domain::Lang;
    use crate::planner::Planner;
    use crate::syntax::render;
    use alloc::vec;

    fn task(s: &str) -> Task {
        Task::parse(s).unwrap()
    }

    #[test]
    fn travel_run_is_explained_by_fly() {
        let d = travel_domain();
        let init = State::parse(["at(aberdeen)", "connect(aberdeen,london)", "connect(london,paris)"]).unwrap();
        let run = Run::new(init.clone(), vec![task("goto(aberdeen,london)"), task("goto(london,paris)")]);
        let rec = recognize(&d, &run, &[]).unwrap();
        let root = rec.plan.root().unwrap();
        assert_eq!(root.task, task("travel(aberdeen,paris)"));
        assert_eq!(root.method, Some(task("fly(aberdeen,paris)")));
        assert_eq!(rec.plan.action_tasks(), run.actions);
        let planned = Planner::new(&d).plan(&init, &[task("travel(aberdeen,paris)")]).unwrap().unwrap();
        assert_eq!(rec.plan, planned);
    }

    #[test]
    fn inconsistent_observation_is_a_state_mismatch() {
        let d = travel_domain();
        let init = State::parse(["at(aberdeen)", "connect(aberdeen,london)", "connect(london,paris)"]).unwrap();
        // parses as a fly, but the agent is not at london for the first goto
        let run = Run::new(init.clone(), vec![task("goto(london,paris)"), task("goto(paris,aberdeen)")]);
        let err = recognize(&d, &run, &[]).unwrap_err();
        assert!(matches!(err, RecognizeError::NoParse { .. } | RecognizeError::StateMismatch { .. }));
    }

    #[test]
    fn single_leaf_chain() {
        let d = Domain::new(Lang::default(), vec![op("a", &[], &[], &[])], vec![method("m", "t", &[], &[], &["a"])])
            .unwrap();
        let rec = recognize(&d, &Run::new(State::empty(), vec![task("a")]), &[]).unwrap();
        let root = rec.plan.root().unwrap();
        assert_eq!(render(&root.task), "t");
        assert_eq!(root.children.len(), 1);
        assert!(root.children[0].is_primitive());
        assert_eq!(rec.parses, 1);
    }

    #[test]
    fn empty_run_rejected() {
        let d = travel_domain();
        assert_eq!(recognize(&d, &Run::new(State::empty(), vec![]), &[]), Err(RecognizeError::EmptyRun));
    }

    #[test]
    fn preconditions_filter_parses() {
        // Two methods yield the same string; only one is applicable.
        let d = Domain::new(
            Lang::new([(crate::syntax::sym("ok"), 0)], []),
            vec![op("a", &[], &[], &[])],
            vec![method("m1", "t", &["ok"], &[], &["a"]), method("m2", "t", &[], &["ok"], &["a"])],
        )
        .unwrap();
        let with_ok = State::parse(["ok"]).unwrap();
        let rec = recognize(&d, &Run::new(with_ok, vec![task("a")]), &[]).unwrap();
        assert_eq!(rec.plan.root().unwrap().method, Some(task("m1")));
        assert_eq!((rec.parses, rec.consistent), (2, 1));
        let rec = recognize(&d, &Run::new(State::empty(), vec![task("a")]), &[]).unwrap();
        assert_eq!(rec.plan.root().unwrap().method, Some(task("m2")));
    }
}
