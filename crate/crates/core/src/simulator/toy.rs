//! Small random propositional domains and scenarios for testing.
//!
//! Compound tasks are arranged in levels below a single goal `c0`; a method
//! of a level-`l` task only uses primitives and tasks of deeper levels, so
//! decomposition trees are at most `levels + 1` deep.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{Sampler, Scenario};
use crate::domain::{Domain, Lang, Method, Operator, TaskNetwork};
use crate::learner::occurrences;
use crate::norms::{Condition, Norm, NormSet};
use crate::planner::{Plan, Planner};
use crate::state::State;
use crate::syntax::{sym, Atom, Literal, Task};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ToyParams {
    pub propositions: usize,
    pub primitives: usize,
    /// Number of compound levels, the goal's included.
    pub levels: usize,
    pub tasks_per_level: usize,
    pub max_methods: usize,
    pub max_subtasks: usize,
}

impl Default for ToyParams {
    fn default() -> Self {
        ToyParams { propositions: 4, primitives: 5, levels: 3, tasks_per_level: 2, max_methods: 3, max_subtasks: 3 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToyDomain {
    pub domain: Domain,
    pub goal: Task,
    pub initial: State,
}

fn task(name: &str) -> Task {
    Task::new(name, Vec::new())
}

fn prop(i: usize) -> Atom {
    Atom::new(&format!("f{i}"), Vec::new())
}

fn literal(s: &mut Sampler, props: usize) -> Literal {
    let atom = prop(s.index(props));
    if s.chance(0.5) {
        Literal::pos(atom)
    } else {
        Literal::neg(atom)
    }
}

/// A random domain. Method networks are never empty, so every plan has an
/// action. Not every draw has plans, nor unambiguous ones; see
/// [`unambiguous_domain`].
pub fn random_domain(seed: u64, params: &ToyParams) -> ToyDomain {
    let mut s = Sampler::new(seed);
    let p = params;
    let lang = Lang::new((0..p.propositions).map(|i| (sym(&format!("f{i}")), 0)), []);

    let primitives: Vec<String> = (0..p.primitives).map(|i| format!("p{i}")).collect();
    let mut operators = Vec::new();
    for name in &primitives {
        let pre = if s.chance(0.4) { alloc::vec![literal(&mut s, p.propositions)] } else { Vec::new() };
        let add_idx = s.index(p.propositions);
        let add = if s.chance(0.8) { alloc::vec![prop(add_idx)] } else { Vec::new() };
        let del = if s.chance(0.3) {
            let d = s.index(p.propositions);
            if d == add_idx && !add.is_empty() {
                Vec::new()
            } else {
                alloc::vec![prop(d)]
            }
        } else {
            Vec::new()
        };
        operators.push(Operator { name: task(name), pre, add, del });
    }

    let mut levels: Vec<Vec<String>> = alloc::vec![alloc::vec![String::from("c0")]];
    for l in 1..p.levels {
        levels.push((0..p.tasks_per_level).map(|i| format!("c{l}_{i}")).collect());
    }
    let mut methods = Vec::new();
    for (l, names) in levels.iter().enumerate() {
        let below: Vec<&String> = primitives.iter().chain(levels[l + 1..].iter().flatten()).collect();
        for name in names {
            let count = 1 + s.index(p.max_methods);
            for k in 0..count {
                let len = 1 + s.index(p.max_subtasks);
                let network = (0..len).map(|_| task(below[s.index(below.len())])).collect();
                let (mut pre_pos, mut pre_neg) = (Vec::new(), Vec::new());
                if s.chance(0.3) {
                    let lit = literal(&mut s, p.propositions);
                    if lit.positive {
                        pre_pos.push(lit.atom)
                    } else {
                        pre_neg.push(lit.atom)
                    }
                }
                methods.push(Method {
                    name: task(&format!("m_{name}_{k}")),
                    task: task(name),
                    pre_pos,
                    pre_neg,
                    network: TaskNetwork::new(network),
                });
            }
        }
    }
    let domain = Domain::new(lang, operators, methods).expect("generated domains are well formed");
    let initial = State::new((0..p.propositions).filter(|_| s.chance(0.5)).map(prop)).expect("ground");
    ToyDomain { domain, goal: task("c0"), initial }
}

/// Whether distinct plans of `goal` always execute distinct action
/// sequences, so that a run determines its decomposition.
pub fn has_unique_yields(plans: &[Plan]) -> bool {
    let mut yields: Vec<Vec<Task>> = plans.iter().map(Plan::action_tasks).collect();
    yields.sort();
    yields.windows(2).all(|w| w[0] != w[1])
}

/// The first random domain, trying seeds `seed, seed + 1, …`, whose goal
/// has at least `min_plans` plans with pairwise distinct action sequences.
/// Returns the domain, its plans and the number of draws rejected.
pub fn unambiguous_domain(seed: u64, params: &ToyParams, min_plans: usize) -> (ToyDomain, Vec<Plan>, usize) {
    for (rejected, offset) in (0u64..).enumerate() {
        let toy = random_domain(seed.wrapping_add(offset), params);
        let plans = Planner::new(&toy.domain).all_plans(&toy.initial, &toy.goal).expect("toy trees are shallow");
        if plans.len() >= min_plans && has_unique_yields(&plans) {
            return (toy, plans, rejected);
        }
    }
    unreachable!()
}

/// A compliant-by-construction scenario: one plan of the goal is picked as
/// the anchor, and norms are planted that the anchor respects. Prohibitions
/// are conditions seen under a context in some plan but not under that
/// context in the anchor; obligations are conditions under every node of
/// their context in the anchor.
pub fn random_scenario(seed: u64, params: &ToyParams, violation_rate: f64) -> Scenario {
    let (toy, plans, _) = unambiguous_domain(seed, params, 3);
    let mut s = Sampler::new(seed ^ 0x9e37_79b9_7f4a_7c15);
    let anchor = &plans[s.index(plans.len())];
    let anchor_occ = occurrences(anchor);

    let mut everywhere: alloc::collections::BTreeMap<Task, alloc::collections::BTreeSet<Condition>> =
        Default::default();
    for plan in &plans {
        for (y, zs) in occurrences(plan) {
            everywhere.entry(y).or_default().extend(zs);
        }
    }
    let mut prohibitions = Vec::new();
    let mut obligations = Vec::new();
    for (y, zs) in &anchor_occ {
        for z in everywhere[y].difference(zs) {
            prohibitions.push(Norm::prohibition(y.clone(), z.clone()).expect("not synthetic"));
        }
        for z in zs {
            let on_every_node = anchor.nodes().into_iter().filter(|n| &n.task == y).all(|n| crate::norms::occurs(z, n));
            if on_every_node {
                obligations.push(Norm::obligation(y.clone(), z.clone()).expect("not synthetic"));
            }
        }
    }
    let mut planted = NormSet::new();
    for pool in [&mut prohibitions, &mut obligations] {
        for _ in 0..2 {
            if pool.is_empty() {
                break;
            }
            let n = pool.swap_remove(s.index(pool.len()));
            planted.insert(n).expect("planted norms are consistent with the anchor");
        }
    }
    Scenario {
        domain: toy.domain,
        norms: planted,
        initial: toy.initial,
        goals: alloc::vec![(toy.goal, 1.0)],
        violation_rate,
        seed,
    }
}
