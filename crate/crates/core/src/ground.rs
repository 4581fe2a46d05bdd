//! Propositionalisation of a lifted domain.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::domain::{Domain, Lang, Method, Operator};
use crate::error::GroundingError;
use crate::state::State;
use crate::subst::Substitution;
use crate::syntax::{Atom, Symbol, Task, Term};

pub const DEFAULT_GROUND_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug)]
pub struct GroundingOptions<'a> {
    /// Maximum number of operator plus method instances.
    pub cap: usize,
    /// When present, instances that cannot take part in any execution from
    /// this state are dropped.
    pub initial: Option<&'a State>,
}

impl Default for GroundingOptions<'_> {
    fn default() -> Self {
        GroundingOptions { cap: DEFAULT_GROUND_CAP, initial: None }
    }
}

/// Replaces every operator and method by its ground instances over the
/// domain's constants (plus any constant of the initial state).
///
/// With an initial state, pruning keeps only
/// * operators whose positive preconditions are reachable under the
///   delete-relaxation from that state,
/// * methods whose positive preconditions are reachable, and
/// * methods whose subtasks can all be realised by surviving instances.
///
/// Every execution from the initial state only visits relaxed-reachable atoms,
/// so no plan is lost.
pub fn ground_domain(domain: &Domain, options: GroundingOptions<'_>) -> Result<Domain, GroundingError> {
    let mut constants: BTreeSet<Symbol> = domain.constants().clone();
    if let Some(init) = options.initial {
        constants.extend(init.constants());
    }
    let universe: Vec<Symbol> = constants.iter().cloned().collect();

    let mut budget = Budget { used: 0, cap: options.cap };
    let mut operators = Vec::new();
    for op in domain.operators() {
        let vars: Vec<Symbol> = op.name.vars().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        budget.reserve(universe.len(), vars.len(), &op.name.name)?;
        for sigma in assignments(&vars, &universe) {
            let action = op.instantiate(&sigma);
            operators.push(Operator { name: action.name, pre: action.pre, add: action.add, del: action.del });
        }
    }
    let mut methods = Vec::new();
    for m in domain.methods() {
        let vars: Vec<Symbol> = m.vars().into_iter().collect();
        budget.reserve(universe.len(), vars.len(), &m.name.name)?;
        for sigma in assignments(&vars, &universe) {
            let g = m.instantiate(&sigma);
            let contradictory = g.pre_pos.iter().any(|a| g.pre_neg.contains(a));
            if !contradictory {
                methods.push(g);
            }
        }
    }

    if let Some(init) = options.initial {
        prune(init, &mut operators, &mut methods);
    }

    let lang = Lang::new(domain.lang().predicates().clone(), constants);
    // Instances of a well-formed domain are well-formed.
    Ok(Domain::assemble(lang, operators, methods).expect("ground instances of a valid domain"))
}

struct Budget {
    used: usize,
    cap: usize,
}

impl Budget {
    fn reserve(&mut self, constants: usize, vars: usize, at: &Symbol) -> Result<(), GroundingError> {
        let count = u32::try_from(vars).ok().and_then(|v| constants.checked_pow(v));
        match count.and_then(|c| self.used.checked_add(c)) {
            Some(total) if total <= self.cap => {
                self.used = total;
                Ok(())
            }
            _ => Err(GroundingError::Explosion { cap: self.cap, at: at.clone() }),
        }
    }
}

/// All total maps `vars -> universe`, in lexicographic order.
fn assignments(vars: &[Symbol], universe: &[Symbol]) -> Vec<Substitution> {
    let mut out = Vec::new();
    if !vars.is_empty() && universe.is_empty() {
        return out;
    }
    let mut idx = alloc::vec![0usize; vars.len()];
    loop {
        out.push(Substitution::from_pairs(
            vars.iter().cloned().zip(idx.iter().map(|&i| Term::Const(universe[i].clone()))),
        ));
        // odometer increment, last variable fastest
        let mut pos = vars.len();
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < universe.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

fn prune(init: &State, operators: &mut Vec<Operator>, methods: &mut Vec<Method>) {
    let mut reachable: BTreeSet<Atom> = init.iter().cloned().collect();
    loop {
        let before = reachable.len();
        for op in operators.iter() {
            if op.pre.iter().filter(|l| l.positive).all(|l| reachable.contains(&l.atom)) {
                reachable.extend(op.add.iter().cloned());
            }
        }
        if reachable.len() == before {
            break;
        }
    }
    operators.retain(|op| op.pre.iter().filter(|l| l.positive).all(|l| reachable.contains(&l.atom)));
    methods.retain(|m| m.pre_pos.iter().all(|a| reachable.contains(a)));

    let mut realisable: BTreeSet<Task> = operators.iter().map(|o| o.name.clone()).collect();
    loop {
        let before = realisable.len();
        for m in methods.iter() {
            if !realisable.contains(&m.task) && m.network.tasks().iter().all(|t| realisable.contains(t)) {
                realisable.insert(m.task.clone());
            }
        }
        if realisable.len() == before {
            break;
        }
    }
    methods.retain(|m| m.network.tasks().iter().all(|t| realisable.contains(t)));
}
