//! Substitutions, one-way matching and state satisfaction.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use crate::state::State;
use crate::syntax::{Atom, Literal, Symbol, Task, Term};

/// Finite map from variable names to terms.
///
/// Ordering is lexicographic over the sorted `(variable, term)` pairs, which
/// is the canonical order used whenever several substitutions qualify.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Substitution {
    bindings: BTreeMap<Symbol, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Substitution::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (Symbol, Term)>>(pairs: I) -> Self {
        Substitution { bindings: pairs.into_iter().collect() }
    }

    pub fn bind(&mut self, var: Symbol, term: Term) {
        self.bindings.insert(var, term);
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.bindings.get(var)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, &Term)> + '_ {
        self.bindings.iter()
    }

    /// Follows binding chains, so applying the result again changes nothing.
    pub fn apply_term(&self, term: &Term) -> Term {
        let mut current = term;
        for _ in 0..=self.bindings.len() {
            match current {
                Term::Var(v) => match self.bindings.get(v) {
                    Some(next) if next != current => current = next,
                    _ => break,
                },
                Term::Const(_) => break,
            }
        }
        current.clone()
    }

    pub fn apply_terms(&self, terms: &[Term]) -> Vec<Term> {
        terms.iter().map(|t| self.apply_term(t)).collect()
    }

    pub fn apply_atom(&self, atom: &Atom) -> Atom {
        Atom { predicate: atom.predicate.clone(), args: self.apply_terms(&atom.args) }
    }

    pub fn apply_task(&self, task: &Task) -> Task {
        Task { name: task.name.clone(), args: self.apply_terms(&task.args) }
    }

    pub fn apply_literal(&self, lit: &Literal) -> Literal {
        Literal { atom: self.apply_atom(&lit.atom), positive: lit.positive }
    }

    /// Extends `self` so that `pattern` becomes equal to `target`. Variables in
    /// `target` are treated as opaque names.
    pub fn match_terms(&self, pattern: &[Term], target: &[Term]) -> Option<Substitution> {
        if pattern.len() != target.len() {
            return None;
        }
        let mut out = self.clone();
        for (p, t) in pattern.iter().zip(target) {
            match out.apply_term(p) {
                Term::Var(v) => {
                    if *t != Term::Var(v.clone()) {
                        out.bind(v, t.clone());
                    }
                }
                bound => {
                    if bound != *t {
                        return None;
                    }
                }
            }
        }
        Some(out)
    }

    pub fn match_task(&self, pattern: &Task, target: &Task) -> Option<Substitution> {
        if pattern.name != target.name {
            return None;
        }
        self.match_terms(&pattern.args, &target.args)
    }

    pub fn match_atom(&self, pattern: &Atom, target: &Atom) -> Option<Substitution> {
        if pattern.predicate != target.predicate {
            return None;
        }
        self.match_terms(&pattern.args, &target.args)
    }

    /// True when every variable in `vars` maps to a constant.
    pub fn grounds<'a, I: IntoIterator<Item = &'a Symbol>>(&self, vars: I) -> bool {
        vars.into_iter().all(|v| matches!(self.apply_term(&Term::Var(v.clone())), Term::Const(_)))
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}->{t}")?;
        }
        f.write_str("}")
    }
}

/// Every extension of `seed` that grounds the variables of `literals` and
/// `extra_vars` and under which all positive literals are in `state` and no
/// negative literal is. Variables bound by no positive literal range over
/// `universe`. The result is sorted canonically and duplicate-free.
pub fn satisfiers(
    state: &State,
    literals: &[Literal],
    seed: &Substitution,
    extra_vars: &BTreeSet<Symbol>,
    universe: &BTreeSet<Symbol>,
) -> Vec<Substitution> {
    let positives: Vec<&Atom> = literals.iter().filter(|l| l.positive).map(|l| &l.atom).collect();
    let negatives: Vec<&Atom> = literals.iter().filter(|l| !l.positive).map(|l| &l.atom).collect();
    let mut all_vars: BTreeSet<Symbol> = extra_vars.clone();
    for lit in literals {
        all_vars.extend(lit.atom.vars().cloned());
    }

    let mut out = Vec::new();
    let mut partial = Vec::new();
    match_positives(state, &positives, seed.clone(), &mut partial);
    for sigma in partial {
        let free: Vec<Symbol> = all_vars
            .iter()
            .filter(|v| matches!(sigma.apply_term(&Term::Var((*v).clone())), Term::Var(_)))
            .cloned()
            .collect();
        enumerate_free(&free, universe, sigma, &mut |full| {
            let ok = negatives.iter().all(|neg| {
                let g = full.apply_atom(neg);
                g.is_ground() && !state.contains(&g)
            });
            if ok {
                out.push(full);
            }
        });
    }
    out.sort();
    out.dedup();
    out
}

fn match_positives(state: &State, positives: &[&Atom], sigma: Substitution, out: &mut Vec<Substitution>) {
    let Some((first, rest)) = positives.split_first() else {
        out.push(sigma);
        return;
    };
    for candidate in state.with_predicate(&first.predicate) {
        if let Some(next) = sigma.match_atom(first, candidate) {
            match_positives(state, rest, next, out);
        }
    }
}

fn enumerate_free(
    free: &[Symbol],
    universe: &BTreeSet<Symbol>,
    sigma: Substitution,
    emit: &mut dyn FnMut(Substitution),
) {
    let Some((var, rest)) = free.split_first() else {
        emit(sigma);
        return;
    };
    for c in universe {
        let mut next = sigma.clone();
        next.bind(var.clone(), Term::Const(c.clone()));
        enumerate_free(rest, universe, next, emit);
    }
}

/// `state ⊨ goal`: the canonically least substitution under which every
/// positive literal of the goal is in the state and no negative one is.
/// Variables that only occur negatively range over the constants of the
/// state and the goal.
pub fn satisfies(state: &State, goal: &[Literal]) -> Option<Substitution> {
    let mut universe = state.constants();
    for lit in goal {
        universe.extend(lit.atom.constants().cloned());
    }
    satisfiers(state, goal, &Substitution::new(), &BTreeSet::new(), &universe).into_iter().next()
}
