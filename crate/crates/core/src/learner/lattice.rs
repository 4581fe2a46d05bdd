use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::norms::{Condition, Modality, Norm};
use crate::syntax::Task;

/// Potential obligations, stored per ground context.
///
/// A context without an entry stands for every obligation with that context
/// (top). Once a context has been observed its entry is an explicit set that
/// can only shrink.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ObligationLattice {
    entries: BTreeMap<Task, BTreeSet<Condition>>,
}

impl ObligationLattice {
    pub fn new() -> Self {
        ObligationLattice::default()
    }

    /// Conditions still possible for `context`; `None` means top.
    pub fn get(&self, context: &Task) -> Option<&BTreeSet<Condition>> {
        self.entries.get(context)
    }

    pub fn is_top(&self, context: &Task) -> bool {
        !self.entries.contains_key(context)
    }

    /// Whether `O_context condition` is still possible.
    pub fn admits(&self, context: &Task, condition: &Condition) -> bool {
        self.entries.get(context).is_none_or(|set| set.contains(condition))
    }

    /// Context-sensitive intersection: contexts in `evidence` are intersected
    /// with their evidence (top becomes the evidence itself); all other
    /// contexts are left alone.
    pub fn intersect(&mut self, evidence: &BTreeMap<Task, BTreeSet<Condition>>) {
        for (context, conditions) in evidence {
            match self.entries.get_mut(context) {
                Some(set) => set.retain(|c| conditions.contains(c)),
                None => {
                    self.entries.insert(context.clone(), conditions.clone());
                }
            }
        }
    }

    /// Contexts that have left top.
    pub fn contexts(&self) -> impl Iterator<Item = &Task> + '_ {
        self.entries.keys()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Task, &BTreeSet<Condition>)> + '_ {
        self.entries.iter()
    }

    /// The explicit obligations, i.e. restricted to observed contexts.
    pub fn norms(&self) -> Vec<Norm> {
        self.entries
            .iter()
            .flat_map(|(y, zs)| {
                zs.iter().map(move |z| Norm {
                    modality: Modality::Obligation,
                    context: y.clone(),
                    condition: z.clone(),
                })
            })
            .collect()
    }

    /// Whether every explicit entry of `self` is a subset of the matching
    /// entry of `earlier`, and no context went back to top.
    pub fn refines(&self, earlier: &ObligationLattice) -> bool {
        earlier.entries.keys().all(|k| self.entries.contains_key(k))
            && self.entries.iter().all(|(k, v)| earlier.entries.get(k).is_none_or(|old| v.is_subset(old)))
    }
}
