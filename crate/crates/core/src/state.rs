use alloc::collections::BTreeSet;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Bound;

use crate::error::{DomainError, Error};
use crate::syntax::{Atom, Symbol};

/// A world state: a finite set of ground atoms.
///
/// Backed by an ordered set, so equality, ordering and hashing are all
/// canonical (insertion order never matters).
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State {
    atoms: BTreeSet<Atom>,
}

impl State {
    pub fn empty() -> Self {
        State::default()
    }

    pub fn new<I: IntoIterator<Item = Atom>>(atoms: I) -> Result<Self, DomainError> {
        let mut set = BTreeSet::new();
        for atom in atoms {
            if !atom.is_ground() {
                return Err(DomainError::NonGroundAtom(atom.to_string()));
            }
            set.insert(atom);
        }
        Ok(State { atoms: set })
    }

    /// Builds a state from textual atoms such as `"at(london)"`.
    pub fn parse<'a, I: IntoIterator<Item = &'a str>>(atoms: I) -> Result<Self, Error> {
        let atoms = atoms.into_iter().map(Atom::parse).collect::<Result<Vec<_>, _>>()?;
        Ok(State::new(atoms)?)
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.atoms.contains(atom)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Atom> + '_ {
        self.atoms.iter()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Atoms whose predicate is `predicate`, in canonical order.
    pub fn with_predicate<'a>(&'a self, predicate: &'a Symbol) -> impl Iterator<Item = &'a Atom> + 'a {
        let lower = Atom { predicate: predicate.clone(), args: Vec::new() };
        self.atoms.range((Bound::Included(lower), Bound::Unbounded)).take_while(move |a| a.predicate == *predicate)
    }

    pub fn constants(&self) -> BTreeSet<Symbol> {
        self.atoms.iter().flat_map(|a| a.constants().cloned()).collect()
    }

    /// `(self ∪ add) \ del`: additions first, deletions last, so an atom in
    /// both lists ends up absent.
    pub(crate) fn transition<'a>(
        &self,
        add: impl IntoIterator<Item = &'a Atom>,
        del: impl IntoIterator<Item = &'a Atom>,
    ) -> State {
        let mut atoms = self.atoms.clone();
        atoms.extend(add.into_iter().cloned());
        for atom in del {
            atoms.remove(atom);
        }
        State { atoms }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, atom) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{atom}")?;
        }
        f.write_str("}")
    }
}

impl<'a> IntoIterator for &'a State {
    type Item = &'a Atom;
    type IntoIter = alloc::collections::btree_set::Iter<'a, Atom>;
    fn into_iter(self) -> Self::IntoIter {
        self.atoms.iter()
    }
}
