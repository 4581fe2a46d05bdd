//! Terms, atoms, literals and tasks of the function-free first-order language,
//! plus the textual syntax `name(arg1,arg2)` used by every file format.
//!
//! Following the Prolog convention, a term whose first character is an
//! uppercase letter or `_` is a variable; anything else is a constant.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::SyntaxError;

/// Interned-by-value symbol name. Cheap to clone, ordered by string content.
pub type Symbol = Arc<str>;

pub fn sym(name: &str) -> Symbol {
    Arc::from(name)
}

/// A constant or a variable. Derived ordering puts constants before variables
/// and otherwise compares names lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(Symbol),
    Var(Symbol),
}

impl Term {
    pub fn constant(name: &str) -> Self {
        Term::Const(sym(name))
    }

    pub fn var(name: &str) -> Self {
        Term::Var(sym(name))
    }

    /// Classifies `text` by its first character.
    pub fn parse(text: &str) -> Result<Self, SyntaxError> {
        let text = text.trim();
        if !is_identifier(text) {
            return Err(SyntaxError::new(text, "invalid term"));
        }
        let first = text.chars().next().unwrap_or('a');
        if first.is_ascii_uppercase() || first == '_' {
            Ok(Term::Var(sym(text)))
        } else {
            Ok(Term::Const(sym(text)))
        }
    }

    pub fn name(&self) -> &Symbol {
        match self {
            Term::Const(n) | Term::Var(n) => n,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn is_identifier(text: &str) -> bool {
    !text.is_empty() && text.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | '\''))
}

/// Splits `head(a,b)` into its head and argument terms.
fn parse_compound(text: &str) -> Result<(Symbol, Vec<Term>), SyntaxError> {
    let text = text.trim();
    let (head, args) = match text.find('(') {
        None => (text, Vec::new()),
        Some(open) => {
            if !text.ends_with(')') {
                return Err(SyntaxError::new(text, "missing closing parenthesis"));
            }
            let inner = &text[open + 1..text.len() - 1];
            if inner.contains('(') || inner.contains(')') {
                return Err(SyntaxError::new(text, "nested terms are not allowed"));
            }
            let args = if inner.trim().is_empty() {
                Vec::new()
            } else {
                inner.split(',').map(Term::parse).collect::<Result<Vec<_>, _>>()?
            };
            (text[..open].trim(), args)
        }
    };
    if !is_identifier(head) {
        return Err(SyntaxError::new(text, "invalid name"));
    }
    Ok((sym(head), args))
}

fn write_compound(f: &mut fmt::Formatter<'_>, head: &str, args: &[Term]) -> fmt::Result {
    f.write_str(head)?;
    if !args.is_empty() {
        f.write_str("(")?;
        for (i, arg) in args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{arg}")?;
        }
        f.write_str(")")?;
    }
    Ok(())
}

macro_rules! compound {
    ($ty:ident, $head:ident) => {
        impl $ty {
            pub fn new(head: &str, args: Vec<Term>) -> Self {
                $ty { $head: sym(head), args }
            }

            pub fn parse(text: &str) -> Result<Self, SyntaxError> {
                let (head, args) = parse_compound(text)?;
                Ok($ty { $head: head, args })
            }

            pub fn arity(&self) -> usize {
                self.args.len()
            }

            pub fn is_ground(&self) -> bool {
                self.args.iter().all(|t| !t.is_var())
            }

            pub fn vars(&self) -> impl Iterator<Item = &Symbol> + '_ {
                self.args.iter().filter_map(|t| match t {
                    Term::Var(v) => Some(v),
                    Term::Const(_) => None,
                })
            }

            pub fn constants(&self) -> impl Iterator<Item = &Symbol> + '_ {
                self.args.iter().filter_map(|t| match t {
                    Term::Const(c) => Some(c),
                    Term::Var(_) => None,
                })
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write_compound(f, &self.$head, &self.args)
            }
        }

        impl core::str::FromStr for $ty {
            type Err = SyntaxError;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                $ty::parse(s)
            }
        }
    };
}

/// `predicate(args)`. Ordered by predicate first, then arguments.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: Symbol,
    pub args: Vec<Term>,
}

compound!(Atom, predicate);

/// `task(args)`, either primitive (realised by an operator) or compound
/// (refined by methods). Which one is a property of the domain.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Task {
    pub name: Symbol,
    pub args: Vec<Term>,
}

compound!(Task, name);

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub atom: Atom,
    pub positive: bool,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal { atom, positive: true }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal { atom, positive: false }
    }

    /// Accepts an optional leading `!` for negation.
    pub fn parse(text: &str) -> Result<Self, SyntaxError> {
        let text = text.trim();
        match text.strip_prefix('!') {
            Some(rest) => Ok(Literal::neg(Atom::parse(rest)?)),
            None => Ok(Literal::pos(Atom::parse(text)?)),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            f.write_str("!")?;
        }
        write!(f, "{}", self.atom)
    }
}

/// Collects the variables of a sequence of term lists.
pub(crate) fn collect_vars<'a, I>(lists: I) -> BTreeSet<Symbol>
where
    I: IntoIterator<Item = &'a [Term]>,
{
    let mut out = BTreeSet::new();
    for list in lists {
        for t in list {
            if let Term::Var(v) = t {
                out.insert(v.clone());
            }
        }
    }
    out
}

/// Renders any displayable item to an owned string.
pub fn render<T: fmt::Display>(item: &T) -> String {
    item.to_string()
}
