//! The context-free grammar induced by a ground HTN domain.
//!
//! Ground compound tasks are nonterminals, ground primitive tasks are
//! terminals, and every ground method `task -> subtasks` is one production.
//! Method preconditions are not part of the grammar.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::domain::Domain;
use crate::error::RecognizeError;
use crate::syntax::{sym, Task};

pub type SymbolId = usize;
pub type ProductionId = usize;

/// Name of the start symbol added when several goals are possible.
pub const SYNTHETIC_START: &str = "__start__";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrammarSymbol {
    pub task: Task,
    pub terminal: bool,
    pub synthetic: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Production {
    pub lhs: SymbolId,
    pub rhs: Vec<SymbolId>,
    /// Index of the ground method in the source domain; `None` for the
    /// synthetic start productions.
    pub method: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct Grammar {
    symbols: Vec<GrammarSymbol>,
    index: BTreeMap<Task, SymbolId>,
    productions: Vec<Production>,
    by_lhs: Vec<Vec<ProductionId>>,
    start: SymbolId,
}

/// A derivation tree. Children of a node match its production's right-hand
/// side; leaves are terminals.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParseTree {
    Leaf(SymbolId),
    Node { production: ProductionId, children: Vec<ParseTree> },
}

impl Grammar {
    pub fn symbols(&self) -> &[GrammarSymbol] {
        &self.symbols
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn productions_for(&self, lhs: SymbolId) -> &[ProductionId] {
        &self.by_lhs[lhs]
    }

    pub fn start(&self) -> SymbolId {
        self.start
    }

    pub fn symbol_id(&self, task: &Task) -> Option<SymbolId> {
        self.index.get(task).copied()
    }

    pub fn task(&self, id: SymbolId) -> &Task {
        &self.symbols[id].task
    }

    pub fn is_terminal(&self, id: SymbolId) -> bool {
        self.symbols[id].terminal
    }

    pub fn terminals(&self) -> impl Iterator<Item = SymbolId> + '_ {
        (0..self.symbols.len()).filter(|&i| self.symbols[i].terminal)
    }

    pub fn nonterminals(&self) -> impl Iterator<Item = SymbolId> + '_ {
        (0..self.symbols.len()).filter(|&i| !self.symbols[i].terminal)
    }

    /// `lhs -> rhs` as text.
    pub fn render_production(&self, id: ProductionId) -> String {
        let p = &self.productions[id];
        let mut out = alloc::format!("{} ->", self.task(p.lhs));
        for &s in &p.rhs {
            let _ = write!(out, " {}", self.task(s));
        }
        out
    }

    /// `T1(T2(a1,a2),T3(a3))`.
    pub fn render(&self, tree: &ParseTree) -> String {
        let mut out = String::new();
        self.render_into(tree, &mut out);
        out
    }

    fn render_into(&self, tree: &ParseTree, out: &mut String) {
        match tree {
            ParseTree::Leaf(s) => {
                let _ = write!(out, "{}", self.task(*s));
            }
            ParseTree::Node { production, children } => {
                let _ = write!(out, "{}(", self.task(self.productions[*production].lhs));
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    self.render_into(c, out);
                }
                out.push(')');
            }
        }
    }

    pub fn root_symbol(&self, tree: &ParseTree) -> SymbolId {
        match tree {
            ParseTree::Leaf(s) => *s,
            ParseTree::Node { production, .. } => self.productions[*production].lhs,
        }
    }

    /// Left-to-right terminals of a tree.
    pub fn yield_of(&self, tree: &ParseTree) -> Vec<SymbolId> {
        let mut out = Vec::new();
        fn walk(t: &ParseTree, out: &mut Vec<SymbolId>) {
            match t {
                ParseTree::Leaf(s) => out.push(*s),
                ParseTree::Node { children, .. } => children.iter().for_each(|c| walk(c, out)),
            }
        }
        walk(tree, &mut out);
        out
    }
}

/// Builds the grammar of a ground domain for the given ground goal tasks.
///
/// With exactly one compound goal that goal is the start symbol. Otherwise a
/// synthetic start symbol gets one production per goal.
pub fn to_grammar(domain: &Domain, goals: &[Task]) -> Result<Grammar, RecognizeError> {
    let mut symbols = Vec::new();
    let mut index = BTreeMap::new();
    let mut intern = |task: &Task, terminal: bool, symbols: &mut Vec<GrammarSymbol>| -> SymbolId {
        *index.entry(task.clone()).or_insert_with(|| {
            symbols.push(GrammarSymbol { task: task.clone(), terminal, synthetic: false });
            symbols.len() - 1
        })
    };

    let mut ops: Vec<&Task> = domain.operators().iter().map(|o| &o.name).collect();
    ops.sort();
    for t in ops {
        intern(t, true, &mut symbols);
    }
    let mut lhs_tasks: Vec<&Task> = domain.methods().iter().map(|m| &m.task).collect();
    lhs_tasks.sort();
    for t in lhs_tasks {
        intern(t, false, &mut symbols);
    }

    // Canonical production order: (lhs, method name, rhs).
    let mut order: Vec<usize> = (0..domain.methods().len()).collect();
    order.sort_by(|&a, &b| {
        let (ma, mb) = (&domain.methods()[a], &domain.methods()[b]);
        (&ma.task, &ma.name, ma.network.tasks(), a).cmp(&(&mb.task, &mb.name, mb.network.tasks(), b))
    });
    let mut productions = Vec::new();
    for i in order {
        let m = &domain.methods()[i];
        let lhs = intern(&m.task, false, &mut symbols);
        let rhs = m
            .network
            .tasks()
            .iter()
            .map(|t| {
                let terminal = domain.is_primitive(t);
                intern(t, terminal, &mut symbols)
            })
            .collect();
        productions.push(Production { lhs, rhs, method: Some(i) });
    }

    let mut present: Vec<SymbolId> = goals
        .iter()
        .filter_map(|g| index.get(g).copied())
        .filter(|&s| symbols[s].terminal || productions.iter().any(|p| p.lhs == s))
        .collect();
    present.sort_unstable();
    present.dedup();
    if present.is_empty() {
        return Err(RecognizeError::EmptyGrammar);
    }

    let start = if present.len() == 1 && !symbols[present[0]].terminal {
        present[0]
    } else {
        let task = Task { name: sym(SYNTHETIC_START), args: Vec::new() };
        symbols.push(GrammarSymbol { task: task.clone(), terminal: false, synthetic: true });
        let start = symbols.len() - 1;
        index.insert(task, start);
        for g in present {
            productions.push(Production { lhs: start, rhs: alloc::vec![g], method: None });
        }
        start
    };

    let mut by_lhs = alloc::vec![Vec::new(); symbols.len()];
    for (i, p) in productions.iter().enumerate() {
        by_lhs[p.lhs].push(i);
    }
    Ok(Grammar { symbols, index, productions, by_lhs, start })
}
