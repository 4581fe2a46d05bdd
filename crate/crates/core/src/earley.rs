//! Earley chart parser with full parse-forest expansion.
//!
//! Accepts arbitrary context-free productions, including empty right-hand
//! sides (nullable symbols are advanced at prediction time). Recognition
//! records every completed `(production, start, end)` span; trees are then
//! read back top-down from those spans.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::error::RecognizeError;
use crate::grammar::{Grammar, ParseTree, ProductionId, SymbolId};
use crate::syntax::Task;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Item {
    production: ProductionId,
    dot: usize,
    origin: usize,
}

/// Maps observed tasks to terminals and parses them.
pub fn parse_tasks(grammar: &Grammar, observed: &[Task]) -> Result<Vec<ParseTree>, RecognizeError> {
    let mut tokens = Vec::with_capacity(observed.len());
    for (i, t) in observed.iter().enumerate() {
        match grammar.symbol_id(t) {
            Some(id) if grammar.is_terminal(id) => tokens.push(id),
            _ => {
                return Err(RecognizeError::NoParse {
                    reason: alloc::format!("observation {i} (`{t}`) is not a primitive task of the domain"),
                })
            }
        }
    }
    parse(grammar, &tokens)
}

/// All complete parses of `tokens` from the start symbol, sorted canonically.
pub fn parse(grammar: &Grammar, tokens: &[SymbolId]) -> Result<Vec<ParseTree>, RecognizeError> {
    let chart = Chart::build(grammar, tokens);
    let start = grammar.start();
    if !chart.spans.contains(&(start, 0, tokens.len())) {
        return Err(RecognizeError::NoParse {
            reason: alloc::format!(
                "no derivation covers the {} observations (chart stops after observation {})",
                tokens.len(),
                chart.furthest
            ),
        });
    }
    let mut forest = Forest { grammar, tokens, chart: &chart, memo: BTreeMap::new(), active: BTreeSet::new() };
    let trees = forest.trees(start, 0, tokens.len());
    if trees.is_empty() {
        return Err(RecognizeError::NoParse { reason: "only cyclic derivations exist".into() });
    }
    Ok(trees)
}

struct Chart {
    completed: BTreeSet<(ProductionId, usize, usize)>,
    spans: BTreeSet<(SymbolId, usize, usize)>,
    furthest: usize,
}

impl Chart {
    fn build(grammar: &Grammar, tokens: &[SymbolId]) -> Chart {
        let nullable = nullable_symbols(grammar);
        let n = tokens.len();
        let mut sets: Vec<Vec<Item>> = alloc::vec![Vec::new(); n + 1];
        let mut seen: Vec<BTreeSet<Item>> = alloc::vec![BTreeSet::new(); n + 1];
        let mut completed = BTreeSet::new();
        let mut spans = BTreeSet::new();
        let mut furthest = 0;

        let mut add = |sets: &mut Vec<Vec<Item>>, at: usize, item: Item| {
            if seen[at].insert(item) {
                sets[at].push(item);
            }
        };
        for &p in grammar.productions_for(grammar.start()) {
            add(&mut sets, 0, Item { production: p, dot: 0, origin: 0 });
        }

        for i in 0..=n {
            if !sets[i].is_empty() {
                furthest = i;
            }
            let mut k = 0;
            while k < sets[i].len() {
                let item = sets[i][k];
                k += 1;
                let prod = &grammar.productions()[item.production];
                if item.dot == prod.rhs.len() {
                    completed.insert((item.production, item.origin, i));
                    spans.insert((prod.lhs, item.origin, i));
                    let mut j = 0;
                    while j < sets[item.origin].len() {
                        let waiting = sets[item.origin][j];
                        j += 1;
                        let wp = &grammar.productions()[waiting.production];
                        if wp.rhs.get(waiting.dot) == Some(&prod.lhs) {
                            add(&mut sets, i, Item { dot: waiting.dot + 1, ..waiting });
                        }
                    }
                    continue;
                }
                let next = prod.rhs[item.dot];
                if grammar.is_terminal(next) {
                    if i < n && tokens[i] == next {
                        add(&mut sets, i + 1, Item { dot: item.dot + 1, ..item });
                    }
                } else {
                    for &p in grammar.productions_for(next) {
                        add(&mut sets, i, Item { production: p, dot: 0, origin: i });
                    }
                    if nullable[next] {
                        add(&mut sets, i, Item { dot: item.dot + 1, ..item });
                    }
                }
            }
        }
        Chart { completed, spans, furthest }
    }
}

fn nullable_symbols(grammar: &Grammar) -> Vec<bool> {
    let mut nullable = alloc::vec![false; grammar.symbols().len()];
    loop {
        let mut changed = false;
        for p in grammar.productions() {
            if !nullable[p.lhs] && p.rhs.iter().all(|&s| nullable[s]) {
                nullable[p.lhs] = true;
                changed = true;
            }
        }
        if !changed {
            return nullable;
        }
    }
}

struct Forest<'a> {
    grammar: &'a Grammar,
    tokens: &'a [SymbolId],
    chart: &'a Chart,
    memo: BTreeMap<(SymbolId, usize, usize), Vec<ParseTree>>,
    active: BTreeSet<(SymbolId, usize, usize)>,
}

impl Forest<'_> {
    fn trees(&mut self, symbol: SymbolId, from: usize, to: usize) -> Vec<ParseTree> {
        let key = (symbol, from, to);
        if let Some(done) = self.memo.get(&key) {
            return done.clone();
        }
        if !self.active.insert(key) {
            // A derivation that re-enters its own span is cyclic; skip it.
            return Vec::new();
        }
        let mut out = Vec::new();
        for &p in self.grammar.productions_for(symbol) {
            if !self.chart.completed.contains(&(p, from, to)) {
                continue;
            }
            let rhs = self.grammar.productions()[p].rhs.clone();
            for children in self.splits(&rhs, from, to) {
                out.push(ParseTree::Node { production: p, children });
            }
        }
        out.sort();
        self.active.remove(&key);
        self.memo.insert(key, out.clone());
        out
    }

    /// Every way to derive `tokens[from..to]` from the symbol sequence `rhs`.
    fn splits(&mut self, rhs: &[SymbolId], from: usize, to: usize) -> Vec<Vec<ParseTree>> {
        let Some((&first, rest)) = rhs.split_first() else {
            return if from == to { alloc::vec![Vec::new()] } else { Vec::new() };
        };
        let mut out = Vec::new();
        if self.grammar.is_terminal(first) {
            if from < to && self.tokens[from] == first {
                for mut tail in self.splits(rest, from + 1, to) {
                    tail.insert(0, ParseTree::Leaf(first));
                    out.push(tail);
                }
            }
            return out;
        }
        for mid in from..=to {
            if !self.chart.spans.contains(&(first, from, mid)) {
                continue;
            }
            let heads = self.trees(first, from, mid);
            if heads.is_empty() {
                continue;
            }
            let tails = self.splits(rest, mid, to);
            for head in &heads {
                for tail in &tails {
                    let mut children = Vec::with_capacity(tail.len() + 1);
                    children.push(head.clone());
                    children.extend(tail.iter().cloned());
                    out.push(children);
                }
            }
        }
        out
    }
}
