//! Operators, actions, methods and the domain that bundles them.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use crate::error::DomainError;
use crate::state::State;
use crate::subst::Substitution;
use crate::syntax::{collect_vars, Atom, Literal, Symbol, Task, Term};

/// Predicates and constants of the first-order language.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Lang {
    predicates: BTreeMap<Symbol, usize>,
    constants: BTreeSet<Symbol>,
}

impl Lang {
    pub fn new<P, C>(predicates: P, constants: C) -> Self
    where
        P: IntoIterator<Item = (Symbol, usize)>,
        C: IntoIterator<Item = Symbol>,
    {
        Lang { predicates: predicates.into_iter().collect(), constants: constants.into_iter().collect() }
    }

    pub fn predicates(&self) -> &BTreeMap<Symbol, usize> {
        &self.predicates
    }

    pub fn constants(&self) -> &BTreeSet<Symbol> {
        &self.constants
    }

    pub fn arity(&self, predicate: &str) -> Option<usize> {
        self.predicates.get(predicate).copied()
    }
}

/// Action template: `(name, pre, post⁺, post⁻)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Operator {
    pub name: Task,
    pub pre: Vec<Literal>,
    pub add: Vec<Atom>,
    pub del: Vec<Atom>,
}

impl Operator {
    pub fn instantiate(&self, sigma: &Substitution) -> Action {
        Action {
            name: sigma.apply_task(&self.name),
            pre: self.pre.iter().map(|l| sigma.apply_literal(l)).collect(),
            add: self.add.iter().map(|a| sigma.apply_atom(a)).collect(),
            del: self.del.iter().map(|a| sigma.apply_atom(a)).collect(),
        }
    }

    fn body_vars(&self) -> BTreeSet<Symbol> {
        collect_vars(
            self.pre
                .iter()
                .map(|l| l.atom.args.as_slice())
                .chain(self.add.iter().map(|a| a.args.as_slice()))
                .chain(self.del.iter().map(|a| a.args.as_slice())),
        )
    }

    pub fn is_ground(&self) -> bool {
        self.name.is_ground() && self.body_vars().is_empty()
    }
}

/// A ground operator instance.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Action {
    pub name: Task,
    pub pre: Vec<Literal>,
    pub add: Vec<Atom>,
    pub del: Vec<Atom>,
}

impl Action {
    pub fn is_applicable(&self, state: &State) -> bool {
        self.pre.iter().all(|l| state.contains(&l.atom) == l.positive)
    }

    /// `(s ∪ add) \ del` when applicable, otherwise `s` unchanged.
    pub fn apply(&self, state: &State) -> State {
        if self.is_applicable(state) {
            state.transition(&self.add, &self.del)
        } else {
            state.clone()
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

pub fn applicable(action: &Action, state: &State) -> bool {
    action.is_applicable(state)
}

pub fn apply(action: &Action, state: &State) -> State {
    action.apply(state)
}

/// Totally ordered list of subtasks.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TaskNetwork {
    tasks: Vec<Task>,
}

impl TaskNetwork {
    pub fn new(tasks: Vec<Task>) -> Self {
        TaskNetwork { tasks }
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }
}

/// `(name, task, precond⁺, precond⁻, network)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Method {
    pub name: Task,
    pub task: Task,
    pub pre_pos: Vec<Atom>,
    pub pre_neg: Vec<Atom>,
    pub network: TaskNetwork,
}

impl Method {
    pub fn preconditions(&self) -> Vec<Literal> {
        self.pre_pos.iter().cloned().map(Literal::pos).chain(self.pre_neg.iter().cloned().map(Literal::neg)).collect()
    }

    pub fn vars(&self) -> BTreeSet<Symbol> {
        collect_vars(
            [self.name.args.as_slice(), self.task.args.as_slice()]
                .into_iter()
                .chain(self.pre_pos.iter().map(|a| a.args.as_slice()))
                .chain(self.pre_neg.iter().map(|a| a.args.as_slice()))
                .chain(self.network.tasks().iter().map(|t| t.args.as_slice())),
        )
    }

    pub fn instantiate(&self, sigma: &Substitution) -> Method {
        Method {
            name: sigma.apply_task(&self.name),
            task: sigma.apply_task(&self.task),
            pre_pos: self.pre_pos.iter().map(|a| sigma.apply_atom(a)).collect(),
            pre_neg: self.pre_neg.iter().map(|a| sigma.apply_atom(a)).collect(),
            network: TaskNetwork::new(self.network.tasks().iter().map(|t| sigma.apply_task(t)).collect()),
        }
    }

    pub fn is_ground(&self) -> bool {
        self.vars().is_empty()
    }

    /// Ground preconditions hold in `state`.
    pub fn holds_in(&self, state: &State) -> bool {
        self.pre_pos.iter().all(|a| state.contains(a)) && self.pre_neg.iter().all(|a| !state.contains(a))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskKind {
    Primitive,
    Compound,
}

/// Operators and methods over a language, with lookup indexes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Domain {
    lang: Lang,
    operators: Vec<Operator>,
    methods: Vec<Method>,
    primitive: BTreeMap<Symbol, (usize, Vec<usize>)>,
    compound: BTreeMap<Symbol, (usize, Vec<usize>)>,
}

impl Domain {
    /// Builds and validates a lifted domain.
    pub fn new(lang: Lang, operators: Vec<Operator>, methods: Vec<Method>) -> Result<Self, DomainError> {
        let domain = Domain::assemble(lang, operators, methods)?;
        domain.validate()?;
        Ok(domain)
    }

    /// Builds the indexes and checks the structural rules that also hold for
    /// ground domains.
    pub(crate) fn assemble(lang: Lang, operators: Vec<Operator>, methods: Vec<Method>) -> Result<Self, DomainError> {
        let mut primitive: BTreeMap<Symbol, (usize, Vec<usize>)> = BTreeMap::new();
        for (i, op) in operators.iter().enumerate() {
            let entry = primitive.entry(op.name.name.clone()).or_insert((op.name.arity(), Vec::new()));
            if entry.0 != op.name.arity() {
                return Err(DomainError::ArityMismatch {
                    name: op.name.name.clone(),
                    declared: entry.0,
                    found: op.name.arity(),
                });
            }
            entry.1.push(i);
        }
        let mut compound: BTreeMap<Symbol, (usize, Vec<usize>)> = BTreeMap::new();
        for (i, m) in methods.iter().enumerate() {
            let entry = compound.entry(m.task.name.clone()).or_insert((m.task.arity(), Vec::new()));
            if entry.0 != m.task.arity() {
                return Err(DomainError::ArityMismatch {
                    name: m.task.name.clone(),
                    declared: entry.0,
                    found: m.task.arity(),
                });
            }
            entry.1.push(i);
        }
        let domain = Domain { lang, operators, methods, primitive, compound };
        domain.check_namespaces()?;
        domain.check_references()?;
        domain.check_acyclic()?;
        Ok(domain)
    }

    fn check_namespaces(&self) -> Result<(), DomainError> {
        let mut seen: BTreeSet<&Symbol> = BTreeSet::new();
        let names = self
            .lang
            .predicates
            .keys()
            .chain(self.lang.constants.iter())
            .chain(self.primitive.keys())
            .chain(self.compound.keys());
        for name in names {
            if !seen.insert(name) {
                return Err(DomainError::NamespaceClash(name.clone()));
            }
        }
        Ok(())
    }

    fn check_atom(&self, atom: &Atom) -> Result<(), DomainError> {
        match self.lang.arity(&atom.predicate) {
            None => Err(DomainError::UndeclaredPredicate(atom.predicate.clone())),
            Some(n) if n != atom.arity() => {
                Err(DomainError::ArityMismatch { name: atom.predicate.clone(), declared: n, found: atom.arity() })
            }
            Some(_) => self.check_constants(&atom.args),
        }
    }

    fn check_constants(&self, args: &[Term]) -> Result<(), DomainError> {
        for t in args {
            if let Term::Const(c) = t {
                if !self.lang.constants.contains(c) {
                    return Err(DomainError::UndeclaredConstant(c.clone()));
                }
            }
        }
        Ok(())
    }

    /// Checks that a task mentions a declared symbol with the right arity.
    pub fn check_task(&self, task: &Task) -> Result<(), DomainError> {
        let declared = self
            .primitive
            .get(&task.name)
            .or_else(|| self.compound.get(&task.name))
            .map(|(arity, _)| *arity)
            .ok_or_else(|| DomainError::UndeclaredTask(task.name.clone()))?;
        if declared != task.arity() {
            return Err(DomainError::ArityMismatch { name: task.name.clone(), declared, found: task.arity() });
        }
        self.check_constants(&task.args)
    }

    /// Checks a state against the declared predicates.
    pub fn check_state(&self, state: &State) -> Result<(), DomainError> {
        for atom in state {
            match self.lang.arity(&atom.predicate) {
                None => return Err(DomainError::UndeclaredPredicate(atom.predicate.clone())),
                Some(n) if n != atom.arity() => {
                    return Err(DomainError::ArityMismatch {
                        name: atom.predicate.clone(),
                        declared: n,
                        found: atom.arity(),
                    })
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    fn check_references(&self) -> Result<(), DomainError> {
        for op in &self.operators {
            self.check_constants(&op.name.args)?;
            for lit in &op.pre {
                self.check_atom(&lit.atom)?;
            }
            for atom in op.add.iter().chain(&op.del) {
                self.check_atom(atom)?;
            }
        }
        for m in &self.methods {
            self.check_constants(&m.name.args)?;
            self.check_constants(&m.task.args)?;
            for atom in m.pre_pos.iter().chain(&m.pre_neg) {
                self.check_atom(atom)?;
            }
            for t in m.network.tasks() {
                self.check_task(t)?;
            }
        }
        Ok(())
    }

    fn check_acyclic(&self) -> Result<(), DomainError> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut color: BTreeMap<&Symbol, u8> = BTreeMap::new();
        for start in self.compound.keys() {
            if color.get(start).copied().unwrap_or(0) != 0 {
                continue;
            }
            let mut stack: Vec<(&Symbol, usize)> = alloc::vec![(start, 0)];
            color.insert(start, 1);
            while let Some((node, next)) = stack.pop() {
                let children: Vec<&Symbol> = self.compound[node]
                    .1
                    .iter()
                    .flat_map(|&i| self.methods[i].network.tasks().iter().map(|t| &t.name))
                    .filter(|s| self.compound.contains_key(*s))
                    .collect();
                if next < children.len() {
                    stack.push((node, next + 1));
                    let child = children[next];
                    match color.get(child).copied().unwrap_or(0) {
                        1 => return Err(DomainError::CyclicDecomposition(child.clone())),
                        0 => {
                            color.insert(child, 1);
                            stack.push((child, 0));
                        }
                        _ => {}
                    }
                } else {
                    color.insert(node, 2);
                }
            }
        }
        Ok(())
    }

    /// Rules that only apply to lifted (user-written) domains.
    fn validate(&self) -> Result<(), DomainError> {
        for (name, (_, ops)) in &self.primitive {
            if ops.len() > 1 {
                return Err(DomainError::DuplicateOperator(name.clone()));
            }
        }
        for op in &self.operators {
            let params: BTreeSet<&Symbol> = op.name.vars().collect();
            if params.len() != op.name.arity() {
                return Err(DomainError::OperatorParams(op.name.name.clone()));
            }
            for v in op.body_vars() {
                if !params.contains(&v) {
                    return Err(DomainError::UnboundVariable { owner: op.name.name.clone(), var: v });
                }
            }
        }
        let mut method_names = BTreeSet::new();
        for m in &self.methods {
            if !method_names.insert(m.name.name.clone()) {
                return Err(DomainError::DuplicateMethod(m.name.name.clone()));
            }
            let bound = collect_vars(
                [m.name.args.as_slice(), m.task.args.as_slice()]
                    .into_iter()
                    .chain(m.pre_pos.iter().map(|a| a.args.as_slice())),
            );
            for v in m.vars() {
                if !bound.contains(&v) {
                    return Err(DomainError::UnboundVariable { owner: m.name.name.clone(), var: v });
                }
            }
        }
        Ok(())
    }

    pub fn lang(&self) -> &Lang {
        &self.lang
    }

    pub fn operators(&self) -> &[Operator] {
        &self.operators
    }

    pub fn methods(&self) -> &[Method] {
        &self.methods
    }

    pub fn constants(&self) -> &BTreeSet<Symbol> {
        &self.lang.constants
    }

    pub fn kind(&self, symbol: &str) -> Option<TaskKind> {
        if self.primitive.contains_key(symbol) {
            Some(TaskKind::Primitive)
        } else if self.compound.contains_key(symbol) {
            Some(TaskKind::Compound)
        } else {
            None
        }
    }

    pub fn is_primitive(&self, task: &Task) -> bool {
        self.kind(&task.name) == Some(TaskKind::Primitive)
    }

    pub fn primitive_symbols(&self) -> impl Iterator<Item = (&Symbol, usize)> + '_ {
        self.primitive.iter().map(|(s, (a, _))| (s, *a))
    }

    pub fn compound_symbols(&self) -> impl Iterator<Item = (&Symbol, usize)> + '_ {
        self.compound.iter().map(|(s, (a, _))| (s, *a))
    }

    /// Methods whose task symbol is `symbol`, in declaration order, with their
    /// indexes.
    pub fn methods_for<'a>(&'a self, symbol: &str) -> impl Iterator<Item = (usize, &'a Method)> + 'a {
        self.compound
            .get(symbol)
            .map(|(_, idx)| idx.as_slice())
            .unwrap_or(&[])
            .iter()
            .map(move |&i| (i, &self.methods[i]))
    }

    /// The ground action realising a ground primitive task, if any.
    pub fn action_for(&self, task: &Task) -> Option<Action> {
        let (_, idx) = self.primitive.get(&task.name)?;
        idx.iter().find_map(|&i| {
            let op = &self.operators[i];
            let sigma = Substitution::new().match_task(&op.name, task)?;
            let action = op.instantiate(&sigma);
            let ground = action.name.is_ground()
                && action.pre.iter().all(|l| l.atom.is_ground())
                && action.add.iter().chain(&action.del).all(Atom::is_ground);
            ground.then_some(action)
        })
    }

    /// Compound task symbols that no method network mentions.
    pub fn top_level_symbols(&self) -> BTreeSet<Symbol> {
        let used: BTreeSet<&Symbol> =
            self.methods.iter().flat_map(|m| m.network.tasks().iter().map(|t| &t.name)).collect();
        self.compound.keys().filter(|s| !used.contains(s)).cloned().collect()
    }

    /// One pattern `name(V0,…,Vn)` per top-level compound task symbol.
    pub fn top_level_goals(&self) -> Vec<Task> {
        self.top_level_symbols()
            .into_iter()
            .map(|s| {
                let arity = self.compound[&s].0;
                let args = (0..arity).map(|i| Term::Var(crate::syntax::sym(&alloc::format!("V{i}")))).collect();
                Task { name: s, args }
            })
            .collect()
    }

    pub fn describe(&self) -> alloc::string::String {
        alloc::format!(
            "{} operators, {} methods, {} constants",
            self.operators.len(),
            self.methods.len(),
            self.lang.constants.len()
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} : {} ->", self.name, self.task)?;
        for t in self.network.tasks() {
            write!(f, " {t}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::syntax::sym;
    use alloc::vec;

    pub(crate) fn op(name: &str, pre: &[&str], add: &[&str], del: &[&str]) -> Operator {
        Operator {
            name: Task::parse(name).unwrap(),
            pre: pre.iter().map(|s| Literal::parse(s).unwrap()).collect(),
            add: add.iter().map(|s| Atom::parse(s).unwrap()).collect(),
            del: del.iter().map(|s| Atom::parse(s).unwrap()).collect(),
        }
    }

    pub(crate) fn method(name: &str, task: &str, pos: &[&str], neg: &[&str], subtasks: &[&str]) -> Method {
        Method {
            name: Task::parse(name).unwrap(),
            task: Task::parse(task).unwrap(),
            pre_pos: pos.iter().map(|s| Atom::parse(s).unwrap()).collect(),
            pre_neg: neg.iter().map(|s| Atom::parse(s).unwrap()).collect(),
            network: TaskNetwork::new(subtasks.iter().map(|s| Task::parse(s).unwrap()).collect()),
        }
    }

    pub(crate) fn travel_domain() -> Domain {
        let lang = Lang::new([(sym("at"), 1), (sym("connect"), 2)], ["aberdeen", "london", "paris"].map(sym));
        Domain::new(
            lang,
            vec![op("goto(X,Y)", &["at(X)"], &["at(Y)"], &["at(X)"])],
            vec![method(
                "fly(X,Y)",
                "travel(X,Y)",
                &["at(X)", "connect(X,Z)", "connect(Z,Y)"],
                &[],
                &["goto(X,Z)", "goto(Z,Y)"],
            )],
        )
        .unwrap()
    }

    fn goto(from: &str, to: &str) -> Action {
        travel_domain().action_for(&Task::parse(&alloc::format!("goto({from},{to})")).unwrap()).unwrap()
    }

    #[test]
    fn goto_applicable_at_source() {
        let s = State::parse(["at(aberdeen)", "connect(aberdeen,london)"]).unwrap();
        assert!(applicable(&goto("aberdeen", "london"), &s));
        assert!(!applicable(&goto("aberdeen", "london"), &State::parse(["at(paris)"]).unwrap()));
    }

    #[test]
    fn empty_preconditions_always_applicable() {
        let a = Action { name: Task::parse("noop").unwrap(), pre: vec![], add: vec![], del: vec![] };
        assert!(applicable(&a, &State::empty()));
        assert!(applicable(&a, &State::parse(["p(a)"]).unwrap()));
    }

    #[test]
    fn goto_moves_agent() {
        let s = State::parse(["at(aberdeen)"]).unwrap();
        assert_eq!(apply(&goto("aberdeen", "london"), &s), State::parse(["at(london)"]).unwrap());
    }

    #[test]
    fn inapplicable_apply_is_identity() {
        let s = State::parse(["at(paris)"]).unwrap();
        assert_eq!(apply(&goto("aberdeen", "london"), &s), s);
    }

    #[test]
    fn add_then_delete_same_atom() {
        let a = Action {
            name: Task::parse("flip").unwrap(),
            pre: vec![],
            add: vec![Atom::parse("p").unwrap()],
            del: vec![Atom::parse("p").unwrap()],
        };
        let s = State::parse(["q"]).unwrap();
        // (s ∪ {p}) \ {p} = {q}
        assert_eq!(apply(&a, &s), s);
    }

    #[test]
    fn rejects_cycles() {
        let lang = Lang::default();
        let err = Domain::new(
            lang,
            vec![op("a", &[], &[], &[])],
            vec![method("m1", "t1", &[], &[], &["t2"]), method("m2", "t2", &[], &[], &["t1", "a"])],
        )
        .unwrap_err();
        assert!(matches!(err, DomainError::CyclicDecomposition(_)));
    }

    #[test]
    fn rejects_namespace_clash() {
        let lang = Lang::new([(sym("a"), 0)], []);
        let err = Domain::new(lang, vec![op("a", &[], &[], &[])], vec![]).unwrap_err();
        assert_eq!(err, DomainError::NamespaceClash(sym("a")));
    }

    #[test]
    fn rejects_unbound_operator_variable() {
        let lang = Lang::new([(sym("at"), 1)], []);
        let err = Domain::new(lang, vec![op("go(X)", &["at(Y)"], &[], &[])], vec![]).unwrap_err();
        assert!(matches!(err, DomainError::UnboundVariable { .. }));
    }

    #[test]
    fn rejects_undeclared_subtask() {
        let err = Domain::new(Lang::default(), vec![], vec![method("m", "t", &[], &[], &["missing"])]).unwrap_err();
        assert_eq!(err, DomainError::UndeclaredTask(sym("missing")));
    }

    #[test]
    fn values_are_shareable_across_threads() {
        fn check<T: Send + Sync>() {}
        check::<Domain>();
        check::<State>();
    }

    #[test]
    fn top_level_goals_of_travel() {
        let d = travel_domain();
        assert_eq!(d.top_level_goals(), vec![Task::parse("travel(V0,V1)").unwrap()]);
    }
}
