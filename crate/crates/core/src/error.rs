use alloc::boxed::Box;
use alloc::string::{String, ToString};

use thiserror::Error;

use crate::syntax::{Symbol, Task};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse `{input}`: {reason}")]
pub struct SyntaxError {
    pub input: String,
    pub reason: &'static str,
}

impl SyntaxError {
    pub(crate) fn new(input: &str, reason: &'static str) -> Self {
        SyntaxError { input: input.to_string(), reason }
    }
}

/// A domain that violates one of the well-formedness rules checked by
/// [`Domain::new`](crate::domain::Domain::new).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("symbol `{0}` is used in more than one namespace")]
    NamespaceClash(Symbol),
    #[error("`{name}` used with arity {found}, declared with arity {declared}")]
    ArityMismatch { name: Symbol, declared: usize, found: usize },
    #[error("undeclared predicate `{0}`")]
    UndeclaredPredicate(Symbol),
    #[error("undeclared constant `{0}`")]
    UndeclaredConstant(Symbol),
    #[error("task `{0}` has neither an operator nor a method")]
    UndeclaredTask(Symbol),
    #[error("more than one operator for primitive task `{0}`")]
    DuplicateOperator(Symbol),
    #[error("method name `{0}` is not unique")]
    DuplicateMethod(Symbol),
    #[error("operator `{0}` must be named by distinct variables")]
    OperatorParams(Symbol),
    #[error("variable `{var}` of `{owner}` is not bound by its name, task or positive preconditions")]
    UnboundVariable { owner: Symbol, var: Symbol },
    #[error("decomposition graph has a cycle through `{0}`")]
    CyclicDecomposition(Symbol),
    #[error("state atom `{0}` is not ground")]
    NonGroundAtom(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroundingError {
    #[error("grounding produces more than {cap} instances (stopped at `{at}`)")]
    Explosion { cap: usize, at: Symbol },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("decomposition of `{task}` exceeds depth cap {cap}")]
    DepthCapExceeded { task: Task, cap: usize },
    #[error("task `{0}` is not declared in the domain")]
    UnknownTask(Task),
    #[error("task `{0}` must be ground")]
    NonGroundTask(Task),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecognizeError {
    #[error(transparent)]
    Grounding(#[from] GroundingError),
    #[error("no method refines any goal task")]
    EmptyGrammar,
    #[error("observations cannot be derived from the goal tasks: {reason}")]
    NoParse { reason: String },
    #[error("observation {step} (`{action}`) is not executable in the replayed state")]
    StateMismatch { step: usize, action: Task },
    #[error("run has no observations")]
    EmptyRun,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormError {
    #[error("norm on ({context}, {condition}) is given as both obligation and prohibition")]
    ConflictingModalities { context: String, condition: String },
    #[error("the synthetic start symbol cannot be a norm context")]
    SyntheticContext,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnError {
    #[error("run {index}: {source}")]
    Run { index: usize, source: Box<Error> },
    #[error("thresholds must be positive (got OT={ot}, FT={ft})")]
    InvalidThreshold { ot: f64, ft: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("no plan for `{goal}` complies with the planted norms")]
    NoCompliantPlan { goal: Task },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

/// Umbrella error for callers that drive the whole pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Grounding(#[from] GroundingError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Recognize(#[from] RecognizeError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Coarse classification used to pick process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Invalid,
    NoParse,
    StateMismatch,
    DepthCapExceeded,
    GroundingExplosion,
    NoCompliantPlan,
    InvalidThreshold,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Syntax(_) | Error::Domain(_) | Error::Norm(_) => ErrorKind::Invalid,
            Error::Grounding(_) => ErrorKind::GroundingExplosion,
            Error::Plan(PlanError::DepthCapExceeded { .. }) => ErrorKind::DepthCapExceeded,
            Error::Plan(_) => ErrorKind::Invalid,
            Error::Recognize(e) => match e {
                RecognizeError::Grounding(_) => ErrorKind::GroundingExplosion,
                RecognizeError::StateMismatch { .. } => ErrorKind::StateMismatch,
                RecognizeError::EmptyRun => ErrorKind::Invalid,
                RecognizeError::EmptyGrammar | RecognizeError::NoParse { .. } => ErrorKind::NoParse,
            },
            Error::Learn(LearnError::Run { source, .. }) => source.kind(),
            Error::Learn(LearnError::InvalidThreshold { .. }) => ErrorKind::InvalidThreshold,
            Error::Sim(SimError::NoCompliantPlan { .. }) => ErrorKind::NoCompliantPlan,
            Error::Sim(SimError::InvalidScenario(_)) => ErrorKind::Invalid,
        }
    }
}
