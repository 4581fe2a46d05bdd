//! Norm identification from observed behaviour.
//!
//! Agents share a hierarchical plan library (an HTN domain). Given runs of
//! observed primitive actions, this crate reconstructs the decomposition that
//! explains each run by parsing it against the grammar induced by the domain,
//! enumerates the alternatives the agent could have chosen instead, and infers
//! which obligations and prohibitions are in force:
//!
//! * [`learner::learn_norms`] assumes fully compliant agents and narrows a set
//!   of potential obligations and prohibitions run by run.
//! * [`learner::t_learn_norms`] tolerates violations by counting supporting and
//!   refuting evidence and filtering with ratio thresholds.
//!
//! [`simulator`] generates runs from planted norms and scores learned norms
//! against them.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod domain;
pub mod earley;
pub mod error;
pub mod grammar;
pub mod ground;
pub mod learner;
pub mod norms;
pub mod planner;
pub mod recognize;
pub mod simulator;
pub mod state;
pub mod subst;
pub mod syntax;

pub use domain::{applicable, apply, Action, Domain, Lang, Method, Operator, TaskKind, TaskNetwork};
pub use error::{Error, ErrorKind};
pub use grammar::{to_grammar, Grammar, ParseTree};
pub use ground::{ground_domain, GroundingOptions};
pub use learner::{learn_norms, t_learn_norms, LearnOptions, LearnedNorms, ObligationLattice, ThresholdLearned};
pub use norms::{occurs, violated, Condition, Modality, Norm, NormSet};
pub use planner::{states_of, DecompositionNode, Plan, Planner};
pub use recognize::{recognize, Recognition, Recognizer, Run};
pub use simulator::{compliant_plans, evaluate, generate_runs, EvaluationReport, Scenario};
pub use state::State;
pub use subst::{satisfies, Substitution};
pub use syntax::{Atom, Literal, Symbol, Task, Term};
