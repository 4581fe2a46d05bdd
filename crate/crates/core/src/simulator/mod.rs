//! Run generation from planted norms, and scoring of learned norms.

mod evaluate;
mod rng;
pub mod toy;

use alloc::string::ToString;
use alloc::vec::Vec;

pub use evaluate::{evaluate, evaluate_plans, EvaluationReport, Score};
pub use rng::Sampler;

use crate::domain::Domain;
use crate::error::{Error, SimError};
use crate::norms::NormSet;
use crate::planner::{Plan, Planner};
use crate::recognize::Run;
use crate::state::State;
use crate::syntax::Task;

/// A population of agents pursuing weighted goals from one initial state
/// under planted norms.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub domain: Domain,
    pub norms: NormSet,
    pub initial: State,
    /// Ground goal tasks with positive weights.
    pub goals: Vec<(Task, f64)>,
    /// Probability in `[0, 1]` that a run picks a violating plan.
    pub violation_rate: f64,
    pub seed: u64,
}

impl Scenario {
    /// Checks weights, rate, goals and initial state against the domain.
    pub fn validate(&self) -> Result<(), Error> {
        let invalid = |m: &str| Error::from(SimError::InvalidScenario(m.to_string()));
        if !(0.0..=1.0).contains(&self.violation_rate) {
            return Err(invalid("violation rate must lie in [0, 1]"));
        }
        if self.goals.is_empty() {
            return Err(invalid("no goals"));
        }
        for (goal, weight) in &self.goals {
            if !(*weight > 0.0 && weight.is_finite()) {
                return Err(invalid("goal weights must be positive"));
            }
            if !goal.is_ground() {
                return Err(invalid("goals must be ground"));
            }
            self.domain.check_task(goal)?;
        }
        self.domain.check_state(&self.initial)?;
        Ok(())
    }
}

/// Plans for `goal` from `initial` that violate none of `norms`.
pub fn compliant_plans(
    planner: &Planner<'_>,
    initial: &State,
    goal: &Task,
    norms: &NormSet,
) -> Result<Vec<Plan>, Error> {
    let plans: Vec<Plan> = planner.all_plans(initial, goal)?.into_iter().filter(|p| norms.complies(p)).collect();
    if plans.is_empty() {
        return Err(SimError::NoCompliantPlan { goal: goal.clone() }.into());
    }
    Ok(plans)
}

/// The plans of one goal, split by compliance, in enumeration order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PlanPool {
    pub compliant: Vec<Plan>,
    pub violating: Vec<Plan>,
}

impl PlanPool {
    pub fn new(planner: &Planner<'_>, initial: &State, goal: &Task, norms: &NormSet) -> Result<Self, Error> {
        let (compliant, violating) = planner.all_plans(initial, goal)?.into_iter().partition(|p| norms.complies(p));
        Ok(PlanPool { compliant, violating })
    }
}

/// `n` runs drawn from `scenario`.
///
/// Per run, three draws in this order: a goal by weight, a Bernoulli draw
/// with the violation rate, and a uniform plan index. A violating run picks
/// among the non-compliant plans of the goal, or among the compliant ones if
/// there are none. Each run records its goal.
pub fn generate_runs(scenario: &Scenario, n: usize, planner: &Planner<'_>) -> Result<Vec<Run>, Error> {
    Ok(generate_plans(scenario, n, planner)?
        .into_iter()
        .map(|(goal, plan)| Run::of_plan(&plan).with_goal(goal))
        .collect())
}

/// As [`generate_runs`], keeping the chosen plans.
pub fn generate_plans(scenario: &Scenario, n: usize, planner: &Planner<'_>) -> Result<Vec<(Task, Plan)>, Error> {
    scenario.validate()?;
    let pools = scenario
        .goals
        .iter()
        .map(|(g, _)| PlanPool::new(planner, &scenario.initial, g, &scenario.norms))
        .collect::<Result<Vec<_>, _>>()?;
    if pools.iter().all(|p| p.compliant.is_empty()) {
        return Err(SimError::NoCompliantPlan { goal: scenario.goals[0].0.clone() }.into());
    }
    let weights: Vec<f64> = scenario.goals.iter().map(|(_, w)| *w).collect();
    let mut sampler = Sampler::new(scenario.seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let g = sampler.weighted(&weights);
        let violate = sampler.chance(scenario.violation_rate);
        let pool = &pools[g];
        let goal = &scenario.goals[g].0;
        let choices = if violate && !pool.violating.is_empty() { &pool.violating } else { &pool.compliant };
        if choices.is_empty() {
            return Err(SimError::NoCompliantPlan { goal: goal.clone() }.into());
        }
        let plan = &choices[sampler.index(choices.len())];
        out.push((goal.clone(), plan.clone()));
    }
    Ok(out)
}
