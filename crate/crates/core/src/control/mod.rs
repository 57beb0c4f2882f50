//! Reward, planners, the rule-based baseline and the MPC loop.

pub mod mpc;
pub mod planner;
pub mod reward;
pub mod rule;

pub use mpc::{evaluate_sequence, BatchDynamics, MpcController, PlannerKind, RefillPolicy, RolloutEvaluator};
pub use planner::{
    mppi_weights, plan_cem, plan_mppi, plan_random_shooting, step_seed, ActionSequenceBuffer, FnEvaluator, MppiStep, Plan,
    PlannerConfig, Refill, SequenceEvaluator,
};
pub use reward::{reward, RewardConfig};
pub use rule::{RuleBasedPolicy, RuleController};
