//! Policy experiments and model evaluation.

pub mod evaluation;
pub mod policy;
pub mod sensitivity;
pub mod stats;

pub use evaluation::{evaluate_years, predict_year, EvaluationReport};
pub use policy::{run_policy, DistributionSummary, PolicyScenario, ScenarioReport};
pub use sensitivity::{sensitivity_sweep, SweepTable};
pub use stats::{evaluate_predictions, wilcoxon_signed_rank, EvaluationResult, WilcoxonResult};
