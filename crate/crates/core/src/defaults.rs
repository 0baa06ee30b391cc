//! Tuned hyperparameter defaults.

/// Physician rationality for quantal responses.
pub const TAU: f64 = 3.0;
/// Number of physician archetypes.
pub const NUM_TYPES: usize = 5;
/// Sliding window for drift detection.
pub const DRIFT_WINDOW: usize = 30;
/// Drift alarm threshold (bits).
pub const TAU_DRIFT: f64 = 0.15;
/// KL penalty of the content-policy fine-tuning objective. Only recorded;
/// the content planner here is deterministic.
pub const BETA_KL: f64 = 0.1;
/// Weight of the information-gain term in the pharma utility.
pub const OMEGA: f64 = 0.3;

/// Blahut-Arimoto stopping gap (bits) and iteration cap.
pub const CAPACITY_TOL: f64 = 1e-9;
pub const CAPACITY_MAX_ITERS: usize = 10_000;

/// Central-difference step (relative) for Fisher information.
pub const FISHER_STEP: f64 = 1e-5;

/// Euler step for replicator integration.
pub const REPLICATOR_DT: f64 = 0.05;

/// Default Rényi order for the alternate drift detector.
pub const RENYI_ALPHA: f64 = 2.0;
