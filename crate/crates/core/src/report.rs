use serde::{Deserialize, Serialize};

use crate::perm::Permutation;

/// Outcome of one solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    #[serde(rename = "final")]
    pub final_perm: Permutation,
    pub epsilon: u64,
    #[serde(rename = "S")]
    pub s: f64,
    /// QSA: relaxed objective per iterate. AFP: best epsilon at checkpoints.
    pub objective_trace: Vec<f64>,
    pub iters: usize,
    pub fixed_point_count: usize,
    pub is_identity: bool,
    pub wall_ms: u64,
    pub seed: u64,
}

impl SolverReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<SolverReport> {
        serde_json::from_str(text)
    }
}
