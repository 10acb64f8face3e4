use serde::{Deserialize, Serialize};

use crate::refine::{PhaseTimings, RunResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTiming {
    pub index: usize,
    #[serde(flatten)]
    pub phases: PhaseTimings,
    pub total: f64,
}

/// Per-round and summed wall-clock seconds of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingProfile {
    pub iterations: Vec<IterationTiming>,
    pub totals: PhaseTimings,
    pub total: f64,
    pub mean_iteration: f64,
    /// Population standard deviation over mean of per-round totals.
    pub coefficient_of_variation: f64,
}

impl TimingProfile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serializes")
    }
}

pub fn timing_profile(run: &RunResult) -> TimingProfile {
    let iterations: Vec<IterationTiming> = run
        .iterations
        .iter()
        .map(|r| IterationTiming {
            index: r.index,
            phases: r.timings,
            total: r.timings.total(),
        })
        .collect();
    let mut totals = PhaseTimings::default();
    for it in &iterations {
        totals.diagnosis += it.phases.diagnosis;
        totals.critic += it.phases.critic;
        totals.generator += it.phases.generator;
        totals.apply += it.phases.apply;
    }
    let n = iterations.len().max(1) as f64;
    let per_round: Vec<f64> = iterations.iter().map(|i| i.total).collect();
    let mean = per_round.iter().sum::<f64>() / n;
    let sd = (per_round.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n).sqrt();
    TimingProfile {
        total: totals.total(),
        mean_iteration: mean,
        coefficient_of_variation: if mean > 0.0 { sd / mean } else { 0.0 },
        iterations,
        totals,
    }
}
