use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Preconditions of the comparison were not met; nothing is asserted.
    HypothesesUnmet,
}

/// Outcome of a comparison between a solved quantity and its model bound.
///
/// `margin_min` is the smallest signed margin seen; negative values are
/// violations. `pass` holds iff `margin_min >= -tolerance` and the
/// hypotheses were met.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub margin_min: f64,
    pub t_argmin: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blowup_time: Option<f64>,
    pub verdict: Verdict,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ComparisonReport {
    pub fn decided(margin_min: f64, t_argmin: f64, tolerance: f64) -> Self {
        let pass = margin_min >= -tolerance;
        Self {
            margin_min,
            t_argmin,
            pass,
            blowup_time: None,
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            tolerance,
            notes: Vec::new(),
        }
    }

    pub fn hypotheses_unmet(reason: impl Into<String>, tolerance: f64) -> Self {
        Self {
            margin_min: f64::NAN,
            t_argmin: f64::NAN,
            pass: false,
            blowup_time: None,
            verdict: Verdict::HypothesesUnmet,
            tolerance,
            notes: vec![reason.into()],
        }
    }

    /// The largest violation, zero when the ordering holds.
    pub fn max_violation(&self) -> f64 {
        (-self.margin_min).max(0.0)
    }
}
