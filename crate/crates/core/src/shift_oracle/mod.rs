//! Ground truth computed from a fully known gap matrix: significant shifts,
//! greedy eviction times, safe-arm certificates and closed-form rates.

mod eviction;
mod prefix;
mod rates;
mod safe;
mod shifts;

use serde::{Deserialize, Serialize};

pub use eviction::{eviction_times, gap_dependent_rate, ArmsetRun, EvictionTrace};
pub use prefix::GapPrefix;
pub use rates::{minimax_rate, phase_rate, restarting_oracle_rate, upper_bound_ratio, RateParams};
pub use safe::{
    max_holder_coefficients, phase_transition_classify, safe_arm_check, Classification,
    ClassifyReport, SafeArmReport,
};
pub use shifts::{
    has_significant_regret, significant_shifts, significant_shifts_from_prefix, verify_profile,
    ShiftProfile,
};

/// Which interval lengths an oracle scan examines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanMode {
    /// Every subinterval.
    #[default]
    Exact,
    /// Only intervals of length `2^j` ending at each round.
    Dyadic,
}

impl std::str::FromStr for ScanMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(ScanMode::Exact),
            "dyadic" => Ok(ScanMode::Dyadic),
            other => Err(format!(
                "unknown scan mode `{other}` (expected exact or dyadic)"
            )),
        }
    }
}

/// Relative slack used when a floating-point bound decides how far a scan may skip.
pub(crate) const SKIP_MARGIN: f64 = 1e-9;
