use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::SplitError;

/// How evaluation samples are matched against training samples when cleaning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DedupMode {
    /// Identical code subtokens and identical summary subtokens.
    ExactPair,
    /// Identical code subtokens.
    SameCode,
    /// Identical summary subtokens.
    SameNl,
    /// Positional subtoken similarity above the threshold on both code and summary.
    Sim90,
}

impl DedupMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "exact_pair" | "exact-pair" => Some(DedupMode::ExactPair),
            "same_code" | "same-code" => Some(DedupMode::SameCode),
            "same_nl" | "same-nl" => Some(DedupMode::SameNl),
            "sim90" | "sim_90" | "sim-90" => Some(DedupMode::Sim90),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DedupConfig {
    pub mode: DedupMode,
    /// Only used by [`DedupMode::Sim90`].
    pub threshold: f64,
}

impl Default for DedupConfig {
    fn default() -> Self {
        DedupConfig {
            mode: DedupMode::ExactPair,
            threshold: 0.9,
        }
    }
}

impl DedupConfig {
    pub fn new(mode: DedupMode) -> Self {
        DedupConfig {
            mode,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub tau_minus_2: NaiveDate,
    pub tau_minus_1: NaiveDate,
    pub tau: NaiveDate,
    pub r_x: f64,
    pub r_y: f64,
    pub r_z: f64,
    pub seed: u64,
    pub dedup: DedupConfig,
}

impl SplitConfig {
    /// 70/10/20 ratios and exact-pair cleaning.
    pub fn new(tau_minus_2: NaiveDate, tau_minus_1: NaiveDate, tau: NaiveDate, seed: u64) -> Self {
        SplitConfig {
            tau_minus_2,
            tau_minus_1,
            tau,
            r_x: 0.7,
            r_y: 0.1,
            r_z: 0.2,
            seed,
            dedup: DedupConfig::default(),
        }
    }

    /// Year boundaries 2019/2020/2021.
    pub fn yearly_2019_2021(seed: u64) -> Self {
        let d = |y| NaiveDate::from_ymd_opt(y, 1, 1).expect("valid date");
        Self::new(d(2019), d(2020), d(2021), seed)
    }

    pub fn ratios(&self) -> [f64; 3] {
        [self.r_x, self.r_y, self.r_z]
    }

    pub fn validate(&self) -> Result<(), SplitError> {
        let bad = |m: &str| Err(SplitError::Config(m.to_string()));
        if !(self.tau_minus_2 < self.tau_minus_1 && self.tau_minus_1 < self.tau) {
            return bad("timestamps must satisfy tau_minus_2 < tau_minus_1 < tau");
        }
        let r = self.ratios();
        if r.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return bad("ratios must be non-negative");
        }
        if (r.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return bad("ratios must sum to 1");
        }
        if self.r_x < self.r_y || self.r_x < self.r_z {
            return bad("r_x must be the largest ratio");
        }
        let t = self.dedup.threshold;
        if !(t > 0.0 && t <= 1.0) {
            return bad("dedup threshold must be in (0, 1]");
        }
        Ok(())
    }
}
