use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::NephrectomySide;

/// Predicted volume of the surgically removed kidney in one case.
#[derive(Debug, Clone, PartialEq)]
pub struct FprCase {
    pub case_id: String,
    pub nephrectomy_side: NephrectomySide,
    pub predicted_volume_mm3: f64,
}

/// Count of cases predicting an organ that is known to be absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FprResult {
    pub organ: String,
    pub positives: usize,
    pub total: usize,
    pub threshold_mm3: f64,
}

impl FprResult {
    pub fn rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.positives as f64 / self.total as f64
        }
    }
}

impl fmt::Display for FprResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.positives, self.total)
    }
}

/// Cases whose predicted removed-kidney volume exceeds `threshold_mm3`.
pub fn fpr_absent_organ(cases: &[FprCase], threshold_mm3: f64) -> Result<FprResult> {
    if !(threshold_mm3.is_finite() && threshold_mm3 >= 0.0) {
        return Err(Error::Input(format!("threshold must be >= 0, got {threshold_mm3}")));
    }
    let mut positives = 0;
    for c in cases {
        match c.nephrectomy_side {
            NephrectomySide::Left | NephrectomySide::Right => {}
            other => {
                return Err(Error::Input(format!(
                    "case {} has nephrectomy side `{other}`; only left/right cases enter the FPR",
                    c.case_id
                )))
            }
        }
        if c.predicted_volume_mm3 > threshold_mm3 {
            positives += 1;
        }
    }
    Ok(FprResult {
        organ: "kidney".into(),
        positives,
        total: cases.len(),
        threshold_mm3,
    })
}
