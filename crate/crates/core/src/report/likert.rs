use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::mean_sd;

/// Per-rater means further apart than this flag an organ for discussion.
pub const DISAGREEMENT_GAP: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikertRecord {
    pub case_id: String,
    pub organ: String,
    pub rater_id: String,
    pub score: u8,
    pub timestamp: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

impl LikertRecord {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(1..=5).contains(&self.score) {
            problems.push(format!("score {} outside 1..5", self.score));
        }
        for (field, value) in [
            ("case_id", &self.case_id),
            ("organ", &self.organ),
            ("rater_id", &self.rater_id),
        ] {
            if value.trim().is_empty() {
                problems.push(format!("{field} is empty"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    pub fn to_json_line(&self) -> Result<String> {
        let mut s = serde_json::to_string(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Body of a score submission, before it is bound to a case and stamped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSubmission {
    pub rater_id: String,
    pub organ: String,
    pub score: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

impl ScoreSubmission {
    /// Validate and stamp. Organ names are checked by the caller, which
    /// knows the schema.
    pub fn into_record(self, case_id: &str, timestamp: DateTime<Utc>) -> Result<LikertRecord> {
        let score = u8::try_from(self.score)
            .ok()
            .filter(|s| (1..=5).contains(s))
            .ok_or_else(|| Error::Validation(vec![format!("score {} outside 1..5", self.score)]))?;
        let record = LikertRecord {
            case_id: case_id.to_string(),
            organ: self.organ,
            rater_id: self.rater_id,
            score,
            timestamp,
            comment: self.comment.filter(|c| !c.trim().is_empty()),
        };
        record.validate()?;
        Ok(record)
    }
}

/// Parse a JSON-lines scores file. Invalid lines are reported (1-based line
/// numbers) and skipped; blank lines are ignored.
pub fn parse_likert_lines(text: &str) -> (Vec<LikertRecord>, Vec<String>) {
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<LikertRecord>(line)
            .map_err(Error::from)
            .and_then(|r| r.validate().map(|_| r));
        match parsed {
            Ok(r) => records.push(r),
            Err(e) => errors.push(format!("line {}: {e}", i + 1)),
        }
    }
    (records, errors)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Usability {
    NotUsable,
    ClinicallyUsable,
    AcceptableMinorMods,
}

impl Usability {
    pub fn from_mean(mean: f64) -> Usability {
        if mean >= 4.0 {
            Usability::AcceptableMinorMods
        } else if mean >= 3.0 {
            Usability::ClinicallyUsable
        } else {
            Usability::NotUsable
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaterSummary {
    pub rater_id: String,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikertSummary {
    pub organ: String,
    pub raters: Vec<RaterSummary>,
    /// Mean over every (case, rater) score.
    pub combined_mean: f64,
    pub usability: Usability,
    pub disagreement: bool,
    pub n_cases: usize,
    pub n_scores: usize,
}

/// Per-organ summaries, organs and raters sorted by name. A rater's later
/// score for the same case and organ replaces the earlier one.
pub fn likert_summarize(records: &[LikertRecord]) -> Vec<LikertSummary> {
    let mut latest: BTreeMap<(&str, &str, &str), u8> = BTreeMap::new();
    for r in records {
        latest.insert((r.organ.as_str(), r.rater_id.as_str(), r.case_id.as_str()), r.score);
    }
    let mut by_organ: BTreeMap<&str, BTreeMap<&str, Vec<f64>>> = BTreeMap::new();
    let mut cases: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for ((organ, rater, case), score) in latest {
        by_organ
            .entry(organ)
            .or_default()
            .entry(rater)
            .or_default()
            .push(f64::from(score));
        cases.entry(organ).or_default().insert(case);
    }
    by_organ
        .into_iter()
        .map(|(organ, raters)| {
            let raters: Vec<RaterSummary> = raters
                .into_iter()
                .map(|(rater, scores)| {
                    let (mean, sd) = mean_sd(&scores).expect("non-empty");
                    RaterSummary {
                        rater_id: rater.to_string(),
                        n: scores.len(),
                        mean,
                        sd,
                    }
                })
                .collect();
            let n_scores: usize = raters.iter().map(|r| r.n).sum();
            let combined_mean = raters.iter().map(|r| r.mean * r.n as f64).sum::<f64>() / n_scores as f64;
            let lo = raters.iter().map(|r| r.mean).fold(f64::INFINITY, f64::min);
            let hi = raters.iter().map(|r| r.mean).fold(f64::NEG_INFINITY, f64::max);
            LikertSummary {
                organ: organ.to_string(),
                raters,
                combined_mean,
                usability: Usability::from_mean(combined_mean),
                disagreement: hi - lo > DISAGREEMENT_GAP,
                n_cases: cases[organ].len(),
                n_scores,
            }
        })
        .collect()
}
