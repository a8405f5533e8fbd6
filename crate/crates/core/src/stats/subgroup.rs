use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::comparison::{build_comparison, mean_sd, ComparisonReport, GroupSummary, MetricKind, OrganComparison};
use super::wilcoxon::wilcoxon_rank_sum;
use crate::error::{Error, Result};
use crate::manifest::{CaseRecord, Contrast, Manifest, Sex, TumorType};
use crate::metrics::MetricRow;

/// Case attribute used to form subgroups or split strata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Sex,
    TumorType,
    IvContrast,
    AgeGroup,
    Dataset,
}

pub const AGE_GROUPS: [&str; 4] = ["0-2", "3-4", "5-6", ">=7"];

/// Age bin by integer floor of the age in years.
pub fn age_group(age_years: f64) -> &'static str {
    match age_years.floor() as i64 {
        i64::MIN..=2 => AGE_GROUPS[0],
        3..=4 => AGE_GROUPS[1],
        5..=6 => AGE_GROUPS[2],
        _ => AGE_GROUPS[3],
    }
}

impl Dimension {
    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Sex => "sex",
            Dimension::TumorType => "tumor_type",
            Dimension::IvContrast => "iv_contrast",
            Dimension::AgeGroup => "age_group",
            Dimension::Dataset => "dataset",
        }
    }

    /// The groups a subgroup analysis compares, in report order. `None` for
    /// open-ended dimensions.
    pub fn groups(self) -> Option<Vec<&'static str>> {
        match self {
            Dimension::Sex => Some(vec!["male", "female"]),
            Dimension::TumorType => Some(vec!["renal", "neuroblastoma"]),
            Dimension::IvContrast => Some(vec!["yes", "no"]),
            Dimension::AgeGroup => Some(AGE_GROUPS.to_vec()),
            Dimension::Dataset => None,
        }
    }

    /// Group of one case; `None` when the attribute is unknown.
    pub fn key_of(self, case: &CaseRecord) -> Option<String> {
        match self {
            Dimension::Sex => (case.sex != Sex::Unknown).then(|| case.sex.to_string()),
            Dimension::TumorType => (case.tumor_type != TumorType::Unspecified).then(|| case.tumor_type.to_string()),
            Dimension::IvContrast => (case.iv_contrast != Contrast::Unknown).then(|| case.iv_contrast.to_string()),
            Dimension::AgeGroup => case.age_years.map(|a| age_group(a).to_string()),
            Dimension::Dataset => (!case.dataset.is_empty()).then(|| case.dataset.clone()),
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sex" => Dimension::Sex,
            "tumor_type" | "tumor" => Dimension::TumorType,
            "iv_contrast" | "contrast" => Dimension::IvContrast,
            "age_group" | "age" => Dimension::AgeGroup,
            "dataset" => Dimension::Dataset,
            other => {
                return Err(Error::Input(format!(
                    "unknown dimension `{other}` (sex, tumor_type, iv_contrast, age_group, dataset)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupSpec {
    pub dimension: Dimension,
    pub min_n: usize,
    pub descriptive_only: Vec<Dimension>,
}

impl SubgroupSpec {
    pub fn new(dimension: Dimension) -> SubgroupSpec {
        SubgroupSpec {
            dimension,
            min_n: 3,
            descriptive_only: vec![Dimension::IvContrast],
        }
    }

    pub fn is_descriptive(&self) -> bool {
        self.descriptive_only.contains(&self.dimension)
    }
}

/// Rank-sum tests between every pair of subgroups, per organ, with a
/// Bonferroni family of all pairs of the dimension's groups.
pub fn subgroup_analysis(
    rows: &[MetricRow],
    manifest: &Manifest,
    spec: &SubgroupSpec,
    metric: MetricKind,
) -> Result<ComparisonReport> {
    if spec.dimension == Dimension::Dataset {
        return Err(Error::Input(
            "dataset is a stratification key, not a subgroup dimension".into(),
        ));
    }
    let group_names = spec.dimension.groups().expect("closed dimension");
    let missing: Vec<&str> = rows
        .iter()
        .filter(|r| manifest.case(&r.case_id).is_none())
        .map(|r| r.case_id.as_str())
        .collect::<HashSet<_>>()
        .into_iter()
        .collect();
    if !missing.is_empty() {
        let mut missing = missing;
        missing.sort();
        return Err(Error::Input(format!(
            "metric rows for cases not in the manifest: {}",
            missing.join(", ")
        )));
    }
    let k = group_names.len();
    let family_size = k * (k - 1) / 2;

    let mut per_organ: BTreeMap<&str, BTreeMap<&str, Vec<f64>>> = BTreeMap::new();
    let mut unassigned: BTreeMap<&str, usize> = BTreeMap::new();
    for row in rows {
        let Some(v) = metric.value(row) else { continue };
        let case = manifest.case(&row.case_id).expect("checked");
        let groups = per_organ.entry(row.organ.as_str()).or_default();
        match spec.dimension.key_of(case) {
            Some(g) => {
                let name = group_names.iter().find(|n| **n == g).expect("closed group set");
                groups.entry(name).or_default().push(v);
            }
            None => *unassigned.entry(row.organ.as_str()).or_default() += 1,
        }
    }

    let mut organs = Vec::new();
    for (organ, groups) in &per_organ {
        let values = |name: &str| groups.get(name).map(Vec::as_slice).unwrap_or(&[]);
        let mut entry = OrganComparison {
            organ: organ.to_string(),
            groups: group_names.iter().map(|g| GroupSummary::of(g, values(g))).collect(),
            comparisons: Vec::new(),
            notes: Vec::new(),
        };
        if let Some(n) = unassigned.get(organ) {
            entry
                .notes
                .push(format!("{n} cases with unknown {} left out", spec.dimension));
        }
        if spec.is_descriptive() {
            entry.notes.push("descriptive only: no tests for this dimension".into());
        } else {
            for (i, a) in group_names.iter().enumerate() {
                for b in &group_names[i + 1..] {
                    let (xa, xb) = (values(a), values(b));
                    if xa.len() < spec.min_n || xb.len() < spec.min_n {
                        entry.notes.push(format!(
                            "{a} vs {b} not tested: group sizes {} and {} (minimum {})",
                            xa.len(),
                            xb.len(),
                            spec.min_n
                        ));
                        continue;
                    }
                    let r = wilcoxon_rank_sum(xa, xb)?;
                    let diff = mean_sd(xa).expect("non-empty").0 - mean_sd(xb).expect("non-empty").0;
                    entry.comparisons.push(build_comparison(a, b, r, diff, family_size)?);
                }
            }
        }
        organs.push(entry);
    }

    let mut notes = vec![
        "unpaired Wilcoxon rank-sum between every pair of groups".to_string(),
        format!(
            "Bonferroni family: all {family_size} pairs of {} groups within one organ",
            spec.dimension
        ),
        format!("pairs with a group smaller than {} are not tested", spec.min_n),
        "stars on adjusted p: **** <=0.0001, *** <=0.001, ** <=0.01, * <=0.05, ns otherwise".into(),
    ];
    if spec.dimension == Dimension::AgeGroup {
        notes.push("age groups by integer floor of age_years: 0-2, 3-4, 5-6, >=7".into());
    }
    Ok(ComparisonReport {
        metric,
        dimension: spec.dimension.to_string(),
        organs,
        family_size,
        convention_notes: notes,
    })
}
