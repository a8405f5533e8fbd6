use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::correction::{bonferroni, Stars};
use super::wilcoxon::{wilcoxon_rank_sum, wilcoxon_signed_rank, PairedSample, TestMethod};
use crate::error::{Error, Result};
use crate::metrics::{MetricRow, MetricStatus};

/// Which column of a metric table a comparison is run on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Dsc,
    Hd95,
    Msd,
}

impl MetricKind {
    /// DSC of an empty prediction (0) counts; distances only exist for
    /// evaluated rows.
    pub fn value(self, row: &MetricRow) -> Option<f64> {
        match self {
            MetricKind::Dsc => match row.status {
                MetricStatus::ExcludedNoGroundTruth => None,
                _ => row.dsc,
            },
            MetricKind::Hd95 if row.status.is_evaluated() => row.hd95_mm,
            MetricKind::Msd if row.status.is_evaluated() => row.msd_mm,
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Dsc => "dsc",
            MetricKind::Hd95 => "hd95",
            MetricKind::Msd => "msd",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dsc" => Ok(MetricKind::Dsc),
            "hd95" | "hd95_mm" => Ok(MetricKind::Hd95),
            "msd" | "msd_mm" => Ok(MetricKind::Msd),
            other => Err(Error::Input(format!("unknown metric `{other}` (dsc, hd95, msd)"))),
        }
    }
}

/// Mean and sample standard deviation (n - 1; 0 for a single value).
pub fn mean_sd(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Some((mean, (ss / (n - 1.0)).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub name: String,
    pub n: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
}

impl GroupSummary {
    pub fn of(name: &str, values: &[f64]) -> GroupSummary {
        let ms = mean_sd(values);
        GroupSummary {
            name: name.to_string(),
            n: values.len(),
            mean: ms.map(|m| m.0),
            sd: ms.map(|m| m.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub group_a: String,
    pub group_b: String,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub stars: Stars,
    pub method: TestMethod,
    pub statistic: f64,
    pub n_effective: usize,
    /// Mean of `group_a` minus mean of `group_b` (mean paired difference
    /// for paired tests).
    pub mean_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrganComparison {
    pub organ: String,
    pub groups: Vec<GroupSummary>,
    pub comparisons: Vec<Comparison>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub metric: MetricKind,
    pub dimension: String,
    pub organs: Vec<OrganComparison>,
    pub family_size: usize,
    pub convention_notes: Vec<String>,
}

impl ComparisonReport {
    pub fn organ(&self, name: &str) -> Option<&OrganComparison> {
        self.organs.iter().find(|o| o.organ == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub(crate) fn build_comparison(
    group_a: &str,
    group_b: &str,
    result: super::TestResult,
    mean_difference: f64,
    family_size: usize,
) -> Result<Comparison> {
    let p_adjusted = bonferroni(&[result.p_value], Some(family_size))?[0];
    Ok(Comparison {
        group_a: group_a.to_string(),
        group_b: group_b.to_string(),
        p_raw: result.p_value,
        p_adjusted,
        stars: Stars::for_p(p_adjusted),
        method: result.method,
        statistic: result.statistic,
        n_effective: result.n_effective,
        mean_difference,
    })
}

fn by_organ(rows: &[MetricRow], metric: MetricKind) -> BTreeMap<&str, BTreeMap<&str, f64>> {
    let mut out: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
    for row in rows {
        if let Some(v) = metric.value(row) {
            out.entry(row.organ.as_str())
                .or_default()
                .insert(row.case_id.as_str(), v);
        }
    }
    out
}

/// Compare two models' metric tables organ by organ: signed-rank on cases
/// present in both tables when `paired`, otherwise rank-sum on all values.
/// Each organ is its own single-comparison family.
pub fn compare_tables(
    (name_a, a): (&str, &[MetricRow]),
    (name_b, b): (&str, &[MetricRow]),
    metric: MetricKind,
    paired: bool,
) -> Result<ComparisonReport> {
    if name_a == name_b {
        return Err(Error::Input(format!("both tables are named `{name_a}`")));
    }
    let ma = by_organ(a, metric);
    let mb = by_organ(b, metric);
    let mut organs: Vec<&str> = ma.keys().chain(mb.keys()).copied().collect();
    organs.sort();
    organs.dedup();
    let empty = BTreeMap::new();
    let mut out = Vec::new();
    for organ in organs {
        let va = ma.get(organ).unwrap_or(&empty);
        let vb = mb.get(organ).unwrap_or(&empty);
        let mut entry = OrganComparison {
            organ: organ.to_string(),
            groups: Vec::new(),
            comparisons: Vec::new(),
            notes: Vec::new(),
        };
        let result = if paired {
            let shared: Vec<&str> = va.keys().filter(|c| vb.contains_key(*c)).copied().collect();
            let xs: Vec<f64> = shared.iter().map(|c| va[c]).collect();
            let ys: Vec<f64> = shared.iter().map(|c| vb[c]).collect();
            entry.groups.push(GroupSummary::of(name_a, &xs));
            entry.groups.push(GroupSummary::of(name_b, &ys));
            let unpaired = va.len() + vb.len() - 2 * shared.len();
            if unpaired > 0 {
                entry
                    .notes
                    .push(format!("{unpaired} values without a partner case were left out"));
            }
            if shared.is_empty() {
                entry.notes.push("no cases shared by both tables".into());
                None
            } else {
                let labels = shared.iter().map(|c| c.to_string()).collect();
                Some(wilcoxon_signed_rank(&PairedSample::labelled(labels, xs, ys)?)?)
            }
        } else {
            let xs: Vec<f64> = va.values().copied().collect();
            let ys: Vec<f64> = vb.values().copied().collect();
            entry.groups.push(GroupSummary::of(name_a, &xs));
            entry.groups.push(GroupSummary::of(name_b, &ys));
            if xs.is_empty() || ys.is_empty() {
                entry.notes.push("one table has no values for this organ".into());
                None
            } else {
                Some(wilcoxon_rank_sum(&xs, &ys)?)
            }
        };
        if let Some(r) = result {
            let diff = entry.groups[0].mean.unwrap_or(0.0) - entry.groups[1].mean.unwrap_or(0.0);
            entry.comparisons.push(build_comparison(name_a, name_b, r, diff, 1)?);
        }
        out.push(entry);
    }
    let test = if paired {
        "paired Wilcoxon signed-rank on cases present in both tables; zero differences discarded"
    } else {
        "unpaired Wilcoxon rank-sum"
    };
    Ok(ComparisonReport {
        metric,
        dimension: "model".into(),
        organs: out,
        family_size: 1,
        convention_notes: vec![
            test.into(),
            format!(
                "exact null distribution up to {} non-zero differences (signed-rank) or {} pooled values (rank-sum), \
                 normal approximation with tie correction and continuity correction beyond",
                super::SIGNED_RANK_EXACT_MAX,
                super::RANK_SUM_EXACT_MAX
            ),
            "stars: **** p<=0.0001, *** p<=0.001, ** p<=0.01, * p<=0.05, ns otherwise".into(),
            "dsc includes empty predictions as 0; distances use evaluated rows only".into(),
        ],
    })
}
