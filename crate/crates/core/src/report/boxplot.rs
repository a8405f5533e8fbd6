use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::summary::{quartiles, QUARTILE_RULE};
use crate::error::{Error, Result};
use crate::manifest::Manifest;
use crate::metrics::MetricRow;
use crate::stats::MetricKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKey {
    Model,
    Dataset,
    Organ,
}

impl GroupKey {
    pub fn as_str(self) -> &'static str {
        match self {
            GroupKey::Model => "model",
            GroupKey::Dataset => "dataset",
            GroupKey::Organ => "organ",
        }
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GroupKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "model" => Ok(GroupKey::Model),
            "dataset" => Ok(GroupKey::Dataset),
            "organ" => Ok(GroupKey::Organ),
            other => Err(Error::Input(format!(
                "unknown grouping key `{other}` (model, dataset, organ)"
            ))),
        }
    }
}

/// A metric table together with the name of the model that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledTable {
    pub model: String,
    pub rows: Vec<MetricRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxGroup {
    pub keys: BTreeMap<String, String>,
    pub n: usize,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub outliers: Vec<f64>,
}

impl BoxGroup {
    fn of(keys: BTreeMap<String, String>, values: &[f64]) -> Option<BoxGroup> {
        let [_, q1, median, q3, _] = quartiles(values)?;
        let iqr = q3 - q1;
        let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
        let inside = values.iter().copied().filter(|v| *v >= lo_fence && *v <= hi_fence);
        let whisker_lo = inside.clone().fold(f64::INFINITY, f64::min);
        let whisker_hi = inside.fold(f64::NEG_INFINITY, f64::max);
        let mut outliers: Vec<f64> = values
            .iter()
            .copied()
            .filter(|v| *v < lo_fence || *v > hi_fence)
            .collect();
        outliers.sort_by(f64::total_cmp);
        Some(BoxGroup {
            keys,
            n: values.len(),
            q1,
            median,
            q3,
            whisker_lo,
            whisker_hi,
            outliers,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotDoc {
    pub metric: MetricKind,
    pub group_by: Vec<GroupKey>,
    pub quartile_rule: String,
    pub whisker_rule: String,
    pub groups: Vec<BoxGroup>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Box-plot statistics per group. Dataset keys come from the manifest;
/// groups are ordered by their key values.
pub fn boxplot_export(
    tables: &[LabelledTable],
    manifest: Option<&Manifest>,
    group_by: &[GroupKey],
    metric: MetricKind,
) -> Result<BoxplotDoc> {
    if group_by.contains(&GroupKey::Dataset) && manifest.is_none() {
        return Err(Error::Input("grouping by dataset needs a manifest".into()));
    }
    let mut groups: BTreeMap<Vec<String>, Vec<f64>> = BTreeMap::new();
    let mut notes = Vec::new();
    for table in tables {
        for row in &table.rows {
            let key: Vec<String> = group_by
                .iter()
                .map(|k| match k {
                    GroupKey::Model => table.model.clone(),
                    GroupKey::Organ => row.organ.clone(),
                    GroupKey::Dataset => manifest
                        .and_then(|m| m.case(&row.case_id))
                        .map(|c| c.dataset.clone())
                        .filter(|d| !d.is_empty())
                        .unwrap_or_else(|| "unknown".into()),
                })
                .collect();
            let values = groups.entry(key).or_default();
            values.extend(metric.value(row));
        }
    }
    let mut out = Vec::new();
    for (key, values) in groups {
        let keys: BTreeMap<String, String> = group_by
            .iter()
            .map(|k| k.to_string())
            .zip(key.iter().cloned())
            .collect();
        match BoxGroup::of(keys, &values) {
            Some(g) => out.push(g),
            None => notes.push(format!("group {} has no {metric} values; omitted", key.join("/"))),
        }
    }
    Ok(BoxplotDoc {
        metric,
        group_by: group_by.to_vec(),
        quartile_rule: QUARTILE_RULE.into(),
        whisker_rule: "whiskers reach the most extreme values within 1.5 IQR of the box; \
                       values beyond are outliers"
            .into(),
        groups: out,
        notes,
    })
}
