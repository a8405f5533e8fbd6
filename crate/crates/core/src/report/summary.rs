use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{MetricRow, MetricStatus};
use crate::stats::mean_sd;

pub const QUARTILE_RULE: &str = "Tukey hinges: q1/q3 are medians of the lower/upper half, \
the middle value belonging to both halves when n is odd";

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// `(min, q1, median, q3, max)` by Tukey's hinges.
pub fn quartiles(values: &[f64]) -> Option<[f64; 5]> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let half = n.div_ceil(2);
    Some([
        v[0],
        median_sorted(&v[..half]),
        median_sorted(&v),
        median_sorted(&v[n - half..]),
        v[n - 1],
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl MetricStats {
    pub fn of(values: &[f64]) -> Option<MetricStats> {
        let (mean, sd) = mean_sd(values)?;
        let [min, q1, median, q3, max] = quartiles(values)?;
        Some(MetricStats {
            n: values.len(),
            mean,
            sd,
            min,
            q1,
            median,
            q3,
            max,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrganSummary {
    pub organ: String,
    pub n_evaluated: usize,
    pub n_excluded: usize,
    pub n_empty_prediction: usize,
    pub dsc: Option<MetricStats>,
    pub hd95_mm: Option<MetricStats>,
    pub msd_mm: Option<MetricStats>,
}

/// Per-organ statistics, organs sorted by name.
pub fn summarize(rows: &[MetricRow]) -> Vec<OrganSummary> {
    #[derive(Default)]
    struct Acc {
        evaluated: usize,
        excluded: usize,
        empty: usize,
        dsc: Vec<f64>,
        hd95: Vec<f64>,
        msd: Vec<f64>,
    }
    let mut accs: BTreeMap<&str, Acc> = BTreeMap::new();
    for row in rows {
        let acc = accs.entry(row.organ.as_str()).or_default();
        match row.status {
            MetricStatus::ExcludedNoGroundTruth => acc.excluded += 1,
            MetricStatus::EmptyPrediction => {
                acc.empty += 1;
                acc.dsc.push(row.dsc.unwrap_or(0.0));
            }
            MetricStatus::Evaluated | MetricStatus::Masked { .. } => {
                acc.evaluated += 1;
                acc.dsc.extend(row.dsc);
                acc.hd95.extend(row.hd95_mm);
                acc.msd.extend(row.msd_mm);
            }
        }
    }
    // Sorting makes the floating-point sums independent of row order.
    let stats = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        MetricStats::of(v)
    };
    accs.into_iter()
        .map(|(organ, mut acc)| {
            let acc = &mut acc;
            OrganSummary {
                organ: organ.to_string(),
                n_evaluated: acc.evaluated,
                n_excluded: acc.excluded,
                n_empty_prediction: acc.empty,
                dsc: stats(&mut acc.dsc),
                hd95_mm: stats(&mut acc.hd95),
                msd_mm: stats(&mut acc.msd),
            }
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(summaries: &[OrganSummary], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["organ", "n_evaluated", "n_excluded", "n_empty_prediction"];
    let metrics = ["dsc", "hd95_mm", "msd_mm"];
    let fields = ["mean", "sd", "min", "q1", "median", "q3", "max"];
    let names: Vec<String> = metrics
        .iter()
        .flat_map(|m| fields.iter().map(move |f| format!("{m}_{f}")))
        .collect();
    header.extend(names.iter().map(String::as_str));
    let csv_err = |e: csv::Error| Error::Input(format!("writing summary CSV: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for s in summaries {
        let mut rec = vec![
            s.organ.clone(),
            s.n_evaluated.to_string(),
            s.n_excluded.to_string(),
            s.n_empty_prediction.to_string(),
        ];
        for m in [&s.dsc, &s.hd95_mm, &s.msd_mm] {
            match m {
                Some(m) => rec.extend([m.mean, m.sd, m.min, m.q1, m.median, m.q3, m.max].map(|v| v.to_string())),
                None => rec.extend(std::iter::repeat_n(String::new(), fields.len())),
            }
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::Input(format!("writing summary CSV: {e}")))?;
    Ok(())
}
