use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{dsc, hd95, msd, surface_distances};
use crate::error::{Error, Result};
use crate::schema::OrganSchema;
use crate::volume::{LabelVolume, Mask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricStatus {
    Evaluated,
    ExcludedNoGroundTruth,
    EmptyPrediction,
    /// Evaluated on the inclusive axial slice range where ground truth exists.
    Masked {
        first: usize,
        last: usize,
    },
}

impl MetricStatus {
    pub fn is_evaluated(self) -> bool {
        matches!(self, MetricStatus::Evaluated | MetricStatus::Masked { .. })
    }
}

impl fmt::Display for MetricStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricStatus::Evaluated => f.write_str("evaluated"),
            MetricStatus::ExcludedNoGroundTruth => f.write_str("excluded_no_ground_truth"),
            MetricStatus::EmptyPrediction => f.write_str("empty_prediction"),
            MetricStatus::Masked { first, last } => write!(f, "masked({first}-{last})"),
        }
    }
}

impl FromStr for MetricStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "evaluated" => Ok(MetricStatus::Evaluated),
            "excluded_no_ground_truth" => Ok(MetricStatus::ExcludedNoGroundTruth),
            "empty_prediction" => Ok(MetricStatus::EmptyPrediction),
            other => {
                let slab = other
                    .strip_prefix("masked(")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|r| r.split_once('-'))
                    .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)));
                match slab {
                    Some((first, last)) => Ok(MetricStatus::Masked { first, last }),
                    None => Err(Error::Input(format!("unknown metric status `{other}`"))),
                }
            }
        }
    }
}

impl Serialize for MetricStatus {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MetricStatus {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Per-case, per-organ evaluation result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub case_id: String,
    pub organ: String,
    pub dsc: Option<f64>,
    pub hd95_mm: Option<f64>,
    pub msd_mm: Option<f64>,
    pub status: MetricStatus,
    pub gt_voxels: usize,
    pub pred_voxels: usize,
}

/// Organs evaluated only on the axial slab covered by their ground truth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskPolicy {
    pub organs: Vec<String>,
}

impl Default for MaskPolicy {
    fn default() -> Self {
        MaskPolicy {
            organs: vec!["stomach_bowel".into()],
        }
    }
}

impl MaskPolicy {
    pub fn none() -> Self {
        MaskPolicy { organs: Vec::new() }
    }

    pub fn applies(&self, organ: &str) -> bool {
        self.organs.iter().any(|o| o == organ)
    }
}

fn evaluate_masks(case_id: &str, organ: &str, gt: &Mask, pred: &Mask, masked: bool) -> Result<MetricRow> {
    let mut row = MetricRow {
        case_id: case_id.to_string(),
        organ: organ.to_string(),
        dsc: None,
        hd95_mm: None,
        msd_mm: None,
        status: MetricStatus::Evaluated,
        gt_voxels: gt.count(),
        pred_voxels: pred.count(),
    };
    if row.gt_voxels == 0 {
        row.status = MetricStatus::ExcludedNoGroundTruth;
        return Ok(row);
    }
    let (gt, pred, status) = if masked {
        let axis = gt.grid().axis_codes.axial_axis();
        let (first, last) = gt.extent_along(axis).expect("non-empty");
        let g = gt.crop_axis(axis, first, last + 1);
        let p = pred.crop_axis(axis, first, last + 1);
        (g, p, MetricStatus::Masked { first, last })
    } else {
        (gt.clone(), pred.clone(), MetricStatus::Evaluated)
    };
    row.pred_voxels = pred.count();
    row.gt_voxels = gt.count();
    if row.pred_voxels == 0 {
        row.dsc = Some(0.0);
        row.status = MetricStatus::EmptyPrediction;
        return Ok(row);
    }
    row.dsc = Some(dsc(&gt, &pred)?);
    let distances = surface_distances(&gt, &pred)?;
    row.hd95_mm = Some(hd95(&distances)?);
    row.msd_mm = Some(msd(&distances)?);
    row.status = status;
    Ok(row)
}

/// Evaluate every schema organ of one case. Ground truth and prediction must
/// share a grid.
pub fn evaluate_case(
    case_id: &str,
    gt: &LabelVolume,
    pred: &LabelVolume,
    schema: &OrganSchema,
    policy: &MaskPolicy,
) -> Result<Vec<MetricRow>> {
    gt.grid().ensure_same(pred.grid())?;
    schema
        .organs
        .par_iter()
        .map(|organ| {
            let g = gt.mask_of(organ.label_code);
            let p = pred.mask_of(organ.label_code);
            evaluate_masks(case_id, &organ.name, &g, &p, policy.applies(&organ.name))
        })
        .collect()
}
