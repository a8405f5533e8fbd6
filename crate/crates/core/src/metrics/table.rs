use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FprResult, MetricRow, DISTANCE_CONVENTION};
use crate::error::{Error, ErrorClass, Result};

pub const METRIC_CSV_HEADER: &str = "case_id,organ,dsc,hd95_mm,msd_mm,status,gt_voxels,pred_voxels";

/// JSON mirror of a metric CSV plus the evaluation summary blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTable {
    pub convention: String,
    pub rows: Vec<MetricRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fpr: Option<FprResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<CaseError>,
}

/// A case that could not be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseError {
    pub case_id: String,
    pub class: ErrorClass,
    pub message: String,
}

impl CaseError {
    pub fn new(case_id: &str, error: &Error) -> CaseError {
        CaseError {
            case_id: case_id.to_string(),
            class: error.class(),
            message: error.to_string(),
        }
    }
}

impl MetricTable {
    pub fn new(rows: Vec<MetricRow>) -> MetricTable {
        MetricTable {
            convention: DISTANCE_CONVENTION.to_string(),
            rows,
            fpr: None,
            errors: Vec::new(),
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Input(format!("metric CSV: {e}"))
}

pub fn write_metric_csv<W: Write>(rows: &[MetricRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    if rows.is_empty() {
        w.write_record(METRIC_CSV_HEADER.split(',')).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Input(format!("metric CSV: {e}")))
}

pub fn read_metric_csv<R: Read>(input: R) -> Result<Vec<MetricRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header.join(",") != METRIC_CSV_HEADER {
        return Err(Error::Input(format!(
            "unexpected metric CSV header `{}`",
            header.join(",")
        )));
    }
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

pub fn read_metric_csv_file(path: &Path) -> Result<Vec<MetricRow>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_metric_csv(std::io::BufReader::new(file))
}
