//! File-level drivers: harmonize a manifest into label volumes, evaluate a
//! prediction directory against references, post-process predictions.
//!
//! Label files are looked up as `<dir>/<case_id>.nii.gz`, then `.nii`.
//! Manifest `label_paths` keys: an organ or source-structure name for a
//! binary mask, `multilabel` for a volume in schema codes; the same keys
//! with an `aux:` prefix name auxiliary (automatic) labels.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::components::{keep_largest_per_label, Connectivity};
use crate::error::{Error, Result};
use crate::harmonize::{
    harmonize_case, CaseFacts, ComplementPolicy, ExclusionReason, ExclusionRecord, FilterRules, Provenance,
    StructureSource,
};
use crate::manifest::{CaseRecord, Manifest, NephrectomySide};
use crate::metrics::{evaluate_case, fpr_absent_organ, CaseError, FprCase, MaskPolicy, MetricRow, MetricTable};
use crate::nifti::{read_header, read_labels, write_labels};
use crate::resample::resample_labels_nearest;
use crate::schema::OrganSchema;
use crate::volume::LabelVolume;

pub const AUX_PREFIX: &str = "aux:";
pub const MULTILABEL_KEY: &str = "multilabel";

/// `<dir>/<case_id>.nii.gz` or `<dir>/<case_id>.nii`, whichever exists.
pub fn label_file(dir: &Path, case_id: &str) -> Option<PathBuf> {
    [".nii.gz", ".nii"]
        .iter()
        .map(|ext| dir.join(format!("{case_id}{ext}")))
        .find(|p| p.is_file())
}

/// Case ids of the NIfTI files in `dir`, sorted.
pub fn case_ids_in(dir: &Path) -> Result<Vec<String>> {
    let mut ids = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let name = entry.map_err(|e| Error::io(dir, e))?.file_name();
        let name = name.to_string_lossy();
        if let Some(id) = name.strip_suffix(".nii.gz").or_else(|| name.strip_suffix(".nii")) {
            ids.push(id.to_string());
        }
    }
    ids.sort();
    ids.dedup();
    Ok(ids)
}

fn load_source(key: &str, path: &Path) -> Result<StructureSource> {
    let labels = read_labels(path)?;
    Ok(if key == MULTILABEL_KEY {
        StructureSource::MultiLabel(labels)
    } else {
        StructureSource::mask(key, labels.map(|&v| v != 0))
    })
}

/// Clinical and auxiliary label sources named in a manifest entry.
pub fn load_sources(case: &CaseRecord) -> Result<(Vec<StructureSource>, Vec<StructureSource>)> {
    let mut clinical = Vec::new();
    let mut auxiliary = Vec::new();
    for (key, path) in &case.label_paths {
        match key.strip_prefix(AUX_PREFIX) {
            Some(k) => auxiliary.push(load_source(k, path)?),
            None => clinical.push(load_source(key, path)?),
        }
    }
    Ok((clinical, auxiliary))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HarmonizeOptions {
    pub policy: ComplementPolicy,
    pub rules: FilterRules,
    /// Abort on the first unreadable case instead of excluding it.
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceSidecar {
    pub case_id: String,
    pub provenance: BTreeMap<String, Provenance>,
    pub missing_organs: Vec<String>,
    pub slice_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HarmonizeSummary {
    pub included: Vec<String>,
    pub excluded: Vec<ExclusionRecord>,
    pub errors: Vec<CaseError>,
}

fn harmonize_one(
    case: &CaseRecord,
    schema: &OrganSchema,
    opts: &HarmonizeOptions,
    out_dir: &Path,
) -> Result<Option<ExclusionRecord>> {
    let (clinical, auxiliary) = load_sources(case)?;
    let harmonized = harmonize_case(&case.case_id, &clinical, &auxiliary, &opts.policy, schema)?;
    let grid = *harmonized.labels.grid();
    // The image header decides the slice count; labels stand in when the
    // image is not on disk.
    let slice_grid = if case.image_path.is_file() {
        read_header(&case.image_path)?.grid()?
    } else {
        tracing::warn!(case = %case.case_id, "image {} not found; using label geometry", case.image_path.display());
        grid
    };
    let facts = CaseFacts {
        slice_count: slice_grid.dims[slice_grid.axis_codes.axial_axis()],
        missing_organs: harmonized.missing_organs(),
    };
    if let Some((reason, detail)) = opts.rules.check(Some(&facts)) {
        return Ok(Some(ExclusionRecord {
            case_id: case.case_id.clone(),
            reason,
            detail,
        }));
    }
    write_labels(&harmonized.labels, out_dir.join(format!("{}.nii.gz", case.case_id)))?;
    let sidecar = ProvenanceSidecar {
        case_id: case.case_id.clone(),
        missing_organs: facts.missing_organs,
        provenance: harmonized.provenance,
        slice_count: facts.slice_count,
    };
    let path = out_dir.join(format!("{}.provenance.json", case.case_id));
    fs::write(&path, serde_json::to_string_pretty(&sidecar)? + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(None)
}

/// Harmonize every manifest case into `out_dir`: `<case>.nii.gz`,
/// `<case>.provenance.json`, plus `exclusions.jsonl` for the whole run.
pub fn harmonize_manifest(
    manifest: &Manifest,
    schema: &OrganSchema,
    opts: &HarmonizeOptions,
    out_dir: &Path,
) -> Result<HarmonizeSummary> {
    if manifest.is_empty() {
        return Err(Error::Validation(vec!["manifest has no cases".into()]));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let outcomes: Vec<Result<Option<ExclusionRecord>>> = manifest
        .cases
        .par_iter()
        .map(|case| harmonize_one(case, schema, opts, out_dir))
        .collect();
    let mut summary = HarmonizeSummary::default();
    for (case, outcome) in manifest.cases.iter().zip(outcomes) {
        match outcome {
            Ok(None) => summary.included.push(case.case_id.clone()),
            Ok(Some(record)) => summary.excluded.push(record),
            Err(e) if opts.strict => return Err(e),
            Err(e) => {
                tracing::warn!(case = %case.case_id, "skipped: {e}");
                summary.errors.push(CaseError::new(&case.case_id, &e));
                summary.excluded.push(ExclusionRecord {
                    case_id: case.case_id.clone(),
                    reason: ExclusionReason::Unreadable,
                    detail: e.to_string(),
                });
            }
        }
    }
    let log: String = summary
        .excluded
        .iter()
        .map(|r| serde_json::to_string(r).map(|s| s + "\n"))
        .collect::<std::result::Result<_, _>>()?;
    let path = out_dir.join("exclusions.jsonl");
    fs::write(&path, log).map_err(|e| Error::io(&path, e))?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateOptions {
    pub mask_policy: MaskPolicy,
    /// Resample predictions onto the reference grid when they differ.
    pub resample: bool,
    /// A removed kidney counts as predicted above this volume.
    pub fpr_threshold_mm3: f64,
}

impl Default for EvaluateOptions {
    fn default() -> Self {
        EvaluateOptions {
            mask_policy: MaskPolicy::default(),
            resample: false,
            fpr_threshold_mm3: 0.0,
        }
    }
}

fn read_case_labels(dir: &Path, case_id: &str) -> Result<LabelVolume> {
    let path = label_file(dir, case_id).ok_or_else(|| {
        Error::io(
            dir.join(format!("{case_id}.nii.gz")),
            std::io::Error::new(std::io::ErrorKind::NotFound, "no label file for case"),
        )
    })?;
    read_labels(path)
}

fn removed_kidney_volume(pred: &LabelVolume, side: NephrectomySide, schema: &OrganSchema) -> Option<f64> {
    let organ = match side {
        NephrectomySide::Left => "kidney_left",
        NephrectomySide::Right => "kidney_right",
        _ => return None,
    };
    let code = schema.organ(organ)?.label_code;
    Some(pred.mask_of(code).count() as f64 * pred.grid().voxel_volume())
}

fn evaluate_one(
    case_id: &str,
    record: Option<&CaseRecord>,
    pred_dir: &Path,
    ref_dir: &Path,
    schema: &OrganSchema,
    opts: &EvaluateOptions,
) -> Result<(Vec<MetricRow>, Option<FprCase>)> {
    let reference = read_case_labels(ref_dir, case_id)?;
    let mut pred = read_case_labels(pred_dir, case_id)?;
    if !pred.grid().same_lattice(reference.grid()) && opts.resample {
        pred = resample_labels_nearest(&pred, reference.grid())?;
    }
    let rows = evaluate_case(case_id, &reference, &pred, schema, &opts.mask_policy)?;
    let fpr = record.and_then(|r| {
        removed_kidney_volume(&pred, r.nephrectomy_side, schema).map(|v| FprCase {
            case_id: case_id.to_string(),
            nephrectomy_side: r.nephrectomy_side,
            predicted_volume_mm3: v,
        })
    });
    Ok((rows, fpr))
}

/// Evaluate `case_ids` in parallel. Per-case failures become error entries;
/// the FPR block appears when the manifest names nephrectomy sides for
/// evaluated cases.
pub fn evaluate_dirs(
    case_ids: &[String],
    manifest: Option<&Manifest>,
    pred_dir: &Path,
    ref_dir: &Path,
    schema: &OrganSchema,
    opts: &EvaluateOptions,
) -> Result<MetricTable> {
    let outcomes: Vec<_> = case_ids
        .par_iter()
        .map(|id| evaluate_one(id, manifest.and_then(|m| m.case(id)), pred_dir, ref_dir, schema, opts))
        .collect();
    let mut table = MetricTable::new(Vec::new());
    let mut fpr_cases = Vec::new();
    for (id, outcome) in case_ids.iter().zip(outcomes) {
        match outcome {
            Ok((rows, fpr)) => {
                table.rows.extend(rows);
                fpr_cases.extend(fpr);
            }
            Err(e) => {
                tracing::warn!(case = %id, "not evaluated: {e}");
                table.errors.push(CaseError::new(id, &e));
            }
        }
    }
    if !fpr_cases.is_empty() {
        table.fpr = Some(fpr_absent_organ(&fpr_cases, opts.fpr_threshold_mm3)?);
    }
    Ok(table)
}

/// Keep the largest connected component of every label, writing
/// `<out_dir>/<case_id>.nii.gz`.
pub fn postprocess_dir(
    case_ids: &[String],
    pred_dir: &Path,
    out_dir: &Path,
    connectivity: Connectivity,
) -> Result<Vec<CaseError>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let errors = case_ids
        .par_iter()
        .filter_map(|id| {
            let run = || -> Result<()> {
                let labels = read_case_labels(pred_dir, id)?;
                let cleaned = keep_largest_per_label(&labels, connectivity);
                write_labels(&cleaned, out_dir.join(format!("{id}.nii.gz")))
            };
            run().err().map(|e| CaseError::new(id, &e))
        })
        .collect();
    Ok(errors)
}
