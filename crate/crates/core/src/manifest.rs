//! Study manifest: the JSON document binding image and label files to case
//! metadata.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Male,
    Female,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TumorType {
    Renal,
    Neuroblastoma,
    Unspecified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Contrast {
    Yes,
    No,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NephrectomySide {
    Left,
    Right,
    None,
    Unknown,
}

macro_rules! lenient_enum {
    ($ty:ident, $fallback:ident, $field:literal, { $($text:literal => $variant:ident),+ $(,)? }) => {
        impl $ty {
            fn parse_lenient(raw: Option<&str>, case_id: &str) -> $ty {
                let Some(raw) = raw else { return $ty::$fallback };
                match raw.trim().to_ascii_lowercase().as_str() {
                    $($text => $ty::$variant,)+
                    other => {
                        tracing::warn!(case_id, field = $field, value = other, "unknown value mapped to {}", stringify!($fallback));
                        $ty::$fallback
                    }
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let s = match self {
                    $($ty::$variant => $text,)+
                };
                f.write_str(s)
            }
        }
    };
}

lenient_enum!(Sex, Unknown, "sex", { "male" => Male, "female" => Female, "unknown" => Unknown });
lenient_enum!(TumorType, Unspecified, "tumor_type", {
    "renal" => Renal, "neuroblastoma" => Neuroblastoma, "unspecified" => Unspecified,
});
lenient_enum!(Contrast, Unknown, "iv_contrast", { "yes" => Yes, "no" => No, "unknown" => Unknown });
lenient_enum!(NephrectomySide, Unknown, "nephrectomy_side", {
    "left" => Left, "right" => Right, "none" => None, "unknown" => Unknown,
});

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub case_id: String,
    pub patient_id: String,
    pub dataset: String,
    /// Age at scan in years; `None` when the manifest omits it.
    pub age_years: Option<f64>,
    pub sex: Sex,
    pub tumor_type: TumorType,
    pub iv_contrast: Contrast,
    pub nephrectomy_side: NephrectomySide,
    pub image_path: PathBuf,
    /// Structure name (or `multilabel`, optionally `aux:`-prefixed) to file.
    pub label_paths: BTreeMap<String, PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_ref: String,
    pub cases: Vec<CaseRecord>,
}

#[derive(Debug, Deserialize)]
struct RawCase {
    case_id: Option<String>,
    patient_id: Option<String>,
    #[serde(default)]
    dataset: Option<String>,
    #[serde(default)]
    age_years: Option<serde_json::Value>,
    #[serde(default)]
    sex: Option<String>,
    #[serde(default)]
    tumor_type: Option<String>,
    #[serde(default)]
    iv_contrast: Option<String>,
    #[serde(default)]
    nephrectomy_side: Option<String>,
    image_path: Option<String>,
    #[serde(default)]
    label_paths: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
struct RawManifest {
    #[serde(default)]
    schema_ref: String,
    cases: Vec<RawCase>,
}

fn non_empty(v: &Option<String>) -> Option<&str> {
    v.as_deref().map(str::trim).filter(|s| !s.is_empty())
}

impl Manifest {
    /// Parse and validate a manifest document. Relative file paths resolve
    /// against `base_dir`.
    pub fn from_json(text: &str, base_dir: Option<&Path>) -> Result<Manifest> {
        let raw: RawManifest = serde_json::from_str(text)?;
        let resolve = |p: &str| -> PathBuf {
            let p = PathBuf::from(p);
            match base_dir {
                Some(base) if p.is_relative() => base.join(p),
                _ => p,
            }
        };

        let mut problems = Vec::new();
        let mut seen = HashSet::new();
        let mut cases = Vec::with_capacity(raw.cases.len());
        for (pos, rc) in raw.cases.iter().enumerate() {
            let label = non_empty(&rc.case_id)
                .map(|id| format!("case `{id}`"))
                .unwrap_or_else(|| format!("case #{pos}"));
            let mut missing = Vec::new();
            let case_id = non_empty(&rc.case_id);
            let patient_id = non_empty(&rc.patient_id);
            let image_path = non_empty(&rc.image_path);
            if case_id.is_none() {
                missing.push("case_id");
            }
            if patient_id.is_none() {
                missing.push("patient_id");
            }
            if image_path.is_none() {
                missing.push("image_path");
            }
            if !missing.is_empty() {
                problems.push(format!("{label}: missing {}", missing.join(", ")));
                continue;
            }
            let case_id = case_id.unwrap();
            if !seen.insert(case_id.to_string()) {
                problems.push(format!("{label}: duplicate case_id"));
                continue;
            }
            let age_years = match &rc.age_years {
                None | Some(serde_json::Value::Null) => None,
                Some(v) => match v.as_f64() {
                    Some(a) if a.is_finite() && a >= 0.0 => Some(a),
                    _ => {
                        problems.push(format!("{label}: age_years must be a finite number >= 0, got {v}"));
                        continue;
                    }
                },
            };
            cases.push(CaseRecord {
                case_id: case_id.to_string(),
                patient_id: patient_id.unwrap().to_string(),
                dataset: rc.dataset.clone().unwrap_or_default(),
                age_years,
                sex: Sex::parse_lenient(rc.sex.as_deref(), case_id),
                tumor_type: TumorType::parse_lenient(rc.tumor_type.as_deref(), case_id),
                iv_contrast: Contrast::parse_lenient(rc.iv_contrast.as_deref(), case_id),
                nephrectomy_side: NephrectomySide::parse_lenient(rc.nephrectomy_side.as_deref(), case_id),
                image_path: resolve(image_path.unwrap()),
                label_paths: rc.label_paths.iter().map(|(k, v)| (k.clone(), resolve(v))).collect(),
            });
        }
        if cases.is_empty() && problems.is_empty() {
            problems.push("manifest has no cases".to_string());
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        Ok(Manifest {
            schema_ref: raw.schema_ref,
            cases,
        })
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn case(&self, case_id: &str) -> Option<&CaseRecord> {
        self.cases.iter().find(|c| c.case_id == case_id)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Load a manifest file; relative paths inside resolve against its directory.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Manifest::from_json(&text, path.parent())
}
