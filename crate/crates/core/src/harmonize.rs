//! Label harmonization: merging source structures into schema organs,
//! complementing missing clinical delineations with auxiliary labels,
//! resolving overlaps by priority tier, and filtering cases.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::{CaseRecord, Manifest};
use crate::schema::{OrganSchema, OrganType};
use crate::volume::{Grid, LabelVolume, Mask, Volume};

/// Per-organ binary masks on one shared grid. Organs without an entry, or
/// with an all-background mask, are missing.
#[derive(Debug, Clone, PartialEq)]
pub struct OrganMasks {
    grid: Grid,
    masks: BTreeMap<String, Mask>,
}

impl OrganMasks {
    pub fn new(grid: Grid) -> OrganMasks {
        OrganMasks {
            grid,
            masks: BTreeMap::new(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn insert(&mut self, organ: impl Into<String>, mask: Mask) -> Result<()> {
        self.grid.ensure_same(mask.grid())?;
        self.masks.insert(organ.into(), mask);
        Ok(())
    }

    /// Union `mask` into the organ's existing mask.
    pub fn union(&mut self, organ: &str, mask: &Mask) -> Result<()> {
        self.grid.ensure_same(mask.grid())?;
        match self.masks.get_mut(organ) {
            Some(existing) => {
                for (a, &b) in existing.data_mut().iter_mut().zip(mask.data()) {
                    *a |= b;
                }
            }
            None => {
                self.masks.insert(organ.to_string(), mask.clone());
            }
        }
        Ok(())
    }

    pub fn get(&self, organ: &str) -> Option<&Mask> {
        self.masks.get(organ)
    }

    /// The organ's mask when it has at least one voxel.
    pub fn present(&self, organ: &str) -> Option<&Mask> {
        self.masks.get(organ).filter(|m| !m.is_blank())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Mask)> {
        self.masks.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    /// Split a multi-label volume into one mask per schema organ it contains.
    pub fn from_labels(labels: &LabelVolume, schema: &OrganSchema) -> Result<OrganMasks> {
        let mut out = OrganMasks::new(*labels.grid());
        for code in labels.codes() {
            let organ = schema
                .by_code(code)
                .ok_or_else(|| Error::UnknownStructure(format!("label code {code}")))?;
            out.masks.insert(organ.name.clone(), labels.mask_of(code));
        }
        Ok(out)
    }
}

/// One input to [`merge_labels`].
#[derive(Debug, Clone)]
pub enum StructureSource {
    /// Binary mask (any non-zero voxel) for a named structure.
    Mask { name: String, mask: Mask },
    /// Multi-label volume using the schema's label codes.
    MultiLabel(LabelVolume),
}

impl StructureSource {
    pub fn mask(name: impl Into<String>, mask: Mask) -> Self {
        StructureSource::Mask {
            name: name.into(),
            mask,
        }
    }

    fn grid(&self) -> &Grid {
        match self {
            StructureSource::Mask { mask, .. } => mask.grid(),
            StructureSource::MultiLabel(v) => v.grid(),
        }
    }
}

/// Map source structures onto schema organs. Names covered by a merge rule
/// are unioned into the rule's target; canonical organ names pass through.
pub fn merge_labels(sources: &[StructureSource], schema: &OrganSchema) -> Result<OrganMasks> {
    let first = sources.first().ok_or_else(|| Error::Input("no label sources".into()))?;
    let mut out = OrganMasks::new(*first.grid());
    for source in sources {
        out.grid.ensure_same(source.grid())?;
        match source {
            StructureSource::Mask { name, mask } => {
                let target = if schema.organ(name).is_some() {
                    name.as_str()
                } else {
                    schema
                        .merge_target(name)
                        .ok_or_else(|| Error::UnknownStructure(name.clone()))?
                };
                out.union(target, mask)?;
            }
            StructureSource::MultiLabel(labels) => {
                for (organ, mask) in OrganMasks::from_labels(labels, schema)?.masks {
                    out.union(&organ, &mask)?;
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Clinical,
    Auxiliary,
    Absent,
}

/// Which organs may be filled from auxiliary labels when the clinical
/// delineation is missing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplementPolicy {
    pub type1_list: Vec<String>,
    pub type2_all: bool,
}

impl Default for ComplementPolicy {
    fn default() -> Self {
        ComplementPolicy {
            type1_list: vec!["heart".into(), "pancreas".into(), "stomach_bowel".into()],
            type2_all: true,
        }
    }
}

impl ComplementPolicy {
    fn allows(&self, organ: &str, organ_type: OrganType) -> bool {
        match organ_type {
            OrganType::Type2 => self.type2_all || self.type1_list.iter().any(|o| o == organ),
            OrganType::Type1 => self.type1_list.iter().any(|o| o == organ),
        }
    }
}

/// Fill organs missing from `clinical` with `auxiliary` masks where the
/// policy allows. A non-empty clinical mask is never replaced.
pub fn complement_missing(
    clinical: &OrganMasks,
    auxiliary: Option<&OrganMasks>,
    policy: &ComplementPolicy,
    schema: &OrganSchema,
) -> Result<(OrganMasks, BTreeMap<String, Provenance>)> {
    if let Some(aux) = auxiliary {
        clinical.grid.ensure_same(&aux.grid)?;
    }
    let mut out = OrganMasks::new(clinical.grid);
    let mut provenance = BTreeMap::new();
    for organ in &schema.organs {
        let name = organ.name.as_str();
        let source = if let Some(m) = clinical.present(name) {
            Some((Provenance::Clinical, m))
        } else if policy.allows(name, organ.organ_type) {
            auxiliary
                .and_then(|a| a.present(name))
                .map(|m| (Provenance::Auxiliary, m))
        } else {
            None
        };
        match source {
            Some((p, m)) => {
                out.masks.insert(name.to_string(), m.clone());
                provenance.insert(name.to_string(), p);
            }
            None => {
                provenance.insert(name.to_string(), Provenance::Absent);
            }
        }
    }
    Ok((out, provenance))
}

/// Collapse per-organ masks into one multi-label volume. A voxel claimed by
/// several organs goes to the one in the earliest priority tier, ties within
/// a tier to the earlier organ in schema order.
pub fn resolve_overlaps(masks: &OrganMasks, schema: &OrganSchema) -> Result<LabelVolume> {
    for (name, _) in masks.iter() {
        if schema.organ(name).is_none() {
            return Err(Error::Schema(format!("organ `{name}` not in schema")));
        }
    }
    let mut out = vec![0u16; masks.grid.len()];
    for organ in schema.priority_order() {
        let Some(mask) = masks.get(&organ.name) else { continue };
        for (v, &m) in out.iter_mut().zip(mask.data()) {
            if m && *v == 0 {
                *v = organ.label_code;
            }
        }
    }
    Volume::from_vec(masks.grid, out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterRules {
    /// Inclusive axial slice-count range.
    pub slice_range: (usize, usize),
    /// Most organs allowed to be absent after complementation.
    pub max_missing: usize,
}

impl Default for FilterRules {
    fn default() -> Self {
        FilterRules {
            slice_range: (80, 400),
            max_missing: 4,
        }
    }
}

/// What filtering needs to know about one case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseFacts {
    pub slice_count: usize,
    pub missing_organs: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    SliceCount,
    MissingOrgans,
    Unreadable,
}

/// One line of the exclusion log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionRecord {
    pub case_id: String,
    pub reason: ExclusionReason,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub included: Vec<CaseRecord>,
    pub excluded: Vec<ExclusionRecord>,
}

impl FilterOutcome {
    pub fn exclusion_log(&self) -> String {
        self.excluded
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
            .collect()
    }
}

impl FilterRules {
    /// Why a case with these facts is excluded, if it is. Missing facts
    /// mean the case could not be read.
    pub fn check(&self, facts: Option<&CaseFacts>) -> Option<(ExclusionReason, String)> {
        let (lo, hi) = self.slice_range;
        match facts {
            None => Some((ExclusionReason::Unreadable, "no volume facts available".to_string())),
            Some(f) if f.slice_count < lo || f.slice_count > hi => Some((
                ExclusionReason::SliceCount,
                format!("{} axial slices outside [{lo}, {hi}]", f.slice_count),
            )),
            Some(f) if f.missing_organs.len() > self.max_missing => Some((
                ExclusionReason::MissingOrgans,
                format!(
                    "{} organs missing (max {}): {}",
                    f.missing_organs.len(),
                    self.max_missing,
                    f.missing_organs.join(", ")
                ),
            )),
            Some(_) => None,
        }
    }
}

/// Partition manifest cases into included and excluded. Cases without facts
/// are excluded as unreadable.
pub fn filter_cases(manifest: &Manifest, facts: &HashMap<String, CaseFacts>, rules: &FilterRules) -> FilterOutcome {
    let mut included = Vec::new();
    let mut excluded = Vec::new();
    for case in &manifest.cases {
        match rules.check(facts.get(&case.case_id)) {
            Some((reason, detail)) => excluded.push(ExclusionRecord {
                case_id: case.case_id.clone(),
                reason,
                detail,
            }),
            None => included.push(case.clone()),
        }
    }
    FilterOutcome { included, excluded }
}

/// Harmonized labels of one case with per-organ provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonizedCase {
    pub case_id: String,
    pub labels: LabelVolume,
    pub provenance: BTreeMap<String, Provenance>,
}

impl HarmonizedCase {
    pub fn missing_organs(&self) -> Vec<String> {
        self.provenance
            .iter()
            .filter(|(_, p)| **p == Provenance::Absent)
            .map(|(o, _)| o.clone())
            .collect()
    }
}

/// Merge, complement and resolve one case's clinical and auxiliary sources.
pub fn harmonize_case(
    case_id: &str,
    clinical: &[StructureSource],
    auxiliary: &[StructureSource],
    policy: &ComplementPolicy,
    schema: &OrganSchema,
) -> Result<HarmonizedCase> {
    let aux = if auxiliary.is_empty() {
        None
    } else {
        Some(merge_labels(auxiliary, schema)?)
    };
    let clin = if clinical.is_empty() {
        let grid = aux
            .as_ref()
            .map(|a| a.grid)
            .ok_or_else(|| Error::Input(format!("case {case_id} has no label sources")))?;
        OrganMasks::new(grid)
    } else {
        merge_labels(clinical, schema)?
    };
    let (masks, provenance) = complement_missing(&clin, aux.as_ref(), policy, schema)?;
    let labels = resolve_overlaps(&masks, schema)?;
    Ok(HarmonizedCase {
        case_id: case_id.to_string(),
        labels,
        provenance,
    })
}
