//! Wire types of the review service, shared by server and client, and the
//! fixed organ color palette.

use serde::{Deserialize, Serialize};

use crate::report::LikertSummary;
use crate::schema::OrganSchema;

pub const DEFAULT_WINDOW: f64 = 400.0;
pub const DEFAULT_LEVEL: f64 = 40.0;

const PALETTE: [[u8; 3]; 17] = [
    [157, 108, 162],
    [185, 102, 83],
    [230, 158, 140],
    [206, 110, 84],
    [249, 180, 111],
    [221, 130, 101],
    [255, 200, 150],
    [172, 208, 216],
    [120, 170, 200],
    [241, 214, 145],
    [255, 255, 0],
    [216, 101, 79],
    [0, 151, 206],
    [128, 174, 128],
    [90, 160, 90],
    [183, 156, 220],
    [140, 110, 200],
];

/// Display color of the organ at `position` in schema order.
pub fn organ_color(position: usize) -> [u8; 3] {
    if position < PALETTE.len() {
        return PALETTE[position];
    }
    // beyond the fixed table: a deterministic spread around the hue circle
    let h = (position as u32).wrapping_mul(2_654_435_761);
    [(h >> 24) as u8 | 0x40, (h >> 16) as u8 | 0x40, (h >> 8) as u8 | 0x40]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewAxis {
    Axial,
    Coronal,
    Sagittal,
}

impl ViewAxis {
    pub fn parse(s: &str) -> Option<ViewAxis> {
        match s {
            "axial" => Some(ViewAxis::Axial),
            "coronal" => Some(ViewAxis::Coronal),
            "sagittal" => Some(ViewAxis::Sagittal),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ViewAxis::Axial => "axial",
            ViewAxis::Coronal => "coronal",
            ViewAxis::Sagittal => "sagittal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaletteEntry {
    pub organ: String,
    pub label_code: u16,
    pub color: [u8; 3],
}

pub fn palette(schema: &OrganSchema) -> Vec<PaletteEntry> {
    schema
        .organs
        .iter()
        .enumerate()
        .map(|(i, o)| PaletteEntry {
            organ: o.name.clone(),
            label_code: o.label_code,
            color: organ_color(i),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseListing {
    pub case_id: String,
    pub patient_id: String,
    pub dataset: String,
    pub present_organs: usize,
    pub scored_organs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceCounts {
    pub axial: usize,
    pub coronal: usize,
    pub sagittal: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseMeta {
    pub case_id: String,
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub axis_codes: String,
    pub slices: SliceCounts,
    /// Pixel `[width, height]` of a rendered slice, per view.
    pub slice_shape: SliceShapes,
    pub has_image: bool,
    pub has_labels: bool,
    pub window: f64,
    pub level: f64,
    pub palette: Vec<PaletteEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceShapes {
    pub axial: [usize; 2],
    pub coronal: [usize; 2],
    pub sagittal: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrganInfo {
    pub organ: String,
    pub label_code: u16,
    pub present: bool,
    pub voxels: usize,
    pub color: [u8; 3],
    /// Scores already recorded for this organ of this case, all raters.
    pub scores: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikertReport {
    pub summaries: Vec<LikertSummary>,
    pub n_records: usize,
    pub usability_rule: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub error: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<String>,
}

pub const USABILITY_RULE: &str = "pooled mean over all (case, rater) scores: >= 4 acceptable_minor_mods, \
>= 3 clinically_usable, < 3 not_usable; disagreement when per-rater means differ by more than 1.0";
