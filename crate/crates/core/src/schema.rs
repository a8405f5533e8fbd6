//! The 17-organ catalog: label codes, organ classes, merge rules and the
//! overlap priority tiers.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Clinician-delineated (`Type1`) or auxiliary-model-labelled (`Type2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrganType {
    Type1,
    Type2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrganDef {
    pub name: String,
    pub label_code: u16,
    pub organ_type: OrganType,
    pub paired_side: Side,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeRule {
    pub sources: Vec<String>,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrganSchema {
    pub organs: Vec<OrganDef>,
    pub merge_rules: Vec<MergeRule>,
    /// Earlier tiers win contested voxels.
    pub priority_tiers: Vec<Vec<String>>,
}

const DEFAULT_ORGANS: [(&str, OrganType, Side); 17] = [
    ("spleen", OrganType::Type1, Side::None),
    ("kidney_left", OrganType::Type1, Side::Left),
    ("kidney_right", OrganType::Type1, Side::Right),
    ("heart", OrganType::Type1, Side::None),
    ("pancreas", OrganType::Type1, Side::None),
    ("liver", OrganType::Type1, Side::None),
    ("stomach_bowel", OrganType::Type1, Side::None),
    ("lung_left", OrganType::Type1, Side::Left),
    ("lung_right", OrganType::Type1, Side::Right),
    ("vertebrae", OrganType::Type2, Side::None),
    ("spinal_canal", OrganType::Type2, Side::None),
    ("aorta_abdominal", OrganType::Type2, Side::None),
    ("inferior_vena_cava", OrganType::Type2, Side::None),
    ("autochthon_left", OrganType::Type2, Side::Left),
    ("autochthon_right", OrganType::Type2, Side::Right),
    ("iliopsoas_left", OrganType::Type2, Side::Left),
    ("iliopsoas_right", OrganType::Type2, Side::Right),
];

impl Default for OrganSchema {
    fn default() -> Self {
        let organs = DEFAULT_ORGANS
            .iter()
            .enumerate()
            .map(|(i, &(name, organ_type, paired_side))| OrganDef {
                name: name.to_string(),
                label_code: i as u16 + 1,
                organ_type,
                paired_side,
            })
            .collect::<Vec<_>>();
        let tier = |names: &[&str]| names.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let mut priority_tiers = vec![
            tier(&["spleen", "kidney_left", "kidney_right", "heart"]),
            tier(&["pancreas", "liver"]),
            tier(&["stomach_bowel"]),
            tier(&["lung_left", "lung_right"]),
        ];
        priority_tiers.extend(
            organs
                .iter()
                .filter(|o| o.organ_type == OrganType::Type2)
                .map(|o| vec![o.name.clone()]),
        );
        OrganSchema {
            organs,
            merge_rules: vec![
                MergeRule {
                    sources: tier(&["stomach", "small_intestine", "large_intestine"]),
                    target: "stomach_bowel".into(),
                },
                MergeRule {
                    sources: tier(&["stomach_intestine_bowel"]),
                    target: "stomach_bowel".into(),
                },
            ],
            priority_tiers,
        }
    }
}

impl OrganSchema {
    pub fn from_json(text: &str) -> Result<OrganSchema> {
        let schema: OrganSchema = serde_json::from_str(text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<OrganSchema> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Resolve a manifest `schema_ref`: empty or `default` selects the
    /// embedded schema, anything else is a path relative to `base`.
    pub fn resolve(schema_ref: &str, base: Option<&Path>) -> Result<OrganSchema> {
        match schema_ref.trim() {
            "" | "default" => Ok(OrganSchema::default()),
            p => {
                let path = Path::new(p);
                match base {
                    Some(b) if path.is_relative() => Self::load(b.join(path)),
                    _ => Self::load(path),
                }
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let mut names = HashSet::new();
        let mut codes = HashSet::new();
        for o in &self.organs {
            if o.name.is_empty()
                || o.name != o.name.to_lowercase()
                || o.name.contains(|c: char| c.is_whitespace() || c == '-')
            {
                problems.push(format!("organ name `{}` is not canonical snake_case", o.name));
            }
            if !names.insert(o.name.as_str()) {
                problems.push(format!("duplicate organ `{}`", o.name));
            }
            if o.label_code == 0 || !codes.insert(o.label_code) {
                problems.push(format!(
                    "label code {} of `{}` is zero or duplicated",
                    o.label_code, o.name
                ));
            }
        }
        let mut tier_of = HashMap::new();
        for (t, tier) in self.priority_tiers.iter().enumerate() {
            for name in tier {
                if !names.contains(name.as_str()) {
                    problems.push(format!("priority tier {t} names unknown organ `{name}`"));
                } else if tier_of.insert(name.as_str(), t).is_some() {
                    problems.push(format!("organ `{name}` appears in more than one tier"));
                }
            }
        }
        for o in &self.organs {
            if !tier_of.contains_key(o.name.as_str()) {
                problems.push(format!("organ `{}` is in no priority tier", o.name));
            }
        }
        let last_type1 = self
            .organs
            .iter()
            .filter(|o| o.organ_type == OrganType::Type1)
            .filter_map(|o| tier_of.get(o.name.as_str()))
            .max();
        let first_type2 = self
            .organs
            .iter()
            .filter(|o| o.organ_type == OrganType::Type2)
            .filter_map(|o| tier_of.get(o.name.as_str()))
            .min();
        if let (Some(a), Some(b)) = (last_type1, first_type2) {
            if a >= b {
                problems.push("every type1 tier must precede every type2 tier".to_string());
            }
        }
        for rule in &self.merge_rules {
            if !names.contains(rule.target.as_str()) {
                problems.push(format!("merge rule targets unknown organ `{}`", rule.target));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Schema(problems.join("; ")))
        }
    }

    pub fn organ(&self, name: &str) -> Option<&OrganDef> {
        self.organs.iter().find(|o| o.name == name)
    }

    pub fn by_code(&self, code: u16) -> Option<&OrganDef> {
        self.organs.iter().find(|o| o.label_code == code)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.organs.iter().map(|o| o.name.as_str())
    }

    /// Tier index of an organ.
    pub fn tier_of(&self, name: &str) -> Option<usize> {
        self.priority_tiers.iter().position(|t| t.iter().any(|n| n == name))
    }

    /// Position of an organ in the schema list (within-tier tie-breaker).
    pub fn position(&self, name: &str) -> Option<usize> {
        self.organs.iter().position(|o| o.name == name)
    }

    /// Merge target for a source structure name, if any rule covers it.
    pub fn merge_target(&self, source: &str) -> Option<&str> {
        self.merge_rules
            .iter()
            .find(|r| r.sources.iter().any(|s| s == source))
            .map(|r| r.target.as_str())
    }

    /// Organs in resolution order: by tier, then schema position.
    pub fn priority_order(&self) -> Vec<&OrganDef> {
        let mut organs: Vec<&OrganDef> = self.organs.iter().collect();
        organs.sort_by_key(|o| (self.tier_of(&o.name).unwrap_or(usize::MAX), self.position(&o.name)));
        organs
    }
}
