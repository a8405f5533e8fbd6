use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::rng::SplitRng;
use super::subgroup::Dimension;
use crate::error::{Error, Result};
use crate::manifest::{CaseRecord, Manifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bucket {
    Train,
    Val,
    Test,
}

impl Bucket {
    pub const ALL: [Bucket; 3] = [Bucket::Train, Bucket::Val, Bucket::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Bucket::Train => "train",
            Bucket::Val => "val",
            Bucket::Test => "test",
        }
    }
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Bucket {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Bucket::Train),
            "val" => Ok(Bucket::Val),
            "test" => Ok(Bucket::Test),
            other => Err(Error::Input(format!("unknown bucket `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    pub ratio: [u64; 3],
    pub stratify: Vec<Dimension>,
    pub assignments: BTreeMap<String, Bucket>,
}

impl SplitPlan {
    pub fn count(&self, bucket: Bucket) -> usize {
        self.assignments.values().filter(|b| **b == bucket).count()
    }

    pub fn cases_in(&self, bucket: Bucket) -> Vec<&str> {
        self.assignments
            .iter()
            .filter(|(_, b)| **b == bucket)
            .map(|(c, _)| c.as_str())
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Parse `"132:21:36"`.
pub fn parse_ratio(text: &str) -> Result<[u64; 3]> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::Input(format!("ratio `{text}` is not three positive integers like 64:16:20"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut out = [0u64; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.trim().parse().map_err(|_| bad())?;
        if *o == 0 {
            return Err(bad());
        }
    }
    Ok(out)
}

/// Split `total` proportionally to `weights`: floors first, then the
/// leftover units go to the largest fractional remainders (earlier entry
/// wins ties).
pub fn largest_remainder(total: u64, weights: &[u64]) -> Vec<u64> {
    let sum: u64 = weights.iter().sum();
    assert!(sum > 0);
    let total = total as u128;
    let sum = sum as u128;
    let mut out: Vec<u64> = weights.iter().map(|&w| (total * w as u128 / sum) as u64).collect();
    let mut rems: Vec<(u128, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| (total * w as u128 % sum, i))
        .collect();
    rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let left = total as u64 - out.iter().sum::<u64>();
    for &(_, i) in rems.iter().take(left as usize) {
        out[i] += 1;
    }
    out
}

struct Patient<'a> {
    cases: Vec<&'a CaseRecord>,
    stratum: usize,
}

fn patients<'a>(manifest: &'a Manifest, stratify: &[Dimension]) -> Vec<Patient<'a>> {
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    let mut out: Vec<Patient<'_>> = Vec::new();
    for case in &manifest.cases {
        match index.get(case.patient_id.as_str()) {
            Some(&i) => out[i].cases.push(case),
            None => {
                index.insert(&case.patient_id, out.len());
                out.push(Patient {
                    cases: vec![case],
                    stratum: 0,
                });
            }
        }
    }
    // Strata keyed by the patient's first case, numbered by first appearance.
    let mut strata: BTreeMap<Vec<String>, usize> = BTreeMap::new();
    for p in &mut out {
        let key: Vec<String> = stratify
            .iter()
            .map(|d| d.key_of(p.cases[0]).unwrap_or_else(|| "unknown".into()))
            .collect();
        let next = strata.len();
        p.stratum = *strata.entry(key).or_insert(next);
    }
    out
}

/// Seeded patient-level split.
///
/// Patients are shuffled (ChaCha8 from `seed`, Fisher-Yates), then placed
/// largest-first: each goes to the bucket with room for all of its cases
/// whose share of the patient's stratum lags its target the most. Bucket
/// case counts equal the largest-remainder targets exactly.
pub fn make_split(manifest: &Manifest, ratio: [u64; 3], seed: u64, stratify: &[Dimension]) -> Result<SplitPlan> {
    if manifest.cases.is_empty() {
        return Err(Error::Split("manifest has no cases".into()));
    }
    if ratio.contains(&0) {
        return Err(Error::Split(format!("ratio {ratio:?} has a zero component")));
    }
    let total = manifest.cases.len() as u64;
    let targets = largest_remainder(total, &ratio);
    let ratio_sum: u64 = ratio.iter().sum();

    let mut pats = patients(manifest, stratify);
    SplitRng::new(seed).shuffle(&mut pats);
    // stable: shuffled order kept within equal case counts
    pats.sort_by_key(|p| std::cmp::Reverse(p.cases.len()));

    let n_strata = pats.iter().map(|p| p.stratum + 1).max().unwrap_or(0);
    let mut stratum_size = vec![0u64; n_strata];
    for p in &pats {
        stratum_size[p.stratum] += p.cases.len() as u64;
    }
    let mut remaining = targets.clone();
    let mut placed = vec![[0u64; 3]; n_strata];
    let mut assignments = BTreeMap::new();
    for p in &pats {
        let n = p.cases.len() as u64;
        let s = p.stratum;
        // deficit against the fractional stratum quota, compared exactly
        // as (size * ratio_b - placed_b * ratio_sum) / ratio_sum
        let choice = (0..3).filter(|&b| remaining[b] >= n).max_by(|&a, &b| {
            let da = stratum_size[s] as i128 * ratio[a] as i128 - (placed[s][a] * ratio_sum) as i128;
            let db = stratum_size[s] as i128 * ratio[b] as i128 - (placed[s][b] * ratio_sum) as i128;
            da.cmp(&db).then(b.cmp(&a))
        });
        let Some(b) = choice else {
            return Err(Error::Split(format!(
                "patient {} has {n} cases but no bucket has room left (targets {}:{}:{}, remaining {}:{}:{})",
                p.cases[0].patient_id, targets[0], targets[1], targets[2], remaining[0], remaining[1], remaining[2]
            )));
        };
        remaining[b] -= n;
        placed[s][b] += n;
        for c in &p.cases {
            assignments.insert(c.case_id.clone(), Bucket::ALL[b]);
        }
    }
    Ok(SplitPlan {
        seed,
        ratio,
        stratify: stratify.to_vec(),
        assignments,
    })
}

/// `k` independent splits seeded `seed`, `seed + 1`, ...
pub fn make_cv_folds(
    manifest: &Manifest,
    k: usize,
    ratio: [u64; 3],
    seed: u64,
    stratify: &[Dimension],
) -> Result<Vec<SplitPlan>> {
    if k < 2 {
        return Err(Error::Split(format!(
            "cross-validation needs at least 2 folds, got {k}"
        )));
    }
    (0..k as u64)
        .map(|i| make_split(manifest, ratio, seed.wrapping_add(i), stratify))
        .collect()
}

/// Seeded sample of `n` case ids (all of them, shuffled, when `n` exceeds
/// the pool), in sampled order.
pub fn sample_cases(case_ids: &[String], n: usize, seed: u64) -> Vec<String> {
    let mut pool = case_ids.to_vec();
    SplitRng::new(seed).shuffle(&mut pool);
    pool.truncate(n);
    pool
}
