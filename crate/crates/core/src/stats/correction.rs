use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::Input(format!("p-value {p} outside (0, 1]")))
    }
}

/// Bonferroni adjustment `min(1, p * m)`; `m` defaults to the number of
/// p-values and may not be smaller than it.
pub fn bonferroni(p_values: &[f64], family_size: Option<usize>) -> Result<Vec<f64>> {
    let m = family_size.unwrap_or(p_values.len());
    if m < p_values.len() {
        return Err(Error::Input(format!(
            "family size {m} is smaller than the {} p-values given",
            p_values.len()
        )));
    }
    p_values
        .iter()
        .map(|&p| {
            check_p(p)?;
            Ok((p * m as f64).min(1.0))
        })
        .collect()
}

/// Significance annotation for a (possibly adjusted) p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stars {
    NotSignificant,
    One,
    Two,
    Three,
    Four,
}

impl Stars {
    pub fn for_p(p: f64) -> Stars {
        if p <= 0.0001 {
            Stars::Four
        } else if p <= 0.001 {
            Stars::Three
        } else if p <= 0.01 {
            Stars::Two
        } else if p <= 0.05 {
            Stars::One
        } else {
            Stars::NotSignificant
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stars::NotSignificant => "ns",
            Stars::One => "*",
            Stars::Two => "**",
            Stars::Three => "***",
            Stars::Four => "****",
        }
    }
}

impl fmt::Display for Stars {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Stars {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Stars {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(match s.as_str() {
            "ns" => Stars::NotSignificant,
            "*" => Stars::One,
            "**" => Stars::Two,
            "***" => Stars::Three,
            "****" => Stars::Four,
            other => return Err(serde::de::Error::custom(format!("unknown significance `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignificanceLevel {
    pub stars: Stars,
    pub adjusted: bool,
}

pub fn stars(p: f64, adjusted: bool) -> SignificanceLevel {
    SignificanceLevel {
        stars: Stars::for_p(p),
        adjusted,
    }
}
