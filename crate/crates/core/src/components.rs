//! 3D connected-component labelling and largest-component filtering.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{LabelVolume, Mask, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Connectivity {
    /// Face neighbours.
    Six,
    /// Face and edge neighbours.
    Eighteen,
    /// Face, edge and corner neighbours.
    #[default]
    TwentySix,
}

impl Connectivity {
    pub fn from_count(n: u32) -> Result<Connectivity> {
        match n {
            6 => Ok(Connectivity::Six),
            18 => Ok(Connectivity::Eighteen),
            26 => Ok(Connectivity::TwentySix),
            _ => Err(Error::Input(format!("connectivity must be 6, 18 or 26, got {n}"))),
        }
    }

    pub fn offsets(self) -> Vec<[i64; 3]> {
        let mut out = Vec::new();
        for dz in -1i64..=1 {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let manhattan = dx.abs() + dy.abs() + dz.abs();
                    let keep = match self {
                        Connectivity::Six => manhattan == 1,
                        Connectivity::Eighteen => manhattan == 1 || manhattan == 2,
                        Connectivity::TwentySix => manhattan >= 1,
                    };
                    if keep {
                        out.push([dx, dy, dz]);
                    }
                }
            }
        }
        out
    }
}

/// Component id per voxel (0 = background, components numbered from 1 in
/// order of their smallest linear index) and the size of each component.
pub fn label_components(mask: &Mask, connectivity: Connectivity) -> (Vec<u32>, Vec<usize>) {
    let grid = mask.grid();
    let [nx, ny, nz] = grid.dims.map(|d| d as i64);
    let offsets = connectivity.offsets();
    let mut labels = vec![0u32; grid.len()];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for seed in 0..grid.len() {
        if !mask.data()[seed] || labels[seed] != 0 {
            continue;
        }
        let id = sizes.len() as u32 + 1;
        labels[seed] = id;
        stack.push(seed);
        let mut size = 0usize;
        while let Some(idx) = stack.pop() {
            size += 1;
            let [x, y, z] = grid.coords(idx).map(|c| c as i64);
            for [dx, dy, dz] in &offsets {
                let (xx, yy, zz) = (x + dx, y + dy, z + dz);
                if xx < 0 || yy < 0 || zz < 0 || xx >= nx || yy >= ny || zz >= nz {
                    continue;
                }
                let n = (xx + nx * (yy + ny * zz)) as usize;
                if mask.data()[n] && labels[n] == 0 {
                    labels[n] = id;
                    stack.push(n);
                }
            }
        }
        sizes.push(size);
    }
    (labels, sizes)
}

/// Keep only the largest connected component. Equal sizes resolve to the
/// component with the smallest minimum linear index.
pub fn keep_largest_component(mask: &Mask, connectivity: Connectivity) -> Mask {
    let (labels, sizes) = label_components(mask, connectivity);
    if sizes.len() <= 1 {
        return mask.clone();
    }
    let mut best = 0;
    for (i, &s) in sizes.iter().enumerate() {
        if s > sizes[best] {
            best = i;
        }
    }
    let keep = best as u32 + 1;
    Volume::from_vec(*mask.grid(), labels.iter().map(|&l| l == keep).collect()).expect("same grid")
}

/// Apply [`keep_largest_component`] to every label of a multi-label volume.
pub fn keep_largest_per_label(volume: &LabelVolume, connectivity: Connectivity) -> LabelVolume {
    let mut out = volume.clone();
    for code in volume.codes() {
        let kept = keep_largest_component(&volume.mask_of(code), connectivity);
        for ((o, &v), &k) in out.data_mut().iter_mut().zip(volume.data()).zip(kept.data()) {
            if v == code && !k {
                *o = 0;
            }
        }
    }
    out
}
