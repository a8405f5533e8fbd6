//! Segmentation quality metrics: DSC, HD95 and mean surface distance on
//! anisotropic grids, masked-slab evaluation and absent-organ false
//! positive rates.
//!
//! Conventions (also written into every evaluation summary):
//! surfaces are foreground voxels with a background or out-of-volume face
//! neighbour; distances run between voxel centers; HD95 and MSD pool both
//! directed distance sets; the percentile interpolates linearly between
//! order statistics.

pub mod edt;
mod evaluate;
mod fpr;
mod table;

pub use evaluate::{evaluate_case, MaskPolicy, MetricRow, MetricStatus};
pub use fpr::{fpr_absent_organ, FprCase, FprResult};
pub use table::{read_metric_csv, read_metric_csv_file, write_metric_csv, CaseError, MetricTable, METRIC_CSV_HEADER};

use crate::error::{Error, Result};
use crate::volume::{Grid, Mask, Volume};

pub const DISTANCE_CONVENTION: &str = "pooled symmetric surface distances (both directed sets concatenated); \
surfaces = voxels with a 6-neighbour outside the structure; distances between voxel centers in mm; \
HD95 = 95th percentile with linear interpolation at rank 0.95*(n-1)";

/// Dice similarity coefficient. Two empty masks score 1.
pub fn dsc(gt: &Mask, pred: &Mask) -> Result<f64> {
    gt.grid().ensure_same(pred.grid())?;
    let mut inter = 0usize;
    let mut a = 0usize;
    let mut b = 0usize;
    for (&g, &p) in gt.data().iter().zip(pred.data()) {
        a += g as usize;
        b += p as usize;
        inter += (g && p) as usize;
    }
    if a + b == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / (a + b) as f64)
}

/// Foreground voxels with at least one face neighbour that is background
/// or outside the volume.
pub fn extract_surface(mask: &Mask) -> Mask {
    let grid = *mask.grid();
    let [nx, ny, nz] = grid.dims;
    let d = mask.data();
    let mut out = vec![false; grid.len()];
    for k in 0..nz {
        for j in 0..ny {
            let row = grid.index(0, j, k);
            for i in 0..nx {
                let idx = row + i;
                if !d[idx] {
                    continue;
                }
                out[idx] = i == 0
                    || i + 1 == nx
                    || j == 0
                    || j + 1 == ny
                    || k == 0
                    || k + 1 == nz
                    || !d[idx - 1]
                    || !d[idx + 1]
                    || !d[idx - nx]
                    || !d[idx + nx]
                    || !d[idx - nx * ny]
                    || !d[idx + nx * ny];
            }
        }
    }
    Volume::from_vec(grid, out).expect("same grid")
}

/// Inclusive per-axis bounding box of the set voxels of either mask.
fn joint_bbox(a: &Mask, b: &Mask) -> Option<[(usize, usize); 3]> {
    let grid = a.grid();
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    let [nx, ny, _] = grid.dims;
    for (idx, (&x, &y)) in a.data().iter().zip(b.data()).enumerate() {
        if x || y {
            let c = [idx % nx, (idx / nx) % ny, idx / (nx * ny)];
            for ax in 0..3 {
                lo[ax] = lo[ax].min(c[ax]);
                hi[ax] = hi[ax].max(c[ax]);
            }
        }
    }
    (lo[0] != usize::MAX).then(|| [0, 1, 2].map(|ax| (lo[ax], hi[ax])))
}

fn crop_box(mask: &Mask, bbox: [(usize, usize); 3]) -> Mask {
    let mut m = mask.crop_axis(2, bbox[2].0, bbox[2].1 + 1);
    m = m.crop_axis(1, bbox[1].0, bbox[1].1 + 1);
    m.crop_axis(0, bbox[0].0, bbox[0].1 + 1)
}

/// Directed distances from every `from` voxel to the nearest `to` voxel.
fn directed(from: &Mask, to: &Mask, grid: &Grid) -> Vec<f64> {
    let field = edt::squared_distance_field(to.data(), grid);
    from.data()
        .iter()
        .zip(field)
        .filter(|(&f, _)| f)
        .map(|(_, d2)| d2.sqrt())
        .collect()
}

/// Pooled surface distances: pred surface to gt surface, then gt surface
/// to pred surface (mm).
pub fn surface_distances(gt: &Mask, pred: &Mask) -> Result<Vec<f64>> {
    gt.grid().ensure_same(pred.grid())?;
    if gt.is_blank() {
        return Err(Error::EmptyStructure("ground truth mask is empty".into()));
    }
    if pred.is_blank() {
        return Err(Error::EmptyStructure("prediction mask is empty".into()));
    }
    // Both surfaces lie inside the joint bounding box, so the transform can
    // be restricted to it without changing any nearest-voxel distance.
    let bbox = joint_bbox(gt, pred).expect("non-empty masks");
    let gt = crop_box(gt, bbox);
    let pred = crop_box(pred, bbox);
    let gs = extract_surface(&gt);
    let ps = extract_surface(&pred);
    let grid = *gt.grid();
    let (mut a, b) = rayon::join(|| directed(&ps, &gs, &grid), || directed(&gs, &ps, &grid));
    a.extend(b);
    Ok(a)
}

fn check_distances(distances: &[f64]) -> Result<()> {
    if distances.is_empty() {
        return Err(Error::Input("empty distance list".into()));
    }
    if distances.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::Input("distances must be finite and non-negative".into()));
    }
    Ok(())
}

/// Percentile `q` in [0, 1] with linear interpolation at zero-based rank
/// `q * (n - 1)`.
pub fn percentile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Input("percentile of an empty list".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let r = q * (sorted.len() - 1) as f64;
    let lo = r.floor() as usize;
    let hi = r.ceil() as usize;
    Ok(sorted[lo] + (r - lo as f64) * (sorted[hi] - sorted[lo]))
}

pub fn hd95(distances: &[f64]) -> Result<f64> {
    check_distances(distances)?;
    percentile(distances, 0.95)
}

pub fn msd(distances: &[f64]) -> Result<f64> {
    check_distances(distances)?;
    Ok(distances.iter().sum::<f64>() / distances.len() as f64)
}
