use crate::error::{Error, Result};
use crate::volume::{Grid, LabelVolume, Volume};

const TIE_EPS: f64 = 1e-9;

/// Nearest source index along one axis for each target index. Ties go to
/// the lower index; positions outside the source clamp to the edge voxel.
fn axis_lookup(src: &Grid, dst: &Grid, axis: usize) -> Vec<usize> {
    let n = src.dims[axis];
    (0..dst.dims[axis])
        .map(|i| {
            let world = dst.world_along(axis, i as f64);
            let t = src.index_along(axis, world);
            let lo = t.floor();
            let idx = if t - lo <= 0.5 + TIE_EPS { lo } else { lo + 1.0 };
            idx.clamp(0.0, (n - 1) as f64) as usize
        })
        .collect()
}

/// Regrid a label volume onto `ref_grid` by nearest voxel center in world
/// coordinates. Both grids must share axis codes.
pub fn resample_labels_nearest(src: &LabelVolume, ref_grid: &Grid) -> Result<LabelVolume> {
    ref_grid.validate()?;
    let sg = src.grid();
    if sg.axis_codes != ref_grid.axis_codes {
        return Err(Error::Orientation(
            sg.axis_codes.to_string(),
            ref_grid.axis_codes.to_string(),
        ));
    }
    if sg.same_lattice(ref_grid) {
        return Volume::from_vec(*ref_grid, src.data().to_vec());
    }
    let lx = axis_lookup(sg, ref_grid, 0);
    let ly = axis_lookup(sg, ref_grid, 1);
    let lz = axis_lookup(sg, ref_grid, 2);
    let mut out = Vec::with_capacity(ref_grid.len());
    for &k in &lz {
        for &j in &ly {
            let row = sg.index(0, j, k);
            out.extend(lx.iter().map(|&i| src.data()[row + i]));
        }
    }
    Volume::from_vec(*ref_grid, out)
}
