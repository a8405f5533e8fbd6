//! Exact Euclidean distance transform on anisotropic grids.
//!
//! Separable lower-envelope-of-parabolas transform (Felzenszwalb and
//! Huttenlocher): one linear-time pass per axis over squared distances, each
//! pass scaled by that axis' spacing. Strided passes gather one plane at a
//! time into a transposed scratch buffer so that every line is processed
//! contiguously.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::volume::{Grid, Mask, Volume};

/// Scratch space for the 1D transform of one line.
struct LineScratch {
    out: Vec<f64>,
    sites: Vec<usize>,
    bounds: Vec<f64>,
}

impl LineScratch {
    fn new(n: usize) -> Self {
        LineScratch {
            out: vec![0.0; n],
            sites: vec![0; n],
            bounds: vec![0.0; n + 1],
        }
    }
}

/// `line[p] <- min_q line[q] + w (p - q)^2`, with `w = spacing^2`.
/// Infinite entries are not sites; a line without sites stays infinite.
fn transform_line(line: &mut [f64], w: f64, scratch: &mut LineScratch) {
    let n = line.len();
    let LineScratch { out, sites, bounds } = scratch;
    let mut k: usize = 0;
    let mut have_site = false;
    for q in 0..n {
        let fq = line[q];
        if fq == f64::INFINITY {
            continue;
        }
        if !have_site {
            sites[0] = q;
            bounds[0] = f64::NEG_INFINITY;
            bounds[1] = f64::INFINITY;
            have_site = true;
            continue;
        }
        let qf = q as f64;
        let intersect = |v: usize| {
            let vf = v as f64;
            ((fq + w * qf * qf) - (line[v] + w * vf * vf)) / (2.0 * w * (qf - vf))
        };
        // bounds[0] is -inf, so this stops at k = 0 at the latest.
        let mut s = intersect(sites[k]);
        while s <= bounds[k] {
            k -= 1;
            s = intersect(sites[k]);
        }
        k += 1;
        sites[k] = q;
        bounds[k] = s;
        bounds[k + 1] = f64::INFINITY;
    }
    if !have_site {
        return;
    }
    let mut k = 0;
    for (p, o) in out.iter_mut().enumerate().take(n) {
        let pf = p as f64;
        while bounds[k + 1] < pf {
            k += 1;
        }
        let d = pf - sites[k] as f64;
        *o = line[sites[k]] + w * d * d;
    }
    line.copy_from_slice(&out[..n]);
}

/// First pass: seeds are binary, so two sweeps give the nearest seed along x.
fn first_axis_pass(field: &mut [f64], seeds: &[bool], nx: usize, spacing: f64) {
    field
        .par_chunks_mut(nx)
        .zip(seeds.par_chunks(nx))
        .for_each(|(row, seed_row)| {
            let mut last: Option<usize> = None;
            for i in 0..nx {
                if seed_row[i] {
                    last = Some(i);
                }
                row[i] = match last {
                    Some(l) => ((i - l) as f64 * spacing).powi(2),
                    None => f64::INFINITY,
                };
            }
            let mut next: Option<usize> = None;
            for i in (0..nx).rev() {
                if seed_row[i] {
                    next = Some(i);
                }
                if let Some(nq) = next {
                    let d = ((nq - i) as f64 * spacing).powi(2);
                    if d < row[i] {
                        row[i] = d;
                    }
                }
            }
        });
}

/// Transform along y: each z-slice is independent.
fn y_pass(field: &mut [f64], dims: [usize; 3], w: f64) {
    let [nx, ny, _] = dims;
    if ny == 1 {
        return;
    }
    field.par_chunks_mut(nx * ny).for_each_init(
        || (vec![0.0; nx * ny], LineScratch::new(ny)),
        |(buf, scratch), slice| {
            for j in 0..ny {
                for i in 0..nx {
                    buf[i * ny + j] = slice[j * nx + i];
                }
            }
            for line in buf.chunks_mut(ny) {
                transform_line(line, w, scratch);
            }
            for j in 0..ny {
                for i in 0..nx {
                    slice[j * nx + i] = buf[i * ny + j];
                }
            }
        },
    );
}

/// Transform along z, one xz-plane at a time.
fn z_pass(field: &mut [f64], dims: [usize; 3], w: f64) {
    let [nx, ny, nz] = dims;
    if nz == 1 {
        return;
    }
    let mut buf = vec![0.0; nx * nz];
    let mut scratch = LineScratch::new(nz);
    for j in 0..ny {
        for k in 0..nz {
            let row = nx * (j + ny * k);
            for i in 0..nx {
                buf[i * nz + k] = field[row + i];
            }
        }
        for line in buf.chunks_mut(nz) {
            transform_line(line, w, &mut scratch);
        }
        for k in 0..nz {
            let row = nx * (j + ny * k);
            for i in 0..nx {
                field[row + i] = buf[i * nz + k];
            }
        }
    }
}

/// Squared distance (mm²) from every voxel center to the nearest set voxel
/// center of `seeds`. Voxels are infinitely far when `seeds` is blank.
pub fn squared_distance_field(seeds: &[bool], grid: &Grid) -> Vec<f64> {
    assert_eq!(seeds.len(), grid.len());
    let dims = grid.dims;
    let mut field = vec![0.0; grid.len()];
    first_axis_pass(&mut field, seeds, dims[0], grid.spacing[0]);
    y_pass(&mut field, dims, grid.spacing[1] * grid.spacing[1]);
    z_pass(&mut field, dims, grid.spacing[2] * grid.spacing[2]);
    field
}

/// Exact Euclidean distance (mm) from each voxel center to the nearest voxel
/// of `target`.
pub fn edt(target: &Mask) -> Result<Volume<f64>> {
    if target.is_blank() {
        return Err(Error::UndefinedDistance("distance transform of an empty target".into()));
    }
    let mut field = squared_distance_field(target.data(), target.grid());
    field.par_iter_mut().for_each(|v| *v = v.sqrt());
    Volume::from_vec(*target.grid(), field)
}
