#![allow(dead_code)]

use oar_evalkit::{Grid, Mask, Volume};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Union of a few random boxes plus speckle, so masks have both solid
/// regions and isolated voxels.
pub fn random_mask(rng: &mut ChaCha8Rng, grid: Grid) -> Mask {
    let [nx, ny, nz] = grid.dims;
    let mut m = Volume::filled(grid, false).unwrap();
    for _ in 0..rng.random_range(1..4) {
        let lo = [
            rng.random_range(0..nx),
            rng.random_range(0..ny),
            rng.random_range(0..nz),
        ];
        let hi = [
            rng.random_range(lo[0]..nx),
            rng.random_range(lo[1]..ny),
            rng.random_range(lo[2]..nz),
        ];
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    m.set(i, j, k, true);
                }
            }
        }
    }
    let speckle = rng.random_range(0.0..0.08);
    for v in m.data_mut() {
        if rng.random_bool(speckle) {
            *v = true;
        }
    }
    m
}

pub fn random_grid(rng: &mut ChaCha8Rng, max_dim: usize) -> Grid {
    let dims = [
        rng.random_range(1..=max_dim),
        rng.random_range(1..=max_dim),
        rng.random_range(1..=max_dim),
    ];
    let spacing = [
        rng.random_range(0.5..3.0),
        rng.random_range(0.5..3.0),
        rng.random_range(0.5..3.0),
    ];
    Grid::new(dims, spacing).unwrap()
}

pub fn voxels(mask: &Mask) -> Vec<[usize; 3]> {
    let g = mask.grid();
    let mut out = Vec::new();
    for k in 0..g.dims[2] {
        for j in 0..g.dims[1] {
            for i in 0..g.dims[0] {
                if *mask.get(i, j, k) {
                    out.push([i, j, k]);
                }
            }
        }
    }
    out
}

/// Foreground voxels with a face neighbour outside the mask or the volume.
pub fn brute_surface(mask: &Mask) -> Vec<[usize; 3]> {
    let d = mask.grid().dims;
    voxels(mask)
        .into_iter()
        .filter(|&c| {
            (0..3).any(|ax| {
                [-1i64, 1].iter().any(|&step| {
                    let n = c[ax] as i64 + step;
                    if n < 0 || n >= d[ax] as i64 {
                        return true;
                    }
                    let mut nc = c;
                    nc[ax] = n as usize;
                    !*mask.get(nc[0], nc[1], nc[2])
                })
            })
        })
        .collect()
}

pub fn dist(a: [usize; 3], b: [usize; 3], s: [f64; 3]) -> f64 {
    (0..3)
        .map(|ax| {
            let d = (a[ax] as f64 - b[ax] as f64) * s[ax];
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// All-pairs directed nearest distances, both directions pooled.
pub fn brute_surface_distances(gt: &Mask, pred: &Mask) -> Vec<f64> {
    let s = gt.grid().spacing;
    let gs = brute_surface(gt);
    let ps = brute_surface(pred);
    let nearest = |from: &[[usize; 3]], to: &[[usize; 3]]| -> Vec<f64> {
        from.iter()
            .map(|&a| to.iter().map(|&b| dist(a, b, s)).fold(f64::INFINITY, f64::min))
            .collect()
    };
    let mut out = nearest(&ps, &gs);
    out.extend(nearest(&gs, &ps));
    out
}

pub fn brute_percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q * (v.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < v.len() {
        v[i] * (1.0 - frac) + v[i + 1] * frac
    } else {
        v[i]
    }
}

pub fn brute_dsc(a: &Mask, b: &Mask) -> f64 {
    let inter = a.data().iter().zip(b.data()).filter(|(x, y)| **x && **y).count();
    let total = a.count() + b.count();
    if total == 0 {
        1.0
    } else {
        2.0 * inter as f64 / total as f64
    }
}
