//! Voxel grids and the volume types built on them.
//!
//! Voxels are stored x-fastest: the linear index of `(i, j, k)` is
//! `i + nx * (j + ny * k)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Anatomical direction that increasing voxel index points toward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AxisCode {
    R,
    L,
    A,
    P,
    S,
    I,
}

impl AxisCode {
    /// World axis (0 = x, 1 = y, 2 = z in RAS+ space) this code lies on.
    pub fn world_axis(self) -> usize {
        match self {
            AxisCode::R | AxisCode::L => 0,
            AxisCode::A | AxisCode::P => 1,
            AxisCode::S | AxisCode::I => 2,
        }
    }

    /// +1 when the code points along the positive RAS+ direction.
    pub fn sign(self) -> f64 {
        match self {
            AxisCode::R | AxisCode::A | AxisCode::S => 1.0,
            AxisCode::L | AxisCode::P | AxisCode::I => -1.0,
        }
    }

    pub fn from_world(axis: usize, positive: bool) -> AxisCode {
        match (axis, positive) {
            (0, true) => AxisCode::R,
            (0, false) => AxisCode::L,
            (1, true) => AxisCode::A,
            (1, false) => AxisCode::P,
            (_, true) => AxisCode::S,
            (_, false) => AxisCode::I,
        }
    }

    fn as_char(self) -> char {
        match self {
            AxisCode::R => 'R',
            AxisCode::L => 'L',
            AxisCode::A => 'A',
            AxisCode::P => 'P',
            AxisCode::S => 'S',
            AxisCode::I => 'I',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AxisCodes(pub [AxisCode; 3]);

impl AxisCodes {
    pub const RAS: AxisCodes = AxisCodes([AxisCode::R, AxisCode::A, AxisCode::S]);

    /// Index of the voxel axis running head-to-foot (the axial slice axis).
    /// Falls back to the last axis when no axis lies on S/I.
    pub fn axial_axis(&self) -> usize {
        self.0.iter().position(|c| c.world_axis() == 2).unwrap_or(2)
    }

    pub fn sagittal_axis(&self) -> usize {
        self.0.iter().position(|c| c.world_axis() == 0).unwrap_or(0)
    }

    pub fn coronal_axis(&self) -> usize {
        self.0.iter().position(|c| c.world_axis() == 1).unwrap_or(1)
    }

    pub fn is_permutation(&self) -> bool {
        let mut seen = [false; 3];
        for c in self.0 {
            seen[c.world_axis()] = true;
        }
        seen.iter().all(|s| *s)
    }
}

impl Default for AxisCodes {
    fn default() -> Self {
        AxisCodes::RAS
    }
}

impl fmt::Display for AxisCodes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.0 {
            write!(f, "{}", c.as_char())?;
        }
        Ok(())
    }
}

/// Voxel lattice geometry shared by every volume type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dims: [usize; 3],
    /// mm per voxel along each voxel axis.
    pub spacing: [f64; 3],
    /// World position (mm, RAS+) of the center of voxel (0, 0, 0).
    pub origin: [f64; 3],
    pub axis_codes: AxisCodes,
}

impl Grid {
    pub fn new(dims: [usize; 3], spacing: [f64; 3]) -> Result<Grid> {
        let grid = Grid {
            dims,
            spacing,
            origin: [0.0; 3],
            axis_codes: AxisCodes::RAS,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn with_origin(mut self, origin: [f64; 3]) -> Grid {
        self.origin = origin;
        self
    }

    pub fn with_axis_codes(mut self, codes: AxisCodes) -> Grid {
        self.axis_codes = codes;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.contains(&0) {
            return Err(Error::Geometry(format!("dims must be >= 1, got {:?}", self.dims)));
        }
        if self.spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::Geometry(format!(
                "spacing must be finite and positive, got {:?}",
                self.spacing
            )));
        }
        if self.origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::Geometry(format!("origin must be finite, got {:?}", self.origin)));
        }
        if !self.axis_codes.is_permutation() {
            return Err(Error::Geometry(format!(
                "axis codes {} do not span three world axes",
                self.axis_codes
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    /// Volume of one voxel in mm³.
    pub fn voxel_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Whether two grids describe the same lattice (dims, spacing and
    /// origin to within 1e-6 relative, identical axis codes).
    pub fn same_lattice(&self, other: &Grid) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1.0);
        self.dims == other.dims
            && self.axis_codes == other.axis_codes
            && (0..3).all(|a| close(self.spacing[a], other.spacing[a]))
            && (0..3).all(|a| close(self.origin[a], other.origin[a]))
    }

    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self.same_lattice(other) {
            Ok(())
        } else {
            Err(Error::Geometry(format!(
                "grids differ: dims {:?}/{:?}, spacing {:?}/{:?}, origin {:?}/{:?}, axes {}/{}",
                self.dims,
                other.dims,
                self.spacing,
                other.spacing,
                self.origin,
                other.origin,
                self.axis_codes,
                other.axis_codes
            )))
        }
    }

    /// World coordinate of voxel `idx` along the world axis that voxel axis
    /// `axis` maps to.
    pub fn world_along(&self, axis: usize, idx: f64) -> f64 {
        let code = self.axis_codes.0[axis];
        self.origin[code.world_axis()] + code.sign() * idx * self.spacing[axis]
    }

    /// Continuous voxel index along `axis` of a world coordinate on the
    /// matching world axis.
    pub fn index_along(&self, axis: usize, world: f64) -> f64 {
        let code = self.axis_codes.0[axis];
        code.sign() * (world - self.origin[code.world_axis()]) / self.spacing[axis]
    }

    /// Sub-grid covering `range` (half-open) along `axis`.
    pub fn crop_axis(&self, axis: usize, start: usize, end: usize) -> Grid {
        let mut out = *self;
        out.dims[axis] = end - start;
        let code = self.axis_codes.0[axis];
        out.origin[code.world_axis()] += code.sign() * start as f64 * self.spacing[axis];
        out
    }

    pub fn scaled(&self, factor: f64) -> Grid {
        let mut out = *self;
        for s in &mut out.spacing {
            *s *= factor;
        }
        out
    }
}

/// A dense volume of voxels of type `T` on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Volume<T> {
    grid: Grid,
    data: Vec<T>,
}

/// Multi-label organ volume; 0 is background.
pub type LabelVolume = Volume<u16>;

/// Binary mask on a grid.
pub type Mask = Volume<bool>;

impl<T> Volume<T> {
    pub fn from_vec(grid: Grid, data: Vec<T>) -> Result<Self> {
        grid.validate()?;
        if data.len() != grid.len() {
            return Err(Error::Geometry(format!(
                "voxel count {} does not match dims {:?}",
                data.len(),
                grid.dims
            )));
        }
        Ok(Volume { grid, data })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dims(&self) -> [usize; 3] {
        self.grid.dims
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Volume<U> {
        Volume {
            grid: self.grid,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Replace the grid's physical metadata without touching voxels.
    pub fn with_grid(self, grid: Grid) -> Result<Self> {
        Volume::from_vec(grid, self.data)
    }
}

impl<T: Clone> Volume<T> {
    pub fn filled(grid: Grid, value: T) -> Result<Self> {
        grid.validate()?;
        Ok(Volume {
            data: vec![value; grid.len()],
            grid,
        })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> &T {
        &self.data[self.grid.index(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: T) {
        let idx = self.grid.index(i, j, k);
        self.data[idx] = value;
    }

    /// Copy of slices `[start, end)` along `axis`, with the origin shifted so
    /// world positions are preserved.
    pub fn crop_axis(&self, axis: usize, start: usize, end: usize) -> Volume<T> {
        assert!(start < end && end <= self.grid.dims[axis], "crop range out of bounds");
        let grid = self.grid.crop_axis(axis, start, end);
        let [nx, ny, nz] = self.grid.dims;
        let mut lo = [0, 0, 0];
        let mut hi = [nx, ny, nz];
        lo[axis] = start;
        hi[axis] = end;
        let mut data = Vec::with_capacity(grid.len());
        for k in lo[2]..hi[2] {
            for j in lo[1]..hi[1] {
                let row = self.grid.index(0, j, k);
                data.extend_from_slice(&self.data[row + lo[0]..row + hi[0]]);
            }
        }
        Volume { grid, data }
    }
}

impl Mask {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn is_blank(&self) -> bool {
        !self.data.iter().any(|&v| v)
    }

    /// Inclusive index range along `axis` holding at least one set voxel.
    pub fn extent_along(&self, axis: usize) -> Option<(usize, usize)> {
        let mut lo = usize::MAX;
        let mut hi = 0;
        for (idx, _) in self.data.iter().enumerate().filter(|(_, &v)| v) {
            let c = self.grid.coords(idx)[axis];
            lo = lo.min(c);
            hi = hi.max(c);
        }
        (lo != usize::MAX).then_some((lo, hi))
    }
}

impl LabelVolume {
    pub fn mask_of(&self, code: u16) -> Mask {
        self.map(|&v| v == code)
    }

    /// Distinct non-zero codes in ascending order.
    pub fn codes(&self) -> Vec<u16> {
        let mut seen = vec![false; u16::MAX as usize + 1];
        for &v in &self.data {
            seen[v as usize] = true;
        }
        (1..=u16::MAX).filter(|&c| seen[c as usize]).collect()
    }
}

/// Native storage for image intensities, kept in the on-disk datatype so
/// that writing back is lossless.
#[derive(Debug, Clone, PartialEq)]
pub enum VoxelData {
    U8(Vec<u8>),
    I16(Vec<i16>),
    U16(Vec<u16>),
    I32(Vec<i32>),
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl VoxelData {
    pub fn len(&self) -> usize {
        match self {
            VoxelData::U8(v) => v.len(),
            VoxelData::I16(v) => v.len(),
            VoxelData::U16(v) => v.len(),
            VoxelData::I32(v) => v.len(),
            VoxelData::F32(v) => v.len(),
            VoxelData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Raw stored value as f64 (no intensity scaling).
    #[inline]
    pub fn raw(&self, idx: usize) -> f64 {
        match self {
            VoxelData::U8(v) => v[idx] as f64,
            VoxelData::I16(v) => v[idx] as f64,
            VoxelData::U16(v) => v[idx] as f64,
            VoxelData::I32(v) => v[idx] as f64,
            VoxelData::F32(v) => v[idx] as f64,
            VoxelData::F64(v) => v[idx],
        }
    }
}

/// CT intensity volume. Values are `raw * slope + intercept` (HU).
#[derive(Debug, Clone, PartialEq)]
pub struct ImageVolume {
    pub grid: Grid,
    pub voxels: VoxelData,
    pub scl_slope: f64,
    pub scl_inter: f64,
}

impl ImageVolume {
    pub fn new(grid: Grid, voxels: VoxelData) -> Result<Self> {
        grid.validate()?;
        if voxels.len() != grid.len() {
            return Err(Error::Geometry(format!(
                "voxel count {} does not match dims {:?}",
                voxels.len(),
                grid.dims
            )));
        }
        Ok(ImageVolume {
            grid,
            voxels,
            scl_slope: 1.0,
            scl_inter: 0.0,
        })
    }

    #[inline]
    pub fn value(&self, idx: usize) -> f64 {
        self.voxels.raw(idx) * self.scl_slope + self.scl_inter
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        let g = Grid::new([3, 4, 5], [1.0, 1.0, 1.0]).unwrap();
        for idx in 0..g.len() {
            let [i, j, k] = g.coords(idx);
            assert_eq!(g.index(i, j, k), idx);
        }
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(Grid::new([0, 1, 1], [1.0; 3]).is_err());
        assert!(Grid::new([1, 1, 1], [1.0, -1.0, 1.0]).is_err());
        assert!(Grid::new([1, 1, 1], [1.0, f64::NAN, 1.0]).is_err());
        let g = Grid::new([2, 2, 2], [1.0; 3]).unwrap();
        assert!(Volume::from_vec(g, vec![0u16; 7]).is_err());
    }

    #[test]
    fn crop_preserves_world_position() {
        let g = Grid::new([2, 2, 6], [1.0, 1.0, 2.5])
            .unwrap()
            .with_origin([10.0, 20.0, 30.0]);
        let data: Vec<u16> = (0..g.len() as u16).collect();
        let v = Volume::from_vec(g, data).unwrap();
        let c = v.crop_axis(2, 2, 5);
        assert_eq!(c.dims(), [2, 2, 3]);
        assert_eq!(c.grid().origin[2], 35.0);
        assert_eq!(*c.get(1, 1, 0), *v.get(1, 1, 2));
        assert_eq!(*c.get(0, 1, 2), *v.get(0, 1, 4));
    }

    #[test]
    fn axial_axis_follows_codes() {
        use AxisCode::*;
        assert_eq!(AxisCodes::RAS.axial_axis(), 2);
        assert_eq!(AxisCodes([S, R, A]).axial_axis(), 0);
        assert_eq!(AxisCodes([L, P, S]).to_string(), "LPS");
    }
}
