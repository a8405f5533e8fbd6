//! NIfTI-1 single-file (`.nii`, `.nii.gz`) and header/image pair
//! (`.hdr`/`.img`) reading, single-file writing.
//!
//! Geometry is taken from the sform when `sform_code > 0`, else from the
//! qform when `qform_code > 0`, else from pixdim alone. Oblique affines are
//! snapped to the closest axis-aligned orientation.

use std::fs;
use std::io::{Cursor, Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{BigEndian, ByteOrder, LittleEndian, WriteBytesExt};
use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::error::{Error, Result};
use crate::volume::{AxisCode, AxisCodes, Grid, ImageVolume, LabelVolume, Volume, VoxelData};

pub const HEADER_SIZE: usize = 348;
const SINGLE_FILE_OFFSET: usize = 352;
const MAGIC_SINGLE: &[u8; 4] = b"n+1\0";
const MAGIC_PAIR: &[u8; 4] = b"ni1\0";
const LABEL_INTEGRALITY_TOL: f64 = 1e-6;

/// On-disk voxel datatypes this module understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataType {
    U8,
    I16,
    U16,
    I32,
    F32,
    F64,
}

impl DataType {
    pub fn code(self) -> i16 {
        match self {
            DataType::U8 => 2,
            DataType::I16 => 4,
            DataType::I32 => 8,
            DataType::F32 => 16,
            DataType::F64 => 64,
            DataType::U16 => 512,
        }
    }

    pub fn from_code(code: i16) -> Option<DataType> {
        Some(match code {
            2 => DataType::U8,
            4 => DataType::I16,
            8 => DataType::I32,
            16 => DataType::F32,
            64 => DataType::F64,
            512 => DataType::U16,
            _ => return None,
        })
    }

    pub fn bytes(self) -> usize {
        match self {
            DataType::U8 => 1,
            DataType::I16 | DataType::U16 => 2,
            DataType::I32 | DataType::F32 => 4,
            DataType::F64 => 8,
        }
    }

    fn of(data: &VoxelData) -> DataType {
        match data {
            VoxelData::U8(_) => DataType::U8,
            VoxelData::I16(_) => DataType::I16,
            VoxelData::U16(_) => DataType::U16,
            VoxelData::I32(_) => DataType::I32,
            VoxelData::F32(_) => DataType::F32,
            VoxelData::F64(_) => DataType::F64,
        }
    }
}

/// The subset of NIfTI-1 header fields this toolkit honors.
#[derive(Debug, Clone, PartialEq)]
pub struct NiftiHeader {
    pub dim: [i16; 8],
    pub datatype: i16,
    pub bitpix: i16,
    pub pixdim: [f32; 8],
    pub vox_offset: f32,
    pub scl_slope: f32,
    pub scl_inter: f32,
    pub qform_code: i16,
    pub sform_code: i16,
    pub quatern: [f32; 3],
    pub qoffset: [f32; 3],
    pub srow: [[f32; 4]; 3],
    pub magic: [u8; 4],
    pub big_endian: bool,
}

impl NiftiHeader {
    pub fn parse(bytes: &[u8]) -> Result<NiftiHeader> {
        if bytes.len() < HEADER_SIZE {
            return Err(Error::Format(format!(
                "truncated header: {} bytes, need {HEADER_SIZE}",
                bytes.len()
            )));
        }
        let big_endian = if LittleEndian::read_i32(&bytes[0..4]) == HEADER_SIZE as i32 {
            false
        } else if BigEndian::read_i32(&bytes[0..4]) == HEADER_SIZE as i32 {
            true
        } else {
            return Err(Error::Format("sizeof_hdr is not 348".into()));
        };
        let magic: [u8; 4] = bytes[344..348].try_into().unwrap();
        if &magic != MAGIC_SINGLE && &magic != MAGIC_PAIR {
            return Err(Error::Format(format!(
                "bad magic {:?}",
                String::from_utf8_lossy(&magic)
            )));
        }
        if big_endian {
            Self::parse_with::<BigEndian>(bytes, magic, true)
        } else {
            Self::parse_with::<LittleEndian>(bytes, magic, false)
        }
    }

    fn parse_with<E: ByteOrder>(bytes: &[u8], magic: [u8; 4], big_endian: bool) -> Result<NiftiHeader> {
        let i16_at = |off: usize| E::read_i16(&bytes[off..off + 2]);
        let f32_at = |off: usize| E::read_f32(&bytes[off..off + 4]);
        let mut dim = [0i16; 8];
        let mut pixdim = [0f32; 8];
        for i in 0..8 {
            dim[i] = i16_at(40 + 2 * i);
            pixdim[i] = f32_at(76 + 4 * i);
        }
        let mut srow = [[0f32; 4]; 3];
        for (r, row) in srow.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = f32_at(280 + 16 * r + 4 * c);
            }
        }
        Ok(NiftiHeader {
            dim,
            datatype: i16_at(70),
            bitpix: i16_at(72),
            pixdim,
            vox_offset: f32_at(108),
            scl_slope: f32_at(112),
            scl_inter: f32_at(116),
            qform_code: i16_at(252),
            sform_code: i16_at(254),
            quatern: [f32_at(256), f32_at(260), f32_at(264)],
            qoffset: [f32_at(268), f32_at(272), f32_at(276)],
            srow,
            magic,
            big_endian,
        })
    }

    /// Serialize as a little-endian single-file header.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(HEADER_SIZE);
        let w = &mut buf;
        w.write_i32::<LittleEndian>(HEADER_SIZE as i32).unwrap();
        w.extend_from_slice(&[0u8; 36]); // data_type .. dim_info
        for d in self.dim {
            w.write_i16::<LittleEndian>(d).unwrap();
        }
        w.extend_from_slice(&[0u8; 14]); // intent_p1..3, intent_code
        w.write_i16::<LittleEndian>(self.datatype).unwrap();
        w.write_i16::<LittleEndian>(self.bitpix).unwrap();
        w.write_i16::<LittleEndian>(0).unwrap(); // slice_start
        for p in self.pixdim {
            w.write_f32::<LittleEndian>(p).unwrap();
        }
        w.write_f32::<LittleEndian>(self.vox_offset).unwrap();
        w.write_f32::<LittleEndian>(self.scl_slope).unwrap();
        w.write_f32::<LittleEndian>(self.scl_inter).unwrap();
        w.write_i16::<LittleEndian>(0).unwrap(); // slice_end
        w.push(0); // slice_code
        w.push(2 | 8); // xyzt_units: mm, sec
        w.extend_from_slice(&[0u8; 24]); // cal_max .. glmin
        let mut descrip = [0u8; 80];
        let text = b"oar-evalkit";
        descrip[..text.len()].copy_from_slice(text);
        w.extend_from_slice(&descrip);
        w.extend_from_slice(&[0u8; 24]); // aux_file
        w.write_i16::<LittleEndian>(self.qform_code).unwrap();
        w.write_i16::<LittleEndian>(self.sform_code).unwrap();
        for q in self.quatern.iter().chain(self.qoffset.iter()) {
            w.write_f32::<LittleEndian>(*q).unwrap();
        }
        for row in self.srow {
            for v in row {
                w.write_f32::<LittleEndian>(v).unwrap();
            }
        }
        w.extend_from_slice(&[0u8; 16]); // intent_name
        w.extend_from_slice(&self.magic);
        debug_assert_eq!(buf.len(), HEADER_SIZE);
        buf
    }

    /// Spatial dims, allowing trailing singleton dimensions beyond the third.
    pub fn spatial_dims(&self) -> Result<[usize; 3]> {
        let rank = self.dim[0];
        if !(1..=7).contains(&rank) {
            return Err(Error::UnsupportedRank(format!("dim[0] = {rank}")));
        }
        let rank = rank as usize;
        if (4..=rank).any(|i| self.dim[i] > 1) {
            return Err(Error::UnsupportedRank(format!(
                "{rank}-D volume with non-singleton dims {:?}",
                &self.dim[1..=rank]
            )));
        }
        let mut dims = [1usize; 3];
        for (a, d) in dims.iter_mut().enumerate().take(rank.min(3)) {
            let v = self.dim[a + 1];
            if v < 1 {
                return Err(Error::Format(format!("dim[{}] = {v}", a + 1)));
            }
            *d = v as usize;
        }
        Ok(dims)
    }

    pub fn data_type(&self) -> Result<DataType> {
        DataType::from_code(self.datatype)
            .ok_or_else(|| Error::Format(format!("unsupported datatype code {}", self.datatype)))
    }

    /// Voxel-to-world affine (first three rows) per the sform/qform precedence.
    pub fn affine(&self) -> [[f64; 4]; 3] {
        let spacing = [0, 1, 2].map(|a| (self.pixdim[a + 1] as f64).abs().max(f64::MIN_POSITIVE));
        if self.sform_code > 0 {
            return self.srow.map(|row| row.map(|v| v as f64));
        }
        if self.qform_code > 0 {
            let [b, c, d] = self.quatern.map(|v| v as f64);
            let a = (1.0 - (b * b + c * c + d * d)).max(0.0).sqrt();
            let qfac = if self.pixdim[0] < 0.0 { -1.0 } else { 1.0 };
            let r = [
                [
                    a * a + b * b - c * c - d * d,
                    2.0 * (b * c - a * d),
                    2.0 * (b * d + a * c),
                ],
                [
                    2.0 * (b * c + a * d),
                    a * a + c * c - b * b - d * d,
                    2.0 * (c * d - a * b),
                ],
                [
                    2.0 * (b * d - a * c),
                    2.0 * (c * d + a * b),
                    a * a + d * d - c * c - b * b,
                ],
            ];
            let scale = [spacing[0], spacing[1], spacing[2] * qfac];
            let mut m = [[0.0; 4]; 3];
            for (row, out) in r.iter().zip(m.iter_mut()) {
                for col in 0..3 {
                    out[col] = row[col] * scale[col];
                }
            }
            for (w, out) in m.iter_mut().enumerate() {
                out[3] = self.qoffset[w] as f64;
            }
            return m;
        }
        let mut m = [[0.0; 4]; 3];
        for (a, row) in m.iter_mut().enumerate() {
            row[a] = spacing[a];
        }
        m
    }

    pub fn grid(&self) -> Result<Grid> {
        let dims = self.spatial_dims()?;
        let spacing = [0, 1, 2].map(|a| (self.pixdim[a + 1] as f64).abs());
        let spacing = spacing.map(|s| if s > 0.0 && s.is_finite() { s } else { 1.0 });
        let m = self.affine();
        let grid = Grid {
            dims,
            spacing,
            origin: [m[0][3], m[1][3], m[2][3]],
            axis_codes: axis_codes_of(&m),
        };
        grid.validate()?;
        Ok(grid)
    }
}

/// Closest axis-aligned orientation of an affine's voxel axes.
fn axis_codes_of(m: &[[f64; 4]; 3]) -> AxisCodes {
    let mut used = [false; 3];
    let mut codes = [AxisCode::R, AxisCode::A, AxisCode::S];
    // Assign the most dominant column first so near-oblique affines stay a permutation.
    let mut order: Vec<(usize, f64)> = (0..3)
        .map(|col| {
            let norm = (0..3)
                .map(|w| m[w][col].powi(2))
                .sum::<f64>()
                .sqrt()
                .max(f64::MIN_POSITIVE);
            let best = (0..3).map(|w| m[w][col].abs() / norm).fold(0.0, f64::max);
            (col, best)
        })
        .collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1));
    for (col, _) in order {
        let (w, v) = (0..3)
            .filter(|w| !used[*w])
            .map(|w| (w, m[w][col]))
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap();
        used[w] = true;
        codes[col] = AxisCode::from_world(w, v >= 0.0);
    }
    AxisCodes(codes)
}

fn header_for(grid: &Grid, dtype: DataType, slope: f64, inter: f64) -> NiftiHeader {
    let mut dim = [1i16; 8];
    dim[0] = 3;
    for a in 0..3 {
        dim[a + 1] = grid.dims[a] as i16;
    }
    let mut srow = [[0f32; 4]; 3];
    let mut rot = [[0f64; 3]; 3];
    for a in 0..3 {
        let code = grid.axis_codes.0[a];
        srow[code.world_axis()][a] = (code.sign() * grid.spacing[a]) as f32;
        rot[code.world_axis()][a] = code.sign();
    }
    for (row, o) in srow.iter_mut().zip(grid.origin) {
        row[3] = o as f32;
    }
    let (quatern, qfac) = quaternion_of(rot);
    let mut pixdim = [0f32; 8];
    pixdim[0] = qfac as f32;
    for a in 0..3 {
        pixdim[a + 1] = grid.spacing[a] as f32;
    }
    NiftiHeader {
        dim,
        datatype: dtype.code(),
        bitpix: (dtype.bytes() * 8) as i16,
        pixdim,
        vox_offset: SINGLE_FILE_OFFSET as f32,
        scl_slope: slope as f32,
        scl_inter: inter as f32,
        qform_code: 1,
        sform_code: 1,
        quatern: quatern.map(|v| v as f32),
        qoffset: grid.origin.map(|v| v as f32),
        srow,
        magic: *MAGIC_SINGLE,
        big_endian: false,
    }
}

/// Quaternion (b, c, d) and qfac for an orthonormal rotation matrix.
fn quaternion_of(mut r: [[f64; 3]; 3]) -> ([f64; 3], f64) {
    let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
        + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
    let qfac = if det < 0.0 {
        for row in &mut r {
            row[2] = -row[2];
        }
        -1.0
    } else {
        1.0
    };
    let trace = 1.0 + r[0][0] + r[1][1] + r[2][2];
    let (a, mut b, mut c, mut d);
    if trace > 0.5 {
        a = 0.5 * trace.sqrt();
        b = 0.25 * (r[2][1] - r[1][2]) / a;
        c = 0.25 * (r[0][2] - r[2][0]) / a;
        d = 0.25 * (r[1][0] - r[0][1]) / a;
    } else {
        let xd = 1.0 + r[0][0] - (r[1][1] + r[2][2]);
        let yd = 1.0 + r[1][1] - (r[0][0] + r[2][2]);
        let zd = 1.0 + r[2][2] - (r[0][0] + r[1][1]);
        if xd > 1.0 {
            b = 0.5 * xd.sqrt();
            c = 0.25 * (r[0][1] + r[1][0]) / b;
            d = 0.25 * (r[0][2] + r[2][0]) / b;
            a = 0.25 * (r[2][1] - r[1][2]) / b;
        } else if yd > 1.0 {
            c = 0.5 * yd.sqrt();
            b = 0.25 * (r[0][1] + r[1][0]) / c;
            d = 0.25 * (r[1][2] + r[2][1]) / c;
            a = 0.25 * (r[0][2] - r[2][0]) / c;
        } else {
            d = 0.5 * zd.sqrt();
            b = 0.25 * (r[0][2] + r[2][0]) / d;
            c = 0.25 * (r[1][2] + r[2][1]) / d;
            a = 0.25 * (r[1][0] - r[0][1]) / d;
        }
        if a < 0.0 {
            b = -b;
            c = -c;
            d = -d;
        }
    }
    ([b, c, d], qfac)
}

fn is_gzip(bytes: &[u8]) -> bool {
    bytes.len() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b
}

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    if is_gzip(&raw) {
        let mut out = Vec::with_capacity(raw.len() * 4);
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::Format(format!("{}: corrupt gzip stream: {e}", path.display())))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn image_file_for(header_path: &Path) -> Option<PathBuf> {
    let name = header_path.file_name()?.to_str()?;
    let stem = name.strip_suffix(".hdr.gz").or_else(|| name.strip_suffix(".hdr"))?;
    [".img", ".img.gz"]
        .iter()
        .map(|ext| header_path.with_file_name(format!("{stem}{ext}")))
        .find(|p| p.exists())
}

/// Header plus raw voxel payload of a NIfTI file.
struct RawNifti {
    header: NiftiHeader,
    payload: Vec<u8>,
}

fn load_raw(path: &Path) -> Result<RawNifti> {
    let bytes = read_maybe_gz(path)?;
    let header = NiftiHeader::parse(&bytes)?;
    if &header.magic == MAGIC_PAIR {
        let img =
            image_file_for(path).ok_or_else(|| Error::Format(format!("{}: no matching .img file", path.display())))?;
        let payload = read_maybe_gz(&img)?;
        let offset = header.vox_offset.max(0.0) as usize;
        return Ok(RawNifti {
            header,
            payload: payload.get(offset..).unwrap_or_default().to_vec(),
        });
    }
    let offset = (header.vox_offset as usize).max(HEADER_SIZE);
    let mut bytes = bytes;
    if bytes.len() < offset {
        return Err(Error::Format(format!(
            "{}: truncated before vox_offset",
            path.display()
        )));
    }
    let payload = bytes.split_off(offset);
    Ok(RawNifti { header, payload })
}

fn decode_voxels(header: &NiftiHeader, payload: &[u8], count: usize) -> Result<VoxelData> {
    let dtype = header.data_type()?;
    let needed = count * dtype.bytes();
    if payload.len() < needed {
        return Err(Error::Format(format!(
            "truncated voxel data: {} bytes, need {needed}",
            payload.len()
        )));
    }
    let payload = &payload[..needed];
    macro_rules! decode {
        ($variant:ident, $ty:ty, $read:ident) => {{
            let mut out = vec![<$ty>::default(); count];
            if header.big_endian {
                BigEndian::$read(payload, &mut out);
            } else {
                LittleEndian::$read(payload, &mut out);
            }
            VoxelData::$variant(out)
        }};
    }
    Ok(match dtype {
        DataType::U8 => VoxelData::U8(payload.to_vec()),
        DataType::I16 => decode!(I16, i16, read_i16_into),
        DataType::U16 => decode!(U16, u16, read_u16_into),
        DataType::I32 => decode!(I32, i32, read_i32_into),
        DataType::F32 => decode!(F32, f32, read_f32_into),
        DataType::F64 => decode!(F64, f64, read_f64_into),
    })
}

pub fn read_header(path: impl AsRef<Path>) -> Result<NiftiHeader> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut head = Vec::with_capacity(HEADER_SIZE);
    let mut probe = [0u8; 2];
    let mut reader = std::io::BufReader::new(file);
    reader
        .read_exact(&mut probe)
        .map_err(|_| Error::Format("truncated header".into()))?;
    let chained = Cursor::new(probe.to_vec()).chain(reader);
    if is_gzip(&probe) {
        GzDecoder::new(chained)
            .take(HEADER_SIZE as u64)
            .read_to_end(&mut head)
            .map_err(|e| Error::Format(format!("corrupt gzip stream: {e}")))?;
    } else {
        chained
            .take(HEADER_SIZE as u64)
            .read_to_end(&mut head)
            .map_err(|e| Error::io(path, e))?;
    }
    NiftiHeader::parse(&head)
}

pub fn read_image(path: impl AsRef<Path>) -> Result<ImageVolume> {
    let raw = load_raw(path.as_ref())?;
    let grid = raw.header.grid()?;
    let voxels = decode_voxels(&raw.header, &raw.payload, grid.len())?;
    let mut image = ImageVolume::new(grid, voxels)?;
    let slope = raw.header.scl_slope as f64;
    if slope != 0.0 && slope.is_finite() {
        image.scl_slope = slope;
        image.scl_inter = raw.header.scl_inter as f64;
    }
    Ok(image)
}

/// Read a label volume. Stored values must be integers in `0..=65535`;
/// float data is accepted when every value is integral within 1e-6.
pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelVolume> {
    let path = path.as_ref();
    let raw = load_raw(path)?;
    let grid = raw.header.grid()?;
    let voxels = decode_voxels(&raw.header, &raw.payload, grid.len())?;
    let labels = labels_from(&voxels).map_err(|msg| Error::LabelFormat(format!("{}: {msg}", path.display())))?;
    Volume::from_vec(grid, labels)
}

fn labels_from(voxels: &VoxelData) -> std::result::Result<Vec<u16>, String> {
    fn ints<T: Copy + Into<i64>>(v: &[T]) -> std::result::Result<Vec<u16>, String> {
        v.iter()
            .map(|&x| {
                let x: i64 = x.into();
                u16::try_from(x).map_err(|_| format!("label value {x} outside 0..=65535"))
            })
            .collect()
    }
    fn floats(v: impl Iterator<Item = f64>) -> std::result::Result<Vec<u16>, String> {
        v.map(|x| {
            let r = x.round();
            if !x.is_finite() || (x - r).abs() > LABEL_INTEGRALITY_TOL {
                Err(format!("non-integer label value {x}"))
            } else if !(0.0..=u16::MAX as f64).contains(&r) {
                Err(format!("label value {x} outside 0..=65535"))
            } else {
                Ok(r as u16)
            }
        })
        .collect()
    }
    match voxels {
        VoxelData::U8(v) => Ok(v.iter().map(|&x| x as u16).collect()),
        VoxelData::U16(v) => Ok(v.clone()),
        VoxelData::I16(v) => ints(v),
        VoxelData::I32(v) => ints(v),
        VoxelData::F32(v) => floats(v.iter().map(|&x| x as f64)),
        VoxelData::F64(v) => floats(v.iter().copied()),
    }
}

fn encode_voxels(voxels: &VoxelData) -> Vec<u8> {
    let mut out = Vec::with_capacity(voxels.len() * DataType::of(voxels).bytes());
    macro_rules! encode {
        ($v:expr, $write:ident) => {
            for &x in $v {
                out.$write::<LittleEndian>(x).unwrap();
            }
        };
    }
    match voxels {
        VoxelData::U8(v) => out.extend_from_slice(v),
        VoxelData::I16(v) => encode!(v, write_i16),
        VoxelData::U16(v) => encode!(v, write_u16),
        VoxelData::I32(v) => encode!(v, write_i32),
        VoxelData::F32(v) => encode!(v, write_f32),
        VoxelData::F64(v) => encode!(v, write_f64),
    }
    out
}

fn write_file(path: &Path, header: &NiftiHeader, payload: &[u8]) -> Result<()> {
    let mut bytes = header.to_bytes();
    bytes.extend_from_slice(&[0u8; SINGLE_FILE_OFFSET - HEADER_SIZE]);
    bytes.extend_from_slice(payload);
    let gz = path.extension().is_some_and(|e| e == "gz");
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = std::io::BufWriter::new(file);
    let res = if gz {
        let mut enc = GzEncoder::new(writer, Compression::fast());
        enc.write_all(&bytes).and_then(|_| enc.finish().map(|_| ()))
    } else {
        writer.write_all(&bytes).and_then(|_| writer.flush())
    };
    res.map_err(|e| Error::io(path, e))
}

/// Write an image volume in its native datatype; `.gz` suffix selects gzip.
pub fn write_image(volume: &ImageVolume, path: impl AsRef<Path>) -> Result<()> {
    volume.grid.validate()?;
    let header = header_for(
        &volume.grid,
        DataType::of(&volume.voxels),
        volume.scl_slope,
        volume.scl_inter,
    );
    write_file(path.as_ref(), &header, &encode_voxels(&volume.voxels))
}

/// Write a label volume as uint8 when every code fits, else uint16.
pub fn write_labels(volume: &LabelVolume, path: impl AsRef<Path>) -> Result<()> {
    let max = volume.data().iter().copied().max().unwrap_or(0);
    let voxels = if max <= u8::MAX as u16 {
        VoxelData::U8(volume.data().iter().map(|&v| v as u8).collect())
    } else {
        VoxelData::U16(volume.data().to_vec())
    };
    let header = header_for(volume.grid(), DataType::of(&voxels), 1.0, 0.0);
    write_file(path.as_ref(), &header, &encode_voxels(&voxels))
}
