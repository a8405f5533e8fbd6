//! Slice extraction, CT windowing and contour overlays, encoded as PNG.
//!
//! A slice spans the two array axes other than the viewed one, the lower
//! one horizontal. The vertical axis is flipped when it increases toward
//! superior or anterior, the horizontal one when it increases toward the
//! patient's right, so views come out in radiological orientation.

use oar_evalkit::review::ViewAxis;
use oar_evalkit::{AxisCode, Grid, ImageVolume, LabelVolume};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderMode {
    /// Windowed CT with opaque contours, RGB.
    Composite,
    /// Contours only on a transparent background, RGBA.
    Overlay,
    /// Windowed CT only, grayscale.
    Image,
}

impl RenderMode {
    pub fn parse(s: &str) -> Option<RenderMode> {
        match s {
            "composite" => Some(RenderMode::Composite),
            "overlay" => Some(RenderMode::Overlay),
            "image" => Some(RenderMode::Image),
            _ => None,
        }
    }
}

/// Array axis shown by a view and the two axes spanning its pixels.
pub fn view_axes(grid: &Grid, view: ViewAxis) -> (usize, usize, usize) {
    let codes = grid.axis_codes;
    let normal = match view {
        ViewAxis::Axial => codes.axial_axis(),
        ViewAxis::Coronal => codes.coronal_axis(),
        ViewAxis::Sagittal => codes.sagittal_axis(),
    };
    let mut rest = (0..3).filter(|&a| a != normal);
    let u = rest.next().expect("three axes");
    let v = rest.next().expect("three axes");
    (normal, u, v)
}

/// `[width, height]` of a rendered slice.
pub fn slice_shape(grid: &Grid, view: ViewAxis) -> [usize; 2] {
    let (_, u, v) = view_axes(grid, view);
    [grid.dims[u], grid.dims[v]]
}

pub fn slice_count(grid: &Grid, view: ViewAxis) -> usize {
    grid.dims[view_axes(grid, view).0]
}

/// Linear voxel index of every pixel, row-major from the top-left.
fn pixel_indices(grid: &Grid, view: ViewAxis, index: usize) -> (usize, usize, Vec<usize>) {
    let (normal, u, v) = view_axes(grid, view);
    let (w, h) = (grid.dims[u], grid.dims[v]);
    let flip_u = grid.axis_codes.0[u] == AxisCode::R;
    let flip_v = matches!(grid.axis_codes.0[v], AxisCode::S | AxisCode::A);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let cv = if flip_v { h - 1 - y } else { y };
        for x in 0..w {
            let cu = if flip_u { w - 1 - x } else { x };
            let mut c = [0usize; 3];
            c[normal] = index;
            c[u] = cu;
            c[v] = cv;
            out.push(grid.index(c[0], c[1], c[2]));
        }
    }
    (w, h, out)
}

fn window_gray(value: f64, window: f64, level: f64) -> u8 {
    let lo = level - window / 2.0;
    let t = ((value - lo) / window).clamp(0.0, 1.0);
    (t * 255.0).round() as u8
}

/// Pixels of `code` with a 4-neighbour outside the structure or the slice.
fn contour(labels: &[u16], w: usize, h: usize, code: u16) -> Vec<bool> {
    let inside = |x: usize, y: usize| labels[y * w + x] == code;
    let mut out = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            if !inside(x, y) {
                continue;
            }
            out[y * w + x] = x == 0
                || y == 0
                || x + 1 == w
                || y + 1 == h
                || !inside(x - 1, y)
                || !inside(x + 1, y)
                || !inside(x, y - 1)
                || !inside(x, y + 1);
        }
    }
    out
}

pub struct SliceRequest<'a> {
    pub view: ViewAxis,
    pub index: usize,
    pub window: f64,
    pub level: f64,
    /// Label codes to outline with their colors.
    pub overlays: &'a [(u16, [u8; 3])],
    pub mode: RenderMode,
}

/// Render one slice. Callers check `index` against [`slice_count`].
pub fn render_slice(
    grid: &Grid,
    image: Option<&ImageVolume>,
    labels: Option<&LabelVolume>,
    req: &SliceRequest<'_>,
) -> Result<Vec<u8>, png::EncodingError> {
    let (w, h, idx) = pixel_indices(grid, req.view, req.index);
    let gray: Vec<u8> = match image {
        Some(img) => idx
            .iter()
            .map(|&i| window_gray(img.value(i), req.window, req.level))
            .collect(),
        None => vec![0; w * h],
    };
    let (color, channels, mut data) = match req.mode {
        RenderMode::Image => return encode(w, h, png::ColorType::Grayscale, &gray),
        RenderMode::Composite => (
            png::ColorType::Rgb,
            3,
            gray.iter().flat_map(|&g| [g, g, g]).collect::<Vec<u8>>(),
        ),
        RenderMode::Overlay => (png::ColorType::Rgba, 4, vec![0u8; w * h * 4]),
    };
    if let Some(labels) = labels {
        let slice: Vec<u16> = idx.iter().map(|&i| labels.data()[i]).collect();
        for &(code, rgb) in req.overlays {
            for (p, on) in contour(&slice, w, h, code).into_iter().enumerate() {
                if on {
                    let px = &mut data[p * channels..p * channels + 3];
                    px.copy_from_slice(&rgb);
                    if channels == 4 {
                        data[p * 4 + 3] = 255;
                    }
                }
            }
        }
    }
    encode(w, h, color, &data)
}

fn encode(w: usize, h: usize, color: png::ColorType, data: &[u8]) -> Result<Vec<u8>, png::EncodingError> {
    let mut buf = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut buf, w as u32, h as u32);
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header()?;
        writer.write_image_data(data)?;
        writer.finish()?;
    }
    Ok(buf)
}
