//! On-disk formats: portable float maps for HDR, 8-bit PNG frames, 16-bit
//! label masks, and CSV for sparse depth, trajectories and transmittance.

use std::io::Cursor;
use std::path::Path;

use drivesim_core::compositor::SparseDepth;
use drivesim_core::image::{LabelImage, Plane, Rgb, RgbImage};
use drivesim_core::lighting::LightingProbe;
use drivesim_core::scene::{LaneNode, Trajectory, TrajectorySample};
use drivesim_core::skydome::EnvironmentMap;
use image::{ColorType, ImageBuffer, ImageFormat, Luma};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("bad PFM: {0}")]
    Pfm(String),
    #[error(transparent)]
    Image(#[from] image::ImageError),
    #[error("mask must be a 8- or 16-bit grayscale PNG, got {0:?}")]
    MaskColor(ColorType),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, FormatError>;

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

/// Writes `bytes`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source| FormatError::Io { path: path.display().to_string(), source };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, bytes).map_err(io)
}

/// Little-endian color PFM. `pixels` is row-major from the top row; the file
/// stores rows bottom-up.
pub fn encode_pfm(width: usize, height: usize, pixels: &[Rgb]) -> Vec<u8> {
    assert_eq!(pixels.len(), width * height, "pixel count");
    let mut out = format!("PF\n{width} {height}\n-1.0\n").into_bytes();
    out.reserve(width * height * 12);
    for row in pixels.chunks(width.max(1)).rev() {
        for p in row {
            for c in p.channels() {
                out.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
    }
    out
}

/// Parses a color PFM of either endianness into top-down rows.
pub fn decode_pfm(bytes: &[u8]) -> Result<(usize, usize, Vec<Rgb>)> {
    let bad = |m: &str| FormatError::Pfm(m.to_string());
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header is not ASCII"))?);
    }
    // exactly one whitespace byte separates the header from the data
    pos += 1;
    if fields[0] != "PF" {
        return Err(bad("only color ('PF') maps are supported"));
    }
    let width: usize = fields[1].parse().map_err(|_| bad("width"))?;
    let height: usize = fields[2].parse().map_err(|_| bad("height"))?;
    let scale: f32 = fields[3].parse().map_err(|_| bad("scale"))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(bad("scale must be nonzero"));
    }
    let data = bytes.get(pos..).unwrap_or_default();
    if data.len() != width * height * 12 {
        return Err(FormatError::Pfm(format!("expected {} data bytes, found {}", width * height * 12, data.len())));
    }
    let read = |b: &[u8]| {
        let a = [b[0], b[1], b[2], b[3]];
        f64::from(if scale < 0.0 { f32::from_le_bytes(a) } else { f32::from_be_bytes(a) })
    };
    let mut pixels = vec![Rgb::BLACK; width * height];
    for (i, px) in data.chunks_exact(12).enumerate() {
        let (row, col) = (height - 1 - i / width, i % width);
        pixels[row * width + col] = Rgb::new(read(&px[0..4]), read(&px[4..8]), read(&px[8..12]));
    }
    Ok((width, height, pixels))
}

pub fn encode_env_pfm(map: &EnvironmentMap) -> Vec<u8> {
    encode_pfm(map.width, map.height, &map.pixels)
}

pub fn decode_env_pfm(bytes: &[u8]) -> Result<EnvironmentMap> {
    let (width, height, pixels) = decode_pfm(bytes)?;
    Ok(EnvironmentMap { width, height, pixels })
}

pub fn encode_image_pfm(img: &RgbImage) -> Vec<u8> {
    encode_pfm(img.width, img.height, &img.data)
}

/// 8-bit RGB PNG of a display-referred image.
pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>> {
    let buf = image::RgbImage::from_raw(img.width as u32, img.height as u32, img.to_rgb8())
        .expect("buffer matches dimensions");
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png)?;
    Ok(out.into_inner())
}

/// Decodes an 8-bit PNG back to [0, 1] values.
pub fn decode_png(bytes: &[u8]) -> Result<RgbImage> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?.into_rgb8();
    let (w, h) = img.dimensions();
    let px = |v: u8| f64::from(v) / 255.0;
    Ok(Plane::from_fn(w as usize, h as usize, |x, y| {
        let p = img.get_pixel(x as u32, y as u32).0;
        Rgb::new(px(p[0]), px(p[1]), px(p[2]))
    }))
}

pub fn encode_label_png(labels: &LabelImage) -> Result<Vec<u8>> {
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(labels.width as u32, labels.height as u32, labels.data.clone())
            .expect("buffer matches dimensions");
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png)?;
    Ok(out.into_inner())
}

/// Reads a segmentation mask. Label values are taken verbatim, so 8-bit masks
/// are widened without rescaling.
pub fn decode_label_png(bytes: &[u8]) -> Result<LabelImage> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = match img {
        image::DynamicImage::ImageLuma16(b) => b.into_raw(),
        image::DynamicImage::ImageLuma8(b) => b.into_raw().into_iter().map(u16::from).collect(),
        other => return Err(FormatError::MaskColor(other.color())),
    };
    Ok(Plane { width: w, height: h, data })
}

fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("flushing into memory cannot fail")
}

/// Sparse depth as `u,v,depth` rows with a header.
pub fn encode_sparse_depth(samples: &[SparseDepth]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in samples {
        w.serialize(s)?;
    }
    Ok(finish(w))
}

pub fn decode_sparse_depth(bytes: &[u8]) -> Result<Vec<SparseDepth>> {
    let mut out = Vec::new();
    for (i, rec) in csv::Reader::from_reader(bytes).deserialize::<SparseDepth>().enumerate() {
        let s = rec?;
        if !(s.depth.is_finite() && s.depth > 0.0) {
            return Err(FormatError::Row { row: i + 1, message: format!("depth must be positive, got {}", s.depth) });
        }
        out.push(s);
    }
    Ok(out)
}

/// Trajectory as `t,x,y,heading` rows with a header.
pub fn encode_trajectory(t: &Trajectory) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in &t.samples {
        w.serialize(s)?;
    }
    Ok(finish(w))
}

/// Reads a trajectory; the step is taken from the first two timestamps.
pub fn decode_trajectory(bytes: &[u8]) -> Result<Trajectory> {
    let samples = csv::Reader::from_reader(bytes).deserialize::<TrajectorySample>().collect::<std::result::Result<Vec<_>, _>>()?;
    if samples.len() < 2 {
        return Err(FormatError::Row { row: samples.len(), message: "a trajectory needs at least two samples".into() });
    }
    for (i, w) in samples.windows(2).enumerate() {
        if !(w[1].t > w[0].t) {
            return Err(FormatError::Row { row: i + 2, message: "timestamps must increase".into() });
        }
    }
    let dt = samples[1].t - samples[0].t;
    Ok(Trajectory { samples, dt })
}

/// Transmittance grid: one CSV row per equirect row, no header.
pub fn encode_transmittance(probe: &LightingProbe) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for row in probe.transmittance.chunks(probe.width().max(1)) {
        w.serialize(row)?;
    }
    Ok(finish(w))
}

/// Returns `(height, width, values)`.
pub fn decode_transmittance(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>)> {
    let mut values = Vec::new();
    let mut width = None;
    let mut height = 0;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(bytes);
    for rec in reader.deserialize::<Vec<f64>>() {
        let row = rec?;
        height += 1;
        if *width.get_or_insert(row.len()) != row.len() {
            return Err(FormatError::Row { row: height, message: "ragged transmittance grid".into() });
        }
        values.extend(row);
    }
    Ok((height, width.unwrap_or(0), values))
}

/// Lane maps are a JSON list of `{start, end, type}` nodes.
pub fn decode_lane_nodes(bytes: &[u8]) -> Result<Vec<LaneNode>> {
    Ok(serde_json::from_slice(bytes)?)
}

pub fn encode_lane_nodes(nodes: &[LaneNode]) -> Result<Vec<u8>> {
    Ok(serde_json::to_vec_pretty(nodes)?)
}
