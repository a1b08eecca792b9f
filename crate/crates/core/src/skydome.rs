//! Skydome latent geometry: peak maps, residual injection, multi-camera
//! fusion, training losses and white-balance augmentation.

use alloc::vec::Vec;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{equirect_coords, equirect_dir_unchecked, equirect_pixel};
use crate::image::Rgb;
use crate::math::Vec3;
use crate::photometry::oetf_unchecked;
use crate::scene::Pose6D;

/// Sharpness of the spherical Gaussian peak lobe.
pub const LOBE_SHARPNESS: f64 = 100.0;
/// `M_dir` level above which the peak intensity is painted.
pub const PEAK_THRESHOLD: f64 = 0.9;
pub const CONTENT_DIM: usize = 64;
const UNIT_TOL: f64 = 1e-9;

pub const STAGE1_WEIGHTS: [f64; 4] = [1.0, 0.1, 2.0, 0.2];
/// Weights for (dir, int, content, hdr, ldr).
pub const STAGE2_WEIGHTS: [f64; 5] = [0.5, 0.25, 0.005, 0.1, 0.2];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SkyError {
    #[error("map resolution {h}x{w} is below 2x2")]
    TooSmall { h: usize, w: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(&'static str),
    #[error("direction {0:?} is not unit length")]
    NonUnitDirection([f64; 3]),
    #[error("no latents to fuse")]
    Empty,
    #[error("{latents} latents but {extrinsics} extrinsics")]
    LengthMismatch { latents: usize, extrinsics: usize },
    #[error("peak directions cancel; fused direction is undefined")]
    DegenerateFusion,
}

/// HDR equirectangular panorama, row-major from the zenith row down.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentMap {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Rgb>,
}

impl EnvironmentMap {
    pub fn filled(height: usize, width: usize, value: Rgb) -> Self {
        EnvironmentMap { width, height, pixels: alloc::vec![value; width * height] }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> Rgb) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        EnvironmentMap { width, height, pixels }
    }

    pub fn get(&self, row: usize, col: usize) -> Rgb {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: Rgb) {
        self.pixels[row * self.width + col] = v;
    }

    /// Bilinear lookup in direction `dir`: wraps in azimuth, clamps at the poles.
    pub fn sample(&self, dir: Vec3) -> Rgb {
        let (r, c) = equirect_coords(dir, self.height, self.width);
        let y = (r - 0.5).clamp(0.0, (self.height - 1) as f64);
        let y0 = y.floor() as usize;
        let y1 = (y0 + 1).min(self.height - 1);
        let fy = y - y0 as f64;
        let x0f = c.floor();
        let fx = c - x0f;
        let w = self.width as isize;
        let x0 = (x0f as isize).rem_euclid(w) as usize;
        let x1 = (x0 + 1) % self.width;
        let top = self.get(y0, x0) * (1.0 - fx) + self.get(y0, x1) * fx;
        let bottom = self.get(y1, x0) * (1.0 - fx) + self.get(y1, x1) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// Bilinear resampling to `height × width`.
    pub fn resample(&self, height: usize, width: usize) -> EnvironmentMap {
        if height == self.height && width == self.width {
            return self.clone();
        }
        EnvironmentMap::from_fn(height, width, |r, c| self.sample(equirect_dir_unchecked(r, c, height, width)))
    }

    pub fn is_valid(&self) -> bool {
        self.pixels.len() == self.width * self.height
            && self.pixels.iter().all(|p| p.is_finite() && p.is_nonnegative())
    }
}

/// Compact sky description produced by the encoder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkyLatent {
    pub peak_direction: Vec3,
    pub peak_intensity: Rgb,
    pub content: Vec<f64>,
}

fn check_unit(d: Vec3) -> Result<(), SkyError> {
    if (d.norm() - 1.0).abs() > UNIT_TOL || !d.is_finite() {
        return Err(SkyError::NonUnitDirection([d.x, d.y, d.z]));
    }
    Ok(())
}

/// Per-pixel peak direction, peak intensity and positional-encoding maps.
#[derive(Clone, Debug, PartialEq)]
pub struct SkyMaps {
    pub height: usize,
    pub width: usize,
    pub dir: Vec<f64>,
    pub int: Vec<Rgb>,
    pub pe: Vec<Vec3>,
}

impl SkyMaps {
    /// `M_dir ⊙ M_int` at pixel index `i`.
    pub fn peak(&self, i: usize) -> Rgb {
        self.int[i] * self.dir[i]
    }

    /// Channel concatenation `[M_dir, M_int, M_pe]` per pixel.
    pub fn input(&self) -> Vec<[f64; 7]> {
        (0..self.dir.len())
            .map(|i| {
                let (m, p) = (self.int[i], self.pe[i]);
                [self.dir[i], m.r, m.g, m.b, p.x, p.y, p.z]
            })
            .collect()
    }
}

pub fn build_sky_maps(latent: &SkyLatent, h: usize, w: usize) -> Result<SkyMaps, SkyError> {
    if h < 2 || w < 2 {
        return Err(SkyError::TooSmall { h, w });
    }
    check_unit(latent.peak_direction)?;
    let n = h * w;
    let mut maps = SkyMaps {
        height: h,
        width: w,
        dir: Vec::with_capacity(n),
        int: Vec::with_capacity(n),
        pe: Vec::with_capacity(n),
    };
    // the pixel holding the peak carries the lobe maximum exactly
    let peak_px = equirect_pixel(latent.peak_direction, h, w);
    for r in 0..h {
        for c in 0..w {
            let u = equirect_dir_unchecked(r, c, h, w);
            let m = if (r, c) == peak_px { 1.0 } else { (LOBE_SHARPNESS * (u.dot(latent.peak_direction) - 1.0)).exp() };
            maps.dir.push(m);
            maps.int.push(if m > PEAK_THRESHOLD { latent.peak_intensity } else { Rgb::BLACK });
            maps.pe.push(u);
        }
    }
    Ok(maps)
}

/// Replaces decoded pixels with `M_dir · M_int` wherever `M_int ≠ 0`.
pub fn inject_peak_residual(decoded: &EnvironmentMap, maps: &SkyMaps) -> Result<EnvironmentMap, SkyError> {
    if decoded.height != maps.height || decoded.width != maps.width || decoded.pixels.len() != maps.dir.len() {
        return Err(SkyError::ShapeMismatch("decoded panorama and sky maps"));
    }
    let mut out = decoded.clone();
    for (i, px) in out.pixels.iter_mut().enumerate() {
        if !maps.int[i].is_zero() {
            *px = maps.peak(i);
        }
    }
    Ok(out)
}

/// Fuses per-camera latents into one.
///
/// `extrinsics[i]` maps camera `i`'s frame into the front-facing reference
/// frame. Directions are rotated by it, averaged and renormalized; intensities
/// are averaged; contents are fused by single-head attention with the front
/// camera's content as query.
pub fn fuse_latents(latents: &[SkyLatent], extrinsics: &[Pose6D]) -> Result<SkyLatent, SkyError> {
    if latents.is_empty() {
        return Err(SkyError::Empty);
    }
    if latents.len() != extrinsics.len() {
        return Err(SkyError::LengthMismatch { latents: latents.len(), extrinsics: extrinsics.len() });
    }
    for l in latents {
        check_unit(l.peak_direction)?;
        if l.content.len() != latents[0].content.len() {
            return Err(SkyError::ShapeMismatch("content vectors differ in length"));
        }
    }
    if latents.len() == 1 {
        return Ok(latents[0].clone());
    }

    let n = latents.len() as f64;
    let mut dir = Vec3::ZERO;
    let mut intensity = Rgb::BLACK;
    for (l, e) in latents.iter().zip(extrinsics) {
        dir += e.rotation * l.peak_direction;
        intensity += l.peak_intensity;
    }
    let norm = dir.norm();
    if norm < 1e-12 {
        return Err(SkyError::DegenerateFusion);
    }

    Ok(SkyLatent {
        peak_direction: dir / norm,
        peak_intensity: intensity * (1.0 / n),
        content: attend(&latents[0].content, latents.iter().map(|l| l.content.as_slice())),
    })
}

fn attend<'a>(query: &[f64], keys: impl Iterator<Item = &'a [f64]> + Clone) -> Vec<f64> {
    let scale = 1.0 / (CONTENT_DIM as f64).sqrt();
    let scores: Vec<f64> = keys.clone().map(|k| dot(query, k) * scale).collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut out = alloc::vec![0.0; query.len()];
    for (w, v) in weights.iter().zip(keys) {
        for (o, x) in out.iter_mut().zip(v) {
            *o += w / total * x;
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Prediction or ground truth for the skydome losses.
#[derive(Clone, Debug, PartialEq)]
pub struct SkySample {
    pub direction: Vec3,
    pub intensity: Rgb,
    pub hdr: EnvironmentMap,
    /// LDR panorama; only the ground-truth side is read.
    pub ldr: EnvironmentMap,
    pub content: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage1Losses {
    pub dir: f64,
    pub int: f64,
    pub hdr_recon: f64,
    pub ldr_recon: f64,
    pub total: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage2Losses {
    pub dir: f64,
    pub int: f64,
    pub content: f64,
    pub hdr_recon: f64,
    pub ldr_recon: f64,
    pub total: f64,
}

fn log_l2(a: Rgb, b: Rgb) -> f64 {
    let d = a.zip(b, |x, y| x.ln_1p() - y.ln_1p());
    d.r * d.r + d.g * d.g + d.b * d.b
}

pub fn stage1_total(components: [f64; 4]) -> f64 {
    components.iter().zip(STAGE1_WEIGHTS).fold(0.0, |acc, (c, w)| acc + w * c)
}

pub fn stage2_total(components: [f64; 5]) -> f64 {
    components.iter().zip(STAGE2_WEIGHTS).fold(0.0, |acc, (c, w)| acc + w * c)
}

pub fn sky_losses_stage1(pred: &SkySample, truth: &SkySample) -> Result<Stage1Losses, SkyError> {
    check_unit(pred.direction)?;
    check_unit(truth.direction)?;
    if pred.hdr.pixels.len() != truth.hdr.pixels.len() || truth.ldr.pixels.len() != pred.hdr.pixels.len() {
        return Err(SkyError::ShapeMismatch("prediction and truth panoramas"));
    }
    let dir = pred.direction.angle_to(truth.direction);
    let int = log_l2(pred.intensity, truth.intensity);
    let n = pred.hdr.pixels.len().max(1) as f64;
    let hdr_recon = pred.hdr.pixels.iter().zip(&truth.hdr.pixels).map(|(p, t)| log_l2(*p, *t)).sum::<f64>() / n;
    let ldr_recon = pred
        .hdr
        .pixels
        .iter()
        .zip(&truth.ldr.pixels)
        .map(|(p, t)| {
            let m = p.map(oetf_unchecked);
            (m.r - t.r).abs() + (m.g - t.g).abs() + (m.b - t.b).abs()
        })
        .sum::<f64>()
        / n;
    Ok(Stage1Losses { dir, int, hdr_recon, ldr_recon, total: stage1_total([dir, int, hdr_recon, ldr_recon]) })
}

pub fn sky_losses_stage2(pred: &SkySample, truth: &SkySample) -> Result<Stage2Losses, SkyError> {
    let s1 = sky_losses_stage1(pred, truth)?;
    if pred.content.len() != truth.content.len() {
        return Err(SkyError::ShapeMismatch("content vectors"));
    }
    let content = if pred.content.is_empty() {
        0.0
    } else {
        pred.content.iter().zip(&truth.content).map(|(a, b)| (a - b).abs()).sum::<f64>() / pred.content.len() as f64
    };
    Ok(Stage2Losses {
        dir: s1.dir,
        int: s1.int,
        content,
        hdr_recon: s1.hdr_recon,
        ldr_recon: s1.ldr_recon,
        total: stage2_total([s1.dir, s1.int, content, s1.hdr_recon, s1.ldr_recon]),
    })
}

/// Draws the (blue gain, red divisor) pair for `seed`, each in `[1.2, 1.3]`.
pub fn white_balance_factors(seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u1 = rng.gen_range(1.2..=1.3);
    let u2 = rng.gen_range(1.2..=1.3);
    (u1, u2)
}

/// Scales blue by `blue_gain` and divides red by `red_divisor`.
pub fn white_balance_with(map: &EnvironmentMap, blue_gain: f64, red_divisor: f64) -> EnvironmentMap {
    EnvironmentMap {
        width: map.width,
        height: map.height,
        pixels: map.pixels.iter().map(|p| Rgb::new(p.r / red_divisor, p.g, p.b * blue_gain)).collect(),
    }
}

pub fn white_balance_augment(map: &EnvironmentMap, seed: u64) -> EnvironmentMap {
    let (u1, u2) = white_balance_factors(seed);
    white_balance_with(map, u1, u2)
}
