//! Exposure-normalized HDR volume rendering and its display pipeline.
//!
//! A pixel is `f(Δt) · Σ_k T_k α_k e_k` with `α_k = 1 − exp(−σ_k δ_k)`,
//! `T_k = Π_{i<k} (1 − α_i)` and `f(Δt) = 1 + ε(Δt − μ)/σ`.

pub mod fields;

use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;
use thiserror::Error;

use crate::camera::{pixel_ray_with_pose, project, Ray};
use crate::image::Rgb;
use crate::scene::{CameraModel, CameraRig, ExposureStats};
use fields::RadianceField;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhotometryError {
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("sampling interval {0} is not positive")]
    BadInterval(f64),
    #[error("negative HDR input {0}")]
    NegativeInput(f64),
    #[error("LDR input {0} outside [0, 1]")]
    LdrOutOfRange(f64),
    #[error("pixel sets differ in length ({rendered} rendered vs {reference} reference)")]
    LengthMismatch { rendered: usize, reference: usize },
    #[error("seam check needs at least two cameras")]
    TooFewCameras,
    #[error("no camera pair in the rig shares an overlapping boundary")]
    NoOverlap,
    #[error("exposure factor {0} for camera '{1}' is not positive")]
    NonPositiveFactor(f64, String),
}

/// Exposure normalization `f(Δt) = 1 + ε(Δt − μ)/σ`; exactly 1 when σ = 0.
pub fn exposure_factor(dt: f64, stats: &ExposureStats) -> f64 {
    if stats.std == 0.0 {
        return 1.0;
    }
    1.0 + stats.epsilon * (dt - stats.mean) / stats.std
}

/// How to place samples along a ray inside the field bounds.
#[derive(Clone, Debug, PartialEq)]
pub enum RaySampling {
    /// `K` equal intervals spanning the bounds intersection.
    Uniform(usize),
    /// Explicit intervals starting where the ray enters the bounds.
    Intervals(Vec<f64>),
    /// `K` equal intervals inside every piece between the field's
    /// breakpoints; falls back to `Uniform(K)` for fields without them.
    Piecewise(usize),
}

impl RaySampling {
    pub fn uniform(k: usize) -> Result<Self, PhotometryError> {
        if k == 0 {
            return Err(PhotometryError::NoSamples);
        }
        Ok(RaySampling::Uniform(k))
    }

    pub fn intervals(deltas: Vec<f64>) -> Result<Self, PhotometryError> {
        if deltas.is_empty() {
            return Err(PhotometryError::NoSamples);
        }
        if let Some(&d) = deltas.iter().find(|d| !(**d > 0.0)) {
            return Err(PhotometryError::BadInterval(d));
        }
        Ok(RaySampling::Intervals(deltas))
    }

    pub fn piecewise(k: usize) -> Result<Self, PhotometryError> {
        if k == 0 {
            return Err(PhotometryError::NoSamples);
        }
        Ok(RaySampling::Piecewise(k))
    }

    /// `(start distance, interval)` pairs for a ray entering at `t0` and
    /// leaving at `t1`.
    fn segments<F: RadianceField + ?Sized>(&self, field: &F, ray: &Ray, t0: f64, t1: f64) -> Vec<(f64, f64)> {
        let uniform = |a: f64, b: f64, k: usize, out: &mut Vec<(f64, f64)>| {
            let d = (b - a) / k as f64;
            if d > 0.0 {
                out.extend((0..k).map(|i| (a + i as f64 * d, d)));
            }
        };
        let mut out = Vec::new();
        match self {
            RaySampling::Uniform(k) => uniform(t0, t1, *k, &mut out),
            RaySampling::Intervals(deltas) => {
                let mut t = t0;
                for &d in deltas {
                    out.push((t, d));
                    t += d;
                }
            }
            RaySampling::Piecewise(k) => match field.breakpoints(ray, t0, t1) {
                Some(bps) => {
                    let mut a = t0;
                    for b in bps.into_iter().chain(core::iter::once(t1)) {
                        uniform(a, b, *k, &mut out);
                        a = b;
                    }
                }
                None => uniform(t0, t1, *k, &mut out),
            },
        }
        out
    }
}

/// Result of integrating one ray.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderedRay {
    /// `f(Δt) · Σ T_k α_k e_k`.
    pub radiance: Rgb,
    /// Transmittance after the last sample, `T_{K+1}`.
    pub transmittance: f64,
    /// `Σ T_k α_k`, the accumulated opacity.
    pub opacity: f64,
    /// Opacity-weighted mean sample distance, when anything was hit.
    pub depth: Option<f64>,
}

impl RenderedRay {
    pub const MISS: RenderedRay = RenderedRay { radiance: Rgb::BLACK, transmittance: 1.0, opacity: 0.0, depth: None };
}

/// Integrates `field` along `ray` and scales by the exposure factor `factor`.
pub fn render_ray_scaled<F: RadianceField + ?Sized>(
    ray: &Ray,
    field: &F,
    sampling: &RaySampling,
    factor: f64,
) -> RenderedRay {
    let Some((t0, t1)) = field.bounds().intersect(ray) else {
        return RenderedRay::MISS;
    };
    let mut transmittance = 1.0;
    let mut acc = Rgb::BLACK;
    let mut opacity = 0.0;
    let mut depth_acc = 0.0;
    for (start, delta) in sampling.segments(field, ray, t0, t1) {
        let t_mid = start + 0.5 * delta;
        let s = field.query(ray.at(t_mid), ray.direction);
        let alpha = -(-s.density * delta).exp_m1();
        let w = transmittance * alpha;
        acc += s.radiance * w;
        opacity += w;
        depth_acc += w * t_mid;
        transmittance *= 1.0 - alpha;
    }
    RenderedRay {
        radiance: acc * factor,
        transmittance,
        opacity,
        depth: if opacity > 0.0 { Some(depth_acc / opacity) } else { None },
    }
}

/// Renders one ray as seen by a camera with exposure `dt`.
pub fn render_ray<F: RadianceField + ?Sized>(
    ray: &Ray,
    field: &F,
    sampling: &RaySampling,
    dt: f64,
    stats: &ExposureStats,
) -> RenderedRay {
    render_ray_scaled(ray, field, sampling, exposure_factor(dt, stats))
}

// Linear segment ends where it meets the power segment, which keeps the
// curve continuous and exactly invertible.
const SRGB_LINEAR_MAX: f64 = 0.003_130_668_442_500_568_6;
const SRGB_ENCODED_LINEAR_MAX: f64 = 12.92 * SRGB_LINEAR_MAX;

/// sRGB opto-electronic transfer function; values above 1 clip to 1.
pub fn oetf(x: f64) -> Result<f64, PhotometryError> {
    if !(x >= 0.0) {
        return Err(PhotometryError::NegativeInput(x));
    }
    Ok(oetf_unchecked(x))
}

pub(crate) fn oetf_unchecked(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    if x == 1.0 {
        1.0
    } else if x <= SRGB_LINEAR_MAX {
        12.92 * x
    } else {
        1.055 * x.powf(1.0 / 2.4) - 0.055
    }
}

/// Inverse of [`oetf`] on `[0, 1]`.
pub fn inverse_oetf(y: f64) -> Result<f64, PhotometryError> {
    if !(0.0..=1.0).contains(&y) {
        return Err(PhotometryError::LdrOutOfRange(y));
    }
    Ok(if y <= SRGB_ENCODED_LINEAR_MAX {
        y / 12.92
    } else {
        ((y + 0.055) / 1.055).powf(2.4)
    })
}

pub fn oetf_pixel(p: Rgb) -> Result<Rgb, PhotometryError> {
    Ok(Rgb::new(oetf(p.r)?, oetf(p.g)?, oetf(p.b)?))
}

pub fn inverse_oetf_pixel(p: Rgb) -> Result<Rgb, PhotometryError> {
    Ok(Rgb::new(inverse_oetf(p.r)?, inverse_oetf(p.g)?, inverse_oetf(p.b)?))
}

/// Mean squared error between `OETF(rendered)` and `reference`, averaged
/// over rays and channels.
pub fn photometric_loss(rendered: &[Rgb], reference: &[Rgb]) -> Result<f64, PhotometryError> {
    if rendered.len() != reference.len() {
        return Err(PhotometryError::LengthMismatch { rendered: rendered.len(), reference: reference.len() });
    }
    if rendered.is_empty() {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for (hdr, ldr) in rendered.iter().zip(reference) {
        let mapped = oetf_pixel(*hdr)?;
        for (a, b) in mapped.channels().into_iter().zip(ldr.channels()) {
            acc += (a - b) * (a - b);
        }
    }
    Ok(acc / (3 * rendered.len()) as f64)
}

/// Brightness agreement across the shared boundary of two cameras.
#[derive(Clone, Debug, PartialEq)]
pub struct SeamReport {
    pub camera_a: String,
    pub camera_b: String,
    pub samples: usize,
    /// `mean(I_b) / mean(I_a)` of the exposure-scaled renders.
    pub raw_ratio: f64,
    /// Same ratio after dividing each render by its camera's `f(Δt)`.
    pub normalized_ratio: f64,
    /// Both sides rendered black; ratios are reported as 1.
    pub degenerate: bool,
}

fn boundary_pixels(cam: &CameraModel) -> impl Iterator<Item = (f64, f64)> + '_ {
    let w = cam.image_size.width as f64;
    let h = cam.image_size.height;
    (0..h).flat_map(move |row| {
        let v = row as f64 + 0.5;
        [(0.5, v), (w - 0.5, v)]
    })
}

/// Renders the boundary columns every camera shares with another and
/// compares brightness with and without exposure normalization.
pub fn seam_check<F: RadianceField + ?Sized>(
    rig: &CameraRig,
    field: &F,
    stats: &ExposureStats,
    sampling: &RaySampling,
) -> Result<Vec<SeamReport>, PhotometryError> {
    if rig.cameras.len() < 2 {
        return Err(PhotometryError::TooFewCameras);
    }
    let factor = |cam: &CameraModel| {
        let f = exposure_factor(cam.exposure, stats);
        if f > 0.0 {
            Ok(f)
        } else {
            Err(PhotometryError::NonPositiveFactor(f, cam.id.clone()))
        }
    };

    let mut reports = Vec::new();
    for (i, a) in rig.cameras.iter().enumerate() {
        for b in rig.cameras.iter().skip(i + 1) {
            let (fa, fb) = (factor(a)?, factor(b)?);
            let mut sums = [0.0f64; 4];
            let mut samples = 0usize;
            let sides = boundary_pixels(a).map(|p| (true, p)).chain(boundary_pixels(b).map(|p| (false, p)));
            for (on_a, (u, v)) in sides {
                // boundary pixels of one camera that the other camera also sees
                let (owner, other) = if on_a { (a, b) } else { (b, a) };
                let Ok(ray_owner) = pixel_ray_with_pose(owner, &owner.extrinsic, u, v) else { continue };
                let far = ray_owner.at(1.0e3);
                let Some((ou, ov)) = project(other, &other.extrinsic, far) else { continue };
                let (ow, oh) = (other.image_size.width as f64, other.image_size.height as f64);
                if !(0.0..=ow).contains(&ou) || !(0.0..=oh).contains(&ov) {
                    continue;
                }
                let ray_other = if other.extrinsic.translation == owner.extrinsic.translation {
                    ray_owner
                } else {
                    Ray::new(other.extrinsic.translation, far - other.extrinsic.translation)
                };
                let (ray_a, ray_b) = if on_a { (ray_owner, ray_other) } else { (ray_other, ray_owner) };
                let ia = render_ray_scaled(&ray_a, field, sampling, fa).radiance;
                let ib = render_ray_scaled(&ray_b, field, sampling, fb).radiance;
                let (sa, sb) = (ia.r + ia.g + ia.b, ib.r + ib.g + ib.b);
                sums[0] += sa;
                sums[1] += sb;
                sums[2] += sa / fa;
                sums[3] += sb / fb;
                samples += 1;
            }
            if samples == 0 {
                continue;
            }
            let degenerate = sums[0] == 0.0 && sums[1] == 0.0;
            let (raw_ratio, normalized_ratio) =
                if degenerate { (1.0, 1.0) } else { (sums[1] / sums[0], sums[3] / sums[2]) };
            reports.push(SeamReport {
                camera_a: a.id.clone(),
                camera_b: b.id.clone(),
                samples,
                raw_ratio,
                normalized_ratio,
                degenerate,
            });
        }
    }
    if reports.is_empty() {
        return Err(PhotometryError::NoOverlap);
    }
    Ok(reports)
}
