//! Foreground/background composition with patch-depth occlusion and shadow
//! darkening.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::{LabelImage, Plane, Rgb, RgbImage, ScalarImage};
use crate::math::Vec2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompositeError {
    #[error("image size mismatch: {0}")]
    SizeMismatch(&'static str),
    #[error("no frames to assemble")]
    NoFrames,
    #[error("frame {index} is {got:?}, expected {expected:?}")]
    SizeDrift { index: usize, got: (usize, usize), expected: (usize, usize) },
    #[error("fps must be positive")]
    BadFps,
}

/// Rendered foreground passes: color, coverage, depth and shadow catcher.
#[derive(Clone, Debug, PartialEq)]
pub struct ForegroundLayer {
    pub rgb: RgbImage,
    pub alpha: ScalarImage,
    /// Meters; infinite where nothing was rendered.
    pub depth: ScalarImage,
    /// 1 where no shadow falls.
    pub shadow: ScalarImage,
}

impl ForegroundLayer {
    pub fn empty(width: usize, height: usize) -> Self {
        ForegroundLayer {
            rgb: Plane::filled(width, height, Rgb::BLACK),
            alpha: Plane::filled(width, height, 0.0),
            depth: Plane::filled(width, height, f64::INFINITY),
            shadow: Plane::filled(width, height, 1.0),
        }
    }

    pub fn size(&self) -> (usize, usize) {
        self.rgb.size()
    }

    fn check(&self) -> Result<(), CompositeError> {
        if !self.rgb.same_size(&self.alpha) || !self.rgb.same_size(&self.depth) || !self.rgb.same_size(&self.shadow) {
            return Err(CompositeError::SizeMismatch("foreground passes"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseDepth {
    pub u: u32,
    pub v: u32,
    pub depth: f64,
}

/// Sparse depth samples and segmentation of the background.
#[derive(Clone, Debug, PartialEq)]
pub struct BackgroundDepth {
    pub sparse: Vec<SparseDepth>,
    pub masks: LabelImage,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PatchDepths {
    pub depths: BTreeMap<u16, f64>,
    /// Labels present in the mask with no depth sample.
    pub unknown: BTreeSet<u16>,
}

impl PatchDepths {
    pub fn get(&self, label: u16) -> Option<f64> {
        self.depths.get(&label).copied()
    }
}

/// Mean sparse depth per segmentation label.
pub fn patch_depths(sparse: &[SparseDepth], masks: &LabelImage) -> PatchDepths {
    let mut acc: BTreeMap<u16, (f64, usize)> = BTreeMap::new();
    for s in sparse {
        let (u, v) = (s.u as usize, s.v as usize);
        if u >= masks.width || v >= masks.height {
            continue;
        }
        let e = acc.entry(*masks.get(u, v)).or_insert((0.0, 0));
        e.0 += s.depth;
        e.1 += 1;
    }
    let depths: BTreeMap<u16, f64> = acc.into_iter().map(|(k, (sum, n))| (k, sum / n as f64)).collect();
    let unknown = masks.data.iter().copied().filter(|l| !depths.contains_key(l)).collect();
    PatchDepths { depths, unknown }
}

/// Per pixel: `b' = bg·shadow`; the foreground is blended over `b'` where it
/// has coverage and is nearer than the pixel's patch (or the patch depth is
/// unknown).
pub fn composite(fg: &ForegroundLayer, bg: &RgbImage, bg_depth: &BackgroundDepth) -> Result<RgbImage, CompositeError> {
    fg.check()?;
    if !fg.rgb.same_size(bg) || !bg.same_size(&bg_depth.masks) {
        return Err(CompositeError::SizeMismatch("foreground, background and mask"));
    }
    let patches = patch_depths(&bg_depth.sparse, &bg_depth.masks);
    Ok(composite_with(fg, bg, &bg_depth.masks, &patches))
}

pub fn composite_with(fg: &ForegroundLayer, bg: &RgbImage, masks: &LabelImage, patches: &PatchDepths) -> RgbImage {
    let mut out = bg.clone();
    for i in 0..bg.data.len() {
        let shaded = bg.data[i] * fg.shadow.data[i];
        let a = fg.alpha.data[i];
        let visible = a > 0.0 && patches.get(masks.data[i]).map_or(true, |pd| fg.depth.data[i] < pd);
        out.data[i] = if visible { fg.rgb.data[i] * a + shaded * (1.0 - a) } else { shaded };
    }
    out
}

/// Directional box blur of the foreground along a screen-space displacement
/// of `velocity` pixels, using `taps` samples.
pub fn motion_blur(fg: &ForegroundLayer, velocity: Vec2, taps: usize) -> ForegroundLayer {
    if taps < 2 || velocity.norm() == 0.0 {
        return fg.clone();
    }
    let (w, h) = fg.size();
    let mut out = ForegroundLayer::empty(w, h);
    let clampi = |v: f64, hi: usize| -> usize {
        let r = v + 0.5;
        if r <= 0.0 {
            0
        } else {
            (r as usize).min(hi - 1)
        }
    };
    for y in 0..h {
        for x in 0..w {
            let mut a_sum = 0.0;
            let mut c_sum = Rgb::BLACK;
            let mut s_sum = 0.0;
            let mut depth = f64::INFINITY;
            for k in 0..taps {
                let f = k as f64 / (taps - 1) as f64 - 0.5;
                let sx = clampi(x as f64 - velocity.x * f, w);
                let sy = clampi(y as f64 - velocity.y * f, h);
                let a = *fg.alpha.get(sx, sy);
                a_sum += a;
                c_sum += *fg.rgb.get(sx, sy) * a;
                s_sum += *fg.shadow.get(sx, sy);
                if a > 0.0 {
                    depth = depth.min(*fg.depth.get(sx, sy));
                }
            }
            let n = taps as f64;
            out.alpha.set(x, y, a_sum / n);
            out.rgb.set(x, y, if a_sum > 0.0 { c_sum * (1.0 / a_sum) } else { Rgb::BLACK });
            out.shadow.set(x, y, s_sum / n);
            out.depth.set(x, y, depth);
        }
    }
    out
}

/// Description of a numbered frame sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoManifest {
    pub fps: f64,
    pub frame_count: usize,
    pub duration: f64,
    pub width: usize,
    pub height: usize,
    pub frames: Vec<String>,
}

pub fn frame_name(index: usize) -> String {
    format!("frame_{index:04}.png")
}

pub fn assemble_video(frames: &[RgbImage], fps: f64) -> Result<VideoManifest, CompositeError> {
    if !(fps > 0.0) {
        return Err(CompositeError::BadFps);
    }
    let first = frames.first().ok_or(CompositeError::NoFrames)?;
    for (index, f) in frames.iter().enumerate() {
        if !f.same_size(first) {
            return Err(CompositeError::SizeDrift { index, got: f.size(), expected: first.size() });
        }
    }
    Ok(VideoManifest {
        fps,
        frame_count: frames.len(),
        duration: frames.len() as f64 / fps,
        width: first.width,
        height: first.height,
        frames: (0..frames.len()).map(frame_name).collect(),
    })
}
