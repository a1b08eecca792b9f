//! Location-dependent environment lighting: radiance-field probes blended with
//! the skydome, plus a Lambertian shader for composited vehicles.

use alloc::vec::Vec;


use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{equirect_dir_unchecked, equirect_solid_angle, Ray};
use crate::image::Rgb;
use crate::math::{Vec3, PI};
use crate::photometry::fields::RadianceField;
use crate::photometry::{render_ray_scaled, RaySampling};
use crate::skydome::EnvironmentMap;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LightingError {
    #[error("probe resolution {h}x{w} is below 2x2")]
    TooSmall { h: usize, w: usize },
    #[error("sky {sky_h}x{sky_w} cannot be matched to probe {h}x{w}")]
    ResolutionMismatch { h: usize, w: usize, sky_h: usize, sky_w: usize },
}

/// Surrounding radiance and sky visibility captured at one position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LightingProbe {
    pub position: Vec3,
    pub surround: EnvironmentMap,
    /// Final transmittance per equirect pixel, row-major.
    pub transmittance: Vec<f64>,
}

impl LightingProbe {
    pub fn height(&self) -> usize {
        self.surround.height
    }

    pub fn width(&self) -> usize {
        self.surround.width
    }
}

/// Renders one exposure-free ray per equirect pixel from `origin`.
pub fn capture_surround<F: RadianceField + ?Sized>(
    origin: Vec3,
    field: &F,
    sampling: &RaySampling,
    h: usize,
    w: usize,
) -> Result<LightingProbe, LightingError> {
    if h < 2 || w < 2 {
        return Err(LightingError::TooSmall { h, w });
    }
    let mut surround = EnvironmentMap::filled(h, w, Rgb::BLACK);
    let mut transmittance = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let ray = Ray::new(origin, equirect_dir_unchecked(r, c, h, w));
            let out = render_ray_scaled(&ray, field, sampling, 1.0);
            surround.set(r, c, out.radiance);
            transmittance.push(out.transmittance.clamp(0.0, 1.0));
        }
    }
    Ok(LightingProbe { position: origin, surround, transmittance })
}

/// `I_env = I_surround + T · I_sky`, resampling the sky to the probe grid.
pub fn blend_environment(probe: &LightingProbe, sky: &EnvironmentMap) -> Result<EnvironmentMap, LightingError> {
    let (h, w) = (probe.height(), probe.width());
    let sky = sky.resample(h, w);
    if sky.pixels.len() != h * w || probe.transmittance.len() != h * w {
        return Err(LightingError::ResolutionMismatch { h, w, sky_h: sky.height, sky_w: sky.width });
    }
    let pixels = probe
        .surround
        .pixels
        .iter()
        .zip(&probe.transmittance)
        .zip(&sky.pixels)
        .map(|((s, t), k)| *s + *k * *t)
        .collect();
    Ok(EnvironmentMap { width: w, height: h, pixels })
}

/// `albedo/π · Σ L(d)·max(0, n·d)·dΩ` over the equirect pixels.
pub fn shade_lambertian(normal: Vec3, albedo: Rgb, env: &EnvironmentMap) -> Rgb {
    let (h, w) = (env.height, env.width);
    let mut irradiance = Rgb::BLACK;
    for r in 0..h {
        let d_omega = equirect_solid_angle(r, h, w);
        for c in 0..w {
            let cos = normal.dot(equirect_dir_unchecked(r, c, h, w));
            if cos > 0.0 {
                irradiance += env.get(r, c) * (cos * d_omega);
            }
        }
    }
    albedo * irradiance * (1.0 / PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photometry::fields::{Aabb, HomogeneousBox, TwoSlab, Vacuum};

    #[test]
    fn vacuum_probe() {
        let p = capture_surround(Vec3::ZERO, &Vacuum, &RaySampling::Uniform(8), 8, 16).unwrap();
        assert!(p.surround.pixels.iter().all(|x| x.is_zero()));
        assert!(p.transmittance.iter().all(|t| *t == 1.0));
    }

    #[test]
    fn wall_covers_forward_hemisphere() {
        let wall = TwoSlab::along_x([0.5, 1.0, 50.0], 1e4, (0.0, Rgb::BLACK), (5.0, Rgb::gray(3.0)));
        let (h, w) = (16, 32);
        let p = capture_surround(Vec3::ZERO, &wall, &RaySampling::Piecewise(16), h, w).unwrap();
        let fwd = (h / 2) * w;
        assert!(p.transmittance[fwd] < 1e-6);
        assert!((p.surround.pixels[fwd].r - 3.0).abs() < 1e-6);
        let back = (h / 2) * w + w / 2;
        assert_eq!(p.transmittance[back], 1.0);
        assert!(p.surround.pixels[back].is_zero());
    }

    #[test]
    fn enclosure_blocks_everything() {
        let b = HomogeneousBox {
            bounds: Aabb::new(Vec3::splat(-5.0), Vec3::splat(5.0)),
            density: 10.0,
            radiance: Rgb::gray(0.2),
        };
        let p = capture_surround(Vec3::ZERO, &b, &RaySampling::Uniform(32), 8, 16).unwrap();
        assert!(p.transmittance.iter().all(|t| *t < 1e-6));
    }

    #[test]
    fn blend_arithmetic() {
        let probe = LightingProbe {
            position: Vec3::ZERO,
            surround: EnvironmentMap::filled(4, 8, Rgb::gray(1.0)),
            transmittance: alloc::vec![0.5; 32],
        };
        let out = blend_environment(&probe, &EnvironmentMap::filled(4, 8, Rgb::gray(2.0))).unwrap();
        assert!(out.pixels.iter().all(|p| *p == Rgb::gray(2.0)));
    }

    #[test]
    fn uniform_sky_shading() {
        let env = EnvironmentMap::filled(128, 256, Rgb::gray(2.0));
        let albedo = Rgb::new(0.3, 0.5, 0.7);
        for n in [Vec3::Z, Vec3::X, Vec3::new(1.0, -1.0, 0.3).normalized()] {
            let s = shade_lambertian(n, albedo, &env);
            for (got, a) in s.channels().into_iter().zip(albedo.channels()) {
                assert!((got - 2.0 * a).abs() < 1e-2, "{n:?}: {got}");
            }
        }
    }

    #[test]
    fn lower_hemisphere_does_not_light_up_normal() {
        let env = EnvironmentMap::from_fn(16, 32, |r, _| if r >= 8 { Rgb::gray(1.0) } else { Rgb::BLACK });
        assert_eq!(shade_lambertian(Vec3::Z, Rgb::gray(1.0), &env), Rgb::BLACK);
    }
}
