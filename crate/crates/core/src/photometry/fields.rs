//! Analytic radiance fields standing in for a trained reconstruction.

use alloc::vec::Vec;


use serde::{Deserialize, Serialize};

use crate::camera::Ray;
use crate::image::Rgb;
use crate::math::Vec3;

/// Radiance and density at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSample {
    pub radiance: Rgb,
    pub density: f64,
}

impl FieldSample {
    pub const EMPTY: FieldSample = FieldSample { radiance: Rgb::BLACK, density: 0.0 };
}

/// A queryable `(position, direction) → (HDR radiance, density)` field.
///
/// Queries must be deterministic and return finite, nonnegative values.
pub trait RadianceField {
    fn query(&self, position: Vec3, direction: Vec3) -> FieldSample;

    fn bounds(&self) -> Aabb;

    /// Ray distances in `[t0, t1]` where the field may be discontinuous.
    /// Fields that are piecewise constant between breakpoints report them so
    /// renderers can integrate them exactly.
    fn breakpoints(&self, _ray: &Ray, _t0: f64, _t1: f64) -> Option<Vec<f64>> {
        None
    }
}

impl<F: RadianceField + ?Sized> RadianceField for &F {
    fn query(&self, position: Vec3, direction: Vec3) -> FieldSample {
        (**self).query(position, direction)
    }
    fn bounds(&self) -> Aabb {
        (**self).bounds()
    }
    fn breakpoints(&self, ray: &Ray, t0: f64, t1: f64) -> Option<Vec<f64>> {
        (**self).breakpoints(ray, t0, t1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: Vec3::splat(f64::INFINITY),
        max: Vec3::splat(f64::NEG_INFINITY),
    };

    pub fn new(min: Vec3, max: Vec3) -> Self {
        Aabb { min, max }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z
    }

    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb {
            min: Vec3::new(self.min.x.min(o.min.x), self.min.y.min(o.min.y), self.min.z.min(o.min.z)),
            max: Vec3::new(self.max.x.max(o.max.x), self.max.y.max(o.max.y), self.max.z.max(o.max.z)),
        }
    }

    /// Slab test; returns the parametric range `[t_enter, t_exit]` clipped to
    /// `t ≥ 0`, or `None` when the ray misses.
    pub fn intersect(&self, ray: &Ray) -> Option<(f64, f64)> {
        if self.is_empty() {
            return None;
        }
        let mut t0: f64 = 0.0;
        let mut t1 = f64::INFINITY;
        for axis in 0..3 {
            let o = ray.origin[axis];
            let d = ray.direction[axis];
            let (lo, hi) = (self.min[axis], self.max[axis]);
            if d == 0.0 {
                if o < lo || o > hi {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / d;
            let (mut a, mut b) = ((lo - o) * inv, (hi - o) * inv);
            if a > b {
                core::mem::swap(&mut a, &mut b);
            }
            t0 = t0.max(a);
            t1 = t1.min(b);
            if t0 > t1 {
                return None;
            }
        }
        Some((t0, t1))
    }
}

/// Empty space.
#[derive(Clone, Copy, Debug, Default)]
pub struct Vacuum;

impl RadianceField for Vacuum {
    fn query(&self, _: Vec3, _: Vec3) -> FieldSample {
        FieldSample::EMPTY
    }
    fn bounds(&self) -> Aabb {
        Aabb::EMPTY
    }
}

/// Constant density and radiance inside a box, vacuum outside.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousBox {
    pub bounds: Aabb,
    pub density: f64,
    pub radiance: Rgb,
}

impl RadianceField for HomogeneousBox {
    fn query(&self, p: Vec3, _: Vec3) -> FieldSample {
        if self.bounds.contains(p) {
            FieldSample { radiance: self.radiance, density: self.density }
        } else {
            FieldSample::EMPTY
        }
    }
    fn bounds(&self) -> Aabb {
        self.bounds
    }
    fn breakpoints(&self, ray: &Ray, t0: f64, t1: f64) -> Option<Vec<f64>> {
        Some(box_breakpoints(core::iter::once(&self.bounds), ray, t0, t1))
    }
}

/// Two adjacent homogeneous slabs stacked along +x, spanning `[x0, x1]` and
/// `[x1, x2]` over a shared y/z extent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoSlab {
    pub near: HomogeneousBox,
    pub far: HomogeneousBox,
}

impl TwoSlab {
    pub fn along_x(x: [f64; 3], half_extent: f64, near: (f64, Rgb), far: (f64, Rgb)) -> Self {
        let lo = Vec3::new(0.0, -half_extent, -half_extent);
        let hi = Vec3::new(0.0, half_extent, half_extent);
        TwoSlab {
            near: HomogeneousBox {
                bounds: Aabb::new(Vec3 { x: x[0], ..lo }, Vec3 { x: x[1], ..hi }),
                density: near.0,
                radiance: near.1,
            },
            far: HomogeneousBox {
                bounds: Aabb::new(Vec3 { x: x[1], ..lo }, Vec3 { x: x[2], ..hi }),
                density: far.0,
                radiance: far.1,
            },
        }
    }
}

impl RadianceField for TwoSlab {
    fn query(&self, p: Vec3, d: Vec3) -> FieldSample {
        // shared face belongs to the near slab
        let s = self.near.query(p, d);
        if s.density > 0.0 || self.near.bounds.contains(p) {
            s
        } else {
            self.far.query(p, d)
        }
    }
    fn bounds(&self) -> Aabb {
        self.near.bounds.union(&self.far.bounds)
    }
    fn breakpoints(&self, ray: &Ray, t0: f64, t1: f64) -> Option<Vec<f64>> {
        Some(box_breakpoints([&self.near.bounds, &self.far.bounds].into_iter(), ray, t0, t1))
    }
}

/// Sphere with constant density whose radiance falls off linearly from the
/// center to zero at the surface.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialEmitter {
    pub center: Vec3,
    pub radius: f64,
    pub density: f64,
    pub peak_radiance: Rgb,
}

impl RadianceField for RadialEmitter {
    fn query(&self, p: Vec3, _: Vec3) -> FieldSample {
        let r = p.distance(self.center);
        if r > self.radius {
            return FieldSample::EMPTY;
        }
        FieldSample { radiance: self.peak_radiance * (1.0 - r / self.radius), density: self.density }
    }
    fn bounds(&self) -> Aabb {
        let e = Vec3::splat(self.radius);
        Aabb::new(self.center - e, self.center + e)
    }
}

/// Union of homogeneous boxes; overlapping densities add and radiance is the
/// density-weighted mean.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoxField {
    pub boxes: Vec<HomogeneousBox>,
}

impl BoxField {
    /// Index of the first box, in ray order, whose interior the ray enters.
    pub fn first_hit(&self, ray: &Ray) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, b) in self.boxes.iter().enumerate() {
            if b.density <= 0.0 {
                continue;
            }
            if let Some((t0, _)) = b.bounds.intersect(ray) {
                if best.map_or(true, |(_, bt)| t0 < bt) {
                    best = Some((i, t0));
                }
            }
        }
        best
    }
}

impl RadianceField for BoxField {
    fn query(&self, p: Vec3, d: Vec3) -> FieldSample {
        let mut density = 0.0;
        let mut weighted = Rgb::BLACK;
        for b in &self.boxes {
            let s = b.query(p, d);
            density += s.density;
            weighted += s.radiance * s.density;
        }
        if density > 0.0 {
            FieldSample { radiance: weighted * (1.0 / density), density }
        } else {
            FieldSample::EMPTY
        }
    }
    fn bounds(&self) -> Aabb {
        self.boxes.iter().fold(Aabb::EMPTY, |acc, b| acc.union(&b.bounds))
    }
    fn breakpoints(&self, ray: &Ray, t0: f64, t1: f64) -> Option<Vec<f64>> {
        Some(box_breakpoints(self.boxes.iter().map(|b| &b.bounds), ray, t0, t1))
    }
}

fn box_breakpoints<'a>(boxes: impl Iterator<Item = &'a Aabb>, ray: &Ray, t0: f64, t1: f64) -> Vec<f64> {
    let mut ts = Vec::new();
    for b in boxes {
        if let Some((a, c)) = b.intersect(ray) {
            for t in [a, c] {
                if t > t0 && t < t1 {
                    ts.push(t);
                }
            }
        }
    }
    ts.sort_by(|a, b| a.total_cmp(b));
    ts.dedup();
    ts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slab_test_hits_and_misses() {
        let b = Aabb::new(Vec3::new(1.0, -1.0, -1.0), Vec3::new(3.0, 1.0, 1.0));
        let hit = b.intersect(&Ray::new(Vec3::ZERO, Vec3::X)).unwrap();
        assert_eq!(hit, (1.0, 3.0));
        assert!(b.intersect(&Ray::new(Vec3::ZERO, -Vec3::X)).is_none());
        assert!(b.intersect(&Ray::new(Vec3::new(0.0, 2.0, 0.0), Vec3::X)).is_none());
        let inside = b.intersect(&Ray::new(Vec3::new(2.0, 0.0, 0.0), Vec3::X)).unwrap();
        assert_eq!(inside, (0.0, 1.0));
    }

    #[test]
    fn box_field_first_hit_orders_by_distance() {
        let mk = |x0: f64| HomogeneousBox {
            bounds: Aabb::new(Vec3::new(x0, -1.0, -1.0), Vec3::new(x0 + 1.0, 1.0, 1.0)),
            density: 1.0,
            radiance: Rgb::gray(1.0),
        };
        let f = BoxField { boxes: alloc::vec![mk(5.0), mk(2.0)] };
        assert_eq!(f.first_hit(&Ray::new(Vec3::ZERO, Vec3::X)), Some((1, 2.0)));
    }
}
