//! Pixel buffers: linear RGB, scalar planes and label planes.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, AddAssign, Mul};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Rgb {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl From<[f64; 3]> for Rgb {
    fn from(a: [f64; 3]) -> Self {
        Rgb::new(a[0], a[1], a[2])
    }
}

impl From<Rgb> for [f64; 3] {
    fn from(c: Rgb) -> Self {
        [c.r, c.g, c.b]
    }
}

impl Rgb {
    pub const BLACK: Rgb = Rgb { r: 0.0, g: 0.0, b: 0.0 };

    pub const fn new(r: f64, g: f64, b: f64) -> Self {
        Rgb { r, g, b }
    }

    pub const fn gray(v: f64) -> Self {
        Rgb { r: v, g: v, b: v }
    }

    pub fn map(self, f: impl Fn(f64) -> f64) -> Rgb {
        Rgb::new(f(self.r), f(self.g), f(self.b))
    }

    pub fn zip(self, o: Rgb, f: impl Fn(f64, f64) -> f64) -> Rgb {
        Rgb::new(f(self.r, o.r), f(self.g, o.g), f(self.b, o.b))
    }

    pub fn channels(self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }

    pub fn is_finite(self) -> bool {
        self.r.is_finite() && self.g.is_finite() && self.b.is_finite()
    }

    pub fn is_nonnegative(self) -> bool {
        self.r >= 0.0 && self.g >= 0.0 && self.b >= 0.0
    }

    pub fn is_zero(self) -> bool {
        self.r == 0.0 && self.g == 0.0 && self.b == 0.0
    }

    pub fn max_channel(self) -> f64 {
        self.r.max(self.g).max(self.b)
    }

    pub fn luminance(self) -> f64 {
        0.2126 * self.r + 0.7152 * self.g + 0.0722 * self.b
    }
}

impl Add for Rgb {
    type Output = Rgb;
    fn add(self, o: Rgb) -> Rgb {
        Rgb::new(self.r + o.r, self.g + o.g, self.b + o.b)
    }
}

impl AddAssign for Rgb {
    fn add_assign(&mut self, o: Rgb) {
        *self = *self + o;
    }
}

impl Mul<f64> for Rgb {
    type Output = Rgb;
    fn mul(self, s: f64) -> Rgb {
        Rgb::new(self.r * s, self.g * s, self.b * s)
    }
}

impl Mul<Rgb> for Rgb {
    type Output = Rgb;
    fn mul(self, o: Rgb) -> Rgb {
        Rgb::new(self.r * o.r, self.g * o.g, self.b * o.b)
    }
}

/// Row-major image of `T` with `width × height` pixels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plane<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

pub type RgbImage = Plane<Rgb>;
pub type ScalarImage = Plane<f64>;
pub type LabelImage = Plane<u16>;

impl<T: Clone> Plane<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Plane { width, height, data: vec![value; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Plane { width, height, data }
    }

    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: T) {
        self.data[y * self.width + x] = v;
    }

    pub fn same_size<U>(&self, o: &Plane<U>) -> bool {
        self.width == o.width && self.height == o.height
    }

    pub fn size(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

/// Quantizes a display-referred value in [0, 1] to 8 bits.
pub fn quantize_u8(v: f64) -> u8 {
    let c = v.clamp(0.0, 1.0) * 255.0;
    // round half up without std's f64::round
    let q = (c + 0.5) as u32;
    q.min(255) as u8
}

impl RgbImage {
    /// Interleaved 8-bit RGB bytes, assuming display-referred values.
    pub fn to_rgb8(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.data.len() * 3);
        for p in &self.data {
            out.push(quantize_u8(p.r));
            out.push(quantize_u8(p.g));
            out.push(quantize_u8(p.b));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantize_endpoints() {
        assert_eq!(quantize_u8(0.0), 0);
        assert_eq!(quantize_u8(1.0), 255);
        assert_eq!(quantize_u8(2.0), 255);
        assert_eq!(quantize_u8(-1.0), 0);
        assert_eq!(quantize_u8(0.5), 128);
    }
}
