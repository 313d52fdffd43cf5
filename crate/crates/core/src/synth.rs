//! Procedural equirectangular HDRIs for calibration and tests.

use serde::{Deserialize, Serialize};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::HdrImage;
use crate::integrator::{dir_to_equirect, equirect_to_dir};
use crate::math::{Rgb, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthHdri {
    /// Sky gradient, dim ground and a 0.5° sun disc of radiance 1e4.
    SunSky,
    /// Dark textured room with three coloured soft boxes.
    Studio,
}

impl SynthHdri {
    pub const ALL: [SynthHdri; 2] = [SynthHdri::SunSky, SynthHdri::Studio];

    pub fn name(self) -> &'static str {
        match self {
            SynthHdri::SunSky => "sun_sky",
            SynthHdri::Studio => "studio",
        }
    }

    pub fn render(self, width: u32, height: u32) -> Result<HdrImage> {
        match self {
            SynthHdri::SunSky => sun_sky(width, height),
            SynthHdri::Studio => studio(width, height),
        }
    }
}

impl FromStr for SynthHdri {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sun_sky" => Ok(SynthHdri::SunSky),
            "studio" => Ok(SynthHdri::Studio),
            other => Err(Error::Config(format!("unknown synthetic HDRI '{other}'"))),
        }
    }
}

pub const SUN_RADIANCE: f32 = 1e4;
pub const SUN_DIAMETER_DEG: f32 = 0.5;
/// Sun position in equirectangular coordinates (30° elevation).
pub const SUN_UV: (f32, f32) = (0.3, 1.0 / 3.0);

fn sun_sky_radiance(d: Vec3, sun: Vec3) -> Rgb {
    let cos_sun = d.dot(sun);
    let cos_disc = (SUN_DIAMETER_DEG.to_radians() * 0.5).cos();
    if cos_sun >= cos_disc {
        return Rgb::new(1.0, 0.9, 0.75) * SUN_RADIANCE;
    }
    let angle = cos_sun.clamp(-1.0, 1.0).acos();
    let glow = Rgb::new(1.0, 0.75, 0.45) * (20.0 * (-angle / 0.08).exp());
    if d.y >= 0.0 {
        let t = d.y.sqrt();
        let horizon = Rgb::new(1.1, 1.0, 0.9);
        let zenith = Rgb::new(0.15, 0.3, 0.9);
        horizon * (1.0 - t) + zenith * t + glow
    } else {
        let t = (-d.y).min(1.0);
        Rgb::new(0.25, 0.2, 0.15) * (1.0 - 0.5 * t) + glow * 0.1
    }
}

fn supersampled(width: u32, height: u32, samples: impl Fn(u32, u32) -> u32, f: impl Fn(Vec3) -> Rgb) -> Result<HdrImage> {
    HdrImage::from_fn(width, height, |x, y| {
        let n = samples(x, y);
        let mut sum = [0.0f64; 3];
        for j in 0..n {
            for i in 0..n {
                let u = (x as f64 + (i as f64 + 0.5) / n as f64) / width as f64;
                let v = (y as f64 + (j as f64 + 0.5) / n as f64) / height as f64;
                let c = f(equirect_to_dir(u as f32, v as f32));
                sum[0] += c.r as f64;
                sum[1] += c.g as f64;
                sum[2] += c.b as f64;
            }
        }
        let k = (n * n) as f64;
        Rgb::new((sum[0] / k) as f32, (sum[1] / k) as f32, (sum[2] / k) as f32)
    })
}

pub fn sun_sky(width: u32, height: u32) -> Result<HdrImage> {
    let sun = equirect_to_dir(SUN_UV.0, SUN_UV.1);
    let (su, sv) = dir_to_equirect(sun);
    // pixels within two texels of the sun get a dense grid so the disc's
    // energy is integrated accurately
    let near = move |x: u32, y: u32| {
        let du = ((x as f32 + 0.5) / width as f32 - su).abs();
        let dv = ((y as f32 + 0.5) / height as f32 - sv).abs();
        if du * width as f32 <= 2.5 && dv * height as f32 <= 2.5 {
            64
        } else {
            3
        }
    };
    supersampled(width, height, near, move |d| sun_sky_radiance(d, sun))
}

struct SoftBox {
    centre: (f32, f32),
    half: (f32, f32),
    colour: Rgb,
}

const SOFT_BOXES: [SoftBox; 3] = [
    SoftBox {
        centre: (0.25, 0.3),
        half: (0.06, 0.08),
        colour: Rgb::new(60.0, 45.0, 30.0),
    },
    SoftBox {
        centre: (0.62, 0.25),
        half: (0.1, 0.04),
        colour: Rgb::new(12.0, 18.0, 40.0),
    },
    SoftBox {
        centre: (0.85, 0.45),
        half: (0.02, 0.12),
        colour: Rgb::new(30.0, 8.0, 6.0),
    },
];

fn studio_radiance(d: Vec3) -> Rgb {
    let (u, v) = dir_to_equirect(d);
    for b in &SOFT_BOXES {
        if (u - b.centre.0).abs() <= b.half.0 && (v - b.centre.1).abs() <= b.half.1 {
            return b.colour;
        }
    }
    if d.y < -0.05 {
        // checkered floor
        let gx = (u * 24.0).floor() as i32;
        let gy = (v * 12.0).floor() as i32;
        let c = if (gx + gy) % 2 == 0 { 0.35 } else { 0.08 };
        Rgb::new(c, c * 0.95, c * 0.9)
    } else {
        // walls with vertical stripes
        let stripe = 0.5 + 0.5 * (u * 2.0 * std::f32::consts::PI * 8.0).sin();
        let base = 0.15 + 0.25 * d.y.max(0.0);
        Rgb::new(base * (0.8 + 0.4 * stripe), base, base * (1.2 - 0.4 * stripe))
    }
}

pub fn studio(width: u32, height: u32) -> Result<HdrImage> {
    supersampled(width, height, |_, _| 4, studio_radiance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sun_sky_has_a_bright_sun_and_a_blue_zenith() {
        let img = sun_sky(64, 32).unwrap();
        assert!(img.is_finite());
        let max = img.max_value();
        // a 0.5° disc inside a 5.6° texel still dominates it
        assert!(max > 20.0 && max < SUN_RADIANCE, "{max}");
        let top = img.get(10, 0);
        assert!(top.b > top.r);
        let full = sun_sky(512, 256).unwrap().max_value();
        assert!(full > max);
    }

    #[test]
    fn studio_is_textured_and_positive() {
        let img = studio(64, 32).unwrap();
        assert!(img.pixels().iter().all(|p| p.r > 0.0 && p.g > 0.0 && p.b > 0.0));
        assert!(img.max_value() >= 30.0);
        assert_eq!("studio".parse::<SynthHdri>().unwrap(), SynthHdri::Studio);
    }
}
