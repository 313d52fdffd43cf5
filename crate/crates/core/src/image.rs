use crate::error::{Error, Result};
use crate::math::Rgb;

/// Row-major linear RGB raster; row 0 is the top of the image.
#[derive(Debug, Clone, PartialEq)]
pub struct HdrImage {
    width: u32,
    height: u32,
    pixels: Vec<Rgb>,
}

impl HdrImage {
    pub fn new(width: u32, height: u32, fill: Rgb) -> Result<Self> {
        Self::from_fn(width, height, |_, _| fill)
    }

    pub fn from_pixels(width: u32, height: u32, pixels: Vec<Rgb>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DimensionMismatch(format!("image must be non-empty, got {width}x{height}")));
        }
        if pixels.len() != width as usize * height as usize {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width as usize * height as usize,
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> Rgb) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::from_pixels(width, height, pixels)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [Rgb] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<Rgb> {
        self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> Rgb {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, c: Rgb) {
        let w = self.width as usize;
        self.pixels[y as usize * w + x as usize] = c;
    }

    pub fn is_finite(&self) -> bool {
        self.pixels.iter().all(|p| p.is_finite())
    }

    pub fn max_value(&self) -> f32 {
        self.pixels.iter().fold(0.0f32, |m, p| m.max(p.max_component()))
    }

    /// Per-channel mean, accumulated in `f64`.
    pub fn mean(&self) -> [f64; 3] {
        let mut s = [0.0f64; 3];
        for p in &self.pixels {
            s[0] += p.r as f64;
            s[1] += p.g as f64;
            s[2] += p.b as f64;
        }
        let n = self.pixels.len() as f64;
        s.map(|v| v / n)
    }

    /// Bilinear lookup at normalised `(u, v)`; pixel `i` is centred at
    /// `(i + 0.5) / width`. `u` wraps around (longitude), `v` clamps.
    pub fn bilinear(&self, u: f32, v: f32) -> Rgb {
        self.bilinear_f64(u as f64, v as f64)
    }

    fn bilinear_f64(&self, u: f64, v: f64) -> Rgb {
        let (w, h) = (self.width as i64, self.height as i64);
        let x = u * w as f64 - 0.5;
        let y = (v * h as f64 - 0.5).clamp(0.0, (h - 1) as f64);
        let (x0, y0) = (x.floor(), y.floor());
        let (fx, fy) = (x - x0, y - y0);
        let xi0 = (x0 as i64).rem_euclid(w);
        let xi1 = (xi0 + 1) % w;
        let yi0 = y0 as i64;
        let yi1 = (yi0 + 1).min(h - 1);
        let px = |xi: i64, yi: i64| self.pixels[(yi * w + xi) as usize];
        let (a, b, c, d) = (px(xi0, yi0), px(xi1, yi0), px(xi0, yi1), px(xi1, yi1));
        let lerp = |a: f32, b: f32, c: f32, d: f32| {
            let top = a as f64 * (1.0 - fx) + b as f64 * fx;
            let bottom = c as f64 * (1.0 - fx) + d as f64 * fx;
            (top * (1.0 - fy) + bottom * fy) as f32
        };
        Rgb::new(lerp(a.r, b.r, c.r, d.r), lerp(a.g, b.g, c.g, d.g), lerp(a.b, b.b, c.b, d.b))
    }

    /// Bilinear resampling onto a `width x height` grid of pixel centres.
    /// Same-size resampling returns an exact copy.
    pub fn resample(&self, width: u32, height: u32) -> Result<HdrImage> {
        if width == self.width && height == self.height {
            return Ok(self.clone());
        }
        HdrImage::from_fn(width, height, |x, y| {
            self.bilinear_f64((x as f64 + 0.5) / width as f64, (y as f64 + 0.5) / height as f64)
        })
    }

    pub fn map(&self, f: impl Fn(Rgb) -> Rgb) -> HdrImage {
        HdrImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&p| f(p)).collect(),
        }
    }

    pub fn check_same_size(&self, other: &HdrImage) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }
}

/// Normalised pixel-centre coordinates of a `width x height` grid, row-major.
pub fn pixel_centre_grid(width: u32, height: u32) -> Vec<[f32; 2]> {
    let mut out = Vec::with_capacity(width as usize * height as usize);
    for y in 0..height {
        let v = ((y as f64 + 0.5) / height as f64) as f32;
        for x in 0..width {
            out.push([((x as f64 + 0.5) / width as f64) as f32, v]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> HdrImage {
        HdrImage::from_fn(4, 2, |x, y| Rgb::new(x as f32, y as f32, (x * 10 + y) as f32)).unwrap()
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(HdrImage::from_pixels(0, 2, vec![]).is_err());
        assert!(HdrImage::from_pixels(2, 2, vec![Rgb::BLACK; 3]).is_err());
    }

    #[test]
    fn pixel_centres_return_pixel_values() {
        let img = ramp();
        for (i, uv) in pixel_centre_grid(4, 2).iter().enumerate() {
            assert_eq!(img.bilinear(uv[0], uv[1]), img.pixels()[i]);
        }
    }

    #[test]
    fn midway_between_centres_is_the_average() {
        let img = ramp();
        // between x=1 and x=2 on row 0
        let p = img.bilinear(0.5, 0.25);
        assert_eq!(p, Rgb::new(1.5, 0.0, 15.0));
    }

    #[test]
    fn u_wraps_and_v_clamps() {
        let img = ramp();
        // u = 0 sits between the last and the first column
        let p = img.bilinear(0.0, 0.25);
        assert_eq!(p.r, 1.5);
        assert_eq!(img.bilinear(0.125, 0.0), img.get(0, 0));
        assert_eq!(img.bilinear(0.125, 0.9999), img.get(0, 1));
    }

    #[test]
    fn resample_same_size_is_identity() {
        let img = ramp();
        assert_eq!(img.resample(4, 2).unwrap(), img);
        let half = img.resample(2, 1).unwrap();
        assert_eq!(half.width(), 2);
        // centre of the 2x1 grid at u=0.25, v=0.5
        assert_eq!(half.get(0, 0), img.bilinear(0.25, 0.5));
    }
}
