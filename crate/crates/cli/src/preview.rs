//! 8-bit PNG previews of HDR images.

use std::io::BufWriter;
use std::path::Path;

use neuralpt_core::HdrImage;

use crate::error::{CliError, Result};

/// Scales by `2^exposure`, applies `1/gamma` and quantises to 8 bits.
pub fn to_srgb8(img: &HdrImage, exposure: f32, gamma: f32) -> Vec<u8> {
    let scale = exposure.exp2();
    let inv = 1.0 / gamma;
    img.pixels()
        .iter()
        .flat_map(|p| p.to_array())
        .map(|c| {
            let v = (c * scale).max(0.0).powf(inv).min(1.0);
            (v * 255.0).round() as u8
        })
        .collect()
}

pub fn write_png(path: &Path, img: &HdrImage, exposure: f32, gamma: f32) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), img.width(), img.height());
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let fail = |e: png::EncodingError| CliError::Encode {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = enc.write_header().map_err(fail)?;
    w.write_image_data(&to_srgb8(img, exposure, gamma)).map_err(fail)?;
    w.finish().map_err(fail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use neuralpt_core::Rgb;

    #[test]
    fn tone_curve() {
        let img = HdrImage::from_pixels(
            4,
            1,
            vec![Rgb::BLACK, Rgb::splat(1.0), Rgb::splat(0.25), Rgb::new(-1.0, 7.0, f32::NAN)],
        )
        .unwrap();
        let px = to_srgb8(&img, 0.0, 2.0);
        assert_eq!(&px[..9], &[0, 0, 0, 255, 255, 255, 128, 128, 128]);
        assert_eq!(&px[9..11], &[0, 255]);
        assert_eq!(to_srgb8(&img, 2.0, 1.0)[6], 255);
    }
}
