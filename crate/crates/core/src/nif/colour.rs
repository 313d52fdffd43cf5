use super::ColourMatrix;
use crate::math::Rgb;

/// Row-major 3x3 matrix.
pub type Mat3 = [[f64; 3]; 3];

const KR: f64 = 0.299;
const KB: f64 = 0.114;
const KG: f64 = 1.0 - KR - KB;
const U_MAX: f64 = 0.436;
const V_MAX: f64 = 0.615;

/// BT.601 analogue RGB -> YUV.
const RGB_TO_YUV: Mat3 = [
    [KR, KG, KB],
    [-U_MAX * KR / (1.0 - KB), -U_MAX * KG / (1.0 - KB), U_MAX],
    [V_MAX, -V_MAX * KG / (1.0 - KR), -V_MAX * KB / (1.0 - KR)],
];

/// Exact algebraic inverse of [`RGB_TO_YUV`].
const YUV_TO_RGB: Mat3 = [
    [1.0, 0.0, (1.0 - KR) / V_MAX],
    [1.0, -KB * (1.0 - KB) / (U_MAX * KG), -KR * (1.0 - KR) / (V_MAX * KG)],
    [1.0, (1.0 - KB) / U_MAX, 0.0],
];

const YCOCG_TO_RGB: Mat3 = [[1.0, 1.0, -1.0], [1.0, 0.0, 1.0], [1.0, -1.0, -1.0]];

const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Fixed matrix mapping the network's output space to RGB.
pub fn colour_matrix(kind: ColourMatrix) -> Mat3 {
    match kind {
        ColourMatrix::YuvToRgb => YUV_TO_RGB,
        ColourMatrix::YcocgToRgb => YCOCG_TO_RGB,
        ColourMatrix::Identity => IDENTITY,
    }
}

pub fn mat3_mul_vec(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    m.map(|row| row[0] * v[0] + row[1] * v[1] + row[2] * v[2])
}

pub fn mat3_inverse(m: &Mat3) -> Option<Mat3> {
    let c = |r: usize, k: usize| {
        let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
        let (k1, k2) = ((k + 1) % 3, (k + 2) % 3);
        m[r1][k1] * m[r2][k2] - m[r1][k2] * m[r2][k1]
    };
    let det = m[0][0] * c(0, 0) + m[0][1] * c(0, 1) + m[0][2] * c(0, 2);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for (r, row) in inv.iter_mut().enumerate() {
        for (k, x) in row.iter_mut().enumerate() {
            *x = c(k, r) / det;
        }
    }
    Some(inv)
}

pub fn rgb_to_yuv(c: [f64; 3]) -> [f64; 3] {
    mat3_mul_vec(&RGB_TO_YUV, c)
}

/// `ln(1 + x)` per channel.
pub fn tone_compress(x: Rgb) -> Rgb {
    x.map(f32::ln_1p)
}

/// `exp(y) - 1` per channel, clamped below at zero.
pub fn tone_expand(y: Rgb) -> Rgb {
    y.map(|v| v.exp_m1().max(0.0))
}
