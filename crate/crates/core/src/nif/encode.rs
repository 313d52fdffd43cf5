use crate::math::Real;

/// `(sin 2πt, cos 2πt)` with quadrant reduction, exact at quarter turns.
pub fn sin_cos_turns<T: Real>(t: T) -> (T, T) {
    let r = t * T::lit(4.0);
    let n = r.round();
    let a = (r - n) * T::lit(std::f64::consts::FRAC_PI_2);
    let (s, c) = a.sin_cos();
    match n.to_i64().unwrap_or(0).rem_euclid(4) {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

/// Writes `[sin(2^j πu), cos(2^j πu), sin(2^j πv), cos(2^j πv)]` for
/// `j = 0..out.len() / 4`.
pub fn fourier_encode_into<T: Real>(u: T, v: T, out: &mut [T]) {
    let mut scale = T::lit(0.5);
    for band in out.chunks_exact_mut(4) {
        let (su, cu) = sin_cos_turns((u * scale).fract());
        let (sv, cv) = sin_cos_turns((v * scale).fract());
        band[0] = su;
        band[1] = cu;
        band[2] = sv;
        band[3] = cv;
        scale = scale * T::lit(2.0);
    }
}

pub fn fourier_encode(u: f32, v: f32, dim: u32) -> Vec<f32> {
    let mut out = vec![0.0; dim as usize];
    fourier_encode_into(u, v, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn origin_gives_zero_sines_unit_cosines() {
        assert_eq!(fourier_encode(0.0, 0.0, 8), vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn half_u_single_band() {
        let e = fourier_encode(0.5, 0.0, 4);
        assert_eq!(e, vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(fourier_encode(0.1, 0.2, 40).len(), 40);
    }

    #[test]
    fn matches_direct_formula() {
        for i in 0..200 {
            let u = (i as f64 * 0.618_033_988_7).fract();
            let v = (i as f64 * 0.414_213_562_3).fract();
            let e = fourier_encode(u as f32, v as f32, 40);
            for j in 0..10 {
                let f = 2f64.powi(j) * PI;
                let (u, v) = (u as f32 as f64, v as f32 as f64);
                let want = [(f * u).sin(), (f * u).cos(), (f * v).sin(), (f * v).cos()];
                for k in 0..4 {
                    assert!((e[4 * j as usize + k] as f64 - want[k]).abs() < 2e-6, "band {j}");
                }
            }
        }
    }

    #[test]
    fn quarter_turns_are_exact() {
        assert_eq!(sin_cos_turns(0.0f64), (0.0, 1.0));
        assert_eq!(sin_cos_turns(0.25f64).0, 1.0);
        assert_eq!(sin_cos_turns(0.5f64).1, -1.0);
        assert_eq!(sin_cos_turns(0.75f32).0, -1.0);
        assert_eq!(sin_cos_turns(0.5f32).0, 0.0);
    }
}
