//! NIF inference against a loop-by-loop f64 reference network.

use std::f64::consts::PI;

use neuralpt_core::nif::{
    colour_matrix, decode_nifw, encode_nifw, nif_forward, read_nifw, write_nifw, ColourMatrix, NifConfig, NifWeights,
};
use neuralpt_core::{Rgb, RngKey};

/// Weights as plain nested vectors: `layers[l] = (w[in][out], b[out])`.
fn unpack(w: &NifWeights<f32>) -> Vec<(Vec<Vec<f64>>, Vec<f64>)> {
    w.shapes()
        .iter()
        .enumerate()
        .map(|(l, s)| {
            let flat = w.weights(l);
            let m = (0..s.inputs)
                .map(|k| (0..s.outputs).map(|j| flat[k * s.outputs + j] as f64).collect())
                .collect();
            (m, w.bias(l).iter().map(|&b| b as f64).collect())
        })
        .collect()
}

fn reference(w: &NifWeights<f32>, u: f64, v: f64) -> [f64; 3] {
    let cfg = *w.config();
    let f = cfg.fourier_dim as usize;
    let mut enc = Vec::with_capacity(f);
    for j in 0..f / 4 {
        let freq = PI * 2f64.powi(j as i32);
        enc.extend([(freq * u).sin(), (freq * u).cos(), (freq * v).sin(), (freq * v).cos()]);
    }
    let layers = unpack(w);
    let concat_after = cfg.concat_layer();
    let mut x = enc.clone();
    for (l, (m, b)) in layers.iter().enumerate() {
        let mut y: Vec<f64> = b.clone();
        for (k, xk) in x.iter().enumerate() {
            for (j, yj) in y.iter_mut().enumerate() {
                *yj += xk * m[k][j];
            }
        }
        let is_output = l == layers.len() - 1;
        if !is_output {
            y.iter_mut().for_each(|v| *v = v.max(0.0));
            if l + 1 == concat_after {
                y.extend(&enc);
            }
        }
        x = y;
    }
    let cm = colour_matrix(cfg.colour_matrix);
    let mut out = [0.0; 3];
    for (r, o) in out.iter_mut().enumerate() {
        let c = cm[r][0] * x[0] + cm[r][1] * x[1] + cm[r][2] * x[2];
        *o = c.exp_m1().max(0.0);
    }
    out
}

fn random_weights(cfg: NifConfig, seed: u64) -> NifWeights<f32> {
    let key = RngKey::new(0, 0, 0, seed);
    let n = cfg.parameter_count();
    let params = (0..n as u32).map(|i| 0.6 * (key.uniform(i) - 0.5)).collect();
    NifWeights::from_params(cfg, params).unwrap()
}

fn uv_rows(n: u32, seed: u64) -> Vec<[f32; 2]> {
    let key = RngKey::new(1, 0, 0, seed);
    (0..n).map(|i| [key.uniform(2 * i), key.uniform(2 * i + 1)]).collect()
}

#[test]
fn matches_f64_reference_for_every_colour_matrix_and_depth() {
    for (h, l) in [(48, 2), (64, 3), (64, 4), (96, 6)] {
        for cm in ColourMatrix::ALL {
            let w = random_weights(NifConfig::new(h, l, cm), (h + l) as u64);
            let uv = uv_rows(200, 9);
            let got = nif_forward(&w, &uv, 37).unwrap();
            for (p, g) in uv.iter().zip(&got) {
                let want = reference(&w, p[0] as f64, p[1] as f64);
                for (c, gc) in g.to_array().iter().enumerate() {
                    // compare in log space; outputs span several decades
                    let (a, b) = ((*gc as f64).ln_1p(), want[c].ln_1p());
                    assert!((a - b).abs() <= 1e-4 * (1.0 + b.abs()), "H{h}L{l} {cm:?} {p:?}: {a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn one_hot_output_bias_reproduces_the_colour_matrix_columns() {
    // zero trunk, output bias e_k: compressed RGB is column k of the matrix
    for cm in ColourMatrix::ALL {
        let cfg = NifConfig::new(48, 2, cm);
        let m = colour_matrix(cm);
        for k in 0..3 {
            let mut w = NifWeights::<f32>::zeros(cfg).unwrap();
            let last = w.shapes().last().unwrap().bias_range();
            w.params_mut()[last.start + k] = 1.0;
            let out = nif_forward(&w, &[[0.3, 0.7]], 1).unwrap()[0];
            for (r, got) in out.to_array().iter().enumerate() {
                let want = m[r][k].exp_m1().max(0.0);
                assert!((*got as f64 - want).abs() <= 1e-6 * (1.0 + want), "{cm:?} k={k} r={r}");
            }
        }
    }
}

#[test]
fn zero_network_is_black_everywhere() {
    let w = NifWeights::<f32>::zeros(NifConfig::default()).unwrap();
    let out = nif_forward(&w, &uv_rows(64, 1), 5).unwrap();
    assert!(out.iter().all(|p| *p == Rgb::BLACK));
}

#[test]
fn weight_file_round_trip_preserves_inference_bits() {
    let w = random_weights(NifConfig::new(64, 4, ColourMatrix::YcocgToRgb), 4);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("env.nifw");
    write_nifw(&path, &w).unwrap();
    let back = read_nifw(&path).unwrap();
    assert_eq!(back, w);
    let uv = uv_rows(50, 2);
    assert_eq!(nif_forward(&back, &uv, 50).unwrap(), nif_forward(&w, &uv, 50).unwrap());

    let mut bytes = encode_nifw(&w);
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    assert_eq!(decode_nifw(&bytes).unwrap_err().category(), "format");
}
