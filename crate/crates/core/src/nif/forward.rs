use rayon::prelude::*;

use super::{colour_matrix, fourier_encode_into, tone_expand, NifWeights};
use crate::error::{Error, Result};
use crate::math::{Real, Rgb};

/// Activations kept from a forward pass: the input of every dense layer
/// (the last one feeds the output layer), the 3-channel network output
/// and its image under the colour matrix.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache<T> {
    pub(crate) rows: usize,
    pub(crate) inputs: Vec<Vec<T>>,
    pub(crate) output: Vec<T>,
    pub(crate) compressed: Vec<T>,
}

impl<T: Real> ForwardCache<T> {
    pub fn new() -> Self {
        Self {
            rows: 0,
            inputs: Vec::new(),
            output: Vec::new(),
            compressed: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Network output in its own colour space, `rows x 3`.
    pub fn output(&self) -> &[T] {
        &self.output
    }

    /// Tone-compressed RGB, `rows x 3`.
    pub fn compressed(&self) -> &[T] {
        &self.compressed
    }

    /// Input activations of dense layer `layer` (0-based), `rows x inputs`.
    pub fn layer_input(&self, layer: usize) -> &[T] {
        &self.inputs[layer]
    }
}

/// `out[r][..w.len()/x_width] = act(b + x[r] W)` for every row. Each row is
/// accumulated in the same order (bias, then inputs ascending), so a row's
/// result does not depend on which other rows share the call.
pub(crate) fn dense_rows<T: Real>(
    x: &[T],
    in_width: usize,
    w: &[T],
    b: &[T],
    out: &mut [T],
    out_stride: usize,
    relu: bool,
) {
    let out_width = b.len();
    for (xr, or) in x.chunks_exact(in_width).zip(out.chunks_exact_mut(out_stride)) {
        let o = &mut or[..out_width];
        o.copy_from_slice(b);
        for (&xk, wk) in xr.iter().zip(w.chunks_exact(out_width)) {
            if xk != T::zero() {
                for (oj, &wj) in o.iter_mut().zip(wk) {
                    *oj = *oj + xk * wj;
                }
            }
        }
        if relu {
            for oj in o.iter_mut() {
                *oj = oj.max(T::zero());
            }
        }
    }
}

/// Runs the network on `uv` rows, filling `cache`.
pub fn forward_rows<T: Real>(weights: &NifWeights<T>, uv: &[[T; 2]], cache: &mut ForwardCache<T>) {
    let cfg = weights.config();
    let shapes = weights.shapes();
    let (h, f) = (cfg.hidden as usize, cfg.fourier_dim as usize);
    let c = cfg.concat_layer();
    let rows = uv.len();
    let layers = shapes.len();

    cache.rows = rows;
    cache.inputs.resize_with(layers, Vec::new);
    for (buf, s) in cache.inputs.iter_mut().zip(shapes) {
        buf.resize(rows * s.inputs, T::zero());
    }
    cache.output.resize(rows * 3, T::zero());
    cache.compressed.resize(rows * 3, T::zero());

    for (p, e) in uv.iter().zip(cache.inputs[0].chunks_exact_mut(f)) {
        fourier_encode_into(p[0], p[1], e);
    }

    for li in 0..layers - 1 {
        let s = shapes[li];
        let (head, tail) = cache.inputs.split_at_mut(li + 1);
        let next = &mut tail[0];
        dense_rows(&head[li], s.inputs, weights.weights(li), weights.bias(li), next, h, true);
        if li + 1 == c {
            let enc = &head[0];
            for (row, e) in next.chunks_exact_mut(h).zip(enc.chunks_exact(f)) {
                row[h - f..].copy_from_slice(e);
            }
        }
    }

    let last = layers - 1;
    dense_rows(&cache.inputs[last], h, weights.weights(last), weights.bias(last), &mut cache.output, 3, false);

    let m = colour_matrix(cfg.colour_matrix).map(|r| r.map(T::lit));
    for (y, o) in cache.output.chunks_exact(3).zip(cache.compressed.chunks_exact_mut(3)) {
        for (oc, row) in o.iter_mut().zip(&m) {
            *oc = row[0] * y[0] + row[1] * y[1] + row[2] * y[2];
        }
    }
}

/// Linear HDR radiance for every `(u, v)` row, evaluated `chunk_size` rows
/// at a time. The result does not depend on `chunk_size`.
pub fn nif_forward(weights: &NifWeights<f32>, uv: &[[f32; 2]], chunk_size: usize) -> Result<Vec<Rgb>> {
    if chunk_size == 0 {
        return Err(Error::Config("chunk_size must be at least 1".into()));
    }
    weights.shape_audit().map_err(|e| Error::Config(e.to_string()))?;
    let mut out = vec![Rgb::BLACK; uv.len()];
    out.par_chunks_mut(chunk_size)
        .zip(uv.par_chunks(chunk_size))
        .for_each_init(ForwardCache::new, |cache, (o, block)| {
            forward_rows(weights, block, cache);
            for (dst, y) in o.iter_mut().zip(cache.compressed.chunks_exact(3)) {
                *dst = tone_expand(Rgb::new(y[0], y[1], y[2]));
            }
        });
    Ok(out)
}
