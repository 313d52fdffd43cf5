//! NIF trainer: bilinear batch sampling, Huber loss in tone-compressed
//! space, hand-written reverse mode and Adam.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{pixel_centre_grid, HdrImage};
use crate::math::Real;
use crate::metrics::{psnr, PsnrReport};
use crate::nif::{colour_matrix, forward_rows, nif_forward, tone_compress, ForwardCache, NifConfig, NifWeights};
use crate::precision::stochastic_round_f16;
use crate::rng::RngKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MasterPrecision {
    F32,
    /// Master weights re-quantised to `f16` with stochastic rounding after
    /// every update; the loss is scaled by `loss_scale`.
    F16Stochastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f32,
    pub huber_delta: f32,
    pub batch_size: u32,
    pub steps: u32,
    pub eval_interval: u32,
    pub eval_width: u32,
    pub eval_height: u32,
    pub loss_scale: f32,
    pub master_precision: MasterPrecision,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            huber_delta: 0.001,
            batch_size: 4096,
            steps: 20_000,
            eval_interval: 1000,
            eval_width: 256,
            eval_height: 128,
            loss_scale: 16384.0,
            master_precision: MasterPrecision::F32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |x: f32| x.is_finite() && x > 0.0;
        if !pos(self.learning_rate) || !pos(self.huber_delta) || !pos(self.loss_scale) {
            return Err(Error::Config(
                "learning_rate, huber_delta and loss_scale must be positive and finite".into(),
            ));
        }
        if self.batch_size == 0 || self.eval_interval == 0 || self.eval_width == 0 || self.eval_height == 0 {
            return Err(Error::Config(
                "batch_size, eval_interval and eval dimensions must be positive".into(),
            ));
        }
        Ok(())
    }

    fn gradient_scale(&self) -> f32 {
        match self.master_precision {
            MasterPrecision::F32 => 1.0,
            MasterPrecision::F16Stochastic => self.loss_scale,
        }
    }
}

/// Huber loss of `e = pred - target` and its derivative `clamp(e, -δ, δ)`.
pub fn huber<T: Real>(pred: T, target: T, delta: T) -> (T, T) {
    let e = pred - target;
    let a = e.abs();
    let loss = if a <= delta {
        T::lit(0.5) * e * e
    } else {
        delta * (a - T::lit(0.5) * delta)
    };
    (loss, e.max(-delta).min(delta))
}

/// `n` uniform `(u, v)` samples for `step` and their tone-compressed
/// bilinear targets.
pub fn sample_batch(image: &HdrImage, n: u32, seed: u64, step: u32) -> (Vec<[f32; 2]>, Vec<[f32; 3]>) {
    let key = RngKey::new(step as u64, 0, 0, seed);
    let mut uv = Vec::with_capacity(n as usize);
    let mut targets = Vec::with_capacity(n as usize);
    for i in 0..n {
        let p = [key.uniform(2 * i), key.uniform(2 * i + 1)];
        targets.push(tone_compress(image.bilinear(p[0], p[1])).to_array());
        uv.push(p);
    }
    (uv, targets)
}

/// Mean Huber loss over all `rows x 3` compressed outputs of the last
/// forward pass, and its gradient with respect to every parameter, scaled
/// by `scale`. The colour matrix is constant and gets no gradient; the
/// gradient reaching the concatenated embedding is dropped.
pub fn backward<T: Real>(
    weights: &NifWeights<T>,
    cache: &ForwardCache<T>,
    targets: &[[T; 3]],
    delta: T,
    scale: T,
) -> Result<(f64, Vec<T>)> {
    let rows = cache.rows;
    if targets.len() != rows || rows == 0 {
        return Err(Error::DimensionMismatch(format!(
            "{} targets for {rows} forward rows",
            targets.len()
        )));
    }
    let cfg = weights.config();
    let shapes = weights.shapes();
    let last = shapes.len() - 1;
    let (h, f) = (cfg.hidden as usize, cfg.fourier_dim as usize);
    let concat_out = cfg.concat_layer();
    let m = colour_matrix(cfg.colour_matrix).map(|r| r.map(T::lit));
    let g_scale = scale * T::lit(1.0 / (3.0 * rows as f64));

    // W^T per layer so input gradients are contiguous axpys
    let transposed: Vec<Vec<T>> = shapes
        .iter()
        .enumerate()
        .map(|(li, s)| {
            let w = weights.weights(li);
            let mut t = vec![T::zero(); w.len()];
            for k in 0..s.inputs {
                for j in 0..s.outputs {
                    t[j * s.inputs + k] = w[k * s.outputs + j];
                }
            }
            t
        })
        .collect();

    let mut grads = vec![T::zero(); weights.params().len()];
    let mut loss = 0.0f64;
    let mut d_out = vec![T::zero(); h.max(3)];
    let mut d_in = vec![T::zero(); h];

    for r in 0..rows {
        let y = &cache.compressed[3 * r..3 * r + 3];
        let mut g = [T::zero(); 3];
        for c in 0..3 {
            let (l, d) = huber(y[c], targets[r][c], delta);
            loss += l.to_f64().unwrap();
            g[c] = d * g_scale;
        }
        // d/dy = M^T g
        for j in 0..3 {
            d_out[j] = m[0][j] * g[0] + m[1][j] * g[1] + m[2][j] * g[2];
        }

        for li in (0..=last).rev() {
            let s = shapes[li];
            let x = &cache.inputs[li][r * s.inputs..(r + 1) * s.inputs];
            let dz = &mut d_out[..s.outputs];
            if li != last {
                // ReLU: the layer's activation is the next layer's input
                let a = &cache.inputs[li + 1][r * h..r * h + s.outputs];
                for (d, &av) in dz.iter_mut().zip(a) {
                    if av <= T::zero() {
                        *d = T::zero();
                    }
                }
            }
            if dz.iter().all(|&d| d == T::zero()) {
                break;
            }
            let (gw, gb) = grads[s.weight_offset..s.bias_offset + s.outputs].split_at_mut(s.bias_offset - s.weight_offset);
            for (b, &d) in gb.iter_mut().zip(dz.iter()) {
                *b = *b + d;
            }
            for (&xk, gk) in x.iter().zip(gw.chunks_exact_mut(s.outputs)) {
                if xk != T::zero() {
                    for (gkj, &d) in gk.iter_mut().zip(dz.iter()) {
                        *gkj = *gkj + xk * d;
                    }
                }
            }
            if li == 0 {
                break;
            }
            let dx = &mut d_in[..s.inputs];
            dx.iter_mut().for_each(|v| *v = T::zero());
            for (&dj, wt) in dz.iter().zip(transposed[li].chunks_exact(s.inputs)) {
                if dj != T::zero() {
                    for (v, &w) in dx.iter_mut().zip(wt) {
                        *v = *v + dj * w;
                    }
                }
            }
            // inputs of layer li are the outputs of layer li - 1; after the
            // concat layer only the first H - F belong to it
            let width = if li == concat_out { h - f } else { h };
            d_out[..width].copy_from_slice(&d_in[..width]);
        }
    }
    Ok((loss / (3 * rows) as f64, grads))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f32>,
    pub v: Vec<f32>,
    pub t: u32,
}

impl AdamState {
    pub const BETA1: f32 = 0.9;
    pub const BETA2: f32 = 0.999;
    pub const EPSILON: f32 = 1e-8;

    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update. A non-finite gradient rejects the
/// step and leaves weights and state untouched.
pub fn adam_step(params: &mut [f32], grads: &[f32], state: &mut AdamState, lr: f32) -> Result<()> {
    if params.len() != grads.len() || state.m.len() != params.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} parameters, {} gradients, {} moments",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    let t = state.t + 1;
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient { step: t });
    }
    state.t = t;
    let (b1, b2) = (AdamState::BETA1, AdamState::BETA2);
    let bc1 = (1.0 - (b1 as f64).powi(t as i32)) as f32;
    let bc2 = (1.0 - (b2 as f64).powi(t as i32)) as f32;
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= lr * m_hat / (v_hat.sqrt() + AdamState::EPSILON);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: u32,
    pub psnr_rgb: f64,
    pub psnr_luma: f64,
    pub psnr_chroma: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub weights: NifWeights<f32>,
    pub initial: PsnrReport,
    pub trace: Vec<TraceRow>,
    /// Mean batch loss of every step.
    pub losses: Vec<f32>,
}

impl TrainOutput {
    /// Last evaluation, or the initial one when no step was taken.
    pub fn final_psnr(&self) -> PsnrReport {
        self.trace.last().map_or(self.initial, |r| PsnrReport {
            psnr_rgb: r.psnr_rgb,
            psnr_luma: r.psnr_luma,
            psnr_chroma: r.psnr_chroma,
        })
    }
}

/// Step-wise training loop over one image.
pub struct Trainer<'a> {
    image: &'a HdrImage,
    config: TrainConfig,
    weights: NifWeights<f32>,
    adam: AdamState,
    cache: ForwardCache<f32>,
    reference: HdrImage,
    grid: Vec<[f32; 2]>,
    step: u32,
}

impl<'a> Trainer<'a> {
    pub fn new(image: &'a HdrImage, nif: NifConfig, config: TrainConfig) -> Result<Self> {
        let weights = NifWeights::init_he_uniform(nif, config.seed)?;
        Self::with_weights(image, weights, config)
    }

    pub fn with_weights(image: &'a HdrImage, weights: NifWeights<f32>, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        weights.shape_audit()?;
        if !image.is_finite() || image.pixels().iter().any(|p| p.r < 0.0 || p.g < 0.0 || p.b < 0.0) {
            return Err(Error::Domain("training image must be finite and non-negative".into()));
        }
        let reference = image.resample(config.eval_width, config.eval_height)?;
        let grid = pixel_centre_grid(config.eval_width, config.eval_height);
        let n = weights.params().len();
        Ok(Self {
            image,
            config,
            weights,
            adam: AdamState::new(n),
            cache: ForwardCache::new(),
            reference,
            grid,
            step: 0,
        })
    }

    pub fn weights(&self) -> &NifWeights<f32> {
        &self.weights
    }

    pub fn step_count(&self) -> u32 {
        self.step
    }

    /// Takes one optimisation step and returns its mean batch loss.
    pub fn step(&mut self) -> Result<f32> {
        let step = self.step + 1;
        let cfg = self.config;
        let (uv, targets) = sample_batch(self.image, cfg.batch_size, cfg.seed, step);
        forward_rows(&self.weights, &uv, &mut self.cache);
        let scale = cfg.gradient_scale();
        let (loss, mut grads) = backward(&self.weights, &self.cache, &targets, cfg.huber_delta, scale)?;
        if !loss.is_finite() {
            return Err(Error::Diverged {
                step,
                reason: format!("loss is {loss}"),
            });
        }
        if scale != 1.0 {
            let inv = 1.0 / scale;
            grads.iter_mut().for_each(|g| *g *= inv);
        }
        adam_step(self.weights.params_mut(), &grads, &mut self.adam, cfg.learning_rate).map_err(|e| match e {
            Error::NonFiniteGradient { .. } => Error::NonFiniteGradient { step },
            other => other,
        })?;
        if cfg.master_precision == MasterPrecision::F16Stochastic {
            let key = RngKey::new(step as u64, 0, 1, cfg.seed);
            for (i, p) in self.weights.params_mut().iter_mut().enumerate() {
                *p = stochastic_round_f16(*p, key.uniform(i as u32))
                    .map_err(|e| Error::Diverged {
                        step,
                        reason: format!("weight {i} left the half-precision range: {e}"),
                    })?
                    .to_f32();
            }
        }
        self.step = step;
        Ok(loss as f32)
    }

    /// Reconstruction on the evaluation grid.
    pub fn reconstruct(&self) -> Result<HdrImage> {
        let out = nif_forward(&self.weights, &self.grid, 4096)?;
        HdrImage::from_pixels(self.config.eval_width, self.config.eval_height, out)
    }

    pub fn evaluate(&self) -> Result<PsnrReport> {
        psnr(&self.reference, &self.reconstruct()?)
    }

    pub fn into_weights(self) -> NifWeights<f32> {
        self.weights
    }
}

pub fn train(image: &HdrImage, nif: NifConfig, config: TrainConfig) -> Result<TrainOutput> {
    train_with(image, nif, config, |_| {})
}

/// [`train`] with a callback receiving every trace row as it is produced.
pub fn train_with(
    image: &HdrImage,
    nif: NifConfig,
    config: TrainConfig,
    mut on_eval: impl FnMut(&TraceRow),
) -> Result<TrainOutput> {
    let mut trainer = Trainer::new(image, nif, config)?;
    let initial = trainer.evaluate()?;
    let mut trace = Vec::new();
    let mut losses = Vec::with_capacity(config.steps as usize);
    for _ in 0..config.steps {
        losses.push(trainer.step()?);
        if trainer.step % config.eval_interval == 0 || trainer.step == config.steps {
            let r = trainer.evaluate()?;
            let row = TraceRow {
                step: trainer.step,
                psnr_rgb: r.psnr_rgb,
                psnr_luma: r.psnr_luma,
                psnr_chroma: r.psnr_chroma,
            };
            on_eval(&row);
            trace.push(row);
        }
    }
    Ok(TrainOutput {
        weights: trainer.into_weights(),
        initial,
        trace,
        losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Rgb;
    use crate::nif::ColourMatrix;

    #[test]
    fn huber_examples() {
        assert_eq!(huber(0.0f64, 0.0, 0.001), (0.0, 0.0));
        let (l, d) = huber(0.0005f64, 0.0, 0.001);
        assert!((l - 1.25e-7).abs() < 1e-20);
        assert_eq!(d, 0.0005);
        let (l, d) = huber(0.01f64, 0.0, 0.001);
        assert!((l - 9.5e-6).abs() < 1e-18);
        assert_eq!(d, 0.001);
        assert_eq!(huber(-1.0f64, 0.0, 0.001).1, -0.001);
    }

    #[test]
    fn adam_zero_gradient_keeps_weights() {
        let mut p = vec![0.5f32, -1.0];
        let mut s = AdamState::new(2);
        adam_step(&mut p, &[0.0, 0.0], &mut s, 0.001).unwrap();
        assert_eq!(p, vec![0.5, -1.0]);
    }

    #[test]
    fn adam_first_step_is_lr_times_sign() {
        let mut p = vec![0.0f32; 3];
        let mut s = AdamState::new(3);
        adam_step(&mut p, &[0.3, -2.0, 1e-3], &mut s, 0.001).unwrap();
        for (x, sign) in p.iter().zip([-1.0f32, 1.0, -1.0]) {
            assert!((x - sign * 0.001).abs() < 2e-8, "{x}");
        }
    }

    #[test]
    fn adam_rejects_non_finite_gradients() {
        let mut p = vec![1.0f32, 2.0];
        let mut s = AdamState::new(2);
        let before = (p.clone(), s.clone());
        assert!(matches!(
            adam_step(&mut p, &[f32::NAN, 0.0], &mut s, 0.001),
            Err(Error::NonFiniteGradient { step: 1 })
        ));
        assert_eq!((p, s), before);
    }

    #[test]
    fn zero_error_gives_zero_gradient() {
        let cfg = NifConfig::new(48, 2, ColourMatrix::YuvToRgb);
        let w = NifWeights::<f64>::init_he_uniform(cfg, 1).unwrap();
        let uv: Vec<[f64; 2]> = (0..16).map(|i| [i as f64 / 16.0, 0.3]).collect();
        let mut cache = ForwardCache::new();
        forward_rows(&w, &uv, &mut cache);
        let targets: Vec<[f64; 3]> = cache.compressed().chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
        let (loss, g) = backward(&w, &cache, &targets, 0.001, 1.0).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn loss_scale_is_neutral_for_powers_of_two() {
        let cfg = NifConfig::new(48, 3, ColourMatrix::YcocgToRgb);
        let w = NifWeights::<f32>::init_he_uniform(cfg, 3).unwrap();
        let img = HdrImage::from_fn(16, 8, |x, y| Rgb::new(x as f32, y as f32, 1.0)).unwrap();
        let (uv, t) = sample_batch(&img, 64, 1, 1);
        let mut cache = ForwardCache::new();
        forward_rows(&w, &uv, &mut cache);
        let (_, g1) = backward(&w, &cache, &t, 0.001, 1.0).unwrap();
        let (_, gs) = backward(&w, &cache, &t, 0.001, 1024.0).unwrap();
        for (a, b) in g1.iter().zip(&gs) {
            assert_eq!(a.to_bits(), (b / 1024.0).to_bits());
        }
    }

    #[test]
    fn sample_batch_targets_are_compressed_bilinear() {
        let img = HdrImage::from_fn(8, 4, |x, y| Rgb::splat((x + 8 * y) as f32)).unwrap();
        let (uv, t) = sample_batch(&img, 100, 5, 3);
        for (p, c) in uv.iter().zip(&t) {
            assert!((0.0..1.0).contains(&p[0]) && (0.0..1.0).contains(&p[1]));
            assert_eq!(*c, tone_compress(img.bilinear(p[0], p[1])).to_array());
        }
        assert_eq!(sample_batch(&img, 100, 5, 3), (uv, t));
    }

    #[test]
    fn zero_steps_returns_initial_weights() {
        let img = HdrImage::new(8, 4, Rgb::splat(0.5)).unwrap();
        let cfg = TrainConfig {
            steps: 0,
            eval_width: 8,
            eval_height: 4,
            ..TrainConfig::default()
        };
        let nif = NifConfig::new(48, 2, ColourMatrix::YuvToRgb);
        let out = train(&img, nif, cfg).unwrap();
        assert!(out.trace.is_empty());
        assert_eq!(out.weights, NifWeights::init_he_uniform(nif, 0).unwrap());
    }

    #[test]
    fn training_is_deterministic_and_traces_every_interval() {
        let img = HdrImage::from_fn(16, 8, |x, y| Rgb::new(x as f32 * 0.2, y as f32, 0.1)).unwrap();
        let cfg = TrainConfig {
            steps: 20,
            eval_interval: 5,
            batch_size: 64,
            eval_width: 16,
            eval_height: 8,
            seed: 11,
            ..TrainConfig::default()
        };
        let nif = NifConfig::new(48, 2, ColourMatrix::YuvToRgb);
        let a = train(&img, nif, cfg).unwrap();
        let b = train(&img, nif, cfg).unwrap();
        assert_eq!(a.trace.len(), 4);
        assert_eq!(a.trace[3].step, 20);
        let bits = |o: &TrainOutput| o.weights.params().iter().map(|p| p.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn f16_mode_keeps_weights_on_the_half_lattice() {
        let img = HdrImage::from_fn(16, 8, |x, _| Rgb::splat(x as f32)).unwrap();
        let cfg = TrainConfig {
            steps: 3,
            eval_interval: 3,
            batch_size: 32,
            eval_width: 16,
            eval_height: 8,
            master_precision: MasterPrecision::F16Stochastic,
            ..TrainConfig::default()
        };
        let out = train(&img, NifConfig::new(48, 2, ColourMatrix::YuvToRgb), cfg).unwrap();
        for &p in out.weights.params() {
            let h = crate::precision::f32_to_f16_nearest(p);
            assert_eq!(h.to_f32(), p);
        }
    }

    #[test]
    fn config_validation() {
        let bad = TrainConfig {
            eval_interval: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        assert!(TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        }
        .validate()
        .is_err());
    }
}
