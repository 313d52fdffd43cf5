//! Neural image field: `(u, v) -> rgb` through Fourier features, a ReLU
//! trunk with one skip concatenation, a linear output layer, a fixed
//! colour matrix and `expm1` range expansion.

mod colour;
mod encode;
mod file;
mod forward;

pub use colour::{colour_matrix, mat3_inverse, mat3_mul_vec, rgb_to_yuv, tone_compress, tone_expand, Mat3};
pub use encode::{fourier_encode, fourier_encode_into, sin_cos_turns};
pub use file::{decode_nifw, encode_nifw, read_nifw, write_nifw, NIFW_MAGIC, NIFW_VERSION};
pub use forward::{forward_rows, nif_forward, ForwardCache};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::Real;
use crate::rng::RngKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColourMatrix {
    YuvToRgb,
    YcocgToRgb,
    Identity,
}

impl ColourMatrix {
    pub const ALL: [ColourMatrix; 3] = [ColourMatrix::Identity, ColourMatrix::YcocgToRgb, ColourMatrix::YuvToRgb];

    pub fn code(self) -> u32 {
        match self {
            ColourMatrix::YuvToRgb => 0,
            ColourMatrix::YcocgToRgb => 1,
            ColourMatrix::Identity => 2,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        Some(match code {
            0 => ColourMatrix::YuvToRgb,
            1 => ColourMatrix::YcocgToRgb,
            2 => ColourMatrix::Identity,
            _ => return None,
        })
    }

    /// Short name of the network's output space.
    pub fn space_name(self) -> &'static str {
        match self {
            ColourMatrix::YuvToRgb => "yuv",
            ColourMatrix::YcocgToRgb => "ycocg",
            ColourMatrix::Identity => "rgb",
        }
    }

    pub fn from_space_name(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "yuv" | "yuv_to_rgb" => Ok(ColourMatrix::YuvToRgb),
            "ycocg" | "ycocg_to_rgb" => Ok(ColourMatrix::YcocgToRgb),
            "rgb" | "identity" => Ok(ColourMatrix::Identity),
            other => Err(Error::Config(format!("unknown colour space '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToneMap {
    #[default]
    Log1p,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NifConfig {
    pub hidden: u32,
    pub layers: u32,
    pub fourier_dim: u32,
    pub colour_matrix: ColourMatrix,
    pub tone_map: ToneMap,
}

impl Default for NifConfig {
    fn default() -> Self {
        Self {
            hidden: 128,
            layers: 4,
            fourier_dim: 40,
            colour_matrix: ColourMatrix::YuvToRgb,
            tone_map: ToneMap::Log1p,
        }
    }
}

impl NifConfig {
    pub fn new(hidden: u32, layers: u32, colour_matrix: ColourMatrix) -> Self {
        Self {
            hidden,
            layers,
            colour_matrix,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fourier_dim == 0 || !self.fourier_dim.is_multiple_of(4) {
            return Err(Error::Config(format!(
                "fourier_dim must be a positive multiple of 4, got {}",
                self.fourier_dim
            )));
        }
        if self.hidden <= self.fourier_dim {
            return Err(Error::Config(format!(
                "hidden ({}) must exceed fourier_dim ({})",
                self.hidden, self.fourier_dim
            )));
        }
        if self.layers < 2 {
            return Err(Error::Config(format!("layers must be at least 2, got {}", self.layers)));
        }
        if self.hidden > 1 << 14 || self.layers > 256 {
            return Err(Error::Config("network is unreasonably large".into()));
        }
        Ok(())
    }

    /// Dense layers `1..=layers` followed by the output layer.
    pub fn layer_shapes(&self) -> Vec<LayerShape> {
        let (h, f) = (self.hidden as usize, self.fourier_dim as usize);
        let c = concat_layer_index(self.layers) as usize;
        let mut shapes = Vec::with_capacity(self.layers as usize + 1);
        let mut offset = 0;
        let mut push = |inputs: usize, outputs: usize, shapes: &mut Vec<LayerShape>| {
            shapes.push(LayerShape {
                inputs,
                outputs,
                weight_offset: offset,
                bias_offset: offset + inputs * outputs,
            });
            offset += inputs * outputs + outputs;
        };
        for i in 1..=self.layers as usize {
            let inputs = if i == 1 { f } else { h };
            let outputs = if i == c { h - f } else { h };
            push(inputs, outputs, &mut shapes);
        }
        push(h, 3, &mut shapes);
        shapes
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_shapes().last().map_or(0, |s| s.bias_offset + s.outputs)
    }

    pub fn concat_layer(&self) -> usize {
        concat_layer_index(self.layers) as usize
    }

    pub fn label(&self) -> String {
        format!("H{}L{}F{}-{}", self.hidden, self.layers, self.fourier_dim, self.colour_matrix.space_name())
    }
}

/// Largest odd integer not above `floor(layers / 2)`, at least 1.
pub fn concat_layer_index(layers: u32) -> u32 {
    let half = layers / 2;
    let odd = if half % 2 == 1 { half } else { half.saturating_sub(1) };
    odd.max(1)
}

/// Position of one dense layer inside the flat parameter vector. Weights
/// are `inputs x outputs` row-major: `w[k * outputs + j]` connects input
/// `k` to output `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub inputs: usize,
    pub outputs: usize,
    pub weight_offset: usize,
    pub bias_offset: usize,
}

impl LayerShape {
    pub fn weight_range(&self) -> std::ops::Range<usize> {
        self.weight_offset..self.bias_offset
    }

    pub fn bias_range(&self) -> std::ops::Range<usize> {
        self.bias_offset..self.bias_offset + self.outputs
    }
}

/// All trainable parameters in one flat vector, layer by layer
/// (weights then biases).
#[derive(Debug, Clone, PartialEq)]
pub struct NifWeights<T = f32> {
    config: NifConfig,
    shapes: Vec<LayerShape>,
    params: Vec<T>,
}

impl<T: Real> NifWeights<T> {
    pub fn zeros(config: NifConfig) -> Result<Self> {
        config.validate()?;
        let shapes = config.layer_shapes();
        let n = config.parameter_count();
        Ok(Self {
            config,
            shapes,
            params: vec![T::zero(); n],
        })
    }

    pub fn from_params(config: NifConfig, params: Vec<T>) -> Result<Self> {
        let mut w = Self::zeros(config)?;
        if params.len() != w.params.len() {
            return Err(Error::Config(format!(
                "{} expects {} parameters, got {}",
                config.label(),
                w.params.len(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Domain("weights must be finite".into()));
        }
        w.params = params;
        Ok(w)
    }

    /// He-uniform weights (`U(-sqrt(6 / fan_in), +sqrt(6 / fan_in))`) and
    /// zero biases, drawn from the keyed generator.
    pub fn init_he_uniform(config: NifConfig, seed: u64) -> Result<Self> {
        let mut w = Self::zeros(config)?;
        let key = RngKey::new(0, 0, 0, seed);
        for (li, s) in w.shapes.clone().iter().enumerate() {
            let limit = (6.0 / s.inputs as f64).sqrt();
            let layer_key = key.with_bounce(li as u32);
            for (d, i) in s.weight_range().enumerate() {
                let u = layer_key.uniform(d as u32) as f64;
                w.params[i] = T::lit((2.0 * u - 1.0) * limit);
            }
        }
        Ok(w)
    }

    pub fn config(&self) -> &NifConfig {
        &self.config
    }

    pub fn shapes(&self) -> &[LayerShape] {
        &self.shapes
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn weights(&self, layer: usize) -> &[T] {
        &self.params[self.shapes[layer].weight_range()]
    }

    pub fn bias(&self, layer: usize) -> &[T] {
        &self.params[self.shapes[layer].bias_range()]
    }

    pub fn cast<U: Real>(&self) -> NifWeights<U> {
        NifWeights {
            config: self.config,
            shapes: self.shapes.clone(),
            params: self.params.iter().map(|&p| U::lit(p.to_f64().unwrap())).collect(),
        }
    }

    /// Walks the layer list and checks the width bookkeeping: `F` into
    /// layer 1, `H - F` out of the concat layer, `H` everywhere else.
    pub fn shape_audit(&self) -> Result<()> {
        let (h, f) = (self.config.hidden as usize, self.config.fourier_dim as usize);
        let c = self.config.concat_layer();
        let mut width = f;
        let mut offset = 0;
        for (i, s) in self.shapes.iter().enumerate() {
            if s.inputs != width || s.weight_offset != offset {
                return Err(Error::DimensionMismatch(format!("layer {} expects width {width}", i + 1)));
            }
            offset = s.bias_offset + s.outputs;
            width = if i + 1 == c { s.outputs + f } else { s.outputs };
            if i < self.shapes.len() - 1 && width != h {
                return Err(Error::DimensionMismatch(format!("activation after layer {} is not H", i + 1)));
            }
        }
        if width != 3 || offset != self.params.len() {
            return Err(Error::DimensionMismatch("output layer must produce 3 channels".into()));
        }
        Ok(())
    }
}
