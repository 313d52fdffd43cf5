//! Textual scene, environment and image sources as accepted on the command
//! line and stored in manifests.

use std::path::{Path, PathBuf};

use neuralpt_core::imageio::read_image;
use neuralpt_core::integrator::Environment;
use neuralpt_core::nif::{read_nifw, NIFW_MAGIC};
use neuralpt_core::scene::{builtin_scene, deserialize, load_obj, BuiltinScene, Camera, Scene};
use neuralpt_core::synth::SynthHdri;
use neuralpt_core::{HdrImage, Rgb};

use crate::error::{CliError, Context, Result};

pub const DEFAULT_SYNTH_SIZE: (u32, u32) = (512, 256);

/// Where a scene comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum SceneSource {
    Builtin(BuiltinScene),
    /// No geometry, default camera.
    Empty,
    Blob(PathBuf),
    Obj(PathBuf),
}

impl SceneSource {
    /// Builtin names and `empty` win over paths; otherwise the extension
    /// picks the loader.
    pub fn parse(s: &str) -> Result<Self> {
        if s == "empty" {
            return Ok(SceneSource::Empty);
        }
        if let Ok(b) = s.parse::<BuiltinScene>() {
            return Ok(SceneSource::Builtin(b));
        }
        let path = PathBuf::from(s);
        match extension(&path).as_str() {
            "sblob" => Ok(SceneSource::Blob(path)),
            "obj" => Ok(SceneSource::Obj(path)),
            _ => Err(CliError::Config(format!(
                "scene '{s}' is neither a builtin (box, box_spheres, spheres, empty) nor a .sblob/.obj path"
            ))),
        }
    }

    pub fn path(&self) -> Option<&Path> {
        match self {
            SceneSource::Blob(p) | SceneSource::Obj(p) => Some(p),
            _ => None,
        }
    }

    pub fn load(&self) -> Result<Scene> {
        match self {
            SceneSource::Builtin(b) => Ok(builtin_scene(*b)),
            SceneSource::Empty => Ok(Scene::empty(Camera::default())),
            SceneSource::Blob(p) => {
                let bytes = std::fs::read(p).map_err(|e| CliError::io(p, e))?;
                deserialize(&bytes).context(|| format!("decoding scene blob {}", p.display()))
            }
            SceneSource::Obj(p) => load_obj(p)
                .and_then(|m| m.into_scene())
                .context(|| format!("loading OBJ {}", p.display())),
        }
    }
}

/// An HDR image: a file, or `synth:NAME[@WxH]`.
#[derive(Debug, Clone, PartialEq)]
pub enum ImageSource {
    File(PathBuf),
    Synth { which: SynthHdri, width: u32, height: u32 },
}

impl ImageSource {
    pub fn parse(s: &str) -> Result<Self> {
        let Some(rest) = s.strip_prefix("synth:") else {
            return Ok(ImageSource::File(PathBuf::from(s)));
        };
        let (name, size) = match rest.split_once('@') {
            Some((n, sz)) => (n, Some(sz)),
            None => (rest, None),
        };
        let which = name.parse::<SynthHdri>().context(|| format!("image source '{s}'"))?;
        let (width, height) = match size {
            None => DEFAULT_SYNTH_SIZE,
            Some(sz) => parse_size(sz).ok_or_else(|| CliError::Config(format!("bad size in '{s}', expected WxH")))?,
        };
        Ok(ImageSource::Synth { which, width, height })
    }

    pub fn path(&self) -> Option<&Path> {
        match self {
            ImageSource::File(p) => Some(p),
            ImageSource::Synth { .. } => None,
        }
    }

    pub fn load(&self) -> Result<HdrImage> {
        match self {
            ImageSource::File(p) => read_image(p).context(|| format!("reading image {}", p.display())),
            ImageSource::Synth { which, width, height } => which
                .render(*width, *height)
                .context(|| format!("generating {}", which.name())),
        }
    }
}

/// Environment light: `constant:V` or `constant:R,G,B`, a `.nifw` weight
/// file, or any [`ImageSource`].
#[derive(Debug, Clone, PartialEq)]
pub enum EnvSource {
    Constant(Rgb),
    Weights(PathBuf),
    Image(ImageSource),
}

impl EnvSource {
    pub fn parse(s: &str) -> Result<Self> {
        if let Some(v) = s.strip_prefix("constant:") {
            let parts: Vec<f32> = v
                .split(',')
                .map(|c| c.trim().parse::<f32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| CliError::Config(format!("bad constant environment '{s}': {e}")))?;
            let c = match parts[..] {
                [g] => Rgb::splat(g),
                [r, g, b] => Rgb::new(r, g, b),
                _ => return Err(CliError::Config(format!("constant environment '{s}' needs 1 or 3 values"))),
            };
            if !c.to_array().iter().all(|x| x.is_finite() && *x >= 0.0) {
                return Err(CliError::Config(format!("constant environment '{s}' must be finite and non-negative")));
            }
            return Ok(EnvSource::Constant(c));
        }
        let image = ImageSource::parse(s)?;
        if let ImageSource::File(p) = &image {
            if extension(p) == "nifw" || starts_with_magic(p) {
                return Ok(EnvSource::Weights(p.clone()));
            }
        }
        Ok(EnvSource::Image(image))
    }

    pub fn path(&self) -> Option<&Path> {
        match self {
            EnvSource::Constant(_) => None,
            EnvSource::Weights(p) => Some(p),
            EnvSource::Image(i) => i.path(),
        }
    }

    pub fn load(&self) -> Result<Environment> {
        match self {
            EnvSource::Constant(c) => Ok(Environment::Constant(*c)),
            EnvSource::Weights(p) => read_nifw(p)
                .map(Environment::Nif)
                .context(|| format!("reading weights {}", p.display())),
            EnvSource::Image(i) => i.load().map(Environment::Image),
        }
    }
}

fn extension(p: &Path) -> String {
    p.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

fn starts_with_magic(p: &Path) -> bool {
    use std::io::Read;
    let mut head = [0u8; 4];
    std::fs::File::open(p).and_then(|mut f| f.read_exact(&mut head)).is_ok() && head == NIFW_MAGIC
}

pub fn parse_size(s: &str) -> Option<(u32, u32)> {
    let (w, h) = s.split_once(['x', 'X'])?;
    let (w, h) = (w.trim().parse().ok()?, h.trim().parse().ok()?);
    (w > 0 && h > 0).then_some((w, h))
}
