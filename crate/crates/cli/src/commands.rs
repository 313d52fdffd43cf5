//! The six verbs. Each resolves a serialisable job, runs it and records a
//! manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use neuralpt_core::imageio::{write_pfm, write_rgbe};
use neuralpt_core::integrator::RenderConfig;
use neuralpt_core::metrics::{compare_aov as aov_report, psnr, AovKernel};
use neuralpt_core::nif::{write_nifw, ColourMatrix, NifConfig};
use neuralpt_core::scene::serialize;
use neuralpt_core::train::{train_with, TrainConfig, Trainer};
use neuralpt_core::HdrImage;

use crate::error::{CliError, Context, Result};
use crate::manifest::{manifest_path, read_json, RunManifest, CODE_VERSION};
use crate::preview::write_png;
use crate::sources::{EnvSource, ImageSource, SceneSource};
use crate::{CompareAovArgs, EvalArgs, RenderArgs, ScenePackArgs, SweepArgs, TrainArgs, TrainOverrides};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenePackJob {
    pub input: String,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainJob {
    pub hdri: String,
    pub out: PathBuf,
    pub nif: NifConfig,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderJob {
    pub scene: String,
    pub env: String,
    pub out: PathBuf,
    pub exposure: f32,
    pub gamma: f32,
    pub render: RenderConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalJob {
    pub reference: String,
    pub test: String,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareAovJob {
    pub scene: String,
    pub width: u32,
    pub height: u32,
    pub test_kernel: AovKernel,
    pub reference_kernel: AovKernel,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepJob {
    pub hdris: Vec<String>,
    pub hidden: Vec<u32>,
    pub layers: Vec<u32>,
    pub colour_spaces: Vec<ColourMatrix>,
    pub fourier_dim: u32,
    pub train: TrainConfig,
    pub weights_dir: Option<PathBuf>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub hdri: String,
    pub hidden: u32,
    pub layers: u32,
    pub fourier_dim: u32,
    pub colour_space: String,
    pub parameters: usize,
    pub weight_bytes: usize,
    pub psnr_rgb: f64,
    pub psnr_luma: f64,
    pub psnr_chroma: f64,
}

pub fn scene_pack(args: ScenePackArgs) -> Result<()> {
    let start = Instant::now();
    let mut job: ScenePackJob = match &args.manifest {
        Some(p) => RunManifest::read(p)?.job("scene-pack", p)?,
        None => ScenePackJob {
            input: String::new(),
            out: PathBuf::new(),
        },
    };
    override_with(&mut job.input, args.input);
    override_with(&mut job.out, args.out);

    let source = SceneSource::parse(&job.input)?;
    if matches!(source, SceneSource::Blob(_)) {
        return Err(CliError::Config(format!("{} is already a scene blob", job.input)));
    }
    let scene = source.load()?;
    prepare_output(&job.out)?;
    std::fs::write(&job.out, serialize(&scene)).map_err(|e| CliError::io(&job.out, e))?;
    println!(
        "nodes={} bvh_bytes={} triangles={} spheres={}",
        scene.nodes.len(),
        scene.bvh_bytes(),
        scene.triangles.len(),
        scene.spheres.len()
    );
    let inputs = source.path().map(Path::to_path_buf).into_iter().collect();
    finish("scene-pack", &job, inputs, vec![job.out.clone()], None, &job.out, start)
}

pub fn train(args: TrainArgs) -> Result<()> {
    let start = Instant::now();
    let mut job: TrainJob = match &args.manifest {
        Some(p) => RunManifest::read(p)?.job("train", p)?,
        None => TrainJob {
            hdri: String::new(),
            out: PathBuf::new(),
            nif: NifConfig::default(),
            train: TrainConfig::default(),
        },
    };
    override_with(&mut job.hdri, args.hdri);
    override_with(&mut job.out, args.out);
    if let Some(p) = &args.nif {
        job.nif = read_json(p)?;
    }
    override_with(&mut job.nif.hidden, args.hidden);
    override_with(&mut job.nif.layers, args.layers);
    override_with(&mut job.nif.fourier_dim, args.fourier_dim);
    if let Some(s) = &args.colour_space {
        job.nif.colour_matrix = ColourMatrix::from_space_name(s).context(|| "--colour-space".into())?;
    }
    apply_train_overrides(&mut job.train, &args.train)?;

    let source = ImageSource::parse(&job.hdri)?;
    let image = source.load()?;
    let what = || format!("training on {}", job.hdri);
    let out = train_with(&image, job.nif, job.train, |r| {
        println!(
            "step={} psnr_rgb={:.3} psnr_luma={:.3} psnr_chroma={:.3}",
            r.step, r.psnr_rgb, r.psnr_luma, r.psnr_chroma
        );
    })
    .context(what)?;

    let trace_path = job.out.with_extension("trace.csv");
    let eval_path = job.out.with_extension("eval.pfm");
    let preview_path = job.out.with_extension("eval.png");
    prepare_output(&job.out)?;
    write_nifw(&job.out, &out.weights).context(|| "writing weights".into())?;
    write_csv(&trace_path, &out.trace)?;
    let recon = Trainer::with_weights(&image, out.weights.clone(), job.train)
        .and_then(|t| t.reconstruct())
        .context(what)?;
    write_pfm(&eval_path, &recon).context(|| "writing eval image".into())?;
    write_png(&preview_path, &recon, 0.0, 2.2)?;

    let fin = out.final_psnr();
    println!(
        "label={} parameters={} final_psnr_rgb={} final_psnr_luma={} final_psnr_chroma={}",
        job.nif.label(),
        job.nif.parameter_count(),
        fin.psnr_rgb,
        fin.psnr_luma,
        fin.psnr_chroma
    );
    let inputs = source.path().map(Path::to_path_buf).into_iter().collect();
    let outputs = vec![job.out.clone(), trace_path, eval_path, preview_path];
    finish("train", &job, inputs, outputs, Some(job.train.seed), &job.out, start)
}

pub fn render(args: RenderArgs) -> Result<()> {
    let start = Instant::now();
    let mut job: RenderJob = match &args.manifest {
        Some(p) => RunManifest::read(p)?.job("render", p)?,
        None => RenderJob {
            scene: String::new(),
            env: String::new(),
            out: PathBuf::new(),
            exposure: 0.0,
            gamma: 2.2,
            render: RenderConfig::default(),
        },
    };
    override_with(&mut job.scene, args.scene);
    override_with(&mut job.env, args.env);
    override_with(&mut job.out, args.out);
    if let Some(p) = &args.config {
        job.render = read_json(p)?;
    }
    let r = &mut job.render;
    override_with(&mut r.width, args.width);
    override_with(&mut r.height, args.height);
    override_with(&mut r.spp, args.spp);
    override_with(&mut r.max_depth, args.max_depth);
    override_with(&mut r.roulette_start_depth, args.roulette_start_depth);
    override_with(&mut r.env_batch_chunk, args.env_batch_chunk);
    override_with(&mut r.workers, args.workers);
    override_with(&mut r.seed, args.seed);
    override_with(&mut job.exposure, args.exposure);
    override_with(&mut job.gamma, args.gamma);
    if !(job.gamma.is_finite() && job.gamma > 0.0 && job.exposure.is_finite()) {
        return Err(CliError::Config("gamma must be positive and exposure finite".into()));
    }

    let write: fn(&Path, &HdrImage) -> neuralpt_core::Result<()> = match extension(&job.out).as_str() {
        "pfm" => |p, i| write_pfm(p, i),
        "hdr" => |p, i| write_rgbe(p, i),
        _ => {
            return Err(CliError::Config(format!(
                "render output {} must end in .pfm or .hdr",
                job.out.display()
            )))
        }
    };
    let scene_src = SceneSource::parse(&job.scene)?;
    let env_src = EnvSource::parse(&job.env)?;
    let scene = scene_src.load()?;
    let env = env_src.load()?;
    let img = neuralpt_core::integrator::render(&scene, &job.render, &env)
        .context(|| format!("rendering {} under {}", job.scene, job.env))?;

    let preview_path = job.out.with_extension("png");
    prepare_output(&job.out)?;
    write(&job.out, &img).context(|| "writing render".into())?;
    write_png(&preview_path, &img, job.exposure, job.gamma)?;
    let m = img.mean();
    println!(
        "width={} height={} spp={} mean_r={} mean_g={} mean_b={}",
        job.render.width, job.render.height, job.render.spp, m[0], m[1], m[2]
    );
    let inputs = [scene_src.path(), env_src.path()].into_iter().flatten().map(Path::to_path_buf).collect();
    let outputs = vec![job.out.clone(), preview_path];
    finish("render", &job, inputs, outputs, Some(job.render.seed), &job.out, start)
}

pub fn eval(args: EvalArgs) -> Result<()> {
    let start = Instant::now();
    let mut job: EvalJob = match &args.manifest {
        Some(p) => RunManifest::read(p)?.job("eval", p)?,
        None => EvalJob {
            reference: String::new(),
            test: String::new(),
            out: PathBuf::new(),
        },
    };
    override_with(&mut job.reference, args.reference);
    override_with(&mut job.test, args.test);
    override_with(&mut job.out, args.out);

    let (rs, ts) = (ImageSource::parse(&job.reference)?, ImageSource::parse(&job.test)?);
    let (reference, test) = (rs.load()?, ts.load()?);
    let report = psnr(&reference, &test).context(|| "comparing images".into())?;

    #[derive(Serialize)]
    struct Row<'a> {
        reference: &'a str,
        test: &'a str,
        psnr_rgb: f64,
        psnr_luma: f64,
        psnr_chroma: f64,
    }
    prepare_output(&job.out)?;
    write_csv(
        &job.out,
        &[Row {
            reference: &job.reference,
            test: &job.test,
            psnr_rgb: report.psnr_rgb,
            psnr_luma: report.psnr_luma,
            psnr_chroma: report.psnr_chroma,
        }],
    )?;
    println!(
        "psnr_rgb={} psnr_luma={} psnr_chroma={}",
        report.psnr_rgb, report.psnr_luma, report.psnr_chroma
    );
    let inputs = [rs.path(), ts.path()].into_iter().flatten().map(Path::to_path_buf).collect();
    finish("eval", &job, inputs, vec![job.out.clone()], None, &job.out, start)
}

pub fn compare_aov(args: CompareAovArgs) -> Result<()> {
    let start = Instant::now();
    let mut job: CompareAovJob = match &args.manifest {
        Some(p) => RunManifest::read(p)?.job("compare-aov", p)?,
        None => CompareAovJob {
            scene: String::new(),
            width: 256,
            height: 256,
            test_kernel: AovKernel::F32Bvh,
            reference_kernel: AovKernel::F64BruteForce,
            out: PathBuf::new(),
        },
    };
    override_with(&mut job.scene, args.scene);
    override_with(&mut job.out, args.out);
    if let Some((w, h)) = args.resolution {
        (job.width, job.height) = (w, h);
    }
    if let Some(k) = &args.test_kernel {
        job.test_kernel = parse_enum(k, "--test-kernel")?;
    }
    if let Some(k) = &args.reference_kernel {
        job.reference_kernel = parse_enum(k, "--reference-kernel")?;
    }
    if job.width == 0 || job.height == 0 {
        return Err(CliError::Config("resolution must be positive".into()));
    }

    let source = SceneSource::parse(&job.scene)?;
    let scene = source.load()?;
    let r = aov_report(&scene, job.width, job.height, job.test_kernel, job.reference_kernel);

    #[derive(Serialize)]
    struct Row<'a> {
        scene: &'a str,
        width: u32,
        height: u32,
        test_kernel: AovKernel,
        reference_kernel: AovKernel,
        pixels: usize,
        compared: usize,
        outliers: usize,
        normal_mse: f64,
        hit_point_mse: f64,
    }
    prepare_output(&job.out)?;
    write_csv(
        &job.out,
        &[Row {
            scene: &job.scene,
            width: job.width,
            height: job.height,
            test_kernel: job.test_kernel,
            reference_kernel: job.reference_kernel,
            pixels: r.pixels,
            compared: r.compared,
            outliers: r.outliers,
            normal_mse: r.normal_mse,
            hit_point_mse: r.hit_point_mse,
        }],
    )?;
    println!(
        "pixels={} compared={} outliers={} normal_mse={:e} hit_point_mse={:e}",
        r.pixels, r.compared, r.outliers, r.normal_mse, r.hit_point_mse
    );
    let inputs = source.path().map(Path::to_path_buf).into_iter().collect();
    finish("compare-aov", &job, inputs, vec![job.out.clone()], None, &job.out, start)
}

pub fn sweep(args: SweepArgs) -> Result<()> {
    let start = Instant::now();
    let mut job: SweepJob = match &args.manifest {
        Some(p) => RunManifest::read(p)?.job("sweep", p)?,
        None => SweepJob {
            hdris: Vec::new(),
            hidden: vec![NifConfig::default().hidden],
            layers: vec![NifConfig::default().layers],
            colour_spaces: vec![NifConfig::default().colour_matrix],
            fourier_dim: NifConfig::default().fourier_dim,
            train: TrainConfig::default(),
            weights_dir: None,
            out: PathBuf::new(),
        },
    };
    if !args.hdri.is_empty() {
        job.hdris = args.hdri;
    }
    if !args.hidden.is_empty() {
        job.hidden = args.hidden;
    }
    if !args.layers.is_empty() {
        job.layers = args.layers;
    }
    if !args.colour_space.is_empty() {
        job.colour_spaces = args
            .colour_space
            .iter()
            .map(|s| ColourMatrix::from_space_name(s))
            .collect::<neuralpt_core::Result<_>>()
            .context(|| "--colour-space".into())?;
    }
    override_with(&mut job.fourier_dim, args.fourier_dim);
    if args.weights_dir.is_some() {
        job.weights_dir = args.weights_dir;
    }
    override_with(&mut job.out, args.out);
    apply_train_overrides(&mut job.train, &args.train)?;

    // validate the whole grid before spending time on any cell
    let mut cells = Vec::new();
    for hdri in &job.hdris {
        for &hidden in &job.hidden {
            for &layers in &job.layers {
                for &colour_matrix in &job.colour_spaces {
                    let nif = NifConfig {
                        hidden,
                        layers,
                        fourier_dim: job.fourier_dim,
                        colour_matrix,
                        ..NifConfig::default()
                    };
                    nif.validate().context(|| format!("sweep cell {}", nif.label()))?;
                    cells.push((hdri.as_str(), nif));
                }
            }
        }
    }
    if cells.is_empty() {
        return Err(CliError::Config("sweep grid is empty".into()));
    }
    job.train.validate().context(|| "training config".into())?;
    let sources = job.hdris.iter().map(|h| ImageSource::parse(h)).collect::<Result<Vec<_>>>()?;
    prepare_output(&job.out)?;
    if let Some(d) = &job.weights_dir {
        std::fs::create_dir_all(d).map_err(|e| CliError::io(d, e))?;
    }

    let mut rows = Vec::with_capacity(cells.len());
    let mut outputs = vec![job.out.clone()];
    let mut loaded: Option<(&str, HdrImage)> = None;
    for (hdri, nif) in cells {
        if loaded.as_ref().map(|l| l.0) != Some(hdri) {
            let i = job.hdris.iter().position(|h| h == hdri).expect("cell hdri is listed");
            loaded = Some((hdri, sources[i].load()?));
        }
        let image = &loaded.as_ref().expect("image loaded").1;
        let out = train_with(image, nif, job.train, |_| {}).context(|| format!("training {} on {hdri}", nif.label()))?;
        let fin = out.final_psnr();
        let params = nif.parameter_count();
        let row = SweepRow {
            hdri: hdri.to_string(),
            hidden: nif.hidden,
            layers: nif.layers,
            fourier_dim: nif.fourier_dim,
            colour_space: nif.colour_matrix.space_name().to_string(),
            parameters: params,
            weight_bytes: params * std::mem::size_of::<f32>(),
            psnr_rgb: fin.psnr_rgb,
            psnr_luma: fin.psnr_luma,
            psnr_chroma: fin.psnr_chroma,
        };
        println!(
            "hdri={} label={} parameters={} psnr_rgb={:.3} psnr_luma={:.3} psnr_chroma={:.3}",
            row.hdri,
            nif.label(),
            row.parameters, row.psnr_rgb, row.psnr_luma, row.psnr_chroma
        );
        if let Some(d) = &job.weights_dir {
            let name = format!("{}_{}.nifw", file_label(hdri), nif.label());
            let path = d.join(name);
            write_nifw(&path, &out.weights).context(|| "writing sweep weights".into())?;
            outputs.push(path);
        }
        rows.push(row);
    }
    write_csv(&job.out, &rows)?;
    let inputs = sources.iter().filter_map(|s| s.path()).map(Path::to_path_buf).collect();
    finish("sweep", &job, inputs, outputs, Some(job.train.seed), &job.out, start)
}

fn apply_train_overrides(cfg: &mut TrainConfig, o: &TrainOverrides) -> Result<()> {
    if let Some(p) = &o.config {
        *cfg = read_json(p)?;
    }
    override_with(&mut cfg.steps, o.steps);
    override_with(&mut cfg.batch_size, o.batch_size);
    override_with(&mut cfg.learning_rate, o.learning_rate);
    override_with(&mut cfg.huber_delta, o.huber_delta);
    override_with(&mut cfg.eval_interval, o.eval_interval);
    override_with(&mut cfg.seed, o.seed);
    if let Some((w, h)) = o.eval_size {
        (cfg.eval_width, cfg.eval_height) = (w, h);
    }
    if let Some(s) = &o.master_precision {
        cfg.master_precision = parse_enum(s, "--master-precision")?;
    }
    Ok(())
}

fn override_with<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Parses a snake_case enum name through its serde representation.
fn parse_enum<T: DeserializeOwned>(s: &str, flag: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|e| CliError::Config(format!("{flag}: {e}")))
}

fn extension(p: &Path) -> String {
    p.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

fn file_label(source: &str) -> String {
    let base = Path::new(source.trim_start_matches("synth:"))
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("hdri")
        .to_string();
    base.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

fn prepare_output(out: &Path) -> Result<()> {
    if out.as_os_str().is_empty() {
        return Err(CliError::Config("no output path given".into()));
    }
    match out.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e)),
        _ => Ok(()),
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::io(path, source),
        other => CliError::Encode {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

fn finish<J: Serialize>(
    command: &str,
    job: &J,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    seed: Option<u64>,
    out: &Path,
    start: Instant,
) -> Result<()> {
    let manifest = RunManifest {
        command: command.to_string(),
        config: serde_json::to_value(job).expect("job serialises"),
        inputs,
        outputs,
        seed,
        code_version: CODE_VERSION.to_string(),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let path = manifest_path(out);
    manifest.write(&path)?;
    println!("manifest={}", path.display());
    Ok(())
}
