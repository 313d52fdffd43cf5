use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use neuralpt_cli::manifest::manifest_path;
use neuralpt_cli::RunManifest;
use neuralpt_core::imageio::{read_image, write_pfm};
use neuralpt_core::{HdrImage, Rgb};

fn neuralpt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neuralpt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = neuralpt(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Runs a failing command and returns its single stderr line.
fn fails(args: &[&str]) -> String {
    let out = neuralpt(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    err.trim_end().to_string()
}

/// `key=value` field from a summary line.
fn field(stdout: &str, key: &str) -> String {
    stdout
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing from {stdout}"))
        .to_string()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn scene_pack_reports_compact_node_bytes() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["box", "box_spheres", "spheres"] {
        let out = dir.path().join(format!("{name}.sblob"));
        let stdout = ok(&["scene-pack", name, "-o", s(&out)]);
        let nodes: usize = field(&stdout, "nodes").parse().unwrap();
        let bytes: usize = field(&stdout, "bvh_bytes").parse().unwrap();
        assert!(nodes > 0);
        assert_eq!(bytes, 24 * nodes);
        assert!(out.exists());
        let m = RunManifest::read(&manifest_path(&out)).unwrap();
        assert_eq!(m.command, "scene-pack");
        assert_eq!(m.outputs, vec![out.clone()]);
        assert_eq!(m.config["input"], name);
    }
}

#[test]
fn missing_obj_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = fails(&["scene-pack", s(&dir.path().join("nope.obj")), "-o", s(&dir.path().join("x.sblob"))]);
    assert!(err.starts_with("error[io]:"), "{err}");
    assert!(err.contains("nope.obj"));
}

#[test]
fn obj_scene_packs_and_renders() {
    let dir = tempfile::tempdir().unwrap();
    let obj = dir.path().join("tri.obj");
    std::fs::write(&obj, "v -1 -1 0\nv 1 -1 0\nv 0 1 0\nf 1 2 3\n").unwrap();
    let blob = dir.path().join("tri.sblob");
    let stdout = ok(&["scene-pack", s(&obj), "-o", s(&blob)]);
    assert_eq!(field(&stdout, "triangles"), "1");
    let m = RunManifest::read(&manifest_path(&blob)).unwrap();
    assert_eq!(m.inputs, vec![obj]);
    ok(&["render", "--scene", s(&blob), "--env", "constant:1", "--width", "8", "--height", "8", "--spp", "2", "-o", s(&dir.path().join("tri.pfm"))]);
}

#[test]
fn packed_scene_renders_like_the_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let blob = dir.path().join("bs.sblob");
    ok(&["scene-pack", "box_spheres", "-o", s(&blob)]);
    let common = ["--env", "synth:studio@64x32", "--width", "24", "--height", "20", "--spp", "4", "--seed", "3"];
    let a = dir.path().join("a.pfm");
    let b = dir.path().join("b.pfm");
    ok(&[&["render", "--scene", s(&blob), "-o", s(&a)][..], &common].concat());
    ok(&[&["render", "--scene", "box_spheres", "-o", s(&b)][..], &common].concat());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(a.with_extension("png").exists());
}

#[test]
fn empty_scene_under_constant_half_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("flat.pfm");
    ok(&["render", "--scene", "empty", "--env", "constant:0.5", "--width", "16", "--height", "9", "--spp", "3", "-o", s(&out)]);
    let img = read_image(&out).unwrap();
    assert_eq!((img.width(), img.height()), (16, 9));
    assert!(img.pixels().iter().all(|p| *p == Rgb::splat(0.5)));
}

#[test]
fn render_config_file_flags_and_manifest_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("render.json");
    std::fs::write(&cfg, r#"{"width": 20, "height": 12, "spp": 2, "seed": 9}"#).unwrap();
    let out = dir.path().join("r.hdr");
    ok(&["render", "--scene", "spheres", "--env", "synth:sun_sky@64x32", "--config", s(&cfg), "--width", "10", "-o", s(&out)]);
    let manifest = manifest_path(&out);
    let m = RunManifest::read(&manifest).unwrap();
    assert_eq!(m.command, "render");
    assert_eq!(m.config["render"]["width"], 10);
    assert_eq!(m.config["render"]["height"], 12);
    assert_eq!(m.seed, Some(9));
    assert!(m.wall_time_s >= 0.0);
    assert!(!m.code_version.is_empty());
    let img = read_image(&out).unwrap();
    assert_eq!((img.width(), img.height()), (10, 12));

    let first = std::fs::read(&out).unwrap();
    let again = dir.path().join("again.hdr");
    ok(&["render", "--manifest", s(&manifest), "-o", s(&again)]);
    assert_eq!(std::fs::read(&again).unwrap(), first);

    std::fs::write(&cfg, r#"{"width": 20, "colour": 1}"#).unwrap();
    let err = fails(&["render", "--scene", "box", "--env", "constant:1", "--config", s(&cfg), "-o", s(&out)]);
    assert!(err.starts_with("error[config]:"), "{err}");
}

#[test]
fn render_rejects_bad_requests() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.pfm");
    let err = fails(&["render", "--scene", "box", "--env", "constant:1", "--spp", "0", "-o", s(&out)]);
    assert!(err.starts_with("error[config]:"), "{err}");
    let err = fails(&["render", "--scene", "box", "--env", "constant:1", "-o", s(&dir.path().join("x.png"))]);
    assert!(err.starts_with("error[config]:"), "{err}");
    let err = fails(&["render", "--scene", "teapot", "--env", "constant:1", "-o", s(&out)]);
    assert!(err.starts_with("error[config]:"), "{err}");
    let bogus = dir.path().join("bogus.nifw");
    std::fs::write(&bogus, b"NIFW nonsense").unwrap();
    let err = fails(&["render", "--scene", "box", "--env", s(&bogus), "-o", s(&out)]);
    assert!(err.starts_with("error[format]:"), "{err}");
    let m = manifest_path(&dir.path().join("scene.sblob"));
    ok(&["scene-pack", "box", "-o", s(&dir.path().join("scene.sblob"))]);
    let err = fails(&["render", "--manifest", s(&m)]);
    assert!(err.starts_with("error[config]:") && err.contains("scene-pack"), "{err}");
}

#[test]
fn usage_errors_are_one_line() {
    let err = fails(&["render", "--bogus"]);
    assert!(err.starts_with("error[usage]:"), "{err}");
    assert_eq!(neuralpt(&["render", "--bogus"]).status.code(), Some(2));
    let err = fails(&["frobnicate"]);
    assert!(err.starts_with("error[usage]:"), "{err}");
    assert!(neuralpt(&["--help"]).status.success());
}

fn constant_image(dir: &Path) -> PathBuf {
    let path = dir.join("const.pfm");
    write_pfm(&path, &HdrImage::new(64, 32, Rgb::new(0.7, 0.4, 1.5)).unwrap()).unwrap();
    path
}

#[test]
fn constant_image_fit_is_deterministic_and_replayable() {
    let dir = tempfile::tempdir().unwrap();
    let hdri = constant_image(dir.path());
    let train = |out: &Path| {
        ok(&[
            "train", "--hdri", s(&hdri), "--hidden", "48", "--layers", "2", "--steps", "2000", "--batch-size", "256",
            "--eval-interval", "500", "--eval-size", "64x32", "--seed", "4", "-o", s(out),
        ])
    };
    let a = dir.path().join("a.nifw");
    let stdout = train(&a);
    let psnr: f64 = field(&stdout, "final_psnr_rgb").parse().unwrap();
    // fixed-rate Adam limit-cycles around 50 dB on a flat target
    assert!(psnr >= 45.0, "final PSNR {psnr}");

    let trace = csv_rows(&a.with_extension("trace.csv"));
    assert_eq!(trace[0], ["step", "psnr_rgb", "psnr_luma", "psnr_chroma"]);
    assert_eq!(trace.len() - 1, 2000 / 500);
    assert_eq!(trace.last().unwrap()[0], "2000");
    let eval = read_image(a.with_extension("eval.pfm")).unwrap();
    assert_eq!((eval.width(), eval.height()), (64, 32));
    assert!(a.with_extension("eval.png").exists());

    let b = dir.path().join("b.nifw");
    train(&b);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let c = dir.path().join("c.nifw");
    ok(&["train", "--manifest", s(&manifest_path(&a)), "-o", s(&c)]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
    assert_eq!(
        std::fs::read(a.with_extension("eval.pfm")).unwrap(),
        std::fs::read(c.with_extension("eval.pfm")).unwrap()
    );
    let m = RunManifest::read(&manifest_path(&c)).unwrap();
    assert_eq!(m.inputs, vec![hdri.clone()]);
    assert_eq!(m.seed, Some(4));
    assert_eq!(m.outputs.len(), 4);

    // trained weights drive the renderer as an environment
    let r = dir.path().join("lit.pfm");
    ok(&["render", "--scene", "empty", "--env", s(&a), "--width", "8", "--height", "8", "--spp", "1", "-o", s(&r)]);
    for p in read_image(&r).unwrap().pixels() {
        assert!((p.r - 0.7).abs() < 0.03 && (p.g - 0.4).abs() < 0.03 && (p.b - 1.5).abs() < 0.05, "{p:?}");
    }
}

#[test]
fn unreadable_hdri_names_the_decoder() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.hdr");
    std::fs::write(&bad, b"#?RADIANCE\nFORMAT=32-bit_rgbe\n\n-Y 4 +X 4\n\x01").unwrap();
    let err = fails(&["train", "--hdri", s(&bad), "--steps", "1", "-o", s(&dir.path().join("w.nifw"))]);
    assert!(err.starts_with("error[format]:") && err.contains("Radiance"), "{err}");
    let junk = dir.path().join("junk.pfm");
    std::fs::write(&junk, b"P6\n1 1\n255\n\0\0\0").unwrap();
    let err = fails(&["train", "--hdri", s(&junk), "--steps", "1", "-o", s(&dir.path().join("w.nifw"))]);
    assert!(err.starts_with("error[format]:") && err.contains("PFM"), "{err}");
    let err = fails(&["train", "--hdri", "synth:sun_sky@32x16", "--hidden", "32", "-o", s(&dir.path().join("w.nifw"))]);
    assert!(err.starts_with("error[config]:"), "{err}");
}

#[test]
fn eval_reports_inf_and_closed_form_db() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.pfm");
    let half = dir.path().join("half.pfm");
    write_pfm(&one, &HdrImage::new(8, 4, Rgb::splat(1.0)).unwrap()).unwrap();
    write_pfm(&half, &HdrImage::new(8, 4, Rgb::splat(0.5)).unwrap()).unwrap();

    let same = dir.path().join("same.csv");
    let stdout = ok(&["eval", s(&one), s(&one), "-o", s(&same)]);
    assert_eq!(field(&stdout, "psnr_rgb"), "inf");
    let rows = csv_rows(&same);
    assert_eq!(rows[0], ["reference", "test", "psnr_rgb", "psnr_luma", "psnr_chroma"]);
    assert_eq!(rows[1][2..], ["inf", "inf", "inf"]);

    let diff = dir.path().join("diff.csv");
    ok(&["eval", s(&one), s(&half), "-o", s(&diff)]);
    let rows = csv_rows(&diff);
    // grey difference: every channel and luma are off by ln 2 - ln 1.5, chroma is exact
    let d = 2f64.ln() - 1.5f64.ln();
    let want = 20.0 * (2f64.ln() / d).log10();
    let rgb: f64 = rows[1][2].parse().unwrap();
    let luma: f64 = rows[1][3].parse().unwrap();
    assert!((rgb - want).abs() < 1e-4, "{rgb} vs {want}");
    assert!((luma - want).abs() < 1e-3, "{luma} vs {want}");
    assert!(rows[1][4] == "inf" || rows[1][4].parse::<f64>().unwrap() > 100.0);

    let small = dir.path().join("small.pfm");
    write_pfm(&small, &HdrImage::new(4, 4, Rgb::splat(1.0)).unwrap()).unwrap();
    let err = fails(&["eval", s(&one), s(&small), "-o", s(&diff)]);
    assert!(err.starts_with("error[dimension]:"), "{err}");
}

#[test]
fn aov_self_compare_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("aov.csv");
    let stdout = ok(&[
        "compare-aov", "--scene", "box", "--resolution", "32x32", "--test-kernel", "f32_bvh", "--reference-kernel",
        "f32_bvh", "-o", s(&out),
    ]);
    assert_eq!(field(&stdout, "outliers"), "0");
    let rows = csv_rows(&out);
    assert_eq!(
        rows[0],
        ["scene", "width", "height", "test_kernel", "reference_kernel", "pixels", "compared", "outliers", "normal_mse", "hit_point_mse"]
    );
    assert_eq!(rows[1][5], "1024");
    assert_eq!(rows[1][7], "0");
    assert_eq!(rows[1][8..], ["0.0", "0.0"]);

    ok(&["compare-aov", "--scene", "spheres", "--resolution", "32x32", "-o", s(&out)]);
    let rows = csv_rows(&out);
    assert_eq!(rows[1][3..5], ["f32_bvh", "f64_brute_force"]);
    let err = fails(&["compare-aov", "--scene", "box", "--test-kernel", "gpu", "-o", s(&out)]);
    assert!(err.starts_with("error[config]:"), "{err}");
}

#[test]
fn sweep_of_one_cell_has_one_row_and_analytic_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let weights = dir.path().join("w");
    ok(&[
        "sweep", "--hdri", "synth:sun_sky@32x16", "--hidden", "128", "--layers", "5", "--colour-space", "yuv",
        "--steps", "5", "--batch-size", "64", "--eval-interval", "5", "--eval-size", "32x16", "--weights-dir",
        s(&weights), "-o", s(&out),
    ]);
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 2);
    let col = |name: &str| rows[0].iter().position(|c| c == name).unwrap();
    // 40->88 concat layer, four 128->128 layers, 128->3 output
    let params = (40 * 88 + 88) + 4 * (128 * 128 + 128) + (128 * 3 + 3);
    assert_eq!(rows[1][col("parameters")], params.to_string());
    assert_eq!(rows[1][col("weight_bytes")], (4 * params).to_string());
    assert_eq!(rows[1][col("colour_space")], "yuv");
    for c in ["psnr_rgb", "psnr_luma", "psnr_chroma"] {
        assert!(rows[1][col(c)].parse::<f64>().unwrap().is_finite());
    }
    assert_eq!(std::fs::read_dir(&weights).unwrap().count(), 1);

    let again = dir.path().join("again.csv");
    ok(&["sweep", "--manifest", s(&manifest_path(&out)), "-o", s(&again)]);
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn sweep_grid_is_the_cartesian_product() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid.csv");
    ok(&[
        "sweep", "--hdri", "synth:sun_sky@16x8,synth:studio@16x8", "--hidden", "48,64", "--layers", "2",
        "--colour-space", "rgb,ycocg,yuv", "--steps", "2", "--batch-size", "16", "--eval-interval", "2",
        "--eval-size", "16x8", "-o", s(&out),
    ]);
    assert_eq!(csv_rows(&out).len(), 1 + 2 * 2 * 3);
    let err = fails(&["sweep", "--hdri", "synth:studio@16x8", "--hidden", "64,40", "-o", s(&out)]);
    assert!(err.starts_with("error[config]:") && err.contains("H40"), "{err}");
}
