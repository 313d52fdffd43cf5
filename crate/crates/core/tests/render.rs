use neuralpt_core::integrator::{equirect_to_dir, dir_to_equirect, render, CameraFrame, Environment, RenderConfig};
use neuralpt_core::scene::{builtin_scene, deserialize, serialize, BuiltinScene, Camera, Material, Scene, Sphere};
use neuralpt_core::{HdrImage, Rgb, Vec3};

fn smooth_env() -> HdrImage {
    HdrImage::from_fn(64, 32, |x, y| {
        let u = (x as f32 + 0.5) / 64.0;
        let v = (y as f32 + 0.5) / 32.0;
        Rgb::new(1.0 + (6.28 * u).sin() * 0.5, 0.2 + v, 2.0 - v)
    })
    .unwrap()
}

#[test]
fn empty_scene_pixels_integrate_the_environment_over_the_footprint() {
    let env = smooth_env();
    let (w, h) = (8u32, 6u32);
    let cfg = RenderConfig {
        width: w,
        height: h,
        spp: 1024,
        ..RenderConfig::default()
    };
    let camera = Camera {
        vfov_deg: 90.0,
        ..Camera::default()
    };
    let img = render(&Scene::empty(camera), &cfg, &Environment::Image(env.clone())).unwrap();
    // midpoint quadrature of the pixel footprint in f64 camera space
    let frame = CameraFrame::<f64>::new(&camera, w, h);
    let n = 64;
    for py in 0..h {
        for px in 0..w {
            let mut sum = [0.0f64; 3];
            for j in 0..n {
                for i in 0..n {
                    let r = frame.ray(px, py, (i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64);
                    let d = Vec3::new(r.dir.x as f32, r.dir.y as f32, r.dir.z as f32);
                    let (u, v) = dir_to_equirect(d);
                    let c = env.bilinear(u, v);
                    sum[0] += c.r as f64;
                    sum[1] += c.g as f64;
                    sum[2] += c.b as f64;
                }
            }
            let got = img.get(px, py).to_array();
            for c in 0..3 {
                let want = sum[c] / (n * n) as f64;
                // 1024 samples of a smooth, bounded integrand
                assert!((got[c] as f64 - want).abs() < 0.02 * want.max(0.2), "({px},{py}) c{c}: {} vs {want}", got[c]);
            }
        }
    }
}

#[test]
fn convex_diffuse_sphere_reflects_a_constant_sky_exactly() {
    // every bounce off a convex object escapes, so a full hit is albedo x sky
    let albedo = Rgb::new(0.8, 0.5, 0.25);
    let sky = Rgb::new(2.0, 1.0, 4.0);
    let scene = Scene::new(
        vec![],
        vec![],
        vec![Sphere {
            centre: Vec3::new(0.0, 0.0, -4.0),
            radius: 1.0,
            material: 0,
        }],
        vec![Material::diffuse(albedo)],
        Camera::default(),
    )
    .unwrap();
    let cfg = RenderConfig {
        width: 16,
        height: 16,
        spp: 8,
        ..RenderConfig::default()
    };
    let img = render(&scene, &cfg, &Environment::Constant(sky)).unwrap();
    assert_eq!(img.get(8, 8), albedo * sky);
    assert_eq!(img.get(0, 0), sky);
}

#[test]
fn scene_blob_renders_identically() {
    for which in BuiltinScene::ALL {
        let scene = builtin_scene(which);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.sblob");
        std::fs::write(&path, serialize(&scene)).unwrap();
        let back = deserialize(&std::fs::read(&path).unwrap()).unwrap();
        back.audit(2000, 3).unwrap();
        let cfg = RenderConfig {
            width: 24,
            height: 24,
            spp: 4,
            ..RenderConfig::default()
        };
        let env = Environment::Image(smooth_env());
        assert_eq!(render(&scene, &cfg, &env).unwrap(), render(&back, &cfg, &env).unwrap(), "{}", which.name());
    }
}

#[test]
fn equirect_maps_texel_centres_back_onto_themselves() {
    for y in 1..31 {
        for x in 0..64 {
            let (u, v) = ((x as f32 + 0.5) / 64.0, (y as f32 + 0.5) / 32.0);
            let (u2, v2) = dir_to_equirect(equirect_to_dir(u, v));
            assert!((u - u2).abs() < 1e-6 && (v - v2).abs() < 1e-6);
        }
    }
}

#[test]
fn seeds_change_noise_but_not_the_mean() {
    let scene = builtin_scene(BuiltinScene::Spheres);
    let env = Environment::Image(smooth_env());
    let base = RenderConfig {
        width: 16,
        height: 16,
        spp: 64,
        ..RenderConfig::default()
    };
    let a = render(&scene, &base, &env).unwrap();
    let b = render(&scene, &RenderConfig { seed: 1, ..base }, &env).unwrap();
    assert_ne!(a, b);
    let (ma, mb) = (a.mean(), b.mean());
    for c in 0..3 {
        assert!((ma[c] - mb[c]).abs() < 0.05 * ma[c]);
    }
}
