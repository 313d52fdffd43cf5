use std::str::FromStr;

use super::{Camera, Material, Scene, Sphere, Triangle};
use crate::error::{Error, Result};
use crate::math::{Rgb, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinScene {
    /// Original Cornell box geometry, unscaled (millimetre-like units).
    Box,
    /// Cornell shell without blocks, plus a mirror and a glass sphere.
    BoxSpheres,
    /// Unit-scale open scene: ground quad and three spheres, lit only by
    /// the environment.
    Spheres,
}

impl BuiltinScene {
    pub const ALL: [BuiltinScene; 3] = [BuiltinScene::Box, BuiltinScene::BoxSpheres, BuiltinScene::Spheres];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinScene::Box => "box",
            BuiltinScene::BoxSpheres => "box_spheres",
            BuiltinScene::Spheres => "spheres",
        }
    }
}

impl FromStr for BuiltinScene {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "box" => Ok(BuiltinScene::Box),
            "box_spheres" => Ok(BuiltinScene::BoxSpheres),
            "spheres" => Ok(BuiltinScene::Spheres),
            other => Err(Error::Config(format!("unknown builtin scene '{other}'"))),
        }
    }
}

#[derive(Default)]
struct MeshBuilder {
    vertices: Vec<Vec3>,
    triangles: Vec<Triangle>,
}

impl MeshBuilder {
    /// Adds a planar quad `a b c d` as triangles `(a, b, c)` and `(a, c, d)`.
    fn quad(&mut self, pts: [[f32; 3]; 4], material: u32) {
        let base = self.vertices.len() as u32;
        self.vertices.extend(pts.iter().map(|&p| Vec3::from_array(p)));
        self.triangles.push(Triangle {
            v: [base, base + 1, base + 2],
            material,
        });
        self.triangles.push(Triangle {
            v: [base, base + 2, base + 3],
            material,
        });
    }
}

const WHITE: u32 = 0;
const RED: u32 = 1;
const GREEN: u32 = 2;
const LIGHT: u32 = 3;

fn cornell_materials() -> Vec<Material> {
    vec![
        Material::diffuse(Rgb::new(0.73, 0.73, 0.73)),
        Material::diffuse(Rgb::new(0.63, 0.065, 0.05)),
        Material::diffuse(Rgb::new(0.14, 0.45, 0.091)),
        Material::emissive(Rgb::new(17.0, 12.0, 4.0)),
    ]
}

fn cornell_camera() -> Camera {
    Camera {
        position: Vec3::new(278.0, 273.0, -800.0),
        look_at: Vec3::new(278.0, 273.0, 0.0),
        up: Vec3::new(0.0, 1.0, 0.0),
        vfov_deg: 40.0,
    }
}

fn cornell_shell(m: &mut MeshBuilder) {
    // The published light shares the ceiling plane (y = 548.8); it is
    // lowered by 0.1 so the two surfaces never tie. Winding faces it down.
    m.quad(
        [[343.0, 548.7, 227.0], [343.0, 548.7, 332.0], [213.0, 548.7, 332.0], [213.0, 548.7, 227.0]],
        LIGHT,
    );
    // floor
    m.quad(
        [[552.8, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 559.2], [549.6, 0.0, 559.2]],
        WHITE,
    );
    // ceiling
    m.quad(
        [[556.0, 548.8, 0.0], [556.0, 548.8, 559.2], [0.0, 548.8, 559.2], [0.0, 548.8, 0.0]],
        WHITE,
    );
    // back wall
    m.quad(
        [[549.6, 0.0, 559.2], [0.0, 0.0, 559.2], [0.0, 548.8, 559.2], [556.0, 548.8, 559.2]],
        WHITE,
    );
    // right wall
    m.quad(
        [[0.0, 0.0, 559.2], [0.0, 0.0, 0.0], [0.0, 548.8, 0.0], [0.0, 548.8, 559.2]],
        GREEN,
    );
    // left wall
    m.quad(
        [[552.8, 0.0, 0.0], [549.6, 0.0, 559.2], [556.0, 548.8, 559.2], [556.0, 548.8, 0.0]],
        RED,
    );
}

fn cornell_blocks(m: &mut MeshBuilder) {
    const SHORT: [[[f32; 3]; 4]; 5] = [
        [[130.0, 165.0, 65.0], [82.0, 165.0, 225.0], [240.0, 165.0, 272.0], [290.0, 165.0, 114.0]],
        [[290.0, 0.0, 114.0], [290.0, 165.0, 114.0], [240.0, 165.0, 272.0], [240.0, 0.0, 272.0]],
        [[130.0, 0.0, 65.0], [130.0, 165.0, 65.0], [290.0, 165.0, 114.0], [290.0, 0.0, 114.0]],
        [[82.0, 0.0, 225.0], [82.0, 165.0, 225.0], [130.0, 165.0, 65.0], [130.0, 0.0, 65.0]],
        [[240.0, 0.0, 272.0], [240.0, 165.0, 272.0], [82.0, 165.0, 225.0], [82.0, 0.0, 225.0]],
    ];
    const TALL: [[[f32; 3]; 4]; 5] = [
        [[423.0, 330.0, 247.0], [265.0, 330.0, 296.0], [314.0, 330.0, 456.0], [472.0, 330.0, 406.0]],
        [[423.0, 0.0, 247.0], [423.0, 330.0, 247.0], [472.0, 330.0, 406.0], [472.0, 0.0, 406.0]],
        [[472.0, 0.0, 406.0], [472.0, 330.0, 406.0], [314.0, 330.0, 456.0], [314.0, 0.0, 456.0]],
        [[314.0, 0.0, 456.0], [314.0, 330.0, 456.0], [265.0, 330.0, 296.0], [265.0, 0.0, 296.0]],
        [[265.0, 0.0, 296.0], [265.0, 330.0, 296.0], [423.0, 330.0, 247.0], [423.0, 0.0, 247.0]],
    ];
    for q in SHORT.iter().chain(TALL.iter()) {
        m.quad(*q, WHITE);
    }
}

pub fn builtin_scene(which: BuiltinScene) -> Scene {
    let scene = match which {
        BuiltinScene::Box => {
            let mut m = MeshBuilder::default();
            cornell_shell(&mut m);
            cornell_blocks(&mut m);
            Scene::new(m.vertices, m.triangles, vec![], cornell_materials(), cornell_camera())
        }
        BuiltinScene::BoxSpheres => {
            let mut m = MeshBuilder::default();
            cornell_shell(&mut m);
            let mut materials = cornell_materials();
            materials.push(Material::mirror(Rgb::splat(0.9)));
            materials.push(Material::dielectric(1.5));
            let spheres = vec![
                Sphere {
                    centre: Vec3::new(370.0, 100.0, 370.0),
                    radius: 100.0,
                    material: 4,
                },
                Sphere {
                    centre: Vec3::new(180.0, 90.0, 180.0),
                    radius: 90.0,
                    material: 5,
                },
            ];
            Scene::new(m.vertices, m.triangles, spheres, materials, cornell_camera())
        }
        BuiltinScene::Spheres => {
            let mut m = MeshBuilder::default();
            m.quad(
                [[-5.0, 0.0, -5.0], [-5.0, 0.0, 5.0], [5.0, 0.0, 5.0], [5.0, 0.0, -5.0]],
                0,
            );
            let materials = vec![
                Material::diffuse(Rgb::splat(0.5)),
                Material::diffuse(Rgb::new(0.8, 0.3, 0.3)),
                Material::mirror(Rgb::splat(0.9)),
                Material::dielectric(1.5),
            ];
            let spheres = [(-1.2, 1), (0.0, 2), (1.2, 3)]
                .into_iter()
                .map(|(x, material)| Sphere {
                    centre: Vec3::new(x, 0.5, 0.0),
                    radius: 0.5,
                    material,
                })
                .collect();
            let camera = Camera {
                position: Vec3::new(0.0, 1.2, 4.5),
                look_at: Vec3::new(0.0, 0.5, 0.0),
                up: Vec3::new(0.0, 1.0, 0.0),
                vfov_deg: 40.0,
            };
            Scene::new(m.vertices, m.triangles, spheres, materials, camera)
        }
    };
    scene.expect("builtin scene data is valid")
}
