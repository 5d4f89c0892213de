mod common;

use cavityflux::geometry::{
    discretize, first_hit, pwb_dimensions, Behavior, OpeningKind, Point2, Scene, SceneConfig,
    SurfaceKind, Vec2, PRESETS,
};
use cavityflux::Error;
use common::{interior_point, unit, Kind, Oracle};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};

fn kind_of(scene: &Scene, surface: usize) -> Kind {
    match scene.surfaces[surface].kind {
        SurfaceKind::Wall => Kind::Wall,
        SurfaceKind::Disc(k) => Kind::Disc(k),
        SurfaceKind::Opening(k) => {
            let o = &scene.openings[k];
            match o.kind {
                OpeningKind::Port => Kind::Port(o.id.clone()),
                OpeningKind::Aperture => Kind::Aperture(o.id.clone()),
            }
        }
    }
}

#[test]
fn first_hit_matches_brute_force_on_every_preset() {
    for name in PRESETS {
        let scene = Scene::preset(name).unwrap();
        let oracle = Oracle::new(scene.config());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut classified = 0;
        for _ in 0..10_000 {
            let origin = interior_point(&scene, &mut rng);
            let dir = unit(rng.random_range(0.0..TAU));
            let hit = first_hit(&scene, &origin, &dir).unwrap();
            let want = oracle.nearest(&origin, &dir).expect("closed scene");
            assert!(
                (hit.distance - want.t).abs() < 1e-12,
                "{name}: distance {} vs {} from {origin:?} along {dir:?}",
                hit.distance,
                want.t
            );
            assert!((hit.point - want.point).norm() < 1e-12);
            if want.edge_distance > 1e-9 {
                assert_eq!(
                    kind_of(&scene, hit.surface),
                    want.kind,
                    "{name}: at {:?}",
                    hit.point
                );
                classified += 1;
            }
        }
        assert!(classified > 9_900);
    }
}

#[test]
fn hits_lie_on_their_surface_and_reflect_specularly() {
    let scene = Scene::preset("fig1b").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..2_000 {
        let origin = interior_point(&scene, &mut rng);
        let dir = unit(rng.random_range(0.0..TAU));
        let hit = first_hit(&scene, &origin, &dir).unwrap();
        let s = &scene.surfaces[hit.surface];
        assert!((s.point_at(hit.param) - hit.point).norm() < 1e-9);
        assert!(hit.param >= -1e-12 && hit.param <= s.length + 1e-12);
        // Normal faces the incoming ray, angle of incidence equals angle of reflection,
        // and the tangential component is preserved.
        assert!(hit.normal.dot(&dir) < 0.0);
        assert!((hit.outgoing.dot(&hit.normal) + dir.dot(&hit.normal)).abs() < 1e-12);
        let t = Vec2::new(-hit.normal.y, hit.normal.x);
        assert!((hit.outgoing.dot(&t) - dir.dot(&t)).abs() < 1e-12);
        assert!((hit.outgoing.norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn rays_only_leave_through_ports() {
    for name in PRESETS {
        let scene = Scene::preset(name).unwrap();
        let (lo, hi) = scene.bounds();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let mut pos = interior_point(&scene, &mut rng);
            let mut dir = unit(rng.random_range(0.0..TAU));
            for _ in 0..500 {
                let hit = first_hit(&scene, &pos, &dir).unwrap();
                let p = hit.point;
                assert!(
                    p.x >= lo.x - 1e-9
                        && p.x <= hi.x + 1e-9
                        && p.y >= lo.y - 1e-9
                        && p.y <= hi.y + 1e-9
                );
                match scene.surfaces[hit.surface].kind {
                    SurfaceKind::Opening(k) if scene.openings[k].kind == OpeningKind::Port => break,
                    SurfaceKind::Opening(_) => pos = hit.point,
                    _ => {
                        pos = hit.point;
                        dir = hit.outgoing;
                    }
                }
            }
        }
    }
}

#[test]
fn elements_tile_the_boundary() {
    for name in PRESETS {
        let scene = Scene::preset(name).unwrap();
        let target = if name == "fig3" { 0.005 } else { 0.05 };
        let mesh = discretize(&scene, target).unwrap();
        let walls: f64 = scene.cavities.iter().map(|c| 4.0 * c.side).sum();
        let rims: f64 = scene.discs.iter().map(|d| TAU * d.radius).sum();
        let total = mesh.total_length();
        assert!(((total - (walls + rims)) / total).abs() < 1e-10, "{name}");

        for s in 0..scene.surfaces.len() {
            let range = mesh.surface_elements(s);
            assert!(!range.is_empty());
            let mut edge = 0.0;
            for e in &mesh.elements[range] {
                assert!(e.arc_length > 0.0 && e.arc_length <= target + 1e-12);
                assert!(
                    (e.s0 - edge).abs() < 1e-12,
                    "{name}: gap or overlap on surface {s}"
                );
                edge = e.s1;
            }
            assert!((edge - scene.surfaces[s].length).abs() < 1e-12);
        }
        for (k, o) in scene.openings.iter().enumerate() {
            let covered: f64 = mesh
                .elements
                .iter()
                .filter(|e| e.opening() == Some(k) && e.cavity == o.cavity)
                .map(|e| e.arc_length)
                .sum();
            assert!(
                (covered - o.width).abs() < 1e-12,
                "{name}: opening {}",
                o.id
            );
        }
    }
}

#[test]
fn fig1a_elements_and_perimeters() {
    let scene = Scene::preset("fig1a").unwrap();
    let mesh = discretize(&scene, 0.05).unwrap();
    let expected = 8.0 + 6.0 * TAU * 0.1;
    assert!((mesh.total_length() - expected).abs() / expected < 1e-10);
    for e in &mesh.elements {
        if let Behavior::Aperture { twin, .. } = e.behavior {
            assert!(
                matches!(mesh.elements[twin].behavior, Behavior::Aperture { twin: t, .. } if t == e.id)
            );
            assert_ne!(mesh.elements[twin].cavity, e.cavity);
        }
    }
    let dims = pwb_dimensions(&scene);
    assert!((dims[0].perimeter - (4.0 + 3.0 * 2.0 * PI * 0.1)).abs() < 1e-12);
    assert!((dims[0].perimeter - 5.885).abs() < 1e-3);
}

#[test]
fn opening_elements_require_small_enough_target() {
    let scene = Scene::preset("fig3").unwrap();
    assert!(matches!(
        discretize(&scene, 0.02),
        Err(Error::Validation { .. })
    ));
    assert!(discretize(&scene, 0.0).is_err());
}

fn edit(name: &str, f: impl FnOnce(&mut serde_json::Value)) -> Result<Scene, Error> {
    let mut v: serde_json::Value =
        serde_json::to_value(SceneConfig::preset(name).unwrap()).unwrap();
    f(&mut v);
    Scene::build(&serde_json::from_value(v).unwrap())
}

#[test]
fn invalid_scenes_are_rejected() {
    // Disc leaving its cavity.
    assert!(edit("fig2", |v| v["discs"][0]["center"] =
        serde_json::json!([0.05, 0.5]))
    .is_err());
    // Overlapping discs.
    assert!(edit("fig2", |v| v["discs"][1]["center"] =
        serde_json::json!([0.35, 0.7]))
    .is_err());
    // Opening running past the wall end.
    assert!(edit("fig2", |v| v["openings"][0]["center_offset"] =
        serde_json::json!(0.95))
    .is_err());
    // Aperture on an outer wall.
    assert!(edit("fig1a", |v| v["openings"][2]["wall"]["side"] =
        serde_json::json!("left"))
    .is_err());
    // Port on the shared wall.
    assert!(edit("fig1a", |v| {
        v["openings"][0]["wall"]["side"] = serde_json::json!("right");
        v["openings"][0]["center_offset"] = serde_json::json!(0.2);
    })
    .is_err());
    // Absorption outside [0, 1].
    assert!(edit("fig2", |v| v["alpha"] = serde_json::json!(1.5)).is_err());
    // Cavities that only partly share a wall.
    assert!(edit("fig1a", |v| v["cavities"][1]["origin"] =
        serde_json::json!([1.0, 0.5]))
    .is_err());
    // Unknown keys.
    assert!(SceneConfig::from_json(r#"{"cavities": [], "colour": 1}"#).is_err());
}

#[test]
fn origin_outside_the_scene_is_an_error() {
    let scene = Scene::preset("fig2").unwrap();
    let r = first_hit(&scene, &Point2::new(2.0, 2.0), &Vec2::new(1.0, 0.0));
    assert!(matches!(r, Err(Error::Geometry(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn first_hit_agrees_with_oracle(x in 0.001f64..1.999, y in 0.001f64..0.999, theta in 0.0f64..TAU) {
        let scene = Scene::preset("fig1a").unwrap();
        let origin = Point2::new(x, y);
        prop_assume!(scene.is_interior(&origin).is_some());
        let dir = unit(theta);
        let hit = first_hit(&scene, &origin, &dir).unwrap();
        let want = Oracle::new(scene.config()).nearest(&origin, &dir).unwrap();
        prop_assert!((hit.distance - want.t).abs() < 1e-12);
    }

    #[test]
    fn reflection_is_an_involution(theta in 0.0f64..TAU, phi in 0.0f64..TAU) {
        let d = unit(theta);
        let n = unit(phi);
        let r = cavityflux::geometry::reflect(&cavityflux::geometry::reflect(&d, &n), &n);
        prop_assert!((r - d).norm() < 1e-12);
    }
}
