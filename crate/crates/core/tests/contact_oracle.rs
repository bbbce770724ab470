use nalgebra::{Unit, UnitQuaternion, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stickhand::hand::kinematics::forward_kinematics;
use stickhand::hand::model::{HandModel, StickModel};
use stickhand::tactile::contact::detect_contacts;
use stickhand::tactile::layout::TaxelLayout;

/// Distance from `p` to segment `[a, b]` by explicit parametrization.
fn segment_distance(p: [f64; 3], a: [f64; 3], b: [f64; 3]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let ap = [p[0] - a[0], p[1] - a[1], p[2] - a[2]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2];
    let t = ((ap[0] * ab[0] + ap[1] * ab[1] + ap[2] * ab[2]) / len2).clamp(0.0, 1.0);
    let c = [a[0] + t * ab[0], a[1] + t * ab[1], a[2] + t * ab[2]];
    ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + (p[2] - c[2]).powi(2)).sqrt()
}

struct Case {
    q: [f64; 6],
    center: Vector3<f64>,
    orientation: UnitQuaternion<f64>,
}

fn random_case(rng: &mut ChaCha8Rng, model: &HandModel) -> Case {
    let lower = model.lower_limits();
    let upper = model.upper_limits();
    let q = std::array::from_fn(|i| rng.random_range(lower[i]..upper[i]));
    let center = Vector3::new(rng.random_range(-0.03..0.03), rng.random_range(-0.03..0.04), rng.random_range(-0.06..0.02));
    let axis = Unit::new_normalize(Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let orientation = UnitQuaternion::from_axis_angle(&axis, rng.random_range(0.0..std::f64::consts::PI));
    Case { q, center, orientation }
}

#[test]
fn detection_matches_brute_force_on_random_poses() {
    let model = HandModel::canonical();
    let stick = StickModel::default();
    let layout = TaxelLayout::from_pad(&model.pad);
    let reach = stick.radius + layout.sensing_radius;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut with_contact = 0;
    for _ in 0..1000 {
        let c = random_case(&mut rng, &model);
        let kin = forward_kinematics(&model, &layout, &c.q, &[0.0; 3]);
        let found = detect_contacts(&kin, layout.sensing_radius, model.pad.bounding_radius(), &c.center, &c.orientation, &stick);
        let axis = c.orientation * Vector3::z();
        let a = c.center - 0.5 * stick.length * axis;
        let b = c.center + 0.5 * stick.length * axis;
        let mut expected = Vec::new();
        for (i, p) in kin.taxel_positions.iter().enumerate() {
            let d = segment_distance([p.x, p.y, p.z], [a.x, a.y, a.z], [b.x, b.y, b.z]);
            if d < reach {
                expected.push((i, reach - d));
            }
        }
        let got: Vec<usize> = found.iter().map(|k| k.taxel).collect();
        let want: Vec<usize> = expected.iter().map(|e| e.0).collect();
        assert_eq!(got, want);
        for (k, e) in found.iter().zip(&expected) {
            assert!((k.penetration - e.1).abs() < 1e-12);
        }
        if !found.is_empty() {
            with_contact += 1;
        }
    }
    assert!(with_contact > 50, "only {with_contact} configurations touched the stick");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn contacts_have_unit_normals_and_bounded_penetration(seed in any::<u64>()) {
        let model = HandModel::canonical();
        let stick = StickModel::default();
        let layout = TaxelLayout::from_pad(&model.pad);
        let c = random_case(&mut ChaCha8Rng::seed_from_u64(seed), &model);
        let kin = forward_kinematics(&model, &layout, &c.q, &[0.0; 3]);
        let found = detect_contacts(&kin, layout.sensing_radius, model.pad.bounding_radius(), &c.center, &c.orientation, &stick);
        for k in &found {
            prop_assert!((k.normal.norm() - 1.0).abs() < 1e-12);
            prop_assert!(k.penetration > 0.0 && k.penetration <= stick.radius + layout.sensing_radius);
            prop_assert_eq!(k.normal_force, 0.0);
        }
    }

    #[test]
    fn far_away_stick_touches_nothing(dx in 0.5f64..2.0, dy in -1.0f64..1.0) {
        let model = HandModel::canonical();
        let stick = StickModel::default();
        let layout = TaxelLayout::from_pad(&model.pad);
        let kin = forward_kinematics(&model, &layout, &[0.3; 6], &[0.0; 3]);
        let found = detect_contacts(&kin, layout.sensing_radius, model.pad.bounding_radius(), &Vector3::new(dx, dy, 0.0), &UnitQuaternion::identity(), &stick);
        prop_assert!(found.is_empty());
    }
}
