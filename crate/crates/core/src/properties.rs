use proptest::prelude::*;

use crate::flow::{curvature_at, f_pert_at};
use crate::{apply_semigroup, CurvatureModel, Field, GridKind, GridSpec, InitialData, ModelSpec, RampSpec};

fn periodic(points: usize) -> GridSpec {
    GridSpec::new(GridKind::Periodic, 8.0, points).unwrap()
}

fn trig_field(coeffs: &[(f64, f64)]) -> Field {
    let grid = periodic(128);
    let k0 = std::f64::consts::PI / grid.half_length;
    let values = grid
        .nodes()
        .iter()
        .map(|x| {
            coeffs
                .iter()
                .enumerate()
                .map(|(m, (a, b))| {
                    let k = k0 * m as f64;
                    a * (k * x).cos() + b * (k * x).sin()
                })
                .sum()
        })
        .collect();
    Field::new(grid, values, 0.0, "v").unwrap()
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn coeffs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn semigroup_composes(c in coeffs(), s in 0.0..2.0f64, t in 0.0..2.0f64) {
        let f = trig_field(&c);
        let two = apply_semigroup(&apply_semigroup(&f, s).unwrap(), t).unwrap();
        let one = apply_semigroup(&f, s + t).unwrap();
        prop_assert!(max_gap(two.values(), one.values()) < 1e-12);
    }

    #[test]
    fn semigroup_keeps_the_mean(c in coeffs(), t in 0.0..4.0f64) {
        let f = trig_field(&c);
        let g = apply_semigroup(&f, t).unwrap();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        prop_assert!((mean(f.values()) - mean(g.values())).abs() < 1e-12);
    }

    #[test]
    fn perturbation_in_curvature_form(q in -2.0..2.0f64, r in -3.0..3.0f64) {
        let model = CurvatureModel::exponential();
        let kappa = curvature_at(q, r);
        let expected = 3.0 * q * kappa * kappa * model.fp(-kappa);
        let got = f_pert_at(q, r, &model);
        prop_assert!((got - expected).abs() <= 1e-13 * (1.0 + expected.abs()));
    }

    #[test]
    fn model_scaling_is_a_group_action(a in 0.1..10.0f64, b in 0.1..10.0f64, r in -5.0..5.0f64) {
        let m = CurvatureModel::exponential();
        let twice = m.scaled(a).unwrap().scaled(b).unwrap();
        let once = m.scaled(a * b).unwrap();
        prop_assert!((twice.f(r) - once.f(r)).abs() <= 1e-12 * (1.0 + once.f(r).abs()));
        prop_assert!((once.f(r) - a * b * m.f(r / (a * b))).abs() <= 1e-12 * (1.0 + once.f(r).abs()));
    }

    #[test]
    fn configs_round_trip(half in 0.5..100.0f64, points in 8usize..4096, a in -1.0..1.0f64, b in -1.0..1.0f64) {
        let grid = GridSpec::new(GridKind::Truncated, half, points).unwrap();
        let back: GridSpec = serde_json::from_str(&serde_json::to_string(&grid).unwrap()).unwrap();
        prop_assert_eq!(back, grid);
        let data = InitialData::SmoothedRamp(RampSpec { a, b, w: 1.0 });
        let back: InitialData = serde_json::from_str(&serde_json::to_string(&data).unwrap()).unwrap();
        prop_assert_eq!(back, data);
        let model = ModelSpec::exponential();
        let back: ModelSpec = serde_json::from_str(&serde_json::to_string(&model).unwrap()).unwrap();
        prop_assert_eq!(back, model);
    }
}
