use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use sdwave::lattice::{Direction, FrequencyPoint, LatticeField, TorusGrid};

fn field_strategy(dim: usize) -> impl Strategy<Value = LatticeField> {
    let entry = (
        prop::collection::vec(-8i64..8, dim),
        -1.0f64..1.0,
        -1.0f64..1.0,
    );
    prop::collection::vec(entry, 1..40).prop_map(move |entries| {
        LatticeField::from_entries(dim, entries.into_iter().map(|(k, re, im)| (k, Complex64::new(re, im)))).unwrap()
    })
}

fn theta_strategy(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-PI..PI, dim)
}

fn symbol(theta: f64, dir: Direction) -> Complex64 {
    let i = Complex64::i();
    match dir {
        Direction::Forward => (i * theta).exp() - 1.0,
        Direction::Backward => 1.0 - (-i * theta).exp(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn differences_become_multipliers(f in field_strategy(2), theta in theta_strategy(2)) {
        let base = f.dtft(&theta);
        for axis in 0..2 {
            for dir in [Direction::Forward, Direction::Backward] {
                let lhs = f.difference(axis, dir).unwrap().dtft(&theta);
                let rhs = symbol(theta[axis], dir) * base;
                prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + base.norm()));
            }
        }
    }

    #[test]
    fn laplacian_multiplier_is_minus_xi_squared(f in field_strategy(2), theta in theta_strategy(2)) {
        let xi2 = FrequencyPoint::new(theta.clone()).unwrap().xi_norm().powi(2);
        let lhs = f.laplacian().dtft(&theta);
        let rhs = f.dtft(&theta) * -xi2;
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
    }

    #[test]
    fn parseval_on_the_grid(f in field_strategy(1)) {
        let grid = TorusGrid::new(1, 256).unwrap();
        let quad = grid.parseval_energy(&f);
        prop_assert!((quad - f.l2_norm_squared()).abs() <= 1e-10 * f.l2_norm_squared().max(1.0));
    }

    #[test]
    fn transform_is_linear(f in field_strategy(1), g in field_strategy(1), theta in theta_strategy(1)) {
        let s = Complex64::new(0.3, -1.7);
        let lhs = f.scale(s).add(&g).unwrap().dtft(&theta);
        let rhs = f.dtft(&theta) * s + g.dtft(&theta);
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
    }
}

#[test]
fn parseval_in_two_dimensions() {
    let f = LatticeField::from_entries(
        2,
        (0..16).map(|i| (vec![i % 4 - 2, i / 4 - 1], Complex64::new(1.0 + i as f64, 0.5 * i as f64))),
    )
    .unwrap();
    let grid = TorusGrid::new(2, 64).unwrap();
    assert!((grid.parseval_energy(&f) - f.l2_norm_squared()).abs() < 1e-10 * f.l2_norm_squared());
}

#[test]
fn axis_errors() {
    let f = LatticeField::delta(&[0, 0]).unwrap();
    assert!(f.difference(2, Direction::Forward).is_err());
    assert!(FrequencyPoint::new(vec![4.0]).is_err());
}
