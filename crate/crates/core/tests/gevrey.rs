use std::f64::consts::PI;

use sdwave::gevrey::*;
use sdwave::lattice::TorusGrid;
use sdwave::speed::PowerLog;

fn power_controls(p: f64, q: f64) -> WeightControls {
    WeightControls::new(PowerLog::power(1.0 - p), PowerLog::power(1.0 - q)).unwrap()
}

fn grid_angles(n: usize) -> Vec<f64> {
    (0..n).map(|i| -PI + 2.0 * PI * i as f64 / n as f64).collect()
}

#[test]
fn associated_function_lower_bound() {
    // T[j!^(nu-1)](tau) >= c tau^(-1/2) exp((nu-1) tau^(1/(nu-1))) with c fixed
    for nu in [2.0f64, 3.0] {
        let seq = LogConvexSequence::factorial_power(nu).unwrap();
        let ratios: Vec<f64> = (0..=400)
            .map(|i| 10f64.powf(4.0 * i as f64 / 400.0))
            .map(|tau| {
                let t = seq.associated(tau, AssocMode::FactorialDivided).unwrap();
                t.ln_value + 0.5 * tau.ln() - (nu - 1.0) * tau.powf(1.0 / (nu - 1.0))
            })
            .collect();
        let c = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(c > -3.0, "nu = {nu}: ln c = {c}");
        // the fitted constant does not degrade over the last decade
        let tail = ratios[300..].iter().copied().fold(f64::INFINITY, f64::min);
        assert!(tail >= c - 1e-9);
    }
}

#[test]
fn fourth_power_example_is_exact() {
    let seq = LogConvexSequence::factorial_power(1.0).unwrap();
    assert_eq!(seq.associated_value(4.0, AssocMode::Raw).unwrap(), 32.0 / 3.0);
    let brute = (0..=20)
        .map(|j| 4f64.powi(j) / (1..=j).map(f64::from).product::<f64>())
        .fold(0.0, f64::max);
    assert!((brute - 32.0 / 3.0).abs() < 1e-14);
}

#[test]
fn start_index_is_configurable() {
    let seq = LogConvexSequence::factorial_power(2.0).unwrap().starting_at(1);
    let t = seq.associated(0.5, AssocMode::Raw).unwrap();
    assert_eq!(t.argmax, 1);
    assert!((t.value() - 0.5).abs() < 1e-15);
}

#[test]
fn power_sine_data() {
    let data = GevreyData::build(GevreyKind::PowerSine { m0: 2.0 }, 16).unwrap();
    assert!((data.field.get(&[0]).unwrap().re - 0.5).abs() < 1e-15);
    assert!((data.field.get(&[1]).unwrap().re + 0.25).abs() < 1e-15);
    let eight = GevreyData::build(GevreyKind::PowerSine { m0: 8.0 }, 64).unwrap();
    assert!(moment_check(&eight.field, 6).passed());
    assert!(eight.spectrum_error(&grid_angles(256)) < 1e-8);
    // odd powers are not trigonometric polynomials
    let odd = GevreyData::build(GevreyKind::PowerSine { m0: 3.0 }, 128).unwrap();
    assert!(odd.spectrum_error(&grid_angles(256)) < 1e-8);
}

#[test]
fn flat_data_round_trip_and_truncation() {
    let kind = GevreyKind::Flat { rho: 1.0, kappa: 2.0 };
    let a = GevreyData::build(kind, 128).unwrap();
    let b = GevreyData::build(kind, 256).unwrap();
    assert!(a.spectrum_error(&grid_angles(256)) < 1e-8);
    let diff = a.field.scale((-1.0).into()).add(&b.field).unwrap();
    assert!(diff.l1_norm() < 1e-12);
    for (k, v) in a.field.iter() {
        assert_eq!(v.im, 0.0);
        assert_eq!(v.re, a.field.get(&[-k[0]]).unwrap().re);
    }
    assert!((kind.spectrum(PI) - (-2.0f64).exp()).abs() < 1e-15);
    let mut csv = Vec::new();
    a.write_csv(&mut csv).unwrap();
    assert!(String::from_utf8(csv).unwrap().starts_with("k,re,im\n"));
}

#[test]
fn functional_finite_for_flat_data() {
    let (p, q) = (0.0, 0.5);
    let controls = power_controls(p, q);
    let kind = GevreyKind::Flat { rho: 1.0, kappa: 2.0 * (q - p) / (1.0 - q) };
    let mut prev = f64::NEG_INFINITY;
    for n in [2.0, 8.0, 32.0] {
        let u = u_functional_spectrum(n, &|t| kind.ln_spectrum(t), &controls, &UOptions::default()).unwrap();
        assert!(u.converged && u.is_finite());
        assert!(u.ln_value > prev);
        prev = u.ln_value;
    }
    // too little flatness at the origin
    let weak = GevreyKind::Flat { rho: 1.0, kappa: 0.5 };
    let u = u_functional_spectrum(8.0, &|t| weak.ln_spectrum(t), &controls, &UOptions::default()).unwrap();
    assert!(!u.is_finite());
}

#[test]
fn admissibility_constant() {
    let controls = power_controls(0.0, 0.5);
    // boundary exponent: positive exactly below the critical N
    let seq = LogConvexSequence::factorial_power(2.0).unwrap();
    let n_star = critical_n(&seq, &controls, 0.25, 4.0, &LOptions::default()).unwrap();
    // N* = ((nu - 1)/M)^((1-q)/(1-p)) with M = 1 for exact power controls
    let fitted_m = 1.0 / n_star.powf(2.0);
    assert!((fitted_m - 1.0).abs() < 1e-3, "{fitted_m}");
    // below the boundary every N works
    let seq = LogConvexSequence::factorial_power(1.5).unwrap();
    for i in 0..=10 {
        assert!(l_constant(2f64.powi(i), &seq, &controls, &LOptions::default()).unwrap().is_positive());
    }
}

#[test]
fn gate_assignments() {
    let grid: Vec<f64> = (0..=10).map(|i| 2f64.powi(i)).collect();
    let (p, q) = (0.0, 0.5);
    let controls = power_controls(p, q);
    let below = theorem3_gate(&grid, &LogConvexSequence::factorial_power(1.5).unwrap(), &controls, &GateOptions::default()).unwrap();
    assert_eq!(below.case, GateCase::AnyN);
    let at = theorem3_gate(&grid, &LogConvexSequence::factorial_power(2.0).unwrap(), &controls, &GateOptions::default()).unwrap();
    assert_eq!(at.case, GateCase::LargeN);
    let expected = (q - p) / (1.0 - q);
    assert!((at.ratio_exponent - expected).abs() < 0.1 * expected);
    assert!(at.n0.is_some());
    // logarithmic controls never satisfy the growth condition
    let r = 1.5;
    let log_type = WeightControls::new(PowerLog::power(1.0), PowerLog::new(1.0, 1.0, 1.0 - r)).unwrap();
    let g = theorem3_gate(&grid, &LogConvexSequence::exponential(1.0, 2.0).unwrap(), &log_type, &GateOptions::default()).unwrap();
    assert!(!g.ratio_diverges);
    assert_eq!(g.case, GateCase::AnyN);
    // identical controls: bounded exponent
    let same = WeightControls::new(PowerLog::power(0.5), PowerLog::power(0.5)).unwrap();
    let g = theorem3_gate(&grid, &LogConvexSequence::factorial_power(3.0).unwrap(), &same, &GateOptions::default()).unwrap();
    assert_eq!(g.case, GateCase::AnyN);
}

#[test]
fn transform_bound_for_power_sine_data() {
    let data = GevreyData::build(GevreyKind::PowerSine { m0: 8.0 }, 64).unwrap();
    let seq = LogConvexSequence::exponential(1.0, 2.0).unwrap();
    assert!(decay_check(&data.field, &seq, 1.0).unwrap().holds);
    let bound = transform_bound(&data.field, &seq, 1.0, &TorusGrid::new(1, 256).unwrap()).unwrap();
    assert!(bound.holds, "{bound:?}");
}

#[test]
fn functional_csv() {
    let rows = [FunctionalValue { n: 2.0, ln_value: 0.0, converged: true }];
    let mut out = Vec::new();
    write_functional_csv(&rows, &mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), "N,value,ln_value,converged_flag\n2,1e0,0e0,true\n");
}
