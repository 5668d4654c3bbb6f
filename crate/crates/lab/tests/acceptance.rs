//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sdwave::diag::{
    bound_certificate, effective_theta, mat_inv, mat_mul, norm_equivalence, singular_values_sq, CertificateOptions,
    DiagChain, Mat2, ZoneFlavor, ZonePartition,
};
use sdwave::gevrey::{theorem3_gate, AssocMode, GateCase, GateOptions, LogConvexSequence, WeightControls};
use sdwave::lattice::{Complex64, Direction, LatticeField, TorusGrid};
use sdwave::ode::StepControl;
use sdwave::solver::{energy_density, initial_mode, lattice_energy, simulate, EnergyMode, ModeState, SampleSchedule};
use sdwave::speed::{verify_hypotheses, Chi, Example1, PowerLog, ProfileSpec, SpeedProfile, VerificationGrid};
use sdwave_lab::config::{DataSpec, Envelope};
use sdwave_lab::{registry, RunReport, Scenario};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_field(rng: &mut ChaCha8Rng, dim: usize, side: i64) -> LatticeField {
    let mut points: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..dim {
        points = points
            .into_iter()
            .flat_map(|p| (-side / 2..side - side / 2).map(move |k| [p.clone(), vec![k]].concat()))
            .collect();
    }
    let entries: Vec<(Vec<i64>, Complex64)> = points
        .into_iter()
        .map(|k| (k, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
        .collect();
    LatticeField::from_entries(dim, entries).unwrap()
}

fn example1(p: f64, q: f64, m: usize) -> SpeedProfile {
    let chi = Chi::CosOffset {
        offset: 1.0,
        amplitude: 0.5,
    };
    SpeedProfile::example1(Example1 { p, q, r: 0.0, chi }, m).unwrap()
}

fn verdict<'a>(report: &'a RunReport, check: &str) -> Option<&'a sdwave_lab::output::Verdict> {
    report.verdicts.iter().find(|v| v.check == check)
}

/// The scenario passed every verdict and carries the named checks.
fn scenario_passes(report: &RunReport, required: &[&str]) -> Result<(), String> {
    for check in required {
        match verdict(report, check) {
            Some(v) if v.pass == Some(true) => {}
            Some(v) => return Err(format!("{}: {} = {} (threshold {})", report.scenario, v.check, v.value, v.threshold)),
            None => return Err(format!("{}: no verdict {check}", report.scenario)),
        }
    }
    ensure(report.passed(), || format!("{} has failing verdicts", report.scenario))
}

fn dtft_algebra() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_identity: f64 = 0.0;
    let mut worst_parseval: f64 = 0.0;
    for trial in 0..100 {
        let dim = 1 + trial % 2;
        let f = random_field(&mut rng, dim, 16);
        let points = TorusGrid::new(dim, if dim == 1 { 256 } else { 16 }).unwrap();
        for axis in 0..dim {
            let forward = f.difference(axis, Direction::Forward).unwrap();
            let second = f
                .difference(axis, Direction::Backward)
                .unwrap()
                .difference(axis, Direction::Forward)
                .unwrap();
            for p in points.points() {
                let theta = p.theta();
                let fhat = f.dtft(theta);
                let shift = Complex64::new(0.0, theta[axis]).exp() - 1.0;
                let lap = -4.0 * (theta[axis] / 2.0).sin().powi(2);
                worst_identity = worst_identity
                    .max((forward.dtft(theta) - shift * fhat).norm())
                    .max((second.dtft(theta) - lap * fhat).norm());
            }
        }
        let quad = TorusGrid::new(dim, if dim == 1 { 256 } else { 64 }).unwrap();
        let exact = f.l2_norm_squared();
        worst_parseval = worst_parseval.max((quad.parseval_energy(&f) - exact).abs() / exact);
    }
    let elapsed = started.elapsed();
    ensure(worst_identity <= 1e-12, || format!("symbol identity error {worst_identity:e}"))?;
    ensure(worst_parseval <= 1e-10, || format!("Parseval error {worst_parseval:e}"))?;
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:.2?}"))?;
    Ok(format!(
        "identity error {worst_identity:.1e}, Parseval error {worst_parseval:.1e}, {elapsed:.2?}"
    ))
}

fn energy_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let profile = example1(2.0, 0.5, 2);
    let a0 = profile.value(0.0);
    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let dim = 1 + trial % 2;
        let side = if dim == 1 { 16 } else { 8 };
        let u0 = random_field(&mut rng, dim, side);
        let u1 = random_field(&mut rng, dim, side);
        let grid = TorusGrid::default_for(dim).unwrap();
        let density = grid.points().map(|p| {
            let (v, vt) = initial_mode(&u0, &u1, &p);
            energy_density(&ModeState { t: 0.0, v, vt }, p.xi_norm(), &profile, EnergyMode::Actual)
        });
        let torus = grid.mean(density);
        let lattice = lattice_energy(&u0, &u1, a0).unwrap();
        worst = worst.max((torus - lattice).abs() / lattice);
    }
    ensure(worst <= 1e-10, || format!("relative error {worst:e}"))?;
    Ok(format!("worst relative error {worst:.1e} over 20 data sets"))
}

fn conservation(reports: &BTreeMap<String, RunReport>) -> Outcome {
    let report = &reports["constant-conservation"];
    scenario_passes(report, &["conservation_max_rel_drift"])?;
    ensure(report.duration < Duration::from_secs(30), || format!("took {:.2?}", report.duration))?;
    // a second speed with random data
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let profile = SpeedProfile::constant(1.7, 2).unwrap();
    let u0 = random_field(&mut rng, 1, 8);
    let u1 = random_field(&mut rng, 1, 8);
    let grid = TorusGrid::new(1, 64).unwrap();
    let trace = simulate(
        &profile,
        &u0,
        &u1,
        &grid,
        &SampleSchedule::geometric(100.0),
        &StepControl::with_tol(1e-10),
    )
    .map_err(|e| e.to_string())?;
    let e0 = trace.total[0];
    let drift = trace.total.iter().map(|e| (e / e0 - 1.0).abs()).fold(0.0, f64::max);
    ensure(drift <= 1e-8, || format!("random data drift {drift:e}"))?;
    ensure(started.elapsed() < Duration::from_secs(30), || "random data run too slow".into())?;
    Ok(format!(
        "scenario drift {}, random data drift {drift:.1e}",
        verdict(report, "conservation_max_rel_drift").unwrap().value
    ))
}

fn scenario_of(name: &str) -> Scenario {
    registry::builtin(name).expect("built-in").expect("parses")
}

fn bounded_control(reports: &BTreeMap<String, RunReport>) -> Outcome {
    let s = scenario_of("example1-case-i");
    ensure(
        matches!(s.profile, ProfileSpec::Example1 { p, .. } if p == 2.0)
            && s.certificate.envelope == Envelope::Uniform
            && s.certificate.modes == 32
            && s.solver.horizon == 1000.0,
        || "scenario does not match the criterion setup".into(),
    )?;
    let report = &reports["example1-case-i"];
    scenario_passes(report, &["modes_outside_envelope"])?;
    Ok(format!(
        "32 modes inside exp(+-{})",
        verdict(report, "envelope_ln_upper").unwrap().value
    ))
}

fn integrable_scale(reports: &BTreeMap<String, RunReport>) -> Outcome {
    let s = scenario_of("example1-case-ii");
    ensure(
        matches!(s.profile, ProfileSpec::Example1 { p, q, m: 1, .. } if q < p)
            && s.certificate.envelope == Envelope::Gronwall,
        || "scenario does not match the criterion setup".into(),
    )?;
    let report = &reports["example1-case-ii"];
    scenario_passes(report, &["modes_outside_envelope"])?;
    Ok(format!(
        "32 modes inside exp(+-{})",
        verdict(report, "envelope_ln_upper").unwrap().value
    ))
}

fn localized_bumps(reports: &BTreeMap<String, RunReport>) -> Outcome {
    let s = scenario_of("example2-case-iii");
    ensure(
        matches!(s.profile, ProfileSpec::Example2 { alpha, beta, kappa, m: 2, .. }
            if alpha == 1.0 && beta == 1.0 && kappa == 1.0)
            && s.certificate.modes == 32
            && s.solver.horizon == 1000.0,
        || "scenario does not match the criterion setup".into(),
    )?;
    let report = &reports["example2-case-iii"];
    scenario_passes(report, &["max_eigen_residual", "modes_outside_envelope"])?;
    ensure(report.duration < Duration::from_secs(180), || format!("took {:.2?}", report.duration))?;
    Ok(format!(
        "N = {}, eigen residual {}, {:.2?}",
        verdict(report, "N_used").unwrap().value,
        verdict(report, "max_eigen_residual").unwrap().value,
        report.duration
    ))
}

fn mat_sub(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = *a;
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] -= b[i][j];
        }
    }
    out
}

fn max_entry(a: &Mat2) -> f64 {
    a.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
}

fn chain_algebra() -> Outcome {
    let m = 3;
    let profile = example1(0.5, 0.5, m);
    let report = verify_hypotheses(&profile, &VerificationGrid::default_for(&profile)).map_err(|e| e.to_string())?;
    let opts = CertificateOptions::default();
    let cert = bound_certificate(&profile, &report, ZoneFlavor::Theta, &[0.1, 0.5, 1.0, 2.0], 1, &opts)
        .map_err(|e| e.to_string())?;
    let zones = ZonePartition::new(effective_theta(&profile, &report), cert.n_used, 1, ZoneFlavor::Theta);
    let (k_minus, k_plus) = norm_equivalence(m);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst, mut worst_norm, mut largest_derivative) = (0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..1000 {
        let xi = rng.random_range(0.05..2.0);
        let t_xi = zones.boundary(xi);
        let t = t_xi + (1.0 + t_xi) * (rng.random_range(0.0..100f64.ln()).exp() - 1.0);
        let h = 1e-3 * (1.0 + t).sqrt();
        let chains: Vec<DiagChain> = [-2.0, -1.0, 0.0, 1.0, 2.0]
            .iter()
            .map(|s| DiagChain::build(&profile, xi, t + s * h))
            .collect::<Result<_, _>>()
            .map_err(|e| format!("chain at t = {t}, xi = {xi}: {e}"))?;
        let centre = &chains[2];
        for k in 0..centre.levels.len() {
            let level = &centre.levels[k];
            let mk = level.diagonalizer;
            let mut derivative = [[Complex64::default(); 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    let at = |c: usize| chains[c].levels[k].diagonalizer[i][j];
                    derivative[i][j] = (at(0) - 8.0 * at(1) + 8.0 * at(3) - at(4)) / (12.0 * h);
                }
            }
            largest_derivative = largest_derivative.max(max_entry(&derivative));
            let inv = mat_inv(&mk);
            let conjugated = mat_sub(
                &mat_mul(&inv, &mat_mul(&level.system.matrix(), &mk)),
                &mat_mul(&inv, &derivative),
            );
            let next = match centre.levels.get(k + 1) {
                Some(l) => l.system.matrix(),
                None => centre.last.matrix(),
            };
            worst = worst.max(max_entry(&mat_sub(&conjugated, &next)));
        }
        let (lo, hi) = singular_values_sq(&centre.transform());
        worst_norm = worst_norm.max((k_minus - lo) / k_minus).max((hi - k_plus) / k_plus);
    }
    ensure(worst <= 1e-6, || format!("conjugation mismatch {worst:e}"))?;
    ensure(worst_norm <= 0.0, || format!("norm equivalence violated by {worst_norm:e}"))?;
    Ok(format!(
        "conjugation mismatch {worst:.1e} over 1000 points (largest dM/dt entry {largest_derivative:.1e}), N = {}",
        cert.n_used
    ))
}

fn lambda_zones(reports: &BTreeMap<String, RunReport>) -> Outcome {
    let s = scenario_of("gevrey37-boundedness");
    let (p, q) = match s.profile {
        ProfileSpec::Example1 { p, q, .. } => (p, q),
        _ => return Err("unexpected profile".into()),
    };
    let kappa = match s.data {
        DataSpec::Gevrey37 { kappa, .. } => kappa,
        _ => return Err("unexpected data".into()),
    };
    ensure(
        p == 0.0 && q == 0.5 && (kappa - 2.0 * (q - p) / (1.0 - q)).abs() < 1e-15 && s.solver.horizon == 1000.0,
        || "scenario does not match the criterion setup".into(),
    )?;
    let report = &reports["gevrey37-boundedness"];
    scenario_passes(report, &["U_finite", "mode_bound_ln_excess", "energy_bound_ln_excess"])?;
    Ok(format!(
        "N0 = {}, ln C = {}, worst ln excess {}",
        verdict(report, "N0").unwrap().value,
        verdict(report, "ln_C").unwrap().value,
        verdict(report, "mode_bound_ln_excess").unwrap().value
    ))
}

fn gevrey_gate(reports: &BTreeMap<String, RunReport>) -> Outcome {
    let data = &reports["gevrey36"];
    scenario_passes(
        data,
        &["moment_check", "decay_check", "transform_bound", "gate_case", "ratio_diverges"],
    )?;
    let flat = &reports["gevrey37"];
    scenario_passes(flat, &["gate_case", "ratio_exponent", "ratio_diverges"])?;
    // beyond the critical index only the growth ratio decides
    let controls = WeightControls::new(PowerLog::power(1.0), PowerLog::power(0.5)).map_err(|e| e.to_string())?;
    let grid: Vec<f64> = (0..=10).map(|i| 2f64.powi(i)).collect();
    let seq = LogConvexSequence::factorial_power(2.5).map_err(|e| e.to_string())?;
    let gate = theorem3_gate(&grid, &seq, &controls, &GateOptions::default()).map_err(|e| e.to_string())?;
    ensure(gate.case == GateCase::LargeN, || format!("nu = 2.5 gave {:?}", gate.case))?;
    ensure((gate.ratio_exponent - 1.0).abs() <= 0.1, || {
        format!("exponent {}", gate.ratio_exponent)
    })?;
    Ok(format!(
        "moments to order 6, power controls exponent {}, log controls ratio bounded",
        verdict(flat, "ratio_exponent").unwrap().value
    ))
}

fn associated_function() -> Outcome {
    let mut fitted = Vec::new();
    for nu in [2.0f64, 3.0] {
        let seq = LogConvexSequence::factorial_power(nu).map_err(|e| e.to_string())?;
        let excess = |tau: f64| -> Result<f64, String> {
            let t = seq
                .associated(tau, AssocMode::FactorialDivided)
                .map_err(|e| e.to_string())?;
            Ok(t.ln_value + 0.5 * tau.ln() - (nu - 1.0) * tau.powf(1.0 / (nu - 1.0)))
        };
        // fit on a coarse grid, check on a fine one
        let coarse = (0..=100)
            .map(|i| excess(10f64.powf(0.04 * i as f64)))
            .collect::<Result<Vec<_>, _>>()?;
        let ln_c = coarse.iter().copied().fold(f64::INFINITY, f64::min);
        let fine = (0..=4000)
            .map(|i| excess(10f64.powf(0.001 * i as f64)))
            .collect::<Result<Vec<_>, _>>()?;
        let lowest = fine.iter().copied().fold(f64::INFINITY, f64::min);
        ensure(lowest >= ln_c - 0.05, || format!("nu = {nu}: fitted ln c {ln_c}, fine-grid minimum {lowest}"))?;
        fitted.push(ln_c);
    }
    let seq = LogConvexSequence::factorial_power(1.0).map_err(|e| e.to_string())?;
    let value = seq.associated_value(4.0, AssocMode::Raw).map_err(|e| e.to_string())?;
    ensure(value == 32.0 / 3.0, || format!("T(4) = {value:e}"))?;
    Ok(format!("ln c = {:.3} (nu=2), {:.3} (nu=3); T(4) = 32/3", fitted[0], fitted[1]))
}

fn run_all(root: &Path) -> Result<BTreeMap<String, RunReport>, String> {
    registry::names()
        .map(|name| {
            let report = sdwave_lab::run(&scenario_of(name), root).map_err(|e| format!("{name}: {e}"))?;
            Ok((name.to_string(), report))
        })
        .collect()
}

fn files_of(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        out.insert(path.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&path).unwrap());
    }
    out
}

fn determinism(first: &BTreeMap<String, RunReport>, root: &Path) -> Outcome {
    let second = run_all(root)?;
    let mut files = 0;
    for (name, report) in first {
        let other = &second[name];
        let (a, b) = (files_of(&report.out_dir), files_of(&other.out_dir));
        ensure(a.keys().eq(b.keys()), || format!("{name}: different file sets"))?;
        for (file, bytes) in &a {
            ensure(&b[file] == bytes, || format!("{name}/{file} differs between runs"))?;
            files += 1;
        }
    }
    Ok(format!("{} scenarios, {files} files byte-identical", first.len()))
}

fn main() {
    let first_root = tempfile::tempdir().expect("temp dir");
    let second_root = tempfile::tempdir().expect("temp dir");
    let reports = match run_all(first_root.path()) {
        Ok(r) => r,
        Err(e) => {
            println!("scenario runs failed: {e}");
            std::process::exit(1);
        }
    };
    let criteria: Vec<Criterion> = vec![
        ("dtft algebra and Parseval", Box::new(dtft_algebra)),
        ("energy identity at t = 0", Box::new(energy_identity)),
        ("constant-speed conservation", Box::new(|| conservation(&reports))),
        ("bounded control envelope", Box::new(|| bounded_control(&reports))),
        ("integrable oscillation scale envelope", Box::new(|| integrable_scale(&reports))),
        ("localized bumps certificate", Box::new(|| localized_bumps(&reports))),
        ("diagonalization step algebra", Box::new(chain_algebra)),
        ("lambda-zone energy bound", Box::new(|| lambda_zones(&reports))),
        ("moments, decay and gate", Box::new(|| gevrey_gate(&reports))),
        ("associated function", Box::new(associated_function)),
        ("determinism", Box::new(|| determinism(&reports, second_root.path()))),
    ];
    let mut failed = 0;
    for (i, (title, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let elapsed = started.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {:2} PASS  {title}: {detail} [{elapsed:.2?}]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:2} FAIL  {title}: {detail} [{elapsed:.2?}]", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
