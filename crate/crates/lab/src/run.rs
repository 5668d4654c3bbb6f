//! Task pipelines.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use sdwave::diag::{
    bound_certificate, gronwall_envelope, lambda_exponent, measured_ratio_range, uniform_envelope,
    CertificateOptions, ZoneFlavor,
};
use sdwave::gevrey::{
    decay_check, initial_ln_spectrum, moment_check, theorem3_gate, transform_bound, u_functional_spectrum,
    write_functional_csv, FunctionalValue, GateCase, GateOptions, GevreyData, MomentOutcome, UOptions,
    WeightControls,
};
use sdwave::lattice::{LatticeField, TorusGrid};
use sdwave::ode::StepControl;
use sdwave::solver::{lattice_energy, simulate, SampleSchedule};
use sdwave::speed::{verify_hypotheses, HypothesisReport, SpeedProfile, VerificationGrid};

use crate::config::{Envelope, ExpectedCase, Scenario, Task};
use crate::error::{LabError, LabResult};
use crate::output::{sci, write_verdicts, OutputDir, Verdict};

/// Slack for log-space envelope comparisons.
const LN_SLACK: f64 = 1e-8;
const CONSERVATION_TOL: f64 = 1e-8;
const IDENTITY_TOL: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-10;
const SPECTRUM_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct RunReport {
    pub scenario: String,
    pub task: Task,
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub verdicts: Vec<Verdict>,
    pub duration: Duration,
}

impl RunReport {
    /// No verdict failed; informational rows do not count.
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass != Some(false))
    }
}

/// Runs the scenario's task, writing into `<out_root>/<name>-<hash>`.
pub fn run(scenario: &Scenario, out_root: &Path) -> LabResult<RunReport> {
    execute(scenario, scenario.task, out_root)
}

/// Hypothesis verification only, whatever the configured task.
pub fn verify(scenario: &Scenario, out_root: &Path) -> LabResult<RunReport> {
    let mut scenario = scenario.clone();
    scenario.task = Task::Hypotheses;
    execute(&scenario, Task::Hypotheses, out_root)
}

fn execute(scenario: &Scenario, task: Task, out_root: &Path) -> LabResult<RunReport> {
    let started = Instant::now();
    scenario.validate()?;
    let profile = scenario.build_profile()?;
    let hash = scenario.content_hash();
    let mut out = OutputDir::create(out_root, &scenario.name, &hash)?;
    out.raw("scenario.toml", scenario.canonical().as_bytes())?;
    let mut ctx = Context {
        scenario,
        profile,
        out: &mut out,
        verdicts: Vec::new(),
    };
    match task {
        Task::Simulate => ctx.simulate()?,
        Task::CertifyGec => ctx.certify_gec()?,
        Task::CertifyLambda => ctx.certify_lambda()?,
        Task::GevreyGate => ctx.gevrey_gate()?,
        Task::Hypotheses => {
            ctx.hypotheses()?;
        }
    }
    let verdicts = ctx.verdicts;
    out.csv("verdicts.csv", |buf| write_verdicts(&verdicts, buf))?;
    Ok(RunReport {
        scenario: scenario.name.clone(),
        task,
        out_dir: out.path.clone(),
        files: out.files().to_vec(),
        verdicts,
        duration: started.elapsed(),
    })
}

struct Context<'a> {
    scenario: &'a Scenario,
    profile: SpeedProfile,
    out: &'a mut OutputDir,
    verdicts: Vec<Verdict>,
}

impl Context<'_> {
    fn control(&self) -> StepControl {
        StepControl::with_tol(self.scenario.solver.tol)
    }

    fn grid(&self) -> LabResult<TorusGrid> {
        Ok(TorusGrid::new(self.scenario.solver.dim, self.scenario.solver.grid)?)
    }

    fn schedule(&self) -> SampleSchedule {
        SampleSchedule::Geometric {
            t_min: 0.01,
            t_max: self.scenario.solver.horizon,
            per_decade: self.scenario.solver.per_decade,
        }
    }

    /// Certified frequencies `2 sqrt(d) sin(theta_i / 2)` at cell midpoints.
    fn certified_modes(&self) -> Vec<f64> {
        let modes = self.scenario.certificate.modes;
        let scale = 2.0 * (self.scenario.solver.dim as f64).sqrt();
        (0..modes)
            .map(|i| scale * (PI * (i as f64 + 0.5) / modes as f64 / 2.0).sin())
            .collect()
    }

    fn measurement_times(&self) -> Vec<f64> {
        let n = self.scenario.certificate.measure_points;
        let horizon = self.scenario.solver.horizon;
        (0..n).map(|i| horizon * i as f64 / (n - 1) as f64).collect()
    }

    fn hypotheses(&mut self) -> LabResult<HypothesisReport> {
        let report = verify_hypotheses(&self.profile, &VerificationGrid::default_for(&self.profile))?;
        let rows = report.records.clone();
        self.out.csv("hypotheses.csv", |buf| {
            let mut w = csv::Writer::from_writer(buf);
            let err = |e: csv::Error| sdwave::Error::InvalidParameter(format!("csv: {e}"));
            w.write_record(["hypothesis", "holds", "fitted_constant", "observed_sup", "worst_t"])
                .map_err(err)?;
            for r in &rows {
                w.write_record([
                    r.hypothesis.to_string(),
                    r.holds.to_string(),
                    sci(r.fitted_constant),
                    sci(r.observed_sup),
                    sci(r.worst_t),
                ])
                .map_err(err)?;
            }
            w.flush()
                .map_err(|e| sdwave::Error::InvalidParameter(format!("csv: {e}")))
        })?;
        let cases: Vec<String> = report
            .cases(self.profile.theta().is_bounded())
            .iter()
            .map(|c| format!("{c:?}"))
            .collect();
        self.verdicts.push(Verdict::info("theta_scale", sci(report.theta_scale)));
        self.verdicts.push(Verdict::info("gec_cases", cases.join(" ")));
        if self.profile.lambda().is_some() {
            self.verdicts
                .push(Verdict::info("lambda_regime", report.lambda_regime()));
        }
        Ok(report)
    }

    fn simulate(&mut self) -> LabResult<()> {
        let (u0, u1) = self.scenario.build_data()?;
        let grid = self.grid()?;
        let trace = simulate(&self.profile, &u0, &u1, &grid, &self.schedule(), &self.control())?;
        self.out.csv("energy_total.csv", |buf| trace.write_total_csv(buf))?;
        self.out.csv("energy_density.csv", |buf| trace.write_density_csv(buf))?;

        let lattice = lattice_energy(&u0, &u1, self.profile.value(0.0))?;
        let e0 = trace.total[0];
        let identity = (e0 - lattice).abs() / lattice.max(f64::MIN_POSITIVE);
        self.verdicts
            .push(Verdict::at_most("energy_identity_rel_error", identity, IDENTITY_TOL));
        let (lo, hi) = trace
            .total
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), e| (lo.min(e / e0), hi.max(e / e0)));
        if self.profile.is_constant() {
            let drift = (hi - 1.0).max(1.0 - lo);
            self.verdicts
                .push(Verdict::at_most("conservation_max_rel_drift", drift, CONSERVATION_TOL));
        } else {
            self.verdicts.push(Verdict::info("energy_ratio_min", sci(lo)));
            self.verdicts.push(Verdict::info("energy_ratio_max", sci(hi)));
        }
        Ok(())
    }

    fn certify_gec(&mut self) -> LabResult<()> {
        let report = self.hypotheses()?;
        let xis = self.certified_modes();
        let times = self.measurement_times();
        let control = self.control();
        let dim = self.scenario.solver.dim;
        let (ln_lower, ln_upper) = match self.scenario.certificate.envelope {
            Envelope::Uniform => uniform_envelope(&self.profile, &report, dim)?,
            Envelope::Gronwall => gronwall_envelope(&self.profile, &report)?,
            Envelope::Diagonalization => return self.certify_diagonal(&report, ZoneFlavor::Theta).map(|_| ()),
        };
        let profile = &self.profile;
        let measured: Vec<(f64, f64)> = xis
            .par_iter()
            .map(|&xi| measured_ratio_range(profile, xi, &times, &control))
            .collect::<sdwave::Result<_>>()?;
        let passes: Vec<bool> = measured
            .iter()
            .map(|(lo, hi)| lo.ln() >= ln_lower - LN_SLACK && hi.ln() <= ln_upper + LN_SLACK)
            .collect();
        self.out.csv("certificate.csv", |buf| {
            let mut w = csv::Writer::from_writer(buf);
            let err = |e: csv::Error| sdwave::Error::InvalidParameter(format!("csv: {e}"));
            w.write_record([
                "xi_norm",
                "t_xi",
                "N_used",
                "lower",
                "upper",
                "measured_min",
                "measured_max",
                "pass",
                "ln_lower",
                "ln_upper",
            ])
            .map_err(err)?;
            for ((xi, (lo, hi)), pass) in xis.iter().zip(&measured).zip(&passes) {
                w.write_record([
                    sci(*xi),
                    "na".into(),
                    "na".into(),
                    sci(ln_lower.exp()),
                    sci(ln_upper.exp()),
                    sci(*lo),
                    sci(*hi),
                    pass.to_string(),
                    sci(ln_lower),
                    sci(ln_upper),
                ])
                .map_err(err)?;
            }
            w.flush()
                .map_err(|e| sdwave::Error::InvalidParameter(format!("csv: {e}")))
        })?;
        let failures = passes.iter().filter(|p| !**p).count();
        self.verdicts.push(Verdict::info("envelope_ln_upper", sci(ln_upper)));
        self.verdicts
            .push(Verdict::new("modes_outside_envelope", failures, 0, failures == 0));
        Ok(())
    }

    /// Zone-splitting certificate with measurement; returns it for further use.
    fn certify_diagonal(
        &mut self,
        report: &HypothesisReport,
        flavor: ZoneFlavor,
    ) -> LabResult<sdwave::diag::Certificate> {
        let spec = &self.scenario.certificate;
        let opts = CertificateOptions {
            n_start: spec.n_start,
            n_cap: spec.n_cap,
            horizon: self.scenario.solver.horizon,
            ..CertificateOptions::default()
        };
        let xis = self.certified_modes();
        let mut cert = bound_certificate(&self.profile, report, flavor, &xis, self.scenario.solver.dim, &opts)?;
        cert.measure(&self.profile, &self.measurement_times(), &self.control())?;
        self.out.csv("certificate.csv", |buf| cert.write_csv(buf))?;
        self.verdicts.push(Verdict::info("N_used", cert.n_used));
        self.verdicts
            .push(Verdict::info("remainder_constant", sci(cert.remainder_constant)));
        self.verdicts
            .push(Verdict::at_most("max_eigen_residual", cert.max_eigen_residual(), RESIDUAL_TOL));
        let failures = cert
            .modes
            .iter()
            .filter(|m| m.passes(LN_SLACK) != Some(true))
            .count();
        self.verdicts
            .push(Verdict::new("modes_outside_envelope", failures, 0, failures == 0));
        Ok(cert)
    }

    fn certify_lambda(&mut self) -> LabResult<()> {
        let report = self.hypotheses()?;
        let cert = self.certify_diagonal(&report, ZoneFlavor::Lambda)?;
        let bound = cert.lambda_bound(&self.profile)?;
        let lambda = self.profile.lambda().ok_or(sdwave::Error::MissingLambda)?;
        let theta = self.profile.theta().with_scale(cert.theta_scale);
        self.verdicts.push(Verdict::info("N0", bound.n0));
        self.verdicts.push(Verdict::info("ln_C", sci(bound.ln_constant)));

        // U(N0) for the configured data
        let controls = WeightControls::new(theta, lambda)?;
        let (u0, u1) = self.scenario.build_data()?;
        let a_zero = self.profile.value(0.0);
        let u = match self.scenario.gevrey_kind() {
            Some(kind) => u_functional_spectrum(bound.n0, &|t| kind.ln_spectrum(t), &controls, &UOptions::default())?,
            None if self.scenario.solver.dim == 1 => u_functional_spectrum(
                bound.n0,
                &|t| initial_ln_spectrum(&u0, &u1, a_zero, t),
                &controls,
                &UOptions::default(),
            )?,
            None => return Err(LabError::Validation("U is evaluated on the one-dimensional torus only".into())),
        };
        self.out.csv("u_functional.csv", |buf| write_functional_csv(&[u], buf))?;
        self.verdicts.push(Verdict::new("U_finite", u.is_finite(), true, u.is_finite()));

        // direct integration over the torus grid
        let grid = self.grid()?;
        let trace = simulate(&self.profile, &u0, &u1, &grid, &self.schedule(), &self.control())?;
        self.out.csv("energy_total.csv", |buf| trace.write_total_csv(buf))?;
        let mut worst_mode = f64::NEG_INFINITY;
        for (i, density) in trace.density.iter().enumerate() {
            let xi = grid.point(i).xi_norm();
            let e0 = density[0];
            if e0 <= 0.0 || xi == 0.0 {
                continue;
            }
            let allowed = bound.ln_constant + lambda_exponent(theta, lambda, bound.n0, xi);
            for e in density {
                worst_mode = worst_mode.max((e / e0).ln() - allowed);
            }
        }
        self.verdicts
            .push(Verdict::at_most("mode_bound_ln_excess", worst_mode, LN_SLACK));
        let ln_total_bound = bound.ln_constant + u.ln_value;
        let worst_total = trace
            .total
            .iter()
            .map(|e| e.ln() - ln_total_bound)
            .fold(f64::NEG_INFINITY, f64::max);
        self.verdicts
            .push(Verdict::at_most("energy_bound_ln_excess", worst_total, LN_SLACK));
        Ok(())
    }

    fn gevrey_gate(&mut self) -> LabResult<()> {
        let spec = &self.scenario.gevrey;
        let kind = self
            .scenario
            .gevrey_kind()
            .ok_or_else(|| LabError::Validation("the gate task needs Gevrey-type data".into()))?;
        let truncation = match self.scenario.data {
            crate::config::DataSpec::Gevrey36 { truncation, .. } | crate::config::DataSpec::Gevrey37 { truncation, .. } => {
                truncation
            }
            _ => unreachable!("checked by gevrey_kind"),
        };
        let data = GevreyData::build(kind, truncation)?;
        self.out.csv("gevrey_data.csv", |buf| data.write_csv(buf))?;
        let grid = TorusGrid::new(1, self.scenario.solver.grid)?;
        let thetas: Vec<f64> = (0..grid.len()).map(|i| grid.theta(i)[0]).collect();
        self.verdicts
            .push(Verdict::at_most("spectrum_max_error", data.spectrum_error(&thetas), SPECTRUM_TOL));
        self.verdicts.push(Verdict::info("support_size", data.field.support_len()));

        let field: &LatticeField = &data.field;
        let mut checks = Vec::new();
        match moment_check(field, spec.moment_order) {
            MomentOutcome::Pass { max_order } => checks.push(Verdict::new("moment_check", "pass", max_order, true)),
            MomentOutcome::Fail { alpha, value, scale } => checks.push(Verdict::new(
                "moment_check",
                format!("fail at {alpha:?}: {value:e}"),
                sci(1e-9 * scale),
                false,
            )),
        }
        let decay = decay_check(field, &spec.sequence, spec.rho)?;
        checks.push(Verdict::new("decay_check", sci(decay.constant), "finite", decay.holds));
        let transform = transform_bound(field, &spec.sequence, spec.rho, &grid)?;
        checks.push(Verdict::new(
            "transform_bound",
            sci(transform.checked_sup),
            sci(transform.constant),
            transform.holds,
        ));
        if !spec.data_checks {
            for v in &mut checks {
                v.pass = None;
            }
        }
        self.verdicts.extend(checks);

        let lambda = self.profile.lambda().ok_or(sdwave::Error::MissingLambda)?;
        let controls = WeightControls::new(self.profile.theta(), lambda)?;
        let opts = GateOptions {
            threshold: spec.threshold,
            dim: 1,
            ..GateOptions::default()
        };
        let gate = theorem3_gate(&spec.n_grid, &spec.sequence, &controls, &opts)?;
        let l_rows: Vec<FunctionalValue> = gate.l_values.iter().map(|l| l.as_functional()).collect();
        self.out.csv("l_constant.csv", |buf| write_functional_csv(&l_rows, buf))?;
        self.out.csv("gate_ratio.csv", |buf| {
            let mut w = csv::Writer::from_writer(buf);
            let err = |e: csv::Error| sdwave::Error::InvalidParameter(format!("csv: {e}"));
            w.write_record(["N", "inner_infimum"]).map_err(err)?;
            for (n, r) in &gate.ratios {
                w.write_record([sci(*n), sci(*r)]).map_err(err)?;
            }
            w.flush()
                .map_err(|e| sdwave::Error::InvalidParameter(format!("csv: {e}")))
        })?;
        let u_rows: Vec<FunctionalValue> = spec
            .n_grid
            .par_iter()
            .map(|&n| u_functional_spectrum(n, &|t| kind.ln_spectrum(t), &controls, &UOptions::default()))
            .collect::<sdwave::Result<_>>()?;
        self.out.csv("u_functional.csv", |buf| write_functional_csv(&u_rows, buf))?;

        let case = match gate.case {
            GateCase::AnyN => ExpectedCase::AnyN,
            GateCase::LargeN => ExpectedCase::LargeN,
            GateCase::Neither => ExpectedCase::Neither,
        };
        let expect = &spec.expect;
        self.verdicts.push(match expect.case {
            Some(want) => Verdict::new("gate_case", format!("{case:?}"), format!("{want:?}"), case == want),
            None => Verdict::info("gate_case", format!("{case:?}")),
        });
        self.verdicts.push(match expect.ratio_diverges {
            Some(want) => Verdict::new("ratio_diverges", gate.ratio_diverges, want, gate.ratio_diverges == want),
            None => Verdict::info("ratio_diverges", gate.ratio_diverges),
        });
        self.verdicts.push(match expect.ratio_exponent {
            Some(want) => Verdict::new(
                "ratio_exponent",
                sci(gate.ratio_exponent),
                sci(want),
                (gate.ratio_exponent - want).abs() <= 0.1 * want.abs(),
            ),
            None => Verdict::info("ratio_exponent", sci(gate.ratio_exponent)),
        });
        self.verdicts.push(Verdict::info(
            "N0",
            gate.n0.map_or("none".to_string(), sci),
        ));
        Ok(())
    }
}
