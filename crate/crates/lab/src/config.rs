//! Scenario files: TOML with one table per pipeline stage.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sdwave::diag::CertificateOptions;
use sdwave::gevrey::{GevreyData, GevreyKind, LogConvexSequence};
use sdwave::lattice::{Complex64, LatticeField};
use sdwave::speed::{ProfileSpec, SpeedProfile};

use crate::error::{LabError, LabResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Simulate,
    CertifyGec,
    CertifyLambda,
    GevreyGate,
    Hypotheses,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Envelope {
    /// bounded stabilization control
    Uniform,
    /// integrable inverse oscillation scale
    Gronwall,
    /// zone splitting and refined diagonalization
    Diagonalization,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    /// unit mass at `at` in the displacement (`velocity = false`) or velocity
    Delta {
        #[serde(default)]
        at: Option<Vec<i64>>,
        #[serde(default = "yes")]
        velocity: bool,
    },
    /// indicator of the cube `|k_j| <= radius`
    Box {
        radius: i64,
        #[serde(default = "yes")]
        velocity: bool,
    },
    Gevrey36 {
        m0: f64,
        #[serde(default = "default_truncation")]
        truncation: i64,
    },
    Gevrey37 {
        rho: f64,
        kappa: f64,
        #[serde(default = "default_truncation")]
        truncation: i64,
    },
    /// rows `k_1, ..., k_d, re, im`, relative to the config file
    Csv {
        path: String,
        #[serde(default = "yes")]
        velocity: bool,
    },
}

fn yes() -> bool {
    true
}

fn default_truncation() -> i64 {
    GevreyData::DEFAULT_TRUNCATION
}

impl Default for DataSpec {
    fn default() -> Self {
        DataSpec::Delta {
            at: None,
            velocity: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub tol: f64,
    pub horizon: f64,
    /// grid points per axis, a power of two
    pub grid: usize,
    pub dim: usize,
    /// energy samples per decade of time
    pub per_decade: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            horizon: 1000.0,
            grid: 64,
            dim: 1,
            per_decade: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertificateSpec {
    pub envelope: Envelope,
    /// number of certified frequencies
    pub modes: usize,
    /// uniformly spaced measurement times on `[0, horizon]`
    pub measure_points: usize,
    pub n_start: f64,
    pub n_cap: f64,
}

impl Default for CertificateSpec {
    fn default() -> Self {
        let opts = CertificateOptions::default();
        Self {
            envelope: Envelope::Diagonalization,
            modes: 32,
            measure_points: 4001,
            n_start: opts.n_start,
            n_cap: opts.n_cap,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GevreySpec {
    pub sequence: LogConvexSequence,
    pub rho: f64,
    pub moment_order: usize,
    pub n_grid: Vec<f64>,
    pub threshold: f64,
    /// moment, decay and transform checks give verdicts; otherwise they are
    /// reported only
    pub data_checks: bool,
    /// expected gate outcome; absent entries are reported without a verdict
    pub expect: GateExpectation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedCase {
    AnyN,
    LargeN,
    Neither,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateExpectation {
    pub case: Option<ExpectedCase>,
    pub ratio_diverges: Option<bool>,
    /// expected growth exponent of the inner ratio, checked to 10%
    pub ratio_exponent: Option<f64>,
}

impl Default for GevreySpec {
    fn default() -> Self {
        Self {
            sequence: LogConvexSequence::factorial_power(2.0).expect("valid sequence"),
            rho: 1.0,
            moment_order: 6,
            n_grid: (0..=10).map(|i| 2f64.powi(i)).collect(),
            threshold: 10.0,
            data_checks: true,
            expect: GateExpectation::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// the worked example the scenario reproduces
    #[serde(default)]
    pub example: String,
    pub task: Task,
    pub profile: ProfileSpec,
    #[serde(default)]
    pub data: DataSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub certificate: CertificateSpec,
    #[serde(default)]
    pub gevrey: GevreySpec,
    /// directory for relative data paths; not part of the content hash
    #[serde(skip)]
    pub base_dir: Option<std::path::PathBuf>,
}

impl Scenario {
    pub fn parse(text: &str) -> LabResult<Self> {
        toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        let mut scenario = Self::parse(&text)?;
        scenario.base_dir = path.parent().map(Path::to_path_buf);
        Ok(scenario)
    }

    /// Canonical TOML form; the content hash is taken over it.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    pub fn validate(&self) -> LabResult<()> {
        let fail = |msg: String| Err(LabError::Validation(msg));
        let s = &self.solver;
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return fail(format!("name {:?} must be nonempty ASCII letters, digits, '-' or '_'", self.name));
        }
        if !(s.horizon > 0.0 && s.horizon.is_finite()) {
            return fail(format!("horizon {} must be positive", s.horizon));
        }
        if !s.grid.is_power_of_two() || s.grid < 2 {
            return fail(format!("grid size {} is not a power of two", s.grid));
        }
        if !(1..=3).contains(&s.dim) {
            return fail(format!("dimension {} outside 1..=3", s.dim));
        }
        if !(s.tol > 0.0 && s.tol < 1e-2) {
            return fail(format!("tolerance {} out of range", s.tol));
        }
        if s.per_decade == 0 {
            return fail("per_decade must be positive".into());
        }
        let c = &self.certificate;
        if c.modes == 0 || c.measure_points < 2 {
            return fail("certificate needs modes and at least two measurement points".into());
        }
        let profile = self.build_profile()?;
        if matches!(self.task, Task::CertifyLambda | Task::GevreyGate) && profile.lambda().is_none() {
            return fail("task needs an auxiliary control `lambda` in the profile".into());
        }
        if matches!(self.data, DataSpec::Gevrey36 { .. } | DataSpec::Gevrey37 { .. }) && s.dim != 1 {
            return fail("Gevrey-type data exist on the one-dimensional lattice only".into());
        }
        if self.task == Task::GevreyGate && !matches!(self.data, DataSpec::Gevrey36 { .. } | DataSpec::Gevrey37 { .. }) {
            return fail("the gate task needs Gevrey-type data".into());
        }
        self.gevrey
            .sequence
            .validate()
            .map_err(|e| LabError::Validation(e.to_string()))?;
        if self.gevrey.n_grid.len() < 2 || self.gevrey.n_grid.iter().any(|n| n.is_nan() || *n <= 0.0) {
            return fail("n_grid needs at least two positive values".into());
        }
        if self.gevrey.rho.is_nan() || self.gevrey.rho <= 0.0 {
            return fail("rho must be positive".into());
        }
        Ok(())
    }

    pub fn build_profile(&self) -> LabResult<SpeedProfile> {
        self.profile
            .build()
            .map_err(|e| LabError::Validation(format!("profile: {e}")))
    }

    pub fn gevrey_kind(&self) -> Option<GevreyKind> {
        match self.data {
            DataSpec::Gevrey36 { m0, .. } => Some(GevreyKind::PowerSine { m0 }),
            DataSpec::Gevrey37 { rho, kappa, .. } => Some(GevreyKind::Flat { rho, kappa }),
            _ => None,
        }
    }

    /// `(u0, u1)` on the lattice of the configured dimension.
    pub fn build_data(&self) -> LabResult<(LatticeField, LatticeField)> {
        let d = self.solver.dim;
        let zero = LatticeField::zeros(d)?;
        let place = |f: LatticeField, velocity: bool| if velocity { (zero.clone(), f) } else { (f, zero.clone()) };
        Ok(match &self.data {
            DataSpec::Delta { at, velocity } => {
                let at = at.clone().unwrap_or_else(|| vec![0; d]);
                if at.len() != d {
                    return Err(LabError::Validation(format!("delta position has {} components", at.len())));
                }
                place(LatticeField::delta(&at)?, *velocity)
            }
            DataSpec::Box { radius, velocity } => {
                if *radius < 0 {
                    return Err(LabError::Validation("box radius must be nonnegative".into()));
                }
                let side: Vec<i64> = (-radius..=*radius).collect();
                let mut points: Vec<Vec<i64>> = vec![vec![]];
                for _ in 0..d {
                    points = points
                        .into_iter()
                        .flat_map(|p| side.iter().map(move |&k| [p.clone(), vec![k]].concat()))
                        .collect();
                }
                let field = LatticeField::from_entries(d, points.into_iter().map(|k| (k, Complex64::new(1.0, 0.0))))?;
                place(field, *velocity)
            }
            DataSpec::Gevrey36 { truncation, .. } | DataSpec::Gevrey37 { truncation, .. } => {
                let kind = self.gevrey_kind().expect("gevrey data");
                (zero.clone(), GevreyData::build(kind, *truncation)?.field)
            }
            DataSpec::Csv { path, velocity } => {
                let full = self.base_dir.clone().unwrap_or_default().join(path);
                place(read_field_csv(&full, d)?, *velocity)
            }
        })
    }
}

fn read_field_csv(path: &Path, dim: usize) -> LabResult<LatticeField> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
    let mut entries = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        if row.len() != dim + 2 {
            return Err(LabError::Config(format!("{}: expected {} columns", path.display(), dim + 2)));
        }
        let bad = |e: String| LabError::Config(format!("{}: {e}", path.display()));
        let k: Vec<i64> = (0..dim)
            .map(|i| row[i].trim().parse::<i64>().map_err(|e| bad(e.to_string())))
            .collect::<LabResult<_>>()?;
        let re: f64 = row[dim].trim().parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
        let im: f64 = row[dim + 1].trim().parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
        entries.push((k, Complex64::new(re, im)));
    }
    Ok(LatticeField::from_entries(dim, entries)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "name = \"m\"\ntask = \"simulate\"\n[profile]\nfamily = \"constant\"\nvalue = 1.0\n";

    #[test]
    fn defaults_and_hash() {
        let s = Scenario::parse(MINIMAL).unwrap();
        s.validate().unwrap();
        assert_eq!(s.solver, SolverSpec::default());
        // the canonical form round-trips and hashes stably
        let again = Scenario::parse(&s.canonical()).unwrap();
        assert_eq!(again, s);
        assert_eq!(again.content_hash(), s.content_hash());
        let mut other = s.clone();
        other.solver.tol = 1e-9;
        assert_ne!(other.content_hash(), s.content_hash());
    }

    #[test]
    fn validation_errors() {
        let mut s = Scenario::parse(MINIMAL).unwrap();
        s.solver.horizon = 0.0;
        assert!(matches!(s.validate(), Err(LabError::Validation(_))));
        let mut s = Scenario::parse(MINIMAL).unwrap();
        s.task = Task::CertifyLambda;
        assert!(matches!(s.validate(), Err(LabError::Validation(_))));
        let unknown = MINIMAL.replace("value = 1.0", "value = 1.0\nextra = 3");
        assert!(matches!(Scenario::parse(&unknown), Err(LabError::Config(_))));
    }

    #[test]
    fn box_data() {
        let text = MINIMAL.to_string() + "[data]\nkind = \"box\"\nradius = 1\n[solver]\ndim = 2\n";
        let (u0, u1) = Scenario::parse(&text).unwrap().build_data().unwrap();
        assert!(u0.is_zero());
        assert_eq!(u1.support_len(), 9);
    }
}
