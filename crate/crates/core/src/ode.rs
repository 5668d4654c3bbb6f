//! Dormand-Prince 5(4) for small real systems.

use crate::error::{Error, Result};

/// Absolute tolerance scale and step controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    /// Local error allowed per unit of time, relative to `max(1, |y|)`.
    pub tol: f64,
    pub max_steps: usize,
    pub min_step: f64,
    pub max_step: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_steps: 20_000_000,
            min_step: 1e-14,
            max_step: f64::INFINITY,
        }
    }
}

impl StepControl {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// A time the integrator must land on exactly; `record` marks output times.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stop {
    pub t: f64,
    pub record: bool,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

fn max_norm<const N: usize>(y: &[f64; N]) -> f64 {
    y.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Integrates `y' = f(t, y)` from `t0` through the stops, which must be
/// strictly monotone in the direction of integration. `on_record` is called
/// at every stop with `record = true`. Returns the state at the last stop.
pub fn integrate<const N: usize, F, R>(
    f: F,
    t0: f64,
    y0: [f64; N],
    stops: &[Stop],
    control: &StepControl,
    mut on_record: R,
) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    R: FnMut(f64, &[f64; N]),
{
    let mut t = t0;
    let mut y = y0;
    let Some(last) = stops.last() else {
        return Ok(y);
    };
    let dir = if last.t >= t0 { 1.0 } else { -1.0 };
    let mut k1 = f(t, &y);
    let scale0 = max_norm(&y).max(1.0);
    let rate = max_norm(&k1).max(1e-12);
    let mut h = (0.01 * scale0 / rate).min(0.1).min(control.max_step);
    let mut steps = 0usize;

    for stop in stops {
        if (stop.t - t) * dir < 0.0 {
            return Err(Error::InvalidParameter("stops are not monotone".into()));
        }
        while (stop.t - t) * dir > 0.0 {
            steps += 1;
            if steps > control.max_steps {
                return Err(Error::StepBudget { t });
            }
            let remaining = (stop.t - t).abs();
            let mut step = h.min(remaining);
            let landing = step >= remaining * (1.0 - 1e-12);
            if landing {
                step = remaining;
            }
            let hs = dir * step;
            let k2 = f(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
            let k3 = f(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(t + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(
                t + C5 * hs,
                &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let t_new = if landing { stop.t } else { t + hs };
            let k6 = f(
                t + hs,
                &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let y_new = axpy(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = f(t_new, &y_new);
            let mut err = [0.0; N];
            for i in 0..N {
                err[i] = hs
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            }
            let allowed = control.tol * step * max_norm(&y).max(max_norm(&y_new)).max(1.0);
            let ratio = max_norm(&err) / allowed;
            if !ratio.is_finite() {
                return Err(Error::StepUnderflow { t });
            }
            if ratio <= 1.0 {
                t = t_new;
                y = y_new;
                k1 = k7;
                let grow = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.25)).clamp(0.2, 5.0) };
                // a short landing step says nothing about the natural step size
                if !landing || step >= h {
                    h = (step * grow).min(control.max_step);
                }
            } else {
                h = step * (0.9 * ratio.powf(-0.25)).clamp(0.1, 0.9);
                if h < control.min_step * t.abs().max(1.0) {
                    return Err(Error::StepUnderflow { t });
                }
            }
        }
        if stop.record {
            on_record(t, &y);
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let stops = [Stop {
            t: 2.0 * std::f64::consts::PI,
            record: true,
        }];
        let mut seen = 0;
        let y = integrate(f, 0.0, [1.0, 0.0], &stops, &StepControl::default(), |_, _| seen += 1)
            .unwrap();
        assert_eq!(seen, 1);
        assert!((y[0] - 1.0).abs() < 1e-8 && y[1].abs() < 1e-8);
    }

    #[test]
    fn exponential_growth_and_backward_run() {
        let f = |_t: f64, y: &[f64; 1]| [y[0]];
        let ctl = StepControl::default();
        let y = integrate(f, 0.0, [1.0], &[Stop { t: 3.0, record: false }], &ctl, |_, _| {}).unwrap();
        assert!((y[0] / 3f64.exp() - 1.0).abs() < 1e-8);
        let back = integrate(f, 3.0, y, &[Stop { t: 0.0, record: false }], &ctl, |_, _| {}).unwrap();
        assert!((back[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn lands_exactly_on_stops() {
        let f = |_t: f64, _y: &[f64; 1]| [1.0];
        let stops: Vec<Stop> = [0.3, 1.7, 2.0]
            .iter()
            .map(|&t| Stop { t, record: true })
            .collect();
        let mut times = Vec::new();
        integrate(f, 0.0, [0.0], &stops, &StepControl::default(), |t, y| times.push((t, y[0]))).unwrap();
        assert_eq!(times.iter().map(|p| p.0).collect::<Vec<_>>(), vec![0.3, 1.7, 2.0]);
        assert!((times[1].1 - 1.7).abs() < 1e-14);
    }
}
