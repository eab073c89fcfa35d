//! Dormand–Prince 5(4) with PI step-size control, for small fixed-size
//! systems. The right-hand side may fail (e.g. a stage leaves the domain);
//! such steps are rejected and retried with a smaller step.

use std::ops::ControlFlow;

// Butcher tableau
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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// 5th minus embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen automatically when `None`.
    pub h0: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
    pub safety: f64,
    pub fac_min: f64,
    pub fac_max: f64,
    /// PI stabilization exponent on the previous error.
    pub beta: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            h0: None,
            h_max: f64::INFINITY,
            max_steps: 1_000_000,
            safety: 0.9,
            fac_min: 0.2,
            fac_max: 10.0,
            beta: 0.04,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome<S> {
    /// Reached the final time.
    Finished,
    /// The accept callback asked to stop.
    Stopped(S),
    /// The step size shrank below resolution while every attempt failed
    /// to evaluate the right-hand side.
    Blocked { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Failure {
    StepUnderflow { t: f64, h: f64 },
    TooManySteps { t: f64 },
    /// The right-hand side failed at the initial point.
    Initial,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (w, k) in terms {
            acc += w * k[i];
        }
        *o += h * acc;
    }
    out
}

fn error_norm<const N: usize>(err: &[f64; N], y: &[f64; N], y_new: &[f64; N], rtol: f64, atol: f64) -> f64 {
    let mut sum = 0.0;
    for i in 0..N {
        let sk = atol + rtol * y[i].abs().max(y_new[i].abs());
        sum += (err[i] / sk).powi(2);
    }
    (sum / N as f64).sqrt()
}

/// Starting step from the local derivative scale.
fn initial_step<const N: usize, F, E>(f: &mut F, t: f64, y: &[f64; N], f0: &[f64; N], opts: &Options, t_end: f64) -> f64
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
{
    let scale: [f64; N] = std::array::from_fn(|i| opts.atol + opts.rtol * y[i].abs());
    let rms = |v: &[f64; N]| (v.iter().zip(&scale).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / N as f64).sqrt();
    let d0 = rms(y);
    let d1 = rms(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(t_end - t).min(opts.h_max);
    let y1 = axpy(y, h0, &[(1.0, f0)]);
    let h = match f(t + h0, &y1) {
        Ok(f1) => {
            let diff: [f64; N] = std::array::from_fn(|i| f1[i] - f0[i]);
            let d2 = rms(&diff) / h0;
            let h1 = if d1.max(d2) <= 1e-15 {
                (h0 * 1e-3).max(1e-6)
            } else {
                (0.01 / d1.max(d2)).powf(1.0 / 5.0)
            };
            (100.0 * h0).min(h1)
        }
        Err(_) => h0 * 0.1,
    };
    h.min(t_end - t).min(opts.h_max)
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end > t0`.
///
/// `on_accept(t, y)` runs after every accepted step and may stop the
/// integration early.
pub fn solve<const N: usize, F, E, S, A>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &Options,
    mut on_accept: A,
) -> Result<(Outcome<S>, Stats), Failure>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
    A: FnMut(f64, &[f64; N]) -> ControlFlow<S>,
{
    let mut stats = Stats::default();
    let mut t = t0;
    let mut y = y0;
    if t_end <= t0 {
        return Ok((Outcome::Finished, stats));
    }
    let mut k1 = f(t, &y).map_err(|_| Failure::Initial)?;
    stats.evaluations += 1;
    let mut h = opts.h0.unwrap_or_else(|| initial_step(&mut f, t, &y, &k1, opts, t_end));
    stats.evaluations += 1;

    let expo = 0.2 - 0.75 * opts.beta;
    let mut err_prev: f64 = 1e-4;
    let mut just_rejected = false;

    loop {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Failure::TooManySteps { t });
        }
        let remaining = t_end - t;
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }
        let h_min = 16.0 * f64::EPSILON * t.abs().max(1.0);

        let attempt = (|| {
            let y2 = axpy(&y, h, &[(A21, &k1)]);
            let k2 = f(t + C2 * h, &y2)?;
            let y3 = axpy(&y, h, &[(A31, &k1), (A32, &k2)]);
            let k3 = f(t + C3 * h, &y3)?;
            let y4 = axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
            let k4 = f(t + C4 * h, &y4)?;
            let y5 = axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
            let k5 = f(t + C5 * h, &y5)?;
            let y6 = axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
            let k6 = f(t + h, &y6)?;
            let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let k7 = f(t + h, &y_new)?;
            let err: [f64; N] = std::array::from_fn(|i| {
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            });
            Ok::<_, E>((y_new, k7, err))
        })();
        stats.evaluations += 6;

        let (y_new, k7, err) = match attempt {
            Ok(v) => v,
            Err(_) => {
                stats.rejected += 1;
                h *= 0.25;
                just_rejected = true;
                if h < h_min {
                    return Ok((Outcome::Blocked { t }, stats));
                }
                continue;
            }
        };

        let err_norm = error_norm(&err, &y, &y_new, opts.rtol, opts.atol);
        if !err_norm.is_finite() {
            stats.rejected += 1;
            h *= 0.25;
            just_rejected = true;
            if h < h_min {
                return Err(Failure::StepUnderflow { t, h });
            }
            continue;
        }

        if err_norm <= 1.0 {
            stats.accepted += 1;
            t = if last { t_end } else { t + h };
            y = y_new;
            k1 = k7;
            if let ControlFlow::Break(s) = on_accept(t, &y) {
                return Ok((Outcome::Stopped(s), stats));
            }
            if last {
                return Ok((Outcome::Finished, stats));
            }
            let mut fac = opts.safety * err_norm.max(1e-10).powf(-expo) * err_prev.powf(opts.beta);
            fac = fac.clamp(opts.fac_min, opts.fac_max);
            if just_rejected {
                fac = fac.min(1.0);
            }
            err_prev = err_norm.max(1e-4);
            just_rejected = false;
            h = (h * fac).min(opts.h_max);
        } else {
            stats.rejected += 1;
            let fac = (opts.safety * err_norm.powf(-0.2)).max(opts.fac_min);
            h *= fac;
            just_rejected = true;
            if h < h_min {
                return Err(Failure::StepUnderflow { t, h });
            }
        }
    }
}
