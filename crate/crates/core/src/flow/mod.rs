//! The gradient system `θ̇ = -G(θ)⁻¹ η(θ)`.
//!
//! Since `η̇ = G θ̇ = -η`, the dual coordinates follow `η₀ e^{-t}` exactly;
//! [`eta_closed`] is that solution and [`integrate`] checks it from the
//! primal side. [`invert_eta`] maps dual points back to parameters.

pub mod dopri;

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrability::{hamiltonian, lax_pair, LaxPair};
use crate::manifold::{det3, invert3_default, Eta, Manifold, ModelKind, Theta};

/// `|det G|` below which integration stops.
pub const DET_ABORT: f64 = 1e-12;

pub const DEFAULT_RTOL: f64 = 1e-9;
pub const DEFAULT_ATOL: f64 = 1e-12;
pub const DEFAULT_NEWTON_TOL: f64 = 1e-12;
pub const DEFAULT_NEWTON_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowStatus {
    /// Reached the requested final time.
    Completed,
    /// Stopped because `|det G|` fell below [`DET_ABORT`].
    NearSingular,
    /// Stopped because every further step would leave the model domain.
    LeftDomain,
    /// Stopped because the step size underflowed, typically as the
    /// velocity blows up next to a degeneracy locus.
    Stalled,
}

impl FlowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            FlowStatus::Completed => "completed",
            FlowStatus::NearSingular => "near_singular",
            FlowStatus::LeftDomain => "left_domain",
            FlowStatus::Stalled => "stalled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub theta: Theta,
    pub eta: Eta,
    /// Hamiltonian `η₂/η₁ + η₃/η₂`; NaN where undefined.
    pub hamiltonian: f64,
    pub det_g: f64,
    /// `‖L(t) - L(0)‖_F` for the Lax matrix with `ℓ = 1`; NaN where the
    /// pair cannot be built.
    pub lax_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub model: ModelKind,
    pub samples: Vec<TrajectorySample>,
    pub t_end: f64,
    pub rtol: f64,
    pub atol: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub status: FlowStatus,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> &TrajectorySample {
        &self.samples[0]
    }

    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectory has at least the initial sample")
    }

    pub fn reached_end(&self) -> bool {
        self.status == FlowStatus::Completed
    }

    /// `max_t ‖η(θ(t)) - η₀ e^{-t}‖∞ / ‖η₀‖∞` over the recorded samples.
    pub fn linearization_residual(&self) -> f64 {
        let eta0 = self.first().eta;
        let scale = eta0.norm_inf();
        self.samples
            .iter()
            .map(|s| {
                let pred = eta_closed(eta0, s.t).to_array();
                let got = s.eta.to_array();
                (0..3).map(|i| (got[i] - pred[i]).abs()).fold(0.0, f64::max) / scale
            })
            .fold(0.0, f64::max)
    }

    /// `max_t |H(t) - H(0)| / |H(0)|`.
    pub fn hamiltonian_drift(&self) -> f64 {
        let h0 = self.first().hamiltonian;
        self.samples
            .iter()
            .map(|s| (s.hamiltonian - h0).abs() / h0.abs())
            .fold(0.0, |m: f64, v| if v.is_nan() { f64::NAN } else { m.max(v) })
    }

    pub fn max_lax_dev(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.lax_dev)
            .fold(0.0, |m: f64, v| if v.is_nan() { f64::NAN } else { m.max(v) })
    }
}

fn singular_at(theta: Theta) -> Error {
    Error::SingularMetric { a: theta.a, b: theta.b, c: theta.c }
}

/// Velocity `-G(θ)⁻¹ η(θ)`.
pub fn rhs<M: Manifold + ?Sized>(model: &M, theta: Theta) -> Result<[f64; 3]> {
    let g = model.metric(theta)?;
    let inv = invert3_default(&g).map_err(|_| singular_at(theta))?;
    let eta = model.eta(theta)?;
    Ok(inv.mul_vec(eta.to_array()).map(|v| -v))
}

/// `η₀ e^{-t}`.
pub fn eta_closed(eta0: Eta, t: f64) -> Eta {
    eta0.scale((-t).exp())
}

fn sample_at<M: Manifold + ?Sized>(model: &M, t: f64, theta: Theta, lax0: Option<&LaxPair>) -> Result<TrajectorySample> {
    let eta = model.eta(theta)?;
    let det_g = det3(&model.metric(theta)?);
    let h = hamiltonian(eta).unwrap_or(f64::NAN);
    let lax_dev = match (lax0, lax_pair(eta, 1.0)) {
        (Some(l0), Ok(l)) => l.l_distance(l0),
        _ => f64::NAN,
    };
    Ok(TrajectorySample { t, theta, eta, hamiltonian: h, det_g, lax_dev })
}

/// Integrates the gradient flow from `theta0` over `[0, t_end]`.
///
/// The trajectory records every accepted step. It ends early, with a
/// flagged [`FlowStatus`], when `|det G| < DET_ABORT` or when the flow
/// cannot continue inside the domain.
pub fn integrate<M: Manifold + ?Sized>(model: &M, theta0: Theta, t_end: f64, rtol: f64, atol: f64) -> Result<Trajectory> {
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::Domain(format!("t_end must be finite and >= 0, got {t_end}")));
    }
    integrate_directed(model, theta0, t_end, 1.0, rtol, atol)
}

/// Like [`integrate`] but runs time backwards when `direction < 0`; sample
/// times are then reported as negative.
pub(crate) fn integrate_directed<M: Manifold + ?Sized>(
    model: &M,
    theta0: Theta,
    duration: f64,
    direction: f64,
    rtol: f64,
    atol: f64,
) -> Result<Trajectory> {
    if !(rtol > 0.0) || !(atol > 0.0) {
        return Err(Error::Domain(format!("tolerances must be positive (rtol = {rtol}, atol = {atol})")));
    }
    model.check_domain(theta0)?;
    rhs(model, theta0)?;

    let eta0 = model.eta(theta0)?;
    let lax0 = lax_pair(eta0, 1.0).ok();
    let first = sample_at(model, 0.0, theta0, lax0.as_ref())?;
    let mut samples = vec![first];
    let mut trajectory = Trajectory {
        model: model.kind(),
        samples: Vec::new(),
        t_end: direction.signum() * duration,
        rtol,
        atol,
        accepted_steps: 0,
        rejected_steps: 0,
        status: FlowStatus::Completed,
    };
    if first.det_g.abs() < DET_ABORT {
        return Err(singular_at(theta0));
    }

    let opts = dopri::Options { rtol, atol, ..dopri::Options::default() };
    let sign = direction.signum();
    let field = |_t: f64, y: &[f64; 3]| -> Result<[f64; 3]> {
        let theta = Theta::from_array(*y);
        model.check_domain(theta)?;
        Ok(rhs(model, theta)?.map(|v| sign * v))
    };
    let mut sample_error = None;
    let on_accept = |t: f64, y: &[f64; 3]| -> ControlFlow<FlowStatus> {
        match sample_at(model, sign * t, Theta::from_array(*y), lax0.as_ref()) {
            Ok(s) => {
                samples.push(s);
                if s.det_g.abs() < DET_ABORT {
                    ControlFlow::Break(FlowStatus::NearSingular)
                } else {
                    ControlFlow::Continue(())
                }
            }
            Err(e) => {
                sample_error = Some(e);
                ControlFlow::Break(FlowStatus::LeftDomain)
            }
        }
    };
    let solved = dopri::solve(field, 0.0, theta0.to_array(), duration, &opts, on_accept);
    if let Some(e) = sample_error {
        return Err(e);
    }
    let (status, stats) = match solved {
        Ok((dopri::Outcome::Finished, stats)) => (FlowStatus::Completed, stats),
        Ok((dopri::Outcome::Stopped(status), stats)) => (status, stats),
        Ok((dopri::Outcome::Blocked { .. }, stats)) => (FlowStatus::LeftDomain, stats),
        Err(dopri::Failure::StepUnderflow { .. }) => {
            (FlowStatus::Stalled, dopri::Stats { accepted: samples.len() - 1, ..dopri::Stats::default() })
        }
        Err(dopri::Failure::TooManySteps { t }) => return Err(Error::StepFailure { t: sign * t, h: 0.0 }),
        Err(dopri::Failure::Initial) => return Err(singular_at(theta0)),
    };
    trajectory.status = status;
    trajectory.samples = samples;
    trajectory.accepted_steps = stats.accepted;
    trajectory.rejected_steps = stats.rejected;
    Ok(trajectory)
}

/// Solves `η(θ) = target` by Newton's method with the metric as Jacobian.
///
/// Steps are halved until the trial point lies in the domain and the
/// residual `‖η(θ) - target‖∞` decreases.
pub fn invert_eta<M: Manifold + ?Sized>(
    model: &M,
    target: Eta,
    guess: Option<Theta>,
    tol: f64,
    max_iter: usize,
) -> Result<Theta> {
    if !model.dual_domain_contains(target) {
        return Err(Error::Domain(format!(
            "target ({}, {}, {}) is not in the image of the {} dual map",
            target.eta1,
            target.eta2,
            target.eta3,
            model.kind()
        )));
    }
    let mut theta = guess.unwrap_or_else(|| model.default_guess(target));
    model.check_domain(theta)?;
    let residual_at = |t: Theta| -> Result<[f64; 3]> {
        let e = model.eta(t)?.to_array();
        let g = target.to_array();
        Ok([e[0] - g[0], e[1] - g[1], e[2] - g[2]])
    };
    let norm = |r: &[f64; 3]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let mut r = residual_at(theta)?;
    let mut rn = norm(&r);
    for _ in 0..max_iter {
        if rn <= tol {
            return Ok(theta);
        }
        let g = model.metric(theta)?;
        let inv = invert3_default(&g).map_err(|_| singular_at(theta))?;
        let step = inv.mul_vec(r).map(|v| -v);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = Theta::from_array([0, 1, 2].map(|i| theta.to_array()[i] + lambda * step[i]));
            if model.contains(trial) {
                let tr = residual_at(trial)?;
                let tn = norm(&tr);
                if tn < rn {
                    accepted = Some((trial, tr, tn));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((t, tr, tn)) => {
                theta = t;
                r = tr;
                rn = tn;
            }
            None => break,
        }
    }
    if rn <= tol {
        Ok(theta)
    } else {
        Err(Error::NoConvergence { iterations: max_iter, residual: rn })
    }
}
