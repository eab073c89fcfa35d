//! Stirling-approximated model on `a, b, c > 1`.
//!
//! Replacing each `ln Γ` by its leading Stirling term turns the potential
//! into elementary functions of `(a, b, c)`. The resulting metric
//!
//! ```text
//! g_ii = 1/(s-1) - (αᵢ - 3/2)/(αᵢ - 1)²,   g_ij = 1/(s-1)   (s = a + b + c)
//! ```
//!
//! is indefinite and degenerates on the line `D = {b = c = 3/2}` and on the
//! surface `V = {a = (27 - 15b - 15c + 8bc) / (4bc - 8b - 8c + 15)}`.
//!
//! The dual coordinates are `ηᵢ = ln(s-1) - ln(αᵢ-1) - 1/(2(αᵢ-1))`, whose
//! Jacobian is exactly the metric above. (Differentiating the potential
//! itself would add `1/(2(s-1))` to every component.)

use crate::error::{Error, Result};
use crate::manifold::{DomainClass, DomainKind, Eta, Manifold, Metric3, ModelKind, Theta};

/// Default tolerance of [`StirlingModel::classify_domain`].
pub const CLASSIFY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StirlingModel {
    /// Additive constant of the potential.
    pub k: f64,
}

impl Default for StirlingModel {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Cubic whose zero set is `D ∪ V`:
/// `4abc - 8ac - 8ab - 8bc + 15a + 15b + 15c - 27`.
#[inline]
pub fn degeneracy_polynomial(theta: Theta) -> f64 {
    let Theta { a, b, c } = theta;
    4.0 * a * b * c - 8.0 * c * a + 15.0 * a - 8.0 * b * a + 15.0 * c - 8.0 * b * c - 27.0 + 15.0 * b
}

/// Sum of the absolute values of the polynomial's terms, used to make
/// "the polynomial vanishes" a relative statement.
fn degeneracy_polynomial_scale(theta: Theta) -> f64 {
    let Theta { a, b, c } = theta;
    4.0 * (a * b * c).abs()
        + 8.0 * ((c * a).abs() + (b * a).abs() + (b * c).abs())
        + 15.0 * (a.abs() + b.abs() + c.abs())
        + 27.0
}

/// `a` on the surface V above `(b, c)`, when the denominator is nonzero.
pub fn surface_v_a(b: f64, c: f64) -> Option<f64> {
    let den = 4.0 * b * c - 8.0 * b - 8.0 * c + 15.0;
    let num = 27.0 - 15.0 * b - 15.0 * c + 8.0 * b * c;
    if den.abs() <= f64::EPSILON * 64.0 {
        None
    } else {
        Some(num / den)
    }
}

impl StirlingModel {
    /// `k = -ln(2π) - 2`
    pub const DEFAULT: StirlingModel = StirlingModel { k: -1.837_877_066_409_345_3 - 2.0 };

    fn require(&self, theta: Theta) -> Result<()> {
        self.check_domain(theta)
    }

    /// Inverse metric from the rational closed form.
    pub fn metric_inverse_closed(&self, theta: Theta) -> Result<Metric3> {
        self.require(theta)?;
        let Theta { a, b, c } = theta;
        let den = degeneracy_polynomial(theta);
        let tol = 1e-12 * degeneracy_polynomial_scale(theta);
        if den.abs() <= tol {
            return Err(Error::SingularMatrix { det: den, tol });
        }
        let (a1, b1, c1) = ((a - 1.0).powi(2), (b - 1.0).powi(2), (c - 1.0).powi(2));
        let xx = -2.0 * a1 * (-6.0 * b * a - 6.0 * c * a + 9.0 * a + 4.0 * c * a * b - c - b + 3.0) / den;
        let yy = -2.0 * b1 * (-6.0 * b * a - a + 4.0 * c * a * b + 9.0 * b - c - 6.0 * b * c + 3.0) / den;
        let zz = -2.0 * c1 * (-6.0 * c * a - a + 4.0 * c * a * b + 9.0 * c + 3.0 - b - 6.0 * b * c) / den;
        let xy = -4.0 * (2.0 * c - 3.0) * b1 * a1 / den;
        let xz = -4.0 * (2.0 * b - 3.0) * c1 * a1 / den;
        let yz = -4.0 * (2.0 * a - 3.0) * b1 * c1 / den;
        Ok(Metric3::new(xx, yy, zz, xy, xz, yz))
    }

    /// `det G = -(1/8) · poly / [(a-1)²(b-1)²(c-1)²(s-1)]`.
    pub fn det_closed(&self, theta: Theta) -> Result<f64> {
        self.require(theta)?;
        Ok(det_closed_unchecked(theta))
    }

    pub fn classify_domain(&self, theta: Theta, tol: f64) -> DomainClass {
        classify(theta, tol)
    }
}

pub(crate) fn det_closed_unchecked(theta: Theta) -> f64 {
    let Theta { a, b, c } = theta;
    let denom = (a - 1.0).powi(2) * (b - 1.0).powi(2) * (c - 1.0).powi(2) * (a + b + c - 1.0);
    -0.125 * degeneracy_polynomial(theta) / denom
}

/// Classification against the unit cube boundary, the line D and the
/// surface V.
pub fn classify(theta: Theta, tol: f64) -> DomainClass {
    let Theta { a, b, c } = theta;
    if !theta.is_finite() || a <= 1.0 || b <= 1.0 || c <= 1.0 {
        let below = if theta.is_finite() { 1.0 - a.min(b).min(c) } else { f64::INFINITY };
        return DomainClass { kind: DomainKind::OutsideDomain, distance: below.max(0.0) };
    }
    let dist_d = (b - 1.5).abs().max((c - 1.5).abs());
    if dist_d <= tol {
        return DomainClass { kind: DomainKind::OnD, distance: dist_d };
    }
    let dist_v = surface_v_a(b, c).map_or(f64::INFINITY, |av| (a - av).abs());
    if dist_v <= tol {
        return DomainClass { kind: DomainKind::OnV, distance: dist_v };
    }
    DomainClass { kind: DomainKind::Regular, distance: dist_d.min(dist_v) }
}

impl Manifold for StirlingModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Stirling
    }

    fn contains(&self, theta: Theta) -> bool {
        theta.is_finite() && theta.a > 1.0 && theta.b > 1.0 && theta.c > 1.0
    }

    fn potential(&self, theta: Theta) -> Result<f64> {
        self.require(theta)?;
        let Theta { a, b, c } = theta;
        let s = theta.sum();
        Ok((s - 0.5) * (s - 1.0).ln()
            + (0.5 - a) * (a - 1.0).ln()
            + (0.5 - b) * (b - 1.0).ln()
            + (0.5 - c) * (c - 1.0).ln()
            + self.k)
    }

    fn eta(&self, theta: Theta) -> Result<Eta> {
        self.require(theta)?;
        let log_s = (theta.sum() - 1.0).ln();
        Ok(Eta::from_array(theta.to_array().map(|v| log_s - (v - 1.0).ln() - 0.5 / (v - 1.0))))
    }

    fn metric(&self, theta: Theta) -> Result<Metric3> {
        self.require(theta)?;
        let shared = 1.0 / (theta.sum() - 1.0);
        let diag = theta.to_array().map(|v| -(v - 1.5) / (v - 1.0).powi(2));
        Ok(Metric3::from_diag_plus_constant(diag, shared))
    }

    /// Closed form
    /// `-Σ αᵢ/(2(αᵢ-1)) + ½ ln(s-1) - ½ Σ ln(αᵢ-1) - k`.
    fn dual_potential(&self, theta: Theta) -> Result<f64> {
        self.require(theta)?;
        let s = theta.sum();
        let mut psi = 0.5 * (s - 1.0).ln() - self.k;
        for v in theta.to_array() {
            psi -= v / (2.0 * (v - 1.0)) + 0.5 * (v - 1.0).ln();
        }
        Ok(psi)
    }

    fn default_guess(&self, target: Eta) -> Theta {
        Theta::from_array(target.to_array().map(|e| 1.0 + (-e).exp()))
    }
}
