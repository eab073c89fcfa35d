//! Hamiltonian structure of the flow.
//!
//! Along `η(t) = η₀ e^{-t}` the ratios `η₂/η₁` and `η₃/η₂` are constant.
//! With `P₁ = 1/η₁`, `Q₁ = η₂`, `P₁′ = 1/η₂`, `Q₁′ = η₃` their sum
//! `H = P₁Q₁ + P₁′Q₁′` generates the flow through the canonical Poisson
//! tensor, and the Lax matrix `L` built from the same ratios is isospectral.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{integrate_directed, Trajectory};
use crate::manifold::{Eta, Manifold, Theta};

/// Central-difference step for brackets and gradients.
pub const FD_STEP: f64 = 1e-6;

fn check_nonzero(eta: Eta) -> Result<()> {
    let scale = eta.norm_inf();
    let tiny = |v: f64| v.abs() <= f64::EPSILON * scale || v == 0.0;
    if !scale.is_finite() || tiny(eta.eta1) || tiny(eta.eta2) {
        return Err(Error::DegenerateEta);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalState {
    pub p1: f64,
    pub q1: f64,
    pub p1p: f64,
    pub q1p: f64,
}

impl CanonicalState {
    pub const fn new(p1: f64, q1: f64, p1p: f64, q1p: f64) -> Self {
        CanonicalState { p1, q1, p1p, q1p }
    }

    /// Ordered `(P₁, Q₁, P₁′, Q₁′)`.
    pub fn to_array(self) -> [f64; 4] {
        [self.p1, self.q1, self.p1p, self.q1p]
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        CanonicalState::new(v[0], v[1], v[2], v[3])
    }

    /// `P₁Q₁ + P₁′Q₁′`.
    pub fn hamiltonian(self) -> f64 {
        self.p1 * self.q1 + self.p1p * self.q1p
    }
}

pub fn to_canonical(eta: Eta) -> Result<CanonicalState> {
    check_nonzero(eta)?;
    Ok(CanonicalState::new(1.0 / eta.eta1, eta.eta2, 1.0 / eta.eta2, eta.eta3))
}

/// `H = η₂/η₁ + η₃/η₂`.
pub fn hamiltonian(eta: Eta) -> Result<f64> {
    check_nonzero(eta)?;
    Ok(eta.eta2 / eta.eta1 + eta.eta3 / eta.eta2)
}

/// The two prime integrals `(η₂/η₁, η₃/η₂)`.
pub fn first_integrals(eta: Eta) -> Result<[f64; 2]> {
    check_nonzero(eta)?;
    Ok([eta.eta2 / eta.eta1, eta.eta3 / eta.eta2])
}

/// Gradients of the prime integrals with respect to `η`, one per row.
pub fn first_integral_gradients(eta: Eta) -> Result<[[f64; 3]; 2]> {
    check_nonzero(eta)?;
    let Eta { eta1: x, eta2: y, eta3: z } = eta;
    Ok([[-y / (x * x), 1.0 / x, 0.0], [0.0, -z / (y * y), 1.0 / y]])
}

/// Numerical rank of the prime-integral gradients: the number of singular
/// values above `rel_tol` times the largest.
pub fn first_integral_rank(eta: Eta, rel_tol: f64) -> Result<usize> {
    let [u, v] = first_integral_gradients(eta)?;
    let dot = |p: &[f64; 3], q: &[f64; 3]| p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
    let (uu, uv, vv) = (dot(&u, &u), dot(&u, &v), dot(&v, &v));
    // singular values are the square roots of the Gram eigenvalues
    let mean = 0.5 * (uu + vv);
    let spread = (0.25 * (uu - vv).powi(2) + uv * uv).sqrt();
    let s_max = (mean + spread).sqrt();
    let s_min = ((uu * vv - uv * uv).max(0.0) / (mean + spread)).sqrt();
    Ok([s_max, s_min].iter().filter(|&&s| s > rel_tol * s_max).count())
}

/// `(Ṗ₁, Q̇₁, Ṗ₁′, Q̇₁′) = (∂H/∂Q₁, -∂H/∂P₁, ∂H/∂Q₁′, -∂H/∂P₁′)`.
pub fn hamilton_rhs(state: CanonicalState) -> CanonicalState {
    CanonicalState::new(state.p1, -state.q1, state.p1p, -state.q1p)
}

/// Gradient of `H = P₁Q₁ + P₁′Q₁′` in `(P₁, Q₁, P₁′, Q₁′)` order.
pub fn hamiltonian_gradient(state: CanonicalState) -> [f64; 4] {
    [state.q1, state.p1, state.q1p, state.p1p]
}

/// The constant canonical Poisson tensor on `(P₁, Q₁, P₁′, Q₁′)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonTensor4 {
    pub matrix: [[f64; 4]; 4],
}

impl Default for PoissonTensor4 {
    fn default() -> Self {
        Self::CANONICAL
    }
}

impl PoissonTensor4 {
    pub const CANONICAL: PoissonTensor4 = PoissonTensor4 {
        matrix: [
            [0.0, 1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0, 0.0],
        ],
    };

    pub fn apply(&self, v: [f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (i, row) in self.matrix.iter().enumerate() {
            out[i] = row.iter().zip(v).map(|(m, x)| m * x).sum();
        }
        out
    }

    /// `Σ ∧ᵢⱼ ∂ᵢf ∂ⱼg`.
    pub fn bracket(&self, grad_f: [f64; 4], grad_g: [f64; 4]) -> f64 {
        let mut acc = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                acc += self.matrix[i][j] * grad_f[i] * grad_g[j];
            }
        }
        acc
    }

    pub fn is_antisymmetric(&self) -> bool {
        (0..4).all(|i| (0..4).all(|j| self.matrix[i][j] == -self.matrix[j][i]))
    }
}

/// Central-difference gradient of `f` at `at` with step [`FD_STEP`].
///
/// The divisor is the distance between the perturbed points as actually
/// represented, so linear functions are differentiated without rounding
/// error from the step itself.
pub fn gradient_fd<F: Fn(CanonicalState) -> f64>(f: F, at: CanonicalState) -> [f64; 4] {
    let x = at.to_array();
    let mut g = [0.0; 4];
    for (i, gi) in g.iter_mut().enumerate() {
        let mut up = x;
        let mut down = x;
        up[i] += FD_STEP;
        down[i] -= FD_STEP;
        let span = up[i] - down[i];
        *gi = (f(CanonicalState::from_array(up)) - f(CanonicalState::from_array(down))) / span;
    }
    g
}

/// `{f, g}` under the canonical tensor, with gradients by central differences.
pub fn poisson_bracket<F, G>(f: F, g: G, at: CanonicalState) -> f64
where
    F: Fn(CanonicalState) -> f64,
    G: Fn(CanonicalState) -> f64,
{
    PoissonTensor4::CANONICAL.bracket(gradient_fd(f, at), gradient_fd(g, at))
}

/// `{f, g}` from supplied gradients.
pub fn poisson_bracket_with_gradients(grad_f: [f64; 4], grad_g: [f64; 4]) -> f64 {
    PoissonTensor4::CANONICAL.bracket(grad_f, grad_g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaxPair {
    pub l: [[f64; 3]; 3],
    pub n: [[f64; 3]; 3],
    pub ell: f64,
}

fn matmul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn frobenius(m: &[[f64; 3]; 3]) -> f64 {
    m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn lax_pair(eta: Eta, ell: f64) -> Result<LaxPair> {
    check_nonzero(eta)?;
    let ratio = eta.eta3 / eta.eta1;
    if ratio < 0.0 {
        return Err(Error::NegativeRatio(ratio));
    }
    let off = ratio.sqrt();
    let l = [[eta.eta2 / eta.eta1, 0.0, off], [0.0, 0.0, 0.0], [off, 0.0, eta.eta3 / eta.eta2]];
    let n = [[ell, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, ell]];
    Ok(LaxPair { l, n, ell })
}

impl LaxPair {
    pub fn trace(&self) -> f64 {
        self.l[0][0] + self.l[1][1] + self.l[2][2]
    }

    /// `[L, N] = LN - NL`.
    pub fn commutator(&self) -> [[f64; 3]; 3] {
        let ln = matmul(&self.l, &self.n);
        let nl = matmul(&self.n, &self.l);
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = ln[i][j] - nl[i][j];
            }
        }
        out
    }

    pub fn commutator_norm(&self) -> f64 {
        frobenius(&self.commutator())
    }

    /// `‖L - other.L‖_F`.
    pub fn l_distance(&self, other: &LaxPair) -> f64 {
        let mut d = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                d[i][j] = self.l[i][j] - other.l[i][j];
            }
        }
        frobenius(&d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaxResidual {
    /// `max_t ‖L(t) - L(0)‖_F`.
    pub l_drift: f64,
    /// `max_t |trace L(t) - H(t)|`.
    pub trace_gap: f64,
    /// `max_t ‖[L(t), N]‖_F`.
    pub commutator: f64,
}

pub fn lax_residual(trajectory: &Trajectory, ell: f64) -> Result<LaxResidual> {
    let first = trajectory.samples.first().ok_or_else(|| Error::Domain("empty trajectory".into()))?;
    let l0 = lax_pair(first.eta, ell)?;
    let mut out = LaxResidual { l_drift: 0.0, trace_gap: 0.0, commutator: 0.0 };
    for s in &trajectory.samples {
        let l = lax_pair(s.eta, ell)?;
        out.l_drift = out.l_drift.max(l.l_distance(&l0));
        out.trace_gap = out.trace_gap.max((l.trace() - hamiltonian(s.eta)?).abs());
        out.commutator = out.commutator.max(l.commutator_norm());
    }
    Ok(out)
}

/// Compares `d/dt (P₁, Q₁, P₁′, Q₁′)` along the flow through `theta` with
/// [`hamilton_rhs`]. The derivative is a central difference over short
/// forward and backward integrations of length `h`. Returns
/// `‖fd - rhs‖∞ / ‖rhs‖∞`.
pub fn canonical_velocity_mismatch<M: Manifold + ?Sized>(model: &M, theta: Theta, h: f64) -> Result<f64> {
    let (rtol, atol) = (1e-13, 1e-15);
    let fwd = integrate_directed(model, theta, h, 1.0, rtol, atol)?;
    let bwd = integrate_directed(model, theta, h, -1.0, rtol, atol)?;
    if !fwd.reached_end() || !bwd.reached_end() {
        return Err(Error::SingularMetric { a: theta.a, b: theta.b, c: theta.c });
    }
    let up = to_canonical(fwd.last().eta)?.to_array();
    let down = to_canonical(bwd.last().eta)?.to_array();
    let expected = hamilton_rhs(to_canonical(model.eta(theta)?)?).to_array();
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..4 {
        let fd = (up[i] - down[i]) / (2.0 * h);
        err = err.max((fd - expected[i]).abs());
        scale = scale.max(expected[i].abs());
    }
    Ok(err / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ExactModel;
    use crate::flow::integrate;
    use crate::stirling::StirlingModel;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn eta(a: f64, b: f64, c: f64) -> Eta {
        Eta::from_array([a, b, c])
    }

    fn th(a: f64, b: f64, c: f64) -> Theta {
        Theta::new(a, b, c).unwrap()
    }

    #[test]
    fn canonical_examples() {
        let v = 1.1094379124;
        let s = to_canonical(eta(v, v, v)).unwrap();
        assert_abs_diff_eq!(s.p1, 0.9013573349, epsilon = 1e-10);
        assert_abs_diff_eq!(s.q1, v, epsilon = 1e-15);
        assert_abs_diff_eq!(s.p1p, 0.9013573349, epsilon = 1e-10);
        assert_abs_diff_eq!(s.q1p, v, epsilon = 1e-15);

        let e = eta(-1.7178571429, -1.2178571429, -0.8845238095);
        let s = to_canonical(e).unwrap();
        assert_abs_diff_eq!(s.p1, -0.5821205822, epsilon = 1e-10);
        assert_abs_diff_eq!(s.q1, -1.2178571429, epsilon = 1e-15);
        assert_abs_diff_eq!(s.p1p, -0.8211143695, epsilon = 1e-10);
        assert_abs_diff_eq!(s.q1p, -0.8845238095, epsilon = 1e-15);
        assert_abs_diff_eq!(s.hamiltonian(), hamiltonian(e).unwrap(), epsilon = 1e-15);

        assert_eq!(to_canonical(eta(0.0, 1.0, 1.0)), Err(Error::DegenerateEta));
        assert_eq!(to_canonical(eta(1.0, 0.0, 1.0)), Err(Error::DegenerateEta));
    }

    #[test]
    fn hamiltonian_examples() {
        for c in [1.0, -0.3, 7.5] {
            assert_eq!(hamiltonian(eta(c, c, c)).unwrap(), 2.0);
        }
        let e = ExactModel.eta(th(2.0, 3.0, 4.0)).unwrap();
        let h = hamiltonian(e).unwrap();
        assert_abs_diff_eq!(h, 1.43523, epsilon = 1e-4);
        // harmonic-number oracle: ψ(n) = H_{n-1} - γ, so γ cancels
        let harm = |n: usize| (1..n).map(|k| 1.0 / k as f64).sum::<f64>();
        let e_or = [2, 3, 4].map(|n| harm(n) - harm(9));
        assert_abs_diff_eq!(h, e_or[1] / e_or[0] + e_or[2] / e_or[1], epsilon = 1e-13);
        for lambda in [0.5, -3.0] {
            assert_abs_diff_eq!(hamiltonian(e.scale(lambda)).unwrap(), h, epsilon = 1e-14);
        }
    }

    #[test]
    fn hamilton_rhs_examples() {
        assert_eq!(hamilton_rhs(CanonicalState::new(1.0, 2.0, 3.0, 4.0)).to_array(), [1.0, -2.0, 3.0, -4.0]);
        assert_eq!(hamilton_rhs(CanonicalState::new(0.0, 0.0, 0.0, 0.0)).to_array(), [0.0; 4]);
        let s = CanonicalState::new(0.7, -1.3, 2.1, 0.4);
        let v = hamilton_rhs(s);
        // H is quadratic, so the central difference is exact up to rounding
        let h = 1e-3;
        let dh = (CanonicalState::from_array([0, 1, 2, 3].map(|i| s.to_array()[i] + h * v.to_array()[i])).hamiltonian()
            - CanonicalState::from_array([0, 1, 2, 3].map(|i| s.to_array()[i] - h * v.to_array()[i])).hamiltonian())
            / (2.0 * h);
        assert!(dh.abs() <= 1e-12, "{dh}");
        assert_eq!(PoissonTensor4::CANONICAL.apply(hamiltonian_gradient(s)), v.to_array());
    }

    #[test]
    fn bracket_examples() {
        let at = CanonicalState::new(0.3, -2.0, 1.7, 0.9);
        assert_abs_diff_eq!(poisson_bracket(|s| s.p1, |s| s.q1, at), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(poisson_bracket(|s| s.q1, |s| s.p1, at), -1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(poisson_bracket(|s| s.p1, |s| s.p1p, at), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(poisson_bracket(|s| s.p1p, |s| s.q1p, at), 1.0, epsilon = 1e-10);
        let h = |s: CanonicalState| s.hamiltonian();
        assert_abs_diff_eq!(poisson_bracket(h, h, at), 0.0, epsilon = 1e-10);
        assert!(PoissonTensor4::CANONICAL.is_antisymmetric());
        assert_eq!(PoissonTensor4::default(), PoissonTensor4::CANONICAL);
    }

    #[test]
    fn lax_examples() {
        let p = lax_pair(eta(-0.4, -0.4, -0.4), 1.0).unwrap();
        assert_eq!(p.l[0][0], 1.0);
        assert_eq!(p.l[2][2], 1.0);
        assert_eq!(p.l[0][2], 1.0);
        assert_eq!(p.trace(), 2.0);

        let e = ExactModel.eta(th(2.0, 3.0, 4.0)).unwrap();
        let p = lax_pair(e, 1.0).unwrap();
        assert_abs_diff_eq!(p.l[0][0], 0.708938, epsilon = 1e-5);
        assert_abs_diff_eq!(p.l[2][2], 0.726295, epsilon = 1e-5);
        assert_abs_diff_eq!(p.l[0][2], 0.717565, epsilon = 1e-5);
        assert_eq!(p.l[0][2], p.l[2][0]);
        for (i, j) in [(0, 1), (1, 0), (1, 1), (1, 2), (2, 1)] {
            assert_eq!(p.l[i][j], 0.0);
        }
        assert_eq!(p.trace() - hamiltonian(e).unwrap(), 0.0);

        assert!(matches!(lax_pair(eta(1.0, 1.0, -1.0), 1.0), Err(Error::NegativeRatio(r)) if r == -1.0));
        assert_eq!(lax_pair(eta(0.0, 1.0, 1.0), 1.0), Err(Error::DegenerateEta));
    }

    #[test]
    fn commutator_is_exactly_zero() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let sign: f64 = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let e = eta(
                sign * rng.random_range(0.01..10.0),
                rng.random_range(-10.0..10.0),
                sign * rng.random_range(0.0..10.0),
            );
            let ell = rng.random_range(-100.0..100.0);
            let Ok(p) = lax_pair(e, ell) else { continue };
            assert_eq!(p.commutator(), [[0.0; 3]; 3]);
            assert_eq!(p.trace() - hamiltonian(e).unwrap(), 0.0);
        }
    }

    #[test]
    fn lax_residual_on_single_sample_is_zero() {
        let traj = integrate(&ExactModel, th(2.0, 3.0, 4.0), 0.0, 1e-9, 1e-12).unwrap();
        let r = lax_residual(&traj, 1.0).unwrap();
        assert_eq!(r, LaxResidual { l_drift: 0.0, trace_gap: 0.0, commutator: 0.0 });
    }

    #[test]
    fn lax_residual_along_stirling_flow() {
        let traj = integrate(&StirlingModel::DEFAULT, th(2.5, 3.0, 2.0), 2.0, 1e-10, 1e-12).unwrap();
        let r = lax_residual(&traj, 1.0).unwrap();
        assert!(r.l_drift <= 1e-7, "{r:?}");
        assert_eq!(r.trace_gap, 0.0);
        assert_eq!(r.commutator, 0.0);
    }

    #[test]
    fn prime_integrals_are_independent() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let e = eta(rng.random_range(-3.0..-0.1), rng.random_range(-3.0..-0.1), rng.random_range(-3.0..-0.1));
            assert_eq!(first_integral_rank(e, 1e-10).unwrap(), 2);
        }
        let g = first_integral_gradients(eta(-1.0, -2.0, -3.0)).unwrap();
        let fd = |i: usize, j: usize| {
            let mut up = [-1.0, -2.0, -3.0];
            let mut down = up;
            up[j] += 1e-6;
            down[j] -= 1e-6;
            (first_integrals(Eta::from_array(up)).unwrap()[i] - first_integrals(Eta::from_array(down)).unwrap()[i]) / 2e-6
        };
        for i in 0..2 {
            for j in 0..3 {
                assert_abs_diff_eq!(g[i][j], fd(i, j), epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn canonical_velocities_match_hamilton_rhs() {
        let s = StirlingModel::DEFAULT;
        for t in [th(2.5, 3.0, 2.0), th(3.5, 2.2, 4.0)] {
            let m = canonical_velocity_mismatch(&s, t, 1e-4).unwrap();
            assert!(m <= 1e-5, "{m}");
        }
        let m = canonical_velocity_mismatch(&ExactModel, th(2.0, 3.0, 4.0), 1e-4).unwrap();
        assert!(m <= 1e-5, "{m}");
    }

    proptest! {
        #[test]
        fn bracket_antisymmetric_and_leibniz(
            x in proptest::array::uniform4(-2.0f64..2.0),
            c in proptest::array::uniform4(-1.0f64..1.0),
        ) {
            let at = CanonicalState::from_array(x);
            let f = |s: CanonicalState| c[0] * s.p1 * s.q1 + c[1] * s.q1p * s.q1p;
            let g = |s: CanonicalState| c[2] * s.p1 * s.p1p + s.q1;
            let k = |s: CanonicalState| c[3] * s.q1 * s.q1p + s.p1;
            let fg = poisson_bracket(f, g, at);
            prop_assert!((fg + poisson_bracket(g, f, at)).abs() <= 1e-10);
            // {f, gk} = {f, g}k + g{f, k}
            let lhs = poisson_bracket(f, |s| g(s) * k(s), at);
            let rhs = fg * k(at) + g(at) * poisson_bracket(f, k, at);
            prop_assert!((lhs - rhs).abs() <= 1e-8, "{lhs} vs {rhs}");
        }

        #[test]
        fn canonical_hamiltonian_matches(e in proptest::array::uniform3(-5.0f64..-0.05)) {
            let e = Eta::from_array(e);
            let s = to_canonical(e).unwrap();
            prop_assert!((s.hamiltonian() - hamiltonian(e).unwrap()).abs() <= 1e-13 * hamiltonian(e).unwrap().abs().max(1.0));
        }
    }
}
