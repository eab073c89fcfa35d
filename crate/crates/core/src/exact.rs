//! The bivariate beta (three-component Dirichlet) family as an exponential
//! family in its natural parameters `(a, b, c)`.
//!
//! The sufficient statistics are `(ln x₁, ln x₂, ln(1 - x₁ - x₂))` and the
//! log-normalizer is `Φ = ln Γ(a) + ln Γ(b) + ln Γ(c) - ln Γ(a + b + c)`.
//! Its gradient gives the dual coordinates and its Hessian the Fisher
//! metric, both written through digamma/trigamma.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{Eta, Manifold, Metric3, ModelKind, Theta};
use crate::specfun::{digamma_unchecked, ln_gamma_unchecked, trigamma_unchecked};

/// Draws per independently seeded RNG stream. Fixed so that the sample
/// sequence does not depend on the number of worker threads.
const SAMPLE_CHUNK: usize = 8192;

/// A point `(x₁, x₂)` of the open simplex `x₁, x₂ > 0, x₁ + x₂ < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub x1: f64,
    pub x2: f64,
}

impl SamplePoint {
    pub fn new(x1: f64, x2: f64) -> Result<Self> {
        let p = Self { x1, x2 };
        if p.in_simplex() {
            Ok(p)
        } else {
            Err(Error::Domain(format!("({x1}, {x2}) is not in the open simplex")))
        }
    }

    pub fn in_simplex(&self) -> bool {
        self.x1 > 0.0 && self.x2 > 0.0 && self.x1 + self.x2 < 1.0 && self.x1.is_finite() && self.x2.is_finite()
    }
}

/// Monte-Carlo estimate of the Fisher matrix with per-entry standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherEstimate {
    pub covariance: Metric3,
    pub standard_error: Metric3,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExactModel;

impl ExactModel {
    pub fn log_pdf(&self, theta: Theta, x: SamplePoint) -> Result<f64> {
        self.check_domain(theta)?;
        if !x.in_simplex() {
            return Err(Error::Domain(format!("({}, {}) is not in the open simplex", x.x1, x.x2)));
        }
        let x3 = 1.0 - x.x1 - x.x2;
        let log_b = self.potential(theta)?;
        Ok((theta.a - 1.0) * x.x1.ln() + (theta.b - 1.0) * x.x2.ln() + (theta.c - 1.0) * x3.ln() - log_b)
    }

    /// `n` Dirichlet(a, b, c) draws, projected onto `(x₁, x₂)`.
    pub fn sample(&self, theta: Theta, seed: u64, n: usize) -> Result<Vec<SamplePoint>> {
        Ok(self
            .sample_proportions(theta, seed, n)?
            .into_iter()
            .map(|p| SamplePoint { x1: p[0], x2: p[1] })
            .collect())
    }

    /// Full three-component draws. Chunk `k` uses stream `k` of a ChaCha8
    /// generator keyed by `seed`, so results are reproducible under any
    /// degree of parallelism.
    pub fn sample_proportions(&self, theta: Theta, seed: u64, n: usize) -> Result<Vec<[f64; 3]>> {
        self.check_domain(theta)?;
        if n == 0 {
            return Err(Error::Domain("sample count must be at least 1".into()));
        }
        let gammas = [theta.a, theta.b, theta.c]
            .map(|shape| Gamma::new(shape, 1.0).expect("shape validated positive"));
        let chunks = n.div_ceil(SAMPLE_CHUNK);
        let out: Vec<Vec<[f64; 3]>> = (0..chunks)
            .into_par_iter()
            .map(|chunk| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(chunk as u64);
                let len = SAMPLE_CHUNK.min(n - chunk * SAMPLE_CHUNK);
                (0..len).map(|_| draw_dirichlet(&gammas, &mut rng)).collect()
            })
            .collect();
        Ok(out.into_iter().flatten().collect())
    }

    /// Sample covariance of the sufficient statistics; for an exponential
    /// family this estimates the Fisher information.
    pub fn fisher_mc(&self, theta: Theta, seed: u64, n: usize) -> Result<Metric3> {
        Ok(self.fisher_mc_estimate(theta, seed, n)?.covariance)
    }

    /// As [`ExactModel::fisher_mc`], plus standard errors from the sample
    /// fourth moments: `se_ij² = (E[(Tᵢ-μᵢ)²(Tⱼ-μⱼ)²] - cov_ij²) / n`.
    pub fn fisher_mc_estimate(&self, theta: Theta, seed: u64, n: usize) -> Result<FisherEstimate> {
        if n < 1000 {
            return Err(Error::Domain(format!("fisher_mc needs at least 1000 samples, got {n}")));
        }
        let stats: Vec<[f64; 3]> = self
            .sample_proportions(theta, seed, n)?
            .into_iter()
            .map(|p| p.map(f64::ln))
            .collect();
        let nf = n as f64;
        let mut mean = [0.0; 3];
        for s in &stats {
            for k in 0..3 {
                mean[k] += s[k];
            }
        }
        mean = mean.map(|m| m / nf);

        const PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
        let mut second = [0.0; 6];
        let mut fourth = [0.0; 6];
        for s in &stats {
            let d = [s[0] - mean[0], s[1] - mean[1], s[2] - mean[2]];
            for (slot, &(i, j)) in PAIRS.iter().enumerate() {
                let prod = d[i] * d[j];
                second[slot] += prod;
                fourth[slot] += prod * prod;
            }
        }
        let cov = second.map(|v| v / (nf - 1.0));
        let mut se = [0.0; 6];
        for k in 0..6 {
            se[k] = ((fourth[k] / nf - cov[k] * cov[k]).max(0.0) / nf).sqrt();
        }
        Ok(FisherEstimate {
            covariance: Metric3::new(cov[0], cov[1], cov[2], cov[3], cov[4], cov[5]),
            standard_error: Metric3::new(se[0], se[1], se[2], se[3], se[4], se[5]),
            samples: n,
        })
    }
}

fn draw_dirichlet(gammas: &[Gamma<f64>; 3], rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let g = [gammas[0].sample(rng), gammas[1].sample(rng), gammas[2].sample(rng)];
        let total = g[0] + g[1] + g[2];
        let p = g.map(|v| v / total);
        // Tiny shapes can underflow a component to zero; those draws fall
        // on the boundary of the simplex and are redrawn.
        if p.iter().all(|&v| v > 0.0) && p[0] + p[1] < 1.0 && total.is_finite() {
            return p;
        }
    }
}

impl Manifold for ExactModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Exact
    }

    fn contains(&self, theta: Theta) -> bool {
        theta.is_finite() && theta.a > 0.0 && theta.b > 0.0 && theta.c > 0.0
    }

    fn potential(&self, theta: Theta) -> Result<f64> {
        self.check_domain(theta)?;
        Ok(ln_gamma_unchecked(theta.a) + ln_gamma_unchecked(theta.b) + ln_gamma_unchecked(theta.c)
            - ln_gamma_unchecked(theta.sum()))
    }

    fn eta(&self, theta: Theta) -> Result<Eta> {
        self.check_domain(theta)?;
        let total = digamma_unchecked(theta.sum());
        Ok(Eta::from_array(theta.to_array().map(|v| digamma_unchecked(v) - total)))
    }

    fn metric(&self, theta: Theta) -> Result<Metric3> {
        self.check_domain(theta)?;
        let shared = -trigamma_unchecked(theta.sum());
        Ok(Metric3::from_diag_plus_constant(theta.to_array().map(trigamma_unchecked), shared))
    }

    fn dual_potential(&self, theta: Theta) -> Result<f64> {
        let eta = self.eta(theta)?;
        Ok(theta.dot(eta) - self.potential(theta)?)
    }

    fn default_guess(&self, _target: Eta) -> Theta {
        Theta { a: 2.0, b: 2.0, c: 2.0 }
    }

    /// `E[ln xᵢ] = ηᵢ` and Jensen give `Σ exp(ηᵢ) < Σ E[xᵢ] = 1`; every
    /// such point is attained.
    fn dual_domain_contains(&self, eta: Eta) -> bool {
        let arr = eta.to_array();
        arr.iter().all(|v| v.is_finite()) && arr.iter().map(|v| v.exp()).sum::<f64>() < 1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::oracle;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    const M: ExactModel = ExactModel;

    fn th(a: f64, b: f64, c: f64) -> Theta {
        Theta::new(a, b, c).unwrap()
    }

    /// Digamma differences at integers via harmonic numbers:
    /// ψ(n) - ψ(m) = Σ_{k=m}^{n-1} 1/k.
    fn harmonic_span(m: u32, n: u32) -> f64 {
        (m..n).map(|k| 1.0 / k as f64).sum()
    }

    /// ψ′(n) for integer n via π²/6 - Σ_{k<n} 1/k².
    fn trigamma_int(n: u32) -> f64 {
        std::f64::consts::PI.powi(2) / 6.0 - (1..n).map(|k| 1.0 / (k as f64).powi(2)).sum::<f64>()
    }

    #[test]
    fn log_pdf_examples() {
        let x = SamplePoint::new(0.3, 0.3).unwrap();
        assert_abs_diff_eq!(M.log_pdf(th(1.0, 1.0, 1.0), x).unwrap(), LN_2, epsilon = 1e-13);
        let x = SamplePoint::new(0.25, 0.25).unwrap();
        assert_abs_diff_eq!(M.log_pdf(th(2.0, 2.0, 2.0), x).unwrap(), 3.75f64.ln(), epsilon = 1e-13);
        let outside = SamplePoint { x1: 0.6, x2: 0.5 };
        assert!(matches!(M.log_pdf(th(2.0, 2.0, 2.0), outside), Err(Error::Domain(_))));
        assert!(SamplePoint::new(0.6, 0.5).is_err());
        assert!(M.log_pdf(th(-1.0, 2.0, 2.0), x).is_err());
    }

    #[test]
    fn potential_examples() {
        assert_abs_diff_eq!(M.potential(th(2.0, 2.0, 2.0)).unwrap(), -(120f64.ln()), epsilon = 1e-13);
        assert_abs_diff_eq!(M.potential(th(1.0, 1.0, 1.0)).unwrap(), -LN_2, epsilon = 1e-13);
        assert!(matches!(M.potential(th(0.0, 1.0, 1.0)), Err(Error::OutsideDomain(_))));
    }

    #[test]
    fn eta_examples() {
        let e = M.eta(th(2.0, 2.0, 2.0)).unwrap();
        for v in e.to_array() {
            assert_abs_diff_eq!(v, -77.0 / 60.0, epsilon = 1e-13);
        }
        let e = M.eta(th(2.0, 3.0, 4.0)).unwrap();
        assert_abs_diff_eq!(e.eta1, -harmonic_span(2, 9), epsilon = 1e-13);
        assert_abs_diff_eq!(e.eta2, -harmonic_span(3, 9), epsilon = 1e-13);
        assert_abs_diff_eq!(e.eta3, -harmonic_span(4, 9), epsilon = 1e-13);
        assert_abs_diff_eq!(e.eta1, -1.7178571429, epsilon = 1e-10);
        assert_abs_diff_eq!(e.eta2, -1.2178571429, epsilon = 1e-10);
        assert_abs_diff_eq!(e.eta3, -0.8845238095, epsilon = 1e-10);
    }

    #[test]
    fn metric_examples() {
        let g = M.metric(th(2.0, 2.0, 2.0)).unwrap();
        let diag = 0.25 + 1.0 / 9.0 + 1.0 / 16.0 + 1.0 / 25.0;
        assert_abs_diff_eq!(g.xx, diag, epsilon = 1e-13);
        assert_abs_diff_eq!(g.xx, 0.4636111111, epsilon = 1e-10);
        assert_abs_diff_eq!(g.xy, -trigamma_int(6), epsilon = 1e-13);
        assert_abs_diff_eq!(g.xy, -0.1813229557, epsilon = 1e-10);

        let g = M.metric(th(2.0, 3.0, 4.0)).unwrap();
        let g11 = trigamma_int(2) - trigamma_int(9);
        assert_abs_diff_eq!(g.xx, g11, epsilon = 1e-13);
        assert_abs_diff_eq!(g.xx, 0.5274220521541952, epsilon = 1e-13);
        assert_abs_diff_eq!(g.yz, -trigamma_int(9), epsilon = 1e-13);
    }

    fn fd_jacobian_of_eta(model: &dyn Manifold, t: Theta, h: f64) -> [[f64; 3]; 3] {
        let mut jac = [[0.0; 3]; 3];
        for j in 0..3 {
            let mut plus = t.to_array();
            let mut minus = t.to_array();
            plus[j] += h;
            minus[j] -= h;
            let ep = model.eta(Theta::from_array(plus)).unwrap().to_array();
            let em = model.eta(Theta::from_array(minus)).unwrap().to_array();
            for i in 0..3 {
                jac[i][j] = (ep[i] - em[i]) / (2.0 * h);
            }
        }
        jac
    }

    #[test]
    fn metric_is_jacobian_of_eta_at_234() {
        let t = th(2.0, 3.0, 4.0);
        let jac = fd_jacobian_of_eta(&M, t, 1e-5);
        let g = M.metric(t).unwrap().to_rows();
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(jac[i][j], g[i][j], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn grid_properties() {
        // 10 x 10 x 10 grid over [0.2, 20]³
        let axis: Vec<f64> = (0..10).map(|i| 0.2 + i as f64 * (19.8 / 9.0)).collect();
        for &a in &axis {
            for &b in &axis {
                for &c in &axis {
                    let t = th(a, b, c);
                    let g = M.metric(t).unwrap();
                    let minors = g.leading_minors();
                    assert!(minors.iter().all(|&m| m > 0.0), "not PD at {t:?}: {minors:?}");

                    let h = 1e-5;
                    let jac = fd_jacobian_of_eta(&M, t, h);
                    let rows = g.to_rows();
                    for i in 0..3 {
                        for j in 0..3 {
                            assert!((jac[i][j] - rows[i][j]).abs() <= 1e-6, "Hessian at {t:?}");
                        }
                    }
                    let eta = M.eta(t).unwrap().to_array();
                    for j in 0..3 {
                        let mut plus = t.to_array();
                        let mut minus = t.to_array();
                        plus[j] += h;
                        minus[j] -= h;
                        let d = (M.potential(Theta::from_array(plus)).unwrap()
                            - M.potential(Theta::from_array(minus)).unwrap())
                            / (2.0 * h);
                        assert!((d - eta[j]).abs() <= 1e-6, "gradient at {t:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn dual_potential_examples() {
        assert_abs_diff_eq!(
            M.dual_potential(th(2.0, 2.0, 2.0)).unwrap(),
            6.0 * (-77.0 / 60.0) + 120f64.ln(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(M.dual_potential(th(2.0, 2.0, 2.0)).unwrap(), -2.9125082572, epsilon = 1e-9);
        assert_abs_diff_eq!(M.dual_potential(th(1.0, 1.0, 1.0)).unwrap(), -4.5 + LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(M.dual_potential(th(1.0, 1.0, 1.0)).unwrap(), -3.8068528194, epsilon = 1e-9);
    }

    #[test]
    fn agrees_with_oracle_special_functions() {
        let t = th(0.7, 2.3, 5.1);
        let s = t.sum();
        let phi = oracle::ln_gamma(0.7) + oracle::ln_gamma(2.3) + oracle::ln_gamma(5.1) - oracle::ln_gamma(s);
        assert_abs_diff_eq!(M.potential(t).unwrap(), phi, epsilon = 1e-10);
        let e = M.eta(t).unwrap();
        assert_abs_diff_eq!(e.eta1, oracle::digamma(0.7) - oracle::digamma(s), epsilon = 1e-10);
        let g = M.metric(t).unwrap();
        assert_abs_diff_eq!(g.yy, oracle::trigamma(2.3) - oracle::trigamma(s), epsilon = 1e-10);
    }

    #[test]
    fn samples_in_simplex_and_deterministic() {
        let t = th(0.3, 2.0, 0.5);
        let a = M.sample(t, 3, 20_000).unwrap();
        assert!(a.iter().all(SamplePoint::in_simplex));
        let b = M.sample(t, 3, 20_000).unwrap();
        assert_eq!(a[0], b[0]);
        assert_eq!(a, b);
        let c = M.sample(t, 4, 10).unwrap();
        assert_ne!(a[0], c[0]);
        assert!(M.sample(t, 3, 0).is_err());
    }

    #[test]
    fn sample_is_independent_of_thread_count() {
        let t = th(2.0, 3.0, 4.0);
        let reference = M.sample(t, 9, 30_000).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let serial = pool.install(|| M.sample(t, 9, 30_000).unwrap());
        assert_eq!(reference, serial);
    }

    #[test]
    fn sample_mean_matches_dirichlet_mean() {
        let t = th(2.0, 3.0, 4.0);
        let n = 100_000;
        let xs = M.sample(t, 1, n).unwrap();
        let mean = xs.iter().map(|p| p.x1).sum::<f64>() / n as f64;
        // Var(x₁) = α₁(s - α₁) / (s²(s + 1))
        let var = 2.0 * 7.0 / (81.0 * 10.0);
        let se = (var / n as f64).sqrt();
        assert!((mean - 2.0 / 9.0).abs() <= 3.0 * se, "mean {mean}");
    }

    #[test]
    fn fisher_mc_matches_trigamma_metric() {
        let t = th(2.0, 3.0, 4.0);
        let est = M.fisher_mc_estimate(t, 0, 200_000).unwrap();
        let exact = M.metric(t).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let err = (est.covariance.get(i, j) - exact.get(i, j)).abs();
                assert!(err <= 5.0 * est.standard_error.get(i, j), "entry ({i},{j}) off by {err}");
            }
        }
        // symmetric by construction
        let rows = est.covariance.to_rows();
        assert_eq!(rows[0][1], rows[1][0]);
        assert!(M.fisher_mc(t, 0, 999).is_err());
    }

    #[test]
    fn fisher_mc_error_shrinks_like_inverse_sqrt_n() {
        let t = th(2.0, 3.0, 4.0);
        let exact = M.metric(t).unwrap();
        // Average over seeds so the ratio reflects the rate, not one draw.
        let mean_err = |n: usize| -> f64 {
            (0..24u64)
                .map(|seed| M.fisher_mc(t, 1000 + seed, n).unwrap().max_abs_diff(&exact))
                .sum::<f64>()
                / 24.0
        };
        let ratio = mean_err(16_000) / mean_err(4_000);
        assert!((0.3..=0.8).contains(&ratio), "ratio {ratio}");
    }

    proptest! {
        #[test]
        fn potential_is_symmetric_in_a_b(a in 0.05f64..30.0, b in 0.05f64..30.0, c in 0.05f64..30.0) {
            let p1 = M.potential(th(a, b, c)).unwrap();
            let p2 = M.potential(th(b, a, c)).unwrap();
            prop_assert!((p1 - p2).abs() <= 1e-12 * p1.abs().max(1.0));
        }

        #[test]
        fn eta_is_strictly_negative(a in 0.01f64..200.0, b in 0.01f64..200.0, c in 0.01f64..200.0) {
            let e = M.eta(th(a, b, c)).unwrap();
            prop_assert!(e.to_array().iter().all(|&v| v < 0.0));
        }

        #[test]
        fn legendre_identity(a in 0.1f64..20.0, b in 0.1f64..20.0, c in 0.1f64..20.0) {
            let t = th(a, b, c);
            let r = M.dual_potential(t).unwrap() + M.potential(t).unwrap() - t.dot(M.eta(t).unwrap());
            prop_assert!(r.abs() <= 1e-12 * (1.0 + t.dot(M.eta(t).unwrap()).abs()));
        }
    }
}
