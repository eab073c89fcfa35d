//! Coordinate types, the symmetric 3×3 metric and the [`Manifold`]
//! interface shared by both models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameter point `(a, b, c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Theta {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if a.is_finite() && b.is_finite() && c.is_finite() {
            Ok(Self { a, b, c })
        } else {
            Err(Error::Domain(format!("non-finite parameter ({a}, {b}, {c})")))
        }
    }

    #[inline]
    pub fn to_array(self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }

    #[inline]
    pub fn from_array(v: [f64; 3]) -> Self {
        Self { a: v[0], b: v[1], c: v[2] }
    }

    #[inline]
    pub fn sum(self) -> f64 {
        self.a + self.b + self.c
    }

    pub fn is_finite(self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite()
    }

    pub fn dot(self, eta: Eta) -> f64 {
        self.a * eta.eta1 + self.b * eta.eta2 + self.c * eta.eta3
    }
}

/// Dual coordinates `(η₁, η₂, η₃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eta {
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
}

impl Eta {
    pub fn new(eta1: f64, eta2: f64, eta3: f64) -> Result<Self> {
        if eta1.is_finite() && eta2.is_finite() && eta3.is_finite() {
            Ok(Self { eta1, eta2, eta3 })
        } else {
            Err(Error::Domain(format!("non-finite dual coordinate ({eta1}, {eta2}, {eta3})")))
        }
    }

    #[inline]
    pub fn to_array(self) -> [f64; 3] {
        [self.eta1, self.eta2, self.eta3]
    }

    #[inline]
    pub fn from_array(v: [f64; 3]) -> Self {
        Self { eta1: v[0], eta2: v[1], eta3: v[2] }
    }

    pub fn scale(self, k: f64) -> Self {
        Self::from_array(self.to_array().map(|v| v * k))
    }

    pub fn norm_inf(self) -> f64 {
        self.to_array().iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Symmetric 3×3 matrix. Off-diagonal entries are stored once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric3 {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub xy: f64,
    pub xz: f64,
    pub yz: f64,
}

impl Metric3 {
    pub const IDENTITY: Metric3 = Metric3 { xx: 1.0, yy: 1.0, zz: 1.0, xy: 0.0, xz: 0.0, yz: 0.0 };

    pub fn new(xx: f64, yy: f64, zz: f64, xy: f64, xz: f64, yz: f64) -> Self {
        Self { xx, yy, zz, xy, xz, yz }
    }

    /// `diag(d) + shared · 𝟙𝟙ᵀ`: the pattern both model metrics follow.
    pub fn from_diag_plus_constant(diag: [f64; 3], shared: f64) -> Self {
        Self {
            xx: diag[0] + shared,
            yy: diag[1] + shared,
            zz: diag[2] + shared,
            xy: shared,
            xz: shared,
            yz: shared,
        }
    }

    /// Symmetric part of a full matrix; fails if the input is not
    /// symmetric to within `tol` (absolute).
    pub fn from_rows(rows: [[f64; 3]; 3], tol: f64) -> Result<Self> {
        let asym = (rows[0][1] - rows[1][0])
            .abs()
            .max((rows[0][2] - rows[2][0]).abs())
            .max((rows[1][2] - rows[2][1]).abs());
        if asym > tol {
            return Err(Error::Domain(format!("matrix is not symmetric (|A - Aᵀ| = {asym:e})")));
        }
        Ok(Self {
            xx: rows[0][0],
            yy: rows[1][1],
            zz: rows[2][2],
            xy: 0.5 * (rows[0][1] + rows[1][0]),
            xz: 0.5 * (rows[0][2] + rows[2][0]),
            yz: 0.5 * (rows[1][2] + rows[2][1]),
        })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i.min(j), i.max(j)) {
            (0, 0) => self.xx,
            (1, 1) => self.yy,
            (2, 2) => self.zz,
            (0, 1) => self.xy,
            (0, 2) => self.xz,
            (1, 2) => self.yz,
            _ => panic!("index ({i}, {j}) out of range for a 3x3 matrix"),
        }
    }

    pub fn to_rows(&self) -> [[f64; 3]; 3] {
        [
            [self.xx, self.xy, self.xz],
            [self.xy, self.yy, self.yz],
            [self.xz, self.yz, self.zz],
        ]
    }

    /// Row-major flattening.
    pub fn to_row_major(&self) -> [f64; 9] {
        let r = self.to_rows();
        [r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2]]
    }

    pub fn mul_vec(&self, v: [f64; 3]) -> [f64; 3] {
        let r = self.to_rows();
        [0, 1, 2].map(|i| r[i][0] * v[0] + r[i][1] * v[1] + r[i][2] * v[2])
    }

    /// Full (generally non-symmetric) product `self · other`.
    pub fn mul(&self, other: &Metric3) -> [[f64; 3]; 3] {
        let a = self.to_rows();
        let b = other.to_rows();
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        out
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.to_rows()
            .iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Metric3) -> f64 {
        let a = self.to_row_major();
        let b = other.to_row_major();
        a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.to_row_major().iter().all(|v| v.is_finite())
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy + self.zz
    }

    /// Leading principal minors `(m₁, m₂, m₃)`.
    pub fn leading_minors(&self) -> [f64; 3] {
        [self.xx, self.xx * self.yy - self.xy * self.xy, det3(self)]
    }

    /// Eigenvalues in ascending order (closed-form trigonometric solution
    /// of the characteristic cubic).
    pub fn eigenvalues(&self) -> [f64; 3] {
        let p1 = self.xy * self.xy + self.xz * self.xz + self.yz * self.yz;
        let q = self.trace() / 3.0;
        if p1 == 0.0 {
            let mut d = [self.xx, self.yy, self.zz];
            d.sort_by(f64::total_cmp);
            return d;
        }
        let p2 = (self.xx - q).powi(2) + (self.yy - q).powi(2) + (self.zz - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let shifted = Metric3 {
            xx: (self.xx - q) / p,
            yy: (self.yy - q) / p,
            zz: (self.zz - q) / p,
            xy: self.xy / p,
            xz: self.xz / p,
            yz: self.yz / p,
        };
        let r = (det3(&shifted) / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let largest = q + 2.0 * p * phi.cos();
        let smallest = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
        let middle = 3.0 * q - largest - smallest;
        [smallest, middle, largest]
    }
}

/// Determinant by cofactor expansion along the first row.
pub fn det3(m: &Metric3) -> f64 {
    m.xx * (m.yy * m.zz - m.yz * m.yz) - m.xy * (m.xy * m.zz - m.yz * m.xz)
        + m.xz * (m.xy * m.yz - m.yy * m.xz)
}

/// Scale-aware singularity threshold `1e-12 · ‖m‖∞³`.
pub fn default_singular_tol(m: &Metric3) -> f64 {
    1e-12 * m.norm_inf().powi(3)
}

/// Inverse through the adjugate. Fails with [`Error::SingularMatrix`]
/// when `|det| <= tol`.
pub fn invert3(m: &Metric3, tol: f64) -> Result<Metric3> {
    let det = det3(m);
    if !det.is_finite() || det.abs() <= tol {
        return Err(Error::SingularMatrix { det, tol });
    }
    let inv = 1.0 / det;
    Ok(Metric3 {
        xx: (m.yy * m.zz - m.yz * m.yz) * inv,
        yy: (m.xx * m.zz - m.xz * m.xz) * inv,
        zz: (m.xx * m.yy - m.xy * m.xy) * inv,
        xy: (m.xz * m.yz - m.xy * m.zz) * inv,
        xz: (m.xy * m.yz - m.xz * m.yy) * inv,
        yz: (m.xy * m.xz - m.xx * m.yz) * inv,
    })
}

/// `invert3` with [`default_singular_tol`].
pub fn invert3_default(m: &Metric3) -> Result<Metric3> {
    invert3(m, default_singular_tol(m))
}

/// `max |(a·b - I)_ij|`
pub fn identity_residual(product: &[[f64; 3]; 3]) -> f64 {
    let mut worst = 0.0f64;
    for (i, row) in product.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - target).abs());
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DomainKind {
    OutsideDomain,
    OnD,
    OnV,
    Regular,
}

impl DomainKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DomainKind::OutsideDomain => "OutsideDomain",
            DomainKind::OnD => "OnD",
            DomainKind::OnV => "OnV",
            DomainKind::Regular => "Regular",
        }
    }
}

impl std::fmt::Display for DomainKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classification of a point against the degeneracy loci, with the
/// distance to the relevant locus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainClass {
    pub kind: DomainKind,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Exact,
    Stirling,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Exact => "exact",
            ModelKind::Stirling => "stirling",
        }
    }

    pub fn manifold(self) -> &'static dyn Manifold {
        match self {
            ModelKind::Exact => &crate::exact::ExactModel,
            ModelKind::Stirling => &crate::stirling::StirlingModel::DEFAULT,
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(ModelKind::Exact),
            "stirling" => Ok(ModelKind::Stirling),
            other => Err(Error::Domain(format!("unknown model '{other}'"))),
        }
    }
}

/// A Hessian-type geometry: potential, its gradient (dual coordinates),
/// the metric and the Legendre-dual potential.
pub trait Manifold: Send + Sync {
    fn kind(&self) -> ModelKind;

    /// True when every operation is defined at `theta`.
    fn contains(&self, theta: Theta) -> bool;

    fn potential(&self, theta: Theta) -> Result<f64>;

    fn eta(&self, theta: Theta) -> Result<Eta>;

    fn metric(&self, theta: Theta) -> Result<Metric3>;

    fn dual_potential(&self, theta: Theta) -> Result<f64>;

    /// Where Newton inversion of the dual map starts when no guess is given.
    fn default_guess(&self, target: Eta) -> Theta;

    /// False when `eta` is certainly not the image of any domain point.
    fn dual_domain_contains(&self, eta: Eta) -> bool {
        eta.to_array().iter().all(|v| v.is_finite())
    }

    fn check_domain(&self, theta: Theta) -> Result<()> {
        if self.contains(theta) {
            Ok(())
        } else {
            Err(Error::OutsideDomain(format!(
                "({}, {}, {}) is outside the {} model domain",
                theta.a,
                theta.b,
                theta.c,
                self.kind()
            )))
        }
    }
}
