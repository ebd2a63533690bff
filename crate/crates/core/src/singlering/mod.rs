//! Large-N predictions for R-diagonal (biunitarily invariant) ensembles.
//!
//! Everything here derives from the radial cumulative distribution
//! `F(r) = 2π∫₀ʳ sρ(s) ds`, which solves `S_{P²}(F(r) − 1) = 1/r²` inside the
//! ring `r_min < r < r_max`. From `F` follow the spectral density
//! `ρ = F′/(2πr)`, the eigenvector correlator `O = F(1−F)/(πr²)` and the
//! conditional mean squared condition number `c = O/ρ`.
//!
//! The built-in families have closed forms; [`AnalyticModel::Custom`] accepts
//! any monotone S-transform and solves for `F` by bisection.

mod gamma;
mod mapping;

pub use gamma::{gamma_q, ln_gamma};
pub use mapping::{
    branch_point, cdf_from_overlap, density_from_overlap, densities_from_overlap, Branch, MappedDensity,
};

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::ensemble::FactorSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SingleRingError {
    #[error("S(F−1) − 1/r² has no sign change on F ∈ (0, 1) at r = {r}; r is outside the ring")]
    NotBracketed { r: f64 },
    #[error("spectral density vanishes at r = {r}")]
    DivisionOutsideSupport { r: f64 },
    #[error("4πr²O exceeds 1 at r = {r} (1 − 4πr²O = {discriminant:e})")]
    OutOfRange { r: f64, discriminant: f64 },
    #[error("r = {r} sits on the branch point of the overlap → density mapping")]
    SingularAtBranchPoint { r: f64 },
    #[error("4πr²O reaches 1 in more than one place; branch assignment is ambiguous")]
    AmbiguousBranch,
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

/// Annulus `r_min ≤ |λ| ≤ r_max` holding the limiting spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingSupport {
    pub r_min: f64,
    /// `f64::INFINITY` for unbounded support.
    pub r_max: f64,
}

impl RingSupport {
    pub fn is_bounded(&self) -> bool {
        self.r_max.is_finite()
    }

    pub fn contains(&self, r: f64) -> bool {
        r > self.r_min && r < self.r_max
    }
}

/// A monotone S-transform `S_{P²}` on `(−1, 0)`.
#[derive(Clone)]
pub struct CustomS {
    s: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    support: RingSupport,
    label: String,
}

impl CustomS {
    pub fn new(label: impl Into<String>, s: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let s: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(s);
        let support = ring_radii(&*s);
        Self { s, support, label: label.into() }
    }

    /// S-transform of the free product of the given factors, using the
    /// multiplicativity of S under free multiplication.
    pub fn free_product(factors: &[FactorSpec]) -> Self {
        let factors = factors.to_vec();
        let label = factors
            .iter()
            .map(|f| match f {
                FactorSpec::Ginibre => "ginibre".to_string(),
                FactorSpec::InverseGinibre => "inverse_ginibre".to_string(),
                FactorSpec::HaarUnitary => "haar_unitary".to_string(),
                FactorSpec::TruncatedHaar { kappa } => format!("truncated_haar({kappa})"),
            })
            .collect::<Vec<_>>()
            .join("*");
        Self::new(label, move |z| factors.iter().map(|f| factor_s_transform(*f, z)).product())
    }

    pub fn eval(&self, z: f64) -> f64 {
        (self.s)(z)
    }

    pub fn support(&self) -> RingSupport {
        self.support
    }
}

impl fmt::Debug for CustomS {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomS").field("label", &self.label).field("support", &self.support).finish()
    }
}

/// S-transform of `P²` for a single factor `X = PU` of the given kind.
pub fn factor_s_transform(factor: FactorSpec, z: f64) -> f64 {
    match factor {
        FactorSpec::Ginibre => 1.0 / (1.0 + z),
        FactorSpec::InverseGinibre => -z,
        FactorSpec::HaarUnitary => 1.0,
        FactorSpec::TruncatedHaar { kappa } => (1.0 + kappa + z) / (1.0 + z),
    }
}

/// Analytic single-ring model.
#[derive(Debug, Clone)]
pub enum AnalyticModel {
    /// Product of `n` independent Ginibre matrices.
    GinibreProduct { n: u32 },
    /// Product of `n` truncated Haar unitaries, each with `L/N = κ`.
    TruncatedHaarProduct { n: u32, kappa: f64 },
    /// `X₁⋯X_k X̃₁⁻¹⋯X̃_k⁻¹` with all factors Ginibre.
    SphericalProduct { k: u32 },
    /// Sum of `k` independent Haar unitaries.
    HaarSum { k: u32 },
    Custom(CustomS),
}

impl AnalyticModel {
    pub fn validate(&self) -> Result<(), SingleRingError> {
        let bad = |m: &str| Err(SingleRingError::InvalidModel(m.to_string()));
        match *self {
            AnalyticModel::GinibreProduct { n } | AnalyticModel::TruncatedHaarProduct { n, .. } if n == 0 => {
                bad("product length n must be at least 1")
            }
            AnalyticModel::TruncatedHaarProduct { kappa, .. } if !(kappa > 0.0 && kappa.is_finite()) => {
                bad("truncation ratio κ must be positive")
            }
            AnalyticModel::SphericalProduct { k } | AnalyticModel::HaarSum { k } if k == 0 => {
                bad("k must be at least 1")
            }
            AnalyticModel::Custom(ref s) if !(s.support.r_min <= s.support.r_max) => {
                bad("S-transform does not define a ring")
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            AnalyticModel::GinibreProduct { n } => format!("ginibre_product(n={n})"),
            AnalyticModel::TruncatedHaarProduct { n, kappa } => format!("truncated_haar_product(n={n}, kappa={kappa})"),
            AnalyticModel::SphericalProduct { k } => format!("spherical_product(k={k})"),
            AnalyticModel::HaarSum { k } => format!("haar_sum(k={k})"),
            AnalyticModel::Custom(s) => format!("custom({})", s.label),
        }
    }

    /// `S_{P²}(z)` on `(−1, 0)`.
    pub fn s_transform(&self, z: f64) -> f64 {
        match *self {
            AnalyticModel::GinibreProduct { n } => (1.0 + z).powi(-(n as i32)),
            AnalyticModel::TruncatedHaarProduct { n, kappa } => ((1.0 + kappa + z) / (1.0 + z)).powi(n as i32),
            AnalyticModel::SphericalProduct { k } => (-z / (1.0 + z)).powi(k as i32),
            AnalyticModel::HaarSum { k } => {
                let k = k as f64;
                (k + z) / (k * k * (1.0 + z))
            }
            AnalyticModel::Custom(ref s) => s.eval(z),
        }
    }

    pub fn support(&self) -> RingSupport {
        match *self {
            AnalyticModel::GinibreProduct { .. } => RingSupport { r_min: 0.0, r_max: 1.0 },
            AnalyticModel::TruncatedHaarProduct { n, kappa } => {
                RingSupport { r_min: 0.0, r_max: (1.0 + kappa).powf(-(n as f64) / 2.0) }
            }
            AnalyticModel::SphericalProduct { .. } => RingSupport { r_min: 0.0, r_max: f64::INFINITY },
            AnalyticModel::HaarSum { k: 1 } => RingSupport { r_min: 1.0, r_max: 1.0 },
            AnalyticModel::HaarSum { k } => RingSupport { r_min: 0.0, r_max: (k as f64).sqrt() },
            AnalyticModel::Custom(ref s) => s.support,
        }
    }

    /// `F(r)`, clamped to 0 below the ring and 1 above it.
    pub fn radial_cdf(&self, r: f64) -> f64 {
        let support = self.support();
        if r >= support.r_max {
            return 1.0;
        }
        if r <= support.r_min {
            return 0.0;
        }
        match *self {
            AnalyticModel::GinibreProduct { n } => r.powf(2.0 / n as f64),
            AnalyticModel::TruncatedHaarProduct { n, kappa } => {
                let u = r.powf(2.0 / n as f64);
                kappa * u / (1.0 - u)
            }
            AnalyticModel::SphericalProduct { k } => {
                let u = r.powf(2.0 / k as f64);
                u / (1.0 + u)
            }
            AnalyticModel::HaarSum { k } => {
                let k = k as f64;
                r * r * (k - 1.0) / (k * k - r * r)
            }
            AnalyticModel::Custom(ref s) => {
                // inside the computed support the bracket exists up to roundoff
                solve_hl(&*s.s, r).unwrap_or(if r - support.r_min < support.r_max - r { 0.0 } else { 1.0 })
            }
        }
    }

    /// `ρ(r) = F′(r)/(2πr)`.
    pub fn radial_density(&self, r: f64) -> f64 {
        if !self.support().contains(r) {
            return 0.0;
        }
        match *self {
            AnalyticModel::GinibreProduct { n } => {
                let n = n as f64;
                r.powf(2.0 / n - 2.0) / (PI * n)
            }
            AnalyticModel::TruncatedHaarProduct { n, kappa } => {
                let n = n as f64;
                let u = r.powf(2.0 / n);
                kappa * r.powf(2.0 / n - 2.0) / (PI * n * (1.0 - u) * (1.0 - u))
            }
            AnalyticModel::SphericalProduct { k } => {
                let k = k as f64;
                let u = r.powf(2.0 / k);
                r.powf(2.0 / k - 2.0) / (PI * k * (1.0 + u) * (1.0 + u))
            }
            AnalyticModel::HaarSum { k } => {
                let k = k as f64;
                let d = k * k - r * r;
                k * k * (k - 1.0) / (PI * d * d)
            }
            AnalyticModel::Custom(_) => {
                let h = 1e-6 * r;
                let df = (self.radial_cdf(r + h) - self.radial_cdf(r - h)) / (2.0 * h);
                df / (2.0 * PI * r)
            }
        }
    }

    /// Eigenvector correlator `O(r) = F(1−F)/(πr²)`; zero outside the ring.
    pub fn overlap_correlator(&self, r: f64) -> f64 {
        // r = 0 would be 0/0; the smallest normal radius gives the limit
        let r = r.max(1e-150);
        let f = self.radial_cdf(r);
        f * (1.0 - f) / (PI * r * r)
    }

    /// Conditional mean of `O_ii/N` given `|λ_i| = r`.
    pub fn conditional_kappa2(&self, r: f64) -> Result<f64, SingleRingError> {
        let rho = self.radial_density(r);
        if !(rho > 0.0) {
            return Err(SingleRingError::DivisionOutsideSupport { r });
        }
        Ok(self.overlap_correlator(r) / rho)
    }
}

/// Solve `S(F − 1) = 1/r²` for `F ∈ [0, 1]` by bisection.
///
/// Runs to full double precision (well inside 1e-12 in `F`); requires only
/// that `S` is monotone on `(−1, 0)`.
pub fn solve_hl(s: &dyn Fn(f64) -> f64, r: f64) -> Result<f64, SingleRingError> {
    if !(r > 0.0) {
        return Err(SingleRingError::NotBracketed { r });
    }
    let target = 1.0 / (r * r);
    let g = |f: f64| s(f - 1.0) - target;
    let endpoint = |f: f64, inward: f64| {
        let v = g(f);
        if v.is_nan() {
            g(f + inward)
        } else {
            v
        }
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let g_lo = endpoint(lo, 1e-15);
    let g_hi = endpoint(hi, -1e-15);
    if g_lo == 0.0 {
        return Ok(0.0);
    }
    if g_hi == 0.0 {
        return Ok(1.0);
    }
    if !(g_lo.signum() != g_hi.signum()) {
        return Err(SingleRingError::NotBracketed { r });
    }
    let lo_sign = g_lo.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = g(mid);
        if v == 0.0 {
            return Ok(mid);
        }
        if v.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

enum Limit {
    Zero,
    Infinite,
    Finite(f64),
}

/// Limit of `S(z)` as `z → endpoint` from the side given by `dir` (+1 or −1),
/// by linear extrapolation of samples at distances 1e-9 and 1e-12.
fn endpoint_limit(s: &dyn Fn(f64) -> f64, endpoint: f64, dir: f64) -> Limit {
    let far = s(endpoint + dir * 1e-9);
    let near = s(endpoint + dir * 1e-12);
    if !near.is_finite() || near.abs() > 1e3 * far.abs().max(1.0) {
        return Limit::Infinite;
    }
    let limit = near + (near - far) * (1e-12 / (1e-9 - 1e-12));
    if limit.abs() < 1e-10 {
        Limit::Zero
    } else {
        Limit::Finite(limit)
    }
}

/// Inner and outer radius of the ring, `r_max = S(0⁻)^{−1/2}` and
/// `r_min = S(−1⁺)^{−1/2}`; a vanishing limit maps to an infinite radius and a
/// divergent one to zero.
pub fn ring_radii(s: &dyn Fn(f64) -> f64) -> RingSupport {
    let radius = |l: Limit| match l {
        Limit::Zero => f64::INFINITY,
        Limit::Infinite => 0.0,
        Limit::Finite(v) => 1.0 / v.sqrt(),
    };
    RingSupport { r_min: radius(endpoint_limit(s, -1.0, 1.0)), r_max: radius(endpoint_limit(s, 0.0, -1.0)) }
}

/// Mean of `O_ii/N` over Ginibre eigenvalues at `|λ| = r`, exact at any `N`:
/// `1 − r² + (1/N)·e^{−Nr²}(Nr²)^N / Γ(N, Nr²)`.
pub fn ginibre_condnum_finite_n(r: f64, n: usize) -> f64 {
    assert!(n >= 1, "N must be at least 1");
    let a = n as f64;
    let x = a * r * r;
    if x == 0.0 {
        return 1.0;
    }
    let correction = if x < a + 1.0 {
        (a * x.ln() - x - ln_gamma(a)).exp() / (a * gamma_q(a, x))
    } else {
        // Γ(N, x) = e^{−x} x^N h, so the ratio is 1/h
        1.0 / (a * gamma::upper_fraction(a, x))
    };
    1.0 - r * r + correction
}

/// Leading large-N behaviour of `E(O_ii | |λ_i| = 1)` for Ginibre:
/// `√(2/π)·√N + 2/(3π)`.
pub fn edge_overlap_asymptotic(n: usize) -> f64 {
    (2.0 / PI).sqrt() * (n as f64).sqrt() + 2.0 / (3.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;

    fn builtins() -> Vec<AnalyticModel> {
        vec![
            AnalyticModel::GinibreProduct { n: 1 },
            AnalyticModel::GinibreProduct { n: 2 },
            AnalyticModel::GinibreProduct { n: 4 },
            AnalyticModel::TruncatedHaarProduct { n: 1, kappa: 1.0 },
            AnalyticModel::TruncatedHaarProduct { n: 3, kappa: 0.5 },
            AnalyticModel::SphericalProduct { k: 1 },
            AnalyticModel::SphericalProduct { k: 3 },
            AnalyticModel::HaarSum { k: 2 },
            AnalyticModel::HaarSum { k: 5 },
        ]
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn closed_form_cdf_values() {
        assert!(close(AnalyticModel::GinibreProduct { n: 1 }.radial_cdf(0.5), 0.25, 1e-15));
        assert!(close(AnalyticModel::HaarSum { k: 2 }.radial_cdf(1.0), 1.0 / 3.0, 1e-15));
        assert!(close(AnalyticModel::SphericalProduct { k: 1 }.radial_cdf(1.0), 0.5, 1e-15));
        assert_eq!(AnalyticModel::GinibreProduct { n: 1 }.radial_cdf(1.3), 1.0);
        assert_eq!(AnalyticModel::HaarSum { k: 2 }.radial_cdf(2f64.sqrt()), 1.0);
    }

    #[test]
    fn spherical_cdf_integrates_its_density() {
        let m = AnalyticModel::SphericalProduct { k: 1 };
        let mass = integrate(|r| 2.0 * PI * r * m.radial_density(r), 0.0, 1.0, 1e-12);
        assert!(close(mass, 0.5, 1e-10), "{mass}");
    }

    #[test]
    fn solve_hl_examples() {
        let ginibre = |z: f64| 1.0 / (1.0 + z);
        assert!(close(solve_hl(&ginibre, 0.7).unwrap(), 0.49, 1e-10));
        let spherical = |z: f64| -z / (1.0 + z);
        assert!(close(solve_hl(&spherical, 2.0).unwrap(), 0.8, 1e-12));
        // Marchenko–Pastur rate 2: ring [1, √2], F = r² − 1
        let mp = |z: f64| 1.0 / (z + 2.0);
        assert!(close(solve_hl(&mp, 1.2).unwrap(), 1.44 - 1.0, 1e-12));
        assert!(matches!(solve_hl(&mp, 0.5), Err(SingleRingError::NotBracketed { .. })));
        assert!(matches!(solve_hl(&mp, 1.6), Err(SingleRingError::NotBracketed { .. })));
    }

    #[test]
    fn ring_radii_examples() {
        let g = ring_radii(&|z: f64| 1.0 / (1.0 + z));
        assert_eq!(g.r_min, 0.0);
        assert!(close(g.r_max, 1.0, 1e-10));
        let t = AnalyticModel::TruncatedHaarProduct { n: 1, kappa: 1.0 };
        let rt = ring_radii(&|z| t.s_transform(z));
        assert!(close(rt.r_max, 0.5f64.sqrt(), 1e-10));
        let h = AnalyticModel::HaarSum { k: 2 };
        let rh = ring_radii(&|z| h.s_transform(z));
        assert!(close(rh.r_max, 2f64.sqrt(), 1e-10));
        let s = AnalyticModel::SphericalProduct { k: 2 };
        let rs = ring_radii(&|z| s.s_transform(z));
        assert_eq!((rs.r_min, rs.r_max), (0.0, f64::INFINITY));
        let mp = ring_radii(&|z: f64| 1.0 / (z + 2.0));
        assert!(close(mp.r_min, 1.0, 1e-10) && close(mp.r_max, 2f64.sqrt(), 1e-10));
    }

    #[test]
    fn builtin_supports_match_ring_radii() {
        for m in builtins() {
            let numeric = ring_radii(&|z| m.s_transform(z));
            let exact = m.support();
            assert!(close(numeric.r_min, exact.r_min, 1e-9), "{}", m.label());
            if exact.is_bounded() {
                assert!(close(numeric.r_max, exact.r_max, 1e-9), "{}", m.label());
            } else {
                assert!(numeric.r_max.is_infinite());
            }
        }
    }

    #[test]
    fn closed_forms_agree_with_functional_equation() {
        for m in builtins() {
            let support = m.support();
            let hi = if support.is_bounded() { support.r_max } else { 20.0 };
            for i in 1..200 {
                let r = support.r_min + (hi - support.r_min) * i as f64 / 200.0;
                let f = solve_hl(&|z| m.s_transform(z), r).unwrap();
                assert!(close(f, m.radial_cdf(r), 1e-9), "{} at r = {r}", m.label());
            }
        }
    }

    #[test]
    fn overlap_correlator_examples() {
        let g1 = AnalyticModel::GinibreProduct { n: 1 };
        assert!(close(g1.overlap_correlator(0.6), 0.64 / PI, 1e-15));
        let g2 = AnalyticModel::GinibreProduct { n: 2 };
        assert!(close(g2.overlap_correlator(0.5), 1.0 / PI, 1e-15));
        for m in builtins() {
            let s = m.support();
            if s.is_bounded() {
                assert_eq!(m.overlap_correlator(s.r_max), 0.0, "{}", m.label());
            }
        }
        assert!(close(g1.overlap_correlator(0.0), 1.0 / PI, 1e-15));
    }

    #[test]
    fn radial_density_examples() {
        assert!(close(AnalyticModel::GinibreProduct { n: 1 }.radial_density(0.3), 1.0 / PI, 1e-15));
        assert!(close(AnalyticModel::HaarSum { k: 2 }.radial_density(1.0), 4.0 / (9.0 * PI), 1e-15));
        assert!(close(AnalyticModel::SphericalProduct { k: 2 }.radial_density(1.0), 1.0 / (8.0 * PI), 1e-15));
        assert_eq!(AnalyticModel::GinibreProduct { n: 1 }.radial_density(1.5), 0.0);
    }

    #[test]
    fn conditional_kappa2_examples() {
        let g = AnalyticModel::GinibreProduct { n: 1 };
        let h = AnalyticModel::HaarSum { k: 3 };
        for r in [0.1, 0.4, 0.9] {
            assert!(close(g.conditional_kappa2(r).unwrap(), 1.0 - r * r, 1e-12));
            assert!(close(h.conditional_kappa2(r).unwrap(), 1.0 - r * r / 3.0, 1e-12));
        }
        for k in 1..4 {
            let s = AnalyticModel::SphericalProduct { k };
            for r in [0.05, 0.7, 1.0, 4.0, 30.0] {
                assert!(close(s.conditional_kappa2(r).unwrap(), k as f64, 1e-9));
            }
        }
        assert!(matches!(g.conditional_kappa2(1.2), Err(SingleRingError::DivisionOutsideSupport { .. })));
    }

    #[test]
    fn cdf_is_monotone_and_spans_unit_interval() {
        for m in builtins() {
            let s = m.support();
            let hi = if s.is_bounded() { s.r_max } else { 1e4 };
            let mut prev = m.radial_cdf(s.r_min);
            assert_eq!(prev, 0.0);
            for i in 1..=1000 {
                let r = s.r_min + (hi - s.r_min) * i as f64 / 1000.0;
                let f = m.radial_cdf(r);
                assert!(f >= prev, "{} not monotone at {r}", m.label());
                prev = f;
            }
            if s.is_bounded() {
                assert_eq!(prev, 1.0);
            }
        }
    }

    #[test]
    fn densities_are_normalized() {
        for m in builtins() {
            let s = m.support();
            let mass = if s.is_bounded() {
                integrate(|r| 2.0 * PI * r * m.radial_density(r), s.r_min, s.r_max, 1e-10)
            } else {
                // analytic tail beyond R: 1 − F(R)
                let big = 1e3;
                integrate(|r| 2.0 * PI * r * m.radial_density(r), 0.0, big, 1e-10) + (1.0 - m.radial_cdf(big))
            };
            assert!(close(mass, 1.0, 1e-6), "{}: {mass}", m.label());
        }
    }

    #[test]
    fn custom_model_reproduces_builtin() {
        let custom = AnalyticModel::Custom(CustomS::new("ginibre", |z| 1.0 / (1.0 + z)));
        let exact = AnalyticModel::GinibreProduct { n: 1 };
        for r in [0.1, 0.5, 0.9] {
            assert!(close(custom.radial_cdf(r), exact.radial_cdf(r), 1e-12));
            assert!(close(custom.radial_density(r), exact.radial_density(r), 1e-7));
        }
        let mp = AnalyticModel::Custom(CustomS::new("mp", |z| 1.0 / (z + 2.0)));
        assert_eq!(mp.radial_cdf(0.5), 0.0);
        assert!(close(mp.radial_cdf(1.2), 0.44, 1e-12));
        assert!(close(mp.radial_density(1.2), 1.0 / PI, 1e-7));
    }

    #[test]
    fn free_product_of_factors_matches_families() {
        use FactorSpec::*;
        let sph = AnalyticModel::Custom(CustomS::free_product(&[Ginibre, InverseGinibre]));
        let exact = AnalyticModel::SphericalProduct { k: 1 };
        let tr = AnalyticModel::Custom(CustomS::free_product(&[TruncatedHaar { kappa: 1.0 }, HaarUnitary]));
        let tr_exact = AnalyticModel::TruncatedHaarProduct { n: 1, kappa: 1.0 };
        for r in [0.2, 0.5, 0.65] {
            assert!(close(sph.radial_cdf(r), exact.radial_cdf(r), 1e-12));
            assert!(close(tr.radial_cdf(r), tr_exact.radial_cdf(r), 1e-12));
        }
    }

    #[test]
    fn invalid_models_are_reported() {
        assert!(AnalyticModel::GinibreProduct { n: 0 }.validate().is_err());
        assert!(AnalyticModel::TruncatedHaarProduct { n: 1, kappa: -1.0 }.validate().is_err());
        assert!(AnalyticModel::HaarSum { k: 0 }.validate().is_err());
        assert!(AnalyticModel::HaarSum { k: 2 }.validate().is_ok());
    }

    // reference values: mpmath at 40 digits
    #[test]
    fn finite_n_condition_numbers() {
        for r in [0.0, 0.3, 0.7, 1.0, 2.5, 10.0] {
            assert!(close(ginibre_condnum_finite_n(r, 1), 1.0, 1e-12), "r = {r}");
        }
        for n in [1, 2, 10, 1000, 10_000] {
            assert_eq!(ginibre_condnum_finite_n(0.0, n), 1.0);
        }
        let cases = [
            (1.0, 10, 0.273_207_943_855_374_118_28),
            (0.5, 10, 0.750_215_785_032_926_721_73),
            (1.2, 10, 0.201_663_953_172_569_673_96),
            (0.3, 10, 0.910_000_039_065_829_145_22),
            (0.7, 2, 0.752_525_252_525_252_541_11),
            (1.0, 2, 2.0 / 3.0),
            (1.5, 2, 0.590_909_090_909_090_909_09),
            (1.05, 1000, 0.009_260_642_790_457_469_498_4),
            (1.0, 10_000, 0.008_000_056_200_837_619_661_7),
            (3.0, 100, 0.011_232_503_171_301_008_246),
        ];
        for (r, n, want) in cases {
            let got = ginibre_condnum_finite_n(r, n);
            assert!(((got - want) / want).abs() < 1e-10, "N = {n}, r = {r}: {got} vs {want}");
        }
        let far = ginibre_condnum_finite_n(10.0, 10_000);
        assert!(((far - 1.010_099_969_187_974_241_4e-4) / 1.01e-4).abs() < 1e-8, "{far}");
    }

    #[test]
    fn edge_asymptotics() {
        assert!(close(edge_overlap_asymptotic(100), 8.191_052_198_817_847, 1e-12));
        let ratio = edge_overlap_asymptotic(4_000_000) / edge_overlap_asymptotic(1_000_000);
        assert!(close(ratio, 2.0, 1e-3));
        // N·c(1, N) approaches the asymptote with an O(N^{-1/2}) residual
        let mut prev = f64::INFINITY;
        for n in [100, 1000, 10_000] {
            let resid = (n as f64 * ginibre_condnum_finite_n(1.0, n) - edge_overlap_asymptotic(n)).abs();
            assert!(resid < prev && resid < 2.0 / (n as f64).sqrt(), "N = {n}: {resid}");
            prev = resid;
        }
    }
}
