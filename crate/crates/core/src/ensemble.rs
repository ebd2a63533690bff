//! Biunitarily invariant matrix ensembles and their compositions.
//!
//! Ginibre entries are complex Gaussians of variance `1/N` (real and
//! imaginary parts each `1/(2N)`), so a single Ginibre factor has the unit
//! disc as its limiting spectrum. Every other normalization in the crate is
//! tied to this choice.

use faer::linalg::solvers::Solve;
use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{rcond_estimate, ComplexMatrix};

/// Inverse factors whose reciprocal condition estimate falls below this are
/// rejected.
pub const SINGULAR_RCOND: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("invalid ensemble: {0}")]
    InvalidSpec(String),
    #[error("inverse factor {factor} is numerically singular (rcond ≈ {rcond:.3e})")]
    SingularFactor { factor: usize, rcond: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combine {
    Product,
    Sum,
}

/// One factor of a composite ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FactorSpec {
    Ginibre,
    InverseGinibre,
    HaarUnitary,
    /// Top-left `N×N` block of an `(N+L)×(N+L)` Haar unitary with `L = round(κN)`.
    TruncatedHaar { kappa: f64 },
}

/// Declarative composite ensemble: `X₁X₂⋯X_m` or `U₁+⋯+U_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    combine: Combine,
    factors: Vec<FactorSpec>,
    n: usize,
}

impl EnsembleSpec {
    pub fn new(combine: Combine, factors: Vec<FactorSpec>, n: usize) -> Result<Self, EnsembleError> {
        if n == 0 {
            return Err(EnsembleError::InvalidSpec("dimension must be at least 1".into()));
        }
        if factors.is_empty() {
            return Err(EnsembleError::InvalidSpec("at least one factor is required".into()));
        }
        if combine == Combine::Sum && factors.iter().any(|f| *f != FactorSpec::HaarUnitary) {
            return Err(EnsembleError::InvalidSpec(
                "sum ensembles only support haar_unitary factors".into(),
            ));
        }
        for f in &factors {
            if let FactorSpec::TruncatedHaar { kappa } = *f {
                if !(kappa > 0.0 && kappa.is_finite()) {
                    return Err(EnsembleError::InvalidSpec(format!(
                        "truncation ratio must be positive, got {kappa}"
                    )));
                }
                if truncation_rows(n, kappa) == 0 {
                    return Err(EnsembleError::InvalidSpec(format!(
                        "round(κN) = 0 for κ = {kappa}, N = {n}; nothing is truncated"
                    )));
                }
            }
        }
        Ok(Self { combine, factors, n })
    }

    /// Single-factor product.
    pub fn single(factor: FactorSpec, n: usize) -> Result<Self, EnsembleError> {
        Self::new(Combine::Product, vec![factor], n)
    }

    pub fn combine(&self) -> Combine {
        self.combine
    }

    pub fn factors(&self) -> &[FactorSpec] {
        &self.factors
    }

    pub fn dimension(&self) -> usize {
        self.n
    }
}

/// Number of rows and columns removed when truncating with ratio `kappa`.
pub fn truncation_rows(n: usize, kappa: f64) -> usize {
    (kappa * n as f64).round() as usize
}

/// Maps `(master seed, sample index, attempt, factor index)` to an independent
/// ChaCha8 stream.
///
/// The 256-bit key is a SplitMix64 expansion of the master seed, the attempt
/// and the factor index; the sample index selects the ChaCha stream. Output is
/// a pure function of the four integers, so samples can be drawn in any order
/// on any number of threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedPolicy {
    master: u64,
}

impl SeedPolicy {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn stream(&self, sample: u64, attempt: u32) -> SampleStream {
        SampleStream { master: self.master, sample, attempt }
    }
}

/// Randomness for one draw of one sample; hands out one generator per factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleStream {
    master: u64,
    sample: u64,
    attempt: u32,
}

impl SampleStream {
    pub fn sample(&self) -> u64 {
        self.sample
    }

    pub fn attempt(&self) -> u32 {
        self.attempt
    }

    pub fn factor_rng(&self, factor: usize) -> ChaCha8Rng {
        let mut state = self.master;
        let mut key = [0u8; 32];
        let tweaks = [
            0x243f_6a88_85a3_08d3,
            u64::from(self.attempt),
            factor as u64,
            0x1319_8a2e_0370_7344,
        ];
        for (chunk, tweak) in key.chunks_exact_mut(8).zip(tweaks) {
            state ^= tweak;
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.sample);
        rng
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> c64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64::new(sigma * re, sigma * im)
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, variance: f64, rng: &mut R) -> ComplexMatrix {
    let sigma = (0.5 * variance).sqrt();
    // fill column by column so the draw order is independent of faer internals
    let mut m = Mat::<c64>::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = complex_gaussian(rng, sigma);
        }
    }
    m
}

/// Complex Ginibre matrix with entry variance `1/N`.
pub fn sample_ginibre<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    gaussian_matrix(n, n, 1.0 / n as f64, rng)
}

/// Orthonormal columns of a Gaussian `rows×cols` matrix, with the QR phase
/// fixed so that the triangular factor has a positive diagonal. Without the
/// phase fix the result is not Haar distributed.
fn haar_columns<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let g = gaussian_matrix(rows, cols, 1.0, rng);
    let qr = g.qr();
    let mut q = qr.compute_thin_Q();
    let r = qr.thin_R();
    for j in 0..cols {
        let d = r[(j, j)];
        let m = d.norm();
        let phase = if m > 0.0 { d / m } else { c64::new(1.0, 0.0) };
        for i in 0..rows {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar-distributed `N×N` unitary.
pub fn sample_haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    haar_columns(n, n, rng)
}

/// Top-left `N×N` block of an `(N+L)×(N+L)` Haar unitary, `L = round(κN)`.
///
/// Only the first `N` columns of the big unitary are generated; they have
/// the same law as the corresponding columns of a full Haar draw.
pub fn sample_truncated_haar<R: Rng + ?Sized>(n: usize, kappa: f64, rng: &mut R) -> ComplexMatrix {
    let l = truncation_rows(n, kappa);
    let cols = haar_columns(n + l, n, rng);
    cols.as_ref().subrows(0, n).to_owned()
}

/// Draw one matrix from `spec`. Factor `i` uses `stream.factor_rng(i)`.
///
/// Inverse factors enter through an LU solve against the running product,
/// never through an explicit inverse.
pub fn realize(spec: &EnsembleSpec, stream: &SampleStream) -> Result<ComplexMatrix, EnsembleError> {
    let n = spec.n;
    match spec.combine {
        Combine::Sum => {
            let mut acc = Mat::<c64>::zeros(n, n);
            for (idx, _) in spec.factors.iter().enumerate() {
                let u = sample_haar_unitary(n, &mut stream.factor_rng(idx));
                acc += &u;
            }
            Ok(acc)
        }
        Combine::Product => {
            let mut acc: Option<ComplexMatrix> = None;
            for (idx, factor) in spec.factors.iter().enumerate() {
                let mut rng = stream.factor_rng(idx);
                acc = Some(match *factor {
                    FactorSpec::InverseGinibre => {
                        let g = sample_ginibre(n, &mut rng);
                        let lu = g.partial_piv_lu();
                        let rcond = rcond_estimate(g.as_ref(), &lu);
                        if !(rcond >= SINGULAR_RCOND) {
                            return Err(EnsembleError::SingularFactor { factor: idx, rcond });
                        }
                        match acc {
                            None => lu.solve(Mat::<c64>::identity(n, n)),
                            Some(mut y) => {
                                lu.rsolve_in_place(&mut y);
                                y
                            }
                        }
                    }
                    other => {
                        let m = sample_factor(other, n, &mut rng);
                        match acc {
                            None => m,
                            Some(y) => &y * &m,
                        }
                    }
                });
            }
            Ok(acc.expect("spec has at least one factor"))
        }
    }
}

fn sample_factor<R: Rng + ?Sized>(factor: FactorSpec, n: usize, rng: &mut R) -> ComplexMatrix {
    match factor {
        FactorSpec::Ginibre => sample_ginibre(n, rng),
        FactorSpec::HaarUnitary => sample_haar_unitary(n, rng),
        FactorSpec::TruncatedHaar { kappa } => sample_truncated_haar(n, kappa, rng),
        FactorSpec::InverseGinibre => unreachable!("inverse factors are applied by solve"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    fn unitarity_defect(u: &ComplexMatrix) -> f64 {
        let g = u.adjoint() * u;
        let n = u.ncols();
        max_abs((&g - Mat::<c64>::identity(n, n)).as_ref())
    }

    #[test]
    fn scalar_ginibre_has_unit_variance_scale() {
        let mut rng = SeedPolicy::new(1).stream(0, 0).factor_rng(0);
        let x = sample_ginibre(1, &mut rng);
        assert_eq!(x.nrows(), 1);
        assert!(x[(0, 0)].norm().is_finite());
    }

    #[test]
    fn haar_sample_is_unitary() {
        for n in [1, 7, 64, 300] {
            let u = sample_haar_unitary(n, &mut SeedPolicy::new(9).stream(n as u64, 0).factor_rng(0));
            assert!(unitarity_defect(&u) <= 1e-12, "n = {n}");
        }
    }

    #[test]
    fn truncated_haar_has_requested_shape() {
        let x = sample_truncated_haar(10, 0.5, &mut SeedPolicy::new(3).stream(0, 0).factor_rng(0));
        assert_eq!((x.nrows(), x.ncols()), (10, 10));
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let p = SeedPolicy::new(42);
        let a = sample_ginibre(4, &mut p.stream(5, 0).factor_rng(1));
        let b = sample_ginibre(4, &mut p.stream(5, 0).factor_rng(1));
        assert_eq!(a, b);
        let c = sample_ginibre(4, &mut p.stream(6, 0).factor_rng(1));
        let d = sample_ginibre(4, &mut p.stream(5, 1).factor_rng(1));
        let e = sample_ginibre(4, &mut p.stream(5, 0).factor_rng(0));
        let f = sample_ginibre(4, &mut SeedPolicy::new(43).stream(5, 0).factor_rng(1));
        for other in [&c, &d, &e, &f] {
            assert_ne!(&a, other);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(EnsembleSpec::new(Combine::Product, vec![], 4).is_err());
        assert!(EnsembleSpec::new(Combine::Product, vec![FactorSpec::Ginibre], 0).is_err());
        assert!(EnsembleSpec::new(Combine::Sum, vec![FactorSpec::Ginibre], 4).is_err());
        assert!(EnsembleSpec::single(FactorSpec::TruncatedHaar { kappa: 0.0 }, 4).is_err());
        assert!(EnsembleSpec::single(FactorSpec::TruncatedHaar { kappa: 0.1 }, 4).is_err());
        assert!(EnsembleSpec::single(FactorSpec::TruncatedHaar { kappa: 0.25 }, 4).is_ok());
        assert!(EnsembleSpec::new(Combine::Sum, vec![FactorSpec::HaarUnitary; 3], 4).is_ok());
    }

    #[test]
    fn single_factor_realization_matches_direct_sampler() {
        let stream = SeedPolicy::new(11).stream(3, 0);
        let spec = EnsembleSpec::single(FactorSpec::Ginibre, 16).unwrap();
        let x = realize(&spec, &stream).unwrap();
        let y = sample_ginibre(16, &mut stream.factor_rng(0));
        assert_eq!(x, y);
    }

    #[test]
    fn inverse_factor_is_applied_on_the_right() {
        let stream = SeedPolicy::new(5).stream(0, 0);
        let n = 12;
        let spec =
            EnsembleSpec::new(Combine::Product, vec![FactorSpec::Ginibre, FactorSpec::InverseGinibre], n).unwrap();
        let y = realize(&spec, &stream).unwrap();
        let a = sample_ginibre(n, &mut stream.factor_rng(0));
        let b = sample_ginibre(n, &mut stream.factor_rng(1));
        // y·b should reproduce a
        let back = &y * &b;
        assert!(max_abs((&back - &a).as_ref()) < 1e-10);
    }

    #[test]
    fn leading_inverse_factor_is_a_plain_inverse() {
        let stream = SeedPolicy::new(8).stream(2, 0);
        let n = 9;
        let spec = EnsembleSpec::single(FactorSpec::InverseGinibre, n).unwrap();
        let y = realize(&spec, &stream).unwrap();
        let g = sample_ginibre(n, &mut stream.factor_rng(0));
        let id = &g * &y;
        assert!(max_abs((&id - Mat::<c64>::identity(n, n)).as_ref()) < 1e-10);
    }

    #[test]
    fn sum_of_unitaries_is_bounded_by_factor_count() {
        let stream = SeedPolicy::new(2).stream(0, 0);
        let spec = EnsembleSpec::new(Combine::Sum, vec![FactorSpec::HaarUnitary; 2], 32).unwrap();
        let y = realize(&spec, &stream).unwrap();
        let svd = y.singular_values().unwrap();
        assert!(svd[0] <= 2.0 + 1e-12);
    }
}
