//! Non-hermitian eigendecomposition with biorthonormal eigenvectors, diagonal
//! overlaps `O_ii`, and the hermitized (quaternionic) resolvent.

use faer::linalg::solvers::Solve;
use faer::{c64, Mat, MatRef, Side};
use thiserror::Error;

use crate::linalg::{identity_defect, max_abs, one_norm};

/// Samples whose `max_{i≠j} |⟨L_i|R_j⟩|` exceeds this are rejected.
pub const BIORTHOGONALITY_TOL: f64 = 1e-6;
/// Samples whose `max_i |⟨L_i|R_i⟩ − 1|` exceeds this are rejected.
pub const NORMALIZATION_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("matrix is {rows}×{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("eigensolver did not converge")]
    NoConvergence,
    #[error("ill-conditioned eigenvector basis: biorthogonality defect {offdiag:.3e} (diagonal {diag:.3e})")]
    IllConditionedSimilarity { diag: f64, offdiag: f64 },
    #[error("hermitized kernel is singular at z = {z}, |w| = {w_abs:e}")]
    SingularRegularizedKernel { z: c64, w_abs: f64 },
}

/// `X = R·diag(λ)·Lt` with `Lt·R = I`.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<c64>,
    /// Columns are the right eigenvectors `|R_i⟩`.
    pub right: Mat<c64>,
    /// Rows are the left eigenvectors `⟨L_i|`.
    pub left: Mat<c64>,
    /// `‖X·R − R·diag(λ)‖_max`
    pub residual: f64,
    /// `max_i |⟨L_i|R_i⟩ − 1|`
    pub normalization_defect: f64,
    /// `max_{i≠j} |⟨L_i|R_j⟩|`
    pub biorthogonality_defect: f64,
    /// `‖R‖₁·‖Lt‖₁`
    pub condition: f64,
}

impl EigenSystem {
    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `R·diag(λ)·Lt`
    pub fn reconstruct(&self) -> Mat<c64> {
        let n = self.dimension();
        let scaled = Mat::<c64>::from_fn(n, n, |i, j| self.right[(i, j)] * self.eigenvalues[j]);
        &scaled * &self.left
    }
}

/// Right eigenvectors from the dense nonsymmetric solver; left eigenvectors as
/// the rows of `R⁻¹`, so `⟨L_i|R_j⟩ = δ_ij` holds up to the solve error.
pub fn eig_full(x: MatRef<'_, c64>) -> Result<EigenSystem, SpectralError> {
    let (rows, cols) = (x.nrows(), x.ncols());
    if rows != cols {
        return Err(SpectralError::NotSquare { rows, cols });
    }
    let n = rows;
    let evd = x.eigen().map_err(|_| SpectralError::NoConvergence)?;
    let eigenvalues: Vec<c64> = (0..n).map(|i| evd.S()[i]).collect();
    let right = evd.U().to_owned();

    let lu = right.partial_piv_lu();
    let left = lu.solve(Mat::<c64>::identity(n, n));

    let gram = &left * &right;
    let (normalization_defect, biorthogonality_defect) = identity_defect(gram.as_ref());
    if !(biorthogonality_defect <= BIORTHOGONALITY_TOL && normalization_defect <= NORMALIZATION_TOL) {
        return Err(SpectralError::IllConditionedSimilarity {
            diag: normalization_defect,
            offdiag: biorthogonality_defect,
        });
    }

    let xr = x * &right;
    let rl = Mat::<c64>::from_fn(n, n, |i, j| right[(i, j)] * eigenvalues[j]);
    let residual = max_abs((&xr - &rl).as_ref());
    let condition = one_norm(right.as_ref()) * one_norm(left.as_ref());

    Ok(EigenSystem {
        eigenvalues,
        right,
        left,
        residual,
        normalization_defect,
        biorthogonality_defect,
        condition,
    })
}

/// One eigenvalue with its squared condition number `O_ii`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapRecord {
    pub eigenvalue: c64,
    /// `⟨L_i|L_i⟩⟨R_i|R_i⟩`, at least 1 by Cauchy–Schwarz.
    pub overlap: f64,
}

impl OverlapRecord {
    /// Eigenvalue condition number `κ(λ_i) = √O_ii`.
    pub fn condition_number(&self) -> f64 {
        self.overlap.sqrt()
    }

    pub fn modulus(&self) -> f64 {
        self.eigenvalue.norm()
    }
}

pub fn overlaps_diagonal(es: &EigenSystem) -> Vec<OverlapRecord> {
    let n = es.dimension();
    (0..n)
        .map(|i| {
            let right_sq: f64 = (0..n).map(|k| es.right[(k, i)].norm_sqr()).sum();
            let left_sq: f64 = (0..n).map(|k| es.left[(i, k)].norm_sqr()).sum();
            OverlapRecord { eigenvalue: es.eigenvalues[i], overlap: right_sq * left_sq }
        })
        .collect()
}

/// Single-sample value of the 2×2 generalized resolvent
/// `(1/N)·bTr (Q⊗1 − diag(X, X†))⁻¹` at `(z, w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuaternionResolvent {
    pub g11: c64,
    pub g12: c64,
    pub g21: c64,
    pub g22: c64,
    /// `Tr[((z−X)(z̄−X†)+|w|²)⁻¹]`
    pub trace_outer: f64,
    /// `Tr[((z̄−X†)(z−X)+|w|²)⁻¹]`
    pub trace_inner: f64,
}

impl QuaternionResolvent {
    /// `−G₁₂·G₂₁`, the combination that carries the eigenvector correlator.
    pub fn off_diagonal_product(&self) -> c64 {
        -(self.g12 * self.g21)
    }
}

/// Hermitized resolvent of `X` at `(z, w)`.
///
/// Both `(z−X)(z̄−X†)+|w|²` and `(z̄−X†)(z−X)+|w|²` are factored by Cholesky;
/// the 2N×2N block matrix is never formed.
pub fn quaternion_resolvent(x: MatRef<'_, c64>, z: c64, w: c64) -> Result<QuaternionResolvent, SpectralError> {
    let (rows, cols) = (x.nrows(), x.ncols());
    if rows != cols {
        return Err(SpectralError::NotSquare { rows, cols });
    }
    let n = rows;
    let w2 = w.norm_sqr();
    let singular = || SpectralError::SingularRegularizedKernel { z, w_abs: w.norm() };

    // A = z − X
    let a = Mat::<c64>::from_fn(n, n, |i, j| if i == j { z - x[(i, j)] } else { -x[(i, j)] });
    let mut outer = &a * a.adjoint();
    let mut inner = a.adjoint() * &a;
    for i in 0..n {
        outer[(i, i)] += w2;
        inner[(i, i)] += w2;
    }
    let outer_inv = outer.llt(Side::Lower).map_err(|_| singular())?.solve(Mat::<c64>::identity(n, n));
    let inner_inv = inner.llt(Side::Lower).map_err(|_| singular())?.solve(Mat::<c64>::identity(n, n));

    let mut trace_outer = 0.0;
    let mut trace_inner = 0.0;
    let mut tr_g11 = c64::new(0.0, 0.0);
    let mut tr_g22 = c64::new(0.0, 0.0);
    for i in 0..n {
        trace_outer += outer_inv[(i, i)].re;
        trace_inner += inner_inv[(i, i)].re;
        for k in 0..n {
            // (A†)_{ik} = conj(A_{ki})
            tr_g11 += a[(k, i)].conj() * outer_inv[(k, i)];
            tr_g22 += a[(i, k)] * inner_inv[(k, i)];
        }
    }
    if !(trace_outer.is_finite() && trace_inner.is_finite()) {
        return Err(singular());
    }
    let inv_n = 1.0 / n as f64;
    Ok(QuaternionResolvent {
        g11: tr_g11 * inv_n,
        g12: w.conj() * (trace_outer * inv_n),
        g21: -w * (trace_inner * inv_n),
        g22: tr_g22 * inv_n,
        trace_outer,
        trace_inner,
    })
}

/// `|∂_w G₁₁ − ∂_z G₁₂|` from central differences with step `h`, using
/// Wirtinger derivatives `∂_w f = (∂_{Re w} f − i ∂_{Im w} f)/2`.
pub fn resolvent_symmetry_check(x: MatRef<'_, c64>, z: c64, w: c64, h: f64) -> Result<f64, SpectralError> {
    let re = c64::new(h, 0.0);
    let im = c64::new(0.0, h);
    let g11 = |w: c64| quaternion_resolvent(x, z, w).map(|g| g.g11);
    let g12 = |z: c64| quaternion_resolvent(x, z, w).map(|g| g.g12);

    let d_re_w = (g11(w + re)? - g11(w - re)?) / (2.0 * h);
    let d_im_w = (g11(w + im)? - g11(w - im)?) / (2.0 * h);
    let d_re_z = (g12(z + re)? - g12(z - re)?) / (2.0 * h);
    let d_im_z = (g12(z + im)? - g12(z - im)?) / (2.0 * h);

    let i = c64::new(0.0, 1.0);
    let dw_g11 = (d_re_w - i * d_im_w) * 0.5;
    let dz_g12 = (d_re_z - i * d_im_z) * 0.5;
    Ok((dw_g11 - dz_g12).norm())
}
