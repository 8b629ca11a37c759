//! Brute-force dense-matrix oracle.
//!
//! Everything here works on explicit real symmetric matrices over
//! `(ℂ^d ⊗ ℂ^d)^⊗n`, ordered copy by copy as `A₁B₁A₂B₂…`. It is slow on
//! purpose and only meant for cross-checking the reduced computations at
//! small sizes.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::symmetric::TypeClassVector;
use crate::werner::WernerParams;

/// Largest local dimension accepted by [`build_werner`].
pub const MAX_DENSE_D: usize = 6;
/// Total dimensions `d^{2n}` must stay strictly below this.
pub const MAX_DENSE_DIM: usize = 4096;
/// Eigenvalues at or below this count as outside the support.
pub const EIGEN_CUTOFF: f64 = 1e-12;

/// A density matrix together with its tensor-factor dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    matrix: DMatrix<f64>,
    dims: Vec<usize>,
}

impl DenseState {
    pub fn new(matrix: DMatrix<f64>, dims: Vec<usize>) -> Result<Self> {
        let dim: usize = dims.iter().product();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: matrix.nrows(),
            });
        }
        Ok(Self { matrix, dims })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        sorted_eigenvalues(&self.matrix)
    }

    /// Transpose on the second factor of every copy.
    pub fn partial_transpose(&self) -> Result<DMatrix<f64>> {
        let mask: Vec<bool> = (0..self.dims.len()).map(|i| i % 2 == 1).collect();
        partial_transpose(&self.matrix, &self.dims, &mask)
    }

    /// Smallest eigenvalue of [`Self::partial_transpose`].
    pub fn min_pt_eigenvalue(&self) -> Result<f64> {
        Ok(sorted_eigenvalues(&self.partial_transpose()?)[0])
    }
}

fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// The swap operator on `ℂ^d ⊗ ℂ^d`.
pub fn swap_operator(d: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            m[(i * d + j, j * d + i)] = 1.0;
        }
    }
    m
}

/// Projectors `(π₀, π₁) = ((𝟙+π)/2, (𝟙−π)/2)` onto the symmetric and
/// antisymmetric subspaces.
pub fn projectors(d: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let id = DMatrix::identity(d * d, d * d);
    let swap = swap_operator(d);
    ((&id + &swap) * 0.5, (&id - &swap) * 0.5)
}

/// Normalized `(σ₀, σ₁)`.
pub fn werner_components(d: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_local_dim(d)?;
    let (pi0, pi1) = projectors(d);
    let t0 = pi0.trace();
    let t1 = pi1.trace();
    Ok((pi0 / t0, pi1 / t1))
}

fn check_local_dim(d: usize) -> Result<()> {
    if d > MAX_DENSE_D {
        return Err(Error::SizeGuard(format!(
            "dense oracle supports d <= {MAX_DENSE_D}, got {d}"
        )));
    }
    Ok(())
}

/// `σ(p) = p·σ₁ + (1−p)·σ₀` on one copy.
pub fn build_werner(params: &WernerParams) -> Result<DenseState> {
    let d = params.d();
    let (s0, s1) = werner_components(d)?;
    let p = params.p();
    DenseState::new(s1 * p + s0 * (1.0 - p), vec![d, d])
}

/// Transposes every tensor factor `k` with `mask[k]` set.
pub fn partial_transpose(m: &DMatrix<f64>, dims: &[usize], mask: &[bool]) -> Result<DMatrix<f64>> {
    let dim: usize = dims.iter().product();
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: m.nrows(),
        });
    }
    if mask.len() != dims.len() {
        return Err(Error::DimensionMismatch {
            expected: dims.len(),
            got: mask.len(),
        });
    }
    // stride of each factor in the row-major multi-index
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let mut out = DMatrix::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            let (mut r2, mut c2) = (r, c);
            for k in 0..dims.len() {
                if !mask[k] {
                    continue;
                }
                let ri = (r / strides[k]) % dims[k];
                let ci = (c / strides[k]) % dims[k];
                r2 = r2 - ri * strides[k] + ci * strides[k];
                c2 = c2 - ci * strides[k] + ri * strides[k];
            }
            out[(r2, c2)] = m[(r, c)];
        }
    }
    Ok(out)
}

/// `S(σ‖ρ) = tr σ lg σ − tr σ lg ρ` in bits, `+∞` when `σ` has weight above
/// [`EIGEN_CUTOFF`] outside the support of `ρ`.
pub fn relative_entropy_dense(sigma: &DenseState, rho: &DenseState) -> Result<f64> {
    if sigma.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: sigma.dim(),
            got: rho.dim(),
        });
    }
    let es = SymmetricEigen::new(sigma.matrix.clone());
    let er = SymmetricEigen::new(rho.matrix.clone());
    // squared overlaps between the two eigenbases
    let overlap = es.eigenvectors.transpose() * &er.eigenvectors;
    let mut entropy = 0.0;
    let mut cross = 0.0;
    let mut leak = 0.0;
    for (i, &l) in es.eigenvalues.iter().enumerate() {
        if l <= EIGEN_CUTOFF {
            continue;
        }
        entropy += l * l.log2();
        for (j, &m) in er.eigenvalues.iter().enumerate() {
            let w = l * overlap[(i, j)].powi(2);
            if m > EIGEN_CUTOFF {
                cross += w * m.log2();
            } else {
                leak += w;
            }
        }
    }
    if leak > EIGEN_CUTOFF {
        return Ok(f64::INFINITY);
    }
    Ok(entropy - cross)
}

/// `lg ‖ρ^Γ‖₁`.
pub fn log_negativity(state: &DenseState) -> Result<f64> {
    let pt = state.partial_transpose()?;
    let norm: f64 = pt.symmetric_eigenvalues().iter().map(|v| v.abs()).sum();
    Ok(norm.log2())
}

fn check_copies(d: usize, n: usize) -> Result<()> {
    check_local_dim(d)?;
    let too_big = (0..2 * n).try_fold(1usize, |acc, _| acc.checked_mul(d).filter(|&v| v < MAX_DENSE_DIM));
    if n == 0 || too_big.is_none() {
        return Err(Error::SizeGuard(format!(
            "d^(2n) must be below {MAX_DENSE_DIM} (d = {d}, n = {n})"
        )));
    }
    Ok(())
}

/// `η = Σ_f χ_{#f} · σ_{f₁} ⊗ … ⊗ σ_{fₙ}`, where digit 0 selects `σ₁` and
/// digit 1 selects `σ₀`.
pub fn typeclass_to_dense(chi: &TypeClassVector, params: &WernerParams, n: usize) -> Result<DenseState> {
    if chi.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: chi.n(),
        });
    }
    let d = params.d();
    check_copies(d, n)?;
    let (s0, s1) = werner_components(d)?;
    let dim = (d * d).pow(n as u32);
    let mut eta = DMatrix::zeros(dim, dim);
    for f in 0..1usize << n {
        let x = chi.at_string(f);
        if x == 0.0 {
            continue;
        }
        let mut term = DMatrix::from_element(1, 1, x);
        for i in 0..n {
            let factor = if f >> i & 1 == 1 { &s0 } else { &s1 };
            term = term.kronecker(factor);
        }
        eta += term;
    }
    DenseState::new(eta, vec![d; 2 * n])
}

/// `σ(p)^⊗n`.
pub fn werner_power(params: &WernerParams, n: usize) -> Result<DenseState> {
    let chi = crate::symmetric::kron_power_vec(params.p(), 1.0 - params.p(), n);
    typeclass_to_dense(&chi, params, n)
}

/// `M^⊗n` for a square matrix.
pub fn kron_power(m: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let mut out = DMatrix::from_element(1, 1, 1.0);
    for _ in 0..n {
        out = out.kronecker(m);
    }
    out
}
