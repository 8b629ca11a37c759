//! Permutation-symmetric vectors over `{0,1}^n`.
//!
//! A vector indexed by bit strings that only depends on the number of ones
//! is stored as `n+1` type-class values. Type `a` holds the value shared by
//! all strings with `a` ones, and has multiplicity `C(n, a)`.
//!
//! Digit convention: digit 0 selects the *first* component of a two-vector
//! (the σ₁ weight), digit 1 the *second* (the σ₀ weight). So `(u, v)^⊗n`
//! has type values `u^{n−a}·v^a`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `n` for which every `C(n, k)` is computed in exact integer arithmetic.
pub const MAX_EXACT_BINOMIAL_N: usize = 60;

/// Exact binomial coefficient, `n ≤ 60`.
pub fn binomial(n: usize, k: usize) -> Result<u64> {
    if n > MAX_EXACT_BINOMIAL_N {
        return Err(Error::BinomialOverflow {
            n,
            k,
            max: MAX_EXACT_BINOMIAL_N,
        });
    }
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    // each partial product C(n-k+i, i) is an integer, and for n ≤ 60 the
    // intermediate `acc * (n-k+i)` stays below 2^128
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc * (n - k + i) as u128 / i as u128;
    }
    Ok(acc as u64)
}

/// `[C(n, 0), …, C(n, n)]` as floats.
pub fn binomial_row(n: usize) -> Result<Vec<f64>> {
    (0..=n).map(|k| binomial(n, k).map(|c| c as f64)).collect()
}

/// `[lg C(n, 0), …, lg C(n, n)]`.
///
/// Exact (up to the final logarithm) for `n ≤ 60`; beyond that the row is
/// accumulated from the ratio recurrence and carries `O(n·ε)` relative error.
pub fn lg_binomial_row(n: usize) -> Vec<f64> {
    if let Ok(row) = binomial_row(n) {
        return row.into_iter().map(f64::log2).collect();
    }
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(acc);
    for k in 0..n {
        acc += ((n - k) as f64).log2() - ((k + 1) as f64).log2();
        out.push(acc);
    }
    // symmetrize to kill drift in the upper half
    for k in 0..=n / 2 {
        out[n - k] = out[k];
    }
    out
}

/// `lg(2^a + 2^b)` without overflow; `-inf` entries are handled.
pub fn lg_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp2().ln_1p() / std::f64::consts::LN_2
}

/// `lg Σ 2^{xᵢ}`.
pub fn lg_sum(xs: &[f64]) -> f64 {
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + xs.iter().map(|x| (x - hi).exp2()).sum::<f64>().log2()
}

/// A permutation-symmetric vector over `{0,1}^n` in type-class form.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeClassVector {
    values: Vec<f64>,
}

impl TypeClassVector {
    /// Wraps `n+1` type values. Panics on an empty slice.
    pub fn new(values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "type-class vector needs at least one entry");
        Self { values }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![0.0; n + 1])
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self::new(vec![value; n + 1])
    }

    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, a: usize) -> f64 {
        self.values[a]
    }

    /// Sum over all `2^n` strings, i.e. `Σ_a C(n,a)·values[a]`.
    pub fn full_sum(&self) -> Result<f64> {
        let c = binomial_row(self.n())?;
        Ok(c.iter().zip(&self.values).map(|(c, v)| c * v).sum())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.values.iter().map(|v| v * s).collect())
    }

    /// `α·self + β·other`.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        check_n(self.n(), other.n())?;
        Ok(Self::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| alpha * x + beta * y)
                .collect(),
        ))
    }

    /// Value at a full bit-string index `f ∈ [0, 2^n)`.
    pub fn at_string(&self, f: usize) -> f64 {
        self.values[f.count_ones() as usize]
    }

    /// Expands to the full `2^n` vector. Only sensible for small `n`.
    pub fn expand(&self) -> Vec<f64> {
        (0..1usize << self.n()).map(|f| self.at_string(f)).collect()
    }
}

// serialized as a plain array
impl Serialize for TypeClassVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.values().serialize(s)
    }
}

impl<'de> Deserialize<'de> for TypeClassVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        if v.is_empty() {
            return Err(serde::de::Error::custom("empty type-class vector"));
        }
        Ok(TypeClassVector::new(v))
    }
}

fn check_n(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            expected: expected + 1,
            got: got + 1,
        });
    }
    Ok(())
}

/// Type-class form of `(first, second)^⊗n`: `values[a] = first^{n−a}·second^a`.
pub fn kron_power_vec(first: f64, second: f64, n: usize) -> TypeClassVector {
    TypeClassVector::new(
        (0..=n)
            .map(|a| first.powi((n - a) as i32) * second.powi(a as i32))
            .collect(),
    )
}

/// Base-2 logarithms of [`kron_power_vec`]: `(n−a)·lg first + a·lg second`.
/// Zero weights give `-inf` where they actually appear.
pub fn log_kron_power_vec(first: f64, second: f64, n: usize) -> Result<TypeClassVector> {
    if !(first > 0.0 && second > 0.0) {
        return Err(Error::Domain(format!(
            "log Kronecker power needs positive components, got ({first}, {second})"
        )));
    }
    Ok(lg_kron_power_nonneg(first, second, n))
}

/// Like [`log_kron_power_vec`] but accepts zero components (`lg 0 = -inf`,
/// with `0^0 = 1`).
pub(crate) fn lg_kron_power_nonneg(first: f64, second: f64, n: usize) -> TypeClassVector {
    let term = |base: f64, k: usize| if k == 0 { 0.0 } else { k as f64 * base.log2() };
    TypeClassVector::new((0..=n).map(|a| term(first, n - a) + term(second, a)).collect())
}

/// The `(n+1)×(n+1)` action of `M^⊗n` on type-class vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedKronecker {
    n: usize,
    base: [[f64; 2]; 2],
    /// row-major, `k[b * (n+1) + a]`
    k: Vec<f64>,
}

impl ReducedKronecker {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn base(&self) -> [[f64; 2]; 2] {
        self.base
    }

    pub fn entry(&self, b: usize, a: usize) -> f64 {
        self.k[b * (self.n + 1) + a]
    }

    pub fn row(&self, b: usize) -> &[f64] {
        let m = self.n + 1;
        &self.k[b * m..(b + 1) * m]
    }

    /// `y[b] = Σ_a K[b][a]·χ[a]`.
    pub fn apply(&self, chi: &TypeClassVector) -> Result<TypeClassVector> {
        check_n(self.n, chi.n())?;
        Ok(TypeClassVector::new(
            (0..=self.n)
                .map(|b| dot2(self.row(b), chi.values()))
                .collect(),
        ))
    }

    /// `Kᵀ·v` on raw slices.
    pub(crate) fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        let m = self.n + 1;
        let mut out = vec![0.0; m];
        for (b, vb) in v.iter().enumerate() {
            for (o, k) in out.iter_mut().zip(self.row(b)) {
                *o += k * vb;
            }
        }
        out
    }
}

/// Dot product in twice the working precision (Ogita, Rump and Oishi).
/// Active PPT constraints sit many orders of magnitude below the terms
/// that cancel to produce them.
pub(crate) fn dot2(x: &[f64], y: &[f64]) -> f64 {
    let mut hi = 0.0f64;
    let mut lo = 0.0f64;
    for (a, b) in x.iter().zip(y) {
        let h = a * b;
        let r = a.mul_add(*b, -h);
        let t = hi + h;
        let z = t - hi;
        let q = (hi - (t - z)) + (h - z);
        hi = t;
        lo += q + r;
    }
    hi + lo
}

/// Builds the reduced matrix of `M^⊗n` by the overlap sum
///
/// `K[b][a] = Σ_s C(b,s)·C(n−b,a−s)·M₁₁^s·M₁₀^{b−s}·M₀₁^{a−s}·M₀₀^{n−b−a+s}`,
///
/// where `s` counts positions that are one in both the row string (`b` ones)
/// and the column string (`a` ones).
pub fn reduce_kron_matrix(m: [[f64; 2]; 2], n: usize) -> Result<ReducedKronecker> {
    if n == 0 {
        return Err(Error::Domain("Kronecker power needs n >= 1".into()));
    }
    if n > MAX_EXACT_BINOMIAL_N {
        return Err(Error::BinomialOverflow {
            n,
            k: n / 2,
            max: MAX_EXACT_BINOMIAL_N,
        });
    }
    let dim = n + 1;
    let mut k = vec![0.0; dim * dim];
    let pw = |x: f64, e: usize| x.powi(e as i32);
    for b in 0..=n {
        for a in 0..=n {
            let lo = (a + b).saturating_sub(n);
            let hi = a.min(b);
            let mut acc = 0.0;
            for s in lo..=hi {
                let mult = binomial(b, s)? as f64 * binomial(n - b, a - s)? as f64;
                acc += mult
                    * pw(m[1][1], s)
                    * pw(m[1][0], b - s)
                    * pw(m[0][1], a - s)
                    * pw(m[0][0], n + s - a - b);
            }
            k[b * dim + a] = acc;
        }
    }
    Ok(ReducedKronecker { n, base: m, k })
}
