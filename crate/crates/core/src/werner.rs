//! Closed-form analytics for Werner states
//! `σ(p) = p·π₁/tr π₁ + (1−p)·π₀/tr π₀` on `ℂ^d ⊗ ℂ^d`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Local dimension `d` and antisymmetric weight `p` of a Werner state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WernerParams {
    d: usize,
    p: f64,
}

impl WernerParams {
    pub fn new(d: usize, p: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::Domain(format!("local dimension d = {d} must be >= 2")));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("weight p = {p} must lie in [0, 1]")));
        }
        Ok(Self { d, p })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `tr π₀ = d(d+1)/2`, the symmetric-subspace dimension.
    pub fn trace_symmetric(&self) -> usize {
        self.d * (self.d + 1) / 2
    }

    /// `tr π₁ = d(d−1)/2`, the antisymmetric-subspace dimension.
    pub fn trace_antisymmetric(&self) -> usize {
        self.d * (self.d - 1) / 2
    }

    pub fn threshold(&self) -> f64 {
        threshold(self.d)
    }

    pub fn ppt_matrix(&self) -> PptMatrix {
        PptMatrix::new(self.d)
    }
}

/// The 2×2 matrix `T = [[−1, 1], [1, (d−1)/(d+1)]]` acting on
/// (σ₁ weight, σ₀ weight). A Werner mixture is PPT iff `T·(u, v)ᵀ ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PptMatrix {
    entries: [[f64; 2]; 2],
}

impl PptMatrix {
    pub fn new(d: usize) -> Self {
        let d = d as f64;
        Self {
            entries: [[-1.0, 1.0], [1.0, (d - 1.0) / (d + 1.0)]],
        }
    }

    pub fn entries(&self) -> [[f64; 2]; 2] {
        self.entries
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        let m = &self.entries;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }
}

/// Which closed-form expression [`asymptotic_ree`] used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `p ≤ 1/2`: the state is PPT.
    Zero,
    /// `1/2 < p ≤ p′`: `1 − H(p)`.
    Entropic,
    /// `p > p′`: linear in `p`.
    Linear,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Zero => "zero",
            Branch::Entropic => "entropic",
            Branch::Linear => "linear",
        }
    }
}

/// `x·lg x` with `0·lg 0 = 0`.
pub(crate) fn xlgx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// Binary Shannon entropy in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("binary entropy argument {p} outside [0, 1]")));
    }
    Ok(-xlgx(p) - xlgx(1.0 - p))
}

/// Regime boundary `p′ = (d+2)/(2d)`.
pub fn threshold(d: usize) -> f64 {
    let d = d as f64;
    (d + 2.0) / (2.0 * d)
}

/// The linear expression `lg((d+2)/d) + (1−p)·lg((d−2)/(d+2))`. Requires `d ≥ 3`.
pub fn linear_branch(d: usize, p: f64) -> f64 {
    let d = d as f64;
    ((d + 2.0) / d).log2() + (1.0 - p) * ((d - 2.0) / (d + 2.0)).log2()
}

/// The entropic expression `1 − H(p)`.
pub fn entropic_branch(p: f64) -> f64 {
    1.0 - (-xlgx(p) - xlgx(1.0 - p))
}

/// Regime of the asymptotic formula at `params`.
pub fn branch(params: &WernerParams) -> Branch {
    let p = params.p();
    if p <= 0.5 {
        Branch::Zero
    } else if params.d() == 2 || p <= params.threshold() {
        Branch::Entropic
    } else {
        Branch::Linear
    }
}

/// Asymptotic relative entropy of entanglement (per copy, bits).
///
/// Returns 0 for `p ≤ 1/2`, where `σ(p)` is itself PPT. For `d = 2` the
/// threshold is 1, so the linear branch (which has a `lg(d−2)` term) is
/// never reached.
pub fn asymptotic_ree(params: &WernerParams) -> f64 {
    asymptotic_ree_with_branch(params).0
}

pub fn asymptotic_ree_with_branch(params: &WernerParams) -> (f64, Branch) {
    let b = branch(params);
    let value = match b {
        Branch::Zero => 0.0,
        Branch::Entropic => entropic_branch(params.p()),
        Branch::Linear => linear_branch(params.d(), params.p()),
    };
    (value, b)
}

/// Single-copy PPT test: both components of `T·(p, 1−p)ᵀ` are nonnegative.
pub fn single_copy_ppt(params: &WernerParams) -> bool {
    let y = params.ppt_matrix().apply([params.p(), 1.0 - params.p()]);
    y[0] >= 0.0 && y[1] >= 0.0
}
