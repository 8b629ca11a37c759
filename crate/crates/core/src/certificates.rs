//! Analytic bounds on `E_R(σ(p)^⊗n)/n`.
//!
//! Upper bounds come from explicit PPT trial states `η` built as mixtures
//! of two Kronecker-power profiles; lower bounds from explicit dual
//! feasible points `(λ, ν)` of the Lagrange dual
//!
//! ```txt
//!   g(λ, ν) = (1 + ln(n ln2))/(n ln2) + (1/n)·Σ_a w_a·lg μ_a − ν,
//!   μ_a = ν − (K·λ)_a,
//! ```
//!
//! with `w_a = C(n,a)·p^{n−a}(1−p)^a`. Any `λ ≥ 0` with `μ ≥ 0` gives
//! `g ≤ E_R(σ(p)^⊗n)/n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{type_weights, PrimalSolution, ReducedProblem, ToleranceSet};
use crate::symmetric::{
    binomial, lg_add, lg_binomial_row, lg_kron_power_nonneg, lg_sum, reduce_kron_matrix,
    TypeClassVector,
};
use crate::werner::{binary_entropy, entropic_branch, linear_branch, WernerParams};

const LN2: f64 = std::f64::consts::LN_2;

/// Mixture `Σᵢ wᵢ·(1−aᵢ, aᵢ)^⊗n` of two product profiles, where `1−aᵢ` is
/// the σ₁ weight and `aᵢ` the σ₀ weight of each copy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialState {
    pub n: usize,
    /// `lg wᵢ` (`-inf` for an absent component)
    pub lg_weights: [f64; 2],
    pub profiles: [f64; 2],
    /// `(d + 2 − 4a₁)/d` for the two-component construction
    pub z: Option<f64>,
}

impl TrialState {
    pub fn weights(&self) -> [f64; 2] {
        [self.lg_weights[0].exp2(), self.lg_weights[1].exp2()]
    }

    /// `lg χ_a` evaluated as a log-sum-exp over the two components.
    pub fn lg_chi(&self) -> Vec<f64> {
        let parts: Vec<TypeClassVector> = self
            .profiles
            .iter()
            .map(|&a| lg_kron_power_nonneg(1.0 - a, a, self.n))
            .collect();
        (0..=self.n)
            .map(|k| {
                lg_add(
                    self.lg_weights[0] + parts[0].get(k),
                    self.lg_weights[1] + parts[1].get(k),
                )
            })
            .collect()
    }

    pub fn chi(&self) -> TypeClassVector {
        TypeClassVector::new(self.lg_chi().into_iter().map(f64::exp2).collect())
    }

    /// `y = K_T·χ` for local dimension `d`.
    pub fn ppt_image(&self, d: usize) -> Result<TypeClassVector> {
        let t = crate::werner::PptMatrix::new(d).entries();
        reduce_kron_matrix(t, self.n)?.apply(&self.chi())
    }

    /// `y_b` from the closed form `Σᵢ wᵢ·(2aᵢ−1)^{n−b}·(1 − 2aᵢ/(d+1))^b`.
    pub fn ppt_image_closed_form(&self, d: usize) -> TypeClassVector {
        let w = self.weights();
        let df = d as f64;
        TypeClassVector::new(
            (0..=self.n)
                .map(|b| {
                    (0..2)
                        .filter(|&i| w[i] > 0.0)
                        .map(|i| {
                            let a = self.profiles[i];
                            w[i] * (2.0 * a - 1.0).powi((self.n - b) as i32)
                                * (1.0 - 2.0 * a / (df + 1.0)).powi(b as i32)
                        })
                        .sum()
                })
                .collect(),
        )
    }
}

/// Uniform trial `χ_a = 2^{−n}`: `w₁ = 0`, `a₂ = 1/2`.
pub fn trial_regime1(n: usize) -> TrialState {
    TrialState {
        n,
        lg_weights: [f64::NEG_INFINITY, 0.0],
        profiles: [0.5, 0.5],
        z: None,
    }
}

/// Profile parameters `(a₁, a₂, z)` of the two-component trial for `p > p′`.
pub fn regime2_profiles(params: &WernerParams) -> Result<(f64, f64, f64)> {
    check_regime2(params)?;
    let d = params.d() as f64;
    let p = params.p();
    let a1 = (d + 2.0) * (1.0 - p) / (d + 2.0 - 4.0 * p);
    let a2 = (1.0 + d - (d + 2.0) * a1) / (d + 2.0 - 4.0 * a1);
    let z = (d + 2.0 - 4.0 * a1) / d;
    Ok((a1, a2, z))
}

/// Two-component trial for `p > p′` with `w₁ = 1/(1 + zⁿ)`.
pub fn trial_regime2(params: &WernerParams, n: usize) -> Result<TrialState> {
    let (a1, a2, z) = regime2_profiles(params)?;
    let lg_w1 = -lg_add(0.0, n as f64 * z.log2());
    let lg_w2 = n as f64 * z.log2() + lg_w1;
    Ok(TrialState {
        n,
        lg_weights: [lg_w1, lg_w2],
        profiles: [a1, a2],
        z: Some(z),
    })
}

fn check_regime2(params: &WernerParams) -> Result<()> {
    if params.d() < 3 || params.p() <= params.threshold() {
        return Err(Error::Regime(format!(
            "second regime needs d >= 3 and p > (d+2)/(2d), got d = {}, p = {}",
            params.d(),
            params.p()
        )));
    }
    Ok(())
}

/// `lg W_a` for `W_a = C(n,a)·p^{n−a}(1−p)^a`, valid for any `n`.
fn lg_type_weights(p: f64, n: usize) -> Vec<f64> {
    let lg_z = lg_kron_power_nonneg(p, 1.0 - p, n);
    lg_binomial_row(n)
        .iter()
        .zip(lg_z.values())
        .map(|(c, z)| c + z)
        .collect()
}

/// Exact finite-`n` relative entropy `S(σ(p)^⊗n ‖ η)/n` of a trial state.
pub fn finite_upper(trial: &TrialState, params: &WernerParams) -> f64 {
    let n = trial.n;
    let lg_chi = trial.lg_chi();
    let s: f64 = lg_type_weights(params.p(), n)
        .iter()
        .zip(&lg_chi)
        .filter(|(lw, _)| **lw > f64::NEG_INFINITY)
        .map(|(lw, lx)| lw.exp2() * lx)
        .sum();
    let h = binary_entropy(params.p()).expect("validated p");
    -h - s / n as f64
}

/// Limiting rates of the two-component trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRates {
    pub t1: f64,
    pub t2: f64,
    pub q1: f64,
    pub q2: f64,
}

impl AsymptoticRates {
    pub fn new(params: &WernerParams) -> Result<Self> {
        check_regime2(params)?;
        let d = params.d() as f64;
        let p = params.p();
        let base = d * d * p - d - 2.0;
        if base < 0.0 {
            return Err(Error::Domain(format!("d²p − d − 2 = {base} < 0")));
        }
        // x^x with 0^0 = 1
        let self_pow = |x: f64| if x == 0.0 { 1.0 } else { x.powf(x) };
        Ok(Self {
            t1: d * (d - 2.0).powf(p) * (d + 2.0).powf(1.0 - p) * self_pow(1.0 - p) * self_pow(p),
            t2: (d - 2.0 + d * d * (1.0 - p)).powf(p) * base.powf(1.0 - p),
            q1: d * d - 4.0,
            q2: d * (d + 2.0 - 4.0 * p),
        })
    }

    /// `−H(p) − lg(max(t₁,t₂)/max(q₁,q₂))`.
    pub fn bound(&self, p: f64) -> f64 {
        let h = binary_entropy(p).expect("validated p");
        -h - (self.t1.max(self.t2) / self.q1.max(self.q2)).log2()
    }
}

/// Limit of the two-component trial bound as `n → ∞`.
pub fn asymptotic_upper(params: &WernerParams) -> Result<f64> {
    Ok(AsymptoticRates::new(params)?.bound(params.p()))
}

/// The simplified form `lg((d−2)/d) + p·lg((d+2)/(d−2))` of the limit.
pub fn asymptotic_upper_simplified(params: &WernerParams) -> Result<f64> {
    check_regime2(params)?;
    let d = params.d() as f64;
    Ok(((d - 2.0) / d).log2() + params.p() * ((d + 2.0) / (d - 2.0)).log2())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPoint {
    pub n: usize,
    pub nu: f64,
    pub lambda: TypeClassVector,
    pub mu: TypeClassVector,
    /// dual value, bits; `-inf` when infeasible
    pub g: f64,
    pub feasible: bool,
}

/// `(1 + ln(n ln2))/(n ln2) + (1/n)·Σ_a w_a·lg μ_a − ν` from `lg μ`.
///
/// Entries with `w_a = 0` only need `μ_a ≥ 0` and contribute nothing.
/// Returns `-inf` if some `μ_a` is out of the domain.
pub fn dual_value(weights: &[f64], lg_mu: &[f64], nu: f64) -> f64 {
    let n = (weights.len() - 1) as f64;
    let mut s = 0.0;
    for (w, lm) in weights.iter().zip(lg_mu) {
        if lm.is_nan() {
            return f64::NEG_INFINITY;
        }
        if *w > 0.0 {
            if *lm == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            s += w * lm;
        }
    }
    (1.0 + (n * LN2).ln()) / (n * LN2) + s / n - nu
}

fn lg_signed(x: f64) -> f64 {
    if x > 0.0 {
        x.log2()
    } else if x == 0.0 {
        f64::NEG_INFINITY
    } else {
        f64::NAN
    }
}

/// Evaluates the dual function at an arbitrary `(λ, ν)`.
pub fn eval_dual(
    params: &WernerParams,
    n: usize,
    lambda: &TypeClassVector,
    nu: f64,
) -> Result<DualPoint> {
    let kron = reduce_kron_matrix(params.ppt_matrix().entries(), n)?;
    let k_lambda = kron.apply(lambda)?;
    let mu = TypeClassVector::new(k_lambda.values().iter().map(|kl| nu - kl).collect());
    let weights = type_weights(params.p(), n);
    let lg_mu: Vec<f64> = mu.values().iter().map(|&m| lg_signed(m)).collect();
    let lambda_ok = lambda.values().iter().all(|&l| l >= 0.0);
    let g = if lambda_ok {
        dual_value(weights.values(), &lg_mu, nu)
    } else {
        f64::NEG_INFINITY
    };
    Ok(DualPoint {
        n,
        nu,
        lambda: lambda.clone(),
        mu,
        g,
        feasible: g > f64::NEG_INFINITY,
    })
}

/// `lg λ_a` for `λ = (ν/dⁿ)·[(1, d+1)^⊗n − (s, d+1)^⊗n]`,
/// i.e. `λ_a = ν·(d+1)^a·(1 − s^{n−a})/dⁿ`; zero entries map to `-inf`.
///
/// The bracket is evaluated with its sign tracked, and `(d+1)^a/dⁿ` only in
/// the log domain, so any `n` is fine. Requires `|s| ≤ 1`, which is what
/// makes every entry nonnegative.
pub fn lg_lambda_profile(d: usize, s: f64, n: usize) -> Result<Vec<f64>> {
    if !(s.abs() <= 1.0 + 1e-12) {
        return Err(Error::Regime(format!(
            "dual profile parameter {s} outside [-1, 1]; lambda would be negative"
        )));
    }
    let s = s.clamp(-1.0, 1.0);
    let nu = 1.0 / (n as f64 * LN2);
    let lg_env = nu.log2() - n as f64 * (d as f64).log2();
    let lg_d1 = (d as f64 + 1.0).log2();
    Ok((0..=n)
        .map(|a| {
            let k = n - a;
            let bracket = if k == 0 {
                0.0
            } else if s == 0.0 {
                1.0
            } else {
                let mag = k as f64 * s.abs().ln();
                if s < 0.0 && k % 2 == 1 {
                    1.0 + mag.exp()
                } else {
                    -mag.exp_m1()
                }
            };
            if bracket <= 0.0 {
                f64::NEG_INFINITY
            } else {
                lg_env + a as f64 * lg_d1 + bracket.log2()
            }
        })
        .collect())
}

fn analytic_point(
    params: &WernerParams,
    n: usize,
    s: f64,
    lg_mu: Vec<f64>,
) -> Result<DualPoint> {
    if n == 0 {
        return Err(Error::Domain("dual point needs n >= 1".into()));
    }
    let nu = 1.0 / (n as f64 * LN2);
    let lambda = TypeClassVector::new(
        lg_lambda_profile(params.d(), s, n)?
            .into_iter()
            .map(f64::exp2)
            .collect(),
    );
    let weights = type_weights(params.p(), n);
    let g = dual_value(weights.values(), &lg_mu, nu);
    Ok(DualPoint {
        n,
        nu,
        lambda,
        mu: TypeClassVector::new(lg_mu.iter().map(|l| l.exp2()).collect()),
        g,
        feasible: g > f64::NEG_INFINITY,
    })
}

/// Dual point for `1/2 ≤ p ≤ p′`, `ν = 1/(n ln2)`, profile `s = d+1−2dp`.
/// `μ_a = ν·2ⁿ·p^{n−a}(1−p)^a` and `g = 1 − H(p)` for every `n`.
pub fn dual_point_regime1(params: &WernerParams, n: usize) -> Result<DualPoint> {
    let (d, p) = (params.d(), params.p());
    if p < 0.5 || p > params.threshold() {
        return Err(Error::Regime(format!(
            "first-regime dual point needs 1/2 <= p <= (d+2)/(2d), got d = {d}, p = {p}"
        )));
    }
    let s = d as f64 + 1.0 - 2.0 * d as f64 * p;
    let lg_nu = (1.0 / (n as f64 * LN2)).log2();
    let lg_mu = lg_kron_power_nonneg(p, 1.0 - p, n)
        .into_values()
        .into_iter()
        .map(|lz| lg_nu + n as f64 + lz)
        .collect();
    analytic_point(params, n, s, lg_mu)
}

/// Dual point for `p > p′`: the first-regime point at `p′`, profile `s = −1`.
/// `μ_a = ν·(d+2)^{n−a}(d−2)^a/dⁿ` and
/// `g = lg((d+2)/d) + (1−p)·lg((d−2)/(d+2))` for every `n`.
pub fn dual_point_regime2(params: &WernerParams, n: usize) -> Result<DualPoint> {
    check_regime2(params)?;
    let d = params.d() as f64;
    let lg_nu = (1.0 / (n as f64 * LN2)).log2();
    let lg_mu = (0..=n)
        .map(|a| {
            lg_nu + (n - a) as f64 * (d + 2.0).log2() + a as f64 * (d - 2.0).log2()
                - n as f64 * d.log2()
        })
        .collect();
    analytic_point(params, n, -1.0, lg_mu)
}

/// Maximizes `g(λ, ·)` over `ν` for fixed `λ` by bisection on the
/// stationarity condition `Σ_a w_a/(ν − s_a) = n ln2`, `s = K·λ`.
fn best_nu(weights: &[f64], k_lambda: &[f64]) -> f64 {
    let n = (weights.len() - 1) as f64;
    let target = n * LN2;
    let floor_all = k_lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor = weights
        .iter()
        .zip(k_lambda)
        .filter(|(w, _)| **w > 0.0)
        .map(|(_, s)| *s)
        .fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = weights.iter().sum();
    let slope = |nu: f64| -> f64 {
        weights
            .iter()
            .zip(k_lambda)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, s)| w / (nu - s))
            .sum::<f64>()
            - target
    };
    // slope > 0 just above the floor, <= 0 at `hi`
    let mut lo = floor;
    let mut hi = floor + total / target;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi.max(floor_all)
}

/// Recovers a dual certificate from the solver's barrier multipliers,
/// fills in `solution.gap`, and fails if the gap exceeds `tol.gap`.
/// Every stage's estimate gives a valid lower bound; the largest is kept.
///
/// Reduced multipliers `κ_b` on `(Kχ)_b ≥ 0` stand for `C(n,b)` identical
/// per-string multipliers, so `λ_b = κ_b/C(n,b)`. `ν` is then chosen to
/// maximize `g(λ, ν)`.
pub fn extract_dual(
    problem: &ReducedProblem,
    solution: &mut PrimalSolution,
    tol: &ToleranceSet,
) -> Result<DualPoint> {
    let mut best: Option<DualPoint> = None;
    let candidates = solution
        .stage_multipliers
        .iter()
        .chain(std::iter::once(&solution.ppt_multipliers));
    for kappa in candidates {
        let point = dual_from_multipliers(problem, kappa)?;
        if best.as_ref().is_none_or(|b| point.g > b.g) {
            best = Some(point);
        }
    }
    let point = best.ok_or_else(|| Error::NumericalBreakdown("no multiplier estimates".into()))?;
    let gap = solution.value - point.g;
    solution.gap = Some(gap);
    if !(gap <= tol.gap) {
        return Err(Error::CertificationFailure { gap, tol: tol.gap });
    }
    Ok(point)
}

fn dual_from_multipliers(problem: &ReducedProblem, kappa: &[f64]) -> Result<DualPoint> {
    let n = problem.n();
    let lambda = TypeClassVector::new(
        kappa
            .iter()
            .enumerate()
            .map(|(b, k)| Ok(k.max(0.0) / binomial(n, b)? as f64))
            .collect::<Result<Vec<f64>>>()?,
    );
    let k_lambda = problem.kron().apply(&lambda)?;
    let nu = best_nu(problem.weights().values(), k_lambda.values());
    eval_dual(problem.params(), n, &lambda, nu)
}

/// Best closed-form bracket `[lower, upper]` on `E_R(σ(p)^⊗n)/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticBracket {
    pub lower: f64,
    pub upper: f64,
    /// upper bound attained by the two-component trial, if applicable
    pub trial2_upper: Option<f64>,
    /// whether the two-component trial passed the reduced PPT check
    /// (`None` if not built or `n` too large to check)
    pub trial2_feasible: Option<bool>,
}

/// Combines the analytic trial states and dual points valid at `params`.
pub fn analytic_bracket(params: &WernerParams, n: usize) -> Result<AnalyticBracket> {
    let p = params.p();
    if p <= 0.5 {
        // σ(p) is PPT: η = σ(p)^⊗n gives 0, and λ = 0 gives g = 0
        return Ok(AnalyticBracket {
            lower: 0.0,
            upper: 0.0,
            trial2_upper: None,
            trial2_feasible: None,
        });
    }
    let one_copy = entropic_branch(p);
    if p <= params.threshold() {
        let dual = dual_point_regime1(params, n)?;
        return Ok(AnalyticBracket {
            lower: dual.g,
            upper: finite_upper(&trial_regime1(n), params).min(one_copy),
            trial2_upper: None,
            trial2_feasible: None,
        });
    }
    let dual = dual_point_regime2(params, n)?;
    let trial = trial_regime2(params, n)?;
    let t2 = finite_upper(&trial, params);
    let feasible = if n <= crate::symmetric::MAX_EXACT_BINOMIAL_N {
        Some(trial.ppt_image(params.d())?.min() >= -1e-12)
    } else {
        None
    };
    let upper = match feasible {
        Some(false) => one_copy,
        _ => t2.min(one_copy),
    };
    Ok(AnalyticBracket {
        lower: dual.g.max(0.0),
        upper,
        trial2_upper: Some(t2),
        trial2_feasible: feasible,
    })
}

/// Closed form of the regime-2 dual value, for cross-checks.
pub fn regime2_closed_form(params: &WernerParams) -> f64 {
    linear_branch(params.d(), params.p())
}

/// `lg Σ_a 2^{lg W_a}`, exposed for checks that the log-domain weights are
/// normalized at large `n`.
pub fn lg_total_weight(p: f64, n: usize) -> f64 {
    lg_sum(&lg_type_weights(p, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{build_problem, objective, solve};
    use crate::werner::{asymptotic_ree, threshold};

    fn wp(d: usize, p: f64) -> WernerParams {
        WernerParams::new(d, p).unwrap()
    }

    const LOWER_D3_P09: f64 = 0.504_772_784_677_469_9;

    #[test]
    fn regime1_trial() {
        let t = trial_regime1(1);
        assert_eq!(t.chi().values(), &[0.5, 0.5]);
        for d in [2, 3, 7] {
            let y = t.ppt_image(d).unwrap();
            assert_eq!(y.get(0), 0.0);
            assert!((y.get(1) - d as f64 / (d as f64 + 1.0)).abs() < 1e-15);
        }
        let t3 = trial_regime1(3);
        assert_eq!(t3.chi().values(), &[0.125; 4]);
        for p in [0.55, 0.7, 0.9, 1.0] {
            let v = finite_upper(&t3, &wp(3, p));
            assert!((v - entropic_branch(p)).abs() < 1e-14);
        }
    }

    #[test]
    fn regime2_parameters() {
        let (a1, a2, z) = regime2_profiles(&wp(3, 0.9)).unwrap();
        assert!((a1 - 0.357_142_857_142_857_1).abs() < 1e-15);
        assert!((a2 - 0.62).abs() < 1e-15);
        assert!((z - 1.190_476_190_476_190_5).abs() < 1e-15);
        let (a1, a2, z) = regime2_profiles(&wp(3, 1.0)).unwrap();
        assert_eq!(a1, 0.0);
        assert!((a2 - 0.8).abs() < 1e-15);
        assert!((z - 5.0 / 3.0).abs() < 1e-15);
        assert!(trial_regime2(&wp(2, 0.99), 3).is_err());
        assert!(trial_regime2(&wp(3, 0.8), 3).is_err());
    }

    #[test]
    fn regime2_trial_is_feasible_and_normalized() {
        for d in 3..=20 {
            let pp = threshold(d);
            for i in 1..=10 {
                let p = pp + (1.0 - pp) * i as f64 / 10.0;
                for n in 1..=20 {
                    let t = trial_regime2(&wp(d, p), n).unwrap();
                    let chi = t.chi();
                    assert!(chi.min() >= 0.0);
                    assert!((chi.full_sum().unwrap() - 1.0).abs() < 1e-12);
                    let y = t.ppt_image(d).unwrap();
                    assert!(y.min() >= -1e-12, "d={d} p={p} n={n}: {}", y.min());
                    let yc = t.ppt_image_closed_form(d);
                    for (a, b) in y.values().iter().zip(yc.values()) {
                        assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()));
                    }
                }
            }
        }
    }

    #[test]
    fn finite_upper_matches_objective() {
        let params = wp(3, 0.9);
        let pr = build_problem(params, 4).unwrap();
        let t = trial_regime2(&params, 4).unwrap();
        let a = finite_upper(&t, &params);
        let b = objective(&pr, &t.chi()).unwrap();
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn finite_upper_decreases_to_limit() {
        let params = wp(3, 0.9);
        let limit = asymptotic_upper(&params).unwrap();
        let mut prev = f64::INFINITY;
        for n in (1..=200).chain([500, 1000, 5000]) {
            let v = finite_upper(&trial_regime2(&params, n).unwrap(), &params);
            assert!(v <= prev + 1e-12, "n={n}");
            assert!(v >= limit - 1e-12);
            prev = v;
        }
        assert!(prev - limit < 2e-3);
    }

    #[test]
    fn asymptotic_upper_values() {
        let v = asymptotic_upper(&wp(3, 0.9)).unwrap();
        assert!((v - LOWER_D3_P09).abs() < 1e-12);
        assert!((v - asymptotic_ree(&wp(3, 0.9))).abs() < 1e-12);
        let v = asymptotic_upper(&wp(3, 1.0)).unwrap();
        assert!((v - (5.0f64 / 3.0).log2()).abs() < 1e-12);
        let v = asymptotic_upper(&wp(10, 0.8)).unwrap();
        let expect = 1.2f64.log2() + 0.2 * (8.0f64 / 12.0).log2();
        assert!((v - expect).abs() < 1e-12);
        assert!(asymptotic_upper(&wp(3, 0.8)).is_err());
    }

    #[test]
    fn rates_dominate_above_threshold() {
        for d in 3..=40 {
            let pp = threshold(d);
            for i in 1..=100 {
                let p = pp + (1.0 - pp) * i as f64 / 100.0;
                let params = wp(d, p);
                let r = AsymptoticRates::new(&params).unwrap();
                assert!(r.t1 >= r.t2 * (1.0 - 1e-12), "d={d} p={p}");
                assert!(r.q1 >= r.q2);
                let a = r.bound(p);
                let b = asymptotic_upper_simplified(&params).unwrap();
                assert!((a - b).abs() < 1e-12);
                assert!((a - linear_branch(d, p)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_multiplier_point() {
        let params = wp(3, 0.8);
        for n in 1..=12 {
            let nu = 1.0 / (n as f64 * LN2);
            let dp = eval_dual(&params, n, &TypeClassVector::zeros(n), nu).unwrap();
            assert!(dp.feasible);
            assert!(dp.g.abs() < 1e-14, "n={n}: {}", dp.g);
        }
    }

    #[test]
    fn regime1_point_values() {
        let g = 0.349_977_578_351_645_8;
        for n in 1..=12 {
            let params = wp(3, 5.0 / 6.0);
            let dp = dual_point_regime1(&params, n).unwrap();
            assert!(dp.lambda.values().iter().all(|&l| l >= 0.0));
            assert!((dp.g - g).abs() < 1e-12);
            // constructive route through K
            let ev = eval_dual(&params, n, &dp.lambda, dp.nu).unwrap();
            assert!((ev.g - g).abs() < 1e-10, "n={n}: {}", ev.g);
            // regime-2 point coincides at the threshold
            let dp2 = dual_point_regime2(&wp(3, 5.0 / 6.0 + 1e-15), n).unwrap();
            assert!((dp2.g - dp.g).abs() < 1e-10);
        }
        let params = wp(3, 0.6);
        let dp = dual_point_regime1(&params, 5).unwrap();
        for a in 0..=5 {
            let expect = 32.0 * 0.6f64.powi(5 - a as i32) * 0.4f64.powi(a as i32);
            assert!((dp.mu.get(a) / dp.nu - expect).abs() < 1e-12);
        }
        assert!((dp.g - 0.029_049_405_545_331_36).abs() < 1e-12);
        let ev = eval_dual(&params, 5, &dp.lambda, dp.nu).unwrap();
        for a in 0..=5 {
            assert!((ev.mu.get(a) - dp.mu.get(a)).abs() < 1e-12 * dp.nu * 32.0);
        }
        assert!(dual_point_regime1(&wp(3, 0.9), 3).is_err());
        assert!(dual_point_regime1(&wp(3, 0.4), 3).is_err());
    }

    #[test]
    fn regime1_lambda_nonnegative_at_large_n() {
        for (d, p) in [(3, 0.6), (3, 5.0 / 6.0), (10, 0.6), (2, 0.99)] {
            for n in [1, 2, 3, 100, 1001, 10_000] {
                let lg = lg_lambda_profile(d, d as f64 + 1.0 - 2.0 * d as f64 * p, n).unwrap();
                // bracket ∈ [0, 2]: lg λ_a ≤ lg(2ν) + a·lg(d+1) − n·lg d
                let nu: f64 = 1.0 / (n as f64 * LN2);
                for (a, v) in lg.iter().enumerate() {
                    assert!(!v.is_nan());
                    let cap = (2.0 * nu).log2() + a as f64 * (d as f64 + 1.0).log2()
                        - n as f64 * (d as f64).log2();
                    assert!(*v <= cap + 1e-9);
                }
            }
        }
        assert!(lg_lambda_profile(3, -1.5, 4).is_err());
    }

    #[test]
    fn regime2_point_values() {
        let params = wp(3, 0.9);
        let dp = dual_point_regime2(&params, 7).unwrap();
        assert!((dp.g - LOWER_D3_P09).abs() < 1e-12);
        let ev = eval_dual(&params, 7, &dp.lambda, dp.nu).unwrap();
        assert!((ev.g - LOWER_D3_P09).abs() < 1e-10);
        let dp = dual_point_regime2(&wp(3, 1.0), 4).unwrap();
        assert!((dp.g - (5.0f64 / 3.0).log2()).abs() < 1e-12);
        let dp = dual_point_regime2(&wp(4, 0.9), 12).unwrap();
        for a in 0..=12 {
            let expect = 6f64.powi(12 - a as i32) * 2f64.powi(a as i32) / 4f64.powi(12);
            assert!(dp.mu.get(a) > 0.0);
            assert!((dp.mu.get(a) / dp.nu - expect).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn analytic_g_is_n_independent() {
        for d in [2, 3, 4, 10] {
            for p in [0.5, 0.55, 0.6, 0.75, 0.9, 1.0] {
                let params = wp(d, p);
                for n in 1..=20 {
                    if p <= threshold(d) {
                        let g = dual_point_regime1(&params, n).unwrap().g;
                        assert!((g - entropic_branch(p)).abs() < 1e-12, "d={d} p={p} n={n}");
                    } else {
                        let g = dual_point_regime2(&params, n).unwrap().g;
                        assert!((g - regime2_closed_form(&params)).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn regime1_lambda_is_locally_optimal() {
        for (params, n) in [(wp(3, 0.7), 4), (wp(4, 0.7), 3), (wp(2, 0.9), 5)] {
            let dp = dual_point_regime1(&params, n).unwrap();
            let base = eval_dual(&params, n, &dp.lambda, dp.nu).unwrap().g;
            for eps in [1e-3, -1e-3] {
                let lam = dp.lambda.scale(1.0 + eps);
                let moved = eval_dual(&params, n, &lam, dp.nu).unwrap();
                assert!(!moved.feasible || moved.g <= base + 1e-12);
            }
        }
    }

    #[test]
    fn regime2_point_is_below_the_finite_optimum() {
        // valid but not optimal at finite n: the solver's dual beats it
        let tol = ToleranceSet::default();
        for (params, n) in [(wp(3, 0.9), 3), (wp(3, 0.95), 6), (wp(5, 0.8), 4)] {
            let analytic = dual_point_regime2(&params, n).unwrap().g;
            let pr = build_problem(params, n).unwrap();
            let mut sol = solve(&pr, &tol).unwrap();
            let extracted = extract_dual(&pr, &mut sol, &tol).unwrap();
            assert!(analytic <= sol.value + 1e-12);
            assert!(extracted.g >= analytic - 1e-10);
        }
    }

    #[test]
    fn infeasible_points_get_minus_infinity() {
        let params = wp(3, 0.9);
        let dp = eval_dual(&params, 2, &TypeClassVector::new(vec![-1.0, 0.0, 0.0]), 1.0).unwrap();
        assert!(!dp.feasible && dp.g == f64::NEG_INFINITY);
        let dp = eval_dual(&params, 2, &TypeClassVector::zeros(2), -1.0).unwrap();
        assert!(!dp.feasible);
    }

    #[test]
    fn extraction_certifies_small_problems() {
        let tol = ToleranceSet::default();
        let params = wp(3, 0.6);
        let pr = build_problem(params, 1).unwrap();
        let mut sol = solve(&pr, &tol).unwrap();
        let dp = extract_dual(&pr, &mut sol, &tol).unwrap();
        assert!(sol.gap.unwrap() <= 1e-8);
        assert!(sol.gap.unwrap() >= -1e-10);
        let analytic = dual_point_regime1(&params, 1).unwrap();
        assert!(dp.g >= analytic.g - 1e-8);
    }

    #[test]
    fn extraction_certifies_up_to_twenty_copies() {
        let tol = ToleranceSet::default();
        let params = wp(3, 0.9);
        for n in [2, 5, 10, 15, 20] {
            let pr = build_problem(params, n).unwrap();
            let mut sol = solve(&pr, &tol).unwrap();
            let dp = extract_dual(&pr, &mut sol, &tol).unwrap();
            assert!(dp.feasible);
            assert!(sol.gap.unwrap() <= 1e-6, "n={n}: {:?}", sol.gap);
        }
    }

    #[test]
    fn weak_duality_on_random_pairs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let d = rng.random_range(2..6);
            let n = rng.random_range(1..7);
            let p = rng.random_range(0.51..1.0);
            let params = wp(d, p);
            let pr = build_problem(params, n).unwrap();
            // feasible primal: mixture of PPT profiles with σ₀ weight > 1/2
            let (w, a1, a2) = (rng.random::<f64>(), rng.random_range(0.5..1.0), rng.random_range(0.5..1.0));
            let t = TrialState {
                n,
                lg_weights: [w.log2(), (1.0 - w).log2()],
                profiles: [a1, a2],
                z: None,
            };
            let primal = objective(&pr, &t.chi()).unwrap();
            let lambda = TypeClassVector::new((0..=n).map(|_| rng.random::<f64>() * 0.1).collect());
            let nu = rng.random_range(0.0..3.0);
            let dp = eval_dual(&params, n, &lambda, nu).unwrap();
            if dp.feasible {
                assert!(dp.g <= primal + 1e-12, "g={} primal={}", dp.g, primal);
            }
        }
    }

    #[test]
    fn bracket_narrows() {
        let params = wp(3, 0.9);
        let w10 = analytic_bracket(&params, 10).unwrap();
        let w20 = analytic_bracket(&params, 20).unwrap();
        assert!(w20.upper - w20.lower <= w10.upper - w10.lower);
        assert!((w20.lower - LOWER_D3_P09).abs() < 1e-12);
    }

    #[test]
    fn log_domain_weights_normalized() {
        for n in [10, 100, 10_000] {
            assert!(lg_total_weight(0.9, n).abs() < 1e-9);
        }
    }
}
