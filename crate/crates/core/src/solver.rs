//! Log-barrier Newton solver for the symmetry-reduced PPT program
//!
//! ```txt
//!   minimize   −H(p) − (1/n)·Σ_a w_a·lg χ_a
//!   subject to (K·χ)_b ≥ 0          for b = 0..=n   (PPT cone)
//!              χ_a > 0                              (domain)
//!              Σ_a C(n,a)·χ_a = 1                   (normalization)
//! ```
//!
//! where `w_a = C(n,a)·p^{n−a}(1−p)^a` and `K` is the reduced `T^⊗n`.
//! The optimal value is `E_R(σ(p)^⊗n)/n` in bits.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symmetric::{
    binomial_row, kron_power_vec, lg_binomial_row, lg_kron_power_nonneg, reduce_kron_matrix,
    ReducedKronecker, TypeClassVector,
};
use crate::werner::{binary_entropy, WernerParams};

/// Largest copy count the numerical solver accepts.
pub const MAX_SOLVER_N: usize = 30;

/// barrier weights `10^0, 10^-1, …, 10^-12`
const BARRIER_STAGES: i32 = 12;
/// First stage (barrier weight 1e-6) at which a breakdown ends the schedule.
const PRECISION_FLOOR_STAGE: i32 = 6;
const FRACTION_TO_BOUNDARY: f64 = 0.99;
const ARMIJO: f64 = 1e-4;
/// centering stops once `decrement ≤ CENTERING·μ`
const CENTERING: f64 = 1e-14;
/// `φ/μ` is self-concordant, so below this scaled decrement full Newton
/// steps converge quadratically and no line search is needed
const PURE_NEWTON: f64 = 0.1;
const MAX_STALLS: usize = 3;
const MAX_BACKTRACKS: usize = 60;
const JITTER: [f64; 4] = [0.0, 1e-14, 1e-12, 1e-10];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSet {
    /// normalization residual
    pub eq: f64,
    /// PPT residual, `min_b (Kχ)_b ≥ −feas`
    pub feas: f64,
    /// certified duality gap, bits
    pub gap: f64,
    /// total Newton iterations over all barrier stages
    pub max_iterations: usize,
}

impl Default for ToleranceSet {
    fn default() -> Self {
        Self {
            eq: 1e-12,
            feas: 1e-9,
            gap: 1e-8,
            max_iterations: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReducedProblem {
    params: WernerParams,
    n: usize,
    entropy: f64,
    weights: TypeClassVector,
    kron: ReducedKronecker,
    norm: Vec<f64>,
}

impl ReducedProblem {
    pub fn params(&self) -> &WernerParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `w_a = C(n,a)·p^{n−a}(1−p)^a`, summing to one.
    pub fn weights(&self) -> &TypeClassVector {
        &self.weights
    }

    /// Reduced `T^⊗n`.
    pub fn kron(&self) -> &ReducedKronecker {
        &self.kron
    }

    /// Normalization row `C(n, a)`.
    pub fn norm_coeffs(&self) -> &[f64] {
        &self.norm
    }

    pub fn entropy(&self) -> f64 {
        self.entropy
    }
}

/// Multiplicity-aggregated weights `C(n,a)·p^{n−a}(1−p)^a`, assembled in the
/// log domain.
pub fn type_weights(p: f64, n: usize) -> TypeClassVector {
    let lg_c = lg_binomial_row(n);
    let lg_z = lg_kron_power_nonneg(p, 1.0 - p, n);
    TypeClassVector::new(
        lg_c.iter()
            .zip(lg_z.values())
            .map(|(c, z)| (c + z).exp2())
            .collect(),
    )
}

pub fn build_problem(params: WernerParams, n: usize) -> Result<ReducedProblem> {
    if n == 0 || n > MAX_SOLVER_N {
        return Err(Error::Domain(format!(
            "copy count n = {n} outside the solver range 1..={MAX_SOLVER_N}"
        )));
    }
    if params.p() <= 0.5 {
        return Err(Error::Regime(format!(
            "p = {} <= 1/2: the Werner state is PPT and E_R = 0",
            params.p()
        )));
    }
    let kron = reduce_kron_matrix(params.ppt_matrix().entries(), n)?;
    Ok(ReducedProblem {
        params,
        n,
        entropy: binary_entropy(params.p())?,
        weights: type_weights(params.p(), n),
        kron,
        norm: binomial_row(n)?,
    })
}

/// `−H(p) − (1/n)·Σ_a w_a·lg χ_a`, i.e. `S(σ(p)^⊗n ‖ η)/n` for the
/// symmetric state `η` encoded by `χ`.
pub fn objective(problem: &ReducedProblem, chi: &TypeClassVector) -> Result<f64> {
    if chi.n() != problem.n {
        return Err(Error::DimensionMismatch {
            expected: problem.n + 1,
            got: chi.n() + 1,
        });
    }
    if let Some(bad) = chi.values().iter().find(|&&x| !(x > 0.0)) {
        return Err(Error::Domain(format!("objective needs chi > 0, found {bad}")));
    }
    Ok(raw_objective(problem, chi.values()))
}

fn raw_objective(problem: &ReducedProblem, chi: &[f64]) -> f64 {
    let s: f64 = problem
        .weights
        .values()
        .iter()
        .zip(chi)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, x)| w * x.log2())
        .sum();
    -problem.entropy - s / problem.n as f64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrimalSolution {
    pub chi: Vec<f64>,
    /// objective value at `chi`, bits
    pub value: f64,
    /// `min_b (Kχ)_b`
    pub ppt_residual: f64,
    /// `|Σ C(n,a)·χ_a − 1|`
    pub norm_residual: f64,
    /// certified duality gap; `None` until a dual point is extracted
    pub gap: Option<f64>,
    pub iterations: usize,
    /// barrier weight at the last centered iterate
    pub barrier: f64,
    /// reduced PPT multiplier estimates `κ_b = barrier / (Kχ)_b`
    pub ppt_multipliers: Vec<f64>,
    /// per-stage estimates, largest weight first: `barrier/(Kχ)_b` and its
    /// primal-dual correction along the last Newton step
    pub stage_multipliers: Vec<Vec<f64>>,
}

impl PrimalSolution {
    pub fn chi_vector(&self) -> TypeClassVector {
        TypeClassVector::new(self.chi.clone())
    }
}

struct Barrier<'a> {
    problem: &'a ReducedProblem,
    mu: f64,
}

impl Barrier<'_> {
    /// Barrier objective, `+inf` outside the interior.
    fn value(&self, chi: &[f64], y: &[f64]) -> f64 {
        if chi.iter().chain(y).any(|&v| !(v > 0.0)) {
            return f64::INFINITY;
        }
        let logs: f64 = chi.iter().chain(y).map(|v| v.ln()).sum();
        raw_objective(self.problem, chi) - self.mu * logs
    }

    /// Gradient and Hessian of the barrier objective.
    fn derivatives(&self, chi: &[f64], y: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
        let m = chi.len();
        let scale = 1.0 / (self.problem.n as f64 * std::f64::consts::LN_2);
        let w = self.problem.weights.values();
        let k = &self.problem.kron;
        let inv_y: Vec<f64> = y.iter().map(|v| 1.0 / v).collect();
        let kt_inv_y = k.apply_transpose(&inv_y);
        let grad: Vec<f64> = (0..m)
            .map(|a| -scale * w[a] / chi[a] - self.mu * (kt_inv_y[a] + 1.0 / chi[a]))
            .collect();
        let mut hess = DMatrix::<f64>::zeros(m, m);
        for b in 0..m {
            let row = k.row(b);
            let f = self.mu * inv_y[b] * inv_y[b];
            for a in 0..m {
                let ra = f * row[a];
                for a2 in a..m {
                    hess[(a, a2)] += ra * row[a2];
                }
            }
        }
        for a in 0..m {
            for a2 in 0..a {
                hess[(a, a2)] = hess[(a2, a)];
            }
            hess[(a, a)] += (scale * w[a] + self.mu) / (chi[a] * chi[a]);
        }
        (grad, hess)
    }
}

/// Solves the equality-constrained Newton system in the variables
/// `s = dχ/χ`, with symmetric diagonal equilibration. Returns `dχ`.
fn newton_direction(
    chi: &[f64],
    grad: &[f64],
    hess: &DMatrix<f64>,
    norm: &[f64],
    residual: f64,
) -> Option<Vec<f64>> {
    let m = chi.len();
    // H̃ = D H D with D = diag(χ), then E H̃ E with E = diag(H̃_aa^{-1/2})
    let e: Vec<f64> = (0..m)
        .map(|a| 1.0 / (chi[a] * chi[a] * hess[(a, a)]).sqrt())
        .collect();
    let c: Vec<f64> = (0..m).map(|a| norm[a] * chi[a] * e[a]).collect();
    let c_scale = 1.0 / c.iter().map(|v| v * v).sum::<f64>().sqrt();
    for jitter in JITTER {
        let mut kkt = DMatrix::<f64>::zeros(m + 1, m + 1);
        let mut rhs = DVector::<f64>::zeros(m + 1);
        for a in 0..m {
            for a2 in 0..m {
                kkt[(a, a2)] = chi[a] * e[a] * hess[(a, a2)] * chi[a2] * e[a2];
            }
            kkt[(a, a)] += jitter;
            kkt[(a, m)] = c[a] * c_scale;
            kkt[(m, a)] = c[a] * c_scale;
            rhs[a] = -grad[a] * chi[a] * e[a];
        }
        rhs[m] = residual * c_scale;
        let Some(sol) = kkt.full_piv_lu().solve(&rhs) else {
            continue;
        };
        if sol.iter().any(|v| !v.is_finite()) {
            continue;
        }
        return Some((0..m).map(|a| sol[a] * e[a] * chi[a]).collect());
    }
    None
}

fn max_step(x: &[f64], dx: &[f64]) -> f64 {
    x.iter()
        .zip(dx)
        .filter(|(_, d)| **d < 0.0)
        .map(|(v, d)| -v / d)
        .fold(f64::INFINITY, f64::min)
}

/// Strictly feasible start: `(1/4, 3/4)^⊗n`, whose `T`-image
/// `(1/2, 1 − 3/(2(d+1)))^⊗n` is strictly positive.
pub fn feasible_start(n: usize) -> TypeClassVector {
    kron_power_vec(0.25, 0.75, n)
}

pub fn solve(problem: &ReducedProblem, tol: &ToleranceSet) -> Result<PrimalSolution> {
    let k = &problem.kron;
    let norm = &problem.norm;
    let mut chi = feasible_start(problem.n).into_values();
    let mut y = k.apply(&TypeClassVector::new(chi.clone()))?.into_values();
    let mut mu = 1.0;
    let mut iterations = 0usize;
    let mut stage_multipliers = Vec::with_capacity(2 * BARRIER_STAGES as usize + 2);

    'stages: for stage in 0..=BARRIER_STAGES {
        mu = 10f64.powi(-stage);
        // past this weight a breakdown means working precision is exhausted;
        // the current iterate is still strictly feasible, so stop there
        let at_floor = stage >= PRECISION_FLOOR_STAGE;
        let mut corrected: Vec<f64> = y.iter().map(|v| mu / v).collect();
        macro_rules! breakdown {
            ($($msg:tt)*) => {{
                if at_floor {
                    stage_multipliers.push(y.iter().map(|v| mu / v).collect());
                    stage_multipliers.push(corrected);
                    break 'stages;
                }
                return Err(Error::NumericalBreakdown(format!($($msg)*)));
            }};
        }
        let barrier = Barrier { problem, mu };
        let mut phi = barrier.value(&chi, &y);
        let mut last_decrement = f64::INFINITY;
        let mut stalls = 0;
        loop {
            if iterations >= tol.max_iterations {
                return Err(Error::MaxIterations { iterations });
            }
            iterations += 1;
            let (grad, hess) = barrier.derivatives(&chi, &y);
            let residual = 1.0 - norm.iter().zip(&chi).map(|(c, x)| c * x).sum::<f64>();
            let Some(dir) = newton_direction(&chi, &grad, &hess, norm, residual) else {
                breakdown!("singular Newton system at barrier weight {mu:.1e}")
            };
            let slope: f64 = dir.iter().zip(&grad).map(|(d, g)| d * g).sum();
            let dy = k.apply(&TypeClassVector::new(dir.clone()))?.into_values();
            // primal-dual estimate after the pending Newton step
            corrected = y
                .iter()
                .zip(&dy)
                .map(|(v, dv)| mu / v * (1.0 - dv / v))
                .collect();
            let hd = &hess * DVector::from_column_slice(&dir);
            let decrement: f64 = dir.iter().zip(hd.iter()).map(|(d, h)| d * h).sum();
            if decrement <= CENTERING * mu {
                break;
            }
            if decrement >= last_decrement {
                stalls += 1;
            }
            last_decrement = decrement;
            let limit = max_step(&chi, &dir).min(max_step(&y, &dy));
            let mut alpha = (FRACTION_TO_BOUNDARY * limit).min(1.0);

            if decrement <= PURE_NEWTON * mu {
                // rounding floor reached: the direction no longer shrinks
                if stalls >= MAX_STALLS {
                    break;
                }
                let trial: Vec<f64> = chi.iter().zip(&dir).map(|(x, d)| x + alpha * d).collect();
                let trial_y = k.apply(&TypeClassVector::new(trial.clone()))?.into_values();
                if trial.iter().chain(&trial_y).all(|&v| v > 0.0) {
                    phi = barrier.value(&trial, &trial_y);
                    chi = trial;
                    y = trial_y;
                    continue;
                }
            }
            if !(slope < 0.0) {
                breakdown!("Newton direction is not a descent direction at barrier weight {mu:.1e}")
            }
            let mut accepted = false;
            for _ in 0..MAX_BACKTRACKS {
                let trial: Vec<f64> = chi.iter().zip(&dir).map(|(x, d)| x + alpha * d).collect();
                let trial_y = k.apply(&TypeClassVector::new(trial.clone()))?.into_values();
                let trial_phi = barrier.value(&trial, &trial_y);
                if trial_phi <= phi + ARMIJO * alpha * slope {
                    chi = trial;
                    y = trial_y;
                    phi = trial_phi;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                breakdown!("line search failed at barrier weight {mu:.1e} (decrement {decrement:.3e})")
            }
        }
        stage_multipliers.push(y.iter().map(|v| mu / v).collect());
        stage_multipliers.push(corrected);
    }

    let total: f64 = norm.iter().zip(&chi).map(|(c, x)| c * x).sum();
    let ppt_multipliers = y.iter().map(|v| mu / v).collect();
    Ok(PrimalSolution {
        value: raw_objective(problem, &chi),
        ppt_residual: y.iter().copied().fold(f64::INFINITY, f64::min),
        norm_residual: (total - 1.0).abs(),
        chi,
        gap: None,
        iterations,
        barrier: mu,
        ppt_multipliers,
        stage_multipliers,
    })
}
