//! Grid sweeps behind the command-line tool, plus CSV/JSON emission.
//!
//! Every command evaluates its grid points in parallel and merges results in
//! grid order, so identical configurations produce byte-identical output.

use std::fmt::Write as _;
use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::certificates::{analytic_bracket, extract_dual};
use crate::dense::{
    build_werner, log_negativity, relative_entropy_dense, typeclass_to_dense, werner_power,
    MAX_DENSE_D, MAX_DENSE_DIM,
};
use crate::error::{Error, Result};
use crate::solver::{build_problem, objective, solve, ToleranceSet, MAX_SOLVER_N};
use crate::symmetric::{binomial_row, kron_power_vec, reduce_kron_matrix, TypeClassVector};
use crate::werner::{asymptotic_ree_with_branch, threshold, Branch, WernerParams};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Random samples per `(d, n)` case in the oracle suite.
pub const ORACLE_SAMPLES: usize = 50;
/// Copy counts covered by the reduced-vs-dense Kronecker check.
pub const ORACLE_KRON_MAX_N: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Asymptotic,
    Finite,
    Certify,
    Convexity,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// `p_i = start + i·step` for `i = 0, 1, …` while `p_i ≤ stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl PGrid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        let g = Self { start, stop, step };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::Config(format!("p step must be positive, got {}", self.step)));
        }
        if !(0.0..=1.0).contains(&self.start) || !(0.0..=1.0).contains(&self.stop) {
            return Err(Error::Config("p grid must lie in [0, 1]".into()));
        }
        if self.stop < self.start {
            return Err(Error::Config("p grid is empty (stop < start)".into()));
        }
        Ok(())
    }

    /// Grid points, each rounded to 12 decimals so that e.g. `0.5 + 20·0.005`
    /// is exactly the double nearest `0.6`.
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| {
                let p = self.start + i as f64 * self.step;
                ((p * 1e12).round() / 1e12).clamp(0.0, 1.0)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub d_list: Vec<usize>,
    pub n_list: Vec<usize>,
    pub grid: PGrid,
    pub tol: ToleranceSet,
    pub format: Format,
    pub out: Option<PathBuf>,
    /// oracle only: perturb the dense results so every comparison must fail
    pub inject_fault: bool,
    /// oracle only: seed for the random samples
    pub seed: u64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_list.is_empty() || self.n_list.is_empty() {
            return Err(Error::Config("d and n lists must be nonempty".into()));
        }
        if let Some(d) = self.d_list.iter().find(|&&d| d < 2) {
            return Err(Error::Config(format!("d = {d} must be >= 2")));
        }
        if self.n_list.contains(&0) {
            return Err(Error::Config("n must be >= 1".into()));
        }
        self.grid.validate()?;
        let t = &self.tol;
        if !(t.gap > 0.0 && t.eq > 0.0 && t.feas > 0.0) || t.max_iterations == 0 {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        match self.command {
            Command::Finite | Command::Convexity => {
                if let Some(n) = self.n_list.iter().find(|&&n| n > MAX_SOLVER_N) {
                    return Err(Error::Config(format!("n = {n} exceeds solver limit {MAX_SOLVER_N}")));
                }
            }
            Command::Oracle => {
                if let Some(d) = self.d_list.iter().find(|&&d| d > MAX_DENSE_D) {
                    return Err(Error::Config(format!("oracle needs d <= {MAX_DENSE_D}, got {d}")));
                }
                for &d in &self.d_list {
                    for &n in &self.n_list {
                        if !dense_fits(d, n) {
                            return Err(Error::Config(format!(
                                "oracle needs d^(2n) < {MAX_DENSE_DIM} (d = {d}, n = {n})"
                            )));
                        }
                    }
                }
            }
            Command::Asymptotic | Command::Certify => {}
        }
        if self.command == Command::Convexity && self.grid.points().len() < 3 {
            return Err(Error::Config("convexity scan needs at least 3 grid points".into()));
        }
        Ok(())
    }

    /// First 16 hex digits of SHA-256 over the JSON-serialized config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json)[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn dense_fits(d: usize, n: usize) -> bool {
    (d * d).checked_pow(n as u32).is_some_and(|v| v < MAX_DENSE_DIM)
}

/// `%.15g`-style formatting: 15 significant digits, trailing zeros dropped.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.14e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let decimals = (14 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Rounds to 15 significant digits so that JSON output matches the CSV.
pub fn round15(x: f64) -> f64 {
    if x.is_finite() {
        fmt_float(x).parse().expect("round-trips")
    } else {
        x
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

fn opt_bool(x: Option<bool>) -> String {
    x.map(|b| b.to_string()).unwrap_or_default()
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRow {
    pub d: usize,
    pub p: f64,
    pub value: f64,
    pub branch: Branch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub d: usize,
    pub p_prime: f64,
}

pub fn asymptotic_rows(config: &RunConfig) -> Result<Vec<AsymptoticRow>> {
    let points = config.grid.points();
    let mut rows = Vec::new();
    for &d in &config.d_list {
        for &p in &points {
            let (value, branch) = asymptotic_ree_with_branch(&WernerParams::new(d, p)?);
            rows.push(AsymptoticRow { d, p, value, branch });
        }
    }
    Ok(rows)
}

pub fn thresholds(config: &RunConfig) -> Vec<Threshold> {
    config
        .d_list
        .iter()
        .map(|&d| Threshold {
            d,
            p_prime: threshold(d),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteRow {
    pub d: usize,
    pub n: usize,
    pub p: f64,
    pub value: Option<f64>,
    pub gap: Option<f64>,
    pub iterations: Option<usize>,
    pub error: Option<String>,
}

fn grid_cases(config: &RunConfig) -> Vec<(usize, usize, f64)> {
    let points = config.grid.points();
    let mut cases = Vec::new();
    for &d in &config.d_list {
        for &n in &config.n_list {
            for &p in &points {
                cases.push((d, n, p));
            }
        }
    }
    cases
}

/// Solver value for one point. `E_R = 0` exactly when `p ≤ 1/2`.
fn finite_point(d: usize, n: usize, p: f64, tol: &ToleranceSet) -> FiniteRow {
    let mut row = FiniteRow {
        d,
        n,
        p,
        value: None,
        gap: None,
        iterations: None,
        error: None,
    };
    if p <= 0.5 {
        row.value = Some(0.0);
        row.gap = Some(0.0);
        row.iterations = Some(0);
        return row;
    }
    let result = WernerParams::new(d, p)
        .and_then(|params| build_problem(params, n))
        .and_then(|problem| {
            let mut sol = solve(&problem, tol)?;
            let certified = extract_dual(&problem, &mut sol, tol);
            Ok((sol, certified.err()))
        });
    match result {
        Ok((sol, err)) => {
            row.value = Some(sol.value);
            row.gap = sol.gap;
            row.iterations = Some(sol.iterations);
            row.error = err.map(|e| e.to_string());
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Rows ordered by `(d, n, p)`; solver failures land in the error column.
pub fn finite_rows(config: &RunConfig) -> Vec<FiniteRow> {
    grid_cases(config)
        .par_iter()
        .map(|&(d, n, p)| finite_point(d, n, p, &config.tol))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub d: usize,
    pub n: usize,
    pub p: f64,
    /// best analytic dual value
    pub lower: f64,
    /// solver value, for `1/2 < p` and `n ≤ 30`
    pub primal: Option<f64>,
    /// best analytic trial value
    pub upper: f64,
    pub asymptotic: f64,
    /// certified solver gap
    pub gap: Option<f64>,
    /// per-copy log-negativity (additive, so the one-copy value)
    pub log_negativity: Option<f64>,
    /// solver gap within `tol.gap`
    pub certified: Option<bool>,
    /// whether the two-component trial passed the reduced PPT check
    pub trial2_feasible: Option<bool>,
    /// `lower ≤ primal ≤ upper` and `lower ≤ asymptotic ≤ upper`, within `tol.gap`
    pub sandwich_ok: bool,
    pub error: Option<String>,
}

pub fn certify_point(d: usize, n: usize, p: f64, tol: &ToleranceSet) -> Result<CertifyReport> {
    let params = WernerParams::new(d, p)?;
    let bracket = analytic_bracket(&params, n)?;
    let (asymptotic, _) = asymptotic_ree_with_branch(&params);
    let mut report = CertifyReport {
        d,
        n,
        p,
        lower: bracket.lower,
        primal: None,
        upper: bracket.upper,
        asymptotic,
        gap: None,
        log_negativity: None,
        certified: None,
        trial2_feasible: bracket.trial2_feasible,
        sandwich_ok: true,
        error: None,
    };
    if d <= MAX_DENSE_D {
        report.log_negativity = Some(log_negativity(&build_werner(&params)?)?);
    }
    if p > 0.5 && n <= MAX_SOLVER_N {
        let solved = build_problem(params, n).and_then(|problem| {
            let mut sol = solve(&problem, tol)?;
            let certified = extract_dual(&problem, &mut sol, tol);
            Ok((sol, certified))
        });
        match solved {
            Ok((sol, certified)) => {
                report.primal = Some(sol.value);
                report.gap = sol.gap;
                report.certified = Some(certified.is_ok());
                if let Err(e) = certified {
                    report.error = Some(e.to_string());
                }
            }
            Err(e) => report.error = Some(e.to_string()),
        }
    }
    let t = tol.gap;
    let within = |x: f64| report.lower - t <= x && x <= report.upper + t;
    report.sandwich_ok = report.lower <= report.upper + t
        && within(asymptotic)
        && report.primal.is_none_or(within);
    Ok(report)
}

pub fn certify_rows(config: &RunConfig) -> Result<Vec<CertifyReport>> {
    grid_cases(config)
        .par_iter()
        .map(|&(d, n, p)| certify_point(d, n, p, &config.tol))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityRow {
    pub d: usize,
    /// `None` for the asymptotic curve
    pub n: Option<usize>,
    pub p: f64,
    /// `v(p−h) − 2·v(p) + v(p+h)`
    pub second_difference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexitySummary {
    pub d: usize,
    pub n: Option<usize>,
    pub min_second_difference: Option<f64>,
    pub argmin_p: Option<f64>,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityScan {
    pub rows: Vec<ConvexityRow>,
    pub summary: Vec<ConvexitySummary>,
}

/// Central second differences of the asymptotic curve and of each finite-`n`
/// solver curve over the interior grid points.
pub fn convexity_scan(config: &RunConfig) -> Result<ConvexityScan> {
    let points = config.grid.points();
    let finite = finite_rows(config);
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let per_curve = points.len();
    for (di, &d) in config.d_list.iter().enumerate() {
        let mut curves: Vec<(Option<usize>, Vec<Option<f64>>)> = Vec::new();
        let asym = points
            .iter()
            .map(|&p| Ok(Some(asymptotic_ree_with_branch(&WernerParams::new(d, p)?).0)))
            .collect::<Result<Vec<_>>>()?;
        curves.push((None, asym));
        for (ni, &n) in config.n_list.iter().enumerate() {
            let start = (di * config.n_list.len() + ni) * per_curve;
            let vals = finite[start..start + per_curve].iter().map(|r| r.value).collect();
            curves.push((Some(n), vals));
        }
        for (n, vals) in curves {
            let mut best: Option<(f64, f64)> = None;
            let mut errors = 0;
            for i in 1..points.len() - 1 {
                let sd = match (vals[i - 1], vals[i], vals[i + 1]) {
                    (Some(a), Some(b), Some(c)) => Some(a - 2.0 * b + c),
                    _ => {
                        errors += 1;
                        None
                    }
                };
                if let Some(v) = sd {
                    if best.is_none_or(|(m, _)| v < m) {
                        best = Some((v, points[i]));
                    }
                }
                rows.push(ConvexityRow {
                    d,
                    n,
                    p: points[i],
                    second_difference: sd,
                });
            }
            summary.push(ConvexitySummary {
                d,
                n,
                min_second_difference: best.map(|b| b.0),
                argmin_p: best.map(|b| b.1),
                errors,
            });
        }
    }
    Ok(ConvexityScan { rows, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub name: String,
    pub d: Option<usize>,
    pub n: Option<usize>,
    pub passed: bool,
    /// largest discrepancy observed (or mismatch count for verdict checks)
    pub worst: f64,
    pub tolerance: f64,
    /// both values at the worst sample when the check fails
    pub detail: String,
}

/// Mixture of up to three PPT product profiles `(1−a, a)^⊗n`, `a ∈ [0.55, 1]`.
pub fn random_feasible_chi(n: usize, rng: &mut impl Rng) -> TypeClassVector {
    let k = rng.random_range(1..=3);
    let mut weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let mut chi = TypeClassVector::zeros(n);
    for w in weights {
        let a = rng.random_range(0.55..=1.0);
        chi = chi.combine(1.0, &kron_power_vec(1.0 - a, a, n), w).expect("same n");
    }
    chi
}

/// Positive type-class vector with unit total weight; PPT or not.
pub fn random_chi(n: usize, rng: &mut impl Rng) -> TypeClassVector {
    let raw: Vec<f64> = (0..=n).map(|_| rng.random_range(0.01..1.0)).collect();
    let c = binomial_row(n).expect("small n");
    let total: f64 = raw.iter().zip(&c).map(|(x, c)| x * c).sum();
    TypeClassVector::new(raw.iter().map(|x| x / total).collect())
}

struct Worst {
    value: f64,
    detail: String,
}

impl Worst {
    fn new() -> Self {
        Self {
            value: 0.0,
            detail: String::new(),
        }
    }

    fn record(&mut self, err: f64, detail: impl FnOnce() -> String) {
        if !(err <= self.value) {
            self.value = err;
            self.detail = detail();
        }
    }

    fn check(self, name: &str, d: Option<usize>, n: Option<usize>, tolerance: f64) -> OracleCheck {
        let passed = self.value <= tolerance;
        OracleCheck {
            name: name.into(),
            d,
            n,
            passed,
            worst: self.value,
            tolerance,
            detail: if passed { String::new() } else { self.detail },
        }
    }
}

/// Reduced-vs-dense agreement for one `(d, n)`: PPT verdicts on feasible
/// and generic random `χ`, and `S(σ(p)^⊗n‖η)/n` against the reduced
/// objective on feasible ones.
fn oracle_case(d: usize, n: usize, seed: u64, fault: f64) -> Result<Vec<OracleCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((d as u64) << 32 | n as u64));
    let base = WernerParams::new(d, 0.5)?;
    let k = reduce_kron_matrix(base.ppt_matrix().entries(), n)?;
    let mut verdict = Worst::new();
    let mut entropy = Worst::new();
    for i in 0..2 * ORACLE_SAMPLES {
        let chi = if i % 2 == 0 {
            random_feasible_chi(n, &mut rng)
        } else {
            random_chi(n, &mut rng)
        };
        let reduced_min = k.apply(&chi)?.min();
        let dense_min = typeclass_to_dense(&chi, &base, n)?.min_pt_eigenvalue()? - fault;
        let reduced_ppt = reduced_min >= -1e-12;
        let dense_ppt = dense_min >= -1e-12;
        if reduced_ppt != dense_ppt {
            verdict.value += 1.0;
            verdict.detail = format!(
                "reduced min {} vs dense min eigenvalue {}",
                fmt_float(reduced_min),
                fmt_float(dense_min)
            );
        }
        if i % 2 == 0 {
            let p = rng.random_range(0.5..=1.0);
            let params = WernerParams::new(d, p)?;
            let reduced = objective(&build_problem(params, n)?, &chi)?;
            let eta = typeclass_to_dense(&chi, &params, n)?;
            let dense = relative_entropy_dense(&werner_power(&params, n)?, &eta)? / n as f64 + fault;
            entropy.record((reduced - dense).abs(), || {
                format!("p {}: reduced {} vs dense {}", fmt_float(p), fmt_float(reduced), fmt_float(dense))
            });
        }
    }
    Ok(vec![
        verdict.check("ppt_verdict", Some(d), Some(n), 0.0),
        entropy.check("relative_entropy", Some(d), Some(n), 1e-8),
    ])
}

/// Reduced Kronecker apply against a dense `M^⊗n` on random 2×2 matrices.
fn oracle_kronecker(seed: u64, fault: f64) -> Result<Vec<OracleCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for n in 1..=ORACLE_KRON_MAX_N {
        let mut worst = Worst::new();
        for _ in 0..5 {
            let m = [
                [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
            ];
            let chi = TypeClassVector::new((0..=n).map(|_| rng.random_range(-1.0..1.0)).collect());
            let reduced = reduce_kron_matrix(m, n)?.apply(&chi)?;
            let dense_m = crate::dense::kron_power(&DMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]]), n);
            let dense = dense_m * DVector::from_vec(chi.expand());
            for (g, v) in dense.iter().enumerate() {
                let r = reduced.at_string(g);
                let v = v + fault;
                worst.record((r - v).abs(), || format!("string {g}: reduced {} vs dense {}", fmt_float(r), fmt_float(v)));
            }
        }
        out.push(worst.check("kronecker", None, Some(n), 1e-10));
    }
    Ok(out)
}

/// `E_R^∞(σ(p)) ≤ lg‖σ(p)^Γ‖₁` on a 0.01 grid.
fn oracle_log_negativity(d: usize, fault: f64) -> Result<OracleCheck> {
    let mut worst = Worst::new();
    for i in 0..=100 {
        let params = WernerParams::new(d, i as f64 / 100.0)?;
        let ln = log_negativity(&build_werner(&params)?)? - fault;
        let (e, _) = asymptotic_ree_with_branch(&params);
        worst.record((e - ln).max(0.0), || {
            format!("p {}: asymptotic {} vs log-negativity {}", fmt_float(params.p()), fmt_float(e), fmt_float(ln))
        });
    }
    Ok(worst.check("log_negativity_bound", Some(d), None, 1e-10))
}

pub fn oracle_suite(config: &RunConfig) -> Result<Vec<OracleCheck>> {
    let fault = if config.inject_fault { 1e-6 } else { 0.0 };
    let mut cases = Vec::new();
    for &d in &config.d_list {
        for &n in &config.n_list {
            cases.push((d, n));
        }
    }
    let mut checks: Vec<OracleCheck> = cases
        .par_iter()
        .map(|&(d, n)| oracle_case(d, n, config.seed, fault))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    checks.extend(oracle_kronecker(config.seed, fault)?);
    for &d in &config.d_list {
        checks.push(oracle_log_negativity(d, fault)?);
    }
    Ok(checks)
}

/// Rendered output plus whether a verification failed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub text: String,
    pub failed: bool,
}

fn header(config: &RunConfig) -> String {
    format!(
        "# {TOOL_VERSION} command={} config={}\n",
        serde_json::to_value(config.command).expect("serializes").as_str().expect("string"),
        config.hash()
    )
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'a str,
    config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    thresholds: Option<Vec<Threshold>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    summary: Option<Vec<ConvexitySummary>>,
    rows: T,
}

fn json<T: Serialize>(
    config: &RunConfig,
    rows: T,
    thresholds: Option<Vec<Threshold>>,
    summary: Option<Vec<ConvexitySummary>>,
) -> String {
    let env = Envelope {
        tool: TOOL_VERSION,
        config_hash: config.hash(),
        thresholds,
        summary,
        rows,
    };
    let mut s = serde_json::to_string_pretty(&env).expect("serializes");
    s.push('\n');
    s
}

/// Runs the configured command and renders it in the configured format.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let csv = config.format == Format::Csv;
    let mut out = if csv { header(config) } else { String::new() };
    let mut failed = false;
    match config.command {
        Command::Asymptotic => {
            let mut rows = asymptotic_rows(config)?;
            let th = thresholds(config);
            if csv {
                for t in &th {
                    writeln!(out, "# threshold d={} p_prime={}", t.d, fmt_float(t.p_prime)).unwrap();
                }
                out.push_str("d,p,value,branch\n");
                for r in &rows {
                    writeln!(out, "{},{},{},{}", r.d, fmt_float(r.p), fmt_float(r.value), r.branch.as_str()).unwrap();
                }
            } else {
                rows.iter_mut().for_each(|r| {
                    r.p = round15(r.p);
                    r.value = round15(r.value);
                });
                let th = th
                    .into_iter()
                    .map(|t| Threshold {
                        p_prime: round15(t.p_prime),
                        ..t
                    })
                    .collect();
                out = json(config, rows, Some(th), None);
            }
        }
        Command::Finite => {
            let mut rows = finite_rows(config);
            if csv {
                out.push_str("d,n,p,value,gap,iterations,error\n");
                for r in &rows {
                    writeln!(
                        out,
                        "{},{},{},{},{},{},{}",
                        r.d,
                        r.n,
                        fmt_float(r.p),
                        opt(r.value),
                        opt(r.gap),
                        r.iterations.map(|i| i.to_string()).unwrap_or_default(),
                        csv_text(r.error.as_deref().unwrap_or(""))
                    )
                    .unwrap();
                }
            } else {
                rows.iter_mut().for_each(|r| {
                    r.p = round15(r.p);
                    r.value = r.value.map(round15);
                    r.gap = r.gap.map(round15);
                });
                out = json(config, rows, None, None);
            }
        }
        Command::Certify => {
            let mut rows = certify_rows(config)?;
            failed = rows.iter().any(|r| !r.sandwich_ok);
            if csv {
                out.push_str(
                    "d,n,p,lower,primal,upper,asymptotic,gap,log_negativity,certified,trial2_feasible,sandwich_ok,error\n",
                );
                for r in &rows {
                    writeln!(
                        out,
                        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                        r.d,
                        r.n,
                        fmt_float(r.p),
                        fmt_float(r.lower),
                        opt(r.primal),
                        fmt_float(r.upper),
                        fmt_float(r.asymptotic),
                        opt(r.gap),
                        opt(r.log_negativity),
                        opt_bool(r.certified),
                        opt_bool(r.trial2_feasible),
                        r.sandwich_ok,
                        csv_text(r.error.as_deref().unwrap_or(""))
                    )
                    .unwrap();
                }
            } else {
                rows.iter_mut().for_each(|r| {
                    r.p = round15(r.p);
                    r.lower = round15(r.lower);
                    r.primal = r.primal.map(round15);
                    r.upper = round15(r.upper);
                    r.asymptotic = round15(r.asymptotic);
                    r.gap = r.gap.map(round15);
                    r.log_negativity = r.log_negativity.map(round15);
                });
                out = json(config, rows, None, None);
            }
        }
        Command::Convexity => {
            let mut scan = convexity_scan(config)?;
            if csv {
                for s in &scan.summary {
                    writeln!(
                        out,
                        "# min_second_difference d={} curve={} value={} p={} errors={}",
                        s.d,
                        s.n.map(|n| format!("n{n}")).unwrap_or_else(|| "asymptotic".into()),
                        opt(s.min_second_difference),
                        opt(s.argmin_p),
                        s.errors
                    )
                    .unwrap();
                }
                out.push_str("d,n,p,second_difference\n");
                for r in &scan.rows {
                    writeln!(
                        out,
                        "{},{},{},{}",
                        r.d,
                        r.n.map(|n| n.to_string()).unwrap_or_else(|| "inf".into()),
                        fmt_float(r.p),
                        opt(r.second_difference)
                    )
                    .unwrap();
                }
            } else {
                scan.rows.iter_mut().for_each(|r| {
                    r.p = round15(r.p);
                    r.second_difference = r.second_difference.map(round15);
                });
                scan.summary.iter_mut().for_each(|s| {
                    s.min_second_difference = s.min_second_difference.map(round15);
                    s.argmin_p = s.argmin_p.map(round15);
                });
                out = json(config, scan.rows, None, Some(scan.summary));
            }
        }
        Command::Oracle => {
            let mut checks = oracle_suite(config)?;
            failed = checks.iter().any(|c| !c.passed);
            if csv {
                out.push_str("check,d,n,passed,worst,tolerance,detail\n");
                for c in &checks {
                    writeln!(
                        out,
                        "{},{},{},{},{},{},{}",
                        c.name,
                        c.d.map(|d| d.to_string()).unwrap_or_default(),
                        c.n.map(|n| n.to_string()).unwrap_or_default(),
                        if c.passed { "pass" } else { "fail" },
                        fmt_float(c.worst),
                        fmt_float(c.tolerance),
                        csv_text(&c.detail)
                    )
                    .unwrap();
                }
            } else {
                checks.iter_mut().for_each(|c| c.worst = round15(c.worst));
                out = json(config, checks, None, None);
            }
        }
    }
    Ok(RunOutput { text: out, failed })
}
