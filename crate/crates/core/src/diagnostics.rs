//! Regression diagnostics.
//!
//! Linear fits get residual-pattern, normality, scale-location, influence and
//! multicollinearity checks. Logit fits are checked only through simulated
//! randomized quantile residuals, which are uniform on [0, 1] under a
//! correctly specified model.
//!
//! Every verdict comes from a fixed threshold in [`Thresholds`], and every
//! random draw from a per-observation ChaCha8 stream keyed by
//! `(seed, observation index)`. Serial and parallel runs therefore agree bit
//! for bit.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::anova::select_columns;
use crate::design::DesignMatrix;
use crate::distributions::{kolmogorov_pvalue, normal_cdf, normal_quantile};
use crate::error::{Error, Result};
use crate::logit::LogitFit;
use crate::ols::{least_squares, negligible_ss, total_ss, OlsFit};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Warn,
    Fail,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Warn => "warn",
            Verdict::Fail => "fail",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub verdict: Verdict,
    pub statistics: BTreeMap<String, f64>,
    /// Plot-ready `[x, y]` pairs.
    pub series: Vec<[f64; 2]>,
    /// Free-form remarks (excluded points, conventions used).
    pub notes: Vec<String>,
}

impl CheckResult {
    fn new(name: &str, verdict: Verdict) -> Self {
        CheckResult {
            name: name.to_owned(),
            verdict,
            statistics: BTreeMap::new(),
            series: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn stat(mut self, key: &str, value: f64) -> Self {
        self.statistics.insert(key.to_owned(), value);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub family: String,
    pub checks: Vec<CheckResult>,
}

impl DiagnosticsReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn worst(&self) -> Verdict {
        self.checks.iter().map(|c| c.verdict).max().unwrap_or(Verdict::Pass)
    }
}

/// Verdict thresholds. Defaults are the conventional ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Bin-mean residual test: fail beyond this many standard errors.
    pub bin_sigma: f64,
    pub vif_warn: f64,
    pub vif_fail: f64,
    /// Leverage flag at `factor · K / n`.
    pub leverage_factor: f64,
    /// Cook's distance flag at `factor / n`.
    pub cook_factor: f64,
    /// Significance level of KS tests (normality, uniformity).
    pub ks_alpha: f64,
    /// Scale-location fails when `|ρ| > z / √n`.
    pub spearman_z: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            bin_sigma: 3.0,
            vif_warn: 5.0,
            vif_fail: 10.0,
            leverage_factor: 2.0,
            cook_factor: 4.0,
            ks_alpha: 0.01,
            spearman_z: 2.58,
        }
    }
}

pub const DEFAULT_N_SIM: usize = 250;
pub const MIN_N_SIM: usize = 50;

fn f<T: Scalar>(x: T) -> f64 {
    x.as_f64()
}

/// Residuals against fitted values, with a binned-means pattern test:
/// `⌊√n⌋` contiguous bins along ŷ; fail if any bin mean exceeds
/// `bin_sigma · s / √(bin size)` in absolute value.
pub fn residual_vs_fitted<T: Scalar>(fit: &OlsFit<T>, th: &Thresholds) -> CheckResult {
    let n = fit.n();
    // Fitted values equal up to rounding count as ties, ordered by index, so
    // a flat fit bins observations in data order rather than by noise.
    let scale = fit.fitted.iter().map(|v| f(*v).abs()).fold(0.0f64, f64::max);
    let quantum = (scale * 64.0 * f(T::epsilon())).max(f64::MIN_POSITIVE);
    let key: Vec<f64> = fit.fitted.iter().map(|v| (f(*v) / quantum).round()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| key[a].total_cmp(&key[b]).then(a.cmp(&b)));
    let n_bins = ((n as f64).sqrt().floor() as usize).max(1);
    let s = f(fit.s());
    let mut worst = 0.0f64;
    let mut failed = false;
    let mut bin_means = Vec::with_capacity(n_bins);
    for b in 0..n_bins {
        let (lo, hi) = (b * n / n_bins, (b + 1) * n / n_bins);
        let m = (hi - lo) as f64;
        let mean = order[lo..hi].iter().map(|&i| f(fit.residuals[i])).sum::<f64>() / m;
        bin_means.push(mean);
        // an exact fit (s = 0) leaves only rounding noise in the residuals
        if s > 0.0 {
            failed |= mean.abs() > th.bin_sigma * s / m.sqrt();
            worst = worst.max(mean.abs() * m.sqrt() / s);
        }
    }
    let mut out = CheckResult::new(
        "linearity",
        if failed { Verdict::Fail } else { Verdict::Pass },
    )
    .stat("n_bins", n_bins as f64)
    .stat("max_bin_z", worst);
    let width = (n_bins - 1).to_string().len();
    for (b, mean) in bin_means.iter().enumerate() {
        out.statistics.insert(format!("bin_mean[{b:0width$}]"), *mean);
    }
    out.series = (0..n).map(|i| [f(fit.fitted[i]), f(fit.residuals[i])]).collect();
    out
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic<T: Scalar>(sample: &[T], cdf: impl Fn(T) -> T) -> T {
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = T::from_usize_lossy(sorted.len());
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let fx = cdf(x);
            let lo = T::from_usize_lossy(i) / n;
            let hi = T::from_usize_lossy(i + 1) / n;
            (fx - lo).max(hi - fx)
        })
        .fold(T::zero(), T::max)
}

/// QQ series of standardized residuals `εᵢ/s` against normal quantiles at
/// `(i − 0.5)/n`, plus a KS test against Φ. Below `ks_alpha` the verdict is
/// only a warning; the plot is the primary evidence.
pub fn normality_check<T: Scalar>(fit: &OlsFit<T>, th: &Thresholds) -> Result<CheckResult> {
    let n = fit.n();
    if n < 3 {
        return Err(Error::InvalidArgument("normality check needs n >= 3".into()));
    }
    let s = fit.s();
    if s.is_nan() || s <= T::zero() {
        return Err(Error::InvalidArgument(
            "residual standard deviation is zero (exact fit)".into(),
        ));
    }
    let mut z: Vec<T> = fit.residuals.iter().map(|&e| e / s).collect();
    z.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let d = ks_statistic(&z, normal_cdf);
    let p = kolmogorov_pvalue(d, n);
    let verdict = if f(p) < th.ks_alpha { Verdict::Warn } else { Verdict::Pass };
    let mut out = CheckResult::new("normality", verdict)
        .stat("ks_statistic", f(d))
        .stat("ks_pvalue", f(p));
    let nn = n as f64;
    out.series = z
        .iter()
        .enumerate()
        .map(|(i, &zi)| {
            let q = normal_quantile((i as f64 + 0.5) / nn).expect("plotting position in (0,1)");
            [q, f(zi)]
        })
        .collect();
    Ok(out)
}

/// Variance inflation factor of one design column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VifEntry {
    pub column: String,
    /// `+∞` for perfectly collinear columns.
    pub vif: f64,
    pub verdict: Verdict,
}

/// `VIF_j = 1/(1 − R²_j)`, with `R²_j` from regressing column `j` on all
/// other columns (intercept included).
pub fn vif_values<T: Scalar>(dm: &DesignMatrix<T>, th: &Thresholds) -> Result<Vec<VifEntry>> {
    let p = dm.n_columns();
    if p < 3 {
        return Err(Error::InvalidArgument(
            "VIF needs at least two non-intercept columns".into(),
        ));
    }
    let x = dm.matrix();
    (1..p)
        .map(|j| {
            let target = x.column(j);
            let others: Vec<usize> = (0..p).filter(|&k| k != j).collect();
            let tss = total_ss(&target);
            let vif = if negligible_ss(tss, &target) {
                f64::INFINITY
            } else {
                match least_squares(&select_columns(x, &others), &target, |k| {
                    dm.columns()[others[k]].name.clone()
                }) {
                    Ok(ls) if negligible_ss(ls.rss, &target) => f64::INFINITY,
                    Ok(ls) => {
                        let r2 = T::one() - ls.rss / tss;
                        f((T::one() / (T::one() - r2)).max(T::one()))
                    }
                    Err(Error::RankDeficient(_)) => f64::INFINITY,
                    Err(e) => return Err(e),
                }
            };
            let verdict = if vif > th.vif_fail {
                Verdict::Fail
            } else if vif > th.vif_warn {
                Verdict::Warn
            } else {
                Verdict::Pass
            };
            Ok(VifEntry {
                column: dm.columns()[j].name.clone(),
                vif,
                verdict,
            })
        })
        .collect()
}

pub fn vif<T: Scalar>(dm: &DesignMatrix<T>, th: &Thresholds) -> Result<CheckResult> {
    let entries = vif_values(dm, th)?;
    let verdict = entries.iter().map(|e| e.verdict).max().unwrap_or(Verdict::Pass);
    let mut out = CheckResult::new("multicollinearity", verdict);
    for e in &entries {
        out.statistics.insert(format!("vif[{}]", e.column), e.vif);
    }
    Ok(out)
}

/// Average ranks (1-based), ties sharing their mean rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation; 0 when either side is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// `(ŷᵢ, √|εᵢ / (s·√(1 − Hᵢᵢ))|)` with a Spearman trend test: fail when
/// `|ρ| > spearman_z / √n`. Points with `Hᵢᵢ = 1` are excluded and noted.
pub fn scale_location<T: Scalar>(fit: &OlsFit<T>, th: &Thresholds) -> CheckResult {
    let s = f(fit.s());
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = Vec::new();
    for i in 0..fit.n() {
        let one_minus_h = 1.0 - f(fit.hat_diag[i]);
        if one_minus_h <= 1e-10 {
            excluded.push(i);
            continue;
        }
        let r = if s > 0.0 {
            f(fit.residuals[i]) / (s * one_minus_h.sqrt())
        } else {
            0.0
        };
        xs.push(f(fit.fitted[i]));
        ys.push(r.abs().sqrt());
    }
    let rho = spearman(&xs, &ys);
    let limit = th.spearman_z / (xs.len().max(1) as f64).sqrt();
    let mut out = CheckResult::new(
        "homoscedasticity",
        if rho.abs() > limit { Verdict::Fail } else { Verdict::Pass },
    )
    .stat("spearman_rho", rho)
    .stat("threshold", limit)
    .stat("excluded_points", excluded.len() as f64);
    out.series = xs.into_iter().zip(ys).map(|(a, b)| [a, b]).collect();
    if !excluded.is_empty() {
        out.notes.push(format!("observations with leverage 1 excluded: {excluded:?}"));
    }
    out.notes
        .push("internally studentized residuals e/(s*sqrt(1-h))".to_owned());
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Influence {
    pub leverage: Vec<f64>,
    /// `+∞` where `Hᵢᵢ = 1`.
    pub cooks_distance: Vec<f64>,
    pub leverage_threshold: f64,
    pub cooks_threshold: f64,
    /// Indices exceeding either threshold.
    pub flagged: Vec<usize>,
}

/// Leverages and Cook's distances `Dᵢ = εᵢ² Hᵢᵢ / (K s² (1 − Hᵢᵢ)²)`.
pub fn influence_values<T: Scalar>(fit: &OlsFit<T>, th: &Thresholds) -> Influence {
    let n = fit.n();
    let k = fit.n_coefficients() as f64;
    let s2 = f(fit.s2);
    let leverage: Vec<f64> = fit.hat_diag.iter().map(|&h| f(h)).collect();
    let cooks: Vec<f64> = leverage
        .iter()
        .zip(&fit.residuals)
        .map(|(&h, &e)| {
            let e = f(e);
            let omh = 1.0 - h;
            if e == 0.0 || s2 == 0.0 {
                0.0
            } else if omh <= 1e-10 {
                f64::INFINITY
            } else {
                e * e * h / (k * s2 * omh * omh)
            }
        })
        .collect();
    let lev_t = th.leverage_factor * k / n as f64;
    let cook_t = th.cook_factor / n as f64;
    let flagged = (0..n)
        .filter(|&i| leverage[i] > lev_t || cooks[i] > cook_t)
        .collect();
    Influence {
        leverage,
        cooks_distance: cooks,
        leverage_threshold: lev_t,
        cooks_threshold: cook_t,
        flagged,
    }
}

pub fn influence<T: Scalar>(fit: &OlsFit<T>, th: &Thresholds) -> CheckResult {
    let inf = influence_values(fit, th);
    let verdict = if inf.flagged.is_empty() { Verdict::Pass } else { Verdict::Warn };
    let max = |v: &[f64]| v.iter().copied().fold(0.0f64, f64::max);
    let mut out = CheckResult::new("influence", verdict)
        .stat("max_leverage", max(&inf.leverage))
        .stat("max_cooks_distance", max(&inf.cooks_distance))
        .stat("leverage_threshold", inf.leverage_threshold)
        .stat("cooks_threshold", inf.cooks_threshold)
        .stat("n_flagged", inf.flagged.len() as f64);
    out.series = inf
        .leverage
        .iter()
        .zip(&inf.cooks_distance)
        .map(|(&h, &d)| [h, d])
        .collect();
    if !inf.flagged.is_empty() {
        out.notes.push(format!("flagged observations: {:?}", inf.flagged));
    }
    out
}

/// Full linear-model suite; multicollinearity only when the design has at
/// least two non-intercept columns.
pub fn ols_suite<T: Scalar>(fit: &OlsFit<T>, th: &Thresholds) -> Result<DiagnosticsReport> {
    let mut checks = vec![residual_vs_fitted(fit, th), normality_check(fit, th)?];
    checks.push(scale_location(fit, th));
    checks.push(influence(fit, th));
    if fit.design.n_columns() >= 3 {
        checks.push(vif(&fit.design, th)?);
    }
    Ok(DiagnosticsReport {
        family: "ols".into(),
        checks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedResiduals {
    pub quantiles: Vec<f64>,
    pub n_sim: usize,
    pub seed: u64,
    pub ks_statistic: f64,
    pub ks_pvalue: f64,
}

/// RNG for observation `i`: ChaCha8 seeded from `seed`, stream `i`.
pub fn observation_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

/// Randomized quantile residual for one binary observation with fitted
/// probability `p`. Draws `n_sim` Bernoulli(p) replicates, then a uniform on
/// `[F(y−), F(y)]` of their empirical CDF.
fn quantile_residual(p: f64, y: f64, n_sim: usize, rng: &mut ChaCha8Rng) -> f64 {
    let zeros = (0..n_sim).filter(|_| rng.random::<f64>() >= p).count();
    let f0 = zeros as f64 / n_sim as f64;
    let (lo, hi) = if y == 0.0 { (0.0, f0) } else { (f0, 1.0) };
    lo + (hi - lo) * rng.random::<f64>()
}

pub fn simulate_quantile_residuals<T: Scalar>(
    fit: &LogitFit<T>,
    n_sim: usize,
    seed: u64,
) -> Result<SimulatedResiduals> {
    simulate_quantile_residuals_with(fit, n_sim, seed, Execution::Parallel)
}

/// Simulation-based quantile residuals for a logit fit, tested for
/// uniformity with a KS test.
pub fn simulate_quantile_residuals_with<T: Scalar>(
    fit: &LogitFit<T>,
    n_sim: usize,
    seed: u64,
    exec: Execution,
) -> Result<SimulatedResiduals> {
    if n_sim < MIN_N_SIM {
        return Err(Error::InvalidArgument(format!(
            "n_sim must be at least {MIN_N_SIM}, got {n_sim}"
        )));
    }
    if !fit.converged {
        return Err(Error::NotConverged(fit.iterations));
    }
    let y = fit.design.response();
    let one = |i: usize| {
        let mut rng = observation_rng(seed, i);
        quantile_residual(f(fit.fitted_prob[i]), f(y[i]), n_sim, &mut rng)
    };
    let quantiles: Vec<f64> = match exec {
        Execution::Serial => (0..fit.n()).map(one).collect(),
        Execution::Parallel => (0..fit.n()).into_par_iter().map(one).collect(),
    };
    let d = ks_statistic(&quantiles, |u: f64| u.clamp(0.0, 1.0));
    Ok(SimulatedResiduals {
        ks_pvalue: kolmogorov_pvalue(d, quantiles.len()),
        ks_statistic: d,
        quantiles,
        n_sim,
        seed,
    })
}

/// Logit suite: uniformity of simulated quantile residuals only.
pub fn logit_suite<T: Scalar>(
    fit: &LogitFit<T>,
    n_sim: usize,
    seed: u64,
    th: &Thresholds,
    exec: Execution,
) -> Result<DiagnosticsReport> {
    let sim = simulate_quantile_residuals_with(fit, n_sim, seed, exec)?;
    let verdict = if sim.ks_pvalue < th.ks_alpha { Verdict::Fail } else { Verdict::Pass };
    let mut sorted = sim.quantiles.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let mut check = CheckResult::new("quantile_residual_uniformity", verdict)
        .stat("ks_statistic", sim.ks_statistic)
        .stat("ks_pvalue", sim.ks_pvalue)
        .stat("mean", mean)
        .stat("n_sim", n_sim as f64)
        .stat("seed", seed as f64);
    check.series = sorted
        .iter()
        .enumerate()
        .map(|(i, &u)| [(i as f64 + 0.5) / n, u])
        .collect();
    Ok(DiagnosticsReport {
        family: "logit".into(),
        checks: vec![check],
    })
}
