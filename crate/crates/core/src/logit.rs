//! Binary logit regression fitted by maximum likelihood (Newton-Raphson with
//! step halving), with Wald inference, average marginal effects and
//! McFadden's pseudo-R².
//!
//! The coefficient covariance is the inverse observed information of the
//! *summed* log-likelihood, `(XᵀWX)⁻¹`. Per-observation information scaled by
//! `1/n` gives the same intervals.

use crate::design::DesignMatrix;
use crate::distributions::{normal_quantile, normal_sf, TailProbability};
use crate::error::{Error, Result};
use crate::linalg::{rank_tolerance, Cholesky, Matrix, Qr};
use crate::ols::{coef_row, CoefRow};
use crate::scalar::{dot, Scalar};

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// `ln(1 + eᶻ)` without overflow.
#[inline]
pub fn softplus<T: Scalar>(z: T) -> T {
    z.max(T::zero()) + (-z.abs()).exp().ln_1p()
}

fn check_binary<T: Scalar>(y: &[T]) -> Result<()> {
    match y.iter().position(|&v| v != T::zero() && v != T::one()) {
        Some(row) => Err(Error::NonBinaryResponse {
            row,
            value: y[row].as_f64(),
        }),
        None => Ok(()),
    }
}

/// `ℓ(β) = Σ yᵢ ηᵢ − ln(1 + e^{ηᵢ})`, with `η = Xβ`.
pub fn log_likelihood<T: Scalar>(beta: &[T], dm: &DesignMatrix<T>) -> Result<T> {
    let y = dm.response();
    check_binary(y)?;
    Ok(loglik_unchecked(dm.matrix(), y, beta))
}

fn loglik_unchecked<T: Scalar>(x: &Matrix<T>, y: &[T], beta: &[T]) -> T {
    x.mul_vec(beta)
        .into_iter()
        .zip(y)
        .map(|(eta, &yi)| yi * eta - softplus(eta))
        .sum()
}

/// Score `Xᵀ(y − p)`.
pub fn gradient<T: Scalar>(beta: &[T], dm: &DesignMatrix<T>) -> Result<Vec<T>> {
    let y = dm.response();
    check_binary(y)?;
    let p: Vec<T> = dm.matrix().mul_vec(beta).into_iter().map(sigmoid).collect();
    let r: Vec<T> = y.iter().zip(&p).map(|(&a, &b)| a - b).collect();
    Ok(dm.matrix().tr_mul_vec(&r))
}

/// Hessian `−XᵀWX`, `W = diag(pᵢ(1 − pᵢ))`.
pub fn hessian<T: Scalar>(beta: &[T], dm: &DesignMatrix<T>) -> Result<Matrix<T>> {
    check_binary(dm.response())?;
    let mut h = information(dm.matrix(), beta);
    for i in 0..h.rows() {
        for j in 0..h.cols() {
            h[(i, j)] = -h[(i, j)];
        }
    }
    Ok(h)
}

/// Observed information `XᵀWX`.
fn information<T: Scalar>(x: &Matrix<T>, beta: &[T]) -> Matrix<T> {
    let w: Vec<T> = x
        .mul_vec(beta)
        .into_iter()
        .map(|eta| {
            let p = sigmoid(eta);
            p * (T::one() - p)
        })
        .collect();
    x.weighted_gram(Some(&w))
}

#[derive(Debug, Clone, Copy)]
pub struct LogitOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
    pub rel_loglik_tol: f64,
    pub max_halvings: usize,
    /// ‖β‖∞ beyond which a non-converging fit is reported as separation.
    pub separation_bound: f64,
}

impl Default for LogitOptions {
    fn default() -> Self {
        LogitOptions {
            max_iter: 100,
            grad_tol: 1e-8,
            rel_loglik_tol: 1e-12,
            max_halvings: 30,
            separation_bound: 30.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LogitFit<T> {
    pub beta_hat: Vec<T>,
    /// `(XᵀWX)⁻¹` at β̂.
    pub info_inv: Matrix<T>,
    pub loglik_full: T,
    pub loglik_null: T,
    pub converged: bool,
    pub iterations: usize,
    pub fitted_prob: Vec<T>,
    pub design: DesignMatrix<T>,
}

impl<T: Scalar> LogitFit<T> {
    pub fn n(&self) -> usize {
        self.fitted_prob.len()
    }

    pub fn n_coefficients(&self) -> usize {
        self.beta_hat.len()
    }

    fn ensure_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NotConverged(self.iterations))
        }
    }
}

/// Closed-form intercept-only log-likelihood `n[ȳ ln ȳ + (1 − ȳ) ln(1 − ȳ)]`.
pub fn null_loglik<T: Scalar>(y: &[T]) -> T {
    let n = T::from_usize_lossy(y.len());
    let ones = y.iter().copied().sum::<T>();
    let zeros = n - ones;
    let term = |k: T| if k > T::zero() { k * (k / n).ln() } else { T::zero() };
    term(ones) + term(zeros)
}

fn max_abs<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

pub fn fit_logit<T: Scalar>(dm: &DesignMatrix<T>) -> Result<LogitFit<T>> {
    fit_logit_with(dm, &LogitOptions::default())
}

/// Newton-Raphson from β = 0. Each Newton step is halved until ℓ does not
/// decrease. Converged when the gradient and the Newton step are both
/// negligible, or when ℓ has stopped changing in relative terms for three
/// consecutive steps.
pub fn fit_logit_with<T: Scalar>(dm: &DesignMatrix<T>, opts: &LogitOptions) -> Result<LogitFit<T>> {
    let x = dm.matrix();
    let y = dm.response();
    check_binary(y)?;
    let ones = y.iter().filter(|&&v| v == T::one()).count();
    if ones == 0 || ones == y.len() {
        return Err(Error::ConstantResponse);
    }
    let (n, p) = (x.rows(), x.cols());
    if n <= p {
        return Err(Error::TooFewObservations { n, columns: p });
    }
    if let Some(j) = Qr::new(x).deficient_column(rank_tolerance(n)) {
        return Err(Error::RankDeficient(dm.columns()[j].name.clone()));
    }

    let grad_tol = T::lit(opts.grad_tol);
    let rel_tol = T::lit(opts.rel_loglik_tol);
    let chol_tol = T::epsilon() * T::lit(16.0);
    let singular = || Error::Separation("information matrix numerically singular".into());

    let mut beta = vec![T::zero(); p];
    let mut ll = loglik_unchecked(x, y, &beta);
    let mut converged = false;
    let mut iterations = 0;
    let mut stalled = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let fitted: Vec<T> = x.mul_vec(&beta).into_iter().map(sigmoid).collect();
        let resid: Vec<T> = y.iter().zip(&fitted).map(|(&a, &b)| a - b).collect();
        let g = x.tr_mul_vec(&resid);
        let chol = Cholesky::new(&information(x, &beta), chol_tol).ok_or_else(singular)?;
        let step = chol.solve(&g);
        let step_small = max_abs(&step) <= T::lit(1e-6) * (T::one() + max_abs(&beta));
        if max_abs(&g) <= grad_tol && step_small {
            converged = true;
            break;
        }

        let mut t = T::one();
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let cand: Vec<T> = beta.iter().zip(&step).map(|(&b, &s)| b + t * s).collect();
            let cand_ll = loglik_unchecked(x, y, &cand);
            // near the optimum ℓ changes by less than its own rounding error
            let noise = T::epsilon() * T::lit(64.0) * (ll.abs() + T::one());
            if cand_ll >= ll - noise {
                accepted = Some((cand, cand_ll));
                break;
            }
            t = t / T::lit(2.0);
        }
        let Some((next, next_ll)) = accepted else {
            // No ascent direction left at working precision.
            converged = max_abs(&g) <= grad_tol.sqrt();
            break;
        };
        let rel_change = (next_ll - ll).abs() / ll.abs().max(T::min_positive_value());
        beta = next;
        ll = next_ll;
        // Newton converges quadratically, so the gradient test above normally
        // fires one step after ℓ stalls. Repeated stalls mean the gradient sits
        // at its rounding floor.
        stalled = if rel_change <= rel_tol && step_small { stalled + 1 } else { 0 };
        if stalled >= 3 {
            converged = true;
            break;
        }
    }

    let big = max_abs(&beta) > T::lit(opts.separation_bound);
    if !converged {
        return Err(if big {
            Error::Separation(format!(
                "coefficients diverge (max |beta| > {}) without convergence",
                opts.separation_bound
            ))
        } else {
            Error::NotConverged(iterations)
        });
    }
    let info_inv = Cholesky::new(&information(x, &beta), chol_tol)
        .ok_or_else(singular)?
        .inverse();
    let fitted_prob: Vec<T> = x.mul_vec(&beta).into_iter().map(sigmoid).collect();
    if fitted_prob.iter().any(|&q| q <= T::zero() || q >= T::one()) {
        return Err(Error::Separation("fitted probabilities saturate at 0 or 1".into()));
    }
    Ok(LogitFit {
        beta_hat: beta,
        info_inv,
        loglik_full: ll,
        loglik_null: null_loglik(y),
        converged,
        iterations,
        fitted_prob,
        design: dm.clone(),
    })
}

/// Wald table: `se = √info_inv_kk`, `z = β̂/se`, normal p-values and intervals.
pub fn coef_table_logit<T: Scalar>(
    fit: &LogitFit<T>,
    alpha: TailProbability<T>,
) -> Result<Vec<CoefRow<T>>> {
    fit.ensure_converged()?;
    let z = normal_quantile(T::one() - alpha.get() / T::lit(2.0))?;
    fit.design
        .columns()
        .iter()
        .enumerate()
        .map(|(k, meta)| {
            let se = fit.info_inv[(k, k)].max(T::zero()).sqrt();
            coef_row(&meta.name, fit.beta_hat[k], se, z, |s| {
                Ok(T::lit(2.0) * normal_sf(s.abs()))
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffectKind {
    /// Mean of `σ'(xᵢβ)·β_k`.
    Derivative,
    /// Mean of `σ(xᵢβ | x_k = 1) − σ(xᵢβ | x_k = 0)` for dummy columns.
    DiscreteChange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalEffect<T> {
    pub column: String,
    pub kind: EffectKind,
    pub ame: T,
    pub se: T,
    pub z: Option<T>,
    pub p_value: Option<T>,
    pub ci: (T, T),
}

fn effect_kind<T: Scalar>(dm: &DesignMatrix<T>, k: usize) -> EffectKind {
    if dm.columns()[k].is_dummy() {
        EffectKind::DiscreteChange
    } else {
        EffectKind::Derivative
    }
}

fn with_column_set<T: Scalar>(row: &[T], k: usize, value: T) -> Vec<T> {
    let mut r = row.to_vec();
    r[k] = value;
    r
}

/// Sample AME of design column `k` at an arbitrary coefficient vector.
pub fn ame_at<T: Scalar>(dm: &DesignMatrix<T>, k: usize, beta: &[T]) -> T {
    let x = dm.matrix();
    let n = T::from_usize_lossy(x.rows());
    let total: T = match effect_kind(dm, k) {
        EffectKind::Derivative => (0..x.rows())
            .map(|i| {
                let p = sigmoid(dot(x.row(i), beta));
                p * (T::one() - p)
            })
            .sum::<T>()
            * beta[k],
        EffectKind::DiscreteChange => (0..x.rows())
            .map(|i| {
                let on = sigmoid(dot(&with_column_set(x.row(i), k, T::one()), beta));
                let off = sigmoid(dot(&with_column_set(x.row(i), k, T::zero()), beta));
                on - off
            })
            .sum(),
    };
    total / n
}

/// Analytic gradient of [`ame_at`] with respect to β.
pub fn ame_gradient_at<T: Scalar>(dm: &DesignMatrix<T>, k: usize, beta: &[T]) -> Vec<T> {
    let x = dm.matrix();
    let p = x.cols();
    let n = T::from_usize_lossy(x.rows());
    let one = T::one();
    let two = T::lit(2.0);
    let mut grad = vec![T::zero(); p];
    match effect_kind(dm, k) {
        EffectKind::Derivative => {
            // d/dβ_j [σ'(η) β_k] = σ'(η)(1 − 2σ(η)) x_ij β_k + 1[j = k] σ'(η)
            let mut mean_w = T::zero();
            for i in 0..x.rows() {
                let row = x.row(i);
                let s = sigmoid(dot(row, beta));
                let w = s * (one - s);
                mean_w = mean_w + w;
                let c = w * (one - two * s) * beta[k];
                for (g, &xij) in grad.iter_mut().zip(row) {
                    *g = *g + c * xij;
                }
            }
            grad[k] = grad[k] + mean_w;
        }
        EffectKind::DiscreteChange => {
            for i in 0..x.rows() {
                let on = with_column_set(x.row(i), k, one);
                let off = with_column_set(x.row(i), k, T::zero());
                let s1 = sigmoid(dot(&on, beta));
                let s0 = sigmoid(dot(&off, beta));
                let (w1, w0) = (s1 * (one - s1), s0 * (one - s0));
                for j in 0..p {
                    grad[j] = grad[j] + w1 * on[j] - w0 * off[j];
                }
            }
        }
    }
    grad.into_iter().map(|g| g / n).collect()
}

/// AME of design column `column` with a delta-method interval:
/// `Var = ∇gᵀ (XᵀWX)⁻¹ ∇g`, `CI = AME ± z_{1−α/2} √Var`.
pub fn average_marginal_effect<T: Scalar>(
    fit: &LogitFit<T>,
    column: &str,
    alpha: TailProbability<T>,
) -> Result<MarginalEffect<T>> {
    fit.ensure_converged()?;
    let dm = &fit.design;
    let k = dm
        .column_index(column)
        .ok_or_else(|| Error::MissingColumn(column.to_owned()))?;
    if k == 0 {
        return Err(Error::InvalidArgument("the intercept has no marginal effect".into()));
    }
    let ame = ame_at(dm, k, &fit.beta_hat);
    let grad = ame_gradient_at(dm, k, &fit.beta_hat);
    let var = fit.info_inv.quad_form(&grad, &grad).max(T::zero());
    let se = var.sqrt();
    let zq = normal_quantile(T::one() - alpha.get() / T::lit(2.0))?;
    let (z, p_value) = if se > T::zero() {
        let z = ame / se;
        (Some(z), Some(T::lit(2.0) * normal_sf(z.abs())))
    } else {
        (None, None)
    };
    Ok(MarginalEffect {
        column: column.to_owned(),
        kind: effect_kind(dm, k),
        ame,
        se,
        z,
        p_value,
        ci: (ame - zq * se, ame + zq * se),
    })
}

/// AMEs for every non-intercept column.
pub fn all_marginal_effects<T: Scalar>(
    fit: &LogitFit<T>,
    alpha: TailProbability<T>,
) -> Result<Vec<MarginalEffect<T>>> {
    fit.design
        .columns()
        .iter()
        .skip(1)
        .map(|c| average_marginal_effect(fit, &c.name, alpha))
        .collect()
}

/// `1 − ℓ_full / ℓ_null`.
pub fn mcfadden_r2<T: Scalar>(fit: &LogitFit<T>) -> Result<T> {
    fit.ensure_converged()?;
    if fit.loglik_null == T::zero() {
        return Err(Error::ConstantResponse);
    }
    Ok(T::one() - fit.loglik_full / fit.loglik_null)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dm(y: &[f64], x: Option<&[f64]>) -> DesignMatrix<f64> {
        let regs = x.map(|x| vec![("x".to_string(), x.to_vec())]).unwrap_or_default();
        DesignMatrix::from_columns("y", y.to_vec(), regs).unwrap()
    }

    #[test]
    fn loglik_at_zero() {
        let d = dm(&[0.0, 1.0, 1.0, 0.0, 1.0], Some(&[0.1, 0.2, 0.3, 0.4, 0.5]));
        let ll = log_likelihood(&[0.0, 0.0], &d).unwrap();
        assert!((ll - 5.0 * 0.5f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn saturation_limit() {
        let d = dm(&[1.0, 1.0], None);
        let ll = log_likelihood(&[700.0], &d).unwrap();
        assert!(ll <= 0.0 && ll > -1e-300);
        let ll = log_likelihood(&[-700.0], &d).unwrap();
        assert!((ll + 1400.0).abs() < 1e-9);
    }

    #[test]
    fn non_binary_response() {
        let d = dm(&[0.0, 0.5, 1.0], None);
        assert!(matches!(log_likelihood(&[0.0], &d), Err(Error::NonBinaryResponse { row: 1, .. })));
        assert!(fit_logit(&d).is_err());
    }

    #[test]
    fn intercept_only_fits() {
        let f = fit_logit(&dm(&[0.0, 1.0, 0.0, 1.0], None)).unwrap();
        assert!(f.beta_hat[0].abs() < 1e-12);
        let f = fit_logit(&dm(&[1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0], None)).unwrap();
        assert!((f.beta_hat[0] - 3f64.ln()).abs() < 1e-10);
        assert!(mcfadden_r2(&f).unwrap().abs() < 1e-12);
    }

    #[test]
    fn constant_and_separable_responses() {
        assert_eq!(fit_logit(&dm(&[1.0, 1.0, 1.0], None)).unwrap_err(), Error::ConstantResponse);
        let x = [-2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0];
        let y = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0];
        assert!(matches!(fit_logit(&dm(&y, Some(&x))), Err(Error::Separation(_))));
    }

    #[test]
    fn quasi_complete_separation() {
        let x = [-2.0, -1.0, 0.0, 0.0, 1.0, 2.0];
        let y = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        assert!(matches!(fit_logit(&dm(&y, Some(&x))), Err(Error::Separation(_))));
    }

    #[test]
    fn quarter_slope_when_probabilities_are_half() {
        let d = dm(&[0.0, 1.0, 1.0, 0.0], Some(&[1.0, 1.0, -1.0, -1.0]));
        let f = fit_logit(&d).unwrap();
        // balanced: β̂ = 0 exactly, so AME = 0
        let me = average_marginal_effect(&f, "x", TailProbability::new(0.05).unwrap()).unwrap();
        assert!(me.ame.abs() < 1e-15);
        // at β = (0, b) all probabilities are 1/2 when x ≡ 0 ... use the evaluator directly
        let zero_x = dm(&[0.0, 1.0, 1.0, 0.0], Some(&[0.0, 0.0, 0.0, 0.0]));
        assert!((ame_at(&zero_x, 1, &[0.0, 0.8]) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn mcfadden_half() {
        let d = dm(&[0.0, 1.0, 1.0, 0.0, 1.0], Some(&[0.1, 0.9, 0.6, 0.3, 0.2]));
        let mut f = fit_logit(&d).unwrap();
        f.loglik_full = f.loglik_null / 2.0;
        assert!((mcfadden_r2(&f).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn intercept_has_no_ame() {
        let d = dm(&[0.0, 1.0, 1.0, 0.0, 1.0], Some(&[0.1, 0.9, 0.6, 0.3, 0.2]));
        let f = fit_logit(&d).unwrap();
        let a = TailProbability::new(0.05).unwrap();
        assert!(average_marginal_effect(&f, "(Intercept)", a).is_err());
        assert!(matches!(average_marginal_effect(&f, "zz", a), Err(Error::MissingColumn(_))));
    }
}
