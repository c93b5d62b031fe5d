//! Ordinary least squares with classical (homoscedastic) inference.
//!
//! The fit goes through a Householder QR of the design, never through an
//! explicit inverse of the normal equations. `(XᵀX)⁻¹` is rebuilt from the
//! triangular factor for the covariance.

use crate::dataset::Dataset;
use crate::design::DesignMatrix;
use crate::distributions::{student_quantile, student_two_sided_p, TailProbability};
use crate::error::{Error, Result};
use crate::linalg::{rank_tolerance, Matrix, Qr};
use crate::scalar::{dot, mean, Scalar};

#[derive(Debug, Clone)]
pub struct OlsFit<T> {
    pub beta_hat: Vec<T>,
    /// `s²(XᵀX)⁻¹`
    pub cov_beta: Matrix<T>,
    /// `(XᵀX)⁻¹`
    pub gram_inv: Matrix<T>,
    pub residuals: Vec<T>,
    pub fitted: Vec<T>,
    /// Unbiased error variance `RSS / (n − K)`.
    pub s2: T,
    pub rss: T,
    /// Centered total sum of squares of the response.
    pub tss: T,
    /// `n − K`, K counting every column including the intercept.
    pub df_resid: usize,
    pub hat_diag: Vec<T>,
    pub r2: T,
    pub r2_adj: T,
    pub design: DesignMatrix<T>,
}

/// Raw least-squares solution shared by [`fit`] and auxiliary regressions.
pub(crate) struct LeastSquares<T> {
    pub qr: Qr<T>,
    pub beta: Vec<T>,
    pub fitted: Vec<T>,
    pub residuals: Vec<T>,
    pub rss: T,
}

/// Solves `min ‖y − Xb‖²`. `name_of` names a column for rank errors.
pub(crate) fn least_squares<T: Scalar>(
    x: &Matrix<T>,
    y: &[T],
    name_of: impl Fn(usize) -> String,
) -> Result<LeastSquares<T>> {
    let (n, p) = (x.rows(), x.cols());
    if n <= p {
        return Err(Error::TooFewObservations { n, columns: p });
    }
    let qr = Qr::new(x);
    if let Some(j) = qr.deficient_column(rank_tolerance(n)) {
        return Err(Error::RankDeficient(name_of(j)));
    }
    let beta = qr.solve_least_squares(y);
    let fitted = x.mul_vec(&beta);
    let residuals: Vec<T> = y.iter().zip(&fitted).map(|(&a, &b)| a - b).collect();
    let rss = dot(&residuals, &residuals);
    Ok(LeastSquares {
        qr,
        beta,
        fitted,
        residuals,
        rss,
    })
}

/// Mean with a correction pass; exact for constant vectors.
pub(crate) fn refined_mean<T: Scalar>(xs: &[T]) -> T {
    let m = mean(xs);
    m + xs.iter().map(|&x| x - m).sum::<T>() / T::from_usize_lossy(xs.len())
}

pub(crate) fn total_ss<T: Scalar>(y: &[T]) -> T {
    let m = refined_mean(y);
    y.iter().map(|&v| (v - m) * (v - m)).sum()
}

/// True when a sum of squares is indistinguishable from rounding noise
/// relative to the response scale.
pub(crate) fn negligible_ss<T: Scalar>(ss: T, y: &[T]) -> bool {
    let scale = dot(y, y).sqrt().max(T::min_positive_value());
    let noise = T::epsilon() * T::lit(64.0) * T::from_usize_lossy(y.len()).sqrt() * scale;
    ss.sqrt() <= noise
}

/// Fits the linear model `y = Xβ + ε` by least squares.
pub fn fit<T: Scalar>(dm: &DesignMatrix<T>) -> Result<OlsFit<T>> {
    let x = dm.matrix();
    let y = dm.response();
    let ls = least_squares(x, y, |j| dm.columns()[j].name.clone())?;
    let (n, p) = (x.rows(), x.cols());
    let df_resid = n - p;

    let tss = total_ss(y);
    let exact = negligible_ss(ls.rss, y);
    let rss = if exact { T::zero() } else { ls.rss };
    let s2 = rss / T::from_usize_lossy(df_resid);
    let gram_inv = ls.qr.gram_inverse();
    let mut cov_beta = gram_inv.clone();
    for i in 0..p {
        for j in 0..p {
            cov_beta[(i, j)] = cov_beta[(i, j)] * s2;
        }
    }
    let (r2, r2_adj) = if negligible_ss(tss, y) {
        (T::zero(), T::zero())
    } else {
        let r2 = T::one() - rss / tss;
        let adj = T::one()
            - (T::one() - r2) * T::from_usize_lossy(n - 1) / T::from_usize_lossy(df_resid);
        (r2, adj)
    };
    Ok(OlsFit {
        hat_diag: ls.qr.hat_diagonal(),
        beta_hat: ls.beta,
        cov_beta,
        gram_inv,
        residuals: ls.residuals,
        fitted: ls.fitted,
        s2,
        rss,
        tss,
        df_resid,
        r2,
        r2_adj,
        design: dm.clone(),
    })
}

impl<T: Scalar> OlsFit<T> {
    pub fn n(&self) -> usize {
        self.residuals.len()
    }

    /// Number of estimated coefficients (intercept included).
    pub fn n_coefficients(&self) -> usize {
        self.beta_hat.len()
    }

    pub fn s(&self) -> T {
        self.s2.sqrt()
    }

    /// The three sample formulations of R²: squared correlation of `(y, ŷ)`,
    /// `Var(ŷ)/Var(y)`, and `1 − Var(ε)/Var(y)`.
    pub fn r2_formulations(&self) -> [T; 3] {
        let y = self.design.response();
        let yhat = &self.fitted;
        let my = refined_mean(y);
        let mf = refined_mean(yhat);
        let me = refined_mean(&self.residuals);
        let cov: T = y.iter().zip(yhat).map(|(&a, &b)| (a - my) * (b - mf)).sum();
        let vy: T = y.iter().map(|&a| (a - my) * (a - my)).sum();
        let vf: T = yhat.iter().map(|&b| (b - mf) * (b - mf)).sum();
        let ve: T = self.residuals.iter().map(|&e| (e - me) * (e - me)).sum();
        [cov * cov / (vy * vf), vf / vy, T::one() - ve / vy]
    }
}

/// One row of a coefficient table.
///
/// `flagged` rows have a zero standard error; their test statistic,
/// p-value and interval are left empty.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefRow<T> {
    pub name: String,
    pub estimate: T,
    pub se: T,
    pub statistic: Option<T>,
    pub p_value: Option<T>,
    pub ci: Option<(T, T)>,
    pub flagged: bool,
}

impl<T: Scalar> CoefRow<T> {
    /// True when the interval excludes zero.
    pub fn significant(&self) -> bool {
        matches!(self.ci, Some((lo, hi)) if lo > T::zero() || hi < T::zero())
    }
}

/// Builds a coefficient row from an estimate, its standard error and the
/// critical value / p-value law of the caller.
pub(crate) fn coef_row<T: Scalar>(
    name: &str,
    estimate: T,
    se: T,
    critical: T,
    p_of: impl Fn(T) -> Result<T>,
) -> Result<CoefRow<T>> {
    if !se.is_finite() || se <= T::zero() {
        return Ok(CoefRow {
            name: name.to_owned(),
            estimate,
            se: if se.is_finite() { se } else { T::zero() },
            statistic: None,
            p_value: None,
            ci: None,
            flagged: true,
        });
    }
    let stat = estimate / se;
    Ok(CoefRow {
        name: name.to_owned(),
        estimate,
        se,
        statistic: Some(stat),
        p_value: Some(p_of(stat)?),
        ci: Some((estimate - critical * se, estimate + critical * se)),
        flagged: false,
    })
}

/// t-based coefficient table: `se = √cov_kk`, `t = β̂/se`, two-sided p with
/// `n − K` degrees of freedom, and `β̂ ± t_{n−K, 1−α/2}·se`.
pub fn coef_table<T: Scalar>(fit: &OlsFit<T>, alpha: TailProbability<T>) -> Result<Vec<CoefRow<T>>> {
    let df = T::from_usize_lossy(fit.df_resid);
    let crit = student_quantile(T::one() - alpha.get() / T::lit(2.0), df)?;
    fit.design
        .columns()
        .iter()
        .enumerate()
        .map(|(k, meta)| {
            let se = fit.cov_beta[(k, k)].max(T::zero()).sqrt();
            coef_row(&meta.name, fit.beta_hat[k], se, crit, |t| student_two_sided_p(t, df))
        })
        .collect()
}

/// `ŷ = X_new β̂` for rows already encoded with the fit's design.
pub fn predict_matrix<T: Scalar>(fit: &OlsFit<T>, x: &Matrix<T>) -> Result<Vec<T>> {
    if x.cols() != fit.beta_hat.len() {
        return Err(Error::ColumnMismatch(format!(
            "expected {} columns, got {}",
            fit.beta_hat.len(),
            x.cols()
        )));
    }
    Ok(x.mul_vec(&fit.beta_hat))
}

/// Predicts for new observations, encoding them with the fit-time coding.
pub fn predict<T: Scalar>(fit: &OlsFit<T>, newdata: &Dataset) -> Result<Vec<T>> {
    let x = fit.design.encode_rows(newdata)?;
    predict_matrix(fit, &x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Column;
    use crate::design::build_design_matrix;
    use crate::formula::parse;

    fn simple(xs: &[f64], ys: &[f64]) -> DesignMatrix<f64> {
        DesignMatrix::from_columns("y", ys.to_vec(), vec![("x".into(), xs.to_vec())]).unwrap()
    }

    fn alpha() -> TailProbability<f64> {
        TailProbability::new(0.05).unwrap()
    }

    #[test]
    fn collinear_points_are_interpolated() {
        let f = fit(&simple(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0])).unwrap();
        assert!((f.beta_hat[0] - 1.0).abs() < 1e-12);
        assert!((f.beta_hat[1] - 2.0).abs() < 1e-12);
        assert!(f.residuals.iter().all(|e| e.abs() < 1e-12));
        assert_eq!(f.r2, 1.0);
    }

    #[test]
    fn two_points_two_columns_is_rejected() {
        let dm = DesignMatrix::<f64>::from_columns("y", vec![1.0, 5.0], vec![("x".into(), vec![0.0, 2.0])]);
        assert_eq!(dm.unwrap_err(), Error::TooFewObservations { n: 2, columns: 2 });
    }

    #[test]
    fn constant_response() {
        let f = fit(&simple(&[0.3, 1.0, 2.5, 4.0], &[0.1; 4])).unwrap();
        assert!((f.beta_hat[0] - 0.1).abs() < 1e-14);
        assert!(f.beta_hat[1].abs() < 1e-14);
        assert_eq!(f.r2, 0.0);
    }

    #[test]
    fn duplicated_column_names_the_offender() {
        let ds = Dataset::new(vec![
            Column::continuous("y", vec![1.0, 2.0, 0.5, 3.0, 2.2]),
            Column::continuous("X1", vec![0.1, 0.7, 0.3, 0.9, 0.4]),
            Column::continuous("X2", vec![0.1, 0.7, 0.3, 0.9, 0.4]),
        ])
        .unwrap();
        let dm = build_design_matrix::<f64>(&parse("y ~ X1 + X2").unwrap(), &ds).unwrap();
        assert_eq!(fit(&dm).unwrap_err(), Error::RankDeficient("X2".into()));
    }

    #[test]
    fn null_coefficient_row() {
        // x is orthogonal to y around its mean, so the slope is exactly 0
        let f = fit(&simple(&[-1.0, 0.0, 1.0, 0.0], &[1.0, 2.0, 1.0, 0.0])).unwrap();
        let rows = coef_table(&f, alpha()).unwrap();
        let slope = &rows[1];
        assert!(slope.estimate.abs() < 1e-15);
        assert!((slope.p_value.unwrap() - 1.0).abs() < 1e-12);
        let (lo, hi) = slope.ci.unwrap();
        assert!((lo + hi).abs() < 1e-14);

        let exact = coef_row("b", 0.0, 0.3, 2.0, |t| student_two_sided_p(t, 5.0)).unwrap();
        assert_eq!(exact.statistic, Some(0.0));
        assert_eq!(exact.p_value, Some(1.0));
        assert_eq!(exact.ci, Some((-0.6, 0.6)));
    }

    #[test]
    fn exact_fit_flags_every_row() {
        let f = fit(&simple(&[0.0, 1.0, 2.0, 3.0], &[1.0, 3.0, 5.0, 7.0])).unwrap();
        assert_eq!(f.s2, 0.0);
        let rows = coef_table(&f, alpha()).unwrap();
        assert!(rows.iter().all(|r| r.flagged && r.se == 0.0 && r.ci.is_none()));
    }

    #[test]
    fn prediction_paths() {
        let ds = Dataset::new(vec![
            Column::continuous("y", vec![1.0, 2.1, 2.9, 4.2, 3.0, 2.0]),
            Column::continuous("x", vec![0.0, 1.0, 2.0, 3.0, 1.5, 0.5]),
            Column::categorical("arch", vec!["vit", "resnet", "vit", "resnet", "vit", "resnet"]),
        ])
        .unwrap();
        let dm = build_design_matrix::<f64>(&parse("y ~ x + arch").unwrap(), &ds).unwrap();
        let f = fit(&dm).unwrap();
        let again = predict(&f, &ds).unwrap();
        for (a, b) in again.iter().zip(&f.fitted) {
            assert!((a - b).abs() < 1e-12);
        }
        let zero = Dataset::new(vec![
            Column::continuous("x", vec![0.0]),
            Column::categorical("arch", vec!["resnet"]),
        ])
        .unwrap();
        assert!((predict(&f, &zero).unwrap()[0] - f.beta_hat[0]).abs() < 1e-15);
        let unseen = Dataset::new(vec![
            Column::continuous("x", vec![0.0]),
            Column::categorical("arch", vec!["mamba"]),
        ])
        .unwrap();
        assert!(matches!(predict(&f, &unseen), Err(Error::UnseenLevel { .. })));
        assert!(matches!(
            predict_matrix(&f, &Matrix::zeros(1, 2)),
            Err(Error::ColumnMismatch(_))
        ));
    }

    #[test]
    fn significance_marker() {
        let row = |lo, hi| CoefRow {
            name: "b".into(),
            estimate: 0.0,
            se: 1.0,
            statistic: None,
            p_value: None,
            ci: Some((lo, hi)),
            flagged: false,
        };
        assert!(row(0.1, 0.5).significant());
        assert!(!row(-0.2, 0.3).significant());
    }
}
