//! Econometric regression toolkit for machine-learning experiment logs.
//!
//! Tabular run logs are loaded into a [`Dataset`], R-style formulas such as
//! `acc ~ pretrain * arch + n_initial_classes` are parsed into a
//! [`ModelFormula`] and expanded into a dummy-coded design matrix. The design
//! is then analysed with:
//!
//! - OLS with t inference ([`ols`])
//! - ANOVA with partial η² ([`anova`])
//! - logit with average marginal effects ([`logit`])
//! - AIC model comparison ([`selection`])
//! - regression diagnostics ([`diagnostics`])
//!
//! [`report`] renders the results as canonical JSON or aligned text.
//!
//! The numerical core is generic over the floating-point type through
//! [`Scalar`]; the aliases below fix it to `f64` (and `f32`).

pub mod anova;
pub mod dataset;
pub mod demo;
pub mod design;
pub mod diagnostics;
pub mod distributions;
pub mod error;
pub mod formula;
pub mod linalg;
pub mod logit;
pub mod ols;
pub mod report;
pub mod scalar;
pub mod selection;

pub use dataset::{load_csv, parse_schema, Column, ColumnKind, Dataset, Schema};
pub use error::{Error, Result};
pub use formula::{parse, ModelFormula, Term};
pub use scalar::Scalar;
pub use selection::Family;

pub type DesignMatrixF64 = design::DesignMatrix<f64>;
pub type DesignMatrixF32 = design::DesignMatrix<f32>;
pub type MatrixF64 = linalg::Matrix<f64>;
pub type MatrixF32 = linalg::Matrix<f32>;
pub type OlsFitF64 = ols::OlsFit<f64>;
pub type OlsFitF32 = ols::OlsFit<f32>;
pub type CoefRowF64 = ols::CoefRow<f64>;
pub type CoefRowF32 = ols::CoefRow<f32>;
pub type AnovaTableF64 = anova::AnovaTable<f64>;
pub type AnovaTableF32 = anova::AnovaTable<f32>;
pub type LogitFitF64 = logit::LogitFit<f64>;
pub type LogitFitF32 = logit::LogitFit<f32>;
pub type MarginalEffectF64 = logit::MarginalEffect<f64>;
pub type MarginalEffectF32 = logit::MarginalEffect<f32>;
pub type ComparisonTableF64 = selection::ComparisonTable<f64>;
pub type ComparisonTableF32 = selection::ComparisonTable<f32>;
