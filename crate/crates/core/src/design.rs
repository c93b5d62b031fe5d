//! Compiling a [`ModelFormula`] against a [`Dataset`] into a numeric design
//! matrix with an intercept, treatment (dummy) coding and product columns.

use std::collections::BTreeMap;
use std::ops::Range;

use crate::dataset::{Column, ColumnData, Dataset};
use crate::error::{Error, Result};
use crate::formula::{ModelFormula, Term};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// One factor of a design column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Factor {
    Continuous(String),
    Dummy { variable: String, level: String },
}

impl Factor {
    fn label(&self) -> String {
        match self {
            Factor::Continuous(v) => v.clone(),
            Factor::Dummy { variable, level } => format!("{variable}={level}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMeta {
    pub name: String,
    /// `None` for the intercept.
    pub term: Option<Term>,
    /// Product of these factors gives the column; empty for the intercept.
    pub factors: Vec<Factor>,
}

impl ColumnMeta {
    pub fn is_intercept(&self) -> bool {
        self.term.is_none()
    }

    /// True for a single dummy column (a categorical main effect level).
    pub fn is_dummy(&self) -> bool {
        matches!(self.factors.as_slice(), [Factor::Dummy { .. }])
    }
}

/// How a variable was encoded at fit time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VariableCoding {
    Continuous,
    /// `levels[0]` is the reference level.
    Categorical { levels: Vec<String> },
}

/// Options for [`build_design_matrix_with`].
#[derive(Debug, Clone, Default)]
pub struct DesignOptions {
    /// Variable → reference level, overriding the lexicographic minimum.
    pub reference_levels: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix<T> {
    matrix: Matrix<T>,
    columns: Vec<ColumnMeta>,
    response_name: String,
    response: Vec<T>,
    term_spans: Vec<(Term, Range<usize>)>,
    coding: BTreeMap<String, VariableCoding>,
}

impl<T: Scalar> DesignMatrix<T> {
    /// Design from raw continuous regressors; an intercept column is prepended.
    pub fn from_columns(
        response_name: impl Into<String>,
        response: Vec<T>,
        regressors: Vec<(String, Vec<T>)>,
    ) -> Result<Self> {
        let n = response.len();
        let mut cols = vec![vec![T::one(); n]];
        let mut metas = vec![intercept_meta()];
        let mut spans = Vec::new();
        let mut coding = BTreeMap::new();
        for (name, values) in regressors {
            if values.len() != n {
                return Err(Error::ColumnMismatch(format!(
                    "regressor '{name}' has {} rows, response has {n}",
                    values.len()
                )));
            }
            spans.push((Term::Main(name.clone()), cols.len()..cols.len() + 1));
            metas.push(ColumnMeta {
                name: name.clone(),
                term: Some(Term::Main(name.clone())),
                factors: vec![Factor::Continuous(name.clone())],
            });
            coding.insert(name, VariableCoding::Continuous);
            cols.push(values);
        }
        check_dimensions(n, cols.len())?;
        Ok(DesignMatrix {
            matrix: Matrix::from_columns(&cols),
            columns: metas,
            response_name: response_name.into(),
            response,
            term_spans: spans,
            coding,
        })
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn columns(&self) -> &[ColumnMeta] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn response(&self) -> &[T] {
        &self.response
    }

    pub fn response_name(&self) -> &str {
        &self.response_name
    }

    pub fn term_spans(&self) -> &[(Term, Range<usize>)] {
        &self.term_spans
    }

    pub fn coding(&self) -> &BTreeMap<String, VariableCoding> {
        &self.coding
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    /// Number of columns including the intercept.
    pub fn n_columns(&self) -> usize {
        self.matrix.cols()
    }

    /// Same design with a different response vector.
    pub fn with_response(&self, response: Vec<T>) -> Result<Self> {
        if response.len() != self.n() {
            return Err(Error::ColumnMismatch(format!(
                "response has {} rows, design has {}",
                response.len(),
                self.n()
            )));
        }
        let mut out = self.clone();
        out.response = response;
        Ok(out)
    }

    /// Encodes new observations with the fit-time coding (same columns,
    /// same reference levels). Unseen categorical levels are rejected.
    pub fn encode_rows(&self, ds: &Dataset) -> Result<Matrix<T>> {
        let n = ds.n();
        let mut cols = Vec::with_capacity(self.columns.len());
        for meta in &self.columns {
            let mut col = vec![T::one(); n];
            for factor in &meta.factors {
                let values = match factor {
                    Factor::Continuous(var) => {
                        let c = ds.column(var)?;
                        let v = c.as_continuous().ok_or_else(|| {
                            Error::ColumnMismatch(format!("'{var}' was continuous at fit time"))
                        })?;
                        v.iter().map(|&x| T::lit(x)).collect::<Vec<_>>()
                    }
                    Factor::Dummy { variable, level } => {
                        let c = ds.column(variable)?;
                        let v = c.as_categorical().ok_or_else(|| {
                            Error::ColumnMismatch(format!(
                                "'{variable}' was categorical at fit time"
                            ))
                        })?;
                        let Some(VariableCoding::Categorical { levels }) = self.coding.get(variable)
                        else {
                            return Err(Error::ColumnMismatch(format!(
                                "no categorical coding for '{variable}'"
                            )));
                        };
                        if let Some(bad) = v.iter().find(|s| !levels.contains(s)) {
                            return Err(Error::UnseenLevel {
                                variable: variable.clone(),
                                level: bad.clone(),
                            });
                        }
                        v.iter()
                            .map(|s| if s == level { T::one() } else { T::zero() })
                            .collect()
                    }
                };
                for (c, x) in col.iter_mut().zip(values) {
                    *c = *c * x;
                }
            }
            cols.push(col);
        }
        Ok(Matrix::from_columns(&cols))
    }
}

fn intercept_meta() -> ColumnMeta {
    ColumnMeta {
        name: "(Intercept)".into(),
        term: None,
        factors: Vec::new(),
    }
}

fn check_dimensions(n: usize, columns: usize) -> Result<()> {
    if n <= columns {
        Err(Error::TooFewObservations { n, columns })
    } else {
        Ok(())
    }
}

/// Encoded columns of one variable: `(factor, values)` pairs.
type Encoded<T> = Vec<(Factor, Vec<T>)>;

fn encode_variable<T: Scalar>(
    column: &Column,
    options: &DesignOptions,
) -> Result<(VariableCoding, Encoded<T>)> {
    let name = column.name();
    match column.data() {
        ColumnData::Continuous(v) => Ok((
            VariableCoding::Continuous,
            vec![(
                Factor::Continuous(name.to_owned()),
                v.iter().map(|&x| T::lit(x)).collect(),
            )],
        )),
        ColumnData::Categorical(v) => {
            let mut levels = column.levels()?;
            if levels.len() < 2 {
                return Err(Error::SingleLevel(name.to_owned()));
            }
            if let Some(reference) = options.reference_levels.get(name) {
                let pos = levels.iter().position(|l| l == reference).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "reference level '{reference}' does not occur in '{name}'"
                    ))
                })?;
                let r = levels.remove(pos);
                levels.insert(0, r);
            }
            let encoded = levels[1..]
                .iter()
                .map(|level| {
                    let values = v
                        .iter()
                        .map(|s| if s == level { T::one() } else { T::zero() })
                        .collect();
                    (
                        Factor::Dummy {
                            variable: name.to_owned(),
                            level: level.clone(),
                        },
                        values,
                    )
                })
                .collect();
            Ok((VariableCoding::Categorical { levels }, encoded))
        }
    }
}

/// [`build_design_matrix_with`] using default options.
pub fn build_design_matrix<T: Scalar>(f: &ModelFormula, ds: &Dataset) -> Result<DesignMatrix<T>> {
    build_design_matrix_with(f, ds, &DesignOptions::default())
}

/// Builds the design matrix: intercept, then each term's columns in
/// canonical term order. Interaction columns are elementwise products over
/// the cross product of their parents' encoded columns.
pub fn build_design_matrix_with<T: Scalar>(
    f: &ModelFormula,
    ds: &Dataset,
    options: &DesignOptions,
) -> Result<DesignMatrix<T>> {
    let response_col = ds.column(f.response())?;
    let response: Vec<T> = response_col
        .as_continuous()
        .ok_or_else(|| Error::NotContinuous(f.response().to_owned()))?
        .iter()
        .map(|&x| T::lit(x))
        .collect();

    let mut coding = BTreeMap::new();
    let mut encoded: BTreeMap<&str, Encoded<T>> = BTreeMap::new();
    for var in f.variables() {
        let (c, e) = encode_variable(ds.column(var)?, options)?;
        coding.insert(var.to_owned(), c);
        encoded.insert(var, e);
    }

    let n = ds.n();
    let mut cols: Vec<Vec<T>> = vec![vec![T::one(); n]];
    let mut metas = vec![intercept_meta()];
    let mut spans = Vec::with_capacity(f.terms().len());
    for term in f.terms() {
        let start = cols.len();
        // cross product, first variable outermost
        let mut partial: Vec<(Vec<Factor>, Vec<T>)> = vec![(Vec::new(), vec![T::one(); n])];
        for var in term.variables() {
            let mut next = Vec::with_capacity(partial.len() * encoded[var].len());
            for (factors, values) in &partial {
                for (factor, col) in &encoded[var] {
                    let mut fs = factors.clone();
                    fs.push(factor.clone());
                    let prod = values.iter().zip(col).map(|(&a, &b)| a * b).collect();
                    next.push((fs, prod));
                }
            }
            partial = next;
        }
        for (factors, values) in partial {
            let name = factors.iter().map(Factor::label).collect::<Vec<_>>().join(":");
            metas.push(ColumnMeta {
                name,
                term: Some(term.clone()),
                factors,
            });
            cols.push(values);
        }
        spans.push((term.clone(), start..cols.len()));
    }
    check_dimensions(n, cols.len())?;

    Ok(DesignMatrix {
        matrix: Matrix::from_columns(&cols),
        columns: metas,
        response_name: f.response().to_owned(),
        response,
        term_spans: spans,
        coding,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;

    fn arch_ds() -> Dataset {
        Dataset::new(vec![
            Column::continuous("y", vec![1.0, 2.0, 3.0, 4.0]),
            Column::categorical("arch", vec!["vit", "resnet", "vit", "resnet"]),
            Column::categorical("opt", vec!["adam", "sgd", "lion", "sgd"]),
            Column::continuous("x1", vec![1.0, 2.0, 0.5, 1.5]),
            Column::continuous("x2", vec![3.0, 4.0, 1.0, 2.0]),
        ])
        .unwrap()
    }

    #[test]
    fn dummy_against_lexicographic_reference() {
        let ds = Dataset::new(vec![
            Column::continuous("y", vec![1.0, 2.0, 3.0]),
            Column::categorical("arch", vec!["vit", "resnet", "vit"]),
        ])
        .unwrap();
        let dm: DesignMatrix<f64> = build_design_matrix(&parse("y ~ arch").unwrap(), &ds).unwrap();
        assert_eq!(dm.column_names(), vec!["(Intercept)", "arch=vit"]);
        assert_eq!(dm.matrix().column(1), vec![1.0, 0.0, 1.0]);
        assert_eq!(dm.matrix().column(0), vec![1.0; 3]);
    }

    #[test]
    fn three_levels_give_two_columns() {
        let dm: DesignMatrix<f64> = build_design_matrix(&parse("y ~ opt").unwrap(), &arch_ds()).unwrap();
        assert_eq!(dm.column_names(), vec!["(Intercept)", "opt=lion", "opt=sgd"]);
    }

    #[test]
    fn product_column() {
        let ds = Dataset::new(vec![
            Column::continuous("y", vec![0.0, 1.0, 2.0]),
            Column::continuous("X1", vec![1.0, 2.0, 0.0]),
            Column::continuous("X2", vec![3.0, 4.0, 0.0]),
        ])
        .unwrap();
        let dm: DesignMatrix<f64> = build_design_matrix(&parse("y ~ X1:X2").unwrap(), &ds).unwrap();
        assert_eq!(dm.matrix().column(1), vec![3.0, 8.0, 0.0]);
    }

    #[test]
    fn categorical_interactions_multiply_dummies() {
        let dm: DesignMatrix<f64> =
            build_design_matrix(&parse("y ~ arch:x1").unwrap(), &arch_ds()).unwrap();
        assert_eq!(dm.column_names(), vec!["(Intercept)", "arch=vit:x1"]);
        assert_eq!(dm.matrix().column(1), vec![1.0, 0.0, 0.5, 0.0]);
        assert_eq!(dm.term_spans()[0].1, 1..2);
    }

    #[test]
    fn reference_override() {
        let mut opts = DesignOptions::default();
        opts.reference_levels.insert("arch".into(), "vit".into());
        let dm: DesignMatrix<f64> =
            build_design_matrix_with(&parse("y ~ arch").unwrap(), &arch_ds(), &opts).unwrap();
        assert_eq!(dm.column_names(), vec!["(Intercept)", "arch=resnet"]);
        opts.reference_levels.insert("arch".into(), "mamba".into());
        assert!(build_design_matrix_with::<f64>(&parse("y ~ arch").unwrap(), &arch_ds(), &opts).is_err());
    }

    #[test]
    fn error_paths() {
        let ds = arch_ds();
        assert_eq!(
            build_design_matrix::<f64>(&parse("y ~ nope").unwrap(), &ds),
            Err(Error::MissingColumn("nope".into()))
        );
        assert_eq!(
            build_design_matrix::<f64>(&parse("arch ~ x1").unwrap(), &ds),
            Err(Error::NotContinuous("arch".into()))
        );
        assert_eq!(
            build_design_matrix::<f64>(&parse("y ~ x1 + x2 + arch").unwrap(), &ds),
            Err(Error::TooFewObservations { n: 4, columns: 4 })
        );
        let single = Dataset::new(vec![
            Column::continuous("y", vec![1.0, 2.0, 3.0]),
            Column::categorical("g", vec!["a", "a", "a"]),
        ])
        .unwrap();
        assert_eq!(
            build_design_matrix::<f64>(&parse("y ~ g").unwrap(), &single),
            Err(Error::SingleLevel("g".into()))
        );
    }

    #[test]
    fn encode_rows_rejects_unseen_levels() {
        let ds = arch_ds();
        let dm: DesignMatrix<f64> = build_design_matrix(&parse("y ~ arch + x1").unwrap(), &ds).unwrap();
        assert_eq!(&dm.encode_rows(&ds).unwrap(), dm.matrix());
        let new = Dataset::new(vec![
            Column::categorical("arch", vec!["mamba"]),
            Column::continuous("x1", vec![0.0]),
        ])
        .unwrap();
        assert_eq!(
            dm.encode_rows(&new),
            Err(Error::UnseenLevel {
                variable: "arch".into(),
                level: "mamba".into()
            })
        );
    }
}
