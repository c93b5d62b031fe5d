//! Typed, column-oriented tables loaded from CSV.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Continuous,
    Categorical,
}

impl std::fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ColumnKind::Continuous => "continuous",
            ColumnKind::Categorical => "categorical",
        })
    }
}

impl std::str::FromStr for ColumnKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "continuous" => Ok(ColumnKind::Continuous),
            "categorical" => Ok(ColumnKind::Categorical),
            other => Err(format!("unknown column kind '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Continuous(Vec<f64>),
    Categorical(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    name: String,
    data: ColumnData,
}

impl Column {
    pub fn continuous(name: impl Into<String>, values: Vec<f64>) -> Self {
        Column {
            name: name.into(),
            data: ColumnData::Continuous(values),
        }
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, values: Vec<S>) -> Self {
        Column {
            name: name.into(),
            data: ColumnData::Categorical(values.into_iter().map(Into::into).collect()),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ColumnKind {
        match self.data {
            ColumnData::Continuous(_) => ColumnKind::Continuous,
            ColumnData::Categorical(_) => ColumnKind::Categorical,
        }
    }

    pub fn data(&self) -> &ColumnData {
        &self.data
    }

    pub fn len(&self) -> usize {
        match &self.data {
            ColumnData::Continuous(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_continuous(&self) -> Option<&[f64]> {
        match &self.data {
            ColumnData::Continuous(v) => Some(v),
            ColumnData::Categorical(_) => None,
        }
    }

    pub fn as_categorical(&self) -> Option<&[String]> {
        match &self.data {
            ColumnData::Categorical(v) => Some(v),
            ColumnData::Continuous(_) => None,
        }
    }

    /// Distinct levels in lexicographic order; the first one is the reference level.
    ///
    /// Returns an error for continuous columns.
    pub fn levels(&self) -> Result<Vec<String>> {
        let values = self
            .as_categorical()
            .ok_or_else(|| Error::NotCategorical(self.name.clone()))?;
        let set: BTreeSet<&str> = values.iter().map(String::as_str).collect();
        Ok(set.into_iter().map(str::to_owned).collect())
    }

    fn validate(&self) -> Result<()> {
        match &self.data {
            ColumnData::Continuous(v) => {
                if let Some(row) = v.iter().position(|x| !x.is_finite()) {
                    return Err(Error::NonNumeric {
                        column: self.name.clone(),
                        row,
                        value: v[row].to_string(),
                    });
                }
            }
            ColumnData::Categorical(v) => {
                if let Some(row) = v.iter().position(String::is_empty) {
                    return Err(Error::MissingCell {
                        column: self.name.clone(),
                        row,
                    });
                }
            }
        }
        Ok(())
    }

    fn select_rows(&self, rows: &[usize]) -> Column {
        let data = match &self.data {
            ColumnData::Continuous(v) => ColumnData::Continuous(rows.iter().map(|&i| v[i]).collect()),
            ColumnData::Categorical(v) => {
                ColumnData::Categorical(rows.iter().map(|&i| v[i].clone()).collect())
            }
        };
        Column {
            name: self.name.clone(),
            data,
        }
    }
}

/// Column name → kind overrides for type inference.
pub type Schema = BTreeMap<String, ColumnKind>;

/// Parses a schema file made of `name=continuous|categorical` lines.
///
/// Blank lines and lines starting with `#` are ignored.
pub fn parse_schema(text: &str) -> Result<Schema> {
    let mut schema = Schema::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, kind) = line.split_once('=').ok_or_else(|| Error::Schema {
            line: idx + 1,
            message: "expected name=kind".into(),
        })?;
        let kind: ColumnKind = kind.trim().parse().map_err(|message| Error::Schema {
            line: idx + 1,
            message,
        })?;
        let name = name.trim();
        if schema.insert(name.to_owned(), kind).is_some() {
            return Err(Error::Schema {
                line: idx + 1,
                message: format!("column '{name}' listed twice"),
            });
        }
    }
    Ok(schema)
}

/// Immutable table of equally long named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Column>,
    n: usize,
    /// Column name → total mean subtracted by [`Dataset::center`].
    centered: BTreeMap<String, f64>,
}

impl Dataset {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let n = columns.first().map(Column::len).ok_or(Error::EmptyDataset)?;
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let mut seen = BTreeSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::DuplicateColumn(c.name.clone()));
            }
            if c.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "column '{}' has length {} but the dataset has {n} rows",
                    c.name,
                    c.len()
                )));
            }
            c.validate()?;
        }
        Ok(Dataset {
            columns,
            n,
            centered: BTreeMap::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::MissingColumn(name.to_owned()))
    }

    /// Means subtracted by previous calls to [`Dataset::center`].
    pub fn centering(&self) -> &BTreeMap<String, f64> {
        &self.centered
    }

    /// Subtracts the sample mean from each named continuous column.
    pub fn center<S: AsRef<str>>(&self, names: &[S]) -> Result<Dataset> {
        let mut out = self.clone();
        for name in names {
            let name = name.as_ref();
            let idx = out
                .columns
                .iter()
                .position(|c| c.name == name)
                .ok_or_else(|| Error::MissingColumn(name.to_owned()))?;
            let ColumnData::Continuous(values) = &mut out.columns[idx].data else {
                return Err(Error::NotContinuous(name.to_owned()));
            };
            let m = accurate_mean(values);
            values.iter_mut().for_each(|v| *v -= m);
            *out.centered.entry(name.to_owned()).or_insert(0.0) += m;
        }
        Ok(out)
    }

    /// New dataset made of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = rows.iter().find(|&&i| i >= self.n) {
            return Err(Error::InvalidArgument(format!("row {bad} out of range")));
        }
        let mut ds = Dataset::new(self.columns.iter().map(|c| c.select_rows(rows)).collect())?;
        ds.centered = self.centered.clone();
        Ok(ds)
    }

    /// SHA-256 over a canonical rendering of names, kinds and values.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for c in &self.columns {
            h.update(c.name.as_bytes());
            h.update([0u8]);
            match &c.data {
                ColumnData::Continuous(v) => {
                    h.update(b"f");
                    for x in v {
                        h.update(x.to_bits().to_le_bytes());
                    }
                }
                ColumnData::Categorical(v) => {
                    h.update(b"c");
                    for s in v {
                        h.update(s.as_bytes());
                        h.update([0u8]);
                    }
                }
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Writes a dataset as CSV with a header row. Numbers use the shortest
/// representation that parses back to the same value.
pub fn write_csv<W: std::io::Write>(ds: &Dataset, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(ds.columns.iter().map(|c| c.name.as_str()))?;
    for i in 0..ds.n {
        w.write_record(ds.columns.iter().map(|c| match &c.data {
            ColumnData::Continuous(v) => v[i].to_string(),
            ColumnData::Categorical(v) => v[i].clone(),
        }))?;
    }
    w.flush()
        .map_err(|e| Error::Csv(e.to_string()))
}

/// Mean with one refinement pass, so centred columns average to zero at
/// rounding level even when the values share a large offset.
fn accurate_mean(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    m + xs.iter().map(|x| x - m).sum::<f64>() / n
}

fn parse_finite(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads an RFC 4180 CSV with a header row into a [`Dataset`].
///
/// Without a schema entry, a column is continuous iff every cell parses as a
/// finite number. Empty cells are rejected.
pub fn load_csv<R: Read>(source: R, schema: Option<&Schema>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::EmptyDataset);
    }
    let mut seen = BTreeSet::new();
    for h in &headers {
        if !seen.insert(h.as_str()) {
            return Err(Error::DuplicateColumn(h.clone()));
        }
    }
    if let Some(schema) = schema {
        if let Some(missing) = schema.keys().find(|k| !seen.contains(k.as_str())) {
            return Err(Error::MissingColumn(missing.clone()));
        }
    }

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::RaggedRow {
                line: row + 2,
                expected: headers.len(),
                found: record.len(),
            });
        }
        for (j, field) in record.iter().enumerate() {
            if field.is_empty() {
                return Err(Error::MissingCell {
                    column: headers[j].clone(),
                    row,
                });
            }
            cells[j].push(field.to_owned());
        }
    }
    if cells[0].is_empty() {
        return Err(Error::EmptyDataset);
    }

    let mut columns = Vec::with_capacity(headers.len());
    for (name, raw) in headers.into_iter().zip(cells) {
        let forced = schema.and_then(|s| s.get(&name)).copied();
        let kind = forced.unwrap_or_else(|| {
            if raw.iter().all(|s| parse_finite(s).is_some()) {
                ColumnKind::Continuous
            } else {
                ColumnKind::Categorical
            }
        });
        let column = match kind {
            ColumnKind::Continuous => {
                let mut values = Vec::with_capacity(raw.len());
                for (row, s) in raw.iter().enumerate() {
                    values.push(parse_finite(s).ok_or_else(|| Error::NonNumeric {
                        column: name.clone(),
                        row,
                        value: s.clone(),
                    })?);
                }
                Column::continuous(name, values)
            }
            ColumnKind::Categorical => Column::categorical(name, raw),
        };
        columns.push(column);
    }
    Dataset::new(columns)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<Dataset> {
        load_csv(text.as_bytes(), None)
    }

    #[test]
    fn infers_kinds() {
        let ds = load("y,arch\n0.91,resnet\n0.87,vit\n").unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.column("y").unwrap().kind(), ColumnKind::Continuous);
        assert_eq!(ds.column("arch").unwrap().kind(), ColumnKind::Categorical);
    }

    #[test]
    fn header_only_is_empty() {
        assert_eq!(load("y,arch\n"), Err(Error::EmptyDataset));
        assert_eq!(load(""), Err(Error::EmptyDataset));
    }

    #[test]
    fn schema_forces_categorical() {
        let schema = parse_schema("x=categorical\n").unwrap();
        let ds = load_csv("x\n1\n2\n3\n".as_bytes(), Some(&schema)).unwrap();
        let col = ds.column("x").unwrap();
        assert_eq!(col.kind(), ColumnKind::Categorical);
        assert_eq!(col.levels().unwrap().len(), 3);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(load("a,b\n1,2\n3\n"), Err(Error::RaggedRow { line: 3, .. })));
        assert_eq!(load("a,a\n1,2\n"), Err(Error::DuplicateColumn("a".into())));
        assert!(matches!(load("a,b\n1,\n"), Err(Error::MissingCell { .. })));
        let schema = parse_schema("zz=continuous").unwrap();
        assert_eq!(
            load_csv("a\n1\n".as_bytes(), Some(&schema)),
            Err(Error::MissingColumn("zz".into()))
        );
        let schema = parse_schema("a=continuous").unwrap();
        assert!(matches!(
            load_csv("a\n1\nx\n".as_bytes(), Some(&schema)),
            Err(Error::NonNumeric { row: 1, .. })
        ));
    }

    #[test]
    fn non_finite_tokens_make_a_column_categorical() {
        let ds = load("a\n1\nNaN\n").unwrap();
        assert_eq!(ds.column("a").unwrap().kind(), ColumnKind::Categorical);
    }

    #[test]
    fn schema_parse_errors() {
        assert!(matches!(parse_schema("a:continuous"), Err(Error::Schema { line: 1, .. })));
        assert!(matches!(parse_schema("# c\na=weird"), Err(Error::Schema { line: 2, .. })));
    }

    #[test]
    fn centering_examples() {
        let ds = Dataset::new(vec![
            Column::continuous("x", vec![1.0, 2.0, 3.0]),
            Column::categorical("g", vec!["a", "b", "a"]),
        ])
        .unwrap();
        let c = ds.center(&["x"]).unwrap();
        assert_eq!(c.column("x").unwrap().as_continuous().unwrap(), &[-1.0, 0.0, 1.0]);
        assert_eq!(c.centering()["x"], 2.0);
        assert_eq!(c.column("g"), ds.column("g"));

        let one = Dataset::new(vec![Column::continuous("x", vec![5.0])]).unwrap();
        assert_eq!(one.center(&["x"]).unwrap().column("x").unwrap().as_continuous().unwrap(), &[0.0]);

        let z = Dataset::new(vec![Column::continuous("x", vec![0.0, 0.0, 0.0, 4.0])]).unwrap();
        assert_eq!(
            z.center(&["x"]).unwrap().column("x").unwrap().as_continuous().unwrap(),
            &[-1.0, -1.0, -1.0, 3.0]
        );

        assert_eq!(ds.center(&["nope"]), Err(Error::MissingColumn("nope".into())));
        assert_eq!(ds.center(&["g"]), Err(Error::NotContinuous("g".into())));
    }

    #[test]
    fn levels_are_sorted() {
        let c = Column::categorical("arch", vec!["vit", "resnet", "vit"]);
        assert_eq!(c.levels().unwrap(), vec!["resnet", "vit"]);
        assert_eq!(Column::categorical("a", vec!["a"]).levels().unwrap(), vec!["a"]);
        let c = Column::categorical("a", vec!["B", "A", "C"]);
        assert_eq!(c.levels().unwrap(), vec!["A", "B", "C"]);
        assert!(Column::continuous("x", vec![1.0]).levels().is_err());
    }

    #[test]
    fn quoted_fields_are_supported() {
        let ds = load("name,y\n\"a,b\",1\n\"c\",2\n").unwrap();
        assert_eq!(ds.column("name").unwrap().as_categorical().unwrap()[0], "a,b");
    }
}
