//! Domain types shared by every other module: the per-category marker
//! matrices, anchored coefficient vectors, smoothing settings, and CSV
//! ingestion.
//!
//! Categories are always stored in ascending order of severity, so category
//! `0` is the healthiest group and category `M - 1` the most severe.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HumError, Result};

/// Marker values for `M` ordered categories, each an `n_j x d` row-major
/// matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerDataset {
    categories: Vec<Vec<f64>>,
    sizes: Vec<usize>,
    n_markers: usize,
    marker_names: Vec<String>,
    category_labels: Vec<i64>,
}

impl MarkerDataset {
    /// Builds a dataset from row-major category matrices.
    ///
    /// `categories[j]` must hold `n_j * marker_names.len()` values.
    pub fn new(
        categories: Vec<Vec<f64>>,
        marker_names: Vec<String>,
        category_labels: Vec<i64>,
    ) -> Result<Self> {
        let d = marker_names.len();
        if d == 0 {
            return Err(HumError::InvalidParameter(
                "at least one marker is required".into(),
            ));
        }
        if categories.len() < 2 {
            return Err(HumError::FewerThanTwoCategories(categories.len()));
        }
        if category_labels.len() != categories.len() {
            return Err(HumError::DimensionMismatch {
                expected: categories.len(),
                actual: category_labels.len(),
            });
        }
        let mut sizes = Vec::with_capacity(categories.len());
        for (j, values) in categories.iter().enumerate() {
            if values.is_empty() {
                return Err(HumError::EmptyCategory(j));
            }
            if values.len() % d != 0 {
                return Err(HumError::DimensionMismatch {
                    expected: d,
                    actual: values.len() % d,
                });
            }
            if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
                return Err(HumError::NonFiniteInput(format!(
                    "category {j} contains {bad}"
                )));
            }
            sizes.push(values.len() / d);
        }
        Ok(Self {
            categories,
            sizes,
            n_markers: d,
            marker_names,
            category_labels,
        })
    }

    /// Convenience constructor from nested rows, with generated marker names
    /// `x1..xd` and labels `0..M-1`.
    pub fn from_rows(rows: &[Vec<Vec<f64>>]) -> Result<Self> {
        let d = rows
            .iter()
            .flat_map(|c| c.first())
            .map(Vec::len)
            .next()
            .unwrap_or(0);
        let mut categories = Vec::with_capacity(rows.len());
        for category in rows {
            let mut flat = Vec::with_capacity(category.len() * d);
            for row in category {
                if row.len() != d {
                    return Err(HumError::DimensionMismatch {
                        expected: d,
                        actual: row.len(),
                    });
                }
                flat.extend_from_slice(row);
            }
            categories.push(flat);
        }
        let names = (1..=d).map(|k| format!("x{k}")).collect();
        let labels = (0..rows.len() as i64).collect();
        Self::new(categories, names, labels)
    }

    pub fn n_categories(&self) -> usize {
        self.categories.len()
    }

    pub fn n_markers(&self) -> usize {
        self.n_markers
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn total_size(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn marker_names(&self) -> &[String] {
        &self.marker_names
    }

    pub fn category_labels(&self) -> &[i64] {
        &self.category_labels
    }

    /// Row-major values of category `j`.
    pub fn category(&self, j: usize) -> &[f64] {
        &self.categories[j]
    }

    pub fn row(&self, j: usize, i: usize) -> &[f64] {
        let d = self.n_markers;
        &self.categories[j][i * d..(i + 1) * d]
    }

    pub fn rows(&self, j: usize) -> impl Iterator<Item = &[f64]> {
        self.categories[j].chunks_exact(self.n_markers)
    }

    /// Values of marker `k` in category `j`.
    pub fn column(&self, j: usize, k: usize) -> Vec<f64> {
        self.rows(j).map(|r| r[k]).collect()
    }

    /// Applies `f` to every marker value and revalidates.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let categories = self
            .categories
            .iter()
            .map(|c| c.iter().map(|&v| f(v)).collect())
            .collect();
        Self::new(
            categories,
            self.marker_names.clone(),
            self.category_labels.clone(),
        )
    }

    /// Natural-log transform of every marker value. Fails on non-positive
    /// entries.
    pub fn log_transform(&self) -> Result<Self> {
        for (j, values) in self.categories.iter().enumerate() {
            if let Some(v) = values.iter().find(|&&v| v <= 0.0) {
                return Err(HumError::InvalidParameter(format!(
                    "log transform needs positive values; category {j} contains {v}"
                )));
            }
        }
        self.map_values(f64::ln)
    }

    /// New dataset with rows picked by index within each category
    /// (repeats allowed).
    pub fn select_rows(&self, picks: &[Vec<usize>]) -> Result<Self> {
        if picks.len() != self.n_categories() {
            return Err(HumError::DimensionMismatch {
                expected: self.n_categories(),
                actual: picks.len(),
            });
        }
        let mut categories = Vec::with_capacity(picks.len());
        for (j, idx) in picks.iter().enumerate() {
            let mut flat = Vec::with_capacity(idx.len() * self.n_markers);
            for &i in idx {
                if i >= self.sizes[j] {
                    return Err(HumError::IndexOutOfRange {
                        index: i,
                        len: self.sizes[j],
                    });
                }
                flat.extend_from_slice(self.row(j, i));
            }
            categories.push(flat);
        }
        Self::new(
            categories,
            self.marker_names.clone(),
            self.category_labels.clone(),
        )
    }

    /// Restriction to a subset of markers, in the given order.
    pub fn select_markers(&self, markers: &[usize]) -> Result<Self> {
        for &k in markers {
            if k >= self.n_markers {
                return Err(HumError::IndexOutOfRange {
                    index: k,
                    len: self.n_markers,
                });
            }
        }
        let categories = (0..self.n_categories())
            .map(|j| {
                self.rows(j)
                    .flat_map(|r| markers.iter().map(move |&k| r[k]))
                    .collect()
            })
            .collect();
        let names = markers
            .iter()
            .map(|&k| self.marker_names[k].clone())
            .collect();
        Self::new(categories, names, self.category_labels.clone())
    }

    /// Subset of categories, kept in the given order.
    pub fn select_categories(&self, cats: &[usize]) -> Result<Self> {
        let mut categories = Vec::with_capacity(cats.len());
        let mut labels = Vec::with_capacity(cats.len());
        for &j in cats {
            if j >= self.n_categories() {
                return Err(HumError::IndexOutOfRange {
                    index: j,
                    len: self.n_categories(),
                });
            }
            categories.push(self.categories[j].clone());
            labels.push(self.category_labels[j]);
        }
        Self::new(categories, self.marker_names.clone(), labels)
    }
}

/// Combined scores `beta^T x` for every subject, one vector per category.
pub fn project_scores(data: &MarkerDataset, beta: &[f64]) -> Result<Vec<Vec<f64>>> {
    if beta.len() != data.n_markers() {
        return Err(HumError::DimensionMismatch {
            expected: data.n_markers(),
            actual: beta.len(),
        });
    }
    Ok((0..data.n_categories())
        .map(|j| data.rows(j).map(|row| dot(row, beta)).collect())
        .collect())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

/// Inserts the fixed unit coefficient at `anchor_index`.
pub fn anchored_to_full(theta: &[f64], anchor_index: usize) -> Result<Vec<f64>> {
    let d = theta.len() + 1;
    if anchor_index >= d {
        return Err(HumError::IndexOutOfRange {
            index: anchor_index,
            len: d,
        });
    }
    let mut beta = Vec::with_capacity(d);
    beta.extend_from_slice(&theta[..anchor_index]);
    beta.push(1.0);
    beta.extend_from_slice(&theta[anchor_index..]);
    Ok(beta)
}

/// Drops the anchor component; the inverse of [`anchored_to_full`].
pub fn extract_theta(beta: &[f64], anchor_index: usize) -> Result<Vec<f64>> {
    if anchor_index >= beta.len() {
        return Err(HumError::IndexOutOfRange {
            index: anchor_index,
            len: beta.len(),
        });
    }
    Ok(beta
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != anchor_index)
        .map(|(_, &b)| b)
        .collect())
}

/// A combination vector. When `anchor` is set, `beta[anchor] == 1` exactly
/// and the remaining components are the free parameters. Unit-norm
/// combinations (the equal-weight method) carry no anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    beta: Vec<f64>,
    anchor: Option<usize>,
}

impl Coefficients {
    pub fn from_theta(theta: &[f64], anchor: usize) -> Result<Self> {
        Ok(Self {
            beta: anchored_to_full(theta, anchor)?,
            anchor: Some(anchor),
        })
    }

    /// Scales `beta` so that `beta[anchor] == 1`. The anchor component must
    /// be strictly positive, otherwise the ordering of scores would flip.
    pub fn anchored(beta: &[f64], anchor: usize) -> Result<Self> {
        let pivot = *beta.get(anchor).ok_or(HumError::IndexOutOfRange {
            index: anchor,
            len: beta.len(),
        })?;
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(HumError::InvalidParameter(format!(
                "anchor component {anchor} is {pivot}; must be positive"
            )));
        }
        let mut scaled: Vec<f64> = beta.iter().map(|b| b / pivot).collect();
        scaled[anchor] = 1.0;
        Ok(Self {
            beta: scaled,
            anchor: Some(anchor),
        })
    }

    pub fn unanchored(beta: Vec<f64>) -> Self {
        Self { beta, anchor: None }
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn anchor(&self) -> Option<usize> {
        self.anchor
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    /// Free components (everything but the anchor). For unanchored vectors
    /// this is the whole vector.
    pub fn theta(&self) -> Vec<f64> {
        match self.anchor {
            Some(a) => extract_theta(&self.beta, a).expect("anchor in range"),
            None => self.beta.clone(),
        }
    }

    /// Same direction, re-anchored at `anchor`.
    pub fn rescaled(&self, anchor: usize) -> Result<Self> {
        Self::anchored(&self.beta, anchor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Sigmoid,
    NormalCdf,
}

/// Smoothing kernel and its bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingSpec {
    pub kernel: Kernel,
    pub lambda: f64,
}

impl SmoothingSpec {
    pub fn new(kernel: Kernel, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(HumError::NonPositiveLambda(lambda));
        }
        Ok(Self { kernel, lambda })
    }
}

/// Result of [`load_csv`]: the grouped data plus how many incomplete rows
/// were discarded.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvLoad {
    pub dataset: MarkerDataset,
    pub dropped_rows: usize,
    pub total_rows: usize,
}

fn is_missing(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || t.eq_ignore_ascii_case("na")
}

/// Reads a header-bearing CSV, groups complete rows by the ordinal outcome
/// column and returns the markers in the requested order.
///
/// Empty cells and `NA` are missing; any row with a missing outcome or
/// marker is dropped. Any other non-numeric cell is an error. Row indices in
/// errors count data rows from 1.
pub fn load_csv(
    path: impl AsRef<Path>,
    outcome_column: &str,
    marker_columns: &[String],
) -> Result<CsvLoad> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HumError::MissingColumn(name.to_string()))
    };
    let outcome_idx = find(outcome_column)?;
    let marker_idx: Vec<usize> = marker_columns
        .iter()
        .map(|m| find(m))
        .collect::<Result<_>>()?;
    if marker_idx.is_empty() {
        return Err(HumError::InvalidParameter(
            "at least one marker column is required".into(),
        ));
    }

    let mut groups: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    let mut dropped = 0;
    let mut total = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row_no = r + 1;
        total += 1;
        let parse = |col: usize, name: &str| -> Result<Option<f64>> {
            let cell = record.get(col).unwrap_or("");
            if is_missing(cell) {
                return Ok(None);
            }
            match cell.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Some(v)),
                _ => Err(HumError::UnparseableNumeric {
                    row: row_no,
                    column: name.to_string(),
                    value: cell.to_string(),
                }),
            }
        };
        let outcome = parse(outcome_idx, outcome_column)?;
        let mut values = Vec::with_capacity(marker_idx.len());
        let mut complete = outcome.is_some();
        for (&col, name) in marker_idx.iter().zip(marker_columns) {
            match parse(col, name)? {
                Some(v) => values.push(v),
                None => complete = false,
            }
        }
        if !complete {
            dropped += 1;
            continue;
        }
        let code = outcome.expect("checked above");
        if code.fract() != 0.0 {
            return Err(HumError::UnparseableNumeric {
                row: row_no,
                column: outcome_column.to_string(),
                value: record.get(outcome_idx).unwrap_or("").to_string(),
            });
        }
        groups.entry(code as i64).or_default().extend(values);
    }

    if groups.len() < 2 {
        return Err(HumError::FewerThanTwoCategories(groups.len()));
    }
    let (labels, categories): (Vec<i64>, Vec<Vec<f64>>) = groups.into_iter().unzip();
    let dataset = MarkerDataset::new(categories, marker_columns.to_vec(), labels)?;
    Ok(CsvLoad {
        dataset,
        dropped_rows: dropped,
        total_rows: total,
    })
}

/// Writes the dataset as a tidy CSV (`outcome_column` first, then markers).
/// Values use the shortest representation that parses back exactly.
pub fn write_csv(data: &MarkerDataset, path: impl AsRef<Path>, outcome_column: &str) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    let mut header = vec![outcome_column.to_string()];
    header.extend(data.marker_names().iter().cloned());
    writer.write_record(&header)?;
    for j in 0..data.n_categories() {
        let label = data.category_labels()[j].to_string();
        for row in data.rows(j) {
            let mut rec = Vec::with_capacity(row.len() + 1);
            rec.push(label.clone());
            rec.extend(row.iter().map(|v| v.to_string()));
            writer.write_record(&rec)?;
        }
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn toy() -> MarkerDataset {
        MarkerDataset::from_rows(&[
            vec![vec![1.0, 2.0], vec![3.0, 4.0]],
            vec![vec![5.0, 6.0]],
            vec![vec![7.0, 8.0], vec![9.0, 10.0], vec![11.0, 12.0]],
        ])
        .unwrap()
    }

    #[test]
    fn unit_vector_projection_returns_column() {
        let data = toy();
        let scores = project_scores(&data, &[0.0, 1.0]).unwrap();
        for j in 0..3 {
            assert_eq!(scores[j], data.column(j, 1));
        }
        let zero = project_scores(&data, &[0.0, 0.0]).unwrap();
        assert!(zero.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn projection_matches_dot_loop() {
        let data = MarkerDataset::from_rows(&[
            vec![vec![0.3, -1.2], vec![2.5, 0.7], vec![-0.4, 0.9]],
            vec![vec![1.1, 1.9], vec![0.0, -3.3], vec![4.2, 0.5]],
        ])
        .unwrap();
        let beta = [0.77, -1.31];
        let scores = project_scores(&data, &beta).unwrap();
        for j in 0..2 {
            for i in 0..3 {
                let mut s = 0.0;
                for k in 0..2 {
                    s += beta[k] * data.row(j, i)[k];
                }
                assert_eq!(scores[j][i], s);
            }
        }
    }

    #[test]
    fn projection_rejects_wrong_length() {
        assert!(matches!(
            project_scores(&toy(), &[1.0]),
            Err(HumError::DimensionMismatch { expected: 2, actual: 1 })
        ));
    }

    #[test]
    fn anchoring() {
        assert_eq!(anchored_to_full(&[2.0, 3.0], 2).unwrap(), vec![2.0, 3.0, 1.0]);
        assert_eq!(anchored_to_full(&[], 0).unwrap(), vec![1.0]);
        assert!(matches!(
            anchored_to_full(&[1.0], 2),
            Err(HumError::IndexOutOfRange { .. })
        ));
        let c = Coefficients::anchored(&[2.0, 4.0, -1.0], 1).unwrap();
        assert_eq!(c.beta(), &[0.5, 1.0, -0.25]);
        assert_eq!(c.theta(), vec![0.5, -0.25]);
        assert!(Coefficients::anchored(&[2.0, -4.0], 1).is_err());
    }

    #[test]
    fn lambda_must_be_positive() {
        assert!(SmoothingSpec::new(Kernel::Sigmoid, 0.0).is_err());
        assert!(SmoothingSpec::new(Kernel::Sigmoid, -1.0).is_err());
        assert!(SmoothingSpec::new(Kernel::NormalCdf, 0.5).is_ok());
    }

    #[test]
    fn dataset_invariants() {
        assert!(matches!(
            MarkerDataset::from_rows(&[vec![vec![1.0]]]),
            Err(HumError::FewerThanTwoCategories(1))
        ));
        assert!(matches!(
            MarkerDataset::from_rows(&[vec![vec![1.0]], vec![]]),
            Err(HumError::EmptyCategory(1))
        ));
        assert!(MarkerDataset::from_rows(&[vec![vec![f64::NAN]], vec![vec![1.0]]]).is_err());
    }

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn csv_groups_and_drops_incomplete_rows() {
        let f = write_tmp(
            "id,grade,a,b\n1,3,1.0,2.0\n2,1,0.5,NA\n3,1,0.1,0.2\n4,2,,1.0\n5,2,0.7,0.9\n6,3,2.5,3.5\n",
        );
        let load = load_csv(f.path(), "grade", &["b".into(), "a".into()]).unwrap();
        assert_eq!(load.dropped_rows, 2);
        assert_eq!(load.total_rows, 6);
        let d = &load.dataset;
        assert_eq!(d.category_labels(), &[1, 2, 3]);
        assert_eq!(d.sizes(), &[1, 1, 2]);
        assert_eq!(d.row(0, 0), &[0.2, 0.1]);
        assert_eq!(d.row(2, 1), &[3.5, 2.5]);
        assert_eq!(d.sizes().iter().sum::<usize>(), load.total_rows - load.dropped_rows);
    }

    #[test]
    fn csv_errors() {
        let f = write_tmp("y,a\n1,1.0\n1,2.0\n");
        assert!(matches!(
            load_csv(f.path(), "y", &["a".into()]),
            Err(HumError::FewerThanTwoCategories(1))
        ));
        assert!(matches!(
            load_csv(f.path(), "outcome", &["a".into()]),
            Err(HumError::MissingColumn(c)) if c == "outcome"
        ));
        let f = write_tmp("y,a\n1,1.0\n2,abc\n");
        assert!(matches!(
            load_csv(f.path(), "y", &["a".into()]),
            Err(HumError::UnparseableNumeric { row: 2, .. })
        ));
        let f = write_tmp("y,a\n1.5,1.0\n2,3\n");
        assert!(matches!(
            load_csv(f.path(), "y", &["a".into()]),
            Err(HumError::UnparseableNumeric { row: 1, .. })
        ));
    }

    #[test]
    fn log_transform_rejects_nonpositive() {
        assert!(toy().log_transform().is_ok());
        let bad = MarkerDataset::from_rows(&[vec![vec![0.0]], vec![vec![1.0]]]).unwrap();
        assert!(bad.log_transform().is_err());
    }

    proptest! {
        #[test]
        fn projection_is_linear(
            a in -3.0f64..3.0, b in -3.0f64..3.0,
            b1 in proptest::collection::vec(-2.0f64..2.0, 2),
            b2 in proptest::collection::vec(-2.0f64..2.0, 2),
        ) {
            let data = toy();
            let combo: Vec<f64> = b1.iter().zip(&b2).map(|(x, y)| a * x + b * y).collect();
            let lhs = project_scores(&data, &combo).unwrap();
            let s1 = project_scores(&data, &b1).unwrap();
            let s2 = project_scores(&data, &b2).unwrap();
            for j in 0..3 {
                for i in 0..lhs[j].len() {
                    let rhs = a * s1[j][i] + b * s2[j][i];
                    prop_assert!((lhs[j][i] - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
                }
            }
        }

        #[test]
        fn theta_roundtrip(theta in proptest::collection::vec(-5.0f64..5.0, 0..6), pick in 0usize..6) {
            let anchor = pick % (theta.len() + 1);
            let full = anchored_to_full(&theta, anchor).unwrap();
            prop_assert_eq!(full[anchor], 1.0);
            prop_assert_eq!(extract_theta(&full, anchor).unwrap(), theta.clone());
            prop_assert_eq!(anchored_to_full(&extract_theta(&full, anchor).unwrap(), anchor).unwrap(), full);
        }
    }
}
