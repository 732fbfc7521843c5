//! Gower distance for all-categorical records.
//!
//! With every dimension categorical and equally weighted, the Gower
//! distance between two records is the fraction of dimensions on which they
//! disagree, i.e. the Hamming distance divided by `M`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Record};
use crate::error::{Error, Result};

/// Dense symmetric matrix of pairwise dissimilarities, indexed by record id.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    ids: Vec<String>,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds a matrix from a row-major `n x n` buffer.
    ///
    /// The buffer must be symmetric with a zero diagonal and non-negative
    /// entries.
    pub fn from_values(ids: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = ids.len();
        if values.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries for {n} ids, got {}",
                n * n,
                values.len()
            )));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::InvalidArgument(format!("non-zero diagonal at {i}")));
            }
            for j in 0..i {
                let v = values[i * n + j];
                if v != values[j * n + i] || v.is_nan() || v < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "entry ({i},{j}) breaks symmetry or is negative"
                    )));
                }
            }
        }
        Ok(DistanceMatrix { ids, values })
    }

    pub fn from_fn(ids: Vec<String>, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let n = ids.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..i {
                let v = f(i, j);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        DistanceMatrix { ids, values }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ids.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.ids.len();
        &self.values[i * n..(i + 1) * n]
    }

    /// Export form: ids plus row-major entries rounded to 12 significant digits.
    pub fn export(&self) -> MatrixExport {
        let n = self.len();
        MatrixExport {
            ids: self.ids.clone(),
            rows: (0..n)
                .map(|i| self.row(i).iter().map(|&v| significant(v, 12)).collect())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixExport {
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

fn significant(v: f64, digits: usize) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{:.*e}", digits - 1, v)
        .parse()
        .expect("formatted float parses")
}

/// Number of dimensions on which two code rows disagree.
#[inline]
pub fn mismatches(a: &[u32], b: &[u32]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Gower distance between two records over the same `M` dimensions.
pub fn gower_distance(a: &Record, b: &Record) -> Result<f64> {
    if a.values.len() != b.values.len() {
        return Err(Error::InvalidArgument(format!(
            "records `{}` and `{}` have {} and {} dimensions",
            a.id,
            b.id,
            a.values.len(),
            b.values.len()
        )));
    }
    if a.values.is_empty() {
        return Err(Error::Empty("dimensions"));
    }
    let k = a
        .values
        .iter()
        .zip(&b.values)
        .filter(|(x, y)| x != y)
        .count();
    Ok(k as f64 / a.values.len() as f64)
}

/// Pairwise Gower distances of every record in the dataset.
pub fn distance_matrix(dataset: &Dataset) -> DistanceMatrix {
    let rows: Vec<usize> = (0..dataset.len()).collect();
    distance_matrix_of(dataset, &rows)
}

/// Pairwise Gower distances between the given rows, in the given order.
///
/// Rows may repeat (bootstrap resamples); the returned ids repeat with them.
pub fn distance_matrix_of(dataset: &Dataset, rows: &[usize]) -> DistanceMatrix {
    let n = rows.len();
    let m = dataset.width() as f64;
    let records = dataset.records();
    let ids = rows.iter().map(|&r| records[r].id.clone()).collect();
    let lower: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = dataset.row_codes(rows[i]);
            (0..i)
                .map(|j| mismatches(a, dataset.row_codes(rows[j])) as f64 / m)
                .collect()
        })
        .collect();
    DistanceMatrix::from_fn(ids, |i, j| lower[i][j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Format;

    fn rec(id: &str, values: &[&str]) -> Record {
        Record {
            id: id.into(),
            values: values.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn pairwise_examples() {
        let a = rec("a", &["1", "2", "3", "4", "5", "6", "7", "8", "9"]);
        let b = rec("b", &["x", "x", "x", "x", "x", "x", "x", "x", "x"]);
        let c = rec("c", &["x", "x", "x", "4", "5", "6", "7", "8", "9"]);
        assert_eq!(gower_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(gower_distance(&a, &b).unwrap(), 1.0);
        assert_eq!(gower_distance(&a, &c).unwrap(), 3.0 / 9.0);
        assert!(gower_distance(&a, &rec("d", &["1"])).is_err());
    }

    #[test]
    fn matrix_of_duplicates() {
        let ds =
            Dataset::from_str_with("id,A,B\np1,x,u\np2,x,u\np3,y,v\n", Format::default()).unwrap();
        let d = distance_matrix(&ds);
        let rows: Vec<&[f64]> = (0..3).map(|i| d.row(i)).collect();
        assert_eq!(rows, [[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [1.0, 1.0, 0.0]]);
    }

    #[test]
    fn single_record_matrix() {
        let ds = Dataset::from_str_with("id,A\np1,x\n", Format::default()).unwrap();
        let d = distance_matrix(&ds);
        assert_eq!(d.len(), 1);
        assert_eq!(d.get(0, 0), 0.0);
    }

    #[test]
    fn export_rounds_to_twelve_digits() {
        let d = DistanceMatrix::from_fn(vec!["a".into(), "b".into()], |_, _| 1.0 / 3.0);
        let e = d.export();
        assert_eq!(e.rows[0][1], 0.333333333333);
        assert_eq!(
            serde_json::to_string(&e).unwrap(),
            r#"{"ids":["a","b"],"rows":[[0.0,0.333333333333],[0.333333333333,0.0]]}"#
        );
    }

    #[test]
    fn from_values_validates() {
        let ids = vec!["a".to_string(), "b".to_string()];
        assert!(DistanceMatrix::from_values(ids.clone(), vec![0.0, 1.0, 1.0, 0.0]).is_ok());
        assert!(DistanceMatrix::from_values(ids.clone(), vec![0.0, 1.0, 0.5, 0.0]).is_err());
        assert!(DistanceMatrix::from_values(ids.clone(), vec![1.0, 1.0, 1.0, 0.0]).is_err());
        assert!(DistanceMatrix::from_values(ids, vec![0.0]).is_err());
    }
}
