//! Categorical design-decision datasets.
//!
//! A [`Dataset`] is a table of records (rows) over named categorical
//! dimensions (columns). Category domains are inferred from the data in
//! first-occurrence order, so every category of every domain is observed at
//! least once.

use std::collections::HashMap;
use std::io::{Read, Write};

use indexmap::IndexMap;
use serde::Serialize;

use crate::error::{Error, Result};

/// A named categorical axis with its observed domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dimension {
    name: String,
    domain: Vec<String>,
}

impl Dimension {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Category labels in first-occurrence order.
    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.domain.iter().position(|l| l == label)
    }
}

/// One classified data point: an id plus one label per dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub id: String,
    pub values: Vec<String>,
}

/// Field delimiter and related reader settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Format {
    pub delimiter: u8,
}

impl Default for Format {
    fn default() -> Self {
        Format { delimiter: b',' }
    }
}

/// Immutable table of records over categorical dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    id_column: String,
    dimensions: Vec<Dimension>,
    records: Vec<Record>,
    // row-major N x M category indices into each dimension's domain
    codes: Vec<u32>,
}

/// Per-dimension category frequencies, in domain order.
pub type Summary = IndexMap<String, IndexMap<String, usize>>;

impl Dataset {
    /// Builds a dataset from in-memory rows, inferring domains.
    pub fn new<S: Into<String>>(
        id_column: S,
        dimension_names: Vec<String>,
        records: Vec<Record>,
    ) -> Result<Self> {
        let id_column = id_column.into();
        if dimension_names.is_empty() {
            return Err(Error::Empty("dimensions"));
        }
        if records.is_empty() {
            return Err(Error::Empty("records"));
        }

        let mut seen = HashMap::new();
        for name in &dimension_names {
            if name.is_empty() {
                return Err(Error::Parse {
                    line: 1,
                    message: "empty dimension name".into(),
                });
            }
            if seen.insert(name.as_str(), ()).is_some() {
                return Err(Error::DuplicateDimension(name.clone()));
            }
        }

        let m = dimension_names.len();
        let mut domains: Vec<Vec<String>> = vec![Vec::new(); m];
        let mut lookup: Vec<HashMap<String, u32>> = vec![HashMap::new(); m];
        let mut ids = HashMap::new();
        let mut codes = Vec::with_capacity(records.len() * m);

        for (row, record) in records.iter().enumerate() {
            // header is line 1
            let line = row as u64 + 2;
            if record.values.len() != m {
                return Err(Error::RaggedRow {
                    line,
                    expected: m + 1,
                    found: record.values.len() + 1,
                });
            }
            if record.id.is_empty() {
                return Err(Error::EmptyCell {
                    line,
                    column: id_column.clone(),
                });
            }
            if ids.insert(record.id.as_str(), ()).is_some() {
                return Err(Error::DuplicateRecord(record.id.clone()));
            }
            for (d, value) in record.values.iter().enumerate() {
                if value.is_empty() {
                    return Err(Error::EmptyCell {
                        line,
                        column: dimension_names[d].clone(),
                    });
                }
                let next = domains[d].len() as u32;
                let code = *lookup[d].entry(value.clone()).or_insert_with(|| {
                    domains[d].push(value.clone());
                    next
                });
                codes.push(code);
            }
        }

        let dimensions = dimension_names
            .into_iter()
            .zip(domains)
            .map(|(name, domain)| Dimension { name, domain })
            .collect();

        Ok(Dataset {
            id_column,
            dimensions,
            records,
            codes,
        })
    }

    /// Parses delimiter-separated text: a header row whose first column
    /// holds record ids, followed by one row per record.
    pub fn from_reader<R: Read>(reader: R, format: Format) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(format.delimiter)
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);

        let mut rows = rdr.records();
        let header = match rows.next() {
            Some(h) => h.map_err(csv_error)?,
            None => return Err(Error::Empty("header row")),
        };
        let mut header = header.iter().map(str::to_owned);
        let id_column = header.next().unwrap_or_default();
        let dimension_names: Vec<String> = header.collect();
        let width = dimension_names.len() + 1;

        let mut records = Vec::new();
        for row in rows {
            let row = row.map_err(csv_error)?;
            let line = row.position().map_or(0, |p| p.line());
            if row.len() != width {
                return Err(Error::RaggedRow {
                    line,
                    expected: width,
                    found: row.len(),
                });
            }
            for (field, column) in row
                .iter()
                .zip(std::iter::once(&id_column).chain(&dimension_names))
            {
                if field.is_empty() {
                    return Err(Error::EmptyCell {
                        line,
                        column: column.clone(),
                    });
                }
            }
            let mut fields = row.iter().map(str::to_owned);
            let id = fields.next().unwrap_or_default();
            records.push(Record {
                id,
                values: fields.collect(),
            });
        }
        Dataset::new(id_column, dimension_names, records)
    }

    pub fn from_str_with(text: &str, format: Format) -> Result<Self> {
        Dataset::from_reader(text.as_bytes(), format)
    }

    /// Writes the canonical delimiter-separated form.
    pub fn write_to<W: Write>(&self, writer: W, format: Format) -> std::io::Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .delimiter(format.delimiter)
            .from_writer(writer);
        let header = std::iter::once(self.id_column.as_str())
            .chain(self.dimensions.iter().map(|d| d.name.as_str()));
        wtr.write_record(header)?;
        for r in &self.records {
            wtr.write_record(std::iter::once(&r.id).chain(&r.values))?;
        }
        wtr.flush()
    }

    pub fn to_text(&self, format: Format) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf, format)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("dataset labels are UTF-8")
    }

    pub fn id_column(&self) -> &str {
        &self.id_column
    }

    pub fn dimensions(&self) -> &[Dimension] {
        &self.dimensions
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn ids(&self) -> Vec<String> {
        self.records.iter().map(|r| r.id.clone()).collect()
    }

    /// Number of records (N).
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Number of dimensions (M).
    pub fn width(&self) -> usize {
        self.dimensions.len()
    }

    /// Category index of record `row` in dimension `dim`.
    pub fn code(&self, row: usize, dim: usize) -> usize {
        self.codes[row * self.dimensions.len() + dim] as usize
    }

    /// Category indices of one record, positionally aligned with dimensions.
    pub fn row_codes(&self, row: usize) -> &[u32] {
        let m = self.dimensions.len();
        &self.codes[row * m..(row + 1) * m]
    }

    pub fn dimension_index(&self, name: &str) -> Result<usize> {
        self.dimensions
            .iter()
            .position(|d| d.name == name)
            .ok_or_else(|| Error::UnknownDimension(name.to_owned()))
    }

    pub fn dimension(&self, name: &str) -> Result<&Dimension> {
        self.dimension_index(name).map(|i| &self.dimensions[i])
    }

    /// Observed categories of a dimension, in first-occurrence order.
    pub fn domain_of(&self, name: &str) -> Result<&[String]> {
        self.dimension(name).map(Dimension::domain)
    }

    /// Resolves a `(dimension, label)` pair to indices.
    pub fn resolve(&self, dimension: &str, label: &str) -> Result<(usize, usize)> {
        let d = self.dimension_index(dimension)?;
        let v = self.dimensions[d]
            .position(label)
            .ok_or_else(|| Error::UnknownValue {
                dimension: dimension.to_owned(),
                value: label.to_owned(),
            })?;
        Ok((d, v))
    }

    /// Category counts per dimension.
    pub fn frequencies(&self) -> Vec<Vec<usize>> {
        let mut counts: Vec<Vec<usize>> = self
            .dimensions
            .iter()
            .map(|d| vec![0; d.domain.len()])
            .collect();
        for row in 0..self.len() {
            for (d, &c) in self.row_codes(row).iter().enumerate() {
                counts[d][c as usize] += 1;
            }
        }
        counts
    }

    pub fn summarize(&self) -> Summary {
        self.dimensions
            .iter()
            .zip(self.frequencies())
            .map(|(dim, counts)| {
                let table = dim.domain.iter().cloned().zip(counts).collect();
                (dim.name.clone(), table)
            })
            .collect()
    }
}

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line());
    Error::Parse {
        line,
        message: err.to_string(),
    }
}

/// JSON view of [`Dataset::summarize`].
#[derive(Debug, Serialize)]
pub struct SummaryView<'a> {
    pub records: usize,
    pub dimensions: Vec<&'a str>,
    pub frequencies: Summary,
}

impl<'a> SummaryView<'a> {
    pub fn new(dataset: &'a Dataset) -> Self {
        SummaryView {
            records: dataset.len(),
            dimensions: dataset.dimensions.iter().map(|d| d.name.as_str()).collect(),
            frequencies: dataset.summarize(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        Dataset::from_str_with("id,A,B\np1,x,u\np2,y,u\n", Format::default()).unwrap()
    }

    #[test]
    fn loads_toy_dataset() {
        let ds = toy();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.width(), 2);
        assert_eq!(ds.domain_of("A").unwrap(), ["x", "y"]);
        assert_eq!(ds.domain_of("B").unwrap(), ["u"]);
        assert_eq!(ds.domain_of("C"), Err(Error::UnknownDimension("C".into())));
    }

    #[test]
    fn summary_counts() {
        let s = toy().summarize();
        assert_eq!(s["A"]["x"], 1);
        assert_eq!(s["A"]["y"], 1);
        assert_eq!(s["B"]["u"], 2);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"A":{"x":1,"y":1},"B":{"u":2}}"#);
    }

    #[test]
    fn single_record_summary() {
        let ds = Dataset::from_str_with("id,A,B,C\nr,1,2,3\n", Format::default()).unwrap();
        for table in ds.summarize().values() {
            assert_eq!(table.len(), 1);
            assert_eq!(table.values().copied().collect::<Vec<_>>(), [1]);
        }
    }

    #[test]
    fn rejects_duplicate_dimension() {
        let err = Dataset::from_str_with("id,A,A\np1,x,y\n", Format::default()).unwrap_err();
        assert_eq!(err, Error::DuplicateDimension("A".into()));
    }

    #[test]
    fn rejects_duplicate_ids() {
        let err = Dataset::from_str_with("id,A\np1,x\np1,y\n", Format::default()).unwrap_err();
        assert_eq!(err, Error::DuplicateRecord("p1".into()));
    }

    #[test]
    fn rejects_empty_cell() {
        let err = Dataset::from_str_with("id,A,B\np1,x,\n", Format::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyCell { line: 2, ref column } if column == "B"));
        // whitespace-only counts as empty after trimming
        let err = Dataset::from_str_with("id,A,B\np1,  ,u\n", Format::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyCell { .. }));
    }

    #[test]
    fn rejects_ragged_rows() {
        let err = Dataset::from_str_with("id,A,B\np1,x\n", Format::default()).unwrap_err();
        assert_eq!(
            err,
            Error::RaggedRow {
                line: 2,
                expected: 3,
                found: 2
            }
        );
    }

    #[test]
    fn rejects_header_only() {
        let err = Dataset::from_str_with("id,A\n", Format::default()).unwrap_err();
        assert_eq!(err, Error::Empty("records"));
        let err = Dataset::from_str_with("id\np1\n", Format::default()).unwrap_err();
        assert_eq!(err, Error::Empty("dimensions"));
    }

    #[test]
    fn quoting_trimming_and_case() {
        let text = "id;Technique;Flag\n\"p 1\";\"RL;SVM\" ; True\np2; rl;true\n";
        let ds = Dataset::from_str_with(text, Format { delimiter: b';' }).unwrap();
        assert_eq!(ds.records()[0].id, "p 1");
        assert_eq!(ds.domain_of("Technique").unwrap(), ["RL;SVM", "rl"]);
        assert_eq!(ds.domain_of("Flag").unwrap(), ["True", "true"]);
    }

    #[test]
    fn resolve_distinguishes_errors() {
        let ds = toy();
        assert_eq!(ds.resolve("A", "y"), Ok((0, 1)));
        assert!(matches!(
            ds.resolve("Z", "y"),
            Err(Error::UnknownDimension(_))
        ));
        assert!(matches!(
            ds.resolve("A", "q"),
            Err(Error::UnknownValue { .. })
        ));
    }

    #[test]
    fn canonical_text() {
        let ds = toy();
        assert_eq!(ds.to_text(Format::default()), "id,A,B\np1,x,u\np2,y,u\n");
        let tsv = ds.to_text(Format { delimiter: b'\t' });
        assert_eq!(
            Dataset::from_str_with(&tsv, Format { delimiter: b'\t' }).unwrap(),
            ds
        );
    }
}
