//! Multiple correspondence analysis on the indicator (disjunctive) coding.
//!
//! The `N x J` indicator matrix `Z` is analysed as a contingency table:
//! `P = Z / (N Q)`, row masses `1/N`, column masses `c_j`, and the
//! standardized residuals `S = D_r^{-1/2} (P - r c^T) D_c^{-1/2}` are
//! decomposed by SVD. Principal inertias are the squared singular values.

use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::svd;

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// One-hot coding of a dataset: one column per (dimension, category).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorMatrix {
    pub columns: Vec<CategoryRef>,
    pub rows: Vec<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CategoryRef {
    pub variable: String,
    pub category: String,
}

pub fn indicator_matrix(dataset: &Dataset) -> IndicatorMatrix {
    let offsets = column_offsets(dataset);
    let columns = category_refs(dataset);
    let rows = (0..dataset.len())
        .map(|r| {
            let mut row = vec![0u8; columns.len()];
            for (d, &c) in dataset.row_codes(r).iter().enumerate() {
                row[offsets[d] + c as usize] = 1;
            }
            row
        })
        .collect();
    IndicatorMatrix { columns, rows }
}

fn column_offsets(dataset: &Dataset) -> Vec<usize> {
    dataset
        .dimensions()
        .iter()
        .scan(0, |acc, d| {
            let start = *acc;
            *acc += d.domain().len();
            Some(start)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct McaResult {
    /// Number of variables (Q).
    pub variables: usize,
    /// Number of records (N).
    pub records: usize,
    pub categories: Vec<CategoryRef>,
    /// Column masses `c_j`.
    pub masses: Vec<f64>,
    /// Principal inertias, descending, `J - Q` of them; values below the
    /// rank tolerance are exactly zero.
    pub inertias: Vec<f64>,
    /// Principal coordinates `[axis][category]` for every non-trivial axis.
    pub column_coordinates: Vec<Vec<f64>>,
    /// Contributions `[axis][category]`, each axis summing to one.
    pub contributions: Vec<Vec<f64>>,
    /// Principal coordinates `[axis][record]`.
    pub row_coordinates: Vec<Vec<f64>>,
    pub record_ids: Vec<String>,
}

impl McaResult {
    /// Total number of categories (J).
    pub fn category_count(&self) -> usize {
        self.categories.len()
    }

    /// Number of axes with non-zero inertia.
    pub fn rank(&self) -> usize {
        self.contributions.len()
    }

    pub fn total_inertia(&self) -> f64 {
        self.inertias.iter().sum()
    }

    /// Optimistic Benzécri correction of this result's inertias.
    pub fn corrected(&self) -> Result<Vec<CorrectedAxis>> {
        benzecri_correct(&self.inertias, self.variables)
    }
}

pub fn mca(dataset: &Dataset) -> Result<McaResult> {
    let q = dataset.width();
    let n = dataset.len();
    let offsets = column_offsets(dataset);
    let j = dataset
        .dimensions()
        .iter()
        .map(|d| d.domain().len())
        .sum::<usize>();
    if j == q {
        return Err(Error::Degenerate(
            "every dimension has a single category, total inertia is zero".into(),
        ));
    }

    let nq = (n * q) as f64;
    let mut masses = vec![0.0; j];
    for (d, counts) in dataset.frequencies().iter().enumerate() {
        for (c, &count) in counts.iter().enumerate() {
            masses[offsets[d] + c] = count as f64 / nq;
        }
    }
    let r = 1.0 / n as f64;

    let mut residuals = vec![0.0; n * j];
    for i in 0..n {
        let row = &mut residuals[i * j..(i + 1) * j];
        for (col, &c) in masses.iter().enumerate() {
            row[col] = -r * c / (r * c).sqrt();
        }
        for (d, &code) in dataset.row_codes(i).iter().enumerate() {
            let col = offsets[d] + code as usize;
            let c = masses[col];
            row[col] = (1.0 / nq - r * c) / (r * c).sqrt();
        }
    }

    let decomposition = svd(&residuals, n, j);
    let sigma_max = decomposition.values.first().copied().unwrap_or(0.0);
    let cutoff = RANK_TOLERANCE * sigma_max;

    let mut inertias = Vec::with_capacity(j - q);
    let mut column_coordinates = Vec::new();
    let mut contributions = Vec::new();
    let mut row_coordinates = Vec::new();
    for (s, &sigma) in decomposition.values.iter().enumerate() {
        if sigma <= cutoff {
            continue;
        }
        let v = &decomposition.right[s];
        column_coordinates.push(
            v.iter()
                .zip(&masses)
                .map(|(x, c)| x / c.sqrt() * sigma)
                .collect(),
        );
        contributions.push(v.iter().map(|x| x * x).collect());
        row_coordinates.push(
            decomposition.scaled_left[s]
                .iter()
                .map(|x| x / r.sqrt())
                .collect(),
        );
        inertias.push(sigma * sigma);
    }
    inertias.truncate(j - q);
    column_coordinates.truncate(j - q);
    contributions.truncate(j - q);
    row_coordinates.truncate(j - q);
    inertias.resize(j - q, 0.0);

    Ok(McaResult {
        variables: q,
        records: n,
        categories: category_refs(dataset),
        masses,
        inertias,
        column_coordinates,
        contributions,
        row_coordinates,
        record_ids: dataset.ids(),
    })
}

fn category_refs(dataset: &Dataset) -> Vec<CategoryRef> {
    dataset
        .dimensions()
        .iter()
        .flat_map(|d| {
            d.domain().iter().map(move |c| CategoryRef {
                variable: d.name().to_owned(),
                category: c.clone(),
            })
        })
        .collect()
}

/// An axis surviving the Benzécri correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrectedAxis {
    /// 1-based axis number in the original inertia list.
    pub axis: usize,
    pub inertia: f64,
    pub adjusted: f64,
    /// Share of the summed adjusted inertias, in percent.
    pub percentage: f64,
}

/// `((Q/(Q-1)) (λ - 1/Q))²` for every `λ > 1/Q`, with percentages taken over
/// the adjusted survivors. An empty vector means no axis exceeds `1/Q`.
pub fn benzecri_correct(inertias: &[f64], variables: usize) -> Result<Vec<CorrectedAxis>> {
    if variables < 2 {
        return Err(Error::InvalidArgument(
            "Benzécri correction needs at least two variables".into(),
        ));
    }
    if let Some(bad) = inertias
        .iter()
        .find(|l| !(-1e-12..=1.0 + 1e-9).contains(*l))
    {
        return Err(Error::InvalidArgument(format!(
            "principal inertia {bad} outside [0, 1]"
        )));
    }
    let q = variables as f64;
    let floor = 1.0 / q;
    let mut axes: Vec<CorrectedAxis> = inertias
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > floor)
        .map(|(s, &l)| CorrectedAxis {
            axis: s + 1,
            inertia: l,
            adjusted: (q / (q - 1.0) * (l - floor)).powi(2),
            percentage: 0.0,
        })
        .collect();
    let total: f64 = axes.iter().map(|a| a.adjusted).sum();
    for a in &mut axes {
        a.percentage = 100.0 * a.adjusted / total;
    }
    Ok(axes)
}

/// Positions (0-based) of the axes whose percentage exceeds `threshold`.
pub fn retain_dimensions(percentages: &[f64], threshold: f64) -> Vec<usize> {
    debug_assert!(percentages.iter().sum::<f64>() <= 100.0 + 1e-9);
    percentages
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > threshold)
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contribution {
    pub variable: String,
    pub category: String,
    /// Percent of the axis inertia.
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopContributions {
    pub axis: usize,
    pub entries: Vec<Contribution>,
    /// Expected share if every category contributed equally: `100 / J`.
    pub baseline: f64,
}

/// Categories ranked by contribution to `axis` (1-based).
///
/// Contributions equal to 12 decimal places count as tied and keep
/// variable-then-category order.
pub fn top_contributions(result: &McaResult, axis: usize, n: usize) -> Result<TopContributions> {
    let ranked = ranked_contributions(result, axis)?;
    let j = result.category_count();
    if n == 0 || n > j {
        return Err(Error::InvalidArgument(format!(
            "requested {n} contributions, expected 1..={j}"
        )));
    }
    Ok(TopContributions {
        axis,
        entries: ranked.into_iter().take(n).collect(),
        baseline: 100.0 / j as f64,
    })
}

fn ranked_contributions(result: &McaResult, axis: usize) -> Result<Vec<Contribution>> {
    if axis == 0 || axis > result.rank() {
        return Err(Error::InvalidArgument(format!(
            "axis {axis} outside 1..={}",
            result.rank()
        )));
    }
    let ctr = &result.contributions[axis - 1];
    let mut order: Vec<usize> = (0..ctr.len()).collect();
    order.sort_by_key(|&j| std::cmp::Reverse((ctr[j] * 1e12).round() as i64));
    Ok(order
        .into_iter()
        .map(|j| Contribution {
            variable: result.categories[j].variable.clone(),
            category: result.categories[j].category.clone(),
            contribution: 100.0 * ctr[j],
        })
        .collect())
}

/// `axis,corrected_percentage` CSV.
pub fn scree_csv(axes: &[CorrectedAxis]) -> String {
    let mut out = String::from("axis,corrected_percentage\n");
    for a in axes {
        out.push_str(&format!("{},{}\n", a.axis, a.percentage));
    }
    out
}

/// Every category's contribution to each listed axis, ranked per axis.
pub fn contributions_csv(result: &McaResult, axes: &[usize]) -> Result<String> {
    let baseline = 100.0 / result.category_count() as f64;
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidArgument(e.to_string());
    wtr.write_record([
        "axis",
        "variable",
        "category",
        "contribution_percent",
        "baseline_percent",
    ])
    .map_err(io)?;
    for &axis in axes {
        for c in ranked_contributions(result, axis)? {
            wtr.write_record([
                axis.to_string(),
                c.variable,
                c.category,
                c.contribution.to_string(),
                baseline.to_string(),
            ])
            .map_err(io)?;
        }
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("labels are UTF-8"))
}

/// Scree, retention and contribution summary used by the CLI and service.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McaSummary {
    pub variables: usize,
    pub categories: usize,
    pub records: usize,
    pub inertias: Vec<f64>,
    pub corrected: Vec<CorrectedAxis>,
    pub retain_threshold: f64,
    /// 1-based numbers of the retained axes.
    pub retained: Vec<usize>,
    pub retained_count: usize,
    pub contributions: Vec<TopContributions>,
}

/// Runs MCA, corrects inertias, retains axes above `retain_threshold`
/// percent and lists the `top_n` contributors of each retained axis.
pub fn summarize(dataset: &Dataset, retain_threshold: f64, top_n: usize) -> Result<McaSummary> {
    let result = mca(dataset)?;
    let corrected = result.corrected()?;
    let percentages: Vec<f64> = corrected.iter().map(|a| a.percentage).collect();
    let retained: Vec<usize> = retain_dimensions(&percentages, retain_threshold)
        .into_iter()
        .map(|i| corrected[i].axis)
        .collect();
    let n = top_n.min(result.category_count()).max(1);
    let contributions = retained
        .iter()
        .map(|&axis| top_contributions(&result, axis, n))
        .collect::<Result<_>>()?;
    Ok(McaSummary {
        variables: result.variables,
        categories: result.category_count(),
        records: result.records,
        inertias: result.inertias.clone(),
        corrected,
        retain_threshold,
        retained_count: retained.len(),
        retained,
        contributions,
    })
}
