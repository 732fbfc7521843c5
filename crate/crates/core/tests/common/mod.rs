//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the algorithm it checks.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use dsmine_core::{Dataset, DistanceMatrix, Linkage, Record};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random categorical dataset with `n` records, `m` dimensions and at most
/// `max_categories` labels per dimension.
pub fn random_dataset(rng: &mut impl Rng, n: usize, m: usize, max_categories: usize) -> Dataset {
    let cats: Vec<usize> = (0..m)
        .map(|_| rng.random_range(1..=max_categories))
        .collect();
    let records = (0..n)
        .map(|i| Record {
            id: format!("r{i}"),
            values: cats
                .iter()
                .map(|&c| format!("c{}", rng.random_range(0..c)))
                .collect(),
        })
        .collect();
    let names = (0..m).map(|d| format!("D{d}")).collect();
    Dataset::new("id", names, records).expect("generated dataset is valid")
}

pub fn random_sized_dataset(
    rng: &mut impl Rng,
    max_n: usize,
    max_m: usize,
    max_c: usize,
) -> Dataset {
    let n = rng.random_range(1..=max_n);
    let m = rng.random_range(1..=max_m);
    random_dataset(rng, n, m, max_c)
}

/// Two blobs of duplicated records that differ in every dimension.
pub fn two_blob(per_blob: usize, m: usize) -> Dataset {
    let mut records = Vec::new();
    for (blob, label) in ["x", "y"].iter().enumerate() {
        for i in 0..per_blob {
            records.push(Record {
                id: format!("{}{i}", if blob == 0 { "a" } else { "b" }),
                values: vec![label.to_string(); m],
            });
        }
    }
    let names = (0..m).map(|d| format!("D{d}")).collect();
    Dataset::new("id", names, records).unwrap()
}

/// Number of differing labels between two records.
pub fn hamming(a: &Record, b: &Record) -> usize {
    a.values
        .iter()
        .zip(&b.values)
        .filter(|(x, y)| x != y)
        .count()
}

pub fn random_matrix(rng: &mut impl Rng, n: usize) -> DistanceMatrix {
    // a few repeated values so that ties and zero distances occur
    let palette = [0.0, 0.25, 0.5, 0.5, 1.0];
    let mut vals = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let v = if rng.random_bool(0.3) {
                palette[rng.random_range(0..palette.len())]
            } else {
                rng.random::<f64>()
            };
            vals[i * n + j] = v;
            vals[j * n + i] = v;
        }
    }
    let ids = (0..n).map(|i| format!("r{i}")).collect();
    DistanceMatrix::from_values(ids, vals).unwrap()
}

/// Naive agglomerative clustering: inter-cluster distances recomputed from
/// the original pairwise distances at every step.
pub struct NaiveHac {
    /// (smallest index of left cluster, smallest index of right cluster, height)
    pub merges: Vec<(usize, usize, f64)>,
    /// Cluster memberships after each number of merges: `states[s]` holds the
    /// clusters after `s` merges.
    pub states: Vec<Vec<Vec<usize>>>,
}

pub fn naive_hac(d: &DistanceMatrix, linkage: Linkage) -> NaiveHac {
    let n = d.len();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut merges = Vec::new();
    let mut states = vec![clusters.clone()];
    while clusters.len() > 1 {
        let link = |a: &[usize], b: &[usize]| -> f64 {
            let pairs = a.iter().flat_map(|&i| b.iter().map(move |&j| d.get(i, j)));
            match linkage {
                Linkage::Single => pairs.fold(f64::INFINITY, f64::min),
                Linkage::Complete => pairs.fold(f64::NEG_INFINITY, f64::max),
                Linkage::Average => pairs.sum::<f64>() / (a.len() * b.len()) as f64,
            }
        };
        // clusters kept sorted by smallest member
        let mut cands = Vec::new();
        for x in 0..clusters.len() {
            for y in x + 1..clusters.len() {
                cands.push((
                    clusters[x][0],
                    clusters[y][0],
                    x,
                    y,
                    link(&clusters[x], &clusters[y]),
                ));
            }
        }
        let min = cands.iter().map(|c| c.4).fold(f64::INFINITY, f64::min);
        let tol = 1e-12 * min.abs().max(1.0);
        let best = cands
            .iter()
            .filter(|c| c.4 <= min + tol)
            .min_by_key(|c| (c.0, c.1))
            .copied()
            .unwrap();
        let (_, _, x, y, h) = best;
        merges.push((clusters[x][0], clusters[y][0], h));
        let moved = clusters.remove(y);
        clusters[x].extend(moved);
        clusters[x].sort_unstable();
        clusters.sort_by_key(|c| c[0]);
        states.push(clusters.clone());
    }
    NaiveHac { merges, states }
}

impl NaiveHac {
    /// Canonical labels (1-based, numbered by smallest member) at `k` clusters.
    pub fn labels(&self, n: usize, k: usize) -> Vec<usize> {
        let state = &self.states[n - k];
        let mut labels = vec![0; n];
        for (c, members) in state.iter().enumerate() {
            for &i in members {
                labels[i] = c + 1;
            }
        }
        labels
    }
}

/// Smallest leaf index under every dendrogram node.
pub fn node_min_leaf(n: usize, merges: &[dsmine_core::hac::Merge]) -> Vec<usize> {
    let mut min: Vec<usize> = (0..n).collect();
    for m in merges {
        min.push(min[m.left].min(min[m.right]));
    }
    min
}

/// Silhouette straight from the definition, over explicit member lists.
pub fn silhouette_direct(d: &DistanceMatrix, labels: &[usize]) -> Vec<f64> {
    let n = labels.len();
    let groups: BTreeMap<usize, Vec<usize>> =
        labels
            .iter()
            .enumerate()
            .fold(BTreeMap::new(), |mut acc, (i, &l)| {
                acc.entry(l).or_insert_with(Vec::new).push(i);
                acc
            });
    (0..n)
        .map(|i| {
            let own = &groups[&labels[i]];
            if own.len() == 1 {
                return 0.0;
            }
            let a = own
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| d.get(i, j))
                .sum::<f64>()
                / (own.len() - 1) as f64;
            let b = groups
                .iter()
                .filter(|(&l, _)| l != labels[i])
                .map(|(_, g)| g.iter().map(|&j| d.get(i, j)).sum::<f64>() / g.len() as f64)
                .fold(f64::INFINITY, f64::min);
            if a.max(b) == 0.0 {
                0.0
            } else {
                (b - a) / a.max(b)
            }
        })
        .collect()
}

/// Standardized residual matrix of the indicator coding, built from the
/// record labels (row-major `n x j`) together with the column list.
pub fn residual_matrix(ds: &Dataset) -> (Vec<f64>, usize, usize) {
    let n = ds.len();
    let mut columns: Vec<(usize, String)> = Vec::new();
    for d in 0..ds.width() {
        let labels: BTreeSet<&String> = ds.records().iter().map(|r| &r.values[d]).collect();
        columns.extend(labels.into_iter().map(|l| (d, l.clone())));
    }
    let j = columns.len();
    let z: Vec<f64> = ds
        .records()
        .iter()
        .flat_map(|r| {
            columns
                .iter()
                .map(move |(d, l)| if &r.values[*d] == l { 1.0 } else { 0.0 })
        })
        .collect();
    let grand: f64 = z.iter().sum();
    let p: Vec<f64> = z.iter().map(|x| x / grand).collect();
    let rmass: Vec<f64> = (0..n).map(|i| (0..j).map(|c| p[i * j + c]).sum()).collect();
    let cmass: Vec<f64> = (0..j).map(|c| (0..n).map(|i| p[i * j + c]).sum()).collect();
    let mut s = vec![0.0; n * j];
    for i in 0..n {
        for c in 0..j {
            s[i * j + c] = (p[i * j + c] - rmass[i] * cmass[c]) / (rmass[i] * cmass[c]).sqrt();
        }
    }
    (s, n, j)
}

/// `S^T S` for a row-major `n x j` matrix.
pub fn cross_product(s: &[f64], n: usize, j: usize) -> Vec<f64> {
    let mut out = vec![0.0; j * j];
    for a in 0..j {
        for b in 0..j {
            out[a * j + b] = (0..n).map(|i| s[i * j + a] * s[i * j + b]).sum();
        }
    }
    out
}

/// Eigenvalues of a symmetric matrix by power iteration with deflation,
/// descending.
pub fn power_eigenvalues(a: &[f64], j: usize) -> Vec<f64> {
    let mut m = a.to_vec();
    let mut out = Vec::new();
    for s in 0..j {
        let mut v: Vec<f64> = (0..j).map(|i| 1.0 + 0.1 * ((i + s) % 3) as f64).collect();
        let mut lambda = 0.0;
        for _ in 0..5000 {
            let w: Vec<f64> = (0..j)
                .map(|r| (0..j).map(|c| m[r * j + c] * v[c]).sum())
                .collect();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-300 {
                lambda = 0.0;
                break;
            }
            v = w.iter().map(|x| x / norm).collect();
            lambda = (0..j)
                .map(|r| v[r] * (0..j).map(|c| m[r * j + c] * v[c]).sum::<f64>())
                .sum();
        }
        for r in 0..j {
            for c in 0..j {
                m[r * j + c] -= lambda * v[r] * v[c];
            }
        }
        out.push(lambda.max(0.0));
    }
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

/// Eigenvalues via nalgebra's symmetric eigensolver, descending.
pub fn nalgebra_eigenvalues(a: &[f64], j: usize) -> Vec<f64> {
    let m = nalgebra::DMatrix::from_row_slice(j, j, a);
    let mut vals: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    vals
}

/// Linear-scan recommender over label strings.
pub struct ScanResult {
    pub matches: Vec<String>,
    /// dimension -> value -> count among matches (unbound dimensions only)
    pub counts: BTreeMap<String, HashMap<String, usize>>,
    /// dimension -> observed-domain values with zero count
    pub gaps: BTreeMap<String, BTreeSet<String>>,
}

pub fn scan(ds: &Dataset, bindings: &[(String, String)]) -> ScanResult {
    let names: Vec<&str> = ds.dimensions().iter().map(|d| d.name()).collect();
    let col = |name: &str| names.iter().position(|n| *n == name).unwrap();
    let matching: Vec<&Record> = ds
        .records()
        .iter()
        .filter(|r| bindings.iter().all(|(d, v)| &r.values[col(d)] == v))
        .collect();
    let mut counts = BTreeMap::new();
    let mut gaps = BTreeMap::new();
    for (d, name) in names.iter().enumerate() {
        if bindings.iter().any(|(b, _)| b == name) {
            continue;
        }
        let mut c: HashMap<String, usize> = HashMap::new();
        for r in &matching {
            *c.entry(r.values[d].clone()).or_default() += 1;
        }
        let all: BTreeSet<String> = ds.records().iter().map(|r| r.values[d].clone()).collect();
        let unused = all.into_iter().filter(|v| !c.contains_key(v)).collect();
        counts.insert(name.to_string(), c);
        gaps.insert(name.to_string(), unused);
    }
    ScanResult {
        matches: matching.iter().map(|r| r.id.clone()).collect(),
        counts,
        gaps,
    }
}

/// Random bindings over a random subset of dimensions; values are drawn from
/// the observed labels of each column.
pub fn random_bindings(rng: &mut impl Rng, ds: &Dataset) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for (d, dim) in ds.dimensions().iter().enumerate() {
        if rng.random_bool(0.4) {
            let row = rng.random_range(0..ds.len());
            out.push((dim.name().to_string(), ds.records()[row].values[d].clone()));
        }
    }
    out
}
