//! Choosing and checking a cluster count: silhouette widths and bootstrap
//! cluster stability.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::gower::{distance_matrix, distance_matrix_of, DistanceMatrix};
use crate::hac::{cluster, cut, Linkage, Partition};

/// Silhouette widths of one partition.
#[derive(Debug, Clone, PartialEq)]
pub struct SilhouetteReport {
    pub k: usize,
    pub ids: Vec<String>,
    /// `s(i)` for every record, in record order.
    pub per_point: Vec<f64>,
    /// Mean silhouette of each cluster, cluster 1 first.
    pub cluster_means: Vec<f64>,
    /// Average silhouette width over all records.
    pub asw: f64,
}

#[derive(Debug, Serialize)]
struct PointView<'a> {
    id: &'a str,
    s: f64,
}

#[derive(Debug, Serialize)]
pub struct SilhouetteExport<'a> {
    k: usize,
    asw: f64,
    cluster_means: &'a [f64],
    per_point: Vec<PointView<'a>>,
}

impl SilhouetteReport {
    pub fn export(&self) -> SilhouetteExport<'_> {
        SilhouetteExport {
            k: self.k,
            asw: self.asw,
            cluster_means: &self.cluster_means,
            per_point: self
                .ids
                .iter()
                .zip(&self.per_point)
                .map(|(id, &s)| PointView { id, s })
                .collect(),
        }
    }
}

/// Rousseeuw silhouette: `s(i) = (b - a) / max(a, b)` where `a` is the mean
/// distance to the rest of the own cluster and `b` the smallest mean distance
/// to another cluster. Singletons and `max(a, b) = 0` give `s(i) = 0`.
pub fn silhouette(matrix: &DistanceMatrix, partition: &Partition) -> Result<SilhouetteReport> {
    let n = matrix.len();
    if partition.len() != n {
        return Err(Error::InvalidArgument(format!(
            "partition labels {} records, matrix has {n}",
            partition.len()
        )));
    }
    let k = partition.k();
    if k < 2 {
        return Err(Error::Degenerate(
            "silhouette is undefined for a single cluster".into(),
        ));
    }
    let labels = partition.labels();
    let sizes = partition.sizes();

    let mut per_point = Vec::with_capacity(n);
    let mut sums = vec![0.0; k];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for (j, &d) in matrix.row(i).iter().enumerate() {
            if j != i {
                sums[labels[j] - 1] += d;
            }
        }
        let own = labels[i] - 1;
        let s = if sizes[own] == 1 {
            0.0
        } else {
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let scale = a.max(b);
            if scale == 0.0 {
                0.0
            } else {
                (b - a) / scale
            }
        };
        per_point.push(s);
    }

    let mut cluster_sums = vec![0.0; k];
    for (i, &s) in per_point.iter().enumerate() {
        cluster_sums[labels[i] - 1] += s;
    }
    let cluster_means = cluster_sums
        .iter()
        .zip(&sizes)
        .map(|(s, &c)| s / c as f64)
        .collect();
    let asw = per_point.iter().sum::<f64>() / n as f64;

    Ok(SilhouetteReport {
        k,
        ids: matrix.ids().to_vec(),
        per_point,
        cluster_means,
        asw,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub k: usize,
    pub asw: f64,
}

/// Average silhouette width of the HAC cut for every `k` in `k_min..=k_max`.
pub fn silhouette_sweep(
    matrix: &DistanceMatrix,
    linkage: Linkage,
    k_min: usize,
    k_max: usize,
) -> Result<Vec<SweepPoint>> {
    if k_min > k_max {
        return Err(Error::InvalidArgument(format!(
            "empty cluster-count range {k_min}..={k_max}"
        )));
    }
    if k_min < 2 || k_max > matrix.len() {
        return Err(Error::InvalidArgument(format!(
            "cluster-count range {k_min}..={k_max} must lie within 2..={}",
            matrix.len()
        )));
    }
    let tree = cluster(matrix, linkage);
    (k_min..=k_max)
        .map(|k| {
            let partition = cut(&tree, k)?;
            Ok(SweepPoint {
                k,
                asw: silhouette(matrix, &partition)?.asw,
            })
        })
        .collect()
}

/// Two-column `k,asw` CSV for plotting.
pub fn sweep_to_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("k,asw\n");
    for p in points {
        out.push_str(&format!("{},{}\n", p.k, p.asw));
    }
    out
}

/// Parameters of a bootstrap stability run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig {
    pub k: usize,
    pub resamples: usize,
    pub seed: u64,
    pub linkage: Linkage,
    /// A cluster dissolves in a resample when its best Jaccard match is below this.
    pub threshold: f64,
}

impl BootstrapConfig {
    pub fn new(k: usize, resamples: usize, seed: u64) -> Self {
        BootstrapConfig {
            k,
            resamples,
            seed,
            linkage: Linkage::default(),
            threshold: 0.5,
        }
    }
}

/// Cluster-wise bootstrap stability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub k: usize,
    #[serde(rename = "B")]
    pub resamples: usize,
    pub seed: u64,
    pub threshold: f64,
    pub linkage: Linkage,
    /// Mean best-match Jaccard per original cluster.
    pub stabilities: Vec<f64>,
    /// Resamples in which each cluster dissolved.
    pub dissolved: Vec<usize>,
    /// Draws discarded because they held fewer than `k` distinct records.
    pub redraws: usize,
}

/// Seeds the generator of bootstrap replicate `replicate`.
///
/// Each replicate owns a ChaCha8 stream: the key comes from `seed` and the
/// stream id is the replicate index, so replicates can run in any order.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Draws `n` row indices with replacement, redrawing until at least
/// `min_distinct` distinct rows are present. Returns the draw and the number
/// of discarded draws.
pub fn draw_resample(rng: &mut ChaCha8Rng, n: usize, min_distinct: usize) -> (Vec<usize>, usize) {
    let mut redraws = 0;
    loop {
        let draw: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let mut seen = vec![false; n];
        let distinct = draw
            .iter()
            .filter(|&&r| !std::mem::replace(&mut seen[r], true))
            .count();
        if distinct >= min_distinct {
            return (draw, redraws);
        }
        redraws += 1;
    }
}

/// Resamples records with replacement, reclusters every resample, and
/// matches each original cluster to its best resample cluster by Jaccard
/// similarity over the distinct records drawn.
///
/// A cluster none of whose records were drawn scores 0 in that resample.
pub fn bootstrap_stability(dataset: &Dataset, config: &BootstrapConfig) -> Result<StabilityReport> {
    let n = dataset.len();
    let BootstrapConfig {
        k,
        resamples,
        seed,
        linkage,
        threshold,
    } = *config;
    if resamples == 0 {
        return Err(Error::InvalidArgument(
            "resample count must be positive".into(),
        ));
    }
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!(
            "cluster count {k} outside 2..={n}"
        )));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "dissolution threshold {threshold} outside (0, 1)"
        )));
    }

    let original = cut(&cluster(&distance_matrix(dataset), linkage), k)?;
    let members = original.clusters();

    let replicates: Vec<(Vec<f64>, usize)> = (0..resamples as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = replicate_rng(seed, b);
            let (draw, redraws) = draw_resample(&mut rng, n, k);
            if redraws > 0 {
                log::warn!("replicate {b}: redrew {redraws} resample(s) with fewer than {k} distinct records");
            }
            let tree = cluster(&distance_matrix_of(dataset, &draw), linkage);
            let part = cut(&tree, k).expect("resample holds at least k rows");
            (best_jaccards(&members, &draw, &part, n), redraws)
        })
        .collect();

    let mut stabilities = vec![0.0; k];
    let mut dissolved = vec![0usize; k];
    let mut redraws = 0;
    for (jaccards, r) in &replicates {
        redraws += r;
        for (c, &j) in jaccards.iter().enumerate() {
            stabilities[c] += j;
            if j < threshold {
                dissolved[c] += 1;
            }
        }
    }
    stabilities.iter_mut().for_each(|s| *s /= resamples as f64);

    Ok(StabilityReport {
        k,
        resamples,
        seed,
        threshold,
        linkage,
        stabilities,
        dissolved,
        redraws,
    })
}

fn best_jaccards(original: &[Vec<usize>], draw: &[usize], part: &Partition, n: usize) -> Vec<f64> {
    let mut drawn = vec![false; n];
    for &r in draw {
        drawn[r] = true;
    }
    // distinct original rows in every resample cluster
    let resampled: Vec<Vec<bool>> = part
        .clusters()
        .iter()
        .map(|rows| {
            let mut set = vec![false; n];
            for &i in rows {
                set[draw[i]] = true;
            }
            set
        })
        .collect();

    original
        .iter()
        .map(|rows| {
            let present: Vec<usize> = rows.iter().copied().filter(|&r| drawn[r]).collect();
            if present.is_empty() {
                return 0.0;
            }
            resampled
                .iter()
                .map(|set| {
                    let inter = present.iter().filter(|&&r| set[r]).count();
                    let size = set.iter().filter(|&&x| x).count();
                    inter as f64 / (present.len() + size - inter) as f64
                })
                .fold(0.0, f64::max)
        })
        .collect()
}
