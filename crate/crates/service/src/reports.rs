//! Analysis reports shared by the HTTP handlers and the command-line tool.
//!
//! Every function here is a pure function of the corpus and its parameters,
//! so a report serialized by the CLI and the body returned by the service are
//! the same bytes.

use std::sync::OnceLock;

use dsmine_core::hac::{export_dendrogram, DendrogramExport};
use dsmine_core::mca::{summarize, McaSummary};
use dsmine_core::recommender::NodeView;
use dsmine_core::validation::SweepPoint;
use dsmine_core::{
    bootstrap_stability, build_tree, cluster, cut, distance_matrix, recommend, silhouette_sweep,
    BootstrapConfig, Dataset, Dendrogram, DistanceMatrix, Error, Linkage, NavigationTree,
    PartialAssignment, Partition, Recommendation, Result, StabilityReport,
};
use serde::Serialize;

/// Upper bound on bootstrap resamples accepted from a request.
pub const MAX_RESAMPLES: usize = 10_000;

/// Default number of contributors listed per retained MCA axis.
pub const DEFAULT_TOP: usize = 10;

/// A loaded dataset with the derived structures every request needs.
///
/// Dendrograms are built on first use per linkage; the result does not
/// depend on when that happens.
#[derive(Debug)]
pub struct Corpus {
    dataset: Dataset,
    matrix: DistanceMatrix,
    tree: NavigationTree,
    dendrograms: [OnceLock<Dendrogram>; 3],
}

impl Corpus {
    pub fn new(dataset: Dataset) -> Result<Self> {
        let tree = build_tree(&dataset, None)?;
        Ok(Corpus {
            matrix: distance_matrix(&dataset),
            dataset,
            tree,
            dendrograms: Default::default(),
        })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn matrix(&self) -> &DistanceMatrix {
        &self.matrix
    }

    pub fn tree(&self) -> &NavigationTree {
        &self.tree
    }

    pub fn dendrogram(&self, linkage: Linkage) -> &Dendrogram {
        let slot = Linkage::ALL.iter().position(|&l| l == linkage).unwrap();
        self.dendrograms[slot].get_or_init(|| cluster(&self.matrix, linkage))
    }
}

pub fn parse_linkage(name: Option<&str>) -> Result<Linkage> {
    name.map_or(Ok(Linkage::default()), str::parse)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterReport {
    pub k: usize,
    pub linkage: Linkage,
    pub sizes: Vec<usize>,
    pub partition: Partition,
    /// Dendrogram with leaves coloured by `partition`.
    pub dendrogram: DendrogramExport,
}

pub fn cluster_report(corpus: &Corpus, k: usize, linkage: Linkage) -> Result<ClusterReport> {
    let dendrogram = corpus.dendrogram(linkage);
    let partition = cut(dendrogram, k)?;
    Ok(ClusterReport {
        k,
        linkage,
        sizes: partition.sizes(),
        dendrogram: export_dendrogram(dendrogram, Some(&partition))?,
        partition,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidateParams {
    pub k_min: usize,
    pub k_max: usize,
    pub resamples: usize,
    pub seed: u64,
    pub threshold: f64,
    pub linkage: Linkage,
    /// Cluster count for the stability run; the best sweep entry when absent.
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidateReport {
    pub linkage: Linkage,
    pub sweep: Vec<SweepPoint>,
    /// Smallest `k` attaining the largest average silhouette width.
    pub best_k: usize,
    pub stability: StabilityReport,
}

pub fn validate_report(corpus: &Corpus, params: &ValidateParams) -> Result<ValidateReport> {
    if params.resamples > MAX_RESAMPLES {
        return Err(Error::InvalidArgument(format!(
            "at most {MAX_RESAMPLES} resamples are allowed, got {}",
            params.resamples
        )));
    }
    let sweep = silhouette_sweep(corpus.matrix(), params.linkage, params.k_min, params.k_max)?;
    let best = sweep
        .iter()
        .fold(None::<SweepPoint>, |best, p| match best {
            Some(b) if b.asw >= p.asw => Some(b),
            _ => Some(*p),
        })
        .expect("sweep range is non-empty");
    let config = BootstrapConfig {
        k: params.k.unwrap_or(best.k),
        resamples: params.resamples,
        seed: params.seed,
        linkage: params.linkage,
        threshold: params.threshold,
    };
    Ok(ValidateReport {
        linkage: params.linkage,
        best_k: best.k,
        stability: bootstrap_stability(corpus.dataset(), &config)?,
        sweep,
    })
}

pub fn mca_report(corpus: &Corpus, retain_threshold: f64, top: usize) -> Result<McaSummary> {
    if !(0.0..=100.0).contains(&retain_threshold) {
        return Err(Error::InvalidArgument(format!(
            "retention threshold {retain_threshold} must lie within 0..=100 percent"
        )));
    }
    if top == 0 {
        return Err(Error::InvalidArgument("top must be positive".into()));
    }
    summarize(corpus.dataset(), retain_threshold, top)
}

pub fn recommend_report<I, D, V>(corpus: &Corpus, bindings: I) -> Result<Recommendation>
where
    I: IntoIterator<Item = (D, V)>,
    D: AsRef<str>,
    V: AsRef<str>,
{
    let partial = PartialAssignment::new(corpus.dataset(), bindings)?;
    Ok(recommend(corpus.dataset(), &partial))
}

pub fn descend_report(corpus: &Corpus, path: &[String]) -> Result<NodeView> {
    corpus.tree().descend(path)
}
