//! Hierarchical agglomerative clustering over a [`DistanceMatrix`].
//!
//! Clusters are merged greedily by minimal inter-cluster distance, with
//! inter-cluster distances maintained by the Lance-Williams recurrence.
//!
//! Ties are resolved deterministically. Every active cluster is identified by
//! its smallest record index; among all pairs whose distance is within
//! [`tie_tolerance`] of the current minimum, the pair with the lowest smaller
//! index wins, then the pair with the lowest other index.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::gower::DistanceMatrix;

/// Inter-cluster distance rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    /// Minimum pairwise distance.
    Single,
    /// Maximum pairwise distance.
    Complete,
    /// Mean pairwise distance (UPGMA).
    #[default]
    Average,
}

impl Linkage {
    pub const ALL: [Linkage; 3] = [Linkage::Single, Linkage::Complete, Linkage::Average];

    pub fn as_str(self) -> &'static str {
        match self {
            Linkage::Single => "single",
            Linkage::Complete => "complete",
            Linkage::Average => "average",
        }
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            "average" => Ok(Linkage::Average),
            other => Err(Error::InvalidArgument(format!(
                "unsupported linkage `{other}` (expected single, complete or average)"
            ))),
        }
    }
}

/// Distances closer than this to the current minimum count as tied.
///
/// Lance-Williams updates and from-scratch averages of the same cluster pair
/// can differ in the last few bits, so exact float equality would make tie
/// resolution depend on summation order.
pub fn tie_tolerance(min: f64) -> f64 {
    1e-12 * min.abs().max(1.0)
}

/// One agglomeration step. Node ids `0..N` are leaves; step `s` creates node
/// `N + s`. `left` is the cluster containing the smaller record index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    #[serde(skip_serializing, default)]
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    leaves: Vec<String>,
    merges: Vec<Merge>,
    linkage: Linkage,
}

impl Dendrogram {
    pub fn leaves(&self) -> &[String] {
        &self.leaves
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn linkage(&self) -> Linkage {
        self.linkage
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    fn height_of(&self, node: usize) -> f64 {
        let n = self.leaves.len();
        if node < n {
            0.0
        } else {
            self.merges[node - n].height
        }
    }
}

/// Runs agglomerative clustering to completion.
pub fn cluster(matrix: &DistanceMatrix, linkage: Linkage) -> Dendrogram {
    let n = matrix.len();
    let mut dist: Vec<f64> = (0..n).flat_map(|i| matrix.row(i).to_vec()).collect();
    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut node: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    for step in 0..n.saturating_sub(1) {
        let live: Vec<usize> = (0..n).filter(|&i| active[i]).collect();

        let mut min = f64::INFINITY;
        for (p, &i) in live.iter().enumerate() {
            for &j in &live[p + 1..] {
                min = min.min(dist[i * n + j]);
            }
        }
        let limit = min + tie_tolerance(min);
        let (a, b) = live
            .iter()
            .enumerate()
            .flat_map(|(p, &i)| live[p + 1..].iter().map(move |&j| (i, j)))
            .find(|&(i, j)| dist[i * n + j] <= limit)
            .expect("at least two active clusters");

        let height = dist[a * n + b];
        let (na, nb) = (size[a] as f64, size[b] as f64);
        for &c in &live {
            if c == a || c == b {
                continue;
            }
            let (dac, dbc) = (dist[a * n + c], dist[b * n + c]);
            let updated = match linkage {
                Linkage::Single => dac.min(dbc),
                Linkage::Complete => dac.max(dbc),
                Linkage::Average => (na * dac + nb * dbc) / (na + nb),
            };
            dist[a * n + c] = updated;
            dist[c * n + a] = updated;
        }

        merges.push(Merge {
            left: node[a],
            right: node[b],
            height,
            size: size[a] + size[b],
        });
        size[a] += size[b];
        node[a] = n + step;
        active[b] = false;
    }

    Dendrogram {
        leaves: matrix.ids().to_vec(),
        merges,
        linkage,
    }
}

/// A flat clustering: record `i` belongs to cluster `labels[i]` in `1..=k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Partition {
    ids: Vec<String>,
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Relabels arbitrary group keys so that clusters are numbered `1..=k`
    /// in order of their smallest record index.
    pub fn canonical<T: PartialEq>(ids: Vec<String>, keys: &[T]) -> Self {
        assert_eq!(ids.len(), keys.len(), "one key per record");
        let mut seen: Vec<&T> = Vec::new();
        let labels = keys
            .iter()
            .map(|key| match seen.iter().position(|s| *s == key) {
                Some(p) => p + 1,
                None => {
                    seen.push(key);
                    seen.len()
                }
            })
            .collect();
        Partition {
            ids,
            labels,
            k: seen.len(),
        }
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// 1-based cluster index per record.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Record indices of each cluster, cluster 1 first.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l - 1].push(i);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.clusters().iter().map(Vec::len).collect()
    }

    /// Two-column `id,cluster` CSV.
    pub fn to_csv(&self) -> String {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(["id", "cluster"])
            .expect("in-memory write");
        for (id, label) in self.ids.iter().zip(&self.labels) {
            wtr.write_record([id.as_str(), &label.to_string()])
                .expect("in-memory write");
        }
        String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf-8 ids")
    }
}

/// Undoes the last `k - 1` merges and labels the remaining components.
pub fn cut(dendrogram: &Dendrogram, k: usize) -> Result<Partition> {
    let n = dendrogram.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "cluster count {k} outside 1..={n}"
        )));
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    // representative leaf of every node
    let mut rep: Vec<usize> = (0..n).collect();
    for m in &dendrogram.merges[..n - k] {
        let (ra, rb) = (
            find(&mut parent, rep[m.left]),
            find(&mut parent, rep[m.right]),
        );
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        parent[hi] = lo;
        rep.push(lo);
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    Ok(Partition::canonical(dendrogram.leaves.clone(), &roots))
}

/// Groups records by their category in one dimension.
pub fn partition_by_dimension(dataset: &Dataset, dimension: &str) -> Result<Partition> {
    let d = dataset.dimension_index(dimension)?;
    let keys: Vec<usize> = (0..dataset.len()).map(|r| dataset.code(r, d)).collect();
    Ok(Partition::canonical(dataset.ids(), &keys))
}

/// Nested tree form of a dendrogram.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum TreeNode {
    Leaf {
        id: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        cluster: Option<usize>,
    },
    Branch {
        height: f64,
        children: Vec<TreeNode>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DendrogramExport {
    pub leaves: Vec<String>,
    pub merges: Vec<Merge>,
    pub linkage: Linkage,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overlay: Option<Vec<usize>>,
    pub tree: Option<TreeNode>,
    pub newick: String,
}

/// Serializes a dendrogram, optionally colouring leaves by `overlay`.
pub fn export_dendrogram(
    dendrogram: &Dendrogram,
    overlay: Option<&Partition>,
) -> Result<DendrogramExport> {
    let colours = match overlay {
        None => None,
        Some(p) => Some(align_overlay(dendrogram, p)?),
    };
    let n = dendrogram.len();
    let tree = if n == 0 {
        None
    } else {
        Some(tree_node(dendrogram, colours.as_deref(), 2 * n - 2))
    };
    Ok(DendrogramExport {
        leaves: dendrogram.leaves.clone(),
        merges: dendrogram.merges.clone(),
        linkage: dendrogram.linkage,
        overlay: colours,
        tree,
        newick: to_newick(dendrogram),
    })
}

fn align_overlay(dendrogram: &Dendrogram, overlay: &Partition) -> Result<Vec<usize>> {
    if overlay.len() != dendrogram.len() {
        return Err(Error::InvalidArgument(format!(
            "overlay labels {} records, dendrogram has {}",
            overlay.len(),
            dendrogram.len()
        )));
    }
    let index: std::collections::HashMap<&str, usize> = overlay
        .ids()
        .iter()
        .zip(overlay.labels())
        .map(|(id, &l)| (id.as_str(), l))
        .collect();
    dendrogram
        .leaves
        .iter()
        .map(|id| {
            index.get(id.as_str()).copied().ok_or_else(|| {
                Error::InvalidArgument(format!("overlay has no label for record `{id}`"))
            })
        })
        .collect()
}

fn tree_node(d: &Dendrogram, colours: Option<&[usize]>, node: usize) -> TreeNode {
    let n = d.len();
    if node < n {
        return TreeNode::Leaf {
            id: d.leaves[node].clone(),
            cluster: colours.map(|c| c[node]),
        };
    }
    let m = &d.merges[node - n];
    TreeNode::Branch {
        height: m.height,
        children: vec![
            tree_node(d, colours, m.left),
            tree_node(d, colours, m.right),
        ],
    }
}

/// Newick text with branch lengths (parent height minus child height).
pub fn to_newick(dendrogram: &Dendrogram) -> String {
    let n = dendrogram.len();
    if n == 0 {
        return ";".into();
    }
    let mut out = String::new();
    write_newick(dendrogram, 2 * n - 2, &mut out);
    out.push(';');
    out
}

fn write_newick(d: &Dendrogram, node: usize, out: &mut String) {
    let n = d.len();
    if node < n {
        out.push_str(&newick_label(&d.leaves[node]));
        return;
    }
    let m = &d.merges[node - n];
    out.push('(');
    for (i, child) in [m.left, m.right].into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write_newick(d, child, out);
        let branch = (m.height - d.height_of(child)).max(0.0);
        out.push(':');
        out.push_str(&branch.to_string());
    }
    out.push(')');
}

fn newick_label(id: &str) -> String {
    let special = |c: char| c.is_whitespace() || "()[]':;,".contains(c);
    if id.chars().any(special) {
        format!("'{}'", id.replace('\'', "''"))
    } else {
        id.to_owned()
    }
}
