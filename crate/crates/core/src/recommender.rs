//! Frequency-based design recommendations over past records.
//!
//! Given bindings for some dimensions, the matching records vote for the
//! values of every remaining dimension; a value's confidence is the share of
//! matching records that use it. Observed values that no matching record
//! uses are reported as gaps: unexplored combinations.

use indexmap::IndexMap;
use serde::Serialize;

use crate::dataset::{Dataset, Dimension};
use crate::error::{Error, Result};

/// Bindings of a subset of dimensions to observed values.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PartialAssignment {
    // (dimension index, category index), sorted by dimension
    bindings: Vec<(usize, usize)>,
}

impl PartialAssignment {
    pub fn empty() -> Self {
        PartialAssignment::default()
    }

    /// Resolves `(dimension, value)` pairs against the dataset.
    ///
    /// Binding the same dimension twice is allowed only with the same value.
    pub fn new<I, D, V>(dataset: &Dataset, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (D, V)>,
        D: AsRef<str>,
        V: AsRef<str>,
    {
        let mut bindings: Vec<(usize, usize)> = Vec::new();
        for (dim, value) in pairs {
            let (d, v) = dataset.resolve(dim.as_ref(), value.as_ref())?;
            match bindings.iter().find(|(bd, _)| *bd == d) {
                Some(&(_, bv)) if bv != v => {
                    return Err(Error::InvalidArgument(format!(
                        "dimension `{}` bound twice",
                        dim.as_ref()
                    )))
                }
                Some(_) => {}
                None => bindings.push((d, v)),
            }
        }
        bindings.sort_unstable();
        Ok(PartialAssignment { bindings })
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn is_bound(&self, dimension: usize) -> bool {
        self.bindings.iter().any(|&(d, _)| d == dimension)
    }

    pub fn bindings(&self) -> &[(usize, usize)] {
        &self.bindings
    }

    fn accepts(&self, dataset: &Dataset, row: usize) -> bool {
        self.bindings
            .iter()
            .all(|&(d, v)| dataset.code(row, d) == v)
    }
}

/// Indices of the records agreeing with every binding, in record order.
pub fn matches(dataset: &Dataset, partial: &PartialAssignment) -> Vec<usize> {
    (0..dataset.len())
        .filter(|&r| partial.accepts(dataset, r))
        .collect()
}

pub fn matching_ids(dataset: &Dataset, partial: &PartialAssignment) -> Vec<String> {
    matches(dataset, partial)
        .into_iter()
        .map(|r| dataset.records()[r].id.clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueConfidence {
    pub value: String,
    /// Percent of matching records.
    pub confidence: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recommendation {
    pub match_count: usize,
    /// Per unbound dimension, used values by descending confidence.
    pub recommendations: IndexMap<String, Vec<ValueConfidence>>,
    /// Per unbound dimension, observed values unused by any match.
    pub gaps: IndexMap<String, Vec<String>>,
    /// True when no record matches the bindings.
    pub no_evidence: bool,
}

fn value_counts(dataset: &Dataset, rows: &[usize], dim: usize) -> Vec<usize> {
    let mut counts = vec![0; dataset.dimensions()[dim].domain().len()];
    for &r in rows {
        counts[dataset.code(r, dim)] += 1;
    }
    counts
}

fn gap_values(dimension: &Dimension, counts: &[usize]) -> Vec<String> {
    dimension
        .domain()
        .iter()
        .zip(counts)
        .filter(|(_, &c)| c == 0)
        .map(|(v, _)| v.clone())
        .collect()
}

pub fn recommend(dataset: &Dataset, partial: &PartialAssignment) -> Recommendation {
    let rows = matches(dataset, partial);
    let total = rows.len();
    let mut recommendations = IndexMap::new();
    let mut gaps = IndexMap::new();
    for (d, dim) in dataset.dimensions().iter().enumerate() {
        if partial.is_bound(d) {
            continue;
        }
        let counts = value_counts(dataset, &rows, d);
        let mut used: Vec<(usize, usize)> = counts
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .collect();
        // stable: ties stay in domain order
        used.sort_by_key(|&(_, c)| std::cmp::Reverse(c));
        let values = used
            .into_iter()
            .map(|(v, c)| ValueConfidence {
                value: dim.domain()[v].clone(),
                confidence: 100.0 * c as f64 / total as f64,
                count: c,
            })
            .collect();
        recommendations.insert(dim.name().to_owned(), values);
        gaps.insert(dim.name().to_owned(), gap_values(dim, &counts));
    }
    Recommendation {
        match_count: total,
        recommendations,
        gaps,
        no_evidence: total == 0,
    }
}

/// Unused observed values of every unbound dimension among the matches.
pub fn gaps(dataset: &Dataset, partial: &PartialAssignment) -> IndexMap<String, Vec<String>> {
    let rows = matches(dataset, partial);
    dataset
        .dimensions()
        .iter()
        .enumerate()
        .filter(|(d, _)| !partial.is_bound(*d))
        .map(|(d, dim)| {
            let counts = value_counts(dataset, &rows, d);
            (dim.name().to_owned(), gap_values(dim, &counts))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Node {
    value: usize,
    count: usize,
    // sorted by value index
    children: Vec<usize>,
}

/// Trie over dimension values in a fixed order, with per-node match counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NavigationTree {
    dimensions: Vec<Dimension>,
    order: Vec<usize>,
    // nodes[0] is the root; its `value` is unused
    nodes: Vec<Node>,
}

/// Builds the navigation trie. `order` defaults to the dataset's column order.
pub fn build_tree(dataset: &Dataset, order: Option<&[String]>) -> Result<NavigationTree> {
    let m = dataset.width();
    let order: Vec<usize> = match order {
        None => (0..m).collect(),
        Some(names) => {
            let idx = names
                .iter()
                .map(|n| dataset.dimension_index(n))
                .collect::<Result<Vec<_>>>()?;
            let mut seen = vec![false; m];
            if idx.len() != m || idx.iter().any(|&i| std::mem::replace(&mut seen[i], true)) {
                return Err(Error::InvalidArgument(format!(
                    "tree order must list each of the {m} dimensions exactly once"
                )));
            }
            idx
        }
    };

    let mut nodes = vec![Node {
        value: 0,
        count: 0,
        children: Vec::new(),
    }];
    for row in 0..dataset.len() {
        let mut at = 0;
        nodes[0].count += 1;
        for &d in &order {
            let value = dataset.code(row, d);
            let next = match nodes[at]
                .children
                .iter()
                .find(|&&c| nodes[c].value == value)
            {
                Some(&c) => c,
                None => {
                    nodes.push(Node {
                        value,
                        count: 0,
                        children: Vec::new(),
                    });
                    let c = nodes.len() - 1;
                    nodes[at].children.push(c);
                    c
                }
            };
            nodes[next].count += 1;
            at = next;
        }
    }
    for i in 0..nodes.len() {
        let mut children = std::mem::take(&mut nodes[i].children);
        children.sort_by_key(|&c| nodes[c].value);
        nodes[i].children = children;
    }

    Ok(NavigationTree {
        dimensions: dataset.dimensions().to_vec(),
        order,
        nodes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChildView {
    pub value: String,
    pub count: usize,
    /// Percent of the parent's count.
    pub confidence: f64,
}

/// A node reached by [`NavigationTree::descend`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeView {
    pub depth: usize,
    pub path: Vec<Step>,
    pub count: usize,
    /// Dimension decided by the children; `None` at full depth.
    pub dimension: Option<String>,
    pub children: Vec<ChildView>,
    pub gaps: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Step {
    pub dimension: String,
    pub value: String,
}

/// Depth-capped nested export of a subtree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeExport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dimension: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    pub count: usize,
    /// `false` when children exist below the depth cap.
    pub expanded: bool,
    pub children: Vec<TreeExport>,
}

impl NavigationTree {
    /// Dimension names in tree order.
    pub fn order(&self) -> Vec<&str> {
        self.order
            .iter()
            .map(|&d| self.dimensions[d].name())
            .collect()
    }

    pub fn depth(&self) -> usize {
        self.order.len()
    }

    pub fn root_count(&self) -> usize {
        self.nodes[0].count
    }

    /// Follows `path` (one value per dimension in tree order). Returns
    /// `None` for the node once the path leaves the observed records.
    fn walk(&self, path: &[impl AsRef<str>]) -> Result<(Option<usize>, Vec<Step>)> {
        if path.len() > self.order.len() {
            return Err(Error::InvalidArgument(format!(
                "path has {} steps, the tree has {} levels",
                path.len(),
                self.order.len()
            )));
        }
        let mut at = Some(0);
        let mut steps = Vec::with_capacity(path.len());
        for (level, label) in path.iter().enumerate() {
            let dim = &self.dimensions[self.order[level]];
            let label = label.as_ref();
            let value = dim.position(label).ok_or_else(|| Error::UnknownValue {
                dimension: dim.name().to_owned(),
                value: label.to_owned(),
            })?;
            at = at.and_then(|node| {
                self.nodes[node]
                    .children
                    .iter()
                    .copied()
                    .find(|&c| self.nodes[c].value == value)
            });
            steps.push(Step {
                dimension: dim.name().to_owned(),
                value: label.to_owned(),
            });
        }
        Ok((at, steps))
    }

    pub fn descend(&self, path: &[impl AsRef<str>]) -> Result<NodeView> {
        let (node, path_steps) = self.walk(path)?;
        let depth = path.len();
        let count = node.map_or(0, |n| self.nodes[n].count);
        let next = self.order.get(depth).map(|&d| &self.dimensions[d]);

        let mut children = Vec::new();
        let mut gaps = Vec::new();
        if let Some(dim) = next {
            let present: Vec<usize> =
                node.map_or_else(Vec::new, |n| self.nodes[n].children.clone());
            for (v, label) in dim.domain().iter().enumerate() {
                match present.iter().find(|&&c| self.nodes[c].value == v) {
                    Some(&c) => children.push(ChildView {
                        value: label.clone(),
                        count: self.nodes[c].count,
                        confidence: 100.0 * self.nodes[c].count as f64 / count as f64,
                    }),
                    None => gaps.push(label.clone()),
                }
            }
        }
        Ok(NodeView {
            depth,
            path: path_steps,
            count,
            dimension: next.map(|d| d.name().to_owned()),
            children,
            gaps,
        })
    }

    /// Nested export of the subtree at `path`, expanded `max_depth` levels.
    pub fn export(&self, path: &[impl AsRef<str>], max_depth: usize) -> Result<TreeExport> {
        let (node, steps) = self.walk(path)?;
        let last = steps.last();
        match node {
            Some(n) => {
                Ok(self.export_node(n, last.map(|s| s.dimension.clone()), path.len(), max_depth))
            }
            None => Ok(TreeExport {
                dimension: last.map(|s| s.dimension.clone()),
                value: last.map(|s| s.value.clone()),
                count: 0,
                expanded: true,
                children: Vec::new(),
            }),
        }
    }

    fn export_node(
        &self,
        node: usize,
        dimension: Option<String>,
        depth: usize,
        remaining: usize,
    ) -> TreeExport {
        let n = &self.nodes[node];
        let value = dimension
            .as_ref()
            .map(|_| self.dimensions[self.order[depth - 1]].domain()[n.value].clone());
        let child_dim = self
            .order
            .get(depth)
            .map(|&d| self.dimensions[d].name().to_owned());
        let children = if remaining == 0 {
            Vec::new()
        } else {
            n.children
                .iter()
                .map(|&c| self.export_node(c, child_dim.clone(), depth + 1, remaining - 1))
                .collect()
        };
        TreeExport {
            dimension,
            value,
            count: n.count,
            expanded: remaining > 0 || n.children.is_empty(),
            children,
        }
    }

    /// Full-depth leaves and their counts.
    pub fn leaf_counts(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|n| n.children.is_empty())
            .map(|n| n.count)
            .collect()
    }

    /// Checks that every inner node's count equals the sum of its children.
    pub fn is_consistent(&self) -> bool {
        self.nodes.iter().all(|n| {
            n.children.is_empty()
                || n.children
                    .iter()
                    .map(|&c| self.nodes[c].count)
                    .sum::<usize>()
                    == n.count
        })
    }
}
