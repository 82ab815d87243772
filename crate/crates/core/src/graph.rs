//! Rooted social trees with topological indexing.
//!
//! Internally agents are `0..n` and the root is `n - 1`; every descendant of
//! an agent has a smaller index. Labels remember the caller's numbering.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CakeError, CakeResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GraphKind {
    #[serde(rename = "line")]
    Line,
    #[serde(rename = "tree")]
    Tree,
    #[serde(rename = "depth2")]
    Depth2Tree,
    #[serde(rename = "2star")]
    TwoStar,
    #[serde(rename = "star")]
    Star,
}

impl GraphKind {
    pub fn name(self) -> &'static str {
        match self {
            GraphKind::Line => "line",
            GraphKind::Tree => "tree",
            GraphKind::Depth2Tree => "depth2",
            GraphKind::TwoStar => "2star",
            GraphKind::Star => "star",
        }
    }
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for GraphKind {
    type Err = CakeError;

    fn from_str(s: &str) -> CakeResult<Self> {
        match s {
            "line" => Ok(GraphKind::Line),
            "tree" => Ok(GraphKind::Tree),
            "depth2" => Ok(GraphKind::Depth2Tree),
            "2star" => Ok(GraphKind::TwoStar),
            "star" => Ok(GraphKind::Star),
            other => Err(CakeError::InvalidGraph(format!("unknown kind {other:?}"))),
        }
    }
}

/// A broken structural requirement, naming the offending agent (0-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub agent: usize,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "agent {}: {}", self.agent + 1, self.message)
    }
}

/// Checks a raw parent array (0-based, `None` for the root) exactly as
/// given: single root at the last index, acyclic, parents above children,
/// plus the shape rules of `kind`.
pub fn topological_check(kind: GraphKind, parent: &[Option<usize>]) -> Vec<Violation> {
    let n = parent.len();
    let mut out = Vec::new();
    let v = |agent: usize, message: &str| Violation {
        agent,
        message: message.to_string(),
    };
    if n == 0 {
        out.push(v(0, "empty graph"));
        return out;
    }
    for (j, p) in parent.iter().enumerate() {
        match p {
            None if j != n - 1 => out.push(v(j, "root must be the highest index")),
            Some(_) if j == n - 1 => out.push(v(j, "highest index must be the root")),
            Some(p) if *p >= n => out.push(v(j, "parent out of range")),
            Some(p) if *p <= j => out.push(v(j, "descendant index ≥ ancestor")),
            _ => {}
        }
    }
    if !out.is_empty() {
        return out;
    }
    let depth = depths(parent);
    let mut child_count = vec![0usize; n];
    for p in parent.iter().flatten() {
        child_count[*p] += 1;
    }
    for j in 0..n - 1 {
        let ok = match kind {
            GraphKind::Line => parent[j] == Some(j + 1),
            GraphKind::Tree => true,
            GraphKind::Depth2Tree => depth[j] <= 2,
            GraphKind::TwoStar => depth[j] <= 2 && child_count[j] <= 1,
            GraphKind::Star => depth[j] == 1,
        };
        if !ok {
            out.push(v(j, &format!("violates {kind} shape")));
        }
    }
    out
}

/// Depths for a parent array known to point strictly upward.
fn depths(parent: &[Option<usize>]) -> Vec<usize> {
    let n = parent.len();
    let mut depth = vec![0usize; n];
    for j in (0..n).rev() {
        if let Some(p) = parent[j] {
            depth[j] = depth[p] + 1;
        }
    }
    depth
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SocialGraph {
    kind: GraphKind,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    descendants: Vec<Vec<usize>>,
    depth: Vec<usize>,
    /// `labels[i]` is the caller's 0-based label of internal agent `i`.
    labels: Vec<usize>,
}

impl SocialGraph {
    /// Builds a graph from 0-based parent labels. A labeling that is already
    /// topological is kept; otherwise agents are renumbered by DFS
    /// post-order from the root, visiting children in ascending label order.
    pub fn new(kind: GraphKind, parent: Vec<Option<usize>>) -> CakeResult<Self> {
        let n = parent.len();
        if n == 0 {
            return Err(CakeError::InvalidGraph("no agents".into()));
        }
        let roots: Vec<usize> = (0..n).filter(|&j| parent[j].is_none()).collect();
        if roots.len() != 1 {
            return Err(CakeError::InvalidGraph(format!(
                "expected one root, found {}",
                roots.len()
            )));
        }
        if let Some(j) = (0..n).find(|&j| matches!(parent[j], Some(p) if p >= n || p == j)) {
            return Err(CakeError::InvalidGraph(format!(
                "agent {} has an invalid parent",
                j + 1
            )));
        }
        let root = roots[0];
        let mut kids = vec![Vec::new(); n];
        for (j, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                kids[*p].push(j);
            }
        }
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![(root, 0usize)];
        while let Some((node, next)) = stack.pop() {
            if next < kids[node].len() {
                stack.push((node, next + 1));
                stack.push((kids[node][next], 0));
            } else {
                order.push(node);
            }
        }
        if order.len() != n {
            return Err(CakeError::InvalidGraph("parent relation has a cycle".into()));
        }
        let already = topological_check(GraphKind::Tree, &parent).is_empty();
        let labels: Vec<usize> = if already { (0..n).collect() } else { order };
        let mut position = vec![0usize; n];
        for (i, &l) in labels.iter().enumerate() {
            position[l] = i;
        }
        let internal: Vec<Option<usize>> = labels
            .iter()
            .map(|&l| parent[l].map(|p| position[p]))
            .collect();
        let g = SocialGraph::from_topological(kind, internal, labels);
        let problems = topological_check(kind, &g.parent);
        if let Some(first) = problems.first() {
            return Err(CakeError::InvalidGraph(first.to_string()));
        }
        Ok(g)
    }

    fn from_topological(kind: GraphKind, parent: Vec<Option<usize>>, labels: Vec<usize>) -> Self {
        let n = parent.len();
        let mut children = vec![Vec::new(); n];
        for (j, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(j);
            }
        }
        let mut descendants: Vec<Vec<usize>> = vec![Vec::new(); n];
        for j in 0..n {
            let mut d = vec![j];
            for &c in &children[j] {
                d.extend_from_slice(&descendants[c]);
            }
            d.sort_unstable();
            descendants[j] = d;
        }
        let depth = depths(&parent);
        SocialGraph {
            kind,
            parent,
            children,
            descendants,
            depth,
            labels,
        }
    }

    pub fn line(n: usize) -> Self {
        let parent = (0..n).map(|j| (j + 1 < n).then_some(j + 1)).collect();
        SocialGraph::from_topological(GraphKind::Line, parent, (0..n).collect())
    }

    /// Root `n-1` with every other agent as a leaf child.
    pub fn star(n: usize) -> Self {
        let parent = (0..n).map(|j| (j + 1 < n).then_some(n - 1)).collect();
        SocialGraph::from_topological(GraphKind::Star, parent, (0..n).collect())
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    /// The same tree, relabelled as a different kind if its shape allows.
    pub fn with_kind(&self, kind: GraphKind) -> CakeResult<Self> {
        if let Some(first) = topological_check(kind, &self.parent).first() {
            return Err(CakeError::InvalidGraph(first.to_string()));
        }
        let mut g = self.clone();
        g.kind = kind;
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> usize {
        self.n() - 1
    }

    pub fn parent(&self, j: usize) -> Option<usize> {
        self.parent[j]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn children(&self, j: usize) -> &[usize] {
        &self.children[j]
    }

    /// `D_j`: `j` and all its descendants, ascending.
    pub fn descendants(&self, j: usize) -> &[usize] {
        &self.descendants[j]
    }

    pub fn depth(&self, j: usize) -> usize {
        self.depth[j]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Parent labels in the caller's numbering, for serialization.
    pub fn labelled_parents(&self) -> Vec<Option<usize>> {
        let n = self.n();
        let mut out = vec![None; n];
        for i in 0..n {
            out[self.labels[i]] = self.parent[i].map(|p| self.labels[p]);
        }
        out
    }

    pub fn neighbors(&self, j: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.children[j].clone();
        out.extend(self.parent[j]);
        out.sort_unstable();
        out
    }

    /// Undirected edges `(child, parent)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parent
            .iter()
            .enumerate()
            .filter_map(|(j, p)| p.map(|p| (j, p)))
    }

    pub fn check(&self) -> Vec<Violation> {
        topological_check(self.kind, &self.parent)
    }

    pub fn storage(&self, threshold: usize) -> StorageView {
        StorageView::new(self, threshold)
    }
}

/// Index sets relative to an activity threshold `m`: agent `j` (0-based) is
/// active iff `j ≥ m`, so `m` plays the role of the 1-based index `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StorageView {
    threshold: usize,
    inchild: Vec<Vec<usize>>,
    inact: Vec<Vec<usize>>,
}

impl StorageView {
    pub fn new(g: &SocialGraph, threshold: usize) -> Self {
        let n = g.n();
        let mut inchild = vec![Vec::new(); n];
        let mut inact = vec![Vec::new(); n];
        for j in 0..n {
            inchild[j] = g.children(j).iter().copied().filter(|&c| c < threshold).collect();
            let mut set = vec![j];
            for &c in &inchild[j] {
                set.extend_from_slice(g.descendants(c));
            }
            set.sort_unstable();
            inact[j] = set;
        }
        StorageView {
            threshold,
            inchild,
            inact,
        }
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    pub fn is_active(&self, j: usize) -> bool {
        j >= self.threshold
    }

    pub fn inchild(&self, j: usize) -> &[usize] {
        &self.inchild[j]
    }

    pub fn inact(&self, j: usize) -> &[usize] {
        &self.inact[j]
    }

    /// Bundle indices held in the storage of `j`: `Inact` for active
    /// agents, nothing for inactive ones.
    pub fn storage(&self, j: usize) -> &[usize] {
        if self.is_active(j) {
            &self.inact[j]
        } else {
            &[]
        }
    }

    /// True when the storage sets of all agents partition `0..n`.
    pub fn is_partition(&self) -> bool {
        let n = self.inact.len();
        let mut seen = vec![false; n];
        for j in 0..n {
            for &i in self.storage(j) {
                if seen[i] {
                    return false;
                }
                seen[i] = true;
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// `Inact(k-1, a_j) ⊆ Inact(k, a_j)` for thresholds `m - 1` and `m`.
pub fn monotone_inact_check(g: &SocialGraph, j: usize, threshold: usize) -> bool {
    if threshold == 0 {
        return true;
    }
    let before: BTreeSet<usize> = g.storage(threshold - 1).inact(j).iter().copied().collect();
    let after: BTreeSet<usize> = g.storage(threshold).inact(j).iter().copied().collect();
    before.is_subset(&after)
}

#[derive(Serialize, Deserialize)]
pub(crate) struct GraphJson {
    pub kind: GraphKind,
    /// 1-based parent labels, `null` for the root.
    pub parent: Vec<Option<usize>>,
}

impl Serialize for SocialGraph {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        GraphJson {
            kind: self.kind,
            parent: self
                .labelled_parents()
                .into_iter()
                .map(|p| p.map(|p| p + 1))
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SocialGraph {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = GraphJson::deserialize(deserializer)?;
        let mut parent = Vec::with_capacity(raw.parent.len());
        for p in raw.parent {
            parent.push(match p {
                Some(0) => return Err(serde::de::Error::custom("parent labels are 1-based")),
                Some(p) => Some(p - 1),
                None => None,
            });
        }
        SocialGraph::new(raw.kind, parent).map_err(serde::de::Error::custom)
    }
}
