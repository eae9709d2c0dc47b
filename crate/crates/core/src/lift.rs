//! Partial enumeration: lifting a high-order energy onto overlapping patches.
//!
//! Every patch becomes a super node whose labels enumerate the joint states of its
//! variables. High-order factors fold into super-node unaries, and overlapping
//! super nodes are tied by hard consistency edges (cost 0 when the two labels
//! agree on the shared variables, `INF` otherwise).

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::energy::{self, FactorGraph, Labeling, INF};
use crate::error::{Error, Result};

/// Largest label set a single super node may enumerate.
pub const MAX_NODE_LABELS: u128 = 1 << 24;

/// Placement of sliding square patches on a row-major pixel grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridGeometry {
    pub width: usize,
    pub height: usize,
    pub side: usize,
    pub stride: usize,
}

impl GridGeometry {
    /// Patch positions along x and y.
    pub fn patch_dims(&self) -> (usize, usize) {
        (
            (self.width - self.side) / self.stride + 1,
            (self.height - self.side) / self.stride + 1,
        )
    }
}

/// A set of patches (sorted variable-index sets) over the base variables.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchCover {
    patches: Vec<Vec<usize>>,
    grid: Option<GridGeometry>,
}

impl PatchCover {
    pub fn new(patches: Vec<Vec<usize>>) -> Result<Self> {
        for (k, p) in patches.iter().enumerate() {
            if p.is_empty() {
                return Err(Error::input(format!("patch {k} is empty")));
            }
            if p.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::input(format!(
                    "patch {k} is not sorted and duplicate-free: {p:?}"
                )));
            }
        }
        Ok(PatchCover {
            patches,
            grid: None,
        })
    }

    /// Sliding `side`×`side` patches with stride 1, in row-major order of their
    /// top-left pixel. Pixel `(r, c)` is variable `r * width + c`.
    pub fn sliding_grid(width: usize, height: usize, side: usize) -> Result<Self> {
        if side == 0 || width < side || height < side {
            return Err(Error::input(format!(
                "cannot place {side}x{side} patches on a {width}x{height} grid"
            )));
        }
        let geom = GridGeometry {
            width,
            height,
            side,
            stride: 1,
        };
        let (px, py) = geom.patch_dims();
        let mut patches = Vec::with_capacity(px * py);
        for pr in 0..py {
            for pc in 0..px {
                let mut p = Vec::with_capacity(side * side);
                for r in pr..pr + side {
                    for c in pc..pc + side {
                        p.push(r * width + c);
                    }
                }
                patches.push(p);
            }
        }
        Ok(PatchCover {
            patches,
            grid: Some(geom),
        })
    }

    pub fn patches(&self) -> &[Vec<usize>] {
        &self.patches
    }

    pub fn grid(&self) -> Option<GridGeometry> {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    fn max_var(&self) -> Option<usize> {
        self.patches.iter().filter_map(|p| p.last().copied()).max()
    }

    /// For each variable, the patches containing it (ascending).
    pub fn memberships(&self, num_vars: usize) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); num_vars];
        for (k, p) in self.patches.iter().enumerate() {
            for &i in p {
                if i < num_vars {
                    m[i].push(k);
                }
            }
        }
        m
    }

    /// First patch containing every variable of `scope`.
    pub fn first_covering(&self, scope: &[usize], memberships: &[Vec<usize>]) -> Option<usize> {
        let first = *scope.first()?;
        memberships
            .get(first)?
            .iter()
            .copied()
            .find(|&k| is_subset(scope, &self.patches[k]))
    }
}

fn is_subset(small: &[usize], big: &[usize]) -> bool {
    small.iter().all(|v| big.binary_search(v).is_ok())
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// All joint states of a patch in ascending mixed-radix order, optionally filtered.
///
/// Fails with a model error if the filter rejects every state.
pub fn enumerate_patch_labels(
    radices: &[usize],
    filter: Option<&dyn Fn(&[usize]) -> bool>,
) -> Result<Vec<u64>> {
    let total = energy::state_count(radices);
    if total > MAX_NODE_LABELS {
        return Err(Error::Capacity {
            what: format!("patch label enumeration over {} variables", radices.len()),
            needed: total,
            cap: MAX_NODE_LABELS,
        });
    }
    let labels: Vec<u64> = match filter {
        None => (0..total as u64).collect(),
        Some(keep) => {
            let mut local = vec![0; radices.len()];
            (0..total as u64)
                .filter(|&code| {
                    energy::decode_into(code, radices, &mut local);
                    keep(&local)
                })
                .collect()
        }
    };
    if labels.is_empty() {
        return Err(Error::Infeasible(
            "patch label filter leaves no admissible state".into(),
        ));
    }
    Ok(labels)
}

/// One patch of the lifted graph.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperNode {
    pub scope: Vec<usize>,
    /// Base-variable radices for `scope`.
    pub radices: Vec<usize>,
    /// Admissible joint states as ascending mixed-radix codes over `scope`.
    pub labels: Vec<u64>,
    pub unary: Vec<f64>,
}

impl SuperNode {
    pub fn label_count(&self) -> usize {
        self.labels.len()
    }

    /// Index of the label whose code is `code`, if admissible.
    pub fn index_of(&self, code: u64) -> Option<usize> {
        self.labels.binary_search(&code).ok()
    }

    /// Per-variable values of label `idx`, in scope order.
    pub fn assignment(&self, idx: usize) -> Vec<usize> {
        energy::decode(self.labels[idx], &self.radices)
    }
}

/// Hard agreement constraint between two overlapping super nodes.
///
/// Labels of both endpoints are partitioned into groups by their restriction to
/// the overlap. Group ids are shared: labels `x_a` and `x_b` agree on the overlap
/// iff `groups_a[x_a] == groups_b[x_b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyEdge {
    pub a: usize,
    pub b: usize,
    pub overlap: Vec<usize>,
    pub groups_a: Vec<u32>,
    pub groups_b: Vec<u32>,
    pub group_count: usize,
}

impl ConsistencyEdge {
    fn build(a: usize, na: &SuperNode, b: usize, nb: &SuperNode) -> Result<Self> {
        let overlap = intersect(&na.scope, &nb.scope);
        if overlap.is_empty() || a == b {
            return Err(Error::input(format!(
                "edge ({a}, {b}) joins nodes without a shared variable"
            )));
        }
        let keys_a = overlap_keys(na, &overlap);
        let keys_b = overlap_keys(nb, &overlap);
        let mut all: Vec<u64> = keys_a.iter().chain(&keys_b).copied().collect();
        all.sort_unstable();
        all.dedup();
        let id: HashMap<u64, u32> = all
            .iter()
            .enumerate()
            .map(|(g, &k)| (k, g as u32))
            .collect();
        Ok(ConsistencyEdge {
            a,
            b,
            groups_a: keys_a.iter().map(|k| id[k]).collect(),
            groups_b: keys_b.iter().map(|k| id[k]).collect(),
            group_count: all.len(),
            overlap,
        })
    }

    /// True when the two labels agree on the overlap.
    pub fn consistent(&self, xa: usize, xb: usize) -> bool {
        self.groups_a[xa] == self.groups_b[xb]
    }
}

/// Mixed-radix code of each label's restriction to `overlap`.
fn overlap_keys(node: &SuperNode, overlap: &[usize]) -> Vec<u64> {
    let pos: Vec<usize> = overlap
        .iter()
        .map(|v| node.scope.binary_search(v).expect("overlap inside scope"))
        .collect();
    let radices: Vec<usize> = pos.iter().map(|&p| node.radices[p]).collect();
    let mut local = vec![0; node.scope.len()];
    let mut sub = vec![0; pos.len()];
    node.labels
        .iter()
        .map(|&code| {
            energy::decode_into(code, &node.radices, &mut local);
            for (s, &p) in sub.iter_mut().zip(&pos) {
                *s = local[p];
            }
            energy::encode(&sub, &radices)
        })
        .collect()
}

/// A labeling of the super nodes: one admissible-label index per node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SuperLabeling(pub Vec<usize>);

impl std::ops::Deref for SuperLabeling {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

/// Pairwise uCSP: super nodes with unary costs and hard consistency edges.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperGraph {
    label_counts: Vec<usize>,
    nodes: Vec<SuperNode>,
    edges: Vec<ConsistencyEdge>,
    membership: Vec<u32>,
    grid: Option<GridGeometry>,
}

impl SuperGraph {
    /// Assembles a graph from prepared nodes and edge endpoint pairs.
    pub fn from_parts(
        label_counts: Vec<usize>,
        nodes: Vec<SuperNode>,
        edge_pairs: &[(usize, usize)],
    ) -> Result<Self> {
        let mut membership = vec![0u32; label_counts.len()];
        for (k, n) in nodes.iter().enumerate() {
            if n.unary.len() != n.labels.len() {
                return Err(Error::input(format!(
                    "node {k} has {} labels but {} unary entries",
                    n.labels.len(),
                    n.unary.len()
                )));
            }
            if n.labels.is_empty() {
                return Err(Error::Infeasible(format!("node {k} has no labels")));
            }
            if n.radices.len() != n.scope.len() {
                return Err(Error::input(format!("node {k} radices do not match scope")));
            }
            for &i in &n.scope {
                let slot = membership.get_mut(i).ok_or_else(|| {
                    Error::input(format!("node {k} references unknown variable {i}"))
                })?;
                *slot += 1;
            }
        }
        let edges = edge_pairs
            .iter()
            .map(|&(a, b)| {
                let (a, b) = (a.min(b), a.max(b));
                if b >= nodes.len() {
                    return Err(Error::input(format!("edge ({a}, {b}) out of range")));
                }
                ConsistencyEdge::build(a, &nodes[a], b, &nodes[b])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SuperGraph {
            label_counts,
            nodes,
            edges,
            membership,
            grid: None,
        })
    }

    pub(crate) fn with_grid(mut self, grid: Option<GridGeometry>) -> Self {
        self.grid = grid;
        self
    }

    pub fn nodes(&self) -> &[SuperNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[ConsistencyEdge] {
        &self.edges
    }

    /// Radices of the base variables.
    pub fn base_label_counts(&self) -> &[usize] {
        &self.label_counts
    }

    pub fn num_base_vars(&self) -> usize {
        self.label_counts.len()
    }

    /// Number of patches containing each base variable.
    pub fn membership(&self) -> &[u32] {
        &self.membership
    }

    pub fn grid(&self) -> Option<GridGeometry> {
        self.grid
    }

    pub fn total_labels(&self) -> usize {
        self.nodes.iter().map(|n| n.labels.len()).sum()
    }

    fn check(&self, x: &SuperLabeling) {
        assert_eq!(x.len(), self.nodes.len(), "super labeling length mismatch");
        for (k, (&l, n)) in x.iter().zip(&self.nodes).enumerate() {
            assert!(l < n.labels.len(), "node {k} label {l} out of range");
        }
    }

    /// Base labeling from a super labeling.
    ///
    /// Each variable takes its value from the lowest-indexed patch containing it;
    /// the flag reports whether every containing patch agrees. Variables covered by
    /// no patch get label 0.
    pub fn decode(&self, x: &SuperLabeling) -> (Labeling, bool) {
        self.check(x);
        let mut out = vec![usize::MAX; self.label_counts.len()];
        let mut consistent = true;
        let mut local = Vec::new();
        for (n, &l) in self.nodes.iter().zip(x.iter()) {
            local.resize(n.scope.len(), 0);
            energy::decode_into(n.labels[l], &n.radices, &mut local);
            for (&v, &val) in n.scope.iter().zip(&local) {
                if out[v] == usize::MAX {
                    out[v] = val;
                } else if out[v] != val {
                    consistent = false;
                }
            }
        }
        for v in out.iter_mut().filter(|v| **v == usize::MAX) {
            *v = 0;
        }
        (Labeling(out), consistent)
    }

    /// Unary sum plus consistency penalties (0 or `INF`).
    pub fn super_energy(&self, x: &SuperLabeling) -> f64 {
        self.check(x);
        if self
            .edges
            .iter()
            .any(|e| !e.consistent(x[e.a], x[e.b]))
        {
            return INF;
        }
        self.unary_sum(x)
    }

    /// Sum of node unaries, ignoring consistency.
    pub fn unary_sum(&self, x: &SuperLabeling) -> f64 {
        self.nodes
            .iter()
            .zip(x.iter())
            .map(|(n, &l)| n.unary[l])
            .sum()
    }

    /// Super labeling induced by a base labeling, if every restriction is admissible.
    pub fn lift(&self, x: &[usize]) -> Option<SuperLabeling> {
        assert_eq!(x.len(), self.label_counts.len(), "base labeling length mismatch");
        self.nodes
            .iter()
            .map(|n| {
                let local = energy::restrict(x, &n.scope);
                n.index_of(energy::encode(&local, &n.radices))
            })
            .collect::<Option<Vec<_>>>()
            .map(SuperLabeling)
    }

    /// Removes labels with infinite unary cost, then iteratively deletes labels whose
    /// overlap group has no surviving counterpart across some edge.
    ///
    /// Returns the pruned graph and, per node, the original indices of the kept
    /// labels. Deleted labels cannot appear in any finite-energy labeling.
    pub fn arc_consistent(&self) -> Result<(SuperGraph, Vec<Vec<usize>>)> {
        let mut alive: Vec<Vec<bool>> = self
            .nodes
            .iter()
            .map(|n| n.unary.iter().map(|&u| u < INF).collect())
            .collect();
        let mut incident = vec![Vec::new(); self.nodes.len()];
        for (k, e) in self.edges.iter().enumerate() {
            incident[e.a].push(k);
            incident[e.b].push(k);
        }
        let mut queue: VecDeque<usize> = (0..self.edges.len()).collect();
        let mut queued = vec![true; self.edges.len()];
        let mut seen = Vec::new();
        while let Some(k) = queue.pop_front() {
            queued[k] = false;
            let e = &self.edges[k];
            seen.clear();
            seen.resize(e.group_count, [false; 2]);
            for (l, &g) in e.groups_a.iter().enumerate() {
                seen[g as usize][0] |= alive[e.a][l];
            }
            for (l, &g) in e.groups_b.iter().enumerate() {
                seen[g as usize][1] |= alive[e.b][l];
            }
            for (node, groups, other) in [(e.a, &e.groups_a, 1), (e.b, &e.groups_b, 0)] {
                let mut changed = false;
                for (l, &g) in groups.iter().enumerate() {
                    if alive[node][l] && !seen[g as usize][other] {
                        alive[node][l] = false;
                        changed = true;
                    }
                }
                if changed {
                    if !alive[node].iter().any(|&a| a) {
                        return Err(Error::Infeasible(format!(
                            "node {node} has no label consistent with its neighbours"
                        )));
                    }
                    for &k2 in &incident[node] {
                        if !queued[k2] {
                            queued[k2] = true;
                            queue.push_back(k2);
                        }
                    }
                }
            }
        }
        if let Some(k) = alive.iter().position(|a| !a.iter().any(|&v| v)) {
            return Err(Error::Infeasible(format!(
                "node {k} has only infinite-cost labels"
            )));
        }
        let kept: Vec<Vec<usize>> = alive
            .iter()
            .map(|a| (0..a.len()).filter(|&l| a[l]).collect())
            .collect();
        let nodes = self
            .nodes
            .iter()
            .zip(&kept)
            .map(|(n, keep)| SuperNode {
                scope: n.scope.clone(),
                radices: n.radices.clone(),
                labels: keep.iter().map(|&l| n.labels[l]).collect(),
                unary: keep.iter().map(|&l| n.unary[l]).collect(),
            })
            .collect();
        let edges = self
            .edges
            .iter()
            .map(|e| ConsistencyEdge {
                a: e.a,
                b: e.b,
                overlap: e.overlap.clone(),
                groups_a: kept[e.a].iter().map(|&l| e.groups_a[l]).collect(),
                groups_b: kept[e.b].iter().map(|&l| e.groups_b[l]).collect(),
                group_count: e.group_count,
            })
            .collect();
        let pruned = SuperGraph {
            label_counts: self.label_counts.clone(),
            nodes,
            edges,
            membership: self.membership.clone(),
            grid: self.grid,
        };
        Ok((pruned, kept))
    }
}

/// Lifts `graph` onto `cover`.
///
/// Single-variable factors are split evenly over every patch containing the
/// variable (weight `1/k`); every other factor goes wholly to the first patch
/// covering its scope. Patches enumerate all joint states.
pub fn build_super_graph(graph: &FactorGraph, cover: &PatchCover) -> Result<SuperGraph> {
    let n = graph.num_vars();
    if let Some(m) = cover.max_var() {
        if m >= n {
            return Err(Error::input(format!(
                "cover references variable {m} but the graph has {n} variables"
            )));
        }
    }
    let memberships = cover.memberships(n);
    let mut assigned: Vec<Vec<(usize, f64)>> = vec![Vec::new(); cover.len()];
    for (fi, f) in graph.factors().iter().enumerate() {
        let scope = f.scope();
        if scope.len() == 1 {
            let holders = &memberships[scope[0]];
            if holders.is_empty() {
                return Err(Error::Cover {
                    factor: fi,
                    scope: scope.to_vec(),
                });
            }
            let w = 1.0 / holders.len() as f64;
            for &p in holders {
                assigned[p].push((fi, w));
            }
        } else {
            let p = cover
                .first_covering(scope, &memberships)
                .ok_or_else(|| Error::Cover {
                    factor: fi,
                    scope: scope.to_vec(),
                })?;
            assigned[p].push((fi, 1.0));
        }
    }

    let mut nodes = Vec::with_capacity(cover.len());
    for (p, scope) in cover.patches().iter().enumerate() {
        let radices = graph.radices(scope);
        let labels = enumerate_patch_labels(&radices, None)?;
        let mut unary = vec![0.0; labels.len()];
        let mut local = vec![0; scope.len()];
        for &(fi, w) in &assigned[p] {
            let f = &graph.factors()[fi];
            let pos: Vec<usize> = f
                .scope()
                .iter()
                .map(|v| scope.binary_search(v).expect("factor inside patch"))
                .collect();
            let frad = graph.radices(f.scope());
            for (u, &code) in unary.iter_mut().zip(&labels) {
                energy::decode_into(code, &radices, &mut local);
                let idx = pos
                    .iter()
                    .zip(&frad)
                    .fold(0usize, |acc, (&q, &r)| acc * r + local[q]);
                let c = f.table()[idx];
                *u += if c == INF { INF } else { w * c };
            }
        }
        nodes.push(SuperNode {
            scope: scope.clone(),
            radices,
            labels,
            unary,
        });
    }
    let edges = select_consistency_edges(cover);
    Ok(SuperGraph::from_parts(graph.label_counts().to_vec(), nodes, &edges)?.with_grid(cover.grid()))
}

/// Consistency edges sufficient for agreement on every shared variable.
///
/// Stride-1 sliding grid covers get the 4-connected patch lattice. Other covers
/// start from all intersecting pairs and drop, in order of increasing overlap
/// size, each edge whose removal keeps [`verify_edge_sufficiency`] true.
pub fn select_consistency_edges(cover: &PatchCover) -> Vec<(usize, usize)> {
    if let Some(g) = cover.grid().filter(|g| g.stride == 1 && g.side >= 2) {
        let (px, py) = g.patch_dims();
        let mut edges = Vec::new();
        for pr in 0..py {
            for pc in 0..px {
                let k = pr * px + pc;
                if pc + 1 < px {
                    edges.push((k, k + 1));
                }
                if pr + 1 < py {
                    edges.push((k, k + px));
                }
            }
        }
        return edges;
    }

    let pairs = intersecting_pairs(cover);
    let mut ordered: Vec<(usize, usize, usize)> = pairs
        .iter()
        .map(|&(a, b)| (intersect(&cover.patches[a], &cover.patches[b]).len(), a, b))
        .collect();
    ordered.sort_unstable();
    let overlaps = distinct_overlaps(cover, &pairs);
    let mut live: BTreeSet<(usize, usize)> = pairs.iter().copied().collect();
    for (_, a, b) in ordered {
        live.remove(&(a, b));
        let shared = intersect(&cover.patches[a], &cover.patches[b]);
        let still_ok = overlaps
            .iter()
            .filter(|g| is_subset(g, &shared))
            .all(|g| overlap_connected(cover, &live, g));
        if !still_ok {
            live.insert((a, b));
        }
    }
    live.into_iter().collect()
}

fn intersecting_pairs(cover: &PatchCover) -> Vec<(usize, usize)> {
    let n = cover.max_var().map_or(0, |m| m + 1);
    let memberships = cover.memberships(n);
    let mut set = BTreeSet::new();
    for holders in &memberships {
        for (i, &a) in holders.iter().enumerate() {
            for &b in &holders[i + 1..] {
                set.insert((a, b));
            }
        }
    }
    set.into_iter().collect()
}

fn distinct_overlaps(cover: &PatchCover, pairs: &[(usize, usize)]) -> Vec<Vec<usize>> {
    pairs
        .iter()
        .map(|&(a, b)| intersect(&cover.patches[a], &cover.patches[b]))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Whether the nodes containing `gamma` form a connected subgraph under `edges`.
fn overlap_connected(cover: &PatchCover, edges: &BTreeSet<(usize, usize)>, gamma: &[usize]) -> bool {
    let holders: Vec<usize> = (0..cover.len())
        .filter(|&k| is_subset(gamma, &cover.patches[k]))
        .collect();
    if holders.len() <= 1 {
        return true;
    }
    let index: HashMap<usize, usize> = holders.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let mut parent: Vec<usize> = (0..holders.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut components = holders.len();
    for &(a, b) in edges {
        if let (Some(&ia), Some(&ib)) = (index.get(&a), index.get(&b)) {
            let (ra, rb) = (find(&mut parent, ia), find(&mut parent, ib));
            if ra != rb {
                parent[ra] = rb;
                components -= 1;
            }
        }
    }
    components == 1
}

/// True iff for every pair of patches with non-empty overlap `g`, the patches
/// containing `g` induce a connected subgraph of `edges`.
pub fn verify_edge_sufficiency(cover: &PatchCover, edges: &[(usize, usize)]) -> bool {
    let live: BTreeSet<(usize, usize)> = edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    let pairs = intersecting_pairs(cover);
    distinct_overlaps(cover, &pairs)
        .iter()
        .all(|g| overlap_connected(cover, &live, g))
}
