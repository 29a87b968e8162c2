//! Laying a graph's edges out along a path, and how many connected pieces a
//! path segment turns into when mapped back.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::One;
use rayon::prelude::*;
use serde::Serialize;

use crate::balance::identical_two_eps;
use crate::error::{ensure, Error, Result};
use crate::fixtures::path_graph;
use crate::general::{iterative_divide, ThresholdSchedule};
use crate::model::{components, Allocation, EdgeId, EdgeInterval, Graph, Instance, Share, VertexId};
use crate::query::Oracle;
use crate::rational::{ceil_half, q, qi, Q};

/// Edge `order[k]` occupies `[k, k+1]` on the path. When `right_is_hi[k]` holds,
/// the edge's second endpoint sits at `k+1`; otherwise the first one does.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeBijection {
    pub order: Vec<EdgeId>,
    pub right_is_hi: Vec<bool>,
}

impl EdgeBijection {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Graph interval for local span `[a, b]` of slot `k`.
    pub fn to_edge(&self, k: usize, a: &Q, b: &Q) -> EdgeInterval {
        let (lo, hi) = if self.right_is_hi[k] {
            (a.clone(), b.clone())
        } else {
            (Q::one() - b, Q::one() - a)
        };
        EdgeInterval {
            edge: self.order[k],
            lo,
            hi,
        }
    }

    fn is_bijective(&self, graph: &Graph) -> bool {
        let seen: BTreeSet<EdgeId> = self.order.iter().copied().collect();
        seen.len() == graph.edge_count() && self.order.len() == graph.edge_count() && self.right_is_hi.len() == self.order.len()
    }
}

/// Depth-first layout over `tree_edges`, visiting real children in ascending
/// vertex order and then the pendant edges hung at each vertex.
fn dfs_layout(
    graph: &Graph,
    root: VertexId,
    tree_edges: &BTreeSet<EdgeId>,
    pendants: &BTreeMap<VertexId, Vec<EdgeId>>,
) -> EdgeBijection {
    let mut order = Vec::new();
    let mut right_is_hi = Vec::new();
    let mut visited = vec![false; graph.vertex_count()];
    let mut stack: Vec<(VertexId, usize)> = vec![(root, 0)];
    visited[root.0] = true;
    let children_of = |u: VertexId, visited: &[bool]| -> Vec<(VertexId, EdgeId)> {
        let mut out: Vec<(VertexId, EdgeId)> = graph
            .incident(u)
            .iter()
            .filter(|e| tree_edges.contains(e))
            .map(|&e| (graph.other_end(e, u), e))
            .filter(|(w, _)| !visited[w.0])
            .collect();
        out.sort();
        out
    };
    fn push(order: &mut Vec<EdgeId>, right: &mut Vec<bool>, graph: &Graph, e: EdgeId, far: VertexId) {
        order.push(e);
        right.push(graph.endpoints(e).1 == far);
    }
    // Iterative DFS: each frame remembers how many children it has expanded.
    let mut frames: Vec<Vec<(VertexId, EdgeId)>> = vec![children_of(root, &visited)];
    while let Some((u, next)) = stack.last().copied() {
        let depth = stack.len() - 1;
        if next < frames[depth].len() {
            stack.last_mut().unwrap().1 += 1;
            let (w, e) = frames[depth][next];
            if visited[w.0] {
                continue;
            }
            visited[w.0] = true;
            push(&mut order, &mut right_is_hi, graph, e, w);
            stack.push((w, 0));
            frames.push(children_of(w, &visited));
        } else {
            for &e in pendants.get(&u).map(Vec::as_slice).unwrap_or(&[]) {
                push(&mut order, &mut right_is_hi, graph, e, graph.other_end(e, u));
            }
            stack.pop();
            frames.pop();
        }
    }
    EdgeBijection { order, right_is_hi }
}

/// DFS layout of a tree with each edge's far end from `root` on the right.
pub fn tree_dfs_bijection(graph: &Graph, root: VertexId) -> Result<EdgeBijection> {
    if !graph.is_tree() {
        return Err(Error::NotATree);
    }
    if root.0 >= graph.vertex_count() {
        return Err(Error::UnknownVertex(root.0.to_string()));
    }
    let all: BTreeSet<EdgeId> = graph.edge_ids().collect();
    Ok(dfs_layout(graph, root, &all, &BTreeMap::new()))
}

/// Distances inside the subgraph formed by `edges`.
fn tree_distances(graph: &Graph, edges: &BTreeSet<EdgeId>, source: VertexId) -> Vec<usize> {
    let mut dist = vec![usize::MAX; graph.vertex_count()];
    dist[source.0] = 0;
    let mut queue = std::collections::VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        for &e in graph.incident(v) {
            if !edges.contains(&e) {
                continue;
            }
            let w = graph.other_end(e, v);
            if dist[w.0] == usize::MAX {
                dist[w.0] = dist[v.0] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

fn eccentricities(graph: &Graph, edges: &BTreeSet<EdgeId>) -> Vec<usize> {
    graph
        .vertex_ids()
        .map(|v| tree_distances(graph, edges, v).into_iter().max().unwrap_or(0))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpanningTree {
    pub edges: BTreeSet<EdgeId>,
    pub root: VertexId,
    pub diameter: usize,
    pub height: usize,
    /// Whether the diameter was minimized by enumerating every spanning tree.
    pub exhaustive: bool,
}

/// Every spanning tree of a graph, as sorted edge lists.
pub fn all_spanning_trees(graph: &Graph) -> Vec<Vec<EdgeId>> {
    fn find(parent: &[usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        r
    }
    fn walk(
        graph: &Graph,
        next: usize,
        chosen: &mut Vec<EdgeId>,
        parent: &mut Vec<usize>,
        out: &mut Vec<Vec<EdgeId>>,
    ) {
        let need = graph.vertex_count() - 1;
        if chosen.len() == need {
            out.push(chosen.clone());
            return;
        }
        let m = graph.edge_count();
        if m - next < need - chosen.len() {
            return;
        }
        let e = EdgeId(next);
        let (a, b) = graph.endpoints(e);
        let (ra, rb) = (find(parent, a.0), find(parent, b.0));
        if ra != rb {
            let saved = parent.clone();
            parent[ra] = rb;
            chosen.push(e);
            walk(graph, next + 1, chosen, parent, out);
            chosen.pop();
            *parent = saved;
        }
        walk(graph, next + 1, chosen, parent, out);
    }
    let mut out = Vec::new();
    let mut parent: Vec<usize> = (0..graph.vertex_count()).collect();
    walk(graph, 0, &mut Vec::new(), &mut parent, &mut out);
    out
}

const EXHAUSTIVE_VERTEX_CAP: usize = 8;

/// Spanning tree of minimum unit-length diameter, rooted at a vertex center.
///
/// Small graphs enumerate every spanning tree. Larger graphs grow a
/// breadth-first tree from the best vertex or edge midpoint center, which
/// reaches the same optimum for unit lengths.
pub fn min_diameter_spanning_tree(graph: &Graph) -> Result<SpanningTree> {
    let (edges, exhaustive) = if graph.vertex_count() <= EXHAUSTIVE_VERTEX_CAP {
        let best = all_spanning_trees(graph)
            .into_iter()
            .map(|t| t.into_iter().collect::<BTreeSet<_>>())
            .min_by_key(|t| eccentricities(graph, t).into_iter().max().unwrap_or(0))
            .ok_or(Error::Disconnected)?;
        (best, true)
    } else {
        (center_bfs_tree(graph), false)
    };
    let ecc = eccentricities(graph, &edges);
    let diameter = ecc.iter().copied().max().unwrap_or(0);
    let height = ecc.iter().copied().min().unwrap_or(0);
    let root = VertexId(ecc.iter().position(|&x| x == height).unwrap_or(0));
    ensure(height <= ceil_half(diameter), || {
        format!("tree height {height} exceeds half the diameter {diameter}")
    })?;
    Ok(SpanningTree {
        edges,
        root,
        diameter,
        height,
        exhaustive,
    })
}

/// Breadth-first tree from the unit-length absolute center: a vertex, or the
/// midpoint of an edge whose two ends then grow the tree together.
fn center_bfs_tree(graph: &Graph) -> BTreeSet<EdgeId> {
    let dist: Vec<Vec<usize>> = graph.vertex_ids().map(|v| graph.distances_from(v)).collect();
    // Doubled radius: 2 ecc(v) for a vertex, 2 max_x min(d(u,x), d(w,x)) + 1 for an edge midpoint.
    let mut best: (usize, Vec<VertexId>, Option<EdgeId>) = (usize::MAX, Vec::new(), None);
    for v in graph.vertex_ids() {
        let score = 2 * dist[v.0].iter().copied().max().unwrap_or(0);
        if score < best.0 {
            best = (score, vec![v], None);
        }
    }
    for e in graph.edge_ids() {
        let (u, w) = graph.endpoints(e);
        if u == w {
            continue;
        }
        let reach = graph
            .vertex_ids()
            .map(|x| dist[u.0][x.0].min(dist[w.0][x.0]))
            .max()
            .unwrap_or(0);
        let score = 2 * reach + 1;
        if score < best.0 {
            best = (score, vec![u, w], Some(e));
        }
    }
    let (_, sources, seed) = best;
    let mut tree: BTreeSet<EdgeId> = seed.into_iter().collect();
    let mut seen = vec![false; graph.vertex_count()];
    let mut queue = std::collections::VecDeque::new();
    for &s in &sources {
        seen[s.0] = true;
        queue.push_back(s);
    }
    while let Some(v) = queue.pop_front() {
        for &e in graph.incident(v) {
            let w = graph.other_end(e, v);
            if !seen[w.0] {
                seen[w.0] = true;
                tree.insert(e);
                queue.push_back(w);
            }
        }
    }
    tree
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    TreeDfs,
    MinDiameterSpanningTree,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PsnCertificate {
    pub bound: usize,
    pub construction: Construction,
    pub bijection: EdgeBijection,
    pub root: VertexId,
    pub height: usize,
    pub diameter: usize,
    pub spanning_tree: Vec<EdgeId>,
    /// Non-tree edges hung as pendant leaves, with the vertex they hang from.
    pub pendants: Vec<(EdgeId, VertexId)>,
    pub exhaustive: bool,
}

/// Hangs every non-tree edge as a pendant leaf and lays out the augmented tree.
pub fn augment_and_bijection(graph: &Graph, tree: &SpanningTree) -> Result<(EdgeBijection, PsnCertificate)> {
    let discovery = dfs_layout(graph, tree.root, &tree.edges, &BTreeMap::new());
    let mut rank = vec![usize::MAX; graph.vertex_count()];
    rank[tree.root.0] = 0;
    for (k, &e) in discovery.order.iter().enumerate() {
        let (a, b) = graph.endpoints(e);
        let child = if discovery.right_is_hi[k] { b } else { a };
        rank[child.0] = k + 1;
    }
    let mut pendants: BTreeMap<VertexId, Vec<EdgeId>> = BTreeMap::new();
    let mut hung = Vec::new();
    for e in graph.edge_ids().filter(|e| !tree.edges.contains(e)) {
        let (a, b) = graph.endpoints(e);
        let at = if rank[a.0] <= rank[b.0] { a } else { b };
        pendants.entry(at).or_default().push(e);
        hung.push((e, at));
    }
    let bijection = dfs_layout(graph, tree.root, &tree.edges, &pendants);
    ensure(bijection.is_bijective(graph), || "augmented layout misses an edge".into())?;
    let certificate = PsnCertificate {
        bound: ceil_half(tree.diameter) + 2,
        construction: Construction::MinDiameterSpanningTree,
        bijection: bijection.clone(),
        root: tree.root,
        height: tree.height,
        diameter: tree.diameter,
        spanning_tree: tree.edges.iter().copied().collect(),
        pendants: hung,
        exhaustive: tree.exhaustive,
    };
    Ok((bijection, certificate))
}

/// Tree layout with bound `h + 1` for trees, augmented spanning tree otherwise.
/// Trees are rooted at a center, except paths, which start at an end.
pub fn psn_certificate(graph: &Graph) -> Result<PsnCertificate> {
    if graph.is_tree() {
        let all: BTreeSet<EdgeId> = graph.edge_ids().collect();
        let ecc = eccentricities(graph, &all);
        let is_path = graph.vertex_ids().all(|v| graph.incident(v).len() <= 2);
        let root = if is_path {
            graph.vertex_ids().find(|&v| graph.incident(v).len() <= 1).unwrap_or(VertexId(0))
        } else {
            let center = ecc.iter().copied().min().unwrap_or(0);
            VertexId(ecc.iter().position(|&x| x == center).unwrap_or(0))
        };
        let height = ecc[root.0];
        let bijection = tree_dfs_bijection(graph, root)?;
        return Ok(PsnCertificate {
            bound: height + 1,
            construction: Construction::TreeDfs,
            bijection,
            root,
            height,
            diameter: ecc.iter().copied().max().unwrap_or(0),
            spanning_tree: all.into_iter().collect(),
            pendants: Vec::new(),
            exhaustive: true,
        });
    }
    let tree = min_diameter_spanning_tree(graph)?;
    Ok(augment_and_bijection(graph, &tree)?.1)
}

/// Graph share covered by path span `[lo, hi]`, ignoring zero-length overlaps
/// unless the span itself is a single point.
pub fn segment_preimage(bijection: &EdgeBijection, lo: &Q, hi: &Q) -> Share {
    let mut intervals = Vec::new();
    for k in 0..bijection.len() {
        let start = qi(k as i64);
        let end = qi(k as i64 + 1);
        let a = if lo > &start { lo.clone() } else { start.clone() };
        let b = if hi < &end { hi.clone() } else { end };
        if a < b || (lo == hi && a == b) {
            intervals.push(bijection.to_edge(k, &(&a - &start), &(&b - &start)));
            if lo == hi {
                break;
            }
        }
    }
    Share::new(intervals)
}

/// Maximal connected pieces of the graph share covered by path span `[lo, hi]`.
pub fn lift_segment(graph: &Graph, bijection: &EdgeBijection, lo: &Q, hi: &Q) -> Vec<Share> {
    components(graph, &segment_preimage(bijection, lo, hi))
}

/// Maps a share of the path cake back onto the graph.
pub fn pull_back(bijection: &EdgeBijection, path_share: &Share) -> Share {
    Share::new(
        path_share
            .intervals
            .iter()
            .map(|iv| bijection.to_edge(iv.edge.0, &iv.lo, &iv.hi))
            .collect(),
    )
}

pub const PSN_EDGE_CAP: usize = 20;

/// Exact path similarity number of a layout: the largest piece count over all
/// spans whose ends are slot boundaries or slot midpoints.
pub fn psn_exact_check(graph: &Graph, bijection: &EdgeBijection) -> Result<usize> {
    let m = bijection.len();
    if m > PSN_EDGE_CAP {
        return Err(Error::SizeCap(format!("exact check handles at most {PSN_EDGE_CAP} edges, got {m}")));
    }
    let candidates: Vec<Q> = (0..=2 * m as i64).map(|k| q(k, 2)).collect();
    let best = (0..candidates.len())
        .into_par_iter()
        .map(|i| {
            (i..candidates.len())
                .map(|j| lift_segment(graph, bijection, &candidates[i], &candidates[j]).len())
                .max()
                .unwrap_or(0)
        })
        .max()
        .unwrap_or(0);
    Ok(best)
}

/// Path-cake instance whose slot `k` carries the valuation of edge `order[k]`.
pub fn path_instance(instance: &Instance, bijection: &EdgeBijection) -> Result<Instance> {
    let graph = instance.graph();
    ensure(bijection.is_bijective(graph), || "layout is not a bijection".into())?;
    let rows = (0..instance.agent_count())
        .map(|i| {
            (0..bijection.len())
                .map(|k| {
                    let d = instance.density(i, bijection.order[k]);
                    if bijection.right_is_hi[k] {
                        d.clone()
                    } else {
                        d.reversed()
                    }
                })
                .collect()
        })
        .collect();
    Instance::new(path_graph(bijection.len()), rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathSolver {
    /// Fixed-threshold carving, any valuations.
    Carving,
    /// Adaptive carving, identical valuations.
    Identical4,
    /// Adaptive carving plus balancing, identical valuations.
    Identical2Eps,
}

impl PathSolver {
    pub fn default_for(instance: &Instance) -> PathSolver {
        if instance.is_identical() {
            PathSolver::Identical2Eps
        } else {
            PathSolver::Carving
        }
    }
}

#[derive(Clone, Debug)]
pub struct PsnRun {
    pub allocation: Allocation,
    pub certificate: PsnCertificate,
    pub path_allocation: Allocation,
    pub pieces: Vec<usize>,
}

/// Solves on the path cake and maps each connected path share back to the graph.
pub fn psn_allocate(instance: &Instance, epsilon: &Q, solver: PathSolver) -> Result<PsnRun> {
    let graph = instance.graph();
    let certificate = psn_certificate(graph)?;
    let path = path_instance(instance, &certificate.bijection)?;
    let oracle = Oracle::new(&path);
    let path_allocation = match solver {
        PathSolver::Carving => iterative_divide(&oracle, ThresholdSchedule::FixedQuarter, None)?.allocation,
        PathSolver::Identical4 => iterative_divide(&oracle, ThresholdSchedule::AdaptiveIdentical, None)?.allocation,
        PathSolver::Identical2Eps => identical_two_eps(&oracle, epsilon, None)?.balance.allocation,
    };
    let shares: Vec<Share> = path_allocation
        .shares
        .iter()
        .map(|s| pull_back(&certificate.bijection, s).normalized(graph))
        .collect();
    let pieces: Vec<usize> = shares.iter().map(|s| components(graph, s).len()).collect();
    for (i, &p) in pieces.iter().enumerate() {
        ensure(p <= certificate.bound, || {
            format!("agent {} holds {p} pieces, above the bound {}", i + 1, certificate.bound)
        })?;
    }
    let allocation = Allocation::new(shares);
    for i in 0..instance.agent_count() {
        ensure(allocation.values(instance, i) == path_allocation.values(&path, i), || {
            format!("values of agent {} changed when mapped back", i + 1)
        })?;
    }
    Ok(PsnRun {
        allocation,
        certificate,
        path_allocation,
        pieces,
    })
}
