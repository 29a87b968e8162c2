//! Splitting a connected subcake into a share worth between `beta` and `2 beta`
//! and a connected remainder that keeps a designated root point.

use std::collections::HashMap;

use num_traits::Zero;

use crate::error::{ensure, Error, Result};
use crate::model::{AnchorEnd, EdgeId, EdgeInterval, Graph, Point, PointOnEdge, Share};
use crate::query::Oracle;
use crate::rational::Q;

/// Tree node: a point of the cake, or the `copy`-th duplicate of one.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TreeNode {
    pub point: Point,
    pub copy: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeArc {
    pub interval: EdgeInterval,
    pub lo_node: usize,
    pub hi_node: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecycleEntry {
    pub split: usize,
    pub duplicate: usize,
    pub edge: EdgeId,
    pub arc: usize,
}

/// Duplications performed while breaking cycles, in order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DecycleRecord {
    pub entries: Vec<DecycleEntry>,
}

/// Acyclic view of a subcake rooted at a point.
#[derive(Clone, Debug)]
pub struct RootedTree {
    pub nodes: Vec<TreeNode>,
    pub arcs: Vec<TreeArc>,
    pub root: usize,
    /// Child arcs of each node, ordered by child node.
    pub children: Vec<Vec<usize>>,
    /// Child endpoint of each arc.
    pub arc_child: Vec<usize>,
    /// Nodes in depth-first preorder.
    pub preorder: Vec<usize>,
}

impl RootedTree {
    /// Arc endpoints after undoing every duplication in `record`.
    pub fn restored_arcs(&self, record: &DecycleRecord) -> Vec<(usize, usize)> {
        let mut ends: Vec<(usize, usize)> = self
            .arcs
            .iter()
            .map(|a| (a.lo_node, a.hi_node))
            .collect();
        for entry in record.entries.iter().rev() {
            let (lo, hi) = &mut ends[entry.arc];
            if *lo == entry.duplicate {
                *lo = entry.split;
            }
            if *hi == entry.duplicate {
                *hi = entry.split;
            }
        }
        ends
    }

    fn subtree_arcs(&self, node: usize, out: &mut Vec<usize>) {
        let mut stack = vec![node];
        while let Some(u) = stack.pop() {
            for &a in &self.children[u] {
                out.push(a);
                stack.push(self.arc_child[a]);
            }
        }
    }
}

fn canonical(graph: &Graph, point: &Point) -> Point {
    match point {
        Point::Interior(e, x) => graph.point(*e, x),
        vertex => vertex.clone(),
    }
}

fn adjacency(nodes: &[TreeNode], arcs: &[TreeArc]) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); nodes.len()];
    for (i, arc) in arcs.iter().enumerate() {
        adj[arc.lo_node].push((arc.hi_node, i));
        if arc.hi_node != arc.lo_node {
            adj[arc.hi_node].push((arc.lo_node, i));
        }
    }
    for list in &mut adj {
        list.sort_by(|x, y| nodes[x.0].cmp(&nodes[y.0]).then(x.1.cmp(&y.1)));
    }
    adj
}

/// First cycle met by a depth-first search from `root`, with node depths.
fn find_cycle(
    nodes: &[TreeNode],
    arcs: &[TreeArc],
    root: usize,
) -> Option<(Vec<usize>, Vec<usize>)> {
    let adj = adjacency(nodes, arcs);
    let n = nodes.len();
    let mut depth = vec![usize::MAX; n];
    let mut parent_arc = vec![usize::MAX; n];
    let mut parent_node = vec![usize::MAX; n];
    let mut on_stack = vec![false; n];
    let mut stack = vec![(root, 0usize)];
    depth[root] = 0;
    on_stack[root] = true;
    while let Some(top) = stack.last_mut() {
        let u = top.0;
        if top.1 == adj[u].len() {
            on_stack[u] = false;
            stack.pop();
            continue;
        }
        let (w, a) = adj[u][top.1];
        top.1 += 1;
        if a == parent_arc[u] {
            continue;
        }
        if depth[w] == usize::MAX {
            depth[w] = depth[u] + 1;
            parent_arc[w] = a;
            parent_node[w] = u;
            on_stack[w] = true;
            stack.push((w, 0));
        } else if on_stack[w] {
            let mut cycle = vec![a];
            let mut cur = u;
            while cur != w {
                cycle.push(parent_arc[cur]);
                cur = parent_node[cur];
            }
            return Some((cycle, depth));
        }
    }
    None
}

/// Breaks every cycle of `subcake` by re-attaching one arc per cycle to a fresh
/// copy of its deeper endpoint, then roots the result at `root`.
pub fn decycle(graph: &Graph, subcake: &Share, root: &Point) -> Result<(RootedTree, DecycleRecord)> {
    let root = canonical(graph, root);
    let share = subcake.normalized(graph);
    if share.is_empty() {
        return Err(Error::BadSubcake);
    }
    if !share.contains_point(graph, &root) {
        return Err(Error::RootNotInSubcake);
    }
    let mut intervals = Vec::with_capacity(share.intervals.len() + 1);
    for iv in share.intervals {
        match &root {
            Point::Interior(e, x) if iv.edge == *e && iv.lo < *x && *x < iv.hi => {
                intervals.push(EdgeInterval {
                    edge: iv.edge,
                    lo: iv.lo.clone(),
                    hi: x.clone(),
                });
                intervals.push(EdgeInterval {
                    edge: iv.edge,
                    lo: x.clone(),
                    hi: iv.hi,
                });
            }
            _ => intervals.push(iv),
        }
    }

    let mut nodes = vec![TreeNode {
        point: root.clone(),
        copy: 0,
    }];
    let mut index: HashMap<Point, usize> = HashMap::from([(root, 0)]);
    let mut node_of = |p: Point, nodes: &mut Vec<TreeNode>| -> usize {
        *index.entry(p.clone()).or_insert_with(|| {
            nodes.push(TreeNode { point: p, copy: 0 });
            nodes.len() - 1
        })
    };
    let mut arcs = Vec::new();
    for iv in intervals {
        let lo = node_of(graph.point(iv.edge, &iv.lo), &mut nodes);
        if iv.is_degenerate() {
            continue;
        }
        let hi = node_of(graph.point(iv.edge, &iv.hi), &mut nodes);
        arcs.push(TreeArc {
            interval: iv,
            lo_node: lo,
            hi_node: hi,
        });
    }

    let mut record = DecycleRecord::default();
    while let Some((cycle, depth)) = find_cycle(&nodes, &arcs, 0) {
        let chosen = *cycle
            .iter()
            .min_by(|&&x, &&y| {
                let (a, b) = (&arcs[x].interval, &arcs[y].interval);
                (a.edge, &a.lo).cmp(&(b.edge, &b.lo))
            })
            .expect("cycle has arcs");
        let arc = &arcs[chosen];
        let split_hi = depth[arc.hi_node] >= depth[arc.lo_node];
        let old = if split_hi { arc.hi_node } else { arc.lo_node };
        let copy = 1 + nodes
            .iter()
            .filter(|n| n.point == nodes[old].point)
            .map(|n| n.copy)
            .max()
            .unwrap_or(0);
        nodes.push(TreeNode {
            point: nodes[old].point.clone(),
            copy,
        });
        let duplicate = nodes.len() - 1;
        if split_hi {
            arcs[chosen].hi_node = duplicate;
        } else {
            arcs[chosen].lo_node = duplicate;
        }
        record.entries.push(DecycleEntry {
            split: old,
            duplicate,
            edge: arcs[chosen].interval.edge,
            arc: chosen,
        });
    }

    let adj = adjacency(&nodes, &arcs);
    let mut children = vec![Vec::new(); nodes.len()];
    let mut arc_child = vec![usize::MAX; arcs.len()];
    let mut seen = vec![false; nodes.len()];
    let mut preorder = Vec::with_capacity(nodes.len());
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        preorder.push(u);
        for &(w, a) in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                children[u].push(a);
                arc_child[a] = w;
            }
        }
        for &a in children[u].iter().rev() {
            stack.push(arc_child[a]);
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::BadSubcake);
    }
    Ok((
        RootedTree {
            nodes,
            arcs,
            root: 0,
            children,
            arc_child,
            preorder,
        },
        record,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DivideCase {
    /// A single child branch was trimmed to value exactly `beta` for the witness.
    SingleBranch,
    /// Whole child branches were accumulated until someone reached `beta`.
    Accumulated,
}

#[derive(Clone, Debug)]
pub struct DivideOutcome {
    pub first: Share,
    pub second: Share,
    pub case: DivideCase,
    pub pivot: Point,
    pub witness: usize,
    pub cut: Option<PointOnEdge>,
}

/// Splits `subcake` into `(first, second)`: `first` is connected, worth at least
/// `beta` to some agent of `agents` and less than `2 beta` to all of them;
/// `second` is connected and contains `root`.
pub fn divide(
    oracle: &Oracle,
    subcake: &Share,
    agents: &[usize],
    beta: &Q,
    root: &Point,
) -> Result<DivideOutcome> {
    let graph = oracle.graph();
    let mut agents = agents.to_vec();
    agents.sort_unstable();
    agents.dedup();
    if agents.is_empty() {
        return Err(Error::EmptyAgentSet);
    }
    if let Some(&bad) = agents.iter().find(|&&a| a >= oracle.agent_count()) {
        return Err(Error::UnknownAgent(bad));
    }
    if beta <= &Q::zero() {
        return Err(Error::ThresholdOutOfRange(beta.clone()));
    }
    let (tree, _) = decycle(graph, subcake, root)?;
    let k = agents.len();

    let arc_values: Vec<Vec<Q>> = tree
        .arcs
        .iter()
        .map(|arc| {
            agents
                .iter()
                .map(|&i| oracle.eval_interval(i, &arc.interval))
                .collect()
        })
        .collect();
    let mut below = vec![vec![Q::zero(); k]; tree.nodes.len()];
    for &u in tree.preorder.iter().rev() {
        for &a in &tree.children[u] {
            let w = tree.arc_child[a];
            for j in 0..k {
                let branch = &below[w][j] + &arc_values[a][j];
                below[u][j] += branch;
            }
        }
    }
    if below[tree.root].iter().all(|value| value < beta) {
        return Err(Error::ThresholdOutOfRange(beta.clone()));
    }

    let mut v = tree.root;
    while let Some(&a) = tree.children[v]
        .iter()
        .find(|&&a| below[tree.arc_child[a]].iter().any(|x| x >= beta))
    {
        v = tree.arc_child[a];
    }
    let branch = |a: usize, j: usize| &below[tree.arc_child[a]][j] + &arc_values[a][j];

    let mut first_arcs: Vec<usize> = Vec::new();
    let mut first_extra: Vec<EdgeInterval> = Vec::new();
    let mut second_extra: Vec<EdgeInterval> = Vec::new();
    let mut split_arc: Option<usize> = None;
    let case;
    let witness;
    let mut cut_point = None;

    let single = tree.children[v]
        .iter()
        .copied()
        .find(|&a| (0..k).any(|j| &branch(a, j) >= beta));
    if let Some(a) = single {
        case = DivideCase::SingleBranch;
        let w = tree.arc_child[a];
        let arc = &tree.arcs[a];
        let anchor = if arc.hi_node == w {
            AnchorEnd::Hi
        } else {
            AnchorEnd::Lo
        };
        let mut best: Option<(Q, usize)> = None;
        for j in 0..k {
            if &branch(a, j) < beta {
                continue;
            }
            let target = beta - &below[w][j];
            let p = oracle.cut(agents[j], &arc.interval, anchor, &target)?;
            let better = match &best {
                None => true,
                Some((x, _)) => match anchor {
                    AnchorEnd::Hi => p.position > *x,
                    AnchorEnd::Lo => p.position < *x,
                },
            };
            if better {
                best = Some((p.position, j));
            }
        }
        let (x, j) = best.expect("some agent reaches beta on the branch");
        witness = agents[j];
        let iv = &arc.interval;
        let (near, far) = match anchor {
            AnchorEnd::Hi => (
                EdgeInterval { edge: iv.edge, lo: x.clone(), hi: iv.hi.clone() },
                EdgeInterval { edge: iv.edge, lo: iv.lo.clone(), hi: x.clone() },
            ),
            AnchorEnd::Lo => (
                EdgeInterval { edge: iv.edge, lo: iv.lo.clone(), hi: x.clone() },
                EdgeInterval { edge: iv.edge, lo: x.clone(), hi: iv.hi.clone() },
            ),
        };
        first_extra.push(near);
        if !far.is_degenerate() {
            second_extra.push(far);
        }
        split_arc = Some(a);
        tree.subtree_arcs(w, &mut first_arcs);
        cut_point = Some(PointOnEdge { edge: iv.edge, position: x });
    } else {
        case = DivideCase::Accumulated;
        let mut sums = vec![Q::zero(); k];
        let mut reached = None;
        for &a in &tree.children[v] {
            first_arcs.push(a);
            tree.subtree_arcs(tree.arc_child[a], &mut first_arcs);
            for (j, sum) in sums.iter_mut().enumerate() {
                *sum += branch(a, j);
            }
            if let Some(j) = sums.iter().position(|s| s >= beta) {
                reached = Some(j);
                break;
            }
        }
        witness = agents[reached.ok_or_else(|| {
            Error::Invariant("children of the stopping node never reach beta".into())
        })?];
    }

    let mut in_first = vec![false; tree.arcs.len()];
    for &a in &first_arcs {
        in_first[a] = true;
    }
    let mut first = first_extra;
    let mut second = second_extra;
    for (a, arc) in tree.arcs.iter().enumerate() {
        if Some(a) == split_arc {
            continue;
        }
        if in_first[a] {
            first.push(arc.interval.clone());
        } else {
            second.push(arc.interval.clone());
        }
    }
    if second.is_empty() {
        second.push(point_interval(graph, subcake, &tree.nodes[tree.root].point)?);
    }
    let first = Share::new(first).normalized(graph);
    let second = Share::new(second).normalized(graph);

    let instance = oracle.instance();
    ensure(instance.value(witness, &first) >= *beta, || {
        format!("first share is worth less than beta to witness {}", witness + 1)
    })?;
    let twice = beta + beta;
    for &i in &agents {
        ensure(instance.value(i, &first) < twice, || {
            format!("first share reaches 2 beta for agent {}", i + 1)
        })?;
    }
    log::debug!(
        "divide: pivot {:?}, case {:?}, cut {:?}, witness {}",
        tree.nodes[v].point,
        case,
        cut_point,
        witness + 1
    );
    Ok(DivideOutcome {
        first,
        second,
        case,
        pivot: tree.nodes[v].point.clone(),
        witness,
        cut: cut_point,
    })
}

/// Zero-length interval representing `point`, taken from an interval of `share` that touches it.
pub fn point_interval(graph: &Graph, share: &Share, point: &Point) -> Result<EdgeInterval> {
    match point {
        Point::Interior(e, x) => Ok(EdgeInterval::at(*e, x.clone())),
        Point::Vertex(_) => share
            .intervals
            .iter()
            .find_map(|iv| {
                if graph.point(iv.edge, &iv.lo) == *point {
                    Some(EdgeInterval::at(iv.edge, iv.lo.clone()))
                } else if graph.point(iv.edge, &iv.hi) == *point {
                    Some(EdgeInterval::at(iv.edge, iv.hi.clone()))
                } else {
                    None
                }
            })
            .or_else(|| {
                let Point::Vertex(v) = point else { unreachable!() };
                graph.incident(*v).first().map(|&e| {
                    let pos = if graph.endpoints(e).0 == *v { Q::zero() } else { num_traits::One::one() };
                    EdgeInterval::at(e, pos)
                })
            })
            .ok_or(Error::RootNotInSubcake),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{star3u, unit_interval};
    use crate::model::{is_connected, EdgeId, Graph, Instance, StepDensity, VertexId};
    use crate::rational::{q, qi};

    fn triangle() -> Instance {
        let g = Graph::from_names(
            &["a", "b", "c"],
            &[("e1", "a", "b"), ("e2", "b", "c"), ("e3", "c", "a")],
        )
        .unwrap();
        crate::fixtures::uniform(g, 2)
    }

    #[test]
    fn triangle_decycles_to_four_nodes() {
        let inst = triangle();
        let g = inst.graph();
        let (tree, record) = decycle(g, &inst.whole_cake(), &Point::Vertex(VertexId(0))).unwrap();
        assert_eq!(tree.nodes.len(), 4);
        assert_eq!(tree.arcs.len(), 3);
        assert_eq!(record.entries.len(), 1);
        assert_eq!(record.entries[0].edge, EdgeId(0));
        let restored = tree.restored_arcs(&record);
        let original: Vec<(usize, usize)> = g
            .edges()
            .iter()
            .map(|e| {
                let find = |v| tree.nodes.iter().position(|n| n.point == Point::Vertex(v) && n.copy == 0).unwrap();
                (find(e.endpoints.0), find(e.endpoints.1))
            })
            .collect();
        assert_eq!(restored, original);
    }

    #[test]
    fn trees_decycle_to_themselves() {
        let inst = star3u();
        let (tree, record) =
            decycle(inst.graph(), &inst.whole_cake(), &Point::Vertex(VertexId(0))).unwrap();
        assert!(record.entries.is_empty());
        assert_eq!(tree.nodes.len(), 4);
        let total: Q = tree.arcs.iter().map(|a| inst.interval_value(0, &a.interval)).sum();
        assert_eq!(total, qi(1));
    }

    #[test]
    fn self_loops_and_parallel_edges_decycle() {
        let g = Graph::from_names(
            &["a", "b"],
            &[("e1", "a", "b"), ("e2", "a", "b"), ("e3", "b", "b")],
        )
        .unwrap();
        let inst = crate::fixtures::uniform(g, 1);
        let (tree, record) =
            decycle(inst.graph(), &inst.whole_cake(), &Point::Vertex(VertexId(0))).unwrap();
        assert_eq!(record.entries.len(), 2);
        assert_eq!(tree.nodes.len(), tree.arcs.len() + 1);
    }

    #[test]
    fn root_outside_subcake_is_rejected() {
        let inst = star3u();
        let g = inst.graph();
        let sub = Share::new(vec![EdgeInterval::new(EdgeId(0), qi(0), q(1, 2)).unwrap()]);
        assert!(matches!(
            decycle(g, &sub, &Point::Vertex(VertexId(0))),
            Err(Error::RootNotInSubcake)
        ));
    }

    #[test]
    fn quarter_from_a_unit_edge() {
        let inst = unit_interval(1);
        let oracle = Oracle::new(&inst);
        let right = Point::Vertex(inst.graph().vertex("b").unwrap());
        let out = divide(&oracle, &inst.whole_cake(), &[0], &q(1, 4), &right).unwrap();
        assert_eq!(out.case, DivideCase::SingleBranch);
        assert_eq!(
            out.first.intervals,
            vec![EdgeInterval::new(EdgeId(0), qi(0), q(1, 4)).unwrap()]
        );
        assert_eq!(
            out.second.intervals,
            vec![EdgeInterval::new(EdgeId(0), q(1, 4), qi(1)).unwrap()]
        );
    }

    #[test]
    fn star_leaf_edge_is_carved_whole() {
        let inst = star3u();
        let oracle = Oracle::new(&inst);
        let center = Point::Vertex(inst.graph().vertex("v0").unwrap());
        let out = divide(&oracle, &inst.whole_cake(), &[0], &q(1, 3), &center).unwrap();
        assert_eq!(out.first.intervals, vec![EdgeInterval::full(EdgeId(0))]);
        assert_eq!(
            out.second.intervals,
            vec![EdgeInterval::full(EdgeId(1)), EdgeInterval::full(EdgeId(2))]
        );
        assert_eq!(inst.value(0, &out.first), q(1, 3));
    }

    #[test]
    fn full_threshold_leaves_only_the_root() {
        let inst = unit_interval(1);
        let oracle = Oracle::new(&inst);
        let right = Point::Vertex(inst.graph().vertex("b").unwrap());
        let out = divide(&oracle, &inst.whole_cake(), &[0], &qi(1), &right).unwrap();
        assert_eq!(out.first.intervals, vec![EdgeInterval::full(EdgeId(0))]);
        assert_eq!(out.second.intervals, vec![EdgeInterval::at(EdgeId(0), qi(1))]);
        assert!(out.second.contains_point(inst.graph(), &right));
    }

    #[test]
    fn interior_roots_are_split_points() {
        let inst = unit_interval(1);
        let oracle = Oracle::new(&inst);
        let sub = Share::new(vec![EdgeInterval::new(EdgeId(0), qi(0), q(3, 5)).unwrap()]);
        let root = Point::Interior(EdgeId(0), q(1, 10));
        let out = divide(&oracle, &sub, &[0], &q(1, 5), &root).unwrap();
        assert_eq!(
            out.first.intervals,
            vec![EdgeInterval::new(EdgeId(0), q(2, 5), q(3, 5)).unwrap()]
        );
        assert!(out.second.contains_point(inst.graph(), &root));
        assert!(is_connected(inst.graph(), &out.second));
    }

    #[test]
    fn accumulates_small_branches() {
        let g = Graph::from_names(
            &["c", "l1", "l2", "l3", "l4"],
            &[("e1", "l1", "c"), ("e2", "l2", "c"), ("e3", "l3", "c"), ("e4", "l4", "c")],
        )
        .unwrap();
        let inst = crate::fixtures::uniform(g, 1);
        let oracle = Oracle::new(&inst);
        let c = Point::Vertex(inst.graph().vertex("c").unwrap());
        let out = divide(&oracle, &inst.whole_cake(), &[0], &q(2, 5), &c).unwrap();
        assert_eq!(out.case, DivideCase::Accumulated);
        assert_eq!(inst.value(0, &out.first), q(1, 2));
    }

    #[test]
    fn rejects_bad_thresholds() {
        let inst = unit_interval(1);
        let oracle = Oracle::new(&inst);
        let a = Point::Vertex(VertexId(0));
        assert!(divide(&oracle, &inst.whole_cake(), &[0], &qi(0), &a).is_err());
        assert!(divide(&oracle, &inst.whole_cake(), &[0], &qi(2), &a).is_err());
        assert!(matches!(
            divide(&oracle, &inst.whole_cake(), &[], &q(1, 2), &a),
            Err(Error::EmptyAgentSet)
        ));
    }

    #[test]
    fn zero_density_plateau_cut_is_nearest_the_subtree() {
        let g = Graph::from_names(&["a", "b"], &[("e1", "a", "b")]).unwrap();
        let d = StepDensity::new(vec![qi(0), q(1, 2), qi(1)], vec![qi(2), qi(0)]).unwrap();
        let inst = Instance::new(g, vec![vec![d]]).unwrap();
        let oracle = Oracle::new(&inst);
        let out = divide(&oracle, &inst.whole_cake(), &[0], &q(1, 2), &Point::Vertex(VertexId(1))).unwrap();
        assert_eq!(
            out.first.intervals,
            vec![EdgeInterval::new(EdgeId(0), qi(0), q(1, 4)).unwrap()]
        );
    }
}
