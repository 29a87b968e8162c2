//! Graphs, points, edge intervals, shares and step-density valuations.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{max_q, min_q, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub usize);

/// Orders identifiers so that embedded numbers compare numerically (`v2 < v10`).
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn chunks(s: &str) -> Vec<(bool, &str)> {
        let mut out = Vec::new();
        let bytes = s.as_bytes();
        let mut start = 0;
        while start < bytes.len() {
            let digit = bytes[start].is_ascii_digit();
            let mut end = start;
            while end < bytes.len() && bytes[end].is_ascii_digit() == digit {
                end += 1;
            }
            out.push((digit, &s[start..end]));
            start = end;
        }
        out
    }
    let (ca, cb) = (chunks(a), chunks(b));
    for ((da, sa), (db, sb)) in ca.iter().zip(cb.iter()) {
        let ord = if *da && *db {
            let ta = sa.trim_start_matches('0');
            let tb = sb.trim_start_matches('0');
            ta.len().cmp(&tb.len()).then_with(|| ta.cmp(tb))
        } else {
            sa.cmp(sb)
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    ca.len()
        .cmp(&cb.len())
        .then_with(|| a.len().cmp(&b.len()))
        .then_with(|| a.cmp(b))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub id: String,
    pub endpoints: (VertexId, VertexId),
}

/// Connected multigraph; vertex and edge indices follow the natural order of their ids.
#[derive(Clone, Debug)]
pub struct Graph {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    incident: Vec<Vec<EdgeId>>,
    vertex_lookup: HashMap<String, VertexId>,
    edge_lookup: HashMap<String, EdgeId>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.edges == other.edges
    }
}

impl Eq for Graph {}

impl Graph {
    /// `edges` are `(id, first endpoint, second endpoint)` triples.
    pub fn new(vertices: Vec<String>, edges: Vec<(String, String, String)>) -> Result<Graph> {
        let mut vertices = vertices;
        vertices.sort_by(|a, b| natural_cmp(a, b));
        let mut vertex_lookup = HashMap::new();
        for (i, name) in vertices.iter().enumerate() {
            if vertex_lookup.insert(name.clone(), VertexId(i)).is_some() {
                return Err(Error::DuplicateId(name.clone()));
            }
        }
        if vertices.is_empty() {
            return Err(Error::Malformed("graph has no vertices".into()));
        }
        let mut edges = edges;
        edges.sort_by(|a, b| natural_cmp(&a.0, &b.0));
        let mut edge_lookup = HashMap::new();
        let mut built = Vec::with_capacity(edges.len());
        let mut incident = vec![Vec::new(); vertices.len()];
        for (i, (id, u, w)) in edges.into_iter().enumerate() {
            let lookup = |name: &str| {
                vertex_lookup
                    .get(name)
                    .copied()
                    .ok_or_else(|| Error::UnknownVertex(name.to_string()))
            };
            let (u, w) = (lookup(&u)?, lookup(&w)?);
            if edge_lookup.insert(id.clone(), EdgeId(i)).is_some() {
                return Err(Error::DuplicateId(id));
            }
            incident[u.0].push(EdgeId(i));
            if w != u {
                incident[w.0].push(EdgeId(i));
            }
            built.push(Edge { id, endpoints: (u, w) });
        }
        let graph = Graph {
            vertices,
            edges: built,
            incident,
            vertex_lookup,
            edge_lookup,
        };
        if !graph.vertices_connected() {
            return Err(Error::Disconnected);
        }
        Ok(graph)
    }

    pub fn from_names(vertices: &[&str], edges: &[(&str, &str, &str)]) -> Result<Graph> {
        Graph::new(
            vertices.iter().map(|v| v.to_string()).collect(),
            edges
                .iter()
                .map(|(id, u, w)| (id.to_string(), u.to_string(), w.to_string()))
                .collect(),
        )
    }

    fn vertices_connected(&self) -> bool {
        let mut seen = vec![false; self.vertices.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &e in &self.incident[v] {
                let w = self.other_end(e, VertexId(v)).0;
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> {
        (0..self.vertices.len()).map(VertexId)
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.edges.len()).map(EdgeId)
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.vertices[v.0]
    }

    pub fn edge_name(&self, e: EdgeId) -> &str {
        &self.edges[e.0].id
    }

    pub fn vertex(&self, name: &str) -> Option<VertexId> {
        self.vertex_lookup.get(name).copied()
    }

    pub fn edge(&self, name: &str) -> Option<EdgeId> {
        self.edge_lookup.get(name).copied()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        self.edges[e.0].endpoints
    }

    pub fn incident(&self, v: VertexId) -> &[EdgeId] {
        &self.incident[v.0]
    }

    pub fn other_end(&self, e: EdgeId, v: VertexId) -> VertexId {
        let (a, b) = self.endpoints(e);
        if a == v {
            b
        } else {
            a
        }
    }

    /// Canonical point at `position` on `e`: edge endpoints collapse to vertices.
    pub fn point(&self, e: EdgeId, position: &Q) -> Point {
        if position.is_zero() {
            Point::Vertex(self.endpoints(e).0)
        } else if position.is_one() {
            Point::Vertex(self.endpoints(e).1)
        } else {
            Point::Interior(e, position.clone())
        }
    }

    pub fn is_tree(&self) -> bool {
        self.edges.len() + 1 == self.vertices.len()
    }

    /// Unit-length BFS distances from `source`.
    pub fn distances_from(&self, source: VertexId) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.vertices.len()];
        let mut queue = std::collections::VecDeque::from([source]);
        dist[source.0] = 0;
        while let Some(v) = queue.pop_front() {
            for &e in &self.incident[v.0] {
                let w = self.other_end(e, v);
                if dist[w.0] == usize::MAX {
                    dist[w.0] = dist[v.0] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn star(&self) -> Result<Star> {
        let m = self.edges.len();
        if m == 0 {
            return Err(Error::NotAStar("no edges".into()));
        }
        if self.edges.iter().any(|e| e.endpoints.0 == e.endpoints.1) {
            return Err(Error::NotAStar("self-loop".into()));
        }
        if self.vertices.len() != m + 1 {
            return Err(Error::NotAStar(format!(
                "{} vertices for {} edges",
                self.vertices.len(),
                m
            )));
        }
        let center = if m == 1 {
            self.edges[0].endpoints.1
        } else {
            self.vertex_ids()
                .find(|&v| self.incident(v).len() == m)
                .ok_or_else(|| Error::NotAStar("no vertex touches every edge".into()))?
        };
        let leaf_first = self
            .edges
            .iter()
            .map(|e| e.endpoints.1 == center)
            .collect();
        Ok(Star {
            center,
            edges: self.edge_ids().collect(),
            leaf_first,
        })
    }
}

/// Star view: leaf coordinates run from the leaf (0) to the center (1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Star {
    pub center: VertexId,
    pub edges: Vec<EdgeId>,
    leaf_first: Vec<bool>,
}

impl Star {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn to_position(&self, k: usize, t: &Q) -> Q {
        if self.leaf_first[k] {
            t.clone()
        } else {
            Q::one() - t
        }
    }

    /// Edge interval for leaf coordinates `[a, b]` on the `k`-th edge.
    pub fn interval(&self, k: usize, a: &Q, b: &Q) -> EdgeInterval {
        let (lo, hi) = if self.leaf_first[k] {
            (a.clone(), b.clone())
        } else {
            (Q::one() - b, Q::one() - a)
        };
        EdgeInterval {
            edge: self.edges[k],
            lo,
            hi,
        }
    }

    /// Anchor end of an edge interval that faces the leaf.
    pub fn leaf_anchor(&self, k: usize) -> AnchorEnd {
        if self.leaf_first[k] {
            AnchorEnd::Lo
        } else {
            AnchorEnd::Hi
        }
    }

    pub fn center_anchor(&self, k: usize) -> AnchorEnd {
        self.leaf_anchor(k).opposite()
    }
}

/// A point of the cake; edge endpoints are always represented by their vertex.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Point {
    Vertex(VertexId),
    Interior(EdgeId, Q),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointOnEdge {
    pub edge: EdgeId,
    pub position: Q,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnchorEnd {
    Lo,
    Hi,
}

impl AnchorEnd {
    pub fn opposite(self) -> AnchorEnd {
        match self {
            AnchorEnd::Lo => AnchorEnd::Hi,
            AnchorEnd::Hi => AnchorEnd::Lo,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeInterval {
    pub edge: EdgeId,
    pub lo: Q,
    pub hi: Q,
}

impl EdgeInterval {
    pub fn new(edge: EdgeId, lo: Q, hi: Q) -> Result<EdgeInterval> {
        if lo.is_negative() || hi > Q::one() || lo > hi {
            return Err(Error::BadInterval {
                lo: Box::new(lo),
                hi: Box::new(hi),
            });
        }
        Ok(EdgeInterval { edge, lo, hi })
    }

    pub fn full(edge: EdgeId) -> EdgeInterval {
        EdgeInterval {
            edge,
            lo: Q::zero(),
            hi: Q::one(),
        }
    }

    pub fn at(edge: EdgeId, position: Q) -> EdgeInterval {
        EdgeInterval {
            edge,
            lo: position.clone(),
            hi: position,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn length(&self) -> Q {
        &self.hi - &self.lo
    }

    pub fn contains(&self, position: &Q) -> bool {
        &self.lo <= position && position <= &self.hi
    }

    pub fn end(&self, anchor: AnchorEnd) -> &Q {
        match anchor {
            AnchorEnd::Lo => &self.lo,
            AnchorEnd::Hi => &self.hi,
        }
    }
}

/// Finite union of closed edge intervals.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Share {
    pub intervals: Vec<EdgeInterval>,
}

impl Share {
    pub fn new(intervals: Vec<EdgeInterval>) -> Share {
        Share { intervals }
    }

    pub fn empty() -> Share {
        Share::default()
    }

    pub fn whole(graph: &Graph) -> Share {
        Share::new(graph.edge_ids().map(EdgeInterval::full).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn has_extent(&self) -> bool {
        self.intervals.iter().any(|iv| !iv.is_degenerate())
    }

    pub fn union(&self, other: &Share) -> Share {
        let mut intervals = self.intervals.clone();
        intervals.extend(other.intervals.iter().cloned());
        Share::new(intervals)
    }

    /// Endpoint points of every interval, canonicalized and deduplicated.
    pub fn endpoint_points(&self, graph: &Graph) -> Vec<Point> {
        let mut points: Vec<Point> = self
            .intervals
            .iter()
            .flat_map(|iv| [graph.point(iv.edge, &iv.lo), graph.point(iv.edge, &iv.hi)])
            .collect();
        points.sort();
        points.dedup();
        points
    }

    pub fn contains_point(&self, graph: &Graph, point: &Point) -> bool {
        match point {
            Point::Vertex(v) => self.intervals.iter().any(|iv| {
                let (a, b) = graph.endpoints(iv.edge);
                (iv.lo.is_zero() && a == *v) || (iv.hi.is_one() && b == *v)
            }),
            Point::Interior(e, x) => self
                .intervals
                .iter()
                .any(|iv| iv.edge == *e && iv.contains(x)),
        }
    }

    /// Sorted, with touching or overlapping intervals on an edge merged and
    /// redundant degenerate intervals removed.
    pub fn normalized(&self, graph: &Graph) -> Share {
        let mut by_edge: BTreeMap<EdgeId, Vec<(Q, Q)>> = BTreeMap::new();
        for iv in &self.intervals {
            by_edge
                .entry(iv.edge)
                .or_default()
                .push((iv.lo.clone(), iv.hi.clone()));
        }
        let mut merged = Vec::new();
        for (edge, mut spans) in by_edge {
            spans.sort();
            let mut current: Option<(Q, Q)> = None;
            for (lo, hi) in spans {
                current = match current {
                    Some((clo, chi)) if lo <= chi => {
                        let hi = max_q(&chi, &hi).clone();
                        Some((clo, hi))
                    }
                    Some(done) => {
                        merged.push(EdgeInterval {
                            edge,
                            lo: done.0,
                            hi: done.1,
                        });
                        Some((lo, hi))
                    }
                    None => Some((lo, hi)),
                };
            }
            if let Some((lo, hi)) = current {
                merged.push(EdgeInterval { edge, lo, hi });
            }
        }
        let solid: Vec<Point> = merged
            .iter()
            .filter(|iv| !iv.is_degenerate())
            .flat_map(|iv| [graph.point(iv.edge, &iv.lo), graph.point(iv.edge, &iv.hi)])
            .collect();
        let mut seen_points: Vec<Point> = Vec::new();
        let mut out = Vec::with_capacity(merged.len());
        for iv in merged {
            if iv.is_degenerate() {
                let p = graph.point(iv.edge, &iv.lo);
                if solid.contains(&p) || seen_points.contains(&p) {
                    continue;
                }
                seen_points.push(p);
            }
            out.push(iv);
        }
        Share::new(out)
    }
}

/// Piecewise-constant density on `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepDensity {
    breakpoints: Vec<Q>,
    values: Vec<Q>,
}

impl StepDensity {
    pub fn new(breakpoints: Vec<Q>, values: Vec<Q>) -> Result<StepDensity> {
        if breakpoints.len() < 2 || values.len() + 1 != breakpoints.len() {
            return Err(Error::InvalidDensity(
                "need n+1 breakpoints for n pieces".into(),
            ));
        }
        if !breakpoints[0].is_zero() || !breakpoints[breakpoints.len() - 1].is_one() {
            return Err(Error::InvalidDensity("breakpoints must span [0, 1]".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidDensity(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| v.is_negative()) {
            return Err(Error::InvalidDensity("negative density".into()));
        }
        Ok(StepDensity { breakpoints, values })
    }

    pub fn uniform(value: Q) -> StepDensity {
        StepDensity {
            breakpoints: vec![Q::zero(), Q::one()],
            values: vec![value],
        }
    }

    pub fn breakpoints(&self) -> &[Q] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[Q] {
        &self.values
    }

    pub fn pieces(&self) -> impl Iterator<Item = (&Q, &Q, &Q)> {
        self.breakpoints
            .windows(2)
            .zip(self.values.iter())
            .map(|(w, v)| (&w[0], &w[1], v))
    }

    pub fn integral(&self, a: &Q, b: &Q) -> Q {
        let mut total = Q::zero();
        for (s, e, v) in self.pieces() {
            if v.is_zero() || e <= a || s >= b {
                continue;
            }
            let len = min_q(e, b) - max_q(s, a);
            total += len * v;
        }
        total
    }

    pub fn total(&self) -> Q {
        self.pieces().map(|(s, e, v)| (e - s) * v).sum()
    }

    /// Smallest `y` in `[a, limit]` with `integral(a, y) = target`.
    pub fn cut_from_lo(&self, a: &Q, limit: &Q, target: &Q) -> Option<Q> {
        if target.is_zero() {
            return Some(a.clone());
        }
        let mut remaining = target.clone();
        for (s, e, v) in self.pieces() {
            if e <= a || v.is_zero() {
                continue;
            }
            if s >= limit {
                break;
            }
            let start = max_q(s, a);
            let end = min_q(e, limit);
            let capacity = (end - start) * v;
            if capacity >= remaining {
                return Some(start + remaining / v);
            }
            remaining -= capacity;
        }
        None
    }

    /// Largest `y` in `[limit, b]` with `integral(y, b) = target`.
    pub fn cut_from_hi(&self, b: &Q, limit: &Q, target: &Q) -> Option<Q> {
        if target.is_zero() {
            return Some(b.clone());
        }
        let mut remaining = target.clone();
        for (s, e, v) in self.pieces().collect::<Vec<_>>().into_iter().rev() {
            if s >= b || v.is_zero() {
                continue;
            }
            if e <= limit {
                break;
            }
            let start = max_q(s, limit);
            let end = min_q(e, b);
            let capacity = (end - start) * v;
            if capacity >= remaining {
                return Some(end - remaining / v);
            }
            remaining -= capacity;
        }
        None
    }

    /// Density seen from the other endpoint.
    pub fn reversed(&self) -> StepDensity {
        StepDensity {
            breakpoints: self
                .breakpoints
                .iter()
                .rev()
                .map(|b| Q::one() - b)
                .collect(),
            values: self.values.iter().rev().cloned().collect(),
        }
    }

    /// Same function with equal neighbouring pieces merged.
    pub fn canonical(&self) -> StepDensity {
        let mut breakpoints = vec![Q::zero()];
        let mut values: Vec<Q> = Vec::new();
        for (_, e, v) in self.pieces() {
            if values.last() == Some(v) {
                *breakpoints.last_mut().unwrap() = e.clone();
            } else {
                values.push(v.clone());
                breakpoints.push(e.clone());
            }
        }
        StepDensity { breakpoints, values }
    }

    pub fn scaled(&self, factor: &Q) -> StepDensity {
        StepDensity {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Connected graph plus one normalized valuation per agent (agent `i` has id `i + 1`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    graph: Graph,
    valuations: Vec<Vec<StepDensity>>,
}

impl Instance {
    pub fn new(graph: Graph, valuations: Vec<Vec<StepDensity>>) -> Result<Instance> {
        if valuations.is_empty() {
            return Err(Error::Malformed("instance has no agents".into()));
        }
        for (agent, row) in valuations.iter().enumerate() {
            if row.len() != graph.edge_count() {
                return Err(Error::Malformed(format!(
                    "agent {} values {} edges, graph has {}",
                    agent + 1,
                    row.len(),
                    graph.edge_count()
                )));
            }
            let total: Q = row.iter().map(StepDensity::total).sum();
            if !total.is_one() {
                return Err(Error::NotNormalized {
                    agent: agent + 1,
                    total,
                });
            }
        }
        Ok(Instance { graph, valuations })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn agent_count(&self) -> usize {
        self.valuations.len()
    }

    pub fn density(&self, agent: usize, edge: EdgeId) -> &StepDensity {
        &self.valuations[agent][edge.0]
    }

    pub fn valuations(&self) -> &[Vec<StepDensity>] {
        &self.valuations
    }

    pub fn interval_value(&self, agent: usize, iv: &EdgeInterval) -> Q {
        self.density(agent, iv.edge).integral(&iv.lo, &iv.hi)
    }

    pub fn value(&self, agent: usize, share: &Share) -> Q {
        share
            .intervals
            .iter()
            .map(|iv| self.interval_value(agent, iv))
            .sum()
    }

    pub fn whole_cake(&self) -> Share {
        Share::whole(&self.graph)
    }

    pub fn is_identical(&self) -> bool {
        let first: Vec<StepDensity> = self.valuations[0].iter().map(|d| d.canonical()).collect();
        self.valuations[1..].iter().all(|row| {
            row.iter()
                .zip(first.iter())
                .all(|(d, f)| d.canonical() == *f)
        })
    }

    fn check_interval(&self, agent: usize, iv: &EdgeInterval) -> Result<()> {
        if agent >= self.agent_count() {
            return Err(Error::UnknownAgent(agent));
        }
        if iv.edge.0 >= self.graph.edge_count() {
            return Err(Error::UnknownEdge(format!("#{}", iv.edge.0)));
        }
        EdgeInterval::new(iv.edge, iv.lo.clone(), iv.hi.clone()).map(|_| ())
    }
}

/// Value of `share` to `agent`: the sum of density integrals over its intervals.
pub fn eval(instance: &Instance, agent: usize, share: &Share) -> Result<Q> {
    for iv in &share.intervals {
        instance.check_interval(agent, iv)?;
    }
    Ok(instance.value(agent, share))
}

/// Point nearest `anchor` whose segment from the anchor is worth exactly `target`.
pub fn cut(
    instance: &Instance,
    agent: usize,
    interval: &EdgeInterval,
    anchor: AnchorEnd,
    target: &Q,
) -> Result<PointOnEdge> {
    instance.check_interval(agent, interval)?;
    let density = instance.density(agent, interval.edge);
    let available = density.integral(&interval.lo, &interval.hi);
    if target.is_negative() || target > &available {
        return Err(Error::CutOutOfRange {
            target: Box::new(target.clone()),
            available: Box::new(available),
        });
    }
    let position = match anchor {
        AnchorEnd::Lo => density.cut_from_lo(&interval.lo, &interval.hi, target),
        AnchorEnd::Hi => density.cut_from_hi(&interval.hi, &interval.lo, target),
    }
    .ok_or_else(|| Error::Invariant("cut target within range but not reached".into()))?;
    Ok(PointOnEdge {
        edge: interval.edge,
        position,
    })
}

/// One share per agent, indexed by agent.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Allocation {
    pub shares: Vec<Share>,
}

impl Allocation {
    pub fn new(shares: Vec<Share>) -> Allocation {
        Allocation { shares }
    }

    pub fn values(&self, instance: &Instance, agent: usize) -> Vec<Q> {
        self.shares
            .iter()
            .map(|s| instance.value(agent, s))
            .collect()
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Maximal connected pieces of a share, in order of their first interval.
pub fn components(graph: &Graph, share: &Share) -> Vec<Share> {
    let share = share.normalized(graph);
    let n = share.intervals.len();
    let mut uf = UnionFind::new(n);
    let mut owner: HashMap<Point, usize> = HashMap::new();
    for (i, iv) in share.intervals.iter().enumerate() {
        for p in [graph.point(iv.edge, &iv.lo), graph.point(iv.edge, &iv.hi)] {
            match owner.get(&p) {
                Some(&j) => uf.union(i, j),
                None => {
                    owner.insert(p, i);
                }
            }
        }
    }
    let mut groups: Vec<(usize, Share)> = Vec::new();
    for (i, iv) in share.intervals.iter().enumerate() {
        let root = uf.find(i);
        match groups.iter_mut().find(|(r, _)| *r == root) {
            Some((_, s)) => s.intervals.push(iv.clone()),
            None => groups.push((root, Share::new(vec![iv.clone()]))),
        }
    }
    groups.into_iter().map(|(_, s)| s).collect()
}

pub fn is_connected(graph: &Graph, share: &Share) -> bool {
    components(graph, share).len() <= 1
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Overlap {
    pub agents: (usize, usize),
    pub segment: EdgeInterval,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidityReport {
    pub overlaps: Vec<Overlap>,
    pub gaps: Vec<EdgeInterval>,
    pub disconnected: Vec<usize>,
}

impl ValidityReport {
    pub fn disjoint(&self) -> bool {
        self.overlaps.is_empty()
    }

    pub fn complete(&self) -> bool {
        self.gaps.is_empty()
    }

    pub fn connected(&self) -> bool {
        self.disconnected.is_empty()
    }

    pub fn is_valid(&self) -> bool {
        self.disjoint() && self.complete() && self.connected()
    }

    pub fn is_valid_partial(&self) -> bool {
        self.disjoint() && self.connected()
    }
}

pub fn validate_allocation(instance: &Instance, allocation: &Allocation) -> ValidityReport {
    let graph = instance.graph();
    let mut report = ValidityReport::default();
    let mut per_edge: Vec<Vec<(Q, Q, usize)>> = vec![Vec::new(); graph.edge_count()];
    for (agent, share) in allocation.shares.iter().enumerate() {
        for iv in &share.intervals {
            if iv.edge.0 < per_edge.len() && !iv.is_degenerate() {
                per_edge[iv.edge.0].push((iv.lo.clone(), iv.hi.clone(), agent));
            }
        }
        if !is_connected(graph, share) {
            report.disconnected.push(agent);
        }
    }
    for (e, mut spans) in per_edge.into_iter().enumerate() {
        let edge = EdgeId(e);
        spans.sort();
        let mut covered = Q::zero();
        let mut holder: Option<usize> = None;
        for (lo, hi, agent) in spans {
            if lo > covered {
                report.gaps.push(EdgeInterval {
                    edge,
                    lo: covered.clone(),
                    hi: lo.clone(),
                });
            } else if lo < covered {
                report.overlaps.push(Overlap {
                    agents: (holder.unwrap_or(agent), agent),
                    segment: EdgeInterval {
                        edge,
                        lo: lo.clone(),
                        hi: min_q(&covered, &hi).clone(),
                    },
                });
            }
            if hi > covered {
                covered = hi;
                holder = Some(agent);
            }
        }
        if !covered.is_one() {
            report.gaps.push(EdgeInterval {
                edge,
                lo: covered,
                hi: Q::one(),
            });
        }
    }
    report
}
