//! Bag filling on stars with identical valuations.

use num_traits::{One, Zero};

use crate::error::{ensure, Error, Result};
use crate::model::{validate_allocation, Allocation, EdgeInterval, Share};
use crate::query::Oracle;
use crate::rational::{qi, Q};

#[derive(Clone, Debug)]
pub struct Peel {
    pub agent: usize,
    pub segment: EdgeInterval,
}

/// Stub groups merged so far, each keyed by the star edges it spans.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StubGroup {
    pub edges: Vec<usize>,
    pub value: Q,
}

#[derive(Clone, Debug)]
pub struct BagFillRun {
    pub allocation: Allocation,
    pub peels: Vec<Peel>,
    /// Values of the groups created by successive merges.
    pub merges: Vec<Q>,
    pub groups: Vec<StubGroup>,
    pub unserved: usize,
}

pub fn star_identical_2ef(oracle: &Oracle) -> Result<BagFillRun> {
    let instance = oracle.instance();
    let graph = oracle.graph();
    let star = graph.star()?;
    if !instance.is_identical() {
        return Err(Error::NotIdentical);
    }
    let n = oracle.agent_count();
    let m = star.len();
    if n == 1 {
        return Ok(BagFillRun {
            allocation: Allocation::new(vec![instance.whole_cake()]),
            peels: Vec::new(),
            merges: Vec::new(),
            groups: Vec::new(),
            unserved: 0,
        });
    }
    let unit = Q::one() / qi(n as i64);
    let mut start = vec![Q::zero(); m];
    let stub = |k: usize, start: &[Q]| star.interval(k, &start[k], &Q::one());
    let mut peels: Vec<Peel> = Vec::new();
    while peels.len() < n {
        let Some(k) = (0..m).find(|&k| oracle.eval_interval(0, &stub(k, &start)) >= unit) else {
            break;
        };
        let agent = peels.len();
        let remainder = stub(k, &start);
        let hit = oracle.cut(agent, &remainder, star.leaf_anchor(k), &unit)?;
        let end = star.to_position(k, &hit.position);
        let segment = star.interval(k, &start[k], &end);
        ensure(instance.interval_value(0, &segment) == unit, || {
            format!("peel on edge {} is not worth 1/{n}", graph.edge_name(star.edges[k]))
        })?;
        peels.push(Peel { agent, segment });
        start[k] = end;
    }
    let k = n - peels.len();
    let stubs: Vec<Share> = (0..m).map(|e| Share::new(vec![stub(e, &start)])).collect();
    let stub_total: Q = stubs.iter().map(|s| instance.value(0, s)).sum();
    ensure(stub_total == qi(k as i64) * &unit, || {
        format!("stubs are worth {stub_total}, expected {k}/{n}")
    })?;

    let mut shares: Vec<Share> = vec![Share::empty(); n];
    for p in &peels {
        shares[p.agent] = Share::new(vec![p.segment.clone()]);
    }
    let mut merges = Vec::new();
    let mut groups: Vec<StubGroup> = (0..m)
        .map(|e| StubGroup {
            edges: vec![e],
            value: instance.value(0, &stubs[e]),
        })
        .collect();
    if k == 0 {
        let last = peels.last().expect("n >= 2 peels when nobody is left").agent;
        let leftover = stubs.iter().fold(shares[last].clone(), |acc, s| acc.union(s));
        shares[last] = leftover;
    } else {
        while groups.len() > k {
            groups.sort_by(|a, b| a.value.cmp(&b.value).then(a.edges[0].cmp(&b.edges[0])));
            let b = groups.remove(1);
            let a = groups.remove(0);
            let mut edges = [a.edges, b.edges].concat();
            edges.sort_unstable();
            let value = a.value + b.value;
            if let Some(previous) = merges.last() {
                ensure(&value >= previous, || "merged group values decreased".into())?;
            }
            merges.push(value.clone());
            groups.push(StubGroup { edges, value });
        }
        groups.sort_by_key(|g| g.edges[0]);
        let waiting = peels.len()..n;
        for (agent, group) in waiting.zip(&groups) {
            shares[agent] = group.edges.iter().fold(Share::empty(), |acc, &e| acc.union(&stubs[e]));
        }
        if let Some(top) = merges.last() {
            ensure(top <= &(qi(2) * &unit), || format!("largest group {top} exceeds 2/{n}"))?;
        }
    }

    let allocation = Allocation::new(shares.iter().map(|s| s.normalized(graph)).collect());
    let values = allocation.values(instance, 0);
    let max = values.iter().max().cloned().unwrap_or_else(Q::zero);
    for (agent, v) in values.iter().enumerate() {
        ensure(v * qi(2) >= max, || {
            format!("agent {} holds {v}, less than half of {max}", agent + 1)
        })?;
    }
    ensure(validate_allocation(instance, &allocation).is_valid(), || {
        "bag filling produced an invalid allocation".into()
    })?;
    Ok(BagFillRun {
        allocation,
        peels,
        merges,
        groups,
        unserved: k,
    })
}
