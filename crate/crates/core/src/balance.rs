//! Min-max paths and the recursive balancing loop for identical valuations.

use std::collections::VecDeque;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::divide::divide;
use crate::error::{ensure, Error, Result};
use crate::fairness::pseudo_ef_of_values;
use crate::general::{iterative_divide, IterativeRun, ThresholdSchedule};
use crate::model::{validate_allocation, Allocation, Graph, Instance, Point, Share};
use crate::query::Oracle;
use crate::rational::{floor_to_u64, qi, Q};
use crate::star::clamp_epsilon;

/// Indices into an allocation, chaining a minimum share to a maximum one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinMaxPath {
    pub shares: Vec<usize>,
}

impl MinMaxPath {
    pub fn len(&self) -> usize {
        self.shares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shares.is_empty()
    }
}

pub fn shares_touch(graph: &Graph, a: &Share, b: &Share) -> bool {
    a.endpoint_points(graph).iter().any(|p| b.contains_point(graph, p))
        || b.endpoint_points(graph).iter().any(|p| a.contains_point(graph, p))
}

fn common_points(graph: &Graph, a: &Share, b: &Share) -> Vec<Point> {
    let mut points: Vec<Point> = a
        .endpoint_points(graph)
        .into_iter()
        .chain(b.endpoint_points(graph))
        .filter(|p| a.contains_point(graph, p) && b.contains_point(graph, p))
        .collect();
    points.sort();
    points.dedup();
    points
}

/// Smallest vertex of the share, else its smallest interval endpoint.
fn anchor_in(graph: &Graph, share: &Share) -> Result<Point> {
    share
        .endpoint_points(graph)
        .into_iter()
        .next()
        .ok_or_else(|| Error::Invariant("empty share on a min-max path".into()))
}

/// Breadth-first search in the share contact graph from the smallest-index
/// minimum share to the smallest-index maximum share.
pub fn min_max_path(instance: &Instance, allocation: &Allocation) -> Result<MinMaxPath> {
    if !instance.is_identical() {
        return Err(Error::NotIdentical);
    }
    let graph = instance.graph();
    let values = allocation.values(instance, 0);
    let n = values.len();
    if n == 0 {
        return Err(Error::EmptyAgentSet);
    }
    let lowest = (0..n).min_by(|&a, &b| values[a].cmp(&values[b]).then(a.cmp(&b))).unwrap();
    let highest = (0..n).min_by(|&a, &b| values[b].cmp(&values[a]).then(a.cmp(&b))).unwrap();
    if values[lowest] == values[highest] {
        return Ok(MinMaxPath { shares: vec![lowest] });
    }
    let shares = &allocation.shares;
    let mut parent = vec![usize::MAX; n];
    parent[lowest] = lowest;
    let mut queue = VecDeque::from([lowest]);
    while let Some(u) = queue.pop_front() {
        if u == highest {
            break;
        }
        for w in 0..n {
            if parent[w] == usize::MAX && shares_touch(graph, &shares[u], &shares[w]) {
                parent[w] = u;
                queue.push_back(w);
            }
        }
    }
    if parent[highest] == usize::MAX {
        return Err(Error::Invariant("share contact graph is disconnected".into()));
    }
    let mut path = vec![highest];
    while *path.last().unwrap() != lowest {
        path.push(parent[*path.last().unwrap()]);
    }
    path.reverse();
    Ok(MinMaxPath { shares: path })
}

/// Which value pattern a balanced path follows; indices are 0-based path positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum PathCase {
    /// The first share already meets the lower threshold.
    Unchanged,
    /// Stopped at a position whose trimmed share met the lower threshold.
    Case1 { at: usize },
    /// Merged two neighbours and split the maximum share into two.
    Case2 { at: usize },
    /// Every share was rebalanced and the last one shrank.
    Case3,
}

#[derive(Clone, Debug)]
pub struct BalancedPath {
    pub shares: Vec<Share>,
    pub case: PathCase,
}

/// Rebalances the shares of a min-max path, as listed from minimum to maximum.
pub fn balance_path(oracle: &Oracle, path: &[Share], epsilon: &Q) -> Result<BalancedPath> {
    let instance = oracle.instance();
    let graph = oracle.graph();
    let d = path.len();
    ensure(d >= 1, || "empty min-max path".into())?;
    let everyone: Vec<usize> = (0..oracle.agent_count()).collect();
    let before: Vec<Q> = path.iter().map(|s| oracle.eval(0, s)).collect();
    let gamma = before[d - 1].clone();
    let low = &gamma / (qi(2) + epsilon);
    let high = &low + &low;

    let mut shares = path.to_vec();
    let mut case = PathCase::Case3;
    for i in 0..d.saturating_sub(1) {
        if oracle.eval(0, &shares[i]) >= low {
            case = if i == 0 { PathCase::Unchanged } else { PathCase::Case1 { at: i } };
            break;
        }
        let merged = shares[i].union(&shares[i + 1]).normalized(graph);
        if oracle.eval(0, &merged) < high {
            shares[i] = merged;
            let root = anchor_in(graph, &shares[d - 1])?;
            let out = divide(oracle, &shares[d - 1], &everyone, &(&gamma / qi(3)), &root)?;
            shares[i + 1] = out.first;
            shares[d - 1] = out.second;
            case = PathCase::Case2 { at: i };
            break;
        }
        let root = if i + 1 == d - 1 {
            anchor_in(graph, &shares[d - 1])?
        } else {
            common_points(graph, &shares[i + 1], &shares[i + 2])
                .into_iter()
                .next()
                .ok_or_else(|| Error::Invariant(format!("path positions {} and {} do not touch", i + 2, i + 3)))?
        };
        let out = divide(oracle, &merged, &everyone, &low, &root)?;
        shares[i] = out.first;
        shares[i + 1] = out.second;
    }
    if d == 1 {
        case = PathCase::Unchanged;
    }
    let after: Vec<Q> = shares.iter().map(|s| instance.value(0, s)).collect();
    check_path_case(case, &before, &after, epsilon)?;
    Ok(BalancedPath { shares, case })
}

/// Exact check of the value pattern promised for each case.
pub fn check_path_case(case: PathCase, before: &[Q], after: &[Q], epsilon: &Q) -> Result<()> {
    let d = before.len();
    let gamma = &before[d - 1];
    let low = gamma / (qi(2) + epsilon);
    let high = &low + &low;
    let quarter = gamma / qi(4);
    let total_before: Q = before.iter().sum();
    let total_after: Q = after.iter().sum();
    ensure(total_before == total_after, || {
        format!("path value changed from {total_before} to {total_after}")
    })?;
    let band = |j: usize, lo: &Q| &after[j] >= lo && after[j] < high;
    let kept = |j: usize| after[j] == before[j];
    let ok = match case {
        PathCase::Unchanged => (0..d).all(kept),
        PathCase::Case1 { at } => {
            (1..d - 1).contains(&at)
                && (0..at).all(|j| band(j, &low))
                && after[at] >= low
                && after[at] < before[at]
                && (at + 1..d).all(kept)
        }
        PathCase::Case2 { at } => {
            at + 3 <= d
                && (0..=at + 1).chain([d - 1]).all(|j| band(j, &quarter))
                && (at + 2..d - 1).all(kept)
        }
        PathCase::Case3 => {
            (0..d - 1).all(|j| band(j, &low)) && after[d - 1] > Q::zero() && &after[d - 1] < gamma
        }
    };
    ensure(ok, || {
        let show = |v: &[Q]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        format!("{case:?} pattern violated: before [{}], after [{}]", show(before), show(after))
    })
}

pub fn call_limit(n: usize, epsilon: &Q) -> u64 {
    floor_to_u64(&(qi(5 * (n * n) as i64) / epsilon))
}

#[derive(Clone, Debug)]
pub struct BalanceRun {
    pub allocation: Allocation,
    pub calls: u64,
    pub cases: Vec<PathCase>,
}

fn ratio_within(values: &[Q], bound: &Q) -> bool {
    let min = values.iter().min().cloned().unwrap_or_else(Q::zero);
    let max = values.iter().max().cloned().unwrap_or_else(Q::zero);
    !min.is_zero() && max <= min * bound
}

pub fn recursive_balance(
    oracle: &Oracle,
    allocation: &Allocation,
    epsilon: &Q,
    max_calls: Option<u64>,
) -> Result<BalanceRun> {
    let instance = oracle.instance();
    if !instance.is_identical() {
        return Err(Error::NotIdentical);
    }
    let epsilon = clamp_epsilon(epsilon)?;
    let graph = instance.graph();
    let n = allocation.shares.len();
    let limit = max_calls.unwrap_or_else(|| call_limit(n, &epsilon));
    let target = qi(2) + &epsilon;
    let four = qi(4);
    let mut current = allocation.clone();
    let mut values = current.values(instance, 0);
    if n >= 2 && !ratio_within(&values, &target) {
        ensure(pseudo_ef_of_values(&values).is_some_and(|r| r <= four), || {
            "balancing needs a pseudo-4-EF starting allocation".into()
        })?;
    }
    let mut calls = 0u64;
    let mut cases = Vec::new();
    while n >= 2 && !ratio_within(&values, &target) {
        if calls >= limit {
            return Err(Error::CallLimit(limit));
        }
        calls += 1;
        let path = min_max_path(instance, &current)?;
        ensure(path.len() >= 2, || "min-max path of length one on an unbalanced allocation".into())?;
        let listed: Vec<Share> = path.shares.iter().map(|&j| current.shares[j].clone()).collect();
        let out = balance_path(oracle, &listed, &epsilon)?;
        for (&j, share) in path.shares.iter().zip(out.shares) {
            current.shares[j] = share.normalized(graph);
        }
        cases.push(out.case);

        let next = current.values(instance, 0);
        let total: Q = next.iter().sum();
        ensure(total.is_one(), || format!("balance call {calls} changed the total to {total}"))?;
        ensure(validate_allocation(instance, &current).is_valid(), || {
            format!("balance call {calls} produced an invalid allocation")
        })?;
        ensure(pseudo_ef_of_values(&next).is_some_and(|r| r <= four), || {
            format!("balance call {calls} broke pseudo-4-EF")
        })?;
        let (old_max, new_max) = (values.iter().max().unwrap(), next.iter().max().unwrap());
        ensure(new_max <= old_max, || {
            format!("balance call {calls} raised the maximum from {old_max} to {new_max}")
        })?;
        log::debug!("balance call {calls}: {:?}", out.case);
        values = next;
    }
    Ok(BalanceRun {
        allocation: current,
        calls,
        cases,
    })
}

#[derive(Clone, Debug)]
pub struct TwoEpsRun {
    pub seed: IterativeRun,
    pub balance: BalanceRun,
}

/// Adaptive carving into a 4-EF seed, followed by recursive balancing.
pub fn identical_two_eps(oracle: &Oracle, epsilon: &Q, max_calls: Option<u64>) -> Result<TwoEpsRun> {
    if !oracle.instance().is_identical() {
        return Err(Error::NotIdentical);
    }
    let epsilon = clamp_epsilon(epsilon)?;
    let seed = iterative_divide(oracle, ThresholdSchedule::AdaptiveIdentical, None)?;
    let balance = recursive_balance(oracle, &seed.allocation, &epsilon, max_calls)?;
    Ok(TwoEpsRun { seed, balance })
}
