//! Four-phase protocol for stars with arbitrary valuations.
//!
//! Each edge is split at `x_k` into an inner part (leaf side) and a short outer
//! part next to the center that nobody values above `eps'/m`. Agents then trade
//! up by exactly `eps'` at a time on the inner parts until no trade is possible,
//! and the leftovers are handed out so every share stays connected.
//!
//! Positions inside this module are leaf coordinates: 0 at the leaf, 1 at the center.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::model::{validate_allocation, Allocation, EdgeInterval, Share, Star};
use crate::query::Oracle;
use crate::rational::{format_q, qi, Q};

#[derive(Clone, Debug)]
pub struct StarLayout {
    pub star: Star,
    pub epsilon: Q,
    pub eps_prime: Q,
    /// `x_k` for every edge.
    pub cuts: Vec<Q>,
}

impl StarLayout {
    pub fn edge_count(&self) -> usize {
        self.star.len()
    }

    pub fn segment(&self, k: usize, a: &Q, b: &Q) -> EdgeInterval {
        self.star.interval(k, a, b)
    }

    pub fn inner(&self, k: usize) -> EdgeInterval {
        self.segment(k, &Q::zero(), &self.cuts[k])
    }

    pub fn outer(&self, k: usize) -> EdgeInterval {
        self.segment(k, &self.cuts[k], &Q::one())
    }
}

/// Clamps `epsilon` into `(0, 1)`: values at or above 1 become `1 - 1/1024`.
pub fn clamp_epsilon(epsilon: &Q) -> Result<Q> {
    if epsilon <= &Q::zero() {
        return Err(Error::BadEpsilon(epsilon.clone()));
    }
    if epsilon >= &Q::one() {
        let clamped = Q::one() - crate::rational::q(1, 1024);
        log::warn!("epsilon {epsilon} clamped to {clamped}");
        return Ok(clamped);
    }
    Ok(epsilon.clone())
}

pub fn prepare_layout(oracle: &Oracle, epsilon: &Q) -> Result<StarLayout> {
    let star = oracle.graph().star()?;
    let m = star.len();
    if epsilon <= &Q::zero() || epsilon >= &Q::one() {
        return Err(Error::BadEpsilon(epsilon.clone()));
    }
    let n = oracle.agent_count();
    let eps_prime = epsilon / qi(16 * (n * m) as i64);
    let limit = &eps_prime / qi(m as i64);
    let mut cuts = Vec::with_capacity(m);
    for k in 0..m {
        let edge = EdgeInterval::full(star.edges[k]);
        let mut x = Q::zero();
        for agent in 0..n {
            let total = oracle.eval_interval(agent, &edge);
            if total <= limit {
                continue;
            }
            let p = oracle.cut(agent, &edge, star.leaf_anchor(k), &(total - &limit))?;
            let t = star.to_position(k, &p.position);
            if t > x {
                x = t;
            }
        }
        cuts.push(x);
    }
    Ok(StarLayout {
        star,
        epsilon: epsilon.clone(),
        eps_prime,
        cuts,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Holding {
    Nothing,
    /// Leaf coordinates `[a, b]` inside the inner part of edge `k`.
    Segment { k: usize, a: Q, b: Q },
    /// Whole edges, joined at the center.
    Edges(Vec<usize>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tag {
    Unserved,
    /// Last trade took an inner segment.
    Segment,
    /// Last trade took whole edges.
    Edges,
}

#[derive(Clone, Debug)]
pub struct PhaseState {
    pub holdings: Vec<Holding>,
    pub values: Vec<Q>,
    pub tags: Vec<Tag>,
    pub last_segment_trader: Option<usize>,
    pub iteration: u64,
}

impl PhaseState {
    pub fn empty(n: usize) -> PhaseState {
        PhaseState {
            holdings: vec![Holding::Nothing; n],
            values: vec![Q::zero(); n],
            tags: vec![Tag::Unserved; n],
            last_segment_trader: None,
            iteration: 0,
        }
    }

    pub fn share(&self, layout: &StarLayout, agent: usize) -> Share {
        holding_share(layout, &self.holdings[agent])
    }

    pub fn partial_allocation(&self, layout: &StarLayout) -> Allocation {
        Allocation::new(
            (0..self.holdings.len())
                .map(|i| self.share(layout, i))
                .collect(),
        )
    }

    fn segments_on(&self, k: usize) -> Vec<(Q, Q, usize)> {
        let mut out: Vec<(Q, Q, usize)> = self
            .holdings
            .iter()
            .enumerate()
            .filter_map(|(i, h)| match h {
                Holding::Segment { k: kk, a, b } if *kk == k => Some((a.clone(), b.clone(), i)),
                _ => None,
            })
            .collect();
        out.sort();
        out
    }

    fn edges_taken(&self, k: usize) -> bool {
        self.holdings
            .iter()
            .any(|h| matches!(h, Holding::Edges(ks) if ks.contains(&k)))
    }

    /// Maximal unallocated intervals of positive length inside the inner part of edge `k`.
    pub fn free_gaps(&self, layout: &StarLayout, k: usize) -> Vec<(Q, Q)> {
        if self.edges_taken(k) {
            return Vec::new();
        }
        gaps_between(&self.segments_on(k), &layout.cuts[k])
    }
}

fn gaps_between(segments: &[(Q, Q, usize)], end: &Q) -> Vec<(Q, Q)> {
    let mut gaps = Vec::new();
    let mut cursor = Q::zero();
    for (a, b, _) in segments {
        if a > &cursor {
            gaps.push((cursor.clone(), a.clone()));
        }
        if b > &cursor {
            cursor = b.clone();
        }
    }
    if end > &cursor {
        gaps.push((cursor, end.clone()));
    }
    gaps
}

pub fn holding_share(layout: &StarLayout, holding: &Holding) -> Share {
    match holding {
        Holding::Nothing => Share::empty(),
        Holding::Segment { k, a, b } => Share::new(vec![layout.segment(*k, a, b)]),
        Holding::Edges(ks) => Share::new(
            ks.iter()
                .map(|&k| EdgeInterval::full(layout.star.edges[k]))
                .collect(),
        ),
    }
}

/// Inner-part restriction of a holding.
pub fn inner_share(layout: &StarLayout, holding: &Holding) -> Share {
    match holding {
        Holding::Edges(ks) => Share::new(ks.iter().map(|&k| layout.inner(k)).collect()),
        other => holding_share(layout, other),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TradeKind {
    Segment,
    Edges,
}

#[derive(Clone, Debug, Serialize)]
pub struct TradeEvent {
    pub iteration: u64,
    pub phase: TradeKind,
    pub trader: usize,
    #[serde(serialize_with = "serialize_q")]
    pub value: Q,
}

fn serialize_q<S: serde::Serializer>(value: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_q(value))
}

/// One trade, or `None` once no agent can improve by `eps'`.
pub fn phase2_step(
    oracle: &Oracle,
    layout: &StarLayout,
    state: &PhaseState,
) -> Result<Option<(PhaseState, TradeEvent)>> {
    let n = state.values.len();
    let targets: Vec<Q> = state.values.iter().map(|v| v + &layout.eps_prime).collect();

    for k in 0..layout.edge_count() {
        for (a, b) in state.free_gaps(layout, k) {
            let gap = layout.segment(k, &a, &b);
            let worth: Vec<Q> = (0..n).map(|i| oracle.eval_interval(i, &gap)).collect();
            if !(0..n).any(|i| worth[i] >= targets[i]) {
                continue;
            }
            let from_leaf = a.is_zero();
            let anchor = if from_leaf {
                layout.star.leaf_anchor(k)
            } else {
                layout.star.center_anchor(k)
            };
            let mut best: Option<(Q, usize)> = None;
            for i in 0..n {
                if worth[i] < targets[i] {
                    continue;
                }
                let p = oracle.cut(i, &gap, anchor, &targets[i])?;
                let z = layout.star.to_position(k, &p.position);
                let better = match &best {
                    None => true,
                    Some((bz, _)) => {
                        if from_leaf {
                            z < *bz
                        } else {
                            z > *bz
                        }
                    }
                };
                if better {
                    best = Some((z, i));
                }
            }
            let (z, trader) = best.expect("a qualifying agent exists");
            let holding = if from_leaf {
                Holding::Segment { k, a, b: z }
            } else {
                Holding::Segment { k, a: z, b }
            };
            let mut next = state.clone();
            next.holdings[trader] = holding;
            next.values[trader] = targets[trader].clone();
            next.tags[trader] = Tag::Segment;
            next.last_segment_trader = Some(trader);
            next.iteration += 1;
            let event = TradeEvent {
                iteration: next.iteration,
                phase: TradeKind::Segment,
                trader,
                value: targets[trader].clone(),
            };
            return Ok(Some((next, event)));
        }
    }

    let free: Vec<usize> = (0..layout.edge_count())
        .filter(|&k| !state.edges_taken(k) && state.segments_on(k).is_empty())
        .collect();
    let inner_worth: Vec<Vec<Q>> = free
        .iter()
        .map(|&k| (0..n).map(|i| oracle.eval_interval(i, &layout.inner(k))).collect())
        .collect();
    let totals: Vec<Q> = (0..n)
        .map(|i| inner_worth.iter().map(|row| &row[i]).sum())
        .collect();
    if !(0..n).any(|i| totals[i] >= targets[i]) {
        return Ok(None);
    }
    let mut sums = vec![Q::zero(); n];
    let mut chosen = Vec::new();
    for (idx, &k) in free.iter().enumerate() {
        chosen.push(k);
        for (i, sum) in sums.iter_mut().enumerate() {
            *sum += &inner_worth[idx][i];
        }
        if let Some(trader) = (0..n).find(|&i| sums[i] >= targets[i]) {
            let holding = Holding::Edges(chosen);
            let value = oracle.eval(trader, &holding_share(layout, &holding));
            let mut next = state.clone();
            next.holdings[trader] = holding;
            next.values[trader] = value.clone();
            next.tags[trader] = Tag::Edges;
            next.iteration += 1;
            let event = TradeEvent {
                iteration: next.iteration,
                phase: TradeKind::Edges,
                trader,
                value,
            };
            return Ok(Some((next, event)));
        }
    }
    Err(Error::Invariant("free inner parts qualified but no prefix did".into()))
}

/// Upper bound on the number of trades, `16 n^2 m / eps`.
pub fn iteration_bound(n: usize, m: usize, epsilon: &Q) -> Q {
    qi(16 * (n * n * m) as i64) / epsilon
}

/// Exact checks that hold once trading has stopped.
pub fn check_done(oracle: &Oracle, layout: &StarLayout, state: &PhaseState) -> Result<()> {
    let instance = oracle.instance();
    let n = state.values.len();
    let m = layout.edge_count();
    let floor = Q::one() / qi(4 * (n * m) as i64);
    for i in 0..n {
        ensure(state.values[i] >= floor, || {
            format!("agent {} holds {} < 1/(4nm)", i + 1, state.values[i])
        })?;
        ensure(state.tags[i] != Tag::Unserved, || {
            format!("agent {} never traded", i + 1)
        })?;
    }
    for i in 0..n {
        let cap = &state.values[i] + &layout.eps_prime;
        for j in 0..n {
            match state.tags[j] {
                Tag::Segment => {
                    let v = instance.value(i, &state.share(layout, j));
                    ensure(v <= cap, || {
                        format!("agent {} values segment of {} at {v} > {cap}", i + 1, j + 1)
                    })?;
                }
                Tag::Edges => {
                    let v = instance.value(i, &inner_share(layout, &state.holdings[j]));
                    let double = &cap + &cap;
                    ensure(v <= double, || {
                        format!("agent {} values edges of {} at {v} > {double}", i + 1, j + 1)
                    })?;
                }
                Tag::Unserved => {}
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct Finalized {
    pub allocation: Allocation,
    pub leftover_recipient: usize,
}

/// Hands out the remaining gaps inside inner parts and the leftover star.
pub fn finalize(oracle: &Oracle, layout: &StarLayout, state: &PhaseState) -> Result<Finalized> {
    let graph = oracle.graph();
    let n = state.values.len();
    let mut shares: Vec<Share> = (0..n).map(|i| state.share(layout, i)).collect();
    let mut multi_holder: Option<usize> = None;
    let mut leftover = Vec::new();

    for k in 0..layout.edge_count() {
        if state.edges_taken(k) {
            continue;
        }
        let segments = state.segments_on(k);
        if segments.is_empty() {
            leftover.push(EdgeInterval::full(layout.star.edges[k]));
            continue;
        }
        for (a, b) in gaps_between(&segments, &layout.cuts[k]) {
            let holder = if a.is_zero() {
                segments.iter().find(|s| s.0 == b).map(|s| s.2)
            } else {
                segments.iter().find(|s| s.1 == a).map(|s| s.2)
            }
            .ok_or_else(|| Error::Invariant(format!("gap on edge {k} has no neighbour")))?;
            shares[holder].intervals.push(layout.segment(k, &a, &b));
        }
        let mut holders: Vec<usize> = segments.iter().map(|s| s.2).collect();
        holders.sort_unstable();
        holders.dedup();
        if holders.len() >= 2 && multi_holder.is_none() {
            let top = segments.iter().max_by(|x, y| x.1.cmp(&y.1)).expect("nonempty");
            multi_holder = Some(top.2);
        }
        if layout.cuts[k] < Q::one() {
            leftover.push(layout.outer(k));
        }
    }

    let recipient = if let Some(i) = state.tags.iter().position(|t| *t == Tag::Edges) {
        i
    } else if let Some(i) = multi_holder {
        i
    } else {
        state
            .last_segment_trader
            .ok_or_else(|| Error::Invariant("no segment trader to take the leftover".into()))?
    };
    shares[recipient].intervals.extend(leftover);
    let allocation = Allocation::new(shares.into_iter().map(|s| s.normalized(graph)).collect());
    Ok(Finalized {
        allocation,
        leftover_recipient: recipient,
    })
}

#[derive(Clone, Debug)]
pub struct StarRun {
    pub allocation: Allocation,
    pub layout: Option<StarLayout>,
    pub state: Option<PhaseState>,
    pub events: Vec<TradeEvent>,
}

/// Connected allocation in which nobody envies anyone by more than a factor `3 + epsilon`.
pub fn star_three_eps(oracle: &Oracle, epsilon: &Q) -> Result<StarRun> {
    let instance = oracle.instance();
    let graph = oracle.graph();
    graph.star()?;
    let epsilon = clamp_epsilon(epsilon)?;
    let n = oracle.agent_count();
    if n == 1 {
        return Ok(StarRun {
            allocation: Allocation::new(vec![instance.whole_cake()]),
            layout: None,
            state: None,
            events: Vec::new(),
        });
    }
    let layout = prepare_layout(oracle, &epsilon)?;
    let bound = iteration_bound(n, layout.edge_count(), &epsilon);
    let stride = if cfg!(debug_assertions) { 1 } else { 64 };
    let mut state = PhaseState::empty(n);
    let mut events = Vec::new();
    while let Some((next, event)) = phase2_step(oracle, &layout, &state)? {
        ensure(next.values[event.trader] >= &state.values[event.trader] + &layout.eps_prime, || {
            format!("trade {} did not gain eps'", event.iteration)
        })?;
        ensure(qi(next.iteration as i64) <= bound, || {
            format!("trade count {} exceeds {bound}", next.iteration)
        })?;
        if next.iteration % stride == 0 {
            let report = validate_allocation(instance, &next.partial_allocation(&layout));
            ensure(report.is_valid_partial(), || {
                format!("partial allocation invalid after trade {}", next.iteration)
            })?;
        }
        log::trace!("trade {:?}", event);
        events.push(event);
        state = next;
    }
    let report = validate_allocation(instance, &state.partial_allocation(&layout));
    ensure(report.is_valid_partial(), || "partial allocation invalid at the end".into())?;
    check_done(oracle, &layout, &state)?;
    let finalized = finalize(oracle, &layout, &state)?;
    let allocation = finalized.allocation;
    let four_eps = qi(4) * &layout.eps_prime;
    let factor = qi(3) + &epsilon;
    for i in 0..n {
        let cap = qi(3) * &state.values[i] + &four_eps;
        let own = instance.value(i, &allocation.shares[i]);
        ensure(cap <= &factor * &own, || {
            format!("agent {}: 3 P + 4 eps' = {cap} exceeds (3 + eps) * {own}", i + 1)
        })?;
        for j in 0..n {
            let other = instance.value(i, &allocation.shares[j]);
            ensure(other <= cap, || {
                format!("agent {} values share {} at {other} > {cap}", i + 1, j + 1)
            })?;
        }
    }
    Ok(StarRun {
        allocation,
        layout: Some(layout),
        state: Some(state),
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::fairness_report;
    use crate::fixtures::{star3u, uniform_star};
    use crate::model::{Graph, Instance, StepDensity};
    use crate::rational::q;

    #[test]
    fn star3u_layout() {
        let inst = star3u();
        let oracle = Oracle::new(&inst);
        let layout = prepare_layout(&oracle, &q(1, 2)).unwrap();
        assert_eq!(layout.eps_prime, q(1, 192));
        for k in 0..3 {
            assert_eq!(layout.cuts[k], q(191, 192));
            assert_eq!(inst.interval_value(0, &layout.outer(k)), q(1, 576));
        }
    }

    #[test]
    fn zero_edges_have_empty_inner_parts() {
        let g = Graph::from_names(&["c", "a", "b"], &[("e1", "a", "c"), ("e2", "b", "c")]).unwrap();
        let row = vec![StepDensity::uniform(qi(1)), StepDensity::uniform(qi(0))];
        let inst = Instance::new(g, vec![row.clone(), row]).unwrap();
        let oracle = Oracle::new(&inst);
        let layout = prepare_layout(&oracle, &q(1, 2)).unwrap();
        assert_eq!(layout.cuts[1], qi(0));
    }

    #[test]
    fn thresholds_take_the_point_nearest_the_center() {
        let g = Graph::from_names(&["c", "a", "b"], &[("e1", "a", "c"), ("e2", "b", "c")]).unwrap();
        let half = StepDensity::uniform(q(1, 2));
        let skew = StepDensity::new(vec![qi(0), q(1, 2), qi(1)], vec![q(1, 2), q(1, 2)]).unwrap();
        let steep = StepDensity::new(vec![qi(0), q(1, 2), qi(1)], vec![q(1, 4), q(3, 4)]).unwrap();
        let inst = Instance::new(g, vec![vec![skew, half.clone()], vec![steep, half]]).unwrap();
        let oracle = Oracle::new(&inst);
        let layout = prepare_layout(&oracle, &q(1, 2)).unwrap();
        // limit = (1/2)/(16*2*2)/2 = 1/256; agent 1 reaches it 1/128 from the center, agent 2 1/192 away.
        assert_eq!(layout.cuts[0], qi(1) - q(1, 192));
    }

    #[test]
    fn first_trade_is_a_leaf_prefix_worth_eps_prime() {
        let inst = star3u();
        let oracle = Oracle::new(&inst);
        let layout = prepare_layout(&oracle, &q(1, 2)).unwrap();
        let (next, event) = phase2_step(&oracle, &layout, &PhaseState::empty(2)).unwrap().unwrap();
        assert_eq!(event.trader, 0);
        assert_eq!(event.phase, TradeKind::Segment);
        assert_eq!(next.values[0], q(1, 192));
        assert_eq!(next.holdings[0], Holding::Segment { k: 0, a: qi(0), b: q(1, 64) });
    }

    #[test]
    fn whole_edge_trade_when_no_single_gap_suffices() {
        let inst = uniform_star(6, 2);
        let oracle = Oracle::new(&inst);
        let layout = prepare_layout(&oracle, &q(1, 2)).unwrap();
        let mut state = PhaseState::empty(2);
        state.values[0] = q(1, 3);
        state.tags[0] = Tag::Segment;
        state.values[1] = q(1, 3);
        state.tags[1] = Tag::Segment;
        let (next, event) = phase2_step(&oracle, &layout, &state).unwrap().unwrap();
        assert_eq!(event.phase, TradeKind::Edges);
        match &next.holdings[event.trader] {
            Holding::Edges(ks) => assert!(ks.len() >= 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gaps_follow_the_neighbour_rule() {
        let inst = star3u();
        let oracle = Oracle::new(&inst);
        let layout = prepare_layout(&oracle, &q(1, 2)).unwrap();
        let mut state = PhaseState::empty(2);
        state.holdings[0] = Holding::Segment { k: 0, a: q(1, 4), b: q(1, 2) };
        state.tags[0] = Tag::Segment;
        state.holdings[1] = Holding::Edges(vec![1, 2]);
        state.tags[1] = Tag::Edges;
        let done = finalize(&oracle, &layout, &state).unwrap();
        assert_eq!(done.leftover_recipient, 1);
        let first = &done.allocation.shares[0];
        assert_eq!(first.intervals, vec![EdgeInterval::new(crate::model::EdgeId(0), qi(0), q(191, 192)).unwrap()]);
        assert!(validate_allocation(&inst, &done.allocation).is_valid());
    }

    #[test]
    fn star3u_end_to_end() {
        let inst = star3u();
        let oracle = Oracle::new(&inst);
        let run = star_three_eps(&oracle, &q(1, 2)).unwrap();
        assert!(validate_allocation(&inst, &run.allocation).is_valid());
        let report = fairness_report(&inst, &run.allocation);
        assert!(report.envy_factor.at_most(&q(7, 2)));
    }

    #[test]
    fn two_edge_star_end_to_end() {
        let inst = uniform_star(2, 2);
        let oracle = Oracle::new(&inst);
        let run = star_three_eps(&oracle, &q(1, 10)).unwrap();
        let report = fairness_report(&inst, &run.allocation);
        assert!(report.envy_factor.at_most(&q(31, 10)));
    }

    #[test]
    fn single_agent_and_non_stars() {
        let inst = uniform_star(3, 1);
        let oracle = Oracle::new(&inst);
        let run = star_three_eps(&oracle, &q(1, 2)).unwrap();
        assert_eq!(run.allocation.shares[0], inst.whole_cake());
        let tri = Graph::from_names(&["a", "b", "c"], &[("e1", "a", "b"), ("e2", "b", "c"), ("e3", "c", "a")]).unwrap();
        let inst = crate::fixtures::uniform(tri, 2);
        assert!(matches!(star_three_eps(&Oracle::new(&inst), &q(1, 2)), Err(Error::NotAStar(_))));
    }

    #[test]
    fn large_epsilon_is_clamped() {
        assert_eq!(clamp_epsilon(&qi(3)).unwrap(), q(1023, 1024));
        assert!(clamp_epsilon(&qi(0)).is_err());
    }

    #[test]
    fn single_edge_star_is_an_interval() {
        let g = crate::model::Graph::from_names(&["a", "b"], &[("e1", "a", "b")]).unwrap();
        let d1 = StepDensity::uniform(qi(1));
        let d2 = StepDensity::new(vec![qi(0), q(1, 4), qi(1)], vec![qi(0), q(4, 3)]).unwrap();
        let d3 = StepDensity::new(vec![qi(0), q(1, 2), qi(1)], vec![q(3, 2), q(1, 2)]).unwrap();
        let inst = Instance::new(g, vec![vec![d1], vec![d2], vec![d3]]).unwrap();
        let run = star_three_eps(&Oracle::new(&inst), &q(1, 2)).unwrap();
        let report = fairness_report(&inst, &run.allocation);
        assert!(report.envy_factor.at_most(&q(7, 2)));
    }
}
