//! Iterative carving: repeatedly split a share off the remaining cake with Divide.

use num_traits::{One, Zero};

use crate::divide::divide;
use crate::error::{ensure, Error, Result};
use crate::model::{Allocation, Point, Share, VertexId};
use crate::query::Oracle;
use crate::rational::{pow2, q, qi, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThresholdSchedule {
    /// Every round asks for value 1/4.
    FixedQuarter,
    /// Identical valuations: `(2i xi - allocated) / 2` with `xi = 1/(2n-1)`.
    AdaptiveIdentical,
}

/// Threshold for round `i` (1-based) given the values of the shares already carved.
pub fn threshold(schedule: ThresholdSchedule, i: usize, n: usize, allocated: &[Q]) -> Q {
    match schedule {
        ThresholdSchedule::FixedQuarter => q(1, 4),
        ThresholdSchedule::AdaptiveIdentical => {
            let xi = unit_share(n);
            let spent: Q = allocated.iter().sum();
            (qi(2 * i as i64) * xi - spent) / qi(2)
        }
    }
}

/// `1/(2n-1)`, the guaranteed minimum share under identical valuations.
pub fn unit_share(n: usize) -> Q {
    q(1, 2 * n as i64 - 1)
}

#[derive(Clone, Debug)]
pub struct IterativeRun {
    pub allocation: Allocation,
    pub thresholds: Vec<Q>,
    /// Agent that received the share carved in each round, then the last agent.
    pub order: Vec<usize>,
}

pub fn iterative_divide(
    oracle: &Oracle,
    schedule: ThresholdSchedule,
    root: Option<VertexId>,
) -> Result<IterativeRun> {
    let instance = oracle.instance();
    let graph = oracle.graph();
    let n = oracle.agent_count();
    let root = Point::Vertex(root.unwrap_or(VertexId(0)));
    let mut remaining = instance.whole_cake();
    let mut shares = vec![Share::empty(); n];
    if n == 1 {
        shares[0] = remaining;
        return Ok(IterativeRun {
            allocation: Allocation::new(shares),
            thresholds: Vec::new(),
            order: vec![0],
        });
    }
    let adaptive = schedule == ThresholdSchedule::AdaptiveIdentical;
    if adaptive && !instance.is_identical() {
        return Err(Error::NotIdentical);
    }
    let xi = unit_share(n);
    let mut waiting: Vec<usize> = (0..n).collect();
    let mut carved: Vec<Q> = Vec::new();
    let mut thresholds = Vec::new();
    let mut order = Vec::new();

    for i in 1..n {
        let beta = threshold(schedule, i, n, &carved);
        thresholds.push(beta.clone());
        let qualifies = waiting
            .iter()
            .any(|&a| oracle.eval(a, &remaining) >= beta);
        let (agent, share) = if qualifies {
            let out = divide(oracle, &remaining, &waiting, &beta, &root)?;
            remaining = out.second;
            let agent = *waiting
                .iter()
                .find(|&&a| oracle.eval(a, &out.first) >= beta)
                .ok_or_else(|| Error::Invariant("no agent accepts the carved share".into()))?;
            (agent, out.first)
        } else {
            ensure(!adaptive, || format!("adaptive round {i} found no qualifying agent"))?;
            (waiting[0], Share::empty())
        };
        if adaptive {
            ensure(agent == waiting[0], || {
                format!("adaptive round {i} was taken out of order")
            })?;
            carved.push(instance.value(0, &share));
            check_adaptive_round(i, &xi, &carved)?;
        }
        waiting.retain(|&a| a != agent);
        shares[agent] = share;
        order.push(agent);
    }
    let last = waiting[0];
    if adaptive {
        let value = instance.value(0, &remaining);
        let cap = (qi(3) - pow2(-(n as i64 - 2))) * &xi;
        ensure(value > xi && value <= cap, || {
            format!("final adaptive share {value} outside ({xi}, {cap}]")
        })?;
    }
    shares[last] = remaining.normalized(graph);
    order.push(last);
    Ok(IterativeRun {
        allocation: Allocation::new(shares),
        thresholds,
        order,
    })
}

/// Per-round bounds of the adaptive schedule on the share just carved and on the running total.
pub fn check_adaptive_round(i: usize, xi: &Q, carved: &[Q]) -> Result<()> {
    let i_signed = i as i64;
    let last = &carved[i - 1];
    let upper = (qi(4) - pow2(-(i_signed - 2))) * xi;
    ensure(last >= xi && last < &upper, || {
        format!("round {i}: share {last} outside [{xi}, {upper})")
    })?;
    let total: Q = carved.iter().sum();
    let lower = (qi(2 * i_signed - 2) + pow2(-(i_signed - 1))) * xi;
    let upper = qi(2 * i_signed) * xi;
    ensure(total >= lower && total < upper, || {
        format!("round {i}: running total {total} outside [{lower}, {upper})")
    })
}

/// Largest ratio the adaptive schedule may leave between any two shares.
pub fn adaptive_ratio_bound(n: usize) -> Q {
    qi(4) - pow2(-(n as i64 - 3))
}

pub fn min_value(values: &[Q]) -> Q {
    values.iter().min().cloned().unwrap_or_else(Q::zero)
}

pub fn max_value(values: &[Q]) -> Q {
    values.iter().max().cloned().unwrap_or_else(Q::one)
}
