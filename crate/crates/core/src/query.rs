//! Eval/Cut access to an instance with per-run query accounting.

use std::cell::Cell;

use serde::Serialize;

use crate::error::Result;
use crate::model::{self, AnchorEnd, EdgeInterval, Graph, Instance, PointOnEdge, Share};
use crate::rational::Q;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct QueryLedger {
    pub eval: u64,
    pub cut: u64,
}

impl QueryLedger {
    pub fn total(&self) -> u64 {
        self.eval + self.cut
    }
}

/// Solvers reach valuations only through this handle, so every query is counted.
pub struct Oracle<'a> {
    instance: &'a Instance,
    evals: Cell<u64>,
    cuts: Cell<u64>,
}

impl<'a> Oracle<'a> {
    pub fn new(instance: &'a Instance) -> Oracle<'a> {
        Oracle {
            instance,
            evals: Cell::new(0),
            cuts: Cell::new(0),
        }
    }

    pub fn instance(&self) -> &'a Instance {
        self.instance
    }

    pub fn graph(&self) -> &'a Graph {
        self.instance.graph()
    }

    pub fn agent_count(&self) -> usize {
        self.instance.agent_count()
    }

    pub fn eval(&self, agent: usize, share: &Share) -> Q {
        self.evals.set(self.evals.get() + 1);
        self.instance.value(agent, share)
    }

    pub fn eval_interval(&self, agent: usize, interval: &EdgeInterval) -> Q {
        self.evals.set(self.evals.get() + 1);
        self.instance.interval_value(agent, interval)
    }

    pub fn cut(
        &self,
        agent: usize,
        interval: &EdgeInterval,
        anchor: AnchorEnd,
        target: &Q,
    ) -> Result<PointOnEdge> {
        self.cuts.set(self.cuts.get() + 1);
        model::cut(self.instance, agent, interval, anchor, target)
    }

    pub fn ledger(&self) -> QueryLedger {
        QueryLedger {
            eval: self.evals.get(),
            cut: self.cuts.get(),
        }
    }
}
