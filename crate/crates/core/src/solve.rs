//! One entry point per algorithm, with the bound each one promises.

use serde_json::{json, Value};

use crate::bagfill::star_identical_2ef;
use crate::balance::identical_two_eps;
use crate::error::{Error, Result};
use crate::fairness::{fairness_report, prop1_check, FairnessReport, ImplicationCheck};
use crate::general::{iterative_divide, unit_share, ThresholdSchedule};
use crate::io::{allocation_to_value, ledger_to_value, report_to_value, validity_to_value};
use crate::model::{validate_allocation, Allocation, Instance, ValidityReport};
use crate::query::{Oracle, QueryLedger};
use crate::rational::{format_q, pow2, q, qi, Q};
use crate::star::{clamp_epsilon, star_three_eps, TradeEvent};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    IterativeDivide,
    Star3Eps,
    Identical4Ef,
    Identical2Eps,
    StarIdentical2Ef,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::IterativeDivide,
        Algorithm::Star3Eps,
        Algorithm::Identical4Ef,
        Algorithm::Identical2Eps,
        Algorithm::StarIdentical2Ef,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::IterativeDivide => "iterative-divide",
            Algorithm::Star3Eps => "star-3eps",
            Algorithm::Identical4Ef => "identical-4ef",
            Algorithm::Identical2Eps => "identical-2eps",
            Algorithm::StarIdentical2Ef => "star-identical-2ef",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Algorithm> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Malformed(format!("unknown algorithm `{s}`")))
    }
}

/// What an algorithm promises about its output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Guarantee {
    AdditiveEnvy(Q),
    EnvyFactor(Q),
    EnvyFactorAndMinShare(Q, Q),
}

impl Guarantee {
    pub fn holds(&self, report: &FairnessReport) -> bool {
        match self {
            Guarantee::AdditiveEnvy(bound) => &report.additive_envy <= bound,
            Guarantee::EnvyFactor(bound) => report.envy_factor.at_most(bound),
            Guarantee::EnvyFactorAndMinShare(bound, floor) => {
                report.envy_factor.at_most(bound) && report.own_values().iter().all(|v| v >= floor)
            }
        }
    }

    fn to_value(&self) -> Value {
        match self {
            Guarantee::AdditiveEnvy(b) => json!({ "additive_envy_at_most": format_q(b) }),
            Guarantee::EnvyFactor(b) => json!({ "envy_factor_at_most": format_q(b) }),
            Guarantee::EnvyFactorAndMinShare(b, f) => {
                json!({ "envy_factor_at_most": format_q(b), "min_share_at_least": format_q(f) })
            }
        }
    }
}

/// `4 - 2^-(n-3)` for `n >= 2`, and 1 for a single agent.
pub fn adaptive_envy_bound(n: usize) -> Q {
    if n <= 1 {
        qi(1)
    } else {
        qi(4) - pow2(-(n as i64 - 3))
    }
}

pub fn guarantee(algorithm: Algorithm, n: usize, epsilon: &Q) -> Guarantee {
    match algorithm {
        Algorithm::IterativeDivide => Guarantee::AdditiveEnvy(q(1, 2)),
        Algorithm::Star3Eps => Guarantee::EnvyFactor(qi(3) + epsilon),
        Algorithm::Identical4Ef => {
            Guarantee::EnvyFactorAndMinShare(adaptive_envy_bound(n), if n >= 1 { unit_share(n) } else { qi(0) })
        }
        Algorithm::Identical2Eps => Guarantee::EnvyFactor(qi(2) + epsilon),
        Algorithm::StarIdentical2Ef => Guarantee::EnvyFactor(qi(2)),
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub algorithm: Algorithm,
    pub epsilon: Q,
    pub allocation: Allocation,
    pub report: FairnessReport,
    pub implications: ImplicationCheck,
    pub validity: ValidityReport,
    pub guarantee: Guarantee,
    pub ledger: QueryLedger,
    pub trace: Vec<TradeEvent>,
    /// Algorithm-specific counters for the output file.
    pub details: Value,
}

impl Solution {
    pub fn bound_holds(&self) -> bool {
        self.validity.is_valid() && self.guarantee.holds(&self.report) && self.implications.all_hold()
    }

    pub fn to_value(&self, instance: &Instance) -> Value {
        let graph = instance.graph();
        json!({
            "algorithm": self.algorithm.name(),
            "epsilon": format_q(&self.epsilon),
            "shares": allocation_to_value(graph, &self.allocation),
            "metrics": report_to_value(&self.report, &self.implications),
            "validity": validity_to_value(graph, &self.validity),
            "guarantee": self.guarantee.to_value(),
            "bound_holds": self.bound_holds(),
            "queries": ledger_to_value(&self.ledger),
            "details": self.details,
        })
    }
}

pub fn default_epsilon() -> Q {
    q(1, 10)
}

pub fn solve(instance: &Instance, algorithm: Algorithm, epsilon: &Q, max_calls: Option<u64>) -> Result<Solution> {
    let epsilon = clamp_epsilon(epsilon)?;
    let oracle = Oracle::new(instance);
    let n = instance.agent_count();
    let mut trace = Vec::new();
    let (allocation, details) = match algorithm {
        Algorithm::IterativeDivide | Algorithm::Identical4Ef => {
            let schedule = if algorithm == Algorithm::IterativeDivide {
                ThresholdSchedule::FixedQuarter
            } else {
                ThresholdSchedule::AdaptiveIdentical
            };
            let run = iterative_divide(&oracle, schedule, None)?;
            let details = json!({
                "thresholds": run.thresholds.iter().map(format_q).collect::<Vec<_>>(),
                "order": run.order.iter().map(|a| a + 1).collect::<Vec<_>>(),
            });
            (run.allocation, details)
        }
        Algorithm::Star3Eps => {
            let run = star_three_eps(&oracle, &epsilon)?;
            let details = json!({ "phase2_iterations": run.events.len() });
            trace = run.events;
            (run.allocation, details)
        }
        Algorithm::Identical2Eps => {
            let run = identical_two_eps(&oracle, &epsilon, max_calls)?;
            let details = json!({
                "balance_calls": run.balance.calls,
                "cases": run.balance.cases,
            });
            (run.balance.allocation, details)
        }
        Algorithm::StarIdentical2Ef => {
            let run = star_identical_2ef(&oracle)?;
            let details = json!({
                "peels": run.peels.len(),
                "unserved": run.unserved,
                "merges": run.merges.iter().map(format_q).collect::<Vec<_>>(),
            });
            (run.allocation, details)
        }
    };
    let ledger = oracle.ledger();
    let report = fairness_report(instance, &allocation);
    let implications = prop1_check(&report, n);
    let validity = validate_allocation(instance, &allocation);
    Ok(Solution {
        algorithm,
        guarantee: guarantee(algorithm, n, &epsilon),
        epsilon,
        allocation,
        report,
        implications,
        validity,
        ledger,
        trace,
        details,
    })
}
