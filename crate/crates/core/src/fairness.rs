//! Exact fairness metrics, the implications between them, and a brute-force
//! egalitarian optimum for two agents on tiny trees.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::model::{Allocation, EdgeId, Instance, VertexId};
use crate::rational::{qi, Q};

/// A ratio that may be unbounded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Factor {
    Finite(Q),
    Unbounded,
}

impl Factor {
    pub fn at_most(&self, bound: &Q) -> bool {
        matches!(self, Factor::Finite(x) if x <= bound)
    }

    pub fn finite(&self) -> Option<&Q> {
        match self {
            Factor::Finite(x) => Some(x),
            Factor::Unbounded => None,
        }
    }

    fn max(self, other: Factor) -> Factor {
        match (self, other) {
            (Factor::Finite(a), Factor::Finite(b)) => Factor::Finite(if a >= b { a } else { b }),
            _ => Factor::Unbounded,
        }
    }
}

impl std::fmt::Display for Factor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Factor::Finite(x) => write!(f, "{x}"),
            Factor::Unbounded => write!(f, "unbounded"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FairnessReport {
    /// `matrix[i][j]` is agent `i`'s value for share `j`.
    pub matrix: Vec<Vec<Q>>,
    pub envy_factor: Factor,
    pub additive_envy: Q,
    pub proportionality: Factor,
    pub pseudo_ef: Option<Q>,
}

impl FairnessReport {
    pub fn agent_count(&self) -> usize {
        self.matrix.len()
    }

    pub fn own_values(&self) -> Vec<Q> {
        (0..self.matrix.len()).map(|i| self.matrix[i][i].clone()).collect()
    }
}

fn ratio(other: &Q, own: &Q) -> Factor {
    if own.is_zero() {
        if other.is_zero() {
            Factor::Finite(Q::one())
        } else {
            Factor::Unbounded
        }
    } else {
        Factor::Finite(other / own)
    }
}

pub fn fairness_report(instance: &Instance, allocation: &Allocation) -> FairnessReport {
    let n = allocation.shares.len();
    let matrix: Vec<Vec<Q>> = (0..n).map(|i| allocation.values(instance, i)).collect();
    let mut envy_factor = Factor::Finite(Q::one());
    let mut additive: Option<Q> = None;
    let mut proportionality = Factor::Finite(Q::zero());
    for i in 0..n {
        let own = &matrix[i][i];
        for j in 0..n {
            envy_factor = envy_factor.max(ratio(&matrix[i][j], own));
            if i != j {
                let gap = &matrix[i][j] - own;
                additive = Some(match additive {
                    Some(best) if best >= gap => best,
                    _ => gap,
                });
            }
        }
        let p = if own.is_zero() {
            Factor::Unbounded
        } else {
            Factor::Finite(Q::one() / (qi(n as i64) * own))
        };
        proportionality = proportionality.max(p);
    }
    FairnessReport {
        pseudo_ef: pseudo_ef_factor(instance, allocation),
        matrix,
        envy_factor,
        additive_envy: additive.unwrap_or_else(Q::zero),
        proportionality,
    }
}

/// Max/min ratio after discarding one minimum share, for identical valuations.
pub fn pseudo_ef_factor(instance: &Instance, allocation: &Allocation) -> Option<Q> {
    if !instance.is_identical() {
        return None;
    }
    pseudo_ef_of_values(&allocation.values(instance, 0))
}

pub fn pseudo_ef_of_values(values: &[Q]) -> Option<Q> {
    if values.len() < 2 {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort();
    if sorted[0].is_zero() {
        return None;
    }
    let rest = &sorted[1..];
    Some(&rest[rest.len() - 1] / &rest[0])
}

/// Outcome of each implication; `None` when the premise is unbounded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImplicationCheck {
    pub envy_to_proportional: Option<bool>,
    pub envy_to_additive: Option<bool>,
    pub proportional_to_additive: Option<bool>,
}

impl ImplicationCheck {
    pub fn all_hold(&self) -> bool {
        [
            self.envy_to_proportional,
            self.envy_to_additive,
            self.proportional_to_additive,
        ]
        .iter()
        .all(|c| c != &Some(false))
    }
}

/// Checks that the measured metrics respect the implications
/// `a`-EF ⇒ `(a - (a-1)/n)`-proportional, `a`-EF ⇒ `((a-1)/(a+1))`-additive-EF,
/// and `p`-proportional ⇒ `(1 - 2/(p n))`-additive-EF.
///
/// The implications need `n >= 2` and a premise of at least 1, so a measured
/// factor below 1 is raised to 1 and a single agent yields no checks.
pub fn prop1_check(report: &FairnessReport, n: usize) -> ImplicationCheck {
    if n < 2 {
        return ImplicationCheck {
            envy_to_proportional: None,
            envy_to_additive: None,
            proportional_to_additive: None,
        };
    }
    let nq = qi(n as i64);
    let at_least_one = |x: &Q| if x < &Q::one() { Q::one() } else { x.clone() };
    let envy = report.envy_factor.finite().map(at_least_one);
    let envy_to_proportional = envy.as_ref().map(|a| {
        let bound = a - (a - Q::one()) / &nq;
        report.proportionality.at_most(&bound)
    });
    let envy_to_additive = envy.as_ref().map(|a| {
        let bound = (a - Q::one()) / (a + Q::one());
        report.additive_envy <= bound
    });
    let proportional_to_additive = report.proportionality.finite().map(at_least_one).map(|p| {
        let bound = Q::one() - qi(2) / (p * &nq);
        report.additive_envy <= bound
    });
    ImplicationCheck {
        envy_to_proportional,
        envy_to_additive,
        proportional_to_additive,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EgalitarianOptimum {
    /// Best min value over all connected two-agent partitions.
    pub exact: Q,
    /// Best min value when cuts are restricted to the grid.
    pub grid: Q,
}

/// Best achievable `min(value of agent 1, value of agent 2)` over connected partitions
/// of a tree with at most four edges between two agents.
///
/// A connected partition of a tree meets in a single point: either a vertex, with
/// each incident branch going to one side, or a cut inside one edge. Vertex splits
/// are enumerated, and each edge cut is solved exactly where the two monotone
/// value curves cross. The grid route evaluates the same structures at
/// breakpoints plus `grid` uniform subdivisions per piece.
pub fn brute_force_egalitarian(instance: &Instance, grid: usize) -> Result<EgalitarianOptimum> {
    let graph = instance.graph();
    if instance.agent_count() != 2 {
        return Err(Error::SizeCap("the oracle needs exactly two agents".into()));
    }
    if graph.edge_count() > 4 {
        return Err(Error::SizeCap("the oracle handles at most four edges".into()));
    }
    if !graph.is_tree() {
        return Err(Error::NotATree);
    }
    let m = graph.edge_count();
    let edge_value = |agent: usize, e: EdgeId| instance.density(agent, e).total();
    // Edges reachable from `start` without crossing `e`.
    let side = |e: EdgeId, start: VertexId| -> Vec<EdgeId> {
        let mut seen = vec![false; m];
        seen[e.0] = true;
        let mut out = Vec::new();
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &f in graph.incident(v) {
                if !seen[f.0] {
                    seen[f.0] = true;
                    out.push(f);
                    stack.push(graph.other_end(f, v));
                }
            }
        }
        out
    };
    let worth = |agent: usize, edges: &[EdgeId]| -> Q { edges.iter().map(|&e| edge_value(agent, e)).sum() };

    let mut exact = Q::zero();
    let mut best_grid = Q::zero();
    let mut offer = |value: Q, on_grid: bool| {
        if value > exact {
            exact = value.clone();
        }
        if on_grid && value > best_grid {
            best_grid = value;
        }
    };

    for v in graph.vertex_ids() {
        let incident = graph.incident(v);
        let branches: Vec<Vec<EdgeId>> = incident
            .iter()
            .map(|&e| {
                let mut b = vec![e];
                b.extend(side(e, graph.other_end(e, v)));
                b
            })
            .collect();
        for mask in 0u32..(1 << incident.len()) {
            let (mut mine, mut theirs) = (Vec::new(), Vec::new());
            for (bit, branch) in branches.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    mine.extend(branch.iter().copied());
                } else {
                    theirs.extend(branch.iter().copied());
                }
            }
            let a = worth(0, &mine);
            let b = worth(1, &theirs);
            offer(if a <= b { a } else { b }, true);
        }
    }

    for e in graph.edge_ids() {
        let (lo_end, hi_end) = graph.endpoints(e);
        let lo_side = side(e, lo_end);
        let hi_side = side(e, hi_end);
        for (low_agent, high_agent) in [(0usize, 1usize), (1, 0)] {
            let dl = instance.density(low_agent, e);
            let dh = instance.density(high_agent, e);
            let base_low = worth(low_agent, &lo_side);
            let base_high = worth(high_agent, &hi_side) + dh.total();
            let f = |c: &Q| &base_low + dl.integral(&Q::zero(), c);
            let g = |c: &Q| &base_high - dh.integral(&Q::zero(), c);
            let mut points: Vec<Q> = dl.breakpoints().iter().chain(dh.breakpoints()).cloned().collect();
            points.sort();
            points.dedup();

            let h = |c: &Q| f(c) - g(c);
            let crossing = if h(&points[0]) >= Q::zero() {
                points[0].clone()
            } else if h(&points[points.len() - 1]) <= Q::zero() {
                points[points.len() - 1].clone()
            } else {
                let k = (0..points.len() - 1)
                    .find(|&k| h(&points[k]) <= Q::zero() && h(&points[k + 1]) >= Q::zero())
                    .expect("monotone difference changes sign");
                let (t0, t1) = (&points[k], &points[k + 1]);
                let (h0, h1) = (h(t0), h(t1));
                if h1 == h0 {
                    t0.clone()
                } else {
                    t0 + (-&h0) * (t1 - t0) / (h1 - &h0)
                }
            };
            let fc = f(&crossing);
            let gc = g(&crossing);
            offer(if fc <= gc { fc } else { gc }, false);

            for w in points.windows(2) {
                for s in 0..=grid.max(1) {
                    let c = &w[0] + (&w[1] - &w[0]) * Q::new(s.into(), grid.max(1).into());
                    let (fc, gc) = (f(&c), g(&c));
                    offer(if fc <= gc { fc } else { gc }, true);
                }
            }
        }
    }
    Ok(EgalitarianOptimum {
        exact,
        grid: best_grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{star3u, uniform_star, unit_interval};
    use crate::model::{EdgeInterval, Graph, Share, StepDensity};
    use crate::rational::q;

    fn split_at(cut: Q) -> Allocation {
        let e = EdgeId(0);
        Allocation::new(vec![
            Share::new(vec![EdgeInterval::new(e, Q::zero(), cut.clone()).unwrap()]),
            Share::new(vec![EdgeInterval::new(e, cut, Q::one()).unwrap()]),
        ])
    }

    #[test]
    fn report_examples() {
        let inst = star3u();
        let full = |e| EdgeInterval::full(EdgeId(e));
        let alloc = Allocation::new(vec![
            Share::new(vec![full(0)]),
            Share::new(vec![full(1), full(2)]),
        ]);
        let r = fairness_report(&inst, &alloc);
        assert_eq!(r.envy_factor, Factor::Finite(qi(2)));
        assert_eq!(r.additive_envy, q(1, 3));
        assert_eq!(r.proportionality, Factor::Finite(q(3, 2)));

        let inst = unit_interval(2);
        let r = fairness_report(&inst, &split_at(q(1, 2)));
        assert_eq!(r.envy_factor, Factor::Finite(qi(1)));
        assert_eq!(r.additive_envy, qi(0));
        assert_eq!(r.pseudo_ef, Some(qi(1)));

        let empty = Allocation::new(vec![Share::empty(), inst.whole_cake()]);
        assert_eq!(fairness_report(&inst, &empty).envy_factor, Factor::Unbounded);
    }

    #[test]
    fn pseudo_ef_examples() {
        let values = [q(1, 100), q(3, 10), q(3, 10), q(39, 100)];
        assert_eq!(pseudo_ef_of_values(&values), Some(q(13, 10)));
        assert_eq!(pseudo_ef_of_values(&[qi(0), qi(1)]), None);
        assert_eq!(pseudo_ef_of_values(&[q(1, 3), q(2, 3)]), Some(qi(1)));
        assert_eq!(pseudo_ef_of_values(&[qi(1)]), None);
    }

    #[test]
    fn implication_examples() {
        let mk = |a: Q, add: Q, p: Q| FairnessReport {
            matrix: vec![],
            envy_factor: Factor::Finite(a),
            additive_envy: add,
            proportionality: Factor::Finite(p),
            pseudo_ef: None,
        };
        assert!(prop1_check(&mk(qi(3), q(1, 2), qi(2)), 2).all_hold());
        assert!(!prop1_check(&mk(qi(3), q(3, 5), qi(2)), 2).all_hold());
        assert!(prop1_check(&mk(qi(1), qi(0), qi(1)), 4).all_hold());
        assert_eq!(prop1_check(&mk(qi(1), qi(0), q(3, 2)), 4).envy_to_proportional, Some(false));
        let r = mk(qi(5), q(1, 2), qi(2));
        assert_eq!(prop1_check(&r, 2).proportional_to_additive, Some(true));
        let r = mk(qi(5), q(3, 5), qi(2));
        assert_eq!(prop1_check(&r, 2).proportional_to_additive, Some(false));
        let generous = mk(qi(1), q(-1, 5), q(5, 6));
        assert_eq!(prop1_check(&generous, 2).proportional_to_additive, Some(true));
        assert_eq!(prop1_check(&mk(qi(1), qi(0), qi(1)), 1).envy_to_additive, None);
    }

    #[test]
    fn oracle_examples() {
        let best = brute_force_egalitarian(&star3u(), 16).unwrap();
        assert_eq!(best.exact, q(1, 3));
        assert_eq!(best.grid, q(1, 3));
        assert_eq!(brute_force_egalitarian(&unit_interval(2), 16).unwrap().exact, q(1, 2));
        assert_eq!(brute_force_egalitarian(&uniform_star(2, 2), 16).unwrap().exact, q(1, 2));
    }

    #[test]
    fn oracle_solves_off_grid_crossings() {
        let g = Graph::from_names(&["a", "b"], &[("e1", "a", "b")]).unwrap();
        let d2 = StepDensity::new(vec![qi(0), q(1, 3), qi(1)], vec![q(3, 2), q(3, 4)]).unwrap();
        let inst = Instance::new(g, vec![vec![StepDensity::uniform(qi(1))], vec![d2]]).unwrap();
        let best = brute_force_egalitarian(&inst, 2).unwrap();
        // Agent 2 on the left: 1/4 + 3c/4 = 1 - c at c = 3/7.
        assert_eq!(best.exact, q(4, 7));
        assert!(best.grid < best.exact);
    }

    #[test]
    fn oracle_size_caps() {
        assert!(brute_force_egalitarian(&uniform_star(3, 3), 4).is_err());
        assert!(brute_force_egalitarian(&uniform_star(5, 2), 4).is_err());
    }
}
