//! Seeded random instances.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fixtures::star3u;
use crate::model::{Graph, Instance, StepDensity};
use crate::rational::{q, qi, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Star,
    Tree,
    RandomConnected,
    Fig1,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Family> {
        match s {
            "star" => Ok(Family::Star),
            "tree" => Ok(Family::Tree),
            "random-connected" => Ok(Family::RandomConnected),
            "fig1" => Ok(Family::Fig1),
            other => Err(Error::Malformed(format!("unknown family `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorSpec {
    pub family: Family,
    pub edges: usize,
    /// Vertex count for `RandomConnected`; drawn at random when absent.
    pub vertices: Option<usize>,
    pub agents: usize,
    /// Upper bound on density pieces per edge.
    pub pieces: usize,
    pub identical: bool,
    pub seed: u64,
}

const GRID: i64 = 16;
const MAX_WEIGHT: i64 = 5;

fn named_graph(vertex_count: usize, pairs: &[(usize, usize)]) -> Result<Graph> {
    let vertices = (0..vertex_count).map(|i| format!("v{i}")).collect();
    let edges = pairs
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| (format!("e{}", k + 1), format!("v{a}"), format!("v{b}")))
        .collect();
    Graph::new(vertices, edges)
}

fn random_density(rng: &mut ChaCha8Rng, max_pieces: usize) -> (Vec<Q>, Vec<i64>) {
    let pieces = rng.gen_range(1..=max_pieces.clamp(1, GRID as usize));
    let mut cuts: Vec<i64> = sample(rng, GRID as usize - 1, pieces - 1)
        .into_iter()
        .map(|c| c as i64 + 1)
        .collect();
    cuts.sort_unstable();
    let mut breakpoints = vec![qi(0)];
    breakpoints.extend(cuts.iter().map(|&c| q(c, GRID)));
    breakpoints.push(qi(1));
    let weights = (0..pieces).map(|_| rng.gen_range(0..=MAX_WEIGHT)).collect();
    (breakpoints, weights)
}

/// Draws one valuation row and rescales it to total exactly one.
fn random_row(rng: &mut ChaCha8Rng, m: usize, max_pieces: usize) -> Result<Vec<StepDensity>> {
    let mut raw: Vec<(Vec<Q>, Vec<i64>)> = (0..m).map(|_| random_density(rng, max_pieces)).collect();
    if raw.iter().all(|(_, w)| w.iter().all(|&x| x == 0)) {
        let k = rng.gen_range(0..m);
        raw[k].1[0] = 1;
    }
    let total: Q = raw
        .iter()
        .flat_map(|(b, w)| w.iter().enumerate().map(move |(i, &x)| (&b[i + 1] - &b[i]) * qi(x)))
        .sum();
    raw.into_iter()
        .map(|(b, w)| StepDensity::new(b, w.into_iter().map(|x| qi(x) / &total).collect()))
        .collect()
}

pub fn generate(spec: &GeneratorSpec) -> Result<Instance> {
    if spec.family == Family::Fig1 {
        return Ok(star3u());
    }
    let m = spec.edges;
    if m < 1 {
        return Err(Error::Malformed("a generated instance needs at least one edge".into()));
    }
    if spec.agents < 1 {
        return Err(Error::Malformed("a generated instance needs at least one agent".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let graph = match spec.family {
        Family::Star => {
            let pairs: Vec<(usize, usize)> = (1..=m).map(|k| (k, 0)).collect();
            named_graph(m + 1, &pairs)?
        }
        Family::Tree => {
            let pairs: Vec<(usize, usize)> = (1..=m).map(|k| (rng.gen_range(0..k), k)).collect();
            named_graph(m + 1, &pairs)?
        }
        Family::RandomConnected => {
            let nv = match spec.vertices {
                Some(nv) if nv >= 2 && nv <= m + 1 => nv,
                Some(nv) => {
                    return Err(Error::Malformed(format!("{nv} vertices cannot carry {m} connected edges")))
                }
                None => rng.gen_range(2..=(m + 1).min(12)),
            };
            let mut pairs: Vec<(usize, usize)> = (1..nv).map(|k| (rng.gen_range(0..k), k)).collect();
            while pairs.len() < m {
                let a = rng.gen_range(0..nv);
                let b = rng.gen_range(0..nv - 1);
                let b = if b >= a { b + 1 } else { b };
                pairs.push((a.min(b), a.max(b)));
            }
            named_graph(nv, &pairs)?
        }
        Family::Fig1 => unreachable!(),
    };
    let rows = if spec.identical {
        let row = random_row(&mut rng, m, spec.pieces)?;
        vec![row; spec.agents]
    } else {
        (0..spec.agents)
            .map(|_| random_row(&mut rng, m, spec.pieces))
            .collect::<Result<Vec<_>>>()?
    };
    Instance::new(graph, rows)
}
