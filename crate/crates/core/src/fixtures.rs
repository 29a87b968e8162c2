//! Small named instances used by tests, examples and the generator.

use crate::model::{Graph, Instance, StepDensity};
use crate::rational::{q, qi};

/// Three-edge star, two identical agents, every edge worth exactly 1/3.
/// Edges are listed leaf first, so position 0 is the leaf.
pub fn star3u() -> Instance {
    uniform_star(3, 2)
}

/// `m`-edge star with `n` identical uniform agents; edge `ek` joins leaf `vk` to center `v0`.
pub fn uniform_star(m: usize, n: usize) -> Instance {
    let vertices = (0..=m).map(|i| format!("v{i}")).collect();
    let edges = (1..=m)
        .map(|k| (format!("e{k}"), format!("v{k}"), "v0".to_string()))
        .collect();
    let graph = Graph::new(vertices, edges).expect("star is connected");
    uniform(graph, n)
}

/// Path `p0 - p1 - ... - pm` with `n` identical uniform agents.
pub fn uniform_path(m: usize, n: usize) -> Instance {
    uniform(path_graph(m), n)
}

pub fn path_graph(m: usize) -> Graph {
    let vertices = (0..=m).map(|i| format!("p{i}")).collect();
    let edges = (1..=m)
        .map(|k| (format!("s{k}"), format!("p{}", k - 1), format!("p{k}")))
        .collect();
    Graph::new(vertices, edges).expect("path is connected")
}

/// Every agent values every edge at `1/m`, spread uniformly.
pub fn uniform(graph: Graph, n: usize) -> Instance {
    let m = graph.edge_count() as i64;
    let row = vec![StepDensity::uniform(q(1, m)); graph.edge_count()];
    Instance::new(graph, vec![row; n]).expect("uniform valuation is normalized")
}

/// Height-3 tree with fifteen edges laid out as in the classic DFS picture:
/// the root `v0` has children `v1` and `v11`, and edge `ek` enters vertex `vk`.
pub fn fifteen_edge_tree() -> Graph {
    let parent = [
        (1, 0),
        (2, 1),
        (3, 2),
        (4, 2),
        (5, 1),
        (6, 5),
        (7, 5),
        (8, 1),
        (9, 8),
        (10, 8),
        (11, 0),
        (12, 11),
        (13, 11),
        (14, 13),
        (15, 13),
    ];
    let vertices = (0..=15).map(|i| format!("v{i}")).collect();
    let edges = parent
        .iter()
        .map(|(c, p)| (format!("e{c}"), format!("v{p}"), format!("v{c}")))
        .collect();
    Graph::new(vertices, edges).expect("tree is connected")
}

/// Unit interval as a single edge `e1 = [a, b]`.
pub fn unit_interval(n: usize) -> Instance {
    let graph = Graph::from_names(&["a", "b"], &[("e1", "a", "b")]).expect("edge");
    let row = vec![StepDensity::uniform(qi(1))];
    Instance::new(graph, vec![row; n]).expect("normalized")
}
