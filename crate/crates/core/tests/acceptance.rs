//! End-to-end acceptance matrix. Runs every criterion, prints one line each,
//! and exits nonzero if any fails.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use graphcake::balance::call_limit;
use graphcake::divide::divide;
use graphcake::fairness::{brute_force_egalitarian, fairness_report, prop1_check};
use graphcake::fixtures::{fifteen_edge_tree, uniform_star};
use graphcake::generate::{generate, Family, GeneratorSpec};
use graphcake::io::{canonical_string, load_instance, save_instance};
use graphcake::model::{components, is_connected, EdgeId, EdgeInterval, Graph, Instance, Point, Share, VertexId};
use graphcake::psn::{psn_allocate, psn_certificate, psn_exact_check, tree_dfs_bijection, PathSolver};
use graphcake::query::Oracle;
use graphcake::rational::{ceil_half, format_q, q, qi};
use graphcake::solve::{solve, Algorithm, Guarantee, Solution};
use graphcake::star::iteration_bound;
use graphcake::Q;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

#[derive(Default)]
struct Outcome {
    failures: Vec<String>,
    notes: Vec<String>,
    elapsed: Duration,
}

impl Outcome {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok && self.failures.len() < 20 {
            self.failures.push(what());
        }
    }
}

struct Matrix {
    out: PathBuf,
    outcomes: BTreeMap<usize, Outcome>,
    implication_runs: usize,
    implication_failures: Vec<String>,
}

impl Matrix {
    fn write(&self, name: &str, value: &serde_json::Value) {
        fs::write(self.out.join(name), canonical_string(value)).expect("write output");
    }

    fn record(&mut self, label: &str, instance: &Instance, allocation: &graphcake::model::Allocation) {
        let report = fairness_report(instance, allocation);
        let check = prop1_check(&report, instance.agent_count());
        self.implication_runs += 1;
        if !check.all_hold() && self.implication_failures.len() < 20 {
            self.implication_failures.push(format!("{label}: {check:?}"));
        }
    }

    fn solution(&mut self, label: &str, instance: &Instance, solution: &Solution) {
        self.write(&format!("{label}.json"), &solution.to_value(instance));
        self.record(label, instance, &solution.allocation);
    }
}

fn rng_for(criterion: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(criterion * 1_000_003 + trial)
}

fn spec(family: Family, edges: usize, agents: usize, pieces: usize, identical: bool, seed: u64) -> GeneratorSpec {
    GeneratorSpec {
        family,
        edges,
        vertices: None,
        agents,
        pieces,
        identical,
        seed,
    }
}

fn ratio_at_most(values: &[Q], bound: &Q) -> bool {
    let max = values.iter().max().cloned().unwrap_or_else(|| qi(0));
    let min = values.iter().min().cloned().unwrap_or_else(|| qi(0));
    max <= bound * min
}

fn criterion_1(m: &mut Matrix) -> Outcome {
    let mut o = Outcome::default();
    let start = Instant::now();
    for trial in 0..200 {
        let mut rng = rng_for(1, trial);
        let s = spec(
            Family::RandomConnected,
            rng.gen_range(1..=15),
            rng.gen_range(1..=6),
            4,
            false,
            rng.gen(),
        );
        let inst = generate(&s).expect("generate");
        match solve(&inst, Algorithm::IterativeDivide, &q(1, 10), None) {
            Ok(sol) => {
                let n = inst.agent_count();
                let worst = (0..n)
                    .flat_map(|i| (0..n).map(move |j| (i, j)))
                    .map(|(i, j)| &sol.report.matrix[i][j] - &sol.report.matrix[i][i])
                    .max()
                    .unwrap_or_else(|| qi(0));
                o.check(worst <= q(1, 2) && sol.validity.is_valid(), || {
                    format!("trial {trial}: additive envy {worst}")
                });
                m.solution(&format!("c1_{trial:03}"), &inst, &sol);
            }
            Err(e) => o.check(false, || format!("trial {trial}: {e}")),
        }
    }
    o.elapsed = start.elapsed();
    let elapsed = o.elapsed;
    o.check(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"));
    o
}

fn criterion_2(m: &mut Matrix) -> Outcome {
    let mut o = Outcome::default();
    let start = Instant::now();
    for epsilon in [q(1, 2), q(1, 10)] {
        for trial in 0..100 {
            let mut rng = rng_for(2, trial);
            let edges = rng.gen_range(1..=10);
            let agents = rng.gen_range(2..=5);
            let inst = generate(&spec(Family::Star, edges, agents, 4, false, rng.gen())).expect("generate");
            let label = format!("c2_{}_{trial:03}", epsilon.denom());
            match solve(&inst, Algorithm::Star3Eps, &epsilon, None) {
                Ok(sol) => {
                    let bound = qi(3) + &epsilon;
                    o.check(sol.report.envy_factor.at_most(&bound) && sol.validity.is_valid(), || {
                        format!("{label}: envy factor {}", sol.report.envy_factor)
                    });
                    let trades = qi(sol.trace.len() as i64);
                    let cap = iteration_bound(agents, edges, &epsilon);
                    o.check(trades <= cap, || format!("{label}: {trades} trades above {cap}"));
                    m.solution(&label, &inst, &sol);
                }
                Err(e) => o.check(false, || format!("{label}: {e}")),
            }
        }
    }
    o.elapsed = start.elapsed();
    let elapsed = o.elapsed;
    o.check(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"));
    o
}

fn identical_instance(criterion: u64, trial: u64) -> Instance {
    let mut rng = rng_for(criterion, trial);
    let edges = rng.gen_range(1..=10);
    let agents = rng.gen_range(1..=8);
    generate(&spec(Family::RandomConnected, edges, agents, 4, true, rng.gen())).expect("generate")
}

fn criterion_3(m: &mut Matrix) -> Outcome {
    let mut o = Outcome::default();
    let start = Instant::now();
    for trial in 0..100 {
        let inst = identical_instance(3, trial);
        let label = format!("c3_{trial:03}");
        match solve(&inst, Algorithm::Identical4Ef, &q(1, 10), None) {
            Ok(sol) => {
                let holds = matches!(&sol.guarantee, Guarantee::EnvyFactorAndMinShare(_, _))
                    && sol.guarantee.holds(&sol.report)
                    && sol.validity.is_valid();
                let n = inst.agent_count() as i64;
                let floor = q(1, 2 * n - 1);
                let min_ok = sol.report.own_values().iter().all(|v| v >= &floor);
                o.check(holds && min_ok, || {
                    format!("{label}: envy factor {} with n = {n}", sol.report.envy_factor)
                });
                m.solution(&label, &inst, &sol);
            }
            Err(e) => o.check(false, || format!("{label}: {e}")),
        }
    }
    o.elapsed = start.elapsed();
    o
}

fn criterion_4(m: &mut Matrix) -> Outcome {
    let mut o = Outcome::default();
    let start = Instant::now();
    for epsilon in [q(1, 2), q(1, 10)] {
        let mut balanced = 0;
        let mut most = 0;
        for trial in 0..100 {
            let inst = identical_instance(3, trial);
            let label = format!("c4_{}_{trial:03}", epsilon.denom());
            match solve(&inst, Algorithm::Identical2Eps, &epsilon, None) {
                Ok(sol) => {
                    let values = sol.report.own_values();
                    let bound = qi(2) + &epsilon;
                    o.check(ratio_at_most(&values, &bound) && sol.validity.is_valid(), || {
                        format!("{label}: values {:?}", values.iter().map(format_q).collect::<Vec<_>>())
                    });
                    let calls = sol.details["balance_calls"].as_u64().unwrap_or(u64::MAX);
                    let limit = call_limit(inst.agent_count(), &epsilon);
                    o.check(calls <= limit, || format!("{label}: {calls} calls above {limit}"));
                    if calls > 0 {
                        balanced += 1;
                    }
                    most = most.max(calls);
                    m.solution(&label, &inst, &sol);
                }
                Err(e) => o.check(false, || format!("{label}: {e}")),
            }
        }
        o.notes.push(format!("eps {}: {balanced}/100 needed balancing, at most {most} calls", format_q(&epsilon)));
    }
    o.elapsed = start.elapsed();
    o
}

fn fixture_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join("fig1.json")
}

fn criterion_5(m: &mut Matrix) -> Outcome {
    let mut o = Outcome::default();
    let start = Instant::now();
    for trial in 0..100 {
        let mut rng = rng_for(5, trial);
        let edges = rng.gen_range(1..=10);
        let agents = rng.gen_range(1..=8);
        let inst = generate(&spec(Family::Star, edges, agents, 4, true, rng.gen())).expect("generate");
        let label = format!("c5_{trial:03}");
        match solve(&inst, Algorithm::StarIdentical2Ef, &q(1, 10), None) {
            Ok(sol) => {
                let values = sol.report.own_values();
                o.check(ratio_at_most(&values, &qi(2)) && sol.validity.is_valid(), || {
                    format!("{label}: values {:?}", values.iter().map(format_q).collect::<Vec<_>>())
                });
                m.solution(&label, &inst, &sol);
            }
            Err(e) => o.check(false, || format!("{label}: {e}")),
        }
    }

    let text = fs::read_to_string(fixture_path()).expect("fixture");
    let fig1 = load_instance(&text).expect("fixture parses");
    o.check(save_instance(&fig1) == text, || "fixture is not in canonical form".into());
    match solve(&fig1, Algorithm::StarIdentical2Ef, &q(1, 10), None) {
        Ok(sol) => {
            let mut values = sol.report.own_values();
            values.sort();
            o.check(values == vec![q(1, 3), q(2, 3)], || format!("fig1 values {values:?}"));
            m.solution("c5_fig1", &fig1, &sol);
        }
        Err(e) => o.check(false, || format!("fig1: {e}")),
    }
    match brute_force_egalitarian(&fig1, 12) {
        Ok(best) => {
            o.check(best.exact == q(1, 3), || format!("fig1 egalitarian optimum {}", best.exact));
            m.write("c5_fig1_oracle.json", &json!({ "exact": format_q(&best.exact), "grid": format_q(&best.grid) }));
        }
        Err(e) => o.check(false, || format!("fig1 oracle: {e}")),
    }
    o.elapsed = start.elapsed();
    o
}

/// Rooted unlabeled trees as parent arrays (vertex 0 is the root), grown leaf
/// by leaf and deduplicated by their canonical nested-parenthesis string.
fn rooted_trees(max_vertices: usize) -> Vec<Vec<usize>> {
    fn canon(children: &[Vec<usize>], v: usize) -> String {
        let mut parts: Vec<String> = children[v].iter().map(|&c| canon(children, c)).collect();
        parts.sort();
        format!("({})", parts.concat())
    }
    fn key(parents: &[usize]) -> String {
        let mut children = vec![Vec::new(); parents.len() + 1];
        for (k, &p) in parents.iter().enumerate() {
            children[p].push(k + 1);
        }
        canon(&children, 0)
    }
    let mut level: Vec<Vec<usize>> = vec![Vec::new()];
    let mut all = level.clone();
    for size in 2..=max_vertices {
        let mut seen = BTreeSet::new();
        let mut next = Vec::new();
        for parents in &level {
            for p in 0..size - 1 {
                let mut grown = parents.clone();
                grown.push(p);
                if seen.insert(key(&grown)) {
                    next.push(grown);
                }
            }
        }
        all.extend(next.iter().cloned());
        level = next;
    }
    all
}

fn graph_from_parents(parents: &[usize]) -> Graph {
    let vertices = (0..=parents.len()).map(|i| format!("v{i}")).collect();
    let edges = parents
        .iter()
        .enumerate()
        .map(|(k, p)| (format!("e{}", k + 1), format!("v{p}"), format!("v{}", k + 1)))
        .collect();
    Graph::new(vertices, edges).expect("tree")
}

fn height_from(graph: &Graph, root: VertexId) -> usize {
    graph.distances_from(root).into_iter().max().unwrap_or(0)
}

/// Smallest spanning-tree diameter, by trying every edge subset of size `|V| - 1`.
fn brute_min_diameter(graph: &Graph) -> usize {
    let nv = graph.vertex_count();
    let m = graph.edge_count();
    let mut best = usize::MAX;
    for mask in 0u32..(1 << m) {
        if mask.count_ones() as usize != nv - 1 {
            continue;
        }
        let mut adj = vec![Vec::new(); nv];
        for e in 0..m {
            if mask & (1 << e) != 0 {
                let (a, b) = graph.endpoints(EdgeId(e));
                adj[a.0].push(b.0);
                adj[b.0].push(a.0);
            }
        }
        let mut diameter = 0;
        let mut spanning = true;
        for s in 0..nv {
            let mut dist = vec![usize::MAX; nv];
            dist[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for &w in &adj[v] {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[v] + 1;
                        queue.push_back(w);
                    }
                }
            }
            if dist.contains(&usize::MAX) {
                spanning = false;
                break;
            }
            diameter = diameter.max(dist.into_iter().max().unwrap_or(0));
        }
        if spanning {
            best = best.min(diameter);
        }
    }
    best
}

fn criterion_6(m: &mut Matrix) -> Outcome {
    let mut o = Outcome::default();
    let start = Instant::now();

    let trees = rooted_trees(9);
    for (t, parents) in trees.iter().enumerate() {
        let graph = graph_from_parents(parents);
        let root = VertexId(0);
        let h = height_from(&graph, root);
        match tree_dfs_bijection(&graph, root).and_then(|b| psn_exact_check(&graph, &b)) {
            Ok(psn) => o.check(psn <= h + 1, || format!("rooted tree {t} {parents:?}: psn {psn} > {}", h + 1)),
            Err(e) => o.check(false, || format!("rooted tree {t}: {e}")),
        }
        if !parents.is_empty() {
            match psn_certificate(&graph).and_then(|c| Ok((psn_exact_check(&graph, &c.bijection)?, c))) {
                Ok((psn, cert)) => {
                    o.check(psn <= cert.bound && cert.bound == height_from(&graph, cert.root) + 1, || {
                        format!("tree {t}: certificate bound {} with psn {psn}", cert.bound)
                    });
                }
                Err(e) => o.check(false, || format!("tree {t}: {e}")),
            }
        }
    }
    o.notes.push(format!("{} rooted trees on at most 9 vertices", trees.len()));

    let mut certificates = Vec::new();
    for trial in 0..50 {
        let mut rng = rng_for(6, trial);
        let nv = rng.gen_range(3..=8);
        let edges = rng.gen_range(nv - 1..=(nv + 5).min(14));
        let mut s = spec(Family::RandomConnected, edges, 2, 3, false, rng.gen());
        s.vertices = Some(nv);
        let inst = generate(&s).expect("generate");
        let graph = inst.graph();
        let label = format!("c6_graph_{trial:02}");
        let d = brute_min_diameter(graph);
        match psn_certificate(graph) {
            Ok(cert) => {
                let psn = psn_exact_check(graph, &cert.bijection).unwrap_or(usize::MAX);
                let bound = ceil_half(d) + 2;
                o.check(cert.diameter == d || graph.is_tree(), || {
                    format!("{label}: certified diameter {} but minimum is {d}", cert.diameter)
                });
                o.check(psn <= bound && psn <= cert.bound, || {
                    format!("{label}: psn {psn}, bound {bound}, certificate {}", cert.bound)
                });
                certificates.push(json!({
                    "label": label,
                    "bound": cert.bound,
                    "diameter": d,
                    "psn": psn,
                    "order": cert.bijection.order.iter().map(|e| graph.edge_name(*e)).collect::<Vec<_>>(),
                    "right_is_hi": cert.bijection.right_is_hi,
                }));
            }
            Err(e) => o.check(false, || format!("{label}: {e}")),
        }
        match psn_allocate(&inst, &q(1, 10), PathSolver::default_for(&inst)) {
            Ok(run) => {
                o.check(run.pieces.iter().all(|&p| p <= run.certificate.bound), || {
                    format!("{label}: lifted pieces {:?}", run.pieces)
                });
                m.write(
                    &format!("{label}_lift.json"),
                    &json!({ "shares": graphcake::io::allocation_to_value(graph, &run.allocation) }),
                );
                m.record(&label, &inst, &run.allocation);
            }
            Err(e) => o.check(false, || format!("{label} lift: {e}")),
        }
    }
    m.write("c6_certificates.json", &serde_json::Value::Array(certificates));

    for k in 3..=10 {
        let graph = uniform_star(k, 1).graph().clone();
        match psn_certificate(&graph).and_then(|c| psn_exact_check(&graph, &c.bijection)) {
            Ok(psn) => o.check(psn == 2, || format!("star with {k} edges: psn {psn}")),
            Err(e) => o.check(false, || format!("star {k}: {e}")),
        }
    }

    let tree15 = fifteen_edge_tree();
    match tree_dfs_bijection(&tree15, VertexId(0)).and_then(|b| psn_exact_check(&tree15, &b)) {
        Ok(psn) => o.check(psn <= 4, || format!("fifteen-edge tree psn {psn}")),
        Err(e) => o.check(false, || format!("fifteen-edge tree: {e}")),
    }
    o.elapsed = start.elapsed();
    o
}

/// Random connected subcake: whole edges grown from one edge, or a sub-interval of one edge.
fn random_subcake(rng: &mut ChaCha8Rng, graph: &Graph) -> Share {
    let m = graph.edge_count();
    let first = EdgeId(rng.gen_range(0..m));
    if rng.gen_bool(0.25) {
        let a = rng.gen_range(0..8);
        let b = rng.gen_range(a + 1..=8);
        return Share::new(vec![EdgeInterval::new(first, q(a, 8), q(b, 8)).expect("interval")]);
    }
    let target = rng.gen_range(1..=m);
    let mut chosen = vec![first];
    let mut touched: BTreeSet<VertexId> = [graph.endpoints(first).0, graph.endpoints(first).1].into();
    while chosen.len() < target {
        let frontier: Vec<EdgeId> = graph
            .edge_ids()
            .filter(|e| !chosen.contains(e))
            .filter(|&e| touched.contains(&graph.endpoints(e).0) || touched.contains(&graph.endpoints(e).1))
            .collect();
        if frontier.is_empty() {
            break;
        }
        let e = frontier[rng.gen_range(0..frontier.len())];
        touched.insert(graph.endpoints(e).0);
        touched.insert(graph.endpoints(e).1);
        chosen.push(e);
    }
    Share::new(chosen.into_iter().map(EdgeInterval::full).collect())
}

fn total_length(share: &Share) -> Q {
    share.intervals.iter().map(EdgeInterval::length).sum()
}

fn criterion_7(m: &mut Matrix) -> Outcome {
    let mut o = Outcome::default();
    let start = Instant::now();
    let mut cases = BTreeMap::new();
    let mut lines = Vec::new();
    let mut trial = 0;
    let mut drawn = 0;
    while trial < 500 {
        drawn += 1;
        let mut rng = rng_for(7, drawn);
        let s = spec(
            Family::RandomConnected,
            rng.gen_range(1..=8),
            rng.gen_range(1..=4),
            4,
            false,
            rng.gen(),
        );
        let inst = generate(&s).expect("generate");
        let graph = inst.graph();
        let oracle = Oracle::new(&inst);
        let subcake = random_subcake(&mut rng, graph).normalized(graph);
        let n = inst.agent_count();
        let mut agents: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.6)).collect();
        if agents.is_empty() {
            agents.push(rng.gen_range(0..n));
        }
        let top = agents.iter().map(|&i| inst.value(i, &subcake)).max().expect("agents");
        if top == qi(0) {
            continue;
        }
        let beta = &top * q(rng.gen_range(1..=16), 16);
        let ends = subcake.endpoint_points(graph);
        let root: Point = ends[rng.gen_range(0..ends.len())].clone();
        trial += 1;
        let label = format!("trial {trial}");
        let out = match divide(&oracle, &subcake, &agents, &beta, &root) {
            Ok(out) => out,
            Err(e) => {
                o.check(false, || format!("{label}: {e}"));
                continue;
            }
        };
        let union = out.first.union(&out.second).normalized(graph);
        o.check(union == subcake, || format!("{label}: pieces do not cover the subcake"));
        o.check(total_length(&out.first) + total_length(&out.second) == total_length(&subcake), || {
            format!("{label}: pieces overlap")
        });
        for i in 0..n {
            let sum = inst.value(i, &out.first) + inst.value(i, &out.second);
            o.check(sum == inst.value(i, &subcake), || format!("{label}: agent {i} values do not add up"));
        }
        let first_values: Vec<Q> = agents.iter().map(|&i| inst.value(i, &out.first)).collect();
        o.check(first_values.iter().any(|v| v >= &beta), || format!("{label}: nobody reaches beta"));
        o.check(first_values.iter().all(|v| v < &(qi(2) * &beta)), || format!("{label}: first share reaches 2 beta"));
        o.check(out.second.contains_point(graph, &root), || format!("{label}: root lost"));
        o.check(
            is_connected(graph, &out.first) && is_connected(graph, &out.second) && components(graph, &out.first).len() == 1,
            || format!("{label}: disconnected output"),
        );
        *cases.entry(format!("{:?}", out.case)).or_insert(0) += 1;
        lines.push(json!({
            "trial": trial,
            "beta": format_q(&beta),
            "case": format!("{:?}", out.case),
            "first": graphcake::io::share_to_value(graph, &out.first),
            "second": graphcake::io::share_to_value(graph, &out.second),
        }));
    }
    m.write("c7_divide.json", &serde_json::Value::Array(lines));
    o.notes.push(format!("cases {cases:?}"));
    o.elapsed = start.elapsed();
    o
}

struct Run {
    outcomes: BTreeMap<usize, Outcome>,
    implication_runs: usize,
    implication_failures: Vec<String>,
}

fn run_matrix(out: &Path) -> Run {
    let mut m = Matrix {
        out: out.to_path_buf(),
        outcomes: BTreeMap::new(),
        implication_runs: 0,
        implication_failures: Vec::new(),
    };
    let steps: [(usize, fn(&mut Matrix) -> Outcome); 7] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
    ];
    for (k, step) in steps {
        let outcome = step(&mut m);
        m.outcomes.insert(k, outcome);
    }
    Run {
        outcomes: m.outcomes,
        implication_runs: m.implication_runs,
        implication_failures: m.implication_failures,
    }
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .expect("output dir")
        .map(|entry| {
            let entry = entry.expect("entry");
            (entry.file_name().to_string_lossy().into_owned(), fs::read(entry.path()).expect("read"))
        })
        .collect()
}

const TITLES: [&str; 9] = [
    "iterative-divide is 1/2-additive-EF",
    "star protocol is (3+eps)-EF",
    "identical valuations: adaptive carving",
    "identical valuations: (2+eps)-EF balancing",
    "identical stars: bag filling is 2-EF",
    "path similarity certificates",
    "divide contract",
    "proportionality implications",
    "determinism",
];

fn main() -> ExitCode {
    let first_dir = tempfile::tempdir().expect("tempdir");
    let second_dir = tempfile::tempdir().expect("tempdir");
    let first = run_matrix(first_dir.path());
    let second = run_matrix(second_dir.path());

    let mut outcomes = first.outcomes;
    let mut c8 = Outcome::default();
    for failure in first.implication_failures {
        c8.check(false, || failure);
    }
    c8.check(first.implication_runs > 0, || "no allocations were checked".into());
    c8.notes.push(format!("{} allocations", first.implication_runs));
    outcomes.insert(8, c8);

    let mut c9 = Outcome::default();
    let (a, b) = (files(first_dir.path()), files(second_dir.path()));
    c9.check(a.keys().eq(b.keys()), || "the two runs wrote different file sets".into());
    for (name, bytes) in &a {
        c9.check(b.get(name) == Some(bytes), || format!("{name} differs between runs"));
    }
    for (k, o) in &second.outcomes {
        c9.check(o.failures == outcomes[k].failures, || format!("criterion {k} results differ between runs"));
    }
    c9.notes.push(format!("{} files compared", a.len()));
    outcomes.insert(9, c9);

    let mut all_pass = true;
    for (k, o) in &outcomes {
        let status = if o.failures.is_empty() { "PASS" } else { "FAIL" };
        all_pass &= o.failures.is_empty();
        let notes = if o.notes.is_empty() { String::new() } else { format!(" ({})", o.notes.join("; ")) };
        println!("criterion {k} {status}: {} [{:.2?}]{notes}", TITLES[k - 1], o.elapsed);
        for failure in &o.failures {
            println!("    {failure}");
        }
    }
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
