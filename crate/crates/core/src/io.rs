//! Canonical JSON for instances, allocations and reports.
//!
//! Rationals are reduced `"p/q"` strings, object keys are sorted and output
//! ends with a newline, so equal values always serialize to equal bytes.

use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fairness::{FairnessReport, ImplicationCheck};
use crate::model::{Allocation, EdgeInterval, Graph, Instance, Share, StepDensity, ValidityReport};
use crate::query::QueryLedger;
use crate::rational::{format_q, parse_q, Q};

pub fn canonical_string(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("values always serialize");
    text.push('\n');
    text
}

fn qs(values: &[Q]) -> Vec<String> {
    values.iter().map(format_q).collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    vertices: Vec<String>,
    edges: Vec<EdgeFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeFile {
    id: String,
    endpoints: (String, String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DensityFile {
    breakpoints: Vec<String>,
    densities: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentFile {
    id: usize,
    valuation: BTreeMap<String, DensityFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    graph: GraphFile,
    agents: Vec<AgentFile>,
}

pub fn graph_to_value(graph: &Graph) -> Value {
    let edges: Vec<Value> = graph
        .edges()
        .iter()
        .map(|e| {
            json!({
                "id": e.id,
                "endpoints": [graph.vertex_name(e.endpoints.0), graph.vertex_name(e.endpoints.1)],
            })
        })
        .collect();
    let vertices: Vec<&str> = graph.vertex_ids().map(|v| graph.vertex_name(v)).collect();
    json!({ "vertices": vertices, "edges": edges })
}

pub fn instance_to_value(instance: &Instance) -> Value {
    let graph = instance.graph();
    let agents: Vec<Value> = (0..instance.agent_count())
        .map(|i| {
            let valuation: serde_json::Map<String, Value> = graph
                .edge_ids()
                .map(|e| {
                    let d = instance.density(i, e);
                    (
                        graph.edge_name(e).to_string(),
                        json!({ "breakpoints": qs(d.breakpoints()), "densities": qs(d.values()) }),
                    )
                })
                .collect();
            json!({ "id": i + 1, "valuation": valuation })
        })
        .collect();
    json!({ "graph": graph_to_value(graph), "agents": agents })
}

pub fn save_instance(instance: &Instance) -> String {
    canonical_string(&instance_to_value(instance))
}

fn parse_all(texts: &[String]) -> Result<Vec<Q>> {
    texts.iter().map(|t| parse_q(t)).collect()
}

pub fn load_instance(text: &str) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_str(text)?;
    let edges = file
        .graph
        .edges
        .into_iter()
        .map(|e| (e.id, e.endpoints.0, e.endpoints.1))
        .collect();
    let graph = Graph::new(file.graph.vertices, edges)?;
    let mut agents = file.agents;
    agents.sort_by_key(|a| a.id);
    if agents.iter().enumerate().any(|(k, a)| a.id != k + 1) {
        return Err(Error::Malformed("agent ids must be 1..n".into()));
    }
    let mut rows = Vec::with_capacity(agents.len());
    for agent in agents {
        for name in agent.valuation.keys() {
            if graph.edge(name).is_none() {
                return Err(Error::UnknownEdge(name.clone()));
            }
        }
        let mut row = Vec::with_capacity(graph.edge_count());
        for e in graph.edge_ids() {
            let name = graph.edge_name(e);
            let d = agent.valuation.get(name).ok_or_else(|| {
                Error::Malformed(format!("agent {} has no density for edge `{name}`", agent.id))
            })?;
            row.push(StepDensity::new(parse_all(&d.breakpoints)?, parse_all(&d.densities)?)?);
        }
        rows.push(row);
    }
    Instance::new(graph, rows)
}

pub fn share_to_value(graph: &Graph, share: &Share) -> Value {
    Value::Array(
        share
            .intervals
            .iter()
            .map(|iv| {
                json!({
                    "edge": graph.edge_name(iv.edge),
                    "from": format_q(&iv.lo),
                    "to": format_q(&iv.hi),
                })
            })
            .collect(),
    )
}

pub fn allocation_to_value(graph: &Graph, allocation: &Allocation) -> Value {
    Value::Array(
        allocation
            .shares
            .iter()
            .enumerate()
            .map(|(i, s)| json!({ "agent": i + 1, "intervals": share_to_value(graph, s) }))
            .collect(),
    )
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PieceFile {
    edge: String,
    from: String,
    to: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ShareFile {
    agent: usize,
    intervals: Vec<PieceFile>,
}

#[derive(Deserialize)]
struct AllocationFile {
    shares: Vec<ShareFile>,
}

fn pieces_to_share(graph: &Graph, pieces: Vec<PieceFile>) -> Result<Share> {
    pieces
        .into_iter()
        .map(|p| {
            let edge = graph.edge(&p.edge).ok_or(Error::UnknownEdge(p.edge))?;
            EdgeInterval::new(edge, parse_q(&p.from)?, parse_q(&p.to)?)
        })
        .collect::<Result<Vec<_>>>()
        .map(Share::new)
}

pub fn parse_share(graph: &Graph, value: &Value) -> Result<Share> {
    pieces_to_share(graph, serde_json::from_value(value.clone())?)
}

/// Reads the `shares` array of an allocation file; other keys are ignored.
pub fn load_allocation(graph: &Graph, text: &str) -> Result<Allocation> {
    let file: AllocationFile = serde_json::from_str(text)?;
    let mut shares = file.shares;
    shares.sort_by_key(|s| s.agent);
    if shares.iter().enumerate().any(|(k, s)| s.agent != k + 1) {
        return Err(Error::Malformed("share agents must be 1..n".into()));
    }
    let shares = shares
        .into_iter()
        .map(|s| pieces_to_share(graph, s.intervals))
        .collect::<Result<Vec<_>>>()?;
    Ok(Allocation::new(shares))
}

fn optional_q(value: Option<&Q>) -> Value {
    value.map_or(Value::Null, |x| Value::String(format_q(x)))
}

fn implication_value(check: &ImplicationCheck) -> Value {
    json!({
        "envy_to_proportional": check.envy_to_proportional,
        "envy_to_additive": check.envy_to_additive,
        "proportional_to_additive": check.proportional_to_additive,
    })
}

pub fn report_to_value(report: &FairnessReport, implications: &ImplicationCheck) -> Value {
    let matrix: Vec<Vec<String>> = report.matrix.iter().map(|row| qs(row)).collect();
    json!({
        "values": matrix,
        "envy_factor": report.envy_factor.to_string(),
        "additive_envy": format_q(&report.additive_envy),
        "proportionality": report.proportionality.to_string(),
        "pseudo_ef": optional_q(report.pseudo_ef.as_ref()),
        "implications": implication_value(implications),
    })
}

pub fn validity_to_value(graph: &Graph, validity: &ValidityReport) -> Value {
    let overlaps: Vec<Value> = validity
        .overlaps
        .iter()
        .map(|o| {
            json!({
                "agents": [o.agents.0 + 1, o.agents.1 + 1],
                "edge": graph.edge_name(o.segment.edge),
                "from": format_q(&o.segment.lo),
                "to": format_q(&o.segment.hi),
            })
        })
        .collect();
    let gaps: Vec<Value> = validity
        .gaps
        .iter()
        .map(|g| json!({ "edge": graph.edge_name(g.edge), "from": format_q(&g.lo), "to": format_q(&g.hi) }))
        .collect();
    json!({
        "valid": validity.is_valid(),
        "overlaps": overlaps,
        "gaps": gaps,
        "disconnected": validity.disconnected.iter().map(|a| a + 1).collect::<Vec<_>>(),
    })
}

pub fn ledger_to_value(ledger: &QueryLedger) -> Value {
    json!({ "eval": ledger.eval, "cut": ledger.cut })
}
