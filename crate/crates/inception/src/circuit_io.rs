//! Circuit JSON documents.
//!
//! ```json
//! {
//!   "cardinalities": {"0": 2},
//!   "nodes": [
//!     {"id": 0, "kind": "input", "var": 0, "table": [[1.0, 0.0], [0.5, -2.0]]},
//!     {"id": 1, "kind": "input", "table": [[3.0, 0.0]]},
//!     {"id": 2, "kind": "product", "children": [0, 1]}
//!   ],
//!   "root": 2
//! }
//! ```
//!
//! Nodes are listed children-first. An input without `var` is a constant.
//! Numbers are written in shortest round-trip form, so reading a written
//! document reproduces every value bit for bit.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use inception_core::circuit::{Circuit, CircuitBuilder, NodeId, NodeKind, VarId};
use inception_core::Complex;
use serde::{Deserialize, Serialize};

use crate::{read_file, write_file, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindTag {
    Input,
    Sum,
    Product,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDoc {
    pub id: u32,
    pub kind: KindTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub var: Option<VarId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub children: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitDoc {
    pub cardinalities: BTreeMap<VarId, u32>,
    pub nodes: Vec<NodeDoc>,
    pub root: u32,
}

fn pairs(values: &[Complex]) -> Vec<[f64; 2]> {
    values.iter().map(|z| [z.re, z.im]).collect()
}

fn complexes(values: &[[f64; 2]]) -> Vec<Complex> {
    values.iter().map(|[re, im]| Complex::new(*re, *im)).collect()
}

impl CircuitDoc {
    pub fn from_circuit(circuit: &Circuit) -> Self {
        let nodes = circuit
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, node)| {
                let id = i as u32;
                let ids = |cs: &[NodeId]| Some(cs.iter().map(|c| c.0).collect());
                match node.kind() {
                    NodeKind::Input { var, table } => NodeDoc {
                        id,
                        kind: KindTag::Input,
                        var: *var,
                        table: Some(pairs(table)),
                        children: None,
                        weights: None,
                    },
                    NodeKind::Sum { children, weights } => NodeDoc {
                        id,
                        kind: KindTag::Sum,
                        var: None,
                        table: None,
                        children: ids(children),
                        weights: Some(pairs(weights)),
                    },
                    NodeKind::Product { children } => NodeDoc {
                        id,
                        kind: KindTag::Product,
                        var: None,
                        table: None,
                        children: ids(children),
                        weights: None,
                    },
                }
            })
            .collect();
        CircuitDoc { cardinalities: circuit.cardinalities().clone(), nodes, root: circuit.root().0 }
    }

    /// Builds the circuit. Ids may be arbitrary as long as every child is
    /// listed before its parent; nodes not reachable from the root are dropped.
    pub fn to_circuit(&self) -> Result<Circuit> {
        let bad = |id: u32, msg: &str| Error::format("circuit document", format!("node {id}: {msg}"));
        let mut b = CircuitBuilder::with_cardinalities(self.cardinalities.clone());
        let mut ids: HashMap<u32, NodeId> = HashMap::with_capacity(self.nodes.len());
        for n in &self.nodes {
            let children = || -> Result<Vec<NodeId>> {
                n.children
                    .as_deref()
                    .ok_or_else(|| bad(n.id, "missing children"))?
                    .iter()
                    .map(|c| ids.get(c).copied().ok_or_else(|| bad(n.id, &format!("child {c} is not listed before it"))))
                    .collect()
            };
            let kind = match n.kind {
                KindTag::Input => {
                    if n.children.is_some() || n.weights.is_some() {
                        return Err(bad(n.id, "inputs take no children or weights"));
                    }
                    let table = complexes(n.table.as_deref().ok_or_else(|| bad(n.id, "missing table"))?);
                    NodeKind::Input { var: n.var, table }
                }
                KindTag::Sum => {
                    if n.var.is_some() || n.table.is_some() {
                        return Err(bad(n.id, "sums take no var or table"));
                    }
                    let weights = complexes(n.weights.as_deref().ok_or_else(|| bad(n.id, "missing weights"))?);
                    NodeKind::Sum { children: children()?, weights }
                }
                KindTag::Product => {
                    if n.var.is_some() || n.table.is_some() || n.weights.is_some() {
                        return Err(bad(n.id, "products take only children"));
                    }
                    NodeKind::Product { children: children()? }
                }
            };
            let new = b.push(kind);
            if ids.insert(n.id, new).is_some() {
                return Err(bad(n.id, "duplicate id"));
            }
        }
        let root = *ids.get(&self.root).ok_or_else(|| bad(self.root, "root is not listed"))?;
        Ok(b.finish(root)?)
    }
}

pub fn to_json(circuit: &Circuit) -> Result<String> {
    if let Some(i) = circuit.nodes().iter().position(|n| {
        let vals: &[Complex] = match n.kind() {
            NodeKind::Input { table, .. } => table,
            NodeKind::Sum { weights, .. } => weights,
            NodeKind::Product { .. } => &[],
        };
        vals.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
    }) {
        return Err(Error::Invalid(format!("node {i} has a non-finite value, which JSON cannot carry")));
    }
    let mut s = serde_json::to_string_pretty(&CircuitDoc::from_circuit(circuit)).map_err(|e| Error::format("circuit document", e))?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(text: &str) -> Result<Circuit> {
    let doc: CircuitDoc = serde_json::from_str(text).map_err(|e| Error::format("circuit document", e))?;
    doc.to_circuit()
}

pub fn read_circuit(path: &Path) -> Result<Circuit> {
    let bytes = read_file(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::format(path.display().to_string(), e))?;
    from_json(text).map_err(|e| match e {
        Error::Format { message, .. } => Error::Format { what: path.display().to_string(), message },
        other => other,
    })
}

pub fn write_circuit(path: &Path, circuit: &Circuit) -> Result<()> {
    write_file(path, to_json(circuit)?.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_example_parses() {
        let text = r#"{
          "cardinalities": {"0": 2},
          "nodes": [
            {"id": 0, "kind": "input", "var": 0, "table": [[1.0, 0.0], [0.5, -2.0]]},
            {"id": 1, "kind": "input", "table": [[3.0, 0.0]]},
            {"id": 2, "kind": "product", "children": [0, 1]}
          ],
          "root": 2
        }"#;
        let c = from_json(text).unwrap();
        let x = inception_core::Assignment::from_values(&[1]);
        assert_eq!(c.evaluate(&x).unwrap(), Complex::new(1.5, -6.0));
    }

    #[test]
    fn foreign_ids_are_remapped() {
        let text = r#"{"cardinalities": {"3": 2}, "root": 7, "nodes": [
            {"id": 9, "kind": "input", "var": 3, "table": [[1, 0], [2, 0]]},
            {"id": 7, "kind": "sum", "children": [9], "weights": [[0, 1]]}]}"#;
        let c = from_json(text).unwrap();
        assert_eq!(c.root(), NodeId(1));
    }

    #[test]
    fn malformed_documents_are_rejected() {
        let forward = r#"{"cardinalities": {}, "root": 1, "nodes": [
            {"id": 1, "kind": "product", "children": [2]},
            {"id": 2, "kind": "input", "table": [[1, 0]]}]}"#;
        assert!(matches!(from_json(forward), Err(Error::Format { .. })));
        let extra = r#"{"cardinalities": {}, "root": 0, "nodes": [{"id": 0, "kind": "input", "table": [[1, 0]], "weights": []}]}"#;
        assert!(matches!(from_json(extra), Err(Error::Format { .. })));
        let bad_len = r#"{"cardinalities": {"0": 3}, "root": 0, "nodes": [{"id": 0, "kind": "input", "var": 0, "table": [[1, 0]]}]}"#;
        assert!(matches!(from_json(bad_len), Err(Error::Circuit(_))));
    }
}
