use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use super::{Circuit, NodeId, NodeKind, Scope, VarId};

/// A sum node with two children of different scope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmoothnessWitness {
    pub sum: NodeId,
    pub first: NodeId,
    pub other: NodeId,
}

/// A product node whose children `first` and `other` share `var`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecomposabilityWitness {
    pub product: NodeId,
    pub first: NodeId,
    pub other: NodeId,
    pub var: VarId,
}

/// Two same-scope products that split their scope differently.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuredWitness {
    pub first: NodeId,
    pub other: NodeId,
    pub scope: Scope,
}

/// Outcome of [`validate_structure`]. Each property holds exactly when its
/// witness is `None`.
///
/// The structured check compares, for same-scope products, the multisets of
/// non-empty child scopes. Constant (scope-free) children do not take part in
/// a decomposition.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StructureReport {
    pub non_smooth: Option<SmoothnessWitness>,
    pub non_decomposable: Option<DecomposabilityWitness>,
    pub non_structured: Option<StructuredWitness>,
}

impl StructureReport {
    pub fn smooth(&self) -> bool {
        self.non_smooth.is_none()
    }

    pub fn decomposable(&self) -> bool {
        self.non_decomposable.is_none()
    }

    pub fn structured(&self) -> bool {
        self.non_structured.is_none()
    }

    /// Smooth and decomposable: marginals are tractable.
    pub fn tractable(&self) -> bool {
        self.smooth() && self.decomposable()
    }

    /// Smooth, decomposable and structured decomposable.
    pub fn structured_decomposable(&self) -> bool {
        self.tractable() && self.structured()
    }
}

impl fmt::Display for StructureReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.non_smooth {
            None => write!(f, "smooth=true")?,
            Some(w) => write!(f, "smooth=false (sum {} has children {} and {} with different scopes)", w.sum, w.first, w.other)?,
        }
        match &self.non_decomposable {
            None => write!(f, "; decomposable=true")?,
            Some(w) => write!(
                f,
                "; decomposable=false (product {} has children {} and {} sharing variable {})",
                w.product, w.first, w.other, w.var
            )?,
        }
        match &self.non_structured {
            None => write!(f, "; structured=true"),
            Some(w) => write!(
                f,
                "; structured=false (products {} and {} over {} decompose differently)",
                w.first, w.other, w.scope
            ),
        }
    }
}

fn decomposition(circuit: &Circuit, children: &[NodeId]) -> Vec<Scope> {
    let mut parts: Vec<Scope> = children
        .iter()
        .map(|c| circuit.node(*c).scope().clone())
        .filter(|s| !s.is_empty())
        .collect();
    parts.sort();
    parts
}

/// Checks smoothness, decomposability and structured decomposability by exact
/// scope comparison. The first violation in topological order is reported.
pub fn validate_structure(circuit: &Circuit) -> StructureReport {
    let mut report = StructureReport::default();
    let mut by_scope: BTreeMap<&Scope, (NodeId, Vec<Scope>)> = BTreeMap::new();
    for (idx, node) in circuit.nodes().iter().enumerate() {
        let id = NodeId(idx as u32);
        match node.kind() {
            NodeKind::Input { .. } => {}
            NodeKind::Sum { children, .. } => {
                if report.non_smooth.is_none() {
                    let first = children[0];
                    let s0 = circuit.node(first).scope();
                    if let Some(other) = children.iter().find(|c| circuit.node(**c).scope() != s0) {
                        report.non_smooth = Some(SmoothnessWitness { sum: id, first, other: *other });
                    }
                }
            }
            NodeKind::Product { children } => {
                if report.non_decomposable.is_none() {
                    'outer: for (a, ca) in children.iter().enumerate() {
                        for cb in &children[a + 1..] {
                            let sa = circuit.node(*ca).scope();
                            let sb = circuit.node(*cb).scope();
                            if let Some(var) = sa.first_common(sb) {
                                report.non_decomposable = Some(DecomposabilityWitness {
                                    product: id,
                                    first: *ca,
                                    other: *cb,
                                    var,
                                });
                                break 'outer;
                            }
                        }
                    }
                }
                if report.non_structured.is_none() {
                    let parts = decomposition(circuit, children);
                    match by_scope.get(node.scope()) {
                        None => {
                            by_scope.insert(node.scope(), (id, parts));
                        }
                        Some((first, seen)) => {
                            if *seen != parts {
                                report.non_structured = Some(StructuredWitness {
                                    first: *first,
                                    other: id,
                                    scope: node.scope().clone(),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    report
}
