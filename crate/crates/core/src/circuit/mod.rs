//! Immutable circuit DAGs over categorical variables.
//!
//! Nodes are stored in topological order (children before parents) and
//! identified by their position. The root is the last node and every node is
//! reachable from it.

mod marginal;
mod structure;

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::Complex;

pub use marginal::marginalize;
pub use structure::{
    validate_structure, DecomposabilityWitness, SmoothnessWitness, StructureReport,
    StructuredWitness,
};

/// Variable identifier.
pub type VarId = u32;

/// Position of a node inside its circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Sorted set of variables a node depends on.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Scope(Vec<VarId>);

impl Scope {
    pub fn empty() -> Self {
        Scope(Vec::new())
    }

    pub fn single(v: VarId) -> Self {
        Scope(vec![v])
    }

    pub fn from_vars(mut vars: Vec<VarId>) -> Self {
        vars.sort_unstable();
        vars.dedup();
        Scope(vars)
    }

    pub fn vars(&self) -> &[VarId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    /// First variable present in both scopes.
    pub fn first_common(&self, other: &Scope) -> Option<VarId> {
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                core::cmp::Ordering::Less => i += 1,
                core::cmp::Ordering::Greater => j += 1,
                core::cmp::Ordering::Equal => return Some(self.0[i]),
            }
        }
        None
    }

    pub fn union(&self, other: &Scope) -> Scope {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() || j < other.0.len() {
            let next = match (self.0.get(i), other.0.get(j)) {
                (Some(&a), Some(&b)) if a == b => {
                    i += 1;
                    j += 1;
                    a
                }
                (Some(&a), Some(&b)) if a < b => {
                    i += 1;
                    a
                }
                (Some(_), Some(&b)) => {
                    j += 1;
                    b
                }
                (Some(&a), None) => {
                    i += 1;
                    a
                }
                (None, Some(&b)) => {
                    j += 1;
                    b
                }
                (None, None) => unreachable!(),
            };
            out.push(next);
        }
        Scope(out)
    }

    pub fn without(&self, removed: &[VarId]) -> Scope {
        Scope(self.0.iter().copied().filter(|v| !removed.contains(v)).collect())
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    /// Categorical table over `var`; with `var = None` a constant (table of length 1).
    Input { var: Option<VarId>, table: Vec<Complex> },
    Sum { children: Vec<NodeId>, weights: Vec<Complex> },
    Product { children: Vec<NodeId> },
}

impl NodeKind {
    pub fn children(&self) -> &[NodeId] {
        match self {
            NodeKind::Input { .. } => &[],
            NodeKind::Sum { children, .. } | NodeKind::Product { children } => children,
        }
    }

    pub fn is_sum(&self) -> bool {
        matches!(self, NodeKind::Sum { .. })
    }

    pub fn is_product(&self) -> bool {
        matches!(self, NodeKind::Product { .. })
    }

    /// Constant value when this is a scope-free input.
    pub fn constant(&self) -> Option<Complex> {
        match self {
            NodeKind::Input { var: None, table } => Some(table[0]),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    kind: NodeKind,
    scope: Scope,
}

impl Node {
    pub fn kind(&self) -> &NodeKind {
        &self.kind
    }

    pub fn scope(&self) -> &Scope {
        &self.scope
    }

    pub fn children(&self) -> &[NodeId] {
        self.kind.children()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    #[error("circuit has no nodes")]
    Empty,
    #[error("node {node} references child {child} that does not precede it")]
    BadChild { node: NodeId, child: NodeId },
    #[error("sum node {node} has {children} children but {weights} weights")]
    WeightCount { node: NodeId, children: usize, weights: usize },
    #[error("node {node} has no children")]
    NoChildren { node: NodeId },
    #[error("input node {node} over variable {var} has a table of length {found}, cardinality is {expected}")]
    TableLength { node: NodeId, var: VarId, expected: usize, found: usize },
    #[error("constant input node {node} must have a table of length 1, found {found}")]
    ConstantTable { node: NodeId, found: usize },
    #[error("variable {var} of node {node} has no declared cardinality")]
    UndeclaredVariable { node: NodeId, var: VarId },
    #[error("variable {var} declared with cardinality 0")]
    ZeroCardinality { var: VarId },
    #[error("node {node} carries a non-finite parameter")]
    NonFinite { node: NodeId },
    #[error("root {root} must be the last node ({last})")]
    RootNotLast { root: NodeId, last: NodeId },
    #[error("node {node} is not reachable from the root")]
    Unreachable { node: NodeId },
    #[error("assignment does not cover variable {var}")]
    MissingVariable { var: VarId },
    #[error("value {value} of variable {var} is outside its domain 0..{cardinality}")]
    ValueOutOfRange { var: VarId, value: u32, cardinality: u32 },
    #[error("variable {var} has conflicting cardinalities {a} and {b}")]
    CardinalityConflict { var: VarId, a: u32, b: u32 },
    #[error("circuit is not smooth and decomposable: {0}")]
    Structure(StructureReport),
}

/// Partial assignment of values to variables, indexed by variable id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment(Vec<Option<u32>>);

impl Assignment {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    /// Assigns `values[k]` to variable `k`.
    pub fn from_values(values: &[u32]) -> Self {
        Self(values.iter().map(|&v| Some(v)).collect())
    }

    pub fn set(&mut self, var: VarId, value: u32) {
        let i = var as usize;
        if self.0.len() <= i {
            self.0.resize(i + 1, None);
        }
        self.0[i] = Some(value);
    }

    pub fn with(mut self, var: VarId, value: u32) -> Self {
        self.set(var, value);
        self
    }

    pub fn get(&self, var: VarId) -> Option<u32> {
        self.0.get(var as usize).copied().flatten()
    }
}

/// An immutable, validated circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    nodes: Vec<Node>,
    cardinalities: BTreeMap<VarId, u32>,
}

impl Circuit {
    /// Validates and assembles a circuit. `root` must be the last node.
    pub fn new(
        kinds: Vec<NodeKind>,
        root: NodeId,
        cardinalities: BTreeMap<VarId, u32>,
    ) -> Result<Self, CircuitError> {
        if kinds.is_empty() {
            return Err(CircuitError::Empty);
        }
        let last = NodeId((kinds.len() - 1) as u32);
        if root != last {
            return Err(CircuitError::RootNotLast { root, last });
        }
        for (&var, &card) in &cardinalities {
            if card == 0 {
                return Err(CircuitError::ZeroCardinality { var });
            }
        }
        let mut nodes: Vec<Node> = Vec::with_capacity(kinds.len());
        for (idx, kind) in kinds.into_iter().enumerate() {
            let id = NodeId(idx as u32);
            let scope = match &kind {
                NodeKind::Input { var, table } => {
                    if table.iter().any(|t| !t.re.is_finite() || !t.im.is_finite()) {
                        return Err(CircuitError::NonFinite { node: id });
                    }
                    match var {
                        None => {
                            if table.len() != 1 {
                                return Err(CircuitError::ConstantTable { node: id, found: table.len() });
                            }
                            Scope::empty()
                        }
                        Some(v) => {
                            let card = *cardinalities
                                .get(v)
                                .ok_or(CircuitError::UndeclaredVariable { node: id, var: *v })?;
                            if table.len() != card as usize {
                                return Err(CircuitError::TableLength {
                                    node: id,
                                    var: *v,
                                    expected: card as usize,
                                    found: table.len(),
                                });
                            }
                            Scope::single(*v)
                        }
                    }
                }
                NodeKind::Sum { children, weights } => {
                    if children.len() != weights.len() {
                        return Err(CircuitError::WeightCount {
                            node: id,
                            children: children.len(),
                            weights: weights.len(),
                        });
                    }
                    if weights.iter().any(|w| !w.re.is_finite() || !w.im.is_finite()) {
                        return Err(CircuitError::NonFinite { node: id });
                    }
                    union_of_children(id, children, &nodes)?
                }
                NodeKind::Product { children } => union_of_children(id, children, &nodes)?,
            };
            nodes.push(Node { kind, scope });
        }
        let mut reached = vec![false; nodes.len()];
        reached[root.index()] = true;
        for idx in (0..nodes.len()).rev() {
            if !reached[idx] {
                return Err(CircuitError::Unreachable { node: NodeId(idx as u32) });
            }
            for c in nodes[idx].children() {
                reached[c.index()] = true;
            }
        }
        Ok(Self { nodes, cardinalities })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn root(&self) -> NodeId {
        NodeId((self.nodes.len() - 1) as u32)
    }

    pub fn scope(&self) -> &Scope {
        &self.nodes[self.nodes.len() - 1].scope
    }

    pub fn cardinalities(&self) -> &BTreeMap<VarId, u32> {
        &self.cardinalities
    }

    pub fn cardinality(&self, var: VarId) -> Option<u32> {
        self.cardinalities.get(&var).copied()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Circuit size: the number of edges of the DAG.
    pub fn num_edges(&self) -> usize {
        self.nodes.iter().map(|n| n.children().len()).sum()
    }

    /// The node kinds, for rebuilding modified copies.
    pub fn kinds(&self) -> impl Iterator<Item = &NodeKind> {
        self.nodes.iter().map(|n| &n.kind)
    }

    /// `f_C(assignment)`, computed bottom-up.
    ///
    /// Only variables in the root scope are read.
    pub fn evaluate(&self, assignment: &Assignment) -> Result<Complex, CircuitError> {
        let mut values: Vec<Complex> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let value = match &node.kind {
                NodeKind::Input { var: None, table } => table[0],
                NodeKind::Input { var: Some(v), table } => {
                    let x = assignment.get(*v).ok_or(CircuitError::MissingVariable { var: *v })?;
                    let card = table.len() as u32;
                    if x >= card {
                        return Err(CircuitError::ValueOutOfRange { var: *v, value: x, cardinality: card });
                    }
                    table[x as usize]
                }
                NodeKind::Sum { children, weights } => children
                    .iter()
                    .zip(weights)
                    .map(|(c, w)| w * values[c.index()])
                    .fold(Complex::new(0.0, 0.0), |a, b| a + b),
                NodeKind::Product { children } => children
                    .iter()
                    .map(|c| values[c.index()])
                    .fold(Complex::new(1.0, 0.0), |a, b| a * b),
            };
            values.push(value);
        }
        Ok(values[values.len() - 1])
    }

    /// Every assignment of the root-scope variables, in mixed-radix order with
    /// the smallest variable id varying fastest.
    pub fn scope_assignments(&self) -> AssignmentIter {
        let vars = self.scope().vars().to_vec();
        let cards = vars.iter().map(|v| self.cardinalities[v]).collect();
        AssignmentIter::new(vars, cards)
    }

    /// True when sums and products alternate along every path (inputs ignored).
    pub fn is_alternating(&self) -> bool {
        self.nodes.iter().all(|n| {
            n.children().iter().all(|c| {
                let ck = &self.node(*c).kind;
                !(n.kind.is_sum() && ck.is_sum()) && !(n.kind.is_product() && ck.is_product())
            })
        })
    }
}

fn union_of_children(id: NodeId, children: &[NodeId], built: &[Node]) -> Result<Scope, CircuitError> {
    if children.is_empty() {
        return Err(CircuitError::NoChildren { node: id });
    }
    let mut scope = Scope::empty();
    for &c in children {
        if c.index() >= built.len() {
            return Err(CircuitError::BadChild { node: id, child: c });
        }
        scope = scope.union(&built[c.index()].scope);
    }
    Ok(scope)
}

/// Enumerates all joint assignments of a list of variables.
#[derive(Debug, Clone)]
pub struct AssignmentIter {
    vars: Vec<VarId>,
    cards: Vec<u32>,
    current: Vec<u32>,
    done: bool,
}

impl AssignmentIter {
    pub fn new(vars: Vec<VarId>, cards: Vec<u32>) -> Self {
        let done = cards.iter().any(|&c| c == 0);
        let current = vec![0; vars.len()];
        Self { vars, cards, current, done }
    }

    /// Number of assignments, saturating at `u64::MAX`.
    pub fn count_total(&self) -> u64 {
        self.cards.iter().fold(1u64, |acc, &c| acc.saturating_mul(c as u64))
    }
}

impl Iterator for AssignmentIter {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        if self.done {
            return None;
        }
        let mut a = Assignment::new();
        for (v, x) in self.vars.iter().zip(&self.current) {
            a.set(*v, *x);
        }
        let mut k = 0;
        loop {
            if k == self.current.len() {
                self.done = true;
                break;
            }
            self.current[k] += 1;
            if self.current[k] < self.cards[k] {
                break;
            }
            self.current[k] = 0;
            k += 1;
        }
        Some(a)
    }
}

/// Incremental circuit construction. Unreachable nodes are dropped by
/// [`CircuitBuilder::finish`].
#[derive(Debug, Clone, Default)]
pub struct CircuitBuilder {
    kinds: Vec<NodeKind>,
    cardinalities: BTreeMap<VarId, u32>,
    indicators: BTreeMap<(VarId, u32), NodeId>,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_cardinalities(cardinalities: BTreeMap<VarId, u32>) -> Self {
        Self { cardinalities, ..Self::default() }
    }

    /// Declares a variable; conflicting redeclaration is an error.
    pub fn declare(&mut self, var: VarId, cardinality: u32) -> Result<(), CircuitError> {
        match self.cardinalities.get(&var) {
            Some(&c) if c != cardinality => {
                Err(CircuitError::CardinalityConflict { var, a: c, b: cardinality })
            }
            _ => {
                self.cardinalities.insert(var, cardinality);
                Ok(())
            }
        }
    }

    pub fn cardinalities(&self) -> &BTreeMap<VarId, u32> {
        &self.cardinalities
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn kind(&self, id: NodeId) -> &NodeKind {
        &self.kinds[id.index()]
    }

    pub fn push(&mut self, kind: NodeKind) -> NodeId {
        self.kinds.push(kind);
        NodeId((self.kinds.len() - 1) as u32)
    }

    pub fn input(&mut self, var: VarId, table: Vec<Complex>) -> NodeId {
        self.push(NodeKind::Input { var: Some(var), table })
    }

    pub fn constant(&mut self, value: Complex) -> NodeId {
        self.push(NodeKind::Input { var: None, table: vec![value] })
    }

    /// One-hot `[[var = value]]`, shared between calls.
    pub fn indicator(&mut self, var: VarId, value: u32) -> NodeId {
        if let Some(&id) = self.indicators.get(&(var, value)) {
            return id;
        }
        let card = self.cardinalities.get(&var).copied().unwrap_or(value + 1);
        let table = (0..card)
            .map(|k| Complex::new(if k == value { 1.0 } else { 0.0 }, 0.0))
            .collect();
        let id = self.input(var, table);
        self.indicators.insert((var, value), id);
        id
    }

    pub fn sum(&mut self, children: Vec<NodeId>, weights: Vec<Complex>) -> NodeId {
        self.push(NodeKind::Sum { children, weights })
    }

    pub fn product(&mut self, children: Vec<NodeId>) -> NodeId {
        self.push(NodeKind::Product { children })
    }

    /// Keeps the nodes reachable from `root`, renumbers them and validates.
    pub fn finish(self, root: NodeId) -> Result<Circuit, CircuitError> {
        let n = root.index() + 1;
        if n > self.kinds.len() {
            return Err(CircuitError::BadChild { node: root, child: root });
        }
        let mut reached = vec![false; n];
        reached[root.index()] = true;
        for idx in (0..n).rev() {
            if reached[idx] {
                for c in self.kinds[idx].children() {
                    if c.index() >= idx {
                        return Err(CircuitError::BadChild { node: NodeId(idx as u32), child: *c });
                    }
                    reached[c.index()] = true;
                }
            }
        }
        let mut remap = vec![NodeId(u32::MAX); n];
        let mut kinds = Vec::new();
        for (idx, kind) in self.kinds.into_iter().take(n).enumerate() {
            if !reached[idx] {
                continue;
            }
            remap[idx] = NodeId(kinds.len() as u32);
            let kind = match kind {
                NodeKind::Sum { children, weights } => NodeKind::Sum {
                    children: children.iter().map(|c| remap[c.index()]).collect(),
                    weights,
                },
                NodeKind::Product { children } => NodeKind::Product {
                    children: children.iter().map(|c| remap[c.index()]).collect(),
                },
                input => input,
            };
            kinds.push(kind);
        }
        let root = NodeId((kinds.len() - 1) as u32);
        Circuit::new(kinds, root, self.cardinalities)
    }
}

/// Inserts unit-weight unary sums between product–product edges and
/// single-child products between sum–sum edges, so that sums and products
/// alternate. The function computed is unchanged.
pub fn normalize_alternation(circuit: &Circuit) -> Result<Circuit, CircuitError> {
    let mut b = CircuitBuilder::with_cardinalities(circuit.cardinalities().clone());
    let mut map: Vec<NodeId> = Vec::with_capacity(circuit.num_nodes());
    for node in circuit.nodes() {
        let id = match node.kind() {
            NodeKind::Input { .. } => b.push(node.kind().clone()),
            NodeKind::Sum { children, weights } => {
                let cs = children
                    .iter()
                    .map(|c| {
                        let mapped = map[c.index()];
                        if circuit.node(*c).kind().is_sum() {
                            b.product(vec![mapped])
                        } else {
                            mapped
                        }
                    })
                    .collect();
                b.sum(cs, weights.clone())
            }
            NodeKind::Product { children } => {
                let cs = children
                    .iter()
                    .map(|c| {
                        let mapped = map[c.index()];
                        if circuit.node(*c).kind().is_product() {
                            b.sum(vec![mapped], vec![Complex::new(1.0, 0.0)])
                        } else {
                            mapped
                        }
                    })
                    .collect();
                b.product(cs)
            }
        };
        map.push(id);
    }
    let root = map[circuit.root().index()];
    b.finish(root)
}
