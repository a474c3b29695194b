//! Symbolic circuit algebra.
//!
//! The central construction is [`inception_circuit`]: augment every sum-node
//! scope with a pair of latents `(U, W)`, sum `W` out inside the square,
//! multiply by the complex conjugate, and finally sum `U` out. The result is a
//! smooth, structured-decomposable circuit computing
//! `Σ_u |Σ_w f_aug(x, u, w)|²`.

mod augment;
mod product;
mod simplify;

use alloc::vec::Vec;

use thiserror::Error;

use crate::circuit::{marginalize, validate_structure, Circuit, CircuitError, NodeId, NodeKind, Scope, StructureReport, VarId};

pub use augment::{augment, AugmentedCircuit, LatentPair};
pub use product::multiply_compatible;
pub use simplify::simplify;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("operand is not smooth and structured decomposable: {0}")]
    Structure(StructureReport),
    #[error("circuits decompose scope {scope} differently")]
    Incompatible { scope: Scope },
    #[error("sum node {node} has {found} children, expected K_U·K_W = {expected}")]
    Arity { node: NodeId, expected: usize, found: usize },
    #[error("latent counts must be positive (K_U = {k_u}, K_W = {k_w})")]
    LatentCount { k_u: usize, k_w: usize },
    #[error("sum node {node} has a descendant sum over the same scope; latents would be shared along one path")]
    NestedScope { node: NodeId },
    #[error("children of sum node {node} carry different latent variables; the augmented circuit is not smooth")]
    LatentIncomplete { node: NodeId },
}

/// Entrywise complex conjugate of every weight and table; same DAG.
pub fn conjugate(circuit: &Circuit) -> Circuit {
    let kinds: Vec<NodeKind> = circuit
        .kinds()
        .map(|kind| match kind {
            NodeKind::Input { var, table } => NodeKind::Input {
                var: *var,
                table: table.iter().map(|t| t.conj()).collect(),
            },
            NodeKind::Sum { children, weights } => NodeKind::Sum {
                children: children.clone(),
                weights: weights.iter().map(|w| w.conj()).collect(),
            },
            product => product.clone(),
        })
        .collect();
    Circuit::new(kinds, circuit.root(), circuit.cardinalities().clone())
        .expect("conjugation preserves well-formedness")
}

/// Builds the circuit of `Σ_u |Σ_w f_aug(x, u, w)|²`.
///
/// `K_W = 1` yields a monotone circuit with squared-modulus parameters;
/// `K_U = 1` yields the plain squared circuit `|f|²`.
pub fn inception_circuit(circuit: &Circuit, k_u: usize, k_w: usize) -> Result<Circuit, TransformError> {
    let report = validate_structure(circuit);
    if !report.structured_decomposable() {
        return Err(TransformError::Structure(report));
    }
    let aug = augment(circuit, k_u, k_w)?;
    let inner = marginalize(&aug.circuit, &aug.w_vars())?;
    let squared = multiply_compatible(&conjugate(&inner), &inner)?;
    let outer = marginalize(&squared, &aug.u_vars())?;
    Ok(simplify(&outer)?)
}

/// Variables shared by the two circuits must agree on cardinality.
pub(crate) fn merged_cardinalities(
    a: &Circuit,
    b: &Circuit,
) -> Result<alloc::collections::BTreeMap<VarId, u32>, CircuitError> {
    let mut out = a.cardinalities().clone();
    for (&v, &c) in b.cardinalities() {
        match out.get(&v) {
            Some(&existing) if existing != c => {
                return Err(CircuitError::CardinalityConflict { var: v, a: existing, b: c })
            }
            _ => {
                out.insert(v, c);
            }
        }
    }
    Ok(out)
}
