use alloc::vec::Vec;

use crate::circuit::{Circuit, CircuitBuilder, CircuitError, NodeId, NodeKind};
use crate::Complex;

#[derive(Clone, Copy)]
enum Simplified {
    Zero,
    Const(Complex),
    Node(NodeId),
}

fn is_zero(z: Complex) -> bool {
    z.re == 0.0 && z.im == 0.0
}

/// Removes symbolic zeros and folds constants; the function is unchanged.
///
/// * zero inputs and zero-weighted children drop out of sums, and a product
///   with a zero factor is itself zero;
/// * constant factors of a product are folded into one, dropped when it is 1;
/// * a product left with one factor is replaced by that factor;
/// * a sum over constants only becomes a constant.
///
/// The result is never larger than the input. A circuit that is identically
/// zero simplifies to the constant 0.
pub fn simplify(circuit: &Circuit) -> Result<Circuit, CircuitError> {
    let one = Complex::new(1.0, 0.0);
    let mut b = CircuitBuilder::with_cardinalities(circuit.cardinalities().clone());
    let mut map: Vec<Simplified> = Vec::with_capacity(circuit.num_nodes());
    for node in circuit.nodes() {
        let s = match node.kind() {
            NodeKind::Input { var: None, table } => {
                if is_zero(table[0]) {
                    Simplified::Zero
                } else {
                    Simplified::Const(table[0])
                }
            }
            NodeKind::Input { .. } => {
                if input_is_zero(node.kind()) {
                    Simplified::Zero
                } else {
                    Simplified::Node(b.push(node.kind().clone()))
                }
            }
            NodeKind::Product { children } => {
                let mut factor = one;
                let mut parts = Vec::with_capacity(children.len());
                let mut zero = false;
                for c in children {
                    match map[c.index()] {
                        Simplified::Zero => zero = true,
                        Simplified::Const(z) => factor *= z,
                        Simplified::Node(n) => parts.push(n),
                    }
                }
                if zero || is_zero(factor) {
                    Simplified::Zero
                } else if parts.is_empty() {
                    Simplified::Const(factor)
                } else {
                    if factor != one {
                        parts.push(b.constant(factor));
                    }
                    if parts.len() == 1 {
                        Simplified::Node(parts[0])
                    } else {
                        Simplified::Node(b.product(parts))
                    }
                }
            }
            NodeKind::Sum { children, weights } => {
                let mut kept = Vec::with_capacity(children.len());
                let mut kept_w = Vec::with_capacity(children.len());
                let mut total = Complex::new(0.0, 0.0);
                let mut all_const = true;
                for (c, w) in children.iter().zip(weights) {
                    if is_zero(*w) {
                        continue;
                    }
                    match map[c.index()] {
                        Simplified::Zero => {}
                        Simplified::Const(z) => {
                            total += w * z;
                            kept.push(Simplified::Const(z));
                            kept_w.push(*w);
                        }
                        n @ Simplified::Node(_) => {
                            all_const = false;
                            kept.push(n);
                            kept_w.push(*w);
                        }
                    }
                }
                if kept.is_empty() {
                    Simplified::Zero
                } else if all_const {
                    if is_zero(total) {
                        Simplified::Zero
                    } else {
                        Simplified::Const(total)
                    }
                } else {
                    let cs = kept.into_iter().map(|s| materialize(&mut b, s)).collect();
                    Simplified::Node(b.sum(cs, kept_w))
                }
            }
        };
        map.push(s);
    }
    let root = materialize(&mut b, map[circuit.root().index()]);
    b.finish(root)
}

fn materialize(b: &mut CircuitBuilder, s: Simplified) -> NodeId {
    match s {
        Simplified::Node(n) => n,
        Simplified::Const(z) => b.constant(z),
        Simplified::Zero => b.constant(Complex::new(0.0, 0.0)),
    }
}

fn input_is_zero(kind: &NodeKind) -> bool {
    match kind {
        NodeKind::Input { table, .. } => table.iter().all(|z| is_zero(*z)),
        _ => false,
    }
}
