use alloc::vec::Vec;

use super::{Mode, TensorizedModel, Unit};
use crate::circuit::{Circuit, CircuitBuilder, NodeId, VarId};

/// `(K_U, K_W)` under which [`to_circuit`] squares to the model's distribution.
pub fn latent_sizes(model: &TensorizedModel) -> (usize, usize) {
    match model.mode {
        Mode::Monotone => (model.n_s, 1),
        Mode::SquaredReal | Mode::SquaredComplex => (1, model.n_s),
        Mode::Inception => (model.k_u, model.n_s),
    }
}

/// Explicit amplitude circuit of a model.
///
/// Every layer sum orders its children as `u·N_P + j`, child `j` being the
/// product of unit `j` of each input. Monotone weights and tables become
/// `e^{θ/2}`. Feeding the result to the Inception construction with
/// [`latent_sizes`] gives a circuit that evaluates to the model's unnormalized
/// probability.
pub fn to_circuit(model: &TensorizedModel) -> Circuit {
    let card = model.cardinality;
    let mut b = CircuitBuilder::new();
    for v in 0..model.num_vars() as VarId {
        b.declare(v, card).expect("fresh variable");
    }
    let n_p = model.n_s;
    let mut units: Vec<Vec<NodeId>> = Vec::with_capacity(model.units.len());
    for unit in &model.units {
        let ids = match unit {
            Unit::Leaf { var, offset, .. } => (0..model.n_s)
                .map(|j| {
                    let table = (0..card as usize).map(|v| model.amplitude(model.leaf_index(*offset, j, v))).collect();
                    b.input(*var as VarId, table)
                })
                .collect(),
            Unit::Layer { inputs, n_out, offset, .. } => {
                let products: Vec<NodeId> = (0..n_p)
                    .map(|j| {
                        if inputs.len() == 1 {
                            units[inputs[0]][j]
                        } else {
                            b.product(inputs.iter().map(|&i| units[i][j]).collect())
                        }
                    })
                    .collect();
                (0..*n_out)
                    .map(|s| {
                        let (children, weights) = match model.mode {
                            Mode::Monotone => (
                                products.clone(),
                                (0..n_p).map(|j| model.amplitude(model.weight_index(*offset, s, 0, j))).collect(),
                            ),
                            _ => {
                                let mut cs = Vec::with_capacity(model.k_u * n_p);
                                let mut ws = Vec::with_capacity(model.k_u * n_p);
                                for u in 0..model.k_u {
                                    for (j, p) in products.iter().enumerate() {
                                        cs.push(*p);
                                        ws.push(model.amplitude(model.weight_index(*offset, s, u, j)));
                                    }
                                }
                                (cs, ws)
                            }
                        };
                        b.sum(children, weights)
                    })
                    .collect()
            }
        };
        units.push(ids);
    }
    let root = units.last().expect("model has units")[0];
    b.finish(root).expect("model circuits are well-formed")
}
