use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::TransformError;
use crate::circuit::{validate_structure, Circuit, CircuitBuilder, NodeId, NodeKind, Scope, VarId};

/// Latent variables attached to one sum-node scope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatentPair {
    /// Summed outside the square, cardinality `K_U`.
    pub u: VarId,
    /// Summed inside the square, cardinality `K_W`.
    pub w: VarId,
}

/// A circuit over the original variables plus one latent pair per sum scope.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedCircuit {
    pub circuit: Circuit,
    pub latent_map: BTreeMap<Scope, LatentPair>,
    pub k_u: usize,
    pub k_w: usize,
}

impl AugmentedCircuit {
    pub fn u_vars(&self) -> Vec<VarId> {
        let mut v: Vec<VarId> = self.latent_map.values().map(|p| p.u).collect();
        v.sort_unstable();
        v
    }

    pub fn w_vars(&self) -> Vec<VarId> {
        let mut v: Vec<VarId> = self.latent_map.values().map(|p| p.w).collect();
        v.sort_unstable();
        v
    }
}

/// True if some sum lies below `sum` on a path of nodes sharing its scope.
fn has_same_scope_sum_below(circuit: &Circuit, sum: NodeId) -> bool {
    let scope = circuit.node(sum).scope();
    let mut stack: Vec<NodeId> = circuit.node(sum).children().to_vec();
    let mut seen = vec![false; circuit.num_nodes()];
    while let Some(n) = stack.pop() {
        if seen[n.index()] || circuit.node(n).scope() != scope {
            continue;
        }
        seen[n.index()] = true;
        if circuit.node(n).kind().is_sum() {
            return true;
        }
        stack.extend_from_slice(circuit.node(n).children());
    }
    false
}

/// Wraps child `i·K_W + j` of every sum node in a product with the indicators
/// `[[U = i]]` and `[[W = j]]` of its scope's latent pair.
///
/// Latent ids are allocated above the largest variable of the circuit, in
/// order of first appearance of each sum scope: `U` then `W`. Summing all
/// latents out recovers the original circuit.
pub fn augment(circuit: &Circuit, k_u: usize, k_w: usize) -> Result<AugmentedCircuit, TransformError> {
    if k_u == 0 || k_w == 0 {
        return Err(TransformError::LatentCount { k_u, k_w });
    }
    let arity = k_u * k_w;
    let mut next_var = circuit.cardinalities().keys().next_back().map_or(0, |v| v + 1);
    let mut latent_map: BTreeMap<Scope, LatentPair> = BTreeMap::new();
    for (idx, node) in circuit.nodes().iter().enumerate() {
        if let NodeKind::Sum { children, .. } = node.kind() {
            let id = NodeId(idx as u32);
            if children.len() != arity {
                return Err(TransformError::Arity { node: id, expected: arity, found: children.len() });
            }
            if has_same_scope_sum_below(circuit, id) {
                return Err(TransformError::NestedScope { node: id });
            }
            latent_map.entry(node.scope().clone()).or_insert_with(|| {
                let pair = LatentPair { u: next_var, w: next_var + 1 };
                next_var += 2;
                pair
            });
        }
    }

    let mut b = CircuitBuilder::with_cardinalities(circuit.cardinalities().clone());
    for pair in latent_map.values() {
        b.declare(pair.u, k_u as u32)?;
        b.declare(pair.w, k_w as u32)?;
    }
    let mut map: Vec<NodeId> = Vec::with_capacity(circuit.num_nodes());
    let mut origin: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    for (idx, node) in circuit.nodes().iter().enumerate() {
        let id = match node.kind() {
            NodeKind::Input { .. } => b.push(node.kind().clone()),
            NodeKind::Product { children } => b.product(children.iter().map(|c| map[c.index()]).collect()),
            NodeKind::Sum { children, weights } => {
                let pair = latent_map[node.scope()];
                let mut wrapped = Vec::with_capacity(arity);
                for (pos, c) in children.iter().enumerate() {
                    let (i, j) = ((pos / k_w) as u32, (pos % k_w) as u32);
                    let iu = b.indicator(pair.u, i);
                    let iw = b.indicator(pair.w, j);
                    wrapped.push(b.product(vec![map[c.index()], iu, iw]));
                }
                let s = b.sum(wrapped, weights.clone());
                origin.insert(s, NodeId(idx as u32));
                s
            }
        };
        map.push(id);
    }
    let root = map[circuit.root().index()];
    // Every pushed node is reachable, so `finish` keeps ids unchanged.
    let out = b.finish(root)?;
    let report = validate_structure(&out);
    if let Some(w) = &report.non_smooth {
        let node = origin.get(&w.sum).copied().unwrap_or(w.sum);
        return Err(TransformError::LatentIncomplete { node });
    }
    if !report.structured_decomposable() {
        return Err(TransformError::Structure(report));
    }
    Ok(AugmentedCircuit { circuit: out, latent_map, k_u, k_w })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{marginalize, Assignment};
    use crate::gen::{self, GenConfig};
    use crate::math;
    use crate::Complex;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn re(x: f64) -> Complex {
        Complex::new(x, 0.0)
    }

    fn four_way_sum() -> Circuit {
        let mut b = CircuitBuilder::new();
        b.declare(0, 4).unwrap();
        let cs: Vec<NodeId> = (0..4).map(|v| b.indicator(0, v)).collect();
        let s = b.sum(cs, vec![re(1.0), re(2.0), re(3.0), re(4.0)]);
        b.finish(s).unwrap()
    }

    #[test]
    fn unit_latents_leave_values_unchanged() {
        let mut b = CircuitBuilder::new();
        b.declare(0, 2).unwrap();
        let a = b.input(0, vec![re(0.5), Complex::new(1.0, 2.0)]);
        let s = b.sum(vec![a], vec![Complex::new(0.0, 3.0)]);
        let f = b.finish(s).unwrap();
        let aug = augment(&f, 1, 1).unwrap();
        assert_eq!(aug.latent_map.len(), 1);
        for x in f.scope_assignments() {
            let y = x.clone().with(1, 0).with(2, 0);
            assert_eq!(aug.circuit.evaluate(&y).unwrap(), f.evaluate(&x).unwrap());
        }
    }

    #[test]
    fn child_three_of_four_maps_to_one_one() {
        let f = four_way_sum();
        let aug = augment(&f, 2, 2).unwrap();
        let pair = aug.latent_map[f.scope()];
        assert_eq!((pair.u, pair.w), (1, 2));
        // x = 3 selects child 3, which must carry U = 1, W = 1.
        let x = Assignment::from_values(&[3]);
        for (u, w) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let v = aug.circuit.evaluate(&x.clone().with(1, u).with(2, w)).unwrap();
            assert_eq!(v, if (u, w) == (1, 1) { re(4.0) } else { re(0.0) });
        }
    }

    #[test]
    fn wrong_arity_names_the_node() {
        let f = four_way_sum();
        assert_eq!(
            augment(&f, 3, 1).unwrap_err(),
            TransformError::Arity { node: f.root(), expected: 3, found: 4 }
        );
        assert_eq!(augment(&f, 0, 4).unwrap_err(), TransformError::LatentCount { k_u: 0, k_w: 4 });
    }

    #[test]
    fn nested_same_scope_sums_are_rejected() {
        let mut b = CircuitBuilder::new();
        b.declare(0, 2).unwrap();
        let a = b.indicator(0, 0);
        let inner = b.sum(vec![a], vec![re(2.0)]);
        let outer = b.sum(vec![inner], vec![re(3.0)]);
        let f = b.finish(outer).unwrap();
        assert_eq!(augment(&f, 1, 1).unwrap_err(), TransformError::NestedScope { node: f.root() });
    }

    #[test]
    fn one_latent_pair_per_scope() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let cfg = GenConfig::small();
        for _ in 0..30 {
            let f = gen::random_structured(&mut rng, &cfg);
            let scopes: alloc::collections::BTreeSet<&Scope> =
                f.nodes().iter().filter(|n| n.kind().is_sum()).map(|n| n.scope()).collect();
            let aug = augment(&f, cfg.k_u, cfg.k_w).unwrap();
            assert_eq!(aug.latent_map.len(), scopes.len());
            assert_eq!(aug.circuit.cardinalities().len(), f.cardinalities().len() + 2 * scopes.len());
        }
    }

    #[test]
    fn summing_latents_recovers_the_circuit() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cfg = GenConfig::small();
        for _ in 0..50 {
            let f = gen::random_structured(&mut rng, &cfg);
            let aug = augment(&f, cfg.k_u, cfg.k_w).unwrap();
            let mut latents = aug.u_vars();
            latents.extend(aug.w_vars());
            let back = marginalize(&aug.circuit, &latents).unwrap();
            for _ in 0..4 {
                let x = gen::random_assignment(&mut rng, &f);
                let want = f.evaluate(&x).unwrap();
                assert!(math::rel_diff(back.evaluate(&x).unwrap(), want, 1e-300) <= 1e-12);
            }
        }
    }
}
