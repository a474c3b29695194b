use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::{merged_cardinalities, TransformError};
use crate::circuit::{validate_structure, Circuit, CircuitBuilder, NodeId, NodeKind, Scope};

/// Which operand a node belongs to.
#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
}

struct Multiplier<'a> {
    left: &'a Circuit,
    right: &'a Circuit,
    out: CircuitBuilder,
    pairs: BTreeMap<(u32, u32), NodeId>,
    copies_left: BTreeMap<u32, NodeId>,
    copies_right: BTreeMap<u32, NodeId>,
}

/// Children of a product split into (non-empty scope, child) and constants.
fn split_product<'c>(circuit: &'c Circuit, children: &[NodeId]) -> (Vec<(&'c Scope, NodeId)>, Vec<NodeId>) {
    let mut parts = Vec::new();
    let mut constants = Vec::new();
    for &c in children {
        let s = circuit.node(c).scope();
        if s.is_empty() {
            constants.push(c);
        } else {
            parts.push((s, c));
        }
    }
    (parts, constants)
}

impl<'a> Multiplier<'a> {
    fn circuit(&self, side: Side) -> &'a Circuit {
        match side {
            Side::Left => self.left,
            Side::Right => self.right,
        }
    }

    /// Copies the sub-DAG below `id` of one operand into the output.
    fn copy(&mut self, side: Side, id: NodeId) -> NodeId {
        let memo = match side {
            Side::Left => &self.copies_left,
            Side::Right => &self.copies_right,
        };
        if let Some(&n) = memo.get(&id.0) {
            return n;
        }
        let circuit = self.circuit(side);
        let kind = match circuit.node(id).kind() {
            NodeKind::Input { .. } => circuit.node(id).kind().clone(),
            NodeKind::Sum { children, weights } => {
                let cs = children.iter().map(|c| self.copy(side, *c)).collect();
                NodeKind::Sum { children: cs, weights: weights.clone() }
            }
            NodeKind::Product { children } => {
                NodeKind::Product { children: children.iter().map(|c| self.copy(side, *c)).collect() }
            }
        };
        let n = self.out.push(kind);
        match side {
            Side::Left => self.copies_left.insert(id.0, n),
            Side::Right => self.copies_right.insert(id.0, n),
        };
        n
    }

    fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TransformError> {
        if let Some(&n) = self.pairs.get(&(a.0, b.0)) {
            return Ok(n);
        }
        let n = self.mul_uncached(a, b)?;
        self.pairs.insert((a.0, b.0), n);
        Ok(n)
    }

    fn mul_uncached(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TransformError> {
        let (left, right) = (self.left, self.right);
        let (na, nb) = (left.node(a), right.node(b));
        let (sa, sb) = (na.scope(), nb.scope());

        if sa.is_empty() || sb.is_empty() {
            if let (Some(x), Some(y)) = (na.kind().constant(), nb.kind().constant()) {
                return Ok(self.out.constant(x * y));
            }
            let ca = self.copy(Side::Left, a);
            let cb = self.copy(Side::Right, b);
            return Ok(self.out.product(vec![ca, cb]));
        }
        if sa != sb {
            return Err(TransformError::Incompatible { scope: sa.clone() });
        }

        match (na.kind(), nb.kind()) {
            (
                NodeKind::Sum { children: ca, weights: wa },
                NodeKind::Sum { children: cb, weights: wb },
            ) => {
                let mut children = Vec::with_capacity(ca.len() * cb.len());
                let mut weights = Vec::with_capacity(ca.len() * cb.len());
                for (x, wx) in ca.iter().zip(wa) {
                    for (y, wy) in cb.iter().zip(wb) {
                        children.push(self.mul(*x, *y)?);
                        weights.push(wx * wy);
                    }
                }
                Ok(self.out.sum(children, weights))
            }
            (NodeKind::Sum { children, weights }, _) => {
                let cs = children.iter().map(|x| self.mul(*x, b)).collect::<Result<_, _>>()?;
                Ok(self.out.sum(cs, weights.clone()))
            }
            (_, NodeKind::Sum { children, weights }) => {
                let cs = children.iter().map(|y| self.mul(a, *y)).collect::<Result<_, _>>()?;
                Ok(self.out.sum(cs, weights.clone()))
            }
            (NodeKind::Input { table: ta, .. }, NodeKind::Input { var, table: tb }) => {
                let table = ta.iter().zip(tb).map(|(x, y)| x * y).collect();
                Ok(self.out.input(var.expect("non-empty scope"), table))
            }
            (NodeKind::Product { children }, _) if self.pass_through(Side::Left, children).is_some() => {
                self.mul_with_pass_through(a, b)
            }
            (_, NodeKind::Product { children }) if self.pass_through(Side::Right, children).is_some() => {
                self.mul_with_pass_through(a, b)
            }
            (NodeKind::Product { children: ca }, NodeKind::Product { children: cb }) => {
                let (pa, ka) = split_product(left, ca);
                let (pb, kb) = split_product(right, cb);
                if pa.len() != pb.len() || pa.iter().any(|(s, _)| !pb.iter().any(|(t, _)| s == t)) {
                    return Err(TransformError::Incompatible { scope: sa.clone() });
                }
                let mut children = Vec::with_capacity(pa.len() + ka.len() + kb.len());
                for (s, x) in &pa {
                    let y = pb.iter().find(|(t, _)| t == s).map(|(_, y)| *y).expect("matched above");
                    children.push(self.mul(*x, y)?);
                }
                for k in ka {
                    children.push(self.copy(Side::Left, k));
                }
                for k in kb {
                    children.push(self.copy(Side::Right, k));
                }
                Ok(self.out.product(children))
            }
            _ => Err(TransformError::Incompatible { scope: sa.clone() }),
        }
    }

    /// The only non-constant child of a product, when it has exactly one.
    fn pass_through(&self, side: Side, children: &[NodeId]) -> Option<NodeId> {
        let circuit = self.circuit(side);
        let mut it = children.iter().filter(|c| !circuit.node(**c).scope().is_empty());
        let first = *it.next()?;
        it.next().is_none().then_some(first)
    }

    /// Products whose scope is carried by a single child multiply through that
    /// child; their constants are kept alongside.
    fn mul_with_pass_through(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TransformError> {
        let (left, right) = (self.left, self.right);
        if let NodeKind::Product { children } = left.node(a).kind() {
            if let Some(inner) = self.pass_through(Side::Left, children) {
                let mut cs = vec![self.mul(inner, b)?];
                for k in children.iter().filter(|c| **c != inner) {
                    cs.push(self.copy(Side::Left, *k));
                }
                return Ok(self.out.product(cs));
            }
        }
        if let NodeKind::Product { children } = right.node(b).kind() {
            if let Some(inner) = self.pass_through(Side::Right, children) {
                let mut cs = vec![self.mul(a, inner)?];
                for k in children.iter().filter(|c| **c != inner) {
                    cs.push(self.copy(Side::Right, *k));
                }
                return Ok(self.out.product(cs));
            }
        }
        Err(TransformError::Incompatible { scope: left.node(a).scope().clone() })
    }
}

/// Product circuit of two compatible smooth, structured-decomposable circuits.
///
/// Same-scope nodes are paired recursively, memoized on the pair of node ids,
/// so the output has at most `O(|c1|·|c2|)` edges. Sum × sum children are
/// ordered with the left operand's child varying slowest.
pub fn multiply_compatible(c1: &Circuit, c2: &Circuit) -> Result<Circuit, TransformError> {
    for c in [c1, c2] {
        let report = validate_structure(c);
        if !report.structured_decomposable() {
            return Err(TransformError::Structure(report));
        }
    }
    let cards = merged_cardinalities(c1, c2)?;
    let mut m = Multiplier {
        left: c1,
        right: c2,
        out: CircuitBuilder::with_cardinalities(cards),
        pairs: BTreeMap::new(),
        copies_left: BTreeMap::new(),
        copies_right: BTreeMap::new(),
    };
    let root = m.mul(c1.root(), c2.root())?;
    Ok(m.out.finish(root)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Assignment, CircuitBuilder};
    use crate::gen::{self, GenConfig};
    use crate::math;
    use crate::Complex;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn re(x: f64) -> Complex {
        Complex::new(x, 0.0)
    }

    #[test]
    fn distributes_two_by_two() {
        let mut b = CircuitBuilder::new();
        b.declare(0, 2).unwrap();
        let f0 = b.input(0, vec![re(1.0), re(2.0)]);
        let f1 = b.input(0, vec![re(-1.0), re(0.5)]);
        let s = b.sum(vec![f0, f1], vec![re(2.0), re(3.0)]);
        let left = b.finish(s).unwrap();

        let mut b = CircuitBuilder::new();
        b.declare(0, 2).unwrap();
        let g0 = b.input(0, vec![re(4.0), re(1.0)]);
        let g1 = b.input(0, vec![re(0.0), re(1.0)]);
        let s = b.sum(vec![g0, g1], vec![re(5.0), re(7.0)]);
        let right = b.finish(s).unwrap();

        let p = multiply_compatible(&left, &right).unwrap();
        match p.node(p.root()).kind() {
            NodeKind::Sum { weights, children } => {
                assert_eq!(children.len(), 4);
                assert_eq!(weights, &vec![re(10.0), re(14.0), re(15.0), re(21.0)]);
            }
            _ => panic!("root must be a sum"),
        }
        for v in 0..2 {
            let x = Assignment::from_values(&[v]);
            let want = left.evaluate(&x).unwrap() * right.evaluate(&x).unwrap();
            assert_eq!(p.evaluate(&x).unwrap(), want);
        }
    }

    #[test]
    fn incompatible_vtrees_are_rejected() {
        // {A}{B,C} against {A,B}{C}
        let build = |split_first: bool| {
            let mut b = CircuitBuilder::new();
            for v in 0..3 {
                b.declare(v, 2).unwrap();
            }
            let a = b.input(0, vec![re(1.0), re(2.0)]);
            let bv = b.input(1, vec![re(1.0), re(3.0)]);
            let cv = b.input(2, vec![re(1.0), re(4.0)]);
            let p = if split_first {
                let bc = b.product(vec![bv, cv]);
                let bc = b.sum(vec![bc], vec![re(1.0)]);
                b.product(vec![a, bc])
            } else {
                let ab = b.product(vec![a, bv]);
                let ab = b.sum(vec![ab], vec![re(1.0)]);
                b.product(vec![ab, cv])
            };
            let s = b.sum(vec![p], vec![re(1.0)]);
            b.finish(s).unwrap()
        };
        let err = multiply_compatible(&build(true), &build(false)).unwrap_err();
        assert_eq!(err, TransformError::Incompatible { scope: Scope::from_vars(vec![0, 1, 2]) });
    }

    #[test]
    fn random_compatible_pairs_multiply_pointwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let (f, g) = gen::random_compatible_pair(&mut rng, &GenConfig::small());
            let p = multiply_compatible(&f, &g).unwrap();
            assert!(validate_structure(&p).structured_decomposable());
            assert!(p.num_edges() <= (f.num_edges() + f.num_nodes()) * (g.num_edges() + g.num_nodes()));
            for _ in 0..4 {
                let x = gen::random_assignment(&mut rng, &f);
                let want = f.evaluate(&x).unwrap() * g.evaluate(&x).unwrap();
                assert!(math::rel_diff(p.evaluate(&x).unwrap(), want, 1e-300) <= 1e-12);
            }
        }
    }
}
