//! Seeded random circuit generators.
//!
//! Structured circuits are grown over a random vtree: every leaf holds input
//! units over one variable and every internal vtree node holds sum units whose
//! children are products of one unit from each side. Circuits over the same
//! vtree are compatible.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::circuit::{Assignment, Circuit, CircuitBuilder, NodeId, NodeKind, VarId};
use crate::Complex;

/// Number field used for random weights and table entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Real,
    Complex,
    Nonnegative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub min_vars: usize,
    pub max_vars: usize,
    /// Cardinalities are drawn uniformly from `2..=max_card`.
    pub max_card: u32,
    /// Sum and input units per non-root vtree node.
    pub units: usize,
    pub k_u: usize,
    pub k_w: usize,
    /// Put a layer of sums over the inputs of every leaf.
    pub leaf_sums: bool,
    pub field: Field,
}

impl GenConfig {
    /// Up to four variables of cardinality 2 or 3, `K_U = K_W = 2`.
    pub fn small() -> Self {
        Self {
            min_vars: 1,
            max_vars: 4,
            max_card: 3,
            units: 2,
            k_u: 2,
            k_w: 2,
            leaf_sums: false,
            field: Field::Complex,
        }
    }

    /// Children per sum node.
    pub fn arity(&self) -> usize {
        self.k_u * self.k_w
    }
}

/// Binary tree over variables fixing how scopes decompose.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Vtree {
    Leaf(VarId),
    Node(Box<Vtree>, Box<Vtree>),
}

impl Vtree {
    pub fn vars(&self) -> Vec<VarId> {
        match self {
            Vtree::Leaf(v) => vec![*v],
            Vtree::Node(l, r) => {
                let mut out = l.vars();
                out.extend(r.vars());
                out
            }
        }
    }

    /// Number of internal nodes.
    pub fn internal(&self) -> usize {
        match self {
            Vtree::Leaf(_) => 0,
            Vtree::Node(l, r) => 1 + l.internal() + r.internal(),
        }
    }
}

pub fn random_scalar<R: Rng + ?Sized>(rng: &mut R, field: Field) -> Complex {
    let re: f64 = rng.sample(StandardNormal);
    match field {
        Field::Real => Complex::new(re, 0.0),
        Field::Nonnegative => Complex::new(re.abs() + 0.05, 0.0),
        Field::Complex => Complex::new(re, rng.sample(StandardNormal)),
    }
}

/// Random binary vtree over `vars` (shuffled, split at a random point).
pub fn random_vtree<R: Rng + ?Sized>(rng: &mut R, vars: &[VarId]) -> Vtree {
    let mut vs = vars.to_vec();
    vs.shuffle(rng);
    split_vtree(rng, &vs)
}

fn split_vtree<R: Rng + ?Sized>(rng: &mut R, vars: &[VarId]) -> Vtree {
    if vars.len() == 1 {
        return Vtree::Leaf(vars[0]);
    }
    let k = rng.gen_range(1..vars.len());
    Vtree::Node(Box::new(split_vtree(rng, &vars[..k])), Box::new(split_vtree(rng, &vars[k..])))
}

/// Random cardinalities for variables `0..n`.
pub fn random_cardinalities<R: Rng + ?Sized>(rng: &mut R, n: usize, max_card: u32) -> BTreeMap<VarId, u32> {
    (0..n as VarId).map(|v| (v, rng.gen_range(2..=max_card.max(2)))).collect()
}

struct Grower<'a, R: Rng + ?Sized> {
    rng: &'a mut R,
    cfg: &'a GenConfig,
    b: CircuitBuilder,
}

impl<R: Rng + ?Sized> Grower<'_, R> {
    fn scalar(&mut self) -> Complex {
        random_scalar(self.rng, self.cfg.field)
    }

    fn sum_over(&mut self, candidates: &[NodeId]) -> NodeId {
        let k = self.cfg.arity();
        let children: Vec<NodeId> = (0..k).map(|_| *candidates.choose(self.rng).expect("candidates")).collect();
        let weights = (0..k).map(|_| self.scalar()).collect();
        self.b.sum(children, weights)
    }

    fn grow(&mut self, v: &Vtree, units: usize) -> Vec<NodeId> {
        match v {
            Vtree::Leaf(var) => {
                let card = self.b.cardinalities()[var];
                let pool = if self.cfg.leaf_sums { self.cfg.units.max(1) } else { units };
                let inputs: Vec<NodeId> = (0..pool)
                    .map(|_| {
                        let table = (0..card).map(|_| self.scalar()).collect();
                        self.b.input(*var, table)
                    })
                    .collect();
                if self.cfg.leaf_sums {
                    (0..units).map(|_| self.sum_over(&inputs)).collect()
                } else {
                    inputs
                }
            }
            Vtree::Node(l, r) => {
                let left = self.grow(l, self.cfg.units);
                let right = self.grow(r, self.cfg.units);
                let mut products: BTreeMap<(usize, usize), NodeId> = BTreeMap::new();
                let k = self.cfg.arity();
                (0..units)
                    .map(|_| {
                        let mut children = Vec::with_capacity(k);
                        for _ in 0..k {
                            let key = (self.rng.gen_range(0..left.len()), self.rng.gen_range(0..right.len()));
                            let p = match products.get(&key) {
                                Some(&p) => p,
                                None => {
                                    let p = self.b.product(vec![left[key.0], right[key.1]]);
                                    products.insert(key, p);
                                    p
                                }
                            };
                            children.push(p);
                        }
                        let weights = (0..k).map(|_| self.scalar()).collect();
                        self.b.sum(children, weights)
                    })
                    .collect()
            }
        }
    }
}

/// Smooth, structured-decomposable circuit over `vtree` whose sums all have
/// `cfg.arity()` children. A single-leaf vtree yields one sum over inputs.
pub fn circuit_over_vtree<R: Rng + ?Sized>(
    rng: &mut R,
    vtree: &Vtree,
    cards: &BTreeMap<VarId, u32>,
    cfg: &GenConfig,
) -> Circuit {
    let mut leaf_cfg = cfg.clone();
    if matches!(vtree, Vtree::Leaf(_)) {
        leaf_cfg.leaf_sums = true;
    }
    let mut g = Grower { rng, cfg: &leaf_cfg, b: CircuitBuilder::with_cardinalities(cards.clone()) };
    let root = g.grow(vtree, 1)[0];
    g.b.finish(root).expect("generated circuits are well-formed")
}

/// Random structured circuit per `cfg`.
pub fn random_structured<R: Rng + ?Sized>(rng: &mut R, cfg: &GenConfig) -> Circuit {
    let n = rng.gen_range(cfg.min_vars..=cfg.max_vars);
    let cards = random_cardinalities(rng, n, cfg.max_card);
    let vars: Vec<VarId> = cards.keys().copied().collect();
    let vtree = random_vtree(rng, &vars);
    circuit_over_vtree(rng, &vtree, &cards, cfg)
}

/// Two independently parameterized circuits over one shared vtree.
pub fn random_compatible_pair<R: Rng + ?Sized>(rng: &mut R, cfg: &GenConfig) -> (Circuit, Circuit) {
    let n = rng.gen_range(cfg.min_vars..=cfg.max_vars);
    let cards = random_cardinalities(rng, n, cfg.max_card);
    let vars: Vec<VarId> = cards.keys().copied().collect();
    let vtree = random_vtree(rng, &vars);
    let mut other = cfg.clone();
    other.units = rng.gen_range(1..=cfg.units.max(1) + 1);
    other.k_u = rng.gen_range(1..=3);
    other.k_w = 1;
    (circuit_over_vtree(rng, &vtree, &cards, cfg), circuit_over_vtree(rng, &vtree, &cards, &other))
}

/// Smooth and decomposable circuit whose products split their scope at
/// random, so it is usually not structured decomposable.
pub fn random_decomposable<R: Rng + ?Sized>(rng: &mut R, n_vars: usize, max_card: u32, field: Field) -> Circuit {
    let cards = random_cardinalities(rng, n_vars.max(1), max_card);
    let mut b = CircuitBuilder::with_cardinalities(cards.clone());
    let vars: Vec<VarId> = cards.keys().copied().collect();
    let root = grow_decomposable(rng, &mut b, &vars, field);
    b.finish(root).expect("generated circuits are well-formed")
}

fn grow_decomposable<R: Rng + ?Sized>(rng: &mut R, b: &mut CircuitBuilder, vars: &[VarId], field: Field) -> NodeId {
    let width = rng.gen_range(1..=2);
    let children: Vec<NodeId> = (0..width)
        .map(|_| {
            if vars.len() == 1 {
                let card = b.cardinalities()[&vars[0]];
                let table = (0..card).map(|_| random_scalar(rng, field)).collect();
                b.input(vars[0], table)
            } else {
                let mut vs = vars.to_vec();
                vs.shuffle(rng);
                let parts = rng.gen_range(2..=vs.len().min(3));
                let mut cuts: Vec<usize> = (1..vs.len()).collect();
                cuts.shuffle(rng);
                let mut cuts: Vec<usize> = cuts[..parts - 1].to_vec();
                cuts.sort_unstable();
                let mut pieces = Vec::with_capacity(parts);
                let mut start = 0;
                for c in cuts.into_iter().chain(core::iter::once(vs.len())) {
                    pieces.push(grow_decomposable(rng, b, &vs[start..c], field));
                    start = c;
                }
                b.product(pieces)
            }
        })
        .collect();
    let weights = (0..width).map(|_| random_scalar(rng, field)).collect();
    b.sum(children, weights)
}

/// Arbitrary well-formed circuit: children are drawn from earlier nodes with
/// no regard for smoothness or decomposability.
pub fn random_dag<R: Rng + ?Sized>(rng: &mut R, n_vars: usize, n_internal: usize) -> Circuit {
    let cards = random_cardinalities(rng, n_vars.max(1), 3);
    let mut b = CircuitBuilder::with_cardinalities(cards.clone());
    let mut ids = Vec::new();
    for (&v, &card) in &cards {
        let table = (0..card).map(|_| random_scalar(rng, Field::Real)).collect();
        ids.push(b.input(v, table));
        if rng.gen_bool(0.5) {
            let table = (0..card).map(|_| random_scalar(rng, Field::Real)).collect();
            ids.push(b.input(v, table));
        }
    }
    for _ in 0..n_internal.max(1) {
        let k = rng.gen_range(1..=3);
        let mut children: Vec<NodeId> = (0..k).map(|_| ids[rng.gen_range(0..ids.len())]).collect();
        children.dedup();
        let id = if rng.gen_bool(0.5) {
            let weights = children.iter().map(|_| random_scalar(rng, Field::Real)).collect();
            b.push(NodeKind::Sum { children, weights })
        } else {
            b.push(NodeKind::Product { children })
        };
        ids.push(id);
    }
    let root = *ids.last().expect("non-empty");
    b.finish(root).expect("generated circuits are well-formed")
}

/// Uniform assignment of every declared variable.
pub fn random_assignment<R: Rng + ?Sized>(rng: &mut R, circuit: &Circuit) -> Assignment {
    let mut x = Assignment::new();
    for (&v, &card) in circuit.cardinalities() {
        x.set(v, rng.gen_range(0..card));
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::validate_structure;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn structured_generator_meets_its_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = GenConfig { leaf_sums: true, ..GenConfig::small() };
        for _ in 0..100 {
            let f = random_structured(&mut rng, &cfg);
            assert!(validate_structure(&f).structured_decomposable());
            assert_eq!(f.scope().len(), f.cardinalities().len());
            for n in f.nodes() {
                if let NodeKind::Sum { children, .. } = n.kind() {
                    assert_eq!(children.len(), cfg.arity());
                }
            }
        }
    }

    #[test]
    fn decomposable_generator_is_tractable() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut unstructured = 0;
        for _ in 0..100 {
            let r = validate_structure(&random_decomposable(&mut rng, 6, 3, Field::Real));
            assert!(r.tractable());
            unstructured += usize::from(!r.structured());
        }
        assert!(unstructured > 0);
    }

    #[test]
    fn generators_are_seed_deterministic() {
        let a = random_structured(&mut ChaCha8Rng::seed_from_u64(5), &GenConfig::small());
        let b = random_structured(&mut ChaCha8Rng::seed_from_u64(5), &GenConfig::small());
        assert_eq!(a, b);
        let a = random_dag(&mut ChaCha8Rng::seed_from_u64(5), 4, 10);
        let b = random_dag(&mut ChaCha8Rng::seed_from_u64(5), 4, 10);
        assert_eq!(a, b);
    }
}
