//! Brute-force references and the value-matrix rank lab.
//!
//! Everything here is built from [`Circuit::evaluate`] and elementary
//! arithmetic. Nothing is shared with the symbolic transforms or the tensor
//! engine; those are checked against this module.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::circuit::{Assignment, AssignmentIter, Circuit, CircuitError, NodeId, NodeKind, VarId};
use crate::{math, Complex};

/// Largest latent enumeration accepted by [`brute_force_inception`].
pub const MAX_LATENT_TERMS: u64 = 1_000_000;
/// Largest assignment count accepted by [`brute_force_partition`].
pub const MAX_ASSIGNMENTS: u64 = 1 << 20;
/// Largest variable count of a value matrix.
pub const MAX_RANK_VARS: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("enumeration of {terms} terms exceeds the limit of {limit}")]
    Capability { terms: u64, limit: u64 },
    #[error("sum node {node} has {found} children, expected {expected}")]
    Arity { node: NodeId, expected: usize, found: usize },
    #[error("partition must split the variables into two non-empty sets")]
    Partition,
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Distinct scopes of sum nodes, each with the sum nodes sharing it.
fn sum_groups(circuit: &Circuit) -> Vec<Vec<usize>> {
    let mut groups: BTreeMap<Vec<VarId>, Vec<usize>> = BTreeMap::new();
    for (idx, node) in circuit.nodes().iter().enumerate() {
        if node.kind().is_sum() {
            groups.entry(node.scope().vars().to_vec()).or_default().push(idx);
        }
    }
    groups.into_values().collect()
}

/// The original circuit with every sum of group `g` keeping only child
/// `u[g]·K_W + w[g]`.
fn masked(circuit: &Circuit, groups: &[Vec<usize>], u: &[usize], w: &[usize], k_w: usize) -> Result<Circuit, CircuitError> {
    let mut kinds: Vec<NodeKind> = circuit.kinds().cloned().collect();
    for (g, members) in groups.iter().enumerate() {
        let keep = u[g] * k_w + w[g];
        for &idx in members {
            if let NodeKind::Sum { weights, .. } = &mut kinds[idx] {
                for (pos, wt) in weights.iter_mut().enumerate() {
                    if pos != keep {
                        *wt = Complex::new(0.0, 0.0);
                    }
                }
            }
        }
    }
    Circuit::new(kinds, circuit.root(), circuit.cardinalities().clone())
}

/// Advances a mixed-radix counter with every digit below `radix`; false on wrap.
fn step(counter: &mut [usize], radix: usize) -> bool {
    for d in counter.iter_mut() {
        *d += 1;
        if *d < radix {
            return true;
        }
        *d = 0;
    }
    false
}

fn check_latents(circuit: &Circuit, k_u: usize, k_w: usize) -> Result<Vec<Vec<usize>>, OracleError> {
    for (idx, node) in circuit.nodes().iter().enumerate() {
        if let NodeKind::Sum { children, .. } = node.kind() {
            if children.len() != k_u * k_w {
                return Err(OracleError::Arity { node: NodeId(idx as u32), expected: k_u * k_w, found: children.len() });
            }
        }
    }
    let groups = sum_groups(circuit);
    let terms = libm::pow(k_u as f64 * k_w as f64, groups.len() as f64);
    if terms > MAX_LATENT_TERMS as f64 {
        return Err(OracleError::Capability { terms: terms.min(u64::MAX as f64) as u64, limit: MAX_LATENT_TERMS });
    }
    Ok(groups)
}

/// `Σ_u |Σ_w f_aug(x, u, w)|²` for each assignment in `xs`, by enumerating
/// every latent configuration.
///
/// `f_aug(x, u, w)` is the circuit in which each sum of a scope keeps only its
/// child `u·K_W + w` for that scope's latent values.
pub fn brute_force_inception_many(
    circuit: &Circuit,
    k_u: usize,
    k_w: usize,
    xs: &[Assignment],
) -> Result<Vec<f64>, OracleError> {
    let groups = check_latents(circuit, k_u, k_w)?;
    let mut out = vec![0.0; xs.len()];
    let mut u = vec![0usize; groups.len()];
    loop {
        let mut inner = vec![Complex::new(0.0, 0.0); xs.len()];
        let mut w = vec![0usize; groups.len()];
        loop {
            let f = masked(circuit, &groups, &u, &w, k_w)?;
            for (acc, x) in inner.iter_mut().zip(xs) {
                *acc += f.evaluate(x)?;
            }
            if !step(&mut w, k_w) {
                break;
            }
        }
        for (o, z) in out.iter_mut().zip(&inner) {
            *o += z.norm_sqr();
        }
        if !step(&mut u, k_u) {
            break;
        }
    }
    Ok(out)
}

/// Single-assignment form of [`brute_force_inception_many`].
pub fn brute_force_inception(circuit: &Circuit, k_u: usize, k_w: usize, x: &Assignment) -> Result<f64, OracleError> {
    Ok(brute_force_inception_many(circuit, k_u, k_w, core::slice::from_ref(x))?[0])
}

/// All assignments of the circuit's declared variables, smallest id fastest.
pub fn all_assignments(circuit: &Circuit) -> AssignmentIter {
    let vars: Vec<VarId> = circuit.cardinalities().keys().copied().collect();
    let cards = vars.iter().map(|v| circuit.cardinalities()[v]).collect();
    AssignmentIter::new(vars, cards)
}

/// `Σ_v f(v)` over every assignment of the declared variables.
pub fn brute_force_partition(circuit: &Circuit) -> Result<Complex, OracleError> {
    let it = all_assignments(circuit);
    let total = it.count_total();
    if total > MAX_ASSIGNMENTS {
        return Err(OracleError::Capability { terms: total, limit: MAX_ASSIGNMENTS });
    }
    let mut z = Complex::new(0.0, 0.0);
    for x in it {
        z += circuit.evaluate(&x)?;
    }
    Ok(z)
}

/// Monotone structured-decomposable circuit of size `O(d)` computing
/// `n(V) + 1 = Σ_i 2^i [[V_i = 1]] + 1` over binary `V_0..V_{d-1}`.
///
/// Built as a chain `f_k = 2^k·[[V_k = 1]]·1_{>k} + 1_k·f_{k+1}` where `1_k`
/// and `1_{>k}` are all-ones tables; every product splits `{V_k..}` as
/// `{V_k} | {V_{k+1}..}`.
pub fn build_binary_weight_circuit(d: usize) -> Circuit {
    assert!((1..=30).contains(&d), "d must lie in 1..=30");
    let re = |x: f64| Complex::new(x, 0.0);
    let mut b = crate::circuit::CircuitBuilder::new();
    for v in 0..d as VarId {
        b.declare(v, 2).expect("fresh variable");
    }
    let last = (d - 1) as VarId;
    let top = (1u64 << (d - 1)) as f64;
    let mut f = b.input(last, vec![re(1.0), re(top + 1.0)]);
    let mut ones = b.input(last, vec![re(1.0), re(1.0)]);
    for k in (0..d - 1).rev() {
        let v = k as VarId;
        let hit = b.indicator(v, 1);
        let unit = b.input(v, vec![re(1.0), re(1.0)]);
        let left = b.product(vec![hit, ones]);
        let right = b.product(vec![unit, f]);
        f = b.sum(vec![left, right], vec![re((1u64 << k) as f64), re(1.0)]);
        ones = b.product(vec![unit, ones]);
    }
    b.finish(f).expect("chain circuit is well-formed")
}

/// `n(v) = Σ_i 2^i v_i` for a binary assignment slice.
pub fn binary_weight(bits: &[u8]) -> u64 {
    bits.iter().enumerate().map(|(i, &b)| u64::from(b) << i).sum()
}

/// Brute-force structural check computing scopes itself and comparing every
/// pair of children (and every pair of same-scope products).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BruteStructure {
    pub smooth: bool,
    pub decomposable: bool,
    pub structured: bool,
}

pub fn brute_force_structure(circuit: &Circuit) -> BruteStructure {
    let n = circuit.num_nodes();
    let mut scopes: Vec<BTreeSet<VarId>> = Vec::with_capacity(n);
    for node in circuit.nodes() {
        let s = match node.kind() {
            NodeKind::Input { var, .. } => var.iter().copied().collect(),
            NodeKind::Sum { children, .. } | NodeKind::Product { children } => {
                children.iter().flat_map(|c| scopes[c.index()].iter().copied()).collect()
            }
        };
        scopes.push(s);
    }
    let mut out = BruteStructure { smooth: true, decomposable: true, structured: true };
    let mut products = Vec::new();
    for (idx, node) in circuit.nodes().iter().enumerate() {
        let cs = node.kind().children();
        for a in cs {
            for b in cs {
                if node.kind().is_sum() && scopes[a.index()] != scopes[b.index()] {
                    out.smooth = false;
                }
                if node.kind().is_product() && a != b && !scopes[a.index()].is_disjoint(&scopes[b.index()]) {
                    out.decomposable = false;
                }
            }
        }
        // A product listing the same child twice overlaps with itself.
        if node.kind().is_product() {
            for (i, a) in cs.iter().enumerate() {
                if cs[i + 1..].contains(a) && !scopes[a.index()].is_empty() {
                    out.decomposable = false;
                }
            }
            products.push(idx);
        }
    }
    // Multiset of non-empty child scopes.
    let split = |idx: usize| -> Vec<BTreeSet<VarId>> {
        let mut parts: Vec<BTreeSet<VarId>> = circuit.nodes()[idx]
            .kind()
            .children()
            .iter()
            .map(|c| scopes[c.index()].clone())
            .filter(|s| !s.is_empty())
            .collect();
        parts.sort();
        parts
    };
    for &p in &products {
        for &q in &products {
            if scopes[p] == scopes[q] && split(p) != split(q) {
                out.structured = false;
            }
        }
    }
    out
}

/// Dense row-major real matrix indexed by `n(x)` (rows) and `n(y)` (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct ValueMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
    pub x_vars: Vec<usize>,
    pub y_vars: Vec<usize>,
}

impl ValueMatrix {
    /// Fills `M[n(x), n(y)] = f(v)` for binary `V_0..V_{d-1}` split into `x_vars`
    /// and the rest; bit `i` of `n(x)` is the value of `x_vars[i]`.
    pub fn from_fn<F: Fn(&[u8]) -> f64>(d: usize, x_vars: &[usize], f: F) -> Result<Self, OracleError> {
        if d > MAX_RANK_VARS {
            return Err(OracleError::Capability { terms: 1 << d, limit: 1 << MAX_RANK_VARS });
        }
        let x: BTreeSet<usize> = x_vars.iter().copied().collect();
        if x.is_empty() || x.len() >= d || x.iter().any(|&v| v >= d) || x.len() != x_vars.len() {
            return Err(OracleError::Partition);
        }
        let y_vars: Vec<usize> = (0..d).filter(|v| !x.contains(v)).collect();
        let (rows, cols) = (1usize << x_vars.len(), 1usize << y_vars.len());
        let mut data = vec![0.0; rows * cols];
        let mut bits = vec![0u8; d];
        for r in 0..rows {
            for (i, &v) in x_vars.iter().enumerate() {
                bits[v] = ((r >> i) & 1) as u8;
            }
            for c in 0..cols {
                for (i, &v) in y_vars.iter().enumerate() {
                    bits[v] = ((c >> i) & 1) as u8;
                }
                data[r * cols + c] = f(&bits);
            }
        }
        Ok(Self { rows, cols, data, x_vars: x_vars.to_vec(), y_vars })
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// Submatrix on the given rows and columns.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> ValueMatrix {
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for &r in rows {
            for &c in cols {
                data.push(self.get(r, c));
            }
        }
        ValueMatrix { rows: rows.len(), cols: cols.len(), data, x_vars: self.x_vars.clone(), y_vars: self.y_vars.clone() }
    }
}

/// Singular values in decreasing order by one-sided Jacobi rotations.
pub fn singular_values(rows: usize, cols: usize, data: &[f64]) -> Vec<f64> {
    // Work on columns of the taller orientation so there are at most min(m, n).
    let (m, n) = if rows >= cols { (rows, cols) } else { (cols, rows) };
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..m).map(|i| if rows >= cols { data[i * cols + j] } else { data[j * cols + i] }).collect())
        .collect();
    let eps = f64::EPSILON;
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = a[p].iter().zip(&a[q]).fold((0.0, 0.0, 0.0), |(al, be, ga), (x, y)| {
                    (al + x * x, be + y * y, ga + x * y)
                });
                if gamma == 0.0 || gamma.abs() <= eps * math::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + math::sqrt(1.0 + zeta * zeta));
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / math::sqrt(1.0 + t * t);
                let s = c * t;
                let (lo, hi) = a.split_at_mut(q);
                for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    let (xp, xq) = (*x, *y);
                    *x = c * xp - s * xq;
                    *y = s * xp + c * xq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = a.iter().map(|col| math::sqrt(col.iter().map(|x| x * x).sum())).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankReport {
    pub rank: usize,
    pub sigma_max: f64,
    /// Smallest singular value counted in the rank (0 when the rank is 0).
    pub sigma_min_retained: f64,
    pub singular_values: Vec<f64>,
}

/// Number of singular values above `tol·σ_max`.
pub fn numeric_rank(singular: &[f64], tol: f64) -> RankReport {
    let sigma_max = singular.first().copied().unwrap_or(0.0);
    let kept: Vec<f64> = singular.iter().copied().filter(|&s| sigma_max > 0.0 && s > tol * sigma_max).collect();
    RankReport {
        rank: kept.len(),
        sigma_max,
        sigma_min_retained: kept.last().copied().unwrap_or(0.0),
        singular_values: singular.to_vec(),
    }
}

/// Default relative singular-value threshold.
pub const RANK_TOL: f64 = 1e-9;

/// Value matrix of `f` under the partition `(x_vars, rest)` and its numeric rank.
pub fn value_matrix_rank<F: Fn(&[u8]) -> f64>(
    d: usize,
    x_vars: &[usize],
    f: F,
    tol: f64,
) -> Result<(ValueMatrix, RankReport), OracleError> {
    let m = ValueMatrix::from_fn(d, x_vars, f)?;
    let report = numeric_rank(&singular_values(m.rows, m.cols, &m.data), tol);
    Ok((m, report))
}

/// Every `X ⊂ {0..d}` with `⌈d/3⌉ ≤ |X| ≤ ⌊2d/3⌋`, in increasing bitmask order.
pub fn balanced_partitions(d: usize) -> Vec<Vec<usize>> {
    let lo = d.div_ceil(3).max(1);
    let hi = (2 * d / 3).min(d.saturating_sub(1));
    let mut out = Vec::new();
    for mask in 1u32..(1u32 << d) {
        let k = mask.count_ones() as usize;
        if k >= lo && k <= hi {
            out.push((0..d).filter(|i| mask >> i & 1 == 1).collect());
        }
    }
    out
}

/// `√(n(v) + 1)`, the positive branch.
pub fn sqrt_weight(bits: &[u8]) -> f64 {
    math::sqrt(binary_weight(bits) as f64 + 1.0)
}

/// `n(v) + 1`.
pub fn linear_weight(bits: &[u8]) -> f64 {
    binary_weight(bits) as f64 + 1.0
}
