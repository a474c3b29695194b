use alloc::vec;
use alloc::vec::Vec;

use super::{EngineError, Mode, TensorizedModel, Unit};
use crate::{math, Complex};

const ZERO: Complex = Complex::new(0.0, 0.0);

/// `N×N` matrix of conjugate-pair values scaled by `e^{-log_scale}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMatrix {
    pub n: usize,
    pub data: Vec<Complex>,
    pub log_scale: f64,
}

impl PairMatrix {
    pub fn get(&self, a: usize, b: usize) -> Complex {
        self.data[a * self.n + b]
    }

    fn max_entry(&self) -> f64 {
        self.data.iter().map(|z| math::abs(*z)).fold(0.0, f64::max)
    }

    /// `max |Y[a,b] - conj(Y[b,a])|` relative to the largest entry.
    pub fn hermitian_error(&self) -> f64 {
        let m = self.max_entry();
        if m == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for a in 0..self.n {
            for b in 0..self.n {
                worst = worst.max(math::abs(self.get(a, b) - self.get(b, a).conj()));
            }
        }
        worst / m
    }

    /// Smallest real part on the diagonal relative to the largest entry.
    pub fn min_diagonal_ratio(&self) -> f64 {
        let m = self.max_entry();
        if m == 0.0 {
            return 0.0;
        }
        (0..self.n).map(|a| self.get(a, a).re).fold(f64::INFINITY, f64::min) / m
    }
}

pub(super) struct PairTrace {
    pub units: Vec<PairMatrix>,
    /// Scale divided out of each unit's raw matrix (1 where it was zero).
    scales: Vec<f64>,
    /// Hadamard product of the inputs of each layer (empty for leaves).
    products: Vec<Vec<Complex>>,
}

/// Weight slices `A_u[s, j]` of a layer. Monotone layers use the diagonal
/// coupling `A_u[s, j] = δ(j, u)·e^{θ[s, u]/2}`, one slice per product unit.
fn slices(model: &TensorizedModel, offset: usize, n_out: usize) -> Vec<Vec<Complex>> {
    let n_p = model.n_s;
    match model.mode {
        Mode::Monotone => (0..n_p)
            .map(|u| {
                let mut a = vec![ZERO; n_out * n_p];
                for s in 0..n_out {
                    a[s * n_p + u] = model.amplitude(model.weight_index(offset, s, 0, u));
                }
                a
            })
            .collect(),
        _ => (0..model.k_u)
            .map(|u| {
                let mut a = vec![ZERO; n_out * n_p];
                for s in 0..n_out {
                    for j in 0..n_p {
                        a[s * n_p + j] = model.amplitude(model.weight_index(offset, s, u, j));
                    }
                }
                a
            })
            .collect(),
    }
}

/// Divides by the largest component; returns the scale (1 for a zero matrix)
/// and the added log-scale.
fn normalize(data: &mut [Complex]) -> (f64, f64) {
    let m = data.iter().map(|z| math::max_component(*z)).fold(0.0, f64::max);
    if m > 0.0 && m.is_finite() {
        let inv = 1.0 / m;
        for z in data.iter_mut() {
            *z *= inv;
        }
        (m, math::ln(m))
    } else if m == 0.0 {
        (1.0, f64::NEG_INFINITY)
    } else {
        (1.0, f64::NAN)
    }
}

pub(super) fn forward(model: &TensorizedModel, x: Option<&[u8]>) -> PairTrace {
    let n_units = model.units.len();
    let mut units: Vec<PairMatrix> = Vec::with_capacity(n_units);
    let mut scales = Vec::with_capacity(n_units);
    let mut products = Vec::with_capacity(n_units);
    let card = model.cardinality as usize;
    for unit in &model.units {
        match unit {
            Unit::Leaf { var, offset, .. } => {
                let n = model.n_s;
                let mut data = vec![ZERO; n * n];
                let values: Vec<usize> = match x {
                    Some(x) => vec![x[*var] as usize],
                    None => (0..card).collect(),
                };
                for v in values {
                    let a: Vec<Complex> = (0..n).map(|j| model.amplitude(model.leaf_index(*offset, j, v))).collect();
                    for j in 0..n {
                        let cj = a[j].conj();
                        for k in 0..n {
                            data[j * n + k] += cj * a[k];
                        }
                    }
                }
                let (m, c) = normalize(&mut data);
                units.push(PairMatrix { n, data, log_scale: c });
                scales.push(m);
                products.push(Vec::new());
            }
            Unit::Layer { inputs, n_out, offset, .. } => {
                let n_p = model.n_s;
                let n_out = *n_out;
                let mut p = units[inputs[0]].data.clone();
                let mut c = units[inputs[0]].log_scale;
                for &i in &inputs[1..] {
                    for (a, b) in p.iter_mut().zip(&units[i].data) {
                        *a *= b;
                    }
                    c += units[i].log_scale;
                }
                let mut y = vec![ZERO; n_out * n_out];
                let mut b = vec![ZERO; n_p * n_out];
                for a in slices(model, *offset, n_out) {
                    // B = P·Aᵀ, then Y += conj(A)·B.
                    for j in 0..n_p {
                        for s2 in 0..n_out {
                            let mut acc = ZERO;
                            for j2 in 0..n_p {
                                acc += p[j * n_p + j2] * a[s2 * n_p + j2];
                            }
                            b[j * n_out + s2] = acc;
                        }
                    }
                    for s in 0..n_out {
                        for j in 0..n_p {
                            let w = a[s * n_p + j].conj();
                            if w == ZERO {
                                continue;
                            }
                            for s2 in 0..n_out {
                                y[s * n_out + s2] += w * b[j * n_out + s2];
                            }
                        }
                    }
                }
                let (m, dc) = normalize(&mut y);
                units.push(PairMatrix { n: n_out, data: y, log_scale: c + dc });
                scales.push(m);
                products.push(p);
            }
        }
    }
    PairTrace { units, scales, products }
}

/// `ln Re(Y_root)` after checking the root is real and non-negative.
pub(super) fn root_value(trace: &PairTrace) -> Result<f64, EngineError> {
    let root = trace.units.last().expect("model has units");
    let y = root.data[0];
    if root.log_scale == f64::NEG_INFINITY || y == ZERO {
        return Ok(f64::NEG_INFINITY);
    }
    let arg = math::atan2(y.im, y.re);
    if arg.abs() > 1e-6 {
        return Err(EngineError::NotReal { arg });
    }
    Ok(math::ln(y.re) + root.log_scale)
}

/// Accumulates `seed · ∂(-ln p̂)/∂θ` into `grads` for a forward trace.
pub(super) fn backward(model: &TensorizedModel, x: Option<&[u8]>, trace: &PairTrace, seed: f64, grads: &mut [f64]) {
    let n_units = model.units.len();
    let root = trace.units[n_units - 1].data[0];
    if root.re == 0.0 || !root.re.is_finite() {
        return;
    }
    let mut g: Vec<Vec<Complex>> = trace.units.iter().map(|u| vec![ZERO; u.n * u.n]).collect();
    g[n_units - 1][0] = Complex::new(-seed / root.re, 0.0);
    let card = model.cardinality as usize;
    for idx in (0..n_units).rev() {
        let inv = 1.0 / trace.scales[idx];
        let gy: Vec<Complex> = g[idx].iter().map(|z| z * inv).collect();
        match &model.units[idx] {
            Unit::Leaf { var, offset, .. } => {
                let n = model.n_s;
                let values: Vec<usize> = match x {
                    Some(x) => vec![x[*var] as usize],
                    None => (0..card).collect(),
                };
                for v in values {
                    let a: Vec<Complex> = (0..n).map(|j| model.amplitude(model.leaf_index(*offset, j, v))).collect();
                    for k in 0..n {
                        // Y[j,k] = conj(a_j)·a_k: holomorphic in a_k, conjugate in a_j.
                        let mut acc = ZERO;
                        for j in 0..n {
                            acc += a[j] * gy[j * n + k] + a[j] * gy[k * n + j].conj();
                        }
                        let i = model.leaf_index(*offset, k, v);
                        model.add_grad(grads, i, a[k], acc);
                    }
                }
            }
            Unit::Layer { inputs, n_out, offset, .. } => {
                let n_p = model.n_s;
                let n_out = *n_out;
                let p = &trace.products[idx];
                let mut gp = vec![ZERO; n_p * n_p];
                let mut t = vec![ZERO; n_out * n_p];
                let mut acp = vec![ZERO; n_out * n_p];
                let mut apt = vec![ZERO; n_out * n_p];
                for (u, a) in slices(model, *offset, n_out).into_iter().enumerate() {
                    for s in 0..n_out {
                        for j in 0..n_p {
                            let mut t_acc = ZERO;
                            for s2 in 0..n_out {
                                t_acc += gy[s * n_out + s2] * a[s2 * n_p + j].conj();
                            }
                            t[s * n_p + j] = t_acc;
                            let (mut c1, mut c2) = (ZERO, ZERO);
                            for k in 0..n_p {
                                c1 += a[s * n_p + k] * p[k * n_p + j].conj();
                                c2 += a[s * n_p + k] * p[j * n_p + k];
                            }
                            acp[s * n_p + j] = c1;
                            apt[s * n_p + j] = c2;
                        }
                    }
                    // G_P += Aᵀ·G·conj(A)
                    for s in 0..n_out {
                        for j in 0..n_p {
                            let w = a[s * n_p + j];
                            if w == ZERO {
                                continue;
                            }
                            for k in 0..n_p {
                                gp[j * n_p + k] += w * t[s * n_p + k];
                            }
                        }
                    }
                    // G_A = Gᵀ·(A conj(P)) + conj(G)·(A Pᵀ)
                    for s in 0..n_out {
                        for j in 0..n_p {
                            let mut acc = ZERO;
                            for s2 in 0..n_out {
                                acc += gy[s2 * n_out + s] * acp[s2 * n_p + j] + gy[s * n_out + s2].conj() * apt[s2 * n_p + j];
                            }
                            let i = if model.mode == Mode::Monotone {
                                if j != u {
                                    continue;
                                }
                                model.weight_index(*offset, s, 0, j)
                            } else {
                                model.weight_index(*offset, s, u, j)
                            };
                            model.add_grad(grads, i, a[s * n_p + j], acc);
                        }
                    }
                }
                for (ci, &c) in inputs.iter().enumerate() {
                    let mut gc: Vec<Complex> = gp.clone();
                    for (oi, &o) in inputs.iter().enumerate() {
                        if oi != ci {
                            for (z, y) in gc.iter_mut().zip(&trace.units[o].data) {
                                *z *= y.conj();
                            }
                        }
                    }
                    for (acc, z) in g[c].iter_mut().zip(gc) {
                        *acc += z;
                    }
                }
            }
        }
    }
}
