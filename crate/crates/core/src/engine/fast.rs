//! Vector recurrences that reproduce the pair recurrence in special cases.
//!
//! * Monotone: only the diagonal of each pair matrix is ever read, and it is
//!   the value of a plain monotone circuit with weights `e^θ`.
//! * Squared modes at a full assignment: every pair matrix is the rank-one
//!   `conj(a)·aᵀ` of the amplitude vector `a`.

use alloc::vec;
use alloc::vec::Vec;

use super::{TensorizedModel, Unit};
use crate::{math, Complex};

pub(super) struct Trace<T> {
    /// Scaled values per unit.
    values: Vec<Vec<T>>,
    log_scale: Vec<f64>,
    scale: Vec<f64>,
    /// Hadamard product of each layer's inputs.
    products: Vec<Vec<T>>,
    /// Whether the values are amplitudes (log-scale counts twice).
    squared: bool,
}

impl Trace<f64> {
    pub fn root_ln(&self) -> f64 {
        let r = self.values.len() - 1;
        let y = self.values[r][0];
        if y <= 0.0 || self.log_scale[r] == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        math::ln(y) + self.log_scale[r]
    }
}

impl Trace<Complex> {
    pub fn root_ln(&self) -> f64 {
        let r = self.values.len() - 1;
        let y = math::norm_sqr(self.values[r][0]);
        if y == 0.0 || self.log_scale[r] == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        debug_assert!(self.squared);
        math::ln(y) + 2.0 * self.log_scale[r]
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + math::ln(values.map(|v| math::exp(v - m)).sum::<f64>())
}

/// Monotone circuit with weights `e^θ` and tables `e^φ`; `None` sums every
/// leaf out.
pub(super) fn monotone_forward(model: &TensorizedModel, x: Option<&[u8]>) -> Trace<f64> {
    let n = model.units.len();
    let mut t = Trace {
        values: Vec::with_capacity(n),
        log_scale: Vec::with_capacity(n),
        scale: Vec::with_capacity(n),
        products: Vec::with_capacity(n),
        squared: false,
    };
    let card = model.cardinality as usize;
    let n_p = model.n_s;
    for unit in &model.units {
        let (logs, c_in, p) = match unit {
            Unit::Leaf { var, offset, .. } => {
                let logs: Vec<f64> = (0..model.n_s)
                    .map(|j| match x {
                        Some(x) => model.params[model.leaf_index(*offset, j, x[*var] as usize)],
                        None => log_sum_exp((0..card).map(|v| model.params[model.leaf_index(*offset, j, v)])),
                    })
                    .collect();
                (logs, 0.0, Vec::new())
            }
            Unit::Layer { inputs, n_out, offset, .. } => {
                let mut p = t.values[inputs[0]].clone();
                let mut c = t.log_scale[inputs[0]];
                for &i in &inputs[1..] {
                    for (a, b) in p.iter_mut().zip(&t.values[i]) {
                        *a *= b;
                    }
                    c += t.log_scale[i];
                }
                let logs: Vec<f64> = (0..*n_out)
                    .map(|s| {
                        let terms = (0..n_p).filter(|&j| p[j] > 0.0).map(|j| {
                            model.params[model.weight_index(*offset, s, 0, j)] + math::ln(p[j])
                        });
                        log_sum_exp(terms)
                    })
                    .collect();
                (logs, c, p)
            }
        };
        let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            t.values.push(vec![0.0; logs.len()]);
            t.log_scale.push(f64::NEG_INFINITY);
            t.scale.push(0.0);
        } else {
            t.values.push(logs.iter().map(|l| math::exp(l - m)).collect());
            t.log_scale.push(c_in + m);
            t.scale.push(m);
        }
        t.products.push(p);
    }
    t
}

/// Accumulates `seed · ∂(-ln p̂)/∂θ` for a monotone trace.
pub(super) fn monotone_backward(model: &TensorizedModel, x: Option<&[u8]>, t: &Trace<f64>, seed: f64, grads: &mut [f64]) {
    let n = model.units.len();
    let root = t.values[n - 1][0];
    if root <= 0.0 {
        return;
    }
    let mut g: Vec<Vec<f64>> = t.values.iter().map(|v| vec![0.0; v.len()]).collect();
    g[n - 1][0] = -seed / root;
    let card = model.cardinality as usize;
    let n_p = model.n_s;
    for idx in (0..n).rev() {
        if t.log_scale[idx] == f64::NEG_INFINITY {
            continue;
        }
        // Stored values are `e^{ln raw - m}`.
        let m = t.scale[idx];
        match &model.units[idx] {
            Unit::Leaf { var, offset, .. } => {
                for j in 0..model.n_s {
                    let values: Vec<usize> = match x {
                        Some(x) => vec![x[*var] as usize],
                        None => (0..card).collect(),
                    };
                    for v in values {
                        let i = model.leaf_index(*offset, j, v);
                        grads[i] += g[idx][j] * math::exp(model.params[i] - m);
                    }
                }
            }
            Unit::Layer { inputs, n_out, offset, .. } => {
                let p = &t.products[idx];
                let mut gp = vec![0.0; n_p];
                for s in 0..*n_out {
                    let gs = g[idx][s];
                    if gs == 0.0 {
                        continue;
                    }
                    for j in 0..n_p {
                        let i = model.weight_index(*offset, s, 0, j);
                        let w = math::exp(model.params[i] - m);
                        grads[i] += gs * w * p[j];
                        gp[j] += gs * w;
                    }
                }
                for (ci, &c) in inputs.iter().enumerate() {
                    for j in 0..n_p {
                        let mut others = gp[j];
                        for (oi, &o) in inputs.iter().enumerate() {
                            if oi != ci {
                                others *= t.values[o][j];
                            }
                        }
                        g[c][j] += others;
                    }
                }
            }
        }
    }
}

fn normalize(values: &mut [Complex]) -> (f64, f64) {
    let m = values.iter().map(|z| math::max_component(*z)).fold(0.0, f64::max);
    if m > 0.0 && m.is_finite() {
        for z in values.iter_mut() {
            *z /= m;
        }
        (m, math::ln(m))
    } else {
        (1.0, f64::NEG_INFINITY)
    }
}

/// Amplitude circuit `f(x)` for squared modes; `p̂(x) = |f(x)|²`.
pub(super) fn amplitude_forward(model: &TensorizedModel, x: &[u8]) -> Trace<Complex> {
    let n = model.units.len();
    let mut t = Trace {
        values: Vec::with_capacity(n),
        log_scale: Vec::with_capacity(n),
        scale: Vec::with_capacity(n),
        products: Vec::with_capacity(n),
        squared: true,
    };
    let n_p = model.n_s;
    for unit in &model.units {
        match unit {
            Unit::Leaf { var, offset, .. } => {
                let mut a: Vec<Complex> =
                    (0..model.n_s).map(|j| model.amplitude(model.leaf_index(*offset, j, x[*var] as usize))).collect();
                let (m, c) = normalize(&mut a);
                t.values.push(a);
                t.log_scale.push(c);
                t.scale.push(m);
                t.products.push(Vec::new());
            }
            Unit::Layer { inputs, n_out, offset, .. } => {
                let mut p = t.values[inputs[0]].clone();
                let mut c = t.log_scale[inputs[0]];
                for &i in &inputs[1..] {
                    for (a, b) in p.iter_mut().zip(&t.values[i]) {
                        *a *= b;
                    }
                    c += t.log_scale[i];
                }
                let mut y: Vec<Complex> = (0..*n_out)
                    .map(|s| (0..n_p).map(|j| model.amplitude(model.weight_index(*offset, s, 0, j)) * p[j]).sum())
                    .collect();
                let (m, dc) = normalize(&mut y);
                t.values.push(y);
                t.log_scale.push(c + dc);
                t.scale.push(m);
                t.products.push(p);
            }
        }
    }
    t
}

/// Accumulates `seed · ∂(-ln |f|²)/∂θ` for an amplitude trace.
pub(super) fn amplitude_backward(model: &TensorizedModel, x: &[u8], t: &Trace<Complex>, seed: f64, grads: &mut [f64]) {
    let n = model.units.len();
    let root = t.values[n - 1][0];
    let r2 = math::norm_sqr(root);
    if r2 == 0.0 {
        return;
    }
    let zero = Complex::new(0.0, 0.0);
    let mut g: Vec<Vec<Complex>> = t.values.iter().map(|v| vec![zero; v.len()]).collect();
    // L = -seed·ln|a|²  ⇒  ∂L/∂Re a + i ∂L/∂Im a = -2·seed·a / |a|².
    g[n - 1][0] = root * (-2.0 * seed / r2);
    let n_p = model.n_s;
    for idx in (0..n).rev() {
        let inv = 1.0 / t.scale[idx];
        let gy: Vec<Complex> = g[idx].iter().map(|z| z * inv).collect();
        match &model.units[idx] {
            Unit::Leaf { var, offset, .. } => {
                for (j, gj) in gy.iter().enumerate() {
                    let i = model.leaf_index(*offset, j, x[*var] as usize);
                    model.add_grad(grads, i, model.amplitude(i), *gj);
                }
            }
            Unit::Layer { inputs, n_out, offset, .. } => {
                let p = &t.products[idx];
                let mut gp = vec![zero; n_p];
                for (s, gs) in gy.iter().enumerate().take(*n_out) {
                    for j in 0..n_p {
                        let i = model.weight_index(*offset, s, 0, j);
                        let w = model.amplitude(i);
                        model.add_grad(grads, i, w, p[j].conj() * gs);
                        gp[j] += w.conj() * gs;
                    }
                }
                for (ci, &c) in inputs.iter().enumerate() {
                    for j in 0..n_p {
                        let mut others = gp[j];
                        for (oi, &o) in inputs.iter().enumerate() {
                            if oi != ci {
                                others *= t.values[o][j].conj();
                            }
                        }
                        g[c][j] += others;
                    }
                }
            }
        }
    }
}
