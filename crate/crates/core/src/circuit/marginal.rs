use alloc::vec;
use alloc::vec::Vec;

use super::{validate_structure, Circuit, CircuitError, NodeKind, VarId};
use crate::Complex;

/// Sums `vars` out of a smooth, decomposable circuit.
///
/// Each input over a marginalized variable becomes a constant holding the sum
/// of its table; the DAG is otherwise untouched, so the result is no larger.
pub fn marginalize(circuit: &Circuit, vars: &[VarId]) -> Result<Circuit, CircuitError> {
    if vars.is_empty() {
        return Ok(circuit.clone());
    }
    let report = validate_structure(circuit);
    if !report.tractable() {
        return Err(CircuitError::Structure(report));
    }
    let kinds: Vec<NodeKind> = circuit
        .kinds()
        .map(|kind| match kind {
            NodeKind::Input { var: Some(v), table } if vars.contains(v) => NodeKind::Input {
                var: None,
                table: vec![table.iter().fold(Complex::new(0.0, 0.0), |a, b| a + b)],
            },
            other => other.clone(),
        })
        .collect();
    let mut cards = circuit.cardinalities().clone();
    for v in vars {
        cards.remove(v);
    }
    Circuit::new(kinds, circuit.root(), cards)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Assignment, CircuitBuilder};

    fn re(x: f64) -> Complex {
        Complex::new(x, 0.0)
    }

    #[test]
    fn marginal_of_single_table() {
        let mut b = CircuitBuilder::new();
        b.declare(0, 2).unwrap();
        let n = b.input(0, vec![re(1.0), re(2.0)]);
        let m = marginalize(&b.finish(n).unwrap(), &[0]).unwrap();
        assert_eq!(m.evaluate(&Assignment::new()).unwrap(), re(3.0));
        assert!(m.scope().is_empty());
    }

    #[test]
    fn squared_weights_marginalize_to_fifteen() {
        let mut b = CircuitBuilder::new();
        b.declare(0, 2).unwrap();
        let z0 = b.indicator(0, 0);
        let z1 = b.indicator(0, 1);
        let s = b.sum(vec![z0, z1], vec![re(13.0), re(2.0)]);
        let m = marginalize(&b.finish(s).unwrap(), &[0]).unwrap();
        assert_eq!(m.evaluate(&Assignment::new()).unwrap(), re(15.0));
    }

    #[test]
    fn non_smooth_input_is_rejected_with_witness() {
        let mut b = CircuitBuilder::new();
        b.declare(0, 2).unwrap();
        b.declare(1, 2).unwrap();
        let a = b.indicator(0, 0);
        let c = b.indicator(1, 0);
        let s = b.sum(vec![a, c], vec![re(1.0), re(1.0)]);
        let circuit = b.finish(s).unwrap();
        match marginalize(&circuit, &[0]) {
            Err(CircuitError::Structure(r)) => assert_eq!(r.non_smooth.unwrap().sum, circuit.root()),
            other => panic!("expected structure error, got {other:?}"),
        }
    }

    #[test]
    fn empty_marginal_is_identity() {
        let mut b = CircuitBuilder::new();
        b.declare(0, 3).unwrap();
        let n = b.input(0, vec![re(1.0), Complex::new(0.0, 2.0), re(-1.0)]);
        let c = b.finish(n).unwrap();
        assert_eq!(marginalize(&c, &[]).unwrap(), c);
    }
}
