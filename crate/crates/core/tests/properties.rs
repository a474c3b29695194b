use inception_core::circuit::{marginalize, validate_structure};
use inception_core::data::{parse_idx_images, reduce, write_idx_images, Dataset};
use inception_core::engine::{build_quadtree, init_model, log_likelihood, pair_matrices, Mode, Unit};
use inception_core::gen::{self, Field, GenConfig};
use inception_core::numerics::{complex_log_sum_exp, LogComplex};
use inception_core::oracle::{self, brute_force_structure, numeric_rank, singular_values, ValueMatrix};
use inception_core::transform::{conjugate, inception_circuit, multiply_compatible};
use inception_core::{Assignment, Complex};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn close(a: Complex, b: Complex, rel: f64) -> bool {
    (a - b).norm() <= rel * a.norm().max(b.norm()).max(1e-300)
}

fn all_rows(n: usize, card: u8) -> Vec<Vec<u8>> {
    let total = (card as usize).pow(n as u32);
    (0..total)
        .map(|mut k| {
            (0..n)
                .map(|_| {
                    let v = (k % card as usize) as u8;
                    k /= card as usize;
                    v
                })
                .collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn marginalizing_everything_sums_all_assignments(seed: u64, n in 1usize..=7) {
        let mut r = rng(seed);
        let c = gen::random_decomposable(&mut r, n, 3, Field::Complex);
        let vars: Vec<_> = c.cardinalities().keys().copied().collect();
        let m = marginalize(&c, &vars).unwrap();
        let want = m.evaluate(&Assignment::new()).unwrap();
        let got = c.scope_assignments().map(|x| c.evaluate(&x).unwrap()).fold(Complex::new(0.0, 0.0), |a, b| a + b);
        prop_assert!(close(got, want, 1e-10));
    }

    #[test]
    fn evaluation_ignores_variables_outside_the_scope(seed: u64, extra in 0u32..50) {
        let mut r = rng(seed);
        let c = gen::random_structured(&mut r, &GenConfig::small());
        let x = gen::random_assignment(&mut r, &c);
        let outside = c.cardinalities().keys().max().unwrap() + 1;
        prop_assert_eq!(c.evaluate(&x).unwrap(), c.evaluate(&x.clone().with(outside, extra)).unwrap());
    }

    #[test]
    fn structure_checks_agree_with_pairwise_enumeration(seed: u64, kind in 0u8..3) {
        let mut r = rng(seed);
        let c = match kind {
            0 => gen::random_dag(&mut r, 4, 8),
            1 => gen::random_decomposable(&mut r, 5, 2, Field::Real),
            _ => gen::random_structured(&mut r, &GenConfig::small()),
        };
        let report = validate_structure(&c);
        let brute = brute_force_structure(&c);
        prop_assert_eq!(
            (report.smooth(), report.decomposable(), report.structured()),
            (brute.smooth, brute.decomposable, brute.structured)
        );
    }

    #[test]
    fn conjugation_is_an_involution(seed: u64) {
        let mut r = rng(seed);
        let c = gen::random_structured(&mut r, &GenConfig::small());
        let cc = conjugate(&c);
        prop_assert_eq!(&conjugate(&cc), &c);
        prop_assert_eq!(cc.num_nodes(), c.num_nodes());
        prop_assert_eq!(cc.num_edges(), c.num_edges());
        let x = gen::random_assignment(&mut r, &c);
        prop_assert!(close(cc.evaluate(&x).unwrap(), c.evaluate(&x).unwrap().conj(), 1e-12));
    }

    #[test]
    fn products_evaluate_pointwise(seed: u64) {
        let mut r = rng(seed);
        let (a, b) = gen::random_compatible_pair(&mut r, &GenConfig::small());
        let p = multiply_compatible(&a, &b).unwrap();
        for _ in 0..4 {
            let x = gen::random_assignment(&mut r, &a);
            let want = a.evaluate(&x).unwrap() * b.evaluate(&x).unwrap();
            prop_assert!(close(p.evaluate(&x).unwrap(), want, 1e-12));
        }
    }

    #[test]
    fn inception_output_is_nonnegative(seed: u64) {
        let mut r = rng(seed);
        let mut cfg = GenConfig::small();
        cfg.max_vars = 3;
        cfg.k_u = r.gen_range(1..=3);
        cfg.k_w = r.gen_range(1..=3);
        let c = gen::random_structured(&mut r, &cfg);
        let out = inception_circuit(&c, cfg.k_u, cfg.k_w).unwrap();
        let values: Vec<Complex> = out.scope_assignments().map(|x| out.evaluate(&x).unwrap()).collect();
        let max = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for z in values {
            prop_assert!(z.re >= -1e-9 * max && z.im.abs() <= 1e-9 * max);
        }
    }

    #[test]
    fn log_sum_exp_is_permutation_invariant(seed: u64, n in 2usize..12) {
        let mut r = rng(seed);
        let mut terms: Vec<LogComplex> =
            (0..n).map(|_| LogComplex::new(r.gen_range(-30.0..30.0), r.gen_range(-3.0..3.0)).unwrap()).collect();
        let a = complex_log_sum_exp(&terms).unwrap();
        terms.shuffle(&mut r);
        prop_assert_eq!(a, complex_log_sum_exp(&terms).unwrap());
    }

    #[test]
    fn log_sum_exp_shift_identity(seed: u64, n in 1usize..10, k in -128i32..128) {
        let mut r = rng(seed);
        let terms: Vec<LogComplex> = (0..n)
            .map(|_| LogComplex::new(r.gen_range(-20.0..20.0), r.gen_range(-3.0..3.0)).unwrap())
            .collect();
        let c = f64::from(k) * 0.5;
        let shifted: Vec<LogComplex> =
            terms.iter().map(|t| LogComplex::new(t.ln_modulus() + c, t.arg()).unwrap()).collect();
        let a = complex_log_sum_exp(&terms).unwrap();
        let b = complex_log_sum_exp(&shifted).unwrap();
        if !a.is_zero() {
            prop_assert!((b.ln_modulus() - a.ln_modulus() - c).abs() <= 1e-12 * (1.0 + c.abs()));
            prop_assert!((b.arg() - a.arg()).abs() <= 1e-12);
        }
    }

    #[test]
    fn rank_never_grows_under_deletion(seed: u64, d in 3usize..=7) {
        let mut r = rng(seed);
        let x_vars: Vec<usize> = (0..r.gen_range(1..d)).collect();
        let table: Vec<f64> = (0..1usize << d).map(|_| if r.gen_bool(0.3) { 0.0 } else { r.gen_range(-1.0..1.0) }).collect();
        let low_rank: Vec<f64> = (0..1usize << d).map(|k| ((k & 1) as f64 + 1.0) * ((k >> (d - 1)) as f64 + 2.0)).collect();
        for values in [table, low_rank] {
            let f = |bits: &[u8]| values[bits.iter().enumerate().map(|(i, &b)| usize::from(b) << i).sum::<usize>()];
            let m = ValueMatrix::from_fn(d, &x_vars, f).unwrap();
            let full = numeric_rank(&singular_values(m.rows, m.cols, &m.data), oracle::RANK_TOL).rank;
            let rows: Vec<usize> = (0..m.rows).filter(|_| r.gen_bool(0.7)).collect();
            let cols: Vec<usize> = (0..m.cols).filter(|_| r.gen_bool(0.7)).collect();
            if rows.is_empty() || cols.is_empty() {
                continue;
            }
            let s = m.select(&rows, &cols);
            let sub = numeric_rank(&singular_values(s.rows, s.cols, &s.data), oracle::RANK_TOL).rank;
            prop_assert!(sub <= full);
        }
    }

    #[test]
    fn idx_round_trips(seed: u64, n in 1usize..6, h in 1usize..6, w in 1usize..6) {
        let mut r = rng(seed);
        let data = Dataset::new((0..n * h * w).map(|_| r.gen()).collect(), h, w, 256).unwrap();
        let bytes = write_idx_images(&data);
        prop_assert_eq!(&parse_idx_images(&bytes).unwrap(), &data);
        prop_assert_eq!(write_idx_images(&parse_idx_images(&bytes).unwrap()), bytes);
    }

    #[test]
    fn reduce_is_idempotent(seed: u64, n in 1usize..5, bh in 1usize..4, bw in 1usize..4, card in 1u32..=16) {
        let mut r = rng(seed);
        let (h, w) = (2 * bh, 3 * bw);
        let data = Dataset::new((0..n * h * w).map(|_| r.gen()).collect(), h, w, 256).unwrap();
        let once = reduce(&data, 2, 3, card).unwrap();
        prop_assert_eq!(&reduce(&once, 2, 3, card).unwrap(), &once);
        prop_assert_eq!(&reduce(&data, 2, 3, card).unwrap(), &once);
        prop_assert!(once.as_bytes().iter().all(|&v| u32::from(v) < card));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pair_matrices_are_hermitian_with_nonnegative_diagonal(seed: u64, mode_idx in 0usize..4, n_s in 1usize..4) {
        let mode = Mode::ALL[mode_idx];
        let k_u = if mode == Mode::Inception { 1 + (seed % 3) as usize } else { 1 };
        let m = init_model(&build_quadtree(2, 3).unwrap(), mode, n_s, k_u, 3, seed).unwrap();
        let mut r = rng(seed);
        let x: Vec<u8> = (0..6).map(|_| r.gen_range(0..3)).collect();
        for y in pair_matrices(&m, Some(&x)).unwrap().into_iter().chain(pair_matrices(&m, None).unwrap()) {
            prop_assert!(y.hermitian_error() <= 1e-10);
            prop_assert!(y.min_diagonal_ratio() >= -1e-10);
        }
    }

    #[test]
    fn likelihood_is_normalized(seed: u64, mode_idx in 0usize..4) {
        let mode = Mode::ALL[mode_idx];
        let k_u = if mode == Mode::Inception { 2 } else { 1 };
        let m = init_model(&build_quadtree(2, 2).unwrap(), mode, 3, k_u, 2, seed).unwrap();
        let rows = all_rows(4, 2);
        let refs: Vec<&[u8]> = rows.iter().map(|r| r.as_slice()).collect();
        let total: f64 = log_likelihood(&m, &refs).unwrap().iter().map(|l| l.exp()).sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn doubling_a_layer_keeps_the_likelihood(seed: u64, mode_idx in 0usize..4, which in 0usize..8) {
        let mode = Mode::ALL[mode_idx];
        let k_u = if mode == Mode::Inception { 2 } else { 1 };
        let m = init_model(&build_quadtree(2, 2).unwrap(), mode, 2, k_u, 3, seed).unwrap();
        let layers: Vec<(usize, usize)> = m
            .units()
            .iter()
            .filter_map(|u| match u {
                Unit::Layer { offset, n_out, .. } => Some((*offset, n_out * k_u * m.n_s * mode.components())),
                Unit::Leaf { .. } => None,
            })
            .collect();
        let (offset, len) = layers[which % layers.len()];
        let mut doubled = m.clone();
        for p in &mut doubled.params[offset..offset + len] {
            // Monotone weights are stored as logarithms of e^θ.
            *p = if mode == Mode::Monotone { *p + 2.0f64.ln() } else { *p * 2.0 };
        }
        let rows = all_rows(4, 3);
        let refs: Vec<&[u8]> = rows.iter().map(|r| r.as_slice()).collect();
        let a = log_likelihood(&m, &refs).unwrap();
        let b = log_likelihood(&doubled, &refs).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }
}
