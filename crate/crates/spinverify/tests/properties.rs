//! Property-based invariants for the algebraic and geometric kernels.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use spinverify::clifford::{build_representation, inner, Spinor};
use spinverify::forms::{comb_rank, combinations, sort_sign};
use spinverify::geometry::{make_metric, quad, Domain, MetricSpec, Scalar1D};
use spinverify::killing::p_form;

type C64 = Complex64;

fn spinor_strategy(dim: usize) -> impl Strategy<Value = Spinor> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim)
        .prop_map(move |v| Spinor::from_iterator(v.len(), v.into_iter().map(|(r, i)| C64::new(r, i))))
}

fn vector_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-2.0f64..2.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn clifford_relation_for_arbitrary_vectors(
        n in 2usize..=5,
        seed in proptest::num::u64::ANY,
    ) {
        let rep = build_representation(n).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        use rand::{Rng, SeedableRng};
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let psi = Spinor::from_iterator(
            rep.dim_sigma,
            (0..rep.dim_sigma).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))),
        );
        // v.w.psi + w.v.psi = -2 <v,w> psi
        let vw = rep.apply_vector(&v, &rep.apply_vector(&w, &psi).unwrap()).unwrap();
        let wv = rep.apply_vector(&w, &rep.apply_vector(&v, &psi).unwrap()).unwrap();
        let dot: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let resid = (vw + wv + &psi * C64::new(2.0 * dot, 0.0)).norm();
        prop_assert!(resid <= 1e-10 * (1.0 + psi.norm()));
    }

    #[test]
    fn clifford_action_is_skew_adjoint(
        v in vector_strategy(3),
        a in spinor_strategy(2),
        b in spinor_strategy(2),
    ) {
        let rep = build_representation(3).unwrap();
        let lhs = inner(&rep.apply_vector(&v, &a).unwrap(), &b).unwrap();
        let rhs = inner(&a, &rep.apply_vector(&v, &b).unwrap()).unwrap();
        prop_assert!((lhs + rhs).norm() <= 1e-12 * (1.0 + a.norm() * b.norm()));
    }

    #[test]
    fn inner_product_is_hermitian(a in spinor_strategy(4), b in spinor_strategy(4)) {
        let ab = inner(&a, &b).unwrap();
        let ba = inner(&b, &a).unwrap();
        prop_assert!((ab - ba.conj()).norm() <= 1e-13 * (1.0 + a.norm() * b.norm()));
        let aa = inner(&a, &a).unwrap();
        prop_assert!(aa.im.abs() <= 1e-13 * (1.0 + a.norm_squared()));
        prop_assert!(aa.re >= 0.0);
    }

    #[test]
    fn combination_ranks_are_a_bijection(n in 1usize..=8, p in 0usize..=4) {
        prop_assume!(p <= n);
        for (r, tuple) in combinations(n, p).iter().enumerate() {
            prop_assert_eq!(comb_rank(n, tuple), r);
        }
    }

    #[test]
    fn sort_sign_matches_permutation_parity(perm in proptest::sample::subsequence(vec![0usize,1,2,3,4], 5)) {
        // Build a permutation by rotating the subsequence through the rest.
        let mut indices: Vec<usize> = perm.clone();
        for i in 0..5 {
            if !indices.contains(&i) {
                indices.push(i);
            }
        }
        // Count inversions directly.
        let mut inversions = 0usize;
        for i in 0..indices.len() {
            for j in i + 1..indices.len() {
                if indices[i] > indices[j] {
                    inversions += 1;
                }
            }
        }
        let mut sorted = indices.clone();
        let sign = sort_sign(&mut sorted);
        prop_assert_eq!(sign, if inversions % 2 == 0 { 1 } else { -1 });
        prop_assert!(sorted.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn warped_metric_is_positive_definite(
        x in -1.0f64..1.0, y in -1.0f64..1.0, t in -1.0f64..1.0,
        v in vector_strategy(3),
    ) {
        let k = Scalar1D::new(|t: f64| 2.0 + t.sin(), |t: f64| t.cos());
        let chart = make_metric(MetricSpec::Warped {
            fiber_dim: 2,
            k,
            domain: Domain::cube(3, -1.5, 1.5),
        })
        .unwrap();
        let g = chart.metric(&[x, y, t]);
        let norm2: f64 = v.iter().map(|a| a * a).sum();
        prop_assume!(norm2 > 1e-6);
        prop_assert!(quad(&g, &v, &v) > 0.0);
        // Symmetry of the metric evaluator.
        prop_assert!((g.clone() - g.transpose()).iter().all(|e| e.abs() <= 1e-14));
    }

    #[test]
    fn christoffels_are_torsion_free_without_oracle(x in -0.8f64..0.8, y in -0.8f64..0.8) {
        let a = Scalar1D::new(|x: f64| 1.5 + 0.3 * x.sin(), |x: f64| 0.3 * x.cos());
        let mut chart =
            make_metric(MetricSpec::Conformal2D { a, domain: Domain::cube(2, -1.0, 1.0) }).unwrap();
        chart.christoffels_at = None;
        let gamma = chart.christoffels(&[x, y], 1e-3).unwrap();
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    prop_assert!((gamma.get(k, i, j) - gamma.get(k, j, i)).abs() <= 1e-12);
                }
            }
        }
    }
}

#[test]
fn p_form_is_antisymmetric_in_its_arguments() {
    // Deterministic spot check on the flat fixture: swapping two vectors
    // flips the sign of the associated 2-form.
    let fx = spinverify::constructions::flat_parallel_spinor(3).unwrap();
    let p = [0.1, -0.2, 0.3];
    let x = vec![0.7, -0.1, 0.4];
    let y = vec![-0.3, 0.9, 0.2];
    let xy = p_form(&fx.candidate.field, 2, false, &[x.clone(), y.clone()], &p).unwrap();
    let yx = p_form(&fx.candidate.field, 2, false, &[y, x], &p).unwrap();
    assert!((xy + yx).norm() <= 1e-13);
}

#[test]
fn volume_normalization_is_stable_across_dimensions() {
    // The volume element must be unitary and hermitian-or-antihermitian
    // consistently; this pins the construction against accidental phase
    // regressions.
    for n in 2..=8usize {
        let rep = build_representation(n).unwrap();
        let id = DMatrix::<C64>::identity(rep.dim_sigma, rep.dim_sigma);
        let prod = &rep.vol * rep.vol.adjoint();
        assert!((prod - id).iter().map(|c| c.norm()).fold(0.0, f64::max) <= 1e-12, "n={n}");
    }
}
