use proptest::prelude::*;

use ttk_core::certify::{classify_222, hyperdet222, rank2_decompose, Class222};
use ttk_core::classify::{classify, classify_brank3_222, sym_sign_rank1, ComponentLabel, Sign};
use ttk_core::json::{parse_tensor_json, tensor_to_json};
use ttk_core::linalg::det;
use ttk_core::mrank::mrank;
use ttk_core::path::{connect_mrank, connect_rank_one, path_verify};
use ttk_core::sample::{
    gaussian_tensor, gaussian_vector, random_frame, random_invertible, rng_from_seed, sample_fixed_mrank,
    sample_rank_r, TtkRng,
};
use ttk_core::stratum::StratumDescriptor;
use ttk_core::subspace::{principal_angles, Geodesic};
use ttk_core::sym::sym_power;
use ttk_core::tensor::{outer_product, re};
use ttk_core::{Field, Hypermatrix, Matrix, TolerancePolicy};

fn tol() -> TolerancePolicy {
    TolerancePolicy::default()
}

fn field_of(complex: bool) -> Field {
    if complex {
        Field::Complex
    } else {
        Field::Real
    }
}

fn orthogonal(n: usize, field: Field, rng: &mut TtkRng) -> Matrix {
    random_frame(n, n, field, rng).frame().clone()
}

fn shape_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(2usize..=4, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn witnesses_reexpand(seed in any::<u64>(), shape in shape_strategy(), r in 1usize..=2, complex in any::<bool>()) {
        let mut rng = rng_from_seed(seed);
        let (a, w) = sample_rank_r(&shape, r, field_of(complex), &mut rng, &tol()).unwrap();
        let mut sum = Hypermatrix::zeros(&shape, a.field());
        for t in &w {
            sum.add_scaled(re(1.0), &t.to_tensor()).unwrap();
        }
        prop_assert!(sum.rel_dist(&a).unwrap() <= 1e-12);
    }

    #[test]
    fn mrank_is_basis_invariant(seed in any::<u64>(), shape in shape_strategy(), complex in any::<bool>()) {
        let mut rng = rng_from_seed(seed);
        let field = field_of(complex);
        let ranks: Vec<usize> = shape.iter().map(|&n| n.min(2)).collect();
        let (a, _) = sample_fixed_mrank(&shape, &ranks, field, &mut rng, &tol()).unwrap();
        let qs: Vec<Matrix> = shape.iter().map(|&n| orthogonal(n, field, &mut rng)).collect();
        let b = a.multilinear(&qs).unwrap();
        let (ia, ib) = (mrank(&a, &tol()).unwrap(), mrank(&b, &tol()).unwrap());
        prop_assert_eq!(&ia.ranks, &ib.ranks);
        prop_assert!(ia.ranks.is_admissible());
    }

    #[test]
    fn flattening_is_linear(seed in any::<u64>(), shape in shape_strategy(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let mut rng = rng_from_seed(seed);
        let a = gaussian_tensor(&shape, Field::Real, &mut rng);
        let b = gaussian_tensor(&shape, Field::Real, &mut rng);
        let c = a.scale(re(alpha)).add(&b.scale(re(beta))).unwrap();
        for mode in 0..shape.len() {
            let lhs = c.flatten(mode).unwrap();
            let rhs = a.flatten(mode).unwrap() * re(alpha) + b.flatten(mode).unwrap() * re(beta);
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn mrank_of_gaussian_tensors_is_admissible(seed in any::<u64>(), shape in prop::collection::vec(1usize..=5, 2..=4)) {
        let mut rng = rng_from_seed(seed);
        let a = gaussian_tensor(&shape, Field::Real, &mut rng);
        prop_assert!(mrank(&a, &tol()).unwrap().ranks.is_admissible());
    }

    #[test]
    fn hyperdeterminant_transforms_by_squared_determinants(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let a = gaussian_tensor(&[2, 2, 2], Field::Real, &mut rng);
        let gs: Vec<Matrix> = (0..3).map(|_| random_invertible(2, Field::Real, None, &mut rng)).collect();
        let factor: f64 = gs.iter().map(|g| det(g).re.powi(2)).product();
        let want = factor * hyperdet222(&a).unwrap();
        let got = hyperdet222(&a.multilinear(&gs).unwrap()).unwrap();
        prop_assert!((got - want).abs() <= 1e-8 * want.abs());
    }

    #[test]
    fn hyperdeterminant_vanishes_on_degenerate_tensors(seed in any::<u64>(), mode in 0usize..3) {
        let mut rng = rng_from_seed(seed);
        let fs: Vec<_> = (0..3).map(|_| gaussian_vector(2, Field::Real, &mut rng)).collect();
        let r1 = outer_product(re(1.0), &fs, Field::Real);
        prop_assert!(hyperdet222(&r1).unwrap().abs() <= 1e-12 * r1.norm().powi(4));
        // A tensor whose mode-`mode` flattening has rank one.
        let u = gaussian_vector(2, Field::Real, &mut rng);
        let m = gaussian_tensor(&[2, 2], Field::Real, &mut rng);
        let flat = Matrix::from_fn(2, 4, |i, j| u[i] * m.data()[j]);
        let slab = Hypermatrix::fold(&flat, mode, &[2, 2, 2], Field::Real).unwrap();
        prop_assert!(hyperdet222(&slab).unwrap().abs() <= 1e-12 * slab.norm().powi(4));
    }

    #[test]
    fn rank_two_decomposition_is_a_set(seed in any::<u64>(), shape in shape_strategy()) {
        let mut rng = rng_from_seed(seed);
        let (a, _) = sample_rank_r(&shape, 2, Field::Real, &mut rng, &tol()).unwrap();
        let [x, y] = rank2_decompose(&a, &tol()).unwrap();
        let xy = x.to_tensor().add(&y.to_tensor()).unwrap();
        let yx = y.to_tensor().add(&x.to_tensor()).unwrap();
        prop_assert!(xy.rel_dist(&a).unwrap() <= 1e-8);
        prop_assert!(yx.rel_dist(&a).unwrap() <= 1e-8);
    }

    #[test]
    fn geodesics_hit_endpoints_and_stay_orthonormal(seed in any::<u64>(), n in 3usize..=6, r in 1usize..=3, complex in any::<bool>()) {
        prop_assume!(r < n);
        let mut rng = rng_from_seed(seed);
        let field = field_of(complex);
        let u = random_frame(n, r, field, &mut rng);
        let v = random_frame(n, r, field, &mut rng);
        let g = Geodesic::between(&u, &v).unwrap();
        for ang in principal_angles(&g.point_at(1.0), &v).unwrap() {
            prop_assert!(ang <= 1e-10);
        }
        let eye = Matrix::identity(r, r);
        let delta = 1e-4;
        let mut worst_step: f64 = 0.0;
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            let y = g.frame_at(t);
            prop_assert!((y.adjoint() * &y - &eye).norm() <= 1e-12);
            if t + delta <= 1.0 {
                worst_step = worst_step.max((g.frame_at(t + delta) - &y).norm());
            }
        }
        let bound = 2.0 * g.angles().iter().map(|a| a * a).sum::<f64>().sqrt() + 1e-12;
        prop_assert!(worst_step <= bound * delta);
    }

    #[test]
    fn rank_one_paths_are_pointwise_rank_one(seed in any::<u64>(), shape in shape_strategy(), complex in any::<bool>()) {
        let mut rng = rng_from_seed(seed);
        let field = field_of(complex);
        let (a, _) = sample_rank_r(&shape, 1, field, &mut rng, &tol()).unwrap();
        let (b, _) = sample_rank_r(&shape, 1, field, &mut rng, &tol()).unwrap();
        let p = connect_rank_one(&a, &b, &tol()).unwrap();
        prop_assert!(p.eval(0.0).rel_dist(&a).unwrap() <= 1e-10);
        prop_assert!(p.eval(1.0).rel_dist(&b).unwrap() <= 1e-10);
        let rep = path_verify(&p, 32, &TolerancePolicy::machine());
        prop_assert!(rep.pass);
        prop_assert!(rep.entries.iter().all(|e| e.mrank.iter().all(|&x| x == 1)));
    }

    #[test]
    fn mrank_paths_keep_their_label(seed in any::<u64>(), complex in any::<bool>()) {
        let mut rng = rng_from_seed(seed);
        let field = field_of(complex);
        let s = StratumDescriptor::mrank(&[2, 2, 2], &[3, 3, 3], field).unwrap();
        let (a, _) = sample_fixed_mrank(&[3, 3, 3], &[2, 2, 2], field, &mut rng, &tol()).unwrap();
        let (b, _) = sample_fixed_mrank(&[3, 3, 3], &[2, 2, 2], field, &mut rng, &tol()).unwrap();
        let p = connect_mrank(&a, &b, &[2, 2, 2], &tol(), &mut rng).unwrap().into_path().unwrap();
        prop_assert!(p.endpoint_error(&a, &b).unwrap() <= 1e-10);
        let rep = path_verify(&p, 32, &tol());
        prop_assert!(rep.pass);
        let first = classify(&s, &a, &tol()).unwrap();
        prop_assert!(rep.entries.iter().all(|e| e.label == Some(first)));
    }

    #[test]
    fn saturated_square_never_crosses_determinant_sign(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let s = StratumDescriptor::mrank(&[2, 2], &[2, 2], Field::Real).unwrap();
        let (a, _) = sample_fixed_mrank(&[2, 2], &[2, 2], Field::Real, &mut rng, &tol()).unwrap();
        let (b, _) = sample_fixed_mrank(&[2, 2], &[2, 2], Field::Real, &mut rng, &tol()).unwrap();
        let same = classify(&s, &a, &tol()).unwrap() == classify(&s, &b, &tol()).unwrap();
        let c = connect_mrank(&a, &b, &[2, 2], &tol(), &mut rng).unwrap();
        prop_assert_eq!(c.is_path(), same);
    }

    #[test]
    fn sign_triples_are_orbit_invariant(seed in any::<u64>(), scale in 0.1f64..10.0) {
        let mut rng = rng_from_seed(seed);
        let (a, _) = sample_rank_r(&[2, 2, 2], 3, Field::Real, &mut rng, &tol()).unwrap();
        let label = classify_brank3_222(&a, &tol()).unwrap();
        prop_assert_eq!(label.product(), Sign::Plus);
        let gs: Vec<Matrix> = (0..3).map(|_| random_invertible(2, Field::Real, Some(1), &mut rng)).collect();
        let b = a.multilinear(&gs).unwrap().scale(re(scale));
        prop_assume!(classify_222(&b, &tol()).unwrap().class == Class222::BorderRank3);
        prop_assert_eq!(classify_brank3_222(&b, &tol()).unwrap(), label);
    }

    #[test]
    fn even_rank_one_sign_is_coefficient_sign(seed in any::<u64>(), lambda in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0], half in 1usize..=2) {
        let mut rng = rng_from_seed(seed);
        let u = gaussian_vector(3, Field::Real, &mut rng);
        let s = sym_power(&u, 2 * half, re(lambda)).unwrap();
        prop_assert_eq!(sym_sign_rank1(&s, &tol()).unwrap(), Sign::of(lambda));
    }

    #[test]
    fn stratum_strings_round_trip(r in 1usize..=4, shape in prop::collection::vec(2usize..=5, 2..=4), complex in any::<bool>(), kind in 0usize..6) {
        let field = field_of(complex);
        let n = shape[0];
        let d = shape.len();
        let s = match kind {
            0 => StratumDescriptor::rank(r, &shape, field),
            1 => StratumDescriptor::border_rank(r, &shape, field),
            2 => StratumDescriptor::sym_rank(r, n, d, field),
            3 => StratumDescriptor::sym_border_rank(r, n, d, field),
            4 => StratumDescriptor::mrank(&shape.iter().map(|&m| m.min(r)).collect::<Vec<_>>(), &shape, field),
            _ => StratumDescriptor::sym_mrank(r.min(n), n, d, field),
        };
        if let Ok(s) = s {
            let text = s.to_string();
            let back: StratumDescriptor = text.parse().unwrap();
            prop_assert_eq!(&back, &s);
            prop_assert_eq!(back.to_string(), text);
        }
    }

    #[test]
    fn tensor_files_round_trip(seed in any::<u64>(), shape in prop::collection::vec(1usize..=4, 1..=4), complex in any::<bool>()) {
        let mut rng = rng_from_seed(seed);
        let a = gaussian_tensor(&shape, field_of(complex), &mut rng).scale(re(1e-3f64.powi((seed % 7) as i32 - 3)));
        let text = tensor_to_json(&a).unwrap();
        prop_assert_eq!(parse_tensor_json(&text).unwrap().into_dense(), a);
    }
}

#[test]
fn rank_one_label_is_single() {
    let mut rng = rng_from_seed(1);
    let s = StratumDescriptor::rank(1, &[3, 3, 3], Field::Real).unwrap();
    let (a, _) = sample_rank_r(&[3, 3, 3], 1, Field::Real, &mut rng, &tol()).unwrap();
    assert_eq!(classify(&s, &a, &tol()).unwrap(), ComponentLabel::Single);
}
