//! Property tests for the algebraic invariants.

use proptest::prelude::*;

use lieder::maps::{
    check_higher_derivation, check_lie_higher_derivation, convolve, convolve_inverse,
    GeneratorSequence, LinMap, MapFamily,
};
use lieder::structure::{rebuild_from_delta, transfer_to_delta, DeltaOrdering};
use lieder::{scalar, Algebra, Element, RankOneSpec, Scalar};
use num_traits::Zero;

fn small_scalar() -> impl Strategy<Value = Scalar> {
    (-3i64..=3).prop_map(scalar)
}

fn element(dim: usize) -> impl Strategy<Value = Element> {
    prop::collection::vec(small_scalar(), dim).prop_map(Element::from_coords)
}

fn linmap(dim: usize) -> impl Strategy<Value = LinMap> {
    prop::collection::vec(prop::collection::vec(small_scalar(), dim), dim)
        .prop_map(|rows| LinMap::from_rows(rows).unwrap())
}

fn family(dim: usize, order: usize) -> impl Strategy<Value = MapFamily> {
    prop::collection::vec(linmap(dim), order)
        .prop_map(move |levels| MapFamily::from_upper_levels(dim, levels).unwrap())
}

fn nonzero_vector(len: usize) -> impl Strategy<Value = Vec<Scalar>> {
    prop::collection::vec(small_scalar(), len)
        .prop_filter("nonzero", |v| v.iter().any(|c| !c.is_zero()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn multiplication_is_associative_on_random_elements(
        a in element(13), b in element(13), c in element(13)
    ) {
        let alg = Algebra::block_diagonal(&[3, 2]).unwrap();
        let left = alg.multiply(&alg.multiply(&a, &b).unwrap(), &c).unwrap();
        let right = alg.multiply(&a, &alg.multiply(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn unit_is_neutral(a in element(9)) {
        let alg = Algebra::matrix(3).unwrap();
        let unit = alg.unit();
        prop_assert_eq!(alg.multiply(&unit, &a).unwrap(), a.clone());
        prop_assert_eq!(alg.multiply(&a, &unit).unwrap(), a);
    }

    #[test]
    fn xi_bracket_at_one_is_the_commutator(a in element(4), b in element(4)) {
        let alg = Algebra::matrix(2).unwrap();
        let bracket = alg.xi_bracket(&a, &b, &scalar(1)).unwrap();
        let ab = alg.multiply(&a, &b).unwrap();
        let ba = alg.multiply(&b, &a).unwrap();
        prop_assert_eq!(bracket, ab.sub(&ba));
    }

    #[test]
    fn rank_one_squares_by_its_pairing(
        x in nonzero_vector(3), f in nonzero_vector(3)
    ) {
        let alg = Algebra::matrix(3).unwrap();
        let spec = RankOneSpec { block: 0, x: x.clone(), f: f.clone() };
        let r = alg.rank_one(&spec).unwrap();
        let pairing: Scalar = x.iter().zip(&f).map(|(a, b)| a * b).sum();
        prop_assert_eq!(alg.multiply(&r, &r).unwrap(), r.scale(&pairing));
    }

    #[test]
    fn idempotent_parts_square_and_sum(
        x in nonzero_vector(3), f in nonzero_vector(3)
    ) {
        let alg = Algebra::matrix(3).unwrap();
        let spec = RankOneSpec { block: 0, x, f };
        let target = alg.rank_one(&spec).unwrap();
        let parts = alg.idempotent_decompose(&spec).unwrap();
        let mut sum = Element::zero(alg.dim());
        for (w, e) in &parts {
            prop_assert!(alg.is_idempotent(e));
            sum = sum.add(&e.scale(w));
        }
        prop_assert_eq!(sum, target);
    }

    #[test]
    fn rank_decomposition_sums_back(e in element(13)) {
        let alg = Algebra::block_diagonal(&[3, 2]).unwrap();
        let specs = alg.rank_decompose(&e).unwrap();
        let mut sum = Element::zero(alg.dim());
        for s in &specs {
            sum = sum.add(&alg.rank_one(s).unwrap());
        }
        prop_assert_eq!(sum, e.clone());
        // part count = sum of block ranks
        let total_rank: usize = (0..2)
            .map(|b| {
                let m = alg.block_matrix(&e, b).unwrap();
                let width = m.len();
                lieder::linalg::rank(&m, width)
            })
            .sum();
        prop_assert_eq!(specs.len(), total_rank);
    }

    #[test]
    fn convolution_is_associative(
        f in family(4, 4), g in family(4, 4), h in family(4, 4)
    ) {
        let left = convolve(&convolve(&f, &g).unwrap(), &h).unwrap();
        let right = convolve(&f, &convolve(&g, &h).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn convolution_inverse_is_two_sided(f in family(4, 4)) {
        let inv = convolve_inverse(&f);
        let id = MapFamily::identity_family(4, 4);
        prop_assert_eq!(convolve(&f, &inv).unwrap(), id.clone());
        prop_assert_eq!(convolve(&inv, &f).unwrap(), id);
    }

    #[test]
    fn inner_families_satisfy_both_product_rules(
        gens in prop::collection::vec(element(4), 3)
    ) {
        let alg = Algebra::matrix(2).unwrap();
        let sequence = GeneratorSequence::from_elements(gens).unwrap();
        let fam = lieder::maps::inner_higher(&alg, &sequence).unwrap();
        prop_assert!(check_higher_derivation(&alg, &fam).is_ok());
        // every higher derivation is also a bracket higher derivation
        prop_assert!(check_lie_higher_derivation(&alg, &fam).is_ok());
    }

    #[test]
    fn transfer_and_rebuild_are_mutually_inverse(f in family(4, 4)) {
        for ordering in [DeltaOrdering::A, DeltaOrdering::B] {
            let seq = transfer_to_delta(&f, ordering);
            let back = rebuild_from_delta(&seq).unwrap();
            prop_assert_eq!(back.clone(), f.clone());
            let seq_again = transfer_to_delta(&back, ordering);
            prop_assert_eq!(seq_again, seq);
        }
    }
}

#[test]
fn deltas_of_an_inner_family_satisfy_the_level_one_rule() {
    // Transfer an order-3 inner family generated by (T, 0, 0); every δ_n
    // must satisfy the level-one bracket rule on sampled zero-product pairs.
    let alg = Algebra::matrix(2).unwrap();
    let mut rng = lieder::SplitMix64::new(4242);
    let t = Element::from_coords(rng.small_vector(4));
    let zero = Element::zero(4);
    let gens = GeneratorSequence::from_elements(vec![t, zero.clone(), zero]).unwrap();
    let fam = lieder::maps::inner_higher(&alg, &gens).unwrap();
    let pairs = lieder::solver::sample_zero_product_pairs(&alg, 200, 999);
    for ordering in [DeltaOrdering::A, DeltaOrdering::B] {
        let seq = transfer_to_delta(&fam, ordering);
        assert!(seq
            .verify_on_pairs(&alg, &scalar(1), &pairs)
            .unwrap()
            .is_ok());
    }
}
