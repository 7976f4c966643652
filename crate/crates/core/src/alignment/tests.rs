use super::*;
use crate::constructions::{corollary_g, SymmetricFamily};

fn three_user_ic() -> (ChannelSpec, IndexMatrix) {
    let spec = ChannelSpec::from_fn(3, |p, q| p == q, |_, _| true).unwrap();
    let g = IndexMatrix::from_fn(3, |p, q| (p == q) as u32);
    (spec, g)
}

fn band_instance() -> (ChannelSpec, IndexMatrix) {
    let fam = SymmetricFamily::new(5, 2).unwrap();
    (fam.spec(), corollary_g(&fam))
}

#[test]
fn tuples_are_lexicographic() {
    let t = exponent_tuples(2, 2);
    assert_eq!(t, vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]);
    for (i, a) in exponent_tuples(3, 3).iter().enumerate() {
        assert_eq!(tuple_index(a, 3), i);
    }
    assert_eq!(exponent_tuples(0, 4), vec![Vec::<u32>::new()]);
}

#[test]
fn shared_label_ic_layout() {
    let (spec, _) = three_user_ic();
    let g = IndexMatrix::from_fn(3, |p, q| (p == q) as u32);
    let shape = InstanceShape::new(&spec, &g, 1).unwrap();
    assert_eq!(shape.gamma, 6);
    assert_eq!(shape.t, 65);
    for p in 0..3 {
        assert_eq!(shape.total_cols(p), 65);
    }
}

#[test]
fn band_sets_match_hand_computation() {
    let (spec, g) = band_instance();
    let sets = interference_sets(&spec, &g).unwrap();
    let h1: BTreeSet<(usize, usize)> = [(1, 0), (4, 4), (1, 1), (3, 2), (3, 3)].into_iter().collect();
    let h2: BTreeSet<(usize, usize)> = [(0, 0), (2, 1), (2, 2), (4, 3)].into_iter().collect();
    assert_eq!(sets[&1], h1);
    assert_eq!(sets[&2], h2);
    let shape = InstanceShape::new(&spec, &g, 1).unwrap();
    assert_eq!((shape.gamma, shape.p_max, shape.t), (5, 0, 34));
    assert_eq!(shape.sets[&2].last(), Some(&Diagonal::Synthetic { label: 2, index: 0 }));
}

#[test]
fn invalid_matrix_has_no_sets() {
    let (spec, _) = three_user_ic();
    let bad = IndexMatrix::from_fn(3, |_, _| 1);
    assert!(matches!(interference_sets(&spec, &bad), Err(Error::InvalidIndexMatrix(_))));
}

#[test]
fn padding_reaches_common_size() {
    let (spec, g) = band_instance();
    let sets = interference_sets(&spec, &g).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let padded = pad_sets(&sets, 34, &mut rng);
    assert_eq!(padded.gamma, 5);
    assert!(padded.sets.values().all(|s| s.len() == 5));
    assert_eq!(padded.padding[&1].len(), 0);
    assert_eq!(padded.padding[&2].len(), 1);
    assert_eq!(padded.padding[&2][0].len(), 34);
}

#[test]
fn containment_holds_exactly() {
    let (spec, g) = band_instance();
    let shape = InstanceShape::new(&spec, &g, 2).unwrap();
    let inst = AlignmentInstance::sample(shape, &mut ChaCha8Rng::seed_from_u64(3));
    let u = inst.build_precoders();
    let w = inst.build_expanded();
    assert_eq!(u[&1].len(), 32);
    assert_eq!(w[&1].len(), 243);
    assert!(inst.span_containment(&u, &w).is_empty());
}

#[test]
fn receiver_space_dimensions() {
    let (spec, g) = band_instance();
    let shape = InstanceShape::new(&spec, &g, 1).unwrap();
    let inst = AlignmentInstance::sample(shape, &mut ChaCha8Rng::seed_from_u64(0));
    let lambda = inst.build_receiver_space(0);
    assert_eq!(lambda.len(), 34);
    assert!(lambda.iter().all(|c| c.values.len() == 34));
}

#[test]
fn property_one_holds_for_valid_input() {
    let (spec, g) = band_instance();
    let shape = InstanceShape::new(&spec, &g, 1).unwrap();
    assert!(shape.property_one_violations().is_empty());
    for p in 0..5 {
        assert!(shape.distinctness_cases(p).iter().all(|c| c.holds));
        let monos = shape.column_monomials(p);
        let set: HashSet<&Monomial> = monos.iter().collect();
        assert_eq!(set.len(), monos.len());
    }
}

#[test]
fn ic_verifies_with_both_backends() {
    let (spec, g) = three_user_ic();
    for backend in [Backend::Exact, Backend::Float] {
        let r = verify(
            &spec,
            &g,
            &VerifyOptions {
                backend,
                ..VerifyOptions::default()
            },
        )
        .unwrap();
        assert!(r.passed(), "{backend:?}: {}", r.to_json());
        assert_eq!(r.t, 65);
        assert_eq!(r.dof_sum, Ratio::new(3, 65));
    }
}

#[test]
fn band_instance_overflows_at_leftover_row() {
    let (spec, g) = band_instance();
    let r = verify(&spec, &g, &VerifyOptions::default()).unwrap();
    assert!(!r.passed());
    assert_eq!(r.structural_failures, vec![4]);
    assert_eq!(r.per_receiver[4].total_cols, 65);
    assert!(r.per_receiver[..4].iter().all(|x| x.full_rank && x.total_cols == 34));
    assert!(r.containment_ok && r.case_failures.is_empty() && r.property_one_violations.is_empty());
    assert_eq!(r.per_receiver[0].dof_ratio, Ratio::new(2, 34));
    assert_eq!(r.dof_limit_sum, Ratio::from_integer(3));
}

#[test]
fn rotated_band_instance_verifies() {
    let (spec, g) = band_instance();
    let rotated = IndexMatrix::from_fn(5, |p, q| g.get((p + 4) % 5, (q + 4) % 5));
    assert!(puzzle::is_valid(&rotated, &spec));
    let r = verify(&spec, &rotated, &VerifyOptions::default()).unwrap();
    assert!(r.passed(), "{}", r.to_json());
    assert_eq!((r.p_max, r.t), (0, 65));
}

#[test]
fn invalid_matrix_fails_structurally() {
    let spec = ChannelSpec::from_fn(2, |_, _| true, |_, _| true).unwrap();
    let g = IndexMatrix::from_rows(&[[1, 1], [1, 0]]).unwrap();
    let r = verify(&spec, &g, &VerifyOptions::default()).unwrap();
    assert!(!r.passed());
    assert!(!r.violations.is_empty());
    assert!(!r.property_one_violations.is_empty());
}

#[test]
fn zero_matrix_is_trivial() {
    let (spec, _) = three_user_ic();
    let r = verify(&spec, &IndexMatrix::zeros(3), &VerifyOptions::default()).unwrap();
    assert!(r.passed());
    assert_eq!(r.t, 0);
    assert_eq!(r.dof_sum, Ratio::from_integer(0));
}

#[test]
fn column_cap_refuses() {
    let (spec, g) = band_instance();
    let opts = VerifyOptions {
        eta: 3,
        column_cap: 100,
        ..VerifyOptions::default()
    };
    assert!(matches!(verify(&spec, &g, &opts), Err(Error::Refused(_))));
}

#[test]
fn reports_are_reproducible() {
    let (spec, g) = band_instance();
    let opts = VerifyOptions {
        seed: 11,
        parallelism: 2,
        ..VerifyOptions::default()
    };
    let a = verify(&spec, &g, &opts).unwrap().to_json();
    let b = verify(&spec, &g, &VerifyOptions { parallelism: 1, ..opts }).unwrap().to_json();
    assert_eq!(a, b);
}

#[test]
fn dof_ratio_grows_with_eta() {
    let (spec, g) = band_instance();
    let mut prev = Ratio::from_integer(0);
    for eta in 1..6 {
        let r = pmax_dof_ratio(&spec, &g, eta).unwrap();
        assert!(r > prev);
        assert!(r < Ratio::new(2, 3));
        prev = r;
    }
}

#[test]
fn single_user_has_empty_sets() {
    let spec = ChannelSpec::from_fn(1, |_, _| true, |_, _| true).unwrap();
    let g = IndexMatrix::from_fn(1, |_, _| 1);
    let sets = interference_sets(&spec, &g).unwrap();
    assert!(sets[&1].is_empty());
    let shape = InstanceShape::new(&spec, &g, 1).unwrap();
    assert_eq!((shape.gamma, shape.t), (0, 1));
    let inst = AlignmentInstance::sample(shape, &mut ChaCha8Rng::seed_from_u64(5));
    let u = inst.build_precoders();
    let w = inst.build_expanded();
    assert_eq!(u[&1], w[&1]);
    assert_eq!(u[&1].len(), 1);
    assert_eq!(u[&1][0].values[0], BigInt::from(inst.seeds[&1][0]));
    let r = verify(&spec, &g, &VerifyOptions::default()).unwrap();
    assert!(r.passed());
    assert_eq!(r.per_receiver[0].dof_ratio, Ratio::from_integer(1));
}

#[test]
fn padding_fills_smaller_sets() {
    let mut sets = InterferenceSets::new();
    sets.insert(1, [(0, 1), (0, 2), (1, 2), (2, 0)].into_iter().collect());
    sets.insert(2, [(1, 0), (2, 1)].into_iter().collect());
    let padded = pad_sets(&sets, 7, &mut ChaCha8Rng::seed_from_u64(2));
    assert_eq!(padded.gamma, 4);
    assert_eq!(padded.padding[&2].len(), 2);
    assert!(padded.padding[&2].iter().flatten().all(|&c| c != 0 && c.abs() <= 1 << COEFF_BITS));
    assert_eq!(
        padded.sets[&2][2..],
        [Diagonal::Synthetic { label: 2, index: 0 }, Diagonal::Synthetic { label: 2, index: 1 }]
    );
}

#[test]
fn desired_block_is_channel_times_precoder() {
    let (spec, g) = band_instance();
    let shape = InstanceShape::new(&spec, &g, 1).unwrap();
    let inst = AlignmentInstance::sample(shape, &mut ChaCha8Rng::seed_from_u64(9));
    let lambda = inst.build_receiver_space(1);
    let u = inst.build_precoders();
    assert_eq!(lambda[0], u[&2][0].scale_by(&inst.channels[&(1, 0)]));
    assert_eq!(lambda[1], u[&2][0].scale_by(&inst.channels[&(1, 1)]));
    assert_eq!(lambda[2..], inst.build_expanded()[&1][..]);
}
