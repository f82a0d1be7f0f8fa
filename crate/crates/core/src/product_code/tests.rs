use super::*;
use proptest::prelude::*;

fn one_by_one() -> [ClassicalSeed; 3] {
    let s = ClassicalSeed::new(SparseBitMatrix::identity(1));
    [s.clone(), s.clone(), s]
}

fn assert_homology_invariants(code: &ProductCode) {
    assert!(code.meta().mul(code.hx()).unwrap().is_zero());
    assert!(code.hx().mul(&code.hz.transpose()).unwrap().is_zero());
    assert!(code.lm.mul(code.hx()).unwrap().is_zero());
    assert!(code.meta().mul(&code.fm).unwrap().is_zero());
    assert_eq!(code.lm.mul(&code.fm).unwrap().rank(), code.km());
    assert_eq!(code.logical_x.rows(), code.k());
}

#[test]
fn smallest_product() {
    let cc = build_complex(&one_by_one());
    assert_eq!(cc.dims, [1, 3, 3, 1]);
    assert!(cc.chain_conditions_hold());
    ldpc_degree_bounds(&cc, &one_by_one()).unwrap();
}

#[test]
fn toric_seed_matrix_l3() {
    let expected = SparseBitMatrix::from_bit_strings(&["110", "011", "101"]).unwrap();
    let seeds = toric_seeds(3).unwrap();
    for s in &seeds {
        assert_eq!(s.matrix, expected);
    }
}

#[test]
fn surface_seed_matrices_l3() {
    let d = SparseBitMatrix::from_bit_strings(&["110", "011"]).unwrap();
    let [a, b, c] = surface_seeds(3).unwrap();
    assert_eq!(a.matrix, d);
    assert_eq!(b.matrix, d);
    assert_eq!(c.matrix, d.transpose());
}

#[test]
fn small_lattice_rejected() {
    assert!(matches!(toric_seeds(1), Err(CodeError::LatticeTooSmall(1))));
    assert!(matches!(surface_seeds(0), Err(CodeError::LatticeTooSmall(0))));
}

#[test]
fn toric_l3_parameters() {
    let code = ProductCode::toric(3).unwrap();
    assert_eq!(code.n(), 81);
    assert_eq!(
        code.params,
        CodeParams { n: 81, k: 3, dx: Distance::Finite(9), dz: Distance::Finite(3), dss: Distance::Finite(3), km: 3 }
    );
    assert_homology_invariants(&code);
    for r in 0..code.lm.rows() {
        assert!(code.lm.row(r).len() >= 9, "lm row {r} too light");
    }
}

#[test]
fn toric_l2_parameters() {
    let code = ProductCode::toric(2).unwrap();
    assert_eq!(code.params.n, 24);
    assert_eq!(code.params.k, 3);
    assert_eq!(code.params.dx, Distance::Finite(4));
    assert_eq!(code.params.dz, Distance::Finite(2));
    assert_eq!(code.km(), 3);
    assert_eq!(code.lm.mul(&code.fm).unwrap().rank(), 3);
}

#[test]
fn surface_l3_parameters() {
    let code = ProductCode::surface(3).unwrap();
    assert_eq!(
        code.params,
        CodeParams { n: 51, k: 1, dx: Distance::Finite(9), dz: Distance::Finite(3), dss: Distance::Infinite, km: 0 }
    );
    assert_eq!(code.lm.rows(), 0);
    assert_eq!(code.fm.cols(), 0);
    assert_homology_invariants(&code);
}

#[test]
fn closed_forms_small_lattices() {
    for l in 2..=6 {
        let t = ProductCode::toric(l).unwrap();
        assert_eq!((t.n(), t.k()), (3 * l * l * l, 3));
        assert_eq!(t.params.dx, Distance::Finite(l * l));
        assert_eq!(t.params.dz, Distance::Finite(l));
        assert_eq!(t.params.dss, Distance::Finite(l));
        let s = ProductCode::surface(l).unwrap();
        assert_eq!((s.n(), s.k()), (2 * l * (l - 1) * (l - 1) + l * l * l, 1));
        assert_eq!(s.params.dx, Distance::Finite(l * l));
        assert_eq!(s.params.dz, Distance::Finite(l));
        assert_eq!(s.params.dss, Distance::Infinite);
    }
}

#[test]
fn ldpc_seed_parameters() {
    for (row, (n, k, d)) in [(16, 4, 6), (20, 5, 8), (24, 6, 10)].into_iter().enumerate() {
        let [a, b, c] = table_seeds(row + 1).unwrap();
        assert_eq!((a.n, a.k, a.d), (n, k, Distance::Finite(d)));
        assert_eq!(a.matrix.rank(), a.n_t, "full row rank");
        assert_eq!(a.max_col_weight(), 3);
        assert_eq!(a.max_row_weight(), 4);
        let l = d;
        assert_eq!((b.n, b.k, b.d), (l, 1, Distance::Finite(l)));
        assert_eq!((c.n_t, c.k_t, c.d_t), (l, 1, Distance::Finite(l)));
        assert_eq!(c.k, 0);
    }
}

#[test]
fn table_row_1() {
    let seeds = table_seeds(1).unwrap();
    assert_eq!(seeds[0].matrix.rank(), 12);
    let cc = build_complex(&seeds);
    assert_eq!(cc.dims[1], 12 * 6 * 5 + 16 * 5 * 5 + 16 * 6 * 6);
    let report = ldpc_degree_bounds(&cc, &seeds).unwrap();
    assert_eq!(report.col_bound[2], 3);
    let code = derive_code(seeds).unwrap();
    assert_eq!((code.n(), code.k(), code.k_formula), (1336, 4, 4));
    assert_eq!(code.params.dx.min(code.params.dz), Distance::Finite(6));
    assert_eq!(code.km(), 0);
}

#[test]
fn toric_degree_bounds() {
    let seeds = toric_seeds(3).unwrap();
    let r = ldpc_degree_bounds(&build_complex(&seeds), &seeds).unwrap();
    assert_eq!((r.col_bound[1], r.row_bound[1]), (4, 4));
    assert!(r.col[1] <= 4 && r.row[1] <= 4);
}

#[test]
fn hx_single_qubit_syndrome_weight() {
    let code = ProductCode::toric(2).unwrap();
    for q in 0..code.n() {
        let e = BitVector::from_support(code.n(), [q]).unwrap();
        let s = code.hx().mat_vec(&e).unwrap();
        assert_eq!(s.weight(), code.hx().col(q).len());
    }
}

#[test]
fn stabiliser_test_matches_row_space() {
    let code = ProductCode::toric(2).unwrap();
    for r in 0..code.hz.rows() {
        assert!(code.is_stabiliser(&code.hz.row_vector(r)));
    }
    for r in 0..code.logical_x.rows() {
        // a Z logical anticommutes with some X logical
        let z_logicals = quotient_basis(&code.hx().kernel_basis(), code.hz.row_supports(), code.n(), code.k());
        assert_eq!(z_logicals.len(), 3);
        assert!(z_logicals.iter().any(|z| code.logical_x.row_vector(r).dot(z)));
    }
}

#[test]
fn fm_columns_are_invalid_syndromes() {
    let code = ProductCode::toric(3).unwrap();
    for c in 0..code.fm.cols() {
        assert!(code.is_invalid_syndrome(&code.fm.col_vector(c)));
    }
}

#[test]
fn bundle_round_trip() {
    let code = ProductCode::toric(2).unwrap();
    let json = serde_json::to_string(&code.to_bundle()).unwrap();
    let bundle: CodeBundle = serde_json::from_str(&json).unwrap();
    let back = ProductCode::from_bundle(&bundle).unwrap();
    assert_eq!(back.params, code.params);

    let mut tampered = bundle;
    tampered.params.k = 7;
    assert!(matches!(ProductCode::from_bundle(&tampered), Err(CodeError::Inconsistent(_))));
}

#[test]
fn distance_serde() {
    let v = serde_json::to_string(&[Distance::Finite(3), Distance::Infinite, Distance::Unknown]).unwrap();
    assert_eq!(v, r#"[3,"inf","unknown"]"#);
    let back: Vec<Distance> = serde_json::from_str(&v).unwrap();
    assert_eq!(back, vec![Distance::Finite(3), Distance::Infinite, Distance::Unknown]);
}

#[test]
fn distance_cap_yields_unknown() {
    let s = ClassicalSeed::with_distance_cap(repetition_check(4).unwrap(), 0);
    assert_eq!(s.d, Distance::Unknown);
    assert_eq!(s.d_t, Distance::Infinite);
    assert_eq!(Distance::Unknown.mul(Distance::Infinite), Distance::Infinite);
}

fn arb_seed() -> impl Strategy<Value = ClassicalSeed> {
    (1usize..4, 1usize..4).prop_flat_map(|(m, n)| {
        proptest::collection::vec(proptest::collection::vec(prop::bool::weighted(0.4), n), m).prop_map(|rows| {
            let dense: Vec<Vec<u8>> = rows.iter().map(|r| r.iter().map(|&b| b as u8).collect()).collect();
            ClassicalSeed::new(SparseBitMatrix::from_dense(&dense).unwrap())
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]
    #[test]
    fn random_seed_triples(a in arb_seed(), b in arb_seed(), c in arb_seed()) {
        let code = derive_code([a, b, c]).unwrap();
        let rank_k = code.n() - code.complex.delta0.rank() - code.complex.delta1.rank();
        prop_assert_eq!(code.k(), rank_k);
        prop_assert_eq!(code.k_formula, rank_k);
        assert_homology_invariants(&code);
    }
}
