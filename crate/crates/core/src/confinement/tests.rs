use super::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn toric(l: usize) -> ProductCode {
    ProductCode::toric(l).unwrap()
}

fn unit(n: usize, i: usize) -> BitVector {
    BitVector::from_support(n, [i]).unwrap()
}

/// Random connected graph: a random tree plus extra edges.
pub(super) fn random_connected(rng: &mut ChaCha8Rng, n: usize) -> Graph {
    let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.random_range(0..v), v)).collect();
    let extra = rng.random_range(0..=n);
    for _ in 0..extra {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        edges.push((a, b));
    }
    Graph::from_edges(n, &edges).unwrap()
}

/// Closeness by scanning every node subset of size beta.
pub(super) fn closeness_oracle(g: &Graph, nodes: u128, beta: usize) -> usize {
    let n = g.node_count();
    let mut best = 0;
    for k in 0u32..(1 << n) {
        if k.count_ones() as usize != beta {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&v| k >> v & 1 == 1).collect();
        if g.component_sizes(&members).len() == 1 {
            best = best.max((k as u128 & nodes).count_ones() as usize);
        }
    }
    best
}

#[test]
fn reduced_weight_examples() {
    let code = toric(2);
    let h = code.hx();
    assert_eq!(reduced_weight(h, &BitVector::zeros(code.n()), 4).unwrap(), 0);
    let stab = code.hz.row_vector(0);
    assert_eq!(reduced_weight(h, &stab, 4).unwrap(), 0);
    for q in 0..code.n() {
        assert_eq!(reduced_weight(h, &unit(code.n(), q), 4).unwrap(), 1);
    }
    // weight 2 combinations never beat themselves unless the syndrome vanishes
    let e = BitVector::from_support(code.n(), [0, 5]).unwrap();
    let red = reduced_weight(h, &e, 4).unwrap();
    assert!(red <= 2);
}

#[test]
fn reduced_weight_cap_exceeded() {
    let code = toric(3);
    let e = BitVector::from_support(code.n(), [0, 10, 20, 30, 40, 50]).unwrap();
    let res = reduced_weight(code.hx(), &e, 1);
    assert!(matches!(res, Err(ConfinementError::Infeasible(_))) || res.unwrap() <= 1);
}

#[test]
fn shadow_sizes() {
    let code = toric(2);
    let s0 = build_shadow(code.hx(), 0).unwrap();
    assert_eq!(s0.len(), 1);
    assert!(s0.contains(&BitVector::zeros(code.hx().rows())));
    let s1 = build_shadow(code.hx(), 1).unwrap();
    let distinct: std::collections::HashSet<_> =
        (0..code.n()).map(|q| code.hx().col_vector(q)).collect();
    assert_eq!(s1.len(), distinct.len() + 1);
    assert_eq!(s1.len(), 25);
}

#[test]
fn full_shadow_is_image() {
    let h = SparseBitMatrix::from_bit_strings(&["110100", "011010", "001101"]).unwrap();
    let shadow = build_shadow(&h, h.cols()).unwrap();
    assert_eq!(shadow.len(), 1 << h.rank());
    for s in shadow.syndromes() {
        assert!(h.in_image(s).unwrap());
    }
}

#[test]
fn shadow_min_errors_are_minimal() {
    let code = toric(2);
    let shadow = build_shadow(code.hx(), 2).unwrap();
    for s in shadow.syndromes() {
        let e = BitVector::from_support(code.n(), shadow.min_error(s).unwrap().iter().copied()).unwrap();
        assert_eq!(code.hx().mat_vec(&e).unwrap(), *s);
        assert_eq!(reduced_weight(code.hx(), &e, 4).unwrap(), e.weight());
    }
}

#[test]
fn shadow_decode_in_shadow_is_trivial() {
    let code = toric(2);
    let shadow = build_shadow(code.hx(), 2).unwrap();
    for s in shadow.syndromes().iter().take(40) {
        let dec = shadow_decode(&shadow, code.n(), s);
        assert!(dec.s_r.is_zero());
        assert_eq!(code.hx().mat_vec(&dec.e_r).unwrap(), *s);
    }
}

#[test]
fn shadow_bound_toric2() {
    let code = toric(2);
    let rep = check_shadow_bound(code.hx(), 2, ConfinementFunction::Cubic, 1, 1).unwrap();
    assert_eq!(rep.cases, 25 * 25);
    assert_eq!(rep.violations, 0);
}

#[test]
fn planted_instance_bound() {
    let code = toric(2);
    let h = code.hx();
    let shadow = build_shadow(h, 2).unwrap();
    let e = unit(code.n(), 3);
    let s = h.mat_vec(&e).unwrap().xor(&unit(h.rows(), 7));
    let dec = shadow_decode(&shadow, code.n(), &s);
    let r = e.xor(&dec.e_r);
    assert!(reduced_weight(h, &r, 4).unwrap() as f64 <= ConfinementFunction::Cubic.eval(2));
}

#[test]
fn confinement_toric() {
    let lim = EnumerationLimits::default();
    let r2 = check_confinement(&toric(2), 2, ConfinementFunction::Cubic, true, lim).unwrap();
    assert!(r2.verified);
    assert_eq!(r2.errors_checked, 24 + 276);
    let r3 = check_confinement(&toric(3), 3, ConfinementFunction::Cubic, true, lim).unwrap();
    assert!(r3.verified);
    assert_eq!(r3.checked_weight, 3);
}

#[test]
fn constant_zero_fails_at_weight_one() {
    let f = ConfinementFunction::Constant { value: 0.0 };
    let r = check_confinement(&toric(2), 2, f, true, EnumerationLimits::default()).unwrap();
    assert!(!r.verified);
    let w = r.worst_case.unwrap();
    assert!(w.reduced_weight >= 1 && w.bound == 0.0);
    let r1 = check_confinement(&toric(2), 1, f, true, EnumerationLimits::default()).unwrap();
    assert!(!r1.verified);
}

#[test]
fn confinement_both_types() {
    let r = check_confinement(&toric(2), 2, ConfinementFunction::Cubic, false, EnumerationLimits::default()).unwrap();
    assert!(r.verified);
    assert_eq!(r.errors_checked, 2 * 300);
}

#[test]
fn confinement_respects_cap() {
    let lim = EnumerationLimits { weight_cap: 1, ..Default::default() };
    let r = check_confinement(&toric(2), 3, ConfinementFunction::Cubic, true, lim).unwrap();
    assert_eq!((r.t, r.checked_weight), (3, 1));
    let tiny = EnumerationLimits { weight_cap: 4, max_enumeration: 10 };
    assert!(check_confinement(&toric(2), 2, ConfinementFunction::Cubic, true, tiny).is_err());
}

#[test]
fn soundness_partial() {
    let h = toric(2).hx().clone();
    let vacuous = check_soundness_partial(&h, 4, ConfinementFunction::Constant { value: 0.0 }, 0).unwrap();
    assert!(vacuous.no_counterexample_up_to_w_max);
    assert_eq!(vacuous.errors_checked, 0);
    let ok = check_soundness_partial(&h, 8, ConfinementFunction::Cubic, 3).unwrap();
    assert!(ok.no_counterexample_up_to_w_max);
    let bad = check_soundness_partial(&h, 8, ConfinementFunction::Linear { slope: 0.01 }, 3).unwrap();
    assert!(bad.counterexample.is_some());
}

#[test]
fn soundness_implies_confinement_instance() {
    let code = toric(2);
    let h = code.hx();
    let omega = h.max_col_weight();
    let t = 2 * omega;
    let f = ConfinementFunction::Cubic;
    let sound = check_soundness_partial(h, t, f, 3).unwrap();
    assert!(sound.no_counterexample_up_to_w_max);
    let lim = EnumerationLimits { weight_cap: 3, ..Default::default() };
    let conf = check_confinement_matrix(h, t / omega, f, lim).unwrap();
    assert!(conf.verified);
}

#[test]
fn function_parsing() {
    assert_eq!("cubic".parse::<ConfinementFunction>().unwrap(), ConfinementFunction::Cubic);
    assert_eq!("linear:2".parse::<ConfinementFunction>().unwrap(), ConfinementFunction::Linear { slope: 2.0 });
    assert_eq!(
        "power:0.5,3".parse::<ConfinementFunction>().unwrap(),
        ConfinementFunction::Power { coeff: 0.5, exponent: 3.0 }
    );
    assert!("quartic".parse::<ConfinementFunction>().is_err());
    for f in [ConfinementFunction::Cubic, ConfinementFunction::Constant { value: 1.5 }] {
        assert_eq!(f.to_string().parse::<ConfinementFunction>().unwrap(), f);
    }
    assert_eq!(ConfinementFunction::Cubic.eval(4), 32.0);
}

#[test]
fn graphs_symmetric() {
    let code = toric(2);
    let qg = Graph::qubit_graph(code.hx());
    let sg = Graph::syndrome_graph(code.hx());
    assert!(qg.is_symmetric() && sg.is_symmetric());
    assert_eq!(qg.node_count(), code.n());
    assert_eq!(sg.node_count(), code.hx().rows());
    let h = code.hx();
    for a in 0..h.cols() {
        for b in 0..h.cols() {
            let share = a != b && h.col(a).iter().any(|r| h.col(b).contains(r));
            assert_eq!(qg.neighbours(a).contains(&b), share);
        }
    }
}

#[test]
fn closeness_examples() {
    let path = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
    assert_eq!(closeness(&path, &[1, 3], 3).unwrap(), 2);
    assert_eq!(closeness(&path, &[], 3).unwrap(), 0);
    assert_eq!(closeness(&path, &[0, 1, 2, 3, 4], 3).unwrap(), 3);
    assert_eq!(closeness(&path, &[0, 4], 2).unwrap(), 1);
    let split = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
    assert!(closeness(&split, &[0], 1).is_err());
    assert!(PatchSet::new(&path, 6, 10).is_err());
}

#[test]
fn patches_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..150 {
        let n = rng.random_range(1..=9);
        let g = random_connected(&mut rng, n);
        let beta = rng.random_range(1..=n);
        let patches = PatchSet::new(&g, beta, DEFAULT_MAX_PATCHES).unwrap();
        let mut masks = patches.masks().to_vec();
        masks.sort_unstable();
        masks.dedup();
        assert_eq!(masks.len(), patches.len(), "duplicate patch");
        let e: u128 = rng.random_range(0..(1u128 << n));
        assert_eq!(patches.closeness_mask(e), closeness_oracle(&g, e, beta));
    }
}

#[test]
fn disjoint_unconnected_errors_have_disjoint_syndromes() {
    let code = toric(3);
    let h = code.hx();
    let qg = Graph::qubit_graph(h);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut tested = 0;
    while tested < 200 {
        let pick = |rng: &mut ChaCha8Rng| -> Vec<usize> { (0..3).map(|_| rng.random_range(0..code.n())).collect() };
        let (a, b) = (pick(&mut rng), pick(&mut rng));
        let touching = a.iter().any(|&x| b.iter().any(|&y| x == y || qg.neighbours(x).contains(&y)));
        if touching {
            continue;
        }
        tested += 1;
        let sa = h.mat_vec(&BitVector::from_support(code.n(), a).unwrap_or_else(|_| BitVector::zeros(code.n()))).unwrap();
        let sb = h.mat_vec(&BitVector::from_support(code.n(), b).unwrap_or_else(|_| BitVector::zeros(code.n()))).unwrap();
        assert!(!sa.dot(&sb) || sa.iter_ones().all(|i| !sb.get(i)));
        assert!(sa.iter_ones().all(|i| !sb.get(i)));
    }
}

#[test]
fn stochastic_shadow_trivial_cases() {
    let code = toric(2);
    let h = code.hx();
    let params = StochasticParams { alpha: 0.5, beta: 2, gamma: 3, weight_cap: 3 };
    let dec = StochasticShadow::new(h, params).unwrap();
    let (sr, er) = dec.decode(&BitVector::zeros(h.rows())).unwrap();
    assert!(sr.is_zero() && er.is_zero());
    let s = h.col_vector(5);
    let (sr, er) = dec.decode(&s).unwrap();
    assert!(sr.is_zero());
    assert_eq!(h.mat_vec(&er).unwrap(), s);
}

#[test]
fn stochastic_shadow_bound_weight_one() {
    let code = toric(2);
    let h = code.hx();
    let t = 2;
    let omega = default_omega(h);
    let params = StochasticParams::from_confinement(t, omega, 3);
    assert_eq!((params.beta, params.gamma), (2, 2 * omega));
    let dec = StochasticShadow::new(h, params).unwrap();
    let qc = SteinerCloseness::new(&Graph::qubit_graph(h), t).unwrap();
    let f = ConfinementFunction::Cubic;
    for q in 0..code.n() {
        let e = unit(code.n(), q);
        for b in std::iter::once(None).chain((0..h.rows()).map(Some)) {
            let s_e = b.map_or_else(|| BitVector::zeros(h.rows()), |b| unit(h.rows(), b));
            let s = h.mat_vec(&e).unwrap().xor(&s_e);
            let (_, er) = dec.decode(&s).unwrap();
            let r = e.xor(&er);
            let red = reduced_closeness(h, &qc, &r, 3).unwrap();
            assert!(red as f64 <= f.eval(2 * dec.syndrome_closeness(&s_e).unwrap()), "q={q} b={b:?}");
        }
    }
}

#[test]
fn steiner_matches_patches() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..300 {
        let n = rng.random_range(1..=10);
        let g = random_connected(&mut rng, n);
        let beta = rng.random_range(1..=n);
        let patches = PatchSet::new(&g, beta, DEFAULT_MAX_PATCHES).unwrap();
        let st = SteinerCloseness::new(&g, beta).unwrap();
        let nodes: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.4)).collect();
        let mask = nodes.iter().fold(0u128, |m, &v| m | 1 << v);
        assert_eq!(st.closeness(&nodes).unwrap(), patches.closeness_mask(mask), "n={n} beta={beta} {nodes:?}");
    }
}
