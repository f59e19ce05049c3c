use proptest::prelude::*;

use vandconv::algebra::{
    evaluate, mixed_moment_formula, moment_formula, parse_expression, to_i_basis, to_v_basis, AspectRatio, Attributes, Basis, Bindings,
    Monomial, Normalization, PhaseAssignment,
};
use vandconv::convolution::{
    convolve, deconvolve_d, deconvolve_v, pooled_gram_moments, GramSource, Model, MomentSequence, SequenceNormalization,
};
use vandconv::density::{mix_phase, Piece, PhaseDensity};
use vandconv::partition::{
    cyclic_classes, in_contributing_set, is_alternating, join, min_rotation, rho_of_pi, standard_form, SetPartition,
};
use vandconv::rational::{frac, int};
use vandconv::simulate::{empirical_mixed_moment, SimulationBindings};
use vandconv::volume::{build_system, expansion_coefficient, oracle_volume};
use vandconv::{Rational, Value};

fn rgs(n: usize) -> impl Strategy<Value = SetPartition> {
    proptest::collection::vec(0u8..(n as u8), n).prop_map(move |raw| {
        let mut out = Vec::with_capacity(raw.len());
        let mut max = 0u8;
        for (i, r) in raw.into_iter().enumerate() {
            let v = if i == 0 { 0 } else { r.min(max + 1) };
            max = max.max(v);
            out.push(v);
        }
        SetPartition::from_rgs(out).unwrap()
    })
}

fn partition() -> impl Strategy<Value = SetPartition> {
    (1usize..=9).prop_flat_map(rgs)
}

fn triple() -> impl Strategy<Value = (SetPartition, SetPartition, SetPartition)> {
    (1usize..=8).prop_flat_map(|n| (rgs(n), rgs(n), rgs(n)))
}

/// Step density with `heights.len()` equal pieces.
fn step_density(heights: &[u32]) -> PhaseDensity {
    let k = heights.len() as i64;
    let total: i64 = heights.iter().map(|&h| h as i64).sum();
    let pieces = heights
        .iter()
        .enumerate()
        .map(|(i, &h)| Piece { lo: frac(i as i64, k), hi: frac(i as i64 + 1, k), coeffs: vec![frac(h as i64 * k, total)] })
        .collect();
    PhaseDensity::piecewise(pieces).unwrap()
}

fn density() -> impl Strategy<Value = PhaseDensity> {
    proptest::collection::vec(0u32..5, 1..6)
        .prop_filter("some mass", |h| h.iter().any(|&x| x > 0))
        .prop_map(|h| step_density(&h))
}

fn rational_vec(len: usize) -> impl Strategy<Value = Vec<Rational>> {
    proptest::collection::vec((-12i64..=12, 1i64..=6), len).prop_map(|v| v.into_iter().map(|(a, b)| frac(a, b)).collect())
}

fn aspect() -> impl Strategy<Value = Rational> {
    (1i64..=4, 1i64..=4).prop_map(|(a, b)| frac(a, b))
}

fn gram_moments(p: &PhaseDensity, n: usize) -> Value {
    gram_moments_at(p, &int(1), n)
}

fn gram_moments_at(p: &PhaseDensity, c: &Rational, n: usize) -> Value {
    let mut a = Attributes::default();
    a.set_c(1, AspectRatio::Value(c.clone()));
    let e = parse_expression("V1' V1", &a).unwrap();
    let poly = moment_formula(&e, n, Normalization::Raw, Basis::Integrals).unwrap();
    evaluate(&poly, &Bindings::default().with_density("w1", p.clone())).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn standard_form_separates_crossing(p in partition()) {
        let s = standard_form(&p);
        if p.is_noncrossing() {
            prop_assert_eq!(s.n(), 0);
        } else {
            prop_assert!(s.n() > 0);
            prop_assert!(is_alternating(&s));
        }
    }

    #[test]
    fn join_is_a_semilattice((p, q, r) in triple()) {
        let pq = join(&p, &q).unwrap();
        prop_assert_eq!(&pq, &join(&q, &p).unwrap());
        prop_assert_eq!(join(&pq, &r).unwrap(), join(&p, &join(&q, &r).unwrap()).unwrap());
        prop_assert_eq!(join(&p, &p).unwrap(), p.clone());
        prop_assert!(p.refines(&pq) && q.refines(&pq));
    }

    #[test]
    fn rho_refines_sigma1((pi, sigma1) in (1usize..=4).prop_flat_map(|n| (rgs(n), rgs(2 * n)))) {
        let rho = rho_of_pi(&pi, &sigma1).unwrap();
        prop_assert!(rho.refines(&sigma1));
        let c = in_contributing_set(&pi, &sigma1).unwrap();
        prop_assert!(pi.block_count() + c.r <= c.rho.block_count() + 1);
    }

    #[test]
    fn volumes_match_lattice_oracle(rho in (1usize..=3).prop_flat_map(|n| rgs(2 * n))) {
        let v = expansion_coefficient(&rho).unwrap();
        prop_assert!(v >= int(0) && v <= int(1));
        let sys = build_system(&rho).unwrap();
        let o = sys.components().iter().map(|c| oracle_volume(c).unwrap()).product::<Rational>();
        prop_assert_eq!(v, o);
    }

    #[test]
    fn rotation_leaves_integrals_unchanged(p in density(), s in (0i64..12).prop_map(|a| frac(a, 12))) {
        let r = p.rotate(&s).unwrap();
        for k in 1..=4 {
            prop_assert_eq!(p.i_k(k), r.i_k(k));
        }
    }

    #[test]
    fn uniform_phase_minimizes_moments(p in density()) {
        for (n, floor) in [(2, int(2)), (3, int(5)), (4, frac(44, 3))] {
            let v = gram_moments(&p, n);
            prop_assert!(v.as_rational().unwrap() >= &floor, "V_{} = {} below {}", n, v, floor);
        }
    }

    #[test]
    fn multiplicative_and_additive_round_trip(d in rational_vec(4), c in aspect(), p in density()) {
        let v = GramSource::Density { density: p, c: c.clone() };
        let dseq = MomentSequence::exact(SequenceNormalization::Dndef, c, d).unwrap();
        for model in [Model::Multiplicative, Model::Additive] {
            let m = convolve(model, Some(&dseq), &v, None, 4).unwrap();
            prop_assert_eq!(&deconvolve_d(model, &m, &v, 4).unwrap().values, &dseq.values);
        }
    }

    #[test]
    fn gram_side_round_trip(d in rational_vec(4).prop_filter("D_1 != 0", |d| d[0] != int(0)), c in aspect(), p in density()) {
        let v = GramSource::Density { density: p.clone(), c: c.clone() };
        let dseq = MomentSequence::exact(SequenceNormalization::Dndef, c.clone(), d).unwrap();
        let exact_v: Vec<Value> = (1..=4).map(|n| gram_moments_at(&p, &c, n)).collect();
        let m = convolve(Model::Multiplicative, Some(&dseq), &v, None, 4).unwrap();
        let back = deconvolve_v(Model::Multiplicative, &m, &dseq, 4).unwrap();
        prop_assert_eq!(back.values, exact_v);
    }

    #[test]
    fn pooled_phases_equal_mixed_density(p1 in density(), p2 in density(), c1 in aspect(), c2 in aspect()) {
        let (pooled, mixed) = pooled_gram_moments(&p1, &c1, &p2, &c2, 3).unwrap();
        prop_assert_eq!(pooled, mixed);
        prop_assert!(mix_phase(&p1, &c1, &p2, &c2).unwrap().is_exact());
    }

    #[test]
    fn simulation_is_seed_deterministic(seed in any::<u64>()) {
        let e = parse_expression("V1' V1", &Attributes::default()).unwrap();
        let b = SimulationBindings::default().with_vandermonde(1, 24, 16, PhaseDensity::Uniform);
        let a = empirical_mixed_moment(&e, &b, 3, 3, seed).unwrap();
        prop_assert_eq!(a, empirical_mixed_moment(&e, &b, 3, 3, seed).unwrap());
    }
}

#[test]
fn class_sizes_sum_and_representatives_are_minimal() {
    for n in 4..=8 {
        let classes = cyclic_classes(n).unwrap();
        let total: usize = classes.iter().map(|c| c.class_size).sum();
        let alternating = vandconv::partition::enumerate_partitions(n).unwrap().filter(is_alternating).count();
        assert_eq!(total, alternating);
        for c in &classes {
            assert_eq!(min_rotation(&c.representative), c.representative);
        }
    }
}

#[test]
fn d_n_enters_with_unit_coefficient() {
    for text in ["D1 V1' V1", "D1 + V1' V1"] {
        let e = parse_expression(text, &Attributes::default()).unwrap();
        for n in 1..=5 {
            let poly = moment_formula(&e, n, Normalization::Scaled, Basis::Gram).unwrap();
            let dn = Monomial::one().with_d(vec![1; n]);
            assert_eq!(poly.terms.get(&dn), Some(&int(1)), "{text} order {n}");
        }
    }
}

#[test]
fn basis_conversion_round_trips() {
    let e = parse_expression("D1 V1' V1", &Attributes::default()).unwrap();
    let assignment = PhaseAssignment::from_expression(&e);
    for n in 1..=6 {
        let raw = mixed_moment_formula(&e, n).unwrap();
        let v = to_v_basis(&raw, &assignment).unwrap();
        assert_eq!(to_i_basis(&v, &assignment).unwrap(), raw, "order {n}");
    }
}

#[test]
fn uniform_substitution_is_consistent() {
    // substituting the uniform V_2 = 2 into the general additive M_2 gives the uniform-phase M_2
    let general = parse_expression("D1 + V1' V1", &Attributes::default()).unwrap();
    let mut uniform_attrs = Attributes::default();
    uniform_attrs.set_phase(1, "uniform");
    let uniform = parse_expression("D1 + V1' V1", &uniform_attrs).unwrap();
    let d = vec![Value::Exact(frac(3, 2)), Value::Exact(frac(7, 3))];
    for n in 1..=2 {
        let g = moment_formula(&general, n, Normalization::Scaled, Basis::Gram).unwrap();
        let u = moment_formula(&uniform, n, Normalization::Scaled, Basis::Gram).unwrap();
        let b = Bindings::default().with_d_moments(1, d.clone()).with_v(1, vec![Value::one(), Value::Exact(int(2))]);
        assert_eq!(evaluate(&g, &b).unwrap(), evaluate(&u, &b).unwrap());
    }
}
