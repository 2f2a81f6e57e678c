mod common;

use common::*;
use proptest::prelude::*;
use qgraph::dtn::dtn_matrix;
use qgraph::format::{parse_graph, serialize_graph};
use qgraph::graph::{validate_condition, VertexCondition};
use qgraph::linalg::CMatrix;
use qgraph::resolvent::solve_full;
use qgraph::{ConditionViolation, Error};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn standard_conditions_are_admissible(d in 1usize..9) {
        let check = validate_condition(&VertexCondition::<f64>::standard(d).unwrap()).unwrap();
        prop_assert!(check.is_ok());
        prop_assert_eq!(check.rank, d);
        prop_assert!(check.hermitian_defect <= 1e-14);
    }

    #[test]
    fn unitary_parametrization_is_admissible(seed in any::<u64>(), d in 1usize..6) {
        let u = random_unitary(&mut ChaCha8Rng::seed_from_u64(seed), d);
        let check = validate_condition(&VertexCondition::from_unitary(&u).unwrap()).unwrap();
        prop_assert!(check.is_ok(), "{:?}", check);
    }

    #[test]
    fn delta_conditions_are_admissible(d in 1usize..6, strength in -5.0f64..5.0) {
        prop_assert!(validate_condition(&VertexCondition::delta(d, strength).unwrap()).unwrap().is_ok());
    }

    #[test]
    fn left_multiplication_preserves_the_condition(seed in any::<u64>()) {
        // (CA, CB) with invertible C describes the same condition
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = VertexCondition::<f64>::standard(3).unwrap();
        let c = random_unitary(&mut rng, 3).add(&CMatrix::identity(3).scale(cr(3.0)));
        let moved = VertexCondition::new(c.matmul(&base.a), c.matmul(&base.b));
        prop_assert!(moved.equivalent_to(&base, 1e-10));
        prop_assert!(validate_condition(&moved).unwrap().is_ok());
    }
}

#[test]
fn zero_condition_is_rejected() {
    let cond = VertexCondition::<f64>::new(CMatrix::zeros(2, 2), CMatrix::zeros(2, 2));
    let check = validate_condition(&cond).unwrap();
    assert!(matches!(check.violation, Some(ConditionViolation::RankDeficient { rank: 0, degree: 2, .. })));
}

#[test]
fn non_self_adjoint_condition_is_rejected() {
    // f' = i f on one edge end: A B* = -i is not Hermitian
    let cond = VertexCondition::<f64>::new(
        CMatrix::from_rows(&[vec![C::new(0.0, -1.0)]]).unwrap(),
        CMatrix::identity(1),
    );
    let check = validate_condition(&cond).unwrap();
    assert!(matches!(check.violation, Some(ConditionViolation::NotSelfAdjoint { .. })));
}

#[test]
fn data_files_parse() {
    for name in ["interval_pi.qg", "interval_1.qg", "full_line.qg", "lasso.qg", "star3.qg", "asym2.qg"] {
        let g = graph(name);
        assert!(g.is_normalized(), "{name}");
    }
    assert_eq!(graph("full_line.qg").boundary(), vec![1, 2]);
    assert!(!graph("star_unnormalized.qg").is_normalized());
    let err = parse_graph::<f64>(&std::fs::read_to_string(data_path("bad_rank.qg")).unwrap()).unwrap_err();
    match err {
        Error::Parse { line, msg } => {
            assert_eq!(line, 5);
            assert!(msg.contains("rank(A B) = 0 < 1"), "{msg}");
        }
        e => panic!("{e}"),
    }
}

#[test]
fn serialization_round_trip_gives_identical_computations() {
    let graphs = vec![
        graph("lasso.qg"),
        graph("star3.qg"),
        graph("asym2.qg"),
        random_unitary_graph(21),
    ];
    for g in graphs {
        let text = serialize_graph(&g);
        let back = parse_graph::<f64>(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(serialize_graph(&back), text);
        let lam = C::new(2.2, 0.4);
        assert_eq!(dtn_matrix(&back, lam).unwrap(), dtn_matrix(&g, lam).unwrap());
    }
    let g = graph("asym2.qg");
    let back = parse_graph::<f64>(&serialize_graph(&g)).unwrap();
    let f = function("asym2.qf");
    let lam = C::new(3.0, 0.1);
    assert_eq!(solve_full(&back, &f, lam).unwrap().value, solve_full(&g, &f, lam).unwrap().value);
}
