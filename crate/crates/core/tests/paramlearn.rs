use proptest::prelude::*;
use steplearn::paramlearn::{gradient_i_lambda, learn_lambdas, objective_i_lambda, LambdaConfig};
use steplearn::shrink::WeightedTerm;
use steplearn::{MultiPenalty, TrainingSet};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_matches_central_differences(
        pairs in prop::collection::vec((prop::collection::vec(0.2f64..2.0, 3), prop::collection::vec(0.2f64..2.0, 3)), 1..4),
        lam in prop::collection::vec(0.05f64..1.0, 2),
        p in prop::collection::vec(1.2f64..2.0, 2),
    ) {
        let ts = TrainingSet::from_arrays(pairs).unwrap();
        let terms = p.iter().map(|&p| WeightedTerm { lambda: 1.0, weights: vec![1.0; 3], p }).collect();
        let pen = MultiPenalty::new(terms, None).unwrap();
        let (_, grad, _) = gradient_i_lambda(&lam, &ts, &pen).unwrap();
        for k in 0..2 {
            let h = 1e-6;
            let mut up = lam.clone();
            up[k] += h;
            let mut dn = lam.clone();
            dn[k] -= h;
            let fd = (objective_i_lambda(&up, &ts, &pen).unwrap() - objective_i_lambda(&dn, &ts, &pen).unwrap()) / (2.0 * h);
            prop_assert!((fd - grad[k]).abs() <= 1e-5 * fd.abs().max(1e-3), "fd {fd} grad {}", grad[k]);
        }
    }
}

#[test]
fn scalar_instance_recovers_unit_weight() {
    let ts = TrainingSet::from_arrays(vec![(vec![1.0], vec![2.0])]).unwrap();
    let pen = MultiPenalty::uniform(1.0, 2.0, 1).unwrap();
    let out = learn_lambdas(&ts, &pen, &LambdaConfig::default()).unwrap();
    assert!((out.lambdas[0] - 1.0).abs() < 1e-6, "{:?}", out.lambdas);
    assert!(out.objective < 1e-12);
}
