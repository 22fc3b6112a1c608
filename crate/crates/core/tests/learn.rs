use proptest::prelude::*;
use steplearn::learn::{learn_direct, learn_discrete, DirectConfig, DiscreteConfig};
use steplearn::stepreg::{is_quasiconvex, objective_i};
use steplearn::{GridSpec, StepRegularizer, TrainingSet};

fn corpus() -> impl Strategy<Value = Vec<(Vec<f64>, Vec<f64>)>> {
    prop::collection::vec(
        prop::collection::vec((0.01f64..1.99, 0.01f64..1.99), 2).prop_map(|v| v.into_iter().unzip()),
        1..4,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn discrete_is_consistent_and_beats_zero(pairs in corpus(), n in 1u32..3) {
        let grid = GridSpec::with_default_eps(0, 2, n).unwrap();
        let ts = TrainingSet::from_arrays(pairs).unwrap();
        let out = learn_discrete(&ts, &grid, &DiscreteConfig::default()).unwrap();
        for j in 0..out.reg.dim() {
            prop_assert!(is_quasiconvex(out.reg.coeffs(j)));
        }
        let recomputed = objective_i(&out.reg, &ts).unwrap();
        prop_assert!((recomputed - out.objective()).abs() <= 1e-9 * recomputed.max(1.0));
        let zero = objective_i(&StepRegularizer::zeros(grid, ts.dim()), &ts).unwrap();
        prop_assert!(out.objective() <= zero + 1e-9);
    }

    #[test]
    fn direct_is_feasible(pairs in corpus()) {
        let grid = GridSpec::with_default_eps(0, 2, 2).unwrap();
        let ts = TrainingSet::from_arrays(pairs).unwrap();
        let out = learn_direct(&ts, &grid, &DirectConfig::default()).unwrap();
        for j in 0..out.reg.dim() {
            prop_assert!(is_quasiconvex(out.reg.coeffs(j)));
        }
        let zero = objective_i(&StepRegularizer::zeros(grid, ts.dim()), &ts).unwrap();
        prop_assert!(out.objective() <= zero + 1e-9);
    }
}

#[test]
fn clean_data_gives_zero_objective() {
    let grid = GridSpec::with_default_eps(0, 2, 3).unwrap();
    let ts = TrainingSet::from_arrays(vec![(vec![0.3, 1.4], vec![0.3, 1.4]), (vec![1.9, 0.2], vec![1.9, 0.2])]).unwrap();
    let out = learn_discrete(&ts, &grid, &DiscreteConfig::default()).unwrap();
    assert!(out.objective() <= 1e-12);
}

#[test]
fn off_grid_data_is_rejected() {
    let grid = GridSpec::with_default_eps(0, 2, 3).unwrap();
    let ts = TrainingSet::from_arrays(vec![(vec![0.3], vec![2.5])]).unwrap();
    assert!(learn_discrete(&ts, &grid, &DiscreteConfig::default()).is_err());
}
