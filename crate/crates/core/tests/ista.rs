use proptest::prelude::*;
use steplearn::ista::{iterate, Diagonal, StopRule};
use steplearn::shrink::{denoise_diagonal, Regularizer};
use steplearn::{CoefficientVector, MultiPenalty};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn diagonal_fixed_point_matches_closed_form(
        k in prop::collection::vec(0.3f64..0.95, 12),
        g in prop::collection::vec(-1.0f64..1.0, 12),
        lambda in 0.01f64..0.5,
        p in 1.0f64..=2.0,
    ) {
        let op = Diagonal::new(k.clone());
        let pen = MultiPenalty::uniform(lambda, p, 12).unwrap();
        let s = iterate(&[0.0; 12], &g, &op, &pen, &StopRule::default()).unwrap();
        prop_assert!(s.converged);
        for w in s.history.windows(2) {
            prop_assert!(w[1].objective <= w[0].objective + 1e-10 * w[0].objective.abs().max(1.0));
        }
        for r in &s.history {
            prop_assert!(r.surrogate >= r.objective - 1e-12);
        }
        prop_assert!(s.f.iter().map(|x| x * x).sum::<f64>() <= s.bound);
        let exact = denoise_diagonal(&CoefficientVector::from_values(g.clone()), &k, Regularizer::Penalty(&pen)).unwrap();
        for (j, (a, b)) in s.f.iter().zip(exact.values()).enumerate() {
            prop_assert!((a - b).abs() <= 1e-8, "coord {j}: {a} vs {b}");
        }
    }
}
