use bura::rational::{
    bura_compute, check_positivity_conditions, partial_fractions, sampled_max_error, stahl_bound, verify_equioscillation,
    zeros_poles_interlace, BuraParams, CoefficientFile, PartialFractionForm, RemezOptions,
};
use proptest::prelude::*;

fn diagonal(alpha: f64, k: usize) -> (bura::rational::RationalApprox, PartialFractionForm) {
    let r = bura_compute(&BuraParams::diagonal(alpha, k).unwrap(), &RemezOptions::default()).unwrap();
    let pf = partial_fractions(&r).unwrap();
    (r, pf)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    // Every diagonal 1-BURA is certified, equioscillates and sits below the
    // asymptotic bound.
    #[test]
    fn diagonal_approximants_are_certified(alpha in 0.1f64..0.9, k in 2usize..7) {
        let (r, pf) = diagonal(alpha, k);
        let ext = verify_equioscillation(&r).unwrap();
        prop_assert_eq!(ext.points.len(), 2 * k + 2);
        prop_assert!(ext.alternation_ok);
        prop_assert!(check_positivity_conditions(&pf, &pf.params).certified);
        prop_assert!(zeros_poles_interlace(&pf));
        prop_assert!(r.minimax_error <= stahl_bound(alpha, k));
        prop_assert!((pf.inverse_part[0] - r.minimax_error).abs() <= 1e-10 * r.minimax_error);
    }
}

#[test]
fn decomposition_matches_quotient_form() {
    for (alpha, k) in [(0.2, 4), (0.6, 7), (0.9, 5)] {
        let (r, pf) = diagonal(alpha, k);
        for i in 1..200 {
            let t = (i as f64 / 200.0).powi(3);
            let lhs = pf.evaluate(t) * t;
            let rhs = r.evaluate(t).unwrap();
            assert!((lhs - rhs).abs() <= 1e-11 * rhs.abs().max(1e-3), "t = {t}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn dense_sampling_never_beats_the_level() {
    let (r, _) = diagonal(0.5, 6);
    let s = sampled_max_error(&r, 200_000).unwrap();
    assert!(s <= r.minimax_error * (1.0 + 1e-10));
    assert!(s >= r.minimax_error * (1.0 - 1e-3));
}

#[test]
fn errors_decrease_with_degree() {
    let e: Vec<f64> = (2..8).map(|k| diagonal(0.4, k).0.minimax_error).collect();
    assert!(e.windows(2).all(|w| w[1] < w[0]), "{e:?}");
}

fn assert_zero_sum(pf: &PartialFractionForm) {
    let sum: f64 = pf.residues.iter().sum::<f64>() + pf.inverse_part[0];
    let scale: f64 = pf.residues.iter().map(|c| c.abs()).sum();
    assert!(sum.abs() <= 1e-10 * scale, "{sum} vs {scale}");
}

#[test]
fn zero_sum_identity_below_diagonal() {
    // m < k + beta - 1 forces c0_1 + sum c_j = 0
    let r = bura_compute(&BuraParams::new(0.5, 2, 5, 5).unwrap(), &RemezOptions::default()).unwrap();
    let pf = partial_fractions(&r).unwrap();
    assert_zero_sum(&pf);
    let cert = check_positivity_conditions(&pf, &pf.params);
    assert!(!cert.certified);
    // one pole leaves the negative axis for this triple
    assert!(!cert.d_negative);

    let r = bura_compute(&BuraParams::new(0.5, 1, 4, 5).unwrap(), &RemezOptions::default()).unwrap();
    assert_zero_sum(&partial_fractions(&r).unwrap());
}

#[test]
fn off_diagonal_beta_two_is_not_certified() {
    let r = bura_compute(&BuraParams::new(0.5, 2, 6, 5).unwrap(), &RemezOptions::default()).unwrap();
    let pf = partial_fractions(&r).unwrap();
    // c0_2 = -E for (k + 1, k, 2)
    assert!((pf.inverse_part[1] + r.minimax_error).abs() <= 1e-8 * r.minimax_error);
    assert!(!check_positivity_conditions(&pf, &pf.params).certified);
}

#[test]
fn coefficient_file_round_trip() {
    let (_, pf) = diagonal(0.75, 7);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.json");
    pf.to_coefficient_file().write(&p).unwrap();
    let back = CoefficientFile::read(&p).unwrap().into_form().unwrap();
    assert_eq!(back.poles, pf.poles);
    assert_eq!(back.residues, pf.residues);
    assert_eq!(back.inverse_part, pf.inverse_part);
    assert_eq!(back.minimax_error.to_bits(), pf.minimax_error.to_bits());
    let bad = r#"{"alpha":0.5,"beta":1,"m":1,"k":1,"E":0.1,"poles":[-1],"residues":[],"c0":[1],"poly":[],"precision_bits":53}"#;
    assert!(CoefficientFile::from_json(bad).unwrap().into_form().is_err());
}

#[test]
fn explicit_precision_is_used() {
    let r = bura_compute(&BuraParams::diagonal(0.5, 3).unwrap(), &RemezOptions::with_precision(384)).unwrap();
    assert!(r.precision_bits >= 384);
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(BuraParams::new(0.0, 1, 3, 3).is_err());
    assert!(BuraParams::new(1.0, 1, 3, 3).is_err());
    assert!(BuraParams::new(0.5, 0, 3, 3).is_err());
    assert!(BuraParams::new(f64::NAN, 1, 3, 3).is_err());
}
