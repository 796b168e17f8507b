use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::*;
use crate::hum::{ehum_fast, frechet_lower, frechet_upper};

fn gaussian_data(sizes: [usize; 3], shift: [f64; 3], seed: u64) -> MarkerDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cats = (0..3)
        .map(|j| {
            (0..sizes[j] * 3)
                .map(|i| j as f64 * shift[i % 3] + rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    MarkerDataset::new(cats, vec!["a".into(), "b".into(), "c".into()], vec![0, 1, 2]).unwrap()
}

#[test]
fn naive_weights() {
    for (d, w) in [(14usize, 0.267), (4, 0.5)] {
        let cats = (0..3).map(|j| vec![j as f64; d * 2]).collect();
        let names = (0..d).map(|k| format!("m{k}")).collect();
        let data = MarkerDataset::new(cats, names, vec![0, 1, 2]).unwrap();
        let rep = fit_naive(&data).unwrap();
        assert!(rep.coefficients.anchor().is_none());
        for b in rep.coefficients.beta() {
            assert!((b - w).abs() < 5e-4, "{b}");
        }
    }
}

#[test]
fn separated_instance_reaches_near_one() {
    // Marker 0 alone separates the categories; marker 1 is noise.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cats = (0..3)
        .map(|j| {
            (0..30)
                .flat_map(|_| [10.0 * j as f64 + rng.random::<f64>(), rng.random::<f64>() * 3.0])
                .collect()
        })
        .collect();
    let data = MarkerDataset::new(cats, vec!["s".into(), "n".into()], vec![0, 1, 2]).unwrap();
    for m in [Method::Sshum, Method::Nshum, Method::Empirical, Method::Parametric] {
        let rep = fit(&data, m, &FitOptions::default()).unwrap();
        assert!(rep.ehum_at_solution >= 0.99, "{m}: {}", rep.ehum_at_solution);
    }
}

#[test]
fn reported_ehum_matches_reevaluation() {
    let data = gaussian_data([25, 30, 20], [1.0, 0.6, 0.3], 8);
    for m in Method::ALL {
        let rep = fit(&data, m, &FitOptions::default()).unwrap();
        let scores = report_scores(&data, &rep).unwrap();
        let e = ehum_fast(&scores).unwrap().value;
        assert_eq!(e, rep.ehum_at_solution, "{m}");
        assert!(rep.coefficients.beta().iter().all(|b| b.is_finite()));
        assert_eq!(rep.coefficient_names.len(), rep.coefficients.len());
    }
}

#[test]
fn smooth_fit_improves_on_naive() {
    let data = gaussian_data([40, 40, 40], [1.0, 0.2, 0.0], 3);
    let naive = fit_naive(&data).unwrap().ehum_at_solution;
    let s = fit_sshum(&data, &FitOptions::default()).unwrap();
    assert!(s.ehum_at_solution >= naive - 0.02);
    assert!(s.lambda.unwrap() > 0.0);
    let frac = s.lambda_rule_fraction.unwrap();
    assert!((0.0..=1.0).contains(&frac));
}

#[test]
fn explicit_lambda_is_used() {
    let data = gaussian_data([10, 10, 10], [1.0, 0.5, 0.5], 2);
    let opts = FitOptions {
        lambda: Some(0.25),
        ..FitOptions::default()
    };
    assert_eq!(fit_nshum(&data, &opts).unwrap().lambda, Some(0.25));
    let bad = FitOptions {
        lambda: Some(-1.0),
        ..FitOptions::default()
    };
    assert!(fit_sshum(&data, &bad).is_err());
}

#[test]
fn two_category_fit_is_auc() {
    let full = gaussian_data([30, 30, 30], [1.0, 0.5, 0.2], 6);
    let data = full.select_categories(&[0, 2]).unwrap();
    let rep = fit(&data, Method::Empirical, &FitOptions::default()).unwrap();
    let s = report_scores(&data, &rep).unwrap();
    let auc = crate::hum::pairwise_auc(&s[0], &s[1]).unwrap();
    assert_eq!(auc, rep.ehum_at_solution);
}

#[test]
fn frechet_fits_respect_bounds() {
    let data = gaussian_data([20, 25, 30], [1.0, 0.7, 0.1], 10);
    for bound in [FrechetBound::Upper, FrechetBound::Lower] {
        let rep = fit_frechet(&data, &FitOptions::default(), bound).unwrap();
        let s = report_scores(&data, &rep).unwrap();
        let e = rep.ehum_at_solution;
        assert!(frechet_lower(&s).unwrap() <= e + 1e-12 && e <= frechet_upper(&s).unwrap() + 1e-12);
    }
}

#[test]
fn method_names_round_trip() {
    for m in Method::ALL {
        assert_eq!(m.name().parse::<Method>().unwrap(), m);
    }
    assert!("bogus".parse::<Method>().is_err());
}

#[test]
fn minmax_needs_two_markers() {
    let data = MarkerDataset::from_rows(&[vec![vec![0.0]], vec![vec![1.0]]]).unwrap();
    assert!(fit_minmax(&data, &FitOptions::default()).is_err());
}

#[test]
fn bootstrap_is_deterministic() {
    let data = gaussian_data([15, 15, 15], [1.0, 0.5, 0.3], 12);
    let opts = FitOptions::default();
    let a = bootstrap_se(&data, Method::Parametric, 20, 99, &opts).unwrap();
    let b = bootstrap_se(&data, Method::Parametric, 20, 99, &opts).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.seeds[3], 102);
    assert!(a.ehum_se > 0.0);
}

#[test]
fn bootstrap_single_row_categories_have_zero_se() {
    let data = MarkerDataset::from_rows(&[
        vec![vec![0.0, 0.1]],
        vec![vec![1.0, 0.9]],
        vec![vec![2.0, 2.2]],
    ])
    .unwrap();
    let s = bootstrap_se(&data, Method::Naive, 10, 1, &FitOptions::default()).unwrap();
    assert!(s.coefficient_se.iter().all(|&v| v == 0.0));
    assert_eq!(s.ehum_se, 0.0);
}

#[test]
fn stratified_resample_keeps_sizes() {
    let data = gaussian_data([4, 7, 9], [1.0, 1.0, 1.0], 1);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let r = stratified_resample(&data, &mut rng).unwrap();
    assert_eq!(r.sizes(), data.sizes());
}

#[test]
fn serde_names_match_display() {
    for m in Method::ALL {
        assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
    }
}
