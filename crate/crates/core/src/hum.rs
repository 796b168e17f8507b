//! Empirical hyper-volume under the ROC manifold (EHUM).
//!
//! For `M` ordered categories the EHUM is the fraction of M-tuples (one
//! subject per category) whose scores are strictly increasing with
//! category. Ties never count. With `M = 2` this is the Mann-Whitney AUC
//! and with `M = 3` the volume under the ROC surface.
//!
//! Counts are exact 128-bit integers; the ratio is formed once at the end.

use serde::{Deserialize, Serialize};

use crate::error::{HumError, Result};

/// Upper bound on tuples the brute-force path will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 10_000_000;

/// An EHUM value together with the exact counts it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HumValue {
    pub value: f64,
    /// Number of strictly ordered tuples.
    pub ordered: u128,
    /// Product of the category sizes.
    pub n_tuples: u128,
}

impl HumValue {
    fn from_counts(ordered: u128, n_tuples: u128) -> Self {
        Self {
            value: ordered as f64 / n_tuples as f64,
            ordered,
            n_tuples,
        }
    }
}

/// Selects the counting algorithm; the brute-force path exists as a
/// verification mode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum EhumAlgorithm {
    #[default]
    Sorted,
    BruteForce,
}

impl EhumAlgorithm {
    pub fn evaluate<S: AsRef<[f64]>>(self, scores: &[S]) -> Result<HumValue> {
        match self {
            EhumAlgorithm::Sorted => ehum_fast(scores),
            EhumAlgorithm::BruteForce => ehum_bruteforce(scores),
        }
    }
}

fn tuple_count<S: AsRef<[f64]>>(scores: &[S]) -> Result<u128> {
    if scores.len() < 2 {
        return Err(HumError::FewerThanTwoCategories(scores.len()));
    }
    let mut total: u128 = 1;
    for (j, s) in scores.iter().enumerate() {
        let s = s.as_ref();
        if s.is_empty() {
            return Err(HumError::EmptyCategory(j));
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(HumError::NonFiniteInput(format!("scores of category {j}")));
        }
        total = total
            .checked_mul(s.len() as u128)
            .ok_or(HumError::CountOverflow)?;
    }
    Ok(total)
}

/// Enumerates every tuple. Only for small instances.
pub fn ehum_bruteforce<S: AsRef<[f64]>>(scores: &[S]) -> Result<HumValue> {
    let total = tuple_count(scores)?;
    if total > BRUTE_FORCE_LIMIT {
        return Err(HumError::InstanceTooLarge(total));
    }
    let cats: Vec<&[f64]> = scores.iter().map(AsRef::as_ref).collect();

    fn walk(cats: &[&[f64]], level: usize, prev: f64) -> u128 {
        if level == cats.len() {
            return 1;
        }
        cats[level]
            .iter()
            .filter(|&&v| level == 0 || v > prev)
            .map(|&v| walk(cats, level + 1, v))
            .sum()
    }

    Ok(HumValue::from_counts(walk(&cats, 0, f64::NEG_INFINITY), total))
}

/// Sorted chain-counting evaluation in `O(sum n_j log n_j)`.
///
/// After sorting each category, `c_j(x)` counts strictly increasing chains
/// ending at `x` in category `j`. A two-pointer sweep over the previous
/// category accumulates the prefix sum of `c_{j-1}` over scores `< x`.
pub fn ehum_fast<S: AsRef<[f64]>>(scores: &[S]) -> Result<HumValue> {
    let total = tuple_count(scores)?;
    let mut prev_sorted = sorted(scores[0].as_ref());
    let mut prev_counts: Vec<u128> = vec![1; prev_sorted.len()];

    for s in &scores[1..] {
        let cur_sorted = sorted(s.as_ref());
        let mut cur_counts = Vec::with_capacity(cur_sorted.len());
        let mut ptr = 0;
        let mut running: u128 = 0;
        for &x in &cur_sorted {
            while ptr < prev_sorted.len() && prev_sorted[ptr] < x {
                running += prev_counts[ptr];
                ptr += 1;
            }
            cur_counts.push(running);
        }
        prev_sorted = cur_sorted;
        prev_counts = cur_counts;
    }
    let ordered = prev_counts
        .iter()
        .try_fold(0u128, |acc, &c| acc.checked_add(c))
        .ok_or(HumError::CountOverflow)?;
    Ok(HumValue::from_counts(ordered, total))
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    out.sort_by(f64::total_cmp);
    out
}

/// Fraction of pairs with `high > low` strictly.
pub fn pairwise_auc(scores_low: &[f64], scores_high: &[f64]) -> Result<f64> {
    if scores_low.is_empty() || scores_high.is_empty() {
        return Err(HumError::EmptyInput);
    }
    Ok(ehum_fast(&[scores_low, scores_high])?.value)
}

/// AUCs of each adjacent category pair `(j, j+1)`.
pub fn adjacent_aucs<S: AsRef<[f64]>>(scores: &[S]) -> Result<Vec<f64>> {
    scores
        .windows(2)
        .map(|w| pairwise_auc(w[0].as_ref(), w[1].as_ref()))
        .collect()
}

/// Mean of the adjacent AUCs (`P_A`).
pub fn frechet_mean_auc<S: AsRef<[f64]>>(scores: &[S]) -> Result<f64> {
    let aucs = adjacent_aucs(scores)?;
    Ok(aucs.iter().sum::<f64>() / aucs.len() as f64)
}

/// Minimum adjacent AUC (`P_M`), the Fréchet upper bound on HUM.
pub fn frechet_upper<S: AsRef<[f64]>>(scores: &[S]) -> Result<f64> {
    Ok(adjacent_aucs(scores)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

/// Fréchet lower bound `max(0, (M-1) P_A - (M-2))`.
pub fn frechet_lower<S: AsRef<[f64]>>(scores: &[S]) -> Result<f64> {
    let m = scores.len() as f64;
    let pa = frechet_mean_auc(scores)?;
    Ok(((m - 1.0) * pa - (m - 2.0)).max(0.0))
}

/// HUM of a random ordering, `1 / M!`.
pub fn random_guess_baseline(m: usize) -> Result<f64> {
    if m < 2 {
        return Err(HumError::FewerThanTwoCategories(m));
    }
    Ok(1.0 / (2..=m).map(|k| k as f64).product::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trivial_instances() {
        assert_eq!(ehum_bruteforce(&[vec![0.0], vec![1.0]]).unwrap().value, 1.0);
        assert_eq!(ehum_bruteforce(&[vec![0.0], vec![0.0], vec![0.0]]).unwrap().value, 0.0);
        assert_eq!(ehum_bruteforce(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap().value, 1.0);
        assert_eq!(
            ehum_fast(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap().value,
            1.0
        );
        // pairs (1,2) (1,3) (2,3) ordered, (2,2) tied
        let h = ehum_fast(&[vec![1.0, 2.0], vec![2.0, 3.0]]).unwrap();
        assert_eq!((h.ordered, h.n_tuples), (3, 4));
        assert_eq!(h.value, 0.75);
    }

    #[test]
    fn auc_cases() {
        assert_eq!(pairwise_auc(&[0.0], &[1.0]).unwrap(), 1.0);
        assert_eq!(pairwise_auc(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.25);
        assert!(matches!(pairwise_auc(&[], &[1.0]), Err(HumError::EmptyInput)));
    }

    #[test]
    fn baseline() {
        assert_eq!(random_guess_baseline(2).unwrap(), 0.5);
        assert!((random_guess_baseline(3).unwrap() - 0.1667).abs() < 5e-5);
        assert_eq!(random_guess_baseline(4).unwrap(), 1.0 / 24.0);
        assert!(random_guess_baseline(1).is_err());
    }

    #[test]
    fn brute_force_guard() {
        let big = vec![vec![0.0; 1000]; 3];
        assert!(matches!(ehum_bruteforce(&big), Err(HumError::InstanceTooLarge(_))));
        assert_eq!(ehum_fast(&big).unwrap().value, 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ehum_fast(&[vec![1.0]]).is_err());
        assert!(ehum_fast(&[vec![1.0], vec![]]).is_err());
        assert!(ehum_fast(&[vec![1.0], vec![f64::NAN]]).is_err());
    }

    #[test]
    fn fast_matches_bruteforce_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let m = rng.random_range(2..=4);
            let scores: Vec<Vec<f64>> = (0..m)
                .map(|_| {
                    let n = rng.random_range(1..=8);
                    (0..n).map(|_| rng.random_range(0..6) as f64).collect()
                })
                .collect();
            let a = ehum_fast(&scores).unwrap();
            let b = ehum_bruteforce(&scores).unwrap();
            assert_eq!((a.ordered, a.n_tuples), (b.ordered, b.n_tuples));
        }
    }

    #[test]
    fn common_pool_averages_to_baseline() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = 3;
        let reps = 400;
        let mut acc = 0.0;
        for _ in 0..reps {
            let scores: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..20).map(|_| rng.random::<f64>()).collect())
                .collect();
            acc += ehum_fast(&scores).unwrap().value;
        }
        let mean = acc / reps as f64;
        assert!((mean - 1.0 / 6.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn frechet_bounds_sandwich() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let m = rng.random_range(2..=5);
            let scores: Vec<Vec<f64>> = (0..m)
                .map(|j| {
                    (0..rng.random_range(1..10))
                        .map(|_| rng.random::<f64>() + 0.3 * j as f64)
                        .collect()
                })
                .collect();
            let hum = ehum_fast(&scores).unwrap().value;
            assert!(frechet_lower(&scores).unwrap() <= hum + 1e-15);
            assert!(hum <= frechet_upper(&scores).unwrap() + 1e-15);
        }
    }

    proptest! {
        #[test]
        fn monotone_transform_invariance(
            scores in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 1..8), 2..5)
        ) {
            let base = ehum_fast(&scores).unwrap();
            let mapped: Vec<Vec<f64>> = scores
                .iter()
                .map(|c| c.iter().map(|v| (v / 3.0).exp() * 2.0 + 1.0).collect())
                .collect();
            prop_assert_eq!(base.ordered, ehum_fast(&mapped).unwrap().ordered);
        }

        #[test]
        fn auc_reversal(a in proptest::collection::vec(-5.0f64..5.0, 1..10),
                        b in proptest::collection::vec(-4.0f64..6.0, 1..10)) {
            let mut all: Vec<f64> = a.iter().chain(&b).copied().collect();
            all.sort_by(f64::total_cmp);
            prop_assume!(all.windows(2).all(|w| w[0] != w[1]));
            let s = pairwise_auc(&a, &b).unwrap() + pairwise_auc(&b, &a).unwrap();
            prop_assert_eq!(s, 1.0);
        }
    }
}
