//! Estimation error and AUC against a known truth.

use crate::design::PartialCorrField;
use crate::{Error, Real, Result};

/// `Σ_k (Σ_{i≠j} (ρ̂_ij − ρ_ij)²)^{1/2}` over ordered pairs, so each unordered
/// pair contributes twice inside the root.
pub fn estimation_error<T: Real>(estimate: &PartialCorrField<T>, truth: &PartialCorrField<T>) -> Result<T> {
    if estimate.num_times() != truth.num_times() || estimate.p() != truth.p() {
        return Err(Error::DimensionMismatch(format!(
            "estimate is T = {}, p = {}; truth is T = {}, p = {}",
            estimate.num_times(),
            estimate.p(),
            truth.num_times(),
            truth.p()
        )));
    }
    let two = T::of(2.0);
    Ok((0..truth.num_times()).fold(T::zero(), |acc, k| acc + (two * (estimate.at_time(k) - truth.at_time(k)).norm_squared()).sqrt()))
}

/// Probability that a random positive cell outranks a random negative cell in
/// `|ρ̂|`, with ties counted one half. `support[k][c]` marks true edges.
pub fn auc<T: Real>(estimate: &PartialCorrField<T>, support: &[Vec<bool>]) -> Result<f64> {
    if support.len() != estimate.num_times() || support.iter().any(|row| row.len() != estimate.num_pairs()) {
        return Err(Error::DimensionMismatch("support mask does not match the estimate".into()));
    }
    let mut scored: Vec<(f64, bool)> = Vec::with_capacity(estimate.num_times() * estimate.num_pairs());
    for (k, row) in support.iter().enumerate() {
        for (c, &label) in row.iter().enumerate() {
            scored.push((estimate.get(k, c).abs().as_f64(), label));
        }
    }
    auc_from_scores(&scored)
}

/// Mann–Whitney AUC from `(score, is_positive)` pairs, `O(N log N)`.
pub fn auc_from_scores(scored: &[(f64, bool)]) -> Result<f64> {
    let positives = scored.iter().filter(|s| s.1).count();
    let negatives = scored.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::DegenerateMask);
    }
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[a].0.total_cmp(&scored[b].0));
    // midranks (1-based, doubled to stay integral)
    let mut rank_sum_x2: u128 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && scored[order[end + 1]].0 == scored[order[start]].0 {
            end += 1;
        }
        let mid_x2 = (start + 1 + end + 1) as u128;
        let pos_in_tie = order[start..=end].iter().filter(|&&i| scored[i].1).count() as u128;
        rank_sum_x2 += mid_x2 * pos_in_tie;
        start = end + 1;
    }
    let (np, nn) = (positives as u128, negatives as u128);
    // U = R − np(np+1)/2; doubled: 2U = 2R − np(np+1)
    let u_x2 = rank_sum_x2 - np * (np + 1);
    Ok(u_x2 as f64 / (2 * np * nn) as f64)
}

/// Support of a truth field: `|ρ| > 0`.
pub fn support_mask<T: Real>(truth: &PartialCorrField<T>) -> Vec<Vec<bool>> {
    (0..truth.num_times()).map(|k| (0..truth.num_pairs()).map(|c| truth.get(k, c) != T::zero()).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(scored: &[(f64, bool)]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for a in scored.iter().filter(|s| s.1) {
            for b in scored.iter().filter(|s| !s.1) {
                den += 1.0;
                num += if a.0 > b.0 {
                    1.0
                } else if a.0 == b.0 {
                    0.5
                } else {
                    0.0
                };
            }
        }
        num / den
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc_from_scores(&[(0.9, true), (0.8, true), (0.1, false)]).unwrap(), 1.0);
        assert_eq!(auc_from_scores(&[(0.5, true), (0.1, false), (0.7, false)]).unwrap(), 0.5);
        assert_eq!(auc_from_scores(&[(0.0, true), (0.0, false), (0.0, false)]).unwrap(), 0.5);
        assert_eq!(auc_from_scores(&[(0.3, true)]), Err(Error::DegenerateMask));
    }

    #[test]
    fn error_examples() {
        let truth = PartialCorrField::<f64>::zeros(3, 4);
        assert_eq!(estimation_error(&truth, &truth).unwrap(), 0.0);
        let mut est = truth.clone();
        est.set(1, 2, 0.3);
        assert!((estimation_error(&est, &truth).unwrap() - 0.3 * 2f64.sqrt()).abs() < 1e-15);
        assert!(estimation_error(&PartialCorrField::zeros(2, 4), &truth).is_err());
    }

    #[test]
    fn error_matches_double_loop() {
        let mut a = PartialCorrField::<f64>::zeros(3, 4);
        let mut b = PartialCorrField::<f64>::zeros(3, 4);
        for k in 0..3 {
            for c in 0..6 {
                a.set(k, c, ((k * 7 + c * 3) % 5) as f64 * 0.1 - 0.2);
                b.set(k, c, ((k * 5 + c) % 4) as f64 * 0.15 - 0.3);
            }
        }
        let mut expected = 0.0;
        for k in 0..3 {
            let mut s = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    if i != j {
                        s += (a.rho(k, i, j) - b.rho(k, i, j)).powi(2);
                    }
                }
            }
            expected += f64::sqrt(s);
        }
        assert!((estimation_error(&a, &b).unwrap() - expected).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn rank_auc_equals_brute_force(
            cells in prop::collection::vec((0u8..8, any::<bool>()), 2..200),
        ) {
            let scored: Vec<(f64, bool)> = cells.iter().map(|&(s, l)| (s as f64 * 0.1, l)).collect();
            let fast = auc_from_scores(&scored);
            if scored.iter().all(|s| s.1) || scored.iter().all(|s| !s.1) {
                prop_assert!(fast.is_err());
            } else {
                prop_assert_eq!(fast.unwrap(), brute_force(&scored));
            }
        }

        #[test]
        fn auc_is_rank_invariant(
            cells in prop::collection::vec((0.0f64..1.0, any::<bool>()), 2..100),
        ) {
            prop_assume!(cells.iter().any(|c| c.1) && cells.iter().any(|c| !c.1));
            let a = auc_from_scores(&cells).unwrap();
            let mapped: Vec<(f64, bool)> = cells.iter().map(|&(s, l)| (s.powi(3) + 2.0, l)).collect();
            prop_assert_eq!(a, auc_from_scores(&mapped).unwrap());
            // reversed ranking complements a tie-free AUC
            let distinct = {
                let mut v: Vec<f64> = cells.iter().map(|c| c.0).collect();
                v.sort_by(f64::total_cmp);
                v.windows(2).all(|w| w[0] != w[1])
            };
            if distinct {
                let reversed: Vec<(f64, bool)> = cells.iter().map(|&(s, l)| (-s, l)).collect();
                prop_assert!((a + auc_from_scores(&reversed).unwrap() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn error_satisfies_triangle_inequality(
            vals in prop::collection::vec(-1.0f64..1.0, 18),
        ) {
            let mk = |off: usize| {
                let mut f = PartialCorrField::<f64>::zeros(2, 3);
                for k in 0..2 {
                    for c in 0..3 {
                        f.set(k, c, vals[off + k * 3 + c]);
                    }
                }
                f
            };
            let (a, b, c) = (mk(0), mk(6), mk(12));
            let ab = estimation_error(&a, &b).unwrap();
            let bc = estimation_error(&b, &c).unwrap();
            let ac = estimation_error(&a, &c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-12);
        }
    }
}
