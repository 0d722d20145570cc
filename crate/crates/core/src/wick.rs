//! Exact second and fourth moments of Gaussian chaoses.
//!
//! With `F = Σ_S c_S G_S` (sorted keys `S`, `c_S = d!·a_S`), Isserlis' formula
//! makes `E[G_{S1}···G_{S4}]` the number of perfect pairings of the `4d`
//! factor slots that only pair equal indices. For independent standard
//! Gaussians that count factorizes into `Π_i (m_i − 1)!!` over the index
//! multiplicities `m_i`, which here are at most 4.
//!
//! The sum over four keys is organized through the multiset `M = S1 ⊎ S2`:
//! pairs of keys are accumulated into weights `w_M`, and two multisets
//! contribute only when their odd-multiplicity index sets agree. The
//! pairing count of `M ⊎ M'` is then `3^{|D ∩ D'|}` with `D`, `D'` the
//! doubled indices.

use std::collections::BTreeMap;

use crate::chaos::{ChaosError, MomentMethod, MomentReport};
use crate::tensor::{factorial, CoefficientTensor};

/// Default cap on the number of stored coefficients.
pub const DEFAULT_WICK_BUDGET: usize = 2500;

pub fn fourth_moment_wick(t: &CoefficientTensor) -> Result<MomentReport, ChaosError> {
    fourth_moment_wick_with_budget(t, DEFAULT_WICK_BUDGET)
}

pub fn fourth_moment_wick_with_budget(
    t: &CoefficientTensor,
    max_entries: usize,
) -> Result<MomentReport, ChaosError> {
    if t.len() > max_entries {
        return Err(ChaosError::TooLarge {
            entries: t.len(),
            budget: max_entries,
        });
    }
    let keys: Vec<(&[usize], f64)> = t.entries().collect();

    // odd index set -> (doubled index set -> accumulated weight)
    let mut groups: BTreeMap<Vec<usize>, BTreeMap<Vec<usize>, f64>> = BTreeMap::new();
    let mut odd = Vec::with_capacity(2 * t.degree());
    let mut doubled = Vec::with_capacity(t.degree());
    for &(s1, v1) in &keys {
        for &(s2, v2) in &keys {
            split_union(s1, s2, &mut odd, &mut doubled);
            *groups
                .entry(odd.clone())
                .or_default()
                .entry(doubled.clone())
                .or_insert(0.0) += v1 * v2;
        }
    }

    let second_raw: f64 = groups
        .get(&Vec::new())
        .map_or(0.0, |g| g.values().sum());

    let mut fourth_raw = 0.0;
    for group in groups.values() {
        let members: Vec<(&Vec<usize>, f64)> = group.iter().map(|(d, &w)| (d, w)).collect();
        for &(d1, w1) in &members {
            for &(d2, w2) in &members {
                fourth_raw += w1 * w2 * 3f64.powi(intersection_len(d1, d2) as i32);
            }
        }
    }

    let f = factorial(t.degree());
    let second = f * f * second_raw;
    let fourth = f.powi(4) * fourth_raw;
    Ok(MomentReport {
        second,
        fourth,
        excess: fourth - 3.0 * second * second,
        method: MomentMethod::WickExact,
        stderr: None,
    })
}

/// Splits `a ⊎ b` (both strictly increasing) into indices of multiplicity
/// one and two.
fn split_union(a: &[usize], b: &[usize], odd: &mut Vec<usize>, doubled: &mut Vec<usize>) {
    odd.clear();
    doubled.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                odd.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                odd.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                doubled.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    odd.extend_from_slice(&a[i..]);
    odd.extend_from_slice(&b[j..]);
}

fn intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{family_generate, Family};
    use approx::assert_abs_diff_eq;

    /// Number of perfect matchings of `labels` pairing only equal labels:
    /// Isserlis' formula for independent standard Gaussians, enumerated
    /// literally.
    fn pairings(labels: &mut Vec<usize>) -> u64 {
        if labels.is_empty() {
            return 1;
        }
        let first = labels.remove(0);
        let mut total = 0;
        for k in 0..labels.len() {
            if labels[k] == first {
                let other = labels.remove(k);
                total += pairings(labels);
                labels.insert(k, other);
            }
        }
        labels.insert(0, first);
        total
    }

    fn isserlis_fourth(t: &CoefficientTensor) -> (f64, f64) {
        let f = factorial(t.degree());
        let keys: Vec<(Vec<usize>, f64)> = t.entries().map(|(k, v)| (k.to_vec(), f * v)).collect();
        let mut second = 0.0;
        for (a, va) in &keys {
            for (b, vb) in &keys {
                let mut l: Vec<usize> = a.iter().chain(b).copied().collect();
                second += va * vb * pairings(&mut l) as f64;
            }
        }
        let mut fourth = 0.0;
        for (a, va) in &keys {
            for (b, vb) in &keys {
                for (c, vc) in &keys {
                    for (d, vd) in &keys {
                        let mut l: Vec<usize> = a.iter().chain(b).chain(c).chain(d).copied().collect();
                        let n = pairings(&mut l);
                        if n > 0 {
                            fourth += va * vb * vc * vd * n as f64;
                        }
                    }
                }
            }
        }
        (second, fourth)
    }

    #[test]
    fn dominant_pair_moments() {
        let r = fourth_moment_wick(&family_generate(Family::DominantPair, 2, 6).unwrap()).unwrap();
        assert_abs_diff_eq!(r.second, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.fourth, 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.excess, 6.0, epsilon = 1e-12);
    }

    #[test]
    fn mean_field_is_gaussian() {
        for n in 1..=20 {
            let r = fourth_moment_wick(&family_generate(Family::MeanField, 1, n).unwrap()).unwrap();
            assert_abs_diff_eq!(r.second, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(r.fourth, 3.0, epsilon = 1e-12);
            assert_abs_diff_eq!(r.excess, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn offdiag_at_two_equals_dominant_pair() {
        let r = fourth_moment_wick(&family_generate(Family::OffdiagConstant, 2, 2).unwrap()).unwrap();
        assert_abs_diff_eq!(r.excess, 6.0, epsilon = 1e-12);
    }

    #[test]
    fn offdiag_quadratic_matches_cumulant_formula() {
        // For F = GᵀAG with A = c(J − I), κ4 = 48 tr(A⁴), which gives
        // excess = 12((N−1)³ + 1) / (N²(N−1)).
        for n in [3usize, 4, 7, 16, 64] {
            let r = fourth_moment_wick(&family_generate(Family::OffdiagConstant, 2, n).unwrap()).unwrap();
            let m = n as f64;
            let expected = 12.0 * ((m - 1.0).powi(3) + 1.0) / (m * m * (m - 1.0));
            assert_abs_diff_eq!(r.excess, expected, epsilon = 1e-8);
        }
    }

    #[test]
    fn agrees_with_literal_pairing_enumeration() {
        for (d, n, seed) in [(2, 4, 1u64), (2, 5, 2), (3, 4, 3), (3, 5, 4), (1, 5, 5)] {
            let t = family_generate(Family::RandomSparse { seed, density: 0.7 }, d, n).unwrap();
            let r = fourth_moment_wick(&t).unwrap();
            let (s, f) = isserlis_fourth(&t);
            assert_abs_diff_eq!(r.second, s, epsilon = 1e-10);
            assert_abs_diff_eq!(r.fourth, f, epsilon = 1e-9);
            assert_abs_diff_eq!(r.second, t.norm_square(), epsilon = 1e-10);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let t = family_generate(Family::OffdiagConstant, 3, 12).unwrap();
        assert!(fourth_moment_wick(&t).is_ok());
        let err = fourth_moment_wick_with_budget(&t, 100).unwrap_err();
        assert!(matches!(err, ChaosError::TooLarge { entries: 220, budget: 100 }));
    }

    #[test]
    fn bitwise_reproducible() {
        let t = family_generate(Family::OffdiagConstant, 2, 40).unwrap();
        let first = fourth_moment_wick(&t).unwrap();
        for _ in 0..5 {
            assert_eq!(fourth_moment_wick(&t).unwrap().fourth.to_bits(), first.fourth.to_bits());
        }
    }
}
