use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::rng::SimRng;

/// Outcome of the correlation check on disclosed positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub checked: usize,
    pub errors: usize,
    pub aborted: bool,
    /// Error rate on the checked positions, 0 when nothing was checked.
    pub qber: f64,
    /// Set when the check set came out empty; such sessions never abort.
    pub empty_check: bool,
}

impl CheckReport {
    pub fn new(checked: usize, errors: usize, threshold: f64) -> Self {
        if checked == 0 {
            return CheckReport {
                checked,
                errors,
                aborted: false,
                qber: 0.0,
                empty_check: true,
            };
        }
        let qber = errors as f64 / checked as f64;
        CheckReport {
            checked,
            errors,
            aborted: exceeds(errors, checked, threshold),
            qber,
            empty_check: false,
        }
    }

    /// Report for a session in which sifting never completed.
    pub fn empty() -> Self {
        CheckReport::new(0, 0, 0.0)
    }
}

fn exceeds(errors: usize, checked: usize, threshold: f64) -> bool {
    errors as f64 / checked as f64 > threshold
}

/// Picks `⌊check_fraction · kept⌋` of the kept positions uniformly at
/// random, returned in ascending order.
pub fn select_check_positions(kept: &[usize], check_fraction: f64, rng: &mut SimRng) -> Vec<usize> {
    let count = (check_fraction * kept.len() as f64).floor() as usize;
    let count = count.min(kept.len());
    let mut chosen: Vec<usize> = sample(rng, kept.len(), count).into_iter().map(|i| kept[i]).collect();
    chosen.sort_unstable();
    chosen
}

/// Probability that a check over `checked` positions aborts when each
/// checked position independently shows an error with `detection_rate`.
pub fn abort_probability(detection_rate: f64, checked: usize, threshold: f64) -> f64 {
    if checked == 0 {
        return 0.0;
    }
    let p = detection_rate.clamp(0.0, 1.0);
    // P(not aborted) = Σ over error counts that stay at or below the threshold
    let n = checked as f64;
    let (ln_p, ln_q) = (p.ln(), (1.0 - p).ln());
    let mut ln_binom = 0.0;
    let mut pass = 0.0;
    for k in 0..=checked {
        if k > 0 {
            ln_binom += ((n - (k as f64) + 1.0) / k as f64).ln();
        }
        if exceeds(k, checked, threshold) {
            break;
        }
        let term = match (k, checked - k) {
            (0, _) if p == 0.0 => 1.0,
            (_, 0) if p == 1.0 => 1.0,
            _ if p == 0.0 || p == 1.0 => 0.0,
            (k, rest) => (ln_binom + k as f64 * ln_p + rest as f64 * ln_q).exp(),
        };
        pass += term;
    }
    (1.0 - pass).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn selects_floor_fraction() {
        let kept: Vec<usize> = (0..1000).map(|i| i * 3).collect();
        let mut rng = stream(1, Stream::Bob);
        let chosen = select_check_positions(&kept, 0.137, &mut rng);
        assert_eq!(chosen.len(), 137);
        assert!(chosen.windows(2).all(|w| w[0] < w[1]));
        assert!(chosen.iter().all(|c| c % 3 == 0));
        assert!(select_check_positions(&kept[..5], 0.1, &mut rng).is_empty());
    }

    #[test]
    fn empty_check_never_aborts() {
        let r = CheckReport::new(0, 0, 0.0);
        assert!(!r.aborted && r.empty_check);
        assert_eq!(r.qber, 0.0);
    }

    #[test]
    fn threshold_is_strict() {
        assert!(!CheckReport::new(100, 5, 0.05).aborted);
        assert!(CheckReport::new(100, 6, 0.05).aborted);
        assert!(CheckReport::new(10, 1, 0.0).aborted);
    }

    /// Brute-force binomial sum with exact factorial arithmetic.
    fn oracle(p: f64, n: usize, threshold: f64) -> f64 {
        let mut total = 0.0;
        for k in 0..=n {
            if (k as f64 / n as f64) > threshold {
                let mut c = 1.0f64;
                for i in 0..k {
                    c = c * (n - i) as f64 / (i + 1) as f64;
                }
                total += c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
            }
        }
        total
    }

    #[test]
    fn abort_probability_matches_direct_sum() {
        for (p, n, t) in [(0.25, 50, 0.05), (0.25, 100, 0.05), (0.125, 60, 0.05), (0.5, 20, 0.1)] {
            let got = abort_probability(p, n, t);
            assert!((got - oracle(p, n, t)).abs() < 1e-12, "p={p} n={n}");
        }
        assert_eq!(abort_probability(0.0, 500, 0.05), 0.0);
        assert_eq!(abort_probability(1.0, 500, 0.05), 1.0);
    }

    #[test]
    fn fifty_checks_are_not_enough_for_six_nines() {
        // 2 or fewer errors out of 50 at rate 1/4 still happens ~9e-5 of the time.
        let p = abort_probability(0.25, 50, 0.05);
        assert!(p > 0.9999 && p < 0.999_999);
        assert!(abort_probability(0.25, 100, 0.05) > 0.999_999);
    }
}
