use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::bits::check_lengths;
use super::{BitString, PostprocError};
use crate::rng::SimRng;

/// Result of disclosing a random sample of both keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QberEstimate {
    pub qber: f64,
    pub sampled: usize,
    pub errors: usize,
    pub alice_rest: BitString,
    pub bob_rest: BitString,
}

/// Compares `⌊sample_fraction · n⌋` uniformly chosen positions and removes
/// them from both keys. The sampled bits count as leaked.
pub fn estimate_qber(
    alice: &BitString,
    bob: &BitString,
    sample_fraction: f64,
    rng: &mut SimRng,
) -> Result<QberEstimate, PostprocError> {
    check_lengths(alice, bob)?;
    if !(sample_fraction > 0.0 && sample_fraction < 1.0) {
        return Err(PostprocError::InvalidParameter {
            name: "sample_fraction",
            value: sample_fraction,
        });
    }
    let n = alice.len();
    let count = (sample_fraction * n as f64).floor() as usize;
    if count == 0 {
        return Err(PostprocError::EmptySample);
    }
    let mut in_sample = vec![false; n];
    for i in sample(rng, n, count) {
        in_sample[i] = true;
    }
    let mut errors = 0;
    let (mut alice_rest, mut bob_rest) = (BitString::default(), BitString::default());
    for (i, picked) in in_sample.into_iter().enumerate() {
        if picked {
            errors += usize::from(alice.get(i) != bob.get(i));
        } else {
            alice_rest.push(alice.get(i));
            bob_rest.push(bob.get(i));
        }
    }
    Ok(QberEstimate {
        qber: errors as f64 / count as f64,
        sampled: count,
        errors,
        alice_rest,
        bob_rest,
    })
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;
    use crate::rng::{stream, Stream};

    fn random_bits(n: usize, rng: &mut SimRng) -> BitString {
        (0..n).map(|_| rng.random_range(0..2u8)).collect()
    }

    #[test]
    fn trivial_cases() {
        let mut rng = stream(3, Stream::Public);
        let a = random_bits(200, &mut rng);
        let same = estimate_qber(&a, &a, 0.25, &mut rng).unwrap();
        assert_eq!(same.qber, 0.0);
        assert_eq!(same.sampled, 50);
        assert_eq!(same.alice_rest.len(), 150);
        let inverted: BitString = a.as_slice().iter().map(|b| b ^ 1).collect();
        assert_eq!(estimate_qber(&a, &inverted, 0.25, &mut rng).unwrap().qber, 1.0);
    }

    #[test]
    fn errors() {
        let mut rng = stream(3, Stream::Public);
        let a = random_bits(10, &mut rng);
        let b = random_bits(11, &mut rng);
        assert!(matches!(estimate_qber(&a, &b, 0.5, &mut rng), Err(PostprocError::LengthMismatch { .. })));
        assert!(matches!(estimate_qber(&a, &a, 0.05, &mut rng), Err(PostprocError::EmptySample)));
        assert!(estimate_qber(&a, &a, 1.0, &mut rng).is_err());
    }

    /// Sample of 500 out of 1000 with 110 errors: hypergeometric with
    /// mean 0.11 and variance K(N−K)(N−n)/(N²(N−1)n).
    #[test]
    fn sampled_rate_within_hypergeometric_spread() {
        let (n_total, k, n) = (1000.0f64, 110.0f64, 500.0f64);
        let sigma = (k * (n_total - k) * (n_total - n) / (n_total * n_total * (n_total - 1.0) * n)).sqrt();
        for seed in 0..20 {
            let mut rng = stream(seed, Stream::Public);
            let a = random_bits(1000, &mut rng);
            let mut b = a.clone();
            for i in sample(&mut rng, 1000, 110) {
                b.flip(i);
            }
            let est = estimate_qber(&a, &b, 0.5, &mut rng).unwrap();
            assert!((est.qber - 0.11).abs() <= 3.0 * sigma, "seed {seed}: {}", est.qber);
            // removed sample keeps the remaining mismatches consistent
            let rest_errors = est.alice_rest.hamming_distance(&est.bob_rest).unwrap();
            assert_eq!(rest_errors + est.errors, 110);
        }
    }
}
