use rand::RngCore;

use super::BitString;
use crate::rng::{stream, Stream};

/// Binary entropy in bits, with `h2(0) = h2(1) = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Security margin `⌈2·log2(1/ε)⌉`.
pub fn security_margin(epsilon: f64) -> usize {
    (2.0 * (1.0 / epsilon).log2()).ceil().max(0.0) as usize
}

/// Output length `max(0, ⌊n(1 − h2(q))⌋ − leaked − ⌈2·log2(1/ε)⌉)`.
pub fn final_key_length(n: usize, qber: f64, leaked: usize, epsilon: f64) -> usize {
    let entropy_bound = (n as f64 * (1.0 - binary_entropy(qber))).floor() as usize;
    entropy_bound.saturating_sub(leaked).saturating_sub(security_margin(epsilon))
}

/// Bits `r_0 .. r_{m+n-2}` defining the Toeplitz matrix `T[i][j] = r[i - j + n - 1]`,
/// packed little-endian with one spare word for window reads.
pub(crate) fn toeplitz_seed_words(m: usize, n: usize, seed: u64) -> Vec<u64> {
    let total = (m + n).saturating_sub(1);
    let mut rng = stream(seed, Stream::Public);
    let mut words: Vec<u64> = (0..total.div_ceil(64)).map(|_| rng.next_u64()).collect();
    if let Some(last) = words.last_mut() {
        let used = total % 64;
        if used != 0 {
            *last &= (1u64 << used) - 1;
        }
    }
    words.push(0);
    words
}

fn window(words: &[u64], offset: usize) -> u64 {
    let (w, s) = (offset / 64, offset % 64);
    if s == 0 {
        words[w]
    } else {
        (words[w] >> s) | (words[w + 1] << (64 - s))
    }
}

/// Multiplies `key` by an `m × n` Toeplitz matrix drawn from `seed`.
///
/// Row `i` of the product is the parity of `r[i .. i+n]` against the
/// reversed key, computed 64 bits at a time.
pub fn toeplitz_hash(key: &BitString, m: usize, seed: u64) -> BitString {
    let n = key.len();
    if n == 0 || m == 0 {
        return BitString::default();
    }
    let r = toeplitz_seed_words(m, n, seed);
    let reversed: BitString = key.as_slice().iter().rev().copied().collect();
    let k = reversed.to_words();
    (0..m)
        .map(|i| {
            let ones: u32 = k.iter().enumerate().map(|(w, kw)| (window(&r, i + 64 * w) & kw).count_ones()).sum();
            (ones & 1) as u8
        })
        .collect()
}

/// Compresses `key` to the length allowed by the entropy bound, the
/// disclosed parities and the security margin.
pub fn privacy_amplify(key: &BitString, leaked: usize, qber: f64, epsilon: f64, seed: u64) -> BitString {
    let m = final_key_length(key.len(), qber, leaked, epsilon);
    toeplitz_hash(key, m, seed)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::Rng;

    use super::*;

    /// Straight matrix-vector product over GF(2).
    fn naive(key: &BitString, m: usize, seed: u64) -> BitString {
        let n = key.len();
        let words = toeplitz_seed_words(m, n, seed);
        let r = |idx: usize| ((words[idx / 64] >> (idx % 64)) & 1) as u8;
        (0..m)
            .map(|i| (0..n).fold(0u8, |acc, j| acc ^ (r(i + n - 1 - j) & key.get(j))))
            .collect()
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-15);
        assert!((binary_entropy(0.11) - 0.4999165).abs() < 1e-6);
    }

    #[test]
    fn length_examples() {
        assert_eq!(final_key_length(1000, 0.0, 0, 1.0), 1000);
        assert_eq!(final_key_length(5000, 0.5, 0, 1.0), 0);
        assert_eq!(security_margin(2f64.powi(-32)), 64);
        // 1024·(1 − h2(0.05)) = 1024 · 0.713603… = 730.73…
        let h = -(0.05f64.ln() * 0.05 + 0.95f64.ln() * 0.95) / 2f64.ln();
        let expected = (1024.0 * (1.0 - h)).floor() as usize - 100 - 64;
        assert_eq!(expected, 566);
        assert_eq!(final_key_length(1024, 0.05, 100, 2f64.powi(-32)), 566);
        assert_eq!(final_key_length(10, 0.0, 20, 1.0), 0);
    }

    #[test]
    fn packed_matches_naive() {
        let mut rng = stream(8, Stream::Alice);
        for (n, m) in [(1, 1), (63, 10), (64, 64), (65, 3), (200, 130), (1000, 700)] {
            let key: BitString = (0..n).map(|_| rng.random_range(0..2u8)).collect();
            assert_eq!(toeplitz_hash(&key, m, n as u64), naive(&key, m, n as u64), "n={n} m={m}");
        }
    }

    #[test]
    fn identity_length_keeps_information() {
        let key: BitString = "1011".parse().unwrap();
        assert_eq!(privacy_amplify(&key, 0, 0.0, 1.0, 1).len(), 4);
        assert!(privacy_amplify(&key, 0, 0.5, 1.0, 1).is_empty());
    }

    fn bits(n: usize) -> impl Strategy<Value = BitString> {
        prop::collection::vec(0u8..2, n).prop_map(|v| BitString::new(v).unwrap())
    }

    proptest! {
        #[test]
        fn hash_is_linear((a, b) in (1usize..300).prop_flat_map(|n| (bits(n), bits(n))), m in 0usize..300, seed in any::<u64>()) {
            let lhs = toeplitz_hash(&a.xor(&b).unwrap(), m, seed);
            let rhs = toeplitz_hash(&a, m, seed).xor(&toeplitz_hash(&b, m, seed)).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn length_law(n in 1usize..3000, qber in 0.0f64..0.5, leaked in 0usize..2000, seed in any::<u64>()) {
            let key: BitString = (0..n).map(|i| ((seed >> (i % 64)) & 1) as u8).collect();
            let out = privacy_amplify(&key, leaked, qber, 2f64.powi(-32), seed);
            let h = if qber == 0.0 { 0.0 } else { -qber * qber.log2() - (1.0 - qber) * (1.0 - qber).log2() };
            let bound = (n as f64 * (1.0 - h)).floor() as i64 - leaked as i64 - 64;
            prop_assert_eq!(out.len() as i64, bound.max(0));
        }
    }
}
