use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::PostprocError;

/// A string of bits, one `u8` (0 or 1) per bit.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString(Vec<u8>);

impl BitString {
    pub fn new(bits: Vec<u8>) -> Result<Self, PostprocError> {
        if let Some(pos) = bits.iter().position(|b| *b > 1) {
            return Err(PostprocError::InvalidBit { position: pos, value: bits[pos] });
        }
        Ok(BitString(bits))
    }

    pub fn from_bools(bits: impl IntoIterator<Item = bool>) -> Self {
        BitString(bits.into_iter().map(u8::from).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn get(&self, index: usize) -> u8 {
        self.0[index]
    }

    pub fn flip(&mut self, index: usize) {
        self.0[index] ^= 1;
    }

    pub fn push(&mut self, bit: u8) {
        self.0.push(bit & 1);
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString, PostprocError> {
        check_lengths(self, other)?;
        Ok(BitString(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect()))
    }

    /// Number of positions where the two strings differ.
    pub fn hamming_distance(&self, other: &BitString) -> Result<usize, PostprocError> {
        check_lengths(self, other)?;
        Ok(self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count())
    }

    /// Lowercase hex, most significant bit first, zero-padded at the end to
    /// a whole number of nibbles.
    pub fn to_hex(&self) -> String {
        self.0
            .chunks(4)
            .map(|nibble| {
                let v = nibble.iter().enumerate().fold(0u32, |acc, (i, b)| acc | (u32::from(*b) << (3 - i)));
                char::from_digit(v, 16).expect("nibble fits one hex digit")
            })
            .collect()
    }

    /// Packs the bits into little-endian `u64` words, bit `i` at word
    /// `i / 64`, position `i % 64`.
    pub(crate) fn to_words(&self) -> Vec<u64> {
        let mut words = vec![0u64; self.0.len().div_ceil(64)];
        for (i, b) in self.0.iter().enumerate() {
            words[i / 64] |= u64::from(*b) << (i % 64);
        }
        words
    }
}

pub(crate) fn check_lengths(a: &BitString, b: &BitString) -> Result<(), PostprocError> {
    if a.len() == b.len() {
        Ok(())
    } else {
        Err(PostprocError::LengthMismatch { left: a.len(), right: b.len() })
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            f.write_str(if *b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = PostprocError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .enumerate()
            .map(|(i, c)| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(PostprocError::InvalidBitChar { position: i, value: c }),
            })
            .collect::<Result<Vec<u8>, _>>()
            .map(BitString)
    }
}

impl FromIterator<u8> for BitString {
    fn from_iter<I: IntoIterator<Item = u8>>(iter: I) -> Self {
        BitString(iter.into_iter().map(|b| b & 1).collect())
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyStage {
    Raw,
    Sifted,
    Reconciled,
    Final,
}

impl KeyStage {
    pub fn name(self) -> &'static str {
        match self {
            KeyStage::Raw => "raw",
            KeyStage::Sifted => "sifted",
            KeyStage::Reconciled => "reconciled",
            KeyStage::Final => "final",
        }
    }
}

/// Key bits at some stage together with the classical leakage so far.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyMaterial {
    pub stage: KeyStage,
    pub bits: BitString,
    pub leaked_bits: usize,
}

impl KeyMaterial {
    pub fn new(stage: KeyStage, bits: BitString, leaked_bits: usize) -> Self {
        KeyMaterial { stage, bits, leaked_bits }
    }

    /// Moves to a later stage; leakage may only grow.
    pub fn advance(&self, stage: KeyStage, bits: BitString, extra_leak: usize) -> KeyMaterial {
        debug_assert!(stage >= self.stage);
        KeyMaterial::new(stage, bits, self.leaked_bits + extra_leak)
    }

    /// Header line followed by the key in hex.
    pub fn export_hex(&self) -> String {
        format!(
            "# stage={} bits={} leaked={}\n{}\n",
            self.stage.name(),
            self.bits.len(),
            self.leaked_bits,
            self.bits.to_hex()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_is_msb_first_and_padded() {
        let b: BitString = "101100011".parse().unwrap();
        assert_eq!(b.to_hex(), "b18");
        assert_eq!(BitString::default().to_hex(), "");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(BitString::new(vec![0, 2]).is_err());
        assert!("01a".parse::<BitString>().is_err());
    }

    #[test]
    fn serde_as_string() {
        let b: BitString = "0110".parse().unwrap();
        let json = serde_json::to_string(&b).unwrap();
        assert_eq!(json, "\"0110\"");
        assert_eq!(serde_json::from_str::<BitString>(&json).unwrap(), b);
    }

    #[test]
    fn export_header() {
        let k = KeyMaterial::new(KeyStage::Final, "11110000".parse().unwrap(), 12);
        assert_eq!(k.export_hex(), "# stage=final bits=8 leaked=12\nf0\n");
    }

    #[test]
    fn words_layout() {
        let mut bits = vec![0u8; 70];
        bits[0] = 1;
        bits[65] = 1;
        let w = BitString::new(bits).unwrap().to_words();
        assert_eq!(w, vec![1, 2]);
    }
}
