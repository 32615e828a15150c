//! Split-stream seed derivation.
//!
//! Every random stream in the toolchain is keyed by a master seed plus a
//! path of parts. The derived seed is the first eight bytes (little endian)
//! of `SHA-256(master_le || part_1 || ... || part_n)` where an integer part
//! is encoded as `0x01 || u64_le` and a string part as
//! `0x02 || len_u64_le || utf8_bytes`. Streams are then driven by ChaCha8.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
pub enum Part<'a> {
    Int(u64),
    Str(&'a str),
}

impl From<u64> for Part<'_> {
    fn from(v: u64) -> Self {
        Part::Int(v)
    }
}

impl From<usize> for Part<'_> {
    fn from(v: usize) -> Self {
        Part::Int(v as u64)
    }
}

impl<'a> From<&'a str> for Part<'a> {
    fn from(v: &'a str) -> Self {
        Part::Str(v)
    }
}

impl<'a> From<&'a String> for Part<'a> {
    fn from(v: &'a String) -> Self {
        Part::Str(v.as_str())
    }
}

/// Derives a child seed from `master` and an ordered list of parts.
pub fn derive(master: u64, parts: &[Part<'_>]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    for part in parts {
        match part {
            Part::Int(v) => {
                hasher.update([1u8]);
                hasher.update(v.to_le_bytes());
            }
            Part::Str(s) => {
                hasher.update([2u8]);
                hasher.update((s.len() as u64).to_le_bytes());
                hasher.update(s.as_bytes());
            }
        }
    }
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Shorthand for `derive` with a list of convertible parts.
#[macro_export]
macro_rules! derive_seed {
    ($master:expr $(, $part:expr)* $(,)?) => {
        $crate::seed::derive($master, &[$($crate::seed::Part::from($part)),*])
    };
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_is_stable_and_part_sensitive() {
        let a = derive(42, &[Part::Int(0)]);
        assert_eq!(a, derive(42, &[Part::Int(0)]));
        assert_ne!(a, derive(42, &[Part::Int(1)]));
        assert_ne!(a, derive(43, &[Part::Int(0)]));
        // integer and string parts never collide on the same bytes
        assert_ne!(derive(1, &[Part::Str("0")]), derive(1, &[Part::Int(0)]));
        assert_ne!(
            derive(1, &[Part::Str("ab"), Part::Str("c")]),
            derive(1, &[Part::Str("a"), Part::Str("bc")])
        );
    }

    #[test]
    fn macro_matches_function() {
        let id = String::from("nc-00001");
        assert_eq!(
            derive_seed!(7, &id, "vanilla_de", 3usize, 1u64),
            derive(
                7,
                &[Part::Str("nc-00001"), Part::Str("vanilla_de"), Part::Int(3), Part::Int(1)]
            )
        );
    }
}
