//! Length-`n` sequences as mixed-radix integers, product distributions over
//! them, and the counter-based binning hash.

/// Largest number of rounds a protocol instance supports.
pub const MAX_ROUNDS: usize = 4;

/// Digits of `seq` in base `a`, first position most significant.
pub fn digits(mut seq: u64, a: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for t in (0..n).rev() {
        out[t] = (seq % a as u64) as usize;
        seq /= a as u64;
    }
    out
}

pub fn index(digits: &[usize], a: usize) -> u64 {
    digits.iter().fold(0u64, |acc, &d| acc * a as u64 + d as u64)
}

/// Every sequence with nonzero mass under the per-position distributions
/// `rows`, in increasing index order, with its probability.
pub fn product_dist(rows: &[&[f64]]) -> Vec<(u64, f64)> {
    let mut out = vec![(0u64, 1.0f64)];
    for row in rows {
        let a = row.len() as u64;
        let mut next = Vec::with_capacity(out.len() * row.len());
        for &(s, p) in &out {
            for (d, &q) in row.iter().enumerate() {
                if q > 0.0 {
                    next.push((s * a + d as u64, p * q));
                }
            }
        }
        out = next;
    }
    out
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Which binning a bin index belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Message = 1,
    Shared = 2,
    Key = 3,
    Secret = 4,
}

/// Uniform bin in `[0, bins)` of the sequence tuple `seqs`, keyed by
/// `(seed, round, role)`.
pub fn bin(seed: u64, round: usize, role: Role, seqs: &[u64], bins: u64) -> u64 {
    if bins <= 1 {
        return 0;
    }
    let mut h = mix(seed);
    h = mix(h ^ round as u64);
    h = mix(h ^ role as u64);
    for &s in seqs {
        h = mix(h ^ s);
    }
    ((h as u128 * bins as u128) >> 64) as u64
}

/// Seed of Monte-Carlo chunk `chunk` in stream `stream`; streams of one
/// seed are independent of each other and of the binnings.
pub fn substream_seed(seed: u64, stream: u64, chunk: u64) -> u64 {
    mix(mix(mix(seed ^ 0x5EED_0000_0000_0000) ^ stream) ^ chunk)
}

/// `⌈2^{n·rate}⌉` bins, at least one, saturating at 2^62. The relative slack
/// keeps integral powers such as 2^{1·1} from rounding up to 3.
pub fn bin_count(n: usize, rate: f64) -> u64 {
    let e = n as f64 * rate;
    if e <= 0.0 {
        return 1;
    }
    if e >= 62.0 {
        return 1 << 62;
    }
    ((e.exp2() * (1.0 - 1e-12)).ceil() as u64).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digits_round_trip() {
        for s in 0..81u64 {
            assert_eq!(index(&digits(s, 3, 4), 3), s);
        }
        assert_eq!(digits(5, 2, 3), vec![1, 0, 1]);
    }

    #[test]
    fn product_dist_sums_to_one() {
        let a = [0.25, 0.75];
        let b = [1.0, 0.0];
        let d = product_dist(&[&a, &b, &a]);
        assert_eq!(d.len(), 4);
        assert!((d.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(d[0], (0, 0.0625));
    }

    #[test]
    fn bin_counts() {
        assert_eq!(bin_count(1, 1.0), 2);
        assert_eq!(bin_count(3, 0.0), 1);
        assert_eq!(bin_count(2, 0.5), 2);
        assert_eq!(bin_count(5, 0.9), 23);
        assert_eq!(bin_count(100, 1.0), 1 << 62);
    }

    #[test]
    fn bins_are_deterministic_and_spread() {
        let a: Vec<u64> = (0..64).map(|s| bin(7, 1, Role::Message, &[s], 4)).collect();
        let b: Vec<u64> = (0..64).map(|s| bin(7, 1, Role::Message, &[s], 4)).collect();
        assert_eq!(a, b);
        let c: Vec<u64> = (0..64).map(|s| bin(7, 1, Role::Shared, &[s], 4)).collect();
        assert_ne!(a, c);
        for k in 0..4 {
            assert!(a.iter().filter(|&&x| x == k).count() > 4);
        }
    }
}
