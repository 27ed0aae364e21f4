use crate::bits::{toeplitz_apply_raw, BitString};
use crate::error::{domain, Result};

use super::{check_inputs, StrongSeededExtractor};

/// Toeplitz hashing: the seed is the `n + m - 1` bit diagonal of an `m x n`
/// GF(2) Toeplitz matrix (see [`crate::bits::ToeplitzSeed`] for the
/// indexing), and the output is the matrix-vector product.
///
/// The family is universal, so the leftover hash lemma gives error
/// `2^{-(k - m)/2}` for every source of min-entropy `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ToeplitzExtractor {
    n: usize,
    m: usize,
    claimed_k: f64,
}

pub fn toeplitz_extractor(n: usize, m: usize) -> Result<ToeplitzExtractor> {
    if m == 0 || n == 0 {
        return domain("Toeplitz extractor dimensions must be positive");
    }
    if m > n {
        return domain(format!("Toeplitz output {m} exceeds input {n}"));
    }
    Ok(ToeplitzExtractor {
        n,
        m,
        claimed_k: n as f64,
    })
}

impl ToeplitzExtractor {
    /// Sets the entropy the error claim refers to.
    pub fn with_claimed_k(mut self, k: f64) -> Self {
        self.claimed_k = k;
        self
    }

    pub fn eps_for(&self, k: f64) -> f64 {
        lhl_bound(k, self.m)
    }
}

/// `2^{-(k - m)/2}`, capped at 1.
pub fn lhl_bound(k: f64, m: usize) -> f64 {
    (-(k - m as f64) / 2.0).exp2().min(1.0)
}

impl StrongSeededExtractor for ToeplitzExtractor {
    fn n(&self) -> usize {
        self.n
    }

    fn d(&self) -> usize {
        self.n + self.m - 1
    }

    fn m(&self) -> usize {
        self.m
    }

    fn claimed_k(&self) -> f64 {
        self.claimed_k
    }

    fn claimed_eps(&self) -> f64 {
        self.eps_for(self.claimed_k)
    }

    fn describe(&self) -> String {
        format!("toeplitz({}->{})", self.n, self.m)
    }

    fn eval(&self, x: &BitString, seed: &BitString) -> Result<BitString> {
        check_inputs(self, x, seed)?;
        Ok(toeplitz_apply_raw(seed, self.m, x))
    }

    fn eval_u64(&self, x: u64, seed: u64) -> Result<u64> {
        if self.n > 64 || self.d() > 64 {
            return self
                .eval(&BitString::from_u64(x, self.n), &BitString::from_u64(seed, self.d()))
                .map(|b| b.to_u64());
        }
        // Row r is the n-bit window of the diagonal starting at m - 1 - r.
        let n_mask = if self.n == 64 { u64::MAX } else { (1u64 << self.n) - 1 };
        let d = self.d();
        let mut out = 0u64;
        for r in 0..self.m {
            let start = self.m - 1 - r;
            let row = (seed >> (d - start - self.n)) & n_mask;
            out = (out << 1) | u64::from((row & x).count_ones() & 1 == 1);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        BitString::parse_binary(s).unwrap()
    }

    #[test]
    fn shape_and_errors() {
        let e = toeplitz_extractor(8, 3).unwrap();
        assert_eq!((e.n(), e.d(), e.m()), (8, 10, 3));
        assert!(toeplitz_extractor(2, 3).is_err());
        assert_eq!(e.clone().with_claimed_k(7.0).claimed_eps(), 0.25);
        assert_eq!(e.eps_for(1.0), 1.0);
    }

    #[test]
    fn golden_values() {
        let e = toeplitz_extractor(4, 2).unwrap();
        assert_eq!(e.eval(&bs("0000"), &BitString::zeros(5)).unwrap(), bs("00"));
        let e = toeplitz_extractor(2, 1).unwrap();
        assert_eq!(e.eval(&bs("10"), &bs("10")).unwrap(), bs("1"));
        assert_eq!(e.eval(&bs("01"), &bs("10")).unwrap(), bs("0"));
    }

    #[test]
    fn integer_path_agrees() {
        let e = toeplitz_extractor(5, 3).unwrap();
        for x in 0..32u64 {
            for s in 0..128u64 {
                let slow = e
                    .eval(&BitString::from_u64(x, 5), &BitString::from_u64(s, 7))
                    .unwrap()
                    .to_u64();
                assert_eq!(e.eval_u64(x, s).unwrap(), slow);
            }
        }
    }
}
