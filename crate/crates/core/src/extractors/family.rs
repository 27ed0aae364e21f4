use rand::Rng;

use crate::bits::{toeplitz_apply_raw, BitString};
use crate::error::{domain, Result};
use crate::rng::ExperimentRng;

use super::{check_inputs, StrongSeededExtractor};

/// A short-seed extractor: the `d`-bit seed selects one of `2^d` pinned
/// Toeplitz matrices. Used where a role needs a seed shorter than the
/// `n + m - 1` bits plain Toeplitz hashing consumes. It carries no error
/// guarantee of its own; `claimed_eps` is whatever was measured.
#[derive(Clone, Debug, PartialEq)]
pub struct ToeplitzFamily {
    n: usize,
    d: usize,
    m: usize,
    diags: Vec<BitString>,
    claimed_k: f64,
    claimed_eps: f64,
}

impl ToeplitzFamily {
    pub fn new(n: usize, m: usize, diags: Vec<BitString>) -> Result<Self> {
        if n == 0 || m == 0 {
            return domain("Toeplitz family dimensions must be positive");
        }
        if !diags.len().is_power_of_two() {
            return domain(format!("{} matrices is not a power of two", diags.len()));
        }
        if let Some(bad) = diags.iter().find(|g| g.len() != n + m - 1) {
            return domain(format!("diagonal of {} bits, expected {}", bad.len(), n + m - 1));
        }
        let d = diags.len().trailing_zeros() as usize;
        Ok(ToeplitzFamily {
            n,
            d,
            m,
            diags,
            claimed_k: n as f64,
            claimed_eps: 1.0,
        })
    }

    pub fn random(n: usize, d: usize, m: usize, rng: &mut ExperimentRng) -> Result<Self> {
        if d > 20 {
            return domain(format!("family with 2^{d} matrices is too large"));
        }
        let len = n + m - 1;
        let diags = (0..1usize << d)
            .map(|_| BitString::from_bits(&(0..len).map(|_| rng.random::<bool>()).collect::<Vec<_>>()))
            .collect();
        ToeplitzFamily::new(n, m, diags)
    }

    pub fn with_claims(mut self, k: f64, eps: f64) -> Self {
        self.claimed_k = k;
        self.claimed_eps = eps;
        self
    }

    pub fn diags(&self) -> &[BitString] {
        &self.diags
    }
}

impl StrongSeededExtractor for ToeplitzFamily {
    fn n(&self) -> usize {
        self.n
    }

    fn d(&self) -> usize {
        self.d
    }

    fn m(&self) -> usize {
        self.m
    }

    fn claimed_k(&self) -> f64 {
        self.claimed_k
    }

    fn claimed_eps(&self) -> f64 {
        self.claimed_eps
    }

    fn describe(&self) -> String {
        format!("toeplitz-family({}x{}->{})", self.n, self.d, self.m)
    }

    fn eval(&self, x: &BitString, seed: &BitString) -> Result<BitString> {
        check_inputs(self, x, seed)?;
        let diag = &self.diags[seed.to_u64() as usize];
        Ok(toeplitz_apply_raw(diag, self.m, x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::{toeplitz_apply, ToeplitzSeed};
    use crate::rng::rng_from_seed;

    #[test]
    fn seed_selects_matrix() {
        let fam = ToeplitzFamily::random(6, 2, 3, &mut rng_from_seed(1)).unwrap();
        let x = BitString::from_u64(0b101101, 6);
        for s in 0..4u64 {
            let seed = ToeplitzSeed::new(6, 3, fam.diags()[s as usize].clone()).unwrap();
            let want = toeplitz_apply(&seed, &x).unwrap();
            assert_eq!(fam.eval(&x, &BitString::from_u64(s, 2)).unwrap(), want);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(ToeplitzFamily::new(4, 2, vec![BitString::zeros(5); 3]).is_err());
        assert!(ToeplitzFamily::new(4, 2, vec![BitString::zeros(4); 2]).is_err());
    }
}
