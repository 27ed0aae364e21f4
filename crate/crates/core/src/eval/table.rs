use std::collections::BTreeMap;

use crate::bits::BitString;
use crate::error::{domain, Result};
use crate::scalar::Probability;
use crate::sources::DiscreteSource;

/// An exact joint distribution over a tuple of bit-string variables.
///
/// Keys are the concatenation of the variables in order; `var_lens` gives
/// the split. Iteration is in lexicographic key order.
#[derive(Clone, Debug, PartialEq)]
pub struct JointTable<P> {
    var_lens: Vec<usize>,
    table: BTreeMap<BitString, P>,
}

impl<P: Probability> JointTable<P> {
    /// Zero entries are dropped; the rest must sum to one.
    pub fn new(var_lens: Vec<usize>, table: BTreeMap<BitString, P>) -> Result<Self> {
        let total_len: usize = var_lens.iter().sum();
        let mut sum = P::zero();
        for (k, p) in &table {
            if k.len() != total_len {
                return domain(format!("key of {} bits in a {total_len}-bit table", k.len()));
            }
            if *p < P::zero() {
                return domain(format!("negative probability {p}"));
            }
            sum = sum + *p;
        }
        if !sum.approx_eq(P::one()) {
            return domain(format!("joint table sums to {sum}"));
        }
        let table = table.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        Ok(JointTable { var_lens, table })
    }

    pub(crate) fn from_parts_unchecked(var_lens: Vec<usize>, table: BTreeMap<BitString, P>) -> Self {
        JointTable { var_lens, table }
    }

    pub fn from_source(s: &DiscreteSource<P>) -> Result<Self> {
        Ok(JointTable {
            var_lens: vec![s.n()],
            table: s.table()?.iter().cloned().collect(),
        })
    }

    pub fn point(values: &[BitString]) -> Self {
        JointTable {
            var_lens: values.iter().map(|v| v.len()).collect(),
            table: BTreeMap::from([(BitString::concat_all(values), P::one())]),
        }
    }

    /// Uniform distribution; at most 24 bits in total.
    pub fn uniform(var_lens: Vec<usize>) -> Result<Self> {
        let total: usize = var_lens.iter().sum();
        if total > 24 {
            return domain(format!("explicit uniform table over {total} bits"));
        }
        let w = P::pow2_inv(total as u32);
        Ok(JointTable {
            var_lens,
            table: BitString::all(total).map(|k| (k, w)).collect(),
        })
    }

    pub fn var_lens(&self) -> &[usize] {
        &self.var_lens
    }

    pub fn total_len(&self) -> usize {
        self.var_lens.iter().sum()
    }

    pub fn support_len(&self) -> usize {
        self.table.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BitString, &P)> {
        self.table.iter()
    }

    pub fn prob(&self, key: &BitString) -> P {
        self.table.get(key).copied().unwrap_or_else(P::zero)
    }

    /// Splits a key into its variables.
    pub fn split(&self, key: &BitString) -> Vec<BitString> {
        let mut off = 0;
        self.var_lens
            .iter()
            .map(|&l| {
                let v = key.slice(off, l).expect("key length matches var_lens");
                off += l;
                v
            })
            .collect()
    }

    /// Joint distribution of the listed variables, in the listed order.
    pub fn marginal(&self, vars: &[usize]) -> Result<Self> {
        if let Some(&v) = vars.iter().find(|&&v| v >= self.var_lens.len()) {
            return domain(format!("variable {v} out of range"));
        }
        let mut out: BTreeMap<BitString, P> = BTreeMap::new();
        for (k, p) in &self.table {
            let parts = self.split(k);
            let key = BitString::concat_all(vars.iter().map(|&v| &parts[v]));
            let e = out.entry(key).or_insert_with(P::zero);
            *e = *e + *p;
        }
        Ok(JointTable {
            var_lens: vars.iter().map(|&v| self.var_lens[v]).collect(),
            table: out,
        })
    }

    /// The whole table as a single-variable source.
    pub fn to_source(&self) -> Result<DiscreteSource<P>> {
        DiscreteSource::from_weights(self.total_len(), self.table.iter().map(|(k, p)| (k.clone(), *p)))
    }

    pub fn total(&self) -> P {
        self.table.values().fold(P::zero(), |a, b| a + *b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational64;

    #[test]
    fn marginals_and_split() {
        let u = JointTable::<Rational64>::uniform(vec![1, 2]).unwrap();
        assert_eq!(u.support_len(), 8);
        let m = u.marginal(&[1]).unwrap();
        assert_eq!(m, JointTable::uniform(vec![2]).unwrap());
        let key = BitString::parse_binary("101").unwrap();
        assert_eq!(
            u.split(&key),
            vec![
                BitString::parse_binary("1").unwrap(),
                BitString::parse_binary("01").unwrap()
            ]
        );
        let swapped = u.marginal(&[1, 0]).unwrap();
        assert_eq!(swapped.var_lens(), &[2, 1]);
    }

    #[test]
    fn validation() {
        let mut t = BTreeMap::new();
        t.insert(BitString::zeros(2), 0.5f64);
        assert!(JointTable::new(vec![2], t.clone()).is_err());
        t.insert(BitString::from_u64(3, 2), 0.5);
        assert!(JointTable::new(vec![2], t.clone()).is_ok());
        assert!(JointTable::new(vec![3], t).is_err());
    }
}
