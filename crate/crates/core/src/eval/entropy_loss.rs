use std::collections::BTreeMap;

use serde::Serialize;

use crate::bits::BitString;
use crate::error::{domain, Result};
use crate::scalar::Probability;
use crate::sources::{min_entropy, DiscreteSource};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixingEntry {
    pub value: BitString,
    pub prob: f64,
    pub min_entropy: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyLossReport {
    pub base_entropy: f64,
    /// `H(X) - fixing_len - log2(1/eps)`.
    pub threshold: f64,
    pub eps: f64,
    pub entries: Vec<FixingEntry>,
    pub passing_mass: f64,
    /// Passing mass is at least `1 - eps`.
    pub pass: bool,
}

/// Conditions `source` on each value of the `fixing_len`-bit function
/// `fixing` and checks that, except on at most `eps` mass of fixings, the
/// conditional min-entropy stays above `H(X) - fixing_len - log2(1/eps)`.
pub fn min_entropy_loss_check<P, F>(
    source: &DiscreteSource<P>,
    fixing: F,
    fixing_len: usize,
    eps: f64,
) -> Result<EntropyLossReport>
where
    P: Probability,
    F: Fn(&BitString) -> BitString,
{
    if !(eps > 0.0 && eps <= 1.0) {
        return domain(format!("eps = {eps} must be in (0, 1]"));
    }
    let base_entropy = min_entropy(source)?;
    let threshold = base_entropy - fixing_len as f64 - (1.0 / eps).log2();
    let mut groups: BTreeMap<BitString, Vec<(BitString, P)>> = BTreeMap::new();
    for (x, w) in source.table()? {
        let v = fixing(x);
        if v.len() != fixing_len {
            return domain(format!("fixing produced {} bits, expected {fixing_len}", v.len()));
        }
        groups.entry(v).or_default().push((x.clone(), *w));
    }
    let mut entries = Vec::new();
    let mut passing_mass = 0.0;
    for (value, members) in groups {
        let mass = members.iter().fold(P::zero(), |a, (_, w)| a + *w);
        let cond = DiscreteSource::from_weights(source.n(), members.into_iter().map(|(x, w)| (x, w / mass)))?;
        let h = min_entropy(&cond)?;
        let pass = h + 1e-9 >= threshold;
        let prob = mass.to_f64_lossy();
        if pass {
            passing_mass += prob;
        }
        entries.push(FixingEntry {
            value,
            prob,
            min_entropy: h,
            pass,
        });
    }
    Ok(EntropyLossReport {
        base_entropy,
        threshold,
        eps,
        entries,
        passing_mass,
        pass: passing_mass + 1e-12 >= 1.0 - eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational64;

    #[test]
    fn constant_and_first_bit() {
        let u = DiscreteSource::<Rational64>::uniform(4);
        let c = min_entropy_loss_check(&u, |_| BitString::zeros(1), 1, 0.5).unwrap();
        assert_eq!(c.entries.len(), 1);
        assert_eq!(c.entries[0].min_entropy, 4.0);
        assert!(c.pass);

        let f = min_entropy_loss_check(&u, |x| x.prefix(1).unwrap(), 1, 0.5).unwrap();
        assert_eq!(f.entries.len(), 2);
        assert!(f.entries.iter().all(|e| e.min_entropy == 3.0));
        assert!(f.pass);
    }
}
