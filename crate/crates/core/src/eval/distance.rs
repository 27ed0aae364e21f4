use std::collections::BTreeMap;

use crate::bits::BitString;
use crate::error::{domain, guard, Result};
use crate::extractors::StrongSeededExtractor;
use crate::scalar::Probability;
use crate::sources::DiscreteSource;

use super::JointTable;

/// Half the L1 distance.
pub fn statistical_distance<P: Probability>(p: &JointTable<P>, q: &JointTable<P>) -> Result<P> {
    if p.var_lens() != q.var_lens() {
        return domain(format!("shapes {:?} and {:?} differ", p.var_lens(), q.var_lens()));
    }
    let mut sum = P::zero();
    let mut a = p.iter().peekable();
    let mut b = q.iter().peekable();
    loop {
        match (a.peek(), b.peek()) {
            (None, None) => break,
            (Some((_, pa)), None) => {
                sum = sum + **pa;
                a.next();
            }
            (None, Some((_, pb))) => {
                sum = sum + **pb;
                b.next();
            }
            (Some((ka, pa)), Some((kb, pb))) => match ka.cmp(kb) {
                std::cmp::Ordering::Less => {
                    sum = sum + **pa;
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    sum = sum + **pb;
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    sum = sum + (**pa - **pb).abs();
                    a.next();
                    b.next();
                }
            },
        }
    }
    Ok(sum * P::half())
}

/// Distance of `p` from the uniform distribution over all of its bits,
/// counting outputs `p` never produces.
pub fn distance_from_uniform<P: Probability>(p: &JointTable<P>) -> P {
    uniform_gap(p.iter().map(|(_, w)| *w), p.total(), p.total_len())
}

/// `sum |w - mass * 2^-len|` over the seen weights plus the unseen cells, halved.
fn uniform_gap<P: Probability>(weights: impl Iterator<Item = P>, mass: P, len: usize) -> P {
    let u = mass * P::pow2_inv(len as u32);
    let mut seen = 0u64;
    let mut sum = P::zero();
    for w in weights {
        sum = sum + (w - u).abs();
        seen += 1;
    }
    // Unseen cells each contribute u; there are 2^len - seen of them.
    let unseen_mass = mass - P::from_u64(seen).expect("count fits") * u;
    (sum + unseen_mass) * P::half()
}

/// Distance between `(C, T)` and `(C, U)` where `T` is variable `target`
/// and `C` collects the remaining variables: how far `T` is from uniform
/// and independent of its context.
pub fn distance_from_uniform_given<P: Probability>(p: &JointTable<P>, target: usize) -> Result<P> {
    let n = p.var_lens().len();
    if target >= n {
        return domain(format!("target variable {target} out of range"));
    }
    let ctx_vars: Vec<usize> = (0..n).filter(|&v| v != target).collect();
    let mut groups: BTreeMap<BitString, Vec<P>> = BTreeMap::new();
    for (k, w) in p.iter() {
        let parts = p.split(k);
        let ctx = BitString::concat_all(ctx_vars.iter().map(|&v| &parts[v]));
        groups.entry(ctx).or_default().push(*w);
    }
    let len = p.var_lens()[target];
    let mut total = P::zero();
    for ws in groups.values() {
        let mass = ws.iter().fold(P::zero(), |a, b| a + *b);
        total = total + uniform_gap(ws.iter().copied(), mass, len);
    }
    Ok(total)
}

/// Exact distance of `(ext(X, S), S)` from `(U_m, S)` with `S` a uniform seed.
pub fn strong_distance<P: Probability>(
    ext: &dyn StrongSeededExtractor,
    source: &DiscreteSource<P>,
    budget: u128,
) -> Result<P> {
    if source.n() != ext.n() {
        return domain(format!(
            "source has {} bits, {} expects {}",
            source.n(),
            ext.describe(),
            ext.n()
        ));
    }
    let support = source.table()?;
    let (d, m) = (ext.d(), ext.m());
    if d > 40 {
        return domain(format!("seed of {d} bits cannot be enumerated"));
    }
    guard("strong distance", (support.len() as u128) << d, budget)?;
    let small = ext.n() <= 64 && m <= 16;
    let mut total = P::zero();
    let mut dense = vec![P::zero(); if small { 1 << m } else { 0 }];
    let mut touched: Vec<usize> = Vec::new();
    for s in 0..1u64 << d {
        if small {
            touched.clear();
            for (x, w) in support {
                let o = ext.eval_u64(x.to_u64(), s)? as usize;
                if dense[o].is_zero() {
                    touched.push(o);
                }
                dense[o] = dense[o] + *w;
            }
            total = total + uniform_gap(touched.iter().map(|&o| dense[o]), P::one(), m);
            for &o in &touched {
                dense[o] = P::zero();
            }
        } else {
            let seed = BitString::from_u64(s, d);
            let mut hist: BTreeMap<BitString, P> = BTreeMap::new();
            for (x, w) in support {
                let e = hist.entry(ext.eval(x, &seed)?).or_insert_with(P::zero);
                *e = *e + *w;
            }
            total = total + uniform_gap(hist.into_values(), P::one(), m);
        }
    }
    Ok(total * P::pow2_inv(d as u32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::push_forward;
    use crate::extractors::{toeplitz_extractor, LookupExtractor, DEFAULT_BUDGET};
    use crate::scalar::Rational64;
    use crate::sources::FlatSource;

    fn point(s: &str) -> JointTable<Rational64> {
        JointTable::point(&[BitString::parse_binary(s).unwrap()])
    }

    #[test]
    fn distance_examples() {
        let p = point("00");
        assert_eq!(statistical_distance(&p, &p).unwrap(), Rational64::from_integer(0));
        assert_eq!(
            statistical_distance(&p, &point("11")).unwrap(),
            Rational64::from_integer(1)
        );
        let flat = JointTable::from_source(
            &FlatSource::new(2, ["00", "01"].map(|s| BitString::parse_binary(s).unwrap()))
                .unwrap()
                .to_source(),
        )
        .unwrap();
        let u = JointTable::uniform(vec![2]).unwrap();
        assert_eq!(statistical_distance(&u, &flat).unwrap(), Rational64::new(1, 2));
        assert!(statistical_distance(&u, &point("000")).is_err());
    }

    #[test]
    fn uniform_distance_examples() {
        assert_eq!(
            distance_from_uniform(&JointTable::<Rational64>::uniform(vec![3]).unwrap()),
            Rational64::from_integer(0)
        );
        for m in 1..6 {
            let p = JointTable::<Rational64>::point(&[BitString::zeros(m)]);
            assert_eq!(distance_from_uniform(&p), Rational64::new((1 << m) - 1, 1 << m));
        }
    }

    #[test]
    fn conditional_uniformity() {
        // (A, A) with A a uniform bit: target 1 is determined by its context.
        let copy = JointTable::<Rational64>::new(
            vec![1, 1],
            [("00", 1), ("11", 1)]
                .into_iter()
                .map(|(s, _)| (BitString::parse_binary(s).unwrap(), Rational64::new(1, 2)))
                .collect(),
        )
        .unwrap();
        assert_eq!(distance_from_uniform_given(&copy, 1).unwrap(), Rational64::new(1, 2));
        let u = JointTable::<Rational64>::uniform(vec![1, 2]).unwrap();
        assert_eq!(distance_from_uniform_given(&u, 1).unwrap(), Rational64::from_integer(0));
    }

    #[test]
    fn strong_distance_matches_double_loop() {
        let e = toeplitz_extractor(4, 2).unwrap();
        let flat = FlatSource::new(4, (0..8u64).map(|v| BitString::from_u64(v * 2 + 1, 4))).unwrap();
        let src = flat.to_source::<Rational64>();
        // Oracle: joint (seed, output) by push-forward, then conditional uniformity.
        let seeds = DiscreteSource::<Rational64>::uniform(5);
        let joint = push_forward(
            &[&src, &seeds],
            |a| Ok(vec![a[1].clone(), e.eval(a[0], a[1])?]),
            DEFAULT_BUDGET,
        )
        .unwrap();
        let oracle = distance_from_uniform_given(&joint, 1).unwrap();
        assert_eq!(strong_distance(&e, &src, DEFAULT_BUDGET).unwrap(), oracle);
        assert!(oracle.to_f64_lossy() <= (-0.5f64).exp2());
    }

    #[test]
    fn constant_extractor_is_far() {
        let c = LookupExtractor::new(2, 1, 2, vec![0; 8]).unwrap();
        let u = DiscreteSource::<Rational64>::uniform(2);
        assert_eq!(strong_distance(&c, &u, DEFAULT_BUDGET).unwrap(), Rational64::new(3, 4));
    }
}
