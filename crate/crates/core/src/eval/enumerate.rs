use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::bits::BitString;
use crate::error::{domain, guard, Error, Result};
use crate::scalar::Probability;
use crate::sources::DiscreteSource;

use super::JointTable;

/// Default cap on weighted evaluations for exact enumeration.
pub const ENUMERATION_BUDGET: u128 = 1 << 24;

/// Number of weighted evaluations enumerating `sources` costs.
pub fn product_size<P: Probability>(sources: &[&DiscreteSource<P>]) -> Result<u128> {
    let mut acc: u128 = 1;
    for s in sources {
        acc = acc.saturating_mul(s.support_size()? as u128);
    }
    Ok(acc)
}

/// Exact distribution of `f` applied to independent draws from `sources`.
///
/// `f` returns the output tuple; every call must produce the same variable
/// lengths. The enumeration is split across workers by the first source's
/// support and the partial tables are merged in support order, so the
/// result is identical for any worker count.
pub fn push_forward<P, F>(sources: &[&DiscreteSource<P>], f: F, budget: u128) -> Result<JointTable<P>>
where
    P: Probability,
    F: Fn(&[&BitString]) -> Result<Vec<BitString>> + Sync,
{
    if sources.is_empty() {
        return domain("push-forward needs at least one source");
    }
    let needed = product_size(sources)?;
    if needed > budget {
        return Err(Error::Guard {
            what: "exact push-forward (use Monte Carlo mode for larger inputs)".into(),
            needed,
            budget,
        });
    }
    let tables: Vec<&[(BitString, P)]> = sources.iter().map(|s| s.table()).collect::<Result<_>>()?;
    let partials: Vec<Partial<P>> = tables[0]
        .par_iter()
        .map(|first| enumerate_rest(first, &tables[1..], &f))
        .collect::<Result<_>>()?;

    let mut lens: Option<Vec<usize>> = None;
    let mut merged: BTreeMap<BitString, P> = BTreeMap::new();
    for (l, part) in partials {
        match (&lens, l) {
            (None, Some(l)) => lens = Some(l),
            (Some(a), Some(b)) if *a != b => {
                return domain(format!("map output shape changed from {a:?} to {b:?}"));
            }
            _ => {}
        }
        for (k, p) in part {
            let e = merged.entry(k).or_insert_with(P::zero);
            *e = *e + p;
        }
    }
    let lens = lens.ok_or_else(|| Error::Domain("empty support".into()))?;
    Ok(JointTable::from_parts_unchecked(lens, merged))
}

type Partial<P> = (Option<Vec<usize>>, BTreeMap<BitString, P>);

fn enumerate_rest<P, F>(first: &(BitString, P), rest: &[&[(BitString, P)]], f: &F) -> Result<Partial<P>>
where
    P: Probability,
    F: Fn(&[&BitString]) -> Result<Vec<BitString>>,
{
    let mut out: BTreeMap<BitString, P> = BTreeMap::new();
    let mut lens: Option<Vec<usize>> = None;
    let mut idx = vec![0usize; rest.len()];
    if rest.iter().any(|t| t.is_empty()) {
        return Ok((None, out));
    }
    loop {
        let mut args: Vec<&BitString> = Vec::with_capacity(rest.len() + 1);
        args.push(&first.0);
        let mut w = first.1;
        for (t, &i) in rest.iter().zip(&idx) {
            args.push(&t[i].0);
            w = w * t[i].1;
        }
        let vals = f(&args)?;
        let these: Vec<usize> = vals.iter().map(|v| v.len()).collect();
        match &lens {
            None => lens = Some(these),
            Some(l) if *l != these => {
                return domain(format!("map output shape changed from {l:?} to {these:?}"));
            }
            _ => {}
        }
        let e = out.entry(BitString::concat_all(&vals)).or_insert_with(P::zero);
        *e = *e + w;

        // Odometer over the remaining supports, last source fastest.
        let mut pos = rest.len();
        loop {
            if pos == 0 {
                return Ok((lens, out));
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < rest[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Fails with a guard error when enumerating `sources` exceeds `budget`.
pub fn check_budget<P: Probability>(what: &str, sources: &[&DiscreteSource<P>], budget: u128) -> Result<()> {
    guard(what, product_size(sources)?, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational64;

    #[test]
    fn identity_and_xor() {
        let u = DiscreteSource::<Rational64>::uniform(3);
        let t = push_forward(&[&u], |a| Ok(vec![a[0].clone()]), ENUMERATION_BUDGET).unwrap();
        assert_eq!(t, JointTable::from_source(&u).unwrap());

        let b = DiscreteSource::<Rational64>::uniform(1);
        let x = push_forward(&[&b, &b], |a| Ok(vec![a[0].xor(a[1])?]), ENUMERATION_BUDGET).unwrap();
        assert_eq!(x, JointTable::uniform(vec![1]).unwrap());
    }

    #[test]
    fn budget_guard() {
        let u = DiscreteSource::<f64>::uniform(4);
        let err = push_forward(&[&u, &u], |a| Ok(vec![a[0].clone()]), 100).unwrap_err();
        assert!(matches!(
            err,
            Error::Guard {
                needed: 256,
                budget: 100,
                ..
            }
        ));
    }

    #[test]
    fn marginal_consistency() {
        let u = DiscreteSource::<Rational64>::uniform(2);
        let v = DiscreteSource::from_weights(
            2,
            [
                (BitString::from_u64(0, 2), Rational64::new(1, 2)),
                (BitString::from_u64(3, 2), Rational64::new(1, 2)),
            ],
        )
        .unwrap();
        let f1 = |a: &BitString, b: &BitString| a.xor(b).unwrap();
        let f2 = |a: &BitString, b: &BitString| a.concat(b).prefix(3).unwrap();
        let joint = push_forward(
            &[&u, &v],
            |a| Ok(vec![f1(a[0], a[1]), f2(a[0], a[1])]),
            ENUMERATION_BUDGET,
        )
        .unwrap();
        let only2 = push_forward(&[&u, &v], |a| Ok(vec![f2(a[0], a[1])]), ENUMERATION_BUDGET).unwrap();
        assert_eq!(joint.marginal(&[1]).unwrap(), only2);
    }
}
