//! Weak random sources: explicit distributions, flat sources and block
//! sources, with exact min-entropy and seeded sampling.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use rand::seq::index;
use rand::Rng;

use crate::bits::BitString;
use crate::error::{domain, Error, Result};
use crate::rng::ExperimentRng;
use crate::scalar::Probability;

mod file;
pub use file::SourceFile;

type SamplerFn = dyn Fn(&mut ExperimentRng) -> BitString + Send + Sync;

#[derive(Clone)]
pub enum SourceMode<P> {
    /// Support in lexicographic order with strictly positive weights.
    Exact(Vec<(BitString, P)>),
    Sampler(Arc<SamplerFn>),
}

/// A distribution over `n`-bit strings.
#[derive(Clone)]
pub struct DiscreteSource<P> {
    n: usize,
    mode: SourceMode<P>,
}

impl<P> fmt::Debug for DiscreteSource<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.mode {
            SourceMode::Exact(t) => f
                .debug_struct("DiscreteSource")
                .field("n", &self.n)
                .field("support", &t.len())
                .finish(),
            SourceMode::Sampler(_) => f
                .debug_struct("DiscreteSource")
                .field("n", &self.n)
                .field("mode", &"sampler")
                .finish(),
        }
    }
}

impl<P: Probability> DiscreteSource<P> {
    /// Builds an exact source. Duplicate strings are merged and zero weights
    /// dropped; weights must be non-negative and sum to one.
    pub fn from_weights(n: usize, weights: impl IntoIterator<Item = (BitString, P)>) -> Result<Self> {
        let mut merged: BTreeMap<BitString, P> = BTreeMap::new();
        for (s, w) in weights {
            if s.len() != n {
                return domain(format!("support element of {} bits in an {n}-bit source", s.len()));
            }
            if w < P::zero() {
                return domain(format!("negative weight {w}"));
            }
            let e = merged.entry(s).or_insert_with(P::zero);
            *e = *e + w;
        }
        let table: Vec<(BitString, P)> = merged.into_iter().filter(|(_, w)| !w.is_zero()).collect();
        let total = table.iter().fold(P::zero(), |acc, (_, w)| acc + *w);
        if !total.approx_eq(P::one()) {
            return domain(format!("weights sum to {total}, not 1"));
        }
        Ok(DiscreteSource {
            n,
            mode: SourceMode::Exact(table),
        })
    }

    pub fn uniform(n: usize) -> Self {
        FlatSource::full(n).to_source()
    }

    pub fn point(value: BitString) -> Self {
        DiscreteSource {
            n: value.len(),
            mode: SourceMode::Exact(vec![(value, P::one())]),
        }
    }

    pub fn sampler(n: usize, f: impl Fn(&mut ExperimentRng) -> BitString + Send + Sync + 'static) -> Self {
        DiscreteSource {
            n,
            mode: SourceMode::Sampler(Arc::new(f)),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> &SourceMode<P> {
        &self.mode
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.mode, SourceMode::Exact(_))
    }

    /// Support and weights in lexicographic order.
    pub fn table(&self) -> Result<&[(BitString, P)]> {
        match &self.mode {
            SourceMode::Exact(t) => Ok(t),
            SourceMode::Sampler(_) => Err(Error::UnsupportedMode),
        }
    }

    pub fn support_size(&self) -> Result<usize> {
        Ok(self.table()?.len())
    }

    pub fn prob(&self, x: &BitString) -> Result<P> {
        let t = self.table()?;
        Ok(t.binary_search_by(|(s, _)| s.cmp(x))
            .map(|i| t[i].1)
            .unwrap_or_else(|_| P::zero()))
    }

    /// Converts weights to another scalar type.
    pub fn cast<Q: Probability>(&self) -> Result<DiscreteSource<Q>> {
        let t = self.table()?;
        let conv = t
            .iter()
            .map(|(s, w)| {
                let q =
                    Q::from_f64(w.to_f64_lossy()).ok_or_else(|| Error::Domain(format!("cannot convert weight {w}")))?;
                Ok((s.clone(), q))
            })
            .collect::<Result<Vec<_>>>()?;
        // Renormalization is not attempted; conversion error stays within tolerance
        // for the dyadic weights used throughout.
        DiscreteSource::from_weights(self.n, conv)
    }

    /// Distribution of `f(x)`.
    pub fn map(&self, out_len: usize, f: impl Fn(&BitString) -> BitString) -> Result<Self> {
        let t = self.table()?;
        DiscreteSource::from_weights(out_len, t.iter().map(|(s, w)| (f(s), *w)))
    }
}

/// Min-entropy `min_x log2(1 / Pr[X = x])`, in bits.
pub fn min_entropy<P: Probability>(s: &DiscreteSource<P>) -> Result<f64> {
    let t = s.table()?;
    let max = t
        .iter()
        .map(|(_, w)| *w)
        .fold(P::zero(), |a, b| if b > a { b } else { a });
    Ok(-max.to_f64_lossy().log2())
}

/// Draws one value. Exact sources use inverse-CDF sampling over the
/// lexicographic support order with one `f64` draw from `rng`.
pub fn sample<P: Probability>(s: &DiscreteSource<P>, rng: &mut ExperimentRng) -> BitString {
    match &s.mode {
        SourceMode::Sampler(f) => f(rng),
        SourceMode::Exact(t) => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (x, w) in t {
                acc += w.to_f64_lossy();
                if u < acc {
                    return x.clone();
                }
            }
            t.last().expect("non-empty support").0.clone()
        }
    }
}

/// Uniform distribution over a set of equal-length strings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatSource {
    n: usize,
    support: Vec<BitString>,
}

impl FlatSource {
    pub fn new(n: usize, support: impl IntoIterator<Item = BitString>) -> Result<Self> {
        let set: BTreeSet<BitString> = support.into_iter().collect();
        if set.is_empty() {
            return domain("flat source with empty support");
        }
        if let Some(bad) = set.iter().find(|s| s.len() != n) {
            return domain(format!("support element {bad} is not {n} bits"));
        }
        Ok(FlatSource {
            n,
            support: set.into_iter().collect(),
        })
    }

    pub fn full(n: usize) -> Self {
        FlatSource {
            n,
            support: BitString::all(n).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> &[BitString] {
        &self.support
    }

    pub fn min_entropy(&self) -> f64 {
        (self.support.len() as f64).log2()
    }

    pub fn to_source<P: Probability>(&self) -> DiscreteSource<P> {
        let w = P::ratio(1, self.support.len() as u64);
        DiscreteSource {
            n: self.n,
            mode: SourceMode::Exact(self.support.iter().map(|s| (s.clone(), w)).collect()),
        }
    }
}

/// A joint distribution over concatenated blocks with per-block entropy claims.
#[derive(Clone, Debug)]
pub struct BlockSource<P> {
    block_lens: Vec<usize>,
    joint: DiscreteSource<P>,
    claimed_k: Vec<f64>,
}

impl<P: Probability> BlockSource<P> {
    pub fn new(block_lens: Vec<usize>, joint: DiscreteSource<P>, claimed_k: Vec<f64>) -> Result<Self> {
        if block_lens.len() != claimed_k.len() {
            return domain("one entropy claim per block is required");
        }
        if block_lens.iter().sum::<usize>() != joint.n() {
            return domain(format!(
                "block lengths sum to {}, joint source has {} bits",
                block_lens.iter().sum::<usize>(),
                joint.n()
            ));
        }
        joint.table()?;
        Ok(BlockSource {
            block_lens,
            joint,
            claimed_k,
        })
    }

    /// Product of independent blocks, each claiming its own min-entropy.
    pub fn independent(blocks: &[DiscreteSource<P>]) -> Result<Self> {
        let mut joint: Vec<(BitString, P)> = vec![(BitString::empty(), P::one())];
        for b in blocks {
            let t = b.table()?;
            joint = joint
                .iter()
                .flat_map(|(pre, pw)| t.iter().map(move |(s, w)| (pre.concat(s), *pw * *w)))
                .collect();
        }
        let lens: Vec<usize> = blocks.iter().map(|b| b.n()).collect();
        let claims = blocks.iter().map(min_entropy).collect::<Result<Vec<_>>>()?;
        let n = lens.iter().sum();
        BlockSource::new(lens, DiscreteSource::from_weights(n, joint)?, claims)
    }

    pub fn block_lens(&self) -> &[usize] {
        &self.block_lens
    }

    pub fn joint(&self) -> &DiscreteSource<P> {
        &self.joint
    }

    pub fn claimed_k(&self) -> &[f64] {
        &self.claimed_k
    }

    fn offset(&self, block: usize) -> usize {
        self.block_lens[..block].iter().sum()
    }

    /// Distribution of `block` given that the preceding blocks equal `prefix`.
    pub fn conditional(&self, block: usize, prefix: &BitString) -> Result<DiscreteSource<P>> {
        if block >= self.block_lens.len() {
            return domain(format!("block {block} out of range"));
        }
        let off = self.offset(block);
        if prefix.len() != off {
            return domain(format!(
                "prefix has {} bits, blocks before {block} span {off}",
                prefix.len()
            ));
        }
        let len = self.block_lens[block];
        let mut cond: BTreeMap<BitString, P> = BTreeMap::new();
        let mut total = P::zero();
        for (s, w) in self.joint.table()? {
            if s.prefix(off)? == *prefix {
                let e = cond.entry(s.slice(off, len)?).or_insert_with(P::zero);
                *e = *e + *w;
                total = total + *w;
            }
        }
        if total.is_zero() {
            return domain(format!("prefix {prefix} has probability zero"));
        }
        let table: Vec<_> = cond.into_iter().map(|(s, w)| (s, w / total)).collect();
        Ok(DiscreteSource {
            n: len,
            mode: SourceMode::Exact(table),
        })
    }

    /// Checks every positive-probability prefix against the per-block claims.
    pub fn validate(&self) -> Result<()> {
        for block in 0..self.block_lens.len() {
            let off = self.offset(block);
            let prefixes: BTreeSet<BitString> = self
                .joint
                .table()?
                .iter()
                .map(|(s, _)| s.prefix(off))
                .collect::<Result<_>>()?;
            for p in prefixes {
                let h = conditional_min_entropy(self, block, &p)?;
                if h + 1e-9 < self.claimed_k[block] {
                    return domain(format!(
                        "block {block} has min-entropy {h} given prefix {p}, claimed {}",
                        self.claimed_k[block]
                    ));
                }
            }
        }
        Ok(())
    }
}

pub fn conditional_min_entropy<P: Probability>(s: &BlockSource<P>, block: usize, prefix: &BitString) -> Result<f64> {
    min_entropy(&s.conditional(block, prefix)?)
}

/// Kinds of members in an adversarial flat battery, assigned round-robin.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlatKind {
    Random,
    Affine,
    PrefixFixed,
    LowWeight,
}

const KINDS: [FlatKind; 4] = [
    FlatKind::Random,
    FlatKind::Affine,
    FlatKind::PrefixFixed,
    FlatKind::LowWeight,
];

/// `count` flat `(n, k)` sources cycling through random, affine-subspace,
/// prefix-fixed and low-Hamming-weight supports. The first prefix-fixed
/// member fixes the all-zero prefix and the first low-weight member is the
/// Hamming ball around zero; later members are randomized.
pub fn adversarial_flat_battery(n: usize, k: usize, count: usize, rng: &mut ExperimentRng) -> Result<Vec<FlatSource>> {
    Ok(adversarial_flat_battery_kinds(n, k, count, rng)?
        .into_iter()
        .map(|(_, s)| s)
        .collect())
}

pub fn adversarial_flat_battery_kinds(
    n: usize,
    k: usize,
    count: usize,
    rng: &mut ExperimentRng,
) -> Result<Vec<(FlatKind, FlatSource)>> {
    if k > n {
        return domain(format!("flat source with 2^{k} > 2^{n} support"));
    }
    if n > 32 || k > 24 {
        return domain(format!("battery at n={n}, k={k} is beyond desk scale"));
    }
    let mut out = Vec::with_capacity(count);
    let mut seen = [0usize; 4];
    for i in 0..count {
        let kind = KINDS[i % 4];
        let nth = seen[i % 4];
        seen[i % 4] += 1;
        let support = match kind {
            FlatKind::Random => random_support(n, k, rng),
            FlatKind::Affine => affine_support(n, k, rng),
            FlatKind::PrefixFixed => {
                let prefix = if nth == 0 {
                    0
                } else {
                    rng.random_range(0..1u64 << (n - k))
                };
                (0..1u64 << k).map(|low| (prefix << k) | low).collect()
            }
            FlatKind::LowWeight => {
                let center = if nth == 0 { 0 } else { rng.random_range(0..1u64 << n) };
                low_weight_support(n, k).into_iter().map(|v| v ^ center).collect()
            }
        };
        let source = FlatSource::new(n, support.into_iter().map(|v: u64| BitString::from_u64(v, n)))?;
        debug_assert_eq!(source.support().len(), 1 << k);
        out.push((kind, source));
    }
    Ok(out)
}

fn random_support(n: usize, k: usize, rng: &mut ExperimentRng) -> Vec<u64> {
    index::sample(rng, 1usize << n, 1usize << k)
        .into_iter()
        .map(|v| v as u64)
        .collect()
}

/// Span of `k` random independent vectors, shifted by a random offset.
fn affine_support(n: usize, k: usize, rng: &mut ExperimentRng) -> Vec<u64> {
    let mut basis: Vec<u64> = Vec::with_capacity(k);
    while basis.len() < k {
        let v = rng.random_range(1..1u64 << n);
        if !in_span(&basis, v) {
            basis.push(v);
        }
    }
    let offset = rng.random_range(0..1u64 << n);
    (0..1u64 << k)
        .map(|coeffs| {
            basis
                .iter()
                .enumerate()
                .filter(|(j, _)| coeffs >> j & 1 == 1)
                .fold(offset, |acc, (_, b)| acc ^ b)
        })
        .collect()
}

fn in_span(basis: &[u64], v: u64) -> bool {
    // Gaussian elimination on a copy; basis is tiny.
    let mut rows: Vec<u64> = basis.to_vec();
    let mut v = v;
    for bit in (0..64).rev() {
        let mask = 1u64 << bit;
        if let Some(p) = rows.iter().position(|r| r & mask != 0) {
            let pivot = rows.swap_remove(p);
            for r in rows.iter_mut() {
                if *r & mask != 0 {
                    *r ^= pivot;
                }
            }
            if v & mask != 0 {
                v ^= pivot;
            }
        }
    }
    v == 0
}

/// The `2^k` smallest strings in (weight, value) order.
fn low_weight_support(n: usize, k: usize) -> Vec<u64> {
    let mut all: Vec<u64> = Vec::with_capacity(1 << k);
    for w in 0..=n as u32 {
        // Walk values of exactly weight w in increasing order (Gosper's hack).
        if w == 0 {
            all.push(0);
        } else {
            let mut v: u64 = (1u64 << w) - 1;
            while v < 1u64 << n {
                all.push(v);
                if all.len() == 1 << k {
                    return all;
                }
                let c = v & v.wrapping_neg();
                let r = v + c;
                v = (((r ^ v) >> 2) / c) | r;
            }
        }
        if all.len() >= 1 << k {
            break;
        }
    }
    all.truncate(1 << k);
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::scalar::Rational64;
    use crate::scalar::Rational64 as Ratio;

    fn bs(s: &str) -> BitString {
        BitString::parse_binary(s).unwrap()
    }

    #[test]
    fn min_entropy_examples() {
        assert_eq!(min_entropy(&DiscreteSource::<f64>::uniform(3)).unwrap(), 3.0);
        let flat = FlatSource::new(8, (0..4).map(|v| BitString::from_u64(v * 17, 8))).unwrap();
        assert_eq!(min_entropy(&flat.to_source::<f64>()).unwrap(), 2.0);
        let table = DiscreteSource::from_weights(
            2,
            [
                (bs("00"), Ratio::new(1, 2)),
                (bs("01"), Ratio::new(1, 4)),
                (bs("10"), Ratio::new(1, 4)),
            ],
        )
        .unwrap();
        assert_eq!(min_entropy::<Rational64>(&table).unwrap(), 1.0);
    }

    #[test]
    fn sampler_mode_rejects_exact_queries() {
        let s = DiscreteSource::<f64>::sampler(3, |_| BitString::zeros(3));
        assert!(matches!(min_entropy(&s), Err(Error::UnsupportedMode)));
    }

    #[test]
    fn weights_are_validated() {
        assert!(DiscreteSource::from_weights(1, [(bs("0"), 0.5), (bs("1"), 0.4)]).is_err());
        assert!(DiscreteSource::from_weights(1, [(bs("0"), 1.5), (bs("1"), -0.5)]).is_err());
        assert!(DiscreteSource::from_weights(2, [(bs("0"), 1.0)]).is_err());
        let merged = DiscreteSource::from_weights(1, [(bs("1"), 0.5), (bs("1"), 0.5), (bs("0"), 0.0)]).unwrap();
        assert_eq!(merged.support_size().unwrap(), 1);
    }

    #[test]
    fn flat_min_entropy_is_log_support_exhaustive() {
        let mut rng = rng_from_seed(5);
        for n in 1..=12usize {
            for k in 0..=n.min(8) {
                for f in adversarial_flat_battery(n, k, 4, &mut rng).unwrap() {
                    assert_eq!(f.min_entropy(), k as f64);
                    assert_eq!(min_entropy(&f.to_source::<Rational64>()).unwrap(), k as f64);
                }
            }
        }
    }

    #[test]
    fn conditional_min_entropy_cases() {
        let u = DiscreteSource::<Rational64>::uniform(2);
        let ind = BlockSource::independent(&[u.clone(), u.clone()]).unwrap();
        for p in BitString::all(2) {
            assert_eq!(conditional_min_entropy(&ind, 1, &p).unwrap(), 2.0);
        }
        ind.validate().unwrap();

        // Second block copies the first.
        let copied =
            DiscreteSource::from_weights(4, BitString::all(2).map(|v| (v.concat(&v), Ratio::new(1, 4)))).unwrap();
        let bs_copy = BlockSource::new(vec![2, 2], copied, vec![2.0, 1.0]).unwrap();
        assert_eq!(conditional_min_entropy(&bs_copy, 1, &bs("10")).unwrap(), 0.0);
        assert!(bs_copy.validate().is_err());

        // 4-bit table: prefix 0 -> {00: 1/2, 01: 1/4, 11: 1/4}; prefix 1 -> uniform over {10, 11}.
        let table = DiscreteSource::from_weights(
            3,
            [
                (bs("000"), Ratio::new(1, 4)),
                (bs("001"), Ratio::new(1, 8)),
                (bs("011"), Ratio::new(1, 8)),
                (bs("110"), Ratio::new(1, 4)),
                (bs("111"), Ratio::new(1, 4)),
            ],
        )
        .unwrap();
        let two = BlockSource::new(vec![1, 2], table, vec![1.0, 1.0]).unwrap();
        assert_eq!(conditional_min_entropy(&two, 1, &bs("0")).unwrap(), 1.0);
        assert_eq!(conditional_min_entropy(&two, 1, &bs("1")).unwrap(), 1.0);
        assert_eq!(conditional_min_entropy(&two, 0, &BitString::empty()).unwrap(), 1.0);
        two.validate().unwrap();

        let zero_prefix = BlockSource::new(
            vec![1, 1],
            DiscreteSource::from_weights(2, [(bs("00"), Rational64::from_integer(1))]).unwrap(),
            vec![0.0, 0.0],
        )
        .unwrap();
        assert!(conditional_min_entropy(&zero_prefix, 1, &bs("1")).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let point = DiscreteSource::<f64>::point(bs("1010"));
        assert_eq!(sample(&point, &mut rng_from_seed(1)), bs("1010"));

        let flat = FlatSource::new(3, [bs("001"), bs("110")]).unwrap().to_source::<f64>();
        let a: Vec<_> = {
            let mut r = rng_from_seed(42);
            (0..32).map(|_| sample(&flat, &mut r)).collect()
        };
        let b: Vec<_> = {
            let mut r = rng_from_seed(42);
            (0..32).map(|_| sample(&flat, &mut r)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_frequencies_match() {
        let u = DiscreteSource::<f64>::uniform(2);
        let mut rng = rng_from_seed(9);
        let mut counts = [0usize; 4];
        let draws = 100_000;
        for _ in 0..draws {
            counts[sample(&u, &mut rng).to_u64() as usize] += 1;
        }
        for c in counts {
            assert!((c as f64 / draws as f64 - 0.25).abs() <= 0.01);
        }
    }

    #[test]
    fn battery_contracts() {
        let mut rng = rng_from_seed(3);
        let one = adversarial_flat_battery(4, 4, 1, &mut rng).unwrap();
        assert_eq!(one[0], FlatSource::full(4));

        let ten = adversarial_flat_battery(8, 3, 10, &mut rng).unwrap();
        assert_eq!(ten.len(), 10);
        assert!(ten.iter().all(|f| f.support().len() == 8));

        let kinds = adversarial_flat_battery_kinds(8, 4, 4, &mut rng).unwrap();
        let (kind, prefixed) = &kinds[2];
        assert_eq!(*kind, FlatKind::PrefixFixed);
        let expected: Vec<_> = (0..16).map(|v| BitString::from_u64(v, 8)).collect();
        assert_eq!(prefixed.support(), &expected[..]);

        assert!(adversarial_flat_battery(4, 5, 1, &mut rng).is_err());
    }

    #[test]
    fn affine_members_are_cosets() {
        let mut rng = rng_from_seed(11);
        for (kind, f) in adversarial_flat_battery_kinds(10, 4, 12, &mut rng).unwrap() {
            if kind != FlatKind::Affine {
                continue;
            }
            let vals: BTreeSet<u64> = f.support().iter().map(|s| s.to_u64()).collect();
            let base = *vals.iter().next().unwrap();
            // x ^ y ^ base stays in a coset of a linear subspace.
            for &x in &vals {
                for &y in &vals {
                    assert!(vals.contains(&(x ^ y ^ base)));
                }
            }
        }
    }
}
