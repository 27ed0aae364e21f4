use rand::Rng;
use serde::Serialize;

use crate::bits::BitString;
use crate::error::{domain, Result};
use crate::rng::ExperimentRng;
use crate::scalar::Probability;
use crate::sources::{sample, DiscreteSource};

pub const MC_MAX_OUTPUT_BITS: usize = 20;
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// A plug-in distance estimate. The plug-in estimator is biased upward
/// (an empirical distribution is never closer to uniform than its mean),
/// so reports carry the `BIASED-UP` flag.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub half_width: f64,
    pub lower: f64,
    pub upper: f64,
    pub samples: usize,
    pub flag: &'static str,
}

/// Estimates the distance of `f(sources)` from uniform over `out_len` bits.
///
/// The interval is `estimate +- half_width`, where `half_width` is the 99th
/// percentile of `|p* - p|` over bootstrap resamples `p*` of the empirical
/// distribution `p`. Since `| |p - U| - |q - U| | <= |p - q|`, this
/// percentile tracks the fluctuation of the plug-in estimate.
pub fn mc_distance_upper<P, F>(
    sources: &[&DiscreteSource<P>],
    f: F,
    out_len: usize,
    samples: usize,
    rng: &mut ExperimentRng,
) -> Result<McEstimate>
where
    P: Probability,
    F: Fn(&[&BitString]) -> Result<BitString>,
{
    if out_len > MC_MAX_OUTPUT_BITS {
        return domain(format!(
            "plug-in estimate over {out_len} output bits is unreliable (limit {MC_MAX_OUTPUT_BITS}); use a collision-based tester"
        ));
    }
    if samples == 0 {
        return domain("Monte Carlo estimate needs at least one sample");
    }
    let cells = 1usize << out_len;
    let mut counts = vec![0u64; cells];
    for _ in 0..samples {
        let draws: Vec<BitString> = sources.iter().map(|s| sample(s, rng)).collect();
        let refs: Vec<&BitString> = draws.iter().collect();
        let out = f(&refs)?;
        if out.len() != out_len {
            return domain(format!("map produced {} bits, expected {out_len}", out.len()));
        }
        counts[out.to_u64() as usize] += 1;
    }
    let estimate = tv_counts_vs_uniform(&counts, samples, out_len);

    // Bootstrap: resample from the empirical distribution.
    let seen: Vec<(usize, u64)> = counts.iter().copied().enumerate().filter(|(_, c)| *c > 0).collect();
    let cdf: Vec<u64> = seen
        .iter()
        .scan(0u64, |acc, (_, c)| {
            *acc += c;
            Some(*acc)
        })
        .collect();
    let mut gaps = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut boot = vec![0u64; seen.len()];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        boot.iter_mut().for_each(|c| *c = 0);
        for _ in 0..samples {
            let u = rng.random_range(0..samples as u64);
            let i = cdf.partition_point(|&c| c <= u);
            boot[i] += 1;
        }
        let gap: f64 = seen
            .iter()
            .zip(&boot)
            .map(|((_, c), b)| (*c as f64 - *b as f64).abs())
            .sum::<f64>()
            / (2.0 * samples as f64);
        gaps.push(gap);
    }
    gaps.sort_by(|a, b| a.total_cmp(b));
    let idx = ((BOOTSTRAP_RESAMPLES as f64 * 0.99).ceil() as usize).saturating_sub(1);
    let half_width = gaps[idx.min(gaps.len() - 1)];
    Ok(McEstimate {
        estimate,
        half_width,
        lower: (estimate - half_width).max(0.0),
        upper: (estimate + half_width).min(1.0),
        samples,
        flag: "BIASED-UP",
    })
}

fn tv_counts_vs_uniform(counts: &[u64], samples: usize, out_len: usize) -> f64 {
    let u = (-(out_len as f64)).exp2();
    let mut sum = 0.0;
    let mut unseen = 0u64;
    for &c in counts {
        if c == 0 {
            unseen += 1;
        } else {
            sum += (c as f64 / samples as f64 - u).abs();
        }
    }
    (sum + unseen as f64 * u) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn point_mass_is_exact() {
        let p = DiscreteSource::<f64>::point(BitString::from_u64(5, 3));
        let e = mc_distance_upper(&[&p], |a| Ok(a[0].clone()), 3, 1000, &mut rng_from_seed(1)).unwrap();
        assert_eq!(e.estimate, 1.0 - 1.0 / 8.0);
        assert_eq!(e.half_width, 0.0);
    }

    #[test]
    fn uniform_estimate_is_small() {
        let u = DiscreteSource::<f64>::uniform(4);
        let e = mc_distance_upper(&[&u], |a| Ok(a[0].clone()), 4, 100_000, &mut rng_from_seed(2)).unwrap();
        // Plug-in bias for 16 cells at 10^5 draws is about 0.005.
        assert!(e.estimate <= 0.05);
        assert_eq!(e.flag, "BIASED-UP");
    }

    #[test]
    fn guard_and_convergence() {
        let u = DiscreteSource::<f64>::uniform(2);
        assert!(mc_distance_upper(&[&u], |_| Ok(BitString::zeros(21)), 21, 10, &mut rng_from_seed(0)).is_err());
        let small = mc_distance_upper(&[&u], |a| Ok(a[0].clone()), 2, 1_000, &mut rng_from_seed(3)).unwrap();
        let large = mc_distance_upper(&[&u], |a| Ok(a[0].clone()), 2, 100_000, &mut rng_from_seed(3)).unwrap();
        assert!(large.half_width < small.half_width);
    }
}
