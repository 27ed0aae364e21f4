use std::collections::BTreeSet;

use rand::seq::index;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::extractors::search::{binomial, for_each_combination};
use crate::rng::ExperimentRng;
use crate::scalar::Probability;

use super::{distance_from_uniform, JointTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubsetPlan {
    All,
    /// This many distinct subsets drawn uniformly; all of them if fewer exist.
    Sampled(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubsetDistance {
    /// 0-based variable indices.
    pub rows: Vec<usize>,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HwiseReport {
    pub h: usize,
    pub worst: f64,
    pub subsets: Vec<SubsetDistance>,
}

/// Subsets of `0..n` of size `h` chosen by `plan`, in ascending order.
pub fn choose_subsets(n: usize, h: usize, plan: SubsetPlan, rng: &mut ExperimentRng) -> Vec<Vec<usize>> {
    let total = binomial(n as u128, h as u128);
    match plan {
        SubsetPlan::Sampled(count) if (count as u128) < total => {
            let mut seen = BTreeSet::new();
            while seen.len() < count {
                let mut s = index::sample(rng, n, h).into_vec();
                s.sort_unstable();
                seen.insert(s);
            }
            seen.into_iter().collect()
        }
        _ => {
            let mut out = Vec::new();
            for_each_combination(0, n, h, |c| out.push(c.to_vec()));
            out
        }
    }
}

/// Distance from uniform of the joint marginal of each chosen `h`-subset of
/// the table's variables (one variable per row).
pub fn hwise_report<P: Probability>(
    joint: &JointTable<P>,
    h: usize,
    plan: SubsetPlan,
    rng: &mut ExperimentRng,
) -> Result<HwiseReport> {
    let n = joint.var_lens().len();
    if h == 0 || h > n {
        return domain(format!("subset size {h} with {n} rows"));
    }
    let mut subsets = Vec::new();
    let mut worst: f64 = 0.0;
    for rows in choose_subsets(n, h, plan, rng) {
        let distance = distance_from_uniform(&joint.marginal(&rows)?).to_f64_lossy();
        worst = worst.max(distance);
        subsets.push(SubsetDistance { rows, distance });
    }
    Ok(HwiseReport { h, worst, subsets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{push_forward, ENUMERATION_BUDGET};
    use crate::rng::rng_from_seed;
    use crate::scalar::Rational64;
    use crate::sources::DiscreteSource;

    #[test]
    fn whole_table_and_products() {
        let mut rng = rng_from_seed(0);
        let u = JointTable::<Rational64>::uniform(vec![1, 1, 1]).unwrap();
        let r = hwise_report(&u, 2, SubsetPlan::All, &mut rng).unwrap();
        assert_eq!(r.subsets.len(), 3);
        assert_eq!(r.worst, 0.0);
        let all = hwise_report(&u, 3, SubsetPlan::All, &mut rng).unwrap();
        assert_eq!(all.subsets.len(), 1);
    }

    #[test]
    fn duplicated_rows_closed_form() {
        // Rows (A, A, B) with A, B uniform 2-bit strings: the pair {0, 1}
        // is (U, U-copy), at distance 1 - 2^-2 from uniform over 4 bits.
        let u = DiscreteSource::<Rational64>::uniform(2);
        let joint = push_forward(
            &[&u, &u],
            |a| Ok(vec![a[0].clone(), a[0].clone(), a[1].clone()]),
            ENUMERATION_BUDGET,
        )
        .unwrap();
        let r = hwise_report(&joint, 2, SubsetPlan::All, &mut rng_from_seed(1)).unwrap();
        assert_eq!(r.worst, 0.75);
        assert_eq!(r.subsets.iter().filter(|s| s.distance == 0.0).count(), 2);
        let single = hwise_report(&joint, 1, SubsetPlan::All, &mut rng_from_seed(1)).unwrap();
        assert!(single.worst <= r.worst);
    }

    #[test]
    fn sampling_is_distinct_and_bounded() {
        let mut rng = rng_from_seed(5);
        let s = choose_subsets(10, 3, SubsetPlan::Sampled(7), &mut rng);
        assert_eq!(s.len(), 7);
        assert_eq!(choose_subsets(4, 2, SubsetPlan::Sampled(100), &mut rng).len(), 6);
    }
}
