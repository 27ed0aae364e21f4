use std::collections::BTreeMap;
use std::sync::Arc;

use mse_core::alternating::{alternating_extraction, AltExtConfig};
use mse_core::eval::{
    hwise_report, mc_distance_upper, push_forward, statistical_distance, strong_distance, JointTable, SubsetPlan,
    ENUMERATION_BUDGET,
};
use mse_core::extractors::{
    toeplitz_extractor, verify_bad_set_bound, worst_flat_strong_distance, ExtRef, LookupExtractor, ToeplitzFamily,
};
use mse_core::lightestbin::lightest_bin;
use mse_core::rng::rng_from_seed;
use mse_core::sources::{sample, DiscreteSource, FlatSource};
use mse_core::BitString;
use proptest::prelude::*;

fn table_from_weights(bits: usize, weights: &[u32]) -> JointTable<f64> {
    let total: u32 = weights.iter().sum::<u32>().max(1);
    let map: BTreeMap<BitString, f64> = weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0)
        .map(|(i, &w)| (BitString::from_u64(i as u64, bits), w as f64 / total as f64))
        .collect();
    JointTable::new(vec![bits], map).unwrap()
}

fn weights(bits: usize) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..20, 1 << bits).prop_filter("nonzero", |w| w.iter().any(|&x| x > 0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn statistical_distance_is_a_metric(a in weights(3), b in weights(3), c in weights(3)) {
        let (p, q, r) = (table_from_weights(3, &a), table_from_weights(3, &b), table_from_weights(3, &c));
        let tol = (-38f64).exp2();
        let pq = statistical_distance(&p, &q).unwrap();
        prop_assert!((pq - statistical_distance(&q, &p).unwrap()).abs() <= tol);
        prop_assert!(statistical_distance(&p, &p).unwrap() <= tol);
        let pr = statistical_distance(&p, &r).unwrap();
        let rq = statistical_distance(&r, &q).unwrap();
        prop_assert!(pq <= pr + rq + tol);
        prop_assert!((0.0..=1.0 + tol).contains(&pq));
    }

    #[test]
    fn marginal_of_push_forward_is_push_forward_of_component(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let f1 = LookupExtractor::random(3, 0, 2, &mut rng).unwrap();
        let f2 = LookupExtractor::random(3, 0, 1, &mut rng).unwrap();
        let src = DiscreteSource::<f64>::uniform(3);
        let both = push_forward(&[&src], |a| Ok(vec![
            BitString::from_u64(f1.get(a[0].to_u64(), 0), 2),
            BitString::from_u64(f2.get(a[0].to_u64(), 0), 1),
        ]), ENUMERATION_BUDGET).unwrap();
        let first = push_forward(&[&src], |a| Ok(vec![BitString::from_u64(f1.get(a[0].to_u64(), 0), 2)]), ENUMERATION_BUDGET).unwrap();
        let m = both.marginal(&[0]).unwrap();
        prop_assert!(statistical_distance(&m, &first).unwrap() < 1e-12);
    }

    #[test]
    fn hwise_worst_shrinks_with_h(seed in any::<u64>()) {
        // Four 1-bit rows, each a random function of a 3-bit uniform input.
        let mut rng = rng_from_seed(seed);
        let fs: Vec<LookupExtractor> = (0..4).map(|_| LookupExtractor::random(3, 0, 1, &mut rng).unwrap()).collect();
        let src = DiscreteSource::<f64>::uniform(3);
        let joint = push_forward(&[&src], |a| Ok(fs.iter().map(|f| BitString::from_u64(f.get(a[0].to_u64(), 0), 1)).collect()), ENUMERATION_BUDGET).unwrap();
        let mut prev = f64::INFINITY;
        for h in (1..=4).rev() {
            let w = hwise_report(&joint, h, SubsetPlan::All, &mut rng).unwrap().worst;
            prop_assert!(w <= prev + 1e-12);
            prev = w;
        }
    }

    #[test]
    fn extractors_are_deterministic(seed in any::<u64>(), x in 0u64..64, s in 0u64..16) {
        let mut rng = rng_from_seed(seed);
        let exts: Vec<ExtRef> = vec![
            Arc::new(LookupExtractor::random(6, 4, 3, &mut rng).unwrap()),
            Arc::new(ToeplitzFamily::random(6, 4, 3, &mut rng).unwrap()),
        ];
        for e in &exts {
            let (xb, sb) = (BitString::from_u64(x, 6), BitString::from_u64(s, 4));
            let a = e.eval(&xb, &sb).unwrap();
            prop_assert_eq!(a.len(), 3);
            prop_assert_eq!(a, e.eval(&xb, &sb).unwrap());
        }
    }

    #[test]
    fn bad_set_bound_holds_at_the_measured_error(seed in any::<u64>()) {
        let ext = LookupExtractor::random(4, 2, 1, &mut rng_from_seed(seed)).unwrap();
        let eps = worst_flat_strong_distance(&ext, 2, ENUMERATION_BUDGET).unwrap().eps;
        prop_assert!(verify_bad_set_bound(&ext, 2, eps).unwrap().pass);
    }

    #[test]
    fn lightest_bin_is_deterministic_and_ordered(seed in any::<u64>(), n in 1usize..64, rb in 1u32..5) {
        let mut rng = rng_from_seed(seed);
        let r = 1usize << rb;
        let rows: Vec<BitString> = (0..n).map(|_| {
            let v: u64 = rand::Rng::random_range(&mut rng, 0..64);
            BitString::from_u64(v, 6)
        }).collect();
        let a = lightest_bin(&rows, r).unwrap();
        prop_assert_eq!(&a, &lightest_bin(&rows, r).unwrap());
        prop_assert!(!a.survivors.is_empty());
        prop_assert!(a.survivors.windows(2).all(|w| w[0] < w[1]));
        if a.bin_counts.iter().all(|&c| c > 0) {
            prop_assert!(a.survivors.len() <= n / r);
        }
    }

    #[test]
    fn transcripts_replay_and_extend_as_prefixes(seed in any::<u64>(), x in 0u64..16, q in 0u64..16) {
        let mut rng = rng_from_seed(seed);
        let ext_q: ExtRef = Arc::new(LookupExtractor::random(4, 2, 2, &mut rng).unwrap());
        let ext_w: ExtRef = Arc::new(LookupExtractor::random(4, 2, 2, &mut rng).unwrap());
        let (xb, qb) = (BitString::from_u64(x, 4), BitString::from_u64(q, 4));
        let s1 = qb.prefix(2).unwrap();
        let full_cfg = AltExtConfig::new(ext_q.clone(), ext_w.clone(), 2, 4).unwrap();
        let full = alternating_extraction(&full_cfg, &xb, &qb, &s1).unwrap();
        prop_assert_eq!(&full, &alternating_extraction(&full_cfg, &xb, &qb, &s1).unwrap());
        for j in 1..=4 {
            let cfg = AltExtConfig::new(ext_q.clone(), ext_w.clone(), 2, j).unwrap();
            let short = alternating_extraction(&cfg, &xb, &qb, &s1).unwrap();
            prop_assert_eq!(&short.r[..], &full.r[..j]);
            prop_assert_eq!(&short.s[..], &full.s[..j]);
        }
    }

    #[test]
    fn flat_sources_have_log_support_entropy(seed in any::<u64>(), k in 0usize..6) {
        let mut rng = rng_from_seed(seed);
        let battery = mse_core::sources::adversarial_flat_battery(8, k, 4, &mut rng).unwrap();
        for s in battery {
            prop_assert_eq!(s.min_entropy(), k as f64);
            let exact = mse_core::sources::min_entropy(&s.to_source::<f64>()).unwrap();
            prop_assert!((exact - k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_replays_with_equal_states(seed in any::<u64>()) {
        let src = FlatSource::new(5, (0..7).map(|v| BitString::from_u64(v * 3, 5))).unwrap().to_source::<f64>();
        let (mut a, mut b) = (rng_from_seed(seed), rng_from_seed(seed));
        for _ in 0..20 {
            prop_assert_eq!(sample(&src, &mut a), sample(&src, &mut b));
        }
    }
}

#[test]
fn toeplitz_at_full_entropy_meets_the_hash_bound() {
    for (n, m) in [(4, 1), (6, 2), (8, 3)] {
        let ext = toeplitz_extractor(n, m).unwrap();
        let d = strong_distance(&ext, &DiscreteSource::<f64>::uniform(n), ENUMERATION_BUDGET).unwrap();
        assert!(d <= (-((n - m) as f64) / 2.0).exp2(), "n={n} m={m}: {d}");
    }
}

#[test]
fn monte_carlo_interval_narrows_with_more_samples() {
    let src = FlatSource::new(6, (0..16).map(|v| BitString::from_u64(v * 4 + (v & 1), 6)))
        .unwrap()
        .to_source::<f64>();
    let map = |a: &[&BitString]| Ok(a[0].prefix(3).unwrap());
    let width = |samples| {
        mc_distance_upper(&[&src], map, 3, samples, &mut rng_from_seed(77))
            .unwrap()
            .half_width
    };
    let (small, large) = (width(500), width(20_000));
    assert!(large < small, "{large} vs {small}");
}
