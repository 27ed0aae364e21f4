use serde::Serialize;

use crate::bits::BitString;
use crate::error::{domain, Result};
use crate::scalar::Probability;
use crate::sources::DiscreteSource;

use super::enumerate::{check_budget, push_forward};
use super::JointTable;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionalEntry {
    pub value: BitString,
    pub prob: f64,
    pub measured: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionalReport {
    pub entries: Vec<ConditionalEntry>,
    /// Total probability of the conditioning values that pass.
    pub passing_mass: f64,
}

/// For each value `y` of `sources[condition_on]`, pushes the remaining
/// sources through `f` with that source fixed to `y` and scores the result
/// with `metric`, which returns the measured value and whether it passes.
pub fn conditional_analysis<P, F, M>(
    sources: &[&DiscreteSource<P>],
    f: F,
    condition_on: usize,
    metric: M,
    budget: u128,
) -> Result<ConditionalReport>
where
    P: Probability,
    F: Fn(&[&BitString]) -> Result<Vec<BitString>> + Sync,
    M: Fn(&JointTable<P>, &BitString) -> Result<(f64, bool)>,
{
    if condition_on >= sources.len() {
        return domain(format!("conditioning index {condition_on} out of range"));
    }
    check_budget("conditional analysis", sources, budget)?;
    let mut entries = Vec::new();
    let mut passing_mass = 0.0;
    for (y, py) in sources[condition_on].table()? {
        let fixed = DiscreteSource::point(y.clone());
        let view: Vec<&DiscreteSource<P>> = sources
            .iter()
            .enumerate()
            .map(|(i, s)| if i == condition_on { &fixed } else { *s })
            .collect();
        let table = push_forward(&view, &f, budget)?;
        let (measured, pass) = metric(&table, y)?;
        let prob = py.to_f64_lossy();
        if pass {
            passing_mass += prob;
        }
        entries.push(ConditionalEntry {
            value: y.clone(),
            prob,
            measured,
            pass,
        });
    }
    Ok(ConditionalReport { entries, passing_mass })
}
