//! Random baseline: a seeded random base of the matroid, fairness ignored
//! (violations are reported, not controlled).

use std::collections::HashMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::model::{
    Constraints, ElemSet, Element, ElementId, MemoryMeter, OracleCalls, SolutionReport,
};
use crate::objective::ObjectiveOracle;
use crate::value::Value;

/// Maintains the maximum-priority independent set over the stream, with one
/// uniform priority drawn per arrival. For a uniform matroid this is exactly
/// reservoir sampling of a uniformly random k-subset; in general it yields a
/// seeded random base. Uses O(k) memory.
pub fn random_base<'a, I, W>(
    stream: I,
    constraints: &Constraints,
    objective: &ObjectiveOracle<W>,
    seed: u64,
) -> Result<SolutionReport<W>>
where
    I: IntoIterator<Item = &'a Element>,
    W: Value,
{
    let m0 = constraints.matroid.calls();
    let o0 = objective.calls();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut meter = MemoryMeter::new();
    let mut current = ElemSet::new();
    let mut priority: HashMap<ElementId, u64> = HashMap::new();

    for element in stream {
        let p = rng.next_u64();
        if current.contains(element.id) {
            continue;
        }
        let grown = current.with(element.id);
        if constraints.matroid.is_independent(&grown)? {
            current = grown;
            priority.insert(element.id, p);
        } else {
            // Lowest-priority member whose removal restores independence.
            let mut victim: Option<(u64, ElementId)> = None;
            for y in current.iter() {
                if !constraints.matroid.is_independent(&grown.without(y))? {
                    continue;
                }
                let key = (priority[&y], y);
                if victim.is_none_or(|v| key < v) {
                    victim = Some(key);
                }
            }
            if let Some((py, y)) = victim {
                if py < p {
                    current = grown.without(y);
                    priority.remove(&y);
                    priority.insert(element.id, p);
                }
            }
        }
        meter.record(current.len());
    }

    SolutionReport::build(
        current,
        constraints,
        objective,
        meter.peak(),
        OracleCalls {
            independence: constraints.matroid.calls() - m0,
            objective: objective.calls() - o0 + 1,
        },
    )
}
