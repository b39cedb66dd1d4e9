//! One-pass heuristic: greedy reservoirs, then greedy augmentation of the
//! feasible core from the leftover reservoir elements. The output always
//! satisfies both the matroid and the fairness window; there is no worst-case
//! value guarantee.

use crate::error::Result;
use crate::matroid::MatroidOracle;
use crate::model::{Constraints, Element, MemoryMeter, OracleCalls, SolutionReport};
use crate::objective::ObjectiveOracle;
use crate::streaming::reservoir::{collect_reservoirs, extract_feasible, ReservoirMode};
use crate::value::Value;

pub fn greedy_fair_streaming<'a, I, W>(
    stream: I,
    constraints: &Constraints,
    objective: &ObjectiveOracle<W>,
) -> Result<SolutionReport<W>>
where
    I: IntoIterator<Item = &'a Element>,
    W: Value,
{
    let m0 = constraints.matroid.calls();
    let o0 = objective.calls();
    let mut meter = MemoryMeter::new();

    let reservoirs = collect_reservoirs(
        stream,
        constraints,
        ReservoirMode::Greedy(objective),
        &mut meter,
    )?;
    let (mut current, mut aux_independence) =
        extract_feasible(&reservoirs, constraints, &mut meter)?;

    let upper = MatroidOracle::upper_color(&constraints.bounds, &constraints.colors);
    let mut tracker = objective.tracker(&current)?;

    // Candidates: leftover reservoir elements, lazily re-evaluated. Stored
    // ascending by (gain, descending id) so popping the tail yields the
    // highest gain with the smallest id.
    let mut queue: Vec<(W, crate::model::ElementId)> = Vec::new();
    for e in reservoirs.union().iter() {
        if !current.contains(e) {
            queue.push((tracker.gain(e)?, e));
        }
    }
    let order = |a: &(W, crate::model::ElementId), b: &(W, crate::model::ElementId)| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.1.cmp(&a.1))
    };
    queue.sort_by(order);

    while let Some((_, e)) = queue.pop() {
        let gain = tracker.gain(e)?;
        if let Some(&(next_gain, _)) = queue.last() {
            if gain < next_gain {
                // Stale bound: reinsert with the fresh gain and retry.
                let entry = (gain, e);
                let pos = queue
                    .binary_search_by(|probe| order(probe, &entry))
                    .unwrap_or_else(|p| p);
                queue.insert(pos, entry);
                continue;
            }
        }
        let grown = current.with(e);
        if constraints.matroid.is_independent(&grown)? && upper.is_independent(&grown)? {
            tracker.insert(e)?;
            current = grown;
            // The solution grows only within the retained reservoirs.
            meter.record(reservoirs.stored());
        }
        // Either added or permanently blocked: the set only grows, so a
        // failed guard can never pass later.
    }

    aux_independence += upper.calls();
    let value = tracker.value();
    let per_color = constraints.colors.counts(&current)?;
    let violation = constraints.bounds.violation_of_counts(&per_color);
    debug_assert_eq!(violation, 0);
    Ok(SolutionReport {
        chosen: current,
        value,
        per_color,
        violation,
        stored_elements_peak: meter.peak(),
        oracle_calls: OracleCalls {
            independence: (constraints.matroid.calls() - m0) + aux_independence,
            objective: objective.calls() - o0,
        },
    })
}
