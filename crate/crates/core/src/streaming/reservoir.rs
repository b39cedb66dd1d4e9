//! First-pass reservoirs: one maximal independent set per color, collected
//! either arbitrarily (first fit) or greedily (value-improving swaps), then
//! reduced to a feasible set via matroid intersection against the lower-bound
//! color matroid.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::intersect::max_cardinality_common;
use crate::matroid::MatroidOracle;
use crate::model::{Constraints, ElemSet, Element, ElementId, MemoryMeter, OracleCalls};
use crate::objective::{ObjectiveOracle, Tracker};
use crate::value::{approx_ge, Value};

/// Per-color maximal independent sets gathered during the first pass.
#[derive(Debug, Clone)]
pub struct Reservoir {
    per_color: Vec<ElemSet>,
}

impl Reservoir {
    pub fn per_color(&self) -> &[ElemSet] {
        &self.per_color
    }

    pub fn color_set(&self, color: u32) -> &ElemSet {
        &self.per_color[color as usize - 1]
    }

    /// Union of all per-color sets.
    pub fn union(&self) -> ElemSet {
        let mut u = ElemSet::new();
        for s in &self.per_color {
            u = u.union(s);
        }
        u
    }

    /// Total stored element slots.
    pub fn stored(&self) -> usize {
        self.per_color.iter().map(|s| s.len()).sum()
    }
}

/// First-pass result: a feasible set with `|S ∩ V_c| = ℓ_c` for every color,
/// plus the reservoirs it was extracted from.
#[derive(Debug, Clone)]
pub struct FirstPass {
    pub chosen: ElemSet,
    pub reservoirs: Reservoir,
    pub peak_stored: usize,
    pub oracle_calls: OracleCalls,
}

pub(crate) enum ReservoirMode<'a, W: Value> {
    /// Keep the first maximal independent set per color.
    Arbitrary,
    /// Swap lower-value elements out when an arriving element improves the
    /// reservoir (candidates scanned in increasing singleton value).
    Greedy(&'a ObjectiveOracle<W>),
}

pub(crate) struct ReservoirState<W: Value> {
    pub per_color: Vec<ElemSet>,
    trackers: Vec<Option<Tracker<W>>>,
    singleton_probe: Option<Tracker<W>>,
    singletons: HashMap<ElementId, W>,
}

impl<W: Value> ReservoirState<W> {
    fn singleton(&mut self, e: ElementId) -> Result<W> {
        if let Some(&v) = self.singletons.get(&e) {
            return Ok(v);
        }
        let v = self
            .singleton_probe
            .as_ref()
            .expect("probe exists in greedy mode")
            .gain(e)?;
        self.singletons.insert(e, v);
        Ok(v)
    }
}

/// Streams elements into per-color reservoirs.
pub(crate) fn collect_reservoirs<'a, I, W>(
    stream: I,
    constraints: &Constraints,
    mode: ReservoirMode<'_, W>,
    meter: &mut MemoryMeter,
) -> Result<Reservoir>
where
    I: IntoIterator<Item = &'a Element>,
    W: Value,
{
    let color_count = constraints.color_count();
    let mut state = ReservoirState {
        per_color: vec![ElemSet::new(); color_count],
        trackers: Vec::new(),
        singleton_probe: None,
        singletons: HashMap::new(),
    };
    if let ReservoirMode::Greedy(obj) = &mode {
        for _ in 0..color_count {
            state.trackers.push(Some(obj.tracker(&ElemSet::new())?));
        }
        state.singleton_probe = Some(obj.tracker(&ElemSet::new())?);
    }

    for element in stream {
        offer_to_reservoir(element, constraints, &mode, &mut state)?;
        meter.record(state.per_color.iter().map(|s| s.len()).sum());
    }
    Ok(Reservoir {
        per_color: state.per_color,
    })
}

pub(crate) fn offer_to_reservoir<W: Value>(
    element: &Element,
    constraints: &Constraints,
    mode: &ReservoirMode<'_, W>,
    state: &mut ReservoirState<W>,
) -> Result<()> {
    let c = constraints.colors.color_of(element.id)? as usize - 1;
    let current = &state.per_color[c];
    if current.contains(element.id) {
        return Ok(());
    }
    let grown = current.with(element.id);
    if constraints.matroid.is_independent(&grown)? {
        state.per_color[c] = grown;
        if let Some(t) = state.trackers.get_mut(c).and_then(|t| t.as_mut()) {
            t.insert(element.id)?;
        }
        return Ok(());
    }
    let ReservoirMode::Greedy(_) = mode else {
        return Ok(());
    };

    // Swap candidates in increasing singleton value, smallest id first.
    let members: Vec<ElementId> = state.per_color[c].iter().collect();
    let mut ordered: Vec<(W, ElementId)> = Vec::with_capacity(members.len());
    for y in members {
        ordered.push((state.singleton(y)?, y));
    }
    ordered.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
    });
    let tracker = state.trackers[c].as_mut().expect("greedy tracker");
    let before = tracker.value();
    for (_, y) in ordered {
        let swapped = state.per_color[c].without(y).with(element.id);
        if !constraints.matroid.is_independent(&swapped)? {
            continue;
        }
        if approx_ge(tracker.swap_value(y, element.id)?, before) {
            tracker.remove(y)?;
            tracker.insert(element.id)?;
            state.per_color[c] = swapped;
            break;
        }
    }
    Ok(())
}

/// Reduces reservoirs to a feasible set: a max-cardinality common independent
/// set of the instance matroid and the lower-bound color matroid has size
/// `Σ ℓ_c` exactly when the instance is feasible.
pub(crate) fn extract_feasible(
    reservoirs: &Reservoir,
    constraints: &Constraints,
    meter: &mut MemoryMeter,
) -> Result<(ElemSet, u64)> {
    let union = reservoirs.union();
    let lower = MatroidOracle::lower_color(&constraints.bounds, &constraints.colors);
    let chosen = max_cardinality_common(&constraints.matroid, &lower, &union)?;
    // The extracted core is a subset of the retained reservoirs.
    meter.record(reservoirs.stored());
    let want = constraints.bounds.lower_sum();
    if chosen.len() < want {
        return Err(Error::Infeasible(format!(
            "largest fair-extendable core has {} elements; lower bounds demand {want}",
            chosen.len()
        )));
    }
    Ok((chosen, lower.calls()))
}

/// First-fit reservoir pass: collects an arbitrary maximal independent set
/// per color and extracts a feasible set, or reports infeasibility.
pub fn fair_reservoir<'a, I>(stream: I, constraints: &Constraints) -> Result<FirstPass>
where
    I: IntoIterator<Item = &'a Element>,
{
    let m0 = constraints.matroid.calls();
    let mut meter = MemoryMeter::new();
    let reservoirs =
        collect_reservoirs::<_, f64>(stream, constraints, ReservoirMode::Arbitrary, &mut meter)?;
    let (chosen, aux) = extract_feasible(&reservoirs, constraints, &mut meter)?;
    Ok(FirstPass {
        chosen,
        reservoirs,
        peak_stored: meter.peak(),
        oracle_calls: OracleCalls {
            independence: constraints.matroid.calls() - m0 + aux,
            objective: 0,
        },
    })
}

/// Greedy reservoir pass: like [`fair_reservoir`] but keeps each reservoir a
/// value-maximal independent set via swaps.
pub fn greedy_fair_reservoir<'a, I, W>(
    stream: I,
    constraints: &Constraints,
    objective: &ObjectiveOracle<W>,
) -> Result<FirstPass>
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
    let (chosen, aux) = extract_feasible(&reservoirs, constraints, &mut meter)?;
    Ok(FirstPass {
        chosen,
        reservoirs,
        peak_stored: meter.peak(),
        oracle_calls: OracleCalls {
            independence: constraints.matroid.calls() - m0 + aux,
            objective: objective.calls() - o0,
        },
    })
}
