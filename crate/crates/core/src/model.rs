//! Shared domain vocabulary: elements, colors, fairness bounds, instances,
//! solutions, and the violation metric.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matroid::MatroidOracle;
use crate::objective::ObjectiveOracle;
use crate::value::Value;

/// Identifier of a stream element; unique within an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ElementId(pub u32);

impl std::fmt::Display for ElementId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Color (sensitive-attribute group), a dense integer in `1..=C`.
pub type ColorId = u32;

/// One stream item: identity, color, and an opaque payload index that the
/// instance's objective oracle resolves (node index, feature row, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Element {
    pub id: ElementId,
    pub color: ColorId,
    pub payload: usize,
}

impl Element {
    pub fn new(id: u32, color: ColorId, payload: usize) -> Self {
        Element {
            id: ElementId(id),
            color,
            payload,
        }
    }
}

/// Set of element ids, kept sorted for deterministic iteration.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ElemSet {
    ids: Vec<ElementId>,
}

impl ElemSet {
    pub fn new() -> Self {
        ElemSet::default()
    }

    pub fn singleton(e: ElementId) -> Self {
        ElemSet { ids: vec![e] }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, e: ElementId) -> bool {
        self.ids.binary_search(&e).is_ok()
    }

    /// Inserts `e`; returns false if it was already present.
    pub fn insert(&mut self, e: ElementId) -> bool {
        match self.ids.binary_search(&e) {
            Ok(_) => false,
            Err(pos) => {
                self.ids.insert(pos, e);
                true
            }
        }
    }

    /// Removes `e`; returns false if it was absent.
    pub fn remove(&mut self, e: ElementId) -> bool {
        match self.ids.binary_search(&e) {
            Ok(pos) => {
                self.ids.remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = ElementId> + '_ {
        self.ids.iter().copied()
    }

    pub fn as_slice(&self) -> &[ElementId] {
        &self.ids
    }

    /// Copy of the set with `e` added.
    pub fn with(&self, e: ElementId) -> Self {
        let mut s = self.clone();
        s.insert(e);
        s
    }

    /// Copy of the set with `e` removed.
    pub fn without(&self, e: ElementId) -> Self {
        let mut s = self.clone();
        s.remove(e);
        s
    }

    pub fn union(&self, other: &ElemSet) -> Self {
        let mut s = self.clone();
        for e in other.iter() {
            s.insert(e);
        }
        s
    }

    pub fn is_subset_of(&self, other: &ElemSet) -> bool {
        self.iter().all(|e| other.contains(e))
    }
}

impl FromIterator<ElementId> for ElemSet {
    fn from_iter<T: IntoIterator<Item = ElementId>>(iter: T) -> Self {
        let mut s = ElemSet::new();
        for e in iter {
            s.insert(e);
        }
        s
    }
}

impl<'a> IntoIterator for &'a ElemSet {
    type Item = ElementId;
    type IntoIter = std::iter::Copied<std::slice::Iter<'a, ElementId>>;

    fn into_iter(self) -> Self::IntoIter {
        self.ids.iter().copied()
    }
}

/// Immutable element-to-color lookup shared by constraint oracles.
#[derive(Debug, Clone)]
pub struct ColorMap {
    colors: Arc<HashMap<ElementId, ColorId>>,
    color_count: usize,
}

impl ColorMap {
    /// Builds the map from an element list. Colors must lie in `1..=C`.
    pub fn new(elements: &[Element], color_count: usize) -> Result<Self> {
        let mut colors = HashMap::with_capacity(elements.len());
        for el in elements {
            if el.color == 0 || el.color as usize > color_count {
                return Err(Error::InvalidInput(format!(
                    "element {} has color {} outside 1..={}",
                    el.id, el.color, color_count
                )));
            }
            if colors.insert(el.id, el.color).is_some() {
                return Err(Error::InvalidInput(format!(
                    "duplicate element id {}",
                    el.id
                )));
            }
        }
        Ok(ColorMap {
            colors: Arc::new(colors),
            color_count,
        })
    }

    pub fn color_count(&self) -> usize {
        self.color_count
    }

    pub fn color_of(&self, e: ElementId) -> Result<ColorId> {
        self.colors
            .get(&e)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("unknown element id {e}")))
    }

    /// Per-color counts `|S ∩ V_c|`, indexed by `c - 1`.
    pub fn counts(&self, set: &ElemSet) -> Result<Vec<usize>> {
        let mut counts = vec![0usize; self.color_count];
        for e in set.iter() {
            counts[self.color_of(e)? as usize - 1] += 1;
        }
        Ok(counts)
    }

    /// Elements per color over the whole instance, indexed by `c - 1`.
    pub fn population(&self) -> Vec<usize> {
        let mut pop = vec![0usize; self.color_count];
        for &c in self.colors.values() {
            pop[c as usize - 1] += 1;
        }
        pop
    }
}

/// Per-color fairness window `ℓ_c ≤ |S ∩ V_c| ≤ u_c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FairnessBounds {
    lower: Vec<usize>,
    upper: Vec<usize>,
}

impl FairnessBounds {
    pub fn new(lower: Vec<usize>, upper: Vec<usize>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidInput(format!(
                "bound vectors disagree on color count: {} vs {}",
                lower.len(),
                upper.len()
            )));
        }
        for (c, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if l > u {
                return Err(Error::InvalidInput(format!(
                    "color {}: lower bound {} exceeds upper bound {}",
                    c + 1,
                    l,
                    u
                )));
            }
        }
        Ok(FairnessBounds { lower, upper })
    }

    /// Bounds that make every set fair: `ℓ_c = 0`, `u_c = cap` for all colors.
    pub fn free(color_count: usize, cap: usize) -> Self {
        FairnessBounds {
            lower: vec![0; color_count],
            upper: vec![cap; color_count],
        }
    }

    pub fn color_count(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self, color: ColorId) -> usize {
        self.lower[color as usize - 1]
    }

    pub fn upper(&self, color: ColorId) -> usize {
        self.upper[color as usize - 1]
    }

    pub fn lower_sum(&self) -> usize {
        self.lower.iter().sum()
    }

    pub fn upper_sum(&self) -> usize {
        self.upper.iter().sum()
    }

    pub fn lowers(&self) -> &[usize] {
        &self.lower
    }

    pub fn uppers(&self) -> &[usize] {
        &self.upper
    }

    /// `err` of a per-color count vector:
    /// `Σ_c max{count_c − u_c, ℓ_c − count_c, 0}`.
    pub fn violation_of_counts(&self, counts: &[usize]) -> usize {
        debug_assert_eq!(counts.len(), self.lower.len());
        counts
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&n, (&l, &u))| n.saturating_sub(u).max(l.saturating_sub(n)))
            .sum()
    }

    pub fn counts_within(&self, counts: &[usize]) -> bool {
        self.violation_of_counts(counts) == 0
    }
}

/// Number of elements by which `set` misses the fairness window.
pub fn fairness_violation(
    set: &ElemSet,
    colors: &ColorMap,
    bounds: &FairnessBounds,
) -> Result<usize> {
    Ok(bounds.violation_of_counts(&colors.counts(set)?))
}

/// A matroid oracle plus fairness bounds; membership in the feasible family
/// is exactly independence plus all color windows.
#[derive(Clone)]
pub struct Constraints {
    pub matroid: MatroidOracle,
    pub bounds: FairnessBounds,
    pub colors: ColorMap,
}

impl Constraints {
    pub fn new(matroid: MatroidOracle, bounds: FairnessBounds, colors: ColorMap) -> Result<Self> {
        if bounds.color_count() != colors.color_count() {
            return Err(Error::InvalidInput(format!(
                "bounds cover {} colors but the instance has {}",
                bounds.color_count(),
                colors.color_count()
            )));
        }
        Ok(Constraints {
            matroid,
            bounds,
            colors,
        })
    }

    pub fn color_count(&self) -> usize {
        self.bounds.color_count()
    }

    /// True iff `set` is independent and every color count lies in its window.
    pub fn is_feasible(&self, set: &ElemSet) -> Result<bool> {
        let counts = self.colors.counts(set)?;
        if !self.bounds.counts_within(&counts) {
            return Ok(false);
        }
        self.matroid.is_independent(set)
    }

    pub fn violation(&self, set: &ElemSet) -> Result<usize> {
        fairness_violation(set, &self.colors, &self.bounds)
    }

    /// Same constraint family with fresh oracle-call counters, for giving each
    /// run its own accounting.
    pub fn fork(&self) -> Self {
        Constraints {
            matroid: self.matroid.fork(),
            bounds: self.bounds.clone(),
            colors: self.colors.clone(),
        }
    }
}

/// A full problem instance. `elements` order is the stream order; streaming
/// algorithms must not access elements any other way.
#[derive(Clone)]
pub struct Instance<W: Value> {
    pub elements: Vec<Element>,
    pub constraints: Constraints,
    pub objective: ObjectiveOracle<W>,
    pub color_count: usize,
}

impl<W: Value> Instance<W> {
    pub fn new(
        elements: Vec<Element>,
        constraints: Constraints,
        objective: ObjectiveOracle<W>,
    ) -> Result<Self> {
        let color_count = constraints.color_count();
        for el in &elements {
            // ColorMap::new validated color ranges; double-check membership.
            constraints.colors.color_of(el.id)?;
        }
        Ok(Instance {
            elements,
            constraints,
            objective,
            color_count,
        })
    }

    pub fn ground_size(&self) -> usize {
        self.elements.len()
    }

    /// Ground set as an `ElemSet`.
    pub fn ground(&self) -> ElemSet {
        self.elements.iter().map(|e| e.id).collect()
    }

    /// One replay of the stream, in stream order.
    pub fn stream(&self) -> impl Iterator<Item = &Element> {
        self.elements.iter()
    }

    /// Instance with fresh oracle-call counters (shared immutable data).
    pub fn fork(&self) -> Self {
        Instance {
            elements: self.elements.clone(),
            constraints: self.constraints.fork(),
            objective: self.objective.fork(),
            color_count: self.color_count,
        }
    }
}

/// Objective/independence oracle call totals for one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OracleCalls {
    pub objective: u64,
    pub independence: u64,
}

/// Output of one algorithm run.
#[derive(Debug, Clone)]
pub struct SolutionReport<W: Value> {
    pub chosen: ElemSet,
    pub value: W,
    pub per_color: Vec<usize>,
    pub violation: usize,
    pub stored_elements_peak: usize,
    pub oracle_calls: OracleCalls,
}

impl<W: Value> SolutionReport<W> {
    /// Assembles a report for `chosen`, evaluating the objective once.
    pub fn build(
        chosen: ElemSet,
        constraints: &Constraints,
        objective: &ObjectiveOracle<W>,
        stored_elements_peak: usize,
        oracle_calls: OracleCalls,
    ) -> Result<Self> {
        let value = objective.value(&chosen)?;
        let per_color = constraints.colors.counts(&chosen)?;
        let violation = constraints.bounds.violation_of_counts(&per_color);
        Ok(SolutionReport {
            chosen,
            value,
            per_color,
            violation,
            stored_elements_peak,
            oracle_calls,
        })
    }
}

/// Tracks the peak number of stream elements an algorithm retains at once.
///
/// The convention: an element counts once no matter how many state containers
/// (reservoirs, partial solutions, buffers) reference it, and derived
/// per-solve workspaces over already-retained elements do not add.
#[derive(Debug, Clone, Copy, Default)]
pub struct MemoryMeter {
    peak: usize,
}

impl MemoryMeter {
    pub fn new() -> Self {
        MemoryMeter::default()
    }

    /// Records the current total stored-slot count.
    pub fn record(&mut self, current: usize) {
        if current > self.peak {
            self.peak = current;
        }
    }

    pub fn peak(&self) -> usize {
        self.peak
    }
}
