//! Exact fair matroid modular maximization: a one-pass streaming solver
//! (greedy per-color reservoirs followed by an exact finish) and a
//! centralized solver that clones each element into a lower-bound copy and an
//! upper-bound copy and runs weighted matroid intersection per size guess.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::intersect::max_weight_common;
use crate::matroid::{greedy_basis, Independence, LaminarFamily, MatroidKind, MatroidOracle};
use crate::model::{
    Constraints, ElemSet, Element, ElementId, MemoryMeter, OracleCalls, SolutionReport,
};
use crate::objective::ObjectiveOracle;
use crate::streaming::{collect_reservoirs, ReservoirMode};
use crate::value::Value;

fn weight_of<W: Value>(weights: &HashMap<ElementId, W>, e: ElementId) -> Result<W> {
    weights
        .get(&e)
        .copied()
        .ok_or_else(|| Error::InvalidInput(format!("no weight for element {e}")))
}

/// Cloned-universe instance for one size guess `x`: every original element
/// has a lower-bound clone and an upper-bound clone, only one of which may be
/// chosen. Independent full-rank sets in both matroids project exactly onto
/// the feasible sets of size `x`.
pub struct SmomibInstance {
    pub target: usize,
    pub m1: MatroidOracle,
    pub m2: MatroidOracle,
    originals: Vec<ElementId>,
    lower_sum: usize,
}

/// `m1`: projection independent in the base matroid, no element contributes
/// both clones, and at most `x` clones in total.
struct CloneCompositeKernel {
    base: Arc<dyn Independence>,
    originals: Vec<ElementId>,
    cap: usize,
}

impl Independence for CloneCompositeKernel {
    fn check(&self, set: &ElemSet) -> Result<bool> {
        if set.len() > self.cap {
            return Ok(false);
        }
        let mut projected = ElemSet::new();
        for clone in set.iter() {
            let idx = clone.0 as usize / 2;
            let Some(&orig) = self.originals.get(idx) else {
                return Err(Error::InvalidInput(format!("unknown clone id {clone}")));
            };
            if !projected.insert(orig) {
                // Both clones of the same original.
                return Ok(false);
            }
        }
        self.base.check(&projected)
    }
}

impl SmomibInstance {
    /// Builds the guess-`x` instance over `ground`, or None when either
    /// matroid fails the full-rank check (that guess is skipped).
    pub fn build(ground: &ElemSet, constraints: &Constraints, x: usize) -> Result<Option<Self>> {
        let originals: Vec<ElementId> = ground.iter().collect();
        let m = originals.len();
        let lower_sum = constraints.bounds.lower_sum();
        if x < lower_sum || x > constraints.bounds.upper_sum() || x > m {
            return Ok(None);
        }

        let clone_ground: ElemSet = (0..2 * m as u32).map(ElementId).collect();
        let m1 = MatroidOracle::from_kernel(
            Arc::new(CloneCompositeKernel {
                base: constraints.matroid.kernel_handle(),
                originals: originals.clone(),
                cap: x,
            }),
            MatroidKind::CloneComposite,
            x,
        );

        // Laminar family: per color the lower clones capped at ℓ_c and the
        // upper clones capped at u_c − ℓ_c, plus all upper clones capped at
        // x − Σ ℓ_c.
        let color_count = constraints.color_count();
        let mut lower_groups: Vec<ElemSet> = vec![ElemSet::new(); color_count];
        let mut upper_groups: Vec<ElemSet> = vec![ElemSet::new(); color_count];
        let mut all_upper = ElemSet::new();
        for (i, &orig) in originals.iter().enumerate() {
            let c = constraints.colors.color_of(orig)? as usize - 1;
            lower_groups[c].insert(ElementId(2 * i as u32));
            upper_groups[c].insert(ElementId(2 * i as u32 + 1));
            all_upper.insert(ElementId(2 * i as u32 + 1));
        }
        let mut groups: Vec<(ElemSet, usize)> = Vec::with_capacity(2 * color_count + 1);
        for c in 0..color_count {
            groups.push((lower_groups[c].clone(), constraints.bounds.lowers()[c]));
            groups.push((
                upper_groups[c].clone(),
                constraints.bounds.uppers()[c] - constraints.bounds.lowers()[c],
            ));
        }
        groups.push((all_upper, x - lower_sum));
        let m2 = MatroidOracle::laminar(LaminarFamily::new(groups)?, &clone_ground)?;

        // Full-rank precheck; a guess admitting no rank-x set is skipped.
        if m2.rank_bound() != x {
            return Ok(None);
        }
        if greedy_basis(&m1, &clone_ground)?.len() != x {
            return Ok(None);
        }
        Ok(Some(SmomibInstance {
            target: x,
            m1,
            m2,
            originals,
            lower_sum,
        }))
    }

    pub fn clone_ground(&self) -> ElemSet {
        (0..2 * self.originals.len() as u32)
            .map(ElementId)
            .collect()
    }

    pub fn is_lower_clone(&self, clone: ElementId) -> bool {
        clone.0.is_multiple_of(2)
    }

    /// Projects a clone set back onto original element ids.
    pub fn project(&self, clones: &ElemSet) -> ElemSet {
        clones
            .iter()
            .map(|c| self.originals[c.0 as usize / 2])
            .collect()
    }

    /// Lifts a feasible set of size `target`: the first `ℓ_c` members of each
    /// color become lower clones, the rest upper clones.
    pub fn lift(&self, set: &ElemSet, constraints: &Constraints) -> Result<ElemSet> {
        let index: HashMap<ElementId, usize> = self
            .originals
            .iter()
            .enumerate()
            .map(|(i, &e)| (e, i))
            .collect();
        let mut taken = vec![0usize; constraints.color_count()];
        let mut lifted = ElemSet::new();
        for e in set.iter() {
            let c = constraints.colors.color_of(e)? as usize - 1;
            let i = *index
                .get(&e)
                .ok_or_else(|| Error::InvalidInput(format!("element {e} not in the ground")))?;
            if taken[c] < constraints.bounds.lowers()[c] {
                lifted.insert(ElementId(2 * i as u32));
                taken[c] += 1;
            } else {
                lifted.insert(ElementId(2 * i as u32 + 1));
            }
        }
        Ok(lifted)
    }

    /// Clone weights shifted by λ so that larger common independent sets
    /// always dominate smaller ones.
    pub fn clone_weights<W: Value>(
        &self,
        weights: &HashMap<ElementId, W>,
        lambda: W,
    ) -> Result<HashMap<ElementId, W>> {
        let mut out = HashMap::with_capacity(2 * self.originals.len());
        for (i, &orig) in self.originals.iter().enumerate() {
            let w = weight_of(weights, orig)?;
            out.insert(ElementId(2 * i as u32), lambda + w);
            out.insert(ElementId(2 * i as u32 + 1), lambda + w);
        }
        Ok(out)
    }

    /// Runs weighted matroid intersection on the clone instance; returns the
    /// projected set and its true modular value when a full-rank common
    /// independent set exists.
    pub fn solve<W: Value>(&self, weights: &HashMap<ElementId, W>) -> Result<Option<(ElemSet, W)>> {
        let lambda = self.lambda(weights)?;
        let shifted = self.clone_weights(weights, lambda)?;
        let clones = max_weight_common(&self.m1, &self.m2, &self.clone_ground(), &shifted)?;
        if clones.len() != self.target {
            return Ok(None);
        }
        debug_assert!(self.lower_counts_exact(&clones));
        let chosen = self.project(&clones);
        let mut value = W::zero();
        for e in chosen.iter() {
            value += weight_of(weights, e)?;
        }
        Ok(Some((chosen, value)))
    }

    /// λ = 1 + Σ|w|: one full unit above the largest possible swing of the
    /// unshifted values, so cardinality strictly dominates.
    pub fn lambda<W: Value>(&self, weights: &HashMap<ElementId, W>) -> Result<W> {
        let mut total = W::one();
        for &orig in &self.originals {
            total += weight_of(weights, orig)?.abs();
        }
        Ok(total)
    }

    /// Every full-rank solution takes exactly ℓ_c lower clones per color.
    fn lower_counts_exact(&self, clones: &ElemSet) -> bool {
        clones.iter().filter(|c| self.is_lower_clone(*c)).count() == self.lower_sum
    }

    pub fn independence_calls(&self) -> u64 {
        self.m1.calls() + self.m2.calls()
    }
}

/// Exact centralized solver: tries every feasible cardinality guess, solves
/// the clone instance, and keeps the best projection.
pub fn solve_f3m_centralized<W: Value>(
    ground: &ElemSet,
    constraints: &Constraints,
    weights: &HashMap<ElementId, W>,
) -> Result<SolutionReport<W>> {
    let m0 = constraints.matroid.calls();
    let mut aux_calls = 0u64;
    let mut best: Option<(ElemSet, W)> = None;
    let lo = constraints.bounds.lower_sum();
    let hi = constraints.bounds.upper_sum().min(ground.len());
    for x in lo..=hi {
        let Some(instance) = SmomibInstance::build(ground, constraints, x)? else {
            continue;
        };
        let solved = instance.solve(weights)?;
        aux_calls += instance.independence_calls();
        if let Some((set, value)) = solved {
            let improves = match &best {
                None => true,
                Some((_, bv)) => value > *bv,
            };
            if improves {
                best = Some((set, value));
            }
        }
    }
    let Some((chosen, value)) = best else {
        return Err(Error::Infeasible(
            "no cardinality guess admits a full-rank common independent set".into(),
        ));
    };
    debug_assert!(constraints.is_feasible(&chosen)?);
    let per_color = constraints.colors.counts(&chosen)?;
    let violation = constraints.bounds.violation_of_counts(&per_color);
    Ok(SolutionReport {
        stored_elements_peak: ground.len(),
        chosen,
        value,
        per_color,
        violation,
        oracle_calls: OracleCalls {
            independence: (constraints.matroid.calls() - m0) + aux_calls,
            objective: 0,
        },
    })
}

/// One-pass exact streaming solver for modular objectives: greedy per-color
/// reservoirs (value-improving swaps) followed by the exact centralized
/// finish restricted to the union of the reservoirs.
pub fn greedy_fair_streaming_m<'a, I, W>(
    stream: I,
    constraints: &Constraints,
    weights: &HashMap<ElementId, W>,
) -> Result<SolutionReport<W>>
where
    I: IntoIterator<Item = &'a Element>,
    W: Value,
{
    let m0 = constraints.matroid.calls();
    let mut meter = MemoryMeter::new();
    let objective = ObjectiveOracle::modular(weights.clone());
    let reservoirs = collect_reservoirs(
        stream,
        constraints,
        ReservoirMode::Greedy(&objective),
        &mut meter,
    )?;
    let reservoir_calls = constraints.matroid.calls() - m0;
    let union = reservoirs.union();
    let mut report = solve_f3m_centralized(&union, constraints, weights)?;
    // The finish works entirely inside the retained reservoirs.
    meter.record(reservoirs.stored());
    report.stored_elements_peak = meter.peak();
    report.oracle_calls.objective += objective.calls();
    report.oracle_calls.independence += reservoir_calls;
    Ok(report)
}

/// Per-color reservoirs exposed for property tests: returns each color's
/// final reservoir as collected by the streaming pass.
pub fn modular_reservoirs<'a, I, W>(
    stream: I,
    constraints: &Constraints,
    weights: &HashMap<ElementId, W>,
) -> Result<Vec<ElemSet>>
where
    I: IntoIterator<Item = &'a Element>,
    W: Value,
{
    let objective = ObjectiveOracle::modular(weights.clone());
    let mut meter = MemoryMeter::new();
    let reservoirs = collect_reservoirs(
        stream,
        constraints,
        ReservoirMode::Greedy(&objective),
        &mut meter,
    )?;
    Ok(reservoirs.per_color().to_vec())
}
