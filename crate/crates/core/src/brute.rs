//! Exhaustive ground-truth engine for desk-scale instances: optimal feasible
//! sets and feasibility decisions, used as the reference oracle by tests and
//! by the exact streaming routine.

use crate::error::{Error, Result};
use crate::intersect::max_cardinality_common;
use crate::matroid::{greedy_basis, MatroidOracle};
use crate::model::{Constraints, ElemSet, ElementId};
use crate::objective::ObjectiveOracle;
use crate::value::Value;

/// Cap on exhaustive enumeration; beyond this the engine refuses.
pub const MAX_BRUTE_GROUND: usize = 20;

/// Outcome of an exhaustive scan over all subsets of a ground set.
#[derive(Debug, Clone)]
pub struct BruteForceResult<W: Value> {
    /// Optimal feasible set and its value; None when no subset is feasible.
    pub best: Option<(ElemSet, W)>,
    pub feasible_count: u64,
    pub enumerated: u64,
}

impl<W: Value> BruteForceResult<W> {
    pub fn value(&self) -> Option<W> {
        self.best.as_ref().map(|(_, v)| *v)
    }
}

/// Exhaustive optimum over all subsets of `ground`, with dependent-superset
/// pruning. Ties in value keep the first set in ascending-mask order over the
/// given element order, which makes the result canonical.
pub fn brute_force_opt_ordered<W: Value>(
    ground: &[ElementId],
    constraints: &Constraints,
    objective: &ObjectiveOracle<W>,
) -> Result<BruteForceResult<W>> {
    let n = ground.len();
    if n > MAX_BRUTE_GROUND {
        return Err(Error::TooLarge(format!(
            "brute force over {n} elements exceeds the {MAX_BRUTE_GROUND}-element cap"
        )));
    }
    let color_of: Vec<usize> = ground
        .iter()
        .map(|&e| Ok(constraints.colors.color_of(e)? as usize - 1))
        .collect::<Result<Vec<_>>>()?;
    let color_count = constraints.color_count();

    let total = 1usize << n;
    let mut dependent = vec![false; total];
    let mut best: Option<(ElemSet, W)> = None;
    let mut feasible_count = 0u64;
    let mut counts = vec![0usize; color_count];

    for mask in 0..total {
        if mask != 0 {
            // A set with a dependent subset is dependent; checking one
            // predecessor is enough because masks are visited ascending.
            let parent = mask & (mask - 1);
            if dependent[parent] {
                dependent[mask] = true;
                continue;
            }
        }
        let set: ElemSet = (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| ground[i])
            .collect();
        if !constraints.matroid.is_independent(&set)? {
            dependent[mask] = true;
            continue;
        }
        counts.fill(0);
        for i in 0..n {
            if mask >> i & 1 == 1 {
                counts[color_of[i]] += 1;
            }
        }
        if !constraints.bounds.counts_within(&counts) {
            continue;
        }
        feasible_count += 1;
        let value = objective.value(&set)?;
        let improves = match &best {
            None => true,
            Some((_, bv)) => value > *bv,
        };
        if improves {
            best = Some((set, value));
        }
    }
    Ok(BruteForceResult {
        best,
        feasible_count,
        enumerated: total as u64,
    })
}

/// As [`brute_force_opt_ordered`] with the ground scanned in ascending id
/// order.
pub fn brute_force_opt<W: Value>(
    ground: &ElemSet,
    constraints: &Constraints,
    objective: &ObjectiveOracle<W>,
) -> Result<BruteForceResult<W>> {
    let ids: Vec<ElementId> = ground.iter().collect();
    brute_force_opt_ordered(&ids, constraints, objective)
}

/// Decides whether the feasible family is non-empty.
///
/// Small grounds are enumerated exhaustively. Larger grounds use the
/// reservoir route: collect a maximal independent set per color, then test
/// whether the lower-bound color matroid and the instance matroid admit a
/// common independent set of size `Σ ℓ_c` inside the union.
pub fn feasible_exists(ground: &ElemSet, constraints: &Constraints) -> Result<bool> {
    let n = ground.len();
    if n <= MAX_BRUTE_GROUND {
        let ids: Vec<ElementId> = ground.iter().collect();
        let color_of: Vec<usize> = ids
            .iter()
            .map(|&e| Ok(constraints.colors.color_of(e)? as usize - 1))
            .collect::<Result<Vec<_>>>()?;
        let mut dependent = vec![false; 1usize << n];
        let mut counts = vec![0usize; constraints.color_count()];
        for mask in 0..(1usize << n) {
            if mask != 0 && dependent[mask & (mask - 1)] {
                dependent[mask] = true;
                continue;
            }
            let set: ElemSet = (0..n)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| ids[i])
                .collect();
            if !constraints.matroid.is_independent(&set)? {
                dependent[mask] = true;
                continue;
            }
            counts.fill(0);
            for i in 0..n {
                if mask >> i & 1 == 1 {
                    counts[color_of[i]] += 1;
                }
            }
            if constraints.bounds.counts_within(&counts) {
                return Ok(true);
            }
        }
        return Ok(false);
    }

    // Reservoir route: a feasible set exists iff one of size Σ ℓ_c hides in
    // the union of per-color maximal independent sets.
    let mut per_color: Vec<ElemSet> = vec![ElemSet::new(); constraints.color_count()];
    for e in ground.iter() {
        let c = constraints.colors.color_of(e)? as usize - 1;
        let cand = per_color[c].with(e);
        if constraints.matroid.is_independent(&cand)? {
            per_color[c] = cand;
        }
    }
    let mut union = ElemSet::new();
    for s in &per_color {
        union = union.union(s);
    }
    let lower = MatroidOracle::lower_color(&constraints.bounds, &constraints.colors);
    let common = max_cardinality_common(&constraints.matroid, &lower, &union)?;
    Ok(common.len() == constraints.bounds.lower_sum())
}

/// Rank of the restriction of `m` to `ground` (size of a greedy basis).
pub fn restricted_rank(m: &MatroidOracle, ground: &ElemSet) -> Result<usize> {
    Ok(greedy_basis(m, ground)?.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ColorMap, Element, FairnessBounds};
    use crate::objective::ObjectiveOracle;
    use std::collections::HashMap;

    fn ids(v: &[u32]) -> ElemSet {
        v.iter().map(|&i| ElementId(i)).collect()
    }

    fn modular_instance(
        colors_of: &[u32],
        weights: &[f64],
        matroid: MatroidOracle,
        lower: Vec<usize>,
        upper: Vec<usize>,
    ) -> (Constraints, ObjectiveOracle<f64>, ElemSet) {
        let color_count = lower.len();
        let els: Vec<Element> = colors_of
            .iter()
            .enumerate()
            .map(|(i, &c)| Element::new(i as u32, c, i))
            .collect();
        let cmap = ColorMap::new(&els, color_count).unwrap();
        let bounds = FairnessBounds::new(lower, upper).unwrap();
        let constraints = Constraints::new(matroid, bounds, cmap).unwrap();
        let w: HashMap<ElementId, f64> = weights
            .iter()
            .enumerate()
            .map(|(i, &x)| (ElementId(i as u32), x))
            .collect();
        let ground = (0..colors_of.len() as u32).map(ElementId).collect();
        (constraints, ObjectiveOracle::modular(w), ground)
    }

    #[test]
    fn infeasible_ground_reports_zero_feasible() {
        // Lower bound 1 on a color with no elements.
        let (constraints, f, ground) = modular_instance(
            &[1, 1],
            &[1.0, 2.0],
            MatroidOracle::uniform(2),
            vec![0, 1],
            vec![2, 1],
        );
        let r = brute_force_opt(&ground, &constraints, &f).unwrap();
        assert!(r.best.is_none());
        assert_eq!(r.feasible_count, 0);
        assert!(!feasible_exists(&ground, &constraints).unwrap());
    }

    #[test]
    fn free_instance_takes_all_positive_weights() {
        let (constraints, f, ground) = modular_instance(
            &[1, 1, 1, 1],
            &[2.0, -1.0, 0.5, -3.0],
            MatroidOracle::uniform(4),
            vec![0],
            vec![4],
        );
        let r = brute_force_opt(&ground, &constraints, &f).unwrap();
        let (set, value) = r.best.unwrap();
        assert_eq!(set, ids(&[0, 2]));
        assert!((value - 2.5).abs() < 1e-12);
    }

    #[test]
    fn empty_set_feasible_iff_no_lower_bounds() {
        let (constraints, _, ground) = modular_instance(
            &[1, 2],
            &[1.0, 1.0],
            MatroidOracle::uniform(2),
            vec![0, 0],
            vec![1, 1],
        );
        assert!(feasible_exists(&ground, &constraints).unwrap());
        let (tight, _, g2) = modular_instance(
            &[1, 2],
            &[1.0, 1.0],
            MatroidOracle::uniform(2),
            vec![3, 0],
            vec![3, 1],
        );
        // ℓ_1 = 3 exceeds the color population.
        assert!(!feasible_exists(&g2, &tight).unwrap());
    }

    #[test]
    fn large_ground_uses_reservoir_route() {
        // 30 elements, two colors, uniform matroid; both routes must agree.
        let colors_of: Vec<u32> = (0..30).map(|i| 1 + (i % 2)).collect();
        let weights: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let (constraints, _, ground) = modular_instance(
            &colors_of,
            &weights,
            MatroidOracle::uniform(4),
            vec![2, 2],
            vec![2, 2],
        );
        assert!(feasible_exists(&ground, &constraints).unwrap());
        let (too_tight, _, g2) = modular_instance(
            &colors_of,
            &weights,
            MatroidOracle::uniform(3),
            vec![2, 2],
            vec![2, 2],
        );
        // Σ ℓ_c = 4 exceeds the rank 3.
        assert!(!feasible_exists(&g2, &too_tight).unwrap());
    }

    #[test]
    fn brute_force_refuses_oversized_grounds() {
        let colors_of: Vec<u32> = vec![1; 21];
        let weights: Vec<f64> = vec![1.0; 21];
        let (constraints, f, ground) = modular_instance(
            &colors_of,
            &weights,
            MatroidOracle::uniform(2),
            vec![0],
            vec![21],
        );
        assert!(matches!(
            brute_force_opt(&ground, &constraints, &f),
            Err(Error::TooLarge(_))
        ));
    }
}
