//! Exact matroid intersection over two independence oracles.
//!
//! Max-cardinality uses breadth-first shortest augmenting paths in the
//! exchange graph; max-weight uses node-cost shortest paths chosen
//! lexicographically by (total cost, arc count), which keeps every
//! intermediate set extreme and guarantees termination. Ties everywhere break
//! toward the smallest element id.

use std::collections::HashMap;

use crate::error::Result;
use crate::matroid::MatroidOracle;
use crate::model::{ElemSet, ElementId};
use crate::value::Value;

/// Maximum-cardinality set independent in both oracles, deterministic given
/// the ground ordering.
pub fn max_cardinality_common(
    m1: &MatroidOracle,
    m2: &MatroidOracle,
    ground: &ElemSet,
) -> Result<ElemSet> {
    let mut current = ElemSet::new();
    while let Some((next, _)) = augment::<i64>(m1, m2, ground, &current, None)? {
        current = next;
    }
    debug_assert!(m1.is_independent(&current)?);
    debug_assert!(m2.is_independent(&current)?);
    Ok(current)
}

/// Maximum-weight common independent set. Weights may be negative; among
/// equal-weight optima the result prefers larger cardinality.
pub fn max_weight_common<W: Value>(
    m1: &MatroidOracle,
    m2: &MatroidOracle,
    ground: &ElemSet,
    weights: &HashMap<ElementId, W>,
) -> Result<ElemSet> {
    let mut current = ElemSet::new();
    let mut current_weight = W::zero();
    let mut best = current.clone();
    let mut best_weight = current_weight;
    while let Some((next, cost)) = augment(m1, m2, ground, &current, Some(weights))? {
        // Each augmentation changes the weight by −cost; paths come cheapest
        // first, so once the cost turns positive no later set of the extreme
        // sequence can improve on the best seen.
        if cost > W::zero() {
            break;
        }
        current_weight -= cost;
        current = next;
        if current_weight >= best_weight {
            best = current.clone();
            best_weight = current_weight;
        }
    }
    debug_assert!(m1.is_independent(&best)?);
    debug_assert!(m2.is_independent(&best)?);
    Ok(best)
}

/// One round of the exchange-graph augmentation. Returns the augmented set
/// and the path cost, or None when `s` already has maximum cardinality.
fn augment<W: Value>(
    m1: &MatroidOracle,
    m2: &MatroidOracle,
    ground: &ElemSet,
    s: &ElemSet,
    weights: Option<&HashMap<ElementId, W>>,
) -> Result<Option<(ElemSet, W)>> {
    let ids: Vec<ElementId> = ground.iter().collect();
    let n = ids.len();
    let in_s: Vec<bool> = ids.iter().map(|&e| s.contains(e)).collect();

    // Node cost: +w inside the set (paying to drop), −w outside (gaining).
    let cost_of = |i: usize| -> W {
        match weights {
            None => W::zero(),
            Some(w) => {
                let raw = w.get(&ids[i]).copied().unwrap_or_else(W::zero);
                if in_s[i] {
                    raw
                } else {
                    -raw
                }
            }
        }
    };

    let mut sources = Vec::new();
    let mut sinks = vec![false; n];
    for i in 0..n {
        if in_s[i] {
            continue;
        }
        let grown = s.with(ids[i]);
        if m1.is_independent(&grown)? {
            sources.push(i);
        }
        if m2.is_independent(&grown)? {
            sinks[i] = true;
        }
    }
    if sources.is_empty() {
        return Ok(None);
    }

    // Exchange arcs. From S to outside when the swap keeps matroid 1
    // independent; from outside into S when it keeps matroid 2 independent.
    let mut arcs: Vec<(usize, usize)> = Vec::new();
    for (yi, &y) in ids.iter().enumerate() {
        if !in_s[yi] {
            continue;
        }
        let dropped = s.without(y);
        for (xi, &x) in ids.iter().enumerate() {
            if in_s[xi] {
                continue;
            }
            let swapped = dropped.with(x);
            if m1.is_independent(&swapped)? {
                arcs.push((yi, xi));
            }
            if m2.is_independent(&swapped)? {
                arcs.push((xi, yi));
            }
        }
    }
    arcs.sort_unstable();

    // Lexicographic (cost, hops) shortest paths from the source class.
    let mut dist: Vec<Option<(W, usize)>> = vec![None; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];
    for &x in &sources {
        dist[x] = Some((cost_of(x), 0));
    }
    for _ in 0..n {
        let mut changed = false;
        for &(u, v) in &arcs {
            let Some((du, hu)) = dist[u] else { continue };
            let cand = (du + cost_of(v), hu + 1);
            let better = match dist[v] {
                None => true,
                Some(cur) => cand.0 < cur.0 || (cand.0 == cur.0 && cand.1 < cur.1),
            };
            if better {
                dist[v] = Some(cand);
                parent[v] = Some(u);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut target: Option<usize> = None;
    for i in 0..n {
        if !sinks[i] {
            continue;
        }
        let Some(cand) = dist[i] else { continue };
        let better = match target {
            None => true,
            Some(t) => {
                let cur = dist[t].unwrap();
                cand.0 < cur.0 || (cand.0 == cur.0 && cand.1 < cur.1)
            }
        };
        if better {
            target = Some(i);
        }
    }
    let Some(t) = target else { return Ok(None) };

    let mut next = s.clone();
    let (path_cost, _) = dist[t].unwrap();
    let mut node = Some(t);
    while let Some(i) = node {
        if in_s[i] {
            next.remove(ids[i]);
        } else {
            next.insert(ids[i]);
        }
        node = parent[i];
    }
    debug_assert_eq!(next.len(), s.len() + 1);
    Ok(Some((next, path_cost)))
}
