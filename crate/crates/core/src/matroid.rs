//! Matroid independence oracles: the concrete families the algorithms use
//! plus derived oracles (contraction, truncation) built on top of them.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{ColorMap, ElemSet, ElementId, FairnessBounds};

/// Raw independence test. Implementations hold immutable parameter tables;
/// call counting lives in [`MatroidOracle`].
pub trait Independence: Send + Sync {
    fn check(&self, set: &ElemSet) -> Result<bool>;
}

/// Which family an oracle belongs to (for reporting and debugging).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatroidKind {
    Uniform,
    Partition,
    Laminar,
    LowerColor,
    UpperColor,
    Contraction,
    Truncation,
    CloneComposite,
    Custom,
}

/// Independence oracle with a rank bound and a per-instance query counter.
///
/// Oracles are immutable after construction and safe to query concurrently;
/// the counter is the only mutable state and is atomic.
#[derive(Clone)]
pub struct MatroidOracle {
    kernel: Arc<dyn Independence>,
    kind: MatroidKind,
    rank_bound: usize,
    calls: Arc<AtomicU64>,
}

impl MatroidOracle {
    pub fn from_kernel(
        kernel: Arc<dyn Independence>,
        kind: MatroidKind,
        rank_bound: usize,
    ) -> Self {
        MatroidOracle {
            kernel,
            kind,
            rank_bound,
            calls: Arc::new(AtomicU64::new(0)),
        }
    }

    /// True iff `set` is independent. Every call is counted.
    pub fn is_independent(&self, set: &ElemSet) -> Result<bool> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.kernel.check(set)
    }

    pub fn kind(&self) -> MatroidKind {
        self.kind
    }

    /// Upper bound on the size of any independent set.
    pub fn rank_bound(&self) -> usize {
        self.rank_bound
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    /// Raw kernel handle for derived oracles built outside this module, so a
    /// derived query counts once instead of cascading into the base counter.
    pub(crate) fn kernel_handle(&self) -> Arc<dyn Independence> {
        Arc::clone(&self.kernel)
    }

    /// Same family, fresh counter. Derived oracles keep referring to the
    /// shared kernel, so forking is cheap.
    pub fn fork(&self) -> Self {
        MatroidOracle {
            kernel: Arc::clone(&self.kernel),
            kind: self.kind,
            rank_bound: self.rank_bound,
            calls: Arc::new(AtomicU64::new(0)),
        }
    }

    /// Uniform matroid: `|S| ≤ k`.
    pub fn uniform(k: usize) -> Self {
        MatroidOracle::from_kernel(Arc::new(UniformKernel { cap: k }), MatroidKind::Uniform, k)
    }

    /// Partition matroid over explicit blocks: `|S ∩ block_i| ≤ cap_i`.
    /// Every queried element must be mapped to a block.
    pub fn partition(blocks: HashMap<ElementId, usize>, caps: Vec<usize>) -> Result<Self> {
        let mut sizes = vec![0usize; caps.len()];
        for (&e, &b) in &blocks {
            if b >= caps.len() {
                return Err(Error::InvalidInput(format!(
                    "element {e} mapped to block {b} but only {} caps given",
                    caps.len()
                )));
            }
            sizes[b] += 1;
        }
        let rank = caps.iter().zip(&sizes).map(|(&c, &s)| c.min(s)).sum();
        Ok(MatroidOracle::from_kernel(
            Arc::new(PartitionKernel { blocks, caps }),
            MatroidKind::Partition,
            rank,
        ))
    }

    /// Laminar matroid: `|S ∩ G| ≤ cap_G` for each group of a laminar family.
    /// Elements of `ground` outside every group are unconstrained.
    pub fn laminar(family: LaminarFamily, ground: &ElemSet) -> Result<Self> {
        let kernel = Arc::new(LaminarKernel { family });
        // Exact rank via a greedy basis; laminar checks are cheap.
        let mut basis = ElemSet::new();
        for e in ground.iter() {
            let cand = basis.with(e);
            if kernel.check(&cand)? {
                basis = cand;
            }
        }
        Ok(MatroidOracle {
            kernel,
            kind: MatroidKind::Laminar,
            rank_bound: basis.len(),
            calls: Arc::new(AtomicU64::new(0)),
        })
    }

    /// Partition matroid over colors with caps `ℓ_c`.
    pub fn lower_color(bounds: &FairnessBounds, colors: &ColorMap) -> Self {
        color_matroid(bounds.lowers().to_vec(), colors, MatroidKind::LowerColor)
    }

    /// Partition matroid over colors with caps `u_c`.
    pub fn upper_color(bounds: &FairnessBounds, colors: &ColorMap) -> Self {
        color_matroid(bounds.uppers().to_vec(), colors, MatroidKind::UpperColor)
    }

    /// Contraction by a pinned independent set: `X` independent iff
    /// `X ∪ pinned` is independent in the base matroid.
    pub fn contract(&self, pinned: &ElemSet) -> Result<Self> {
        if !self.kernel.check(pinned)? {
            return Err(Error::InvalidInput(
                "contraction requires an independent pinned set".into(),
            ));
        }
        Ok(MatroidOracle::from_kernel(
            Arc::new(ContractionKernel {
                base: Arc::clone(&self.kernel),
                pinned: pinned.clone(),
            }),
            MatroidKind::Contraction,
            self.rank_bound.saturating_sub(pinned.len()),
        ))
    }

    /// Truncation: independence in the base matroid plus `|S| ≤ cap`.
    pub fn truncate(&self, cap: usize) -> Self {
        MatroidOracle::from_kernel(
            Arc::new(TruncationKernel {
                base: Arc::clone(&self.kernel),
                cap,
            }),
            MatroidKind::Truncation,
            self.rank_bound.min(cap),
        )
    }

    /// Explicit set family, for axiom tests and adversarial fixtures only.
    /// The family is not required to be a matroid.
    pub fn custom(family: Vec<ElemSet>) -> Self {
        let rank = family.iter().map(|s| s.len()).max().unwrap_or(0);
        MatroidOracle::from_kernel(Arc::new(TableKernel { family }), MatroidKind::Custom, rank)
    }
}

fn color_matroid(caps_by_color: Vec<usize>, colors: &ColorMap, kind: MatroidKind) -> MatroidOracle {
    let population = colors.population();
    let rank = caps_by_color
        .iter()
        .zip(&population)
        .map(|(&c, &p)| c.min(p))
        .sum();
    MatroidOracle::from_kernel(
        Arc::new(ColorCapKernel {
            caps: caps_by_color,
            colors: colors.clone(),
        }),
        kind,
        rank,
    )
}

struct UniformKernel {
    cap: usize,
}

impl Independence for UniformKernel {
    fn check(&self, set: &ElemSet) -> Result<bool> {
        Ok(set.len() <= self.cap)
    }
}

struct PartitionKernel {
    blocks: HashMap<ElementId, usize>,
    caps: Vec<usize>,
}

impl Independence for PartitionKernel {
    fn check(&self, set: &ElemSet) -> Result<bool> {
        let mut used = vec![0usize; self.caps.len()];
        for e in set.iter() {
            let &b = self.blocks.get(&e).ok_or_else(|| {
                Error::InvalidInput(format!("element {e} not mapped to any block"))
            })?;
            used[b] += 1;
            if used[b] > self.caps[b] {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

struct ColorCapKernel {
    caps: Vec<usize>,
    colors: ColorMap,
}

impl Independence for ColorCapKernel {
    fn check(&self, set: &ElemSet) -> Result<bool> {
        let mut used = vec![0usize; self.caps.len()];
        for e in set.iter() {
            let c = self.colors.color_of(e)? as usize - 1;
            used[c] += 1;
            if used[c] > self.caps[c] {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Family of (group, cap) pairs where any two groups are nested or disjoint.
#[derive(Debug, Clone)]
pub struct LaminarFamily {
    groups: Vec<(ElemSet, usize)>,
}

impl LaminarFamily {
    pub fn new(groups: Vec<(ElemSet, usize)>) -> Result<Self> {
        for (i, (a, _)) in groups.iter().enumerate() {
            for (b, _) in groups.iter().skip(i + 1) {
                let nested = a.is_subset_of(b) || b.is_subset_of(a);
                let disjoint = a.iter().all(|e| !b.contains(e));
                if !nested && !disjoint {
                    return Err(Error::InvalidInput(
                        "laminar family has two crossing groups".into(),
                    ));
                }
            }
        }
        Ok(LaminarFamily { groups })
    }

    pub fn groups(&self) -> &[(ElemSet, usize)] {
        &self.groups
    }
}

struct LaminarKernel {
    family: LaminarFamily,
}

impl Independence for LaminarKernel {
    fn check(&self, set: &ElemSet) -> Result<bool> {
        for (group, cap) in &self.family.groups {
            let hits = set.iter().filter(|&e| group.contains(e)).count();
            if hits > *cap {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

struct ContractionKernel {
    base: Arc<dyn Independence>,
    pinned: ElemSet,
}

impl Independence for ContractionKernel {
    fn check(&self, set: &ElemSet) -> Result<bool> {
        self.base.check(&set.union(&self.pinned))
    }
}

struct TruncationKernel {
    base: Arc<dyn Independence>,
    cap: usize,
}

impl Independence for TruncationKernel {
    fn check(&self, set: &ElemSet) -> Result<bool> {
        if set.len() > self.cap {
            return Ok(false);
        }
        self.base.check(set)
    }
}

struct TableKernel {
    family: Vec<ElemSet>,
}

impl Independence for TableKernel {
    fn check(&self, set: &ElemSet) -> Result<bool> {
        Ok(self.family.iter().any(|s| s == set))
    }
}

/// Largest independent subset found by scanning `ground` in ascending id
/// order. For a true matroid this is a basis of the restriction to `ground`.
pub fn greedy_basis(m: &MatroidOracle, ground: &ElemSet) -> Result<ElemSet> {
    let mut basis = ElemSet::new();
    for e in ground.iter() {
        let cand = basis.with(e);
        if m.is_independent(&cand)? {
            basis = cand;
        }
    }
    Ok(basis)
}

/// Exhaustively checks non-emptiness, downward-closedness, and augmentation
/// over all subsets of `ground`. Refuses grounds larger than 14 elements.
pub fn verify_matroid_axioms(m: &MatroidOracle, ground: &ElemSet) -> Result<bool> {
    let n = ground.len();
    if n > 14 {
        return Err(Error::TooLarge(format!(
            "axiom check is exhaustive; ground of {n} exceeds 14 elements"
        )));
    }
    let ids: Vec<ElementId> = ground.iter().collect();
    let total = 1usize << n;
    let mut indep = vec![false; total];
    #[allow(clippy::needless_range_loop)]
    for mask in 0..total {
        let set: ElemSet = (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| ids[i])
            .collect();
        indep[mask] = m.is_independent(&set)?;
    }
    // Non-emptiness.
    if !indep[0] {
        return Ok(false);
    }
    // Downward-closedness: every one-element deletion of an independent set
    // stays independent (implies the full property by induction).
    for mask in 1..total {
        if !indep[mask] {
            continue;
        }
        for i in 0..n {
            if mask >> i & 1 == 1 && !indep[mask & !(1 << i)] {
                return Ok(false);
            }
        }
    }
    // Augmentation. Given downward-closedness it is enough to check pairs
    // with |B| = |A| + 1: for a larger B, any (|A|+1)-subset of B already
    // provides the element. Precomputing per-set extension masks makes each
    // pair check a couple of bit operations.
    let mut by_size: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    let mut ext = vec![0usize; total];
    for mask in 0..total {
        if !indep[mask] {
            continue;
        }
        by_size[(mask as u32).count_ones() as usize].push(mask);
        let mut extensions = 0usize;
        for i in 0..n {
            if mask >> i & 1 == 0 && indep[mask | (1 << i)] {
                extensions |= 1 << i;
            }
        }
        ext[mask] = extensions;
    }
    for sa in 0..n {
        for &a in &by_size[sa] {
            for &b in &by_size[sa + 1] {
                if (b & !a) & ext[a] == 0 {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Element;

    fn ids(v: &[u32]) -> ElemSet {
        v.iter().map(|&i| ElementId(i)).collect()
    }

    #[test]
    fn empty_set_is_independent_everywhere() {
        let m = MatroidOracle::uniform(0);
        assert!(m.is_independent(&ElemSet::new()).unwrap());
        assert_eq!(m.calls(), 1);
    }

    #[test]
    fn partition_blocks_enforce_caps() {
        // Blocks {a,b}:1, {c}:1; {a,b} exceeds its cap.
        let blocks: HashMap<ElementId, usize> =
            [(ElementId(0), 0), (ElementId(1), 0), (ElementId(2), 1)]
                .into_iter()
                .collect();
        let m = MatroidOracle::partition(blocks, vec![1, 1]).unwrap();
        assert!(!m.is_independent(&ids(&[0, 1])).unwrap());
        assert!(m.is_independent(&ids(&[0, 2])).unwrap());
        assert!(m.is_independent(&ids(&[1])).unwrap());
    }

    #[test]
    fn partition_zero_cap_block() {
        // Blocks {a}:0, {b}:1 leave only ∅ and {b} independent.
        let blocks: HashMap<ElementId, usize> =
            [(ElementId(0), 0), (ElementId(1), 1)].into_iter().collect();
        let m = MatroidOracle::partition(blocks, vec![0, 1]).unwrap();
        let independent: Vec<bool> = [ids(&[]), ids(&[0]), ids(&[1]), ids(&[0, 1])]
            .iter()
            .map(|s| m.is_independent(s).unwrap())
            .collect();
        assert_eq!(independent, vec![true, false, true, false]);
        assert_eq!(m.rank_bound(), 1);
    }

    #[test]
    fn partition_unmapped_element_is_an_error() {
        let blocks: HashMap<ElementId, usize> = [(ElementId(0), 0)].into_iter().collect();
        let m = MatroidOracle::partition(blocks, vec![1]).unwrap();
        assert!(m.is_independent(&ids(&[7])).is_err());
    }

    #[test]
    fn single_block_partition_is_uniform() {
        let blocks: HashMap<ElementId, usize> = (0..3u32).map(|i| (ElementId(i), 0)).collect();
        let m = MatroidOracle::partition(blocks, vec![2]).unwrap();
        let u = MatroidOracle::uniform(2);
        for mask in 0..8u32 {
            let set: ElemSet = (0..3)
                .filter(|i| mask >> i & 1 == 1)
                .map(ElementId)
                .collect();
            assert_eq!(
                m.is_independent(&set).unwrap(),
                u.is_independent(&set).unwrap()
            );
        }
        assert_eq!(m.rank_bound(), 2);
    }

    #[test]
    fn laminar_nested_caps() {
        // {a,b}:1 and {a,b,c,d}:2; {a,c,d} hits the outer cap.
        let family = LaminarFamily::new(vec![(ids(&[0, 1]), 1), (ids(&[0, 1, 2, 3]), 2)]).unwrap();
        let m = MatroidOracle::laminar(family, &ids(&[0, 1, 2, 3])).unwrap();
        assert!(!m.is_independent(&ids(&[0, 2, 3])).unwrap());
        assert!(m.is_independent(&ids(&[0, 2])).unwrap());
        assert!(!m.is_independent(&ids(&[0, 1])).unwrap());
        assert_eq!(m.rank_bound(), 2);
    }

    #[test]
    fn laminar_rejects_crossing_groups() {
        assert!(LaminarFamily::new(vec![(ids(&[0, 1]), 1), (ids(&[1, 2]), 1)]).is_err());
    }

    #[test]
    fn color_matroids_cap_by_color() {
        // Colors (1,1,1,2): lower caps ℓ=(2,1) give maximal sets of size 3.
        let els: Vec<Element> = [(0u32, 1u32), (1, 1), (2, 1), (3, 2)]
            .iter()
            .map(|&(i, c)| Element::new(i, c, i as usize))
            .collect();
        let colors = ColorMap::new(&els, 2).unwrap();
        let bounds = FairnessBounds::new(vec![2, 1], vec![2, 1]).unwrap();
        let m = MatroidOracle::lower_color(&bounds, &colors);
        assert!(m.is_independent(&ids(&[0, 1, 3])).unwrap());
        assert!(!m.is_independent(&ids(&[0, 1, 2])).unwrap());
        assert_eq!(m.rank_bound(), 3);
        let basis = greedy_basis(&m, &ids(&[0, 1, 2, 3])).unwrap();
        assert_eq!(basis.len(), 3);
    }

    #[test]
    fn upper_color_rank_on_small_ground() {
        // u=(2,1) on colors (1,1,1,2,2): rank 3.
        let els: Vec<Element> = [(0u32, 1u32), (1, 1), (2, 1), (3, 2), (4, 2)]
            .iter()
            .map(|&(i, c)| Element::new(i, c, i as usize))
            .collect();
        let colors = ColorMap::new(&els, 2).unwrap();
        let bounds = FairnessBounds::new(vec![0, 0], vec![2, 1]).unwrap();
        let m = MatroidOracle::upper_color(&bounds, &colors);
        assert_eq!(m.rank_bound(), 3);
        assert_eq!(greedy_basis(&m, &ids(&[0, 1, 2, 3, 4])).unwrap().len(), 3);
    }

    #[test]
    fn upper_color_free_when_caps_cover_population() {
        let els: Vec<Element> = (0..4u32).map(|i| Element::new(i, 1, i as usize)).collect();
        let colors = ColorMap::new(&els, 1).unwrap();
        let bounds = FairnessBounds::new(vec![0], vec![4]).unwrap();
        let m = MatroidOracle::upper_color(&bounds, &colors);
        assert!(m.is_independent(&ids(&[0, 1, 2, 3])).unwrap());
    }

    #[test]
    fn contraction_pins_a_set() {
        // Partition {a,b}:1,{c,d}:2, pinned {a}: {b} dependent, {c,d} independent.
        let blocks: HashMap<ElementId, usize> = [
            (ElementId(0), 0),
            (ElementId(1), 0),
            (ElementId(2), 1),
            (ElementId(3), 1),
        ]
        .into_iter()
        .collect();
        let m = MatroidOracle::partition(blocks, vec![1, 2]).unwrap();
        let c = m.contract(&ids(&[0])).unwrap();
        assert!(!c.is_independent(&ids(&[1])).unwrap());
        assert!(c.is_independent(&ids(&[2, 3])).unwrap());
        assert_eq!(c.rank_bound(), 2);
    }

    #[test]
    fn contraction_by_empty_set_is_identity() {
        let m = MatroidOracle::uniform(3);
        let c = m.contract(&ElemSet::new()).unwrap();
        assert!(c.is_independent(&ids(&[0, 1, 2])).unwrap());
        assert!(!c.is_independent(&ids(&[0, 1, 2, 3])).unwrap());
    }

    #[test]
    fn contraction_of_dependent_set_is_rejected() {
        let m = MatroidOracle::uniform(1);
        assert!(m.contract(&ids(&[0, 1])).is_err());
    }

    #[test]
    fn contraction_shrinks_uniform_rank() {
        let m = MatroidOracle::uniform(3);
        let c = m.contract(&ids(&[0, 1])).unwrap();
        assert!(c.is_independent(&ids(&[5])).unwrap());
        assert!(!c.is_independent(&ids(&[5, 6])).unwrap());
    }

    #[test]
    fn truncation_caps_cardinality() {
        let m = MatroidOracle::uniform(3);
        let t = m.truncate(2);
        assert!(t.is_independent(&ids(&[0, 1])).unwrap());
        assert!(!t.is_independent(&ids(&[0, 1, 2])).unwrap());
        let zero = m.truncate(0);
        assert!(zero.is_independent(&ElemSet::new()).unwrap());
        assert!(!zero.is_independent(&ids(&[0])).unwrap());
        // Cap at or above the rank changes nothing.
        let same = m.truncate(5);
        assert!(same.is_independent(&ids(&[0, 1, 2])).unwrap());
        assert!(!same.is_independent(&ids(&[0, 1, 2, 3])).unwrap());
    }

    #[test]
    fn axioms_hold_for_partition_on_six_elements() {
        let blocks: HashMap<ElementId, usize> = (0..6u32)
            .map(|i| (ElementId(i), (i % 2) as usize))
            .collect();
        let m = MatroidOracle::partition(blocks, vec![2, 1]).unwrap();
        let ground: ElemSet = (0..6).map(ElementId).collect();
        assert!(verify_matroid_axioms(&m, &ground).unwrap());
    }

    #[test]
    fn axioms_catch_missing_augmentation() {
        // {∅,{a},{b},{a,b},{c}} fails augmentation for A={c}, B={a,b}.
        let family = vec![ids(&[]), ids(&[0]), ids(&[1]), ids(&[0, 1]), ids(&[2])];
        let m = MatroidOracle::custom(family);
        assert!(!verify_matroid_axioms(&m, &ids(&[0, 1, 2])).unwrap());
    }

    #[test]
    fn axioms_hold_for_nested_laminar_on_eight_elements() {
        let family = LaminarFamily::new(vec![
            (ids(&[0, 1, 2]), 2),
            (ids(&[0, 1]), 1),
            (ids(&[3, 4, 5, 6]), 3),
            (ids(&[3, 4]), 1),
        ])
        .unwrap();
        let ground: ElemSet = (0..8).map(ElementId).collect();
        let m = MatroidOracle::laminar(family, &ground).unwrap();
        assert!(verify_matroid_axioms(&m, &ground).unwrap());
    }

    #[test]
    fn axiom_check_refuses_large_grounds() {
        let m = MatroidOracle::uniform(3);
        let ground: ElemSet = (0..15).map(ElementId).collect();
        assert!(matches!(
            verify_matroid_axioms(&m, &ground),
            Err(Error::TooLarge(_))
        ));
    }
}
