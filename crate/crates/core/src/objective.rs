//! Monotone submodular and modular objective oracles.
//!
//! Each oracle answers whole-set `value` queries and hands out incremental
//! [`Tracker`]s keyed to a working solution, so the marginal-heavy streaming
//! loops pay O(|N(e)|) (coverage) or O(n) (exemplar, recommendation) per gain
//! query instead of re-evaluating the whole set.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_traits::Float;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{ElemSet, Element, ElementId};
use crate::value::Value;

/// Whole-set evaluator plus a factory for incremental trackers.
pub trait ObjectiveKernel<W: Value>: Send + Sync {
    fn value(&self, set: &ElemSet) -> Result<W>;
    fn tracker(&self, initial: &ElemSet) -> Result<Box<dyn GainTracker<W>>>;
}

/// Incremental view of the objective around a working solution.
///
/// `gain(e)` and `insert(e)` return `f(e | current)`; both treat an element
/// already in the set as a zero-gain no-op, matching set semantics.
pub trait GainTracker<W: Value>: Send {
    fn value(&self) -> W;
    fn set(&self) -> &ElemSet;
    fn gain(&self, e: ElementId) -> Result<W>;
    fn insert(&mut self, e: ElementId) -> Result<W>;
    fn remove(&mut self, e: ElementId) -> Result<()>;
    /// `f(current − remove + add)` without mutating the tracker.
    fn swap_value(&self, remove: ElementId, add: ElementId) -> Result<W>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    Coverage,
    Exemplar,
    Recommendation,
    Modular,
    Custom,
}

/// Objective oracle with a per-instance call counter.
///
/// Evaluations are pure given (data, set); the counter is atomic so oracles
/// can be shared read-only across parallel runs.
#[derive(Clone)]
pub struct ObjectiveOracle<W: Value> {
    kernel: Arc<dyn ObjectiveKernel<W>>,
    kind: ObjectiveKind,
    calls: Arc<AtomicU64>,
}

impl<W: Value> ObjectiveOracle<W> {
    pub fn from_kernel(kernel: Arc<dyn ObjectiveKernel<W>>, kind: ObjectiveKind) -> Self {
        ObjectiveOracle {
            kernel,
            kind,
            calls: Arc::new(AtomicU64::new(0)),
        }
    }

    pub fn kind(&self) -> ObjectiveKind {
        self.kind
    }

    /// `f(set)`; `f(∅) = 0`. Counted as one oracle call.
    pub fn value(&self, set: &ElemSet) -> Result<W> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.kernel.value(set)
    }

    /// `f(e | set) = f(set + e) − f(set)`. Requires `e ∉ set`.
    pub fn marginal(&self, e: ElementId, set: &ElemSet) -> Result<W> {
        if set.contains(e) {
            return Err(Error::InvalidInput(format!(
                "marginal of {e} requested against a set already containing it"
            )));
        }
        Ok(self.value(&set.with(e))? - self.value(set)?)
    }

    /// Incremental tracker initialized at `initial`.
    pub fn tracker(&self, initial: &ElemSet) -> Result<Tracker<W>> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        Ok(Tracker {
            inner: self.kernel.tracker(initial)?,
            calls: Arc::clone(&self.calls),
        })
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    /// Same objective with a fresh call counter.
    pub fn fork(&self) -> Self {
        ObjectiveOracle {
            kernel: Arc::clone(&self.kernel),
            kind: self.kind,
            calls: Arc::new(AtomicU64::new(0)),
        }
    }

    /// Set-coverage objective `f(S) = |⋃ N(v)|` over a node universe.
    /// Element payloads index `neighbors`.
    pub fn coverage(neighbors: Vec<Vec<u32>>, elements: &[Element]) -> Result<Self> {
        let payload_of = payload_map(elements, neighbors.len(), "neighbor list")?;
        let universe = neighbors
            .iter()
            .flat_map(|l| l.iter().copied())
            .max()
            .map_or(0, |m| m as usize + 1);
        let mut sorted = neighbors;
        for l in &mut sorted {
            l.sort_unstable();
            l.dedup();
        }
        Ok(ObjectiveOracle::from_kernel(
            Arc::new(CoverageKernel {
                neighbors: sorted,
                payload_of,
                universe,
            }),
            ObjectiveKind::Coverage,
        ))
    }

    /// Modular objective `f(S) = Σ_{e∈S} w(e)`, weights keyed by element id.
    pub fn modular(weights: HashMap<ElementId, W>) -> Self {
        ObjectiveOracle::from_kernel(Arc::new(ModularKernel { weights }), ObjectiveKind::Modular)
    }

    /// Arbitrary normalized set function, for tests and fixtures.
    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(&ElemSet) -> W + Send + Sync + 'static,
    {
        ObjectiveOracle::from_kernel(
            Arc::new(CustomKernel { f: Arc::new(f) }),
            ObjectiveKind::Custom,
        )
    }

    /// Objective shifted by a fixed pinned set and renormalized:
    /// `f'(X) = f(X ∪ pinned) − f(pinned)`. Monotone submodular if `f` is.
    pub fn shifted(&self, pinned: &ElemSet) -> Result<Self> {
        let offset = self.kernel.value(pinned)?;
        Ok(ObjectiveOracle::from_kernel(
            Arc::new(ShiftedKernel {
                base: Arc::clone(&self.kernel),
                pinned: pinned.clone(),
                offset,
            }),
            self.kind,
        ))
    }
}

impl<W: Value + Float> ObjectiveOracle<W> {
    /// Exemplar-based clustering gain against a phantom exemplar at the
    /// origin: `f(S) = Σ_{p} (d(p,0) − min_{e∈S∪{0}} d(p,e))`, squared
    /// Euclidean distances. Element payloads index rows of `points`.
    pub fn exemplar(points: Vec<Vec<W>>, elements: &[Element]) -> Result<Self> {
        let payload_of = payload_map(elements, points.len(), "point row")?;
        let dim = points.first().map_or(0, |p| p.len());
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidInput(
                "point rows have mixed dimensions".into(),
            ));
        }
        Ok(ObjectiveOracle::from_kernel(
            Arc::new(ExemplarKernel { points, payload_of }),
            ObjectiveKind::Exemplar,
        ))
    }

    /// Recommendation utility interpolating catalog coverage and a user
    /// score: `f(S) = α Σ_{m'} max(max_{m∈S} v_m·v_{m'}, 0) + (1−α) Σ w_u·v_m`.
    pub fn recommendation(
        movie_vecs: Vec<Vec<W>>,
        user_vec: Vec<W>,
        alpha: W,
        elements: &[Element],
    ) -> Result<Self> {
        if alpha < W::zero() || alpha > W::one() {
            return Err(Error::InvalidInput("alpha must lie in [0, 1]".into()));
        }
        let payload_of = payload_map(elements, movie_vecs.len(), "movie vector")?;
        let dim = user_vec.len();
        if movie_vecs.iter().any(|v| v.len() != dim) {
            return Err(Error::InvalidInput(
                "movie vectors and user vector have mixed dimensions".into(),
            ));
        }
        Ok(ObjectiveOracle::from_kernel(
            Arc::new(RecommendationKernel {
                movie_vecs,
                user_vec,
                alpha,
                payload_of,
            }),
            ObjectiveKind::Recommendation,
        ))
    }
}

fn payload_map(
    elements: &[Element],
    data_len: usize,
    what: &str,
) -> Result<HashMap<ElementId, usize>> {
    let mut map = HashMap::with_capacity(elements.len());
    for el in elements {
        if el.payload >= data_len {
            return Err(Error::InvalidInput(format!(
                "element {} payload {} has no {what} (only {data_len} available)",
                el.id, el.payload
            )));
        }
        map.insert(el.id, el.payload);
    }
    Ok(map)
}

/// Counted wrapper around a kernel tracker.
pub struct Tracker<W: Value> {
    inner: Box<dyn GainTracker<W>>,
    calls: Arc<AtomicU64>,
}

impl<W: Value> Tracker<W> {
    fn count(&self) {
        self.calls.fetch_add(1, Ordering::Relaxed);
    }

    pub fn value(&self) -> W {
        self.inner.value()
    }

    pub fn set(&self) -> &ElemSet {
        self.inner.set()
    }

    pub fn gain(&self, e: ElementId) -> Result<W> {
        self.count();
        self.inner.gain(e)
    }

    pub fn insert(&mut self, e: ElementId) -> Result<W> {
        self.count();
        self.inner.insert(e)
    }

    pub fn remove(&mut self, e: ElementId) -> Result<()> {
        self.count();
        self.inner.remove(e)
    }

    pub fn swap_value(&self, remove: ElementId, add: ElementId) -> Result<W> {
        self.count();
        self.inner.swap_value(remove, add)
    }
}

// ---------------------------------------------------------------------------
// Modular

struct ModularKernel<W: Value> {
    weights: HashMap<ElementId, W>,
}

impl<W: Value> ModularKernel<W> {
    fn weight(&self, e: ElementId) -> Result<W> {
        self.weights
            .get(&e)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("no weight for element {e}")))
    }
}

impl<W: Value> ObjectiveKernel<W> for ModularKernel<W> {
    fn value(&self, set: &ElemSet) -> Result<W> {
        let mut total = W::zero();
        for e in set.iter() {
            total += self.weight(e)?;
        }
        Ok(total)
    }

    fn tracker(&self, initial: &ElemSet) -> Result<Box<dyn GainTracker<W>>> {
        Ok(Box::new(ModularTracker {
            weights: self.weights.clone(),
            set: initial.clone(),
            total: self.value(initial)?,
        }))
    }
}

struct ModularTracker<W: Value> {
    weights: HashMap<ElementId, W>,
    set: ElemSet,
    total: W,
}

impl<W: Value> ModularTracker<W> {
    fn weight(&self, e: ElementId) -> Result<W> {
        self.weights
            .get(&e)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("no weight for element {e}")))
    }
}

impl<W: Value> GainTracker<W> for ModularTracker<W> {
    fn value(&self) -> W {
        self.total
    }

    fn set(&self) -> &ElemSet {
        &self.set
    }

    fn gain(&self, e: ElementId) -> Result<W> {
        if self.set.contains(e) {
            return Ok(W::zero());
        }
        self.weight(e)
    }

    fn insert(&mut self, e: ElementId) -> Result<W> {
        let g = self.gain(e)?;
        if self.set.insert(e) {
            self.total += g;
        }
        Ok(g)
    }

    fn remove(&mut self, e: ElementId) -> Result<()> {
        if self.set.remove(e) {
            self.total -= self.weight(e)?;
        }
        Ok(())
    }

    fn swap_value(&self, remove: ElementId, add: ElementId) -> Result<W> {
        let mut v = self.total;
        let removed = self.set.contains(remove);
        if removed {
            v -= self.weight(remove)?;
        }
        let present_after = self.set.contains(add) && !(removed && add == remove);
        if !present_after {
            v += self.weight(add)?;
        }
        Ok(v)
    }
}

// ---------------------------------------------------------------------------
// Coverage

struct CoverageKernel {
    neighbors: Vec<Vec<u32>>,
    payload_of: HashMap<ElementId, usize>,
    universe: usize,
}

impl CoverageKernel {
    fn neighbors_of(&self, e: ElementId) -> Result<&[u32]> {
        let &p = self
            .payload_of
            .get(&e)
            .ok_or_else(|| Error::InvalidInput(format!("unresolvable payload for element {e}")))?;
        Ok(&self.neighbors[p])
    }
}

impl<W: Value> ObjectiveKernel<W> for CoverageKernel {
    fn value(&self, set: &ElemSet) -> Result<W> {
        let mut covered = vec![false; self.universe];
        let mut count = 0usize;
        for e in set.iter() {
            for &u in self.neighbors_of(e)? {
                if !covered[u as usize] {
                    covered[u as usize] = true;
                    count += 1;
                }
            }
        }
        W::from_usize(count)
            .ok_or_else(|| Error::InvalidInput("coverage count does not fit the scalar".into()))
    }

    fn tracker(&self, initial: &ElemSet) -> Result<Box<dyn GainTracker<W>>> {
        let mut t = CoverageTracker {
            neighbors: self.neighbors.clone(),
            payload_of: self.payload_of.clone(),
            counts: vec![0u32; self.universe],
            covered: 0,
            set: ElemSet::new(),
        };
        for e in initial.iter() {
            t.insert_raw(e)?;
        }
        Ok(Box::new(t))
    }
}

struct CoverageTracker {
    neighbors: Vec<Vec<u32>>,
    payload_of: HashMap<ElementId, usize>,
    counts: Vec<u32>,
    covered: usize,
    set: ElemSet,
}

impl CoverageTracker {
    fn neighbors_of(&self, e: ElementId) -> Result<&[u32]> {
        let &p = self
            .payload_of
            .get(&e)
            .ok_or_else(|| Error::InvalidInput(format!("unresolvable payload for element {e}")))?;
        Ok(&self.neighbors[p])
    }

    fn insert_raw(&mut self, e: ElementId) -> Result<usize> {
        if !self.set.insert(e) {
            return Ok(0);
        }
        let p = self.payload_of[&e];
        let mut gained = 0;
        for &u in &self.neighbors[p] {
            if self.counts[u as usize] == 0 {
                gained += 1;
            }
            self.counts[u as usize] += 1;
        }
        self.covered += gained;
        Ok(gained)
    }
}

impl<W: Value> GainTracker<W> for CoverageTracker {
    fn value(&self) -> W {
        W::from_usize(self.covered).expect("coverage count fits the scalar")
    }

    fn set(&self) -> &ElemSet {
        &self.set
    }

    fn gain(&self, e: ElementId) -> Result<W> {
        if self.set.contains(e) {
            return Ok(W::zero());
        }
        let fresh = self
            .neighbors_of(e)?
            .iter()
            .filter(|&&u| self.counts[u as usize] == 0)
            .count();
        Ok(W::from_usize(fresh).expect("coverage count fits the scalar"))
    }

    fn insert(&mut self, e: ElementId) -> Result<W> {
        self.neighbors_of(e)?;
        let gained = self.insert_raw(e)?;
        Ok(W::from_usize(gained).expect("coverage count fits the scalar"))
    }

    fn remove(&mut self, e: ElementId) -> Result<()> {
        if !self.set.remove(e) {
            return Ok(());
        }
        let p = self.payload_of[&e];
        let mut lost = 0;
        for &u in &self.neighbors[p] {
            self.counts[u as usize] -= 1;
            if self.counts[u as usize] == 0 {
                lost += 1;
            }
        }
        self.covered -= lost;
        Ok(())
    }

    fn swap_value(&self, remove: ElementId, add: ElementId) -> Result<W> {
        let removing = self.set.contains(remove);
        let rm_neigh: &[u32] = if removing {
            self.neighbors_of(remove)?
        } else {
            &[]
        };
        let mut total = self.covered;
        if removing {
            total -= rm_neigh
                .iter()
                .filter(|&&u| self.counts[u as usize] == 1)
                .count();
        }
        let add_present_after = self.set.contains(add) && !(removing && add == remove);
        if !add_present_after {
            // Count nodes uncovered after the removal that `add` covers.
            for &u in self.neighbors_of(add)? {
                let c = self.counts[u as usize]
                    - u32::from(removing && rm_neigh.binary_search(&u).is_ok());
                if c == 0 {
                    total += 1;
                }
            }
        }
        Ok(W::from_usize(total).expect("coverage count fits the scalar"))
    }
}

// ---------------------------------------------------------------------------
// Exemplar clustering

/// Which solution member currently attains a tracked extremum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Phantom,
    Elem(ElementId),
}

#[derive(Debug, Clone, Copy)]
struct Top2<W> {
    best: (W, Slot),
    second: Option<(W, Slot)>,
}

impl<W: Value> Top2<W> {
    fn new(baseline: W) -> Self {
        Top2 {
            best: (baseline, Slot::Phantom),
            second: None,
        }
    }

    /// Offers a candidate score; keeps the two best according to `prefer`
    /// (true when the first argument should be ranked ahead).
    fn offer(&mut self, score: W, slot: Slot, prefer: fn(W, W) -> bool) {
        if prefer(score, self.best.0) {
            self.second = Some(self.best);
            self.best = (score, slot);
        } else if self.second.is_none() || prefer(score, self.second.unwrap().0) {
            self.second = Some((score, slot));
        }
    }

    fn involves(&self, e: ElementId) -> bool {
        self.best.1 == Slot::Elem(e) || matches!(self.second, Some((_, Slot::Elem(x))) if x == e)
    }

    /// Best score once element `e` is excluded; None when the top two are
    /// exhausted by the exclusion (caller must rescan).
    fn best_without(&self, e: ElementId) -> Option<W> {
        if self.best.1 != Slot::Elem(e) {
            Some(self.best.0)
        } else {
            self.second.map(|(s, _)| s)
        }
    }
}

fn prefer_min<W: Value>(a: W, b: W) -> bool {
    a < b
}

fn prefer_max<W: Value>(a: W, b: W) -> bool {
    a > b
}

fn sq_dist<W: Value + Float>(a: &[W], b: &[W]) -> W {
    let mut acc = W::zero();
    for (&x, &y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

fn sq_norm<W: Value + Float>(a: &[W]) -> W {
    let mut acc = W::zero();
    for &x in a {
        acc += x * x;
    }
    acc
}

fn dot<W: Value + Float>(a: &[W], b: &[W]) -> W {
    let mut acc = W::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

struct ExemplarKernel<W> {
    points: Vec<Vec<W>>,
    payload_of: HashMap<ElementId, usize>,
}

impl<W: Value + Float> ExemplarKernel<W> {
    fn row(&self, e: ElementId) -> Result<&[W]> {
        let &p = self
            .payload_of
            .get(&e)
            .ok_or_else(|| Error::InvalidInput(format!("unresolvable payload for element {e}")))?;
        Ok(&self.points[p])
    }
}

impl<W: Value + Float> ObjectiveKernel<W> for ExemplarKernel<W> {
    fn value(&self, set: &ElemSet) -> Result<W> {
        let rows: Vec<&[W]> = set.iter().map(|e| self.row(e)).collect::<Result<_>>()?;
        let mut total = W::zero();
        for p in &self.points {
            let d0 = sq_norm(p);
            let mut best = d0;
            for r in &rows {
                let d = sq_dist(p, r);
                if d < best {
                    best = d;
                }
            }
            total += d0 - best;
        }
        Ok(total)
    }

    fn tracker(&self, initial: &ElemSet) -> Result<Box<dyn GainTracker<W>>> {
        let d0: Vec<W> = self.points.iter().map(|p| sq_norm(p)).collect();
        let mut t = ExemplarTracker {
            points: self.points.clone(),
            payload_of: self.payload_of.clone(),
            tops: d0.iter().map(|&d| Top2::new(d)).collect(),
            d0,
            sum_best: W::zero(),
            set: ElemSet::new(),
        };
        t.sum_best = t.d0.iter().fold(W::zero(), |a, &b| a + b);
        for e in initial.iter() {
            GainTracker::insert(&mut t, e)?;
        }
        Ok(Box::new(t))
    }
}

struct ExemplarTracker<W> {
    points: Vec<Vec<W>>,
    payload_of: HashMap<ElementId, usize>,
    d0: Vec<W>,
    /// Per point: two smallest distances over the solution plus the phantom.
    tops: Vec<Top2<W>>,
    sum_best: W,
    set: ElemSet,
}

impl<W: Value + Float> ExemplarTracker<W> {
    fn row(&self, e: ElementId) -> Result<&[W]> {
        let &p = self
            .payload_of
            .get(&e)
            .ok_or_else(|| Error::InvalidInput(format!("unresolvable payload for element {e}")))?;
        Ok(&self.points[p])
    }
}

impl<W: Value + Float> GainTracker<W> for ExemplarTracker<W> {
    fn value(&self) -> W {
        self.d0.iter().fold(W::zero(), |a, &b| a + b) - self.sum_best
    }

    fn set(&self) -> &ElemSet {
        &self.set
    }

    fn gain(&self, e: ElementId) -> Result<W> {
        if self.set.contains(e) {
            return Ok(W::zero());
        }
        let row = self.row(e)?;
        let mut g = W::zero();
        for (p, top) in self.points.iter().zip(&self.tops) {
            let d = sq_dist(p, row);
            if d < top.best.0 {
                g += top.best.0 - d;
            }
        }
        Ok(g)
    }

    fn insert(&mut self, e: ElementId) -> Result<W> {
        if self.set.contains(e) {
            return Ok(W::zero());
        }
        let row = self.row(e)?.to_vec();
        let mut g = W::zero();
        for (i, p) in self.points.iter().enumerate() {
            let d = sq_dist(p, &row);
            if d < self.tops[i].best.0 {
                g += self.tops[i].best.0 - d;
                self.sum_best -= self.tops[i].best.0 - d;
            }
            self.tops[i].offer(d, Slot::Elem(e), prefer_min);
        }
        self.set.insert(e);
        Ok(g)
    }

    fn remove(&mut self, e: ElementId) -> Result<()> {
        if !self.set.remove(e) {
            return Ok(());
        }
        let member_rows: Vec<(ElementId, Vec<W>)> = self
            .set
            .iter()
            .map(|m| Ok((m, self.row(m)?.to_vec())))
            .collect::<Result<_>>()?;
        for i in 0..self.points.len() {
            if !self.tops[i].involves(e) {
                continue;
            }
            // Rescan this point's two smallest over the remaining members.
            let old_best = self.tops[i].best.0;
            let mut top = Top2::new(self.d0[i]);
            for (m, row) in &member_rows {
                top.offer(sq_dist(&self.points[i], row), Slot::Elem(*m), prefer_min);
            }
            self.sum_best += top.best.0 - old_best;
            self.tops[i] = top;
        }
        Ok(())
    }

    fn swap_value(&self, remove: ElementId, add: ElementId) -> Result<W> {
        let removing = self.set.contains(remove);
        let add_present_after = self.set.contains(add) && !(removing && add == remove);
        let add_row = self.row(add)?;
        let mut sum = W::zero();
        for (i, p) in self.points.iter().enumerate() {
            let mut best = if removing {
                match self.tops[i].best_without(remove) {
                    Some(b) => b,
                    None => {
                        // Top two both referenced `remove`: rescan.
                        let mut b = self.d0[i];
                        for m in self.set.iter().filter(|&m| m != remove) {
                            let d = sq_dist(p, self.row(m)?);
                            if d < b {
                                b = d;
                            }
                        }
                        b
                    }
                }
            } else {
                self.tops[i].best.0
            };
            if !add_present_after {
                let d = sq_dist(p, add_row);
                if d < best {
                    best = d;
                }
            }
            sum += self.d0[i] - best;
        }
        Ok(sum)
    }
}

// ---------------------------------------------------------------------------
// Recommendation

struct RecommendationKernel<W> {
    movie_vecs: Vec<Vec<W>>,
    user_vec: Vec<W>,
    alpha: W,
    payload_of: HashMap<ElementId, usize>,
}

impl<W: Value + Float> RecommendationKernel<W> {
    fn vec_of(&self, e: ElementId) -> Result<&[W]> {
        let &p = self
            .payload_of
            .get(&e)
            .ok_or_else(|| Error::InvalidInput(format!("unresolvable payload for element {e}")))?;
        Ok(&self.movie_vecs[p])
    }
}

impl<W: Value + Float> ObjectiveKernel<W> for RecommendationKernel<W> {
    fn value(&self, set: &ElemSet) -> Result<W> {
        let vecs: Vec<&[W]> = set.iter().map(|e| self.vec_of(e)).collect::<Result<_>>()?;
        let mut cover = W::zero();
        for m in &self.movie_vecs {
            let mut best = W::zero();
            for v in &vecs {
                let d = dot(v, m);
                if d > best {
                    best = d;
                }
            }
            cover += best;
        }
        let mut score = W::zero();
        for v in &vecs {
            score += dot(&self.user_vec, v);
        }
        Ok(self.alpha * cover + (W::one() - self.alpha) * score)
    }

    fn tracker(&self, initial: &ElemSet) -> Result<Box<dyn GainTracker<W>>> {
        let mut t = RecommendationTracker {
            movie_vecs: self.movie_vecs.clone(),
            user_vec: self.user_vec.clone(),
            alpha: self.alpha,
            payload_of: self.payload_of.clone(),
            tops: self
                .movie_vecs
                .iter()
                .map(|_| Top2::new(W::zero()))
                .collect(),
            sum_best: W::zero(),
            sum_score: W::zero(),
            set: ElemSet::new(),
        };
        for e in initial.iter() {
            GainTracker::insert(&mut t, e)?;
        }
        Ok(Box::new(t))
    }
}

struct RecommendationTracker<W> {
    movie_vecs: Vec<Vec<W>>,
    user_vec: Vec<W>,
    alpha: W,
    payload_of: HashMap<ElementId, usize>,
    /// Per catalog movie: two largest clamped dot products over the solution.
    tops: Vec<Top2<W>>,
    sum_best: W,
    sum_score: W,
    set: ElemSet,
}

impl<W: Value + Float> RecommendationTracker<W> {
    fn vec_of(&self, e: ElementId) -> Result<&[W]> {
        let &p = self
            .payload_of
            .get(&e)
            .ok_or_else(|| Error::InvalidInput(format!("unresolvable payload for element {e}")))?;
        Ok(&self.movie_vecs[p])
    }
}

impl<W: Value + Float> GainTracker<W> for RecommendationTracker<W> {
    fn value(&self) -> W {
        self.alpha * self.sum_best + (W::one() - self.alpha) * self.sum_score
    }

    fn set(&self) -> &ElemSet {
        &self.set
    }

    fn gain(&self, e: ElementId) -> Result<W> {
        if self.set.contains(e) {
            return Ok(W::zero());
        }
        let v = self.vec_of(e)?;
        let mut cover_gain = W::zero();
        for (m, top) in self.movie_vecs.iter().zip(&self.tops) {
            let d = dot(v, m);
            if d > top.best.0 {
                cover_gain += d - top.best.0;
            }
        }
        Ok(self.alpha * cover_gain + (W::one() - self.alpha) * dot(&self.user_vec, v))
    }

    fn insert(&mut self, e: ElementId) -> Result<W> {
        if self.set.contains(e) {
            return Ok(W::zero());
        }
        let g = self.gain(e)?;
        let v = self.vec_of(e)?.to_vec();
        for (i, m) in self.movie_vecs.iter().enumerate() {
            let d = dot(&v, m);
            if d > self.tops[i].best.0 {
                self.sum_best += d - self.tops[i].best.0;
            }
            self.tops[i].offer(d, Slot::Elem(e), prefer_max);
        }
        self.sum_score += dot(&self.user_vec, &v);
        self.set.insert(e);
        Ok(g)
    }

    fn remove(&mut self, e: ElementId) -> Result<()> {
        if !self.set.remove(e) {
            return Ok(());
        }
        self.sum_score -= dot(&self.user_vec, self.vec_of(e)?);
        let member_vecs: Vec<(ElementId, Vec<W>)> = self
            .set
            .iter()
            .map(|m| Ok((m, self.vec_of(m)?.to_vec())))
            .collect::<Result<_>>()?;
        for i in 0..self.movie_vecs.len() {
            if !self.tops[i].involves(e) {
                continue;
            }
            let old_best = self.tops[i].best.0;
            let mut top = Top2::new(W::zero());
            for (m, v) in &member_vecs {
                top.offer(dot(v, &self.movie_vecs[i]), Slot::Elem(*m), prefer_max);
            }
            self.sum_best += top.best.0 - old_best;
            self.tops[i] = top;
        }
        Ok(())
    }

    fn swap_value(&self, remove: ElementId, add: ElementId) -> Result<W> {
        let removing = self.set.contains(remove);
        let add_present_after = self.set.contains(add) && !(removing && add == remove);
        let add_vec = self.vec_of(add)?;
        let mut sum_best = W::zero();
        for (i, m) in self.movie_vecs.iter().enumerate() {
            let mut best = if removing {
                match self.tops[i].best_without(remove) {
                    Some(b) => b,
                    None => {
                        let mut b = W::zero();
                        for mem in self.set.iter().filter(|&mem| mem != remove) {
                            let d = dot(self.vec_of(mem)?, m);
                            if d > b {
                                b = d;
                            }
                        }
                        b
                    }
                }
            } else {
                self.tops[i].best.0
            };
            if !add_present_after {
                let d = dot(add_vec, m);
                if d > best {
                    best = d;
                }
            }
            sum_best += best;
        }
        let mut sum_score = self.sum_score;
        if removing {
            sum_score -= dot(&self.user_vec, self.vec_of(remove)?);
        }
        if !add_present_after {
            sum_score += dot(&self.user_vec, add_vec);
        }
        Ok(self.alpha * sum_best + (W::one() - self.alpha) * sum_score)
    }
}

// ---------------------------------------------------------------------------
// Custom and shifted

struct CustomKernel<W> {
    f: Arc<dyn Fn(&ElemSet) -> W + Send + Sync>,
}

impl<W: Value> ObjectiveKernel<W> for CustomKernel<W> {
    fn value(&self, set: &ElemSet) -> Result<W> {
        Ok((self.f)(set))
    }

    fn tracker(&self, initial: &ElemSet) -> Result<Box<dyn GainTracker<W>>> {
        Ok(Box::new(RecomputeTracker {
            f: Arc::clone(&self.f),
            cached: (self.f)(initial),
            set: initial.clone(),
        }))
    }
}

struct RecomputeTracker<W> {
    f: Arc<dyn Fn(&ElemSet) -> W + Send + Sync>,
    cached: W,
    set: ElemSet,
}

impl<W: Value> GainTracker<W> for RecomputeTracker<W> {
    fn value(&self) -> W {
        self.cached
    }

    fn set(&self) -> &ElemSet {
        &self.set
    }

    fn gain(&self, e: ElementId) -> Result<W> {
        if self.set.contains(e) {
            return Ok(W::zero());
        }
        Ok((self.f)(&self.set.with(e)) - self.cached)
    }

    fn insert(&mut self, e: ElementId) -> Result<W> {
        if !self.set.insert(e) {
            return Ok(W::zero());
        }
        let v = (self.f)(&self.set);
        let g = v - self.cached;
        self.cached = v;
        Ok(g)
    }

    fn remove(&mut self, e: ElementId) -> Result<()> {
        if self.set.remove(e) {
            self.cached = (self.f)(&self.set);
        }
        Ok(())
    }

    fn swap_value(&self, remove: ElementId, add: ElementId) -> Result<W> {
        Ok((self.f)(&self.set.without(remove).with(add)))
    }
}

struct ShiftedKernel<W: Value> {
    base: Arc<dyn ObjectiveKernel<W>>,
    pinned: ElemSet,
    offset: W,
}

impl<W: Value> ObjectiveKernel<W> for ShiftedKernel<W> {
    fn value(&self, set: &ElemSet) -> Result<W> {
        Ok(self.base.value(&set.union(&self.pinned))? - self.offset)
    }

    fn tracker(&self, initial: &ElemSet) -> Result<Box<dyn GainTracker<W>>> {
        Ok(Box::new(ShiftedTracker {
            inner: self.base.tracker(&initial.union(&self.pinned))?,
            pinned: self.pinned.clone(),
            offset: self.offset,
            set: initial.clone(),
        }))
    }
}

struct ShiftedTracker<W: Value> {
    inner: Box<dyn GainTracker<W>>,
    pinned: ElemSet,
    offset: W,
    set: ElemSet,
}

impl<W: Value> GainTracker<W> for ShiftedTracker<W> {
    fn value(&self) -> W {
        self.inner.value() - self.offset
    }

    fn set(&self) -> &ElemSet {
        &self.set
    }

    fn gain(&self, e: ElementId) -> Result<W> {
        if self.set.contains(e) {
            return Ok(W::zero());
        }
        self.inner.gain(e)
    }

    fn insert(&mut self, e: ElementId) -> Result<W> {
        if !self.set.insert(e) {
            return Ok(W::zero());
        }
        self.inner.insert(e)
    }

    fn remove(&mut self, e: ElementId) -> Result<()> {
        if self.set.remove(e) && !self.pinned.contains(e) {
            self.inner.remove(e)?;
        }
        Ok(())
    }

    fn swap_value(&self, remove: ElementId, add: ElementId) -> Result<W> {
        let rm = if self.pinned.contains(remove) {
            // Pinned elements cannot leave the shifted solution.
            return Err(Error::InvalidInput(
                "cannot swap out a pinned element of a shifted objective".into(),
            ));
        } else {
            remove
        };
        Ok(self.inner.swap_value(rm, add)? - self.offset)
    }
}

// ---------------------------------------------------------------------------
// Property checks

/// A sampled witness that an oracle is not monotone submodular.
#[derive(Debug, Clone)]
pub struct SubmodularityViolation {
    pub inner: ElemSet,
    pub outer: ElemSet,
    pub element: ElementId,
    pub monotone_failed: bool,
}

/// Samples random `(Y ⊆ X, e ∉ X)` triples and checks `f(e|Y) ≥ f(e|X) − tol`
/// and `f(e|X) ≥ −tol`. Returns the first counterexample found, if any.
pub fn check_submodular_monotone<W: Value>(
    f: &ObjectiveOracle<W>,
    ground: &ElemSet,
    trials: usize,
    seed: u64,
) -> Result<Option<SubmodularityViolation>> {
    let ids: Vec<ElementId> = ground.iter().collect();
    if ids.is_empty() {
        return Ok(None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let e = ids[rng.gen_range(0..ids.len())];
        let mut outer = ElemSet::new();
        for &x in &ids {
            if x != e && rng.gen_bool(0.5) {
                outer.insert(x);
            }
        }
        let mut inner = ElemSet::new();
        let mut members: Vec<ElementId> = outer.iter().collect();
        members.shuffle(&mut rng);
        let keep = rng.gen_range(0..=members.len());
        for &m in members.iter().take(keep) {
            inner.insert(m);
        }
        let g_outer = f.marginal(e, &outer)?;
        let g_inner = f.marginal(e, &inner)?;
        if g_outer < -W::tol() {
            return Ok(Some(SubmodularityViolation {
                inner,
                outer,
                element: e,
                monotone_failed: true,
            }));
        }
        if g_inner < g_outer - W::tol() {
            return Ok(Some(SubmodularityViolation {
                inner,
                outer,
                element: e,
                monotone_failed: false,
            }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> ElemSet {
        v.iter().map(|&i| ElementId(i)).collect()
    }

    fn star_coverage() -> ObjectiveOracle<f64> {
        // Node 0 is the center with 5 leaves; leaves see only the center.
        let mut neighbors = vec![vec![1, 2, 3, 4, 5]];
        for _ in 0..5 {
            neighbors.push(vec![0]);
        }
        let elements: Vec<Element> = (0..6u32).map(|i| Element::new(i, 1, i as usize)).collect();
        ObjectiveOracle::coverage(neighbors, &elements).unwrap()
    }

    #[test]
    fn empty_set_has_zero_value() {
        let f = star_coverage();
        assert_eq!(f.value(&ElemSet::new()).unwrap(), 0.0);
    }

    #[test]
    fn star_center_covers_its_leaves() {
        let f = star_coverage();
        assert_eq!(f.value(&ids(&[0])).unwrap(), 5.0);
    }

    #[test]
    fn modular_value_is_additive() {
        let weights: HashMap<ElementId, f64> = [(ElementId(0), 1.0), (ElementId(1), 2.5)]
            .into_iter()
            .collect();
        let f = ObjectiveOracle::modular(weights);
        assert_eq!(f.value(&ids(&[0, 1])).unwrap(), 3.5);
    }

    #[test]
    fn marginal_of_empty_set_is_singleton_value() {
        let f = star_coverage();
        assert_eq!(
            f.marginal(ElementId(0), &ElemSet::new()).unwrap(),
            f.value(&ids(&[0])).unwrap()
        );
    }

    #[test]
    fn marginal_of_covered_element_is_zero() {
        let f = star_coverage();
        // Leaf 1 only covers the center, already covered by leaf 2.
        assert_eq!(f.marginal(ElementId(1), &ids(&[2])).unwrap(), 0.0);
    }

    #[test]
    fn marginal_rejects_member() {
        let f = star_coverage();
        assert!(f.marginal(ElementId(0), &ids(&[0])).is_err());
    }

    #[test]
    fn value_marginal_consistency() {
        let f = star_coverage();
        for e in 0..6u32 {
            let s = ids(&[(e + 1) % 6, (e + 2) % 6]);
            if s.contains(ElementId(e)) {
                continue;
            }
            let direct = f.value(&s.with(ElementId(e))).unwrap();
            let via = f.value(&s).unwrap() + f.marginal(ElementId(e), &s).unwrap();
            assert_eq!(direct, via);
        }
    }

    /// Direct evaluation of the exemplar formula, kept independent of the
    /// kernel implementation.
    fn exemplar_direct(points: &[Vec<f64>], chosen: &[usize]) -> f64 {
        let d =
            |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum() };
        let origin = vec![0.0; points[0].len()];
        points
            .iter()
            .map(|p| {
                let d0 = d(p, &origin);
                let best = chosen.iter().map(|&i| d(p, &points[i])).fold(d0, f64::min);
                d0 - best
            })
            .sum()
    }

    #[test]
    fn exemplar_matches_direct_formula() {
        let points = vec![vec![1.0, 2.0], vec![3.0, -1.0], vec![0.5, 0.5]];
        let elements: Vec<Element> = (0..3u32).map(|i| Element::new(i, 1, i as usize)).collect();
        let f = ObjectiveOracle::exemplar(points.clone(), &elements).unwrap();
        for mask in 0u32..8 {
            let chosen: Vec<usize> = (0..3).filter(|i| mask >> i & 1 == 1).collect();
            let set: ElemSet = chosen.iter().map(|&i| ElementId(i as u32)).collect();
            let got = f.value(&set).unwrap();
            let want = exemplar_direct(&points, &chosen);
            assert!((got - want).abs() < 1e-9, "mask {mask}: {got} vs {want}");
        }
    }

    #[test]
    fn trackers_agree_with_direct_values() {
        let points = vec![
            vec![1.0, 2.0, 0.0],
            vec![3.0, -1.0, 1.0],
            vec![0.5, 0.5, -2.0],
            vec![-1.0, 1.5, 2.0],
            vec![2.0, 0.0, 0.3],
        ];
        let elements: Vec<Element> = (0..5u32).map(|i| Element::new(i, 1, i as usize)).collect();
        let f = ObjectiveOracle::exemplar(points, &elements).unwrap();
        let mut t = f.tracker(&ElemSet::new()).unwrap();
        let order = [3u32, 0, 4, 1];
        let mut set = ElemSet::new();
        for &i in &order {
            let e = ElementId(i);
            let expect_gain = f.marginal(e, &set).unwrap();
            let got_gain = t.gain(e).unwrap();
            assert!((expect_gain - got_gain).abs() < 1e-9);
            // swap_value with a non-member removal behaves like plain insertion.
            let sv = t.swap_value(ElementId(99), e);
            assert!(sv.is_err() || (sv.unwrap() - f.value(&set.with(e)).unwrap()).abs() < 1e-9);
            t.insert(e).unwrap();
            set.insert(e);
            assert!((t.value() - f.value(&set).unwrap()).abs() < 1e-9);
        }
        // Swap checks against direct evaluation.
        let direct = f
            .value(&set.without(ElementId(0)).with(ElementId(2)))
            .unwrap();
        let via = t.swap_value(ElementId(0), ElementId(2)).unwrap();
        assert!((direct - via).abs() < 1e-9);
        // Removal rebuild.
        t.remove(ElementId(3)).unwrap();
        set.remove(ElementId(3));
        assert!((t.value() - f.value(&set).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn coverage_tracker_swap_matches_direct() {
        let f = star_coverage();
        let mut t = f.tracker(&ids(&[0, 1])).unwrap();
        let direct = f.value(&ids(&[1, 2])).unwrap();
        assert_eq!(t.swap_value(ElementId(0), ElementId(2)).unwrap(), direct);
        t.remove(ElementId(0)).unwrap();
        assert_eq!(t.value(), f.value(&ids(&[1])).unwrap());
        t.insert(ElementId(3)).unwrap();
        assert_eq!(t.value(), f.value(&ids(&[1, 3])).unwrap());
    }

    #[test]
    fn recommendation_tracker_matches_kernel() {
        let movies = vec![
            vec![1.0, 0.0],
            vec![0.5, 0.5],
            vec![-0.3, 1.0],
            vec![0.2, -0.4],
        ];
        let user = vec![0.7, 0.1];
        let elements: Vec<Element> = (0..4u32).map(|i| Element::new(i, 1, i as usize)).collect();
        let f = ObjectiveOracle::recommendation(movies, user, 0.85, &elements).unwrap();
        let mut t = f.tracker(&ElemSet::new()).unwrap();
        let mut set = ElemSet::new();
        for i in [2u32, 0, 3] {
            let e = ElementId(i);
            let g = f.marginal(e, &set).unwrap();
            assert!((t.gain(e).unwrap() - g).abs() < 1e-9);
            t.insert(e).unwrap();
            set.insert(e);
            assert!((t.value() - f.value(&set).unwrap()).abs() < 1e-9);
        }
        let direct = f
            .value(&set.without(ElementId(0)).with(ElementId(1)))
            .unwrap();
        assert!((t.swap_value(ElementId(0), ElementId(1)).unwrap() - direct).abs() < 1e-9);
        t.remove(ElementId(2)).unwrap();
        set.remove(ElementId(2));
        assert!((t.value() - f.value(&set).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn submodularity_check_accepts_coverage_and_modular() {
        let f = star_coverage();
        let ground = ids(&[0, 1, 2, 3, 4, 5]);
        assert!(check_submodular_monotone(&f, &ground, 200, 7)
            .unwrap()
            .is_none());

        let weights: HashMap<ElementId, f64> =
            (0..6).map(|i| (ElementId(i), f64::from(i))).collect();
        let m = ObjectiveOracle::modular(weights);
        assert!(check_submodular_monotone(&m, &ground, 200, 7)
            .unwrap()
            .is_none());
    }

    #[test]
    fn recommendation_is_monotone_submodular_on_random_vectors() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let n = 8;
            let movies: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let user: Vec<f64> = (0..20).map(|_| rng.gen_range(0.0..1.0)).collect();
            let elements: Vec<Element> = (0..n as u32)
                .map(|i| Element::new(i, 1, i as usize))
                .collect();
            let f = ObjectiveOracle::recommendation(movies, user, 0.85, &elements).unwrap();
            let ground: ElemSet = (0..n as u32).map(ElementId).collect();
            let violation = check_submodular_monotone(&f, &ground, 300, 17).unwrap();
            assert!(violation.is_none(), "violation: {violation:?}");
        }
    }

    #[test]
    fn exemplar_is_nonnegative_and_monotone_by_sampling() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let points: Vec<Vec<f64>> = (0..7)
            .map(|_| (0..5).map(|_| rng.gen_range(-3.0..3.0)).collect())
            .collect();
        let elements: Vec<Element> = (0..7u32).map(|i| Element::new(i, 1, i as usize)).collect();
        let f = ObjectiveOracle::exemplar(points, &elements).unwrap();
        let ground: ElemSet = (0..7).map(ElementId).collect();
        assert!(check_submodular_monotone(&f, &ground, 300, 23)
            .unwrap()
            .is_none());
        for mask in 0u32..128 {
            let set: ElemSet = (0..7)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| ElementId(i as u32))
                .collect();
            assert!(f.value(&set).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn submodularity_check_rejects_supermodular() {
        let f: ObjectiveOracle<f64> =
            ObjectiveOracle::custom(|s: &ElemSet| (s.len() * s.len()) as f64);
        let ground = ids(&[0, 1, 2, 3, 4]);
        let violation = check_submodular_monotone(&f, &ground, 500, 11).unwrap();
        assert!(violation.is_some());
        assert!(!violation.unwrap().monotone_failed);
    }

    #[test]
    fn shifted_objective_is_normalized() {
        let f = star_coverage();
        let shifted = f.shifted(&ids(&[0, 1])).unwrap();
        assert_eq!(shifted.value(&ElemSet::new()).unwrap(), 0.0);
        // Leaf 2 only covers the center, already covered under the pin.
        assert_eq!(shifted.value(&ids(&[2])).unwrap(), 0.0);
        // Leaf 1 covers the center node itself on top of pinned {0}.
        let shifted_center = f.shifted(&ids(&[0])).unwrap();
        assert_eq!(shifted_center.value(&ids(&[1])).unwrap(), 1.0);
        let mut t = shifted.tracker(&ElemSet::new()).unwrap();
        assert_eq!(t.gain(ElementId(2)).unwrap(), 0.0);
        t.insert(ElementId(2)).unwrap();
        assert_eq!(t.value(), 0.0);
    }
}
