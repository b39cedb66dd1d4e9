//! Pluggable streaming routine for monotone submodular maximization subject
//! to two matroid constraints: the swap-based single-pass routine used in the
//! experiments, and an exact enumeration routine for desk-scale validation.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::matroid::MatroidOracle;
use crate::model::{ElemSet, ElementId};
use crate::objective::{ObjectiveOracle, Tracker};
use crate::value::Value;

/// Factory for streaming two-matroid maximizer runs.
pub trait RoutineA<W: Value>: Send + Sync {
    /// Worst-case approximation factor the routine promises.
    fn declared_alpha(&self) -> f64;

    fn start(
        &self,
        m1: MatroidOracle,
        m2: MatroidOracle,
        objective: ObjectiveOracle<W>,
    ) -> Result<Box<dyn TwoMatroidRun<W>>>;
}

/// One in-flight run over a stream of element ids.
pub trait TwoMatroidRun<W: Value>: Send {
    fn offer(&mut self, e: ElementId) -> Result<()>;
    fn finish(&mut self) -> Result<ElemSet>;
    /// Elements currently retained by the run.
    fn held(&self) -> &ElemSet;

    fn stored(&self) -> usize {
        self.held().len()
    }
}

/// Swap-based single-pass routine: an arriving element evicts the cheapest
/// blocking element per violated matroid when its own marginal weight beats
/// `(1+β)` times the total evicted weight. With the default `β = 1` the
/// declared factor for two matroids is 1/8.
#[derive(Debug, Clone, Copy)]
pub struct SwapRoutineA {
    pub beta: f64,
    pub alpha: f64,
}

impl Default for SwapRoutineA {
    fn default() -> Self {
        SwapRoutineA {
            beta: 1.0,
            alpha: 1.0 / 8.0,
        }
    }
}

impl<W: Value> RoutineA<W> for SwapRoutineA {
    fn declared_alpha(&self) -> f64 {
        self.alpha
    }

    fn start(
        &self,
        m1: MatroidOracle,
        m2: MatroidOracle,
        objective: ObjectiveOracle<W>,
    ) -> Result<Box<dyn TwoMatroidRun<W>>> {
        Ok(Box::new(SwapRun {
            m1,
            m2,
            tracker: objective.tracker(&ElemSet::new())?,
            weights: HashMap::new(),
            beta: self.beta,
        }))
    }
}

struct SwapRun<W: Value> {
    m1: MatroidOracle,
    m2: MatroidOracle,
    tracker: Tracker<W>,
    /// Marginal value recorded when each current member was inserted.
    weights: HashMap<ElementId, W>,
    beta: f64,
}

impl<W: Value> TwoMatroidRun<W> for SwapRun<W> {
    fn offer(&mut self, e: ElementId) -> Result<()> {
        if self.tracker.set().contains(e) {
            return Ok(());
        }
        let current = self.tracker.set().clone();
        let grown = current.with(e);
        let ok1 = self.m1.is_independent(&grown)?;
        let ok2 = self.m2.is_independent(&grown)?;
        let weight = self.tracker.gain(e)?;
        if ok1 && ok2 {
            self.tracker.insert(e)?;
            self.weights.insert(e, weight);
            return Ok(());
        }

        // Cheapest eviction per blocked matroid.
        let mut evict = ElemSet::new();
        for (ok, m) in [(ok1, &self.m1), (ok2, &self.m2)] {
            if ok {
                continue;
            }
            let mut best: Option<(W, ElementId)> = None;
            for y in current.iter() {
                if !m.is_independent(&grown.without(y))? {
                    continue;
                }
                let wy = self.weights[&y];
                let better = match best {
                    None => true,
                    Some((bw, bid)) => wy < bw || (wy == bw && y < bid),
                };
                if better {
                    best = Some((wy, y));
                }
            }
            match best {
                // No single removal repairs this matroid: drop the element.
                None => return Ok(()),
                Some((_, y)) => {
                    evict.insert(y);
                }
            }
        }
        let evicted_weight: W = evict.iter().map(|y| self.weights[&y]).sum();
        let threshold = (1.0 + self.beta) * evicted_weight.to_f64().unwrap_or(f64::INFINITY);
        if weight.to_f64().unwrap_or(f64::NEG_INFINITY) >= threshold {
            for y in evict.iter() {
                self.tracker.remove(y)?;
                self.weights.remove(&y);
            }
            self.tracker.insert(e)?;
            self.weights.insert(e, weight);
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<ElemSet> {
        Ok(self.tracker.set().clone())
    }

    fn held(&self) -> &ElemSet {
        self.tracker.set()
    }
}

/// Exact routine: buffers the stream and enumerates all common independent
/// subsets at the end. Declared factor 1. Only for desk-scale validation;
/// refuses buffers beyond `max_buffer`.
#[derive(Debug, Clone, Copy)]
pub struct ExactRoutineA {
    pub max_buffer: usize,
}

impl Default for ExactRoutineA {
    fn default() -> Self {
        ExactRoutineA { max_buffer: 22 }
    }
}

impl<W: Value> RoutineA<W> for ExactRoutineA {
    fn declared_alpha(&self) -> f64 {
        1.0
    }

    fn start(
        &self,
        m1: MatroidOracle,
        m2: MatroidOracle,
        objective: ObjectiveOracle<W>,
    ) -> Result<Box<dyn TwoMatroidRun<W>>> {
        Ok(Box::new(ExactRun {
            m1,
            m2,
            objective,
            buffer: Vec::new(),
            members: ElemSet::new(),
            max_buffer: self.max_buffer,
        }))
    }
}

struct ExactRun<W: Value> {
    m1: MatroidOracle,
    m2: MatroidOracle,
    objective: ObjectiveOracle<W>,
    /// Arrival order, deduplicated.
    buffer: Vec<ElementId>,
    members: ElemSet,
    max_buffer: usize,
}

impl<W: Value> TwoMatroidRun<W> for ExactRun<W> {
    fn offer(&mut self, e: ElementId) -> Result<()> {
        if !self.members.insert(e) {
            return Ok(());
        }
        if self.buffer.len() >= self.max_buffer {
            return Err(Error::TooLarge(format!(
                "exact routine buffer exceeds {} elements",
                self.max_buffer
            )));
        }
        self.buffer.push(e);
        Ok(())
    }

    fn finish(&mut self) -> Result<ElemSet> {
        let n = self.buffer.len();
        let mut dependent = vec![false; 1usize << n];
        let mut best: Option<(W, ElemSet)> = None;
        for mask in 0..(1usize << n) {
            if mask != 0 && dependent[mask & (mask - 1)] {
                dependent[mask] = true;
                continue;
            }
            let set: ElemSet = (0..n)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| self.buffer[i])
                .collect();
            if !self.m1.is_independent(&set)? || !self.m2.is_independent(&set)? {
                dependent[mask] = true;
                continue;
            }
            let value = self.objective.value(&set)?;
            let improves = match &best {
                None => true,
                Some((bv, _)) => value > *bv,
            };
            if improves {
                best = Some((value, set));
            }
        }
        Ok(best.map(|(_, s)| s).unwrap_or_default())
    }

    fn held(&self) -> &ElemSet {
        &self.members
    }
}
