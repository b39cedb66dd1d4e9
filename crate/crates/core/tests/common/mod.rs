//! Shared random-instance machinery for the integration tests.
#![allow(dead_code)] // each test binary uses a different slice of this module

use std::collections::HashMap;

use fairmat_core::brute::feasible_exists;
use fairmat_core::{
    ColorMap, Constraints, ElemSet, Element, ElementId, FairnessBounds, LaminarFamily,
    MatroidOracle, ObjectiveOracle,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub struct TestInstance {
    pub elements: Vec<Element>,
    pub constraints: Constraints,
    pub objective: ObjectiveOracle<f64>,
}

impl TestInstance {
    pub fn ground(&self) -> ElemSet {
        self.elements.iter().map(|e| e.id).collect()
    }

    pub fn rank(&self) -> usize {
        self.constraints.matroid.rank_bound()
    }

    pub fn color_count(&self) -> usize {
        self.constraints.color_count()
    }
}

pub fn random_matroid(rng: &mut ChaCha8Rng, ids: &[ElementId]) -> MatroidOracle {
    match rng.gen_range(0..3) {
        0 => MatroidOracle::uniform(rng.gen_range(1..=4usize)),
        1 => {
            let nblocks = rng.gen_range(1..=3usize);
            let blocks: HashMap<ElementId, usize> = ids
                .iter()
                .map(|&e| (e, rng.gen_range(0..nblocks)))
                .collect();
            let caps: Vec<usize> = (0..nblocks).map(|_| rng.gen_range(0..=3)).collect();
            MatroidOracle::partition(blocks, caps).unwrap()
        }
        _ => {
            // Contiguous chunks plus the whole ground, nested by construction.
            let n = ids.len();
            let mut groups: Vec<(ElemSet, usize)> = Vec::new();
            let mut start = 0usize;
            while start < n {
                let len = rng.gen_range(1..=3usize).min(n - start);
                let group: ElemSet = ids[start..start + len].iter().copied().collect();
                groups.push((group, rng.gen_range(1..=2usize)));
                start += len;
            }
            let all: ElemSet = ids.iter().copied().collect();
            groups.push((all.clone(), rng.gen_range(2..=4usize)));
            let family = LaminarFamily::new(groups).unwrap();
            MatroidOracle::laminar(family, &all).unwrap()
        }
    }
}

fn random_objective(
    rng: &mut ChaCha8Rng,
    elements: &[Element],
    allow_negative: bool,
) -> ObjectiveOracle<f64> {
    if rng.gen_bool(0.5) {
        let weights: HashMap<ElementId, f64> = elements
            .iter()
            .map(|e| {
                let w = if allow_negative {
                    rng.gen_range(-5.0..=9.0)
                } else {
                    rng.gen_range(0.0..=9.0)
                };
                (e.id, w)
            })
            .collect();
        ObjectiveOracle::modular(weights)
    } else {
        let universe = rng.gen_range(4..=12usize);
        let neighbors: Vec<Vec<u32>> = elements
            .iter()
            .map(|_| {
                let deg = rng.gen_range(0..=3usize);
                let mut l: Vec<u32> = (0..deg)
                    .map(|_| rng.gen_range(0..universe as u32))
                    .collect();
                l.sort_unstable();
                l.dedup();
                l
            })
            .collect();
        ObjectiveOracle::coverage(neighbors, elements).unwrap()
    }
}

/// Random instance; may be infeasible.
pub fn random_instance(rng: &mut ChaCha8Rng, max_n: usize, max_c: usize) -> TestInstance {
    let n = rng.gen_range(2..=max_n);
    let c = rng.gen_range(1..=max_c);
    let elements: Vec<Element> = (0..n)
        .map(|i| Element::new(i as u32, rng.gen_range(1..=c as u32), i))
        .collect();
    let ids: Vec<ElementId> = elements.iter().map(|e| e.id).collect();
    let matroid = random_matroid(rng, &ids);
    let colors = ColorMap::new(&elements, c).unwrap();
    let population = colors.population();
    let mut lower = Vec::with_capacity(c);
    let mut upper = Vec::with_capacity(c);
    for &pop in &population {
        let l = rng.gen_range(0..=pop.min(2));
        lower.push(l);
        upper.push(l + rng.gen_range(0..=2usize));
    }
    let bounds = FairnessBounds::new(lower, upper).unwrap();
    let constraints = Constraints::new(matroid, bounds, colors).unwrap();
    let objective = random_objective(rng, &elements, false);
    TestInstance {
        elements,
        constraints,
        objective,
    }
}

/// Random instance guaranteed feasible (rejection sampling).
pub fn random_feasible_instance(rng: &mut ChaCha8Rng, max_n: usize, max_c: usize) -> TestInstance {
    for _ in 0..500 {
        let inst = random_instance(rng, max_n, max_c);
        if feasible_exists(&inst.ground(), &inst.constraints).unwrap() {
            return inst;
        }
    }
    panic!("could not sample a feasible instance");
}

/// The shared-bonus adversarial fixture: each color has a unit-value element
/// and a decoy worth slightly more alone, but all decoys share one bonus.
pub struct AdversarialFixture {
    pub instance: TestInstance,
    pub color_count: usize,
}

pub fn adversarial_fixture(color_count: usize) -> AdversarialFixture {
    let mut elements = Vec::with_capacity(2 * color_count);
    for c in 1..=color_count as u32 {
        elements.push(Element::new(2 * (c - 1), c, 0));
        elements.push(Element::new(2 * (c - 1) + 1, c, 0));
    }
    let colors = ColorMap::new(&elements, color_count).unwrap();
    let bounds = FairnessBounds::new(vec![1; color_count], vec![1; color_count]).unwrap();
    // The matroid encodes the same per-color caps as the upper bounds.
    let matroid = MatroidOracle::upper_color(&bounds, &colors);
    let constraints = Constraints::new(matroid, bounds, colors).unwrap();
    let objective: ObjectiveOracle<f64> = ObjectiveOracle::custom(move |s: &ElemSet| {
        let units = s.iter().filter(|e| e.0 % 2 == 0).count() as f64;
        let decoys = s.iter().filter(|e| e.0 % 2 == 1).count();
        units + 1.01 * f64::from(u8::from(decoys > 0))
    });
    AdversarialFixture {
        instance: TestInstance {
            elements,
            constraints,
            objective,
        },
        color_count,
    }
}
