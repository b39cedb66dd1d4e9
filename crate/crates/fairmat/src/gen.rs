//! Synthetic instance generators: seeded random instances for fuzzing, the
//! shared-bonus adversarial fixture, a bipartite-matching feasibility gadget,
//! and a bank-marketing-shaped dataset for the whole-dataset experiment.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fairmat_core::{
    ColorMap, Constraints, ElemSet, Element, ElementId, FairnessBounds, Instance, MatroidOracle,
    ObjectiveOracle,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    RandomCoverage,
    Modular,
    AdversarialShared,
    MatchingGadget,
    BankSynthetic,
}

impl SyntheticKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "random-coverage" => SyntheticKind::RandomCoverage,
            "modular" => SyntheticKind::Modular,
            "adversarial-c3" => SyntheticKind::AdversarialShared,
            "matching-gadget" => SyntheticKind::MatchingGadget,
            "bank-synthetic" => SyntheticKind::BankSynthetic,
            _ => return None,
        })
    }
}

/// Generator knobs; unused fields are ignored by kinds that do not need them.
#[derive(Debug, Clone, Copy)]
pub struct GenParams {
    pub size: usize,
    pub colors: usize,
    pub rank: usize,
    pub left: usize,
    pub right: usize,
    pub matchable: bool,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            size: 30,
            colors: 3,
            rank: 4,
            left: 3,
            right: 3,
            matchable: true,
        }
    }
}

/// The shared-bonus instance: each color has a unit-value element `e_c` and a
/// decoy `e'_c`; decoys are worth 1.01 alone but share a single bonus. The
/// matroid encodes the same caps as the fairness upper bounds.
pub fn adversarial_instance(color_count: usize) -> Instance<f64> {
    let mut elements = Vec::with_capacity(2 * color_count);
    for c in 1..=color_count as u32 {
        elements.push(Element::new(2 * (c - 1), c, 0));
        elements.push(Element::new(2 * (c - 1) + 1, c, 0));
    }
    let colors = ColorMap::new(&elements, color_count).expect("valid fixture colors");
    let bounds =
        FairnessBounds::new(vec![1; color_count], vec![1; color_count]).expect("valid bounds");
    let matroid = MatroidOracle::upper_color(&bounds, &colors);
    let constraints = Constraints::new(matroid, bounds, colors).expect("valid constraints");
    let objective: ObjectiveOracle<f64> = ObjectiveOracle::custom(|s: &ElemSet| {
        let units = s.iter().filter(|e| e.0 % 2 == 0).count() as f64;
        let has_decoy = s.iter().any(|e| e.0 % 2 == 1);
        units + 1.01 * f64::from(u8::from(has_decoy))
    });
    Instance::new(elements, constraints, objective).expect("valid fixture")
}

/// Random coverage instance over a seeded random graph with a uniform
/// matroid and proportional fairness bounds.
pub fn random_coverage_instance(params: GenParams, seed: u64) -> Instance<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = params.size;
    let elements: Vec<Element> = (0..n)
        .map(|i| Element::new(i as u32, rng.gen_range(1..=params.colors as u32), i))
        .collect();
    let neighbors: Vec<Vec<u32>> = (0..n)
        .map(|_| {
            let deg = rng.gen_range(0..=4usize);
            let mut l: Vec<u32> = (0..deg).map(|_| rng.gen_range(0..n as u32)).collect();
            l.sort_unstable();
            l.dedup();
            l
        })
        .collect();
    let colors = ColorMap::new(&elements, params.colors).expect("valid colors");
    let population = colors.population();
    let k = params.rank;
    let lower: Vec<usize> = population
        .iter()
        .map(|&p| ((0.9 * p as f64 / n as f64 * k as f64).floor() as usize).min(p))
        .collect();
    let upper: Vec<usize> = population
        .iter()
        .zip(&lower)
        .map(|(&p, &l)| ((1.5 * p as f64 / n as f64 * k as f64).ceil() as usize).max(l))
        .collect();
    let bounds = FairnessBounds::new(lower, upper).expect("valid bounds");
    let constraints =
        Constraints::new(MatroidOracle::uniform(k), bounds, colors).expect("valid constraints");
    let objective = ObjectiveOracle::coverage(neighbors, &elements).expect("valid coverage");
    Instance::new(elements, constraints, objective).expect("valid instance")
}

/// Random signed-weight modular instance under a random partition matroid.
pub fn random_modular_instance(params: GenParams, seed: u64) -> Instance<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = params.size;
    let elements: Vec<Element> = (0..n)
        .map(|i| Element::new(i as u32, rng.gen_range(1..=params.colors as u32), i))
        .collect();
    let nblocks = rng.gen_range(1..=3usize);
    let blocks: HashMap<ElementId, usize> = elements
        .iter()
        .map(|e| (e.id, rng.gen_range(0..nblocks)))
        .collect();
    let caps: Vec<usize> = (0..nblocks).map(|_| rng.gen_range(1..=3)).collect();
    let matroid = MatroidOracle::partition(blocks, caps).expect("valid partition");
    let colors = ColorMap::new(&elements, params.colors).expect("valid colors");
    let population = colors.population();
    let lower: Vec<usize> = population
        .iter()
        .map(|&p| p.min(rng.gen_range(0..=1)))
        .collect();
    let upper: Vec<usize> = lower.iter().map(|&l| l + rng.gen_range(0..=2)).collect();
    let bounds = FairnessBounds::new(lower, upper).expect("valid bounds");
    let constraints = Constraints::new(matroid, bounds, colors).expect("valid constraints");
    let weights: HashMap<ElementId, f64> = elements
        .iter()
        .map(|e| (e.id, f64::from(rng.gen_range(-9i32..=9))))
        .collect();
    let objective = ObjectiveOracle::modular(weights);
    Instance::new(elements, constraints, objective).expect("valid instance")
}

/// Bipartite-matching gadget: elements are edges `(l, r)`, one color per
/// right vertex with window exactly one, and a partition matroid capping each
/// left vertex at one edge. Feasible iff the graph has a matching saturating
/// the right side; `matchable = false` plants a Hall violation.
pub fn matching_gadget_instance(params: GenParams, seed: u64) -> Instance<f64> {
    let (elements, _lefts) = matching_gadget_edges(params, seed);
    let colors = ColorMap::new(&elements, params.right).expect("valid colors");
    let blocks: HashMap<ElementId, usize> = elements.iter().map(|e| (e.id, e.payload)).collect();
    let matroid = MatroidOracle::partition(blocks, vec![1; params.left]).expect("valid partition");
    let bounds =
        FairnessBounds::new(vec![1; params.right], vec![1; params.right]).expect("valid bounds");
    let constraints = Constraints::new(matroid, bounds, colors).expect("valid constraints");
    let weights: HashMap<ElementId, f64> = elements.iter().map(|e| (e.id, 1.0)).collect();
    let objective = ObjectiveOracle::modular(weights);
    Instance::new(elements, constraints, objective).expect("valid instance")
}

/// Edge elements of the gadget: color = right vertex (1-based), payload =
/// left vertex index.
fn matching_gadget_edges(params: GenParams, seed: u64) -> (Vec<Element>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (l, r) = (params.left, params.right.min(params.left));
    let mut edges: Vec<(usize, usize)> = Vec::new();
    if params.matchable {
        // Plant a right-saturating matching, then add noise edges.
        let mut lefts: Vec<usize> = (0..l).collect();
        lefts.shuffle(&mut rng);
        for (q, &p) in lefts.iter().take(r).enumerate() {
            edges.push((p, q));
        }
        for _ in 0..(l * r / 3) {
            edges.push((rng.gen_range(0..l), rng.gen_range(0..r)));
        }
    } else {
        // Two right vertices see only one shared left vertex: Hall fails no
        // matter what other edges exist.
        let shared = rng.gen_range(0..l);
        edges.push((shared, 0));
        edges.push((shared, 1));
        for _ in 0..(l * r / 3) {
            let p = rng.gen_range(0..l);
            let q = rng.gen_range(2..r.max(3));
            if q < r {
                edges.push((p, q));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    edges.shuffle(&mut rng);
    let elements: Vec<Element> = edges
        .iter()
        .enumerate()
        .map(|(i, &(p, q))| Element::new(i as u32, q as u32 + 1, p))
        .collect();
    (elements, l)
}

const BANK_ROWS: usize = 4521;
const AGE_BANDS: [(u32, u32, &str); 6] = [
    (18, 29, "age0-29"),
    (30, 39, "age30-39"),
    (40, 49, "age40-49"),
    (50, 59, "age50-59"),
    (60, 69, "age60-69"),
    (70, 95, "age70plus"),
];
const BALANCE_BREAKS: [f64; 4] = [0.0, 2000.0, 4000.0, 6000.0];

fn bank_row(rng: &mut ChaCha8Rng, band: usize, balance_block: usize) -> (u32, [f64; 7]) {
    let (lo, hi, _) = AGE_BANDS[band];
    let age = rng.gen_range(lo..=hi);
    let balance: f64 = match balance_block {
        0 => rng.gen_range(-2000.0..0.0),
        1 => rng.gen_range(0.0..2000.0),
        2 => rng.gen_range(2000.0..4000.0),
        3 => rng.gen_range(4000.0..6000.0),
        _ => rng.gen_range(6000.0..20000.0),
    };
    let day = rng.gen_range(1..=31) as f64;
    let duration = rng.gen_range(0.0..3000.0f64) * rng.gen_range(0.3..1.0);
    let campaign = rng.gen_range(1..=40) as f64;
    let pdays = if rng.gen_bool(0.75) {
        -1.0
    } else {
        rng.gen_range(1..=400) as f64
    };
    let previous = rng.gen_range(0..=25) as f64;
    (
        age,
        [
            f64::from(age),
            (balance * 100.0).round() / 100.0,
            day,
            (duration * 10.0).round() / 10.0,
            campaign,
            pdays,
            previous,
        ],
    )
}

fn bank_band_of(age: u32) -> usize {
    AGE_BANDS
        .iter()
        .position(|&(lo, hi, _)| age >= lo && age <= hi)
        .expect("age within bands")
}

/// Writes the requested synthetic family as dataset + config files under
/// `out_dir`. Returns the paths written, config first. Deterministic per
/// seed: identical inputs produce byte-identical files.
pub fn write_files(
    kind: SyntheticKind,
    params: GenParams,
    seed: u64,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| HarnessError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    let write = |name: &str, contents: &str| -> Result<PathBuf, HarnessError> {
        let path = out_dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| HarnessError::Io(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    };

    match kind {
        SyntheticKind::RandomCoverage => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = params.size;
            let mut dataset = String::new();
            for i in 0..n {
                let color = rng.gen_range(1..=params.colors);
                let _ = writeln!(dataset, "{i},c{color},{i}");
            }
            let mut edges = String::new();
            for u in 0..n {
                let deg = rng.gen_range(0..=4usize);
                for _ in 0..deg {
                    let _ = writeln!(edges, "{u} {}", rng.gen_range(0..n));
                }
            }
            let config = format!(
                "dataset = elements.csv\nedges = edges.txt\nobjective = coverage\n\
                 matroid = uniform\nlower = prop 0.9\nupper = prop 1.5\nk = {}\n\
                 algorithms = two-pass greedy-one-pass matroid-intersection random\nseed = {seed}\n",
                params.rank
            );
            Ok(vec![
                write("config.cfg", &config)?,
                write("elements.csv", &dataset)?,
                write("edges.txt", &edges)?,
            ])
        }
        SyntheticKind::Modular => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut dataset = String::new();
            for i in 0..params.size {
                let color = rng.gen_range(1..=params.colors);
                let w = rng.gen_range(-9i32..=9);
                let _ = writeln!(dataset, "{i},c{color},{w}");
            }
            let config = format!(
                "dataset = elements.csv\nobjective = modular\nmatroid = uniform\n\
                 lower = prop 0.5\nupper = prop 1.5\nk = {}\n\
                 algorithms = modular-streaming modular-centralized\nseed = {seed}\n",
                params.rank
            );
            Ok(vec![
                write("config.cfg", &config)?,
                write("elements.csv", &dataset)?,
            ])
        }
        SyntheticKind::AdversarialShared => {
            // File encoding by coverage: each unit element covers 100 unique
            // nodes, each decoy covers the same 101 shared nodes, preserving
            // the value ordering of the in-memory fixture at x100 scale.
            let c = params.colors;
            let mut dataset = String::new();
            let mut edges = String::new();
            for col in 0..c {
                let unit = 2 * col;
                let decoy = 2 * col + 1;
                let _ = writeln!(dataset, "{unit},c{},u{col}", col + 1);
                let _ = writeln!(dataset, "{decoy},c{},d{col}", col + 1);
                for j in 0..100 {
                    let _ = writeln!(edges, "u{col} n{col}x{j}");
                }
                for j in 0..101 {
                    let _ = writeln!(edges, "d{col} shared{j}");
                }
            }
            let config = format!(
                "dataset = elements.csv\nedges = edges.txt\nobjective = coverage\n\
                 matroid = partition\npartition_by = color\npartition_cap_rule = explicit\n\
                 partition_caps = {}\nlower = {}\nupper = {}\nk = {c}\n\
                 algorithms = greedy-one-pass two-pass\nroutine = exact\nseed = {seed}\n",
                vec!["1"; c].join(" "),
                vec!["1"; c].join(" "),
                vec!["1"; c].join(" "),
            );
            Ok(vec![
                write("config.cfg", &config)?,
                write("elements.csv", &dataset)?,
                write("edges.txt", &edges)?,
            ])
        }
        SyntheticKind::MatchingGadget => {
            let (elements, lefts) = matching_gadget_edges(params, seed);
            let mut dataset = String::new();
            for e in &elements {
                let _ = writeln!(dataset, "{},r{},{},1", e.id, e.color, e.payload);
            }
            let config = format!(
                "dataset = elements.csv\nobjective = modular\nweights = weights.csv\n\
                 matroid = partition\npartition_by = feature:0\npartition_cap_rule = explicit\n\
                 partition_caps = {}\nlower = {}\nupper = {}\nk = {}\n\
                 algorithms = fair-reservoir\nseed = {seed}\n",
                vec!["1"; lefts].join(" "),
                vec!["1"; params.right].join(" "),
                vec!["1"; params.right].join(" "),
                params.right,
            );
            let mut weights = String::new();
            for e in &elements {
                let _ = writeln!(weights, "{},1", e.id);
            }
            Ok(vec![
                write("config.cfg", &config)?,
                write("elements.csv", &dataset)?,
                write("weights.csv", &weights)?,
            ])
        }
        SyntheticKind::BankSynthetic => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rows: Vec<(u32, [f64; 7])> = Vec::with_capacity(BANK_ROWS);
            // Guarantee every age-band x balance-block cell is populated so
            // tight lower bounds stay satisfiable across the k sweep.
            for band in 0..AGE_BANDS.len() {
                for block in 0..=BALANCE_BREAKS.len() {
                    for _ in 0..8 {
                        rows.push(bank_row(&mut rng, band, block));
                    }
                }
            }
            while rows.len() < BANK_ROWS {
                let band = rng.gen_range(0..AGE_BANDS.len());
                let block = rng.gen_range(0..=BALANCE_BREAKS.len());
                rows.push(bank_row(&mut rng, band, block));
            }
            rows.shuffle(&mut rng);
            let mut dataset = String::new();
            for (i, (age, feats)) in rows.iter().enumerate() {
                let band = bank_band_of(*age);
                let label = AGE_BANDS[band].2;
                let _ = writeln!(
                    dataset,
                    "{i},{label},{},{},{},{},{},{},{}",
                    feats[0], feats[1], feats[2], feats[3], feats[4], feats[5], feats[6]
                );
            }
            let config = format!(
                "dataset = bank.csv\nobjective = exemplar\nmatroid = partition\n\
                 partition_by = feature:1\npartition_breaks = 0,2000,4000,6000\n\
                 partition_cap_rule = equal\nlower = affine 0.1 2\nupper = affine 0.4 0\n\
                 k = 25 30 35 40 45 50 55 60\n\
                 algorithms = two-pass greedy-one-pass matroid-intersection random\nseed = {seed}\n",
            );
            Ok(vec![
                write("config.cfg", &config)?,
                write("bank.csv", &dataset)?,
            ])
        }
    }
}
