//! Dataset ingestion and per-rank instance construction.
//!
//! Element records are one line each: `id,color,payload-fields...`. The color
//! column may be any categorical label; labels map to dense color ids in
//! first-appearance order and the mapping is recorded. Payload fields stay
//! attached to the element by row index.

use std::collections::HashMap;
use std::path::Path;

use fairmat_core::{
    ColorMap, Constraints, ElemSet, Element, ElementId, FairnessBounds, Instance, LaminarFamily,
    MatroidOracle, ObjectiveOracle,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{
    BoundRule, CapRule, ExperimentConfig, GroupBy, GroupCap, MatroidSpec, ObjectiveSpec, Rounding,
};
use crate::HarnessError;

/// Parsed dataset, before any constraint or objective is attached.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub elements: Vec<Element>,
    pub color_count: usize,
    pub color_labels: Vec<String>,
    /// Raw payload fields per row.
    pub raw_fields: Vec<Vec<String>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Numeric view of payload field `idx` across all rows.
    pub fn feature(&self, idx: usize) -> Result<Vec<f64>, HarnessError> {
        self.raw_fields
            .iter()
            .enumerate()
            .map(|(row, fields)| {
                let raw = fields.get(idx).ok_or_else(|| {
                    HarnessError::Config(format!(
                        "row {}: payload field {idx} missing (only {} fields)",
                        row + 1,
                        fields.len()
                    ))
                })?;
                raw.parse::<f64>().map_err(|_| {
                    HarnessError::Config(format!(
                        "row {}: payload field {idx} '{raw}' is not numeric",
                        row + 1
                    ))
                })
            })
            .collect()
    }

    /// All payload fields parsed as numbers (exemplar / recommendation).
    pub fn features(&self) -> Result<Vec<Vec<f64>>, HarnessError> {
        let width = self.raw_fields.first().map_or(0, |f| f.len());
        (0..width)
            .map(|i| self.feature(i))
            .collect::<Result<Vec<_>, _>>()
            .map(|cols| {
                (0..self.len())
                    .map(|row| cols.iter().map(|c| c[row]).collect())
                    .collect()
            })
    }
}

/// Parses the element file. Errors carry the offending line number.
pub fn read_dataset(path: &Path) -> Result<Dataset, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Io(format!("cannot read {}: {e}", path.display())))?;
    let mut elements = Vec::new();
    let mut raw_fields = Vec::new();
    let mut color_ids: HashMap<String, u32> = HashMap::new();
    let mut color_labels = Vec::new();
    let mut seen_ids: HashMap<u32, usize> = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split(',');
        let id: u32 =
            parts
                .next()
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|_| HarnessError::Parse {
                    line: lineno + 1,
                    message: "element id is not a non-negative integer".into(),
                })?;
        let color_label = parts
            .next()
            .ok_or_else(|| HarnessError::Parse {
                line: lineno + 1,
                message: "missing color column".into(),
            })?
            .trim();
        if color_label.is_empty() {
            return Err(HarnessError::Parse {
                line: lineno + 1,
                message: "empty color column".into(),
            });
        }
        if let Some(prev) = seen_ids.insert(id, lineno + 1) {
            return Err(HarnessError::Parse {
                line: lineno + 1,
                message: format!("duplicate element id {id} (first seen on line {prev})"),
            });
        }
        let next_color = color_ids.len() as u32 + 1;
        let color = *color_ids.entry(color_label.to_string()).or_insert_with(|| {
            color_labels.push(color_label.to_string());
            next_color
        });
        let payload = elements.len();
        elements.push(Element::new(id, color, payload));
        raw_fields.push(parts.map(|f| f.trim().to_string()).collect());
    }
    if elements.is_empty() {
        return Err(HarnessError::Config(format!(
            "dataset {} has no records",
            path.display()
        )));
    }
    Ok(Dataset {
        elements,
        color_count: color_labels.len(),
        color_labels,
        raw_fields,
    })
}

/// Undirected edge list, one `u v` pair per line. Node labels are arbitrary
/// strings; they are matched against payload field 0 of coverage elements.
pub fn read_edges(path: &Path) -> Result<HashMap<String, Vec<String>>, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Io(format!("cannot read {}: {e}", path.display())))?;
    let mut adjacency: HashMap<String, Vec<String>> = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(u), Some(v)) = (parts.next(), parts.next()) else {
            return Err(HarnessError::Parse {
                line: lineno + 1,
                message: "edge line needs two endpoints".into(),
            });
        };
        adjacency
            .entry(u.to_string())
            .or_default()
            .push(v.to_string());
        adjacency
            .entry(v.to_string())
            .or_default()
            .push(u.to_string());
    }
    Ok(adjacency)
}

/// `id,weight` lines for modular objectives.
pub fn read_weights(path: &Path) -> Result<HashMap<ElementId, f64>, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Io(format!("cannot read {}: {e}", path.display())))?;
    let mut out = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, w) = line.split_once(',').ok_or_else(|| HarnessError::Parse {
            line: lineno + 1,
            message: "weight line needs id,weight".into(),
        })?;
        let id: u32 = id.trim().parse().map_err(|_| HarnessError::Parse {
            line: lineno + 1,
            message: "bad element id".into(),
        })?;
        let w: f64 = w.trim().parse().map_err(|_| HarnessError::Parse {
            line: lineno + 1,
            message: "bad weight".into(),
        })?;
        out.insert(ElementId(id), w);
    }
    Ok(out)
}

/// Single CSV row of floats (the user feature vector).
pub fn read_vector(path: &Path) -> Result<Vec<f64>, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Io(format!("cannot read {}: {e}", path.display())))?;
    let line = text
        .lines()
        .find(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .ok_or_else(|| HarnessError::Config(format!("{} is empty", path.display())))?;
    line.split(',')
        .map(|p| {
            p.trim().parse::<f64>().map_err(|_| {
                HarnessError::Config(format!("bad number '{p}' in {}", path.display()))
            })
        })
        .collect()
}

fn group_assignment(dataset: &Dataset, by: &GroupBy) -> Result<(Vec<usize>, usize), HarnessError> {
    match by {
        GroupBy::Color => Ok((
            dataset
                .elements
                .iter()
                .map(|e| e.color as usize - 1)
                .collect(),
            dataset.color_count,
        )),
        GroupBy::Feature(idx) => {
            let values = dataset.feature(*idx)?;
            let mut distinct: Vec<u64> = values.iter().map(|v| v.to_bits()).collect();
            distinct.sort_unstable();
            distinct.dedup();
            let index: HashMap<u64, usize> =
                distinct.iter().enumerate().map(|(i, &b)| (b, i)).collect();
            Ok((
                values.iter().map(|v| index[&v.to_bits()]).collect(),
                distinct.len(),
            ))
        }
        GroupBy::FeatureRanges(idx, breaks) => {
            let values = dataset.feature(*idx)?;
            let assign = values
                .iter()
                .map(|&v| breaks.iter().take_while(|&&b| v >= b).count())
                .collect();
            Ok((assign, breaks.len() + 1))
        }
    }
}

fn caps_for(
    rule: &CapRule,
    group_sizes: &[usize],
    n: usize,
    k: usize,
    round: Rounding,
) -> Result<Vec<usize>, HarnessError> {
    match rule {
        CapRule::Equal => Ok(vec![
            round.apply(k as f64 / group_sizes.len() as f64);
            group_sizes.len()
        ]),
        CapRule::Proportional(f) => Ok(group_sizes
            .iter()
            .map(|&s| round.apply(f * s as f64 / n as f64 * k as f64))
            .collect()),
        CapRule::Explicit(caps) => {
            if caps.len() != group_sizes.len() {
                return Err(HarnessError::Config(format!(
                    "{} explicit caps given for {} blocks",
                    caps.len(),
                    group_sizes.len()
                )));
            }
            Ok(caps.clone())
        }
    }
}

/// Builds the matroid oracle for one rank value.
pub fn build_matroid(
    dataset: &Dataset,
    spec: &MatroidSpec,
    k: usize,
    cap_round: Rounding,
) -> Result<MatroidOracle, HarnessError> {
    match spec {
        MatroidSpec::Uniform => Ok(MatroidOracle::uniform(k)),
        MatroidSpec::Partition { by, caps } => {
            let (assign, nblocks) = group_assignment(dataset, by)?;
            let mut sizes = vec![0usize; nblocks];
            for &b in &assign {
                sizes[b] += 1;
            }
            let caps = caps_for(caps, &sizes, dataset.len(), k, cap_round)?;
            let blocks: HashMap<ElementId, usize> = dataset
                .elements
                .iter()
                .zip(&assign)
                .map(|(e, &b)| (e.id, b))
                .collect();
            Ok(MatroidOracle::partition(blocks, caps)?)
        }
        MatroidSpec::Laminar { feature, groups } => {
            let values = dataset.feature(*feature)?;
            let n = dataset.len();
            let mut family = Vec::with_capacity(groups.len());
            for g in groups {
                let members: ElemSet = dataset
                    .elements
                    .iter()
                    .zip(&values)
                    .filter(|(_, &v)| v >= g.lo && v <= g.hi)
                    .map(|(e, _)| e.id)
                    .collect();
                let cap = match g.cap {
                    GroupCap::Fixed(c) => c,
                    GroupCap::Proportional(f) => {
                        // Upper caps round up, following the experiment setup.
                        Rounding::Ceil.apply(f * members.len() as f64 / n as f64 * k as f64)
                    }
                };
                family.push((members, cap));
            }
            let ground: ElemSet = dataset.elements.iter().map(|e| e.id).collect();
            Ok(MatroidOracle::laminar(
                LaminarFamily::new(family)?,
                &ground,
            )?)
        }
    }
}

/// Evaluates a bound rule for one rank value. Proportional lower bounds round
/// down and proportional upper bounds round up.
pub fn build_bounds(
    dataset: &Dataset,
    lower_rule: &BoundRule,
    upper_rule: &BoundRule,
    k: usize,
    bound_round: Rounding,
) -> Result<FairnessBounds, HarnessError> {
    let colors = ColorMap::new(&dataset.elements, dataset.color_count)?;
    let population = colors.population();
    let n = dataset.len();
    let eval = |rule: &BoundRule, is_lower: bool| -> Result<Vec<usize>, HarnessError> {
        match rule {
            BoundRule::Explicit(v) => {
                if v.len() != dataset.color_count {
                    return Err(HarnessError::Config(format!(
                        "{} explicit bounds given for {} colors",
                        v.len(),
                        dataset.color_count
                    )));
                }
                Ok(v.clone())
            }
            BoundRule::Proportional(f) => Ok(population
                .iter()
                .map(|&pop| {
                    let x = f * pop as f64 / n as f64 * k as f64;
                    if is_lower {
                        Rounding::Floor.apply(x)
                    } else {
                        Rounding::Ceil.apply(x)
                    }
                })
                .collect()),
            BoundRule::Affine(a, b) => Ok(population
                .iter()
                .map(|_| bound_round.apply(a * k as f64 + b))
                .collect()),
        }
    };
    let lower = eval(lower_rule, true)?;
    let upper = eval(upper_rule, false)?;
    FairnessBounds::new(lower, upper)
        .map_err(|e| HarnessError::Config(format!("bound rules conflict at k={k}: {e}")))
}

/// Builds the objective oracle over the dataset.
pub fn build_objective(
    dataset: &Dataset,
    config: &ExperimentConfig,
) -> Result<ObjectiveOracle<f64>, HarnessError> {
    match config.objective {
        ObjectiveSpec::Coverage => {
            let edges_path = config
                .edges
                .as_ref()
                .ok_or_else(|| HarnessError::Config("coverage objective needs edges =".into()))?;
            let adjacency = read_edges(edges_path)?;
            // Node labels to dense indices.
            let mut labels: Vec<&String> = adjacency.keys().collect();
            labels.sort_unstable();
            let index: HashMap<&String, u32> = labels
                .iter()
                .enumerate()
                .map(|(i, &l)| (l, i as u32))
                .collect();
            let mut neighbors = Vec::with_capacity(dataset.len());
            for (row, fields) in dataset.raw_fields.iter().enumerate() {
                let node = fields.first().ok_or_else(|| HarnessError::Parse {
                    line: row + 1,
                    message: "coverage element needs a node payload field".into(),
                })?;
                let list = adjacency
                    .get(node)
                    .map(|l| {
                        l.iter()
                            .filter_map(|v| index.get(v).copied())
                            .collect::<Vec<u32>>()
                    })
                    .unwrap_or_default();
                neighbors.push(list);
            }
            Ok(ObjectiveOracle::coverage(neighbors, &dataset.elements)?)
        }
        ObjectiveSpec::Exemplar => Ok(ObjectiveOracle::exemplar(
            dataset.features()?,
            &dataset.elements,
        )?),
        ObjectiveSpec::Recommendation => {
            let user_path = config.user_features.as_ref().ok_or_else(|| {
                HarnessError::Config("recommendation objective needs user_features =".into())
            })?;
            let user = read_vector(user_path)?;
            Ok(ObjectiveOracle::recommendation(
                dataset.features()?,
                user,
                config.alpha,
                &dataset.elements,
            )?)
        }
        ObjectiveSpec::Modular => {
            let weights = match &config.weights {
                Some(path) => read_weights(path)?,
                None => {
                    let w = dataset.feature(0)?;
                    dataset
                        .elements
                        .iter()
                        .zip(w)
                        .map(|(e, v)| (e.id, v))
                        .collect()
                }
            };
            for e in &dataset.elements {
                if !weights.contains_key(&e.id) {
                    return Err(HarnessError::Config(format!(
                        "no weight for element {}",
                        e.id
                    )));
                }
            }
            Ok(ObjectiveOracle::modular(weights))
        }
    }
}

/// Modular weights as a plain map, for the exact modular solvers.
pub fn modular_weights(
    dataset: &Dataset,
    config: &ExperimentConfig,
) -> Result<HashMap<ElementId, f64>, HarnessError> {
    match &config.weights {
        Some(path) => read_weights(path),
        None => Ok(dataset
            .elements
            .iter()
            .zip(dataset.feature(0)?)
            .map(|(e, v)| (e.id, v))
            .collect()),
    }
}

/// Assembles the instance for one rank value: elements in stream order
/// (optionally shuffled by seed), constraints, and the objective.
pub fn build_instance(
    dataset: &Dataset,
    config: &ExperimentConfig,
    k: usize,
) -> Result<Instance<f64>, HarnessError> {
    let matroid = build_matroid(dataset, &config.matroid, k, config.cap_round)?;
    let bounds = build_bounds(
        dataset,
        &config.lower_rule,
        &config.upper_rule,
        k,
        config.bound_round,
    )?;
    let colors = ColorMap::new(&dataset.elements, dataset.color_count)?;
    let constraints = Constraints::new(matroid, bounds, colors)?;
    let objective = build_objective(dataset, config)?;
    let mut elements = dataset.elements.clone();
    if let Some(seed) = config.shuffle {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        elements.shuffle(&mut rng);
    }
    Ok(Instance::new(elements, constraints, objective)?)
}
