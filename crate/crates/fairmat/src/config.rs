//! Experiment configuration: a key=value file describing the dataset, the
//! objective, the matroid, the fairness-bound rules, the rank sweep, and the
//! algorithm list.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounding {
    Floor,
    Ceil,
    Nearest,
}

impl Rounding {
    pub fn apply(self, x: f64) -> usize {
        let r = match self {
            Rounding::Floor => x.floor(),
            Rounding::Ceil => x.ceil(),
            Rounding::Nearest => x.round(),
        };
        r.max(0.0) as usize
    }
}

/// How elements map to partition blocks or laminar groups.
#[derive(Debug, Clone)]
pub enum GroupBy {
    /// One block per color.
    Color,
    /// One block per distinct value of a payload feature.
    Feature(usize),
    /// Blocks are half-open ranges over a payload feature; `breaks` of length
    /// b yields b+1 blocks `(-inf, b0), [b0, b1), ..., [b_last, inf)`.
    FeatureRanges(usize, Vec<f64>),
}

/// Per-block caps, possibly depending on the rank parameter k.
#[derive(Debug, Clone)]
pub enum CapRule {
    /// cap_i = round(k / #blocks)
    Equal,
    /// cap_i = round(factor · |V_i|/|V| · k)
    Proportional(f64),
    Explicit(Vec<usize>),
}

#[derive(Debug, Clone)]
pub struct LaminarGroupSpec {
    pub lo: f64,
    pub hi: f64,
    /// cap = round(factor · |V_g|/|V| · k) when proportional, else fixed.
    pub cap: GroupCap,
}

#[derive(Debug, Clone)]
pub enum GroupCap {
    Proportional(f64),
    Fixed(usize),
}

#[derive(Debug, Clone)]
pub enum MatroidSpec {
    Uniform,
    Partition {
        by: GroupBy,
        caps: CapRule,
    },
    Laminar {
        feature: usize,
        groups: Vec<LaminarGroupSpec>,
    },
}

/// Per-color fairness bound rule, evaluated at each k.
#[derive(Debug, Clone)]
pub enum BoundRule {
    /// round(factor · |V_c|/|V| · k); lower bounds round down, upper bounds
    /// round up (the experiment convention).
    Proportional(f64),
    /// round(a·k + b) with the configured rounding mode.
    Affine(f64, f64),
    Explicit(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplayMode {
    Memory,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlgorithmId {
    FairReservoir,
    TwoPass,
    TwoPassPlus,
    GreedyOnePass,
    MatroidIntersection,
    Random,
    ModularStreaming,
    ModularCentralized,
    BruteForce,
    Exponential,
}

impl AlgorithmId {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "fair-reservoir" => AlgorithmId::FairReservoir,
            "two-pass" => AlgorithmId::TwoPass,
            "two-pass-plus" => AlgorithmId::TwoPassPlus,
            "greedy-one-pass" => AlgorithmId::GreedyOnePass,
            "matroid-intersection" => AlgorithmId::MatroidIntersection,
            "random" => AlgorithmId::Random,
            "modular-streaming" => AlgorithmId::ModularStreaming,
            "modular-centralized" => AlgorithmId::ModularCentralized,
            "brute-force" => AlgorithmId::BruteForce,
            "exponential" => AlgorithmId::Exponential,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmId::FairReservoir => "fair-reservoir",
            AlgorithmId::TwoPass => "two-pass",
            AlgorithmId::TwoPassPlus => "two-pass-plus",
            AlgorithmId::GreedyOnePass => "greedy-one-pass",
            AlgorithmId::MatroidIntersection => "matroid-intersection",
            AlgorithmId::Random => "random",
            AlgorithmId::ModularStreaming => "modular-streaming",
            AlgorithmId::ModularCentralized => "modular-centralized",
            AlgorithmId::BruteForce => "brute-force",
            AlgorithmId::Exponential => "exponential",
        }
    }

    pub fn all() -> &'static [AlgorithmId] {
        &[
            AlgorithmId::FairReservoir,
            AlgorithmId::TwoPass,
            AlgorithmId::TwoPassPlus,
            AlgorithmId::GreedyOnePass,
            AlgorithmId::MatroidIntersection,
            AlgorithmId::Random,
            AlgorithmId::ModularStreaming,
            AlgorithmId::ModularCentralized,
            AlgorithmId::BruteForce,
            AlgorithmId::Exponential,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveSpec {
    Coverage,
    Exemplar,
    Recommendation,
    Modular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FirstPassKind {
    Plain,
    Greedy,
}

#[derive(Debug, Clone, Copy)]
pub enum RoutineSpec {
    Swap { beta: f64 },
    Exact { max_buffer: usize },
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    pub objective: ObjectiveSpec,
    pub edges: Option<PathBuf>,
    pub user_features: Option<PathBuf>,
    pub weights: Option<PathBuf>,
    pub alpha: f64,
    pub matroid: MatroidSpec,
    pub lower_rule: BoundRule,
    pub upper_rule: BoundRule,
    pub ks: Vec<usize>,
    pub algorithms: Vec<AlgorithmId>,
    pub seed: u64,
    pub shuffle: Option<u64>,
    pub replay: ReplayMode,
    pub timing: bool,
    pub routine: RoutineSpec,
    pub first_pass: FirstPassKind,
    pub eta: f64,
    pub compute_opt: bool,
    pub cap_round: Rounding,
    pub bound_round: Rounding,
}

fn parse_rounding(s: &str) -> Result<Rounding, HarnessError> {
    match s {
        "floor" => Ok(Rounding::Floor),
        "ceil" => Ok(Rounding::Ceil),
        "nearest" => Ok(Rounding::Nearest),
        other => Err(HarnessError::Config(format!(
            "unknown rounding mode '{other}' (floor|ceil|nearest)"
        ))),
    }
}

fn parse_group_by(s: &str, breaks: Option<&str>) -> Result<GroupBy, HarnessError> {
    if s == "color" {
        return Ok(GroupBy::Color);
    }
    let Some(idx) = s.strip_prefix("feature:") else {
        return Err(HarnessError::Config(format!(
            "unknown grouping '{s}' (color or feature:<index>)"
        )));
    };
    let idx: usize = idx
        .parse()
        .map_err(|_| HarnessError::Config(format!("bad feature index in '{s}'")))?;
    match breaks {
        None => Ok(GroupBy::Feature(idx)),
        Some(b) => {
            let mut cuts = Vec::new();
            for part in b.split(',') {
                let part = part.trim();
                if part.is_empty() {
                    continue;
                }
                cuts.push(
                    part.parse::<f64>()
                        .map_err(|_| HarnessError::Config(format!("bad breakpoint '{part}'")))?,
                );
            }
            if cuts.windows(2).any(|w| w[0] >= w[1]) {
                return Err(HarnessError::Config(
                    "breakpoints must be strictly increasing".into(),
                ));
            }
            Ok(GroupBy::FeatureRanges(idx, cuts))
        }
    }
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>, HarnessError> {
    s.split_whitespace()
        .map(|p| {
            p.parse::<usize>()
                .map_err(|_| HarnessError::Config(format!("bad integer '{p}'")))
        })
        .collect()
}

fn parse_bound_rule(s: &str) -> Result<BoundRule, HarnessError> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    match parts.as_slice() {
        ["prop", f] => Ok(BoundRule::Proportional(f.parse().map_err(|_| {
            HarnessError::Config(format!("bad factor in bound rule '{s}'"))
        })?)),
        ["affine", a, b] => {
            let a = a
                .parse()
                .map_err(|_| HarnessError::Config(format!("bad slope in '{s}'")))?;
            let b = b
                .parse()
                .map_err(|_| HarnessError::Config(format!("bad offset in '{s}'")))?;
            Ok(BoundRule::Affine(a, b))
        }
        _ => Ok(BoundRule::Explicit(parse_usize_list(s)?)),
    }
}

fn parse_laminar_group(s: &str) -> Result<LaminarGroupSpec, HarnessError> {
    // "<lo>..<hi> : prop <factor>" or "<lo>..<hi> : cap <n>"
    let (range, cap) = s
        .split_once(':')
        .ok_or_else(|| HarnessError::Config(format!("laminar group '{s}' missing ':'")))?;
    let (lo, hi) = range
        .trim()
        .split_once("..")
        .ok_or_else(|| HarnessError::Config(format!("laminar range '{range}' missing '..'")))?;
    let lo: f64 = lo
        .trim()
        .parse()
        .map_err(|_| HarnessError::Config(format!("bad range start '{lo}'")))?;
    let hi: f64 = hi
        .trim()
        .parse()
        .map_err(|_| HarnessError::Config(format!("bad range end '{hi}'")))?;
    if lo > hi {
        return Err(HarnessError::Config(format!(
            "laminar range {lo}..{hi} is empty"
        )));
    }
    let parts: Vec<&str> = cap.split_whitespace().collect();
    let cap = match parts.as_slice() {
        ["prop", f] => GroupCap::Proportional(
            f.parse()
                .map_err(|_| HarnessError::Config(format!("bad proportional cap in '{s}'")))?,
        ),
        ["cap", n] => GroupCap::Fixed(
            n.parse()
                .map_err(|_| HarnessError::Config(format!("bad fixed cap in '{s}'")))?,
        ),
        _ => {
            return Err(HarnessError::Config(format!(
                "laminar cap '{cap}' must be 'prop <f>' or 'cap <n>'"
            )))
        }
    };
    Ok(LaminarGroupSpec { lo, hi, cap })
}

impl ExperimentConfig {
    /// Parses a key=value config file. Paths are resolved relative to the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            HarnessError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, HarnessError> {
        let mut single: HashMap<String, String> = HashMap::new();
        let mut laminar_groups: Vec<String> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(HarnessError::Config(format!(
                    "line {}: expected key = value, got '{line}'",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key == "laminar_group" {
                laminar_groups.push(value);
            } else if single.insert(key.clone(), value).is_some() {
                return Err(HarnessError::Config(format!(
                    "line {}: duplicate key '{key}'",
                    lineno + 1
                )));
            }
        }
        let get = |k: &str| single.get(k).map(|s| s.as_str());
        let require = |k: &str| {
            get(k).ok_or_else(|| HarnessError::Config(format!("missing required key '{k}'")))
        };

        let dataset = base.join(require("dataset")?);
        let objective = match require("objective")? {
            "coverage" => ObjectiveSpec::Coverage,
            "exemplar" => ObjectiveSpec::Exemplar,
            "recommendation" => ObjectiveSpec::Recommendation,
            "modular" => ObjectiveSpec::Modular,
            other => return Err(HarnessError::Config(format!("unknown objective '{other}'"))),
        };
        let cap_round = get("cap_round")
            .map(parse_rounding)
            .transpose()?
            .unwrap_or(Rounding::Floor);
        let bound_round = get("bound_round")
            .map(parse_rounding)
            .transpose()?
            .unwrap_or(Rounding::Floor);

        let matroid = match require("matroid")? {
            "uniform" => MatroidSpec::Uniform,
            "partition" => {
                let by = parse_group_by(require("partition_by")?, get("partition_breaks"))?;
                let caps = match get("partition_cap_rule") {
                    None | Some("equal") => CapRule::Equal,
                    Some(rule) => {
                        let parts: Vec<&str> = rule.split_whitespace().collect();
                        match parts.as_slice() {
                            ["prop", f] => CapRule::Proportional(f.parse().map_err(|_| {
                                HarnessError::Config(format!("bad cap factor in '{rule}'"))
                            })?),
                            ["explicit"] => {
                                CapRule::Explicit(parse_usize_list(require("partition_caps")?)?)
                            }
                            _ => {
                                return Err(HarnessError::Config(format!(
                                    "unknown partition_cap_rule '{rule}'"
                                )))
                            }
                        }
                    }
                };
                MatroidSpec::Partition { by, caps }
            }
            "laminar" => {
                let feature_key = require("laminar_by")?;
                let GroupBy::Feature(feature) = parse_group_by(feature_key, None)? else {
                    return Err(HarnessError::Config(
                        "laminar_by must be feature:<index>".into(),
                    ));
                };
                if laminar_groups.is_empty() {
                    return Err(HarnessError::Config(
                        "laminar matroid requires at least one laminar_group line".into(),
                    ));
                }
                let groups = laminar_groups
                    .iter()
                    .map(|g| parse_laminar_group(g))
                    .collect::<Result<Vec<_>, _>>()?;
                MatroidSpec::Laminar { feature, groups }
            }
            other => return Err(HarnessError::Config(format!("unknown matroid '{other}'"))),
        };

        let lower_rule = parse_bound_rule(require("lower")?)?;
        let upper_rule = parse_bound_rule(require("upper")?)?;
        let ks = parse_usize_list(require("k")?)?;
        if ks.is_empty() {
            return Err(HarnessError::Config("empty k sweep".into()));
        }

        let algorithms = match get("algorithms") {
            None => vec![AlgorithmId::TwoPass],
            Some(list) => {
                let mut out = Vec::new();
                for name in list.split_whitespace() {
                    out.push(AlgorithmId::parse(name).ok_or_else(|| {
                        HarnessError::Config(format!("unknown algorithm '{name}'"))
                    })?);
                }
                if out.is_empty() {
                    return Err(HarnessError::Config("empty algorithm list".into()));
                }
                out
            }
        };

        let parse_f64 = |k: &str, default: f64| -> Result<f64, HarnessError> {
            match get(k) {
                None => Ok(default),
                Some(v) => v
                    .parse()
                    .map_err(|_| HarnessError::Config(format!("bad number for '{k}'"))),
            }
        };
        let parse_u64 = |k: &str, default: u64| -> Result<u64, HarnessError> {
            match get(k) {
                None => Ok(default),
                Some(v) => v
                    .parse()
                    .map_err(|_| HarnessError::Config(format!("bad integer for '{k}'"))),
            }
        };

        let routine = match get("routine") {
            None | Some("swap") => RoutineSpec::Swap {
                beta: parse_f64("beta", 1.0)?,
            },
            Some("exact") => RoutineSpec::Exact {
                max_buffer: parse_u64("exact_buffer", 22)? as usize,
            },
            Some(other) => {
                return Err(HarnessError::Config(format!(
                    "unknown routine '{other}' (swap|exact)"
                )))
            }
        };
        let first_pass = match get("first_pass") {
            None | Some("greedy") => FirstPassKind::Greedy,
            Some("plain") => FirstPassKind::Plain,
            Some(other) => {
                return Err(HarnessError::Config(format!(
                    "unknown first_pass '{other}' (plain|greedy)"
                )))
            }
        };
        let replay = match get("replay") {
            None | Some("memory") => ReplayMode::Memory,
            Some("file") => ReplayMode::File,
            Some(other) => {
                return Err(HarnessError::Config(format!(
                    "unknown replay mode '{other}' (memory|file)"
                )))
            }
        };
        let timing = match get("timing") {
            None | Some("off") => false,
            Some("on") => true,
            Some(other) => {
                return Err(HarnessError::Config(format!(
                    "unknown timing mode '{other}' (on|off)"
                )))
            }
        };
        let compute_opt = match get("compute_opt") {
            None | Some("auto") => true,
            Some("off") => false,
            Some(other) => {
                return Err(HarnessError::Config(format!(
                    "unknown compute_opt '{other}' (auto|off)"
                )))
            }
        };

        Ok(ExperimentConfig {
            dataset,
            objective,
            edges: get("edges").map(|p| base.join(p)),
            user_features: get("user_features").map(|p| base.join(p)),
            weights: get("weights").map(|p| base.join(p)),
            alpha: parse_f64("alpha", 0.85)?,
            matroid,
            lower_rule,
            upper_rule,
            ks,
            algorithms,
            seed: parse_u64("seed", 0)?,
            shuffle: get("shuffle")
                .filter(|v| *v != "none")
                .map(|v| {
                    v.parse::<u64>()
                        .map_err(|_| HarnessError::Config("bad shuffle seed".into()))
                })
                .transpose()?,
            replay,
            timing,
            routine,
            first_pass,
            eta: parse_f64("eta", 0.1)?,
            compute_opt,
            cap_round,
            bound_round,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses() {
        let text = "dataset = d.csv\nobjective = modular\nmatroid = uniform\nlower = 1 0\nupper = 2 1\nk = 3\n";
        let cfg = ExperimentConfig::parse(text, Path::new("/tmp")).unwrap();
        assert_eq!(cfg.ks, vec![3]);
        assert!(matches!(cfg.matroid, MatroidSpec::Uniform));
        assert!(matches!(cfg.lower_rule, BoundRule::Explicit(ref v) if v == &vec![1, 0]));
    }

    #[test]
    fn partition_with_breaks_parses() {
        let text = "dataset = d.csv\nobjective = exemplar\nmatroid = partition\npartition_by = feature:1\npartition_breaks = 0,2000,4000,6000\nlower = affine 0.1 2\nupper = affine 0.4 0\nk = 25 30\nalgorithms = two-pass random\n";
        let cfg = ExperimentConfig::parse(text, Path::new("/tmp")).unwrap();
        match &cfg.matroid {
            MatroidSpec::Partition {
                by: GroupBy::FeatureRanges(1, cuts),
                caps: CapRule::Equal,
            } => {
                assert_eq!(cuts.len(), 4);
            }
            other => panic!("unexpected matroid spec {other:?}"),
        }
        assert_eq!(cfg.algorithms.len(), 2);
    }

    #[test]
    fn laminar_groups_parse() {
        let text = "dataset = d.csv\nobjective = recommendation\nuser_features = u.csv\nmatroid = laminar\nlaminar_by = feature:0\nlaminar_group = 1911..1920 : prop 1.2\nlaminar_group = 1911..1940 : prop 1.0\nlower = prop 0.8\nupper = prop 1.4\nk = 10\n";
        let cfg = ExperimentConfig::parse(text, Path::new("/tmp")).unwrap();
        match &cfg.matroid {
            MatroidSpec::Laminar { feature: 0, groups } => assert_eq!(groups.len(), 2),
            other => panic!("unexpected matroid spec {other:?}"),
        }
    }

    #[test]
    fn bad_keys_are_rejected() {
        let text = "dataset = d.csv\nobjective = modular\nmatroid = uniform\nlower = 1\nupper = 2\nk = 3\nalgorithms = warp-drive\n";
        assert!(ExperimentConfig::parse(text, Path::new("/tmp")).is_err());
        let no_eq = "dataset d.csv\n";
        assert!(ExperimentConfig::parse(no_eq, Path::new("/tmp")).is_err());
    }
}
