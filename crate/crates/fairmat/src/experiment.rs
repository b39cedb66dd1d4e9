//! The experiment loop: one run record per (algorithm, k) cell, with stream
//! replay for two-pass algorithms and bounded parallelism across cells.

use std::sync::Mutex;
use std::time::Instant;

use fairmat_core::brute::{brute_force_opt, MAX_BRUTE_GROUND};
use fairmat_core::modular::{greedy_fair_streaming_m, solve_f3m_centralized};
use fairmat_core::streaming::{
    fair_reservoir, fair_streaming, fair_streaming_plus, greedy_fair_reservoir,
    greedy_fair_streaming, random_base, ExactRoutineA, FirstPass, RoutineA, RunCarry, SwapRoutineA,
};
use fairmat_core::{exponential, Error, Instance, SolutionReport};

use crate::config::{
    AlgorithmId, ExperimentConfig, FirstPassKind, ObjectiveSpec, ReplayMode, RoutineSpec,
};
use crate::ingest::{build_instance, modular_weights, read_dataset, Dataset};
use crate::report::RunRecord;
use crate::HarnessError;

/// Worker-thread cap: `FAIRMAT_THREADS`, default 1.
pub fn thread_cap() -> usize {
    std::env::var("FAIRMAT_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t >= 1)
        .unwrap_or(1)
}

fn routine_for(config: &ExperimentConfig) -> Box<dyn RoutineA<f64>> {
    match config.routine {
        RoutineSpec::Swap { beta } => Box::new(SwapRoutineA {
            beta,
            ..SwapRoutineA::default()
        }),
        RoutineSpec::Exact { max_buffer } => Box::new(ExactRoutineA { max_buffer }),
    }
}

/// Second-pass element source honoring the replay mode: in-memory reuse or a
/// full re-read of the dataset file. Both passes must observe the identical
/// element sequence.
fn replay_stream(
    instance: &Instance<f64>,
    config: &ExperimentConfig,
    k: usize,
) -> Result<Vec<fairmat_core::Element>, HarnessError> {
    match config.replay {
        ReplayMode::Memory => Ok(instance.elements.clone()),
        ReplayMode::File => {
            let reread = read_dataset(&config.dataset)?;
            let replayed = build_instance(&reread, config, k)?;
            if replayed.elements != instance.elements {
                return Err(HarnessError::Config(
                    "file replay produced a different element sequence".into(),
                ));
            }
            Ok(replayed.elements)
        }
    }
}

fn first_pass_of(
    instance: &Instance<f64>,
    config: &ExperimentConfig,
) -> fairmat_core::Result<FirstPass> {
    match config.first_pass {
        FirstPassKind::Plain => fair_reservoir(&instance.elements, &instance.constraints),
        FirstPassKind::Greedy => greedy_fair_reservoir(
            &instance.elements,
            &instance.constraints,
            &instance.objective,
        ),
    }
}

fn run_algorithm(
    algorithm: AlgorithmId,
    instance: &Instance<f64>,
    dataset: &Dataset,
    config: &ExperimentConfig,
    k: usize,
) -> Result<SolutionReport<f64>, HarnessError> {
    let cx = &instance.constraints;
    let obj = &instance.objective;
    match algorithm {
        AlgorithmId::FairReservoir => {
            let fp = first_pass_of(instance, config)?;
            Ok(SolutionReport::build(
                fp.chosen,
                cx,
                obj,
                fp.peak_stored,
                fp.oracle_calls,
            )?)
        }
        AlgorithmId::TwoPass | AlgorithmId::TwoPassPlus => {
            let fp = first_pass_of(instance, config)?;
            let second = replay_stream(instance, config, k)?;
            let routine = routine_for(config);
            let carry = RunCarry {
                peak_stored: fp.peak_stored,
                oracle_calls: fp.oracle_calls,
            };
            let report = if algorithm == AlgorithmId::TwoPass {
                fair_streaming(&second, &fp.chosen, cx, obj, routine.as_ref(), carry)?
            } else {
                fair_streaming_plus(&second, &fp.chosen, cx, obj, routine.as_ref(), carry)?
            };
            Ok(report)
        }
        AlgorithmId::GreedyOnePass => Ok(greedy_fair_streaming(&instance.elements, cx, obj)?),
        AlgorithmId::MatroidIntersection => {
            // Unfair baseline: the instance matroid and the upper-bound color
            // matroid, no lower bounds.
            let routine = routine_for(config);
            let upper = fairmat_core::MatroidOracle::upper_color(&cx.bounds, &cx.colors);
            let m0 = cx.matroid.calls();
            let o0 = obj.calls();
            let mut run = routine.start(upper.clone(), cx.matroid.clone(), obj.clone())?;
            let mut peak = 0usize;
            for e in &instance.elements {
                run.offer(e.id)?;
                peak = peak.max(run.stored());
            }
            let chosen = run.finish()?;
            Ok(SolutionReport::build(
                chosen,
                cx,
                obj,
                peak,
                fairmat_core::OracleCalls {
                    independence: (cx.matroid.calls() - m0) + upper.calls(),
                    objective: obj.calls() - o0,
                },
            )?)
        }
        AlgorithmId::Random => Ok(random_base(&instance.elements, cx, obj, config.seed)?),
        AlgorithmId::ModularStreaming | AlgorithmId::ModularCentralized => {
            if config.objective != ObjectiveSpec::Modular {
                return Err(HarnessError::Config(format!(
                    "{} requires a modular objective",
                    algorithm.name()
                )));
            }
            let weights = modular_weights(dataset, config)?;
            if algorithm == AlgorithmId::ModularStreaming {
                Ok(greedy_fair_streaming_m(&instance.elements, cx, &weights)?)
            } else {
                Ok(solve_f3m_centralized(&instance.ground(), cx, &weights)?)
            }
        }
        AlgorithmId::BruteForce => {
            let scan = brute_force_opt(&instance.ground(), cx, obj)?;
            let (chosen, value) = scan
                .best
                .ok_or_else(|| Error::Infeasible("no feasible subset".into()))?;
            let per_color = cx.colors.counts(&chosen)?;
            let violation = cx.bounds.violation_of_counts(&per_color);
            Ok(SolutionReport {
                chosen,
                value,
                per_color,
                violation,
                stored_elements_peak: instance.ground_size(),
                oracle_calls: fairmat_core::OracleCalls::default(),
            })
        }
        AlgorithmId::Exponential => Ok(exponential::exp_enumerate(
            &instance.elements,
            cx,
            obj,
            config.eta,
        )?),
    }
}

fn run_cell(
    algorithm: AlgorithmId,
    dataset: &Dataset,
    config: &ExperimentConfig,
    k: usize,
) -> RunRecord {
    let mut record = RunRecord {
        algorithm: algorithm.name().to_string(),
        k,
        seed: config.seed,
        ..RunRecord::default()
    };
    let started = Instant::now();
    let outcome = build_instance(dataset, config, k).and_then(|instance| {
        let report = run_algorithm(algorithm, &instance, dataset, config, k)?;
        // Reference optimum on desk-scale instances.
        if config.compute_opt && instance.ground_size() <= MAX_BRUTE_GROUND.min(12) {
            let scan = brute_force_opt(
                &instance.ground(),
                &instance.constraints,
                &instance.objective,
            )?;
            record.opt = scan.value();
        }
        Ok(report)
    });
    match outcome {
        Ok(report) => {
            record.value = Some(report.value);
            record.err = Some(report.violation);
            record.per_color = report.per_color;
            record.peak_memory = Some(report.stored_elements_peak);
            record.objective_calls = Some(report.oracle_calls.objective);
            record.independence_calls = Some(report.oracle_calls.independence);
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    if config.timing {
        record.wall_ms = Some(started.elapsed().as_millis());
    }
    record
}

/// Runs every (algorithm, k) cell and returns records in sweep order.
/// Cells run on up to `FAIRMAT_THREADS` workers; the output order is fixed
/// regardless of scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>, HarnessError> {
    let dataset = read_dataset(&config.dataset)?;
    // Surface constraint-construction problems (ℓ > u and friends) as config
    // errors before any cell runs.
    for &k in &config.ks {
        crate::ingest::build_bounds(
            &dataset,
            &config.lower_rule,
            &config.upper_rule,
            k,
            config.bound_round,
        )?;
    }

    let cells: Vec<(usize, AlgorithmId, usize)> = config
        .ks
        .iter()
        .flat_map(|&k| config.algorithms.iter().map(move |&a| (a, k)))
        .enumerate()
        .map(|(i, (a, k))| (i, a, k))
        .collect();

    let workers = thread_cap().min(cells.len().max(1));
    let results: Mutex<Vec<(usize, RunRecord)>> = Mutex::new(Vec::with_capacity(cells.len()));
    std::thread::scope(|scope| {
        for w in 0..workers {
            let cells = &cells;
            let results = &results;
            let dataset = &dataset;
            scope.spawn(move || {
                for (idx, algorithm, k) in cells.iter().skip(w).step_by(workers) {
                    let record = run_cell(*algorithm, dataset, config, *k);
                    results
                        .lock()
                        .expect("no poisoned lock")
                        .push((*idx, record));
                }
            });
        }
    });
    let mut rows = results.into_inner().expect("no poisoned lock");
    rows.sort_by_key(|(idx, _)| *idx);
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}
