//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any fails. Every tolerance and instance count is pinned below.

#![allow(clippy::needless_range_loop)]

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trendforge::attribute_model::{
    is_local_max, pair_map, pair_score, solver_registry, AttributePosterior, AttributePriorModel, JointTable,
    SolverParams,
};
use trendforge::fpgrowth::{miner_registry, AttributeSet, MinerParams};
use trendforge::ingest::{CategoryId, Zone};
use trendforge::noise::{metrics, ConfusionMatrix};
use trendforge::pipeline::{run, PipelineConfig, METADATA_FILE};
use trendforge::popularity::{select_popular, Cell, FrequencyTable, Percentile, Season};
use trendforge::synthgen::{generate, GeneratorSpec};

const MINING_INSTANCES: usize = 200;
const MINING_MAX_ATTRIBUTES: usize = 12;
const MINING_MAX_TRANSACTIONS: usize = 30;
const MINING_BUDGET: Duration = Duration::from_secs(10);
const SHUFFLES_PER_INSTANCE: usize = 5;
const MIN_TOTAL_SHUFFLES: usize = 1000;

const INDEPENDENCE_DRAWS: usize = 1000;
const INDEPENDENCE_TOL: f64 = 1e-12;

const WORKED_EXAMPLE: f64 = 0.768;
const WORKED_TOL: f64 = 1e-12;

const MAP_INSTANCES: usize = 100;
const MAP_MAX_ATTRIBUTES: usize = 12;
const MAP_REL_GAP: f64 = 0.05;
const MAP_MIN_SHARE: f64 = 0.90;
const MAP_BUDGET: Duration = Duration::from_secs(30);

const SELECTION_TABLES: usize = 100;

const METRIC_TOL: f64 = 1e-12;

const RECOVERY_SEEDS: u64 = 20;
const RECOVERY_ITEMS: usize = 2000;
const RECOVERY_MIN_SHARE: f64 = 0.95;
const RECOVERY_RUN_BUDGET: Duration = Duration::from_secs(60);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------- mining

fn random_transactions(rng: &mut ChaCha8Rng) -> Vec<AttributeSet> {
    let n_attrs = rng.gen_range(1..=MINING_MAX_ATTRIBUTES);
    let n_tx = rng.gen_range(0..=MINING_MAX_TRANSACTIONS);
    let density = rng.gen_range(0.1..0.6);
    (0..n_tx)
        .map(|_| {
            (0..n_attrs)
                .filter(|_| rng.gen_bool(density))
                .map(|a| format!("a{a:02}"))
                .collect()
        })
        .collect()
}

fn enumerate_itemsets(transactions: &[AttributeSet], min_support: u64) -> BTreeMap<Vec<String>, u64> {
    let universe: Vec<&String> = transactions
        .iter()
        .flatten()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut out = BTreeMap::new();
    for mask in 1u32..(1u32 << universe.len()) {
        let set: Vec<String> = (0..universe.len())
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| universe[b].clone())
            .collect();
        let support = transactions
            .iter()
            .filter(|t| set.iter().all(|a| t.contains(a)))
            .count() as u64;
        if support >= min_support {
            out.insert(set, support);
        }
    }
    out
}

fn fpgrowth(transactions: &[AttributeSet], min_support: u64) -> BTreeMap<Vec<String>, u64> {
    miner_registry()
        .create("fpgrowth", &MinerParams::default())
        .expect("registered")
        .mine(transactions, min_support)
        .expect("mining succeeds")
        .into_iter()
        .map(|s| (s.items, s.support))
        .collect()
}

fn mining_instances() -> Vec<(Vec<AttributeSet>, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF9);
    (0..MINING_INSTANCES)
        .map(|k| (random_transactions(&mut rng), 1 + (k % 3) as u64))
        .collect()
}

fn fpgrowth_equals_enumeration() -> Outcome {
    let cases = mining_instances();
    let start = Instant::now();
    let mismatches = cases
        .iter()
        .filter(|(txs, min)| fpgrowth(txs, *min) != enumerate_itemsets(txs, *min))
        .count();
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && elapsed < MINING_BUDGET,
        format!(
            "{mismatches}/{} mismatches, {elapsed:.2?} (budget {MINING_BUDGET:?})",
            cases.len()
        ),
    )
}

fn closure_and_order_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let mut closure_failures = 0;
    let mut order_failures = 0;
    let mut shuffles = 0;
    for (txs, min) in mining_instances() {
        let mined = fpgrowth(&txs, min);
        for (items, &support) in &mined {
            for drop in 0..items.len() {
                let mut sub = items.clone();
                sub.remove(drop);
                if !sub.is_empty() && !mined.get(&sub).is_some_and(|&s| s >= support) {
                    closure_failures += 1;
                }
            }
        }
        let mut shuffled = txs.clone();
        for _ in 0..SHUFFLES_PER_INSTANCE {
            shuffled.shuffle(&mut rng);
            shuffles += 1;
            if fpgrowth(&shuffled, min) != mined {
                order_failures += 1;
            }
        }
    }
    outcome(
        closure_failures == 0 && order_failures == 0 && shuffles >= MIN_TOTAL_SHUFFLES,
        format!("{closure_failures} closure violations, {order_failures}/{shuffles} shuffles changed output"),
    )
}

// ---------------------------------------------------------- pair scores

fn smoothed(count: u32, n: u32, alpha: f64) -> f64 {
    (count as f64 + alpha) / (n as f64 + 2.0 * alpha)
}

fn pair_independence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1D);
    let mut worst: f64 = 0.0;
    for _ in 0..INDEPENDENCE_DRAWS {
        let n = rng.gen_range(1..500);
        let alpha = rng.gen_range(0.1..5.0);
        let marginals = vec![
            smoothed(rng.gen_range(0..=n), n, alpha),
            smoothed(rng.gen_range(0..=n), n, alpha),
        ];
        let q = [rng.gen_range(0.001..0.999), rng.gen_range(0.001..0.999)];
        let model = AttributePriorModel::factorized(vec!["x".into(), "y".into()], marginals).expect("valid priors");
        let post = AttributePosterior::new(q.to_vec()).expect("valid posterior");
        let d = pair_map(0, 1, &post, &model).expect("pair map").distribution;
        for si in 0..2 {
            for sj in 0..2 {
                let pi = if si == 1 { q[0] } else { 1.0 - q[0] };
                let pj = if sj == 1 { q[1] } else { 1.0 - q[1] };
                worst = worst.max((d[si][sj] - pi * pj).abs());
            }
        }
    }
    outcome(
        worst <= INDEPENDENCE_TOL,
        format!("max deviation {worst:.3e} over {INDEPENDENCE_DRAWS} draws (tol {INDEPENDENCE_TOL:e})"),
    )
}

fn pair_worked_example() -> Outcome {
    let (q_i, m_i, q_j, m_j, p11) = (0.8, 0.5, 0.6, 0.5, 0.4);
    let joint: JointTable = [[1.0 - m_i - m_j + p11, m_j - p11], [m_i - p11, p11]];
    let model =
        AttributePriorModel::new(vec!["x".into(), "y".into()], vec![m_i, m_j], vec![joint]).expect("valid priors");
    let post = AttributePosterior::new(vec![q_i, q_j]).expect("valid posterior");
    let got = pair_score(0, 1, true, true, &post, &model).expect("score");
    let direct = q_i / m_i * (q_j / m_j) * p11;
    outcome(
        (got - WORKED_EXAMPLE).abs() <= WORKED_TOL && (got - direct).abs() <= WORKED_TOL,
        format!("score {got} (direct {direct}, expected {WORKED_EXAMPLE})"),
    )
}

// ------------------------------------------------------------------ MAP

fn random_model(rng: &mut ChaCha8Rng, n: usize) -> AttributePriorModel {
    let marginal: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.95)).collect();
    let mut joint = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (marginal[i], marginal[j]);
            let lo = (a + b - 1.0).max(0.0);
            let hi = a.min(b);
            let p11 = lo + (hi - lo) * rng.gen_range(0.02..0.98);
            joint.push([[1.0 - a - b + p11, b - p11], [a - p11, p11]]);
        }
    }
    let names = (0..n).map(|i| format!("f{i}")).collect();
    AttributePriorModel::new(names, marginal, joint).expect("consistent joints")
}

/// Brute-force MAP from the pair scores directly.
fn true_map(post: &AttributePosterior, model: &AttributePriorModel) -> f64 {
    let n = model.len();
    let mut logs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let mut t = [[0.0; 2]; 2];
            for si in [false, true] {
                for sj in [false, true] {
                    t[si as usize][sj as usize] = pair_score(i, j, si, sj, post, model).expect("score").ln();
                }
            }
            logs.push((i, j, t));
        }
    }
    (0u32..1 << n)
        .map(|mask| {
            logs.iter()
                .map(|&(i, j, t)| t[(mask >> i & 1) as usize][(mask >> j & 1) as usize])
                .sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn icm_vs_exhaustive() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1C);
    let icm = solver_registry()
        .create("icm", &SolverParams::default())
        .expect("registered");
    let exhaustive = solver_registry()
        .create("exhaustive", &SolverParams::default())
        .expect("registered");
    let start = Instant::now();
    let (mut not_local, mut close, mut oracle_disagree) = (0, 0, 0);
    for _ in 0..MAP_INSTANCES {
        let n = rng.gen_range(3..=MAP_MAX_ATTRIBUTES);
        let model = random_model(&mut rng, n);
        let post = AttributePosterior::new((0..n).map(|_| rng.gen_range(0.01..0.99)).collect()).expect("posterior");
        let r = icm.solve(&post, &model).expect("icm");
        let best = true_map(&post, &model);
        if !is_local_max(&r.assignment, &post, &model).expect("check") {
            not_local += 1;
        }
        if (exhaustive.solve(&post, &model).expect("exhaustive").objective - best).abs() > 1e-9 {
            oracle_disagree += 1;
        }
        if (best - r.objective).abs() <= MAP_REL_GAP * best.abs() {
            close += 1;
        }
    }
    let elapsed = start.elapsed();
    let share = close as f64 / MAP_INSTANCES as f64;
    outcome(
        not_local == 0 && oracle_disagree == 0 && share >= MAP_MIN_SHARE && elapsed < MAP_BUDGET,
        format!(
            "{not_local} non-local results, {close}/{MAP_INSTANCES} within {}% of MAP, exhaustive solver off on {oracle_disagree}, {elapsed:.2?}",
            MAP_REL_GAP * 100.0
        ),
    )
}

// ------------------------------------------------------------ selection

fn full_sort_oracle(counts: &BTreeMap<u64, u64>, percent: u64) -> (Vec<u64>, Vec<u64>) {
    let mut all: Vec<(u64, u64)> = counts.iter().filter(|(_, &c)| c > 0).map(|(&i, &c)| (i, c)).collect();
    all.sort_by_key(|&(id, c)| (Reverse(c), id));
    let k = (percent * all.len() as u64).div_ceil(100) as usize;
    let top: Vec<u64> = all[..k].iter().map(|p| p.0).collect();
    let mut bottom: Vec<u64> = all
        .iter()
        .rev()
        .take(k)
        .map(|p| p.0)
        .filter(|id| !top.contains(id))
        .collect();
    bottom.reverse();
    (top, bottom)
}

fn selection_vs_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5E);
    let categories = [
        CategoryId::new(Zone::Upper, "T-shirt"),
        CategoryId::new(Zone::Whole, "dress"),
    ];
    let (mut mismatches, mut scaling_failures) = (0, 0);
    for _ in 0..SELECTION_TABLES {
        let rows: Vec<(Cell, u64, u64)> = (0..rng.gen_range(0..1000))
            .map(|_| {
                let cell = Cell::new(
                    Season::ALL[rng.gen_range(0..4)],
                    categories[rng.gen_range(0..categories.len())].clone(),
                );
                // narrow count range forces ties
                (cell, rng.gen_range(0..1000), rng.gen_range(0..=100))
            })
            .collect();
        let freq = FrequencyTable::from_counts(rows);
        let percent = rng.gen_range(1..=50u64);
        let p = Percentile::new(percent as f64).expect("percentile");
        let sel = select_popular(&freq, p);
        for (cell, counts) in freq.cells() {
            let (top, bottom) = full_sort_oracle(counts, percent);
            let got = sel.cells.get(cell).cloned().unwrap_or_default();
            if got.popular != top || got.unpopular != bottom {
                mismatches += 1;
            }
        }
        if select_popular(&freq.scaled(rng.gen_range(2..20)), p).cells != sel.cells {
            scaling_failures += 1;
        }
    }
    outcome(
        mismatches == 0 && scaling_failures == 0,
        format!("{mismatches} cell mismatches, {scaling_failures}/{SELECTION_TABLES} tables changed under scaling"),
    )
}

// -------------------------------------------------------------- metrics

fn metric_bookkeeping() -> Outcome {
    let cm = ConfusionMatrix {
        tp: 7,
        fp: 2,
        fn_: 3,
        tn: 8,
    };
    let m = metrics(&cm).expect("non-empty");
    let (acc, rec, prec) = (
        m.accuracy.value().unwrap_or(f64::NAN),
        m.recall.value().unwrap_or(f64::NAN),
        m.precision.value().unwrap_or(f64::NAN),
    );
    let ok = (acc - 15.0 / 20.0).abs() <= METRIC_TOL
        && (rec - 7.0 / 10.0).abs() <= METRIC_TOL
        && (prec - 7.0 / 9.0).abs() <= METRIC_TOL
        && (acc - 0.75).abs() <= METRIC_TOL
        && (rec - 0.70).abs() <= METRIC_TOL;
    outcome(ok, format!("accuracy {acc}, recall {rec}, precision {prec}"))
}

// ------------------------------------------------------------ end to end

fn recovery_and_determinism(scratch: &Path) -> (Outcome, Outcome) {
    let mut recovered = 0;
    let mut slowest = Duration::ZERO;
    let mut misses = Vec::new();
    for seed in 0..RECOVERY_SEEDS {
        let data = scratch.join(format!("data-{seed}"));
        let out = scratch.join(format!("out-{seed}"));
        let spec = GeneratorSpec::planted_trends(seed, RECOVERY_ITEMS);
        let truth = generate(&spec, &data).expect("generation");
        let start = Instant::now();
        let result = run(&PipelineConfig::new(&data, &out));
        slowest = slowest.max(start.elapsed());
        let Ok(result) = result else {
            misses.push(format!("seed {seed}: run failed"));
            continue;
        };
        let wrong: Vec<String> = truth
            .planted
            .iter()
            .filter_map(|p| {
                let got = result.report.features.class_of(p.season, &p.attribute);
                (got != Some(p.planted_class)).then(|| format!("{}/{}={:?}", p.season, p.attribute, got))
            })
            .collect();
        if wrong.is_empty() {
            recovered += 1;
        } else {
            misses.push(format!("seed {seed}: {}", wrong.join(",")));
        }
    }
    let share = recovered as f64 / RECOVERY_SEEDS as f64;
    let recovery = outcome(
        share >= RECOVERY_MIN_SHARE && slowest < RECOVERY_RUN_BUDGET,
        format!(
            "{recovered}/{RECOVERY_SEEDS} seeds fully recovered, slowest run {slowest:.2?}{}",
            if misses.is_empty() {
                String::new()
            } else {
                format!(" [{}]", misses.join("; "))
            }
        ),
    );

    // identical config includes the output directory, so rerun in place
    let out = scratch.join("out-0");
    let snapshot = scratch.join("out-0-first");
    let determinism = match copy_dir(&out, &snapshot)
        .map_err(|e| e.to_string())
        .and_then(|()| run(&PipelineConfig::new(scratch.join("data-0"), &out)).map_err(|e| e.to_string()))
    {
        Err(e) => outcome(false, format!("rerun failed: {e}")),
        Ok(_) => {
            let differing = compare_outputs(&snapshot, &out);
            outcome(
                differing.is_empty(),
                if differing.is_empty() {
                    "all report files byte-identical".to_string()
                } else {
                    format!("differing: {}", differing.join(", "))
                },
            )
        }
    };
    (recovery, determinism)
}

fn copy_dir(from: &Path, to: &Path) -> std::io::Result<()> {
    fs::create_dir_all(to)?;
    for entry in fs::read_dir(from)? {
        let entry = entry?;
        fs::copy(entry.path(), to.join(entry.file_name()))?;
    }
    Ok(())
}

/// Files that differ between two output directories, ignoring run metadata.
fn compare_outputs(a: &Path, b: &Path) -> Vec<String> {
    let names = |d: &Path| -> BTreeSet<String> {
        fs::read_dir(d)
            .map(|it| {
                it.filter_map(|e| e.ok())
                    .map(|e| e.file_name().to_string_lossy().into_owned())
                    .collect()
            })
            .unwrap_or_default()
    };
    let (na, nb) = (names(a), names(b));
    let mut differing: Vec<String> = na.symmetric_difference(&nb).cloned().collect();
    for name in na.intersection(&nb).filter(|n| n.as_str() != METADATA_FILE) {
        if fs::read(a.join(name)).ok() != fs::read(b.join(name)).ok() {
            differing.push(name.clone());
        }
    }
    if na.is_empty() {
        differing.push("<no output>".into());
    }
    differing
}

fn main() -> ExitCode {
    let scratch = tempfile::tempdir().expect("scratch dir");
    let (recovery, determinism) = recovery_and_determinism(scratch.path());
    let results = [
        ("fpgrowth-equals-enumeration", fpgrowth_equals_enumeration()),
        ("downward-closure-and-order-invariance", closure_and_order_invariance()),
        ("pair-independence", pair_independence()),
        ("pair-worked-example", pair_worked_example()),
        ("icm-vs-exhaustive-map", icm_vs_exhaustive()),
        ("percentile-selection-oracle", selection_vs_oracle()),
        ("metric-bookkeeping", metric_bookkeeping()),
        ("planted-trend-recovery", recovery),
        ("report-determinism", determinism),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
