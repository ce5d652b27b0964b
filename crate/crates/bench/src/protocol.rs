//! The replication protocol: per (dataset, replication) cell, one seeded
//! split and one pool shared by every technique, evaluated on one test set.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use dynsel_core::baselines::{
    fit_static, knop, knora_e, knora_u, lca, mcb, mla, ola, oracle_accuracy, StaticBaselines,
    Technique,
};
use dynsel_core::dataset::stable_hash64;
use dynsel_core::linear::accuracy as classifier_accuracy;
use dynsel_core::metades;
use dynsel_core::pool::bagging_vote_accuracy;
use dynsel_core::region::{build_profiles, ProfileTable};
use dynsel_core::{
    adaboost_train, bagging_generate, majority_vote, stratified_split, Dataset, MetaTrainConfig,
    MinMaxScaler, Pool, SplitSpec,
};

use crate::config::{ProtocolParams, RunConfig};
use crate::registry::Registry;

/// One benchmark measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub dataset: String,
    pub technique: String,
    pub replication: usize,
    pub accuracy: f64,
    pub ensemble_size_mean: f64,
    pub wall_time: f64,
}

/// All records of one replication cell plus its pool fingerprint, which is
/// identical across techniques by construction and auditable by callers.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub records: Vec<RunRecord>,
    pub pool_fingerprint: u64,
}

/// Independent seeds for the stages of one cell, derived from the base seed,
/// the dataset name, and the replication index.
#[derive(Debug, Clone, Copy)]
pub struct CellSeeds {
    pub split: u64,
    pub pool: u64,
    pub selector: u64,
    pub adaboost: u64,
}

pub fn cell_seeds(seed_base: u64, dataset: &str, replication: usize) -> CellSeeds {
    let derive = |salt: &[u8]| {
        stable_hash64(&[
            &seed_base.to_le_bytes(),
            dataset.as_bytes(),
            &(replication as u64).to_le_bytes(),
            salt,
        ])
    };
    CellSeeds {
        split: derive(b"split"),
        pool: derive(b"pool"),
        selector: derive(b"selector"),
        adaboost: derive(b"adaboost"),
    }
}

/// The scaled partitions and shared pool of one cell.
pub struct CellContext {
    pub train: Dataset,
    pub meta_train: Dataset,
    pub dsel: Dataset,
    pub test: Dataset,
    pub pool: Pool,
    pub seeds: CellSeeds,
}

/// Split, scale, and grow the pool for one cell. Features are min-max scaled
/// with statistics from the training half (pool + meta partitions) only.
pub fn prepare_cell(
    ds: &Dataset,
    dataset_name: &str,
    replication: usize,
    params: &ProtocolParams,
    seed_base: u64,
) -> anyhow::Result<CellContext> {
    let seeds = cell_seeds(seed_base, dataset_name, replication);
    let splits = stratified_split(ds, &SplitSpec::with_seed(seeds.split))?;
    let scaler = MinMaxScaler::fit(&Dataset::concat(
        &[&splits.train, &splits.meta_train],
        "train-block",
    )?);
    let train = scaler.transform(&splits.train)?;
    let meta_train = scaler.transform(&splits.meta_train)?;
    let dsel = scaler.transform(&splits.dsel)?;
    let test = scaler.transform(&splits.test)?;
    let pool = bagging_generate(&train, params.pool_size, seeds.pool, params.perceptron())?;
    Ok(CellContext {
        train,
        meta_train,
        dsel,
        test,
        pool,
        seeds,
    })
}

fn evaluate_per_query<F>(test: &Dataset, select: F) -> (f64, f64)
where
    F: Fn(&[f64]) -> dynsel_core::Result<dynsel_core::baselines::Selection> + Sync,
{
    let outcomes: Vec<(bool, usize)> = (0..test.n_samples())
        .into_par_iter()
        .map(|i| {
            let sel = select(test.row(i)).expect("dsel sized for the region at construction");
            (sel.label == test.label(i), sel.members.len())
        })
        .collect();
    let correct = outcomes.iter().filter(|(ok, _)| *ok).count();
    let mean_size =
        outcomes.iter().map(|&(_, s)| s as f64).sum::<f64>() / outcomes.len() as f64;
    (correct as f64 / test.n_samples() as f64, mean_size)
}

fn evaluate_fixed_ensemble(pool: &Pool, members: &[usize], test: &Dataset) -> f64 {
    let correct = (0..test.n_samples())
        .into_par_iter()
        .filter(|&i| majority_vote(pool, members, test.row(i)).label == test.label(i))
        .count();
    correct as f64 / test.n_samples() as f64
}

/// Evaluate the requested techniques on a prepared cell. Technique failures
/// (for example a consensus filter that admits nothing) are reported and
/// skipped; the remaining techniques still produce records.
pub fn run_cell(
    ctx: &CellContext,
    dataset_name: &str,
    replication: usize,
    params: &ProtocolParams,
    techniques: &[Technique],
) -> CellResult {
    let pool = &ctx.pool;
    let test = &ctx.test;
    let needs_profiles = techniques
        .iter()
        .any(|t| matches!(t, Technique::Mcb | Technique::Knop));
    let profiles: Option<ProfileTable> =
        needs_profiles.then(|| build_profiles(&ctx.dsel, pool));
    let needs_static = techniques
        .iter()
        .any(|t| matches!(t, Technique::SingleBest | Technique::StaticSelection));
    let statics: Option<StaticBaselines> = needs_static.then(|| fit_static(pool, &ctx.dsel));

    let mut records = Vec::with_capacity(techniques.len());
    for &technique in techniques {
        let start = Instant::now();
        let outcome: anyhow::Result<(f64, f64)> = (|| {
            Ok(match technique {
                Technique::MetaDes => {
                    let model = metades::meta_train(
                        pool.clone(),
                        &ctx.meta_train,
                        ctx.dsel.clone(),
                        params.metades(),
                        MetaTrainConfig {
                            seed: ctx.seeds.selector,
                            ..Default::default()
                        },
                    )?;
                    let eval = model.evaluate(test);
                    (eval.accuracy, eval.mean_selected_size())
                }
                Technique::KnoraE => {
                    evaluate_per_query(test, |x| knora_e(pool, &ctx.dsel, x, params.k))
                }
                Technique::KnoraU => {
                    evaluate_per_query(test, |x| knora_u(pool, &ctx.dsel, x, params.k))
                }
                Technique::Ola => evaluate_per_query(test, |x| ola(pool, &ctx.dsel, x, params.k)),
                Technique::Lca => evaluate_per_query(test, |x| lca(pool, &ctx.dsel, x, params.k)),
                Technique::Mla => evaluate_per_query(test, |x| mla(pool, &ctx.dsel, x, params.k)),
                Technique::Mcb => {
                    let table = profiles.as_ref().expect("profiles built above");
                    evaluate_per_query(test, |x| {
                        mcb(pool, &ctx.dsel, table, x, params.k, params.mcb())
                    })
                }
                Technique::Knop => {
                    let table = profiles.as_ref().expect("profiles built above");
                    evaluate_per_query(test, |x| knop(pool, table, x, params.kp))
                }
                Technique::SingleBest => {
                    let s = statics.as_ref().expect("statics fitted above");
                    (classifier_accuracy(pool.get(s.single_best), test), 1.0)
                }
                Technique::Bagging => (bagging_vote_accuracy(pool, test), pool.len() as f64),
                Technique::StaticSelection => {
                    let s = statics.as_ref().expect("statics fitted above");
                    (
                        evaluate_fixed_ensemble(pool, &s.selected, test),
                        s.selected.len() as f64,
                    )
                }
                Technique::AdaBoost => {
                    let model = adaboost_train(
                        &ctx.train,
                        params.adaboost_rounds,
                        ctx.seeds.adaboost,
                        params.perceptron(),
                    )?;
                    (model.evaluate(test), model.len() as f64)
                }
                Technique::Oracle => (oracle_accuracy(pool, test), 0.0),
            })
        })();
        match outcome {
            Ok((accuracy, ensemble_size_mean)) => records.push(RunRecord {
                dataset: dataset_name.to_string(),
                technique: technique.name().to_string(),
                replication,
                accuracy,
                ensemble_size_mean,
                wall_time: start.elapsed().as_secs_f64(),
            }),
            Err(e) => {
                eprintln!(
                    "warning: {dataset_name} rep {replication} {technique}: {e}; cell skipped"
                );
            }
        }
    }
    CellResult {
        records,
        pool_fingerprint: pool.fingerprint(),
    }
}

pub const RECORDS_HEADER: &str =
    "dataset,technique,replication,accuracy,ensemble_size_mean,wall_time";

fn format_record(r: &RunRecord) -> String {
    format!(
        "{},{},{},{},{},{:.3}",
        r.dataset, r.technique, r.replication, r.accuracy, r.ensemble_size_mean, r.wall_time
    )
}

/// Parse a records.csv produced by [`run_protocol`].
pub fn read_records(path: impl AsRef<Path>) -> anyhow::Result<Vec<RunRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())?;
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        records.push(RunRecord {
            dataset: row[0].to_string(),
            technique: row[1].to_string(),
            replication: row[2].parse()?,
            accuracy: row[3].parse()?,
            ensemble_size_mean: row[4].parse()?,
            wall_time: row[5].parse()?,
        });
    }
    Ok(records)
}

/// Run the full protocol: every (dataset, replication) cell in order, all
/// techniques on the identical pool and test split, records appended to
/// `records.csv` as cells complete so interrupted runs resume where they
/// stopped.
pub fn run_protocol(cfg: &RunConfig, registry: &Registry) -> anyhow::Result<Vec<RunRecord>> {
    let techniques: Vec<Technique> = cfg
        .techniques
        .iter()
        .map(|t| t.parse())
        .collect::<dynsel_core::Result<_>>()?;

    std::fs::create_dir_all(&cfg.output_dir)?;
    let records_path = cfg.output_dir.join("records.csv");
    let mut done: HashSet<(String, String, usize)> = HashSet::new();
    let mut all_records = Vec::new();
    if records_path.exists() {
        for r in read_records(&records_path)? {
            done.insert((r.dataset.clone(), r.technique.clone(), r.replication));
            all_records.push(r);
        }
    } else {
        std::fs::write(&records_path, format!("{RECORDS_HEADER}\n"))?;
    }
    let mut file = std::fs::OpenOptions::new().append(true).open(&records_path)?;

    for name in &cfg.datasets {
        let ds = registry.resolve(name)?;
        for rep in 0..cfg.replications {
            let pending: Vec<Technique> = techniques
                .iter()
                .copied()
                .filter(|t| !done.contains(&(name.clone(), t.name().to_string(), rep)))
                .collect();
            if pending.is_empty() {
                continue;
            }
            let ctx = match prepare_cell(&ds, name, rep, &cfg.params, cfg.seed_base) {
                Ok(ctx) => ctx,
                Err(e) => {
                    eprintln!("warning: {name} rep {rep}: {e}; cell skipped");
                    continue;
                }
            };
            let cell = run_cell(&ctx, name, rep, &cfg.params, &pending);
            for r in &cell.records {
                writeln!(file, "{}", format_record(r))?;
            }
            file.flush()?;
            all_records.extend(cell.records);
        }
    }
    Ok(all_records)
}
