//! Parameter sweeps for the consensus threshold and the profile-neighborhood
//! size, evaluated on the selection dataset the way the tuning protocol
//! prescribes.

use dynsel_core::metades;
use dynsel_core::{MetaDesParams, MetaTrainConfig};

use crate::config::RunConfig;
use crate::protocol::prepare_cell;
use crate::registry::Registry;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    ConsensusThreshold,
    ProfileNeighbors,
}

impl std::str::FromStr for SweepParam {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "h_c" | "hc" => Ok(SweepParam::ConsensusThreshold),
            "kp" | "k_p" => Ok(SweepParam::ProfileNeighbors),
            other => anyhow::bail!("unknown sweep parameter {other:?}; expected h_c or kp"),
        }
    }
}

impl SweepParam {
    /// The evaluation grid: 50%..100% in 10-point steps for the threshold,
    /// 1..=10 for the neighborhood size.
    pub fn grid(&self) -> Vec<f64> {
        match self {
            SweepParam::ConsensusThreshold => vec![0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
            SweepParam::ProfileNeighbors => (1..=10).map(|k| k as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    pub value: f64,
    pub mean: f64,
    pub std: f64,
    /// Cells that produced an accuracy.
    pub n: usize,
    /// Cells that failed (for example, a threshold admitting no samples).
    pub failures: usize,
}

/// Sweep one parameter over its grid. Per (dataset, replication) cell the
/// split and pool are built once; each grid value re-trains the selector and
/// scores it on the selection dataset.
pub fn sweep(
    cfg: &RunConfig,
    registry: &Registry,
    param: SweepParam,
) -> anyhow::Result<Vec<SweepPoint>> {
    let grid = param.grid();
    let mut accs: Vec<Vec<f64>> = vec![Vec::new(); grid.len()];
    let mut failures = vec![0usize; grid.len()];

    for name in &cfg.datasets {
        let ds = registry.resolve(name)?;
        for rep in 0..cfg.replications {
            let ctx = prepare_cell(&ds, name, rep, &cfg.params, cfg.seed_base)?;
            for (slot, &value) in grid.iter().enumerate() {
                let mut params: MetaDesParams = cfg.params.metades();
                match param {
                    SweepParam::ConsensusThreshold => params.h_c = value,
                    SweepParam::ProfileNeighbors => params.kp = value as usize,
                }
                let trained = metades::meta_train(
                    ctx.pool.clone(),
                    &ctx.meta_train,
                    ctx.dsel.clone(),
                    params,
                    MetaTrainConfig {
                        seed: ctx.seeds.selector,
                        ..Default::default()
                    },
                );
                match trained {
                    Ok(model) => accs[slot].push(model.evaluate(&ctx.dsel).accuracy),
                    Err(e) => {
                        failures[slot] += 1;
                        eprintln!(
                            "warning: sweep {name} rep {rep} value {value}: {e}"
                        );
                    }
                }
            }
        }
    }

    Ok(grid
        .iter()
        .enumerate()
        .map(|(slot, &value)| {
            let xs = &accs[slot];
            let n = xs.len();
            let mean = if n > 0 {
                xs.iter().sum::<f64>() / n as f64
            } else {
                f64::NAN
            };
            let std = if n > 1 {
                (xs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            SweepPoint {
                value,
                mean,
                std,
                n,
                failures: failures[slot],
            }
        })
        .collect())
}

pub fn render_sweep(param: SweepParam, points: &[SweepPoint]) -> String {
    let label = match param {
        SweepParam::ConsensusThreshold => "h_c",
        SweepParam::ProfileNeighbors => "kp",
    };
    let mut out = format!("{label:>6}  {:>14}  {:>5}  {:>8}\n", "mean(std) %", "n", "failures");
    for p in points {
        if p.n == 0 {
            out.push_str(&format!(
                "{:>6}  {:>14}  {:>5}  {:>8}\n",
                p.value, "-", 0, p.failures
            ));
        } else {
            out.push_str(&format!(
                "{:>6}  {:>14}  {:>5}  {:>8}\n",
                p.value,
                format!("{:.2}({:.2})", p.mean * 100.0, p.std * 100.0),
                p.n,
                p.failures
            ));
        }
    }
    out
}
