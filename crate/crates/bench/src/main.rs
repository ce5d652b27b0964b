use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};

use dynsel_bench::config::RunConfig;
use dynsel_bench::protocol::{read_records, run_protocol};
use dynsel_bench::registry::Registry;
use dynsel_bench::report::{render_text, write_summary_csv};
use dynsel_bench::stats::kruskal_wallis;
use dynsel_bench::sweep::{render_sweep, sweep, SweepParam};

#[derive(Parser)]
#[command(
    name = "bench",
    about = "Benchmark harness for dynamic ensemble selection techniques"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the replication protocol from a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the dataset directory from the config.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Override the output directory from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep h_c or kp over its grid, scoring on the selection dataset.
    Sweep {
        /// Parameter to sweep: h_c or kp.
        #[arg(long)]
        param: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render summary tables from an existing records file.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-group Kruskal-Wallis comparison of two techniques.
    Significance {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        /// Restrict to one dataset; defaults to every dataset in the records.
        #[arg(long)]
        dataset: Option<String>,
    },
}

fn load_config(
    path: &PathBuf,
    data_dir: Option<PathBuf>,
    out: Option<PathBuf>,
) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::from_file(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    if let Some(dir) = data_dir {
        cfg.data_dir = dir;
    }
    if let Some(dir) = out {
        cfg.output_dir = dir;
    }
    Ok(cfg)
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            data_dir,
            out,
        } => {
            let cfg = load_config(&config, data_dir, out)?;
            let registry = Registry::open(&cfg.data_dir)?;
            let records = run_protocol(&cfg, &registry)?;
            let table = render_text(&records);
            std::fs::write(cfg.output_dir.join("summary.txt"), &table)?;
            write_summary_csv(&records, cfg.output_dir.join("summary.csv"))?;
            print!("{table}");
            println!(
                "{} records -> {}",
                records.len(),
                cfg.output_dir.join("records.csv").display()
            );
        }
        Command::Sweep {
            param,
            config,
            data_dir,
            out,
        } => {
            let cfg = load_config(&config, data_dir, out)?;
            let registry = Registry::open(&cfg.data_dir)?;
            let param: SweepParam = param.parse()?;
            let points = sweep(&cfg, &registry, param)?;
            let table = render_sweep(param, &points);
            std::fs::create_dir_all(&cfg.output_dir)?;
            std::fs::write(cfg.output_dir.join("sweep.txt"), &table)?;
            print!("{table}");
        }
        Command::Report { input, out } => {
            let records = read_records(&input)
                .with_context(|| format!("reading records {}", input.display()))?;
            let table = render_text(&records);
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("summary.txt"), &table)?;
                write_summary_csv(&records, dir.join("summary.csv"))?;
            }
            print!("{table}");
        }
        Command::Significance {
            input,
            a,
            b,
            dataset,
        } => {
            let records = read_records(&input)?;
            let datasets: Vec<String> = match dataset {
                Some(d) => vec![d],
                None => {
                    let mut seen = Vec::new();
                    for r in &records {
                        if !seen.contains(&r.dataset) {
                            seen.push(r.dataset.clone());
                        }
                    }
                    seen
                }
            };
            for ds in datasets {
                let pick = |tech: &str| {
                    let mut rows: Vec<(usize, f64)> = records
                        .iter()
                        .filter(|r| r.dataset == ds && r.technique == tech)
                        .map(|r| (r.replication, r.accuracy))
                        .collect();
                    rows.sort_by_key(|&(rep, _)| rep);
                    rows.into_iter().map(|(_, acc)| acc).collect::<Vec<f64>>()
                };
                let xa = pick(&a);
                let xb = pick(&b);
                if xa.is_empty() || xb.is_empty() {
                    println!("{ds}: no records for {a} or {b}");
                    continue;
                }
                let r = kruskal_wallis(&xa, &xb)?;
                println!(
                    "{ds}: {a} vs {b}: H = {:.6}, p = {:.6} -> {}",
                    r.h,
                    r.p,
                    if r.significant {
                        "significant at 95%"
                    } else {
                        "not significant"
                    }
                );
            }
        }
    }
    Ok(())
}
