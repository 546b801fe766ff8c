mod args;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use fracdiag::attacks::AttackKind;
use fracdiag::dataset_io::{read_dataset, write_dataset};
use fracdiag::eval::{
    evaluate, metrics_csv, prepare_windows, run_ablation, sweep, sweep_csv, training_data, DEFAULT_ALPHAS,
    DEFAULT_LENGTHS,
};
use fracdiag::fracfeat::features_csv;
use fracdiag::model::HierModel;
use fracdiag::pmrat::{extract_all, train_ablation, Variant};
use fracdiag::signalgen::{generate_dataset, Window};

use args::{write_output, AttackArgs, ExperimentArgs, FeatureArgs, GridArgs, SplitArgs};

#[derive(Parser)]
#[command(name = "fracdiag", version, about = "Inverter fault diagnosis with fractional features and adversarial training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a balanced synthetic dataset (manifest JSON plus binary payload).
    Generate {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Write the un-normalized feature vector of every window as CSV.
    Extract {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        feature: FeatureArgs,
    },
    /// Train one variant on the training split; writes the model and the per-epoch log.
    Train {
        #[arg(long)]
        seed: u64,
        /// Dataset manifest. Without it a dataset is generated from the grid flags and `--seed`.
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long, default_value = "full")]
        variant: Variant,
        #[arg(long)]
        model_out: PathBuf,
        #[arg(long)]
        log_out: PathBuf,
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Score a model on the test split, clean or under attack.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// `none`, `bias`, `noise`, `replacement`, `replay` or `all`.
        #[arg(long, default_value = "all")]
        attack: String,
        #[arg(long)]
        json_out: Option<PathBuf>,
        #[arg(long)]
        csv_out: Option<PathBuf>,
        #[command(flatten)]
        split: SplitArgs,
        #[command(flatten)]
        attack_args: AttackArgs,
    },
    /// Train all three variants for each seed and write the variant × scenario grid.
    Ablate {
        #[arg(long, value_delimiter = ',', default_values_t = [0u64, 1, 2])]
        seeds: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Clean validation accuracy over an (α, L) grid.
    Sweep {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_ALPHAS)]
        alphas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LENGTHS)]
        lengths: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        exp: ExperimentArgs,
    },
}

fn load_windows(path: &Path) -> anyhow::Result<(fracdiag::signalgen::GridConfig, Vec<Window>)> {
    let ds = read_dataset(path).with_context(|| format!("reading dataset {}", path.display()))?;
    Ok((ds.manifest.config, ds.windows))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Generate { seed, out, grid } => {
            let ds = generate_dataset(&grid.config()?, grid.n_total, seed)?;
            write_dataset(&ds, &out)?;
            eprintln!("wrote {} windows to {}", ds.windows.len(), out.display());
        }
        Command::Extract { dataset, out, feature } => {
            let (_, windows) = load_windows(&dataset)?;
            let first = windows.first().context("dataset has no windows")?;
            let spec = feature.spec();
            let vs = extract_all(&windows, &spec.extractor(first.dt)?)?;
            let rows: Vec<_> = windows.iter().map(|w| w.label.flat_index()).zip(vs).collect();
            write_output(&out, &features_csv(&spec.names(), &rows))?;
        }
        Command::Train { seed, dataset, variant, model_out, log_out, exp } => {
            let mut cfg = exp.config(seed)?;
            let windows = match dataset {
                Some(path) => {
                    let (grid, windows) = load_windows(&path)?;
                    cfg.grid = grid;
                    windows
                }
                None => generate_dataset(&cfg.grid, cfg.n_total, seed)?.windows,
            };
            let p = prepare_windows(&cfg.grid, windows, &cfg.split)?;
            let data = training_data(&cfg, &p, variant.feature_kind())?;
            let (model, log) = train_ablation(variant, &data, &cfg.train)?;
            model.save(&model_out)?;
            write_output(&log_out, &log.to_csv())?;
            if let Some(last) = log.entries.last() {
                eprintln!("final clean validation accuracy {:.4}", last.val_acc);
            }
        }
        Command::Eval { model, dataset, attack, json_out, csv_out, split, attack_args } => {
            let model = HierModel::load(&model).with_context(|| format!("loading model {}", model.display()))?;
            let (grid, windows) = load_windows(&dataset)?;
            let p = prepare_windows(&grid, windows, &split.spec())?;
            let kinds: Vec<AttackKind> = if attack.eq_ignore_ascii_case("all") {
                AttackKind::CURRICULUM.to_vec()
            } else {
                vec![attack.parse()?]
            };
            let mut rows = Vec::new();
            for kind in kinds {
                let m = evaluate(&model, &p.test, &attack_args.spec(kind)?, &p.nominal, &p.archive)?;
                rows.push((kind.name().to_string(), m));
            }
            let csv = metrics_csv(&rows);
            if json_out.is_none() && csv_out.is_none() {
                print!("{csv}");
            }
            if let Some(path) = json_out {
                let obj: serde_json::Map<String, serde_json::Value> = rows
                    .iter()
                    .map(|(k, m)| Ok((k.clone(), serde_json::to_value(m)?)))
                    .collect::<anyhow::Result<_>>()?;
                write_output(&path, &serde_json::to_string_pretty(&obj)?)?;
            }
            if let Some(path) = csv_out {
                write_output(&path, &csv)?;
            }
        }
        Command::Ablate { seeds, out, exp } => {
            let base = exp.config(0)?;
            let (report, _) = run_ablation(&base, &seeds)?;
            write_output(&out, &report.to_csv())?;
        }
        Command::Sweep { seed, alphas, lengths, out, exp } => {
            let cfg = exp.config(seed)?;
            if alphas.is_empty() || lengths.is_empty() {
                bail!("sweep needs at least one alpha and one length");
            }
            let rows = sweep(&alphas, &lengths, &cfg)?;
            write_output(&out, &sweep_csv(&rows))?;
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
