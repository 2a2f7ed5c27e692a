//! Command-line entry point.
//!
//! Exit codes: 0 ok, 2 configuration error, 3 split infeasible,
//! 4 numeric failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cvnn_core::polsar::{generate_scene, read_scene, write_scene, SceneRecipe};
use cvnn_core::sampling::{
    balance_patches, occurrence_csv, sliding_window, spatial_split, ChannelField,
    OccurrenceTable,
};
use cvnn_core::Error;
use cvnn_harness::config::ExperimentConfig;
use cvnn_harness::grid::{compare_grid, table_csv, GridCell};
use cvnn_harness::run_experiment;

#[derive(Parser)]
#[command(name = "cvnn", about = "Complex-valued networks on PolSAR scenes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's trial count.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Run every *.json config in a directory and emit a comparison table.
    Grid {
        #[arg(long)]
        configs: PathBuf,
        #[arg(long, default_value = "grid-out")]
        out: PathBuf,
    },
    /// Generate a synthetic scene from a recipe file.
    Genscene {
        #[arg(long)]
        recipe: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the default synthetic recipe as a starting point.
    Recipe {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 256)]
        height: usize,
        #[arg(long, default_value_t = 256)]
        width: usize,
        #[arg(long, default_value_t = 1234)]
        seed: u64,
    },
    /// Occurrence tables before/after patch balancing on a scene.
    BalanceReport {
        #[arg(long)]
        scene: PathBuf,
        /// split: balance the 70% train strip; random: the whole scene.
        #[arg(long, default_value = "split")]
        mode: String,
        #[arg(long, default_value_t = 128)]
        patch: usize,
        #[arg(long, default_value_t = 25)]
        stride: usize,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::SplitInfeasible { .. }) => 3,
        Some(Error::Numeric(_)) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            trials,
        } => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            let agg = run_experiment(&cfg, &out)?;
            println!(
                "OA {} +- {}  AA {} +- {}  ({} trials) -> {}",
                agg.overall_accuracy.mean,
                agg.overall_accuracy.half_width_95,
                agg.average_accuracy.mean,
                agg.average_accuracy.half_width_95,
                agg.trials,
                out.display()
            );
            Ok(())
        }
        Command::Grid { configs, out } => {
            let mut entries: Vec<(String, PathBuf)> = std::fs::read_dir(&configs)?
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .map(|p| {
                    (
                        p.file_stem().unwrap().to_string_lossy().into_owned(),
                        p.clone(),
                    )
                })
                .collect();
            entries.sort();
            let mut cells = Vec::new();
            for (name, path) in entries {
                let cfg = ExperimentConfig::from_file(&path)?;
                let cell_out = out.join(&name);
                let agg = run_experiment(&cfg, &cell_out)?;
                println!("{name}: OA {}", agg.overall_accuracy.mean);
                cells.push(GridCell {
                    name,
                    family: cfg.family,
                    domain: cfg.domain,
                    representation: cfg.representation,
                    aggregate: agg,
                });
            }
            let table = compare_grid(&cells)?;
            std::fs::create_dir_all(&out)?;
            std::fs::write(
                out.join("grid.json"),
                serde_json::to_string_pretty(&table)? + "\n",
            )?;
            std::fs::write(out.join("grid.csv"), table_csv(&table))?;
            println!("table -> {}", out.join("grid.csv").display());
            Ok(())
        }
        Command::Genscene { recipe, out } => {
            let text = std::fs::read_to_string(&recipe)?;
            let recipe: SceneRecipe = serde_json::from_str(&text)
                .map_err(|e| Error::Recipe(format!("{}: {e}", recipe.display())))?;
            let field = generate_scene(&recipe)?;
            write_scene(&field, &out)?;
            println!(
                "{}x{} scene with {} classes -> {}",
                field.height(),
                field.width(),
                field.classes(),
                out.display()
            );
            Ok(())
        }
        Command::Recipe {
            out,
            height,
            width,
            seed,
        } => {
            let recipe = SceneRecipe::default_synthetic(height, width, seed);
            std::fs::write(&out, serde_json::to_string_pretty(&recipe)? + "\n")?;
            println!("recipe -> {}", out.display());
            Ok(())
        }
        Command::BalanceReport {
            scene,
            mode,
            patch,
            stride,
            out,
            seed,
        } => {
            let field = read_scene(&scene)?;
            let target = match mode.as_str() {
                "split" => spatial_split(&field, (0.70, 0.15, 0.15))?.0,
                "random" => field.clone(),
                other => {
                    return Err(Error::Contract(format!(
                        "mode must be 'split' or 'random', got {other:?}"
                    ))
                    .into())
                }
            };
            // Balancing only reads labels; lightweight one-channel inputs.
            let ch = ChannelField::new(
                cvnn_core::grad::Value::R(cvnn_core::ctensor::RealTensor::zeros(&[
                    target.height(),
                    target.width(),
                    1,
                ])),
                target.labels().to_vec(),
                target.classes(),
            )?;
            let set = sliding_window(&ch, patch, stride)?;
            let before = OccurrenceTable::from_patch_set(&set);
            let (_, report) = balance_patches(set, seed);
            let mut text = String::from("# before balancing\n");
            text.push_str(&occurrence_csv(&before, field.class_names()));
            text.push_str("# after balancing\n");
            text.push_str(&occurrence_csv(&report.after, field.class_names()));
            match out {
                Some(p) => std::fs::write(&p, text)?,
                None => print!("{text}"),
            }
            Ok(())
        }
    }
}
