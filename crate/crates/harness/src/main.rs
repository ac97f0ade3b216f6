use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use harness::{
    ensemble_predict, load_dataset, parse_modes, run_experiment, run_gradient_suite, run_matrix,
    ExperimentConfig, MetricsReport,
};
use std::path::PathBuf;
use synthbench::{
    dump_tensor, generate_manifest, materialize, write_manifest, NoisePreset, RenderConfig,
    Vocabulary,
};
use track_model::write_track_file;

#[derive(Parser)]
#[command(
    name = "mgaf-cli",
    about = "Dual-pathway interaction recognition with motion-guided attention fusion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Experiment config file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Inline overrides, e.g. `--set optim.lr=0.1` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        for assignment in &self.sets {
            let Some((key, value)) = assignment.split_once('=') else {
                bail!("--set expects KEY=VALUE, got '{assignment}'");
            };
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset on disk: manifest, track files, and
    /// optionally raw video tensors.
    Gen {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 40)]
        train_per_pair: usize,
        #[arg(long, default_value_t = 20)]
        test_per_pair: usize,
        #[arg(long, default_value_t = 32)]
        frames: usize,
        #[arg(long, default_value_t = 32)]
        size: usize,
        /// Also write jittered tracks as `noisy_tracks.txt` (sigma, p_drop).
        #[arg(long, value_name = "SIGMA,P_DROP")]
        noise: Option<String>,
        /// Dump each clip as `videos/<id>.bin` (rank + extents + f64 values).
        #[arg(long)]
        dump_videos: bool,
    },
    /// Train one experiment.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory (overrides `out_dir` from the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on the configured dataset.
    Eval {
        /// Checkpoint to load.
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run the fusion-mode ablation grid.
    Matrix {
        /// Comma-separated mode list, e.g. `a,a+m,o,a+mgaf(m,o)`.
        #[arg(long)]
        modes: String,
        /// Comma-separated seeds.
        #[arg(long, default_value = "1,2,3")]
        seeds: String,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Average several checkpoints' predictions on one dataset.
    Ensemble {
        /// Comma-separated checkpoint paths.
        #[arg(long)]
        checkpoints: String,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run the finite-difference gradient verification suite.
    Gradcheck,
}

fn print_report(report: &MetricsReport) {
    println!("top1 {}", report.top1);
    println!("top5 {}", report.top5);
    println!("micro {}", report.micro);
    println!("macro_recall {}", report.macro_recall);
    println!("param_count {}", report.param_count);
    println!("wall_clock_secs {:.3}", report.wall_clock_secs);
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen(
    out: PathBuf,
    gen_seed: u64,
    train_per_pair: usize,
    test_per_pair: usize,
    frames: usize,
    size: usize,
    noise: Option<String>,
    dump_videos: bool,
) -> anyhow::Result<()> {
    let vocab = Vocabulary::default();
    let render = RenderConfig { frames, size };
    let noise = match noise {
        Some(spec) => {
            let (sigma, drop) = spec
                .split_once(',')
                .with_context(|| format!("--noise expects SIGMA,P_DROP, got '{spec}'"))?;
            Some(NoisePreset {
                sigma_pos: sigma.trim().parse()?,
                p_drop: drop.trim().parse()?,
            })
        }
        None => None,
    };
    let (_, manifest) = generate_manifest(&vocab, gen_seed, train_per_pair, test_per_pair)?;
    std::fs::create_dir_all(&out)?;
    write_manifest(&out.join("manifest.txt"), &vocab, &manifest)?;

    let mut clean = Vec::new();
    let mut noisy = Vec::new();
    let videos_dir = out.join("videos");
    if dump_videos {
        std::fs::create_dir_all(&videos_dir)?;
    }
    for entry in &manifest.entries {
        let sample = materialize(&vocab, &render, entry, noise)?;
        for det in &sample.tracks {
            clean.push((entry.sample_id.clone(), det.clone()));
        }
        if let Some(nt) = &sample.noisy_tracks {
            for det in nt {
                noisy.push((entry.sample_id.clone(), det.clone()));
            }
        }
        if dump_videos {
            dump_tensor(
                &videos_dir.join(format!("{}.bin", entry.sample_id)),
                &sample.video,
            )?;
        }
    }
    write_track_file(&out.join("tracks.txt"), &clean)?;
    if noise.is_some() {
        write_track_file(&out.join("noisy_tracks.txt"), &noisy)?;
    }
    println!(
        "wrote {} samples to {}",
        manifest.entries.len(),
        out.display()
    );
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Gen {
            out,
            seed,
            train_per_pair,
            test_per_pair,
            frames,
            size,
            noise,
            dump_videos,
        } => cmd_gen(
            out,
            seed,
            train_per_pair,
            test_per_pair,
            frames,
            size,
            noise,
            dump_videos,
        ),
        Command::Train { config, out } => {
            let mut cfg = config.resolve()?;
            if let Some(dir) = out {
                cfg.out_dir = Some(dir);
            }
            let report = run_experiment(&cfg)?;
            print_report(&report);
            Ok(())
        }
        Command::Eval { checkpoint, config } => {
            let overrides = config.resolve()?;
            let raw = harness::read_checkpoint(&checkpoint)?;
            let mut cfg = raw.config;
            // Dataset and precision come from the caller; the architecture
            // stays the checkpoint's.
            cfg.dataset = overrides.dataset.clone();
            cfg.precision = overrides.precision;
            let model = harness::load_model::<f64>(&checkpoint)?.1;
            let data = load_dataset::<f64>(&cfg)?;
            let mut report = harness::evaluate(&model, &data.eval)?;
            report.param_count = model.store.total_parameters();
            print_report(&report);
            Ok(())
        }
        Command::Matrix {
            modes,
            seeds,
            config,
            out,
        } => {
            let mut cfg = config.resolve()?;
            if let Some(dir) = out {
                cfg.out_dir = Some(dir);
            }
            let modes = parse_modes(&modes)?;
            let seeds: Vec<u64> = seeds
                .split(',')
                .map(|s| s.trim().parse::<u64>())
                .collect::<Result<_, _>>()
                .context("bad --seeds list")?;
            let result = run_matrix(&cfg, &modes, &seeds)?;
            print!("{}", result.table_csv);
            Ok(())
        }
        Command::Ensemble {
            checkpoints,
            config,
        } => {
            let cfg = config.resolve()?;
            let paths: Vec<PathBuf> = checkpoints
                .split(',')
                .map(|p| PathBuf::from(p.trim()))
                .collect();
            let path_refs: Vec<&std::path::Path> = paths.iter().map(|p| p.as_path()).collect();
            let report = ensemble_predict(&path_refs, &cfg)?;
            print_report(&report);
            Ok(())
        }
        Command::Gradcheck => {
            let outcomes = run_gradient_suite()?;
            let mut all_ok = true;
            for outcome in &outcomes {
                let status = if outcome.passed() { "PASS" } else { "FAIL" };
                println!(
                    "GRADCHECK {:<28} max_rel_err={:.3e} coords={} {}",
                    outcome.name,
                    outcome.report.max_rel_err,
                    outcome.report.coords_checked,
                    status
                );
                all_ok &= outcome.passed();
            }
            if !all_ok {
                bail!("gradient verification failed");
            }
            Ok(())
        }
    }
}
