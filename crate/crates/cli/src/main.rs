use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use nca_core::analysis::{analyze_lineage, StallConfig};
use nca_core::config::RunConfig;
use nca_core::dynamics::{rollout_frames, UpdateKind};
use nca_core::io::{self, CheckpointMeta};
use nca_core::lineage::run_lineage;
use nca_core::sprites::{Builtin, DEFAULT_SPRITE_SIDE};
use nca_core::training::gradcheck::{self, GradCheckConfig};
use nca_core::training::Trainer;
use nca_core::{Error, RngStream};

#[derive(Parser, Debug)]
#[command(name = "nca", version, about = "Train self-replicating neural cellular automata and study their lineages")]
struct Cli {
    /// Override the seed of the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the update mode.
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    /// Directory for all outputs.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Sync,
    Async,
}

impl From<Mode> for UpdateKind {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Sync => UpdateKind::Synchronous,
            Mode::Async => UpdateKind::Asynchronous,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train an update network on the targets of a run config.
    Train { config: PathBuf },
    /// Grow a lineage of generations from a trained checkpoint.
    Lineage { checkpoint: PathBuf, config: PathBuf },
    /// Drift and correlation statistics of a lineage directory.
    Analyze {
        lineage_dir: PathBuf,
        #[arg(long, default_value_t = StallConfig::default().window)]
        stall_window: usize,
        #[arg(long, default_value_t = StallConfig::default().threshold)]
        stall_threshold: f64,
    },
    /// Render a snapshot, a lineage directory, or a checkpoint rollout to PNG.
    Render {
        input: PathBuf,
        out: PathBuf,
        /// Run config, needed when rendering a checkpoint rollout.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Which target's starting grid to roll out from.
        #[arg(long, default_value_t = 0)]
        target: usize,
        /// Rollout length; defaults to the config's rollout steps.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value_t = 4)]
        upscale: u32,
    },
    /// Compare analytic gradients with finite differences.
    Gradcheck { config: Option<PathBuf> },
    /// Write the built-in sprites as PNG files.
    Sprites {
        dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SPRITE_SIDE)]
        side: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let args: Vec<String> = std::env::args().collect();
    let out = |default: &str| cli.out_dir.clone().unwrap_or_else(|| PathBuf::from(default));
    match &cli.command {
        Command::Train { config } => {
            let cfg = load_config(config, &cli)?;
            train(&cfg, &out("out/train"), &args)
        }
        Command::Lineage { checkpoint, config } => {
            let cfg = load_config(config, &cli)?;
            lineage(&cfg, checkpoint, &out("out/lineage"), &args)
        }
        Command::Analyze {
            lineage_dir,
            stall_window,
            stall_threshold,
        } => {
            let dir = cli.out_dir.clone().unwrap_or_else(|| lineage_dir.join("analysis"));
            let stall = StallConfig {
                window: *stall_window,
                threshold: *stall_threshold,
            };
            analyze(lineage_dir, &dir, stall, &args)
        }
        Command::Render {
            input,
            out,
            config,
            target,
            steps,
            upscale,
        } => render(input, out, config.as_deref(), *target, *steps, *upscale, &cli),
        Command::Gradcheck { config } => gradcheck_cmd(config.as_deref(), &cli, &out("out/gradcheck"), &args),
        Command::Sprites { dir, side } => {
            for b in Builtin::ALL {
                let path = dir.join(format!("{}.png", b.name()));
                io::save_target_png(&b.draw(*side)?, &path)?;
                println!("{}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load_config(path: &Path, cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    cfg.override_with(cli.seed, cli.mode.map(Into::into))?;
    Ok(cfg)
}

/// The manifest is a loadable config; the command line goes in comments.
fn write_manifest(dir: &Path, args: &[String], body: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let text = format!(
        "# nca {}\n# command: {}\n{body}",
        env!("CARGO_PKG_VERSION"),
        args.join(" ")
    );
    let path = dir.join("manifest.toml");
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn train(cfg: &RunConfig, out: &Path, args: &[String]) -> Result<ExitCode> {
    let targets = cfg.build_targets()?;
    write_manifest(out, args, &cfg.to_toml())?;
    let shape = cfg.shape()?;
    let meta = |step: usize| CheckpointMeta {
        grid_height: shape.height as u32,
        grid_width: shape.width as u32,
        training_step: step as u64,
        seed: cfg.training.seed,
    };
    let mut trainer = Trainer::new(cfg.training.clone(), targets)?;
    let log_every = cfg.output.log_every.max(1);
    let ckpt_every = cfg.output.checkpoint_every;
    let mut save_error = None;
    let result = trainer.run(|rec, net| {
        if rec.training_step % log_every == 0 {
            println!(
                "step {} target {} loss {:.6}",
                rec.training_step,
                rec.target_index,
                rec.mean()
            );
        }
        let done = rec.training_step + 1;
        if ckpt_every > 0 && done % ckpt_every == 0 && save_error.is_none() {
            let p = out.join("checkpoints").join(format!("step_{done:06}.ncaw"));
            if let Err(e) = io::save_checkpoint(net, &meta(done), p) {
                save_error = Some(e);
            }
        }
    });
    if let Some(e) = save_error {
        return Err(e.into());
    }
    io::write_loss_csv(trainer.history(), out.join("loss.csv"))?;
    match result {
        Ok(()) => {}
        Err(Error::TrainingDiverged { step, reason, last_good }) => {
            let p = out.join("last_good.ncaw");
            io::save_checkpoint(&last_good, &meta(step), &p)?;
            bail!("training diverged at step {step} ({reason}); last good parameters in {}", p.display());
        }
        Err(e) => return Err(e.into()),
    }
    let path = out.join("checkpoint.ncaw");
    io::save_checkpoint(trainer.network(), &meta(trainer.current_step()), &path)?;
    // One rollout per phase for a quick look at the result.
    let mut rng = RngStream::with_stream(cfg.training.seed, u64::MAX);
    for t in trainer.targets() {
        let frames = rollout_frames(&t.initial, trainer.network(), cfg.training.rollout_steps, &cfg.training.mode, &mut rng);
        io::save_grid_png(frames.last().unwrap(), out.join("renders").join(format!("{}.png", t.label)), cfg.output.upscale)?;
    }
    if let Some(c) = nca_core::training::ConvergenceReport::from_history(
        trainer.history(),
        (trainer.history().len() / 10).max(1),
        (trainer.history().len() / 2).max(1),
    ) {
        println!(
            "loss early {:.6} late {:.6} ratio {:.4}",
            c.head_mean, c.tail_mean, c.ratio
        );
    }
    println!("checkpoint {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn lineage(cfg: &RunConfig, checkpoint: &Path, out: &Path, args: &[String]) -> Result<ExitCode> {
    let (net, _) = io::load_checkpoint_for(checkpoint, cfg.training.hidden_size)?;
    let lcfg = cfg.lineage_config()?;
    let founder = cfg.founder_dna()?;
    let body = format!("# checkpoint: {}\n{}", checkpoint.display(), cfg.to_toml());
    write_manifest(out, args, &body)?;
    let records = run_lineage(&net, &founder, &lcfg)?;
    io::save_lineage(&records, out, Some(cfg.output.upscale))?;
    let last = records.last().expect("founder is always recorded");
    if last.viable {
        println!("lineage complete: {} generations", records.len());
    } else {
        println!(
            "lineage went extinct at generation {} ({} records)",
            last.generation,
            records.len()
        );
    }
    println!("written to {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn analyze(lineage_dir: &Path, out: &Path, stall: StallConfig, args: &[String]) -> Result<ExitCode> {
    let records = io::load_lineage(lineage_dir)?;
    let a = analyze_lineage(&records, stall)?;
    let body = format!(
        "# lineage: {}\n[analysis]\nstall_window = {}\nstall_threshold = {:?}\n",
        lineage_dir.display(),
        stall.window,
        stall.threshold
    );
    write_manifest(out, args, &body)?;
    io::write_drift_matrix_csv(&a.dna, out.join("dna_drift_matrix.csv"))?;
    io::write_drift_curve_csv(&a.dna_curve, out.join("dna_drift_curve.csv"))?;
    io::write_drift_matrix_csv(&a.phenotype, out.join("phenotype_drift_matrix.csv"))?;
    io::write_drift_curve_csv(&a.phenotype_curve, out.join("phenotype_drift_curve.csv"))?;
    io::write_correlation_csv(&a.correlation, out.join("correlation.csv"))?;
    io::render_heatmap(&a.dna, out.join("dna_heatmap.png"), 4)?;
    io::render_heatmap(&a.phenotype, out.join("phenotype_heatmap.png"), 4)?;
    let report = io::fit_report(&a);
    fs::write(out.join("fit_report.txt"), &report).with_context(|| format!("writing into {}", out.display()))?;
    print!("{report}");
    Ok(ExitCode::SUCCESS)
}

fn render(
    input: &Path,
    out: &Path,
    config: Option<&Path>,
    target: usize,
    steps: Option<usize>,
    upscale: u32,
    cli: &Cli,
) -> Result<ExitCode> {
    if input.is_dir() {
        let records = io::load_lineage(input)?;
        let grids: Vec<_> = records.into_iter().map(|r| r.phenotype).collect();
        let paths = io::render_frames(&grids, out, "gen", upscale)?;
        println!("{} frames in {}", paths.len(), out.display());
        return Ok(ExitCode::SUCCESS);
    }
    match input.extension().and_then(|e| e.to_str()) {
        Some("ncas") => {
            io::save_grid_png(&io::load_grid(input)?, out, upscale)?;
            println!("{}", out.display());
        }
        Some("ncaw") => {
            let Some(config) = config else {
                bail!("rendering a checkpoint needs --config to know the starting grid");
            };
            let cfg = load_config(config, cli)?;
            let (net, _) = io::load_checkpoint_for(input, cfg.training.hidden_size)?;
            let targets = cfg.build_targets()?;
            let Some(t) = targets.get(target) else {
                bail!("config has {} targets, asked for {target}", targets.len());
            };
            let n = steps.unwrap_or(cfg.training.rollout_steps);
            let mut rng = RngStream::with_stream(cfg.training.seed, u64::MAX);
            let frames = rollout_frames(&t.initial, &net, n, &cfg.training.mode, &mut rng);
            // Frame k is the grid after step k + 1.
            let paths = io::render_frames(&frames[1..], out, "step", upscale)?;
            println!("{} frames in {}", paths.len(), out.display());
        }
        _ => bail!(
            "{}: expected a lineage directory, a .ncas snapshot or a .ncaw checkpoint",
            input.display()
        ),
    }
    Ok(ExitCode::SUCCESS)
}

fn gradcheck_cmd(config: Option<&Path>, cli: &Cli, out: &Path, args: &[String]) -> Result<ExitCode> {
    let mut cfg = match config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str::<GradCheckConfig>(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => GradCheckConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(m) = cli.mode {
        cfg.mode.kind = m.into();
        if cfg.mode.kind == UpdateKind::Synchronous {
            cfg.mode.async_rate = 1.0;
        }
    }
    write_manifest(out, args, &toml::to_string(&cfg)?)?;
    let report = gradcheck::run(&cfg)?;
    println!(
        "instances {} max relative error {:.3e} worst fraction within {:.0e}: {:.4}",
        report.instances.len(),
        report.max_rel_error(),
        cfg.tolerance,
        report.worst_fraction()
    );
    if report.passed() {
        println!("PASS");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("FAIL");
        Ok(ExitCode::FAILURE)
    }
}
