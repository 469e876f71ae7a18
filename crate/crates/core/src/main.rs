use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use gsep::frames::{build_gabor_frame, build_shearlet_frame, build_wavelet_frame};
use gsep::grid::{Grid, Image, StripMask};
use gsep::io::{encode_pgm, encode_raw, write_atomic};
use gsep::pipeline::{self, coherence_csv, ExperimentConfig, ImageFormat, ScaleDiagnostics};
use gsep::solver::{solve, Mode, SeparationProblem, SolverOptions};
use gsep::windows::GaborWindow;
use gsep::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "gsep", version, about = "Multiscale separation and inpainting of points, curves and texture")]
struct Cli {
    /// Experiment config (flat key = value file)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Image format of the artifacts
    #[arg(long, global = true, value_enum, default_value_t = Format::Raw)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Raw,
    Pgm,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the phantom components
    Gen,
    /// Run the separation experiment
    Separate {
        /// Read the components written by `gen` instead of generating them
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Cluster coherence and certificate tables only
    Coherence,
    /// Time transforms and one solver run
    Bench {
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        iters: usize,
    },
    /// List the config keys
    Keys,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required for this command".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
        cfg.solver.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = Some(o.clone());
    }
    Ok(cfg)
}

fn image_format(f: Format) -> ImageFormat {
    match f {
        Format::Csv => ImageFormat::Csv,
        Format::Raw => ImageFormat::Raw,
        Format::Pgm => ImageFormat::Pgm,
    }
}

fn write_image(dir: &Path, name: &str, img: &Image, format: Format) -> Result<()> {
    match format {
        Format::Csv => Ok(()),
        Format::Raw => write_atomic(&dir.join(format!("{name}.raw")), &encode_raw(img, 0)),
        Format::Pgm => write_atomic(&dir.join(format!("{name}.pgm")), &encode_pgm(img)),
    }
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Keys => {
            for (k, doc) in pipeline::KEYS {
                println!("{k:<24}{doc}");
            }
            Ok(())
        }
        Command::Gen => {
            let cfg = load_config(&cli)?;
            let dir = cfg.out_dir.clone().ok_or_else(|| Error::Config("gen needs --out or out_dir".into()))?;
            let ph = pipeline::generate(&cfg)?;
            ph.write(&dir)?;
            if cli.format == Format::Pgm {
                for (c, img) in &ph.images {
                    write_image(&dir, c.name(), img, Format::Pgm)?;
                }
            }
            write_atomic(&dir.join("config.txt"), cfg.to_text().as_bytes())?;
            println!("wrote {} components to {}", ph.images.len(), dir.display());
            Ok(())
        }
        Command::Separate { input } => {
            let mut cfg = load_config(&cli)?;
            let dir = cfg.out_dir.take();
            let mut ph = pipeline::generate(&cfg)?;
            if let Some(input) = input {
                ph.load_images(input)?;
            }
            let report = pipeline::run_with(&cfg, ph)?;
            if let Some(dir) = &dir {
                report.write(dir, image_format(cli.format))?;
            }
            print!("{}", report.errors_csv());
            pipeline::ensure_complete(&report)
        }
        Command::Coherence => {
            let cfg = load_config(&cli)?;
            let diags = pipeline::run_coherence(&cfg)?;
            let refs: Vec<&ScaleDiagnostics> = diags.iter().collect();
            let csv = coherence_csv(&cfg.components, &refs);
            if let Some(dir) = &cfg.out_dir {
                std::fs::create_dir_all(dir)?;
                write_atomic(&dir.join("coherence.csv"), csv.as_bytes())?;
            }
            print!("{csv}");
            Ok(())
        }
        Command::Bench { n, iters } => bench(*n, *iters),
    }
}

fn bench(n: usize, iters: usize) -> Result<()> {
    let grid = Grid::new(n)?;
    let img = Image::from_fn(grid, |r, c| gsep::Complex64::new(((r * 7 + c * 13) % 17) as f64 - 8.0, 0.0));
    let frames = [
        ("wavelet", build_wavelet_frame(grid, grid.j_max())?),
        ("shearlet", build_shearlet_frame(grid, grid.j_max())?),
        ("gabor", build_gabor_frame(grid, None, GaborWindow::Meyer)?),
    ];
    println!("op,n,atoms,ms");
    for (name, f) in &frames {
        let t = Instant::now();
        let c = f.analyze(&img)?;
        let ta = t.elapsed().as_secs_f64() * 1e3;
        let t = Instant::now();
        f.synthesize(&c)?;
        let ts = t.elapsed().as_secs_f64() * 1e3;
        println!("analyze_{name},{n},{},{ta:.2}", f.len());
        println!("synthesize_{name},{n},{},{ts:.2}", f.len());
    }
    let mask = StripMask::new(grid, n as f64 / 32.0)?;
    let options = SolverOptions { max_iters: iters, tol: 0.0, frame_bound: Some(1.0), ..Default::default() };
    let problem = SeparationProblem::new(img, mask, frames.iter().map(|f| &f.1).collect(), Mode::Constrained, options)?;
    let t = Instant::now();
    let r = solve(&problem)?;
    println!("solve_{}_iters,{n},-,{:.2}", r.iterations, t.elapsed().as_secs_f64() * 1e3);
    Ok(())
}
