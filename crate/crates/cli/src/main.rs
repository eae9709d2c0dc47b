use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use penum::curvature::{self, Model, PatchCostTable};
use penum::deconv::DeconvProblem;
use penum::report::{trace_csv, RunReport};
use penum::trws::{run, Algorithm, SolveResult, SolverOptions};
use penum::{synth, Error, GridImage, Result};

#[derive(Parser)]
#[command(name = "penum", version, about = "High-order binary labeling by partial enumeration and TRW-S")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    #[value(name = "2x2")]
    Two,
    #[value(name = "3x3")]
    Three,
    #[value(name = "5x5")]
    Five,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Two => Model::TwoByTwo,
            ModelArg::Three => Model::ThreeByThree,
            ModelArg::Five => Model::FiveByFive,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CostModelArg {
    #[value(name = "3x3")]
    Three,
    #[value(name = "5x5")]
    Five,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Trws,
    Lbp,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kernel {
    Mean3,
}

#[derive(clap::Args)]
struct SolveArgs {
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Trws)]
    algorithm: AlgorithmArg,
    /// Report file (key: value lines).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Per-iteration trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Curvature-regularised binary segmentation of a PGM image.
    Segment {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long, value_enum, default_value_t = ModelArg::Two)]
        model: ModelArg,
        /// Cost table to load instead of generating one.
        #[arg(long)]
        costs: Option<PathBuf>,
        /// Seed for generated cost tables.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        window_side: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        mu_fg: f64,
        #[arg(long, default_value_t = 0.0)]
        mu_bg: f64,
        /// Output segmentation (PBM).
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Binary deconvolution of a blurred PGM image.
    Deconv {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Kernel::Mean3)]
        kernel: Kernel,
        /// Ground-truth image whose data cost is added to the report.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Writes a synthetic PGM image.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Generates a patch cost table.
    Costs {
        #[arg(long, value_enum)]
        model: CostModelArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        window_side: Option<usize>,
    },
}

#[derive(Subcommand)]
enum GenKind {
    Circle {
        #[arg(long, default_value_t = 81)]
        size: usize,
        #[arg(long, default_value_t = 30.0)]
        radius: f64,
        #[arg(long)]
        out: PathBuf,
    },
    Blob {
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Infeasible(_) => 3,
        Error::Capacity { .. } => 4,
        _ => 2,
    }
}

fn options(s: &SolveArgs) -> SolverOptions {
    SolverOptions {
        max_iters: s.max_iters,
        algorithm: match s.algorithm {
            AlgorithmArg::Trws => Algorithm::Trws,
            AlgorithmArg::Lbp => Algorithm::Lbp,
        },
        ..Default::default()
    }
}

fn finish(s: &SolveArgs, r: &SolveResult, mut report: RunReport) -> Result<()> {
    report.energy = r.energy;
    report.lower_bound = r.lower_bound;
    report.iterations = r.iterations;
    report.consistent = r.consistent;
    let text = report.to_text();
    print!("{text}");
    if let Some(p) = &s.report {
        std::fs::write(p, text)?;
    }
    if let Some(p) = &s.trace {
        std::fs::write(p, trace_csv(&r.trace))?;
    }
    Ok(())
}

fn load_costs(path: &Path, model: Model) -> Result<PatchCostTable> {
    let t = PatchCostTable::read_tsv(path)?;
    if t.side() != model.patch_side() {
        return Err(Error::Input(format!(
            "{} holds {}x{} patches but model {} needs {}x{}",
            path.display(),
            t.side(),
            t.side(),
            model.name(),
            model.patch_side(),
            model.patch_side()
        )));
    }
    Ok(t)
}

fn execute(cmd: Command, echo: String) -> Result<()> {
    match cmd {
        Command::Segment {
            input,
            lambda,
            model,
            costs,
            seed,
            window_side,
            mu_fg,
            mu_bg,
            out,
            solve,
        } => {
            let start = Instant::now();
            let model = Model::from(model);
            let img = GridImage::read(&input)?;
            let table = match &costs {
                Some(p) => load_costs(p, model)?,
                None => curvature::model_costs(model, seed, window_side)?,
            };
            let data = curvature::data_term_from_image(&img.samples, mu_bg, mu_fg);
            let inst = curvature::build_segmentation_instance(img.width, img.height, data, lambda, table)?;
            let r = run(inst.graph(), &options(&solve))?;
            GridImage::from_labels(img.width, img.height, &r.base)?.write_pbm(&out)?;
            let report = RunReport {
                command: echo,
                model: model.name().into(),
                energy: 0.0,
                lower_bound: None,
                iterations: 0,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
                consistent: false,
                seed: if costs.is_none() && model != Model::TwoByTwo { Some(seed) } else { None },
                extra: Vec::new(),
            };
            finish(&solve, &r, report)
        }
        Command::Deconv {
            input,
            kernel: Kernel::Mean3,
            truth,
            out,
            solve,
        } => {
            let start = Instant::now();
            let img = GridImage::read(&input)?;
            let problem = DeconvProblem::from_image(&img)?;
            let r = run(&problem.super_graph()?, &options(&solve))?;
            GridImage::from_labels(img.width, img.height, &r.base)?.write_pbm(&out)?;
            let mut extra = Vec::new();
            if let Some(p) = truth {
                let t = GridImage::read(&p)?;
                if (t.width, t.height) != (img.width, img.height) {
                    return Err(Error::Input(format!("truth image {} does not match the input size", p.display())));
                }
                extra.push(("truth_energy".to_string(), format!("{:.17e}", problem.energy(&t.to_labels(0.5)))));
            }
            let report = RunReport {
                command: echo,
                model: "deconv-mean3".into(),
                energy: 0.0,
                lower_bound: None,
                iterations: 0,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
                consistent: false,
                seed: None,
                extra,
            };
            finish(&solve, &r, report)
        }
        Command::Gen { kind } => {
            let (img, out) = match kind {
                GenKind::Circle { size, radius, out } => (synth::circle(size, radius)?, out),
                GenKind::Blob { size, seed, noise, out } => (synth::two_blob(size, seed, noise)?, out),
            };
            img.write_pgm(&out, 255)?;
            Ok(())
        }
        Command::Costs {
            model,
            seed,
            out,
            window_side,
        } => {
            let model = match model {
                CostModelArg::Three => Model::ThreeByThree,
                CostModelArg::Five => Model::FiveByFive,
            };
            let table = curvature::model_costs(model, seed, window_side)?;
            table.write_tsv(&out)?;
            println!("model: {}\ncount: {}", model.name(), table.len());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let echo = std::env::args().collect::<Vec<_>>().join(" ");
    let cli = Cli::parse();
    match execute(cli.command, echo) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("penum: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
