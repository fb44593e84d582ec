use clap::{Parser, Subcommand};

use mpri::commands::{
    cmd_ablate, cmd_convert, cmd_demo, cmd_eval, cmd_pipeline, init_threads, AblateArgs,
    ConvertArgs, DemoArgs, EvalArgs, PipelineArgs,
};

/// Relevant-information feature extraction and classification for image
/// cubes.
#[derive(Parser)]
#[command(name = "mpri", version, about)]
struct Cli {
    /// Worker thread cap; PRI_THREADS is the fallback, all cores the
    /// default. Output is identical for any thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the PRI on the synthetic intersect cloud across betas.
    Demo(DemoArgs),
    /// Split, run the pipeline, classify, and evaluate one cube.
    Pipeline(PipelineArgs),
    /// Run the 8-row multi-layer/scale/beta ablation grid.
    Ablate(AblateArgs),
    /// Score stored predictions against stored truth.
    Eval(EvalArgs),
    /// Convert between the cube format and CSV.
    Convert(ConvertArgs),
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    init_threads(cli.threads);
    let result = match &cli.command {
        Command::Demo(args) => cmd_demo(args),
        Command::Pipeline(args) => cmd_pipeline(args).map(|_| ()),
        Command::Ablate(args) => cmd_ablate(args).map(|_| ()),
        Command::Eval(args) => cmd_eval(args).map(|_| ()),
        Command::Convert(args) => cmd_convert(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        let mut source = std::error::Error::source(&e);
        while let Some(cause) = source {
            eprintln!("  caused by: {cause}");
            source = cause.source();
        }
        std::process::exit(1);
    }
}
