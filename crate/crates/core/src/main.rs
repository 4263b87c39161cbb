use calkin_lift::cli::{configure_threads, parse_fibers, parse_threshold, run, RunConfig};
use calkin_lift::continuity::Thresholds;
use calkin_lift::raster::Resolution;
use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;

/// Decide whether a normal Calkin-algebra semigroup lifts, from a description
/// of its generator spectrum.
#[derive(Debug, Parser)]
#[command(name = "calkin-lift", version)]
struct Args {
    /// Spectrum document.
    #[arg(long)]
    input: PathBuf,
    /// Tower depth N.
    #[arg(long, default_value_t = 8)]
    depth: u32,
    /// Angular cells; a power of two.
    #[arg(long, default_value_t = 2048)]
    theta_cells: usize,
    /// Cells per unit of log-modulus.
    #[arg(long, default_value_t = 1024)]
    u_cells: usize,
    /// `N` for N canonical and N twisted fibers, or `C,T`.
    #[arg(long, default_value = "16", value_parser = parse_fibers)]
    fibers: (usize, usize),
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Treat the kernel condition as satisfied when no operator model is given.
    #[arg(long)]
    assume_normal_lifts: bool,
    /// Report path; standard output when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Directory for one SVG per level.
    #[arg(long)]
    svg_dir: Option<PathBuf>,
    /// Threshold override, e.g. `o2n_ratio=3`. Repeatable.
    #[arg(long = "threshold", value_parser = parse_threshold)]
    thresholds: Vec<(String, String)>,
}

fn config(args: Args) -> Result<RunConfig, String> {
    let mut thresholds = Thresholds::default();
    for (k, v) in &args.thresholds {
        thresholds.set(k, v)?;
    }
    Ok(RunConfig {
        input: args.input,
        depth: args.depth,
        resolution: Resolution {
            theta_cells: args.theta_cells,
            u_cells_per_unit: args.u_cells,
        },
        canonical_fibers: args.fibers.0,
        twisted_fibers: args.fibers.1,
        seed: args.seed,
        assume_normal_lifts: args.assume_normal_lifts,
        report: args.report,
        svg_dir: args.svg_dir,
        thresholds,
    })
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let cfg = match config(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match run(&cfg) {
        Ok(a) => {
            let v = &a.verdict;
            eprintln!(
                "{} via {}",
                serde_json::to_value(v.classification).unwrap_or_default(),
                serde_json::to_value(v.route).unwrap_or_default()
            );
            ExitCode::from(a.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
