use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use parafd_cli::config::RunConfig;
use parafd_cli::study::{render_table, run_study, write_artifacts};
use parafd_cli::CliError;

/// Mesh-refinement studies with the central and compact difference schemes.
///
/// Flags override values read from `--config`.
#[derive(Debug, Parser)]
#[command(name = "parafd", version)]
struct Args {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// manufactured | airpollution
    #[arg(long)]
    problem: Option<String>,
    /// cds | cfds
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    /// Mesh as MxxMyxN, e.g. 16x16x64. Repeatable; replaces meshes from the file.
    #[arg(long)]
    mesh: Vec<String>,
    /// none | space | spacetime
    #[arg(long)]
    re: Option<String>,
    /// standard | fast | <real>
    #[arg(long)]
    mu: Option<String>,
    #[arg(long = "cos-theta")]
    cos_theta: Option<String>,
    /// as-printed | corrected
    #[arg(long)]
    chemistry: Option<String>,
    /// periodic | homogeneous (air-pollution problem only)
    #[arg(long)]
    boundary: Option<String>,
    /// corrected | as-printed compact coefficients
    #[arg(long)]
    compact: Option<String>,
    /// center | sixth | i,j
    #[arg(long)]
    probe: Option<String>,
    #[arg(long = "newton-tol")]
    newton_tol: Option<String>,
    #[arg(long = "krylov-tol")]
    krylov_tol: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solve meshes one after another on a single thread.
    #[arg(long)]
    deterministic: bool,
    /// Skip the per-mesh field dumps.
    #[arg(long = "no-dumps")]
    no_dumps: bool,
}

fn resolve(args: &Args) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    for (key, value) in [
        ("problem", &args.problem),
        ("scheme", &args.scheme),
        ("theta", &args.theta),
        ("re", &args.re),
        ("mu", &args.mu),
        ("cos_theta", &args.cos_theta),
        ("chemistry", &args.chemistry),
        ("boundary", &args.boundary),
        ("compact", &args.compact),
        ("probe", &args.probe),
        ("newton_tol", &args.newton_tol),
        ("krylov_tol", &args.krylov_tol),
    ] {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    if !args.mesh.is_empty() {
        cfg.meshes.clear();
        for m in &args.mesh {
            cfg.set("mesh", m)?;
        }
    }
    if let Some(out) = &args.out {
        cfg.out = out.clone();
    }
    cfg.deterministic |= args.deterministic;
    cfg.dump_fields &= !args.no_dumps;
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = resolve(&args).and_then(|cfg| {
        let out = run_study(&cfg)?;
        print!("{}", render_table(&out.rows));
        let files = write_artifacts(&cfg, &out)?;
        println!("wrote {}", files.csv.display());
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
