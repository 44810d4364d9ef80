use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use exterior_spectra::assembly::{assemble_dirichlet, assemble_mixed, assemble_neumann};
use exterior_spectra::comparison::ComparisonKind;
use exterior_spectra::experiment::{oracle_csv, run, run_oracle, ExperimentConfig, PRESETS};
use exterior_spectra::geometry::{build_mesh, tag_boundary, write_mesh};
use exterior_spectra::Result;

#[derive(Parser)]
#[command(name = "exterior-spectra", version, about = "Eigenvalue comparison experiments on exterior domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its certificate.
    Run {
        /// Preset name or path to a configuration file.
        config: String,
        /// Output directory (overrides output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated mesh levels (overrides mesh.levels).
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<u32>>,
        /// Print only the summary.
        #[arg(long)]
        quiet: bool,
    },
    /// List the shipped presets.
    ListPresets,
    /// Write the mesh of a configuration, optionally with its matrices.
    ExportMesh {
        config: String,
        #[arg(long, default_value_t = 0)]
        level: u32,
        /// Truncation radius; defaults to the first configured one.
        #[arg(long)]
        radius: Option<f64>,
        /// Mesh file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for the stiffness and mass matrices of both operators in coordinate format.
        #[arg(long)]
        matrices: Option<PathBuf>,
    },
    /// Run the radial separation-of-variables solver on a radial configuration.
    Oracle {
        config: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

fn cmd_run(config: &str, out: Option<PathBuf>, levels: Option<Vec<u32>>, quiet: bool) -> Result<ExitCode> {
    let mut config = ExperimentConfig::load(config)?;
    if let Some(levels) = levels {
        config.levels = levels;
    }
    let outcome = run(&config)?;
    if let Some(dir) = out.or(config.output_dir.clone()) {
        outcome.write_to(&dir)?;
        eprintln!("artifacts written to {}", dir.display());
    }
    print!("{}", if quiet { outcome.summary() } else { outcome.report() });
    Ok(ExitCode::from(outcome.exit_code() as u8))
}

fn cmd_export(
    config: &str,
    level: u32,
    radius: Option<f64>,
    out: Option<PathBuf>,
    matrices: Option<PathBuf>,
) -> Result<()> {
    let config = ExperimentConfig::load(config)?;
    let domain = config.domain_at(radius.unwrap_or(config.radii[0])).with_level(level);
    let mesh = tag_boundary(&build_mesh(&domain)?, &config.bc)?;
    let text = write_mesh(&mesh);
    match out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, text)?
        }
        None => print!("{text}"),
    }
    if let Some(dir) = matrices {
        let systems = match config.kind {
            ComparisonKind::CoefficientPair => {
                vec![
                    ("a1", assemble_dirichlet(&mesh, &config.fields[0])?),
                    ("a2", assemble_dirichlet(&mesh, &config.fields[1])?),
                ]
            }
            ComparisonKind::DirichletVsNeumann => vec![
                ("dirichlet", assemble_dirichlet(&mesh, &config.fields[0])?),
                ("neumann", assemble_neumann(&mesh, &config.fields[0])?),
            ],
            ComparisonKind::DirichletVsMixed => vec![
                ("dirichlet", assemble_dirichlet(&mesh, &config.fields[0])?),
                ("mixed", assemble_mixed(&mesh, &config.fields[0], config.bc.robin_alpha)?),
            ],
        };
        for (name, sys) in systems {
            write(&dir, &format!("{name}_A.txt"), &sys.a.to_coordinate_text())?;
            write(&dir, &format!("{name}_M.txt"), &sys.m.to_coordinate_text())?;
            let free: String = sys.dof.free.iter().map(|v| format!("{v}\n")).collect();
            write(&dir, &format!("{name}_free.txt"), &free)?;
        }
        eprintln!("matrices written to {}", dir.display());
    }
    Ok(())
}

fn cmd_oracle(config: &str, out: Option<PathBuf>) -> Result<()> {
    let config = ExperimentConfig::load(config)?;
    let series = run_oracle(&config)?;
    for s in &series {
        println!("R = {} obstacle condition {}", s.radius, s.label());
        for spectrum in &s.spectra {
            let values: Vec<String> = spectrum.expanded().iter().map(|v| format!("{v:.16e}")).collect();
            println!("  n_r = {:<5} m_max = {:<3} [{}]", spectrum.n_r, spectrum.m_max, values.join(", "));
        }
        match &s.ground_state {
            Some(e) => println!(
                "  ground state limit {:.16e} error {:.3e} order {}",
                e.limit,
                e.error_estimate,
                e.order.map_or("undefined".into(), |p| format!("{p:.4}"))
            ),
            None => println!("  no ground state below the probe"),
        }
    }
    if let Some(dir) = out {
        write(&dir, "oracle.csv", &oracle_csv(&series))?;
        eprintln!("oracle spectra written to {}", dir.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, levels, quiet } => cmd_run(&config, out, levels, quiet),
        Command::ListPresets => {
            for p in PRESETS {
                println!("{:<28} {}", p.name, p.description);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ExportMesh { config, level, radius, out, matrices } => {
            cmd_export(&config, level, radius, out, matrices).map(|_| ExitCode::SUCCESS)
        }
        Command::Oracle { config, out } => cmd_oracle(&config, out).map(|_| ExitCode::SUCCESS),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}
