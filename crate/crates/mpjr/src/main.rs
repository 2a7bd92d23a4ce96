use clap::{Parser, Subcommand};
use mpjr::config::{build_model, config_hash, parse_config, write_config};
use mpjr::error::Error;
use mpjr::law::LjParams;
use mpjr::output;
use mpjr::scan::{load_scan_grid, segment_phases, FieldKind};
use mpjr::solver::{run, State};
use std::path::{Path, PathBuf};

/// Finite element solver for adhesive contact between a rigid rough indenter
/// and an elastic layer, with scan-measured topography and adhesion fields
/// embedded point-wise at the interface.
#[derive(Parser)]
#[command(name = "mpjr", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full simulation from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (created if missing).
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Store a field snapshot every N converged steps.
        #[arg(long)]
        snapshot_every: Option<usize>,
        /// Replace the adhesive law by the penalty comparison.
        #[arg(long)]
        penalty_mode: bool,
        /// Use the homogenized effective modulus for the whole bulk.
        #[arg(long)]
        homogenized: bool,
    },
    /// Print the regularized law parameterization and its sanity checks.
    CheckLaw {
        /// Adhesion energy per unit area (N/mm).
        #[arg(long)]
        delta_gamma: f64,
        /// Peak adhesive traction (MPa).
        #[arg(long)]
        p_max: f64,
        /// Tangent slope cap (N/mm^3).
        #[arg(long)]
        k_cap: f64,
        /// Also dump the law curve as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 400)]
        samples: usize,
    },
    /// Grid-file preprocessing.
    Preprocess {
        #[command(subcommand)]
        op: PreprocessOp,
    },
    /// Write the undeformed mesh of a configured run as legacy VTK.
    MeshDump {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum PreprocessOp {
    /// Strided downsampling of a grid file.
    Downsample {
        #[arg(long)]
        input: PathBuf,
        /// Field kind: height, peak_force, dissipation or modulus.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        factor: usize,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        unit_scale: f64,
    },
    /// Extract one row as a profile grid.
    ExtractProfile {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        kind: String,
        #[arg(long)]
        row: usize,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        unit_scale: f64,
    },
    /// Threshold a modulus grid into phases and report the statistics.
    Segment {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        threshold: f64,
        /// Write the binary mask as a CSV of x,y,label rows.
        #[arg(long)]
        mask_output: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        unit_scale: f64,
    },
    /// Export any grid file as x,y,value CSV.
    ToCsv {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        kind: String,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        unit_scale: f64,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io { .. }
                | Error::Parse { .. }
                | Error::NonFinite { .. }
                | Error::InvalidGrid(_)
                | Error::Config { .. }
                | Error::LawParams(_)
                | Error::Mesh(_)
                | Error::InterfaceLayer(_)
                | Error::Invalid(_) => 2,
                Error::LinearSolve(_) | Error::StepFailure { .. } => 3,
            }
        }
    };
    std::process::exit(code);
}

fn parse_kind(s: &str) -> Result<FieldKind, Error> {
    FieldKind::parse(s).ok_or_else(|| Error::Invalid(format!("unknown field kind `{s}`")))
}

fn dispatch(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Run {
            config,
            out,
            snapshot_every,
            penalty_mode,
            homogenized,
        } => run_simulation(&config, &out, snapshot_every, penalty_mode, homogenized),
        Command::CheckLaw {
            delta_gamma,
            p_max,
            k_cap,
            csv,
            samples,
        } => {
            let params = LjParams::derive(delta_gamma, p_max, k_cap)?;
            print!("{}", output::law_report(&params, k_cap));
            if let Some(path) = csv {
                std::fs::write(&path, output::law_curve_csv(&params, samples))
                    .map_err(|e| Error::io(&path, e))?;
                println!("law curve written to {}", path.display());
            }
            Ok(0)
        }
        Command::Preprocess { op } => preprocess(op),
        Command::MeshDump { config, out } => {
            let cfg = parse_config(&config)?;
            let model = build_model(&cfg)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let path = out.join("mesh.vtk");
            std::fs::write(
                &path,
                output::mesh_vtk(&model.system, Some(&model.summary.config_hash)),
            )
            .map_err(|e| Error::io(&path, e))?;
            println!("mesh written to {}", path.display());
            Ok(0)
        }
    }
}

fn preprocess(op: PreprocessOp) -> Result<i32, Error> {
    match op {
        PreprocessOp::Downsample {
            input,
            kind,
            factor,
            output,
            unit_scale,
        } => {
            let grid = load_scan_grid(&input, parse_kind(&kind)?, unit_scale)?;
            let down = grid.downsample(factor)?;
            std::fs::write(&output, down.to_file_string()).map_err(|e| Error::io(&output, e))?;
            println!(
                "{}x{} -> {}x{} written to {}",
                grid.nx,
                grid.ny,
                down.nx,
                down.ny,
                output.display()
            );
            Ok(0)
        }
        PreprocessOp::ExtractProfile {
            input,
            kind,
            row,
            output,
            unit_scale,
        } => {
            let grid = load_scan_grid(&input, parse_kind(&kind)?, unit_scale)?;
            let profile = grid.extract_profile(row)?;
            std::fs::write(&output, profile.to_file_string())
                .map_err(|e| Error::io(&output, e))?;
            println!("row {row} written to {}", output.display());
            Ok(0)
        }
        PreprocessOp::Segment {
            input,
            threshold,
            mask_output,
            unit_scale,
        } => {
            let grid = load_scan_grid(&input, FieldKind::Modulus, unit_scale)?;
            let (mask, summary) = segment_phases(&grid, threshold)?;
            println!("threshold            : {threshold}");
            println!("inclusion fraction   : {}", summary.inclusion_fraction);
            println!("matrix fraction      : {}", summary.matrix_fraction);
            match summary.inclusion_mean_modulus {
                Some(e) => println!("inclusion mean       : {e}"),
                None => println!("inclusion mean       : (empty phase)"),
            }
            match summary.matrix_mean_modulus {
                Some(e) => println!("matrix mean          : {e}"),
                None => println!("matrix mean          : (empty phase)"),
            }
            if let Some(path) = mask_output {
                let mut csv = String::from("x,y,label\n");
                for j in 0..mask.ny {
                    for i in 0..mask.nx {
                        csv.push_str(&format!(
                            "{},{},{}\n",
                            i as f64 * grid.dx,
                            j as f64 * grid.dy,
                            mask.label(i, j)
                        ));
                    }
                }
                std::fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
                println!("mask written to {}", path.display());
            }
            Ok(0)
        }
        PreprocessOp::ToCsv {
            input,
            kind,
            output,
            unit_scale,
        } => {
            let grid = load_scan_grid(&input, parse_kind(&kind)?, unit_scale)?;
            std::fs::write(&output, grid.to_csv()).map_err(|e| Error::io(&output, e))?;
            println!("csv written to {}", output.display());
            Ok(0)
        }
    }
}

fn run_simulation(
    config_path: &Path,
    out: &Path,
    snapshot_every: Option<usize>,
    penalty_mode: bool,
    homogenized: bool,
) -> Result<i32, Error> {
    let mut cfg = parse_config(config_path)?;
    if penalty_mode {
        cfg.penalty = true;
    }
    if homogenized {
        cfg.homogenized = Some(true);
    }
    if let Some(n) = snapshot_every {
        cfg.snapshot_every = n;
    }

    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let hash = config_hash(&cfg);
    let resolved = format!("# config {hash}\n{}", write_config(&cfg));
    let echo_path = out.join("config.resolved");
    std::fs::write(&echo_path, resolved).map_err(|e| Error::io(&echo_path, e))?;

    let model = build_model(&cfg)?;
    let s = &model.summary;
    println!("lateral size L       : {} mm", s.length);
    println!("effective modulus E* : {} MPa", s.e_star);
    if let (Some(e1), Some(e2)) = (s.e_matrix, s.e_inclusion) {
        println!(
            "phase moduli         : matrix {e1} MPa ({}), inclusion {e2} MPa ({})",
            s.phases.matrix_fraction, s.phases.inclusion_fraction
        );
    }
    println!("h_rms                : {} mm", s.h_rms);
    println!("initial separation   : {} mm", s.g_init);
    println!("slope cap            : {} N/mm^3", s.k_cap);
    println!("config hash          : {hash}");

    let sys = &model.system;
    let mut state = State::zero(sys);
    let lf = sys.scaling.length;
    let ff = sys.scaling.force_factor(sys.mesh.ndim);
    let history = run(
        sys,
        &mut state,
        &model.path,
        &model.settings,
        cfg.snapshot_every,
        |sys, _, rec| {
            println!(
                "step {:4}  t = {:7.4}  u_bar = {:+.6e} mm ({:+.4} h_rms)  P = {:+.6e}  it = {}{}",
                rec.step,
                rec.pseudo_time,
                rec.u_bar * lf,
                rec.u_bar / sys.h_rms.max(f64::MIN_POSITIVE),
                rec.reaction * ff,
                rec.newton_iterations,
                if rec.substep_depth > 0 {
                    format!("  (substeps to depth {})", rec.substep_depth)
                } else {
                    String::new()
                }
            );
        },
    );
    for f in &history.failures {
        println!(
            "step failure at u_bar = {:+.6e} mm (t = {:.4}): residual {:.3e}",
            f.u_bar_target * lf,
            f.pseudo_time,
            f.residual
        );
    }

    output::write_history(&history, sys, Some(&hash), &out.join("history.csv"))?;
    for sec in &cfg.sections {
        let name = format!("section_{}_{}.csv", sec.axis, sec.position);
        output::write_section(sys, &state, sec.axis, sec.position, Some(&hash), &out.join(name))?;
    }
    for snap in &history.snapshots {
        let snap_state = State {
            u: snap.u.clone(),
            u_bar: 0.0,
        };
        let name = format!("fields_step_{:04}.vtk", snap.step);
        output::write_fields(sys, &snap_state, Some(&hash), &out.join(name))?;
    }
    output::write_fields(sys, &state, Some(&hash), &out.join("fields_final.vtk"))?;
    let debug = output::interface_debug_csv(sys, &state, Some(&hash));
    let debug_path = out.join("interface_final.csv");
    std::fs::write(&debug_path, debug).map_err(|e| Error::io(&debug_path, e))?;

    println!(
        "{} converged steps, {} failures; outputs in {}",
        history.steps.len(),
        history.failures.len(),
        out.display()
    );
    if history.aborted {
        println!("run aborted before completing the load path");
        return Ok(3);
    }
    Ok(0)
}
