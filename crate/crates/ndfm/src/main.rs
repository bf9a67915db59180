use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use ndfm::oracle::{degeneration_check, max_slice_gap, rasterize_equi_dim};
use ndfm::scenario::{run_scenario, solve_problem, write_outputs, ScenarioConfig};
use ndfm::study::{consistency_study, convergence_study};
use ndfm::{io, meshgen};
use ndfm_core::mesh::build_rect_tri_mesh;
use ndfm_core::{build_rect_mesh, estimate_cond2};

#[derive(Parser)]
#[command(name = "ndfm", version, about = "Steady Darcy flow with non-conforming discrete fractures")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve a scenario and write the requested outputs.
    Run {
        config: PathBuf,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write the reduced matrix as `i j value` lines.
        #[arg(long)]
        dump_matrix: Option<PathBuf>,
        /// Estimate the 2-norm condition number of the reduced matrix.
        #[arg(long)]
        cond: bool,
    },
    /// Error norms against the analytic single-fracture solution on [-π, π]².
    Convergence {
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long, value_delimiter = ',', default_value = "20,40,80,160")]
        meshes: Vec<usize>,
        /// Use n + 1 cells per side for every listed size.
        #[arg(long)]
        odd: bool,
        /// Gauss points per direction on quads for the norms (5 is needed
        /// for the maximum norm to settle).
        #[arg(long, default_value_t = 5)]
        quad_n: usize,
    },
    /// Perturb the scenario's fractures by Δ (rotation and shift) on a fixed mesh.
    Consistency {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4,1e-6,1e-8")]
        deltas: Vec<f64>,
    },
    /// Solve the equi-dimensional strip model and compare slices with the scenario.
    Oracle {
        config: PathBuf,
        /// Grid nodes per side.
        #[arg(long)]
        resolution: usize,
        /// Strip width.
        #[arg(long)]
        width: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Compare the assembly against the classical conforming DFM.
    DegenerateCheck { config: PathBuf },
    /// Write a generated mesh file.
    GenMesh {
        #[arg(value_enum)]
        shape: Shape,
        #[arg(long, default_value_t = 16)]
        layers: usize,
        #[arg(long, default_value_t = 10)]
        nx: usize,
        #[arg(long, default_value_t = 10)]
        ny: usize,
        #[arg(long, value_delimiter = ',', default_value = "0,0,1,1")]
        bbox: Vec<f64>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    /// Unit disk from a hexagonal lattice (`--layers`).
    Circle,
    /// Hydrocoin cross-section (`--nx`, a multiple of 4, and `--ny`).
    Hydrocoin,
    /// Uniform quads of `--bbox`.
    Rect,
    /// Uniform triangles of `--bbox`.
    RectTri,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Run { config, out, dump_matrix, cond } => {
            let cfg = ScenarioConfig::load(&config)?;
            let run = run_scenario(&cfg).with_context(|| format!("scenario {}", config.display()))?;
            let (lo, hi) = run.field.range();
            let r = &run.report;
            println!(
                "vertices {}  free {}  nnz {}  cg iterations {}  residual {:.2e}  {}",
                run.system.n_total(),
                run.system.n_free,
                run.system.a.nnz(),
                r.iterations,
                r.true_rel_residual,
                if r.converged { "converged" } else { "NOT converged" }
            );
            println!("pressure range [{lo}, {hi}]");
            if cond {
                let c = estimate_cond2(&run.system.a)?;
                println!("cond2 ≈ {:.2e} (λmin {:.3e}, λmax {:.3e})", c.cond, c.lambda_min, c.lambda_max);
            }
            if let Some(path) = dump_matrix {
                std::fs::write(&path, io::matrix_dump(&run.system.a))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            for p in write_outputs(&cfg, &run, &out)? {
                println!("wrote {}", p.display());
            }
            Ok(if r.converged { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Cmd::Convergence { theta, meshes, odd, quad_n } => {
            let sizes: Vec<usize> = meshes.iter().map(|&n| if odd { n + 1 } else { n }).collect();
            print!("{}", convergence_study(theta, &sizes, quad_n)?);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Consistency { config, deltas } => {
            let cfg = ScenarioConfig::load(&config)?;
            let pb = cfg.materialize()?;
            print!("{}", consistency_study(&pb, &deltas, &cfg.solver)?);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Oracle { config, resolution, width, out } => {
            let cfg = ScenarioConfig::load(&config)?;
            let run = run_scenario(&cfg)?;
            let eq = rasterize_equi_dim(&run.problem, resolution, width)?;
            let (_, oracle, rep) = solve_problem(&eq, &cfg.solver)?;
            println!(
                "oracle: {} vertices, cg iterations {}, residual {:.2e}",
                eq.mesh.n_vertices(),
                rep.iterations,
                rep.true_rel_residual
            );
            let (lo, hi) = oracle.range();
            std::fs::create_dir_all(&out)?;
            for (k, s) in cfg.output.slices.iter().enumerate() {
                let (a, b) = s.endpoints();
                let ref_slice = oracle.slice_profile(a, b, s.n)?;
                let dev = max_slice_gap(&run.field, &ref_slice);
                println!("slice {k}: max |ndfm - oracle| = {:.3e} ({:.2}% of the range)", dev, 100.0 * dev / (hi - lo));
                let path = out.join(format!("{}_oracle_slice{k}.csv", cfg.output.field));
                std::fs::write(&path, io::slice_csv(&ref_slice))?;
            }
            Ok(if rep.converged { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Cmd::DegenerateCheck { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            let pb = cfg.materialize()?;
            let d = degeneration_check(&pb, &cfg.solver)?;
            println!("matrix: max relative entry difference {:.3e}", d.matrix_rel);
            println!("solution: max relative nodal difference {:.3e}", d.solution_rel);
            let ok = d.matrix_rel <= 1e-12 && d.solution_rel <= 1e-10;
            println!("{}", if ok { "degenerates to the classical DFM" } else { "MISMATCH" });
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Cmd::GenMesh { shape, layers, nx, ny, bbox, output } => {
            let Ok(bbox) = <[f64; 4]>::try_from(bbox) else { bail!("--bbox takes four numbers") };
            let mesh = match shape {
                Shape::Circle => meshgen::circle_hex_mesh(layers)?,
                Shape::Hydrocoin => meshgen::hydrocoin_mesh(nx, ny)?,
                Shape::Rect => build_rect_mesh(nx, ny, bbox)?,
                Shape::RectTri => build_rect_tri_mesh(nx, ny, bbox)?,
            };
            std::fs::write(&output, io::write_mesh(&mesh)).with_context(|| format!("writing {}", output.display()))?;
            println!("{} cells, {} vertices -> {}", mesh.n_cells(), mesh.n_vertices(), output.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
