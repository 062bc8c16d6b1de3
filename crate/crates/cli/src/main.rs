use std::path::PathBuf;
use std::process::ExitCode;

use charmer_cli::commands::{holonomy_cmd, lift, orbit_cmd, turns_cmd};
use charmer_cli::error::CliResult;
use charmer_cli::scene::Scene;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "charmer", version, about = "Lift snout paths of arc-length snakes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scene file (TOML).
    scene: PathBuf,
    /// Integrator step.
    #[arg(long)]
    step: Option<f64>,
    /// Defect tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Move the snout exactly onto the curve after every step.
    #[arg(long)]
    snap: bool,
    /// Seed for random loop families.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Lift the scene curve; writes trajectory.csv, turns.csv, frames.
    Lift(Common),
    /// Holonomy of one loop; writes z0.csv and z1.csv.
    Holonomy(Common),
    /// Orbit sample, tangent rank and rotation fits.
    Orbit(Common),
    /// Repeat the loop N times; writes turns.csv.
    Turns {
        #[command(flatten)]
        common: Common,
        #[arg(long, short)]
        n: usize,
        /// First turn of the argmin window (default N/2).
        #[arg(long)]
        from: Option<usize>,
    },
}

fn load(c: &Common) -> CliResult<Scene> {
    let mut scene = Scene::load(&c.scene)?;
    if let Some(h) = c.step {
        scene.solver.step = h;
    }
    if let Some(t) = c.tolerance {
        scene.solver.tolerance = t;
    }
    if c.snap {
        scene.solver.snap = true;
    }
    if let Some(s) = c.seed {
        scene.orbit.seed = s;
    }
    scene.validate()?;
    Ok(scene)
}

fn run(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Lift(c) => {
            let s = lift(&load(c)?, Some(&c.out_dir))?;
            Ok(format!(
                "status: {:?}\nsteps: {}\nmax defect: {:.3e}\nsnapped: {}\nturns: {}\nwrote {} file(s) to {}\n",
                s.status,
                s.steps,
                s.max_defect,
                s.snapped,
                s.turns.rows.len(),
                s.files.len(),
                c.out_dir.display()
            ))
        }
        Command::Holonomy(c) => Ok(holonomy_cmd(&load(c)?, Some(&c.out_dir))?.text()),
        Command::Orbit(c) => Ok(orbit_cmd(&load(c)?, Some(&c.out_dir))?.text()),
        Command::Turns { common, n, from } => Ok(turns_cmd(&load(common)?, *n, *from, Some(&common.out_dir))?.text()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", serde_json::to_string(&e.record()).expect("record serializes"));
            ExitCode::from(2)
        }
    }
}
