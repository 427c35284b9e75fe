use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info};

use screenbem_cli::config::OUT_ENV;
use screenbem_cli::{exit, exit_code, parse_config_file, run_convergence, run_field_slice, validate_config, validate_slice, Violation};

#[derive(Parser)]
#[command(name = "screenbem", version, about = "Hypersingular BEM on flat screens: conforming and Nitsche-coupled convergence studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a level ladder and write convergence tables.
    Convergence(Common),
    /// Solve on the finest level and evaluate the potential on a plane grid.
    FieldSlice {
        #[command(flatten)]
        common: Common,
        /// Plane as axis=value, e.g. z=0.3.
        #[arg(long)]
        plane: String,
        /// In-plane ranges a0,a1,b0,b1.
        #[arg(long, default_value = "-1,1,-1,1", allow_hyphen_values = true)]
        extent: String,
        /// Grid points per direction, n or na,nb.
        #[arg(long, default_value = "41")]
        resolution: String,
    },
}

#[derive(Args)]
struct Common {
    /// File of key=value lines; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// conforming | nitsche
    #[arg(long)]
    method: Option<String>,
    /// square | model
    #[arg(long)]
    screen: Option<String>,
    /// Wave number.
    #[arg(long, allow_hyphen_values = true)]
    k: Option<String>,
    /// Constant penalties, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    nu: Option<String>,
    /// Penalty scale for nu = nu0 h^-epsilon.
    #[arg(long, allow_hyphen_values = true)]
    nu0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<String>,
    /// Inclusive level range A..B.
    #[arg(long)]
    levels: Option<String>,
    /// Conforming levels for the limit energy.
    #[arg(long)]
    energy_levels: Option<String>,
    /// Gauss orders d,v,e,c for disjoint, vertex, edge and coincident pairs.
    #[arg(long)]
    quad_orders: Option<String>,
    /// Output directory (default from SCREENBEM_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    dump_mesh: bool,
    #[arg(long)]
    dump_matrix: bool,
    #[arg(long)]
    dump_solution: bool,
    #[arg(long)]
    threads: Option<String>,
}

impl Common {
    fn pairs(&self) -> Result<Vec<(String, String)>, Vec<Violation>> {
        let mut pairs = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    vec![Violation { key: "config".into(), message: format!("{}: {e}", path.display()) }]
                })?;
                parse_config_file(&text)?
            }
            None => Vec::new(),
        };
        let flags = [
            ("method", &self.method),
            ("screen", &self.screen),
            ("k", &self.k),
            ("nu", &self.nu),
            ("nu0", &self.nu0),
            ("epsilon", &self.epsilon),
            ("levels", &self.levels),
            ("energy-levels", &self.energy_levels),
            ("quad-orders", &self.quad_orders),
            ("threads", &self.threads),
        ];
        for (key, v) in flags {
            if let Some(v) = v {
                pairs.push((key.into(), v.clone()));
            }
        }
        if let Some(out) = &self.out {
            pairs.push(("out".into(), out.display().to_string()));
        }
        for (key, set) in [("dump-mesh", self.dump_mesh), ("dump-matrix", self.dump_matrix), ("dump-solution", self.dump_solution)] {
            if set {
                pairs.push((key.into(), "true".into()));
            }
        }
        Ok(pairs)
    }
}

fn report(violations: &[Violation]) -> ExitCode {
    for v in violations {
        eprintln!("config error: {v}");
    }
    ExitCode::from(exit::CONFIG as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (common, slice) = match &cli.command {
        Command::Convergence(c) => (c, None),
        Command::FieldSlice { common, plane, extent, resolution } => (common, Some((plane, extent, resolution))),
    };
    let cfg = match common.pairs().and_then(|p| validate_config(&p)) {
        Ok(cfg) => cfg,
        Err(v) => return report(&v),
    };
    let slice = match slice.map(|(p, e, r)| validate_slice(p, e, r)).transpose() {
        Ok(s) => s,
        Err(v) => return report(&v),
    };
    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            error!("thread pool: {e}");
        }
    }
    if common.out.is_none() && std::env::var_os(OUT_ENV).is_none() {
        info!("writing to {} (set --out or {OUT_ENV} to change)", cfg.out.display());
    }

    let outcome = match slice {
        None => run_convergence(&cfg).map(|out| {
            for (path, _) in &out.tables {
                info!("wrote {}", path.display());
            }
            info!("wrote {} and {}", out.summary.display(), out.energy.display());
        }),
        Some(slice) => run_field_slice(&cfg, &slice).map(|out| {
            info!("wrote {} ({} points, {} skipped on the screen)", out.path.display(), out.written, out.skipped);
        }),
    };
    match outcome {
        Ok(()) => ExitCode::from(exit::SUCCESS as u8),
        Err(e) => {
            error!("{e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
