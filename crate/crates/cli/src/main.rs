//! `coalesce`: runs the verification experiments and writes their reports.
//!
//! Exit status is 0 when every verdict passes, 1 when one fails and 2 when
//! the configuration is rejected.

mod config;
mod simulate;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use coalesce::experiments::{
    run, AiryTable, Avoidance, BmDuality, Experiment, GenDuality, Marginal, NnNecessity, QvCheck, RwDuality, StaggeredDuality, Stationary,
    Wedge,
};
use config::{merge, parse_overrides, read_table, take_universal, ConfigError, ConfigResult, Universal};
use toml::{Table, Value};

#[derive(Parser, Debug)]
#[command(
    name = "coalesce",
    version,
    about = "Duality checks for coalescing random walks and Brownian motions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact generator duality over random small instances.
    GenDuality(Common),
    /// Search for a duality gap when walks jump by two.
    NnNecessity(Common),
    /// Balls-in-boxes duality for coalescing lattice walks.
    RwDuality(Common),
    /// Single-walker occupation law against the Skellam distribution.
    Marginal(Common),
    /// Balls-in-boxes duality for coalescing Brownian motions.
    BmDuality(Common),
    /// Duality with staggered birth times.
    StaggeredDuality(Common),
    /// Quadratic covariation against the meeting time.
    QvCheck(Common),
    /// Direct and dual avoidance probabilities of the immigration system.
    Avoidance(Common),
    /// Laplace transform of the wedge mass against the Airy ratio.
    Wedge(Common),
    /// Intensity of the stationary point process.
    Stationary(Common),
    /// Table of the Airy function with consistency checks.
    AiryTable(Common),
    /// Dump simulated paths or points as CSV.
    Simulate(Common),
    /// Every experiment with its default (or smoke) configuration.
    All(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Flat TOML file of parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo replicates per side.
    #[arg(long)]
    replicates: Option<u64>,
    /// Directory for reports and dumps [default: reports].
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Start from the reduced configuration instead of the full one.
    #[arg(long)]
    smoke: bool,
    /// Any parameter as `--key value`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    overrides: Vec<String>,
}

impl Common {
    /// File, then `--replicates`, then overrides, with universal keys split off.
    fn layers(&self) -> ConfigResult<(Universal, Table)> {
        let mut table = match &self.config {
            Some(path) => read_table(path)?,
            None => Table::new(),
        };
        if let Some(n) = self.replicates {
            let n = i64::try_from(n).map_err(|_| ConfigError(format!("replicates {n} is too large")))?;
            table.insert("replicates".into(), Value::Integer(n));
        }
        table.extend(parse_overrides(&self.overrides)?);
        if let Some(n) = table.remove("N") {
            table.insert("replicates".into(), n);
        }
        let universal = take_universal(&mut table, self.seed, self.out_dir.clone(), self.workers)?;
        Ok((universal, table))
    }
}

enum Outcome {
    Pass,
    Fail,
}

fn run_experiment<E: Experiment>(base: E, table: Table, u: &Universal) -> ConfigResult<Outcome> {
    let cfg: E = merge(&base, table)?;
    cfg.validate()?;
    let report = run(&cfg, u.seed)?;
    let path = u.out_dir.join(format!("{}.json", E::NAME));
    write(&path, &report.to_json()?)?;
    let status = if report.passed() { "PASS" } else { "FAIL" };
    println!("{status} {}: {} [{}]", E::NAME, report.summary, path.display());
    Ok(if report.passed() { Outcome::Pass } else { Outcome::Fail })
}

fn write(path: &Path, text: &str) -> ConfigResult<()> {
    std::fs::write(path, text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
}

fn base<E: Experiment>(smoke: bool) -> E {
    if smoke {
        E::smoke()
    } else {
        E::default()
    }
}

fn dispatch(command: &Command) -> ConfigResult<Outcome> {
    let common = match command {
        Command::GenDuality(c)
        | Command::NnNecessity(c)
        | Command::RwDuality(c)
        | Command::Marginal(c)
        | Command::BmDuality(c)
        | Command::StaggeredDuality(c)
        | Command::QvCheck(c)
        | Command::Avoidance(c)
        | Command::Wedge(c)
        | Command::Stationary(c)
        | Command::AiryTable(c)
        | Command::Simulate(c)
        | Command::All(c) => c,
    };
    let (u, mut table) = common.layers()?;
    std::fs::create_dir_all(&u.out_dir).map_err(|e| ConfigError(format!("{}: {e}", u.out_dir.display())))?;
    let smoke = common.smoke;
    let go = || -> ConfigResult<Outcome> {
        match command {
            Command::GenDuality(_) => run_experiment(base::<GenDuality>(smoke), table, &u),
            Command::NnNecessity(_) => run_experiment(base::<NnNecessity>(smoke), table, &u),
            Command::RwDuality(_) => run_experiment(base::<RwDuality>(smoke), table, &u),
            Command::Marginal(_) => run_experiment(base::<Marginal>(smoke), table, &u),
            Command::BmDuality(_) => run_experiment(base::<BmDuality>(smoke), table, &u),
            Command::StaggeredDuality(_) => run_experiment(base::<StaggeredDuality>(smoke), table, &u),
            Command::QvCheck(_) => run_experiment(base::<QvCheck>(smoke), table, &u),
            Command::Avoidance(_) => run_experiment(base::<Avoidance>(smoke), table, &u),
            Command::Wedge(_) => run_experiment(base::<Wedge>(smoke), table, &u),
            Command::Stationary(_) => run_experiment(base::<Stationary>(smoke), table, &u),
            Command::AiryTable(_) => {
                // Deterministic, so a replicate count has nothing to control.
                table.remove("replicates");
                run_experiment(base::<AiryTable>(smoke), table, &u)
            }
            Command::Simulate(_) => {
                let cfg: simulate::Simulate = merge(&simulate::Simulate::default(), table)?;
                let files = simulate::run(&cfg, u.seed, &u.out_dir)?;
                for f in files {
                    println!("wrote {}", f.display());
                }
                Ok(Outcome::Pass)
            }
            Command::All(_) => run_all(smoke, table, &u),
        }
    };
    match u.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ConfigError(e.to_string()))?
            .install(go),
        None => go(),
    }
}

fn run_all(smoke: bool, table: Table, u: &Universal) -> ConfigResult<Outcome> {
    if !table.keys().all(|k| k == "replicates") {
        return Err(ConfigError("`all` takes only universal options".into()));
    }
    let results = [
        run_experiment(base::<GenDuality>(smoke), table.clone(), u)?,
        run_experiment(base::<NnNecessity>(smoke), table.clone(), u)?,
        run_experiment(base::<RwDuality>(smoke), table.clone(), u)?,
        run_experiment(base::<BmDuality>(smoke), table.clone(), u)?,
        run_experiment(base::<StaggeredDuality>(smoke), table.clone(), u)?,
        run_experiment(base::<QvCheck>(smoke), table.clone(), u)?,
        run_experiment(base::<Marginal>(smoke), table.clone(), u)?,
        run_experiment(base::<Avoidance>(smoke), table.clone(), u)?,
        run_experiment(base::<Wedge>(smoke), table.clone(), u)?,
        run_experiment(base::<Stationary>(smoke), table, u)?,
        run_experiment(base::<AiryTable>(smoke), Table::new(), u)?,
    ];
    let failed = results.iter().filter(|o| matches!(o, Outcome::Fail)).count();
    println!("{} of {} passed", results.len() - failed, results.len());
    Ok(if failed == 0 { Outcome::Pass } else { Outcome::Fail })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
