use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use sybil_atsc::scenario::parse_seeds;
use sybil_atsc::solve::{read_game_input, solution_csv, solution_table, solve_input};
use sybil_atsc::{load_suite, parse_scenario, run_suite, CliError, ScenarioConfig, SuiteOutput};
use sybil_atsc_core::traffic_model::validate_network;

#[derive(Parser)]
#[command(name = "sybil-atsc", version, about = "Sybil attacks on adaptive signal control, and a game-theoretic defence")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Table,
}

#[derive(clap::Args)]
struct RunOpts {
    /// Seed list, e.g. `1-10` or `3,5,8`. Overrides the scenario file.
    #[arg(long)]
    seeds: Option<String>,
    /// Directory for report.csv, summary.txt, lane_flows.csv, weights.csv.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run every *.scenario file in a directory.
    Suite {
        dir: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Solve the lane game for a `lane,theta_vps,f_vps` CSV ("-" for stdin).
    SolveGame {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Check scenario files and the networks they describe.
    Validate {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
    },
}

fn execute(mut configs: Vec<ScenarioConfig>, opts: &RunOpts) -> Result<(), CliError> {
    if let Some(spec) = &opts.seeds {
        let seeds = parse_seeds(spec).map_err(|e| CliError::Usage(format!("--seeds: {e}")))?;
        for c in &mut configs {
            c.seeds = seeds.clone();
        }
    }
    if opts.parallelism == 0 {
        return Err(CliError::Usage("--parallelism must be >= 1".into()));
    }
    let out: SuiteOutput = run_suite(&configs, opts.parallelism)?;
    if let Some(dir) = &opts.out_dir {
        out.write_to(dir)?;
    }
    match opts.format {
        Format::Csv => print!("{}", out.csv()?),
        Format::Table => {
            print!("{}", sybil_atsc::report::reports_table(&out.reports));
            println!();
            print!("{}", out.summary());
        }
    }
    out.into_result().map(|_| ())
}

fn solve_game_cmd(input: &Path, format: Format) -> Result<(), CliError> {
    let origin = input.display().to_string();
    let data = if input == Path::new("-") {
        read_game_input(std::io::stdin().lock(), "<stdin>")?
    } else {
        let file = File::open(input).map_err(|source| CliError::Io { path: origin.clone(), source })?;
        read_game_input(file, &origin)?
    };
    let sol = solve_input(&data)?;
    match format {
        Format::Csv => print!("{}", solution_csv(&data, &sol)?),
        Format::Table => print!("{}", solution_table(&data, &sol)),
    }
    Ok(())
}

fn validate_cmd(paths: &[PathBuf]) -> Result<(), CliError> {
    let mut first_error = None;
    for path in paths {
        match parse_scenario(path).and_then(|c| {
            let net = c.network();
            validate_network(&net)
                .map_err(|v| CliError::Invalid {
                    origin: path.display().to_string(),
                    violations: v.iter().map(|x| x.to_string()).collect(),
                })
                .map(|_| (c, net))
        }) {
            Ok((c, net)) => println!(
                "ok: {} ({}, {} junctions, {} lanes, {} seeds)",
                path.display(),
                c.label,
                net.junctions.len(),
                net.lane_count(),
                c.seeds.len()
            ),
            Err(e) => {
                eprintln!("error: {e}");
                first_error.get_or_insert(e);
            }
        }
    }
    first_error.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { scenario, opts } => parse_scenario(scenario).and_then(|c| execute(vec![c], opts)),
        Command::Suite { dir, opts } => load_suite(dir).and_then(|c| execute(c, opts)),
        Command::SolveGame { input, format } => solve_game_cmd(input, *format),
        Command::Validate { scenarios } => validate_cmd(scenarios),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
