use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hygrosim::building::{run, run_observed, BuildingModel};
use hygrosim::output::{write_bench, BenchRow, Rows, TimeSeriesWriter};
use hygrosim::scenario::{Overrides, Scenario, SchemeName};
use hygrosim::validation::{assess, compute_reference, convergence_study, ReferenceOptions};
use hygrosim::{Error, Result};

#[derive(Parser)]
#[command(
    name = "hygrosim",
    version,
    about = "Coupled heat and moisture transfer through building walls and zones"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its time series and report.
    Run {
        #[command(flatten)]
        common: Common,
        /// Also compute the fine-grid reference and report the run's errors against it.
        #[arg(long)]
        reference: bool,
        /// Write every wall node instead of the two surfaces.
        #[arg(long)]
        all_nodes: bool,
    },
    /// Convergence study: error against the reference for each time step.
    Study {
        #[command(flatten)]
        common: Common,
        /// Comma-separated dt* values (at least 4, spanning 2 decades).
        #[arg(long, value_delimiter = ',', required = true)]
        dt_list: Vec<f64>,
    },
    /// Wall-clock and sub-iteration benchmark of several schemes.
    Bench {
        #[command(flatten)]
        common: Common,
        /// Comma-separated schemes to time.
        #[arg(long, value_delimiter = ',', default_value = "df,euler-implicit", value_parser = parse_scheme)]
        schemes: Vec<SchemeName>,
    },
    /// Forward-Euler stability bounds of every wall.
    Cfl {
        #[command(flatten)]
        common: Common,
    },
    /// List the bundled scenarios, or print one of them.
    Scenarios { name: Option<String> },
}

#[derive(Args)]
struct Common {
    /// Bundled scenario name or path to a TOML scenario file.
    scenario: String,
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<SchemeName>,
    #[arg(long)]
    dt_star: Option<f64>,
    #[arg(long)]
    dx_star: Option<f64>,
    /// Fixed-point tolerance of the implicit scheme (default 1e-2·dt*).
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn parse_scheme(s: &str) -> std::result::Result<SchemeName, String> {
    SchemeName::parse(s).map_err(|e| e.to_string())
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            scheme: self.scheme,
            dt_star: self.dt_star,
            dx_star: self.dx_star,
            eta: self.eta,
            horizon: self.horizon,
        }
    }

    fn load(&self) -> Result<(Scenario, BuildingModel)> {
        let scenario = Scenario::resolve(&self.scenario)?;
        let model = scenario.build(&self.overrides())?;
        Ok((scenario, model))
    }

    fn path(&self, scenario: &Scenario, suffix: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out)?;
        Ok(self.out.join(format!("{}.{suffix}", scenario.name)))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        3
    } else if matches!(e, Error::Io(_)) {
        1
    } else {
        2
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run {
            common,
            reference,
            all_nodes,
        } => cmd_run(&common, reference, all_nodes),
        Command::Study { common, dt_list } => cmd_study(&common, &dt_list),
        Command::Bench { common, schemes } => cmd_bench(&common, &schemes),
        Command::Cfl { common } => cmd_cfl(&common),
        Command::Scenarios { name } => cmd_scenarios(name.as_deref()),
    }
}

fn cmd_run(common: &Common, with_reference: bool, all_nodes: bool) -> Result<()> {
    let (scenario, model) = common.load()?;
    let overrides = common.overrides();
    let scheme = overrides.scheme.unwrap_or(scenario.numerics.scheme).label();
    let header = scenario.echo(&model, &overrides);
    print!("{header}");

    let report_path = common.path(&scenario, &format!("{scheme}.report.txt"))?;
    let series_path = common.path(&scenario, &format!("{scheme}.timeseries.csv"))?;
    let mut report = header.clone();
    let _ = writeln!(report, "{}", cfl_text(&model)?.trim_end());

    let zone_names: Vec<String> = scenario.zones.iter().map(|z| z.name.clone()).collect();
    let rows = if all_nodes { Rows::All } else { Rows::Surfaces };
    let mut series = TimeSeriesWriter::new(BufWriter::new(File::create(&series_path)?), rows)?;
    let outcome = run_observed(&model, scenario.numerics.cadence, |s| {
        series.snapshot(&model, &zone_names, s)
    });
    series.flush()?;

    let result = match outcome {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(report, "# FAILED: {e}");
            let _ = writeln!(report, "# partial time series: {}", series_path.display());
            fs::write(&report_path, &report)?;
            eprintln!(
                "wrote partial {} and {}",
                series_path.display(),
                report_path.display()
            );
            return Err(e);
        }
    };

    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "# completed {} steps to t* = {} in {:.3} s; sub-iterations mean {:.3}, max {}",
        result.reports.len(),
        result.last().t_star,
        result.wall_clock,
        result.mean_subiterations(),
        result.max_subiterations()
    );
    if with_reference {
        let opts = ReferenceOptions {
            cadence: scenario.numerics.cadence,
            ..Default::default()
        };
        let reference = compute_reference(&model, &opts)?;
        let errors = assess(&result, &reference);
        match &errors {
            Ok(e) => {
                let _ = writeln!(
                    summary,
                    "# error vs reference ({}x space, {}x time): eps_global = {:.4e} (walls {:.4e}, zones {:.4e}); reference self-check {:.3e}",
                    reference.space_factor,
                    reference.time_factor,
                    e.eps_global,
                    e.eps_walls(),
                    e.eps_zones(),
                    reference.richardson_delta
                );
            }
            Err(e) => {
                let _ = writeln!(summary, "# reference comparison failed: {e}");
            }
        }
        report.push_str(&summary);
        fs::write(&report_path, &report)?;
        print!("{summary}");
        errors?;
    } else {
        report.push_str(&summary);
        fs::write(&report_path, &report)?;
        print!("{summary}");
    }
    println!(
        "# wrote {} and {}",
        series_path.display(),
        report_path.display()
    );
    Ok(())
}

fn cmd_study(common: &Common, dt_list: &[f64]) -> Result<()> {
    let (scenario, model) = common.load()?;
    let opts = ReferenceOptions {
        cadence: scenario.numerics.cadence,
        ..Default::default()
    };
    let study = convergence_study(&model, model.scheme, dt_list, &opts)?;
    let path = common.path(&scenario, &format!("{}.study.csv", model.scheme.name()))?;
    study.write_csv(BufWriter::new(File::create(&path)?))?;
    for r in &study.rows {
        let flag = if r.divergent { " (divergent)" } else { "" };
        println!("dt* = {:.3e}  eps = {:.4e}{flag}", r.dt_star, r.eps_global);
    }
    match study.slope {
        Some(s) => println!("slope = {s:.3}"),
        None => println!("slope: too few convergent points"),
    }
    println!("# wrote {}", path.display());
    Ok(())
}

fn cmd_bench(common: &Common, schemes: &[SchemeName]) -> Result<()> {
    let scenario = Scenario::resolve(&common.scenario)?;
    let mut rows = Vec::new();
    // Sequential on purpose: concurrent runs would distort each other's timings.
    for &scheme in schemes {
        let overrides = Overrides {
            scheme: Some(scheme),
            ..common.overrides()
        };
        let model = scenario.build(&overrides)?;
        let result = run(&model, scenario.numerics.cadence)?;
        let row = BenchRow::of(&result);
        println!(
            "{:<15} {:>9.3} s  mean sub-iterations {:.3}, max {}",
            row.scheme, row.wall_clock_s, row.mean_subiters, row.max_subiters
        );
        rows.push(row);
    }
    if let [first, .., last] = rows.as_slice() {
        println!(
            "{} / {} wall-clock = {:.3}",
            first.scheme,
            last.scheme,
            first.wall_clock_s / last.wall_clock_s
        );
    }
    let path = common.path(&scenario, "bench.csv")?;
    write_bench(BufWriter::new(File::create(&path)?), &rows)?;
    println!("# wrote {}", path.display());
    Ok(())
}

fn cfl_text(model: &BuildingModel) -> Result<String> {
    let t_0 = model.reference.t_0;
    let mut s = String::from("# forward-Euler stability bounds (dt*, and seconds)\n");
    for w in model.cfl_report()? {
        let l = w.limit;
        let _ = writeln!(
            s,
            "#   {}: heat {:.3e} ({:.3} s), moisture {:.3e} ({:.3} s), binding {:.3e}; sampled u in [{}, {}], v in [{}, {}]",
            w.wall,
            l.dt_heat,
            l.dt_heat * t_0,
            l.dt_moisture,
            l.dt_moisture * t_0,
            l.dt(),
            w.u_range.0,
            w.u_range.1,
            w.v_range.0,
            w.v_range.1
        );
    }
    Ok(s)
}

fn cmd_cfl(common: &Common) -> Result<()> {
    let (scenario, model) = common.load()?;
    let text = cfl_text(&model)?;
    print!("{text}");
    let path = common.path(&scenario, "cfl.txt")?;
    fs::write(&path, &text)?;
    println!("# wrote {}", path.display());
    Ok(())
}

fn cmd_scenarios(name: Option<&str>) -> Result<()> {
    match name {
        None => {
            for n in Scenario::bundled_names() {
                let s = Scenario::bundled(n)?;
                println!("{n:<20} {}", s.description);
            }
        }
        Some(n) => match Scenario::bundled_text(n) {
            Some(text) => print!("{text}"),
            None => return Err(Error::Config(format!("no bundled scenario '{n}'"))),
        },
    }
    Ok(())
}
