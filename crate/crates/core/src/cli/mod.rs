//! Command-line front end: `spellkit extract|fit|gof|trend|report`.

mod io;
mod pipeline;
mod synthetic;
mod tables;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use io::{parse_series, parse_series_reader, parse_series_str, write_series_csv, ParsedSeries};
pub use pipeline::{
    exit_code, run_pipeline, CumfreqEntry, CurvePoint, GofEntry, InputSummary, LawReport, MethodChoice, MethodReport,
    PeriodReport, PipelineConfig, PipelineOutput, QuantileEntry, RatioEntry, SelectionReport, Stages, StationReport,
    TaskError, ToolInfo, VariableReport, SCHEMA_VERSION,
};
pub use synthetic::{SeasonLaws, SyntheticStation};
pub use tables::{emit_plot_tables, PlotTable};

use crate::error::{Error, Result};
use crate::extraction::{CensorPolicy, SeasonRule};
use crate::sample::{Period, Variable};

pub const THREADS_ENV: &str = "SPELLKIT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "spellkit", version, about = "Wet/dry spell and inter-arrival time modelling of daily rainfall")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract it, ws, ds, wch and dch samples.
    Extract(CommonArgs),
    /// Select a Lerch-family model for every variable.
    Fit(CommonArgs),
    /// Model selection plus Monte-Carlo goodness of fit.
    Gof(CommonArgs),
    /// Mann-Kendall trend tests and spell diagnostics.
    Trend(CommonArgs),
    /// Full pipeline with both modelling methods and plot tables.
    Report(CommonArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SeasonArg {
    Year,
    S1,
    S2,
    All,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Dm,
    Im,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RuleArg {
    Start,
    End,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// CSV with header `date,depth_mm`; `NA` or empty marks missing days.
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    /// Rainy-day threshold in millimetres (inclusive).
    #[arg(long, value_name = "MM", default_value_t = 1.0)]
    threshold: f64,
    #[arg(long, value_enum, default_value = "all")]
    season: SeasonArg,
    #[arg(long, value_enum, default_value = "both")]
    method: MethodArg,
    #[arg(long, value_name = "N", default_value_t = 1)]
    seed: u64,
    /// Monte-Carlo replicates for goodness of fit.
    #[arg(long, value_name = "N", default_value_t = 3000)]
    replicates: usize,
    /// Significance level for model selection.
    #[arg(long, value_name = "P", default_value_t = 0.05)]
    alpha: f64,
    /// Spread isolated low-count tail values before the χ² test.
    #[arg(long)]
    smooth_outliers: bool,
    /// Let the exponent s take negative values.
    #[arg(long)]
    allow_negative_s: bool,
    /// Refit the model on every goodness-of-fit replicate.
    #[arg(long)]
    bootstrap_refit: bool,
    /// Drop spells and chains truncated by record edges or missing days.
    #[arg(long)]
    exclude_censored: bool,
    /// Day that assigns a spell to a season.
    #[arg(long, value_enum, default_value = "start")]
    season_rule: RuleArg,
    /// Station label; defaults to the input file stem.
    #[arg(long)]
    station: Option<String>,
    /// Output directory; without it the JSON report goes to stdout.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn config(&self, stages: Stages) -> PipelineConfig {
        PipelineConfig {
            threshold: self.threshold,
            periods: match self.season {
                SeasonArg::Year => vec![Period::Year],
                SeasonArg::S1 => vec![Period::S1],
                SeasonArg::S2 => vec![Period::S2],
                SeasonArg::All => vec![Period::Year, Period::S1, Period::S2],
            },
            season_rule: match self.season_rule {
                RuleArg::Start => SeasonRule::ByStart,
                RuleArg::End => SeasonRule::ByEnd,
            },
            censored: if self.exclude_censored { CensorPolicy::Exclude } else { CensorPolicy::Include },
            method: match self.method {
                MethodArg::Dm => MethodChoice::Dm,
                MethodArg::Im => MethodChoice::Im,
                MethodArg::Both => MethodChoice::Both,
            },
            seed: self.seed,
            replicates: self.replicates,
            alpha: self.alpha,
            smooth_outliers: self.smooth_outliers,
            allow_negative_s: self.allow_negative_s,
            bootstrap_refit: self.bootstrap_refit,
            stages,
            ..PipelineConfig::default()
        }
    }

    fn station(&self) -> String {
        self.station.clone().unwrap_or_else(|| {
            self.input
                .file_stem()
                .map_or_else(|| "station".into(), |s| s.to_string_lossy().into_owned())
        })
    }
}

/// Parses `SPELLKIT_THREADS`; `None` when unset.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::invalid(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

fn samples_csv(output: &PipelineOutput) -> String {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["period", "variable", "order", "value"]).expect("in-memory write");
    for p in &output.extraction.periods {
        for &v in &Variable::ALL {
            for (i, x) in p.get(v).values().iter().enumerate() {
                wtr.write_record([p.period.name(), v.name().into(), (i + 1).to_string(), x.to_string()])
                    .expect("in-memory write");
            }
        }
    }
    String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn execute(name: &str, args: &CommonArgs, stages: Stages) -> Result<i32> {
    let cfg = args.config(stages);
    cfg.validate()?;
    let parsed = parse_series(&args.input)?;
    if parsed.filled_days > 0 {
        eprintln!("warning: {} missing calendar days inserted", parsed.filled_days);
    }
    let output = run_pipeline(&parsed.series, parsed.filled_days, &args.station(), &cfg)?;
    let report = &output.report;
    for e in &report.errors {
        let var = e.variable.map_or_else(String::new, |v| format!("/{v}"));
        let method = e.method.map_or_else(String::new, |m| format!("/{}", m.name()));
        eprintln!("error: {}{var}{method} {}: {}", e.period, e.task, e.message);
    }
    match &args.out {
        None => print!("{}", report.to_json()),
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
            write(dir, &format!("{name}.json"), &report.to_json())?;
            if name == "extract" {
                write(dir, "samples.csv", &samples_csv(&output))?;
            }
            if stages.methods {
                for t in emit_plot_tables(report) {
                    write(dir, t.name, &t.csv)?;
                }
            }
        }
    }
    Ok(report.exit_code())
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (name, args, stages) = match &cli.command {
        Command::Extract(a) => ("extract", a, Stages::EXTRACT),
        Command::Fit(a) => ("fit", a, Stages::FIT),
        Command::Gof(a) => ("gof", a, Stages::GOF),
        Command::Trend(a) => ("trend", a, Stages::TREND),
        Command::Report(a) => ("report", a, Stages::ALL),
    };
    let result = threads_from_env().and_then(|threads| match threads {
        None => execute(name, args, stages),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid(e.to_string()))?
            .install(|| execute(name, args, stages)),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
