use std::fs::File;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use benford_severity::digits::{ColumnSelector, InputLayout, ParseOptions};
use benford_severity::mc::{simulate, SimulationSpec};
use benford_severity::report::{
    analyze_counts, curve_to_csv, curve_to_text, load_counts, parse_grid, plot_rows, severity_curve,
    simulation_to_csv, simulation_to_text, write_plot_csv, CalibrationReport,
};
use benford_severity::severity::{default_delta_star, delta_star, n_min_for, CalibrationConfig};
use benford_severity::{DigitSystem, Error, Result};

#[derive(Parser)]
#[command(name = "benford", version, about = "Benford's law conformity tests with severity evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test a dataset for conformity and grade discrepancy claims.
    Analyze(AnalyzeArgs),
    /// Compute the discrepancy benchmark δ* from a MAD threshold.
    Calibrate(CalibrateArgs),
    /// Check the asymptotic MAD distribution by simulation.
    Simulate(SimulateArgs),
    /// Severity as a function of δ* for a given test outcome.
    SeverityCurve(CurveArgs),
    /// Write observed vs Benford frequencies per digit as CSV.
    Plotdata(PlotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Args)]
struct InputArgs {
    /// Input file (`-` for stdin).
    file: PathBuf,
    /// Column holding the values: a 0-based index or a header name.
    #[arg(long)]
    column: Option<String>,
    /// Field delimiter; sniffed from the first line when omitted.
    #[arg(long)]
    delimiter: Option<char>,
    /// Input uses `,` as the decimal mark.
    #[arg(long)]
    decimal_comma: bool,
    /// 1 for first digit, 2 for first-two digits.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    digits: u8,
}

impl InputArgs {
    fn system(&self) -> DigitSystem {
        DigitSystem::from_width(self.digits).expect("validated by clap")
    }

    fn options(&self) -> Result<ParseOptions> {
        let layout = match self.delimiter {
            None => InputLayout::Auto,
            Some(c) if c.is_ascii() => InputLayout::Delimited(c as u8),
            Some(c) => return Err(Error::Config(format!("delimiter must be ASCII, got {c:?}"))),
        };
        Ok(ParseOptions {
            layout,
            column: self.column.as_deref().map(|c| c.parse::<ColumnSelector>().unwrap()),
            decimal_comma: self.decimal_comma,
        })
    }

    fn open(&self) -> Result<Box<dyn Read>> {
        if self.file.as_os_str() == "-" {
            Ok(Box::new(io::stdin()))
        } else {
            Ok(Box::new(File::open(&self.file)?))
        }
    }

    fn label(&self) -> String {
        self.file.display().to_string()
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Discrepancy benchmark δ* (defaults: 0.00321 first digit, 0.00037 first-two).
    #[arg(long)]
    delta_star: Option<f64>,
    /// Chi-square noncentrality benchmark ψ*; enables the chi-square severity.
    #[arg(long)]
    psi_star: Option<f64>,
    /// Dataset label in the report (defaults to the file name).
    #[arg(long)]
    label: Option<String>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    digits: u8,
    /// MAD threshold t (defaults to the close-conformity bound).
    #[arg(long)]
    threshold: Option<f64>,
    /// Smallest n in the averaging range (defaults to 5 expected per digit).
    #[arg(long)]
    nmin: Option<u64>,
    #[arg(long, default_value_t = 25_000)]
    nmax: u64,
    /// Expected-count floor used to derive the default n_min.
    #[arg(long, default_value_t = 5.0)]
    min_expected: f64,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    digits: u8,
    #[arg(long, default_value_t = 20_000)]
    n: u64,
    #[arg(long, default_value_t = 2_000)]
    reps: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    digits: u8,
    /// Sample size of the test.
    #[arg(long)]
    n: u64,
    /// Observed standardized excess MAD.
    #[arg(long, allow_hyphen_values = true)]
    tilde_delta: f64,
    /// δ* grid as start:end:points (default 0 to twice the default δ*, 21 points).
    #[arg(long, conflicts_with = "at")]
    grid: Option<String>,
    /// Explicit comma-separated δ* values.
    #[arg(long, value_delimiter = ',')]
    at: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct PlotArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Output CSV path.
    #[arg(long, short)]
    out: PathBuf,
}

fn emit(text: &str) -> Result<()> {
    let mut stdout = io::stdout().lock();
    stdout.write_all(text.as_bytes())?;
    if !text.ends_with('\n') {
        stdout.write_all(b"\n")?;
    }
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    let system = args.input.system();
    let counts = load_counts(args.input.open()?, &args.input.options()?, system)?;
    let label = args.label.clone().unwrap_or_else(|| args.input.label());
    let report = analyze_counts(&label, &counts, args.delta_star, args.psi_star)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    match args.format {
        Format::Text => emit(&report.to_text()),
        Format::Json => emit(&report.to_json()?),
        Format::Csv => emit(&report.to_csv()?),
    }
}

fn calibrate(args: CalibrateArgs) -> Result<()> {
    let system = DigitSystem::from_width(args.digits)?;
    let mut config = CalibrationConfig::default_for(system);
    config.min_expected = args.min_expected;
    config.n_min = match args.nmin {
        Some(n) => n,
        None => n_min_for(system, args.min_expected)?,
    };
    config.n_max = args.nmax;
    if let Some(t) = args.threshold {
        config.threshold = t;
    }
    let report = CalibrationReport::new(config.clone(), delta_star(&config)?);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    match args.format {
        Format::Text => emit(&report.to_text()),
        Format::Json => emit(&serde_json::to_string_pretty(&report)?),
        Format::Csv => emit(&report.to_csv()?),
    }
}

fn run_simulation(args: SimulateArgs) -> Result<()> {
    let spec = SimulationSpec {
        system: DigitSystem::from_width(args.digits)?,
        n: args.n,
        reps: args.reps,
        seed: args.seed,
    };
    let report = simulate(&spec)?;
    match args.format {
        Format::Text => emit(&simulation_to_text(&report)),
        Format::Json => emit(&serde_json::to_string_pretty(&report)?),
        Format::Csv => emit(&simulation_to_csv(&report)?),
    }
}

fn curve(args: CurveArgs) -> Result<()> {
    let system = DigitSystem::from_width(args.digits)?;
    let grid = match (&args.grid, &args.at) {
        (_, Some(values)) => values.clone(),
        (Some(spec), None) => parse_grid(spec)?,
        (None, None) => parse_grid(&format!("0:{}:21", 2.0 * default_delta_star(system)))?,
    };
    let points = severity_curve(system, args.n, args.tilde_delta, &grid)?;
    match args.format {
        Format::Text => emit(&curve_to_text(system, args.n, args.tilde_delta, &points)),
        Format::Json => emit(&serde_json::to_string_pretty(&points)?),
        Format::Csv => emit(&curve_to_csv(&points)?),
    }
}

fn plotdata(args: PlotArgs) -> Result<()> {
    let system = args.input.system();
    let counts = load_counts(args.input.open()?, &args.input.options()?, system)?;
    // Rows are computed before the file is created so an empty input leaves nothing behind.
    let rows = plot_rows(&counts)?;
    write_plot_csv(&rows, File::create(&args.out)?)?;
    eprintln!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Simulate(a) => run_simulation(a),
        Command::SeverityCurve(a) => curve(a),
        Command::Plotdata(a) => plotdata(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
