//! `ilwp` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 format/data error, 3 I/O error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ilwp_core::analyzer;
use ilwp_core::{decode_model, encode_model, Mode};

use crate::error::{Error, Result};
use crate::ilw::{self, measure_sizes, SizeReport};
use crate::report::{self, HeatmapReport, SizeRow, SweepReport};
use crate::sweep::sweep_bits;
use crate::wgt;

#[derive(Debug, Parser)]
#[command(
    name = "ilwp",
    version,
    about = "Inter-layer weight prediction codec for depthwise kernels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compress a .wgt file into an .ilw bitstream.
    Encode(EncodeArgs),
    /// Reconstruct a .wgt file from an .ilw bitstream.
    Decode(IoArgs),
    /// Size, entropy and distribution statistics for one mode and bit width.
    Stats(StatsArgs),
    /// Size breakdown over several bit widths.
    Sweep(SweepArgs),
    /// Best-prediction source layer percentages.
    Heatmap(HeatmapArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Baseline,
    Fss,
    Lss,
    Ill,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Baseline => Mode::Baseline,
            ModeArg::Fss => Mode::Fss,
            ModeArg::Lss => Mode::Lss,
            ModeArg::Ill => Mode::Ill,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct IoArgs {
    input: PathBuf,
    output: Option<PathBuf>,
    /// Output path (alternative to the positional argument).
    #[arg(long = "out", value_name = "PATH")]
    out: Option<PathBuf>,
}

impl IoArgs {
    fn output(&self) -> Result<Option<&Path>> {
        match (&self.output, &self.out) {
            (Some(_), Some(_)) => Err(Error::Usage(
                "give the output either positionally or with --out, not both".into(),
            )),
            (Some(p), None) | (None, Some(p)) => Ok(Some(p)),
            (None, None) => Ok(None),
        }
    }

    fn required_output(&self) -> Result<&Path> {
        self.output()?
            .ok_or_else(|| Error::Usage("missing output path".into()))
    }
}

#[derive(Debug, Args)]
struct EncodeArgs {
    #[arg(long, value_enum, default_value = "ill")]
    mode: ModeArg,
    #[arg(long, default_value = "8")]
    bits: String,
    #[command(flatten)]
    io: IoArgs,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long, value_enum, default_value = "ill")]
    mode: ModeArg,
    #[arg(long, default_value = "8")]
    bits: String,
    /// json: full report; csv: weight and residual histograms.
    #[arg(long, value_enum, default_value = "json")]
    report: ReportFormat,
    /// Histogram bin width for csv reports.
    #[arg(long, default_value_t = 0.005)]
    bin_width: f64,
    #[command(flatten)]
    io: IoArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_enum, default_value = "ill")]
    mode: ModeArg,
    /// Comma-separated bit widths, e.g. 2,3,4,5,6,7,8.
    #[arg(long, default_value = "2,3,4,5,6,7,8")]
    bits: String,
    #[arg(long, value_enum, default_value = "csv")]
    report: ReportFormat,
    #[command(flatten)]
    io: IoArgs,
}

#[derive(Debug, Args)]
struct HeatmapArgs {
    #[arg(long, value_enum, default_value = "json")]
    report: ReportFormat,
    #[command(flatten)]
    io: IoArgs,
}

/// Parses and runs one invocation, returning the process exit code.
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
    match dispatch(cli.command) {
        Ok(Summary {
            line,
            report_on_stdout,
        }) => {
            if report_on_stdout {
                eprintln!("{line}");
            } else {
                println!("{line}");
            }
            0
        }
        Err(e) => {
            eprintln!("ilwp: {e}");
            e.exit_code()
        }
    }
}

/// One-line summary. It goes to stderr when stdout already carries a report.
struct Summary {
    line: String,
    report_on_stdout: bool,
}

impl Summary {
    fn new(line: String, output: Option<&Path>) -> Self {
        Self {
            line,
            report_on_stdout: output.is_none(),
        }
    }
}

fn dispatch(command: Command) -> Result<Summary> {
    match command {
        Command::Encode(args) => encode(args),
        Command::Decode(args) => decode(args),
        Command::Stats(args) => stats(args),
        Command::Sweep(args) => sweep(args),
        Command::Heatmap(args) => heatmap(args),
    }
}

/// Parses `N[,N...]` with every width in 2..=8.
pub fn parse_bit_list(text: &str) -> Result<Vec<u8>> {
    let widths = text
        .split(',')
        .map(|part| {
            let part = part.trim();
            part.parse::<u8>()
                .ok()
                .filter(|b| (2..=8).contains(b))
                .ok_or_else(|| Error::Usage(format!("--bits: '{part}' is not a width in 2..=8")))
        })
        .collect::<Result<Vec<_>>>()?;
    if widths.is_empty() {
        return Err(Error::Usage("--bits: empty list".into()));
    }
    Ok(widths)
}

fn single_bits(text: &str) -> Result<u8> {
    match parse_bit_list(text)?.as_slice() {
        [b] => Ok(*b),
        _ => Err(Error::Usage(format!(
            "--bits: expected one width, got '{text}'"
        ))),
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn model_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn load_store(path: &Path) -> Result<ilwp_core::WeightStore> {
    let bytes = read_file(path)?;
    wgt::load_weight_store(&bytes, &model_name(path)).map_err(|e| Error::file(path, e))
}

/// Writes via a temporary file in the target directory and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn emit(output: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match output {
        Some(path) => write_atomic(path, bytes),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn size_summary(mode: Mode, bits: u8, sizes: &SizeReport) -> String {
    format!(
        "mode={mode} bits={bits} texture_bits={} non_texture_bits={} header_bits={} total_bits={} total_bytes={} total_kb={:.3}",
        sizes.texture_bits,
        sizes.non_texture_bits,
        sizes.header_bits,
        sizes.total_bits,
        sizes.total_bits / 8,
        sizes.total_kb()
    )
}

fn encode(args: EncodeArgs) -> Result<Summary> {
    let bits = single_bits(&args.bits)?;
    let mode = Mode::from(args.mode);
    let output = args.io.required_output()?;
    let store = load_store(&args.io.input)?;
    let enc = encode_model(&store, mode, bits).map_err(|e| Error::file(&args.io.input, e))?;
    let bytes = ilw::serialize(&enc)?;
    write_atomic(output, &bytes)?;
    Ok(Summary::new(
        format!("encode {}", size_summary(mode, bits, &measure_sizes(&enc))),
        Some(output),
    ))
}

fn decode(args: IoArgs) -> Result<Summary> {
    let output = args.required_output()?;
    let bytes = read_file(&args.input)?;
    let enc = ilw::parse(&bytes).map_err(|e| Error::file(&args.input, e))?;
    let store = decode_model(&enc).map_err(|e| Error::file(&args.input, e))?;
    write_atomic(output, &wgt::save_weight_store(&store)?)?;
    Ok(Summary::new(
        format!(
            "decode {} layers={}",
            size_summary(enc.mode, enc.bits, &measure_sizes(&enc)),
            store.layer_count()
        ),
        Some(output),
    ))
}

fn stats(args: StatsArgs) -> Result<Summary> {
    let bits = single_bits(&args.bits)?;
    let mode = Mode::from(args.mode);
    let output = args.io.output()?;
    let store = load_store(&args.io.input)?;
    let report = report::stats_report(&store, mode, bits).map_err(|e| match e {
        Error::Codec(source) => Error::file(&args.io.input, source),
        other => other,
    })?;
    let bytes = match args.report {
        ReportFormat::Json => report::to_json(&report)?,
        ReportFormat::Csv => {
            let weights: Vec<f64> = store
                .layers()
                .iter()
                .flat_map(|l| l.iter_values().map(f64::from))
                .collect();
            let residuals = analyzer::analysis_residuals(&store, mode)
                .map_err(|e| Error::file(&args.io.input, e))?;
            let w = analyzer::residual_histogram(&weights, args.bin_width)?;
            let r = analyzer::residual_histogram(&residuals, args.bin_width)?;
            report::histogram_csv(&[("weights", w), ("residuals", r)], args.bin_width)?
        }
    };
    emit(output, &bytes)?;
    let sizes = SizeReport {
        texture_bits: report.sizes.texture_bits,
        non_texture_bits: report.sizes.non_texture_bits,
        header_bits: report.sizes.header_bits,
        total_bits: report.sizes.total_bits,
    };
    Ok(Summary::new(
        format!(
            "stats {} zero_fraction={:.4}",
            size_summary(mode, bits, &sizes),
            report.symbols.zero_fraction
        ),
        output,
    ))
}

fn sweep(args: SweepArgs) -> Result<Summary> {
    let bit_list = parse_bit_list(&args.bits)?;
    let mode = Mode::from(args.mode);
    let output = args.io.output()?;
    let store = load_store(&args.io.input)?;
    let rows: Vec<SizeRow> = sweep_bits(&store, mode, &bit_list)
        .map_err(|e| Error::file(&args.io.input, e))?
        .iter()
        .map(|r| SizeRow::new(r.bits, &r.sizes))
        .collect();
    let bytes = match args.report {
        ReportFormat::Csv => report::sizes_csv(&rows)?,
        ReportFormat::Json => report::to_json(&SweepReport {
            model: store.model_name.clone(),
            mode: mode.name().into(),
            rows: rows.clone(),
        })?,
    };
    emit(output, &bytes)?;
    let widths: Vec<String> = rows.iter().map(|r| r.bits.to_string()).collect();
    Ok(Summary::new(
        format!(
            "sweep mode={mode} bits={} rows={}",
            widths.join(","),
            rows.len()
        ),
        output,
    ))
}

fn heatmap(args: HeatmapArgs) -> Result<Summary> {
    let output = args.io.output()?;
    let store = load_store(&args.io.input)?;
    let heatmap =
        analyzer::prediction_source_heatmap(&store).map_err(|e| Error::file(&args.io.input, e))?;
    let bytes = match args.report {
        ReportFormat::Json => report::to_json(&HeatmapReport::new(&store.model_name, &heatmap))?,
        ReportFormat::Csv => report::heatmap_csv(&heatmap)?,
    };
    emit(output, &bytes)?;
    let share = heatmap.previous_layer_share();
    let mean = share.iter().sum::<f64>() / share.len() as f64;
    Ok(Summary::new(
        format!(
            "heatmap layers={} mean_previous_layer_percent={mean:.2}",
            store.layer_count()
        ),
        output,
    ))
}
