mod config;
mod svg;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use kdecomp::bandwidth;
use kdecomp::data::{self, CategoryBinning, DatasetSchema, WeightScheme};
use kdecomp::density::{decompose, ComponentBandwidth, CompositeDensity, KernelScheme, Observation};
use kdecomp::inference::{pearson_test, ShareMatrix};
use kdecomp::{BandwidthRule, KernelFamily};

#[derive(Parser)]
#[command(name = "kdecomp", version, about = "Kernel density decomposition and equality-of-proportions testing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a composite kernel density and sample its pdf/cdf on a grid.
    Density(DensityArgs),
    /// Decompose a density by a label dimension and export component curves.
    Decompose(DecomposeArgs),
    /// Test whether component densities differ from the composite.
    Test(TestArgs),
    /// Render a curve CSV as a standalone SVG chart.
    ExportSvg(ExportSvgArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Normal,
    Knotted,
    Gumbel,
    Weibull,
    WeibullGumbel,
}

impl KernelArg {
    fn scheme(self) -> KernelScheme {
        match self {
            KernelArg::Normal => KernelScheme::Single(KernelFamily::Normal),
            KernelArg::Knotted => KernelScheme::Single(KernelFamily::KnottedNormal),
            KernelArg::Gumbel => KernelScheme::Single(KernelFamily::Gumbel),
            KernelArg::Weibull => KernelScheme::Single(KernelFamily::Weibull),
            KernelArg::WeibullGumbel => KernelScheme::WeibullGumbel,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightsArg {
    Estimate,
    Paper,
}

#[derive(Clone, Copy, ValueEnum)]
enum BinningArg {
    Discount,
    Author,
    Period,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum ComponentBandwidthArg {
    Global,
    PerComponent,
}

#[derive(Args, Clone)]
struct InputArgs {
    /// Input CSV of observations.
    #[arg(long)]
    input: Option<PathBuf>,
    /// key=value config file; command line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Column holding the observation values.
    #[arg(long)]
    value_column: Option<String>,
    /// Column holding the paper identifier.
    #[arg(long)]
    paper_column: Option<String>,
    /// Label mapping dimension=column; repeatable.
    #[arg(long = "label-column", value_name = "DIM=COL")]
    label_columns: Vec<String>,
    /// Column holding the positive-only flag.
    #[arg(long)]
    positive_only_column: Option<String>,
    /// Positive-only default when no flag column is given.
    #[arg(long)]
    default_positive_only: Option<bool>,
    /// Abort on the first malformed row instead of skipping it.
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Clone)]
struct FitArgs {
    #[arg(long, value_enum)]
    kernel: Option<KernelArg>,
    /// silverman | sd | fixed=V
    #[arg(long)]
    bandwidth: Option<String>,
    #[arg(long, value_enum)]
    weights: Option<WeightsArg>,
}

#[derive(Args)]
struct DensityArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    fit: FitArgs,
    /// Evaluation grid lo:hi:count.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    fit: FitArgs,
    /// Label dimension to decompose by.
    #[arg(long)]
    by: Option<String>,
    /// Built-in category binning applied to the dimension.
    #[arg(long, value_enum, default_value = "none")]
    binning: BinningArg,
    #[arg(long, value_enum, default_value = "global")]
    component_bandwidth: ComponentBandwidthArg,
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    fit: FitArgs,
    /// Pre-computed share matrix CSV; replaces raw observations.
    #[arg(long)]
    share_matrix: Option<PathBuf>,
    #[arg(long)]
    by: Option<String>,
    #[arg(long, value_enum, default_value = "none")]
    binning: BinningArg,
    #[arg(long, value_enum, default_value = "global")]
    component_bandwidth: ComponentBandwidthArg,
    /// Number of quantile intervals.
    #[arg(long, default_value_t = 5)]
    quantiles: usize,
    /// Sample-size multiplier of the statistic, or "auto" for the
    /// observation count.
    #[arg(long, default_value = "auto")]
    effective_n: String,
    /// Where to write the share matrix CSV (stdout when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ExportSvgArgs {
    /// Curve CSV produced by `density` or `decompose`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 800)]
    width: u32,
    #[arg(long, default_value_t = 450)]
    height: u32,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Density(args) => cmd_density(args),
        Command::Decompose(args) => cmd_decompose(args),
        Command::Test(args) => cmd_test(args),
        Command::ExportSvg(args) => svg::cmd_export_svg(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

struct Loaded {
    observations: Vec<Observation>,
    weights: Vec<f64>,
    scheme: KernelScheme,
    bandwidth_rule: BandwidthRule,
}

fn parse_grid(grid: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = grid.split(':').collect();
    if parts.len() != 3 {
        bail!("grid must be lo:hi:count, got '{grid}'");
    }
    let lo: f64 = parts[0].parse().context("grid lo")?;
    let hi: f64 = parts[1].parse().context("grid hi")?;
    let count: usize = parts[2].parse().context("grid count")?;
    if count == 0 {
        bail!("grid count must be at least 1");
    }
    if count > 1 && !(hi > lo) {
        bail!("grid needs hi > lo, got {lo}:{hi}");
    }
    Ok((lo, hi, count))
}

fn grid_points(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
}

fn parse_bandwidth_rule(s: &str) -> Result<BandwidthRule> {
    match s {
        "silverman" => Ok(BandwidthRule::Silverman),
        "sd" => Ok(BandwidthRule::SampleStd),
        other => {
            if let Some(v) = other.strip_prefix("fixed=") {
                let v: f64 = v.parse().with_context(|| format!("fixed bandwidth '{v}'"))?;
                Ok(BandwidthRule::Fixed(v))
            } else {
                bail!("bandwidth must be silverman, sd, or fixed=V; got '{other}'")
            }
        }
    }
}

fn build_schema(input: &InputArgs, cfg: &config::Config) -> Result<DatasetSchema> {
    let value_column = input
        .value_column
        .clone()
        .or_else(|| cfg.get("value-column"))
        .unwrap_or_else(|| "value".to_string());
    let mut schema = DatasetSchema::new(value_column);
    schema.paper_id_column = input.paper_column.clone().or_else(|| cfg.get("paper-column"));
    schema.positive_only_column =
        input.positive_only_column.clone().or_else(|| cfg.get("positive-only-column"));
    if let Some(flag) = input.default_positive_only {
        schema.default_positive_only = flag;
    } else if let Some(raw) = cfg.get("default-positive-only") {
        schema.default_positive_only = raw
            .parse()
            .map_err(|_| anyhow!("default-positive-only must be true or false, got '{raw}'"))?;
    }
    let mut label_specs = input.label_columns.clone();
    if label_specs.is_empty() {
        if let Some(raw) = cfg.get("label-column") {
            label_specs = raw.split(',').map(str::to_string).collect();
        }
    }
    for spec in &label_specs {
        let (dim, col) = spec
            .split_once('=')
            .ok_or_else(|| anyhow!("label column must be DIM=COL, got '{spec}'"))?;
        schema.label_columns.insert(dim.to_string(), col.to_string());
    }
    Ok(schema)
}

fn load(input: &InputArgs, fit: &FitArgs) -> Result<Loaded> {
    let cfg = match &input.config {
        Some(path) => config::Config::from_file(path)?,
        None => config::Config::default(),
    };
    let path = input
        .input
        .clone()
        .or_else(|| cfg.get("input").map(PathBuf::from))
        .ok_or_else(|| anyhow!("--input is required"))?;
    let schema = build_schema(input, &cfg)?;
    let (observations, issues) = data::load_csv(&path, &schema, input.strict)
        .with_context(|| format!("loading {}", path.display()))?;
    for issue in &issues {
        eprintln!("warning: line {}: {}", issue.line, issue.message);
    }
    if observations.is_empty() {
        bail!("no valid observations in {}", path.display());
    }
    let weight_scheme = match fit.weights.or_else(|| match cfg.get("weights").as_deref() {
        Some("estimate") => Some(WeightsArg::Estimate),
        Some("paper") => Some(WeightsArg::Paper),
        _ => None,
    }) {
        Some(WeightsArg::Paper) => WeightScheme::PerPaper,
        _ => WeightScheme::PerEstimate,
    };
    let weights = data::vote_weights(&observations, weight_scheme)?;
    let scheme = fit
        .kernel
        .or_else(|| match cfg.get("kernel").as_deref() {
            Some("normal") => Some(KernelArg::Normal),
            Some("knotted") => Some(KernelArg::Knotted),
            Some("gumbel") => Some(KernelArg::Gumbel),
            Some("weibull") => Some(KernelArg::Weibull),
            Some("weibull-gumbel") => Some(KernelArg::WeibullGumbel),
            _ => None,
        })
        .unwrap_or(KernelArg::WeibullGumbel)
        .scheme();
    let bandwidth_spec = fit
        .bandwidth
        .clone()
        .or_else(|| cfg.get("bandwidth"))
        .unwrap_or_else(|| "silverman".to_string());
    let bandwidth_rule = parse_bandwidth_rule(&bandwidth_spec)?;
    Ok(Loaded { observations, weights, scheme, bandwidth_rule })
}

fn output_writer(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn cmd_density(args: DensityArgs) -> Result<()> {
    let loaded = load(&args.input, &args.fit)?;
    let values: Vec<f64> = loaded.observations.iter().map(|o| o.value).collect();
    let h = bandwidth::weighted_bandwidth(loaded.bandwidth_rule, &values, &loaded.weights)?;
    let density =
        CompositeDensity::fit(&loaded.observations, loaded.scheme, h, &loaded.weights)?;
    let grid = args.grid.ok_or_else(|| anyhow!("--grid is required"))?;
    let (lo, hi, count) = parse_grid(&grid)?;
    let mut out = output_writer(&args.output)?;
    writeln!(out, "x,pdf,cdf")?;
    for x in grid_points(lo, hi, count) {
        writeln!(out, "{x},{},{}", density.pdf(x), density.cdf(x))?;
    }
    out.flush()?;
    Ok(())
}

fn apply_binning(
    observations: &mut [Observation],
    binning: BinningArg,
    dimension: &str,
) -> Result<()> {
    let binning = match binning {
        BinningArg::Discount => CategoryBinning::discount(dimension),
        BinningArg::Author => CategoryBinning::author(dimension),
        BinningArg::Period => CategoryBinning::period(dimension),
        BinningArg::None => return Ok(()),
    };
    let counts = data::bin_categories(observations, &binning)?;
    let mut report = String::from("category,count\n");
    for (category, count) in &counts {
        report.push_str(&format!("{category},{count}\n"));
    }
    eprint!("{report}");
    Ok(())
}

fn component_bandwidth(
    arg: ComponentBandwidthArg,
    rule: BandwidthRule,
) -> ComponentBandwidth {
    match arg {
        ComponentBandwidthArg::Global => ComponentBandwidth::Global(rule),
        ComponentBandwidthArg::PerComponent => ComponentBandwidth::PerComponent(rule),
    }
}

fn cmd_decompose(args: DecomposeArgs) -> Result<()> {
    let mut loaded = load(&args.input, &args.fit)?;
    let dimension = args.by.ok_or_else(|| anyhow!("--by is required"))?;
    apply_binning(&mut loaded.observations, args.binning, &dimension)?;
    let d = decompose(
        &loaded.observations,
        &dimension,
        loaded.scheme,
        component_bandwidth(args.component_bandwidth, loaded.bandwidth_rule),
        &loaded.weights,
    )?;
    let grid = args.grid.ok_or_else(|| anyhow!("--grid is required"))?;
    let (lo, hi, count) = parse_grid(&grid)?;
    let mut out = output_writer(&args.output)?;
    writeln!(out, "component,x,pdf")?;
    for component in d.components() {
        for x in grid_points(lo, hi, count) {
            writeln!(out, "{},{x},{}", component.name, component.weight * component.density.pdf(x))?;
        }
    }
    out.flush()?;
    let mut report = String::from("component,weight\n");
    for component in d.components() {
        report.push_str(&format!("{},{}\n", component.name, component.weight));
    }
    eprint!("{report}");
    Ok(())
}

fn cmd_test(args: TestArgs) -> Result<()> {
    let matrix = if let Some(path) = &args.share_matrix {
        let effective_n: f64 = match args.effective_n.as_str() {
            "auto" => bail!("--effective-n auto needs raw observations; give a number with --share-matrix"),
            raw => raw.parse().with_context(|| format!("effective-n '{raw}'"))?,
        };
        let file = std::fs::File::open(path)
            .with_context(|| format!("opening {}", path.display()))?;
        ShareMatrix::from_csv(file, effective_n)?
    } else {
        let mut loaded = load(&args.input, &args.fit)?;
        let dimension = args.by.clone().ok_or_else(|| anyhow!("--by is required"))?;
        apply_binning(&mut loaded.observations, args.binning, &dimension)?;
        let effective_n: f64 = match args.effective_n.as_str() {
            "auto" => loaded.observations.len() as f64,
            raw => raw.parse().with_context(|| format!("effective-n '{raw}'"))?,
        };
        let d = decompose(
            &loaded.observations,
            &dimension,
            loaded.scheme,
            component_bandwidth(args.component_bandwidth, loaded.bandwidth_rule),
            &loaded.weights,
        )?;
        ShareMatrix::from_decomposition(&d, args.quantiles, effective_n)?
    };
    let result = pearson_test(&matrix)?;
    let mut out = output_writer(&args.output)?;
    matrix.to_csv(&mut out)?;
    writeln!(out, "statistic,{:.6}", result.statistic)?;
    writeln!(out, "dof,{}", result.dof)?;
    writeln!(out, "p_value,{:.6}", result.p_value)?;
    out.flush()?;
    Ok(())
}
