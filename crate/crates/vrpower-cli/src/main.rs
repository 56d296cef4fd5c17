//! `vrpower` — fit, validate, prune, and interrogate linear power models
//! of VR video playback from power-meter traces.
//!
//! Every subcommand that writes a file also writes a `<name>.manifest.json`
//! sidecar recording parameters and input/output digests. Errors print as
//! `error[<category>]: <message>` on stderr and exit nonzero.

mod manifest;
mod session;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use manifest::RunManifest;
use session::IdleSource;
use vrpower::dataset::{load_measurements, write_measurements, Measurement, ModelSpec};
use vrpower::evaluation::{
    contribution_breakdown, contributions, cross_validate, error_metrics, estimate_savings_with_power,
    prune_report, PruneMode, PruneOptions, ThresholdKind,
};
use vrpower::solver::{fit, Bounds, PowerModel};
use vrpower::synth::{generate, GroundTruth, NoiseModel, SynthConfig};
use vrpower::trace::WindowSpec;
use vrpower::{Error, Result};

#[derive(Parser)]
#[command(name = "vrpower", version, about = "Power models for VR video playback")]
struct Cli {
    /// Trace window start, seconds after the first sample.
    #[arg(long, global = true, default_value_t = vrpower::trace::DEFAULT_WINDOW_START_S)]
    window_start: f64,
    /// Trace window duration, seconds.
    #[arg(long, global = true, default_value_t = vrpower::trace::DEFAULT_WINDOW_DURATION_S)]
    window_dur: f64,
    /// Parameter bounds applied when fitting.
    #[arg(long, global = true, value_enum, default_value_t = BoundsArg::None)]
    bounds: BoundsArg,
    /// Pruning threshold (percentage points of cross-validated mean error,
    /// or percent growth with --relative).
    #[arg(long, global = true, default_value_t = 0.5)]
    threshold: f64,
    /// Worker threads for cross-validation folds (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for synthetic-data generation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BoundsArg {
    /// Unbounded least squares.
    None,
    /// Constrain every parameter to be >= 0.
    Nonneg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Evaluate each removal against the full baseline.
    OneAtATime,
    /// Repeatedly remove the cheapest variable.
    Sequential,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce a session of power-meter traces to net mean-power measurements.
    Ingest(IngestArgs),
    /// Fit a power model to a measurement file.
    Fit(FitArgs),
    /// Leave-one-sequence-out cross-validation of a variable set.
    Cv(CvArgs),
    /// Drop variables whose removal barely changes cross-validated error.
    Prune(PruneArgs),
    /// Apply a fitted model to measurements and report per-row errors.
    Predict(PredictArgs),
    /// Worst-case share of each model term in the measured power.
    Contrib(ContribArgs),
    /// Predicted power saving of switching frame resolution.
    Savings(SavingsArgs),
    /// Generate a synthetic measurement set with known ground truth.
    Synth(SynthArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Session CSV: trace_file plus sequence/setting columns.
    #[arg(long)]
    session: PathBuf,
    /// Idle power in watts (takes precedence over --idle-trace).
    #[arg(long)]
    idle_power: Option<f64>,
    /// Idle trace, reduced over the same window.
    #[arg(long)]
    idle_trace: Option<PathBuf>,
    /// Output measurement CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Measurement CSV.
    #[arg(long)]
    data: PathBuf,
    /// Variable set: "advanced", "simplified", or comma-separated tags.
    #[arg(long, default_value = "advanced")]
    spec: String,
    /// Variable set from a JSON spec file (overrides --spec).
    #[arg(long, conflicts_with = "spec")]
    spec_file: Option<PathBuf>,
    /// Output model JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CvArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "advanced")]
    spec: String,
    #[arg(long, conflicts_with = "spec")]
    spec_file: Option<PathBuf>,
    /// Output per-measurement report CSV.
    #[arg(long)]
    out: PathBuf,
    /// Also write per-fold parameters to this CSV.
    #[arg(long)]
    folds_out: Option<PathBuf>,
}

#[derive(Args)]
struct PruneArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "advanced")]
    spec: String,
    #[arg(long, conflicts_with = "spec")]
    spec_file: Option<PathBuf>,
    /// Pruning strategy.
    #[arg(long, value_enum, default_value_t = ModeArg::OneAtATime)]
    mode: ModeArg,
    /// Interpret --threshold as percent growth of the baseline error
    /// instead of absolute percentage points.
    #[arg(long)]
    relative: bool,
    /// Output spec JSON holding the retained variables.
    #[arg(long)]
    out: PathBuf,
    /// Also write the per-variable audit to this CSV.
    #[arg(long)]
    report_out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    /// Fitted model JSON.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Output per-measurement estimate CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ContribArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Output worst-case-share CSV.
    #[arg(long)]
    out: PathBuf,
    /// Also write the full signed per-term wattage split to this CSV.
    #[arg(long)]
    breakdown_out: Option<PathBuf>,
}

#[derive(Args)]
struct SavingsArgs {
    /// Fitted model JSON.
    #[arg(long)]
    model: PathBuf,
    /// Source resolution as WxH, e.g. 3840x2160.
    #[arg(long, value_parser = parse_resolution)]
    from: (u32, u32),
    /// Target resolution as WxH.
    #[arg(long, value_parser = parse_resolution)]
    to: (u32, u32),
    /// Reference power in watts for expressing the saving relatively.
    #[arg(long)]
    reference_power: Option<f64>,
    /// Optionally write the estimate as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Output measurement CSV.
    #[arg(long)]
    out: PathBuf,
    /// Also write the generating parameters as a model JSON.
    #[arg(long)]
    ground_truth_out: Option<PathBuf>,
    /// Standard deviation of multiplicative gaussian noise (0 = noiseless).
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Generate from this model JSON instead of the built-in parameters.
    #[arg(long)]
    ground_truth: Option<PathBuf>,
}

fn parse_resolution(text: &str) -> std::result::Result<(u32, u32), String> {
    let (w, h) = text
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got {text:?}"))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<u32>()
            .map_err(|e| format!("bad dimension {s:?}: {e}"))
    };
    Ok((parse(w)?, parse(h)?))
}

fn main() -> ExitCode {
    // Die quietly when a downstream pipe closes (e.g. `vrpower ... | head`)
    // instead of panicking on the failed write.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(cli, a),
        Command::Fit(a) => cmd_fit(cli, a),
        Command::Cv(a) => cmd_cv(cli, a),
        Command::Prune(a) => cmd_prune(cli, a),
        Command::Predict(a) => cmd_predict(cli, a),
        Command::Contrib(a) => cmd_contrib(cli, a),
        Command::Savings(a) => cmd_savings(cli, a),
        Command::Synth(a) => cmd_synth(cli, a),
    }
}

fn read_text(path: &Path, what: &str) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(format!("reading {what} {}", path.display()), e))
}

fn write_text(path: &Path, what: &str, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(format!("writing {what} {}", path.display()), e))
}

fn resolve_spec(tags: &str, file: Option<&Path>) -> Result<ModelSpec> {
    match file {
        Some(p) => ModelSpec::from_json(&read_text(p, "spec file")?),
        None => ModelSpec::parse_tags(tags),
    }
}

fn bounds_for(arg: BoundsArg, spec: &ModelSpec) -> Option<Bounds> {
    match arg {
        BoundsArg::None => None,
        BoundsArg::Nonneg => Some(Bounds::non_negative(spec.param_count())),
    }
}

fn bounds_name(arg: BoundsArg) -> &'static str {
    match arg {
        BoundsArg::None => "none",
        BoundsArg::Nonneg => "nonneg",
    }
}

fn load_data(path: &Path) -> Result<Vec<Measurement>> {
    load_measurements(&read_text(path, "measurement file")?)
}

fn load_model(path: &Path) -> Result<PowerModel> {
    PowerModel::from_json(&read_text(path, "model file")?)
}

fn cmd_ingest(cli: &Cli, args: &IngestArgs) -> Result<()> {
    let window = WindowSpec::new(cli.window_start, cli.window_dur)?;
    let idle = match (args.idle_power, &args.idle_trace) {
        (Some(w), _) => IdleSource::Scalar(w),
        (None, Some(p)) => IdleSource::Trace(p.clone()),
        (None, None) => {
            return Err(Error::Config(
                "an idle source is required: pass --idle-power or --idle-trace".into(),
            ))
        }
    };

    let rows = session::load_session(&args.session)?;
    let (measurements, idle_w) = session::reduce_session(&rows, &window, &idle)?;
    write_text(&args.out, "measurement file", &write_measurements(&measurements))?;

    let mut m = RunManifest::new("ingest");
    m.param("window_start_s", cli.window_start);
    m.param("window_dur_s", cli.window_dur);
    m.param("idle_power_w", idle_w);
    m.input(&args.session)?;
    if let IdleSource::Trace(p) = &idle {
        m.input(p)?;
    }
    for row in &rows {
        m.input(&row.trace_path)?;
    }
    m.output(&args.out)?;
    m.write_next_to(&args.out)?;

    println!(
        "reduced {} trace(s) over [{}, {}] s after trace start; idle {:.4} W",
        measurements.len(),
        cli.window_start,
        cli.window_start + cli.window_dur,
        idle_w
    );
    println!("{:<24} {:>4} {:>12}", "sequence", "crf", "net power");
    for meas in &measurements {
        println!(
            "{:<24} {:>4} {:>10.4} W",
            meas.sequence.name, meas.sequence.crf, meas.power
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_fit(cli: &Cli, args: &FitArgs) -> Result<()> {
    let spec = resolve_spec(&args.spec, args.spec_file.as_deref())?;
    let data = load_data(&args.data)?;
    let design = vrpower::dataset::DesignMatrix::build(&data, &spec)?;
    let model = fit(&design, bounds_for(cli.bounds, &spec).as_ref())?;
    write_text(&args.out, "model file", &model.to_json()?)?;

    let mut m = RunManifest::new("fit");
    m.param("spec", spec.to_tag_list());
    m.param("bounds", bounds_name(cli.bounds));
    m.input(&args.data)?;
    if let Some(p) = &args.spec_file {
        m.input(p)?;
    }
    m.output(&args.out)?;
    m.write_next_to(&args.out)?;

    let d = model.diagnostics();
    println!(
        "fitted {}-parameter model on {} measurement(s)",
        spec.param_count(),
        d.n_train
    );
    println!("{:<10} {:>16} unit", "term", "value");
    let raw = model.params_raw();
    for (i, value) in raw.iter().enumerate() {
        let unit = if i == 0 {
            "W"
        } else {
            spec.variables()[i - 1].raw_unit()
        };
        println!("{:<10} {:>16.9e} {unit}", spec.param_label(i), value);
    }
    println!("residual sum of squares {:.6e} W^2", d.rss);
    warn_negative_params(&model);
    println!("wrote {}", args.out.display());
    Ok(())
}

/// A fitted coefficient below zero usually means collinear data rather than
/// power generation; say so instead of leaving it to be found in a report.
fn warn_negative_params(model: &PowerModel) {
    for (i, p) in model.params_raw().iter().enumerate() {
        if *p < 0.0 {
            eprintln!(
                "warning: parameter {} is negative ({p:.6e}); the term reduces \
                 predicted power, check the design for collinearity",
                model.spec().param_label(i)
            );
        }
    }
}

fn cmd_cv(cli: &Cli, args: &CvArgs) -> Result<()> {
    let spec = resolve_spec(&args.spec, args.spec_file.as_deref())?;
    let data = load_data(&args.data)?;
    let report = cross_validate(&data, &spec, bounds_for(cli.bounds, &spec).as_ref(), cli.jobs)?;
    write_text(&args.out, "report", &report.to_csv())?;
    if let Some(p) = &args.folds_out {
        write_text(p, "fold report", &report.folds_csv())?;
    }

    let mut m = RunManifest::new("cv");
    m.param("spec", spec.to_tag_list());
    m.param("bounds", bounds_name(cli.bounds));
    if let Some(j) = cli.jobs {
        m.param("jobs", j);
    }
    m.input(&args.data)?;
    if let Some(p) = &args.spec_file {
        m.input(p)?;
    }
    m.output(&args.out)?;
    if let Some(p) = &args.folds_out {
        m.output(p)?;
    }
    m.write_next_to(&args.out)?;

    print!("{}", report.to_table());
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_prune(cli: &Cli, args: &PruneArgs) -> Result<()> {
    let spec = resolve_spec(&args.spec, args.spec_file.as_deref())?;
    let data = load_data(&args.data)?;
    let options = PruneOptions {
        threshold: cli.threshold,
        kind: if args.relative {
            ThresholdKind::RelativeGrowth
        } else {
            ThresholdKind::AbsolutePoints
        },
        mode: match args.mode {
            ModeArg::OneAtATime => PruneMode::OneAtATime,
            ModeArg::Sequential => PruneMode::Sequential,
        },
        bounds: bounds_for(cli.bounds, &spec),
        jobs: cli.jobs,
    };
    let report = prune_report(&data, &spec, &options)?;
    write_text(&args.out, "spec file", &report.pruned.to_json())?;
    if let Some(p) = &args.report_out {
        write_text(p, "prune report", &report.to_csv())?;
    }

    let mut m = RunManifest::new("prune");
    m.param("spec", spec.to_tag_list());
    m.param("threshold", cli.threshold);
    m.param(
        "threshold_kind",
        if args.relative { "relative-growth" } else { "absolute-points" },
    );
    m.param(
        "mode",
        match args.mode {
            ModeArg::OneAtATime => "one-at-a-time",
            ModeArg::Sequential => "sequential",
        },
    );
    m.param("bounds", bounds_name(cli.bounds));
    m.input(&args.data)?;
    if let Some(p) = &args.spec_file {
        m.input(p)?;
    }
    m.output(&args.out)?;
    if let Some(p) = &args.report_out {
        m.output(p)?;
    }
    m.write_next_to(&args.out)?;

    print!("{}", report.to_table());
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_predict(cli: &Cli, args: &PredictArgs) -> Result<()> {
    let _ = cli;
    let model = load_model(&args.model)?;
    let data = load_data(&args.data)?;

    let mut csv = String::from("index,sequence,measured_w,estimated_w,rel_error\n");
    let mut measured = Vec::with_capacity(data.len());
    let mut estimated = Vec::with_capacity(data.len());
    for (i, meas) in data.iter().enumerate() {
        meas.validate()?;
        let est = model.predict(meas);
        if est < 0.0 {
            eprintln!(
                "warning: measurement {i} (\"{}\"): predicted power {est:.4} W is negative",
                meas.sequence.name
            );
        }
        if meas.power <= 0.0 {
            return Err(Error::DivisionByZero(format!(
                "measurement {i} (\"{}\") has nonpositive measured power; \
                 relative errors are undefined",
                meas.sequence.name
            )));
        }
        let rel = (est - meas.power) / meas.power;
        csv.push_str(&format!(
            "{i},{},{},{},{}\n",
            meas.sequence.name, meas.power, est, rel
        ));
        measured.push(meas.power);
        estimated.push(est);
    }
    write_text(&args.out, "prediction report", &csv)?;

    let mut m = RunManifest::new("predict");
    m.input(&args.model)?;
    m.input(&args.data)?;
    m.output(&args.out)?;
    m.write_next_to(&args.out)?;

    let (mean, max) = error_metrics(&measured, &estimated)?;
    println!(
        "predicted {} measurement(s): mean relative error {:.4}%, max {:.4}%",
        data.len(),
        mean * 100.0,
        max * 100.0
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_contrib(cli: &Cli, args: &ContribArgs) -> Result<()> {
    let _ = cli;
    let model = load_model(&args.model)?;
    let data = load_data(&args.data)?;
    let report = contributions(&model, &data)?;
    write_text(&args.out, "contribution report", &report.to_csv())?;
    if let Some(p) = &args.breakdown_out {
        let breakdown = contribution_breakdown(&model, &data)?;
        write_text(p, "breakdown report", &breakdown.to_csv())?;
    }

    let mut m = RunManifest::new("contrib");
    m.input(&args.model)?;
    m.input(&args.data)?;
    m.output(&args.out)?;
    if let Some(p) = &args.breakdown_out {
        m.output(p)?;
    }
    m.write_next_to(&args.out)?;

    print!("{}", report.to_table());
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_savings(cli: &Cli, args: &SavingsArgs) -> Result<()> {
    let _ = cli;
    let model = load_model(&args.model)?;
    let est = estimate_savings_with_power(&model, args.from, args.to, args.reference_power)?;

    println!(
        "switching {}x{} -> {}x{} changes predicted power by {:+.4} W",
        args.from.0, args.from.1, args.to.0, args.to.1, -est.delta_w
    );
    println!("estimated saving: {:.4} W", est.delta_w);
    if let (Some(rel), Some(reference)) = (est.relative_saving, est.reference_power_w) {
        println!(
            "relative saving: {:.2}% of the {:.4} W reference",
            rel * 100.0,
            reference
        );
    }

    if let Some(out) = &args.out {
        let json = serde_json::json!({
            "from_pixels": est.from_pixels,
            "to_pixels": est.to_pixels,
            "delta_w": est.delta_w,
            "reference_power_w": est.reference_power_w,
            "relative_saving": est.relative_saving,
        });
        let mut text = serde_json::to_string_pretty(&json)
            .map_err(|e| Error::Config(format!("serializing savings: {e}")))?;
        text.push('\n');
        write_text(out, "savings estimate", &text)?;

        let mut m = RunManifest::new("savings");
        m.param("from", format!("{}x{}", args.from.0, args.from.1));
        m.param("to", format!("{}x{}", args.to.0, args.to.1));
        if let Some(r) = args.reference_power {
            m.param("reference_power_w", r);
        }
        m.input(&args.model)?;
        m.output(out)?;
        m.write_next_to(out)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn cmd_synth(cli: &Cli, args: &SynthArgs) -> Result<()> {
    let mut cfg = SynthConfig::builtin(cli.seed);
    if let Some(path) = &args.ground_truth {
        let model = load_model(path)?;
        cfg.ground_truth = GroundTruth::new(model.spec().clone(), model.params_raw())?;
    }
    if args.sigma != 0.0 {
        cfg.noise = NoiseModel::MultiplicativeGaussian { sigma: args.sigma };
    }

    let measurements = generate(&cfg)?;
    write_text(&args.out, "measurement file", &write_measurements(&measurements))?;
    if let Some(p) = &args.ground_truth_out {
        write_text(p, "ground-truth model", &cfg.ground_truth.to_power_model().to_json()?)?;
    }

    let mut m = RunManifest::new("synth");
    m.param("seed", cli.seed);
    m.param("sigma", args.sigma);
    m.param("spec", cfg.ground_truth.spec().to_tag_list());
    if let Some(p) = &args.ground_truth {
        m.input(p)?;
    }
    m.output(&args.out)?;
    if let Some(p) = &args.ground_truth_out {
        m.output(p)?;
    }
    m.write_next_to(&args.out)?;

    println!(
        "generated {} measurement(s) over {} sequence entries x {} settings (seed {}, sigma {})",
        measurements.len(),
        cfg.sequence_grid.len(),
        cfg.config_grid.len(),
        cli.seed,
        args.sigma
    );
    println!("wrote {}", args.out.display());
    Ok(())
}
