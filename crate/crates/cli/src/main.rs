//! `evline` command-line tool: synthetic data, pipeline runs, evaluation,
//! buffer visualization and throughput benchmarking.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use evline::eval::{heat_map, lifetime_stats, pr_series_with, segment_lifetimes, write_pr_csv, HeatMapParams};
use evline::events::{
    generate_scene, read_events, read_ground_truth, write_events, write_ground_truth, Event, EventFormat, SceneSpec,
};
use evline::pipeline::{read_trace, run, run_threaded, write_trace, PipelineConfig, PipelineMetrics, Playback, RunMode};
use evline::scarf::{write_pgm, ScarfStorage};

#[derive(Parser)]
#[command(name = "evline", version, about = "Line segment detection and tracking for event streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic event stream and ground truth from a TOML scene.
    Gen(GenArgs),
    /// Run detection and tracking and write the segment trace.
    Run(RunArgs),
    /// Score a trace against ground truth.
    Eval(EvalArgs),
    /// Dump the stored events as PGM frames at a fixed stream-time period.
    /// Frame k shows the buffers after every event with `t <= k * period`.
    Viz(VizArgs),
    /// Threaded run at full speed, reporting steady-state rates.
    Bench(BenchArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// `key=value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` overrides applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<PipelineConfig> {
        let mut config = PipelineConfig::default();
        if let Some(path) = &self.config {
            config
                .apply_file(path)
                .with_context(|| format!("config {}", path.display()))?;
        }
        for kv in &self.overrides {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("override `{kv}` is not key=value");
            };
            config.set(k.trim(), v.trim()).map_err(anyhow::Error::msg)?;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct GenArgs {
    /// Scene description (TOML).
    scene: PathBuf,
    /// Output event file; `.bin` selects the binary format.
    #[arg(long)]
    events: PathBuf,
    /// Output ground-truth CSV.
    #[arg(long)]
    gt: PathBuf,
    /// Overrides the scene's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    events: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    mode: Option<RunMode>,
    /// Events ingested between passes in lockstep mode.
    #[arg(long)]
    events_per_step: Option<usize>,
    /// Replay at stream speed instead of as fast as possible.
    #[arg(long)]
    paced: bool,
    #[arg(long)]
    trace: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    trace: PathBuf,
    gt: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    /// Match tolerance as a fraction of the image diagonal.
    #[arg(long, default_value_t = 0.01)]
    tolerance: f64,
    /// Directory receiving `pr.csv`, `lifetimes.csv` and optional heat maps.
    #[arg(long)]
    out_dir: PathBuf,
    /// Also write one heat map PGM per second.
    #[arg(long)]
    heatmaps: bool,
}

#[derive(Args)]
struct VizArgs {
    events: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    frame_period_us: u64,
    /// Gray level added per stored active event, saturating at 255.
    #[arg(long, default_value_t = 64)]
    intensity: u8,
}

#[derive(Args)]
struct BenchArgs {
    events: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    /// Number of repeated runs.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
}

fn load_events(path: &Path) -> Result<Vec<Event>> {
    read_events(path, EventFormat::from_path(path)).with_context(|| format!("events {}", path.display()))
}

fn cmd_gen(args: &GenArgs) -> Result<String> {
    let text = fs::read_to_string(&args.scene).with_context(|| format!("scene {}", args.scene.display()))?;
    let mut spec: SceneSpec = toml::from_str(&text).with_context(|| format!("scene {}", args.scene.display()))?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let (events, gt) = generate_scene(&spec)?;
    write_events(&events, &args.events, EventFormat::from_path(&args.events))?;
    write_ground_truth(&gt, &args.gt)?;
    Ok(format!("events={}\ngt_rows={}\n", events.len(), gt.len()))
}

fn cmd_run(args: &RunArgs) -> Result<String> {
    let mut config = args.config.load()?;
    if let Some(mode) = args.mode {
        config.mode = mode;
    }
    if let Some(n) = args.events_per_step {
        config.events_per_step = n;
    }
    if args.paced {
        config.playback = Playback::WallClock;
    }
    let events = load_events(&args.events)?;
    let (trace, metrics) = run(&events, &config)?;
    write_trace(&trace, &args.trace)?;
    let mut out = format!("mode={}\ntrace_rows={}\n", config.mode, trace.len());
    out.push_str(&metrics.to_key_values());
    Ok(out)
}

fn cmd_eval(args: &EvalArgs) -> Result<String> {
    let config = args.config.load()?;
    let sensor = config.sensor()?;
    if !(args.tolerance >= 0.0 && args.tolerance.is_finite()) {
        bail!("tolerance must be a non-negative fraction");
    }
    let trace = read_trace(&args.trace).with_context(|| format!("trace {}", args.trace.display()))?;
    let gt = read_ground_truth(&args.gt).with_context(|| format!("ground truth {}", args.gt.display()))?;
    fs::create_dir_all(&args.out_dir)?;

    let params = HeatMapParams::from_fraction(args.tolerance, sensor);
    let mut heat_error = None;
    let series = pr_series_with(&trace, &gt, sensor, params, |frame| {
        if args.heatmaps && heat_error.is_none() {
            let path = args.out_dir.join(format!("heat_{:03}.pgm", frame.second));
            heat_error = write_pgm(&heat_map(frame.pred, frame.gt), path).err();
        }
    });
    if let Some(e) = heat_error {
        return Err(e).context("writing heat map");
    }
    let mut pr = fs::File::create(args.out_dir.join("pr.csv"))?;
    write_pr_csv(&series, &mut pr)?;

    let end = trace.iter().map(|r| r.t_us).max().unwrap_or(0);
    let mut lifetimes = String::from("lifetime_s\n");
    for l in segment_lifetimes(&trace, end) {
        let _ = writeln!(lifetimes, "{l:.6}");
    }
    fs::write(args.out_dir.join("lifetimes.csv"), lifetimes)?;

    let n = series.len().max(1) as f64;
    let mean = |f: fn(&evline::eval::PrPoint) -> f64| series.iter().map(f).sum::<f64>() / n;
    let stats = lifetime_stats(&trace);
    let mut out = String::new();
    let _ = writeln!(out, "tolerance_px={:.2}", params.tolerance_px);
    let _ = writeln!(out, "seconds={}", series.len());
    let _ = writeln!(out, "mean_precision={:.6}", mean(|p| p.precision));
    let _ = writeln!(out, "mean_recall={:.6}", mean(|p| p.recall));
    let _ = writeln!(out, "mean_f_score={:.6}", mean(|p| p.f_score));
    let _ = writeln!(out, "min_f_score={:.6}", series.iter().map(|p| p.f_score).fold(f64::NAN, f64::min));
    let _ = writeln!(out, "segments={}", stats.count);
    let _ = writeln!(out, "lifetime_mean_s={:.6}", stats.mean);
    let _ = writeln!(out, "lifetime_std_s={:.6}", stats.std);
    let _ = writeln!(out, "lifetime_max_s={:.6}", if stats.count == 0 { 0.0 } else { stats.max });
    Ok(out)
}

fn cmd_viz(args: &VizArgs) -> Result<String> {
    if args.frame_period_us == 0 {
        bail!("frame period must be positive");
    }
    let config = args.config.load()?;
    let storage = ScarfStorage::new(config.lattice()?, config.alpha);
    let events = load_events(&args.events)?;
    fs::create_dir_all(&args.out_dir)?;

    let mut frames = 0usize;
    let mut dump = |storage: &ScarfStorage| -> Result<()> {
        let path = args.out_dir.join(format!("frame_{frames:05}.pgm"));
        write_pgm(&storage.render_frame(args.intensity), path)?;
        frames += 1;
        Ok(())
    };
    let mut boundary = args.frame_period_us;
    let mut pending = false;
    for e in &events {
        while e.t > boundary {
            if pending {
                dump(&storage)?;
                pending = false;
            }
            boundary += args.frame_period_us;
        }
        storage.insert(e);
        pending = true;
    }
    if pending {
        dump(&storage)?;
    }
    Ok(format!("frames={frames}\nevents={}\n", events.len()))
}

fn cmd_bench(args: &BenchArgs) -> Result<String> {
    let mut config = args.config.load()?;
    config.mode = RunMode::Threaded;
    config.playback = Playback::AsFastAsPossible;
    let events = load_events(&args.events)?;
    let mut out = String::new();
    let mut runs: Vec<PipelineMetrics> = Vec::new();
    for i in 0..args.repeats.max(1) {
        let (_, m) = run_threaded(&events, &config)?;
        if args.repeats > 1 {
            let _ = writeln!(
                out,
                "run{i}_scarf_event_rate_mevps={:.6}\nrun{i}_detection_freq_hz={:.3}\nrun{i}_tracking_freq_hz={:.3}",
                m.scarf_event_rate / 1e6,
                m.detection_freq,
                m.tracking_freq
            );
        }
        runs.push(m);
    }
    let last = runs.last().expect("at least one run");
    out.push_str(&last.to_key_values());
    Ok(out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Run(a) => cmd_run(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Viz(a) => cmd_viz(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
