//! Command-line front end: `gen`, `run`, `sweep` and `stats`. The binary is a
//! thin wrapper around [`main_with_args`].

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::comm::{default_ladder, parse_ladder, Codec};
use crate::error::{Error, Result};
use crate::eval::experiment::{self, ap_at};
use crate::eval::report::{self, RunSummary};
use crate::eval::stats::POLAR_MAX_RADIUS;
use crate::eval::{points_per_box_stats, polar_density, EvalConfig};
use crate::perception::channel;
use crate::perception::pipeline::{PipelineConfig, Strategy};
use crate::plot::{polar_heatmap_svg, LinePlot, Series};
use crate::rng;
use crate::scenario::{
    self, dataset_stats, read_dataset, sample_config, write_dataset, Scenario, ScenarioConfig,
};

pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const DATA: i32 = 2;
    pub const INVARIANT: i32 = 3;
}

impl Error {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) => exit::USAGE,
            Error::MissingManifest(_)
            | Error::VersionMismatch { .. }
            | Error::Truncated(_)
            | Error::Checksum(_)
            | Error::Malformed { .. }
            | Error::Io { .. }
            | Error::Json { .. }
            | Error::InfeasiblePlacement { .. } => exit::DATA,
            Error::FrameMismatch { .. }
            | Error::ShapeMismatch(_)
            | Error::UnknownCav(_)
            | Error::Codec(_)
            | Error::Invariant(_) => exit::INVARIANT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    /// Configurations drawn from the road-type traffic table.
    #[default]
    Sampled,
    /// T junctions and dense four-way traffic, 3 to 5 CAVs.
    Occlusion,
    /// 150-vehicle four-way junctions with 7 CAVs.
    CavSweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Cav,
    Compression,
}

/// Everything a command needs. Loaded from `--config` (JSON), then flags
/// override individual fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    /// 0 uses every core.
    pub workers: usize,
    pub strategies: Vec<Strategy>,
    /// Comma-separated rates or codec labels; empty means powers of two
    /// from 1x to 4096x.
    pub codec_ladder: String,
    pub cav_counts: Vec<usize>,
    pub suite: Suite,
    pub scenarios: usize,
    /// Frames rendered per scenario; `null` renders the whole scenario.
    pub max_frames: Option<u32>,
    pub polar_bins: [usize; 2],
    pub pipeline: PipelineConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            out: PathBuf::from("out"),
            seed: 42,
            workers: 0,
            strategies: Strategy::ALL.to_vec(),
            codec_ladder: String::new(),
            cav_counts: (2..=7).collect(),
            suite: Suite::Sampled,
            scenarios: 5,
            max_frames: Some(2),
            polar_bins: [36, 14],
            pipeline: PipelineConfig::benchmark(),
            eval: EvalConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidInput(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("bad config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::InvalidInput("strategy list is empty".into()));
        }
        if self.scenarios == 0 {
            return Err(Error::InvalidInput("need at least one scenario".into()));
        }
        if self.cav_counts.is_empty() || self.cav_counts.contains(&0) {
            return Err(Error::InvalidInput("CAV counts must be positive".into()));
        }
        self.pipeline.validate()?;
        self.eval.validate()?;
        self.ladder().map(|_| ())
    }

    pub fn ladder(&self) -> Result<Vec<Codec>> {
        let channels = channel::COUNT as u16;
        if self.codec_ladder.trim().is_empty() {
            Ok(default_ladder(channels))
        } else {
            parse_ladder(&self.codec_ladder, channels)
        }
    }

    fn dataset(&self) -> Result<&Path> {
        self.dataset.as_deref().ok_or_else(|| {
            Error::InvalidInput(
                "no dataset given (use --dataset or the config's \"dataset\")".into(),
            )
        })
    }

    /// Scenario configurations for `gen`.
    pub fn scenario_configs(&self) -> Vec<ScenarioConfig> {
        match self.suite {
            Suite::Sampled => (0..self.scenarios)
                .map(|k| sample_config(rng::derive_seed(self.seed, &[k as u64])))
                .collect(),
            Suite::Occlusion => experiment::occlusion_suite(self.seed, self.scenarios),
            Suite::CavSweep => experiment::cav_sweep_suite(self.seed, self.scenarios),
        }
    }
}

/// Parses a comma-separated strategy list. Empty is a usage error.
pub fn parse_strategies(s: &str) -> Result<Vec<Strategy>> {
    let list: Vec<Strategy> = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    if list.is_empty() {
        return Err(Error::InvalidInput("strategy list is empty".into()));
    }
    Ok(list)
}

#[derive(Debug, Parser)]
#[command(
    name = "v2vbench",
    version,
    about = "Cooperative V2V perception benchmark"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Dataset directory written by `gen`.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset.
    Gen {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scenarios: Option<usize>,
        #[arg(long, value_enum)]
        suite: Option<Suite>,
        /// Frames rendered per scenario (0 = all).
        #[arg(long)]
        max_frames: Option<u32>,
    },
    /// Run fusion strategies on a dataset and score them.
    Run {
        #[command(flatten)]
        common: Common,
        /// Comma-separated: no_fusion,early,late,intermediate.
        #[arg(long)]
        strategies: Option<String>,
    },
    /// CAV-count or compression sweep.
    Sweep {
        #[arg(value_enum)]
        kind: SweepKind,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        strategies: Option<String>,
        /// Comma-separated rates (`64`, `64x`) or codec labels.
        #[arg(long)]
        codec_ladder: Option<String>,
        /// Comma-separated CAV counts.
        #[arg(long)]
        counts: Option<String>,
    },
    /// Ground-truth density and points-per-box statistics.
    Stats {
        #[command(flatten)]
        common: Common,
    },
}

fn apply_common(cfg: &mut RunConfig, c: &Common) {
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = &c.out {
        cfg.out = v.clone();
    }
    if let Some(v) = c.workers {
        cfg.workers = v;
    }
    if let Some(v) = &c.dataset {
        cfg.dataset = Some(v.clone());
    }
}

fn base_config(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    apply_common(&mut cfg, c);
    Ok(cfg)
}

/// Resolves a parsed command line into a config and the command to run.
pub fn resolve(command: &Command) -> Result<RunConfig> {
    let cfg = match command {
        Command::Gen {
            common,
            scenarios,
            suite,
            max_frames,
        } => {
            let mut cfg = base_config(common)?;
            if let Some(v) = scenarios {
                cfg.scenarios = *v;
            }
            if let Some(v) = suite {
                cfg.suite = *v;
            }
            if let Some(v) = max_frames {
                cfg.max_frames = (*v > 0).then_some(*v);
            }
            cfg
        }
        Command::Run { common, strategies } => {
            let mut cfg = base_config(common)?;
            if let Some(s) = strategies {
                cfg.strategies = parse_strategies(s)?;
            }
            cfg
        }
        Command::Sweep {
            common,
            strategies,
            codec_ladder,
            counts,
            ..
        } => {
            let mut cfg = base_config(common)?;
            if let Some(s) = strategies {
                cfg.strategies = parse_strategies(s)?;
            }
            if let Some(s) = codec_ladder {
                if s.trim().is_empty() {
                    return Err(Error::InvalidInput("codec ladder is empty".into()));
                }
                cfg.codec_ladder = s.clone();
            }
            if let Some(s) = counts {
                cfg.cav_counts = s
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse()
                            .map_err(|_| Error::InvalidInput(format!("bad CAV count '{t}'")))
                    })
                    .collect::<Result<_>>()?;
            }
            cfg
        }
        Command::Stats { common } => base_config(common)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Parses `args`, runs the command and returns the process exit code.
/// Messages go to stdout, errors to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            };
        }
    };
    match execute(&cli.command) {
        Ok(text) => {
            print!("{text}");
            exit::OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a command inside a pool of the configured size and returns the text
/// it would print.
pub fn execute(command: &Command) -> Result<String> {
    let cfg = resolve(command)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Invariant(format!("thread pool: {e}")))?;
    pool.install(|| match command {
        Command::Gen { .. } => cmd_gen(&cfg),
        Command::Run { .. } => cmd_run(&cfg),
        Command::Sweep { kind, .. } => cmd_sweep(&cfg, *kind),
        Command::Stats { .. } => cmd_stats(&cfg),
    })
}

fn load(cfg: &RunConfig) -> Result<Vec<Scenario>> {
    let scenarios = read_dataset(cfg.dataset()?)?;
    if scenarios.is_empty() {
        return Err(Error::Malformed {
            path: cfg.dataset()?.join("manifest.json"),
            reason: "dataset has no scenarios".into(),
        });
    }
    Ok(scenarios)
}

fn write_svg(cfg: &RunConfig, name: &str, svg: &str) -> Result<()> {
    report::write_bytes(&cfg.out.join("plots").join(name), svg.as_bytes())
}

/// Generates scenarios, writes them under `out` with a manifest and a
/// `summary.json` of dataset statistics, and returns the summary table.
pub fn cmd_gen(cfg: &RunConfig) -> Result<String> {
    use rayon::prelude::*;
    let scenarios: Vec<Scenario> = cfg
        .scenario_configs()
        .par_iter()
        .map(|c| scenario::generate_scenario_capped(c, cfg.max_frames))
        .collect::<Result<_>>()?;
    for s in &scenarios {
        s.validate()?;
    }
    let manifest = write_dataset(&scenarios, &cfg.out)?;
    let stats = dataset_stats(&scenarios)?;
    report::write_json(&cfg.out.join("summary.json"), &stats)?;
    Ok(format!(
        "wrote {} scenarios ({} frames) to {}\n{}",
        manifest.scenarios.len(),
        stats.frames,
        cfg.out.display(),
        stats.to_table()
    ))
}

/// Scores every configured strategy on the dataset.
pub fn cmd_run(cfg: &RunConfig) -> Result<String> {
    let scenarios = load(cfg)?;
    let ev = experiment::evaluate(&scenarios, &cfg.strategies, &cfg.pipeline, &cfg.eval)?;
    report::write_csv(&cfg.out.join("results.csv"), &ev.rows)?;
    let summary = RunSummary::of(&ev);
    report::write_json(&cfg.out.join("summary.json"), &summary)?;
    let plot = LinePlot {
        title: "AP by IoU threshold".into(),
        x_label: "IoU threshold".into(),
        y_label: "AP".into(),
        series: ev
            .summary
            .iter()
            .map(|s| {
                Series::new(
                    s.strategy.name(),
                    s.aps.iter().map(|a| (a.iou_threshold, a.ap)).collect(),
                )
            })
            .collect(),
        ..LinePlot::default()
    };
    write_svg(cfg, "ap_by_threshold.svg", &plot.to_svg())?;
    Ok(summary.to_table())
}

fn ap07(aps: &[experiment::ThresholdAp]) -> f64 {
    ap_at(aps, 0.7)
        .or_else(|| aps.last().map(|a| a.ap))
        .unwrap_or(0.0)
}

fn headline_threshold(cfg: &RunConfig) -> f64 {
    if cfg.eval.iou_thresholds.contains(&0.7) {
        0.7
    } else {
        *cfg.eval.iou_thresholds.last().expect("validated non-empty")
    }
}

/// CAV-count or compression sweep: CSV, JSON and an SVG line plot.
pub fn cmd_sweep(cfg: &RunConfig, kind: SweepKind) -> Result<String> {
    let scenarios = load(cfg)?;
    let t = headline_threshold(cfg);
    match kind {
        SweepKind::Cav => {
            let rows = experiment::sweep_cav_count(
                &scenarios,
                &cfg.cav_counts,
                &cfg.strategies,
                &cfg.pipeline,
                &cfg.eval,
            )?;
            report::write_csv(
                &cfg.out.join("results.csv"),
                &report::cav_sweep_records(&rows),
            )?;
            report::write_json(&cfg.out.join("summary.json"), &rows)?;
            let series = cfg
                .strategies
                .iter()
                .map(|st| {
                    let pts = rows
                        .iter()
                        .filter(|r| r.strategy == *st)
                        .map(|r| (r.n_cavs as f64, ap07(&r.aps)))
                        .collect();
                    Series::new(st.name(), pts)
                })
                .collect();
            let plot = LinePlot {
                title: format!("AP@{t} vs number of CAVs"),
                x_label: "CAVs".into(),
                y_label: format!("AP@{t}"),
                series,
                ..LinePlot::default()
            };
            write_svg(cfg, "cav_sweep.svg", &plot.to_svg())?;
            let mut text = format!(
                "{:<6} {:<14} {:>8}\n",
                "cavs",
                "strategy",
                format!("AP@{t}")
            );
            for r in &rows {
                text.push_str(&format!(
                    "{:<6} {:<14} {:>8.4}\n",
                    r.n_cavs,
                    r.strategy.name(),
                    ap07(&r.aps)
                ));
            }
            Ok(text)
        }
        SweepKind::Compression => {
            let sweep = experiment::sweep_compression(
                &scenarios,
                &cfg.ladder()?,
                &cfg.pipeline,
                &cfg.eval,
            )?;
            report::write_csv(
                &cfg.out.join("results.csv"),
                &report::compression_records(&sweep),
            )?;
            report::write_json(&cfg.out.join("summary.json"), &sweep)?;
            let mut by_size = vec![Series::new(
                "intermediate",
                sweep
                    .rows
                    .iter()
                    .map(|r| (r.mean_message_bytes, ap07(&r.aps)))
                    .collect(),
            )];
            for r in sweep.references.iter().filter(|r| r.messages > 0) {
                by_size.push(Series::new(
                    r.strategy.name(),
                    vec![(r.mean_message_bytes, ap07(&r.aps))],
                ));
            }
            let size_plot = LinePlot {
                title: format!("AP@{t} vs message size"),
                x_label: "bytes per message (log)".into(),
                y_label: format!("AP@{t}"),
                x_log: true,
                series: by_size,
                ..LinePlot::default()
            };
            write_svg(cfg, "compression_size.svg", &size_plot.to_svg())?;
            let mut by_rate = vec![Series::new(
                "intermediate",
                sweep.rows.iter().map(|r| (r.rate, ap07(&r.aps))).collect(),
            )];
            let (lo, hi) = (
                sweep.rows.first().map_or(1.0, |r| r.rate),
                sweep.rows.last().map_or(1.0, |r| r.rate),
            );
            for r in &sweep.references {
                by_rate.push(
                    Series::new(
                        r.strategy.name(),
                        vec![(lo, ap07(&r.aps)), (hi, ap07(&r.aps))],
                    )
                    .dashed(),
                );
            }
            let rate_plot = LinePlot {
                title: format!("AP@{t} vs compression rate"),
                x_label: "compression rate (log)".into(),
                y_label: format!("AP@{t}"),
                x_log: true,
                series: by_rate,
                ..LinePlot::default()
            };
            write_svg(cfg, "compression_rate.svg", &rate_plot.to_svg())?;
            let mut text = format!(
                "{:<18} {:>9} {:>8} {:>14} {:>10}\n",
                "codec",
                "rate",
                format!("AP@{t}"),
                "bytes/msg",
                "ms/msg"
            );
            for r in &sweep.rows {
                text.push_str(&format!(
                    "{:<18} {:>9.1} {:>8.4} {:>14.0} {:>10.3}\n",
                    r.codec,
                    r.rate,
                    ap07(&r.aps),
                    r.mean_message_bytes,
                    r.mean_message_time_s * 1e3
                ));
            }
            for r in &sweep.references {
                text.push_str(&format!(
                    "{:<18} {:>9} {:>8.4} {:>14.0}\n",
                    r.strategy.name(),
                    "-",
                    ap07(&r.aps),
                    r.mean_message_bytes
                ));
            }
            Ok(text)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsSummary {
    pub dataset: scenario::DatasetStats,
    pub ground_truth: u64,
    pub polar_total: u64,
    pub radial_bins: Vec<report::RadialRecord>,
}

/// Ground-truth polar density and points per box for every frame, each
/// scored from its scenario's ego.
pub fn cmd_stats(cfg: &RunConfig) -> Result<String> {
    let scenarios = load(cfg)?;
    let mut gts = Vec::new();
    let mut frames = Vec::new();
    for s in &scenarios {
        for f in &s.frames {
            gts.extend(crate::eval::filter_gt(f, s.ego_id, &cfg.eval));
            frames.push((f, s.ego_id));
        }
    }
    let [na, nr] = cfg.polar_bins;
    let polar = polar_density(&gts, na, nr)?;
    let ppb = points_per_box_stats(&frames, &cfg.eval);
    if polar.total() != gts.len() as u64 || ppb.boxes.len() != gts.len() {
        return Err(Error::Invariant(
            "statistics lost ground-truth boxes".into(),
        ));
    }
    report::write_csv(&cfg.out.join("results.csv"), &ppb.boxes)?;
    report::write_csv(
        &cfg.out.join("polar_density.csv"),
        &report::polar_records(&polar),
    )?;
    let radial = report::radial_records(&ppb);
    report::write_csv(&cfg.out.join("points_per_box.csv"), &radial)?;
    let summary = StatsSummary {
        dataset: dataset_stats(&scenarios)?,
        ground_truth: gts.len() as u64,
        polar_total: polar.total(),
        radial_bins: radial.clone(),
    };
    report::write_json(&cfg.out.join("summary.json"), &summary)?;
    write_svg(
        cfg,
        "polar_density.svg",
        &polar_heatmap_svg(
            "Ground truth density, ln(1 + count)",
            &polar.log_counts,
            POLAR_MAX_RADIUS,
        ),
    )?;
    let centers = |f: fn(&report::RadialRecord) -> f64| -> Vec<(f64, f64)> {
        radial
            .iter()
            .filter(|r| r.boxes > 0)
            .map(|r| ((r.radius_lo + r.radius_hi) / 2.0, f(r)))
            .filter(|(_, v)| *v > 0.0)
            .collect()
    };
    let plot = LinePlot {
        title: "Points per box vs distance".into(),
        x_label: "distance from ego (m)".into(),
        y_label: "mean points per box (log)".into(),
        y_log: true,
        series: vec![
            Series::new("ego only", centers(|r| r.mean_ego_points)),
            Series::new("all CAVs", centers(|r| r.mean_all_points)),
        ],
        ..LinePlot::default()
    };
    write_svg(cfg, "points_per_box.svg", &plot.to_svg())?;
    Ok(format!(
        "{} ground-truth boxes in {} frames\n{:<12} {:>7} {:>12} {:>12}\n{}",
        gts.len(),
        frames.len(),
        "range (m)",
        "boxes",
        "ego pts/box",
        "all pts/box",
        radial
            .iter()
            .map(|r| format!(
                "{:>5.0}-{:<6.0} {:>7} {:>12.1} {:>12.1}\n",
                r.radius_lo, r.radius_hi, r.boxes, r.mean_ego_points, r.mean_all_points
            ))
            .collect::<String>()
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_lists() {
        assert_eq!(
            parse_strategies("early, late").unwrap(),
            vec![Strategy::Early, Strategy::Late]
        );
        assert!(matches!(parse_strategies(""), Err(Error::InvalidInput(_))));
        assert!(parse_strategies(",").is_err());
        assert!(parse_strategies("early,bogus").is_err());
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"seed": 7, "scenarios": 3, "out": "a"}"#).unwrap();
        let cli = Cli::try_parse_from([
            "v2vbench",
            "gen",
            "--config",
            path.to_str().unwrap(),
            "--seed",
            "9",
            "--max-frames",
            "0",
        ])
        .unwrap();
        let cfg = resolve(&cli.command).unwrap();
        assert_eq!((cfg.seed, cfg.scenarios, cfg.max_frames), (9, 3, None));
        assert_eq!(cfg.out, PathBuf::from("a"));
    }

    #[test]
    fn unknown_config_keys_are_usage_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"seeed": 7}"#).unwrap();
        let err = RunConfig::load(&path).unwrap_err();
        assert_eq!(err.exit_code(), exit::USAGE);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(main_with_args(["v2vbench", "bogus"]), exit::USAGE);
        assert_eq!(
            main_with_args(["v2vbench", "run", "--strategies", ""]),
            exit::USAGE
        );
        assert_eq!(main_with_args(["v2vbench", "--help"]), exit::OK);
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nothing");
        assert_eq!(
            main_with_args(["v2vbench", "run", "--dataset", missing.to_str().unwrap()]),
            exit::DATA
        );
        assert_eq!(Error::Invariant("x".into()).exit_code(), exit::INVARIANT);
    }

    #[test]
    fn default_ladder_spans_the_range() {
        let l = RunConfig::default().ladder().unwrap();
        assert_eq!(l.first().unwrap().nominal_rate(5), 1.0);
        assert_eq!(l.last().unwrap().nominal_rate(5), 4096.0);
    }
}
