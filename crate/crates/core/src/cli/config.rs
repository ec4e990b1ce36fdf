//! Flag and config-file parsing.
//!
//! Precedence: explicit flags, then `--config` file values, then defaults.
//! The config file holds one `key = value` per line where `key` is a long
//! flag name without the leading dashes; `#` starts a comment.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use super::CliError;
use crate::auction::PositionBias;
use crate::experiment::{alpha_grid, Metric, SweepConfig};
use crate::pollution::PollutionModel;
use crate::sampling::{BetaParams, LognormalParams, MomentSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Moments {
    Log,
    Linear,
}

/// Monte-Carlo sweep of weighted GSP keyword auctions over the ranking exponent.
#[derive(Debug, Clone, Default, Parser)]
#[command(name = "adrank-sim", version, about)]
pub struct CliArgs {
    /// Alpha grid as lo:hi:step
    #[arg(long, value_name = "LO:HI:STEP", allow_hyphen_values = true)]
    pub alphas: Option<String>,
    /// Auctions simulated at each alpha
    #[arg(long, value_name = "N")]
    pub auctions: Option<u64>,
    #[arg(long, value_name = "K")]
    pub slots: Option<usize>,
    #[arg(long, value_name = "N")]
    pub bidders: Option<usize>,
    /// Master seed; a random seed is chosen and reported when absent
    #[arg(long)]
    pub seed: Option<u64>,
    /// Spearman rank correlation between value and CTR
    #[arg(long, allow_hyphen_values = true)]
    pub spearman: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub value_mu: Option<f64>,
    #[arg(long)]
    pub value_sigma: Option<f64>,
    /// Space the value mu/sigma are given in
    #[arg(long, value_enum)]
    pub value_moments: Option<Moments>,
    #[arg(long)]
    pub ctr_a: Option<f64>,
    #[arg(long)]
    pub ctr_b: Option<f64>,
    #[arg(long, value_enum)]
    pub pollution: Option<Switch>,
    /// Multiplier on the pollution shift
    #[arg(long)]
    pub strength: Option<f64>,
    /// Position bias: comma-separated list, or a file with one number per line
    #[arg(long, value_name = "FILE|LIST")]
    pub bias: Option<String>,
    /// Decay of the default geometric position bias
    #[arg(long)]
    pub bias_decay: Option<f64>,
    /// Relative tolerance for the revenue flat region
    #[arg(long)]
    pub flat_tolerance: Option<f64>,
    /// CSV output path (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// SVG chart output path
    #[arg(long)]
    pub plot: Option<PathBuf>,
    #[arg(long, value_name = "METRIC")]
    pub plot_metric: Option<Metric>,
    /// Also run a pollution-free sweep and plot it alongside
    #[arg(long)]
    pub compare_off: bool,
    /// Run one pollution sweep per listed strength
    #[arg(long, value_name = "LIST")]
    pub strengths: Option<String>,
    /// Manifest path (defaults to <out>.manifest.json)
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Worker threads (defaults to all cores); results do not depend on it
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl CliArgs {
    /// Fills every unset field of `self` from `file`.
    pub fn merged_over(self, file: CliArgs) -> CliArgs {
        CliArgs {
            alphas: self.alphas.or(file.alphas),
            auctions: self.auctions.or(file.auctions),
            slots: self.slots.or(file.slots),
            bidders: self.bidders.or(file.bidders),
            seed: self.seed.or(file.seed),
            spearman: self.spearman.or(file.spearman),
            value_mu: self.value_mu.or(file.value_mu),
            value_sigma: self.value_sigma.or(file.value_sigma),
            value_moments: self.value_moments.or(file.value_moments),
            ctr_a: self.ctr_a.or(file.ctr_a),
            ctr_b: self.ctr_b.or(file.ctr_b),
            pollution: self.pollution.or(file.pollution),
            strength: self.strength.or(file.strength),
            bias: self.bias.or(file.bias),
            bias_decay: self.bias_decay.or(file.bias_decay),
            flat_tolerance: self.flat_tolerance.or(file.flat_tolerance),
            out: self.out.or(file.out),
            plot: self.plot.or(file.plot),
            plot_metric: self.plot_metric.or(file.plot_metric),
            compare_off: self.compare_off || file.compare_off,
            strengths: self.strengths.or(file.strengths),
            manifest: self.manifest.or(file.manifest),
            threads: self.threads.or(file.threads),
            config: self.config,
        }
    }
}

/// Turns `key = value` lines into flag arguments and parses them with the
/// same rules as the command line.
pub fn parse_config_text(text: &str) -> Result<CliArgs, CliError> {
    let mut argv = vec!["adrank-sim".to_string()];
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", n + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if key == "config" {
            return Err(CliError::Usage("config files cannot include other config files".into()));
        }
        if key == "compare-off" {
            match value {
                "true" | "on" => argv.push("--compare-off".into()),
                "false" | "off" => {}
                other => {
                    return Err(CliError::Usage(format!("compare-off: expected true/false, got `{other}`")))
                }
            }
            continue;
        }
        argv.push(format!("--{key}"));
        argv.push(value.to_string());
    }
    CliArgs::try_parse_from(argv).map_err(|e| CliError::Usage(format!("config file: {e}")))
}

pub fn parse_alpha_spec(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("--alphas: expected lo:hi:step, got `{spec}`")))?;
    match nums[..] {
        [lo, hi, step] => alpha_grid(lo, hi, step).map_err(|e| CliError::Usage(format!("--alphas: {e}"))),
        [single] => Ok(vec![single]),
        _ => Err(CliError::Usage(format!("--alphas: expected lo:hi:step, got `{spec}`"))),
    }
}

pub fn parse_number_list(text: &str) -> Option<Vec<f64>> {
    let nums: Result<Vec<f64>, _> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split(','))
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::parse::<f64>)
        .collect();
    nums.ok().filter(|v| !v.is_empty())
}

/// A bias argument is a comma-separated list when it parses as one, and a
/// file path otherwise.
pub fn load_bias(arg: &str) -> Result<Vec<f64>, CliError> {
    if let Some(list) = parse_number_list(arg) {
        return Ok(list);
    }
    let text = fs::read_to_string(Path::new(arg))
        .map_err(|e| CliError::Usage(format!("--bias: cannot read `{arg}`: {e}")))?;
    parse_number_list(&text).ok_or_else(|| CliError::Usage(format!("--bias: `{arg}` is not a list of numbers")))
}

/// Everything a run needs after flags, file and defaults are combined.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub config: SweepConfig,
    pub alphas_spec: String,
    pub seed_from_flag: bool,
    pub out: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    pub plot_metric: Metric,
    pub compare_off: bool,
    pub strengths: Option<Vec<f64>>,
    pub manifest: Option<PathBuf>,
    pub threads: Option<usize>,
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

/// Reads the optional config file named in `args` and resolves the run.
pub fn parse_config(args: CliArgs) -> Result<RunPlan, CliError> {
    let file = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("--config: cannot read {}: {e}", path.display())))?;
            parse_config_text(&text)?
        }
        None => CliArgs::default(),
    };
    resolve(args.merged_over(file))
}

pub fn resolve(args: CliArgs) -> Result<RunPlan, CliError> {
    let defaults = SweepConfig::default();
    let alphas_spec = args.alphas.clone().unwrap_or_else(|| "-2:2:0.1".to_string());
    let alpha_grid = parse_alpha_spec(&alphas_spec)?;
    let slots = args.slots.unwrap_or(defaults.slots);
    let bidders = args.bidders.unwrap_or(defaults.bidders);
    if slots == 0 || bidders <= slots {
        return Err(CliError::Usage(format!(
            "need more bidders than slots (slots = {slots}, bidders = {bidders})"
        )));
    }

    let moments = match args.value_moments.unwrap_or(Moments::Log) {
        Moments::Log => MomentSpace::Log,
        Moments::Linear => MomentSpace::Linear,
    };
    let value_params = LognormalParams::from_reported(
        args.value_mu.unwrap_or(LognormalParams::DEFAULT_MEAN),
        args.value_sigma.unwrap_or(LognormalParams::DEFAULT_STDDEV),
        moments,
    )
    .map_err(usage)?;
    let ctr = BetaParams::new(
        args.ctr_a.unwrap_or(BetaParams::DEFAULT_A),
        args.ctr_b.unwrap_or(BetaParams::DEFAULT_B),
    )
    .map_err(usage)?;
    let mut pollution = PollutionModel::disabled(ctr)
        .with_strength(args.strength.unwrap_or(1.0))
        .map_err(usage)?;
    pollution.enabled = args.pollution == Some(Switch::On);

    let bias = match (&args.bias, args.bias_decay) {
        (Some(_), Some(_)) => return Err(CliError::Usage("--bias and --bias-decay are exclusive".into())),
        (Some(arg), None) => PositionBias::new(load_bias(arg)?).map_err(usage)?,
        (None, decay) => {
            PositionBias::geometric(slots, decay.unwrap_or(PositionBias::DEFAULT_DECAY)).map_err(usage)?
        }
    };

    let strengths = match &args.strengths {
        Some(s) => Some(parse_number_list(s).ok_or_else(|| {
            CliError::Usage(format!("--strengths: expected a comma-separated list, got `{s}`"))
        })?),
        None => None,
    };
    if strengths.is_some() && args.out.is_none() {
        return Err(CliError::Usage("--strengths writes one CSV per strength and needs --out".into()));
    }
    if args.compare_off && args.out.is_none() {
        return Err(CliError::Usage("--compare-off needs --out".into()));
    }
    if args.threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }

    let seed_from_flag = args.seed.is_some();
    let config = SweepConfig {
        alpha_grid,
        auctions_per_alpha: args.auctions.unwrap_or(defaults.auctions_per_alpha),
        slots,
        bidders,
        seed: args.seed.unwrap_or_else(rand::random),
        spearman_rho: args.spearman.unwrap_or(defaults.spearman_rho),
        value_params,
        pollution,
        bias,
        flat_tolerance: args.flat_tolerance.unwrap_or(defaults.flat_tolerance),
    };
    config.validate().map_err(usage)?;
    if let Some(list) = &strengths {
        for &s in list {
            PollutionModel { enabled: true, ..pollution }
                .with_strength(s)
                .and_then(|m| m.validate_range(&config.alpha_grid))
                .map_err(usage)?;
        }
    }
    let manifest = args
        .manifest
        .or_else(|| args.out.as_ref().map(|o| sibling(o, ".manifest.json")));
    Ok(RunPlan {
        config,
        alphas_spec,
        seed_from_flag,
        out: args.out,
        plot: args.plot,
        plot_metric: args.plot_metric.unwrap_or(Metric::Revenue),
        compare_off: args.compare_off,
        strengths,
        manifest,
        threads: args.threads,
    })
}

/// `dir/name.csv` + `.suffix` -> `dir/name.suffix`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

impl RunPlan {
    /// Flags that reproduce this run's configuration exactly.
    pub fn reproduce_args(&self) -> Vec<String> {
        let c = &self.config;
        let mut args = vec![
            "--alphas".to_string(),
            self.alphas_spec.clone(),
            "--auctions".into(),
            c.auctions_per_alpha.to_string(),
            "--slots".into(),
            c.slots.to_string(),
            "--bidders".into(),
            c.bidders.to_string(),
            "--seed".into(),
            c.seed.to_string(),
            "--spearman".into(),
            c.spearman_rho.to_string(),
            "--value-mu".into(),
            c.value_params.mu.to_string(),
            "--value-sigma".into(),
            c.value_params.sigma.to_string(),
            "--value-moments".into(),
            "log".into(),
            "--ctr-a".into(),
            c.pollution.base_a.to_string(),
            "--ctr-b".into(),
            c.pollution.anchor_b.to_string(),
            "--pollution".into(),
            if c.pollution.enabled { "on" } else { "off" }.into(),
            "--strength".into(),
            c.pollution.strength.to_string(),
            "--bias".into(),
            c.bias
                .as_slice()
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(","),
            "--flat-tolerance".into(),
            c.flat_tolerance.to_string(),
        ];
        if let Some(s) = &self.strengths {
            args.push("--strengths".into());
            args.push(s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
        }
        if self.compare_off {
            args.push("--compare-off".into());
        }
        if let Some(p) = &self.plot {
            args.push("--plot".into());
            args.push(p.display().to_string());
            args.push("--plot-metric".into());
            args.push(self.plot_metric.to_string());
        }
        if let Some(o) = &self.out {
            args.push("--out".into());
            args.push(o.display().to_string());
        }
        args
    }
}
