//! Command-line front end of the `sdma-thp` binary.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for runtime failures.
//! `SDMA_THP_WORKERS` sets the default worker count.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::baselines::ArchitectureId;
use crate::channel::{
    default_pdp_decay, generate_drop, load_channels, scenario_preset, write_channels, Preset, ScenarioConfig,
    DEFAULT_RHO, DEFAULT_SEED,
};
use crate::sim::{link_level_verify, run_drop, run_sweep, SweepAxis, SweepOptions, SweepResult};
use crate::{Error, Result};

pub const WORKERS_ENV: &str = "SDMA_THP_WORKERS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "sdma-thp",
    version,
    about = "THP-based MIMO-OFDMA downlink resource allocation"
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Monte Carlo power sweep over target MSE or user count; writes a CSV.
    Sweep(SweepArgs),
    /// Generate one channel drop and write it to a channel file.
    Channels(ChannelsArgs),
    /// Run the allocation on a channel file and print per-architecture results.
    Run(RunArgs),
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Built-in scenario preset (S1, S2, S3).
    #[arg(long, value_parser = parse_preset, conflicts_with = "config")]
    scenario: Option<Preset>,
    /// TOML scenario file with ScenarioConfig field names.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Comma-separated target MSE values; a single value when --users is given.
    #[arg(long, value_delimiter = ',')]
    rho: Vec<f64>,
    /// Comma-separated user counts (sweeps K instead of rho).
    #[arg(long, value_delimiter = ',')]
    users: Vec<usize>,
    /// Channel drops per axis point.
    #[arg(long, default_value_t = 100)]
    drops: usize,
    /// Base seed of the channel drops.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Architectures: `all` or a comma-separated list of ThpTxLinRx, ZfTx, ThpTx, LinTxLinRx.
    #[arg(long, default_value = "all")]
    arch: String,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (default: $SDMA_THP_WORKERS or the number of CPUs).
    #[arg(long)]
    workers: Option<usize>,
    /// Optional per-drop detail CSV.
    #[arg(long)]
    detail: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ChannelsArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Number of users (quotas follow floor(N Q / K)).
    #[arg(long)]
    users: Option<usize>,
    /// Drop index within the seed.
    #[arg(long, default_value_t = 0)]
    drop: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Channel file produced by `channels`.
    #[arg(long)]
    channels: PathBuf,
    /// Target MSE; overrides budgets from the scenario.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, default_value = "all")]
    arch: String,
    /// Also run the symbol-level check of the THP chain for this many symbol periods.
    #[arg(long)]
    link_symbols: Option<usize>,
}

fn parse_preset(s: &str) -> std::result::Result<Preset, String> {
    s.parse::<Preset>().map_err(|e| e.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSource {
    Preset(Preset),
    File(PathBuf),
}

/// Validated sweep request.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub scenario: ScenarioSource,
    pub architectures: Vec<ArchitectureId>,
    pub axis: SweepAxis,
    /// Target MSE on the users axis.
    pub rho: f64,
    pub drops: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub workers: usize,
    pub detail: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelsSpec {
    pub scenario: ScenarioSource,
    pub users: Option<usize>,
    pub drop: u64,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropSpec {
    pub scenario: ScenarioSource,
    pub channels: PathBuf,
    pub rho: Option<f64>,
    pub architectures: Vec<ArchitectureId>,
    pub link_symbols: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Sweep(RunSpec),
    Channels(ChannelsSpec),
    Run(DropSpec),
}

/// Outcome of argument parsing that does not produce a command.
#[derive(Debug, Clone, PartialEq)]
pub enum ParseOutcome {
    /// `--help` or `--version`: print and exit 0.
    Info(String),
    /// One-line diagnostic, exit 1.
    Usage(String),
}

pub fn parse_architectures(list: &str) -> Result<Vec<ArchitectureId>> {
    if list.trim().eq_ignore_ascii_case("all") {
        return Ok(ArchitectureId::ALL.to_vec());
    }
    let mut out = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let a: ArchitectureId = item.parse()?;
        if !out.contains(&a) {
            out.push(a);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidConfig("at least one architecture is required".into()));
    }
    Ok(out)
}

fn scenario_source(args: ScenarioArgs) -> Result<ScenarioSource> {
    match (args.scenario, args.config) {
        (Some(p), None) => Ok(ScenarioSource::Preset(p)),
        (None, Some(path)) => Ok(ScenarioSource::File(path)),
        (None, None) => Err(Error::InvalidConfig("one of --scenario or --config is required".into())),
        (Some(_), Some(_)) => Err(Error::InvalidConfig("--scenario and --config are exclusive".into())),
    }
}

/// Worker count from `$SDMA_THP_WORKERS`, else the available parallelism.
pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn first_line(s: &str) -> String {
    s.lines()
        .find(|l| !l.trim().is_empty())
        .unwrap_or("")
        .trim()
        .to_string()
}

pub fn parse_args<I, T>(argv: I) -> std::result::Result<Command, ParseOutcome>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        use clap::error::ErrorKind;
        match e.kind() {
            ErrorKind::DisplayHelp
            | ErrorKind::DisplayVersion
            | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => ParseOutcome::Info(e.render().to_string()),
            _ => ParseOutcome::Usage(first_line(&e.render().to_string())),
        }
    })?;
    let usage = |e: Error| ParseOutcome::Usage(format!("error: {e}"));
    match cli.command {
        CliCommand::Sweep(a) => {
            let scenario = scenario_source(a.scenario).map_err(usage)?;
            let architectures = parse_architectures(&a.arch).map_err(usage)?;
            if a.drops == 0 {
                return Err(usage(Error::InvalidConfig("--drops must be at least 1".into())));
            }
            if a.rho.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
                return Err(usage(Error::InvalidConfig("--rho values must be positive".into())));
            }
            let (axis, rho) = if a.users.is_empty() {
                let rho = if a.rho.is_empty() { vec![DEFAULT_RHO] } else { a.rho };
                (SweepAxis::Rho(rho), DEFAULT_RHO)
            } else {
                if a.rho.len() > 1 {
                    return Err(usage(Error::InvalidConfig(
                        "--users sweeps take a single --rho value".into(),
                    )));
                }
                if a.users.contains(&0) {
                    return Err(usage(Error::InvalidConfig("--users values must be positive".into())));
                }
                (SweepAxis::Users(a.users), a.rho.first().copied().unwrap_or(DEFAULT_RHO))
            };
            let workers = match a.workers {
                Some(0) => return Err(usage(Error::InvalidConfig("--workers must be at least 1".into()))),
                Some(w) => w,
                None => default_workers(),
            };
            Ok(Command::Sweep(RunSpec {
                scenario,
                architectures,
                axis,
                rho,
                drops: a.drops,
                seed: a.seed,
                out: a.out,
                workers,
                detail: a.detail,
            }))
        }
        CliCommand::Channels(a) => Ok(Command::Channels(ChannelsSpec {
            scenario: scenario_source(a.scenario).map_err(usage)?,
            users: a.users,
            drop: a.drop,
            seed: a.seed,
            out: a.out,
        })),
        CliCommand::Run(a) => Ok(Command::Run(DropSpec {
            scenario: scenario_source(a.scenario).map_err(usage)?,
            channels: a.channels,
            rho: a.rho,
            architectures: parse_architectures(&a.arch).map_err(usage)?,
            link_symbols: a.link_symbols,
        })),
    }
}

/// Scenario file contents. Absent fields fall back to `preset` (default S1).
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<String>,
    pub num_subcarriers: Option<usize>,
    pub num_users: Option<usize>,
    pub tx_antennas: Option<usize>,
    pub rx_antennas: Option<usize>,
    pub streams_per_user: Option<usize>,
    pub group_count: Option<usize>,
    /// Same quota for every user.
    pub quota: Option<usize>,
    pub quotas: Option<Vec<usize>>,
    /// Uniform budgets `n_k L rho`.
    pub rho: Option<f64>,
    pub mse_budgets: Option<Vec<f64>>,
    pub noise_variance: Option<f64>,
    pub constellation_size: Option<u32>,
    pub bandwidth_hz: Option<f64>,
    pub cell_radius: Option<f64>,
    pub pathloss_exponent: Option<f64>,
    pub min_user_distance: Option<f64>,
    pub pdp_taps: Option<usize>,
    pub pdp_decay: Option<f64>,
    pub rng_seed: Option<u64>,
}

impl ConfigFile {
    pub fn into_config(self) -> Result<ScenarioConfig> {
        let preset: Preset = match &self.preset {
            Some(p) => p.parse()?,
            None => Preset::S1,
        };
        let mut c = scenario_preset(preset);
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        take!(
            num_subcarriers,
            tx_antennas,
            rx_antennas,
            streams_per_user,
            noise_variance,
            constellation_size,
            bandwidth_hz,
            cell_radius,
            pathloss_exponent,
            min_user_distance,
            rng_seed
        );
        c.group_count = match self.group_count {
            Some(q) => q,
            None if c.rx_antennas > 0 => c.tx_antennas / c.rx_antennas,
            None => 0,
        };
        if let Some(t) = self.pdp_taps {
            c.pdp_taps = t;
            c.pdp_decay = default_pdp_decay(t);
        }
        if let Some(d) = self.pdp_decay {
            c.pdp_decay = d;
        }
        let rho = self.rho.unwrap_or(DEFAULT_RHO);
        let users = self.num_users.unwrap_or(c.num_users);
        c = c.with_users(users, rho);
        if let Some(q) = self.quota {
            c.quotas = vec![q; c.num_users];
        }
        if let Some(q) = self.quotas {
            c.quotas = q;
        }
        if c.quotas.len() == c.num_users {
            c = c.with_rho(rho);
        }
        if let Some(b) = self.mse_budgets {
            if self.rho.is_some() {
                return Err(Error::ConfigFile("give either rho or mse_budgets, not both".into()));
            }
            c.mse_budgets = b;
        }
        c.validate()?;
        c.check_quota_capacity()?;
        Ok(c)
    }
}

pub fn parse_config_text(text: &str) -> Result<ScenarioConfig> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::ConfigFile(first_line(&e.to_string())))?;
    file.into_config()
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(|source| Error::ChannelFileIo {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_text(&text)
}

pub fn resolve_scenario(source: &ScenarioSource) -> Result<ScenarioConfig> {
    match source {
        ScenarioSource::Preset(p) => Ok(scenario_preset(*p)),
        ScenarioSource::File(path) => load_config(path),
    }
}

/// C-style `%.9g`.
pub fn format_g9(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (DIGITS - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub const CSV_HEADER: &str = "axis,architecture,mean_power_db,stderr_db,drops,infeasible_rate,seed";

pub fn render_csv(result: &SweepResult) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for p in &result.points {
        for s in &p.stats {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                format_g9(p.axis_value),
                s.architecture,
                format_g9(s.mean_power_db),
                format_g9(s.stderr_db),
                s.drops,
                format_g9(s.infeasible_rate),
                result.seed
            );
        }
    }
    out
}

pub fn render_detail_csv(result: &SweepResult) -> String {
    let mut out = String::from("axis,drop,architecture,feasible,power_db,user,subcarriers\n");
    for p in &result.points {
        for s in &p.stats {
            for d in &s.per_drop {
                for (k, subs) in d.user_subcarriers.iter().enumerate() {
                    let list: Vec<String> = subs.iter().map(ToString::to_string).collect();
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{}",
                        format_g9(p.axis_value),
                        d.drop_id,
                        s.architecture,
                        d.feasible,
                        format_g9(d.power_db),
                        k,
                        list.join(";")
                    );
                }
            }
        }
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Output {
        path: path.to_path_buf(),
        source,
    })
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    write_file(path, &render_csv(result))
}

fn summary(result: &SweepResult) -> String {
    let mut out = format!(
        "{} sweep, {} drops, seed {} (ZfTx/ThpTx: per-stream MSE split)\n",
        result.axis.name(),
        result.drops,
        result.seed
    );
    for p in &result.points {
        for s in &p.stats {
            let _ = writeln!(
                out,
                "  {:>8} {:<11} {:>9.3} dB +- {:.3}  ({} drops, {:.1}% infeasible)",
                format_g9(p.axis_value),
                s.architecture.name(),
                s.mean_power_db,
                s.stderr_db,
                s.drops,
                100.0 * s.infeasible_rate
            );
        }
    }
    out
}

pub fn execute_sweep(spec: &RunSpec) -> Result<SweepResult> {
    let base = resolve_scenario(&spec.scenario)?;
    let options = SweepOptions {
        drops: spec.drops,
        seed: spec.seed,
        workers: spec.workers,
        architectures: spec.architectures.clone(),
        rho: spec.rho,
    };
    let result = run_sweep(&base, &spec.axis, &options)?;
    emit_csv(&result, &spec.out)?;
    if let Some(detail) = &spec.detail {
        write_file(detail, &render_detail_csv(&result))?;
    }
    Ok(result)
}

fn execute_channels(spec: &ChannelsSpec) -> Result<String> {
    let mut config = resolve_scenario(&spec.scenario)?;
    if let Some(k) = spec.users {
        config = config.with_users(k, DEFAULT_RHO);
    }
    config.rng_seed = spec.seed;
    config.validate()?;
    let set = generate_drop(&config, spec.drop);
    write_channels(&set, &spec.out)?;
    Ok(format!(
        "wrote drop {} ({} subcarriers, {} users) to {}\n",
        spec.drop,
        set.num_subcarriers(),
        set.num_users(),
        spec.out.display()
    ))
}

fn execute_run(spec: &DropSpec) -> Result<String> {
    let channels = load_channels(&spec.channels)?;
    let mut config = resolve_scenario(&spec.scenario)?;
    if config.num_users != channels.num_users() {
        config = config.with_users(channels.num_users(), spec.rho.unwrap_or(DEFAULT_RHO));
    }
    if let Some(rho) = spec.rho {
        config = config.with_rho(rho);
    }
    config.validate()?;
    let mut out = String::new();
    for &arch in &spec.architectures {
        let r = run_drop(&config, &channels, arch)?;
        if !r.feasible {
            let _ = writeln!(
                out,
                "{arch}: infeasible (group {})",
                r.infeasible_group.map_or(0, |g| g + 1)
            );
            continue;
        }
        let _ = writeln!(out, "{arch}: {:.4} dB", r.power_db);
        for (k, subs) in r.user_subcarriers.iter().enumerate() {
            let _ = writeln!(out, "  user {k}: mse {:.6} subcarriers {subs:?}", r.user_mse[k]);
        }
        if arch == ArchitectureId::ThpTxLinRx {
            if let Some(symbols) = spec.link_symbols {
                let rep = link_level_verify(&config, &channels, &r, symbols, config.rng_seed)?;
                for (k, (e, a)) in rep.empirical.iter().zip(&rep.analytic).enumerate() {
                    let _ = writeln!(out, "  user {k}: empirical mse {e:.6} analytic {a:.6}");
                }
            }
        }
    }
    Ok(out)
}

/// Parse, execute and report; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let command = match parse_args(argv) {
        Ok(c) => c,
        Err(ParseOutcome::Info(text)) => {
            print!("{text}");
            return EXIT_OK;
        }
        Err(ParseOutcome::Usage(line)) => {
            eprintln!("{line}");
            return EXIT_USAGE;
        }
    };
    let outcome = match &command {
        Command::Sweep(spec) => execute_sweep(spec).map(|r| summary(&r)),
        Command::Channels(spec) => execute_channels(spec),
        Command::Run(spec) => execute_run(spec),
    };
    match outcome {
        Ok(text) => {
            print!("{text}");
            EXIT_OK
        }
        Err(
            e @ (Error::InvalidConfig(_)
            | Error::UnknownPreset(_)
            | Error::ConfigFile(_)
            | Error::IndivisibleGroups { .. }),
        ) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &str) -> std::result::Result<Command, ParseOutcome> {
        parse_args(std::iter::once("sdma-thp").chain(args.split_whitespace()))
    }

    #[test]
    fn fig5_command() {
        let Command::Sweep(spec) =
            parse("sweep --scenario S3 --rho 0.05,0.1,0.25,0.5 --drops 200 --seed 7 --arch all --out fig5.csv")
                .unwrap()
        else {
            panic!("expected sweep");
        };
        assert_eq!(spec.scenario, ScenarioSource::Preset(Preset::S3));
        assert_eq!(spec.axis, SweepAxis::Rho(vec![0.05, 0.1, 0.25, 0.5]));
        assert_eq!((spec.drops, spec.seed), (200, 7));
        assert_eq!(spec.architectures, ArchitectureId::ALL.to_vec());
        assert_eq!(spec.out, PathBuf::from("fig5.csv"));
    }

    #[test]
    fn users_axis() {
        let Command::Sweep(spec) = parse("sweep --scenario S1 --users 8,16,24,32 --rho 0.25 --out a.csv").unwrap()
        else {
            panic!("expected sweep");
        };
        assert_eq!(spec.axis, SweepAxis::Users(vec![8, 16, 24, 32]));
        assert_eq!(spec.rho, 0.25);
    }

    #[test]
    fn unknown_preset_lists_valid_ones() {
        let Err(ParseOutcome::Usage(line)) = parse("sweep --scenario S9 --out a.csv") else {
            panic!("expected usage error");
        };
        assert!(line.contains("S1, S2, S3"), "{line}");
        assert!(!line.contains('\n'));
    }

    #[test]
    fn rejects_bad_input() {
        for args in [
            "sweep --scenario S1 --out a.csv --bogus",
            "sweep --scenario S1 --out a.csv --arch none",
            "sweep --scenario S1 --out a.csv --arch ,",
            "sweep --scenario S1 --out a.csv --drops 0",
            "sweep --out a.csv",
            "sweep --scenario S1 --users 8,16 --rho 0.1,0.2 --out a.csv",
            "sweep --scenario S1 --rho -1 --out a.csv",
        ] {
            assert!(matches!(parse(args), Err(ParseOutcome::Usage(_))), "{args}");
        }
    }

    #[test]
    fn help_documents_flags() {
        let Err(ParseOutcome::Info(text)) = parse("sweep --help") else {
            panic!("expected help");
        };
        for flag in [
            "--scenario",
            "--config",
            "--rho",
            "--users",
            "--drops",
            "--seed",
            "--arch",
            "--out",
            "--workers",
            "--detail",
        ] {
            assert!(text.contains(flag), "{flag}");
        }
    }

    #[test]
    fn arch_list_dedups() {
        let a = parse_architectures("ZfTx, thptx,ZfTx").unwrap();
        assert_eq!(a, vec![ArchitectureId::ZfTx, ArchitectureId::ThpTx]);
    }

    #[test]
    fn g9_formatting() {
        let cases = [
            (0.25, "0.25"),
            (16.0, "16"),
            (0.0, "0"),
            (1.0 / 3.0, "0.333333333"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (-12.3456789012, "-12.3456789"),
            (99.99999999999, "100"),
            (f64::NAN, "nan"),
        ];
        for (x, want) in cases {
            assert_eq!(format_g9(x), want, "{x}");
        }
    }

    #[test]
    fn config_file_overrides_preset() {
        let c = parse_config_text("preset = \"S2\"\nnum_subcarriers = 8\nnum_users = 4\nrho = 0.5\n").unwrap();
        assert_eq!((c.tx_antennas, c.num_subcarriers, c.num_users), (4, 8, 4));
        assert_eq!(c.quotas, vec![4; 4]);
        assert_eq!(c.mse_budgets, vec![4.0 * 2.0 * 0.5; 4]);
    }

    #[test]
    fn config_file_errors() {
        assert!(matches!(parse_config_text("bogus = 1"), Err(Error::ConfigFile(_))));
        assert!(matches!(
            parse_config_text("preset = \"S7\""),
            Err(Error::UnknownPreset(_))
        ));
        assert!(parse_config_text("rx_antennas = 3").is_err());
        assert!(parse_config_text("rho = 0.1\nmse_budgets = [1.0]").is_err());
    }
}
