//! Command-line front end. `main.rs` only forwards to [`run`].

use crate::accountant::{
    best_epsilon, composed_curve, AccountOptions, AccountingScenario, CompositionCount, EpochRule,
    GaussianSubsampling, KairouzVariant, ZhuPrefactor, INITIAL_MAX_ORDER,
};
use crate::dpconvert::{OrderGrid, OrderSearch};
use crate::error::Error;
use crate::noisechan::{vmf_sample, GradientVector, RandomSource};
use crate::qif::{
    bayes_capacity_channel, compare_safety, leakage, mechanism_capacity, posterior_vulnerability,
    prior_vulnerability, Channel, GaussianCapacityForm, Prior,
};
use crate::rdp::{MechanismSpec, MultiVmfParams};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Deserialize;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "vmfdp",
    version,
    about = "Privacy accounting and Bayes' capacity for DP-SGD noise"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, value_enum, global = true, default_value_t = Format::Csv)]
    format: Format,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// RDP curve tau(alpha) of a mechanism.
    Rdp(RdpArgs),
    /// Convert an RDP curve to (epsilon, delta).
    Convert(ConvertArgs),
    /// Subsampled, composed accounting with both approaches.
    Account(AccountArgs),
    /// Bayes' capacity of a mechanism.
    Capacity(CapacityArgs),
    /// Compare VMF and Gaussian mechanisms by Bayes' capacity.
    Compare(CompareArgs),
    /// Evaluate a parameter grid described by a TOML spec file.
    Sweep(SweepArgs),
    /// Draw VMF samples.
    Sample(SampleArgs),
    /// Bayes' capacity (and optionally leakage) of a discrete channel.
    ChannelCapacity(ChannelArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MechKind {
    Vmf,
    Gauss,
}

#[derive(Debug, Args)]
struct MechArgs {
    #[arg(long, value_enum)]
    mechanism: MechKind,
    /// Gradient dimension.
    #[arg(long = "p")]
    p: usize,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Clipping radius of the Gaussian input ball.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// VMF block sizes (comma separated, summing to p) for independent blocks.
    #[arg(long, value_delimiter = ',')]
    blocks: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Sampling rate; decimals or rationals such as 128/60000.
    #[arg(long, value_parser = parse_prob)]
    gamma: Option<f64>,
    #[arg(long, conflicts_with = "steps")]
    epochs: Option<u64>,
    #[arg(long)]
    steps: Option<u64>,
    /// Target delta; decimals or rationals such as 1/60000.
    #[arg(long, value_parser = parse_prob)]
    delta: Option<f64>,
}

#[derive(Debug, Args)]
struct VariantArgs {
    /// Subsampling-bound prefactor: orig or paper.
    #[arg(long, default_value = "orig")]
    variant_zhu: ZhuPrefactor,
    /// Advanced-composition branch: orig or paper.
    #[arg(long, default_value = "orig")]
    variant_kairouz: KairouzVariant,
    /// Gaussian capacity form: derivation or theorem.
    #[arg(long, default_value = "derivation")]
    variant_bc: GaussianCapacityForm,
    /// Gaussian RDP-domain subsampling: exact or zhu.
    #[arg(long, default_value = "exact")]
    gauss_subsampling: GaussianSubsampling,
    /// How epochs become compositions: literal or steps (default per mechanism).
    #[arg(long)]
    epoch_rule: Option<EpochRule>,
}

impl VariantArgs {
    fn options(&self) -> AccountOptions {
        AccountOptions {
            zhu: self.variant_zhu,
            kairouz: self.variant_kairouz,
            gaussian: self.gauss_subsampling,
            epoch_rule: self.epoch_rule,
        }
    }
}

#[derive(Debug, Args)]
struct RdpArgs {
    #[command(flatten)]
    mech: MechArgs,
    /// Orders (comma separated).
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
    /// Log-spaced orders `lo:hi:n`.
    #[arg(long)]
    alpha_grid: Option<String>,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    #[command(flatten)]
    mech: MechArgs,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    variants: VariantArgs,
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Debug, Args)]
struct AccountArgs {
    #[command(flatten)]
    mech: MechArgs,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    variants: VariantArgs,
}

#[derive(Debug, Args)]
struct CapacityArgs {
    #[command(flatten)]
    mech: MechArgs,
    #[command(flatten)]
    variants: VariantArgs,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long = "p")]
    p: usize,
    #[arg(long)]
    kappa: f64,
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[command(flatten)]
    variants: VariantArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// TOML sweep specification.
    spec: PathBuf,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long = "p")]
    p: usize,
    #[arg(long)]
    kappa: f64,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// TOML file with `mean = [...]`; defaults to the coordinate axis.
    #[arg(long, conflicts_with = "axis")]
    mean: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    axis: usize,
}

#[derive(Debug, Args)]
struct ChannelArgs {
    /// TOML file with `matrix = [[...], ...]` and optional `prior = [...]`.
    #[arg(long)]
    channel: PathBuf,
}

/// A failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Domain(_)
            | Error::DimensionMismatch { .. }
            | Error::MalformedChannel(_)
            | Error::InvalidMean(_)
            | Error::ZeroVector
            | Error::EmptyBatch => EXIT_USAGE,
            _ => EXIT_NUMERICAL,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `0.25`, `1e-5` or `1/60000`.
pub fn parse_prob(s: &str) -> std::result::Result<f64, String> {
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a
                .trim()
                .parse()
                .map_err(|_| format!("bad numerator in {s:?}"))?;
            let b: f64 = b
                .trim()
                .parse()
                .map_err(|_| format!("bad denominator in {s:?}"))?;
            a / b
        }
        None => s
            .trim()
            .parse()
            .map_err(|_| format!("not a number: {s:?}"))?,
    };
    if !v.is_finite() {
        return Err(format!("not a finite number: {s:?}"));
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Num(f64),
    Int(u64),
    Str(String),
    Null,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Str(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Null, Cell::Num)
    }
}

/// 17 significant digits; non-finite values as `inf`, `-inf`, `nan`.
fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => fmt_num(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Str(s) if s.contains([',', '"', '\n']) => {
                format!("\"{}\"", s.replace('"', "\"\""))
            }
            Cell::Str(s) => s.clone(),
            Cell::Null => String::new(),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => fmt_num(*v),
            Cell::Num(v) => json_str(&fmt_num(*v)),
            Cell::Int(v) => v.to_string(),
            Cell::Str(s) => json_str(s),
            Cell::Null => "null".into(),
        }
    }
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialise")
}

fn json_object(fields: &[(String, Cell)]) -> String {
    let body: Vec<String> = fields
        .iter()
        .map(|(k, v)| format!("{}:{}", json_str(k), v.json()))
        .collect();
    format!("{{{}}}", body.join(","))
}

/// One command's output, renderable as CSV or as a single JSON record.
struct Report {
    command: &'static str,
    inputs: Vec<(String, Cell)>,
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
    /// Tables always render as `{"rows": [...]}`, even with one row.
    table: bool,
    variants: Vec<(String, Cell)>,
}

impl Report {
    fn new(command: &'static str) -> Self {
        Report {
            command,
            inputs: Vec::new(),
            columns: Vec::new(),
            rows: Vec::new(),
            table: false,
            variants: Vec::new(),
        }
    }

    fn input(&mut self, k: &str, v: impl Into<Cell>) -> &mut Self {
        self.inputs.push((k.to_string(), v.into()));
        self
    }

    fn record(&mut self, fields: Vec<(&str, Cell)>) {
        self.columns = fields.iter().map(|(k, _)| k.to_string()).collect();
        self.rows = vec![fields.into_iter().map(|(_, v)| v).collect()];
    }

    fn variants(&mut self, v: &VariantArgs) {
        self.variants = vec![
            ("zhu_prefactor".into(), v.variant_zhu.as_str().into()),
            ("kairouz_branch".into(), v.variant_kairouz.as_str().into()),
            ("bc_gaussian_form".into(), v.variant_bc.as_str().into()),
            (
                "gauss_subsampling".into(),
                v.gauss_subsampling.as_str().into(),
            ),
        ];
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut s = self.columns.join(",");
                s.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    s.push_str(&cells.join(","));
                    s.push('\n');
                }
                s
            }
            Format::Json => {
                let objects: Vec<String> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let fields: Vec<(String, Cell)> = self
                            .columns
                            .iter()
                            .cloned()
                            .zip(row.iter().cloned())
                            .collect();
                        json_object(&fields)
                    })
                    .collect();
                let outputs = if self.table || objects.len() != 1 {
                    format!("{{\"rows\":[{}]}}", objects.join(","))
                } else {
                    objects[0].clone()
                };
                let mut s = String::new();
                let _ = write!(
                    s,
                    "{{\"command\":{},\"inputs\":{},\"outputs\":{},\"variants\":{},\"version\":{}}}",
                    json_str(self.command),
                    json_object(&self.inputs),
                    outputs,
                    json_object(&self.variants),
                    json_str(env!("CARGO_PKG_VERSION")),
                );
                s.push('\n');
                s
            }
        }
    }
}

fn mechanism(m: &MechArgs, report: &mut Report) -> CliResult<MechanismSpec> {
    report.input(
        "mechanism",
        match m.mechanism {
            MechKind::Vmf => "vmf",
            MechKind::Gauss => "gauss",
        },
    );
    report.input("p", m.p);
    match m.mechanism {
        MechKind::Vmf => {
            let kappa = m
                .kappa
                .ok_or_else(|| Failure::usage("--kappa is required for vmf"))?;
            report.input("kappa", kappa);
            match &m.blocks {
                Some(sizes) => {
                    if sizes.iter().sum::<usize>() != m.p {
                        return Err(Failure::usage("--blocks must sum to --p"));
                    }
                    let list: Vec<String> = sizes.iter().map(usize::to_string).collect();
                    report.input("blocks", list.join(" ").as_str());
                    Ok(MechanismSpec::VmfMulti {
                        blocks: MultiVmfParams::uniform(sizes, kappa)?,
                    })
                }
                None => Ok(MechanismSpec::vmf(m.p, kappa)?),
            }
        }
        MechKind::Gauss => {
            let sigma = m
                .sigma
                .ok_or_else(|| Failure::usage("--sigma is required for gauss"))?;
            report.input("sigma", sigma).input("radius", m.radius);
            Ok(MechanismSpec::gauss_with_radius(m.p, sigma, m.radius)?)
        }
    }
}

fn scenario(s: &ScenarioArgs, report: &mut Report) -> CliResult<AccountingScenario> {
    let gamma = s
        .gamma
        .ok_or_else(|| Failure::usage("--gamma is required"))?;
    let delta = s
        .delta
        .ok_or_else(|| Failure::usage("--delta is required"))?;
    let count = match (s.epochs, s.steps) {
        (Some(n), None) => CompositionCount::Epochs(n),
        (None, Some(n)) => CompositionCount::Steps(n),
        _ => {
            return Err(Failure::usage(
                "exactly one of --epochs or --steps is required",
            ))
        }
    };
    report.input("gamma", gamma);
    match count {
        CompositionCount::Epochs(n) => report.input("epochs", n),
        CompositionCount::Steps(n) => report.input("steps", n),
    };
    report.input("delta", delta);
    Ok(AccountingScenario::new(gamma, count, delta)?)
}

fn alphas(args: &RdpArgs) -> CliResult<Vec<f64>> {
    let mut out = args.alpha.clone();
    if let Some(g) = &args.alpha_grid {
        let parts: Vec<&str> = g.split(':').collect();
        let [lo, hi, n] = parts[..] else {
            return Err(Failure::usage("--alpha-grid expects lo:hi:n"));
        };
        let lo: f64 = lo.parse().map_err(|_| Failure::usage("bad grid start"))?;
        let hi: f64 = hi.parse().map_err(|_| Failure::usage("bad grid end"))?;
        let n: usize = n.parse().map_err(|_| Failure::usage("bad grid size"))?;
        if !(lo >= 1.0 && hi >= lo) || n == 0 {
            return Err(Failure::usage(
                "--alpha-grid needs 1 <= lo <= hi and n >= 1",
            ));
        }
        out.extend((0..n).map(|i| {
            if n == 1 {
                lo
            } else {
                (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp()
            }
        }));
    }
    if out.is_empty() {
        return Err(Failure::usage("give --alpha or --alpha-grid"));
    }
    Ok(out)
}

fn cmd_rdp(args: &RdpArgs) -> CliResult<Report> {
    let mut r = Report::new("rdp");
    let spec = mechanism(&args.mech, &mut r)?;
    let curve = spec.curve()?;
    let orders = alphas(args)?;
    r.columns = vec!["alpha".into(), "tau".into()];
    r.table = true;
    for a in orders {
        r.rows.push(vec![a.into(), curve.eval(a)?.into()]);
    }
    Ok(r)
}

fn cmd_convert(args: &ConvertArgs) -> CliResult<Report> {
    let mut r = Report::new("convert");
    r.variants(&args.variants);
    let spec = mechanism(&args.mech, &mut r)?;
    // with a sampling rate, convert the subsampled composed curve
    let curve = if args.scenario.gamma.is_some() {
        let gamma = args.scenario.gamma.unwrap_or(1.0);
        let count = match (args.scenario.epochs, args.scenario.steps) {
            (Some(n), None) => CompositionCount::Epochs(n),
            (None, Some(n)) => CompositionCount::Steps(n),
            _ => {
                return Err(Failure::usage(
                    "--gamma needs exactly one of --epochs or --steps",
                ))
            }
        };
        r.input("gamma", gamma);
        match count {
            CompositionCount::Epochs(n) => r.input("epochs", n),
            CompositionCount::Steps(n) => r.input("steps", n),
        };
        // the target delta only matters for accounting; any valid value will do here
        let sc = AccountingScenario::new(gamma, count, 0.5)?;
        composed_curve(&spec, &sc, &args.variants.options(), INITIAL_MAX_ORDER)?
    } else {
        spec.curve()?
    };
    let search = OrderSearch::new(&curve, &OrderGrid::standard());
    let g = match (args.epsilon, args.scenario.delta) {
        (Some(e), None) => {
            r.input("epsilon", e);
            search.delta_given_epsilon(e)?
        }
        (None, Some(d)) => {
            r.input("delta", d);
            search.epsilon_given_delta(d)?
        }
        _ => return Err(Failure::usage("give exactly one of --epsilon or --delta")),
    };
    r.record(vec![
        ("epsilon", g.epsilon.into()),
        ("delta", g.delta.into()),
        ("log_delta", g.log_delta.into()),
        ("alpha_star", g.alpha_star.into()),
    ]);
    Ok(r)
}

fn cmd_account(args: &AccountArgs) -> CliResult<Report> {
    let mut r = Report::new("account");
    r.variants(&args.variants);
    let spec = mechanism(&args.mech, &mut r)?;
    let sc = scenario(&args.scenario, &mut r)?;
    let options = args.variants.options();
    let rule = options.epoch_rule_for(&spec);
    r.variants.push(("epoch_rule".into(), rule.as_str().into()));
    let res = best_epsilon(&spec, &sc, &options)?;
    let a1 = res.approach1;
    let a2 = res.approach2;
    r.record(vec![
        ("epsilon_approach1", res.epsilon_approach1.into()),
        ("epsilon_approach2", res.epsilon_approach2.into()),
        ("epsilon_best", res.epsilon_best.into()),
        ("winner", res.winner.as_str().into()),
        ("alpha_star", res.alpha_star().into()),
        ("compositions", sc.compositions(rule).into()),
        ("alpha_star_approach1", a1.and_then(|d| d.alpha_star).into()),
        ("base_epsilon", a1.map(|d| d.base_epsilon).into()),
        ("epsilon_s", a1.map(|d| d.epsilon_s).into()),
        ("delta_s", a1.map(|d| d.delta_s).into()),
        ("delta_tilde", a1.map(|d| d.delta_tilde).into()),
        ("alpha_star_approach2", a2.and_then(|d| d.alpha_star).into()),
        ("max_order_approach2", a2.map(|d| d.max_order).into()),
    ]);
    Ok(r)
}

fn cmd_capacity(args: &CapacityArgs) -> CliResult<Report> {
    let mut r = Report::new("capacity");
    r.variants(&args.variants);
    let spec = mechanism(&args.mech, &mut r)?;
    let c = mechanism_capacity(&spec, args.variants.variant_bc)?;
    r.record(vec![
        ("log_capacity", c.log_capacity.into()),
        ("capacity", c.capacity.into()),
        (
            "variant",
            if spec.is_gaussian() {
                args.variants.variant_bc.as_str()
            } else {
                "closed-form"
            }
            .into(),
        ),
    ]);
    Ok(r)
}

fn cmd_compare(args: &CompareArgs) -> CliResult<Report> {
    let mut r = Report::new("compare");
    r.variants(&args.variants);
    r.input("p", args.p)
        .input("kappa", args.kappa)
        .input("sigma", args.sigma)
        .input("radius", args.radius);
    let vmf = MechanismSpec::vmf(args.p, args.kappa)?;
    let gauss = MechanismSpec::gauss_with_radius(args.p, args.sigma, args.radius)?;
    let form = args.variants.variant_bc;
    let cv = mechanism_capacity(&vmf, form)?;
    let cg = mechanism_capacity(&gauss, form)?;
    let order = compare_safety(&vmf, &gauss, form)?;
    r.record(vec![
        ("log_capacity_vmf", cv.log_capacity.into()),
        ("log_capacity_gauss", cg.log_capacity.into()),
        ("vmf_vs_gauss", order.as_str().into()),
    ]);
    Ok(r)
}

/// A number or a rational literal in a spec file.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Prob {
    Num(f64),
    Text(String),
}

impl Prob {
    fn value(&self) -> CliResult<f64> {
        match self {
            Prob::Num(v) => Ok(*v),
            Prob::Text(s) => parse_prob(s).map_err(Failure::usage),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepVariants {
    zhu: Option<ZhuPrefactor>,
    kairouz: Option<KairouzVariant>,
    bc: Option<GaussianCapacityForm>,
    gauss_subsampling: Option<GaussianSubsampling>,
    epoch_rule: Option<EpochRule>,
}

/// Sweep specification; see the README for the grammar.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSpec {
    mechanism: String,
    p: usize,
    kappa: Option<Vec<f64>>,
    sigma: Option<Vec<f64>>,
    #[serde(default = "one")]
    radius: f64,
    gamma: Option<Prob>,
    epochs: Option<u64>,
    steps: Option<u64>,
    delta: Option<Prob>,
    outputs: Vec<String>,
    #[serde(default)]
    variants: SweepVariants,
}

fn one() -> f64 {
    1.0
}

const SWEEP_OUTPUTS: [&str; 7] = [
    "epsilon_approach1",
    "epsilon_approach2",
    "epsilon_best",
    "winner",
    "alpha_star",
    "log_capacity",
    "capacity",
];

fn cmd_sweep(args: &SweepArgs) -> CliResult<Report> {
    let text = std::fs::read_to_string(&args.spec)
        .map_err(|e| Failure::usage(format!("{}: {e}", args.spec.display())))?;
    let spec: SweepSpec =
        toml::from_str(&text).map_err(|e| Failure::usage(format!("malformed sweep spec: {e}")))?;
    if spec.outputs.is_empty() {
        return Err(Failure::usage("sweep spec requests no outputs"));
    }
    let mut outputs: Vec<&str> = Vec::new();
    for o in &spec.outputs {
        let names: &[&str] = if o == "epsilon" {
            &SWEEP_OUTPUTS[..4]
        } else if let Some(i) = SWEEP_OUTPUTS.iter().position(|k| k == o) {
            &SWEEP_OUTPUTS[i..=i]
        } else {
            return Err(Failure::usage(format!("unknown sweep output {o:?}")));
        };
        // repeated or overlapping requests yield one column each
        for n in names {
            if !outputs.contains(n) {
                outputs.push(n);
            }
        }
    }
    let variants = VariantArgs {
        variant_zhu: spec.variants.zhu.unwrap_or_default(),
        variant_kairouz: spec.variants.kairouz.unwrap_or_default(),
        variant_bc: spec.variants.bc.unwrap_or_default(),
        gauss_subsampling: spec.variants.gauss_subsampling.unwrap_or_default(),
        epoch_rule: spec.variants.epoch_rule,
    };
    let mut r = Report::new("sweep");
    r.variants(&variants);
    r.table = true;
    r.input("spec", args.spec.display().to_string().as_str());
    r.input("mechanism", spec.mechanism.as_str())
        .input("p", spec.p);
    let (param, grid, kind) = match (spec.mechanism.as_str(), &spec.kappa, &spec.sigma) {
        ("vmf", Some(k), None) => ("kappa", k.clone(), MechKind::Vmf),
        ("gauss", None, Some(s)) => ("sigma", s.clone(), MechKind::Gauss),
        _ => return Err(Failure::usage(
            "sweep needs mechanism = \"vmf\" with kappa = [...] or \"gauss\" with sigma = [...]",
        )),
    };
    if grid.is_empty() {
        return Err(Failure::usage("sweep grid is empty"));
    }
    let needs_accounting = outputs
        .iter()
        .any(|o| o.starts_with("epsilon") || *o == "winner" || *o == "alpha_star");
    let scenario = if needs_accounting {
        let sargs = ScenarioArgs {
            gamma: spec.gamma.as_ref().map(Prob::value).transpose()?,
            epochs: spec.epochs,
            steps: spec.steps,
            delta: spec.delta.as_ref().map(Prob::value).transpose()?,
        };
        Some(scenario(&sargs, &mut r)?)
    } else {
        None
    };
    let options = variants.options();
    let specs = grid
        .iter()
        .map(|&v| match kind {
            MechKind::Vmf => MechanismSpec::vmf(spec.p, v),
            MechKind::Gauss => MechanismSpec::gauss_with_radius(spec.p, v, spec.radius),
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let rows: Vec<crate::Result<Vec<Cell>>> = specs
        .par_iter()
        .zip(&grid)
        .map(|(m, &v)| {
            let acc = match &scenario {
                Some(sc) => Some(best_epsilon(m, sc, &options)?),
                None => None,
            };
            let cap = if outputs.iter().any(|o| o.contains("capacity")) {
                Some(mechanism_capacity(m, variants.variant_bc)?)
            } else {
                None
            };
            let mut row = vec![Cell::Num(v)];
            for o in &outputs {
                row.push(match (*o, &acc, &cap) {
                    ("epsilon_approach1", Some(a), _) => a.epsilon_approach1.into(),
                    ("epsilon_approach2", Some(a), _) => a.epsilon_approach2.into(),
                    ("epsilon_best", Some(a), _) => a.epsilon_best.into(),
                    ("winner", Some(a), _) => a.winner.as_str().into(),
                    ("alpha_star", Some(a), _) => a.alpha_star().into(),
                    ("log_capacity", _, Some(c)) => c.log_capacity.into(),
                    ("capacity", _, Some(c)) => c.capacity.into(),
                    _ => Cell::Null,
                });
            }
            Ok(row)
        })
        .collect();
    r.columns = std::iter::once(param)
        .chain(outputs.iter().copied())
        .map(String::from)
        .collect();
    r.rows = rows.into_iter().collect::<crate::Result<_>>()?;
    Ok(r)
}

#[derive(Debug, Deserialize)]
struct MeanFile {
    mean: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct ChannelFile {
    matrix: Vec<Vec<f64>>,
    prior: Option<Vec<f64>>,
}

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn cmd_sample(args: &SampleArgs) -> CliResult<Report> {
    let mut r = Report::new("sample");
    r.table = true;
    r.input("p", args.p)
        .input("kappa", args.kappa)
        .input("count", args.count)
        .input("seed", args.seed);
    let mean = match &args.mean {
        Some(path) => {
            r.input("mean", path.display().to_string().as_str());
            let m: MeanFile = read_toml(path)?;
            if m.mean.len() != args.p {
                return Err(Error::DimensionMismatch {
                    expected: args.p,
                    found: m.mean.len(),
                }
                .into());
            }
            GradientVector::new(m.mean)?
        }
        None => {
            r.input("axis", args.axis);
            GradientVector::axis(args.p, args.axis)?
        }
    };
    let mut rng = RandomSource::from_seed(args.seed);
    r.columns = (0..args.p).map(|i| format!("y{i}")).collect();
    r.columns.push("norm".into());
    for _ in 0..args.count {
        let y = vmf_sample(&mean, args.kappa, &mut rng)?;
        let mut row: Vec<Cell> = y.as_slice().iter().map(|&v| v.into()).collect();
        row.push(y.norm().into());
        r.rows.push(row);
    }
    Ok(r)
}

fn cmd_channel(args: &ChannelArgs) -> CliResult<Report> {
    let mut r = Report::new("channel-capacity");
    r.input("channel", args.channel.display().to_string().as_str());
    let file: ChannelFile = read_toml(&args.channel)?;
    let c = Channel::new(file.matrix)?;
    let cap = bayes_capacity_channel(&c);
    let mut fields = vec![
        ("rows", c.rows().into()),
        ("cols", c.cols().into()),
        ("capacity", cap.capacity.into()),
        ("log_capacity", cap.log_capacity.into()),
    ];
    if let Some(p) = file.prior {
        let prior = Prior::new(p)?;
        fields.push(("prior_vulnerability", prior_vulnerability(&prior).into()));
        fields.push((
            "posterior_vulnerability",
            posterior_vulnerability(&prior, &c)?.into(),
        ));
        fields.push(("leakage", leakage(&prior, &c)?.into()));
    }
    r.record(fields);
    Ok(r)
}

fn dispatch(command: &Command) -> CliResult<Report> {
    match command {
        Command::Rdp(a) => cmd_rdp(a),
        Command::Convert(a) => cmd_convert(a),
        Command::Account(a) => cmd_account(a),
        Command::Capacity(a) => cmd_capacity(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Sample(a) => cmd_sample(a),
        Command::ChannelCapacity(a) => cmd_channel(a),
    }
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(rendered.as_bytes())
            } else {
                stdout.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let report = match dispatch(&cli.command) {
        Ok(r) => r,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            return f.code;
        }
    };
    let text = report.render(cli.format);
    let written = match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    match written {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_NUMERICAL
        }
    }
}
