//! Command-line front end.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::channel::{bloch_affine_of, choi_of, BlochAffineMap, CP_TOL, TRACE_TOL};
use crate::io::{
    channel_from_json_slice, parse_weights, result_to_json, reversal_from_json_slice,
    scheme_from_json_slice, scheme_to_json, ChannelDocument,
};
use crate::reversal::{
    analytic_reversal, avg_fidelity_analytic, avg_fidelity_monte_carlo, avg_fidelity_quadrature,
    optimize_reversal, FidelityProblem, Method, Objective, OptimizeOptions, ReversalResult,
    TVector, DEFAULT_GRID_N, DEFAULT_RESTARTS,
};
use crate::teleport::{
    all_t_operators, bell_scheme, imperfect_scheme, induced_channel, induced_channels,
    InducedChannel, TOperators, TeleportScheme,
};

#[derive(Debug, Parser)]
#[command(
    name = "qrev",
    version,
    about = "Teleportation-induced qubit channels and their optimal reversal"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the operation induced on qubit 3 by one measurement outcome.
    Teleport(TeleportArgs),
    /// Search for the reversal channel with the highest average fidelity.
    Reverse(ReverseArgs),
    /// Evaluate the average fidelity of a channel followed by a reversal.
    Fidelity(FidelityArgs),
    /// Tabulate unitary and general reversal fidelities of the imperfect
    /// measurement scheme against μ.
    SweepMu(SweepArgs),
    /// Report complete positivity, trace preservation, Choi spectrum and
    /// Bloch form of a channel.
    ChannelInfo(ChannelInfoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeName {
    Bell,
    Imperfect,
}

#[derive(Debug, Clone, Args)]
pub struct SchemeArgs {
    /// Canned scheme.
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeName>,
    /// Bell weights q1,q2,q3,q4 of the resource for `--scheme bell`.
    #[arg(long)]
    pub q: Option<String>,
    /// Measurement imperfection μ for `--scheme imperfect`.
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    /// Scheme document to read instead of a canned scheme.
    #[arg(long)]
    pub scheme_file: Option<PathBuf>,
}

/// Where a scheme came from; Bell schemes keep their weights so that the
/// closed-form optimum is available.
enum SchemeSource {
    Bell(TVector, TeleportScheme),
    Other(TeleportScheme),
}

impl SchemeSource {
    fn scheme(&self) -> &TeleportScheme {
        match self {
            SchemeSource::Bell(_, s) | SchemeSource::Other(s) => s,
        }
    }
}

impl SchemeArgs {
    fn is_given(&self) -> bool {
        self.scheme.is_some() || self.scheme_file.is_some() || self.q.is_some() || self.mu.is_some()
    }

    fn resolve(&self) -> anyhow::Result<SchemeSource> {
        match (&self.scheme, &self.scheme_file) {
            (Some(_), Some(_)) => bail!("give either --scheme or --scheme-file, not both"),
            (None, None) => bail!("no scheme given (use --scheme or --scheme-file)"),
            (None, Some(path)) => {
                if self.q.is_some() || self.mu.is_some() {
                    bail!("--q and --mu only apply to canned schemes");
                }
                Ok(SchemeSource::Other(scheme_from_json_slice(&read(path)?)?))
            }
            (Some(SchemeName::Bell), None) => {
                if self.mu.is_some() {
                    bail!("--mu does not apply to the bell scheme");
                }
                let q = parse_weights(
                    self.q
                        .as_deref()
                        .ok_or_else(|| anyhow!("--scheme bell needs --q"))?,
                )?;
                Ok(SchemeSource::Bell(
                    crate::reversal::t_vector(&q),
                    bell_scheme(&q),
                ))
            }
            (Some(SchemeName::Imperfect), None) => {
                if self.q.is_some() {
                    bail!("--q does not apply to the imperfect scheme");
                }
                let mu = self
                    .mu
                    .ok_or_else(|| anyhow!("--scheme imperfect needs --mu"))?;
                Ok(SchemeSource::Other(imperfect_scheme(mu)?))
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct TeleportArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// 1-based measurement outcome.
    #[arg(long, default_value_t = 1)]
    pub outcome: usize,
    /// Channel document to write; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the scheme document here.
    #[arg(long)]
    pub scheme_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    /// Fidelity of a single outcome, selected by `--outcome`.
    PerOutcome,
    /// One reversal used after every outcome.
    Total,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Analytic,
    Grid,
    Multistart,
}

#[derive(Debug, Args)]
pub struct ReverseArgs {
    /// Channel document to reverse.
    #[arg(long)]
    pub channel: Option<PathBuf>,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::PerOutcome)]
    pub objective: ObjectiveArg,
    /// 1-based outcome for `--objective per-outcome`.
    #[arg(long, default_value_t = 1)]
    pub outcome: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::Multistart)]
    pub method: MethodArg,
    #[arg(long, default_value_t = DEFAULT_GRID_N)]
    pub grid_n: usize,
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    pub restarts: usize,
    #[arg(long, env = "QREV_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Result document to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Oracle {
    Analytic,
    Quadrature,
    Mc,
}

#[derive(Debug, Args)]
pub struct FidelityArgs {
    /// Channel document of the operation to reverse.
    #[arg(long)]
    pub channel: Option<PathBuf>,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Reversal as a channel document or a result document.
    #[arg(long)]
    pub reversal: PathBuf,
    #[arg(long, value_enum, default_value_t = Oracle::Analytic)]
    pub oracle: Oracle,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, env = "QREV_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 0.0)]
    pub from: f64,
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
    pub to: f64,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    /// CSV file to write; standard output when omitted.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_GRID_N)]
    pub grid_n: usize,
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    pub restarts: usize,
    #[arg(long, env = "QREV_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ChannelInfoArgs {
    /// Channel document to describe.
    #[arg(long)]
    pub channel: Option<PathBuf>,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// 1-based outcome when a scheme is given.
    #[arg(long, default_value_t = 1)]
    pub outcome: usize,
}

/// Runs a parsed command, writing reports to `stdout`.
pub fn run(cli: Cli, stdout: &mut dyn std::io::Write) -> anyhow::Result<()> {
    let text = match cli.command {
        Command::Teleport(args) => teleport(&args)?,
        Command::Reverse(args) => reverse(&args)?,
        Command::Fidelity(args) => fidelity(&args)?,
        Command::SweepMu(args) => sweep_mu(&args)?,
        Command::ChannelInfo(args) => channel_info(&args)?,
    };
    stdout.write_all(text.as_bytes())?;
    Ok(())
}

fn read(path: &Path) -> anyhow::Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Either a single channel document or every outcome of a scheme.
enum Input {
    Channel(ChannelDocument),
    Scheme(SchemeSource),
}

fn input(channel: &Option<PathBuf>, scheme: &SchemeArgs) -> anyhow::Result<Input> {
    match (channel, scheme.is_given()) {
        (Some(_), true) => bail!("give either --channel or a scheme, not both"),
        (Some(path), false) => Ok(Input::Channel(channel_from_json_slice(&read(path)?)?)),
        (None, true) => Ok(Input::Scheme(scheme.resolve()?)),
        (None, false) => bail!("no input given (use --channel, --scheme or --scheme-file)"),
    }
}

fn induced_from_document(doc: &ChannelDocument) -> InducedChannel {
    let w = 0.5 * doc.channel.gram().trace().re;
    InducedChannel {
        outcome: doc.outcome.unwrap_or(1),
        channel: doc.channel.clone(),
        mean_outcome_probability: w,
    }
}

fn teleport(args: &TeleportArgs) -> anyhow::Result<String> {
    let source = args.scheme.resolve()?;
    let scheme = source.scheme();
    let induced = induced_channel(scheme, args.outcome)?;
    let doc = ChannelDocument::induced(&induced).to_json_string();
    if let Some(path) = &args.scheme_out {
        write(path, &scheme_to_json(scheme))?;
    }
    let mut report = String::new();
    writeln!(report, "outcome: {}", induced.outcome)?;
    writeln!(
        report,
        "mean_outcome_probability: {:.15e}",
        induced.mean_outcome_probability
    )?;
    writeln!(
        report,
        "trace_preserving: {} (max |sum A^dag A - I| = {:.3e})",
        induced.channel.is_trace_preserving(TRACE_TOL),
        induced.channel.trace_deviation()
    )?;
    match &args.out {
        Some(path) => {
            write(path, &doc)?;
            Ok(report)
        }
        None => Ok(doc + "\n"),
    }
}

/// Analytic optimum of a Pauli channel, read off its normalized Bloch form.
fn pauli_t_vector(t: &TOperators) -> anyhow::Result<TVector> {
    let w = t.weight();
    let m = t.coupling() / (2.0 * w);
    let c = t.offset() / (2.0 * w);
    let off_diagonal = (0..3)
        .flat_map(|r| (0..3).filter(move |&k| k != r).map(move |k| (r, k)))
        .map(|(r, k)| m[(r, k)].abs())
        .fold(c.amax(), f64::max);
    if off_diagonal > 1e-10 {
        bail!("the analytic method needs a Pauli channel (diagonal Bloch form without offset)");
    }
    Ok(TVector::new([m[(0, 0)], m[(1, 1)], m[(2, 2)]])?)
}

fn reverse(args: &ReverseArgs) -> anyhow::Result<String> {
    let (t_ops, bell) = match input(&args.channel, &args.scheme)? {
        Input::Channel(doc) => (vec![TOperators::of_channel(&doc.channel)?], None),
        Input::Scheme(source) => {
            let t = all_t_operators(source.scheme())?;
            match source {
                SchemeSource::Bell(tv, _) => (t, Some(tv)),
                SchemeSource::Other(_) => (t, None),
            }
        }
    };
    let objective = match args.objective {
        ObjectiveArg::Total => Objective::Total,
        ObjectiveArg::PerOutcome => Objective::PerOutcome(args.outcome),
    };
    let result = match args.method {
        MethodArg::Analytic => analytic(&t_ops, objective, bell)?,
        MethodArg::Grid | MethodArg::Multistart => {
            let options = OptimizeOptions {
                grid_n: args.grid_n,
                restarts: args.restarts,
                seed: args.seed,
                method: if args.method == MethodArg::Grid {
                    Method::Grid
                } else {
                    Method::Multistart
                },
                ..Default::default()
            };
            optimize_reversal(&t_ops, objective, &options)?
        }
    };
    if let Some(path) = &args.out {
        write(path, &result_to_json(&result))?;
    }
    Ok(format!("{:.12}\n", result.avg_fidelity))
}

fn analytic(
    t_ops: &[TOperators],
    objective: Objective,
    bell: Option<TVector>,
) -> anyhow::Result<ReversalResult> {
    let problem = FidelityProblem::new(t_ops, objective)?;
    let index = match objective {
        Objective::PerOutcome(i) => i,
        Objective::Total => bail!("the analytic method handles a single outcome"),
    };
    let t = match (bell, index) {
        (Some(t), 1) => t,
        _ => pauli_t_vector(&t_ops[index - 1])?,
    };
    let mut result = analytic_reversal(&t);
    let map = bloch_affine_of(&result.channel)?;
    result.avg_fidelity = problem.fidelity(&map);
    result.contribution = problem.contribution(&map);
    result.weight = problem.weight;
    result.objective = objective;
    Ok(result)
}

fn fidelity(args: &FidelityArgs) -> anyhow::Result<String> {
    let induced = match input(&args.channel, &args.scheme)? {
        Input::Channel(doc) => vec![induced_from_document(&doc)],
        Input::Scheme(source) => induced_channels(source.scheme())?,
    };
    let reversal = reversal_from_json_slice(&read(&args.reversal)?)?;
    let weight: f64 = induced.iter().map(|e| e.mean_outcome_probability).sum();
    if weight.is_nan() || weight <= crate::channel::MIN_NORMALIZATION {
        return Err(crate::Error::VanishingNormalization(weight).into());
    }
    let reversals = vec![reversal.clone(); induced.len()];
    Ok(match args.oracle {
        Oracle::Analytic => {
            let t_ops = induced
                .iter()
                .map(|e| TOperators::of_channel(&e.channel))
                .collect::<crate::Result<Vec<_>>>()?;
            let map: BlochAffineMap = bloch_affine_of(&reversal)?;
            let total = avg_fidelity_analytic(&t_ops, &vec![map; t_ops.len()])?;
            format!("{:.15}\n", total / weight)
        }
        Oracle::Quadrature => {
            format!(
                "{:.15}\n",
                avg_fidelity_quadrature(&induced, &reversals)? / weight
            )
        }
        Oracle::Mc => {
            let est = avg_fidelity_monte_carlo(&induced, &reversals, args.samples, args.seed)?;
            format!(
                "{:.15} {:.15e}\n",
                est.mean / weight,
                est.std_error / weight
            )
        }
    })
}

/// One row of the μ sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub mu: f64,
    pub w1: f64,
    pub f_unitary: f64,
    pub f_extremal: f64,
    pub gap: f64,
}

/// Best unitary and best general reversal for outcome 1 of the imperfect
/// measurement scheme at each μ, in ascending μ.
pub fn sweep_rows(
    from: f64,
    to: f64,
    steps: usize,
    options: &OptimizeOptions,
) -> crate::Result<Vec<SweepRow>> {
    let half = std::f64::consts::FRAC_PI_2;
    if !(from >= 0.0 && from < to && to <= half + 1e-12) {
        return Err(crate::Error::InvalidArgument(format!(
            "need 0 <= from < to <= pi/2, got from = {from}, to = {to}"
        )));
    }
    if steps < 2 {
        return Err(crate::Error::InvalidArgument(format!(
            "steps = {steps} (need at least 2)"
        )));
    }
    (0..steps)
        .into_par_iter()
        .map(|k| {
            let mu = if k == steps - 1 {
                to
            } else {
                from + (to - from) * k as f64 / (steps - 1) as f64
            };
            let scheme = imperfect_scheme(mu)?;
            let t_ops = [crate::teleport::t_operators(&scheme, 1)?];
            let problem = FidelityProblem::new(&t_ops, Objective::PerOutcome(1))?;
            let rotation = BlochAffineMap::new(problem.optimal_rotation(), Default::default());
            let f_unitary = problem.fidelity(&rotation);
            let f_extremal =
                optimize_reversal(&t_ops, Objective::PerOutcome(1), options)?.avg_fidelity;
            Ok(SweepRow {
                mu,
                w1: problem.weight,
                f_unitary,
                f_extremal,
                gap: f_extremal - f_unitary,
            })
        })
        .collect()
}

fn sweep_mu(args: &SweepArgs) -> anyhow::Result<String> {
    let options = OptimizeOptions {
        grid_n: args.grid_n,
        restarts: args.restarts,
        seed: args.seed,
        ..Default::default()
    };
    let rows = sweep_rows(args.from, args.to, args.steps, &options)?;
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["mu", "w1", "f_unitary", "f_extremal", "gap"])?;
    for r in &rows {
        writer.write_record(
            [r.mu, r.w1, r.f_unitary, r.f_extremal, r.gap].map(|x| format!("{x:.15e}")),
        )?;
    }
    let table = String::from_utf8(writer.into_inner()?)?;
    let best = rows
        .iter()
        .max_by(|a, b| a.gap.total_cmp(&b.gap))
        .expect("at least two rows");
    let summary = format!("max_gap: {:.15e} at mu = {:.15e}\n", best.gap, best.mu);
    match &args.csv {
        Some(path) => {
            write(path, &table)?;
            Ok(summary)
        }
        None => {
            eprint!("{summary}");
            Ok(table)
        }
    }
}

fn channel_info(args: &ChannelInfoArgs) -> anyhow::Result<String> {
    let doc = match input(&args.channel, &args.scheme)? {
        Input::Channel(doc) => doc,
        Input::Scheme(source) => {
            ChannelDocument::induced(&induced_channel(source.scheme(), args.outcome)?)
        }
    };
    let ch = &doc.channel;
    let choi = choi_of(ch);
    let mut out = String::new();
    writeln!(out, "dim: {}", ch.dim())?;
    writeln!(out, "kraus_operators: {}", ch.kraus().len())?;
    writeln!(
        out,
        "completely_positive: {}",
        choi.is_completely_positive(CP_TOL)
    )?;
    writeln!(
        out,
        "trace_preserving: {} (max |sum A^dag A - I| = {:.3e})",
        ch.is_trace_preserving(TRACE_TOL),
        ch.trace_deviation()
    )?;
    let w = 0.5 * ch.gram().trace().re;
    writeln!(out, "mean_outcome_probability: {w:.15e}")?;
    let eig: Vec<String> = choi
        .eigenvalues()
        .iter()
        .map(|l| format!("{l:.15e}"))
        .collect();
    writeln!(out, "choi_eigenvalues: [{}]", eig.join(", "))?;
    let normalized = if w > crate::channel::MIN_NORMALIZATION {
        Some(ch.scaled(1.0 / w.sqrt()))
    } else {
        None
    };
    match normalized.as_ref().map(bloch_affine_of) {
        Some(Ok(map)) => {
            if !ch.is_trace_preserving(TRACE_TOL) {
                writeln!(
                    out,
                    "bloch_form_of: channel rescaled by 1/mean_outcome_probability"
                )?;
            }
            for r in 0..3 {
                writeln!(
                    out,
                    "bloch_row_{}: [{:.15e}, {:.15e}, {:.15e}] + {:.15e}",
                    ["x", "y", "z"][r],
                    map.m[(r, 0)],
                    map.m[(r, 1)],
                    map.m[(r, 2)],
                    map.c[r]
                )?;
            }
        }
        _ => writeln!(out, "bloch_form: none (trace depends on the input state)")?,
    }
    Ok(out)
}

/// Parses `args`, runs the command, and reports any failure as one line on
/// standard error.
pub fn main_with_args<I, T>(args: I) -> std::process::ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                std::process::ExitCode::from(2)
            } else {
                std::process::ExitCode::SUCCESS
            };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock).and_then(|()| lock.flush().map_err(Into::into)) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            std::process::ExitCode::FAILURE
        }
    }
}
