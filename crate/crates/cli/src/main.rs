mod manifest;
mod range;

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use tree_bsm::analytic::{find_threshold, logical_bsm, AnalyticError};
use tree_bsm::genseq::{compile_bell_pair, verify_patterns};
use tree_bsm::montecarlo::{self, enumerate_success, McEstimate, Proportion, SampleConfig};
use tree_bsm::search::{
    enumerate_trees, evaluate_all, front_of, prune_for_target, ParetoEntry, SearchBounds,
    UNBOUNDED_PHOTONS,
};
use tree_bsm::{BranchingVector, ChannelParams, Protocol};

use manifest::RunManifest;
use range::Grid;

const EXIT_USAGE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_MISMATCH: u8 = 3;

/// Loss-tolerant logical Bell measurements on photonic tree states.
#[derive(Parser)]
#[command(name = "tree-bsm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic success and error over an (eta, eps) grid, as CSV.
    Sweep(SweepArgs),
    /// Smallest eta at which some tree of a family reaches a target success.
    Threshold(ThresholdArgs),
    /// Compare the analytic engine with the Monte-Carlo oracle.
    Validate(ValidateArgs),
    /// Compile and verify the matter-qubit generation sequence of a tree pair.
    VerifyGeneration(VerifyArgs),
    /// Evaluate all trees within bounds and report the front, as CSV.
    Search(SearchArgs),
    /// Monte-Carlo estimate only, as JSON.
    Simulate(SimulateArgs),
}

#[derive(Args, Serialize)]
struct SweepArgs {
    #[arg(long)]
    protocol: Protocol,
    /// Branching vector, e.g. 15,15,2.
    #[arg(long)]
    b: BranchingVector,
    /// Detection efficiency grid `start:stop:count[:log]` or a single value.
    #[arg(long, default_value = "0.5:1:51")]
    eta: Grid,
    /// Depolarization grid, same syntax.
    #[arg(long, default_value = "0")]
    eps: Grid,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ThresholdArgs {
    #[arg(long)]
    protocol: Protocol,
    /// Required pr_complete [default: 0.99 static, 0.95 dynamic].
    #[arg(long)]
    target: Option<f64>,
    #[arg(long, default_value_t = 3)]
    max_depth: usize,
    #[arg(long, default_value_t = 25)]
    max_branch: usize,
    /// Photon cap for the family [default: none].
    #[arg(long)]
    max_n: Option<u128>,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Clone)]
struct McArgs {
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    /// RNG seed [default: drawn from the clock and recorded].
    #[arg(long)]
    seed: Option<u64>,
    /// Sampling streams; changes which random numbers are drawn.
    #[arg(long, env = "TREE_BSM_WORKERS")]
    workers: Option<usize>,
}

#[derive(Args, Serialize)]
struct ValidateArgs {
    #[arg(long)]
    protocol: Protocol,
    #[arg(long)]
    b: BranchingVector,
    #[arg(long)]
    eta: f64,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    #[command(flatten)]
    mc: McArgs,
    /// Sample a different protocol than the analytic one (harness check).
    #[arg(long)]
    mc_protocol: Option<Protocol>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    #[arg(long)]
    b: BranchingVector,
    /// Random sign patterns when exhaustive checking is too large.
    #[arg(long, default_value_t = 64)]
    patterns: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the instruction sequence here.
    #[arg(long)]
    emit: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SearchArgs {
    #[arg(long)]
    protocol: Protocol,
    #[arg(long)]
    eta: f64,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    #[arg(long, default_value_t = 4)]
    max_depth: usize,
    #[arg(long, default_value_t = 80)]
    max_branch: usize,
    #[arg(long, default_value_t = 2000)]
    max_n: u128,
    /// Emit every evaluated tree instead of the front.
    #[arg(long)]
    all: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    protocol: Protocol,
    #[arg(long)]
    b: BranchingVector,
    #[arg(long)]
    eta: f64,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    #[command(flatten)]
    mc: McArgs,
    /// Exhaustive enumeration of loss and coin patterns instead of sampling
    /// (eps = 0, small trees only).
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let error = e.into();
        let code = match error.downcast_ref::<AnalyticError>() {
            Some(AnalyticError::UnreachableTarget { .. } | AnalyticError::NoClosedForm(_)) => {
                EXIT_INFEASIBLE
            }
            _ => EXIT_USAGE,
        };
        Failure { code, error }
    }
}

type Outcome = std::result::Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Threshold(a) => threshold(a),
        Command::Validate(a) => validate(a),
        Command::VerifyGeneration(a) => verify_generation(a),
        Command::Search(a) => search(a),
        Command::Simulate(a) => simulate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn params(eta: f64, eps: f64) -> Result<ChannelParams> {
    ChannelParams::new(eta, eps).context("invalid channel parameters")
}

fn open_output(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(
            File::create(p).with_context(|| format!("cannot write {}", p.display()))?,
        ),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json(out: Option<&Path>, value: &impl Serialize) -> Result<()> {
    let mut w = open_output(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

struct Run {
    subcommand: &'static str,
    started: Instant,
    seed: Option<u64>,
    workers: Option<usize>,
}

impl Run {
    fn start(subcommand: &'static str) -> Self {
        Self {
            subcommand,
            started: Instant::now(),
            seed: None,
            workers: None,
        }
    }

    /// Writes the manifest next to `out`, if there is an output file.
    fn finish(&self, out: Option<&Path>, parameters: &impl Serialize, extra: &[&Path]) -> Result<()> {
        let Some(out) = out else { return Ok(()) };
        let mut outputs = vec![out.to_path_buf()];
        outputs.extend(extra.iter().map(|p| p.to_path_buf()));
        RunManifest {
            subcommand: self.subcommand.to_string(),
            parameters: serde_json::to_value(parameters)?,
            seed: self.seed,
            workers: self.workers,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs,
            wall_seconds: self.started.elapsed().as_secs_f64(),
        }
        .write_next_to(out)?;
        Ok(())
    }
}

fn sweep(a: SweepArgs) -> Outcome {
    let run = Run::start("sweep");
    let (etas, epss) = (a.eta.points(), a.eps.points());
    let mut w = csv::Writer::from_writer(open_output(a.out.as_deref())?);
    w.write_record([
        "b", "protocol", "eta", "eps", "pr_complete", "err_complete", "eta_sq", "eps_bsm",
    ])?;
    for &eta in &etas {
        for &eps in &epss {
            let p = params(eta, eps)?;
            let r = logical_bsm(a.protocol, &a.b, &p)?;
            w.write_record([
                a.b.to_string(),
                a.protocol.to_string(),
                eta.to_string(),
                eps.to_string(),
                r.pr_complete.to_string(),
                r.err_complete.to_string(),
                (eta * eta).to_string(),
                p.eps_bsm().to_string(),
            ])?;
        }
    }
    w.flush()?;
    run.finish(a.out.as_deref(), &a, &[])?;
    Ok(0)
}

fn threshold(a: ThresholdArgs) -> Outcome {
    let run = Run::start("threshold");
    if a.protocol == Protocol::LossOnly {
        return Err(AnalyticError::NoClosedForm(Protocol::LossOnly).into());
    }
    let target = a.target.unwrap_or(match a.protocol {
        Protocol::Static => 0.99,
        _ => 0.95,
    });
    if !(target > 0.0 && target <= 1.0) {
        return Err(AnalyticError::InvalidTarget(target).into());
    }
    let bounds = SearchBounds::new(a.max_depth, a.max_branch, a.max_n.unwrap_or(UNBOUNDED_PHOTONS));
    let all: Vec<BranchingVector> = enumerate_trees(bounds).collect();
    if all.is_empty() {
        return Err(anyhow!("the family within {bounds:?} is empty").into());
    }
    let family = prune_for_target(all, target);
    if family.is_empty() {
        return Err(AnalyticError::UnreachableTarget { target }.into());
    }
    let report = find_threshold(a.protocol, &family, target, a.tol)?;
    eprintln!(
        "{} eta* = {:.4} in [{:.4}, {:.4}], witness ({})",
        a.protocol, report.eta_star, report.lower, report.upper, report.witness
    );
    write_json(
        a.out.as_deref(),
        &json!({ "report": report, "bounds": bounds, "target": target }),
    )?;
    run.finish(a.out.as_deref(), &a, &[])?;
    Ok(0)
}

fn resolve_mc(mc: &McArgs) -> Result<(u64, usize)> {
    let seed = mc.seed.unwrap_or_else(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0)
    });
    let workers = match mc.workers {
        Some(0) => bail!("--workers must be at least 1"),
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    Ok((seed, workers))
}

fn sample(
    protocol: Protocol,
    b: &BranchingVector,
    p: ChannelParams,
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<McEstimate> {
    let cfg = SampleConfig::new(b.clone(), p, protocol)
        .samples(samples)
        .seed(seed)
        .workers(workers);
    Ok(montecarlo::run(&cfg)?)
}

/// Smallest conditioned sample count for which an error rate is judged.
const MIN_ERROR_SAMPLES: u64 = 1000;

#[derive(Serialize)]
struct Check {
    name: &'static str,
    analytic: f64,
    monte_carlo: f64,
    stderr: f64,
    samples: u64,
    z: f64,
    /// Counted towards the exit code.
    judged: bool,
    pass: bool,
}

fn check(name: &'static str, analytic: f64, mc: &Proportion, judged: bool) -> Check {
    let z = mc.z_score(analytic);
    Check {
        name,
        analytic,
        monte_carlo: mc.value,
        stderr: mc.stderr,
        samples: mc.n,
        z,
        judged,
        pass: z.abs() <= 3.0,
    }
}

fn validate(a: ValidateArgs) -> Outcome {
    let mut run = Run::start("validate");
    if a.mc.samples < 1000 {
        return Err(anyhow!("validation needs at least 1000 samples").into());
    }
    let (seed, workers) = resolve_mc(&a.mc)?;
    (run.seed, run.workers) = (Some(seed), Some(workers));
    let p = params(a.eta, a.eps)?;
    let an = logical_bsm(a.protocol, &a.b, &p)?;
    let mc = sample(a.mc_protocol.unwrap_or(a.protocol), &a.b, p, a.mc.samples, seed, workers)?;
    let checks = [
        check("pr_complete", an.pr_complete, &mc.success, true),
        check("err_xx", an.err_xx, &mc.err_xx, mc.err_xx.n > MIN_ERROR_SAMPLES),
        check("err_zz", an.err_zz, &mc.err_zz, mc.err_zz.n > MIN_ERROR_SAMPLES),
        // The closed form treats the two parities as independent, the sampler
        // does not; reported, not judged.
        check("err_complete", an.err_complete, &mc.error, false),
    ];
    let pass = checks.iter().all(|c| !c.judged || c.pass);
    for c in &checks {
        eprintln!(
            "{:12} analytic {:.6e}  mc {:.6e} ± {:.1e}  z = {:+.2}{}",
            c.name,
            c.analytic,
            c.monte_carlo,
            c.stderr,
            c.z,
            if c.judged { "" } else { "  (not judged)" }
        );
    }
    eprintln!("{}", if pass { "PASS" } else { "FAIL" });
    write_json(
        a.out.as_deref(),
        &json!({ "pass": pass, "checks": checks, "analytic": an, "monte_carlo": mc }),
    )?;
    run.finish(a.out.as_deref(), &a, &[])?;
    Ok(if pass { 0 } else { EXIT_MISMATCH })
}

fn verify_generation(a: VerifyArgs) -> Outcome {
    let mut run = Run::start("verify-generation");
    run.seed = Some(a.seed);
    let seq = compile_bell_pair(&a.b);
    if let Some(path) = &a.emit {
        std::fs::write(path, seq.to_text())
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    let sweep = verify_patterns(&seq, &a.b, a.patterns, a.seed)?;
    let pass = sweep.all_passed();
    eprintln!(
        "{} ({}): {} instructions, {} matter registers, {} photons, {}/{} outcome patterns{}",
        if pass { "PASS" } else { "FAIL" },
        a.b,
        seq.instructions.len(),
        seq.matter_qubits,
        seq.photons,
        sweep.passed,
        sweep.patterns,
        if sweep.exhaustive { " (all)" } else { "" }
    );
    write_json(
        a.out.as_deref(),
        &json!({
            "b": a.b,
            "pass": pass,
            "instructions": seq.instructions.len(),
            "matter_qubits": seq.matter_qubits,
            "photons": seq.photons,
            "sweep": sweep,
        }),
    )?;
    let extra: Vec<&Path> = a.emit.iter().map(PathBuf::as_path).collect();
    run.finish(a.out.as_deref(), &a, &extra)?;
    Ok(if pass { 0 } else { EXIT_MISMATCH })
}

fn search(a: SearchArgs) -> Outcome {
    let run = Run::start("search");
    let p = params(a.eta, a.eps)?;
    let bounds = SearchBounds::new(a.max_depth, a.max_branch, a.max_n);
    let all = evaluate_all(bounds, &p, a.protocol)?;
    let rows = if a.all { all } else { front_of(all, &p) };
    let mut w = csv::Writer::from_writer(open_output(a.out.as_deref())?);
    w.write_record(ParetoEntry::CSV_HEADER.split(','))?;
    for e in &rows {
        w.write_record([
            e.b.to_string(),
            e.n.to_string(),
            e.protocol.to_string(),
            e.eta.to_string(),
            e.eps.to_string(),
            e.pr_complete.to_string(),
            e.err_complete.to_string(),
            e.loss_tolerant.to_string(),
            e.error_correcting.to_string(),
        ])?;
    }
    w.flush()?;
    run.finish(a.out.as_deref(), &a, &[])?;
    Ok(0)
}

fn simulate(a: SimulateArgs) -> Outcome {
    let mut run = Run::start("simulate");
    let p = params(a.eta, a.eps)?;
    if a.exact {
        let exact = enumerate_success(a.protocol, &a.b, &p)?;
        write_json(a.out.as_deref(), &json!({ "b": a.b, "protocol": a.protocol, "params": p, "exact": exact }))?;
    } else {
        let (seed, workers) = resolve_mc(&a.mc)?;
        (run.seed, run.workers) = (Some(seed), Some(workers));
        let mc = sample(a.protocol, &a.b, p, a.mc.samples, seed, workers)?;
        write_json(a.out.as_deref(), &mc)?;
    }
    run.finish(a.out.as_deref(), &a, &[])?;
    Ok(0)
}
