//! Command-line front end. Exit codes: 0 success, 1 experiment or check
//! failure, 2 invalid invocation.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use bhess_core::solvers::{BetaRule, SolverConfig, StepRule};
use clap::{Parser, Subcommand, ValueEnum};

use crate::error::BenchError;
use crate::harness::{run_experiment, step_rule_tag, ExperimentSpec, SolverSpec, DEFAULT_MAX_ITERS, DEFAULT_TOLERANCE};
use crate::output::{emit_csv, emit_manifest, emit_plots};
use crate::verify::run_oracle_suite;

#[derive(Parser, Debug)]
#[command(
    name = "bhess",
    version,
    about = "Poisson deconvolution benchmark for bilinear-Hessian optimizers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check analytic derivatives against independent oracles on a 4x4 instance
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Gd,
    Cg,
    Qn,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BetaArg {
    Daniel,
    Fr,
    Pr,
    Hs,
    Dy,
    Hz,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StepArg {
    Newton,
    Grid,
    Both,
}

#[derive(clap::Args, Debug)]
pub struct RunArgs {
    /// Grid side length
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub realizations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Gaussian blur width in pixels
    #[arg(long, default_value_t = crate::blur::DEFAULT_SIGMA)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rate_low: f64,
    #[arg(long, default_value_t = 5.0)]
    pub rate_high: f64,
    /// Solver family; repeatable. `cg` expands over the selected beta rules
    #[arg(long, value_enum, default_values_t = [SolverArg::All])]
    pub solver: Vec<SolverArg>,
    /// Beta rule(s) for conjugate gradients; repeatable
    #[arg(long, value_enum, default_values_t = [BetaArg::All])]
    pub beta_rule: Vec<BetaArg>,
    #[arg(long, value_enum, default_value_t = StepArg::Both)]
    pub step_rule: StepArg,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 12)]
    pub inner_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub grad_tol: f64,
    #[arg(long, default_value_t = 50)]
    pub ls_points: usize,
    #[arg(long, default_value_t = 0.1)]
    pub ls_lo: f64,
    #[arg(long, default_value_t = 3.3)]
    pub ls_hi: f64,
    /// Relative objective reduction that counts as converged
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tol: f64,
    /// Write wall-clock seconds into the CSVs (breaks byte-for-byte reproducibility)
    #[arg(long)]
    pub timing: bool,
    /// Skip SVG output
    #[arg(long)]
    pub no_plots: bool,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
}

fn beta_rules(args: &[BetaArg]) -> Vec<BetaRule> {
    let mut out = Vec::new();
    for a in args {
        let rules: &[BetaRule] = match a {
            BetaArg::Daniel => &[BetaRule::Daniel],
            BetaArg::Fr => &[BetaRule::FletcherReeves],
            BetaArg::Pr => &[BetaRule::PolakRibiere],
            BetaArg::Hs => &[BetaRule::HestenesStiefel],
            BetaArg::Dy => &[BetaRule::DaiYuan],
            BetaArg::Hz => &[BetaRule::HagerZhang],
            BetaArg::All => &[
                BetaRule::Daniel,
                BetaRule::FletcherReeves,
                BetaRule::PolakRibiere,
                BetaRule::HestenesStiefel,
                BetaRule::DaiYuan,
                BetaRule::HagerZhang,
            ],
        };
        for r in rules {
            if !out.contains(r) {
                out.push(*r);
            }
        }
    }
    out
}

impl RunArgs {
    pub fn to_spec(&self) -> ExperimentSpec {
        let base = SolverConfig {
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            inner_iters: self.inner_iters,
            ls_points: self.ls_points,
            ls_lo: self.ls_lo,
            ls_hi: self.ls_hi,
            ..SolverConfig::default()
        };
        let families: Vec<SolverArg> = if self.solver.contains(&SolverArg::All) {
            vec![SolverArg::Gd, SolverArg::Cg, SolverArg::Qn]
        } else {
            let mut v = Vec::new();
            for s in &self.solver {
                if !v.contains(s) {
                    v.push(*s);
                }
            }
            v
        };
        let mut solvers = Vec::new();
        for f in families {
            match f {
                SolverArg::Gd => solvers.push(SolverSpec::gd(&base)),
                SolverArg::Cg => solvers.extend(beta_rules(&self.beta_rule).into_iter().map(|r| SolverSpec::cg(&base, r))),
                SolverArg::Qn => solvers.push(SolverSpec::qn(&base)),
                SolverArg::All => unreachable!(),
            }
        }
        let step_rules = match self.step_rule {
            StepArg::Newton => vec![StepRule::NewtonStep],
            StepArg::Grid => vec![StepRule::GridLineSearch],
            StepArg::Both => vec![StepRule::NewtonStep, StepRule::GridLineSearch],
        };
        ExperimentSpec {
            n: self.n,
            realizations: self.realizations,
            rate_low: self.rate_low,
            rate_high: self.rate_high,
            sigma: self.sigma,
            master_seed: self.seed,
            solvers,
            step_rules,
            tolerance: self.tol,
            record_timing: self.timing,
            overlay: !self.no_plots,
        }
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return e.exit_code();
        }
    };
    match cli.command {
        Some(Command::Verify { seed }) => verify(seed, out, err),
        None => experiment(&cli.run, out, err),
    }
}

fn verify(seed: u64, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let checks = match run_oracle_suite(seed) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
    };
    for c in &checks {
        let _ = writeln!(
            out,
            "{} {:<42} {:.3e} (tolerance {:.0e})",
            if c.passed() { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tol
        );
    }
    i32::from(!checks.iter().all(|c| c.passed()))
}

fn experiment(args: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let spec = args.to_spec();
    if let Err(e) = spec.validate() {
        let _ = writeln!(err, "error: {e}");
        return 2;
    }
    let result = match run_experiment(&spec) {
        Ok(r) => r,
        Err(e @ BenchError::Spec(_)) => {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
    };
    let written = emit_csv(&result, &args.out).and_then(|mut files| {
        files.push(emit_manifest(&result, &args.out)?);
        if !args.no_plots {
            files.extend(emit_plots(&result, &args.out)?);
        }
        Ok(files)
    });
    let files = match written {
        Ok(f) => f,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
    };
    let _ = writeln!(
        out,
        "{:<8} {:<7} {:>9} {:>9} {:>9}",
        "solver", "rule", "iters@tol", "restarts", "seconds"
    );
    for e in &result.entries {
        let _ = writeln!(
            out,
            "{:<8} {:<7} {:>9} {:>9} {:>9.2}",
            e.name,
            step_rule_tag(e.step_rule),
            if e.median_iters_to_tol.is_finite() { e.median_iters_to_tol.to_string() } else { "-".into() },
            e.total_restarts(),
            e.total_seconds
        );
    }
    let _ = writeln!(out, "wrote {} files to {}", files.len(), args.out.display());
    0
}
