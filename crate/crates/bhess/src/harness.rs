//! The deconvolution benchmark: seeded Poisson instances, solver sweeps and
//! median aggregation over realizations.
//!
//! Poisson deconvolution with zero counts has no interior minimizer, and a
//! blurred problem is solved only slowly, so runs rarely meet a gradient
//! tolerance within a realistic budget. Progress is therefore measured on
//! the objective: a run reaches tolerance `τ` at the first iterate with
//! `f_k − f_ref ≤ τ·(f_0 − f_ref)`, where `f_ref` is the lowest value any run
//! of the experiment reached on that realization.

use std::time::Instant;

use bhess_core::poisson::{simulate_counts, PoissonDeconvProblem};
use bhess_core::solvers::{
    solve, solve_observed, BetaRule, IterateTrace, Method, SolveStatus, SolverConfig, StepRule,
};
use bhess_core::{Field, LocalModel, Objective};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::blur::{GaussianBlur, DEFAULT_SIGMA};
use crate::error::{BenchError, Result};
use crate::io::TraceRow;

pub const DEFAULT_TOLERANCE: f64 = 0.1;
pub const DEFAULT_MAX_ITERS: usize = 500;
/// Failed runs are dropped from the medians only while at least this
/// fraction of realizations succeeded.
pub const MIN_SUCCESS_FRACTION: f64 = 0.95;
pub const OVERLAY_ITERATIONS: [usize; 3] = [1, 3, 6];
pub const OVERLAY_POINTS: usize = 41;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSpec {
    pub name: String,
    pub method: Method,
    pub config: SolverConfig,
}

impl SolverSpec {
    pub fn gd(base: &SolverConfig) -> Self {
        Self {
            name: "bh-gd".into(),
            method: Method::GradientDescent,
            config: base.clone().with_beta_rule(BetaRule::None),
        }
    }

    pub fn cg(base: &SolverConfig, rule: BetaRule) -> Self {
        let name = match rule {
            BetaRule::Daniel => "bh-cg".to_owned(),
            other => format!("cg-{}", beta_rule_tag(other)),
        };
        Self {
            name,
            method: Method::ConjugateGradient,
            config: base.clone().with_beta_rule(rule),
        }
    }

    pub fn qn(base: &SolverConfig) -> Self {
        Self {
            name: "bh-qn".into(),
            method: Method::QuasiNewton,
            config: base.clone().with_beta_rule(BetaRule::None),
        }
    }

    /// BH-GD, BH-CG, the five classical CG rules and BH-QN.
    pub fn paper_suite(base: &SolverConfig) -> Vec<Self> {
        let mut v = vec![Self::gd(base), Self::cg(base, BetaRule::Daniel)];
        v.extend(BetaRule::CLASSICAL.iter().map(|&r| Self::cg(base, r)));
        v.push(Self::qn(base));
        v
    }
}

pub fn beta_rule_tag(rule: BetaRule) -> &'static str {
    match rule {
        BetaRule::Daniel => "daniel",
        BetaRule::FletcherReeves => "fr",
        BetaRule::PolakRibiere => "pr",
        BetaRule::HestenesStiefel => "hs",
        BetaRule::DaiYuan => "dy",
        BetaRule::HagerZhang => "hz",
        BetaRule::None => "none",
    }
}

pub fn step_rule_tag(rule: StepRule) -> &'static str {
    match rule {
        StepRule::NewtonStep => "newton",
        StepRule::GridLineSearch => "grid",
    }
}

/// Solver config shared by every benchmark entry unless overridden.
pub fn default_solver_config() -> SolverConfig {
    SolverConfig {
        max_iters: DEFAULT_MAX_ITERS,
        ..SolverConfig::default()
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    /// Grid side; the image has `n × n` pixels.
    pub n: usize,
    pub realizations: usize,
    pub rate_low: f64,
    pub rate_high: f64,
    pub sigma: f64,
    pub master_seed: u64,
    pub solvers: Vec<SolverSpec>,
    /// Every solver runs once per rule, overriding its configured rule.
    pub step_rules: Vec<StepRule>,
    /// Relative objective reduction defining iterations-to-tolerance.
    pub tolerance: f64,
    /// Write wall-clock seconds to the CSVs (which makes them
    /// machine-dependent).
    pub record_timing: bool,
    /// Compute the step-size overlay curves on realization 0.
    pub overlay: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            n: 100,
            realizations: 100,
            rate_low: 1.0,
            rate_high: 5.0,
            sigma: DEFAULT_SIGMA,
            master_seed: 0,
            solvers: SolverSpec::paper_suite(&default_solver_config()),
            step_rules: vec![StepRule::NewtonStep, StepRule::GridLineSearch],
            tolerance: DEFAULT_TOLERANCE,
            record_timing: false,
            overlay: false,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(BenchError::Spec(m.to_owned()));
        if self.n == 0 {
            return fail("grid size n must be at least 1");
        }
        if self.realizations == 0 {
            return fail("at least one realization is required");
        }
        if !(self.rate_low >= 0.0 && self.rate_low < self.rate_high && self.rate_high.is_finite()) {
            return fail("rates need 0 <= rate_low < rate_high");
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return fail("sigma must be positive");
        }
        if self.solvers.is_empty() {
            return fail("the solver list is empty");
        }
        if self.step_rules.is_empty() {
            return fail("no step rule selected");
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return fail("tolerance must lie in (0, 1)");
        }
        for s in &self.solvers {
            s.config
                .validate()
                .map_err(|e| BenchError::Spec(format!("solver {}: {e}", s.name)))?;
        }
        Ok(())
    }

    /// Resolved settings as manifest entries.
    pub fn manifest(&self) -> Vec<(String, String)> {
        let mut m = vec![
            ("version".to_owned(), env!("CARGO_PKG_VERSION").to_owned()),
            ("n".to_owned(), self.n.to_string()),
            ("realizations".to_owned(), self.realizations.to_string()),
            ("rate_low".to_owned(), self.rate_low.to_string()),
            ("rate_high".to_owned(), self.rate_high.to_string()),
            ("sigma".to_owned(), self.sigma.to_string()),
            ("seed".to_owned(), self.master_seed.to_string()),
            ("tolerance".to_owned(), self.tolerance.to_string()),
            ("record_timing".to_owned(), self.record_timing.to_string()),
            (
                "step_rules".to_owned(),
                self.step_rules.iter().map(|&r| step_rule_tag(r)).collect::<Vec<_>>().join(","),
            ),
            (
                "solvers".to_owned(),
                self.solvers.iter().map(|s| s.name.as_str()).collect::<Vec<_>>().join(","),
            ),
        ];
        for s in &self.solvers {
            let c = &s.config;
            m.push((
                format!("solver.{}", s.name),
                format!(
                    "method={:?} beta={} restart={:?} max_iters={} grad_tol={} inner_iters={} inner_tol={} \
                     ls_points={} ls_lo={} ls_hi={}",
                    s.method,
                    beta_rule_tag(c.beta_rule),
                    c.restart_policy,
                    c.max_iters,
                    c.grad_tol,
                    c.inner_iters,
                    c.inner_tol,
                    c.ls_points,
                    c.ls_lo,
                    c.ls_hi
                ),
            ));
        }
        m
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of realization `r`; independent of how realizations are scheduled.
pub fn realization_seed(master_seed: u64, r: usize) -> u64 {
    splitmix64(splitmix64(master_seed) ^ r as u64)
}

pub struct Instance {
    pub x_true: Field,
    pub counts: Field,
    pub x0: Field,
    pub problem: PoissonDeconvProblem<GaussianBlur>,
    /// `Σ_{c>0} (c − c·log c)`, the objective at `Tx = c`; no feasible point
    /// goes below it.
    pub saturated: f64,
}

/// Rates `x ~ U[rate_low, rate_high)` per pixel, counts `c ~ Poisson(Tx)`,
/// start at the constant field equal to the mean count.
pub fn gen_instance(spec: &ExperimentSpec, r: usize) -> Result<Instance> {
    let seed = realization_seed(spec.master_seed, r);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = [spec.n, spec.n];
    let rates = (0..spec.n * spec.n)
        .map(|_| rng.random_range(spec.rate_low..spec.rate_high))
        .collect();
    let x_true = Field::from_vec(&shape, rates)?;
    let blur = GaussianBlur::new(spec.n, spec.sigma)?;
    let counts = simulate_counts(&x_true, &blur, splitmix64(seed))?;
    let mean = counts.mean();
    if !(mean > 0.0) {
        return Err(BenchError::Experiment(format!("realization {r} has no counts")));
    }
    let x0 = Field::filled(&shape, mean)?;
    let saturated = counts
        .as_slice()
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| c - c * c.ln())
        .sum();
    let problem = PoissonDeconvProblem::new(blur, counts.clone())?;
    Ok(Instance {
        x_true,
        counts,
        x0,
        problem,
        saturated,
    })
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: IterateTrace,
    pub status: SolveStatus,
    pub wall_seconds: f64,
}

pub fn run_solver(instance: &Instance, solver: &SolverSpec, rule: StepRule) -> Result<RunOutcome> {
    let cfg = SolverConfig {
        step_rule: rule,
        ..solver.config.clone()
    };
    let start = Instant::now();
    let clock = || start.elapsed().as_secs_f64();
    let sol = solve(solver.method, &&instance.problem, &instance.x0, &cfg, &clock)?;
    Ok(RunOutcome {
        trace: sol.trace,
        status: sol.status,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Median of `values` (mean of the middle pair for even counts).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// First `k` with `f_k − f_ref ≤ τ·(f_0 − f_ref)`.
pub fn iterations_to_tolerance(values: &[f64], f_ref: f64, tolerance: f64) -> Option<usize> {
    let f0 = *values.first()?;
    let target = tolerance * (f0 - f_ref).max(0.0);
    values.iter().position(|&f| f - f_ref <= target)
}

/// `values[k]`, or the final value past the end.
fn padded(values: &[f64], k: usize) -> f64 {
    values[k.min(values.len() - 1)]
}

#[derive(Debug, Clone)]
pub struct SolverAggregate {
    pub name: String,
    pub method: Method,
    pub step_rule: StepRule,
    /// Per realization; failures keep their error message.
    pub runs: Vec<Result<RunOutcome, String>>,
    pub median_f: Vec<f64>,
    /// Median of `f_k − saturated` per iteration.
    pub median_gap: Vec<f64>,
    pub median_grad_norm: Vec<f64>,
    pub median_seconds: Vec<f64>,
    pub median_alpha: Vec<Option<f64>>,
    pub median_beta: Vec<Option<f64>>,
    pub restart_counts: Vec<usize>,
    /// Per successful realization, in realization order.
    pub iters_to_tol: Vec<Option<usize>>,
    /// Infinite when fewer than half the runs reach tolerance.
    pub median_iters_to_tol: f64,
    pub total_seconds: f64,
}

impl SolverAggregate {
    pub fn successes(&self) -> impl Iterator<Item = &RunOutcome> {
        self.runs.iter().filter_map(|r| r.as_ref().ok())
    }

    pub fn failures(&self) -> usize {
        self.runs.iter().filter(|r| r.is_err()).count()
    }

    pub fn total_restarts(&self) -> usize {
        self.successes()
            .map(|o| o.trace.records.iter().filter(|r| r.restart).count())
            .sum()
    }

    /// Median trace as CSV rows.
    pub fn median_rows(&self, with_seconds: bool) -> Vec<TraceRow> {
        (0..self.median_f.len())
            .map(|k| TraceRow {
                iter: k,
                f: self.median_f[k],
                grad_norm: self.median_grad_norm[k],
                alpha: self.median_alpha[k],
                beta: self.median_beta[k],
                restart: self.restart_counts[k],
                seconds: with_seconds.then_some(self.median_seconds[k]),
            })
            .collect()
    }
}

/// Exact objective along `s` next to its quadratic model, as in the
/// step-size illustration.
#[derive(Debug, Clone)]
pub struct OverlayCurve {
    pub iter: usize,
    pub alpha: f64,
    pub t: Vec<f64>,
    pub exact: Vec<f64>,
    pub model: Vec<f64>,
    /// `max |exact − model| / (exact(0) − min exact)` over the plotted range.
    pub max_rel_gap: f64,
}

/// Runs BH-GD on `instance` and samples `f(x_k + t·s_k)` and its quadratic
/// model for `t ∈ [0, 2α_k]` at the requested iterations.
pub fn step_overlay(instance: &Instance, iterations: &[usize], points: usize) -> Result<Vec<OverlayCurve>> {
    let last = iterations.iter().copied().max().unwrap_or(0);
    let cfg = SolverConfig {
        max_iters: last + 1,
        grad_tol: 0.0,
        ..SolverConfig::default()
    };
    let problem = &instance.problem;
    let mut curves = Vec::new();
    let mut failure = None;
    let mut observer = |k: usize, local: &<&PoissonDeconvProblem<GaussianBlur> as Objective>::Local,
                        s: &Field,
                        alpha: f64,
                        _: bool| {
        if !iterations.contains(&k) || failure.is_some() {
            return;
        }
        match overlay_curve(problem, local, s, alpha, k, points) {
            Ok(c) => curves.push(c),
            Err(e) => failure = Some(e),
        }
    };
    solve_observed(
        Method::GradientDescent,
        &problem,
        &instance.x0,
        &cfg,
        &bhess_core::solvers::NoClock,
        &mut observer,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(curves)
}

fn overlay_curve<L: LocalModel>(
    problem: &PoissonDeconvProblem<GaussianBlur>,
    local: &L,
    s: &Field,
    alpha: f64,
    iter: usize,
    points: usize,
) -> Result<OverlayCurve> {
    let f0 = local.value();
    let slope = local.gradient().inner_real(s)?;
    let curv = local.curvature(s)?;
    let (mut t, mut exact, mut model) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..points {
        let ti = 2.0 * alpha * i as f64 / (points - 1) as f64;
        let x = bhess_core::field::axpy(ti, s, local.point())?;
        let Ok(fe) = problem.eval(&x) else { continue };
        t.push(ti);
        exact.push(fe);
        model.push(f0 + ti * slope + 0.5 * ti * ti * curv);
    }
    let drop = f0 - exact.iter().copied().fold(f64::INFINITY, f64::min);
    let max_rel_gap = exact
        .iter()
        .zip(&model)
        .map(|(e, m)| (e - m).abs())
        .fold(0.0, f64::max)
        / drop.max(f64::MIN_POSITIVE);
    Ok(OverlayCurve {
        iter,
        alpha,
        t,
        exact,
        model,
        max_rel_gap,
    })
}

#[derive(Debug, Clone)]
pub struct AggregateResult {
    pub spec: ExperimentSpec,
    /// One entry per (step rule, solver), rules outermost.
    pub entries: Vec<SolverAggregate>,
    /// Per realization: lowest objective value reached by any run.
    pub reference: Vec<f64>,
    pub initial: Vec<f64>,
    pub saturated: Vec<f64>,
    pub overlay: Vec<OverlayCurve>,
}

impl AggregateResult {
    pub fn entry(&self, name: &str, rule: StepRule) -> Option<&SolverAggregate> {
        self.entries.iter().find(|e| e.name == name && e.step_rule == rule)
    }
}

struct RealizationRuns {
    initial: f64,
    saturated: f64,
    runs: Vec<Result<RunOutcome, String>>,
    overlay: Vec<OverlayCurve>,
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<AggregateResult> {
    spec.validate()?;
    let jobs: Vec<(StepRule, &SolverSpec)> = spec
        .step_rules
        .iter()
        .flat_map(|&rule| spec.solvers.iter().map(move |s| (rule, s)))
        .collect();
    let per_realization: Vec<RealizationRuns> = (0..spec.realizations)
        .into_par_iter()
        .map(|r| {
            let inst = gen_instance(spec, r)?;
            let runs = jobs
                .iter()
                .map(|&(rule, s)| run_solver(&inst, s, rule).map_err(|e| e.to_string()))
                .collect();
            let overlay = if spec.overlay && r == 0 {
                step_overlay(&inst, &OVERLAY_ITERATIONS, OVERLAY_POINTS)?
            } else {
                Vec::new()
            };
            Ok(RealizationRuns {
                initial: inst.problem.eval(&inst.x0)?,
                saturated: inst.saturated,
                runs,
                overlay,
            })
        })
        .collect::<Result<_>>()?;

    let reference: Vec<f64> = per_realization
        .iter()
        .map(|rr| {
            rr.runs
                .iter()
                .filter_map(|o| o.as_ref().ok())
                .flat_map(|o| o.trace.values())
                .fold(rr.initial, f64::min)
        })
        .collect();
    let saturated: Vec<f64> = per_realization.iter().map(|rr| rr.saturated).collect();
    let initial: Vec<f64> = per_realization.iter().map(|rr| rr.initial).collect();

    let mut entries = Vec::with_capacity(jobs.len());
    for (j, &(rule, solver)) in jobs.iter().enumerate() {
        let runs: Vec<Result<RunOutcome, String>> = per_realization.iter().map(|rr| rr.runs[j].clone()).collect();
        entries.push(aggregate(spec, solver, rule, runs, &reference, &saturated)?);
    }
    let overlay = per_realization.into_iter().next().map(|rr| rr.overlay).unwrap_or_default();
    Ok(AggregateResult {
        spec: spec.clone(),
        entries,
        initial,
        reference,
        saturated,
        overlay,
    })
}

fn aggregate(
    spec: &ExperimentSpec,
    solver: &SolverSpec,
    rule: StepRule,
    runs: Vec<Result<RunOutcome, String>>,
    reference: &[f64],
    saturated: &[f64],
) -> Result<SolverAggregate> {
    let ok: Vec<(usize, &RunOutcome)> = runs
        .iter()
        .enumerate()
        .filter_map(|(r, o)| o.as_ref().ok().map(|o| (r, o)))
        .collect();
    let needed = (MIN_SUCCESS_FRACTION * spec.realizations as f64).ceil() as usize;
    if ok.len() < needed.max(1) {
        let first = runs.iter().find_map(|r| r.as_ref().err()).cloned().unwrap_or_default();
        return Err(BenchError::Experiment(format!(
            "{} ({}) succeeded on {}/{} realizations; first error: {first}",
            solver.name,
            step_rule_tag(rule),
            ok.len(),
            spec.realizations
        )));
    }
    let values: Vec<Vec<f64>> = ok.iter().map(|(_, o)| o.trace.values().collect()).collect();
    let len = values.iter().map(Vec::len).max().unwrap_or(0);
    let column = |pick: &dyn Fn(usize, usize) -> f64| -> Vec<f64> {
        (0..len)
            .map(|k| median(&(0..ok.len()).map(|i| pick(i, k)).collect::<Vec<_>>()))
            .collect()
    };
    let median_f = column(&|i, k| padded(&values[i], k));
    let median_gap = column(&|i, k| padded(&values[i], k) - saturated[ok[i].0]);
    let median_grad_norm = column(&|i, k| {
        let r = &ok[i].1.trace.records;
        r[k.min(r.len() - 1)].grad_norm
    });
    let median_seconds = column(&|i, k| {
        let r = &ok[i].1.trace.records;
        r[k.min(r.len() - 1)].seconds
    });
    // Step data only exists while a run is still moving; padding it would
    // invent steps.
    let present = |k: usize, pick: fn(&bhess_core::solvers::IterRecord) -> Option<f64>| {
        let v: Vec<f64> = ok
            .iter()
            .filter_map(|(_, o)| o.trace.records.get(k).and_then(pick))
            .collect();
        (!v.is_empty()).then(|| median(&v))
    };
    let median_alpha = (0..len).map(|k| present(k, |r| r.alpha)).collect();
    let median_beta = (0..len).map(|k| present(k, |r| r.beta)).collect();
    let restart_counts = (0..len)
        .map(|k| ok.iter().filter(|(_, o)| o.trace.records.get(k).is_some_and(|r| r.restart)).count())
        .collect();
    let iters_to_tol: Vec<Option<usize>> = ok
        .iter()
        .zip(&values)
        .map(|((r, _), v)| iterations_to_tolerance(v, reference[*r], spec.tolerance))
        .collect();
    let as_real: Vec<f64> = iters_to_tol.iter().map(|k| k.map_or(f64::INFINITY, |k| k as f64)).collect();
    Ok(SolverAggregate {
        name: solver.name.clone(),
        method: solver.method,
        step_rule: rule,
        median_iters_to_tol: median(&as_real),
        total_seconds: ok.iter().map(|(_, o)| o.wall_seconds).sum(),
        runs,
        median_f,
        median_gap,
        median_grad_norm,
        median_seconds,
        median_alpha,
        median_beta,
        restart_counts,
        iters_to_tol,
    })
}
