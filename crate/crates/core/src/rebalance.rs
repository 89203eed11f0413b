//! Damped edge rebalancing and the two-step solver.
//!
//! With the matching fixed, each matched edge `(i, j)` is re-split so that
//! `i` gets its best alternative plus its share `r_ij` of the edge surplus
//! (the rebalancing operator). Clamping each matched pair into `[0, w_ij]`
//! (the thresholding operator) makes the composite `T` a sup-norm
//! non-expansive self-map of the allocations for the matching, and the
//! iteration `gamma <- kappa * T(gamma) + (1 - kappa) * gamma` then has
//! `|T(gamma^t) - gamma^t| <= 1 / sqrt(pi kappa (1 - kappa) t)` when weights
//! are at most 1. For `kappa <= 1/2` every iterate of a stable start stays
//! stable, so the loop ends at an ε-UD solution after at most
//! `ceil(1 / (pi kappa (1 - kappa) eps^2))` steps.

use std::f64::consts::PI;

use crate::bp::{self, BpOptions};
use crate::error::{InstanceError, SolveError};
use crate::exec::Exec;
use crate::instance::{check_allocation, Instance, Matching, Outcome, RingInstance};
use crate::oracle::Oracle;
use crate::verify::{self, best_alternative};
use crate::{DEFAULT_TOL_EQ};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Termination {
    /// Stop once the rebalancing residual is at most ε.
    #[default]
    Residual,
    /// Run exactly `ceil(1 / (pi kappa (1 - kappa) eps^2))` steps.
    FixedHorizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Step1Backend {
    /// Exhaustive matching and LP enumeration; certifies instability.
    #[default]
    Oracle,
    /// Message passing from zero; cannot tell a fractional optimum from a tie.
    Bp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    pub kappa: f64,
    pub epsilon: f64,
    pub termination: Termination,
    /// Overrides the rebalancing iteration cap (default: the fixed horizon).
    pub max_iters: Option<usize>,
    pub step1_backend: Step1Backend,
    pub tol_eq: f64,
    pub delta: f64,
    pub oracle_edge_cap: usize,
    /// Message-passing cap for the `Bp` backend (default: heuristic).
    pub bp_max_iters: Option<usize>,
    pub exec: Exec,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            kappa: 0.5,
            epsilon: 1e-3,
            termination: Termination::Residual,
            max_iters: None,
            step1_backend: Step1Backend::Oracle,
            tol_eq: DEFAULT_TOL_EQ,
            delta: bp::DEFAULT_DELTA,
            oracle_edge_cap: crate::oracle::DEFAULT_EDGE_CAP,
            bp_max_iters: None,
            exec: Exec::default(),
        }
    }
}

impl SolveConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        check_kappa(self.kappa)?;
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(SolveError::BadEpsilon(self.epsilon));
        }
        Ok(())
    }
}

fn check_kappa(kappa: f64) -> Result<(), SolveError> {
    if !(kappa > 0.0 && kappa <= 0.5) {
        return Err(SolveError::BadKappa(kappa));
    }
    Ok(())
}

/// `ceil(1 / (pi kappa (1 - kappa) eps^2))`.
pub fn fixed_horizon(kappa: f64, epsilon: f64) -> usize {
    (1.0 / (PI * kappa * (1.0 - kappa) * epsilon * epsilon)).ceil() as usize
}

/// `1 / sqrt(pi kappa (1 - kappa) t)`: residual envelope at step `t >= 1`
/// for weights bounded by 1.
pub fn rate_envelope(kappa: f64, t: usize) -> f64 {
    1.0 / (PI * kappa * (1.0 - kappa) * t as f64).sqrt()
}

fn rebalance_into(inst: &Instance, matching: &Matching, gamma: &[f64], exec: Exec, out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    let ids = matching.edge_ids();
    let splits = exec.map_indexed(ids.len(), |k| {
        let e = inst.edge(ids[k]);
        let alt_u = best_alternative(inst, gamma, e.u, Some(e.v));
        let alt_v = best_alternative(inst, gamma, e.v, Some(e.u));
        let surplus = e.w - alt_u - alt_v;
        let share_u = alt_u + e.r * surplus;
        (e.u, e.v, share_u, e.w - share_u)
    });
    for (u, v, gu, gv) in splits {
        out[u] = gu;
        out[v] = gv;
    }
}

/// The rebalancing operator. The output keeps every matched sum but one
/// endpoint may go negative when `gamma` is not stable.
pub fn rebalance_op(inst: &Instance, matching: &Matching, gamma: &[f64]) -> Result<Vec<f64>, SolveError> {
    check_allocation(inst, matching, gamma, DEFAULT_TOL_EQ)?;
    let mut out = vec![0.0; gamma.len()];
    rebalance_into(inst, matching, gamma, Exec::default(), &mut out);
    Ok(out)
}

fn threshold_in_place(inst: &Instance, matching: &Matching, gamma: &mut [f64]) -> Result<(), SolveError> {
    for &id in matching.edge_ids() {
        let e = inst.edge(id);
        let (gu, gv) = (gamma[e.u], gamma[e.v]);
        if gu < 0.0 && gv < 0.0 {
            return Err(SolveError::BothNegative(e.u + 1, e.v + 1));
        }
        if gu < 0.0 {
            gamma[e.u] = 0.0;
            gamma[e.v] = e.w;
        } else if gv < 0.0 {
            gamma[e.u] = e.w;
            gamma[e.v] = 0.0;
        }
    }
    for (node, g) in gamma.iter_mut().enumerate() {
        if !matching.is_matched(node) {
            *g = 0.0;
        }
    }
    Ok(())
}

/// The thresholding operator: a negative endpoint drops to 0 and its
/// partner takes the whole weight.
pub fn threshold_op(inst: &Instance, matching: &Matching, gamma_ext: &[f64]) -> Result<Vec<f64>, SolveError> {
    if gamma_ext.len() != inst.node_count() {
        return Err(InstanceError::AllocationLength {
            got: gamma_ext.len(),
            expected: inst.node_count(),
        }
        .into());
    }
    let mut out = gamma_ext.to_vec();
    threshold_in_place(inst, matching, &mut out)?;
    Ok(out)
}

/// `T = threshold ∘ rebalance`.
pub fn composite_op(inst: &Instance, matching: &Matching, gamma: &[f64]) -> Result<Vec<f64>, SolveError> {
    let ext = rebalance_op(inst, matching, gamma)?;
    let mut out = ext;
    threshold_in_place(inst, matching, &mut out)?;
    Ok(out)
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// One iterate as seen by an observer.
#[derive(Debug, Clone, Copy)]
pub struct Iterate<'a> {
    pub t: usize,
    pub gamma: &'a [f64],
    pub matching: &'a Matching,
    /// `|T(gamma^t) - gamma^t|_inf`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy)]
struct StopRule {
    residual_at_most: Option<f64>,
    at_iteration: Option<usize>,
    cap: usize,
}

struct LoopEnd {
    gamma: Vec<f64>,
    t: usize,
    residual: f64,
    trace: Vec<f64>,
    max_threshold_correction: f64,
    stopped: bool,
}

fn damped_loop(
    inst: &Instance,
    matching: &Matching,
    mut gamma: Vec<f64>,
    kappa: f64,
    rule: StopRule,
    exec: Exec,
    observe: &mut dyn FnMut(&Iterate<'_>),
) -> Result<LoopEnd, SolveError> {
    let mut reb = vec![0.0; gamma.len()];
    let mut trace = Vec::new();
    let mut max_corr: f64 = 0.0;
    let mut t = 0;
    loop {
        rebalance_into(inst, matching, &gamma, exec, &mut reb);
        let before = reb.clone();
        threshold_in_place(inst, matching, &mut reb)?;
        max_corr = max_corr.max(sup_diff(&before, &reb));
        let residual = sup_diff(&reb, &gamma);
        trace.push(residual);
        observe(&Iterate {
            t,
            gamma: &gamma,
            matching,
            residual,
        });
        let done = rule.residual_at_most.is_some_and(|eps| residual <= eps)
            || rule.at_iteration.is_some_and(|stop| t >= stop);
        if done || t >= rule.cap {
            return Ok(LoopEnd {
                gamma,
                t,
                residual,
                trace,
                max_threshold_correction: max_corr,
                stopped: done,
            });
        }
        for (g, r) in gamma.iter_mut().zip(&reb) {
            *g = kappa * r + (1.0 - kappa) * *g;
        }
        t += 1;
    }
}

fn require_stable(inst: &Instance, start: &Outcome, tol: f64) -> Result<(), SolveError> {
    start.validate(inst, tol)?;
    let report = verify::check_stability(inst, start, tol);
    if !report.is_stable() {
        let worst = report
            .unmatched_offers
            .iter()
            .map(|&(_, o)| o)
            .fold(report.max_deficit, f64::max);
        return Err(SolveError::UnstableStart(worst));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RebalanceRun {
    pub outcome: Outcome,
    pub iterations: usize,
    /// Residual at every iterate `0..=iterations`.
    pub trace: Vec<f64>,
    /// Largest change made by the thresholding step, 0 up to rounding on
    /// stable trajectories.
    pub max_threshold_correction: f64,
}

pub fn edge_rebalancing(inst: &Instance, start: &Outcome, cfg: &SolveConfig) -> Result<RebalanceRun, SolveError> {
    edge_rebalancing_with(inst, start, cfg, |_| {})
}

/// Rebalances a stable outcome to ε-correct division without changing its
/// matching; `observe` sees every iterate.
pub fn edge_rebalancing_with(
    inst: &Instance,
    start: &Outcome,
    cfg: &SolveConfig,
    mut observe: impl FnMut(&Iterate<'_>),
) -> Result<RebalanceRun, SolveError> {
    cfg.validate()?;
    require_stable(inst, start, cfg.tol_eq)?;
    let horizon = fixed_horizon(cfg.kappa, cfg.epsilon);
    let rule = match cfg.termination {
        Termination::Residual => StopRule {
            residual_at_most: Some(cfg.epsilon),
            at_iteration: None,
            cap: cfg.max_iters.unwrap_or(horizon),
        },
        Termination::FixedHorizon => StopRule {
            residual_at_most: None,
            at_iteration: Some(horizon),
            cap: cfg.max_iters.unwrap_or(horizon),
        },
    };
    let end = damped_loop(
        inst,
        &start.matching,
        start.gamma.clone(),
        cfg.kappa,
        rule,
        cfg.exec,
        &mut observe,
    )?;
    if !end.stopped {
        return Err(SolveError::IterationCap(rule.cap));
    }
    Ok(RebalanceRun {
        outcome: Outcome {
            gamma: end.gamma,
            matching: start.matching.clone(),
        },
        iterations: end.t,
        trace: end.trace,
        max_threshold_correction: end.max_threshold_correction,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactRun {
    pub outcome: Outcome,
    pub iterations: usize,
    pub residual: f64,
    /// False when `max_iters` ran out first; `outcome` is then the last iterate.
    pub reached: bool,
}

/// Keeps iterating past any ε target until the residual is at most `tol`.
pub fn iterate_to_exact(
    inst: &Instance,
    start: &Outcome,
    kappa: f64,
    max_iters: usize,
    tol: f64,
) -> Result<ExactRun, SolveError> {
    iterate_to_exact_with(inst, start, kappa, max_iters, tol, |_| {})
}

pub fn iterate_to_exact_with(
    inst: &Instance,
    start: &Outcome,
    kappa: f64,
    max_iters: usize,
    tol: f64,
    mut observe: impl FnMut(&Iterate<'_>),
) -> Result<ExactRun, SolveError> {
    check_kappa(kappa)?;
    require_stable(inst, start, DEFAULT_TOL_EQ)?;
    let end = damped_loop(
        inst,
        &start.matching,
        start.gamma.clone(),
        kappa,
        StopRule {
            residual_at_most: Some(tol),
            at_iteration: None,
            cap: max_iters,
        },
        Exec::default(),
        &mut observe,
    )?;
    Ok(ExactRun {
        outcome: Outcome {
            gamma: end.gamma,
            matching: start.matching.clone(),
        },
        iterations: end.t,
        residual: end.residual,
        reached: end.stopped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Solved,
    Unstable,
    Step1Inconclusive,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Solved => "SOLVED",
            SolveStatus::Unstable => "UNSTABLE",
            SolveStatus::Step1Inconclusive => "STEP1_INCONCLUSIVE",
        })
    }
}

/// Evidence gathered by the matching step, in the instance's own units.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Certificates {
    pub matching_weight: Option<f64>,
    pub dual_value: Option<f64>,
    /// Fractional LP optimum (oracle backend).
    pub lp_value: Option<f64>,
    pub bp_iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub outcome: Option<Outcome>,
    pub iterations_step2: usize,
    /// Rebalancing residual per iterate, in the instance's units.
    pub trace: Vec<f64>,
    pub certificates: Certificates,
}

impl SolveResult {
    fn without_outcome(status: SolveStatus, certificates: Certificates) -> Self {
        Self {
            status,
            outcome: None,
            iterations_step2: 0,
            trace: Vec::new(),
            certificates,
        }
    }
}

pub fn solve(inst: &Instance, cfg: &SolveConfig) -> Result<SolveResult, SolveError> {
    solve_with(inst, cfg, |_| {})
}

/// Full pipeline. `observe` sees every rebalancing iterate, rescaled to the
/// instance's units.
pub fn solve_with(
    inst: &Instance,
    cfg: &SolveConfig,
    mut observe: impl FnMut(&Iterate<'_>),
) -> Result<SolveResult, SolveError> {
    cfg.validate()?;
    let scale = inst.weight_bound();
    let work = if scale == 1.0 {
        inst.clone()
    } else {
        inst.scaled(1.0 / scale)
    };
    let mut certs = Certificates::default();

    let (matching, y) = match cfg.step1_backend {
        Step1Backend::Oracle => {
            let oracle = Oracle {
                edge_cap: cfg.oracle_edge_cap,
                tol_eq: cfg.tol_eq,
            };
            let mwm = oracle.brute_force_mwm(&work)?;
            let lp = oracle.fractional_lp_optimum(&work)?;
            certs.matching_weight = Some(mwm.weight * scale);
            certs.lp_value = Some(lp.objective * scale);
            if mwm.weight < lp.objective - cfg.tol_eq {
                return Ok(SolveResult::without_outcome(SolveStatus::Unstable, certs));
            }
            let matching = mwm.matchings.into_iter().next().expect("at least one optimum");
            let run = bp::run_algorithm_a_with(&work, &matching, cfg.delta, cfg.exec, |_| {})?;
            certs.bp_iterations = Some(run.iterations);
            (matching, run.dual.expect("converged runs carry a dual"))
        }
        Step1Backend::Bp => {
            let opts = BpOptions {
                max_iters: cfg.bp_max_iters.unwrap_or_else(|| bp::heuristic_max_iters(&work)),
                delta: cfg.delta,
                exec: cfg.exec,
            };
            let run = match bp::run_bp_mwm(&work, &opts) {
                Ok(run) if run.converged => run,
                _ => {
                    return Ok(SolveResult::without_outcome(
                        SolveStatus::Step1Inconclusive,
                        certs,
                    ))
                }
            };
            certs.bp_iterations = Some(run.iterations);
            let matching = run.matching.expect("converged runs carry a matching");
            let y = run.dual.expect("converged runs carry a dual");
            certs.matching_weight = Some(matching.weight(&work) * scale);
            if bp::check_stable_pair(&work, &y, &matching, cfg.tol_eq).is_err() {
                return Ok(SolveResult::without_outcome(
                    SolveStatus::Step1Inconclusive,
                    certs,
                ));
            }
            (matching, y)
        }
    };
    certs.dual_value = Some(y.iter().sum::<f64>() * scale);

    let start = Outcome { gamma: y, matching };
    let work_cfg = SolveConfig {
        epsilon: cfg.epsilon / scale,
        ..*cfg
    };
    let mut buf = Vec::new();
    let run = edge_rebalancing_with(&work, &start, &work_cfg, |it| {
        if scale == 1.0 {
            observe(it);
        } else {
            buf.clear();
            buf.extend(it.gamma.iter().map(|g| g * scale));
            observe(&Iterate {
                t: it.t,
                gamma: &buf,
                matching: it.matching,
                residual: it.residual * scale,
            });
        }
    })?;

    let mut outcome = run.outcome;
    if scale != 1.0 {
        outcome.gamma.iter_mut().for_each(|g| *g *= scale);
    }
    Ok(SolveResult {
        status: SolveStatus::Solved,
        outcome: Some(outcome),
        iterations_step2: run.iterations,
        trace: run.trace.into_iter().map(|r| r * scale).collect(),
        certificates: certs,
    })
}

/// Result of rebalancing the ring's unstable outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowProgressReport {
    pub eps_prime: f64,
    /// `floor(1 / (4 eps'))`.
    pub lower_bound: u64,
    /// `|gamma^(t+1) - gamma^t|_inf` for every step taken.
    pub step_changes: Vec<f64>,
    /// Deficit `w - gamma_i - gamma_j` on the bad edge at every iterate.
    pub bad_edge_deficits: Vec<f64>,
    /// First iterate with deficit at most 1/2, if reached within the cap.
    pub first_half_stable: Option<usize>,
}

impl SlowProgressReport {
    pub fn max_step_change(&self) -> f64 {
        self.step_changes.iter().copied().fold(0.0, f64::max)
    }
}

/// Runs the damped iteration from the ring's unstable outcome, bypassing
/// the stability precondition, until the bad edge becomes (1/2)-stable or
/// `max_iters` steps pass.
pub fn slow_progress_demo(ring: &RingInstance, kappa: f64, max_iters: usize) -> Result<SlowProgressReport, SolveError> {
    check_kappa(kappa)?;
    let inst = &ring.instance;
    let matching = &ring.bad_outcome.matching;
    let bad = *inst.edge(ring.bad_edge);
    let mut gamma = ring.bad_outcome.gamma.clone();
    let mut reb = vec![0.0; gamma.len()];
    let mut report = SlowProgressReport {
        eps_prime: ring.eps_prime,
        lower_bound: ring.slow_progress_bound(),
        step_changes: Vec::new(),
        bad_edge_deficits: Vec::new(),
        first_half_stable: None,
    };
    for t in 0..=max_iters {
        let deficit = bad.w - gamma[bad.u] - gamma[bad.v];
        report.bad_edge_deficits.push(deficit);
        if deficit <= 0.5 {
            report.first_half_stable = Some(t);
            break;
        }
        if t == max_iters {
            break;
        }
        rebalance_into(inst, matching, &gamma, Exec::Sequential, &mut reb);
        threshold_in_place(inst, matching, &mut reb)?;
        let mut change: f64 = 0.0;
        for (g, r) in gamma.iter_mut().zip(&reb) {
            let next = kappa * r + (1.0 - kappa) * *g;
            change = change.max((next - *g).abs());
            *g = next;
        }
        report.step_changes.push(change);
    }
    Ok(report)
}
