//! Hardware-aware scaling: converts platform budgets (operations, RAM, Flash)
//! into an architecture choice.
//!
//! The procedure fixes resolution, α and B from the operation budget, t₀ from
//! RAM via the closed-form working-memory expression, and β from Flash via
//! the closed-form parameter expression — then verifies every candidate with
//! the exact estimator, because the closed forms drift from the liveness-true
//! peak by up to ~20% at small t₀. Candidates that fail exact verification
//! back off (t₀ steps down, β shrinks 0.95× per pass, capped) rather than
//! being silently clamped; infeasibility is an explicit result naming the
//! binding constraint.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::archgraph::{build_phinet, ArchitectureSpec};
use crate::resources::{closed_form_wm_for, estimate, ResourceReport};

pub const T_ZERO_MIN: u32 = 2;
pub const T_ZERO_MAX: u32 = 8;
const MAX_ADJUST_PASSES: u32 = 5;
const ALPHA_BACKOFF: f64 = 0.95;
const BETA_MIN: f64 = 0.25;
const BETA_MAX: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Constraint {
    Ram,
    Flash,
    Macc,
}

impl std::fmt::Display for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Constraint::Ram => "RAM",
            Constraint::Flash => "Flash",
            Constraint::Macc => "MACC",
        })
    }
}

#[derive(Debug, Error)]
pub enum TuneError {
    #[error("no operation budget: provide macc_budget or fps_target plus macc_per_second")]
    MissingMaccBudget,
    #[error("fps_target must be positive")]
    BadFps,
    #[error("infeasible: {constraint} budget {budget} cannot be met; smallest achievable is {required}")]
    Infeasible {
        constraint: Constraint,
        budget: u64,
        required: u64,
    },
}

/// Per-inference operation budget plus memory budgets of a target device.
/// The operation budget may be given directly or derived from a frame-rate
/// target and the platform's sustained MACC throughput.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformBudget {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub macc_budget: Option<u64>,
    pub ram_bytes: u64,
    pub flash_bytes: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fps_target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub macc_per_second: Option<u64>,
}

impl PlatformBudget {
    pub fn from_macc(macc_budget: u64, ram_bytes: u64, flash_bytes: u64) -> Self {
        PlatformBudget {
            macc_budget: Some(macc_budget),
            ram_bytes,
            flash_bytes,
            fps_target: None,
            macc_per_second: None,
        }
    }

    /// The effective per-inference MACC budget.
    pub fn resolved_macc(&self) -> Result<u64, TuneError> {
        if let Some(macc) = self.macc_budget {
            return Ok(macc);
        }
        match (self.macc_per_second, self.fps_target) {
            (Some(mps), Some(fps)) if fps > 0.0 => Ok((mps as f64 / fps) as u64),
            (Some(_), Some(_)) => Err(TuneError::BadFps),
            _ => Err(TuneError::MissingMaccBudget),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningResult {
    pub spec: ArchitectureSpec,
    pub report: ResourceReport,
    /// Fraction of each budget used: (macc, ram, flash).
    pub utilization: (f64, f64, f64),
    pub iterations: u32,
}

/// Candidate grids for resolution, width multiplier and block count. The
/// defaults bracket every benchmark configuration.
#[derive(Debug, Clone)]
pub struct GridPolicy {
    pub resolutions: Vec<usize>,
    pub alphas: Vec<f64>,
    pub blocks: Vec<usize>,
}

impl Default for GridPolicy {
    fn default() -> Self {
        GridPolicy {
            resolutions: vec![64, 96, 128, 160, 192, 224],
            alphas: (10..=200).step_by(5).map(|i| i as f64 / 100.0).collect(),
            blocks: (4..=9).collect(),
        }
    }
}

/// β from the parameter budget: 2·P_target/P₀ − 1, clamped to [0.25, 2].
pub fn solve_beta(p_target: u64, p_zero: u64) -> f64 {
    let beta = 2.0 * p_target as f64 / p_zero as f64 - 1.0;
    beta.clamp(BETA_MIN, BETA_MAX)
}

/// Largest integer t₀ in [2, 8] whose closed-form working memory fits the RAM
/// budget.
pub fn solve_t_zero(budget_ram: u64, width: usize, height: usize, alpha: f64) -> Result<u32, TuneError> {
    for t in (T_ZERO_MIN..=T_ZERO_MAX).rev() {
        if closed_form_wm_for(width, height, alpha, t as f64) <= budget_ram as f64 {
            return Ok(t);
        }
    }
    Err(TuneError::Infeasible {
        constraint: Constraint::Ram,
        budget: budget_ram,
        required: closed_form_wm_for(width, height, alpha, T_ZERO_MIN as f64).ceil() as u64,
    })
}

// (macc, balance, α, resolution, blocks) — the candidate ranking key.
type RankKey = (u64, f64, f64, usize, usize);

// Candidate preference, applied after feasibility: highest MACC utilization,
// then the more balanced resolution/α combination (compound scaling over
// one-dimensional scaling), then larger α, larger resolution, fewer blocks.
fn better(a: RankKey, b: RankKey) -> bool {
    if a.0 != b.0 {
        return a.0 > b.0;
    }
    if a.1 != b.1 {
        return a.1 > b.1;
    }
    if a.2 != b.2 {
        return a.2 > b.2;
    }
    if a.3 != b.3 {
        return a.3 > b.3;
    }
    a.4 < b.4
}

fn balance(alpha: f64, res: usize, policy: &GridPolicy) -> f64 {
    let max_alpha = policy.alphas.last().copied().unwrap_or(1.0);
    let max_res = policy.resolutions.last().copied().unwrap_or(res) as f64;
    (alpha / max_alpha).min(res as f64 / max_res)
}

/// Fix (w, h, α, B) from the operation budget alone: the grid candidate with
/// the highest exact MACC not exceeding the budget, probed at a default t₀
/// (6 above 5 MMACC, else 5) with β = 1.
pub fn select_base(budget_macc: u64, policy: &GridPolicy) -> Result<(usize, usize, f64, usize), TuneError> {
    let t_zero = if budget_macc > 5_000_000 { 6.0 } else { 5.0 };
    let mut best: Option<(RankKey, (usize, f64, usize))> = None;
    let mut smallest = u64::MAX;
    for &res in &policy.resolutions {
        for &alpha in &policy.alphas {
            for &b in &policy.blocks {
                let spec = ArchitectureSpec::new(res, res, alpha, b, 1.0, t_zero);
                let macc = estimate(&build_phinet(&spec).expect("grid candidates are valid")).macc_total;
                smallest = smallest.min(macc);
                if macc > budget_macc {
                    continue;
                }
                let key = (macc, balance(alpha, res, policy), alpha, res, b);
                if best.as_ref().is_none_or(|(k, _)| better(key, *k)) {
                    best = Some((key, (res, alpha, b)));
                }
            }
        }
    }
    match best {
        Some((_, (res, alpha, b))) => Ok((res, res, alpha, b)),
        None => Err(TuneError::Infeasible {
            constraint: Constraint::Macc,
            budget: budget_macc,
            required: smallest,
        }),
    }
}

struct Candidate {
    spec: ArchitectureSpec,
    report: ResourceReport,
    iterations: u32,
}

// Resolve t₀ and β for one grid point: walk t₀ down from the largest value
// whose closed form could fit (starting at 8 — the closed form undershoots
// the liveness-true peak at small t₀ and overshoots at large, so exact
// estimation decides), solve β from Flash, and back β off while the exact
// parameter count still overshoots. First fully feasible t₀ wins; MACC and
// working memory both shrink with t₀, so that is also the max-MACC choice.
fn resolve_candidate(
    res: usize,
    alpha: f64,
    blocks: usize,
    macc_budget: u64,
    ram: u64,
    flash: u64,
    head: bool,
) -> Option<Candidate> {
    for t in (T_ZERO_MIN..=T_ZERO_MAX).rev() {
        let base = ArchitectureSpec {
            include_head: head,
            ..ArchitectureSpec::new(res, res, alpha, blocks, 1.0, t as f64)
        };
        let base_report = estimate(&build_phinet(&base).expect("grid candidates are valid"));
        if base_report.peak_working_memory > ram {
            continue;
        }
        let mut beta = solve_beta(flash, base_report.param_memory);
        let mut spec = ArchitectureSpec { beta, ..base };
        let mut report = estimate(&build_phinet(&spec).expect("grid candidates are valid"));
        let mut iterations = 0;
        while report.param_memory > flash && beta > BETA_MIN && iterations < MAX_ADJUST_PASSES {
            beta = (beta * ALPHA_BACKOFF).max(BETA_MIN);
            spec = ArchitectureSpec { beta, ..spec };
            report = estimate(&build_phinet(&spec).expect("grid candidates are valid"));
            iterations += 1;
        }
        if report.macc_total <= macc_budget
            && report.peak_working_memory <= ram
            && report.param_memory <= flash
        {
            return Some(Candidate {
                spec,
                report,
                iterations,
            });
        }
    }
    None
}

/// Budgets → architecture, exact-verified on all three constraints.
pub fn tune(budget: &PlatformBudget) -> Result<TuningResult, TuneError> {
    tune_with_policy(budget, &GridPolicy::default(), true)
}

pub fn tune_with_policy(
    budget: &PlatformBudget,
    policy: &GridPolicy,
    head: bool,
) -> Result<TuningResult, TuneError> {
    let macc_budget = budget.resolved_macc()?;
    let ram = budget.ram_bytes;
    let flash = budget.flash_bytes;

    let mut best: Option<(RankKey, Candidate)> = None;
    for &res in &policy.resolutions {
        for &alpha in &policy.alphas {
            for &b in &policy.blocks {
                if let Some(cand) = resolve_candidate(res, alpha, b, macc_budget, ram, flash, head) {
                    let key = (
                        cand.report.macc_total,
                        balance(alpha, res, policy),
                        alpha,
                        res,
                        b,
                    );
                    if best.as_ref().is_none_or(|(k, _)| better(key, *k)) {
                        best = Some((key, cand));
                    }
                }
            }
        }
    }

    if let Some((_, cand)) = best {
        return Ok(finish(cand, macc_budget, ram, flash));
    }
    diagnose(macc_budget, ram, flash, policy, head)
}

fn finish(cand: Candidate, macc_budget: u64, ram: u64, flash: u64) -> TuningResult {
    let utilization = (
        cand.report.macc_total as f64 / macc_budget as f64,
        cand.report.peak_working_memory as f64 / ram as f64,
        cand.report.param_memory as f64 / flash as f64,
    );
    TuningResult {
        spec: cand.spec,
        report: cand.report,
        utilization,
        iterations: cand.iterations,
    }
}

// No grid point satisfied everything. Name the binding constraint — or, when
// only the operation budget binds, iterate an α back-off below the grid (the
// documented adjustment passes) and succeed if one lands feasible.
fn diagnose(
    macc_budget: u64,
    ram: u64,
    flash: u64,
    policy: &GridPolicy,
    head: bool,
) -> Result<TuningResult, TuneError> {
    let mut min_peak = u64::MAX;
    let mut min_params_ram_ok = u64::MAX;
    let mut min_macc: Option<(u64, (usize, f64, usize))> = None;

    for &res in &policy.resolutions {
        for &alpha in &policy.alphas {
            for &b in &policy.blocks {
                let spec = ArchitectureSpec {
                    include_head: head,
                    beta: BETA_MIN,
                    ..ArchitectureSpec::new(res, res, alpha, b, 1.0, T_ZERO_MIN as f64)
                };
                let report = estimate(&build_phinet(&spec).expect("grid candidates are valid"));
                min_peak = min_peak.min(report.peak_working_memory);
                if report.peak_working_memory > ram {
                    continue;
                }
                min_params_ram_ok = min_params_ram_ok.min(report.param_memory);
                if report.param_memory > flash {
                    continue;
                }
                if min_macc.is_none_or(|(m, _)| report.macc_total < m) {
                    min_macc = Some((report.macc_total, (res, alpha, b)));
                }
            }
        }
    }

    if min_peak > ram {
        return Err(TuneError::Infeasible {
            constraint: Constraint::Ram,
            budget: ram,
            required: min_peak,
        });
    }
    if min_params_ram_ok > flash {
        return Err(TuneError::Infeasible {
            constraint: Constraint::Flash,
            budget: flash,
            required: min_params_ram_ok,
        });
    }

    // RAM and Flash are satisfiable; the operation budget is binding. Back α
    // off multiplicatively from the smallest-MACC grid point.
    let (mut required, (res, mut alpha, b)) = min_macc.expect("ram- and flash-feasible point exists");
    for pass in 1..=MAX_ADJUST_PASSES {
        alpha *= ALPHA_BACKOFF;
        if let Some(mut cand) = resolve_candidate(res, alpha, b, macc_budget, ram, flash, head) {
            cand.iterations += pass;
            return Ok(finish(cand, macc_budget, ram, flash));
        }
        let spec = ArchitectureSpec {
            include_head: head,
            beta: BETA_MIN,
            ..ArchitectureSpec::new(res, res, alpha, b, 1.0, T_ZERO_MIN as f64)
        };
        required = required.min(
            estimate(&build_phinet(&spec).expect("backed-off candidate is valid")).macc_total,
        );
    }
    Err(TuneError::Infeasible {
        constraint: Constraint::Macc,
        budget: macc_budget,
        required,
    })
}
