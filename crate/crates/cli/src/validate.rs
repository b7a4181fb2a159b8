//! Acceptance suite: numbered criteria with explicit pass/fail gates.
//!
//! Every simulation helper verifies the hard run invariants (conservation,
//! permanent bankruptcy, anticlique absorption, token partitions) on every
//! replicate; a violation surfaces as an error here and fails both the
//! criterion that hit it and criterion 12.

use std::time::{Duration, Instant};

use anyhow::Result;
use serde::Serialize;

use gambler_core::models::GwOffspring;
use gambler_core::oracle;
use gambler_core::solver::{
    refine_and_estimate_error, solve_dary_fixed_point, solve_gw, solve_r_regular, Grid, Problem,
};

use crate::experiments;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// Reduced replicate counts; finishes in well under two minutes.
    Fast,
    /// The replicate counts and tolerances the criteria are stated at.
    Full,
}

impl std::str::FromStr for Suite {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Suite> {
        match s {
            "fast" => Ok(Suite::Fast),
            "full" => Ok(Suite::Full),
            other => anyhow::bail!("unknown suite `{other}`; expected fast or full"),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    /// false for report-only criteria that never gate the suite
    pub gated: bool,
    pub pass: bool,
    pub detail: String,
    pub elapsed_ms: u128,
    #[serde(skip)]
    pub invariant_violation: bool,
}

pub const CRITERIA: [(usize, &str); 13] = [
    (1, "kingman-fixation-time"),
    (2, "winner-uniformity"),
    (3, "pair-moment-decay"),
    (4, "construction-equivalence"),
    (5, "exchangeability"),
    (6, "er-density"),
    (7, "pgw-geometric"),
    (8, "solver-closed-form"),
    (9, "dary-bounds"),
    (10, "regular-sandwich-density"),
    (11, "near-clique-bounds"),
    (12, "hard-invariants"),
    (13, "torus-exponent-report"),
];

struct Params {
    kingman_reps: usize,
    winner_reps: usize,
    winner_weighted_reps: usize,
    pair_reps: usize,
    equiv_reps: usize,
    exch_reps: usize,
    er_n: usize,
    er_reps: usize,
    er_tol: f64,
    pgw_reps: usize,
    grid_m_z: usize,
    grid_t_step: f64,
    fine_m_z: usize,
    fine_t_step: f64,
    regular_n: usize,
    regular_reps: usize,
    regular_tol: f64,
    ring_reps: usize,
    torus_reps: usize,
}

impl Params {
    fn new(suite: Suite) -> Params {
        match suite {
            Suite::Full => Params {
                kingman_reps: 2_000,
                winner_reps: 60_000,
                winner_weighted_reps: 50_000,
                pair_reps: 20_000,
                equiv_reps: 100_000,
                exch_reps: 100_000,
                er_n: 20_000,
                er_reps: 20,
                er_tol: 0.01,
                pgw_reps: 50_000,
                grid_m_z: 201,
                grid_t_step: 0.005,
                fine_m_z: 1_001,
                fine_t_step: 0.001,
                regular_n: 10_000,
                regular_reps: 20,
                regular_tol: 0.01,
                ring_reps: 2_000,
                torus_reps: 300,
            },
            Suite::Fast => Params {
                kingman_reps: 300,
                winner_reps: 12_000,
                winner_weighted_reps: 8_000,
                pair_reps: 4_000,
                equiv_reps: 20_000,
                exch_reps: 20_000,
                er_n: 5_000,
                er_reps: 8,
                er_tol: 0.02,
                pgw_reps: 10_000,
                grid_m_z: 101,
                grid_t_step: 0.01,
                fine_m_z: 501,
                fine_t_step: 0.002,
                regular_n: 2_000,
                regular_reps: 10,
                regular_tol: 0.02,
                ring_reps: 400,
                torus_reps: 80,
            },
        }
    }
}

fn criterion_1(p: &Params, seed: u64) -> Result<(bool, String)> {
    let s = experiments::kingman(200, p.kingman_reps, seed)?;
    let pass = s.z <= 3.0;
    Ok((
        pass,
        format!(
            "mean T {:.4} (SE {:.4}) vs exact {:.4}, z {:.2}",
            s.estimate.mean, s.estimate.std_error, s.exact, s.z
        ),
    ))
}

fn criterion_2(p: &Params, seed: u64) -> Result<(bool, String)> {
    let s = experiments::winner_uniformity(6, p.winner_reps, p.winner_weighted_reps, seed)?;
    let z0 = (s.weighted_freq0 - s.weighted_exact0).abs() / s.weighted_se0;
    let pass = s.p_value > 1e-3 && z0 <= 3.0;
    Ok((
        pass,
        format!(
            "uniform p {:.4}; weighted freq0 {:.4} vs 0.75, z {:.2}",
            s.p_value, s.weighted_freq0, z0
        ),
    ))
}

fn criterion_3(p: &Params, seed: u64) -> Result<(bool, String)> {
    let s = experiments::pair_moment(50, &[0.25, 0.5, 1.0], p.pair_reps, seed)?;
    let max_z = s.rows.iter().map(|r| r.z).fold(0.0f64, f64::max);
    let pass = max_z <= 3.0 && s.second_moment.z <= 3.0;
    Ok((
        pass,
        format!(
            "max pair-moment z {:.2}; E[X(X-1)](1) {:.2} vs {:.2}, z {:.2}",
            max_z, s.second_moment.estimate.mean, s.second_moment.exact, s.second_moment.z
        ),
    ))
}

fn criterion_4(p: &Params, seed: u64) -> Result<(bool, String)> {
    let s = experiments::construction_equivalence(p.equiv_reps, 0.5, seed)?;
    let min_p = s
        .p_direct_augmented
        .min(s.p_direct_token)
        .min(s.p_augmented_token);
    Ok((
        min_p > 1e-3,
        format!(
            "pairwise p {:.4}/{:.4}/{:.4} over {} joint cells",
            s.p_direct_augmented, s.p_direct_token, s.p_augmented_token, s.cells
        ),
    ))
}

fn criterion_5(p: &Params, seed: u64) -> Result<(bool, String)> {
    let s = experiments::exchangeability(p.exch_reps, 0.4, seed)?;
    Ok((
        s.p_value > 1e-3,
        format!(
            "p {:.4} over {} conditioned replicates, counts {:?}",
            s.p_value, s.conditioned, s.counts
        ),
    ))
}

fn criterion_6(p: &Params, seed: u64) -> Result<(bool, String)> {
    let mut pass = true;
    let mut parts = Vec::new();
    for c in [1.0, 2.0] {
        let s = experiments::er_density(p.er_n, c, p.er_reps, seed)?;
        let err = (s.estimate.mean - s.limit).abs();
        pass &= err <= p.er_tol;
        parts.push(format!("c={c}: {:.4} vs {:.4}", s.estimate.mean, s.limit));
    }
    Ok((pass, parts.join("; ")))
}

fn criterion_7(p: &Params, seed: u64) -> Result<(bool, String)> {
    let s = experiments::pgw_geometric(1.0, 12, p.pgw_reps, seed)?;
    let err = (s.solvent_freq - s.solvent_limit).abs();
    let allowance = 3.0 * s.solvent_se + 0.01;
    let pass = err <= allowance && s.tv_distance < 0.02;
    Ok((
        pass,
        format!(
            "P(X>0) {:.4} vs {:.4} (allowance {:.4}); TV {:.4}",
            s.solvent_freq, s.solvent_limit, allowance, s.tv_distance
        ),
    ))
}

fn criterion_8(p: &Params, _seed: u64) -> Result<(bool, String)> {
    let offspring = GwOffspring::poisson(1.0)?;
    let fine = solve_gw(&offspring, Grid::new(p.fine_m_z, p.fine_t_step, 1.0)?)?;
    let mut max_err = 0.0f64;
    let z_points = fine.grid().z_points();
    let t_points = fine.grid().t_points();
    for (ti, &t) in t_points.iter().enumerate() {
        for (zi, &z) in z_points.iter().enumerate() {
            let exact = oracle::pgw_phi(1.0, z, t)?;
            max_err = max_err.max((fine.phi(zi, ti) - exact).abs());
        }
    }
    // Richardson consistency: the marcher is second order, so halving both
    // steps should shrink the true error about fourfold.
    let problem = Problem::Gw(&offspring);
    let coarse_grid = Grid::new(p.grid_m_z, p.grid_t_step, 1.0)?;
    let coarse = problem.solve(coarse_grid)?;
    let refined = problem.solve(coarse_grid.refined())?;
    let exact = oracle::pgw_phi(1.0, 0.0, 1.0)?;
    let err_coarse = (coarse.phi(0, coarse.grid().n_steps()) - exact).abs();
    let err_refined = (refined.phi(0, refined.grid().n_steps()) - exact).abs();
    let ratio = err_coarse / err_refined;
    let (_, estimate) = refine_and_estimate_error(&problem, coarse_grid)?;
    let pass = max_err < 1e-3 && (2.5..=6.5).contains(&ratio);
    Ok((pass, format!(
        "max |phi - closed form| {max_err:.2e}; refinement ratio {ratio:.2}; Richardson estimate {estimate:.2e}"
    )))
}

fn criterion_9(p: &Params, _seed: u64) -> Result<(bool, String)> {
    let mut pass = true;
    let mut worst = 0.0f64;
    for d in 2..=10 {
        let table = solve_dary_fixed_point(d, Grid::new(p.grid_m_z, p.grid_t_step, 1.0)?)?;
        let z_points = table.grid().z_points();
        let t_points = table.grid().t_points();
        for (ti, &t) in t_points.iter().enumerate() {
            for (zi, &z) in z_points.iter().enumerate() {
                let b = oracle::dary_phi_bounds(d, z, t)?;
                let phi = table.phi(zi, ti);
                let breach = (b.lower - phi).max(phi - b.upper).max(0.0);
                worst = worst.max(breach);
                pass &= breach <= 1e-4;
            }
        }
    }
    Ok((
        pass,
        format!("worst bound breach {worst:.2e} over d in 2..=10"),
    ))
}

fn criterion_10(p: &Params, seed: u64) -> Result<(bool, String)> {
    let grid = Grid::new(p.grid_m_z, p.grid_t_step, 1.0)?;
    let mut pass = true;
    let mut worst = 0.0f64;
    for r in 3..=10 {
        let star = solve_r_regular(r, grid)?;
        let dary = solve_dary_fixed_point(r - 1, grid)?;
        let eps = oracle::epsilon_d(r - 1);
        for ti in 0..=grid.n_steps() {
            for zi in 0..grid.m_z() {
                let phi_star = star.phi(zi, ti);
                let phi_d = dary.phi(zi, ti);
                let breach = ((1.0 - eps) * phi_d - phi_star)
                    .max(phi_star - phi_d)
                    .max(0.0);
                worst = worst.max(breach);
                pass &= breach <= 1e-4;
            }
        }
    }
    let s = experiments::rtree_density(
        p.regular_n,
        10,
        p.regular_reps,
        p.grid_m_z,
        p.grid_t_step,
        seed,
    )?;
    let tol = (3.0 * s.estimate.std_error).max(p.regular_tol);
    let err = (s.estimate.mean - s.phi_star).abs();
    pass &= err <= tol;
    Ok((
        pass,
        format!(
            "worst sandwich breach {worst:.2e}; density {:.4} vs phi*_10(0,1) {:.4} (tol {:.4})",
            s.estimate.mean, s.phi_star, tol
        ),
    ))
}

fn criterion_11(p: &Params, seed: u64) -> Result<(bool, String)> {
    let s = experiments::near_clique_bounds(6, 50, p.ring_reps, seed)?;
    let slack = 3.0 * s.estimate.std_error;
    let pass = s.estimate.mean >= s.lower - slack && s.estimate.mean <= s.upper + slack;
    Ok((
        pass,
        format!(
            "density {:.4} in [{:.4} - 3SE, {:.4} + 3SE], SE {:.4}",
            s.estimate.mean, s.lower, s.upper, s.estimate.std_error
        ),
    ))
}

fn criterion_13(p: &Params, seed: u64) -> Result<(bool, String)> {
    let times: Vec<f64> = (1..=8).map(|k| 2f64.powi(k)).collect();
    let s = experiments::torus_exponent(512, 1, 1.5, &times, p.torus_reps, seed)?;
    // report-only: no gate on the fitted exponent
    Ok((
        true,
        format!(
            "fitted slope {:.3} vs heuristic {:.3} (no gate)",
            s.fitted_slope, s.heuristic_slope
        ),
    ))
}

fn run_gated(
    id: usize,
    name: &'static str,
    p: &Params,
    seed: u64,
    f: impl FnOnce(&Params, u64) -> Result<(bool, String)>,
) -> CriterionResult {
    let start = Instant::now();
    let (pass, detail, violation) = match f(p, seed) {
        Ok((pass, detail)) => (pass, detail, false),
        Err(e) => {
            let msg = format!("{e:#}");
            let violation = msg.contains("invariant violation");
            (false, msg, violation)
        }
    };
    CriterionResult {
        id,
        name,
        gated: id != 13,
        pass,
        detail,
        elapsed_ms: start.elapsed().as_millis(),
        invariant_violation: violation,
    }
}

/// Run the full ordered suite. `budget` caps wall time: criteria that would
/// start after it is spent are marked as skipped failures.
pub fn run_suite(suite: Suite, seed: u64, budget: Option<Duration>) -> Vec<CriterionResult> {
    let p = Params::new(suite);
    let start = Instant::now();
    let mut results: Vec<CriterionResult> = Vec::new();
    type Body = fn(&Params, u64) -> Result<(bool, String)>;
    let bodies: [(usize, &'static str, Body); 12] = [
        (1, CRITERIA[0].1, criterion_1),
        (2, CRITERIA[1].1, criterion_2),
        (3, CRITERIA[2].1, criterion_3),
        (4, CRITERIA[3].1, criterion_4),
        (5, CRITERIA[4].1, criterion_5),
        (6, CRITERIA[5].1, criterion_6),
        (7, CRITERIA[6].1, criterion_7),
        (8, CRITERIA[7].1, criterion_8),
        (9, CRITERIA[8].1, criterion_9),
        (10, CRITERIA[9].1, criterion_10),
        (11, CRITERIA[10].1, criterion_11),
        (13, CRITERIA[12].1, criterion_13),
    ];
    for (id, name, body) in bodies {
        if budget.is_some_and(|b| start.elapsed() > b) {
            results.push(CriterionResult {
                id,
                name,
                gated: id != 13,
                pass: false,
                detail: "skipped: time budget exhausted".to_string(),
                elapsed_ms: 0,
                invariant_violation: false,
            });
            continue;
        }
        results.push(run_gated(id, name, &p, seed, body));
    }
    // criterion 12 aggregates the invariant checks embedded in 1-11:
    // every replicate of every experiment ran through run verification
    let violations = results.iter().filter(|r| r.invariant_violation).count();
    let skipped = results.iter().any(|r| r.detail.starts_with("skipped"));
    results.insert(
        11,
        CriterionResult {
            id: 12,
            name: CRITERIA[11].1,
            gated: true,
            pass: violations == 0 && !skipped,
            detail: format!(
                "{violations} invariant violations across all replicates of criteria 1-11"
            ),
            elapsed_ms: 0,
            invariant_violation: violations > 0,
        },
    );
    results
}

pub fn all_passed(results: &[CriterionResult]) -> bool {
    results.iter().all(|r| r.pass || !r.gated)
}
