//! Closed forms and rigorous bounds, as pure functions. These double as test
//! oracles for the simulator and the recursion solver.

use crate::error::Error;
use crate::models::{AgentId, MeetingModel};
use crate::Result;

/// Expected fixation time of the unit-rate complete-graph process:
/// 2(1 - 1/n).
pub fn kingman_expected_fixation(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    Ok(2.0 * (1.0 - 1.0 / n as f64))
}

/// E[X_i(t) X_j(t)] = exp(-rate * t) for a simple CG pair.
pub fn pair_moment_exact(rate: f64, t: f64) -> f64 {
    (-rate * t).exp()
}

/// E[X_i(t)(X_i(t)-1)] = sum over j != i of (1 - exp(-rate_ij * t)).
pub fn second_factorial_moment(model: &MeetingModel, i: AgentId, t: f64) -> f64 {
    model
        .edges()
        .iter()
        .filter(|&&(a, b, _)| a == i || b == i)
        .map(|&(_, _, rate)| 1.0 - (-rate * t).exp())
        .sum()
}

/// E (sum_i f_i X_i(t))^2 for the simple CG.
pub fn weighted_sum_second_moment(model: &MeetingModel, f: &[f64], t: f64) -> f64 {
    let n = model.n();
    assert_eq!(f.len(), n);
    // rate lookup: absent pairs have rate 0
    let mut rates = std::collections::HashMap::new();
    for &(i, j, r) in model.edges() {
        rates.insert((i, j), r);
    }
    let rate_of = |i: usize, j: usize| {
        let key = if i < j { (i, j) } else { (j, i) };
        rates.get(&key).copied().unwrap_or(0.0)
    };
    let mut total = 0.0;
    for i in 0..n {
        let mut defect = 0.0;
        for j in 0..n {
            if j != i {
                defect += 1.0 - (-rate_of(i, j) * t).exp();
            }
        }
        total += f[i] * f[i] * (1.0 + defect);
        for j in 0..n {
            if j != i {
                total += f[i] * f[j] * (-rate_of(i, j) * t).exp();
            }
        }
    }
    total
}

/// P(N(t) > r) <= 2/(r delta t), capped at 1. The raw value is also returned.
pub fn kingman_tail_bound(r: usize, delta: f64, t: f64) -> Result<(f64, f64)> {
    if r < 2 {
        return Err(Error::invalid("tail bound requires r >= 2"));
    }
    if !(delta > 0.0) || !(t > 0.0) {
        return Err(Error::invalid("tail bound requires delta > 0 and t > 0"));
    }
    let raw = 2.0 / (r as f64 * delta * t);
    Ok((raw.min(1.0), raw))
}

/// Two upper bounds on E T: the Kingman comparison 2/delta (only when every
/// pair has a positive rate, with delta the minimum over all pairs) and the
/// generic (n-1)/delta with delta the minimum over positive rates.
pub fn mean_fixation_bounds(model: &MeetingModel) -> (Option<f64>, f64) {
    let delta = model.min_positive_rate().unwrap_or(0.0);
    let kingman = if model.all_pairs_positive() && delta > 0.0 {
        Some(2.0 / delta)
    } else {
        None
    };
    let tree = if delta > 0.0 {
        (model.n() as f64 - 1.0) / delta
    } else {
        0.0
    };
    (kingman, tree)
}

/// E |solvent set| >= sum_i 1/(1 + degree_i).
pub fn degree_lower_bound(model: &MeetingModel) -> f64 {
    model
        .degrees()
        .iter()
        .map(|&d| 1.0 / (1.0 + d as f64))
        .sum()
}

/// The product prod_{i=0}^{m-3} C(m-i-1,2) / (C(m-i,2) - 1); empty product 1
/// at m = 2. Factors use exact integer binomials.
pub fn sigma_m(m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::invalid("sigma_m requires m >= 2"));
    }
    let choose2 = |k: u64| k * (k - 1) / 2;
    let mut product = 1.0;
    for i in 0..m.saturating_sub(2) {
        let top = choose2((m - i - 1) as u64);
        let bottom = choose2((m - i) as u64) - 1;
        product *= top as f64 / bottom as f64;
    }
    Ok(product)
}

/// kappa_r = sum_{m=2}^{r} sigma_m.
pub fn kappa_r(r: usize) -> Result<f64> {
    if r < 2 {
        return Err(Error::invalid("kappa_r requires r >= 2"));
    }
    let mut sum = 0.0;
    for m in 2..=r {
        sum += sigma_m(m)?;
    }
    Ok(sum)
}

/// Solvent-density bounds for the ring-of-near-cliques family:
/// lower 1/(r+1), upper (1/r)(1 + 2 kappa_r/(r-1)).
pub fn near_clique_density_bounds(r: usize) -> Result<(f64, f64)> {
    if r < 3 {
        return Err(Error::invalid("near_clique_density_bounds requires r >= 3"));
    }
    let lower = 1.0 / (r as f64 + 1.0);
    let upper = (1.0 / r as f64) * (1.0 + 2.0 * kappa_r(r)? / (r as f64 - 1.0));
    Ok((lower, upper))
}

/// Sandwich bounds on the d-ary tree pgf deficiency phi_d(z,t), with
/// epsilon_d = (2/d) log(1 + d/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DaryBounds {
    pub lower: f64,
    pub upper: f64,
    pub epsilon_d: f64,
}

pub fn epsilon_d(d: usize) -> f64 {
    let d = d as f64;
    (2.0 / d) * (1.0 + d / 2.0).ln()
}

pub fn dary_phi_bounds(d: usize, z: f64, t: f64) -> Result<DaryBounds> {
    if d == 0 {
        return Err(Error::invalid("dary_phi_bounds requires d >= 1"));
    }
    if !(0.0..=1.0).contains(&z) || !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid("dary_phi_bounds requires z, t in [0,1]"));
    }
    let eps = epsilon_d(d);
    let df = d as f64;
    let upper = 2.0 * (1.0 - z) / (2.0 + df * (1.0 - z) * t);
    let lower = 2.0 * (1.0 - z) * (1.0 - eps) / (2.0 * (1.0 - eps) + df * (1.0 - z) * t);
    Ok(DaryBounds {
        lower,
        upper,
        epsilon_d: eps,
    })
}

/// Closed-form pgf deficiency for the Poisson(c) Galton-Watson tree:
/// 2(1-z) / (2 + c(1-z)t).
pub fn pgw_phi(c: f64, z: f64, t: f64) -> Result<f64> {
    if !(c >= 0.0) {
        return Err(Error::invalid("pgw_phi requires c >= 0"));
    }
    if !(0.0..=1.0).contains(&z) || !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid("pgw_phi requires z, t in [0,1]"));
    }
    Ok(2.0 * (1.0 - z) / (2.0 + c * (1.0 - z) * t))
}

/// P(X(t) > 0) = 2/(2 + ct) at the root of the Poisson(c) GW tree.
pub fn pgw_solvent_prob(c: f64, t: f64) -> Result<f64> {
    pgw_phi(c, 0.0, t)
}

/// Conditional root-fortune pmf given positivity: Geometric(2/(2+ct)) on
/// k in {1, 2, ...}.
pub fn pgw_conditional_pmf(c: f64, t: f64, k: usize) -> Result<f64> {
    if k < 1 {
        return Err(Error::invalid("pgw_conditional_pmf requires k >= 1"));
    }
    let p = pgw_solvent_prob(c, t)?;
    Ok(p * (1.0 - p).powi(k as i32 - 1))
}

/// Limit of the mean solvent density on G(n, c/n): 2/(2+c).
pub fn er_limit_density(c: f64) -> f64 {
    2.0 / (2.0 + c)
}

/// Variance bound for the weighted-fortune martingale of a standardized CG:
/// (1/2) nu_star L_f^2 t for a caller-chosen metric.
pub fn mf_variance_bound(nu_star: f64, l_f: f64, t: f64) -> f64 {
    0.5 * nu_star * l_f * l_f * t
}
