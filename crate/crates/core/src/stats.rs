//! Replicate orchestration and estimators.
//!
//! Replicates run in a rayon pool, one RNG stream per replicate derived from
//! (seed, replicate index); results are collected in replicate order before
//! reduction, so means and standard errors never depend on thread count.
//! Every replicate passes through [`engine::verify_run`]; any hard-invariant
//! violation aborts the whole estimate.

use std::collections::BTreeMap;

use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::engine::{self, ClockKind, MoneyState, RunResult};
use crate::error::Error;
use crate::models::{AgentId, MeetingModel};
use crate::rng;
use crate::Result;

pub const P_VALUE_FLOOR: f64 = 1e-12;

/// Sample mean with its standard error over replicates.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EstimateCI {
    pub mean: f64,
    pub std_error: f64,
    pub n_replicates: usize,
}

impl EstimateCI {
    pub fn from_samples(samples: &[f64]) -> EstimateCI {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std_error = if n >= 2 {
            let var =
                samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        EstimateCI {
            mean,
            std_error,
            n_replicates: n,
        }
    }

    /// |mean - reference| / SE, infinite when the SE is zero and the means
    /// differ.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = (self.mean - reference).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }
}

/// Integer-valued empirical distribution.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct Histogram {
    bins: BTreeMap<u64, u64>,
    total: u64,
}

impl Histogram {
    pub fn add(&mut self, value: u64) {
        *self.bins.entry(value).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn merge(&mut self, other: &Histogram) {
        for (&v, &c) in &other.bins {
            *self.bins.entry(v).or_insert(0) += c;
        }
        self.total += other.total;
    }

    pub fn bins(&self) -> &BTreeMap<u64, u64> {
        &self.bins
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, value: u64) -> u64 {
        self.bins.get(&value).copied().unwrap_or(0)
    }

    pub fn frequency(&self, value: u64) -> f64 {
        self.count(value) as f64 / self.total as f64
    }
}

/// Run `replicates` independent simulations of the CG process on `model`
/// from `init`, mapping each verified run through `f`. Stream `rep` of
/// `seed` drives both the schedule and the game draws of replicate `rep`.
pub fn replicate_map<T, F>(
    model: &MeetingModel,
    init: &MoneyState,
    clock: ClockKind,
    replicates: usize,
    seed: u64,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, &RunResult, &MoneyState) -> T + Sync,
{
    if replicates == 0 {
        return Err(Error::invalid("need at least one replicate"));
    }
    (0..replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng::stream(seed, rep);
            let schedule = engine::sample_schedule(model, clock, &mut rng)?;
            let result = engine::run_direct(&schedule, init, &mut rng)?;
            engine::verify_run(model, init, &result)?;
            Ok(f(rep, &result, init))
        })
        .collect()
}

/// Mean and SE of the final solvent density |T|/n under the simple CG.
pub fn estimate_density(model: &MeetingModel, replicates: usize, seed: u64) -> Result<EstimateCI> {
    if replicates < 2 {
        return Err(Error::invalid("estimate_density requires >= 2 replicates"));
    }
    let init = MoneyState::simple(model.n());
    let n = model.n() as f64;
    let samples = replicate_map(
        model,
        &init,
        ClockKind::Exponential,
        replicates,
        seed,
        |_, r, _| r.solvent.len() as f64 / n,
    )?;
    Ok(EstimateCI::from_samples(&samples))
}

/// Mean and SE of the absorption time.
pub fn estimate_fixation_time(
    model: &MeetingModel,
    replicates: usize,
    seed: u64,
) -> Result<EstimateCI> {
    if replicates < 2 {
        return Err(Error::invalid(
            "estimate_fixation_time requires >= 2 replicates",
        ));
    }
    let init = MoneyState::simple(model.n());
    let samples = replicate_map(
        model,
        &init,
        ClockKind::Exponential,
        replicates,
        seed,
        |_, r, _| r.absorption_time,
    )?;
    Ok(EstimateCI::from_samples(&samples))
}

/// Empirical distribution of the unique final solvent agent. Errors if any
/// run ends with more than one solvent agent (the model must have all pair
/// rates positive for a single winner to exist).
pub fn winner_distribution(
    model: &MeetingModel,
    init: &MoneyState,
    replicates: usize,
    seed: u64,
) -> Result<Histogram> {
    let winners = replicate_map(
        model,
        init,
        ClockKind::Exponential,
        replicates,
        seed,
        |_, r, _| {
            if r.solvent.len() == 1 {
                Some(r.solvent[0])
            } else {
                None
            }
        },
    )?;
    let mut hist = Histogram::default();
    for w in winners {
        match w {
            Some(agent) => hist.add(agent as u64),
            None => {
                return Err(Error::violation(
                    "run ended with multiple solvent agents; no unique winner",
                ))
            }
        }
    }
    Ok(hist)
}

/// Empirical E[X_i(t) X_j(t)] at each requested time, simple CG.
pub fn pair_moment_curve(
    model: &MeetingModel,
    i: AgentId,
    j: AgentId,
    times: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<Vec<EstimateCI>> {
    let init = MoneyState::simple(model.n());
    let per_rep = replicate_map(
        model,
        &init,
        ClockKind::Exponential,
        replicates,
        seed,
        |_, r, init| {
            times
                .iter()
                .map(|&t| engine::pair_product_at(r, init, i, j, t) as f64)
                .collect::<Vec<f64>>()
        },
    )?;
    Ok((0..times.len())
        .map(|k| {
            let samples: Vec<f64> = per_rep.iter().map(|row| row[k]).collect();
            EstimateCI::from_samples(&samples)
        })
        .collect())
}

/// Histogram of the root agent's fortune at time t, conditioned on being
/// positive (zero outcomes are dropped before normalizing).
pub fn conditional_fortune_hist(
    model: &MeetingModel,
    clock: ClockKind,
    t: f64,
    replicates: usize,
    seed: u64,
) -> Result<Histogram> {
    let init = MoneyState::simple(model.n());
    let fortunes = replicate_map(model, &init, clock, replicates, seed, |_, r, init| {
        engine::fortunes_at(r, init, t)[0]
    })?;
    let mut hist = Histogram::default();
    for x in fortunes {
        if x > 0 {
            hist.add(x);
        }
    }
    Ok(hist)
}

/// Mean solvent density at each time, plus the least-squares slope of
/// log density against log time. The fit window drops times where the mean
/// density exceeds 0.9 or fewer than 10 solvent agents remain on average.
pub fn density_decay_curve(
    model: &MeetingModel,
    times: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<(Vec<EstimateCI>, f64)> {
    if times.iter().any(|&t| !(t > 0.0)) || times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("times must be positive and increasing"));
    }
    let init = MoneyState::simple(model.n());
    let n = model.n() as f64;
    let per_rep = replicate_map(
        model,
        &init,
        ClockKind::Exponential,
        replicates,
        seed,
        |_, r, init| {
            times
                .iter()
                .map(|&t| {
                    engine::fortunes_at(r, init, t)
                        .iter()
                        .filter(|&&x| x > 0)
                        .count() as f64
                        / n
                })
                .collect::<Vec<f64>>()
        },
    )?;
    let curve: Vec<EstimateCI> = (0..times.len())
        .map(|k| {
            let samples: Vec<f64> = per_rep.iter().map(|row| row[k]).collect();
            EstimateCI::from_samples(&samples)
        })
        .collect();
    let window: Vec<(f64, f64)> = times
        .iter()
        .zip(&curve)
        .filter(|(_, ci)| ci.mean <= 0.9 && ci.mean * n >= 10.0 && ci.mean > 0.0)
        .map(|(&t, ci)| (t.ln(), ci.mean.ln()))
        .collect();
    Ok((curve, least_squares_slope(&window)))
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

fn chi_square_p_value(stat: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(dof as f64).expect("positive dof");
    (1.0 - dist.cdf(stat)).max(P_VALUE_FLOOR)
}

/// Pearson goodness-of-fit of a histogram against an expected pmf given on
/// its full support. dof = support size - 1.
pub fn chi_square_uniform(hist: &Histogram, expected: &BTreeMap<u64, f64>) -> Result<(f64, f64)> {
    if hist.total() == 0 {
        return Err(Error::invalid("empty histogram"));
    }
    for value in hist.bins().keys() {
        if expected.get(value).copied().unwrap_or(0.0) <= 0.0 {
            return Err(Error::invalid(format!(
                "expected pmf not positive on observed value {value}"
            )));
        }
    }
    let total = hist.total() as f64;
    let mut stat = 0.0;
    for (&value, &p) in expected {
        let e = total * p;
        let o = hist.count(value) as f64;
        stat += (o - e) * (o - e) / e;
    }
    Ok((stat, chi_square_p_value(stat, expected.len() - 1)))
}

/// Two-sample chi-square homogeneity test over the union of supports.
/// dof = cells - 1.
pub fn chi_square_homogeneity<K: Ord + Clone>(
    a: &BTreeMap<K, u64>,
    b: &BTreeMap<K, u64>,
) -> Result<(f64, f64)> {
    let na: u64 = a.values().sum();
    let nb: u64 = b.values().sum();
    if na == 0 || nb == 0 {
        return Err(Error::invalid("empty sample in homogeneity test"));
    }
    let mut keys: Vec<K> = a.keys().chain(b.keys()).cloned().collect();
    keys.sort();
    keys.dedup();
    let (na, nb) = (na as f64, nb as f64);
    let mut stat = 0.0;
    for key in &keys {
        let oa = a.get(key).copied().unwrap_or(0) as f64;
        let ob = b.get(key).copied().unwrap_or(0) as f64;
        let pooled = (oa + ob) / (na + nb);
        let (ea, eb) = (na * pooled, nb * pooled);
        stat += (oa - ea) * (oa - ea) / ea + (ob - eb) * (ob - eb) / eb;
    }
    Ok((stat, chi_square_p_value(stat, keys.len() - 1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{complete_graph, erdos_renyi, from_edge_list, MeetingModel};
    use crate::oracle;

    #[test]
    fn estimate_basics() {
        let lonely = complete_graph(1, 1.0).unwrap();
        let ci = estimate_density(&lonely, 10, 1).unwrap();
        assert_eq!((ci.mean, ci.std_error), (1.0, 0.0));

        // complete graph: exactly one winner, density 1/n with zero variance
        let k5 = complete_graph(5, 1.0).unwrap();
        let ci = estimate_density(&k5, 50, 2).unwrap();
        assert!((ci.mean - 0.2).abs() < 1e-12 && ci.std_error < 1e-12);
    }

    #[test]
    fn fixation_time_kingman_small() {
        // n=2 single edge rate 1: E T = 1
        let edge = from_edge_list(2, &[(0, 1)]).unwrap();
        let ci = estimate_fixation_time(&edge, 4000, 3).unwrap();
        assert!(
            ci.z_score(1.0) < 4.0,
            "mean {} se {}",
            ci.mean,
            ci.std_error
        );
    }

    #[test]
    fn fixation_time_rate_scaling() {
        // scaling all rates by s scales the mean by 1/s
        let slow = from_edge_list(2, &[(0, 1)]).unwrap();
        let fast = MeetingModel::new(2, vec![(0, 1, 4.0)]).unwrap();
        let a = estimate_fixation_time(&slow, 4000, 7).unwrap();
        let b = estimate_fixation_time(&fast, 4000, 7).unwrap();
        let ratio = a.mean / b.mean;
        assert!((ratio - 4.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn winner_distribution_cases() {
        let lonely = complete_graph(1, 1.0).unwrap();
        let h = winner_distribution(&lonely, &MoneyState::simple(1), 20, 5).unwrap();
        assert_eq!(h.frequency(0), 1.0);

        // standardized weights (3,1) on one edge: winner 0 with prob 3/4
        let edge = from_edge_list(2, &[(0, 1)]).unwrap();
        let init = MoneyState::from_weights(vec![3, 1]).unwrap();
        let h = winner_distribution(&edge, &init, 8000, 11).unwrap();
        assert!((h.frequency(0) - 0.75).abs() < 0.02, "{}", h.frequency(0));

        // disconnected model has no unique winner
        let split = from_edge_list(3, &[(0, 1)]).unwrap();
        assert!(winner_distribution(&split, &MoneyState::simple(3), 10, 13).is_err());
    }

    #[test]
    fn pair_moment_matches_oracle() {
        let k10 = complete_graph(10, 1.0).unwrap();
        let curve = pair_moment_curve(&k10, 0, 1, &[0.0, 0.5], 8000, 17).unwrap();
        assert_eq!(curve[0].mean, 1.0); // t = 0 exactly
        let exact = oracle::pair_moment_exact(1.0, 0.5);
        assert!(curve[1].z_score(exact) < 4.0, "mean {}", curve[1].mean);
    }

    #[test]
    fn pair_moment_vanishes_late() {
        let k4 = complete_graph(4, 1.0).unwrap();
        let curve = pair_moment_curve(&k4, 0, 1, &[50.0], 500, 19).unwrap();
        assert_eq!(curve[0].mean, 0.0);
    }

    #[test]
    fn conditional_hist_cases() {
        let k3 = complete_graph(3, 1.0).unwrap();
        let h = conditional_fortune_hist(&k3, ClockKind::Exponential, 0.0, 100, 23).unwrap();
        assert_eq!(h.frequency(1), 1.0); // point mass at 1 at t=0

        let isolated = complete_graph(1, 1.0).unwrap();
        let h = conditional_fortune_hist(&isolated, ClockKind::Exponential, 9.0, 50, 29).unwrap();
        assert_eq!(h.frequency(1), 1.0);
    }

    #[test]
    fn martingale_mean_fortune() {
        // E X_i(t) stays at the initial fortune, each i, sampled t
        let model = from_edge_list(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let init = MoneyState::simple(4);
        let per_rep = replicate_map(
            &model,
            &init,
            ClockKind::Exponential,
            8000,
            31,
            |_, r, init| engine::fortunes_at(r, init, 0.7),
        )
        .unwrap();
        for i in 0..4 {
            let samples: Vec<f64> = per_rep.iter().map(|f| f[i] as f64).collect();
            let ci = EstimateCI::from_samples(&samples);
            assert!(ci.z_score(1.0) < 3.5, "agent {i}: mean {}", ci.mean);
        }
    }

    #[test]
    fn supermartingale_pair_product() {
        let k6 = complete_graph(6, 1.0).unwrap();
        let curve = pair_moment_curve(&k6, 2, 4, &[0.2, 0.6, 1.2, 2.0], 6000, 37).unwrap();
        for w in curve.windows(2) {
            assert!(w[1].mean <= w[0].mean + 3.0 * (w[0].std_error + w[1].std_error));
        }
        // bounded by the initial product
        assert!(curve[0].mean <= 1.0 + 3.0 * curve[0].std_error);
    }

    #[test]
    fn kingman_domination_bounds() {
        let model = complete_graph(12, 0.5).unwrap();
        let delta = 0.5;
        let ci = estimate_fixation_time(&model, 3000, 41).unwrap();
        assert!(ci.mean <= 2.0 / delta + 3.0 * ci.std_error);
        // tail bound at sampled (r, t)
        let init = MoneyState::simple(12);
        for &(r, t) in &[(4usize, 1.0f64), (3, 2.0)] {
            let hits = replicate_map(
                &model,
                &init,
                ClockKind::Exponential,
                3000,
                43,
                |_, res, init| {
                    let solvent = engine::fortunes_at(res, init, t)
                        .iter()
                        .filter(|&&x| x > 0)
                        .count();
                    if solvent > r {
                        1.0
                    } else {
                        0.0
                    }
                },
            )
            .unwrap();
            let ci = EstimateCI::from_samples(&hits);
            let (bound, _) = oracle::kingman_tail_bound(r, delta, t).unwrap();
            assert!(ci.mean <= bound + 3.0 * ci.std_error);
        }
    }

    #[test]
    fn degree_lower_bound_holds() {
        let mut rng = crate::rng::stream(47, 0);
        let model = erdos_renyi(60, 2.0, &mut rng).unwrap();
        let bound = oracle::degree_lower_bound(&model);
        let init = MoneyState::simple(60);
        let sizes = replicate_map(
            &model,
            &init,
            ClockKind::Exponential,
            2000,
            53,
            |_, r, _| r.solvent.len() as f64,
        )
        .unwrap();
        let ci = EstimateCI::from_samples(&sizes);
        assert!(
            ci.mean >= bound - 3.0 * ci.std_error,
            "E|T| {} < bound {bound}",
            ci.mean
        );
    }

    #[test]
    fn estimates_are_seed_deterministic() {
        let k8 = complete_graph(8, 1.0).unwrap();
        let a = estimate_fixation_time(&k8, 200, 59).unwrap();
        let b = estimate_fixation_time(&k8, 200, 59).unwrap();
        assert_eq!(a, b);
        let c = estimate_fixation_time(&k8, 200, 60).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn chi_square_values() {
        // counts (2,0,0,0,0,0) against uniform over 6: statistic 10
        let mut hist = Histogram::default();
        hist.add(0);
        hist.add(0);
        let expected: BTreeMap<u64, f64> = (0..6).map(|k| (k, 1.0 / 6.0)).collect();
        let (stat, p) = chi_square_uniform(&hist, &expected).unwrap();
        assert!((stat - 10.0).abs() < 1e-12);
        assert!(p < 0.1);

        // perfectly matching counts: statistic 0
        let mut hist = Histogram::default();
        for k in 0..6 {
            for _ in 0..10 {
                hist.add(k);
            }
        }
        let (stat, p) = chi_square_uniform(&hist, &expected).unwrap();
        assert_eq!(stat, 0.0);
        assert!((p - 1.0).abs() < 1e-12);

        // large deviation: tiny p, floored at 1e-12
        let mut hist = Histogram::default();
        for _ in 0..1000 {
            hist.add(0);
        }
        let (_, p) = chi_square_uniform(&hist, &expected).unwrap();
        assert!(p <= 1e-3);
        assert!(p >= P_VALUE_FLOOR);

        assert!(chi_square_uniform(&Histogram::default(), &expected).is_err());
        let bad: BTreeMap<u64, f64> = [(5u64, 1.0)].into();
        let mut hist = Histogram::default();
        hist.add(0);
        assert!(chi_square_uniform(&hist, &bad).is_err());
    }

    #[test]
    fn homogeneity_smoke() {
        let a: BTreeMap<u32, u64> = [(0, 50), (1, 50)].into();
        let b: BTreeMap<u32, u64> = [(0, 48), (1, 52)].into();
        let (_, p) = chi_square_homogeneity(&a, &b).unwrap();
        assert!(p > 0.5);
        let c: BTreeMap<u32, u64> = [(0, 90), (1, 10)].into();
        let (_, p) = chi_square_homogeneity(&a, &c).unwrap();
        assert!(p < 1e-6);
    }

    #[test]
    fn slope_fit_sanity() {
        // constant density data: slope 0
        let pts: Vec<(f64, f64)> = (1..10).map(|k| ((k as f64).ln(), 0.5f64.ln())).collect();
        assert_eq!(least_squares_slope(&pts), 0.0);
        let pts: Vec<(f64, f64)> = (1..10)
            .map(|k| {
                let x = k as f64;
                (x.ln(), -0.5 * x.ln())
            })
            .collect();
        assert!((least_squares_slope(&pts) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn density_decay_small_torus() {
        let model = crate::models::torus_power_law(64, 1, 2.0).unwrap();
        let times: Vec<f64> = (0..7).map(|k| 2.0f64.powi(k - 1)).collect();
        let (curve, slope) = density_decay_curve(&model, &times, 300, 61).unwrap();
        assert!(curve[0].mean > 0.5); // little has happened early
        assert!(slope < 0.0, "density must decay, slope {slope}");
    }
}
