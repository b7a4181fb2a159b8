//! Registered experiments. Each one is a pure measurement: model + seed in,
//! typed summary out. The `validate` module applies pass/fail gates on top,
//! and `cmd_simulate` serializes the summaries to JSON/CSV.
//!
//! Reproducibility: replicate `rep` of experiment `name` under master seed
//! `s` always draws from stream `(label_seed(s, name), rep)`, so results are
//! independent of thread count and stable across runs.

use std::collections::BTreeMap;

use anyhow::{bail, Result};
use rayon::prelude::*;
use serde::Serialize;

use gambler_core::engine::{self, ClockKind, MoneyState};
use gambler_core::models::{self, GwOffspring, MeetingModel};
use gambler_core::oracle;
use gambler_core::rng::{label_seed, stream};
use gambler_core::stats::{self, EstimateCI, Histogram};

pub const REGISTERED: &[&str] = &[
    "kingman",
    "winner-uniformity",
    "pair-moment",
    "construction-equivalence",
    "er-density",
    "rtree-density",
    "near-clique-bounds",
    "pgw-geometric",
    "torus-exponent",
    "exchangeability",
];

#[derive(Debug, Serialize)]
pub struct KingmanSummary {
    pub n: usize,
    pub estimate: EstimateCI,
    pub exact: f64,
    pub z: f64,
}

pub fn kingman(n: usize, replicates: usize, seed: u64) -> Result<KingmanSummary> {
    let model = models::complete_graph(n, 1.0)?;
    let estimate = stats::estimate_fixation_time(&model, replicates, label_seed(seed, "kingman"))?;
    let exact = oracle::kingman_expected_fixation(n)?;
    let z = estimate.z_score(exact);
    Ok(KingmanSummary {
        n,
        estimate,
        exact,
        z,
    })
}

#[derive(Debug, Serialize)]
pub struct WinnerSummary {
    pub n: usize,
    pub counts: Vec<u64>,
    pub chi_square: f64,
    pub p_value: f64,
    pub weighted_freq0: f64,
    pub weighted_se0: f64,
    pub weighted_exact0: f64,
}

/// Winner law on the complete graph (uniform 1/n) and on a single weighted
/// edge with standardized weights (3,1) (winner 0 probability 3/4).
pub fn winner_uniformity(
    n: usize,
    replicates: usize,
    weighted_replicates: usize,
    seed: u64,
) -> Result<WinnerSummary> {
    let seed = label_seed(seed, "winner-uniformity");
    let model = models::complete_graph(n, 1.0)?;
    let init = MoneyState::simple(n);
    let hist = stats::winner_distribution(&model, &init, replicates, seed)?;
    let expected: BTreeMap<u64, f64> = (0..n as u64).map(|i| (i, 1.0 / n as f64)).collect();
    let (chi_square, p_value) = stats::chi_square_uniform(&hist, &expected)?;
    let counts = (0..n as u64).map(|i| hist.count(i)).collect();

    let pair = models::from_edge_list(2, &[(0, 1)])?;
    let weighted = MoneyState::from_weights(vec![3, 1])?;
    let whist = stats::winner_distribution(&pair, &weighted, weighted_replicates, seed ^ 1)?;
    let weighted_freq0 = whist.frequency(0);
    let weighted_se0 =
        (weighted_freq0 * (1.0 - weighted_freq0) / weighted_replicates as f64).sqrt();

    Ok(WinnerSummary {
        n,
        counts,
        chi_square,
        p_value,
        weighted_freq0,
        weighted_se0,
        weighted_exact0: 0.75,
    })
}

#[derive(Debug, Serialize)]
pub struct PairMomentRow {
    pub t: f64,
    pub estimate: EstimateCI,
    pub exact: f64,
    pub z: f64,
}

#[derive(Debug, Serialize)]
pub struct PairMomentSummary {
    pub n: usize,
    pub rows: Vec<PairMomentRow>,
    pub second_moment: PairMomentRow,
}

/// E[X_1 X_2](t) against e^{-t} and E[X_1(X_1-1)](1) against its closed
/// form, on the complete graph.
pub fn pair_moment(
    n: usize,
    times: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<PairMomentSummary> {
    let seed = label_seed(seed, "pair-moment");
    let model = models::complete_graph(n, 1.0)?;
    let curve = stats::pair_moment_curve(&model, 0, 1, times, replicates, seed)?;
    let rows = times
        .iter()
        .zip(curve)
        .map(|(&t, estimate)| {
            let exact = oracle::pair_moment_exact(1.0, t);
            let z = estimate.z_score(exact);
            PairMomentRow {
                t,
                estimate,
                exact,
                z,
            }
        })
        .collect();

    let init = MoneyState::simple(n);
    let samples = stats::replicate_map(
        &model,
        &init,
        ClockKind::Exponential,
        replicates,
        seed ^ 1,
        |_, r, init| {
            let x = engine::fortunes_at(r, init, 1.0)[0] as f64;
            x * (x - 1.0)
        },
    )?;
    let estimate = EstimateCI::from_samples(&samples);
    let exact = oracle::second_factorial_moment(&model, 0, 1.0);
    let z = estimate.z_score(exact);
    let second_moment = PairMomentRow {
        t: 1.0,
        estimate,
        exact,
        z,
    };

    Ok(PairMomentSummary {
        n,
        rows,
        second_moment,
    })
}

#[derive(Debug, Serialize)]
pub struct EquivalenceSummary {
    pub replicates: usize,
    pub cells: usize,
    pub p_direct_augmented: f64,
    pub p_direct_token: f64,
    pub p_augmented_token: f64,
}

/// Joint law of (fortune multiset at t, final winner) on the complete
/// n=4 graph, coupled on common schedules across the three constructions.
pub fn construction_equivalence(
    replicates: usize,
    t: f64,
    seed: u64,
) -> Result<EquivalenceSummary> {
    type Key = (Vec<u64>, usize);
    let seed = label_seed(seed, "construction-equivalence");
    let model = models::complete_graph(4, 1.0)?;
    let init = MoneyState::simple(4);
    let triples: Vec<(Key, Key, Key)> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| -> gambler_core::Result<(Key, Key, Key)> {
            let mut rng = stream(seed, rep);
            let schedule = engine::sample_schedule(&model, ClockKind::Exponential, &mut rng)?;
            let direct = engine::run_direct(&schedule, &init, &mut rng)?;
            let order = engine::size_biased_order(&init, &mut rng)?;
            let augmented = engine::run_augmented(&schedule, &init, &order)?;
            let (token, _) = engine::run_token(&schedule, 4, &mut rng)?;
            for r in [&direct, &augmented, &token] {
                engine::verify_run(&model, &init, r)?;
            }
            let key = |r: &engine::RunResult| {
                let mut multiset = engine::fortunes_at(r, &init, t);
                multiset.sort_unstable();
                (multiset, r.solvent[0])
            };
            Ok((key(&direct), key(&augmented), key(&token)))
        })
        .collect::<gambler_core::Result<_>>()?;

    let mut direct = BTreeMap::new();
    let mut augmented = BTreeMap::new();
    let mut token = BTreeMap::new();
    for (d, a, t) in triples {
        *direct.entry(d).or_insert(0u64) += 1;
        *augmented.entry(a).or_insert(0u64) += 1;
        *token.entry(t).or_insert(0u64) += 1;
    }
    let cells = {
        let mut keys: Vec<&Key> = direct
            .keys()
            .chain(augmented.keys())
            .chain(token.keys())
            .collect();
        keys.sort();
        keys.dedup();
        keys.len()
    };
    let (_, p_direct_augmented) = stats::chi_square_homogeneity(&direct, &augmented)?;
    let (_, p_direct_token) = stats::chi_square_homogeneity(&direct, &token)?;
    let (_, p_augmented_token) = stats::chi_square_homogeneity(&augmented, &token)?;
    Ok(EquivalenceSummary {
        replicates,
        cells,
        p_direct_augmented,
        p_direct_token,
        p_augmented_token,
    })
}

#[derive(Debug, Serialize)]
pub struct ExchangeabilitySummary {
    pub replicates: usize,
    pub conditioned: u64,
    pub counts: Vec<u64>,
    pub chi_square: f64,
    pub p_value: f64,
}

/// Token exchangeability on the complete n=4 graph: conditional on the
/// fortune pattern (2,2,0,0) at time t, the token pair held by the
/// lower-indexed solvent agent is uniform over the six 2-subsets of
/// {1,2,3,4}.
pub fn exchangeability(replicates: usize, t: f64, seed: u64) -> Result<ExchangeabilitySummary> {
    let seed = label_seed(seed, "exchangeability");
    let model = models::complete_graph(4, 1.0)?;
    let init = MoneyState::simple(4);
    let subsets: Vec<Option<(u32, u32)>> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| -> gambler_core::Result<Option<(u32, u32)>> {
            let mut rng = stream(seed, rep);
            let schedule = engine::sample_schedule(&model, ClockKind::Exponential, &mut rng)?;
            let deal = engine::deal_tokens(4, &mut rng);
            let (result, _) = engine::run_token_from(&schedule, &deal)?;
            engine::verify_run(&model, &init, &result)?;
            let mut fortunes = engine::fortunes_at(&result, &init, t);
            let holder = fortunes.iter().position(|&x| x == 2);
            fortunes.sort_unstable();
            if fortunes != [0, 0, 2, 2] {
                return Ok(None);
            }
            let sets = engine::token_state_at(&deal, &result, t);
            sets.check_partition()?;
            let pair = &sets.sets()[holder.unwrap()];
            Ok(Some((pair[0], pair[1])))
        })
        .collect::<gambler_core::Result<_>>()?;

    // index the six 2-subsets of {1,2,3,4} in lexicographic order
    let index: BTreeMap<(u32, u32), u64> = [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]
        .into_iter()
        .zip(0u64..)
        .collect();
    let mut hist = Histogram::default();
    for pair in subsets.into_iter().flatten() {
        hist.add(index[&pair]);
    }
    let expected: BTreeMap<u64, f64> = (0..6).map(|i| (i, 1.0 / 6.0)).collect();
    let (chi_square, p_value) = stats::chi_square_uniform(&hist, &expected)?;
    Ok(ExchangeabilitySummary {
        replicates,
        conditioned: hist.total(),
        counts: (0..6).map(|i| hist.count(i)).collect(),
        chi_square,
        p_value,
    })
}

#[derive(Debug, Serialize)]
pub struct DensitySummary {
    pub n: usize,
    pub c: f64,
    pub estimate: EstimateCI,
    pub limit: f64,
}

/// Final solvent density on G(n, c/n), fresh graph per replicate.
pub fn er_density(n: usize, c: f64, replicates: usize, seed: u64) -> Result<DensitySummary> {
    let seed = label_seed(seed, "er-density");
    let samples: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| -> gambler_core::Result<f64> {
            let mut rng = stream(seed, rep);
            let model = models::erdos_renyi(n, c, &mut rng)?;
            run_to_density(&model, &mut rng)
        })
        .collect::<gambler_core::Result<_>>()?;
    Ok(DensitySummary {
        n,
        c,
        estimate: EstimateCI::from_samples(&samples),
        limit: oracle::er_limit_density(c),
    })
}

fn run_to_density(
    model: &MeetingModel,
    rng: &mut gambler_core::rng::Rng,
) -> gambler_core::Result<f64> {
    let init = MoneyState::simple(model.n());
    let schedule = engine::sample_schedule(model, ClockKind::Exponential, rng)?;
    let result = engine::run_direct(&schedule, &init, rng)?;
    engine::verify_run(model, &init, &result)?;
    Ok(result.solvent.len() as f64 / model.n() as f64)
}

#[derive(Debug, Serialize)]
pub struct RegularDensitySummary {
    pub n: usize,
    pub r: usize,
    pub estimate: EstimateCI,
    pub phi_star: f64,
}

/// Final solvent density on a random r-regular graph, fresh graph per
/// replicate, against the r-regular tree fixed point phi*_r(0,1).
pub fn rtree_density(
    n: usize,
    r: usize,
    replicates: usize,
    m_z: usize,
    t_step: f64,
    seed: u64,
) -> Result<RegularDensitySummary> {
    use gambler_core::solver::{solve_r_regular, solvent_probability, Grid};
    let seed = label_seed(seed, "rtree-density");
    let samples: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| -> gambler_core::Result<f64> {
            let mut rng = stream(seed, rep);
            let model = models::random_regular_graph(n, r, &mut rng)?;
            run_to_density(&model, &mut rng)
        })
        .collect::<gambler_core::Result<_>>()?;
    let table = solve_r_regular(r, Grid::new(m_z, t_step, 1.0)?)?;
    let (phi_star, on_grid) = solvent_probability(&table, 1.0);
    debug_assert!(on_grid);
    Ok(RegularDensitySummary {
        n,
        r,
        estimate: EstimateCI::from_samples(&samples),
        phi_star,
    })
}

#[derive(Debug, Serialize)]
pub struct NearCliqueSummary {
    pub r: usize,
    pub k: usize,
    pub estimate: EstimateCI,
    pub lower: f64,
    pub upper: f64,
}

/// Final density on the ring of k near-cliques K_r minus an edge, against
/// the 1/(r+1) and (1/r)(1 + 2 kappa_r/(r-1)) bounds.
pub fn near_clique_bounds(
    r: usize,
    k: usize,
    replicates: usize,
    seed: u64,
) -> Result<NearCliqueSummary> {
    let model = models::ring_of_near_cliques(r, k)?;
    let estimate =
        stats::estimate_density(&model, replicates, label_seed(seed, "near-clique-bounds"))?;
    let (lower, upper) = oracle::near_clique_density_bounds(r)?;
    Ok(NearCliqueSummary {
        r,
        k,
        estimate,
        lower,
        upper,
    })
}

#[derive(Debug, Serialize)]
pub struct PgwSummary {
    pub c: f64,
    pub depth: usize,
    pub replicates: usize,
    pub solvent_freq: f64,
    pub solvent_se: f64,
    pub solvent_limit: f64,
    pub tv_distance: f64,
    pub conditional_counts: Vec<u64>,
}

/// Root fortune at uniform-clock time 1 on a Poisson(c) Galton-Watson tree
/// truncated at `depth`: P(X > 0) against 2/(2+c) and the conditional law
/// against Geometric(2/(2+c)) in total variation on {1..10}.
pub fn pgw_geometric(c: f64, depth: usize, replicates: usize, seed: u64) -> Result<PgwSummary> {
    let seed = label_seed(seed, "pgw-geometric");
    let offspring = GwOffspring::poisson(c)?;
    let fortunes: Vec<u64> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| -> gambler_core::Result<u64> {
            let mut rng = stream(seed, rep);
            let model = models::galton_watson_tree(&offspring, depth, &mut rng)?;
            let init = MoneyState::simple(model.n());
            let schedule = engine::sample_schedule(&model, ClockKind::UniformTimeChange, &mut rng)?;
            let result = engine::run_direct(&schedule, &init, &mut rng)?;
            engine::verify_run(&model, &init, &result)?;
            Ok(result.final_state.fortunes()[0])
        })
        .collect::<gambler_core::Result<_>>()?;

    let positive = fortunes.iter().filter(|&&x| x > 0).count();
    let solvent_freq = positive as f64 / replicates as f64;
    let solvent_se = (solvent_freq * (1.0 - solvent_freq) / replicates as f64).sqrt();
    let mut hist = Histogram::default();
    for x in fortunes {
        if x > 0 {
            hist.add(x);
        }
    }
    let mut tv = 0.0;
    for k in 1..=10usize {
        let emp = hist.count(k as u64) as f64 / hist.total() as f64;
        tv += 0.5 * (emp - oracle::pgw_conditional_pmf(c, 1.0, k)?).abs();
    }
    Ok(PgwSummary {
        c,
        depth,
        replicates,
        solvent_freq,
        solvent_se,
        solvent_limit: oracle::pgw_solvent_prob(c, 1.0)?,
        tv_distance: tv,
        conditional_counts: (1..=10).map(|k| hist.count(k)).collect(),
    })
}

#[derive(Debug, Serialize)]
pub struct TorusRow {
    pub t: f64,
    pub estimate: EstimateCI,
}

#[derive(Debug, Serialize)]
pub struct TorusSummary {
    pub m: usize,
    pub dim: usize,
    pub alpha: f64,
    pub rows: Vec<TorusRow>,
    pub fitted_slope: f64,
    pub heuristic_slope: f64,
}

/// Exploratory: density decay rho(t) on the power-law torus; reports the
/// fitted log-log slope next to the heuristic -dim/alpha, with no gate.
pub fn torus_exponent(
    m: usize,
    dim: usize,
    alpha: f64,
    times: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<TorusSummary> {
    let model = models::torus_power_law(m, dim, alpha)?;
    let (curve, fitted_slope) = stats::density_decay_curve(
        &model,
        times,
        replicates,
        label_seed(seed, "torus-exponent"),
    )?;
    let rows = times
        .iter()
        .zip(curve)
        .map(|(&t, estimate)| TorusRow { t, estimate })
        .collect();
    Ok(TorusSummary {
        m,
        dim,
        alpha,
        rows,
        fitted_slope,
        heuristic_slope: -(dim as f64) / alpha,
    })
}

pub fn require_registered(name: &str) -> Result<()> {
    if !REGISTERED.contains(&name) {
        bail!(
            "unknown experiment `{name}`; registered: {}",
            REGISTERED.join(", ")
        );
    }
    Ok(())
}
