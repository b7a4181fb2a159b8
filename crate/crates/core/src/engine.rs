//! Event-driven runs of the compulsive gambler process.
//!
//! Only the first meeting across each positive-rate pair can change anything,
//! so a run consumes a pre-sampled [`FirstMeetingSchedule`] and scans it in
//! time order. The three constructions (direct winner draws, deterministic
//! size-biased order, token deal) all accept the same schedule, which lets
//! equivalence tests couple them on identical meeting times.

use rand::Rng as _;
use rand_distr::{Distribution, Exp};

use crate::error::Error;
use crate::models::{AgentId, MeetingModel};
use crate::rng::Rng;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ClockKind {
    /// Per-pair first meeting ~ Exponential(rate).
    Exponential,
    /// Per-pair first meeting ~ Uniform(0,1); requires all rates equal 1.
    UniformTimeChange,
}

/// Time-sorted first meeting events, one per positive-rate pair.
#[derive(Debug, Clone)]
pub struct FirstMeetingSchedule {
    n: usize,
    events: Vec<(f64, AgentId, AgentId)>,
}

impl FirstMeetingSchedule {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn events(&self) -> &[(f64, AgentId, AgentId)] {
        &self.events
    }

    /// Schedule with the given events dropped (retaining order); used to
    /// check that meetings involving a bankrupt agent are irrelevant.
    pub fn without_events(&self, drop: &[usize]) -> FirstMeetingSchedule {
        let events = self
            .events
            .iter()
            .enumerate()
            .filter(|(k, _)| !drop.contains(k))
            .map(|(_, &e)| e)
            .collect();
        FirstMeetingSchedule { n: self.n, events }
    }
}

/// Exact integer fortunes with a conserved total.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoneyState {
    fortunes: Vec<u64>,
    total: u64,
}

impl MoneyState {
    /// Simple CG initial condition: every agent holds one unit.
    pub fn simple(n: usize) -> MoneyState {
        MoneyState {
            fortunes: vec![1; n],
            total: n as u64,
        }
    }

    /// Standardized CG with integer weights (the real configuration is
    /// weight_i / total).
    pub fn from_weights(weights: Vec<u64>) -> Result<MoneyState> {
        let total: u64 = weights.iter().sum();
        if total == 0 {
            return Err(Error::invalid("total weight must be positive"));
        }
        Ok(MoneyState {
            fortunes: weights,
            total,
        })
    }

    pub fn n(&self) -> usize {
        self.fortunes.len()
    }

    pub fn fortunes(&self) -> &[u64] {
        &self.fortunes
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

/// Rank of each agent in the size-biased order; smaller rank wins.
#[derive(Debug, Clone)]
pub struct SizeBiasedOrder {
    rank: Vec<usize>,
}

impl SizeBiasedOrder {
    pub fn rank(&self) -> &[usize] {
        &self.rank
    }
}

/// Per-agent sorted token sets; the non-empty sets partition {1..n}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenState {
    sets: Vec<Vec<u32>>,
}

impl TokenState {
    pub fn sets(&self) -> &[Vec<u32>] {
        &self.sets
    }

    pub fn check_partition(&self) -> Result<()> {
        let n: usize = self.sets.iter().map(Vec::len).sum();
        let mut seen = vec![false; n + 1];
        for set in &self.sets {
            for w in set.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::violation("token set not sorted"));
                }
            }
            for &tok in set {
                if tok == 0 || tok as usize > n || seen[tok as usize] {
                    return Err(Error::violation(format!(
                        "token {tok} repeated or out of range"
                    )));
                }
                seen[tok as usize] = true;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryEvent {
    pub time: f64,
    pub winner: AgentId,
    pub loser: AgentId,
    /// The loser's fortune immediately before the event.
    pub transferred: u64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub final_state: MoneyState,
    pub trajectory: Vec<TrajectoryEvent>,
    pub solvent: Vec<AgentId>,
    pub absorption_time: f64,
}

/// One first-meeting time per positive-rate pair, sorted by time with
/// residual ties broken by pair order.
pub fn sample_schedule(
    model: &MeetingModel,
    clock: ClockKind,
    rng: &mut Rng,
) -> Result<FirstMeetingSchedule> {
    if clock == ClockKind::UniformTimeChange && model.edges().iter().any(|&(_, _, r)| r != 1.0) {
        return Err(Error::invalid(
            "UniformTimeChange clock requires all rates equal to 1",
        ));
    }
    let mut events = Vec::with_capacity(model.edges().len());
    for &(i, j, rate) in model.edges() {
        let time = match clock {
            ClockKind::Exponential => Exp::new(rate)
                .map_err(|e| Error::invalid(format!("exponential rate: {e}")))?
                .sample(rng),
            ClockKind::UniformTimeChange => rng.gen::<f64>(),
        };
        events.push((time, i, j));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    Ok(FirstMeetingSchedule {
        n: model.n(),
        events,
    })
}

fn run_with<W>(schedule: &FirstMeetingSchedule, init: &MoneyState, mut first_wins: W) -> RunResult
where
    W: FnMut(AgentId, AgentId, u64, u64) -> bool,
{
    let mut fortunes = init.fortunes().to_vec();
    let mut trajectory = Vec::new();
    for &(time, i, j) in schedule.events() {
        let (xi, xj) = (fortunes[i], fortunes[j]);
        if xi == 0 || xj == 0 {
            continue;
        }
        let (winner, loser) = if first_wins(i, j, xi, xj) {
            (i, j)
        } else {
            (j, i)
        };
        let transferred = fortunes[loser];
        fortunes[winner] += transferred;
        fortunes[loser] = 0;
        trajectory.push(TrajectoryEvent {
            time,
            winner,
            loser,
            transferred,
        });
    }
    let solvent: Vec<AgentId> = (0..fortunes.len()).filter(|&i| fortunes[i] > 0).collect();
    let absorption_time = trajectory.last().map_or(0.0, |e| e.time);
    RunResult {
        final_state: MoneyState {
            fortunes,
            total: init.total(),
        },
        trajectory,
        solvent,
        absorption_time,
    }
}

/// Direct construction: the winner of each effective meeting is drawn with
/// probability proportional to current fortunes, by one uniform integer draw
/// (exact rational fairness). The rng is consumed only at effective meetings.
pub fn run_direct(
    schedule: &FirstMeetingSchedule,
    init: &MoneyState,
    rng: &mut Rng,
) -> Result<RunResult> {
    if schedule.n() != init.n() {
        return Err(Error::invalid("schedule and initial state disagree on n"));
    }
    Ok(run_with(schedule, init, |_, _, xi, xj| {
        rng.gen_range(0..xi + xj) < xi
    }))
}

/// Size-biased random order of the positive-weight agents: sort independent
/// Exponential(weight) draws. Zero-weight agents rank after all positive
/// ones, in index order.
pub fn size_biased_order(init: &MoneyState, rng: &mut Rng) -> Result<SizeBiasedOrder> {
    let weights = init.fortunes();
    if weights.iter().all(|&w| w == 0) {
        return Err(Error::invalid(
            "size_biased_order requires a positive weight",
        ));
    }
    let mut keyed: Vec<(f64, AgentId)> = Vec::new();
    let mut zeros: Vec<AgentId> = Vec::new();
    let unit = Exp::new(1.0).unwrap();
    for (i, &w) in weights.iter().enumerate() {
        if w > 0 {
            keyed.push((unit.sample(rng) / w as f64, i));
        } else {
            zeros.push(i);
        }
    }
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank = vec![0usize; weights.len()];
    for (pos, &(_, agent)) in keyed.iter().enumerate() {
        rank[agent] = pos;
    }
    for (offset, &agent) in zeros.iter().enumerate() {
        rank[agent] = keyed.len() + offset;
    }
    Ok(SizeBiasedOrder { rank })
}

/// Augmented construction: deterministic given the schedule and the order;
/// the earlier-ranked agent wins every effective meeting.
pub fn run_augmented(
    schedule: &FirstMeetingSchedule,
    init: &MoneyState,
    order: &SizeBiasedOrder,
) -> Result<RunResult> {
    if schedule.n() != init.n() || order.rank.len() != init.n() {
        return Err(Error::invalid("schedule, state and order disagree on n"));
    }
    let rank = order.rank();
    Ok(run_with(schedule, init, |i, j, _, _| rank[i] < rank[j]))
}

/// Uniform deal of tokens 1..n, one per agent.
pub fn deal_tokens(n: usize, rng: &mut Rng) -> TokenState {
    let mut tokens: Vec<u32> = (1..=n as u32).collect();
    // Fisher-Yates
    for i in (1..n).rev() {
        let k = rng.gen_range(0..=i);
        tokens.swap(i, k);
    }
    TokenState {
        sets: tokens.into_iter().map(|t| vec![t]).collect(),
    }
}

/// Token construction for the simple CG: the holder of the smallest token
/// among the two agents wins and takes the union of the token sets.
pub fn run_token_from(
    schedule: &FirstMeetingSchedule,
    deal: &TokenState,
) -> Result<(RunResult, TokenState)> {
    let n = deal.sets.len();
    if schedule.n() != n {
        return Err(Error::invalid("schedule and token deal disagree on n"));
    }
    // A solvent agent's minimum token never changes: it only ever absorbs
    // piles with a larger minimum. So the initial token decides every game.
    let mins: Vec<u32> = deal.sets.iter().map(|s| s[0]).collect();
    let init = MoneyState::simple(n);
    let result = run_with(schedule, &init, |i, j, _, _| mins[i] < mins[j]);
    // Replay transfers on the sets; run_with only tracked sizes.
    let mut sets = deal.sets.clone();
    for e in &result.trajectory {
        let loser_set = std::mem::take(&mut sets[e.loser]);
        let merged = &mut sets[e.winner];
        merged.extend(loser_set);
        merged.sort_unstable();
    }
    debug_assert!(result
        .final_state
        .fortunes()
        .iter()
        .zip(&sets)
        .all(|(&x, s)| x as usize == s.len()));
    Ok((result, TokenState { sets }))
}

/// Token construction with a fresh uniform deal.
pub fn run_token(
    schedule: &FirstMeetingSchedule,
    n: usize,
    rng: &mut Rng,
) -> Result<(RunResult, TokenState)> {
    let deal = deal_tokens(n, rng);
    run_token_from(schedule, &deal)
}

/// Token sets at time t (right-continuous), replayed from the initial deal.
pub fn token_state_at(deal: &TokenState, result: &RunResult, t: f64) -> TokenState {
    let mut sets = deal.sets.clone();
    for e in result.trajectory.iter().take_while(|e| e.time <= t) {
        let loser_set = std::mem::take(&mut sets[e.loser]);
        let merged = &mut sets[e.winner];
        merged.extend(loser_set);
        merged.sort_unstable();
    }
    TokenState { sets }
}

/// Fortune vector at time t (right-continuous), replayed from the trajectory.
pub fn fortunes_at(result: &RunResult, init: &MoneyState, t: f64) -> Vec<u64> {
    let mut fortunes = init.fortunes().to_vec();
    for e in result.trajectory.iter().take_while(|e| e.time <= t) {
        fortunes[e.winner] += e.transferred;
        fortunes[e.loser] = 0;
    }
    fortunes
}

/// X_i(t) * X_j(t), reconstructed by replay.
pub fn pair_product_at(
    result: &RunResult,
    init: &MoneyState,
    i: AgentId,
    j: AgentId,
    t: f64,
) -> u64 {
    let fortunes = fortunes_at(result, init, t);
    fortunes[i] * fortunes[j]
}

/// Right-continuous step function of the solvent count N(t), starting at the
/// number of initially solvent agents.
pub fn n_solvent_curve(result: &RunResult) -> Vec<(f64, usize)> {
    let n0 = result.solvent.len() + result.trajectory.len();
    let mut curve = vec![(0.0, n0)];
    for (k, e) in result.trajectory.iter().enumerate() {
        curve.push((e.time, n0 - k - 1));
    }
    curve
}

/// Hard per-run invariants: exact conservation, permanent bankruptcy, legal
/// transfers, and the final solvent set being an anticlique of the
/// positive-rate graph. Run on every replicate by the estimators.
pub fn verify_run(model: &MeetingModel, init: &MoneyState, result: &RunResult) -> Result<()> {
    let mut fortunes = init.fortunes().to_vec();
    for e in &result.trajectory {
        if e.winner == e.loser {
            return Err(Error::violation("self-game recorded"));
        }
        if fortunes[e.winner] == 0 || fortunes[e.loser] == 0 {
            return Err(Error::violation("game involving a bankrupt agent"));
        }
        if e.transferred != fortunes[e.loser] {
            return Err(Error::violation("transferred amount mismatch"));
        }
        fortunes[e.winner] += e.transferred;
        fortunes[e.loser] = 0;
        let sum: u64 = fortunes.iter().sum();
        if sum != init.total() {
            return Err(Error::violation("money not conserved"));
        }
    }
    if fortunes != result.final_state.fortunes() {
        return Err(Error::violation(
            "final state does not match trajectory replay",
        ));
    }
    for &(i, j, _) in model.edges() {
        if fortunes[i] > 0 && fortunes[j] > 0 {
            return Err(Error::violation(format!(
                "solvent pair ({i},{j}) shares a positive rate: not absorbed"
            )));
        }
    }
    Ok(())
}
