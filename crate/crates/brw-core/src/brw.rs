//! Forward simulation of the branching walk and of the walk induced by a
//! subgraph (children stepping outside are killed), with persistence
//! detection and moment/martingale diagnostics.
//!
//! Populations are evolved as per-vertex counts, not per-particle objects:
//! offspring placement is exchangeable, so a generation is fully described by
//! its counts, and supercritical populations make anything else infeasible.
//! Within one trial evolution is sequential and deterministic; trials are
//! independent streams derived from the master seed.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{restrict, Subgraph, TransitionKernel};
use crate::law::OffspringLaw;
use crate::rng::run_trials;

use crate::stats::{mean_sd, MCEstimate};
use crate::vertex::VertexId;

/// Children per placement batch below which children are placed one by one;
/// above it, a multinomial split over the row is used instead.
const PER_CHILD_LIMIT: u64 = 64;

/// Sparse population state of one generation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParticleGeneration {
    pub counts: BTreeMap<VertexId, u64>,
    pub generation: u64,
    pub cap_hit: bool,
}

impl ParticleGeneration {
    pub fn start(x: VertexId) -> Self {
        let mut counts = BTreeMap::new();
        counts.insert(x, 1);
        ParticleGeneration {
            counts,
            generation: 0,
            cap_hit: false,
        }
    }

    pub fn total(&self) -> u128 {
        self.counts.values().map(|&c| c as u128).sum()
    }

    pub fn is_extinct(&self) -> bool {
        self.counts.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "generation")]
pub enum TrialStatus {
    Extinct(u64),
    AliveAtHorizon,
    CapExceeded(u64),
}

impl TrialStatus {
    /// Persistence proxy: alive at the horizon, or population beyond the cap.
    pub fn persists(&self) -> bool {
        !matches!(self, TrialStatus::Extinct(_))
    }
}

/// Outcome of one induced-walk trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub status: TrialStatus,
    /// Number of generations with a particle at the start vertex;
    /// generation 0 counts as a visit.
    pub local_visits: u64,
    /// Total population per generation, starting at generation 0.
    pub population: Vec<u64>,
}

/// Places `children` offspring of particles at `v` onto the member targets of
/// the row, accumulating counts; returns the number placed inside.
fn place_children(
    row: &[(VertexId, f64, bool)],
    children: u64,
    next: &mut BTreeMap<VertexId, u64>,
    rng: &mut ChaCha8Rng,
) -> u64 {
    let mut placed = 0u64;
    if children == 0 {
        return 0;
    }
    if children <= PER_CHILD_LIMIT {
        for _ in 0..children {
            let mut u: f64 = rng.random();
            for (w, p, member) in row {
                if u < *p {
                    if *member {
                        *next.entry(w.clone()).or_insert(0) += 1;
                        placed += 1;
                    }
                    break;
                }
                u -= p;
            }
            // Falling through the row is death (substochastic deficit).
        }
        return placed;
    }
    let mut remaining = children;
    let mut rem_prob = 1.0_f64;
    for (w, p, member) in row {
        if remaining == 0 || rem_prob <= 0.0 {
            break;
        }
        let q = (p / rem_prob).clamp(0.0, 1.0);
        let n = if q >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, q).unwrap().sample(rng)
        };
        if *member && n > 0 {
            *next.entry(w.clone()).or_insert(0) += n;
            placed += n;
        }
        remaining -= n;
        rem_prob -= p;
    }
    placed
}

/// One generation of the induced walk: every particle at `x` reproduces by
/// the offspring law, each child independently steps by the kernel, and
/// children landing outside the subgraph are discarded. Once the running
/// total of the new generation exceeds `cap`, the step stops emitting and the
/// generation is flagged.
pub fn step_induced(
    gen: &ParticleGeneration,
    kernel: &dyn TransitionKernel,
    sub: &dyn Subgraph,
    law: &OffspringLaw,
    cap: u64,
    rng: &mut ChaCha8Rng,
) -> Result<ParticleGeneration> {
    let mut next = BTreeMap::new();
    let mut total: u128 = 0;
    let mut cap_hit = false;
    'sites: for (v, &count) in &gen.counts {
        let raw = kernel.neighbors(v)?;
        let row: Vec<(VertexId, f64, bool)> = raw
            .into_iter()
            .map(|(w, p)| {
                let member = sub.contains(&w);
                (w, p, member)
            })
            .collect();
        let children = law.sample_total(count, rng);
        let placed = place_children(&row, children, &mut next, rng);
        total += placed as u128;
        if total > cap as u128 {
            cap_hit = true;
            break 'sites;
        }
    }
    Ok(ParticleGeneration {
        counts: next,
        generation: gen.generation + 1,
        cap_hit,
    })
}

/// Runs the induced walk from one particle at `x` to extinction, the horizon,
/// or the population cap.
pub fn simulate_induced(
    kernel: &dyn TransitionKernel,
    sub: &dyn Subgraph,
    law: &OffspringLaw,
    x: &VertexId,
    horizon: u64,
    cap: u64,
    rng: &mut ChaCha8Rng,
) -> Result<TrialOutcome> {
    if horizon == 0 {
        return Err(Error::Parameter("horizon must be >= 1".into()));
    }
    if !sub.contains(x) {
        return Err(Error::Spec(format!("start vertex {x} is not in the subgraph")));
    }
    let mut gen = ParticleGeneration::start(x.clone());
    let mut population = vec![1u64];
    let mut local_visits = 1u64;
    for step in 1..=horizon {
        gen = step_induced(&gen, kernel, sub, law, cap, rng)?;
        let total = gen.total();
        population.push(total.min(u64::MAX as u128) as u64);
        if gen.counts.contains_key(x) {
            local_visits += 1;
        }
        if gen.is_extinct() {
            return Ok(TrialOutcome {
                status: TrialStatus::Extinct(step),
                local_visits,
                population,
            });
        }
        if gen.cap_hit {
            return Ok(TrialOutcome {
                status: TrialStatus::CapExceeded(step),
                local_visits,
                population,
            });
        }
    }
    Ok(TrialOutcome {
        status: TrialStatus::AliveAtHorizon,
        local_visits,
        population,
    })
}

/// Monte Carlo persistence estimate with per-trial outcomes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PersistenceReport {
    pub estimate: MCEstimate,
    pub outcomes: Vec<TrialOutcome>,
}

/// Fraction of trials whose induced walk persists (alive at the horizon or
/// cap-exceeded), with a Wilson interval. Deterministic in
/// `(master_seed, trials, horizon, cap)`.
#[allow(clippy::too_many_arguments)]
pub fn persistence_probability(
    kernel: &dyn TransitionKernel,
    sub: &dyn Subgraph,
    law: &OffspringLaw,
    x: &VertexId,
    horizon: u64,
    cap: u64,
    trials: u64,
    master_seed: u64,
) -> Result<PersistenceReport> {
    if trials == 0 {
        return Err(Error::Parameter("trials must be >= 1".into()));
    }
    // Fail fast on bad inputs before fanning out.
    simulate_induced(kernel, sub, law, x, 1, cap, &mut crate::rng::trial_rng(0, 0))?;
    let results = run_trials(trials, master_seed, |_, rng| {
        simulate_induced(kernel, sub, law, x, horizon, cap, rng)
    });
    let outcomes: Vec<TrialOutcome> = results.into_iter().collect::<Result<_>>()?;
    let successes = outcomes.iter().filter(|o| o.status.persists()).count() as u64;
    Ok(PersistenceReport {
        estimate: MCEstimate::from_counts(successes, trials),
        outcomes,
    })
}

/// Exact mean-growth diagnostic: `E[U_n] = m^n P_x(E_n)`, extrapolated to the
/// growth rate `m * zeta`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanGrowthReport {
    /// Extrapolated n-th root of the expected induced population.
    pub rate: f64,
    /// `ln E[U_n]` per generation (`None` once the stay mass is exactly 0).
    pub ln_expected: Vec<Option<f64>>,
}

pub fn mean_growth_check(
    kernel: &dyn TransitionKernel,
    sub: &dyn Subgraph,
    law: &OffspringLaw,
    x: &VertexId,
    n_max: usize,
) -> Result<MeanGrowthReport> {
    let restricted = restrict(kernel, sub)?;
    let stay = crate::dp::stay_ln_series(&restricted, x, n_max)?;
    let ln_m = law.mean().ln();
    let ln_expected: Vec<Option<f64>> = stay
        .iter()
        .enumerate()
        .map(|(n, s)| s.map(|ln| n as f64 * ln_m + ln))
        .collect();
    let usable = ln_expected
        .iter()
        .position(Option::is_none)
        .unwrap_or(ln_expected.len())
        - 1;
    let lo = usable / 2;
    let points: Vec<(f64, f64)> = (lo..=usable)
        .filter_map(|n| ln_expected[n].map(|v| (n as f64, v)))
        .collect();
    if points.len() < 2 {
        return Err(Error::InsufficientData {
            found: points.len(),
            needed: 2,
        });
    }
    let slope = {
        // Same least-squares slope as the spectral extrapolations.
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        sxy / sxx
    };
    Ok(MeanGrowthReport {
        rate: slope.exp(),
        ln_expected,
    })
}

/// Per-generation means of the Kesten-Stigum normalization
/// `W_n = U_n / (m zeta)^n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MartingaleReport {
    /// Mean of `W_n` over included trials, per generation.
    pub means: Vec<f64>,
    /// 95% half-widths of the means.
    pub half_widths: Vec<f64>,
    pub growth: f64,
    pub trials_used: u64,
    pub excluded: u64,
}

/// Simulates `W_n` for the induced walk on a subgraph with uniform row sums.
///
/// With a constant stay probability `zeta` per child, the induced totals form
/// a Galton-Watson process whose offspring law is the binomial thinning of
/// the base law; totals are simulated directly through that projection
/// (population sizes at supercritical growth rule out spatial resolution).
pub fn ks_martingale_check(
    kernel: &dyn TransitionKernel,
    sub: &dyn Subgraph,
    law: &OffspringLaw,
    x: &VertexId,
    horizon: u64,
    trials: u64,
    master_seed: u64,
) -> Result<MartingaleReport> {
    let restricted = restrict(kernel, sub)?;
    let zeta = uniform_stay_probability(&restricted, x)?;
    let m = law.mean();
    let growth = m * zeta;
    if growth <= 1.0 {
        return Err(Error::Parameter(format!(
            "m * zeta = {growth} <= 1: the normalized process is not supercritical"
        )));
    }
    const TOTAL_GUARD: u64 = 1 << 50;
    let runs = run_trials(trials, master_seed, |_, rng| {
        let mut series = Vec::with_capacity(horizon as usize + 1);
        series.push(1.0f64);
        let mut z: u64 = 1;
        let mut norm = 1.0f64;
        for _ in 1..=horizon {
            norm *= growth;
            if z > 0 {
                let children = law.sample_total(z, rng);
                z = if children == 0 {
                    0
                } else {
                    Binomial::new(children, zeta).unwrap().sample(rng)
                };
            }
            if z > TOTAL_GUARD {
                return None; // excluded: population beyond the exact-count guard
            }
            series.push(z as f64 / norm);
        }
        Some(series)
    });
    let mut included: Vec<Vec<f64>> = Vec::new();
    let mut excluded = 0u64;
    for run in runs {
        match run {
            Some(series) => included.push(series),
            None => excluded += 1,
        }
    }
    if included.is_empty() {
        return Err(Error::InsufficientData { found: 0, needed: 1 });
    }
    let mut means = Vec::with_capacity(horizon as usize + 1);
    let mut half_widths = Vec::with_capacity(horizon as usize + 1);
    for n in 0..=horizon as usize {
        let col: Vec<f64> = included.iter().map(|s| s[n]).collect();
        let (mean, sd) = mean_sd(&col);
        means.push(mean);
        half_widths.push(1.96 * sd / (col.len() as f64).sqrt());
    }
    Ok(MartingaleReport {
        means,
        half_widths,
        growth,
        trials_used: included.len() as u64,
        excluded,
    })
}

/// Common row sum of the restricted kernel on the ball of radius 2 around
/// `x`; errors when rows differ (the subgraph is not transitive enough for
/// the one-type projection).
fn uniform_stay_probability(
    restricted: &dyn TransitionKernel,
    x: &VertexId,
) -> Result<f64> {
    let rows = crate::kernel::explore_ball(restricted, x, 2)?;
    let mut zeta: Option<f64> = None;
    for (v, row) in &rows {
        let sum: f64 = row.iter().map(|(_, p)| p).sum();
        let reference = *zeta.get_or_insert(sum);
        if (sum - reference).abs() > 1e-9 {
            return Err(Error::Transitivity {
                vertex: v.to_string(),
                expected: reference,
                found: sum,
            });
        }
    }
    zeta.ok_or(Error::InsufficientData { found: 0, needed: 1 })
}

/// Coupled evolution of the unrestricted walk and its induced subpopulation
/// (particles whose whole ancestral line stayed inside the subgraph). The
/// induced marginal is the induced walk; per generation, the induced total
/// never exceeds the subgraph-restricted population of the full walk.
#[derive(Debug, Clone)]
pub struct CoupledOutcome {
    pub induced_totals: Vec<u64>,
    pub restricted_totals: Vec<u64>,
}

pub fn simulate_coupled(
    kernel: &dyn TransitionKernel,
    sub: &dyn Subgraph,
    law: &OffspringLaw,
    x: &VertexId,
    horizon: u64,
    cap: u64,
    rng: &mut ChaCha8Rng,
) -> Result<CoupledOutcome> {
    if !sub.contains(x) {
        return Err(Error::Spec(format!("start vertex {x} is not in the subgraph")));
    }
    let mut counts: BTreeMap<VertexId, (u64, u64)> = BTreeMap::new();
    counts.insert(x.clone(), (1, 1));
    let mut induced_totals = vec![1u64];
    let mut restricted_totals = vec![1u64];
    for _ in 1..=horizon {
        let mut next: BTreeMap<VertexId, (u64, u64)> = BTreeMap::new();
        let mut total: u128 = 0;
        'sites: for (v, &(c_tot, c_ind)) in &counts {
            let raw = kernel.neighbors(v)?;
            let row: Vec<(VertexId, f64, bool)> = raw
                .into_iter()
                .map(|(w, p)| {
                    let member = sub.contains(&w);
                    (w, p, member)
                })
                .collect();
            // Induced-eligible parents first: their children stay induced
            // exactly when they land inside the subgraph.
            for (parents, tag_induced) in [(c_ind, true), (c_tot - c_ind, false)] {
                if parents == 0 {
                    continue;
                }
                let children = law.sample_total(parents, rng);
                for _ in 0..children {
                    let mut u: f64 = rng.random();
                    for (w, p, member) in &row {
                        if u < *p {
                            let entry = next.entry(w.clone()).or_insert((0, 0));
                            entry.0 += 1;
                            if tag_induced && *member {
                                entry.1 += 1;
                            }
                            total += 1;
                            break;
                        }
                        u -= p;
                    }
                }
                if total > cap as u128 {
                    break 'sites;
                }
            }
        }
        counts = next;
        let ind: u128 = counts.values().map(|&(_, i)| i as u128).sum();
        let res: u128 = counts
            .iter()
            .filter(|(v, _)| sub.contains(v))
            .map(|(_, &(t, _))| t as u128)
            .sum();
        induced_totals.push(ind as u64);
        restricted_totals.push(res as u64);
        if counts.is_empty() || total > cap as u128 {
            break;
        }
    }
    Ok(CoupledOutcome {
        induced_totals,
        restricted_totals,
    })
}

/// Frequencies of "survival in A" (particles in A at every generation) and of
/// "survival in A without ever visiting B".
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurvivalReport {
    pub in_a: MCEstimate,
    pub in_a_avoiding_b: MCEstimate,
    pub start_in_b: bool,
    /// Per trial, the last generation with a particle in A (0 when never).
    pub last_visit_a: Vec<u64>,
}

/// Tracks visits of the unrestricted walk to two vertex sets.
///
/// A trial "survives in A" when every simulated generation from 1 on has a
/// particle in A (trials stopped by the cap count as surviving if the
/// condition held up to the stop). The avoiding variant additionally requires
/// that no particle ever occupies B, the start vertex included.
#[allow(clippy::too_many_arguments)]
pub fn survival_without_visiting(
    kernel: &dyn TransitionKernel,
    law: &OffspringLaw,
    x: &VertexId,
    set_a: &dyn Subgraph,
    set_b: &dyn Subgraph,
    horizon: u64,
    cap: u64,
    trials: u64,
    master_seed: u64,
) -> Result<SurvivalReport> {
    let full = crate::kernel::FullGraph::new(x.clone());
    // Input validation pass.
    kernel.neighbors(x)?;
    let runs = run_trials(trials, master_seed, |_, rng| {
        let mut gen = ParticleGeneration::start(x.clone());
        let mut always_in_a = true;
        let mut visited_b = set_b.contains(x);
        let mut last_visit_a = if set_a.contains(x) { 0u64 } else { u64::MAX };
        let mut survived = true;
        for step in 1..=horizon {
            match step_induced(&gen, kernel, &full, law, cap, rng) {
                Ok(next) => gen = next,
                Err(e) => return Err(e),
            }
            if gen.is_extinct() {
                survived = false;
                always_in_a = false;
                break;
            }
            if gen.counts.keys().any(|v| set_a.contains(v)) {
                last_visit_a = step;
            } else {
                always_in_a = false;
            }
            if !visited_b && gen.counts.keys().any(|v| set_b.contains(v)) {
                visited_b = true;
            }
            if gen.cap_hit {
                break;
            }
        }
        let in_a = survived && always_in_a;
        Ok((in_a, in_a && !visited_b, if last_visit_a == u64::MAX { 0 } else { last_visit_a }))
    });
    let mut in_a_count = 0u64;
    let mut avoid_count = 0u64;
    let mut last_visits = Vec::with_capacity(trials as usize);
    for run in runs {
        let (in_a, avoid, last) = run?;
        in_a_count += u64::from(in_a);
        avoid_count += u64::from(avoid);
        last_visits.push(last);
    }
    Ok(SurvivalReport {
        in_a: MCEstimate::from_counts(in_a_count, trials),
        in_a_avoiding_b: MCEstimate::from_counts(avoid_count, trials),
        start_in_b: set_b.contains(x),
        last_visit_a: last_visits,
    })
}

/// Outcome of a windowed local-visit trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalVisitTrial {
    /// Whether the trial persists (population reached `persist_threshold`,
    /// or still alive inside the window at the horizon).
    pub persists: bool,
    /// Generations with a particle at the start vertex (generation 0 counts).
    pub local_visits: u64,
}

/// Local-visit statistics at the start vertex under an exact moving window:
/// at generation `n`, particles at depth greater than `horizon - n` cannot
/// reach the start vertex again before the horizon and are discarded.
///
/// The window changes neither the joint law of start-vertex occupancies up
/// to the horizon nor extinction before the window binds; it only bounds the
/// tracked population, which otherwise outgrows exact integer counts at
/// strongly supercritical means. Requires tree-word states whose depth is
/// the graph distance to the start, as on the distance quotients.
pub fn local_visit_trial(
    kernel: &dyn TransitionKernel,
    law: &OffspringLaw,
    horizon: u64,
    persist_threshold: u64,
    rng: &mut ChaCha8Rng,
) -> Result<LocalVisitTrial> {
    struct DepthAtMost {
        limit: usize,
    }
    impl Subgraph for DepthAtMost {
        fn contains(&self, v: &VertexId) -> bool {
            matches!(v, VertexId::Tree(w) if w.depth() <= self.limit)
        }
        fn base(&self) -> VertexId {
            VertexId::tree_root()
        }
    }
    let start = VertexId::tree_root();
    let mut gen = ParticleGeneration::start(start.clone());
    let mut local_visits = 1u64;
    let mut persists = false;
    for step in 1..=horizon {
        let window = DepthAtMost {
            limit: (horizon - step) as usize,
        };
        gen = step_induced(&gen, kernel, &window, law, u64::MAX, rng)?;
        if gen.counts.contains_key(&start) {
            local_visits += 1;
        }
        if gen.total() >= persist_threshold as u128 {
            persists = true;
        }
        if gen.is_extinct() {
            return Ok(LocalVisitTrial {
                persists,
                local_visits,
            });
        }
    }
    Ok(LocalVisitTrial {
        persists: true,
        local_visits,
    })
}

/// Empirical one-step offspring mean counts from `trials` single-particle
/// steps at `x` (for checking against `m * p_U(x, w)`).
pub fn one_step_mean_counts(
    kernel: &dyn TransitionKernel,
    sub: &dyn Subgraph,
    law: &OffspringLaw,
    x: &VertexId,
    trials: u64,
    master_seed: u64,
) -> Result<BTreeMap<VertexId, f64>> {
    let start = ParticleGeneration::start(x.clone());
    let runs = run_trials(trials, master_seed, |_, rng| {
        step_induced(&start, kernel, sub, law, u64::MAX, rng)
    });
    let mut acc: BTreeMap<VertexId, f64> = BTreeMap::new();
    for run in runs {
        for (v, c) in run?.counts {
            *acc.entry(v).or_insert(0.0) += c as f64;
        }
    }
    for value in acc.values_mut() {
        *value /= trials as f64;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::FullGraph;
    use crate::rng::trial_rng;
    use crate::stats::{chi_square, chi_square_quantile};
    use crate::tree::TreeSpec;

    #[test]
    fn zero_offspring_is_extinct_at_one() {
        let spec = TreeSpec::regular(3).unwrap();
        let kernel = spec.srw_kernel();
        let full = FullGraph::new(VertexId::tree_root());
        let law = OffspringLaw::point_mass(0);
        let mut rng = trial_rng(1, 0);
        let out =
            simulate_induced(&kernel, &full, &law, &VertexId::tree_root(), 10, 1000, &mut rng)
                .unwrap();
        assert_eq!(out.status, TrialStatus::Extinct(1));
        assert_eq!(out.local_visits, 1);
        assert_eq!(out.population, vec![1, 0]);
    }

    #[test]
    fn single_particle_walk_occupancy_matches_n_step_prob() {
        // Point mass at 1 turns the walk into a single-particle random walk;
        // occupancy after 3 steps on T_3 follows p^(3)(o, .).
        let spec = TreeSpec::regular(3).unwrap();
        let kernel = spec.srw_kernel();
        let full = FullGraph::new(VertexId::tree_root());
        let law = OffspringLaw::point_mass(1);
        let o = VertexId::tree_root();

        // Oracle: exact 3-step distribution from the DP.
        let mut dist = crate::dp::SparseDist::point(o.clone());
        for _ in 0..3 {
            dist = dist.step(&kernel).unwrap();
        }
        let support: Vec<(VertexId, f64)> = dist
            .entries
            .iter()
            .map(|(v, _)| (v.clone(), dist.prob_at(v)))
            .collect();

        let trials = 10_000u64;
        let mut observed = vec![0u64; support.len()];
        for t in 0..trials {
            let mut rng = trial_rng(31, t);
            let out = simulate_induced(&kernel, &full, &law, &o, 3, 100, &mut rng).unwrap();
            assert_eq!(out.population.last(), Some(&1));
            // Recover the endpoint by replaying the final generation.
            let mut gen = ParticleGeneration::start(o.clone());
            let mut rng = trial_rng(31, t);
            for _ in 0..3 {
                gen = step_induced(&gen, &kernel, &full, &law, 100, &mut rng).unwrap();
            }
            let endpoint = gen.counts.keys().next().unwrap().clone();
            let idx = support.iter().position(|(v, _)| *v == endpoint).unwrap();
            observed[idx] += 1;
        }
        let probs: Vec<f64> = support.iter().map(|&(_, p)| p).collect();
        let (stat, df) = chi_square(&observed, &probs, 5.0);
        let crit = chi_square_quantile(df, 3.090_232_306_167_813); // 99.9%
        assert!(stat < crit, "chi-square {stat} >= {crit} (df {df})");
    }

    #[test]
    fn one_step_mean_matches_m_times_kernel() {
        use crate::product::ProductSpec;
        use crate::vertex::FactorIndex;
        let spec = ProductSpec::srw(3, 4).unwrap();
        let kernel = spec.kernel();
        let fiber = spec.fiber(FactorIndex::Two);
        let law = OffspringLaw::from_mean(1.6).unwrap();
        let x = spec.base();
        let trials = 100_000u64;
        let means = one_step_mean_counts(&kernel, &fiber, &law, &x, trials, 77).unwrap();
        let pu = restrict(&kernel, &fiber).unwrap();
        for (w, p) in pu.neighbors(&x).unwrap() {
            let expect = 1.6 * p;
            let got = means.get(&w).copied().unwrap_or(0.0);
            // Var of one entry is bounded by E[L^2] * p; 3 sigma with slack.
            let sd = ((1.6 * 2.0) * p / trials as f64).sqrt();
            assert!(
                (got - expect).abs() < 3.5 * sd + 1e-4,
                "{w}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn determinism_bit_identical() {
        let spec = TreeSpec::regular(3).unwrap();
        let kernel = spec.srw_kernel();
        let full = FullGraph::new(VertexId::tree_root());
        let law = OffspringLaw::edge_breeding(0.4, 3).unwrap();
        let a = persistence_probability(
            &kernel,
            &full,
            &law,
            &VertexId::tree_root(),
            40,
            10_000,
            200,
            12345,
        )
        .unwrap();
        let b = persistence_probability(
            &kernel,
            &full,
            &law,
            &VertexId::tree_root(),
            40,
            10_000,
            200,
            12345,
        )
        .unwrap();
        assert_eq!(a.outcomes, b.outcomes);
        assert_eq!(a.estimate, b.estimate);
    }

    #[test]
    fn domination_of_induced_by_restricted_population() {
        use crate::tree::{TreeSet, TreeSubgraph};
        use crate::vertex::TreeWord;
        let spec = TreeSpec::regular(3).unwrap();
        let kernel = spec.srw_kernel();
        let subtree = TreeSubgraph::new(
            TreeSet::Subtree {
                root: TreeWord(vec![0]),
            },
            TreeWord(vec![0]),
        );
        let law = OffspringLaw::from_mean(1.3).unwrap();
        let x = VertexId::tree(vec![0]);
        for t in 0..200 {
            let mut rng = trial_rng(5150, t);
            let out =
                simulate_coupled(&kernel, &subtree, &law, &x, 12, 20_000, &mut rng).unwrap();
            for (n, (&ind, &res)) in out
                .induced_totals
                .iter()
                .zip(&out.restricted_totals)
                .enumerate()
            {
                assert!(ind <= res, "trial {t} generation {n}: {ind} > {res}");
            }
        }
    }

    #[test]
    fn persistence_monotone_in_mean() {
        // Stochastic-order check at matched seeds on a fiber instance.
        use crate::product::ProductSpec;
        use crate::vertex::FactorIndex;
        let spec = ProductSpec::srw(3, 100).unwrap();
        let radial = spec.fiber_radial_restricted(FactorIndex::Two);
        let full = FullGraph::new(VertexId::tree_root());
        let o = VertexId::tree_root();
        let mut previous = -1.0f64;
        for m in [0.9, 1.1, 1.4, 2.0] {
            let law = OffspringLaw::from_mean(m).unwrap();
            let report =
                persistence_probability(&radial, &full, &law, &o, 120, 100_000, 2_000, 99)
                    .unwrap();
            let sigma3 = 3.0
                * (report.estimate.estimate * (1.0 - report.estimate.estimate)
                    / report.estimate.trials as f64)
                    .sqrt();
            assert!(
                report.estimate.estimate >= previous - sigma3.max(0.015),
                "persistence dropped: {} after {previous} at m={m}",
                report.estimate.estimate
            );
            previous = report.estimate.estimate;
        }
    }

    #[test]
    fn martingale_requires_supercritical_normalization() {
        use crate::product::ProductSpec;
        use crate::vertex::FactorIndex;
        let spec = ProductSpec::srw(3, 100).unwrap();
        let kernel = spec.kernel();
        let fiber = spec.fiber(FactorIndex::Two);
        let law = OffspringLaw::point_mass(1); // m * zeta < 1
        let err = ks_martingale_check(&kernel, &fiber, &law, &spec.base(), 10, 50, 3);
        assert!(err.is_err());
    }
}
