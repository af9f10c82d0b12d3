//! Implementations of the CLI subcommands.

use serde::Serialize;

use brw_core::kernel::{normalize, restrict, FullGraph, TransitionKernel};
use brw_core::product::{
    free_product_thresholds, product_rho_g_estimate, product_spectral_summary,
    transient_window, FreeProductThresholds, ProductSpec, ProductSummary, TransientWindow,
};
use brw_core::spectral::{spectral_radius_from_series, EstimationMethod, SpectralSummary};
use brw_core::stats::MCEstimate;
use brw_core::tree::{
    boundary_certificate, boundary_measure, construct_a_empty, gw_percolate,
    solve_extinction_recursion, prune_tree, PruneLevels, TreeSet, TreeSpec, TreeSubgraph,
};
use brw_core::vertex::{FactorIndex, TreeWord, VertexId};
use brw_core::{dp, fbrw, rng::run_trials, OffspringLaw, TrialStatus};

use crate::descriptor::{FamilyDescriptor, LawDescriptor, SubgraphDescriptor};
use crate::report::{ln_to_prob, Reporter};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Route {
    /// Run on the restricted kernel itself.
    Direct,
    /// Run on the distance quotient of the restricted kernel.
    Quotient,
    /// Quotient whenever the family/subgraph pair has one.
    Auto,
}

/// Refuses direct deep sweeps whose reachable set visibly explodes: the
/// projected ball size at the requested depth must stay below a few million
/// states. Finite or slowly growing families pass at any depth. The probe
/// radius is tiny so the guard itself stays cheap on high-degree trees.
fn guard_direct_depth(
    kernel: &dyn TransitionKernel,
    start: &VertexId,
    depth: usize,
) -> Result<(), CliError> {
    if depth <= 10 {
        return Ok(());
    }
    let small = brw_core::kernel::explore_ball(kernel, start, 1)?.len() as f64;
    let big = brw_core::kernel::explore_ball(kernel, start, 2)?.len() as f64;
    let ratio = (big / small).max(1.0);
    let projected = big * ratio.powi((depth - 2) as i32);
    if projected > 2e6 {
        return Err(CliError::numeric(format!(
            "the reachable set grows too fast for a direct sweep to depth {depth} \
             (~{projected:.1e} states projected); use --route quotient or a smaller --depth"
        )));
    }
    Ok(())
}

/// Picks the working kernel and start vertex for deep sweeps.
fn resolve_kernel(
    family: &FamilyDescriptor,
    sub: &SubgraphDescriptor,
    route: Route,
    depth: usize,
) -> Result<(Box<dyn TransitionKernel>, VertexId, &'static str), CliError> {
    let quotient = sub.quotient_kernel(family);
    let use_quotient = match route {
        Route::Direct => false,
        Route::Quotient => {
            if quotient.is_none() {
                return Err(CliError::config(format!(
                    "no distance quotient for family {family} with subgraph {sub}"
                )));
            }
            true
        }
        Route::Auto => quotient.is_some(),
    };
    if use_quotient {
        Ok((quotient.unwrap(), sub.quotient_base(), "quotient"))
    } else {
        struct Restricted {
            kernel: Box<dyn TransitionKernel>,
            sub: Box<dyn brw_core::Subgraph>,
        }
        impl TransitionKernel for Restricted {
            fn neighbors(
                &self,
                v: &VertexId,
            ) -> brw_core::Result<Vec<(VertexId, f64)>> {
                let row = self.kernel.neighbors(v)?;
                Ok(row
                    .into_iter()
                    .filter(|(w, _)| self.sub.contains(w))
                    .collect())
            }
            fn kind(&self) -> brw_core::KernelKind {
                brw_core::KernelKind::Substochastic
            }
        }
        let base = family.base();
        let subgraph = sub.build(family)?;
        if !subgraph.contains(&base) {
            return Err(CliError::config(format!(
                "base vertex {base} is not in subgraph {sub}"
            )));
        }
        let restricted = Restricted {
            kernel: family.kernel(),
            sub: subgraph,
        };
        guard_direct_depth(&restricted, &base, depth)?;
        Ok((Box::new(restricted), base, "direct"))
    }
}

// ---------------------------------------------------------------------------
// spectral
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SpectralPayload {
    family: String,
    subgraph: String,
    route: &'static str,
    start: String,
    summary: SpectralSummary,
}

pub fn run_spectral(
    family: &FamilyDescriptor,
    sub: &SubgraphDescriptor,
    route: Route,
    depth: usize,
    reporter: &mut Reporter,
) -> Result<(), CliError> {
    let (kernel, start, route_name) = resolve_kernel(family, sub, route, depth)?;
    let diag = dp::diag_ln_series(kernel.as_ref(), &start, depth)?;
    let stay = dp::stay_ln_series(kernel.as_ref(), &start, depth)?;
    let rho = spectral_radius_from_series(&diag, depth)?;
    let normalized = normalize(kernel.as_ref());
    let phi_diag = dp::diag_ln_series(&normalized, &start, depth)?;
    let phi = spectral_radius_from_series(&phi_diag, depth)?;
    let summary = SpectralSummary {
        rho_u: rho.value,
        phi_u: phi.value,
        zeta: rho.value / phi.value,
        m1: phi.value / rho.value,
        period: rho.period,
        depth,
        method: EstimationMethod::DpExtrapolation,
    };
    let payload = SpectralPayload {
        family: family.to_string(),
        subgraph: sub.to_string(),
        route: route_name,
        start: start.to_string(),
        summary: summary.clone(),
    };
    reporter.json("spectral", "spectral", &payload)?;
    let rows: Vec<String> = (0..=depth)
        .map(|n| {
            format!(
                "{n},{:e},{:e}",
                ln_to_prob(diag[n]),
                ln_to_prob(stay[n])
            )
        })
        .collect();
    reporter.csv("spectral_series", "n,p_diag,stay", &rows)?;
    println!(
        "spectral [{route_name}] {family} | {sub}: rho_U {:.9} phi_U {:.9} zeta {:.9} m1 {:.9} \
         (period {}, depth {depth})",
        summary.rho_u, summary.phi_u, summary.zeta, summary.m1, summary.period
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// persist
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct PersistPayload {
    family: String,
    subgraph: String,
    law: String,
    route: &'static str,
    horizon: u64,
    cap: u64,
    trials: u64,
    seed: u64,
    estimate: MCEstimate,
}

#[allow(clippy::too_many_arguments)]
pub fn run_persist(
    family: &FamilyDescriptor,
    sub: &SubgraphDescriptor,
    law_desc: &LawDescriptor,
    route: Route,
    horizon: u64,
    cap: u64,
    trials: u64,
    seed: u64,
    reporter: &mut Reporter,
) -> Result<(), CliError> {
    if trials == 0 {
        return Err(CliError::config("trials must be >= 1".into()));
    }
    let law = law_desc.build()?;
    let (kernel, start, route_name) = resolve_kernel(family, sub, route, horizon as usize)?;
    let full = FullGraph::new(start.clone());
    let report = brw_core::persistence_probability(
        kernel.as_ref(),
        &full,
        &law,
        &start,
        horizon,
        cap,
        trials,
        seed,
    )?;
    let payload = PersistPayload {
        family: family.to_string(),
        subgraph: sub.to_string(),
        law: law_desc.to_string(),
        route: route_name,
        horizon,
        cap,
        trials,
        seed,
        estimate: report.estimate.clone(),
    };
    reporter.json("persist", "persist", &payload)?;

    // Per-generation population quantiles; extinct trials contribute zeros,
    // cap-stopped trials leave the pool at their stopping generation.
    let mut rows = Vec::new();
    for gen in 0..=horizon as usize {
        let mut samples: Vec<u64> = Vec::with_capacity(report.outcomes.len());
        for outcome in &report.outcomes {
            if gen < outcome.population.len() {
                samples.push(outcome.population[gen]);
            } else if matches!(outcome.status, TrialStatus::Extinct(_)) {
                samples.push(0);
            }
        }
        if samples.is_empty() {
            break;
        }
        samples.sort_unstable();
        let quantile = |q: f64| samples[((samples.len() - 1) as f64 * q).floor() as usize];
        let alive = samples.iter().filter(|&&s| s > 0).count();
        let mean = samples.iter().map(|&s| s as f64).sum::<f64>() / samples.len() as f64;
        rows.push(format!(
            "{gen},{},{:.6},{:.3},{},{},{}",
            samples.len(),
            alive as f64 / samples.len() as f64,
            mean,
            quantile(0.1),
            quantile(0.5),
            quantile(0.9)
        ));
    }
    reporter.csv(
        "persist_population",
        "generation,considered,alive_frac,mean,q10,q50,q90",
        &rows,
    )?;
    println!(
        "persist [{route_name}] {family} | {sub} | {law_desc}: {}/{} persisting, estimate {:.5} \
         CI [{:.5}, {:.5}]",
        report.estimate.successes,
        trials,
        report.estimate.estimate,
        report.estimate.ci_low,
        report.estimate.ci_high
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// fbrw
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct FbrwPayload {
    family: String,
    subgraph: String,
    labels: String,
    radius: usize,
    /// passed | failed | inconclusive (up to the checked radius)
    is_fbrw: &'static str,
    type_count: Option<u32>,
    quotient_matrix: Option<Vec<Vec<f64>>>,
    witness: Option<brw_core::fbrw::ProjectionWitness>,
    m1: Option<f64>,
    m1_depth: usize,
}

pub fn run_fbrw(
    family: &FamilyDescriptor,
    sub: &SubgraphDescriptor,
    labels: &str,
    radius: usize,
    depth: usize,
    reporter: &mut Reporter,
) -> Result<(), CliError> {
    let base = family.base();
    let kernel = family.kernel();
    let subgraph = sub.build(family)?;
    let restricted = restrict(kernel.as_ref(), subgraph.as_ref())?;
    let projection = match labels {
        "auto" => fbrw::refine_projection(&restricted, &base, radius, 64)?,
        "single" => fbrw::Projection::Single,
        other => {
            if let Some(k) = other.strip_prefix("depth_mod:") {
                let k: u32 = k
                    .parse()
                    .map_err(|_| CliError::config(format!("bad modulus {k:?}")))?;
                fbrw::Projection::DepthMod(k)
            } else {
                return Err(CliError::config(format!(
                    "unknown labels {other:?} (auto | single | depth_mod:k)"
                )));
            }
        }
    };
    let check = fbrw::check_projection(&restricted, &projection, &base, radius)?;
    let (is_fbrw, type_count, quotient_matrix, witness) = match check {
        fbrw::ProjectionCheck::Passed { quotient, .. } => (
            "passed",
            Some(quotient.type_count),
            Some(quotient.rows),
            None,
        ),
        fbrw::ProjectionCheck::Failed { witness } => ("failed", None, None, Some(witness)),
        fbrw::ProjectionCheck::Inconclusive { .. } => ("inconclusive", None, None, None),
    };
    // Threshold from the stay-probability root: quotient route when one
    // exists, otherwise a shallow direct sweep.
    let (m1, m1_depth) = match sub.quotient_kernel(family) {
        Some(q) => {
            let th = fbrw::m1_threshold(q.as_ref(), &sub.quotient_base(), depth)?;
            (Some(th.m1), depth)
        }
        None => {
            let shallow = depth.min(12);
            let threshold = guard_direct_depth(&restricted, &base, shallow)
                .ok()
                .and_then(|()| fbrw::m1_threshold(&restricted, &base, shallow).ok());
            (threshold.map(|th| th.m1), shallow)
        }
    };
    let payload = FbrwPayload {
        family: family.to_string(),
        subgraph: sub.to_string(),
        labels: labels.to_string(),
        radius,
        is_fbrw,
        type_count,
        quotient_matrix,
        witness,
        m1,
        m1_depth,
    };
    reporter.json("fbrw", "fbrw", &payload)?;
    println!(
        "fbrw {family} | {sub}: {is_fbrw} up to radius {radius}, types {:?}, m1 {:?}",
        type_count, m1
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// tree subcommands
// ---------------------------------------------------------------------------

fn tree_spec(family: &FamilyDescriptor) -> Result<TreeSpec, CliError> {
    match family {
        FamilyDescriptor::Tree { spec, .. } => Ok(spec.clone()),
        other => Err(CliError::config(format!("{other} is not a tree family"))),
    }
}

#[derive(Serialize)]
struct GammaPayload {
    family: String,
    word: String,
    gamma: f64,
    prefixes: Vec<(usize, f64)>,
}

pub fn run_tree_gamma(
    family: &FamilyDescriptor,
    word: &TreeWord,
    reporter: &mut Reporter,
) -> Result<(), CliError> {
    let spec = tree_spec(family)?;
    let gamma = boundary_measure(&spec, word)?;
    let prefixes: Vec<(usize, f64)> = (0..=word.depth())
        .map(|d| {
            let prefix = TreeWord(word.0[..d].to_vec());
            Ok((d, boundary_measure(&spec, &prefix)?))
        })
        .collect::<Result<_, brw_core::Error>>()?;
    let payload = GammaPayload {
        family: family.to_string(),
        word: word.to_string(),
        gamma,
        prefixes: prefixes.clone(),
    };
    reporter.json("tree-gamma", "tree_gamma", &payload)?;
    let rows: Vec<String> = prefixes
        .iter()
        .map(|(d, g)| format!("{d},{g:e}"))
        .collect();
    reporter.csv("tree_gamma", "depth,gamma", &rows)?;
    println!("tree gamma {family} at {word}: {gamma:e}");
    Ok(())
}

#[derive(Serialize)]
struct GwLevelRow {
    depth: usize,
    mean_gamma: f64,
    bound: f64,
}

#[derive(Serialize)]
struct GwPayload {
    family: String,
    p: Vec<f64>,
    depth: usize,
    trials: u64,
    seed: u64,
    levels: Vec<GwLevelRow>,
}

pub fn run_tree_gw(
    family: &FamilyDescriptor,
    p: &[f64],
    depth: usize,
    trials: u64,
    seed: u64,
    reporter: &mut Reporter,
) -> Result<(), CliError> {
    if trials == 0 {
        return Err(CliError::config("trials must be >= 1".into()));
    }
    let spec = tree_spec(family)?;
    let per_trial = run_trials(trials, seed, |_, rng| {
        gw_percolate(&spec, p, depth, rng).map(|real| {
            (0..=depth)
                .map(|lvl| real.gamma_certificate(lvl))
                .collect::<Vec<f64>>()
        })
    });
    let mut sums = vec![0.0f64; depth + 1];
    for trial in per_trial {
        for (lvl, g) in trial?.into_iter().enumerate() {
            sums[lvl] += g;
        }
    }
    let mut bound = 1.0f64;
    let mut levels = Vec::with_capacity(depth + 1);
    for (lvl, sum) in sums.iter().enumerate() {
        levels.push(GwLevelRow {
            depth: lvl,
            mean_gamma: sum / trials as f64,
            bound,
        });
        let p_lvl = p.get(lvl).or(p.last()).copied().unwrap_or(1.0);
        bound *= p_lvl;
    }
    let rows: Vec<String> = levels
        .iter()
        .map(|row| format!("{},{:e},{:e}", row.depth, row.mean_gamma, row.bound))
        .collect();
    let payload = GwPayload {
        family: family.to_string(),
        p: p.to_vec(),
        depth,
        trials,
        seed,
        levels,
    };
    reporter.json("tree-gw", "tree_gw", &payload)?;
    reporter.csv("tree_gw", "depth,gamma_hat,bound", &rows)?;
    println!(
        "tree gw {family} p {:?} depth {depth}: mean certificate {:.6} (bound {:.6})",
        p,
        payload.levels[depth].mean_gamma,
        payload.levels[depth].bound
    );
    Ok(())
}

#[derive(Serialize)]
struct PrunePayload {
    degree: u32,
    levels: String,
    rows: Vec<(usize, f64, f64)>,
}

pub fn run_tree_prune(
    degree: u32,
    levels: &PruneLevels,
    depth: usize,
    reporter: &mut Reporter,
) -> Result<(), CliError> {
    let pruned = prune_tree(degree, levels.clone())?;
    let d = degree as f64;
    let mut rows = Vec::with_capacity(depth + 1);
    for i in 0..=depth {
        let applied = match levels {
            PruneLevels::Every => i,
            PruneLevels::List(list) => list.iter().filter(|&&l| (l as usize) < i).count(),
        };
        rows.push((
            i,
            pruned.gamma_certificate(i),
            ((d - 1.0) / d).powi(applied as i32),
        ));
    }
    let csv_rows: Vec<String> = rows
        .iter()
        .map(|(i, cert, bound)| format!("{i},{cert:e},{bound:e}"))
        .collect();
    let levels_text = match levels {
        PruneLevels::Every => "every".to_string(),
        PruneLevels::List(list) => list
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(","),
    };
    let payload = PrunePayload {
        degree,
        levels: levels_text,
        rows: rows.clone(),
    };
    reporter.json("tree-prune", "tree_prune", &payload)?;
    reporter.csv("tree_prune", "depth,certificate,bound", &csv_rows)?;
    println!(
        "tree prune d={degree}: certificate at depth {depth} is {:e} (bound {:e})",
        rows[depth].1, rows[depth].2
    );
    Ok(())
}

#[derive(Serialize)]
struct RecursionPayload {
    lambda: f64,
    degree: u32,
    a1: f64,
    decay_ratio: f64,
    epsilon: f64,
    max_residual: f64,
    roots: (f64, f64),
    solved_len: usize,
}

pub fn run_tree_recursion(
    lambda: f64,
    degree: u32,
    steps: usize,
    tol: f64,
    reporter: &mut Reporter,
) -> Result<(), CliError> {
    let sol = solve_extinction_recursion(lambda, degree, steps, tol)?;
    let payload = RecursionPayload {
        lambda,
        degree,
        a1: sol.a1,
        decay_ratio: sol.decay_ratio,
        epsilon: sol.epsilon,
        max_residual: sol.max_residual,
        roots: sol.roots,
        solved_len: sol.a.len(),
    };
    reporter.json("tree-recursion", "tree_recursion", &payload)?;
    let rows: Vec<String> = sol
        .a
        .iter()
        .enumerate()
        .map(|(n, a)| format!("{n},{a:e}"))
        .collect();
    reporter.csv("tree_recursion", "n,a_n", &rows)?;
    println!(
        "tree recursion lambda={lambda} d={degree}: a1 {:.9}, decay {:.6}, residual {:.2e}",
        sol.a1, sol.decay_ratio, sol.max_residual
    );
    Ok(())
}

#[derive(Serialize)]
struct AsetsPayload {
    lambda: f64,
    degree: u32,
    epsilon: f64,
    r0: u64,
    step: u64,
    visit_bound: f64,
    certificate_depth: usize,
    certificate_full: bool,
    survival_in_set: MCEstimate,
    max_last_visit: u64,
}

#[allow(clippy::too_many_arguments)]
pub fn run_tree_asets(
    lambda: f64,
    degree: u32,
    epsilon: f64,
    depth: usize,
    horizon: u64,
    cap: u64,
    trials: u64,
    seed: u64,
    reporter: &mut Reporter,
) -> Result<(), CliError> {
    let sol = solve_extinction_recursion(lambda, degree, 80, 1e-10)?;
    let aset = construct_a_empty(degree, &sol, epsilon)?;
    let spec = TreeSpec::regular(degree)?;
    let cert_depth = depth.min(14);
    let cert = boundary_certificate(&spec, &TreeSet::Sparse(aset.clone()), cert_depth)?;
    let certificate_full = cert.len() as f64 == spec.level_size(cert_depth);

    let kernel = spec.srw_kernel();
    let law = OffspringLaw::edge_breeding(lambda, degree)?;
    let a_sub = TreeSubgraph::new(TreeSet::Sparse(aset.clone()), TreeWord::root());
    let empty = TreeSubgraph::new(TreeSet::finite(vec![]), TreeWord::root());
    let report = brw_core::survival_without_visiting(
        &kernel,
        &law,
        &VertexId::tree_root(),
        &a_sub,
        &empty,
        horizon,
        cap,
        trials,
        seed,
    )?;
    let max_last_visit = report.last_visit_a.iter().max().copied().unwrap_or(0);
    let payload = AsetsPayload {
        lambda,
        degree,
        epsilon,
        r0: aset.r0,
        step: aset.step,
        visit_bound: aset.visit_bound,
        certificate_depth: cert_depth,
        certificate_full,
        survival_in_set: report.in_a.clone(),
        max_last_visit,
    };
    reporter.json("tree-asets", "tree_asets", &payload)?;
    let rows: Vec<String> = report
        .last_visit_a
        .iter()
        .enumerate()
        .map(|(t, last)| format!("{t},{last}"))
        .collect();
    reporter.csv("tree_asets_visits", "trial,last_visit", &rows)?;
    println!(
        "tree asets lambda={lambda} d={degree}: r0 {}, visit bound {:.4}, certificate full at \
         depth {cert_depth}: {certificate_full}, max last visit {max_last_visit}",
        aset.r0, aset.visit_bound
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// product / freeprod
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct DpCross {
    depth: usize,
    rho_g_dp: f64,
    fiber2_dp: SpectralSummary,
}

#[derive(Serialize)]
struct ProductPayload {
    d1: u32,
    d2: u32,
    alpha1: f64,
    alpha2: f64,
    summary: ProductSummary,
    windows: [TransientWindow; 2],
    dp_cross_check: Option<DpCross>,
}

pub fn run_product(
    d1: u32,
    d2: u32,
    alpha1: Option<f64>,
    depth: usize,
    reporter: &mut Reporter,
) -> Result<(), CliError> {
    let spec = match alpha1 {
        Some(a) => ProductSpec::new(d1, d2, a)?,
        None => ProductSpec::srw(d1, d2)?,
    };
    let summary = product_spectral_summary(&spec)?;
    let windows = [
        transient_window(&spec, FactorIndex::One)?,
        transient_window(&spec, FactorIndex::Two)?,
    ];
    let dp_cross_check = if depth >= 64 {
        let rho_g = product_rho_g_estimate(&spec, depth)?;
        let radial = spec.fiber_radial_restricted(FactorIndex::Two);
        let fiber2 =
            brw_core::spectral::summary_from_dp(&radial, &VertexId::tree_root(), depth)?;
        Some(DpCross {
            depth,
            rho_g_dp: rho_g.value,
            fiber2_dp: fiber2,
        })
    } else {
        None
    };
    let payload = ProductPayload {
        d1,
        d2,
        alpha1: spec.alpha1,
        alpha2: spec.alpha2,
        summary,
        windows,
        dp_cross_check,
    };
    reporter.json("product", "product", &payload)?;
    println!(
        "product T_{d1} x T_{d2}: rho_G {:.9} (1/rho_G {:.6}), m1(U1) {:.6}, m1(U2) {:.6}",
        payload.summary.rho_g,
        payload.summary.inv_rho_g,
        payload.summary.fiber1.m1,
        payload.summary.fiber2.m1
    );
    Ok(())
}

#[derive(Serialize)]
struct FreeprodPayload {
    f1: String,
    f2: String,
    alpha: f64,
    copy: u8,
    thresholds: FreeProductThresholds,
}

pub fn run_freeprod(
    family: &FamilyDescriptor,
    copy: u8,
    depth: usize,
    reporter: &mut Reporter,
) -> Result<(), CliError> {
    let FamilyDescriptor::FreeProduct { spec, .. } = family else {
        return Err(CliError::config(format!("{family} is not a free product")));
    };
    let which = match copy {
        1 => FactorIndex::One,
        2 => FactorIndex::Two,
        other => return Err(CliError::config(format!("copy must be 1 or 2, got {other}"))),
    };
    let thresholds = free_product_thresholds(spec, which, depth)?;
    let payload = FreeprodPayload {
        f1: crate::descriptor::factor_group_text(spec.factor1),
        f2: crate::descriptor::factor_group_text(spec.factor2),
        alpha: spec.alpha,
        copy,
        thresholds: thresholds.clone(),
    };
    reporter.json("freeprod", "freeprod", &payload)?;
    println!(
        "freeprod {family} copy {copy}: zeta {:.9} (dp {:.9}), m0 = m1 = {:.9}, power-law \
         deviation {:.2e} to depth {}",
        thresholds.zeta,
        thresholds.zeta_dp,
        thresholds.m1,
        thresholds.max_power_deviation,
        thresholds.verified_depth
    );
    Ok(())
}
