//! The fixed reproduction suite: closed forms, fiber thresholds, breeding
//! regimes, the percolation boundary bound, the extinction recursion and the
//! pinned-seed Monte Carlo rows, each with its tolerance.

use serde::Serialize;

use brw_core::kernel::{normalize, FullGraph};
use brw_core::product::{product_spectral_summary, ProductSpec};
use brw_core::rng::run_trials;
use brw_core::spectral::zeta_estimate_kernel;
use brw_core::stats::mean_sd;
use brw_core::tree::{gw_percolate, solve_extinction_recursion, TreeSpec};
use brw_core::vertex::{FactorIndex, VertexId};
use brw_core::{
    edge_breeding_regime, kernel_identity_check, ks_martingale_check, m1_threshold,
    persistence_probability, BreedingRegime, OffspringLaw,
};

use crate::report::Reporter;
use crate::CliError;

#[derive(Debug, Serialize)]
pub struct SuiteRow {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub tolerance: &'static str,
}

#[derive(Serialize)]
struct SuitePayload {
    seed: u64,
    scale: f64,
    rows: Vec<SuiteRow>,
    passed: usize,
    failed: usize,
}

fn scaled(base: u64, scale: f64) -> u64 {
    ((base as f64 * scale).round() as u64).max(10)
}

fn row_closed_forms() -> SuiteRow {
    let summary = product_spectral_summary(&ProductSpec::srw(3, 100).unwrap()).unwrap();
    let phi1 = 2.0 * 2.0_f64.sqrt() / 3.0;
    let phi2 = 2.0 * 99.0_f64.sqrt() / 100.0;
    let inv_rho_g = 103.0 / (2.0 * (2.0_f64.sqrt() + 99.0_f64.sqrt()));
    let trace = 103.0 * 103.0 / (200.0 * 99.0_f64.sqrt());
    let deviations = [
        (summary.fiber1.phi_u - phi1).abs(),
        (summary.fiber2.phi_u - phi2).abs(),
        (summary.fiber2.m1 - 1.03).abs(),
        (summary.inv_rho_g - inv_rho_g).abs(),
        (summary.critical_trace_mean[1] - trace).abs(),
    ];
    let worst = deviations.iter().cloned().fold(0.0, f64::max);
    SuiteRow {
        name: "closed_forms",
        passed: worst < 1e-9,
        detail: format!("max deviation {worst:.2e}; 1/rho_G {:.6}", summary.inv_rho_g),
        tolerance: "1e-9",
    }
}

fn row_fiber_thresholds() -> SuiteRow {
    let spec = ProductSpec::srw(3, 100).unwrap();
    let o = VertexId::tree_root();
    let radial2 = spec.fiber_radial_restricted(FactorIndex::Two);
    let th2 = m1_threshold(&radial2, &o, 800).unwrap();
    let zeta = zeta_estimate_kernel(&radial2, &o, 800).unwrap();
    let radial1 = spec.fiber_radial_restricted(FactorIndex::One);
    let th1 = m1_threshold(&radial1, &o, 800).unwrap();
    let ok = (th2.m1 - 1.03).abs() < 1e-9
        && (zeta.value - 100.0 / 103.0).abs() < 1e-9
        && (th1.m1 - 103.0 / 3.0).abs() < 1e-6;
    SuiteRow {
        name: "fiber_thresholds",
        passed: ok,
        detail: format!(
            "m1(U2) {:.12}, zeta(U2) {:.12}, m1(U1) {:.6}",
            th2.m1, zeta.value, th1.m1
        ),
        tolerance: "1e-9 (U2), 1e-6 (U1)",
    }
}

fn row_breeding_regimes() -> SuiteRow {
    let cases = [
        (0.30, 3, BreedingRegime::Subcritical),
        (0.34, 3, BreedingRegime::GlobalNotLocal),
        (0.36, 3, BreedingRegime::LocalPossible),
        (0.28, 4, BreedingRegime::GlobalNotLocal),
        (0.24, 4, BreedingRegime::Subcritical),
    ];
    let mut ok = true;
    for (lambda, d, expect) in cases {
        ok &= edge_breeding_regime(lambda, d).unwrap() == expect;
    }
    SuiteRow {
        name: "edge_breeding_regimes",
        passed: ok,
        detail: "thresholds 1/d and 1/(2 sqrt(d-1)) on five cases".into(),
        tolerance: "exact",
    }
}

fn row_kernel_identity() -> SuiteRow {
    let spec = ProductSpec::srw(3, 100).unwrap();
    let radial = spec.fiber_radial_restricted(FactorIndex::Two);
    let q = normalize(&radial);
    let o = VertexId::tree_root();
    let dev = kernel_identity_check(&radial, &q, 100.0 / 103.0, &o, &o, 30).unwrap();
    SuiteRow {
        name: "kernel_identity",
        passed: dev < 1e-12,
        detail: format!("max deviation {dev:.2e} over j <= 30"),
        tolerance: "1e-12",
    }
}

fn row_gw_bound(seed: u64, scale: f64) -> SuiteRow {
    let spec = TreeSpec::per_level(vec![], 3).unwrap();
    let p = 0.8f64;
    let depth = 12usize;
    let trials = scaled(600, scale);
    let gammas: Vec<f64> = run_trials(trials, seed, |_, rng| {
        gw_percolate(&spec, &[p], depth, rng)
            .unwrap()
            .gamma_certificate(depth)
    });
    let (mean, sd) = mean_sd(&gammas);
    let sd_mean = sd / (trials as f64).sqrt();
    let bound = p.powi(depth as i32);
    let passed = mean <= bound + 3.0 * sd_mean && (mean - bound).abs() <= 3.0 * sd_mean;
    SuiteRow {
        name: "gw_boundary_bound",
        passed,
        detail: format!("mean certificate {mean:.5} vs bound {bound:.5} (3 sigma {:.5})", 3.0 * sd_mean),
        tolerance: "3 sigma",
    }
}

fn row_recursion() -> SuiteRow {
    let sol = solve_extinction_recursion(0.34, 3, 80, 1e-10).unwrap();
    let monotone = sol.a.windows(2).all(|w| w[1] < w[0]);
    let passed = monotone && sol.max_residual < 1e-10 && sol.epsilon > 0.0;
    SuiteRow {
        name: "recursion_monotonicity",
        passed,
        detail: format!(
            "a1 {:.9}, residual {:.2e}, decay {:.5}",
            sol.a1, sol.max_residual, sol.decay_ratio
        ),
        tolerance: "residual 1e-10",
    }
}

fn row_persistence_transition(seed: u64, scale: f64) -> SuiteRow {
    let spec = ProductSpec::srw(3, 100).unwrap();
    let radial = spec.fiber_radial_restricted(FactorIndex::Two);
    let full = FullGraph::new(VertexId::tree_root());
    let o = VertexId::tree_root();
    let trials = scaled(10_000, scale);
    let below = persistence_probability(
        &radial,
        &full,
        &OffspringLaw::from_mean(0.8 * 1.03).unwrap(),
        &o,
        200,
        1_000_000,
        trials,
        seed,
    )
    .unwrap();
    let above = persistence_probability(
        &radial,
        &full,
        &OffspringLaw::from_mean(1.25 * 1.03).unwrap(),
        &o,
        200,
        1_000_000,
        trials,
        seed + 1,
    )
    .unwrap();
    let passed = below.estimate.ci_high < 0.01 && above.estimate.ci_low > 0.0;
    SuiteRow {
        name: "persistence_transition",
        passed,
        detail: format!(
            "below CI high {:.5}, above CI low {:.5} ({} trials)",
            below.estimate.ci_high, above.estimate.ci_low, trials
        ),
        tolerance: "CI bounds at m = 0.8 m1 / 1.25 m1",
    }
}

fn row_martingale(seed: u64, scale: f64) -> SuiteRow {
    let spec = ProductSpec::srw(3, 100).unwrap();
    let kernel = spec.kernel();
    let fiber = spec.fiber(FactorIndex::Two);
    let trials = scaled(4_000, scale);
    let report = ks_martingale_check(
        &kernel,
        &fiber,
        &OffspringLaw::point_mass(2),
        &spec.base(),
        30,
        trials,
        seed,
    )
    .unwrap();
    let passed = (0..report.means.len())
        .all(|n| (report.means[n] - 1.0).abs() <= report.half_widths[n].max(1e-12));
    let final_n = report.means.len() - 1;
    SuiteRow {
        name: "martingale_flat",
        passed,
        detail: format!(
            "final mean {:.4} +- {:.4} ({} trials)",
            report.means[final_n], report.half_widths[final_n], trials
        ),
        tolerance: "95% CI per generation",
    }
}

/// Runs the suite (optionally filtered by row names) and writes the table.
/// Returns an error listing the failing rows, if any.
pub fn run_reproduce(
    seed: u64,
    scale: f64,
    rows_filter: Option<&str>,
    reporter: &mut Reporter,
) -> Result<(), CliError> {
    let selected: Option<Vec<&str>> =
        rows_filter.map(|f| f.split(',').map(str::trim).filter(|s| !s.is_empty()).collect());
    type Row = (&'static str, Box<dyn Fn() -> SuiteRow>);
    let all: Vec<Row> = vec![
        ("closed_forms", Box::new(row_closed_forms)),
        ("fiber_thresholds", Box::new(row_fiber_thresholds)),
        ("edge_breeding_regimes", Box::new(row_breeding_regimes)),
        ("kernel_identity", Box::new(row_kernel_identity)),
        ("gw_boundary_bound", Box::new(move || row_gw_bound(seed + 10, scale))),
        ("recursion_monotonicity", Box::new(row_recursion)),
        (
            "persistence_transition",
            Box::new(move || row_persistence_transition(seed + 20, scale)),
        ),
        ("martingale_flat", Box::new(move || row_martingale(seed + 30, scale))),
    ];
    let mut rows = Vec::new();
    for (name, run) in all {
        let wanted = selected
            .as_ref()
            .is_none_or(|list| list.contains(&name));
        if wanted {
            rows.push(run());
        }
    }
    let passed = rows.iter().filter(|r| r.passed).count();
    let failed = rows.len() - passed;
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(4);
    for row in &rows {
        println!(
            "{} {name:width$}  {detail}  [{tol}]",
            if row.passed { "PASS" } else { "FAIL" },
            name = row.name,
            detail = row.detail,
            tol = row.tolerance,
        );
    }
    println!("reproduce: {passed} passed, {failed} failed");
    let payload = SuitePayload {
        seed,
        scale,
        rows,
        passed,
        failed,
    };
    reporter.json("reproduce", "reproduce", &payload)?;
    if failed > 0 {
        let failing: Vec<&str> = payload
            .rows
            .iter()
            .filter(|r| !r.passed)
            .map(|r| r.name)
            .collect();
        return Err(CliError::numeric(format!(
            "reproduction rows failed: {}",
            failing.join(", ")
        )));
    }
    Ok(())
}
