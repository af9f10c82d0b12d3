//! Spectral radius and stay-probability estimators.
//!
//! Diagonal probabilities decay like `C n^(-beta) rho^n`; taking plain n-th
//! roots at finite depth is biased by the polynomial prefactor. All
//! estimators here instead regress log-probabilities against n over the top
//! half of the depth range, which cancels the prefactor to first order.

use serde::{Deserialize, Serialize};

use crate::dp;
use crate::error::{Error, Result};
use crate::kernel::{restrict, Subgraph, TransitionKernel};
use crate::vertex::VertexId;

/// How a spectral quantity was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimationMethod {
    ClosedForm,
    DpExtrapolation,
}

/// Bundle of spectral quantities for a subgraph walk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralSummary {
    /// Spectral radius of the restricted (substochastic) kernel.
    pub rho_u: f64,
    /// Spectral radius of the stay-conditioned kernel.
    pub phi_u: f64,
    /// `rho_u / phi_u`: asymptotic per-step stay probability.
    pub zeta: f64,
    /// `phi_u / rho_u`: persistence threshold for one-type induced walks.
    pub m1: f64,
    /// Detected period of the diagonal support.
    pub period: u64,
    /// Truncation depth used by the estimator (0 for closed forms).
    pub depth: usize,
    pub method: EstimationMethod,
}

impl SpectralSummary {
    pub fn closed_form(rho_u: f64, phi_u: f64, period: u64) -> Self {
        SpectralSummary {
            rho_u,
            phi_u,
            zeta: rho_u / phi_u,
            m1: phi_u / rho_u,
            period,
            depth: 0,
            method: EstimationMethod::ClosedForm,
        }
    }

    /// Structural sanity: `0 < rho <= phi <= 1`, `zeta * m1 = 1`.
    pub fn validate(&self) -> Result<()> {
        if !(self.rho_u > 0.0 && self.rho_u <= self.phi_u + 1e-12) {
            return Err(Error::Parameter(format!(
                "need 0 < rho_u <= phi_u, got rho {} phi {}",
                self.rho_u, self.phi_u
            )));
        }
        if self.phi_u > 1.0 + 1e-9 {
            return Err(Error::Parameter(format!("phi_u {} exceeds 1", self.phi_u)));
        }
        if (self.zeta * self.m1 - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter("zeta * m1 must be 1".into()));
        }
        Ok(())
    }
}

/// A radius estimate from diagonal extrapolation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadiusEstimate {
    pub value: f64,
    pub period: u64,
    pub depth: usize,
    /// Number of regression points used.
    pub points: usize,
}

/// Detected period: gcd of the diagonal support within the probe depth.
pub fn detect_period(diag_ln: &[Option<f64>], probe_depth: usize) -> Result<u64> {
    let mut g: u64 = 0;
    for (n, entry) in diag_ln.iter().enumerate().take(probe_depth + 1).skip(1) {
        if entry.is_some() {
            g = gcd(g, n as u64);
        }
    }
    if g == 0 {
        Err(Error::PeriodDetection { depth: probe_depth })
    } else {
        Ok(g)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if a == 0 {
        b
    } else {
        gcd(b % a, a)
    }
}

/// Least-squares slope of `y` against `x`.
fn regression_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InsufficientData {
            found: points.len(),
            needed: 2,
        });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientData {
            found: points.len(),
            needed: 2,
        });
    }
    Ok(sxy / sxx)
}

/// Spectral radius of a kernel from the diagonal at `x`, extrapolated over
/// period multiples in the top half of the depth range.
pub fn spectral_radius_estimate(
    kernel: &dyn TransitionKernel,
    x: &VertexId,
    n_max: usize,
) -> Result<RadiusEstimate> {
    let diag = dp::diag_ln_series(kernel, x, n_max)?;
    spectral_radius_from_series(&diag, n_max)
}

/// Same extrapolation from a precomputed `ln p^(n)(x,x)` series.
pub fn spectral_radius_from_series(
    diag: &[Option<f64>],
    n_max: usize,
) -> Result<RadiusEstimate> {
    let probe = n_max.min(50);
    let period = detect_period(diag, probe)?;
    if n_max < 2 * period as usize {
        return Err(Error::Parameter(format!(
            "depth {n_max} too small for period {period}"
        )));
    }
    let lo = n_max / 2;
    let mut points = Vec::new();
    let mut n = (lo as u64).div_ceil(period) * period;
    while (n as usize) <= n_max {
        if let Some(ln_p) = diag[n as usize] {
            points.push((n as f64, ln_p));
        }
        n += period;
    }
    let slope = regression_slope(&points)?;
    Ok(RadiusEstimate {
        value: slope.exp(),
        period,
        depth: n_max,
        points: points.len(),
    })
}

/// `P_x(E_N)`: probability that the walk takes `N` consecutive steps inside
/// the subgraph, computed exactly as the row-sum mass of `P_U^N`.
pub fn stay_prob(
    kernel: &dyn TransitionKernel,
    sub: &dyn Subgraph,
    x: &VertexId,
    n: usize,
) -> Result<f64> {
    let restricted = restrict(kernel, sub)?;
    stay_prob_kernel(&restricted, x, n)
}

/// `stay_prob` on an already-restricted kernel.
pub fn stay_prob_kernel(
    kernel_u: &dyn TransitionKernel,
    x: &VertexId,
    n: usize,
) -> Result<f64> {
    let series = dp::stay_ln_series(kernel_u, x, n)?;
    Ok(series[n].map_or(0.0, f64::exp))
}

/// Extrapolated limit of `P_x(E_N)^(1/N)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZetaEstimate {
    pub value: f64,
    /// Depth actually used by the regression.
    pub depth_used: usize,
    /// Depth at which the stay probability became exactly zero, if it did.
    pub vanished_at: Option<usize>,
}

pub fn zeta_estimate(
    kernel: &dyn TransitionKernel,
    sub: &dyn Subgraph,
    x: &VertexId,
    n_max: usize,
) -> Result<ZetaEstimate> {
    let restricted = restrict(kernel, sub)?;
    zeta_estimate_kernel(&restricted, x, n_max)
}

pub fn zeta_estimate_kernel(
    kernel_u: &dyn TransitionKernel,
    x: &VertexId,
    n_max: usize,
) -> Result<ZetaEstimate> {
    let series = dp::stay_ln_series(kernel_u, x, n_max)?;
    let vanished_at = series.iter().position(Option::is_none);
    let usable = vanished_at.unwrap_or(series.len());
    if usable < 4 {
        return Err(Error::InsufficientData {
            found: usable,
            needed: 4,
        });
    }
    let depth_used = usable - 1;
    let lo = depth_used / 2;
    let points: Vec<(f64, f64)> = (lo..=depth_used)
        .filter_map(|n| series[n].map(|ln| (n as f64, ln)))
        .collect();
    let slope = regression_slope(&points)?;
    Ok(ZetaEstimate {
        value: slope.exp(),
        depth_used,
        vanished_at,
    })
}

/// Truncated Green function (re-exported from the DP layer).
pub fn green_partial(
    kernel: &dyn TransitionKernel,
    x: &VertexId,
    y: &VertexId,
    z: f64,
    j_max: usize,
) -> Result<f64> {
    dp::green_partial(kernel, x, y, z, j_max)
}

/// For a subgraph with uniform row deficit (row sums all equal), the
/// conditioned kernel satisfies `q^(j)(x,y) = p^(j)(x,y) / zeta^j` with
/// `zeta` the common row sum. Returns the maximal deviation over `j <= j_max`
/// for the supplied `zeta`, computing both sides by independent DP sweeps.
/// Rows with differing sums (non-transitive subgraphs) are an error.
pub fn kernel_identity_check(
    kernel_u: &dyn TransitionKernel,
    kernel_q: &dyn TransitionKernel,
    zeta: f64,
    x: &VertexId,
    y: &VertexId,
    j_max: usize,
) -> Result<f64> {
    let mut max_dev = 0.0_f64;
    let mut dist_p = dp::SparseDist::point(x.clone());
    let mut dist_q = dp::SparseDist::point(x.clone());
    let mut zeta_pow = 1.0_f64;
    let mut delta: Option<f64> = None;
    for j in 0..=j_max {
        if j > 0 {
            // Uniform-deficit check on every row the p-walk actually uses.
            for (v, _) in &dist_p.entries {
                let sum: f64 = kernel_u.neighbors(v)?.iter().map(|(_, p)| p).sum();
                let reference = *delta.get_or_insert(sum);
                if (sum - reference).abs() > 1e-9 {
                    return Err(Error::Transitivity {
                        vertex: v.to_string(),
                        expected: reference,
                        found: sum,
                    });
                }
            }
            dist_p = dist_p.step(kernel_u)?;
            dist_q = dist_q.step(kernel_q)?;
            zeta_pow *= zeta;
        }
        let p_j = dist_p.prob_at(y);
        let q_j = dist_q.prob_at(y);
        max_dev = max_dev.max((q_j - p_j / zeta_pow).abs());
    }
    Ok(max_dev)
}

/// DP-extrapolated spectral summary of a restricted kernel: `rho_U` from its
/// diagonal, `phi_U` from the diagonal of the conditioned kernel.
pub fn summary_from_dp(
    kernel_u: &dyn TransitionKernel,
    x: &VertexId,
    n_max: usize,
) -> Result<SpectralSummary> {
    let rho = spectral_radius_estimate(kernel_u, x, n_max)?;
    let normalized = crate::kernel::normalize(kernel_u);
    let phi = spectral_radius_estimate(&normalized, x, n_max)?;
    Ok(SpectralSummary {
        rho_u: rho.value,
        phi_u: phi.value,
        zeta: rho.value / phi.value,
        m1: phi.value / rho.value,
        period: rho.period,
        depth: n_max,
        method: EstimationMethod::DpExtrapolation,
    })
}
