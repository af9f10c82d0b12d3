//! Offspring distributions and their moment diagnostics.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Gamma, Poisson};

use crate::error::{Error, Result};

/// Offspring distribution of the branching walk.
#[derive(Debug, Clone, PartialEq)]
pub enum OffspringLaw {
    /// Explicit finite pmf, sorted by count.
    Explicit { pmf: Vec<(u64, f64)> },
    /// Edge-breeding law on a degree-`d` vertex: geometric with
    /// `P(n children) = (lambda d)^n / (1 + lambda d)^(n+1)`, mean `lambda d`.
    EdgeBreeding { lambda: f64, degree: u32 },
}

impl OffspringLaw {
    pub fn explicit(mut pmf: Vec<(u64, f64)>) -> Result<Self> {
        pmf.retain(|&(_, p)| p != 0.0);
        pmf.sort_by_key(|&(k, _)| k);
        if pmf.is_empty() {
            return Err(Error::Parameter("empty pmf".into()));
        }
        if pmf.iter().any(|&(_, p)| p < 0.0) {
            return Err(Error::Parameter("negative pmf entry".into()));
        }
        if pmf.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Parameter("duplicate pmf support point".into()));
        }
        let total: f64 = pmf.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!("pmf sums to {total}, not 1")));
        }
        Ok(OffspringLaw::Explicit { pmf })
    }

    pub fn point_mass(k: u64) -> Self {
        OffspringLaw::Explicit { pmf: vec![(k, 1.0)] }
    }

    /// Two-point law on `{floor(m), floor(m)+1}` with the given mean.
    pub fn from_mean(m: f64) -> Result<Self> {
        if m < 0.0 || !m.is_finite() {
            return Err(Error::Parameter(format!("bad mean {m}")));
        }
        let k = m.floor() as u64;
        let frac = m - k as f64;
        if frac.abs() < 1e-12 {
            return Ok(Self::point_mass(k));
        }
        Self::explicit(vec![(k, 1.0 - frac), (k + 1, frac)])
    }

    pub fn edge_breeding(lambda: f64, degree: u32) -> Result<Self> {
        if lambda <= 0.0 || lambda.is_nan() {
            return Err(Error::Parameter(format!("lambda must be > 0, got {lambda}")));
        }
        if degree == 0 {
            return Err(Error::Parameter("degree must be >= 1".into()));
        }
        Ok(OffspringLaw::EdgeBreeding { lambda, degree })
    }

    pub fn mean(&self) -> f64 {
        match self {
            OffspringLaw::Explicit { pmf } => {
                pmf.iter().map(|&(k, p)| k as f64 * p).sum()
            }
            OffspringLaw::EdgeBreeding { lambda, degree } => lambda * *degree as f64,
        }
    }

    pub fn pmf(&self, k: u64) -> f64 {
        match self {
            OffspringLaw::Explicit { pmf } => pmf
                .iter()
                .find(|&&(j, _)| j == k)
                .map_or(0.0, |&(_, p)| p),
            OffspringLaw::EdgeBreeding { lambda, degree } => {
                let ld = lambda * *degree as f64;
                // (ld)^k / (1+ld)^(k+1), evaluated in logs for large k
                let ln = k as f64 * ld.ln() - (k as f64 + 1.0) * (1.0 + ld).ln();
                ln.exp()
            }
        }
    }

    /// One draw from the law.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> u64 {
        match self {
            OffspringLaw::Explicit { pmf } => {
                let mut u: f64 = rng.random();
                for &(k, p) in pmf {
                    if u < p {
                        return k;
                    }
                    u -= p;
                }
                pmf.last().unwrap().0
            }
            OffspringLaw::EdgeBreeding { lambda, degree } => {
                // Geometric number of failures with success prob 1/(1+ld).
                let ld = lambda * *degree as f64;
                let r = ld / (1.0 + ld);
                let u: f64 = rng.random();
                // floor(ln u / ln r); u in (0,1)
                (u.ln() / r.ln()).floor().max(0.0) as u64
            }
        }
    }

    /// Total offspring of `parents` independent individuals.
    ///
    /// Uses per-parent draws for small groups and closed-form convolutions
    /// (multinomial over the support, negative binomial via gamma-Poisson)
    /// for large ones. Counts above 2^53 lose integer granularity; at those
    /// population sizes the granularity is far below sampling noise.
    pub fn sample_total(&self, parents: u64, rng: &mut ChaCha8Rng) -> u64 {
        if parents == 0 {
            return 0;
        }
        if parents <= 32 {
            return (0..parents).map(|_| self.sample(rng)).sum();
        }
        match self {
            OffspringLaw::Explicit { pmf } => {
                let mut total = 0u64;
                let mut remaining = parents;
                let mut rem_prob = 1.0_f64;
                for &(k, p) in pmf {
                    if remaining == 0 {
                        break;
                    }
                    let q = (p / rem_prob).clamp(0.0, 1.0);
                    let n = if q >= 1.0 {
                        remaining
                    } else {
                        Binomial::new(remaining, q).unwrap().sample(rng)
                    };
                    total += n * k;
                    remaining -= n;
                    rem_prob -= p;
                }
                total
            }
            OffspringLaw::EdgeBreeding { lambda, degree } => {
                // NegBin(parents, p) as Poisson(Gamma(parents, scale = ld)).
                let ld = lambda * *degree as f64;
                let gamma = Gamma::new(parents as f64, ld).unwrap();
                let mean = gamma.sample(rng);
                if mean == 0.0 {
                    return 0;
                }
                Poisson::new(mean).unwrap().sample(rng) as u64
            }
        }
    }
}

// ---------------------------------------------------------------------------
// L^2 log L diagnostics
// ---------------------------------------------------------------------------

/// Tail description of a pmf beyond a truncation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailKind {
    /// No mass beyond the truncation.
    FiniteSupport,
    /// `pmf(k+1)/pmf(k) <= ratio < 1` beyond the truncation.
    GeometricRatio(f64),
    /// `pmf(k) ~ c / (k^exponent * ln(k)^log_exponent)`.
    PowerLaw { exponent: f64, log_exponent: f64 },
    /// No usable tail information.
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum L2LogLVerdict {
    Finite,
    Infinite,
    Indeterminate,
}

/// Result of the `E[L^2 log L]` check: partial sum, tail bound and verdict.
#[derive(Debug, Clone)]
pub struct L2LogLReport {
    pub partial: f64,
    pub tail_bound: Option<f64>,
    pub verdict: L2LogLVerdict,
}

/// `sum_k pmf(k) k^2 ln k` up to `truncation`, with a certified tail bound
/// where the tail kind allows one.
pub fn l2logl_of_pmf(
    pmf: impl Fn(u64) -> f64,
    truncation: u64,
    tail: TailKind,
) -> L2LogLReport {
    let term = |k: u64| {
        if k < 2 {
            0.0
        } else {
            pmf(k) * (k as f64) * (k as f64) * (k as f64).ln()
        }
    };
    let partial: f64 = (0..=truncation).map(term).sum();
    match tail {
        TailKind::FiniteSupport => L2LogLReport {
            partial,
            tail_bound: Some(0.0),
            verdict: L2LogLVerdict::Finite,
        },
        TailKind::GeometricRatio(r) => {
            if !(0.0..1.0).contains(&r) || r.is_nan() {
                return L2LogLReport {
                    partial,
                    tail_bound: None,
                    verdict: L2LogLVerdict::Indeterminate,
                };
            }
            // Term ratio tends to r; from k0 on it stays below theta < 1.
            let theta = 0.5 * (1.0 + r);
            let mut k0 = truncation.max(2);
            loop {
                let k = k0 as f64;
                let growth = ((k + 1.0) / k).powi(2) * ((k + 1.0).ln() / k.ln());
                if r * growth <= theta {
                    break;
                }
                k0 += 1;
            }
            let mut extra = 0.0;
            for k in truncation + 1..=k0 {
                extra += term(k);
            }
            let first = term(k0 + 1).max(term(k0) * theta);
            let bound = extra + first / (1.0 - theta);
            L2LogLReport {
                partial,
                tail_bound: Some(bound),
                verdict: L2LogLVerdict::Finite,
            }
        }
        TailKind::PowerLaw {
            exponent,
            log_exponent,
        } => {
            // Terms behave like k^(2-exponent) ln(k)^(1-log_exponent); the sum
            // converges iff exponent > 3, or exponent == 3 and log_exponent > 2.
            let converges =
                exponent > 3.0 || (exponent == 3.0 && log_exponent > 2.0);
            L2LogLReport {
                partial,
                tail_bound: None,
                verdict: if converges {
                    L2LogLVerdict::Finite
                } else {
                    L2LogLVerdict::Infinite
                },
            }
        }
        TailKind::Unknown => L2LogLReport {
            partial,
            tail_bound: None,
            verdict: L2LogLVerdict::Indeterminate,
        },
    }
}

impl OffspringLaw {
    /// `E[L^2 log L]` diagnostic for this law.
    pub fn l2logl(&self, truncation: u64) -> L2LogLReport {
        match self {
            OffspringLaw::Explicit { pmf } => {
                let max = pmf.last().map_or(0, |&(k, _)| k);
                l2logl_of_pmf(|k| self.pmf(k), truncation.max(max), TailKind::FiniteSupport)
            }
            OffspringLaw::EdgeBreeding { lambda, degree } => {
                let ld = lambda * *degree as f64;
                let r = ld / (1.0 + ld);
                l2logl_of_pmf(|k| self.pmf(k), truncation, TailKind::GeometricRatio(r))
            }
        }
    }
}
