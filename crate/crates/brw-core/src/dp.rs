//! Sparse forward dynamic programming over generated balls.
//!
//! Distributions are kept as sorted `(vertex, value)` vectors together with a
//! power-of-two scale exponent. Rescaling by powers of two is exact in
//! floating point, so long products such as `(100/103)^2000` keep full
//! relative precision in the log domain instead of underflowing.

use crate::error::{Error, Result};
use crate::kernel::TransitionKernel;
use crate::vertex::VertexId;

const RESCALE_THRESHOLD: f64 = 1e-150;
const RESCALE_EXP: i32 = 512;
const LN_2: f64 = std::f64::consts::LN_2;

/// A sub-probability vector over vertices; the represented value at `v` is
/// `entry(v) * 2^scale_exp`.
#[derive(Debug, Clone)]
pub struct SparseDist {
    pub entries: Vec<(VertexId, f64)>,
    pub scale_exp: i64,
}

impl SparseDist {
    pub fn point(v: VertexId) -> Self {
        SparseDist {
            entries: vec![(v, 1.0)],
            scale_exp: 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Raw (descaled) value at a vertex; flushes to 0 when far below the
    /// representable range.
    pub fn prob_at(&self, v: &VertexId) -> f64 {
        match self.entries.binary_search_by(|(w, _)| w.cmp(v)) {
            Ok(i) => descale(self.entries[i].1, self.scale_exp),
            Err(_) => 0.0,
        }
    }

    /// Natural log of the value at a vertex, `None` when the entry is absent.
    pub fn ln_prob_at(&self, v: &VertexId) -> Option<f64> {
        match self.entries.binary_search_by(|(w, _)| w.cmp(v)) {
            Ok(i) => Some(self.entries[i].1.ln() + self.scale_exp as f64 * LN_2),
            Err(_) => None,
        }
    }

    /// Total mass (descaled).
    pub fn total(&self) -> f64 {
        descale(self.raw_total(), self.scale_exp)
    }

    /// Natural log of total mass, `None` when the vector is empty.
    pub fn ln_total(&self) -> Option<f64> {
        if self.entries.is_empty() {
            return None;
        }
        Some(self.raw_total().ln() + self.scale_exp as f64 * LN_2)
    }

    fn raw_total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    /// One step of the kernel. Mass placed on vertices with no outgoing row
    /// mass simply disappears (substochastic semantics).
    pub fn step(&self, kernel: &dyn TransitionKernel) -> Result<SparseDist> {
        let mut out: Vec<(VertexId, f64)> = Vec::with_capacity(self.entries.len() * 2);
        for (v, p) in &self.entries {
            for (w, q) in kernel.neighbors(v)? {
                out.push((w, p * q));
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(VertexId, f64)> = Vec::with_capacity(out.len());
        for (v, p) in out {
            match merged.last_mut() {
                Some((last, acc)) if *last == v => *acc += p,
                _ => merged.push((v, p)),
            }
        }
        let mut dist = SparseDist {
            entries: merged,
            scale_exp: self.scale_exp,
        };
        dist.rescale();
        Ok(dist)
    }

    fn rescale(&mut self) {
        if self.entries.is_empty() {
            return;
        }
        let max = self
            .entries
            .iter()
            .map(|(_, p)| p.abs())
            .fold(0.0_f64, f64::max);
        if max > 0.0 && max < RESCALE_THRESHOLD {
            let factor = (2.0_f64).powi(RESCALE_EXP);
            for (_, p) in &mut self.entries {
                *p *= factor;
            }
            self.scale_exp -= RESCALE_EXP as i64;
        }
    }
}

fn descale(raw: f64, scale_exp: i64) -> f64 {
    if scale_exp == 0 {
        return raw;
    }
    if scale_exp < -1000 {
        return 0.0;
    }
    raw * (2.0_f64).powi(scale_exp as i32)
}

/// Log-domain sparse distribution for deep sweeps. The dynamic range between
/// the bulk of the distribution and its diagonal entry grows like
/// `exp(c n)`, far past what linear floating point spans, so the long series
/// below work on log values with log-sum-exp merging.
#[derive(Debug, Clone)]
pub struct LogSparseDist {
    /// `(vertex, ln value)`, sorted by vertex.
    pub entries: Vec<(VertexId, f64)>,
}

impl LogSparseDist {
    pub fn point(v: VertexId) -> Self {
        LogSparseDist {
            entries: vec![(v, 0.0)],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ln_at(&self, v: &VertexId) -> Option<f64> {
        self.entries
            .binary_search_by(|(w, _)| w.cmp(v))
            .ok()
            .map(|i| self.entries[i].1)
    }

    pub fn ln_total(&self) -> Option<f64> {
        if self.entries.is_empty() {
            return None;
        }
        let max = self
            .entries
            .iter()
            .map(|&(_, l)| l)
            .fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = self.entries.iter().map(|&(_, l)| (l - max).exp()).sum();
        Some(max + sum.ln())
    }

    pub fn step(&self, kernel: &dyn TransitionKernel) -> Result<LogSparseDist> {
        let mut out: Vec<(VertexId, f64)> = Vec::with_capacity(self.entries.len() * 2);
        for (v, ln_p) in &self.entries {
            for (w, q) in kernel.neighbors(v)? {
                out.push((w, ln_p + q.ln()));
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(VertexId, f64)> = Vec::with_capacity(out.len());
        for (v, ln_p) in out {
            match merged.last_mut() {
                Some((last, acc)) if *last == v => {
                    // log-sum-exp of two terms
                    let (hi, lo) = if *acc >= ln_p { (*acc, ln_p) } else { (ln_p, *acc) };
                    *acc = hi + (lo - hi).exp().ln_1p();
                }
                _ => merged.push((v, ln_p)),
            }
        }
        Ok(LogSparseDist { entries: merged })
    }
}

/// Exact n-step transition probability `p^(n)(x, y)` by forward DP.
pub fn n_step_prob(
    kernel: &dyn TransitionKernel,
    x: &VertexId,
    y: &VertexId,
    n: usize,
) -> Result<f64> {
    let mut dist = SparseDist::point(x.clone());
    for _ in 0..n {
        dist = dist.step(kernel)?;
        if dist.is_empty() {
            return Ok(0.0);
        }
    }
    Ok(dist.prob_at(y))
}

/// `ln p^(n)(x, x)` for `n = 0..=n_max`; `None` marks zero entries.
pub fn diag_ln_series(
    kernel: &dyn TransitionKernel,
    x: &VertexId,
    n_max: usize,
) -> Result<Vec<Option<f64>>> {
    let mut series = Vec::with_capacity(n_max + 1);
    let mut dist = LogSparseDist::point(x.clone());
    series.push(Some(0.0));
    for _ in 1..=n_max {
        dist = dist.step(kernel)?;
        if dist.is_empty() {
            // Dead chain: every later diagonal entry is zero.
            while series.len() <= n_max {
                series.push(None);
            }
            break;
        }
        series.push(dist.ln_at(x));
    }
    Ok(series)
}

/// `ln sum_y p^(n)(x, y)` for `n = 0..=n_max`: the log stay-probability
/// series of a substochastic kernel. `None` marks exact extinction.
pub fn stay_ln_series(
    kernel: &dyn TransitionKernel,
    x: &VertexId,
    n_max: usize,
) -> Result<Vec<Option<f64>>> {
    let mut series = Vec::with_capacity(n_max + 1);
    let mut dist = LogSparseDist::point(x.clone());
    series.push(Some(0.0));
    for _ in 1..=n_max {
        dist = dist.step(kernel)?;
        match dist.ln_total() {
            Some(ln) => series.push(Some(ln)),
            None => {
                while series.len() <= n_max {
                    series.push(None);
                }
                break;
            }
        }
    }
    Ok(series)
}

/// Truncated Green function `sum_{j<=J} p^(j)(x, y) z^j`.
pub fn green_partial(
    kernel: &dyn TransitionKernel,
    x: &VertexId,
    y: &VertexId,
    z: f64,
    j_max: usize,
) -> Result<f64> {
    if z <= 0.0 {
        return Err(Error::Parameter(format!("green weight must be > 0, got {z}")));
    }
    let mut acc = 0.0;
    let mut weight = 1.0;
    let mut dist = SparseDist::point(x.clone());
    acc += dist.prob_at(y) * weight;
    for _ in 1..=j_max {
        dist = dist.step(kernel)?;
        weight *= z;
        if dist.is_empty() {
            break;
        }
        acc += dist.prob_at(y) * weight;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::TreeSpec;

    /// Brute-force oracle: enumerate every n-step path of the simple random
    /// walk on the regular tree and accumulate return probability.
    fn tree_return_prob_oracle(d: u32, n: usize) -> f64 {
        fn go(spec: &TreeSpec, v: &VertexId, left: usize) -> f64 {
            if left == 0 {
                return if *v == VertexId::tree_root() { 1.0 } else { 0.0 };
            }
            let kernel = spec.srw_kernel();
            kernel
                .neighbors(v)
                .unwrap()
                .into_iter()
                .map(|(w, p)| p * go(spec, &w, left - 1))
                .sum()
        }
        let spec = TreeSpec::regular(d).unwrap();
        go(&spec, &VertexId::tree_root(), n)
    }

    #[test]
    fn t3_return_probabilities_match_path_enumeration() {
        let spec = TreeSpec::regular(3).unwrap();
        let kernel = spec.srw_kernel();
        let o = VertexId::tree_root();
        // Frozen from the oracle: p2 = 1/3, p3 = 0, p4 = 5/27.
        assert!((tree_return_prob_oracle(3, 2) - 1.0 / 3.0).abs() < 1e-15);
        assert!((tree_return_prob_oracle(3, 4) - 5.0 / 27.0).abs() < 1e-15);
        assert!((n_step_prob(&kernel, &o, &o, 2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(n_step_prob(&kernel, &o, &o, 3).unwrap(), 0.0);
        assert!((n_step_prob(&kernel, &o, &o, 4).unwrap() - 5.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn green_partial_t3_diagonal() {
        let spec = TreeSpec::regular(3).unwrap();
        let kernel = spec.srw_kernel();
        let o = VertexId::tree_root();
        // j = 0 term alone is 1 for any kernel and weight.
        assert_eq!(green_partial(&kernel, &o, &o, 0.37, 0).unwrap(), 1.0);
        // 1 + 1/3 + 5/27 = 41/27 at z = 1, J = 4.
        let g = green_partial(&kernel, &o, &o, 1.0, 4).unwrap();
        assert!((g - 41.0 / 27.0).abs() < 1e-14, "{g}");
    }

    #[test]
    fn radial_chain_matches_true_kernel_diagonal() {
        let spec = TreeSpec::regular(3).unwrap();
        let kernel = spec.srw_kernel();
        let radial = spec.radial_kernel();
        let o = VertexId::tree_root();
        let a = diag_ln_series(&kernel, &o, 12).unwrap();
        let b = diag_ln_series(&radial, &o, 12).unwrap();
        for n in 0..=12 {
            match (a[n], b[n]) {
                (Some(x), Some(y)) => assert!((x - y).abs() < 1e-12, "n={n}: {x} vs {y}"),
                (None, None) => {}
                other => panic!("support mismatch at {n}: {other:?}"),
            }
        }
    }

    #[test]
    fn log_domain_series_survives_extreme_dynamic_range() {
        // At depth 4000 on T_100 the diagonal entry sits near exp(-6460)
        // while the bulk is O(1/n): far beyond linear f64. The log-domain
        // series must still track n ln(rho) + O(ln n).
        let spec = TreeSpec::regular(100).unwrap();
        let radial = spec.radial_kernel();
        let o = VertexId::tree_root();
        let series = diag_ln_series(&radial, &o, 4000).unwrap();
        let ln_p = series[4000].unwrap();
        let rho = 2.0 * (99.0_f64).sqrt() / 100.0;
        assert!((ln_p / 4000.0 - rho.ln()).abs() < 0.01, "{ln_p}");
        // Cross-check the log path against the exact linear path while the
        // linear one is still representable.
        let lin = {
            let mut dist = SparseDist::point(o.clone());
            for _ in 0..40 {
                dist = dist.step(&radial).unwrap();
            }
            dist.ln_prob_at(&o).unwrap()
        };
        assert!((series[40].unwrap() - lin).abs() < 1e-11);
    }
}
