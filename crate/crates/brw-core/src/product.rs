//! Cartesian products of trees and free products of groups: kernels, fiber
//! subgraphs, closed-form spectral summaries and their DP cross-checks.

use serde::{Deserialize, Serialize};

use crate::dp;
use crate::error::{Error, Result};
use crate::kernel::{KernelKind, Subgraph, TransitionKernel};
use crate::spectral::{
    spectral_radius_from_series, zeta_estimate_kernel, RadiusEstimate, SpectralSummary,
};
use crate::tree::{RadialTreeKernel, TreeSpec};
use crate::vertex::{FactorElem, FactorIndex, GroupWord, Syllable, VertexId};

// ---------------------------------------------------------------------------
// Cartesian products of trees
// ---------------------------------------------------------------------------

/// Product of two regular trees with a weighted-step kernel: a step moves in
/// factor i with probability `alpha_i`, by the factor's simple random walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductSpec {
    pub d1: u32,
    pub d2: u32,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl ProductSpec {
    pub fn new(d1: u32, d2: u32, alpha1: f64) -> Result<Self> {
        if d1 < 2 || d2 < 2 {
            return Err(Error::Parameter("factor degrees must be >= 2".into()));
        }
        if !(alpha1 > 0.0 && alpha1 < 1.0) {
            return Err(Error::Parameter(format!(
                "alpha1 must lie in (0,1), got {alpha1}"
            )));
        }
        Ok(ProductSpec {
            d1,
            d2,
            alpha1,
            alpha2: 1.0 - alpha1,
        })
    }

    /// Weights induced by the simple random walk on the product graph:
    /// `alpha_i = d_i / (d_1 + d_2)`.
    pub fn srw(d1: u32, d2: u32) -> Result<Self> {
        Self::new(d1, d2, d1 as f64 / (d1 + d2) as f64)
    }

    pub fn alpha(&self, which: FactorIndex) -> f64 {
        match which {
            FactorIndex::One => self.alpha1,
            FactorIndex::Two => self.alpha2,
        }
    }

    pub fn degree(&self, which: FactorIndex) -> u32 {
        match which {
            FactorIndex::One => self.d1,
            FactorIndex::Two => self.d2,
        }
    }

    pub fn factor_spec(&self, which: FactorIndex) -> TreeSpec {
        TreeSpec::regular(self.degree(which)).expect("validated on construction")
    }

    pub fn base(&self) -> VertexId {
        VertexId::product(VertexId::tree_root(), VertexId::tree_root())
    }

    pub fn kernel(&self) -> ProductKernel {
        ProductKernel {
            spec: self.clone(),
            t1: self.factor_spec(FactorIndex::One),
            t2: self.factor_spec(FactorIndex::Two),
        }
    }

    pub fn fiber(&self, which: FactorIndex) -> FiberSubgraph {
        FiberSubgraph { which }
    }

    /// Distance quotient of the restricted fiber kernel: the factor tree's
    /// radial walk scaled by the fiber weight. Same row sums and diagonal as
    /// the true restricted fiber kernel, but on a one-dimensional state
    /// space, which is what makes depth-thousands DP affordable.
    pub fn fiber_radial_restricted(&self, which: FactorIndex) -> ScaledKernel<RadialTreeKernel> {
        ScaledKernel {
            inner: self.factor_spec(which).radial_kernel(),
            scale: self.alpha(which),
        }
    }
}

/// Kernel `alpha_1 P_1 (x) I_2 + alpha_2 I_1 (x) P_2` on product vertices.
pub struct ProductKernel {
    spec: ProductSpec,
    t1: TreeSpec,
    t2: TreeSpec,
}

impl TransitionKernel for ProductKernel {
    fn neighbors(&self, v: &VertexId) -> Result<Vec<(VertexId, f64)>> {
        let (a, b) = v.as_product()?;
        let k1 = self.t1.srw_kernel();
        let k2 = self.t2.srw_kernel();
        let mut row = Vec::new();
        for (u, p) in k1.neighbors(a)? {
            row.push((
                VertexId::Product(Box::new(u), Box::new(b.clone())),
                self.spec.alpha1 * p,
            ));
        }
        for (u, p) in k2.neighbors(b)? {
            row.push((
                VertexId::Product(Box::new(a.clone()), Box::new(u)),
                self.spec.alpha2 * p,
            ));
        }
        Ok(row)
    }

    fn kind(&self) -> KernelKind {
        KernelKind::Stochastic
    }
}

/// The fiber `{o} x T` (or `T x {o}`) of a product.
#[derive(Debug, Clone)]
pub struct FiberSubgraph {
    which: FactorIndex,
}

impl Subgraph for FiberSubgraph {
    fn contains(&self, v: &VertexId) -> bool {
        match v {
            VertexId::Product(a, b) => match self.which {
                FactorIndex::One => matches!(&**b, VertexId::Tree(w) if w.is_root()),
                FactorIndex::Two => matches!(&**a, VertexId::Tree(w) if w.is_root()),
            },
            _ => false,
        }
    }
    fn base(&self) -> VertexId {
        VertexId::product(VertexId::tree_root(), VertexId::tree_root())
    }
}

/// A kernel with every row scaled by a constant in (0, 1].
pub struct ScaledKernel<K> {
    pub inner: K,
    pub scale: f64,
}

impl<K: TransitionKernel> TransitionKernel for ScaledKernel<K> {
    fn neighbors(&self, v: &VertexId) -> Result<Vec<(VertexId, f64)>> {
        Ok(self
            .inner
            .neighbors(v)?
            .into_iter()
            .map(|(w, p)| (w, p * self.scale))
            .collect())
    }
    fn kind(&self) -> KernelKind {
        KernelKind::Substochastic
    }
}

/// Closed-form spectral data of a product instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProductSummary {
    pub fiber1: SpectralSummary,
    pub fiber2: SpectralSummary,
    /// Spectral radius of the full product walk.
    pub rho_g: f64,
    pub inv_rho_g: f64,
    /// Offspring means at which the rescaled fiber growth hits `1/rho_U`,
    /// per fiber: `1/(alpha_i^2 phi_i)`.
    pub critical_trace_mean: [f64; 2],
    /// Inverse fiber radii `1/rho_{U_i}`.
    pub inv_rho_u: [f64; 2],
}

/// Closed forms for simple random walks on regular-tree factors:
/// `phi_i = 2 sqrt(d_i - 1)/d_i`, `rho_{U_i} = alpha_i phi_i`,
/// `rho_G = alpha_1 phi_1 + alpha_2 phi_2`, `m_1(U_i) = 1/alpha_i`.
pub fn product_spectral_summary(spec: &ProductSpec) -> Result<ProductSummary> {
    let phi = |d: u32| 2.0 * ((d - 1) as f64).sqrt() / d as f64;
    let phi1 = phi(spec.d1);
    let phi2 = phi(spec.d2);
    let rho1 = spec.alpha1 * phi1;
    let rho2 = spec.alpha2 * phi2;
    let rho_g = rho1 + rho2;
    let fiber1 = SpectralSummary::closed_form(rho1, phi1, 2);
    let fiber2 = SpectralSummary::closed_form(rho2, phi2, 2);
    fiber1.validate()?;
    fiber2.validate()?;
    Ok(ProductSummary {
        fiber1,
        fiber2,
        rho_g,
        inv_rho_g: 1.0 / rho_g,
        critical_trace_mean: [
            1.0 / (spec.alpha1 * spec.alpha1 * phi1),
            1.0 / (spec.alpha2 * spec.alpha2 * phi2),
        ],
        inv_rho_u: [1.0 / rho1, 1.0 / rho2],
    })
}

/// The offspring-mean window in which the walk is transient on the product
/// yet can persist in the chosen fiber: `(phi_U/rho_U, 1/rho_G]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransientWindow {
    pub lower_exclusive: f64,
    pub upper_inclusive: f64,
    pub empty: bool,
}

pub fn transient_window(spec: &ProductSpec, fiber: FactorIndex) -> Result<TransientWindow> {
    let summary = product_spectral_summary(spec)?;
    let lower = 1.0 / spec.alpha(fiber);
    let upper = summary.inv_rho_g;
    Ok(TransientWindow {
        lower_exclusive: lower,
        upper_inclusive: upper,
        empty: lower >= upper,
    })
}

/// `ln p_G^(n)(o,o)` of the product walk for `n <= n_max`, from the factor
/// diagonals: the factor moves commute, so the n-step kernel is the binomial
/// mixture `sum_k C(n,k) a1^k a2^(n-k) p_1^(k) p_2^(n-k)`.
pub fn product_diag_ln_series(spec: &ProductSpec, n_max: usize) -> Result<Vec<Option<f64>>> {
    let o = VertexId::tree_root();
    let s1 = dp::diag_ln_series(&spec.factor_spec(FactorIndex::One).radial_kernel(), &o, n_max)?;
    let s2 = dp::diag_ln_series(&spec.factor_spec(FactorIndex::Two).radial_kernel(), &o, n_max)?;
    let ln_fact = {
        let mut table = vec![0.0f64; n_max + 1];
        for i in 1..=n_max {
            table[i] = table[i - 1] + (i as f64).ln();
        }
        table
    };
    let la1 = spec.alpha1.ln();
    let la2 = spec.alpha2.ln();
    let mut series = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut max_term = f64::NEG_INFINITY;
        let mut terms = Vec::new();
        for k in 0..=n {
            if let (Some(a), Some(b)) = (s1[k], s2[n - k]) {
                let ln_choose = ln_fact[n] - ln_fact[k] - ln_fact[n - k];
                let t = ln_choose + k as f64 * la1 + (n - k) as f64 * la2 + a + b;
                max_term = max_term.max(t);
                terms.push(t);
            }
        }
        if terms.is_empty() {
            series.push(None);
        } else {
            let sum: f64 = terms.iter().map(|t| (t - max_term).exp()).sum();
            series.push(Some(max_term + sum.ln()));
        }
    }
    Ok(series)
}

/// DP route for `rho_G`: extrapolation of the product diagonal series.
pub fn product_rho_g_estimate(spec: &ProductSpec, n_max: usize) -> Result<RadiusEstimate> {
    let series = product_diag_ln_series(spec, n_max)?;
    spectral_radius_from_series(&series, n_max)
}

// ---------------------------------------------------------------------------
// Free products of groups
// ---------------------------------------------------------------------------

/// A factor group of the free product, with its uniform step measure on the
/// closed generator set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "n")]
pub enum FactorGroup {
    /// Cyclic group of order `k >= 2`, generated by one element and its
    /// inverse (which coincide when k = 2).
    Cyclic(u32),
    /// Free group of rank `r >= 1` on `2r` generators.
    Free(u32),
}

impl FactorGroup {
    fn validate(&self) -> Result<()> {
        match *self {
            FactorGroup::Cyclic(k) if k < 2 => {
                Err(Error::Parameter("cyclic factor needs order >= 2".into()))
            }
            FactorGroup::Free(0) => Err(Error::Parameter("free factor needs rank >= 1".into())),
            _ => Ok(()),
        }
    }

    /// Generator steps, each a primitive move of the factor walk.
    pub fn generators(&self) -> Vec<GeneratorStep> {
        match *self {
            FactorGroup::Cyclic(2) => vec![GeneratorStep::Cyclic(1)],
            FactorGroup::Cyclic(k) => {
                vec![GeneratorStep::Cyclic(1), GeneratorStep::Cyclic(k - 1)]
            }
            FactorGroup::Free(r) => {
                let mut gens = Vec::with_capacity(2 * r as usize);
                for j in 1..=r as i32 {
                    gens.push(GeneratorStep::Free(j));
                    gens.push(GeneratorStep::Free(-j));
                }
                gens
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorStep {
    /// Additive step of the cyclic exponent (1 or k-1).
    Cyclic(u32),
    /// Signed generator index of the free factor.
    Free(i32),
}

impl GeneratorStep {
    pub fn inverse(&self, group: FactorGroup) -> GeneratorStep {
        match (*self, group) {
            (GeneratorStep::Cyclic(s), FactorGroup::Cyclic(k)) => {
                GeneratorStep::Cyclic((k - s % k) % k)
            }
            (GeneratorStep::Free(j), _) => GeneratorStep::Free(-j),
            _ => unreachable!("generator does not match its group"),
        }
    }
}

/// Free product of two groups with mixing weight `alpha` on factor one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeProductSpec {
    pub factor1: FactorGroup,
    pub factor2: FactorGroup,
    pub alpha: f64,
}

impl FreeProductSpec {
    pub fn new(factor1: FactorGroup, factor2: FactorGroup, alpha: f64) -> Result<Self> {
        factor1.validate()?;
        factor2.validate()?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Parameter(format!(
                "mixing weight must lie in (0,1), got {alpha}"
            )));
        }
        Ok(FreeProductSpec {
            factor1,
            factor2,
            alpha,
        })
    }

    pub fn factor(&self, which: FactorIndex) -> FactorGroup {
        match which {
            FactorIndex::One => self.factor1,
            FactorIndex::Two => self.factor2,
        }
    }

    pub fn weight(&self, which: FactorIndex) -> f64 {
        match which {
            FactorIndex::One => self.alpha,
            FactorIndex::Two => 1.0 - self.alpha,
        }
    }

    pub fn kernel(&self) -> FreeProductKernel {
        FreeProductKernel { spec: self.clone() }
    }

    pub fn factor_copy(&self, which: FactorIndex) -> FactorCopy {
        FactorCopy { which }
    }

    pub fn identity(&self) -> VertexId {
        VertexId::group_identity()
    }

    fn validate_word(&self, w: &GroupWord) -> Result<()> {
        let mut last: Option<FactorIndex> = None;
        for syl in &w.0 {
            if last == Some(syl.factor) {
                return Err(Error::Encoding(
                    "consecutive syllables from the same factor".into(),
                ));
            }
            last = Some(syl.factor);
            match (&syl.elem, self.factor(syl.factor)) {
                (FactorElem::Cyclic(e), FactorGroup::Cyclic(k)) => {
                    if *e == 0 || *e >= k {
                        return Err(Error::Encoding(format!(
                            "cyclic exponent {e} out of range for order {k}"
                        )));
                    }
                }
                (FactorElem::Free(word), FactorGroup::Free(r)) => {
                    if word.is_empty() {
                        return Err(Error::Encoding("empty free-factor syllable".into()));
                    }
                    for &l in word {
                        if l == 0 || l.unsigned_abs() > r {
                            return Err(Error::Encoding(format!("free letter {l} out of range")));
                        }
                    }
                    if word.windows(2).any(|w| w[0] == -w[1]) {
                        return Err(Error::Encoding("unreduced free-factor syllable".into()));
                    }
                }
                _ => {
                    return Err(Error::Encoding(
                        "syllable element does not match its factor group".into(),
                    ))
                }
            }
        }
        Ok(())
    }

    /// Right-multiplies a reduced word by one generator of the given factor,
    /// reducing within the trailing syllable.
    pub fn apply_generator(
        &self,
        w: &GroupWord,
        factor: FactorIndex,
        step: GeneratorStep,
    ) -> GroupWord {
        let mut syllables = w.0.clone();
        let merge = syllables
            .last()
            .map(|s| s.factor == factor)
            .unwrap_or(false);
        if !merge {
            syllables.push(Syllable {
                factor,
                elem: match (step, self.factor(factor)) {
                    (GeneratorStep::Cyclic(s), FactorGroup::Cyclic(_)) => FactorElem::Cyclic(s),
                    (GeneratorStep::Free(j), FactorGroup::Free(_)) => FactorElem::Free(vec![j]),
                    _ => unreachable!("generator does not match the factor"),
                },
            });
            return GroupWord(syllables);
        }
        let last = syllables.last_mut().unwrap();
        match (&mut last.elem, step, self.factor(factor)) {
            (FactorElem::Cyclic(e), GeneratorStep::Cyclic(s), FactorGroup::Cyclic(k)) => {
                let merged = (*e + s) % k;
                if merged == 0 {
                    syllables.pop();
                } else {
                    *e = merged;
                }
            }
            (FactorElem::Free(word), GeneratorStep::Free(j), FactorGroup::Free(_)) => {
                if word.last() == Some(&-j) {
                    word.pop();
                    if word.is_empty() {
                        syllables.pop();
                    }
                } else {
                    word.push(j);
                }
            }
            _ => unreachable!("syllable/generator mismatch"),
        }
        GroupWord(syllables)
    }
}

/// Nearest-neighbor kernel `p(x, y) = mu(x^{-1} y)` on the free product, with
/// `mu = alpha mu_1 + (1 - alpha) mu_2` and `mu_i` uniform on the factor
/// generators.
pub struct FreeProductKernel {
    spec: FreeProductSpec,
}

impl TransitionKernel for FreeProductKernel {
    fn neighbors(&self, v: &VertexId) -> Result<Vec<(VertexId, f64)>> {
        let w = v.as_group()?;
        self.spec.validate_word(w)?;
        let mut row = Vec::new();
        for which in [FactorIndex::One, FactorIndex::Two] {
            let gens = self.spec.factor(which).generators();
            let weight = self.spec.weight(which) / gens.len() as f64;
            for gen in gens {
                let target = self.spec.apply_generator(w, which, gen);
                row.push((VertexId::Group(target), weight));
            }
        }
        Ok(row)
    }

    fn kind(&self) -> KernelKind {
        KernelKind::Stochastic
    }
}

/// The identity-rooted copy of one factor inside the free product.
#[derive(Debug, Clone)]
pub struct FactorCopy {
    which: FactorIndex,
}

impl Subgraph for FactorCopy {
    fn contains(&self, v: &VertexId) -> bool {
        match v {
            VertexId::Group(w) => {
                w.0.is_empty() || (w.0.len() == 1 && w.0[0].factor == self.which)
            }
            _ => false,
        }
    }
    fn base(&self) -> VertexId {
        VertexId::group_identity()
    }
}

/// Thresholds of the factor-copy subgraph: the per-step stay probability is
/// exactly the factor weight, so `zeta = weight` and `m_0 = m_1 = 1/weight`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FreeProductThresholds {
    pub zeta: f64,
    pub m0: f64,
    pub m1: f64,
    /// Depth to which the exact power law was verified by DP.
    pub verified_depth: usize,
    /// Largest deviation of `P_e(E_N)` from `zeta^N` over that range.
    pub max_power_deviation: f64,
    /// DP extrapolation of `zeta` (cross-check of the closed form).
    pub zeta_dp: f64,
}

pub fn free_product_thresholds(
    spec: &FreeProductSpec,
    copy: FactorIndex,
    depth: usize,
) -> Result<FreeProductThresholds> {
    let zeta = spec.weight(copy);
    let kernel = spec.kernel();
    let sub = spec.factor_copy(copy);
    let restricted = crate::kernel::restrict(&kernel, &sub)?;
    let e = spec.identity();
    // Keep the verification depth affordable on infinite factor copies.
    let verified_depth = match spec.factor(copy) {
        FactorGroup::Cyclic(_) => depth,
        FactorGroup::Free(_) => depth.min(10),
    };
    let stay = dp::stay_ln_series(&restricted, &e, verified_depth)?;
    let mut max_dev = 0.0f64;
    for (n, entry) in stay.iter().enumerate() {
        let ln_expected = n as f64 * zeta.ln();
        let dev = match entry {
            Some(ln) => (ln.exp() - ln_expected.exp()).abs(),
            None => return Err(Error::Solver("stay probability vanished on a factor copy".into())),
        };
        max_dev = max_dev.max(dev);
    }
    let zeta_dp = zeta_estimate_kernel(&restricted, &e, verified_depth)?.value;
    Ok(FreeProductThresholds {
        zeta,
        m0: 1.0 / zeta,
        m1: 1.0 / zeta,
        verified_depth,
        max_power_deviation: max_dev,
        zeta_dp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::restrict;
    use proptest::prelude::*;

    #[test]
    fn product_row_at_base() {
        let spec = ProductSpec::srw(3, 100).unwrap();
        let kernel = spec.kernel();
        let row = kernel.neighbors(&spec.base()).unwrap();
        assert_eq!(row.len(), 103);
        let sum: f64 = row.iter().map(|(_, p)| p).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        // Factor-1 moves carry alpha1/3 each, factor-2 moves alpha2/100.
        let a1 = 3.0 / 103.0;
        for (v, p) in &row {
            let (a, _) = v.as_product().unwrap();
            let expected = if *a == VertexId::tree_root() {
                (1.0 - a1) / 100.0
            } else {
                a1 / 3.0
            };
            assert!((p - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn fiber_row_sums_are_alpha() {
        let spec = ProductSpec::srw(3, 100).unwrap();
        let kernel = spec.kernel();
        let fiber = spec.fiber(FactorIndex::Two);
        let restricted = restrict(&kernel, &fiber).unwrap();
        let inner = VertexId::product(VertexId::tree_root(), VertexId::tree(vec![7, 3]));
        for v in [spec.base(), inner] {
            let sum: f64 = restricted.neighbors(&v).unwrap().iter().map(|(_, p)| p).sum();
            assert!((sum - 100.0 / 103.0).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_forms_reference_values() {
        let spec = ProductSpec::srw(3, 100).unwrap();
        let summary = product_spectral_summary(&spec).unwrap();
        assert!((summary.fiber1.phi_u - 2.0 * 2.0_f64.sqrt() / 3.0).abs() < 1e-15);
        assert!((summary.fiber2.phi_u - 2.0 * 99.0_f64.sqrt() / 100.0).abs() < 1e-15);
        assert!((summary.fiber2.m1 - 1.03).abs() < 1e-12);
        assert!((summary.fiber1.m1 - 103.0 / 3.0).abs() < 1e-12);
        // rho_G^{-1} ~ 4.53, and the fiber-2 critical trace mean ~ 5.33.
        assert!((summary.inv_rho_g - 4.5).abs() < 0.1);
        let expect = 103.0 * 103.0 / (200.0 * 99.0_f64.sqrt());
        assert!((summary.critical_trace_mean[1] - expect).abs() < 1e-9);
        assert!(summary.critical_trace_mean[1] > summary.inv_rho_g);
    }

    #[test]
    fn windows_for_the_paper_instance() {
        let spec = ProductSpec::srw(3, 100).unwrap();
        let w2 = transient_window(&spec, FactorIndex::Two).unwrap();
        assert!(!w2.empty);
        assert!((w2.lower_exclusive - 1.03).abs() < 1e-12);
        let w1 = transient_window(&spec, FactorIndex::One).unwrap();
        assert!(w1.empty);

        let sym = ProductSpec::new(3, 3, 0.5).unwrap();
        let ws = transient_window(&sym, FactorIndex::Two).unwrap();
        // m1 = 2 on both fibers; emptiness decided by the closed forms.
        assert!((ws.lower_exclusive - 2.0).abs() < 1e-12);
        let rho_g = 0.5 * (2.0 * 2.0_f64.sqrt() / 3.0) * 2.0;
        assert_eq!(ws.empty, 2.0 >= 1.0 / rho_g);
    }

    #[test]
    fn binomial_convolution_matches_direct_product_dp() {
        let spec = ProductSpec::srw(3, 4).unwrap();
        let series = product_diag_ln_series(&spec, 10).unwrap();
        let kernel = spec.kernel();
        let direct = dp::diag_ln_series(&kernel, &spec.base(), 10).unwrap();
        for n in 0..=10 {
            match (series[n], direct[n]) {
                (Some(a), Some(b)) => {
                    assert!((a.exp() - b.exp()).abs() < 1e-13, "n={n}: {a} vs {b}")
                }
                (None, None) => {}
                other => panic!("support mismatch at {n}: {other:?}"),
            }
        }
    }

    #[test]
    fn free_product_identity_row() {
        // Z_4 * F_2 with alpha = 0.3: from e, 2 cyclic moves at 0.15 each and
        // 4 free moves at 0.175 each; every move extends the word.
        let spec =
            FreeProductSpec::new(FactorGroup::Cyclic(4), FactorGroup::Free(2), 0.3).unwrap();
        let kernel = spec.kernel();
        let row = kernel.neighbors(&spec.identity()).unwrap();
        assert_eq!(row.len(), 6);
        let sum: f64 = row.iter().map(|(_, p)| p).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        for (v, _) in &row {
            assert_eq!(v.as_group().unwrap().syllable_count(), 1);
        }
    }

    #[test]
    fn cancellation_shortens_words() {
        let spec =
            FreeProductSpec::new(FactorGroup::Cyclic(4), FactorGroup::Free(2), 0.5).unwrap();
        let e = GroupWord::identity();
        // g, then g^-1 cancels back to the identity.
        let g = spec.apply_generator(&e, FactorIndex::One, GeneratorStep::Cyclic(1));
        let back = spec.apply_generator(&g, FactorIndex::One, GeneratorStep::Cyclic(3));
        assert!(back.is_identity());
        // In Z_4: g * g = g^2, one syllable.
        let g2 = spec.apply_generator(&g, FactorIndex::One, GeneratorStep::Cyclic(1));
        assert_eq!(g2.syllable_count(), 1);
        assert_eq!(g2.0[0].elem, FactorElem::Cyclic(2));
        // Free factor: x1 x2 stays one syllable of length 2.
        let x1 = spec.apply_generator(&e, FactorIndex::Two, GeneratorStep::Free(1));
        let x1x2 = spec.apply_generator(&x1, FactorIndex::Two, GeneratorStep::Free(2));
        assert_eq!(x1x2.0[0].elem, FactorElem::Free(vec![1, 2]));
    }

    #[test]
    fn factor_copy_stay_probability_is_exact_power() {
        let spec =
            FreeProductSpec::new(FactorGroup::Free(2), FactorGroup::Cyclic(5), 0.3).unwrap();
        let th = free_product_thresholds(&spec, FactorIndex::Two, 400).unwrap();
        assert!((th.zeta - 0.7).abs() < 1e-15);
        assert!(th.max_power_deviation < 1e-12);
        assert!((th.zeta_dp - 0.7).abs() < 1e-9);
        assert!((th.m1 - 1.0 / 0.7).abs() < 1e-12);
    }

    proptest! {
        /// Applying a generator and then its inverse returns the original
        /// reduced word.
        #[test]
        fn generator_inverse_roundtrip(seed in 0u64..5000) {
            use rand::Rng;
            let spec = FreeProductSpec::new(
                FactorGroup::Cyclic(5),
                FactorGroup::Free(2),
                0.4,
            ).unwrap();
            let mut rng = crate::rng::trial_rng(900, seed);
            // Random reduced word via random generator applications.
            let mut w = GroupWord::identity();
            for _ in 0..rng.random_range(0..30) {
                let which = if rng.random::<bool>() { FactorIndex::One } else { FactorIndex::Two };
                let gens = spec.factor(which).generators();
                let g = gens[rng.random_range(0..gens.len())];
                w = spec.apply_generator(&w, which, g);
            }
            spec.validate_word(&w).unwrap();
            for which in [FactorIndex::One, FactorIndex::Two] {
                for g in spec.factor(which).generators() {
                    let forward = spec.apply_generator(&w, which, g);
                    spec.validate_word(&forward).unwrap();
                    let back = spec.apply_generator(&forward, which, g.inverse(spec.factor(which)));
                    prop_assert_eq!(&back, &w);
                }
            }
        }
    }
}
