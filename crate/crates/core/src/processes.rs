//! Stationary Bernoulli-shift process families as path generators
//! `X_k = g(eps_k, eps_{k-1}, ...)`, including coupled-path generation where
//! individual innovation coordinates are replaced by independent copies.
//!
//! Infinite shifts are truncated at a window `W` chosen against the weighted
//! tail functional `sum_{l>W} l^2 delta_p(l) <= tol`; recursive families
//! (stochastic recursion, GARCH) simulate by forward recursion with burn-in
//! instead of their series representations.

use thiserror::Error;

use crate::innovations::{
    check_coupling, draw, DistributionSpec, InnovationStream, ScalarDistribution, Seed64,
    StreamId, SwapMode, SwapPlan, Value,
};

/// Hard cap on truncation windows; polynomial kernels with small exponents
/// blow past it and must relax the truncation tolerance instead.
pub const MAX_WINDOW: u32 = 1 << 16;

/// Default tolerance for the truncation-window rule.
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-8;

/// Burn-in multiple for recursive families.
const BURN_IN_FACTOR: u32 = 10;

#[derive(Debug, Error, PartialEq)]
pub enum SpecError {
    #[error("GARCH stationarity criterion violated: gamma_C = {gamma_c} >= 1")]
    GarchNotStationary { gamma_c: f64 },
    #[error("GARCH requires mu > 0 and nonnegative coefficients")]
    GarchInvalidCoefficients,
    #[error("recursion contraction violated: ||a||_p = {norm} >= 1")]
    ContractionViolated { norm: f64 },
    #[error("recursion offset must be centered: E[b] = {mean} != 0")]
    OffsetNotCentered { mean: f64 },
    #[error("innovation law must be centered for this family (mean = {mean})")]
    InnovationNotCentered { mean: f64 },
    #[error("post-mapped linear family requires a symmetric innovation law")]
    InnovationNotSymmetric,
    #[error("Hoelder regularity must satisfy 0 < beta <= 1, got {beta}")]
    HolderBetaOutOfRange { beta: f64 },
    #[error("linear kernel not square-summable under the declared rule")]
    KernelNotSummable,
    #[error(
        "truncation window {required} exceeds the cap {cap}; raise the truncation tolerance"
    )]
    WindowTooLarge { required: u64, cap: u32 },
    #[error("moment order must exceed 2, got {p}")]
    MomentOrderTooLow { p: f64 },
    #[error("moment order {requested} exceeds available order {available}")]
    MomentOrderUnavailable { requested: f64, available: f64 },
    #[error("family expects a {expected} innovation spec")]
    WrongInnovationShape { expected: &'static str },
    #[error("dyadic family is driven by Bernoulli(1/2) bits")]
    DyadicNeedsFairBits,
    #[error("dyadic bit precision must lie in 1..=64, got {bits}")]
    DyadicBitsOutOfRange { bits: u32 },
    #[error("swap depth {depth} exceeds truncation window {window}")]
    PlanDepthExceedsWindow { depth: u32, window: u32 },
    #[error("{0}")]
    Coupling(#[from] crate::innovations::CouplingError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("burn-in diagnostic failed: ||X||_2 estimates from burn-ins {short} and {long} \
             differ by {diff} (> 5 combined SE {se})")]
    BurnInUnstable { short: u32, long: u32, diff: f64, se: f64 },
}

/// Coefficient rule for the linear family.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearKernel {
    /// `alpha_i = rho^i`.
    Geometric { rho: f64 },
    /// `alpha_i = scale * (i+1)^{-exponent}`.
    Polynomial { exponent: f64, scale: f64 },
    /// Finite list `alpha_0, alpha_1, ...`.
    Explicit { coefficients: Vec<f64> },
}

/// Post-composition applied to the linear convolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PostMap {
    Identity,
    /// `sign(x) |x|^beta` clipped to `[-clip, clip]`; Hoelder(beta) with
    /// constant at most 2.
    HolderPower { beta: f64, clip: f64 },
    /// `tanh(x)`, Lipschitz with constant 1.
    Tanh,
}

impl PostMap {
    #[inline]
    fn apply(&self, y: f64) -> f64 {
        match *self {
            PostMap::Identity => y,
            PostMap::HolderPower { beta, clip } => {
                (y.signum() * y.abs().powf(beta)).clamp(-clip, clip)
            }
            PostMap::Tanh => y.tanh(),
        }
    }
}

/// Zero-mean 1-periodic maps for the doubling-map family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DyadicMap {
    /// `cos(2 pi t)`.
    Cosine,
    /// `1_{[0,1/2)}(t) - 1/2`.
    CenteredIndicator,
}

impl DyadicMap {
    #[inline]
    fn apply(&self, t: f64) -> f64 {
        match *self {
            DyadicMap::Cosine => (std::f64::consts::TAU * t).cos(),
            DyadicMap::CenteredIndicator => {
                if t < 0.5 {
                    0.5
                } else {
                    -0.5
                }
            }
        }
    }
}

/// Inner map of the blocked m-dependent family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerMap {
    /// `(zeta_t + ... + zeta_{t-w+1}) / sqrt(w)`.
    Sum,
    /// `zeta_t * ... * zeta_{t-w+1}`.
    Product,
}

/// Process family and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Linear { kernel: LinearKernel, post: PostMap },
    Dyadic { map: DyadicMap, bits: u32 },
    MdepBlock { inner_width: u32, inner: InnerMap },
    /// `X_k = a_k X_{k-1} + b_k` with `(a_k, b_k)` the pair innovation.
    Recursion,
    Garch { mu: f64, alpha: Vec<f64>, beta: Vec<f64> },
    Volterra { max_order: u32, max_lag: u32, rho: f64, order_weights: Vec<f64> },
}

/// Parametric description of one stationary family plus its innovation law,
/// claimed moment order and truncation tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessSpec {
    pub family: Family,
    pub innovation: DistributionSpec,
    /// Moment order `p > 2` the experiments may rely on.
    pub moment_order: f64,
    /// Tolerance driving the truncation-window rule.
    pub truncation_tol: f64,
    /// Optional explicit window, overriding the rule (still capped).
    pub window_override: Option<u32>,
}

/// A realized path `X_1..X_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub values: Vec<f64>,
    pub seed: Seed64,
    pub burn_in_used: u32,
}

impl PathSample {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Base path plus the path under a swap plan, built from identical
/// innovations except at plan-designated depths.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPathPair {
    pub base: PathSample,
    pub swapped: PathSample,
    pub plan: SwapPlan,
}

/// How path evaluation obtains innovations: by absolute index, with the
/// anchor time and shift depth available for swap decisions.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Source {
    Plain { stream: InnovationStream },
    Coupled { base: InnovationStream, primed: InnovationStream, plan: SwapPlan },
    /// Depths below `m` from `shallow`, the rest from `deep`.
    DepthSplit { shallow: InnovationStream, deep: InnovationStream, m: i64 },
    /// Alternating length-`m` index blocks: even blocks from `fixed`, odd
    /// blocks from `free` (block b covers indices (b-1)m+1 ..= bm).
    BlockAlternating { fixed: InnovationStream, free: InnovationStream, m: i64 },
}

impl Source {
    #[inline]
    pub(crate) fn at(&self, _anchor: i64, index: i64, depth: i64) -> Value {
        match self {
            Source::Plain { stream } => draw(stream, index),
            Source::Coupled { base, primed, plan } => {
                if plan.mode.swaps_depth(depth) {
                    draw(primed, index)
                } else {
                    draw(base, index)
                }
            }
            Source::DepthSplit { shallow, deep, m } => {
                if depth < *m {
                    draw(shallow, index)
                } else {
                    draw(deep, index)
                }
            }
            Source::BlockAlternating { fixed, free, m } => {
                let block = (index - 1).div_euclid(*m) + 1;
                if block.rem_euclid(2) == 0 {
                    draw(fixed, index)
                } else {
                    draw(free, index)
                }
            }
        }
    }

    /// Depth-keyed sources give each anchor its own innovation view, so
    /// recursive families must re-run the recursion per anchor.
    fn depth_keyed(&self) -> bool {
        matches!(
            self,
            Source::Coupled { plan: SwapPlan { mode: SwapMode::Single(_) | SwapMode::TailFrom(_), .. }, .. }
                | Source::DepthSplit { .. }
        )
    }
}

impl ProcessSpec {
    pub fn new(family: Family, innovation: DistributionSpec, moment_order: f64) -> Self {
        ProcessSpec {
            family,
            innovation,
            moment_order,
            truncation_tol: DEFAULT_TRUNCATION_TOL,
            window_override: None,
        }
    }

    /// Moving-average shorthand: `X_k = eps_k + theta eps_{k-1}`.
    pub fn ma1(theta: f64, innovation: ScalarDistribution, p: f64) -> Self {
        ProcessSpec::new(
            Family::Linear {
                kernel: LinearKernel::Explicit { coefficients: vec![1.0, theta] },
                post: PostMap::Identity,
            },
            DistributionSpec::Scalar(innovation),
            p,
        )
    }

    /// Degenerate linear kernel: the i.i.d. process `X_k = eps_k`.
    pub fn iid(innovation: ScalarDistribution, p: f64) -> Self {
        ProcessSpec::new(
            Family::Linear {
                kernel: LinearKernel::Explicit { coefficients: vec![1.0] },
                post: PostMap::Identity,
            },
            DistributionSpec::Scalar(innovation),
            p,
        )
    }

    pub fn linear_geometric(rho: f64, innovation: ScalarDistribution, p: f64) -> Self {
        ProcessSpec::new(
            Family::Linear { kernel: LinearKernel::Geometric { rho }, post: PostMap::Identity },
            DistributionSpec::Scalar(innovation),
            p,
        )
    }

    pub fn dyadic(map: DyadicMap, bits: u32, p: f64) -> Self {
        ProcessSpec::new(
            Family::Dyadic { map, bits },
            DistributionSpec::Scalar(ScalarDistribution::Bernoulli { q: 0.5 }),
            p,
        )
    }

    pub fn recursion(
        a: ScalarDistribution,
        b: ScalarDistribution,
        independent: bool,
        p: f64,
    ) -> Self {
        ProcessSpec::new(
            Family::Recursion,
            DistributionSpec::Pair { first: a, second: b, independent },
            p,
        )
    }

    fn scalar_innovation(&self) -> Result<ScalarDistribution, SpecError> {
        match self.innovation {
            DistributionSpec::Scalar(s) => Ok(s),
            DistributionSpec::Pair { .. } => {
                Err(SpecError::WrongInnovationShape { expected: "scalar" })
            }
        }
    }

    fn pair_innovation(&self) -> Result<(ScalarDistribution, ScalarDistribution, bool), SpecError> {
        match self.innovation {
            DistributionSpec::Pair { first, second, independent } => {
                Ok((first, second, independent))
            }
            DistributionSpec::Scalar(_) => {
                Err(SpecError::WrongInnovationShape { expected: "pair" })
            }
        }
    }

    /// GARCH stationarity coefficient `gamma_C = sum ||alpha_i + beta_i eps^2||_2`
    /// over `i = 1..r`, `r = max(p, q)`, absent coefficients zero.
    pub fn garch_gamma_c(&self) -> Option<f64> {
        if let Family::Garch { alpha, beta, .. } = &self.family {
            let eps = self.scalar_innovation().ok()?;
            let m2 = eps.second_moment();
            let m4 = eps.fourth_moment();
            let r = alpha.len().max(beta.len());
            let mut total = 0.0;
            for i in 0..r {
                let a = alpha.get(i).copied().unwrap_or(0.0);
                let b = beta.get(i).copied().unwrap_or(0.0);
                total += (a * a + 2.0 * a * b * m2 + b * b * m4).sqrt();
            }
            Some(total)
        } else {
            None
        }
    }

    /// Geometric decay ratio of the coupling coefficients where one is known
    /// a priori (drives the window rule for recursive families).
    fn contraction_ratio(&self) -> Option<f64> {
        match &self.family {
            Family::Linear { kernel: LinearKernel::Geometric { rho }, .. } => Some(rho.abs()),
            Family::Dyadic { .. } => Some(0.5),
            Family::Recursion => {
                let (a, _, _) = self.pair_innovation().ok()?;
                Some(a.lp_norm(self.moment_order))
            }
            Family::Garch { .. } => self.garch_gamma_c(),
            _ => None,
        }
    }

    /// Validate every declared invariant, naming the violated criterion.
    pub fn validate(&self) -> Result<(), SpecError> {
        if !(self.moment_order > 2.0) {
            return Err(SpecError::MomentOrderTooLow { p: self.moment_order });
        }
        if self.moment_order > self.innovation.moment_order_available() {
            return Err(SpecError::MomentOrderUnavailable {
                requested: self.moment_order,
                available: self.innovation.moment_order_available(),
            });
        }
        if !(self.truncation_tol > 0.0 && self.truncation_tol < 1.0) {
            return Err(SpecError::InvalidParameter(format!(
                "truncation tolerance must lie in (0,1), got {}",
                self.truncation_tol
            )));
        }
        match &self.family {
            Family::Linear { kernel, post } => {
                let eps = self.scalar_innovation()?;
                if !eps.is_centered() {
                    return Err(SpecError::InnovationNotCentered { mean: eps.mean() });
                }
                match kernel {
                    LinearKernel::Geometric { rho } => {
                        if !(rho.abs() < 1.0 && *rho != 0.0) {
                            return Err(SpecError::KernelNotSummable);
                        }
                    }
                    LinearKernel::Polynomial { exponent, scale } => {
                        // The window rule solves sum_{l>W} l^2 scale l^{-a} <= tol,
                        // which converges only for a > 3.
                        if !(*exponent > 3.0) || !(*scale > 0.0) {
                            return Err(SpecError::KernelNotSummable);
                        }
                    }
                    LinearKernel::Explicit { coefficients } => {
                        if coefficients.is_empty()
                            || coefficients.iter().any(|c| !c.is_finite())
                        {
                            return Err(SpecError::KernelNotSummable);
                        }
                    }
                }
                match post {
                    PostMap::Identity => {}
                    PostMap::HolderPower { beta, clip } => {
                        if !(*beta > 0.0 && *beta <= 1.0) {
                            return Err(SpecError::HolderBetaOutOfRange { beta: *beta });
                        }
                        if !(*clip > 0.0) {
                            return Err(SpecError::InvalidParameter(
                                "clip bound must be positive".into(),
                            ));
                        }
                        if !eps.is_symmetric() {
                            return Err(SpecError::InnovationNotSymmetric);
                        }
                    }
                    PostMap::Tanh => {
                        if !eps.is_symmetric() {
                            return Err(SpecError::InnovationNotSymmetric);
                        }
                    }
                }
                self.window_result()?;
            }
            Family::Dyadic { bits, .. } => {
                let eps = self.scalar_innovation()?;
                if eps != (ScalarDistribution::Bernoulli { q: 0.5 }) {
                    return Err(SpecError::DyadicNeedsFairBits);
                }
                if *bits == 0 || *bits > 64 {
                    return Err(SpecError::DyadicBitsOutOfRange { bits: *bits });
                }
            }
            Family::MdepBlock { inner_width, .. } => {
                let eps = self.scalar_innovation()?;
                if !eps.is_centered() {
                    return Err(SpecError::InnovationNotCentered { mean: eps.mean() });
                }
                if *inner_width == 0 {
                    return Err(SpecError::InvalidParameter(
                        "inner width must be positive".into(),
                    ));
                }
            }
            Family::Recursion => {
                let (a, b, _) = self.pair_innovation()?;
                let norm = a.lp_norm(self.moment_order);
                if !(norm < 1.0) {
                    return Err(SpecError::ContractionViolated { norm });
                }
                if b.mean() != 0.0 {
                    return Err(SpecError::OffsetNotCentered { mean: b.mean() });
                }
                self.window_result()?;
            }
            Family::Garch { mu, alpha, beta } => {
                let eps = self.scalar_innovation()?;
                if !eps.is_centered() {
                    return Err(SpecError::InnovationNotCentered { mean: eps.mean() });
                }
                if !(*mu > 0.0)
                    || alpha.iter().chain(beta.iter()).any(|c| *c < 0.0 || !c.is_finite())
                {
                    return Err(SpecError::GarchInvalidCoefficients);
                }
                let gamma_c = self.garch_gamma_c().expect("garch family");
                if !(gamma_c < 1.0) {
                    return Err(SpecError::GarchNotStationary { gamma_c });
                }
                self.window_result()?;
            }
            Family::Volterra { max_order, max_lag, rho, order_weights } => {
                let eps = self.scalar_innovation()?;
                if !eps.is_centered() {
                    return Err(SpecError::InnovationNotCentered { mean: eps.mean() });
                }
                if *max_order == 0 || order_weights.len() != *max_order as usize {
                    return Err(SpecError::InvalidParameter(
                        "volterra needs one weight per kernel order".into(),
                    ));
                }
                if !(rho.abs() < 1.0) || *max_lag > MAX_WINDOW {
                    return Err(SpecError::KernelNotSummable);
                }
            }
        }
        Ok(())
    }

    fn window_result(&self) -> Result<u32, SpecError> {
        if let Some(w) = self.window_override {
            if w == 0 || w > MAX_WINDOW {
                return Err(SpecError::WindowTooLarge { required: w as u64, cap: MAX_WINDOW });
            }
            return Ok(w);
        }
        let tol = self.truncation_tol;
        let required: u64 = match &self.family {
            Family::Linear { kernel, .. } => match kernel {
                LinearKernel::Geometric { rho } => geometric_window(rho.abs(), tol),
                LinearKernel::Explicit { coefficients } => coefficients.len() as u64,
                LinearKernel::Polynomial { exponent, scale } => {
                    // Smallest W with scale * W^{3-a} / (a-3) <= tol.
                    let a = *exponent;
                    let w = (scale / ((a - 3.0) * tol)).powf(1.0 / (a - 3.0));
                    w.ceil().max(1.0) as u64
                }
            },
            Family::Dyadic { bits, .. } => *bits as u64,
            Family::MdepBlock { .. } => 2,
            Family::Recursion | Family::Garch { .. } => {
                let ratio = self.contraction_ratio().expect("recursive family");
                geometric_window(ratio, tol)
            }
            Family::Volterra { max_lag, .. } => *max_lag as u64 + 1,
        };
        if required == 0 || required > MAX_WINDOW as u64 {
            return Err(SpecError::WindowTooLarge { required, cap: MAX_WINDOW });
        }
        Ok(required as u32)
    }

    /// Truncation window `W`: shift depths beyond it are ignored.
    pub fn window(&self) -> u32 {
        self.window_result().expect("window on validated spec")
    }

    /// Burn-in length for families simulated by forward recursion.
    pub fn burn_in(&self) -> u32 {
        match self.family {
            Family::Recursion | Family::Garch { .. } => BURN_IN_FACTOR * self.window(),
            _ => 0,
        }
    }

    fn is_recursive(&self) -> bool {
        matches!(self.family, Family::Recursion | Family::Garch { .. })
    }

    /// Linear kernel coefficients `alpha_0..alpha_{W-1}` (identity post-map
    /// families only).
    pub fn kernel_coefficients(&self) -> Option<Vec<f64>> {
        if let Family::Linear { kernel, post: PostMap::Identity } = &self.family {
            let w = self.window_result().ok()? as usize;
            Some(match kernel {
                LinearKernel::Geometric { rho } => {
                    (0..w).map(|i| rho.powi(i as i32)).collect()
                }
                LinearKernel::Polynomial { exponent, scale } => {
                    (0..w).map(|i| scale * ((i + 1) as f64).powf(-exponent)).collect()
                }
                LinearKernel::Explicit { coefficients } => coefficients.clone(),
            })
        } else {
            None
        }
    }

    /// Exact `E[X_0 X_k]` for the sub-families with closed forms: linear
    /// with identity post-map, and the recursion with independent `(a, b)`.
    pub fn analytic_autocovariance(&self, k: u32) -> Option<f64> {
        match &self.family {
            Family::Linear { post: PostMap::Identity, .. } => {
                let coeffs = self.kernel_coefficients()?;
                let eps = self.scalar_innovation().ok()?;
                let var = eps.variance();
                let k = k as usize;
                if k >= coeffs.len() {
                    return Some(0.0);
                }
                Some(var * (0..coeffs.len() - k).map(|i| coeffs[i] * coeffs[i + k]).sum::<f64>())
            }
            Family::Recursion => {
                let (a, b, independent) = self.pair_innovation().ok()?;
                if !independent {
                    return None;
                }
                let a2 = a.second_moment();
                let gamma0 = b.variance() / (1.0 - a2);
                Some(gamma0 * a.mean().powi(k as i32))
            }
            _ => None,
        }
    }

    /// Path coordinate `X_k` for window families, innovations served by the
    /// source (anchored at `k` for swap-depth decisions).
    pub(crate) fn window_value(&self, k: i64, src: &Source) -> f64 {
        match &self.family {
            Family::Linear { kernel, post } => {
                let y = match kernel {
                    LinearKernel::Geometric { rho } => {
                        let w = self.window() as i64;
                        let mut acc = 0.0;
                        // Deepest term first so the geometric sum loses no
                        // low-order bits.
                        for j in (0..w).rev() {
                            acc += rho.powi(j as i32) * src.at(k, k - j, j).scalar();
                        }
                        acc
                    }
                    LinearKernel::Polynomial { exponent, scale } => {
                        let w = self.window() as i64;
                        let mut acc = 0.0;
                        for j in (0..w).rev() {
                            acc += scale
                                * ((j + 1) as f64).powf(-exponent)
                                * src.at(k, k - j, j).scalar();
                        }
                        acc
                    }
                    LinearKernel::Explicit { coefficients } => coefficients
                        .iter()
                        .enumerate()
                        .map(|(j, c)| c * src.at(k, k - j as i64, j as i64).scalar())
                        .sum(),
                };
                post.apply(y)
            }
            Family::Dyadic { map, bits } => {
                let mut t = 0.0;
                for j in (0..*bits as i64).rev() {
                    let bit = src.at(k, k - j, j).scalar();
                    t += bit * 2f64.powi(-(j as i32) - 1);
                }
                map.apply(t)
            }
            Family::MdepBlock { inner_width, inner } => {
                let w = *inner_width as i64;
                // X_k averages Y_{wk}, ..., Y_{wk-w+1}; each Y_t maps the
                // scalar window zeta_t..zeta_{t-w+1}. Block depth of scalar
                // index s relative to k decides swaps.
                let mut sum = 0.0;
                for l in 0..w {
                    let t = w * k - l;
                    let y = match inner {
                        InnerMap::Sum => {
                            let mut acc = 0.0;
                            for i in 0..w {
                                let s = t - i;
                                let depth = k - ((s - 1).div_euclid(w) + 1);
                                acc += src.at(k, s, depth).scalar();
                            }
                            acc / (w as f64).sqrt()
                        }
                        InnerMap::Product => {
                            let mut acc = 1.0;
                            for i in 0..w {
                                let s = t - i;
                                let depth = k - ((s - 1).div_euclid(w) + 1);
                                acc *= src.at(k, s, depth).scalar();
                            }
                            acc
                        }
                    };
                    sum += y;
                }
                sum / w as f64
            }
            Family::Volterra { max_order, max_lag, rho, order_weights } => {
                let lags = *max_lag as i64;
                let mut total = 0.0;
                // Enumerate 0 <= j_1 < ... < j_i <= max_lag per order i.
                let mut eps_cache: Vec<f64> = Vec::with_capacity(lags as usize + 1);
                for j in 0..=lags {
                    eps_cache.push(src.at(k, k - j, j).scalar());
                }
                for (oi, weight) in order_weights.iter().enumerate() {
                    let order = oi + 1;
                    if order > *max_order as usize || *weight == 0.0 {
                        continue;
                    }
                    total += weight * volterra_order_sum(&eps_cache, order, 0, *rho, 1.0);
                }
                total
            }
            Family::Recursion | Family::Garch { .. } => {
                unreachable!("recursive families evaluate via forward passes")
            }
        }
    }

    /// Forward pass for recursive families over `lo..=hi` (depth-agnostic
    /// sources); returns values indexed by `k - lo`.
    fn recursive_forward(&self, lo: i64, hi: i64, src: &Source) -> Vec<f64> {
        match &self.family {
            Family::Recursion => {
                let mut xs = Vec::with_capacity((hi - lo + 1) as usize);
                let mut x = 0.0;
                for i in lo..=hi {
                    let (a, b) = src.at(i, i, 0).pair();
                    x = a * x + b;
                    xs.push(x);
                }
                xs
            }
            Family::Garch { mu, alpha, beta } => {
                let p = alpha.len();
                let q = beta.len();
                let mut l2_hist = vec![*mu; p.max(1)];
                let mut x2_hist = vec![0.0; q.max(1)];
                let mut xs = Vec::with_capacity((hi - lo + 1) as usize);
                for i in lo..=hi {
                    let mut l2 = *mu;
                    for (ai, a) in alpha.iter().enumerate() {
                        l2 += a * l2_hist[ai];
                    }
                    for (bi, b) in beta.iter().enumerate() {
                        l2 += b * x2_hist[bi];
                    }
                    let eps = src.at(i, i, 0).scalar();
                    let x = eps * l2.sqrt();
                    if p > 0 {
                        l2_hist.rotate_right(1);
                        l2_hist[0] = l2;
                    }
                    if q > 0 {
                        x2_hist.rotate_right(1);
                        x2_hist[0] = x * x;
                    }
                    xs.push(x);
                }
                xs
            }
            _ => unreachable!("forward pass is for recursive families"),
        }
    }

    /// Deepest depth a source can swap, which fixes how far back a
    /// recursive re-run must start.
    fn source_depth(src: &Source) -> i64 {
        match src {
            Source::Coupled { plan, .. } => plan.mode.depth() as i64,
            Source::DepthSplit { m, .. } => *m,
            _ => 0,
        }
    }

    /// Re-run the recursion over `lo..=anchor` from a zero start and return
    /// the value at `anchor`. With `lo` deeper than every swapped depth plus
    /// the burn-in, coupled values share all untouched innovations exactly.
    fn recursive_rerun(&self, anchor: i64, lo: i64, src: &Source) -> f64 {
        match &self.family {
            Family::Recursion => {
                let mut x = 0.0;
                for i in lo..=anchor {
                    let (a, b) = src.at(anchor, i, anchor - i).pair();
                    x = a * x + b;
                }
                x
            }
            Family::Garch { mu, alpha, beta } => {
                let p = alpha.len();
                let q = beta.len();
                let mut l2_hist = vec![*mu; p.max(1)];
                let mut x2_hist = vec![0.0; q.max(1)];
                let mut x = 0.0;
                for i in lo..=anchor {
                    let mut l2 = *mu;
                    for (ai, a) in alpha.iter().enumerate() {
                        l2 += a * l2_hist[ai];
                    }
                    for (bi, b) in beta.iter().enumerate() {
                        l2 += b * x2_hist[bi];
                    }
                    let eps = src.at(anchor, i, anchor - i).scalar();
                    x = eps * l2.sqrt();
                    if p > 0 {
                        l2_hist.rotate_right(1);
                        l2_hist[0] = l2;
                    }
                    if q > 0 {
                        x2_hist.rotate_right(1);
                        x2_hist[0] = x * x;
                    }
                }
                x
            }
            _ => unreachable!(),
        }
    }

    fn recursive_anchored_value(&self, anchor: i64, src: &Source) -> f64 {
        let lo = anchor - Self::source_depth(src) - self.burn_in() as i64;
        self.recursive_rerun(anchor, lo, src)
    }

    /// Path `X_1..X_n` under an arbitrary source.
    pub(crate) fn path_with_source(&self, n: usize, src: &Source) -> Vec<f64> {
        if self.is_recursive() {
            if src.depth_keyed() {
                (1..=n as i64).map(|k| self.recursive_anchored_value(k, src)).collect()
            } else {
                let lo = 1 - self.burn_in() as i64;
                let all = self.recursive_forward(lo, n as i64, src);
                let skip = (1 - lo) as usize;
                all[skip..].to_vec()
            }
        } else if let Family::Linear {
            kernel: LinearKernel::Geometric { rho },
            post,
        } = &self.family
        {
            if src.depth_keyed() {
                (1..=n as i64).map(|k| self.window_value(k, src)).collect()
            } else {
                // Rolling update Y_k = rho Y_{k-1} + eps_k - rho^W eps_{k-W};
                // counter addressing makes the deep coordinate O(1).
                let w = self.window() as i64;
                let rho_w = rho.powi(w as i32);
                // Seed with the pre-map convolution at k = 0.
                let mut y = 0.0;
                for j in (0..w).rev() {
                    y += rho.powi(j as i32) * src.at(0, -j, j).scalar();
                }
                let mut out = Vec::with_capacity(n);
                for k in 1..=n as i64 {
                    y = rho * y + src.at(k, k, 0).scalar()
                        - rho_w * src.at(k, k - w, w).scalar();
                    out.push(post.apply(y));
                }
                out
            }
        } else {
            (1..=n as i64).map(|k| self.window_value(k, src)).collect()
        }
    }

    /// Stationary path `X_1..X_n`; validates the spec first.
    pub fn simulate(&self, n: usize, seed: Seed64) -> Result<PathSample, SpecError> {
        self.validate()?;
        assert!(n >= 1, "path length must be positive");
        let stream = InnovationStream::new(self.innovation, seed, StreamId::Base);
        let values = self.path_with_source(n, &Source::Plain { stream });
        Ok(PathSample { values, seed, burn_in_used: self.burn_in() })
    }

    /// Base and swapped paths from identical innovations except at the
    /// plan-designated depths: coordinate `k` of the swapped path realizes
    /// the coupled filter anchored at `k`.
    pub fn simulate_coupled(
        &self,
        n: usize,
        plan: SwapPlan,
        seed: Seed64,
        seed_primed: Seed64,
    ) -> Result<CoupledPathPair, SpecError> {
        self.validate()?;
        let depth = plan.mode.depth();
        if matches!(plan.mode, SwapMode::Single(_)) && depth > self.window() {
            return Err(SpecError::PlanDepthExceedsWindow { depth, window: self.window() });
        }
        let base = InnovationStream::new(self.innovation, seed, StreamId::Base);
        let primed = InnovationStream::new(self.innovation, seed_primed, plan.target);
        check_coupling(&base, &primed)?;
        let base_src = Source::Coupled { base, primed, plan: SwapPlan::none() };
        let swap_src = Source::Coupled { base, primed, plan };
        let (base_values, swapped_values) = if self.is_recursive() {
            // Re-run both sides per anchor from a shared start so the pair
            // differs exactly through the plan-designated innovations.
            let reach = plan.mode.depth() as i64 + self.burn_in() as i64;
            let mut bs = Vec::with_capacity(n);
            let mut ss = Vec::with_capacity(n);
            for k in 1..=n as i64 {
                bs.push(self.recursive_rerun(k, k - reach, &base_src));
                ss.push(self.recursive_rerun(k, k - reach, &swap_src));
            }
            (bs, ss)
        } else {
            (self.path_with_source(n, &base_src), self.path_with_source(n, &swap_src))
        };
        Ok(CoupledPathPair {
            base: PathSample { values: base_values, seed, burn_in_used: self.burn_in() },
            swapped: PathSample {
                values: swapped_values,
                seed: seed_primed,
                burn_in_used: self.burn_in(),
            },
            plan,
        })
    }

    /// The coupled pair evaluated at a single coordinate `k` (the
    /// stationary dependence diagnostics only need one anchor).
    pub fn coupled_value_at(
        &self,
        k: i64,
        plan: SwapPlan,
        seed: Seed64,
        seed_primed: Seed64,
    ) -> Result<(f64, f64), SpecError> {
        let base = InnovationStream::new(self.innovation, seed, StreamId::Base);
        let primed = InnovationStream::new(self.innovation, seed_primed, plan.target);
        check_coupling(&base, &primed)?;
        let base_src = Source::Coupled { base, primed, plan: SwapPlan::none() };
        let swap_src = Source::Coupled { base, primed, plan };
        if self.is_recursive() {
            let lo = k - plan.mode.depth() as i64 - self.burn_in() as i64;
            Ok((
                self.recursive_rerun(k, lo, &base_src),
                self.recursive_rerun(k, lo, &swap_src),
            ))
        } else {
            Ok((self.window_value(k, &base_src), self.window_value(k, &swap_src)))
        }
    }

    /// Compare `||X||_2` estimates from two disjoint burn-in lengths; abort
    /// when they disagree by more than 5 combined standard errors (guards
    /// the contraction margins at extreme parameters).
    pub fn burn_in_check(&self, seed: Seed64, reps: usize) -> Result<(), SpecError> {
        if !self.is_recursive() {
            return Ok(());
        }
        let short = self.burn_in();
        let long = 2 * short;
        let mut sq_short = Vec::with_capacity(reps);
        let mut sq_long = Vec::with_capacity(reps);
        for r in 0..reps {
            let stream =
                InnovationStream::new(self.innovation, seed.derive(r as u64), StreamId::Base);
            let src = Source::Plain { stream };
            let a = self.recursive_forward(1 - short as i64, 1, &src);
            let b = self.recursive_forward(1 - long as i64, 1, &src);
            sq_short.push(a.last().unwrap().powi(2));
            sq_long.push(b.last().unwrap().powi(2));
        }
        let (m_s, se_s) = crate::stats::mean_with_se(&sq_short);
        let (m_l, se_l) = crate::stats::mean_with_se(&sq_long);
        let se = (se_s * se_s + se_l * se_l).sqrt();
        let diff = (m_s - m_l).abs();
        if diff > 5.0 * se {
            return Err(SpecError::BurnInUnstable { short, long, diff, se });
        }
        Ok(())
    }
}

/// Smallest `W` with `ratio^W <= tol`.
fn geometric_window(ratio: f64, tol: f64) -> u64 {
    if ratio <= 0.0 {
        return 1;
    }
    (tol.ln() / ratio.ln()).ceil().max(1.0) as u64
}

/// Sum over `start <= j_1 < ... < j_order <= max lag` of
/// `rho^{j_1+...+j_order} * eps_{k-j_1} ... eps_{k-j_order}`.
fn volterra_order_sum(eps: &[f64], order: usize, start: usize, rho: f64, acc: f64) -> f64 {
    if order == 0 {
        return acc;
    }
    let mut total = 0.0;
    // Need `order` indices out of start..len.
    for j in start..=eps.len() - order {
        total +=
            volterra_order_sum(eps, order - 1, j + 1, rho, acc * rho.powi(j as i32) * eps[j]);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    const P: f64 = 3.0;

    fn unit_uniform() -> ScalarDistribution {
        // variance-1 centered uniform
        let half = 3.0f64.sqrt();
        ScalarDistribution::Uniform { a: -half, b: half }
    }

    #[test]
    fn degenerate_kernel_reproduces_innovations() {
        let spec = ProcessSpec::iid(ScalarDistribution::StandardNormal, P);
        let seed = Seed64(1);
        let path = spec.simulate(100, seed).unwrap();
        let stream = InnovationStream::new(spec.innovation, seed, StreamId::Base);
        for (k, x) in path.values.iter().enumerate() {
            assert_eq!(*x, draw(&stream, k as i64 + 1).scalar());
        }
    }

    #[test]
    fn garch_with_zero_coefficients_is_scaled_noise() {
        let mu = 2.0;
        let spec = ProcessSpec::new(
            Family::Garch { mu, alpha: vec![0.0], beta: vec![0.0] },
            DistributionSpec::Scalar(ScalarDistribution::StandardNormal),
            P,
        );
        let seed = Seed64(5);
        let path = spec.simulate(50, seed).unwrap();
        let stream = InnovationStream::new(spec.innovation, seed, StreamId::Base);
        for (k, x) in path.values.iter().enumerate() {
            let eps = draw(&stream, k as i64 + 1).scalar();
            assert_eq!(*x, eps * mu.sqrt());
        }
    }

    #[test]
    fn recursion_with_zero_slope_collapses_to_offsets() {
        let spec = ProcessSpec::recursion(
            ScalarDistribution::Degenerate { c: 0.0 },
            unit_uniform(),
            true,
            P,
        );
        let seed = Seed64(9);
        let path = spec.simulate(50, seed).unwrap();
        let stream = InnovationStream::new(spec.innovation, seed, StreamId::Base);
        for (k, x) in path.values.iter().enumerate() {
            let (_, b) = draw(&stream, k as i64 + 1).pair();
            assert_eq!(*x, b);
        }
    }

    #[test]
    fn iid_single_swap_leaves_path_bitwise_equal() {
        let spec = ProcessSpec::iid(unit_uniform(), P);
        let pair = spec
            .simulate_coupled(64, SwapPlan::single(1), Seed64(3), Seed64(3))
            .unwrap();
        assert_eq!(pair.base.values, pair.swapped.values);
    }

    #[test]
    fn geometric_swap_difference_is_exact() {
        // identity linear kernel: X_k - X_k^{(l,')} = rho^l (eps_{k-l} - eps'_{k-l})
        let rho = 0.6;
        let spec = ProcessSpec::linear_geometric(rho, ScalarDistribution::StandardNormal, P);
        let plan = SwapPlan::single(4);
        let (seed, seed_p) = (Seed64(11), Seed64(12));
        let pair = spec.simulate_coupled(32, plan, seed, seed_p).unwrap();
        let base = InnovationStream::new(spec.innovation, seed, StreamId::Base);
        let primed = InnovationStream::new(spec.innovation, seed_p, StreamId::Primed);
        for k in 1..=32i64 {
            let got = pair.base.values[k as usize - 1] - pair.swapped.values[k as usize - 1];
            let want = rho.powi(4)
                * (draw(&base, k - 4).scalar() - draw(&primed, k - 4).scalar());
            assert!((got - want).abs() < 1e-12, "k={k}: {got} vs {want}");
        }
    }

    #[test]
    fn tail_swap_from_zero_decouples_paths() {
        let spec = ProcessSpec::linear_geometric(0.5, unit_uniform(), P);
        let reps = 10_000usize;
        let mut base_first = Vec::with_capacity(reps);
        let mut swap_first = Vec::with_capacity(reps);
        for r in 0..reps {
            let seed = Seed64(77).derive(r as u64);
            let pair = spec.simulate_coupled(1, SwapPlan::tail_from(0), seed, seed).unwrap();
            base_first.push(pair.base.values[0]);
            swap_first.push(pair.swapped.values[0]);
        }
        let rho = stats::correlation(&base_first, &swap_first);
        assert!(rho.abs() < 4.0 / (reps as f64).sqrt(), "correlation {rho}");
    }

    #[test]
    fn swap_beyond_kernel_support_is_inert() {
        let spec = ProcessSpec::ma1(0.5, unit_uniform(), P);
        let pair = spec
            .simulate_coupled(40, SwapPlan::single(2), Seed64(4), Seed64(4))
            .unwrap();
        assert_eq!(pair.base.values, pair.swapped.values);
    }

    #[test]
    fn ma1_analytic_autocovariance() {
        let spec = ProcessSpec::ma1(0.5, unit_uniform(), P);
        assert!((spec.analytic_autocovariance(0).unwrap() - 1.25).abs() < 1e-14);
        assert!((spec.analytic_autocovariance(1).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(spec.analytic_autocovariance(2).unwrap(), 0.0);
    }

    #[test]
    fn geometric_autocovariance_closed_form() {
        // gamma(k) = rho^k / (1 - rho^2) for unit-variance innovations.
        let spec = ProcessSpec::linear_geometric(0.5, ScalarDistribution::StandardNormal, P);
        for k in 0..4u32 {
            let got = spec.analytic_autocovariance(k).unwrap();
            let want = 0.5f64.powi(k as i32) / 0.75;
            assert!((got - want).abs() < 1e-8, "lag {k}: {got} vs {want}");
        }
    }

    #[test]
    fn recursion_autocovariance_closed_form() {
        let spec = ProcessSpec::recursion(
            ScalarDistribution::Degenerate { c: 0.5 },
            ScalarDistribution::Uniform { a: -1.0, b: 1.0 },
            true,
            P,
        );
        let gamma0 = (1.0 / 3.0) / (1.0 - 0.25);
        assert!((spec.analytic_autocovariance(0).unwrap() - gamma0).abs() < 1e-14);
        assert!((spec.analytic_autocovariance(3).unwrap() - gamma0 * 0.125).abs() < 1e-14);
    }

    #[test]
    fn rolling_geometric_path_matches_window_sum() {
        let spec = ProcessSpec::linear_geometric(0.5, ScalarDistribution::StandardNormal, P);
        let seed = Seed64(21);
        let path = spec.simulate(200, seed).unwrap();
        let stream = InnovationStream::new(spec.innovation, seed, StreamId::Base);
        let src = Source::Plain { stream };
        for k in [1i64, 7, 100, 200] {
            let direct = spec.window_value(k, &src);
            let rolled = path.values[k as usize - 1];
            assert!(
                (direct - rolled).abs() < 1e-10,
                "k={k}: direct {direct} vs rolled {rolled}"
            );
        }
    }

    #[test]
    fn stationarity_surrogate_mean_and_variance() {
        // first and middle coordinates agree in first two moments across
        // replications, within 4 combined standard errors
        let specs = vec![
            ProcessSpec::linear_geometric(0.5, unit_uniform(), P),
            ProcessSpec::recursion(
                ScalarDistribution::Degenerate { c: 0.5 },
                ScalarDistribution::Uniform { a: -1.0, b: 1.0 },
                true,
                P,
            ),
            ProcessSpec::dyadic(DyadicMap::Cosine, 53, P),
            ProcessSpec::new(
                Family::Garch { mu: 1.0, alpha: vec![0.2], beta: vec![0.2] },
                DistributionSpec::Scalar(ScalarDistribution::StandardNormal),
                P,
            ),
            ProcessSpec::new(
                Family::MdepBlock { inner_width: 3, inner: InnerMap::Sum },
                DistributionSpec::Scalar(unit_uniform()),
                P,
            ),
            ProcessSpec::new(
                Family::Volterra {
                    max_order: 2,
                    max_lag: 8,
                    rho: 0.5,
                    order_weights: vec![1.0, 0.5],
                },
                DistributionSpec::Scalar(ScalarDistribution::StandardNormal),
                P,
            ),
        ];
        let n = 32;
        let reps = 10_000;
        for spec in specs {
            let mut first = Vec::with_capacity(reps);
            let mut mid = Vec::with_capacity(reps);
            for r in 0..reps {
                let path = spec.simulate(n, Seed64(1000).derive(r as u64)).unwrap();
                first.push(path.values[0]);
                mid.push(path.values[n / 2]);
            }
            let (m1, se1) = stats::mean_with_se(&first);
            let (m2, se2) = stats::mean_with_se(&mid);
            let se = (se1 * se1 + se2 * se2).sqrt();
            assert!((m1 - m2).abs() <= 4.0 * se, "{:?}: means {m1} vs {m2}", spec.family);
            let sq1: Vec<f64> = first.iter().map(|x| x * x).collect();
            let sq2: Vec<f64> = mid.iter().map(|x| x * x).collect();
            let (v1, sev1) = stats::mean_with_se(&sq1);
            let (v2, sev2) = stats::mean_with_se(&sq2);
            let sev = (sev1 * sev1 + sev2 * sev2).sqrt();
            assert!((v1 - v2).abs() <= 4.0 * sev, "{:?}: variances {v1} vs {v2}", spec.family);
        }
    }

    #[test]
    fn coupling_locality_across_anchors() {
        // ||X_k - X_k^{(l,')}|| does not depend on k
        let spec = ProcessSpec::linear_geometric(0.5, ScalarDistribution::StandardNormal, P);
        let l = 3u32;
        let reps = 20_000;
        let mut d_at = |k: i64| -> (f64, f64) {
            let mut diffs = Vec::with_capacity(reps);
            for r in 0..reps {
                let seed = Seed64(500).derive(r as u64);
                let (b, s) = spec.coupled_value_at(k, SwapPlan::single(l), seed, seed).unwrap();
                diffs.push((b - s).powi(2));
            }
            stats::mean_with_se(&diffs)
        };
        let (m1, se1) = d_at(1);
        let (m2, se2) = d_at(37);
        let se = (se1 * se1 + se2 * se2).sqrt();
        assert!((m1 - m2).abs() <= 4.0 * se, "{m1} vs {m2} (se {se})");
    }

    #[test]
    fn doubling_window_is_within_truncation_tolerance() {
        let mut spec = ProcessSpec::linear_geometric(0.5, unit_uniform(), P);
        let w = spec.window();
        let path_a = spec.simulate(16, Seed64(8)).unwrap();
        spec.window_override = Some(2 * w);
        let path_b = spec.simulate(16, Seed64(8)).unwrap();
        for (a, b) in path_a.values.iter().zip(&path_b.values) {
            assert!((a - b).abs() < 1e-6, "truncation shift {a} vs {b}");
        }
    }

    #[test]
    fn dyadic_paths_invariant_beyond_53_bits() {
        for map in [DyadicMap::Cosine, DyadicMap::CenteredIndicator] {
            let spec_a = ProcessSpec::dyadic(map, 53, P);
            let spec_b = ProcessSpec::dyadic(map, 64, P);
            let pa = spec_a.simulate(64, Seed64(13)).unwrap();
            let pb = spec_b.simulate(64, Seed64(13)).unwrap();
            for (a, b) in pa.values.iter().zip(&pb.values) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn validation_rejects_unstable_specs() {
        let garch = ProcessSpec::new(
            Family::Garch { mu: 1.0, alpha: vec![0.7], beta: vec![0.5] },
            DistributionSpec::Scalar(ScalarDistribution::StandardNormal),
            P,
        );
        assert!(matches!(garch.validate(), Err(SpecError::GarchNotStationary { .. })));

        let recursion = ProcessSpec::recursion(
            ScalarDistribution::Degenerate { c: 1.0 },
            unit_uniform(),
            true,
            P,
        );
        assert!(matches!(recursion.validate(), Err(SpecError::ContractionViolated { .. })));

        let off_center = ProcessSpec::iid(ScalarDistribution::Bernoulli { q: 0.3 }, P);
        assert!(matches!(
            off_center.validate(),
            Err(SpecError::InnovationNotCentered { .. })
        ));

        let low_p = ProcessSpec::iid(unit_uniform(), 2.0);
        assert!(matches!(low_p.validate(), Err(SpecError::MomentOrderTooLow { .. })));
    }

    #[test]
    fn simulation_is_bitwise_reproducible() {
        let spec = ProcessSpec::new(
            Family::Garch { mu: 1.0, alpha: vec![0.1, 0.1], beta: vec![0.2] },
            DistributionSpec::Scalar(ScalarDistribution::StandardNormal),
            P,
        );
        let a = spec.simulate(128, Seed64(42)).unwrap();
        let b = spec.simulate(128, Seed64(42)).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn burn_in_check_accepts_moderate_contraction() {
        let spec = ProcessSpec::recursion(
            ScalarDistribution::Uniform { a: 0.2, b: 0.8 },
            unit_uniform(),
            true,
            P,
        );
        spec.burn_in_check(Seed64(3), 2000).unwrap();
    }
}
