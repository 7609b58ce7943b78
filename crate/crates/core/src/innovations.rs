//! Deterministic, index-addressable innovation streams.
//!
//! Every value is a pure function of `(seed, stream id, index, lane)`; there
//! is no sequential generator state. Random access by signed index is what
//! makes the coupled-stream constructions exact: swapping the innovation at
//! one depth replaces exactly one coordinate instead of replaying a sequence.
//!
//! Streams with distinct [`StreamId`] are independent copies of the same
//! distribution, which is how the primed and double-primed copies used by the
//! coupling diagnostics are realized.

use thiserror::Error;

use crate::gaussian;

/// SplitMix64 finalizer; the avalanche primitive behind all addressing.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const LANE_SALT: u64 = 0xD134_2543_DE82_EF95;
const STREAM_SALT: u64 = 0xA076_1D64_78BD_642F;

/// Zig-zag bijection from signed to unsigned indices; the shift
/// representation is two-sided, the counter domain is not.
#[inline]
pub fn zigzag(i: i64) -> u64 {
    if i >= 0 {
        (i as u64) << 1
    } else {
        (((-(i + 1)) as u64) << 1) | 1
    }
}

/// 64-bit seed; equal seeds give bit-identical streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed64(pub u64);

impl Seed64 {
    /// Derive an independent sub-seed for a tagged parallel unit of work
    /// (replication index, redraw index, grid position, ...).
    pub fn derive(self, tag: u64) -> Seed64 {
        Seed64(mix64(self.0 ^ mix64(tag ^ GOLDEN)))
    }

    /// Two-level derivation for nested loops.
    pub fn derive2(self, tag_a: u64, tag_b: u64) -> Seed64 {
        self.derive(tag_a).derive(tag_b ^ LANE_SALT)
    }
}

/// Distinguishes the base, primed and double-primed copies of a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamId {
    Base,
    Primed,
    DoublePrimed,
}

impl StreamId {
    fn salt(self) -> u64 {
        match self {
            StreamId::Base => 0,
            StreamId::Primed => 1,
            StreamId::DoublePrimed => 2,
        }
    }
}

/// Scalar innovation laws available to the process families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarDistribution {
    StandardNormal,
    /// Uniform on `(a, b)`.
    Uniform { a: f64, b: f64 },
    /// Uniform on `{-1, +1}`.
    Rademacher,
    /// `{0, 1}`-valued with success probability `q`.
    Bernoulli { q: f64 },
    /// Point mass at `c`; used for deterministic recursion coefficients.
    Degenerate { c: f64 },
}

impl ScalarDistribution {
    pub fn mean(&self) -> f64 {
        match *self {
            ScalarDistribution::StandardNormal | ScalarDistribution::Rademacher => 0.0,
            ScalarDistribution::Uniform { a, b } => 0.5 * (a + b),
            ScalarDistribution::Bernoulli { q } => q,
            ScalarDistribution::Degenerate { c } => c,
        }
    }

    pub fn is_centered(&self) -> bool {
        self.mean() == 0.0
    }

    /// Symmetric about zero (used by post-mapped linear families, whose odd
    /// transforms stay centered only under a symmetric driving law).
    pub fn is_symmetric(&self) -> bool {
        match *self {
            ScalarDistribution::StandardNormal | ScalarDistribution::Rademacher => true,
            ScalarDistribution::Uniform { a, b } => a == -b,
            ScalarDistribution::Bernoulli { .. } => false,
            ScalarDistribution::Degenerate { c } => c == 0.0,
        }
    }

    /// Raw second moment `E[eps^2]`.
    pub fn second_moment(&self) -> f64 {
        match *self {
            ScalarDistribution::StandardNormal | ScalarDistribution::Rademacher => 1.0,
            ScalarDistribution::Uniform { a, b } => (a * a + a * b + b * b) / 3.0,
            ScalarDistribution::Bernoulli { q } => q,
            ScalarDistribution::Degenerate { c } => c * c,
        }
    }

    /// Raw fourth moment `E[eps^4]`.
    pub fn fourth_moment(&self) -> f64 {
        match *self {
            ScalarDistribution::StandardNormal => 3.0,
            ScalarDistribution::Rademacher => 1.0,
            ScalarDistribution::Uniform { a, b } => {
                (a.powi(4) + a.powi(3) * b + a * a * b * b + a * b.powi(3) + b.powi(4)) / 5.0
            }
            ScalarDistribution::Bernoulli { q } => q,
            ScalarDistribution::Degenerate { c } => c.powi(4),
        }
    }

    /// `||eps||_p = E[|eps|^p]^{1/p}`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        assert!(p >= 1.0);
        match *self {
            ScalarDistribution::StandardNormal => gaussian::abs_moment(p).powf(1.0 / p),
            ScalarDistribution::Rademacher => 1.0,
            ScalarDistribution::Bernoulli { q } => q.powf(1.0 / p),
            ScalarDistribution::Degenerate { c } => c.abs(),
            ScalarDistribution::Uniform { a, b } => {
                let span = b - a;
                let m = if a >= 0.0 {
                    (b.powf(p + 1.0) - a.powf(p + 1.0)) / ((p + 1.0) * span)
                } else if b <= 0.0 {
                    ((-a).powf(p + 1.0) - (-b).powf(p + 1.0)) / ((p + 1.0) * span)
                } else {
                    (b.powf(p + 1.0) + (-a).powf(p + 1.0)) / ((p + 1.0) * span)
                };
                m.powf(1.0 / p)
            }
        }
    }

    /// Variance about the mean.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.second_moment() - m * m
    }
}

/// Innovation law: a scalar, or a two-component pair (for stochastic
/// recursions driven by `(a_k, b_k)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionSpec {
    Scalar(ScalarDistribution),
    Pair {
        first: ScalarDistribution,
        second: ScalarDistribution,
        /// Independent components when true; comonotone (driven by one
        /// shared uniform) otherwise.
        independent: bool,
    },
}

impl DistributionSpec {
    /// Largest moment order `p` with a finite `||eps||_p`. Every catalog law
    /// is light-tailed, so this is unbounded; the field exists so consumers
    /// can state their requirement.
    pub fn moment_order_available(&self) -> f64 {
        f64::INFINITY
    }
}

/// A value drawn from a stream: scalar or pair, matching the spec.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Scalar(f64),
    Pair(f64, f64),
}

impl Value {
    /// The scalar payload; panics when called on a pair.
    pub fn scalar(self) -> f64 {
        match self {
            Value::Scalar(x) => x,
            Value::Pair(..) => panic!("expected scalar innovation, found pair"),
        }
    }

    /// The pair payload; panics when called on a scalar.
    pub fn pair(self) -> (f64, f64) {
        match self {
            Value::Pair(a, b) => (a, b),
            Value::Scalar(_) => panic!("expected pair innovation, found scalar"),
        }
    }
}

/// Immutable handle for one innovation stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnovationStream {
    pub dist: DistributionSpec,
    pub seed: Seed64,
    pub id: StreamId,
}

impl InnovationStream {
    pub fn new(dist: DistributionSpec, seed: Seed64, id: StreamId) -> Self {
        InnovationStream { dist, seed, id }
    }

    /// Raw 64 uniform bits at `(index, lane)`.
    #[inline]
    fn bits(&self, index: i64, lane: u64) -> u64 {
        let mut h = mix64(self.seed.0 ^ STREAM_SALT.wrapping_mul(self.id.salt() + 1));
        h = mix64(h ^ zigzag(index).wrapping_mul(GOLDEN));
        mix64(h ^ lane.wrapping_mul(LANE_SALT))
    }

    /// Uniform in the open interval `(0, 1)`; never returns an endpoint, so
    /// logs and quantile transforms stay finite.
    #[inline]
    fn unit(&self, index: i64, lane: u64) -> f64 {
        (((self.bits(index, lane) >> 11) as f64) + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    #[inline]
    fn scalar_at(&self, kind: ScalarDistribution, index: i64, lane: u64) -> f64 {
        match kind {
            ScalarDistribution::StandardNormal => {
                // Box-Muller, cosine branch: fixed two-uniform consumption.
                let u1 = self.unit(index, lane);
                let u2 = self.unit(index, lane + 1);
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            }
            ScalarDistribution::Uniform { a, b } => a + (b - a) * self.unit(index, lane),
            ScalarDistribution::Rademacher => {
                if self.bits(index, lane) >> 63 == 1 {
                    1.0
                } else {
                    -1.0
                }
            }
            ScalarDistribution::Bernoulli { q } => {
                if self.unit(index, lane) < q {
                    1.0
                } else {
                    0.0
                }
            }
            ScalarDistribution::Degenerate { c } => c,
        }
    }

    /// One Bernoulli(1/2) bit per index; the dyadic register rides on the
    /// same counter primitive as everything else.
    #[inline]
    pub fn bit(&self, index: i64) -> u8 {
        (self.bits(index, 0) >> 63) as u8
    }
}

/// Deterministic innovation at an absolute (signed) index.
#[inline]
pub fn draw(stream: &InnovationStream, index: i64) -> Value {
    match stream.dist {
        DistributionSpec::Scalar(kind) => Value::Scalar(stream.scalar_at(kind, index, 0)),
        DistributionSpec::Pair { first, second, independent } => {
            let a = stream.scalar_at(first, index, 0);
            let b = if independent {
                stream.scalar_at(second, index, 4)
            } else {
                stream.scalar_at(second, index, 0)
            };
            Value::Pair(a, b)
        }
    }
}

/// Which depths a coupled draw serves from the primed stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwapMode {
    /// No coordinate swapped; coupled paths coincide with base paths.
    None,
    /// Replace the single innovation at depth `l` (`eps_{k-l}` only).
    Single(u32),
    /// Replace every innovation at depth `l` and deeper.
    TailFrom(u32),
}

impl SwapMode {
    /// Does the plan designate depth `j` as swapped?
    #[inline]
    pub fn swaps_depth(&self, j: i64) -> bool {
        match *self {
            SwapMode::None => false,
            SwapMode::Single(l) => j == l as i64,
            SwapMode::TailFrom(l) => j >= l as i64,
        }
    }

    pub fn depth(&self) -> u32 {
        match *self {
            SwapMode::None => 0,
            SwapMode::Single(l) | SwapMode::TailFrom(l) => l,
        }
    }
}

/// Swap plan: mode plus the stream that supplies the replacements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwapPlan {
    pub mode: SwapMode,
    pub target: StreamId,
}

impl SwapPlan {
    pub fn single(l: u32) -> Self {
        SwapPlan { mode: SwapMode::Single(l), target: StreamId::Primed }
    }

    pub fn tail_from(l: u32) -> Self {
        SwapPlan { mode: SwapMode::TailFrom(l), target: StreamId::Primed }
    }

    pub fn none() -> Self {
        SwapPlan { mode: SwapMode::None, target: StreamId::Primed }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CouplingError {
    #[error("base and primed streams must share the distribution spec")]
    MismatchedDistribution,
    #[error("base and primed streams must have distinct stream ids")]
    SameStreamId,
}

/// Validate a (base, primed) stream pairing for coupled draws.
pub fn check_coupling(
    base: &InnovationStream,
    primed: &InnovationStream,
) -> Result<(), CouplingError> {
    if base.dist != primed.dist {
        return Err(CouplingError::MismatchedDistribution);
    }
    if base.id == primed.id {
        return Err(CouplingError::SameStreamId);
    }
    Ok(())
}

/// The depth-`j` coordinate of the coupled filter at time `k`: the primed
/// draw exactly when the plan designates depth `j`, the base draw otherwise.
#[inline]
pub fn coupled_draw(
    base: &InnovationStream,
    primed: &InnovationStream,
    plan: &SwapPlan,
    k: i64,
    j: i64,
) -> Value {
    if plan.mode.swaps_depth(j) {
        draw(primed, k - j)
    } else {
        draw(base, k - j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    fn normal_stream(seed: u64, id: StreamId) -> InnovationStream {
        InnovationStream::new(
            DistributionSpec::Scalar(ScalarDistribution::StandardNormal),
            Seed64(seed),
            id,
        )
    }

    #[test]
    fn draws_are_pure() {
        let s = normal_stream(7, StreamId::Base);
        for i in [-1000, -1, 0, 7, 123_456_789] {
            assert_eq!(draw(&s, i), draw(&s, i));
        }
    }

    #[test]
    fn zigzag_is_injective_on_window() {
        let mut seen = std::collections::HashSet::new();
        for i in -500..=500 {
            assert!(seen.insert(zigzag(i)));
        }
    }

    #[test]
    fn rademacher_support() {
        let s = InnovationStream::new(
            DistributionSpec::Scalar(ScalarDistribution::Rademacher),
            Seed64(3),
            StreamId::Base,
        );
        for i in -50..50 {
            let v = draw(&s, i).scalar();
            assert!(v == 1.0 || v == -1.0);
        }
    }

    #[test]
    fn normal_stream_law_of_large_numbers() {
        let s = normal_stream(2024, StreamId::Base);
        let r = 1_000_000usize;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for i in 0..r {
            let v = draw(&s, i as i64).scalar();
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / r as f64;
        let var = sumsq / r as f64 - mean * mean;
        assert!(mean.abs() < 4.0 / (r as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "variance {var}");
    }

    #[test]
    fn adjacent_draws_uncorrelated() {
        let s = normal_stream(11, StreamId::Base);
        let pairs = 100_000usize;
        let xs: Vec<f64> = (0..pairs).map(|t| draw(&s, 2 * t as i64).scalar()).collect();
        let ys: Vec<f64> = (0..pairs).map(|t| draw(&s, 2 * t as i64 + 1).scalar()).collect();
        let rho = stats::correlation(&xs, &ys);
        assert!(rho.abs() < 4.0 / (pairs as f64).sqrt(), "correlation {rho}");
    }

    #[test]
    fn streams_with_distinct_ids_uncorrelated() {
        let a = normal_stream(11, StreamId::Base);
        let b = normal_stream(11, StreamId::Primed);
        let n = 100_000usize;
        let xs: Vec<f64> = (0..n).map(|i| draw(&a, i as i64).scalar()).collect();
        let ys: Vec<f64> = (0..n).map(|i| draw(&b, i as i64).scalar()).collect();
        let rho = stats::correlation(&xs, &ys);
        assert!(rho.abs() < 4.0 / (n as f64).sqrt(), "correlation {rho}");
    }

    #[test]
    fn single_swap_serves_primed_exactly_at_depth() {
        let base = normal_stream(5, StreamId::Base);
        let primed = normal_stream(5, StreamId::Primed);
        check_coupling(&base, &primed).unwrap();
        let plan = SwapPlan::single(3);
        let k = 40;
        for j in 0..10 {
            let v = coupled_draw(&base, &primed, &plan, k, j);
            if j == 3 {
                assert_eq!(v, draw(&primed, k - j));
            } else {
                assert_eq!(v, draw(&base, k - j));
            }
        }
    }

    #[test]
    fn noop_plan_is_bitwise_base() {
        let base = normal_stream(5, StreamId::Base);
        let primed = normal_stream(5, StreamId::Primed);
        let plan = SwapPlan::none();
        for k in -20..20 {
            for j in 0..8 {
                assert_eq!(coupled_draw(&base, &primed, &plan, k, j), draw(&base, k - j));
            }
        }
    }

    #[test]
    fn swapped_coordinate_variance_is_two() {
        // eps and eps' independent standard normals: E[(eps - eps')^2] = 2.
        let base = normal_stream(99, StreamId::Base);
        let primed = normal_stream(99, StreamId::Primed);
        let plan = SwapPlan::single(2);
        let r = 100_000usize;
        let mut diffsq = Vec::with_capacity(r);
        for rep in 0..r {
            let k = rep as i64;
            let b = draw(&base, k - 2).scalar();
            let c = coupled_draw(&base, &primed, &plan, k, 2).scalar();
            diffsq.push((b - c) * (b - c));
        }
        let (m, se) = stats::mean_with_se(&diffsq);
        assert!((m - 2.0).abs() < 3.0 * se, "E[(eps-eps')^2] = {m}, se {se}");
    }

    #[test]
    fn mismatched_distributions_rejected() {
        let a = normal_stream(5, StreamId::Base);
        let b = InnovationStream::new(
            DistributionSpec::Scalar(ScalarDistribution::Rademacher),
            Seed64(5),
            StreamId::Primed,
        );
        assert_eq!(check_coupling(&a, &b), Err(CouplingError::MismatchedDistribution));
        assert_eq!(check_coupling(&a, &a), Err(CouplingError::SameStreamId));
    }

    #[test]
    fn pair_components_independent_when_requested() {
        let dist = DistributionSpec::Pair {
            first: ScalarDistribution::Uniform { a: 0.0, b: 1.0 },
            second: ScalarDistribution::Uniform { a: -1.0, b: 1.0 },
            independent: true,
        };
        let s = InnovationStream::new(dist, Seed64(17), StreamId::Base);
        let n = 100_000usize;
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for i in 0..n {
            let (a, b) = draw(&s, i as i64).pair();
            xs.push(a);
            ys.push(b);
        }
        let rho = stats::correlation(&xs, &ys);
        assert!(rho.abs() < 4.0 / (n as f64).sqrt(), "correlation {rho}");
    }

    #[test]
    fn uniform_lp_norm_closed_form() {
        // centered uniform on (-b, b): ||eps||_p = b (1/(p+1))^{1/p}
        let u = ScalarDistribution::Uniform { a: -2.0, b: 2.0 };
        let expect = 2.0 * (1.0f64 / 3.0).powf(0.5);
        assert!((u.lp_norm(2.0) - expect).abs() < 1e-14);
        assert!((u.variance() - 4.0 / 3.0).abs() < 1e-14);
    }
}
