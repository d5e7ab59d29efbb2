//! Domain vocabulary: goods, prices, budgets, bundles, observations,
//! valuations, and the example distribution the harness samples from.
//!
//! All types are immutable values after construction and safe to share
//! across threads. Randomness is always passed in explicitly.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn ensure_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Strictly positive per-unit prices, one per good.
///
/// Zero prices are rejected at construction: every learner divides by
/// individual prices, so the positivity is load-bearing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceVector(Vec<f64>);

impl PriceVector {
    pub fn new(prices: Vec<f64>) -> Result<Self> {
        if prices.is_empty() {
            return Err(Error::InvalidParameter("price vector must be non-empty".into()));
        }
        for &p in &prices {
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "prices must be strictly positive and finite, got {p}"
                )));
            }
        }
        Ok(Self(prices))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl std::ops::Index<usize> for PriceVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A price vector paired with a nonnegative budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    prices: PriceVector,
    budget: f64,
}

impl Example {
    pub fn new(prices: PriceVector, budget: f64) -> Result<Self> {
        if !(budget >= 0.0) || !budget.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "budget must be nonnegative and finite, got {budget}"
            )));
        }
        Ok(Self { prices, budget })
    }

    pub fn prices(&self) -> &PriceVector {
        &self.prices
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn n(&self) -> usize {
        self.prices.len()
    }
}

/// Purchased fraction of each divisible good, entrywise in [0, 1].
///
/// The constructor absorbs floating-point dust: entries within 1e-12 of the
/// interval are clamped onto it, anything further out is an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle(Vec<f64>);

const BUNDLE_DUST: f64 = 1e-12;

impl Bundle {
    pub fn new(quantities: Vec<f64>) -> Result<Self> {
        let mut q = quantities;
        for x in &mut q {
            if !x.is_finite() || *x < -BUNDLE_DUST || *x > 1.0 + BUNDLE_DUST {
                return Err(Error::InvalidParameter(format!(
                    "bundle quantities must lie in [0, 1], got {x}"
                )));
            }
            *x = x.clamp(0.0, 1.0);
        }
        Ok(Self(q))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    /// Total cost `p . x` of the bundle at the given prices.
    pub fn cost(&self, prices: &PriceVector) -> Result<f64> {
        ensure_dim(self.len(), prices.len())?;
        Ok(self.0.iter().zip(prices.iter()).map(|(x, p)| x * p).sum())
    }
}

impl std::ops::Index<usize> for Bundle {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Slack allowed when checking that an observed bundle respects its budget.
pub const BUDGET_SLACK: f64 = 1e-9;

/// An example together with the bundle the agent chose for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    example: Example,
    bundle: Bundle,
}

impl Observation {
    pub fn new(example: Example, bundle: Bundle) -> Result<Self> {
        let cost = bundle.cost(example.prices())?;
        if cost > example.budget() + BUDGET_SLACK {
            return Err(Error::OverBudget { cost, budget: example.budget() });
        }
        Ok(Self { example, bundle })
    }

    pub fn example(&self) -> &Example {
        &self.example
    }

    pub fn prices(&self) -> &PriceVector {
        &self.example.prices
    }

    pub fn budget(&self) -> f64 {
        self.example.budget
    }

    pub fn bundle(&self) -> &Bundle {
        &self.bundle
    }

    pub fn n(&self) -> usize {
        self.example.n()
    }
}

/// Linear utility: marginal value per full unit of each good.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearValuation {
    values: Vec<f64>,
    normalized: bool,
}

impl LinearValuation {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::build(values, false)
    }

    /// As `new`, but additionally requires every entry to be at most 1.
    pub fn new_normalized(values: Vec<f64>) -> Result<Self> {
        Self::build(values, true)
    }

    fn build(values: Vec<f64>, normalized: bool) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("valuation must be non-empty".into()));
        }
        for &v in &values {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "values must be nonnegative and finite, got {v}"
                )));
            }
            if normalized && v > 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "normalized values must be at most 1, got {v}"
                )));
            }
        }
        Ok(Self { values, normalized })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Bundle value `v . x`.
    pub fn value(&self, bundle: &Bundle) -> Result<f64> {
        ensure_dim(self.n(), bundle.len())?;
        Ok(self.values.iter().zip(bundle.iter()).map(|(v, x)| v * x).sum())
    }
}

impl std::ops::Index<usize> for LinearValuation {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// Linearly separable concave utility with per-good quadratics
/// `v_i(x) = a_i x - (b_i / 2) x^2`, so `v_i'(x) = a_i - b_i x`.
///
/// Requiring `a_i >= b_i >= 0` keeps every derivative nonnegative on [0, 1],
/// and the second-derivative magnitude of good `i` is exactly `b_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableConcaveValuation {
    coefficients: Vec<(f64, f64)>,
}

impl SeparableConcaveValuation {
    pub fn new(coefficients: Vec<(f64, f64)>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidParameter("valuation must be non-empty".into()));
        }
        for &(a, b) in &coefficients {
            if !a.is_finite() || !b.is_finite() || !(b >= 0.0) || !(a >= b) {
                return Err(Error::InvalidParameter(format!(
                    "per-good coefficients must satisfy a >= b >= 0, got ({a}, {b})"
                )));
            }
        }
        Ok(Self { coefficients })
    }

    pub fn n(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &[(f64, f64)] {
        &self.coefficients
    }

    /// Marginal value of good `i` at fraction `x`.
    pub fn derivative(&self, i: usize, x: f64) -> f64 {
        let (a, b) = self.coefficients[i];
        a - b * x
    }

    pub fn good_value(&self, i: usize, x: f64) -> f64 {
        let (a, b) = self.coefficients[i];
        a * x - 0.5 * b * x * x
    }

    /// Bundle value: sum of per-good quadratics.
    pub fn value(&self, bundle: &Bundle) -> Result<f64> {
        ensure_dim(self.n(), bundle.len())?;
        Ok((0..self.n()).map(|i| self.good_value(i, bundle[i])).sum())
    }

    /// Uniform bound on second-derivative magnitudes: `max_i b_i`.
    pub fn second_derivative_bound(&self) -> f64 {
        self.coefficients.iter().map(|&(_, b)| b).fold(0.0, f64::max)
    }

    /// Value of the full bundle (1, ..., 1).
    pub fn full_bundle_value(&self) -> f64 {
        self.coefficients.iter().map(|&(a, b)| a - 0.5 * b).sum()
    }

    /// Same preferences, all values scaled by `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidParameter(format!("scale must be positive, got {s}")));
        }
        Self::new(self.coefficients.iter().map(|&(a, b)| (a * s, b * s)).collect())
    }
}

/// Either agent utility class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Valuation {
    Linear(LinearValuation),
    Separable(SeparableConcaveValuation),
}

impl Valuation {
    pub fn n(&self) -> usize {
        match self {
            Valuation::Linear(v) => v.n(),
            Valuation::Separable(v) => v.n(),
        }
    }

    pub fn value(&self, bundle: &Bundle) -> Result<f64> {
        match self {
            Valuation::Linear(v) => v.value(bundle),
            Valuation::Separable(v) => v.value(bundle),
        }
    }
}

/// Coordinatewise-uniform law over examples: each price is uniform in
/// `[p_min, p_max]` and the budget uniform in `[b_min, b_max]`, all
/// independent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleDistribution {
    n: usize,
    p_min: f64,
    p_max: f64,
    b_min: f64,
    b_max: f64,
}

impl ExampleDistribution {
    pub fn new(n: usize, p_min: f64, p_max: f64, b_min: f64, b_max: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("need at least one good".into()));
        }
        if !(p_min > 0.0) || !p_min.is_finite() || !(p_max >= p_min) || !p_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "need 0 < p_min <= p_max, got [{p_min}, {p_max}]"
            )));
        }
        if !(b_min >= 0.0) || !(b_max >= b_min) || !b_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "need 0 <= B_min <= B_max, got [{b_min}, {b_max}]"
            )));
        }
        Ok(Self { n, p_min, p_max, b_min, b_max })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn price_range(&self) -> (f64, f64) {
        (self.p_min, self.p_max)
    }

    pub fn budget_range(&self) -> (f64, f64) {
        (self.b_min, self.b_max)
    }

    /// Largest possible ratio between two prices in the support.
    pub fn price_ratio_cap(&self) -> f64 {
        self.p_max / self.p_min
    }

    /// Largest possible budget-to-price ratio `B / p_j` in the support.
    pub fn max_budget_price_ratio(&self) -> f64 {
        self.b_max / self.p_min
    }

    /// Draw one example. Prices are drawn first (good 0 upward), then the
    /// budget, so a fixed RNG state yields a fixed example.
    pub fn sample(&self, rng: &mut impl Rng) -> Example {
        let prices: Vec<f64> =
            (0..self.n).map(|_| rng.random_range(self.p_min..=self.p_max)).collect();
        let budget = rng.random_range(self.b_min..=self.b_max);
        Example {
            prices: PriceVector(prices),
            budget,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn price_vector_rejects_nonpositive_entries() {
        assert!(PriceVector::new(vec![1.0, 0.0]).is_err());
        assert!(PriceVector::new(vec![-1.0]).is_err());
        assert!(PriceVector::new(vec![]).is_err());
        assert!(PriceVector::new(vec![0.5, 2.0]).is_ok());
    }

    #[test]
    fn bundle_bounds_are_enforced() {
        assert!(Bundle::new(vec![0.0, 1.0, 0.5]).is_ok());
        assert!(Bundle::new(vec![1.1]).is_err());
        assert!(Bundle::new(vec![-0.1]).is_err());
        // dust is clamped onto the interval
        let b = Bundle::new(vec![1.0 + 1e-14, -1e-14]).unwrap();
        assert_eq!(b.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn observation_rejects_overspending() {
        let p = PriceVector::new(vec![1.0, 1.0]).unwrap();
        let ex = Example::new(p, 1.0).unwrap();
        let err = Observation::new(ex.clone(), Bundle::new(vec![1.0, 1.0]).unwrap());
        assert!(matches!(err, Err(Error::OverBudget { .. })));
        assert!(Observation::new(ex, Bundle::new(vec![1.0, 0.0]).unwrap()).is_ok());
    }

    #[test]
    fn point_mass_distribution_samples_its_point() {
        let dist = ExampleDistribution::new(3, 1.0, 1.0, 2.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ex = dist.sample(&mut rng);
        assert_eq!(ex.prices().as_slice(), &[1.0, 1.0, 1.0]);
        assert_eq!(ex.budget(), 2.0);
    }

    #[test]
    fn sampling_is_deterministic_given_seed() {
        let dist = ExampleDistribution::new(2, 0.5, 3.0, 0.0, 5.0).unwrap();
        let a = dist.sample(&mut ChaCha8Rng::seed_from_u64(42));
        let b = dist.sample(&mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(a, b);
    }

    #[test]
    fn samples_stay_in_range_and_have_uniform_mean() {
        let dist = ExampleDistribution::new(2, 1.0, 3.0, 0.5, 1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut sums = [0.0f64; 2];
        let trials = 10_000;
        for _ in 0..trials {
            let ex = dist.sample(&mut rng);
            for i in 0..2 {
                let p = ex.prices()[i];
                assert!((1.0..=3.0).contains(&p));
                sums[i] += p;
            }
            assert!((0.5..=1.5).contains(&ex.budget()));
        }
        // law of large numbers against the uniform mean 2
        for s in sums {
            let mean = s / trials as f64;
            assert!((1.95..=2.05).contains(&mean), "mean {mean} outside [1.95, 2.05]");
        }
    }

    #[test]
    fn linear_value_examples() {
        let v = LinearValuation::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(v.value(&Bundle::zeros(2)).unwrap(), 0.0);
        assert_eq!(v.value(&Bundle::ones(2)).unwrap(), 3.0);

        let v = LinearValuation::new(vec![0.5, 0.25, 0.25]).unwrap();
        let x = Bundle::new(vec![1.0, 0.5, 0.0]).unwrap();
        assert!((v.value(&x).unwrap() - 0.625).abs() < 1e-15);

        assert!(matches!(
            v.value(&Bundle::zeros(2)),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn linear_additivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let n = rng.random_range(1..=5);
            let v = LinearValuation::new((0..n).map(|_| rng.random_range(0.0..1.0)).collect())
                .unwrap();
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.5)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.5)).collect();
            let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
            let vx = v.value(&Bundle::new(x).unwrap()).unwrap();
            let vy = v.value(&Bundle::new(y).unwrap()).unwrap();
            let vs = v.value(&Bundle::new(sum).unwrap()).unwrap();
            assert!((vx + vy - vs).abs() < 1e-12);
        }
    }

    #[test]
    fn separable_value_examples() {
        // all (a, b) = (1, 0): reduces to linear
        let v = SeparableConcaveValuation::new(vec![(1.0, 0.0), (1.0, 0.0)]).unwrap();
        assert_eq!(v.value(&Bundle::ones(2)).unwrap(), 2.0);

        // (a, b) = (2, 2): v(1) = 2 - 1 = 1
        let v = SeparableConcaveValuation::new(vec![(2.0, 2.0)]).unwrap();
        assert!((v.value(&Bundle::ones(1)).unwrap() - 1.0).abs() < 1e-15);

        // zero bundle has zero value for this family
        let v = SeparableConcaveValuation::new(vec![(0.7, 0.3), (1.0, 1.0)]).unwrap();
        assert_eq!(v.value(&Bundle::zeros(2)).unwrap(), 0.0);
    }

    #[test]
    fn separable_with_zero_curvature_matches_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.random_range(1..=4);
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let sep =
                SeparableConcaveValuation::new(a.iter().map(|&a| (a, 0.0)).collect()).unwrap();
            let lin = LinearValuation::new(a).unwrap();
            let x =
                Bundle::new((0..n).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
            assert!((sep.value(&x).unwrap() - lin.value(&x).unwrap()).abs() <= 1e-12);
        }
    }

    #[test]
    fn separable_rejects_bad_coefficients() {
        assert!(SeparableConcaveValuation::new(vec![(0.5, 0.6)]).is_err());
        assert!(SeparableConcaveValuation::new(vec![(1.0, -0.1)]).is_err());
        assert!(SeparableConcaveValuation::new(vec![(1.0, 1.0)]).is_ok());
    }

    #[test]
    fn distribution_derived_constants() {
        let dist = ExampleDistribution::new(4, 0.5, 2.0, 1.0, 3.0).unwrap();
        assert_eq!(dist.price_ratio_cap(), 4.0);
        assert_eq!(dist.max_budget_price_ratio(), 6.0);
        assert!(ExampleDistribution::new(4, 0.0, 2.0, 1.0, 3.0).is_err());
        assert!(ExampleDistribution::new(4, 1.0, 0.5, 1.0, 3.0).is_err());
    }
}
