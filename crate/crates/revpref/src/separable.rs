//! Learner for linearly separable concave valuations.
//!
//! The derivative of each good's utility is pinned down at the grid points
//! `l / k`, `l = 0..k`, giving `n (k + 1)` unknowns `V(i, l) = v_i'(l / k)`.
//! Observations bound pairwise ratios of these unknowns exactly as in the
//! linear learner; per-good monotonicity chains `V(i, 0) >= ... >= V(i, k)`
//! encode concavity. Two symbolic sentinels extend the grid: `V(i, -1)` is
//! treated as infinite and `V(i, k + 1)` as zero. They are resolved inside
//! the threshold search rather than stored, since infinite and zero values
//! break positive-ratio arithmetic.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::RatioBoundMatrix;
use crate::error::{Error, Result};
use crate::types::{Bundle, Observation, PriceVector};

/// Discretization fine enough to learn within additive error `epsilon`:
/// `max(ceil((2 Q / epsilon) * maxBp), ceil(1 / epsilon))` where `maxBp`
/// caps `B / p_j` over the distribution's support.
pub fn choose_k(q: f64, epsilon: f64, max_budget_price_ratio: f64) -> Result<usize> {
    if !(q >= 0.0) || !q.is_finite() {
        return Err(Error::InvalidParameter(format!("Q must be nonnegative, got {q}")));
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(max_budget_price_ratio > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "budget/price ratio must be positive, got {max_budget_price_ratio}"
        )));
    }
    let from_curvature = (2.0 * q / epsilon * max_budget_price_ratio).ceil() as usize;
    let from_error = (1.0 / epsilon).ceil() as usize;
    Ok(from_curvature.max(from_error).max(1))
}

/// Observations sufficient for the discretized learner:
/// `ceil(C * (n(k+2))^2 * ln((n(k+2))^2 / delta) / delta)`.
pub fn required_samples_separable(n: usize, k: usize, delta: f64, c: f64) -> Result<usize> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidParameter("need n >= 1 and k >= 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidParameter(format!("C must be positive, got {c}")));
    }
    let entities = (n * (k + 2)) as f64;
    let sq = entities * entities;
    Ok((c * sq * (sq / delta).ln() / delta).ceil() as usize)
}

/// Thresholds `l_i in {-1, ..., k}`, one per good.
///
/// When produced by the threshold search these satisfy both classification
/// properties: the learned bounds imply `V(i, l_i) / p_i >= V(j, l_j + 1)
/// / p_j` for every ordered pair, and the budget is sandwiched between the
/// cost of the floor bundle and the cost of the ceiling bundle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdAssignment {
    levels: Vec<i64>,
}

impl ThresholdAssignment {
    pub fn levels(&self) -> &[i64] {
        &self.levels
    }

    /// Fraction bought in the base step: `max(l_i, 0) / k`.
    pub fn floor_fraction(&self, i: usize, k: usize) -> f64 {
        self.levels[i].max(0) as f64 / k as f64
    }

    /// Upper bracket `min(l_i + 1, k) / k`.
    pub fn ceiling_fraction(&self, i: usize, k: usize) -> f64 {
        (self.levels[i] + 1).min(k as i64) as f64 / k as f64
    }
}

/// Ratio bounds over the discretized derivative values of all goods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct DerivativeGrid {
    n: usize,
    k: usize,
    bounds: RatioBoundMatrix,
}

impl DerivativeGrid {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("need at least one good".into()));
        }
        if k == 0 {
            return Err(Error::InvalidParameter("need k >= 1".into()));
        }
        let mut bounds = RatioBoundMatrix::new(n * (k + 1))?;
        let chains: Vec<Vec<usize>> =
            (0..n).map(|i| (0..=k).map(|l| i * (k + 1) + l).collect()).collect();
        bounds.add_monotonicity_chain(&chains)?;
        Ok(Self { n, k, bounds })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn bounds(&self) -> &RatioBoundMatrix {
        &self.bounds
    }

    /// Matrix index of the unknown `V(i, l)`, `l in 0..=k`.
    pub fn node(&self, i: usize, l: usize) -> usize {
        debug_assert!(i < self.n && l <= self.k);
        i * (self.k + 1) + l
    }

    /// Fold one observation into the grid.
    ///
    /// For every ordered pair bought unequally, the floor/ceil grid nodes
    /// bracketing the two quantities receive a lower bound of `p_i / p_j`.
    /// The mirrored upper bound is only sound when both goods are interior
    /// (the optimality conditions degenerate to one-sided inequalities at
    /// the box boundary), so it is gated on `x_i < 1` and `x_j > 0`.
    pub fn absorb(&mut self, obs: &Observation) -> Result<()> {
        if obs.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: obs.n() });
        }
        let k = self.k as f64;
        let x = obs.bundle();
        let p = obs.prices();
        for i in 0..self.n {
            for j in 0..self.n {
                if i == j || x[i] <= x[j] {
                    continue;
                }
                let li = (k * x[i]).floor().clamp(0.0, k) as usize;
                let sj = (k * x[j]).ceil().clamp(0.0, k) as usize;
                self.bounds.tighten_lower(self.node(i, li), self.node(j, sj), p[i] / p[j])?;
                if x[i] < 1.0 && x[j] > 0.0 {
                    let ui = (k * x[i]).ceil().clamp(0.0, k) as usize;
                    let fj = (k * x[j]).floor().clamp(0.0, k) as usize;
                    self.bounds.tighten_upper(self.node(i, ui), self.node(j, fj), p[i] / p[j])?;
                }
            }
        }
        Ok(())
    }

    pub fn train(n: usize, k: usize, observations: &[Observation]) -> Result<Self> {
        let mut grid = Self::new(n, k)?;
        for obs in observations {
            grid.absorb(obs)?;
        }
        Ok(grid)
    }

    /// Can the bounds infer `V(j, t) / p_j >= V(i, s) / p_i`? Sentinel
    /// levels resolve symbolically: `-1` stands for an infinite value and
    /// `k + 1` for zero, on either side.
    fn infer_rate_geq(
        &self,
        j: usize,
        t: i64,
        i: usize,
        s: i64,
        prices: &PriceVector,
    ) -> Result<bool> {
        let k = self.k as i64;
        if t < 0 || s > k {
            // infinite numerator or zero denominator
            return Ok(true);
        }
        if t > k || s < 0 {
            // zero numerator against a positive value, or infinite denominator
            return Ok(false);
        }
        self.bounds.implies_geq(
            self.node(j, t as usize),
            self.node(i, s as usize),
            prices[j] / prices[i],
        )
    }

    /// Search for thresholds satisfying both classification properties.
    ///
    /// Guesses the good `i` whose `V(i, l_i + 1) / p_i` is largest together
    /// with its threshold (n(k+2) options). Each guess fixes, per other
    /// good, the window of levels whose inferred rate brackets the guessed
    /// one; starting from the window bottoms, levels are raised one step at
    /// a time while the floor bundle stays affordable. A candidate is
    /// accepted only if the budget sandwich and the full pairwise
    /// implication property check out.
    pub fn find_thresholds(
        &self,
        prices: &PriceVector,
        budget: f64,
    ) -> Result<Option<ThresholdAssignment>> {
        if prices.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: prices.len() });
        }
        if !(budget >= 0.0) || !budget.is_finite() {
            return Err(Error::InvalidParameter(format!("budget must be nonnegative, got {budget}")));
        }
        let n = self.n;
        let k = self.k as i64;
        let kf = self.k as f64;

        // Nothing is affordable: the all-sentinel assignment is the unique
        // candidate, valid by sentinel inference with a degenerate sandwich.
        if budget <= 1e-12 {
            return Ok(Some(ThresholdAssignment { levels: vec![-1; n] }));
        }

        // The ceiling side of the sandwich can never exceed the cost of the
        // whole supply, so budgets beyond it are equivalent to it.
        let budget = budget.min(prices.total());
        let tol = 1e-9 * budget.max(1.0);

        let mut window_lo = vec![0i64; n];
        let mut window_hi = vec![0i64; n];
        for guess_good in 0..n {
            'guess: for guess_level in -1..=k {
                let s = guess_level + 1;
                for j in 0..n {
                    if j == guess_good {
                        window_lo[j] = guess_level;
                        window_hi[j] = guess_level;
                        continue;
                    }
                    // largest t with V(j, t) / p_j >= V(i, s) / p_i inferable
                    let mut hi = -1i64;
                    for t in 0..=k {
                        if self.infer_rate_geq(j, t, guess_good, s, prices)? {
                            hi = t;
                        } else {
                            break;
                        }
                    }
                    // smallest t with V(i, s) / p_i >= V(j, t + 1) / p_j inferable
                    let mut lo = k;
                    for t in (-1..k).rev() {
                        if self.infer_rate_geq(guess_good, s, j, t + 1, prices)? {
                            lo = t;
                        } else {
                            break;
                        }
                    }
                    if lo > hi {
                        continue 'guess;
                    }
                    window_lo[j] = lo;
                    window_hi[j] = hi;
                }

                let mut levels = window_lo.clone();
                let mut cost: f64 =
                    (0..n).map(|j| prices[j] * levels[j].max(0) as f64 / kf).sum();
                if cost > budget + tol {
                    continue 'guess;
                }
                // raise levels one step at a time while the floor bundle
                // stays affordable
                loop {
                    let mut progressed = false;
                    for j in 0..n {
                        if levels[j] < window_hi[j] {
                            let step = if levels[j] >= 0 { prices[j] / kf } else { 0.0 };
                            if cost + step <= budget + tol {
                                levels[j] += 1;
                                cost += step;
                                progressed = true;
                            }
                        }
                    }
                    if !progressed {
                        break;
                    }
                }

                let ceiling: f64 =
                    (0..n).map(|j| prices[j] * (levels[j] + 1).min(k) as f64 / kf).sum();
                if ceiling < budget - tol {
                    continue 'guess;
                }
                for q in 0..n {
                    for r in 0..n {
                        if q != r && !self.infer_rate_geq(q, levels[q], r, levels[r] + 1, prices)? {
                            continue 'guess;
                        }
                    }
                }
                return Ok(Some(ThresholdAssignment { levels }));
            }
        }
        Ok(None)
    }

    /// Predict a bundle for a fresh example.
    ///
    /// With thresholds in hand: buy the floor fractions, then spend the
    /// leftover buying equal quantities of every good strictly inside its
    /// bracket, capping at quantity 1 and redistributing freed budget until
    /// the leftover is gone or everything is capped. Without thresholds:
    /// a random bundle scaled into the budget.
    pub fn predict_with(
        &self,
        thresholds: Option<&ThresholdAssignment>,
        prices: &PriceVector,
        budget: f64,
        rng: &mut impl Rng,
    ) -> Result<Bundle> {
        if prices.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: prices.len() });
        }
        let n = self.n;
        let k = self.k as i64;

        let Some(assignment) = thresholds else {
            let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=1.0)).collect();
            let cost: f64 = x.iter().zip(prices.iter()).map(|(x, p)| x * p).sum();
            if cost > budget && cost > 0.0 {
                let scale = budget / cost;
                for q in &mut x {
                    *q *= scale;
                }
            }
            return Bundle::new(x);
        };
        if assignment.levels.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: assignment.levels.len() });
        }

        let mut x: Vec<f64> = (0..n).map(|i| assignment.floor_fraction(i, self.k)).collect();
        let mut cost: f64 = x.iter().zip(prices.iter()).map(|(x, p)| x * p).sum();
        if cost > budget {
            // floor bundle unaffordable (thresholds not from our search):
            // truncate proportionally and skip the residual step
            let scale = budget / cost;
            for q in &mut x {
                *q *= scale;
            }
            return Bundle::new(x);
        }

        let mut residual = budget - cost;
        let mut eligible: Vec<usize> =
            (0..n).filter(|&i| assignment.levels[i] >= 0 && assignment.levels[i] < k).collect();
        while residual > 1e-13 * budget.max(1.0) && !eligible.is_empty() {
            let total_price: f64 = eligible.iter().map(|&i| prices[i]).sum();
            let quantity = residual / total_price;
            let mut capped = Vec::new();
            for (slot, &i) in eligible.iter().enumerate() {
                if 1.0 - x[i] <= quantity {
                    capped.push(slot);
                }
            }
            if capped.is_empty() {
                for &i in &eligible {
                    x[i] += quantity;
                }
                break;
            }
            for &slot in capped.iter().rev() {
                let i = eligible.swap_remove(slot);
                residual -= prices[i] * (1.0 - x[i]);
                x[i] = 1.0;
            }
        }
        cost = x.iter().zip(prices.iter()).map(|(x, p)| x * p).sum();
        debug_assert!(cost <= budget + 1e-9, "prediction overspent: {cost} > {budget}");
        Bundle::new(x.into_iter().map(|q| q.clamp(0.0, 1.0)).collect())
    }

    pub fn predict(
        &self,
        prices: &PriceVector,
        budget: f64,
        rng: &mut impl Rng,
    ) -> Result<Bundle> {
        let thresholds = self.find_thresholds(prices, budget)?;
        self.predict_with(thresholds.as_ref(), prices, budget, rng)
    }
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    n: usize,
    k: usize,
    bounds: RatioBoundMatrix,
}

impl From<DerivativeGrid> for GridRepr {
    fn from(g: DerivativeGrid) -> Self {
        GridRepr { n: g.n, k: g.k, bounds: g.bounds }
    }
}

impl TryFrom<GridRepr> for DerivativeGrid {
    type Error = Error;

    fn try_from(repr: GridRepr) -> Result<Self> {
        if repr.n == 0 || repr.k == 0 {
            return Err(Error::ModelFormat("grid needs n >= 1 and k >= 1".into()));
        }
        if repr.bounds.len() != repr.n * (repr.k + 1) {
            return Err(Error::ModelFormat(format!(
                "grid bounds cover {} entities, expected {}",
                repr.bounds.len(),
                repr.n * (repr.k + 1)
            )));
        }
        Ok(Self { n: repr.n, k: repr.k, bounds: repr.bounds })
    }
}
