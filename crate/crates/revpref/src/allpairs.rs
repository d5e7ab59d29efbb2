//! All-pairs comparison learner for linear valuations.
//!
//! Training turns each observation into price-ratio bounds on the pairwise
//! value ratios: buying strictly more of good `i` than of good `j` at
//! prices `p` reveals `v_i / v_j >= p_i / p_j`. Prediction picks any
//! valuation consistent with the accumulated bounds and hands it to the
//! knapsack oracle.

use crate::agent::solve_linear;
use crate::bounds::RatioBoundMatrix;
use crate::error::{Error, Result};
use crate::types::{Bundle, LinearValuation, Observation, PriceVector};

/// Observations sufficient to learn within failure probability `delta`:
/// `ceil(C * n^2 * ln(n^2 / delta) / delta)`.
pub fn required_samples(n: usize, delta: f64, c: f64) -> Result<usize> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one good".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidParameter(format!("C must be positive, got {c}")));
    }
    let n2 = (n * n) as f64;
    Ok((c * n2 * (n2 / delta).ln() / delta).ceil() as usize)
}

/// Trained pairwise value-ratio bounds over `n` goods.
#[derive(Debug, Clone, PartialEq)]
pub struct AllPairsModel {
    bounds: RatioBoundMatrix,
}

impl AllPairsModel {
    pub fn new(n: usize) -> Result<Self> {
        Ok(Self { bounds: RatioBoundMatrix::new(n)? })
    }

    pub fn n(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &RatioBoundMatrix {
        &self.bounds
    }

    pub fn from_bounds(bounds: RatioBoundMatrix) -> Self {
        Self { bounds }
    }

    /// Fold one observation into the bounds.
    pub fn absorb(&mut self, obs: &Observation) -> Result<()> {
        let n = self.n();
        if obs.n() != n {
            return Err(Error::DimensionMismatch { expected: n, got: obs.n() });
        }
        let x = obs.bundle();
        let p = obs.prices();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                if x[i] > x[j] {
                    self.bounds.tighten_lower(i, j, p[i] / p[j])?;
                } else if x[j] > x[i] {
                    self.bounds.tighten_upper(i, j, p[i] / p[j])?;
                }
            }
        }
        Ok(())
    }

    pub fn train(n: usize, observations: &[Observation]) -> Result<Self> {
        let mut model = Self::new(n)?;
        for obs in observations {
            model.absorb(obs)?;
        }
        Ok(model)
    }

    /// Any valuation consistent with the learned bounds, max-normalized
    /// into (0, 1]^n. Predictions are invariant to the scale choice.
    pub fn consistent_valuation(&self) -> Result<LinearValuation> {
        LinearValuation::new_normalized(self.bounds.consistent_vector()?)
    }

    /// Predict the bundle a consistent valuation would buy.
    pub fn predict(&self, prices: &PriceVector, budget: f64) -> Result<Bundle> {
        let v = self.consistent_valuation()?;
        solve_linear(&v, prices, budget)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::make_observation;
    use crate::types::{Example, ExampleDistribution, Valuation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn obs(p: &[f64], budget: f64, x: &[f64]) -> Observation {
        Observation::new(
            Example::new(PriceVector::new(p.to_vec()).unwrap(), budget).unwrap(),
            Bundle::new(x.to_vec()).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn required_samples_examples() {
        assert_eq!(required_samples(5, 0.1, 1.0).unwrap(), 1381);
        let one_good = required_samples(1, 0.5, 1.0).unwrap();
        assert!(one_good >= 1 && one_good <= 10);
        let base = required_samples(4, 0.2, 1.0).unwrap();
        let doubled = required_samples(4, 0.2, 2.0).unwrap();
        assert!((doubled as i64 - 2 * base as i64).abs() <= 1);
        assert!(required_samples(5, 0.0, 1.0).is_err());
        assert!(required_samples(5, 1.0, 1.0).is_err());
    }

    #[test]
    fn training_applies_the_update_rule() {
        let mut model = AllPairsModel::new(3).unwrap();
        model.absorb(&obs(&[2.0, 1.0, 4.0], 10.0, &[1.0, 0.3, 0.0])).unwrap();
        let b = model.bounds();
        assert_eq!(b.lower_bound(0, 1), 2.0);
        assert_eq!(b.lower_bound(0, 2), 0.5);
        assert_eq!(b.lower_bound(1, 2), 0.25);
        // reciprocal uppers
        assert_eq!(b.upper_bound(1, 0), 0.5);
        assert_eq!(b.upper_bound(2, 0), 2.0);
        assert_eq!(b.upper_bound(2, 1), 4.0);
    }

    #[test]
    fn equal_quantities_teach_nothing() {
        let mut model = AllPairsModel::new(2).unwrap();
        model.absorb(&obs(&[1.0, 3.0], 10.0, &[1.0, 1.0])).unwrap();
        assert_eq!(model, AllPairsModel::new(2).unwrap());
    }

    #[test]
    fn bounds_converge_from_below_on_a_stream() {
        let truth = LinearValuation::new(vec![3.0, 2.0, 1.0]).unwrap();
        let dist = ExampleDistribution::new(3, 0.5, 2.0, 0.2, 4.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut model = AllPairsModel::new(3).unwrap();
        let mut last = 0.0;
        for _ in 0..500 {
            let ex = dist.sample(&mut rng);
            let o = make_observation(&Valuation::Linear(truth.clone()), &ex).unwrap();
            model.absorb(&o).unwrap();
            let l01 = model.bounds().lower_bound(0, 1);
            assert!(l01 >= last, "lower bounds must be monotone");
            assert!(l01 <= 1.5 + 1e-12, "bound exceeded the true ratio: {l01}");
            last = l01;
        }
        // converges toward the true ratio v_0 / v_1 = 1.5
        assert!(last > 1.3, "bound stayed loose: {last}");
    }

    #[test]
    fn untrained_model_predicts_with_ties_broken_low() {
        let model = AllPairsModel::new(2).unwrap();
        let v = model.consistent_valuation().unwrap();
        assert_eq!(v.values(), &[1.0, 1.0]);
        let x = model
            .predict(&PriceVector::new(vec![1.0, 1.0]).unwrap(), 1.0)
            .unwrap();
        assert_eq!(x.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn strong_bound_forces_the_preference() {
        let mut model = AllPairsModel::new(2).unwrap();
        model.bounds.tighten_lower(0, 1, 5.0).unwrap();
        let x = model
            .predict(&PriceVector::new(vec![1.0, 1.0]).unwrap(), 1.0)
            .unwrap();
        assert_eq!(x.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn inconsistent_observations_surface() {
        let mut model = AllPairsModel::new(2).unwrap();
        // two observations no single linear valuation can produce
        model.absorb(&obs(&[2.0, 1.0], 2.0, &[1.0, 0.0])).unwrap();
        model.absorb(&obs(&[1.0, 3.0], 3.0, &[0.0, 1.0])).unwrap();
        assert_eq!(model.predict(&PriceVector::new(vec![1.0, 1.0]).unwrap(), 1.0), Err(Error::Inconsistent));
    }
}
