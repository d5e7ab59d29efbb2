//! Ground-truth rational agent.
//!
//! Computes exact optimal bundles for both valuation classes, packages
//! observations, and implements the accept/reject feedback protocol used by
//! the polytope learner. Everything here is a pure function of its inputs.

use crate::error::{Error, Result};
use crate::types::{
    Bundle, Example, LinearValuation, Observation, PriceVector, SeparableConcaveValuation,
    Valuation, BUDGET_SLACK,
};

fn check_instance(n: usize, prices: &PriceVector, budget: f64) -> Result<()> {
    if prices.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: prices.len() });
    }
    if !(budget >= 0.0) || !budget.is_finite() {
        return Err(Error::InvalidParameter(format!("budget must be nonnegative, got {budget}")));
    }
    Ok(())
}

/// Optimal bundle for a linear utility: the divisible-knapsack greedy.
///
/// Goods are taken in decreasing value-per-price order (ties broken by the
/// lower index), each bought fully until the budget runs out, leaving at
/// most one fractional good. Goods with zero value are never bought. The
/// returned bundle never exceeds the budget.
pub fn solve_linear(v: &LinearValuation, prices: &PriceVector, budget: f64) -> Result<Bundle> {
    check_instance(v.n(), prices, budget)?;
    let n = v.n();
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps the lower index first on exact ratio ties
    order.sort_by(|&i, &j| {
        let ri = v[i] / prices[i];
        let rj = v[j] / prices[j];
        rj.partial_cmp(&ri).expect("ratios are finite")
    });

    let mut x = vec![0.0; n];
    let mut remaining = budget;
    for i in order {
        if v[i] == 0.0 || remaining <= 0.0 {
            continue;
        }
        if prices[i] <= remaining {
            x[i] = 1.0;
            remaining -= prices[i];
        } else {
            x[i] = remaining / prices[i];
            remaining = 0.0;
        }
    }
    Bundle::new(x)
}

/// Threshold bundle: per good, the largest fraction whose marginal value
/// per unit price still clears `tau`.
fn threshold_quantity(v: &SeparableConcaveValuation, i: usize, price: f64, tau: f64) -> f64 {
    let (a, b) = v.coefficients()[i];
    if a == 0.0 {
        // worthless good: stays out of the bundle at any positive threshold
        return 0.0;
    }
    if b == 0.0 {
        // flat marginal value: all or nothing
        return if a >= tau * price { 1.0 } else { 0.0 };
    }
    ((a - tau * price) / b).clamp(0.0, 1.0)
}

fn threshold_bundle(v: &SeparableConcaveValuation, prices: &PriceVector, tau: f64) -> Vec<f64> {
    (0..v.n()).map(|i| threshold_quantity(v, i, prices[i], tau)).collect()
}

fn bundle_cost(x: &[f64], prices: &PriceVector) -> f64 {
    x.iter().zip(prices.iter()).map(|(x, p)| x * p).sum()
}

/// Optimal bundle for a separable concave utility via water-filling.
///
/// Binary-searches the binding threshold `tau* = inf { tau >= 0 : cost of
/// the tau-threshold bundle <= budget }`. Where a flat marginal value makes
/// the threshold cost jump across the budget, the leftover budget is split
/// in equal spend shares among the flat goods sitting exactly at the
/// threshold (capped at quantity 1, redistributing until spent or all
/// capped). For this quadratic family the result is within 1e-9 of optimal.
pub fn solve_separable(
    v: &SeparableConcaveValuation,
    prices: &PriceVector,
    budget: f64,
) -> Result<Bundle> {
    check_instance(v.n(), prices, budget)?;
    let n = v.n();

    if budget == 0.0 {
        return Ok(Bundle::zeros(n));
    }

    // If every good worth buying is affordable at full quantity, buy it.
    let full: Vec<f64> =
        (0..n).map(|i| if v.coefficients()[i].0 > 0.0 { 1.0 } else { 0.0 }).collect();
    if bundle_cost(&full, prices) <= budget {
        return Bundle::new(full);
    }

    // Bracket tau*: at lo = 0 the full bundle is unaffordable, at hi nothing
    // is bought.
    let mut lo = 0.0f64;
    let mut hi = (0..n)
        .map(|i| v.coefficients()[i].0 / prices[i])
        .fold(0.0, f64::max)
        .mul_add(1.0 + 1e-9, 1e-12);
    for _ in 0..200 {
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if bundle_cost(&threshold_bundle(v, prices, mid), prices) <= budget {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    let tau = hi;
    let mut x = threshold_bundle(v, prices, tau);
    let mut residual = budget - bundle_cost(&x, prices);

    // Flat goods whose constant marginal rate sits at the threshold carry
    // the jump; spread the leftover across them in equal spend shares.
    if residual > 1e-13 * budget.max(1.0) {
        let mut at_threshold: Vec<usize> = (0..n)
            .filter(|&i| {
                let (a, b) = v.coefficients()[i];
                b == 0.0 && a > 0.0 && x[i] < 1.0 && a >= lo * prices[i] * (1.0 - 1e-9)
            })
            .collect();
        while residual > 1e-13 * budget.max(1.0) && !at_threshold.is_empty() {
            let share = residual / at_threshold.len() as f64;
            let mut capped = Vec::new();
            for (slot, &i) in at_threshold.iter().enumerate() {
                let capacity = prices[i] * (1.0 - x[i]);
                if capacity <= share {
                    capped.push(slot);
                }
            }
            if capped.is_empty() {
                for &i in &at_threshold {
                    x[i] += share / prices[i];
                }
                break;
            }
            for &slot in capped.iter().rev() {
                let i = at_threshold.swap_remove(slot);
                residual -= prices[i] * (1.0 - x[i]);
                x[i] = 1.0;
            }
        }
    }

    Bundle::new(x.into_iter().map(|q| q.clamp(0.0, 1.0)).collect())
}

impl Valuation {
    /// Exact optimal bundle under this valuation for the given instance.
    pub fn optimal_bundle(&self, prices: &PriceVector, budget: f64) -> Result<Bundle> {
        match self {
            Valuation::Linear(v) => solve_linear(v, prices, budget),
            Valuation::Separable(v) => solve_separable(v, prices, budget),
        }
    }
}

/// Pair an example with the bundle the agent would buy for it.
pub fn make_observation(v: &Valuation, example: &Example) -> Result<Observation> {
    let bundle = v.optimal_bundle(example.prices(), example.budget())?;
    Observation::new(example.clone(), bundle)
}

/// Agent response to a proposed bundle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feedback {
    Accept,
    /// All ordered pairs `(i, j)` whose value-per-price gap clears the
    /// reject margin.
    Reject(Vec<(usize, usize)>),
}

/// Margin used inside reject feedback: `epsilon / (2 n M)` where `M` caps
/// the ratio between any two prices in the distribution's support.
pub fn reject_margin(epsilon: f64, n: usize, price_ratio_cap: f64) -> f64 {
    epsilon / (2.0 * n as f64 * price_ratio_cap)
}

/// Accept/reject protocol of the interactive model.
///
/// Accepts iff the proposed bundle is within `epsilon` of the agent's
/// optimum. Otherwise returns every ordered pair `(i, j)` with
/// `(v_i - e') / p_i > (v_j + e') / p_j` for `e' = epsilon / (2 n M)`;
/// at least one of these pairs is violated by whatever hypothesis produced
/// a budget-exhausting suboptimal proposal.
pub fn feedback(
    v: &LinearValuation,
    prices: &PriceVector,
    budget: f64,
    proposed: &Bundle,
    epsilon: f64,
    price_ratio_cap: f64,
) -> Result<Feedback> {
    check_instance(v.n(), prices, budget)?;
    if proposed.len() != v.n() {
        return Err(Error::DimensionMismatch { expected: v.n(), got: proposed.len() });
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(price_ratio_cap >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "price ratio cap must be at least 1, got {price_ratio_cap}"
        )));
    }
    let cost = proposed.cost(prices)?;
    if cost > budget + BUDGET_SLACK {
        return Err(Error::OverBudget { cost, budget });
    }

    let optimal = solve_linear(v, prices, budget)?;
    if v.value(proposed)? >= v.value(&optimal)? - epsilon {
        return Ok(Feedback::Accept);
    }

    let n = v.n();
    let margin = reject_margin(epsilon, n, price_ratio_cap);
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && (v[i] - margin) / prices[i] > (v[j] + margin) / prices[j] {
                pairs.push((i, j));
            }
        }
    }
    Ok(Feedback::Reject(pairs))
}
