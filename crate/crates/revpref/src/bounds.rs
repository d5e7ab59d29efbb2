//! Pairwise ratio-bound constraint system.
//!
//! Maintains lower and upper bounds `L[i][j] <= y_i / y_j <= U[i][j]` over N
//! positive unknowns, answers implication queries ("do the stored bounds
//! force y_i / y_j >= c?"), and extracts a concrete positive vector
//! satisfying every bound.
//!
//! Queries run against a transitive closure computed in log space: the
//! tightest derivable lower bound on `y_i / y_j` is the largest product of
//! stored lower bounds along a path from `i` to `j` (upper bounds
//! participate through their stored reciprocals). The closure is an
//! all-pairs shortest-path pass, recomputed lazily after updates. A cycle
//! whose product exceeds 1 certifies that no positive vector satisfies the
//! bounds.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for implication queries and inconsistency detection.
/// Absorbs accumulation error along N-length chains in log space.
pub const RATIO_RTOL: f64 = 1e-9;

/// N x N lower/upper bounds on pairwise ratios of positive unknowns.
///
/// Invariants: `L[i][i] = U[i][i] = 1`; reciprocal coherence
/// `U[j][i] = 1 / L[i][j]` is re-established on every update; fresh bounds
/// are vacuous (`L = 0`, `U = inf`).
#[derive(Debug, Serialize, Deserialize)]
#[serde(into = "MatrixRepr", try_from = "MatrixRepr")]
pub struct RatioBoundMatrix {
    n: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    #[serde(skip)]
    closure: OnceLock<Result<Vec<f64>>>,
}

impl Clone for RatioBoundMatrix {
    fn clone(&self) -> Self {
        Self {
            n: self.n,
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            closure: OnceLock::new(),
        }
    }
}

impl PartialEq for RatioBoundMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.lower == other.lower && self.upper == other.upper
    }
}

impl RatioBoundMatrix {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("need at least one entity".into()));
        }
        let mut m = Self {
            n,
            lower: vec![0.0; n * n],
            upper: vec![f64::INFINITY; n * n],
            closure: OnceLock::new(),
        };
        for i in 0..n {
            m.lower[i * n + i] = 1.0;
            m.upper[i * n + i] = 1.0;
        }
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn lower_bound(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.n + j]
    }

    pub fn upper_bound(&self, i: usize, j: usize) -> f64 {
        self.upper[i * self.n + j]
    }

    fn check_update(&self, i: usize, j: usize, c: f64) -> Result<()> {
        if i >= self.n || j >= self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: i.max(j) + 1 });
        }
        if i == j {
            return Err(Error::InvalidParameter("cannot bound a self-ratio".into()));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "ratio bounds must be positive and finite, got {c}"
            )));
        }
        Ok(())
    }

    /// Record `y_i / y_j >= c` (max semantics). Returns whether any stored
    /// entry changed.
    pub fn tighten_lower(&mut self, i: usize, j: usize, c: f64) -> Result<bool> {
        self.check_update(i, j, c)?;
        let n = self.n;
        if c <= self.lower[i * n + j] {
            return Ok(false);
        }
        self.lower[i * n + j] = c;
        self.upper[j * n + i] = 1.0 / c;
        self.closure = OnceLock::new();
        Ok(true)
    }

    /// Record `y_i / y_j <= c` (min semantics). Returns whether any stored
    /// entry changed.
    pub fn tighten_upper(&mut self, i: usize, j: usize, c: f64) -> Result<bool> {
        self.check_update(i, j, c)?;
        let n = self.n;
        if c >= self.upper[i * n + j] {
            return Ok(false);
        }
        self.upper[i * n + j] = c;
        self.lower[j * n + i] = 1.0 / c;
        self.closure = OnceLock::new();
        Ok(true)
    }

    /// For each consecutive pair `(e, e')` in each sequence, record
    /// `y_{e'} <= y_e`.
    pub fn add_monotonicity_chain(&mut self, groups: &[Vec<usize>]) -> Result<()> {
        for group in groups {
            for pair in group.windows(2) {
                self.tighten_upper(pair[1], pair[0], 1.0)?;
            }
        }
        Ok(())
    }

    fn closed(&self) -> Result<&[f64]> {
        match self.closure.get_or_init(|| transitive_closure(self.n, &self.lower)) {
            Ok(c) => Ok(c.as_slice()),
            Err(e) => Err(e.clone()),
        }
    }

    /// True iff every positive vector satisfying the stored bounds has
    /// `y_i / y_j >= c`, up to relative tolerance [`RATIO_RTOL`].
    pub fn implies_geq(&self, i: usize, j: usize, c: f64) -> Result<bool> {
        if i >= self.n || j >= self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: i.max(j) + 1 });
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "implication threshold must be positive and finite, got {c}"
            )));
        }
        let closed = self.closed()?;
        Ok(closed[i * self.n + j] >= c * (1.0 - RATIO_RTOL))
    }

    /// A positive vector `y` with `L[i][j] <= y_i / y_j <= U[i][j]` for all
    /// pairs, scaled so that `max_i y_i = 1`.
    pub fn consistent_vector(&self) -> Result<Vec<f64>> {
        let closed = self.closed()?;
        let n = self.n;
        // Row maxima of the closed lower-bound matrix satisfy every bound:
        // for the k attaining y_j, closure transitivity gives
        // C[i][k] >= C[i][j] * C[j][k], i.e. y_i >= L[i][j] * y_j.
        let mut y: Vec<f64> = (0..n)
            .map(|i| closed[i * n..(i + 1) * n].iter().cloned().fold(0.0, f64::max))
            .collect();
        let m = y.iter().cloned().fold(0.0, f64::max);
        for v in &mut y {
            *v /= m;
        }
        Ok(y)
    }

    /// Check a candidate vector against every stored bound at relative
    /// tolerance `rtol`.
    pub fn is_feasible(&self, y: &[f64], rtol: f64) -> bool {
        if y.len() != self.n || y.iter().any(|v| !(*v > 0.0)) {
            return false;
        }
        for i in 0..self.n {
            for j in 0..self.n {
                let r = y[i] / y[j];
                if r < self.lower[i * self.n + j] * (1.0 - rtol) {
                    return false;
                }
                let u = self.upper[i * self.n + j];
                if u.is_finite() && r > u * (1.0 + rtol) {
                    return false;
                }
            }
        }
        true
    }
}

/// Max-product all-pairs closure of a lower-bound matrix. Fails with
/// [`Error::Inconsistent`] when some cycle multiplies above 1.
fn transitive_closure(n: usize, lower: &[f64]) -> Result<Vec<f64>> {
    let mut c = lower.to_vec();
    for k in 0..n {
        for i in 0..n {
            let cik = c[i * n + k];
            if cik == 0.0 {
                continue;
            }
            for j in 0..n {
                let cand = cik * c[k * n + j];
                if cand > c[i * n + j] {
                    c[i * n + j] = cand;
                }
            }
        }
    }
    for i in 0..n {
        let diag = c[i * n + i];
        if diag > 1.0 + RATIO_RTOL {
            return Err(Error::Inconsistent);
        }
        // reciprocal pairs multiply to 1 +- ulp; pin the diagonal
        c[i * n + i] = 1.0;
    }
    Ok(c)
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    n: usize,
    lower: Vec<Vec<f64>>,
    upper: Vec<Vec<Option<f64>>>,
}

impl From<RatioBoundMatrix> for MatrixRepr {
    fn from(m: RatioBoundMatrix) -> Self {
        let n = m.n;
        let lower = (0..n).map(|i| m.lower[i * n..(i + 1) * n].to_vec()).collect();
        let upper = (0..n)
            .map(|i| {
                m.upper[i * n..(i + 1) * n]
                    .iter()
                    .map(|&u| if u.is_finite() { Some(u) } else { None })
                    .collect()
            })
            .collect();
        MatrixRepr { n, lower, upper }
    }
}

impl TryFrom<MatrixRepr> for RatioBoundMatrix {
    type Error = Error;

    fn try_from(repr: MatrixRepr) -> Result<Self> {
        let n = repr.n;
        if n == 0 || repr.lower.len() != n || repr.upper.len() != n {
            return Err(Error::ModelFormat("ratio matrix has wrong shape".into()));
        }
        let mut lower = Vec::with_capacity(n * n);
        let mut upper = Vec::with_capacity(n * n);
        for (lrow, urow) in repr.lower.iter().zip(&repr.upper) {
            if lrow.len() != n || urow.len() != n {
                return Err(Error::ModelFormat("ratio matrix has ragged rows".into()));
            }
            lower.extend_from_slice(lrow);
            upper.extend(urow.iter().map(|u| u.unwrap_or(f64::INFINITY)));
        }
        for i in 0..n {
            for j in 0..n {
                let l = lower[i * n + j];
                let u = upper[j * n + i];
                if !(l >= 0.0) || l.is_infinite() {
                    return Err(Error::ModelFormat(format!("bad lower bound {l}")));
                }
                if i == j && (l != 1.0 || upper[i * n + i] != 1.0) {
                    return Err(Error::ModelFormat("diagonal bounds must be 1".into()));
                }
                // reciprocal coherence, allowing round-trip noise
                let coherent = if l == 0.0 {
                    u.is_infinite()
                } else {
                    u.is_finite() && (l * u - 1.0).abs() <= RATIO_RTOL
                };
                if !coherent {
                    return Err(Error::ModelFormat(format!(
                        "bounds at ({i}, {j}) are not reciprocal-coherent"
                    )));
                }
            }
        }
        Ok(Self { n, lower, upper, closure: OnceLock::new() })
    }
}
