//! Variable-block feasible sets: bounds, integrality, linear rows, and
//! nonlinear constraint expressions.
//!
//! A `FeasibleSet` describes one block of variables in isolation. Its
//! nonlinear expressions index the block's own variables through
//! `SVar(j)` regardless of whether the block is later used as the
//! shared block or a player block; the owning context does the
//! mapping. Missing bounds are `-inf`/`+inf` in memory and `null` in
//! JSON.

use crate::error::{Error, Result};
use crate::expr::Expression;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Le,
    Eq,
}

/// `coeffs . v <sense> rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `expr <sense> 0`, with `expr` over the block's own variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearConstraint {
    pub expr: Expression,
    pub sense: Sense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleSet {
    pub n: usize,
    #[serde(with = "bound_vec")]
    pub lower: Vec<f64>,
    #[serde(with = "bound_vec")]
    pub upper: Vec<f64>,
    pub integral: Vec<bool>,
    pub linear: Vec<LinearConstraint>,
    pub nonlinear: Vec<NonlinearConstraint>,
}

impl FeasibleSet {
    /// Unconstrained block of dimension `n`.
    pub fn free(n: usize) -> Self {
        FeasibleSet {
            n,
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
            integral: vec![false; n],
            linear: Vec::new(),
            nonlinear: Vec::new(),
        }
    }

    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        let n = lower.len();
        FeasibleSet {
            n,
            lower,
            upper,
            integral: vec![false; n],
            linear: Vec::new(),
            nonlinear: Vec::new(),
        }
    }

    pub fn integer_box(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        let n = lower.len();
        let mut s = FeasibleSet::boxed(lower, upper);
        s.integral = vec![true; n];
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.len() != self.n
            || self.upper.len() != self.n
            || self.integral.len() != self.n
        {
            return Err(Error::DimensionMismatch(format!(
                "feasible set declares n={} but bounds/integrality have lengths {}/{}/{}",
                self.n,
                self.lower.len(),
                self.upper.len(),
                self.integral.len()
            )));
        }
        for j in 0..self.n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_nan() || u.is_nan() {
                return Err(Error::InvalidModel(format!("NaN bound on variable {j}")));
            }
            if l > u {
                return Err(Error::InvalidModel(format!(
                    "crossed bounds on variable {j}: [{l}, {u}]"
                )));
            }
            if self.integral[j] && !(l.is_finite() && u.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "integral variable {j} must have finite bounds, got [{l}, {u}]"
                )));
            }
        }
        for (r, row) in self.linear.iter().enumerate() {
            if row.coeffs.len() != self.n {
                return Err(Error::DimensionMismatch(format!(
                    "linear row {r} has {} coefficients, set has n={}",
                    row.coeffs.len(),
                    self.n
                )));
            }
            if row.coeffs.iter().any(|c| !c.is_finite()) || !row.rhs.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "non-finite coefficient in linear row {r}"
                )));
            }
        }
        for (r, con) in self.nonlinear.iter().enumerate() {
            con.expr.validate_indices(self.n, &[]).map_err(|e| {
                Error::InvalidModel(format!("nonlinear row {r} of feasible set: {e}"))
            })?;
        }
        Ok(())
    }

    /// Residuals of every violated condition at `v`.
    ///
    /// Bound, integrality, and linear violations are measured against
    /// `tol_linear`; nonlinear ones against `tol_nonlinear`. Residuals
    /// are positive by convention.
    pub fn violations(&self, v: &[f64], tol_linear: f64, tol_nonlinear: f64) -> Vec<SetViolation> {
        let mut out = Vec::new();
        if v.len() != self.n {
            out.push(SetViolation {
                kind: SetViolationKind::Dimension,
                index: 0,
                residual: (v.len() as f64 - self.n as f64).abs(),
            });
            return out;
        }
        for j in 0..self.n {
            if v[j] < self.lower[j] - tol_linear {
                out.push(SetViolation {
                    kind: SetViolationKind::LowerBound,
                    index: j,
                    residual: self.lower[j] - v[j],
                });
            }
            if v[j] > self.upper[j] + tol_linear {
                out.push(SetViolation {
                    kind: SetViolationKind::UpperBound,
                    index: j,
                    residual: v[j] - self.upper[j],
                });
            }
            if self.integral[j] {
                let r = (v[j] - v[j].round()).abs();
                if r > tol_linear {
                    out.push(SetViolation {
                        kind: SetViolationKind::Integrality,
                        index: j,
                        residual: r,
                    });
                }
            }
        }
        for (r, row) in self.linear.iter().enumerate() {
            let lhs: f64 = row.coeffs.iter().zip(v).map(|(c, x)| c * x).sum();
            let resid = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Eq => (lhs - row.rhs).abs(),
            };
            if resid > tol_linear {
                out.push(SetViolation {
                    kind: SetViolationKind::Linear,
                    index: r,
                    residual: resid,
                });
            }
        }
        for (r, con) in self.nonlinear.iter().enumerate() {
            let val = con.expr.eval(&|j| v[j], &|_, _| f64::NAN);
            let resid = match con.sense {
                Sense::Le => val,
                Sense::Eq => val.abs(),
            };
            if resid > tol_nonlinear {
                out.push(SetViolation {
                    kind: SetViolationKind::Nonlinear,
                    index: r,
                    residual: resid,
                });
            }
        }
        out
    }

    pub fn contains(&self, v: &[f64], tol_linear: f64, tol_nonlinear: f64) -> bool {
        self.violations(v, tol_linear, tol_nonlinear).is_empty()
    }

    /// `Some(ranges)` when every variable is integral with finite
    /// bounds; each range is the inclusive integer interval.
    pub fn integer_ranges(&self) -> Option<Vec<(i64, i64)>> {
        if !self.integral.iter().all(|&b| b) {
            return None;
        }
        Some(
            (0..self.n)
                .map(|j| (self.lower[j].ceil() as i64, self.upper[j].floor() as i64))
                .collect(),
        )
    }

    /// Number of lattice points in the bound box (ignoring rows), or
    /// `None` if some variable is continuous.
    pub fn lattice_size(&self) -> Option<u128> {
        let ranges = self.integer_ranges()?;
        let mut total: u128 = 1;
        for (lo, hi) in ranges {
            if hi < lo {
                return Some(0);
            }
            total = total.saturating_mul((hi - lo + 1) as u128);
        }
        Some(total)
    }

    /// Enumerate all feasible lattice points in lexicographic order.
    /// Requires every variable integral; errors past `cap`.
    pub fn integer_points(&self, cap: usize, tol: f64) -> Result<Vec<Vec<f64>>> {
        let ranges = self.integer_ranges().ok_or_else(|| {
            Error::UnsupportedStructure(
                "integer enumeration requires all variables integral".to_string(),
            )
        })?;
        let size = self.lattice_size().unwrap_or(u128::MAX);
        if size > cap as u128 {
            return Err(Error::CapExceeded(format!(
                "lattice has {size} points, cap is {cap}"
            )));
        }
        let mut out = Vec::new();
        if ranges.iter().any(|(lo, hi)| hi < lo) {
            return Ok(out);
        }
        let mut current: Vec<i64> = ranges.iter().map(|(lo, _)| *lo).collect();
        loop {
            let point: Vec<f64> = current.iter().map(|&z| z as f64).collect();
            if self.contains(&point, tol, tol) {
                out.push(point);
            }
            // odometer step
            let mut k = self.n;
            loop {
                if k == 0 {
                    return Ok(out);
                }
                k -= 1;
                if current[k] < ranges[k].1 {
                    current[k] += 1;
                    for r in k + 1..self.n {
                        current[r] = ranges[r].0;
                    }
                    break;
                }
            }
        }
    }

    pub fn is_box_only(&self) -> bool {
        self.linear.is_empty() && self.nonlinear.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetViolationKind {
    Dimension,
    LowerBound,
    UpperBound,
    Integrality,
    Linear,
    Nonlinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetViolation {
    pub kind: SetViolationKind,
    pub index: usize,
    pub residual: f64,
}

/// JSON codec for bound vectors: `null` stands for a missing bound.
mod bound_vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let opts: Vec<Option<f64>> = v.iter().map(|&x| x.is_finite().then_some(x)).collect();
        opts.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let opts: Vec<Option<f64>> = Vec::deserialize(d)?;
        // A bare null carries no sign, so it is resolved at validation
        // time: we decode to -inf here for lower and +inf for upper by
        // sign convention. Since serde gives us no field context, nulls
        // decode to NaN and the owning struct fixes them up.
        Ok(opts.into_iter().map(|o| o.unwrap_or(f64::NAN)).collect())
    }
}

impl FeasibleSet {
    /// Resolve `null` bounds decoded as NaN into the correct infinity.
    /// Called by instance deserialization before validation.
    pub fn resolve_missing_bounds(&mut self) {
        for l in &mut self.lower {
            if l.is_nan() {
                *l = f64::NEG_INFINITY;
            }
        }
        for u in &mut self.upper {
            if u.is_nan() {
                *u = f64::INFINITY;
            }
        }
    }
}
