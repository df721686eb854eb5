//! Game model: players, shared variables, coupling constraints, and
//! the measure that turns per-player optimality gaps into a single
//! disequilibrium number.
//!
//! A game has shared variables `x` constrained to `X`, players
//! `i = 0..m-1` each owning a block `y_i` constrained to `Y_i`, joint
//! coupling constraints `G` over `(x, y)`, and a measure `mu`. A point
//! `(x, y)` jointly feasible for all of that is an equilibrium exactly
//! when every player's objective value matches its optimal value
//! `g_i^*(x)`, i.e. when the disequilibrium
//! `mu(g(x, y) - g^*(x))` is zero.
//!
//! Objectives reference `x` through `SVar(k)` and the player's own
//! block through `PVar(i, j)`; referencing another player's block in
//! an objective is a validation error. Coupling constraints may
//! reference everything.

mod classical;
mod feasible;

pub use classical::{from_classical_gnep, to_classical_gnep, ClassicalGame, ClassicalPlayer};
pub use feasible::{
    FeasibleSet, LinearConstraint, NonlinearConstraint, Sense, SetViolation, SetViolationKind,
};

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::ext::ExtReal;
use serde::{Deserialize, Serialize};

/// Relative slack applied to per-player optimality comparisons:
/// values within `OPT_COMPARE_RTOL * (1 + |g^*|)` of `g^*` count as
/// optimal.
pub const OPT_COMPARE_RTOL: f64 = 1e-7;

/// Absolute feasibility tolerances. Bounds and linear rows are exact
/// arithmetic away from their data, so they get a tight tolerance;
/// nonlinear equality residuals accumulate more noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToleranceConfig {
    pub linear: f64,
    pub nonlinear: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            linear: 1e-8,
            nonlinear: 1e-6,
        }
    }
}

/// Aggregates the vector of per-player optimality gaps. Every variant
/// is nonnegative on nonnegative gaps and vanishes on a nonnegative
/// vector only at zero, so "disequilibrium zero" always means
/// "every player optimal".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuMeasure {
    Sum,
    /// Strictly positive weights, one per player.
    WeightedSum(Vec<f64>),
    Max,
}

impl MuMeasure {
    pub fn validate(&self, num_players: usize) -> Result<()> {
        if let MuMeasure::WeightedSum(w) = self {
            if w.len() != num_players {
                return Err(Error::DimensionMismatch(format!(
                    "weighted_sum has {} weights for {num_players} players",
                    w.len()
                )));
            }
            if w.iter().any(|&wi| !(wi > 0.0) || !wi.is_finite()) {
                return Err(Error::InvalidModel(
                    "weighted_sum weights must be finite and strictly positive".to_string(),
                ));
            }
        }
        Ok(())
    }

    pub fn apply(&self, gaps: &[ExtReal]) -> Result<ExtReal> {
        match self {
            MuMeasure::Sum => {
                let mut acc = ExtReal::Finite(0.0);
                for g in gaps {
                    acc = acc.add(*g).map_err(Error::InvalidModel)?;
                }
                Ok(acc)
            }
            MuMeasure::WeightedSum(w) => {
                let mut acc = ExtReal::Finite(0.0);
                for (g, wi) in gaps.iter().zip(w) {
                    let scaled = match g {
                        ExtReal::Finite(v) => ExtReal::Finite(wi * v),
                        inf => *inf,
                    };
                    acc = acc.add(scaled).map_err(Error::InvalidModel)?;
                }
                Ok(acc)
            }
            MuMeasure::Max => {
                let mut acc = ExtReal::Finite(0.0);
                for g in gaps {
                    if g.cmp_total(acc) == std::cmp::Ordering::Greater {
                        acc = *g;
                    }
                }
                Ok(acc)
            }
        }
    }

    pub fn is_sum(&self) -> bool {
        matches!(self, MuMeasure::Sum)
    }
}

/// Names the routine that solves a player's problem to global
/// optimality at fixed shared variables. Built-ins check their
/// structural preconditions at solve time; `custom` resolves against
/// the registry passed to the solve call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleBinding {
    Enumeration,
    BoxLp,
    FixedCharge,
    MixedBinarySepQp,
    TreeTransmission,
    Custom(String),
}

impl Default for OracleBinding {
    fn default() -> Self {
        OracleBinding::Enumeration
    }
}

/// Extracted price-taking structure of one objective:
/// `g_i = ga(y_i) + sum_k x_k * gb[k](y_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceTakingForm {
    pub ga: Expression,
    pub gb: Vec<Expression>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Player {
    pub id: String,
    /// Dimension of the player's own variable block.
    pub n: usize,
    pub objective: Expression,
    /// Constraints on the player's own block alone.
    pub feasible_set: FeasibleSet,
    /// Constraints coupling the player's block to the shared variables
    /// (local indices: `0..n0` shared, then the player's block). The
    /// model stores these for completeness, but every algorithmic
    /// entry point rejects players that have them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint_feasible: Option<FeasibleSet>,
    #[serde(default)]
    pub oracle: OracleBinding,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_taking_form: Option<PriceTakingForm>,
}

/// One coupling constraint `expr <sense> 0` over `(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalConstraint {
    pub expr: Expression,
    pub sense: Sense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameInstance {
    pub name: String,
    pub n0: usize,
    pub x_set: FeasibleSet,
    pub players: Vec<Player>,
    pub global_constraints: Vec<GlobalConstraint>,
    pub mu: MuMeasure,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    /// Optional shared-variable point used to seed cut pools.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    /// Optional box for dual-variable searches in price-taking games,
    /// as `(lower, upper)` vectors of length `n0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_box: Option<(Vec<f64>, Vec<f64>)>,
}

/// A joint point: shared variables and one block per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamePoint {
    pub x: Vec<f64>,
    pub y: Vec<Vec<f64>>,
}

impl GamePoint {
    pub fn new(x: Vec<f64>, y: Vec<Vec<f64>>) -> Self {
        GamePoint { x, y }
    }
}

/// Where a feasibility violation lives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "scope", content = "player")]
pub enum ViolationScope {
    Shared,
    Player(usize),
    PlayerJoint(usize),
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub scope: ViolationScope,
    pub kind: SetViolationKind,
    pub index: usize,
    pub residual: f64,
}

/// Outcome of a joint feasibility check; empty iff feasible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

impl GameInstance {
    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn player_dims(&self) -> Vec<usize> {
        self.players.iter().map(|p| p.n).collect()
    }

    /// Structural validation; every loaded or constructed instance
    /// goes through this before any algorithm touches it.
    pub fn validate(&self) -> Result<()> {
        if self.x_set.n != self.n0 {
            return Err(Error::DimensionMismatch(format!(
                "x_set has dimension {}, instance declares n0={}",
                self.x_set.n, self.n0
            )));
        }
        self.x_set.validate()?;
        let dims = self.player_dims();
        self.mu.validate(self.players.len())?;
        for (i, p) in self.players.iter().enumerate() {
            if p.feasible_set.n != p.n {
                return Err(Error::DimensionMismatch(format!(
                    "player {i} declares n={} but its feasible set has n={}",
                    p.n, p.feasible_set.n
                )));
            }
            p.feasible_set.validate()?;
            p.objective.validate_indices(self.n0, &dims)?;
            for v in p.objective.variables() {
                if let crate::expr::VarKey::Player(owner, _) = v {
                    if owner != i {
                        return Err(Error::InvalidModel(format!(
                            "objective of player {i} references player {owner}'s variables; \
                             other players' choices enter only through shared variables"
                        )));
                    }
                }
            }
            if let Some(joint) = &p.joint_feasible {
                if joint.n != self.n0 + p.n {
                    return Err(Error::DimensionMismatch(format!(
                        "player {i} joint feasible set has n={}, expected n0+n={}",
                        joint.n,
                        self.n0 + p.n
                    )));
                }
                joint.validate()?;
            }
            if let Some(ptf) = &p.price_taking_form {
                if ptf.gb.len() != self.n0 {
                    return Err(Error::DimensionMismatch(format!(
                        "player {i} price-taking form has {} balance coefficients, n0={}",
                        ptf.gb.len(),
                        self.n0
                    )));
                }
                ptf.ga.validate_indices(self.n0, &dims)?;
                for g in &ptf.gb {
                    g.validate_indices(self.n0, &dims)?;
                }
            }
        }
        for (r, con) in self.global_constraints.iter().enumerate() {
            con.expr
                .validate_indices(self.n0, &dims)
                .map_err(|e| Error::InvalidModel(format!("global constraint {r}: {e}")))?;
        }
        if let Some(x0) = &self.x0 {
            if x0.len() != self.n0 {
                return Err(Error::DimensionMismatch(format!(
                    "x0 has length {}, n0={}",
                    x0.len(),
                    self.n0
                )));
            }
        }
        if let Some((lo, hi)) = &self.price_box {
            if lo.len() != self.n0 || hi.len() != self.n0 {
                return Err(Error::DimensionMismatch(format!(
                    "price box has lengths {}/{}, n0={}",
                    lo.len(),
                    hi.len(),
                    self.n0
                )));
            }
            if lo.iter().zip(hi).any(|(l, h)| l > h) {
                return Err(Error::InvalidModel("crossed price box".to_string()));
            }
        }
        Ok(())
    }

    /// Errors unless every player's feasible set is independent of the
    /// shared variables. Algorithms that rely on the constant-set form
    /// call this up front.
    pub fn require_constant_feasible_sets(&self, context: &str) -> Result<()> {
        for (i, p) in self.players.iter().enumerate() {
            if p.joint_feasible.is_some() {
                return Err(Error::SharedDependentFeasibleSet(i, context.to_string()));
            }
        }
        Ok(())
    }

    pub fn check_point_dims(&self, point: &GamePoint) -> Result<()> {
        if point.x.len() != self.n0 {
            return Err(Error::DimensionMismatch(format!(
                "point has {} shared variables, instance has {}",
                point.x.len(),
                self.n0
            )));
        }
        if point.y.len() != self.players.len() {
            return Err(Error::DimensionMismatch(format!(
                "point has {} player blocks, instance has {}",
                point.y.len(),
                self.players.len()
            )));
        }
        for (i, (block, p)) in point.y.iter().zip(&self.players).enumerate() {
            if block.len() != p.n {
                return Err(Error::DimensionMismatch(format!(
                    "player {i} block has length {}, expected {}",
                    block.len(),
                    p.n
                )));
            }
        }
        Ok(())
    }

    /// `g_i(x, y_i)` at the given joint point.
    pub fn evaluate_player_objective(&self, i: usize, point: &GamePoint) -> Result<f64> {
        if i >= self.players.len() {
            return Err(Error::IndexOutOfRange(format!(
                "player {i} of {}",
                self.players.len()
            )));
        }
        self.check_point_dims(point)?;
        Ok(self.players[i]
            .objective
            .eval(&|k| point.x[k], &|p, j| point.y[p][j]))
    }

    /// Joint feasibility against `X`, every `Y_i`, any stored joint
    /// sets, and `G`, at the given tolerances.
    pub fn check_point_feasible(
        &self,
        point: &GamePoint,
        tol: &ToleranceConfig,
    ) -> Result<FeasibilityReport> {
        self.check_point_dims(point)?;
        let mut violations = Vec::new();
        for v in self.x_set.violations(&point.x, tol.linear, tol.nonlinear) {
            violations.push(Violation {
                scope: ViolationScope::Shared,
                kind: v.kind,
                index: v.index,
                residual: v.residual,
            });
        }
        for (i, p) in self.players.iter().enumerate() {
            for v in p
                .feasible_set
                .violations(&point.y[i], tol.linear, tol.nonlinear)
            {
                violations.push(Violation {
                    scope: ViolationScope::Player(i),
                    kind: v.kind,
                    index: v.index,
                    residual: v.residual,
                });
            }
            if let Some(joint) = &p.joint_feasible {
                let mut xy = point.x.clone();
                xy.extend_from_slice(&point.y[i]);
                for v in joint.violations(&xy, tol.linear, tol.nonlinear) {
                    violations.push(Violation {
                        scope: ViolationScope::PlayerJoint(i),
                        kind: v.kind,
                        index: v.index,
                        residual: v.residual,
                    });
                }
            }
        }
        for (r, con) in self.global_constraints.iter().enumerate() {
            let val = con.expr.eval(&|k| point.x[k], &|p, j| point.y[p][j]);
            let resid = match con.sense {
                Sense::Le => val,
                Sense::Eq => val.abs(),
            };
            let bound = match con.sense {
                Sense::Le => tol.linear.max(tol.nonlinear),
                Sense::Eq => tol.nonlinear,
            };
            if resid > bound {
                violations.push(Violation {
                    scope: ViolationScope::Global,
                    kind: SetViolationKind::Nonlinear,
                    index: r,
                    residual: resid,
                });
            }
        }
        Ok(FeasibilityReport { violations })
    }

    /// Per-player optimality gaps `g_i(x, y_i) - g_i^*(x)` given the
    /// optimal values, as extended reals.
    ///
    /// Gaps slightly negative (within `OPT_COMPARE_RTOL` of the value
    /// scale) are clamped to zero; more negative gaps mean the claimed
    /// optimal values were not optimal and are rejected.
    pub fn optimality_gaps(
        &self,
        point: &GamePoint,
        optimal_values: &[ExtReal],
    ) -> Result<Vec<ExtReal>> {
        self.check_point_dims(point)?;
        if optimal_values.len() != self.players.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} optimal values for {} players",
                optimal_values.len(),
                self.players.len()
            )));
        }
        let mut gaps = Vec::with_capacity(self.players.len());
        for (i, opt) in optimal_values.iter().enumerate() {
            let val = self.evaluate_player_objective(i, point)?;
            let gap = match opt {
                ExtReal::PosInf => {
                    return Err(Error::InvalidModel(format!(
                        "player {i} reports an infeasible problem (+inf optimum) at a point \
                         where it has a declared block; the optimal values are inconsistent"
                    )))
                }
                ExtReal::NegInf => ExtReal::PosInf,
                ExtReal::Finite(g_star) => {
                    let raw = val - g_star;
                    let slack = OPT_COMPARE_RTOL * (1.0 + g_star.abs());
                    if raw < -slack {
                        return Err(Error::InvalidModel(format!(
                            "player {i}: objective {val} beats the claimed optimum {g_star} \
                             by more than tolerance; the oracle value was not optimal"
                        )));
                    }
                    ExtReal::Finite(raw.max(0.0))
                }
            };
            gaps.push(gap);
        }
        Ok(gaps)
    }

    /// Disequilibrium `mu(g(x, y) - g^*(x))` at a point, given the
    /// players' optimal values at `point.x`.
    pub fn disequilibrium_value(
        &self,
        point: &GamePoint,
        optimal_values: &[ExtReal],
    ) -> Result<ExtReal> {
        let gaps = self.optimality_gaps(point, optimal_values)?;
        self.mu.apply(&gaps)
    }

    /// The Nikaido-Isoda-style gap `sum_i g_i(x, y_i) - sum_i g_i^*(x)`.
    /// Defined for the `sum` measure only, where it coincides with the
    /// disequilibrium on the jointly feasible set.
    pub fn ni_phi(&self, point: &GamePoint, optimal_values: &[ExtReal]) -> Result<ExtReal> {
        if !self.mu.is_sum() {
            return Err(Error::UnsupportedStructure(
                "ni_phi is defined for the sum measure only".to_string(),
            ));
        }
        self.check_point_dims(point)?;
        if optimal_values.len() != self.players.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} optimal values for {} players",
                optimal_values.len(),
                self.players.len()
            )));
        }
        let mut total = ExtReal::Finite(0.0);
        for (i, opt) in optimal_values.iter().enumerate() {
            let val = ExtReal::Finite(self.evaluate_player_objective(i, point)?);
            let term = val.sub(*opt).map_err(Error::InvalidModel)?;
            total = total.add(term).map_err(Error::InvalidModel)?;
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expression;

    /// Two-firm market-entry game on a unit grid: each player picks
    /// y_i in {0, 1}, pays -(y_i + x_other) through the coupling
    /// x_i = y_i. Used across the crate's unit tests.
    pub(crate) fn entry_game() -> GameInstance {
        let player = |i: usize| Player {
            id: format!("firm{}", i + 1),
            n: 1,
            objective: Expression::Add(vec![
                Expression::Mul(vec![Expression::Const(-1.0), Expression::PVar(i, 0)]),
                Expression::Mul(vec![Expression::Const(-1.0), Expression::SVar(1 - i)]),
            ]),
            feasible_set: FeasibleSet::integer_box(vec![0.0], vec![1.1]),
            joint_feasible: None,
            oracle: OracleBinding::Enumeration,
            price_taking_form: None,
        };
        let copy_row = |i: usize| GlobalConstraint {
            expr: Expression::Add(vec![
                Expression::SVar(i),
                Expression::Mul(vec![Expression::Const(-1.0), Expression::PVar(i, 0)]),
            ]),
            sense: Sense::Eq,
        };
        GameInstance {
            name: "entry".to_string(),
            n0: 2,
            x_set: FeasibleSet::boxed(vec![0.0, 0.0], vec![1.1, 1.1]),
            players: vec![player(0), player(1)],
            global_constraints: vec![copy_row(0), copy_row(1)],
            mu: MuMeasure::Sum,
            tolerances: ToleranceConfig::default(),
            x0: None,
            price_box: None,
        }
    }

    #[test]
    fn validates_and_evaluates() {
        let g = entry_game();
        g.validate().unwrap();
        let p = GamePoint::new(vec![1.0, 1.0], vec![vec![1.0], vec![1.0]]);
        assert_eq!(g.evaluate_player_objective(0, &p).unwrap(), -2.0);
        assert_eq!(g.evaluate_player_objective(1, &p).unwrap(), -2.0);
    }

    #[test]
    fn rejects_cross_player_objective() {
        let mut g = entry_game();
        g.players[0].objective = Expression::PVar(1, 0);
        assert!(matches!(g.validate(), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn feasibility_report_flags_broken_coupling() {
        let g = entry_game();
        let tol = ToleranceConfig::default();
        let good = GamePoint::new(vec![1.0, 0.0], vec![vec![1.0], vec![0.0]]);
        assert!(g.check_point_feasible(&good, &tol).unwrap().is_feasible());

        let bad = GamePoint::new(vec![0.0, 0.0], vec![vec![1.0], vec![0.0]]);
        let report = g.check_point_feasible(&bad, &tol).unwrap();
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].scope, ViolationScope::Global);
        assert_eq!(report.violations[0].index, 0);
        assert!((report.violations[0].residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disequilibrium_at_equilibrium_is_zero() {
        let g = entry_game();
        // At x = (1,1) each player's optimum is -2 (enter against an
        // entrant), attained by the point itself.
        let p = GamePoint::new(vec![1.0, 1.0], vec![vec![1.0], vec![1.0]]);
        let opt = vec![ExtReal::Finite(-2.0), ExtReal::Finite(-2.0)];
        let d = g.disequilibrium_value(&p, &opt).unwrap();
        assert_eq!(d, ExtReal::Finite(0.0));
        assert_eq!(g.ni_phi(&p, &opt).unwrap(), ExtReal::Finite(0.0));
    }

    #[test]
    fn disequilibrium_detects_nonoptimal_oracle_values() {
        let g = entry_game();
        let p = GamePoint::new(vec![1.0, 1.0], vec![vec![1.0], vec![1.0]]);
        // Claimed optimum -1 is beaten by the point's own value -2.
        let opt = vec![ExtReal::Finite(-1.0), ExtReal::Finite(-2.0)];
        assert!(g.disequilibrium_value(&p, &opt).is_err());
    }

    #[test]
    fn unbounded_player_problem_gives_infinite_disequilibrium() {
        let g = entry_game();
        let p = GamePoint::new(vec![1.0, 1.0], vec![vec![1.0], vec![1.0]]);
        let opt = vec![ExtReal::NegInf, ExtReal::Finite(-2.0)];
        assert_eq!(
            g.disequilibrium_value(&p, &opt).unwrap(),
            ExtReal::PosInf
        );
    }

    #[test]
    fn measures_agree_on_zero_and_separate_positives() {
        let gaps = [ExtReal::Finite(0.0), ExtReal::Finite(3.0)];
        assert_eq!(
            MuMeasure::Sum.apply(&gaps).unwrap(),
            ExtReal::Finite(3.0)
        );
        assert_eq!(
            MuMeasure::WeightedSum(vec![2.0, 0.5]).apply(&gaps).unwrap(),
            ExtReal::Finite(1.5)
        );
        assert_eq!(MuMeasure::Max.apply(&gaps).unwrap(), ExtReal::Finite(3.0));

        let zero = [ExtReal::Finite(0.0), ExtReal::Finite(0.0)];
        for mu in [
            MuMeasure::Sum,
            MuMeasure::WeightedSum(vec![2.0, 0.5]),
            MuMeasure::Max,
        ] {
            assert_eq!(mu.apply(&zero).unwrap(), ExtReal::Finite(0.0));
        }
    }

    #[test]
    fn weighted_sum_rejects_nonpositive_weights() {
        let mu = MuMeasure::WeightedSum(vec![1.0, 0.0]);
        assert!(mu.validate(2).is_err());
    }

    #[test]
    fn constant_set_guard_rejects_joint_sets() {
        let mut g = entry_game();
        g.players[1].joint_feasible = Some(FeasibleSet::free(3));
        g.validate().unwrap();
        let err = g.require_constant_feasible_sets("test").unwrap_err();
        assert!(matches!(err, Error::SharedDependentFeasibleSet(1, _)));
    }
}

#[cfg(test)]
pub(crate) use tests::entry_game;
