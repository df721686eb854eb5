//! Player best-response oracles.
//!
//! At a fixed shared-variable vector `x`, player `i`'s oracle computes
//! the optimal value of its problem, `min g_i(x, z)` over the player's
//! constant feasible set, together with a minimiser when that value is
//! finite. Values are extended reals: an empty feasible set yields
//! `+inf`, an unbounded problem `-inf`.
//!
//! Built-in oracles cover the structures the bundled instances use
//! (lattice enumeration, box LPs, fixed-charge players, separable
//! mixed-binary quadratics, and potential-network transmission
//! players); anything else can be supplied through an
//! [`OracleRegistry`]. Every result, built-in or custom, is verified
//! against the instance before it is returned: the minimiser must lie
//! in the player's set and must reproduce the claimed value.

pub mod builtin;
pub mod lower_bound;
pub mod tree_transmission;

pub use lower_bound::{solve_lower_bound, CutPools, LowerBoundSolution};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::{Expression, Polynomial, VarKey};
use crate::ext::ExtReal;
use crate::model::{FeasibleSet, GameInstance, OracleBinding, Sense, OPT_COMPARE_RTOL};
use crate::subsolvers::Certificate;

/// Hard cap on lattice and assignment enumerations.
pub const ENUMERATION_CAP: u64 = 1_000_000;

/// Outcome of one best-response solve.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Optimal value: `+inf` for an empty set, `-inf` when unbounded.
    pub value: ExtReal,
    /// A minimiser, present exactly when the value is finite.
    pub minimizer: Option<Vec<f64>>,
    /// Residual bundle from the inner subsolver, when one ran.
    pub certificate: Option<Certificate>,
}

impl OracleResult {
    pub fn finite(value: f64, minimizer: Vec<f64>) -> Self {
        OracleResult {
            value: ExtReal::Finite(value),
            minimizer: Some(minimizer),
            certificate: None,
        }
    }

    pub fn infeasible() -> Self {
        OracleResult {
            value: ExtReal::PosInf,
            minimizer: None,
            certificate: None,
        }
    }

    pub fn unbounded() -> Self {
        OracleResult {
            value: ExtReal::NegInf,
            minimizer: None,
            certificate: None,
        }
    }
}

/// Signature of a user-supplied oracle: `(game, player, x) -> result`.
pub type CustomOracleFn = dyn Fn(&GameInstance, usize, &[f64]) -> Result<OracleResult> + Send + Sync;

/// Named custom oracles, looked up by the `custom` binding.
#[derive(Default)]
pub struct OracleRegistry {
    map: BTreeMap<String, Box<CustomOracleFn>>,
}

impl OracleRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register<F>(&mut self, name: impl Into<String>, oracle: F)
    where
        F: Fn(&GameInstance, usize, &[f64]) -> Result<OracleResult> + Send + Sync + 'static,
    {
        self.map.insert(name.into(), Box::new(oracle));
    }

    pub fn get(&self, name: &str) -> Option<&CustomOracleFn> {
        self.map.get(name).map(|b| b.as_ref())
    }
}

/// Best-response data for one player at fixed shared variables: the
/// substituted objective (a polynomial in the player's own block) and
/// the player's constant feasible set.
pub(crate) struct ResponseProblem<'a> {
    pub player: usize,
    pub set: &'a FeasibleSet,
    pub objective: Polynomial,
}

impl ResponseProblem<'_> {
    /// Objective value at a point of the player's block.
    pub fn objective_at(&self, y: &[f64]) -> f64 {
        let i = self.player;
        self.objective.eval(&|k| match k {
            VarKey::Player(p, j) if p == i => y[j],
            other => panic!("unsubstituted variable {other:?} in a response objective"),
        })
    }

}

/// Rewrites a feasible-set-local expression (variables `SVar(j)`) into
/// player `i`'s block so it shares a key space with objectives.
pub(crate) fn relocalize_set_expr(expr: &Expression, player: usize) -> Expression {
    match expr {
        Expression::Const(c) => Expression::Const(*c),
        Expression::SVar(j) => Expression::PVar(player, *j),
        Expression::PVar(p, j) => Expression::PVar(*p, *j),
        Expression::Add(ts) => {
            Expression::Add(ts.iter().map(|t| relocalize_set_expr(t, player)).collect())
        }
        Expression::Mul(ts) => {
            Expression::Mul(ts.iter().map(|t| relocalize_set_expr(t, player)).collect())
        }
        Expression::Square(t) => {
            Expression::Square(Box::new(relocalize_set_expr(t, player)))
        }
    }
}

/// Expands a feasible set's nonlinear rows into polynomials over the
/// given player's block.
pub(crate) fn player_row_polys(
    set: &FeasibleSet,
    player: usize,
) -> Result<Vec<(Polynomial, Sense)>> {
    set.nonlinear
        .iter()
        .map(|row| {
            let poly = relocalize_set_expr(&row.expr, player).expand()?;
            Ok((poly, row.sense))
        })
        .collect()
}

pub(crate) fn response_problem<'a>(
    game: &'a GameInstance,
    i: usize,
    x: &[f64],
) -> Result<ResponseProblem<'a>> {
    game.require_constant_feasible_sets("player best-response oracles")?;
    if i >= game.players.len() {
        return Err(Error::IndexOutOfRange(format!(
            "player {i} of {}",
            game.players.len()
        )));
    }
    if x.len() != game.n0 {
        return Err(Error::DimensionMismatch(format!(
            "shared vector has length {}, instance has {}",
            x.len(),
            game.n0
        )));
    }
    let expanded = game.players[i].objective.expand()?;
    let objective = expanded.substitute(&|k| match k {
        VarKey::Shared(s) => Some(x[s]),
        VarKey::Player(_, _) => None,
    });
    Ok(ResponseProblem {
        player: i,
        set: &game.players[i].feasible_set,
        objective,
    })
}

/// Solves player `i`'s best-response problem at `x`, dispatching on
/// the player's oracle binding and verifying the result.
///
/// The instance is assumed validated; players with shared-dependent
/// feasible sets are rejected here as everywhere else.
pub fn solve_player(
    game: &GameInstance,
    i: usize,
    x: &[f64],
    registry: Option<&OracleRegistry>,
) -> Result<OracleResult> {
    game.require_constant_feasible_sets("player best-response oracles")?;
    if i >= game.players.len() {
        return Err(Error::IndexOutOfRange(format!(
            "player {i} of {}",
            game.players.len()
        )));
    }
    let result = match &game.players[i].oracle {
        OracleBinding::Enumeration => builtin::enumeration(game, i, x)?,
        OracleBinding::BoxLp => builtin::box_lp(game, i, x)?,
        OracleBinding::FixedCharge => builtin::fixed_charge(game, i, x)?,
        OracleBinding::MixedBinarySepQp => builtin::mixed_binary_sep_qp(game, i, x)?,
        OracleBinding::TreeTransmission => tree_transmission::solve(game, i, x)?,
        OracleBinding::Custom(name) => {
            let registry = registry.ok_or_else(|| {
                Error::UnsupportedStructure(format!(
                    "player {i} is bound to custom oracle {name:?} but no registry was provided"
                ))
            })?;
            let oracle = registry.get(name).ok_or_else(|| {
                Error::UnsupportedStructure(format!(
                    "custom oracle {name:?} is not registered"
                ))
            })?;
            oracle(game, i, x)?
        }
    };
    verify_oracle_result(game, i, x, &result)?;
    Ok(result)
}

/// Checks the internal consistency of an oracle result: finite values
/// carry a minimiser that is feasible for the player's set and
/// reproduces the value; infinite values carry none.
fn verify_oracle_result(
    game: &GameInstance,
    i: usize,
    x: &[f64],
    result: &OracleResult,
) -> Result<()> {
    let player = &game.players[i];
    match result.value {
        ExtReal::Finite(claimed) => {
            let y = result.minimizer.as_ref().ok_or_else(|| {
                Error::SolverFailure(format!(
                    "oracle for player {i} returned a finite value without a minimizer"
                ))
            })?;
            if y.len() != player.n {
                return Err(Error::DimensionMismatch(format!(
                    "oracle minimizer for player {i} has length {}, expected {}",
                    y.len(),
                    player.n
                )));
            }
            let tol = &game.tolerances;
            let violations = player.feasible_set.violations(y, tol.linear, tol.nonlinear);
            if let Some(v) = violations.first() {
                return Err(Error::SolverFailure(format!(
                    "oracle minimizer for player {i} violates its feasible set \
                     ({:?} {} by {:.3e})",
                    v.kind, v.index, v.residual
                )));
            }
            let recomputed = player.objective.eval(&|k| x[k], &|_, j| y[j]);
            if (recomputed - claimed).abs() > OPT_COMPARE_RTOL * (1.0 + claimed.abs()) {
                return Err(Error::SolverFailure(format!(
                    "oracle for player {i} claimed value {claimed} but its minimizer \
                     evaluates to {recomputed}"
                )));
            }
        }
        ExtReal::PosInf | ExtReal::NegInf => {
            if result.minimizer.is_some() {
                return Err(Error::SolverFailure(format!(
                    "oracle for player {i} returned an infinite value with a minimizer"
                )));
            }
        }
    }
    Ok(())
}

/// Solves every player's best response at `x`, in player order.
pub fn solve_all_players(
    game: &GameInstance,
    x: &[f64],
    registry: Option<&OracleRegistry>,
) -> Result<Vec<OracleResult>> {
    (0..game.players.len())
        .map(|i| solve_player(game, i, x, registry))
        .collect()
}
