//! Constraint generation for minimum disequilibrium.
//!
//! The disequilibrium of a joint point is the aggregated amount by
//! which each player's objective exceeds their best achievable value
//! given the shared variables; its minimum over the joint feasible
//! set is zero exactly when the game has an equilibrium. The solver
//! sandwiches that minimum between two bounds and tightens both:
//!
//! * a pooled relaxation ([`solve_lower_bound`]) in which each
//!   player's best-response value is understated by finitely many
//!   pooled responses, giving a lower bound and a candidate point;
//! * exact best-response oracles at the candidate's shared
//!   variables, giving the candidate's true disequilibrium (an upper
//!   bound) and fresh responses to pool.
//!
//! The loop stops as soon as one of three certificates appears: the
//! relaxation's response values match the oracles' (the bound is
//! tight, so the value is exact), the two bounds close to within
//! `eps` (the incumbent is eps-optimal), or in certify mode the lower
//! bound rises above `eps_certify` (no equilibrium can exist). Every
//! stop reports both bounds, so a claim is never stronger than what
//! the bounds support.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::model::{GameInstance, GamePoint, MuMeasure, Violation};
use crate::oracles::{solve_lower_bound, solve_player, CutPools, OracleRegistry};

/// Relative slack in the exactness test `w_i <= g_i^* + slack`: the
/// relaxation's response value may exceed the oracle's by at most
/// this factor (scaled by magnitude) and still count as matching.
pub const EXACTNESS_RTOL: f64 = 1e-7;

/// Stopping rules for [`run`]. `Default` gives the documented
/// tolerances and the plain solve mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CgaOptions {
    /// Stop once `upper - max(lower, 0) < eps`.
    pub eps: f64,
    /// A disequilibrium at or below this counts as an equilibrium.
    pub eps_equilibrium: f64,
    /// A lower bound above this certifies that no equilibrium exists.
    pub eps_certify: f64,
    pub max_iterations: usize,
    /// Stop as soon as no-equilibrium is certified instead of
    /// continuing to the minimum disequilibrium value.
    pub stop_on_certificate: bool,
    /// Shared-variable point whose best responses seed the pools;
    /// falls back to the instance's `x0`, then to zero clamped into
    /// the shared box.
    pub x0: Option<Vec<f64>>,
}

impl Default for CgaOptions {
    fn default() -> Self {
        CgaOptions {
            eps: 1e-6,
            eps_equilibrium: 1e-6,
            eps_certify: 1e-6,
            max_iterations: 500,
            stop_on_certificate: false,
            x0: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolveStatus {
    /// The incumbent's disequilibrium is at most `eps_equilibrium`.
    EquilibriumFound,
    /// The relaxation became tight: the value is exact.
    MdExact,
    /// Bounds closed to within `eps` around the incumbent.
    MdEpsOptimal,
    /// Certify mode stopped early: the lower bound alone rules out an
    /// equilibrium.
    NoEquilibriumCertified,
    IterationLimit,
    /// A best-response oracle failed mid-run; see `error`.
    OracleFailure,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::EquilibriumFound => "EQUILIBRIUM_FOUND",
            SolveStatus::MdExact => "MD_EXACT",
            SolveStatus::MdEpsOptimal => "MD_EPS_OPTIMAL",
            SolveStatus::NoEquilibriumCertified => "NO_EQUILIBRIUM_CERTIFIED",
            SolveStatus::IterationLimit => "ITERATION_LIMIT",
            SolveStatus::OracleFailure => "ORACLE_FAILURE",
        };
        f.write_str(s)
    }
}

/// One iteration of the bound sandwich, for traces and audits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// This iteration's relaxation value.
    pub lower: ExtReal,
    /// Shared variables of the relaxation's candidate point.
    pub x: Vec<f64>,
    /// True disequilibrium of the candidate, when the oracles ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate: Option<f64>,
    /// Best upper bound after this iteration.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    pub cuts_added: usize,
}

/// Final report of a solve. Serializes deterministically: wall-clock
/// time is carried in memory but never written.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    /// Report format version.
    pub schema: u32,
    pub instance: String,
    pub status: SolveStatus,
    /// The reported value is the minimum disequilibrium itself, not
    /// just an eps-approximation of it.
    pub exact: bool,
    /// The final lower bound rules out an equilibrium.
    pub no_equilibrium_certified: bool,
    /// Minimum disequilibrium (value of the incumbent) on converged
    /// statuses; absent on inconclusive ones.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disequilibrium: Option<f64>,
    pub lower_bound: ExtReal,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper_bound: Option<f64>,
    /// Incumbent joint point attaining `upper_bound`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<GamePoint>,
    /// Per-player optimality gaps at the incumbent, unweighted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub player_gaps: Option<Vec<f64>>,
    /// Best-response values at the incumbent's shared variables.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_response_values: Option<Vec<f64>>,
    pub iterations: usize,
    pub oracle_calls: usize,
    pub records: Vec<IterationRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing, default)]
    pub wall_ms: u64,
}

/// Seeds one pooled response per player: the best response at `x0`
/// (explicit, else the instance's, else zero clamped into the shared
/// box).
pub fn initialize_pools(
    game: &GameInstance,
    x0: Option<&[f64]>,
    registry: Option<&OracleRegistry>,
) -> Result<CutPools> {
    game.require_constant_feasible_sets("constraint generation")?;
    let x0: Vec<f64> = match (x0, &game.x0) {
        (Some(v), _) => v.to_vec(),
        (None, Some(v)) => v.clone(),
        (None, None) => game
            .x_set
            .lower
            .iter()
            .zip(&game.x_set.upper)
            .map(|(&lo, &hi)| 0.0f64.clamp(lo.min(hi), hi.max(lo)))
            .collect(),
    };
    if x0.len() != game.n0 {
        return Err(Error::DimensionMismatch(format!(
            "seed point has length {}, shared block has {}",
            x0.len(),
            game.n0
        )));
    }
    let mut pools = CutPools::new(game.players.len());
    for i in 0..game.players.len() {
        let r = solve_player(game, i, &x0, registry)?;
        match r.value {
            ExtReal::Finite(_) => {
                pools.add(i, r.minimizer.expect("finite oracle carries a minimizer"));
            }
            ExtReal::PosInf => {
                return Err(Error::Infeasible(format!(
                    "player {i} has an empty feasible set; no response can be pooled"
                )))
            }
            ExtReal::NegInf => {
                return Err(Error::Unbounded(format!(
                    "player {i}'s response at the seed point is unbounded below"
                )))
            }
        }
    }
    Ok(pools)
}

/// Seeds pools from the options and runs the bound sandwich.
pub fn solve_md(
    game: &GameInstance,
    registry: Option<&OracleRegistry>,
    options: &CgaOptions,
) -> Result<SolveReport> {
    let mut pools = initialize_pools(game, options.x0.as_deref(), registry)?;
    let mut report = run(game, &mut pools, registry, options)?;
    report.oracle_calls += game.players.len();
    Ok(report)
}

struct Incumbent {
    value: f64,
    point: GamePoint,
    gaps: Vec<f64>,
    response_values: Vec<f64>,
}

/// Runs constraint generation on already-seeded pools. Oracle errors
/// mid-loop end the run with [`SolveStatus::OracleFailure`]; errors
/// that make the question itself ill-posed (an unbounded response, a
/// relaxation that stops being convex, an empty joint set) are
/// returned as `Err`.
pub fn run(
    game: &GameInstance,
    pools: &mut CutPools,
    registry: Option<&OracleRegistry>,
    options: &CgaOptions,
) -> Result<SolveReport> {
    game.require_constant_feasible_sets("constraint generation")?;
    game.validate()?;
    let started = Instant::now();
    let num_players = game.players.len();
    let weights = match &game.mu {
        MuMeasure::Sum => vec![1.0; num_players],
        MuMeasure::WeightedSum(w) => w.clone(),
        MuMeasure::Max => {
            return Err(Error::UnsupportedStructure(
                "constraint generation requires an additive measure; max is not \
                 supported"
                    .into(),
            ))
        }
    };

    let mut lower = ExtReal::NegInf;
    let mut incumbent: Option<Incumbent> = None;
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut oracle_calls = 0usize;

    let finish = |status: SolveStatus,
                      exact: bool,
                      lower: ExtReal,
                      incumbent: Option<Incumbent>,
                      records: Vec<IterationRecord>,
                      oracle_calls: usize,
                      error: Option<String>| {
        let converged = matches!(
            status,
            SolveStatus::EquilibriumFound | SolveStatus::MdExact | SolveStatus::MdEpsOptimal
        );
        let certified = match lower {
            ExtReal::Finite(l) => l > options.eps_certify,
            ExtReal::PosInf => true,
            ExtReal::NegInf => false,
        };
        SolveReport {
            schema: 1,
            instance: game.name.clone(),
            status,
            exact,
            no_equilibrium_certified: certified,
            disequilibrium: incumbent
                .as_ref()
                .filter(|_| converged)
                .map(|inc| inc.value),
            lower_bound: lower,
            upper_bound: incumbent.as_ref().map(|inc| inc.value),
            point: incumbent.as_ref().map(|inc| inc.point.clone()),
            player_gaps: incumbent.as_ref().map(|inc| inc.gaps.clone()),
            best_response_values: incumbent.as_ref().map(|inc| inc.response_values.clone()),
            iterations: records.len(),
            oracle_calls,
            records,
            error,
            wall_ms: started.elapsed().as_millis() as u64,
        }
    };

    for iteration in 1..=options.max_iterations {
        let relax = solve_lower_bound(game, pools)?;
        if lower.cmp_total(relax.value).is_lt() {
            lower = relax.value;
        }
        let mut record = IterationRecord {
            iteration,
            lower: relax.value,
            x: relax.x.clone(),
            candidate: None,
            upper: incumbent.as_ref().map(|inc| inc.value),
            cuts_added: 0,
        };

        if options.stop_on_certificate {
            if let ExtReal::Finite(l) = lower {
                if l > options.eps_certify {
                    records.push(record);
                    return Ok(finish(
                        SolveStatus::NoEquilibriumCertified,
                        false,
                        lower,
                        incumbent,
                        records,
                        oracle_calls,
                        None,
                    ));
                }
            }
        }

        let mut response_values = Vec::with_capacity(num_players);
        let mut responses = Vec::with_capacity(num_players);
        let mut failure: Option<String> = None;
        for i in 0..num_players {
            oracle_calls += 1;
            match solve_player(game, i, &relax.x, registry) {
                Ok(r) => match r.value {
                    ExtReal::Finite(v) => {
                        response_values.push(v);
                        responses.push(r.minimizer.expect("finite oracle carries a minimizer"));
                    }
                    ExtReal::NegInf => {
                        return Err(Error::Unbounded(format!(
                            "player {i}'s response at the candidate point is unbounded \
                             below; the disequilibrium there is infinite"
                        )))
                    }
                    ExtReal::PosInf => {
                        failure = Some(format!(
                            "oracle for player {i} reports an empty feasible set at a \
                             point the relaxation found jointly feasible"
                        ));
                        break;
                    }
                },
                Err(e) => {
                    failure = Some(format!("oracle for player {i}: {e}"));
                    break;
                }
            }
        }
        if let Some(detail) = failure {
            records.push(record);
            return Ok(finish(
                SolveStatus::OracleFailure,
                false,
                lower,
                incumbent,
                records,
                oracle_calls,
                Some(detail),
            ));
        }

        // Exactness: the relaxation's response values match the
        // oracles', so its value is the true minimum. Only a value
        // attained by the relaxation can be promoted this way.
        let tight = relax.value.is_finite()
            && (0..num_players).all(|i| {
                relax.w[i] <= response_values[i] + EXACTNESS_RTOL * (1.0 + response_values[i].abs())
            });

        if !tight {
            for i in 0..num_players {
                let violated = relax.w[i]
                    > response_values[i] + EXACTNESS_RTOL * (1.0 + response_values[i].abs());
                if !violated {
                    continue;
                }
                if !pools.add(i, responses[i].clone()) {
                    return Err(Error::DuplicateCut {
                        player: i,
                        iteration,
                        detail: format!(
                            "the oracle's best response at x = {:?} is already pooled, \
                             yet the relaxation still overstates the response value \
                             ({} > {}); the relaxation and the oracle disagree",
                            relax.x, relax.w[i], response_values[i]
                        ),
                    });
                }
                record.cuts_added += 1;
            }
        }

        let gaps: Vec<f64> = (0..num_players)
            .map(|i| {
                Ok(game.evaluate_player_objective(
                    i,
                    &GamePoint::new(relax.x.clone(), relax.y.clone()),
                )? - response_values[i])
            })
            .collect::<Result<_>>()?;
        let candidate: f64 = gaps.iter().zip(&weights).map(|(g, l)| g * l).sum();
        record.candidate = Some(candidate);
        if incumbent.as_ref().map_or(true, |inc| candidate < inc.value) {
            incumbent = Some(Incumbent {
                value: candidate,
                point: GamePoint::new(relax.x.clone(), relax.y.clone()),
                gaps,
                response_values,
            });
        }
        let upper = incumbent.as_ref().expect("just set").value;
        record.upper = Some(upper);
        records.push(record);

        let effective_lower = match lower {
            ExtReal::Finite(l) => l.max(0.0),
            _ => 0.0,
        };
        if tight || upper - effective_lower < options.eps {
            let exact = tight || upper <= effective_lower;
            let status = if upper <= options.eps_equilibrium {
                SolveStatus::EquilibriumFound
            } else if exact {
                SolveStatus::MdExact
            } else {
                SolveStatus::MdEpsOptimal
            };
            return Ok(finish(
                status,
                exact,
                lower,
                incumbent,
                records,
                oracle_calls,
                None,
            ));
        }
    }

    Ok(finish(
        SolveStatus::IterationLimit,
        false,
        lower,
        incumbent,
        records,
        oracle_calls,
        None,
    ))
}

/// Outcome of checking a specific joint point for equilibrium.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumCheck {
    /// Joint feasibility violations at the instance tolerances.
    pub violations: Vec<Violation>,
    /// Per-player optimality gaps `g_i(x, y_i) - g_i^*(x)`; an
    /// unbounded response makes the gap infinite.
    pub player_gaps: Vec<f64>,
    pub best_response_values: Vec<ExtReal>,
    /// Feasible and every gap within `eps * (1 + |g_i^*|)`.
    pub certified: bool,
    pub oracle_calls: usize,
}

/// Checks whether a joint point is an `eps`-equilibrium: jointly
/// feasible, with every player's objective within `eps` (relative) of
/// their best response at the point's shared variables.
pub fn certify_equilibrium(
    game: &GameInstance,
    point: &GamePoint,
    registry: Option<&OracleRegistry>,
    eps: f64,
) -> Result<EquilibriumCheck> {
    game.require_constant_feasible_sets("equilibrium certification")?;
    let feasibility = game.check_point_feasible(point, &game.tolerances)?;
    let mut gaps = Vec::with_capacity(game.players.len());
    let mut values = Vec::with_capacity(game.players.len());
    let mut optimal = true;
    for i in 0..game.players.len() {
        let r = solve_player(game, i, &point.x, registry)?;
        values.push(r.value);
        match r.value {
            ExtReal::Finite(v) => {
                let gap = game.evaluate_player_objective(i, point)? - v;
                optimal &= gap <= eps * (1.0 + v.abs());
                gaps.push(gap);
            }
            ExtReal::NegInf => {
                optimal = false;
                gaps.push(f64::INFINITY);
            }
            ExtReal::PosInf => {
                return Err(Error::Infeasible(format!(
                    "player {i} has an empty feasible set; no point can be an \
                     equilibrium"
                )))
            }
        }
    }
    Ok(EquilibriumCheck {
        certified: feasibility.is_feasible() && optimal,
        violations: feasibility.violations,
        player_gaps: gaps,
        best_response_values: values,
        oracle_calls: game.players.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expression;
    use crate::model::{
        entry_game, FeasibleSet, GlobalConstraint, LinearConstraint, OracleBinding, Player, Sense,
        ToleranceConfig,
    };
    use crate::oracles::OracleResult;

    /// No pure equilibrium: player 0 wants to match the opponent's
    /// committed choice, player 1 wants to break the match. Both
    /// blocks are binary and copied into the shared variables.
    fn pennies_game() -> GameInstance {
        let objective = |i: usize| {
            let diff = Expression::Add(vec![
                Expression::PVar(i, 0),
                Expression::scaled(-1.0, Expression::SVar(1 - i)),
            ]);
            if i == 0 {
                Expression::Square(Box::new(diff))
            } else {
                Expression::scaled(-1.0, Expression::Square(Box::new(diff)))
            }
        };
        let player = |i: usize| Player {
            id: format!("p{i}"),
            n: 1,
            objective: objective(i),
            feasible_set: FeasibleSet::integer_box(vec![0.0], vec![1.0]),
            joint_feasible: None,
            oracle: OracleBinding::Enumeration,
            price_taking_form: None,
        };
        let copy_row = |i: usize| GlobalConstraint {
            expr: Expression::Add(vec![
                Expression::SVar(i),
                Expression::scaled(-1.0, Expression::PVar(i, 0)),
            ]),
            sense: Sense::Eq,
        };
        GameInstance {
            name: "pennies".to_string(),
            n0: 2,
            x_set: FeasibleSet::integer_box(vec![0.0, 0.0], vec![1.0, 1.0]),
            players: vec![player(0), player(1)],
            global_constraints: vec![copy_row(0), copy_row(1)],
            mu: MuMeasure::Sum,
            tolerances: ToleranceConfig::default(),
            x0: None,
            price_box: None,
        }
    }

    #[test]
    fn finds_the_entry_equilibrium_in_one_iteration() {
        // Entering is dominant, so the seed responses are y_i = 1,
        // the first relaxation is already tight at the all-enter
        // point, and its value is exactly zero.
        let g = entry_game();
        let report = solve_md(&g, None, &CgaOptions::default()).unwrap();
        assert_eq!(report.status, SolveStatus::EquilibriumFound);
        assert!(report.exact);
        assert!(!report.no_equilibrium_certified);
        assert_eq!(report.iterations, 1);
        assert_eq!(report.disequilibrium, Some(0.0));
        let point = report.point.unwrap();
        assert_eq!(point.x, vec![1.0, 1.0]);
        assert_eq!(point.y, vec![vec![1.0], vec![1.0]]);
        assert_eq!(report.oracle_calls, 4);
        assert_eq!(report.best_response_values, Some(vec![-2.0, -2.0]));
    }

    #[test]
    fn pennies_has_disequilibrium_one_in_two_iterations() {
        // Iteration 1 pools the stale responses' complements and
        // leaves bounds [-1, 1]; iteration 2's relaxation value 1 is
        // tight everywhere, so the exact value is 1 and the lower
        // bound certifies that no equilibrium exists.
        let g = pennies_game();
        let report = solve_md(&g, None, &CgaOptions::default()).unwrap();
        assert_eq!(report.status, SolveStatus::MdExact);
        assert!(report.exact);
        assert!(report.no_equilibrium_certified);
        assert_eq!(report.iterations, 2);
        assert_eq!(report.disequilibrium, Some(1.0));
        assert_eq!(report.lower_bound, ExtReal::Finite(1.0));
        assert_eq!(report.upper_bound, Some(1.0));
        assert_eq!(report.oracle_calls, 6);
        // The incumbent came from iteration 1's candidate, which
        // already attained the optimum.
        assert_eq!(report.point.as_ref().unwrap().x, vec![1.0, 1.0]);
        assert_eq!(report.player_gaps, Some(vec![0.0, 1.0]));
        assert_eq!(report.records.len(), 2);
        assert_eq!(report.records[0].lower, ExtReal::Finite(-1.0));
        assert_eq!(report.records[0].cuts_added, 2);
        assert_eq!(report.records[1].cuts_added, 0);
    }

    #[test]
    fn weighted_measures_rescale_the_optimum() {
        // Weights (2, 3) price player 0's gap cheaper, so the optimum
        // moves to a mismatch point where only that gap is open.
        let mut g = pennies_game();
        g.mu = MuMeasure::WeightedSum(vec![2.0, 3.0]);
        let report = solve_md(&g, None, &CgaOptions::default()).unwrap();
        assert!(matches!(
            report.status,
            SolveStatus::MdExact | SolveStatus::MdEpsOptimal
        ));
        let v = report.disequilibrium.unwrap();
        assert!((v - 2.0).abs() <= 1e-6, "value {v}");
        assert!(report.no_equilibrium_certified);
    }

    #[test]
    fn certify_mode_stops_at_the_first_positive_bound() {
        let g = pennies_game();
        let options = CgaOptions {
            stop_on_certificate: true,
            ..CgaOptions::default()
        };
        let report = solve_md(&g, None, &options).unwrap();
        assert_eq!(report.status, SolveStatus::NoEquilibriumCertified);
        assert!(report.no_equilibrium_certified);
        assert!(!report.exact);
        assert_eq!(report.iterations, 2);
        // The certificate fires after the relaxation, before oracles.
        assert_eq!(report.oracle_calls, 4);
        assert_eq!(report.disequilibrium, None);
        assert_eq!(report.lower_bound, ExtReal::Finite(1.0));
    }

    #[test]
    fn iteration_cap_reports_both_bounds() {
        let g = pennies_game();
        let options = CgaOptions {
            max_iterations: 1,
            ..CgaOptions::default()
        };
        let report = solve_md(&g, None, &options).unwrap();
        assert_eq!(report.status, SolveStatus::IterationLimit);
        assert!(!report.exact);
        assert!(!report.no_equilibrium_certified);
        assert_eq!(report.lower_bound, ExtReal::Finite(-1.0));
        assert_eq!(report.upper_bound, Some(1.0));
        assert_eq!(report.disequilibrium, None);
    }

    #[test]
    fn oracle_errors_mid_run_become_a_failure_report() {
        let mut g = entry_game();
        g.players[1].oracle = OracleBinding::Custom("boom".to_string());
        let mut registry = OracleRegistry::new();
        registry.register("boom", |_: &GameInstance, _: usize, _: &[f64]| {
            Err::<OracleResult, _>(Error::SolverFailure("synthetic outage".into()))
        });
        let mut pools = CutPools::new(2);
        pools.add(0, vec![1.0]);
        pools.add(1, vec![1.0]);
        let report = run(&g, &mut pools, Some(&registry), &CgaOptions::default()).unwrap();
        assert_eq!(report.status, SolveStatus::OracleFailure);
        assert!(report.error.as_deref().unwrap().contains("player 1"));
        assert!(report.error.as_deref().unwrap().contains("synthetic outage"));
        assert_eq!(report.disequilibrium, None);
    }

    #[test]
    fn unbounded_responses_are_a_hard_error() {
        let g = GameInstance {
            name: "unbounded".to_string(),
            n0: 1,
            x_set: FeasibleSet::boxed(vec![0.0], vec![1.0]),
            players: vec![Player {
                id: "p".to_string(),
                n: 1,
                objective: Expression::scaled(-1.0, Expression::PVar(0, 0)),
                feasible_set: FeasibleSet::boxed(vec![0.0], vec![f64::INFINITY]),
                joint_feasible: None,
                oracle: OracleBinding::BoxLp,
                price_taking_form: None,
            }],
            global_constraints: vec![],
            mu: MuMeasure::Sum,
            tolerances: ToleranceConfig::default(),
            x0: None,
            price_box: None,
        };
        let err = solve_md(&g, None, &CgaOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Unbounded(_)));
    }

    #[test]
    fn infeasible_joint_sets_propagate() {
        let mut g = entry_game();
        g.x_set.linear.push(LinearConstraint {
            coeffs: vec![1.0, 0.0],
            sense: Sense::Le,
            rhs: -1.0,
        });
        let err = solve_md(&g, None, &CgaOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
    }

    #[test]
    fn seeding_prefers_explicit_then_instance_points() {
        let mut g = entry_game();
        g.x0 = Some(vec![1.0, 1.0]);
        let pools = initialize_pools(&g, None, None).unwrap();
        assert_eq!(pools.points(0), &[vec![1.0]]);
        assert_eq!(pools.points(1), &[vec![1.0]]);
        let pools = initialize_pools(&g, Some(&[0.0, 0.0]), None).unwrap();
        // Entering is dominant at every seed, so the pools agree.
        assert_eq!(pools.points(0), &[vec![1.0]]);
        assert_eq!(pools.total_points(), 2);
    }

    #[test]
    fn certifies_the_entry_equilibrium_and_rejects_deviations() {
        let g = entry_game();
        let eq = GamePoint::new(vec![1.0, 1.0], vec![vec![1.0], vec![1.0]]);
        let check = certify_equilibrium(&g, &eq, None, 1e-6).unwrap();
        assert!(check.certified);
        assert_eq!(check.player_gaps, vec![0.0, 0.0]);
        assert_eq!(
            check.best_response_values,
            vec![ExtReal::Finite(-2.0), ExtReal::Finite(-2.0)]
        );

        // All-out is feasible but both players regret staying out.
        let out = GamePoint::new(vec![0.0, 0.0], vec![vec![0.0], vec![0.0]]);
        let check = certify_equilibrium(&g, &out, None, 1e-6).unwrap();
        assert!(!check.certified);
        assert!(check.violations.is_empty());
        assert_eq!(check.player_gaps, vec![1.0, 1.0]);

        // A mismatched copy is infeasible regardless of gaps.
        let bad = GamePoint::new(vec![1.0, 0.0], vec![vec![0.0], vec![0.0]]);
        let check = certify_equilibrium(&g, &bad, None, 1e-6).unwrap();
        assert!(!check.certified);
        assert!(!check.violations.is_empty());
    }

    #[test]
    fn max_measure_is_rejected() {
        let mut g = entry_game();
        g.mu = MuMeasure::Max;
        assert!(matches!(
            solve_md(&g, None, &CgaOptions::default()),
            Err(Error::UnsupportedStructure(_))
        ));
    }

    #[test]
    fn reports_serialize_without_wall_clock_noise() {
        let g = entry_game();
        let a = solve_md(&g, None, &CgaOptions::default()).unwrap();
        let b = solve_md(&g, None, &CgaOptions::default()).unwrap();
        let ja = serde_json::to_string_pretty(&a).unwrap();
        let jb = serde_json::to_string_pretty(&b).unwrap();
        assert_eq!(ja, jb);
        assert!(!ja.contains("wall_ms"));
        let round: SolveReport = serde_json::from_str(&ja).unwrap();
        assert_eq!(round.status, a.status);
        assert_eq!(round.wall_ms, 0);
    }
}
