//! Best-response oracle for potential-driven network players, such as
//! gas transmission operators whose pipes obey a quadratic
//! pressure-drop law.
//!
//! Supported structure: every nonlinear row expands to an affine part
//! plus pure squared-variable terms `q * v^2` (no cross products, no
//! higher degrees), and the objective expands the same way. Rows and
//! objectives may use the squared variables linearly as well, so flow
//! conservation sits alongside the pressure-drop rows.
//!
//! The global solve itself lives in [`crate::subsolvers::sbb`]: this
//! module only flattens the player's response problem into a
//! [`DenseSquareProgram`] and translates the outcome back into an
//! oracle result.

use super::{player_row_polys, response_problem, OracleResult};
use crate::error::{Error, Result};
use crate::expr::VarKey;
use crate::model::GameInstance;
use crate::subsolvers::sbb::square_form_of;
use crate::subsolvers::{solve_square_program, DenseSquareProgram, SbbOutcome, SquareRow};

fn build_program(game: &GameInstance, i: usize, x: &[f64]) -> Result<DenseSquareProgram> {
    let rp = response_problem(game, i, x)?;
    let set = rp.set;
    let n = set.n;
    if set.integral.iter().any(|&b| b) {
        return Err(Error::UnsupportedStructure(format!(
            "player {i} has integral variables; the network oracle is continuous"
        )));
    }
    let index_of = |v: VarKey| match v {
        VarKey::Player(p, j) if p == i => Some(j),
        _ => None,
    };

    let mut rows = Vec::new();
    for (poly, sense) in player_row_polys(set, i)? {
        let what = format!("player {i}: a nonlinear row");
        rows.push(SquareRow {
            form: square_form_of(&poly, n, &index_of, &what)?,
            sense,
        });
    }
    let objective = square_form_of(
        &rp.objective,
        n,
        &index_of,
        &format!("player {i}: the objective"),
    )?;

    Ok(DenseSquareProgram {
        n,
        lower: set.lower.clone(),
        upper: set.upper.clone(),
        linear: set
            .linear
            .iter()
            .map(|row| (row.coeffs.clone(), row.sense, row.rhs))
            .collect(),
        rows,
        objective,
    })
}

pub fn solve(game: &GameInstance, i: usize, x: &[f64]) -> Result<OracleResult> {
    let prog = build_program(game, i, x)?;
    let outcome = solve_square_program(
        &prog,
        game.tolerances.linear,
        game.tolerances.nonlinear,
        &format!("network oracle for player {i}"),
    )?;
    Ok(match outcome {
        SbbOutcome::Optimal { value, point } => OracleResult::finite(value, point),
        SbbOutcome::Infeasible => OracleResult::infeasible(),
        SbbOutcome::Unbounded => OracleResult::unbounded(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expression;
    use crate::model::{
        FeasibleSet, GameInstance, LinearConstraint, MuMeasure, NonlinearConstraint,
        OracleBinding, Player, Sense, ToleranceConfig,
    };
    use crate::oracles::solve_player;
    use crate::ExtReal;

    fn yv(j: usize) -> Expression {
        Expression::SVar(j)
    }

    fn network_game(objective: Expression, set: FeasibleSet) -> GameInstance {
        GameInstance {
            name: "network-test".to_string(),
            n0: 1,
            x_set: FeasibleSet::boxed(vec![0.0], vec![1.0]),
            players: vec![Player {
                id: "tso".to_string(),
                n: set.n,
                objective,
                feasible_set: set,
                joint_feasible: None,
                oracle: OracleBinding::TreeTransmission,
                price_taking_form: None,
            }],
            global_constraints: vec![],
            mu: MuMeasure::Sum,
            tolerances: ToleranceConfig::default(),
            x0: None,
            price_box: None,
        }
    }

    /// Pressure-drop row `lhs_pressure - rhs_pressure - w * flow^2 = 0`
    /// over set-local variables.
    fn drop_row(p_hi: usize, p_lo: usize, w: f64, flow: usize) -> NonlinearConstraint {
        NonlinearConstraint {
            expr: Expression::Add(vec![
                yv(p_hi),
                Expression::scaled(-1.0, yv(p_lo)),
                Expression::scaled(-w, Expression::Square(Box::new(yv(flow)))),
            ]),
            sense: Sense::Eq,
        }
    }

    #[test]
    fn single_pipe_ships_to_the_pressure_limit() {
        // Variables: flow, squared head pressure, squared tail
        // pressure. Pressure span 100 allows flow 10 at most.
        let mut set = FeasibleSet::boxed(vec![0.0, 0.0, 0.0], vec![20.0, 100.0, 100.0]);
        set.nonlinear.push(drop_row(1, 2, 1.0, 0));
        let objective = Expression::scaled(-1.0, Expression::PVar(0, 0));
        let g = network_game(objective, set);
        let r = solve_player(&g, 0, &[0.0], None).unwrap();
        let ExtReal::Finite(v) = r.value else {
            panic!("expected a finite transport optimum, got {:?}", r.value)
        };
        assert!((v + 10.0).abs() <= 1e-6, "value {v}");
        let y = r.minimizer.unwrap();
        assert!((y[0] - 10.0).abs() <= 1e-4, "flow {}", y[0]);
    }

    #[test]
    fn corridor_balances_flows_and_pressure_drops() {
        // Two pipes in series with a unit offtake between them:
        // f1 = f2 + 1, 25 - p1 = f1^2, p1 - p2 = f2^2, p2 >= 0.
        // Shipping the most gives f2 = 3 (so f1 = 4, p1 = 9, p2 = 0).
        let mut set = FeasibleSet::boxed(
            vec![0.0, 0.0, 25.0, 0.0, 0.0],
            vec![5.0, 5.0, 25.0, 25.0, 25.0],
        );
        set.linear.push(LinearConstraint {
            coeffs: vec![1.0, -1.0, 0.0, 0.0, 0.0],
            sense: Sense::Eq,
            rhs: 1.0,
        });
        set.nonlinear.push(drop_row(2, 3, 1.0, 0));
        set.nonlinear.push(drop_row(3, 4, 1.0, 1));
        let objective = Expression::scaled(-1.0, Expression::PVar(0, 1));
        let g = network_game(objective, set);
        let r = solve_player(&g, 0, &[0.0], None).unwrap();
        let ExtReal::Finite(v) = r.value else {
            panic!("expected a finite optimum, got {:?}", r.value)
        };
        assert!((v + 3.0).abs() <= 1e-6, "value {v}");
        let y = r.minimizer.unwrap();
        assert!((y[0] - 4.0).abs() <= 1e-4, "f1 {}", y[0]);
        assert!((y[1] - 3.0).abs() <= 1e-4, "f2 {}", y[1]);
    }

    #[test]
    fn reports_an_overconstrained_pipe_as_infeasible() {
        // Required flow 2 needs a drop of 4 but the pressure box only
        // spans 3.
        let mut set = FeasibleSet::boxed(vec![2.0, 0.0, 0.0], vec![2.0, 3.0, 3.0]);
        set.nonlinear.push(drop_row(1, 2, 1.0, 0));
        let objective = Expression::PVar(0, 0);
        let g = network_game(objective, set);
        let r = solve_player(&g, 0, &[0.0], None).unwrap();
        assert_eq!(r.value, ExtReal::PosInf);
    }

    #[test]
    fn quadratic_objective_terms_ride_the_same_lift() {
        // min (f - 2)^2 subject to an achievable drop: optimum f = 2.
        let mut set = FeasibleSet::boxed(vec![0.0, 0.0, 0.0], vec![5.0, 25.0, 25.0]);
        set.nonlinear.push(drop_row(1, 2, 1.0, 0));
        let objective = Expression::Square(Box::new(Expression::Add(vec![
            Expression::PVar(0, 0),
            Expression::Const(-2.0),
        ])));
        let g = network_game(objective, set);
        let r = solve_player(&g, 0, &[0.0], None).unwrap();
        let ExtReal::Finite(v) = r.value else {
            panic!("expected a finite optimum, got {:?}", r.value)
        };
        assert!(v.abs() <= 1e-6, "value {v}");
        let y = r.minimizer.unwrap();
        assert!((y[0] - 2.0).abs() <= 1e-3, "flow {}", y[0]);
    }

    #[test]
    fn rejects_cross_products_and_integrality() {
        let mut set = FeasibleSet::boxed(vec![0.0, 0.0], vec![1.0, 1.0]);
        set.nonlinear.push(NonlinearConstraint {
            expr: Expression::Mul(vec![yv(0), yv(1)]),
            sense: Sense::Le,
        });
        let g = network_game(Expression::PVar(0, 0), set);
        assert!(matches!(
            solve_player(&g, 0, &[0.0], None),
            Err(Error::UnsupportedStructure(_))
        ));

        let mut set = FeasibleSet::boxed(vec![0.0, 0.0], vec![1.0, 1.0]);
        set.integral[0] = true;
        set.nonlinear.push(NonlinearConstraint {
            expr: Expression::Square(Box::new(yv(1))),
            sense: Sense::Le,
        });
        let g = network_game(Expression::PVar(0, 0), set);
        assert!(matches!(
            solve_player(&g, 0, &[0.0], None),
            Err(Error::UnsupportedStructure(_))
        ));
    }
}
