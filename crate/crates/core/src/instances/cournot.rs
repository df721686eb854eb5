//! Two-producer entry game with integer quantities.
//!
//! Each producer chooses whether to put one unit on the market, and
//! its payoff improves both with its own sale and with the rival's
//! committed quantity, which it sees through a shared copy variable.
//! Producing is a dominant strategy, so the unique equilibrium has
//! both quantities at one. The instance is small enough to enumerate
//! by hand, which makes it the reference fixture for the
//! constraint-generation loop: seeded with zero-quantity cut pools the
//! loop reports a first lower bound of -2 and converges to the
//! equilibrium in a single iteration.

use super::{ExpectedEntry, ExpectedValue, ExpectedValues, Provenance};
use crate::expr::Expression;
use crate::model::{
    FeasibleSet, GameInstance, GlobalConstraint, MuMeasure, OracleBinding, Player, Sense,
    ToleranceConfig,
};

/// Builds the two-producer entry game. Shared variables copy the two
/// quantities; each producer minimizes `-y_i - x_other` over the
/// integer box `[0, 1.1]`.
pub fn cournot() -> GameInstance {
    let producer = |i: usize| Player {
        id: format!("producer{}", i + 1),
        n: 1,
        objective: Expression::add_all(vec![
            Expression::scaled(-1.0, Expression::PVar(i, 0)),
            Expression::scaled(-1.0, Expression::SVar(1 - i)),
        ]),
        feasible_set: FeasibleSet::integer_box(vec![0.0], vec![1.1]),
        joint_feasible: None,
        oracle: OracleBinding::Enumeration,
        price_taking_form: None,
    };
    let copy_row = |i: usize| GlobalConstraint {
        expr: Expression::add_all(vec![
            Expression::SVar(i),
            Expression::scaled(-1.0, Expression::PVar(i, 0)),
        ]),
        sense: Sense::Eq,
    };
    GameInstance {
        name: "cournot".to_string(),
        n0: 2,
        x_set: FeasibleSet::boxed(vec![0.0, 0.0], vec![1.1, 1.1]),
        players: vec![producer(0), producer(1)],
        global_constraints: vec![copy_row(0), copy_row(1)],
        mu: MuMeasure::Sum,
        tolerances: ToleranceConfig::default(),
        x0: None,
        price_box: None,
    }
}

/// Reference values for [`cournot`], each derived by hand from the
/// four-point lattice before any solver ran.
pub fn cournot_expected() -> ExpectedValues {
    let enumeration = "exhaustive enumeration of the four lattice points of the game";
    ExpectedValues {
        instance: "cournot".to_string(),
        entries: vec![
            ExpectedEntry {
                name: "disequilibrium".to_string(),
                value: ExpectedValue::Scalar(0.0),
                tolerance: 1e-9,
                provenance: Provenance::Derived,
                citation: enumeration.to_string(),
            },
            ExpectedEntry {
                name: "equilibrium-x".to_string(),
                value: ExpectedValue::Vector(vec![1.0, 1.0]),
                tolerance: 1e-9,
                provenance: Provenance::Derived,
                citation: enumeration.to_string(),
            },
            ExpectedEntry {
                name: "equilibrium-dispatch".to_string(),
                value: ExpectedValue::Blocks(vec![vec![1.0], vec![1.0]]),
                tolerance: 1e-9,
                provenance: Provenance::Derived,
                citation: enumeration.to_string(),
            },
            ExpectedEntry {
                name: "seeded-first-lower-bound".to_string(),
                value: ExpectedValue::Scalar(-2.0),
                tolerance: 1e-9,
                provenance: Provenance::Derived,
                citation: "hand solve of the pooled relaxation seeded with zero-quantity cuts: \
                           both producers at one unit with cut values -1 each"
                    .to_string(),
            },
            ExpectedEntry {
                name: "seeded-iterations".to_string(),
                value: ExpectedValue::Scalar(1.0),
                tolerance: 0.0,
                provenance: Provenance::Derived,
                citation: "hand trace of the constraint-generation loop from zero-quantity \
                           seed pools; the first candidate already has zero disequilibrium"
                    .to_string(),
            },
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cga::{run, solve_md, CgaOptions, SolveStatus};
    use crate::ext::ExtReal;
    use crate::instances::brute_force_md;
    use crate::oracles::CutPools;

    #[test]
    fn brute_force_confirms_the_unique_equilibrium() {
        let game = cournot();
        game.validate().unwrap();
        let expected = cournot_expected();
        let out = brute_force_md(&game, 1_000_000).unwrap();
        assert_eq!(
            out.value,
            ExtReal::Finite(expected.scalar("disequilibrium").unwrap())
        );
        assert_eq!(out.minimizers.len(), 1);
        assert_eq!(out.minimizers[0].x, expected.vector("equilibrium-x").unwrap());
        assert_eq!(
            out.minimizers[0].y,
            expected.blocks("equilibrium-dispatch").unwrap()
        );
    }

    #[test]
    fn seeded_run_reports_minus_two_then_converges_in_one_iteration() {
        let game = cournot();
        let expected = cournot_expected();
        let mut pools = CutPools::new(2);
        assert!(pools.add(0, vec![0.0]));
        assert!(pools.add(1, vec![0.0]));
        let report = run(&game, &mut pools, None, &CgaOptions::default()).unwrap();
        assert_eq!(report.status, SolveStatus::EquilibriumFound);
        assert_eq!(report.iterations, 1);
        assert_eq!(report.records.len(), 1);
        assert_eq!(
            report.records[0].lower,
            ExtReal::Finite(expected.scalar("seeded-first-lower-bound").unwrap())
        );
        assert_eq!(report.records[0].cuts_added, 2);
        assert_eq!(report.disequilibrium, Some(0.0));
        assert!(report.exact);
        assert!(!report.no_equilibrium_certified);
        let point = report.point.unwrap();
        assert_eq!(point.x, expected.vector("equilibrium-x").unwrap());
        assert_eq!(point.y, expected.blocks("equilibrium-dispatch").unwrap());
    }

    #[test]
    fn default_solve_finds_the_same_equilibrium() {
        let game = cournot();
        let report = solve_md(&game, None, &CgaOptions::default()).unwrap();
        assert_eq!(report.status, SolveStatus::EquilibriumFound);
        assert_eq!(report.iterations, 1);
        assert_eq!(report.disequilibrium, Some(0.0));
        let point = report.point.unwrap();
        assert_eq!(point.x, vec![1.0, 1.0]);
        assert_eq!(point.y, vec![vec![1.0], vec![1.0]]);
    }
}
