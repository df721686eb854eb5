//! Single-period unit commitment game with three producers.
//!
//! The shared variables are a market price `x[0]` and a total traded
//! quantity `x[1]`, tied together by the affine inverse demand curve
//! `x[0] = 200 - 0.2 x[1]` and by the balance row `x[1] = sum_i y_i^c`.
//! Each producer controls a binary commitment switch `y_i^b` and a
//! continuous output `y_i^c` that must sit in `[CL_i, CU_i]` when the
//! switch is on and at zero when it is off. Producer `i` minimizes
//!
//! `a_i y_i^c + (c_i / 2) (y_i^c)^2 + b_i y_i^b - x[0] y_i^c`,
//!
//! its dispatch cost minus market revenue at the posted price.
//!
//! The game has no equilibrium: at every market-clearing price some
//! committed producer regrets its dispatch. The least possible total
//! regret is `931.40625`, attained at price `39.5` with quantity
//! `802.5` and dispatch `(502.5, 0, 300)`; producer one would rather
//! sell `590` and producer three would rather shut down. Those values
//! come from solving each commitment pattern's dispatch program in
//! closed form, and the tests freeze them before any solver runs.

use super::{ExpectedEntry, ExpectedValue, ExpectedValues, Provenance};
use crate::expr::Expression;
use crate::model::{
    FeasibleSet, GameInstance, GlobalConstraint, LinearConstraint, MuMeasure, OracleBinding,
    Player, Sense, ToleranceConfig,
};

/// Marginal cost intercepts `a_i`.
const A: [f64; 3] = [10.0, 45.0, 35.0];
/// Quadratic cost coefficients `c_i`.
const C: [f64; 3] = [0.05, 0.1, 0.002];
/// Commitment (no-load) costs `b_i`.
const B: [f64; 3] = [4000.0, 100.0, 2000.0];
/// Minimum stable outputs `CL_i` when committed.
const CAP_LOWER: [f64; 3] = [400.0, 200.0, 300.0];
/// Maximum outputs `CU_i`.
const CAP_UPPER: [f64; 3] = [600.0, 250.0, 500.0];
/// Inverse demand intercept and slope: `price = 200 - 0.2 quantity`.
const DEMAND_INTERCEPT: f64 = 200.0;
const DEMAND_SLOPE: f64 = 0.2;
/// Quantity ceiling, the demand at price zero.
const QUANTITY_MAX: f64 = 1350.0;

/// Builds the three-producer unit commitment game.
pub fn uc() -> GameInstance {
    let producer = |i: usize| Player {
        id: format!("producer{}", i + 1),
        n: 2,
        objective: Expression::add_all(vec![
            Expression::scaled(A[i], Expression::PVar(i, 1)),
            Expression::scaled(0.5 * C[i], Expression::Square(Box::new(Expression::PVar(i, 1)))),
            Expression::scaled(B[i], Expression::PVar(i, 0)),
            Expression::scaled(
                -1.0,
                Expression::Mul(vec![Expression::SVar(0), Expression::PVar(i, 1)]),
            ),
        ]),
        feasible_set: FeasibleSet {
            n: 2,
            lower: vec![0.0, 0.0],
            upper: vec![1.0, CAP_UPPER[i]],
            integral: vec![true, false],
            linear: vec![
                LinearConstraint {
                    coeffs: vec![CAP_LOWER[i], -1.0],
                    sense: Sense::Le,
                    rhs: 0.0,
                },
                LinearConstraint {
                    coeffs: vec![-CAP_UPPER[i], 1.0],
                    sense: Sense::Le,
                    rhs: 0.0,
                },
            ],
            nonlinear: Vec::new(),
        },
        joint_feasible: None,
        oracle: OracleBinding::MixedBinarySepQp,
        price_taking_form: None,
    };
    GameInstance {
        name: "uc".to_string(),
        n0: 2,
        x_set: FeasibleSet::boxed(
            vec![f64::NEG_INFINITY, 0.0],
            vec![f64::INFINITY, QUANTITY_MAX],
        ),
        players: vec![producer(0), producer(1), producer(2)],
        global_constraints: vec![
            GlobalConstraint {
                expr: Expression::add_all(vec![
                    Expression::SVar(0),
                    Expression::Const(-DEMAND_INTERCEPT),
                    Expression::scaled(DEMAND_SLOPE, Expression::SVar(1)),
                ]),
                sense: Sense::Eq,
            },
            GlobalConstraint {
                expr: Expression::add_all(vec![
                    Expression::SVar(1),
                    Expression::scaled(-1.0, Expression::PVar(0, 1)),
                    Expression::scaled(-1.0, Expression::PVar(1, 1)),
                    Expression::scaled(-1.0, Expression::PVar(2, 1)),
                ]),
                sense: Sense::Eq,
            },
        ],
        mu: MuMeasure::Sum,
        tolerances: ToleranceConfig::default(),
        x0: Some(vec![180.0, 100.0]),
        price_box: None,
    }
}

/// Reference values for [`uc`]. The producer data comes from the
/// single-period unit commitment example of Fuller and Celebi (2017);
/// the solution values are closed-form best responses and dispatch
/// optima worked out per commitment pattern, frozen here before any
/// solver ran.
pub fn uc_expected() -> ExpectedValues {
    let data = "single-period unit commitment example of Fuller and Celebi (2017)";
    let seed_responses = "per producer, the committed quadratic's stationary output clipped to \
                          capacity at the seed price 180; every producer commits";
    let market = "closed-form dispatch optimum of each commitment pattern, compared across \
                  all eight patterns";
    ExpectedValues {
        instance: "uc".to_string(),
        entries: vec![
            ExpectedEntry {
                name: "initial-guess".to_string(),
                value: ExpectedValue::Vector(vec![180.0, 100.0]),
                tolerance: 0.0,
                provenance: Provenance::Defined,
                citation: data.to_string(),
            },
            ExpectedEntry {
                name: "responses-at-initial-guess".to_string(),
                value: ExpectedValue::Blocks(vec![
                    vec![1.0, 600.0],
                    vec![1.0, 250.0],
                    vec![1.0, 500.0],
                ]),
                tolerance: 1e-9,
                provenance: Provenance::Derived,
                citation: seed_responses.to_string(),
            },
            ExpectedEntry {
                name: "response-values-at-initial-guess".to_string(),
                value: ExpectedValue::Vector(vec![-89000.0, -30525.0, -70250.0]),
                tolerance: 1e-9,
                provenance: Provenance::Derived,
                citation: seed_responses.to_string(),
            },
            ExpectedEntry {
                name: "disequilibrium".to_string(),
                value: ExpectedValue::Scalar(931.40625),
                tolerance: 0.01,
                provenance: Provenance::Derived,
                citation: market.to_string(),
            },
            ExpectedEntry {
                name: "market-point".to_string(),
                value: ExpectedValue::Vector(vec![39.5, 802.5]),
                tolerance: 1e-6,
                provenance: Provenance::Derived,
                citation: market.to_string(),
            },
            ExpectedEntry {
                name: "dispatch".to_string(),
                value: ExpectedValue::Blocks(vec![
                    vec![1.0, 502.5],
                    vec![0.0, 0.0],
                    vec![1.0, 300.0],
                ]),
                tolerance: 1e-4,
                provenance: Provenance::Derived,
                citation: market.to_string(),
            },
            ExpectedEntry {
                name: "player-gaps".to_string(),
                value: ExpectedValue::Vector(vec![191.40625, 0.0, 740.0]),
                tolerance: 1e-6,
                provenance: Provenance::Derived,
                citation: "objective at the least-regret dispatch minus the closed-form best \
                           response at price 39.5, per producer"
                    .to_string(),
            },
            ExpectedEntry {
                name: "best-responses-at-market-point".to_string(),
                value: ExpectedValue::Vector(vec![-4702.5, 0.0, 0.0]),
                tolerance: 1e-6,
                provenance: Provenance::Derived,
                citation: "closed-form best responses at price 39.5: producer one sells 590, \
                           the others shut down or break even"
                    .to_string(),
            },
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cga::{certify_equilibrium, solve_md, CgaOptions, SolveStatus};
    use crate::ext::ExtReal;
    use crate::model::GamePoint;
    use crate::oracles::solve_player;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn assert_vec_close(got: &[f64], want: &[f64], tol: f64) {
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert!(close(*g, *w, tol), "got {got:?}, want {want:?}");
        }
    }

    #[test]
    fn oracles_match_the_closed_form_responses() {
        let game = uc();
        game.validate().unwrap();
        let exp = uc_expected();
        exp.validate().unwrap();

        let seed = exp.vector("initial-guess").unwrap();
        assert_eq!(game.x0.as_deref(), Some(seed));
        let values = exp.vector("response-values-at-initial-guess").unwrap();
        let blocks = exp.blocks("responses-at-initial-guess").unwrap();
        let tol = exp.tolerance("responses-at-initial-guess").unwrap();
        for i in 0..3 {
            let r = solve_player(&game, i, seed, None).unwrap();
            let v = r.value.finite().unwrap();
            assert!(close(v, values[i], 1e-9), "producer {i}: {v}");
            assert_vec_close(&r.minimizer.unwrap(), &blocks[i], tol);
        }

        let market = exp.vector("market-point").unwrap();
        let best = exp.vector("best-responses-at-market-point").unwrap();
        for i in 0..3 {
            let r = solve_player(&game, i, market, None).unwrap();
            let v = r.value.finite().unwrap();
            assert!(close(v, best[i], 1e-7), "producer {i}: {v} vs {}", best[i]);
        }
        let r = solve_player(&game, 0, market, None).unwrap();
        assert_vec_close(&r.minimizer.unwrap(), &[1.0, 590.0], 1e-7);
    }

    #[test]
    fn constraint_generation_pins_the_minimum_disequilibrium() {
        let game = uc();
        let exp = uc_expected();
        let report = solve_md(&game, None, &CgaOptions::default()).unwrap();

        assert_eq!(report.status, SolveStatus::MdExact);
        assert!(report.exact);
        assert!(report.no_equilibrium_certified);
        assert!(report.iterations <= 10, "took {} iterations", report.iterations);

        let delta = report.disequilibrium.unwrap();
        assert!(close(delta, exp.scalar("disequilibrium").unwrap(), 1e-6));

        let point = report.point.unwrap();
        assert_vec_close(&point.x, exp.vector("market-point").unwrap(), 1e-6);
        let dispatch = exp.blocks("dispatch").unwrap();
        for (block, want) in point.y.iter().zip(dispatch) {
            assert_vec_close(block, want, 1e-4);
        }
        assert_vec_close(
            &report.player_gaps.unwrap(),
            exp.vector("player-gaps").unwrap(),
            1e-6,
        );

        match report.lower_bound {
            ExtReal::Finite(lower) => assert!(lower > 1e-6 && lower <= delta + 1e-6),
            other => panic!("expected a finite lower bound, got {other:?}"),
        }
    }

    #[test]
    fn certification_rejects_the_least_regret_point() {
        let game = uc();
        let exp = uc_expected();
        let point = GamePoint::new(
            exp.vector("market-point").unwrap().to_vec(),
            exp.blocks("dispatch").unwrap().to_vec(),
        );
        let check = certify_equilibrium(&game, &point, None, 1e-6).unwrap();
        assert!(check.violations.is_empty());
        assert!(!check.certified);
        assert_vec_close(&check.player_gaps, exp.vector("player-gaps").unwrap(), 1e-6);
        let best: Vec<f64> = check
            .best_response_values
            .iter()
            .map(|v| v.finite().unwrap())
            .collect();
        assert_vec_close(
            &best,
            exp.vector("best-responses-at-market-point").unwrap(),
            1e-6,
        );
    }

    #[test]
    fn certificate_mode_stops_at_a_positive_lower_bound() {
        let game = uc();
        let options = CgaOptions {
            stop_on_certificate: true,
            ..CgaOptions::default()
        };
        let report = solve_md(&game, None, &options).unwrap();
        assert_eq!(report.status, SolveStatus::NoEquilibriumCertified);
        assert!(report.no_equilibrium_certified);
        assert!(report.iterations <= 10);
        match report.lower_bound {
            ExtReal::Finite(lower) => assert!(lower > 1e-6),
            other => panic!("expected a finite lower bound, got {other:?}"),
        }
    }
}
