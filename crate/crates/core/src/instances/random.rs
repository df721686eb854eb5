//! Seeded random game generators for cross-checking the solvers
//! against brute-force enumeration.
//!
//! Two families:
//!
//! * [`generate_random_finite_game`] builds small finite games: one
//!   integral shared variable on a grid, one integral strategy
//!   variable per player, quadratic integer payoffs, and optional
//!   joint rows anchored at a sampled lattice point so the joint set
//!   is never empty. Integer coefficients on integer lattices make
//!   every payoff, and hence the minimum disequilibrium, an integer:
//!   a game either has an equilibrium or misses one by at least a
//!   whole unit, so solver and brute-force verdicts can be compared
//!   without tolerance ambiguity.
//!
//! * [`random_convex_price_taking_game`] builds linear price-taking
//!   economies: free shared prices, box-constrained continuous
//!   players, linear private costs, linear coupling quantities, and
//!   one balance row per price. Zero is always jointly feasible and
//!   linear programming duality makes the minimum disequilibrium
//!   exactly zero, so the primal value and the dual climb must meet.
//!
//! Both draw from a counter-based generator seeded explicitly;
//! separate streams keep structure, payoffs, and constraint draws
//! independent of each other so a game is a pure function of its
//! seed.

use crate::expr::Expression;
use crate::model::{
    FeasibleSet, GameInstance, GlobalConstraint, MuMeasure, OracleBinding, Player,
    PriceTakingForm, Sense, ToleranceConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream ids for the independent draw sequences of one seed.
const STREAM_STRUCTURE: u64 = 0;
const STREAM_PAYOFFS: u64 = 1;
const STREAM_ROWS: u64 = 2;
const STREAM_PRICE_TAKING: u64 = 7;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Shape of one random finite game: how many players, how large the
/// grids are, and how the gaps are aggregated.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomFiniteGameSpec {
    pub seed: u64,
    pub num_players: usize,
    /// Lattice points of the shared variable: `x in {0, ..., levels-1}`.
    pub shared_levels: usize,
    /// Lattice points of each player's strategy variable.
    pub strategy_levels: Vec<usize>,
    /// Number of joint constraint rows over `(x, y)`.
    pub joint_rows: usize,
    /// Positive per-player weights for a weighted-sum measure, `None`
    /// for the plain sum.
    pub weights: Option<Vec<f64>>,
}

impl RandomFiniteGameSpec {
    /// Draws a game shape from the seed: one to three players, a
    /// shared grid of up to twenty points, up to six strategy levels
    /// each, up to two joint rows, and occasionally a weighted
    /// measure.
    pub fn sample(seed: u64) -> Self {
        let mut rng = rng_for(seed, STREAM_STRUCTURE);
        let num_players = rng.gen_range(1..=3);
        let shared_levels = rng.gen_range(2..=20);
        let strategy_levels = (0..num_players).map(|_| rng.gen_range(2..=6)).collect();
        let joint_rows = rng.gen_range(0..=2);
        let weights = if rng.gen_ratio(1, 4) {
            Some(
                (0..num_players)
                    .map(|_| rng.gen_range(1..=3) as f64)
                    .collect(),
            )
        } else {
            None
        };
        RandomFiniteGameSpec {
            seed,
            num_players,
            shared_levels,
            strategy_levels,
            joint_rows,
            weights,
        }
    }
}

/// Builds the finite game a spec describes. Player `i` minimizes
/// `alpha y + beta y^2 + gamma x y + delta x` with integer
/// coefficients in `[-3, 3]`; joint rows have integer coefficients in
/// `[-2, 2]` and are anchored at a sampled lattice point, which
/// therefore stays feasible.
pub fn generate_random_finite_game(spec: &RandomFiniteGameSpec) -> GameInstance {
    let mut payoffs = rng_for(spec.seed, STREAM_PAYOFFS);
    let players = (0..spec.num_players)
        .map(|i| {
            let alpha = payoffs.gen_range(-3..=3) as f64;
            let beta = payoffs.gen_range(-3..=3) as f64;
            let gamma = payoffs.gen_range(-3..=3) as f64;
            let delta = payoffs.gen_range(-3..=3) as f64;
            Player {
                id: format!("player{}", i + 1),
                n: 1,
                objective: Expression::add_all(vec![
                    Expression::scaled(alpha, Expression::PVar(i, 0)),
                    Expression::scaled(beta, Expression::Square(Box::new(Expression::PVar(i, 0)))),
                    Expression::scaled(
                        gamma,
                        Expression::Mul(vec![Expression::SVar(0), Expression::PVar(i, 0)]),
                    ),
                    Expression::scaled(delta, Expression::SVar(0)),
                ]),
                feasible_set: FeasibleSet::integer_box(
                    vec![0.0],
                    vec![(spec.strategy_levels[i] - 1) as f64],
                ),
                joint_feasible: None,
                oracle: OracleBinding::Enumeration,
                price_taking_form: None,
            }
        })
        .collect();

    let mut rows = rng_for(spec.seed, STREAM_ROWS);
    let anchor_x = rows.gen_range(0..spec.shared_levels) as f64;
    let anchor_y: Vec<f64> = (0..spec.num_players)
        .map(|i| rows.gen_range(0..spec.strategy_levels[i]) as f64)
        .collect();
    let global_constraints = (0..spec.joint_rows)
        .map(|_| {
            let cx = rows.gen_range(-2..=2) as f64;
            let cy: Vec<f64> = (0..spec.num_players)
                .map(|_| rows.gen_range(-2..=2) as f64)
                .collect();
            let equality = rows.gen_ratio(1, 4);
            let at_anchor =
                cx * anchor_x + cy.iter().zip(&anchor_y).map(|(c, y)| c * y).sum::<f64>();
            let rhs = if equality {
                at_anchor
            } else {
                at_anchor + rows.gen_range(0..=3) as f64
            };
            let mut terms = vec![Expression::scaled(cx, Expression::SVar(0))];
            for (i, c) in cy.iter().enumerate() {
                terms.push(Expression::scaled(*c, Expression::PVar(i, 0)));
            }
            terms.push(Expression::Const(-rhs));
            GlobalConstraint {
                expr: Expression::add_all(terms),
                sense: if equality { Sense::Eq } else { Sense::Le },
            }
        })
        .collect();

    GameInstance {
        name: format!("random-{}", spec.seed),
        n0: 1,
        x_set: FeasibleSet::integer_box(vec![0.0], vec![(spec.shared_levels - 1) as f64]),
        players,
        global_constraints,
        mu: match &spec.weights {
            Some(w) => MuMeasure::WeightedSum(w.clone()),
            None => MuMeasure::Sum,
        },
        tolerances: ToleranceConfig::default(),
        x0: None,
        price_box: None,
    }
}

/// Builds a linear price-taking economy that provably has a
/// generalized equilibrium: one or two free prices, two or three
/// box-constrained continuous players with linear costs and linear
/// coupling quantities, and one balance row per price formed as the
/// exact sum of the coupled quantities. The declared split is
/// attached so detection can cross-check it.
pub fn random_convex_price_taking_game(seed: u64) -> GameInstance {
    let mut rng = rng_for(seed, STREAM_PRICE_TAKING);
    let n0 = rng.gen_range(1..=2);
    let num_players = rng.gen_range(2..=3);
    let dims: Vec<usize> = (0..num_players).map(|_| rng.gen_range(1..=2)).collect();
    let uppers: Vec<Vec<f64>> = dims
        .iter()
        .map(|&n| (0..n).map(|_| rng.gen_range(1..=5) as f64).collect())
        .collect();
    let costs: Vec<Vec<f64>> = dims
        .iter()
        .map(|&n| (0..n).map(|_| rng.gen_range(-3..=3) as f64).collect())
        .collect();
    let mut couplings: Vec<Vec<Vec<f64>>> = dims
        .iter()
        .map(|&n| {
            (0..n0)
                .map(|_| (0..n).map(|_| rng.gen_range(-2..=2) as f64).collect())
                .collect()
        })
        .collect();
    for k in 0..n0 {
        let coupled = couplings
            .iter()
            .any(|c| c[k].iter().any(|&v| v != 0.0));
        if !coupled {
            couplings[0][k][0] = 1.0;
        }
    }

    let linear_in_own = |i: usize, coeffs: &[f64]| {
        Expression::add_all(
            coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(j, c)| Expression::scaled(*c, Expression::PVar(i, j)))
                .collect(),
        )
    };

    let players = (0..num_players)
        .map(|i| {
            let mut terms = Vec::new();
            for (j, c) in costs[i].iter().enumerate() {
                if *c != 0.0 {
                    terms.push(Expression::scaled(*c, Expression::PVar(i, j)));
                }
            }
            for (k, row) in couplings[i].iter().enumerate() {
                for (j, c) in row.iter().enumerate() {
                    if *c != 0.0 {
                        terms.push(Expression::scaled(
                            *c,
                            Expression::Mul(vec![Expression::SVar(k), Expression::PVar(i, j)]),
                        ));
                    }
                }
            }
            Player {
                id: format!("firm{}", i + 1),
                n: dims[i],
                objective: Expression::add_all(terms),
                feasible_set: FeasibleSet::boxed(vec![0.0; dims[i]], uppers[i].clone()),
                joint_feasible: None,
                oracle: OracleBinding::BoxLp,
                price_taking_form: Some(PriceTakingForm {
                    ga: linear_in_own(i, &costs[i]),
                    gb: (0..n0).map(|k| linear_in_own(i, &couplings[i][k])).collect(),
                }),
            }
        })
        .collect();

    let global_constraints = (0..n0)
        .map(|k| {
            let mut terms = Vec::new();
            for (i, coupling) in couplings.iter().enumerate() {
                for (j, c) in coupling[k].iter().enumerate() {
                    if *c != 0.0 {
                        terms.push(Expression::scaled(*c, Expression::PVar(i, j)));
                    }
                }
            }
            GlobalConstraint {
                expr: Expression::add_all(terms),
                sense: Sense::Eq,
            }
        })
        .collect();

    GameInstance {
        name: format!("random-ptg-{seed}"),
        n0,
        x_set: FeasibleSet::free(n0),
        players,
        global_constraints,
        mu: MuMeasure::Sum,
        tolerances: ToleranceConfig::default(),
        x0: None,
        price_box: Some((vec![-50.0; n0], vec![50.0; n0])),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cga::{certify_equilibrium, solve_md, CgaOptions, SolveStatus};
    use crate::ext::ExtReal;
    use crate::instances::brute_force_md;
    use crate::pricetaking::{solve_min_disequilibrium, PrimalDualOptions};

    #[test]
    fn generation_is_a_pure_function_of_the_seed() {
        for seed in [0_u64, 1, 17, 991] {
            let spec = RandomFiniteGameSpec::sample(seed);
            assert_eq!(spec, RandomFiniteGameSpec::sample(seed));
            let game = generate_random_finite_game(&spec);
            assert_eq!(game, generate_random_finite_game(&spec));
            game.validate().unwrap();
            let ptg = random_convex_price_taking_game(seed);
            assert_eq!(ptg, random_convex_price_taking_game(seed));
            ptg.validate().unwrap();
        }
    }

    #[test]
    fn anchoring_keeps_the_joint_set_nonempty() {
        for seed in 0..25_u64 {
            let game = generate_random_finite_game(&RandomFiniteGameSpec::sample(seed));
            let brute = brute_force_md(&game, 1_000_000).unwrap();
            assert_ne!(
                brute.value,
                ExtReal::PosInf,
                "seed {seed} produced an empty joint set"
            );
        }
    }

    #[test]
    fn solver_agrees_with_brute_force_on_sample_seeds() {
        for seed in 0..6_u64 {
            let game = generate_random_finite_game(&RandomFiniteGameSpec::sample(seed));
            let brute = brute_force_md(&game, 1_000_000).unwrap();
            let report = solve_md(&game, None, &CgaOptions::default()).unwrap();
            let exact = brute.value.finite().unwrap();
            let solved = report.disequilibrium.unwrap();
            assert!(
                (exact - solved).abs() <= 1e-6,
                "seed {seed}: brute force {exact}, solver {solved}"
            );
            assert_eq!(
                report.status == SolveStatus::EquilibriumFound,
                exact == 0.0,
                "seed {seed}: status {} against exact value {exact}",
                report.status
            );
        }
    }

    #[test]
    fn convex_economies_close_the_primal_dual_gap() {
        for seed in 0..4_u64 {
            let game = random_convex_price_taking_game(seed);
            let report =
                solve_min_disequilibrium(&game, None, &PrimalDualOptions::default()).unwrap();
            assert_eq!(report.status, SolveStatus::EquilibriumFound, "seed {seed}");
            assert!(
                (report.primal_value - report.dual_value).abs() <= 1e-6,
                "seed {seed}: primal {} dual {}",
                report.primal_value,
                report.dual_value
            );
            let check = certify_equilibrium(&game, &report.point, None, 1e-6).unwrap();
            assert!(check.certified, "seed {seed}: gaps {:?}", check.player_gaps);
        }
    }
}
