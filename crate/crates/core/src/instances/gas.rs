//! Twenty-node natural gas market: a pipeline operator, six suppliers,
//! and nine on/off consumers trading at nodal prices.
//!
//! The network is a tree of nineteen pipes. Gas physics enters through
//! the Weymouth relation in squared pressures: along a pipe from `k`
//! to `k'` carrying flow `f`, `p_k - p_k' = (f / w)^2`, so gas only
//! moves down the pressure gradient. Every node's squared pressure
//! must stay in `[900, 4900]`.
//!
//! The shared variables are the twenty nodal prices. Each player takes
//! them as given:
//!
//! * the pipeline (one player, 39 variables: 20 squared pressures and
//!   19 flows) buys at a pipe's tail and sells at its head, earning
//!   the price spread on every unit moved, subject to the Weymouth
//!   rows and the pressure window;
//! * each supplier sells up to its capacity at its node, paying a
//!   constant unit sourcing cost;
//! * each consumer either stays off or connects (a binary switch with
//!   a fixed deliverability charge) and then buys up to its capacity,
//!   valuing gas at a constant unit utility.
//!
//! One balance row per node clears the market: deliveries plus
//! outbound pipe flows equal supply plus inbound flows. This is
//! exactly the structure the price-taking solver detects, and every
//! player also declares its split objective so the detector can
//! cross-check it.
//!
//! The game has a generalized equilibrium. The west side of the tree
//! is uncongested and prices at the common sourcing cost `5.5`; the
//! corridor from the cheap source at node 8 to the high-utility
//! demand at node 20 hits both ends of the pressure window, and its
//! prices climb with the congestion. [`gas_reference`] rebuilds that
//! solution in closed form from the active constraint pattern; the
//! frozen numbers in [`gas_expected`] came from an independent
//! propagation of the same pattern and pin both down.

use super::{ExpectedEntry, ExpectedValue, ExpectedValues, Provenance};
use crate::expr::Expression;
use crate::model::{
    FeasibleSet, GameInstance, GamePoint, GlobalConstraint, LinearConstraint, MuMeasure,
    NonlinearConstraint, OracleBinding, Player, PriceTakingForm, Sense, ToleranceConfig,
};

const NODES: usize = 20;

/// Pipes as `(tail node, head node, Weymouth coefficient)`.
const ARCS: [(usize, usize, f64); 19] = [
    (1, 2, 3.011688895),
    (3, 4, 1.181283201),
    (4, 7, 0.476334966),
    (2, 3, 2.459034363),
    (4, 14, 0.812192096),
    (5, 6, 0.316632279),
    (7, 6, 0.385558037),
    (8, 9, 3.0),
    (9, 10, 0.164342326),
    (10, 11, 1.204674230),
    (11, 12, 0.929427781),
    (11, 17, 0.226813800),
    (12, 13, 0.952379651),
    (13, 14, 2.693737181),
    (14, 15, 1.904759827),
    (15, 16, 1.204674230),
    (17, 18, 3.0),
    (18, 19, 0.041270934),
    (19, 20, 0.166790287),
];

/// Suppliers as `(node, capacity, unit sourcing cost)`.
const SUPPLIES: [(usize, f64, f64); 6] = [
    (1, 31.20, 4.5),
    (2, 8.40, 5.5),
    (5, 4.80, 5.5),
    (8, 20.00, 4.5),
    (13, 0.96, 5.5),
    (14, 1.20, 5.5),
];

/// Consumers as `(node, capacity, unit utility, deliverability charge)`.
const DEMANDS: [(usize, f64, f64, f64); 9] = [
    (3, 3.918, 7.0, 6.0),
    (6, 4.034, 7.0, 3.0),
    (7, 5.256, 7.0, 3.0),
    (10, 6.365, 8.0, 1.0),
    (12, 2.120, 8.0, 1.0),
    (15, 6.848, 7.0, 3.0),
    (16, 15.616, 7.0, 3.0),
    (19, 0.222, 11.0, 1.0),
    (20, 1.919, 11.0, 0.0),
];

/// Squared pressure window, identical at every node.
const PRESSURE_LOWER: f64 = 900.0;
const PRESSURE_UPPER: f64 = 4900.0;

/// Price cap for the dual search box.
const PRICE_CAP: f64 = 12.1;

/// Arc indices of the congested corridor, in path order from node 8
/// to node 20.
const CORRIDOR: [usize; 7] = [7, 8, 9, 11, 16, 17, 18];

fn transmission_player() -> Player {
    let flow = |ai: usize| Expression::PVar(0, NODES + ai);
    let mut objective = Vec::with_capacity(2 * ARCS.len());
    for (ai, &(tail, head, _)) in ARCS.iter().enumerate() {
        objective.push(Expression::Mul(vec![Expression::SVar(tail - 1), flow(ai)]));
        objective.push(Expression::scaled(
            -1.0,
            Expression::Mul(vec![Expression::SVar(head - 1), flow(ai)]),
        ));
    }

    let mut weymouth = Vec::with_capacity(ARCS.len());
    for (ai, &(tail, head, w)) in ARCS.iter().enumerate() {
        weymouth.push(NonlinearConstraint {
            expr: Expression::add_all(vec![
                Expression::SVar(tail - 1),
                Expression::scaled(-1.0, Expression::SVar(head - 1)),
                Expression::scaled(
                    -1.0 / (w * w),
                    Expression::Square(Box::new(Expression::SVar(NODES + ai))),
                ),
            ]),
            sense: Sense::Eq,
        });
    }

    let mut lower = vec![PRESSURE_LOWER; NODES];
    lower.extend(std::iter::repeat_n(0.0, ARCS.len()));
    let mut upper = vec![PRESSURE_UPPER; NODES];
    upper.extend(std::iter::repeat_n(f64::INFINITY, ARCS.len()));

    let gb = (1..=NODES)
        .map(|node| {
            let mut terms = Vec::new();
            for (ai, &(tail, head, _)) in ARCS.iter().enumerate() {
                if tail == node {
                    terms.push(flow(ai));
                }
                if head == node {
                    terms.push(Expression::scaled(-1.0, flow(ai)));
                }
            }
            Expression::add_all(terms)
        })
        .collect();

    Player {
        id: "transmission".to_string(),
        n: NODES + ARCS.len(),
        objective: Expression::add_all(objective),
        feasible_set: FeasibleSet {
            n: NODES + ARCS.len(),
            lower,
            upper,
            integral: vec![false; NODES + ARCS.len()],
            linear: Vec::new(),
            nonlinear: weymouth,
        },
        joint_feasible: None,
        oracle: OracleBinding::TreeTransmission,
        price_taking_form: Some(PriceTakingForm {
            ga: Expression::Const(0.0),
            gb,
        }),
    }
}

fn supply_player(si: usize) -> Player {
    let (node, capacity, cost) = SUPPLIES[si];
    let idx = 1 + si;
    let quantity = || Expression::PVar(idx, 0);
    let mut gb = vec![Expression::Const(0.0); NODES];
    gb[node - 1] = Expression::scaled(-1.0, quantity());
    Player {
        id: format!("supply-{node}"),
        n: 1,
        objective: Expression::add_all(vec![
            Expression::scaled(cost, quantity()),
            Expression::scaled(
                -1.0,
                Expression::Mul(vec![Expression::SVar(node - 1), quantity()]),
            ),
        ]),
        feasible_set: FeasibleSet::boxed(vec![0.0], vec![capacity]),
        joint_feasible: None,
        oracle: OracleBinding::BoxLp,
        price_taking_form: Some(PriceTakingForm {
            ga: Expression::scaled(cost, quantity()),
            gb,
        }),
    }
}

fn demand_player(di: usize) -> Player {
    let (node, capacity, utility, charge) = DEMANDS[di];
    let idx = 1 + SUPPLIES.len() + di;
    let quantity = || Expression::PVar(idx, 0);
    let switch = || Expression::PVar(idx, 1);
    let mut gb = vec![Expression::Const(0.0); NODES];
    gb[node - 1] = quantity();
    Player {
        id: format!("demand-{node}"),
        n: 2,
        objective: Expression::add_all(vec![
            Expression::Mul(vec![Expression::SVar(node - 1), quantity()]),
            Expression::scaled(-utility, quantity()),
            Expression::scaled(charge, switch()),
        ]),
        feasible_set: FeasibleSet {
            n: 2,
            lower: vec![0.0, 0.0],
            upper: vec![capacity, 1.0],
            integral: vec![false, true],
            linear: vec![LinearConstraint {
                coeffs: vec![1.0, -capacity],
                sense: Sense::Le,
                rhs: 0.0,
            }],
            nonlinear: Vec::new(),
        },
        joint_feasible: None,
        oracle: OracleBinding::FixedCharge,
        price_taking_form: Some(PriceTakingForm {
            ga: Expression::add_all(vec![
                Expression::scaled(-utility, quantity()),
                Expression::scaled(charge, switch()),
            ]),
            gb,
        }),
    }
}

/// Builds the twenty-node gas market game.
pub fn gas() -> GameInstance {
    let mut players = vec![transmission_player()];
    for si in 0..SUPPLIES.len() {
        players.push(supply_player(si));
    }
    for di in 0..DEMANDS.len() {
        players.push(demand_player(di));
    }

    let balance = |node: usize| {
        let mut terms = Vec::new();
        if let Some(di) = DEMANDS.iter().position(|&(m, ..)| m == node) {
            terms.push(Expression::PVar(1 + SUPPLIES.len() + di, 0));
        }
        for (ai, &(tail, head, _)) in ARCS.iter().enumerate() {
            if tail == node {
                terms.push(Expression::PVar(0, NODES + ai));
            }
            if head == node {
                terms.push(Expression::scaled(-1.0, Expression::PVar(0, NODES + ai)));
            }
        }
        if let Some(si) = SUPPLIES.iter().position(|&(m, ..)| m == node) {
            terms.push(Expression::scaled(-1.0, Expression::PVar(1 + si, 0)));
        }
        GlobalConstraint {
            expr: Expression::add_all(terms),
            sense: Sense::Eq,
        }
    };

    GameInstance {
        name: "gas".to_string(),
        n0: NODES,
        x_set: FeasibleSet::free(NODES),
        players,
        global_constraints: (1..=NODES).map(balance).collect(),
        mu: MuMeasure::Sum,
        tolerances: ToleranceConfig::default(),
        x0: Some(vec![0.0; NODES]),
        price_box: Some((vec![0.0; NODES], vec![PRICE_CAP; NODES])),
    }
}

/// The closed-form market solution, rebuilt from the active constraint
/// pattern: which demands connect, which sources are marginal, and
/// that the corridor uses the whole pressure window.
#[derive(Debug, Clone, PartialEq)]
pub struct GasReference {
    /// Gas delivered to node 20, the corridor's bottleneck quantity.
    pub corridor_delivery: f64,
    /// Total sourcing cost minus served utility at the dispatch.
    pub primal_value: f64,
    /// Sum of every player's best-response value at [`Self::prices`].
    pub dual_value: f64,
    /// Nodal prices supporting the dispatch.
    pub prices: Vec<f64>,
    /// Squared pressures, by node.
    pub pressures: Vec<f64>,
    /// Pipe flows, in arc order.
    pub flows: Vec<f64>,
    /// Supplier outputs, in supplier order.
    pub supplies: Vec<f64>,
    /// Served quantities, in consumer order.
    pub deliveries: Vec<f64>,
    /// Consumer connection switches, in consumer order.
    pub switches: Vec<f64>,
    /// Best-response values at [`Self::prices`], one per player.
    pub dual_components: Vec<f64>,
    /// The full joint point: prices, then every player's block.
    pub point: GamePoint,
}

/// Rebuilds the reference solution by propagating flows, pressures,
/// and prices through the tree from the active constraint pattern.
pub fn gas_reference() -> GasReference {
    let w = |ai: usize| ARCS[ai].2;
    let drop = |f: f64, ai: usize| (f / w(ai)) * (f / w(ai));

    // Corridor pressure drop as a function of the node-20 delivery,
    // with the demands at nodes 10 and 12 fully served.
    let trunk_base = DEMANDS[3].1 + DEMANDS[4].1;
    let span_at = |eta: f64| {
        let trunk = trunk_base + eta;
        let mid = DEMANDS[4].1 + eta;
        let corridor_flows = [trunk, trunk, mid, eta, eta, eta, eta];
        CORRIDOR
            .iter()
            .zip(corridor_flows)
            .map(|(&ai, f)| drop(f, ai))
            .sum::<f64>()
    };

    // The delivery to node 20 grows until the corridor uses the whole
    // pressure window.
    let window = PRESSURE_UPPER - PRESSURE_LOWER;
    let (mut lo, mut hi) = (0.0_f64, DEMANDS[8].1);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if span_at(mid) > window {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let eta = 0.5 * (lo + hi);

    let deliveries = vec![
        0.0,
        DEMANDS[1].1,
        DEMANDS[2].1,
        DEMANDS[3].1,
        DEMANDS[4].1,
        DEMANDS[5].1,
        DEMANDS[6].1,
        0.0,
        eta,
    ];
    let switches = vec![0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0];

    // Flows, summed up the tree from the served demands.
    let f_7_6 = deliveries[1];
    let f_4_7 = deliveries[2] + f_7_6;
    let f_14_15 = deliveries[5] + deliveries[6];
    let f_15_16 = deliveries[6];
    let f_4_14 = f_14_15;
    let f_3_4 = f_4_7 + f_4_14;
    let f_2_3 = f_3_4;
    let f_1_2 = SUPPLIES[0].1;
    let f_11_12 = deliveries[4];
    let f_10_11 = f_11_12 + eta;
    let f_9_10 = deliveries[3] + f_10_11;
    let f_8_9 = f_9_10;
    let flows = vec![
        f_1_2, f_3_4, f_4_7, f_2_3, f_4_14, 0.0, f_7_6, f_8_9, f_9_10, f_10_11, f_11_12, eta,
        0.0, 0.0, f_14_15, f_15_16, eta, eta, eta,
    ];
    let supplies = vec![f_1_2, f_2_3 - f_1_2, 0.0, f_8_9, 0.0, 0.0];

    // Squared pressures, anchored at the corridor's binding ends and
    // propagated across every pipe's Weymouth relation.
    let mut pressures = vec![0.0; NODES];
    pressures[7] = PRESSURE_UPPER;
    pressures[8] = pressures[7] - drop(f_8_9, 7);
    pressures[9] = pressures[8] - drop(f_9_10, 8);
    pressures[10] = pressures[9] - drop(f_10_11, 9);
    pressures[11] = pressures[10] - drop(f_11_12, 10);
    pressures[12] = pressures[11];
    pressures[13] = pressures[12];
    pressures[16] = pressures[10] - drop(eta, 11);
    pressures[17] = pressures[16] - drop(eta, 16);
    pressures[18] = pressures[17] - drop(eta, 17);
    pressures[19] = PRESSURE_LOWER;
    pressures[3] = pressures[13] + drop(f_4_14, 4);
    pressures[2] = pressures[3] + drop(f_3_4, 1);
    pressures[1] = pressures[2] + drop(f_2_3, 3);
    pressures[0] = pressures[1] + drop(f_1_2, 0);
    pressures[6] = pressures[3] - drop(f_4_7, 2);
    pressures[5] = pressures[6] - drop(f_7_6, 6);
    pressures[4] = pressures[5];
    pressures[14] = pressures[13] - drop(f_14_15, 14);
    pressures[15] = pressures[14] - drop(f_15_16, 15);

    // Prices: 5.5 across the uncongested west, the marginal sourcing
    // cost at node 8, then stationarity steps along the corridor. The
    // spur through node 12 carries no pressure rent, so it prices at
    // node 11. Node 20 prices at its demand's utility.
    let corridor_flows = [f_8_9, f_9_10, f_10_11, eta, eta, eta, eta];
    let total: f64 = CORRIDOR
        .iter()
        .zip(corridor_flows)
        .map(|(&ai, f)| f / (w(ai) * w(ai)))
        .sum();
    let beta = (DEMANDS[8].2 - SUPPLIES[3].2) / total;
    let step = |x: f64, f: f64, ai: usize| x + beta * f / (w(ai) * w(ai));
    let mut prices = vec![5.5; NODES];
    prices[7] = SUPPLIES[3].2;
    prices[8] = step(prices[7], f_8_9, 7);
    prices[9] = step(prices[8], f_9_10, 8);
    prices[10] = step(prices[9], f_10_11, 9);
    prices[11] = prices[10];
    prices[16] = step(prices[10], eta, 11);
    prices[17] = step(prices[16], eta, 16);
    prices[18] = step(prices[17], eta, 17);
    prices[19] = DEMANDS[8].2;

    // Best-response values at the reference prices, one per player.
    let rent: f64 = ARCS
        .iter()
        .enumerate()
        .map(|(ai, &(tail, head, _))| (prices[tail - 1] - prices[head - 1]) * flows[ai])
        .sum();
    let mut dual_components = vec![rent];
    for &(node, capacity, cost) in &SUPPLIES {
        dual_components.push(((cost - prices[node - 1]) * capacity).min(0.0));
    }
    for &(node, capacity, utility, charge) in &DEMANDS {
        let connected = charge + ((prices[node - 1] - utility) * capacity).min(0.0);
        dual_components.push(connected.min(0.0));
    }
    let dual_value = dual_components.iter().sum();

    let sourcing: f64 = SUPPLIES
        .iter()
        .zip(&supplies)
        .map(|(&(_, _, cost), s)| cost * s)
        .sum();
    let net_utility: f64 = DEMANDS
        .iter()
        .enumerate()
        .map(|(di, &(_, _, utility, charge))| charge * switches[di] - utility * deliveries[di])
        .sum();
    let primal_value = sourcing + net_utility;

    let mut transmission = pressures.clone();
    transmission.extend_from_slice(&flows);
    let mut y = vec![transmission];
    for &s in &supplies {
        y.push(vec![s]);
    }
    for di in 0..DEMANDS.len() {
        y.push(vec![deliveries[di], switches[di]]);
    }
    let point = GamePoint::new(prices.clone(), y);

    GasReference {
        corridor_delivery: eta,
        primal_value,
        dual_value,
        prices,
        pressures,
        flows,
        supplies,
        deliveries,
        switches,
        dual_components,
        point,
    }
}

/// Reference values for [`gas`], frozen from an independent
/// propagation of the same active constraint pattern before any
/// solver ran.
pub fn gas_expected() -> ExpectedValues {
    ExpectedValues {
        instance: "gas".to_string(),
        entries: vec![
            ExpectedEntry {
                name: "corridor-span-limit".to_string(),
                value: ExpectedValue::Scalar(4000.0),
                tolerance: 0.0,
                provenance: Provenance::Defined,
                citation: "uniform squared pressure window, 900 to 4900 at every node, for a \
                           network patterned on the Belgian gas system of Chen et al. (2019)"
                    .to_string(),
            },
            ExpectedEntry {
                name: "corridor-delivery".to_string(),
                value: ExpectedValue::Scalar(1.004852564639437),
                tolerance: 1e-9,
                provenance: Provenance::Derived,
                citation: "bisection on the node-20 delivery until the pressure drop from node 8 \
                           to node 20 uses the whole window"
                    .to_string(),
            },
            ExpectedEntry {
                name: "primal-value".to_string(),
                value: ExpectedValue::Scalar(-101.06004167015632),
                tolerance: 0.01,
                provenance: Provenance::Derived,
                citation: "sourcing cost minus served utility at the propagated dispatch: every \
                           demand whose utility beats its nodal price connects, node 20 takes \
                           the corridor residual"
                    .to_string(),
            },
            ExpectedEntry {
                name: "dual-value-at-reference-prices".to_string(),
                value: ExpectedValue::Scalar(-101.06004167015634),
                tolerance: 0.01,
                provenance: Provenance::Derived,
                citation: "sum of closed-form best-response values at the reference prices; \
                           equality with the primal value certifies the dispatch"
                    .to_string(),
            },
            ExpectedEntry {
                name: "reference-prices".to_string(),
                value: ExpectedValue::Vector(vec![
                    5.5,
                    5.5,
                    5.5,
                    5.5,
                    5.5,
                    5.5,
                    5.5,
                    4.5,
                    4.506851809940437,
                    6.790078109948966,
                    6.804070072790598,
                    6.804070072790598,
                    5.5,
                    5.5,
                    5.5,
                    5.5,
                    6.9309964100612165,
                    6.931721928054691,
                    10.765280492490538,
                    11.0,
                ]),
                tolerance: 5e-3,
                provenance: Provenance::Derived,
                citation: "uniform 5.5 across the uncongested west, marginal sourcing cost 4.5 \
                           at node 8, utility 11.0 at node 20, stationarity steps along the \
                           congested corridor"
                    .to_string(),
            },
            ExpectedEntry {
                name: "pressures".to_string(),
                value: ExpectedValue::Vector(vec![
                    3305.2932009241945,
                    3197.9711476698353,
                    3031.2204400676405,
                    2308.6356344501282,
                    1818.7961375756627,
                    1818.7961375756627,
                    1928.265418874389,
                    4900.0,
                    4889.993633144601,
                    1555.5754034518159,
                    1548.8468791912755,
                    1543.6440397639908,
                    1543.6440397639908,
                    1543.6440397639908,
                    1404.5547353599754,
                    1236.5194993353334,
                    1529.2193450679893,
                    1529.1071529928045,
                    936.296368760885,
                    900.0,
                ]),
                tolerance: 0.05,
                provenance: Provenance::Derived,
                citation: "squared pressures propagated across every pipe from the binding \
                           window ends at nodes 8 and 20"
                    .to_string(),
            },
            ExpectedEntry {
                name: "flows".to_string(),
                value: ExpectedValue::Vector(vec![
                    31.2,
                    31.753999999999998,
                    9.29,
                    31.753999999999998,
                    22.464,
                    0.0,
                    4.034,
                    9.489852564639438,
                    9.489852564639438,
                    3.124852564639437,
                    2.12,
                    1.004852564639437,
                    0.0,
                    0.0,
                    22.464,
                    15.616,
                    1.004852564639437,
                    1.004852564639437,
                    1.004852564639437,
                ]),
                tolerance: 5e-3,
                provenance: Provenance::Derived,
                citation: "flow conservation from the served demands up the tree".to_string(),
            },
            ExpectedEntry {
                name: "supplies".to_string(),
                value: ExpectedValue::Vector(vec![
                    31.2,
                    0.5539999999999985,
                    0.0,
                    9.489852564639438,
                    0.0,
                    0.0,
                ]),
                tolerance: 5e-3,
                provenance: Provenance::Derived,
                citation: "node balances: source 1 at capacity, source 2 topping up the west \
                           trunk, source 8 feeding the corridor"
                    .to_string(),
            },
            ExpectedEntry {
                name: "deliveries".to_string(),
                value: ExpectedValue::Vector(vec![
                    0.0,
                    4.034,
                    5.256,
                    6.365,
                    2.12,
                    6.848,
                    15.616,
                    0.0,
                    1.004852564639437,
                ]),
                tolerance: 5e-3,
                provenance: Provenance::Derived,
                citation: "full service wherever utility beats the nodal price, the corridor \
                           residual at node 20, nothing at nodes 3 and 19"
                    .to_string(),
            },
            ExpectedEntry {
                name: "demand-switches".to_string(),
                value: ExpectedValue::Vector(vec![0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0]),
                tolerance: 1e-9,
                provenance: Provenance::Derived,
                citation: "connection pattern of the served demands: the charge at node 3 and \
                           the corridor rent at node 19 keep those consumers off"
                    .to_string(),
            },
            ExpectedEntry {
                name: "transmission-dual-component".to_string(),
                value: ExpectedValue::Scalar(-25.992517394297575),
                tolerance: 1e-3,
                provenance: Provenance::Derived,
                citation: "congestion rent along the corridor: the whole pressure window times \
                           the span multiplier"
                    .to_string(),
            },
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cga::certify_equilibrium;
    use crate::pricetaking::{detect, evaluate_dual, solve_primal};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn assert_vec_close(got: &[f64], want: &[f64], tol: f64) {
        assert_eq!(got.len(), want.len());
        for (j, (g, w)) in got.iter().zip(want).enumerate() {
            assert!(close(*g, *w, tol), "entry {j}: got {g}, want {w}");
        }
    }

    #[test]
    fn reference_matches_the_frozen_derivation() {
        let r = gas_reference();
        let exp = gas_expected();
        exp.validate().unwrap();

        assert!(close(
            r.corridor_delivery,
            exp.scalar("corridor-delivery").unwrap(),
            1e-9
        ));
        assert!(close(r.primal_value, exp.scalar("primal-value").unwrap(), 1e-9));
        assert!(close(
            r.dual_value,
            exp.scalar("dual-value-at-reference-prices").unwrap(),
            1e-9
        ));
        assert!(
            close(r.dual_value, r.primal_value, 1e-9),
            "strong duality gap: {} vs {}",
            r.dual_value,
            r.primal_value
        );
        assert!(close(
            r.dual_components[0],
            exp.scalar("transmission-dual-component").unwrap(),
            1e-9
        ));

        assert_vec_close(&r.prices, exp.vector("reference-prices").unwrap(), 1e-9);
        assert_vec_close(&r.pressures, exp.vector("pressures").unwrap(), 1e-6);
        assert_vec_close(&r.flows, exp.vector("flows").unwrap(), 1e-9);
        assert_vec_close(&r.supplies, exp.vector("supplies").unwrap(), 1e-9);
        assert_vec_close(&r.deliveries, exp.vector("deliveries").unwrap(), 1e-9);
        assert_vec_close(&r.switches, exp.vector("demand-switches").unwrap(), 0.0);

        let window = exp.scalar("corridor-span-limit").unwrap();
        assert!(close(r.pressures[7] - r.pressures[19], window, 1e-6));
    }

    #[test]
    fn reference_point_is_feasible_for_the_instance() {
        let game = gas();
        game.validate().unwrap();
        let r = gas_reference();
        let report = game
            .check_point_feasible(&r.point, &game.tolerances)
            .unwrap();
        assert!(report.is_feasible(), "violations: {:?}", report.violations);
        let (lo, hi) = game.price_box.as_ref().unwrap();
        for k in 0..NODES {
            assert!(lo[k] <= r.prices[k] && r.prices[k] <= hi[k]);
        }
    }

    #[test]
    fn oracle_sweep_at_the_reference_prices_attains_strong_duality() {
        let game = gas();
        let pt = detect(&game).unwrap();
        assert!(!pt.synthetic_box);
        assert_eq!(pt.price_lower, vec![0.0; NODES]);
        assert_eq!(pt.price_upper, vec![PRICE_CAP; NODES]);

        let r = gas_reference();
        let sweep = evaluate_dual(&pt, &r.prices, None).unwrap();
        assert_eq!(sweep.oracle_calls, game.players.len());
        assert!(close(sweep.value.finite().unwrap(), r.dual_value, 1e-6));
        for (i, c) in sweep.components.iter().enumerate() {
            assert!(
                close(c.finite().unwrap(), r.dual_components[i], 1e-6),
                "player {i}: {c:?} vs {}",
                r.dual_components[i]
            );
        }
    }

    #[test]
    fn reference_point_is_a_certified_equilibrium() {
        let game = gas();
        let r = gas_reference();
        let check = certify_equilibrium(&game, &r.point, None, 1e-6).unwrap();
        assert!(check.violations.is_empty(), "{:?}", check.violations);
        assert!(check.certified, "gaps: {:?}", check.player_gaps);
    }

    #[test]
    fn exact_primal_dispatch_matches_the_reference() {
        let game = gas();
        let pt = detect(&game).unwrap();
        let r = gas_reference();
        let primal = solve_primal(&pt).unwrap();
        assert!(
            close(primal.value.finite().unwrap(), r.primal_value, 1e-4),
            "primal {:?} vs reference {}",
            primal.value,
            r.primal_value
        );
        let y = primal.y.unwrap();
        for di in 0..DEMANDS.len() {
            let block = &y[1 + SUPPLIES.len() + di];
            assert!(
                close(block[1], r.switches[di], 1e-6),
                "demand {di} switch: {} vs {}",
                block[1],
                r.switches[di]
            );
        }
    }
}
