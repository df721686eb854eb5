//! Primal-dual solver for price-taking markets.
//!
//! A game is in price-taking form when the shared variables act as
//! prices: every objective is affine in them,
//!
//! ```text
//!     g_i(x, y_i) = base_i(y_i) + sum_k x_k * coeff_ik(y_i),
//! ```
//!
//! the prices themselves are unconstrained, and each coupling
//! constraint balances the total coupled quantity of one price,
//! `sum_i coeff_ik(y_i) = 0`. [`detect`] recognises this shape and
//! cross-checks any declared split against the actual objectives.
//!
//! For such games the minimum disequilibrium under the sum measure
//! separates into two independent problems:
//!
//! * the **primal**: minimise `sum_i base_i(y_i)` over the private
//!   sets and the balance rows ([`solve_primal`]);
//! * the **dual**: maximise the concave function
//!   `D(x) = sum_i min_y [base_i(y) + sum_k x_k coeff_ik(y)]`, which
//!   one best-response sweep evaluates exactly ([`evaluate_dual`]).
//!
//! The minimum disequilibrium equals `primal - sup_x D(x)`, and a
//! minimising point pairs a primal dispatch with dual prices, so an
//! equilibrium exists exactly when the two values meet.
//!
//! [`maximize_dual`] climbs `D` with a cutting-plane model. Each
//! sweep's responses become affine upper envelopes of `D` (cuts), a
//! model LP proposes the next prices inside a bounding box, and the
//! climb stops when the model value meets the best sweep or the sweep
//! adds no new cuts. Every cut bounds `D` from above on the whole
//! price space, so when the final proposal lies strictly inside the
//! box the model value bounds the unconstrained dual as well;
//! [`solve_min_disequilibrium`] turns that into a certified lower
//! bound on the disequilibrium, and sets `price_box_clipped` instead
//! of claiming a bound when the proposal sat on the box edge.

use std::collections::BTreeSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cga::{SolveStatus, EXACTNESS_RTOL};
use crate::error::{Error, Result};
use crate::expr::{Polynomial, QuadraticForm, VarKey};
use crate::ext::ExtReal;
use crate::model::{GameInstance, GamePoint, MuMeasure, Sense};
use crate::oracles::{player_row_polys, solve_player, CutPools, OracleRegistry, ENUMERATION_CAP};
use crate::subsolvers::linalg::is_psd;
use crate::subsolvers::{
    enumerate_assignments, solve_lp, solve_lp_lex_smallest, solve_qp, solve_square_program,
    square_form_of, DenseConvexQp, DenseLinearProgram, DenseSquareProgram, LpOutcome, QpOutcome,
    SbbOutcome, SquareForm, SquareRow,
};

/// Half-width of the price box used when the instance supplies none.
pub const DEFAULT_PRICE_BOUND: f64 = 1e4;

/// A player's objective split into its price-free part and the
/// coefficient of each price, all over the player's own block.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitObjective {
    pub base: Polynomial,
    pub price_coeffs: Vec<Polynomial>,
}

/// A validated price-taking view of a game instance.
#[derive(Debug, Clone)]
pub struct PriceTakingGame<'a> {
    pub game: &'a GameInstance,
    pub split: Vec<SplitObjective>,
    pub price_lower: Vec<f64>,
    pub price_upper: Vec<f64>,
    /// True when any edge of the price box came from the library
    /// default rather than the instance.
    pub synthetic_box: bool,
}

/// Polynomial identity test by agreement at a deterministic battery
/// of pseudo-random points in `[1, 2)`.
fn polys_agree(p: &Polynomial, q: &Polynomial) -> bool {
    let mut vars: BTreeSet<VarKey> = BTreeSet::new();
    for m in p.terms.keys().chain(q.terms.keys()) {
        for &(v, _) in &m.0 {
            vars.insert(v);
        }
    }
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut draw = || {
        state = state
            .wrapping_mul(6_364_136_223_846_793_005)
            .wrapping_add(1_442_695_040_888_963_407);
        1.0 + (state >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..4 {
        let assign: Vec<(VarKey, f64)> = vars.iter().map(|&v| (v, draw())).collect();
        let lookup = |k: VarKey| {
            assign
                .iter()
                .find(|(v, _)| *v == k)
                .map(|(_, val)| *val)
                .unwrap_or(0.0)
        };
        let pv = p.eval(&lookup);
        let qv = q.eval(&lookup);
        if (pv - qv).abs() > 1e-9 * (1.0 + pv.abs().max(qv.abs())) {
            return false;
        }
    }
    true
}

/// Recognises the price-taking structure of a game, or explains which
/// requirement fails. Requirements: the sum measure, at least one
/// shared variable, a totally unconstrained shared set, objectives
/// affine in the shared variables, and exactly one equality coupling
/// row per price balancing its total coupled quantity.
pub fn detect(game: &GameInstance) -> Result<PriceTakingGame<'_>> {
    game.validate()?;
    game.require_constant_feasible_sets("the price-taking solver")?;
    let n0 = game.n0;
    if n0 == 0 {
        return Err(Error::UnsupportedStructure(
            "a price-taking game needs at least one shared price".to_string(),
        ));
    }
    if game.mu != MuMeasure::Sum {
        return Err(Error::UnsupportedStructure(
            "the price-taking decomposition aggregates gaps by summing; set the measure to sum"
                .to_string(),
        ));
    }
    let xs = &game.x_set;
    let free = xs.linear.is_empty()
        && xs.nonlinear.is_empty()
        && xs.integral.iter().all(|b| !*b)
        && xs.lower.iter().all(|&l| l == f64::NEG_INFINITY)
        && xs.upper.iter().all(|&u| u == f64::INFINITY);
    if !free {
        return Err(Error::UnsupportedStructure(
            "the shared variables must be unconstrained prices; couple them to the players \
             through global constraints instead"
                .to_string(),
        ));
    }

    let mut split = Vec::with_capacity(game.players.len());
    for (i, pl) in game.players.iter().enumerate() {
        let poly = pl.objective.expand()?;
        let Some((base, coeffs)) = poly.shared_affine_parts() else {
            return Err(Error::UnsupportedStructure(format!(
                "player {i}'s objective is not affine in the prices"
            )));
        };
        let mut price_coeffs = vec![Polynomial::zero(); n0];
        for (k, c) in coeffs {
            price_coeffs[k] = c;
        }
        if let Some(form) = &pl.price_taking_form {
            let ga = form.ga.expand()?;
            if !polys_agree(&ga, &base) {
                return Err(Error::InvalidModel(format!(
                    "player {i}'s declared price-free part disagrees with its objective"
                )));
            }
            for (k, gbk) in form.gb.iter().enumerate() {
                let gb = gbk.expand()?;
                if !polys_agree(&gb, &price_coeffs[k]) {
                    return Err(Error::InvalidModel(format!(
                        "player {i}'s declared coefficient of price {k} disagrees with its \
                         objective"
                    )));
                }
            }
        }
        split.push(SplitObjective { base, price_coeffs });
    }

    if game.global_constraints.len() != n0 {
        return Err(Error::UnsupportedStructure(format!(
            "expected one balance row per price: {} rows for {n0} prices",
            game.global_constraints.len()
        )));
    }
    let totals: Vec<Polynomial> = (0..n0)
        .map(|k| {
            let mut t = Polynomial::zero();
            for s in &split {
                t.add_assign(&s.price_coeffs[k]);
            }
            t
        })
        .collect();
    let mut matched = vec![false; n0];
    for (r, gc) in game.global_constraints.iter().enumerate() {
        if gc.sense != Sense::Eq {
            return Err(Error::UnsupportedStructure(format!(
                "coupling row {r} must be an equality balancing one price's quantity"
            )));
        }
        let row = gc.expr.expand()?;
        if row.max_degree_shared() > 0 {
            return Err(Error::UnsupportedStructure(format!(
                "coupling row {r} references the prices; balance rows involve only player \
                 quantities"
            )));
        }
        let mut neg = row.clone();
        neg.scale(-1.0);
        let hit = (0..n0)
            .find(|&k| !matched[k] && (polys_agree(&row, &totals[k]) || polys_agree(&neg, &totals[k])));
        match hit {
            Some(k) => matched[k] = true,
            None => {
                return Err(Error::UnsupportedStructure(format!(
                    "coupling row {r} does not match the total coupled quantity of any price"
                )))
            }
        }
    }

    let (mut price_lower, mut price_upper, mut synthetic_box) = match &game.price_box {
        Some((lo, hi)) => (lo.clone(), hi.clone(), false),
        None => (
            vec![-DEFAULT_PRICE_BOUND; n0],
            vec![DEFAULT_PRICE_BOUND; n0],
            true,
        ),
    };
    for k in 0..n0 {
        if !price_lower[k].is_finite() {
            price_lower[k] = -DEFAULT_PRICE_BOUND;
            synthetic_box = true;
        }
        if !price_upper[k].is_finite() {
            price_upper[k] = DEFAULT_PRICE_BOUND;
            synthetic_box = true;
        }
    }

    Ok(PriceTakingGame {
        game,
        split,
        price_lower,
        price_upper,
        synthetic_box,
    })
}

/// Exact minimum of the total price-free cost over the joint dispatch
/// set: all private sets plus the balance rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalSolution {
    pub value: ExtReal,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub y: Option<Vec<Vec<f64>>>,
    pub assignments_visited: u64,
    pub assignments_pruned: u64,
}

fn unbounded_dispatch() -> Error {
    Error::Unbounded("the joint dispatch problem is unbounded below".to_string())
}

enum DispatchRoute {
    Lp(Vec<f64>, f64),
    Qp(QuadraticForm),
    Squares(SquareForm),
}

/// Linear relaxation of a square-separable program: every `v_j^2` is
/// replaced by a fresh nonnegative column `s_j`. When `v_j` has a
/// finite box, `s_j` is tied to it by tangent rows at the endpoints
/// and midpoint (`s_j >= 2t v_j - t^2`) and the chord row
/// (`s_j <= (l+u) v_j - lu`); an unbounded coordinate keeps only the
/// bare lift. The optimal value underestimates the true optimum, so
/// it is a sound pruning bound while enumerating integral
/// assignments. The tangent and chord rows are written against the
/// full box, which contains every pinned sub-box, so one relaxation
/// shape serves all assignments.
fn build_relaxation_lp(
    n: usize,
    lower: &[f64],
    upper: &[f64],
    affine: &[(Vec<f64>, Sense, f64)],
    squares: &[SquareRow],
    objective: &SquareForm,
) -> (DenseLinearProgram, f64) {
    let mut lifted: BTreeSet<usize> = BTreeSet::new();
    for row in squares {
        for &(j, _) in &row.form.squares {
            lifted.insert(j);
        }
    }
    for &(j, _) in &objective.squares {
        lifted.insert(j);
    }
    let cols: Vec<usize> = lifted.into_iter().collect();
    let col_of = |j: usize| n + cols.iter().position(|&c| c == j).expect("lifted column");
    let width = n + cols.len();
    let mut rows = Vec::new();
    let mut senses = Vec::new();
    let mut rhs = Vec::new();
    for (coeffs, sense, b) in affine {
        let mut row = vec![0.0; width];
        row[..n].copy_from_slice(coeffs);
        rows.push(row);
        senses.push(*sense);
        rhs.push(*b);
    }
    for &j in &cols {
        let (l, u) = (lower[j], upper[j]);
        if !(l.is_finite() && u.is_finite()) {
            continue;
        }
        for t in [l, 0.5 * (l + u), u] {
            let mut row = vec![0.0; width];
            row[j] = 2.0 * t;
            row[col_of(j)] = -1.0;
            rows.push(row);
            senses.push(Sense::Le);
            rhs.push(t * t);
        }
        let mut row = vec![0.0; width];
        row[j] = -(l + u);
        row[col_of(j)] = 1.0;
        rows.push(row);
        senses.push(Sense::Le);
        rhs.push(-l * u);
    }
    for sq in squares {
        let mut row = vec![0.0; width];
        row[..n].copy_from_slice(&sq.form.linear);
        for &(j, q) in &sq.form.squares {
            row[col_of(j)] += q;
        }
        rows.push(row);
        senses.push(sq.sense);
        rhs.push(-sq.form.constant);
    }
    let mut cost = vec![0.0; width];
    cost[..n].copy_from_slice(&objective.linear);
    for &(j, q) in &objective.squares {
        cost[col_of(j)] += q;
    }
    let mut lo = lower.to_vec();
    lo.extend(std::iter::repeat_n(0.0, cols.len()));
    let mut hi = upper.to_vec();
    hi.extend(std::iter::repeat_n(f64::INFINITY, cols.len()));
    (
        DenseLinearProgram {
            cost,
            rows,
            senses,
            rhs,
            lower: lo,
            upper: hi,
        },
        objective.constant,
    )
}

/// Solves the joint dispatch problem: minimise the sum of the
/// price-free objective parts over all private sets and the balance
/// rows. Integral coordinates are enumerated (high values first, so a
/// strong incumbent arrives early); each assignment is solved exactly
/// by an LP, a convex QP, or a spatial branch-and-bound search,
/// depending on what the rows and the objective contain.
pub fn solve_primal(pt: &PriceTakingGame<'_>) -> Result<PrimalSolution> {
    let game = pt.game;
    let mut offsets = Vec::with_capacity(game.players.len());
    let mut n = 0usize;
    for pl in &game.players {
        offsets.push(n);
        n += pl.n;
    }
    let index_of = |v: VarKey| match v {
        VarKey::Player(i, j) => Some(offsets[i] + j),
        VarKey::Shared(_) => None,
    };

    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    let mut slots = Vec::new();
    for (i, pl) in game.players.iter().enumerate() {
        lower.extend_from_slice(&pl.feasible_set.lower);
        upper.extend_from_slice(&pl.feasible_set.upper);
        for (j, &flag) in pl.feasible_set.integral.iter().enumerate() {
            if flag {
                slots.push(offsets[i] + j);
            }
        }
    }

    let mut affine: Vec<(Vec<f64>, Sense, f64)> = Vec::new();
    let mut squares: Vec<SquareRow> = Vec::new();
    {
        let mut route_row = |form: SquareForm, sense: Sense| {
            if form.squares.is_empty() {
                affine.push((form.linear, sense, -form.constant));
            } else {
                squares.push(SquareRow { form, sense });
            }
        };
        for (i, pl) in game.players.iter().enumerate() {
            for row in &pl.feasible_set.linear {
                let mut coeffs = vec![0.0; n];
                coeffs[offsets[i]..offsets[i] + pl.n].copy_from_slice(&row.coeffs);
                route_row(
                    SquareForm {
                        constant: -row.rhs,
                        linear: coeffs,
                        squares: Vec::new(),
                    },
                    row.sense,
                );
            }
            for (poly, sense) in player_row_polys(&pl.feasible_set, i)? {
                let what = format!("player {i}: a nonlinear row");
                route_row(square_form_of(&poly, n, &index_of, &what)?, sense);
            }
        }
        for (r, gc) in game.global_constraints.iter().enumerate() {
            let poly = gc.expr.expand()?;
            let what = format!("balance row {r}");
            route_row(square_form_of(&poly, n, &index_of, &what)?, gc.sense);
        }
    }

    let mut objective = Polynomial::zero();
    for s in &pt.split {
        objective.add_assign(&s.base);
    }
    let route = if squares.is_empty() {
        match objective.to_quadratic_form(n, &index_of) {
            Ok(qf) if qf.is_linear() => DispatchRoute::Lp(qf.linear, qf.constant),
            Ok(qf) if is_psd(&qf.q) => DispatchRoute::Qp(qf),
            _ => DispatchRoute::Squares(square_form_of(
                &objective,
                n,
                &index_of,
                "the dispatch objective",
            )?),
        }
    } else {
        DispatchRoute::Squares(square_form_of(
            &objective,
            n,
            &index_of,
            "the dispatch objective",
        )?)
    };

    let mut ghost = match &route {
        DispatchRoute::Squares(obj) => {
            Some(build_relaxation_lp(n, &lower, &upper, &affine, &squares, obj))
        }
        _ => None,
    };

    let choices: Vec<Vec<f64>> = slots
        .iter()
        .map(|&col| {
            let lo = lower[col].ceil() as i64;
            let hi = upper[col].floor() as i64;
            (lo..=hi).rev().map(|z| z as f64).collect()
        })
        .collect();

    let affine_rows: Vec<Vec<f64>> = affine.iter().map(|(c, _, _)| c.clone()).collect();
    let affine_senses: Vec<Sense> = affine.iter().map(|(_, s, _)| *s).collect();
    let affine_rhs: Vec<f64> = affine.iter().map(|(_, _, b)| *b).collect();
    let priority: Vec<usize> = (0..n).collect();
    let lin_tol = game.tolerances.linear;
    let nl_tol = game.tolerances.nonlinear;

    let bound = |assignment: &[f64]| -> Option<f64> {
        let (lp, constant) = ghost.as_mut()?;
        for (s, &col) in slots.iter().enumerate() {
            lp.lower[col] = assignment[s];
            lp.upper[col] = assignment[s];
        }
        match solve_lp(lp) {
            Ok(LpOutcome::Optimal { objective, .. }) => Some(objective + *constant),
            Ok(LpOutcome::Infeasible { .. }) => Some(f64::INFINITY),
            _ => None,
        }
    };
    let evaluate = |assignment: &[f64]| -> Result<Option<(f64, Vec<f64>)>> {
        let mut lo = lower.clone();
        let mut hi = upper.clone();
        for (s, &col) in slots.iter().enumerate() {
            lo[col] = assignment[s];
            hi[col] = assignment[s];
        }
        match &route {
            DispatchRoute::Lp(cost, constant) => {
                let lp = DenseLinearProgram {
                    cost: cost.clone(),
                    rows: affine_rows.clone(),
                    senses: affine_senses.clone(),
                    rhs: affine_rhs.clone(),
                    lower: lo,
                    upper: hi,
                };
                match solve_lp_lex_smallest(&lp, &priority)? {
                    LpOutcome::Optimal { x, objective, .. } => Ok(Some((objective + constant, x))),
                    LpOutcome::Infeasible { .. } => Ok(None),
                    LpOutcome::Unbounded { .. } => Err(unbounded_dispatch()),
                }
            }
            DispatchRoute::Qp(qf) => {
                let qp = DenseConvexQp {
                    q: qf.q.clone(),
                    linear: qf.linear.clone(),
                    constant: qf.constant,
                    rows: affine_rows.clone(),
                    senses: affine_senses.clone(),
                    rhs: affine_rhs.clone(),
                    lower: lo,
                    upper: hi,
                };
                match solve_qp(&qp)? {
                    QpOutcome::Optimal { x, objective, .. } => Ok(Some((objective, x))),
                    QpOutcome::Infeasible { .. } => Ok(None),
                    QpOutcome::Unbounded { .. } => Err(unbounded_dispatch()),
                }
            }
            DispatchRoute::Squares(obj) => {
                let prog = DenseSquareProgram {
                    n,
                    lower: lo,
                    upper: hi,
                    linear: affine.clone(),
                    rows: squares.clone(),
                    objective: obj.clone(),
                };
                match solve_square_program(&prog, lin_tol, nl_tol, "the joint dispatch problem")? {
                    SbbOutcome::Optimal { value, point } => Ok(Some((value, point))),
                    SbbOutcome::Infeasible => Ok(None),
                    SbbOutcome::Unbounded => Err(unbounded_dispatch()),
                }
            }
        }
    };

    let outcome = enumerate_assignments(&choices, ENUMERATION_CAP, bound, evaluate)?;
    Ok(match outcome.best {
        Some((_, value, point)) => {
            let y = game
                .players
                .iter()
                .enumerate()
                .map(|(i, pl)| point[offsets[i]..offsets[i] + pl.n].to_vec())
                .collect();
            PrimalSolution {
                value: ExtReal::Finite(value),
                y: Some(y),
                assignments_visited: outcome.visited,
                assignments_pruned: outcome.pruned,
            }
        }
        None => PrimalSolution {
            value: ExtReal::PosInf,
            y: None,
            assignments_visited: outcome.visited,
            assignments_pruned: outcome.pruned,
        },
    })
}

/// One best-response sweep: the exact dual value at fixed prices,
/// with each player's contribution and minimiser.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualEvaluation {
    pub value: ExtReal,
    pub components: Vec<ExtReal>,
    pub responses: Vec<Option<Vec<f64>>>,
    pub oracle_calls: usize,
}

fn fold_components(components: &[ExtReal]) -> ExtReal {
    if components.iter().any(|c| matches!(c, ExtReal::PosInf)) {
        return ExtReal::PosInf;
    }
    if components.iter().any(|c| matches!(c, ExtReal::NegInf)) {
        return ExtReal::NegInf;
    }
    ExtReal::Finite(
        components
            .iter()
            .map(|c| c.finite().expect("finite component"))
            .sum(),
    )
}

/// Evaluates the dual function at a price vector by one oracle sweep.
pub fn evaluate_dual(
    pt: &PriceTakingGame<'_>,
    x: &[f64],
    registry: Option<&OracleRegistry>,
) -> Result<DualEvaluation> {
    let game = pt.game;
    if x.len() != game.n0 {
        return Err(Error::DimensionMismatch(format!(
            "price vector has {} entries for {} prices",
            x.len(),
            game.n0
        )));
    }
    let mut components = Vec::with_capacity(game.players.len());
    let mut responses = Vec::with_capacity(game.players.len());
    for i in 0..game.players.len() {
        let r = solve_player(game, i, x, registry)?;
        components.push(r.value);
        responses.push(r.minimizer);
    }
    Ok(DualEvaluation {
        value: fold_components(&components),
        components,
        responses,
        oracle_calls: game.players.len(),
    })
}

/// Options for the cutting-plane dual climb.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualOptions {
    /// Stop once the model value exceeds the best sweep by less than
    /// this.
    pub eps: f64,
    pub max_iterations: usize,
    /// Starting prices; defaults to the instance seed, then to zero
    /// clamped into the price box.
    pub x0: Option<Vec<f64>>,
    /// Stop climbing as soon as the model value drops below this
    /// threshold (certificate-only runs).
    pub stop_below: Option<f64>,
}

impl Default for DualOptions {
    fn default() -> Self {
        DualOptions {
            eps: 1e-6,
            max_iterations: 2000,
            x0: None,
            stop_below: None,
        }
    }
}

/// One iteration of the dual climb.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualIterationRecord {
    pub iteration: usize,
    /// Optimal value of the relaxed dual model over the price box.
    pub model_value: f64,
    /// Exact dual value at the proposal, when the sweep ran.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub value: Option<f64>,
    pub x: Vec<f64>,
    pub cuts_added: usize,
}

/// Result of the cutting-plane dual climb. `value` and `x` describe
/// the best sweep; `model_value` is the final upper model over the
/// box and is a bound on the unconstrained dual only when
/// `on_box_boundary` is false.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualBound {
    pub value: f64,
    pub x: Vec<f64>,
    pub components: Vec<f64>,
    pub responses: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub model_value: Option<f64>,
    pub converged: bool,
    /// The final proposal added no new cuts and its sweep matched the
    /// model, so the model value is the exact dual optimum over the
    /// box.
    pub tight: bool,
    /// The final proposal sat on the price box boundary, so the model
    /// value says nothing about prices outside the box.
    pub on_box_boundary: bool,
    pub iterations: usize,
    pub oracle_calls: usize,
    pub records: Vec<DualIterationRecord>,
    /// Oracle failure that ended the climb early.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

fn starting_prices(pt: &PriceTakingGame<'_>, explicit: Option<&[f64]>) -> Result<Vec<f64>> {
    let n0 = pt.game.n0;
    let chosen = explicit.map(<[f64]>::to_vec).or_else(|| pt.game.x0.clone());
    if let Some(x) = chosen {
        if x.len() != n0 {
            return Err(Error::DimensionMismatch(format!(
                "starting prices have {} entries for {n0} prices",
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel(
                "starting prices must be finite".to_string(),
            ));
        }
        return Ok(x);
    }
    Ok((0..n0)
        .map(|k| 0.0f64.clamp(pt.price_lower[k], pt.price_upper[k]))
        .collect())
}

/// Cut data at a pooled response `z` of player `i`: the price-free
/// value and the coefficient of each price.
fn cut_row(split: &SplitObjective, player: usize, z: &[f64]) -> (f64, Vec<f64>) {
    let lookup = |k: VarKey| match k {
        VarKey::Player(p, j) if p == player => z[j],
        _ => panic!("cut evaluation hit a foreign variable"),
    };
    let constant = split.base.eval(&lookup);
    let coeffs = split
        .price_coeffs
        .iter()
        .map(|c| c.eval(&lookup))
        .collect();
    (constant, coeffs)
}

/// The relaxed dual model: maximise `sum_i w_i` over the price box
/// subject to one cut `w_i <= constant + coeffs . x` per pooled
/// response, written as a minimisation for the simplex.
fn build_model_lp(pt: &PriceTakingGame<'_>, pools: &CutPools) -> DenseLinearProgram {
    let n0 = pt.game.n0;
    let np = pt.game.players.len();
    let width = n0 + np;
    let mut rows = Vec::new();
    let mut senses = Vec::new();
    let mut rhs = Vec::new();
    for i in 0..np {
        for z in pools.points(i) {
            let (constant, coeffs) = cut_row(&pt.split[i], i, z);
            let mut row = vec![0.0; width];
            for (k, c) in coeffs.iter().enumerate() {
                row[k] = -c;
            }
            row[n0 + i] = 1.0;
            rows.push(row);
            senses.push(Sense::Le);
            rhs.push(constant);
        }
    }
    let mut cost = vec![0.0; width];
    for i in 0..np {
        cost[n0 + i] = -1.0;
    }
    let mut lower = pt.price_lower.clone();
    lower.extend(std::iter::repeat_n(f64::NEG_INFINITY, np));
    let mut upper = pt.price_upper.clone();
    upper.extend(std::iter::repeat_n(f64::INFINITY, np));
    DenseLinearProgram {
        cost,
        rows,
        senses,
        rhs,
        lower,
        upper,
    }
}

/// Climbs the concave dual with a cutting-plane model over the price
/// box. Every sweep pools each player's response as a cut; the model
/// LP proposes the next prices; the climb stops when the model meets
/// the best sweep, when a sweep adds no new cuts, or at the iteration
/// cap. A mid-climb oracle failure ends the climb and is reported in
/// `error` alongside the results gathered so far; an unbounded
/// response is a hard error because no finite prices can repair it.
pub fn maximize_dual(
    pt: &PriceTakingGame<'_>,
    registry: Option<&OracleRegistry>,
    options: &DualOptions,
) -> Result<DualBound> {
    let game = pt.game;
    let n0 = game.n0;
    let np = game.players.len();
    let x0 = starting_prices(pt, options.x0.as_deref())?;

    let mut pools = CutPools::new(np);
    let mut oracle_calls = 0usize;
    let mut seed_values = vec![0.0; np];
    let mut seed_responses: Vec<Vec<f64>> = Vec::with_capacity(np);
    for i in 0..np {
        oracle_calls += 1;
        let r = solve_player(game, i, &x0, registry)?;
        match r.value {
            ExtReal::Finite(v) => {
                seed_values[i] = v;
                let z = r.minimizer.expect("finite oracle value carries a minimizer");
                seed_responses.push(z);
            }
            ExtReal::PosInf => {
                return Err(Error::Infeasible(format!(
                    "player {i} has an empty feasible set, so the dual has no value"
                )))
            }
            ExtReal::NegInf => {
                return Err(Error::Unbounded(format!(
                    "player {i}'s best response is unbounded at the starting prices; tighten \
                     the price box"
                )))
            }
        }
    }
    for (i, z) in seed_responses.iter().enumerate() {
        pools.add(i, z.clone());
    }
    let mut best_value: f64 = seed_values.iter().sum();
    let mut best_x = x0;
    let mut best_components = seed_values;
    let mut best_responses = seed_responses;

    let mut records: Vec<DualIterationRecord> = Vec::new();
    let mut model_value: Option<f64> = None;
    let mut final_x: Option<Vec<f64>> = None;
    let mut converged = false;
    let mut tight = false;
    let mut error: Option<String> = None;

    for iteration in 1..=options.max_iterations {
        let lp = build_model_lp(pt, &pools);
        let LpOutcome::Optimal { x: sol, objective, .. } = solve_lp(&lp)? else {
            return Err(Error::SolverFailure(
                "the relaxed dual model must be bounded over the price box".to_string(),
            ));
        };
        let x_hat: Vec<f64> = sol[..n0].to_vec();
        let model = -objective;
        model_value = Some(model);
        final_x = Some(x_hat.clone());

        if let Some(threshold) = options.stop_below {
            if model < threshold {
                records.push(DualIterationRecord {
                    iteration,
                    model_value: model,
                    value: None,
                    x: x_hat,
                    cuts_added: 0,
                });
                break;
            }
        }

        let mut values = vec![0.0; np];
        let mut responses: Vec<Vec<f64>> = Vec::with_capacity(np);
        for i in 0..np {
            oracle_calls += 1;
            match solve_player(game, i, &x_hat, registry) {
                Ok(r) => match r.value {
                    ExtReal::Finite(v) => {
                        values[i] = v;
                        match r.minimizer {
                            Some(z) => responses.push(z),
                            None => {
                                error = Some(format!(
                                    "player {i} returned a finite value without a minimizer at \
                                     iteration {iteration}"
                                ));
                                break;
                            }
                        }
                    }
                    ExtReal::PosInf => {
                        error = Some(format!(
                            "player {i} reported an empty feasible set at iteration {iteration}"
                        ));
                        break;
                    }
                    ExtReal::NegInf => {
                        return Err(Error::Unbounded(format!(
                            "player {i}'s best response is unbounded at the proposed prices; \
                             tighten the price box"
                        )))
                    }
                },
                Err(e) => {
                    error = Some(format!("oracle failure for player {i} at iteration {iteration}: {e}"));
                    break;
                }
            }
        }
        if error.is_some() {
            records.push(DualIterationRecord {
                iteration,
                model_value: model,
                value: None,
                x: x_hat,
                cuts_added: 0,
            });
            break;
        }

        let value: f64 = values.iter().sum();
        let mut cuts_added = 0usize;
        for (i, z) in responses.iter().enumerate() {
            if pools.add(i, z.clone()) {
                cuts_added += 1;
            }
        }
        if value > best_value {
            best_value = value;
            best_x = x_hat.clone();
            best_components = values;
            best_responses = responses;
        }
        records.push(DualIterationRecord {
            iteration,
            model_value: model,
            value: Some(value),
            x: x_hat,
            cuts_added,
        });

        let gap = model - best_value;
        if cuts_added == 0 {
            tight = model - value <= EXACTNESS_RTOL * (1.0 + value.abs());
            converged = gap < options.eps;
            break;
        }
        if gap < options.eps {
            converged = true;
            break;
        }
    }

    let on_box_boundary = match &final_x {
        Some(xh) => (0..n0).any(|k| {
            let scale = 1e-9 * (1.0 + xh[k].abs());
            xh[k] - pt.price_lower[k] <= scale || pt.price_upper[k] - xh[k] <= scale
        }),
        None => false,
    };

    Ok(DualBound {
        value: best_value,
        x: best_x,
        components: best_components,
        responses: best_responses,
        model_value,
        converged,
        tight,
        on_box_boundary,
        iterations: records.len(),
        oracle_calls,
        records,
        error,
    })
}

/// Options for the primal-dual minimum-disequilibrium solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalDualOptions {
    /// Absolute gap below which the solve counts as converged.
    pub eps: f64,
    /// Disequilibrium below which the point counts as an equilibrium.
    pub eps_equilibrium: f64,
    /// Lower bound above which no equilibrium is certified.
    pub eps_certify: f64,
    pub max_iterations: usize,
    /// Stop as soon as the dual model certifies that no equilibrium
    /// exists, skipping the remaining climb.
    pub stop_on_certificate: bool,
    pub x0: Option<Vec<f64>>,
}

impl Default for PrimalDualOptions {
    fn default() -> Self {
        PrimalDualOptions {
            eps: 1e-6,
            eps_equilibrium: 1e-6,
            eps_certify: 1e-6,
            max_iterations: 2000,
            stop_on_certificate: false,
            x0: None,
        }
    }
}

/// Outcome of the primal-dual solve. The candidate point pairs the
/// dual prices with the primal dispatch; `upper_bound` is its exact
/// disequilibrium, and `lower_bound` is a certified bound on every
/// point's disequilibrium unless `price_box_clipped` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceTakingReport {
    pub schema: u32,
    pub instance: String,
    pub status: SolveStatus,
    pub exact: bool,
    pub no_equilibrium_certified: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub disequilibrium: Option<f64>,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub primal_value: f64,
    pub dual_value: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dual_model_value: Option<f64>,
    pub price_box_clipped: bool,
    pub point: GamePoint,
    pub player_gaps: Vec<f64>,
    pub best_response_values: Vec<f64>,
    pub iterations: usize,
    pub oracle_calls: usize,
    pub records: Vec<DualIterationRecord>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    #[serde(skip_serializing, default)]
    pub wall_ms: u64,
}

/// Solves the minimum-disequilibrium problem for a price-taking game:
/// one exact primal dispatch, one cutting-plane dual climb, and a
/// candidate point assembled from the two. The point's disequilibrium
/// is reported exactly; the certified lower bound comes from the dual
/// model when its final proposal stayed strictly inside the price
/// box.
pub fn solve_min_disequilibrium(
    game: &GameInstance,
    registry: Option<&OracleRegistry>,
    options: &PrimalDualOptions,
) -> Result<PriceTakingReport> {
    let started = Instant::now();
    let pt = detect(game)?;
    let primal = solve_primal(&pt)?;
    let (primal_value, primal_point) = match (primal.value, primal.y) {
        (ExtReal::Finite(v), Some(y)) => (v, y),
        _ => {
            return Err(Error::Infeasible(
                "the joint dispatch problem has no feasible point; the balance rows and the \
                 private sets are inconsistent"
                    .to_string(),
            ))
        }
    };
    let dual_options = DualOptions {
        eps: options.eps,
        max_iterations: options.max_iterations,
        x0: options.x0.clone(),
        stop_below: options
            .stop_on_certificate
            .then_some(primal_value - options.eps_certify),
    };
    let dual = maximize_dual(&pt, registry, &dual_options)?;

    let point = GamePoint::new(dual.x.clone(), primal_point);
    let mut player_gaps = Vec::with_capacity(game.players.len());
    for i in 0..game.players.len() {
        player_gaps.push(game.evaluate_player_objective(i, &point)? - dual.components[i]);
    }
    let upper: f64 = player_gaps.iter().sum();

    let clipped = dual.on_box_boundary;
    let lower = match dual.model_value {
        Some(m) if !clipped => primal_value - m,
        _ => 0.0,
    };
    let effective_lower = lower.max(0.0);
    let exact = (dual.tight && !clipped) || upper <= effective_lower;
    let certified = effective_lower > options.eps_certify;
    let converged = (dual.tight && !clipped) || upper - effective_lower < options.eps;

    let status = if dual.error.is_some() {
        SolveStatus::OracleFailure
    } else if options.stop_on_certificate && certified {
        SolveStatus::NoEquilibriumCertified
    } else if converged {
        if upper <= options.eps_equilibrium {
            SolveStatus::EquilibriumFound
        } else if exact {
            SolveStatus::MdExact
        } else {
            SolveStatus::MdEpsOptimal
        }
    } else {
        SolveStatus::IterationLimit
    };
    let disequilibrium = match status {
        SolveStatus::EquilibriumFound | SolveStatus::MdExact | SolveStatus::MdEpsOptimal => {
            Some(upper)
        }
        _ => None,
    };

    Ok(PriceTakingReport {
        schema: 1,
        instance: game.name.clone(),
        status,
        exact,
        no_equilibrium_certified: certified,
        disequilibrium,
        lower_bound: lower,
        upper_bound: upper,
        primal_value,
        dual_value: dual.value,
        dual_model_value: dual.model_value,
        price_box_clipped: clipped,
        point,
        player_gaps,
        best_response_values: dual.components,
        iterations: dual.iterations,
        oracle_calls: dual.oracle_calls,
        records: dual.records,
        error: dual.error,
        wall_ms: started.elapsed().as_millis() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        FeasibleSet, GlobalConstraint, LinearConstraint, NonlinearConstraint, OracleBinding,
        Player, PriceTakingForm, ToleranceConfig,
    };
    use crate::Expression;

    fn near(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-7
    }

    fn trade_game() -> GameInstance {
        let producer = Player {
            id: "producer".to_string(),
            n: 1,
            objective: Expression::add_all(vec![
                Expression::PVar(0, 0),
                Expression::Mul(vec![
                    Expression::Const(-1.0),
                    Expression::SVar(0),
                    Expression::PVar(0, 0),
                ]),
            ]),
            feasible_set: FeasibleSet::boxed(vec![0.0], vec![2.0]),
            joint_feasible: None,
            oracle: OracleBinding::BoxLp,
            price_taking_form: Some(PriceTakingForm {
                ga: Expression::PVar(0, 0),
                gb: vec![Expression::scaled(-1.0, Expression::PVar(0, 0))],
            }),
        };
        let consumer = Player {
            id: "consumer".to_string(),
            n: 1,
            objective: Expression::add_all(vec![
                Expression::scaled(-3.0, Expression::PVar(1, 0)),
                Expression::Mul(vec![Expression::SVar(0), Expression::PVar(1, 0)]),
            ]),
            feasible_set: FeasibleSet::boxed(vec![0.0], vec![1.0]),
            joint_feasible: None,
            oracle: OracleBinding::BoxLp,
            price_taking_form: None,
        };
        GameInstance {
            name: "trade".to_string(),
            n0: 1,
            x_set: FeasibleSet::free(1),
            players: vec![producer, consumer],
            global_constraints: vec![GlobalConstraint {
                expr: Expression::add_all(vec![
                    Expression::PVar(1, 0),
                    Expression::scaled(-1.0, Expression::PVar(0, 0)),
                ]),
                sense: Sense::Eq,
            }],
            mu: MuMeasure::Sum,
            tolerances: ToleranceConfig::default(),
            x0: None,
            price_box: Some((vec![0.0], vec![10.0])),
        }
    }

    fn binary_producer_game() -> GameInstance {
        let producer = Player {
            id: "producer".to_string(),
            n: 1,
            objective: Expression::add_all(vec![
                Expression::scaled(3.0, Expression::PVar(0, 0)),
                Expression::Mul(vec![
                    Expression::Const(-2.0),
                    Expression::SVar(0),
                    Expression::PVar(0, 0),
                ]),
            ]),
            feasible_set: FeasibleSet::integer_box(vec![0.0], vec![1.0]),
            joint_feasible: None,
            oracle: OracleBinding::Enumeration,
            price_taking_form: None,
        };
        let consumer = Player {
            id: "consumer".to_string(),
            n: 1,
            objective: Expression::add_all(vec![
                Expression::scaled(-2.0, Expression::PVar(1, 0)),
                Expression::Mul(vec![Expression::SVar(0), Expression::PVar(1, 0)]),
            ]),
            feasible_set: FeasibleSet::boxed(vec![0.0], vec![1.0]),
            joint_feasible: None,
            oracle: OracleBinding::BoxLp,
            price_taking_form: None,
        };
        GameInstance {
            name: "binary-producer".to_string(),
            n0: 1,
            x_set: FeasibleSet::free(1),
            players: vec![producer, consumer],
            global_constraints: vec![GlobalConstraint {
                expr: Expression::add_all(vec![
                    Expression::PVar(1, 0),
                    Expression::scaled(-2.0, Expression::PVar(0, 0)),
                ]),
                sense: Sense::Eq,
            }],
            mu: MuMeasure::Sum,
            tolerances: ToleranceConfig::default(),
            x0: None,
            price_box: Some((vec![0.0], vec![10.0])),
        }
    }

    fn pipe_game() -> GameInstance {
        let mut pipe_set = FeasibleSet::boxed(vec![0.0, 0.0, 0.0], vec![10.0, 9.0, 9.0]);
        pipe_set.nonlinear.push(NonlinearConstraint {
            expr: Expression::add_all(vec![
                Expression::SVar(1),
                Expression::scaled(-1.0, Expression::SVar(2)),
                Expression::scaled(
                    -1.0,
                    Expression::Square(Box::new(Expression::SVar(0))),
                ),
            ]),
            sense: Sense::Eq,
        });
        let pipe = Player {
            id: "pipe".to_string(),
            n: 3,
            objective: Expression::Mul(vec![
                Expression::Const(-1.0),
                Expression::SVar(0),
                Expression::PVar(0, 0),
            ]),
            feasible_set: pipe_set,
            joint_feasible: None,
            oracle: OracleBinding::TreeTransmission,
            price_taking_form: None,
        };
        let consumer = Player {
            id: "consumer".to_string(),
            n: 1,
            objective: Expression::add_all(vec![
                Expression::scaled(-5.0, Expression::PVar(1, 0)),
                Expression::Mul(vec![Expression::SVar(0), Expression::PVar(1, 0)]),
            ]),
            feasible_set: FeasibleSet::boxed(vec![0.0], vec![10.0]),
            joint_feasible: None,
            oracle: OracleBinding::BoxLp,
            price_taking_form: None,
        };
        GameInstance {
            name: "pipe".to_string(),
            n0: 1,
            x_set: FeasibleSet::free(1),
            players: vec![pipe, consumer],
            global_constraints: vec![GlobalConstraint {
                expr: Expression::add_all(vec![
                    Expression::PVar(1, 0),
                    Expression::scaled(-1.0, Expression::PVar(0, 0)),
                ]),
                sense: Sense::Eq,
            }],
            mu: MuMeasure::Sum,
            tolerances: ToleranceConfig::default(),
            x0: None,
            price_box: Some((vec![0.0], vec![12.0])),
        }
    }

    #[test]
    fn detects_price_structure_and_splits_objectives() {
        let game = trade_game();
        let pt = detect(&game).unwrap();
        assert!(!pt.synthetic_box);
        assert_eq!(pt.price_lower, vec![0.0]);
        assert_eq!(pt.price_upper, vec![10.0]);
        let at = |poly: &Polynomial, i: usize, v: f64| {
            poly.eval(&|k| match k {
                VarKey::Player(p, 0) if p == i => v,
                _ => 0.0,
            })
        };
        assert_eq!(at(&pt.split[0].base, 0, 2.0), 2.0);
        assert_eq!(at(&pt.split[0].price_coeffs[0], 0, 2.0), -2.0);
        assert_eq!(at(&pt.split[1].base, 1, 2.0), -6.0);
        assert_eq!(at(&pt.split[1].price_coeffs[0], 1, 2.0), 2.0);

        let mut unboxed = trade_game();
        unboxed.price_box = None;
        let pt = detect(&unboxed).unwrap();
        assert!(pt.synthetic_box);
        assert_eq!(pt.price_lower, vec![-DEFAULT_PRICE_BOUND]);
        assert_eq!(pt.price_upper, vec![DEFAULT_PRICE_BOUND]);
    }

    #[test]
    fn rejects_structures_outside_the_price_taking_form() {
        let mut boxed_prices = trade_game();
        boxed_prices.x_set = FeasibleSet::boxed(vec![0.0], vec![10.0]);
        assert!(matches!(
            detect(&boxed_prices),
            Err(Error::UnsupportedStructure(_))
        ));

        let mut max_measure = trade_game();
        max_measure.mu = MuMeasure::Max;
        assert!(matches!(
            detect(&max_measure),
            Err(Error::UnsupportedStructure(_))
        ));

        let mut inequality_row = trade_game();
        inequality_row.global_constraints[0].sense = Sense::Le;
        assert!(matches!(
            detect(&inequality_row),
            Err(Error::UnsupportedStructure(_))
        ));

        let mut extra_row = trade_game();
        let row = extra_row.global_constraints[0].clone();
        extra_row.global_constraints.push(row);
        assert!(matches!(
            detect(&extra_row),
            Err(Error::UnsupportedStructure(_))
        ));

        let mut quadratic_price = trade_game();
        quadratic_price.players[0].price_taking_form = None;
        quadratic_price.players[0].objective = Expression::add_all(vec![
            Expression::PVar(0, 0),
            Expression::Mul(vec![
                Expression::Square(Box::new(Expression::SVar(0))),
                Expression::PVar(0, 0),
            ]),
        ]);
        assert!(matches!(
            detect(&quadratic_price),
            Err(Error::UnsupportedStructure(_))
        ));

        let mut wrong_balance = trade_game();
        wrong_balance.global_constraints[0].expr = Expression::add_all(vec![
            Expression::PVar(1, 0),
            Expression::scaled(-2.0, Expression::PVar(0, 0)),
        ]);
        assert!(matches!(
            detect(&wrong_balance),
            Err(Error::UnsupportedStructure(_))
        ));

        let mut price_in_row = trade_game();
        price_in_row.global_constraints[0].expr = Expression::add_all(vec![
            Expression::SVar(0),
            Expression::PVar(1, 0),
            Expression::scaled(-1.0, Expression::PVar(0, 0)),
        ]);
        assert!(matches!(
            detect(&price_in_row),
            Err(Error::UnsupportedStructure(_))
        ));

        let mut lying_declaration = trade_game();
        lying_declaration.players[0].price_taking_form = Some(PriceTakingForm {
            ga: Expression::scaled(2.0, Expression::PVar(0, 0)),
            gb: vec![Expression::scaled(-1.0, Expression::PVar(0, 0))],
        });
        assert!(matches!(
            detect(&lying_declaration),
            Err(Error::InvalidModel(_))
        ));
    }

    #[test]
    fn dispatch_primal_solves_the_linear_route() {
        let game = trade_game();
        let pt = detect(&game).unwrap();
        let primal = solve_primal(&pt).unwrap();
        assert!(near(primal.value.finite().unwrap(), -2.0));
        let y = primal.y.unwrap();
        assert!(near(y[0][0], 1.0));
        assert!(near(y[1][0], 1.0));
        assert_eq!(primal.assignments_visited, 1);
        assert_eq!(primal.assignments_pruned, 0);

        let game = binary_producer_game();
        let pt = detect(&game).unwrap();
        let primal = solve_primal(&pt).unwrap();
        assert!(near(primal.value.finite().unwrap(), 0.0));
        let y = primal.y.unwrap();
        assert!(near(y[0][0], 0.0));
        assert!(near(y[1][0], 0.0));
        assert_eq!(primal.assignments_visited, 2);
        assert_eq!(primal.assignments_pruned, 0);
    }

    #[test]
    fn dispatch_primal_prunes_assignments_with_the_relaxation() {
        let mut pipe_set = FeasibleSet::boxed(
            vec![0.0, 0.0, 0.0, 0.0],
            vec![10.0, 9.0, 9.0, 1.0],
        );
        pipe_set.integral[3] = true;
        pipe_set.linear.push(LinearConstraint {
            coeffs: vec![1.0, 0.0, 0.0, -10.0],
            sense: Sense::Le,
            rhs: 0.0,
        });
        pipe_set.nonlinear.push(NonlinearConstraint {
            expr: Expression::add_all(vec![
                Expression::SVar(1),
                Expression::scaled(-1.0, Expression::SVar(2)),
                Expression::scaled(
                    -1.0,
                    Expression::Square(Box::new(Expression::SVar(0))),
                ),
            ]),
            sense: Sense::Eq,
        });
        let pipe = Player {
            id: "pipe".to_string(),
            n: 4,
            objective: Expression::add_all(vec![
                Expression::scaled(7.0, Expression::PVar(0, 3)),
                Expression::Mul(vec![
                    Expression::Const(-1.0),
                    Expression::SVar(0),
                    Expression::PVar(0, 0),
                ]),
            ]),
            feasible_set: pipe_set,
            joint_feasible: None,
            oracle: OracleBinding::Enumeration,
            price_taking_form: None,
        };
        let consumer = Player {
            id: "consumer".to_string(),
            n: 1,
            objective: Expression::add_all(vec![
                Expression::scaled(-5.0, Expression::PVar(1, 0)),
                Expression::Mul(vec![Expression::SVar(0), Expression::PVar(1, 0)]),
            ]),
            feasible_set: FeasibleSet::boxed(vec![0.0], vec![10.0]),
            joint_feasible: None,
            oracle: OracleBinding::BoxLp,
            price_taking_form: None,
        };
        let game = GameInstance {
            name: "buildable-pipe".to_string(),
            n0: 1,
            x_set: FeasibleSet::free(1),
            players: vec![pipe, consumer],
            global_constraints: vec![GlobalConstraint {
                expr: Expression::add_all(vec![
                    Expression::PVar(1, 0),
                    Expression::scaled(-1.0, Expression::PVar(0, 0)),
                ]),
                sense: Sense::Eq,
            }],
            mu: MuMeasure::Sum,
            tolerances: ToleranceConfig::default(),
            x0: None,
            price_box: Some((vec![0.0], vec![12.0])),
        };
        let pt = detect(&game).unwrap();
        let primal = solve_primal(&pt).unwrap();
        let value = primal.value.finite().unwrap();
        assert!((value - -8.0).abs() < 1e-6);
        let y = primal.y.unwrap();
        assert!((y[0][0] - 3.0).abs() < 1e-6);
        assert!((y[0][3] - 1.0).abs() < 1e-9);
        assert!((y[1][0] - 3.0).abs() < 1e-6);
        assert_eq!(primal.assignments_visited, 1);
        assert_eq!(primal.assignments_pruned, 1);
    }

    #[test]
    fn dual_sweep_reports_unbounded_and_empty_components() {
        let mut unbounded = trade_game();
        unbounded.players[0].feasible_set = FeasibleSet::boxed(vec![0.0], vec![f64::INFINITY]);
        let pt = detect(&unbounded).unwrap();
        let sweep = evaluate_dual(&pt, &[2.0], None).unwrap();
        assert_eq!(sweep.value, ExtReal::NegInf);
        assert_eq!(sweep.components[0], ExtReal::NegInf);
        assert_eq!(sweep.responses[0], None);
        assert_eq!(sweep.components[1], ExtReal::Finite(-1.0));
        assert_eq!(sweep.oracle_calls, 2);

        let mut empty = trade_game();
        empty.players[0].feasible_set = FeasibleSet::integer_box(vec![0.0], vec![1.0]);
        empty.players[0].feasible_set.linear.push(LinearConstraint {
            coeffs: vec![1.0],
            sense: Sense::Le,
            rhs: -1.0,
        });
        empty.players[0].oracle = OracleBinding::Enumeration;
        let pt = detect(&empty).unwrap();
        let sweep = evaluate_dual(&pt, &[0.0], None).unwrap();
        assert_eq!(sweep.value, ExtReal::PosInf);
        assert_eq!(sweep.components[0], ExtReal::PosInf);
        assert_eq!(sweep.components[1], ExtReal::Finite(-3.0));
    }

    #[test]
    fn kelley_climb_finds_the_market_clearing_price() {
        let game = trade_game();
        let pt = detect(&game).unwrap();
        let dual = maximize_dual(&pt, None, &DualOptions::default()).unwrap();
        assert!(near(dual.value, -2.0));
        assert!(near(dual.x[0], 1.0));
        assert!(near(dual.components[0], 0.0));
        assert!(near(dual.components[1], -2.0));
        assert!(near(dual.model_value.unwrap(), -2.0));
        assert!(dual.converged);
        assert!(dual.tight);
        assert!(!dual.on_box_boundary);
        assert_eq!(dual.iterations, 2);
        assert_eq!(dual.oracle_calls, 6);
        assert!(near(dual.records[0].x[0], 10.0));
        assert!(near(dual.records[0].model_value, 7.0));
        assert!(near(dual.records[0].value.unwrap(), -18.0));
        assert_eq!(dual.records[0].cuts_added, 2);
        assert_eq!(dual.records[1].cuts_added, 0);
        assert_eq!(dual.error, None);
    }

    #[test]
    fn trade_game_reaches_equilibrium() {
        let game = trade_game();
        let report =
            solve_min_disequilibrium(&game, None, &PrimalDualOptions::default()).unwrap();
        assert_eq!(report.status, SolveStatus::EquilibriumFound);
        assert!(report.exact);
        assert!(!report.no_equilibrium_certified);
        assert!(near(report.disequilibrium.unwrap(), 0.0));
        assert!(near(report.lower_bound, 0.0));
        assert!(near(report.upper_bound, 0.0));
        assert!(near(report.primal_value, -2.0));
        assert!(near(report.dual_value, -2.0));
        assert!(!report.price_box_clipped);
        assert!(near(report.point.x[0], 1.0));
        assert!(near(report.point.y[0][0], 1.0));
        assert!(near(report.point.y[1][0], 1.0));
        assert!(near(report.player_gaps[0], 0.0));
        assert!(near(report.player_gaps[1], 0.0));
        assert_eq!(report.iterations, 2);
        assert_eq!(report.oracle_calls, 6);
    }

    #[test]
    fn binary_producer_gets_exact_positive_disequilibrium() {
        let game = binary_producer_game();
        let report =
            solve_min_disequilibrium(&game, None, &PrimalDualOptions::default()).unwrap();
        assert_eq!(report.status, SolveStatus::MdExact);
        assert!(report.exact);
        assert!(report.no_equilibrium_certified);
        assert!(near(report.disequilibrium.unwrap(), 0.5));
        assert!(near(report.lower_bound, 0.5));
        assert!(near(report.upper_bound, 0.5));
        assert!(near(report.primal_value, 0.0));
        assert!(near(report.dual_value, -0.5));
        assert!(near(report.point.x[0], 1.5));
        assert!(near(report.point.y[0][0], 0.0));
        assert!(near(report.point.y[1][0], 0.0));
        assert!(near(report.player_gaps[0], 0.0));
        assert!(near(report.player_gaps[1], 0.5));
        assert_eq!(report.oracle_calls, 6);
    }

    #[test]
    fn certificate_mode_stops_early_with_a_lower_bound() {
        let game = binary_producer_game();
        let options = PrimalDualOptions {
            stop_on_certificate: true,
            ..PrimalDualOptions::default()
        };
        let report = solve_min_disequilibrium(&game, None, &options).unwrap();
        assert_eq!(report.status, SolveStatus::NoEquilibriumCertified);
        assert!(report.no_equilibrium_certified);
        assert!(!report.exact);
        assert_eq!(report.disequilibrium, None);
        assert!(near(report.lower_bound, 0.5));
        assert_eq!(report.oracle_calls, 4);
        assert_eq!(report.iterations, 2);
        assert_eq!(report.records[1].value, None);
        assert_eq!(report.error, None);
    }

    #[test]
    fn network_game_clears_through_the_pipe() {
        let game = pipe_game();
        let pt = detect(&game).unwrap();
        let primal = solve_primal(&pt).unwrap();
        let value = primal.value.finite().unwrap();
        assert!((value - -15.0).abs() < 1e-6);
        let y = primal.y.clone().unwrap();
        assert!((y[0][0] - 3.0).abs() < 1e-6);
        assert!((y[0][1] - 9.0).abs() < 1e-5);
        assert!(y[0][2].abs() < 1e-5);
        assert!((y[1][0] - 3.0).abs() < 1e-6);

        let report =
            solve_min_disequilibrium(&game, None, &PrimalDualOptions::default()).unwrap();
        assert_eq!(report.status, SolveStatus::EquilibriumFound);
        assert!(report.disequilibrium.unwrap().abs() < 1e-6);
        assert!((report.point.x[0] - 5.0).abs() < 1e-6);
        assert!((report.primal_value - -15.0).abs() < 1e-6);
        assert_eq!(report.iterations, 2);
        assert_eq!(report.oracle_calls, 6);
    }

    #[test]
    fn unbounded_response_prices_error_out() {
        let mut game = trade_game();
        game.players[0].feasible_set = FeasibleSet::boxed(vec![0.0], vec![f64::INFINITY]);
        let pt = detect(&game).unwrap();
        let err = maximize_dual(&pt, None, &DualOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Unbounded(_)));
    }

    #[test]
    fn reports_serialize_deterministically() {
        let game = trade_game();
        let report =
            solve_min_disequilibrium(&game, None, &PrimalDualOptions::default()).unwrap();
        let first = serde_json::to_string(&report).unwrap();
        let second = serde_json::to_string(&report).unwrap();
        assert_eq!(first, second);
        assert!(!first.contains("wall_ms"));
        assert!(first.contains("\"status\":\"EQUILIBRIUM_FOUND\""));
        let back: PriceTakingReport = serde_json::from_str(&first).unwrap();
        assert_eq!(back.wall_ms, 0);
        assert_eq!(back.status, report.status);
        assert_eq!(back.point, report.point);
    }
}
