//! Pooled lower bound on the minimum disequilibrium.
//!
//! For each player `i`, a pool of feasible responses `z` turns the
//! intractable inner optimum `g_i^*(x)` into finitely many cuts
//! `w_i <= g_i(x, z)`. Minimising the aggregated slack
//! `mu(g(x, y) - w)` over the joint feasible set with those cuts
//! relaxes the true problem, because the pooled `w_i` only overstates
//! how well player `i` could respond. The optimal value is therefore a
//! certified lower bound that tightens as pools grow.
//!
//! Integral variables (shared or per player) are enumerated; each
//! assignment leaves a continuous problem with quadratic objective and
//! affine rows. When the quadratic term is convex the assignment is
//! one convex QP; otherwise the equality rows are eliminated first and
//! the reduced problem must turn convex on that subspace, as happens
//! when coupling equalities pin one side of a bilinear term. Anything
//! still nonconvex is reported as unsupported rather than silently
//! bounded wrong.

use super::ENUMERATION_CAP;
use crate::error::{Error, Result};
use crate::expr::{Polynomial, VarKey};
use crate::ext::ExtReal;
use crate::model::{GameInstance, MuMeasure, Sense};
use crate::subsolvers::linalg::{dot, is_psd};
use crate::subsolvers::{enumerate_assignments, solve_qp, DenseConvexQp, QpOutcome};

/// Per-player pools of feasible response points backing the cuts.
#[derive(Debug, Clone, PartialEq)]
pub struct CutPools {
    per_player: Vec<Vec<Vec<f64>>>,
}

impl CutPools {
    pub fn new(num_players: usize) -> Self {
        CutPools {
            per_player: vec![Vec::new(); num_players],
        }
    }

    /// Adds a response point to player `i`'s pool. Returns `false`
    /// when an identical point is already pooled, so callers can
    /// detect stalled cut generation.
    pub fn add(&mut self, player: usize, point: Vec<f64>) -> bool {
        if self.contains(player, &point) {
            return false;
        }
        self.per_player[player].push(point);
        true
    }

    pub fn contains(&self, player: usize, point: &[f64]) -> bool {
        self.per_player[player].iter().any(|p| p == point)
    }

    pub fn points(&self, player: usize) -> &[Vec<f64>] {
        &self.per_player[player]
    }

    pub fn num_players(&self) -> usize {
        self.per_player.len()
    }

    pub fn total_points(&self) -> usize {
        self.per_player.iter().map(Vec::len).sum()
    }
}

/// Solution of the pooled relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundSolution {
    /// The lower bound itself; `-inf` when the relaxation is unbounded.
    pub value: ExtReal,
    pub x: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    /// Pooled response values, one per player.
    pub w: Vec<f64>,
}

/// A variable of the joint relaxation that is not a `w` column.
#[derive(Debug, Clone, Copy, PartialEq)]
enum JointVar {
    Shared(usize),
    Player(usize, usize),
}

/// One row of the relaxation: a polynomial over game variables plus
/// per-player `w` coefficients, compared against zero.
struct JointRow {
    poly: Polynomial,
    w_coeff: Vec<f64>,
    sense: Sense,
}

pub fn solve_lower_bound(game: &GameInstance, pools: &CutPools) -> Result<LowerBoundSolution> {
    game.require_constant_feasible_sets("the pooled lower bound")?;
    let num_players = game.players.len();
    let weights = match &game.mu {
        MuMeasure::Sum => vec![1.0; num_players],
        MuMeasure::WeightedSum(w) => w.clone(),
        MuMeasure::Max => {
            return Err(Error::UnsupportedStructure(
                "the pooled lower bound requires an additive measure; max is not \
                 supported"
                    .into(),
            ))
        }
    };
    if pools.num_players() != num_players {
        return Err(Error::DimensionMismatch(format!(
            "cut pools cover {} players, instance has {num_players}",
            pools.num_players()
        )));
    }
    for (i, p) in game.players.iter().enumerate() {
        if pools.points(i).is_empty() {
            return Err(Error::InvalidModel(format!(
                "cut pool for player {i} is empty; seed it with a feasible response"
            )));
        }
        if let Some(z) = pools.points(i).iter().find(|z| z.len() != p.n) {
            return Err(Error::DimensionMismatch(format!(
                "a pooled point for player {i} has length {}, expected {}",
                z.len(),
                p.n
            )));
        }
    }

    let objectives: Vec<Polynomial> = game
        .players
        .iter()
        .map(|p| p.objective.expand())
        .collect::<Result<_>>()?;
    let mut obj_poly = Polynomial::zero();
    for (g, &lambda) in objectives.iter().zip(&weights) {
        let mut term = g.clone();
        term.scale(lambda);
        obj_poly.add_assign(&term);
    }

    let mut rows: Vec<JointRow> = Vec::new();
    let mut push_poly = |poly: Polynomial, sense: Sense| {
        rows.push(JointRow {
            poly,
            w_coeff: vec![0.0; num_players],
            sense,
        });
    };
    let linear_poly = |coeffs: &[f64], rhs: f64, key: &dyn Fn(usize) -> VarKey| {
        let mut p = Polynomial::constant(-rhs);
        for (j, &a) in coeffs.iter().enumerate() {
            if a != 0.0 {
                let mut t = Polynomial::variable(key(j));
                t.scale(a);
                p.add_assign(&t);
            }
        }
        p
    };
    for lin in &game.x_set.linear {
        push_poly(
            linear_poly(&lin.coeffs, lin.rhs, &VarKey::Shared),
            lin.sense,
        );
    }
    for row in &game.x_set.nonlinear {
        push_poly(row.expr.expand()?, row.sense);
    }
    for (i, p) in game.players.iter().enumerate() {
        for lin in &p.feasible_set.linear {
            push_poly(
                linear_poly(&lin.coeffs, lin.rhs, &|j| VarKey::Player(i, j)),
                lin.sense,
            );
        }
        for (poly, sense) in super::player_row_polys(&p.feasible_set, i)? {
            push_poly(poly, sense);
        }
    }
    for row in &game.global_constraints {
        push_poly(row.expr.expand()?, row.sense);
    }
    for (i, g) in objectives.iter().enumerate() {
        for z in pools.points(i) {
            let mut cut = g.substitute(&|k| match k {
                VarKey::Player(p, j) if p == i => Some(z[j]),
                _ => None,
            });
            cut.scale(-1.0);
            let mut w_coeff = vec![0.0; num_players];
            w_coeff[i] = 1.0;
            rows.push(JointRow {
                poly: cut,
                w_coeff,
                sense: Sense::Le,
            });
        }
    }

    // Integral coordinates become enumeration slots; the rest become
    // continuous columns, followed by one w column per player.
    let mut slots: Vec<JointVar> = Vec::new();
    let mut choices: Vec<Vec<f64>> = Vec::new();
    let mut cols: Vec<JointVar> = Vec::new();
    let mut shared_col: Vec<Option<usize>> = vec![None; game.n0];
    let mut player_col: Vec<Vec<Option<usize>>> =
        game.players.iter().map(|p| vec![None; p.n]).collect();
    let mut lower: Vec<f64> = Vec::new();
    let mut upper: Vec<f64> = Vec::new();

    let mut classify = |var: JointVar,
                        integral: bool,
                        lo: f64,
                        hi: f64,
                        slots: &mut Vec<JointVar>,
                        choices: &mut Vec<Vec<f64>>,
                        cols: &mut Vec<JointVar>|
     -> Result<Option<usize>> {
        if integral {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::UnsupportedStructure(format!(
                    "integral variable {var:?} has an infinite bound"
                )));
            }
            let (a, b) = (lo.ceil() as i64, hi.floor() as i64);
            slots.push(var);
            choices.push((a..=b).map(|v| v as f64).collect());
            Ok(None)
        } else {
            cols.push(var);
            lower.push(lo);
            upper.push(hi);
            Ok(Some(cols.len() - 1))
        }
    };
    for k in 0..game.n0 {
        shared_col[k] = classify(
            JointVar::Shared(k),
            game.x_set.integral[k],
            game.x_set.lower[k],
            game.x_set.upper[k],
            &mut slots,
            &mut choices,
            &mut cols,
        )?;
    }
    for (i, p) in game.players.iter().enumerate() {
        for j in 0..p.n {
            player_col[i][j] = classify(
                JointVar::Player(i, j),
                p.feasible_set.integral[j],
                p.feasible_set.lower[j],
                p.feasible_set.upper[j],
                &mut slots,
                &mut choices,
                &mut cols,
            )?;
        }
    }
    let w_col: Vec<usize> = (0..num_players).map(|i| cols.len() + i).collect();
    let n_cols = cols.len() + num_players;
    lower.extend(std::iter::repeat(f64::NEG_INFINITY).take(num_players));
    upper.extend(std::iter::repeat(f64::INFINITY).take(num_players));

    let index_of = |k: VarKey| match k {
        VarKey::Shared(s) => shared_col[s],
        VarKey::Player(i, j) => player_col[i][j],
    };

    let outcome = enumerate_assignments(
        &choices,
        ENUMERATION_CAP,
        |_| None,
        |assign| {
            let value_of = |k: VarKey| {
                slots
                    .iter()
                    .position(|&v| match (v, k) {
                        (JointVar::Shared(a), VarKey::Shared(b)) => a == b,
                        (JointVar::Player(a, b), VarKey::Player(c, d)) => a == c && b == d,
                        _ => false,
                    })
                    .map(|s| assign[s])
            };

            let mut qp_rows = Vec::new();
            let mut qp_senses = Vec::new();
            let mut qp_rhs = Vec::new();
            for row in &rows {
                let sub = row.poly.substitute(&value_of);
                if sub.max_degree() > 1 {
                    return Err(Error::UnsupportedStructure(
                        "a relaxation row is not affine once integral variables are \
                         fixed"
                            .into(),
                    ));
                }
                let qf = sub.to_quadratic_form(n_cols, &index_of)?;
                let mut coeffs = qf.linear;
                for (i, &c) in row.w_coeff.iter().enumerate() {
                    coeffs[w_col[i]] += c;
                }
                qp_rows.push(coeffs);
                qp_senses.push(row.sense);
                qp_rhs.push(-qf.constant);
            }

            let obj = obj_poly.substitute(&value_of);
            let mut qf = obj.to_quadratic_form(n_cols, &index_of)?;
            for (i, &lambda) in weights.iter().enumerate() {
                qf.linear[w_col[i]] -= lambda;
            }

            let qp = DenseConvexQp {
                q: qf.q,
                linear: qf.linear,
                constant: qf.constant,
                rows: qp_rows,
                senses: qp_senses,
                rhs: qp_rhs,
                lower: lower.clone(),
                upper: upper.clone(),
            };
            solve_convexified(qp)
        },
    )?;

    let Some((assign, value, point)) = outcome.best else {
        return Err(Error::Infeasible(
            "the pooled relaxation has no feasible point".into(),
        ));
    };

    let read = |var: JointVar| -> f64 {
        if let Some(s) = slots.iter().position(|&v| v == var) {
            return assign[s];
        }
        let c = cols.iter().position(|&v| v == var).expect("joint column");
        point[c]
    };
    let x: Vec<f64> = (0..game.n0).map(|k| read(JointVar::Shared(k))).collect();
    let y: Vec<Vec<f64>> = game
        .players
        .iter()
        .enumerate()
        .map(|(i, p)| (0..p.n).map(|j| read(JointVar::Player(i, j))).collect())
        .collect();
    let w: Vec<f64> = w_col.iter().map(|&c| point[c]).collect();
    let value = if value == f64::NEG_INFINITY {
        ExtReal::NegInf
    } else {
        ExtReal::Finite(value)
    };
    Ok(LowerBoundSolution { value, x, y, w })
}

/// Solves one assignment's continuous relaxation. `None` marks an
/// infeasible assignment; a `NEG_INFINITY` value marks an unbounded
/// one, with the point witnessing feasibility.
fn solve_convexified(qp: DenseConvexQp) -> Result<Option<(f64, Vec<f64>)>> {
    if is_psd(&qp.q) {
        return Ok(match solve_qp(&qp)? {
            QpOutcome::Optimal { x, objective, .. } => Some((objective, x)),
            QpOutcome::Infeasible { .. } => None,
            QpOutcome::Unbounded { x, .. } => Some((f64::NEG_INFINITY, x)),
        });
    }

    // Nonconvex as stated: eliminate the equality rows and retry on
    // the reduced subspace.
    let n = qp.linear.len();
    let mut eq_rows = Vec::new();
    let mut eq_rhs = Vec::new();
    let mut le_rows = Vec::new();
    let mut le_rhs = Vec::new();
    for ((row, &sense), &r) in qp.rows.iter().zip(&qp.senses).zip(&qp.rhs) {
        match sense {
            Sense::Eq => {
                eq_rows.push(row.clone());
                eq_rhs.push(r);
            }
            Sense::Le => {
                le_rows.push(row.clone());
                le_rhs.push(r);
            }
        }
    }
    let Some((v0, basis)) = crate::subsolvers::linalg::affine_solution_space(&eq_rows, &eq_rhs)
    else {
        return Ok(None);
    };

    if basis.is_empty() {
        let tol = 1e-8;
        let feasible = le_rows
            .iter()
            .zip(&le_rhs)
            .all(|(a, &r)| dot(a, &v0) <= r + tol * (1.0 + r.abs()))
            && v0.iter().enumerate().all(|(j, &v)| {
                v >= qp.lower[j] - tol * (1.0 + v.abs())
                    && v <= qp.upper[j] + tol * (1.0 + v.abs())
            });
        return Ok(feasible.then(|| (qp.objective_at(&v0), v0)));
    }

    let t = basis.len();
    let qv0: Vec<f64> = (0..n).map(|r| dot(&qp.q[r], &v0)).collect();
    let mut q_t = vec![vec![0.0; t]; t];
    for a in 0..t {
        let qza: Vec<f64> = (0..n).map(|r| dot(&qp.q[r], &basis[a])).collect();
        for b in 0..t {
            q_t[a][b] = dot(&basis[b], &qza);
        }
    }
    // Symmetrise away the roundoff from the two-sided product.
    for a in 0..t {
        for b in (a + 1)..t {
            let avg = 0.5 * (q_t[a][b] + q_t[b][a]);
            q_t[a][b] = avg;
            q_t[b][a] = avg;
        }
    }
    if !is_psd(&q_t) {
        return Err(Error::UnsupportedStructure(
            "the pooled relaxation is nonconvex even after equality elimination"
                .into(),
        ));
    }
    let g_t: Vec<f64> = basis
        .iter()
        .map(|z| dot(z, &qp.linear) + dot(z, &qv0))
        .collect();
    let c_t = qp.constant + dot(&qp.linear, &v0) + 0.5 * dot(&qv0, &v0);

    let mut rows_t = Vec::new();
    let mut senses_t = Vec::new();
    let mut rhs_t = Vec::new();
    for (a, &r) in le_rows.iter().zip(&le_rhs) {
        rows_t.push(basis.iter().map(|z| dot(a, z)).collect());
        senses_t.push(Sense::Le);
        rhs_t.push(r - dot(a, &v0));
    }
    for j in 0..n {
        if qp.lower[j].is_finite() {
            rows_t.push(basis.iter().map(|z| -z[j]).collect());
            senses_t.push(Sense::Le);
            rhs_t.push(v0[j] - qp.lower[j]);
        }
        if qp.upper[j].is_finite() {
            rows_t.push(basis.iter().map(|z| z[j]).collect());
            senses_t.push(Sense::Le);
            rhs_t.push(qp.upper[j] - v0[j]);
        }
    }

    let reduced = DenseConvexQp {
        q: q_t,
        linear: g_t,
        constant: c_t,
        rows: rows_t,
        senses: senses_t,
        rhs: rhs_t,
        lower: vec![f64::NEG_INFINITY; t],
        upper: vec![f64::INFINITY; t],
    };
    let lift = |tv: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|j| v0[j] + basis.iter().zip(tv).map(|(z, &s)| z[j] * s).sum::<f64>())
            .collect()
    };
    Ok(match solve_qp(&reduced)? {
        QpOutcome::Optimal { x, objective, .. } => Some((objective, lift(&x))),
        QpOutcome::Infeasible { .. } => None,
        QpOutcome::Unbounded { x, .. } => Some((f64::NEG_INFINITY, lift(&x))),
    })
}
