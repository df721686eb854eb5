//! Built-in best-response oracles for common player structures.
//!
//! * [`enumeration`] - all-integral feasible sets, by direct lattice
//!   walk and exact objective evaluation.
//! * [`box_lp`] - continuous players whose substituted objective and
//!   rows are affine, by a single LP solve.
//! * [`fixed_charge`] - players mixing integral switches with
//!   continuous dispatch: integral assignments are enumerated and each
//!   continuous remainder is an LP.
//! * [`mixed_binary_sep_qp`] - integral switches gating separable
//!   quadratic terms, solved in closed form per assignment.
//!
//! Ties across assignments and lattice points resolve to the
//! lexicographically first minimiser, so results are deterministic.

use super::{player_row_polys, response_problem, OracleResult, ResponseProblem, ENUMERATION_CAP};
use crate::error::{Error, Result};
use crate::expr::{Polynomial, VarKey};
use crate::model::{FeasibleSet, GameInstance, Sense};
use crate::subsolvers::{enumerate_assignments, solve_lp, DenseLinearProgram, LpOutcome};

/// Lattice enumeration over an all-integral feasible set.
pub fn enumeration(game: &GameInstance, i: usize, x: &[f64]) -> Result<OracleResult> {
    let rp = response_problem(game, i, x)?;
    let points = rp
        .set
        .integer_points(ENUMERATION_CAP as usize, game.tolerances.linear)?;
    let mut best: Option<(f64, &Vec<f64>)> = None;
    for p in &points {
        let v = rp.objective_at(p);
        if best.map_or(true, |(incumbent, _)| v < incumbent) {
            best = Some((v, p));
        }
    }
    Ok(match best {
        None => OracleResult::infeasible(),
        Some((v, p)) => OracleResult::finite(v, p.clone()),
    })
}

/// Expands a player's nonlinear set rows into polynomials over the
/// player's own block.
fn nonlinear_row_polys(rp: &ResponseProblem) -> Result<Vec<(Polynomial, Sense)>> {
    player_row_polys(rp.set, rp.player)
}

/// Inclusive integer value lists for the listed variables; the bounds
/// must be finite.
fn integral_choices(set: &FeasibleSet, idx: &[usize], player: usize) -> Result<Vec<Vec<f64>>> {
    idx.iter()
        .map(|&j| {
            let (lo, hi) = (set.lower[j], set.upper[j]);
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::UnsupportedStructure(format!(
                    "player {player} has integral variable {j} with an infinite bound"
                )));
            }
            let (a, b) = (lo.ceil() as i64, hi.floor() as i64);
            Ok((a..=b).map(|v| v as f64).collect())
        })
        .collect()
}

struct AssignedLp {
    lp: DenseLinearProgram,
    constant: f64,
}

/// LP over the continuous coordinates once the integral ones are fixed
/// to `assign`. Requires the substituted objective and every row to be
/// affine in the continuous coordinates.
fn assigned_continuous_lp(
    rp: &ResponseProblem,
    row_polys: &[(Polynomial, Sense)],
    int_idx: &[usize],
    cont_idx: &[usize],
    assign: &[f64],
) -> Result<AssignedLp> {
    let set = rp.set;
    let n = set.n;
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    for (k, &j) in int_idx.iter().enumerate() {
        fixed[j] = Some(assign[k]);
    }
    let mut col: Vec<Option<usize>> = vec![None; n];
    for (c, &j) in cont_idx.iter().enumerate() {
        col[j] = Some(c);
    }
    let player = rp.player;
    let substitute = |poly: &Polynomial| {
        poly.substitute(&|k| match k {
            VarKey::Player(p, j) if p == player => fixed[j],
            _ => None,
        })
    };
    let to_affine = |poly: &Polynomial, what: &str| -> Result<(f64, Vec<f64>)> {
        if poly.max_degree() > 1 {
            return Err(Error::UnsupportedStructure(format!(
                "player {player}: {what} is not affine in the continuous variables"
            )));
        }
        let qf = poly.to_quadratic_form(cont_idx.len(), &|k| match k {
            VarKey::Player(p, j) if p == player => col[j],
            _ => None,
        })?;
        Ok((qf.constant, qf.linear))
    };

    let (constant, cost) = to_affine(&substitute(&rp.objective), "the objective")?;

    let mut rows = Vec::new();
    let mut senses = Vec::new();
    let mut rhs = Vec::new();
    for lin in &set.linear {
        let mut row = vec![0.0; cont_idx.len()];
        let mut shift = 0.0;
        for (j, &a) in lin.coeffs.iter().enumerate() {
            match (fixed[j], col[j]) {
                (Some(v), _) => shift += a * v,
                (None, Some(c)) => row[c] = a,
                (None, None) => unreachable!("variable is neither fixed nor continuous"),
            }
        }
        rows.push(row);
        senses.push(lin.sense);
        rhs.push(lin.rhs - shift);
    }
    for (poly, sense) in row_polys {
        let (c0, coeffs) = to_affine(&substitute(poly), "a nonlinear row")?;
        rows.push(coeffs);
        senses.push(*sense);
        rhs.push(-c0);
    }

    let lower: Vec<f64> = cont_idx.iter().map(|&j| set.lower[j]).collect();
    let upper: Vec<f64> = cont_idx.iter().map(|&j| set.upper[j]).collect();
    Ok(AssignedLp {
        lp: DenseLinearProgram {
            cost,
            rows,
            senses,
            rhs,
            lower,
            upper,
        },
        constant,
    })
}

/// Single LP over a purely continuous feasible set.
pub fn box_lp(game: &GameInstance, i: usize, x: &[f64]) -> Result<OracleResult> {
    let rp = response_problem(game, i, x)?;
    if rp.set.integral.iter().any(|&b| b) {
        return Err(Error::UnsupportedStructure(format!(
            "player {i} has integral variables; box_lp handles continuous players only"
        )));
    }
    let row_polys = nonlinear_row_polys(&rp)?;
    let cont_idx: Vec<usize> = (0..rp.set.n).collect();
    let assigned = assigned_continuous_lp(&rp, &row_polys, &[], &cont_idx, &[])?;
    match solve_lp(&assigned.lp)? {
        LpOutcome::Optimal {
            x: y,
            objective,
            mut certificate,
            ..
        } => {
            certificate.objective += assigned.constant;
            certificate.dual_objective += assigned.constant;
            Ok(OracleResult {
                value: crate::ext::ExtReal::Finite(objective + assigned.constant),
                minimizer: Some(y),
                certificate: Some(certificate),
            })
        }
        LpOutcome::Infeasible { .. } => Ok(OracleResult::infeasible()),
        LpOutcome::Unbounded { .. } => Ok(OracleResult::unbounded()),
    }
}

/// Enumerated integral switches with an LP per assignment.
pub fn fixed_charge(game: &GameInstance, i: usize, x: &[f64]) -> Result<OracleResult> {
    let rp = response_problem(game, i, x)?;
    let set = rp.set;
    let int_idx: Vec<usize> = (0..set.n).filter(|&j| set.integral[j]).collect();
    let cont_idx: Vec<usize> = (0..set.n).filter(|&j| !set.integral[j]).collect();
    let choices = integral_choices(set, &int_idx, i)?;
    let row_polys = nonlinear_row_polys(&rp)?;

    let outcome = enumerate_assignments(
        &choices,
        ENUMERATION_CAP,
        |_| None,
        |assign| {
            let assigned = assigned_continuous_lp(&rp, &row_polys, &int_idx, &cont_idx, assign)?;
            match solve_lp(&assigned.lp)? {
                LpOutcome::Optimal {
                    x: yc,
                    objective,
                    mut certificate,
                    ..
                } => {
                    certificate.objective += assigned.constant;
                    certificate.dual_objective += assigned.constant;
                    let mut y = vec![0.0; set.n];
                    for (k, &j) in int_idx.iter().enumerate() {
                        y[j] = assign[k];
                    }
                    for (c, &j) in cont_idx.iter().enumerate() {
                        y[j] = yc[c];
                    }
                    Ok(Some((
                        objective + assigned.constant,
                        (y, Some(certificate)),
                    )))
                }
                LpOutcome::Infeasible { .. } => Ok(None),
                LpOutcome::Unbounded { .. } => {
                    Ok(Some((f64::NEG_INFINITY, (Vec::new(), None))))
                }
            }
        },
    )?;

    Ok(match outcome.best {
        None => OracleResult::infeasible(),
        Some((_, value, _)) if value == f64::NEG_INFINITY => OracleResult::unbounded(),
        Some((_, value, (y, certificate))) => OracleResult {
            value: crate::ext::ExtReal::Finite(value),
            minimizer: Some(y),
            certificate,
        },
    })
}

/// Per-variable quadratic pieces of a substituted separable objective.
struct SeparablePieces {
    constant: f64,
    q1: Vec<f64>,
    q2: Vec<f64>,
}

fn separable_pieces(
    poly: &Polynomial,
    player: usize,
    col: &[Option<usize>],
    n_cont: usize,
) -> Result<SeparablePieces> {
    let mut pieces = SeparablePieces {
        constant: 0.0,
        q1: vec![0.0; n_cont],
        q2: vec![0.0; n_cont],
    };
    for (m, &c) in &poly.terms {
        match m.0.as_slice() {
            [] => pieces.constant += c,
            [(VarKey::Player(p, j), 1)] if *p == player => {
                let col = col[*j].expect("continuous column");
                pieces.q1[col] += c;
            }
            [(VarKey::Player(p, j), 2)] if *p == player => {
                let col = col[*j].expect("continuous column");
                pieces.q2[col] += c;
            }
            _ => {
                return Err(Error::UnsupportedStructure(format!(
                    "player {player}: substituted objective has a non-separable term"
                )))
            }
        }
    }
    Ok(pieces)
}

/// Closed-form minimum of `q2 v^2 + q1 v` over `[lo, hi]`; `None`
/// marks an unbounded direction.
fn separable_min(q2: f64, q1: f64, lo: f64, hi: f64, player: usize) -> Result<Option<(f64, f64)>> {
    if q2 < 0.0 {
        return Err(Error::UnsupportedStructure(format!(
            "player {player}: a separable quadratic term is concave"
        )));
    }
    let point = if q2 > 0.0 {
        (-q1 / (2.0 * q2)).clamp(lo, hi)
    } else if q1 > 0.0 {
        if !lo.is_finite() {
            return Ok(None);
        }
        lo
    } else if q1 < 0.0 {
        if !hi.is_finite() {
            return Ok(None);
        }
        hi
    } else if lo.is_finite() {
        lo
    } else if hi.is_finite() {
        hi
    } else {
        0.0
    };
    Ok(Some((point, q2 * point * point + q1 * point)))
}

/// Enumerated integral switches with closed-form separable quadratic
/// minimisation per assignment. Rows may couple each continuous
/// variable to the switches but never to another continuous variable.
pub fn mixed_binary_sep_qp(game: &GameInstance, i: usize, x: &[f64]) -> Result<OracleResult> {
    let rp = response_problem(game, i, x)?;
    let set = rp.set;
    let n = set.n;
    let int_idx: Vec<usize> = (0..n).filter(|&j| set.integral[j]).collect();
    let cont_idx: Vec<usize> = (0..n).filter(|&j| !set.integral[j]).collect();
    let mut col: Vec<Option<usize>> = vec![None; n];
    for (c, &j) in cont_idx.iter().enumerate() {
        col[j] = Some(c);
    }
    let choices = integral_choices(set, &int_idx, i)?;

    // Structural checks that do not depend on the assignment.
    let single_cont = |poly: &Polynomial, max_cont_degree: u32, what: &str| -> Result<()> {
        let mut seen: Option<usize> = None;
        for m in poly.terms.keys() {
            let mut degree = 0;
            for (v, e) in &m.0 {
                if let VarKey::Player(p, j) = v {
                    if *p == i && col[*j].is_some() {
                        degree += *e;
                        match seen {
                            None => seen = Some(*j),
                            Some(s) if s == *j => {}
                            Some(_) => {
                                return Err(Error::UnsupportedStructure(format!(
                                    "player {i}: {what} couples two continuous variables"
                                )))
                            }
                        }
                    }
                }
            }
            if degree > max_cont_degree {
                return Err(Error::UnsupportedStructure(format!(
                    "player {i}: {what} has continuous degree above {max_cont_degree}"
                )));
            }
        }
        Ok(())
    };
    let objective_poly = &rp.objective;
    single_cont_objective_check(objective_poly, i, &col)?;
    for lin in &set.linear {
        let touched = cont_idx.iter().filter(|&&j| lin.coeffs[j] != 0.0).count();
        if touched > 1 {
            return Err(Error::UnsupportedStructure(format!(
                "player {i}: a linear row couples two continuous variables"
            )));
        }
    }
    let row_polys = nonlinear_row_polys(&rp)?;
    for (poly, _) in &row_polys {
        single_cont(poly, 1, "a nonlinear row")?;
    }

    let player = i;
    let tol = game.tolerances.linear;
    let outcome = enumerate_assignments(
        &choices,
        ENUMERATION_CAP,
        |_| None,
        |assign| {
            let mut fixed: Vec<Option<f64>> = vec![None; n];
            for (k, &j) in int_idx.iter().enumerate() {
                fixed[j] = Some(assign[k]);
            }
            let substitute = |poly: &Polynomial| {
                poly.substitute(&|k| match k {
                    VarKey::Player(p, j) if p == player => fixed[j],
                    _ => None,
                })
            };

            let mut lo: Vec<f64> = cont_idx.iter().map(|&j| set.lower[j]).collect();
            let mut hi: Vec<f64> = cont_idx.iter().map(|&j| set.upper[j]).collect();

            // Tighten intervals from the rows.
            let mut apply = |coeff: f64, var: Option<usize>, rhsv: f64, sense: Sense| -> bool {
                match var {
                    None => match sense {
                        Sense::Le => 0.0 <= rhsv + tol * (1.0 + rhsv.abs()),
                        Sense::Eq => rhsv.abs() <= tol * (1.0 + rhsv.abs()),
                    },
                    Some(c) => {
                        if coeff == 0.0 {
                            return match sense {
                                Sense::Le => 0.0 <= rhsv + tol * (1.0 + rhsv.abs()),
                                Sense::Eq => rhsv.abs() <= tol * (1.0 + rhsv.abs()),
                            };
                        }
                        let v = rhsv / coeff;
                        match sense {
                            Sense::Le if coeff > 0.0 => hi[c] = hi[c].min(v),
                            Sense::Le => lo[c] = lo[c].max(v),
                            Sense::Eq => {
                                lo[c] = lo[c].max(v);
                                hi[c] = hi[c].min(v);
                            }
                        }
                        true
                    }
                }
            };
            for lin in &set.linear {
                let mut shift = 0.0;
                let mut var = None;
                let mut coeff = 0.0;
                for (j, &a) in lin.coeffs.iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    match fixed[j] {
                        Some(v) => shift += a * v,
                        None => {
                            var = col[j];
                            coeff = a;
                        }
                    }
                }
                if !apply(coeff, var, lin.rhs - shift, lin.sense) {
                    return Ok(None);
                }
            }
            for (poly, sense) in &row_polys {
                let sub = substitute(poly);
                let mut c0 = 0.0;
                let mut coeff = 0.0;
                let mut var = None;
                for (m, &c) in &sub.terms {
                    match m.0.as_slice() {
                        [] => c0 += c,
                        [(VarKey::Player(_, j), 1)] => {
                            coeff += c;
                            var = col[*j];
                        }
                        _ => {
                            return Err(Error::SolverFailure(
                                "separable row check admitted a non-affine term".into(),
                            ))
                        }
                    }
                }
                if !apply(coeff, var, -c0, *sense) {
                    return Ok(None);
                }
            }

            let obj = substitute(objective_poly);
            let pieces = separable_pieces(&obj, player, &col, cont_idx.len())?;
            let mut value = pieces.constant;
            let mut y = vec![0.0; n];
            for (k, &j) in int_idx.iter().enumerate() {
                y[j] = assign[k];
            }
            for (c, &j) in cont_idx.iter().enumerate() {
                let (l, h) = (lo[c], hi[c]);
                if l > h {
                    if l - h <= 1e-9 * (1.0 + l.abs()) {
                        let m = 0.5 * (l + h);
                        match separable_min(pieces.q2[c], pieces.q1[c], m, m, player)? {
                            Some((point, v)) => {
                                y[j] = point;
                                value += v;
                            }
                            None => unreachable!("degenerate interval is bounded"),
                        }
                        continue;
                    }
                    return Ok(None);
                }
                match separable_min(pieces.q2[c], pieces.q1[c], l, h, player)? {
                    Some((point, v)) => {
                        y[j] = point;
                        value += v;
                    }
                    None => return Ok(Some((f64::NEG_INFINITY, Vec::new()))),
                }
            }
            Ok(Some((value, y)))
        },
    )?;

    Ok(match outcome.best {
        None => OracleResult::infeasible(),
        Some((_, value, _)) if value == f64::NEG_INFINITY => OracleResult::unbounded(),
        Some((_, value, y)) => OracleResult::finite(value, y),
    })
}

/// Objective check for the separable oracle: continuous degree at
/// most two, one distinct continuous variable per monomial.
fn single_cont_objective_check(
    poly: &Polynomial,
    player: usize,
    col: &[Option<usize>],
) -> Result<()> {
    for m in poly.terms.keys() {
        let mut seen: Option<usize> = None;
        let mut degree = 0;
        for (v, e) in &m.0 {
            if let VarKey::Player(p, j) = v {
                if *p == player && col[*j].is_some() {
                    degree += *e;
                    match seen {
                        None => seen = Some(*j),
                        Some(s) if s == *j => {}
                        Some(_) => {
                            return Err(Error::UnsupportedStructure(format!(
                                "player {player}: objective couples two continuous variables"
                            )))
                        }
                    }
                }
            }
        }
        if degree > 2 {
            return Err(Error::UnsupportedStructure(format!(
                "player {player}: objective has continuous degree above two"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expression;
    use crate::model::{
        GameInstance, LinearConstraint, MuMeasure, OracleBinding, Player, ToleranceConfig,
    };
    use crate::oracles::solve_player;
    use crate::ExtReal;

    fn c(v: f64) -> Expression {
        Expression::Const(v)
    }

    fn xv(k: usize) -> Expression {
        Expression::SVar(k)
    }

    fn yv(i: usize, j: usize) -> Expression {
        Expression::PVar(i, j)
    }

    fn single(objective: Expression, set: FeasibleSet, oracle: OracleBinding) -> GameInstance {
        GameInstance {
            name: "oracle-test".to_string(),
            n0: 1,
            x_set: FeasibleSet::boxed(vec![-10.0], vec![10.0]),
            players: vec![Player {
                id: "p0".to_string(),
                n: set.n,
                objective,
                feasible_set: set,
                joint_feasible: None,
                oracle,
                price_taking_form: None,
            }],
            global_constraints: vec![],
            mu: MuMeasure::Sum,
            tolerances: ToleranceConfig::default(),
            x0: None,
            price_box: None,
        }
    }

    #[test]
    fn enumeration_matches_hand_optimum_on_the_entry_game() {
        let g = crate::model::entry_game();
        let r = solve_player(&g, 0, &[1.0, 1.0], None).unwrap();
        assert_eq!(r.value, ExtReal::Finite(-2.0));
        assert_eq!(r.minimizer, Some(vec![1.0]));

        let r = solve_player(&g, 0, &[1.0, 0.0], None).unwrap();
        assert_eq!(r.value, ExtReal::Finite(-1.0));
        assert_eq!(r.minimizer, Some(vec![1.0]));
    }

    #[test]
    fn enumeration_reports_an_empty_lattice_as_infeasible() {
        let set = FeasibleSet::integer_box(vec![0.4], vec![0.6]);
        let g = single(yv(0, 0), set, OracleBinding::Enumeration);
        let r = solve_player(&g, 0, &[0.0], None).unwrap();
        assert_eq!(r.value, ExtReal::PosInf);
        assert!(r.minimizer.is_none());
    }

    #[test]
    fn box_lp_solves_an_affine_response() {
        let mut set = FeasibleSet::boxed(vec![0.0, 0.0], vec![1.0, 1.0]);
        set.linear.push(LinearConstraint {
            coeffs: vec![1.0, 1.0],
            sense: Sense::Le,
            rhs: 1.5,
        });
        let objective = Expression::Add(vec![
            Expression::Mul(vec![xv(0), yv(0, 0)]),
            Expression::scaled(-1.0, yv(0, 1)),
        ]);
        let g = single(objective, set, OracleBinding::BoxLp);
        let r = solve_player(&g, 0, &[-2.0], None).unwrap();
        assert_eq!(r.value, ExtReal::Finite(-2.5));
        let y = r.minimizer.unwrap();
        assert!((y[0] - 1.0).abs() < 1e-9 && (y[1] - 0.5).abs() < 1e-9);
        let cert = r.certificate.unwrap();
        assert!(cert.is_clean(1e-7));
    }

    #[test]
    fn box_lp_reports_unbounded_and_infeasible_responses() {
        let set = FeasibleSet::boxed(vec![0.0], vec![f64::INFINITY]);
        let g = single(
            Expression::scaled(-1.0, yv(0, 0)),
            set,
            OracleBinding::BoxLp,
        );
        let r = solve_player(&g, 0, &[0.0], None).unwrap();
        assert_eq!(r.value, ExtReal::NegInf);

        let mut set = FeasibleSet::boxed(vec![0.0], vec![1.0]);
        set.linear.push(LinearConstraint {
            coeffs: vec![1.0],
            sense: Sense::Le,
            rhs: -1.0,
        });
        let g = single(yv(0, 0), set, OracleBinding::BoxLp);
        let r = solve_player(&g, 0, &[0.0], None).unwrap();
        assert_eq!(r.value, ExtReal::PosInf);
    }

    #[test]
    fn box_lp_rejects_integral_players() {
        let set = FeasibleSet::integer_box(vec![0.0], vec![1.0]);
        let g = single(yv(0, 0), set, OracleBinding::BoxLp);
        assert!(matches!(
            solve_player(&g, 0, &[0.0], None),
            Err(Error::UnsupportedStructure(_))
        ));
    }

    /// Commitment player: y = (u, q) with u binary, `q <= 10 u`,
    /// objective `5 u + q - x0 q`.
    fn commitment_game() -> GameInstance {
        let mut set = FeasibleSet::boxed(vec![0.0, 0.0], vec![1.0, 10.0]);
        set.integral[0] = true;
        set.linear.push(LinearConstraint {
            coeffs: vec![-10.0, 1.0],
            sense: Sense::Le,
            rhs: 0.0,
        });
        let objective = Expression::Add(vec![
            Expression::scaled(5.0, yv(0, 0)),
            yv(0, 1),
            Expression::Mul(vec![c(-1.0), xv(0), yv(0, 1)]),
        ]);
        single(objective, set, OracleBinding::FixedCharge)
    }

    #[test]
    fn fixed_charge_commits_only_when_the_price_justifies_it() {
        let g = commitment_game();
        let r = solve_player(&g, 0, &[2.0], None).unwrap();
        assert_eq!(r.value, ExtReal::Finite(-5.0));
        assert_eq!(r.minimizer, Some(vec![1.0, 10.0]));

        let r = solve_player(&g, 0, &[0.5], None).unwrap();
        assert_eq!(r.value, ExtReal::Finite(0.0));
        assert_eq!(r.minimizer, Some(vec![0.0, 0.0]));
    }

    #[test]
    fn fixed_charge_ties_resolve_to_the_first_assignment() {
        let mut g = commitment_game();
        g.players[0].objective = c(0.0);
        let r = solve_player(&g, 0, &[0.0], None).unwrap();
        assert_eq!(r.value, ExtReal::Finite(0.0));
        assert_eq!(r.minimizer, Some(vec![0.0, 0.0]));
    }

    #[test]
    fn fixed_charge_propagates_an_unbounded_assignment() {
        let mut set = FeasibleSet::boxed(vec![0.0, 0.0], vec![1.0, f64::INFINITY]);
        set.integral[0] = true;
        let objective = Expression::scaled(-1.0, yv(0, 1));
        let g = single(objective, set, OracleBinding::FixedCharge);
        let r = solve_player(&g, 0, &[0.0], None).unwrap();
        assert_eq!(r.value, ExtReal::NegInf);
        assert!(r.minimizer.is_none());
    }

    #[test]
    fn separable_qp_places_gated_quadratic_output() {
        // min 2u + (q - 3)^2 with q <= 4u: committing costs 2 but
        // saves the full deviation penalty of 9.
        let mut set = FeasibleSet::boxed(vec![0.0, 0.0], vec![1.0, 10.0]);
        set.integral[0] = true;
        set.linear.push(LinearConstraint {
            coeffs: vec![-4.0, 1.0],
            sense: Sense::Le,
            rhs: 0.0,
        });
        let objective = Expression::Add(vec![
            Expression::scaled(2.0, yv(0, 0)),
            Expression::Square(Box::new(Expression::Add(vec![yv(0, 1), c(-3.0)]))),
        ]);
        let g = single(objective, set, OracleBinding::MixedBinarySepQp);
        let r = solve_player(&g, 0, &[0.0], None).unwrap();
        assert_eq!(r.value, ExtReal::Finite(2.0));
        assert_eq!(r.minimizer, Some(vec![1.0, 3.0]));
    }

    #[test]
    fn separable_qp_agrees_with_fixed_charge_on_affine_objectives() {
        let g = commitment_game();
        let mut h = commitment_game();
        h.players[0].oracle = OracleBinding::MixedBinarySepQp;
        for x0 in [-1.0, 0.5, 1.0, 2.0, 7.0] {
            let a = solve_player(&g, 0, &[x0], None).unwrap();
            let b = solve_player(&h, 0, &[x0], None).unwrap();
            assert_eq!(a.value, b.value, "x0 = {x0}");
            assert_eq!(a.minimizer, b.minimizer, "x0 = {x0}");
        }
    }

    #[test]
    fn separable_qp_rejects_coupled_continuous_rows() {
        let mut set = FeasibleSet::boxed(vec![0.0, 0.0], vec![1.0, 1.0]);
        set.linear.push(LinearConstraint {
            coeffs: vec![1.0, 1.0],
            sense: Sense::Le,
            rhs: 1.0,
        });
        let g = single(yv(0, 0), set, OracleBinding::MixedBinarySepQp);
        assert!(matches!(
            solve_player(&g, 0, &[0.0], None),
            Err(Error::UnsupportedStructure(_))
        ));
    }

    #[test]
    fn separable_qp_rejects_concave_terms() {
        let set = FeasibleSet::boxed(vec![0.0], vec![1.0]);
        let objective = Expression::scaled(-1.0, Expression::Square(Box::new(yv(0, 0))));
        let g = single(objective, set, OracleBinding::MixedBinarySepQp);
        assert!(matches!(
            solve_player(&g, 0, &[0.0], None),
            Err(Error::UnsupportedStructure(_))
        ));
    }

    #[test]
    fn separable_qp_reports_unbounded_directions() {
        let set = FeasibleSet::boxed(vec![0.0], vec![f64::INFINITY]);
        let objective = Expression::scaled(-1.0, yv(0, 0));
        let g = single(objective, set, OracleBinding::MixedBinarySepQp);
        let r = solve_player(&g, 0, &[0.0], None).unwrap();
        assert_eq!(r.value, ExtReal::NegInf);
    }
}
