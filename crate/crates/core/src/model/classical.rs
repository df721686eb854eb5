//! Classical-form games and conversions to and from the
//! shared-variable form.
//!
//! In classical form there are no shared variables: every player `j`
//! owns block `u_j`, its objective may read all blocks, and its
//! feasible set is given by per-block constraint sets plus joint rows.
//! The two directions of conversion are:
//!
//! * [`to_classical_gnep`]: adds a feasibility player that owns the
//!   former shared block and carries the coupling constraints with a
//!   constant objective.
//! * [`from_classical_gnep`]: introduces a shared copy of every block
//!   and copy constraints `x_block_j = u_j`, turning "reads other
//!   blocks" into "reads shared variables".
//!
//! Both preserve the equilibrium set; the round-trip tests enumerate
//! both sides to check exactly that.

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::model::{
    FeasibleSet, GameInstance, GlobalConstraint, LinearConstraint, MuMeasure, OracleBinding,
    Player, Sense, ToleranceConfig,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalPlayer {
    pub id: String,
    /// Dimension of the player's own block.
    pub n: usize,
    /// Objective over all blocks, referencing `PVar(block, coord)`.
    pub objective: Expression,
    /// Per-block constraint sets making up this player's feasible set;
    /// `sets[j]` constrains block `j` alone. The own entry `sets[n]`
    /// for this player must be present.
    pub sets: Vec<Option<FeasibleSet>>,
    /// Constraint rows coupling several blocks, `expr <sense> 0` with
    /// `PVar(block, coord)` references only.
    pub joint: Vec<GlobalConstraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalGame {
    pub name: String,
    pub players: Vec<ClassicalPlayer>,
}

impl ClassicalGame {
    pub fn dims(&self) -> Vec<usize> {
        self.players.iter().map(|p| p.n).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let dims = self.dims();
        for (j, p) in self.players.iter().enumerate() {
            if p.sets.len() != self.players.len() {
                return Err(Error::DimensionMismatch(format!(
                    "classical player {j} declares {} block sets for {} players",
                    p.sets.len(),
                    self.players.len()
                )));
            }
            match &p.sets[j] {
                None => {
                    return Err(Error::InvalidModel(format!(
                        "classical player {j} lacks a constraint set for its own block"
                    )))
                }
                Some(s) => {
                    if s.n != p.n {
                        return Err(Error::DimensionMismatch(format!(
                            "classical player {j}: own set has n={}, block has n={}",
                            s.n, p.n
                        )));
                    }
                }
            }
            for (q, s) in p.sets.iter().enumerate() {
                if let Some(s) = s {
                    s.validate()?;
                    if s.n != dims[q] {
                        return Err(Error::DimensionMismatch(format!(
                            "classical player {j}: set for block {q} has n={}, block has n={}",
                            s.n, dims[q]
                        )));
                    }
                }
            }
            p.objective.validate_indices(0, &dims)?;
            for row in &p.joint {
                row.expr.validate_indices(0, &dims)?;
            }
        }
        Ok(())
    }

    fn point_in_player_set(&self, j: usize, u: &[Vec<f64>], tol: &ToleranceConfig) -> bool {
        let p = &self.players[j];
        for (q, s) in p.sets.iter().enumerate() {
            if let Some(s) = s {
                if !s.contains(&u[q], tol.linear, tol.nonlinear) {
                    return false;
                }
            }
        }
        p.joint.iter().all(|row| {
            let val = row.expr.eval(&|_| f64::NAN, &|q, l| u[q][l]);
            match row.sense {
                Sense::Le => val <= tol.nonlinear.max(tol.linear),
                Sense::Eq => val.abs() <= tol.nonlinear,
            }
        })
    }

    fn objective_at(&self, j: usize, u: &[Vec<f64>]) -> f64 {
        self.players[j].objective.eval(&|_| f64::NAN, &|q, l| u[q][l])
    }

    /// Enumerate all equilibria of a finite game: every block integral
    /// with finite bounds, joint candidate count at most `cap`.
    ///
    /// A point is an equilibrium when it lies in every player's
    /// feasible set and no player has a feasible deviation improving
    /// its objective beyond a relative slack of 1e-9.
    pub fn enumerate_equilibria(
        &self,
        cap: usize,
        tol: &ToleranceConfig,
    ) -> Result<Vec<Vec<Vec<f64>>>> {
        self.validate()?;
        let mut block_grids: Vec<Vec<Vec<f64>>> = Vec::new();
        let mut total: u128 = 1;
        for (j, p) in self.players.iter().enumerate() {
            let own = p.sets[j].as_ref().expect("validated");
            let pts = own.integer_points(cap, tol.linear)?;
            total = total.saturating_mul(pts.len().max(1) as u128);
            block_grids.push(pts);
        }
        if total > cap as u128 {
            return Err(Error::CapExceeded(format!(
                "classical enumeration would visit {total} points, cap is {cap}"
            )));
        }
        if block_grids.iter().any(|g| g.is_empty()) {
            return Ok(Vec::new());
        }

        let m = self.players.len();
        let mut idx = vec![0usize; m];
        let mut out = Vec::new();
        'outer: loop {
            let u: Vec<Vec<f64>> = (0..m).map(|j| block_grids[j][idx[j]].clone()).collect();
            if (0..m).all(|j| self.point_in_player_set(j, &u, tol)) {
                let mut is_eq = true;
                'players: for j in 0..m {
                    let current = self.objective_at(j, &u);
                    let slack = 1e-9 * (1.0 + current.abs());
                    let mut trial = u.clone();
                    for cand in &block_grids[j] {
                        trial[j] = cand.clone();
                        if self.point_in_player_set(j, &trial, tol)
                            && self.objective_at(j, &trial) < current - slack
                        {
                            is_eq = false;
                            break 'players;
                        }
                    }
                }
                if is_eq {
                    out.push(u);
                }
            }
            // advance odometer
            let mut k = m;
            loop {
                if k == 0 {
                    break 'outer;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < block_grids[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
        Ok(out)
    }
}

/// Remap a shared-form expression into classical block space: shared
/// variables become block 0, player `i` becomes block `i + 1`.
fn remap_shared_to_classical(e: &Expression) -> Expression {
    match e {
        Expression::Const(c) => Expression::Const(*c),
        Expression::SVar(k) => Expression::PVar(0, *k),
        Expression::PVar(i, j) => Expression::PVar(i + 1, *j),
        Expression::Add(ts) => {
            Expression::Add(ts.iter().map(remap_shared_to_classical).collect())
        }
        Expression::Mul(ts) => {
            Expression::Mul(ts.iter().map(remap_shared_to_classical).collect())
        }
        Expression::Square(t) => Expression::Square(Box::new(remap_shared_to_classical(t))),
    }
}

/// Shared-variable form to classical form: block 0 is the former
/// shared block, owned by a feasibility player with constant objective
/// whose constraints are exactly the coupling rows; player `i`'s
/// feasible set keeps `X` on block 0 and `Y_i` on its own block.
pub fn to_classical_gnep(game: &GameInstance) -> Result<ClassicalGame> {
    game.validate()?;
    let m = game.players.len();

    let mut joint_g: Vec<GlobalConstraint> = Vec::new();
    for row in &game.global_constraints {
        joint_g.push(GlobalConstraint {
            expr: remap_shared_to_classical(&row.expr),
            sense: row.sense,
        });
    }

    let empty_sets = || vec![None; m + 1];

    let mut players = Vec::with_capacity(m + 1);
    let mut sets0 = empty_sets();
    sets0[0] = Some(game.x_set.clone());
    players.push(ClassicalPlayer {
        id: "feasibility".to_string(),
        n: game.n0,
        objective: Expression::Const(0.0),
        sets: sets0,
        joint: joint_g,
    });

    for (i, p) in game.players.iter().enumerate() {
        let mut sets = empty_sets();
        sets[0] = Some(game.x_set.clone());
        sets[i + 1] = Some(p.feasible_set.clone());
        let mut joint = Vec::new();
        if let Some(jf) = &p.joint_feasible {
            joint.extend(joint_rows_from_feasible_set(jf, game.n0, i + 1)?);
        }
        players.push(ClassicalPlayer {
            id: p.id.clone(),
            n: p.n,
            objective: remap_shared_to_classical(&p.objective),
            sets,
            joint,
        });
    }

    let out = ClassicalGame {
        name: format!("{}-classical", game.name),
        players,
    };
    out.validate()?;
    Ok(out)
}

/// Lower a joint feasible set over `(x, y_i)` into classical rows over
/// blocks 0 and `block`. Bounds become single-coefficient rows;
/// integrality has no row form and is rejected.
fn joint_rows_from_feasible_set(
    jf: &FeasibleSet,
    n0: usize,
    block: usize,
) -> Result<Vec<GlobalConstraint>> {
    if jf.integral.iter().any(|&b| b) {
        return Err(Error::UnsupportedStructure(
            "integrality inside a shared-dependent feasible set has no classical row form"
                .to_string(),
        ));
    }
    let var = |local: usize| -> Expression {
        if local < n0 {
            Expression::PVar(0, local)
        } else {
            Expression::PVar(block, local - n0)
        }
    };
    let mut rows = Vec::new();
    for (j, (&lo, &hi)) in jf.lower.iter().zip(&jf.upper).enumerate() {
        if lo.is_finite() {
            rows.push(GlobalConstraint {
                expr: Expression::Add(vec![
                    Expression::Const(lo),
                    Expression::Mul(vec![Expression::Const(-1.0), var(j)]),
                ]),
                sense: Sense::Le,
            });
        }
        if hi.is_finite() {
            rows.push(GlobalConstraint {
                expr: Expression::Add(vec![var(j), Expression::Const(-hi)]),
                sense: Sense::Le,
            });
        }
    }
    for row in &jf.linear {
        let mut terms: Vec<Expression> = row
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, c)| Expression::scaled(*c, var(j)))
            .collect();
        terms.push(Expression::Const(-row.rhs));
        rows.push(GlobalConstraint {
            expr: Expression::add_all(terms),
            sense: row.sense,
        });
    }
    for con in &jf.nonlinear {
        fn remap(e: &Expression, var: &dyn Fn(usize) -> Expression) -> Expression {
            match e {
                Expression::Const(c) => Expression::Const(*c),
                Expression::SVar(l) => var(*l),
                Expression::PVar(_, _) => unreachable!("feasible sets use SVar locals"),
                Expression::Add(ts) => {
                    Expression::Add(ts.iter().map(|t| remap(t, var)).collect())
                }
                Expression::Mul(ts) => {
                    Expression::Mul(ts.iter().map(|t| remap(t, var)).collect())
                }
                Expression::Square(t) => Expression::Square(Box::new(remap(t, var))),
            }
        }
        rows.push(GlobalConstraint {
            expr: remap(&con.expr, &var),
            sense: con.sense,
        });
    }
    Ok(rows)
}

/// Classical form to shared-variable form: the shared block is a copy
/// of every player block, coupled by copy rows `x_block_j = u_j`, and
/// each objective reads other blocks through the copies.
///
/// Constraints a classical player places on other blocks, and joint
/// rows, become a shared-dependent feasible set on the converted
/// player; games containing those convert fine but are only usable
/// with enumeration-based analyses.
pub fn from_classical_gnep(classical: &ClassicalGame) -> Result<GameInstance> {
    classical.validate()?;
    let dims = classical.dims();
    let m = classical.players.len();
    let offsets: Vec<usize> = dims
        .iter()
        .scan(0usize, |acc, d| {
            let o = *acc;
            *acc += d;
            Some(o)
        })
        .collect();
    let n0: usize = dims.iter().sum();

    // Shared box: each block's bounds as declared by its owner.
    let mut x_set = FeasibleSet::free(n0);
    for (j, p) in classical.players.iter().enumerate() {
        let own = p.sets[j].as_ref().expect("validated");
        for l in 0..p.n {
            x_set.lower[offsets[j] + l] = own.lower[l];
            x_set.upper[offsets[j] + l] = own.upper[l];
        }
    }

    let mut global_constraints = Vec::new();
    for (j, &d) in dims.iter().enumerate() {
        for l in 0..d {
            global_constraints.push(GlobalConstraint {
                expr: Expression::Add(vec![
                    Expression::SVar(offsets[j] + l),
                    Expression::Mul(vec![Expression::Const(-1.0), Expression::PVar(j, l)]),
                ]),
                sense: Sense::Eq,
            });
        }
    }

    let remap_obj = |e: &Expression, own: usize| -> Expression {
        fn go(e: &Expression, own: usize, offsets: &[usize]) -> Expression {
            match e {
                Expression::Const(c) => Expression::Const(*c),
                Expression::SVar(_) => unreachable!("classical expressions have no shared vars"),
                Expression::PVar(q, l) => {
                    if *q == own {
                        Expression::PVar(own, *l)
                    } else {
                        Expression::SVar(offsets[*q] + *l)
                    }
                }
                Expression::Add(ts) => {
                    Expression::Add(ts.iter().map(|t| go(t, own, offsets)).collect())
                }
                Expression::Mul(ts) => {
                    Expression::Mul(ts.iter().map(|t| go(t, own, offsets)).collect())
                }
                Expression::Square(t) => Expression::Square(Box::new(go(t, own, offsets))),
            }
        }
        go(e, own, &offsets)
    };

    let mut players = Vec::with_capacity(m);
    for (j, p) in classical.players.iter().enumerate() {
        let own = p.sets[j].as_ref().expect("validated").clone();

        // Everything the player asserts about other blocks, plus joint
        // rows, lands in a set over (x, y_j).
        let mut jf = FeasibleSet::free(n0 + p.n);
        let mut has_joint = false;
        for (q, s) in p.sets.iter().enumerate() {
            if q == j {
                continue;
            }
            let Some(s) = s else { continue };
            has_joint = true;
            for l in 0..s.n {
                jf.lower[offsets[q] + l] = s.lower[l];
                jf.upper[offsets[q] + l] = s.upper[l];
                jf.integral[offsets[q] + l] = s.integral[l];
            }
            for row in &s.linear {
                let mut coeffs = vec![0.0; n0 + p.n];
                for (l, c) in row.coeffs.iter().enumerate() {
                    coeffs[offsets[q] + l] = *c;
                }
                jf.linear.push(LinearConstraint {
                    coeffs,
                    sense: row.sense,
                    rhs: row.rhs,
                });
            }
            for con in &s.nonlinear {
                fn shift(e: &Expression, off: usize) -> Expression {
                    match e {
                        Expression::Const(c) => Expression::Const(*c),
                        Expression::SVar(l) => Expression::SVar(off + l),
                        Expression::PVar(_, _) => {
                            unreachable!("feasible sets use SVar locals")
                        }
                        Expression::Add(ts) => {
                            Expression::Add(ts.iter().map(|t| shift(t, off)).collect())
                        }
                        Expression::Mul(ts) => {
                            Expression::Mul(ts.iter().map(|t| shift(t, off)).collect())
                        }
                        Expression::Square(t) => {
                            Expression::Square(Box::new(shift(t, off)))
                        }
                    }
                }
                jf.nonlinear.push(NonlinearLocal {
                    expr: shift(&con.expr, offsets[q]),
                    sense: con.sense,
                });
            }
        }
        for row in &p.joint {
            has_joint = true;
            fn remap_joint(
                e: &Expression,
                own: usize,
                offsets: &[usize],
                n0: usize,
            ) -> Expression {
                match e {
                    Expression::Const(c) => Expression::Const(*c),
                    Expression::SVar(_) => {
                        unreachable!("classical expressions have no shared vars")
                    }
                    Expression::PVar(q, l) => {
                        if *q == own {
                            Expression::SVar(n0 + *l)
                        } else {
                            Expression::SVar(offsets[*q] + *l)
                        }
                    }
                    Expression::Add(ts) => Expression::Add(
                        ts.iter().map(|t| remap_joint(t, own, offsets, n0)).collect(),
                    ),
                    Expression::Mul(ts) => Expression::Mul(
                        ts.iter().map(|t| remap_joint(t, own, offsets, n0)).collect(),
                    ),
                    Expression::Square(t) => {
                        Expression::Square(Box::new(remap_joint(t, own, offsets, n0)))
                    }
                }
            }
            jf.nonlinear.push(NonlinearLocal {
                expr: remap_joint(&row.expr, j, &offsets, n0),
                sense: row.sense,
            });
        }

        players.push(Player {
            id: p.id.clone(),
            n: p.n,
            objective: remap_obj(&p.objective, j),
            feasible_set: own,
            joint_feasible: has_joint.then_some(jf),
            oracle: OracleBinding::Enumeration,
            price_taking_form: None,
        });
    }

    let out = GameInstance {
        name: format!("{}-shared", classical.name),
        n0,
        x_set,
        players,
        global_constraints,
        mu: MuMeasure::Sum,
        tolerances: ToleranceConfig::default(),
        x0: None,
        price_box: None,
    };
    out.validate()?;
    Ok(out)
}

use crate::model::NonlinearConstraint as NonlinearLocal;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::entry_game;

    #[test]
    fn entry_game_converts_and_keeps_equilibria() {
        let g = entry_game();
        let c = to_classical_gnep(&g).unwrap();
        assert_eq!(c.players.len(), 3);
        assert_eq!(c.players[0].id, "feasibility");
        assert_eq!(c.players[0].n, 2);

        // Block 0 (the former shared block) is continuous, so full
        // enumeration of the classical game is blocked by design;
        // check membership logic directly instead.
        let tol = ToleranceConfig::default();
        let u_eq = vec![vec![1.0, 1.0], vec![1.0], vec![1.0]];
        for j in 0..3 {
            assert!(c.point_in_player_set(j, &u_eq, &tol));
        }
        let u_bad = vec![vec![0.0, 1.0], vec![1.0], vec![1.0]];
        assert!(!c.point_in_player_set(0, &u_bad, &tol));
    }

    #[test]
    fn from_classical_builds_copy_constraints() {
        let g = entry_game();
        let c = to_classical_gnep(&g).unwrap();
        let back = from_classical_gnep(&c).unwrap();
        // Blocks: 2 (feasibility) + 1 + 1 -> shared dim 4, one copy
        // row per coordinate.
        assert_eq!(back.n0, 4);
        assert_eq!(back.global_constraints.len(), 4);
        assert_eq!(back.players.len(), 3);
        // Players carry X as a shared-dependent set, so the constant
        // set guard must reject the converted game.
        assert!(back.require_constant_feasible_sets("test").is_err());
    }
}
