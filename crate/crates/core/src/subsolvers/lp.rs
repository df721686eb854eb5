//! Bounded-variable two-phase primal simplex.
//!
//! Solves `min c'x  s.t.  A x (<=|=) b,  l <= x <= u` with dense data.
//! Phase 1 minimises the sum of artificial variables from an
//! all-artificial starting basis; phase 2 pins the artificials to zero
//! and minimises the true cost. Entering variables are priced by the
//! Dantzig rule, falling back to Bland's rule after a streak of
//! degenerate pivots so cycling cannot occur.
//!
//! Every answer is checked before it is returned: optimal bases are
//! refactorised from the original data and wrapped in a
//! [`Certificate`]; infeasibility returns a [`FarkasWitness`] whose
//! margin is re-verified; unboundedness returns a ray that is checked
//! against the rows, bounds, and cost.

use serde::{Deserialize, Serialize};

use super::linalg::Lu;
use super::{Certificate, FarkasWitness};
use crate::error::{Error, Result};
use crate::model::Sense;

/// Dense linear program in the form `min c'x, A x (<=|=) b, l <= x <= u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLinearProgram {
    pub cost: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub senses: Vec<Sense>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Result of an LP solve.
#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal {
        x: Vec<f64>,
        /// One multiplier per row; `<= 0` on `<=` rows for a minimisation.
        duals: Vec<f64>,
        /// Reduced costs of the structural variables.
        reduced_costs: Vec<f64>,
        objective: f64,
        certificate: Certificate,
    },
    Infeasible {
        witness: FarkasWitness,
    },
    Unbounded {
        /// A feasible point from which the ray departs.
        x: Vec<f64>,
        /// Direction with `c'ray < 0` that stays feasible forever.
        ray: Vec<f64>,
    },
}

impl LpOutcome {
    /// Optimal objective, or an error naming the actual outcome.
    pub fn optimal_objective(&self) -> Result<f64> {
        match self {
            LpOutcome::Optimal { objective, .. } => Ok(*objective),
            LpOutcome::Infeasible { .. } => {
                Err(Error::Infeasible("linear program has no feasible point".into()))
            }
            LpOutcome::Unbounded { .. } => {
                Err(Error::Unbounded("linear program is unbounded below".into()))
            }
        }
    }
}

const PIVOT_TOL: f64 = 1e-9;
const PRICE_TOL: f64 = 1e-9;
const DEGENERATE_STREAK_LIMIT: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Free variable resting at zero.
    FreeNonbasic,
}

/// Tableau-based simplex over structural, slack, and artificial columns.
struct Tableau {
    n_struct: usize,
    n_rows: usize,
    /// Column index of the slack for each `<=` row, if any.
    slack_of_row: Vec<Option<usize>>,
    /// Column index of the artificial for each row.
    art_of_row: Vec<usize>,
    n_cols: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    /// `B^{-1} A` for all columns, row major.
    t: Vec<Vec<f64>>,
    /// Current values of the basic variables, one per row.
    xb: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<VarState>,
    /// Sign applied to each artificial column so the start basis is identity.
    art_sign: Vec<f64>,
}

impl Tableau {
    fn new(lp: &DenseLinearProgram) -> Tableau {
        let n = lp.cost.len();
        let m = lp.rows.len();
        let mut slack_of_row = vec![None; m];
        let mut n_cols = n;
        for (i, sense) in lp.senses.iter().enumerate() {
            if *sense == Sense::Le {
                slack_of_row[i] = Some(n_cols);
                n_cols += 1;
            }
        }
        let art_of_row: Vec<usize> = (0..m).map(|i| n_cols + i).collect();
        n_cols += m;

        let mut lower = vec![0.0; n_cols];
        let mut upper = vec![f64::INFINITY; n_cols];
        lower[..n].copy_from_slice(&lp.lower);
        upper[..n].copy_from_slice(&lp.upper);

        let mut state = vec![VarState::AtLower; n_cols];
        for j in 0..n {
            state[j] = match (lower[j].is_finite(), upper[j].is_finite()) {
                (true, true) => {
                    if lower[j].abs() <= upper[j].abs() {
                        VarState::AtLower
                    } else {
                        VarState::AtUpper
                    }
                }
                (true, false) => VarState::AtLower,
                (false, true) => VarState::AtUpper,
                (false, false) => VarState::FreeNonbasic,
            };
        }

        let nonbasic_value = |j: usize, st: VarState| match st {
            VarState::AtLower => lower[j],
            VarState::AtUpper => upper[j],
            _ => 0.0,
        };

        // Residual b - A x_N with structural variables at their resting
        // values and slacks at zero; artificials absorb it.
        let mut resid = lp.rhs.clone();
        for (i, row) in lp.rows.iter().enumerate() {
            for j in 0..n {
                resid[i] -= row[j] * nonbasic_value(j, state[j]);
            }
        }

        let art_sign: Vec<f64> = resid
            .iter()
            .map(|r| if *r < 0.0 { -1.0 } else { 1.0 })
            .collect();

        // t = B^{-1} A_all with B = diag(art_sign).
        let mut t = vec![vec![0.0; n_cols]; m];
        for i in 0..m {
            for j in 0..n {
                t[i][j] = art_sign[i] * lp.rows[i][j];
            }
            if let Some(s) = slack_of_row[i] {
                t[i][s] = art_sign[i];
            }
            t[i][art_of_row[i]] = 1.0;
        }

        let mut basis = Vec::with_capacity(m);
        let mut xb = Vec::with_capacity(m);
        for i in 0..m {
            let a = art_of_row[i];
            basis.push(a);
            state[a] = VarState::Basic(i);
            xb.push(resid[i].abs());
        }

        Tableau {
            n_struct: n,
            n_rows: m,
            slack_of_row,
            art_of_row,
            n_cols,
            lower,
            upper,
            cost: vec![0.0; n_cols],
            t,
            xb,
            basis,
            state,
            art_sign,
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::AtLower => self.lower[j],
            VarState::AtUpper => self.upper[j],
            VarState::FreeNonbasic => 0.0,
            VarState::Basic(i) => self.xb[i],
        }
    }

    fn objective(&self) -> f64 {
        (0..self.n_cols)
            .map(|j| self.cost[j] * self.nonbasic_value(j))
            .sum()
    }

    fn reduced_cost(&self, j: usize) -> f64 {
        let mut d = self.cost[j];
        for i in 0..self.n_rows {
            d -= self.cost[self.basis[i]] * self.t[i][j];
        }
        d
    }

    /// Row multipliers `y` with `y = B^{-T} c_B`, read off the
    /// artificial columns, which hold `B^{-1} e_i` up to sign.
    fn duals(&self) -> Vec<f64> {
        (0..self.n_rows)
            .map(|i| {
                let col = self.art_of_row[i];
                let mut y = 0.0;
                for k in 0..self.n_rows {
                    y += self.cost[self.basis[k]] * self.t[k][col];
                }
                y * self.art_sign[i]
            })
            .collect()
    }

    /// Whether column `j` may enter given its reduced cost `d`.
    fn wants_to_move(&self, j: usize, d: f64, tol: f64) -> Option<f64> {
        if self.upper[j] - self.lower[j] <= PIVOT_TOL {
            return None;
        }
        match self.state[j] {
            VarState::Basic(_) => None,
            VarState::AtLower => (d < -tol).then_some(1.0),
            VarState::AtUpper => (d > tol).then_some(-1.0),
            VarState::FreeNonbasic => {
                if d < -tol {
                    Some(1.0)
                } else if d > tol {
                    Some(-1.0)
                } else {
                    None
                }
            }
        }
    }

    /// One priced simplex iteration. Returns:
    /// `Ok(true)` optimal, `Ok(false)` pivoted, `Err(ray columns)` unbounded.
    fn iterate(&mut self, bland: bool, price_scale: f64) -> std::result::Result<bool, Vec<f64>> {
        let tol = PRICE_TOL * price_scale;
        let mut enter: Option<(usize, f64, f64)> = None;
        for j in 0..self.n_cols {
            let d = self.reduced_cost(j);
            if let Some(dir) = self.wants_to_move(j, d, tol) {
                if bland {
                    enter = Some((j, d, dir));
                    break;
                }
                match enter {
                    Some((_, best, _)) if d.abs() <= best.abs() => {}
                    _ => enter = Some((j, d, dir)),
                }
            }
        }
        let Some((je, _, dir)) = enter else {
            return Ok(true);
        };

        // Ratio test: how far can x[je] move in direction `dir`?
        let own_range = self.upper[je] - self.lower[je];
        let mut best_step = own_range;
        let mut leave: Option<usize> = None;
        for i in 0..self.n_rows {
            let delta = dir * self.t[i][je];
            let b = self.basis[i];
            let step = if delta > PIVOT_TOL {
                (self.xb[i] - self.lower[b]) / delta
            } else if delta < -PIVOT_TOL {
                (self.xb[i] - self.upper[b]) / delta
            } else {
                continue;
            };
            let step = step.max(0.0);
            let replace = match leave {
                None => step < best_step - PIVOT_TOL,
                Some(r) => {
                    step < best_step - PIVOT_TOL
                        || (step < best_step + PIVOT_TOL && self.basis[i] < self.basis[r])
                }
            };
            if replace && step <= best_step + PIVOT_TOL {
                best_step = step.min(best_step);
                leave = Some(i);
            }
        }

        if best_step.is_infinite() {
            let mut ray = vec![0.0; self.n_cols];
            ray[je] = dir;
            for i in 0..self.n_rows {
                ray[self.basis[i]] = -dir * self.t[i][je];
            }
            return Err(ray);
        }

        let step = best_step.max(0.0);
        let entering_new = self.nonbasic_value(je) + dir * step;
        for i in 0..self.n_rows {
            self.xb[i] -= dir * self.t[i][je] * step;
        }

        match leave {
            None => {
                // Bound flip: the entering variable runs to its other bound.
                self.state[je] = if dir > 0.0 {
                    VarState::AtUpper
                } else {
                    VarState::AtLower
                };
            }
            Some(r) => {
                let out = self.basis[r];
                let delta = dir * self.t[r][je];
                self.state[out] = if delta > 0.0 {
                    VarState::AtLower
                } else {
                    VarState::AtUpper
                };
                self.pivot(r, je);
                self.basis[r] = je;
                self.state[je] = VarState::Basic(r);
                self.xb[r] = entering_new;
            }
        }
        Ok(false)
    }

    fn pivot(&mut self, r: usize, je: usize) {
        let p = self.t[r][je];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        for i in 0..self.n_rows {
            if i == r {
                continue;
            }
            let f = self.t[i][je];
            if f == 0.0 {
                continue;
            }
            let (pre, rest) = self.t.split_at_mut(r.max(i));
            let (row_i, row_r) = if i < r {
                (&mut pre[i], &rest[0])
            } else {
                (&mut rest[0], &pre[r])
            };
            for j in 0..self.n_cols {
                row_i[j] -= f * row_r[j];
            }
        }
    }

    /// Runs priced iterations until optimal, unbounded, or the cap.
    fn optimise(&mut self, price_scale: f64) -> std::result::Result<Option<Vec<f64>>, Error> {
        let cap = 10_000 + 10 * (self.n_rows + self.n_cols);
        let mut degenerate_streak = 0usize;
        let mut last_objective = self.objective();
        for _ in 0..cap {
            let bland = degenerate_streak >= DEGENERATE_STREAK_LIMIT;
            match self.iterate(bland, price_scale) {
                Ok(true) => return Ok(None),
                Ok(false) => {
                    let obj = self.objective();
                    if obj < last_objective - PIVOT_TOL * price_scale {
                        degenerate_streak = 0;
                    } else {
                        degenerate_streak += 1;
                    }
                    last_objective = obj;
                }
                Err(ray) => return Ok(Some(ray)),
            }
        }
        Err(Error::SolverFailure(format!(
            "simplex hit its iteration cap of {cap} pivots"
        )))
    }

    fn structural_x(&self) -> Vec<f64> {
        (0..self.n_struct).map(|j| self.nonbasic_value(j)).collect()
    }
}

fn validate(lp: &DenseLinearProgram) -> Result<()> {
    let n = lp.cost.len();
    let m = lp.rows.len();
    if lp.lower.len() != n || lp.upper.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "bounds have lengths {}/{} but the program has {n} variables",
            lp.lower.len(),
            lp.upper.len()
        )));
    }
    if lp.senses.len() != m || lp.rhs.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "senses/rhs have lengths {}/{} but the program has {m} rows",
            lp.senses.len(),
            lp.rhs.len()
        )));
    }
    for (i, row) in lp.rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "row {i} has {} coefficients but the program has {n} variables",
                row.len()
            )));
        }
    }
    for j in 0..n {
        if lp.lower[j].is_nan() || lp.upper[j].is_nan() || lp.cost[j].is_nan() {
            return Err(Error::InvalidModel(format!("variable {j} has NaN data")));
        }
        if lp.lower[j] > lp.upper[j] {
            return Err(Error::InvalidModel(format!(
                "variable {j} has lower bound {} above upper bound {}",
                lp.lower[j], lp.upper[j]
            )));
        }
    }
    for (i, v) in lp.rhs.iter().enumerate() {
        if v.is_nan() || lp.rows[i].iter().any(|c| c.is_nan()) {
            return Err(Error::InvalidModel(format!("row {i} has NaN data")));
        }
    }
    Ok(())
}

fn data_scale(lp: &DenseLinearProgram) -> f64 {
    let mut s: f64 = 1.0;
    for v in lp.cost.iter().chain(lp.rhs.iter()) {
        s = s.max(v.abs());
    }
    for row in &lp.rows {
        for v in row {
            s = s.max(v.abs());
        }
    }
    s
}

/// Margin of a Farkas witness: the least value of `y'(Ax + s)` over the
/// box (and slack cone) minus `y'b`. Positive proves infeasibility.
fn farkas_margin(lp: &DenseLinearProgram, y: &[f64]) -> f64 {
    let n = lp.cost.len();
    let mut margin = 0.0;
    for j in 0..n {
        let mut coeff = 0.0;
        for (i, row) in lp.rows.iter().enumerate() {
            coeff += y[i] * row[j];
        }
        let contrib = if coeff > 0.0 {
            if lp.lower[j].is_finite() {
                coeff * lp.lower[j]
            } else {
                return f64::NEG_INFINITY;
            }
        } else if coeff < 0.0 {
            if lp.upper[j].is_finite() {
                coeff * lp.upper[j]
            } else {
                return f64::NEG_INFINITY;
            }
        } else {
            0.0
        };
        margin += contrib;
    }
    for (i, sense) in lp.senses.iter().enumerate() {
        if *sense == Sense::Le && y[i] < 0.0 {
            return f64::NEG_INFINITY;
        }
        margin -= y[i] * lp.rhs[i];
    }
    margin
}

/// Residual of `x` against rows and bounds.
fn primal_residual(lp: &DenseLinearProgram, x: &[f64]) -> f64 {
    let mut r: f64 = 0.0;
    for (i, row) in lp.rows.iter().enumerate() {
        let ax: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
        match lp.senses[i] {
            Sense::Le => r = r.max(ax - lp.rhs[i]),
            Sense::Eq => r = r.max((ax - lp.rhs[i]).abs()),
        }
    }
    for j in 0..x.len() {
        r = r.max(lp.lower[j] - x[j]);
        r = r.max(x[j] - lp.upper[j]);
    }
    r.max(0.0)
}

/// Checks that `ray` keeps every row satisfied, respects bound
/// directions, and improves the cost; used before reporting unbounded.
fn verify_ray(lp: &DenseLinearProgram, ray: &[f64], scale: f64) -> bool {
    let tol = 1e-7 * scale;
    let cd: f64 = lp.cost.iter().zip(ray).map(|(c, d)| c * d).sum();
    if cd >= -tol {
        return false;
    }
    for (i, row) in lp.rows.iter().enumerate() {
        let ad: f64 = row.iter().zip(ray).map(|(a, d)| a * d).sum();
        match lp.senses[i] {
            Sense::Le => {
                if ad > tol {
                    return false;
                }
            }
            Sense::Eq => {
                if ad.abs() > tol {
                    return false;
                }
            }
        }
    }
    for j in 0..ray.len() {
        if ray[j] > tol && lp.upper[j].is_finite() {
            return false;
        }
        if ray[j] < -tol && lp.lower[j].is_finite() {
            return false;
        }
    }
    true
}

/// Refactorises the final basis from the original data and rebuilds
/// `x`, duals, and reduced costs without accumulated tableau drift.
fn polish(
    lp: &DenseLinearProgram,
    tab: &Tableau,
) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let m = tab.n_rows;
    let n = tab.n_struct;
    if m == 0 {
        let x: Vec<f64> = (0..n).map(|j| tab.nonbasic_value(j)).collect();
        return Some((x, Vec::new(), lp.cost.clone()));
    }
    let art_start = tab.n_cols - m;
    // Original column for every tableau column index.
    let column = |j: usize| -> Vec<f64> {
        let mut col = vec![0.0; m];
        if j < n {
            for i in 0..m {
                col[i] = lp.rows[i][j];
            }
        } else if j < art_start {
            for i in 0..m {
                if tab.slack_of_row[i] == Some(j) {
                    col[i] = 1.0;
                }
            }
        } else {
            let i = j - art_start;
            col[i] = tab.art_sign[i];
        }
        col
    };

    let bmat: Vec<Vec<f64>> = (0..m)
        .map(|i| tab.basis.iter().map(|&j| column(j)[i]).collect())
        .collect();
    let lu = Lu::factor(&bmat);
    if lu.is_singular() {
        return None;
    }

    // Basic values from B x_B = b - N x_N.
    let mut rhs = lp.rhs.clone();
    for j in 0..tab.n_cols {
        if matches!(tab.state[j], VarState::Basic(_)) {
            continue;
        }
        let v = tab.nonbasic_value(j);
        if v == 0.0 {
            continue;
        }
        let col = column(j);
        for i in 0..m {
            rhs[i] -= col[i] * v;
        }
    }
    let xb = lu.solve(&rhs)?;
    let mut x = vec![0.0; n];
    for j in 0..n {
        x[j] = match tab.state[j] {
            VarState::Basic(i) => xb[i],
            _ => tab.nonbasic_value(j),
        };
    }

    // Duals from B' y = c_B via unit solves against the transpose.
    let bt: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|k| bmat[k][i]).collect())
        .collect();
    let lut = Lu::factor(&bt);
    let cb: Vec<f64> = tab.basis.iter().map(|&j| tab.cost[j]).collect();
    let y = lut.solve(&cb)?;

    let mut reduced = vec![0.0; n];
    for j in 0..n {
        let mut d = lp.cost[j];
        for i in 0..m {
            d -= y[i] * lp.rows[i][j];
        }
        reduced[j] = d;
    }
    Some((x, y, reduced))
}

fn build_certificate(
    lp: &DenseLinearProgram,
    x: &[f64],
    y: &[f64],
    reduced: &[f64],
) -> Certificate {
    let objective: f64 = lp.cost.iter().zip(x).map(|(c, v)| c * v).sum();

    let mut dual_residual: f64 = 0.0;
    let mut complementarity: f64 = 0.0;
    let mut dual_objective: f64 = y.iter().zip(&lp.rhs).map(|(yi, bi)| yi * bi).sum();

    for (i, sense) in lp.senses.iter().enumerate() {
        if *sense == Sense::Le {
            // Multiplier sign for a <= row in a minimisation.
            dual_residual = dual_residual.max(y[i]);
            let ax: f64 = lp.rows[i].iter().zip(x).map(|(a, v)| a * v).sum();
            complementarity = complementarity.max((y[i] * (ax - lp.rhs[i])).abs());
        }
    }
    for j in 0..x.len() {
        let d = reduced[j];
        let lam = d.max(0.0);
        let mu = (-d).max(0.0);
        if lam > 0.0 {
            if lp.lower[j].is_finite() {
                dual_objective += lam * lp.lower[j];
                complementarity = complementarity.max(lam * (x[j] - lp.lower[j]).abs());
            } else {
                dual_residual = dual_residual.max(lam);
            }
        }
        if mu > 0.0 {
            if lp.upper[j].is_finite() {
                dual_objective -= mu * lp.upper[j];
                complementarity = complementarity.max(mu * (lp.upper[j] - x[j]).abs());
            } else {
                dual_residual = dual_residual.max(mu);
            }
        }
    }

    Certificate {
        primal_residual: primal_residual(lp, x),
        dual_residual,
        complementarity,
        objective,
        dual_objective,
    }
}

/// Solves a dense LP, returning a verified outcome.
pub fn solve_lp(lp: &DenseLinearProgram) -> Result<LpOutcome> {
    validate(lp)?;
    let scale = data_scale(lp);
    let mut tab = Tableau::new(lp);

    // Phase 1: drive the artificials to zero.
    for &a in &tab.art_of_row {
        tab.cost[a] = 1.0;
    }
    let phase1_scale = 1.0 + scale;
    if tab.optimise(phase1_scale)?.is_some() {
        return Err(Error::SolverFailure(
            "phase-1 problem reported unbounded, which cannot happen".into(),
        ));
    }
    let infeas = tab.objective();
    if infeas > 1e-7 * phase1_scale {
        let y = tab.duals();
        let mut witness: Vec<f64> = y.iter().map(|v| -v).collect();
        // Multipliers carry rounding noise at the data's scale; a tiny
        // wrong-signed entry on a <= row is dropped rather than
        // invalidating the whole witness. The margin is recomputed for
        // the cleaned witness, so the certificate stays sound.
        let wscale = witness.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        for (i, sense) in lp.senses.iter().enumerate() {
            if *sense == Sense::Le && witness[i] < 0.0 && witness[i] >= -1e-9 * wscale {
                witness[i] = 0.0;
            }
        }
        let margin = farkas_margin(lp, &witness);
        if margin <= 0.0 {
            return Err(Error::SolverFailure(format!(
                "phase 1 left residual {infeas:.3e} but its multipliers do not certify it"
            )));
        }
        return Ok(LpOutcome::Infeasible {
            witness: FarkasWitness {
                row_multipliers: witness,
                margin,
            },
        });
    }

    // Phase 2: pin artificials at zero and price the true cost.
    for i in 0..tab.n_rows {
        let a = tab.art_of_row[i];
        tab.cost[a] = 0.0;
        tab.lower[a] = 0.0;
        tab.upper[a] = 0.0;
        if !matches!(tab.state[a], VarState::Basic(_)) {
            tab.state[a] = VarState::AtLower;
        }
    }
    // Any artificial still basic sits at value ~0; try to pivot it out
    // on a usable column so it cannot re-enter the picture.
    for i in 0..tab.n_rows {
        let a = tab.art_of_row[i];
        if tab.state[a] != VarState::Basic(i) {
            continue;
        }
        let Some(r) = (0..tab.n_rows).find(|&r| tab.basis[r] == a) else {
            continue;
        };
        if let Some(je) = (0..tab.art_of_row[0])
            .find(|&j| !matches!(tab.state[j], VarState::Basic(_)) && tab.t[r][j].abs() > 1e-7)
        {
            let keep = tab.xb[r];
            tab.state[a] = VarState::AtLower;
            tab.pivot(r, je);
            tab.basis[r] = je;
            tab.state[je] = VarState::Basic(r);
            tab.xb[r] = keep;
        }
    }
    tab.cost[..tab.n_struct].copy_from_slice(&lp.cost);
    let cost_scale = 1.0 + lp.cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));

    if let Some(ray_cols) = tab.optimise(cost_scale)? {
        let x = tab.structural_x();
        let ray: Vec<f64> = ray_cols[..tab.n_struct].to_vec();
        if !verify_ray(lp, &ray, scale) {
            return Err(Error::SolverFailure(
                "simplex reported an unbounded ray that failed verification".into(),
            ));
        }
        return Ok(LpOutcome::Unbounded { x, ray });
    }

    let (x, y, reduced) = match polish(lp, &tab) {
        Some(triple) => triple,
        None => {
            let y = tab.duals();
            let reduced: Vec<f64> = (0..tab.n_struct).map(|j| tab.reduced_cost(j)).collect();
            (tab.structural_x(), y, reduced)
        }
    };
    let certificate = build_certificate(lp, &x, &y, &reduced);
    let objective = certificate.objective;
    Ok(LpOutcome::Optimal {
        x,
        duals: y,
        reduced_costs: reduced,
        objective,
        certificate,
    })
}

/// Solves the LP and then, among optimal solutions, lexicographically
/// minimises the coordinates listed in `priority` (in order). Used
/// where a deterministic representative of a degenerate optimal face
/// is required.
pub fn solve_lp_lex_smallest(lp: &DenseLinearProgram, priority: &[usize]) -> Result<LpOutcome> {
    let first = solve_lp(lp)?;
    let (objective, duals, reduced_costs) = match &first {
        LpOutcome::Optimal {
            objective,
            duals,
            reduced_costs,
            ..
        } => (*objective, duals.clone(), reduced_costs.clone()),
        _ => return Ok(first),
    };
    if priority.is_empty() {
        return Ok(first);
    }
    let mut work = lp.clone();
    // Pin the objective, then sweep the priority coordinates.
    work.rows.push(lp.cost.clone());
    work.senses.push(Sense::Le);
    work.rhs.push(objective + 1e-9 * (1.0 + objective.abs()));
    let mut point: Option<Vec<f64>> = None;
    for &k in priority {
        let mut probe = work.clone();
        probe.cost = vec![0.0; lp.cost.len()];
        probe.cost[k] = 1.0;
        let out = solve_lp(&probe)?;
        let LpOutcome::Optimal { x, objective: vk, .. } = out else {
            // The restricted problem is feasible by construction, so
            // anything else means the coordinate is unbounded below;
            // keep the best representative found so far.
            break;
        };
        work.rows.push(probe.cost);
        work.senses.push(Sense::Le);
        work.rhs.push(vk + 1e-9 * (1.0 + vk.abs()));
        point = Some(x);
    }
    let Some(x) = point else {
        return Ok(first);
    };
    // The refined point lies on the original optimal face, so the
    // duals of the plain solve certify it (any primal-optimal point is
    // complementary with any dual-optimal multiplier).
    let certificate = build_certificate(lp, &x, &duals, &reduced_costs);
    let objective = certificate.objective;
    Ok(LpOutcome::Optimal {
        x,
        duals,
        reduced_costs,
        objective,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn lp(
        cost: Vec<f64>,
        rows: Vec<Vec<f64>>,
        senses: Vec<Sense>,
        rhs: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> DenseLinearProgram {
        DenseLinearProgram {
            cost,
            rows,
            senses,
            rhs,
            lower,
            upper,
        }
    }

    #[test]
    fn solves_a_textbook_lp() {
        // max x + y s.t. x + 2y <= 4, 3x + y <= 6, x,y >= 0
        // optimum at (8/5, 6/5) with value 14/5.
        let p = lp(
            vec![-1.0, -1.0],
            vec![vec![1.0, 2.0], vec![3.0, 1.0]],
            vec![Sense::Le, Sense::Le],
            vec![4.0, 6.0],
            vec![0.0, 0.0],
            vec![f64::INFINITY, f64::INFINITY],
        );
        match solve_lp(&p).unwrap() {
            LpOutcome::Optimal {
                x,
                objective,
                certificate,
                ..
            } => {
                assert!((x[0] - 1.6).abs() < 1e-9);
                assert!((x[1] - 1.2).abs() < 1e-9);
                assert!((objective + 2.8).abs() < 1e-9);
                assert!(certificate.is_clean(1e-8));
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn handles_equalities_and_bounds() {
        // min x - y s.t. x + y = 1, 0 <= x <= 0.3, 0 <= y <= 1.
        let p = lp(
            vec![1.0, -1.0],
            vec![vec![1.0, 1.0]],
            vec![Sense::Eq],
            vec![1.0],
            vec![0.0, 0.0],
            vec![0.3, 1.0],
        );
        match solve_lp(&p).unwrap() {
            LpOutcome::Optimal { x, objective, .. } => {
                assert!((x[0] - 0.0).abs() < 1e-9);
                assert!((x[1] - 1.0).abs() < 1e-9);
                assert!((objective + 1.0).abs() < 1e-9);
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn certifies_infeasibility() {
        // x >= 2 (as -x <= -2) and x <= 1.
        let p = lp(
            vec![0.0],
            vec![vec![-1.0], vec![1.0]],
            vec![Sense::Le, Sense::Le],
            vec![-2.0, 1.0],
            vec![f64::NEG_INFINITY],
            vec![f64::INFINITY],
        );
        match solve_lp(&p).unwrap() {
            LpOutcome::Infeasible { witness } => {
                assert!(witness.margin > 0.5);
                let recomputed = farkas_margin(&p, &witness.row_multipliers);
                assert!((recomputed - witness.margin).abs() < 1e-9);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn certifies_unboundedness() {
        // min -x s.t. x - y <= 1, y <= 5 with x free below only.
        let p = lp(
            vec![-1.0, 0.0],
            vec![vec![1.0, -1.0]],
            vec![Sense::Le],
            vec![1.0],
            vec![0.0, 0.0],
            vec![f64::INFINITY, f64::INFINITY],
        );
        match solve_lp(&p).unwrap() {
            LpOutcome::Unbounded { ray, .. } => {
                assert!(ray[0] > 0.0);
                assert!(verify_ray(&p, &ray, 1.0));
            }
            other => panic!("expected unbounded, got {other:?}"),
        }
    }

    #[test]
    fn respects_fixed_variables() {
        let p = lp(
            vec![1.0, 1.0],
            vec![vec![1.0, 1.0]],
            vec![Sense::Le],
            vec![10.0],
            vec![2.0, 0.0],
            vec![2.0, 3.0],
        );
        match solve_lp(&p).unwrap() {
            LpOutcome::Optimal { x, .. } => {
                assert_eq!(x[0], 2.0);
                assert!((x[1] - 0.0).abs() < 1e-12);
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn lex_refinement_picks_the_smallest_vertex() {
        // min 0 over the segment x + y = 1, x,y in [0,1]: every feasible
        // point is optimal; the lex rule must land on x = 0, y = 1.
        let p = lp(
            vec![0.0, 0.0],
            vec![vec![1.0, 1.0]],
            vec![Sense::Eq],
            vec![1.0],
            vec![0.0, 0.0],
            vec![1.0, 1.0],
        );
        match solve_lp_lex_smallest(&p, &[0, 1]).unwrap() {
            LpOutcome::Optimal { x, .. } => {
                assert!(x[0].abs() < 1e-7);
                assert!((x[1] - 1.0).abs() < 1e-7);
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    /// Reference bound for feasibility used by the random tests: a box
    /// LP relaxation check via dense enumeration of a coarse grid is
    /// hopeless in general, so instead the random instances are built
    /// feasible by construction and strong duality is asserted.
    #[test]
    fn strong_duality_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(1551);
        let mut optimal = 0usize;
        for trial in 0..500 {
            let n = rng.gen_range(1..=6);
            let m = rng.gen_range(1..=5);
            let mut rows = Vec::with_capacity(m);
            let mut senses = Vec::with_capacity(m);
            let mut rhs = Vec::with_capacity(m);
            // Anchor point inside the box keeps most instances feasible.
            let anchor: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let lower: Vec<f64> = anchor.iter().map(|a| a - rng.gen_range(0.0..3.0)).collect();
            let upper: Vec<f64> = anchor.iter().map(|a| a + rng.gen_range(0.0..3.0)).collect();
            for _ in 0..m {
                let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0_f64)).collect();
                let ax: f64 = row.iter().zip(&anchor).map(|(a, v)| a * v).sum();
                if rng.gen_bool(0.3) {
                    senses.push(Sense::Eq);
                    rhs.push(ax);
                } else {
                    senses.push(Sense::Le);
                    rhs.push(ax + rng.gen_range(0.0..2.0));
                }
                rows.push(row);
            }
            let cost: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let p = lp(cost, rows, senses, rhs, lower, upper);
            match solve_lp(&p).unwrap_or_else(|e| panic!("trial {trial}: {e}")) {
                LpOutcome::Optimal { certificate, .. } => {
                    assert!(
                        certificate.is_clean(1e-7),
                        "trial {trial}: dirty certificate {certificate:?}"
                    );
                    optimal += 1;
                }
                LpOutcome::Infeasible { witness } => {
                    // The anchor is feasible for every row, so this
                    // can only be a genuine (verified) claim about a
                    // different system; the margin check in solve_lp
                    // should have rejected it.
                    panic!("trial {trial}: anchored instance reported infeasible {witness:?}");
                }
                LpOutcome::Unbounded { ray, .. } => {
                    assert!(verify_ray(&p, &ray, data_scale(&p)), "trial {trial}");
                }
            }
        }
        assert!(optimal > 300, "only {optimal} of 500 instances were optimal");
    }

    #[test]
    fn infeasibility_witnesses_verify_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut infeasible = 0usize;
        for trial in 0..300 {
            let n = rng.gen_range(1..=4);
            // Force a contradiction: row and its negation with a gap.
            let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0_f64)).collect();
            if row.iter().all(|v| v.abs() < 0.1) {
                continue;
            }
            let neg: Vec<f64> = row.iter().map(|v| -v).collect();
            let p = lp(
                vec![0.0; n],
                vec![row, neg],
                vec![Sense::Le, Sense::Le],
                vec![1.0, -2.0],
                vec![-5.0; n],
                vec![5.0; n],
            );
            match solve_lp(&p).unwrap() {
                LpOutcome::Infeasible { witness } => {
                    assert!(
                        witness.margin > 0.0,
                        "trial {trial}: nonpositive margin {}",
                        witness.margin
                    );
                    let m = farkas_margin(&p, &witness.row_multipliers);
                    assert!(m > 0.0, "trial {trial}: recomputed margin {m}");
                    infeasible += 1;
                }
                other => panic!("trial {trial}: expected infeasible, got {other:?}"),
            }
        }
        assert!(infeasible > 250);
    }
}
