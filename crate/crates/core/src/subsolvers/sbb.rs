//! Global minimisation of square-separable programs by lifting and
//! spatial branch and bound.
//!
//! A square-separable program is affine except for pure squared terms:
//! every row and the objective have the shape
//! `c + a . v + sum_k q_k * v_{j_k}^2`. Cross products and higher
//! degrees are out of scope. Equality rows carrying squares make the
//! feasible set nonconvex, so local methods are not enough; this
//! module finds the global minimum.
//!
//! Each squared variable `v` is lifted to an auxiliary variable
//! `s = v^2`. Tangents (`s >= 2m v - m^2`) and the secant over the
//! current interval (`s <= (l+u) v - l u`) wrap the parabola, making
//! every relaxation a linear program whose optimal value bounds the
//! true optimum from below. Wherever a relaxation point dips below the
//! parabola, a tangent at that point is added and the node re-solved,
//! which closes the tangent side by Newton steps instead of branching.
//! The secant side is closed by spatial branch and bound: the interval
//! of the most violated lift is split until the bound meets an
//! incumbent produced by re-solving with the squared variables pinned.
//!
//! The search is deterministic: nodes are popped best-bound-first with
//! insertion order as the tie break, and branching picks the first
//! most-violated lift.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use super::{solve_lp, DenseLinearProgram, LpOutcome};
use crate::error::{Error, Result};
use crate::expr::{Polynomial, VarKey};
use crate::model::Sense;

/// Relative optimality gap at which the search stops.
const REL_GAP: f64 = 1e-9;

/// Hard cap on branch-and-bound nodes.
const NODE_CAP: usize = 50_000;

/// Fraction of the interval width kept on each side of a split point.
const SPLIT_MARGIN: f64 = 0.01;

/// Most tangent touch points kept per lifted square.
const TANGENT_POOL_CAP: usize = 32;

/// Most relaxation re-solves per node while tangents are being added.
const CUT_ROUNDS: usize = 16;

/// `constant + linear . v + sum q * v_j^2` over a dense column space.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareForm {
    pub constant: f64,
    pub linear: Vec<f64>,
    /// `(column, coefficient)` pairs, ascending by column.
    pub squares: Vec<(usize, f64)>,
}

impl SquareForm {
    pub fn zeros(n: usize) -> Self {
        SquareForm {
            constant: 0.0,
            linear: vec![0.0; n],
            squares: Vec::new(),
        }
    }

    pub fn value_at(&self, v: &[f64]) -> f64 {
        let mut out = self.constant;
        for (j, &a) in self.linear.iter().enumerate() {
            out += a * v[j];
        }
        for &(j, q) in &self.squares {
            out += q * v[j] * v[j];
        }
        out
    }
}

/// One constraint `form <sense> 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareRow {
    pub form: SquareForm,
    pub sense: Sense,
}

/// Minimise `objective` subject to box bounds, affine rows, and rows
/// carrying squared terms.
#[derive(Debug, Clone)]
pub struct DenseSquareProgram {
    pub n: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Purely affine rows `coeffs . v <sense> rhs`.
    pub linear: Vec<(Vec<f64>, Sense, f64)>,
    /// Rows that may carry squared terms. Kept apart from the affine
    /// rows so repair steps can pin or relax them as a group.
    pub rows: Vec<SquareRow>,
    pub objective: SquareForm,
}

impl DenseSquareProgram {
    /// Feasibility at the same tolerances the model layer uses: bounds
    /// and affine rows within `lin_tol`, square rows within `nl_tol`,
    /// all absolute.
    pub fn is_feasible(&self, v: &[f64], lin_tol: f64, nl_tol: f64) -> bool {
        if v.len() != self.n {
            return false;
        }
        for j in 0..self.n {
            if v[j] < self.lower[j] - lin_tol || v[j] > self.upper[j] + lin_tol {
                return false;
            }
        }
        for (coeffs, sense, rhs) in &self.linear {
            let lhs: f64 = coeffs.iter().zip(v).map(|(c, x)| c * x).sum();
            let resid = match sense {
                Sense::Le => lhs - rhs,
                Sense::Eq => (lhs - rhs).abs(),
            };
            if resid > lin_tol {
                return false;
            }
        }
        for row in &self.rows {
            let val = row.form.value_at(v);
            let resid = match row.sense {
                Sense::Le => val,
                Sense::Eq => val.abs(),
            };
            if resid > nl_tol {
                return false;
            }
        }
        true
    }

    fn validate(&self) -> Result<()> {
        if self.lower.len() != self.n || self.upper.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "square program declares n={} but bounds have lengths {}/{}",
                self.n,
                self.lower.len(),
                self.upper.len()
            )));
        }
        for (coeffs, _, _) in &self.linear {
            if coeffs.len() != self.n {
                return Err(Error::DimensionMismatch(
                    "affine row width differs from the column count".to_string(),
                ));
            }
        }
        for form in self
            .rows
            .iter()
            .map(|r| &r.form)
            .chain(std::iter::once(&self.objective))
        {
            if form.linear.len() != self.n || form.squares.iter().any(|&(j, _)| j >= self.n) {
                return Err(Error::DimensionMismatch(
                    "square form indexes outside the column space".to_string(),
                ));
            }
        }
        Ok(())
    }
}

/// Splits a polynomial into a [`SquareForm`] over the columns chosen
/// by `index_of`. Cross products, degree three and up, and variables
/// that `index_of` leaves unmapped are rejected; `what` names the
/// polynomial in error messages.
pub fn square_form_of<F>(
    poly: &Polynomial,
    n: usize,
    index_of: &F,
    what: &str,
) -> Result<SquareForm>
where
    F: Fn(VarKey) -> Option<usize>,
{
    let column = |v: VarKey| {
        index_of(v).ok_or_else(|| Error::IndexOutOfRange(format!("{what}: unmapped variable {v:?}")))
    };
    let mut form = SquareForm::zeros(n);
    for (m, &c) in &poly.terms {
        match m.0.as_slice() {
            [] => form.constant += c,
            [(v, 1)] => form.linear[column(*v)?] += c,
            [(v, 2)] => {
                let j = column(*v)?;
                match form.squares.iter_mut().find(|(k, _)| *k == j) {
                    Some((_, q)) => *q += c,
                    None => form.squares.push((j, c)),
                }
            }
            _ => {
                return Err(Error::UnsupportedStructure(format!(
                    "{what} mixes variables beyond affine plus pure squares"
                )))
            }
        }
    }
    form.squares.retain(|&(_, q)| q != 0.0);
    form.squares.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(form)
}

/// One affine row over the lifted column space.
struct LiftedRow {
    coeffs: Vec<f64>,
    sense: Sense,
    rhs: f64,
}

/// The program in lifted form: columns are the original variables
/// followed by one `s` column per squared variable.
struct LiftedProblem {
    n: usize,
    /// Original indices of the squared variables, ascending.
    sq: Vec<usize>,
    /// `s` column index per entry of `sq`.
    s_col: Vec<usize>,
    rows: Vec<LiftedRow>,
    cost: Vec<f64>,
    obj_const: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Per square row: affine coefficients over the original
    /// variables, squared-term coefficients per `sq` entry, sense and
    /// right-hand side. Used to rebuild rows once squares are pinned.
    pinned_rows: Vec<(Vec<f64>, Vec<f64>, Sense, f64)>,
}

fn build_lifted(prog: &DenseSquareProgram) -> LiftedProblem {
    let n = prog.n;
    let mut sq_set: BTreeSet<usize> = BTreeSet::new();
    for row in &prog.rows {
        for &(j, _) in &row.form.squares {
            sq_set.insert(j);
        }
    }
    for &(j, _) in &prog.objective.squares {
        sq_set.insert(j);
    }

    let sq: Vec<usize> = sq_set.into_iter().collect();
    let s_col: Vec<usize> = (0..sq.len()).map(|k| n + k).collect();
    let col_of_sq = |j: usize| sq.iter().position(|&v| v == j).expect("squared variable");

    let width = n + sq.len();
    let mut rows = Vec::new();
    let mut pinned_rows = Vec::new();
    for (coeffs, sense, rhs) in &prog.linear {
        let mut wide = vec![0.0; width];
        wide[..n].copy_from_slice(coeffs);
        rows.push(LiftedRow {
            coeffs: wide,
            sense: *sense,
            rhs: *rhs,
        });
    }
    for row in &prog.rows {
        let mut coeffs = vec![0.0; width];
        coeffs[..n].copy_from_slice(&row.form.linear);
        let mut sq_coeffs = vec![0.0; sq.len()];
        for &(j, q) in &row.form.squares {
            let k = col_of_sq(j);
            coeffs[s_col[k]] = q;
            sq_coeffs[k] = q;
        }
        rows.push(LiftedRow {
            coeffs,
            sense: row.sense,
            rhs: -row.form.constant,
        });
        pinned_rows.push((
            row.form.linear.clone(),
            sq_coeffs,
            row.sense,
            -row.form.constant,
        ));
    }

    let mut cost = vec![0.0; width];
    cost[..n].copy_from_slice(&prog.objective.linear);
    for &(j, q) in &prog.objective.squares {
        cost[s_col[col_of_sq(j)]] = q;
    }

    let mut lower = vec![0.0; width];
    let mut upper = vec![0.0; width];
    lower[..n].copy_from_slice(&prog.lower);
    upper[..n].copy_from_slice(&prog.upper);
    for k in 0..sq.len() {
        lower[s_col[k]] = 0.0;
        upper[s_col[k]] = f64::INFINITY;
    }

    LiftedProblem {
        n,
        sq,
        s_col,
        rows,
        cost,
        obj_const: prog.objective.constant,
        lower,
        upper,
        pinned_rows,
    }
}

/// Range of `v^2` over `[l, u]`.
fn square_range(l: f64, u: f64) -> (f64, f64) {
    let lo = if l <= 0.0 && u >= 0.0 {
        0.0
    } else {
        (l * l).min(u * u)
    };
    (lo, (l * l).max(u * u))
}

/// Tangent and secant rows wrapping `s_k = v_k^2` on the interval.
fn envelope_rows(lp: &LiftedProblem, k: usize, l: f64, u: f64, out: &mut Vec<LiftedRow>) {
    let width = lp.n + lp.sq.len();
    if u - l <= 1e-12 * (1.0 + l.abs().max(u.abs())) {
        return;
    }
    for m in [l, 0.5 * (l + u), u] {
        let mut coeffs = vec![0.0; width];
        coeffs[lp.sq[k]] = 2.0 * m;
        coeffs[lp.s_col[k]] = -1.0;
        out.push(LiftedRow {
            coeffs,
            sense: Sense::Le,
            rhs: m * m,
        });
    }
    let mut coeffs = vec![0.0; width];
    coeffs[lp.sq[k]] = -(l + u);
    coeffs[lp.s_col[k]] = 1.0;
    out.push(LiftedRow {
        coeffs,
        sense: Sense::Le,
        rhs: -l * u,
    });
}

fn node_program(
    lp: &LiftedProblem,
    intervals: &[(f64, f64)],
    pool: &[Vec<f64>],
) -> DenseLinearProgram {
    let width = lp.n + lp.sq.len();
    let mut rows = Vec::with_capacity(lp.rows.len() + 4 * lp.sq.len());
    let mut senses = Vec::new();
    let mut rhs = Vec::new();
    for r in &lp.rows {
        rows.push(r.coeffs.clone());
        senses.push(r.sense);
        rhs.push(r.rhs);
    }
    let mut extra = Vec::new();
    for (k, &(l, u)) in intervals.iter().enumerate() {
        envelope_rows(lp, k, l, u, &mut extra);
    }
    for r in extra {
        rows.push(r.coeffs);
        senses.push(r.sense);
        rhs.push(r.rhs);
    }
    for (k, touches) in pool.iter().enumerate() {
        for &m in touches {
            let mut coeffs = vec![0.0; width];
            coeffs[lp.sq[k]] = 2.0 * m;
            coeffs[lp.s_col[k]] = -1.0;
            rows.push(coeffs);
            senses.push(Sense::Le);
            rhs.push(m * m);
        }
    }
    let mut lower = lp.lower.clone();
    let mut upper = lp.upper.clone();
    for (k, &(l, u)) in intervals.iter().enumerate() {
        lower[lp.sq[k]] = l;
        upper[lp.sq[k]] = u;
        let (slo, shi) = square_range(l, u);
        lower[lp.s_col[k]] = slo;
        upper[lp.s_col[k]] = shi;
    }
    DenseLinearProgram {
        cost: lp.cost.clone(),
        rows,
        senses,
        rhs,
        lower,
        upper,
    }
}

/// Re-solves with the squared variables pinned to `vals`, relaxing
/// the square rows by `slack` to absorb the pinning error. Returns a
/// candidate point over the original variables.
enum Repair {
    Point(Vec<f64>),
    Unbounded,
    Infeasible,
}

fn repair_at(lp: &LiftedProblem, affine_rows: usize, vals: &[f64], slack: f64) -> Result<Repair> {
    let n = lp.n;
    let mut rows = Vec::new();
    let mut senses = Vec::new();
    let mut rhs = Vec::new();
    for r in lp.rows.iter().take(affine_rows) {
        rows.push(r.coeffs[..n].to_vec());
        senses.push(r.sense);
        rhs.push(r.rhs);
    }
    for (lin, sq_coeffs, sense, r0) in &lp.pinned_rows {
        let shift: f64 = sq_coeffs.iter().zip(vals).map(|(q, v)| q * v * v).sum();
        let r = r0 - shift;
        match sense {
            Sense::Le => {
                rows.push(lin.clone());
                senses.push(Sense::Le);
                rhs.push(r + slack);
            }
            Sense::Eq => {
                rows.push(lin.clone());
                senses.push(Sense::Le);
                rhs.push(r + slack);
                rows.push(lin.iter().map(|a| -a).collect());
                senses.push(Sense::Le);
                rhs.push(-r + slack);
            }
        }
    }
    let mut lower = lp.lower[..n].to_vec();
    let mut upper = lp.upper[..n].to_vec();
    for (k, &j) in lp.sq.iter().enumerate() {
        lower[j] = vals[k];
        upper[j] = vals[k];
    }
    let program = DenseLinearProgram {
        cost: lp.cost[..n].to_vec(),
        rows,
        senses,
        rhs,
        lower,
        upper,
    };
    Ok(match solve_lp(&program)? {
        LpOutcome::Optimal { x, .. } => Repair::Point(x),
        LpOutcome::Unbounded { .. } => Repair::Unbounded,
        LpOutcome::Infeasible { .. } => Repair::Infeasible,
    })
}

/// Finite interval for each squared variable: from its box bounds,
/// from bound-probing LPs over the lifted relaxation, or, when the
/// rows never touch the variable itself, from the largest value they
/// allow its square, since `s = v^2` in the original problem.
fn derive_intervals(lp: &LiftedProblem) -> Result<Option<Vec<(f64, f64)>>> {
    let width = lp.n + lp.sq.len();
    let probe_with = |cost: Vec<f64>| DenseLinearProgram {
        cost,
        rows: lp.rows.iter().map(|r| r.coeffs.clone()).collect(),
        senses: lp.rows.iter().map(|r| r.sense).collect(),
        rhs: lp.rows.iter().map(|r| r.rhs).collect(),
        lower: lp.lower.clone(),
        upper: lp.upper.clone(),
    };
    let mut intervals = Vec::with_capacity(lp.sq.len());
    for (k, &j) in lp.sq.iter().enumerate() {
        let (blo, bhi) = (lp.lower[j], lp.upper[j]);
        if blo.is_finite() && bhi.is_finite() {
            intervals.push((blo, bhi));
            continue;
        }
        let mut bounds = [blo, bhi];
        let mut square_cap = None;
        for (which, sign) in [(0usize, 1.0), (1usize, -1.0)] {
            if bounds[which].is_finite() {
                continue;
            }
            let mut cost = vec![0.0; width];
            cost[j] = sign;
            match solve_lp(&probe_with(cost))? {
                LpOutcome::Optimal { objective, .. } => {
                    let v = sign * objective;
                    bounds[which] = v - sign * 1e-9 * (1.0 + v.abs());
                    continue;
                }
                LpOutcome::Infeasible { .. } => return Ok(None),
                LpOutcome::Unbounded { .. } => {}
            }
            if square_cap.is_none() {
                let mut cost = vec![0.0; width];
                cost[lp.s_col[k]] = -1.0;
                square_cap = Some(match solve_lp(&probe_with(cost))? {
                    LpOutcome::Optimal { objective, .. } => {
                        let cap = -objective;
                        if cap < 0.0 {
                            return Ok(None);
                        }
                        (cap + 1e-9 * (1.0 + cap)).sqrt()
                    }
                    LpOutcome::Infeasible { .. } => return Ok(None),
                    LpOutcome::Unbounded { .. } => {
                        return Err(Error::UnsupportedStructure(format!(
                            "squared variable {j} cannot be bounded from the rows \
                             (index {k} of the lifted set)"
                        )))
                    }
                });
            }
            let reach = square_cap.expect("probed above");
            bounds[which] = if which == 0 { -reach } else { reach };
        }
        intervals.push((bounds[0], bounds[1]));
    }
    Ok(Some(intervals))
}

struct Node {
    bound: f64,
    order: u64,
    intervals: Vec<(f64, f64)>,
    point: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.order == other.order
    }
}
impl Eq for Node {}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(other.order.cmp(&self.order))
    }
}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Outcome of relaxing and repairing one node.
enum NodeEval {
    Pruned,
    Open(Node),
    UnboundedBelow,
}

struct Search<'a> {
    prog: &'a DenseSquareProgram,
    lp: LiftedProblem,
    /// Number of affine rows (the leading entries of `lp.rows`).
    affine_rows: usize,
    slack: f64,
    lin_tol: f64,
    nl_tol: f64,
    order: u64,
    /// Tangent touch points per lift, grown at relaxation points. A
    /// tangent `s >= 2 m v - m^2` holds on the whole parabola, so the
    /// pool is shared by every node.
    pool: Vec<Vec<f64>>,
}

impl Search<'_> {
    /// Records `v` as the incumbent when it is feasible at the given
    /// tolerances and beats the current best value.
    fn consider(&self, v: &[f64], incumbent: &mut Option<(f64, Vec<f64>)>) {
        if !self.prog.is_feasible(v, self.lin_tol, self.nl_tol) {
            return;
        }
        let value = self.prog.objective.value_at(v);
        if incumbent.as_ref().map_or(true, |(best, _)| value < *best) {
            *incumbent = Some((value, v.to_vec()));
        }
    }

    /// Adds one tangent per lift whose `s` column sits below the
    /// parabola at the relaxation point. Returns false once every lift
    /// matches its square there, or the violated pools are full.
    fn add_tangents_at(&mut self, x: &[f64]) -> bool {
        let mut added = false;
        for (k, &j) in self.lp.sq.iter().enumerate() {
            let v = x[j];
            let s = x[self.lp.s_col[k]];
            if v * v - s <= 1e-10 * (1.0 + v * v) {
                continue;
            }
            let touches = &mut self.pool[k];
            if touches.len() >= TANGENT_POOL_CAP
                || touches
                    .iter()
                    .any(|&m| (m - v).abs() <= 1e-9 * (1.0 + v.abs()))
            {
                continue;
            }
            touches.push(v);
            added = true;
        }
        added
    }

    fn eval_node(
        &mut self,
        intervals: Vec<(f64, f64)>,
        incumbent: &mut Option<(f64, Vec<f64>)>,
    ) -> Result<NodeEval> {
        let mut solved = solve_lp(&node_program(&self.lp, &intervals, &self.pool))?;
        for _ in 0..CUT_ROUNDS {
            let LpOutcome::Optimal { x, .. } = &solved else {
                break;
            };
            let x = x.clone();
            if !self.add_tangents_at(&x) {
                break;
            }
            solved = solve_lp(&node_program(&self.lp, &intervals, &self.pool))?;
        }
        match solved {
            LpOutcome::Infeasible { .. } => Ok(NodeEval::Pruned),
            LpOutcome::Unbounded { x: feas, .. } => {
                let vals: Vec<f64> = self.lp.sq.iter().map(|&j| feas[j]).collect();
                match repair_at(&self.lp, self.affine_rows, &vals, self.slack)? {
                    Repair::Point(_) | Repair::Unbounded => Ok(NodeEval::UnboundedBelow),
                    Repair::Infeasible => {
                        self.order += 1;
                        Ok(NodeEval::Open(Node {
                            bound: f64::NEG_INFINITY,
                            order: self.order,
                            intervals,
                            point: feas,
                        }))
                    }
                }
            }
            LpOutcome::Optimal {
                x: point,
                objective,
                ..
            } => {
                self.consider(&point[..self.lp.n], incumbent);
                // Pin each squared variable to the root of its lifted
                // square, not to its own column: the lift is what the
                // rows tie to the rest of the point, while a zero-cost
                // column may park at any vertex value.
                let vals: Vec<f64> = (0..self.lp.sq.len())
                    .map(|k| {
                        let j = self.lp.sq[k];
                        let r = point[self.lp.s_col[k]].max(0.0).sqrt();
                        let v = if point[j] < 0.0 { -r } else { r };
                        v.clamp(self.lp.lower[j], self.lp.upper[j])
                    })
                    .collect();
                if let Repair::Point(v) =
                    repair_at(&self.lp, self.affine_rows, &vals, self.slack)?
                {
                    self.consider(&v, incumbent);
                }
                self.order += 1;
                Ok(NodeEval::Open(Node {
                    bound: objective + self.lp.obj_const,
                    order: self.order,
                    intervals,
                    point,
                }))
            }
        }
    }
}

/// True when the incumbent already sits within the relative gap of a
/// lower bound; without an incumbent nothing is closed.
fn gap_closed(incumbent: &Option<(f64, Vec<f64>)>, bound: f64) -> bool {
    incumbent
        .as_ref()
        .map_or(false, |(v, _)| v - bound <= REL_GAP * (1.0 + v.abs()))
}

/// Result of a global solve.
#[derive(Debug, Clone, PartialEq)]
pub enum SbbOutcome {
    Optimal { value: f64, point: Vec<f64> },
    Infeasible,
    Unbounded,
}

/// Globally minimises a square-separable program. `label` names the
/// caller in diagnostics, `lin_tol`/`nl_tol` are the feasibility
/// tolerances candidate points must meet.
pub fn solve_square_program(
    prog: &DenseSquareProgram,
    lin_tol: f64,
    nl_tol: f64,
    label: &str,
) -> Result<SbbOutcome> {
    prog.validate()?;
    let lp = build_lifted(prog);
    let affine_rows = prog.linear.len();

    let intervals = match derive_intervals(&lp)? {
        Some(iv) => iv,
        None => return Ok(SbbOutcome::Infeasible),
    };

    let lifts = lp.sq.len();
    let mut search = Search {
        prog,
        lp,
        affine_rows,
        slack: 0.5 * nl_tol,
        lin_tol,
        nl_tol,
        order: 0,
        pool: vec![Vec::new(); lifts],
    };
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut nodes_solved = 1usize;

    match search.eval_node(intervals, &mut incumbent)? {
        NodeEval::Open(node) => heap.push(node),
        NodeEval::Pruned => return Ok(SbbOutcome::Infeasible),
        NodeEval::UnboundedBelow => return Ok(SbbOutcome::Unbounded),
    }

    while let Some(node) = heap.pop() {
        if gap_closed(&incumbent, node.bound) {
            break;
        }
        // Most violated lift at the node's relaxation point, skipping
        // intervals already too narrow to split.
        let mut pick: Option<(usize, f64)> = None;
        for (k, &j) in search.lp.sq.iter().enumerate() {
            let (l, u) = node.intervals[k];
            if u - l <= 1e-12 * (1.0 + l.abs().max(u.abs())) {
                continue;
            }
            let viol = (node.point[search.lp.s_col[k]] - node.point[j] * node.point[j]).abs();
            if pick.map_or(true, |(_, best)| viol > best) {
                pick = Some((k, viol));
            }
        }
        let Some((k, _)) = pick else {
            // Every interval is degenerate, so the relaxation point is
            // the node's exact answer up to roundoff.
            search.consider(&node.point[..search.lp.n], &mut incumbent);
            continue;
        };
        let (l, u) = node.intervals[k];
        let w = u - l;
        let split = node.point[search.lp.sq[k]].clamp(l + SPLIT_MARGIN * w, u - SPLIT_MARGIN * w);
        for child_iv in [(l, split), (split, u)] {
            nodes_solved += 1;
            if nodes_solved > NODE_CAP {
                return Err(Error::SolverFailure(format!(
                    "{label} exceeded {NODE_CAP} nodes"
                )));
            }
            let mut intervals = node.intervals.clone();
            intervals[k] = child_iv;
            match search.eval_node(intervals, &mut incumbent)? {
                NodeEval::Open(child) => {
                    if !gap_closed(&incumbent, child.bound) {
                        heap.push(child);
                    }
                }
                NodeEval::Pruned => {}
                NodeEval::UnboundedBelow => return Ok(SbbOutcome::Unbounded),
            }
        }
    }

    Ok(match incumbent {
        Some((value, point)) => SbbOutcome::Optimal { value, point },
        None => SbbOutcome::Infeasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> DenseSquareProgram {
        let n = lower.len();
        DenseSquareProgram {
            n,
            lower,
            upper,
            linear: Vec::new(),
            rows: Vec::new(),
            objective: SquareForm::zeros(n),
        }
    }

    #[test]
    fn concave_square_objective_runs_to_the_wider_box_edge() {
        let mut prog = boxed(vec![-1.0], vec![2.0]);
        prog.objective.squares.push((0, -1.0));
        let out = solve_square_program(&prog, 1e-8, 1e-6, "test").unwrap();
        let SbbOutcome::Optimal { value, point } = out else {
            panic!("expected an optimum");
        };
        assert!((value + 4.0).abs() <= 1e-6, "value {value}");
        assert!((point[0] - 2.0).abs() <= 1e-4, "point {}", point[0]);
    }

    #[test]
    fn equality_square_row_carves_a_nonconvex_set() {
        // v0 = v1^2 with v0 in [1, 4]: the global minimum of v0 sits
        // on the parabola at |v1| = 1, outside the convex hull's
        // bottom.
        let mut prog = boxed(vec![1.0, -2.0], vec![4.0, 2.0]);
        prog.objective.linear[0] = 1.0;
        prog.rows.push(SquareRow {
            form: SquareForm {
                constant: 0.0,
                linear: vec![-1.0, 0.0],
                squares: vec![(1, 1.0)],
            },
            sense: Sense::Eq,
        });
        let out = solve_square_program(&prog, 1e-8, 1e-6, "test").unwrap();
        let SbbOutcome::Optimal { value, point } = out else {
            panic!("expected an optimum");
        };
        assert!((value - 1.0).abs() <= 1e-6, "value {value}");
        assert!((point[0] - 1.0).abs() <= 1e-4, "v0 {}", point[0]);
        assert!((point[1].abs() - 1.0).abs() <= 1e-4, "v1 {}", point[1]);
    }

    #[test]
    fn contradictory_square_row_reports_infeasible() {
        let mut prog = boxed(vec![-1.0], vec![1.0]);
        prog.rows.push(SquareRow {
            form: SquareForm {
                constant: 1.0,
                linear: vec![0.0],
                squares: vec![(0, 1.0)],
            },
            sense: Sense::Le,
        });
        assert_eq!(
            solve_square_program(&prog, 1e-8, 1e-6, "test").unwrap(),
            SbbOutcome::Infeasible
        );
    }

    #[test]
    fn free_linear_descent_reports_unbounded() {
        let mut prog = boxed(vec![f64::NEG_INFINITY], vec![0.0]);
        prog.objective.linear[0] = 1.0;
        assert_eq!(
            solve_square_program(&prog, 1e-8, 1e-6, "test").unwrap(),
            SbbOutcome::Unbounded
        );
    }
}
