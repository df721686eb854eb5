//! Primal active-set method for dense convex quadratic programs.
//!
//! Solves `min 0.5 x'Qx + g'x + c  s.t.  A x (<=|=) b,  l <= x <= u`
//! with `Q` symmetric positive semidefinite. A feasible start comes
//! from a zero-cost LP solve; the active-set loop then alternates
//! null-space Newton steps with constraint drops until the KKT
//! conditions hold. Zero curvature in the reduced Hessian is handled
//! explicitly, so linear objectives and rank-deficient `Q` work, and
//! genuine unboundedness is returned as a verified ray.

use serde::{Deserialize, Serialize};

use super::linalg::{affine_solution_space, dot, symmetric_eigen, Lu};
use super::lp::{solve_lp, DenseLinearProgram, LpOutcome};
use super::{Certificate, FarkasWitness};
use crate::error::{Error, Result};
use crate::model::Sense;

/// Dense convex QP: `min 0.5 x'Qx + linear'x + constant` subject to
/// `rows x (<=|=) rhs` and `lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseConvexQp {
    pub q: Vec<Vec<f64>>,
    pub linear: Vec<f64>,
    pub constant: f64,
    pub rows: Vec<Vec<f64>>,
    pub senses: Vec<Sense>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Result of a QP solve.
#[derive(Debug, Clone, PartialEq)]
pub enum QpOutcome {
    Optimal {
        x: Vec<f64>,
        /// One multiplier per row; `<= 0` on `<=` rows for a minimisation.
        duals: Vec<f64>,
        objective: f64,
        certificate: Certificate,
    },
    Infeasible {
        witness: FarkasWitness,
    },
    Unbounded {
        x: Vec<f64>,
        ray: Vec<f64>,
    },
}

impl QpOutcome {
    /// Optimal objective, or an error naming the actual outcome.
    pub fn optimal_objective(&self) -> Result<f64> {
        match self {
            QpOutcome::Optimal { objective, .. } => Ok(*objective),
            QpOutcome::Infeasible { .. } => {
                Err(Error::Infeasible("quadratic program has no feasible point".into()))
            }
            QpOutcome::Unbounded { .. } => {
                Err(Error::Unbounded("quadratic program is unbounded below".into()))
            }
        }
    }
}

/// One linear constraint of the combined system (rows plus bounds).
struct Facet {
    normal: Vec<f64>,
    rhs: f64,
    is_eq: bool,
    /// Index into the original row list, if this facet is a row.
    row: Option<usize>,
    /// `(variable, on_upper)` if this facet is a bound.
    bound: Option<(usize, bool)>,
}

impl DenseConvexQp {
    pub fn objective_at(&self, x: &[f64]) -> f64 {
        let mut v = self.constant + dot(&self.linear, x);
        for i in 0..x.len() {
            v += 0.5 * x[i] * dot(&self.q[i], x);
        }
        v
    }

    fn gradient_at(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len())
            .map(|i| self.linear[i] + dot(&self.q[i], x))
            .collect()
    }

    fn validate(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.linear.len();
        if self.q.len() != n || self.q.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "quadratic term is not {n} x {n}"
            )));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::DimensionMismatch(
                "bound lengths do not match the variable count".into(),
            ));
        }
        let m = self.rows.len();
        if self.senses.len() != m || self.rhs.len() != m {
            return Err(Error::DimensionMismatch(
                "senses/rhs lengths do not match the row count".into(),
            ));
        }
        for row in &self.rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch(
                    "row width does not match the variable count".into(),
                ));
            }
        }
        let scale = self
            .q
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |a, v| a.max(v.abs()));
        let mut sym = self.q.clone();
        for i in 0..n {
            for j in 0..n {
                if (self.q[i][j] - self.q[j][i]).abs() > 1e-8 * (1.0 + scale) {
                    return Err(Error::InvalidModel(format!(
                        "quadratic term is not symmetric at ({i},{j})"
                    )));
                }
                sym[i][j] = 0.5 * (self.q[i][j] + self.q[j][i]);
            }
        }
        if n > 0 {
            let eig = super::linalg::symmetric_eigenvalues(&sym);
            if eig[0] < -1e-10 * (1.0 + scale) {
                return Err(Error::InvalidModel(format!(
                    "quadratic term is not positive semidefinite (least eigenvalue {:.3e})",
                    eig[0]
                )));
            }
        }
        Ok(sym)
    }

    fn facets(&self) -> Vec<Facet> {
        let n = self.linear.len();
        let mut out = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            out.push(Facet {
                normal: row.clone(),
                rhs: self.rhs[i],
                is_eq: self.senses[i] == Sense::Eq,
                row: Some(i),
                bound: None,
            });
        }
        for j in 0..n {
            let unit = |sign: f64| {
                let mut e = vec![0.0; n];
                e[j] = sign;
                e
            };
            if self.lower[j] == self.upper[j] {
                out.push(Facet {
                    normal: unit(1.0),
                    rhs: self.upper[j],
                    is_eq: true,
                    row: None,
                    bound: Some((j, true)),
                });
                continue;
            }
            if self.upper[j].is_finite() {
                out.push(Facet {
                    normal: unit(1.0),
                    rhs: self.upper[j],
                    is_eq: false,
                    row: None,
                    bound: Some((j, true)),
                });
            }
            if self.lower[j].is_finite() {
                out.push(Facet {
                    normal: unit(-1.0),
                    rhs: -self.lower[j],
                    is_eq: false,
                    row: None,
                    bound: Some((j, false)),
                });
            }
        }
        out
    }
}

const STEP_TOL: f64 = 1e-11;
const RAY_TOL: f64 = 1e-7;

/// Outcome of a reduced Newton step computation.
enum EqpStep {
    /// Step to the minimiser of the working-set equality problem.
    Newton(Vec<f64>),
    /// Direction of linear descent with zero curvature.
    Ray(Vec<f64>),
}

fn eqp_step(qp: &DenseConvexQp, sym: &[Vec<f64>], x: &[f64], aw: &[Vec<f64>]) -> Result<EqpStep> {
    let n = x.len();
    let grad = qp.gradient_at(x);
    let gscale = 1.0 + grad.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let zbasis: Vec<Vec<f64>> = if aw.is_empty() {
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect()
    } else {
        let zeros = vec![0.0; aw.len()];
        let Some((_, basis)) = affine_solution_space(aw, &zeros) else {
            return Err(Error::SolverFailure(
                "homogeneous working-set system reported inconsistent".into(),
            ));
        };
        basis
    };
    let dz = zbasis.len();
    if dz == 0 {
        return Ok(EqpStep::Newton(vec![0.0; n]));
    }
    // Reduced Hessian and gradient.
    let qz: Vec<Vec<f64>> = zbasis
        .iter()
        .map(|z| (0..n).map(|i| dot(&sym[i], z)).collect())
        .collect();
    let h: Vec<Vec<f64>> = (0..dz)
        .map(|a| (0..dz).map(|b| dot(&zbasis[a], &qz[b])).collect())
        .collect();
    let rg: Vec<f64> = zbasis.iter().map(|z| dot(z, &grad)).collect();

    let (vals, vecs) = symmetric_eigen(&h);
    let hscale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let ctol = 1e-10 * (1.0 + hscale);
    if vals[0] < -1e-6 * (1.0 + hscale) {
        return Err(Error::SolverFailure(format!(
            "reduced Hessian lost positive semidefiniteness (eigenvalue {:.3e})",
            vals[0]
        )));
    }
    let mut pz = vec![0.0; dz];
    for k in 0..dz {
        let proj = dot(&vecs[k], &rg);
        if vals[k] > ctol {
            for a in 0..dz {
                pz[a] -= proj / vals[k] * vecs[k][a];
            }
        } else if proj.abs() > 1e-9 * gscale {
            // Flat direction with a live gradient: descend along it.
            let sign = if proj > 0.0 { -1.0 } else { 1.0 };
            let mut ray = vec![0.0; n];
            for a in 0..dz {
                for i in 0..n {
                    ray[i] += sign * vecs[k][a] * zbasis[a][i];
                }
            }
            return Ok(EqpStep::Ray(ray));
        }
    }
    let mut p = vec![0.0; n];
    for a in 0..dz {
        for i in 0..n {
            p[i] += pz[a] * zbasis[a][i];
        }
    }
    Ok(EqpStep::Newton(p))
}

/// Largest feasible step from `x` along `p` against facets outside the
/// working set. Returns the blocking facet, if any, up to `t_max`.
fn blocking_step(
    facets: &[Facet],
    working: &[usize],
    x: &[f64],
    p: &[f64],
    t_max: f64,
) -> (f64, Option<usize>) {
    let mut t = t_max;
    let mut hit = None;
    for (k, f) in facets.iter().enumerate() {
        if working.binary_search(&k).is_ok() {
            continue;
        }
        let speed = dot(&f.normal, p);
        if speed <= 1e-12 {
            continue;
        }
        let slack = (f.rhs - dot(&f.normal, x)).max(0.0);
        let tk = slack / speed;
        if tk < t - 1e-12 {
            t = tk;
            hit = Some(k);
        }
    }
    (t.max(0.0), hit)
}

fn feasible_start(qp: &DenseConvexQp) -> Result<std::result::Result<Vec<f64>, FarkasWitness>> {
    let lp = DenseLinearProgram {
        cost: vec![0.0; qp.linear.len()],
        rows: qp.rows.clone(),
        senses: qp.senses.clone(),
        rhs: qp.rhs.clone(),
        lower: qp.lower.clone(),
        upper: qp.upper.clone(),
    };
    match solve_lp(&lp)? {
        LpOutcome::Optimal { x, .. } => Ok(Ok(x)),
        LpOutcome::Infeasible { witness } => Ok(Err(witness)),
        LpOutcome::Unbounded { .. } => Err(Error::SolverFailure(
            "zero-cost phase-1 program reported unbounded, which cannot happen".into(),
        )),
    }
}

/// Multipliers for the working set: solves `A_W' lambda = grad`.
fn working_multipliers(
    facets: &[Facet],
    working: &[usize],
    grad: &[f64],
) -> Option<Vec<f64>> {
    let n = grad.len();
    let k = working.len();
    if k == 0 {
        return Some(Vec::new());
    }
    let at: Vec<Vec<f64>> = (0..n)
        .map(|i| working.iter().map(|&w| facets[w].normal[i]).collect())
        .collect();
    let (lam0, _) = affine_solution_space(&at, grad)?;
    (lam0.len() == k).then_some(lam0)
}

fn primal_residual(qp: &DenseConvexQp, x: &[f64]) -> f64 {
    let mut r: f64 = 0.0;
    for (i, row) in qp.rows.iter().enumerate() {
        let ax = dot(row, x);
        match qp.senses[i] {
            Sense::Le => r = r.max(ax - qp.rhs[i]),
            Sense::Eq => r = r.max((ax - qp.rhs[i]).abs()),
        }
    }
    for j in 0..x.len() {
        r = r.max(qp.lower[j] - x[j]);
        r = r.max(x[j] - qp.upper[j]);
    }
    r.max(0.0)
}

fn verify_qp_ray(qp: &DenseConvexQp, sym: &[Vec<f64>], x: &[f64], ray: &[f64]) -> bool {
    let scale = 1.0
        + qp.linear.iter().fold(0.0f64, |a, v| a.max(v.abs()))
        + ray.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tol = RAY_TOL * scale;
    let curvature: f64 = (0..ray.len())
        .map(|i| ray[i] * dot(&sym[i], ray))
        .sum();
    if curvature.abs() > tol {
        return false;
    }
    let slope = dot(&qp.gradient_at(x), ray);
    if slope >= -tol {
        return false;
    }
    for (i, row) in qp.rows.iter().enumerate() {
        let ad = dot(row, ray);
        match qp.senses[i] {
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
        if ray[j] > tol && qp.upper[j].is_finite() {
            return false;
        }
        if ray[j] < -tol && qp.lower[j].is_finite() {
            return false;
        }
    }
    true
}

/// Builds the KKT certificate from the primal point and the facet
/// multipliers, reporting stationarity inside `dual_residual` and the
/// Lagrangian value as `dual_objective`.
fn build_qp_certificate(
    qp: &DenseConvexQp,
    x: &[f64],
    facets: &[Facet],
    lambda_by_facet: &[f64],
) -> (Certificate, Vec<f64>) {
    let n = x.len();
    let grad = qp.gradient_at(x);
    let mut row_duals = vec![0.0; qp.rows.len()];
    let mut bound_mult = vec![0.0; n];
    for (k, f) in facets.iter().enumerate() {
        let lam = lambda_by_facet[k];
        if lam == 0.0 {
            continue;
        }
        if let Some(i) = f.row {
            row_duals[i] = lam;
        } else if let Some((j, on_upper)) = f.bound {
            // Upper-bound facets have normal +e_j, lower-bound -e_j.
            bound_mult[j] += if on_upper || f.is_eq { lam } else { -lam };
        }
    }

    let mut dual_residual: f64 = 0.0;
    let mut complementarity: f64 = 0.0;
    // Stationarity: grad - A'y - d should vanish.
    for j in 0..n {
        let mut s = grad[j] - bound_mult[j];
        for (i, row) in qp.rows.iter().enumerate() {
            s -= row_duals[i] * row[j];
        }
        dual_residual = dual_residual.max(s.abs());
    }
    let mut lagrangian = qp.objective_at(x);
    for (i, row) in qp.rows.iter().enumerate() {
        let slack = dot(row, x) - qp.rhs[i];
        if qp.senses[i] == Sense::Le {
            dual_residual = dual_residual.max(row_duals[i]);
            complementarity = complementarity.max((row_duals[i] * slack).abs());
        }
        lagrangian -= row_duals[i] * slack;
    }
    for j in 0..n {
        let d = bound_mult[j];
        if d > 0.0 {
            if qp.lower[j].is_finite() {
                complementarity = complementarity.max(d * (x[j] - qp.lower[j]).abs());
                lagrangian += d * (qp.lower[j] - x[j]);
            } else {
                dual_residual = dual_residual.max(d);
            }
        } else if d < 0.0 {
            if qp.upper[j].is_finite() {
                complementarity = complementarity.max((-d) * (qp.upper[j] - x[j]).abs());
                lagrangian += d * (qp.upper[j] - x[j]);
            } else {
                dual_residual = dual_residual.max(-d);
            }
        }
    }

    let certificate = Certificate {
        primal_residual: primal_residual(qp, x),
        dual_residual,
        complementarity,
        objective: qp.objective_at(x),
        dual_objective: lagrangian,
    };
    (certificate, row_duals)
}

/// Projects `x` back onto the affine span of the working set if doing
/// so lowers the overall primal residual.
fn tighten_on_working_set(
    qp: &DenseConvexQp,
    facets: &[Facet],
    working: &[usize],
    x: &mut Vec<f64>,
) {
    if working.is_empty() {
        return;
    }
    let aw: Vec<Vec<f64>> = working.iter().map(|&k| facets[k].normal.clone()).collect();
    let bw: Vec<f64> = working.iter().map(|&k| facets[k].rhs).collect();
    let Some((v0, zbasis)) = affine_solution_space(&aw, &bw) else {
        return;
    };
    let mut candidate = v0.clone();
    if !zbasis.is_empty() {
        // Least-squares coefficients of (x - v0) on the null basis.
        let dz = zbasis.len();
        let gram: Vec<Vec<f64>> = (0..dz)
            .map(|a| (0..dz).map(|b| dot(&zbasis[a], &zbasis[b])).collect())
            .collect();
        let diff: Vec<f64> = x.iter().zip(&v0).map(|(a, b)| a - b).collect();
        let rhs: Vec<f64> = zbasis.iter().map(|z| dot(z, &diff)).collect();
        let lu = Lu::factor(&gram);
        let Some(coef) = lu.solve(&rhs) else {
            return;
        };
        for (a, z) in zbasis.iter().enumerate() {
            for i in 0..candidate.len() {
                candidate[i] += coef[a] * z[i];
            }
        }
    }
    if primal_residual(qp, &candidate) < primal_residual(qp, x) {
        *x = candidate;
    }
}

/// Solves a dense convex QP, returning a verified outcome.
pub fn solve_qp(qp: &DenseConvexQp) -> Result<QpOutcome> {
    let sym = qp.validate()?;
    let n = qp.linear.len();
    if n == 0 {
        for (i, sense) in qp.senses.iter().enumerate() {
            let bad = match sense {
                Sense::Le => 0.0 > qp.rhs[i],
                Sense::Eq => qp.rhs[i] != 0.0,
            };
            if bad {
                let mut mult = vec![0.0; qp.senses.len()];
                mult[i] = if qp.rhs[i] > 0.0 { -1.0 } else { 1.0 };
                let margin = -mult[i] * qp.rhs[i];
                return Ok(QpOutcome::Infeasible {
                    witness: FarkasWitness {
                        row_multipliers: mult,
                        margin,
                    },
                });
            }
        }
        return Ok(QpOutcome::Optimal {
            x: Vec::new(),
            duals: vec![0.0; qp.rows.len()],
            objective: qp.constant,
            certificate: Certificate {
                primal_residual: 0.0,
                dual_residual: 0.0,
                complementarity: 0.0,
                objective: qp.constant,
                dual_objective: qp.constant,
            },
        });
    }

    let mut x = match feasible_start(qp)? {
        Ok(x) => x,
        Err(witness) => return Ok(QpOutcome::Infeasible { witness }),
    };
    let facets = qp.facets();
    let fscale: Vec<f64> = facets
        .iter()
        .map(|f| 1.0 + f.rhs.abs() + f.normal.iter().fold(0.0f64, |a, v| a.max(v.abs())))
        .collect();
    let mut working: Vec<usize> = facets
        .iter()
        .enumerate()
        .filter(|(k, f)| {
            f.is_eq || (dot(&f.normal, &x) - f.rhs).abs() <= 1e-8 * fscale[*k]
        })
        .map(|(k, _)| k)
        .collect();

    let cap = 100 + 20 * (n + facets.len());
    let mut degenerate_drops = 0usize;
    for _ in 0..cap {
        let aw: Vec<Vec<f64>> = working.iter().map(|&k| facets[k].normal.clone()).collect();
        match eqp_step(qp, &sym, &x, &aw)? {
            EqpStep::Ray(ray) => {
                let (t, hit) = blocking_step(&facets, &working, &x, &ray, f64::INFINITY);
                match hit {
                    Some(k) => {
                        for i in 0..n {
                            x[i] += t * ray[i];
                        }
                        let pos = working.binary_search(&k).unwrap_err();
                        working.insert(pos, k);
                    }
                    None => {
                        if !verify_qp_ray(qp, &sym, &x, &ray) {
                            return Err(Error::SolverFailure(
                                "descent ray failed verification".into(),
                            ));
                        }
                        return Ok(QpOutcome::Unbounded { x, ray });
                    }
                }
            }
            EqpStep::Newton(p) => {
                let xscale = 1.0 + x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                let plen = p.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                if plen <= STEP_TOL * xscale {
                    let grad = qp.gradient_at(&x);
                    let gscale = 1.0 + grad.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    let Some(lam) = working_multipliers(&facets, &working, &grad) else {
                        return Err(Error::SolverFailure(
                            "stationary point has no consistent multipliers".into(),
                        ));
                    };
                    let bland = degenerate_drops > 3 * working.len().max(4);
                    let mut drop: Option<(usize, f64)> = None;
                    for (pos, &k) in working.iter().enumerate() {
                        if facets[k].is_eq {
                            continue;
                        }
                        let v = lam[pos];
                        if v > 1e-8 * gscale {
                            if bland {
                                drop = Some((pos, v));
                                break;
                            }
                            match drop {
                                Some((_, best)) if v <= best => {}
                                _ => drop = Some((pos, v)),
                            }
                        }
                    }
                    match drop {
                        None => {
                            tighten_on_working_set(qp, &facets, &working, &mut x);
                            let mut lam_by_facet = vec![0.0; facets.len()];
                            for (pos, &k) in working.iter().enumerate() {
                                lam_by_facet[k] = lam[pos];
                            }
                            let (certificate, duals) =
                                build_qp_certificate(qp, &x, &facets, &lam_by_facet);
                            let objective = certificate.objective;
                            return Ok(QpOutcome::Optimal {
                                x,
                                duals,
                                objective,
                                certificate,
                            });
                        }
                        Some((pos, _)) => {
                            working.remove(pos);
                            degenerate_drops += 1;
                        }
                    }
                } else {
                    let (t, hit) = blocking_step(&facets, &working, &x, &p, 1.0);
                    for i in 0..n {
                        x[i] += t * p[i];
                    }
                    if let Some(k) = hit {
                        let pos = working.binary_search(&k).unwrap_err();
                        working.insert(pos, k);
                    }
                    if t > STEP_TOL {
                        degenerate_drops = 0;
                    }
                }
            }
        }
    }
    Err(Error::SolverFailure(format!(
        "active-set loop hit its iteration cap of {cap}"
    )))
}
