//! Objective and constraint expressions.
//!
//! Expressions are closed under `{constant, shared variable, player
//! variable, add, mul, square}`. That is deliberately small: it is
//! enough to state every bundled game (linear terms, bilinear
//! price-times-quantity terms, quadratic costs, squared flow terms)
//! while keeping exact polynomial expansion cheap, and expansion is
//! what the structure checks (affine in the shared variables, quadratic
//! separable, ...) are built on. Classification never guesses from the
//! tree shape; it expands to a canonical monomial map and reads degrees
//! off that.

use crate::error::{Error, Result};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::{BTreeMap, BTreeSet};

/// Hard cap on the number of monomials an expansion may produce.
const EXPANSION_TERM_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Const(f64),
    /// Shared variable `x_k`.
    SVar(usize),
    /// Player variable `y_{i,j}` (player index, coordinate).
    PVar(usize, usize),
    Add(Vec<Expression>),
    Mul(Vec<Expression>),
    Square(Box<Expression>),
}

impl Expression {
    pub fn constant(v: f64) -> Self {
        Expression::Const(v)
    }

    /// `coeff * var`, dropping the multiplication when `coeff == 1`.
    pub fn scaled(coeff: f64, var: Expression) -> Self {
        if coeff == 1.0 {
            var
        } else {
            Expression::Mul(vec![Expression::Const(coeff), var])
        }
    }

    pub fn add_all(terms: Vec<Expression>) -> Self {
        match terms.len() {
            0 => Expression::Const(0.0),
            1 => terms.into_iter().next().unwrap(),
            _ => Expression::Add(terms),
        }
    }

    /// Evaluate with shared-variable and player-variable lookups.
    ///
    /// Index validity is a precondition (checked when an instance is
    /// built), so lookups are plain closures without error plumbing.
    pub fn eval<S, P>(&self, sv: &S, pv: &P) -> f64
    where
        S: Fn(usize) -> f64,
        P: Fn(usize, usize) -> f64,
    {
        match self {
            Expression::Const(c) => *c,
            Expression::SVar(k) => sv(*k),
            Expression::PVar(i, j) => pv(*i, *j),
            Expression::Add(ts) => ts.iter().map(|t| t.eval(sv, pv)).sum(),
            Expression::Mul(ts) => ts.iter().map(|t| t.eval(sv, pv)).product(),
            Expression::Square(t) => {
                let v = t.eval(sv, pv);
                v * v
            }
        }
    }

    /// Check every referenced index against the given dimensions;
    /// `player_dims[i]` is the length of player `i`'s variable block.
    pub fn validate_indices(&self, n_shared: usize, player_dims: &[usize]) -> Result<()> {
        match self {
            Expression::Const(c) => {
                if !c.is_finite() {
                    return Err(Error::InvalidModel(format!(
                        "non-finite constant {c} in expression"
                    )));
                }
                Ok(())
            }
            Expression::SVar(k) => {
                if *k >= n_shared {
                    return Err(Error::IndexOutOfRange(format!(
                        "shared variable {k} (instance has {n_shared})"
                    )));
                }
                Ok(())
            }
            Expression::PVar(i, j) => {
                if *i >= player_dims.len() {
                    return Err(Error::IndexOutOfRange(format!(
                        "player {i} (instance has {})",
                        player_dims.len()
                    )));
                }
                if *j >= player_dims[*i] {
                    return Err(Error::IndexOutOfRange(format!(
                        "variable {j} of player {i} (player has {})",
                        player_dims[*i]
                    )));
                }
                Ok(())
            }
            Expression::Add(ts) | Expression::Mul(ts) => {
                if ts.is_empty() {
                    return Err(Error::InvalidModel(
                        "add/mul node with no children".to_string(),
                    ));
                }
                for t in ts {
                    t.validate_indices(n_shared, player_dims)?;
                }
                Ok(())
            }
            Expression::Square(t) => t.validate_indices(n_shared, player_dims),
        }
    }

    /// All variables referenced by the expression.
    pub fn variables(&self) -> BTreeSet<VarKey> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<VarKey>) {
        match self {
            Expression::Const(_) => {}
            Expression::SVar(k) => {
                out.insert(VarKey::Shared(*k));
            }
            Expression::PVar(i, j) => {
                out.insert(VarKey::Player(*i, *j));
            }
            Expression::Add(ts) | Expression::Mul(ts) => {
                for t in ts {
                    t.collect_vars(out);
                }
            }
            Expression::Square(t) => t.collect_vars(out),
        }
    }

    /// Exact expansion into a canonical monomial map.
    pub fn expand(&self) -> Result<Polynomial> {
        match self {
            Expression::Const(c) => Ok(Polynomial::constant(*c)),
            Expression::SVar(k) => Ok(Polynomial::variable(VarKey::Shared(*k))),
            Expression::PVar(i, j) => Ok(Polynomial::variable(VarKey::Player(*i, *j))),
            Expression::Add(ts) => {
                let mut acc = Polynomial::zero();
                for t in ts {
                    acc.add_assign(&t.expand()?);
                }
                Ok(acc)
            }
            Expression::Mul(ts) => {
                let mut acc = Polynomial::constant(1.0);
                for t in ts {
                    acc = acc.mul(&t.expand()?)?;
                }
                Ok(acc)
            }
            Expression::Square(t) => {
                let p = t.expand()?;
                p.mul(&p)
            }
        }
    }
}

/// Identity of a variable inside a polynomial: shared `x_k` or player
/// coordinate `y_{i,j}`. Ordering puts shared variables first so that
/// canonical monomials read `x... y...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum VarKey {
    Shared(usize),
    Player(usize, usize),
}

impl VarKey {
    pub fn is_shared(self) -> bool {
        matches!(self, VarKey::Shared(_))
    }
}

/// A monomial: sorted `(variable, exponent)` pairs, exponents >= 1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Monomial(pub Vec<(VarKey, u32)>);

impl Monomial {
    fn one() -> Self {
        Monomial(Vec::new())
    }

    fn variable(v: VarKey) -> Self {
        Monomial(vec![(v, 1)])
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut out: Vec<(VarKey, u32)> = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut a, mut b) = (self.0.iter().peekable(), other.0.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(&&(va, ea)), Some(&&(vb, eb))) => {
                    if va < vb {
                        out.push((va, ea));
                        a.next();
                    } else if vb < va {
                        out.push((vb, eb));
                        b.next();
                    } else {
                        out.push((va, ea + eb));
                        a.next();
                        b.next();
                    }
                }
                (Some(_), None) => {
                    out.extend(a.by_ref().copied());
                    break;
                }
                (None, Some(_)) => {
                    out.extend(b.by_ref().copied());
                    break;
                }
                (None, None) => break,
            }
        }
        Monomial(out)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn degree_shared(&self) -> u32 {
        self.0
            .iter()
            .filter(|(v, _)| v.is_shared())
            .map(|(_, e)| e)
            .sum()
    }

    pub fn degree_player(&self) -> u32 {
        self.degree() - self.degree_shared()
    }

    pub fn eval<F>(&self, lookup: &F) -> f64
    where
        F: Fn(VarKey) -> f64,
    {
        self.0
            .iter()
            .map(|(v, e)| lookup(*v).powi(*e as i32))
            .product()
    }
}

/// Canonical sparse polynomial: monomial -> coefficient.
///
/// Coefficients that combine to exactly `0.0` are dropped, so `x - x`
/// expands to the zero polynomial; no epsilon snapping is applied.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    pub terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Polynomial::zero();
        if c != 0.0 {
            p.terms.insert(Monomial::one(), c);
        }
        p
    }

    pub fn variable(v: VarKey) -> Self {
        let mut p = Polynomial::zero();
        p.terms.insert(Monomial::variable(v), 1.0);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_assign(&mut self, other: &Polynomial) {
        for (m, c) in &other.terms {
            let entry = self.terms.entry(m.clone()).or_insert(0.0);
            *entry += c;
            if *entry == 0.0 {
                self.terms.remove(m);
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        if s == 0.0 {
            self.terms.clear();
            return;
        }
        for c in self.terms.values_mut() {
            *c *= s;
        }
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial> {
        let mut out = Polynomial::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m = ma.mul(mb);
                let entry = out.terms.entry(m.clone()).or_insert(0.0);
                *entry += ca * cb;
                if *entry == 0.0 {
                    out.terms.remove(&m);
                }
                if out.terms.len() > EXPANSION_TERM_CAP {
                    return Err(Error::CapExceeded(format!(
                        "polynomial expansion beyond {EXPANSION_TERM_CAP} terms"
                    )));
                }
            }
        }
        Ok(out)
    }

    pub fn constant_term(&self) -> f64 {
        self.terms.get(&Monomial::one()).copied().unwrap_or(0.0)
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn max_degree_shared(&self) -> u32 {
        self.terms
            .keys()
            .map(Monomial::degree_shared)
            .max()
            .unwrap_or(0)
    }

    pub fn max_degree_player(&self) -> u32 {
        self.terms
            .keys()
            .map(Monomial::degree_player)
            .max()
            .unwrap_or(0)
    }

    pub fn eval<F>(&self, lookup: &F) -> f64
    where
        F: Fn(VarKey) -> f64,
    {
        self.terms.iter().map(|(m, c)| c * m.eval(lookup)).sum()
    }

    /// Substitute numeric values for a subset of variables.
    pub fn substitute<F>(&self, value_of: &F) -> Polynomial
    where
        F: Fn(VarKey) -> Option<f64>,
    {
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            let mut coeff = *c;
            let mut rest: Vec<(VarKey, u32)> = Vec::new();
            for (v, e) in &m.0 {
                match value_of(*v) {
                    Some(val) => coeff *= val.powi(*e as i32),
                    None => rest.push((*v, *e)),
                }
            }
            if coeff != 0.0 {
                let m2 = Monomial(rest);
                let entry = out.terms.entry(m2.clone()).or_insert(0.0);
                *entry += coeff;
                if *entry == 0.0 {
                    out.terms.remove(&m2);
                }
            }
        }
        out
    }

    /// Split as `a + sum_k x_k * b_k` where `a` and every `b_k` contain
    /// no shared variables. `None` if any monomial has shared degree
    /// above one.
    pub fn shared_affine_parts(&self) -> Option<(Polynomial, BTreeMap<usize, Polynomial>)> {
        let mut constant = Polynomial::zero();
        let mut coeffs: BTreeMap<usize, Polynomial> = BTreeMap::new();
        for (m, c) in &self.terms {
            if m.degree_shared() == 0 {
                constant.terms.insert(m.clone(), *c);
                continue;
            }
            if m.degree_shared() > 1 {
                return None;
            }
            let (k, rest): (usize, Vec<(VarKey, u32)>) = {
                let mut shared = None;
                let mut rest = Vec::new();
                for (v, e) in &m.0 {
                    match v {
                        VarKey::Shared(k) => shared = Some(*k),
                        VarKey::Player(_, _) => rest.push((*v, *e)),
                    }
                }
                (shared.expect("degree_shared == 1"), rest)
            };
            coeffs
                .entry(k)
                .or_default()
                .terms
                .insert(Monomial(rest), *c);
        }
        Some((constant, coeffs))
    }

    /// Rebuild an expression tree (sum of coefficient-times-variables
    /// products) that evaluates identically to the polynomial.
    pub fn to_expression(&self) -> Expression {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (m, c) in &self.terms {
            if m.0.is_empty() {
                terms.push(Expression::Const(*c));
                continue;
            }
            let mut factors = Vec::new();
            if *c != 1.0 {
                factors.push(Expression::Const(*c));
            }
            for (v, e) in &m.0 {
                let base = match v {
                    VarKey::Shared(k) => Expression::SVar(*k),
                    VarKey::Player(i, j) => Expression::PVar(*i, *j),
                };
                for _ in 0..*e {
                    factors.push(base.clone());
                }
            }
            terms.push(if factors.len() == 1 {
                factors.into_iter().next().unwrap()
            } else {
                Expression::Mul(factors)
            });
        }
        Expression::add_all(terms)
    }

    /// Dense quadratic-form view `constant + g'v + 1/2 v'Qv` over the
    /// variable ordering given by `index_of`. Fails if the polynomial
    /// has degree above two or references an unmapped variable.
    pub fn to_quadratic_form<F>(&self, n: usize, index_of: &F) -> Result<QuadraticForm>
    where
        F: Fn(VarKey) -> Option<usize>,
    {
        let mut qf = QuadraticForm::zeros(n);
        for (m, c) in &self.terms {
            match m.degree() {
                0 => qf.constant += c,
                1 => {
                    let (v, _) = m.0[0];
                    let idx = index_of(v).ok_or_else(|| {
                        Error::IndexOutOfRange(format!("unmapped variable {v:?}"))
                    })?;
                    qf.linear[idx] += c;
                }
                2 => {
                    let (i, j) = match m.0.as_slice() {
                        [(v, 2)] => {
                            let idx = index_of(*v).ok_or_else(|| {
                                Error::IndexOutOfRange(format!("unmapped variable {v:?}"))
                            })?;
                            (idx, idx)
                        }
                        [(va, 1), (vb, 1)] => {
                            let ia = index_of(*va).ok_or_else(|| {
                                Error::IndexOutOfRange(format!("unmapped variable {va:?}"))
                            })?;
                            let ib = index_of(*vb).ok_or_else(|| {
                                Error::IndexOutOfRange(format!("unmapped variable {vb:?}"))
                            })?;
                            (ia.min(ib), ia.max(ib))
                        }
                        _ => unreachable!("degree-2 monomial has one or two variables"),
                    };
                    // v'Qv double-counts off-diagonal pairs, so the
                    // coefficient of v_i v_j (i != j) lands in Q_ij and
                    // Q_ji as c, and v_i^2 contributes 2c to Q_ii.
                    if i == j {
                        qf.q[i][i] += 2.0 * c;
                    } else {
                        qf.q[i][j] += c;
                        qf.q[j][i] += c;
                    }
                }
                d => {
                    return Err(Error::UnsupportedStructure(format!(
                        "degree-{d} monomial in a context requiring degree <= 2"
                    )))
                }
            }
        }
        Ok(qf)
    }
}

/// `constant + linear'v + 1/2 v'q v` with `q` symmetric.
#[derive(Debug, Clone)]
pub struct QuadraticForm {
    pub constant: f64,
    pub linear: Vec<f64>,
    pub q: Vec<Vec<f64>>,
}

impl QuadraticForm {
    pub fn zeros(n: usize) -> Self {
        QuadraticForm {
            constant: 0.0,
            linear: vec![0.0; n],
            q: vec![vec![0.0; n]; n],
        }
    }

    pub fn n(&self) -> usize {
        self.linear.len()
    }

    pub fn is_linear(&self) -> bool {
        self.q
            .iter()
            .all(|row| row.iter().all(|&v| v == 0.0))
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        let mut out = self.constant;
        for (i, &g) in self.linear.iter().enumerate() {
            out += g * v[i];
        }
        for i in 0..self.n() {
            for j in 0..self.n() {
                out += 0.5 * v[i] * self.q[i][j] * v[j];
            }
        }
        out
    }
}

// JSON form: nested arrays ["add", ...], ["mul", ...], ["square", e],
// ["const", c], ["svar", k], ["pvar", i, j].

impl Serialize for Expression {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        expression_to_value(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Expression {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        expression_from_value(&value).map_err(D::Error::custom)
    }
}

fn expression_to_value(e: &Expression) -> serde_json::Value {
    use serde_json::{json, Value};
    match e {
        Expression::Const(c) => json!(["const", c]),
        Expression::SVar(k) => json!(["svar", k]),
        Expression::PVar(i, j) => json!(["pvar", i, j]),
        Expression::Add(ts) => {
            let mut arr = vec![Value::String("add".to_string())];
            arr.extend(ts.iter().map(expression_to_value));
            Value::Array(arr)
        }
        Expression::Mul(ts) => {
            let mut arr = vec![Value::String("mul".to_string())];
            arr.extend(ts.iter().map(expression_to_value));
            Value::Array(arr)
        }
        Expression::Square(t) => json!(["square", expression_to_value(t)]),
    }
}

fn expression_from_value(v: &serde_json::Value) -> std::result::Result<Expression, String> {
    let arr = v
        .as_array()
        .ok_or_else(|| format!("expression must be an array, got {v}"))?;
    let tag = arr
        .first()
        .and_then(|t| t.as_str())
        .ok_or_else(|| format!("expression array must start with a tag string, got {v}"))?;
    let args = &arr[1..];
    match tag {
        "const" => match args {
            [c] => c
                .as_f64()
                .map(Expression::Const)
                .ok_or_else(|| format!("const takes a number, got {c}")),
            _ => Err("const takes exactly one argument".to_string()),
        },
        "svar" => match args {
            [k] => k
                .as_u64()
                .map(|k| Expression::SVar(k as usize))
                .ok_or_else(|| format!("svar takes an index, got {k}")),
            _ => Err("svar takes exactly one argument".to_string()),
        },
        "pvar" => match args {
            [i, j] => match (i.as_u64(), j.as_u64()) {
                (Some(i), Some(j)) => Ok(Expression::PVar(i as usize, j as usize)),
                _ => Err(format!("pvar takes two indices, got {i}, {j}")),
            },
            _ => Err("pvar takes exactly two arguments".to_string()),
        },
        "add" | "mul" => {
            if args.is_empty() {
                return Err(format!("{tag} needs at least one child"));
            }
            let children = args
                .iter()
                .map(expression_from_value)
                .collect::<std::result::Result<Vec<_>, _>>()?;
            Ok(match tag {
                "add" => Expression::Add(children),
                _ => Expression::Mul(children),
            })
        }
        "square" => match args {
            [t] => Ok(Expression::Square(Box::new(expression_from_value(t)?))),
            _ => Err("square takes exactly one argument".to_string()),
        },
        other => Err(format!("unknown expression tag {other:?}")),
    }
}
