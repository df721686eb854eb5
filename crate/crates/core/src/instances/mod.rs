//! Bundled benchmark games, deterministic random-instance generators,
//! exact expected values with provenance, and a brute-force reference
//! solver for small finite games.
//!
//! The three bundled instances exercise every solver path:
//!
//! * [`cournot`] - two producers with integer capacities; the
//!   constraint-generation loop finds the equilibrium in one iteration.
//! * [`uc`] - a single-period unit commitment market with binary
//!   commitment decisions and an inverse-demand price row; no
//!   equilibrium exists and the minimum disequilibrium is 931.40625.
//! * [`gas`] - a 20-node natural gas network whose transmission player
//!   has nonconvex pressure-flow constraints, solved through the
//!   price-taking primal/dual decomposition.
//!
//! Every number the test suite compares against lives in an
//! [`ExpectedValues`] table whose entries carry an absolute tolerance,
//! a provenance class, and a citation; a table with an unnamed or
//! uncited entry fails validation, so nothing can be asserted without
//! a recorded origin. [`brute_force_md`] independently grinds a small
//! game to its exact minimum disequilibrium by enumerating every
//! lattice point, giving the solver-free reference that the random
//! cross-check tests compare against.

mod cournot;
mod gas;
mod random;
mod uc;

pub use cournot::{cournot, cournot_expected};
pub use gas::{gas, gas_expected, gas_reference, GasReference};
pub use random::{
    generate_random_finite_game, random_convex_price_taking_game, RandomFiniteGameSpec,
};
pub use uc::{uc, uc_expected};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::VarKey;
use crate::ext::ExtReal;
use crate::model::{GameInstance, GamePoint, Sense};

/// Origin class of an expected value. `Reported` marks a number quoted
/// from a published source, `Derived` marks a number recomputed exactly
/// from the instance data (the citation describes the derivation), and
/// `Defined` marks instance data that is simply part of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Reported,
    Derived,
    Defined,
}

/// Payload of one expected value: a scalar, a flat vector, or one
/// vector per player block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedValue {
    Scalar(f64),
    Vector(Vec<f64>),
    Blocks(Vec<Vec<f64>>),
}

impl ExpectedValue {
    fn values(&self) -> Box<dyn Iterator<Item = f64> + '_> {
        match self {
            ExpectedValue::Scalar(v) => Box::new(std::iter::once(*v)),
            ExpectedValue::Vector(v) => Box::new(v.iter().copied()),
            ExpectedValue::Blocks(b) => Box::new(b.iter().flatten().copied()),
        }
    }
}

/// One named expected value with an absolute comparison tolerance and
/// its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedEntry {
    pub name: String,
    pub value: ExpectedValue,
    pub tolerance: f64,
    pub provenance: Provenance,
    pub citation: String,
}

/// Named expected values for one instance. Tests look entries up by
/// name and compare solver output against `value` within `tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedValues {
    pub instance: String,
    pub entries: Vec<ExpectedEntry>,
}

impl ExpectedValues {
    /// Structural invariants: unique nonempty names, a nonempty
    /// citation on every entry, finite values, and finite nonnegative
    /// tolerances.
    pub fn validate(&self) -> Result<()> {
        if self.instance.trim().is_empty() {
            return Err(Error::InvalidModel(
                "expected values need a nonempty instance name".to_string(),
            ));
        }
        if self.entries.is_empty() {
            return Err(Error::InvalidModel(format!(
                "expected values for {} have no entries",
                self.instance
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for e in &self.entries {
            if e.name.trim().is_empty() {
                return Err(Error::InvalidModel(format!(
                    "an expected entry of {} has an empty name",
                    self.instance
                )));
            }
            if !seen.insert(e.name.as_str()) {
                return Err(Error::InvalidModel(format!(
                    "duplicate expected entry {} in {}",
                    e.name, self.instance
                )));
            }
            if e.citation.trim().is_empty() {
                return Err(Error::InvalidModel(format!(
                    "expected entry {} of {} has no citation",
                    e.name, self.instance
                )));
            }
            if !e.tolerance.is_finite() || e.tolerance < 0.0 {
                return Err(Error::InvalidModel(format!(
                    "expected entry {} of {} has tolerance {}",
                    e.name, self.instance, e.tolerance
                )));
            }
            if e.value.values().any(|v| !v.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "expected entry {} of {} has a non-finite value",
                    e.name, self.instance
                )));
            }
        }
        Ok(())
    }

    pub fn entry(&self, name: &str) -> Result<&ExpectedEntry> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| {
                Error::IndexOutOfRange(format!("no expected entry {name} for {}", self.instance))
            })
    }

    pub fn scalar(&self, name: &str) -> Result<f64> {
        match &self.entry(name)?.value {
            ExpectedValue::Scalar(v) => Ok(*v),
            _ => Err(Error::InvalidModel(format!(
                "expected entry {name} of {} is not a scalar",
                self.instance
            ))),
        }
    }

    pub fn vector(&self, name: &str) -> Result<&[f64]> {
        match &self.entry(name)?.value {
            ExpectedValue::Vector(v) => Ok(v),
            _ => Err(Error::InvalidModel(format!(
                "expected entry {name} of {} is not a vector",
                self.instance
            ))),
        }
    }

    pub fn blocks(&self, name: &str) -> Result<&[Vec<f64>]> {
        match &self.entry(name)?.value {
            ExpectedValue::Blocks(b) => Ok(b),
            _ => Err(Error::InvalidModel(format!(
                "expected entry {name} of {} is not per-block",
                self.instance
            ))),
        }
    }

    pub fn tolerance(&self, name: &str) -> Result<f64> {
        Ok(self.entry(name)?.tolerance)
    }
}

/// Exact minimum disequilibrium of a small finite game found by full
/// enumeration, together with every minimizing point.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceOutcome {
    /// The minimum disequilibrium; `PosInf` when the jointly feasible
    /// set is empty.
    pub value: ExtReal,
    /// All jointly feasible points attaining the minimum, in the
    /// enumeration order (shared lattice outermost, then player blocks,
    /// each ascending lexicographically).
    pub minimizers: Vec<GamePoint>,
    pub feasible_points: u64,
}

impl BruteForceOutcome {
    /// The minimizers when the minimum is zero, i.e. the complete set
    /// of equilibria of the game.
    pub fn equilibria(&self) -> &[GamePoint] {
        match self.value {
            ExtReal::Finite(v) if v.abs() <= MINIMIZER_COLLAR => &self.minimizers,
            _ => &[],
        }
    }
}

/// Absolute slack when collecting brute-force minimizers; also the
/// threshold under which the minimum counts as zero.
const MINIMIZER_COLLAR: f64 = 1e-9;

/// How one shared coordinate is enumerated.
enum SharedCoord {
    /// Integral with an inclusive integer range.
    Range(i64, i64),
    /// Continuous but pinned to player `i` coordinate `j` by an
    /// equality copy row, so its value follows the block enumeration.
    Pinned(usize, usize),
}

/// Exact minimum disequilibrium by enumerating every lattice point of
/// the game.
///
/// Every player block must be fully integral with finite bounds. A
/// shared coordinate is either integral (enumerated directly) or
/// continuous and pinned to a single player coordinate by an equality
/// copy row `a x_k - a y_{i,j} = 0`; any other continuous shared
/// coordinate is unsupported. `cap` bounds the number of joint
/// assignments visited. An empty jointly feasible set is reported as
/// `value = PosInf` with no minimizers, not as an error.
pub fn brute_force_md(game: &GameInstance, cap: u64) -> Result<BruteForceOutcome> {
    game.validate()?;
    let tol = &game.tolerances;

    let mut pins: Vec<Option<(usize, usize)>> = vec![None; game.n0];
    for gc in &game.global_constraints {
        if gc.sense != Sense::Eq {
            continue;
        }
        let poly = gc.expr.expand()?;
        if poly.terms.len() != 2 {
            continue;
        }
        let mut shared = None;
        let mut player = None;
        for (m, c) in &poly.terms {
            match m.0.as_slice() {
                [(VarKey::Shared(k), 1)] => shared = Some((*k, *c)),
                [(VarKey::Player(i, j), 1)] => player = Some((*i, *j, *c)),
                _ => {}
            }
        }
        if let (Some((k, a)), Some((i, j, b))) = (shared, player) {
            if a != 0.0 && a == -b {
                pins[k] = Some((i, j));
            }
        }
    }

    let mut coords = Vec::with_capacity(game.n0);
    for k in 0..game.n0 {
        if game.x_set.integral[k] {
            coords.push(SharedCoord::Range(
                game.x_set.lower[k].ceil() as i64,
                game.x_set.upper[k].floor() as i64,
            ));
        } else if let Some((i, j)) = pins[k] {
            coords.push(SharedCoord::Pinned(i, j));
        } else {
            return Err(Error::UnsupportedStructure(format!(
                "shared coordinate {k} is continuous and no equality copy row pins it to a \
                 player coordinate; brute force only enumerates lattices"
            )));
        }
    }

    let mut lattices = Vec::with_capacity(game.players.len());
    for p in &game.players {
        lattices.push(p.feasible_set.integer_points(cap as usize, tol.linear)?);
    }

    let mut total: u128 = 1;
    for c in &coords {
        if let SharedCoord::Range(lo, hi) = c {
            total = total.saturating_mul(if hi < lo { 0 } else { (hi - lo + 1) as u128 });
        }
    }
    for l in &lattices {
        total = total.saturating_mul(l.len() as u128);
    }
    if total > cap as u128 {
        return Err(Error::CapExceeded(format!(
            "{total} joint assignments, cap is {cap}"
        )));
    }

    // Odometer dimensions: the integral shared coordinates first, then
    // one dimension per player block.
    let mut sizes = Vec::new();
    for c in &coords {
        if let SharedCoord::Range(lo, hi) = c {
            sizes.push(if hi < lo { 0 } else { (hi - lo + 1) as usize });
        }
    }
    for l in &lattices {
        sizes.push(l.len());
    }
    let empty = sizes.iter().any(|&s| s == 0);

    let mut response_cache: BTreeMap<Vec<u64>, Vec<ExtReal>> = BTreeMap::new();
    let mut best: Option<f64> = None;
    let mut kept: Vec<(f64, GamePoint)> = Vec::new();
    let mut feasible_points: u64 = 0;

    let mut idx = vec![0usize; sizes.len()];
    let mut done = empty || total == 0;
    while !done {
        let mut x = vec![0.0; game.n0];
        let mut dim = 0;
        for (k, c) in coords.iter().enumerate() {
            if let SharedCoord::Range(lo, _) = c {
                x[k] = (lo + idx[dim] as i64) as f64;
                dim += 1;
            }
        }
        let y: Vec<Vec<f64>> = lattices
            .iter()
            .enumerate()
            .map(|(p, l)| l[idx[dim + p]].clone())
            .collect();
        for (k, c) in coords.iter().enumerate() {
            if let SharedCoord::Pinned(i, j) = c {
                x[k] = y[*i][*j];
            }
        }
        let point = GamePoint::new(x, y);

        if game.check_point_feasible(&point, tol)?.is_feasible() {
            feasible_points += 1;
            let key: Vec<u64> = point.x.iter().map(|v| v.to_bits()).collect();
            if !response_cache.contains_key(&key) {
                let responses = best_responses(game, &point.x, &lattices, tol)?;
                response_cache.insert(key.clone(), responses);
            }
            let responses = &response_cache[&key];
            let delta = game
                .disequilibrium_value(&point, responses)?
                .finite()
                .ok_or_else(|| {
                    Error::SolverFailure(
                        "a feasible point produced a non-finite disequilibrium".to_string(),
                    )
                })?;
            let slack = MINIMIZER_COLLAR * (1.0 + delta.abs());
            match best {
                Some(b) if delta > b + slack => {}
                Some(b) => {
                    if delta < b {
                        best = Some(delta);
                    }
                    kept.push((delta, point));
                }
                None => {
                    best = Some(delta);
                    kept.push((delta, point));
                }
            }
        }

        done = true;
        for d in (0..idx.len()).rev() {
            idx[d] += 1;
            if idx[d] < sizes[d] {
                done = false;
                break;
            }
            idx[d] = 0;
        }
    }

    match best {
        Some(b) => {
            let slack = MINIMIZER_COLLAR * (1.0 + b.abs());
            let minimizers = kept
                .into_iter()
                .filter(|(d, _)| *d <= b + slack)
                .map(|(_, p)| p)
                .collect();
            Ok(BruteForceOutcome {
                value: ExtReal::Finite(b),
                minimizers,
                feasible_points,
            })
        }
        None => Ok(BruteForceOutcome {
            value: ExtReal::PosInf,
            minimizers: Vec::new(),
            feasible_points: 0,
        }),
    }
}

/// Exact best-response value of every player at shared point `x`, by
/// scanning the player's own lattice and filtering with its joint
/// feasible set when one is declared.
fn best_responses(
    game: &GameInstance,
    x: &[f64],
    lattices: &[Vec<Vec<f64>>],
    tol: &crate::model::ToleranceConfig,
) -> Result<Vec<ExtReal>> {
    let mut out = Vec::with_capacity(game.players.len());
    for (i, p) in game.players.iter().enumerate() {
        let mut best = ExtReal::PosInf;
        for z in &lattices[i] {
            if let Some(joint) = &p.joint_feasible {
                let mut xz = x.to_vec();
                xz.extend_from_slice(z);
                if !joint.contains(&xz, tol.linear, tol.nonlinear) {
                    continue;
                }
            }
            let v = p.objective.eval(&|k| x[k], &|_, j| z[j]);
            if ExtReal::Finite(v).cmp_total(best) == std::cmp::Ordering::Less {
                best = ExtReal::Finite(v);
            }
        }
        out.push(best);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::entry_game;
    use crate::model::{GlobalConstraint, MuMeasure};
    use crate::Expression;

    #[test]
    fn bundled_expected_values_are_named_cited_and_finite() {
        for ev in [cournot_expected(), uc_expected(), gas_expected()] {
            ev.validate().unwrap();
            for e in &ev.entries {
                assert!(!e.citation.trim().is_empty(), "{} lacks a citation", e.name);
            }
        }
    }

    #[test]
    fn expected_value_lookups_are_typed() {
        let ev = ExpectedValues {
            instance: "t".to_string(),
            entries: vec![ExpectedEntry {
                name: "v".to_string(),
                value: ExpectedValue::Vector(vec![1.0, 2.0]),
                tolerance: 0.5,
                provenance: Provenance::Derived,
                citation: "unit test".to_string(),
            }],
        };
        ev.validate().unwrap();
        assert_eq!(ev.vector("v").unwrap(), &[1.0, 2.0]);
        assert_eq!(ev.tolerance("v").unwrap(), 0.5);
        assert!(ev.scalar("v").is_err());
        assert!(ev.entry("missing").is_err());
    }

    #[test]
    fn validation_rejects_missing_citations_and_bad_tolerances() {
        let mut ev = ExpectedValues {
            instance: "t".to_string(),
            entries: vec![ExpectedEntry {
                name: "v".to_string(),
                value: ExpectedValue::Scalar(1.0),
                tolerance: 1e-9,
                provenance: Provenance::Defined,
                citation: "  ".to_string(),
            }],
        };
        assert!(ev.validate().is_err());
        ev.entries[0].citation = "ok".to_string();
        ev.validate().unwrap();
        ev.entries[0].tolerance = -1.0;
        assert!(ev.validate().is_err());
        ev.entries[0].tolerance = f64::NAN;
        assert!(ev.validate().is_err());
    }

    #[test]
    fn brute_force_finds_the_entry_equilibrium() {
        let game = entry_game();
        let out = brute_force_md(&game, 1_000_000).unwrap();
        assert_eq!(out.value, ExtReal::Finite(0.0));
        assert_eq!(out.feasible_points, 4);
        assert_eq!(out.minimizers.len(), 1);
        assert_eq!(out.minimizers[0].x, vec![1.0, 1.0]);
        assert_eq!(out.minimizers[0].y, vec![vec![1.0], vec![1.0]]);
        assert_eq!(out.equilibria().len(), 1);
    }

    #[test]
    fn brute_force_handles_weighted_measures() {
        let mut game = entry_game();
        game.mu = MuMeasure::WeightedSum(vec![1.0, 2.0]);
        let out = brute_force_md(&game, 1_000_000).unwrap();
        assert_eq!(out.value, ExtReal::Finite(0.0));
        assert_eq!(out.minimizers.len(), 1);
        assert_eq!(out.minimizers[0].x, vec![1.0, 1.0]);
    }

    #[test]
    fn brute_force_reports_an_empty_joint_set_as_infinite() {
        let mut game = entry_game();
        game.global_constraints.push(GlobalConstraint {
            expr: Expression::add_all(vec![
                Expression::SVar(0),
                Expression::SVar(1),
                Expression::constant(-5.0),
            ]),
            sense: Sense::Eq,
        });
        let out = brute_force_md(&game, 1_000_000).unwrap();
        assert_eq!(out.value, ExtReal::PosInf);
        assert!(out.minimizers.is_empty());
        assert_eq!(out.feasible_points, 0);
        assert!(out.equilibria().is_empty());
    }

    #[test]
    fn brute_force_respects_the_assignment_cap() {
        let game = entry_game();
        assert!(matches!(
            brute_force_md(&game, 3),
            Err(Error::CapExceeded(_))
        ));
    }

    #[test]
    fn brute_force_rejects_unpinned_continuous_shared_coordinates() {
        let mut game = entry_game();
        game.global_constraints.remove(1);
        assert!(matches!(
            brute_force_md(&game, 1_000_000),
            Err(Error::UnsupportedStructure(_))
        ));
    }
}
