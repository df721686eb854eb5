//! Exhaustive assignment enumeration with optional bound pruning.
//!
//! Walks the Cartesian product of per-slot value lists in
//! lexicographic order, evaluating each assignment and keeping the
//! first one that attains the best value. A caller-supplied lower
//! bound lets large products be pruned without visiting every point;
//! pruning keeps ties resolved toward the lexicographically earliest
//! assignment because an incumbent is only replaced by a strictly
//! better value.

use crate::error::{Error, Result};

/// Summary of an enumeration run.
#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationOutcome<T> {
    /// Lexicographically first assignment attaining the best value,
    /// with its value and the evaluator's payload.
    pub best: Option<(Vec<f64>, f64, T)>,
    /// Assignments whose evaluator ran.
    pub visited: u64,
    /// Assignments skipped by the bound.
    pub pruned: u64,
}

/// Enumerates every assignment in the product of `choices`, minimising
/// the value returned by `evaluate`.
///
/// * `bound(a)` may return a lower bound on the value of assignment
///   `a`; assignments whose bound is at or above the incumbent value
///   are skipped.
/// * `evaluate(a)` returns `Ok(None)` when the assignment is
///   infeasible, and otherwise the value to minimise plus a payload
///   (such as the continuous minimiser behind the assignment).
///
/// Fails with [`Error::CapExceeded`] when the product has more than
/// `cap` assignments.
pub fn enumerate_assignments<T>(
    choices: &[Vec<f64>],
    cap: u64,
    mut bound: impl FnMut(&[f64]) -> Option<f64>,
    mut evaluate: impl FnMut(&[f64]) -> Result<Option<(f64, T)>>,
) -> Result<EnumerationOutcome<T>> {
    let mut total: u128 = 1;
    for c in choices {
        total = total.saturating_mul(c.len() as u128);
    }
    if total > cap as u128 {
        return Err(Error::CapExceeded(format!(
            "enumeration would visit {total} assignments, above the cap of {cap}"
        )));
    }

    let mut outcome = EnumerationOutcome {
        best: None,
        visited: 0,
        pruned: 0,
    };
    if total == 0 {
        return Ok(outcome);
    }

    let k = choices.len();
    let mut idx = vec![0usize; k];
    let mut assignment: Vec<f64> = choices.iter().map(|c| c[0]).collect();
    loop {
        let skip = match (&outcome.best, bound(&assignment)) {
            (Some((_, incumbent, _)), Some(b)) => b >= *incumbent,
            _ => false,
        };
        if skip {
            outcome.pruned += 1;
        } else {
            outcome.visited += 1;
            if let Some((value, payload)) = evaluate(&assignment)? {
                let better = match &outcome.best {
                    None => true,
                    Some((_, incumbent, _)) => value < *incumbent,
                };
                if better {
                    outcome.best = Some((assignment.clone(), value, payload));
                }
            }
        }

        // Advance the odometer, least-significant slot last.
        let mut pos = k;
        loop {
            if pos == 0 {
                return Ok(outcome);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < choices[pos].len() {
                assignment[pos] = choices[pos][idx[pos]];
                break;
            }
            idx[pos] = 0;
            assignment[pos] = choices[pos][0];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn visits_the_whole_product_in_lexicographic_order() {
        let choices = vec![vec![0.0, 1.0], vec![0.0, 1.0, 2.0]];
        let mut seen = Vec::new();
        let out = enumerate_assignments(
            &choices,
            100,
            |_| None,
            |a| {
                seen.push(a.to_vec());
                Ok(Some((0.0, ())))
            },
        )
        .unwrap();
        assert_eq!(out.visited, 6);
        assert_eq!(seen[0], vec![0.0, 0.0]);
        assert_eq!(seen[1], vec![0.0, 1.0]);
        assert_eq!(seen[5], vec![1.0, 2.0]);
        // Ties resolve to the first assignment.
        assert_eq!(out.best.unwrap().0, vec![0.0, 0.0]);
    }

    #[test]
    fn respects_the_cap() {
        let choices = vec![vec![0.0; 100], vec![0.0; 100], vec![0.0; 101]];
        let err = enumerate_assignments::<()>(&choices, 1_000_000, |_| None, |_| {
            Ok(Some((0.0, ())))
        })
        .unwrap_err();
        assert!(matches!(err, Error::CapExceeded(_)));
    }

    #[test]
    fn pruning_skips_dominated_assignments_without_changing_the_answer() {
        let choices = vec![vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 1.0, 2.0, 3.0]];
        let objective = |a: &[f64]| (a[0] - 2.0).powi(2) + (a[1] - 1.0).powi(2);
        let plain = enumerate_assignments(&choices, 100, |_| None, |a| {
            Ok(Some((objective(a), ())))
        })
        .unwrap();
        let pruned = enumerate_assignments(
            &choices,
            100,
            |a| Some((a[0] - 2.0).powi(2)),
            |a| Ok(Some((objective(a), ()))),
        )
        .unwrap();
        let (pa, pv, _) = plain.best.unwrap();
        let (qa, qv, _) = pruned.best.unwrap();
        assert_eq!(pa, qa);
        assert_eq!(pv, qv);
        assert!(pruned.pruned > 0);
        assert_eq!(pruned.visited + pruned.pruned, 16);
    }

    #[test]
    fn infeasible_assignments_are_skipped() {
        let choices = vec![vec![0.0, 1.0]];
        let out = enumerate_assignments(
            &choices,
            10,
            |_| None,
            |a| {
                if a[0] < 0.5 {
                    Ok(None)
                } else {
                    Ok(Some((a[0], ())))
                }
            },
        )
        .unwrap();
        let (best, value, _) = out.best.unwrap();
        assert_eq!(best, vec![1.0]);
        assert_eq!(value, 1.0);
    }

    #[test]
    fn empty_slot_lists_yield_no_best() {
        let choices = vec![vec![0.0, 1.0], Vec::new()];
        let out =
            enumerate_assignments::<()>(&choices, 10, |_| None, |_| Ok(Some((0.0, ())))).unwrap();
        assert!(out.best.is_none());
        assert_eq!(out.visited, 0);
    }

    #[test]
    fn zero_slots_evaluate_the_empty_assignment_once() {
        let out =
            enumerate_assignments::<()>(&[], 10, |_| None, |_| Ok(Some((7.0, ())))).unwrap();
        assert_eq!(out.visited, 1);
        assert_eq!(out.best.unwrap().1, 7.0);
    }
}
