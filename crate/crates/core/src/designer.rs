//! Combining loops into one whose winding has no zero coordinate.
//!
//! Stage `k` concatenates `l` copies of a loop `ζ` (non-zero on coordinate
//! `k`) in front of the current loop, with `l` large enough that no
//! previously non-zero coordinate can cancel.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lifting::{PLLoop, WindingVector};
use crate::torus::check_dim;

/// One stage: `after = l·injected + before`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CombineStep {
    /// New coordinate made non-zero at this stage (0-based).
    pub coordinate: usize,
    pub l: u64,
    pub before: WindingVector,
    pub injected: WindingVector,
    pub after: WindingVector,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Design {
    /// Multiplicity of each input loop in the final concatenation.
    pub coefficients: Vec<u64>,
    pub steps: Vec<CombineStep>,
    pub final_winding: WindingVector,
    pub concatenation: PLLoop,
}

fn tracked_max(before: &WindingVector, coordinate: usize) -> u64 {
    before.entries()[..=coordinate]
        .iter()
        .map(|x| x.unsigned_abs())
        .max()
        .unwrap_or(0)
}

/// `l = max{|before_0|, ..., |before_k|} + 1`.
pub fn choose_l(before: &WindingVector, coordinate: usize, injected_target: i64) -> Result<u64> {
    if coordinate >= before.rank() {
        return Err(Error::DimensionMismatch {
            expected: before.rank(),
            got: coordinate + 1,
        });
    }
    if injected_target == 0 {
        return Err(Error::ZeroInjection);
    }
    Ok(tracked_max(before, coordinate) + 1)
}

/// `l·injected + before`, checked to be non-zero on coordinates `0..=k`.
pub fn combine(before: &WindingVector, injected: &WindingVector, coordinate: usize, l: u64) -> Result<WindingVector> {
    check_dim(before.rank(), injected.rank())?;
    if coordinate >= before.rank() {
        return Err(Error::DimensionMismatch {
            expected: before.rank(),
            got: coordinate + 1,
        });
    }
    if injected.get(coordinate) == 0 {
        return Err(Error::PreconditionViolated(format!(
            "injected winding is zero on coordinate {coordinate}"
        )));
    }
    if let Some(i) = (0..coordinate).find(|&i| before.get(i) == 0) {
        return Err(Error::PreconditionViolated(format!(
            "current winding is zero on coordinate {i}"
        )));
    }
    if l <= tracked_max(before, coordinate) {
        return Err(Error::PreconditionViolated(format!(
            "l = {l} does not exceed the tracked windings"
        )));
    }
    let l = i64::try_from(l).map_err(|_| Error::PreconditionViolated("l too large".into()))?;
    let after: Vec<i64> = before
        .entries()
        .iter()
        .zip(injected.entries())
        .map(|(&s, &t)| {
            l.checked_mul(t)
                .and_then(|x| x.checked_add(s))
                .ok_or_else(|| Error::PreconditionViolated("winding overflow".into()))
        })
        .collect::<Result<_>>()?;
    let after = WindingVector::new(after);
    debug_assert!(after.entries()[..=coordinate].iter().all(|&x| x != 0));
    Ok(after)
}

/// Runs every stage over a family where loop `i` is non-zero on coordinate `i`.
pub fn design_all_nonzero(loops: &[WindingVector]) -> Result<Design> {
    let r = loops.len();
    if r == 0 {
        return Err(Error::Empty("loop family"));
    }
    for (i, l) in loops.iter().enumerate() {
        check_dim(r, l.rank())?;
        if l.get(i) == 0 {
            return Err(Error::BadInputFamily(i));
        }
    }
    let mut current = loops[0].clone();
    let mut concatenation = PLLoop::straight(&loops[0]);
    let mut coefficients = vec![1];
    let mut steps = Vec::new();
    for k in 1..r {
        let l = choose_l(&current, k, loops[k].get(k))?;
        let after = combine(&current, &loops[k], k, l)?;
        let copies = PLLoop::straight(&loops[k]).repeat(l as usize);
        concatenation = copies.concat(&concatenation)?;
        steps.push(CombineStep {
            coordinate: k,
            l,
            before: current,
            injected: loops[k].clone(),
            after: after.clone(),
        });
        coefficients.push(l);
        current = after;
    }
    Ok(Design {
        coefficients,
        steps,
        final_winding: current,
        concatenation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(v: &[i64]) -> WindingVector {
        WindingVector::new(v.to_vec())
    }

    #[test]
    fn choose_l_examples() {
        assert_eq!(choose_l(&w(&[3, 0]), 1, 1).unwrap(), 4);
        assert_eq!(choose_l(&w(&[0, 0, 0]), 1, 2).unwrap(), 1);
        assert_eq!(choose_l(&w(&[-5, 2, 0]), 2, -1).unwrap(), 6);
        assert_eq!(choose_l(&w(&[1, 0]), 1, 0), Err(Error::ZeroInjection));
    }

    #[test]
    fn combine_examples() {
        assert_eq!(combine(&w(&[3, 0]), &w(&[-2, 1]), 1, 4).unwrap(), w(&[-5, 4]));
        assert_eq!(combine(&w(&[1, 0]), &w(&[0, 1]), 1, 2).unwrap(), w(&[1, 2]));
        assert_eq!(combine(&w(&[-1, 0]), &w(&[1, 5]), 1, 2).unwrap(), w(&[1, 10]));
        assert!(matches!(combine(&w(&[3, 0]), &w(&[-2, 1]), 1, 3), Err(Error::PreconditionViolated(_))));
        assert!(matches!(combine(&w(&[0, 0]), &w(&[1, 1]), 1, 1), Err(Error::PreconditionViolated(_))));
        assert!(matches!(combine(&w(&[1, 0]), &w(&[1, 0]), 1, 2), Err(Error::PreconditionViolated(_))));
    }

    #[test]
    fn design_examples() {
        let d = design_all_nonzero(&[w(&[7])]).unwrap();
        assert_eq!(d.final_winding, w(&[7]));
        assert!(d.steps.is_empty());

        let d = design_all_nonzero(&[w(&[3, 0]), w(&[-2, 1])]).unwrap();
        assert_eq!(d.final_winding, w(&[-5, 4]));
        assert_eq!(d.coefficients, vec![1, 4]);
        assert_eq!(d.concatenation.winding(), w(&[-5, 4]));

        assert_eq!(design_all_nonzero(&[w(&[0, 1]), w(&[1, 1])]).unwrap_err(), Error::BadInputFamily(0));
    }

    fn family() -> impl Strategy<Value = Vec<Vec<i64>>> {
        (1usize..=4).prop_flat_map(|r| {
            prop::collection::vec(prop::collection::vec(-9i64..=9, r), r).prop_map(|mut rows| {
                for (i, row) in rows.iter_mut().enumerate() {
                    if row[i] == 0 {
                        row[i] = 1;
                    }
                }
                rows
            })
        })
    }

    proptest! {
        #[test]
        fn final_winding_has_no_zero(rows in family()) {
            let loops: Vec<WindingVector> = rows.iter().map(|r| w(r)).collect();
            let d = design_all_nonzero(&loops).unwrap();
            prop_assert!(d.final_winding.is_admissible());
            prop_assert_eq!(d.concatenation.winding(), d.final_winding.clone());
            // final winding is the coefficient combination of the inputs
            let r = rows.len();
            for i in 0..r {
                let sum: i64 = (0..r).map(|k| d.coefficients[k] as i64 * rows[k][i]).sum();
                prop_assert_eq!(sum, d.final_winding.get(i));
            }
        }
    }
}
