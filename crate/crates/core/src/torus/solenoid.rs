use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::{apply_f, TorusPoint};
use crate::arith::{Moduli, Rational};
use crate::error::{Error, Result};

/// Depth-`K` truncation `(z_1, ..., z_K)` of a point of the inverse limit,
/// with `f(z_{k+1}) = z_k`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SolenoidPoint {
    levels: Vec<TorusPoint>,
}

impl SolenoidPoint {
    /// Checks coherence of every consecutive pair.
    pub fn new(levels: Vec<TorusPoint>, moduli: &Moduli) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Empty("solenoid levels"));
        }
        for k in 0..levels.len() - 1 {
            if apply_f(&levels[k + 1], moduli)? != levels[k] {
                return Err(Error::Incoherent(k + 1, k + 2));
            }
        }
        Ok(SolenoidPoint { levels })
    }

    /// The point whose deepest coordinate is `top` (at level `depth`).
    pub fn from_top(top: TorusPoint, depth: usize, moduli: &Moduli) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Empty("solenoid levels"));
        }
        let mut levels = vec![top];
        for _ in 1..depth {
            let next = apply_f(levels.last().expect("non-empty"), moduli)?;
            levels.push(next);
        }
        levels.reverse();
        Ok(SolenoidPoint { levels })
    }

    /// The constant point `(1⁻, 1⁻, ...)`.
    pub fn base(rank: usize, depth: usize) -> Self {
        SolenoidPoint {
            levels: vec![TorusPoint::base(rank); depth.max(1)],
        }
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Level `n`, 1-based.
    pub fn level(&self, n: usize) -> &TorusPoint {
        &self.levels[n - 1]
    }

    pub fn levels(&self) -> &[TorusPoint] {
        &self.levels
    }
}

/// Truncated distance and the bound on everything past the last level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolenoidDistance {
    pub truncated: Rational,
    pub tail_bound: Rational,
}

impl SolenoidDistance {
    /// Upper bound on the distance between any full points extending the truncations.
    pub fn upper(&self) -> Rational {
        &self.truncated + &self.tail_bound
    }
}

/// `2^{-K} · 1/2`, the most the unseen levels can add.
pub fn tail_bound(depth: usize) -> Rational {
    Rational::new(BigInt::one(), BigInt::from(2) * num_traits::pow(BigInt::from(2), depth))
}

/// `Σ_{n=1..K} 2^{-n} d_T(x_n, y_n)`.
pub fn solenoid_distance(x: &SolenoidPoint, y: &SolenoidPoint) -> Result<SolenoidDistance> {
    if x.depth() != y.depth() {
        return Err(Error::DepthMismatch(x.depth(), y.depth()));
    }
    let mut total = Rational::zero();
    let mut weight = Rational::new(BigInt::one(), BigInt::from(2));
    for (a, b) in x.levels.iter().zip(&y.levels) {
        total += &weight * a.distance(b)?;
        weight /= Rational::from_integer(BigInt::from(2));
    }
    Ok(SolenoidDistance {
        truncated: total,
        tail_bound: tail_bound(x.depth()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;
    use crate::torus::f_preimages;
    use proptest::prelude::*;

    #[test]
    fn distance_examples() {
        let m = Moduli::new(vec![2]).unwrap();
        let x = SolenoidPoint::new(vec![TorusPoint::base(1)], &m).unwrap();
        let y = SolenoidPoint::new(vec![TorusPoint::from_rationals(vec![rat(1, 2)])], &m).unwrap();
        assert_eq!(solenoid_distance(&x, &x).unwrap().truncated, rat(0, 1));
        let d = solenoid_distance(&x, &y).unwrap();
        assert_eq!(d.truncated, rat(1, 4));
        assert_eq!(d.tail_bound, rat(1, 4));
        let z = SolenoidPoint::base(1, 2);
        assert!(matches!(solenoid_distance(&x, &z), Err(Error::DepthMismatch(1, 2))));
    }

    #[test]
    fn coherence_is_checked() {
        let m = Moduli::new(vec![2, 3]).unwrap();
        let bad = vec![
            TorusPoint::base(2),
            TorusPoint::from_rationals(vec![rat(1, 4), rat(0, 1)]),
        ];
        assert!(matches!(SolenoidPoint::new(bad, &m), Err(Error::Incoherent(1, 2))));
        let top = TorusPoint::from_rationals(vec![rat(1, 8), rat(1, 27)]);
        let p = SolenoidPoint::from_top(top, 4, &m).unwrap();
        assert_eq!(p.level(1), &TorusPoint::base(2));
        assert!(SolenoidPoint::new(p.levels().to_vec(), &m).is_ok());
    }

    fn coherent(choices: Vec<usize>, m: &Moduli) -> SolenoidPoint {
        let mut levels = vec![TorusPoint::from_rationals(vec![rat(1, 5), rat(2, 7)])];
        for c in choices {
            let pre = f_preimages(levels.last().unwrap(), m).unwrap();
            levels.push(pre[c % pre.len()].clone());
        }
        SolenoidPoint::new(levels, m).unwrap()
    }

    proptest! {
        #[test]
        fn triangle_inequality(a in prop::collection::vec(0usize..6, 3),
                               b in prop::collection::vec(0usize..6, 3),
                               c in prop::collection::vec(0usize..6, 3)) {
            let m = Moduli::new(vec![2, 3]).unwrap();
            let (x, y, z) = (coherent(a, &m), coherent(b, &m), coherent(c, &m));
            let xy = solenoid_distance(&x, &y).unwrap().truncated;
            let yz = solenoid_distance(&y, &z).unwrap().truncated;
            let xz = solenoid_distance(&x, &z).unwrap().truncated;
            prop_assert!(xz <= xy.clone() + yz);
            prop_assert_eq!(xy, solenoid_distance(&y, &x).unwrap().truncated);
        }

        #[test]
        fn close_low_levels_give_small_distance(n0 in 1usize..6, extra in 0usize..4, eps_den in 1i64..64) {
            // 2^{-N0} < eps/2 and d_T < eps/2 on levels <= N0 imply distance < eps
            let eps = rat(4, eps_den.max(1) + 3);
            prop_assume!(rat(1, 1 << n0) < &eps / rat(2, 1));
            let depth = n0 + extra;
            let mut total = rat(0, 1);
            for n in 1..=depth {
                let d = if n <= n0 { &eps / rat(2, 1) - rat(1, 1000) } else { rat(1, 2) };
                total += rat(1, 1 << n) * d;
            }
            prop_assert!(total + tail_bound(depth) < eps);
        }
    }
}
