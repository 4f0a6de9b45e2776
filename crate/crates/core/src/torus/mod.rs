//! Exact model of the circle, the r-torus and the covering map
//! `f(z_1, ..., z_r) = (z_1^{m_1}, ..., z_r^{m_r})`.
//!
//! A circle point is stored as its angle `t` in `[0, 1)`, standing for
//! `(cos 2πt, sin 2πt)`. In angle coordinates `f` is `t_i ↦ m_i t_i mod 1`.

mod segment;
mod set;
mod solenoid;
mod unionfind;

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::arith::{format_rational, frac, rat_int, Moduli, Rational};
use crate::error::{Error, Result};

pub use segment::{segment_intersections, SegmentMeet, TorusSegment};
pub use set::{Geodesic, SegmentSet};
pub use solenoid::{solenoid_distance, tail_bound, SolenoidDistance, SolenoidPoint};
pub use unionfind::UnionFind;

/// A point of the circle, `e(value)` with `0 <= value < 1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Angle(Rational);

impl Angle {
    /// Reduces any rational modulo 1.
    pub fn new(value: Rational) -> Self {
        Angle(frac(&value))
    }

    pub fn zero() -> Self {
        Angle(Rational::zero())
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    /// Normalized arc distance, `min(|a-b|, 1-|a-b|)`, in `[0, 1/2]`.
    pub fn arc_distance(&self, other: &Angle) -> Rational {
        let d = if self.0 >= other.0 {
            &self.0 - &other.0
        } else {
            &other.0 - &self.0
        };
        let back = Rational::one() - &d;
        if back < d {
            back
        } else {
            d
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

/// A point of `(S^1)^r`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TorusPoint(Vec<Angle>);

impl TorusPoint {
    pub fn new(coords: Vec<Angle>) -> Self {
        TorusPoint(coords)
    }

    /// Projects a universal-cover point.
    pub fn from_cover(cover: &[Rational]) -> Self {
        TorusPoint(cover.iter().cloned().map(Angle::new).collect())
    }

    pub fn from_rationals(values: Vec<Rational>) -> Self {
        TorusPoint(values.into_iter().map(Angle::new).collect())
    }

    /// The base point `1⁻`, all angles zero.
    pub fn base(r: usize) -> Self {
        TorusPoint(vec![Angle::zero(); r])
    }

    pub fn is_base(&self) -> bool {
        self.0.iter().all(|a| a.0.is_zero())
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[Angle] {
        &self.0
    }

    /// The `i`-th coordinate projection.
    pub fn coord(&self, i: usize) -> &Angle {
        &self.0[i]
    }

    /// Cover representative in `[0,1)^r`.
    pub fn to_cover(&self) -> Vec<Rational> {
        self.0.iter().map(|a| a.0.clone()).collect()
    }

    /// Torus distance: maximum over coordinates of the arc distance.
    pub fn distance(&self, other: &TorusPoint) -> Result<Rational> {
        check_dim(self.rank(), other.rank())?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.arc_distance(b))
            .max()
            .unwrap_or_else(Rational::zero))
    }
}

impl fmt::Display for TorusPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// `f(p)`: coordinate `i` becomes `m_i * angle_i mod 1`.
pub fn apply_f(p: &TorusPoint, moduli: &Moduli) -> Result<TorusPoint> {
    check_dim(moduli.rank(), p.rank())?;
    Ok(TorusPoint(
        p.0.iter()
            .zip(moduli.values())
            .map(|(a, &m)| Angle::new(&a.0 * rat_int(&BigInt::from(m))))
            .collect(),
    ))
}

/// `f^k(p)`.
pub fn apply_f_iter(p: &TorusPoint, moduli: &Moduli, k: u32) -> Result<TorusPoint> {
    let mut q = p.clone();
    for _ in 0..k {
        q = apply_f(&q, moduli)?;
    }
    Ok(q)
}

/// All `prod m_i` points `q` with `f(q) = p`, sorted.
pub fn f_preimages(p: &TorusPoint, moduli: &Moduli) -> Result<Vec<TorusPoint>> {
    check_dim(moduli.rank(), p.rank())?;
    let per_coord: Vec<Vec<Angle>> = p
        .0
        .iter()
        .zip(moduli.values())
        .map(|(a, &m)| {
            let mr = rat_int(&BigInt::from(m));
            (0..m)
                .map(|j| Angle::new((&a.0 + rat_int(&BigInt::from(j))) / &mr))
                .collect()
        })
        .collect();
    let mut out: Vec<TorusPoint> = cartesian(&per_coord)
        .into_iter()
        .map(TorusPoint)
        .collect();
    out.sort();
    Ok(out)
}

/// Every index vector `j` with `0 <= j_i < bounds[i]`, in lexicographic order.
pub fn index_vectors(bounds: &[u64]) -> Vec<Vec<u64>> {
    let ranges: Vec<Vec<u64>> = bounds.iter().map(|&b| (0..b).collect()).collect();
    cartesian(&ranges)
}

fn cartesian<T: Clone>(lists: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut acc: Vec<Vec<T>> = vec![Vec::new()];
    for list in lists {
        let mut next = Vec::with_capacity(acc.len() * list.len());
        for prefix in &acc {
            for item in list {
                let mut v = prefix.clone();
                v.push(item.clone());
                next.push(v);
            }
        }
        acc = next;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;
    use proptest::prelude::*;

    fn pt(v: &[(i64, i64)]) -> TorusPoint {
        TorusPoint::from_rationals(v.iter().map(|&(p, q)| rat(p, q)).collect())
    }

    fn m23() -> Moduli {
        Moduli::new(vec![2, 3]).unwrap()
    }

    #[test]
    fn apply_f_examples() {
        let m = m23();
        assert_eq!(apply_f(&pt(&[(1, 2), (1, 3)]), &m).unwrap(), pt(&[(0, 1), (0, 1)]));
        assert_eq!(apply_f(&pt(&[(1, 4), (1, 9)]), &m).unwrap(), pt(&[(1, 2), (1, 3)]));
        assert_eq!(apply_f(&TorusPoint::base(2), &m).unwrap(), TorusPoint::base(2));
        assert!(matches!(
            apply_f(&TorusPoint::base(3), &m),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn preimages_of_base() {
        let pre = f_preimages(&TorusPoint::base(2), &m23()).unwrap();
        let mut expected = Vec::new();
        for j1 in 0..2 {
            for j2 in 0..3 {
                expected.push(pt(&[(j1, 2), (j2, 3)]));
            }
        }
        expected.sort();
        assert_eq!(pre, expected);

        let m2 = Moduli::new(vec![2]).unwrap();
        assert_eq!(
            f_preimages(&TorusPoint::base(1), &m2).unwrap(),
            vec![pt(&[(0, 1)]), pt(&[(1, 2)])]
        );
    }

    #[test]
    fn preimages_of_half() {
        let p = pt(&[(1, 2), (0, 1)]);
        let pre = f_preimages(&p, &m23()).unwrap();
        assert_eq!(pre.len(), 6);
        for q in &pre {
            assert!(q.coord(0).value() == &rat(1, 4) || q.coord(0).value() == &rat(3, 4));
            assert_eq!(apply_f(q, &m23()).unwrap(), p);
        }
        let seconds: std::collections::BTreeSet<_> = pre.iter().map(|q| q.coord(1).clone()).collect();
        assert_eq!(seconds.len(), 3);
    }

    #[test]
    fn arc_distance_basics() {
        assert_eq!(Angle::new(rat(0, 1)).arc_distance(&Angle::new(rat(1, 2))), rat(1, 2));
        assert_eq!(Angle::new(rat(1, 10)).arc_distance(&Angle::new(rat(9, 10))), rat(1, 5));
    }

    fn angle() -> impl Strategy<Value = Angle> {
        (0i64..200, 1i64..50).prop_map(|(p, q)| Angle::new(rat(p, q)))
    }

    proptest! {
        #[test]
        fn preimages_round_trip(a in angle(), b in angle()) {
            let p = TorusPoint::new(vec![a, b]);
            let pre = f_preimages(&p, &m23()).unwrap();
            prop_assert_eq!(pre.len(), 6);
            for q in pre {
                prop_assert_eq!(apply_f(&q, &m23()).unwrap(), p.clone());
            }
        }

        #[test]
        fn arc_metric_axioms(a in angle(), b in angle(), c in angle()) {
            let ab = a.arc_distance(&b);
            prop_assert_eq!(ab.clone(), b.arc_distance(&a));
            prop_assert!(ab <= rat(1, 2));
            prop_assert_eq!(a.arc_distance(&a), rat(0, 1));
            prop_assert!(a.arc_distance(&c) <= ab + b.arc_distance(&c));
        }

        #[test]
        fn f_expands_by_at_most_m(a in angle(), b in angle(), k in 0u32..4) {
            let m = m23();
            let p = TorusPoint::new(vec![a.clone(), b.clone()]);
            let q = TorusPoint::new(vec![b, a]);
            let d = p.distance(&q).unwrap();
            let fd = apply_f_iter(&p, &m, k).unwrap().distance(&apply_f_iter(&q, &m, k).unwrap()).unwrap();
            prop_assert!(fd <= d * rat(3i64.pow(k), 1));
        }
    }
}
