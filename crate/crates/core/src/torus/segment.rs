use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::{check_dim, SegmentSet, TorusPoint};
use crate::arith::{format_rational, rat_int, Rational};
use crate::error::{Error, Result};

/// A straight segment in universal-cover coordinates. Its torus image is
/// `t ↦ e((1-t)·start + t·end)`, `t ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TorusSegment {
    start: Vec<Rational>,
    end: Vec<Rational>,
}

impl TorusSegment {
    pub fn new(start: Vec<Rational>, end: Vec<Rational>) -> Result<Self> {
        check_dim(start.len(), end.len())?;
        if start == end {
            return Err(Error::PreconditionViolated(
                "segment has zero length".to_string(),
            ));
        }
        Ok(TorusSegment { start, end })
    }

    pub fn start(&self) -> &[Rational] {
        &self.start
    }

    pub fn end(&self) -> &[Rational] {
        &self.end
    }

    pub fn rank(&self) -> usize {
        self.start.len()
    }

    pub fn displacement(&self) -> Vec<Rational> {
        self.end.iter().zip(&self.start).map(|(e, s)| e - s).collect()
    }

    /// Cover point at parameter `t`.
    pub fn at(&self, t: &Rational) -> Vec<Rational> {
        self.start
            .iter()
            .zip(&self.end)
            .map(|(s, e)| s + (e - s) * t)
            .collect()
    }

    /// Same segment shifted by an integer vector.
    pub fn translated(&self, z: &[BigInt]) -> TorusSegment {
        let shift = |v: &[Rational]| -> Vec<Rational> {
            v.iter().zip(z).map(|(x, k)| x + rat_int(k)).collect()
        };
        TorusSegment {
            start: shift(&self.start),
            end: shift(&self.end),
        }
    }

    pub fn to_csv_row(&self) -> String {
        self.start
            .iter()
            .chain(&self.end)
            .map(format_rational)
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Common points of two segments on the torus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentMeet {
    /// Isolated crossing points not covered by `overlap`.
    pub points: BTreeSet<TorusPoint>,
    /// Collinear overlap, canonicalized.
    pub overlap: SegmentSet,
}

impl SegmentMeet {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.overlap.is_empty()
    }

    /// The meet as a single canonical set.
    pub fn as_set(&self) -> SegmentSet {
        let mut s = self.overlap.clone();
        for p in &self.points {
            s = s.with_point(p.clone());
        }
        s
    }
}

/// Exact torus intersection of two segments.
///
/// Works purely in the cover: every integer translate of `b` whose bounding
/// box can reach `a`'s is intersected with `a` as a segment of `R^r`.
pub fn segment_intersections(a: &TorusSegment, b: &TorusSegment) -> Result<SegmentMeet> {
    check_dim(a.rank(), b.rank())?;
    let r = a.rank();
    let ranges: Vec<(BigInt, BigInt)> = (0..r)
        .map(|i| {
            let (amin, amax) = min_max(&a.start[i], &a.end[i]);
            let (bmin, bmax) = min_max(&b.start[i], &b.end[i]);
            ((amin - bmax).ceil().to_integer(), (amax - bmin).floor().to_integer())
        })
        .collect();

    let mut points = BTreeSet::new();
    let mut overlaps = Vec::new();
    let mut z: Vec<BigInt> = ranges.iter().map(|(lo, _)| lo.clone()).collect();
    if ranges.iter().any(|(lo, hi)| lo > hi) {
        return Ok(SegmentMeet {
            points,
            overlap: SegmentSet::empty(r),
        });
    }
    loop {
        let bz = b.translated(&z);
        match cover_meet(a, &bz) {
            CoverMeet::None => {}
            CoverMeet::Point(p) => {
                points.insert(TorusPoint::from_cover(&p));
            }
            CoverMeet::Segment(s, e) => overlaps.push((s, e)),
        }
        // odometer over the translate box
        let mut i = 0;
        loop {
            if i == r {
                let overlap = SegmentSet::from_cover_pieces(r, overlaps.iter().cloned())?;
                points.retain(|p| !overlap.contains_point(p));
                return Ok(SegmentMeet { points, overlap });
            }
            if z[i] < ranges[i].1 {
                z[i] += 1;
                break;
            }
            z[i] = ranges[i].0.clone();
            i += 1;
        }
    }
}

fn min_max<'a>(x: &'a Rational, y: &'a Rational) -> (&'a Rational, &'a Rational) {
    if x <= y {
        (x, y)
    } else {
        (y, x)
    }
}

enum CoverMeet {
    None,
    Point(Vec<Rational>),
    Segment(Vec<Rational>, Vec<Rational>),
}

fn cross(v: &[Rational], w: &[Rational], p: usize, q: usize) -> Rational {
    &v[p] * &w[q] - &v[q] * &w[p]
}

/// Intersection of two segments of `R^r`.
fn cover_meet(a: &TorusSegment, b: &TorusSegment) -> CoverMeet {
    let r = a.rank();
    let v = a.displacement();
    let w = b.displacement();
    let c: Vec<Rational> = b.start.iter().zip(&a.start).map(|(x, y)| x - y).collect();
    let zero = Rational::zero();
    let one = Rational::one();

    let mut pivot = None;
    'outer: for p in 0..r {
        for q in p + 1..r {
            if !cross(&v, &w, p, q).is_zero() {
                pivot = Some((p, q));
                break 'outer;
            }
        }
    }

    match pivot {
        Some((p, q)) => {
            // a.start + t v = b.start + u w
            let det = -cross(&v, &w, p, q);
            let t = (-&c[p] * &w[q] + &w[p] * &c[q]) / &det;
            let u = (&v[p] * &c[q] - &v[q] * &c[p]) / &det;
            if t < zero || t > one || u < zero || u > one {
                return CoverMeet::None;
            }
            let pa = a.at(&t);
            let pb = b.at(&u);
            if pa == pb {
                CoverMeet::Point(pa)
            } else {
                CoverMeet::None
            }
        }
        None => {
            // parallel: collinear iff c is parallel to v
            if (0..r).any(|p| (p + 1..r).any(|q| !cross(&v, &c, p, q).is_zero())) {
                return CoverMeet::None;
            }
            let k = (0..r).find(|&k| !v[k].is_zero()).expect("non-degenerate");
            let t0 = (&b.start[k] - &a.start[k]) / &v[k];
            let t1 = (&b.end[k] - &a.start[k]) / &v[k];
            let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
            let lo = if lo.is_negative() { zero } else { lo };
            let hi = if hi > one { one } else { hi };
            if lo > hi {
                CoverMeet::None
            } else if lo == hi {
                CoverMeet::Point(a.at(&lo))
            } else {
                CoverMeet::Segment(a.at(&lo), a.at(&hi))
            }
        }
    }
}
