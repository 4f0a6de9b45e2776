//! Finite unions of rational geodesic segments on the torus, in canonical form.
//!
//! Every segment with rational endpoints lies on a closed geodesic
//! `x + R·d (mod Z^r)` with `d` a primitive integer vector. A set is stored as
//! a map from geodesic to the maximal closed arcs it covers, where arcs are
//! intervals of the geodesic's period parameter `τ ∈ [0, 1]`, plus isolated
//! points not lying on any arc. Two sets are equal as point sets iff their
//! canonical forms are equal.
//!
//! To name geodesics canonically each direction `d` gets a unimodular frame
//! `U` with `U d = e_1`; the line class is then the fractional part of
//! `(U x)_2, ..., (U x)_r` and `τ` is the fractional part of `(U x)_1`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{apply_f, f_preimages, index_vectors, TorusPoint, TorusSegment, UnionFind};
use crate::arith::{format_rational, frac, parse_rational, rat_int, Moduli, Rational};
use crate::error::{Error, Result};

/// A closed geodesic `anchor + τ·direction`, `τ ∈ [0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Geodesic {
    direction: Vec<BigInt>,
    class: Vec<Rational>,
    anchor: TorusPoint,
}

impl Geodesic {
    /// Primitive direction, first non-zero entry positive.
    pub fn direction(&self) -> &[BigInt] {
        &self.direction
    }

    pub fn anchor(&self) -> &TorusPoint {
        &self.anchor
    }

    /// Cover point at parameter `tau`, based at the anchor.
    pub fn at(&self, tau: &Rational) -> Vec<Rational> {
        self.anchor
            .coords()
            .iter()
            .zip(&self.direction)
            .map(|(a, d)| a.value() + rat_int(d) * tau)
            .collect()
    }
}

/// Unimodular `U` with `U d = e_1`, and its inverse `V` (whose first column is `d`).
#[derive(Debug, Clone)]
struct Frame {
    u: Vec<Vec<BigInt>>,
    v: Vec<Vec<BigInt>>,
}

impl Frame {
    fn new(d: &[BigInt]) -> Frame {
        let r = d.len();
        let identity = |r: usize| -> Vec<Vec<BigInt>> {
            (0..r)
                .map(|i| (0..r).map(|j| BigInt::from((i == j) as i32)).collect())
                .collect()
        };
        let mut u = identity(r);
        let mut v = identity(r);
        let mut w = d.to_vec();
        for i in (1..r).rev() {
            if w[i].is_zero() {
                continue;
            }
            let (a, b) = (w[i - 1].clone(), w[i].clone());
            let e = a.extended_gcd(&b);
            let (g, x, y) = (e.gcd, e.x, e.y);
            let (ag, bg) = (&a / &g, &b / &g);
            // rows i-1, i of U  <-  [[x, y], [-b/g, a/g]] · rows
            for col in 0..r {
                let r0 = u[i - 1][col].clone();
                let r1 = u[i][col].clone();
                u[i - 1][col] = &x * &r0 + &y * &r1;
                u[i][col] = -&bg * &r0 + &ag * &r1;
            }
            // columns i-1, i of V  <-  cols · [[a/g, -y], [b/g, x]]
            for row in v.iter_mut() {
                let c0 = row[i - 1].clone();
                let c1 = row[i].clone();
                row[i - 1] = &ag * &c0 + &bg * &c1;
                row[i] = -&y * &c0 + &x * &c1;
            }
            w[i - 1] = g;
            w[i] = BigInt::zero();
        }
        if w[0].is_negative() {
            for x in u[0].iter_mut() {
                *x = -&*x;
            }
            for row in v.iter_mut() {
                row[0] = -&row[0];
            }
        }
        Frame { u, v }
    }

    fn apply_u(&self, x: &[Rational]) -> Vec<Rational> {
        self.u
            .iter()
            .map(|row| {
                row.iter()
                    .zip(x)
                    .fold(Rational::zero(), |acc, (c, xi)| acc + rat_int(c) * xi)
            })
            .collect()
    }

    /// Canonical geodesic through cover point `x`, and `τ` of `x` on it.
    fn locate(&self, direction: &[BigInt], x: &[Rational]) -> (Geodesic, Rational) {
        let y = self.apply_u(x);
        let tau = frac(&y[0]);
        let class: Vec<Rational> = y[1..].iter().map(frac).collect();
        let r = x.len();
        let anchor: Vec<Rational> = (0..r)
            .map(|i| {
                class
                    .iter()
                    .enumerate()
                    .fold(Rational::zero(), |acc, (j, c)| acc + rat_int(&self.v[i][j + 1]) * c)
            })
            .collect();
        (
            Geodesic {
                direction: direction.to_vec(),
                class,
                anchor: TorusPoint::from_rationals(anchor),
            },
            tau,
        )
    }
}

/// Writes `v = λ d` with `d` primitive and its first non-zero entry positive.
fn primitive_direction(v: &[Rational]) -> Option<(Vec<BigInt>, Rational)> {
    if v.iter().all(Zero::is_zero) {
        return None;
    }
    let l = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * rat_int(&l)).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    let mut d: Vec<BigInt> = ints.iter().map(|x| x / &g).collect();
    let mut lambda = Rational::new(g, l);
    if d.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) {
        d.iter_mut().for_each(|x| *x = -&*x);
        lambda = -lambda;
    }
    Some((d, lambda))
}

type Interval = (Rational, Rational);

/// Accumulates raw pieces before canonicalization.
#[derive(Debug, Default)]
struct Builder {
    rank: usize,
    frames: HashMap<Vec<BigInt>, Frame>,
    arcs: BTreeMap<Geodesic, Vec<Interval>>,
    points: BTreeSet<TorusPoint>,
}

impl Builder {
    fn new(rank: usize) -> Self {
        Builder {
            rank,
            ..Default::default()
        }
    }

    fn add_point(&mut self, p: TorusPoint) {
        self.points.insert(p);
    }

    fn add_cover(&mut self, start: &[Rational], end: &[Rational]) -> Result<()> {
        super::check_dim(self.rank, start.len())?;
        super::check_dim(self.rank, end.len())?;
        let v: Vec<Rational> = end.iter().zip(start).map(|(e, s)| e - s).collect();
        let Some((d, lambda)) = primitive_direction(&v) else {
            self.add_point(TorusPoint::from_cover(start));
            return Ok(());
        };
        let (from, length) = if lambda.is_negative() {
            (end, -lambda)
        } else {
            (start, lambda)
        };
        let frame = self.frames.entry(d.clone()).or_insert_with(|| Frame::new(&d));
        let (geo, tau) = frame.locate(&d, from);
        let list = self.arcs.entry(geo).or_default();
        let one = Rational::one();
        if length >= one {
            list.push((Rational::zero(), one));
        } else {
            let hi = &tau + &length;
            if hi <= one {
                list.push((tau, hi));
            } else {
                list.push((tau, one.clone()));
                list.push((Rational::zero(), hi - one));
            }
        }
        Ok(())
    }

    fn add_set(&mut self, s: &SegmentSet) {
        for (g, ivs) in &s.arcs {
            self.arcs.entry(g.clone()).or_default().extend(ivs.iter().cloned());
        }
        self.points.extend(s.points.iter().cloned());
    }

    fn finish(self) -> SegmentSet {
        let arcs: BTreeMap<Geodesic, Vec<Interval>> = self
            .arcs
            .into_iter()
            .map(|(g, ivs)| (g, merge_intervals(ivs)))
            .collect();
        let mut set = SegmentSet {
            rank: self.rank,
            arcs,
            points: BTreeSet::new(),
        };
        let points: BTreeSet<TorusPoint> = self
            .points
            .into_iter()
            .filter(|p| !set.on_arcs(p))
            .collect();
        set.points = points;
        set
    }
}

fn merge_intervals(mut ivs: Vec<Interval>) -> Vec<Interval> {
    ivs.sort();
    let mut out: Vec<Interval> = Vec::with_capacity(ivs.len());
    for (lo, hi) in ivs {
        if let Some(last) = out.last_mut() {
            if lo <= last.1 {
                if hi > last.1 {
                    last.1 = hi;
                }
                continue;
            }
        }
        out.push((lo, hi));
    }
    out
}

fn interval_contains(iv: &Interval, tau: &Rational) -> bool {
    (&iv.0 <= tau && tau <= &iv.1) || (tau.is_zero() && iv.1.is_one())
}

/// Finite union of rational geodesic segments and points, canonical.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SegmentSet {
    rank: usize,
    arcs: BTreeMap<Geodesic, Vec<Interval>>,
    points: BTreeSet<TorusPoint>,
}

impl SegmentSet {
    pub fn empty(rank: usize) -> Self {
        SegmentSet {
            rank,
            arcs: BTreeMap::new(),
            points: BTreeSet::new(),
        }
    }

    pub fn from_segments(rank: usize, segs: impl IntoIterator<Item = TorusSegment>) -> Result<Self> {
        let mut b = Builder::new(rank);
        for s in segs {
            b.add_cover(s.start(), s.end())?;
        }
        Ok(b.finish())
    }

    /// From raw cover pieces; a zero-length piece contributes a point.
    pub fn from_cover_pieces(
        rank: usize,
        pieces: impl IntoIterator<Item = (Vec<Rational>, Vec<Rational>)>,
    ) -> Result<Self> {
        let mut b = Builder::new(rank);
        for (s, e) in pieces {
            b.add_cover(&s, &e)?;
        }
        Ok(b.finish())
    }

    pub fn from_points(rank: usize, points: impl IntoIterator<Item = TorusPoint>) -> Result<Self> {
        let mut b = Builder::new(rank);
        for p in points {
            super::check_dim(rank, p.rank())?;
            b.add_point(p);
        }
        Ok(b.finish())
    }

    pub fn with_point(&self, p: TorusPoint) -> Self {
        let mut b = Builder::new(self.rank);
        b.add_set(self);
        b.add_point(p);
        b.finish()
    }

    pub fn union(&self, other: &SegmentSet) -> Self {
        let mut b = Builder::new(self.rank);
        b.add_set(self);
        b.add_set(other);
        b.finish()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty() && self.points.is_empty()
    }

    pub fn geodesics(&self) -> impl Iterator<Item = &Geodesic> {
        self.arcs.keys()
    }

    /// Isolated points (not on any arc).
    pub fn points(&self) -> &BTreeSet<TorusPoint> {
        &self.points
    }

    /// Number of maximal arcs.
    pub fn arc_count(&self) -> usize {
        self.arcs.values().map(Vec::len).sum()
    }

    /// Geodesics covered completely.
    pub fn full_geodesics(&self) -> Vec<&Geodesic> {
        self.arcs
            .iter()
            .filter(|(_, ivs)| ivs.len() == 1 && ivs[0].0.is_zero() && ivs[0].1.is_one())
            .map(|(g, _)| g)
            .collect()
    }

    /// The canonical segments, one per maximal arc, in canonical order.
    pub fn segments(&self) -> Vec<TorusSegment> {
        self.arcs
            .iter()
            .flat_map(|(g, ivs)| {
                ivs.iter().map(move |(lo, hi)| {
                    TorusSegment::new(g.at(lo), g.at(hi)).expect("arcs have positive length")
                })
            })
            .collect()
    }

    fn on_arcs(&self, p: &TorusPoint) -> bool {
        let x = p.to_cover();
        let mut frames: HashMap<&[BigInt], Frame> = HashMap::new();
        self.arcs.iter().any(|(g, ivs)| {
            let frame = frames
                .entry(g.direction.as_slice())
                .or_insert_with(|| Frame::new(&g.direction));
            let (h, tau) = frame.locate(&g.direction, &x);
            h == *g && ivs.iter().any(|iv| interval_contains(iv, &tau))
        })
    }

    pub fn contains_point(&self, p: &TorusPoint) -> bool {
        p.rank() == self.rank && (self.points.contains(p) || self.on_arcs(p))
    }

    /// `self ⊆ other` as point sets.
    pub fn is_subset(&self, other: &SegmentSet) -> bool {
        if self.rank != other.rank {
            return false;
        }
        for (g, ivs) in &self.arcs {
            // an arc of positive length can only be covered by arcs of the same geodesic
            let Some(theirs) = other.arcs.get(g) else {
                return false;
            };
            let covered = ivs
                .iter()
                .all(|(lo, hi)| theirs.iter().any(|(a, b)| a <= lo && hi <= b));
            if !covered {
                return false;
            }
        }
        self.points.iter().all(|p| other.contains_point(p))
    }

    /// `f(S)`.
    pub fn image(&self, moduli: &Moduli) -> Result<SegmentSet> {
        super::check_dim(moduli.rank(), self.rank)?;
        let m: Vec<Rational> = moduli.values().iter().map(|&m| rat_int(&BigInt::from(m))).collect();
        let scale = |v: Vec<Rational>| -> Vec<Rational> { v.iter().zip(&m).map(|(x, k)| x * k).collect() };
        let mut b = Builder::new(self.rank);
        for seg in self.segments() {
            b.add_cover(&scale(seg.start().to_vec()), &scale(seg.end().to_vec()))?;
        }
        for p in &self.points {
            b.add_point(apply_f(p, moduli)?);
        }
        Ok(b.finish())
    }

    /// `f^k(S)`.
    pub fn image_iter(&self, moduli: &Moduli, k: u32) -> Result<SegmentSet> {
        let mut s = self.clone();
        for _ in 0..k {
            s = s.image(moduli)?;
        }
        Ok(s)
    }

    /// The full preimage `f^{-1}(S)`.
    pub fn preimage(&self, moduli: &Moduli) -> Result<SegmentSet> {
        super::check_dim(moduli.rank(), self.rank)?;
        let m: Vec<Rational> = moduli.values().iter().map(|&m| rat_int(&BigInt::from(m))).collect();
        let sheets: Vec<Vec<Rational>> = index_vectors(moduli.values())
            .into_iter()
            .map(|j| j.into_iter().map(|x| rat_int(&BigInt::from(x))).collect())
            .collect();
        let lift = |v: &[Rational], j: &[Rational]| -> Vec<Rational> {
            v.iter().zip(j).zip(&m).map(|((x, j), k)| (x + j) / k).collect()
        };
        let mut b = Builder::new(self.rank);
        for seg in self.segments() {
            for j in &sheets {
                b.add_cover(&lift(seg.start(), j), &lift(seg.end(), j))?;
            }
        }
        for p in &self.points {
            for q in f_preimages(p, moduli)? {
                b.add_point(q);
            }
        }
        Ok(b.finish())
    }

    /// `f^{-k}(S)`.
    pub fn preimage_iter(&self, moduli: &Moduli, k: u32) -> Result<SegmentSet> {
        let mut s = self.clone();
        for _ in 0..k {
            s = s.preimage(moduli)?;
        }
        Ok(s)
    }

    /// Total variation of each coordinate over the arcs.
    pub fn coordinate_variation(&self) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.rank];
        for (g, ivs) in &self.arcs {
            let len: Rational = ivs.iter().map(|(lo, hi)| hi - lo).sum();
            for (o, d) in out.iter_mut().zip(&g.direction) {
                *o += &len * rat_int(&d.abs());
            }
        }
        out
    }

    /// Connected components, each canonical, in canonical order.
    pub fn components(&self) -> Vec<SegmentSet> {
        // pieces: every maximal arc, then every isolated point
        let mut pieces: Vec<(&Geodesic, &Interval)> = Vec::new();
        let mut first_piece: BTreeMap<&Geodesic, usize> = BTreeMap::new();
        for (g, ivs) in &self.arcs {
            first_piece.insert(g, pieces.len());
            for iv in ivs {
                pieces.push((g, iv));
            }
        }
        let n_arcs = pieces.len();
        let n = n_arcs + self.points.len();
        let mut uf = UnionFind::new(n);

        // arcs [x, 1] and [0, y] on one geodesic meet at τ = 0
        for (g, ivs) in &self.arcs {
            if ivs.len() > 1 && ivs[0].0.is_zero() && ivs[ivs.len() - 1].1.is_one() {
                let base = first_piece[g];
                uf.union(base, base + ivs.len() - 1);
            }
        }

        let geos: Vec<&Geodesic> = self.arcs.keys().collect();
        for (i, g) in geos.iter().enumerate() {
            for h in &geos[i + 1..] {
                if g.direction == h.direction {
                    continue;
                }
                for (t, u) in geodesic_crossings(g, h) {
                    let pi = self.arcs[*g]
                        .iter()
                        .position(|iv| interval_contains(iv, &t));
                    let pj = self.arcs[*h]
                        .iter()
                        .position(|iv| interval_contains(iv, &u));
                    if let (Some(a), Some(b)) = (pi, pj) {
                        uf.union(first_piece[*g] + a, first_piece[*h] + b);
                    }
                }
            }
        }

        let points: Vec<&TorusPoint> = self.points.iter().collect();
        let mut comps: Vec<SegmentSet> = uf
            .groups()
            .into_iter()
            .map(|group| {
                let mut b = Builder::new(self.rank);
                for idx in group {
                    if idx < n_arcs {
                        let (g, iv) = pieces[idx];
                        b.arcs.entry(g.clone()).or_default().push(iv.clone());
                    } else {
                        b.add_point(points[idx - n_arcs].clone());
                    }
                }
                b.finish()
            })
            .collect();
        comps.sort();
        comps
    }

    pub fn component_count(&self) -> usize {
        self.components().len()
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    /// `per_arc + 1` evenly spaced points on each arc, plus the isolated points.
    pub fn sample_points(&self, per_arc: usize) -> Vec<TorusPoint> {
        let steps = per_arc.max(1);
        let mut out = Vec::new();
        for (g, ivs) in &self.arcs {
            for (lo, hi) in ivs {
                for k in 0..=steps {
                    let tau = lo + (hi - lo) * Rational::new(BigInt::from(k), BigInt::from(steps));
                    out.push(TorusPoint::from_cover(&g.at(&tau)));
                }
            }
        }
        out.extend(self.points.iter().cloned());
        out
    }

    /// One row per canonical segment: `r` start rationals then `r` end rationals.
    /// Isolated points are written with start equal to end.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (1..=self.rank)
            .map(|i| format!("start_{i}"))
            .chain((1..=self.rank).map(|i| format!("end_{i}")))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for s in self.segments() {
            out.push_str(&s.to_csv_row());
            out.push('\n');
        }
        for p in &self.points {
            let row: Vec<String> = p
                .coords()
                .iter()
                .chain(p.coords())
                .map(|a| format_rational(a.value()))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<SegmentSet> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or(Error::Empty("csv"))?;
        let cols = header.split(',').count();
        if cols == 0 || cols % 2 != 0 {
            return Err(Error::Parse {
                what: "csv header",
                input: header.to_string(),
            });
        }
        let rank = cols / 2;
        let mut pieces = Vec::new();
        for line in lines {
            let vals = line
                .split(',')
                .map(parse_rational)
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != cols {
                return Err(Error::Parse {
                    what: "csv row",
                    input: line.to_string(),
                });
            }
            pieces.push((vals[..rank].to_vec(), vals[rank..].to_vec()));
        }
        SegmentSet::from_cover_pieces(rank, pieces)
    }
}

impl fmt::Display for SegmentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_csv())
    }
}

/// Parameter pairs `(τ_g, τ_h)` where two non-parallel full geodesics cross.
fn geodesic_crossings(g: &Geodesic, h: &Geodesic) -> Vec<(Rational, Rational)> {
    let r = g.direction.len();
    let d1: Vec<Rational> = g.direction.iter().map(rat_int).collect();
    let d2: Vec<Rational> = h.direction.iter().map(rat_int).collect();
    // g.anchor + t d1 - h.anchor - u d2 = z, integer z, t, u in [0, 1)
    let w: Vec<Rational> = g
        .anchor
        .coords()
        .iter()
        .zip(h.anchor.coords())
        .map(|(a, b)| a.value() - b.value())
        .collect();
    let zero = Rational::zero();
    let range = |i: usize| -> (BigInt, BigInt) {
        let lo = &w[i] + d1[i].clone().min(zero.clone()) - d2[i].clone().max(zero.clone());
        let hi = &w[i] + d1[i].clone().max(zero.clone()) - d2[i].clone().min(zero.clone());
        (lo.ceil().to_integer(), hi.floor().to_integer())
    };
    let width = |i: usize| -> BigInt {
        let (lo, hi) = range(i);
        (hi - lo + BigInt::one()).max(BigInt::zero())
    };

    let mut best: Option<((usize, usize), BigInt)> = None;
    for p in 0..r {
        for q in p + 1..r {
            let det = &d1[p] * &d2[q] - &d1[q] * &d2[p];
            if det.is_zero() {
                continue;
            }
            let cost = width(p) * width(q);
            if best.as_ref().is_none_or(|(_, c)| cost < *c) {
                best = Some(((p, q), cost));
            }
        }
    }
    let Some(((p, q), _)) = best else {
        return Vec::new();
    };

    // t d1_p - u d2_p = c_p ; t d1_q - u d2_q = c_q
    let det = -(&d1[p] * &d2[q]) + &d2[p] * &d1[q];
    let (plo, phi) = range(p);
    let (qlo, qhi) = range(q);
    let one = Rational::one();
    let mut out = Vec::new();
    let mut zp = plo;
    while zp <= phi {
        let cp = rat_int(&zp) - &w[p];
        let mut zq = qlo.clone();
        while zq <= qhi {
            let cq = rat_int(&zq) - &w[q];
            let t = (-&cp * &d2[q] + &d2[p] * &cq) / &det;
            let u = (&d1[p] * &cq - &d1[q] * &cp) / &det;
            if t >= zero && t < one && u >= zero && u < one {
                let consistent = (0..r).all(|i| {
                    i == p || i == q || (&w[i] + &t * &d1[i] - &u * &d2[i]).is_integer()
                });
                if consistent {
                    out.push((t, u));
                }
            }
            zq += 1;
        }
        zp += 1;
    }
    out
}
