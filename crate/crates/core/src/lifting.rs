//! Loops based at `1⁻`, their winding vectors, and lifts through `f^n`.
//!
//! A loop is recorded by universal-cover breakpoints starting at the origin;
//! the last breakpoint is an integer vector, the winding. The lift of the
//! periodic extension through `f^n` starting at `1⁻` is obtained by dividing
//! cover coordinate `i` by `m_i^n`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{lcm_all, rat_int, Moduli, Rational};
use crate::error::{Error, Result};
use crate::torus::{check_dim, SegmentSet, TorusPoint};

/// Default cap on enumerations (points, periods, segments).
pub const DEFAULT_SIZE_GUARD: u64 = 1_000_000;

/// `FUPCON_SIZE_GUARD` if set to a positive integer, else the default.
pub fn size_guard_from_env() -> u64 {
    std::env::var("FUPCON_SIZE_GUARD")
        .ok()
        .and_then(|v| v.trim().parse::<u64>().ok())
        .filter(|&g| g > 0)
        .unwrap_or(DEFAULT_SIZE_GUARD)
}

/// Integer winding vector of a torus loop, its homotopy class.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WindingVector(Vec<i64>);

impl WindingVector {
    pub fn new(s: Vec<i64>) -> Self {
        WindingVector(s)
    }

    pub fn entries(&self) -> &[i64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> i64 {
        self.0[i]
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    /// All entries non-zero.
    pub fn is_admissible(&self) -> bool {
        self.0.iter().all(|&x| x != 0)
    }

    pub fn require_admissible(&self) -> Result<()> {
        if self.is_admissible() {
            Ok(())
        } else {
            Err(Error::NotAdmissible(self.to_string()))
        }
    }

    pub fn big(&self, i: usize) -> BigInt {
        BigInt::from(self.0[i])
    }
}

impl fmt::Display for WindingVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Piecewise-linear loop at `1⁻`, breakpoints in cover coordinates.
///
/// Breakpoints are taken at equally spaced times in `[0, 1]`; a single
/// breakpoint is the constant loop.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PLLoop {
    breakpoints: Vec<Vec<Rational>>,
}

impl PLLoop {
    pub fn new(breakpoints: Vec<Vec<Rational>>) -> Result<Self> {
        let first = breakpoints.first().ok_or(Error::Empty("breakpoints"))?;
        let r = first.len();
        if r == 0 {
            return Err(Error::Empty("loop coordinates"));
        }
        for b in &breakpoints {
            check_dim(r, b.len())?;
        }
        if !first.iter().all(Zero::is_zero) {
            return Err(Error::PreconditionViolated(
                "loop must start at the cover origin".into(),
            ));
        }
        if !breakpoints.last().expect("non-empty").iter().all(|x| x.is_integer()) {
            return Err(Error::PreconditionViolated(
                "loop must end at an integer vector".into(),
            ));
        }
        Ok(PLLoop { breakpoints })
    }

    pub fn constant(r: usize) -> Self {
        PLLoop {
            breakpoints: vec![vec![Rational::zero(); r]],
        }
    }

    /// `t ↦ (e(s_1 t), ..., e(s_r t))`: one straight cover segment `0 → s`.
    pub fn straight(s: &WindingVector) -> Self {
        PLLoop {
            breakpoints: vec![
                vec![Rational::zero(); s.rank()],
                s.entries().iter().map(|&x| Rational::from_integer(x.into())).collect(),
            ],
        }
    }

    /// `λ_s` on the circle.
    pub fn lambda(s: i64) -> Self {
        Self::straight(&WindingVector::new(vec![s]))
    }

    pub fn rank(&self) -> usize {
        self.breakpoints[0].len()
    }

    pub fn breakpoints(&self) -> &[Vec<Rational>] {
        &self.breakpoints
    }

    /// Number of linear pieces per unit of time.
    pub fn pieces(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn winding(&self) -> WindingVector {
        WindingVector(
            self.breakpoints
                .last()
                .expect("non-empty")
                .iter()
                .map(|x| {
                    i64::try_from(x.to_integer()).expect("winding entries fit in i64")
                })
                .collect(),
        )
    }

    /// `self ∗ other`: traverse `self`, then `other`.
    pub fn concat(&self, other: &PLLoop) -> Result<PLLoop> {
        check_dim(self.rank(), other.rank())?;
        let end = self.breakpoints.last().expect("non-empty").clone();
        let mut bps = self.breakpoints.clone();
        for b in other.breakpoints.iter().skip(1) {
            bps.push(b.iter().zip(&end).map(|(x, e)| x + e).collect());
        }
        Ok(PLLoop { breakpoints: bps })
    }

    /// `self^{-1}`.
    pub fn reverse(&self) -> PLLoop {
        let end = self.breakpoints.last().expect("non-empty").clone();
        PLLoop {
            breakpoints: self
                .breakpoints
                .iter()
                .rev()
                .map(|b| b.iter().zip(&end).map(|(x, e)| x - e).collect())
                .collect(),
        }
    }

    /// `self ∗ ... ∗ self`, `times` copies (`times = 0` is the constant loop).
    pub fn repeat(&self, times: usize) -> PLLoop {
        let mut out = PLLoop::constant(self.rank());
        for _ in 0..times {
            out = out.concat(self).expect("same rank");
        }
        out
    }
}

pub fn winding(l: &PLLoop) -> WindingVector {
    l.winding()
}

/// Coordinate `i` of the loop lifts through `(R, e)` iff its winding is zero.
pub fn liftable(l: &PLLoop, coordinate: usize) -> Result<bool> {
    if coordinate >= l.rank() {
        return Err(Error::DimensionMismatch {
            expected: l.rank(),
            got: coordinate + 1,
        });
    }
    Ok(l.winding().get(coordinate) == 0)
}

/// Cover breakpoints of the periodic extension over `[0, T]`: block `i`
/// (time `[i-1, i]`) is the loop shifted by `(i-1)·s`.
pub fn extend_periodic(l: &PLLoop, horizon: u64) -> Result<Vec<Vec<Rational>>> {
    if horizon == 0 {
        return Err(Error::Zero("horizon"));
    }
    let s: Vec<Rational> = l.breakpoints.last().expect("non-empty").clone();
    let mut out = vec![l.breakpoints[0].clone()];
    for block in 0..horizon {
        let shift: Vec<Rational> = s.iter().map(|x| x * Rational::from_integer(block.into())).collect();
        for b in l.breakpoints.iter().skip(1) {
            out.push(b.iter().zip(&shift).map(|(x, d)| x + d).collect());
        }
    }
    Ok(out)
}

/// The lift `γ^{(n)}` restricted to `[0, T]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftedPath {
    pub source: PLLoop,
    pub exponent: u32,
    pub horizon: u64,
    /// Cover coordinates; breakpoint `k · pieces` sits at time `k`.
    pub breakpoints: Vec<Vec<Rational>>,
}

impl LiftedPath {
    /// `γ^{(n)}(k)` for integer `0 <= k <= T`.
    pub fn at_integer(&self, k: u64) -> TorusPoint {
        let idx = (k as usize) * self.source.pieces();
        TorusPoint::from_cover(&self.breakpoints[idx])
    }

    pub fn torus_breakpoints(&self) -> Vec<TorusPoint> {
        self.breakpoints.iter().map(|b| TorusPoint::from_cover(b)).collect()
    }

    pub fn image(&self) -> Result<SegmentSet> {
        path_image(self.source.rank(), self.breakpoints.iter().cloned())
    }
}

fn divisors(moduli: &Moduli, n: u32) -> Vec<Rational> {
    (0..moduli.rank()).map(|i| rat_int(&moduli.power(i, n))).collect()
}

/// Lift of the periodic extension through `f^n`, starting at `1⁻`.
pub fn lift(l: &PLLoop, n: u32, moduli: &Moduli, horizon: u64) -> Result<LiftedPath> {
    check_dim(moduli.rank(), l.rank())?;
    let div = divisors(moduli, n);
    let breakpoints = extend_periodic(l, horizon)?
        .into_iter()
        .map(|b| b.iter().zip(&div).map(|(x, d)| x / d).collect())
        .collect();
    Ok(LiftedPath {
        source: l.clone(),
        exponent: n,
        horizon,
        breakpoints,
    })
}

/// `σ(s, n)(k)` for `k = 0..=K`: coordinate `i` is `s_i k / m_i^n mod 1`.
pub fn sigma_points(s: &WindingVector, n: u32, moduli: &Moduli, count: u64) -> Result<Vec<TorusPoint>> {
    check_dim(moduli.rank(), s.rank())?;
    s.require_admissible()?;
    Ok((0..=count).map(|k| sigma_at(s, n, moduli, &BigInt::from(k))).collect())
}

/// `σ(s, n)(k)` at one integer time.
pub fn sigma_at(s: &WindingVector, n: u32, moduli: &Moduli, k: &BigInt) -> TorusPoint {
    TorusPoint::from_rationals(
        (0..s.rank())
            .map(|i| Rational::new(s.big(i) * k, moduli.power(i, n)))
            .collect(),
    )
}

/// Least `P >= 1` with `s_i P ≡ 0 (mod m_i^n)` for all `i`.
pub fn image_period(s: &WindingVector, n: u32, moduli: &Moduli) -> Result<BigInt> {
    check_dim(moduli.rank(), s.rank())?;
    s.require_admissible()?;
    let parts: Vec<BigInt> = (0..s.rank())
        .map(|i| {
            let mn = moduli.power(i, n);
            let g = s.big(i).gcd(&mn);
            mn / g
        })
        .collect();
    Ok(lcm_all(&parts))
}

/// Canonical set of a path given by cover breakpoints. Runs of collinear
/// pieces are merged before canonicalization.
fn path_image(rank: usize, breakpoints: impl IntoIterator<Item = Vec<Rational>>) -> Result<SegmentSet> {
    let mut pieces: Vec<(Vec<Rational>, Vec<Rational>)> = Vec::new();
    let mut iter = breakpoints.into_iter();
    let Some(first) = iter.next() else {
        return Ok(SegmentSet::empty(rank));
    };
    let mut start = first.clone();
    let mut end = first;
    let mut dir: Option<Vec<Rational>> = None;
    for b in iter {
        let step: Vec<Rational> = b.iter().zip(&end).map(|(x, y)| x - y).collect();
        if step.iter().all(Zero::is_zero) {
            continue;
        }
        match &dir {
            Some(d) if same_direction(d, &step) => {}
            Some(_) => {
                pieces.push((start.clone(), end.clone()));
                start = end.clone();
                dir = Some(step);
            }
            None => dir = Some(step),
        }
        end = b;
    }
    pieces.push((start, end));
    SegmentSet::from_cover_pieces(rank, pieces)
}

fn same_direction(a: &[Rational], b: &[Rational]) -> bool {
    let r = a.len();
    for p in 0..r {
        for q in p + 1..r {
            if &a[p] * &b[q] != &a[q] * &b[p] {
                return false;
            }
        }
    }
    a.iter().zip(b).map(|(x, y)| x * y).sum::<Rational>().is_positive()
}

/// `Im(γ^{(n)})`, over one full period when the winding is admissible, or
/// over `[0, horizon]` when a horizon is given.
pub fn image_set(l: &PLLoop, n: u32, moduli: &Moduli, horizon: Option<u64>) -> Result<SegmentSet> {
    image_set_guarded(l, n, moduli, horizon, DEFAULT_SIZE_GUARD)
}

pub fn image_set_guarded(
    l: &PLLoop,
    n: u32,
    moduli: &Moduli,
    horizon: Option<u64>,
    guard: u64,
) -> Result<SegmentSet> {
    check_dim(moduli.rank(), l.rank())?;
    let s = l.winding();
    let periods: BigInt = match horizon {
        Some(t) => BigInt::from(t.max(1)),
        None => {
            if !s.is_admissible() {
                return Err(Error::NonperiodicWithoutHorizon(s.to_string()));
            }
            image_period(&s, n, moduli)?
        }
    };
    let work = &periods * BigInt::from(l.pieces().max(1));
    if work > BigInt::from(guard) {
        return Err(Error::SizeGuardExceeded {
            needed: work.to_string(),
            limit: guard,
        });
    }
    let periods = u64::try_from(&periods).expect("bounded by guard");
    let div = divisors(moduli, n);
    let shift_unit: Vec<Rational> = (0..s.rank()).map(|i| rat_int(&s.big(i))).collect();
    let pts = (0..periods).flat_map(|block| {
        let shift: Vec<Rational> = shift_unit
            .iter()
            .map(|x| x * Rational::from_integer(block.into()))
            .collect();
        let skip = if block == 0 { 0 } else { 1 };
        let div = &div;
        l.breakpoints.iter().skip(skip).map(move |b| {
            b.iter()
                .zip(&shift)
                .zip(div)
                .map(|((x, d), m)| (x + d) / m)
                .collect::<Vec<Rational>>()
        })
    });
    path_image(l.rank(), pts)
}

/// `γ^{(n)}(k)` for `k = 0..=K`, read off the lifted path.
pub fn integer_time_points(l: &PLLoop, n: u32, moduli: &Moduli, count: u64) -> Result<Vec<TorusPoint>> {
    let path = lift(l, n, moduli, count.max(1))?;
    Ok((0..=count).map(|k| path.at_integer(k)).collect())
}

/// Exact `f ∘ γ^{(n+1)} = γ^{(n)}` on every breakpoint over `[0, T]`.
pub fn lift_compatibility(l: &PLLoop, n: u32, moduli: &Moduli, horizon: u64) -> Result<bool> {
    let upper = lift(l, n + 1, moduli, horizon)?;
    let lower = lift(l, n, moduli, horizon)?;
    for (a, b) in upper.torus_breakpoints().iter().zip(lower.torus_breakpoints()) {
        if crate::torus::apply_f(a, moduli)? != b {
            return Ok(false);
        }
    }
    Ok(true)
}
