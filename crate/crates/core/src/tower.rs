//! The inverse sequence of torus continua squeezed between a loop image and
//! a small neighbourhood, with finite-depth checks of its properties.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::arith::{rat_int, Moduli, Rational};
use crate::error::{Error, Result};
use crate::hitting::{minimal_level, closed_form_level};
use crate::lifting::{image_set_guarded, PLLoop, WindingVector};
use crate::torus::{apply_f, f_preimages, solenoid_distance, SegmentSet, SolenoidPoint, TorusPoint};

/// Search bound for the least certificate level.
pub const LEVEL_SEARCH_LIMIT: u32 = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TowerParams {
    pub epsilon: Rational,
    /// The requested epsilon exceeded 1 and was replaced by 1.
    pub clamped: bool,
    pub n0: u32,
    pub delta: Rational,
    pub n1: u32,
    pub closed_form_level: Option<BigInt>,
    pub minimal_level: u32,
    /// Preimage levels past `n0 + n1`.
    pub depth: u32,
}

impl TowerParams {
    pub fn n1_exceeds_n0(&self) -> bool {
        self.n1 > self.n0
    }

    pub fn level_count(&self) -> usize {
        (self.n0 + self.n1 + self.depth) as usize
    }
}

/// `N0`, `δ` and `N1` for a given `ε`, moduli and winding.
pub fn choose_params(epsilon: &Rational, moduli: &Moduli, s: &WindingVector, depth: u32) -> Result<TowerParams> {
    if *epsilon <= Rational::zero() {
        return Err(Error::PreconditionViolated("epsilon must be positive".into()));
    }
    let clamped = *epsilon > Rational::one();
    let epsilon = if clamped { Rational::one() } else { epsilon.clone() };
    let half = &epsilon / rat_int(&BigInt::from(2));

    let mut n0 = 1u32;
    while Rational::new(BigInt::one(), num_traits::pow(BigInt::from(2), n0 as usize)) >= half {
        n0 += 1;
    }
    let stretch = num_traits::pow(BigInt::from(moduli.max()), n0 as usize);
    let modulus = &half / rat_int(&stretch);
    let delta = if modulus < epsilon { modulus } else { epsilon.clone() };

    let minimal = minimal_level(s, moduli, LEVEL_SEARCH_LIMIT)?;
    let closed_form = match closed_form_level(s, moduli) {
        Ok(n) => Some(n),
        Err(Error::NoDecomposition { .. }) => None,
        Err(e) => return Err(e),
    };
    let mut n1 = BigInt::from(minimal.max(1));
    if let Some(p) = &closed_form {
        n1 = n1.max(p.clone());
    }
    let n1 = u32::try_from(&n1).map_err(|_| Error::SizeGuardExceeded {
        needed: n1.to_string(),
        limit: u32::MAX as u64,
    })?;
    Ok(TowerParams {
        epsilon,
        clamped,
        n0,
        delta,
        n1,
        closed_form_level: closed_form,
        minimal_level: minimal,
        depth,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tower {
    /// `levels[k - 1]` is `L_k`.
    pub levels: Vec<SegmentSet>,
    pub base_loop: PLLoop,
    pub params: TowerParams,
    pub moduli: Moduli,
}

impl Tower {
    /// `L_n`, 1-based.
    pub fn level(&self, n: usize) -> &SegmentSet {
        &self.levels[n - 1]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// The component of `L_n` through `1⁻`.
    pub fn component_through_base(&self, n: usize) -> Option<SegmentSet> {
        let base = TorusPoint::base(self.moduli.rank());
        self.level(n).components().into_iter().find(|c| c.contains_point(&base))
    }
}

/// `L_{N0-j} = f^j(Im γ)`, `L_{N0+j} = Im γ^{(j)}`, `L_{N0+N1+j} = f^{-j}(Im γ^{(N1)})`.
pub fn build_tower(base_loop: &PLLoop, params: &TowerParams, moduli: &Moduli, guard: u64) -> Result<Tower> {
    base_loop.winding().require_admissible()?;
    let mut levels = Vec::with_capacity(params.level_count());

    let image = image_set_guarded(base_loop, 0, moduli, None, guard)?;
    let mut forward = vec![image];
    for _ in 1..params.n0 {
        let next = forward.last().expect("non-empty").image(moduli)?;
        forward.push(next);
    }
    levels.extend(forward.into_iter().rev());

    for j in 1..=params.n1 {
        levels.push(image_set_guarded(base_loop, j, moduli, None, guard)?);
    }
    for _ in 0..params.depth {
        let next = levels.last().expect("non-empty").preimage(moduli)?;
        levels.push(next);
    }
    Ok(Tower {
        levels,
        base_loop: base_loop.clone(),
        params: params.clone(),
        moduli: moduli.clone(),
    })
}

/// For each preimage level `L_{N0+N1+j}`, whether it equals
/// `f^{-1}(Im γ^{(N1+j-1)})`.
pub fn recipe_identity_check(t: &Tower, guard: u64) -> Result<Vec<bool>> {
    let p = &t.params;
    (1..=p.depth)
        .map(|j| {
            let lifted = image_set_guarded(&t.base_loop, p.n1 + j - 1, &t.moduli, None, guard)?;
            Ok(lifted.preimage(&t.moduli)? == *t.level((p.n0 + p.n1 + j) as usize))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelFlags {
    pub index: usize,
    pub components: usize,
    pub connected: bool,
    pub contains_base: bool,
    /// `f(L_{n+1}) ⊆ L_n`; `None` on the last level.
    pub bonding_contained: Option<bool>,
    /// `f(L_{n+1}) = L_n`; `None` on the last level.
    pub bonding_equal: Option<bool>,
    /// Whether equality is required here (`n < N0`).
    pub equality_required: bool,
}

impl LevelFlags {
    pub fn ok(&self) -> bool {
        self.connected
            && self.contains_base
            && self.bonding_contained.unwrap_or(true)
            && (!self.equality_required || self.bonding_equal.unwrap_or(true))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TowerReport {
    pub params: TowerParams,
    pub levels: Vec<LevelFlags>,
}

impl TowerReport {
    pub fn all_ok(&self) -> bool {
        self.levels.iter().all(LevelFlags::ok)
    }
}

/// Connectedness, `1⁻` membership and bonding containment on every level.
pub fn verify_tower(t: &Tower) -> Result<TowerReport> {
    let base = TorusPoint::base(t.moduli.rank());
    let mut levels = Vec::with_capacity(t.len());
    for n in 1..=t.len() {
        let l = t.level(n);
        let components = l.component_count();
        let (bonding_contained, bonding_equal) = if n < t.len() {
            let pushed = t.level(n + 1).image(&t.moduli)?;
            (Some(pushed.is_subset(l)), Some(pushed == *l))
        } else {
            (None, None)
        };
        levels.push(LevelFlags {
            index: n,
            components,
            connected: components == 1,
            contains_base: l.contains_point(&base),
            bonding_contained,
            bonding_equal,
            equality_required: n < t.params.n0 as usize,
        });
    }
    Ok(TowerReport {
        params: t.params.clone(),
        levels,
    })
}

/// A coherent point of depth `len(t)` passing through `v ∈ L_n`.
///
/// Levels below `n` come from `f`; each level above picks the least
/// `f`-preimage lying in the next tower level.
pub fn coherent_point_through(t: &Tower, n: usize, v: &TorusPoint) -> Result<SolenoidPoint> {
    if n == 0 || n > t.len() {
        return Err(Error::DepthTooSmall { need: n, got: t.len() });
    }
    if !t.level(n).contains_point(v) {
        return Err(Error::MembershipFails(n));
    }
    let mut below = vec![v.clone()];
    for _ in 1..n {
        let next = apply_f(below.last().expect("non-empty"), &t.moduli)?;
        below.push(next);
    }
    below.reverse();
    let mut levels = below;
    for k in n + 1..=t.len() {
        let prev = levels.last().expect("non-empty");
        let next = f_preimages(prev, &t.moduli)?
            .into_iter()
            .find(|q| t.level(k).contains_point(q))
            .ok_or(Error::NoPreimageInLevel(k - 1, k))?;
        levels.push(next);
    }
    SolenoidPoint::new(levels, &t.moduli)
}

/// Coherent points through a grid on `L_{N0}` fine enough that every point
/// of `L_{N0}` is within `δ` of one of them.
pub fn grid_base_points(t: &Tower) -> Result<Vec<SolenoidPoint>> {
    let n0 = t.params.n0 as usize;
    let level = t.level(n0);
    let spread = level
        .geodesics()
        .flat_map(|g| g.direction().iter().map(|d| d.abs()))
        .max()
        .unwrap_or_else(BigInt::one);
    let per_arc = (rat_int(&spread) / &t.params.delta).ceil().to_integer() + BigInt::one();
    let per_arc = usize::try_from(per_arc).map_err(|_| Error::SizeGuardExceeded {
        needed: "grid".into(),
        limit: usize::MAX as u64,
    })?;
    level
        .sample_points(per_arc)
        .iter()
        .map(|p| coherent_point_through(t, n0, p))
        .collect()
}

/// Coherent points through up to `count` evenly spread sample points of the
/// deepest level.
pub fn deep_candidates(t: &Tower, count: usize) -> Result<Vec<SolenoidPoint>> {
    let top = t.len();
    let samples = t.level(top).sample_points(count.max(1));
    let step = (samples.len() / count.max(1)).max(1);
    samples
        .iter()
        .step_by(step)
        .take(count)
        .map(|p| coherent_point_through(t, top, p))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpsilonSummary {
    pub ok: bool,
    pub checked: usize,
    pub failures: usize,
    /// Largest `truncated + tail` distance to the matched base point.
    pub max_distance: Rational,
}

/// Every candidate has a base point `δ`-close at level `N0`, is within `ε/2`
/// of it on every level up to `N0`, and within `ε` in the solenoid metric.
pub fn epsilon_bound_check(t: &Tower, base_points: &[SolenoidPoint], candidates: &[SolenoidPoint]) -> Result<EpsilonSummary> {
    let n0 = t.params.n0 as usize;
    let eps = &t.params.epsilon;
    let half = eps / rat_int(&BigInt::from(2));
    for p in base_points.iter().chain(candidates) {
        if p.depth() < n0 {
            return Err(Error::DepthTooSmall { need: n0, got: p.depth() });
        }
    }
    let mut failures = 0;
    let mut max_distance = Rational::zero();
    for w in candidates {
        let mut best: Option<(Rational, &SolenoidPoint)> = None;
        for z in base_points {
            let d = w.level(n0).distance(z.level(n0))?;
            if best.as_ref().is_none_or(|(b, _)| d < *b) {
                best = Some((d, z));
            }
        }
        let Some((d, z)) = best else {
            failures += 1;
            continue;
        };
        if d >= t.params.delta {
            failures += 1;
            continue;
        }
        let mut close = true;
        for i in 1..=n0 {
            if w.level(i).distance(z.level(i))? >= half {
                close = false;
            }
        }
        let dist = solenoid_distance(w, z)?.upper();
        if dist > max_distance {
            max_distance = dist.clone();
        }
        if !close || dist >= *eps {
            failures += 1;
        }
    }
    Ok(EpsilonSummary {
        ok: failures == 0,
        checked: candidates.len(),
        failures,
        max_distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;
    use crate::lifting::DEFAULT_SIZE_GUARD;
    use crate::torus::TorusSegment;

    const G: u64 = DEFAULT_SIZE_GUARD;

    fn m23() -> Moduli {
        Moduli::new(vec![2, 3]).unwrap()
    }

    fn w(v: &[i64]) -> WindingVector {
        WindingVector::new(v.to_vec())
    }

    fn line(d: &[i64]) -> SegmentSet {
        let seg = TorusSegment::new(vec![rat(0, 1); d.len()], d.iter().map(|&x| rat(x, 1)).collect()).unwrap();
        SegmentSet::from_segments(d.len(), [seg]).unwrap()
    }

    #[test]
    fn params_examples() {
        let p = choose_params(&rat(1, 2), &m23(), &w(&[1, 1]), 2).unwrap();
        assert_eq!(p.n0, 3);
        assert_eq!(p.delta, rat(1, 108));
        assert_eq!(p.n1, 1);
        assert!(!p.clamped);
        assert_eq!(choose_params(&rat(1, 1), &m23(), &w(&[1, 1]), 0).unwrap().n0, 2);
        let p = choose_params(&rat(2, 1), &m23(), &w(&[1, 1]), 0).unwrap();
        assert!(p.clamped);
        assert_eq!(p.epsilon, rat(1, 1));
        let p = choose_params(&rat(1, 2), &m23(), &w(&[2, 3]), 0).unwrap();
        assert_eq!(p.n1, 6);
        assert_eq!(p.minimal_level, 1);
        assert!(p.n1_exceeds_n0());
        assert!(choose_params(&rat(0, 1), &m23(), &w(&[1, 1]), 0).is_err());
        let p = choose_params(&rat(1, 2), &Moduli::new(vec![4]).unwrap(), &w(&[2]), 0).unwrap();
        assert_eq!(p.closed_form_level, None);
        assert_eq!(p.n1, 1);
    }

    #[test]
    fn expansion_bound_behind_delta() {
        let pts = [
            vec![rat(1, 7), rat(2, 9)],
            vec![rat(3, 11), rat(5, 13)],
            vec![rat(0, 1), rat(1, 2)],
            vec![rat(99, 100), rat(1, 100)],
        ];
        let f3 = |p: &TorusPoint| crate::torus::apply_f_iter(p, &m23(), 3).unwrap();
        for a in &pts {
            for b in &pts {
                let (x, y) = (TorusPoint::from_rationals(a.clone()), TorusPoint::from_rationals(b.clone()));
                assert!(f3(&x).distance(&f3(&y)).unwrap() <= x.distance(&y).unwrap() * rat(27, 1));
            }
        }
    }

    fn small_tower(n0: u32, n1: u32, depth: u32) -> Tower {
        let s = w(&[1, 1]);
        let mut p = choose_params(&rat(1, 2), &m23(), &s, depth).unwrap();
        p.n0 = n0;
        p.n1 = n1;
        build_tower(&PLLoop::straight(&s), &p, &m23(), G).unwrap()
    }

    #[test]
    fn small_tower_levels() {
        let t = small_tower(1, 1, 1);
        assert_eq!(t.len(), 3);
        assert_eq!(*t.level(1), line(&[1, 1]));
        assert_eq!(*t.level(2), line(&[3, 2]));
        assert_eq!(*t.level(3), line(&[3, 2]).preimage(&m23()).unwrap());
        assert_eq!(small_tower(1, 1, 0).len(), 2);
        assert!(verify_tower(&t).unwrap().all_ok());
        assert_eq!(recipe_identity_check(&t, G).unwrap(), vec![true]);
    }

    #[test]
    fn full_tower_checks() {
        let s = w(&[1, 1]);
        let p = choose_params(&rat(1, 2), &m23(), &s, 2).unwrap();
        let t = build_tower(&PLLoop::straight(&s), &p, &m23(), G).unwrap();
        assert_eq!(t.len(), 6);
        let rep = verify_tower(&t).unwrap();
        assert!(rep.all_ok(), "{rep:?}");
        for f in &rep.levels[..2] {
            assert_eq!(f.bonding_equal, Some(true));
        }
        assert!(recipe_identity_check(&t, G).unwrap().iter().all(|&b| b));
    }

    #[test]
    fn corrupted_level_breaks_bonding() {
        let mut t = small_tower(1, 1, 1);
        let seg = t.level(2).segments()[0].clone();
        let mid = seg.at(&rat(1, 2));
        let half = TorusSegment::new(seg.start().to_vec(), mid).unwrap();
        t.levels[1] = SegmentSet::from_segments(2, [half]).unwrap();
        let rep = verify_tower(&t).unwrap();
        assert_eq!(rep.levels[1].bonding_contained, Some(false));
        assert!(!rep.all_ok());
    }

    #[test]
    fn low_n1_disconnects_first_preimage_level() {
        let s = w(&[2, 3]);
        let mut p = choose_params(&rat(1, 2), &m23(), &s, 1).unwrap();
        p.n1 = 0;
        let t = build_tower(&PLLoop::straight(&s), &p, &m23(), G).unwrap();
        let rep = verify_tower(&t).unwrap();
        let first_pre = &rep.levels[p.n0 as usize];
        assert!(!first_pre.connected);
        assert_eq!(first_pre.components, 6);
    }

    #[test]
    fn coherent_points() {
        let t = small_tower(1, 1, 1);
        let base = coherent_point_through(&t, 2, &TorusPoint::base(2)).unwrap();
        assert_eq!(base, SolenoidPoint::base(2, 3));
        let v = TorusPoint::from_rationals(vec![rat(1, 2), rat(1, 3)]);
        let p = coherent_point_through(&t, 2, &v).unwrap();
        assert_eq!(p.level(2), &v);
        for k in 1..=3 {
            assert!(t.level(k).contains_point(p.level(k)));
        }
        let off = TorusPoint::from_rationals(vec![rat(1, 5), rat(1, 7)]);
        assert_eq!(coherent_point_through(&t, 2, &off), Err(Error::MembershipFails(2)));
    }

    #[test]
    fn epsilon_checks() {
        let s = w(&[1, 1]);
        let p = choose_params(&rat(1, 2), &m23(), &s, 2).unwrap();
        let t = build_tower(&PLLoop::straight(&s), &p, &m23(), G).unwrap();
        let bases = grid_base_points(&t).unwrap();
        let one = epsilon_bound_check(&t, &bases[..1], &bases[..1]).unwrap();
        assert!(one.ok);
        assert_eq!(one.max_distance, crate::torus::tail_bound(t.len()));

        let cands = deep_candidates(&t, 20).unwrap();
        assert_eq!(cands.len(), 20);
        let sum = epsilon_bound_check(&t, &bases, &cands).unwrap();
        assert!(sum.ok, "{sum:?}");
        assert!(sum.max_distance < p.epsilon);

        // a single far base point: no δ-close match
        let far = coherent_point_through(&t, 3, &TorusPoint::from_rationals(vec![rat(1, 2), rat(1, 2)])).unwrap();
        let bad = epsilon_bound_check(&t, &[far], &bases[..1]).unwrap();
        assert!(!bad.ok);
        let shallow = SolenoidPoint::base(2, 1);
        assert!(matches!(
            epsilon_bound_check(&t, &[shallow], &bases[..1]),
            Err(Error::DepthTooSmall { .. })
        ));
    }
}
