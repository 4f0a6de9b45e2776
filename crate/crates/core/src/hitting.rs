//! Certificate levels for lifted loops: when every `f`-preimage of `1⁻` is
//! reached at an integer time, and when the preimage of a lifted image is the
//! next lifted image and stays connected.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::arith::{crt_solve, gcd_certificate_condition, mod_inverse, m_adic_decomposition, Moduli};
use crate::error::{Error, Result};
use crate::lifting::{image_period, image_set_guarded, sigma_at, PLLoop, WindingVector};
use crate::torus::{check_dim, index_vectors, TorusPoint};

/// Bookkeeping of the closed-form witness `k = u·x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedFormRecipe {
    /// `s_i = m_i^{alpha_i} q_i`.
    pub alpha: Vec<u32>,
    pub q: Vec<BigInt>,
    /// `beta_i = n - alpha_i`.
    pub beta: Vec<u32>,
    /// `u = prod m_i^{beta_i}`.
    pub u: BigInt,
    /// `u_i = u / m_i^{beta_i}`.
    pub u_i: Vec<BigInt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HittingCertificate {
    pub s: WindingVector,
    pub moduli: Moduli,
    pub n: u32,
    /// Preimage index `j` to a time `k` with `γ^{(n+1)}(k) = (j_1/m_1, ..., j_r/m_r)`.
    pub witnesses: BTreeMap<Vec<u64>, BigInt>,
    pub recipe: Option<ClosedFormRecipe>,
}

impl HittingCertificate {
    /// Builds a witness for each of the `prod m_i` preimages of `1⁻`.
    pub fn build(s: &WindingVector, moduli: &Moduli, n: u32) -> Result<Self> {
        check_dim(moduli.rank(), s.rank())?;
        s.require_admissible()?;
        if !level_condition(s, moduli, n) {
            return Err(Error::ConditionFails(n));
        }
        let recipe = closed_form_recipe(s, moduli, n);
        let mut witnesses = BTreeMap::new();
        for j in index_vectors(moduli.values()) {
            let k = crt_witness(s, moduli, n, &j)?;
            witnesses.insert(j, k);
        }
        Ok(HittingCertificate {
            s: s.clone(),
            moduli: moduli.clone(),
            n,
            witnesses,
            recipe,
        })
    }

    /// Re-evaluates `σ(s, n+1)(k)` for every witness.
    pub fn verify(&self) -> bool {
        let expected = index_vectors(self.moduli.values());
        if self.witnesses.len() != expected.len() {
            return false;
        }
        expected.iter().all(|j| match self.witnesses.get(j) {
            Some(k) => {
                !k.is_negative()
                    && sigma_at(&self.s, self.n + 1, &self.moduli, k) == preimage_point(&self.moduli, j)
            }
            None => false,
        })
    }
}

/// `(j_1/m_1, ..., j_r/m_r)`.
pub fn preimage_point(moduli: &Moduli, j: &[u64]) -> TorusPoint {
    TorusPoint::from_rationals(
        j.iter()
            .zip(moduli.values())
            .map(|(&a, &m)| crate::arith::Rational::new(a.into(), m.into()))
            .collect(),
    )
}

fn level_condition(s: &WindingVector, moduli: &Moduli, n: u32) -> bool {
    (0..s.rank()).all(|i| gcd_certificate_condition(&s.big(i), moduli.get(i), n))
}

/// `N = (m_1 ⋯ m_r)^α` with `α = max α_i`.
pub fn closed_form_level(s: &WindingVector, moduli: &Moduli) -> Result<BigInt> {
    check_dim(moduli.rank(), s.rank())?;
    s.require_admissible()?;
    Ok(num_traits::pow(moduli.product(), closed_form_alpha(s, moduli)? as usize))
}

/// `max_i α_i`, the exponent behind [`closed_form_level`].
pub fn closed_form_alpha(s: &WindingVector, moduli: &Moduli) -> Result<u32> {
    let mut alpha = 0;
    for i in 0..s.rank() {
        alpha = alpha.max(m_adic_decomposition(&s.big(i), moduli.get(i))?.alpha);
    }
    Ok(alpha)
}

/// Least `n <= n_max` at which every coordinate satisfies the gcd criterion.
pub fn minimal_level(s: &WindingVector, moduli: &Moduli, n_max: u32) -> Result<u32> {
    check_dim(moduli.rank(), s.rank())?;
    s.require_admissible()?;
    (0..=n_max)
        .find(|&n| level_condition(s, moduli, n))
        .ok_or(Error::NotFoundWithin(n_max))
}

/// The closed-form bookkeeping, when every coordinate decomposes and
/// `n >= α_i` for all `i`.
pub fn closed_form_recipe(s: &WindingVector, moduli: &Moduli, n: u32) -> Option<ClosedFormRecipe> {
    let mut alpha = Vec::new();
    let mut q = Vec::new();
    for i in 0..s.rank() {
        let d = m_adic_decomposition(&s.big(i), moduli.get(i)).ok()?;
        if d.alpha > n {
            return None;
        }
        alpha.push(d.alpha);
        q.push(d.q);
    }
    let beta: Vec<u32> = alpha.iter().map(|a| n - a).collect();
    let powers: Vec<BigInt> = (0..s.rank()).map(|i| moduli.power(i, beta[i])).collect();
    let u: BigInt = powers.iter().product();
    let u_i = powers.iter().map(|p| &u / p).collect();
    Some(ClosedFormRecipe { alpha, q, beta, u, u_i })
}

/// Least-effort `k >= 0` with `σ(s, n+1)(k) = (j_1/m_1, ..., j_r/m_r)`.
///
/// Uses `k = u·x` with `u_i q_i x ≡ j_i (mod m_i)` when the closed form
/// applies, and otherwise solves `s_i k ≡ j_i m_i^n (mod m_i^{n+1})` for each
/// `i` and combines the answers.
pub fn crt_witness(s: &WindingVector, moduli: &Moduli, n: u32, j: &[u64]) -> Result<BigInt> {
    check_dim(moduli.rank(), s.rank())?;
    check_dim(moduli.rank(), j.len())?;
    s.require_admissible()?;
    if j.iter().zip(moduli.values()).any(|(a, m)| a >= m) {
        return Err(Error::PreconditionViolated("index out of range".into()));
    }
    if !level_condition(s, moduli, n) {
        return Err(Error::ConditionFails(n));
    }
    if let Some(rec) = closed_form_recipe(s, moduli, n) {
        let mut residues = Vec::new();
        let mut mods = Vec::new();
        for i in 0..s.rank() {
            let m = BigInt::from(moduli.get(i));
            let coeff = &rec.u_i[i] * &rec.q[i];
            let inv = mod_inverse(&coeff, &m).expect("u_i q_i is a unit mod m_i");
            residues.push((BigInt::from(j[i]) * inv).mod_floor(&m));
            mods.push(m);
        }
        return Ok(&rec.u * crt_solve(&residues, &mods)?);
    }
    let mut residues = Vec::new();
    let mut mods = Vec::new();
    for i in 0..s.rank() {
        let mn = moduli.power(i, n);
        let mn1 = moduli.power(i, n + 1);
        let si = s.big(i);
        let g = si.gcd(&mn1);
        let rhs = BigInt::from(j[i]) * &mn;
        debug_assert!(rhs.is_multiple_of(&g));
        let reduced = &mn1 / &g;
        let inv = mod_inverse(&(&si / &g), &reduced).expect("reduced coefficient is a unit");
        residues.push(((rhs / &g) * inv).mod_floor(&reduced));
        mods.push(reduced);
    }
    crt_solve(&residues, &mods)
}

/// Which preimages of `1⁻` the lifted loop hits at integer times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HitProfile {
    pub hit: BTreeSet<TorusPoint>,
    pub total: usize,
    pub period: BigInt,
}

impl HitProfile {
    pub fn complete(&self) -> bool {
        self.hit.len() == self.total
    }
}

/// Sweeps `σ(s, n+1)(k)` over one period.
pub fn hit_profile(s: &WindingVector, moduli: &Moduli, n: u32, guard: u64) -> Result<HitProfile> {
    check_dim(moduli.rank(), s.rank())?;
    s.require_admissible()?;
    let needed = moduli.product_power(n + 1);
    if needed > BigInt::from(guard) {
        return Err(Error::SizeGuardExceeded {
            needed: needed.to_string(),
            limit: guard,
        });
    }
    let period = image_period(s, n + 1, moduli)?;
    let total = u64::try_from(moduli.product()).expect("bounded by guard") as usize;
    let mut hit = BTreeSet::new();
    let mut k = BigInt::zero();
    while k < period {
        let p = sigma_at(s, n + 1, moduli, &k);
        if crate::torus::apply_f(&p, moduli)?.is_base() {
            hit.insert(p);
        }
        k += BigInt::one();
    }
    Ok(HitProfile { hit, total, period })
}

/// True iff every `f`-preimage of `1⁻` is `σ(s, n+1)(k)` for some integer `k`.
pub fn hitting_check(s: &WindingVector, moduli: &Moduli, n: u32, guard: u64) -> Result<bool> {
    Ok(hit_profile(s, moduli, n, guard)?.complete())
}

/// `f^{-1}(Im γ^{(n)}) = Im γ^{(n+1)}` as canonical sets.
pub fn preimage_equality_check(l: &PLLoop, moduli: &Moduli, n: u32, guard: u64) -> Result<bool> {
    let lower = image_set_guarded(l, n, moduli, None, guard)?;
    let upper = image_set_guarded(l, n + 1, moduli, None, guard)?;
    Ok(lower.preimage(moduli)? == upper)
}

/// `Im γ^{(n+1)} ⊆ f^{-1}(Im γ^{(n)})`, which holds for every `n`.
pub fn preimage_containment_check(l: &PLLoop, moduli: &Moduli, n: u32, guard: u64) -> Result<bool> {
    let lower = image_set_guarded(l, n, moduli, None, guard)?;
    let upper = image_set_guarded(l, n + 1, moduli, None, guard)?;
    Ok(upper.is_subset(&lower.preimage(moduli)?))
}

/// Connectedness and component count of `f^{-1}(Im γ^{(n)})`.
pub fn preimage_connected_check(l: &PLLoop, moduli: &Moduli, n: u32, guard: u64) -> Result<(bool, usize)> {
    let pre = image_set_guarded(l, n, moduli, None, guard)?.preimage(moduli)?;
    let count = pre.component_count();
    Ok((count == 1, count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifting::{sigma_points, DEFAULT_SIZE_GUARD};
    use proptest::prelude::*;

    const G: u64 = DEFAULT_SIZE_GUARD;

    fn m(v: &[u64]) -> Moduli {
        Moduli::new(v.to_vec()).unwrap()
    }

    fn w(v: &[i64]) -> WindingVector {
        WindingVector::new(v.to_vec())
    }

    /// First `k` in `0..bound` with `σ(s, n+1)(k)` equal to the target.
    fn brute_witness(s: &WindingVector, moduli: &Moduli, n: u32, j: &[u64], bound: u64) -> Option<u64> {
        let target = preimage_point(moduli, j);
        (0..bound).find(|&k| sigma_at(s, n + 1, moduli, &BigInt::from(k)) == target)
    }

    #[test]
    fn closed_form_level_examples() {
        assert_eq!(closed_form_level(&w(&[2, 3]), &m(&[2, 3])).unwrap(), BigInt::from(6));
        assert_eq!(closed_form_level(&w(&[1, 1]), &m(&[2, 3])).unwrap(), BigInt::from(1));
        assert!(matches!(closed_form_level(&w(&[2]), &m(&[4])), Err(Error::NoDecomposition { .. })));
    }

    #[test]
    fn minimal_level_examples() {
        assert_eq!(minimal_level(&w(&[2, 3]), &m(&[2, 3]), 10).unwrap(), 1);
        assert_eq!(minimal_level(&w(&[1, 1]), &m(&[2, 3]), 10).unwrap(), 0);
        assert_eq!(minimal_level(&w(&[8]), &m(&[2]), 10).unwrap(), 3);
        assert_eq!(minimal_level(&w(&[2]), &m(&[4]), 10).unwrap(), 1);
        assert_eq!(minimal_level(&w(&[8]), &m(&[2]), 2), Err(Error::NotFoundWithin(2)));
        for n in 0..6 {
            let brute = (0..2u64).all(|j| brute_witness(&w(&[8]), &m(&[2]), n, &[j], 1 << (n + 1)).is_some());
            assert_eq!(brute, n >= 3);
        }
    }

    #[test]
    fn witness_examples() {
        let (s, mm) = (w(&[2, 3]), m(&[2, 3]));
        let k = crt_witness(&s, &mm, 1, &[1, 2]).unwrap();
        assert_eq!(k, BigInt::from(5));
        assert_eq!(sigma_at(&s, 2, &mm, &k), preimage_point(&mm, &[1, 2]));
        assert_eq!(crt_witness(&s, &mm, 1, &[0, 0]).unwrap(), BigInt::zero());
        assert_eq!(crt_witness(&s, &mm, 0, &[1, 0]), Err(Error::ConditionFails(0)));

        let rec = closed_form_recipe(&s, &mm, 6).unwrap();
        assert_eq!(rec.alpha, vec![1, 1]);
        assert_eq!(rec.q, vec![BigInt::one(), BigInt::one()]);
        assert_eq!(rec.beta, vec![5, 5]);
        assert_eq!(rec.u, BigInt::from(32 * 243));
        assert_eq!(rec.u_i, vec![BigInt::from(243), BigInt::from(32)]);
        let cert = HittingCertificate::build(&s, &mm, 6).unwrap();
        assert!(cert.verify());
        for (j, k) in &cert.witnesses {
            assert!(k.is_multiple_of(&rec.u));
            assert_eq!(sigma_at(&s, 7, &mm, k), preimage_point(&mm, j));
        }
    }

    #[test]
    fn undecomposable_uses_general_route() {
        let (s, mm) = (w(&[2]), m(&[4]));
        assert!(closed_form_recipe(&s, &mm, 1).is_none());
        let cert = HittingCertificate::build(&s, &mm, 1).unwrap();
        assert!(cert.verify());
        assert_eq!(cert.witnesses.len(), 4);
    }

    #[test]
    fn tampered_certificate_fails() {
        let mut cert = HittingCertificate::build(&w(&[1, 1]), &m(&[2, 3]), 0).unwrap();
        assert!(cert.verify());
        let key = cert.witnesses.keys().nth(1).unwrap().clone();
        *cert.witnesses.get_mut(&key).unwrap() += 1;
        assert!(!cert.verify());
    }

    #[test]
    fn hitting_examples() {
        let mm = m(&[2, 3]);
        let p = hit_profile(&w(&[2, 3]), &mm, 0, G).unwrap();
        assert_eq!(p.hit.len(), 1);
        assert_eq!(p.total, 6);
        assert!(hitting_check(&w(&[2, 3]), &mm, 1, G).unwrap());
        assert!(hitting_check(&w(&[1, 1]), &mm, 0, G).unwrap());
        assert!(matches!(
            hitting_check(&w(&[2, 3]), &mm, 3, 100),
            Err(Error::SizeGuardExceeded { .. })
        ));
    }

    #[test]
    fn preimage_examples() {
        let mm = m(&[2, 3]);
        let l23 = PLLoop::straight(&w(&[2, 3]));
        assert!(!preimage_equality_check(&l23, &mm, 0, G).unwrap());
        assert_eq!(preimage_connected_check(&l23, &mm, 0, G).unwrap(), (false, 6));
        for n in 1..=3 {
            assert!(preimage_equality_check(&l23, &mm, n, G).unwrap());
            assert_eq!(preimage_connected_check(&l23, &mm, n, G).unwrap(), (true, 1));
        }
        let l11 = PLLoop::straight(&w(&[1, 1]));
        assert!(preimage_equality_check(&l11, &mm, 0, G).unwrap());
        assert_eq!(preimage_connected_check(&l11, &mm, 0, G).unwrap(), (true, 1));
        assert!(preimage_containment_check(&l23, &mm, 0, G).unwrap());
    }

    #[test]
    fn verdicts_at_and_above_the_level_do_not_depend_on_loop_shape() {
        let mm = m(&[2, 3]);
        let r = |p: i64, q: i64| crate::arith::rat(p, q);
        let bent = PLLoop::new(vec![
            vec![r(0, 1), r(0, 1)],
            vec![r(5, 3), r(-1, 2)],
            vec![r(2, 1), r(3, 1)],
        ])
        .unwrap();
        let straight = PLLoop::straight(&w(&[2, 3]));
        for n in 1..=2 {
            assert!(preimage_equality_check(&bent, &mm, n, G).unwrap());
            assert_eq!(preimage_connected_check(&bent, &mm, n, G).unwrap(), (true, 1));
            assert!(preimage_equality_check(&straight, &mm, n, G).unwrap());
        }
        assert!(!preimage_equality_check(&bent, &mm, 0, G).unwrap());
        // below the level the copies of a bent loop can cross each other
        let (connected, _) = preimage_connected_check(&bent, &mm, 0, G).unwrap();
        assert!(connected);
        assert!(!preimage_connected_check(&straight, &mm, 0, G).unwrap().0);
    }

    fn small_case() -> impl Strategy<Value = (Vec<u64>, Vec<i64>)> {
        prop_oneof![
            Just(vec![2u64]),
            Just(vec![3u64]),
            Just(vec![4u64]),
            Just(vec![2u64, 3]),
            Just(vec![3u64, 4]),
            Just(vec![2u64, 5]),
        ]
        .prop_flat_map(|mm| {
            let r = mm.len();
            (Just(mm), prop::collection::vec(prop_oneof![1i64..=12, -12i64..=-1], r))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn gcd_criterion_agrees_with_sweep((mm, s) in small_case(), n in 0u32..3) {
            let (mm, s) = (m(&mm), w(&s));
            let sweep = hitting_check(&s, &mm, n, G).unwrap();
            prop_assert_eq!(sweep, level_condition(&s, &mm, n));
            if sweep {
                let cert = HittingCertificate::build(&s, &mm, n).unwrap();
                prop_assert!(cert.verify());
            }
        }

        #[test]
        fn closed_form_level_is_conservative((mm, s) in small_case()) {
            let (mm, s) = (m(&mm), w(&s));
            let min = minimal_level(&s, &mm, 64).unwrap();
            if let Ok(alpha) = closed_form_alpha(&s, &mm) {
                let n = closed_form_level(&s, &mm).unwrap();
                prop_assert!(n >= BigInt::from(min));
                prop_assert!(level_condition(&s, &mm, alpha));
                let n = u32::try_from(n).unwrap();
                prop_assert!(level_condition(&s, &mm, n));
            }
            let p = image_period(&s, min + 1, &mm).unwrap();
            let p = u64::try_from(p).unwrap();
            let pts: BTreeSet<TorusPoint> = sigma_points(&s, min + 1, &mm, p).unwrap().into_iter().collect();
            for j in index_vectors(mm.values()) {
                prop_assert!(pts.contains(&preimage_point(&mm, &j)));
            }
        }
    }
}
