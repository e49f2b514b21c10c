//! Conditional expectations of cylinder observables on Bernoulli shifts.
//!
//! Under a product measure, conditioning a cylinder `f` on the σ-algebra of a
//! coordinate set `S` integrates out the window coordinates outside `S`; the
//! result is again a cylinder, on `W ∩ S`.
//!
//! Half-space sets realize the filtration `𝒜_g`. A [`CoordSet::HalfSpace`]
//! stores its side explicitly: `AtOrAfter` is `{v : anchor ≤_Φ v}`, which
//! shrinks as the anchor moves up in `<_Φ`. Translates of observables by
//! `h ≥_Φ g` read coordinates `h + w ≥_Φ g + min_Φ(W)`, so the σ-algebra they
//! generate sits inside the half-space anchored at `g + min_Φ(W)`; see
//! [`CoordSet::generated_half_space`].

use std::collections::HashSet;

use num_traits::{Num, Signed, ToPrimitive};

use crate::error::{check_dim, Error, Result};
use crate::lattice::{phi_compare, phi_min, GroupElement, OrderOutcome, PastWeights};
use crate::systems::field::SymbolLaw;
use crate::systems::observable::{table_len, Cylinder, CylinderObservable};

/// Cap on `a^{|W \ S|}` for [`condition_cylinder`].
pub const MAX_MARGINALIZED: u128 = 1 << 24;
/// Cap on `a^{|W|}` for [`condition_oracle`].
pub const MAX_ORACLE: u128 = 1 << 16;
/// Tables up to this size are conditioned in exact rational arithmetic.
pub const EXACT_TABLE_LIMIT: u128 = 1 << 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HalfSpaceSide {
    /// `{v : anchor ≤_Φ v}`
    AtOrAfter,
    /// `{v : v <_Φ anchor}`
    Before,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoordSet {
    Explicit(HashSet<GroupElement>),
    HalfSpace {
        weights: PastWeights,
        anchor: GroupElement,
        side: HalfSpaceSide,
    },
}

impl CoordSet {
    pub fn explicit(coords: impl IntoIterator<Item = GroupElement>) -> Self {
        CoordSet::Explicit(coords.into_iter().collect())
    }

    /// `{v : anchor ≤_Φ v}`
    pub fn half_space(weights: PastWeights, anchor: GroupElement) -> Self {
        CoordSet::HalfSpace {
            weights,
            anchor,
            side: HalfSpaceSide::AtOrAfter,
        }
    }

    /// Half-space carrying the translates `h f_l` for all `h ≥_Φ g`, given the
    /// windows of the observables `f_l`.
    pub fn generated_half_space<'a>(
        weights: PastWeights,
        g: &GroupElement,
        windows: impl IntoIterator<Item = &'a [GroupElement]>,
    ) -> Result<Self> {
        let lowest = phi_min(&weights, windows.into_iter().flatten())?;
        let anchor = match lowest {
            Some(w) => g.checked_add(&w)?,
            None => g.clone(),
        };
        Ok(Self::half_space(weights, anchor))
    }

    pub fn contains(&self, v: &GroupElement) -> Result<bool> {
        match self {
            CoordSet::Explicit(set) => Ok(set.contains(v)),
            CoordSet::HalfSpace { weights, anchor, side } => {
                let at_or_after = phi_compare(weights, anchor, v)? != OrderOutcome::Greater;
                Ok(match side {
                    HalfSpaceSide::AtOrAfter => at_or_after,
                    HalfSpaceSide::Before => !at_or_after,
                })
            }
        }
    }

    /// `S + g`
    pub fn translated(&self, g: &GroupElement) -> Result<Self> {
        match self {
            CoordSet::Explicit(set) => Ok(CoordSet::Explicit(
                set.iter().map(|v| v.checked_add(g)).collect::<Result<_>>()?,
            )),
            CoordSet::HalfSpace { weights, anchor, side } => Ok(CoordSet::HalfSpace {
                weights: weights.clone(),
                anchor: anchor.checked_add(g)?,
                side: *side,
            }),
        }
    }
}

fn partition<T: Clone>(f: &Cylinder<T>, s: &CoordSet) -> Result<Vec<bool>> {
    f.window().iter().map(|v| s.contains(v)).collect()
}

/// `E(f | σ(x_v : v ∈ S))` by integrating out `W \ S` one coordinate at a time.
pub fn condition_cylinder<T>(f: &Cylinder<T>, s: &CoordSet, probs: &[T]) -> Result<Cylinder<T>>
where
    T: Num + Clone,
{
    check_dim(f.alphabet(), probs.len())?;
    let keep = partition(f, s)?;
    let dropped = keep.iter().filter(|&&k| !k).count();
    let needed = table_len(f.alphabet(), dropped).unwrap_or(u128::MAX);
    if needed > MAX_MARGINALIZED {
        return Err(Error::TooLarge {
            what: "marginalized coordinates",
            needed,
            cap: MAX_MARGINALIZED,
        });
    }

    let a = f.alphabet();
    let mut table = f.table().to_vec();
    // highest positions first so lower strides stay valid
    for pos in (0..keep.len()).rev().filter(|&p| !keep[p]) {
        let stride = a.pow(pos as u32);
        let block = stride * a;
        let mut next = Vec::with_capacity(table.len() / a);
        for hi in 0..table.len() / block {
            for lo in 0..stride {
                let base = hi * block + lo;
                let mut acc = T::zero();
                for (sym, p) in probs.iter().enumerate() {
                    acc = acc + p.clone() * table[base + sym * stride].clone();
                }
                next.push(acc);
            }
        }
        table = next;
    }
    let window = f
        .window()
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(v, _)| v.clone())
        .collect();
    Cylinder::new(f.dim(), a, window, table)
}

/// Same conditional expectation by full enumeration of `alphabet^W`, grouping
/// by the restriction to `W ∩ S` and dividing by its marginal probability.
/// Restrictions of probability zero get the value 0.
pub fn condition_oracle<T>(f: &Cylinder<T>, s: &CoordSet, probs: &[T]) -> Result<Cylinder<T>>
where
    T: Num + Clone,
{
    check_dim(f.alphabet(), probs.len())?;
    let a = f.alphabet();
    let width = f.window().len();
    let needed = table_len(a, width).unwrap_or(u128::MAX);
    if needed > MAX_ORACLE {
        return Err(Error::TooLarge {
            what: "oracle enumeration",
            needed,
            cap: MAX_ORACLE,
        });
    }
    let keep = partition(f, s)?;
    let kept = keep.iter().filter(|&&k| k).count();
    let out_len = a.pow(kept as u32);
    let mut num = vec![T::zero(); out_len];
    let mut den = vec![T::zero(); out_len];
    let mut digits = vec![0usize; width];
    for (idx, value) in f.table().iter().enumerate() {
        let mut rest = idx;
        for d in digits.iter_mut() {
            *d = rest % a;
            rest /= a;
        }
        let weight = digits.iter().fold(T::one(), |w, &d| w * probs[d].clone());
        let restricted = digits
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .rev()
            .fold(0usize, |acc, (&d, _)| acc * a + d);
        num[restricted] = num[restricted].clone() + weight.clone() * value.clone();
        den[restricted] = den[restricted].clone() + weight;
    }
    let table = num
        .into_iter()
        .zip(den)
        .map(|(n, d)| if d.is_zero() { T::zero() } else { n / d })
        .collect();
    let window = f
        .window()
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(v, _)| v.clone())
        .collect();
    Cylinder::new(f.dim(), a, window, table)
}

/// Conditions a float observable, exactly in rationals when the table is small.
pub fn condition_observable(f: &CylinderObservable, s: &CoordSet, law: &SymbolLaw) -> Result<CylinderObservable> {
    if table_len(f.alphabet(), f.window().len()).unwrap_or(u128::MAX) <= EXACT_TABLE_LIMIT {
        let exact = condition_cylinder(&f.to_exact()?, s, law.exact())?;
        Ok(exact.map(|v| v.to_f64().unwrap_or(f64::NAN)))
    } else {
        condition_cylinder(f, s, law.probs())
    }
}

/// Re-expresses `g` (window `W'`) on a superset window `W ⊇ W'`.
pub fn lift_to_window<T>(g: &Cylinder<T>, window: &[GroupElement]) -> Result<Cylinder<T>>
where
    T: Num + Clone,
{
    let a = g.alphabet();
    let positions = g
        .window()
        .iter()
        .map(|v| {
            window
                .iter()
                .position(|w| w == v)
                .ok_or_else(|| Error::InvalidArgument(format!("{v} is not in the target window")))
        })
        .collect::<Result<Vec<_>>>()?;
    let len = table_len(a, window.len()).unwrap_or(u128::MAX);
    if len > crate::systems::observable::MAX_TABLE {
        return Err(Error::TooLarge {
            what: "lifted table",
            needed: len,
            cap: crate::systems::observable::MAX_TABLE,
        });
    }
    let mut table = Vec::with_capacity(len as usize);
    let mut digits = vec![0usize; window.len()];
    for idx in 0..len as usize {
        let mut rest = idx;
        for d in digits.iter_mut() {
            *d = rest % a;
            rest /= a;
        }
        let src = positions.iter().rev().fold(0usize, |acc, &p| acc * a + digits[p]);
        table.push(g.table()[src].clone());
    }
    Cylinder::new(g.dim(), a, window.to_vec(), table)
}

/// `f - g` where `g`'s window is contained in `f`'s.
pub fn difference<T>(f: &Cylinder<T>, g: &Cylinder<T>) -> Result<Cylinder<T>>
where
    T: Num + Clone,
{
    let lifted = lift_to_window(g, f.window())?;
    let table = f
        .table()
        .iter()
        .zip(lifted.table())
        .map(|(a, b)| a.clone() - b.clone())
        .collect();
    Cylinder::new(f.dim(), f.alphabet(), f.window().to_vec(), table)
}

/// `∫ |f - c| dμ`
pub fn l1_distance_to_constant<T>(f: &Cylinder<T>, c: &T, probs: &[T]) -> T
where
    T: Num + Signed + Clone,
{
    let centered = f.map(|v| (v.clone() - c.clone()).abs());
    crate::systems::observable::product_measure_sum(&centered, probs)
}

/// `E(f | 𝒜_{g_k})` along anchors `g_1 <_Φ g_2 <_Φ …`; the half-spaces
/// `{v : g_k ≤_Φ v}` shrink, and once one misses the whole window the term is
/// the constant `∫ f dμ`.
pub fn martingale_tail<T>(
    f: &Cylinder<T>,
    w: &PastWeights,
    anchors: &[GroupElement],
    probs: &[T],
) -> Result<Vec<Cylinder<T>>>
where
    T: Num + Clone,
{
    for pair in anchors.windows(2) {
        if phi_compare(w, &pair[0], &pair[1])? != OrderOutcome::Less {
            return Err(Error::InvalidArgument(format!(
                "anchors must be strictly increasing in the past order: {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    anchors
        .iter()
        .map(|g| condition_cylinder(f, &CoordSet::half_space(w.clone(), g.clone()), probs))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::observable::product_measure_sum;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, Zero};
    use proptest::prelude::*;

    fn ge(c: &[i128]) -> GroupElement {
        GroupElement::new(c.to_vec())
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn half() -> Vec<BigRational> {
        vec![q(1, 2), q(1, 2)]
    }

    #[test]
    fn drop_one_coordinate() {
        let f = CylinderObservable::indicator(2, 2, vec![ge(&[0, 0]), ge(&[1, 0])], &[1, 1])
            .unwrap()
            .to_exact()
            .unwrap();
        let s = CoordSet::explicit([ge(&[0, 0])]);
        let e = condition_cylinder(&f, &s, &half()).unwrap();
        assert_eq!(e.window(), &[ge(&[0, 0])]);
        assert_eq!(e.table(), &[q(0, 1), q(1, 2)]);
        assert_eq!(condition_oracle(&f, &s, &half()).unwrap(), e);
    }

    #[test]
    fn full_and_empty_sets() {
        let f = CylinderObservable::indicator(1, 2, vec![ge(&[0]), ge(&[3])], &[1, 0])
            .unwrap()
            .to_exact()
            .unwrap();
        let all = CoordSet::explicit([ge(&[0]), ge(&[3]), ge(&[9])]);
        assert_eq!(condition_cylinder(&f, &all, &half()).unwrap(), f);
        let none = CoordSet::explicit([ge(&[5])]);
        let c = condition_cylinder(&f, &none, &half()).unwrap();
        assert!(c.is_constant_window());
        assert_eq!(c.table(), &[q(1, 4)]);
    }

    #[test]
    fn constant_stays_constant() {
        let f = Cylinder::constant(2, 3, q(7, 3));
        let probs = vec![q(1, 3), q(1, 3), q(1, 3)];
        let s = CoordSet::explicit([ge(&[0, 0])]);
        assert_eq!(condition_cylinder(&f, &s, &probs).unwrap(), f);
        assert_eq!(condition_oracle(&f, &s, &probs).unwrap(), f);
    }

    #[test]
    fn guards() {
        let window: Vec<GroupElement> = (0..17).map(|i| ge(&[i])).collect();
        let f = Cylinder::new(1, 2, window, vec![0.0; 1 << 17]).unwrap();
        let none = CoordSet::explicit([]);
        assert!(matches!(condition_oracle(&f, &none, &[0.5, 0.5]), Err(Error::TooLarge { .. })));
        assert!(condition_cylinder(&f, &none, &[0.5, 0.5]).is_ok());
        assert!(condition_cylinder(&f, &none, &[0.5, 0.25, 0.25]).is_err());
    }

    #[test]
    fn half_space_membership_and_sides() {
        let w = PastWeights::new(vec![1, 2]).unwrap();
        let s = CoordSet::half_space(w.clone(), ge(&[1, 0]));
        assert!(!s.contains(&ge(&[0, 0])).unwrap());
        assert!(s.contains(&ge(&[1, 0])).unwrap());
        assert!(s.contains(&ge(&[0, 1])).unwrap());
        let before = CoordSet::HalfSpace {
            weights: w,
            anchor: ge(&[1, 0]),
            side: HalfSpaceSide::Before,
        };
        assert!(before.contains(&ge(&[0, 0])).unwrap());
        assert!(!before.contains(&ge(&[1, 0])).unwrap());
    }

    #[test]
    fn worked_example_orientation() {
        // past order with weights (1,2): (n², -n²) lies below (3n², 8n²)
        let w = PastWeights::new(vec![1, 2]).unwrap();
        for n in 1..20i128 {
            let low = ge(&[n * n, -n * n]);
            let high = ge(&[3 * n * n, 8 * n * n]);
            let s = CoordSet::half_space(w.clone(), low.clone());
            assert!(s.contains(&high).unwrap());
            let s = CoordSet::half_space(w.clone(), high);
            assert!(!s.contains(&low).unwrap());
        }
    }

    #[test]
    fn generated_half_space_uses_lowest_window_point() {
        let w = PastWeights::new(vec![1, 2]).unwrap();
        let windows = [vec![ge(&[0, 0]), ge(&[0, 1])], vec![ge(&[-1, 0])]];
        let s = CoordSet::generated_half_space(w.clone(), &ge(&[5, 5]), windows.iter().map(Vec::as_slice)).unwrap();
        assert_eq!(s, CoordSet::half_space(w, ge(&[4, 5])));
    }

    #[test]
    fn martingale_tail_d1() {
        let w = PastWeights::new(vec![1]).unwrap();
        let window: Vec<GroupElement> = (0..4).map(|i| ge(&[i])).collect();
        let table: Vec<BigRational> = (0..16).map(|i| q((i * 5 % 7) as i64, 3)).collect();
        let f = Cylinder::new(1, 2, window, table).unwrap();
        let anchors: Vec<GroupElement> = (1..=5).map(|k| ge(&[k])).collect();
        let terms = martingale_tail(&f, &w, &anchors, &half()).unwrap();
        let mean = product_measure_sum(&f, &half());
        for (k, t) in terms.iter().enumerate() {
            assert_eq!(t.window().len(), 3usize.saturating_sub(k));
        }
        for t in &terms[3..] {
            assert!(t.is_constant_window());
            assert_eq!(t.table()[0], mean);
        }
        let reversed: Vec<GroupElement> = anchors.into_iter().rev().collect();
        assert!(martingale_tail(&f, &w, &reversed, &half()).is_err());
    }

    #[test]
    fn lift_and_difference() {
        let f = Cylinder::new(1, 2, vec![ge(&[0]), ge(&[1])], vec![q(0, 1), q(1, 1), q(2, 1), q(3, 1)]).unwrap();
        let g = Cylinder::new(1, 2, vec![ge(&[1])], vec![q(10, 1), q(20, 1)]).unwrap();
        let lifted = lift_to_window(&g, f.window()).unwrap();
        assert_eq!(lifted.table(), &[q(10, 1), q(10, 1), q(20, 1), q(20, 1)]);
        let d = difference(&f, &g).unwrap();
        assert_eq!(d.table(), &[q(-10, 1), q(-9, 1), q(-18, 1), q(-17, 1)]);
        assert!(lift_to_window(&g, &[ge(&[0])]).is_err());
    }

    #[test]
    fn float_observable_uses_exact_path() {
        let law = SymbolLaw::from_f64(vec![0.1, 0.9]).unwrap();
        let f = CylinderObservable::new(1, 2, vec![ge(&[0]), ge(&[1])], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let e = condition_observable(&f, &CoordSet::explicit([ge(&[1])]), &law).unwrap();
        let exact = condition_cylinder(&f.to_exact().unwrap(), &CoordSet::explicit([ge(&[1])]), law.exact()).unwrap();
        assert_eq!(e.table()[0], exact.table()[0].to_f64().unwrap());
    }

    // random small instances: window of up to 6 points in a 1-d box, S a random subset
    fn instance() -> impl Strategy<Value = (Cylinder<BigRational>, Vec<bool>, Vec<BigRational>)> {
        (1usize..=6, 1i64..16).prop_flat_map(|(width, p_num)| {
            (
                prop::collection::vec(-20i64..20, 1usize << width),
                prop::collection::vec(any::<bool>(), width),
                Just(width),
                Just(p_num),
            )
                .prop_map(|(vals, keep, width, p_num)| {
                    let window = (0..width as i128).map(|i| ge(&[3 * i - 4])).collect();
                    let table = vals.into_iter().map(|v| q(v, 3)).collect();
                    let probs = vec![q(p_num, 16), q(16 - p_num, 16)];
                    (Cylinder::new(1, 2, window, table).unwrap(), keep, probs)
                })
        })
    }

    fn subset(f: &Cylinder<BigRational>, keep: &[bool]) -> CoordSet {
        CoordSet::explicit(
            f.window()
                .iter()
                .zip(keep)
                .filter(|(_, &k)| k)
                .map(|(v, _)| v.clone()),
        )
    }

    proptest! {
        #[test]
        fn oracle_agrees((f, keep, probs) in instance()) {
            let s = subset(&f, &keep);
            prop_assert_eq!(condition_cylinder(&f, &s, &probs).unwrap(), condition_oracle(&f, &s, &probs).unwrap());
        }

        #[test]
        fn mean_and_contraction((f, keep, probs) in instance()) {
            let s = subset(&f, &keep);
            let e = condition_cylinder(&f, &s, &probs).unwrap();
            prop_assert_eq!(product_measure_sum(&e, &probs), product_measure_sum(&f, &probs));
            let sup = |c: &Cylinder<BigRational>| c.table().iter().map(|v| v.abs()).max().unwrap_or_else(BigRational::zero);
            prop_assert!(sup(&e) <= sup(&f));
        }

        #[test]
        fn tower((f, keep, probs) in instance(), inner in prop::collection::vec(any::<bool>(), 6)) {
            let outer = subset(&f, &keep);
            let both: Vec<bool> = keep.iter().zip(&inner).map(|(a, b)| *a && *b).collect();
            let inner_set = subset(&f, &both);
            let twice = condition_cylinder(&condition_cylinder(&f, &outer, &probs).unwrap(), &inner_set, &probs).unwrap();
            prop_assert_eq!(twice, condition_cylinder(&f, &inner_set, &probs).unwrap());
        }

        #[test]
        fn oracle_is_linear((f, keep, probs) in instance(), alpha in -5i64..5, beta in -5i64..5) {
            let s = subset(&f, &keep);
            let g = f.map(|v| v * v - BigRational::one());
            let combo = Cylinder::new(1, 2, f.window().to_vec(), f.table().iter().zip(g.table()).map(|(a, b)| a * q(alpha, 1) + b * q(beta, 1)).collect()).unwrap();
            let lhs = condition_oracle(&combo, &s, &probs).unwrap();
            let (ef, eg) = (condition_oracle(&f, &s, &probs).unwrap(), condition_oracle(&g, &s, &probs).unwrap());
            let rhs: Vec<BigRational> = ef.table().iter().zip(eg.table()).map(|(a, b)| a * q(alpha, 1) + b * q(beta, 1)).collect();
            prop_assert_eq!(lhs.table(), rhs.as_slice());
        }

        #[test]
        fn translation_commutes((f, keep, probs) in instance(), shift in -1000i128..1000) {
            let g = ge(&[shift]);
            let s = subset(&f, &keep);
            let moved = condition_cylinder(&f.translated(&g).unwrap(), &s.translated(&g).unwrap(), &probs).unwrap();
            prop_assert_eq!(moved, condition_cylinder(&f, &s, &probs).unwrap().translated(&g).unwrap());
        }

        #[test]
        fn tail_distances_shrink((f, _keep, probs) in instance(), start in -10i128..0) {
            let w = PastWeights::new(vec![1]).unwrap();
            let anchors: Vec<GroupElement> = (0..30).map(|k| ge(&[start + k])).collect();
            let mean = product_measure_sum(&f, &probs);
            let dists: Vec<BigRational> = martingale_tail(&f, &w, &anchors, &probs)
                .unwrap()
                .iter()
                .map(|t| l1_distance_to_constant(t, &mean, &probs))
                .collect();
            prop_assert!(dists.windows(2).all(|p| p[1] <= p[0]));
            prop_assert!(dists.last().unwrap().is_zero());
        }
    }
}
