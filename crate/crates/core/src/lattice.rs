//! Points of Z^d, the weighted algebraic past and its total order.
//!
//! For positive weights `A_1, …, A_d` the past `Φ` contains `g` when, scanning
//! the partial sums `t_k(g) = Σ_{l ≤ d-k} A_l g_l` for `k = 0, 1, …, d-1`, the
//! first nonzero one is negative. The order is `g1 < g2` iff `g1 - g2 ∈ Φ`.
//! All comparisons are exact integer arithmetic.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::polys::{check_nondegeneracy, IntPoly, PolynomialFamily};

/// Exponent vector `(n_1, …, n_d)` standing for `T_1^{n_1} ⋯ T_d^{n_d}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupElement(Vec<i128>);

impl<const N: usize> From<[i128; N]> for GroupElement {
    fn from(c: [i128; N]) -> Self {
        Self(c.to_vec())
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl GroupElement {
    pub fn new(coords: Vec<i128>) -> Self {
        Self(coords)
    }

    pub fn zero(d: usize) -> Self {
        Self(vec![0; d])
    }

    /// The basis vector `e_i` (0-based).
    pub fn basis(d: usize, i: usize) -> Self {
        let mut c = vec![0; d];
        c[i] = 1;
        Self(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i128] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn checked_add(&self, other: &GroupElement) -> Result<GroupElement> {
        self.zip_with(other, i128::checked_add)
    }

    pub fn checked_sub(&self, other: &GroupElement) -> Result<GroupElement> {
        self.zip_with(other, i128::checked_sub)
    }

    pub fn checked_neg(&self) -> Result<GroupElement> {
        self.0
            .iter()
            .map(|c| c.checked_neg().ok_or_else(|| Error::Overflow(format!("negating {self}"))))
            .collect::<Result<Vec<_>>>()
            .map(GroupElement)
    }

    fn zip_with(&self, other: &GroupElement, op: fn(i128, i128) -> Option<i128>) -> Result<GroupElement> {
        check_dim(self.dim(), other.dim())?;
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| op(a, b).ok_or_else(|| Error::Overflow(format!("combining {self} and {other}"))))
            .collect::<Result<Vec<_>>>()
            .map(GroupElement)
    }
}

/// Strictly positive integer weights `(A_1, …, A_d)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i128>", into = "Vec<i128>")]
pub struct PastWeights(Vec<i128>);

impl TryFrom<Vec<i128>> for PastWeights {
    type Error = Error;

    fn try_from(w: Vec<i128>) -> Result<Self> {
        Self::new(w)
    }
}

impl From<PastWeights> for Vec<i128> {
    fn from(w: PastWeights) -> Self {
        w.0
    }
}

impl PastWeights {
    pub fn new(weights: Vec<i128>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("weights must be nonempty".into()));
        }
        if let Some(bad) = weights.iter().find(|&&a| a < 1) {
            return Err(Error::InvalidArgument(format!("weight {bad} is not positive")));
        }
        Ok(Self(weights))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[i128] {
        &self.0
    }

    /// `[t_0(g), …, t_{d-1}(g)]` with `t_k(g) = Σ_{l=1}^{d-k} A_l g_l`.
    pub fn partial_sums(&self, g: &GroupElement) -> Result<Vec<i128>> {
        check_dim(self.dim(), g.dim())?;
        let mut prefix = Vec::with_capacity(self.dim());
        let mut acc: i128 = 0;
        for (&a, &c) in self.0.iter().zip(g.coords()) {
            acc = a
                .checked_mul(c)
                .and_then(|v| acc.checked_add(v))
                .ok_or_else(|| Error::Overflow(format!("weighted sum of {g}")))?;
            prefix.push(acc);
        }
        prefix.reverse();
        Ok(prefix)
    }

    /// Sign of the first nonzero partial sum, scanning `t_0, t_1, …`.
    fn leading_sign(&self, g: &[i128]) -> Result<Ordering> {
        // prefix sums s_1..s_d; t_k = s_{d-k}, so scan prefixes from the longest down
        let mut prefix = [0i128; 16];
        let mut heap;
        let buf: &mut [i128] = if g.len() <= prefix.len() {
            &mut prefix[..g.len()]
        } else {
            heap = vec![0; g.len()];
            &mut heap
        };
        let mut acc: i128 = 0;
        for (slot, (&a, &c)) in buf.iter_mut().zip(self.0.iter().zip(g)) {
            acc = a
                .checked_mul(c)
                .and_then(|v| acc.checked_add(v))
                .ok_or_else(|| Error::Overflow(format!("weighted sum of {g:?}")))?;
            *slot = acc;
        }
        Ok(buf
            .iter()
            .rev()
            .map(|t| t.cmp(&0))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrderOutcome {
    Less,
    Equal,
    Greater,
}

impl From<OrderOutcome> for Ordering {
    fn from(o: OrderOutcome) -> Self {
        match o {
            OrderOutcome::Less => Ordering::Less,
            OrderOutcome::Equal => Ordering::Equal,
            OrderOutcome::Greater => Ordering::Greater,
        }
    }
}

/// Membership of `g` in the weighted algebraic past.
pub fn phi_contains(w: &PastWeights, g: &GroupElement) -> Result<bool> {
    check_dim(w.dim(), g.dim())?;
    Ok(w.leading_sign(g.coords())? == Ordering::Less)
}

/// `Less` iff `g1 - g2 ∈ Φ`.
pub fn phi_compare(w: &PastWeights, g1: &GroupElement, g2: &GroupElement) -> Result<OrderOutcome> {
    check_dim(w.dim(), g1.dim())?;
    let diff = g1.checked_sub(g2)?;
    Ok(match w.leading_sign(diff.coords())? {
        Ordering::Less => OrderOutcome::Less,
        Ordering::Equal => OrderOutcome::Equal,
        Ordering::Greater => OrderOutcome::Greater,
    })
}

/// `<_Φ`-minimum of a nonempty set of elements.
pub fn phi_min<'a>(w: &PastWeights, items: impl IntoIterator<Item = &'a GroupElement>) -> Result<Option<GroupElement>> {
    let mut best: Option<&GroupElement> = None;
    for g in items {
        best = match best {
            Some(b) if phi_compare(w, b, g)? != OrderOutcome::Greater => Some(b),
            _ => Some(g),
        };
    }
    Ok(best.cloned())
}

/// Largest box `[-r, r]^d` that [`verify_past_axioms`] will enumerate.
pub const MAX_BOX_POINTS: u128 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Axiom {
    /// `Φ ∩ Φ^{-1} = ∅`
    Antisymmetry,
    /// `Φ ∪ Φ^{-1} ∪ {e} = G`
    Totality,
    /// `Φ · Φ ⊂ Φ`
    Closure,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AxiomViolation {
    pub axiom: Axiom,
    pub elements: Vec<GroupElement>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AxiomReport {
    pub dim: usize,
    pub box_radius: u64,
    pub points: u64,
    pub phi_count: u64,
    pub closure_pairs_checked: u64,
    pub antisymmetry_violations: u64,
    pub totality_violations: u64,
    pub closure_violations: u64,
    pub first_counterexample: Option<AxiomViolation>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.antisymmetry_violations == 0 && self.totality_violations == 0 && self.closure_violations == 0
    }
}

struct LatticeBox {
    radius: i128,
    side: usize,
    len: usize,
}

impl LatticeBox {
    fn new(d: usize, radius: u64) -> Result<Self> {
        let side = 2 * radius as u128 + 1;
        let len = side
            .checked_pow(d as u32)
            .filter(|&n| n <= MAX_BOX_POINTS)
            .ok_or(Error::TooLarge {
                what: "axiom box",
                needed: side.saturating_pow(d as u32),
                cap: MAX_BOX_POINTS,
            })?;
        Ok(Self {
            radius: radius as i128,
            side: side as usize,
            len: len as usize,
        })
    }

    fn coords(&self, mut idx: usize, out: &mut [i128]) {
        for c in out.iter_mut() {
            *c = (idx % self.side) as i128 - self.radius;
            idx /= self.side;
        }
    }

    fn index(&self, coords: &[i128]) -> Option<usize> {
        let mut idx = 0usize;
        for &c in coords.iter().rev() {
            if c < -self.radius || c > self.radius {
                return None;
            }
            idx = idx * self.side + (c + self.radius) as usize;
        }
        Some(idx)
    }
}

/// Exhaustively checks the three algebraic-past axioms on `[-r, r]^d`.
pub fn verify_past_axioms(w: &PastWeights, box_radius: u64) -> Result<AxiomReport> {
    if box_radius == 0 {
        return Err(Error::InvalidArgument("box radius must be positive".into()));
    }
    let d = w.dim();
    let lb = LatticeBox::new(d, box_radius)?;
    let mut coords = vec![0i128; d];
    let mut member = vec![false; lb.len];
    for (idx, slot) in member.iter_mut().enumerate() {
        lb.coords(idx, &mut coords);
        *slot = w.leading_sign(&coords)? == Ordering::Less;
    }

    let origin = lb.index(&vec![0; d]).expect("origin lies in the box");
    let mut report = AxiomReport {
        dim: d,
        box_radius,
        points: lb.len as u64,
        phi_count: member.iter().filter(|&&b| b).count() as u64,
        closure_pairs_checked: 0,
        antisymmetry_violations: 0,
        totality_violations: 0,
        closure_violations: 0,
        first_counterexample: None,
    };
    let record = |report: &mut AxiomReport, axiom: Axiom, elements: Vec<GroupElement>| {
        if report.first_counterexample.is_none() {
            report.first_counterexample = Some(AxiomViolation { axiom, elements });
        }
    };

    let mut neg = vec![0i128; d];
    for idx in 0..lb.len {
        if idx == origin {
            if member[idx] {
                report.antisymmetry_violations += 1;
                record(&mut report, Axiom::Antisymmetry, vec![GroupElement::zero(d)]);
            }
            continue;
        }
        lb.coords(idx, &mut coords);
        for (n, c) in neg.iter_mut().zip(&coords) {
            *n = -c;
        }
        let inv = lb.index(&neg).expect("box is symmetric");
        let g = || GroupElement::new(coords.clone());
        match (member[idx], member[inv]) {
            (true, true) => {
                report.antisymmetry_violations += 1;
                record(&mut report, Axiom::Antisymmetry, vec![g()]);
            }
            (false, false) => {
                report.totality_violations += 1;
                record(&mut report, Axiom::Totality, vec![g()]);
            }
            _ => {}
        }
    }

    let phi: Vec<usize> = (0..lb.len).filter(|&i| member[i]).collect();
    let mut a = vec![0i128; d];
    let mut b = vec![0i128; d];
    let mut sum = vec![0i128; d];
    for &i in &phi {
        lb.coords(i, &mut a);
        for &j in &phi {
            lb.coords(j, &mut b);
            for k in 0..d {
                sum[k] = a[k] + b[k];
            }
            let Some(s) = lb.index(&sum) else { continue };
            report.closure_pairs_checked += 1;
            if !member[s] {
                report.closure_violations += 1;
                record(
                    &mut report,
                    Axiom::Closure,
                    vec![GroupElement::new(a.clone()), GroupElement::new(b.clone())],
                );
            }
        }
    }
    Ok(report)
}

/// Weights, thresholds and column order chosen for a polynomial family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WeightSelection {
    pub weights: PastWeights,
    /// Geometric base `B` with `weights = (1, B, …, B^{d-1})`.
    pub base: u64,
    pub n0: u64,
    pub n1: u64,
    pub n2: u64,
    /// `column_order[r]` is the original column placed at rank `r`; ranks are
    /// strictly `<_Φ`-decreasing for every `n > n2`.
    pub column_order: Vec<usize>,
}

const MAX_BASE: u64 = 1 << 20;
const MAX_THRESHOLD_SCAN: u128 = 10_000_000;

/// Finds geometric weights `(1, B, …, B^{d-1})` under which every weighted
/// column sum and every weighted pairwise difference is nonconstant, then the
/// column order and threshold `N_2` past which the columns are strictly
/// `<_Φ`-decreasing.
pub fn select_weights(fam: &PolynomialFamily) -> Result<WeightSelection> {
    let report = check_nondegeneracy(fam);
    if let Some(why) = report.first_failure() {
        return Err(Error::NondegenerateFamilyRequired(why));
    }
    let d = fam.d();
    let m = fam.m();

    for base in 1..=MAX_BASE {
        let weights = geometric_weights(d, base)?;
        let sums = (0..m)
            .map(|j| fam.weighted_column(&weights, j))
            .collect::<Result<Vec<_>>>()?;
        if sums.iter().any(IntPoly::is_constant) {
            continue;
        }
        let mut ok = true;
        'pairs: for k in 0..m {
            for l in (k + 1)..m {
                if sums[k].checked_sub(&sums[l])?.is_constant() {
                    ok = false;
                    break 'pairs;
                }
            }
        }
        if !ok {
            continue;
        }

        let weights = PastWeights::new(weights)?;
        let mut order: Vec<usize> = (0..m).collect();
        // eventual order of columns is the sign of the leading coefficient of the weighted difference
        let mut sort_err = None;
        order.sort_by(|&a, &b| match sums[b].checked_sub(&sums[a]) {
            Ok(diff) => diff.leading_coefficient().cmp(&0),
            Err(e) => {
                sort_err = Some(e);
                Ordering::Equal
            }
        });
        if let Some(e) = sort_err {
            return Err(e);
        }
        let n2 = decreasing_threshold(fam, &weights, &sums, &order)?;
        return Ok(WeightSelection {
            weights,
            base,
            n0: 0,
            n1: 0,
            n2,
            column_order: order,
        });
    }
    Err(Error::InvalidArgument(format!("no geometric weights found with base ≤ {MAX_BASE}")))
}

fn geometric_weights(d: usize, base: u64) -> Result<Vec<i128>> {
    (0..d as u32)
        .map(|e| {
            (base as i128)
                .checked_pow(e)
                .ok_or_else(|| Error::Overflow(format!("weight {base}^{e}")))
        })
        .collect()
}

fn decreasing_threshold(
    fam: &PolynomialFamily,
    w: &PastWeights,
    sums: &[IntPoly],
    order: &[usize],
) -> Result<u64> {
    let mut bound: u128 = 0;
    for pair in order.windows(2) {
        let diff = sums[pair[0]].checked_sub(&sums[pair[1]])?;
        bound = bound.max(diff.cauchy_bound().unwrap_or(0));
    }
    if bound > MAX_THRESHOLD_SCAN {
        return Err(Error::TooLarge {
            what: "threshold scan",
            needed: bound,
            cap: MAX_THRESHOLD_SCAN,
        });
    }
    let d = fam.d();
    let mut hi = vec![0i128; d];
    let mut lo = vec![0i128; d];
    let mut n2 = 0;
    for n in 0..=bound as u64 {
        for pair in order.windows(2) {
            fam.orbit_exponent_into(pair[0], n, &mut hi)?;
            fam.orbit_exponent_into(pair[1], n, &mut lo)?;
            let cmp = phi_compare(w, &GroupElement::new(lo.clone()), &GroupElement::new(hi.clone()))?;
            if cmp != OrderOutcome::Less {
                n2 = n;
                break;
            }
        }
    }
    Ok(n2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polys::orbit_exponent;
    use proptest::prelude::*;

    fn w(a: &[i128]) -> PastWeights {
        PastWeights::new(a.to_vec()).unwrap()
    }

    fn ge(c: &[i128]) -> GroupElement {
        GroupElement::new(c.to_vec())
    }

    fn p(c: &[i128]) -> IntPoly {
        IntPoly::new(c.to_vec())
    }

    #[test]
    fn contains_examples() {
        let w12 = w(&[1, 2]);
        assert!(!phi_contains(&w12, &ge(&[0, 0])).unwrap());
        assert!(phi_contains(&w12, &ge(&[-1, 0])).unwrap());
        assert!(!phi_contains(&w12, &ge(&[2, -1])).unwrap());
        assert!(phi_contains(&w12, &ge(&[-2, 1])).unwrap());
    }

    #[test]
    fn partial_sums_follow_the_definition() {
        assert_eq!(w(&[1, 2]).partial_sums(&ge(&[2, -1])).unwrap(), vec![0, 2]);
        assert_eq!(w(&[1, 2, 5]).partial_sums(&ge(&[1, 1, 1])).unwrap(), vec![8, 3, 1]);
    }

    #[test]
    fn compare_examples() {
        let w12 = w(&[1, 2]);
        assert_eq!(phi_compare(&w12, &ge(&[1, -1]), &ge(&[3, 8])).unwrap(), OrderOutcome::Less);
        assert_eq!(phi_compare(&w12, &ge(&[3, 8]), &ge(&[1, -1])).unwrap(), OrderOutcome::Greater);
        assert_eq!(phi_compare(&w12, &ge(&[4, -9]), &ge(&[4, -9])).unwrap(), OrderOutcome::Equal);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            phi_contains(&w(&[1, 2]), &ge(&[1])),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            phi_contains(&w(&[2, 1]), &ge(&[i128::MAX, 0])),
            Err(Error::Overflow(_))
        ));
        assert!(PastWeights::new(vec![1, 0]).is_err());
        assert!(PastWeights::new(vec![]).is_err());
    }

    #[test]
    fn axioms_on_boxes() {
        let r = verify_past_axioms(&w(&[1]), 8).unwrap();
        assert!(r.passed());
        assert_eq!(r.phi_count, 8);
        for c in -8..=8 {
            assert_eq!(phi_contains(&w(&[1]), &ge(&[c])).unwrap(), c < 0);
        }
        assert!(verify_past_axioms(&w(&[1, 2]), 8).unwrap().passed());
        let r3 = verify_past_axioms(&w(&[1, 2, 5]), 5).unwrap();
        assert!(r3.passed());
        assert_eq!(r3.points, 11u64.pow(3));
        assert_eq!(r3.phi_count, (r3.points - 1) / 2);
        assert!(r3.closure_pairs_checked > 0);
    }

    #[test]
    fn axiom_box_guard() {
        assert!(matches!(verify_past_axioms(&w(&[1, 1, 1, 1, 1]), 50), Err(Error::TooLarge { .. })));
    }

    fn prop32() -> PolynomialFamily {
        PolynomialFamily::from_columns(
            2,
            vec![vec![p(&[0, 0, 3]), p(&[0, 0, 8])], vec![p(&[0, 0, 1]), p(&[0, 0, -1])]],
        )
        .unwrap()
    }

    #[test]
    fn select_weights_worked_example() {
        let sel = select_weights(&prop32()).unwrap();
        assert_eq!(sel.base, 2);
        assert_eq!(sel.weights, w(&[1, 2]));
        assert_eq!(sel.column_order, vec![0, 1]);
        assert_eq!((sel.n0, sel.n1), (0, 0));
        // at n = 0 both columns sit at the origin
        assert_eq!(sel.n2, 0);
    }

    #[test]
    fn select_weights_single_linear_column() {
        let fam = PolynomialFamily::from_columns(1, vec![vec![p(&[0, 1])]]).unwrap();
        let sel = select_weights(&fam).unwrap();
        assert_eq!(sel.weights, w(&[1]));
        assert_eq!(sel.n2, 0);
        assert_eq!(sel.column_order, vec![0]);
    }

    #[test]
    fn select_weights_coordinate_axes() {
        let fam = PolynomialFamily::from_columns(
            2,
            vec![vec![p(&[0, 1]), IntPoly::zero()], vec![IntPoly::zero(), p(&[0, 1])]],
        )
        .unwrap();
        let sel = select_weights(&fam).unwrap();
        assert_eq!(sel.weights, w(&[1, 2]));
        // weighted sums n and 2n: the second column is eventually larger
        assert_eq!(sel.column_order, vec![1, 0]);
    }

    #[test]
    fn select_weights_rejects_degenerate() {
        let fam = PolynomialFamily::from_columns(
            2,
            vec![vec![p(&[0, 1]), IntPoly::zero()], vec![p(&[0, 1]), IntPoly::zero()]],
        )
        .unwrap();
        assert!(matches!(select_weights(&fam), Err(Error::NondegenerateFamilyRequired(_))));
    }

    #[test]
    fn threshold_with_late_crossing() {
        // weighted sums n^2 and 10n cross at n = 10
        let fam = PolynomialFamily::from_columns(1, vec![vec![p(&[0, 10])], vec![p(&[0, 0, 1])]]).unwrap();
        let sel = select_weights(&fam).unwrap();
        assert_eq!(sel.column_order, vec![1, 0]);
        assert_eq!(sel.n2, 10);
        check_decreasing(&fam, &sel, 11..=110);
    }

    fn check_decreasing(fam: &PolynomialFamily, sel: &WeightSelection, ns: impl Iterator<Item = u64>) {
        let permuted = fam.permuted(&sel.column_order).unwrap();
        for n in ns {
            for j in 1..permuted.m() {
                let hi = orbit_exponent(&permuted, j - 1, n).unwrap();
                let lo = orbit_exponent(&permuted, j, n).unwrap();
                assert_eq!(
                    phi_compare(&sel.weights, &lo, &hi).unwrap(),
                    OrderOutcome::Less,
                    "n={n} column {j}"
                );
            }
        }
    }

    fn element(d: usize) -> impl Strategy<Value = GroupElement> {
        prop::collection::vec(-1000i128..1000, d).prop_map(GroupElement::new)
    }

    fn weights(d: usize) -> impl Strategy<Value = PastWeights> {
        prop::collection::vec(1i128..7, d).prop_map(|v| PastWeights::new(v).unwrap())
    }

    proptest! {
        #[test]
        fn order_laws((wt, a, b, c, h) in (1usize..4).prop_flat_map(|d| (weights(d), element(d), element(d), element(d), element(d)))) {
            let ab = phi_compare(&wt, &a, &b).unwrap();
            let ba = phi_compare(&wt, &b, &a).unwrap();
            prop_assert_eq!(ab == OrderOutcome::Equal, a == b);
            if a != b {
                prop_assert!(matches!((ab, ba), (OrderOutcome::Less, OrderOutcome::Greater) | (OrderOutcome::Greater, OrderOutcome::Less)));
            }
            if ab == OrderOutcome::Less && phi_compare(&wt, &b, &c).unwrap() == OrderOutcome::Less {
                prop_assert_eq!(phi_compare(&wt, &a, &c).unwrap(), OrderOutcome::Less);
            }
            let ah = a.checked_add(&h).unwrap();
            let bh = b.checked_add(&h).unwrap();
            prop_assert_eq!(phi_compare(&wt, &ah, &bh).unwrap(), ab);

            let neg = a.checked_neg().unwrap();
            let (pa, pn) = (phi_contains(&wt, &a).unwrap(), phi_contains(&wt, &neg).unwrap());
            prop_assert!(!(pa && pn));
            if !a.is_zero() {
                prop_assert!(pa || pn);
            }
        }

        #[test]
        fn selected_weights_order_columns(
            cols in prop::collection::vec(prop::collection::vec(prop::collection::vec(-6i128..6, 1..4), 2), 1..4)
        ) {
            let columns: Vec<Vec<IntPoly>> = cols
                .into_iter()
                .map(|c| c.into_iter().map(|mut v| { v[0] = 0; IntPoly::new(v) }).collect())
                .collect();
            let fam = PolynomialFamily::from_columns(2, columns).unwrap();
            prop_assume!(check_nondegeneracy(&fam).is_nondegenerate());
            let sel = select_weights(&fam).unwrap();
            for j in 0..fam.m() {
                let s = fam.weighted_column(sel.weights.as_slice(), j).unwrap();
                prop_assert!(!s.is_constant());
            }
            check_decreasing(&fam, &sel, sel.n2 + 1..=sel.n2 + 100);
        }
    }
}
