//! Exact check that the martingale-difference variables `X_{j,n}` of the
//! strong-law argument are orthogonal.
//!
//! `X_{j,n} = ∏_{k<j} f_k∘T^{p_k(n)} · D∘T^{p_j(n)} · ∏_{l>j} ∫f_l` with
//! `D = f_j − E(f_j | H)` and `H` the coordinate half-space anchored at
//! `g_0 + min_Φ(∪ windows)`. On a Bernoulli shift the tail is trivial, so the
//! factors after `j` collapse to their integrals.
//!
//! `E[X_{j,n} X_{j,m}] = 0` follows whenever every factor other than one of the
//! two `D` translates reads only coordinates in that translate's half-space
//! `H + p_j(·)`. The probe checks this directly for each pair and then computes
//! the expectation by summing over the union of all windows.

use std::collections::{HashMap, HashSet};

use num_rational::BigRational;
use num_traits::{Num, One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::conditioning::{condition_cylinder, difference, CoordSet};
use crate::error::{check_dim, Error, Result};
use crate::lattice::{phi_compare, GroupElement, OrderOutcome, PastWeights};
use crate::polys::{orbit_exponent, PolynomialFamily};
use crate::systems::observable::{product_measure_sum, table_len, Cylinder, CylinderObservable};
use crate::systems::BernoulliShift;

/// Union windows up to this many assignments are also summed in rationals.
pub const EXACT_UNION_LIMIT: u128 = 1 << 14;
/// Hard cap on assignments of the union window.
pub const MAX_UNION: u128 = 1 << 24;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrthogonalityEntry {
    pub n: u64,
    pub m: u64,
    pub precondition_met: bool,
    /// Which translate of `D` the other factors were measured against: `"n"` or `"m"`.
    pub oriented_at: Option<&'static str>,
    pub union_size: usize,
    #[serde(serialize_with = "rational_opt")]
    pub exact: Option<BigRational>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrthogonalityReport {
    pub column: usize,
    /// Anchor of the half-space `H`.
    pub anchor: GroupElement,
    /// `D ≡ 0`: `f_j` is already `H`-measurable.
    pub difference_vanishes: bool,
    pub entries: Vec<OrthogonalityEntry>,
}

fn rational_opt<S: Serializer>(v: &Option<BigRational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(q) => s.serialize_str(&q.to_string()),
        None => s.serialize_none(),
    }
}

struct Factors<T> {
    /// Everything except the two `D` translates.
    plain: Vec<Cylinder<T>>,
    d_n: Cylinder<T>,
    d_m: Cylinder<T>,
    scalar: T,
}

impl<T: Num + Clone> Factors<T> {
    fn all(&self) -> impl Iterator<Item = &Cylinder<T>> {
        self.plain.iter().chain([&self.d_n, &self.d_m])
    }
}

fn inside(w: &PastWeights, anchor: &GroupElement, cyls: &[&Cylinder<impl Clone>]) -> Result<bool> {
    for c in cyls {
        for v in c.window() {
            if phi_compare(w, anchor, v)? == OrderOutcome::Greater {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `E[∏ factors]` under the product measure, by enumerating the union window.
fn expect_product<T: Num + Clone>(factors: &[&Cylinder<T>], probs: &[T], a: usize) -> T {
    let mut union: Vec<&GroupElement> = Vec::new();
    let mut index: HashMap<&GroupElement, usize> = HashMap::new();
    for f in factors {
        for v in f.window() {
            index.entry(v).or_insert_with(|| {
                union.push(v);
                union.len() - 1
            });
        }
    }
    let positions: Vec<Vec<usize>> = factors
        .iter()
        .map(|f| f.window().iter().map(|v| index[v]).collect())
        .collect();
    let len = a.pow(union.len() as u32);
    let mut digits = vec![0usize; union.len()];
    let mut total = T::zero();
    for idx in 0..len {
        let mut rest = idx;
        for d in digits.iter_mut() {
            *d = rest % a;
            rest /= a;
        }
        let mut prod = digits.iter().fold(T::one(), |acc, &d| acc * probs[d].clone());
        for (f, pos) in factors.iter().zip(&positions) {
            if prod.is_zero() {
                break;
            }
            let local = pos.iter().rev().fold(0usize, |acc, &p| acc * a + digits[p]);
            prod = prod * f.table()[local].clone();
        }
        total = total + prod;
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn build<T: Num + Clone>(
    fam: &PolynomialFamily,
    obs: &[Cylinder<T>],
    d: &Cylinder<T>,
    scalar: &T,
    j: usize,
    n: u64,
    m: u64,
) -> Result<Factors<T>> {
    let mut plain = Vec::with_capacity(2 * j);
    for t in [n, m] {
        for (k, f) in obs.iter().enumerate().take(j) {
            plain.push(f.translated(&orbit_exponent(fam, k, t)?)?);
        }
    }
    Ok(Factors {
        plain,
        d_n: d.translated(&orbit_exponent(fam, j, n)?)?,
        d_m: d.translated(&orbit_exponent(fam, j, m)?)?,
        scalar: scalar.clone() * scalar.clone(),
    })
}

/// Computes `E[X_{j,n} X_{j,m}]` for each pair and whether the separation
/// precondition held.
pub fn orthogonality_probe(
    sys: &BernoulliShift,
    fam: &PolynomialFamily,
    obs: &[CylinderObservable],
    w: &PastWeights,
    g0: &GroupElement,
    j: usize,
    pairs: &[(u64, u64)],
) -> Result<OrthogonalityReport> {
    check_dim(sys.d, fam.d())?;
    check_dim(sys.d, w.dim())?;
    check_dim(sys.d, g0.dim())?;
    check_dim(fam.m(), obs.len())?;
    if j >= fam.m() {
        return Err(Error::InvalidArgument(format!("column {j} out of range (m = {})", fam.m())));
    }
    let a = sys.law.alphabet();
    for f in obs {
        if f.dim() != sys.d || f.alphabet() != a {
            return Err(Error::Incompatible("observable does not match the shift".into()));
        }
    }

    let half = CoordSet::generated_half_space(w.clone(), g0, obs.iter().map(|f| f.window()))?;
    let CoordSet::HalfSpace { anchor, .. } = &half else {
        unreachable!("generated_half_space returns a half-space")
    };
    let anchor = anchor.clone();

    let exact_obs = obs.iter().map(CylinderObservable::to_exact).collect::<Result<Vec<_>>>()?;
    let exact_law = sys.law.exact();
    let d_exact = difference(&exact_obs[j], &condition_cylinder(&exact_obs[j], &half, exact_law)?)?;
    let d_float = difference(&obs[j], &condition_cylinder(&obs[j], &half, sys.law.probs())?)?;
    let tail_exact = exact_obs[j + 1..]
        .iter()
        .map(|f| product_measure_sum(f, exact_law))
        .fold(BigRational::one(), |acc, v| acc * v);
    let tail_float = tail_exact.to_f64().unwrap_or(f64::NAN);
    let difference_vanishes = d_exact.table().iter().all(Zero::is_zero);

    let mut entries = Vec::with_capacity(pairs.len());
    for &(n, m) in pairs {
        let ef = build(fam, &exact_obs, &d_exact, &tail_exact, j, n, m)?;
        let ff = build(fam, obs, &d_float, &tail_float, j, n, m)?;

        let mut oriented_at = None;
        for (label, t, other) in [("n", n, &ef.d_m), ("m", m, &ef.d_n)] {
            let shifted = anchor.checked_add(&orbit_exponent(fam, j, t)?)?;
            let mut rest: Vec<&Cylinder<BigRational>> = ef.plain.iter().collect();
            rest.push(other);
            if inside(w, &shifted, &rest)? {
                oriented_at = Some(label);
                break;
            }
        }

        let union: HashSet<&GroupElement> = ff.all().flat_map(|c| c.window()).collect();
        let assignments = table_len(a, union.len()).unwrap_or(u128::MAX);
        if assignments > MAX_UNION {
            return Err(Error::TooLarge {
                what: "orthogonality union window",
                needed: assignments,
                cap: MAX_UNION,
            });
        }
        let value = ff.scalar * expect_product(&ff.all().collect::<Vec<_>>(), sys.law.probs(), a);
        let exact = (assignments <= EXACT_UNION_LIMIT)
            .then(|| ef.scalar.clone() * expect_product(&ef.all().collect::<Vec<_>>(), exact_law, a));
        entries.push(OrthogonalityEntry {
            n,
            m,
            precondition_met: oriented_at.is_some() || difference_vanishes,
            oriented_at,
            union_size: union.len(),
            exact,
            value,
        });
    }
    Ok(OrthogonalityReport {
        column: j,
        anchor,
        difference_vanishes,
        entries,
    })
}
