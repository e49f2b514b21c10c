//! Integer polynomials and the d×m polynomial families that drive the averages.
//!
//! A family holds one polynomial per (generator, column) pair. Column `j`
//! describes the orbit exponent `(p_{1,j}(n), …, p_{d,j}(n))` at which the
//! j-th observable is evaluated. Columns and rows are 0-based throughout.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::lattice::GroupElement;

/// Largest polynomial degree accepted by experiment validation.
pub const MAX_DEGREE: usize = 6;
/// Largest index `n` accepted by experiment validation.
pub const MAX_INDEX: u64 = 10_000_000;

/// Polynomial with integer coefficients, lowest power first, trailing zeros trimmed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<i128>", into = "Vec<i128>")]
pub struct IntPoly {
    coeffs: Vec<i128>,
}

impl From<Vec<i128>> for IntPoly {
    fn from(coeffs: Vec<i128>) -> Self {
        Self::new(coeffs)
    }
}

impl From<IntPoly> for Vec<i128> {
    fn from(p: IntPoly) -> Self {
        p.coeffs
    }
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<i128>) -> Self {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    /// `c · n^power`
    pub fn monomial(c: i128, power: usize) -> Self {
        let mut coeffs = vec![0; power + 1];
        coeffs[power] = c;
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[i128] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn constant_term(&self) -> i128 {
        self.coeffs.first().copied().unwrap_or(0)
    }

    pub fn leading_coefficient(&self) -> i128 {
        self.coeffs.last().copied().unwrap_or(0)
    }

    /// Horner evaluation with checked 128-bit arithmetic.
    pub fn eval(&self, n: u64) -> Result<i128> {
        let x = n as i128;
        let mut acc: i128 = 0;
        for &c in self.coeffs.iter().rev() {
            acc = acc
                .checked_mul(x)
                .and_then(|v| v.checked_add(c))
                .ok_or_else(|| Error::Overflow(format!("evaluating {:?} at n={n}", self.coeffs)))?;
        }
        Ok(acc)
    }

    pub fn checked_add(&self, other: &IntPoly) -> Result<IntPoly> {
        let len = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(len);
        for i in 0..len {
            let a = self.coeffs.get(i).copied().unwrap_or(0);
            let b = other.coeffs.get(i).copied().unwrap_or(0);
            out.push(
                a.checked_add(b)
                    .ok_or_else(|| Error::Overflow("polynomial addition".into()))?,
            );
        }
        Ok(IntPoly::new(out))
    }

    pub fn checked_sub(&self, other: &IntPoly) -> Result<IntPoly> {
        self.checked_add(&other.checked_scale(-1)?)
    }

    pub fn checked_scale(&self, c: i128) -> Result<IntPoly> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|&a| {
                a.checked_mul(c)
                    .ok_or_else(|| Error::Overflow("polynomial scaling".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(IntPoly::new(coeffs))
    }

    pub fn without_constant(&self) -> IntPoly {
        let mut coeffs = self.coeffs.clone();
        if let Some(c) = coeffs.first_mut() {
            *c = 0;
        }
        IntPoly::new(coeffs)
    }

    /// Integer Cauchy bound: every real root r satisfies |r| < the returned value.
    /// `None` for the zero polynomial.
    pub fn cauchy_bound(&self) -> Option<u128> {
        let (&lead, rest) = self.coeffs.split_last()?;
        let lead = lead.unsigned_abs();
        let max = rest.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0);
        Some(2 + max / lead)
    }
}

/// The d×m matrix of polynomials `p_{i,j}`; optional generator assignment for
/// the single-generator-per-column form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolynomialFamily {
    d: usize,
    m: usize,
    /// `entries[i][j]` is the exponent of generator `i` in column `j`.
    entries: Vec<Vec<IntPoly>>,
    generators: Option<Vec<usize>>,
}

impl PolynomialFamily {
    /// Builds a family from its columns; each column holds `d` polynomials.
    pub fn from_columns(d: usize, columns: Vec<Vec<IntPoly>>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if columns.is_empty() {
            return Err(Error::InvalidArgument("family needs at least one column".into()));
        }
        let m = columns.len();
        let mut entries = vec![Vec::with_capacity(m); d];
        for col in columns {
            check_dim(d, col.len())?;
            for (i, p) in col.into_iter().enumerate() {
                entries[i].push(p);
            }
        }
        Ok(Self {
            d,
            m,
            entries,
            generators: None,
        })
    }

    /// Single-generator form: column `j` is `polys[j] · e_{generators[j]}`.
    pub fn single_generator(d: usize, polys: Vec<IntPoly>, generators: Vec<usize>) -> Result<Self> {
        check_dim(polys.len(), generators.len())?;
        let mut columns = Vec::with_capacity(polys.len());
        for (p, &g) in polys.into_iter().zip(&generators) {
            if g >= d {
                return Err(Error::InvalidArgument(format!(
                    "generator index {g} out of range for d={d}"
                )));
            }
            let mut col = vec![IntPoly::zero(); d];
            col[g] = p;
            columns.push(col);
        }
        let mut fam = Self::from_columns(d, columns)?;
        fam.generators = Some(generators);
        Ok(fam)
    }

    /// Attaches a generator assignment, checking each column is supported on its generator row.
    pub fn with_generators(mut self, generators: Vec<usize>) -> Result<Self> {
        check_dim(self.m, generators.len())?;
        for (j, &g) in generators.iter().enumerate() {
            if g >= self.d {
                return Err(Error::InvalidArgument(format!(
                    "generator index {g} out of range for d={}",
                    self.d
                )));
            }
            for i in 0..self.d {
                if i != g && !self.entries[i][j].is_zero() {
                    return Err(Error::InvalidArgument(format!(
                        "column {j} has a nonzero entry in row {i}, outside its generator {g}"
                    )));
                }
            }
        }
        self.generators = Some(generators);
        Ok(self)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> &IntPoly {
        &self.entries[i][j]
    }

    pub fn column(&self, j: usize) -> Vec<IntPoly> {
        (0..self.d).map(|i| self.entries[i][j].clone()).collect()
    }

    pub fn columns(&self) -> Vec<Vec<IntPoly>> {
        (0..self.m).map(|j| self.column(j)).collect()
    }

    pub fn generators(&self) -> Option<&[usize]> {
        self.generators.as_deref()
    }

    pub fn max_degree(&self) -> usize {
        self.entries
            .iter()
            .flatten()
            .filter_map(IntPoly::degree)
            .max()
            .unwrap_or(0)
    }

    /// Whether every column is supported on at most one generator row.
    pub fn is_single_generator_form(&self) -> bool {
        self.generators.is_some()
            || (0..self.m).all(|j| (0..self.d).filter(|&i| !self.entries[i][j].is_zero()).count() <= 1)
    }

    /// Column order `order[r]` becomes column `r` of the result.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        check_dim(self.m, order.len())?;
        let mut seen = vec![false; self.m];
        for &j in order {
            if j >= self.m || std::mem::replace(&mut seen[j], true) {
                return Err(Error::InvalidArgument(format!("{order:?} is not a permutation")));
            }
        }
        let columns = order.iter().map(|&j| self.column(j)).collect();
        let mut fam = Self::from_columns(self.d, columns)?;
        fam.generators = self
            .generators
            .as_ref()
            .map(|g| order.iter().map(|&j| g[j]).collect());
        Ok(fam)
    }

    /// `Σ_i weights[i] · p_{i,j}`
    pub fn weighted_column(&self, weights: &[i128], j: usize) -> Result<IntPoly> {
        check_dim(self.d, weights.len())?;
        let mut acc = IntPoly::zero();
        for (i, &a) in weights.iter().enumerate() {
            acc = acc.checked_add(&self.entries[i][j].checked_scale(a)?)?;
        }
        Ok(acc)
    }

    /// Writes the orbit exponent of column `j` at index `n` into `out`.
    pub fn orbit_exponent_into(&self, j: usize, n: u64, out: &mut [i128]) -> Result<()> {
        for (i, slot) in out.iter_mut().enumerate().take(self.d) {
            *slot = self.entries[i][j].eval(n)?;
        }
        Ok(())
    }

    /// Validates the experiment caps on degree.
    pub fn check_caps(&self) -> Result<()> {
        let deg = self.max_degree();
        if deg > MAX_DEGREE {
            return Err(Error::InvalidArgument(format!(
                "polynomial degree {deg} exceeds cap {MAX_DEGREE}"
            )));
        }
        Ok(())
    }
}

/// The vector `(p_{1,j}(n), …, p_{d,j}(n))`.
pub fn orbit_exponent(fam: &PolynomialFamily, j: usize, n: u64) -> Result<GroupElement> {
    if j >= fam.m {
        return Err(Error::InvalidArgument(format!(
            "column {j} out of range (m = {})",
            fam.m
        )));
    }
    let mut coords = vec![0; fam.d];
    fam.orbit_exponent_into(j, n, &mut coords)?;
    Ok(GroupElement::new(coords))
}

/// Removes each column's constant term; returns the removed offsets `p_{·,j}(0)`.
pub fn normalize_family(fam: &PolynomialFamily) -> (PolynomialFamily, Vec<GroupElement>) {
    let mut out = fam.clone();
    let mut offsets = Vec::with_capacity(fam.m);
    for j in 0..fam.m {
        let mut o = Vec::with_capacity(fam.d);
        for i in 0..fam.d {
            o.push(fam.entries[i][j].constant_term());
            out.entries[i][j] = fam.entries[i][j].without_constant();
        }
        offsets.push(GroupElement::new(o));
    }
    (out, offsets)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairCheck {
    pub k: usize,
    pub l: usize,
    pub nonconstant: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NondegeneracyReport {
    /// `columns[j]`: column j is a nonconstant vector polynomial.
    pub columns: Vec<bool>,
    pub pairs: Vec<PairCheck>,
}

impl NondegeneracyReport {
    pub fn is_nondegenerate(&self) -> bool {
        self.columns.iter().all(|&c| c) && self.pairs.iter().all(|p| p.nonconstant)
    }

    pub fn first_failure(&self) -> Option<String> {
        if let Some(j) = self.columns.iter().position(|&c| !c) {
            return Some(format!("column {j} is constant"));
        }
        self.pairs
            .iter()
            .find(|p| !p.nonconstant)
            .map(|p| format!("columns {} and {} differ by a constant", p.k, p.l))
    }
}

/// Column and pairwise-difference nonconstancy. In single-generator form only
/// pairs sharing a generator are compared.
pub fn check_nondegeneracy(fam: &PolynomialFamily) -> NondegeneracyReport {
    let columns = (0..fam.m)
        .map(|j| (0..fam.d).any(|i| !fam.entries[i][j].is_constant()))
        .collect();
    let mut pairs = Vec::new();
    for k in 0..fam.m {
        for l in (k + 1)..fam.m {
            if let Some(g) = &fam.generators {
                if g[k] != g[l] {
                    continue;
                }
            }
            // constant terms cancel out of the nonconstancy question
            let nonconstant = (0..fam.d).any(|i| {
                let a = fam.entries[i][k].coeffs();
                let b = fam.entries[i][l].coeffs();
                let len = a.len().max(b.len());
                (1..len).any(|e| a.get(e).copied().unwrap_or(0) != b.get(e).copied().unwrap_or(0))
            });
            pairs.push(PairCheck { k, l, nonconstant });
        }
    }
    NondegeneracyReport { columns, pairs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn p(c: &[i128]) -> IntPoly {
        IntPoly::new(c.to_vec())
    }

    fn prop32() -> PolynomialFamily {
        PolynomialFamily::from_columns(
            2,
            vec![vec![p(&[0, 0, 3]), p(&[0, 0, 8])], vec![p(&[0, 0, 1]), p(&[0, 0, -1])]],
        )
        .unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(p(&[0, 0, 1]).eval(5).unwrap(), 25);
        assert_eq!(p(&[0, 8, 3]).eval(0).unwrap(), 0);
        let big = BigInt::from(100_000u64).pow(4);
        assert_eq!(BigInt::from(p(&[0, 0, 0, 0, 1]).eval(100_000).unwrap()), big);
    }

    #[test]
    fn eval_overflow_is_an_error() {
        let q = IntPoly::monomial(1, 6);
        assert!(matches!(q.eval(1 << 22), Err(Error::Overflow(_))));
        // degree 6 at the index cap exceeds 128 bits and must surface as an error
        assert!(matches!(q.eval(MAX_INDEX), Err(Error::Overflow(_))));
        assert_eq!(IntPoly::monomial(1, 4).eval(MAX_INDEX).unwrap(), 10i128.pow(28));
    }

    #[test]
    fn trimming_and_degree() {
        assert_eq!(p(&[1, 2, 0, 0]).coeffs(), &[1, 2]);
        assert_eq!(p(&[0, 0]).degree(), None);
        assert!(p(&[7]).is_constant());
        assert!(IntPoly::zero().is_constant());
    }

    #[test]
    fn orbit_exponent_examples() {
        let fam = prop32();
        assert_eq!(orbit_exponent(&fam, 0, 2).unwrap(), GroupElement::from([12, 32]));
        assert!(orbit_exponent(&fam, 1, 0).unwrap().is_zero());
        let axes = PolynomialFamily::from_columns(
            2,
            vec![vec![p(&[0, 1]), IntPoly::zero()], vec![IntPoly::zero(), p(&[0, 1])]],
        )
        .unwrap();
        assert_eq!(orbit_exponent(&axes, 1, 7).unwrap(), GroupElement::from([0, 7]));
        assert!(orbit_exponent(&axes, 2, 7).is_err());
    }

    #[test]
    fn normalize_examples() {
        let fam = PolynomialFamily::from_columns(2, vec![vec![p(&[3, 0, 1]), p(&[0, 1])]]).unwrap();
        let (norm, offsets) = normalize_family(&fam);
        assert_eq!(norm.column(0), vec![p(&[0, 0, 1]), p(&[0, 1])]);
        assert_eq!(offsets, vec![GroupElement::from([3, 0])]);

        let (again, zero) = normalize_family(&norm);
        assert_eq!(again, norm);
        assert!(zero[0].is_zero());

        let constants = PolynomialFamily::from_columns(2, vec![vec![p(&[5]), p(&[7])]]).unwrap();
        let (norm, offsets) = normalize_family(&constants);
        assert_eq!(norm.column(0), vec![IntPoly::zero(), IntPoly::zero()]);
        assert_eq!(offsets[0], GroupElement::from([5, 7]));
        assert!(!check_nondegeneracy(&norm).is_nondegenerate());
    }

    #[test]
    fn nondegeneracy_examples() {
        assert!(check_nondegeneracy(&prop32()).is_nondegenerate());

        let twins = PolynomialFamily::from_columns(
            2,
            vec![vec![p(&[0, 1]), IntPoly::zero()], vec![p(&[0, 1]), IntPoly::zero()]],
        )
        .unwrap();
        let rep = check_nondegeneracy(&twins);
        assert_eq!(rep.pairs, vec![PairCheck { k: 0, l: 1, nonconstant: false }]);

        let zero = PolynomialFamily::from_columns(2, vec![vec![IntPoly::zero(), IntPoly::zero()]]).unwrap();
        assert_eq!(check_nondegeneracy(&zero).columns, vec![false]);
    }

    #[test]
    fn shifted_twins_are_degenerate() {
        let fam = PolynomialFamily::from_columns(1, vec![vec![p(&[0, 1])], vec![p(&[4, 1])]]).unwrap();
        assert!(!check_nondegeneracy(&fam).is_nondegenerate());
    }

    #[test]
    fn single_generator_pairs_only_within_generator() {
        let fam = PolynomialFamily::single_generator(2, vec![p(&[0, 1]), p(&[0, 1])], vec![0, 1]).unwrap();
        let rep = check_nondegeneracy(&fam);
        assert!(rep.pairs.is_empty());
        assert!(rep.is_nondegenerate());
        assert!(fam.is_single_generator_form());

        let same = PolynomialFamily::single_generator(2, vec![p(&[0, 1]), p(&[0, 1])], vec![1, 1]).unwrap();
        assert!(!check_nondegeneracy(&same).is_nondegenerate());
    }

    #[test]
    fn generator_assignment_must_match_support() {
        let fam = prop32();
        assert!(fam.with_generators(vec![0, 0]).is_err());
    }

    fn naive_eval(c: &[i128], n: u64) -> i128 {
        c.iter()
            .enumerate()
            .map(|(e, &a)| a * (n as i128).pow(e as u32))
            .sum()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn horner_matches_power_sum(c in prop::collection::vec(-1000i128..1000, 0..5), n in 0u64..10_000) {
            prop_assert_eq!(IntPoly::new(c.clone()).eval(n).unwrap(), naive_eval(&c, n));
        }
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(cols in prop::collection::vec(prop::collection::vec(prop::collection::vec(-50i128..50, 0..4), 2), 1..4)) {
            let columns = cols.into_iter().map(|c| c.into_iter().map(IntPoly::new).collect()).collect();
            let fam = PolynomialFamily::from_columns(2, columns).unwrap();
            let (once, _) = normalize_family(&fam);
            let (twice, offsets) = normalize_family(&once);
            prop_assert_eq!(once, twice);
            prop_assert!(offsets.iter().all(GroupElement::is_zero));
        }
    }
}
