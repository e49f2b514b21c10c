use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::lattice::GroupElement;
use crate::systems::field::SymbolLaw;

pub const MAX_WINDOW: usize = 24;
pub const MAX_TABLE: u128 = 1 << 24;

/// Function of the symbols on a finite window of lattice coordinates.
///
/// The table is indexed in mixed radix: window position `i` contributes
/// `symbol · a^i`, so the first window coordinate is the least significant digit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cylinder<T> {
    dim: usize,
    alphabet: usize,
    window: Vec<GroupElement>,
    table: Vec<T>,
}

pub type CylinderObservable = Cylinder<f64>;

pub(crate) fn table_len(alphabet: usize, width: usize) -> Option<u128> {
    (alphabet as u128).checked_pow(width as u32)
}

impl<T: Clone> Cylinder<T> {
    pub fn new(dim: usize, alphabet: usize, window: Vec<GroupElement>, table: Vec<T>) -> Result<Self> {
        if alphabet < 2 {
            return Err(Error::InvalidArgument("alphabet needs at least 2 symbols".into()));
        }
        if window.len() > MAX_WINDOW {
            return Err(Error::TooLarge {
                what: "cylinder window",
                needed: window.len() as u128,
                cap: MAX_WINDOW as u128,
            });
        }
        for w in &window {
            check_dim(dim, w.dim())?;
        }
        let distinct: HashSet<&GroupElement> = window.iter().collect();
        if distinct.len() != window.len() {
            return Err(Error::InvalidArgument("window coordinates must be distinct".into()));
        }
        let needed = table_len(alphabet, window.len()).unwrap_or(u128::MAX);
        if needed > MAX_TABLE {
            return Err(Error::TooLarge {
                what: "cylinder table",
                needed,
                cap: MAX_TABLE,
            });
        }
        if table.len() as u128 != needed {
            return Err(Error::InvalidArgument(format!(
                "table has {} entries, window needs {needed}",
                table.len()
            )));
        }
        Ok(Self {
            dim,
            alphabet,
            window,
            table,
        })
    }

    pub fn constant(dim: usize, alphabet: usize, value: T) -> Self {
        Self {
            dim,
            alphabet,
            window: Vec::new(),
            table: vec![value],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn window(&self) -> &[GroupElement] {
        &self.window
    }

    pub fn table(&self) -> &[T] {
        &self.table
    }

    pub fn is_constant_window(&self) -> bool {
        self.window.is_empty()
    }

    /// Table entry for the symbols assigned to the window, in window order.
    pub fn value_at(&self, assignment: &[usize]) -> &T {
        let mut idx = 0;
        for &s in assignment.iter().rev() {
            idx = idx * self.alphabet + s;
        }
        &self.table[idx]
    }

    /// `f ∘ T_g`: the same table read at `window + g`.
    pub fn translated(&self, g: &GroupElement) -> Result<Self> {
        let window = self
            .window
            .iter()
            .map(|w| w.checked_add(g))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            window,
            ..self.clone()
        })
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Cylinder<U> {
        Cylinder {
            dim: self.dim,
            alphabet: self.alphabet,
            window: self.window.clone(),
            table: self.table.iter().map(f).collect(),
        }
    }

    pub(crate) fn from_parts(dim: usize, alphabet: usize, window: Vec<GroupElement>, table: Vec<T>) -> Self {
        Self {
            dim,
            alphabet,
            window,
            table,
        }
    }
}

impl CylinderObservable {
    /// `1` when the window reads `pattern`, `0` otherwise.
    pub fn indicator(dim: usize, alphabet: usize, window: Vec<GroupElement>, pattern: &[usize]) -> Result<Self> {
        check_dim(window.len(), pattern.len())?;
        if pattern.iter().any(|&s| s >= alphabet) {
            return Err(Error::InvalidArgument("pattern symbol outside alphabet".into()));
        }
        let needed = table_len(alphabet, window.len()).unwrap_or(u128::MAX);
        if needed > MAX_TABLE {
            return Err(Error::TooLarge {
                what: "cylinder table",
                needed,
                cap: MAX_TABLE,
            });
        }
        let mut table = vec![0.0; needed as usize];
        let idx = pattern.iter().rev().fold(0usize, |acc, &s| acc * alphabet + s);
        table[idx] = 1.0;
        Self::new(dim, alphabet, window, table)
    }

    pub fn bound(&self) -> f64 {
        self.table.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_exact(&self) -> Result<Cylinder<BigRational>> {
        let table = self
            .table
            .iter()
            .map(|&v| {
                BigRational::from_float(v)
                    .ok_or_else(|| Error::InvalidArgument(format!("table value {v} is not finite")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Cylinder::from_parts(self.dim, self.alphabet, self.window.clone(), table))
    }

    /// Exact `∫ f dμ` under the product measure with marginal `law`.
    pub fn integral_exact(&self, law: &SymbolLaw) -> Result<BigRational> {
        check_dim(self.alphabet, law.alphabet())?;
        Ok(product_measure_sum(&self.to_exact()?, law.exact()))
    }

    pub fn integral(&self, law: &SymbolLaw) -> Result<f64> {
        Ok(self.integral_exact(law)?.to_f64().unwrap_or(f64::NAN))
    }

    /// `∫ |f|^p dμ` in floating point.
    pub fn abs_moment(&self, law: &SymbolLaw, p: f64) -> Result<f64> {
        check_dim(self.alphabet, law.alphabet())?;
        let powered = self.map(|v| v.abs().powf(p));
        Ok(product_measure_sum(&powered, law.probs()))
    }
}

/// `Σ_assignments f(assignment) · Π_i prob[assignment_i]`, by full enumeration.
pub fn product_measure_sum<T>(f: &Cylinder<T>, probs: &[T]) -> T
where
    T: Clone + Zero + One + std::ops::Mul<Output = T>,
{
    let a = f.alphabet;
    let width = f.window.len();
    let mut total = T::zero();
    for (idx, value) in f.table.iter().enumerate() {
        let mut weight = T::one();
        let mut rest = idx;
        for _ in 0..width {
            weight = weight * probs[rest % a].clone();
            rest /= a;
        }
        total = total + weight * value.clone();
    }
    total
}

/// Fixed-point torus coordinate: `value / 2^64 ∈ [0, 1)`.
pub fn to_fixed(x: f64) -> Result<u64> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!("{x} is not in [0, 1)")));
    }
    Ok((x * TWO_64) as u64)
}

const TWO_64: f64 = 18_446_744_073_709_551_616.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum TorusShape {
    /// `{x : (x_c - lo_c) mod 2^64 < width_c for every c}`
    Box { lo: Vec<u64>, width: Vec<u128> },
    /// `cos(2π Σ_c freq_c x_c)`, the real part of the character.
    Character { freq: Vec<i64> },
}

/// Observable on the k-torus, times a real scale.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TorusObservable {
    pub scale: f64,
    pub shape: TorusShape,
}

impl TorusObservable {
    /// Half-open box `[lo, hi)` with corners in `[0, 1]`.
    pub fn box_from_corners(lo: &[f64], hi: &[f64]) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        let mut lo_fixed = Vec::with_capacity(lo.len());
        let mut width = Vec::with_capacity(lo.len());
        for (&a, &b) in lo.iter().zip(hi) {
            if !(0.0..=1.0).contains(&b) || b < a {
                return Err(Error::InvalidArgument(format!("box side [{a}, {b}) is invalid")));
            }
            let a_fixed = to_fixed(a)?;
            let b_fixed = (b * TWO_64) as u128;
            lo_fixed.push(a_fixed);
            width.push(b_fixed - a_fixed as u128);
        }
        Ok(Self {
            scale: 1.0,
            shape: TorusShape::Box { lo: lo_fixed, width },
        })
    }

    pub fn character(freq: Vec<i64>) -> Self {
        Self {
            scale: 1.0,
            shape: TorusShape::Character { freq },
        }
    }

    pub fn constant(k: usize, value: f64) -> Self {
        Self {
            scale: value,
            shape: TorusShape::Character { freq: vec![0; k] },
        }
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.scale *= factor;
        self
    }

    pub fn dim(&self) -> usize {
        match &self.shape {
            TorusShape::Box { lo, .. } => lo.len(),
            TorusShape::Character { freq } => freq.len(),
        }
    }

    pub fn bound(&self) -> f64 {
        self.scale.abs()
    }

    /// Evaluates at the point whose coordinate `c` is `coord(c)`.
    #[inline]
    pub(crate) fn eval_with(&self, coord: impl Fn(usize) -> u64) -> f64 {
        let raw = match &self.shape {
            TorusShape::Box { lo, width } => {
                let inside = lo
                    .iter()
                    .zip(width)
                    .enumerate()
                    .all(|(c, (&l, &w))| (coord(c).wrapping_sub(l) as u128) < w);
                if inside {
                    1.0
                } else {
                    0.0
                }
            }
            TorusShape::Character { freq } => {
                let phase = freq
                    .iter()
                    .enumerate()
                    .fold(0u64, |acc, (c, &k)| acc.wrapping_add(coord(c).wrapping_mul(k as u64)));
                (std::f64::consts::TAU * (phase as f64 / TWO_64)).cos()
            }
        };
        self.scale * raw
    }

    pub fn evaluate(&self, x: &[u64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.eval_with(|c| x[c]))
    }

    /// Exact integral over Haar measure on the discretized torus.
    pub fn integral_exact(&self) -> Result<BigRational> {
        let scale = BigRational::from_float(self.scale)
            .ok_or_else(|| Error::InvalidArgument("scale is not finite".into()))?;
        let raw = match &self.shape {
            TorusShape::Box { width, .. } => {
                let denom: BigInt = BigInt::one() << 64usize;
                width
                    .iter()
                    .map(|&w| BigRational::new(BigInt::from(w), denom.clone()))
                    .fold(BigRational::one(), |acc, v| acc * v)
            }
            TorusShape::Character { freq } => {
                if freq.iter().all(|&k| k == 0) {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            }
        };
        Ok(scale * raw)
    }

    pub fn integral(&self) -> Result<f64> {
        Ok(self.integral_exact()?.to_f64().unwrap_or(f64::NAN))
    }

    /// `∫ |v|^p` for `p > 0`.
    pub fn abs_moment(&self, p: f64) -> f64 {
        let raw = match &self.shape {
            TorusShape::Box { width, .. } => width.iter().map(|&w| w as f64 / TWO_64).product(),
            TorusShape::Character { freq } => {
                if freq.iter().all(|&k| k == 0) {
                    1.0
                } else {
                    // ∫_0^1 |cos 2πθ|^p dθ = Γ((p+1)/2) / (√π Γ(p/2 + 1))
                    use statrs::function::gamma::ln_gamma;
                    (ln_gamma((p + 1.0) / 2.0) - 0.5 * std::f64::consts::PI.ln() - ln_gamma(p / 2.0 + 1.0)).exp()
                }
            }
        };
        self.scale.abs().powf(p) * raw
    }
}

/// `u ⊗ v` on a product of a shift and a rotation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProductObservable {
    pub u: CylinderObservable,
    pub v: TorusObservable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Observable {
    Cylinder(CylinderObservable),
    Torus(TorusObservable),
    Product(ProductObservable),
}

impl Observable {
    pub fn bound(&self) -> f64 {
        match self {
            Observable::Cylinder(f) => f.bound(),
            Observable::Torus(v) => v.bound(),
            Observable::Product(p) => p.u.bound() * p.v.bound(),
        }
    }

    pub fn as_cylinder(&self) -> Option<&CylinderObservable> {
        match self {
            Observable::Cylinder(f) => Some(f),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ge(c: &[i128]) -> GroupElement {
        GroupElement::new(c.to_vec())
    }

    #[test]
    fn two_coordinate_indicator_integral() {
        let law = SymbolLaw::uniform(2).unwrap();
        let f = CylinderObservable::indicator(2, 2, vec![ge(&[0, 0]), ge(&[0, 1])], &[1, 1]).unwrap();
        assert_eq!(f.integral_exact(&law).unwrap(), BigRational::new(1.into(), 4.into()));
        assert_eq!(*f.value_at(&[1, 1]), 1.0);
        assert_eq!(*f.value_at(&[1, 0]), 0.0);
        assert_eq!(f.table(), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn biased_integral() {
        let law = SymbolLaw::from_f64(vec![0.25, 0.75]).unwrap();
        let f = CylinderObservable::indicator(1, 2, vec![ge(&[3])], &[1]).unwrap();
        assert_eq!(f.integral(&law).unwrap(), 0.75);
    }

    #[test]
    fn translation_preserves_integral() {
        let law = SymbolLaw::from_f64(vec![0.125, 0.5, 0.375]).unwrap();
        let table: Vec<f64> = (0..27).map(|i| (i * 7 % 11) as f64 - 3.0).collect();
        let f = Cylinder::new(2, 3, vec![ge(&[0, 0]), ge(&[1, -2]), ge(&[5, 5])], table).unwrap();
        let g = ge(&[1 << 80, -(1 << 70)]);
        assert_eq!(
            f.integral_exact(&law).unwrap(),
            f.translated(&g).unwrap().integral_exact(&law).unwrap()
        );
    }

    #[test]
    fn cylinder_validation() {
        assert!(Cylinder::new(1, 2, vec![ge(&[0]), ge(&[0])], vec![0.0; 4]).is_err());
        assert!(Cylinder::new(1, 2, vec![ge(&[0])], vec![0.0; 3]).is_err());
        assert!(Cylinder::new(2, 2, vec![ge(&[0])], vec![0.0; 2]).is_err());
        let wide: Vec<GroupElement> = (0..25).map(|i| ge(&[i])).collect();
        assert!(matches!(Cylinder::new(1, 2, wide, vec![0.0]), Err(Error::TooLarge { .. })));
        let big: Vec<GroupElement> = (0..13).map(|i| ge(&[i])).collect();
        assert!(matches!(Cylinder::new(1, 4, big, vec![0.0]), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn torus_box_volume_and_membership() {
        let b = TorusObservable::box_from_corners(&[0.0], &[0.5]).unwrap();
        assert_eq!(b.integral_exact().unwrap(), BigRational::new(1.into(), 2.into()));
        assert_eq!(b.evaluate(&[0]).unwrap(), 1.0);
        assert_eq!(b.evaluate(&[(1 << 63) - 1]).unwrap(), 1.0);
        assert_eq!(b.evaluate(&[1 << 63]).unwrap(), 0.0);
        let full = TorusObservable::box_from_corners(&[0.0], &[1.0]).unwrap();
        assert_eq!(full.evaluate(&[u64::MAX]).unwrap(), 1.0);
        assert_eq!(full.integral().unwrap(), 1.0);
    }

    #[test]
    fn characters() {
        let chi = TorusObservable::character(vec![1]);
        assert_eq!(chi.integral().unwrap(), 0.0);
        assert_eq!(chi.evaluate(&[0]).unwrap(), 1.0);
        assert!((chi.evaluate(&[1 << 63]).unwrap() + 1.0).abs() < 1e-15);
        let one = TorusObservable::constant(2, 1.0);
        assert_eq!(one.evaluate(&[123, 456]).unwrap(), 1.0);
        assert_eq!(one.integral().unwrap(), 1.0);
        // ∫ cos^2 = 1/2
        assert!((chi.abs_moment(2.0) - 0.5).abs() < 1e-12);
    }
}
