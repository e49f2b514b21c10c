//! Model measure-preserving Z^d systems with exact group actions.
//!
//! * [`BernoulliShift`]: a point is `(seed, offset)`; its symbol at `v` is the
//!   keyed-field symbol at the absolute coordinate `offset + v`, so acting by
//!   `g` only moves the offset. The canonical K-system.
//! * [`TorusRotation`]: 64-bit fixed-point rotation, exact modulo `2^64`. Zero entropy.
//! * [`ProductSystem`]: shift × rotation, Pinsker factor is the rotation.

pub mod field;
pub mod observable;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::lattice::GroupElement;
use field::{absorb, mix, point_seed, SymbolLaw};
pub use observable::{
    Cylinder, CylinderObservable, Observable, ProductObservable, TorusObservable, TorusShape,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BernoulliShift {
    pub d: usize,
    pub law: SymbolLaw,
    pub master_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TorusRotation {
    pub d: usize,
    pub k: usize,
    /// `alphas[i][c]`: rotation of torus coordinate `c` under generator `i`.
    pub alphas: Vec<Vec<u64>>,
    pub master_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProductSystem {
    pub first: BernoulliShift,
    pub second: TorusRotation,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum SystemInstance {
    Bernoulli(BernoulliShift),
    Torus(TorusRotation),
    Product(ProductSystem),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ShiftPoint {
    pub seed: u64,
    pub offset: GroupElement,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TorusPoint(pub Vec<u64>);

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Point {
    Shift(ShiftPoint),
    Torus(TorusPoint),
    Product(ShiftPoint, TorusPoint),
}

impl BernoulliShift {
    pub fn new(d: usize, law: SymbolLaw, master_seed: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        Ok(Self { d, law, master_seed })
    }

    pub fn sample(&self, stream_id: u64) -> ShiftPoint {
        ShiftPoint {
            seed: point_seed(self.master_seed, stream_id),
            offset: GroupElement::zero(self.d),
        }
    }

    /// Symbol of `x` at lattice coordinate `v`.
    pub fn symbol(&self, x: &ShiftPoint, v: &GroupElement) -> Result<usize> {
        let abs = x.offset.checked_add(v)?;
        Ok(self.law.symbol(field::coordinate_hash(x.seed, abs.coords())))
    }

    fn act(&self, g: &GroupElement, x: &ShiftPoint) -> Result<ShiftPoint> {
        check_dim(self.d, g.dim())?;
        Ok(ShiftPoint {
            seed: x.seed,
            offset: x.offset.checked_add(g)?,
        })
    }

    /// `f(T_g x)` without materializing `T_g x`.
    #[inline]
    fn eval_cylinder(&self, f: &CylinderObservable, x: &ShiftPoint, g: &[i128]) -> Result<f64> {
        let a = self.law.alphabet();
        let mut idx = 0usize;
        let mut place = 1usize;
        for w in f.window() {
            let mut h = x.seed;
            for ((&o, &s), &c) in x.offset.coords().iter().zip(g).zip(w.coords()) {
                let abs = o
                    .checked_add(s)
                    .and_then(|v| v.checked_add(c))
                    .ok_or_else(|| Error::Overflow("shift coordinate".into()))?;
                h = absorb(h, abs);
            }
            idx += self.law.symbol(h) * place;
            place *= a;
        }
        Ok(f.table()[idx])
    }

    fn check_cylinder(&self, f: &CylinderObservable) -> Result<()> {
        if f.dim() != self.d || f.alphabet() != self.law.alphabet() {
            return Err(Error::Incompatible(format!(
                "cylinder on Z^{} over {} symbols, shift on Z^{} over {} symbols",
                f.dim(),
                f.alphabet(),
                self.d,
                self.law.alphabet()
            )));
        }
        Ok(())
    }
}

impl TorusRotation {
    pub fn new(d: usize, alphas: Vec<Vec<u64>>, master_seed: u64) -> Result<Self> {
        check_dim(d, alphas.len())?;
        let k = alphas.first().map_or(0, Vec::len);
        if k == 0 {
            return Err(Error::InvalidArgument("torus dimension must be at least 1".into()));
        }
        for row in &alphas {
            check_dim(k, row.len())?;
        }
        Ok(Self {
            d,
            k,
            alphas,
            master_seed,
        })
    }

    pub fn sample(&self, stream_id: u64) -> TorusPoint {
        let seed = point_seed(self.master_seed, stream_id);
        TorusPoint((0..self.k).map(|c| mix(seed ^ mix(c as u64))).collect())
    }

    /// Coordinate `c` of `R_g x`.
    #[inline]
    fn rotated(&self, x: &TorusPoint, g: &[i128], c: usize) -> u64 {
        self.alphas
            .iter()
            .zip(g)
            .fold(x.0[c], |acc, (row, &n)| acc.wrapping_add(row[c].wrapping_mul(n as u64)))
    }

    fn act(&self, g: &GroupElement, x: &TorusPoint) -> Result<TorusPoint> {
        check_dim(self.d, g.dim())?;
        Ok(TorusPoint((0..self.k).map(|c| self.rotated(x, g.coords(), c)).collect()))
    }

    fn check_observable(&self, v: &TorusObservable) -> Result<()> {
        if v.dim() != self.k {
            return Err(Error::Incompatible(format!(
                "torus observable on T^{}, rotation on T^{}",
                v.dim(),
                self.k
            )));
        }
        Ok(())
    }
}

impl ProductSystem {
    pub fn new(first: BernoulliShift, second: TorusRotation) -> Result<Self> {
        check_dim(first.d, second.d)?;
        Ok(Self { first, second })
    }
}

impl SystemInstance {
    pub fn d(&self) -> usize {
        match self {
            SystemInstance::Bernoulli(s) => s.d,
            SystemInstance::Torus(t) => t.d,
            SystemInstance::Product(p) => p.first.d,
        }
    }

    /// Whether the system is a K-system (trivial Pinsker factor).
    pub fn is_k_system(&self) -> bool {
        matches!(self, SystemInstance::Bernoulli(_))
    }

    pub fn as_bernoulli(&self) -> Option<&BernoulliShift> {
        match self {
            SystemInstance::Bernoulli(s) => Some(s),
            _ => None,
        }
    }

    /// Checks that `obs` can be evaluated on this system.
    pub fn check_observable(&self, obs: &Observable) -> Result<()> {
        match (self, obs) {
            (SystemInstance::Bernoulli(s), Observable::Cylinder(f)) => s.check_cylinder(f),
            (SystemInstance::Torus(t), Observable::Torus(v)) => t.check_observable(v),
            (SystemInstance::Product(p), Observable::Product(o)) => {
                p.first.check_cylinder(&o.u)?;
                p.second.check_observable(&o.v)
            }
            (_, _) => Err(Error::Incompatible(format!(
                "{} observable on {} system",
                obs_kind(obs),
                self.kind()
            ))),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SystemInstance::Bernoulli(_) => "bernoulli",
            SystemInstance::Torus(_) => "torus",
            SystemInstance::Product(_) => "product",
        }
    }

    /// Exact `∫ f dμ`.
    pub fn integral_exact(&self, obs: &Observable) -> Result<BigRational> {
        self.check_observable(obs)?;
        match (self, obs) {
            (SystemInstance::Bernoulli(s), Observable::Cylinder(f)) => f.integral_exact(&s.law),
            (SystemInstance::Torus(_), Observable::Torus(v)) => v.integral_exact(),
            (SystemInstance::Product(p), Observable::Product(o)) => {
                Ok(o.u.integral_exact(&p.first.law)? * o.v.integral_exact()?)
            }
            _ => unreachable!("checked above"),
        }
    }

    pub fn integral(&self, obs: &Observable) -> Result<f64> {
        Ok(self.integral_exact(obs)?.to_f64().unwrap_or(f64::NAN))
    }

    /// `‖f‖_p^p`
    pub fn abs_moment(&self, obs: &Observable, p: f64) -> Result<f64> {
        self.check_observable(obs)?;
        match (self, obs) {
            (SystemInstance::Bernoulli(s), Observable::Cylinder(f)) => f.abs_moment(&s.law, p),
            (SystemInstance::Torus(_), Observable::Torus(v)) => Ok(v.abs_moment(p)),
            (SystemInstance::Product(s), Observable::Product(o)) => {
                Ok(o.u.abs_moment(&s.first.law, p)? * o.v.abs_moment(p))
            }
            _ => unreachable!("checked above"),
        }
    }
}

fn obs_kind(obs: &Observable) -> &'static str {
    match obs {
        Observable::Cylinder(_) => "cylinder",
        Observable::Torus(_) => "torus",
        Observable::Product(_) => "product",
    }
}

/// Deterministic point for `stream_id`; factors of a product are sampled independently.
pub fn sample_point(sys: &SystemInstance, stream_id: u64) -> Point {
    match sys {
        SystemInstance::Bernoulli(s) => Point::Shift(s.sample(stream_id)),
        SystemInstance::Torus(t) => Point::Torus(t.sample(stream_id)),
        SystemInstance::Product(p) => Point::Product(p.first.sample(stream_id), p.second.sample(stream_id)),
    }
}

pub fn act(sys: &SystemInstance, g: &GroupElement, x: &Point) -> Result<Point> {
    match (sys, x) {
        (SystemInstance::Bernoulli(s), Point::Shift(p)) => Ok(Point::Shift(s.act(g, p)?)),
        (SystemInstance::Torus(t), Point::Torus(p)) => Ok(Point::Torus(t.act(g, p)?)),
        (SystemInstance::Product(s), Point::Product(a, b)) => {
            Ok(Point::Product(s.first.act(g, a)?, s.second.act(g, b)?))
        }
        _ => Err(Error::Incompatible(format!("point does not belong to {} system", sys.kind()))),
    }
}

pub fn evaluate(obs: &Observable, sys: &SystemInstance, x: &Point) -> Result<f64> {
    evaluate_shifted(obs, sys, x, &vec![0; sys.d()])
}

/// `f(T_g x)`, computed without building `T_g x`.
#[inline]
pub fn evaluate_shifted(obs: &Observable, sys: &SystemInstance, x: &Point, g: &[i128]) -> Result<f64> {
    check_dim(sys.d(), g.len())?;
    match (sys, obs, x) {
        (SystemInstance::Bernoulli(s), Observable::Cylinder(f), Point::Shift(p)) => {
            s.check_cylinder(f)?;
            s.eval_cylinder(f, p, g)
        }
        (SystemInstance::Torus(t), Observable::Torus(v), Point::Torus(p)) => {
            t.check_observable(v)?;
            Ok(v.eval_with(|c| t.rotated(p, g, c)))
        }
        (SystemInstance::Product(s), Observable::Product(o), Point::Product(a, b)) => {
            s.first.check_cylinder(&o.u)?;
            s.second.check_observable(&o.v)?;
            let u = s.first.eval_cylinder(&o.u, a, g)?;
            if u == 0.0 {
                return Ok(0.0);
            }
            Ok(u * o.v.eval_with(|c| s.second.rotated(b, g, c)))
        }
        _ => {
            sys.check_observable(obs)?;
            Err(Error::Incompatible(format!("point does not belong to {} system", sys.kind())))
        }
    }
}

/// `E(u ⊗ v | Pinsker) = (∫u) · v`, a function of the rotation factor only.
pub fn pinsker_project(obs: &Observable, sys: &ProductSystem) -> Result<TorusObservable> {
    let Observable::Product(o) = obs else {
        return Err(Error::Incompatible("Pinsker projection needs a product observable".into()));
    };
    sys.first.check_cylinder(&o.u)?;
    sys.second.check_observable(&o.v)?;
    let mean = o.u.integral(&sys.first.law)?;
    Ok(o.v.clone().scaled(mean))
}

/// Lifts a rotation-factor observable to the product system as `1 ⊗ v`.
pub fn lift_second(v: TorusObservable, sys: &ProductSystem) -> Observable {
    Observable::Product(ProductObservable {
        u: Cylinder::constant(sys.first.d, sys.first.law.alphabet(), 1.0),
        v,
    })
}
