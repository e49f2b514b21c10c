//! Streaming polynomial multiple ergodic averages.
//!
//! Every engine walks `n` sequentially for one point, keeps a running sum and
//! emits `sum / N` at each checkpoint. Cesàro averages start at `n = 0`,
//! weighted averages at `n = 1`; prime averages use `n = 0` with the
//! polynomials evaluated at the `n`-th prime.

pub mod orthogonality;
pub mod primes;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::polys::{PolynomialFamily, MAX_INDEX};
use crate::systems::{evaluate_shifted, Observable, Point, SystemInstance};
pub use orthogonality::{orthogonality_probe, OrthogonalityEntry, OrthogonalityReport};
pub use primes::{is_prime_trial, PrimeStream};

/// Strictly increasing `N` values at which averages are recorded.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct CheckpointSchedule(Vec<u64>);

impl TryFrom<Vec<u64>> for CheckpointSchedule {
    type Error = Error;

    fn try_from(points: Vec<u64>) -> Result<Self> {
        Self::new(points)
    }
}

impl From<CheckpointSchedule> for Vec<u64> {
    fn from(s: CheckpointSchedule) -> Self {
        s.0
    }
}

impl CheckpointSchedule {
    pub fn new(points: Vec<u64>) -> Result<Self> {
        match points.first() {
            None => return Err(Error::InvalidArgument("checkpoint schedule is empty".into())),
            Some(0) => return Err(Error::InvalidArgument("first checkpoint must be at least 1".into())),
            _ => {}
        }
        if let Some(pair) = points.windows(2).find(|p| p[0] >= p[1]) {
            return Err(Error::InvalidArgument(format!(
                "checkpoints must increase strictly: {} then {}",
                pair[0], pair[1]
            )));
        }
        let last = *points.last().expect("nonempty");
        if last > MAX_INDEX {
            return Err(Error::TooLarge {
                what: "checkpoint",
                needed: last as u128,
                cap: MAX_INDEX as u128,
            });
        }
        Ok(Self(points))
    }

    /// `start · 2^k` while below `max`, then `max` itself.
    pub fn geometric(start: u64, max: u64) -> Result<Self> {
        if start == 0 || start > max {
            return Err(Error::InvalidArgument(format!("bad geometric schedule {start}..{max}")));
        }
        let mut points = Vec::new();
        let mut n = start;
        while n < max {
            points.push(n);
            n = n.saturating_mul(2);
        }
        points.push(max);
        Self::new(points)
    }

    pub fn points(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> u64 {
        *self.0.last().expect("nonempty")
    }
}

/// Averages of one sample point at each checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesRow {
    pub stream_id: u64,
    pub values: Vec<f64>,
}

/// Rows for many sample points sharing one schedule.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AverageSeries {
    pub checkpoints: Vec<u64>,
    /// First summation index: 0 for Cesàro and prime averages, 1 for weighted.
    pub start_index: u64,
    pub label: String,
    pub rows: Vec<SeriesRow>,
}

/// Bounded weight sequence `g(n)`, `n ≥ 1`, with declared Cesàro mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WeightSequence {
    Constant { value: f64 },
    /// `g(n) = values[(n - 1) mod len]`
    Periodic { values: Vec<f64> },
    /// `g(n) = (-1)^n`
    Alternating,
    /// `g(n) = values[n - 1]`; runs longer than the table are rejected.
    Table { values: Vec<f64>, mean: f64 },
}

impl WeightSequence {
    pub fn validate(&self) -> Result<()> {
        let values = match self {
            WeightSequence::Constant { value } => std::slice::from_ref(value),
            WeightSequence::Periodic { values } | WeightSequence::Table { values, .. } => values.as_slice(),
            WeightSequence::Alternating => &[],
        };
        if matches!(self, WeightSequence::Periodic { values } | WeightSequence::Table { values, .. } if values.is_empty()) {
            return Err(Error::InvalidArgument("weight sequence has no values".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("weights must be finite".into()));
        }
        Ok(())
    }

    pub fn value(&self, n: u64) -> Result<f64> {
        match self {
            WeightSequence::Constant { value } => Ok(*value),
            WeightSequence::Periodic { values } => Ok(values[((n - 1) % values.len() as u64) as usize]),
            WeightSequence::Alternating => Ok(if n % 2 == 0 { 1.0 } else { -1.0 }),
            WeightSequence::Table { values, .. } => values.get((n - 1) as usize).copied().ok_or_else(|| {
                Error::InvalidArgument(format!("weight table has {} entries, needed g({n})", values.len()))
            }),
        }
    }

    pub fn bound(&self) -> f64 {
        match self {
            WeightSequence::Constant { value } => value.abs(),
            WeightSequence::Periodic { values } | WeightSequence::Table { values, .. } => {
                values.iter().fold(0.0, |m, v| m.max(v.abs()))
            }
            WeightSequence::Alternating => 1.0,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            WeightSequence::Constant { value } => *value,
            WeightSequence::Periodic { values } => values.iter().sum::<f64>() / values.len() as f64,
            WeightSequence::Alternating => 0.0,
            WeightSequence::Table { mean, .. } => *mean,
        }
    }
}

/// Observables, family and system for one averaging run.
#[derive(Clone, Copy, Debug)]
pub struct AverageSpec<'a> {
    pub sys: &'a SystemInstance,
    pub obs: &'a [Observable],
    pub fam: &'a PolynomialFamily,
}

impl AverageSpec<'_> {
    /// Shapes agree and the family is normalized (`p_{i,j}(0) = 0`).
    pub fn validate(&self) -> Result<()> {
        check_dim(self.sys.d(), self.fam.d())?;
        check_dim(self.fam.m(), self.obs.len())?;
        self.fam.check_caps()?;
        for o in self.obs {
            self.sys.check_observable(o)?;
        }
        for j in 0..self.fam.m() {
            for i in 0..self.fam.d() {
                if self.fam.entry(i, j).constant_term() != 0 {
                    return Err(Error::InvalidArgument(format!(
                        "family is not normalized: entry ({i},{j}) has constant term {}",
                        self.fam.entry(i, j).constant_term()
                    )));
                }
            }
        }
        Ok(())
    }

    /// `∏_j bound(f_j)`
    pub fn bound(&self) -> f64 {
        self.obs.iter().map(Observable::bound).product()
    }

    /// `∏_j f_j(T^{p_j(k)} x)`
    #[inline]
    fn term(&self, x: &Point, k: u64, g: &mut [i128]) -> Result<f64> {
        let mut prod = 1.0;
        for (j, f) in self.obs.iter().enumerate() {
            self.fam.orbit_exponent_into(j, k, g)?;
            prod *= evaluate_shifted(f, self.sys, x, g)?;
            if prod == 0.0 {
                break;
            }
        }
        Ok(prod)
    }

    /// Shared streaming loop: term `t` (for `t = 1..=N_max`) has summation
    /// index `start + t - 1`, polynomial argument `arg(index)` and weight
    /// `weight(index)`. Calls `visit(N, A_N)` after every term.
    fn stream(
        &self,
        x: &Point,
        n_max: u64,
        start: u64,
        mut arg: impl FnMut(u64) -> u64,
        mut weight: impl FnMut(u64) -> Result<f64>,
        mut visit: impl FnMut(u64, f64),
    ) -> Result<()> {
        self.validate()?;
        let mut g = vec![0i128; self.fam.d()];
        let mut sum = 0.0;
        for t in 1..=n_max {
            let n = start + t - 1;
            let w = weight(n)?;
            let term = if w == 0.0 { 0.0 } else { w * self.term(x, arg(n), &mut g)? };
            sum += term;
            visit(t, sum / t as f64);
        }
        Ok(())
    }

    fn at_checkpoints(
        &self,
        x: &Point,
        sched: &CheckpointSchedule,
        start: u64,
        arg: impl FnMut(u64) -> u64,
        weight: impl FnMut(u64) -> Result<f64>,
    ) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(sched.len());
        let mut next = sched.points().iter().peekable();
        self.stream(x, sched.max(), start, arg, weight, |n, a| {
            if next.peek() == Some(&&n) {
                out.push(a);
                next.next();
            }
        })?;
        Ok(out)
    }
}

/// `(1/N) Σ_{n=0}^{N-1} ∏_j f_j(T^{p_j(n)} x)` at each checkpoint.
pub fn cesaro_series(spec: &AverageSpec, x: &Point, sched: &CheckpointSchedule) -> Result<Vec<f64>> {
    cesaro_series_from(spec, x, sched, 0)
}

/// Cesàro averages over `n = start, …, start + N - 1`.
pub fn cesaro_series_from(spec: &AverageSpec, x: &Point, sched: &CheckpointSchedule, start: u64) -> Result<Vec<f64>> {
    spec.at_checkpoints(x, sched, start, |n| n, |_| Ok(1.0))
}

/// `(1/N) Σ_{n=1}^{N} g(n) ∏_j f_j(T^{p_j(n)} x)` at each checkpoint.
pub fn weighted_series(
    spec: &AverageSpec,
    x: &Point,
    sched: &CheckpointSchedule,
    wseq: &WeightSequence,
) -> Result<Vec<f64>> {
    wseq.validate()?;
    spec.at_checkpoints(x, sched, 1, |n| n, |n| wseq.value(n))
}

/// Run label for prime averages: the single-generator form is the proven case,
/// anything else probes the open general case.
pub fn prime_label(fam: &PolynomialFamily) -> &'static str {
    if fam.is_single_generator_form() {
        "theorem"
    } else {
        "conjecture_probe"
    }
}

/// `(1/N) Σ_{n=0}^{N-1} ∏_j f_j(T^{p_j(a_n)} x)` with `a_n` the `n`-th prime.
pub fn prime_series(spec: &AverageSpec, x: &Point, sched: &CheckpointSchedule) -> Result<Vec<f64>> {
    let mut primes = PrimeStream::new();
    spec.at_checkpoints(x, sched, 0, |_| primes.next().expect("prime stream is unbounded"), |_| Ok(1.0))
}

/// `sup_{N ≤ N_max} |A_N(x)|` for the Cesàro average, recorded at each checkpoint.
pub fn running_sup(spec: &AverageSpec, x: &Point, sched: &CheckpointSchedule) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(sched.len());
    let mut next = sched.points().iter().peekable();
    let mut sup = 0.0f64;
    spec.stream(x, sched.max(), 0, |n| n, |_| Ok(1.0), |n, a| {
        sup = sup.max(a.abs());
        if next.peek() == Some(&&n) {
            out.push(sup);
            next.next();
        }
    })?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaximalEstimate {
    pub p: f64,
    /// `‖f‖_p` (product over the observables of their `L^p` norms).
    pub norm_f: f64,
    /// Monte Carlo `‖sup_N |A_N|‖_p`.
    pub norm_sup: f64,
    /// `norm_sup / norm_f`: a lower-bound witness for the maximal constant.
    pub ratio: f64,
    pub samples: usize,
}

/// Combines per-sample maximal values `sup_N |A_N|` into the `L^p` ratio.
pub fn maximal_estimate(spec: &AverageSpec, sups: &[f64], p: f64) -> Result<MaximalEstimate> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!("p must be a finite number > 1, got {p}")));
    }
    if sups.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let mut norm_f = 1.0;
    for o in spec.obs {
        norm_f *= spec.sys.abs_moment(o, p)?.powf(1.0 / p);
    }
    if norm_f == 0.0 {
        return Err(Error::InvalidArgument("‖f‖_p = 0".into()));
    }
    let moment = sups.iter().map(|s| s.powf(p)).sum::<f64>() / sups.len() as f64;
    let norm_sup = moment.powf(1.0 / p);
    Ok(MaximalEstimate {
        p,
        norm_f,
        norm_sup,
        ratio: norm_sup / norm_f,
        samples: sups.len(),
    })
}
