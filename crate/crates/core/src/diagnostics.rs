//! Finite-N evidence for convergence, comparisons against exact limit values,
//! reduction gaps on product systems and block entropy of shifts.
//!
//! Verdicts are evidence at an explicit `eps`; divergence is never asserted.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::averaging::{cesaro_series, AverageSeries, AverageSpec, CheckpointSchedule};
use crate::conditioning::{condition_oracle, CoordSet};
use crate::error::{Error, Result};
use crate::lattice::GroupElement;
use crate::polys::{check_nondegeneracy, PolynomialFamily};
use crate::systems::{
    lift_second, pinsker_project, sample_point, BernoulliShift, Observable, Point, ProductSystem, SystemInstance,
};

pub const MIN_CHECKPOINTS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converging,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleConvergence {
    pub stream_id: u64,
    /// Value at the last checkpoint.
    pub estimated_limit: f64,
    /// `osc[k] = max − min` of the values at checkpoints `k, k+1, …`.
    pub tail_oscillation: Vec<f64>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub eps: f64,
    pub checkpoints: Vec<u64>,
    pub samples: Vec<SampleConvergence>,
    /// Cross-sample mean of the estimated limits.
    pub mean: f64,
    pub std_err: f64,
    /// Median over samples of `osc[k]`, per checkpoint.
    pub median_oscillation: Vec<f64>,
    pub converging_fraction: f64,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn tail_oscillation(values: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (k, &v) in values.iter().enumerate().rev() {
        lo = lo.min(v);
        hi = hi.max(v);
        out[k] = hi - lo;
    }
    out
}

/// Per-sample tail oscillations and verdicts.
///
/// The oscillation at the last checkpoint spans a single value and is always
/// 0, so the verdict uses the last one spanning two checkpoints: converging iff
/// `osc[K-2] ≤ eps`.
pub fn convergence_report(series: &AverageSeries, eps: f64) -> Result<ConvergenceReport> {
    let k = series.checkpoints.len();
    if k < MIN_CHECKPOINTS {
        return Err(Error::InvalidArgument(format!(
            "convergence report needs at least {MIN_CHECKPOINTS} checkpoints, got {k}"
        )));
    }
    if series.rows.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let mut samples = Vec::with_capacity(series.rows.len());
    for row in &series.rows {
        if row.values.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: row.values.len(),
            });
        }
        let osc = tail_oscillation(&row.values);
        debug_assert!(osc.windows(2).all(|p| p[1] <= p[0]));
        let verdict = if osc[k - 2] <= eps {
            Verdict::Converging
        } else {
            Verdict::Inconclusive
        };
        samples.push(SampleConvergence {
            stream_id: row.stream_id,
            estimated_limit: row.values[k - 1],
            tail_oscillation: osc,
            verdict,
        });
    }
    let limits: Vec<f64> = samples.iter().map(|s| s.estimated_limit).collect();
    let (mean, std_err) = mean_and_stderr(&limits);
    let median_oscillation = (0..k)
        .map(|i| median(&samples.iter().map(|s| s.tail_oscillation[i]).collect::<Vec<_>>()))
        .collect();
    let converging_fraction =
        samples.iter().filter(|s| s.verdict == Verdict::Converging).count() as f64 / samples.len() as f64;
    Ok(ConvergenceReport {
        eps,
        checkpoints: series.checkpoints.clone(),
        samples,
        mean,
        std_err,
        median_oscillation,
        converging_fraction,
    })
}

pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Pass thresholds for comparing limits against an exact target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitTolerances {
    /// Allowed `|mean − target|`.
    pub mean_tol: f64,
    /// Per-sample allowed `|estimate − target|`.
    pub sample_tol: f64,
    /// Required fraction of samples within `sample_tol`.
    pub min_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitCheck {
    pub target: f64,
    /// `target` as an exact fraction.
    pub target_exact: String,
    pub mean: f64,
    pub mean_deviation: f64,
    pub fraction_within: f64,
    pub deviations: Vec<f64>,
    pub passed: bool,
}

/// Compares per-sample limit estimates against `target`.
pub fn compare_limits(estimates: &[f64], target: &BigRational, tol: &LimitTolerances) -> LimitCheck {
    let t = target.to_f64().unwrap_or(f64::NAN);
    let deviations: Vec<f64> = estimates.iter().map(|e| (e - t).abs()).collect();
    let within = deviations.iter().filter(|&&d| d <= tol.sample_tol).count();
    let fraction_within = within as f64 / deviations.len().max(1) as f64;
    let (mean, _) = mean_and_stderr(estimates);
    let mean_deviation = (mean - t).abs();
    LimitCheck {
        target: t,
        target_exact: target.to_string(),
        mean,
        mean_deviation,
        fraction_within,
        deviations,
        passed: mean_deviation <= tol.mean_tol && fraction_within >= tol.min_fraction,
    }
}

const TWO_PATH_TOL: f64 = 1e-12;

/// `∏_j ∫ f_j dμ`, the limit of the averages on a K-system under a
/// nondegenerate family. Computed through the systems integrals and checked
/// against conditioning every observable on the empty coordinate set.
pub fn k_limit_target(sys: &SystemInstance, obs: &[Observable], fam: &PolynomialFamily) -> Result<BigRational> {
    let Some(shift) = sys.as_bernoulli().filter(|_| sys.is_k_system()) else {
        return Err(Error::Incompatible(format!(
            "limit formula needs a K-system, got a {} system",
            sys.kind()
        )));
    };
    if let Some(why) = check_nondegeneracy(fam).first_failure() {
        return Err(Error::NondegenerateFamilyRequired(why));
    }
    let mut target = BigRational::one();
    let mut oracle = BigRational::one();
    for o in obs {
        target *= sys.integral_exact(o)?;
        let f = o
            .as_cylinder()
            .ok_or_else(|| Error::Incompatible("K-system observables are cylinders".into()))?;
        let empty = CoordSet::explicit(std::iter::empty::<GroupElement>());
        let c = condition_oracle(&f.to_exact()?, &empty, shift.law.exact())?;
        oracle *= c.table()[0].clone();
    }
    let gap = (&target - &oracle).to_f64().unwrap_or(f64::INFINITY).abs();
    if gap > TWO_PATH_TOL {
        return Err(Error::InvalidArgument(format!(
            "integral paths disagree: {target} vs {oracle}"
        )));
    }
    Ok(target)
}

/// Compares a convergence report against the K-system limit.
pub fn k_limit_check(
    report: &ConvergenceReport,
    sys: &SystemInstance,
    obs: &[Observable],
    fam: &PolynomialFamily,
    tol: &LimitTolerances,
) -> Result<LimitCheck> {
    let target = k_limit_target(sys, obs, fam)?;
    let estimates: Vec<f64> = report.samples.iter().map(|s| s.estimated_limit).collect();
    Ok(compare_limits(&estimates, &target, tol))
}

/// `|A_N(f) − A_N(E(f | Pinsker))|` at each checkpoint for one point of a
/// product system.
pub fn reduction_gap(
    sys: &ProductSystem,
    obs: &[Observable],
    fam: &PolynomialFamily,
    sched: &CheckpointSchedule,
    x: &Point,
) -> Result<Vec<f64>> {
    let projected = obs
        .iter()
        .map(|o| pinsker_project(o, sys).map(|v| lift_second(v, sys)))
        .collect::<Result<Vec<_>>>()?;
    let instance = SystemInstance::Product(sys.clone());
    let full = cesaro_series(&AverageSpec { sys: &instance, obs, fam }, x, sched)?;
    let reduced = cesaro_series(&AverageSpec { sys: &instance, obs: &projected, fam }, x, sched)?;
    Ok(full.iter().zip(&reduced).map(|(a, b)| (a - b).abs()).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyEstimate {
    pub box_side: u32,
    pub samples: u64,
    /// Plug-in block entropy per coordinate.
    pub estimate: f64,
    /// `−Σ p_i ln p_i`
    pub exact: f64,
    pub distinct_blocks: usize,
}

/// Cap on `r^d` for block entropy.
pub const MAX_BLOCK_COORDS: u64 = 16;

/// Plug-in entropy of the symbols on `[0, r)^d`, read from `samples` sampled
/// points, divided by `r^d`.
pub fn block_entropy(sys: &BernoulliShift, box_side: u32, samples: u64) -> Result<EntropyEstimate> {
    let coords = (box_side as u64).checked_pow(sys.d as u32).unwrap_or(u64::MAX);
    if box_side == 0 || coords > MAX_BLOCK_COORDS {
        return Err(Error::TooLarge {
            what: "entropy block",
            needed: coords as u128,
            cap: MAX_BLOCK_COORDS as u128,
        });
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let block: Vec<GroupElement> = (0..coords)
        .map(|mut i| {
            let mut c = Vec::with_capacity(sys.d);
            for _ in 0..sys.d {
                c.push((i % box_side as u64) as i128);
                i /= box_side as u64;
            }
            GroupElement::new(c)
        })
        .collect();
    let system = SystemInstance::Bernoulli(sys.clone());
    let mut counts: HashMap<Vec<usize>, u64> = HashMap::new();
    for s in 0..samples {
        let Point::Shift(x) = sample_point(&system, s) else {
            unreachable!("Bernoulli systems sample shift points")
        };
        let symbols = block
            .iter()
            .map(|v| sys.symbol(&x, v))
            .collect::<Result<Vec<_>>>()?;
        *counts.entry(symbols).or_default() += 1;
    }
    let n = samples as f64;
    // sort for a summation order independent of hashing
    let mut freqs: Vec<u64> = counts.values().copied().collect();
    freqs.sort_unstable();
    let h: f64 = freqs
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum::<f64>()
        + 0.0;
    Ok(EntropyEstimate {
        box_side,
        samples,
        estimate: h / coords as f64,
        exact: sys.law.entropy(),
        distinct_blocks: counts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averaging::SeriesRow;
    use crate::polys::IntPoly;
    use crate::systems::field::SymbolLaw;
    use crate::systems::{CylinderObservable, TorusObservable, TorusRotation};
    use num_bigint::BigInt;

    fn series(checkpoints: Vec<u64>, rows: Vec<Vec<f64>>) -> AverageSeries {
        AverageSeries {
            checkpoints,
            start_index: 0,
            label: "test".into(),
            rows: rows
                .into_iter()
                .enumerate()
                .map(|(i, values)| SeriesRow { stream_id: i as u64, values })
                .collect(),
        }
    }

    fn ge(c: &[i128]) -> GroupElement {
        GroupElement::new(c.to_vec())
    }

    fn worked_family() -> PolynomialFamily {
        PolynomialFamily::from_columns(
            2,
            vec![
                vec![IntPoly::monomial(3, 2), IntPoly::monomial(8, 2)],
                vec![IntPoly::monomial(1, 2), IntPoly::monomial(-1, 2)],
            ],
        )
        .unwrap()
    }

    fn k_observables() -> Vec<Observable> {
        vec![
            Observable::Cylinder(CylinderObservable::indicator(2, 2, vec![ge(&[0, 0])], &[1]).unwrap()),
            Observable::Cylinder(
                CylinderObservable::indicator(2, 2, vec![ge(&[0, 0]), ge(&[0, 1])], &[1, 1]).unwrap(),
            ),
        ]
    }

    #[test]
    fn convergence_examples() {
        let cps = vec![10, 100, 1000, 10000];
        let r = convergence_report(&series(cps.clone(), vec![vec![0.3; 4]]), 1e-9).unwrap();
        assert_eq!(r.samples[0].verdict, Verdict::Converging);
        assert!(r.samples[0].tail_oscillation.iter().all(|&o| o == 0.0));

        let inv: Vec<f64> = cps.iter().map(|&n| 1.0 / n as f64).collect();
        let r = convergence_report(&series(cps.clone(), vec![inv]), 0.01).unwrap();
        assert_eq!(r.samples[0].verdict, Verdict::Converging);

        let alt = vec![1.0, -1.0, 1.0, -1.0];
        let r = convergence_report(&series(cps.clone(), vec![alt]), 0.5).unwrap();
        assert_eq!(r.samples[0].verdict, Verdict::Inconclusive);
        assert_eq!(r.samples[0].tail_oscillation, vec![2.0, 2.0, 2.0, 0.0]);

        assert!(convergence_report(&series(vec![1, 2, 3], vec![vec![0.0; 3]]), 0.1).is_err());
        assert!(convergence_report(&series(cps, vec![vec![0.0; 3]]), 0.1).is_err());
    }

    #[test]
    fn stats() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        let (m, se) = mean_and_stderr(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - 1.0).abs() < 1e-15);
    }

    #[test]
    fn k_targets() {
        let sys = SystemInstance::Bernoulli(BernoulliShift::new(2, SymbolLaw::uniform(2).unwrap(), 1).unwrap());
        let t = k_limit_target(&sys, &k_observables(), &worked_family()).unwrap();
        assert_eq!(t, BigRational::new(BigInt::from(1), BigInt::from(8)));

        let single = PolynomialFamily::from_columns(2, vec![vec![IntPoly::monomial(1, 1), IntPoly::zero()]]).unwrap();
        let c = vec![Observable::Cylinder(CylinderObservable::constant(2, 2, 0.75))];
        let t = k_limit_target(&sys, &c, &single).unwrap();
        assert_eq!(t.to_f64().unwrap(), 0.75);
        let report = convergence_report(&series(vec![1, 2, 3, 4], vec![vec![0.75; 4]]), 0.0).unwrap();
        let tol = LimitTolerances { mean_tol: 0.0, sample_tol: 0.0, min_fraction: 1.0 };
        let check = k_limit_check(&report, &sys, &c, &single, &tol).unwrap();
        assert!(check.passed);
        assert_eq!(check.deviations, vec![0.0]);

        let col = vec![IntPoly::monomial(1, 2), IntPoly::zero()];
        let degenerate = PolynomialFamily::from_columns(2, vec![col.clone(), col]).unwrap();
        assert!(matches!(
            k_limit_target(&sys, &k_observables(), &degenerate),
            Err(Error::NondegenerateFamilyRequired(_))
        ));
        let torus = SystemInstance::Torus(TorusRotation::new(2, vec![vec![1], vec![2]], 0).unwrap());
        assert!(k_limit_target(&torus, &[], &worked_family()).is_err());
    }

    fn product_system() -> ProductSystem {
        ProductSystem::new(
            BernoulliShift::new(2, SymbolLaw::uniform(2).unwrap(), 3).unwrap(),
            TorusRotation::new(2, vec![vec![0x9E37_79B9_7F4A_7C15], vec![0x6A09_E667_F3BC_C908]], 3).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn gap_vanishes_for_factor_observables() {
        let sys = product_system();
        let v = |lo: f64, hi: f64| TorusObservable::box_from_corners(&[lo], &[hi]).unwrap();
        let obs = vec![lift_second(v(0.0, 0.5), &sys), lift_second(v(0.25, 0.9), &sys)];
        let sched = CheckpointSchedule::geometric(16, 2048).unwrap();
        let instance = SystemInstance::Product(sys.clone());
        for s in 0..4 {
            let gap = reduction_gap(&sys, &obs, &worked_family(), &sched, &sample_point(&instance, s)).unwrap();
            assert!(gap.iter().all(|&g| g == 0.0));
        }
    }

    #[test]
    fn gap_rejects_non_product_observables() {
        let sys = product_system();
        let instance = SystemInstance::Product(sys.clone());
        let sched = CheckpointSchedule::geometric(1, 4).unwrap();
        let err = reduction_gap(&sys, &k_observables(), &worked_family(), &sched, &sample_point(&instance, 0));
        assert!(err.is_err());
    }

    #[test]
    fn entropy_examples() {
        let fair = BernoulliShift::new(2, SymbolLaw::uniform(2).unwrap(), 7).unwrap();
        let e = block_entropy(&fair, 2, 20_000).unwrap();
        assert!((e.estimate - std::f64::consts::LN_2).abs() < 0.05, "{e:?}");
        assert!(e.estimate <= 2f64.ln());
        assert_eq!(e.distinct_blocks, 16);

        let point = BernoulliShift::new(2, SymbolLaw::from_f64(vec![1.0, 0.0, 0.0]).unwrap(), 7).unwrap();
        let e = block_entropy(&point, 2, 1000).unwrap();
        assert_eq!(e.estimate, 0.0);
        assert_eq!(e.exact, 0.0);

        assert!(block_entropy(&fair, 5, 10).is_err());
        assert!(block_entropy(&fair, 0, 10).is_err());
    }
}
