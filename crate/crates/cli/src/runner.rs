//! Executes one experiment: builds the core objects, fans sample streams out
//! over a worker pool and assembles the series and summary.
//!
//! Streams are keyed by `stream_id` and collected in id order, so results do
//! not depend on the number of workers.

use ergavg_core::averaging::{
    cesaro_series, maximal_estimate, orthogonality_probe, prime_label, prime_series, running_sup, weighted_series,
    AverageSeries, AverageSpec, SeriesRow,
};
use ergavg_core::diagnostics::{
    block_entropy, compare_limits, convergence_report, k_limit_check, k_limit_target, median, reduction_gap,
    LimitTolerances, MIN_CHECKPOINTS,
};
use ergavg_core::lattice::{select_weights, verify_past_axioms, PastWeights};
use ergavg_core::polys::{check_nondegeneracy, PolynomialFamily};
use ergavg_core::systems::{sample_point, SystemInstance};
use ergavg_core::Error;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, ExperimentKind, ResolvedTolerances};
use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub status: Status,
    pub checkpoints: Vec<u64>,
    pub rows: Vec<SeriesRow>,
    pub summary: Value,
}

fn config_err(path: &str, e: impl ToString) -> CliError {
    CliError::Config {
        path: path.into(),
        message: e.to_string(),
    }
}

/// Runs `f(stream_id)` for every stream on `workers` threads; output is in
/// stream order.
fn parallel<T, F>(workers: usize, samples: u64, f: F) -> Result<Vec<T>, CliError>
where
    T: Send,
    F: Fn(u64) -> Result<T, Error> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Pool(e.to_string()))?;
    pool.install(|| (0..samples).into_par_iter().map(&f).collect::<Result<Vec<_>, _>>())
        .map_err(CliError::from)
}

fn weights_summary(cfg: &ExperimentConfig, fam: &PolynomialFamily) -> Result<Value, CliError> {
    Ok(match cfg.explicit_weights()? {
        Some(w) => json!({ "source": "explicit", "weights": w }),
        None => match select_weights(fam) {
            Ok(sel) => json!({
                "source": "auto",
                "weights": sel.weights,
                "base": sel.base,
                "n0": sel.n0,
                "n1": sel.n1,
                "n2": sel.n2,
                "column_order": sel.column_order,
            }),
            Err(e) => json!({ "source": "auto", "error": e.to_string() }),
        },
    })
}

fn resolve_weights(cfg: &ExperimentConfig, fam: Option<&PolynomialFamily>) -> Result<PastWeights, CliError> {
    if let Some(w) = cfg.explicit_weights()? {
        return Ok(w);
    }
    let fam = fam.ok_or_else(|| config_err("weights", "\"auto\" needs a family; give explicit weights"))?;
    select_weights(fam).map(|s| s.weights).map_err(|e| config_err("weights", e))
}

fn limit_tolerances(t: &ResolvedTolerances) -> LimitTolerances {
    LimitTolerances {
        mean_tol: t.mean_tol,
        sample_tol: t.sample_tol,
        min_fraction: t.min_fraction,
    }
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|p| p[1] < p[0])
}

/// Runs the experiment described by `cfg`.
pub fn run(cfg: &ExperimentConfig, workers: usize) -> Result<RunOutput, CliError> {
    let tol = cfg.tolerances.resolved();
    let mut summary = json!({
        "config": cfg,
        "kind": cfg.kind,
        "tolerances": tol,
    });
    let mut checkpoints = Vec::new();
    let mut rows = Vec::new();

    let status = match cfg.kind {
        ExperimentKind::VerifyPast => {
            let fam = cfg.family.as_ref().map(|_| cfg.family()).transpose()?;
            let w = resolve_weights(cfg, fam.as_ref())?;
            let radius = cfg.box_radius.ok_or_else(|| config_err("box_radius", "required for verify_past"))?;
            let report = verify_past_axioms(&w, radius).map_err(|e| config_err("box_radius", e))?;
            summary["weights"] = json!({ "weights": w });
            summary["axioms"] = json!(report);
            summary["counterexamples"] =
                json!(report.antisymmetry_violations + report.totality_violations + report.closure_violations);
            Status::from_bool(report.passed())
        }

        ExperimentKind::Entropy => {
            let sys = cfg.system()?;
            let shift = sys
                .as_bernoulli()
                .ok_or_else(|| config_err("system.type", "entropy needs a bernoulli system"))?;
            let side = cfg.box_side.unwrap_or(2);
            let est = block_entropy(shift, side, cfg.require_samples()?).map_err(|e| config_err("box_side", e))?;
            let ok = (est.estimate - est.exact).abs() <= tol.entropy && est.estimate <= (shift.law.alphabet() as f64).ln();
            summary["entropy"] = json!(est);
            summary["target"] = json!(est.exact);
            Status::from_bool(ok)
        }

        ExperimentKind::Orthogonality => {
            let sys = cfg.system()?;
            let shift = sys
                .as_bernoulli()
                .ok_or_else(|| config_err("system.type", "orthogonality needs a bernoulli system"))?;
            let fam = cfg.family()?;
            let w = resolve_weights(cfg, Some(&fam))?;
            let spec = cfg
                .orthogonality
                .as_ref()
                .ok_or_else(|| config_err("orthogonality", "required for this experiment kind"))?;
            let obs = cfg
                .observables(&sys)?
                .into_iter()
                .map(|o| o.as_cylinder().cloned())
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| config_err("observables", "orthogonality needs cylinder observables"))?;
            let report = orthogonality_probe(
                shift,
                &fam,
                &obs,
                &w,
                &crate::config::widen(&spec.g0),
                spec.column,
                &spec.pairs,
            )
            .map_err(|e| config_err("orthogonality", e))?;
            let ok = report
                .entries
                .iter()
                .filter(|e| e.precondition_met)
                .all(|e| e.value.abs() <= tol.orthogonality && e.exact.as_ref().is_none_or(num_traits::Zero::is_zero));
            summary["weights"] = weights_summary(cfg, &fam)?;
            summary["orthogonality"] = json!(report);
            summary["pairs_meeting_precondition"] = json!(report.entries.iter().filter(|e| e.precondition_met).count());
            Status::from_bool(ok)
        }

        ExperimentKind::ReductionGap => {
            let sys = cfg.system()?;
            let SystemInstance::Product(product) = &sys else {
                return Err(config_err("system.type", "reduction_gap needs a product system"));
            };
            let fam = cfg.family()?;
            let obs = cfg.observables(&sys)?;
            let sched = cfg.schedule()?;
            AverageSpec { sys: &sys, obs: &obs, fam: &fam }
                .validate()
                .map_err(|e| config_err("family", e))?;
            rows = series_rows(workers, cfg.require_samples()?, |s| {
                reduction_gap(product, &obs, &fam, &sched, &sample_point(&sys, s))
            })?;
            checkpoints = sched.points().to_vec();
            let k = checkpoints.len();
            let medians: Vec<f64> = (0..k)
                .map(|i| median(&rows.iter().map(|r| r.values[i]).collect::<Vec<_>>()))
                .collect();
            let below = rows.iter().filter(|r| r.values[k - 1] < tol.gap).count() as f64 / rows.len() as f64;
            let decreasing = strictly_decreasing(&medians);
            summary["weights"] = weights_summary(cfg, &fam)?;
            summary["gap"] = json!({
                "median": medians,
                "median_decreasing": decreasing,
                "fraction_below": below,
            });
            Status::from_bool(decreasing && below >= tol.min_fraction)
        }

        ExperimentKind::Maximal => {
            let sys = cfg.system()?;
            let fam = cfg.family()?;
            let obs = cfg.observables(&sys)?;
            let sched = cfg.schedule()?;
            let spec = AverageSpec { sys: &sys, obs: &obs, fam: &fam };
            spec.validate().map_err(|e| config_err("family", e))?;
            let p = cfg.p_norm.unwrap_or(2.0);
            rows = series_rows(workers, cfg.require_samples()?, |s| running_sup(&spec, &sample_point(&sys, s), &sched))?;
            checkpoints = sched.points().to_vec();
            let sups: Vec<f64> = rows.iter().map(|r| *r.values.last().expect("nonempty schedule")).collect();
            let est = maximal_estimate(&spec, &sups, p).map_err(|e| config_err("p_norm", e))?;
            let ok = cfg.tolerances.max_ratio.is_none_or(|m| est.ratio <= m);
            summary["maximal"] = json!(est);
            Status::from_bool(ok)
        }

        ExperimentKind::Cesaro | ExperimentKind::Weighted | ExperimentKind::Prime | ExperimentKind::KLimit => {
            let sys = cfg.system()?;
            let fam = cfg.family()?;
            let obs = cfg.observables(&sys)?;
            let sched = cfg.schedule()?;
            let spec = AverageSpec { sys: &sys, obs: &obs, fam: &fam };
            spec.validate().map_err(|e| config_err("family", e))?;
            let samples = cfg.require_samples()?;

            let k_target = if cfg.kind == ExperimentKind::KLimit {
                if sched.len() < MIN_CHECKPOINTS {
                    return Err(config_err("schedule", format!("k_limit needs at least {MIN_CHECKPOINTS} checkpoints")));
                }
                Some(k_limit_target(&sys, &obs, &fam).map_err(|e| match e {
                    Error::NondegenerateFamilyRequired(_) => config_err("family", e),
                    _ => config_err("system", e),
                })?)
            } else {
                None
            };

            let (label, start) = match cfg.kind {
                ExperimentKind::Weighted => {
                    let wseq = cfg
                        .weight_sequence
                        .as_ref()
                        .ok_or_else(|| config_err("weight_sequence", "required for weighted"))?;
                    wseq.validate().map_err(|e| config_err("weight_sequence", e))?;
                    rows = series_rows(workers, samples, |s| weighted_series(&spec, &sample_point(&sys, s), &sched, wseq))?;
                    summary["weight_sequence"] = json!({ "bound": wseq.bound(), "mean": wseq.mean() });
                    ("weighted", 1)
                }
                ExperimentKind::Prime => {
                    rows = series_rows(workers, samples, |s| prime_series(&spec, &sample_point(&sys, s), &sched))?;
                    (prime_label(&fam), 0)
                }
                _ => {
                    rows = series_rows(workers, samples, |s| cesaro_series(&spec, &sample_point(&sys, s), &sched))?;
                    ("cesaro", 0)
                }
            };
            checkpoints = sched.points().to_vec();
            summary["label"] = json!(label);
            summary["start_index"] = json!(start);
            summary["nondegeneracy"] = json!(check_nondegeneracy(&fam));
            summary["weights"] = weights_summary(cfg, &fam)?;

            let series = AverageSeries {
                checkpoints: checkpoints.clone(),
                start_index: start,
                label: label.into(),
                rows: rows.clone(),
            };
            let report = (sched.len() >= MIN_CHECKPOINTS)
                .then(|| convergence_report(&series, tol.eps))
                .transpose()?;
            if let Some(r) = &report {
                summary["convergence"] = json!({
                    "eps": r.eps,
                    "mean": r.mean,
                    "std_err": r.std_err,
                    "median_oscillation": r.median_oscillation,
                    "converging_fraction": r.converging_fraction,
                    "samples": r.samples.iter().map(|s| json!({
                        "stream_id": s.stream_id,
                        "estimated_limit": s.estimated_limit,
                        "verdict": s.verdict,
                    })).collect::<Vec<_>>(),
                });
            }

            let limits = limit_tolerances(&tol);
            match (k_target, cfg.tolerances.target) {
                (Some(target), _) => {
                    let check = k_limit_check(report.as_ref().expect("checked above"), &sys, &obs, &fam, &limits)?;
                    summary["target"] = json!(check.target);
                    summary["target_exact"] = json!(target.to_string());
                    let passed = check.passed;
                    summary["check"] = json!(check);
                    Status::from_bool(passed)
                }
                (None, Some(t)) => {
                    let target = BigRational::from_float(t).ok_or_else(|| config_err("tolerances.target", "must be finite"))?;
                    let estimates: Vec<f64> = rows.iter().map(|r| *r.values.last().expect("nonempty")).collect();
                    let check = compare_limits(&estimates, &target, &limits);
                    summary["target"] = json!(t);
                    let passed = check.passed;
                    summary["check"] = json!(check);
                    Status::from_bool(passed)
                }
                (None, None) => Status::Pass,
            }
        }
    };

    summary["status"] = json!(status);
    Ok(RunOutput {
        status,
        checkpoints,
        rows,
        summary,
    })
}

fn series_rows<F>(workers: usize, samples: u64, f: F) -> Result<Vec<SeriesRow>, CliError>
where
    F: Fn(u64) -> Result<Vec<f64>, Error> + Sync + Send,
{
    parallel(workers, samples, |s| f(s).map(|values| SeriesRow { stream_id: s, values }))
}
