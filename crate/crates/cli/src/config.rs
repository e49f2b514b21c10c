//! Experiment configuration: JSON ingestion and validation into core types.

use std::path::Path;

use ergavg_core::averaging::{CheckpointSchedule, WeightSequence};
use ergavg_core::lattice::{GroupElement, PastWeights};
use ergavg_core::polys::{IntPoly, PolynomialFamily};
use ergavg_core::systems::field::{mix, SymbolLaw};
use ergavg_core::systems::{
    BernoulliShift, CylinderObservable, Observable, ProductObservable, ProductSystem, SystemInstance,
    TorusObservable, TorusRotation,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// XOR-ed into the master seed (then mixed) to seed the rotation factor of a
/// product system.
pub const TORUS_SEED_SALT: u64 = 0x746F_7275_73;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Cesaro,
    Weighted,
    Prime,
    ReductionGap,
    Maximal,
    Orthogonality,
    VerifyPast,
    Entropy,
    KLimit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Alpha {
    /// Exact 64-bit fixed point, `fixed / 2^64`.
    Fixed { fixed: u64 },
    Fraction(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Bernoulli { d: usize, probs: Vec<f64> },
    /// `alphas[i][c]`: rotation number of generator `i` on torus coordinate `c`.
    Torus { d: usize, alphas: Vec<Vec<Alpha>> },
    Product { d: usize, probs: Vec<f64>, alphas: Vec<Vec<Alpha>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableSpec {
    Constant { value: f64 },
    Indicator { window: Vec<Vec<i64>>, pattern: Vec<usize> },
    Cylinder { window: Vec<Vec<i64>>, table: Vec<f64> },
    TorusBox { lo: Vec<f64>, hi: Vec<f64> },
    Character { freq: Vec<i64> },
    Product { u: Box<ObservableSpec>, v: Box<ObservableSpec> },
}

/// `columns[j][i]` holds the coefficients of `p_{i,j}`, lowest power first.
///
/// Config integers are 64-bit; serde cannot buffer 128-bit values inside
/// tagged enums. They are widened on build.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub columns: Vec<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Auto {
    Auto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightsSpec {
    Auto(Auto),
    Explicit(Vec<i64>),
}

impl Default for WeightsSpec {
    fn default() -> Self {
        WeightsSpec::Auto(Auto::Auto)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScheduleSpec {
    Explicit(Vec<u64>),
    Geometric { start: u64, max: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrthogonalitySpec {
    pub g0: Vec<i64>,
    pub column: usize,
    pub pairs: Vec<(u64, u64)>,
}

/// Pass thresholds. Each kind reads the fields it needs and falls back to
/// the defaults documented on [`Tolerances::resolved`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Expected limit for cesaro, weighted and prime runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_fraction: Option<f64>,
    /// Final reduction gap allowed per sample.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orthogonality: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_ratio: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResolvedTolerances {
    pub eps: f64,
    pub mean_tol: f64,
    pub sample_tol: f64,
    pub min_fraction: f64,
    pub gap: f64,
    pub entropy: f64,
    pub orthogonality: f64,
}

impl Tolerances {
    /// Defaults: `eps` 0.05, `mean_tol` 0.01, `sample_tol` 0.05,
    /// `min_fraction` 0.9, `gap` 0.05, `entropy` 0.05, `orthogonality` 1e-12.
    pub fn resolved(&self) -> ResolvedTolerances {
        ResolvedTolerances {
            eps: self.eps.unwrap_or(0.05),
            mean_tol: self.mean_tol.unwrap_or(0.01),
            sample_tol: self.sample_tol.unwrap_or(0.05),
            min_fraction: self.min_fraction.unwrap_or(0.9),
            gap: self.gap.unwrap_or(0.05),
            entropy: self.entropy.unwrap_or(0.05),
            orthogonality: self.orthogonality.unwrap_or(1e-12),
        }
    }
}

fn one() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observables: Vec<ObservableSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    #[serde(default)]
    pub weights: WeightsSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSpec>,
    #[serde(default = "one")]
    pub samples: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_sequence: Option<WeightSequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orthogonality: Option<OrthogonalitySpec>,
    /// Box radius for `verify_past`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_radius: Option<u64>,
    /// Block side for `entropy`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_side: Option<u32>,
    /// Exponent for `maximal`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_norm: Option<f64>,
}

fn invalid(path: impl Into<String>, message: impl ToString) -> CliError {
    CliError::Config {
        path: path.into(),
        message: message.to_string(),
    }
}

/// Parses JSON text, reporting the field path of any error.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        invalid(path, e.into_inner())
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

pub fn parse_family(text: &str) -> Result<FamilySpec, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        invalid(path, e.into_inner())
    })
}

pub fn widen(c: &[i64]) -> GroupElement {
    GroupElement::new(c.iter().map(|&v| v as i128).collect())
}

fn alpha_fixed(a: &Alpha, path: &str) -> Result<u64, CliError> {
    match a {
        Alpha::Fixed { fixed } => Ok(*fixed),
        Alpha::Fraction(x) => ergavg_core::systems::observable::to_fixed(*x).map_err(|e| invalid(path, e)),
    }
}

fn law(probs: &[f64], path: &str) -> Result<SymbolLaw, CliError> {
    SymbolLaw::from_f64(probs.to_vec()).map_err(|e| invalid(path, e))
}

fn rotation(d: usize, alphas: &[Vec<Alpha>], seed: u64) -> Result<TorusRotation, CliError> {
    let fixed = alphas
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(c, a)| alpha_fixed(a, &format!("system.alphas[{i}][{c}]")))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    TorusRotation::new(d, fixed, seed).map_err(|e| invalid("system.alphas", e))
}

impl SystemSpec {
    pub fn build(&self, master_seed: u64) -> Result<SystemInstance, CliError> {
        match self {
            SystemSpec::Bernoulli { d, probs } => Ok(SystemInstance::Bernoulli(
                BernoulliShift::new(*d, law(probs, "system.probs")?, master_seed).map_err(|e| invalid("system.d", e))?,
            )),
            SystemSpec::Torus { d, alphas } => Ok(SystemInstance::Torus(rotation(*d, alphas, master_seed)?)),
            SystemSpec::Product { d, probs, alphas } => {
                let first = BernoulliShift::new(*d, law(probs, "system.probs")?, master_seed)
                    .map_err(|e| invalid("system.d", e))?;
                let second = rotation(*d, alphas, mix(master_seed ^ TORUS_SEED_SALT))?;
                Ok(SystemInstance::Product(
                    ProductSystem::new(first, second).map_err(|e| invalid("system", e))?,
                ))
            }
        }
    }
}

fn cylinder(spec: &ObservableSpec, sys: &BernoulliShift, path: &str) -> Result<CylinderObservable, CliError> {
    let (d, a) = (sys.d, sys.law.alphabet());
    let window = |w: &[Vec<i64>]| -> Result<Vec<GroupElement>, CliError> {
        w.iter()
            .enumerate()
            .map(|(k, c)| {
                if c.len() != d {
                    return Err(invalid(
                        format!("{path}.window[{k}]"),
                        format!("expected {d} coordinates, found {}", c.len()),
                    ));
                }
                Ok(widen(c))
            })
            .collect()
    };
    match spec {
        ObservableSpec::Constant { value } => Ok(CylinderObservable::constant(d, a, *value)),
        ObservableSpec::Indicator { window: w, pattern } => {
            if let Some(k) = pattern.iter().position(|&s| s >= a) {
                return Err(invalid(format!("{path}.pattern[{k}]"), format!("symbol must be below {a}")));
            }
            CylinderObservable::indicator(d, a, window(w)?, pattern).map_err(|e| invalid(format!("{path}.pattern"), e))
        }
        ObservableSpec::Cylinder { window: w, table } => {
            if table.iter().any(|v| !v.is_finite()) {
                return Err(invalid(format!("{path}.table"), "values must be finite"));
            }
            CylinderObservable::new(d, a, window(w)?, table.clone()).map_err(|e| invalid(format!("{path}.table"), e))
        }
        _ => Err(invalid(path, "expected a shift observable (constant, indicator or cylinder)")),
    }
}

fn torus(spec: &ObservableSpec, k: usize, path: &str) -> Result<TorusObservable, CliError> {
    let obs = match spec {
        ObservableSpec::Constant { value } => TorusObservable::constant(k, *value),
        ObservableSpec::TorusBox { lo, hi } => {
            TorusObservable::box_from_corners(lo, hi).map_err(|e| invalid(path, e))?
        }
        ObservableSpec::Character { freq } => TorusObservable::character(freq.clone()),
        _ => return Err(invalid(path, "expected a torus observable (constant, torus_box or character)")),
    };
    if obs.dim() != k {
        return Err(invalid(path, format!("expected a {k}-torus observable, found dimension {}", obs.dim())));
    }
    Ok(obs)
}

/// Builds the observable at `observables[index]` for `sys`.
pub fn build_observable(spec: &ObservableSpec, sys: &SystemInstance, index: usize) -> Result<Observable, CliError> {
    let path = format!("observables[{index}]");
    match sys {
        SystemInstance::Bernoulli(s) => Ok(Observable::Cylinder(cylinder(spec, s, &path)?)),
        SystemInstance::Torus(t) => Ok(Observable::Torus(torus(spec, t.k, &path)?)),
        SystemInstance::Product(p) => match spec {
            ObservableSpec::Product { u, v } => Ok(Observable::Product(ProductObservable {
                u: cylinder(u, &p.first, &format!("{path}.u"))?,
                v: torus(v, p.second.k, &format!("{path}.v"))?,
            })),
            ObservableSpec::Constant { value } => Ok(Observable::Product(ProductObservable {
                u: CylinderObservable::constant(p.first.d, p.first.law.alphabet(), *value),
                v: TorusObservable::constant(p.second.k, 1.0),
            })),
            _ => Err(invalid(path, "product systems take product or constant observables")),
        },
    }
}

impl FamilySpec {
    /// `d` is the length of each column.
    pub fn build(&self, path: &str) -> Result<PolynomialFamily, CliError> {
        let d = self.columns.first().map(Vec::len).unwrap_or(0);
        if d == 0 {
            return Err(invalid(format!("{path}.columns"), "need at least one nonempty column"));
        }
        let mut columns = Vec::with_capacity(self.columns.len());
        for (j, col) in self.columns.iter().enumerate() {
            if col.len() != d {
                return Err(invalid(
                    format!("{path}.columns[{j}]"),
                    format!("expected {d} polynomials, found {}", col.len()),
                ));
            }
            columns.push(col.iter().map(|c| IntPoly::new(c.iter().map(|&v| v as i128).collect())).collect());
        }
        let fam = PolynomialFamily::from_columns(d, columns).map_err(|e| invalid(format!("{path}.columns"), e))?;
        fam.check_caps().map_err(|e| invalid(format!("{path}.columns"), e))?;
        match &self.generators {
            Some(g) => fam
                .with_generators(g.clone())
                .map_err(|e| invalid(format!("{path}.generators"), e)),
            None => Ok(fam),
        }
    }
}

impl ExperimentConfig {
    pub fn system(&self) -> Result<SystemInstance, CliError> {
        self.system
            .as_ref()
            .ok_or_else(|| invalid("system", "required for this experiment kind"))?
            .build(self.master_seed)
    }

    pub fn family(&self) -> Result<PolynomialFamily, CliError> {
        self.family
            .as_ref()
            .ok_or_else(|| invalid("family", "required for this experiment kind"))?
            .build("family")
    }

    pub fn schedule(&self) -> Result<CheckpointSchedule, CliError> {
        let spec = self
            .schedule
            .as_ref()
            .ok_or_else(|| invalid("schedule", "required for this experiment kind"))?;
        match spec {
            ScheduleSpec::Explicit(points) => CheckpointSchedule::new(points.clone()),
            ScheduleSpec::Geometric { start, max } => CheckpointSchedule::geometric(*start, *max),
        }
        .map_err(|e| invalid("schedule", e))
    }

    pub fn observables(&self, sys: &SystemInstance) -> Result<Vec<Observable>, CliError> {
        self.observables
            .iter()
            .enumerate()
            .map(|(i, o)| build_observable(o, sys, i))
            .collect()
    }

    pub fn explicit_weights(&self) -> Result<Option<PastWeights>, CliError> {
        match &self.weights {
            WeightsSpec::Auto(_) => Ok(None),
            WeightsSpec::Explicit(w) => PastWeights::new(w.iter().map(|&v| v as i128).collect()).map(Some).map_err(|e| invalid("weights", e)),
        }
    }

    pub fn require_samples(&self) -> Result<u64, CliError> {
        if self.samples == 0 {
            return Err(invalid("samples", "must be at least 1"));
        }
        Ok(self.samples)
    }
}
