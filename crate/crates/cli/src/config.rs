//! The run configuration: a TOML tree whose sections mirror the library
//! modules. `docs/config.md` is the key reference.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use musielak_core::balance::BalanceProbe;
use musielak_core::fem::Domain;
use musielak_core::galerkin::{SolverSettings, Start, StudySettings};
use musielak_core::nfunction::{
    CoefficientField, ConjugateSettings, CustomIntegrand, DualityTolerances, ExponentField, NFunction, YoungFunction,
    YoungShape, YoungTerm,
};
use musielak_core::problem::{
    canonical_operator, BKernel, ConvectionPhi, FitSettings, LowerOrderB, OperatorKind, PhiComponent, ProblemData,
    SourceF, StructureConstants, VectorFieldA, DEFAULT_EPS,
};
use rand::RngCore;
use serde::Deserialize;

use crate::expr::{coordinate_names, Expression};

/// A configuration problem, located by its key path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "`{}`: {}", self.key, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

type CResult<T> = Result<T, ConfigError>;

fn core_err(key: &str) -> impl Fn(musielak_core::Error) -> ConfigError + '_ {
    move |e| ConfigError::new(key, e.to_string())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub domain: DomainSpec,
    pub nfunction: NFunctionSpec,
    #[serde(default)]
    pub operator: OperatorSpec,
    #[serde(default)]
    pub phi: PhiSpec,
    #[serde(default)]
    pub b: BSpec,
    #[serde(default)]
    pub source: SourceSpec,
    #[serde(default)]
    pub mesh: MeshSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub conjugate: ConjugateSpec,
    #[serde(default)]
    pub check: CheckSpec,
    #[serde(default)]
    pub balance: BalanceSpec,
    #[serde(default)]
    pub study: StudySpec,
    #[serde(default)]
    pub uniqueness: UniquenessSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub kind: String,
    pub bounds: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentSpec {
    pub base: f64,
    #[serde(default)]
    pub gradient: Vec<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    #[serde(default = "one")]
    pub coef: f64,
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub gradient: Vec<f64>,
    #[serde(default = "one")]
    pub holder: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerTermSpec {
    pub coef: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NFunctionSpec {
    pub family: String,
    pub p: Option<f64>,
    pub q: Option<f64>,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub normalized: bool,
    pub exponent: Option<ExponentSpec>,
    pub weight: Option<WeightSpec>,
    pub exponents: Option<Vec<ExponentSpec>>,
    pub ps: Option<Vec<f64>>,
    pub qs: Option<Vec<f64>>,
    pub weights: Option<Vec<WeightSpec>>,
    pub value: Option<String>,
    pub conjugate: Option<String>,
    pub lower: Option<Vec<PowerTermSpec>>,
    pub upper: Option<Vec<PowerTermSpec>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSpec {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    #[serde(default)]
    pub h1: f64,
    #[serde(default)]
    pub h2: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    #[serde(default = "canonical")]
    pub kind: String,
    #[serde(default = "default_eps")]
    pub eps: f64,
    pub p: Option<f64>,
    pub constants: Option<ConstantsSpec>,
    #[serde(default = "default_fit_samples")]
    pub fit_samples: usize,
    #[serde(default = "default_slack")]
    pub slack: f64,
}

impl Default for OperatorSpec {
    fn default() -> Self {
        Self {
            kind: canonical(),
            eps: DEFAULT_EPS,
            p: None,
            constants: None,
            fit_samples: default_fit_samples(),
            slack: default_slack(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiComponentSpec {
    pub kind: String,
    #[serde(default = "one")]
    pub scale: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiSpec {
    #[serde(default)]
    pub components: Vec<PhiComponentSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BSpec {
    #[serde(default = "zero_name")]
    pub kernel: String,
    #[serde(default = "one")]
    pub scale: f64,
    pub weight: Option<WeightSpec>,
    pub negative: Option<f64>,
    pub positive: Option<f64>,
}

impl Default for BSpec {
    fn default() -> Self {
        Self {
            kernel: zero_name(),
            scale: 1.0,
            weight: None,
            negative: None,
            positive: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    #[serde(default)]
    pub f: Vec<String>,
    #[serde(default = "one")]
    pub scale: f64,
    pub exact: Option<String>,
}

impl Default for SourceSpec {
    fn default() -> Self {
        Self {
            f: Vec::new(),
            scale: 1.0,
            exact: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    #[serde(default = "default_resolutions")]
    pub resolutions: Vec<usize>,
    pub resolution: Option<usize>,
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self {
            resolutions: default_resolutions(),
            resolution: None,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub max_iterations: Option<usize>,
    pub tolerance: Option<f64>,
    pub fd_step: Option<f64>,
    pub min_damping: Option<f64>,
    pub fallback_iterations: Option<usize>,
    pub fallback_rounds: Option<usize>,
    pub sphere_samples: Option<usize>,
    pub start: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjugateSpec {
    pub r_max: Option<f64>,
    pub radial_grid: Option<usize>,
    pub rel_tol: Option<f64>,
    pub max_doublings: Option<usize>,
    pub max_sweeps: Option<usize>,
    pub use_closed_form: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    #[serde(default = "hundred")]
    pub samples: usize,
    #[serde(default = "default_xi_min")]
    pub xi_min: f64,
    #[serde(default = "default_xi_max")]
    pub xi_max: f64,
    #[serde(default = "default_invariant_samples")]
    pub invariant_samples: usize,
    #[serde(default = "hundred")]
    pub gradient_samples: usize,
    #[serde(default = "default_gradient_tol")]
    pub gradient_tol: f64,
    pub fenchel_young_tol: Option<f64>,
    pub biconjugation_tol: Option<f64>,
    pub closed_form_tol: Option<f64>,
}

impl Default for CheckSpec {
    fn default() -> Self {
        Self {
            samples: hundred(),
            xi_min: default_xi_min(),
            xi_max: default_xi_max(),
            invariant_samples: default_invariant_samples(),
            gradient_samples: hundred(),
            gradient_tol: default_gradient_tol(),
            fenchel_young_tol: None,
            biconjugation_tol: None,
            closed_form_tol: None,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalanceSpec {
    pub c_m: Option<f64>,
    pub centers: Option<usize>,
    pub zero_set_centers: Option<usize>,
    pub radii: Option<Vec<f64>>,
    pub x_per_ball: Option<usize>,
    pub xi_per_x: Option<usize>,
    pub y_samples: Option<usize>,
    #[serde(default)]
    pub schedule: Vec<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    pub lambdas: Option<Vec<f64>>,
    pub truncation_levels: Option<Vec<f64>>,
    pub expected_slope: Option<f64>,
    pub slope_tolerance: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniquenessSpec {
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_unique_tol")]
    pub tolerance: f64,
    #[serde(default = "default_j1_tol")]
    pub j1_tolerance: f64,
    pub resolution: Option<usize>,
    #[serde(default = "one")]
    pub start_scale: f64,
}

impl Default for UniquenessSpec {
    fn default() -> Self {
        Self {
            deltas: default_deltas(),
            tolerance: default_unique_tol(),
            j1_tolerance: default_j1_tol(),
            resolution: None,
            start_scale: 1.0,
        }
    }
}

fn one() -> f64 {
    1.0
}
fn hundred() -> usize {
    100
}
fn canonical() -> String {
    "canonical".into()
}
fn zero_name() -> String {
    "zero".into()
}
fn default_eps() -> f64 {
    DEFAULT_EPS
}
fn default_fit_samples() -> usize {
    FitSettings::default().samples
}
fn default_slack() -> f64 {
    FitSettings::default().slack
}
fn default_resolutions() -> Vec<usize> {
    vec![4, 8, 16]
}
fn default_xi_min() -> f64 {
    0.1
}
fn default_xi_max() -> f64 {
    4.0
}
fn default_invariant_samples() -> usize {
    200
}
fn default_gradient_tol() -> f64 {
    1e-6
}
fn default_deltas() -> Vec<f64> {
    vec![0.5, 0.1, 0.02]
}
fn default_unique_tol() -> f64 {
    1e-8
}
fn default_j1_tol() -> f64 {
    1e-10
}

impl RunConfig {
    pub fn parse(text: &str) -> CResult<Self> {
        toml::from_str(text).map_err(|e| ConfigError::new("", e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &Path) -> CResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn domain(&self) -> CResult<Domain> {
        Domain::from_spec(&self.domain.kind, &self.domain.bounds).map_err(core_err("domain"))
    }

    pub fn conjugate_settings(&self) -> ConjugateSettings {
        let c = &self.conjugate;
        let d = ConjugateSettings::default();
        ConjugateSettings {
            r_max: c.r_max.unwrap_or(d.r_max),
            radial_grid: c.radial_grid.unwrap_or(d.radial_grid),
            rel_tol: c.rel_tol.unwrap_or(d.rel_tol),
            max_doublings: c.max_doublings.unwrap_or(d.max_doublings),
            max_sweeps: c.max_sweeps.unwrap_or(d.max_sweeps),
            use_closed_form: c.use_closed_form.unwrap_or(d.use_closed_form),
        }
    }

    pub fn duality_tolerances(&self) -> DualityTolerances {
        let d = DualityTolerances::default();
        DualityTolerances {
            fenchel_young: self.check.fenchel_young_tol.unwrap_or(d.fenchel_young),
            biconjugation: self.check.biconjugation_tol.unwrap_or(d.biconjugation),
            closed_form: self.check.closed_form_tol.unwrap_or(d.closed_form),
        }
    }

    pub fn fit_settings(&self) -> FitSettings {
        FitSettings {
            samples: self.operator.fit_samples,
            slack: self.operator.slack,
            conjugate: self.conjugate_settings(),
            ..FitSettings::default()
        }
    }

    pub fn nfunction(&self) -> CResult<NFunction> {
        let domain = self.domain()?;
        build_nfunction(&self.nfunction, domain)
    }

    /// Builds `(A, Φ, b, F)`; fitting the constants of `A` draws from `rng`.
    pub fn problem<R: RngCore>(&self, rng: &mut R) -> Result<ProblemData, crate::CliError> {
        let domain = self.domain()?;
        let d = domain.dim();
        let m = Arc::new(self.nfunction()?);
        let op = &self.operator;
        let kind = match op.kind.as_str() {
            "canonical" => OperatorKind::Canonical { eps: op.eps },
            "p-laplacian" => OperatorKind::PLaplacian {
                p: op
                    .p
                    .ok_or_else(|| ConfigError::new("operator.p", "required for kind = \"p-laplacian\""))?,
                eps: op.eps,
            },
            other => {
                return Err(ConfigError::new(
                    "operator.kind",
                    format!("unknown kind `{other}` (expected canonical or p-laplacian)"),
                )
                .into())
            }
        };
        let a = match (&op.constants, kind) {
            (Some(c), _) => VectorFieldA::with_constants(
                m,
                kind,
                StructureConstants {
                    c1: c.c1,
                    c2: c.c2,
                    c3: c.c3,
                    c4: c.c4,
                    h1: c.h1,
                    h2: c.h2,
                },
            )
            .map_err(core_err("operator.constants"))?,
            (None, OperatorKind::Canonical { eps }) => canonical_operator(m, eps, &self.fit_settings(), rng)?,
            (None, kind) => VectorFieldA::fitted(m, kind, &self.fit_settings(), rng)?,
        };
        let phi = build_phi(&self.phi, d)?;
        let b = build_b(&self.b, &domain)?;
        let f = build_source(&self.source, d)?;
        ProblemData::new(a, phi, b, f).map_err(|e| ConfigError::new("", e.to_string()).into())
    }

    pub fn exact_solution(&self) -> CResult<Option<Expression>> {
        let d = self.domain()?.dim();
        let names = coordinate_names(d, "x");
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        self.source
            .exact
            .as_deref()
            .map(|s| Expression::parse(s, &refs).map_err(|m| ConfigError::new("source.exact", m)))
            .transpose()
    }

    pub fn solver_settings(&self, seed: u64) -> CResult<SolverSettings> {
        let s = &self.solver;
        let d = SolverSettings::default();
        let start = match s.start.as_deref() {
            None | Some("linear") => Start::Linear,
            Some("zero") => Start::Zero,
            Some(other) => {
                return Err(ConfigError::new(
                    "solver.start",
                    format!("unknown start `{other}` (expected linear or zero)"),
                ))
            }
        };
        Ok(SolverSettings {
            max_iterations: s.max_iterations.unwrap_or(d.max_iterations),
            tolerance: s.tolerance.unwrap_or(d.tolerance),
            fd_step: s.fd_step.unwrap_or(d.fd_step),
            min_damping: s.min_damping.unwrap_or(d.min_damping),
            fallback_iterations: s.fallback_iterations.unwrap_or(d.fallback_iterations),
            fallback_rounds: s.fallback_rounds.unwrap_or(d.fallback_rounds),
            sphere_samples: s.sphere_samples.unwrap_or(d.sphere_samples),
            seed,
            start,
        })
    }

    pub fn balance_probe(&self) -> CResult<BalanceProbe> {
        let b = &self.balance;
        let d = BalanceProbe::default();
        let probe = BalanceProbe {
            c_m: b.c_m.unwrap_or(d.c_m),
            centers: b.centers.unwrap_or(d.centers),
            zero_set_centers: b.zero_set_centers.unwrap_or(d.zero_set_centers),
            radii: b.radii.clone().unwrap_or(d.radii),
            x_per_ball: b.x_per_ball.unwrap_or(d.x_per_ball),
            xi_per_x: b.xi_per_x.unwrap_or(d.xi_per_x),
            y_samples: b.y_samples.unwrap_or(d.y_samples),
        };
        probe.validate(self.domain()?.dim()).map_err(core_err("balance"))?;
        if b.schedule.windows(2).any(|w| w[1] <= w[0]) || b.schedule.iter().any(|c| !(*c > 1.0)) {
            return Err(ConfigError::new(
                "balance.schedule",
                "constants must exceed 1 and increase",
            ));
        }
        Ok(probe)
    }

    /// Resolution of single-level commands: `mesh.resolution`, else the finest of `mesh.resolutions`.
    pub fn resolution(&self) -> CResult<usize> {
        self.mesh
            .resolution
            .or_else(|| self.mesh.resolutions.last().copied())
            .ok_or_else(|| ConfigError::new("mesh.resolution", "no resolution given"))
    }

    pub fn study_settings(&self, seed: u64) -> CResult<StudySettings> {
        let d = StudySettings::default();
        let res = &self.mesh.resolutions;
        if res.len() < 3 || res.windows(2).any(|w| w[1] <= w[0]) || res[0] == 0 {
            return Err(ConfigError::new(
                "mesh.resolutions",
                "need at least three increasing positive resolutions",
            ));
        }
        let lambdas = self.study.lambdas.clone().unwrap_or(d.lambdas);
        if lambdas.is_empty() || lambdas.iter().any(|l| !(*l > 0.0)) {
            return Err(ConfigError::new("study.lambdas", "need positive values"));
        }
        Ok(StudySettings {
            resolutions: res.clone(),
            lambdas,
            truncation_levels: self.study.truncation_levels.clone().unwrap_or(d.truncation_levels),
            solver: self.solver_settings(seed)?,
            conjugate: self.conjugate_settings(),
            panel: None,
        })
    }
}

fn exponent_field(spec: &ExponentSpec, domain: &Domain, key: &str) -> CResult<ExponentField> {
    let d = domain.dim();
    if !spec.gradient.is_empty() && spec.gradient.len() != d {
        return Err(ConfigError::new(
            format!("{key}.gradient"),
            format!("needs {d} entries"),
        ));
    }
    // default clamp: the attained range over the domain corners
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for corner in 0..(1usize << d) {
        let v = spec.base
            + spec
                .gradient
                .iter()
                .enumerate()
                .map(|(k, g)| {
                    let (a, b) = domain.extent(k);
                    g * if corner >> k & 1 == 1 { b } else { a }
                })
                .sum::<f64>();
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(ExponentField {
        base: spec.base,
        gradient: spec.gradient.clone(),
        min: spec.min.unwrap_or(lo),
        max: spec.max.unwrap_or(hi),
    })
}

fn coefficient_field(spec: &WeightSpec, d: usize, key: &str) -> CResult<CoefficientField> {
    if !spec.gradient.is_empty() && spec.gradient.len() != d {
        return Err(ConfigError::new(
            format!("{key}.gradient"),
            format!("needs {d} entries"),
        ));
    }
    if !(spec.coef >= 0.0) || !(spec.holder > 0.0 && spec.holder <= 1.0) {
        return Err(ConfigError::new(key, "need coef >= 0 and 0 < holder <= 1"));
    }
    Ok(CoefficientField {
        coef: spec.coef,
        offset: spec.offset,
        gradient: spec.gradient.clone(),
        holder: spec.holder,
    })
}

fn required<T: Clone>(v: &Option<T>, key: &str, family: &str) -> CResult<T> {
    v.clone()
        .ok_or_else(|| ConfigError::new(key, format!("required for family `{family}`")))
}

fn young(terms: &[PowerTermSpec]) -> YoungFunction {
    YoungFunction::new(
        terms
            .iter()
            .map(|t| YoungTerm {
                coef: t.coef,
                arg_scale: 1.0,
                shape: YoungShape::Power(t.p),
            })
            .collect(),
    )
}

pub fn build_nfunction(spec: &NFunctionSpec, domain: Domain) -> CResult<NFunction> {
    let d = domain.dim();
    let fam = spec.family.as_str();
    let key = |k: &str| format!("nfunction.{k}");
    let m = match fam {
        "constant-power" => NFunction::constant_power(domain, required(&spec.p, &key("p"), fam)?, spec.scale),
        "variable-exponent" => {
            let e = required(&spec.exponent, &key("exponent"), fam)?;
            NFunction::variable_exponent(domain, exponent_field(&e, &domain, &key("exponent"))?, spec.scale)
        }
        "double-phase" => {
            let w = required(&spec.weight, &key("weight"), fam)?;
            NFunction::double_phase(
                domain,
                required(&spec.p, &key("p"), fam)?,
                required(&spec.q, &key("q"), fam)?,
                coefficient_field(&w, d, &key("weight"))?,
                spec.normalized,
            )
        }
        "anisotropic-variable" => {
            let list = required(&spec.exponents, &key("exponents"), fam)?;
            let fields = list
                .iter()
                .enumerate()
                .map(|(i, e)| exponent_field(e, &domain, &format!("nfunction.exponents[{i}]")))
                .collect::<CResult<Vec<_>>>()?;
            NFunction::anisotropic_variable(domain, fields)
        }
        "anisotropic-double-phase" => {
            let ws = required(&spec.weights, &key("weights"), fam)?;
            let weights = ws
                .iter()
                .enumerate()
                .map(|(i, w)| coefficient_field(w, d, &format!("nfunction.weights[{i}]")))
                .collect::<CResult<Vec<_>>>()?;
            NFunction::anisotropic_double_phase(
                domain,
                required(&spec.ps, &key("ps"), fam)?,
                required(&spec.qs, &key("qs"), fam)?,
                weights,
                spec.normalized,
            )
        }
        "custom" => {
            let (xs, xis, etas) = (
                coordinate_names(d, "x"),
                coordinate_names(d, "xi"),
                coordinate_names(d, "eta"),
            );
            let value_names: Vec<&str> = xs.iter().chain(&xis).map(String::as_str).collect();
            let conj_names: Vec<&str> = xs.iter().chain(&etas).map(String::as_str).collect();
            let source = required(&spec.value, &key("value"), fam)?;
            let value = Expression::parse(&source, &value_names).map_err(|m| ConfigError::new(key("value"), m))?;
            let conjugate = spec
                .conjugate
                .as_deref()
                .map(|s| Expression::parse(s, &conj_names).map_err(|m| ConfigError::new(key("conjugate"), m)))
                .transpose()?;
            let lower = young(&required(&spec.lower, &key("lower"), fam)?);
            let upper = young(&required(&spec.upper, &key("upper"), fam)?);
            let integrand = CustomIntegrand {
                label: source,
                value: Box::new(move |x, xi| value.value_split(x, xi)),
                gradient: None,
                conjugate: conjugate.map(|c| Box::new(move |x: &[f64], eta: &[f64]| c.value_split(x, eta)) as _),
            };
            NFunction::custom(domain, integrand, lower, upper)
        }
        other => {
            return Err(ConfigError::new(
                key("family"),
                format!(
                    "unknown family `{other}` (expected constant-power, variable-exponent, double-phase, \
                     anisotropic-variable, anisotropic-double-phase or custom)"
                ),
            ))
        }
    };
    m.map_err(|e| ConfigError::new("nfunction", e.to_string()))
}

fn build_phi(spec: &PhiSpec, d: usize) -> CResult<ConvectionPhi> {
    if spec.components.is_empty() {
        return Ok(ConvectionPhi::zero(d));
    }
    if spec.components.len() != d {
        return Err(ConfigError::new("phi.components", format!("needs {d} entries")));
    }
    let comps = spec
        .components
        .iter()
        .enumerate()
        .map(|(i, c)| match c.kind.as_str() {
            "zero" => Ok(PhiComponent::Zero),
            "sin" => Ok(PhiComponent::Sin(c.scale)),
            "cos" => Ok(PhiComponent::Cos(c.scale)),
            "arctan" => Ok(PhiComponent::Arctan(c.scale)),
            other => Err(ConfigError::new(
                format!("phi.components[{i}].kind"),
                format!("unknown kind `{other}` (expected zero, sin, cos or arctan)"),
            )),
        })
        .collect::<CResult<Vec<_>>>()?;
    ConvectionPhi::new(comps).map_err(core_err("phi"))
}

fn build_b(spec: &BSpec, domain: &Domain) -> CResult<LowerOrderB> {
    let kernel = match spec.kernel.as_str() {
        "zero" => return Ok(LowerOrderB::zero()),
        "linear" => BKernel::Linear,
        "cubic" => BKernel::Cubic,
        "arctan" => BKernel::Arctan,
        "piecewise" => BKernel::Piecewise {
            negative: spec
                .negative
                .ok_or_else(|| ConfigError::new("b.negative", "required for kernel = \"piecewise\""))?,
            positive: spec
                .positive
                .ok_or_else(|| ConfigError::new("b.positive", "required for kernel = \"piecewise\""))?,
        },
        other => {
            return Err(ConfigError::new(
                "b.kernel",
                format!("unknown kernel `{other}` (expected zero, linear, cubic, arctan or piecewise)"),
            ))
        }
    };
    let weight = match &spec.weight {
        Some(w) => coefficient_field(w, domain.dim(), "b.weight")?,
        None => CoefficientField::constant(1.0),
    };
    LowerOrderB::new(kernel, spec.scale, weight, domain).map_err(core_err("b"))
}

fn build_source(spec: &SourceSpec, d: usize) -> CResult<SourceF> {
    if spec.f.is_empty() {
        return Ok(SourceF::zero(d));
    }
    if spec.f.len() != d {
        return Err(ConfigError::new("source.f", format!("needs {d} expressions")));
    }
    let names = coordinate_names(d, "x");
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let exprs = spec
        .f
        .iter()
        .enumerate()
        .map(|(i, s)| Expression::parse(s, &refs).map_err(|m| ConfigError::new(format!("source.f[{i}]"), m)))
        .collect::<CResult<Vec<_>>>()?;
    let scale = spec.scale;
    Ok(SourceF::new(d, move |x, out| {
        for (o, e) in out.iter_mut().zip(&exprs) {
            *o = scale * e.value(x);
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const BASE: &str = r#"
        [domain]
        kind = "rectangle"
        bounds = [0.0, 1.0, 0.0, 1.0]
        [nfunction]
        family = "double-phase"
        p = 2.0
        q = 3.0
        weight = { gradient = [1.0, 0.0] }
    "#;

    #[test]
    fn parses_minimal_config() {
        let c = RunConfig::parse(BASE).unwrap();
        let m = c.nfunction().unwrap();
        assert_eq!(m.tag().name(), "double-phase");
        assert!((m.value(&[0.5, 0.0], &[1.0, 0.0]) - 1.5).abs() < 1e-14);
        assert_eq!(c.resolution().unwrap(), 16);
    }

    #[test]
    fn unknown_keys_report_their_line() {
        let err = RunConfig::parse(&format!("{BASE}\n[solver]\nmax_iter = 3\n")).unwrap_err();
        assert!(err.message.contains("max_iter"), "{err}");
        assert!(err.message.contains("line"), "{err}");
    }

    #[test]
    fn semantic_errors_name_the_key() {
        let bad = BASE.replace("q = 3.0", "q = 1.5");
        let err = RunConfig::parse(&bad).unwrap().nfunction().unwrap_err();
        assert_eq!(err.key, "nfunction");
        let missing = BASE.replace("p = 2.0", "");
        assert_eq!(
            RunConfig::parse(&missing).unwrap().nfunction().unwrap_err().key,
            "nfunction.p"
        );
        let f = format!("{BASE}\n[source]\nf = [\"x1\", \"y\"]\n");
        let err = RunConfig::parse(&f)
            .unwrap()
            .problem(&mut ChaCha8Rng::seed_from_u64(0))
            .unwrap_err();
        assert!(err.to_string().contains("source.f[1]"), "{err}");
    }

    #[test]
    fn exponent_clamp_defaults_to_attained_range() {
        let spec = ExponentSpec {
            base: 2.0,
            gradient: vec![1.0, -0.5],
            min: None,
            max: None,
        };
        let e = exponent_field(&spec, &Domain::unit_square(), "e").unwrap();
        assert_eq!((e.min, e.max), (1.5, 3.0));
    }

    #[test]
    fn custom_family_from_expressions() {
        let text = r#"
            [domain]
            kind = "interval"
            bounds = [0.0, 1.0]
            [nfunction]
            family = "custom"
            value = "0.5 * xi1^2 + 0.25 * xi1^4"
            lower = [{ coef = 0.5, p = 2.0 }]
            upper = [{ coef = 0.5, p = 2.0 }, { coef = 0.25, p = 4.0 }]
        "#;
        let m = RunConfig::parse(text).unwrap().nfunction().unwrap();
        assert_eq!(m.value(&[0.3], &[2.0]), 6.0);
    }
}
