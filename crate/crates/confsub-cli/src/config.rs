//! Scenario files: TOML, validated against [`ScenarioConfig`] with unknown keys rejected.

use std::fmt;
use std::path::PathBuf;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Verify,
    Gbc,
    Renorm,
    Expand,
    Rigidity,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Verify => "verify",
            Task::Gbc => "gbc",
            Task::Renorm => "renorm",
            Task::Expand => "expand",
            Task::Rigidity => "rigidity",
        }
    }
}

/// One scenario. Task sections that do not apply to the chosen task are ignored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// May be omitted when the task is given as a subcommand.
    pub task: Option<Task>,
    pub immersion: Option<ImmersionConfig>,
    /// Replaces the immersion's target metric; on its own, `verify` checks this chart.
    pub target: Option<ChartConfig>,
    /// Straightenable invariant for `verify`.
    pub invariant: Option<InvariantConfig>,
    /// Quadrature nodes per transverse dimension.
    pub grid: Option<usize>,
    /// Gauss–Legendre nodes per `ρ` segment on conformally compact sources.
    pub rho_nodes: Option<usize>,
    pub ladder: Option<LadderConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Pointwise checks use this many Halton points.
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// JSON report path; stdout when absent.
    pub output: Option<PathBuf>,
    /// CSV table of `(ε, value)` samples, for `renorm`.
    pub csv: Option<PathBuf>,
    pub renorm: Option<RenormConfig>,
    pub expand: Option<ExpandConfig>,
    pub rigidity: Option<RigidityConfig>,
    /// Expected values, checked at `tolerances.expect`.
    #[serde(default)]
    pub expect: Expectations,
}

/// A catalog immersion by name, or `name = "custom"` with an explicit map.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ImmersionConfig {
    pub name: String,
    pub k: Option<usize>,
    pub n: Option<usize>,
    pub p: Option<usize>,
    pub q: Option<usize>,
    pub radius: Option<f64>,
    /// Graph profile `u(rho, phi)` for `hyperbolic_graph`.
    pub profile: Option<String>,
    /// Amplitude of the seeded profile, for `hyperbolic_graph` without `profile`.
    pub amplitude: Option<f64>,
    /// Custom immersions: source coordinates, bounds, periodicity and target components.
    pub coords: Option<Vec<String>>,
    pub bounds: Option<Vec<[f64; 2]>>,
    pub periodic: Option<Vec<bool>>,
    pub map: Option<Vec<String>>,
    /// Metadata; overrides the catalog for named entries.
    pub lambda: Option<f64>,
    pub euler: Option<i64>,
    pub compact: Option<bool>,
    pub minimal: Option<bool>,
    pub totally_geodesic: Option<bool>,
    pub conformally_compact: Option<bool>,
}

/// A catalog chart by name, or `name = "custom"` with explicit components.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ChartConfig {
    pub name: String,
    pub n: Option<usize>,
    pub p: Option<usize>,
    pub q: Option<usize>,
    pub radius: Option<f64>,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    /// Einstein constant of the base, for `canonical_ambient`.
    pub lambda: Option<f64>,
    pub base: Option<Box<ChartConfig>>,
    /// Conformal factor `Υ`: the chart becomes `e^{2Υ}g`.
    pub rescale: Option<String>,
    pub coords: Option<Vec<String>>,
    pub bounds: Option<Vec<[f64; 2]>>,
    pub periodic: Option<Vec<bool>>,
    /// Full component matrix, rows of expressions.
    pub metric: Option<Vec<Vec<String>>>,
    /// Diagonal components, instead of `metric`.
    pub diagonal: Option<Vec<String>>,
    pub signature: Option<SignatureConfig>,
    pub backend: Option<BackendConfig>,
    /// Step for the finite-difference backends.
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum SignatureConfig {
    Riemannian,
    Indefinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum BackendConfig {
    Exact,
    CentralDifference,
    ComplexStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct InvariantConfig {
    /// One of the straightenable presets (`L2`, `L2ell`, `L2sq`, `Pfr`, `Wtrace`).
    pub preset: String,
    /// `ℓ` for `L2ell`, `r` for `Pfr`.
    pub param: Option<usize>,
    /// Power of the ambient Laplacian.
    #[serde(default = "one")]
    pub c: usize,
}

fn one() -> usize {
    1
}

/// Either explicit cutoffs or a geometric ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(untagged)]
pub enum LadderConfig {
    Values(Vec<f64>),
    Geometric { start: f64, ratio: f64, count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub gauss: f64,
    pub gauss_weyl: f64,
    pub frame: f64,
    /// Minimality and Einstein gates.
    pub hypothesis: f64,
    /// Chart identities: Bianchi, metric compatibility, Weyl traces.
    pub chart: f64,
    pub straightening: f64,
    /// Relative residual of the Gauss–Bonnet–Chern identity.
    pub gbc: f64,
    pub euler: f64,
    /// Largest misfit of the ε-fit.
    pub fit: f64,
    /// Spread of finite parts over a defining-function family.
    pub invariance: f64,
    /// Relative agreement of straightened and reduced rigidity integrals.
    pub rigidity: f64,
    /// Pointwise rigidity identities.
    pub identity: f64,
    pub expect: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            gauss: 1e-6,
            gauss_weyl: 1e-6,
            frame: 1e-12,
            hypothesis: 1e-6,
            chart: 1e-8,
            straightening: 1e-5,
            gbc: 1e-3,
            euler: 1e-3,
            fit: 1e-6,
            invariance: 1e-3,
            rigidity: 1e-3,
            identity: 1e-8,
            expect: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RenormConfig {
    /// `one`, `lo_norm2`, `mean_norm2`, `pfaffian`, `gbc` or `expression`.
    pub integrand: Option<String>,
    /// `r` for the `gbc` integrand.
    pub r: Option<usize>,
    /// Source-coordinate expression for `integrand = "expression"`.
    pub expression: Option<String>,
    /// `ψ` for the divergence integrand `Δ̄ψ` (`integrand = "divergence"`).
    pub potential: Option<String>,
    /// Defining function in source coordinates; `rho` by default.
    pub defining_function: Option<String>,
    /// Extra defining functions whose finite parts must agree.
    pub family: Option<Vec<String>>,
    pub guard_terms: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ExpandConfig {
    pub k: usize,
    pub n: usize,
    /// Boundary graph components, polynomials in `x1 … x{k−1}`.
    pub boundary: Vec<String>,
    /// Highest order to solve for; `k + 1` by default.
    pub order: Option<usize>,
    /// Free coefficient `u_{k+1}`, one polynomial per normal direction.
    pub free: Option<Vec<String>>,
    pub x_degree: Option<i32>,
    pub truncation: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RigidityConfig {
    /// Powers `ℓ` of `|L|^{2ℓ}`; `1..=k/2` by default.
    pub ells: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    /// Pointwise `|L̊|²`.
    pub lo_norm2: Option<f64>,
    /// Pointwise `|H|²`.
    pub mean_norm2: Option<f64>,
    /// Area or renormalized area.
    pub area: Option<f64>,
    /// Finite part, for `renorm`.
    pub finite_part: Option<f64>,
    /// Log coefficient, for `renorm` with odd `k`.
    pub log_coefficient: Option<f64>,
    /// Willmore energy `∫(λ + |H|²)`, for surfaces in `verify`.
    pub willmore: Option<f64>,
}

/// A configuration problem, located by its dotted path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
    pub suggestion: Option<String>,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { path: path.into(), message: message.into(), suggestion: None }
    }

    pub fn with_suggestion(mut self, s: Option<String>) -> Self {
        self.suggestion = s;
        self
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)?;
        } else {
            write!(f, "{}: {}", self.path, self.message)?;
        }
        if let Some(s) = &self.suggestion {
            write!(f, " (did you mean `{s}`?)")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// Closest candidate by Jaro–Winkler similarity, if any is reasonably close.
pub fn suggest(name: &str, candidates: &[&str]) -> Option<String> {
    candidates
        .iter()
        .map(|c| (strsim::jaro_winkler(name, c), *c))
        .filter(|(s, _)| *s > 0.75)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, c)| c.to_string())
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::new(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let message = inner.message().to_string();
            let located = match inner.span() {
                Some(span) => {
                    let line = text[..span.start].matches('\n').count() + 1;
                    format!("{message} (line {line})")
                }
                None => message,
            };
            let path = if path == "." { String::new() } else { path };
            ConfigError::new(path, located)
        })
    }

    pub fn schema() -> schemars::schema::RootSchema {
        schemars::schema_for!(ScenarioConfig)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses() {
        let c = ScenarioConfig::from_toml("task = \"gbc\"\n[immersion]\nname = \"clifford_torus\"\n").unwrap();
        assert_eq!(c.task, Some(Task::Gbc));
        assert_eq!(c.immersion.unwrap().name, "clifford_torus");
        assert_eq!(c.tolerances, Tolerances::default());
    }

    #[test]
    fn wrong_type_reports_the_field() {
        let e = ScenarioConfig::from_toml("[immersion]\nname = \"equator_sphere\"\nk = \"two\"\n").unwrap_err();
        assert_eq!(e.path, "immersion.k");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = ScenarioConfig::from_toml("grdi = 4\n").unwrap_err();
        assert!(e.message.contains("grdi"), "{e}");
        let e = ScenarioConfig::from_toml("[tolerances]\ngaus = 1e-3\n").unwrap_err();
        assert!(e.to_string().contains("tolerances"), "{e}");
    }

    #[test]
    fn ladders_in_both_forms() {
        let c = ScenarioConfig::from_toml("ladder = [0.2, 0.1, 0.05]").unwrap();
        assert_eq!(c.ladder, Some(LadderConfig::Values(vec![0.2, 0.1, 0.05])));
        let c = ScenarioConfig::from_toml("ladder = { start = 0.2, ratio = 0.5, count = 6 }").unwrap();
        assert_eq!(c.ladder, Some(LadderConfig::Geometric { start: 0.2, ratio: 0.5, count: 6 }));
    }

    #[test]
    fn suggestions() {
        assert_eq!(suggest("clifford_tours", &["clifford_torus", "affine_plane"]).as_deref(), Some("clifford_torus"));
        assert_eq!(suggest("zzz", &["clifford_torus"]), None);
    }
}
