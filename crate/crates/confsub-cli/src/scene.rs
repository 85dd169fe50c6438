//! Builds charts and immersions from their config descriptions.

use std::sync::Arc;

use confsub::catalog::{self, CatalogImmersion, ImmersionSpec, CHART_NAMES, IMMERSION_NAMES};
use confsub::chart::{Backend, CoordBox, MetricChart, Signature};
use confsub::expr::{num, parse, Expr};
use confsub::submanifold::ImmersionChart;

use crate::config::{BackendConfig, ChartConfig, ConfigError, ImmersionConfig, SignatureConfig};

type Res<T> = Result<T, ConfigError>;

fn need<T: Copy>(v: Option<T>, path: &str, field: &str, owner: &str) -> Res<T> {
    v.ok_or_else(|| ConfigError::new(format!("{path}.{field}"), format!("required for `{owner}`")))
}

pub fn expr(text: &str, path: &str) -> Res<Expr> {
    parse(text).map_err(|e| ConfigError::new(path, format!("cannot parse `{text}`: {e}")))
}

fn lib(path: &str) -> impl Fn(confsub::Error) -> ConfigError + '_ {
    move |e| ConfigError::new(path, e.to_string())
}

fn coord_box(bounds: &Option<Vec<[f64; 2]>>, periodic: &Option<Vec<bool>>, dim: usize, path: &str) -> Res<CoordBox> {
    let bounds = bounds.as_ref().ok_or_else(|| ConfigError::new(format!("{path}.bounds"), "required for `custom`"))?;
    if bounds.len() != dim {
        return Err(ConfigError::new(format!("{path}.bounds"), format!("{} intervals for {dim} coordinates", bounds.len())));
    }
    if let Some(i) = bounds.iter().position(|[a, b]| !(a < b)) {
        return Err(ConfigError::new(format!("{path}.bounds[{i}]"), "lower bound must be below the upper bound"));
    }
    let periodic = periodic.clone().unwrap_or_else(|| vec![false; dim]);
    if periodic.len() != dim {
        return Err(ConfigError::new(format!("{path}.periodic"), format!("{} flags for {dim} coordinates", periodic.len())));
    }
    Ok(CoordBox::new(bounds.iter().map(|[a, b]| (*a, *b)).collect(), periodic))
}

pub fn build_chart(c: &ChartConfig, path: &str) -> Res<MetricChart> {
    let err = lib(path);
    let mut chart = match c.name.as_str() {
        "euclidean" => catalog::euclidean(need(c.n, path, "n", "euclidean")?).map_err(&err)?,
        "flat_torus" => catalog::flat_torus(need(c.n, path, "n", "flat_torus")?).map_err(&err)?,
        "round_sphere" => catalog::round_sphere(need(c.n, path, "n", "round_sphere")?, c.radius.unwrap_or(1.0)).map_err(&err)?,
        "hyperbolic_half_space" => catalog::hyperbolic_half_space(need(c.n, path, "n", "hyperbolic_half_space")?).map_err(&err)?,
        "hyperbolic_ball" => catalog::hyperbolic_ball(need(c.n, path, "n", "hyperbolic_ball")?).map_err(&err)?,
        "product_spheres" => catalog::product_spheres(
            need(c.p, path, "p", "product_spheres")?,
            c.r1.unwrap_or(1.0),
            need(c.q, path, "q", "product_spheres")?,
            c.r2.unwrap_or(1.0),
        )
        .map_err(&err)?,
        "sphere_join" => catalog::sphere_join(need(c.p, path, "p", "sphere_join")?, need(c.q, path, "q", "sphere_join")?).map_err(&err)?,
        "canonical_ambient" => {
            let base = c.base.as_ref().ok_or_else(|| ConfigError::new(format!("{path}.base"), "required for `canonical_ambient`"))?;
            let base = build_chart(base, &format!("{path}.base"))?;
            catalog::canonical_ambient(&base, need(c.lambda, path, "lambda", "canonical_ambient")?).map_err(&err)?
        }
        "custom" => custom_chart(c, path)?,
        other => {
            let mut names: Vec<&str> = CHART_NAMES.to_vec();
            names.push("custom");
            return Err(ConfigError::new(format!("{path}.name"), format!("unknown chart `{other}`")).with_suggestion(crate::config::suggest(other, &names)));
        }
    };
    if let Some(b) = c.backend {
        let backend = match b {
            BackendConfig::Exact => Backend::ExactSymbolic,
            BackendConfig::CentralDifference => c.step.map_or(Backend::CENTRAL_DEFAULT, |h| Backend::CentralDifference { h }),
            BackendConfig::ComplexStep => c.step.map_or(Backend::COMPLEX_DEFAULT, |h| Backend::ComplexStep { h }),
        };
        chart = chart.with_backend(backend).map_err(&err)?;
    }
    if let Some(u) = &c.rescale {
        let u = expr(u, &format!("{path}.rescale"))?;
        chart = chart.conformal_rescale(&u).map_err(|e| ConfigError::new(format!("{path}.rescale"), e.to_string()))?;
    }
    Ok(chart)
}

fn custom_chart(c: &ChartConfig, path: &str) -> Res<MetricChart> {
    let coords = c.coords.as_ref().ok_or_else(|| ConfigError::new(format!("{path}.coords"), "required for `custom`"))?;
    let n = coords.len();
    let domain = coord_box(&c.bounds, &c.periodic, n, path)?;
    let matrix = match (&c.metric, &c.diagonal) {
        (Some(rows), None) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(ConfigError::new(format!("{path}.metric"), format!("needs {n} rows of {n} expressions")));
            }
            let mut m = Vec::with_capacity(n * n);
            for (i, row) in rows.iter().enumerate() {
                for (j, e) in row.iter().enumerate() {
                    m.push(expr(e, &format!("{path}.metric[{i}][{j}]"))?);
                }
            }
            m
        }
        (None, Some(diag)) => {
            if diag.len() != n {
                return Err(ConfigError::new(format!("{path}.diagonal"), format!("needs {n} expressions")));
            }
            let mut m = vec![num(0.0); n * n];
            for (i, e) in diag.iter().enumerate() {
                m[i * n + i] = expr(e, &format!("{path}.diagonal[{i}]"))?;
            }
            m
        }
        _ => return Err(ConfigError::new(path, "a custom chart needs exactly one of `metric` and `diagonal`")),
    };
    let signature = match c.signature.unwrap_or(SignatureConfig::Riemannian) {
        SignatureConfig::Riemannian => Signature::Riemannian,
        SignatureConfig::Indefinite => Signature::Indefinite,
    };
    let names: Vec<&str> = coords.iter().map(|s| s.as_str()).collect();
    MetricChart::new("custom", &names, domain, matrix, signature, Backend::ExactSymbolic).map_err(lib(path))
}

/// Catalog values known in closed form: `(|L̊|², |H|²)`.
pub fn known_values(c: &ImmersionConfig) -> (Option<f64>, Option<f64>) {
    match c.name.as_str() {
        "clifford_torus" => (Some(2.0), Some(0.0)),
        "generalized_clifford" => (c.p.zip(c.q).map(|(p, q)| (p + q) as f64), Some(0.0)),
        "affine_plane" | "equator_sphere" | "totally_geodesic_hyperbolic" | "hyperbolic_cusp" => (Some(0.0), Some(0.0)),
        "round_sphere_euclidean" => (Some(0.0), c.radius.map(|r| 1.0 / (r * r))),
        _ => (None, None),
    }
}

pub fn build_immersion(c: &ImmersionConfig, target: Option<&ChartConfig>) -> Res<CatalogImmersion> {
    let path = "immersion";
    let owner = c.name.as_str();
    let spec = match owner {
        "affine_plane" => Some(ImmersionSpec::AffinePlane { k: need(c.k, path, "k", owner)?, n: need(c.n, path, "n", owner)? }),
        "equator_sphere" => Some(ImmersionSpec::EquatorSphere {
            k: need(c.k, path, "k", owner)?,
            n: need(c.n, path, "n", owner)?,
            radius: c.radius.unwrap_or(1.0),
        }),
        "clifford_torus" => Some(ImmersionSpec::CliffordTorus),
        "generalized_clifford" => Some(ImmersionSpec::GeneralizedClifford { p: need(c.p, path, "p", owner)?, q: need(c.q, path, "q", owner)? }),
        "totally_geodesic_hyperbolic" => {
            Some(ImmersionSpec::TotallyGeodesicHyperbolic { k: need(c.k, path, "k", owner)?, n: need(c.n, path, "n", owner)? })
        }
        "hyperbolic_cusp" => Some(ImmersionSpec::HyperbolicCusp),
        "round_sphere_euclidean" => Some(ImmersionSpec::RoundSphereEuclidean { radius: c.radius.unwrap_or(1.0) }),
        "hyperbolic_graph" => {
            let profile = match (&c.profile, c.amplitude) {
                (Some(p), None) => expr(p, "immersion.profile")?,
                (None, Some(a)) => catalog::seeded_graph_profile(a),
                (None, None) => return Err(ConfigError::new(path, "`hyperbolic_graph` needs `profile` or `amplitude`")),
                (Some(_), Some(_)) => return Err(ConfigError::new(path, "give only one of `profile` and `amplitude`")),
            };
            Some(ImmersionSpec::HyperbolicGraph { profile })
        }
        "custom" => None,
        other => {
            let mut names: Vec<&str> = IMMERSION_NAMES.to_vec();
            names.push("custom");
            return Err(ConfigError::new("immersion.name", format!("unknown immersion `{other}`")).with_suggestion(crate::config::suggest(other, &names)));
        }
    };
    let mut entry = match spec {
        Some(s) => s.build().map_err(lib(path))?,
        None => {
            let target = target.ok_or_else(|| ConfigError::new("target", "a custom immersion needs a target chart"))?;
            custom_immersion(c, build_chart(target, "target")?)?
        }
    };
    if spec_is_catalog(c) {
        if let Some(t) = target {
            let chart = Arc::new(build_chart(t, "target")?);
            if chart.dim() != entry.immersion.target_dim() {
                return Err(ConfigError::new("target", format!("dimension {} does not match the immersion target {}", chart.dim(), entry.immersion.target_dim())));
            }
            entry.immersion = entry.immersion.with_target(chart).map_err(lib("target"))?;
            // The catalog metadata no longer describes the new target.
            entry.lambda = None;
            entry.minimal = false;
            entry.totally_geodesic = false;
        }
    }
    if c.lambda.is_some() {
        entry.lambda = c.lambda;
    }
    if c.euler.is_some() {
        entry.euler = c.euler;
    }
    entry.compact = c.compact.unwrap_or(entry.compact);
    entry.minimal = c.minimal.unwrap_or(entry.minimal);
    entry.totally_geodesic = c.totally_geodesic.unwrap_or(entry.totally_geodesic);
    entry.conformally_compact = c.conformally_compact.unwrap_or(entry.conformally_compact);
    Ok(entry)
}

fn spec_is_catalog(c: &ImmersionConfig) -> bool {
    c.name != "custom"
}

fn custom_immersion(c: &ImmersionConfig, target: MetricChart) -> Res<CatalogImmersion> {
    let path = "immersion";
    let coords = c.coords.as_ref().ok_or_else(|| ConfigError::new("immersion.coords", "required for `custom`"))?;
    let domain = coord_box(&c.bounds, &c.periodic, coords.len(), path)?;
    let map = c.map.as_ref().ok_or_else(|| ConfigError::new("immersion.map", "required for `custom`"))?;
    let map = map.iter().enumerate().map(|(i, e)| expr(e, &format!("immersion.map[{i}]"))).collect::<Res<Vec<_>>>()?;
    let names: Vec<&str> = coords.iter().map(|s| s.as_str()).collect();
    let immersion = ImmersionChart::new("custom", &names, domain, Arc::new(target), map).map_err(lib(path))?;
    Ok(CatalogImmersion {
        immersion,
        lambda: None,
        euler: None,
        compact: false,
        minimal: false,
        totally_geodesic: false,
        conformally_compact: false,
    })
}
