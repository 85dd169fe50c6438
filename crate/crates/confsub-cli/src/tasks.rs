//! Task dispatch. Library errors inside a task become failed checks.

use std::collections::BTreeMap;
use std::time::Instant;

use serde_json::{json, Value};

use confsub::ambient::{hypothesis_residuals, straightenable_field, straightened_value, CanonicalAmbient, StraightInvariantSpec};
use confsub::catalog::CatalogImmersion;
use confsub::chart::{bianchi_residual, metric_compatibility_residual, trace_residual, MetricChart};
use confsub::expansion::{graph_mean_curvature_jet, solve_minimal_expansion, ExpansionOptions};
use confsub::expr::var;
use confsub::field::Field;
use confsub::functionals::{compact_gbc_check, renormalized_gbc_check, rigidity_functionals, GbcOptions, GbcReport, RigidityOptions, RigidityTerm};
use confsub::jets::Poly;
use confsub::renorm::{default_ladder, defining_function_invariance, ladder, renormalized_integral, CutoffOptions, EpsilonFit, FitOptions, Integrand};
use confsub::sampling::in_box;

use crate::config::{ConfigError, ExpandConfig, LadderConfig, ScenarioConfig, Task};
use crate::report::{num, nums, write_samples_csv, Check, Library, Report, Timings};
use crate::scene::{build_chart, build_immersion, expr, known_values};

pub const DEFAULT_SAMPLES: usize = 16;

/// What a task produced before timings and config are attached.
#[derive(Default)]
struct Outcome {
    subject: BTreeMap<String, Value>,
    checks: Vec<Check>,
    data: BTreeMap<String, Value>,
}

impl Outcome {
    fn push(&mut self, c: Check) {
        self.checks.push(c);
    }
}

/// Validates the scenario and runs it. Only configuration problems are errors.
pub fn run(config: &ScenarioConfig) -> Result<Report, ConfigError> {
    let start = Instant::now();
    let task = config.task.ok_or_else(|| ConfigError::new("task", "no task given in the config or on the command line"))?;
    let mut out = Outcome::default();
    let checks_start = Instant::now();
    match task {
        Task::Verify => verify(config, &mut out)?,
        Task::Gbc => gbc(config, &mut out)?,
        Task::Renorm => renorm(config, &mut out)?,
        Task::Expand => expand(config, &mut out)?,
        Task::Rigidity => rigidity(config, &mut out)?,
    }
    let checks_seconds = checks_start.elapsed().as_secs_f64();
    let passed = !out.checks.is_empty() && out.checks.iter().all(|c| c.pass);
    Ok(Report {
        library: Library { name: "confsub", version: env!("CARGO_PKG_VERSION") },
        task: task.name().to_string(),
        config: config.clone(),
        subject: out.subject,
        checks: out.checks,
        data: out.data,
        passed,
        timings: Timings { total_seconds: start.elapsed().as_secs_f64(), checks_seconds },
    })
}

fn entry(config: &ScenarioConfig) -> Result<CatalogImmersion, ConfigError> {
    let c = config.immersion.as_ref().ok_or_else(|| ConfigError::new("immersion", "this task needs an immersion"))?;
    build_immersion(c, config.target.as_ref())
}

fn describe(e: &CatalogImmersion, out: &mut Outcome) {
    let imm = &e.immersion;
    out.subject.insert("immersion".into(), json!(imm.name()));
    out.subject.insert("target".into(), json!(imm.target().name()));
    out.subject.insert("k".into(), json!(imm.source_dim()));
    out.subject.insert("n".into(), json!(imm.target_dim()));
    out.subject.insert("lambda".into(), e.lambda.map_or(Value::Null, num));
    out.subject.insert("euler".into(), json!(e.euler));
    out.subject.insert("compact".into(), json!(e.compact));
    out.subject.insert("minimal".into(), json!(e.minimal));
    out.subject.insert("totally_geodesic".into(), json!(e.totally_geodesic));
    out.subject.insert("conformally_compact".into(), json!(e.conformally_compact));
}

fn sample_points(bounds: &[(f64, f64)], config: &ScenarioConfig) -> Vec<Vec<f64>> {
    in_box(bounds, config.samples.unwrap_or(DEFAULT_SAMPLES), config.seed, 0.05)
}

fn eps_ladder(config: &ScenarioConfig) -> Result<Vec<f64>, ConfigError> {
    let l = match &config.ladder {
        None => default_ladder(),
        Some(LadderConfig::Values(v)) => v.clone(),
        Some(LadderConfig::Geometric { start, ratio, count }) => {
            if !(*ratio > 0.0 && *ratio < 1.0) {
                return Err(ConfigError::new("ladder.ratio", "must lie in (0, 1)"));
            }
            ladder(*count, *start, *ratio)
        }
    };
    if l.windows(2).any(|w| !(w[1] < w[0])) || l.iter().any(|e| !(*e > 0.0)) {
        return Err(ConfigError::new("ladder", "cutoffs must be positive and strictly decreasing"));
    }
    Ok(l)
}

fn cutoff_options(config: &ScenarioConfig, defaults: CutoffOptions) -> CutoffOptions {
    CutoffOptions { grid: config.grid.unwrap_or(defaults.grid), rho_nodes: config.rho_nodes.unwrap_or(defaults.rho_nodes), ..defaults }
}

/// Running maximum of one pointwise quantity; the first error wins.
struct Worst {
    value: f64,
    error: Option<confsub::Error>,
}

impl Worst {
    fn new() -> Self {
        Worst { value: 0.0, error: None }
    }

    fn record(&mut self, r: confsub::Result<f64>) {
        match r {
            Ok(v) => self.value = if v.is_nan() || self.value.is_nan() { f64::NAN } else { self.value.max(v) },
            Err(e) => {
                self.error.get_or_insert(e);
            }
        }
    }

    fn check(self, name: &str, tol: f64, samples: usize) -> Check {
        match self.error {
            Some(e) => Check::failed(name, &e),
            None => Check::bounded(name, self.value, tol).value("samples", samples),
        }
    }
}

fn verify(config: &ScenarioConfig, out: &mut Outcome) -> Result<(), ConfigError> {
    if config.immersion.is_none() {
        let t = config.target.as_ref().ok_or_else(|| ConfigError::new("immersion", "`verify` needs an immersion or a target chart"))?;
        let chart = build_chart(t, "target")?;
        verify_chart(&chart, config, out);
        return Ok(());
    }
    let e = entry(config)?;
    describe(&e, out);
    let imm = &e.immersion;
    let tol = &config.tolerances;
    let k = imm.source_dim();
    let points = sample_points(&imm.domain().bounds, config);
    let (mut gauss, mut gw, mut frame, mut trace, mut split) = (Worst::new(), Worst::new(), Worst::new(), Worst::new(), Worst::new());
    let (mut mean, mut einstein) = (Worst::new(), Worst::new());
    let (known_lo, known_mean) = match (&config.immersion, &config.target) {
        (Some(c), None) => known_values(c),
        _ => (None, None),
    };
    let expect_lo = config.expect.lo_norm2.or(known_lo);
    let expect_mean = config.expect.mean_norm2.or(known_mean);
    let (mut lo_err, mut mean_err) = (Worst::new(), Worst::new());
    for x in &points {
        let d = match imm.data_at(x, true) {
            Ok(d) => d,
            Err(err) => {
                gauss.record(Err(err));
                continue;
            }
        };
        gauss.record(d.gauss_residual());
        if k >= 3 {
            gw.record(d.gauss_weyl_residual());
        }
        frame.record(Ok(d.frame.orthonormality_residual(d.target.g())));
        let s = &d.sff;
        let scale = 1.0 + s.norm2();
        trace.record(Ok(s.lo_trace_residual() / scale));
        split.record(Ok((s.lo_norm2() - (s.norm2() - k as f64 * s.mean_norm2())).abs() / scale));
        mean.record(Ok(s.mean_norm2().max(0.0).sqrt()));
        if let Some(l) = e.lambda {
            einstein.record(hypothesis_residuals(&d, l).map(|(_, e)| e));
        }
        if let Some(v) = expect_lo {
            lo_err.record(Ok((s.lo_norm2() - v).abs()));
        }
        if let Some(v) = expect_mean {
            mean_err.record(Ok((s.mean_norm2() - v).abs()));
        }
    }
    let n = points.len();
    out.push(gauss.check("gauss_residual", tol.gauss, n));
    if k >= 3 {
        out.push(gw.check("gauss_weyl_residual", tol.gauss_weyl, n));
    }
    out.push(frame.check("frame_orthonormality", tol.frame, n));
    out.push(trace.check("lo_trace_free", tol.identity, n).note("tr L̊ relative to 1 + |L|²"));
    out.push(split.check("lo_norm_split", tol.identity, n).note("|L̊|² = |L|² − k|H|² relative to 1 + |L|²"));
    let max_h = mean.value;
    if e.minimal {
        out.push(mean.check("mean_curvature", tol.hypothesis, n));
    }
    out.data.insert("max_mean_curvature".into(), num(max_h));
    if let Some(l) = e.lambda {
        out.push(einstein.check("einstein", tol.hypothesis, n).value("lambda", num(l)));
    }
    if let Some(v) = expect_lo {
        out.push(lo_err.check("lo_norm2", tol.expect, n).value("expected", num(v)));
    }
    if let Some(v) = expect_mean {
        out.push(mean_err.check("mean_norm2", tol.expect, n).value("expected", num(v)));
    }
    if let Some(w) = config.expect.willmore {
        out.push(match (k, e.lambda) {
            (2, Some(l)) => match imm.willmore_energy(l, config.grid.unwrap_or(24)) {
                Ok(v) => Check::bounded("willmore", (v - w).abs(), tol.expect).value("value", num(v)).value("expected", num(w)),
                Err(err) => Check::failed("willmore", &err),
            },
            _ => Check::flag("willmore", false).note("the Willmore energy needs a surface with a known Einstein constant"),
        });
    }
    if let Some(inv) = &config.invariant {
        let spec = StraightInvariantSpec::preset(&inv.preset, inv.param, inv.c).map_err(|err| {
            ConfigError::new("invariant.preset", err.to_string()).with_suggestion(crate::config::suggest(&inv.preset, &confsub::ambient::PRESET_NAMES))
        })?;
        out.push(straightening_check(&e, &spec, config));
    }
    Ok(())
}

fn straightening_check(e: &CatalogImmersion, spec: &StraightInvariantSpec, config: &ScenarioConfig) -> Check {
    let name = format!("straightening[{}, c={}]", spec.name(), spec.c);
    let Some(lambda) = e.lambda else {
        return Check::flag(name, false).note("the straightening identity needs a known Einstein constant");
    };
    let imm = &e.immersion;
    let run = || -> confsub::Result<(f64, f64, usize)> {
        let amb = CanonicalAmbient::new(imm, lambda)?;
        let field = straightenable_field(spec.contraction, imm);
        let count = config.samples.unwrap_or(DEFAULT_SAMPLES).min(4);
        let mut worst = 0.0f64;
        let mut size = 0.0f64;
        for x in in_box(&imm.domain().bounds, count, config.seed, 0.1) {
            let s = straightened_value(spec, imm, lambda, &x)?;
            let d = amb.laplacian_power_direct(&field, spec.weight() as f64, spec.c, &x)?;
            worst = worst.max((s - d).abs());
            size = size.max(d.abs());
        }
        Ok((worst / (1.0 + size), size, count))
    };
    match run() {
        Ok((r, size, count)) => Check::bounded(name, r, config.tolerances.straightening)
            .value("samples", count)
            .value("conformally_invariant", spec.validate(imm.source_dim()).is_ok())
            .value("max_abs_ambient", num(size))
            .note("ambient Laplacian vs straightening operator, relative to 1 + max|value|"),
        Err(err) => Check::failed(name, &err),
    }
}

fn verify_chart(chart: &MetricChart, config: &ScenarioConfig, out: &mut Outcome) {
    out.subject.insert("chart".into(), json!(chart.name()));
    out.subject.insert("n".into(), json!(chart.dim()));
    let tol = config.tolerances.chart;
    let points = sample_points(&chart.domain().bounds, config);
    let (mut bianchi, mut compat, mut weyl) = (Worst::new(), Worst::new(), Worst::new());
    for x in &points {
        let geo = match chart.geometry(x, true) {
            Ok(g) => g,
            Err(err) => {
                bianchi.record(Err(err));
                continue;
            }
        };
        compat.record(Ok(metric_compatibility_residual(&geo)));
        match geo.riemann() {
            Ok(r) => bianchi.record(Ok(bianchi_residual(&r) / (1.0 + r.max_abs()))),
            Err(err) => bianchi.record(Err(err)),
        }
        if chart.dim() >= 3 {
            weyl.record(geo.weyl().map(|w| trace_residual(&w, geo.ginv())));
        }
    }
    let n = points.len();
    out.push(bianchi.check("bianchi", tol, n).note("relative to 1 + max|Rm|"));
    out.push(compat.check("metric_compatibility", tol, n));
    if chart.dim() >= 3 {
        out.push(weyl.check("weyl_trace_free", tol, n));
    }
}

fn fit_json(f: &EpsilonFit) -> Value {
    json!({
        "basis": f.basis.iter().map(|b| b.label()).collect::<Vec<_>>(),
        "coefficients": nums(&f.coefficients),
        "finite_part": num(f.finite_part),
        "log_coefficient": f.log_coefficient.map_or(Value::Null, num),
        "residual": num(f.residual),
        "condition": num(f.condition),
        "reliable": f.reliable,
    })
}

fn gbc_json(r: &GbcReport) -> Value {
    json!({
        "k": r.k,
        "n": r.n,
        "lambda": num(r.lambda),
        "renormalized": r.renormalized,
        "euler": r.euler,
        "euler_recovered": num(r.euler_recovered),
        "area": num(r.area),
        "area_fit": r.area_fit.as_ref().map_or(Value::Null, fit_json),
        "pfaffian_integrals": nums(&r.pfaffian_integrals),
        "lhs": num(r.lhs),
        "rhs": num(r.rhs),
        "residual": num(r.residual),
        "scale": num(r.scale),
        "relative_residual": num(r.relative_residual),
        "minimality_residual": num(r.minimality_residual),
        "einstein_residual": num(r.einstein_residual),
        "mean_curvature_integral": r.mean_curvature_integral.map_or(Value::Null, num),
        "corrected_residual": r.corrected_residual.map_or(Value::Null, num),
    })
}

fn gbc(config: &ScenarioConfig, out: &mut Outcome) -> Result<(), ConfigError> {
    let e = entry(config)?;
    describe(&e, out);
    let tol = &config.tolerances;
    let defaults = GbcOptions::default();
    let opts = GbcOptions {
        grid: config.grid.unwrap_or(defaults.grid),
        cutoff: cutoff_options(config, defaults.cutoff),
        ladder: eps_ladder(config)?,
        gate_samples: config.samples.unwrap_or(defaults.gate_samples),
        seed: config.seed,
        ..defaults
    };
    let result = if e.compact {
        compact_gbc_check(&e, &opts)
    } else if e.conformally_compact {
        renormalized_gbc_check(&e, &opts)
    } else {
        out.push(Check::flag("gbc_identity", false).note("the immersion is neither compact nor conformally compact"));
        return Ok(());
    };
    let r = match result {
        Ok(r) => r,
        Err(err) => {
            out.push(Check::failed("gbc_identity", &err));
            return Ok(());
        }
    };
    let mut identity = Check::bounded("gbc_identity", r.effective_relative_residual(), tol.gbc)
        .value("lhs", num(r.lhs))
        .value("rhs", num(r.rhs))
        .value("relative_residual", num(r.relative_residual));
    if let Some(c) = r.corrected_residual {
        identity = identity.value("corrected_residual", num(c)).note("non-minimal surface: the identity includes ∫|H|²");
    }
    out.push(identity);
    out.push(
        Check::bounded("euler_recovered", (r.euler_recovered - r.euler as f64).abs(), tol.euler)
            .value("euler", r.euler)
            .value("recovered", num(r.euler_recovered)),
    );
    let area_name = if r.renormalized { "renormalized_area" } else { "area" };
    out.push(match config.expect.area {
        Some(a) => Check::bounded(area_name, (r.area - a).abs(), tol.expect).value("value", num(r.area)).value("expected", num(a)),
        None => Check::flag(area_name, r.area.is_finite()).value("value", num(r.area)),
    });
    if let Some(fit) = &r.area_fit {
        out.push(Check::flag("area_fit_reliable", fit.reliable).value("condition", num(fit.condition)));
    }
    out.data.insert("gbc".into(), gbc_json(&r));
    Ok(())
}

fn integrand(config: &ScenarioConfig, e: &CatalogImmersion) -> Result<Integrand, ConfigError> {
    let rc = config.renorm.clone().unwrap_or_default();
    let name = rc.integrand.as_deref().unwrap_or("one");
    let imm = &e.immersion;
    let field = |text: &Option<String>, key: &str| -> Result<Field, ConfigError> {
        let path = format!("renorm.{key}");
        let text = text.as_ref().ok_or_else(|| ConfigError::new(&path, format!("required for integrand `{name}`")))?;
        Field::symbolic(expr(text, &path)?, imm.coords()).map_err(|err| ConfigError::new(&path, err.to_string()))
    };
    Ok(match name {
        "one" => Integrand::one(),
        "lo_norm2" => Integrand::lo_norm2(),
        "mean_norm2" => Integrand::mean_norm2(),
        "pfaffian" => Integrand::intrinsic_pfaffian(),
        "gbc" => {
            let r = rc.r.ok_or_else(|| ConfigError::new("renorm.r", "required for integrand `gbc`"))?;
            let lambda = e.lambda.ok_or_else(|| ConfigError::new("immersion.lambda", "integrand `gbc` needs an Einstein constant"))?;
            Integrand::gbc(lambda, r)
        }
        "expression" => Integrand::field("expression", field(&rc.expression, "expression")?),
        "divergence" => Integrand::divergence_of_gradient(imm, field(&rc.potential, "potential")?),
        other => {
            let names = ["one", "lo_norm2", "mean_norm2", "pfaffian", "gbc", "expression", "divergence"];
            return Err(ConfigError::new("renorm.integrand", format!("unknown integrand `{other}`")).with_suggestion(crate::config::suggest(other, &names)));
        }
    })
}

fn renorm(config: &ScenarioConfig, out: &mut Outcome) -> Result<(), ConfigError> {
    let e = entry(config)?;
    describe(&e, out);
    let tol = &config.tolerances;
    let rc = config.renorm.clone().unwrap_or_default();
    let f = integrand(config, &e)?;
    let r = match &rc.defining_function {
        Some(t) => expr(t, "renorm.defining_function")?,
        None => var("rho"),
    };
    let family = rc
        .family
        .iter()
        .flatten()
        .enumerate()
        .map(|(i, t)| expr(t, &format!("renorm.family[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let eps = eps_ladder(config)?;
    let opts = cutoff_options(config, CutoffOptions::default());
    let fit_opts = FitOptions { guard_terms: rc.guard_terms.unwrap_or(FitOptions::default().guard_terms), ..FitOptions::default() };
    out.subject.insert("integrand".into(), json!(f.name));
    out.subject.insert("defining_function".into(), json!(r.to_string()));
    let (samples, fit) = match renormalized_integral(&e.immersion, &f, &r, &eps, &opts, &fit_opts) {
        Ok(v) => v,
        Err(err) => {
            out.push(Check::failed("renormalized_integral", &err));
            return Ok(());
        }
    };
    let size = samples.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    out.push(Check::flag("fit_reliable", fit.reliable).value("condition", num(fit.condition)));
    out.push(Check::bounded("fit_residual", fit.residual / size.max(1.0), tol.fit).note("largest misfit relative to max(1, max|sample|)"));
    if let Some(v) = config.expect.finite_part {
        out.push(Check::bounded("finite_part", (fit.finite_part - v).abs(), tol.expect).value("value", num(fit.finite_part)).value("expected", num(v)));
    }
    if let Some(v) = config.expect.log_coefficient {
        let got = fit.log_coefficient.unwrap_or(0.0);
        out.push(Check::bounded("log_coefficient", (got - v).abs(), tol.expect).value("value", num(got)).value("expected", num(v)));
    }
    if !family.is_empty() {
        let mut all = vec![r.clone()];
        all.extend(family);
        match defining_function_invariance(&e.immersion, &f, &all, &eps, &opts, &fit_opts) {
            Ok(inv) => {
                out.push(Check::bounded("defining_function_invariance", inv.spread, tol.invariance).value("finite_parts", nums(&inv.finite_parts)));
            }
            Err(err) => out.push(Check::failed("defining_function_invariance", &err)),
        }
    }
    out.data.insert("eps".into(), nums(&samples.eps));
    out.data.insert("values".into(), nums(&samples.values));
    out.data.insert("fit".into(), fit_json(&fit));
    if let Some(path) = &config.csv {
        write_samples_csv(path, &samples.eps, &samples.values).map_err(|err| ConfigError::new("csv", format!("cannot write {}: {err}", path.display())))?;
    }
    Ok(())
}

fn polys(texts: &[String], nv: usize, path: &str) -> Result<Vec<Poly>, ConfigError> {
    let names: Vec<String> = (1..=nv).map(|i| format!("x{i}")).collect();
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let p = format!("{path}[{i}]");
            Poly::from_expr(&expr(t, &p)?, &refs).map_err(|err| ConfigError::new(&p, err.to_string()))
        })
        .collect()
}

fn poly_strings(ps: &[Poly]) -> Value {
    json!(ps.iter().map(|p| format!("{p:?}")).collect::<Vec<_>>())
}

fn expand(config: &ScenarioConfig, out: &mut Outcome) -> Result<(), ConfigError> {
    let ec: &ExpandConfig = config.expand.as_ref().ok_or_else(|| ConfigError::new("expand", "the `expand` task needs an [expand] section"))?;
    let (k, n) = (ec.k, ec.n);
    if k < 2 || n <= k {
        return Err(ConfigError::new("expand", format!("need 2 ≤ k < n, got k = {k}, n = {n}")));
    }
    let u0 = polys(&ec.boundary, k - 1, "expand.boundary")?;
    if u0.len() != n - k {
        return Err(ConfigError::new("expand.boundary", format!("{} components for codimension {}", u0.len(), n - k)));
    }
    let seed = ec.free.as_ref().map(|f| polys(f, k - 1, "expand.free")).transpose()?;
    let order = ec.order.unwrap_or(k + 1);
    let defaults = ExpansionOptions::default();
    let opts = ExpansionOptions { truncation: ec.truncation, x_degree: ec.x_degree.unwrap_or(defaults.x_degree), seed };
    out.subject.insert("k".into(), json!(k));
    out.subject.insert("n".into(), json!(n));
    out.subject.insert("order".into(), json!(order));
    let ans = match solve_minimal_expansion(&u0, k, n, order, &opts) {
        Ok(a) => a,
        Err(err) => {
            out.push(Check::failed("minimal_expansion", &err));
            return Ok(());
        }
    };
    let cancelled = order.min(k);
    match graph_mean_curvature_jet(&ans) {
        Ok(h) => {
            let bad: Vec<usize> = (0..=cancelled - 2).filter(|&l| h.iter().any(|j| !j.coeff(l).is_zero())).collect();
            out.push(
                Check::flag("mean_curvature_order", bad.is_empty())
                    .value("vanishing_through", cancelled - 2)
                    .value("nonzero_orders", json!(bad))
                    .note("coefficients of ρ^0 … ρ^{L−2} of H vanish exactly, L = min(order, k)"),
            );
        }
        Err(err) => out.push(Check::failed("mean_curvature_order", &err)),
    }
    if cancelled == k && k % 2 == 0 {
        let zero = ans.log_coefficient.iter().all(|p| p.is_zero());
        out.push(Check::flag("log_coefficient_vanishes", zero).note("even k: no log term at the free order"));
    }
    let mut coeffs = BTreeMap::new();
    for &l in &ans.determined {
        coeffs.insert(format!("u{l}"), poly_strings(&ans.coefficient(l)));
    }
    out.data.insert("determined".into(), json!(ans.determined));
    out.data.insert("coefficients".into(), json!(coeffs));
    out.data.insert("free_slot".into(), poly_strings(&ans.free_slot));
    out.data.insert("log_coefficient".into(), poly_strings(&ans.log_coefficient));
    out.data.insert("obstruction".into(), poly_strings(&ans.obstruction));
    Ok(())
}

fn term_json(t: &RigidityTerm) -> Value {
    json!({
        "name": t.name,
        "c": t.c,
        "straightened": num(t.straightened),
        "direct": num(t.direct),
        "coefficient": num(t.coefficient),
        "reduced": num(t.reduced),
        "residual": num(t.residual),
    })
}

fn term_check(t: &RigidityTerm, tol: f64) -> Check {
    let rel = if t.reduced == 0.0 { t.residual } else { t.residual / t.reduced.abs() };
    Check::bounded(format!("rigidity[{}]", t.name), rel, tol)
        .value("straightened", num(t.straightened))
        .value("reduced", num(t.reduced))
        .note("relative to |reduced|, absolute when it vanishes")
}

fn rigidity(config: &ScenarioConfig, out: &mut Outcome) -> Result<(), ConfigError> {
    let e = entry(config)?;
    describe(&e, out);
    let tol = &config.tolerances;
    let k = e.immersion.source_dim();
    let ells = config.rigidity.as_ref().and_then(|r| r.ells.clone()).unwrap_or_else(|| (1..=k / 2).collect());
    let defaults = RigidityOptions::default();
    let opts = RigidityOptions {
        grid: config.grid.unwrap_or(defaults.grid),
        cutoff: cutoff_options(config, defaults.cutoff),
        samples: config.samples.unwrap_or(defaults.samples),
        seed: config.seed,
        ..defaults
    };
    let r = match rigidity_functionals(&e, &ells, &opts) {
        Ok(r) => r,
        Err(err) => {
            out.push(Check::failed("rigidity", &err));
            return Ok(());
        }
    };
    for t in r.terms.iter().chain(r.l2_square.iter()) {
        out.push(term_check(t, tol.rigidity));
    }
    out.push(Check::bounded("einstein_identity", r.einstein_identity_residual, tol.identity).note("|Ē|² = |L²|² − |L|⁴/k"));
    if let Some(w) = r.weyl_identity_residual {
        out.push(Check::bounded("weyl_identity", w, tol.identity));
    }
    if r.lambda < 0.0 {
        for g in &r.gaps {
            let scale = r.terms.iter().map(|t| t.reduced.abs()).fold(1.0, f64::max);
            out.push(Check::flag(format!("gap[{}]", g.name), g.value >= -tol.rigidity * scale).value("value", num(g.value)).note("nonnegative on hyperbolic targets"));
        }
    }
    out.data.insert(
        "rigidity".into(),
        json!({
            "k": r.k,
            "n": r.n,
            "lambda": num(r.lambda),
            "renormalized": r.renormalized,
            "terms": r.terms.iter().map(term_json).collect::<Vec<_>>(),
            "l2_square": r.l2_square.as_ref().map_or(Value::Null, term_json),
            "gaps": r.gaps.iter().map(|g| json!({"name": g.name, "value": num(g.value)})).collect::<Vec<_>>(),
            "einstein_identity_residual": num(r.einstein_identity_residual),
            "weyl_identity_residual": r.weyl_identity_residual.map_or(Value::Null, num),
        }),
    );
    Ok(())
}
