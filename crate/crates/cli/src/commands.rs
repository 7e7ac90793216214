use std::sync::Arc;

use polyga::algebra::{q_tensor, verify_structure};
use polyga::fields::{
    cr_sweep, derivative, line_integral, pair_combine, pair_product, path_independence_residual, quotient_pair,
    DerivativeForm,
};
use polyga::geodesics::{
    cross_check_forms, integrate_extremal, integrate_geodesic, momenta_from_velocity, relative_constraint,
    second_order_start, ExtremalState, GeodesicState,
};
use polyga::grid::sweep;
use polyga::h4::{
    analytic_reduction, compatibility_residual, default_grid, family_residual, metric_connection, momenta, Convention,
    LambdaModel, Orientation,
};
use polyga::tensor::{self, max_abs_diff};
use polyga::{ConnectionField, GAPair, Grid, StructureConstants};
use serde_json::{json, Value};

use crate::config::{
    build_metric, build_pair, build_path, outer_function, ConfigError, ConfigResult, Loaded, OuterSpec, PairOp, Seeder,
};
use crate::report::{float, floats, matrix, Checks, Table};
use crate::Command;

pub struct Ctx {
    pub loaded: Loaded,
    pub tol: Option<f64>,
    pub seed: u64,
}

pub struct Output {
    pub results: Value,
    pub table: Option<Table>,
}

const CR_TOL: f64 = 1e-7;
const PATH_TOL: f64 = 1e-8;
const FORMS_TOL: f64 = 1e-5;

fn missing(what: &str) -> ConfigError {
    ConfigError::Invalid(format!("this command needs `{what}`"))
}

fn default_cube(n: usize) -> impl FnOnce() -> Grid {
    move || Grid::cube(n, -0.5, 0.5, 3)
}

fn form_name(f: DerivativeForm) -> &'static str {
    match f {
        DerivativeForm::UnitDirection => "unit-direction",
        DerivativeForm::Invariant => "invariant",
    }
}

pub fn run(command: Command, ctx: &Ctx, checks: &mut Checks) -> ConfigResult<Output> {
    match command {
        Command::AlgebraCheck => algebra_check(ctx, checks),
        Command::CrResidual => cr_residual(ctx, checks),
        Command::PairOps => pair_ops(ctx, checks),
        Command::LineIntegral => line_integrals(ctx, checks),
        Command::Geodesic => geodesic(ctx, checks),
        Command::Extremal => extremal(ctx, checks),
        Command::FamilyVerify => family_verify(ctx, checks),
    }
}

fn json_only(results: Value) -> ConfigResult<Output> {
    Ok(Output { results, table: None })
}

fn algebra_check(ctx: &Ctx, checks: &mut Checks) -> ConfigResult<Output> {
    let s = ctx.loaded.algebra()?;
    let tol = ctx.tol.unwrap_or_else(|| s.default_axiom_tol());
    let r = verify_structure(&s, tol);
    checks.check("commutativity", r.commutativity, tol);
    checks.check("associativity", r.associativity, tol);
    match r.unit {
        Some(u) => {
            checks.check("unit", u, tol);
        }
        None => checks.domain("unit", "algebra has no unit element"),
    }
    let q = q_tensor(&s, 1e-12);
    json_only(json!({
        "algebra": s.tag().as_str(),
        "n": s.n(),
        "unit": s.unit().map_or(Value::Null, floats),
        "commutativity": float(r.commutativity),
        "associativity": float(r.associativity),
        "unit_residual": r.unit.map_or(Value::Null, float),
        "tol": float(tol),
        "q": matrix(&q.q),
        "q_det": float(q.det),
        "q_invertible": q.q_inv.is_some(),
        "derivative_form": DerivativeForm::natural(&s).map_or(Value::Null, |f| Value::from(form_name(f))),
    }))
}

fn pairs(ctx: &Ctx, s: &Arc<StructureConstants>, want: Option<usize>) -> ConfigResult<Vec<GAPair>> {
    let specs = &ctx.loaded.config.pairs;
    if specs.is_empty() {
        return Err(missing("pairs"));
    }
    if let Some(k) = want {
        if specs.len() != k {
            return Err(ConfigError::Invalid(format!("expected {k} pairs, found {}", specs.len())));
        }
    }
    let mut seeder = Seeder::new(ctx.seed);
    specs.iter().map(|p| build_pair(p, s, &mut seeder)).collect()
}

fn sweep_result(item: &str, pair: &GAPair, grid: &Grid, ctx: &Ctx, checks: &mut Checks) -> ConfigResult<Value> {
    let cfg = ctx.loaded.diff()?;
    let tol = ctx.tol.unwrap_or(CR_TOL);
    Ok(match cr_sweep(pair, grid, &cfg) {
        Ok(sw) => {
            checks.check(item, sw.max, tol);
            json!({"item": item, "max_residual": float(sw.max), "mean_residual": float(sw.mean), "points": grid.len()})
        }
        Err(e) => {
            checks.domain(item, &e);
            json!({"item": item, "error": e.to_string()})
        }
    })
}

fn cr_residual(ctx: &Ctx, checks: &mut Checks) -> ConfigResult<Output> {
    let s = ctx.loaded.algebra()?;
    let grid = ctx.loaded.grid(s.n(), default_cube(s.n()))?;
    let pairs = pairs(ctx, &s, None)?;
    let items = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| sweep_result(&format!("pair {}", i + 1), p, &grid, ctx, checks))
        .collect::<ConfigResult<Vec<_>>>()?;
    json_only(json!({
        "algebra": s.tag().as_str(),
        "derivative_form": form_name(DerivativeForm::natural(&s)?),
        "pairs": items,
    }))
}

fn pair_ops(ctx: &Ctx, checks: &mut Checks) -> ConfigResult<Output> {
    let s = ctx.loaded.algebra()?;
    let cfg = ctx.loaded.diff()?;
    let grid = ctx.loaded.grid(s.n(), default_cube(s.n()))?;
    let tol = ctx.tol.unwrap_or(CR_TOL);
    let ps = pairs(ctx, &s, Some(2))?;
    let (p1, p2) = (&ps[0], &ps[1]);
    let ops = ctx.loaded.config.ops.clone().unwrap_or_else(|| PairOp::ALL.to_vec());
    let [alpha, beta] = ctx.loaded.config.combine.unwrap_or([1.0, 1.0]);
    let outer_spec = ctx.loaded.config.outer.clone().unwrap_or(OuterSpec::Power { exponent: 2 });
    let outer = outer_function(&outer_spec, s.n())?;
    let form = DerivativeForm::natural(&s)?;

    let mut items = Vec::new();
    for op in ops {
        let built = match op {
            PairOp::Sum => pair_combine(alpha, p1, beta, p2),
            PairOp::Product => pair_product(p1, p2),
            PairOp::Quotient => quotient_pair(p1, p2),
            PairOp::Compose => polyga::fields::compose_pair(outer.clone(), p1),
        };
        match built {
            Ok(pair) => items.push(sweep_result(op.name(), &pair, &grid, ctx, checks)?),
            Err(e) => {
                checks.domain(op.name(), &e);
                items.push(json!({"item": op.name(), "error": e.to_string()}));
            }
        }
        if op == PairOp::Product {
            let rule = pair_product(p1, p2).and_then(|prod| {
                sweep(&grid, |x| {
                    let d = derivative(&prod, x, &cfg, form)?;
                    let d1 = derivative(p1, x, &cfg, form)?;
                    let d2 = derivative(p2, x, &cfg, form)?;
                    let want: Vec<f64> =
                        s.mul(&p1.f.eval(x), &d2).iter().zip(s.mul(&d1, &p2.f.eval(x))).map(|(a, b)| a + b).collect();
                    Ok(polyga::grid::Norms::of(&[max_abs_diff(&d, &want)]))
                })
            });
            match rule {
                Ok(sw) => {
                    checks.check("product-rule", sw.max, tol);
                    items.push(json!({"item": "product-rule", "max_residual": float(sw.max), "points": grid.len()}));
                }
                Err(e) => {
                    checks.domain("product-rule", &e);
                    items.push(json!({"item": "product-rule", "error": e.to_string()}));
                }
            }
        }
    }
    json_only(json!({
        "algebra": s.tag().as_str(),
        "combine": floats(&[alpha, beta]),
        "operations": items,
    }))
}

fn line_integrals(ctx: &Ctx, checks: &mut Checks) -> ConfigResult<Output> {
    let s = ctx.loaded.algebra()?;
    let cfg = ctx.loaded.diff()?;
    let tol = ctx.tol.unwrap_or(PATH_TOL);
    let pair = pairs(ctx, &s, Some(1))?.remove(0);
    let specs = &ctx.loaded.config.paths;
    if specs.len() < 2 {
        return Err(ConfigError::Invalid("line-integral needs at least two `paths`".into()));
    }
    let mut values = Vec::new();
    let mut items = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let path = build_path(spec, s.n())?;
        let item = format!("path {}", i + 1);
        match line_integral(&pair.f, &path, &s, &cfg) {
            Ok(v) => {
                items.push(json!({"item": item, "start": floats(&path.start()), "end": floats(&path.end()), "value": floats(v.coords())}));
                values.push(v.into_coords());
            }
            Err(e) => {
                checks.domain(&item, &e);
                items.push(json!({"item": item, "error": e.to_string()}));
            }
        }
    }
    let mut spread = 0.0_f64;
    for a in &values {
        for b in &values {
            spread = spread.max(max_abs_diff(a, b));
        }
    }
    if values.len() >= 2 {
        checks.check("path-independence", spread, tol);
    }
    let mut results = json!({"algebra": s.tag().as_str(), "paths": items, "spread": float(spread)});
    if ctx.loaded.config.grid.is_some() {
        let grid = ctx.loaded.grid(s.n(), default_cube(s.n()))?;
        match sweep(&grid, |x| Ok(polyga::grid::Norms::of(path_independence_residual(&pair, x, &cfg)?.as_slice()))) {
            Ok(sw) => results["path_independence_residual"] = float(sw.max),
            Err(e) => checks.domain("path_independence_residual", &e),
        }
    }
    json_only(results)
}

fn trajectory_header(n: usize) -> Vec<String> {
    let mut h = vec!["tau".to_string()];
    h.extend((1..=n).map(|i| format!("xi{i}")));
    h.extend((1..=n).map(|i| format!("p{i}")));
    h.push("constraint_residual".into());
    h
}

fn geodesic(ctx: &Ctx, checks: &mut Checks) -> ConfigResult<Output> {
    let cfg = ctx.loaded.integrator()?;
    let start = ctx.loaded.config.start.as_ref().ok_or_else(|| missing("start"))?;
    let metric = ctx.loaded.config.metric.as_ref().map(build_metric).transpose()?;
    let orientation = ctx.loaded.config.metric.as_ref().and_then(|m| m.orientation).unwrap_or(Orientation::Transposed);
    let n = start.xi.len();
    let (conn, s0) = match &metric {
        Some(m) => {
            if n != 4 {
                return Err(ConfigError::Invalid("metric runs are four-dimensional".into()));
            }
            let s0 = match (&start.v, &start.p, &start.direction) {
                (Some(v), _, _) => GeodesicState { x: start.xi.clone(), v: v.clone(), sigma: start.tau },
                (None, p, d) => {
                    let p = match (p, d) {
                        (Some(p), _) => p.clone(),
                        (None, Some(d)) => match momenta(d, &start.xi, m) {
                            Ok(p) => p,
                            Err(e) => {
                                checks.domain("start", &e);
                                return json_only(json!({"error": e.to_string()}));
                            }
                        },
                        (None, None) => return Err(missing("start.v, start.p or start.direction")),
                    };
                    let e = ExtremalState { xi: start.xi.clone(), p, tau: start.tau };
                    match second_order_start(m, &e) {
                        Ok(s) => s,
                        Err(err) => {
                            checks.domain("start", &err);
                            return json_only(json!({"error": err.to_string()}));
                        }
                    }
                }
            };
            (metric_connection(m, orientation), s0)
        }
        None => {
            let v = start.v.clone().ok_or_else(|| missing("start.v"))?;
            (ConnectionField::zero(n), GeodesicState { x: start.xi.clone(), v, sigma: start.tau })
        }
    };
    if s0.v.len() != n {
        return Err(ConfigError::Invalid(format!("start.v must have {n} components")));
    }
    let traj = match integrate_geodesic(&conn, &s0, &cfg) {
        Ok(t) => t,
        Err(e) => {
            checks.domain("integration", &e);
            return json_only(json!({"error": e.to_string()}));
        }
    };
    let mut table = Table { header: trajectory_header(n), rows: Vec::with_capacity(traj.len()) };
    let mut constraint = Vec::with_capacity(traj.len());
    for st in &traj {
        let (p, c) = match &metric {
            Some(m) => {
                let p = momenta_from_velocity(m, &st.x, &st.v);
                let c = relative_constraint(m, &st.x, &p).unwrap_or(f64::NAN);
                (p, c)
            }
            None => (vec![f64::NAN; n], f64::NAN),
        };
        constraint.push(c);
        let mut row = vec![st.sigma];
        row.extend(&st.x);
        row.extend(p);
        row.push(c);
        table.rows.push(row);
    }
    let last = traj.last().expect("at least one sample");
    let mut results = json!({
        "samples": traj.len(),
        "orientation": if metric.is_some() { Value::from(match orientation { Orientation::AsPrinted => "as-printed", Orientation::Transposed => "transposed" }) } else { Value::Null },
        "final": {"sigma": float(last.sigma), "x": floats(&last.x), "v": floats(&last.v)},
    });
    // On the constraint surface the second-order flow keeps it; report drift then.
    if constraint[0].abs() <= cfg.drift_tol {
        let drift = constraint.iter().fold(0.0_f64, |m, c| m.max((c - constraint[0]).abs()));
        checks.check("constraint-drift", drift, cfg.drift_tol);
        results["constraint_drift"] = float(drift);
    }
    Ok(Output { results, table: Some(table) })
}

fn extremal(ctx: &Ctx, checks: &mut Checks) -> ConfigResult<Output> {
    let cfg = ctx.loaded.integrator()?;
    let start = ctx.loaded.config.start.as_ref().ok_or_else(|| missing("start"))?;
    let m = build_metric(ctx.loaded.config.metric.as_ref().ok_or_else(|| missing("metric"))?)?;
    if start.xi.len() != 4 {
        return Err(ConfigError::Invalid("extremals are four-dimensional".into()));
    }
    let p = match (&start.p, &start.direction) {
        (Some(p), _) => p.clone(),
        (None, Some(d)) => match momenta(d, &start.xi, &m) {
            Ok(p) => p,
            Err(e) => {
                checks.domain("start", &e);
                return json_only(json!({"error": e.to_string()}));
            }
        },
        (None, None) => return Err(missing("start.p or start.direction")),
    };
    let e0 = ExtremalState { xi: start.xi.clone(), p, tau: start.tau };
    let traj = match integrate_extremal(&m, &e0, &cfg) {
        Ok(t) => t,
        Err(e) => {
            checks.domain("integration", &e);
            return json_only(json!({"error": e.to_string()}));
        }
    };
    let drift = traj.max_drift();
    checks.check("constraint-drift", drift, cfg.drift_tol);
    let table = Table {
        header: trajectory_header(4),
        rows: traj
            .states
            .iter()
            .zip(&traj.drift)
            .map(|(s, d)| {
                std::iter::once(s.tau).chain(s.xi.iter().copied()).chain(s.p.iter().copied()).chain([*d]).collect()
            })
            .collect(),
    };
    let last = traj.states.last().expect("at least one sample");
    let mut results = json!({
        "samples": traj.states.len(),
        "max_constraint_drift": float(drift),
        "final": {"tau": float(last.tau), "xi": floats(&last.xi), "p": floats(&last.p)},
    });
    if ctx.loaded.config.cross_check {
        match cross_check_forms(&m, &e0, &cfg) {
            Ok(d) => {
                checks.check("form-discrepancy", d, ctx.tol.unwrap_or(FORMS_TOL));
                results["form_discrepancy"] = float(d);
            }
            Err(e) => checks.domain("cross-check", &e),
        }
    }
    Ok(Output { results, table: Some(table) })
}

fn family_verify(ctx: &Ctx, checks: &mut Checks) -> ConfigResult<Output> {
    let spec = ctx.loaded.config.family.as_ref().ok_or_else(|| missing("family"))?;
    spec.validate()?;
    let grid = ctx.loaded.grid(4, default_grid)?;
    let mut cfg = ctx.loaded.diff()?;
    cfg.tol_residual = ctx.tol.unwrap_or(CR_TOL);
    let report = match family_residual(spec, &grid, &cfg) {
        Ok(r) => r,
        Err(e) => {
            checks.domain("family-residual", &e);
            return json_only(json!({"error": e.to_string()}));
        }
    };
    checks.check(
        format!("family-residual ({})", spec.convention.name()),
        report.residual(spec.convention),
        cfg.tol_residual,
    );
    let kappa = spec.kappa_field();
    let compat = grid.iter().map(|x| tensor::max_abs(&compatibility_residual(&kappa, &x))).fold(0.0_f64, f64::max);
    let mut results = json!({
        "as_printed": float(report.as_printed),
        "reciprocal": float(report.reciprocal),
        "convention": spec.convention.name(),
        "selected": report.selected.map_or(Value::Null, |c: Convention| Value::from(c.name())),
        "points": report.points,
        "compatibility_residual": float(compat),
    });
    if spec.lambda == LambdaModel::AnalyticReduction {
        match analytic_reduction(spec, &grid, &cfg) {
            Ok(r) => {
                checks.check("reconstructed-gamma", r.reconstructed_gamma, cfg.tol_residual);
                checks.check("analytic-residual", r.analytic_residual, cfg.tol_residual);
                results["reconstructed_gamma"] = float(r.reconstructed_gamma);
                results["analytic_residual"] = float(r.analytic_residual);
            }
            Err(e) => checks.domain("analytic-reduction", &e),
        }
    }
    json_only(results)
}
