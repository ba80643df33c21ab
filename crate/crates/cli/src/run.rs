use serde::Serialize;
use serde_json::{json, Map, Value};

use plancherel_core::engine::{enumerate_tree, EngineOptions};
use plancherel_core::gln::{
    build_gln_density, fd1_from_integral, gln_report, numerator_degree_bound, poincare, LeviSpec, WeylFamily,
};
use plancherel_core::integrand::{Integrand, Monomial};
use plancherel_core::oracle::{compare, CompareReport};
use plancherel_core::qfield::{divides_power_of, unity_witness};
use plancherel_core::rank2::{
    catalog, check_entry_poles, density, has_integral_form, mh_displayed, ms_displayed, DensityEntry, Group,
    LeviLabel, Trace,
};
use plancherel_core::RatFunc;

use crate::{Failure, RunConfig, Target};

/// Largest number of quadrature samples the oracle will take for one value of q.
const SAMPLE_BUDGET: u128 = 1 << 26;

/// One line of the CSV table.
#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub group: String,
    #[serde(rename = "partition/levi")]
    pub label: String,
    pub value: String,
    pub denominator: String,
    pub divides_k: Option<u32>,
    pub regular_roots: String,
    pub singular_roots: String,
    pub oracle_max_relerr: Option<f64>,
}

pub struct Outcome {
    pub json: Value,
    pub rows: Vec<Row>,
    pub ok: bool,
}

fn engine_options(cfg: &RunConfig) -> EngineOptions {
    EngineOptions {
        shortcut: !cfg.disable_shortcut,
        reorder: cfg.reorder,
        ..EngineOptions::default()
    }
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("report types serialize")
}

fn obj(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("reports are objects"),
    }
}

fn oracle_for(cfg: &RunConfig, exact: &RatFunc, f: &Integrand) -> Result<Option<CompareReport>, Failure> {
    if cfg.oracle_q.is_empty() {
        return Ok(None);
    }
    let k = f.active_vars().len();
    let dims = if f.homogeneous_degree() == Some(-(k as i64)) { k.saturating_sub(1) } else { k };
    let samples = (cfg.grid as u128).checked_pow(dims as u32).unwrap_or(u128::MAX);
    if samples > SAMPLE_BUDGET {
        return Err(Failure::Config(format!(
            "oracle needs {}^{} samples per q; lower --grid or pick a smaller target",
            cfg.grid, dims
        )));
    }
    Ok(Some(compare(exact, f, &cfg.oracle_q, cfg.tol, cfg.grid)?))
}

// GL_n

struct GlnResult {
    json: Map<String, Value>,
    row: Row,
    failures: Vec<String>,
}

fn gln_one(cfg: &RunConfig, levi: &LeviSpec, run_engine: bool) -> Result<GlnResult, Failure> {
    let rep = gln_report(levi, run_engine.then(|| engine_options(cfg)))?;
    let mut failures = Vec::new();
    let label = levi.label();
    let closed = plancherel_core::gln::closed_form_value(levi);
    let f = fd1_from_integral(levi, cfg.rank, &closed);
    let mut m = obj(to_value(&rep));
    m.insert("rank".into(), json!(cfg.rank));
    m.insert("fd1".into(), json!(f.to_string()));
    if rep.agreement == Some(false) {
        failures.push(format!("{}: closed form {} differs from engine", label, rep.closed_form));
    }
    match rep.divides.k {
        Some(k) if rep.divides.ok && k <= levi.n() => {}
        _ => failures.push(format!("{}: denominator does not divide P^k with k <= n", label)),
    }
    if rep.numerator_q_degree > numerator_degree_bound(levi.n()) {
        failures.push(format!("{}: numerator degree {} above bound", label, rep.numerator_q_degree));
    }
    let (_, density) = build_gln_density(levi)?;
    let mut relerr = None;
    if !cfg.oracle_q.is_empty() {
        let exact = match &rep.engine_value {
            Some(_) => plancherel_core::gln::engine_value(levi, engine_options(cfg))?,
            None => closed.clone(),
        };
        if let Some(o) = oracle_for(cfg, &exact, &density)? {
            if !o.pass {
                failures.push(format!("{}: oracle rel err {:.3e} above {:.1e}", label, o.max_rel_err, o.tol));
            }
            relerr = Some(o.max_rel_err);
            m.insert("oracle".into(), to_value(&o));
        }
    }
    if cfg.trace_branches {
        m.insert("branches".into(), to_value(&enumerate_tree(&density)?));
    }
    let row = Row {
        group: "gln".into(),
        label,
        value: f.to_string(),
        denominator: f.denom().to_string(),
        divides_k: rep.divides.k,
        regular_roots: rep.regular_roots.join(";"),
        singular_roots: rep.singular_roots.join(";"),
        oracle_max_relerr: relerr,
    };
    Ok(GlnResult { json: m, row, failures })
}

// Sp4 and G2

fn weyl(group: Group) -> WeylFamily {
    group.weyl()
}

fn multipliers_json(d: &DensityEntry) -> Value {
    Value::Array(d.multipliers.iter().map(to_value).collect())
}

fn rank2_one(cfg: &RunConfig, levi: LeviLabel, e: i64) -> Result<GlnResult, Failure> {
    let d = density(levi)?;
    let group = levi.group();
    let p = poincare(weyl(group))?;
    let mut failures = Vec::new();
    let mut m = Map::new();
    m.insert("group".into(), json!(group.to_string()));
    m.insert("levi".into(), json!(levi.to_string()));
    m.insert("trace_exp".into(), json!(e));
    m.insert("prefactor".into(), json!(d.prefactor.to_string()));
    m.insert("multipliers".into(), multipliers_json(&d));
    m.insert("kernel".into(), json!(d.kernel.render()));
    let tag = format!("{} e={}", levi, e);

    // Sp4 closed forms are stated for the plain dz integral of kernel * z^e,
    // G2 values for the trace z^e against dz/z.
    let (exact, integrand) = match group {
        Group::Sp4 => (d.kernel_integral(e)?, d.kernel.with_monomial(&Monomial::from_exps(vec![e]))?),
        Group::G2 => (d.trace_integral(&Trace::monomial(e))?, d.measure_integrand(e)?),
    };
    let component = match d.component_integral(&Trace::monomial(e)) {
        Ok(c) => Some(c),
        Err(plancherel_core::Error::InvariantViolation(msg)) => {
            failures.push(format!("{}: {}", tag, msg));
            None
        }
        Err(other) => return Err(other.into()),
    };
    m.insert("component".into(), json!(component.as_ref().map(|c| c.to_string())));
    let divides = component.as_ref().map(|c| divides_power_of(c.denom(), &p));
    m.insert("divides".into(), to_value(&divides));

    match group {
        Group::Sp4 => {
            m.insert("kernel_integral".into(), json!(exact.to_string()));
            let displayed = if levi == LeviLabel::Mh { mh_displayed(e) } else { ms_displayed(e) };
            let diff = &exact - &displayed;
            let exact_match = diff.is_zero();
            let poly_diff = diff.is_laurent_poly();
            m.insert("displayed".into(), json!(displayed.to_string()));
            m.insert("matches_displayed".into(), json!(exact_match));
            m.insert("difference_is_laurent".into(), json!(poly_diff));
            let need_exact = levi == LeviLabel::Mh && e >= 0;
            if (need_exact && !exact_match) || !poly_diff {
                failures.push(format!("{}: engine {} vs displayed {}", tag, exact, displayed));
            }
        }
        Group::G2 => {
            let integral = has_integral_form(&exact);
            m.insert("trace_integral".into(), json!(exact.to_string()));
            m.insert("zeta_free".into(), json!(component.is_some()));
            m.insert("coefficients_integral".into(), json!(integral));
            if !integral {
                failures.push(format!("{}: non-integral coefficients", tag));
            }
            if divides.is_some_and(|dv| !dv.ok) {
                failures.push(format!("{}: denominator does not divide a power of P_G2", tag));
            }
        }
    }

    let mut relerr = None;
    if let Some(o) = oracle_for(cfg, &exact, &integrand)? {
        if !o.pass {
            failures.push(format!("{}: oracle rel err {:.3e} above {:.1e}", tag, o.max_rel_err, o.tol));
        }
        relerr = Some(o.max_rel_err);
        m.insert("oracle".into(), to_value(&o));
    }
    if cfg.trace_branches {
        m.insert("branches".into(), to_value(&enumerate_tree(&integrand)?));
    }
    let value = component.clone().unwrap_or(exact);
    let singular = unity_witness(value.denom()).labels();
    let row = Row {
        group: group.to_string(),
        label: format!("{} e={}", levi, e),
        value: value.to_string(),
        denominator: value.denom().to_string(),
        divides_k: divides.and_then(|d| d.k),
        regular_roots: String::new(),
        singular_roots: singular.join(";"),
        oracle_max_relerr: relerr,
    };
    Ok(GlnResult { json: m, row, failures })
}

// Formal-degree catalog

fn catalog_results() -> (Vec<Value>, Vec<Row>, Vec<String>) {
    let mut js = Vec::new();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for entry in catalog() {
        let c = check_entry_poles(entry);
        if !c.ok {
            failures.push(format!(
                "{}: {}",
                c.label,
                c.error.clone().unwrap_or_else(|| "denominator has non-cyclotomic factors".into())
            ));
        }
        let mut m = obj(to_value(&c));
        m.insert("group".into(), json!(entry.group));
        m.insert("source".into(), to_value(&entry.source));
        rows.push(Row {
            group: entry.group.clone(),
            label: c.label.clone(),
            value: c.value.clone().unwrap_or_default(),
            denominator: entry.value().map(|v| v.denom().to_string()).unwrap_or_default(),
            divides_k: c.divides_poincare.and_then(|d| d.k),
            regular_roots: String::new(),
            singular_roots: c.witness.as_ref().map(|w| w.labels().join(";")).unwrap_or_default(),
            oracle_max_relerr: None,
        });
        js.push(Value::Object(m));
    }
    (js, rows, failures)
}

// Commands

fn collect(cfg: &RunConfig, run_engine: bool) -> Result<(Vec<Value>, Vec<Row>, Vec<String>), Failure> {
    let mut js = Vec::new();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    match &cfg.target {
        Target::Gln(levis) => {
            for l in levis {
                let r = gln_one(cfg, l, run_engine)?;
                js.push(Value::Object(r.json));
                rows.push(r.row);
                failures.extend(r.failures);
            }
        }
        Target::Rank2(_, levis) => {
            for &l in levis {
                for &e in &cfg.trace_exps {
                    let r = rank2_one(cfg, l, e)?;
                    js.push(Value::Object(r.json));
                    rows.push(r.row);
                    failures.extend(r.failures);
                }
            }
        }
        Target::FormalDegrees => return Ok(catalog_results()),
    }
    Ok((js, rows, failures))
}

pub fn eval(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let (mut js, rows, _) = collect(cfg, true)?;
    let json = if js.len() == 1 { js.pop().unwrap() } else { Value::Array(js) };
    Ok(Outcome { json, rows, ok: true })
}

pub fn check(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let (js, rows, failures) = collect(cfg, true)?;
    let ok = failures.is_empty();
    let json = json!({ "ok": ok, "failures": failures, "results": js });
    Ok(Outcome { json, rows, ok })
}

pub fn report(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let (js, rows, _) = collect(cfg, false)?;
    let mut m = Map::new();
    m.insert("results".into(), Value::Array(js));
    if let Target::Gln(levis) = &cfg.target {
        let n = levis.iter().map(|l| l.n()).max().unwrap_or(0);
        let measured = levis
            .iter()
            .map(|l| plancherel_core::gln::numerator_q_degree(&plancherel_core::gln::fd1(l, 1).unwrap()))
            .max();
        m.insert(
            "numerator_degree".into(),
            json!({ "n": n, "measured_max": measured, "bound": numerator_degree_bound(n) }),
        );
    }
    Ok(Outcome { json: Value::Object(m), rows, ok: true })
}

pub fn oracle(cfg: &RunConfig) -> Result<Outcome, Failure> {
    if matches!(cfg.target, Target::FormalDegrees) {
        return Err(Failure::Config("the oracle needs an integral target".into()));
    }
    let (js, rows, failures) = collect(cfg, true)?;
    let oracle_failures: Vec<String> = failures.into_iter().filter(|f| f.contains("oracle")).collect();
    let ok = oracle_failures.is_empty();
    let results: Vec<Value> = js
        .iter()
        .map(|r| {
            let keep = ["partition", "group", "levi", "trace_exp", "oracle"];
            let m: Map<String, Value> = r
                .as_object()
                .unwrap()
                .iter()
                .filter(|(k, _)| keep.contains(&k.as_str()))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect();
            Value::Object(m)
        })
        .collect();
    let json = json!({ "ok": ok, "failures": oracle_failures, "results": results });
    Ok(Outcome { json, rows, ok })
}
