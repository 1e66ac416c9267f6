use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path as FsPath;

use serde::Serialize;
use serde_json::{json, Value};

use ordseq::causal::estimate::{estimate_family, Estimate, EstimateConfig, EstimationReport};
use ordseq::causal::family::{detect_families, extract_episodes, FamilySpec};
use ordseq::causal::log::{ingest_log_with, write_log, EventLog, IngestOptions};
use ordseq::causal::model::ModelSpec;
use ordseq::causal::simulate::simulate_log;
use ordseq::causal::support::log_support_report;
use ordseq::integrability::{
    cube_defect, enumerate_cubes, is_cube_consistent, reconstruct_with_gauge, reference_tree,
    zero_gauge_reconstruct, CubeConsistency, GaugeSystem,
};
use ordseq::io;
use ordseq::lattice::{enumerate_diamonds, LatticeSlice};
use ordseq::path::Path;
use ordseq::planner::{
    dp_plan_with, exhaustive_plan_with, family_plan, policy_compare_resplits, PlanMode, PlanResult, PolicyTable,
    DEFAULT_TRAIN_FRACTION,
};
use ordseq::poset::{parse_poset, Poset};
use ordseq::valuation::{
    check_path_independence, curvature_field, endpoint_potential, mobius_invert, DiamondField, PathIndependence,
};

use crate::config::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Core(ordseq::Error),
}

impl CliError {
    /// 3 for a violated mathematical precondition, 2 for bad input.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_precondition() => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) => f.write_str(msg),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<ordseq::Error> for CliError {
    fn from(e: ordseq::Error) -> Self {
        CliError::Core(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &FsPath) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn write(cli: &Cli, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(&cli.out)
        .and_then(|_| fs::write(cli.out.join(name), contents))
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", cli.out.join(name).display())))
}

fn require<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T> {
    value
        .as_ref()
        .ok_or_else(|| CliError::Input(format!("this command needs --{flag}")))
}

#[derive(Serialize)]
struct Report<'a> {
    command: &'static str,
    version: &'static str,
    seed: u64,
    config: &'a Cli,
    result: Value,
}

fn emit(cli: &Cli, command: &'static str, result: Value) -> Result<()> {
    let report = Report {
        command,
        version: env!("CARGO_PKG_VERSION"),
        seed: cli.seed,
        config: cli,
        result,
    };
    let text = serde_json::to_string_pretty(&report).expect("reports serialize") + "\n";
    write(cli, &format!("{command}.json"), &text)?;
    print!("{text}");
    Ok(())
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Lattice => lattice(cli),
        Command::Check { field, kappa } => check(cli, field.as_deref(), kappa.as_deref()),
        Command::Reconstruct { kappa, alpha } => reconstruct(cli, kappa, alpha.as_deref()),
        Command::Estimate {
            families,
            min_support,
            resamples,
            accept_activity,
        } => estimate(cli, families, *min_support, *resamples, accept_activity),
        Command::Plan {
            field,
            endpoint,
            families,
            min_support,
            accept_activity,
        } => plan(cli, field.as_deref(), endpoint.as_deref(), families, *min_support, accept_activity),
        Command::Policy {
            families,
            min_support,
            resplits,
            lambdas,
            accept_activity,
        } => policy(cli, families, *min_support, *resplits, lambdas, accept_activity),
        Command::Simulate { model, episodes } => simulate(cli, model.as_deref(), *episodes),
    }
}

fn load_slice(cli: &Cli) -> Result<(Poset, LatticeSlice)> {
    let p = parse_poset(&read(require(&cli.poset, "poset")?)?)?;
    let base = p.parse_ideal(&cli.base)?;
    let depth = cli.depth.unwrap_or(p.len() - base.len());
    let l = LatticeSlice::build(&p, base, depth, cli.caps.node)?;
    Ok((p, l))
}

fn lattice(cli: &Cli) -> Result<()> {
    let (p, l) = load_slice(cli)?;
    write(cli, "nodes.csv", &io::write_nodes(&l)?)?;
    write(cli, "edges.csv", &io::write_edges(&l)?)?;
    emit(
        cli,
        "lattice",
        json!({
            "elements": p.len(),
            "base": p.render(l.base()),
            "depth": l.depth(),
            "nodes": l.nodes().len(),
            "edges": l.edges().len(),
            "diamonds": enumerate_diamonds(&l).len(),
            "cubes": enumerate_cubes(&l).len(),
            "full_interval": l.is_full_interval(),
        }),
    )
}

fn cube_verdict(kappa: &DiamondField, l: &LatticeSlice, tol: f64) -> Result<Value> {
    let p = l.poset();
    Ok(match is_cube_consistent(kappa, l, tol)? {
        CubeConsistency::Consistent => json!({ "consistent": true }),
        CubeConsistency::Witness { cube, defect } => json!({
            "consistent": false,
            "witness": {
                "cube": format!("{}; {}, {}, {}", p.render(cube.base), p.id(cube.u), p.id(cube.v), p.id(cube.w)),
                "defect": defect,
            },
        }),
    })
}

fn check(cli: &Cli, field: Option<&FsPath>, kappa: Option<&FsPath>) -> Result<()> {
    if field.is_none() && kappa.is_none() {
        return Err(CliError::Input("check needs --field or --kappa".into()));
    }
    let (_, l) = load_slice(cli)?;
    let mut result = serde_json::Map::new();
    if let Some(path) = field {
        let g = io::read_edge_field(&read(path)?, &l)?;
        let verdict = match check_path_independence(&g, &l, cli.tol)? {
            PathIndependence::Independent => json!({ "independent": true }),
            PathIndependence::Witness { diamond, kappa } => json!({
                "independent": false,
                "witness": { "diamond": l.render_diamond(&diamond), "kappa": kappa },
            }),
        };
        let k = curvature_field(&g, &l)?;
        let mut bianchi: f64 = 0.0;
        for c in enumerate_cubes(&l) {
            bianchi = bianchi.max(cube_defect(&k, &c)?.abs());
        }
        let alpha = GaugeSystem::from_edge_field(&g, &l, &reference_tree(&l)?)?;
        write(cli, "kappa.csv", &io::write_diamond_field(&k, &l)?)?;
        write(cli, "alpha.csv", &io::write_gauge(&alpha, &l)?)?;
        if verdict["independent"] == json!(true) {
            let phi = endpoint_potential(&g, &l, cli.tol)?;
            write(cli, "potential.csv", &io::write_node_field(&phi, &l, "value")?)?;
            if l.is_full_interval() {
                let theta = mobius_invert(&phi, &l)?;
                write(cli, "theta.csv", &io::write_node_field(&theta, &l, "value")?)?;
            }
        }
        result.insert("path_independence".into(), verdict);
        result.insert("bianchi_max_defect".into(), json!(bianchi));
        result.insert("curvature_cube_consistency".into(), cube_verdict(&k, &l, cli.tol)?);
    }
    if let Some(path) = kappa {
        let k = io::read_diamond_field(&read(path)?, &l)?;
        result.insert("cube_consistency".into(), cube_verdict(&k, &l, cli.tol)?);
    }
    emit(cli, "check", Value::Object(result))
}

fn reconstruct(cli: &Cli, kappa: &FsPath, alpha: Option<&FsPath>) -> Result<()> {
    let (_, l) = load_slice(cli)?;
    let k = io::read_diamond_field(&read(kappa)?, &l)?;
    let g = match alpha {
        Some(path) => {
            let a = io::read_gauge(&read(path)?, &l)?;
            reconstruct_with_gauge(&k, &a, &l, cli.tol)?
        }
        None => zero_gauge_reconstruct(&k, &l, cli.tol)?,
    };
    write(cli, "field.csv", &io::write_edge_field(&g, &l)?)?;
    emit(
        cli,
        "reconstruct",
        json!({ "edges": g.len(), "gauge": if alpha.is_some() { "given" } else { "zero" } }),
    )
}

fn load_log(cli: &Cli, accept: &Option<String>) -> Result<EventLog> {
    let text = read(require(&cli.log, "log")?)?;
    let opts = IngestOptions {
        accept_activity: accept.clone(),
    };
    Ok(ingest_log_with(&text, &opts)?)
}

fn parse_family(text: &str, lambda: f64) -> Result<FamilySpec> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    match parts[..] {
        [u, w, v] => Ok(FamilySpec::new(u, w, v, lambda)?),
        _ => Err(CliError::Input(format!("family must be `u,w,v`, got `{text}`"))),
    }
}

fn families(log: &EventLog, given: &[String], min_support: usize, lambda: f64) -> Result<Vec<FamilySpec>> {
    if given.is_empty() {
        Ok(detect_families(log, min_support, lambda)?)
    } else {
        given.iter().map(|f| parse_family(f, lambda)).collect()
    }
}

fn fmt_estimate(e: Estimate<f64>) -> String {
    e.value().map_or_else(|| "NA".to_string(), |v| format!("{v:.4}"))
}

fn estimate(
    cli: &Cli,
    given: &[String],
    min_support: usize,
    resamples: usize,
    accept: &Option<String>,
) -> Result<()> {
    let log = load_log(cli, accept)?;
    let fams = families(&log, given, min_support, cli.lambda())?;
    let cfg = EstimateConfig {
        resamples,
        seed: cli.seed,
        ..EstimateConfig::default()
    };
    let mut table = String::from("ID,target,pair,n_empty,n_u,n_w,n_uw,n_u_then_w,n_w_then_u,kappa,ci_low,ci_high\n");
    let mut entries = Vec::new();
    for (k, f) in fams.iter().enumerate() {
        let id = format!("F{}", k + 1);
        let r = estimate_family(&extract_episodes(&log, f), f, &cfg);
        let (lo, hi) = match r.ci {
            Estimate::Value((lo, hi)) => (format!("{lo:.4}"), format!("{hi:.4}")),
            _ => ("NA".into(), "NA".into()),
        };
        table.push_str(&format!(
            "{id},{},({};{}),{},{},{},{},{},{},{},{lo},{hi}\n",
            f.v,
            f.u,
            f.w,
            r.classes.empty.count,
            r.classes.u.count,
            r.classes.w.count,
            r.classes.uw.count,
            r.orders.u_then_w.count,
            r.orders.w_then_u.count,
            fmt_estimate(r.kappa),
        ));
        entries.push(json!({ "id": id, "estimate": to_value(&r), "support": to_value(&log_support_report(&r)) }));
    }
    write(cli, "table1.csv", &table)?;
    emit(
        cli,
        "estimate",
        json!({
            "cases": log.cases.len(),
            "outcome_column_missing": log.outcome_missing,
            "ci_method": "stratified percentile bootstrap, widened to contain the point estimate",
            "families": entries,
        }),
    )
}

fn plan_json(p: &Poset, r: &PlanResult) -> Value {
    json!({ "path": r.best_path.render(p), "value": r.best_value })
}

fn plan(
    cli: &Cli,
    field: Option<&FsPath>,
    endpoint: Option<&str>,
    given: &[String],
    min_support: usize,
    accept: &Option<String>,
) -> Result<()> {
    let mut table = String::from("ID,dp_argmax,exhaustive_argmax,equal,best_value\n");
    let result = if let Some(path) = field {
        let (p, l) = load_slice(cli)?;
        let g = io::read_edge_field(&read(path)?, &l)?;
        let mode = match endpoint {
            Some(e) => PlanMode::Endpoint(p.parse_ideal(e)?),
            None => PlanMode::Stop,
        };
        let dp = dp_plan_with(&g, &l, mode)?;
        let ex = exhaustive_plan_with(&g, &l, mode, cli.caps.exhaustive)?;
        let equal = dp.best_path == ex.best_path && dp.best_value == ex.best_value;
        let render = |x: &Path| x.render(&p);
        table.push_str(&format!(
            "field,{},{},{equal},{}\n",
            render(&dp.best_path),
            render(&ex.best_path),
            dp.best_value
        ));
        let values: Vec<Value> = dp
            .value_table
            .iter()
            .map(|(&i, &u)| json!({ "ideal": p.render(i), "value": u }))
            .collect();
        json!({
            "mode": if endpoint.is_some() { "endpoint" } else { "stop" },
            "dp": plan_json(&p, &dp),
            "exhaustive": plan_json(&p, &ex),
            "equal": equal,
            "value_table": values,
        })
    } else {
        let log = load_log(cli, accept)?;
        let fams = families(&log, given, min_support, cli.lambda())?;
        let cfg = EstimateConfig {
            seed: cli.seed,
            ..EstimateConfig::default()
        };
        let mut rows = Vec::new();
        for (k, f) in fams.iter().enumerate() {
            let id = format!("F{}", k + 1);
            let r: EstimationReport = estimate_family(&extract_episodes(&log, f), f, &cfg);
            match family_plan(&r, cli.caps.exhaustive)? {
                Some(fp) => {
                    table.push_str(&format!(
                        "{id},{},{},{},{:.4}\n",
                        fp.dp_argmax, fp.exhaustive_argmax, fp.equal, fp.best_value
                    ));
                    rows.push(json!({ "id": id, "plan": to_value(&fp) }));
                }
                None => {
                    table.push_str(&format!("{id},NA,NA,NA,NA\n"));
                    rows.push(json!({ "id": id, "family": to_value(f), "plan": Value::Null }));
                }
            }
        }
        json!({ "families": rows })
    };
    write(cli, "table2.csv", &table)?;
    emit(cli, "plan", result)
}

fn seq_row(t: &PolicyTable) -> (String, Estimate<f64>, Estimate<f64>, Estimate<f64>, Option<f64>) {
    let r = t.row("sequence_sensitive").expect("every table has the sequence-sensitive row");
    (
        r.selected_path.clone(),
        r.heldout_value,
        r.delta_ref,
        r.delta_greedy,
        t.win_rate.as_ref().map(|w| w.strict),
    )
}

fn policy(
    cli: &Cli,
    given: &[String],
    min_support: usize,
    resplits: usize,
    lambdas: &[f64],
    accept: &Option<String>,
) -> Result<()> {
    let log = load_log(cli, accept)?;
    let fams = families(&log, given, min_support, cli.lambda())?;
    let mut sweep: Vec<f64> = lambdas.to_vec();
    if !sweep.contains(&cli.lambda()) {
        sweep.push(cli.lambda());
    }
    let mut table3 = String::from("ID,selected_path,heldout_value,delta_ref,delta_greedy,win_rate\n");
    let mut sweep_csv = String::from("ID,lambda,selected_path,heldout_value,delta_ref,delta_greedy,win_rate\n");
    let mut entries = Vec::new();
    let mut seen = BTreeSet::new();
    for (k, f) in fams.iter().enumerate() {
        let id = format!("F{}", k + 1);
        let mut tables = Vec::new();
        for &lambda in &sweep {
            if !seen.insert((k, lambda.to_bits())) {
                continue;
            }
            let fam = f.with_lambda(lambda)?;
            let t = policy_compare_resplits(&extract_episodes(&log, &fam), &fam, cli.seed, resplits, DEFAULT_TRAIN_FRACTION);
            let (path, value, dref, dgreedy, win) = seq_row(&t);
            let win = win.map_or_else(|| "NA".to_string(), |w| format!("{w:.2}"));
            let cells = format!(
                "{path},{},{},{},{win}",
                fmt_estimate(value),
                fmt_estimate(dref),
                fmt_estimate(dgreedy)
            );
            if lambdas.contains(&lambda) {
                sweep_csv.push_str(&format!("{id},{lambda},{cells}\n"));
            }
            if lambda == cli.lambda() {
                table3.push_str(&format!("{id},{cells}\n"));
            }
            tables.push(json!({ "lambda": lambda, "table": to_value(&t) }));
        }
        entries.push(json!({ "id": id, "family": to_value(f), "tables": tables }));
    }
    write(cli, "table3.csv", &table3)?;
    write(cli, "lambda_sweep.csv", &sweep_csv)?;
    emit(
        cli,
        "policy",
        json!({
            "protocol": {
                "split": "by case",
                "train_fraction": DEFAULT_TRAIN_FRACTION,
                "resplits": resplits,
                "resplit_seeds": "seed + 1 ..= seed + resplits",
                "win_rate": "strict: sequence-sensitive held-out value > reference-path; non_strict uses >=",
            },
            "families": entries,
        }),
    )
}

fn simulate(cli: &Cli, model: Option<&FsPath>, episodes: usize) -> Result<()> {
    let spec: ModelSpec = match model {
        Some(path) => serde_json::from_str(&read(path)?)
            .map_err(|e| CliError::Input(format!("bad model file {}: {e}", path.display())))?,
        None => ModelSpec::family_preset(),
    };
    let mut m = spec.build()?;
    if let Some(lambda) = cli.lambda {
        m.set_lambda(lambda)?;
    }
    let log = simulate_log(&m, episodes, cli.seed)?;
    write(cli, "log.csv", &write_log(&log)?)?;
    let p = m.poset();
    let base = m.base();
    let mut truth = Vec::new();
    if m.horizon() >= 2 {
        for d in enumerate_diamonds(m.slice()).into_iter().filter(|d| d.base == base) {
            let vu = m.marginal_true_value(&Path::new(base, vec![d.v, d.u]))?;
            let uv = m.marginal_true_value(&Path::new(base, vec![d.u, d.v]))?;
            let per_context: Vec<f64> = (0..m.contexts().len())
                .map(|x| m.local_order_effect(x, d.u, d.v))
                .collect::<ordseq::Result<_>>()?;
            truth.push(json!({
                "u": p.id(d.u),
                "w": p.id(d.v),
                "target": m.target_activity(),
                "kappa": vu - uv,
                "kappa_by_context": per_context,
            }));
        }
    }
    emit(
        cli,
        "simulate",
        json!({
            "episodes": episodes,
            "lambda": m.lambda(),
            "model": to_value(&spec),
            "order_effects": truth,
            "base": p.render(base),
        }),
    )
}
