use std::collections::BTreeMap;

use blume_capel::dynamics::{
    aggregate_contraction, coalescence_time, coupling_time, tv_upper_via_coupling, StationarySampler,
};
use blume_capel::equilibrium::{
    beta_c, classify, contraction_profile, k1, kc1, kc2, minimize_g, rate_function, CriticalKind, DEFAULT_TOL,
};
use blume_capel::exactchain::{default_t_max, ChainError, Starts};
use blume_capel::{
    fit_scaling, ExactChain, Glauber, ModelParams, RngStream, ScalingFit, ScalingModel, SpinConfiguration,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::cli::{
    required, BottleneckArgs, Command, CouplingContractionArgs, CriticalCurvesArgs, Extreme, Globals, MixCoupleArgs,
    MixExactArgs, Partner, PhaseDiagramArgs, ScalingFitArgs,
};
use crate::error::{CliError, Result};
use crate::grid::{parse_grid, parse_k, parse_sizes, parse_times, KSpec, Spec};
use crate::output::{num, Output};

const DEFAULT_CAP: u64 = 10_000_000;
const DEFAULT_REPLICAS: usize = 100;
const DEFAULT_SAMPLES: usize = 2000;

pub fn run(g: &Globals, cmd: &Command) -> Result<()> {
    match cmd {
        Command::PhaseDiagram(a) => phase_diagram(g, a),
        Command::CriticalCurves(a) => critical_curves(g, a),
        Command::MixExact(a) => mix_exact(g, a),
        Command::MixCouple(a) => mix_couple(g, a),
        Command::CouplingContraction(a) => coupling_contraction(g, a),
        Command::Bottleneck(a) => bottleneck(g, a),
        Command::ScalingFit(a) => scaling_fit(g, a),
    }
}

/// One `(beta, K)` point with the spec it was resolved from.
#[derive(Debug, Clone, Copy)]
struct Point {
    beta: f64,
    spec: KSpec,
    k: f64,
}

/// Cartesian product `betas x ks`, beta-major, with every K resolved at its beta.
fn resolve_points(betas: &[f64], ks: &[KSpec]) -> Result<Vec<Point>> {
    let mut out = Vec::with_capacity(betas.len() * ks.len());
    for &beta in betas {
        if !(beta > 0.0) {
            return Err(CliError::Config(format!("--beta: {beta} is not positive")));
        }
        for spec in ks {
            let k = spec.resolve(beta)?;
            if !(k > 0.0) {
                return Err(CliError::Config(format!("--k: {} resolves to {k} at beta = {beta}", spec.label())));
            }
            out.push(Point { beta, spec: *spec, k });
        }
    }
    Ok(out)
}

fn resolved_json(points: &[Point]) -> Value {
    Value::Array(
        points
            .iter()
            .map(|p| json!({ "beta": p.beta, "spec": p.spec.label(), "k": p.k }))
            .collect(),
    )
}

fn meta(g: &Globals, experiment: &str, params: &impl Serialize, resolved_k: Value) -> Value {
    json!({
        "tool": "bcmix",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": experiment,
        "seed": g.seed,
        "params": without_nulls(serde_json::to_value(params).unwrap_or(Value::Null)),
        "resolved_k": resolved_k,
    })
}

fn without_nulls(v: Value) -> Value {
    match v {
        Value::Object(m) => Value::Object(m.into_iter().filter(|(_, v)| !v.is_null()).collect()),
        other => other,
    }
}

fn single_beta_k(beta: f64, k: &Spec) -> Result<Point> {
    let ks = parse_k("k", &k.0)?;
    if ks.len() != 1 {
        return Err(CliError::Config(format!("--k: expected a single value, got `{k}`")));
    }
    Ok(resolve_points(&[beta], &ks)?[0])
}

fn params(n: usize, p: &Point) -> Result<ModelParams> {
    ModelParams::new(n, p.beta, p.k).map_err(|e| CliError::Config(e.to_string()))
}

fn tol(t: Option<f64>) -> Result<f64> {
    let t = t.unwrap_or(DEFAULT_TOL);
    if t > 0.0 && t < 1e-2 {
        Ok(t)
    } else {
        Err(CliError::Config(format!("--tol: {t} must lie in (0, 0.01)")))
    }
}

fn phase_diagram(g: &Globals, a: &PhaseDiagramArgs) -> Result<()> {
    let betas = parse_grid("beta", &required(&a.beta, "beta")?.0)?;
    let ks = parse_k("k", &required(&a.k, "k")?.0)?;
    let tol = tol(a.tol)?;
    let points = resolve_points(&betas, &ks)?;
    let mut out = Output::open(g.out.as_deref(), g.json)?;
    out.begin(&meta(g, "phase-diagram", a, resolved_json(&points)), &["beta", "k", "phase", "mixing_prediction"])?;
    let rows: Vec<Vec<Value>> = points
        .par_iter()
        .map(|p| {
            let r = classify(p.beta, p.k, tol)?;
            Ok(vec![p.beta.into(), p.k.into(), r.phase.to_string().into(), r.mixing_prediction.to_string().into()])
        })
        .collect::<Result<_>>()?;
    for r in rows {
        out.row(r)?;
    }
    out.finish()
}

fn critical_curves(g: &Globals, a: &CriticalCurvesArgs) -> Result<()> {
    let betas = parse_grid("beta", &required(&a.beta, "beta")?.0)?;
    if let Some(b) = betas.iter().find(|b| !(**b > 0.0)) {
        return Err(CliError::Config(format!("--beta: {b} is not positive")));
    }
    let tol = tol(a.tol)?;
    let bc = beta_c::<f64>();
    let mut out = Output::open(g.out.as_deref(), g.json)?;
    out.begin(&meta(g, "critical-curves", a, Value::Null), &["beta", "kc2", "k1", "kc1"])?;
    let rows: Vec<Vec<Value>> = betas
        .par_iter()
        .map(|&beta| {
            let row = if beta <= bc {
                vec![beta.into(), kc2(beta)?.into(), Value::Null, Value::Null]
            } else {
                vec![beta.into(), Value::Null, k1(beta, tol)?.into(), kc1(beta, tol)?.into()]
            };
            Ok(row)
        })
        .collect::<Result<_>>()?;
    for r in rows {
        out.row(r)?;
    }
    out.comment(&json!({ "tricritical": { "beta": bc, "k": kc2(bc)? } }))?;
    out.finish()
}

fn mix_exact(g: &Globals, a: &MixExactArgs) -> Result<()> {
    let sizes = parse_sizes("n", &required(&a.n, "n")?.0)?;
    let betas = parse_grid("beta", &required(&a.beta, "beta")?.0)?;
    let ks = parse_k("k", &required(&a.k, "k")?.0)?;
    let eps = parse_grid("eps", &a.eps.clone().unwrap_or(Spec("0.25".into())).0)?;
    if let Some(e) = eps.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
        return Err(CliError::Config(format!("--eps: {e} must lie in (0, 1)")));
    }
    let points = resolve_points(&betas, &ks)?;
    let starts = if a.all_starts { Starts::All } else { Starts::Extreme };

    let mut out = Output::open(g.out.as_deref(), g.json)?;
    out.begin(&meta(g, "mix-exact", a, resolved_json(&points)), &["n", "beta", "k", "eps", "t_mix"])?;
    let tasks: Vec<(Point, usize)> = points.iter().flat_map(|p| sizes.iter().map(move |&n| (*p, n))).collect();
    let params: Vec<ModelParams> = tasks.iter().map(|(p, n)| params(*n, p)).collect::<Result<_>>()?;
    let results: Vec<Result<Vec<u64>>> = params
        .par_iter()
        .map(|prm| {
            let t_max = a.t_max.unwrap_or_else(|| default_t_max(prm.n));
            let chain = ExactChain::new(prm)?;
            let mut worst = vec![0u64; eps.len()];
            for s in starts.resolve(prm.n) {
                let curve = chain.tv_curve(&s, t_max, &eps)?;
                for (w, e) in worst.iter_mut().zip(&eps) {
                    match curve.eps_hit.iter().find(|(x, _)| x == e) {
                        Some(&(_, t)) => *w = (*w).max(t),
                        None => {
                            let last_d = *curve.d.last().unwrap_or(&1.0);
                            Err(ChainError::NotMixed { t_max, last_d })?
                        }
                    }
                }
            }
            Ok(worst)
        })
        .collect();

    let mut series: BTreeMap<(usize, usize), Vec<(f64, f64)>> = BTreeMap::new();
    let mut failure = None;
    for (i, ((p, n), res)) in tasks.iter().zip(results).enumerate() {
        let pi = i / sizes.len();
        match res {
            Ok(times) => {
                for (j, (&e, t)) in eps.iter().zip(times).enumerate() {
                    out.row(vec![(*n as u64).into(), p.beta.into(), p.k.into(), e.into(), t.into()])?;
                    series.entry((pi, j)).or_default().push((*n as f64, t as f64));
                }
            }
            Err(e) => {
                let at = format!("n = {n}, beta = {}, K = {}: ", p.beta, p.k);
                for &e in &eps {
                    out.row(vec![(*n as u64).into(), p.beta.into(), p.k.into(), e.into(), Value::Null])?;
                }
                failure.get_or_insert(match e {
                    CliError::CapExhausted(m) => CliError::CapExhausted(at + &m),
                    CliError::Solver(m) => CliError::Solver(at + &m),
                    other => other,
                });
            }
        }
    }
    for ((pi, j), pts) in &series {
        if pts.len() >= blume_capel::scaling::MIN_FIT_POINTS {
            let p = &points[*pi];
            let fit = fit_scaling(pts, ScalingModel::PolyNlogn)?;
            out.comment(&json!({ "beta": p.beta, "k": p.k, "eps": eps[*j], "fit": fit }))?;
        }
    }
    out.finish()?;
    failure.map_or(Ok(()), Err)
}

fn extreme(n: usize, e: Extreme) -> SpinConfiguration {
    match e {
        Extreme::Plus => SpinConfiguration::all_plus(n),
        Extreme::Minus => SpinConfiguration::all_minus(n),
        Extreme::Zero => SpinConfiguration::all_zero(n),
    }
}

fn mix_couple(g: &Globals, a: &MixCoupleArgs) -> Result<()> {
    let n = required(&a.n, "n")?;
    if n < 2 {
        return Err(CliError::Config(format!("--n: need n >= 2, got {n}")));
    }
    let p = single_beta_k(required(&a.beta, "beta")?, &required(&a.k, "k")?)?;
    let replicas = a.replicas.unwrap_or(DEFAULT_REPLICAS);
    let cap = a.cap.unwrap_or(DEFAULT_CAP);
    if replicas == 0 || cap == 0 {
        return Err(CliError::Config("--replicas and --cap must be positive".into()));
    }
    let x0 = extreme(n, a.start.unwrap_or(Extreme::Plus));
    let against = a.against.unwrap_or(Partner::Stationary);
    if a.trace && a.tv_grid.is_some() {
        return Err(CliError::Config("--trace and --tv-grid are exclusive".into()));
    }
    let prm = params(n, &p)?;
    let sampler = StationarySampler::new(&prm)?;
    let partner = |rng: &mut RngStream| match against {
        Partner::Stationary => sampler.sample(rng),
        Partner::Plus => SpinConfiguration::all_plus(n),
        Partner::Minus => SpinConfiguration::all_minus(n),
        Partner::Zero => SpinConfiguration::all_zero(n),
    };
    let mut meta = meta(g, "mix-couple", a, resolved_json(&[p]));
    meta["exact_stationary"] = sampler.is_exact().into();
    let mut out = Output::open(g.out.as_deref(), g.json)?;

    if let Some(grid) = &a.tv_grid {
        if against != Partner::Stationary {
            return Err(CliError::Config("--tv-grid needs --against stationary".into()));
        }
        let ts = parse_times("tv-grid", &grid.0)?;
        let report = tv_upper_via_coupling(&sampler, &x0, replicas, &ts, g.seed)?;
        out.begin(&meta, &["t", "p_hat", "sigma", "ci_lo", "ci_hi"])?;
        for q in &report.points {
            out.row(vec![q.t.into(), q.p_hat.into(), q.sigma.into(), q.ci_lo.into(), q.ci_hi.into()])?;
        }
        return out.finish();
    }

    if a.trace {
        let mut rng = RngStream::new(g.seed, 0);
        let y0 = partner(&mut rng);
        let run = coupling_time(sampler.glauber(), &x0, &y0, cap, &mut rng)?;
        meta["stream_id"] = 0.into();
        out.begin(&meta, &["t", "rho", "sx", "sy"])?;
        for r in &run.records {
            out.row(vec![r.t.into(), (r.rho as u64).into(), r.sx.into(), r.sy.into()])?;
        }
        out.comment(&json!({ "coalesced_at": run.coalesced_at }))?;
        out.finish()?;
        return match run.coalesced_at {
            Some(_) => Ok(()),
            None => Err(CliError::CapExhausted(format!("no coalescence within {cap} steps; raise --cap"))),
        };
    }

    let glauber: &Glauber = sampler.glauber();
    let times: Vec<Option<u64>> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(g.seed, r);
            let mut y = partner(&mut rng);
            let mut x = x0.clone();
            coalescence_time(glauber, &mut x, &mut y, cap, &mut rng)
        })
        .collect::<std::result::Result<_, _>>()?;
    out.begin(&meta, &["replica", "stream_id", "coalesced_at"])?;
    for (r, t) in times.iter().enumerate() {
        out.row(vec![(r as u64).into(), (r as u64).into(), t.map_or(Value::Null, Value::from)])?;
    }
    let mut done: Vec<u64> = times.iter().flatten().copied().collect();
    done.sort_unstable();
    let mean = (!done.is_empty()).then(|| done.iter().sum::<u64>() as f64 / done.len() as f64);
    let median = (!done.is_empty()).then(|| done[done.len() / 2]);
    out.comment(&json!({
        "coalesced": done.len(),
        "replicas": replicas,
        "mean": num(mean),
        "median": median,
        "max": done.last(),
    }))?;
    out.finish()?;
    if done.len() < replicas {
        return Err(CliError::CapExhausted(format!(
            "{} of {replicas} replicas did not coalesce within {cap} steps; raise --cap",
            replicas - done.len()
        )));
    }
    Ok(())
}

fn coupling_contraction(g: &Globals, a: &CouplingContractionArgs) -> Result<()> {
    let p = single_beta_k(required(&a.beta, "beta")?, &required(&a.k, "k")?)?;
    let z = parse_grid("z", &a.z.clone().unwrap_or(Spec("0.01:1:0.01".into())).0)?;
    if let Some(v) = z.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
        return Err(CliError::Config(format!("--z: {v} must lie in (0, 1]")));
    }
    let eps = parse_grid("eps", &a.eps.clone().unwrap_or(Spec("0.05,0.1,0.2".into())).0)?;
    if let Some(e) = eps.iter().find(|e| !(**e > 0.0)) {
        return Err(CliError::Config(format!("--eps: {e} is not positive")));
    }
    let samples = a.samples.unwrap_or(DEFAULT_SAMPLES);
    if samples == 0 {
        return Err(CliError::Config("--samples must be positive".into()));
    }
    let sampler = match a.n {
        Some(n) if n < 2 => return Err(CliError::Config(format!("--n: need n >= 2, got {n}"))),
        Some(n) => Some(StationarySampler::new(&params(n, &p)?)?),
        None => None,
    };

    let profile = contraction_profile(p.beta, p.k, &z)?;
    let mut out = Output::open(g.out.as_deref(), g.json)?;
    out.begin(
        &meta(g, "coupling-contraction", a, resolved_json(&[p])),
        &["z", "local", "aggregate", "local_expands", "aggregate_contracts"],
    )?;
    for c in &profile {
        out.row(vec![
            c.z.into(),
            c.local.into(),
            c.aggregate.into(),
            c.local_expands.into(),
            c.aggregate_contracts.into(),
        ])?;
    }
    if let (Some(sampler), Some(n)) = (&sampler, a.n) {
        let tau = extreme(n, a.tau.unwrap_or(Extreme::Plus));
        for &e in &eps {
            let agg = aggregate_contraction(sampler, &tau, e, samples, g.seed)?;
            out.comment(&json!({ "aggregate_contraction": agg, "n": n }))?;
        }
    }
    out.finish()
}

/// `I(z') - I(z~)`: `z~` the largest local minimiser of the free energy,
/// `z'` the largest local maximiser in `[0, z~)`. `None` without a positive minimiser.
pub fn predicted_rate(beta: f64, k: f64) -> Result<Option<Value>> {
    let m = minimize_g(beta, k, DEFAULT_TOL)?;
    let z_min = m.local_minimizers.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(z_min > 1e-6) {
        return Ok(None);
    }
    let z_max = m
        .critical_points
        .iter()
        .filter(|c| c.z >= 0.0 && c.z < z_min && c.kind == CriticalKind::LocalMax)
        .map(|c| c.z)
        .fold(0.0, f64::max);
    let rate = rate_function(beta, k, z_max)? - rate_function(beta, k, z_min)?;
    Ok(Some(json!({ "rate": rate, "zprime": z_max, "ztilde": z_min })))
}

fn bottleneck(g: &Globals, a: &BottleneckArgs) -> Result<()> {
    let sizes = parse_sizes("n", &required(&a.n, "n")?.0)?;
    let betas = parse_grid("beta", &required(&a.beta, "beta")?.0)?;
    let ks = parse_k("k", &required(&a.k, "k")?.0)?;
    let zprime = a.zprime.unwrap_or(0.0);
    if !(0.0..1.0).contains(&zprime) {
        return Err(CliError::Config(format!("--zprime: {zprime} must lie in [0, 1)")));
    }
    let points = resolve_points(&betas, &ks)?;
    let tasks: Vec<(Point, usize)> = points.iter().flat_map(|p| sizes.iter().map(move |&n| (*p, n))).collect();
    let params: Vec<ModelParams> = tasks.iter().map(|(p, n)| params(*n, p)).collect::<Result<_>>()?;
    let reports = params
        .par_iter()
        .map(|prm| Ok(ExactChain::new(prm)?.bottleneck(zprime)?))
        .collect::<Result<Vec<_>>>()?;

    let mut out = Output::open(g.out.as_deref(), g.json)?;
    out.begin(
        &meta(g, "bottleneck", a, resolved_json(&points)),
        &["n", "beta", "k", "zprime", "phi", "phi_star", "tmix_lower"],
    )?;
    for r in &reports {
        out.row(vec![
            (r.n as u64).into(),
            r.beta.into(),
            r.k.into(),
            r.zprime.into(),
            num(Some(r.phi)),
            num(Some(r.phi_star)),
            num(Some(r.tmix_lower)),
        ])?;
    }
    for (pi, p) in points.iter().enumerate() {
        let pts: Vec<(f64, f64)> = reports[pi * sizes.len()..(pi + 1) * sizes.len()]
            .iter()
            .map(|r| (r.n as f64, 1.0 / r.phi_star))
            .collect();
        if pts.len() >= blume_capel::scaling::MIN_FIT_POINTS {
            let fit: Option<ScalingFit> = fit_scaling(&pts, ScalingModel::Exponential).ok();
            out.comment(&json!({
                "beta": p.beta,
                "k": p.k,
                "fit": fit,
                "predicted": predicted_rate(p.beta, p.k)?,
            }))?;
        }
    }
    out.finish()
}

fn scaling_fit(g: &Globals, a: &ScalingFitArgs) -> Result<()> {
    let input = required(&a.input, "input")?;
    let model: ScalingModel = required(&a.model, "model")?
        .parse()
        .map_err(|e: blume_capel::scaling::ScalingError| CliError::Config(e.to_string()))?;
    let xcol = a.x.clone().unwrap_or_else(|| "n".into());
    let ycol = a.y.clone().unwrap_or_else(|| "t_mix".into());
    let filters: Vec<(String, f64)> = match &a.select {
        None => Vec::new(),
        Some(s) => s
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|item| {
                let (c, v) = item
                    .split_once('=')
                    .ok_or_else(|| CliError::Config(format!("--select: `{item}` is not column=value")))?;
                let v = v
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Config(format!("--select: `{v}` is not a number")))?;
                Ok((c.trim().to_string(), v))
            })
            .collect::<Result<_>>()?,
    };

    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(&input)
        .map_err(|e| CliError::Config(format!("{}: {e}", input.display())))?;
    let headers = rdr.headers().map_err(|e| CliError::Config(format!("{}: {e}", input.display())))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Config(format!("{}: no column `{name}`", input.display())))
    };
    let (xi, yi) = (col(&xcol)?, col(&ycol)?);
    let fi: Vec<(usize, f64)> = filters.iter().map(|(c, v)| Ok((col(c)?, *v))).collect::<Result<_>>()?;

    let mut pts = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Config(format!("{}: {e}", input.display())))?;
        let field = |i: usize| -> Result<Option<f64>> {
            let s = rec.get(i).unwrap_or("");
            if s.is_empty() {
                return Ok(None);
            }
            s.parse().map(Some).map_err(|_| {
                CliError::Config(format!("{}: record {}: `{s}` is not a number", input.display(), line + 1))
            })
        };
        let mut keep = true;
        for &(i, v) in &fi {
            keep &= field(i)?.is_some_and(|x| (x - v).abs() <= 1e-12 * v.abs().max(1.0));
        }
        if let (true, Some(x), Some(y)) = (keep, field(xi)?, field(yi)?) {
            pts.push((x, y));
        }
    }
    let fit = fit_scaling(&pts, model)
        .map_err(|e| CliError::Config(format!("{}: {e} (narrow the rows with --select)", input.display())))?;

    let mut out = Output::open(g.out.as_deref(), g.json)?;
    let mut meta = meta(g, "scaling-fit", a, Value::Null);
    meta["input"] = input.display().to_string().into();
    out.begin(&meta, &["n", "value", "residual"])?;
    for (&(x, y), r) in fit.points.iter().zip(&fit.residuals) {
        out.row(vec![x.into(), y.into(), (*r).into()])?;
    }
    out.comment(&json!({ "fit": fit }))?;
    out.finish()
}
