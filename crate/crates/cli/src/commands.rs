use returnlab::cylinder::CylinderSet;
use returnlab::error::Error;
use returnlab::ldp::{chebyshev_grid, complement_rate, inner_outer, legendre, Cgf, Provenance};
use returnlab::openset::{
    approximation_sequence, approximations, boundary_pressure_bound, max_invariant_mass, ExplicitUnion,
    OpenSetSpec,
};
use returnlab::simulate::{
    empirical_cgf, empirical_cgf_multi, empirical_tail, sample_many, EstimateRecord, McConfig, ReturnProcess,
    TailMethod,
};
use returnlab::thermo::{equilibrium_chain, gibbs_constant, survivor_pressure};
use returnlab::verify::{run_all, run_selected, Tolerances};
use serde::Serialize;

use crate::config::{Config, ConfigError, Model, OpenSetConfig, TailMethodSpec, TargetSpec};
use crate::output::{fmt_g, fmt_opt, OutDir};

/// How a command ended, mapped to the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Some verification check failed (1).
    Checks(usize),
    /// Bad configuration or unusable input (2).
    Config(String),
    /// The numerics gave up (3).
    Numeric(String),
    /// Inner and outer approximations did not meet; partial output written (4).
    NotConverged(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Checks(_) => 1,
            Failure::Config(_) => 2,
            Failure::Numeric(_) => 3,
            Failure::NotConverged(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Checks(n) => write!(f, "{n} check(s) failed"),
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Numeric(m) => write!(f, "numerical failure: {m}"),
            Failure::NotConverged(m) => write!(f, "not converged: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Numeric(_) | Error::NotUnique(_) | Error::TooLarge { .. } | Error::BelowCritical { .. } => {
                Failure::Numeric(e.to_string())
            }
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(format!("cannot write output: {e}"))
    }
}

type Outcome = Result<(), Failure>;

enum Target {
    Cylinder(CylinderSet),
    Open(Box<dyn OpenSetSpec>, OpenSetConfig),
}

fn target(cfg: &Config, model: &Model) -> Result<Target, Failure> {
    match &cfg.target {
        Some(TargetSpec::Cylinder(c)) => Ok(Target::Cylinder(model.cylinder(c)?)),
        Some(TargetSpec::OpenSet(o)) => Ok(Target::Open(model.open_set(o)?, o.clone())),
        None => Err(Failure::Config("this command needs a target".into())),
    }
}

pub fn pressure(cfg: &Config, out: &mut OutDir) -> Outcome {
    #[derive(Serialize)]
    struct Hole {
        anchor: i64,
        words: Vec<String>,
        measure: f64,
        survivor_pressure: f64,
        escape_rate: f64,
    }
    #[derive(Serialize)]
    struct Report {
        alphabet_size: usize,
        irreducible: bool,
        aperiodic: bool,
        period: usize,
        pressure: f64,
        entropy: f64,
        warning: Option<String>,
        holes: Vec<Hole>,
        gibbs_constant: f64,
        gibbs_constant_per_depth: Vec<(usize, f64)>,
    }
    let model = cfg.model()?;
    let chain = equilibrium_chain(&model.sft, &model.potential)?;
    let p = chain.pressure();
    let holes = cfg
        .holes
        .iter()
        .map(|h| {
            let set = model.cylinder(h)?;
            let s = survivor_pressure(&model.sft, &model.potential, &set)?.value;
            Ok(Hole {
                anchor: h.anchor,
                words: h.words.clone(),
                measure: chain.measure(&set),
                survivor_pressure: s,
                escape_rate: p - s,
            })
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let g = gibbs_constant(&chain, &model.sft, &model.potential, cfg.pressure.gibbs_depth.max(1))?;
    let d = model.source.diagnostics();
    let report = Report {
        alphabet_size: model.source.alphabet_size(),
        irreducible: d.irreducible,
        aperiodic: d.aperiodic,
        period: d.period,
        pressure: p,
        entropy: chain.entropy(),
        warning: chain.warning().map(str::to_string),
        holes,
        gibbs_constant: g.b,
        gibbs_constant_per_depth: g.per_depth,
    };
    println!("pressure {}", fmt_g(report.pressure));
    for h in &report.holes {
        println!("survivor pressure of {:?} {}", h.words, fmt_g(h.survivor_pressure));
    }
    out.json("report.json", &report)?;
    Ok(())
}

#[derive(Serialize)]
struct Domain {
    alpha_max: f64,
    mean_return: f64,
    min_mean_return: f64,
    measure: f64,
    alpha_range: (f64, f64),
}

fn rate_row(u: f64, cgf: &Cgf, complement: Option<&Cgf>) -> Result<Vec<String>, Failure> {
    let l = legendre(cgf, u)?;
    let mut row = vec![fmt_g(u), fmt_g(l.value), fmt_g(l.alpha), u8::from(l.truncated).to_string()];
    if let Some(c) = complement {
        if u > 1.0 {
            let via = complement_rate(c, u)?;
            row.push(fmt_g(via));
            row.push(fmt_g((via - l.value).abs()));
        } else {
            row.extend([String::new(), String::new()]);
        }
    }
    Ok(row)
}

pub fn rate(cfg: &Config, out: &mut OutDir) -> Outcome {
    let model = cfg.model()?;
    match target(cfg, &model)? {
        Target::Cylinder(set) => rate_cylinder(cfg, &model, &set, out),
        Target::Open(spec, o) => rate_open(cfg, &model, spec.as_ref(), &o, out),
    }
}

fn rate_cylinder(cfg: &Config, model: &Model, set: &CylinderSet, out: &mut OutDir) -> Outcome {
    let cgf = Cgf::new(&model.sft, &model.potential, set)?;
    let curve = match &cfg.rate.alpha {
        Some(grid) => cgf.curve(grid, Provenance::ExactCylinder)?,
        None => cgf.default_curve(cfg.rate.points.unwrap_or(41), Provenance::ExactCylinder)?,
    };
    let rows: Vec<Vec<String>> = curve
        .samples
        .iter()
        .map(|p| vec![fmt_g(p.alpha), fmt_g(p.psi), fmt_g(p.slope)])
        .collect();
    out.csv("cgf.csv", &["alpha", "psi", "slope"], &rows)?;

    let us: Vec<f64> = match &cfg.rate.u {
        Some(u) => u.clone(),
        None => curve.samples.iter().map(|p| p.slope).collect(),
    };
    let complement = if cfg.rate.complement {
        Some(Cgf::new(&model.sft, &model.potential, &set.complement(&model.sft))?)
    } else {
        None
    };
    let mut header = vec!["u", "phi", "alpha", "truncated"];
    if complement.is_some() {
        header.extend(["phi_complement", "gap"]);
    }
    let rows = us
        .iter()
        .map(|&u| rate_row(u, &cgf, complement.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    out.csv("rate.csv", &header, &rows)?;
    out.json(
        "domain.json",
        &Domain {
            alpha_max: cgf.alpha_max(),
            mean_return: cgf.mean_return(),
            min_mean_return: 1.0 / cgf.max_invariant_mass(),
            measure: cgf.measure(),
            alpha_range: cgf.range(),
        },
    )?;
    println!(
        "alpha_max {}  mean return {}  ({} α points, {} u points)",
        fmt_g(cgf.alpha_max()),
        fmt_g(cgf.mean_return()),
        curve.samples.len(),
        us.len()
    );
    Ok(())
}

fn rate_open(cfg: &Config, model: &Model, spec: &dyn OpenSetSpec, o: &OpenSetConfig, out: &mut OutDir) -> Outcome {
    let deepest = approximations(spec, &model.sft, o.max_depth)?;
    let domain_of = |set: &CylinderSet| -> Result<f64, Failure> {
        if set.is_empty() {
            return Ok(f64::INFINITY);
        }
        Ok(Cgf::new(&model.sft, &model.potential, set)?.alpha_max())
    };
    let inner_max = domain_of(&deepest.inner)?;
    let outer_max = domain_of(&deepest.outer)?;
    let grid = match &cfg.rate.alpha {
        Some(g) => g.clone(),
        None => {
            let top = inner_max.min(outer_max);
            let hi = if top.is_finite() { 0.9 * top } else { 2.0 };
            chebyshev_grid(-2.0, hi, cfg.rate.points.unwrap_or(21))
        }
    };
    let mut summary = Vec::new();
    let mut per_depth = Vec::new();
    let mut reported = Vec::new();
    for &alpha in &grid {
        let r = inner_outer(spec, &model.sft, &model.potential, alpha, o.min_depth..=o.max_depth, o.tol)?;
        let last = r.rows.iter().rev().find(|row| row.inner.is_some() && row.outer.is_some());
        summary.push(vec![
            fmt_g(alpha),
            fmt_opt(last.and_then(|row| row.inner)),
            fmt_opt(last.and_then(|row| row.outer)),
            fmt_opt(r.value),
        ]);
        for row in &r.rows {
            per_depth.push(vec![
                fmt_g(alpha),
                row.depth.to_string(),
                fmt_opt(row.inner),
                fmt_opt(row.outer),
                row.sandwich_holds.map(|b| u8::from(b).to_string()).unwrap_or_default(),
                fmt_opt(row.induced.map(|x| x.0)),
                fmt_opt(row.induced.map(|x| x.1)),
            ]);
        }
        if let Some(v) = r.value {
            reported.push((alpha, v));
        }
    }
    out.csv("cgf.csv", &["alpha", "inner", "outer", "psi"], &summary)?;
    out.csv(
        "cgf_depths.csv",
        &["alpha", "depth", "inner", "outer", "sandwich", "induced_lhs", "induced_rhs"],
        &per_depth,
    )?;
    // discrete Legendre transform of the converged values
    let us: Vec<f64> = match &cfg.rate.u {
        Some(u) => u.clone(),
        None => reported
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect(),
    };
    let rows: Vec<Vec<String>> = us
        .iter()
        .map(|&u| {
            let phi = reported
                .iter()
                .map(|&(a, p)| p - a * u)
                .fold(f64::INFINITY, f64::min);
            vec![fmt_g(u), if reported.is_empty() { String::new() } else { fmt_g(phi) }]
        })
        .collect();
    out.csv("rate.csv", &["u", "phi"], &rows)?;
    #[derive(Serialize)]
    struct OpenDomain {
        depth: usize,
        inner_alpha_max: f64,
        outer_alpha_max: f64,
        converged_points: usize,
        grid_points: usize,
    }
    out.json(
        "domain.json",
        &OpenDomain {
            depth: o.max_depth,
            inner_alpha_max: inner_max,
            outer_alpha_max: outer_max,
            converged_points: reported.len(),
            grid_points: grid.len(),
        },
    )?;
    println!("{} of {} α points converged within {}", reported.len(), grid.len(), fmt_g(o.tol));
    if reported.len() < grid.len() {
        return Err(Failure::NotConverged(format!(
            "{} α points without converged inner/outer values at depth {}",
            grid.len() - reported.len(),
            o.max_depth
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct CgfEstimate {
    alpha: f64,
    branch: &'static str,
    analytic: Option<f64>,
    #[serde(flatten)]
    record: EstimateRecord,
}

#[derive(Serialize)]
struct TailEstimate {
    u: f64,
    branch: &'static str,
    analytic: Option<f64>,
    #[serde(flatten)]
    record: EstimateRecord,
}

pub fn simulate(cfg: &Config, out: &mut OutDir) -> Outcome {
    let model = cfg.model()?;
    let s = &cfg.simulate;
    let mc = McConfig {
        trials: s.trials,
        seed: cfg.seed,
        horizon: s.horizon,
        batches: s.batches,
    };
    let method = match s.method {
        TailMethodSpec::Direct => TailMethod::Direct,
        TailMethodSpec::Tilted => TailMethod::Tilted,
    };
    let (branches, sets): (Vec<&'static str>, Vec<CylinderSet>) = match target(cfg, &model)? {
        Target::Cylinder(set) => (vec!["exact"], vec![set]),
        Target::Open(spec, o) => {
            let a = approximations(spec.as_ref(), &model.sft, s.depth.unwrap_or(o.max_depth))?;
            if a.inner.is_empty() {
                return Err(Failure::Config(format!("the inner approximation is empty at depth {}", a.depth)));
            }
            (vec!["inner", "outer"], vec![a.inner, a.outer])
        }
    };
    let refs: Vec<&CylinderSet> = sets.iter().collect();
    let process = ReturnProcess::new(&model.sft, &model.potential, &refs)?;
    let ids: Vec<usize> = (0..sets.len()).collect();
    let cgfs = sets
        .iter()
        .map(|set| Cgf::new(&model.sft, &model.potential, set))
        .collect::<Result<Vec<_>, _>>()?;

    let mut cgf_rows = Vec::new();
    for &alpha in &s.alpha {
        let records = if ids.len() == 1 {
            vec![empirical_cgf(&process, 0, alpha, s.n, mc)?]
        } else {
            empirical_cgf_multi(&process, &ids, alpha, s.n, mc)?
        };
        for ((record, &branch), cgf) in records.into_iter().zip(&branches).zip(&cgfs) {
            cgf_rows.push(CgfEstimate {
                alpha,
                branch,
                analytic: cgf.eval(alpha).ok().map(|p| p.psi),
                record,
            });
        }
    }
    let mut tail_rows = Vec::new();
    for &u in &s.u {
        for (set, (&branch, cgf)) in sets.iter().zip(branches.iter().zip(&cgfs)) {
            let single = ReturnProcess::new(&model.sft, &model.potential, &[set])?;
            let record = empirical_tail(&single, u, s.n, method, mc)?;
            tail_rows.push(TailEstimate {
                u,
                branch,
                analytic: legendre(cgf, u).ok().map(|l| l.value),
                record,
            });
        }
    }
    let mut sandwich_violations = None;
    if s.raw || sets.len() == 2 {
        let runs = sample_many(&process, &ids, s.n, mc)?;
        if sets.len() == 2 {
            sandwich_violations = Some(
                runs.iter()
                    .filter(|r| matches!((r[0], r[1]), (Some(i), Some(o)) if i < o))
                    .count(),
            );
        }
        if s.raw {
            let rows: Vec<Vec<String>> = runs
                .iter()
                .enumerate()
                .flat_map(|(trial, r)| {
                    r.iter().zip(&branches).map(move |(t, b)| {
                        vec![
                            trial.to_string(),
                            s.n.to_string(),
                            t.map(|t| t.to_string()).unwrap_or_default(),
                            b.to_string(),
                        ]
                    })
                })
                .collect();
            out.csv("raw.csv", &["trial", "n", "r_n", "branch"], &rows)?;
        }
    }
    #[derive(Serialize)]
    struct Report {
        measures: Vec<(&'static str, f64)>,
        cgf: Vec<CgfEstimate>,
        tail: Vec<TailEstimate>,
        sandwich_violations: Option<usize>,
    }
    let report = Report {
        measures: branches.iter().zip(0..).map(|(&b, i)| (b, process.measure(i))).collect(),
        cgf: cgf_rows,
        tail: tail_rows,
        sandwich_violations,
    };
    for r in &report.cgf {
        println!(
            "cgf  α={} [{}] {} ± {}  analytic {}",
            fmt_g(r.alpha),
            r.branch,
            fmt_g(r.record.estimate),
            fmt_g(r.record.std_error),
            fmt_opt(r.analytic)
        );
    }
    for r in &report.tail {
        println!(
            "tail u={} [{}] {} ± {}  rate function {}",
            fmt_g(r.u),
            r.branch,
            fmt_g(r.record.estimate),
            fmt_g(r.record.std_error),
            fmt_opt(r.analytic)
        );
    }
    out.json("estimates.json", &report)?;
    Ok(())
}

pub fn verify(cfg: &Config, out: &mut OutDir) -> Outcome {
    let mut tol = cfg.verify.tolerances.clone().unwrap_or_default();
    tol.seed = cfg.seed;
    if let Some(f) = cfg.verify.tolerance_scale {
        tol = tol.scaled(f);
    }
    let results = match &cfg.verify.criteria {
        Some(ids) => run_selected(&tol, ids)?,
        None => run_all(&tol),
    };
    #[derive(Serialize)]
    struct Row {
        id: usize,
        name: &'static str,
        passed: bool,
        detail: String,
        seconds: f64,
    }
    #[derive(Serialize)]
    struct Verdict {
        all_passed: bool,
        tolerances: Tolerances,
        results: Vec<Row>,
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    for r in &results {
        println!("{r}");
    }
    out.json(
        "verdict.json",
        &Verdict {
            all_passed: failed == 0,
            tolerances: tol,
            results: results
                .into_iter()
                .map(|r| Row {
                    id: r.id,
                    name: r.name,
                    passed: r.passed,
                    detail: r.detail,
                    seconds: r.elapsed.as_secs_f64(),
                })
                .collect(),
        },
    )?;
    if failed > 0 {
        return Err(Failure::Checks(failed));
    }
    Ok(())
}

pub fn approx(cfg: &Config, out: &mut OutDir) -> Outcome {
    let model = cfg.model()?;
    let (spec, min_depth, max_depth): (Box<dyn OpenSetSpec>, usize, usize) = match target(cfg, &model)? {
        Target::Cylinder(set) => (Box::new(ExplicitUnion::new(&model.sft, set)), 1, 6),
        Target::Open(spec, o) => (spec, o.min_depth, o.max_depth),
    };
    let seq = approximation_sequence(spec.as_ref(), &model.sft, min_depth..=max_depth)?;
    let chain = equilibrium_chain(&model.sft, &model.potential)?;
    let mut rows = Vec::new();
    #[derive(Serialize)]
    struct Depth {
        depth: usize,
        anchor: i64,
        length: usize,
        inner: Vec<String>,
        outer: Vec<String>,
        annulus: Vec<String>,
    }
    let mut depths = Vec::new();
    for a in &seq {
        let rho = if a.annulus.is_empty() {
            0.0
        } else {
            max_invariant_mass(&model.sft, &a.annulus)?
        };
        rows.push(vec![
            a.depth.to_string(),
            a.inner.word_count().to_string(),
            a.outer.word_count().to_string(),
            a.annulus.word_count().to_string(),
            fmt_g(chain.measure(&a.inner)),
            fmt_g(chain.measure(&a.outer)),
            fmt_g(chain.measure(&a.annulus)),
            fmt_g(rho),
        ]);
        let words = |s: &CylinderSet| s.words().map(|w| model.sft.format_symbols(w)).collect();
        depths.push(Depth {
            depth: a.depth,
            anchor: a.outer.anchor(),
            length: a.outer.len(),
            inner: words(&a.inner),
            outer: words(&a.outer),
            annulus: words(&a.annulus),
        });
    }
    out.csv(
        "approx.csv",
        &["depth", "inner_words", "outer_words", "annulus_words", "mu_inner", "mu_outer", "mu_annulus", "rho_annulus"],
        &rows,
    )?;
    let bound = boundary_pressure_bound(&chain, &model.sft, &model.potential, spec.as_ref(), min_depth..=max_depth)?;
    #[derive(Serialize)]
    struct Words {
        open_set: String,
        pressure: f64,
        theta: f64,
        boundary_bound: f64,
        boundary_empty: bool,
        depths: Vec<Depth>,
    }
    out.json(
        "approx.json",
        &Words {
            open_set: spec.name(),
            pressure: chain.pressure(),
            theta: bound.theta,
            boundary_bound: bound.bound,
            boundary_empty: bound.boundary_empty,
            depths,
        },
    )?;
    println!(
        "{}: depths {min_depth}..={max_depth}, θ {}, boundary bound {}",
        spec.name(),
        fmt_g(bound.theta),
        fmt_g(bound.bound)
    );
    Ok(())
}
