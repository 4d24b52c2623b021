use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Value};

use nearshift::neardecomp::{example_section2, example_type_subspace, wold_subspace};
use nearshift::operators::mult_operator;
use nearshift::subspaces::{defect, near_invariance_check, orthonormalize};
use nearshift::suites::{push_factorization_checks, random_element, suite_operations};
use nearshift::wold::{
    select_parameters, suggest_s, wold_decompose, wold_decompose_auto, NormSpec,
};
use nearshift::{
    run_all, run_suite, Ambient, Check, Error, ExampleConfig, Factorizer, FiniteBlaschke, Lcg64,
    ScenarioReport, SuiteConfig, TruncatedSeries, C64, SUITES,
};

use crate::{
    DecomposeArgs, ExampleArgs, FactorizeArgs, NearCheckArgs, NormsArgs, Outcome, VerifyArgs,
};

/// A run that produced no report. `code` is the process exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: if e.is_precondition() { 2 } else { 3 },
            message: e.to_string(),
        }
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Failure::input(format!("malformed {what}: {e}")))
}

/// Inline JSON when the argument starts with `{`, a file path otherwise.
pub fn load_blaschke(arg: &str) -> Result<FiniteBlaschke> {
    if arg.trim_start().starts_with('{') {
        parse(arg, "Blaschke product")
    } else {
        parse(&read(Path::new(arg))?, "Blaschke product")
    }
}

fn load_series(path: &Path) -> Result<TruncatedSeries> {
    parse(&read(path)?, "series")
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GeneratorFile {
    List(Vec<TruncatedSeries>),
    Object { generators: Vec<TruncatedSeries> },
}

fn load_generators(path: &Path) -> Result<Vec<TruncatedSeries>> {
    let gens = match parse::<GeneratorFile>(&read(path)?, "generator list")? {
        GeneratorFile::List(g) | GeneratorFile::Object { generators: g } => g,
    };
    if gens.is_empty() {
        return Err(Failure::input("the generator list is empty"));
    }
    Ok(gens)
}

fn checks_value(checks: &[Check]) -> Value {
    serde_json::to_value(checks).expect("checks serialize")
}

fn scale(norm: f64) -> f64 {
    if norm > 0.0 {
        norm
    } else {
        1.0
    }
}

fn wold_spec(b: &FiniteBlaschke, alpha: f64, s: Option<f64>) -> Result<(NormSpec, Value)> {
    if alpha >= 0.0 {
        return Ok((NormSpec::wold_one(alpha, b.clone())?, Value::Null));
    }
    let p = select_parameters(b, alpha, s.unwrap_or_else(|| suggest_s(b)))?;
    let spec = NormSpec::wold_two(alpha, p.n, b.clone())?;
    Ok((spec, json!(p)))
}

pub fn decompose(args: &DecomposeArgs, strict: bool) -> Result<Outcome> {
    let b = load_blaschke(&args.b.blaschke)?;
    let mut f = load_series(&args.input)?;
    if let Some(d) = args.degree {
        f = f.resize(d);
    }
    let w = match args.levels {
        Some(k) => wold_decompose(&f, &b, k)?,
        None => wold_decompose_auto(&f, &b)?,
    };
    let w = if strict { w.strict()? } else { w };
    let fnorm = scale(f.norm_h2());
    let back = w.reconstruct(f.degree())?;
    let checks = vec![
        Check::below(
            "reconstruction",
            back.sub(&f).norm_h2() / fnorm,
            1e-8,
            json!({}),
        ),
        Check::new(
            "truncation",
            !w.truncation_warning(),
            w.remainder() / fnorm,
            json!({ "levels": w.levels(), "remainder": w.remainder() }),
        ),
    ];
    let pass = checks.iter().all(|c| c.pass);
    Ok(Outcome {
        config: json!({
            "blaschke": b,
            "input": args.input,
            "levels": args.levels,
            "degree": f.degree(),
        }),
        report: json!({
            "checks": checks_value(&checks),
            "result": { "wold": w, "level_norms": w.level_norms() },
        }),
        pass,
        report_only: false,
    })
}

pub fn norms(args: &NormsArgs, strict: bool) -> Result<Outcome> {
    let b = load_blaschke(&args.b.blaschke)?;
    let mut f = load_series(&args.input)?;
    if let Some(d) = args.degree {
        f = f.resize(d);
    }
    let (spec, params) = wold_spec(&b, args.alpha, args.s)?;
    let w = wold_decompose_auto(&f, &b)?;
    let w = if strict { w.strict()? } else { w };
    let norm = w.weighted_norm(&spec);
    let bf = w.weighted_norm_shifted(&spec, 1);
    let gamma = spec.lower_bound().unwrap_or(1.0);
    let checks = vec![
        Check::new(
            "lower_bound",
            bf >= gamma * norm - 1e-9 * scale(norm),
            (gamma * norm - bf).max(0.0),
            json!({ "ratio": if norm > 0.0 { bf / norm } else { f64::NAN }, "gamma": gamma }),
        ),
        Check::new(
            "truncation",
            !w.truncation_warning(),
            w.remainder() / scale(f.norm_h2()),
            json!({ "levels": w.levels() }),
        ),
    ];
    let pass = checks.iter().all(|c| c.pass);
    Ok(Outcome {
        config: json!({
            "blaschke": b,
            "alpha": args.alpha,
            "s": args.s,
            "input": args.input,
            "degree": f.degree(),
        }),
        report: json!({
            "checks": checks_value(&checks),
            "result": {
                "d_alpha": f.norm_alpha(args.alpha),
                "h2": f.norm_h2(),
                "norm_spec": spec,
                "wold_norm": norm,
                "b_f_norm": bf,
                "gamma": gamma,
                "parameters": params,
            },
        }),
        pass,
        report_only: false,
    })
}

pub fn near_check(args: &NearCheckArgs) -> Result<Outcome> {
    let b = load_blaschke(&args.b.blaschke)?;
    let gens = load_generators(&args.input)?;
    let d = args
        .degree
        .unwrap_or_else(|| gens.iter().map(|g| g.degree()).max().unwrap_or(0));
    let amb = Ambient::h2(d);
    let vectors: Vec<_> = gens.iter().map(|g| amb.embed(&g.resize(d))).collect();
    let m = orthonormalize(&vectors, &amb)?;
    if m.dim() == 0 {
        return Err(Failure::input("the generators span the zero subspace"));
    }
    let t = mult_operator(&b, &amb)?;
    let near = near_invariance_check(&m, &t, args.guard, args.tol)?;
    let l = if near.is_nearly_invariant {
        defect(&m, &t).ok().map(|d| d.l)
    } else {
        None
    };
    let check = Check::new(
        "near_invariance",
        near.is_nearly_invariant,
        near.max_residual,
        json!({ "preimage_dim": near.preimage_dim }),
    );
    Ok(Outcome {
        config: json!({
            "blaschke": b,
            "input": args.input,
            "degree": d,
            "guard": args.guard,
            "tol": args.tol,
        }),
        report: json!({
            "checks": checks_value(&[check]),
            "result": {
                "is_nearly_invariant": near.is_nearly_invariant,
                "dim_M": m.dim(),
                "defect_dimension": l,
                "report": near,
            },
        }),
        pass: near.is_nearly_invariant,
        report_only: true,
    })
}

pub fn factorize(args: &FactorizeArgs) -> Result<Outcome> {
    let b = load_blaschke(&args.b.blaschke)?;
    let (m, generators, source) = match &args.input {
        Some(path) => {
            let gens = load_generators(path)?;
            let (m, vectors) = wold_subspace(&b, &gens, NormSpec::h2())?;
            (m, vectors, json!({ "input": path }))
        }
        None => {
            let a = C64::new(args.a, args.a_im);
            let ex = example_type_subspace(&b, a, args.m, args.levels, NormSpec::h2())?;
            let source = json!({ "example_type": { "a": [a.re, a.im], "m": args.m, "levels": args.levels } });
            (ex.subspace, ex.generators, source)
        }
    };
    let fac = if args.alpha >= 0.0 {
        Factorizer::alpha_pos(&m, &b, args.alpha)?
    } else {
        Factorizer::alpha_neg(&m, &b, args.alpha, args.s.unwrap_or_else(|| suggest_s(&b)))?
    };
    let mut report = ScenarioReport::new(json!({}));
    push_factorization_checks(&mut report, &fac, &generators, args.trials, args.seed, "")?;
    let sample = fac.factorize(&random_element(
        &generators,
        &mut Lcg64::for_trial(args.seed, 0),
    ))?;
    Ok(Outcome {
        config: json!({
            "blaschke": b,
            "alpha": args.alpha,
            "s": args.s,
            "subspace": source,
            "seed": args.seed,
            "trials": args.trials,
        }),
        report: json!({
            "checks": checks_value(&report.checks),
            "result": {
                "l": fac.decomposer().l(),
                "dim_M": fac.subspace().dim(),
                "regime": fac.regime(),
                "norm_spec": fac.norm_spec(),
                "sample": sample,
            },
        }),
        pass: report.pass,
        report_only: false,
    })
}

pub fn example(args: &ExampleArgs) -> Result<Outcome> {
    let cfg = ExampleConfig {
        a: C64::new(args.a, args.a_im),
        m: args.m,
        levels: args.levels,
        degree: args.degree,
        literal_naturals: args.literal_naturals,
    };
    let report = example_section2(&cfg)?;
    let l = report
        .checks
        .iter()
        .find(|c| c.name == "defect_dimension")
        .and_then(|c| c.details.get("l").cloned());
    Ok(Outcome {
        config: json!({
            "a": [args.a, args.a_im],
            "m": args.m,
            "degree": args.degree,
            "levels": cfg.even(),
            "literal_naturals": args.literal_naturals,
        }),
        report: json!({
            "checks": checks_value(&report.checks),
            "parameters": report.parameters,
            "result": { "l": l },
        }),
        pass: report.pass,
        report_only: false,
    })
}

pub fn verify(args: &VerifyArgs) -> Result<Outcome> {
    let cfg = SuiteConfig {
        blaschke: args.blaschke.as_deref().map(load_blaschke).transpose()?,
        alpha: args.alpha,
        s: args.s,
        degree: args.degree,
        levels: args.levels,
        seed: args.seed,
        trials: args.trials,
    };
    let report = if args.suite == "all" {
        run_all(&cfg)?
    } else {
        run_suite(&args.suite, &cfg)?
    };
    let mut config = json!(cfg);
    config["suite"] = json!(args.suite);
    Ok(Outcome {
        config,
        report: json!({
            "checks": checks_value(&report.checks),
            "parameters": report.parameters,
        }),
        pass: report.pass,
        report_only: false,
    })
}

pub fn suites() -> Outcome {
    let list: Vec<Value> = SUITES
        .iter()
        .map(|s| json!({ "name": s, "operations": suite_operations(s) }))
        .collect();
    Outcome {
        config: json!({}),
        report: json!({ "suites": list }),
        pass: true,
        report_only: false,
    }
}
