//! Named verification suites. Each runs seeded trials through the module
//! operations and returns a [`ScenarioReport`].

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::blaschke::FiniteBlaschke;
use crate::error::{invalid, Result};
use crate::neardecomp::{
    example_section2, example_subspace, example_type_subspace, representation_check_h2, Check,
    ExampleConfig, Factorizer, ScenarioReport,
};
use crate::operators::{apply_series_of_operator, mult_operator, unitary_u};
use crate::rng::Lcg64;
use crate::series::TruncatedSeries;
use crate::subspaces::Ambient;
use crate::wold::{
    select_parameters, suggest_s, verify_lower_bound, wold_decompose_auto, NormSpec,
};
use crate::{CVector, C64};

pub const SUITES: [&str; 6] = ["wold", "lowerbound", "thm26", "thm35", "thm39", "example"];

/// Operations each suite exercises.
pub fn suite_operations(name: &str) -> &'static [&'static str] {
    match name {
        "wold" => &["wold_decompose", "wold_reconstruct", "model_space_basis"],
        "lowerbound" => &["verify_lower_bound", "select_parameters"],
        "thm26" => &[
            "unitary_U",
            "apply_series_of_operator",
            "representation_check_h2",
        ],
        "thm35" => &[
            "factor_alpha_pos",
            "invariance_check_N",
            "iterate_decomposition",
        ],
        "thm39" => &[
            "select_parameters",
            "factor_alpha_neg",
            "invariance_check_N",
        ],
        "example" => &[
            "example_section2",
            "near_invariance_check",
            "defect",
            "verify_inner_candidate",
        ],
        _ => &[],
    }
}

/// Optional overrides; every suite has defaults for the rest.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub blaschke: Option<FiniteBlaschke>,
    pub alpha: Option<f64>,
    pub s: Option<f64>,
    pub degree: Option<usize>,
    pub levels: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    pub trials: Option<usize>,
}

impl SuiteConfig {
    fn blaschkes(&self, defaults: Vec<FiniteBlaschke>) -> Vec<FiniteBlaschke> {
        match &self.blaschke {
            Some(b) => vec![b.clone()],
            None => defaults,
        }
    }

    fn alphas(&self, defaults: &[f64]) -> Vec<f64> {
        match self.alpha {
            Some(a) => vec![a],
            None => defaults.to_vec(),
        }
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn phi_squared(a: f64) -> FiniteBlaschke {
    FiniteBlaschke::from_zeros(&[c(a, 0.0), c(a, 0.0)]).expect("valid zeros")
}

fn random_series(g: &mut Lcg64, degree: usize) -> TruncatedSeries {
    TruncatedSeries::new(g.complex_vec(degree + 1)).expect("finite coefficients")
}

/// A combination of `vs` with coefficients drawn from `g`.
pub fn random_element(generators: &[CVector], g: &mut Lcg64) -> CVector {
    generators
        .iter()
        .fold(CVector::zeros(generators[0].len()), |acc, v| {
            acc + v * g.complex()
        })
}

pub fn run_suite(name: &str, cfg: &SuiteConfig) -> Result<ScenarioReport> {
    match name {
        "wold" => wold_suite(cfg),
        "lowerbound" => lower_bound_suite(cfg),
        "thm26" => thm26_suite(cfg),
        "thm35" => thm35_suite(cfg),
        "thm39" => thm39_suite(cfg),
        "example" => example_suite(cfg),
        other => invalid(format!(
            "unknown suite {other:?}; known: {}",
            SUITES.join(", ")
        )),
    }
}

/// Every suite, merged into one report.
pub fn run_all(cfg: &SuiteConfig) -> Result<ScenarioReport> {
    let mut all = ScenarioReport::new(json!({ "suites": SUITES, "config": cfg }));
    for name in SUITES {
        let r = run_suite(name, cfg)?;
        for mut check in r.checks {
            check.name = format!("{name}/{}", check.name);
            all.push(check);
        }
    }
    Ok(all)
}

fn wold_suite(cfg: &SuiteConfig) -> Result<ScenarioReport> {
    let degree = cfg.degree.unwrap_or(64);
    let trials = cfg.trials.unwrap_or(100);
    let bs = cfg.blaschkes(vec![
        FiniteBlaschke::z_power(2)?,
        FiniteBlaschke::from_zeros(&[c(0.5, 0.0), c(0.0, -0.3)])?,
        FiniteBlaschke::new(1, vec![c(0.4, 0.0)], true)?,
    ]);
    let mut report = ScenarioReport::new(
        json!({ "degree": degree, "trials": trials, "seed": cfg.seed, "blaschke": bs }),
    );
    for (bi, b) in bs.iter().enumerate() {
        let (mut recon, mut parseval) = (0.0f64, 0.0f64);
        for i in 0..trials {
            let mut g = Lcg64::for_trial(cfg.seed, i as u64);
            let f = random_series(&mut g, degree * 3 / 4).resize(degree);
            let w = wold_decompose_auto(&f, b)?;
            let back = w.reconstruct(degree)?;
            let fn2 = f.norm_h2();
            recon = recon.max(back.sub(&f).norm_h2() / fn2);
            let levels: f64 = w.level_norms().iter().map(|x| x * x).sum();
            parseval =
                parseval.max((levels + w.remainder().powi(2) - fn2 * fn2).abs() / (fn2 * fn2));
        }
        report.push(Check::below(
            format!("round_trip[{bi}]"),
            recon,
            1e-9,
            json!({ "blaschke": b }),
        ));
        report.push(Check::below(
            format!("parseval[{bi}]"),
            parseval,
            1e-9,
            json!({ "blaschke": b }),
        ));
        let basis = b.model_space_basis(degree)?;
        let mut gram = 0.0f64;
        for (i, x) in basis.basis().iter().enumerate() {
            for (j, y) in basis.basis().iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                gram = gram.max((x.inner_h2(y) - want).norm());
            }
        }
        report.push(Check::below(
            format!("basis_orthonormal[{bi}]"),
            gram,
            1e-9,
            json!({ "dim": basis.dim() }),
        ));
    }
    Ok(report)
}

fn lower_bound_suite(cfg: &SuiteConfig) -> Result<ScenarioReport> {
    let degree = cfg.degree.unwrap_or(48);
    let trials = cfg.trials.unwrap_or(100);
    let bs = cfg.blaschkes(vec![FiniteBlaschke::z_power(2)?, phi_squared(0.4)]);
    let alphas = cfg.alphas(&[0.0, 0.5, 1.0, -1.0, -0.5]);
    let mut report = ScenarioReport::new(
        json!({ "degree": degree, "trials": trials, "seed": cfg.seed, "alphas": alphas }),
    );
    for (bi, b) in bs.iter().enumerate() {
        for &alpha in &alphas {
            let (spec, params) = if alpha >= 0.0 {
                (NormSpec::wold_one(alpha, b.clone())?, None)
            } else {
                let p = select_parameters(b, alpha, cfg.s.unwrap_or_else(|| suggest_s(b)))?;
                (NormSpec::wold_two(alpha, p.n, b.clone())?, Some(p))
            };
            let r = verify_lower_bound(b, &spec, trials, cfg.seed, degree)?;
            let name = format!("lower_bound[{bi}, alpha={alpha}]");
            let slack = r.min_ratio - r.gamma;
            report.push(Check::new(
                name,
                r.pass,
                (-slack).max(0.0),
                json!({ "gamma": r.gamma, "min_ratio": r.min_ratio, "witness_ratio": r.witness_ratio, "parameters": params }),
            ));
            if r.witness_is_tight {
                report.push(Check::below(
                    format!("tight_witness[{bi}, alpha={alpha}]"),
                    (r.witness_ratio - r.gamma).abs(),
                    1e-9,
                    json!({ "witness_ratio": r.witness_ratio, "gamma": r.gamma }),
                ));
            }
        }
    }
    Ok(report)
}

fn thm26_suite(cfg: &SuiteConfig) -> Result<ScenarioReport> {
    let degree = cfg.degree.unwrap_or(64);
    let trials = cfg.trials.unwrap_or(50);
    let bs = cfg.blaschkes(vec![FiniteBlaschke::z_power(2)?, phi_squared(0.4)]);
    let mut report =
        ScenarioReport::new(json!({ "degree": degree, "trials": trials, "seed": cfg.seed }));
    for (bi, b) in bs.iter().enumerate() {
        let u = unitary_u(b, degree, None)?;
        let amb = Ambient::h2(degree);
        let t = mult_operator(b, &amb)?;
        let mut worst = 0.0f64;
        for i in 0..trials {
            let mut g = Lcg64::for_trial(cfg.seed, i as u64);
            let gs = random_series(&mut g, degree / 8);
            let h = random_series(&mut g, degree / 8);
            let ug = u.forward_series(&gs)?;
            let lhs = u.backward_series(&ug.mul_scalar(&h, ug.degree() + h.degree()))?;
            let rhs = apply_series_of_operator(&[h], &t, &[amb.embed(&gs)])?;
            worst = worst.max((amb.embed(&lhs) - rhs).norm());
        }
        report.push(Check::below(
            format!("fug[{bi}]"),
            worst,
            1e-9,
            json!({ "blaschke": b, "levels": u.levels }),
        ));
    }
    let ex = example_subspace(c(0.5, 0.0), 1, 6, false)?;
    let rep = representation_check_h2(
        &ex.subspace,
        &FiniteBlaschke::z_power(2)?,
        5,
        Some(ex.natural_g0.clone()),
    )?;
    report.push(Check::below(
        "representation_isometry",
        rep.isometry_defect,
        1e-8,
        json!({ "l": rep.l }),
    ));
    report.push(Check::below(
        "representation_sstar",
        rep.sstar_invariance_residual,
        1e-8,
        json!({}),
    ));
    Ok(report)
}

fn thm35_suite(cfg: &SuiteConfig) -> Result<ScenarioReport> {
    let trials = cfg.trials.unwrap_or(100);
    let even = cfg.levels.unwrap_or(6);
    let bs = cfg.blaschkes(vec![FiniteBlaschke::z_power(2)?]);
    let alphas = cfg.alphas(&[0.0, 0.5, 1.0]);
    let mut report = ScenarioReport::new(
        json!({ "trials": trials, "seed": cfg.seed, "even": even, "alphas": alphas }),
    );
    for (bi, b) in bs.iter().enumerate() {
        let ex = example_type_subspace(b, c(0.5, 0.0), 1, even, NormSpec::h2())?;
        for &alpha in &alphas {
            let fac = Factorizer::alpha_pos(&ex.subspace, b, alpha)?;
            push_factorization_checks(
                &mut report,
                &fac,
                &ex.generators,
                trials,
                cfg.seed,
                &format!("[{bi}, alpha={alpha}]"),
            )?;
        }
    }
    Ok(report)
}

fn thm39_suite(cfg: &SuiteConfig) -> Result<ScenarioReport> {
    let trials = cfg.trials.unwrap_or(100);
    let even = cfg.levels.unwrap_or(6);
    let s = cfg.s.unwrap_or(0.8);
    let bs = cfg.blaschkes(vec![FiniteBlaschke::z_power(2)?, phi_squared(0.4)]);
    let alphas = cfg.alphas(&[-1.0, -0.5]);
    let mut report = ScenarioReport::new(
        json!({ "trials": trials, "seed": cfg.seed, "s": s, "even": even, "alphas": alphas }),
    );
    for (bi, b) in bs.iter().enumerate() {
        let ex = example_type_subspace(b, c(0.5, 0.0), 1, even, NormSpec::h2())?;
        for &alpha in &alphas {
            let p = select_parameters(b, alpha, s)?;
            let tag = format!("[{bi}, alpha={alpha}]");
            report.push(Check::new(
                format!("contraction{tag}"),
                p.contraction < 1.0,
                p.contraction,
                json!(p),
            ));
            let fac = Factorizer::alpha_neg(&ex.subspace, b, alpha, s)?;
            push_factorization_checks(&mut report, &fac, &ex.generators, trials, cfg.seed, &tag)?;
        }
    }
    Ok(report)
}

/// Reconstruction, coefficient bound, norm bound and invariance of `N` over
/// `trials` seeded random elements of the span of `generators`.
pub fn push_factorization_checks(
    report: &mut ScenarioReport,
    fac: &Factorizer,
    generators: &[CVector],
    trials: usize,
    seed: u64,
    tag: &str,
) -> Result<()> {
    let mut results = Vec::with_capacity(trials);
    for i in 0..trials {
        let mut g = Lcg64::for_trial(seed, i as u64);
        results.push(fac.factorize(&random_element(generators, &mut g))?);
    }
    let rel = |f: &dyn Fn(&crate::neardecomp::FactorizationResult) -> f64| {
        results.iter().map(|r| f(r) / r.h_norm).fold(0.0, f64::max)
    };
    let residual = rel(&|r| r.residual.max(r.pointwise_residual));
    let coeff_excess = results
        .iter()
        .map(|r| r.coeff_l2 - r.h_norm)
        .fold(f64::NEG_INFINITY, f64::max);
    let min_slack = results
        .iter()
        .map(|r| r.bound_slack)
        .fold(f64::INFINITY, f64::min);
    let depth = results.iter().map(|r| r.iterations).max().unwrap_or(0);
    report.push(Check::below(
        format!("reconstruction{tag}"),
        residual,
        1e-8,
        json!({ "max_depth": depth }),
    ));
    report.push(Check::new(
        format!("coefficient_bound{tag}"),
        results.iter().all(|r| r.coeff_bound_ok),
        coeff_excess.max(0.0),
        json!({ "max_excess": coeff_excess }),
    ));
    report.push(Check::new(
        format!("norm_bound{tag}"),
        results.iter().all(|r| r.bound_ok),
        (-min_slack).max(0.0),
        json!({ "min_slack": min_slack, "regime": fac.regime() }),
    ));
    let inv = fac.invariance_check(&results)?;
    report.push(Check::below(
        format!("invariance{tag}"),
        inv.max_residual,
        1e-8,
        json!({}),
    ));
    Ok(())
}

fn example_suite(cfg: &SuiteConfig) -> Result<ScenarioReport> {
    let degree = cfg.degree.unwrap_or(32);
    let mut report = ScenarioReport::new(json!({ "a": [0.5, 0.0], "degree": degree, "m": [0, 1] }));
    for m in [0usize, 1] {
        let mut ex = ExampleConfig::new(c(0.5, 0.0), m, degree);
        ex.levels = cfg.levels;
        for mut check in example_section2(&ex)?.checks {
            check.name = format!("m={m}/{}", check.name);
            report.push(check);
        }
    }
    Ok(report)
}
