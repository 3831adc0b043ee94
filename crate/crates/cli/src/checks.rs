//! Named check implementations and the suite runner.

use crate::config::{CheckRecord, ExperimentConfig, ExperimentReport};
use crate::family::generate_family;
use cosred_core::measure::RealMeasure;
use cosred_core::operator::{dalembert_residual, laplace_recover, resolvent};
use cosred_core::phillips::CalcContext;
use cosred_core::reduction::{
    bound_scan, default_alpha_schedule, default_lambda_grid, default_s_grid, eval_special,
    pv_measure_tv, pv_truncated, t_b_poisson, u_boundary, u_euler, ScanTarget, SpecialKind,
};
use cosred_core::sector::{
    compat_residual, default_strip_grid, sqrt_identification, strip_bound_fit,
    strip_identity_residual, ContourSpec, H0Function,
};
use cosred_core::transference::{conv_norm, multiplier_invariance_check, EstimateMethod};
use cosred_core::{C64, CoreError};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::f64::consts::PI;

struct CheckCtx<'a> {
    ctx: CalcContext,
    cfg: &'a ExperimentConfig,
    seed: u64,
}

impl CheckCtx<'_> {
    fn tol(&self, name: &str, default: f64) -> f64 {
        self.cfg.tolerances.get(name).copied().unwrap_or(default)
    }

    fn grid(&self, name: &str) -> Option<&Vec<Vec<f64>>> {
        self.cfg.grids.get(name)
    }
}

type CheckFn = fn(&CheckCtx) -> Result<Vec<CheckRecord>, CoreError>;

pub const CHECK_NAMES: &[&str] = &[
    "dalembert",
    "laplace",
    "homomorphism",
    "subordination",
    "group_routes",
    "bound_scan",
    "transference",
    "pv",
    "special",
    "compat",
    "multiplier",
];

fn lookup(name: &str) -> Option<CheckFn> {
    Some(match name {
        "dalembert" => check_dalembert,
        "laplace" => check_laplace,
        "homomorphism" => check_homomorphism,
        "subordination" => check_subordination,
        "group_routes" => check_group_routes,
        "bound_scan" => check_bound_scan,
        "transference" => check_transference,
        "pv" => check_pv,
        "special" => check_special,
        "compat" => check_compat,
        "multiplier" => check_multiplier,
        _ => return None,
    })
}

fn check_dalembert(c: &CheckCtx) -> Result<Vec<CheckRecord>, CoreError> {
    let tol = c.tol("dalembert", 1e-10);
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let t = rng.random_range(-20.0..20.0);
        let s = rng.random_range(-20.0..20.0);
        worst = worst.max(dalembert_residual(&c.ctx.provider, t, s));
    }
    Ok(vec![CheckRecord::measurement("dalembert", vec![], worst, tol)])
}

fn check_laplace(c: &CheckCtx) -> Result<Vec<CheckRecord>, CoreError> {
    let tol = c.tol("laplace", 1e-6);
    let default = vec![
        vec![0.5, 0.0],
        vec![1.0, 0.0],
        vec![2.0, 0.0],
        vec![1.0, 1.0],
    ];
    let grid = c.grid("laplace").cloned().unwrap_or(default);
    let mut out = Vec::new();
    for row in grid {
        let lam = C64::new(row[0], *row.get(1).unwrap_or(&0.0));
        let got = laplace_recover(&c.ctx.provider, lam)?;
        // Laplace pairing: int e^{-lambda t} Cos(t) dt = lambda (lambda^2 + A)^{-1}
        let want = resolvent(&c.ctx.generator().scale(C64::new(-1.0, 0.0)), lam * lam)?.scale(lam);
        let rel = got.distance(&want) / want.opnorm();
        out.push(CheckRecord::measurement(
            "laplace",
            vec![lam.re, lam.im],
            rel,
            tol,
        ));
    }
    Ok(out)
}

fn random_even_measure(rng: &mut ChaCha8Rng) -> RealMeasure {
    let mut mu = RealMeasure::zero();
    for _ in 0..3 {
        let loc = rng.random_range(0.2..6.0);
        let w = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let pair = RealMeasure::even_pair(loc, w);
        mu = RealMeasure::from_atoms(
            mu.atoms.iter().chain(pair.atoms.iter()).cloned().collect(),
        );
    }
    mu
}

fn check_homomorphism(c: &CheckCtx) -> Result<Vec<CheckRecord>, CoreError> {
    let tol = c.tol("homomorphism", 1e-6);
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed.wrapping_add(1));
    let mut out = Vec::new();
    for k in 0..5 {
        let mu = random_even_measure(&mut rng);
        let nu = random_even_measure(&mut rng);
        let lhs = c.ctx.apply_measure(&mu)?.matmul(&c.ctx.apply_measure(&nu)?);
        let rhs = c.ctx.apply_measure(&mu.convolve(&nu)?)?;
        out.push(CheckRecord::measurement(
            "homomorphism",
            vec![k as f64],
            lhs.distance(&rhs),
            tol,
        ));
    }
    Ok(out)
}

fn sqrt_oracle_apply(c: &CheckCtx, f: impl Fn(C64) -> C64) -> Result<cosred_core::DenseOperator, CoreError> {
    let sd = c
        .ctx
        .provider
        .spectral
        .as_ref()
        .ok_or_else(|| CoreError::Invalid("check needs a diagonalizable generator".into()))?;
    Ok(sd.apply_scalar(|l| f(C64::new(l.re.max(0.0).sqrt(), 0.0))))
}

fn check_subordination(c: &CheckCtx) -> Result<Vec<CheckRecord>, CoreError> {
    let tol = c.tol("subordination", 1e-5);
    let mut grid = Vec::new();
    for &re in &[0.1, 1.0, 10.0] {
        for &im in &[0.0, 3.0, 10.0] {
            grid.push(vec![re, im]);
        }
    }
    let grid = c.grid("subordination").cloned().unwrap_or(grid);
    let mut out = Vec::new();
    for row in grid {
        let lam = C64::new(row[0], *row.get(1).unwrap_or(&0.0));
        let got = t_b_poisson(&c.ctx, lam)?;
        let want = sqrt_oracle_apply(c, |w| (-lam * w).exp())?;
        let rel = got.distance(&want) / want.opnorm().max(1e-300);
        out.push(CheckRecord::measurement(
            "subordination",
            vec![lam.re, lam.im],
            rel,
            tol,
        ));
    }
    Ok(out)
}

fn check_group_routes(c: &CheckCtx) -> Result<Vec<CheckRecord>, CoreError> {
    let cond = c.ctx.provider.condition_number();
    let tol = c.tol("group_routes", 1e-4) * cond;
    let grid = c
        .grid("group_routes")
        .cloned()
        .unwrap_or_else(|| vec![vec![0.1], vec![1.0], vec![PI]]);
    let schedule = default_alpha_schedule();
    let mut out = Vec::new();
    for row in grid {
        let s = row[0];
        let boundary = u_boundary(&c.ctx, s, &schedule)?;
        let euler = u_euler(&c.ctx, s)?;
        let oracle = sqrt_oracle_apply(c, |w| (C64::new(0.0, -s) * w).exp())?;
        let worst = boundary
            .distance(&euler)
            .max(boundary.distance(&oracle))
            .max(euler.distance(&oracle));
        out.push(CheckRecord::measurement("group_routes", vec![s], worst, tol));
    }
    Ok(out)
}

fn check_bound_scan(c: &CheckCtx) -> Result<Vec<CheckRecord>, CoreError> {
    let tol = c.tol("bound_scan", 1e-6);
    let mut lambda = default_lambda_grid();
    // the subordination kernel needs Re(lambda) clear of zero
    lambda.retain(|l| l.re >= 1.2e-4);
    let s_grid = default_s_grid();
    let mut out = Vec::new();
    for (idx, target) in [ScanTarget::SemigroupOverLambda, ScanTarget::GroupOverS]
        .into_iter()
        .enumerate()
    {
        let report = bound_scan(&c.ctx, target, &lambda, &s_grid, &[])?;
        let mut rec = CheckRecord::comparison(
            "bound_scan",
            vec![idx as f64],
            report.supremum,
            report.comparison,
            tol,
        );
        rec.pass = report.satisfied;
        out.push(rec);
        if c.ctx.provider.bound_m == 1.0 {
            // unitary diagonalization: the scan supremum must sit at 1
            out.push(CheckRecord::measurement(
                "bound_scan",
                vec![idx as f64, 1.0],
                (report.supremum - 1.0).abs(),
                tol,
            ));
        }
    }
    Ok(out)
}

fn check_transference(c: &CheckCtx) -> Result<Vec<CheckRecord>, CoreError> {
    let tol = c.tol("transference", 1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed.wrapping_add(2));
    let m = c.ctx.provider.bound_m;
    let mut out = Vec::new();
    for k in 0..20 {
        let mu = random_even_measure(&mut rng);
        let norm = c.ctx.apply_measure(&mu)?.opnorm();
        let exact = conv_norm(&mu, 2.0, 1, EstimateMethod::SupnormExact)?
            .exact
            .expect("supnorm route is exact at p = 2");
        out.push(CheckRecord::comparison(
            "transference",
            vec![k as f64],
            norm,
            5.0 * m * m * exact,
            tol,
        ));
    }
    Ok(out)
}

fn check_pv(c: &CheckCtx) -> Result<Vec<CheckRecord>, CoreError> {
    let tol = c.tol("pv", 2e-3);
    let grid = c.grid("pv").cloned().unwrap_or_else(|| vec![vec![0.6]]);
    let mut out = Vec::new();
    for row in grid {
        let s = row[0];
        let got = pv_truncated(&c.ctx, s, 1e-3, 1e3)?;
        let want = sqrt_oracle_apply(c, |w| C64::new((s * w.re).sin(), 0.0))?;
        out.push(CheckRecord::measurement(
            "pv",
            vec![s],
            got.distance(&want),
            tol,
        ));
    }
    Ok(out)
}

fn check_special(c: &CheckCtx) -> Result<Vec<CheckRecord>, CoreError> {
    let mut out = vec![
        CheckRecord::measurement(
            "special",
            vec![1.0, 1e4],
            (eval_special(SpecialKind::H, &[1e4]) - PI / 2.0).abs(),
            c.tol("special", 2e-4),
        ),
        CheckRecord::measurement(
            "special",
            vec![2.0, 0.0],
            (eval_special(SpecialKind::F, &[0.0]) + PI / 2.0).abs(),
            1e-10,
        ),
    ];
    for &cc in &[0.5, 1.0, 2.0] {
        out.push(CheckRecord::measurement(
            "special",
            vec![3.0, cc],
            (pv_measure_tv(cc) - 2.0 / cc).abs(),
            1e-8,
        ));
    }
    Ok(out)
}

fn check_compat(c: &CheckCtx) -> Result<Vec<CheckRecord>, CoreError> {
    let cond = c.ctx.provider.condition_number();
    let spec = ContourSpec::default();
    let mut out = Vec::new();
    out.push(CheckRecord::measurement(
        "compat",
        vec![1.0],
        compat_residual(&c.ctx, &H0Function::witness_resolvent_gap(), &spec)?,
        c.tol("compat", 1e-6),
    ));
    let ident = sqrt_identification(&c.ctx, &spec)?;
    out.push(CheckRecord::measurement(
        "compat",
        vec![2.0],
        ident
            .b_square_vs_a
            .max(ident.b_vs_oracle)
            .max(ident.replay_residual),
        c.tol("compat", 1e-6) * cond,
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed.wrapping_add(3));
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let lam = C64::new(rng.random_range(-2.0..2.0), rng.random_range(0.2..2.0));
        worst = worst.max(strip_identity_residual(&c.ctx, lam)?);
    }
    out.push(CheckRecord::measurement(
        "compat",
        vec![3.0],
        worst,
        1e-10 * cond,
    ));
    let (mt, mp, m) = strip_bound_fit(&c.ctx, &default_strip_grid())?;
    out.push(CheckRecord::comparison(
        "compat",
        vec![4.0],
        mt,
        mp + 2.0 * m,
        1e-6,
    ));
    Ok(out)
}

fn check_multiplier(c: &CheckCtx) -> Result<Vec<CheckRecord>, CoreError> {
    let tol = c.tol("multiplier", 1e-6);
    let _ = &c.ctx; // operator-independent: the multiplier side lives on the line
    let pairs: [(RealMeasure, f64); 3] = [
        (RealMeasure::even_pair(1.0, C64::new(1.0, 0.0)), 1.0),
        (RealMeasure::exp_decay(0.5, 1e-3), 2.0),
        (RealMeasure::exp_decay(2.0, 1e-3), 0.5),
    ];
    let mut out = Vec::new();
    for (k, (mu, expected)) in pairs.into_iter().enumerate() {
        let est = conv_norm(&mu, 2.0, 1, EstimateMethod::SupnormExact)?;
        out.push(CheckRecord::measurement(
            "multiplier",
            vec![k as f64],
            (est.exact.unwrap() - expected).abs(),
            tol,
        ));
    }
    // dilation/modulation invariance of the symbol supremum
    let m = |t: f64| C64::new(1.0 / (1.0 + t * t), 0.0);
    let (base, moved) = multiplier_invariance_check(m, 0.7, 2.0, 0.3, 50.0);
    out.push(CheckRecord::measurement(
        "multiplier",
        vec![3.0],
        (base.exact.unwrap() - moved.exact.unwrap()).abs(),
        tol,
    ));
    Ok(out)
}

/// Validate config without running anything. Unknown names are config errors.
pub fn validate(config: &ExperimentConfig) -> Result<(), String> {
    for name in &config.suite {
        if lookup(name).is_none() {
            return Err(format!(
                "unknown check '{name}'; registered: {}",
                CHECK_NAMES.join(", ")
            ));
        }
    }
    Ok(())
}

fn run_one(config: &ExperimentConfig, name: &str, seed: u64) -> Vec<CheckRecord> {
    let f = lookup(name).expect("validated before dispatch");
    let started = std::time::Instant::now();
    let mut records = match generate_family(&config.family)
        .map(CalcContext::new)
        .and_then(|ctx| {
            f(&CheckCtx {
                ctx,
                cfg: config,
                seed,
            })
        }) {
        Ok(r) => r,
        Err(e) => vec![CheckRecord::failure(name, e.to_string())],
    };
    let wall = started.elapsed().as_secs_f64() * 1e3;
    for r in &mut records {
        r.wall_ms = wall;
    }
    records
}

/// Execute the suite in declared order. `jobs` > 1 runs checks concurrently;
/// record order is still the declared order. With `strict`, scheduling stops
/// after the first check that reports an execution error.
pub fn run_suite(config: &ExperimentConfig, jobs: usize, strict: bool) -> Result<ExperimentReport, String> {
    validate(config)?;
    let seed = config.seed;
    let n = config.suite.len();
    let mut slots: Vec<Option<Vec<CheckRecord>>> = vec![None; n];
    if jobs <= 1 || n <= 1 {
        for (i, name) in config.suite.iter().enumerate() {
            let recs = run_one(config, name, seed);
            let errored = recs.iter().any(|r| r.error.is_some());
            slots[i] = Some(recs);
            if strict && errored {
                break;
            }
        }
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let out = std::sync::Mutex::new(&mut slots);
        std::thread::scope(|scope| {
            for _ in 0..jobs.min(n) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if i >= n {
                        break;
                    }
                    let recs = run_one(config, &config.suite[i], seed);
                    let errored = recs.iter().any(|r| r.error.is_some());
                    out.lock().unwrap()[i] = Some(recs);
                    if strict && errored {
                        next.store(n, std::sync::atomic::Ordering::SeqCst);
                        break;
                    }
                });
            }
        });
    }
    let mut versions = BTreeMap::new();
    versions.insert("cosred".to_string(), env!("CARGO_PKG_VERSION").to_string());
    Ok(ExperimentReport {
        config: config.clone(),
        records: slots.into_iter().flatten().flatten().collect(),
        versions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::FamilySpec;

    fn base_config(suite: &[&str]) -> ExperimentConfig {
        ExperimentConfig {
            family: FamilySpec::Scalar { a: 4.0 },
            suite: suite.iter().map(|s| s.to_string()).collect(),
            grids: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            seed: 7,
            output: None,
        }
    }

    #[test]
    fn dalembert_scalar_passes_tightly() {
        let report = run_suite(&base_config(&["dalembert"]), 1, false).unwrap();
        assert_eq!(report.records.len(), 1);
        assert!(report.records[0].pass);
        assert!(report.records[0].value < 1e-12);
    }

    #[test]
    fn empty_suite_is_empty_report() {
        let report = run_suite(&base_config(&[]), 1, false).unwrap();
        assert!(report.records.is_empty() && report.all_pass());
    }

    #[test]
    fn unknown_check_is_config_error() {
        let mut cfg = base_config(&["dalembert"]);
        cfg.suite.push("no_such_check".into());
        assert!(run_suite(&cfg, 1, false).is_err());
    }

    #[test]
    fn transference_table_on_similarity_family() {
        let mut cfg = base_config(&["transference"]);
        cfg.family = FamilySpec::Similarity {
            spectrum: vec![1.0, 4.0],
            cond_target: 10.0,
        };
        let report = run_suite(&cfg, 1, false).unwrap();
        assert_eq!(report.records.len(), 20);
        assert!(report.all_pass());
    }

    #[test]
    fn seeded_reruns_are_identical() {
        let cfg = base_config(&["dalembert", "homomorphism", "special"]);
        let a = run_suite(&cfg, 1, false).unwrap();
        let b = run_suite(&cfg, 2, false).unwrap();
        let strip = |r: &ExperimentReport| {
            let mut v = serde_json::to_value(r).unwrap();
            for rec in v["records"].as_array_mut().unwrap() {
                rec["wall_ms"] = 0.0.into();
            }
            serde_json::to_string(&v).unwrap()
        };
        assert_eq!(strip(&a), strip(&b));
    }

    #[test]
    fn laplace_and_special_pass() {
        let report = run_suite(&base_config(&["laplace", "special"]), 1, false).unwrap();
        assert!(report.all_pass(), "{:?}", report.records);
    }
}
