//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use openpop_core::diagnostics::{lambda, sensitivity_compare, uniform_demo, weighted_pvalue, SensitivityOptions, TestStatistic};
use openpop_core::inference::{default_engine, fit_conditional_posterior};
use openpop_core::modelspace::{apply_prior_ratio_rule, weights_from_predictive, weights_from_ratios};
use openpop_core::simulate::{run_coverage_experiment, weight_concentration_experiment, CoverageConfig, TrueDistSpec};
use openpop_core::{
    analyze, ComponentPrior, FamilySpec, FitSettings, ModelEntry, PopulationSpaceModel, PriorSpec, QuantitySpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

/// Complementary error function, Abramowitz and Stegun 7.1.26 (|error| < 1.5e-7).
fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    let t = 1.0 / (1.0 + 0.327_591_1 * x);
    let poly = t * (0.254_829_592 + t * (-0.284_496_736 + t * (1.421_413_741 + t * (-1.453_152_027 + t * 1.061_405_429))));
    poly * (-x * x).exp()
}

fn phi(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|k| f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 }).sum();
    h / 3.0 * (f(a) + inner + f(b))
}

fn conjugate() -> (FamilySpec, PriorSpec, openpop_core::Dataset) {
    let f = FamilySpec::normal();
    let data = f.sample(&f.params(&[2.0, 1.0]).unwrap(), 50, 0).unwrap();
    let fam = FamilySpec::normal().with_fixed("sigma", 1.0).unwrap();
    let prior = PriorSpec::new([("mu", ComponentPrior::Normal { mean: 0.0, sd: 10.0 })]);
    (fam, prior, data)
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let (fam, prior, data) = conjugate();
    let model = PopulationSpaceModel::new(vec![ModelEntry::new(fam, 1.0, prior)]).unwrap();
    let a = analyze(default_engine(), &model, &data, &FitSettings::default()).unwrap();
    let mp = a.mixture(&model, QuantitySpec::Mean).unwrap();
    let s = mp.summarize(0.95).unwrap();
    let elapsed = start.elapsed();

    let prec = data.len() as f64 + 1.0 / 100.0;
    let m = data.values().iter().sum::<f64>() / prec;
    let sd = prec.recip().sqrt();
    let z = 1.959_963_984_540_054;
    let law = mp.combined();
    let ks = law.atoms().iter().map(|&x| (law.cdf(x) - phi((x - m) / sd)).abs()).fold(0.0, f64::max);
    let dm = (s.mean - m).abs();
    let dlo = (s.lower - (m - z * sd)).abs();
    let dhi = (s.upper - (m + z * sd)).abs();
    check(
        dm < 1e-4 && dlo < 1e-3 && dhi < 1e-3 && ks < 0.005 && elapsed < Duration::from_secs(1),
        format!("|mean err| {dm:.2e}, interval err ({dlo:.2e}, {dhi:.2e}), KS {ks:.2e}, {elapsed:.2?}"),
    )
}

fn two_family_model() -> PopulationSpaceModel {
    PopulationSpaceModel::new(vec![
        ModelEntry::new(FamilySpec::normal().with_fixed("sigma", 1.0).unwrap(), 0.5, PriorSpec::new([("mu", ComponentPrior::Normal { mean: 0.0, sd: 1.0 })])),
        ModelEntry::new(FamilySpec::student_t(4.0).unwrap().with_fixed("scale", 1.0).unwrap(), 0.5, PriorSpec::new([("location", ComponentPrior::Normal { mean: 0.0, sd: 1.0 })])),
    ])
    .unwrap()
}

fn criterion_2() -> Verdict {
    let model = two_family_model();
    let ln2 = std::f64::consts::LN_2;
    let w = weights_from_predictive(&model, &[ln2, 0.0]).unwrap();
    let shifted = weights_from_predictive(&model, &[ln2 + 1000.0, 1000.0]).unwrap();
    let err = (w.weights()[0] - 2.0 / 3.0).abs().max((w.weights()[1] - 1.0 / 3.0).abs());
    let shift_gap = w.weights().iter().zip(shifted.weights()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let exact = w.weights() == shifted.weights();
    check(
        err < 1e-12 && exact,
        format!("weights {:?} (err {err:.1e}); +1000 shift equal: {exact} (max gap {shift_gap:.1e})", w.weights()),
    )
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = 0;
    for _ in 0..1000 {
        let m = rng.random_range(2..=8);
        let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let entries = raw
            .iter()
            .enumerate()
            .map(|(k, w)| ModelEntry::new(FamilySpec::normal().with_fixed("sigma", 1.0).unwrap().with_id(format!("f{k}")), w / total, PriorSpec::new([("mu", ComponentPrior::Normal { mean: 0.0, sd: 1.0 })])))
            .collect();
        let model = PopulationSpaceModel::new(entries).unwrap();
        let anchor = format!("f{}", rng.random_range(0..m));
        let el = apply_prior_ratio_rule(&model, &anchor).unwrap();
        let w = weights_from_ratios(&model, &el).unwrap();
        if w.weights() != model.priors().as_slice() {
            failures += 1;
        }
    }
    let elapsed = start.elapsed();
    check(failures == 0 && elapsed < Duration::from_secs(1), format!("{failures}/1000 mismatches, {elapsed:.2?}"))
}

fn criterion_4() -> Verdict {
    let d = uniform_demo(1.0, 1.0 - 1e-7, 0.5).unwrap();
    check(
        d.p_value < 1e-6 && (d.p_value - 1e-7).abs() < 1e-12 && d.null_density == 0.5 && d.density_is_max && d.max_likelihood_ratio <= 1.0,
        format!(
            "p = {:.6e}, null density {} (max {}), max likelihood ratio {}",
            d.p_value, d.null_density, d.max_density, d.max_likelihood_ratio
        ),
    )
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let ln = FamilySpec::lognormal();
    let data = ln.sample(&ln.params(&[0.0, 0.5]).unwrap(), 200, 1).unwrap();
    let prior = PriorSpec::new([
        ("mean", ComponentPrior::LogNormal { meanlog: 0.0, sdlog: 1.0 }),
        ("variance", ComponentPrior::LogNormal { meanlog: 0.0, sdlog: 2.0 }),
    ]);
    let model = PopulationSpaceModel::new(vec![ModelEntry::new(
        ln,
        1.0,
        PriorSpec::new([
            ("meanlog", ComponentPrior::Normal { mean: 0.0, sd: 10.0 }),
            ("sdlog", ComponentPrior::LogNormal { meanlog: 0.0, sdlog: 1.0 }),
        ]),
    )])
    .unwrap();
    let opts = SensitivityOptions::default();
    let g = FamilySpec::gamma();
    let mean = sensitivity_compare(&model, "lognormal", &g, QuantitySpec::Mean, &data, &prior, &opts).unwrap();
    let tail = sensitivity_compare(&model, "lognormal", &g, QuantitySpec::quantile(0.99).unwrap(), &data, &prior, &opts).unwrap();
    let elapsed = start.elapsed();
    check(
        mean.ks < 0.1 && tail.ks > mean.ks && elapsed < Duration::from_secs(10),
        format!("KS(mean) {:.4}, KS(quantile 0.99) {:.4}, {elapsed:.2?}", mean.ks, tail.ks),
    )
}

fn criterion_6() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let w: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
    let constant = lambda(&vec![0.3; w.len()], &w).unwrap();
    let alphas: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
    let scaled: Vec<f64> = w.iter().map(|x| 7.3 * x).collect();
    let rescale_gap = (lambda(&alphas, &w).unwrap() - lambda(&alphas, &scaled).unwrap()).abs();

    let (fam, prior, data) = conjugate();
    let post = fit_conditional_posterior(&fam, &prior, &data, &FitSettings::default()).unwrap();
    let r = weighted_pvalue(&fam, &post, &data, TestStatistic::SampleMean).unwrap();
    let n = data.len() as f64;
    let ybar = data.values().iter().sum::<f64>() / n;
    let m = ybar * n / (n + 0.01);
    let sd = (n + 0.01).recip().sqrt();
    let integrand = |mu: f64| {
        let alpha = erfc(((ybar - mu) * n.sqrt()).abs() / std::f64::consts::SQRT_2);
        alpha * (-0.5 * ((mu - m) / sd).powi(2)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
    };
    let oracle = simpson(integrand, m - 12.0 * sd, ybar, 40_000) + simpson(integrand, ybar, m + 12.0 * sd, 40_000);
    let quad_gap = (r.lambda - oracle).abs();
    let elapsed = start.elapsed();
    check(
        (constant - 0.3).abs() < 1e-12 && rescale_gap < 1e-12 && quad_gap < 1e-4 && elapsed < Duration::from_secs(1),
        format!(
            "constant {:.1e}, rescale gap {rescale_gap:.1e}, quadrature lambda {:.6} vs {oracle:.6} (gap {quad_gap:.1e}), {elapsed:.2?}",
            (constant - 0.3).abs(),
            r.lambda
        ),
    )
}

fn criterion_7() -> Verdict {
    let start = Instant::now();
    let f = FamilySpec::normal();
    let model = PopulationSpaceModel::new(vec![ModelEntry::new(
        f.clone(),
        1.0,
        PriorSpec::new([
            ("mu", ComponentPrior::Normal { mean: 0.0, sd: 10.0 }),
            ("sigma", ComponentPrior::LogNormal { meanlog: 0.0, sdlog: 1.5 }),
        ]),
    )])
    .unwrap();
    let cfg = CoverageConfig {
        quantity: QuantitySpec::Mean,
        truth: TrueDistSpec::family(f.clone(), f.params(&[1.0, 2.0]).unwrap()).unwrap(),
        n: 100,
        reps: 500,
        level: 0.9,
        seed: 2,
        settings: FitSettings::default(),
        oracle_draws: 0,
    };
    let t = run_coverage_experiment(default_engine(), &model, &cfg).unwrap();
    let elapsed = start.elapsed();
    let mixture = &t.methods[0];
    let band = 3.0 * (0.9f64 * 0.1 / 500.0).sqrt();
    check(
        mixture.valid == 500 && (mixture.rate - 0.9).abs() <= band && elapsed < Duration::from_secs(120),
        format!("coverage {:.3} over {} reps (band 0.9 +/- {band:.3}), {elapsed:.1?}", mixture.rate, mixture.valid),
    )
}

fn criterion_8() -> Verdict {
    let start = Instant::now();
    let g = FamilySpec::gamma();
    let model = PopulationSpaceModel::new(vec![
        ModelEntry::new(
            g.clone(),
            0.5,
            PriorSpec::new([
                ("shape", ComponentPrior::LogNormal { meanlog: 0.0, sdlog: 2.0 }),
                ("scale", ComponentPrior::LogNormal { meanlog: 0.0, sdlog: 2.0 }),
            ]),
        ),
        ModelEntry::new(
            FamilySpec::lognormal(),
            0.5,
            PriorSpec::new([
                ("meanlog", ComponentPrior::Normal { mean: 0.0, sd: 10.0 }),
                ("sdlog", ComponentPrior::LogNormal { meanlog: 0.0, sdlog: 2.0 }),
            ]),
        ),
    ])
    .unwrap();
    let truth = TrueDistSpec::family(g.clone(), g.params(&[2.0, 2.0]).unwrap()).unwrap();
    let t = weight_concentration_experiment(default_engine(), &model, &truth, &[25, 100, 400], 200, 3, &FitSettings::default())
        .unwrap();
    let elapsed = start.elapsed();
    let w: Vec<f64> = t.rows.iter().map(|r| r.mean_weights[0]).collect();
    check(
        w.windows(2).all(|p| p[1] > p[0]) && elapsed < Duration::from_secs(180),
        format!("mean gamma weight at n = 25, 100, 400: {w:.4?}, {elapsed:.1?}"),
    )
}

fn demo(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../demo").join(name)
}

/// Report and CSV bytes of one CLI invocation.
fn invoke(args: &[String], threads: Option<&str>, csv: Option<&Path>) -> Result<(Vec<u8>, Vec<u8>), String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_openpop"));
    cmd.args(args).env_remove("OPENPOP_THREADS");
    if let Some(t) = threads {
        cmd.env("OPENPOP_THREADS", t);
    }
    if let Some(p) = csv {
        cmd.arg("--csv").arg(p);
    }
    let out = cmd.output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    let table = csv.map(|p| std::fs::read(p).unwrap_or_default()).unwrap_or_default();
    Ok((out.stdout, table))
}

fn criterion_9() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let skewed = demo("skewed.json").display().to_string();
    let coverage = dir.path().join("coverage.json");
    let text = std::fs::read_to_string(demo("coverage.json")).unwrap().replace("\"reps\": 20", "\"reps\": 6");
    std::fs::write(&coverage, &text).unwrap();
    let concentration = dir.path().join("concentration.json");
    let text = std::fs::read_to_string(demo("coverage.json")).unwrap().replace(
        r#""truth": {"normal_mixture": {"weights": [0.7, 0.3], "means": [0.0, 3.0], "sds": [1.0, 2.0]}}"#,
        r#""truth": {"family": {"family": "normal", "params": {"mu": 0.0, "sigma": 1.0}}}, "schedule": [20, 40]"#,
    );
    std::fs::write(&concentration, text.replace("\"coverage\"", "\"concentration\"").replace("\"reps\": 20", "\"reps\": 4")).unwrap();

    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let cases: Vec<(Vec<String>, bool)> = vec![
        (s(&["fit", "-c", &skewed]), false),
        (s(&["weights", "-c", &skewed, "--source", "elicited"]), false),
        (s(&["quantity", "-c", &skewed, "-q", "quantile:0.99"]), true),
        (s(&["pvalue", "-c", &skewed]), true),
        (s(&["sensitivity", "-c", &skewed]), false),
        (s(&["simulate", "-c", coverage.to_str().unwrap()]), true),
        (s(&["simulate", "-c", concentration.to_str().unwrap()]), true),
    ];
    let mut mismatched = Vec::new();
    for (args, with_csv) in &cases {
        let mut seen = Vec::new();
        for (k, threads) in [None, Some("1"), Some("8"), Some("1"), Some("8")].into_iter().enumerate() {
            let csv = with_csv.then(|| dir.path().join(format!("t{k}.csv")));
            match invoke(args, threads, csv.as_deref()) {
                Ok(r) => seen.push(r),
                Err(e) => return check(false, e),
            }
        }
        if !seen.windows(2).all(|w| w[0] == w[1]) {
            mismatched.push(args[0].clone());
        }
    }
    check(
        mismatched.is_empty(),
        format!("{} invocations x 5 runs (OPENPOP_THREADS unset, 1, 8); differing: {mismatched:?}", cases.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("conjugate oracle", criterion_1),
        ("predictive weight arithmetic", criterion_2),
        ("prior-ratio rule round trip", criterion_3),
        ("uniform counterexample", criterion_4),
        ("CLT sensitivity ordering", criterion_5),
        ("weighted P value properties", criterion_6),
        ("calibrated coverage", criterion_7),
        ("weight concentration", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let v = f();
        failed += usize::from(!v.pass);
        println!("{} criterion {} ({name}): {}", if v.pass { "PASS" } else { "FAIL" }, k + 1, v.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
