//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `cargo test -p homsde-cli --test acceptance`;
//! add `-- --nocapture` for the per-criterion detail).
//!
//! The criteria are property-based and synthetic-recovery checks; nothing
//! here depends on proprietary market data.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use homsde::calibrate::fit_pipeline;
use homsde::config::PipelineConfig;
use homsde::forecast::compare_models;
use homsde::gof::{ad_lognormal, ks_lognormal};
use homsde::model::{HistoryWindow, ModelKind, ModelParams};
use homsde::noise::derive_seed;
use homsde::sim::{resume_simulation, simulate_paths, SimConfig};
use homsde::synthetic;
use homsde::SearchBox;
use rand::{Rng, SeedableRng};
use sha2::{Digest, Sha256};

fn report(criterion: &str, pass: bool, detail: &str) {
    println!("{}: criterion {criterion}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {criterion} failed: {detail}");
}

/// Criterion 1: the full pipeline recovers (a, b, sigma) within 15% relative
/// error and tau within +-1 on 2000-point synthetic data with
/// (a=0.2, b=100, sigma=0.01, tau=5), each run under 60 s, for at least
/// 4 of 5 fixed seeds.
#[test]
fn criterion_1_synthetic_parameter_recovery() {
    let truth = ModelParams::hom(0.2, 100.0, 0.01, 5).unwrap();
    let mut passes = 0;
    let mut details = Vec::new();
    for seed in 1..=5u64 {
        let started = Instant::now();
        let series = synthetic::hom_series(&truth, 2000, seed).unwrap();
        let config = PipelineConfig { history_len: 50, ..Default::default() };
        let fit = fit_pipeline(&series, &config).unwrap().fit;
        let elapsed = started.elapsed();
        let p = fit.params;
        let ok = (p.a - truth.a).abs() / truth.a < 0.15
            && (p.b - truth.b).abs() / truth.b < 0.15
            && (p.sigma - truth.sigma).abs() / truth.sigma < 0.15
            && p.tau.abs_diff(truth.tau) <= 1
            && elapsed < Duration::from_secs(60);
        passes += ok as u32;
        details.push(format!("seed {seed}: a={:.4} b={:.2} sigma={:.5} tau={} in {elapsed:.2?}", p.a, p.b, p.sigma, p.tau));
    }
    report(
        "1 (synthetic parameter recovery)",
        passes >= 4,
        &format!("{passes}/5 seeds within 15%/+-1 [{}]", details.join("; ")),
    );
}

/// Criterion 2: with tau pinned to 0, the delayed and memoryless pipelines
/// produce exactly equal log-likelihoods and bit-identical ensembles under
/// the same seed.
#[test]
fn criterion_2_tau_zero_reduction() {
    let series = synthetic::hom_series(&ModelParams::hom(0.12, 100.0, 0.012, 0).unwrap(), 1000, 77).unwrap();
    let pinned = SearchBox { tau: Some((0, 0)), ..Default::default() };
    let base = PipelineConfig { history_len: 25, bounds: pinned, ..Default::default() };

    let hom = fit_pipeline(&series, &base.with_model(ModelKind::Hom)).unwrap();
    let markov = fit_pipeline(&series, &base.with_model(ModelKind::Markov)).unwrap();

    let loglik_equal = hom.fit.final_loglik == markov.fit.final_loglik;
    let params_equal = hom.fit.params.a == markov.fit.params.a
        && hom.fit.params.b == markov.fit.params.b
        && hom.fit.params.sigma == markov.fit.params.sigma
        && hom.fit.params.tau == 0
        && markov.fit.params.tau == 0;

    let window = HistoryWindow::at(100.0).unwrap();
    let config = SimConfig::new(210, 500, derive_seed(base.seed, "forecast"));
    let hom_ens = simulate_paths(&hom.fit.params, &window, &config).unwrap();
    let markov_ens = simulate_paths(&markov.fit.params, &window, &config).unwrap();
    let ensembles_equal = hom_ens.paths == markov_ens.paths;

    report(
        "2 (tau=0 reduction)",
        loglik_equal && params_equal && ensembles_equal,
        &format!(
            "loglik equal: {loglik_equal}, params equal: {params_equal}, ensembles bit-identical: {ensembles_equal}"
        ),
    );
}

/// Criterion 3: for (a=0.05, b=100, sigma=0.01) and tau in {0, 5, 10}, the
/// time-ensemble average over steps [5000, 10000] of 200 paths lies within
/// 3 Monte-Carlo standard errors of b.
#[test]
fn criterion_3_long_run_mean() {
    let mut worst: f64 = 0.0;
    let mut details = Vec::new();
    for tau in [0usize, 5, 10] {
        let params = ModelParams::hom(0.05, 100.0, 0.01, tau).unwrap();
        let window = HistoryWindow::new(vec![100.0; tau], 100.0).unwrap();
        let ens = simulate_paths(&params, &window, &SimConfig::new(10_000, 200, 99)).unwrap();
        let path_means: Vec<f64> = ens
            .paths
            .iter()
            .map(|p| p[4999..10_000].iter().sum::<f64>() / 5001.0)
            .collect();
        let mean = path_means.iter().sum::<f64>() / path_means.len() as f64;
        let var = path_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (path_means.len() - 1) as f64;
        let se = (var / path_means.len() as f64).sqrt();
        let z = (mean - 100.0).abs() / se;
        worst = worst.max(z);
        details.push(format!("tau {tau}: mean {mean:.4} ({z:.2} SE)"));
    }
    report("3 (long-run mean)", worst <= 3.0, &format!("max deviation {worst:.2} SE [{}]", details.join("; ")));
}

/// Criterion 4: on 100 randomized synthetic datasets, every coordinate-ascent
/// trace is non-decreasing, with zero violations.
#[test]
fn criterion_4_ascent_monotonicity() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(4);
    let mut violations = 0;
    let mut runs = 0;
    for _ in 0..100 {
        let tau = rng.random_range(0..=8usize);
        let truth = ModelParams::hom(
            rng.random_range(0.01..0.3),
            rng.random_range(50.0..500.0),
            rng.random_range(0.002..0.05),
            tau,
        )
        .unwrap();
        let n = rng.random_range(120..400usize);
        let series = synthetic::hom_series(&truth, n, rng.random()).unwrap();
        let config = PipelineConfig { history_len: 10, max_sweeps: 40, ..Default::default() };
        let fit = fit_pipeline(&series, &config).unwrap().fit;
        runs += 1;
        if fit.trace.windows(2).any(|w| w[1].loglik < w[0].loglik) {
            violations += 1;
        }
        if fit.final_loglik < fit.trace[0].loglik {
            violations += 1;
        }
    }
    report("4 (ascent monotonicity)", violations == 0, &format!("{violations} violations in {runs} randomized fits"));
}

/// Twenty-line reference implementation of the five metrics, kept naive on
/// purpose and independent of the production code path.
fn oracle_metrics(forecast: &[f64], realized: &[f64]) -> (f64, f64, f64, f64, f64) {
    let n = forecast.len() as f64;
    let mut abs = Vec::new();
    let mut rel = Vec::new();
    for i in 0..forecast.len() {
        abs.push((forecast[i] - realized[i]).abs());
        rel.push((forecast[i] - realized[i]).abs() / realized[i]);
    }
    let mae = abs.iter().sum::<f64>() / n;
    let mre = 100.0 * rel.iter().sum::<f64>() / n;
    let rmse = (abs.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    let rmsr = 100.0 * (rel.iter().map(|r| r * r).sum::<f64>() / n).sqrt();
    let mxe = abs.iter().copied().fold(0.0f64, f64::max);
    (mae, mre, rmse, rmsr, mxe)
}

/// Criterion 5: error_metrics matches the brute-force oracle to 1e-12
/// relative on 1000 random forecast/realized pairs, and the orderings
/// MAE <= RMSE <= MXE and MRE <= RMSR hold in every trial.
#[test]
fn criterion_5_metric_correctness() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(5);
    let close = |got: f64, want: f64| (got - want).abs() <= 1e-12 * want.abs().max(1e-300);
    for trial in 0..1000 {
        let n = rng.random_range(1..80usize);
        let forecast: Vec<f64> = (0..n).map(|_| rng.random_range(-500.0..500.0)).collect();
        let realized: Vec<f64> = (0..n)
            .map(|_| {
                let sign = if rng.random_bool(0.1) { -1.0 } else { 1.0 };
                sign * rng.random_range(0.5..500.0)
            })
            .collect();
        let got = homsde::error_metrics(&forecast, &realized, &[]).unwrap();
        let (mae, mre, rmse, rmsr, mxe) = oracle_metrics(&forecast, &realized);
        let matches = close(got.mae, mae)
            && close(got.mre_pct, mre)
            && close(got.rmse, rmse)
            && close(got.rmsr_pct, rmsr)
            && close(got.mxe, mxe);
        let ordered = got.mae <= got.rmse * (1.0 + 1e-12)
            && got.rmse <= got.mxe * (1.0 + 1e-12)
            && got.mre_pct <= got.rmsr_pct * (1.0 + 1e-12);
        if !(matches && ordered) {
            report("5 (metric correctness)", false, &format!("trial {trial} diverged from the oracle"));
        }
    }
    report("5 (metric correctness)", true, "1000/1000 trials match the oracle to 1e-12 with orderings intact");
}

/// Criterion 6: across 200 driftless (a=0) null ensembles of 2000 paths over
/// 210 steps, KS at 5% and AD against 0.785 each reject at most 10% of the
/// time; against a log-Cauchy alternative both reject at least 95%.
#[test]
fn criterion_6_goodness_of_fit_sanity() {
    let params = ModelParams::hom(0.0, 0.0, 0.01, 0).unwrap();
    let window = HistoryWindow::at(100.0).unwrap();
    let mut ks_null = 0u32;
    let mut ad_null = 0u32;
    for seed in 0..200u64 {
        let ens = simulate_paths(&params, &window, &SimConfig::new(210, 2000, seed)).unwrap();
        let sample = ens.prices_at_step(210).unwrap();
        ks_null += (ks_lognormal(&sample, 210).unwrap().p_value.unwrap() < 0.05) as u32;
        ad_null += (ad_lognormal(&sample, 210).unwrap().statistic > 0.785) as u32;
    }

    let mut ks_alt = 0u32;
    let mut ad_alt = 0u32;
    for seed in 0..200u64 {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let sample: Vec<f64> = (0..2000)
            .map(|_| {
                let u: f64 = rng.random();
                let c = 0.05 * (std::f64::consts::PI * (u - 0.5)).tan();
                (4.6 + c.clamp(-400.0, 400.0)).exp()
            })
            .collect();
        ks_alt += (ks_lognormal(&sample, 210).unwrap().p_value.unwrap() < 0.05) as u32;
        ad_alt += (ad_lognormal(&sample, 210).unwrap().statistic > 0.785) as u32;
    }

    let pass = ks_null <= 20 && ad_null <= 20 && ks_alt >= 190 && ad_alt >= 190;
    report(
        "6 (goodness-of-fit sanity)",
        pass,
        &format!("null rejections KS {ks_null}/200, AD {ad_null}/200; log-Cauchy rejections KS {ks_alt}/200, AD {ad_alt}/200"),
    );
}

/// Criterion 7: splitting a run and resuming from the per-path tail windows
/// reproduces the uninterrupted paths bit for bit, for tau in {0, 1, 7, 50}
/// at three split points each.
#[test]
fn criterion_7_restart_consistency() {
    let mut checks = 0;
    for tau in [0usize, 1, 7, 50] {
        let params = ModelParams::hom(0.02, 100.0, 0.015, tau).unwrap();
        let history = HistoryWindow::new((0..tau).map(|i| 98.0 + 0.05 * i as f64).collect(), 100.0).unwrap();
        let horizon = 120;
        let full = simulate_paths(&params, &history, &SimConfig::new(horizon, 16, 2024)).unwrap();
        for split_at in [1usize, 40, 90] {
            let tails = full.tail_windows(&history, split_at).unwrap();
            let resumed =
                resume_simulation(&params, &tails, split_at, &SimConfig::new(horizon - split_at, 16, 2024)).unwrap();
            for (path, suffix) in full.paths.iter().zip(&resumed.paths) {
                if &path[split_at..] != suffix.as_slice() {
                    report("7 (restart consistency)", false, &format!("tau {tau}, split {split_at} diverged"));
                }
            }
            checks += 1;
        }
    }
    report("7 (restart consistency)", checks == 12, &format!("{checks}/12 (tau, split) pairs bit-identical"));
}

fn homsde_bin() -> &'static str {
    env!("CARGO_BIN_EXE_homsde")
}

fn run_pipeline(workdir: &Path, threads: &str) {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/delayed_signal.csv");
    std::fs::copy(&fixture, workdir.join("data.csv")).unwrap();
    let common = ["--input", "data.csv", "--history-len", "40", "--n-paths", "400", "--seed", "11"];
    let steps: Vec<(&str, Vec<&str>)> = vec![
        ("fit", vec!["fit", "--output-dir", "out_fit", "--trace", "--profile", "tau"]),
        ("forecast", vec!["forecast", "--params", "out_fit/params.json", "--output-dir", "out_forecast", "--export", "paths"]),
        ("evaluate", vec!["evaluate", "--output-dir", "out_evaluate"]),
        ("goftest", vec!["goftest", "--params", "out_fit/params.json", "--steps", "30,60,90", "--output-dir", "out_gof"]),
        ("simulate", vec!["simulate", "--params", "out_fit/params.json", "--anchor", "100", "--horizon", "60", "--output-dir", "out_sim"]),
        ("detect-frozen", vec!["detect-frozen", "--min-run", "2", "--output-dir", "out_frozen"]),
    ];
    for (name, args) in steps {
        let output = Command::new(homsde_bin())
            .current_dir(workdir)
            .args(args)
            .args(common)
            .args(["--threads", threads])
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "{name} failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
    }
}

fn hash_outputs(workdir: &Path) -> BTreeMap<String, String> {
    let mut hashes = BTreeMap::new();
    for subdir in ["out_fit", "out_forecast", "out_evaluate", "out_gof", "out_sim", "out_frozen"] {
        let dir = workdir.join(subdir);
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            let bytes = std::fs::read(&path).unwrap();
            let digest = format!("{:x}", Sha256::digest(&bytes));
            hashes.insert(format!("{subdir}/{}", path.file_name().unwrap().to_string_lossy()), digest);
        }
    }
    hashes
}

/// Criterion 8: the hash of every CLI output file is invariant across reruns
/// and across 1 vs N worker threads.
#[test]
fn criterion_8_output_determinism() {
    let runs: Vec<BTreeMap<String, String>> = ["4", "4", "1"]
        .iter()
        .map(|threads| {
            let dir = tempfile::tempdir().unwrap();
            run_pipeline(dir.path(), threads);
            hash_outputs(dir.path())
        })
        .collect();
    let rerun_equal = runs[0] == runs[1];
    let threads_equal = runs[0] == runs[2];
    report(
        "8 (output determinism)",
        rerun_equal && threads_equal,
        &format!(
            "{} files hashed; rerun identical: {rerun_equal}, 1-vs-4 threads identical: {threads_equal}",
            runs[0].len()
        ),
    );
}

/// Criterion 9: on the bundled delayed-signal dataset the delayed model
/// beats the memoryless one on RMSE in at least 8 of 10 forecast seeds.
#[test]
fn criterion_9_delayed_signal_regression() {
    let series = synthetic::delayed_signal_series();
    let mut wins = 0;
    for seed in 0..10u64 {
        let config = PipelineConfig { history_len: 40, n_paths: 2000, seed, ..Default::default() };
        let cmp = compare_models(&series, &config).unwrap();
        wins += (cmp.hom.report.rmse < cmp.markov.report.rmse) as u32;
    }
    report(
        "9 (delayed-signal regression)",
        wins >= 8,
        &format!("delayed model won RMSE in {wins}/10 seeds"),
    );
}
