//! Acceptance suite: one PASS/FAIL line per criterion on stderr, then a
//! single assertion that all passed. Run with
//! `cargo test -p scenid-cli --test acceptance -- --nocapture`.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use oracles::*;
use rand::Rng;
use scenid::channel_est::*;
use scenid::classifier::{complexity_count, init_mlp, MlpParams};
use scenid::features::{build_ddpdp, flatten, Ddpdp};
use scenid::pipeline::{generate_dataset, DatasetSpec, EstimationMode};
use scenid::scenario_sim::*;
use scenid::sounding::*;
use scenid::{seed, C64};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err(format!($($arg)*));
        }
    };
}

fn mseq(p: u32) -> MSequence {
    generate_mseq(p, default_polynomial(p).unwrap(), 1).unwrap()
}

fn qpsk(n: usize, s: u64) -> Vec<C64> {
    let mut rng = seed::rng(s);
    (0..n).map(|_| qpsk_symbol(rng.random(), rng.random())).collect()
}

fn c1_mseq_autocorrelation() -> Check {
    for p in 3..=10u32 {
        let m = mseq(p);
        let n = m.chips.len();
        ensure!(n == (1 << p) - 1, "p={p}: period {n}");
        for lag in 0..n {
            let r: i64 = (0..n).map(|i| m.chips[i] as i64 * m.chips[(i + lag) % n] as i64).sum();
            let want = if lag == 0 { n as i64 } else { -1 };
            ensure!(r == want, "p={p} lag {lag}: {r} != {want}");
        }
    }
    // x^3 + x + 1 from the all-ones state.
    let m = generate_mseq(3, Polynomial::from_exponents(&[3, 1]), 0b111).unwrap();
    ensure!(m.periodic_autocorrelation() == vec![7, -1, -1, -1, -1, -1, -1], "p=3 example");
    Ok("p = 3..10 exact (N, -1, ..., -1)".into())
}

fn c2_order_estimation() -> Check {
    let m = mseq(10);
    let rule = PeakRule { threshold_factor: 0.2, floor_factor: 4.0 };
    let mut summary = Vec::new();
    for &taps in &[4usize, 6, 12] {
        let (mut clean_ok, mut noisy_ok) = (0, 0);
        for t in 0..100u64 {
            let mut rng = seed::rng(seed::derive(2, &[taps as u64, t]));
            let paths: Vec<(usize, C64)> = (0..taps)
                .map(|l| {
                    let db = if l == 0 { 0.0 } else { rng.random_range(-13.0..0.0) };
                    (l, C64::from_polar(10f64.powf(db / 20.0), rng.random_range(0.0..std::f64::consts::TAU)))
                })
                .collect();
            let rx = signal(circular_probe(&m, &paths));
            clean_ok += usize::from(estimate_order_with(&rx, &m, &rule).unwrap().order == taps);
            let noisy = add_awgn(&rx, Snr::Db(20.0), seed::derive(3, &[taps as u64, t])).unwrap();
            noisy_ok += usize::from(estimate_order_with(&noisy, &m, &rule).unwrap().order == taps);
        }
        ensure!(clean_ok >= 99, "{taps} taps noiseless: {clean_ok}/100");
        ensure!(noisy_ok >= 95, "{taps} taps at 20 dB: {noisy_ok}/100");
        summary.push(format!("{taps} taps {clean_ok}/{noisy_ok}"));
    }
    Ok(format!("noiseless/20 dB correct: {}", summary.join(", ")))
}

fn c3_relax() -> Check {
    let m = mseq(7);
    let cases: [&[(usize, C64)]; 4] = [
        &[(0, C64::new(1.0, 0.0)), (4, C64::new(0.5, 0.0))],
        &[(1, C64::new(0.2, 0.9)), (2, C64::new(-0.6, 0.1))],
        &[(0, C64::new(0.7, -0.3)), (5, C64::new(0.0, 0.45)), (11, C64::new(-0.2, -0.1))],
        &[(3, C64::new(1.0, 0.0)), (4, C64::new(0.8, 0.4)), (5, C64::new(0.12, 0.0))],
    ];
    let max_delay = 24;
    let mut worst_amp: f64 = 0.0;
    for paths in cases {
        let rx = circular_probe(&m, paths);
        let (delays, amps, _) = brute_force_paths(&rx, &m, paths.len(), max_delay);
        let freq = probe_spectrum(&signal(rx), &m).unwrap();
        let est = relax_estimate(&freq, paths.len(), 0..max_delay, &RelaxConfig::default()).unwrap();
        let got: Vec<usize> = est.paths.iter().map(|p| p.delay_units).collect();
        ensure!(got == delays, "delays {got:?} vs oracle {delays:?}");
        for (p, a) in est.paths.iter().zip(&amps) {
            worst_amp = worst_amp.max((p.amplitude - a).norm());
        }
        for w in est.cost_history.windows(2) {
            ensure!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-15, "cost rose {w:?}");
        }
    }
    ensure!(worst_amp < 1e-6, "amplitude error {worst_amp:e}");
    Ok(format!("4 cases, delays exact, max amplitude error {worst_amp:.1e}, cost non-increasing"))
}

fn jakes_nmse(trials: u64) -> f64 {
    let n = 512;
    let config = SimConfig::default();
    let profile = single_tap_profile(DopplerSpectrum::Jakes);
    let basis = dpss_cached(n, 0.004, basis_dimension(0.004, n)).unwrap();
    let mut total = 0.0;
    for t in 0..trials {
        let cir = generate_fading(&profile, n, &config, seed::derive(40, &[t])).unwrap();
        let x = qpsk(n, seed::derive(41, &[t]));
        let clean = apply_channel(&ComplexSignal::new(x.clone(), 1e-5).unwrap(), &cir).unwrap();
        let rx = add_awgn(&clean, Snr::Db(30.0), seed::derive(42, &[t])).unwrap();
        let (_, est) = bem_ls_estimate(&rx, &PilotFrame::all_known(&x, 0), &[0], basis.clone()).unwrap();
        total += est.nmse(cir.gains());
    }
    total / trials as f64
}

fn c4_dpss_bem() -> Check {
    let mut worst_orth: f64 = 0.0;
    for &(n, w, d) in &[(64, 0.05, 6), (512, 0.004, 8), (2048, 0.004, 20), (4096, 0.004, 36)] {
        let b = generate_dpss(n, w, d).unwrap();
        for i in 0..d {
            for j in 0..=i {
                let dot: f64 = b.sequences[i].iter().zip(&b.sequences[j]).map(|(a, c)| a * c).sum();
                worst_orth = worst_orth.max((dot - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
    }
    ensure!(worst_orth < 1e-9, "orthonormality error {worst_orth:e}");

    let mut worst_dense: f64 = 0.0;
    for &(n, w, d) in &[(8, 0.1, 2), (32, 0.05, 4), (64, 0.05, 3), (64, 0.02, 5), (40, 0.06, 4)] {
        let b = generate_dpss(n, w, d).unwrap();
        let (vecs, _) = dense_dpss(n, w, d);
        for k in 0..d {
            let dot: f64 = b.sequences[k].iter().zip(&vecs[k]).map(|(a, c)| a * c).sum();
            let err = b.sequences[k]
                .iter()
                .zip(&vecs[k])
                .map(|(a, c)| (a - dot.signum() * c).abs())
                .fold(0.0, f64::max);
            worst_dense = worst_dense.max(err);
        }
    }
    ensure!(worst_dense < 1e-6, "dense oracle error {worst_dense:e}");

    let n = 256;
    let grid = [0usize, 1, 2, 3, 5];
    let basis = Arc::new(generate_dpss(n, 0.004, basis_dimension(0.004, n)).unwrap());
    let x = qpsk(n + 5, 3);
    let mut rng = seed::rng(4);
    let truth: Vec<Vec<C64>> = grid
        .iter()
        .map(|_| {
            let c: Vec<C64> = (0..basis.count())
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            (0..n).map(|i| c.iter().zip(&basis.sequences).map(|(c, u)| c * u[i]).sum()).collect()
        })
        .collect();
    let rx: Vec<C64> = (0..n)
        .map(|i| grid.iter().zip(&truth).map(|(&d, g)| g[i] * x[i + 5 - d]).sum())
        .collect();
    let (_, est) = bem_ls_estimate(
        &ComplexSignal::new(rx, 1e-5).unwrap(),
        &PilotFrame::all_known(&x, 5),
        &grid,
        basis,
    )
    .unwrap();
    let in_span = est.nmse(&truth);
    ensure!(in_span < 1e-14, "in-span NMSE {in_span:e}");

    let jakes = jakes_nmse(50);
    let jakes_db = 10.0 * jakes.log10();
    ensure!(jakes_db < -20.0, "Jakes NMSE {jakes_db:.2} dB");
    Ok(format!(
        "orthonormality {worst_orth:.1e}, dense oracle {worst_dense:.1e}, in-span NMSE {in_span:.1e}, Jakes NMSE {jakes_db:.1} dB"
    ))
}

fn c5_fading_statistics() -> Check {
    let config = SimConfig::default();
    let profile = single_tap_profile(DopplerSpectrum::Jakes);
    let lags = [0usize, 5, 10, 25, 40, 60, 95, 150];
    let n = 2048;
    let mut acc = vec![C64::new(0.0, 0.0); lags.len()];
    for r in 0..200 {
        let cir = generate_fading(&profile, n, &config, seed::derive(7, &[r])).unwrap();
        let g = &cir.gains()[0];
        for (a, &k) in acc.iter_mut().zip(&lags) {
            let s: C64 = (0..n - k).map(|i| g[i + k] * g[i].conj()).sum();
            *a += s / (n - k) as f64;
        }
    }
    let mut worst: f64 = 0.0;
    for (a, &k) in acc.iter().zip(&lags) {
        let expected = bessel_j0(2.0 * std::f64::consts::PI * config.normalized_doppler * k as f64);
        worst = worst.max((a.re / acc[0].re - expected).abs());
    }
    ensure!(worst < 0.05, "autocorrelation deviation {worst}");

    let (per, spacing) = (25, 1024);
    let mut env = Vec::with_capacity(4000 * per);
    for r in 0..4000 {
        let cir = generate_fading(&profile, per * spacing, &config, seed::derive(11, &[r])).unwrap();
        env.extend((0..per).map(|i| cir.gains()[0][i * spacing].norm()));
    }
    let (stat, critical) = rayleigh_chi2(&env, 20);
    ensure!(stat < critical, "chi2 {stat:.2} >= {critical:.2}");
    Ok(format!("max |R(k) - J0| {worst:.3}, chi2 {stat:.2} < {critical:.2} (19 dof, 1%)"))
}

fn truth_ddpdp(label: u8, n: usize, s: u64) -> Ddpdp {
    let profile = load_profile(label).unwrap();
    let cir = generate_fading(&profile, n, &SimConfig::default(), s).unwrap();
    let grid: Vec<usize> = (0..MAX_TAPS).collect();
    build_ddpdp(&CirEstimate::from_truth(&cir, &grid).unwrap()).unwrap()
}

fn c6_ddpdp() -> Check {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for mode in [EstimationMode::BemLs, EstimationMode::OracleCir] {
        let spec = DatasetSpec { vectors_per_condition: 1, estimation: mode, master_seed: 6, ..DatasetSpec::default() };
        for r in generate_dataset(&spec).unwrap().records {
            ensure!(r.feature.len() == 4800, "feature length {}", r.feature.len());
            ensure!(r.feature.values.iter().all(|&v| v >= 0.0), "negative bin");
            let d = r.feature.reshape().unwrap();
            worst = worst.max(d.row_sum_error());
            count += 1;
        }
    }
    ensure!(worst <= 1e-12, "row sum error {worst:e}");

    let a = truth_ddpdp(2, 10_000, 1);
    let b = truth_ddpdp(3, 10_000, 2);
    ensure!(flatten(&a).len() == 4800 && flatten(&b).len() == 4800, "dimension");
    // Rows 0..6 carry paths in both scenarios.
    let dists: Vec<f64> = (0..6)
        .map(|l| a.bins[l].iter().zip(&b.bins[l]).map(|(x, y)| (x - y).abs()).sum())
        .collect();
    let mean = dists.iter().sum::<f64>() / dists.len() as f64;
    ensure!(mean > 0.1, "RAx6 vs TUx6 mean row L1 {mean}");
    Ok(format!("{count} features, 4800 values, row sums within {worst:.1e}, RAx6/TUx6 mean row L1 {mean:.3}"))
}

fn c7_gradient_check() -> Check {
    let mut worst: f64 = 0.0;
    let archs = [vec![6, 10, 6], vec![5, 7, 4, 6], vec![12, 8, 6, 5, 4, 6]];
    for sizes in &archs {
        for s in 0..5u64 {
            let mut params = init_mlp(sizes, s).unwrap();
            let mut rng = seed::rng(100 + s);
            params.biases.iter_mut().flatten().for_each(|b| *b = rng.random_range(-0.5..0.5));
            let batch: Vec<(Vec<f64>, Vec<f64>)> = (0..4)
                .map(|_| {
                    let x: Vec<f64> = (0..sizes[0]).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let mut t = vec![0.0; 6];
                    t[rng.random_range(0..6)] = 1.0;
                    (x, t)
                })
                .collect();
            let refs: Vec<(&[f64], &[f64])> = batch.iter().map(|(x, t)| (x.as_slice(), t.as_slice())).collect();
            worst = worst.max(gradient_check(&params, &refs, 1e-5, 1e-6));
        }
    }
    ensure!(worst < 1e-5, "relative error {worst:e}");
    Ok(format!("3 architectures x 5 seeds, max relative error {worst:.1e}"))
}

/// Artifacts of the end-to-end run, reused by the replay check.
struct Desk {
    _dir: tempfile::TempDir,
    dataset: PathBuf,
    model: PathBuf,
    report: PathBuf,
}

static DESK: OnceLock<Desk> = OnceLock::new();

fn scenid(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_scenid"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("scenid {args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn c8_end_to_end() -> Check {
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let dataset = dir.path().join("desk.jsonl");
    let model = dir.path().join("model.json");
    let report = dir.path().join("report.csv");
    // Defaults: 6 scenarios x (noiseless + 5 SNRs) x 20 vectors, bem-ls.
    scenid(&["--threads", "1", "dataset", "--output", p(&dataset)])?;
    scenid(&["--threads", "1", "train", "--dataset", p(&dataset), "--output", p(&model)])?;
    scenid(&["--threads", "1", "eval", "--model", p(&model), "--dataset", p(&dataset), "--output", p(&report)])?;

    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("report.csv.manifest.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let acc: Vec<(f64, f64)> = manifest["results"]["per_snr"]
        .as_array()
        .ok_or("no per-SNR results")?
        .iter()
        .map(|r| (r["snr_db"].as_f64().unwrap(), 100.0 * r["accuracy"].as_f64().unwrap()))
        .collect();
    let avg = 100.0 * manifest["results"]["average_accuracy"].as_f64().ok_or("no average")?;
    let _ = DESK.set(Desk { _dir: dir, dataset, model, report });

    let table = acc.iter().map(|(s, a)| format!("{s} dB {a:.1}")).collect::<Vec<_>>().join(", ");
    let snrs: Vec<f64> = acc.iter().map(|a| a.0).collect();
    ensure!(snrs == [0.0, 10.0, 20.0, 30.0, 40.0], "SNR grid {snrs:?}");
    for &(s, a) in &acc[2..] {
        ensure!(a >= 95.0, "{s} dB: {a:.1}% < 95% ({table})");
    }
    ensure!(acc[0].1 >= 45.0, "0 dB: {:.1}% < 45% ({table})", acc[0].1);
    for w in acc.windows(2) {
        ensure!(w[1].1 >= w[0].1 - 2.0, "inversion {} -> {} dB ({table})", w[0].0, w[1].0);
    }
    ensure!((avg - 88.4).abs() <= 10.0, "average {avg:.1}% outside 88.4 +/- 10 ({table})");
    Ok(format!("{table}, avg {avg:.1} (reference 58.7/83.3/100/100/100, 88.4)"))
}

fn c9_complexity() -> Check {
    let p = MlpParams::zeros(&[4800, 64, 48, 32, 24, 6]).unwrap();
    let m = 600u64;
    let hand = 2 * m * (64 * 48 + 48 * 32 + 32 * 24) + 2 * m * 24 * 6 + 2 * m * 6;
    ensure!(hand == 6_631_200, "hand evaluation {hand}");
    let got = complexity_count(&p, m);
    ensure!(got == hand, "counter {got} vs hand {hand}");
    ensure!(complexity_count(&p, 2 * m) == 2 * hand, "not linear in M");
    let tiny = MlpParams::zeros(&[3, 1, 1]).unwrap();
    ensure!(complexity_count(&tiny, 1) == 4, "smallest case {}", complexity_count(&tiny, 1));
    Ok(format!(
        "H=4, M=600: {got} = 6451200 + 172800 + 7200; H=1, M=1: 4; linear in M (the 6811200 total adds the last two terms twice)"
    ))
}

fn replay_same(manifest: &Path, original: &Path, copy: &Path) -> Result<(), String> {
    scenid(&["replay", p(manifest), "--output", p(copy)])?;
    let a = std::fs::read(original).map_err(|e| e.to_string())?;
    let b = std::fs::read(copy).map_err(|e| e.to_string())?;
    ensure!(a == b, "{} differs after replay", original.display());
    Ok(())
}

fn manifest_of(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

fn c10_replay() -> Check {
    let desk = DESK.get().ok_or("end-to-end run left no artifacts to replay")?;
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let mut checked = Vec::new();
    for (name, out) in [("dataset", &desk.dataset), ("train", &desk.model), ("eval", &desk.report)] {
        replay_same(&manifest_of(out), out, &dir.path().join(name))?;
        checked.push(name);
    }

    let traces = dir.path().join("fading.csv");
    scenid(&["simulate", "--seed", "10", "--output", p(&traces)])?;
    replay_same(&manifest_of(&traces), &traces, &dir.path().join("fading2.csv"))?;
    checked.push("simulate");

    let m = mseq(9);
    let probe = signal(circular_probe(&m, &[(0, C64::new(1.0, 0.0)), (3, C64::new(0.3, -0.5))]));
    let sig = dir.path().join("probe.sig");
    scenid::pipeline::save_signal(&probe, &sig).map_err(|e| e.to_string())?;
    let result = dir.path().join("sound.json");
    scenid(&["sound", "--signal", p(&sig), "--output", p(&result)])?;
    replay_same(&manifest_of(&result), &result, &dir.path().join("sound2.json"))?;
    checked.push("sound");

    let x = qpsk(2048 + 11, 10);
    let cir = generate_fading(&load_profile(4).unwrap(), 2048 + 11, &SimConfig::default(), 10).unwrap();
    let rx = apply_channel(&ComplexSignal::new(x.clone(), 1e-5).unwrap(), &cir).unwrap().slice(11, 2048 + 11);
    let (rx_path, tx_path) = (dir.path().join("rx.sig"), dir.path().join("tx.sig"));
    scenid::pipeline::save_signal(&rx, &rx_path).map_err(|e| e.to_string())?;
    scenid::pipeline::save_signal(&ComplexSignal::new(x, 1e-5).unwrap(), &tx_path).map_err(|e| e.to_string())?;
    let est = dir.path().join("cir.csv");
    scenid(&["estimate", "--signal", p(&rx_path), "--pilots", p(&tx_path), "--output", p(&est)])?;
    replay_same(&manifest_of(&est), &est, &dir.path().join("cir2.csv"))?;
    checked.push("estimate");

    Ok(format!("byte-identical replays: {}", checked.join(", ")))
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget_s: f64,
    run: fn() -> Check,
}

#[test]
fn acceptance() {
    let criteria = [
        Criterion { id: 1, name: "m-sequence autocorrelation", budget_s: 1.0, run: c1_mseq_autocorrelation },
        Criterion { id: 2, name: "order estimation", budget_s: 30.0, run: c2_order_estimation },
        Criterion { id: 3, name: "RELAX vs brute force", budget_s: 60.0, run: c3_relax },
        Criterion { id: 4, name: "DPSS / BEM-LS", budget_s: 60.0, run: c4_dpss_bem },
        Criterion { id: 5, name: "fading statistics", budget_s: 60.0, run: c5_fading_statistics },
        Criterion { id: 6, name: "D-DPDP features", budget_s: 30.0, run: c6_ddpdp },
        Criterion { id: 7, name: "MLP gradient check", budget_s: 30.0, run: c7_gradient_check },
        Criterion { id: 8, name: "end-to-end accuracy vs SNR", budget_s: 900.0, run: c8_end_to_end },
        Criterion { id: 9, name: "complexity counter", budget_s: 1.0, run: c9_complexity },
        Criterion { id: 10, name: "manifest replay", budget_s: 900.0, run: c10_replay },
    ];
    let mut failed = Vec::new();
    let mut err = std::io::stderr();
    for c in &criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        let outcome = match outcome {
            Ok(_) if secs > c.budget_s => Err(format!("over budget: {secs:.1} s > {} s", c.budget_s)),
            other => other,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d.clone()),
            Err(e) => ("FAIL", e.clone()),
        };
        // Written to the raw handle so the lines show without --nocapture.
        let _ = writeln!(err, "{tag} [{:>2}] {}: {detail} ({secs:.1} s)", c.id, c.name);
        if outcome.is_err() {
            failed.push(c.id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
