//! Subcommand bodies. Each takes the resolved configuration and its input
//! paths, writes its outputs and fills in the manifest; the same functions
//! serve fresh runs and replays.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::json;

use scenid::channel_est::{estimate_windowed, PilotFrame};
use scenid::classifier::{init_mlp, load_model, save_model, train, ModelFile};
use scenid::features::{build_ddpdp, FeatureVector, MIN_SAMPLES};
use scenid::pipeline::{
    evaluate, generate_dataset, load_dataset, load_signal, report_csv, save_dataset,
    sound_and_profile, split_train_test, TestGroup,
};
use scenid::scenario_sim::{generate_fading, load_profile, SCENARIO_COUNT};
use scenid::sounding::{default_polynomial, generate_mseq, Polynomial};

use crate::config::{DatasetConfig, EstimateConfig, EvalConfig, SimulateConfig, SoundConfig, TrainCmdConfig};
use crate::manifest::RunManifest;

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn dataset(cfg: &DatasetConfig, output: &Path, m: &mut RunManifest) -> Result<()> {
    let ds = m.time("generate", || generate_dataset(cfg)).context("generating dataset")?;
    m.time("write", || save_dataset(&ds, output))?;
    m.outputs.insert("dataset".into(), output.to_path_buf());
    m.results = json!({
        "records": ds.records.len(),
        "fingerprint": ds.header.fingerprint,
    });
    println!("{} records -> {}", ds.records.len(), output.display());
    Ok(())
}

pub fn train_model(cfg: &TrainCmdConfig, dataset: &Path, output: &Path, m: &mut RunManifest) -> Result<()> {
    m.inputs.insert("dataset".into(), dataset.to_path_buf());
    let ds = m.time("load", || load_dataset(dataset))?;
    let (train_set, _) = split_train_test(&ds.records).with_context(|| format!("splitting {}", dataset.display()))?;
    let features: Vec<FeatureVector> = train_set.iter().map(|r| r.feature.clone()).collect();

    let mut sizes = vec![features[0].len()];
    sizes.extend(&cfg.hidden_layers);
    sizes.push(SCENARIO_COUNT);
    let init = init_mlp(&sizes, cfg.init_seed)?;
    let (params, report) = m.time("train", || train(init, &features, &cfg.train))?;

    let model = ModelFile::new(&params, &cfg.train, &ds.header.fingerprint)?;
    save_model(&model, output)?;
    m.outputs.insert("model".into(), output.to_path_buf());
    m.results = json!({
        "train_records": features.len(),
        "layer_sizes": sizes,
        "epochs_run": report.epochs_run(),
        "stopped_early": report.stopped_early,
        "train_accuracy": report.train_accuracy,
        "loss_curve": report.epoch_losses,
    });
    println!(
        "trained {:?} on {} records: {} epochs, final loss {:.3e}, train accuracy {:.1}% -> {}",
        sizes,
        features.len(),
        report.epochs_run(),
        report.epoch_losses.last().copied().unwrap_or(f64::NAN),
        100.0 * report.train_accuracy,
        output.display()
    );
    Ok(())
}

pub fn eval(_cfg: &EvalConfig, model: &Path, dataset: &Path, output: &Path, m: &mut RunManifest) -> Result<()> {
    m.inputs.insert("model".into(), model.to_path_buf());
    m.inputs.insert("dataset".into(), dataset.to_path_buf());
    let params = load_model(model)?.params().with_context(|| format!("loading {}", model.display()))?;
    let ds = m.time("load", || load_dataset(dataset))?;
    if let Some(r) = ds.records.first() {
        if r.feature.len() != params.input_dim() {
            bail!(
                "model {} expects {} inputs but dataset {} has {}-value features",
                model.display(),
                params.input_dim(),
                dataset.display(),
                r.feature.len()
            );
        }
    }
    let mut groups: Vec<TestGroup> = Vec::new();
    for r in &ds.records {
        let Some(db) = r.snr.db() else { continue };
        match groups.iter_mut().find(|g| g.snr_db.to_bits() == db.to_bits()) {
            Some(g) => g.records.push(r.clone()),
            None => groups.push(TestGroup { snr_db: db, records: vec![r.clone()] }),
        }
    }
    if groups.is_empty() {
        bail!("dataset {} has no finite-SNR records to evaluate", dataset.display());
    }
    groups.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));

    let report = m.time("evaluate", || evaluate(&params, &groups))?;
    write_text(output, &report_csv(&report))?;
    m.outputs.insert("report".into(), output.to_path_buf());
    m.results = serde_json::to_value(&report)?;

    let mut head = format!("{:<14}", "SNR / dB");
    let mut acc = format!("{:<14}", "Accuracy / %");
    for r in &report.per_snr {
        let _ = write!(head, "{:>8}", r.snr_db);
        let _ = write!(acc, "{:>8.1}", 100.0 * r.accuracy);
    }
    let _ = write!(head, "{:>8}", "Avg");
    let _ = write!(acc, "{:>8.1}", 100.0 * report.average_accuracy);
    println!("{head}\n{acc}");
    Ok(())
}

pub fn sound(cfg: &SoundConfig, signal: &Path, output: Option<&Path>, m: &mut RunManifest) -> Result<()> {
    m.inputs.insert("signal".into(), signal.to_path_buf());
    let rx = load_signal(signal)?;
    let polynomial = match cfg.polynomial {
        Some(mask) => Polynomial(mask),
        None => default_polynomial(cfg.register_length)
            .with_context(|| format!("no built-in polynomial for register length {}", cfg.register_length))?,
    };
    let local = generate_mseq(cfg.register_length, polynomial, cfg.initial_state)?
        .with_chip_period(rx.sample_period_s());
    let (order, profile) = m.time("sound", || sound_and_profile(&rx, &local, &cfg.peak, &cfg.relax))?;

    let unit_us = rx.sample_period_s() * 1e6;
    let paths: Vec<serde_json::Value> = profile
        .paths
        .iter()
        .map(|p| {
            json!({
                "delay_units": p.delay_units,
                "delay_us": p.delay_units as f64 * unit_us,
                "magnitude": p.amplitude.norm(),
                "phase_rad": p.amplitude.arg(),
                "re": p.amplitude.re,
                "im": p.amplitude.im,
            })
        })
        .collect();
    println!("order {} (threshold {:.4e}, peaks at lags {:?})", order.order, order.threshold, order.peak_lags);
    println!("{:>6} {:>12} {:>12} {:>12} {:>10}", "path", "delay/units", "delay/us", "magnitude", "phase/rad");
    for (i, p) in profile.paths.iter().enumerate() {
        println!(
            "{:>6} {:>12} {:>12.3} {:>12.6} {:>10.4}",
            i + 1,
            p.delay_units,
            p.delay_units as f64 * unit_us,
            p.amplitude.norm(),
            p.amplitude.arg()
        );
    }
    println!("residual cost {:.4e} after {} sweeps", profile.residual_cost, profile.iterations);

    let result = json!({
        "order": order.order,
        "threshold": order.threshold,
        "peak_lags": order.peak_lags,
        "peak_values": order.peak_values,
        "paths": paths,
        "residual_cost": profile.residual_cost,
        "iterations": profile.iterations,
        "cost_history": profile.cost_history,
    });
    if let Some(out) = output {
        write_text(out, &(serde_json::to_string_pretty(&result)? + "\n"))?;
        m.outputs.insert("result".into(), out.to_path_buf());
    }
    m.results = json!({ "order": order.order });
    Ok(())
}

/// Path of the D-DPDP plot data written next to an `estimate` output.
pub fn ddpdp_path(output: &Path) -> std::path::PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".ddpdp.csv");
    output.with_file_name(name)
}

pub fn estimate(cfg: &EstimateConfig, signal: &Path, pilots: &Path, output: &Path, m: &mut RunManifest) -> Result<()> {
    m.inputs.insert("signal".into(), signal.to_path_buf());
    m.inputs.insert("pilots".into(), pilots.to_path_buf());
    if cfg.taps == 0 {
        bail!("taps must be >= 1");
    }
    let rx = load_signal(signal)?;
    let tx = load_signal(pilots)?;
    let frame = PilotFrame::all_known(tx.samples(), cfg.pilot_offset);
    let grid: Vec<usize> = (0..cfg.taps).collect();
    let cir = m.time("estimate", || estimate_windowed(&rx, &frame, &grid, &cfg.window))?;

    let mut csv = String::from("n");
    for d in &grid {
        let _ = write!(csv, ",tap{d}_re,tap{d}_im");
    }
    csv.push('\n');
    for n in 0..cir.sample_count() {
        let _ = write!(csv, "{n}");
        for row in &cir.gains {
            let _ = write!(csv, ",{},{}", row[n].re, row[n].im);
        }
        csv.push('\n');
    }
    write_text(output, &csv)?;
    m.outputs.insert("cir".into(), output.to_path_buf());

    if cir.sample_count() >= MIN_SAMPLES {
        let d = build_ddpdp(&cir)?;
        let mut plot = String::from("delay_us");
        for b in 0..d.bins[0].len() {
            let _ = write!(plot, ",bin{b}");
        }
        plot.push('\n');
        for (l, row) in d.bins.iter().enumerate() {
            let _ = write!(plot, "{}", l as f64 * d.delay_unit_us);
            for v in row {
                let _ = write!(plot, ",{v}");
            }
            plot.push('\n');
        }
        let path = ddpdp_path(output);
        write_text(&path, &plot)?;
        m.outputs.insert("ddpdp".into(), path);
    } else {
        log::warn!("{} samples is too few for a D-DPDP; only the CIR was written", cir.sample_count());
    }
    println!("{} taps x {} samples -> {}", grid.len(), cir.sample_count(), output.display());
    Ok(())
}

pub fn simulate(cfg: &SimulateConfig, output: &Path, m: &mut RunManifest) -> Result<()> {
    let profile = load_profile(cfg.scenario)?;
    let cir = m.time("simulate", || generate_fading(&profile, cfg.samples, &cfg.sim, cfg.sim.seed))?;
    let period = cir.sample_period_s();

    let file = std::fs::File::create(output).with_context(|| format!("creating {}", output.display()))?;
    let mut out = std::io::BufWriter::new(file);
    write!(out, "n,t_s")?;
    for d in cir.delay_units() {
        write!(out, ",tap{d}_re,tap{d}_im")?;
    }
    writeln!(out)?;
    for n in 0..cir.sample_count() {
        write!(out, "{n},{}", n as f64 * period)?;
        for row in cir.gains() {
            write!(out, ",{},{}", row[n].re, row[n].im)?;
        }
        writeln!(out)?;
    }
    out.flush().with_context(|| format!("writing {}", output.display()))?;
    m.outputs.insert("traces".into(), output.to_path_buf());
    println!(
        "scenario {} ({}): {} taps x {} samples -> {}",
        cfg.scenario,
        profile.name,
        cir.tap_count(),
        cir.sample_count(),
        output.display()
    );
    Ok(())
}
