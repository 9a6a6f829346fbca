use std::path::PathBuf;

use qsp_pulse::dynamics::digitize;
use qsp_pulse::fisher::{
    crlb_report, dfi_sweep, equidistant_grid, fim_numeric, fim_toeplitz_constant, large_nu_bound, normalized_dfi,
    small_nu_bound,
};
use qsp_pulse::io::{self, Manifest, Table};
use qsp_pulse::pipeline::{self, bias_scaling_experiment, learn_phases, variance_experiment, PipelineConfig};
use qsp_pulse::reconstruct::{error_report, reconstruct, richardson};
use qsp_pulse::tomography::{drive_grid, exact_propagators};
use qsp_pulse::dynamics::DEFAULT_RTOL;
use serde_json::json;

use crate::config::{
    load_or_default, load_pipeline, BiasSweepConfig, DfiSweepConfig, DigitizeConfig, FisherConfig, VarianceSweepConfig,
};
use crate::{Cli, Command, Failure};

type Outcome = Result<Vec<PathBuf>, Failure>;

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), Failure> {
    if ok {
        Ok(())
    } else {
        Err(Failure::Config(msg()))
    }
}

fn emit(cli: &Cli, tables: &[Table], manifest: Manifest) -> Outcome {
    io::emit(&cli.out, tables, manifest)
        .map_err(|e| Failure::Runtime(format!("writing to {}: {e}", cli.out.display())))
}

pub fn dispatch(cli: &Cli) -> Outcome {
    let cfg_path = cli.config.as_deref();
    match &cli.command {
        Command::Simulate => simulate(cli, load_pipeline(cfg_path, cli.seed)?),
        Command::Tomography => tomography(cli, load_pipeline(cfg_path, cli.seed)?),
        Command::Learn => learn(cli, load_pipeline(cfg_path, cli.seed)?),
        Command::Reconstruct => reconstruct_exact(cli, load_pipeline(cfg_path, cli.seed)?),
        Command::EndToEnd => end_to_end(cli, load_pipeline(cfg_path, cli.seed)?),
        Command::Digitize(a) => {
            let mut c: DigitizeConfig = load_or_default(cfg_path)?;
            c.pulse = a.pulse.clone().unwrap_or(c.pulse);
            c.omega = a.omega.unwrap_or(c.omega);
            c.segments = a.segments.unwrap_or(c.segments);
            c.duration = a.duration.unwrap_or(c.duration);
            run_digitize(cli, c)
        }
        Command::Fisher(a) => {
            let mut c: FisherConfig = load_or_default(cfg_path)?;
            c.segments = a.segments.unwrap_or(c.segments);
            c.shots = a.shots.unwrap_or(c.shots);
            c.samples = a.samples.or(c.samples);
            c.nu = a.nu.unwrap_or(c.nu);
            fisher(cli, c)
        }
        Command::BiasSweep(a) => {
            let mut c: BiasSweepConfig = load_or_default(cfg_path)?;
            c.pulse = a.pulse.clone().unwrap_or(c.pulse);
            c.degrees = a.degrees.clone().unwrap_or(c.degrees);
            c.method = a.method.unwrap_or(c.method);
            c.apply_re &= !a.no_re;
            c.duration = a.duration.unwrap_or(c.duration);
            bias_sweep(cli, c)
        }
        Command::VarianceSweep(a) => {
            let mut c: VarianceSweepConfig = load_or_default(cfg_path)?;
            c.pulse = a.pulse.clone().unwrap_or(c.pulse);
            c.segments = a.segments.unwrap_or(c.segments);
            c.shots = a.shots.or(c.shots);
            c.repetitions = a.reps.unwrap_or(c.repetitions);
            c.seed = cli.seed.unwrap_or(c.seed);
            variance_sweep(cli, c)
        }
        Command::DfiSweep(a) => {
            let mut c: DfiSweepConfig = load_or_default(cfg_path)?;
            c.degrees = a.degrees.clone().unwrap_or(c.degrees);
            c.nus = a.nus.clone().unwrap_or(c.nus);
            c.shots = a.shots.unwrap_or(c.shots);
            run_dfi_sweep(cli, c)
        }
    }
}

fn simulate(cli: &Cli, cfg: PipelineConfig) -> Outcome {
    let truth = cfg.truth();
    let (thetas, omegas) = drive_grid(cfg.segments, cfg.duration, cfg.samples_for(cfg.segments));
    let unitaries = exact_propagators(&truth, &omegas, DEFAULT_RTOL);
    let samples = qsp_pulse::qsp::SampleSet { thetas, unitaries, degree: cfg.segments, noise_sigma: 0.0 };
    let manifest = Manifest::new("simulate", &cfg, Some(cfg.seed));
    emit(cli, &[io::samples_table(&samples, Some(&omegas))], manifest)
}

fn tomography(cli: &Cli, cfg: PipelineConfig) -> Outcome {
    let rec = pipeline::tomography_record(&cfg)?;
    let mut manifest = Manifest::new("tomography", &cfg, Some(cfg.seed));
    manifest.summary = json!({ "clamped": rec.reference.clamped || rec.ptms.iter().any(|p| p.clamped) });
    let tables = [io::ptm_table(&rec.omegas, &rec.reference, &rec.ptms), io::samples_table(&rec.samples, Some(&rec.omegas))];
    emit(cli, &tables, manifest)
}

fn learn(cli: &Cli, cfg: PipelineConfig) -> Outcome {
    let rec = pipeline::tomography_record(&cfg)?;
    let psis = learn_phases(&rec.samples, cfg.direction)?;
    let truth = cfg.truth().segment_averages(cfg.segments).values;
    let max_dev = psis.0.iter().zip(&truth).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mut manifest = Manifest::new("learn", &cfg, Some(cfg.seed));
    manifest.summary = json!({ "max_abs_deviation_from_averages": max_dev });
    emit(cli, &[io::phases_table(cfg.duration, &psis.0, &[], &truth)], manifest)
}

fn reconstruct_exact(cli: &Cli, cfg: PipelineConfig) -> Outcome {
    let truth = cfg.truth();
    let rec = |l: usize| reconstruct(&truth.segment_averages(l).values, cfg.duration, cfg.method);
    let est = if cfg.apply_re { richardson(&rec(cfg.segments)?, &rec(2 * cfg.segments)?)? } else { rec(cfg.segments)? };
    let report = error_report(&est, &truth, cfg.n_grid);
    let summary = pipeline::ErrorSummary {
        sup_interior: report.sup_interior,
        sup_full: report.sup_full,
        mean_interior: report.mean_interior,
    };
    let mut manifest = Manifest::new("reconstruct", &cfg, Some(cfg.seed));
    manifest.summary = json!({ "errors": summary });
    emit(cli, &[io::pointwise_table(&report.table), io::error_table(&[summary])], manifest)
}

fn end_to_end(cli: &Cli, cfg: PipelineConfig) -> Outcome {
    let res = pipeline::run(&cfg)?;
    let worst = res.errors.iter().map(|e| e.sup_interior).fold(0.0, f64::max);
    let mut manifest = Manifest::new("end-to-end", &cfg, Some(cfg.seed));
    manifest.summary = json!({ "worst_sup_interior": worst, "clamped": res.clamped });
    let tables = [
        io::pointwise_table(&res.table),
        io::error_table(&res.errors),
        io::phases_table(cfg.duration, &res.phase_mean, &res.phase_std, &res.truth_averages),
    ];
    emit(cli, &tables, manifest)
}

fn run_digitize(cli: &Cli, c: DigitizeConfig) -> Outcome {
    check(c.duration > 0.0 && c.segments >= 1, || format!("need duration > 0 and L ≥ 1, got {c:?}"))?;
    let p = c.pulse.build(c.duration);
    let psis = digitize(&p, c.omega, c.segments)?;
    let avg = p.segment_averages(c.segments).values;
    let manifest = Manifest::new("digitize", &c, None);
    emit(cli, &[io::phases_table(c.duration, &psis, &[], &avg)], manifest)
}

fn fisher(cli: &Cli, c: FisherConfig) -> Outcome {
    let l = c.segments;
    let n = c.samples.unwrap_or(l + 1);
    check(l >= 1 && c.shots > 0.0 && c.nu > 0.0, || format!("need L ≥ 1, shots > 0, ν > 0, got {c:?}"))?;
    let fim = match &c.phases {
        Some(p) => {
            check(p.len() == l, || format!("{} phases given for L = {l}", p.len()))?;
            fim_numeric(p, &equidistant_grid(n, c.nu), c.shots)
        }
        None => fim_toeplitz_constant(l, n, c.nu, c.shots),
    };
    let eigs = fim.eigenvalues();
    let crlb = crlb_report(&fim).ok();
    let mut per = Table::new("fisher.csv", &["index", "eigenvalue", "crlb_variance"]);
    for (k, e) in eigs.iter().enumerate() {
        let v = crlb.as_ref().map_or(f64::NAN, |r| r.variance_floor[k]);
        per.rows.push(vec![k.to_string(), io::fmt_f64(*e), io::fmt_f64(v)]);
    }
    let mut manifest = Manifest::new("fisher", &c, None);
    manifest.summary = json!({
        "dfi": normalized_dfi(&eigs, c.shots * n as f64),
        "max_eigenvalue": eigs.last(),
        "small_nu_bound": small_nu_bound(l, n, c.nu, c.shots),
        "large_nu_bound": large_nu_bound(n, c.nu, c.shots),
        "avg_correlation": crlb.as_ref().map(|r| r.avg_correlation),
    });
    emit(cli, &[io::matrix_table("fim.csv", &fim.m), per], manifest)
}

fn bias_sweep(cli: &Cli, c: BiasSweepConfig) -> Outcome {
    check(!c.degrees.is_empty() && c.degrees.iter().all(|&l| l >= 4), || {
        format!("every L must be at least 4, got {:?}", c.degrees)
    })?;
    let s = bias_scaling_experiment(&c.pulse, c.duration, &c.degrees, c.method, c.apply_re)?;
    let mut manifest = Manifest::new("bias-sweep", &c, None);
    manifest.summary = json!({ "slope": s.slope });
    emit(cli, &[io::scaling_table(&s)], manifest)
}

fn variance_sweep(cli: &Cli, c: VarianceSweepConfig) -> Outcome {
    check(c.segments >= 2 && c.repetitions >= 2, || format!("need L ≥ 2 and at least 2 repetitions, got {c:?}"))?;
    check(c.shots != Some(0), || "shots must be positive".into())?;
    let v = variance_experiment(&c.pulse, c.duration, c.segments, c.shots, c.repetitions, c.seed)?;
    let manifest = Manifest::new("variance-sweep", &c, Some(c.seed));
    emit(cli, &[io::variance_table(&v)], manifest)
}

fn run_dfi_sweep(cli: &Cli, c: DfiSweepConfig) -> Outcome {
    check(c.degrees.iter().all(|&l| l >= 1) && c.shots > 0.0, || format!("invalid sweep {c:?}"))?;
    check(c.nus.iter().all(|&nu| nu > 0.0), || "every ν must be positive".into())?;
    let points: Vec<_> = c
        .degrees
        .iter()
        .flat_map(|&l| dfi_sweep(l, c.shots, c.samples.unwrap_or(l + 1), &c.nus))
        .collect();
    let manifest = Manifest::new("dfi-sweep", &c, None);
    emit(cli, &[io::dfi_table(&points)], manifest)
}
