use std::path::Path;

use serde::Serialize;

use rqbc_core::attacks::{cheat_detection_prob, per_channel_flag_prob, Strategy};
use rqbc_core::measurement::effective_angle;
use rqbc_core::oracle::{
    detect_prob_flat_closed_form, detect_prob_time_domain, povm_validity_bruteforce, ValidityReport,
};
use rqbc_core::protocol::{guess_success, ident_prob_collective, ident_prob_individual, Apparatus, Simulation};
use rqbc_core::spectra::{make_amplitude, Shape};
use rqbc_core::window::detect_prob_for;
use rqbc_core::{Complex64, Execution, Povm, PovmFamily};

use crate::cli::{AttackArgs, Format, RunArgs, StrategyArgs, SweepArgs, ValidateArgs};
use crate::config::Settings;
use crate::error::CliError;
use crate::output::{write_json_per_item, write_table, Meta};

const EXEC: Execution = Execution::Parallel;

pub struct Target<'a> {
    pub format: Format,
    pub out: Option<&'a Path>,
}

#[derive(Serialize)]
struct SweepRow {
    delta: f64,
    #[serde(rename = "T")]
    t: f64,
    shape: Shape,
    p_detect: f64,
    p_perp: f64,
    alpha_eff: f64,
}

pub fn sweep(settings: &mut Settings, args: &SweepArgs, target: Target) -> Result<(), CliError> {
    if let Some(names) = &args.shapes {
        settings.sweep.shapes = names
            .iter()
            .map(|n| n.parse::<Shape>().map_err(|e| CliError::Usage(e.to_string())))
            .collect::<Result<_, _>>()?;
    }
    if let Some(d) = &args.deltas {
        settings.sweep.deltas = d.clone();
    }
    if let Some(t) = &args.times {
        settings.sweep.times = t.clone();
    }
    let spec = &settings.sweep;
    let cases: Vec<(Shape, f64, f64)> = spec
        .shapes
        .iter()
        .flat_map(|&s| spec.deltas.iter().flat_map(move |&d| spec.times.iter().map(move |&t| (s, d, t))))
        .collect();
    let plan = settings.protocol.grid;
    let rows = EXEC.try_map(cases.len(), |i| -> Result<SweepRow, CliError> {
        let (shape, delta, t) = cases[i];
        // the centre does not affect detection; 2*delta keeps the support positive
        let amp = make_amplitude(shape, 2.0 * delta, delta, 0.0)?;
        let p = detect_prob_for(&amp, t, &plan)?;
        Ok(SweepRow { delta, t, shape, p_detect: p, p_perp: 1.0 - p, alpha_eff: effective_angle(p)? })
    })?;
    let meta = Meta::new("sweep", settings);
    write_table(&meta, &rows, &["delta", "T", "shape", "p_detect", "p_perp", "alpha_eff"], target.format, target.out)
}

fn strategy_from(args: &StrategyArgs, settings: &Settings) -> Result<Option<Strategy>, CliError> {
    let Some(kind) = args.strategy.as_deref() else {
        return Ok(None);
    };
    let missing = |flag: &str| CliError::Usage(format!("strategy {kind} needs --{flag}"));
    let s = match kind {
        "honest" => Strategy::Honest,
        "mixed" => Strategy::Mixed,
        "delayed" => Strategy::Delayed { tau0: args.tau0.ok_or_else(|| missing("tau0"))? },
        "early-measure" => Strategy::EarlyMeasure { t_probe: args.t_probe.unwrap_or(settings.protocol.t_probe) },
        "wrong-state" => {
            let k_c = args.k_c.ok_or_else(|| missing("k-c"))?;
            let p = &settings.protocol.psi1;
            Strategy::WrongState { amplitude: make_amplitude(p.shape(), k_c, p.bandwidth(), 0.0)? }
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown strategy '{other}', expected honest, delayed, mixed, wrong-state or early-measure"
            )))
        }
    };
    Ok(Some(s))
}

#[derive(Serialize)]
struct RunRow {
    seed: u64,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "T_probe")]
    t_probe: f64,
    #[serde(rename = "T_open")]
    t_open: f64,
    family: PovmFamily,
    adversary: &'static str,
    success: bool,
    aborted: bool,
}

pub fn run(settings: &mut Settings, args: &RunArgs, target: Target) -> Result<(), CliError> {
    if let Some(s) = strategy_from(&args.strategy, settings)? {
        settings.run.adversary = s;
    }
    if let Some(r) = args.runs {
        settings.run.runs = r;
    }
    let cfg = &settings.protocol;
    let strategy = &settings.run.adversary;
    let sim = Simulation::new(cfg, strategy)?;
    let meta = Meta::new("run", settings);
    let transcripts = sim.run_many(settings.run.runs, EXEC);
    for t in &transcripts {
        if rqbc_core::protocol::parity(t.record.channel_bits()) != t.record.bit() {
            return Err(CliError::Invariant(format!("run {} broke the parity invariant", t.run)));
        }
    }

    let stats = sim.summarize(settings.run.runs, EXEC);
    let p = sim.distribution(0).p1;
    eprintln!(
        "runs {}: accepted {}, aborted {}, inconclusive {}, flagged {}, successes {}",
        stats.runs, stats.accepted, stats.aborted, stats.inconclusive, stats.flagged, stats.successes
    );
    eprintln!(
        "per-channel claimed-outcome probability {p:.6}; silent-channel penalty (1 - p) * N = {:.3e}",
        (1.0 - p) * cfg.channels as f64
    );

    match (target.format, target.out) {
        (Format::Json, Some(dir)) => {
            let items: Vec<(u64, _)> = transcripts.iter().map(|t| (t.run, t)).collect();
            write_json_per_item(&meta, &items, dir)
        }
        (Format::Json, None) => write_table(&meta, &transcripts, &[], Format::Json, None),
        (Format::Csv, out) => {
            let t_probe = match strategy {
                Strategy::EarlyMeasure { t_probe } => *t_probe,
                _ => cfg.t_probe,
            };
            let rows: Vec<RunRow> = transcripts
                .iter()
                .map(|t| RunRow {
                    seed: t.run_seed,
                    n: cfg.channels,
                    t_probe,
                    t_open: cfg.t_open,
                    family: cfg.family,
                    adversary: strategy.name(),
                    success: t.success,
                    aborted: t.aborted(),
                })
                .collect();
            write_table(
                &meta,
                &rows,
                &["seed", "N", "T_probe", "T_open", "family", "adversary", "success", "aborted"],
                Format::Csv,
                out,
            )
        }
    }
}

#[derive(Serialize)]
struct AttackRow {
    strategy: &'static str,
    param: Option<f64>,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "T")]
    t: f64,
    q: f64,
    detection_prob: f64,
    #[serde(rename = "P_ind")]
    p_ind: f64,
    #[serde(rename = "P_coll")]
    p_coll: f64,
    #[serde(rename = "P_guess")]
    p_guess: f64,
}

pub fn attack(settings: &mut Settings, args: &AttackArgs, target: Target) -> Result<(), CliError> {
    if let Some(s) = strategy_from(&args.strategy, settings)? {
        settings.attack.strategies = vec![s];
    }
    if let Some(n) = &args.channels {
        settings.attack.channels = n.clone();
    }
    if let Some(t) = &args.times {
        settings.attack.times = t.clone();
    }
    let cfg = settings.protocol.clone();
    let spec = &settings.attack;
    if spec.channels.contains(&0) {
        return Err(CliError::Config("channel counts must be positive".into()));
    }
    let channels = if spec.channels.is_empty() { vec![cfg.channels] } else { spec.channels.clone() };
    let times = if spec.times.is_empty() { vec![cfg.t_open] } else { spec.times.clone() };
    for s in &spec.strategies {
        s.validate(&cfg)?;
    }

    // (strategy, T) pairs; an early-measuring B looks at its own probe time
    let mut cases: Vec<(&Strategy, f64)> = Vec::new();
    for s in &spec.strategies {
        match s {
            Strategy::EarlyMeasure { t_probe } => cases.push((s, *t_probe)),
            _ => cases.extend(times.iter().map(|&t| (s, t))),
        }
    }
    let evaluated = EXEC.try_map(cases.len(), |i| -> Result<(f64, f64), CliError> {
        let (s, t) = cases[i];
        let w = cfg.window_at(t);
        let q = per_channel_flag_prob(&cfg, s, cfg.family, w)?;
        let p = detect_prob_for(&cfg.psi1, w, &cfg.grid)?;
        Ok((q, p))
    })?;
    let mut rows = Vec::new();
    for ((s, t), (q, p)) in cases.iter().zip(evaluated) {
        for &n in &channels {
            rows.push(AttackRow {
                strategy: s.name(),
                param: s.param(),
                n,
                t: *t,
                q,
                detection_prob: cheat_detection_prob(q, n)?,
                p_ind: ident_prob_individual(p, n)?,
                p_coll: ident_prob_collective(p, n)?,
                p_guess: guess_success(p, n)?,
            });
        }
    }
    let meta = Meta::new("attack", settings);
    write_table(
        &meta,
        &rows,
        &["strategy", "param", "N", "T", "q", "detection_prob", "P_ind", "P_coll", "P_guess"],
        target.format,
        target.out,
    )
}

#[derive(Serialize)]
struct AuditRow {
    check: &'static str,
    subject: String,
    t_delta: f64,
    min_eigenvalue: Option<f64>,
    residual: f64,
    tolerance: f64,
    pass: bool,
}

fn corrupt(povm: &Povm) -> Povm {
    let mut elements = povm.elements().clone();
    elements[0][(0, 0)] -= Complex64::new(1e-3, 0.0);
    Povm::from_elements_unchecked(povm.family(), povm.half_width(), povm.grid().clone(), elements)
}

pub fn validate(settings: &mut Settings, args: &ValidateArgs, target: Target) -> Result<(), CliError> {
    if let Some(t) = &args.t_deltas {
        settings.validate.t_deltas = t.clone();
    }
    let cfg = &settings.protocol;
    let pair = cfg.validate()?;
    let delta = pair.bandwidth();
    let t_deltas = &settings.validate.t_deltas;
    if t_deltas.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(CliError::Config("t_deltas must be finite and non-negative".into()));
    }

    let mut rows = Vec::new();
    let families = [PovmFamily::Support, PovmFamily::State];
    let audits = EXEC.try_map(families.len() * t_deltas.len(), |i| -> Result<ValidityReport, CliError> {
        let (family, td) = (families[i / t_deltas.len()], t_deltas[i % t_deltas.len()]);
        let app = Apparatus::new(&pair, family, td / delta, &cfg.grid, &[])?;
        let povm = if args.inject_corruption && i == 0 { corrupt(app.povm()) } else { app.povm().clone() };
        Ok(povm_validity_bruteforce(&povm))
    })?;
    for (i, report) in audits.iter().enumerate() {
        let (family, td) = (families[i / t_deltas.len()], t_deltas[i % t_deltas.len()]);
        let min_ev = report.min_eigenvalue();
        rows.push(AuditRow {
            check: "povm-positivity",
            subject: family.name().to_string(),
            t_delta: td,
            min_eigenvalue: Some(min_ev),
            residual: (-min_ev).max(0.0),
            tolerance: -ValidityReport::MIN_EIGENVALUE,
            pass: min_ev >= ValidityReport::MIN_EIGENVALUE,
        });
        rows.push(AuditRow {
            check: "povm-completeness",
            subject: family.name().to_string(),
            t_delta: td,
            min_eigenvalue: Some(min_ev),
            residual: report.completeness_residual,
            tolerance: ValidityReport::COMPLETENESS,
            pass: report.passed(),
        });
    }

    let shapes = Shape::ALL;
    let oracle = EXEC.try_map(shapes.len() * t_deltas.len(), |i| -> Result<AuditRow, CliError> {
        let (shape, td) = (shapes[i / t_deltas.len()], t_deltas[i % t_deltas.len()]);
        let amp = make_amplitude(shape, 2.0 * delta, delta, 0.0)?;
        let t = td / delta;
        let kernel = detect_prob_for(&amp, t, &cfg.grid)?;
        let direct = detect_prob_time_domain(&amp, t);
        let residual = if direct > 0.0 { (kernel - direct).abs() / direct } else { kernel.abs() };
        Ok(AuditRow {
            check: "kernel-vs-time-domain",
            subject: shape.name().to_string(),
            t_delta: td,
            min_eigenvalue: None,
            residual,
            tolerance: 1e-6,
            pass: residual <= 1e-6,
        })
    })?;
    rows.extend(oracle);
    for &td in t_deltas {
        let amp = make_amplitude(Shape::Rectangular, 2.0 * delta, delta, 0.0)?;
        let residual =
            (detect_prob_for(&amp, td / delta, &cfg.grid)? - detect_prob_flat_closed_form(delta, td / delta)).abs();
        rows.push(AuditRow {
            check: "kernel-vs-closed-form",
            subject: Shape::Rectangular.name().to_string(),
            t_delta: td,
            min_eigenvalue: None,
            residual,
            tolerance: 1e-8,
            pass: residual <= 1e-8,
        });
    }

    let meta = Meta::new("validate", settings);
    write_table(
        &meta,
        &rows,
        &["check", "subject", "t_delta", "min_eigenvalue", "residual", "tolerance", "pass"],
        target.format,
        target.out,
    )?;
    let failed = rows.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        return Err(CliError::Invariant(format!("{failed} of {} audit checks failed", rows.len())));
    }
    eprintln!("all {} audit checks passed", rows.len());
    Ok(())
}
