use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use tqkd_core::adversary::{analyze_ancilla, predict, AncillaReport, AttackModel, BasisPairPrediction, EQUAL_ALPHA};
use tqkd_core::netsim::{run_network_scenario, Execution, NetworkScenario};
use tqkd_core::protocols::{
    abort_probability, run_session, BasisPairStats, ProtocolId, Role, SessionConfig, SessionTranscript, SummaryRow,
    SCHEMA_VERSION, TIME_RESERVED_BASELINE,
};
use tqkd_core::qstate::{derive_correlation_table, Basis, CorrelationTable, TableScenario};
use tqkd_core::rng::derive_seed;

use crate::{
    AttackArgs, AttackKind, BenchArgs, CliError, NetworkArgs, RunArgs, SessionArgs, Status, TableFormat,
    TableSelector, TablesArgs, TargetArg,
};

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(path.display().to_string(), e))
}

fn emit(path: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_file(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

pub fn tables(args: TablesArgs) -> Result<Status, CliError> {
    let scenarios: Vec<TableScenario> = match args.scenario {
        TableSelector::Bell => vec![TableScenario::BellTableI],
        TableSelector::Mixed => vec![TableScenario::MixedTableII],
        TableSelector::Ghz => vec![TableScenario::GhzTableIII],
        TableSelector::All => TableScenario::ALL.to_vec(),
    };
    let tables: Vec<CorrelationTable> = scenarios.into_iter().map(derive_correlation_table).collect();
    let out = match args.format {
        TableFormat::Text => tables.iter().map(CorrelationTable::render_text).collect::<Vec<_>>().join("\n"),
        TableFormat::Csv => {
            let mut lines = vec![CorrelationTable::CSV_HEADER.to_string()];
            for t in &tables {
                lines.extend(t.csv_rows());
            }
            lines.join("\n") + "\n"
        }
    };
    emit(args.out.as_deref(), &out)?;
    Ok(Status::Ok)
}

fn session_config(args: &SessionArgs, default_threshold: f64) -> Result<SessionConfig, CliError> {
    let mut config = SessionConfig::new(args.protocol, args.num_states, args.seed);
    config.loss_probability = args.loss;
    config.check_fraction = args.check_fraction;
    config.qber_abort_threshold = args.threshold.unwrap_or(default_threshold);
    if let Some(eps) = args.epsilon {
        config.distill.epsilon = eps;
    }
    config.validate()?;
    Ok(config)
}

fn status_of(t: &SessionTranscript) -> Status {
    if t.aborted() {
        Status::Aborted
    } else {
        Status::Ok
    }
}

fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SummaryRow::CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

pub fn run(args: RunArgs) -> Result<Status, CliError> {
    let config = session_config(&args.session, 0.0)?;
    let t = run_session(&config)?;
    println!(
        "{} states={} loss={} seed={}",
        config.protocol, config.num_states, config.loss_probability, config.rng_seed
    );
    println!("kept fraction  {:.4} ({} of {})", t.kept_fraction(), t.kept_count(), config.num_states);
    println!("check          {} checked, {} errors, qber {:.4}", t.check.checked, t.check.errors, t.qber());
    if t.check.empty_check {
        println!("warning        no positions were available for the check");
    }
    println!("aborted        {}", t.aborted());
    println!("final key      {} bits", t.final_key_bits());
    println!(
        "efficiency     {:.4} measured, {:.4} bound, {:.4} time-reserved baseline",
        t.efficiency_measured, t.efficiency_bound, t.efficiency_baseline
    );
    if let Some(path) = &args.out {
        write_file(path, &(t.to_json() + "\n"))?;
    }
    if let Some(path) = &args.summary_csv {
        write_file(path, &summary_csv(&[t.summary_row()]))?;
    }
    if let Some(path) = &args.key_out {
        let key = t
            .distillation
            .as_ref()
            .ok_or_else(|| CliError::Usage("session aborted; no key to export".into()))?;
        write_file(path, &key.alice.export_hex())?;
    }
    Ok(status_of(&t))
}

fn parse_basis(s: &str) -> Result<Basis, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "x" => Ok(Basis::X),
        "y" => Ok(Basis::Y),
        "z" => Ok(Basis::Z),
        _ => Err(CliError::Usage(format!("unknown basis {s:?}"))),
    }
}

fn attack_model(args: &AttackArgs) -> Result<AttackModel, CliError> {
    let protocol = args.session.protocol;
    Ok(match args.attack {
        AttackKind::InterceptResend => {
            let target = match args.target {
                TargetArg::Alice => Role::Alice,
                TargetArg::Bob => Role::Bob,
            };
            let basis_pool = match &args.pool {
                Some(pool) => pool
                    .chars()
                    .filter(|c| !matches!(c, ',' | ' '))
                    .map(|c| parse_basis(&c.to_string()))
                    .collect::<Result<Vec<_>, _>>()?,
                None => protocol.user_bases().to_vec(),
            };
            AttackModel::InterceptResend { target, basis_pool }
        }
        AttackKind::CheatingCenter => AttackModel::CheatingCenterMeasureAll {
            basis: parse_basis(&args.basis)?,
        },
        AttackKind::Ancilla => AttackModel::AncillaEntangle {
            coupling: args.coupling,
        },
    })
}

#[derive(Serialize)]
struct BasisPairReport {
    alice_basis: Basis,
    bob_basis: Basis,
    predicted_error_rate: f64,
    checked: usize,
    errors: usize,
    observed_error_rate: Option<f64>,
}

#[derive(Serialize)]
struct AttackReport {
    schema_version: u32,
    protocol: ProtocolId,
    attack: AttackModel,
    num_states: usize,
    seed: u64,
    threshold: f64,
    predicted_detection_rate: f64,
    observed_detection_rate: Option<f64>,
    checked: usize,
    errors: usize,
    aborted: bool,
    /// Chance of aborting at this many checks if errors occur at the predicted rate.
    predicted_abort_probability: f64,
    predicted_eve_accuracy: f64,
    observed_eve_accuracy: Option<f64>,
    by_bases: Vec<BasisPairReport>,
    ancilla: Option<AncillaReport>,
}

fn pair_reports(predicted: &[BasisPairPrediction], observed: &[BasisPairStats]) -> Vec<BasisPairReport> {
    predicted
        .iter()
        .map(|p| {
            let o = observed
                .iter()
                .find(|o| o.alice_basis == p.alice_basis && o.bob_basis == p.bob_basis);
            let (checked, errors) = o.map_or((0, 0), |o| (o.checked, o.errors));
            BasisPairReport {
                alice_basis: p.alice_basis,
                bob_basis: p.bob_basis,
                predicted_error_rate: p.error_rate,
                checked,
                errors,
                observed_error_rate: (checked > 0).then(|| errors as f64 / checked as f64),
            }
        })
        .collect()
}

pub fn attack(args: AttackArgs) -> Result<Status, CliError> {
    let model = attack_model(&args)?;
    let mut config = session_config(&args.session, 0.05)?;
    config.attack = model.clone();
    config.validate()?;
    let prediction = predict(config.protocol, &model)?;
    let t = run_session(&config)?;
    let eve = t.adversary.as_ref().expect("attacked sessions carry an adversary report");
    let ancilla = match model {
        AttackModel::AncillaEntangle { coupling } => Some(analyze_ancilla(config.protocol, coupling, EQUAL_ALPHA)?),
        _ => None,
    };
    let report = AttackReport {
        schema_version: SCHEMA_VERSION,
        protocol: config.protocol,
        attack: model.clone(),
        num_states: config.num_states,
        seed: config.rng_seed,
        threshold: config.qber_abort_threshold,
        predicted_detection_rate: prediction.detection_rate,
        observed_detection_rate: eve.observed_detection_rate,
        checked: t.check.checked,
        errors: t.check.errors,
        aborted: t.aborted(),
        predicted_abort_probability: abort_probability(
            prediction.detection_rate,
            t.check.checked,
            config.qber_abort_threshold,
        ),
        predicted_eve_accuracy: prediction.eve_accuracy,
        observed_eve_accuracy: eve.observed_eve_accuracy,
        by_bases: pair_reports(&prediction.by_bases, &t.check_stats_by_bases()),
        ancilla,
    };

    println!("{} under {}", config.protocol, model.label());
    println!(
        "detection      predicted {:.6}, observed {} over {} checks",
        report.predicted_detection_rate,
        fmt_opt(report.observed_detection_rate),
        report.checked
    );
    for p in &report.by_bases {
        println!(
            "  {}-{}         predicted {:.6}, observed {} ({} of {})",
            p.alice_basis,
            p.bob_basis,
            p.predicted_error_rate,
            fmt_opt(p.observed_error_rate),
            p.errors,
            p.checked
        );
    }
    println!(
        "aborted        {} (threshold {}, predicted abort probability {:.6})",
        report.aborted, report.threshold, report.predicted_abort_probability
    );
    println!(
        "eve accuracy   predicted {:.6}, observed {}",
        report.predicted_eve_accuracy,
        fmt_opt(report.observed_eve_accuracy)
    );
    if let Some(a) = &report.ancilla {
        println!(
            "probe          guess after projection {:.6}, center branch {:.6}, x-x key guess {:.6}",
            a.eve_guess_probability, a.center_branch_guess, a.key_guess_unprojected_xx
        );
    }
    if let Some(path) = &args.out {
        write_file(path, &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"))?;
    }
    if let Some(path) = &args.transcript {
        write_file(path, &(t.to_json() + "\n"))?;
    }
    Ok(status_of(&t))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("n/a".to_string(), |v| format!("{v:.6}"))
}

fn parse_protocols(s: &str) -> Result<Vec<ProtocolId>, CliError> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(ProtocolId::ALL.to_vec());
    }
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|e: tqkd_core::protocols::ProtocolError| CliError::Usage(e.to_string())))
        .collect()
}

fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse().map_err(|_| CliError::Usage(format!("bad loss value {v:?}"))))
        .collect()
}

pub const BENCH_CSV_HEADER: &str =
    "protocol,num_states,loss,kept_fraction,qber,aborted,key_bits,efficiency_measured,efficiency_bound,baseline";

pub fn bench(args: BenchArgs) -> Result<Status, CliError> {
    let protocols = parse_protocols(&args.protocols)?;
    let grid = parse_grid(&args.loss_grid)?;
    let mut configs = Vec::new();
    for protocol in &protocols {
        for loss in &grid {
            let mut config = SessionConfig::new(*protocol, args.num_states, derive_seed(args.seed, configs.len() as u64));
            config.loss_probability = *loss;
            config.check_fraction = args.check_fraction;
            config.validate()?;
            configs.push(config);
        }
    }
    let rows: Vec<String> = configs
        .par_iter()
        .map(|config| {
            run_session(config).map(|t| {
                format!(
                    "{},{},{},{},{},{},{},{},{},{}",
                    config.protocol,
                    config.num_states,
                    config.loss_probability,
                    t.kept_fraction(),
                    t.qber(),
                    t.aborted(),
                    t.final_key_bits(),
                    t.efficiency_measured,
                    t.efficiency_bound,
                    TIME_RESERVED_BASELINE
                )
            })
        })
        .collect::<Result<_, _>>()?;
    let mut out = String::from(BENCH_CSV_HEADER);
    out.push('\n');
    for r in &rows {
        out.push_str(r);
        out.push('\n');
    }
    emit(args.out.as_deref(), &out)?;
    if args.out.is_some() {
        println!("{} rows", rows.len());
    }
    Ok(Status::Ok)
}

pub fn network(args: NetworkArgs) -> Result<Status, CliError> {
    let path = args.scenario.display().to_string();
    let text = fs::read_to_string(&args.scenario).map_err(|e| CliError::Io(path, e))?;
    let scenario = NetworkScenario::from_json(&text)?;
    let execution = if args.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let run = run_network_scenario(&scenario, execution)?;
    for s in &run.report.sessions {
        match &s.error {
            Some(e) => println!("#{} {}->{} {} failed: {e}", s.index, s.requester, s.responder, s.protocol),
            None => println!(
                "#{} {}->{} {} kept {:.4} qber {:.4} aborted {} key {} bits",
                s.index,
                s.requester,
                s.responder,
                s.protocol,
                s.kept_fraction.unwrap_or_default(),
                s.qber.unwrap_or_default(),
                s.aborted.unwrap_or_default(),
                s.key_bits.unwrap_or_default()
            ),
        }
    }
    if let Some(path) = &args.out {
        write_file(path, &(run.report.to_json() + "\n"))?;
    }
    if let Some(path) = &args.csv {
        write_file(path, &run.report.to_csv())?;
    }
    if let Some(dir) = &args.transcripts {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.display().to_string(), e))?;
        for (i, t) in run.transcripts.iter().enumerate() {
            if let Ok(t) = t {
                write_file(&dir.join(format!("session_{i:03}.json")), &(t.to_json() + "\n"))?;
            }
        }
    }
    let failed = run.report.sessions.iter().filter(|s| s.error.is_some()).count();
    if failed > 0 {
        Err(CliError::Usage(format!("{failed} session(s) failed")))
    } else if run.report.sessions.iter().any(|s| s.aborted == Some(true)) {
        Ok(Status::Aborted)
    } else {
        Ok(Status::Ok)
    }
}
