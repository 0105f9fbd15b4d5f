//! Command-line front end: record I/O, the binning and diagnostics commands
//! and the replication runs.

pub mod config;
pub mod io;
pub mod replicate;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bayesbin::diagnostics::{bias_demo, DiagnosticsReport};
use bayesbin::{
    pack_bits, run_online, run_pipeline, BinAssignment64, BinningConfig64, Channel,
    HomodyneModel64, HomodyneStats64, MeasurementModel, MeasurementRecord64, Method, ModelKind,
    SymbolHistogram, SymbolStream, ToaConfig64, ToaModel64, ToaStats64,
};
use serde::Serialize;
use serde_json::json;

use config::{Command, RunConfig};
use io::OutputSet;

/// What a command printed and which files it left behind.
#[derive(Debug, Default)]
pub struct RunOutcome {
    pub stdout: String,
    pub files: Vec<PathBuf>,
}

pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    match cfg.command {
        Command::SimulateToa => simulate_toa(cfg),
        Command::SimulateHomodyne => simulate_homodyne(cfg),
        Command::Bin => bin(cfg),
        Command::Diagnose => diagnose(cfg),
        Command::BiasDemo => cmd_bias_demo(cfg),
        Command::ReplicateToa => cmd_replicate_toa(cfg),
        Command::ReplicateHomodyne => cmd_replicate_homodyne(cfg),
    }
}

fn simulate_toa(cfg: &RunConfig) -> Result<RunOutcome> {
    let model = ToaModel64::new(ToaConfig64::new(cfg.tau_a, cfg.jitter_sigma)?);
    let n = cfg.sample_count.unwrap_or(replicate::TOA_FILTERED);
    let samples = model.simulate_with_afterpulses(n, cfg.theta, cfg.afterpulse_fraction, cfg.seed)?;
    write_record(cfg, MeasurementRecord64::new(ModelKind::Toa, samples))
}

fn simulate_homodyne(cfg: &RunConfig) -> Result<RunOutcome> {
    let n = cfg.sample_count.unwrap_or(replicate::HOMODYNE_SAMPLES);
    let samples = HomodyneModel64::new().simulate(n, cfg.sigma_vac, cfg.sigma_e, cfg.seed)?;
    write_record(cfg, MeasurementRecord64::new(ModelKind::Homodyne, samples))
}

fn write_record(cfg: &RunConfig, record: MeasurementRecord64) -> Result<RunOutcome> {
    let mut out = OutputSet::new();
    out.write(cfg.output(), io::format_record(&record))?;
    Ok(RunOutcome {
        stdout: format!("wrote {} samples to {}\n", record.len(), cfg.output().display()),
        files: out.commit(),
    })
}

#[derive(Debug, Serialize)]
struct ChannelReport {
    channel: &'static str,
    total_input: usize,
    accepted: usize,
    acceptance_fraction: f64,
    entropy_per_bit: f64,
    entropy_bits: f64,
    kl_to_uniform_bits: f64,
    chi_square_statistic: Option<f64>,
    chi_square_p_value: Option<f64>,
}

impl ChannelReport {
    fn new(channel: &'static str, d: &DiagnosticsReport) -> Self {
        ChannelReport {
            channel,
            total_input: d.total_input,
            accepted: d.accepted,
            acceptance_fraction: d.acceptance_fraction,
            entropy_per_bit: d.entropy_per_bit,
            entropy_bits: d.entropy_bits,
            kl_to_uniform_bits: d.kl_to_uniform_bits,
            chi_square_statistic: d.chi_square.map(|c| c.statistic),
            chi_square_p_value: d.chi_square.map(|c| c.p_value),
        }
    }
}

#[derive(Debug, Serialize)]
struct BinReport {
    model: &'static str,
    method: &'static str,
    online: bool,
    bit_depth: u32,
    acceptance_prob: f64,
    seed: u64,
    input_samples: usize,
    removed_afterpulses: usize,
    total_input: usize,
    accepted: usize,
    acceptance_fraction: f64,
    entropy_per_bit: f64,
    kl_to_uniform_bits: f64,
    chi_square_p_value: Option<f64>,
    parameter_estimate: Option<f64>,
    sufficient_statistics: serde_json::Value,
    channels: Vec<ChannelReport>,
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::ConventionalMle => "conventional",
        Method::Bayesian => "bayesian",
    }
}

trait StatsJson {
    fn to_json(&self) -> serde_json::Value;
}

impl StatsJson for ToaStats64 {
    fn to_json(&self) -> serde_json::Value {
        json!({ "n": self.n(), "offset_sum": self.offset_sum() })
    }
}

impl StatsJson for HomodyneStats64 {
    fn to_json(&self) -> serde_json::Value {
        json!({ "n": self.n(), "sum_sq": self.sum_sq() })
    }
}

/// Pipeline output with the statistics already rendered for the report.
struct Converted {
    stream: SymbolStream,
    assignments: Vec<BinAssignment64>,
    parameter: Option<f64>,
    stats: serde_json::Value,
}

fn convert<M>(record: &MeasurementRecord64, model: &M, cfg: &RunConfig) -> Result<Converted>
where
    M: MeasurementModel<f64>,
    M::Stats: StatsJson,
{
    let binning = BinningConfig64::new(cfg.bits(), cfg.acceptance_prob, cfg.method)?;
    let out = if cfg.online {
        run_online(record, model, &binning)?
    } else {
        run_pipeline(record, model, &binning)?
    };
    Ok(Converted {
        stats: out.stats.to_json(),
        stream: out.stream,
        assignments: out.assignments,
        parameter: out.parameter,
    })
}

fn channel_report(
    name: &'static str,
    assignments: &[BinAssignment64],
    channel: Channel,
    bits: u32,
) -> Result<ChannelReport> {
    let units = assignments.iter().filter(|a| a.channel == channel).count();
    let symbols: Vec<u32> = assignments
        .iter()
        .filter(|a| a.accepted && a.channel == channel)
        .map(|a| a.bin_index)
        .collect();
    let hist = SymbolHistogram::from_symbols(&symbols, bits)?;
    Ok(ChannelReport::new(name, &DiagnosticsReport::from_histogram(&hist, bits, units)?))
}

fn bin(cfg: &RunConfig) -> Result<RunOutcome> {
    let kind = cfg.model.expect("validated");
    let record = io::read_record(cfg.input(), kind)?;
    let input_samples = record.len();
    let bits = cfg.bits();

    let (out, removed) = match kind {
        ModelKind::Toa => {
            let model = ToaModel64::new(ToaConfig64::new(cfg.tau_a, 0.0)?);
            let (kept, removed) = model.filter_afterpulse(&record.samples);
            let filtered = MeasurementRecord64::new(ModelKind::Toa, kept);
            (convert(&filtered, &model, cfg)?, removed)
        }
        ModelKind::Homodyne => (convert(&record, &HomodyneModel64::new(), cfg)?, 0),
    };

    let overall = DiagnosticsReport::from_stream(&out.stream)?;
    let mut channels = vec![ChannelReport::new("all", &overall)];
    if kind == ModelKind::Homodyne && cfg.method == Method::Bayesian {
        channels.push(channel_report("radius", &out.assignments, Channel::Radius, bits)?);
        channels.push(channel_report("angle", &out.assignments, Channel::Angle, bits)?);
    }
    let report = BinReport {
        model: io::kind_name(kind),
        method: method_name(cfg.method),
        online: cfg.online,
        bit_depth: bits,
        acceptance_prob: cfg.acceptance_prob,
        seed: cfg.seed,
        input_samples,
        removed_afterpulses: removed,
        total_input: overall.total_input,
        accepted: overall.accepted,
        acceptance_fraction: overall.acceptance_fraction,
        entropy_per_bit: overall.entropy_per_bit,
        kl_to_uniform_bits: overall.kl_to_uniform_bits,
        chi_square_p_value: overall.chi_square.map(|c| c.p_value),
        parameter_estimate: out.parameter,
        sufficient_statistics: out.stats,
        channels,
    };

    let primary = cfg.output();
    let mut files = OutputSet::new();
    files.write(primary, pack_bits(&out.stream)?)?;
    files.write(
        io::sibling(primary, ".symbols.csv"),
        io::format_symbols(&io::symbol_rows(&out.assignments))?,
    )?;
    files.write(io::sibling(primary, ".json"), io::format_json(&report)?)?;
    files.write(
        io::sibling(primary, ".assignments.csv"),
        io::format_assignments(&out.assignments)?,
    )?;
    let stdout = format!(
        "{} {} b={}: accepted {} of {} ({:.6}), entropy per bit {:.6}\n",
        report.model,
        report.method,
        bits,
        report.accepted,
        report.total_input,
        report.acceptance_fraction,
        report.entropy_per_bit
    );
    Ok(RunOutcome {
        stdout,
        files: files.commit(),
    })
}

fn diagnose(cfg: &RunConfig) -> Result<RunOutcome> {
    let bits = cfg.bits();
    let rows = io::read_symbols(cfg.input())?;
    let mut by_channel: Vec<(&'static str, Vec<u32>)> = Vec::new();
    let all: Vec<u32> = rows.iter().map(|r| r.symbol).collect();
    for r in &rows {
        let Some(ch) = io::channel_from_str(&r.channel) else {
            bail!("symbol {}: unknown channel {:?}", r.index, r.channel);
        };
        match by_channel.iter_mut().find(|(name, _)| *name == ch.as_str()) {
            Some((_, v)) => v.push(r.symbol),
            None => by_channel.push((ch.as_str(), vec![r.symbol])),
        }
    }
    let report_for = |name: &'static str, symbols: &[u32]| -> Result<ChannelReport> {
        let hist = SymbolHistogram::from_symbols(symbols, bits)
            .with_context(|| format!("symbols on channel {name}"))?;
        Ok(ChannelReport::new(
            name,
            &DiagnosticsReport::from_histogram(&hist, bits, symbols.len())?,
        ))
    };
    let mut channels = vec![report_for("all", &all)?];
    if by_channel.len() > 1 {
        for (name, symbols) in &by_channel {
            channels.push(report_for(name, symbols)?);
        }
    }
    let body = io::format_json(&json!({ "bit_depth": bits, "channels": channels }))?;
    emit(cfg.output_path.as_deref(), body)
}

/// Writes `body` to `path`, or returns it as stdout when there is no path.
fn emit(path: Option<&Path>, body: Vec<u8>) -> Result<RunOutcome> {
    match path {
        Some(p) => {
            let mut files = OutputSet::new();
            files.write(p, &body)?;
            Ok(RunOutcome {
                stdout: format!("wrote {}\n", p.display()),
                files: files.commit(),
            })
        }
        None => Ok(RunOutcome {
            stdout: String::from_utf8(body)?,
            files: Vec::new(),
        }),
    }
}

fn cmd_bias_demo(cfg: &RunConfig) -> Result<RunOutcome> {
    let demo = bias_demo();
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "rate {} used, {} true: KL to uniform {:.7} bits",
        demo.theta_low, demo.theta_high, demo.kl_underestimated_bits
    );
    let _ = writeln!(
        summary,
        "rate {} used, {} true: KL to uniform {:.7} bits",
        demo.theta_high, demo.theta_low, demo.kl_overestimated_bits
    );
    match cfg.output_path.as_deref() {
        Some(p) => {
            let mut out = emit(Some(p), demo.to_csv().into_bytes())?;
            out.stdout.insert_str(0, &summary);
            Ok(out)
        }
        None => Ok(RunOutcome {
            stdout: format!("{}{summary}", demo.to_csv()),
            files: Vec::new(),
        }),
    }
}

fn replication_dir(cfg: &RunConfig) -> Result<Option<&Path>> {
    let Some(dir) = cfg.output_path.as_deref() else {
        return Ok(None);
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(Some(dir))
}

fn cmd_replicate_toa(cfg: &RunConfig) -> Result<RunOutcome> {
    let rep = replicate::replicate_toa(cfg.seed)?;
    let mut stdout = format!(
        "time-of-arrival replication: {} samples, theta {:e} 1/s, tau_a {:e} s, P_a {}, seed {}\n\
         theta MLE {:e} 1/s\n\
         afterpulse filter: {} of {} raw samples retained (reference {})\n\n",
        rep.samples,
        rep.theta,
        rep.tau_a,
        rep.acceptance_prob,
        rep.seed,
        rep.theta_mle,
        rep.afterpulse.retained,
        rep.afterpulse.raw_samples,
        rep.afterpulse.reference_retained,
    );
    stdout.push_str(&replicate::table(&rep.rows));
    let mut files = OutputSet::new();
    if let Some(dir) = replication_dir(cfg)? {
        files.write(dir.join("toa_table.csv"), replicate::rows_csv(&rep.rows)?)?;
        files.write(dir.join("toa_summary.json"), io::format_json(&rep)?)?;
        for bits in replicate::TOA_BITS {
            files.write(
                dir.join(format!("toa_histogram_{bits}bit.csv")),
                replicate::histogram_csv(&rep.rows, bits),
            )?;
        }
    }
    Ok(RunOutcome {
        stdout,
        files: files.commit(),
    })
}

fn cmd_replicate_homodyne(cfg: &RunConfig) -> Result<RunOutcome> {
    let rep = replicate::replicate_homodyne(cfg.seed)?;
    let mut stdout = format!(
        "homodyne replication: {} samples, sigma_vac {}, sigma_e {}, P_a {}, seed {}\n\
         variance MLE {}\n\n",
        rep.samples, rep.sigma_vac, rep.sigma_e, rep.acceptance_prob, rep.seed, rep.variance_mle,
    );
    stdout.push_str(&replicate::table(&rep.rows));
    let mut files = OutputSet::new();
    if let Some(dir) = replication_dir(cfg)? {
        files.write(dir.join("homodyne_table.csv"), replicate::rows_csv(&rep.rows)?)?;
        files.write(dir.join("homodyne_summary.json"), io::format_json(&rep)?)?;
        for bits in replicate::HOMODYNE_BITS {
            files.write(
                dir.join(format!("homodyne_histogram_{bits}bit.csv")),
                replicate::histogram_csv(&rep.rows, bits),
            )?;
        }
    }
    Ok(RunOutcome {
        stdout,
        files: files.commit(),
    })
}
