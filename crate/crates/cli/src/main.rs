use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dyadic_sobolev::counterexamples::{
    divergence_experiment, CounterexampleSpec, Family, Verdict, EXPERIMENT_COLUMNS,
};
use dyadic_sobolev::embeddings::{
    local_ensemble, run_ensemble, CalibrationFixture, Check, Distribution, EnsembleReport,
    EnsembleSpec, LOCAL_INTERVAL, VERDICT_COLUMNS,
};
use dyadic_sobolev::norms::{NormReport, NORM_REPORT_COLUMNS};
use dyadic_sobolev::verify::{run_suites, Suite, VERIFY_COLUMNS};
use dyadic_sobolev::{Error, FractionalParameter, HaarSeries, StepFunction};

const DEFAULT_CALIBRATION: &str = include_str!("../fixtures/calibration.json");

#[derive(Parser)]
#[command(
    name = "dyadic-sobolev",
    version,
    about = "Dyadic Sobolev norm experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckKind {
    Morrey,
    Bmo,
    Gns,
    Algebra,
    LocalSquare,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Lowreg,
    Critical,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistributionArg {
    Uniform,
    LacunaryTower,
    SingleInterval,
}

#[derive(Subcommand)]
enum Command {
    /// Norm report of a Haar series or step function read as JSON.
    Norms {
        /// JSON file; stdin when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long = "s", required = true)]
        s: Vec<f64>,
        /// Tail levels summed explicitly for step-function input.
        #[arg(long, default_value_t = 64)]
        depth: u32,
        #[command(flatten)]
        out: Output,
    },
    /// Residual sweeps; all suites when none are named.
    Verify {
        #[arg(value_parser = parse_suite)]
        suites: Vec<Suite>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Run embedding checks over a seeded ensemble, one report per s.
    EmbeddingScan {
        #[arg(value_enum, required = true)]
        checks: Vec<CheckKind>,
        #[arg(long = "s")]
        s: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, value_enum, default_value_t = DistributionArg::Uniform)]
        distribution: DistributionArg,
        #[arg(long, default_value_t = 12)]
        sparsity: usize,
        /// Calibration fixture; the bundled one when absent.
        #[arg(long)]
        calibration: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
    /// Divergence experiment for a counterexample family.
    Counterexample {
        #[arg(value_enum)]
        family: FamilyArg,
        #[arg(long = "s")]
        s: f64,
        #[arg(long)]
        alpha: f64,
        /// A level, `a..b` (inclusive) or `a..b:step`; repeatable.
        #[arg(long = "n", required = true, value_parser = parse_levels)]
        n: Vec<Vec<u32>>,
        #[command(flatten)]
        out: Output,
    },
    /// Regenerate the calibration fixture.
    Calibrate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4000)]
        count: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_levels(s: &str) -> Result<Vec<u32>, String> {
    let num = |t: &str| t.trim().parse::<u32>().map_err(|e| format!("{t:?}: {e}"));
    let Some((lo, rest)) = s.split_once("..") else {
        return Ok(vec![num(s)?]);
    };
    let (hi, step) = match rest.split_once(':') {
        Some((hi, step)) => (num(hi)?, num(step)?),
        None => (num(rest)?, 1),
    };
    let lo = num(lo)?;
    if step == 0 || lo > hi {
        return Err(format!("empty range {s:?}"));
    }
    Ok((lo..=hi).step_by(step as usize).collect())
}

/// 0 on success or pass, 1 on a failed assertion. Usage and input
/// problems surface as errors.
enum Status {
    Pass,
    Fail,
}

impl Status {
    fn from_bool(pass: bool) -> Self {
        if pass {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let assertion = matches!(
                e.downcast_ref::<Error>(),
                Some(Error::CoefficientMismatch { .. })
            );
            ExitCode::from(if assertion { 1 } else { 2 })
        }
    }
}

fn run(command: Command) -> anyhow::Result<Status> {
    match command {
        Command::Norms {
            input,
            s,
            depth,
            out,
        } => norms(input, &s, depth, &out),
        Command::Verify {
            suites,
            seed,
            count,
            out,
        } => {
            let suites = if suites.is_empty() {
                Suite::ALL.to_vec()
            } else {
                suites
            };
            let report = run_suites(&suites, seed, count)?;
            emit(&out, &report, &VERIFY_COLUMNS, report.csv_records())?;
            Ok(Status::from_bool(report.pass()))
        }
        Command::EmbeddingScan {
            checks,
            s,
            seed,
            count,
            distribution,
            sparsity,
            calibration,
            out,
        } => {
            let fixture: CalibrationFixture = match calibration {
                Some(path) => {
                    let text = fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str(&text)
                        .with_context(|| format!("parsing {}", path.display()))?
                }
                None => serde_json::from_str(DEFAULT_CALIBRATION).context("bundled calibration")?,
            };
            let distribution = match distribution {
                DistributionArg::Uniform => Distribution::Uniform,
                DistributionArg::LacunaryTower => Distribution::LacunaryTower,
                DistributionArg::SingleInterval => Distribution::SingleInterval,
            };
            let spec = EnsembleSpec::new(seed, count)
                .with_distribution(distribution)
                .with_sparsity(sparsity);
            let local = local_ensemble(seed, count)
                .with_distribution(distribution)
                .with_sparsity(sparsity);
            let reports = embedding_scan(&checks, &s, spec, local, &fixture)?;
            let rows = reports
                .iter()
                .flat_map(|r| r.verdicts.iter().map(|v| v.csv_record()))
                .collect();
            emit(&out, &reports, &VERDICT_COLUMNS, rows)?;
            Ok(Status::from_bool(reports.iter().all(EnsembleReport::pass)))
        }
        Command::Counterexample {
            family,
            s,
            alpha,
            n,
            out,
        } => {
            let family = match family {
                FamilyArg::Lowreg => Family::LowReg,
                FamilyArg::Critical => Family::Critical,
            };
            let levels: Vec<u32> = n.into_iter().flatten().collect();
            let report = divergence_experiment(&CounterexampleSpec { family, s, alpha }, &levels)?;
            emit(&out, &report, &EXPERIMENT_COLUMNS, report.csv_records())?;
            Ok(Status::from_bool(report.verdict == Verdict::Diverges))
        }
        Command::Calibrate {
            seed,
            count,
            output,
        } => {
            let fixture = CalibrationFixture::generate(seed, count)?;
            let mut text = serde_json::to_string_pretty(&fixture)?;
            text.push('\n');
            write_out(output.as_ref(), text.as_bytes())?;
            Ok(Status::Pass)
        }
    }
}

enum Input {
    Series(HaarSeries),
    Step(StepFunction),
}

fn read_input(path: Option<&PathBuf>) -> anyhow::Result<Input> {
    let (text, name) = match path {
        Some(p) => (
            fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
            p.display().to_string(),
        ),
        None => {
            let mut buf = String::new();
            io::stdin()
                .read_to_string(&mut buf)
                .context("reading stdin")?;
            (buf, String::from("stdin"))
        }
    };
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {name}"))?;
    let is_step = value.get("pieces").is_some() || value.get("base_scale").is_some();
    if is_step {
        let g = serde_json::from_str(&text)
            .with_context(|| format!("parsing {name} as a step function"))?;
        Ok(Input::Step(g))
    } else {
        let f = serde_json::from_str(&text)
            .with_context(|| format!("parsing {name} as a Haar series"))?;
        Ok(Input::Series(f))
    }
}

fn norms(
    input: Option<PathBuf>,
    s_values: &[f64],
    depth: u32,
    out: &Output,
) -> anyhow::Result<Status> {
    let input = read_input(input.as_ref())?;
    let mut reports = Vec::with_capacity(s_values.len());
    for &s in s_values {
        let s = FractionalParameter::new(s)?;
        reports.push(match &input {
            Input::Series(f) => NormReport::of_series(f, s)?,
            Input::Step(g) => NormReport::of_step(g, s, depth)?,
        });
    }
    let rows = reports.iter().map(NormReport::csv_record).collect();
    emit(out, &reports, &NORM_REPORT_COLUMNS, rows)?;
    Ok(Status::Pass)
}

fn embedding_scan(
    kinds: &[CheckKind],
    s_values: &[f64],
    spec: EnsembleSpec,
    local: EnsembleSpec,
    fixture: &CalibrationFixture,
) -> anyhow::Result<Vec<EnsembleReport>> {
    let needs_s = kinds.iter().any(|k| !matches!(k, CheckKind::Bmo));
    if needs_s && s_values.is_empty() {
        bail!("--s is required for every check except bmo");
    }
    let mut reports = Vec::new();
    if kinds.iter().any(|k| matches!(k, CheckKind::Bmo)) {
        reports.push(run_ensemble(&spec, &[Check::Bmo])?);
    }
    for &s in s_values {
        let mut global = Vec::new();
        let mut inside = Vec::new();
        for kind in kinds {
            let check = match kind {
                CheckKind::Bmo => continue,
                CheckKind::Morrey => Check::Morrey { s },
                CheckKind::Gns => Check::Gns { s, bound: None },
                CheckKind::Algebra => Check::Algebra { s, bound: None },
                CheckKind::LocalSquare => Check::LocalSquare {
                    s,
                    interval: LOCAL_INTERVAL,
                    bound: None,
                },
            };
            check.validate()?;
            let check = check.calibrated(&fixture.entries);
            if matches!(check, Check::LocalSquare { .. }) {
                inside.push(check);
            } else {
                global.push(check);
            }
        }
        if !global.is_empty() {
            reports.push(run_ensemble(&spec, &global)?);
        }
        if !inside.is_empty() {
            reports.push(run_ensemble(&local, &inside)?);
        }
    }
    Ok(reports)
}

fn emit<T: Serialize + ?Sized, const W: usize>(
    out: &Output,
    value: &T,
    header: &[&str; W],
    rows: Vec<[String; W]>,
) -> anyhow::Result<()> {
    let bytes = match out.format {
        Format::Json => {
            let mut text = serde_json::to_string_pretty(value)?;
            text.push('\n');
            text.into_bytes()
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(header)?;
            for r in rows {
                w.write_record(&r)?;
            }
            w.into_inner()?
        }
    };
    write_out(out.output.as_ref(), &bytes)
}

fn write_out(path: Option<&PathBuf>, bytes: &[u8]) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_lists() {
        assert_eq!(parse_levels("12").unwrap(), vec![12]);
        assert_eq!(parse_levels("8..11").unwrap(), vec![8, 9, 10, 11]);
        assert_eq!(parse_levels("64..512:64").unwrap().len(), 8);
        assert!(parse_levels("5..3").is_err());
        assert!(parse_levels("1..4:0").is_err());
        assert!(parse_levels("x").is_err());
    }

    #[test]
    fn bundled_calibration_parses() {
        let f: CalibrationFixture = serde_json::from_str(DEFAULT_CALIBRATION).unwrap();
        assert_eq!(f.entries.len(), 9);
    }
}
