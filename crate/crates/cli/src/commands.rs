use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use thiserror::Error;
use whilesem::coinduction::{Abstraction, Certificate, CoinductionError};
use whilesem::derivation::DerivationGraph;
use whilesem::harness::{
    campaign_streams, classify, compare_all, fuzz_campaign, run_semantics, write_counterexamples, GenConfig,
};
use whilesem::parser::{parse_stream, SourceProgram};
use whilesem::rule_dsl::{alpha_equal, count_metrics, parse_rules_named, shipped_text, thread_flags, RuleSet};
use whilesem::small_step::{run_star, SmallConfig};
use whilesem::{Cmd, InputStream, Verdict};

use crate::{CertAction, Command, Common, Format, RulesAction};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments or unreadable input: exit status 2.
    #[error("{0}")]
    Usage(String),
    /// The requested check ran and failed: exit status 1.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Failed(_) => ExitCode::from(1),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_program(path: &Path) -> Result<Cmd> {
    let origin = path.display().to_string();
    SourceProgram::new(read(path)?, origin.clone())
        .parse()
        .map_err(|e| usage(format!("{origin}:{e}")))
}

fn load_input(common: &Common) -> Result<InputStream> {
    match &common.input {
        None => Ok(InputStream::empty()),
        Some(text) => parse_stream(text)
            .map(InputStream::new)
            .map_err(|e| usage(format!("--input: {e}"))),
    }
}

/// A rule file from disk, or a bundled one when no file of that name exists.
fn load_rules(paths: &[PathBuf]) -> Result<RuleSet> {
    let mut merged: Option<RuleSet> = None;
    for path in paths {
        let name = path.display().to_string();
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                let bundled = path.file_name().and_then(|n| n.to_str()).and_then(shipped_text);
                match bundled {
                    Some(t) if !path.exists() => t.to_string(),
                    _ => return Err(usage(format!("{name}: {e}"))),
                }
            }
        };
        let set = parse_rules_named(&text, &name).map_err(usage)?;
        merged = Some(match merged {
            None => set,
            Some(m) => m.merge(set).map_err(usage)?,
        });
    }
    merged.ok_or_else(|| usage("no rule files given"))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, format!("{text}\n")).map_err(|e| usage(format!("{}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn json(value: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}

pub fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run {
            semantics,
            common,
            file,
        } => {
            let program = load_program(&file)?;
            let input = load_input(&common)?;
            let run = run_semantics(semantics, &program, &input, common.fuel);
            let text = match common.format {
                Format::Text => run.verdict.to_string(),
                Format::Json => json(&run),
            };
            emit(common.out.as_deref(), &text)?;
        }
        Command::Trace { common, file } => {
            let program = load_program(&file)?;
            let input = load_input(&common)?;
            let (verdict, trace) = run_star(&SmallConfig::new(program, Default::default(), input), common.fuel);
            let text = match common.format {
                Format::Text => format!("{}{verdict}", trace.to_text()),
                Format::Json => json(&serde_json::json!({ "trace": trace.to_json(), "verdict": verdict })),
            };
            emit(common.out.as_deref(), &text)?;
        }
        Command::Classify {
            abstract_vars,
            system,
            cert,
            common,
            file,
        } => {
            let program = load_program(&file)?;
            let input = load_input(&common)?;
            let abs = Abstraction::new(abstract_vars);
            let verdict = match classify(&program, &input, common.fuel, &abs, system) {
                Ok(v) => v,
                Err(e @ CoinductionError::AbstractionUnsound { .. }) => return Err(usage(e)),
                Err(e) => return Err(CliError::Failed(e.to_string())),
            };
            if let (Some(path), Verdict::DivergesProven { certificate }) = (&cert, &verdict) {
                fs::write(path, json(certificate)).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            }
            let text = match common.format {
                Format::Text => verdict.to_string(),
                Format::Json => json(&verdict),
            };
            emit(common.out.as_deref(), &text)?;
        }
        Command::Compare { common, file } => {
            let program = load_program(&file)?;
            let streams = match (&common.input, program.uses_input()) {
                (None, true) => campaign_streams(&GenConfig {
                    input: true,
                    ..GenConfig::default()
                }),
                _ => vec![load_input(&common)?],
            };
            let report = compare_all(&program, &streams, common.fuel);
            let text = match common.format {
                Format::Text => report.to_string(),
                Format::Json => json(&report),
            };
            emit(common.out.as_deref(), &text)?;
            if !report.agreement {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Fuzz {
            seed,
            count,
            depth,
            with_input,
            exceptions,
            alloc_probability,
            cex_dir,
            common,
        } => {
            let cfg = GenConfig {
                seed,
                max_depth: depth,
                input: with_input,
                exceptions,
                alloc_probability,
                ..GenConfig::default()
            };
            cfg.validate().map_err(usage)?;
            let summary = fuzz_campaign(&cfg, count, common.fuel);
            if let Some(dir) = &cex_dir {
                write_counterexamples(&summary, dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
            }
            let text = match common.format {
                Format::Text => {
                    let classes: Vec<String> = summary.classes.iter().map(|(k, v)| format!("{k}={v}")).collect();
                    let mut t = format!(
                        "programs={} runs={} disagreements={}\nclasses: {}\ncongruence: checked={} anomalies={}",
                        summary.programs,
                        summary.runs,
                        summary.disagreements,
                        classes.join(" "),
                        summary.congruence_checked,
                        summary.congruence_anomalies
                    );
                    for cex in &summary.counterexamples {
                        t.push_str(&format!("\n\n{}", cex.to_whl().trim_end()));
                    }
                    t
                }
                Format::Json => json(&summary),
            };
            emit(common.out.as_deref(), &text)?;
            if !summary.ok() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Rules { action } => return rules(action),
        Command::Cert {
            action: CertAction::Check { file },
        } => {
            let text = read(&file)?;
            let cert = parse_certificate(&text).map_err(|e| usage(format!("{}: {e}", file.display())))?;
            match cert.check() {
                Ok(()) => println!("valid ({cert})"),
                Err(e) => return Err(CliError::Failed(format!("invalid certificate: {e}"))),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// A tagged certificate, or a bare graph or lasso.
fn parse_certificate(text: &str) -> std::result::Result<Certificate, serde_json::Error> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.get("kind").is_some() {
        serde_json::from_value(value)
    } else if value.get("nodes").is_some() {
        serde_json::from_value::<DerivationGraph>(value).map(Certificate::Graph)
    } else {
        serde_json::from_value(value).map(Certificate::Lasso)
    }
}

fn rules(action: RulesAction) -> Result<ExitCode> {
    match action {
        RulesAction::Thread { files, out } => {
            let set = load_rules(&files)?;
            let threaded = thread_flags(&set).map_err(usage)?;
            emit(out.as_deref(), threaded.to_string().trim_end())?;
        }
        RulesAction::Count { files, base, format } => {
            let set = load_rules(&files)?;
            let base = if base.is_empty() {
                None
            } else {
                Some(load_rules(&base)?)
            };
            let metrics = count_metrics(&set, base.as_ref());
            match format {
                Format::Text => println!("{metrics}"),
                Format::Json => println!("{}", json(&metrics)),
            }
        }
        RulesAction::Check { files, against } => {
            let set = load_rules(&files)?;
            if against.is_empty() {
                println!("ok ({} rules)", set.rules.len());
                return Ok(ExitCode::SUCCESS);
            }
            let other = load_rules(&against)?;
            let left = thread_flags(&set).map_err(usage)?;
            let right = thread_flags(&other).map_err(usage)?;
            if !alpha_equal(&left, &right) {
                return Err(CliError::Failed("not alpha-equal".into()));
            }
            println!("alpha-equal");
        }
    }
    Ok(ExitCode::SUCCESS)
}
