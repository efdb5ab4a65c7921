//! `amscheck` command-line driver. Exit codes: 0 success, 1 findings or a
//! detection, 2 usage or configuration error.

mod args;
pub mod bench;

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use amscheck::detect::{detect, DetectConfig, DetectionReport};
use amscheck::inject::{inject_bugs, inject_rule, inject_trojan, scramble, BugPlan, BugTruth, InjectionKind, InjectionRecord};
use amscheck::lint::{lint_and_fix, lint_text, refine_ruleset, BugReport, Ruleset, Verdict};
use amscheck::metrics::{bug_metrics, trojan_metrics};
use amscheck::netlist::parse_netlist;
use amscheck::simlog::{gen_log, parse_log, write_log, BehaviorModel, CircuitSpec, Sweep};
use amscheck_llm as llm;
use anyhow::{anyhow, bail, Context};
use clap::Parser;
use serde::Deserialize;

use args::{Cli, Command, LlmCommand, LlmCommon};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FOUND: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Parse `argv` (program name first) and run the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("amscheck: {e:#}");
            EXIT_USAGE
        }
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(text: &str, out: Option<&PathBuf>) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

fn load_rules(path: Option<&PathBuf>) -> anyhow::Result<Ruleset> {
    let Some(p) = path else { return Ok(Ruleset::default()) };
    let text = read(p)?;
    let set = if p.extension().is_some_and(|e| e == "json") {
        Ruleset::from_json(&text)
    } else {
        Ruleset::from_toml(&text)
    };
    set.with_context(|| format!("loading rules from {}", p.display()))
}

pub fn parse_spec(s: &str) -> anyhow::Result<CircuitSpec> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| anyhow!("spec must be lo:hi, got `{s}`"))?;
    Ok(CircuitSpec::new(lo.trim().parse()?, hi.trim().parse()?)?)
}

fn parse_sweep(s: &str) -> anyhow::Result<Sweep> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, step] = parts[..] else { bail!("sweep must be lo:hi:step, got `{s}`") };
    Ok(Sweep { lo: lo.parse()?, hi: hi.parse()?, step: step.parse()? })
}

fn file_stem(p: &Path) -> String {
    p.file_stem().map_or_else(|| "circuit".into(), |s| s.to_string_lossy().into_owned())
}

fn found(any: bool) -> i32 {
    if any {
        EXIT_FOUND
    } else {
        EXIT_OK
    }
}

#[derive(Deserialize)]
struct VerdictEntry {
    rule_id: String,
    line: usize,
    verdict: Verdict,
}

fn dispatch(cmd: Command) -> anyhow::Result<i32> {
    match cmd {
        Command::Lint { netlist, rules, out } => {
            let report = lint_text(&read(&netlist)?, &load_rules(rules.as_ref())?)?;
            emit(&report.to_json(), out.out.as_ref())?;
            Ok(found(!report.is_clean()))
        }
        Command::Fix { netlist, rules, write, out } => {
            let text = read(&netlist)?;
            let rules = load_rules(rules.as_ref())?;
            let (report, outcome) = lint_and_fix(&text, &rules)?;
            let after = lint_text(&outcome.text, &rules)?;
            if let Some(w) = &write {
                fs::write(w, &outcome.text)?;
            }
            let summary = serde_json::json!({
                "report": report,
                "applied": outcome.applied,
                "skipped": outcome.skipped,
                "conflicts": outcome.conflicts,
                "remaining": after.findings,
            });
            emit(&serde_json::to_string_pretty(&summary)?, out.out.as_ref())?;
            Ok(found(!after.is_clean()))
        }
        Command::InjectBugs { netlist, easy, medium, difficult, rule, seed, write, out } => {
            let n = parse_netlist(&read(&netlist)?).0;
            let (text, rec) = match rule {
                Some(id) => {
                    let (text, truth) = inject_rule(&n, &id, seed)?;
                    let rec = InjectionRecord {
                        kind: InjectionKind::Bugs,
                        label: format!("{}_{}", file_stem(&netlist), id),
                        bug_truth: vec![truth],
                        trojan_components: BTreeSet::new(),
                        impacted_nodes: BTreeSet::new(),
                        wiring: None,
                    };
                    (text, rec)
                }
                None => inject_bugs(&n, &BugPlan { easy, medium, difficult, seed })?,
            };
            write_or_print(&text, write.as_ref(), &rec.to_json(), out.out.as_ref())?;
            Ok(EXIT_OK)
        }
        Command::InjectTrojan { netlist, payload, trigger, circuit, seed, scramble: scr, write, out } => {
            let n = parse_netlist(&read(&netlist)?).0;
            let name = circuit.unwrap_or_else(|| file_stem(&netlist));
            let (mut text, mut rec) = inject_trojan(&n, &name, &payload, &trigger, seed)?;
            if scr {
                let (t, r, _) = scramble(&text, &rec, seed)?;
                text = t;
                rec = r;
            }
            write_or_print(&text, write.as_ref(), &rec.to_json(), out.out.as_ref())?;
            Ok(EXIT_OK)
        }
        Command::GenLog { netlist, truth, spec, sweep, model, seed, out } => {
            let n = parse_netlist(&read(&netlist)?).0;
            let rec = truth.map(|t| -> anyhow::Result<InjectionRecord> { Ok(InjectionRecord::from_json(&read(&t)?)?) }).transpose()?;
            let mut m: BehaviorModel = match model {
                Some(p) => toml::from_str(&read(&p)?).context("parsing behaviour model")?,
                None => BehaviorModel::default(),
            };
            if let Some(s) = seed {
                m.seed = s;
            }
            let log = gen_log(&n, rec.as_ref(), &m, &parse_sweep(&sweep)?, &parse_spec(&spec)?)?;
            emit(&write_log(&log), out.as_ref())?;
            Ok(EXIT_OK)
        }
        Command::Detect { netlist, log, spec, mode, config, out } => {
            let n = parse_netlist(&read(&netlist)?).0;
            let log = parse_log(&read(&log)?)?;
            let mut cfg: DetectConfig = match config {
                Some(p) => toml::from_str(&read(&p)?).context("parsing detector config")?,
                None => DetectConfig::default(),
            };
            if let Some(m) = mode {
                cfg.combine_mode = m.into();
            }
            let report = detect(&n, &log, &parse_spec(&spec)?, &cfg)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            emit(&report.to_json(), out.out.as_ref())?;
            Ok(found(report.trojan_detected))
        }
        Command::Score { truth, report, fixed, clean, out } => {
            let rec = InjectionRecord::from_json(&read(&truth)?)?;
            let summary = match rec.kind {
                InjectionKind::Trojan => trojan_metrics(&rec, &DetectionReport::from_json(&read(&report)?)?)?,
                InjectionKind::Bugs => {
                    let before = BugReport::from_json(&read(&report)?)?;
                    let resolved: BTreeSet<BugTruth> = match fixed {
                        Some(p) => {
                            let after = BugReport::from_json(&read(&p)?)?;
                            rec.bug_truth
                                .iter()
                                .filter(|t| !after.findings.iter().any(|f| f.rule_id == t.rule_id))
                                .cloned()
                                .collect()
                        }
                        None => BTreeSet::new(),
                    };
                    let clean_findings = match clean {
                        Some(p) => BugReport::from_json(&read(&p)?)?.findings,
                        None => Vec::new(),
                    };
                    bug_metrics(&rec, &before, &resolved, &clean_findings)?
                }
            };
            emit(&serde_json::to_string_pretty(&summary)?, out.out.as_ref())?;
            Ok(EXIT_OK)
        }
        Command::Bench { config, out } => {
            let mut cfg = bench::BenchRunConfig::load(&config)?;
            if out.is_some() {
                cfg.output_dir = out;
            }
            let result = bench::run_bench(&cfg)?;
            if let Some(dir) = &cfg.output_dir {
                result.write_to(dir)?;
            }
            for c in result.cases.iter().filter(|c| c.error.is_some()) {
                eprintln!("case {} failed: {}", c.label, c.error.as_deref().unwrap_or(""));
            }
            print!("{}", result.to_csv());
            Ok(EXIT_OK)
        }
        Command::Refine { netlist, rules, verdicts, out } => {
            let rules = load_rules(rules.as_ref())?;
            let report = lint_text(&read(&netlist)?, &rules)?;
            let feedback: Vec<_> = match verdicts {
                Some(p) => {
                    let entries: Vec<VerdictEntry> = serde_json::from_str(&read(&p)?)?;
                    report
                        .findings
                        .iter()
                        .filter_map(|f| {
                            entries
                                .iter()
                                .find(|e| e.rule_id == f.rule_id && e.line == f.line_no)
                                .map(|e| (f.clone(), e.verdict))
                        })
                        .collect()
                }
                None => report.findings.iter().map(|f| (f.clone(), Verdict::FalsePositive)).collect(),
            };
            let refined = refine_ruleset(&rules, &feedback);
            emit(&refined.to_toml(), out.as_ref())?;
            Ok(EXIT_OK)
        }
        Command::Llm(sub) => run_llm(sub),
    }
}

fn write_or_print(netlist: &str, write: Option<&PathBuf>, record: &str, out: Option<&PathBuf>) -> anyhow::Result<()> {
    match write {
        Some(w) => {
            fs::write(w, netlist)?;
            emit(record, out)
        }
        None => {
            // Netlist to stdout; the record needs somewhere else to go.
            let out = out.ok_or_else(|| anyhow!("--out is required when the netlist goes to stdout"))?;
            fs::write(out, record)?;
            emit(netlist, None)
        }
    }
}

fn answer(prompt: &str, common: &LlmCommon) -> anyhow::Result<Option<String>> {
    if let Some(dir) = &common.save_transcripts {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("prompt.txt"), prompt)?;
    }
    if common.prompt_only {
        emit(prompt, common.out.out.as_ref())?;
        return Ok(None);
    }
    let text = match &common.response {
        Some(p) => read(p)?,
        None => {
            let cfg: llm::EndpointConfig = match &common.endpoint {
                Some(p) => toml::from_str(&read(p)?).context("parsing endpoint config")?,
                None => llm::EndpointConfig::default(),
            };
            llm::complete(prompt, &cfg)?
        }
    };
    if let Some(dir) = &common.save_transcripts {
        fs::write(dir.join("response.txt"), &text)?;
    }
    Ok(Some(text))
}

fn run_llm(cmd: LlmCommand) -> anyhow::Result<i32> {
    match cmd {
        LlmCommand::Lint { netlist, rules, common } => {
            let text = read(&netlist)?;
            let prompt = llm::build_lint_prompt(&load_rules(rules.as_ref())?, &text);
            let Some(reply) = answer(&prompt, &common)? else { return Ok(EXIT_OK) };
            let parsed = llm::parse_bug_response(&reply);
            emit(&serde_json::to_string_pretty(&parsed)?, common.out.out.as_ref())?;
            Ok(found(!parsed.claims.is_empty()))
        }
        LlmCommand::Trojan { netlist, log, spec, mode, examples, budget, common } => {
            let text = read(&netlist)?;
            let n = parse_netlist(&text).0;
            let log_text = read(&log)?;
            let parsed_log = parse_log(&log_text)?;
            let examples: Vec<llm::FewShot> = match examples {
                Some(p) => serde_json::from_str(&read(&p)?)?,
                None => Vec::new(),
            };
            let cfg = DetectConfig { combine_mode: mode.into(), ..Default::default() };
            let query = llm::TrojanQuery {
                netlist: text,
                log: log_text,
                spec: parse_spec(&spec)?,
                output_node: n.output_node().unwrap_or(parsed_log.output_node),
            };
            let prompt = llm::build_trojan_prompt(&cfg, &examples, &query, budget)?;
            let Some(reply) = answer(&prompt, &common)? else { return Ok(EXIT_OK) };
            let components = n.all_elements().map(|e| e.name.clone()).collect();
            let parsed = llm::parse_trojan_response(&reply, &n.nodes(), &components);
            let report = parsed.to_report();
            let out = serde_json::json!({ "report": report, "residue": parsed.residue });
            emit(&serde_json::to_string_pretty(&out)?, common.out.out.as_ref())?;
            Ok(found(report.trojan_detected))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_strings() {
        let s = parse_spec("0.6:1.2").unwrap();
        assert_eq!((s.v_out_min, s.v_out_max), (0.6, 1.2));
        assert!(parse_spec("1.2:0.6").is_err());
        assert!(parse_spec("0.6").is_err());
        assert!(parse_spec("a:b").is_err());
    }

    #[test]
    fn sweep_strings() {
        assert_eq!(parse_sweep("0:1.8:0.05").unwrap(), Sweep::default());
        assert!(parse_sweep("0:1.8").is_err());
        assert!(parse_sweep("0:x:0.1").is_err());
    }
}
